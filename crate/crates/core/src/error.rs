use thiserror::Error;

/// Errors surfaced by field evaluation and structure construction.
#[derive(Debug, Error)]
pub enum GeoError {
    #[error("jet order {0} exceeds the supported maximum of 3")]
    JetOrderExceeded(u8),
    #[error("point has dimension {got}, chart has dimension {want}")]
    PointDimension { got: usize, want: usize },
    #[error("point lies outside the chart domain")]
    OutsideDomain,
    #[error("fields live on different charts ({0} vs {1})")]
    ChartMismatch(String, String),
    #[error("form degree {got} invalid here (expected {want})")]
    DegreeMismatch { got: usize, want: usize },
    #[error("exterior derivative of a top-degree form is rejected (degree {0} on an {0}-dimensional chart)")]
    TopDegree(usize),
    #[error("interior product of a 0-form is undefined")]
    ZeroDegreeContraction,
    #[error("metric degenerate at a sampled point (pivot {0:.3e})")]
    DegenerateMetric(f64),
    #[error("sphere parameter (a,b,c) is not unit: |.|^2 = {0}")]
    NonUnitSphereParameter(f64),
    #[error("matrix inverse only implemented up to dimension 4 (got {0}); supply a closed-form inverse")]
    InverseTooLarge(usize),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, GeoError>;
