//! Coordinate charts: axis-aligned sample boxes with an optional excluded
//! ball around the origin (for punctured charts like R^4 \ {0}).

use rand::Rng;

use crate::error::{GeoError, Result};

#[derive(Debug, Clone)]
pub struct Chart {
    dim: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    /// Points with |x| < excluded_radius are never sampled and are outside
    /// the domain.
    excluded_radius: f64,
    label: String,
}

impl Chart {
    pub fn new_box(label: &str, lo: Vec<f64>, hi: Vec<f64>, excluded_radius: f64) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(GeoError::Invalid("chart box bounds mismatch".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
            return Err(GeoError::Invalid("chart box has nonpositive volume".into()));
        }
        Ok(Chart { dim: lo.len(), lo, hi, excluded_radius, label: label.to_string() })
    }

    /// Symmetric box [-half, half]^dim.
    pub fn centered(label: &str, dim: usize, half: f64, excluded_radius: f64) -> Self {
        Chart::new_box(label, vec![-half; dim], vec![half; dim], excluded_radius).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn excluded_radius(&self) -> f64 {
        self.excluded_radius
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim
            && p.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (a, b))| x >= a && x <= b)
            && (self.excluded_radius == 0.0
                || p.iter().map(|x| x * x).sum::<f64>() > self.excluded_radius * self.excluded_radius)
    }

    pub fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim {
            return Err(GeoError::PointDimension { got: p.len(), want: self.dim });
        }
        if !self.contains(p) {
            return Err(GeoError::OutsideDomain);
        }
        Ok(())
    }

    pub fn same_chart(&self, other: &Chart) -> Result<()> {
        if self.label != other.label || self.dim != other.dim {
            return Err(GeoError::ChartMismatch(self.label.clone(), other.label.clone()));
        }
        Ok(())
    }

    /// Draw one point uniformly from the box, rejecting the excluded ball.
    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        loop {
            let p: Vec<f64> =
                self.lo.iter().zip(&self.hi).map(|(a, b)| rng.gen_range(*a..*b)).collect();
            if self.excluded_radius == 0.0
                || p.iter().map(|x| x * x).sum::<f64>() > self.excluded_radius * self.excluded_radius
            {
                return p;
            }
        }
    }
}
