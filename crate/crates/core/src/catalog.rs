//! Built-in example structures with known verdicts, plus controlled
//! perturbations that each break one targeted hypothesis.

use nalgebra::DMatrix;

use crate::chart::Chart;
use crate::connections::{generalized_bismut, GConnection};
use crate::courant::conjugate_endo;
use crate::error::{GeoError, Result};
use crate::expr::{norm2, EvalCtx, ScalarField};
use crate::field::MatrixField;
use crate::forms::KForm;
use crate::parse::parse_expr;
use crate::report::CustomStructure;
use crate::structures::{
    block_diag_structure, quaternion_left, quaternion_right, GKQuadruple, GeneralizedMetric,
    QuatFrame, WhichGcs,
};

/// Everything the checks need about one example: chart, generalized metric,
/// twist, classical bihermitian triples, the generalized frame and the
/// connection driving the twistor construction.
#[derive(Debug, Clone)]
pub struct StructureBundle {
    pub id: String,
    pub chart: Chart,
    pub metric: GeneralizedMetric,
    pub h: KForm,
    /// (left triple, right triple) of almost complex structures on TM.
    pub classical: Option<([MatrixField; 3], [MatrixField; 3])>,
    pub frame: Option<QuatFrame>,
    pub connection: GConnection,
    /// Check names this entry is expected to fail (empty for positives).
    pub expected_failures: Vec<String>,
}

impl StructureBundle {
    /// Quick frame sanity on load: quaternion relations at one point.
    fn self_validate(&self) -> Result<()> {
        if let Some(frame) = &self.frame {
            let p = vec![1.1; self.chart.dim()];
            let mut ctx = EvalCtx::new(self.chart.dim(), &p);
            let i = frame.i.eval(&mut ctx)?;
            let j = frame.j.eval(&mut ctx)?;
            let k = frame.k.eval(&mut ctx)?;
            let n = i.nrows();
            let scale = 1.0 + i.amax().max(j.amax()).max(k.amax());
            let r1 = (&i * &j - &k).amax() / scale;
            let r2 = (&j * &i + &k).amax() / scale;
            let r3 = (&i * &i + DMatrix::identity(n, n)).amax() / scale;
            if r1.max(r2).max(r3) > 1e-9 {
                return Err(GeoError::Invalid(format!(
                    "frame fails quaternion relations on load ({:.3e})",
                    r1.max(r2).max(r3)
                )));
            }
        }
        Ok(())
    }
}

fn const_triple(mats: &[DMatrix<f64>; 3], n: usize) -> [MatrixField; 3] {
    [
        MatrixField::from_const(&block_diag_structure(&mats[0], n)),
        MatrixField::from_const(&block_diag_structure(&mats[1], n)),
        MatrixField::from_const(&block_diag_structure(&mats[2], n)),
    ]
}

/// Build the generalized frame 𝓘,𝓙,𝓚 from bihermitian triples via the
/// quadruple block construction.
pub fn frame_from_triples(
    metric: &GeneralizedMetric,
    left: &[MatrixField; 3],
    right: &[MatrixField; 3],
) -> QuatFrame {
    let build = |idx: usize| {
        GKQuadruple::new(metric.clone(), left[idx].clone(), right[idx].clone())
            .gcs_block_route(WhichGcs::First)
    };
    QuatFrame { i: build(0), j: build(1), k: build(2) }
}

/// Flat hyperkähler space R^{4n}: g = δ, b = 0, h = 0, constant quaternionic
/// structures, flat generalized Bismut connection.
pub fn flat_hyperkahler(n: usize) -> Result<StructureBundle> {
    let m = 4 * n;
    let chart = Chart::centered(&format!("flat{m}"), m, 1.5, 0.0);
    let g = MatrixField::identity(m);
    let metric = GeneralizedMetric::new(chart.clone(), g, KForm::zero(m, 2), Some(MatrixField::identity(m)))?;
    let h = KForm::zero(m, 3);
    let left = const_triple(&quaternion_left(), n);
    let frame = frame_from_triples(&metric, &left, &left);
    let connection = generalized_bismut(&metric, &h)?;
    let bundle = StructureBundle {
        id: format!("flat{m}"),
        chart,
        metric,
        h,
        classical: Some((left.clone(), left)),
        frame: Some(frame),
        connection,
        expected_failures: vec![],
    };
    bundle.self_validate()?;
    Ok(bundle)
}

/// The quaternionic Hopf chart R^4 \ {0}: g = δ/|x|², left and right
/// quaternionic structures, twist h = I₊ dω_{I₊}.
pub fn hopf_hkt() -> Result<StructureBundle> {
    let chart = Chart::centered("hopf", 4, 2.0, 0.45);
    let r2 = norm2(4);
    let g = MatrixField::from_fn(4, 4, |r, c| if r == c { r2.recip() } else { ScalarField::zero() });
    let g_inv = MatrixField::from_fn(4, 4, |r, c| if r == c { r2.clone() } else { ScalarField::zero() });
    let metric = GeneralizedMetric::new(chart.clone(), g, KForm::zero(4, 2), Some(g_inv))?;
    let left = const_triple(&quaternion_left(), 1);
    let right = const_triple(&quaternion_right(), 1);
    let omega = crate::structures::hermitian_form(&chart, &metric.g, &left[0])?;
    let h = omega.d()?.apply_endo(&left[0]);
    let frame = frame_from_triples(&metric, &left, &right);
    let connection = generalized_bismut(&metric, &h)?;
    let bundle = StructureBundle {
        id: "hopf".into(),
        chart,
        metric,
        h,
        classical: Some((left, right)),
        frame: Some(frame),
        connection,
        expected_failures: vec![],
    };
    bundle.self_validate()?;
    Ok(bundle)
}

/// Flat metric with a constant nonzero closed twist: a connection-algebra
/// example (its structure chain h = I dω is deliberately broken).
pub fn flat_with_h(c: f64) -> Result<StructureBundle> {
    let base = flat_hyperkahler(1)?;
    let h = KForm::monomial(4, &[0, 1, 2], ScalarField::constant(c));
    let connection = generalized_bismut(&base.metric, &h)?;
    Ok(StructureBundle {
        id: "flat4+h".into(),
        h,
        connection,
        expected_failures: vec!["ghk".into(), "gk".into()],
        ..base
    })
}

#[derive(Debug, Clone)]
pub enum Perturbation {
    /// Shear the connection by the so(3) term λ(X)·𝓘 with λ = ½θ·dx¹; the
    /// resulting connection form has α = θ dx¹, dα ≠ 0 for nonconstant θ.
    FrameRotation { theta: ScalarField },
    /// Conformal bump g ↦ (1 + ε x₁²) g. Keeps the twistor construction
    /// applicable (Levi-Civita preserves Λ²₊) but breaks the h-chain.
    MetricBump { eps: f64 },
    /// Shift b by a non-closed 2-form, compensating the twist so the
    /// structure stays generalized hyperkähler: b' = b + β, h' = h − dβ.
    BShift { beta: KForm },
}

pub fn perturb(base: &StructureBundle, kind: Perturbation) -> Result<StructureBundle> {
    match kind {
        Perturbation::FrameRotation { theta } => {
            let frame = base
                .frame
                .as_ref()
                .ok_or_else(|| GeoError::Invalid("frameRotation needs a frame".into()))?;
            let lam = &theta * &ScalarField::constant(0.5);
            let mut connection = base.connection.clone();
            connection.coeffs[0] = connection.coeffs[0].add(&frame.i.scale(&lam));
            Ok(StructureBundle {
                id: format!("{}+frameRotation", base.id),
                connection,
                expected_failures: vec!["theoremA".into(), "c1".into(), "c2".into()],
                ..base.clone()
            })
        }
        Perturbation::MetricBump { eps } => {
            if eps == 0.0 {
                return Ok(base.clone());
            }
            let m = base.chart.dim();
            let factor = ScalarField::one() + ScalarField::coord(0).powi(2) * ScalarField::constant(eps);
            let g = base.metric.g.scale(&factor);
            let g_inv = base.metric.g_inv.scale(&factor.recip());
            let metric = GeneralizedMetric::new(base.chart.clone(), g, base.metric.b.clone(), Some(g_inv))?;
            let frame = match &base.classical {
                Some((l, r)) => Some(frame_from_triples(&metric, l, r)),
                None => None,
            };
            let connection = generalized_bismut(&metric, &base.h)?;
            let _ = m;
            Ok(StructureBundle {
                id: format!("{}+metricBump", base.id),
                metric,
                frame,
                connection,
                expected_failures: vec!["ghk".into(), "gk".into()],
                ..base.clone()
            })
        }
        Perturbation::BShift { beta } => {
            let b = base.metric.b.add(&beta);
            let h = base.h.sub(&beta.d()?);
            let metric =
                GeneralizedMetric::new(base.chart.clone(), base.metric.g.clone(), b, Some(base.metric.g_inv.clone()))?;
            let frame = match &base.classical {
                Some((l, r)) => Some(frame_from_triples(&metric, l, r)),
                None => None,
            };
            let connection = generalized_bismut(&metric, &h)?;
            Ok(StructureBundle {
                id: format!("{}+bShift", base.id),
                metric,
                h,
                frame,
                connection,
                expected_failures: vec!["b-automorphism".into()],
                ..base.clone()
            })
        }
    }
}

/// Stable string identifiers exposed by the CLI.
pub fn catalog_ids() -> Vec<&'static str> {
    vec!["flat4", "flat8", "hopf", "flat4+h", "flat4+frameRotation", "flat4+metricBump", "flat4+bShift"]
}

pub fn by_id(id: &str) -> Result<StructureBundle> {
    match id {
        "flat4" => flat_hyperkahler(1),
        "flat8" => flat_hyperkahler(2),
        "hopf" => hopf_hkt(),
        "flat4+h" => flat_with_h(0.8),
        "flat4+frameRotation" => perturb(
            &flat_hyperkahler(1)?,
            Perturbation::FrameRotation { theta: ScalarField::coord(0) * ScalarField::coord(1) },
        ),
        "flat4+metricBump" => perturb(&flat_hyperkahler(1)?, Perturbation::MetricBump { eps: 0.4 }),
        "flat4+bShift" => perturb(
            &flat_hyperkahler(1)?,
            Perturbation::BShift {
                beta: KForm::monomial(4, &[0, 2], ScalarField::coord(1)),
            },
        ),
        other => Err(GeoError::Invalid(format!("unknown structure id '{other}'"))),
    }
}

/// Build a bundle from the CLI's inline polynomial/rational schema.
pub fn from_custom(c: &CustomStructure) -> Result<StructureBundle> {
    let m = c.dim;
    if m == 0 || m % 2 != 0 {
        return Err(GeoError::Invalid("custom structure dimension must be even and positive".into()));
    }
    let chart = Chart::centered(&c.id, m, c.box_half, c.excluded_radius);
    let parse_matrix = |rows: &Vec<Vec<String>>, what: &str| -> Result<MatrixField> {
        if rows.len() != m || rows.iter().any(|r| r.len() != m) {
            return Err(GeoError::Invalid(format!("{what} must be a {m}x{m} matrix")));
        }
        let mut out = MatrixField::zeros(m, m);
        for (r, row) in rows.iter().enumerate() {
            for (cc, src) in row.iter().enumerate() {
                *out.at_mut(r, cc) = parse_expr(src, m)?;
            }
        }
        Ok(out)
    };
    let g = parse_matrix(&c.g, "g")?;
    let b = match &c.b {
        None => KForm::zero(m, 2),
        Some(rows) => {
            let mat = parse_matrix(rows, "b")?;
            // interpret entries as b(e_i, e_j); antisymmetrize defensively is
            // not done — reject asymmetric input instead
            KForm::from_fn(m, 2, |t| mat.at(t[0], t[1]).clone())
        }
    };
    let h = match &c.h {
        None => KForm::zero(m, 3),
        Some(map) => {
            let mut form = KForm::zero(m, 3);
            for (key, src) in map {
                let idx: Vec<usize> = key
                    .chars()
                    .map(|ch| {
                        ch.to_digit(10)
                            .map(|d| d as usize)
                            .filter(|&d| d >= 1 && d <= m)
                            .map(|d| d - 1)
                            .ok_or_else(|| GeoError::Invalid(format!("bad h key '{key}'")))
                    })
                    .collect::<Result<_>>()?;
                if idx.len() != 3 {
                    return Err(GeoError::Invalid(format!("h key '{key}' must have 3 digits")));
                }
                form = form.add(&KForm::monomial(m, &idx, parse_expr(src, m)?));
            }
            form
        }
    };
    let j_plus = parse_matrix(&c.j_plus, "jPlus")?;
    let j_minus = parse_matrix(&c.j_minus, "jMinus")?;
    let metric = GeneralizedMetric::new(chart.clone(), g, b, None)?;
    let connection = generalized_bismut(&metric, &h)?;
    // a single generalized complex pair, exposed as the 𝓘 of a frame-less bundle
    Ok(StructureBundle {
        id: c.id.clone(),
        chart,
        metric,
        h,
        classical: Some((
            [j_plus.clone(), j_plus.clone(), j_plus.clone()],
            [j_minus.clone(), j_minus.clone(), j_minus.clone()],
        )),
        frame: None,
        connection,
        expected_failures: vec![],
    })
}

/// The e^b-conjugated frame used when a bundle's b is nonzero and its frame
/// was built from the quadruple construction (already b-aware); exposed for
/// tests.
pub fn conjugated_frame(frame: &QuatFrame, b: &KForm) -> QuatFrame {
    QuatFrame {
        i: conjugate_endo(b, &frame.i),
        j: conjugate_endo(b, &frame.j),
        k: conjugate_endo(b, &frame.k),
    }
}
