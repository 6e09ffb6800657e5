//! Generalized metrics, generalized (almost) complex structures, generalized
//! Kähler quadruples and quaternionic frames on TM ⊕ T*M.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::chart::Chart;
use crate::error::{GeoError, Result};
use crate::expr::{EvalCtx, ScalarField};
use crate::field::MatrixField;
use crate::forms::KForm;

/// The constant Gram matrix of the coordinate frame {∂_i, dx^i} is
/// ½·[[0,I],[I,0]]; adjoints only need the unscaled block swap.
pub fn pairing_adjoint(a: &MatrixField) -> MatrixField {
    let m = a.rows() / 2;
    let a11 = a.block(0, 0, m, m);
    let a12 = a.block(0, m, m, m);
    let a21 = a.block(m, 0, m, m);
    let a22 = a.block(m, m, m, m);
    MatrixField::from_blocks(&a22.transpose(), &a12.transpose(), &a21.transpose(), &a11.transpose())
}

/// Numeric version of [`pairing_adjoint`].
pub fn pairing_adjoint_mat(a: &DMatrix<f64>) -> DMatrix<f64> {
    let m = a.nrows() / 2;
    let mut out = DMatrix::zeros(2 * m, 2 * m);
    out.view_mut((0, 0), (m, m)).copy_from(&a.view((m, m), (m, m)).transpose());
    out.view_mut((0, m), (m, m)).copy_from(&a.view((0, m), (m, m)).transpose());
    out.view_mut((m, 0), (m, m)).copy_from(&a.view((m, 0), (m, m)).transpose());
    out.view_mut((m, m), (m, m)).copy_from(&a.view((0, 0), (m, m)).transpose());
    out
}

/// A generalized metric G = (g, b) with its derived operators.
#[derive(Debug, Clone)]
pub struct GeneralizedMetric {
    pub chart: Chart,
    pub g: MatrixField,
    pub g_inv: MatrixField,
    pub b: KForm,
    /// G = e^b [[0,g⁻¹],[g,0]] e^{−b} on TM ⊕ T*M.
    pub big_g: MatrixField,
    pub p_plus: MatrixField,
    pub p_minus: MatrixField,
    /// π_±^{-1}: TM → C_±, X ↦ X + (b±g)X, as a 2m×m matrix field.
    pub pi_inv_plus: MatrixField,
    pub pi_inv_minus: MatrixField,
}

impl GeneralizedMetric {
    /// Build the derived operators. `g_inv` may be supplied in closed form
    /// (required for dim > 4); g is checked positive definite at a few
    /// deterministic sample points.
    pub fn new(chart: Chart, g: MatrixField, b: KForm, g_inv: Option<MatrixField>) -> Result<Self> {
        let m = chart.dim();
        assert_eq!(g.rows(), m);
        assert_eq!(b.degree(), 2);
        let g_inv = match g_inv {
            Some(gi) => gi,
            None => g.inverse()?,
        };
        // positive definiteness spot check
        let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
        for _ in 0..8 {
            let p = chart.sample(&mut rng);
            let gm = g.eval_at(m, &p)?;
            let eig = gm.symmetric_eigen();
            let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
            if min <= 1e-10 {
                return Err(GeoError::DegenerateMetric(min));
            }
        }

        let bh = b.two_form_hat();
        let id = MatrixField::identity(m);
        let zero = MatrixField::zeros(m, m);
        // e^b [[0, g⁻¹],[g, 0]] e^{-b}
        let core = MatrixField::from_blocks(&zero, &g_inv, &g, &zero);
        let eb = MatrixField::from_blocks(&id, &zero, &bh, &id);
        let emb = MatrixField::from_blocks(&id, &zero, &bh.neg(), &id);
        let big_g = eb.matmul(&core).matmul(&emb);

        let pi_inv_plus = stack_pi_inv(&id, &bh.add(&g));
        let pi_inv_minus = stack_pi_inv(&id, &bh.sub(&g));
        // X+ξ = A + (b+g)A + B + (b−g)B with A/B = ½(X ± g⁻¹(ξ − b̂X))
        let half = ScalarField::constant(0.5);
        let proj_plus = MatrixField::from_fn(m, 2 * m, |r, c| {
            if c < m {
                let gb = g_inv.matmul(&bh);
                (if r == c { ScalarField::one() } else { ScalarField::zero() } - gb.at(r, c)).scale_half()
            } else {
                g_inv.at(r, c - m).clone() * &half
            }
        });
        let proj_minus = MatrixField::from_fn(m, 2 * m, |r, c| {
            if c < m {
                let gb = g_inv.matmul(&bh);
                (if r == c { ScalarField::one() } else { ScalarField::zero() } + gb.at(r, c)).scale_half()
            } else {
                -(g_inv.at(r, c - m)) * &half
            }
        });
        let p_plus = pi_inv_plus.matmul(&proj_plus);
        let p_minus = pi_inv_minus.matmul(&proj_minus);

        Ok(GeneralizedMetric {
            chart,
            g,
            g_inv,
            b,
            big_g,
            p_plus,
            p_minus,
            pi_inv_plus,
            pi_inv_minus,
        })
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }
}

trait ScaleHalf {
    fn scale_half(&self) -> ScalarField;
}
impl ScaleHalf for ScalarField {
    fn scale_half(&self) -> ScalarField {
        self * &ScalarField::constant(0.5)
    }
}

fn stack_pi_inv(top: &MatrixField, bottom: &MatrixField) -> MatrixField {
    let m = top.rows();
    MatrixField::from_fn(2 * m, m, |r, c| {
        if r < m {
            top.at(r, c).clone()
        } else {
            bottom.at(r - m, c).clone()
        }
    })
}

/// ω(X,Y) = g(JX,Y) as a 2-form. Errors if J is not g-compatible at a few
/// deterministic sample points (which would break antisymmetry).
pub fn hermitian_form(chart: &Chart, g: &MatrixField, j: &MatrixField) -> Result<KForm> {
    let m = chart.dim();
    // ω_{ij} = (Jᵀ g)_{ij}; check antisymmetry numerically
    let w = j.transpose().matmul(g);
    let mut rng = ChaCha8Rng::seed_from_u64(0xFACADE);
    for _ in 0..4 {
        let p = chart.sample(&mut rng);
        let wm = w.eval_at(m, &p)?;
        let sym = (&wm + wm.transpose()).amax();
        if sym > 1e-9 * (1.0 + wm.amax()) {
            return Err(GeoError::Invalid(format!(
                "J is not g-hermitian (symmetric part {sym:.3e})"
            )));
        }
    }
    Ok(KForm::from_fn(m, 2, |t| w.at(t[0], t[1]).clone()))
}

/// A generalized Kähler quadruple (g, b, J+, J−).
#[derive(Debug, Clone)]
pub struct GKQuadruple {
    pub metric: GeneralizedMetric,
    pub j_plus: MatrixField,
    pub j_minus: MatrixField,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WhichGcs {
    First,
    Second,
}

impl GKQuadruple {
    pub fn new(metric: GeneralizedMetric, j_plus: MatrixField, j_minus: MatrixField) -> Self {
        GKQuadruple { metric, j_plus, j_minus }
    }

    /// Projector route: 𝒥₁ = π₊⁻¹ J⁺ π P⁺ + π₋⁻¹ J⁻ π P⁻ (𝒥₂ flips the sign
    /// of the C⁻ term).
    pub fn gcs_projector_route(&self, which: WhichGcs) -> MatrixField {
        let m = self.metric.dim();
        let proj = MatrixField::from_fn(m, 2 * m, |r, c| {
            if r == c {
                ScalarField::one()
            } else {
                ScalarField::zero()
            }
        });
        let plus = self
            .metric
            .pi_inv_plus
            .matmul(&self.j_plus)
            .matmul(&proj)
            .matmul(&self.metric.p_plus);
        let minus = self
            .metric
            .pi_inv_minus
            .matmul(&self.j_minus)
            .matmul(&proj)
            .matmul(&self.metric.p_minus);
        match which {
            WhichGcs::First => plus.add(&minus),
            WhichGcs::Second => plus.sub(&minus),
        }
    }

    /// Explicit block route: ½ e^b [[J₊±J₋, −(ω₊⁻¹ ∓ ω₋⁻¹)],[ω₊ ∓ ω₋,
    /// −(J₊* ± J₋*)]] e^{−b}, with ω̂ = gJ and ω̂⁻¹ = −J g⁻¹.
    pub fn gcs_block_route(&self, which: WhichGcs) -> MatrixField {
        let g = &self.metric.g;
        let gi = &self.metric.g_inv;
        let (jp, jm) = (&self.j_plus, &self.j_minus);
        let wp = g.matmul(jp);
        let wm = g.matmul(jm);
        let wp_inv = jp.matmul(gi).neg();
        let wm_inv = jm.matmul(gi).neg();
        let (sign_ul, sign_ur, sign_ll, sign_lr): (MatrixField, MatrixField, MatrixField, MatrixField) =
            match which {
                WhichGcs::First => (
                    jp.add(jm),
                    wp_inv.sub(&wm_inv).neg(),
                    wp.sub(&wm),
                    jp.transpose().add(&jm.transpose()).neg(),
                ),
                WhichGcs::Second => (
                    jp.sub(jm),
                    wp_inv.add(&wm_inv).neg(),
                    wp.add(&wm),
                    jp.transpose().sub(&jm.transpose()).neg(),
                ),
            };
        let core = MatrixField::from_blocks(&sign_ul, &sign_ur, &sign_ll, &sign_lr)
            .scale(&ScalarField::constant(0.5));
        crate::courant::conjugate_endo(&self.metric.b, &core)
    }
}

/// Max residuals of J² + Id and J* + J over the given points, normalized by
/// (1 + |J|).
pub fn validate_gcs(
    dim: usize,
    j: &MatrixField,
    points: &[Vec<f64>],
) -> Result<(f64, f64)> {
    let mut sq: f64 = 0.0;
    let mut skew: f64 = 0.0;
    for p in points {
        let mut ctx = EvalCtx::new(dim, p);
        let jm = j.eval(&mut ctx)?;
        let scale = 1.0 + jm.amax();
        let id = DMatrix::identity(jm.nrows(), jm.nrows());
        sq = sq.max(((&jm * &jm) + &id).amax() / scale);
        skew = skew.max((pairing_adjoint_mat(&jm) + &jm).amax() / scale);
    }
    Ok((sq, skew))
}

/// A local admissible basis (𝓘, 𝓙, 𝓚) of a generalized almost quaternionic
/// bundle.
#[derive(Debug, Clone)]
pub struct QuatFrame {
    pub i: MatrixField,
    pub j: MatrixField,
    pub k: MatrixField,
}

impl QuatFrame {
    pub fn element(&self, idx: usize) -> &MatrixField {
        match idx {
            0 => &self.i,
            1 => &self.j,
            _ => &self.k,
        }
    }

    /// u = a𝓘 + b𝓙 + c𝓚 for a unit (a,b,c).
    pub fn sphere_element(&self, abc: [f64; 3]) -> Result<MatrixField> {
        let n2: f64 = abc.iter().map(|x| x * x).sum();
        if (n2 - 1.0).abs() > 1e-12 {
            return Err(GeoError::NonUnitSphereParameter(n2));
        }
        Ok(self.sphere_element_unchecked(abc))
    }

    pub fn sphere_element_unchecked(&self, abc: [f64; 3]) -> MatrixField {
        self.i
            .scale(&ScalarField::constant(abc[0]))
            .add(&self.j.scale(&ScalarField::constant(abc[1])))
            .add(&self.k.scale(&ScalarField::constant(abc[2])))
    }

    /// Numeric u at a point, from precomputed frame values.
    pub fn sphere_element_mat(vals: &[DMatrix<f64>; 3], abc: [f64; 3]) -> DMatrix<f64> {
        &vals[0] * abc[0] + &vals[1] * abc[1] + &vals[2] * abc[2]
    }
}

/// The standard left-multiplication complex structures on R^4 (columns are
/// images of basis vectors).
pub fn quaternion_left() -> [DMatrix<f64>; 3] {
    let i = DMatrix::from_row_slice(4, 4, &[
        0.0, -1.0, 0.0, 0.0,
        1.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, -1.0,
        0.0, 0.0, 1.0, 0.0,
    ]);
    let j = DMatrix::from_row_slice(4, 4, &[
        0.0, 0.0, -1.0, 0.0,
        0.0, 0.0, 0.0, 1.0,
        1.0, 0.0, 0.0, 0.0,
        0.0, -1.0, 0.0, 0.0,
    ]);
    let k = DMatrix::from_row_slice(4, 4, &[
        0.0, 0.0, 0.0, -1.0,
        0.0, 0.0, -1.0, 0.0,
        0.0, 1.0, 0.0, 0.0,
        1.0, 0.0, 0.0, 0.0,
    ]);
    [i, j, k]
}

/// Right-multiplication structures, signed so that IJ = −JI = K holds.
pub fn quaternion_right() -> [DMatrix<f64>; 3] {
    let i = DMatrix::from_row_slice(4, 4, &[
        0.0, -1.0, 0.0, 0.0,
        1.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 1.0,
        0.0, 0.0, -1.0, 0.0,
    ]);
    let j = DMatrix::from_row_slice(4, 4, &[
        0.0, 0.0, -1.0, 0.0,
        0.0, 0.0, 0.0, -1.0,
        1.0, 0.0, 0.0, 0.0,
        0.0, 1.0, 0.0, 0.0,
    ]);
    let k = DMatrix::from_row_slice(4, 4, &[
        0.0, 0.0, 0.0, -1.0,
        0.0, 0.0, 1.0, 0.0,
        0.0, -1.0, 0.0, 0.0,
        1.0, 0.0, 0.0, 0.0,
    ]);
    [i.scale(-1.0), j.scale(-1.0), k.scale(-1.0)]
}

/// Block-diagonal copies of a 4×4 structure on R^{4n}.
pub fn block_diag_structure(base: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(4 * n, 4 * n);
    for b in 0..n {
        m.view_mut((4 * b, 4 * b), (4, 4)).copy_from(base);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::courant::GSection;
    use crate::field::VectorField;
    use approx::assert_relative_eq;

    fn flat_metric(m: usize) -> GeneralizedMetric {
        let chart = Chart::centered("flat", m, 1.5, 0.0);
        GeneralizedMetric::new(chart, MatrixField::identity(m), KForm::zero(m, 2), None).unwrap()
    }

    #[test]
    fn quaternion_relations() {
        for trip in [quaternion_left(), quaternion_right()] {
            let [i, j, k] = trip;
            assert_relative_eq!((&i * &j - &k).amax(), 0.0);
            assert_relative_eq!((&j * &i + &k).amax(), 0.0);
            assert_relative_eq!((&j * &k - &i).amax(), 0.0);
            assert_relative_eq!((&i * &i + DMatrix::identity(4, 4)).amax(), 0.0);
        }
        // left and right multiplications commute
        let [li, _, _] = quaternion_left();
        let [_, rj, _] = quaternion_right();
        assert_relative_eq!((&li * &rj - &rj * &li).amax(), 0.0);
    }

    #[test]
    fn flat_metric_operators() {
        let gm = flat_metric(2);
        let p = [0.3, -0.4];
        let mut ctx = EvalCtx::new(2, &p);
        let big = gm.big_g.eval(&mut ctx).unwrap();
        // G = [[0,I],[I,0]] when b = 0, g = δ
        for r in 0..2 {
            for c in 0..2 {
                assert_relative_eq!(big[(r, c)], 0.0);
                assert_relative_eq!(big[(r, 2 + c)], if r == c { 1.0 } else { 0.0 });
            }
        }
        // G² = Id
        assert_relative_eq!((&big * &big - DMatrix::identity(4, 4)).amax(), 0.0, epsilon = 1e-12);
        // projector algebra
        let pp = gm.p_plus.eval(&mut ctx).unwrap();
        let pm = gm.p_minus.eval(&mut ctx).unwrap();
        assert_relative_eq!((&pp + &pm - DMatrix::identity(4, 4)).amax(), 0.0, epsilon = 1e-12);
        assert_relative_eq!((&pp * &pp - &pp).amax(), 0.0, epsilon = 1e-12);
        assert_relative_eq!((&pp * &pm).amax(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn random_b_field_metric_invariants() {
        let chart = Chart::centered("c", 3, 1.5, 0.0);
        let mut g = MatrixField::identity(3);
        *g.at_mut(0, 0) = ScalarField::one() + ScalarField::coord(1).powi(2);
        let b = KForm::monomial(3, &[0, 1], ScalarField::coord(2))
            .add(&KForm::monomial(3, &[1, 2], ScalarField::constant(0.7)));
        let gm = GeneralizedMetric::new(chart, g, b, None).unwrap();
        let p = [0.2, 0.5, -0.8];
        let mut ctx = EvalCtx::new(3, &p);
        let big = gm.big_g.eval(&mut ctx).unwrap();
        assert_relative_eq!((&big * &big - DMatrix::identity(6, 6)).amax(), 0.0, epsilon = 1e-12);
        // G self-adjoint for the pairing
        assert_relative_eq!((pairing_adjoint_mat(&big) - &big).amax(), 0.0, epsilon = 1e-12);
        // C± definiteness via π± lifts of random vectors
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..64 {
            let v: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0f64)).collect();
            if v.iter().map(|x| x * x).sum::<f64>() < 1e-3 {
                continue;
            }
            let x = VectorField::from_consts(&v);
            let sp = GSection::from_vector(x.clone()).apply_endo(&gm.p_plus);
            // project a generic lift instead: π₊⁻¹ X
            let lift_p = gm.pi_inv_plus.apply_vector(&x);
            let sec_p = GSection::new(
                VectorField { comps: lift_p.comps[0..3].to_vec() },
                crate::field::CovectorField { comps: lift_p.comps[3..6].to_vec() },
            );
            let val = crate::courant::pairing(&sec_p, &sec_p).eval(3, &p).unwrap();
            assert!(val > 0.0, "C+ must be positive definite, got {val}");
            let lift_m = gm.pi_inv_minus.apply_vector(&x);
            let sec_m = GSection::new(
                VectorField { comps: lift_m.comps[0..3].to_vec() },
                crate::field::CovectorField { comps: lift_m.comps[3..6].to_vec() },
            );
            let vm = crate::courant::pairing(&sec_m, &sec_m).eval(3, &p).unwrap();
            assert!(vm < 0.0, "C- must be negative definite, got {vm}");
            let _ = sp;
        }
    }

    #[test]
    fn degenerate_metric_rejected() {
        let chart = Chart::centered("c", 2, 1.0, 0.0);
        let mut g = MatrixField::identity(2);
        *g.at_mut(1, 1) = ScalarField::zero();
        let r = GeneralizedMetric::new(chart, g, KForm::zero(2, 2), None);
        assert!(matches!(r, Err(GeoError::DegenerateMetric(_))));
    }

    #[test]
    fn gcs_routes_agree_for_complex_type() {
        // b = 0, J+ = J- = J: 𝒥₁ = blockdiag(J, −J*), 𝒥₂ = [[0, −ω⁻¹],[ω, 0]]
        let gm = flat_metric(4);
        let [i, _, _] = quaternion_left();
        let j = MatrixField::from_const(&i);
        let quad = GKQuadruple::new(gm, j.clone(), j.clone());
        let p = [0.1, 0.2, 0.3, 0.4];
        let mut ctx = EvalCtx::new(4, &p);
        let j1a = quad.gcs_projector_route(WhichGcs::First).eval(&mut ctx).unwrap();
        let j1b = quad.gcs_block_route(WhichGcs::First).eval(&mut ctx).unwrap();
        assert_relative_eq!((&j1a - &j1b).amax(), 0.0, epsilon = 1e-12);
        let jm = j.eval(&mut ctx).unwrap();
        // upper-left block J, lower-right −Jᵀ, off-diagonal zero
        assert_relative_eq!((j1a.view((0, 0), (4, 4)).clone_owned() - &jm).amax(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(
            (j1a.view((4, 4), (4, 4)).clone_owned() + jm.transpose()).amax(),
            0.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(j1a.view((0, 4), (4, 4)).amax(), 0.0, epsilon = 1e-12);
        // 𝒥₂ symplectic type: [[0, −ω̂⁻¹],[ω̂, 0]] with ω̂ = gJ = J here
        let j2 = quad.gcs_block_route(WhichGcs::Second).eval(&mut ctx).unwrap();
        assert_relative_eq!((j2.view((4, 0), (4, 4)).clone_owned() - &jm).amax(), 0.0, epsilon = 1e-12);
        assert_relative_eq!((j2.view((0, 4), (4, 4)).clone_owned() - &jm).amax(), 0.0, epsilon = 1e-12);
        // −𝒥₁𝒥₂ = G
        let quad2 = GKQuadruple::new(flat_metric(4), j.clone(), j.clone());
        let big = quad2.metric.big_g.eval(&mut ctx).unwrap();
        assert_relative_eq!((-(&j1a * &j2) - &big).amax(), 0.0, epsilon = 1e-12);
        // validate as GCS
        let (sq, skew) = validate_gcs(4, &quad.gcs_projector_route(WhichGcs::First), &[p.to_vec()]).unwrap();
        assert!(sq <= 1e-12 && skew <= 1e-12);
        // G itself fails J² = −1
        let (gsq, _) = validate_gcs(4, &quad.metric.big_g, &[p.to_vec()]).unwrap();
        assert!(gsq > 0.5);
    }

    #[test]
    fn sphere_element_checks() {
        let [i, j, k] = quaternion_left();
        let to_gcs = |m: &DMatrix<f64>| {
            let mf = MatrixField::from_const(m);
            MatrixField::from_blocks(
                &mf,
                &MatrixField::zeros(4, 4),
                &MatrixField::zeros(4, 4),
                &mf.transpose().neg(),
            )
        };
        let frame = QuatFrame { i: to_gcs(&i), j: to_gcs(&j), k: to_gcs(&k) };
        assert!(frame.sphere_element([0.6, 0.8, 0.1]).is_err());
        let u = frame.sphere_element([0.6, 0.8, 0.0]).unwrap();
        let p = [0.0; 4];
        let mut ctx = EvalCtx::new(4, &p);
        let um = u.eval(&mut ctx).unwrap();
        assert_relative_eq!((&um * &um + DMatrix::identity(8, 8)).amax(), 0.0, epsilon = 1e-12);
        // (1,0,0) → 𝓘
        let u100 = frame.sphere_element([1.0, 0.0, 0.0]).unwrap().eval(&mut ctx).unwrap();
        let im = frame.i.eval(&mut ctx).unwrap();
        assert_relative_eq!((&u100 - &im).amax(), 0.0);
    }
}
