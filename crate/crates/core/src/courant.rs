//! Sections of TM ⊕ T*M, the canonical split-signature pairing, the
//! (h-twisted) Courant bracket and b-field transforms.

use nalgebra::DVector;
use rand::Rng;

use crate::error::Result;
use crate::expr::{EvalCtx, ScalarField};
use crate::field::{CovectorField, MatrixField, VectorField};
use crate::forms::KForm;

/// A section X + ξ of the generalized tangent bundle.
#[derive(Debug, Clone)]
pub struct GSection {
    pub vec: VectorField,
    pub form: CovectorField,
}

impl GSection {
    pub fn new(vec: VectorField, form: CovectorField) -> Self {
        debug_assert_eq!(vec.len(), form.len());
        GSection { vec, form }
    }

    pub fn dim(&self) -> usize {
        self.vec.len()
    }

    pub fn zero(m: usize) -> Self {
        GSection::new(VectorField::zero(m), CovectorField::zero(m))
    }

    pub fn from_vector(x: VectorField) -> Self {
        let m = x.len();
        GSection::new(x, CovectorField::zero(m))
    }

    pub fn from_covector(xi: CovectorField) -> Self {
        let m = xi.len();
        GSection::new(VectorField::zero(m), xi)
    }

    /// The a-th coordinate frame section: ∂_a for a < m, dx^{a-m} otherwise.
    pub fn frame(m: usize, a: usize) -> Self {
        if a < m {
            GSection::from_vector(VectorField::basis(m, a))
        } else {
            GSection::from_covector(CovectorField::basis(m, a - m))
        }
    }

    pub fn comp(&self, a: usize) -> &ScalarField {
        let m = self.dim();
        if a < m {
            &self.vec.comps[a]
        } else {
            &self.form.comps[a - m]
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        GSection::new(self.vec.add(&o.vec), self.form.add(&o.form))
    }

    pub fn sub(&self, o: &Self) -> Self {
        GSection::new(self.vec.sub(&o.vec), self.form.sub(&o.form))
    }

    pub fn neg(&self) -> Self {
        GSection::new(self.vec.neg(), self.form.neg())
    }

    pub fn scale(&self, s: &ScalarField) -> Self {
        GSection::new(self.vec.scale(s), self.form.scale(s))
    }

    /// Components as a 2m-vector at a point.
    pub fn eval(&self, ctx: &mut EvalCtx) -> Result<DVector<f64>> {
        let m = self.dim();
        let mut v = DVector::zeros(2 * m);
        for i in 0..m {
            v[i] = ctx.value(&self.vec.comps[i])?;
            v[m + i] = ctx.value(&self.form.comps[i])?;
        }
        Ok(v)
    }

    /// Apply a 2m×2m endomorphism field pointwise.
    pub fn apply_endo(&self, a: &MatrixField) -> Self {
        let m = self.dim();
        debug_assert_eq!(a.rows(), 2 * m);
        let comp = |r: usize| -> ScalarField {
            let mut acc = ScalarField::zero();
            for c in 0..m {
                acc = &acc + &(a.at(r, c) * &self.vec.comps[c]);
                acc = &acc + &(a.at(r, m + c) * &self.form.comps[c]);
            }
            acc
        };
        GSection::new(
            VectorField { comps: (0..m).map(comp).collect() },
            CovectorField { comps: (m..2 * m).map(comp).collect() },
        )
    }
}

/// ⟨X+ξ, Y+η⟩ = ½(ξ(Y) + η(X)) as a scalar field.
pub fn pairing(s1: &GSection, s2: &GSection) -> ScalarField {
    let a = s1.form.apply(&s2.vec);
    let b = s2.form.apply(&s1.vec);
    &(&a + &b) * &ScalarField::constant(0.5)
}

/// Lie bracket of vector fields: [X,Y]^i = X^j ∂_j Y^i − Y^j ∂_j X^i.
pub fn lie_bracket(x: &VectorField, y: &VectorField) -> VectorField {
    let m = x.len();
    VectorField {
        comps: (0..m)
            .map(|i| &x.derive_scalar(&y.comps[i]) - &y.derive_scalar(&x.comps[i]))
            .collect(),
    }
}

/// The Courant bracket, optionally twisted by a closed 3-form:
/// [X+ξ, Y+η]_h = [X,Y] + L_X η − L_Y ξ − ½ d(i_X η − i_Y ξ) + i_Y i_X h.
pub fn courant_bracket(s1: &GSection, s2: &GSection, h: Option<&KForm>) -> Result<GSection> {
    let m = s1.dim();
    let xi = KForm::from_covector(&s1.form);
    let eta = KForm::from_covector(&s2.form);

    let vec = lie_bracket(&s1.vec, &s2.vec);

    let lxeta = eta.lie_derivative(&s1.vec)?;
    let lyxi = xi.lie_derivative(&s2.vec)?;
    // i_X η = η(X), i_Y ξ = ξ(Y)
    let i_x_eta = s2.form.apply(&s1.vec);
    let i_y_xi = s1.form.apply(&s2.vec);
    let exact = KForm::scalar(m, &i_x_eta - &i_y_xi).d()?;

    let mut form = lxeta.sub(&lyxi).sub(&exact.scale(&ScalarField::constant(0.5)));
    if let Some(h3) = h {
        debug_assert_eq!(h3.degree(), 3);
        // i_Y i_X h
        let ixh = h3.interior(&s1.vec)?;
        let iyixh = ixh.interior(&s2.vec)?;
        form = form.add(&iyixh);
    }
    Ok(GSection::new(vec, form.to_covector()))
}

/// The shear e^b: X + ξ ↦ X + ξ + i_X b.
pub fn b_transform(b: &KForm, s: &GSection) -> Result<GSection> {
    debug_assert_eq!(b.degree(), 2);
    let ixb = b.interior(&s.vec)?;
    Ok(GSection::new(s.vec.clone(), s.form.add(&ixb.to_covector())))
}

/// e^b as a 2m×2m matrix field: [[1, 0], [b̂, 1]].
pub fn b_matrix(b: &KForm) -> MatrixField {
    let m = b.dim();
    let hat = b.two_form_hat();
    MatrixField::from_blocks(
        &MatrixField::identity(m),
        &MatrixField::zeros(m, m),
        &hat,
        &MatrixField::identity(m),
    )
}

/// e^b A e^{-b} pointwise.
pub fn conjugate_endo(b: &KForm, a: &MatrixField) -> MatrixField {
    let eb = b_matrix(b);
    let emb = b_matrix(&b.neg());
    eb.matmul(a).matmul(&emb)
}

/// Random polynomial section with coefficients of degree <= 2, for residual
/// sweeps.
pub fn random_section(m: usize, rng: &mut impl Rng) -> GSection {
    let mut comp = |_: usize| -> ScalarField {
        let c0 = ScalarField::constant(rng.gen_range(-1.0..1.0));
        let lin = ScalarField::coord(rng.gen_range(0..m))
            * ScalarField::constant(rng.gen_range(-1.0..1.0));
        let quad = ScalarField::coord(rng.gen_range(0..m))
            * ScalarField::coord(rng.gen_range(0..m))
            * ScalarField::constant(rng.gen_range(-1.0..1.0));
        &(&c0 + &lin) + &quad
    };
    GSection::new(
        VectorField { comps: (0..m).map(&mut comp).collect() },
        CovectorField { comps: (0..m).map(&mut comp).collect() },
    )
}

/// Max residual of e^b[s₁,s₂] − [e^b s₁, e^b s₂] over given section pairs and
/// points, normalized by (1 + max input magnitude).
pub fn bracket_automorphism_residual(
    dim: usize,
    b: &KForm,
    pairs: &[(GSection, GSection)],
    points: &[Vec<f64>],
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in points {
        let mut ctx = EvalCtx::new(dim, p);
        for (s1, s2) in pairs {
            let lhs = b_transform(b, &courant_bracket(s1, s2, None)?)?;
            let rhs = courant_bracket(&b_transform(b, s1)?, &b_transform(b, s2)?, None)?;
            let d = lhs.sub(&rhs).eval(&mut ctx)?;
            let scale = 1.0 + s1.eval(&mut ctx)?.amax().max(s2.eval(&mut ctx)?.amax());
            worst = worst.max(d.norm() / scale);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn eval_pair(f: &ScalarField, m: usize, p: &[f64]) -> f64 {
        f.eval(m, p).unwrap()
    }

    #[test]
    fn pairing_examples() {
        // ⟨∂1, dx1⟩ = 1/2
        let s1 = GSection::frame(3, 0);
        let s2 = GSection::frame(3, 3);
        let f = pairing(&s1, &s2);
        assert_relative_eq!(eval_pair(&f, 3, &[0.0, 0.0, 0.0]), 0.5);
        // ⟨∂1+dx1, ∂1+dx1⟩ = 1
        let s = s1.add(&s2);
        assert_relative_eq!(eval_pair(&pairing(&s, &s), 3, &[1.0, 2.0, 3.0]), 1.0);
        // TM isotropic
        let x = GSection::from_vector(VectorField::from_consts(&[1.0, 2.0, -1.0]));
        let y = GSection::from_vector(VectorField::from_consts(&[0.5, 0.0, 4.0]));
        assert_relative_eq!(eval_pair(&pairing(&x, &y), 3, &[0.0, 1.0, 0.0]), 0.0);
    }

    #[test]
    fn lie_bracket_examples() {
        // [∂1, ∂2] = 0
        let b = lie_bracket(&VectorField::basis(2, 0), &VectorField::basis(2, 1));
        assert_relative_eq!(eval_pair(&b.comps[0], 2, &[0.3, 0.4]), 0.0);
        // [x1 ∂2, ∂1] = -∂2
        let mut x = VectorField::zero(2);
        x.comps[1] = ScalarField::coord(0);
        let b2 = lie_bracket(&x, &VectorField::basis(2, 0));
        assert_relative_eq!(eval_pair(&b2.comps[1], 2, &[0.3, 0.4]), -1.0);
    }

    #[test]
    fn bracket_of_vector_with_exact_form() {
        // [∂1, x1 dx2] = dx2 (untwisted)
        let s1 = GSection::frame(2, 0);
        let mut form = CovectorField::zero(2);
        form.comps[1] = ScalarField::coord(0);
        let s2 = GSection::from_covector(form);
        let b = courant_bracket(&s1, &s2, None).unwrap();
        let p = [1.7, -2.1];
        assert_relative_eq!(eval_pair(&b.form.comps[1], 2, &p), 1.0);
        assert_relative_eq!(eval_pair(&b.form.comps[0], 2, &p), 0.0);
        assert_relative_eq!(eval_pair(&b.vec.comps[0], 2, &p), 0.0);
    }

    #[test]
    fn twisted_bracket_constant_form() {
        // h = dx1∧dx2∧dx3, [∂1, ∂2]_h = dx3
        let h = KForm::monomial(3, &[0, 1, 2], ScalarField::one());
        let s1 = GSection::frame(3, 0);
        let s2 = GSection::frame(3, 1);
        let b = courant_bracket(&s1, &s2, Some(&h)).unwrap();
        let p = [0.0, 0.0, 0.0];
        assert_relative_eq!(eval_pair(&b.form.comps[2], 3, &p), 1.0);
        assert_relative_eq!(eval_pair(&b.form.comps[0], 3, &p), 0.0);
    }

    #[test]
    fn bracket_antisymmetric_on_random_sections() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..4 {
            let s1 = random_section(3, &mut rng);
            let s2 = random_section(3, &mut rng);
            let b12 = courant_bracket(&s1, &s2, None).unwrap();
            let b21 = courant_bracket(&s2, &s1, None).unwrap();
            let sum = b12.add(&b21);
            let p = [0.25, -0.75, 0.5];
            let mut ctx = EvalCtx::new(3, &p);
            assert!(sum.eval(&mut ctx).unwrap().amax() <= 1e-13);
        }
    }

    #[test]
    fn b_transform_examples() {
        // b = dx1∧dx2: e^b ∂1 = ∂1 + dx2
        let b = KForm::monomial(2, &[0, 1], ScalarField::one());
        let s = GSection::frame(2, 0);
        let t = b_transform(&b, &s).unwrap();
        let p = [0.0, 0.0];
        assert_relative_eq!(eval_pair(&t.form.comps[1], 2, &p), 1.0);
        assert_relative_eq!(eval_pair(&t.form.comps[0], 2, &p), 0.0);
        // pairing preserved
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let s1 = random_section(2, &mut rng);
        let s2 = random_section(2, &mut rng);
        let lhs = pairing(&b_transform(&b, &s1).unwrap(), &b_transform(&b, &s2).unwrap());
        let rhs = pairing(&s1, &s2);
        let q = [0.4, 0.9];
        assert_relative_eq!(eval_pair(&lhs, 2, &q), eval_pair(&rhs, 2, &q), epsilon = 1e-13);
        // e^{-b} ∘ e^b = id
        let round = b_transform(&b.neg(), &t).unwrap();
        let diff = round.sub(&s);
        let mut ctx = EvalCtx::new(2, &q);
        assert!(diff.eval(&mut ctx).unwrap().amax() <= 1e-15);
    }

    #[test]
    fn automorphism_residual_matches_db_contraction() {
        // b = x2 dx1∧dx3 on R^3: residual for (∂1, ∂3) equals |−i_{∂3}i_{∂1}db| there
        let b = KForm::monomial(3, &[0, 2], ScalarField::coord(1));
        let db = b.d().unwrap();
        let s1 = GSection::frame(3, 0);
        let s2 = GSection::frame(3, 2);
        let p = vec![0.2, 0.3, 0.4];
        let lhs = b_transform(&b, &courant_bracket(&s1, &s2, None).unwrap()).unwrap();
        let rhs =
            courant_bracket(&b_transform(&b, &s1).unwrap(), &b_transform(&b, &s2).unwrap(), None)
                .unwrap();
        let diff = lhs.sub(&rhs);
        let mut ctx = EvalCtx::new(3, &p);
        let dv = diff.eval(&mut ctx).unwrap();
        // −i_Y i_X db as covector
        let expect = db
            .interior(&s1.vec)
            .unwrap()
            .interior(&s2.vec)
            .unwrap()
            .neg()
            .to_covector();
        let ev = expect.eval(&mut ctx).unwrap();
        for i in 0..3 {
            assert_relative_eq!(dv[3 + i], ev[i], epsilon = 1e-12);
        }
        // closed b gives zero residual
        let closed = KForm::monomial(3, &[0, 1], ScalarField::coord(0));
        let pairs = vec![(s1.clone(), s2.clone())];
        let r = bracket_automorphism_residual(3, &closed, &pairs, &[p.clone()]).unwrap();
        assert!(r <= 1e-12);
    }
}
