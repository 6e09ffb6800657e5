//! Differential forms with antisymmetric storage on strictly increasing
//! index tuples. Evaluations on arbitrary tuples expand antisymmetrically on
//! demand, so callers never track signs.

use crate::error::{GeoError, Result};
use crate::expr::{EvalCtx, ScalarField};
use crate::field::{CovectorField, MatrixField, VectorField};

fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r = 1usize;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// All strictly increasing k-tuples over 0..m, lexicographic.
pub fn tuples(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(binom(m, k));
    let mut cur = Vec::with_capacity(k);
    fn rec(m: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            cur.push(i);
            rec(m, k, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(m, k, 0, &mut cur, &mut out);
    out
}

/// Lexicographic rank of a strictly increasing tuple.
fn rank(m: usize, t: &[usize]) -> usize {
    let k = t.len();
    let mut r = 0;
    let mut prev = 0;
    for (pos, &ti) in t.iter().enumerate() {
        for v in prev..ti {
            r += binom(m - v - 1, k - pos - 1);
        }
        prev = ti + 1;
    }
    r
}

/// Sort a tuple, returning (sorted, permutation sign) or None on repeats.
fn sort_signed(t: &[usize]) -> Option<(Vec<usize>, f64)> {
    let mut v = t.to_vec();
    let mut sign = 1.0;
    // insertion sort, counting swaps
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    for w in v.windows(2) {
        if w[0] == w[1] {
            return None;
        }
    }
    Some((v, sign))
}

/// A differential k-form on an m-dimensional chart.
#[derive(Debug, Clone)]
pub struct KForm {
    dim: usize,
    degree: usize,
    /// Coefficients over increasing tuples in lexicographic order.
    coeffs: Vec<ScalarField>,
}

impl KForm {
    pub fn zero(dim: usize, degree: usize) -> Self {
        KForm { dim, degree, coeffs: vec![ScalarField::zero(); binom(dim, degree)] }
    }

    pub fn scalar(dim: usize, f: ScalarField) -> Self {
        KForm { dim, degree: 0, coeffs: vec![f] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_coeffs(&self) -> usize {
        self.coeffs.len()
    }

    /// Build from a coefficient assignment on increasing tuples.
    pub fn from_fn(dim: usize, degree: usize, mut f: impl FnMut(&[usize]) -> ScalarField) -> Self {
        let coeffs = tuples(dim, degree).iter().map(|t| f(t)).collect();
        KForm { dim, degree, coeffs }
    }

    /// The basis monomial c · dx^{t0} ∧ dx^{t1} ∧ …  (0-based indices).
    pub fn monomial(dim: usize, t: &[usize], c: ScalarField) -> Self {
        let (sorted, sign) = sort_signed(t).expect("repeated index in form monomial");
        let mut form = KForm::zero(dim, t.len());
        form.coeffs[rank(dim, &sorted)] = &c * &ScalarField::constant(sign);
        form
    }

    /// Coefficient on an arbitrary (possibly unsorted) tuple, with sign.
    pub fn coeff(&self, t: &[usize]) -> ScalarField {
        debug_assert_eq!(t.len(), self.degree);
        match sort_signed(t) {
            None => ScalarField::zero(),
            Some((sorted, sign)) => {
                &self.coeffs[rank(self.dim, &sorted)] * &ScalarField::constant(sign)
            }
        }
    }

    pub fn coeff_at(&self, idx: usize) -> &ScalarField {
        &self.coeffs[idx]
    }

    pub fn add(&self, o: &Self) -> Self {
        debug_assert_eq!((self.dim, self.degree), (o.dim, o.degree));
        KForm {
            dim: self.dim,
            degree: self.degree,
            coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        KForm {
            dim: self.dim,
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|a| -a).collect(),
        }
    }

    pub fn scale(&self, s: &ScalarField) -> Self {
        KForm {
            dim: self.dim,
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|a| a * s).collect(),
        }
    }

    /// Exterior derivative. Rejected on top-degree forms.
    pub fn d(&self) -> Result<KForm> {
        if self.degree >= self.dim {
            return Err(GeoError::TopDegree(self.degree));
        }
        let out = KForm::from_fn(self.dim, self.degree + 1, |t| {
            let mut acc = ScalarField::zero();
            for (a, &ja) in t.iter().enumerate() {
                let rest: Vec<usize> = t.iter().enumerate().filter(|&(b, _)| b != a).map(|(_, &x)| x).collect();
                let term = self.coeff(&rest).deriv(ja);
                acc = if a % 2 == 0 { &acc + &term } else { &acc - &term };
            }
            acc
        });
        Ok(out)
    }

    /// Interior product i_X.
    pub fn interior(&self, x: &VectorField) -> Result<KForm> {
        if self.degree == 0 {
            return Err(GeoError::ZeroDegreeContraction);
        }
        let out = KForm::from_fn(self.dim, self.degree - 1, |t| {
            let mut acc = ScalarField::zero();
            for j in 0..self.dim {
                let mut full = Vec::with_capacity(self.degree);
                full.push(j);
                full.extend_from_slice(t);
                acc = &acc + &(&x.comps[j] * &self.coeff(&full));
            }
            acc
        });
        Ok(out)
    }

    /// Lie derivative via the Cartan formula d i_X + i_X d.
    pub fn lie_derivative(&self, x: &VectorField) -> Result<KForm> {
        if self.degree == 0 {
            // L_X f = X(f)
            return Ok(KForm::scalar(self.dim, x.derive_scalar(&self.coeffs[0])));
        }
        let term1 = self.interior(x)?.d()?;
        if self.degree >= self.dim {
            // top degree: dφ has no meaning here and the i_X d term is absent
            return Ok(term1);
        }
        let term2 = self.d()?.interior(x)?;
        Ok(term1.add(&term2))
    }

    pub fn wedge(&self, o: &Self) -> Self {
        debug_assert_eq!(self.dim, o.dim);
        let k = self.degree;
        let l = o.degree;
        KForm::from_fn(self.dim, k + l, |t| {
            // sum over k-subsets of the positions of t
            let mut acc = ScalarField::zero();
            let subsets = tuples(t.len(), k);
            for s in &subsets {
                let left: Vec<usize> = s.iter().map(|&p| t[p]).collect();
                let right: Vec<usize> =
                    (0..t.len()).filter(|p| !s.contains(p)).map(|p| t[p]).collect();
                // shuffle sign: permutation (left, right) of the sorted t
                let mut perm = left.clone();
                perm.extend_from_slice(&right);
                let sign = sort_signed(&perm).map(|(_, s)| s).unwrap_or(0.0);
                let term = &self.coeff(&left) * &o.coeff(&right);
                acc = &acc + &(&term * &ScalarField::constant(sign));
            }
            acc
        })
    }

    /// Pullback through a pointwise endomorphism: (A·φ)(X₁,…,X_k) = φ(AX₁,…,AX_k).
    pub fn apply_endo(&self, a: &MatrixField) -> Self {
        debug_assert_eq!(a.rows(), self.dim);
        let k = self.degree;
        let all = tuples(self.dim, k);
        KForm::from_fn(self.dim, k, |t| {
            let mut acc = ScalarField::zero();
            for i_tuple in &all {
                // minor det of A with rows i_tuple, columns t
                let det = small_det(k, |r, c| a.at(i_tuple[r], t[c]).clone());
                acc = &acc + &(&self.coeff(i_tuple) * &det);
            }
            acc
        })
    }

    pub fn from_covector(xi: &CovectorField) -> Self {
        KForm { dim: xi.len(), degree: 1, coeffs: xi.comps.clone() }
    }

    pub fn to_covector(&self) -> CovectorField {
        debug_assert_eq!(self.degree, 1);
        CovectorField { comps: self.coeffs.clone() }
    }

    /// For a 2-form b: the matrix of X ↦ i_X b, i.e. M[r][c] = b(e_c, e_r).
    pub fn two_form_hat(&self) -> MatrixField {
        debug_assert_eq!(self.degree, 2);
        MatrixField::from_fn(self.dim, self.dim, |r, c| self.coeff(&[c, r]))
    }

    /// Build a 2-form from its hat matrix convention M[r][c] = b(e_c, e_r).
    pub fn from_two_form_hat(m: &MatrixField) -> Self {
        KForm::from_fn(m.rows(), 2, |t| m.at(t[1], t[0]).clone())
    }

    /// Max |coefficient| at a point.
    pub fn max_coeff(&self, ctx: &mut EvalCtx) -> Result<f64> {
        let mut best: f64 = 0.0;
        for c in &self.coeffs {
            best = best.max(ctx.value(c)?.abs());
        }
        Ok(best)
    }

    /// Evaluate on explicit constant argument vectors at a point.
    pub fn value_on(&self, ctx: &mut EvalCtx, args: &[&[f64]]) -> Result<f64> {
        debug_assert_eq!(args.len(), self.degree);
        let mut total = 0.0;
        for t in tuples(self.dim, self.degree) {
            let c = ctx.value(&self.coeffs[rank(self.dim, &t)])?;
            if c == 0.0 {
                continue;
            }
            // determinant of the k x k matrix args[b][t[a]]
            let k = self.degree;
            let det = match k {
                0 => 1.0,
                1 => args[0][t[0]],
                2 => args[0][t[0]] * args[1][t[1]] - args[0][t[1]] * args[1][t[0]],
                3 => {
                    let m = |r: usize, c: usize| args[c][t[r]];
                    m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
                        - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
                        + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
                }
                _ => unimplemented!("value_on supports degree <= 3"),
            };
            total += c * det;
        }
        Ok(total)
    }
}

fn small_det(k: usize, entry: impl Fn(usize, usize) -> ScalarField) -> ScalarField {
    match k {
        0 => ScalarField::one(),
        1 => entry(0, 0),
        2 => entry(0, 0) * entry(1, 1) - entry(0, 1) * entry(1, 0),
        3 => {
            let m = |r, c| entry(r, c);
            let t1 = m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1));
            let t2 = m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0));
            let t3 = m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
            &(&t1 - &t2) + &t3
        }
        _ => unimplemented!("form pullback supports degree <= 3"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exterior_derivative_of_x1_dx2() {
        // d(x1 dx2) = dx1 ∧ dx2
        let w = KForm::monomial(3, &[1], ScalarField::coord(0));
        let dw = w.d().unwrap();
        let mut ctx = EvalCtx::new(3, &[0.4, 0.5, 0.6]);
        assert_relative_eq!(ctx.value(&dw.coeff(&[0, 1])).unwrap(), 1.0);
        assert_relative_eq!(ctx.value(&dw.coeff(&[0, 2])).unwrap(), 0.0);
        assert_relative_eq!(ctx.value(&dw.coeff(&[1, 0])).unwrap(), -1.0);
    }

    #[test]
    fn d_of_function_is_gradient_one_form() {
        // d(x1 x2) = x2 dx1 + x1 dx2
        let f = KForm::scalar(2, ScalarField::coord(0) * ScalarField::coord(1));
        let df = f.d().unwrap();
        let p = [2.0, -3.0];
        let mut ctx = EvalCtx::new(2, &p);
        assert_relative_eq!(ctx.value(&df.coeff(&[0])).unwrap(), p[1]);
        assert_relative_eq!(ctx.value(&df.coeff(&[1])).unwrap(), p[0]);
    }

    #[test]
    fn d_squared_vanishes_on_polynomial_form() {
        let w = KForm::monomial(4, &[0, 2], ScalarField::coord(1).powi(2) * ScalarField::coord(3))
            .add(&KForm::monomial(4, &[1, 3], ScalarField::coord(0) * ScalarField::coord(2)));
        let ddw = w.d().unwrap().d().unwrap();
        let mut ctx = EvalCtx::new(4, &[0.3, 1.2, -0.8, 0.5]);
        assert!(ddw.max_coeff(&mut ctx).unwrap() <= 1e-13);
    }

    #[test]
    fn top_degree_d_rejected() {
        let w = KForm::monomial(2, &[0, 1], ScalarField::one());
        assert!(matches!(w.d(), Err(GeoError::TopDegree(2))));
    }

    #[test]
    fn interior_product_basics() {
        // i_{∂1}(dx1 ∧ dx2) = dx2
        let w = KForm::monomial(3, &[0, 1], ScalarField::one());
        let x = VectorField::basis(3, 0);
        let iw = w.interior(&x).unwrap();
        let mut ctx = EvalCtx::new(3, &[0.0, 0.0, 0.0]);
        assert_relative_eq!(ctx.value(&iw.coeff(&[1])).unwrap(), 1.0);
        assert_relative_eq!(ctx.value(&iw.coeff(&[0])).unwrap(), 0.0);
        // i_X i_X w = 0
        let zero = KForm::scalar(3, ScalarField::zero());
        assert!(matches!(zero.interior(&x), Err(GeoError::ZeroDegreeContraction)));
    }

    #[test]
    fn lie_derivative_examples() {
        // L_{∂1}(x1 dx2) = dx2
        let w = KForm::monomial(2, &[1], ScalarField::coord(0));
        let x = VectorField::basis(2, 0);
        let lw = w.lie_derivative(&x).unwrap();
        let mut ctx = EvalCtx::new(2, &[1.1, 2.2]);
        assert_relative_eq!(ctx.value(&lw.coeff(&[1])).unwrap(), 1.0);
        assert_relative_eq!(ctx.value(&lw.coeff(&[0])).unwrap(), 0.0);
        // L_X dx^i = 0 for constant X
        let dxi = KForm::monomial(2, &[0], ScalarField::one());
        let x2 = VectorField::from_consts(&[3.0, -2.0]);
        let l2 = dxi.lie_derivative(&x2).unwrap();
        assert!(l2.max_coeff(&mut ctx).unwrap() <= 1e-14);
    }

    #[test]
    fn wedge_agrees_with_hand_expansion() {
        // (x2 dx1) ∧ (dx2 ∧ dx3) = x2 dx1∧dx2∧dx3
        let a = KForm::monomial(3, &[0], ScalarField::coord(1));
        let b = KForm::monomial(3, &[1, 2], ScalarField::one());
        let w = a.wedge(&b);
        let mut ctx = EvalCtx::new(3, &[0.0, 4.0, 0.0]);
        assert_relative_eq!(ctx.value(&w.coeff(&[0, 1, 2])).unwrap(), 4.0);
        // antisymmetry of wedge on 1-forms: a∧a = 0
        let aa = a.wedge(&a);
        assert!(aa.max_coeff(&mut ctx).unwrap() == 0.0);
    }

    #[test]
    fn hat_matrix_round_trip() {
        let b = KForm::monomial(3, &[0, 1], ScalarField::coord(2))
            .add(&KForm::monomial(3, &[1, 2], ScalarField::constant(2.0)));
        let hat = b.two_form_hat();
        let back = KForm::from_two_form_hat(&hat);
        let mut ctx = EvalCtx::new(3, &[0.1, 0.2, 0.7]);
        for t in tuples(3, 2) {
            assert_relative_eq!(
                ctx.value(&b.coeff(&t)).unwrap(),
                ctx.value(&back.coeff(&t)).unwrap()
            );
        }
        // i_X b via hat equals direct interior product
        let x = VectorField::from_consts(&[1.0, -2.0, 0.5]);
        let via_hat = hat.apply_vector(&x);
        let direct = b.interior(&x).unwrap().to_covector();
        for i in 0..3 {
            assert_relative_eq!(
                ctx.value(&via_hat.comps[i]).unwrap(),
                ctx.value(&direct.comps[i]).unwrap(),
                epsilon = 1e-14
            );
        }
    }
}
