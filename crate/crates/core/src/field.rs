//! Vector-, covector- and matrix-valued fields built from [`ScalarField`]
//! components, with pointwise numeric evaluation into nalgebra types.

use nalgebra::{DMatrix, DVector};

use crate::error::{GeoError, Result};
use crate::expr::{sum, EvalCtx, ScalarField};

/// Contravariant components X^i.
#[derive(Debug, Clone)]
pub struct VectorField {
    pub comps: Vec<ScalarField>,
}

/// Covariant components ξ_i.
#[derive(Debug, Clone)]
pub struct CovectorField {
    pub comps: Vec<ScalarField>,
}

macro_rules! tuple_field {
    ($t:ident) => {
        impl $t {
            pub fn zero(m: usize) -> Self {
                $t { comps: vec![ScalarField::zero(); m] }
            }

            pub fn basis(m: usize, i: usize) -> Self {
                let mut f = Self::zero(m);
                f.comps[i] = ScalarField::one();
                f
            }

            pub fn from_consts(v: &[f64]) -> Self {
                $t { comps: v.iter().map(|&c| ScalarField::constant(c)).collect() }
            }

            pub fn len(&self) -> usize {
                self.comps.len()
            }

            pub fn is_empty(&self) -> bool {
                self.comps.is_empty()
            }

            pub fn add(&self, o: &Self) -> Self {
                $t {
                    comps: self.comps.iter().zip(&o.comps).map(|(a, b)| a + b).collect(),
                }
            }

            pub fn sub(&self, o: &Self) -> Self {
                $t {
                    comps: self.comps.iter().zip(&o.comps).map(|(a, b)| a - b).collect(),
                }
            }

            pub fn scale(&self, s: &ScalarField) -> Self {
                $t { comps: self.comps.iter().map(|a| a * s).collect() }
            }

            pub fn neg(&self) -> Self {
                $t { comps: self.comps.iter().map(|a| -a).collect() }
            }

            pub fn eval(&self, ctx: &mut EvalCtx) -> Result<DVector<f64>> {
                let mut v = DVector::zeros(self.comps.len());
                for (i, c) in self.comps.iter().enumerate() {
                    v[i] = ctx.value(c)?;
                }
                Ok(v)
            }
        }
    };
}
tuple_field!(VectorField);
tuple_field!(CovectorField);

impl CovectorField {
    /// ξ(X) as a scalar field.
    pub fn apply(&self, x: &VectorField) -> ScalarField {
        sum(self.comps.iter().zip(&x.comps).map(|(a, b)| a * b))
    }
}

impl VectorField {
    /// Directional derivative X(f).
    pub fn derive_scalar(&self, f: &ScalarField) -> ScalarField {
        sum(self.comps.iter().enumerate().map(|(i, xi)| xi * &f.deriv(i)))
    }
}

/// A matrix of scalar fields (row-major), used for metrics, endomorphisms
/// and connection coefficients.
#[derive(Debug, Clone)]
pub struct MatrixField {
    rows: usize,
    cols: usize,
    entries: Vec<ScalarField>,
}

impl MatrixField {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        MatrixField { rows, cols, entries: vec![ScalarField::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = MatrixField::zeros(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = ScalarField::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> ScalarField) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                entries.push(f(r, c));
            }
        }
        MatrixField { rows, cols, entries }
    }

    pub fn from_const(m: &DMatrix<f64>) -> Self {
        MatrixField::from_fn(m.nrows(), m.ncols(), |r, c| ScalarField::constant(m[(r, c)]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, r: usize, c: usize) -> &ScalarField {
        &self.entries[r * self.cols + c]
    }

    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut ScalarField {
        &mut self.entries[r * self.cols + c]
    }

    pub fn transpose(&self) -> Self {
        MatrixField::from_fn(self.cols, self.rows, |r, c| self.at(c, r).clone())
    }

    pub fn add(&self, o: &Self) -> Self {
        MatrixField::from_fn(self.rows, self.cols, |r, c| self.at(r, c) + o.at(r, c))
    }

    pub fn sub(&self, o: &Self) -> Self {
        MatrixField::from_fn(self.rows, self.cols, |r, c| self.at(r, c) - o.at(r, c))
    }

    pub fn neg(&self) -> Self {
        MatrixField::from_fn(self.rows, self.cols, |r, c| -self.at(r, c))
    }

    pub fn scale(&self, s: &ScalarField) -> Self {
        MatrixField::from_fn(self.rows, self.cols, |r, c| self.at(r, c) * s)
    }

    pub fn matmul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows);
        MatrixField::from_fn(self.rows, o.cols, |r, c| {
            sum((0..self.cols).map(|k| self.at(r, k) * o.at(k, c)))
        })
    }

    /// Commutator [A, B] = AB - BA.
    pub fn commutator(&self, o: &Self) -> Self {
        self.matmul(o).sub(&o.matmul(self))
    }

    pub fn apply_vector(&self, x: &VectorField) -> VectorField {
        assert_eq!(self.cols, x.len());
        VectorField {
            comps: (0..self.rows)
                .map(|r| sum((0..self.cols).map(|c| self.at(r, c) * &x.comps[c])))
                .collect(),
        }
    }

    pub fn trace(&self) -> ScalarField {
        sum((0..self.rows.min(self.cols)).map(|i| self.at(i, i).clone()))
    }

    /// Entrywise formal derivative along coordinate `i`.
    pub fn deriv(&self, i: usize) -> Self {
        MatrixField::from_fn(self.rows, self.cols, |r, c| self.at(r, c).deriv(i))
    }

    /// Assemble a square matrix from four equally sized blocks.
    pub fn from_blocks(ul: &Self, ur: &Self, ll: &Self, lr: &Self) -> Self {
        let n = ul.rows;
        assert!(ul.cols == n && ur.rows == n && ll.rows == n && lr.rows == n);
        MatrixField::from_fn(2 * n, 2 * n, |r, c| {
            match (r < n, c < n) {
                (true, true) => ul.at(r, c).clone(),
                (true, false) => ur.at(r, c - n).clone(),
                (false, true) => ll.at(r - n, c).clone(),
                (false, false) => lr.at(r - n, c - n).clone(),
            }
        })
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        MatrixField::from_fn(rows, cols, |r, c| self.at(r0 + r, c0 + c).clone())
    }

    /// Closed-form inverse by cofactor expansion, for n <= 4.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.rows;
        assert_eq!(n, self.cols);
        if n > 4 {
            return Err(GeoError::InverseTooLarge(n));
        }
        let det = self.det_expr();
        let inv_det = det.recip();
        Ok(MatrixField::from_fn(n, n, |r, c| {
            // adjugate: cofactor of (c, r)
            let minor = self.minor_det(c, r);
            let sign = if (r + c) % 2 == 0 { 1.0 } else { -1.0 };
            &(&minor * &ScalarField::constant(sign)) * &inv_det
        }))
    }

    fn minor_det(&self, skip_r: usize, skip_c: usize) -> ScalarField {
        let n = self.rows;
        let rows: Vec<usize> = (0..n).filter(|&r| r != skip_r).collect();
        let cols: Vec<usize> = (0..n).filter(|&c| c != skip_c).collect();
        let sub = MatrixField::from_fn(n - 1, n - 1, |r, c| self.at(rows[r], cols[c]).clone());
        sub.det_expr()
    }

    fn det_expr(&self) -> ScalarField {
        let n = self.rows;
        match n {
            1 => self.at(0, 0).clone(),
            2 => self.at(0, 0) * self.at(1, 1) - self.at(0, 1) * self.at(1, 0),
            _ => {
                let mut acc = ScalarField::zero();
                for c in 0..n {
                    let term = self.at(0, c) * &self.minor_det(0, c);
                    let signed = if c % 2 == 0 { term } else { -&term };
                    acc = &acc + &signed;
                }
                acc
            }
        }
    }

    pub fn eval(&self, ctx: &mut EvalCtx) -> Result<DMatrix<f64>> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                m[(r, c)] = ctx.value(self.at(r, c))?;
            }
        }
        Ok(m)
    }

    pub fn eval_at(&self, dim: usize, p: &[f64]) -> Result<DMatrix<f64>> {
        let mut ctx = EvalCtx::new(dim, p);
        self.eval(&mut ctx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn inverse_of_position_dependent_matrix() {
        // diag(1 + x1^2, 2, 1, 1) with an off-diagonal coupling
        let mut g = MatrixField::identity(4);
        *g.at_mut(0, 0) = ScalarField::one() + ScalarField::coord(0).powi(2);
        *g.at_mut(1, 1) = ScalarField::constant(2.0);
        *g.at_mut(0, 1) = ScalarField::coord(2) * ScalarField::constant(0.25);
        *g.at_mut(1, 0) = g.at(0, 1).clone();
        let inv = g.inverse().unwrap();
        let prod = g.matmul(&inv);
        let p = [0.7, -0.3, 1.1, 0.2];
        let m = prod.eval_at(4, &p).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let want = if r == c { 1.0 } else { 0.0 };
                assert_relative_eq!(m[(r, c)], want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn commutator_of_constants() {
        let a = MatrixField::from_const(&DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]));
        let b = MatrixField::from_const(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]));
        let c = a.commutator(&b);
        let m = c.eval_at(2, &[0.0, 0.0]).unwrap();
        assert_relative_eq!(m[(0, 1)], 2.0);
        assert_relative_eq!(m[(1, 0)], 2.0);
    }
}
