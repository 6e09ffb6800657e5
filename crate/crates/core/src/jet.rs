//! Truncated multivariate Taylor arithmetic up to order 3.
//!
//! A [`Jet`] stores the value of a function together with its raw partial
//! derivatives up to a requested order, in symmetric storage (one slot per
//! nondecreasing index tuple). All arithmetic propagates derivatives by the
//! Leibniz rule, so results are exact to rounding — no finite differencing
//! anywhere.

use crate::error::{GeoError, Result};

pub const MAX_ORDER: u8 = 3;

/// Number of nondecreasing pairs in `m` variables.
#[inline]
pub fn n2(m: usize) -> usize {
    m * (m + 1) / 2
}

/// Number of nondecreasing triples in `m` variables.
#[inline]
pub fn n3(m: usize) -> usize {
    m * (m + 1) * (m + 2) / 6
}

/// Storage index of the pair (i, j) with i <= j.
#[inline]
pub fn idx2(m: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < m);
    i * m - i * (i + 1) / 2 + j
}

/// Storage index of the triple (i, j, k) with i <= j <= k.
#[inline]
pub fn idx3(m: usize, i: usize, j: usize, k: usize) -> usize {
    debug_assert!(i <= j && j <= k && k < m);
    // triples with first index < i, then pairs (j-i, k-i) in m-i variables
    let mut off = 0;
    for a in 0..i {
        off += n2(m - a);
    }
    off + idx2(m - i, j - i, k - i)
}

/// Value plus partial derivatives up to `order` in `dim` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    dim: usize,
    order: u8,
    c0: f64,
    c1: Vec<f64>,
    c2: Vec<f64>,
    c3: Vec<f64>,
}

impl Jet {
    pub fn constant(dim: usize, order: u8, v: f64) -> Self {
        debug_assert!(order <= MAX_ORDER);
        Jet {
            dim,
            order,
            c0: v,
            c1: if order >= 1 { vec![0.0; dim] } else { Vec::new() },
            c2: if order >= 2 { vec![0.0; n2(dim)] } else { Vec::new() },
            c3: if order >= 3 { vec![0.0; n3(dim)] } else { Vec::new() },
        }
    }

    /// The coordinate function x^i seeded at value `v`.
    pub fn coordinate(dim: usize, order: u8, i: usize, v: f64) -> Self {
        let mut j = Jet::constant(dim, order, v);
        if order >= 1 {
            j.c1[i] = 1.0;
        }
        j
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.c0
    }

    pub fn grad(&self, i: usize) -> f64 {
        self.c1[i]
    }

    /// Raw second partial \u{2202}_i\u{2202}_j f (indices in any order).
    pub fn d2(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.c2[idx2(self.dim, a, b)]
    }

    /// Raw third partial (indices in any order).
    pub fn d3(&self, i: usize, j: usize, k: usize) -> f64 {
        let mut t = [i, j, k];
        t.sort_unstable();
        self.c3[idx3(self.dim, t[0], t[1], t[2])]
    }

    /// Partial derivative for a sorted multi-index of length 0..=3.
    fn part(&self, idx: &[usize]) -> f64 {
        match idx.len() {
            0 => self.c0,
            1 => self.c1[idx[0]],
            2 => self.c2[idx2(self.dim, idx[0], idx[1])],
            3 => self.c3[idx3(self.dim, idx[0], idx[1], idx[2])],
            _ => unreachable!(),
        }
    }

    /// The jet of \u{2202}_i f, one order lower.
    pub fn extract_deriv(&self, i: usize) -> Result<Jet> {
        if self.order == 0 {
            return Err(GeoError::JetOrderExceeded(0));
        }
        let m = self.dim;
        let order = self.order - 1;
        let mut out = Jet::constant(m, order, self.c1[i]);
        if order >= 1 {
            for j in 0..m {
                out.c1[j] = self.d2(i, j);
            }
        }
        if order >= 2 {
            for j in 0..m {
                for k in j..m {
                    out.c2[idx2(m, j, k)] = self.d3(i, j, k);
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, o: &Jet) -> Jet {
        self.zip(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &Jet) -> Jet {
        self.zip(o, |a, b| a - b)
    }

    pub fn neg(&self) -> Jet {
        self.map(|a| -a)
    }

    pub fn scale(&self, s: f64) -> Jet {
        self.map(|a| a * s)
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Jet {
        Jet {
            dim: self.dim,
            order: self.order,
            c0: f(self.c0),
            c1: self.c1.iter().map(|&a| f(a)).collect(),
            c2: self.c2.iter().map(|&a| f(a)).collect(),
            c3: self.c3.iter().map(|&a| f(a)).collect(),
        }
    }

    fn zip(&self, o: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        debug_assert_eq!(self.dim, o.dim);
        debug_assert_eq!(self.order, o.order);
        Jet {
            dim: self.dim,
            order: self.order,
            c0: f(self.c0, o.c0),
            c1: self.c1.iter().zip(&o.c1).map(|(&a, &b)| f(a, b)).collect(),
            c2: self.c2.iter().zip(&o.c2).map(|(&a, &b)| f(a, b)).collect(),
            c3: self.c3.iter().zip(&o.c3).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Truncated Leibniz product.
    pub fn mul(&self, o: &Jet) -> Jet {
        debug_assert_eq!(self.dim, o.dim);
        debug_assert_eq!(self.order, o.order);
        let m = self.dim;
        let mut r = Jet::constant(m, self.order, self.c0 * o.c0);
        if self.order >= 1 {
            for i in 0..m {
                r.c1[i] = self.c0 * o.c1[i] + self.c1[i] * o.c0;
            }
        }
        if self.order >= 2 {
            for i in 0..m {
                for j in i..m {
                    r.c2[idx2(m, i, j)] = self.c0 * o.d2(i, j)
                        + self.d2(i, j) * o.c0
                        + self.c1[i] * o.c1[j]
                        + self.c1[j] * o.c1[i];
                }
            }
        }
        if self.order >= 3 {
            for i in 0..m {
                for j in i..m {
                    for k in j..m {
                        let idx = [i, j, k];
                        let mut acc = 0.0;
                        // Leibniz over the 8 position subsets of (i,j,k)
                        for s in 0..8u8 {
                            let mut left: Vec<usize> = Vec::with_capacity(3);
                            let mut right: Vec<usize> = Vec::with_capacity(3);
                            for (pos, &ix) in idx.iter().enumerate() {
                                if s & (1 << pos) != 0 {
                                    left.push(ix);
                                } else {
                                    right.push(ix);
                                }
                            }
                            acc += self.part(&left) * o.part(&right);
                        }
                        r.c3[idx3(m, i, j, k)] = acc;
                    }
                }
            }
        }
        r
    }

    /// Compose a univariate function given its derivatives at the base value:
    /// `d = [f(a), f'(a), f''(a), f'''(a)]` truncated to the jet order.
    pub fn compose1(&self, d: [f64; 4]) -> Jet {
        let m = self.dim;
        let ord = self.order;
        // w = self - value (nilpotent part)
        let mut w = self.clone();
        w.c0 = 0.0;
        let mut acc = Jet::constant(m, ord, d[0]);
        if ord >= 1 {
            acc = acc.add(&w.scale(d[1]));
        }
        if ord >= 2 {
            let w2 = w.mul(&w);
            acc = acc.add(&w2.scale(d[2] / 2.0));
            if ord >= 3 {
                let w3 = w2.mul(&w);
                acc = acc.add(&w3.scale(d[3] / 6.0));
            }
        }
        acc
    }

    pub fn recip(&self) -> Jet {
        let a = self.c0;
        self.compose1([1.0 / a, -1.0 / (a * a), 2.0 / (a * a * a), -6.0 / (a * a * a * a)])
    }

    pub fn div(&self, o: &Jet) -> Jet {
        self.mul(&o.recip())
    }

    pub fn sin(&self) -> Jet {
        let a = self.c0;
        self.compose1([a.sin(), a.cos(), -a.sin(), -a.cos()])
    }

    pub fn cos(&self) -> Jet {
        let a = self.c0;
        self.compose1([a.cos(), -a.sin(), -a.cos(), a.sin()])
    }

    pub fn powi(&self, n: i32) -> Jet {
        if n == 0 {
            return Jet::constant(self.dim, self.order, 1.0);
        }
        let neg = n < 0;
        let mut k = n.unsigned_abs();
        let mut base = self.clone();
        let mut acc: Option<Jet> = None;
        while k > 0 {
            if k & 1 == 1 {
                acc = Some(match acc {
                    None => base.clone(),
                    Some(a) => a.mul(&base),
                });
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        let r = acc.unwrap();
        if neg {
            r.recip()
        } else {
            r
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn xy(dim: usize, order: u8, p: &[f64]) -> Vec<Jet> {
        (0..dim).map(|i| Jet::coordinate(dim, order, i, p[i])).collect()
    }

    #[test]
    fn product_rule_first_order() {
        let v = xy(2, 1, &[2.0, 3.0]);
        let f = v[0].mul(&v[1]); // x*y
        assert_eq!(f.value(), 6.0);
        assert_eq!(f.grad(0), 3.0);
        assert_eq!(f.grad(1), 2.0);
    }

    #[test]
    fn inverse_square_norm_partials() {
        // f = 1/|x|^2 on R^4 at (1,0,0,0): value 1, d1 = -2, d11 = 6, d22 = -2
        let p = [1.0, 0.0, 0.0, 0.0];
        let v = xy(4, 3, &p);
        let r2 = v.iter().fold(Jet::constant(4, 3, 0.0), |a, x| a.add(&x.mul(x)));
        let f = r2.recip();
        assert_relative_eq!(f.value(), 1.0);
        assert_relative_eq!(f.grad(0), -2.0);
        assert_relative_eq!(f.d2(0, 0), 6.0);
        assert_relative_eq!(f.d2(1, 1), -2.0);
        // d3_111 of r^-2 along the axis: d/dx (6 x^-4 ... ) hand value: f = x^-2 on axis
        // restricted to x1: f(x1,0,0,0) = x1^-2, f''' = -24 x1^-5 = -24
        assert_relative_eq!(f.d3(0, 0, 0), -24.0);
    }

    #[test]
    fn mixed_partials_symmetric_by_storage() {
        let p = [0.3, -1.2, 0.7];
        let v = xy(3, 3, &p);
        // f = sin(x0*x1) * x2 + x0^3
        let f = v[0].mul(&v[1]).sin().mul(&v[2]).add(&v[0].powi(3));
        assert_eq!(f.d2(0, 1), f.d2(1, 0));
        assert_eq!(f.d3(0, 1, 2), f.d3(2, 1, 0));
    }

    #[test]
    fn extract_deriv_matches_manual() {
        let p = [1.5, -0.5];
        let v = xy(2, 2, &p);
        let f = v[0].powi(2).mul(&v[1]); // x^2 y
        let fx = f.extract_deriv(0).unwrap(); // 2xy
        assert_relative_eq!(fx.value(), 2.0 * p[0] * p[1]);
        assert_relative_eq!(fx.grad(0), 2.0 * p[1]);
        assert_relative_eq!(fx.grad(1), 2.0 * p[0]);
    }

    #[test]
    fn division_consistent_with_multiplication() {
        let p = [0.8, 2.5];
        let v = xy(2, 3, &p);
        let f = v[0].add(&v[1].powi(2)); // x + y^2
        let g = v[1].add(&Jet::constant(2, 3, 3.0)); // y + 3
        let q = f.div(&g);
        let back = q.mul(&g);
        assert_relative_eq!(back.value(), f.value(), epsilon = 1e-12);
        assert_relative_eq!(back.d2(0, 1), f.d2(0, 1), epsilon = 1e-12);
        assert_relative_eq!(back.d3(1, 1, 1), f.d3(1, 1, 1), epsilon = 1e-12);
    }
}
