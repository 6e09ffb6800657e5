//! Closed-form scalar fields as shared expression DAGs.
//!
//! A [`ScalarField`] is a composition of arithmetic, integer powers,
//! reciprocals, sin/cos and formal partial derivatives of other fields.
//! Evaluation produces a [`Jet`] by forward-mode rule application; a
//! `Deriv` node is evaluated by computing its operand one order higher
//! and extracting the directional part. Nodes are reference-counted and
//! evaluation memoizes on node identity, so heavily shared DAGs (matrix
//! products, nested brackets) evaluate in time linear in their size.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use crate::error::{GeoError, Result};
use crate::jet::{Jet, MAX_ORDER};

#[derive(Debug)]
enum Node {
    Const(f64),
    Coord(usize),
    Add(ScalarField, ScalarField),
    Sub(ScalarField, ScalarField),
    Mul(ScalarField, ScalarField),
    Div(ScalarField, ScalarField),
    Neg(ScalarField),
    Powi(ScalarField, i32),
    Sin(ScalarField),
    Cos(ScalarField),
    Deriv(ScalarField, usize),
}

/// A smooth scalar-valued field on a coordinate chart. Cloning is cheap.
#[derive(Clone)]
pub struct ScalarField(Arc<Node>);

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            Node::Const(c) => write!(f, "{c}"),
            Node::Coord(i) => write!(f, "x{}", i + 1),
            Node::Add(a, b) => write!(f, "({a:?} + {b:?})"),
            Node::Sub(a, b) => write!(f, "({a:?} - {b:?})"),
            Node::Mul(a, b) => write!(f, "({a:?} * {b:?})"),
            Node::Div(a, b) => write!(f, "({a:?} / {b:?})"),
            Node::Neg(a) => write!(f, "(-{a:?})"),
            Node::Powi(a, n) => write!(f, "{a:?}^{n}"),
            Node::Sin(a) => write!(f, "sin({a:?})"),
            Node::Cos(a) => write!(f, "cos({a:?})"),
            Node::Deriv(a, i) => write!(f, "d{}({a:?})", i + 1),
        }
    }
}

impl ScalarField {
    fn new(n: Node) -> Self {
        ScalarField(Arc::new(n))
    }

    pub fn constant(c: f64) -> Self {
        ScalarField::new(Node::Const(c))
    }

    pub fn zero() -> Self {
        ScalarField::constant(0.0)
    }

    pub fn one() -> Self {
        ScalarField::constant(1.0)
    }

    /// The coordinate function x^{i+1} (0-based index).
    pub fn coord(i: usize) -> Self {
        ScalarField::new(Node::Coord(i))
    }

    pub fn as_const(&self) -> Option<f64> {
        match &*self.0 {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.as_const(), Some(c) if c == 0.0)
    }

    pub fn sin(&self) -> Self {
        if let Some(c) = self.as_const() {
            return ScalarField::constant(c.sin());
        }
        ScalarField::new(Node::Sin(self.clone()))
    }

    pub fn cos(&self) -> Self {
        if let Some(c) = self.as_const() {
            return ScalarField::constant(c.cos());
        }
        ScalarField::new(Node::Cos(self.clone()))
    }

    pub fn powi(&self, n: i32) -> Self {
        match n {
            0 => ScalarField::one(),
            1 => self.clone(),
            _ => {
                if let Some(c) = self.as_const() {
                    return ScalarField::constant(c.powi(n));
                }
                ScalarField::new(Node::Powi(self.clone(), n))
            }
        }
    }

    pub fn recip(&self) -> Self {
        self.powi(-1)
    }

    /// Formal partial derivative along coordinate `i`, evaluated by rule
    /// application at one jet order higher.
    pub fn deriv(&self, i: usize) -> Self {
        match &*self.0 {
            Node::Const(_) => ScalarField::zero(),
            Node::Coord(j) => ScalarField::constant(if *j == i { 1.0 } else { 0.0 }),
            Node::Neg(a) => -&a.deriv(i),
            Node::Add(a, b) => &a.deriv(i) + &b.deriv(i),
            Node::Sub(a, b) => &a.deriv(i) - &b.deriv(i),
            _ => ScalarField::new(Node::Deriv(self.clone(), i)),
        }
    }

    fn key(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    /// One-off jet evaluation. For batched work share an [`EvalCtx`].
    pub fn eval_jet(&self, dim: usize, point: &[f64], order: u8) -> Result<Jet> {
        let mut ctx = EvalCtx::new(dim, point);
        ctx.eval(self, order)
    }

    /// Plain value at a point.
    pub fn eval(&self, dim: usize, point: &[f64]) -> Result<f64> {
        Ok(self.eval_jet(dim, point, 0)?.value())
    }
}

fn fold2(a: &ScalarField, b: &ScalarField) -> Option<(f64, f64)> {
    Some((a.as_const()?, b.as_const()?))
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        if let Some((a, b)) = fold2(self, rhs) {
            return ScalarField::constant(a + b);
        }
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        ScalarField::new(Node::Add(self.clone(), rhs.clone()))
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        if let Some((a, b)) = fold2(self, rhs) {
            return ScalarField::constant(a - b);
        }
        if rhs.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return -rhs;
        }
        ScalarField::new(Node::Sub(self.clone(), rhs.clone()))
    }
}

impl Mul for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: &ScalarField) -> ScalarField {
        if let Some((a, b)) = fold2(self, rhs) {
            return ScalarField::constant(a * b);
        }
        if self.is_zero() || rhs.is_zero() {
            return ScalarField::zero();
        }
        if let Some(1.0) = self.as_const() {
            return rhs.clone();
        }
        if let Some(1.0) = rhs.as_const() {
            return self.clone();
        }
        ScalarField::new(Node::Mul(self.clone(), rhs.clone()))
    }
}

impl Div for &ScalarField {
    type Output = ScalarField;
    fn div(self, rhs: &ScalarField) -> ScalarField {
        if let Some((a, b)) = fold2(self, rhs) {
            return ScalarField::constant(a / b);
        }
        if self.is_zero() {
            return ScalarField::zero();
        }
        if let Some(1.0) = rhs.as_const() {
            return self.clone();
        }
        ScalarField::new(Node::Div(self.clone(), rhs.clone()))
    }
}

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        if let Some(a) = self.as_const() {
            return ScalarField::constant(-a);
        }
        ScalarField::new(Node::Neg(self.clone()))
    }
}

macro_rules! owned_ops {
    ($($tr:ident :: $f:ident),*) => {$(
        impl $tr for ScalarField {
            type Output = ScalarField;
            fn $f(self, rhs: ScalarField) -> ScalarField { $tr::$f(&self, &rhs) }
        }
        impl $tr<&ScalarField> for ScalarField {
            type Output = ScalarField;
            fn $f(self, rhs: &ScalarField) -> ScalarField { $tr::$f(&self, rhs) }
        }
        impl $tr<ScalarField> for &ScalarField {
            type Output = ScalarField;
            fn $f(self, rhs: ScalarField) -> ScalarField { $tr::$f(self, &rhs) }
        }
    )*};
}
owned_ops!(Add::add, Sub::sub, Mul::mul, Div::div);

impl Neg for ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        -&self
    }
}

/// Memoizing jet evaluator for one point. Reuse across many fields at the
/// same point to share the work of common sub-DAGs.
pub struct EvalCtx<'a> {
    dim: usize,
    point: &'a [f64],
    /// Keyed by node address; each entry keeps its node alive so addresses
    /// cannot be reused while the context exists.
    cache: HashMap<(usize, u8), (ScalarField, Jet)>,
}

impl<'a> EvalCtx<'a> {
    pub fn new(dim: usize, point: &'a [f64]) -> Self {
        debug_assert_eq!(dim, point.len());
        EvalCtx { dim, point, cache: HashMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&mut self, f: &ScalarField, order: u8) -> Result<Jet> {
        if order > MAX_ORDER {
            return Err(GeoError::JetOrderExceeded(order));
        }
        let key = (f.key(), order);
        if let Some((_, j)) = self.cache.get(&key) {
            return Ok(j.clone());
        }
        let jet = match &*f.0 {
            Node::Const(c) => Jet::constant(self.dim, order, *c),
            Node::Coord(i) => {
                if *i >= self.dim {
                    return Err(GeoError::PointDimension { got: self.dim, want: *i + 1 });
                }
                Jet::coordinate(self.dim, order, *i, self.point[*i])
            }
            Node::Add(a, b) => self.eval(a, order)?.add(&self.eval(b, order)?),
            Node::Sub(a, b) => self.eval(a, order)?.sub(&self.eval(b, order)?),
            Node::Mul(a, b) => self.eval(a, order)?.mul(&self.eval(b, order)?),
            Node::Div(a, b) => self.eval(a, order)?.div(&self.eval(b, order)?),
            Node::Neg(a) => self.eval(a, order)?.neg(),
            Node::Powi(a, n) => self.eval(a, order)?.powi(*n),
            Node::Sin(a) => self.eval(a, order)?.sin(),
            Node::Cos(a) => self.eval(a, order)?.cos(),
            Node::Deriv(a, i) => self.eval(a, order + 1)?.extract_deriv(*i)?,
        };
        self.cache.insert(key, (f.clone(), jet.clone()));
        Ok(jet)
    }

    pub fn value(&mut self, f: &ScalarField) -> Result<f64> {
        Ok(self.eval(f, 0)?.value())
    }
}

/// Sum of a list of fields.
pub fn sum(fields: impl IntoIterator<Item = ScalarField>) -> ScalarField {
    fields.into_iter().fold(ScalarField::zero(), |a, b| &a + &b)
}

/// |x|^2 on an m-dimensional chart.
pub fn norm2(m: usize) -> ScalarField {
    sum((0..m).map(|i| ScalarField::coord(i).powi(2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_jet() {
        // f = x1*x2 at (2,3): value 6, d1 = 3, d2 = 2
        let f = ScalarField::coord(0) * ScalarField::coord(1);
        let j = f.eval_jet(2, &[2.0, 3.0], 1).unwrap();
        assert_eq!(j.value(), 6.0);
        assert_eq!(j.grad(0), 3.0);
        assert_eq!(j.grad(1), 2.0);
    }

    #[test]
    fn constant_has_zero_partials() {
        let f = ScalarField::constant(4.25);
        let j = f.eval_jet(3, &[1.0, 2.0, 3.0], 3).unwrap();
        assert_eq!(j.value(), 4.25);
        for i in 0..3 {
            assert_eq!(j.grad(i), 0.0);
            assert_eq!(j.d3(i, i, i), 0.0);
        }
    }

    #[test]
    fn reciprocal_norm_on_punctured_chart() {
        let f = norm2(4).recip();
        let j = f.eval_jet(4, &[1.0, 0.0, 0.0, 0.0], 1).unwrap();
        assert_relative_eq!(j.value(), 1.0);
        assert_relative_eq!(j.grad(0), -2.0);
    }

    #[test]
    fn deriv_node_matches_hand_derivative() {
        // d/dx1 of x1^2 * x2 = 2 x1 x2
        let f = ScalarField::coord(0).powi(2) * ScalarField::coord(1);
        let d = f.deriv(0);
        let p = [1.7, -0.4];
        let v = d.eval(2, &p).unwrap();
        assert_relative_eq!(v, 2.0 * p[0] * p[1], epsilon = 1e-14);
    }

    #[test]
    fn nested_deriv_hits_order_cap() {
        let f = ScalarField::coord(0).powi(5).sin();
        let d4 = f.deriv(0).deriv(0).deriv(0).deriv(0);
        let err = d4.eval(1, &[0.3]).unwrap_err();
        assert!(matches!(err, GeoError::JetOrderExceeded(_)));
    }

    #[test]
    fn mixed_partials_exactly_symmetric() {
        let f = (ScalarField::coord(0) * ScalarField::coord(1)).sin()
            * norm2(3).recip();
        let j = f.eval_jet(3, &[0.9, -1.1, 0.5], 3).unwrap();
        // symmetric by storage: accessors with permuted indices agree exactly
        assert_eq!(j.d3(0, 1, 2), j.d3(2, 0, 1));
        assert_eq!(j.d2(0, 2), j.d2(2, 0));
    }
}
