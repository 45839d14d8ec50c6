//! Order-2 jets: forward-mode value/gradient/Hessian arithmetic.
//!
//! Every tensor derivative the engine needs (Christoffel symbols and their
//! first derivatives, Nijenhuis tensors, derivatives of the structure
//! endomorphisms up to second order) is assembled from jets of the input
//! expressions, so no finite differencing enters the primary evaluation path.
//! Hessians are built symmetric term by term; no symmetrization pass is
//! applied afterwards, and a dedicated test asserts exact symmetry.

use nalgebra::{DMatrix, DVector};

use crate::expr::{EvalError, ScalarExpr, UnaryFn};

/// Value, gradient, and Hessian of a scalar function at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

impl Jet2 {
    /// Jet of the constant function `v`.
    pub fn constant(dim: usize, v: f64) -> Self {
        Self {
            value: v,
            grad: DVector::zeros(dim),
            hess: DMatrix::zeros(dim, dim),
        }
    }

    /// Jet of the `i`-th coordinate function at a point where it equals `v`.
    pub fn coordinate(dim: usize, i: usize, v: f64) -> Self {
        let mut grad = DVector::zeros(dim);
        grad[i] = 1.0;
        Self {
            value: v,
            grad,
            hess: DMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    fn add(&self, rhs: &Self) -> Self {
        Self {
            value: self.value + rhs.value,
            grad: &self.grad + &rhs.grad,
            hess: &self.hess + &rhs.hess,
        }
    }

    fn sub(&self, rhs: &Self) -> Self {
        Self {
            value: self.value - rhs.value,
            grad: &self.grad - &rhs.grad,
            hess: &self.hess - &rhs.hess,
        }
    }

    fn neg(&self) -> Self {
        Self {
            value: -self.value,
            grad: -&self.grad,
            hess: -&self.hess,
        }
    }

    /// Product rule. The rank-one terms are accumulated as
    /// `a_i b_j + b_i a_j`, which is symmetric entry by entry.
    fn mul(&self, rhs: &Self) -> Self {
        let cross = &self.grad * rhs.grad.transpose();
        let hess = &self.hess * rhs.value + &rhs.hess * self.value + &cross + cross.transpose();
        Self {
            value: self.value * rhs.value,
            grad: &self.grad * rhs.value + &rhs.grad * self.value,
            hess,
        }
    }

    /// Chain rule through a scalar function given `(f(u), f'(u), f''(u))`.
    /// The `f'' * grad ⊗ grad` term is an exact outer product, hence symmetric.
    fn chain(&self, f: f64, df: f64, d2f: f64) -> Self {
        let outer = &self.grad * self.grad.transpose();
        Self {
            value: f,
            grad: &self.grad * df,
            hess: &self.hess * df + outer * d2f,
        }
    }

    fn div(&self, rhs: &Self) -> Result<Self, EvalError> {
        if rhs.value == 0.0 {
            return Err(EvalError::DivisionByZero);
        }
        let b = rhs.value;
        // Reciprocal jet of rhs via the chain rule, then a product.
        let recip = rhs.chain(1.0 / b, -1.0 / (b * b), 2.0 / (b * b * b));
        Ok(self.mul(&recip))
    }

    fn powi(&self, n: i32) -> Result<Self, EvalError> {
        let u = self.value;
        if u == 0.0 && n < 0 {
            return Err(EvalError::ZeroToNegativePower { exponent: n });
        }
        let f = u.powi(n);
        let nf = n as f64;
        let df = if n == 0 { 0.0 } else { nf * u.powi(n - 1) };
        // n(n-1) == 0 short-circuits so 0^{n-2} is never touched for n in {0,1}.
        let d2f = if n == 0 || n == 1 {
            0.0
        } else {
            nf * (nf - 1.0) * u.powi(n - 2)
        };
        Ok(self.chain(f, df, d2f))
    }

    fn apply(&self, func: UnaryFn) -> Result<Self, EvalError> {
        let u = self.value;
        let (f, df, d2f) = match func {
            UnaryFn::Exp => {
                let e = u.exp();
                (e, e, e)
            }
            UnaryFn::Log => {
                if u <= 0.0 {
                    return Err(EvalError::Domain { func: "log", arg: u });
                }
                (u.ln(), 1.0 / u, -1.0 / (u * u))
            }
            UnaryFn::Sin => (u.sin(), u.cos(), -u.sin()),
            UnaryFn::Cos => (u.cos(), -u.sin(), -u.cos()),
            UnaryFn::Sinh => (u.sinh(), u.cosh(), u.sinh()),
            UnaryFn::Cosh => (u.cosh(), u.sinh(), u.cosh()),
            UnaryFn::Tanh => {
                let t = u.tanh();
                let sech2 = 1.0 - t * t;
                (t, sech2, -2.0 * t * sech2)
            }
            UnaryFn::Sqrt => {
                // Jets need u > 0 strictly: the derivative blows up at 0.
                if u <= 0.0 {
                    return Err(EvalError::Domain { func: "sqrt", arg: u });
                }
                let s = u.sqrt();
                (s, 0.5 / s, -0.25 / (s * u))
            }
        };
        Ok(self.chain(f, df, d2f))
    }
}

/// Evaluate the order-2 jet of `expr` at `point`. Domain violations surface
/// as the same [`EvalError`] variants plain evaluation produces; any
/// non-finite value, gradient, or Hessian entry is reported as
/// [`EvalError::NonFinite`].
pub fn eval_jet(expr: &ScalarExpr, point: &[f64]) -> Result<Jet2, EvalError> {
    let jet = eval_jet_inner(expr, point)?;
    let finite = jet.value.is_finite()
        && jet.grad.iter().all(|v| v.is_finite())
        && jet.hess.iter().all(|v| v.is_finite());
    if finite {
        Ok(jet)
    } else {
        Err(EvalError::NonFinite)
    }
}

fn eval_jet_inner(expr: &ScalarExpr, point: &[f64]) -> Result<Jet2, EvalError> {
    let dim = point.len();
    Ok(match expr {
        ScalarExpr::Const(c) => Jet2::constant(dim, *c),
        ScalarExpr::Coord(i) => Jet2::coordinate(dim, *i, point[*i]),
        ScalarExpr::Add(a, b) => eval_jet_inner(a, point)?.add(&eval_jet_inner(b, point)?),
        ScalarExpr::Sub(a, b) => eval_jet_inner(a, point)?.sub(&eval_jet_inner(b, point)?),
        ScalarExpr::Mul(a, b) => eval_jet_inner(a, point)?.mul(&eval_jet_inner(b, point)?),
        ScalarExpr::Div(a, b) => eval_jet_inner(a, point)?.div(&eval_jet_inner(b, point)?)?,
        ScalarExpr::Neg(a) => eval_jet_inner(a, point)?.neg(),
        ScalarExpr::Pow(a, n) => eval_jet_inner(a, point)?.powi(*n)?,
        ScalarExpr::Apply(f, a) => eval_jet_inner(a, point)?.apply(*f)?,
    })
}
