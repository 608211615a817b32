//! Test functions with a numerical support box and a weight tag.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exprgeom::tape::Tape;
use crate::exprgeom::{CoordBox, Expr, Func, Spacetime};
use crate::scalar::Real;

/// Values below this on the boundary of the support box count as zero.
pub const SUPPORT_EPS: f64 = 1e-12;

/// Gaussian exponent that pushes a unit-amplitude bump below
/// [`SUPPORT_EPS`] on the faces of its box.
const BUMP_EXPONENT: f64 = 28.0;

/// A smooth function that is negligible outside `support`, tagged with the
/// conformal weight it is meant to be transported with.
#[derive(Clone, Debug)]
pub struct TestFunction {
    expr: Expr,
    support: CoordBox,
    weight: f64,
    tape: Arc<Tape>,
}

impl TestFunction {
    /// Checks that `expr` vanishes on the faces of `support`.
    pub fn new(expr: Expr, support: CoordBox, weight: f64) -> Result<Self> {
        let f = Self::unchecked(expr, support, weight);
        for p in support.boundary_grid(4) {
            let v = f.eval(&p)?;
            if v.abs() >= SUPPORT_EPS {
                return Err(Error::SupportEscapes(format!("|f| = {v:e} on the support boundary at {p:?}")));
            }
        }
        Ok(f)
    }

    pub(crate) fn unchecked(expr: Expr, support: CoordBox, weight: f64) -> Self {
        let tape = Arc::new(Tape::compile(std::slice::from_ref(&expr)));
        TestFunction { expr, support, weight, tape }
    }

    /// `amplitude · exp(−k Σ ((x_i − c_i)/h_i)²)` on the box `c ± h`, with `k`
    /// large enough that the faces are below the support threshold.
    pub fn bump(center: [f64; 4], half: [f64; 4], amplitude: f64) -> Self {
        Self::unchecked(gaussian(center, half, amplitude, amplitude.abs()), CoordBox::around(center, half), 0.0)
    }

    /// `bump · (1 + Σ t_i (x_i − c_i)/h_i)`, used to build random test
    /// functions.
    pub fn modulated_bump(center: [f64; 4], half: [f64; 4], amplitude: f64, tilt: [f64; 4]) -> Self {
        let bound = amplitude.abs() * (1.0 + tilt.iter().map(|t| t.abs()).sum::<f64>());
        let mut lin = Expr::num(1.0);
        for i in 0..4 {
            if tilt[i] != 0.0 {
                let d = Expr::sub(Expr::var(i), Expr::num(center[i]));
                lin = Expr::add(lin, Expr::mul(Expr::num(tilt[i] / half[i]), d));
            }
        }
        let e = Expr::mul(gaussian(center, half, amplitude, bound), lin);
        Self::unchecked(e, CoordBox::around(center, half), 0.0)
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn support(&self) -> &CoordBox {
        &self.support
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    pub fn with_expr(&self, expr: Expr) -> Self {
        Self::unchecked(expr, self.support, self.weight)
    }

    pub fn eval(&self, p: &[f64; 4]) -> Result<f64> {
        let mut out = [0.0];
        self.tape.eval(p, &mut out)?;
        Ok(out[0])
    }

    /// Value in any scalar type (a seeded jet gives the Taylor expansion).
    pub fn eval_generic<T: Real>(&self, p: &[T; 4]) -> Result<T> {
        let mut out = [T::zero()];
        self.tape.eval(p, &mut out)?;
        Ok(out[0])
    }

    /// Value with the support box applied: exactly zero outside it.
    pub fn eval_supported(&self, p: &[f64; 4]) -> Result<f64> {
        if self.support.contains(p) {
            self.eval(p)
        } else {
            Ok(0.0)
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.with_expr(Expr::mul(Expr::num(c), self.expr.clone()))
    }

    /// Pointwise product; the support is the intersection of the boxes.
    pub fn product(&self, other: &TestFunction) -> Result<Self> {
        let lo = std::array::from_fn(|i| self.support.lo[i].max(other.support.lo[i]));
        let hi = std::array::from_fn(|i| self.support.hi[i].min(other.support.hi[i]));
        let support = CoordBox::new(lo, hi).map_err(|_| Error::SupportEscapes("disjoint supports".into()))?;
        Ok(Self::unchecked(
            Expr::mul(self.expr.clone(), other.expr.clone()),
            support,
            self.weight + other.weight,
        ))
    }

    /// Requires the support to lie strictly inside the chart of `st`.
    pub fn check_inside(&self, st: &Spacetime) -> Result<()> {
        let d = st.domain();
        if (0..4).all(|i| self.support.lo[i] > d.lo[i] && self.support.hi[i] < d.hi[i]) {
            Ok(())
        } else {
            Err(Error::SupportEscapes(format!(
                "support {:?}..{:?} not strictly inside the chart of `{}`",
                self.support.lo,
                self.support.hi,
                st.name()
            )))
        }
    }

    /// Maximum of `|f|` on an interior grid of the support.
    pub fn sup_norm(&self, k: usize) -> Result<f64> {
        let mut m: f64 = 0.0;
        for p in self.support.interior_grid(k) {
            m = m.max(self.eval(&p)?.abs());
        }
        Ok(m)
    }
}

fn gaussian(center: [f64; 4], half: [f64; 4], amplitude: f64, bound: f64) -> Expr {
    let k = BUMP_EXPONENT + bound.max(1.0).ln();
    let mut quad = Expr::num(0.0);
    for i in 0..4 {
        let u = Expr::div(Expr::sub(Expr::var(i), Expr::num(center[i])), Expr::num(half[i]));
        quad = Expr::add(quad, Expr::pow(u, 2));
    }
    Expr::mul(Expr::num(amplitude), Expr::func(Func::Exp, Expr::mul(Expr::num(-k), quad)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_vanishes_on_its_box() {
        let f = TestFunction::bump([0.0, 0.1, 0.2, 0.3], [0.2, 0.3, 0.3, 0.3], 1.0);
        let g = TestFunction::new(f.expr().clone(), *f.support(), 0.0).unwrap();
        assert_eq!(g.eval(&[0.0, 0.1, 0.2, 0.3]).unwrap(), 1.0);
        assert_eq!(g.eval_supported(&[0.5, 0.1, 0.2, 0.3]).unwrap(), 0.0);
    }

    #[test]
    fn wide_function_is_rejected() {
        let e = crate::exprgeom::parse_expr("exp(-x1*x1)").unwrap();
        let b = CoordBox::new([-1.0; 4], [1.0; 4]).unwrap();
        assert!(matches!(TestFunction::new(e, b, 0.0), Err(Error::SupportEscapes(_))));
    }
}
