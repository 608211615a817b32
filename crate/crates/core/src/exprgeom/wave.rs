//! The conformally coupled wave operator `P_g = −□_g + R/6`.

use super::curvature::{curvature, CurvatureBundle};
use super::expr::Expr;
use super::spacetime::Spacetime;
use crate::error::Result;
use crate::linalg::Mat4;
use crate::scalar::Real;

/// `□f = g^ab (∂_a∂_b f − Γ^c_ab ∂_c f)` from the gradient and Hessian.
pub fn box_from_derivs<T: Real>(ginv: &Mat4<T>, gamma: &[Mat4<T>; 4], grad: &[T; 4], hess: &Mat4<T>) -> T {
    let mut acc = T::zero();
    for a in 0..4 {
        for b in 0..4 {
            let mut d2 = hess[a][b];
            for c in 0..4 {
                d2 -= gamma[c][a][b] * grad[c];
            }
            acc += ginv[a][b] * d2;
        }
    }
    acc
}

/// `P_g f` from the value, gradient and Hessian of `f`.
pub fn wave_from_derivs<T: Real>(curv: &CurvatureBundle<T>, value: T, grad: &[T; 4], hess: &Mat4<T>) -> T {
    -box_from_derivs(&curv.ginv, &curv.gamma, grad, hess) + curv.r * value / T::from_f64(6.0)
}

/// `(−□_g + R/6) f` at `p`, with the derivatives of `f` taken symbolically.
pub fn wave_operator_apply(st: &Spacetime, f: &Expr, p: &[f64; 4]) -> Result<f64> {
    let curv = curvature(st, p)?;
    let value = f.eval_f64(p)?;
    let grad_e: [Expr; 4] = std::array::from_fn(|a| f.diff(a));
    let mut grad = [0.0; 4];
    let mut hess = [[0.0; 4]; 4];
    for a in 0..4 {
        grad[a] = grad_e[a].eval_f64(p)?;
        for b in a..4 {
            hess[a][b] = grad_e[a].diff(b).eval_f64(p)?;
            hess[b][a] = hess[a][b];
        }
    }
    Ok(wave_from_derivs(&curv, value, &grad, &hess))
}
