//! Transport of the Hadamard coefficients along the geodesic from `y` to `x`.
//!
//! With `z(t) = exp_y(t V)` we have `σ^a(z, y) ∇_a = t d/dt`, so the transport
//! equations become ODEs in `t`. Writing `□σ − 4 = −2t u'/u`, the recursion
//! for `v₀` and `v₁` integrates in closed form:
//!
//! ```text
//! u(x,y)  = 2 exp(−∫₀¹ (□σ − 4)/(2t) dt)
//! v₀(x,y) = u(x,y) ∫₀¹ (P u)/(2u) (z(t), y) dt
//! v₁(x,y) = u(x,y) ∫₀¹ t (P v₀)/(2u) (z(t), y) dt
//! ```
//!
//! `P u` and `P v₀` act on the first argument. They are evaluated from Taylor
//! jets of `u` and `v₀` in that argument, obtained by solving the shooting
//! problem in jet arithmetic.

use crate::error::{Error, Result};
use crate::exprgeom::curvature::curvature_at;
use crate::exprgeom::wave::{box_from_derivs, wave_from_derivs};
use crate::exprgeom::Spacetime;
use crate::jet::{Jet, Jet2};
use crate::linalg::{self, Mat4};
use crate::quad::gauss_legendre;
use crate::scalar::Real;
use crate::worldfn::geodesic::{christoffel, integrate, shoot};
use crate::worldfn::{vanvleck_from_jacobian, Flow, GeodesicConfig};

/// `u(z, y) = 2Δ^{1/2}(y, z)` and the initial velocity at `y`, with `z` given
/// in any scalar type (a seeded jet yields the expansion in `z`).
pub fn u_from_base<T: Real>(st: &Spacetime, y: &[f64; 4], z: [T; 4], guess: [f64; 4], cfg: &GeodesicConfig) -> Result<(T, [T; 4])> {
    let yb = y.map(T::from_f64);
    let (v, flow) = shoot(st, yb, z, guess.map(T::from_f64), cfg)?;
    let gy = st.metric(&yb)?;
    let gz = st.metric(&z)?;
    Ok((vanvleck_from_jacobian(&gy, &gz, &flow.j) * T::from_f64(2.0), v))
}

/// Gradient and Hessian of a jet, lowered to the jet of size `M`.
fn derivs<const N: usize, const M: usize>(f: &Jet<N>) -> ([Jet<M>; 4], Mat4<Jet<M>>) {
    let grad: [Jet<N>; 4] = std::array::from_fn(|a| f.partial(a));
    let hess = std::array::from_fn(|a| std::array::from_fn(|b| grad[a].partial(b).truncate::<M>()));
    (grad.map(|g| g.truncate::<M>()), hess)
}

/// `P_g f` as a jet of size `M` from a jet of size `N` (two orders higher)
/// expanded around `w0`.
pub fn wave_jet<const N: usize, const M: usize>(st: &Spacetime, w0: &[f64; 4], f: &Jet<N>) -> Result<Jet<M>> {
    let curv = curvature_at(st, &Jet::<M>::seed_point(w0))?;
    let (grad, hess) = derivs::<N, M>(f);
    Ok(wave_from_derivs(&curv, f.truncate::<M>(), &grad, &hess))
}

/// `(P u)/(2u)` at `(w, y)` as a jet of size `M` in `w` around `w0`, computed
/// from a jet of `u` of size `N`.
pub fn pu_over_2u<const N: usize, const M: usize>(
    st: &Spacetime,
    y: &[f64; 4],
    w0: &[f64; 4],
    guess: [f64; 4],
    cfg: &GeodesicConfig,
) -> Result<Jet<M>> {
    let (u, _) = u_from_base(st, y, Jet::<N>::seed_point(w0), guess, cfg)?;
    let pu = wave_jet::<N, M>(st, w0, &u)?;
    Ok(pu / (u.truncate::<M>() * Jet::<M>::constant(2.0)))
}

/// `v₀(x, y)` with `x` given as a jet of size `M`; the transported source
/// term is expanded with jets of size `N` (two orders higher).
pub fn v0_at<const N: usize, const M: usize>(
    st: &Spacetime,
    x: [Jet<M>; 4],
    y: &[f64; 4],
    nodes: usize,
    cfg: &GeodesicConfig,
) -> Result<Jet<M>> {
    let x0 = x.map(|c| c.value());
    let guess = std::array::from_fn(|a| x0[a] - y[a]);
    let (u, v) = u_from_base(st, y, x, guess, cfg)?;
    let (ts, ws) = gauss_legendre(nodes);
    let mut acc = Jet::<M>::constant(0.0);
    for (t, w) in ts.iter().zip(&ws) {
        let tv = v.map(|c| c * Jet::<M>::constant(*t));
        let z = integrate(st, y.map(Jet::<M>::constant), tv, cfg.steps, false)?.x;
        let z0 = z.map(|c| c.value());
        let q = pu_over_2u::<N, M>(st, y, &z0, tv.map(|c| c.value()), cfg)?;
        let shift: [Jet<M>; 4] = std::array::from_fn(|a| z[a] - Jet::<M>::constant(z0[a]));
        acc += q.compose(&shift) * Jet::<M>::constant(*w);
    }
    Ok(u * acc)
}

/// Plain value of `v₀(x, y)`.
pub fn v0_value(st: &Spacetime, x: &[f64; 4], y: &[f64; 4], nodes: usize, cfg: &GeodesicConfig) -> Result<f64> {
    Ok(v0_at::<15, 1>(st, x.map(Jet::<1>::constant), y, nodes, cfg)?.value())
}

/// `v₀(x, x) = (P u)(x, x)/2` from the zero-length geodesic.
pub fn v0_coincidence(st: &Spacetime, x: &[f64; 4], cfg: &GeodesicConfig) -> Result<f64> {
    let (u, _) = u_from_base(st, x, Jet2::seed_point(x), [0.0; 4], cfg)?;
    let pu = wave_jet::<15, 1>(st, x, &u)?;
    Ok(pu.value() / 2.0)
}

/// `v₁(x, x) = (P v₀)(x, x)/4`.
pub fn v1_coincidence(st: &Spacetime, x: &[f64; 4], nodes: usize, cfg: &GeodesicConfig) -> Result<f64> {
    let v0 = v0_at::<70, 15>(st, Jet2::seed_point(x), x, nodes, cfg)?;
    Ok(wave_jet::<15, 1>(st, x, &v0)?.value() / 4.0)
}

/// `v₁(x, x)` from the local curvature invariants,
/// `(R_abcd R^abcd − R_ab R^ab + □R)/360`.
pub fn v1_coincidence_local(st: &Spacetime, x: &[f64; 4]) -> Result<f64> {
    let c = curvature_at(st, &Jet2::seed_point(x))?;
    let ginv = c.ginv.map(|r| r.map(|v| v.value()));
    let gamma = c.gamma.map(|m| m.map(|r| r.map(|v| v.value())));
    let box_r = box_from_derivs(&ginv, &gamma, &c.r.gradient(), &c.r.hessian());
    Ok((c.riem2.value() - c.ric2.value() + box_r) / 360.0)
}

/// `v₁(x, y)` by transport along the geodesic from `y`.
pub fn v1_value(st: &Spacetime, x: &[f64; 4], y: &[f64; 4], nodes: usize, cfg: &GeodesicConfig) -> Result<f64> {
    let guess = std::array::from_fn(|a| x[a] - y[a]);
    let (u, v) = u_from_base(st, y, *x, guess, cfg)?;
    let (ts, ws) = gauss_legendre(nodes);
    let mut acc = 0.0;
    for (t, w) in ts.iter().zip(&ws) {
        let tv = v.map(|c| c * t);
        let z = integrate(st, *y, tv, cfg.steps, false)?.x;
        let v0 = v0_at::<70, 15>(st, Jet2::seed_point(&z), y, nodes, cfg)?;
        let pv0 = wave_jet::<15, 1>(st, &z, &v0)?.value();
        let (uz, _) = u_from_base(st, y, z, tv, cfg)?;
        acc += w * t * pv0 / (2.0 * uz);
    }
    Ok(u * acc)
}

/// `u(x, y)` by integrating `2t u' + (□σ − 4) u = 0` from `y`, with
/// `□σ(z(t), y) = t tr(K J⁻¹) + t Γ^a_ac ż^c`.
pub fn transport_u_ode(st: &Spacetime, x: &[f64; 4], y: &[f64; 4], cfg: &GeodesicConfig) -> Result<f64> {
    let guess = std::array::from_fn(|a| x[a] - y[a]);
    let (v, _) = shoot(st, *y, *x, guess, cfg)?;
    let integrand = |t: f64, s: &Flow<f64>| -> Result<f64> {
        if t == 0.0 {
            return Ok(0.0);
        }
        let gamma = christoffel(st, &s.x)?;
        let jinv = linalg::inverse(&s.j).map_err(|_| Error::Integration("conjugate point on the ray".into()))?;
        let mut b = t * linalg::trace(&linalg::mat_mul(&s.k, &jinv));
        for a in 0..4 {
            for c in 0..4 {
                b += t * gamma[a][a][c] * s.v[c];
            }
        }
        Ok((b - 4.0) / (2.0 * t))
    };
    // Simpson's rule on the flow sampled at half steps
    let n = cfg.steps;
    let h = 1.0 / n as f64;
    let path = crate::worldfn::geodesic::integrate_path(st, *y, v, 2 * n)?;
    let mut integral = 0.0;
    for i in 0..n {
        let t0 = i as f64 * h;
        let f0 = integrand(t0, &path[2 * i])?;
        let fm = integrand(t0 + 0.5 * h, &path[2 * i + 1])?;
        let f1 = integrand(t0 + h, &path[2 * i + 2])?;
        integral += h / 6.0 * (f0 + 4.0 * fm + f1);
    }
    Ok(2.0 * (-integral).exp())
}
