//! Geodesic flow with its variational equations, and the two-point shooting
//! problem.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exprgeom::curvature::christoffel_with_derivs;
use crate::exprgeom::Spacetime;
use crate::linalg::{self, Mat4};
use crate::scalar::Real;

/// Solver settings for geodesic integration and shooting.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicConfig {
    /// RK4 steps over the affine interval `[0, 1]`.
    pub steps: usize,
    /// Endpoint tolerance, relative to `1 + |y|`.
    pub newton_tol: f64,
    pub max_newton: usize,
}

impl Default for GeodesicConfig {
    fn default() -> Self {
        GeodesicConfig { steps: 24, newton_tol: 1e-13, max_newton: 40 }
    }
}

/// State of the geodesic flow at affine time `t`: position, velocity and
/// their derivatives with respect to the initial velocity
/// (`j[a][b] = ∂x^a/∂v0^b`, `k[a][b] = ∂ẋ^a/∂v0^b`).
#[derive(Clone, Copy, Debug)]
pub struct Flow<T> {
    pub x: [T; 4],
    pub v: [T; 4],
    pub j: Mat4<T>,
    pub k: Mat4<T>,
}

impl<T: Real> Flow<T> {
    fn start(base: [T; 4], v0: [T; 4]) -> Self {
        Flow { x: base, v: v0, j: linalg::zeros(), k: linalg::identity() }
    }

    fn axpy(&self, h: T, d: &Flow<T>) -> Flow<T> {
        Flow {
            x: std::array::from_fn(|a| self.x[a] + h * d.x[a]),
            v: std::array::from_fn(|a| self.v[a] + h * d.v[a]),
            j: std::array::from_fn(|a| std::array::from_fn(|b| self.j[a][b] + h * d.j[a][b])),
            k: std::array::from_fn(|a| std::array::from_fn(|b| self.k[a][b] + h * d.k[a][b])),
        }
    }
}

/// Christoffel symbols at a point.
pub fn christoffel<T: Real>(st: &Spacetime, x: &[T; 4]) -> Result<[Mat4<T>; 4]> {
    let m = st.metric_d2(x)?;
    let ginv = linalg::inverse(&m.g).map_err(|_| Error::DegenerateMetric(x.map(|v| v.re())))?;
    Ok(christoffel_with_derivs(&m, &ginv).0)
}

fn rhs<T: Real>(st: &Spacetime, s: &Flow<T>, variational: bool) -> Result<Flow<T>> {
    let m = st.metric_d2(&s.x)?;
    let ginv = linalg::inverse(&m.g).map_err(|_| Error::DegenerateMetric(s.x.map(|v| v.re())))?;
    let (gamma, dgamma) = christoffel_with_derivs(&m, &ginv);
    let two = T::from_f64(2.0);
    let mut acc = [T::zero(); 4];
    // gv[a][c] = Γ^a_bc v^b
    let mut gv = [[T::zero(); 4]; 4];
    for a in 0..4 {
        for c in 0..4 {
            let mut t = T::zero();
            for b in 0..4 {
                t += gamma[a][b][c] * s.v[b];
            }
            gv[a][c] = t;
        }
        let mut t = T::zero();
        for c in 0..4 {
            t += gv[a][c] * s.v[c];
        }
        acc[a] = -t;
    }
    let mut d = Flow { x: s.v, v: acc, j: s.k, k: linalg::zeros() };
    if variational {
        // dvv[a][e] = ∂_e Γ^a_bc v^b v^c
        let mut dvv = [[T::zero(); 4]; 4];
        for e in 0..4 {
            for a in 0..4 {
                let mut t = T::zero();
                for b in 0..4 {
                    let mut r = T::zero();
                    for c in 0..4 {
                        r += dgamma[e][a][b][c] * s.v[c];
                    }
                    t += r * s.v[b];
                }
                dvv[a][e] = t;
            }
        }
        for a in 0..4 {
            for col in 0..4 {
                let mut t = T::zero();
                for e in 0..4 {
                    t += dvv[a][e] * s.j[e][col] + two * gv[a][e] * s.k[e][col];
                }
                d.k[a][col] = -t;
            }
        }
    } else {
        d.j = linalg::zeros();
    }
    Ok(d)
}

fn rk4_step<T: Real>(st: &Spacetime, s: &Flow<T>, h: f64, variational: bool) -> Result<Flow<T>> {
    let hh = T::from_f64(h);
    let half = T::from_f64(0.5 * h);
    let k1 = rhs(st, s, variational)?;
    let k2 = rhs(st, &s.axpy(half, &k1), variational)?;
    let k3 = rhs(st, &s.axpy(half, &k2), variational)?;
    let k4 = rhs(st, &s.axpy(hh, &k3), variational)?;
    let sixth = T::from_f64(h / 6.0);
    let third = T::from_f64(h / 3.0);
    Ok(s.axpy(sixth, &k1).axpy(third, &k2).axpy(third, &k3).axpy(sixth, &k4))
}

/// Integrates the geodesic from `base` with initial velocity `v0` over
/// `[0, 1]`, with the variational equations when requested.
pub fn integrate<T: Real>(st: &Spacetime, base: [T; 4], v0: [T; 4], steps: usize, variational: bool) -> Result<Flow<T>> {
    if st.has_constant_metric() {
        return Ok(straight(base, v0, 1.0));
    }
    let mut s = Flow::start(base, v0);
    let h = 1.0 / steps as f64;
    for _ in 0..steps {
        s = rk4_step(st, &s, h, variational)?;
    }
    Ok(s)
}

/// Like [`integrate`], returning the state after every step (including the
/// initial one).
pub fn integrate_path<T: Real>(st: &Spacetime, base: [T; 4], v0: [T; 4], steps: usize) -> Result<Vec<Flow<T>>> {
    let mut s = Flow::start(base, v0);
    let h = 1.0 / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(s);
    if st.has_constant_metric() {
        out.extend((1..=steps).map(|i| straight(base, v0, i as f64 * h)));
        return Ok(out);
    }
    for _ in 0..steps {
        s = rk4_step(st, &s, h, true)?;
        out.push(s);
    }
    Ok(out)
}

fn straight<T: Real>(base: [T; 4], v0: [T; 4], t: f64) -> Flow<T> {
    let tt = T::from_f64(t);
    let mut j = linalg::identity::<T>();
    for (a, row) in j.iter_mut().enumerate() {
        row[a] = tt;
    }
    Flow { x: std::array::from_fn(|a| base[a] + tt * v0[a]), v: v0, j, k: linalg::identity() }
}

/// `exp_base(v)`.
pub fn exp_map<T: Real>(st: &Spacetime, base: [T; 4], v: [T; 4], steps: usize) -> Result<[T; 4]> {
    Ok(integrate(st, base, v, steps, false)?.x)
}

/// Number of Newton iterations after primal convergence that make every
/// Taylor coefficient of order `<= T::ORDER` converge.
fn polish_iterations<T: Real>() -> usize {
    let mut n = 0;
    while (1usize << n) < T::ORDER + 1 {
        n += 1;
    }
    n
}

/// Solves `exp_x(v) = y` for `v` by Newton's method on the variational
/// Jacobian. Returns `v` and the flow at `t = 1`.
pub fn shoot<T: Real>(st: &Spacetime, x: [T; 4], y: [T; 4], guess: [T; 4], cfg: &GeodesicConfig) -> Result<([T; 4], Flow<T>)> {
    if st.has_constant_metric() {
        let v = std::array::from_fn(|a| y[a] - x[a]);
        return Ok((v, Flow { x: y, v, j: linalg::identity(), k: linalg::identity() }));
    }
    let scale = 1.0 + y.iter().map(|c| c.re().abs()).fold(0.0, f64::max);
    let mut v = guess;
    if T::ORDER > 0 {
        // converge the primal part cheaply, then refine the jet coefficients
        let (v0, _) = shoot(st, x.map(|c| c.re()), y.map(|c| c.re()), guess.map(|c| c.re()), cfg)?;
        v = v0.map(T::from_f64);
    }
    let mut trace = Vec::new();
    let mut polish = None;
    for _ in 0..cfg.max_newton + 8 {
        let flow = integrate(st, x, v, cfg.steps, true)?;
        let res: [T; 4] = std::array::from_fn(|a| flow.x[a] - y[a]);
        let norm = res.iter().map(|r| r.re().abs()).fold(0.0, f64::max);
        trace.push(norm);
        match polish {
            Some(0) => return Ok((v, flow)),
            Some(n) => polish = Some(n - 1),
            None if norm <= cfg.newton_tol * scale => {
                let n = polish_iterations::<T>();
                if n == 0 {
                    return Ok((v, flow));
                }
                polish = Some(n - 1);
            }
            None => {
                if trace.len() > cfg.max_newton || !norm.is_finite() {
                    return Err(Error::NewtonDiverged { trace });
                }
            }
        }
        let dv = linalg::solve(&flow.j, &res).map_err(|_| Error::NewtonDiverged { trace: trace.clone() })?;
        for a in 0..4 {
            v[a] -= dv[a];
        }
    }
    Err(Error::NewtonDiverged { trace })
}
