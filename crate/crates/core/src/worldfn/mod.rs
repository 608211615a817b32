//! Synge's world function and the van Vleck–Morette determinant from the
//! geodesic two-point problem.

pub mod geodesic;

pub use geodesic::{exp_map, integrate, shoot, Flow, GeodesicConfig};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exprgeom::Spacetime;
use crate::linalg;
use crate::scalar::Real;

/// Bitensor data for one point pair.
#[derive(Clone, Debug, Serialize)]
pub struct WorldFunctionData {
    pub x: [f64; 4],
    pub y: [f64; 4],
    /// `½ g_x(v, v)` for the geodesic `exp_x(t v)`, `t ∈ [0, 1]`.
    pub sigma: f64,
    /// `∇_a σ` at `x` (covector).
    pub grad_x: [f64; 4],
    /// `∇_a' σ` at `y` (covector).
    pub grad_y: [f64; 4],
    /// `□_x σ`.
    pub box_sigma: f64,
    /// `Δ^{1/2}` from the Jacobian of the exponential map.
    pub vanvleck: f64,
    /// Initial velocity at `x`.
    pub velocity: [f64; 4],
    /// Positions at the integrator steps.
    pub path: Vec<[f64; 4]>,
}

/// Rejects pairs whose coordinate separation exceeds the convex-patch radius.
pub fn check_patch(st: &Spacetime, x: &[f64; 4], y: &[f64; 4]) -> Result<()> {
    st.check_point(x)?;
    st.check_point(y)?;
    let sep = (0..4).map(|a| (y[a] - x[a]).powi(2)).sum::<f64>().sqrt();
    if sep > st.patch_radius() {
        return Err(Error::OutsidePatch { separation: sep, radius: st.patch_radius() });
    }
    Ok(())
}

fn abs_det_metric(st: &Spacetime, p: &[f64; 4]) -> Result<f64> {
    Ok(linalg::det(&st.metric(p)?).abs())
}

/// `Δ^{1/2}(x, y)` from `J = ∂ exp_x(v)/∂v`:
/// `Δ = √(|g(x)|/|g(y)|) / det J`.
pub fn vanvleck_from_jacobian<T: Real>(gx: &linalg::Mat4<T>, gy: &linalg::Mat4<T>, j: &linalg::Mat4<T>) -> T {
    let dx = linalg::det(gx);
    let dy = linalg::det(gy);
    // both determinants are negative for a Lorentzian metric
    let ratio = dx / dy;
    (ratio.sqrt() / linalg::det(j)).sqrt()
}

/// `□_x σ(x, y)` from the flow of the geodesic from `y` that ends at `x`.
pub fn box_sigma_from_flow<T: Real>(gamma_x: &[linalg::Mat4<T>; 4], flow: &Flow<T>) -> Result<T> {
    let jinv = linalg::inverse(&flow.j)?;
    let kj = linalg::mat_mul(&flow.k, &jinv);
    let mut b = linalg::trace(&kj);
    for a in 0..4 {
        for c in 0..4 {
            b += gamma_x[a][a][c] * flow.v[c];
        }
    }
    Ok(b)
}

/// Solves the two-point problem between `x` and `y` and assembles the
/// bitensor data.
pub fn geodesic_bvp(st: &Spacetime, x: &[f64; 4], y: &[f64; 4], cfg: &GeodesicConfig) -> Result<WorldFunctionData> {
    check_patch(st, x, y)?;
    if x == y {
        return Err(Error::Domain("coincident points".into()));
    }
    let guess = std::array::from_fn(|a| y[a] - x[a]);
    let (v, fwd) = shoot(st, *x, *y, guess, cfg)?;
    let gx = st.metric(x)?;
    let gy = st.metric(y)?;
    let sigma = 0.5 * linalg::quad_form(&gx, &v, &v);
    let gv = linalg::mat_vec(&gx, &v);
    let grad_x = gv.map(|c| -c);
    let grad_y = linalg::mat_vec(&gy, &fwd.v);
    // reverse geodesic from y, ending at x with velocity −v
    let back_v = fwd.v.map(|c| -c);
    let rev = integrate(st, *y, back_v, cfg.steps, true)?;
    let gamma_x = geodesic::christoffel(st, x)?;
    let box_sigma = box_sigma_from_flow(&gamma_x, &rev)?;
    let vanvleck = vanvleck_from_jacobian(&gx, &gy, &fwd.j);
    let path = geodesic::integrate_path(st, *x, v, cfg.steps)?.into_iter().map(|f| f.x).collect();
    Ok(WorldFunctionData { x: *x, y: *y, sigma, grad_x, grad_y, box_sigma, vanvleck, velocity: v, path })
}

/// `σ(x, y)` alone.
pub fn sigma(st: &Spacetime, x: &[f64; 4], y: &[f64; 4], cfg: &GeodesicConfig) -> Result<f64> {
    check_patch(st, x, y)?;
    let guess = std::array::from_fn(|a| y[a] - x[a]);
    let (v, _) = shoot(st, *x, *y, guess, cfg)?;
    Ok(0.5 * linalg::quad_form(&st.metric(x)?, &v, &v))
}

/// `∂σ/∂x^a` (covector at `x`).
fn grad_x_sigma(st: &Spacetime, x: &[f64; 4], y: &[f64; 4], guess: [f64; 4], cfg: &GeodesicConfig) -> Result<[f64; 4]> {
    let (v, _) = shoot(st, *x, *y, guess, cfg)?;
    Ok(linalg::mat_vec(&st.metric(x)?, &v).map(|c| -c))
}

/// `Δ^{1/2}(x, y)` from the mixed second derivatives of σ,
/// `Δ = −det(−∂²σ/∂x^a∂y^b) / √(g(x) g(y))`, with central differences in `y`
/// of the exact gradient `∂_x σ`, step `h = 10⁻³ × patch radius`,
/// Richardson-extrapolated once.
pub fn van_vleck(st: &Spacetime, x: &[f64; 4], y: &[f64; 4], cfg: &GeodesicConfig) -> Result<f64> {
    check_patch(st, x, y)?;
    let guess: [f64; 4] = std::array::from_fn(|a| y[a] - x[a]);
    let (v0, _) = shoot(st, *x, *y, guess, cfg)?;
    let h = 1e-3 * st.patch_radius();
    let mixed = |h: f64| -> Result<linalg::Mat4<f64>> {
        let mut m = [[0.0; 4]; 4];
        for b in 0..4 {
            let mut yp = *y;
            let mut ym = *y;
            yp[b] += h;
            ym[b] -= h;
            let gp = grad_x_sigma(st, x, &yp, v0, cfg)?;
            let gm = grad_x_sigma(st, x, &ym, v0, cfg)?;
            for a in 0..4 {
                m[a][b] = (gp[a] - gm[a]) / (2.0 * h);
            }
        }
        Ok(m)
    };
    let coarse = mixed(h)?;
    let fine = mixed(0.5 * h)?;
    let neg: linalg::Mat4<f64> =
        std::array::from_fn(|a| std::array::from_fn(|b| -(4.0 * fine[a][b] - coarse[a][b]) / 3.0));
    let gg = abs_det_metric(st, x)? * abs_det_metric(st, y)?;
    let delta = -linalg::det(&neg) / gg.sqrt();
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("van Vleck determinant {delta} is not positive")));
    }
    Ok(delta.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprgeom::{parse_expr, CoordBox};

    fn mink() -> Spacetime {
        Spacetime::minkowski(CoordBox::new([-2.0; 4], [2.0; 4]).unwrap())
    }

    fn de_sitter() -> Spacetime {
        let dom = CoordBox::new([0.5, -1.0, -1.0, -1.0], [2.0, 1.0, 1.0, 1.0]).unwrap();
        Spacetime::conformally_flat("ds", dom, parse_expr("1/x0").unwrap(), 0.5).unwrap()
    }

    #[test]
    fn flat_world_function() {
        let cfg = GeodesicConfig::default();
        let d = geodesic_bvp(&mink(), &[0.0; 4], &[0.0, 1.0, 0.0, 0.0], &cfg).unwrap();
        assert_eq!(d.sigma, 0.5);
        assert_eq!(d.vanvleck, 1.0);
        assert!((d.box_sigma - 4.0).abs() < 1e-14);
        let n = geodesic_bvp(&mink(), &[0.0; 4], &[1.0, 1.0, 0.0, 0.0], &cfg).unwrap();
        assert_eq!(n.sigma, 0.0);
        let vv = van_vleck(&mink(), &[0.0; 4], &[0.3, 1.0, 0.2, 0.0], &cfg).unwrap();
        assert!((vv - 1.0).abs() < 1e-8);
    }

    #[test]
    fn hamilton_jacobi_and_symmetry() {
        let st = de_sitter();
        let cfg = GeodesicConfig::default();
        let x = [1.0, 0.0, 0.0, 0.0];
        let y = [1.05, 0.2, 0.1, -0.05];
        let d = geodesic_bvp(&st, &x, &y, &cfg).unwrap();
        let ginv = linalg::inverse(&st.metric(&x).unwrap()).unwrap();
        let hj = linalg::quad_form(&ginv, &d.grad_x, &d.grad_x);
        assert!((hj - 2.0 * d.sigma).abs() < 1e-12);
        let r = geodesic_bvp(&st, &y, &x, &cfg).unwrap();
        assert!((r.sigma - d.sigma).abs() < 1e-10 * d.sigma, "{} vs {}", r.sigma, d.sigma);
        assert!((r.vanvleck - d.vanvleck).abs() < 1e-10);
        let fd = van_vleck(&st, &x, &y, &cfg).unwrap();
        assert!((fd - d.vanvleck).abs() < 1e-7, "{fd} vs {}", d.vanvleck);
    }
}
