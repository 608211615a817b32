//! Hadamard coefficients `u`, `v₀`, `v₁` and the parametrix
//! `H = κ/(8π²) (u/σ + v log(σ/μ²))` with `v = v₀ + v₁σ`.

pub mod transport;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exprgeom::Spacetime;
use crate::worldfn::{geodesic_bvp, GeodesicConfig, WorldFunctionData};

pub use transport::{transport_u_ode, v0_coincidence, v0_value, v1_coincidence, v1_coincidence_local, v1_value};

/// `1/(8π²)`.
pub fn prefactor() -> f64 {
    1.0 / (8.0 * std::f64::consts::PI.powi(2))
}

/// How `v₁(x, y)` is obtained when `p = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum V1Mode {
    /// Full transport along the geodesic.
    Transport,
    /// `v₁(m, m)` at the coordinate midpoint from the local curvature
    /// invariants; symmetric and accurate to `O(σ)`, which leaves the
    /// parametrix error at `O(σ² log σ)`.
    Midpoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HadamardConfig {
    pub mu: f64,
    /// Truncation order of `v` (0 or 1).
    pub p: usize,
    pub kappa: f64,
    /// Gauss–Legendre nodes for the transport integrals.
    pub nodes: usize,
    /// RK4 steps for the jet-valued geodesics inside the transport integrals.
    pub transport_steps: usize,
    pub v1_mode: V1Mode,
    pub geodesic: GeodesicConfig,
}

impl Default for HadamardConfig {
    fn default() -> Self {
        HadamardConfig {
            mu: 1.0,
            p: 1,
            kappa: 0.5,
            nodes: 4,
            transport_steps: 8,
            v1_mode: V1Mode::Midpoint,
            geodesic: GeodesicConfig::default(),
        }
    }
}

/// Geometry-only coefficients for one pair; `μ` and `κ` enter only in
/// [`HadamardKernel::evaluate`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HadamardTerms {
    pub sigma: f64,
    pub u: f64,
    pub v0: f64,
    pub v1: f64,
}

impl HadamardTerms {
    pub fn v(&self) -> f64 {
        self.v0 + self.v1 * self.sigma
    }

    /// `u/σ + v log(σ/μ²)` without prefactors.
    pub fn bracket(&self, mu: f64) -> f64 {
        self.u / self.sigma + self.v() * (self.sigma / (mu * mu)).ln()
    }
}

type PairKey = [u64; 8];

#[derive(Clone, Debug)]
pub struct HadamardKernel {
    pub st: Spacetime,
    pub cfg: HadamardConfig,
    /// Terms already computed for a point pair; shared between kernels that
    /// differ only in `μ` or `κ`.
    cache: Arc<Mutex<HashMap<PairKey, HadamardTerms>>>,
}

impl HadamardKernel {
    pub fn new(st: Spacetime, cfg: HadamardConfig) -> Result<Self> {
        if !(cfg.mu > 0.0) {
            return Err(Error::Domain(format!("length scale mu = {} must be positive", cfg.mu)));
        }
        if cfg.p > 1 {
            return Err(Error::Domain(format!("truncation order p = {} is not supported", cfg.p)));
        }
        Ok(HadamardKernel { st, cfg, cache: Arc::default() })
    }

    pub fn with_mu(&self, mu: f64) -> Self {
        HadamardKernel { cfg: HadamardConfig { mu, ..self.cfg }, ..self.clone() }
    }

    pub fn with_kappa(&self, kappa: f64) -> Self {
        HadamardKernel { cfg: HadamardConfig { kappa, ..self.cfg }, ..self.clone() }
    }

    fn key(x: &[f64; 4], y: &[f64; 4]) -> PairKey {
        std::array::from_fn(|i| if i < 4 { x[i].to_bits() } else { y[i - 4].to_bits() })
    }

    /// `σ`, `u`, `v₀`, `v₁` for a spacelike pair.
    pub fn terms(&self, x: &[f64; 4], y: &[f64; 4]) -> Result<HadamardTerms> {
        let key = Self::key(x, y);
        if let Some(t) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(*t);
        }
        let wf = geodesic_bvp(&self.st, x, y, &self.cfg.geodesic)?;
        let t = self.terms_from(&wf)?;
        self.cache.lock().expect("cache lock").insert(key, t);
        Ok(t)
    }

    pub fn terms_from(&self, wf: &WorldFunctionData) -> Result<HadamardTerms> {
        if !(wf.sigma > 0.0) {
            return Err(Error::NotSpacelike(wf.sigma));
        }
        let (x, y) = (&wf.x, &wf.y);
        let g = &GeodesicConfig { steps: self.cfg.transport_steps, ..self.cfg.geodesic };
        if self.st.has_constant_metric() {
            return Ok(HadamardTerms { sigma: wf.sigma, u: 2.0, v0: 0.0, v1: 0.0 });
        }
        let v0 = v0_value(&self.st, x, y, self.cfg.nodes, g)?;
        let v1 = match (self.cfg.p, self.cfg.v1_mode) {
            (0, _) => 0.0,
            (_, V1Mode::Transport) => v1_value(&self.st, x, y, self.cfg.nodes, g)?,
            (_, V1Mode::Midpoint) => {
                let m = std::array::from_fn(|a| 0.5 * (x[a] + y[a]));
                v1_coincidence_local(&self.st, &m)?
            }
        };
        Ok(HadamardTerms { sigma: wf.sigma, u: 2.0 * wf.vanvleck, v0, v1 })
    }

    /// `κ/(8π²) (u/σ + v log(σ/μ²))`.
    pub fn evaluate(&self, t: &HadamardTerms) -> f64 {
        self.cfg.kappa * prefactor() * t.bracket(self.cfg.mu)
    }

    pub fn parametrix(&self, x: &[f64; 4], y: &[f64; 4]) -> Result<f64> {
        Ok(self.evaluate(&self.terms(x, y)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprgeom::{parse_expr, CoordBox};

    fn de_sitter() -> Spacetime {
        let dom = CoordBox::new([0.5, -1.0, -1.0, -1.0], [2.0, 1.0, 1.0, 1.0]).unwrap();
        Spacetime::conformally_flat("ds", dom, parse_expr("1/x0").unwrap(), 0.5).unwrap()
    }

    #[test]
    fn minkowski_parametrix() {
        let st = Spacetime::minkowski(CoordBox::new([-1.0; 4], [1.0; 4]).unwrap());
        let k = HadamardKernel::new(st, HadamardConfig::default()).unwrap();
        let h = k.parametrix(&[0.0; 4], &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!((h - prefactor() / 0.5).abs() < 1e-15);
    }

    #[test]
    fn coincidence_values_on_de_sitter() {
        let st = de_sitter();
        let g = GeodesicConfig::default();
        let x = [1.0, 0.0, 0.0, 0.0];
        let v0 = v0_coincidence(&st, &x, &g).unwrap();
        assert!(v0.abs() < 1e-10, "{v0}");
        let y = [1.02, 0.05, 0.0, 0.01];
        let uo = transport_u_ode(&st, &y, &x, &g).unwrap();
        let wf = geodesic_bvp(&st, &y, &x, &g).unwrap();
        assert!((uo - 2.0 * wf.vanvleck).abs() < 1e-9, "{uo} vs {}", 2.0 * wf.vanvleck);
    }

    #[test]
    fn local_and_transported_v1_agree() {
        let dom = CoordBox::new([-1.0; 4], [1.0; 4]).unwrap();
        let omega = parse_expr("1 + 0.3*exp(-(x0^2+x1^2+x2^2+x3^2))").unwrap();
        let st = Spacetime::conformally_flat("bump", dom, omega, 0.5).unwrap();
        let x = [0.3, 0.1, 0.0, 0.0];
        let local = v1_coincidence_local(&st, &x).unwrap();
        let transported = v1_coincidence(&st, &x, 4, &GeodesicConfig::default()).unwrap();
        assert!((local - transported).abs() < 1e-6, "{local} vs {transported}");
        assert!((v1_coincidence_local(&de_sitter(), &[1.0, 0.0, 0.0, 0.0]).unwrap() + 1.0 / 30.0).abs() < 1e-12);
    }

    #[test]
    fn v0_vanishes_at_coincidence_and_grows_like_sigma() {
        let st = de_sitter();
        let k = HadamardKernel::new(st, HadamardConfig::default()).unwrap();
        let x = [1.0, 0.0, 0.0, 0.0];
        let t1 = k.terms(&x, &[1.0, 0.04, 0.0, 0.0]).unwrap();
        let t2 = k.terms(&x, &[1.0, 0.02, 0.0, 0.0]).unwrap();
        // the full v vanishes on de Sitter, so v0 + v1 σ is O(σ²)
        assert!(t1.v().abs() < t1.sigma * t1.sigma, "{t1:?}");
        assert!((t1.v0 / t2.v0 - 4.0).abs() < 0.05);
    }
}
