//! Verification of the conformal covariance identities of the Hadamard
//! parametrix, the Wick square and the Wick kernel.
//!
//! Probes live in the target chart of an embedding `ψ`; source quantities
//! are evaluated at `ψ⁻¹` of the probe points. All κ-dependent quantities
//! carry κ linearly, including the conformal vacuum, which is normalised
//! as `2κ ω₂` so that it matches `κ H` at short distances.

pub mod limit;

pub use limit::{default_schedule, LimitProbe, Sample, MIN_ORDER};

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Mutex;

use serde::Serialize;

use crate::confmap::ConformalEmbedding;
use crate::error::Result;
use crate::exprgeom::{curvature, scalar_curvature, Spacetime};
use crate::hadamard::{prefactor, HadamardConfig, HadamardKernel};
use crate::propagator::conformal_vacuum_two_point;

/// `κ/(12π)²`, the curvature coupling of the covariant Wick square.
pub fn alpha(kappa: f64) -> f64 {
    kappa / (12.0 * PI).powi(2)
}

/// `B(x, y) = −κ/(2(12π)²) (R(x) + R(y))`.
pub fn b_kernel(kappa: f64, r_x: f64, r_y: f64) -> f64 {
    -0.5 * alpha(kappa) * (r_x + r_y)
}

#[derive(Clone, Debug, Serialize)]
pub struct CovarianceReport {
    pub identity: String,
    pub spacetime: String,
    pub embedding: Option<String>,
    pub point: [f64; 4],
    pub measured: f64,
    pub predicted: f64,
    pub abs_error: f64,
    pub rel_error: f64,
    /// Bound on `abs_error`.
    pub tolerance: f64,
    pub order_estimate: f64,
    pub pass: bool,
    /// Further named numbers behind the measurement.
    pub details: Vec<(String, f64)>,
    pub probe: Option<LimitProbe>,
}

impl CovarianceReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        identity: &str,
        spacetime: &str,
        embedding: Option<&str>,
        point: [f64; 4],
        measured: f64,
        predicted: f64,
        tolerance: f64,
        probe: Option<LimitProbe>,
    ) -> Self {
        let abs_error = (measured - predicted).abs();
        let rel_error = if predicted != 0.0 { abs_error / predicted.abs() } else { abs_error };
        let order_estimate = probe.as_ref().map_or(f64::INFINITY, |p| p.order_estimate);
        let pass = abs_error <= tolerance && order_estimate >= MIN_ORDER;
        CovarianceReport {
            identity: identity.to_string(),
            spacetime: spacetime.to_string(),
            embedding: embedding.map(str::to_string),
            point,
            measured,
            predicted,
            abs_error,
            rel_error,
            tolerance,
            order_estimate,
            pass,
            details: Vec::new(),
            probe,
        }
    }

    pub fn with(mut self, name: &str, v: f64) -> Self {
        self.details.push((name.to_string(), v));
        self
    }

    fn basic_pass(&self) -> bool {
        self.abs_error <= self.tolerance && self.order_estimate >= MIN_ORDER
    }

    /// Marks the report failed for a reason beyond the tolerance and order.
    pub fn fail_if(mut self, failed: bool) -> Self {
        self.pass &= !failed;
        self
    }

    /// Multiplies the tolerance by `k`, keeping any failure that did not
    /// come from the tolerance or the order.
    pub fn rescaled(mut self, k: f64) -> Self {
        let other_ok = self.pass || !self.basic_pass();
        self.tolerance *= k;
        self.pass = other_ok && self.basic_pass();
        self
    }
}

/// Builds the Hadamard kernels for the checks and keeps one per spacetime,
/// so that repeated identities reuse computed coefficients.
#[derive(Debug)]
pub struct Checker {
    pub cfg: HadamardConfig,
    kernels: Mutex<HashMap<String, HadamardKernel>>,
}

impl Checker {
    pub fn new(cfg: HadamardConfig) -> Self {
        Checker { cfg, kernels: Mutex::default() }
    }

    pub fn kappa(&self) -> f64 {
        self.cfg.kappa
    }

    pub fn kernel(&self, st: &Spacetime) -> Result<HadamardKernel> {
        let mut map = self.kernels.lock().expect("kernel lock");
        if let Some(k) = map.get(st.name()) {
            return Ok(k.clone());
        }
        let k = HadamardKernel::new(st.clone(), self.cfg)?;
        map.insert(st.name().to_string(), k.clone());
        Ok(k)
    }

    fn steps(&self) -> usize {
        self.cfg.geodesic.steps
    }

    /// `u/σ + v log(σ/μ²)` for a pair.
    fn bracket(&self, k: &HadamardKernel, x: &[f64; 4], y: &[f64; 4]) -> Result<f64> {
        Ok(k.terms(x, y)?.bracket(self.cfg.mu))
    }

    /// `lim [u/(ΩσΩ) + v/(ΩΩ) log(σ/μ²)](ψ⁻¹x, ψ⁻¹y) − [u′/σ′ + v′ log(σ′/μ²)](x, y)`
    /// against `R_g/(18Ω²) − R_{g′}/18`, and the same limit expressed as
    /// `A(x, x) = κΩ²/(8π²) × limit` against `κ/(12π)² (R_g − Ω² R_{g′})`.
    pub fn hadamard_difference_limit(&self, e: &ConformalEmbedding, probe: &LimitProbe) -> Result<[CovarianceReport; 2]> {
        let (src, tgt) = (self.kernel(e.source())?, self.kernel(e.target())?);
        let x = probe.x;
        let p = e.apply_inverse(&x)?;
        let om_x = e.omega_at(&x)?;
        let run = probe.run(e.target(), self.steps(), |y| {
            let q = e.apply_inverse(y)?;
            let a = self.bracket(&src, &p, &q)? / (om_x * e.omega_at(y)?);
            let b = self.bracket(&tgt, &x, y)?;
            Ok(Sample { value: a - b, magnitude: a.abs().max(b.abs()) })
        })?;
        let (r_src, r_tgt) = (scalar_curvature(e.source(), &p)?, scalar_curvature(e.target(), &x)?);
        let limit = run.extrapolated_value;
        let predicted = r_src / (18.0 * om_x * om_x) - r_tgt / 18.0;
        let tol = (0.01 * predicted.abs()).max(1e-5);
        let kappa = self.kappa();
        let a_measured = kappa * om_x * om_x * prefactor() * limit;
        let a_predicted = alpha(kappa) * (r_src - om_x * om_x * r_tgt);
        let a_tol = (0.01 * a_predicted.abs()).max(1e-5 * kappa * om_x * om_x * prefactor());
        let name = Some(e.name());
        let r1 = CovarianceReport::new("hadamard_difference", e.target().name(), name, x, limit, predicted, tol, Some(run.clone()))
            .with("R_source", r_src)
            .with("R_target", r_tgt)
            .with("omega", om_x)
            .with("extrapolation_residual", run.residual());
        let r2 = CovarianceReport::new("a_coincidence", e.target().name(), name, x, a_measured, a_predicted, a_tol, Some(run))
            .with("omega", om_x);
        Ok([r1, r2])
    }

    /// `lim κ (H_μ − H_μ′)` at coincidence, which should vanish.
    pub fn mu_independence(&self, st: &Spacetime, mu: f64, mu_prime: f64, probe: &LimitProbe) -> Result<CovarianceReport> {
        let k = self.kernel(st)?;
        let (a, b) = (k.with_mu(mu), k.with_mu(mu_prime));
        let x = probe.x;
        let run = probe.run(st, self.steps(), |y| {
            let t = k.terms(&x, y)?;
            let (ha, hb) = (a.evaluate(&t), b.evaluate(&t));
            Ok(Sample { value: ha - hb, magnitude: ha.abs().max(hb.abs()) })
        })?;
        Ok(CovarianceReport::new("mu_independence", st.name(), None, x, run.extrapolated_value, 0.0, 1e-5, Some(run))
            .with("mu", mu)
            .with("mu_prime", mu_prime))
    }

    /// `c = ⟨:φ²:_H⟩ + αR` on both sides and the weight-2 defect
    /// `d = Ω² c′(x) − c(ψ⁻¹x)`. For the covariant coupling `α = κ/(12π)²`
    /// the defect vanishes; for `α = 0` it equals the A-term
    /// `κ/(12π)² (R_g − Ω² R_{g′})`.
    pub fn phi2_covariance(&self, e: &ConformalEmbedding, alpha_value: f64, probe: &LimitProbe) -> Result<CovarianceReport> {
        let x = probe.x;
        let p = e.apply_inverse(&x)?;
        let om = e.omega_at(&x)?;
        let src = self.vacuum_limit_in(e, probe, true)?;
        let tgt = self.vacuum_limit_in(e, probe, false)?;
        let (r_src, r_tgt) = (scalar_curvature(e.source(), &p)?, scalar_curvature(e.target(), &x)?);
        let c = src.extrapolated_value + alpha_value * r_src;
        let c_prime = tgt.extrapolated_value + alpha_value * r_tgt;
        let defect = om * om * c_prime - c;
        let covariant = alpha(self.kappa());
        let predicted = (covariant - alpha_value) * (r_src - om * om * r_tgt);
        let scale = c.abs().max((om * om * c_prime).abs()).max(1.0);
        let tol = if alpha_value == covariant || predicted == 0.0 { 1e-4 * scale } else { 0.02 * predicted.abs() };
        let order = src.order_estimate.min(tgt.order_estimate);
        let mut probe_out = tgt.clone();
        probe_out.order_estimate = order;
        Ok(CovarianceReport::new("phi2_covariance", e.target().name(), Some(e.name()), x, defect, predicted, tol, Some(probe_out))
            .with("alpha", alpha_value)
            .with("c_source", c)
            .with("c_target", c_prime)
            .with("omega", om)
            .with("source_order", src.order_estimate))
    }

    /// `lim (2κω₂ − κH)` on the source (`source = true`, at the preimages of
    /// the probe points) or on the target.
    fn vacuum_limit_in(&self, e: &ConformalEmbedding, probe: &LimitProbe, source: bool) -> Result<LimitProbe> {
        let st = if source { e.source() } else { e.target() };
        let map = |y: &[f64; 4]| if source { e.apply_inverse(y) } else { Ok(*y) };
        let k = self.kernel(st)?;
        let kappa = self.kappa();
        let p = map(&probe.x)?;
        probe.run(e.target(), self.steps(), |y| {
            let q = map(y)?;
            let w = 2.0 * kappa * conformal_vacuum_two_point(st, &p, &q)?.omega2;
            let h = k.parametrix(&p, &q)?;
            Ok(Sample { value: w - h, magnitude: w.abs().max(h.abs()) })
        })
    }

    /// `lim [Ω(x)⁻¹ (κH + B)(ψ⁻¹x, ψ⁻¹y) Ω(y)⁻¹ − (κH′ + B′)(x, y)] = 0`.
    pub fn wick_kernel_covariance(&self, e: &ConformalEmbedding, probe: &LimitProbe) -> Result<CovarianceReport> {
        let (src, tgt) = (self.kernel(e.source())?, self.kernel(e.target())?);
        let kappa = self.kappa();
        let x = probe.x;
        let p = e.apply_inverse(&x)?;
        let om_x = e.omega_at(&x)?;
        let (r_p, r_x) = (scalar_curvature(e.source(), &p)?, scalar_curvature(e.target(), &x)?);
        let run = probe.run(e.target(), self.steps(), |y| {
            let q = e.apply_inverse(y)?;
            let a = (src.parametrix(&p, &q)? + b_kernel(kappa, r_p, scalar_curvature(e.source(), &q)?)) / (om_x * e.omega_at(y)?);
            let b = tgt.parametrix(&x, y)? + b_kernel(kappa, r_x, scalar_curvature(e.target(), y)?);
            Ok(Sample { value: a - b, magnitude: a.abs().max(b.abs()) })
        })?;
        let a_term = alpha(kappa) * (r_p - om_x * om_x * r_x);
        let scale = a_term.abs().max(1.0);
        let b_xx = b_kernel(kappa, r_x, r_x);
        Ok(CovarianceReport::new("wick_kernel", e.target().name(), Some(e.name()), x, run.extrapolated_value, 0.0, 1e-4 * scale, Some(run))
            .with("B_xx_plus_alpha_R", b_xx + alpha(kappa) * r_x)
            .with("a_term", a_term))
    }

    /// Weight-4 law `Ω⁴ O′(x) = O(ψ⁻¹x)` of
    /// `O = λ₁ ⟨:φ⁴:⟩ + λ₂ (W²)^{1/2} ⟨:φ²:⟩ + λ₃ W²`, with Wick powers
    /// normal ordered by `κH + B` and `⟨:φ⁴:⟩ = 3 ⟨:φ²:⟩²` in the conformal
    /// vacuum. Without a conformal vacuum on both sides only the `W²` term is
    /// checked; the square root term is dropped where `W² < 0`.
    pub fn composite_weight4_check(&self, e: &ConformalEmbedding, lambdas: [f64; 3], probe: &LimitProbe) -> Result<CovarianceReport> {
        let x = probe.x;
        let p = e.apply_inverse(&x)?;
        let om = e.omega_at(&x)?;
        let (cs, ct) = (curvature(e.source(), &p)?, curvature(e.target(), &x)?);
        // W² is a difference of curvature squares; below this it is rounding
        let floor = 1e-10 * cs.riem2.abs().max((om.powi(4) * ct.riem2).abs());
        let clean = |w: f64, f: f64| if w.abs() <= f { 0.0 } else { w };
        let (w2, w2p) = (clean(cs.w2, floor), clean(ct.w2, floor / om.powi(4)));
        let w2_defect = om.powi(4) * w2p - w2;
        let w2_scale = w2.abs().max((om.powi(4) * w2p).abs()).max(floor);
        let flat = e.source().is_conformally_flat() && e.target().is_conformally_flat();
        let root = w2 >= 0.0 && w2p >= 0.0;
        let mut report;
        if flat {
            let a = alpha(self.kappa());
            let src = self.vacuum_limit_in(e, probe, true)?;
            let tgt = self.vacuum_limit_in(e, probe, false)?;
            let c = src.extrapolated_value + a * cs.r;
            let cp = tgt.extrapolated_value + a * ct.r;
            let o = |c: f64, w2: f64| lambdas[0] * 3.0 * c * c + if root { lambdas[1] * w2.sqrt() * c } else { 0.0 } + lambdas[2] * w2;
            let (o_src, o_tgt) = (o(c, w2), o(cp, w2p));
            let defect = om.powi(4) * o_tgt - o_src;
            let scale = o_src.abs().max(1.0);
            let mut probe_out = tgt.clone();
            probe_out.order_estimate = src.order_estimate.min(tgt.order_estimate);
            report = CovarianceReport::new("composite_weight4", e.target().name(), Some(e.name()), x, defect, 0.0, 1e-4 * scale, Some(probe_out))
                .with("phi2_defect", om * om * cp - c)
                .with("phi4_defect", 3.0 * (om.powi(4) * cp * cp - c * c));
        } else {
            let tol = 1e-6 * w2_scale;
            report = CovarianceReport::new("composite_weight4", e.target().name(), Some(e.name()), x, w2_defect, 0.0, tol, None);
        }
        report = report.with("w2_source", w2).with("w2_target", w2p).with("w2_defect", w2_defect);
        if !root {
            report = report.with("sqrt_term_skipped", 1.0);
        }
        if w2_defect.abs() > 1e-6 * w2_scale {
            report.pass = false;
        }
        Ok(report)
    }

    /// `λ⁻² κH_{λ⁻²g} = κ(H_g − v_g log λ²)` on `pairs`, and the coincidence
    /// limit of `λ⁻² κH_{λ⁻²g} − κH_g` along `probe`.
    pub fn rigid_dilation_suite(&self, st: &Spacetime, lambda: f64, pairs: &[([f64; 4], [f64; 4])], probe: &LimitProbe) -> Result<CovarianceReport> {
        let scaled = st.scaled(&format!("{}_scaled_{lambda}", st.name()), lambda.powi(-2))?;
        let (k, ks) = (self.kernel(st)?, self.kernel(&scaled)?);
        let kappa = self.kappa();
        let l2 = lambda * lambda;
        let mut worst: f64 = 0.0;
        for (x, y) in pairs {
            let t = k.terms(x, y)?;
            let lhs = ks.parametrix(x, y)? / l2;
            let rhs = k.evaluate(&t) - kappa * prefactor() * t.v() * l2.ln();
            worst = worst.max((lhs - rhs).abs());
        }
        let x = probe.x;
        let run = probe.run(st, self.steps(), |y| {
            let a = ks.parametrix(&x, y)? / l2;
            let b = k.parametrix(&x, y)?;
            Ok(Sample { value: a - b, magnitude: a.abs().max(b.abs()) })
        })?;
        let measured = worst.max(run.extrapolated_value.abs());
        Ok(CovarianceReport::new("rigid_dilation", st.name(), None, x, measured, 0.0, 1e-5, Some(run.clone()))
            .with("lambda", lambda)
            .with("pair_residual", worst)
            .with("coincidence_limit", run.extrapolated_value))
    }
}

#[cfg(test)]
mod tests;
