//! Retarded, advanced and causal propagators of `P_g` on conformally flat
//! charts, the symplectic form and the conformal vacuum two-point function.
//!
//! For `g = ω² η` the operator intertwines as `P_g(ω⁻¹ φ) = ω⁻³ P_η φ`, so
//! `Δ±_g f = ω⁻¹ Δ±_η(ω³ f)` with the flat Kirchhoff integral
//! `(Δ₊_η F)(t, x) = (1/4π) ∫ F(t − |x − y|, y) / |x − y| d³y`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::confmap::{ConformalEmbedding, TestFunction};
use crate::error::{Error, Result};
use crate::exprgeom::curvature::curvature;
use crate::exprgeom::tape::Tape;
use crate::exprgeom::wave::wave_from_derivs;
use crate::exprgeom::{CoordBox, Spacetime};
use crate::jet::Jet2;
use crate::quad::{adaptive, Budget, Integrand};
use crate::scalar::Real;

/// Quadrature settings for the propagator integrals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagatorConfig {
    /// Absolute tolerance of one smearing.
    pub tol: f64,
    /// Cap on integrand evaluations per smearing.
    pub max_evals: usize,
    /// Initial midpoint nodes per axis for the double integral of the
    /// symplectic form.
    pub outer_nodes: usize,
    /// Relative tolerance of the symplectic form, measured against
    /// `∫ |ω³f| (Δ₊ + Δ₋)|ω³g|`.
    pub rel_tol: f64,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        PropagatorConfig { tol: 1e-5, max_evals: 20_000_000, outer_nodes: 12, rel_tol: 1e-4 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SmearedFieldValue {
    pub point: [f64; 4],
    pub value: f64,
    pub quadrature_error_estimate: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TwoPointValue {
    pub x: [f64; 4],
    pub y: [f64; 4],
    pub omega2: f64,
}

/// Which light cone the Kirchhoff integral runs over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cone {
    /// `Δ₊`: supported in the causal future of the source.
    Retarded,
    /// `Δ₋`: supported in the causal past.
    Advanced,
}

impl Cone {
    fn sign(self) -> f64 {
        match self {
            Cone::Retarded => 1.0,
            Cone::Advanced => -1.0,
        }
    }
}

/// A conformally flat spacetime with its factor `ω` compiled for
/// evaluation.
#[derive(Clone, Debug)]
pub struct FlatChart {
    st: Spacetime,
    omega: Arc<Tape>,
}

impl FlatChart {
    pub fn new(st: &Spacetime) -> Result<Self> {
        let omega = st.conformal_factor().ok_or_else(|| {
            Error::InvalidMetric(format!("`{}` has no conformally flat chart; propagators need one", st.name()))
        })?;
        Ok(FlatChart { st: st.clone(), omega: Arc::new(Tape::compile(std::slice::from_ref(omega))) })
    }

    pub fn spacetime(&self) -> &Spacetime {
        &self.st
    }

    pub fn omega<T: Real>(&self, x: &[T; 4]) -> Result<T> {
        let mut out = [T::zero()];
        self.omega.eval(x, &mut out)?;
        Ok(out[0])
    }

    /// The flat-chart source `ω³ f`.
    fn density(&self, f: &TestFunction, p: &[f64; 4]) -> Result<f64> {
        Ok(self.omega(p)?.powi(3) * f.eval(p)?)
    }

    fn density_jet(&self, f: &TestFunction, p: &[f64; 4]) -> Result<[f64; 15]> {
        let x = Jet2::seed_point(p);
        let v = self.omega(&x)?.powi(3) * f.eval_generic(&x)?;
        Ok(*v.coeffs())
    }

    /// `|ω³ f|` maximised over an interior grid of the support.
    fn density_bound(&self, f: &TestFunction) -> Result<f64> {
        let mut m: f64 = 0.0;
        for p in f.support().interior_grid(9) {
            m = m.max(self.density(f, &p)?.abs());
        }
        Ok(m)
    }
}

fn check_source(chart: &FlatChart, f: &TestFunction, x: &[f64; 4]) -> Result<()> {
    if f.weight() != 0.0 && f.weight() != 3.0 {
        return Err(Error::WeightMismatch { expected: 3.0, got: f.weight() });
    }
    let d = chart.st.domain();
    let s = f.support();
    if !(0..4).all(|i| s.lo[i] > d.lo[i] && s.hi[i] < d.hi[i]) {
        return Err(Error::CausalSupport(format!(
            "support of the source reaches the boundary of the chart of `{}`",
            chart.st.name()
        )));
    }
    chart.st.check_point(x)
}

/// Spatial distance from `p` to the box `[lo, hi]` (nearest and farthest).
fn spatial_range(b: &CoordBox, x: &[f64; 4]) -> (f64, f64) {
    let mut near = 0.0;
    let mut far = 0.0;
    for i in 1..4 {
        let d0 = b.lo[i] - x[i];
        let d1 = x[i] - b.hi[i];
        let n = d0.max(d1).max(0.0);
        let f = (x[i] - b.lo[i]).abs().max((x[i] - b.hi[i]).abs());
        near += n * n;
        far += f * f;
    }
    (near.sqrt(), far.sqrt())
}

/// Whether `x` lies in `J⁺(b) ∪ J⁻(b)` of the flat chart.
pub fn causally_related(b: &CoordBox, x: &[f64; 4]) -> bool {
    let (near, _) = spatial_range(b, x);
    x[0] - b.lo[0] >= near || b.hi[0] - x[0] >= near
}

/// `(1/4π) ∫ S(t ∓ |x − y|, y) / |x − y| d³y` over the spatial part of the
/// box `b`, by nested adaptive Gauss–Kronrod. The box is split at the
/// coordinates of `x` so the integrable singularity sits on sub-box corners.
pub fn kirchhoff<V: Integrand>(
    b: &CoordBox,
    x: &[f64; 4],
    cone: Cone,
    tol: f64,
    budget: &Budget,
    src: &dyn Fn(&[f64; 4]) -> Result<V>,
) -> Result<(V, f64)> {
    let s = cone.sign();
    let (near, far) = spatial_range(b, x);
    // t − s d ∈ [lo0, hi0] must be possible for some d in [near, far]
    let (d0, d1) = if s > 0.0 { (x[0] - b.hi[0], x[0] - b.lo[0]) } else { (b.lo[0] - x[0], b.hi[0] - x[0]) };
    if d1.min(far) <= d0.max(near).max(0.0) {
        return Ok((V::zero(), 0.0));
    }
    let cuts = |i: usize| -> Vec<f64> {
        if x[i] > b.lo[i] && x[i] < b.hi[i] {
            vec![b.lo[i], x[i], b.hi[i]]
        } else {
            vec![b.lo[i], b.hi[i]]
        }
    };
    let (c1, c2, c3) = (cuts(1), cuts(2), cuts(3));
    let pieces = ((c1.len() - 1) * (c2.len() - 1) * (c3.len() - 1)) as f64;
    let mut total = V::zero();
    let mut err = 0.0;
    for w1 in c1.windows(2) {
        for w2 in c2.windows(2) {
            for w3 in c3.windows(2) {
                let t1 = tol / pieces;
                let t2 = 0.5 * t1 / (w1[1] - w1[0]);
                let t3 = 0.5 * t2 / (w2[1] - w2[0]);
                let r = adaptive(
                    |y1: f64| -> Result<V> {
                        Ok(adaptive(
                            |y2: f64| -> Result<V> {
                                Ok(adaptive(
                                    |y3: f64| -> Result<V> {
                                        let d = ((y1 - x[1]).powi(2) + (y2 - x[2]).powi(2) + (y3 - x[3]).powi(2)).sqrt();
                                        let p = [x[0] - s * d, y1, y2, y3];
                                        if d == 0.0 || !b.contains(&p) {
                                            return Ok(V::zero());
                                        }
                                        let mut v = V::zero();
                                        v.axpy(1.0 / (4.0 * PI * d), &src(&p)?);
                                        Ok(v)
                                    },
                                    w3[0],
                                    w3[1],
                                    t3,
                                    1,
                                    budget,
                                )?
                                .value)
                            },
                            w2[0],
                            w2[1],
                            t2,
                            1,
                            budget,
                        )?
                        .value)
                    },
                    w1[0],
                    w1[1],
                    0.5 * t1,
                    1,
                    budget,
                )?;
                total.axpy(1.0, &r.value);
                err += r.error;
            }
        }
    }
    Ok((total, err))
}

fn flat_apply(chart: &FlatChart, f: &TestFunction, x: &[f64; 4], cone: Cone, cfg: &PropagatorConfig) -> Result<(f64, f64)> {
    let budget = Budget::new(cfg.max_evals);
    let w = chart.omega(x)?;
    let (v, e) = kirchhoff(f.support(), x, cone, cfg.tol * w, &budget, &|p| chart.density(f, p))?;
    Ok((v / w, e / w))
}

/// `(Δ₊ f)(x)`, supported in `J⁺(supp f)`.
pub fn retarded_apply(st: &Spacetime, f: &TestFunction, x: &[f64; 4]) -> Result<SmearedFieldValue> {
    retarded_apply_with(st, f, x, &PropagatorConfig::default())
}

pub fn retarded_apply_with(st: &Spacetime, f: &TestFunction, x: &[f64; 4], cfg: &PropagatorConfig) -> Result<SmearedFieldValue> {
    let chart = FlatChart::new(st)?;
    check_source(&chart, f, x)?;
    let (value, err) = flat_apply(&chart, f, x, Cone::Retarded, cfg)?;
    Ok(SmearedFieldValue { point: *x, value, quadrature_error_estimate: err })
}

/// `(Δ₋ f)(x)`, supported in `J⁻(supp f)`.
pub fn advanced_apply_with(st: &Spacetime, f: &TestFunction, x: &[f64; 4], cfg: &PropagatorConfig) -> Result<SmearedFieldValue> {
    let chart = FlatChart::new(st)?;
    check_source(&chart, f, x)?;
    let (value, err) = flat_apply(&chart, f, x, Cone::Advanced, cfg)?;
    Ok(SmearedFieldValue { point: *x, value, quadrature_error_estimate: err })
}

/// `(E f)(x) = (Δ₊ f)(x) − (Δ₋ f)(x)`.
pub fn causal_propagator_apply(st: &Spacetime, f: &TestFunction, x: &[f64; 4]) -> Result<SmearedFieldValue> {
    causal_propagator_apply_with(st, f, x, &PropagatorConfig::default())
}

pub fn causal_propagator_apply_with(
    st: &Spacetime,
    f: &TestFunction,
    x: &[f64; 4],
    cfg: &PropagatorConfig,
) -> Result<SmearedFieldValue> {
    let chart = FlatChart::new(st)?;
    check_source(&chart, f, x)?;
    let (p, ep) = flat_apply(&chart, f, x, Cone::Retarded, cfg)?;
    let (m, em) = flat_apply(&chart, f, x, Cone::Advanced, cfg)?;
    Ok(SmearedFieldValue { point: *x, value: p - m, quadrature_error_estimate: ep + em })
}

/// `P_g` applied to `Δ₊ f` (`with_advanced = false`) or to `E f`
/// (`with_advanced = true`) at `x`. The derivatives are moved onto the source
/// inside the Kirchhoff integral, which is translation invariant.
pub fn wave_of_propagated(
    st: &Spacetime,
    f: &TestFunction,
    x: &[f64; 4],
    with_advanced: bool,
    cfg: &PropagatorConfig,
) -> Result<f64> {
    let chart = FlatChart::new(st)?;
    check_source(&chart, f, x)?;
    let bound = chart.density_bound(f)?;
    let h = f.support().half_widths();
    let hmin = h.iter().cloned().fold(f64::INFINITY, f64::min);
    // Taylor coefficients of order two are up to ~k/h² times the density
    let tol = cfg.tol * bound.max(1.0) * (1.0 + 30.0 / (hmin * hmin)).recip() * 10.0;
    let budget = Budget::new(cfg.max_evals);
    let src = |p: &[f64; 4]| chart.density_jet(f, p);
    let (mut psi, _) = kirchhoff(f.support(), x, Cone::Retarded, tol, &budget, &src)?;
    if with_advanced {
        let (adv, _) = kirchhoff(f.support(), x, Cone::Advanced, tol, &budget, &src)?;
        psi.axpy(-1.0, &adv);
    }
    let psi = Jet2::from_coeffs(psi);
    let phi = psi / chart.omega(&Jet2::seed_point(x))?;
    let curv = curvature(st, x)?;
    Ok(wave_from_derivs(&curv, phi.value(), &phi.gradient(), &phi.hessian()))
}

/// `∫ f (E g) dμ_g = ∫ (ω³ f)(E_η(ω³ g)) d⁴x`.
///
/// With `F = ω³ f`, `G = ω³ g` and `ρ = |x − y|` this is
/// `(1/4π) ∫ d³x d³y K(x, y)` where
/// `K = ∫ dt F(t, x) (G(t − ρ, y) − G(t + ρ, y)) / ρ` is even in `ρ` and
/// smooth, so a tensor Gauss rule on the two supports converges quickly.
/// Nodes are added per axis until the differences between successive rules
/// settle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SymplecticValue {
    pub value: f64,
    pub quadrature_error_estimate: f64,
    pub evaluations: usize,
}

pub fn symplectic_form(st: &Spacetime, f: &TestFunction, g: &TestFunction) -> Result<SymplecticValue> {
    symplectic_form_with(st, f, g, &PropagatorConfig::default())
}

pub fn symplectic_form_with(
    st: &Spacetime,
    f: &TestFunction,
    g: &TestFunction,
    cfg: &PropagatorConfig,
) -> Result<SymplecticValue> {
    let chart = FlatChart::new(st)?;
    check_source(&chart, f, &f.support().center())?;
    check_source(&chart, g, &g.support().center())?;
    let fb = effective_box(&chart, f)?;
    let gb = effective_box(&chart, g)?;
    let mut n = cfg.outer_nodes.max(6);
    let (mut prev, _, mut evals) = double_quadrature(&chart, f, g, &fb, &gb, n - 4)?;
    let (mut cur, _, used) = double_quadrature(&chart, f, g, &fb, &gb, n - 2)?;
    evals += used;
    loop {
        let (next, scale, used) = double_quadrature(&chart, f, g, &fb, &gb, n)?;
        evals += used;
        // the error falls geometrically in the node count
        let (d0, d1) = ((cur - prev).abs(), (next - cur).abs());
        let err = if d1 < d0 { d1 * d1 / d0 } else { d1 };
        if err <= cfg.rel_tol * scale {
            return Ok(SymplecticValue { value: next, quadrature_error_estimate: err, evaluations: evals });
        }
        if evals > cfg.max_evals.saturating_mul(20) {
            return Err(Error::Quadrature(format!(
                "symplectic form did not converge within {evals} evaluations: {next:e} ± {err:e}"
            )));
        }
        (prev, cur) = (cur, next);
        n += 2;
    }
}

/// Sub-box of the support outside which `|ω³ f|` stays below a `1e-14`
/// fraction of its maximum on a probe grid, widened by one grid cell.
fn effective_box(chart: &FlatChart, f: &TestFunction) -> Result<CoordBox> {
    const K: usize = 24;
    let b = f.support();
    let cell: [f64; 4] = std::array::from_fn(|i| (b.hi[i] - b.lo[i]) / K as f64);
    let mut vals = Vec::with_capacity(K.pow(4));
    let mut m: f64 = 0.0;
    for i in 0..K.pow(4) {
        let idx = [i % K, (i / K) % K, (i / K / K) % K, i / K / K / K];
        let p: [f64; 4] = std::array::from_fn(|a| b.lo[a] + cell[a] * (idx[a] as f64 + 0.5));
        let v = chart.density(f, &p)?.abs();
        m = m.max(v);
        vals.push((idx, v));
    }
    let mut lo = [K; 4];
    let mut hi = [0; 4];
    for (idx, v) in vals {
        if v > 1e-14 * m {
            for a in 0..4 {
                lo[a] = lo[a].min(idx[a]);
                hi[a] = hi[a].max(idx[a]);
            }
        }
    }
    if lo[0] == K {
        return Ok(*b);
    }
    CoordBox::new(
        std::array::from_fn(|a| (b.lo[a] + cell[a] * (lo[a] as f64 - 1.0)).max(b.lo[a])),
        std::array::from_fn(|a| (b.lo[a] + cell[a] * (hi[a] as f64 + 2.0)).min(b.hi[a])),
    )
}

/// Midpoint rule on `[lo, hi]`. The densities and all their derivatives are
/// negligible on the faces of their boxes, so the error decays faster than
/// any power of the spacing.
fn axis_rule(lo: f64, hi: f64, nodes: usize) -> Vec<(f64, f64)> {
    let h = (hi - lo) / nodes as f64;
    (0..nodes).map(|k| (lo + h * (k as f64 + 0.5), h)).collect()
}

fn spatial_nodes(b: &CoordBox, nodes: usize) -> Vec<([f64; 3], f64)> {
    let r: [Vec<(f64, f64)>; 3] = std::array::from_fn(|i| axis_rule(b.lo[i + 1], b.hi[i + 1], nodes));
    let mut out = Vec::with_capacity(r[0].len().pow(3));
    for a in &r[0] {
        for c in &r[1] {
            for d in &r[2] {
                out.push(([a.0, c.0, d.0], a.1 * c.1 * d.1));
            }
        }
    }
    out
}

/// Relative size below which density samples are dropped.
const NEGLIGIBLE: f64 = 1e-13;

/// The double integral on the boxes `fb ⊃ supp f`, `gb ⊃ supp g`, with
/// `∫ |F| (Δ₊ + Δ₋)|G|` as a scale.
fn double_quadrature(
    chart: &FlatChart,
    f: &TestFunction,
    g: &TestFunction,
    fb: &CoordBox,
    gb: &CoordBox,
    nodes: usize,
) -> Result<(f64, f64, usize)> {
    let mut evals = 0;
    let ft = axis_rule(fb.lo[0], fb.hi[0], nodes);
    let gt = axis_rule(gb.lo[0], gb.hi[0], nodes);
    let gap = 2.0 * (gb.hi[0] - gb.lo[0]) / nodes as f64;
    // F on its grid, keeping the significant time samples of each spatial node
    let mut fs = Vec::new();
    let mut fmax: f64 = 0.0;
    for (x, wx) in spatial_nodes(fb, nodes) {
        let mut col = Vec::with_capacity(ft.len());
        for &(t, wt) in &ft {
            let v = chart.density(f, &[t, x[0], x[1], x[2]])?;
            fmax = fmax.max(v.abs());
            col.push((t, wt * v));
        }
        evals += ft.len();
        fs.push((x, wx, col));
    }
    // time window of each spatial node of G outside which G is negligible
    let mut gs = Vec::new();
    let mut gmax: f64 = 0.0;
    let mut gcols = Vec::new();
    for (y, wy) in spatial_nodes(gb, nodes) {
        let col: Vec<f64> = gt.iter().map(|&(t, _)| chart.density(g, &[t, y[0], y[1], y[2]])).collect::<Result<_>>()?;
        evals += gt.len();
        gmax = col.iter().fold(gmax, |m, v| m.max(v.abs()));
        gcols.push((y, wy, col));
    }
    for (y, wy, col) in gcols {
        let sig: Vec<usize> = (0..col.len()).filter(|&k| col[k].abs() > NEGLIGIBLE * gmax).collect();
        if let (Some(&a), Some(&b)) = (sig.first(), sig.last()) {
            let lo = (gt[a].0 - gap).max(gb.lo[0]);
            let hi = (gt[b].0 + gap).min(gb.hi[0]);
            gs.push((y, wy, lo, hi));
        }
    }
    for (_, _, col) in fs.iter_mut() {
        col.retain(|&(_, v)| v.abs() > NEGLIGIBLE * fmax * 1e-2);
    }
    fs.retain(|(_, _, col)| !col.is_empty());
    let rho_min = 1e-4 * (gb.hi[1] - gb.lo[1]);
    let mut acc = 0.0;
    let mut scale = 0.0;
    for (x, wx, col) in &fs {
        for (y, wy, lo, hi) in &gs {
            let rho = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2)).sqrt().max(rho_min);
            let (mut k, mut kabs) = (0.0, 0.0);
            for &(t, wf) in col {
                for (s, sign) in [(t - rho, 1.0), (t + rho, -1.0)] {
                    if s >= *lo && s <= *hi {
                        let v = wf * chart.density(g, &[s, y[0], y[1], y[2]])?;
                        k += sign * v;
                        kabs += v.abs();
                        evals += 1;
                    }
                }
            }
            acc += wx * wy * k / rho;
            scale += wx * wy * kabs / rho;
        }
    }
    Ok((acc / (4.0 * PI), scale / (4.0 * PI), evals))
}

/// `ω₂(x, y) = ω(x)⁻¹ ω(y)⁻¹ / (8π² σ_η(x, y))` for spacelike pairs.
pub fn conformal_vacuum_two_point(st: &Spacetime, x: &[f64; 4], y: &[f64; 4]) -> Result<TwoPointValue> {
    let chart = FlatChart::new(st)?;
    st.check_point(x)?;
    st.check_point(y)?;
    let d: [f64; 4] = std::array::from_fn(|a| x[a] - y[a]);
    let sigma = 0.5 * (-d[0] * d[0] + d[1] * d[1] + d[2] * d[2] + d[3] * d[3]);
    if !(sigma > 0.0) {
        return Err(Error::NotSpacelike(sigma));
    }
    let omega2 = 1.0 / (chart.omega(x)? * chart.omega(y)? * 8.0 * PI * PI * sigma);
    Ok(TwoPointValue { x: *x, y: *y, omega2 })
}

/// Both sides of `E′(ψ_*^{(3)} f) = ψ_*^{(1)}(E f)` on the image.
#[derive(Clone, Debug, Serialize)]
pub struct TransportCheck {
    pub points: Vec<[f64; 4]>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl TransportCheck {
    /// Largest difference relative to the largest value of the right side.
    pub fn relative_error(&self) -> f64 {
        let scale = self.rhs.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let diff = self.lhs.iter().zip(&self.rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if scale == 0.0 {
            diff
        } else {
            diff / scale
        }
    }
}

/// Evaluates both sides of the propagator transport law at the images of
/// `points` (given in the source chart).
pub fn check_propagator_transport(
    e: &ConformalEmbedding,
    f: &TestFunction,
    points: &[[f64; 4]],
    cfg: &PropagatorConfig,
) -> Result<TransportCheck> {
    let pushed = e.weighted_pushforward(3.0, f)?;
    let mut check = TransportCheck { points: Vec::new(), lhs: Vec::new(), rhs: Vec::new() };
    for x in points {
        let xi = e.apply(x)?;
        let lhs = causal_propagator_apply_with(e.target(), &pushed, &xi, cfg)?.value;
        let rhs = causal_propagator_apply_with(e.source(), f, x, cfg)?.value / e.omega_at(&xi)?;
        check.points.push(xi);
        check.lhs.push(lhs);
        check.rhs.push(rhs);
    }
    Ok(check)
}
