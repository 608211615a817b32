//! Single-chart spacetimes with closed-form metric components.

use serde::{Deserialize, Serialize};

use super::expr::Expr;
use super::tape::Tape;
use crate::error::{Error, Result};
use crate::linalg::{self, Mat4};
use crate::scalar::Real;

/// Closed coordinate box `[lo_i, hi_i]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoordBox {
    pub lo: [f64; 4],
    pub hi: [f64; 4],
}

impl CoordBox {
    pub fn new(lo: [f64; 4], hi: [f64; 4]) -> Result<Self> {
        if (0..4).any(|i| !(lo[i] < hi[i])) {
            return Err(Error::InvalidMetric(format!("empty coordinate box {lo:?}..{hi:?}")));
        }
        Ok(CoordBox { lo, hi })
    }

    pub fn from_intervals(iv: [[f64; 2]; 4]) -> Result<Self> {
        CoordBox::new(std::array::from_fn(|i| iv[i][0]), std::array::from_fn(|i| iv[i][1]))
    }

    pub fn around(center: [f64; 4], half: [f64; 4]) -> Self {
        CoordBox { lo: std::array::from_fn(|i| center[i] - half[i]), hi: std::array::from_fn(|i| center[i] + half[i]) }
    }

    pub fn contains(&self, p: &[f64; 4]) -> bool {
        (0..4).all(|i| p[i] >= self.lo[i] && p[i] <= self.hi[i])
    }

    /// Strictly inside, with a margin.
    pub fn contains_strict(&self, p: &[f64; 4], margin: f64) -> bool {
        (0..4).all(|i| p[i] > self.lo[i] + margin && p[i] < self.hi[i] - margin)
    }

    pub fn contains_box(&self, other: &CoordBox) -> bool {
        self.contains(&other.lo) && self.contains(&other.hi)
    }

    pub fn center(&self) -> [f64; 4] {
        std::array::from_fn(|i| 0.5 * (self.lo[i] + self.hi[i]))
    }

    pub fn half_widths(&self) -> [f64; 4] {
        std::array::from_fn(|i| 0.5 * (self.hi[i] - self.lo[i]))
    }

    /// Maps `t ∈ [0,1]^4` to the box.
    pub fn lerp(&self, t: [f64; 4]) -> [f64; 4] {
        std::array::from_fn(|i| self.lo[i] + t[i] * (self.hi[i] - self.lo[i]))
    }

    /// Deterministic interior sample grid (`k^4` points).
    pub fn interior_grid(&self, k: usize) -> Vec<[f64; 4]> {
        let frac = |j: usize| (j as f64 + 0.5) / k as f64;
        let mut pts = Vec::with_capacity(k.pow(4));
        for a in 0..k {
            for b in 0..k {
                for c in 0..k {
                    for d in 0..k {
                        pts.push(self.lerp([frac(a), frac(b), frac(c), frac(d)]));
                    }
                }
            }
        }
        pts
    }

    /// Points on the faces of the box: a `k^3` grid on each of the 8 faces.
    pub fn boundary_grid(&self, k: usize) -> Vec<[f64; 4]> {
        let mut pts = Vec::new();
        let frac = |j: usize| if k == 1 { 0.5 } else { j as f64 / (k - 1) as f64 };
        for axis in 0..4 {
            for side in [0.0, 1.0] {
                for a in 0..k {
                    for b in 0..k {
                        for c in 0..k {
                            let mut t = [0.0; 4];
                            let mut free = [frac(a), frac(b), frac(c)].into_iter();
                            for (i, ti) in t.iter_mut().enumerate() {
                                *ti = if i == axis { side } else { free.next().unwrap() };
                            }
                            pts.push(self.lerp(t));
                        }
                    }
                }
            }
        }
        pts
    }
}

/// Index of the independent component `(a, b)` of a symmetric 4×4 tensor.
pub fn sym_index(a: usize, b: usize) -> usize {
    let (i, j) = if a <= b { (a, b) } else { (b, a) };
    // rows: (0,0..3) -> 0..3, (1,1..3) -> 4..6, (2,2..3) -> 7..8, (3,3) -> 9
    const OFFSET: [usize; 4] = [0, 4, 7, 9];
    OFFSET[i] + (j - i)
}

/// Metric with first and second coordinate derivatives at a point.
/// `dg[c][a][b] = ∂_c g_ab`, `ddg[c][d][a][b] = ∂_c ∂_d g_ab`.
#[derive(Clone, Copy, Debug)]
pub struct MetricDerivs<T> {
    pub g: Mat4<T>,
    pub dg: [Mat4<T>; 4],
    pub ddg: [[Mat4<T>; 4]; 4],
}

#[derive(Clone, Debug)]
struct MetricTapes {
    order0: Tape,
    order1: Tape,
    order2: Tape,
}

/// A chart with metric components given as expressions.
#[derive(Clone, Debug)]
pub struct Spacetime {
    name: String,
    domain: CoordBox,
    components: [Expr; 10],
    conformal_factor: Option<Expr>,
    patch_radius: f64,
    tapes: std::sync::Arc<MetricTapes>,
}

impl Spacetime {
    /// Builds a spacetime from the ten independent components, validating the
    /// signature on a sample grid.
    pub fn new(
        name: &str,
        domain: CoordBox,
        components: [Expr; 10],
        conformal_factor: Option<Expr>,
        patch_radius: f64,
    ) -> Result<Self> {
        let st = Self::build(name, domain, components, conformal_factor, patch_radius);
        st.validate()?;
        Ok(st)
    }

    fn build(
        name: &str,
        domain: CoordBox,
        components: [Expr; 10],
        conformal_factor: Option<Expr>,
        patch_radius: f64,
    ) -> Self {
        let mut d1 = components.to_vec();
        let mut d2 = components.to_vec();
        let first: Vec<Vec<Expr>> = (0..4).map(|c| components.iter().map(|e| e.diff(c)).collect()).collect();
        for fc in &first {
            d1.extend(fc.iter().cloned());
            d2.extend(fc.iter().cloned());
        }
        for c in 0..4 {
            for d in 0..4 {
                for e in &first[c] {
                    d2.push(e.diff(d));
                }
            }
        }
        let tapes = MetricTapes {
            order0: Tape::compile(&components),
            order1: Tape::compile(&d1),
            order2: Tape::compile(&d2),
        };
        Spacetime {
            name: name.to_string(),
            domain,
            components,
            conformal_factor,
            patch_radius,
            tapes: std::sync::Arc::new(tapes),
        }
    }

    /// Builds from a full 4×4 matrix of expressions; it must be symmetric at
    /// the sample points.
    pub fn from_matrix(
        name: &str,
        domain: CoordBox,
        g: [[Expr; 4]; 4],
        conformal_factor: Option<Expr>,
        patch_radius: f64,
    ) -> Result<Self> {
        for p in domain.interior_grid(2) {
            for a in 0..4 {
                for b in a + 1..4 {
                    let x = g[a][b].eval_f64(&p)?;
                    let y = g[b][a].eval_f64(&p)?;
                    if (x - y).abs() > 1e-12 * (1.0 + x.abs()) {
                        return Err(Error::InvalidMetric(format!("g[{a}][{b}] != g[{b}][{a}] at {p:?}")));
                    }
                }
            }
        }
        let comps: [Expr; 10] = std::array::from_fn(|k| {
            let (a, b) = (0..4)
                .flat_map(|a| (a..4).map(move |b| (a, b)))
                .find(|&(a, b)| sym_index(a, b) == k)
                .unwrap();
            g[a][b].clone()
        });
        Spacetime::new(name, domain, comps, conformal_factor, patch_radius)
    }

    /// `g = ω² η` in the given chart.
    pub fn conformally_flat(name: &str, domain: CoordBox, omega: Expr, patch_radius: f64) -> Result<Self> {
        let w2 = Expr::pow(omega.clone(), 2);
        let comps: [Expr; 10] = std::array::from_fn(|k| match k {
            0 => Expr::neg(w2.clone()),
            4 | 7 | 9 => w2.clone(),
            _ => Expr::num(0.0),
        });
        Spacetime::new(name, domain, comps, Some(omega), patch_radius)
    }

    /// Flat space; the whole chart is one convex patch.
    pub fn minkowski(domain: CoordBox) -> Self {
        let diag = (0..4).map(|i| (domain.hi[i] - domain.lo[i]).powi(2)).sum::<f64>().sqrt();
        Spacetime::conformally_flat("minkowski", domain, Expr::num(1.0), diag).expect("flat metric is valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &CoordBox {
        &self.domain
    }

    pub fn patch_radius(&self) -> f64 {
        self.patch_radius
    }

    pub fn conformal_factor(&self) -> Option<&Expr> {
        self.conformal_factor.as_ref()
    }

    pub fn component(&self, a: usize, b: usize) -> &Expr {
        &self.components[sym_index(a, b)]
    }

    pub fn components(&self) -> &[Expr; 10] {
        &self.components
    }

    /// All metric components are literal constants (geodesics are straight).
    pub fn has_constant_metric(&self) -> bool {
        self.components.iter().all(|e| e.as_num().is_some())
    }

    pub fn is_conformally_flat(&self) -> bool {
        self.conformal_factor.is_some()
    }

    pub fn check_point(&self, p: &[f64; 4]) -> Result<()> {
        if self.domain.contains(p) {
            Ok(())
        } else {
            Err(Error::OutsideDomain(*p))
        }
    }

    /// The metric `c·g` (for a rigid dilation `λ⁻² g`, `c = λ⁻²`). Geodesics
    /// are unchanged as coordinate curves, so the patch radius stays.
    pub fn scaled(&self, name: &str, c: f64) -> Result<Self> {
        assert!(c > 0.0);
        let comps = self.components.clone().map(|e| Expr::mul(Expr::num(c), e));
        let omega = self.conformal_factor.clone().map(|w| Expr::mul(Expr::num(c.sqrt()), w));
        Spacetime::new(name, self.domain, comps, omega, self.patch_radius)
    }

    /// The metric `Ω² g` on the same chart.
    pub fn conformally_rescaled(&self, name: &str, omega: &Expr) -> Result<Self> {
        let w2 = Expr::pow(omega.clone(), 2);
        let comps = self.components.clone().map(|e| Expr::mul(w2.clone(), e));
        let factor = self.conformal_factor.clone().map(|w| Expr::mul(omega.clone(), w));
        Spacetime::new(name, self.domain, comps, factor, self.patch_radius)
    }

    fn unpack_sym<T: Real>(vals: &[T]) -> Mat4<T> {
        std::array::from_fn(|a| std::array::from_fn(|b| vals[sym_index(a, b)]))
    }

    pub fn metric<T: Real>(&self, x: &[T; 4]) -> Result<Mat4<T>> {
        let mut out = [T::zero(); 10];
        self.tapes.order0.eval(x, &mut out)?;
        Ok(Self::unpack_sym(&out))
    }

    /// Metric and first derivatives.
    pub fn metric_d1<T: Real>(&self, x: &[T; 4]) -> Result<(Mat4<T>, [Mat4<T>; 4])> {
        let mut out = vec![T::zero(); 50];
        self.tapes.order1.eval(x, &mut out)?;
        let g = Self::unpack_sym(&out[..10]);
        let dg = std::array::from_fn(|c| Self::unpack_sym(&out[10 + 10 * c..20 + 10 * c]));
        Ok((g, dg))
    }

    pub fn metric_d2<T: Real>(&self, x: &[T; 4]) -> Result<MetricDerivs<T>> {
        let mut out = vec![T::zero(); 210];
        self.tapes.order2.eval(x, &mut out)?;
        let g = Self::unpack_sym(&out[..10]);
        let dg = std::array::from_fn(|c| Self::unpack_sym(&out[10 + 10 * c..20 + 10 * c]));
        let ddg = std::array::from_fn(|c| {
            std::array::from_fn(|d| {
                let off = 50 + 40 * c + 10 * d;
                Self::unpack_sym(&out[off..off + 10])
            })
        });
        Ok(MetricDerivs { g, dg, ddg })
    }

    /// Symbolic derivative of one component for a multi-index of coordinates.
    pub fn component_derivative(&self, a: usize, b: usize, vars: &[usize]) -> Expr {
        self.component(a, b).diff_multi(vars)
    }

    /// Checks the Lorentzian signature and, when present, the
    /// conformally-flat representation on a sample grid.
    pub fn validate(&self) -> Result<()> {
        if !(self.patch_radius > 0.0) {
            return Err(Error::InvalidMetric(format!("{}: patch radius must be positive", self.name)));
        }
        for p in self.domain.interior_grid(3).into_iter().chain(self.domain.boundary_grid(2)) {
            self.check_signature(&p)?;
            if let Some(w) = &self.conformal_factor {
                let w = w.eval_f64(&p)?;
                let g = self.metric(&p)?;
                let eta = linalg::minkowski::<f64>();
                for a in 0..4 {
                    for b in 0..4 {
                        let expect = w * w * eta[a][b];
                        if (g[a][b] - expect).abs() > 1e-12 * (1.0 + expect.abs()) {
                            return Err(Error::InvalidMetric(format!(
                                "{}: metric differs from the conformally flat form at {p:?}",
                                self.name
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Eigenvalue signature must be (−,+,+,+).
    pub fn check_signature(&self, p: &[f64; 4]) -> Result<()> {
        let g = self.metric(p)?;
        let ev = linalg::symmetric_eigenvalues(&g);
        let scale = ev.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if scale == 0.0 || ev[0] >= -1e-12 * scale || ev[1] <= 1e-12 * scale {
            return Err(Error::InvalidMetric(format!(
                "{}: signature at {p:?} is not (-,+,+,+): eigenvalues {ev:?}",
                self.name
            )));
        }
        Ok(())
    }
}
