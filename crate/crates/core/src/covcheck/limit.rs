//! Coincidence limits along a geodesic through `x`.
//!
//! Samples `F(y(±s))` with `y(s) = exp_x(s w)` on a geometric schedule,
//! averages the two signs to drop odd powers of `s`, and fits
//! `L + a s² + b s² ln s + c s⁴` by least squares. Smooth bitensors only
//! need the polynomial terms; the logarithm absorbs `v log σ` remainders.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exprgeom::Spacetime;
use crate::linalg;
use crate::worldfn::exp_map;

/// One sample of the function whose limit is taken: the value and the
/// magnitude of the largest term that cancels in it, which sets the
/// rounding floor.
#[derive(Clone, Copy, Debug)]
pub struct Sample {
    pub value: f64,
    pub magnitude: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitProbe {
    pub x: [f64; 4],
    /// Unit spacelike direction at `x`.
    pub w: [f64; 4],
    /// Decreasing positive step sizes.
    pub s_schedule: Vec<f64>,
    /// Sign-averaged samples along the schedule.
    pub samples: Vec<f64>,
    /// Limit estimates from the fits on the schedule tails, longest first.
    pub tail_estimates: Vec<f64>,
    pub extrapolated_value: f64,
    /// Empirical order of the approach to the limit; infinite when the
    /// samples agree to rounding.
    pub order_estimate: f64,
}

/// `0.08 · 2^{-k}` for `k = 0..5`.
pub fn default_schedule() -> Vec<f64> {
    (0..6).map(|k| 0.08 * 0.5f64.powi(k)).collect()
}

/// Order below which a limit is not accepted as converged.
pub const MIN_ORDER: f64 = 1.8;

impl LimitProbe {
    /// Probe at `x` along `w`, normalised to unit length in `st`.
    pub fn new(st: &Spacetime, x: [f64; 4], w: [f64; 4]) -> Result<Self> {
        let n = linalg::quad_form(&st.metric(&x)?, &w, &w);
        if !(n > 0.0) {
            return Err(Error::Domain(format!("direction {w:?} is not spacelike at {x:?}")));
        }
        let w = w.map(|c| c / n.sqrt());
        Ok(LimitProbe {
            x,
            w,
            s_schedule: default_schedule(),
            samples: Vec::new(),
            tail_estimates: Vec::new(),
            extrapolated_value: f64::NAN,
            order_estimate: f64::NAN,
        })
    }

    pub fn with_schedule(mut self, s: Vec<f64>) -> Self {
        self.s_schedule = s;
        self
    }

    /// The probe points `exp_x(±s w)` for every `s`, plus sign first.
    pub fn points(&self, st: &Spacetime, steps: usize) -> Result<Vec<([f64; 4], [f64; 4])>> {
        self.s_schedule
            .iter()
            .map(|&s| Ok((exp_map(st, self.x, self.w.map(|c| s * c), steps)?, exp_map(st, self.x, self.w.map(|c| -s * c), steps)?)))
            .collect()
    }

    /// Runs the extrapolation on `f(y)` with `y` the probe points in `st`.
    pub fn run(&self, st: &Spacetime, steps: usize, f: impl Fn(&[f64; 4]) -> Result<Sample>) -> Result<LimitProbe> {
        let mut values = Vec::new();
        let mut floor: f64 = 0.0;
        for (yp, ym) in self.points(st, steps)? {
            let (a, b) = (f(&yp)?, f(&ym)?);
            values.push(0.5 * (a.value + b.value));
            floor = floor.max(a.magnitude).max(b.magnitude);
        }
        self.extrapolate(values, 1e-13 * floor)
    }

    /// Fits the sign-averaged `values` (one per schedule entry). Differences
    /// below `noise` count as rounding.
    pub fn extrapolate(&self, values: Vec<f64>, noise: f64) -> Result<LimitProbe> {
        let s = &self.s_schedule;
        if values.len() != s.len() || s.len() < 5 {
            return Err(Error::Extrapolation(format!("need at least 5 samples, got {}", values.len())));
        }
        let diffs: Vec<f64> = values.windows(2).map(|w| (w[0] - w[1]).abs()).collect();
        let mut out = self.clone();
        out.samples = values.clone();
        if diffs.iter().all(|d| *d <= noise) {
            let last = *values.last().expect("non-empty");
            out.tail_estimates = vec![last; 2];
            out.extrapolated_value = last;
            out.order_estimate = f64::INFINITY;
            return Ok(out);
        }
        // the order from the last pair of differences above the noise
        let ratio = s[s.len() - 2] / s[s.len() - 1];
        let usable: Vec<f64> = diffs.iter().copied().take_while(|d| *d > noise).collect();
        out.order_estimate = if usable.len() >= 2 {
            let k = usable.len() - 1;
            (usable[k - 1] / usable[k]).ln() / ratio.ln()
        } else {
            f64::INFINITY
        };
        out.tail_estimates = (0..=s.len() - 5).map(|start| fit_limit(&s[start..], &values[start..])).collect::<Result<_>>()?;
        out.extrapolated_value = *out.tail_estimates.last().expect("non-empty");
        Ok(out)
    }

    /// Spread of the last two tail fits, the uncertainty of the limit.
    pub fn residual(&self) -> f64 {
        let n = self.tail_estimates.len();
        if n < 2 {
            return 0.0;
        }
        (self.tail_estimates[n - 1] - self.tail_estimates[n - 2]).abs()
    }

    pub fn converged(&self) -> bool {
        self.order_estimate >= MIN_ORDER
    }
}

/// Least-squares fit of `L + a s² + b s² ln s + c s⁴`; returns `L`.
fn fit_limit(s: &[f64], v: &[f64]) -> Result<f64> {
    const K: usize = 4;
    let scale = s[0];
    let basis = |s: f64| -> [f64; K] {
        let t = s / scale;
        [1.0, t * t, t * t * t.ln(), t.powi(4)]
    };
    let mut ata = [[0.0; K]; K];
    let mut atb = [0.0; K];
    for (si, vi) in s.iter().zip(v) {
        let b = basis(*si);
        for i in 0..K {
            atb[i] += b[i] * vi;
            for j in 0..K {
                ata[i][j] += b[i] * b[j];
            }
        }
    }
    let sol = solve(ata, atb).ok_or_else(|| Error::Extrapolation("singular fit".into()))?;
    Ok(sol[0])
}

/// Gaussian elimination with partial pivoting.
fn solve<const K: usize>(mut a: [[f64; K]; K], mut b: [f64; K]) -> Option<[f64; K]> {
    for c in 0..K {
        let p = (c..K).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c] == 0.0 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..K {
            let m = a[r][c] / a[c][c];
            for k in c..K {
                a[r][k] -= m * a[c][k];
            }
            b[r] -= m * b[c];
        }
    }
    let mut x = [0.0; K];
    for r in (0..K).rev() {
        let mut acc = b[r];
        for k in r + 1..K {
            acc -= a[r][k] * x[k];
        }
        x[r] = acc / a[r][r];
    }
    Some(x)
}
