//! Conformal embeddings `ψ: (M₁, g₁) → (M₂, g₂)` with `ψ_* g₁ = Ω⁻² g₂`.

use std::sync::Arc;

use super::testfn::TestFunction;
use crate::error::{Error, Result};
use crate::exprgeom::tape::Tape;
use crate::exprgeom::{curvature_at, CoordBox, Expr, Func, Spacetime};
use crate::jet::Jet2;
use crate::linalg::Mat4;
use crate::scalar::Real;

const INVERSE_TOL: f64 = 1e-10;
const METRIC_LAW_TOL: f64 = 1e-8;

/// `∇_μ log Ω` and `∇_μ∇_ν log Ω` at a point, covariant derivatives taken
/// with the pushed-forward source metric `Ω⁻² g₂`.
#[derive(Clone, Copy, Debug)]
pub struct ConformalJet {
    pub point: [f64; 4],
    pub l: [f64; 4],
    pub l2: Mat4<f64>,
}

#[derive(Clone, Debug)]
pub struct ConformalEmbedding {
    name: String,
    source: Spacetime,
    target: Spacetime,
    psi: [Expr; 4],
    psi_inv: [Expr; 4],
    omega: Expr,
    image: CoordBox,
    /// Names of the elementary embeddings this one is composed of, innermost
    /// first; empty for an identity.
    factors: Vec<String>,
    psi_tape: Arc<Tape>,
    psi_inv_tape: Arc<Tape>,
    omega_tape: Arc<Tape>,
}

impl ConformalEmbedding {
    /// Builds and validates an embedding. `omega` is a function of the
    /// target coordinates.
    pub fn new(
        name: &str,
        source: Spacetime,
        target: Spacetime,
        psi: [Expr; 4],
        psi_inv: [Expr; 4],
        omega: Expr,
        image: CoordBox,
    ) -> Result<Self> {
        let e = ConformalEmbedding {
            name: name.to_string(),
            factors: vec![name.to_string()],
            psi_tape: Arc::new(Tape::compile(&psi)),
            psi_inv_tape: Arc::new(Tape::compile(&psi_inv)),
            omega_tape: Arc::new(Tape::compile(std::slice::from_ref(&omega))),
            source,
            target,
            psi,
            psi_inv,
            omega,
            image,
        };
        e.validate()?;
        Ok(e)
    }

    fn invalid(&self, reason: String) -> Error {
        Error::InvalidEmbedding { name: self.name.clone(), reason }
    }

    /// Image samples: an interior grid plus the faces of the image box.
    fn image_samples(&self) -> Vec<[f64; 4]> {
        let mut pts = self.image.interior_grid(3);
        pts.extend(self.image.boundary_grid(2));
        pts
    }

    fn validate(&self) -> Result<()> {
        if !self.target.domain().contains_box(&self.image) {
            return Err(self.invalid("image box is not inside the target chart".into()));
        }
        for x in self.image_samples() {
            let w = self.omega_at(&x)?;
            if !(w > 0.0) {
                return Err(self.invalid(format!("conformal factor {w} is not positive at {x:?}")));
            }
            let p = self.apply_inverse(&x)?;
            if !self.source.domain().contains(&p) {
                return Err(self.invalid(format!("preimage {p:?} of {x:?} is outside the source chart")));
            }
            let back = self.apply(&p)?;
            let err = (0..4).map(|i| (back[i] - x[i]).abs()).fold(0.0, f64::max);
            if err > INVERSE_TOL * (1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
                return Err(self.invalid(format!("psi(psi_inv(x)) misses x by {err:e} at {x:?}")));
            }
            let pp = self.apply_inverse(&back)?;
            let err = (0..4).map(|i| (pp[i] - p[i]).abs()).fold(0.0, f64::max);
            if err > INVERSE_TOL * (1.0 + p.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
                return Err(self.invalid(format!("psi_inv(psi(p)) misses p by {err:e} at {p:?}")));
            }
            let pushed = self.pushed_metric(&x)?;
            let g2 = self.target.metric(&x)?;
            let scale = g2.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
            for a in 0..4 {
                for b in 0..4 {
                    let d = (pushed[a][b] - g2[a][b] / (w * w)).abs();
                    if d > METRIC_LAW_TOL * scale / (w * w) {
                        return Err(self.invalid(format!(
                            "metric law fails at {x:?}: (psi_* g1)[{a}][{b}] = {} but Omega^-2 g2 = {}",
                            pushed[a][b],
                            g2[a][b] / (w * w)
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// `ψ = id` with `g₂ = Ω² g₁` on the same chart.
    pub fn conformal_transformation(name: &str, source: Spacetime, target: Spacetime, omega: Expr) -> Result<Self> {
        let image = *source.domain();
        let id: [Expr; 4] = std::array::from_fn(Expr::var);
        Self::new(name, source, target, id.clone(), id, omega, image)
    }

    /// The identity morphism of `st`.
    pub fn identity(st: &Spacetime) -> Self {
        let mut e =
            Self::conformal_transformation(&format!("id_{}", st.name()), st.clone(), st.clone(), Expr::num(1.0))
                .expect("identity is a conformal embedding");
        e.factors.clear();
        e
    }

    /// `ψ(x) = λ x` from `st` into the dilated chart carrying the same
    /// metric expressions; valid when `g(λx) = g(x)` as for Minkowski, with
    /// `Ω = λ`.
    pub fn linear_dilation(name: &str, source: Spacetime, target: Spacetime, lambda: f64) -> Result<Self> {
        let psi: [Expr; 4] = std::array::from_fn(|i| Expr::mul(Expr::num(lambda), Expr::var(i)));
        let psi_inv: [Expr; 4] = std::array::from_fn(|i| Expr::mul(Expr::num(1.0 / lambda), Expr::var(i)));
        let d = source.domain();
        let image = CoordBox::new(d.lo.map(|v| v * lambda), d.hi.map(|v| v * lambda))?;
        Self::new(name, source, target, psi, psi_inv, Expr::num(lambda), image)
    }

    /// Rigid dilation in the sense `g ↦ λ⁻² g` on the same chart: identity
    /// map into `λ⁻² g` with `Ω = λ⁻¹`.
    pub fn rigid_dilation(st: &Spacetime, lambda: f64) -> Result<Self> {
        let target = st.scaled(&format!("{}_scaled_{lambda}", st.name()), lambda.powi(-2))?;
        Self::conformal_transformation(
            &format!("dilate_{}_{lambda}", st.name()),
            st.clone(),
            target,
            Expr::num(1.0 / lambda),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn factors(&self) -> &[String] {
        &self.factors
    }

    pub fn source(&self) -> &Spacetime {
        &self.source
    }

    pub fn target(&self) -> &Spacetime {
        &self.target
    }

    pub fn psi(&self) -> &[Expr; 4] {
        &self.psi
    }

    pub fn psi_inv(&self) -> &[Expr; 4] {
        &self.psi_inv
    }

    pub fn omega(&self) -> &Expr {
        &self.omega
    }

    pub fn image(&self) -> &CoordBox {
        &self.image
    }

    pub fn is_identity_map(&self) -> bool {
        (0..4).all(|i| matches!(self.psi[i], Expr::Var(v) if v as usize == i))
            && (0..4).all(|i| matches!(self.psi_inv[i], Expr::Var(v) if v as usize == i))
    }

    pub fn apply(&self, p: &[f64; 4]) -> Result<[f64; 4]> {
        let mut out = [0.0; 4];
        self.psi_tape.eval(p, &mut out)?;
        Ok(out)
    }

    pub fn apply_inverse(&self, x: &[f64; 4]) -> Result<[f64; 4]> {
        let mut out = [0.0; 4];
        self.psi_inv_tape.eval(x, &mut out)?;
        Ok(out)
    }

    pub fn omega_at(&self, x: &[f64; 4]) -> Result<f64> {
        let mut out = [0.0];
        self.omega_tape.eval(x, &mut out)?;
        Ok(out[0])
    }

    /// `Ω` with any scalar type (jets give its Taylor expansion).
    pub fn omega_generic<T: Real>(&self, x: &[T; 4]) -> Result<T> {
        let mut out = [T::zero()];
        self.omega_tape.eval(x, &mut out)?;
        Ok(out[0])
    }

    /// `(ψ_* g₁)_ab(x) = ∂_a ψ⁻¹^c ∂_b ψ⁻¹^d g₁_cd(ψ⁻¹ x)`.
    pub fn pushed_metric(&self, x: &[f64; 4]) -> Result<Mat4<f64>> {
        let p = self.apply_inverse(x)?;
        let g1 = self.source.metric(&p)?;
        let mut jac = [[0.0; 4]; 4];
        for c in 0..4 {
            for a in 0..4 {
                jac[c][a] = self.psi_inv[c].diff(a).eval_f64(x)?;
            }
        }
        Ok(std::array::from_fn(|a| {
            std::array::from_fn(|b| {
                let mut acc = 0.0;
                for c in 0..4 {
                    for d in 0..4 {
                        acc += jac[c][a] * jac[d][b] * g1[c][d];
                    }
                }
                acc
            })
        }))
    }

    /// The metric `Ω⁻² g₂` on the image, as a spacetime in target coordinates.
    pub fn pulled_source_metric(&self) -> Result<Spacetime> {
        let w2 = Expr::pow(self.omega.clone(), -2);
        let comps = self.target.components().clone().map(|e| Expr::mul(w2.clone(), e));
        let factor = self.target.conformal_factor().map(|w| Expr::div(w.clone(), self.omega.clone()));
        Spacetime::new(&format!("{}_pullback", self.name), self.image, comps, factor, self.source.patch_radius())
    }

    /// `L_μ` and `L_μν` at an image point.
    pub fn conformal_jet(&self, x: &[f64; 4]) -> Result<ConformalJet> {
        let h = self.pulled_source_metric()?;
        let xj: [Jet2; 4] = Jet2::seed_point(x);
        let log_w = self.omega_generic(&xj)?.ln();
        let l = log_w.gradient();
        let hess = log_w.hessian();
        let curv = curvature_at(&h, x)?;
        let l2 = std::array::from_fn(|a| {
            std::array::from_fn(|b| hess[a][b] - (0..4).map(|c| curv.gamma[c][a][b] * l[c]).sum::<f64>())
        });
        Ok(ConformalJet { point: *x, l, l2 })
    }

    /// `ψ₂ ∘ ψ₁` with `Ω₁₂ = Ω₂ · (Ω₁ ∘ ψ₂⁻¹)`.
    pub fn compose(e2: &ConformalEmbedding, e1: &ConformalEmbedding) -> Result<ConformalEmbedding> {
        if e1.target.name() != e2.source.name() {
            return Err(Error::DomainMismatch(format!(
                "`{}` ends on `{}` but `{}` starts on `{}`",
                e1.name,
                e1.target.name(),
                e2.name,
                e2.source.name()
            )));
        }
        if !e2.source.domain().contains_box(&e1.image) {
            return Err(Error::DomainMismatch(format!(
                "image of `{}` is not inside the domain of `{}`",
                e1.name, e2.name
            )));
        }
        let psi = e2.psi.clone().map(|c| c.substitute(&e1.psi));
        let psi_inv = e1.psi_inv.clone().map(|c| c.substitute(&e2.psi_inv));
        let omega = Expr::mul(e2.omega.clone(), e1.omega.substitute(&e2.psi_inv));
        let image = image_box(&e1.image, |p| e2.apply(p))?;
        let image = intersect(&image, &e2.image)?;
        let mut e = ConformalEmbedding::new(
            &format!("{}.{}", e2.name, e1.name),
            e1.source.clone(),
            e2.target.clone(),
            psi,
            psi_inv,
            omega,
            image,
        )?;
        e.factors = e1.factors.iter().chain(&e2.factors).cloned().collect();
        Ok(e)
    }

    /// `ψ_*^{(λ)} f = Ω^{−λ} · (f ∘ ψ⁻¹)`.
    pub fn weighted_pushforward(&self, lambda: f64, f: &TestFunction) -> Result<TestFunction> {
        if !self.source.domain().contains_box(f.support()) {
            return Err(Error::SupportEscapes(format!("support of f is not inside `{}`", self.source.name())));
        }
        let support = image_box(f.support(), |p| self.apply(p))?;
        if !self.image.contains_box(&support) {
            return Err(Error::SupportEscapes(format!(
                "pushed support {:?}..{:?} leaves the image of `{}`",
                support.lo, support.hi, self.name
            )));
        }
        let moved = if self.is_identity_map() { f.expr().clone() } else { f.expr().substitute(&self.psi_inv) };
        let e = Expr::mul(omega_power(&self.omega, -lambda), moved);
        Ok(TestFunction::unchecked(e, support, lambda))
    }

    /// Inverse of [`Self::weighted_pushforward`]: `f ↦ (Ω^λ f) ∘ ψ`.
    pub fn weighted_pullback(&self, lambda: f64, f: &TestFunction) -> Result<TestFunction> {
        let support = image_box(f.support(), |x| self.apply_inverse(x))?;
        let body = Expr::mul(omega_power(&self.omega, lambda), f.expr().clone());
        let e = if self.is_identity_map() { body } else { body.substitute(&self.psi) };
        Ok(TestFunction::unchecked(e, support, lambda))
    }
}

/// `Ω^k`, as an integer power when `k` is integral.
pub fn omega_power(omega: &Expr, k: f64) -> Expr {
    if k == 0.0 {
        Expr::num(1.0)
    } else if k.fract() == 0.0 && k.abs() < 64.0 {
        Expr::pow(omega.clone(), k as i32)
    } else {
        Expr::func(Func::Exp, Expr::mul(Expr::num(k), Expr::func(Func::Log, omega.clone())))
    }
}

/// Bounding box of the image of a box under `map`, sampled on a face grid.
fn image_box(b: &CoordBox, map: impl Fn(&[f64; 4]) -> Result<[f64; 4]>) -> Result<CoordBox> {
    let mut lo = [f64::INFINITY; 4];
    let mut hi = [f64::NEG_INFINITY; 4];
    for p in b.boundary_grid(5) {
        let q = map(&p)?;
        for i in 0..4 {
            lo[i] = lo[i].min(q[i]);
            hi[i] = hi[i].max(q[i]);
        }
    }
    CoordBox::new(lo, hi)
}

fn intersect(a: &CoordBox, b: &CoordBox) -> Result<CoordBox> {
    let lo = std::array::from_fn(|i| a.lo[i].max(b.lo[i]));
    let hi = std::array::from_fn(|i| a.hi[i].min(b.hi[i]));
    CoordBox::new(lo, hi).map_err(|_| Error::DomainMismatch("composite image is empty".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprgeom::parse_expr;

    fn mink(lo: f64, hi: f64) -> Spacetime {
        Spacetime::minkowski(CoordBox::new([lo; 4], [hi; 4]).unwrap())
    }

    #[test]
    fn identity_leaves_functions_alone() {
        let st = mink(-1.0, 1.0);
        let id = ConformalEmbedding::identity(&st);
        let f = TestFunction::bump([0.0; 4], [0.3; 4], 1.0);
        let g = id.weighted_pushforward(2.5, &f).unwrap();
        for p in f.support().interior_grid(3) {
            assert_eq!(f.eval(&p).unwrap(), g.eval(&p).unwrap());
        }
    }

    #[test]
    fn dilation_by_two_with_weight_three() {
        let e = ConformalEmbedding::linear_dilation("d2", mink(-1.0, 1.0), mink(-2.0, 2.0), 2.0).unwrap();
        let f = TestFunction::bump([0.1, 0.0, -0.1, 0.2], [0.3; 4], 1.0);
        let g = e.weighted_pushforward(3.0, &f).unwrap();
        for p in f.support().interior_grid(2) {
            let x = e.apply(&p).unwrap();
            assert!((g.eval(&x).unwrap() - f.eval(&p).unwrap() / 8.0).abs() < 1e-15);
        }
    }

    #[test]
    fn non_positive_factor_is_rejected() {
        let st = mink(-1.0, 1.0);
        let r = ConformalEmbedding::conformal_transformation("bad", st.clone(), st, parse_expr("x1").unwrap());
        assert!(matches!(r, Err(Error::InvalidEmbedding { .. })));
    }

    #[test]
    fn wrong_factor_breaks_the_metric_law() {
        let st = mink(-1.0, 1.0);
        let r = ConformalEmbedding::conformal_transformation("bad", st.clone(), st, Expr::num(2.0));
        assert!(matches!(r, Err(Error::InvalidEmbedding { .. })));
    }
}
