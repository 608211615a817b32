//! Conformal embeddings, weighted transport of test functions and the
//! conformal law of the wave operator.

mod embedding;
mod testfn;

pub use embedding::{omega_power, ConformalEmbedding, ConformalJet};
pub use testfn::{TestFunction, SUPPORT_EPS};

use crate::error::Result;
use crate::exprgeom::wave_operator_apply;

/// Residual of `P_{g₂}(ψ_*^{(1)} f) = ψ_*^{(3)}(P_{g₁} f)` at image points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaveLawResidual {
    pub max_residual: f64,
    /// `max |ψ_*^{(3)}(P_{g₁} f)|` over the same points.
    pub max_rhs: f64,
}

impl WaveLawResidual {
    pub fn relative(&self) -> f64 {
        self.max_residual / self.max_rhs.max(f64::MIN_POSITIVE)
    }
}

/// Evaluates both sides of the conformal wave law at `pts` (target
/// coordinates).
pub fn check_wave_conformal_law(
    e: &ConformalEmbedding,
    f: &TestFunction,
    pts: &[[f64; 4]],
) -> Result<WaveLawResidual> {
    let pushed = e.weighted_pushforward(1.0, f)?;
    let mut out = WaveLawResidual { max_residual: 0.0, max_rhs: 0.0 };
    for x in pts {
        e.target().check_point(x)?;
        let lhs = wave_operator_apply(e.target(), pushed.expr(), x)?;
        let p = e.apply_inverse(x)?;
        let rhs = e.omega_at(x)?.powi(-3) * wave_operator_apply(e.source(), f.expr(), &p)?;
        out.max_residual = out.max_residual.max((lhs - rhs).abs());
        out.max_rhs = out.max_rhs.max(rhs.abs());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprgeom::{parse_expr, CoordBox, Spacetime};

    #[test]
    fn minkowski_to_de_sitter() {
        let dom = CoordBox::new([0.5, -1.0, -1.0, -1.0], [2.0, 1.0, 1.0, 1.0]).unwrap();
        let flat = Spacetime::minkowski(dom);
        let ds = Spacetime::conformally_flat("ds", dom, parse_expr("1/x0").unwrap(), 0.5).unwrap();
        let e = ConformalEmbedding::conformal_transformation("m2ds", flat, ds, parse_expr("1/x0").unwrap()).unwrap();
        let f = TestFunction::bump([1.2, 0.0, 0.1, 0.0], [0.3, 0.4, 0.4, 0.4], 1.0);
        let pts: Vec<_> = CoordBox::around([1.2, 0.0, 0.1, 0.0], [0.1; 4]).interior_grid(2);
        let r = check_wave_conformal_law(&e, &f, &pts).unwrap();
        assert!(r.relative() < 1e-10, "{r:?}");
        let jet = e.conformal_jet(&[1.2, 0.0, 0.0, 0.0]).unwrap();
        assert!((jet.l[0] + 1.0 / 1.2).abs() < 1e-12);
    }
}
