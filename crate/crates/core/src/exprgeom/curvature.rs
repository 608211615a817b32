//! Christoffel symbols, Riemann and Ricci tensors, scalar curvature and the
//! Weyl square from symbolic metric derivatives.
//!
//! Conventions: `Γ^a_bc = ½ g^ad (∂_b g_dc + ∂_c g_db − ∂_d g_bc)`,
//! `R^a_bcd = ∂_c Γ^a_db − ∂_d Γ^a_cb + Γ^a_ce Γ^e_db − Γ^a_de Γ^e_cb`,
//! `R_bd = R^a_bad`. De Sitter space has `R > 0`.

use serde::{Deserialize, Serialize};

use super::spacetime::{MetricDerivs, Spacetime};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat4};
use crate::scalar::Real;

/// Sign of the Ricci tensor relative to the convention used internally.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignConvention {
    /// De Sitter has positive scalar curvature (used throughout this crate).
    DeSitterPositive,
    /// Ricci contracted on the other pair; de Sitter has `R < 0`.
    DeSitterNegative,
}

impl SignConvention {
    /// Factor converting a Ricci-linear quantity from the internal convention.
    pub fn ricci_sign(self) -> f64 {
        match self {
            SignConvention::DeSitterPositive => 1.0,
            SignConvention::DeSitterNegative => -1.0,
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            SignConvention::DeSitterPositive => "signature (-,+,+,+); R^a_bcd = d_c G^a_db - ...; R_bd = R^a_bad; R(de Sitter) > 0",
            SignConvention::DeSitterNegative => "signature (-,+,+,+); R_bd = R^a_bda; R(de Sitter) < 0",
        }
    }
}

pub type Christoffel<T> = [Mat4<T>; 4];
pub type Riemann<T> = [[Mat4<T>; 4]; 4];

#[derive(Clone, Copy, Debug)]
pub struct CurvatureBundle<T> {
    pub point: [f64; 4],
    pub g: Mat4<T>,
    pub ginv: Mat4<T>,
    /// `gamma[a][b][c] = Γ^a_bc`.
    pub gamma: Christoffel<T>,
    /// `riemann[a][b][c][d] = R^a_bcd`.
    pub riemann: Riemann<T>,
    pub ricci: Mat4<T>,
    pub r: T,
    /// `R_abcd R^abcd`.
    pub riem2: T,
    /// `R_ab R^ab`.
    pub ric2: T,
    /// `C_abcd C^abcd = R_abcd R^abcd − 2 R_ab R^ab + R²/3`.
    pub w2: T,
}

/// Christoffel symbols and their first derivatives
/// (`dgamma[e][a][b][c] = ∂_e Γ^a_bc`).
pub fn christoffel_with_derivs<T: Real>(m: &MetricDerivs<T>, ginv: &Mat4<T>) -> (Christoffel<T>, [Christoffel<T>; 4]) {
    let half = T::from_f64(0.5);
    // lowered Γ_dbc and its derivatives
    let low = |d: usize, b: usize, c: usize| m.dg[b][d][c] + m.dg[c][d][b] - m.dg[d][b][c];
    let dlow = |e: usize, d: usize, b: usize, c: usize| m.ddg[e][b][d][c] + m.ddg[e][c][d][b] - m.ddg[e][d][b][c];
    // ∂_e g^ad = −g^ap ∂_e g_pq g^qd
    let mut dginv = [linalg::zeros::<T>(); 4];
    for e in 0..4 {
        let t = linalg::mat_mul(&linalg::mat_mul(ginv, &m.dg[e]), ginv);
        for a in 0..4 {
            for d in 0..4 {
                dginv[e][a][d] = -t[a][d];
            }
        }
    }
    let mut gamma = [linalg::zeros::<T>(); 4];
    let mut dgamma = [[linalg::zeros::<T>(); 4]; 4];
    for b in 0..4 {
        for c in b..4 {
            let lows: [T; 4] = std::array::from_fn(|d| low(d, b, c));
            for a in 0..4 {
                let mut acc = T::zero();
                for d in 0..4 {
                    acc += ginv[a][d] * lows[d];
                }
                gamma[a][b][c] = acc * half;
                gamma[a][c][b] = gamma[a][b][c];
            }
            for e in 0..4 {
                let dl: [T; 4] = std::array::from_fn(|d| dlow(e, d, b, c));
                for a in 0..4 {
                    let mut acc = T::zero();
                    for d in 0..4 {
                        acc += dginv[e][a][d] * lows[d] + ginv[a][d] * dl[d];
                    }
                    dgamma[e][a][b][c] = acc * half;
                    dgamma[e][a][c][b] = dgamma[e][a][b][c];
                }
            }
        }
    }
    (gamma, dgamma)
}

/// Curvature from a metric derivative bundle. `point` only labels the result.
pub fn curvature_from_derivs<T: Real>(m: &MetricDerivs<T>, point: [f64; 4]) -> Result<CurvatureBundle<T>> {
    let ginv = linalg::inverse(&m.g).map_err(|_| Error::DegenerateMetric(point))?;
    let (gamma, dgamma) = christoffel_with_derivs(m, &ginv);
    let mut riemann = [[linalg::zeros::<T>(); 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in c + 1..4 {
                    let mut v = dgamma[c][a][d][b] - dgamma[d][a][c][b];
                    for e in 0..4 {
                        v += gamma[a][c][e] * gamma[e][d][b] - gamma[a][d][e] * gamma[e][c][b];
                    }
                    riemann[a][b][c][d] = v;
                    riemann[a][b][d][c] = -v;
                }
            }
        }
    }
    let mut ricci = linalg::zeros::<T>();
    for b in 0..4 {
        for d in 0..4 {
            let mut acc = T::zero();
            for a in 0..4 {
                acc += riemann[a][b][a][d];
            }
            ricci[b][d] = acc;
        }
    }
    let mut r = T::zero();
    for b in 0..4 {
        for d in 0..4 {
            r += ginv[b][d] * ricci[b][d];
        }
    }
    let (riem2, ric2) = quadratic_invariants(&m.g, &ginv, &riemann, &ricci);
    let w2 = riem2 - ric2 * T::from_f64(2.0) + r * r / T::from_f64(3.0);
    Ok(CurvatureBundle { point, g: m.g, ginv, gamma, riemann, ricci, r, riem2, ric2, w2 })
}

/// `(R_abcd R^abcd, R_ab R^ab)`.
fn quadratic_invariants<T: Real>(g: &Mat4<T>, ginv: &Mat4<T>, riem: &Riemann<T>, ricci: &Mat4<T>) -> (T, T) {
    // R_abcd = g_ae R^e_bcd ; R^ab_cd = R^a_e_cd g^eb
    let mut low = [[linalg::zeros::<T>(); 4]; 4];
    let mut up = [[linalg::zeros::<T>(); 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let mut l = T::zero();
                    let mut u = T::zero();
                    for e in 0..4 {
                        l += g[a][e] * riem[e][b][c][d];
                        u += riem[a][e][c][d] * ginv[e][b];
                    }
                    low[a][b][c][d] = l;
                    up[a][b][c][d] = u;
                }
            }
        }
    }
    // R^ab^cd = up[a][b][p][q] g^pc g^qd, contracted with R_abcd
    let mut riem2 = T::zero();
    for a in 0..4 {
        for b in 0..4 {
            let raised = linalg::mat_mul(&linalg::mat_mul(ginv, &up[a][b]), ginv);
            for c in 0..4 {
                for d in 0..4 {
                    riem2 += low[a][b][c][d] * raised[c][d];
                }
            }
        }
    }
    let ric_up = linalg::mat_mul(&linalg::mat_mul(ginv, ricci), ginv);
    let mut ric2 = T::zero();
    for a in 0..4 {
        for b in 0..4 {
            ric2 += ricci[a][b] * ric_up[a][b];
        }
    }
    (riem2, ric2)
}

/// Curvature of `st` at `p`.
pub fn curvature(st: &Spacetime, p: &[f64; 4]) -> Result<CurvatureBundle<f64>> {
    st.check_point(p)?;
    let m = st.metric_d2(p)?;
    curvature_from_derivs(&m, *p)
}

/// Curvature with the scalar type chosen by the caller (e.g. a jet seeded at
/// `x`, which yields the Taylor expansion of every component).
pub fn curvature_at<T: Real>(st: &Spacetime, x: &[T; 4]) -> Result<CurvatureBundle<T>> {
    let point = [x[0].re(), x[1].re(), x[2].re(), x[3].re()];
    let m = st.metric_d2(x)?;
    curvature_from_derivs(&m, point)
}

pub fn scalar_curvature(st: &Spacetime, p: &[f64; 4]) -> Result<f64> {
    Ok(curvature(st, p)?.r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprgeom::parser::parse_expr;
    use crate::exprgeom::spacetime::CoordBox;

    fn de_sitter() -> Spacetime {
        let dom = CoordBox::new([0.5, -1.0, -1.0, -1.0], [2.0, 1.0, 1.0, 1.0]).unwrap();
        Spacetime::conformally_flat("ds", dom, parse_expr("1/x0").unwrap(), 0.5).unwrap()
    }

    #[test]
    fn flat_space_is_flat() {
        let st = Spacetime::minkowski(CoordBox::new([-1.0; 4], [1.0; 4]).unwrap());
        let c = curvature(&st, &[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(c.r, 0.0);
        assert_eq!(c.w2, 0.0);
    }

    #[test]
    fn de_sitter_scalar_curvature() {
        let c = curvature(&de_sitter(), &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((c.r - 12.0).abs() < 1e-12, "{}", c.r);
        assert!(c.w2.abs() < 1e-10);
        // maximally symmetric: R_ab = 3 g_ab
        for a in 0..4 {
            for b in 0..4 {
                assert!((c.ricci[a][b] - 3.0 * c.g[a][b]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn riemann_symmetries() {
        let dom = CoordBox::new([-1.0; 4], [1.0; 4]).unwrap();
        let comps = [
            "-(1 + 0.1*x1*x1)", "0.05*x2", "0", "0.02*x0", "1 + 0.1*x0*x0", "0", "0.03*x3", "1 + 0.05*sin(x1)", "0", "1",
        ]
        .map(|s| parse_expr(s).unwrap());
        let st = Spacetime::new("lumpy", dom, comps, None, 0.3).unwrap();
        let c = curvature(&st, &[0.2, 0.1, -0.3, 0.4]).unwrap();
        // R_abcd = -R_bacd
        let mut low = [[[[0.0; 4]; 4]; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                for cc in 0..4 {
                    for d in 0..4 {
                        low[a][b][cc][d] = (0..4).map(|e| c.g[a][e] * c.riemann[e][b][cc][d]).sum::<f64>();
                    }
                }
            }
        }
        for a in 0..4 {
            for b in 0..4 {
                assert!((c.ricci[a][b] - c.ricci[b][a]).abs() < 1e-12);
                for cc in 0..4 {
                    for d in 0..4 {
                        assert!((low[a][b][cc][d] + low[b][a][cc][d]).abs() < 1e-12);
                        assert!((low[a][b][cc][d] - low[cc][d][a][b]).abs() < 1e-12);
                    }
                }
            }
        }
    }
}
