use super::*;
use crate::exprgeom::{parse_expr, CoordBox, Expr};

fn dom() -> CoordBox {
    CoordBox::new([0.5, -1.0, -1.0, -1.0], [2.0, 1.0, 1.0, 1.0]).unwrap()
}

fn de_sitter() -> Spacetime {
    Spacetime::conformally_flat("ds", dom(), parse_expr("1/x0").unwrap(), 0.5).unwrap()
}

fn minkowski_to_de_sitter() -> ConformalEmbedding {
    let mink = Spacetime::minkowski(dom());
    ConformalEmbedding::conformal_transformation("m2ds", mink, de_sitter(), parse_expr("1/x0").unwrap()).unwrap()
}

const X: [f64; 4] = [1.1, 0.1, 0.0, 0.05];
const W: [f64; 4] = [0.2, 1.0, 0.3, 0.0];

#[test]
fn alpha_and_b_are_linked() {
    for kappa in [0.5, 1.0] {
        for r in [0.0, 12.0, -3.5] {
            assert_eq!(b_kernel(kappa, r, r), -alpha(kappa) * r);
        }
    }
}

#[test]
fn isometry_gives_exact_zero() {
    let ds = de_sitter();
    let e = ConformalEmbedding::identity(&ds);
    let ch = Checker::new(HadamardConfig::default());
    let probe = LimitProbe::new(&ds, X, W).unwrap();
    let [a, _] = ch.hadamard_difference_limit(&e, &probe).unwrap();
    assert_eq!(a.measured, 0.0);
    assert!(a.pass);
    let w = ch.wick_kernel_covariance(&e, &probe).unwrap();
    assert_eq!(w.measured, 0.0);
}

#[test]
fn flat_to_de_sitter_identities() {
    let e = minkowski_to_de_sitter();
    let ch = Checker::new(HadamardConfig::default());
    let probe = LimitProbe::new(e.target(), X, W).unwrap();
    let [a2, a] = ch.hadamard_difference_limit(&e, &probe).unwrap();
    // R = 12 on the unit de Sitter patch
    assert!((a2.predicted + 12.0 / 18.0).abs() < 1e-12);
    assert!(a2.pass && a.pass, "{a2:?}\n{a:?}");
    assert!(a2.rel_error < 1e-6);
    let cov = ch.phi2_covariance(&e, alpha(0.5), &probe).unwrap();
    assert!(cov.pass && cov.measured.abs() < 1e-8, "{cov:?}");
    let bare = ch.phi2_covariance(&e, 0.0, &probe).unwrap();
    assert!(bare.pass && bare.rel_error < 1e-4, "{bare:?}");
    // the conformal vacuum of de Sitter has ⟨:φ²:_H⟩ = −R/(288π²)
    let c_target = bare.details.iter().find(|(n, _)| n == "c_target").unwrap().1;
    assert!((c_target + 12.0 / (288.0 * PI * PI)).abs() < 1e-7, "{c_target}");
    let wick = ch.wick_kernel_covariance(&e, &probe).unwrap();
    assert!(wick.pass && wick.measured.abs() < 1e-8, "{wick:?}");
}

#[test]
fn defects_scale_with_kappa() {
    let e = minkowski_to_de_sitter();
    let probe = LimitProbe::new(e.target(), X, W).unwrap();
    let half = Checker::new(HadamardConfig::default());
    let one = Checker::new(HadamardConfig { kappa: 1.0, ..HadamardConfig::default() });
    let (a, b) = (half.phi2_covariance(&e, 0.0, &probe).unwrap(), one.phi2_covariance(&e, 0.0, &probe).unwrap());
    assert!((b.measured / a.measured - 2.0).abs() < 1e-10);
    assert_eq!(a.pass, b.pass);
    let (a, b) = (half.wick_kernel_covariance(&e, &probe).unwrap(), one.wick_kernel_covariance(&e, &probe).unwrap());
    assert!((b.measured / a.measured - 2.0).abs() < 1e-10);
}

#[test]
fn limits_do_not_depend_on_direction() {
    let e = minkowski_to_de_sitter();
    let ch = Checker::new(HadamardConfig::default());
    let values: Vec<f64> = [[0.2, 1.0, 0.3, 0.0], [0.0, 0.1, -1.0, 0.4], [-0.3, 0.5, 0.5, 0.7]]
        .iter()
        .map(|w| ch.hadamard_difference_limit(&e, &LimitProbe::new(e.target(), X, *w).unwrap()).unwrap()[0].measured)
        .collect();
    for v in &values {
        assert!((v - values[0]).abs() < 2.0 * 0.01 * values[0].abs(), "{values:?}");
    }
}

#[test]
fn mu_and_rigid_dilation_on_de_sitter() {
    let ds = de_sitter();
    let ch = Checker::new(HadamardConfig::default());
    let probe = LimitProbe::new(&ds, X, W).unwrap();
    let mu = ch.mu_independence(&ds, 1.0, 10.0, &probe).unwrap();
    assert!(mu.pass, "{mu:?}");
    for lambda in [0.5, 2.0, 10.0] {
        let r = ch.rigid_dilation_suite(&ds, lambda, &[(X, [1.15, 0.2, 0.0, 0.0]), (X, [1.0, 0.0, 0.2, 0.1])], &probe).unwrap();
        assert!(r.pass, "{r:?}");
    }
}

#[test]
fn weyl_square_has_weight_four() {
    let e = |s: &str| parse_expr(s).unwrap();
    let z = Expr::num(0.0);
    let g = [
        [e("-(1 + 0.2*x1^2)"), z.clone(), z.clone(), z.clone()],
        [z.clone(), e("1 + 0.1*x0^2"), e("0.05*x2"), z.clone()],
        [z.clone(), e("0.05*x2"), e("1"), z.clone()],
        [z.clone(), z.clone(), z.clone(), e("1 + 0.1*x3*x1")],
    ];
    let st = Spacetime::from_matrix("lumpy", dom(), g, None, 0.5).unwrap();
    let omega = e("1 + 0.2*x0^2 + 0.1*x1");
    let target = st.conformally_rescaled("lumpy_rescaled", &omega).unwrap();
    let emb = ConformalEmbedding::conformal_transformation("lumpy_conf", st, target, omega).unwrap();
    let ch = Checker::new(HadamardConfig::default());
    let probe = LimitProbe::new(emb.target(), X, W).unwrap();
    let r = ch.composite_weight4_check(&emb, [1.0, 1.0, 1.0], &probe).unwrap();
    let w2 = r.details.iter().find(|(n, _)| n == "w2_source").unwrap().1;
    assert!(w2.abs() > 1e-4, "{r:?}");
    assert!(r.pass, "{r:?}");
}

#[test]
fn composite_operator_on_conformally_flat_map() {
    let e = minkowski_to_de_sitter();
    let ch = Checker::new(HadamardConfig::default());
    let probe = LimitProbe::new(e.target(), X, W).unwrap();
    let r = ch.composite_weight4_check(&e, [1.0, 0.5, 2.0], &probe).unwrap();
    assert!(r.pass, "{r:?}");
}
