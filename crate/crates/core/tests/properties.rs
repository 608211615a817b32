use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use chlab::confmap::{check_wave_conformal_law, ConformalEmbedding, TestFunction};
use chlab::covcheck::{default_schedule, LimitProbe};
use chlab::exprgeom::{parse_expr, scalar_curvature, CoordBox, Expr, Spacetime};
use chlab::worldfn::{geodesic_bvp, GeodesicConfig};
use chlab::wickalg::{
    count_pairings, normal_form, wick_expand, wick_inverse, AlgebraElement, Generator, OscillatorRepresentation, PairingTable,
};
use chlab::{Catalog, HadamardConfig, HadamardKernel};

fn de_sitter() -> Spacetime {
    Catalog::builtin().unwrap().spacetime("de_sitter").unwrap().clone()
}

fn point() -> impl Strategy<Value = [f64; 4]> {
    (1.2..2.2f64, -0.5..0.5f64, -0.5..0.5f64, -0.5..0.5f64).prop_map(|(a, b, c, d)| [a, b, c, d])
}

fn spatial_offset() -> impl Strategy<Value = [f64; 4]> {
    (-0.03..0.03f64, 0.05..0.25f64, -0.1..0.1f64, -0.1..0.1f64).prop_map(|(a, b, c, d)| [a, b, c, d])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parsed_expressions_round_trip(a in -3.0..3.0f64, b in 0.5..2.0f64, x in point()) {
        let src = format!("{a}*x0^2 + sin(x1)/({b} + x2*x2) - exp({a}*x3)");
        let e = parse_expr(&src).unwrap();
        let again = parse_expr(&e.to_string()).unwrap();
        let (u, v) = (e.eval_f64(&x).unwrap(), again.eval_f64(&x).unwrap());
        prop_assert!((u - v).abs() <= 1e-12 * (1.0 + u.abs()));
    }

    #[test]
    fn symbolic_derivatives_match_differences(a in -2.0..2.0f64, x in point(), i in 0usize..4) {
        let e = parse_expr(&format!("exp({a}*x0*x1) + x2^3*cos(x3) + log(x0)")).unwrap();
        let d = e.diff(i).eval_f64(&x).unwrap();
        let h = 1e-5;
        let (mut xp, mut xm) = (x, x);
        xp[i] += h;
        xm[i] -= h;
        let fd = (e.eval_f64(&xp).unwrap() - e.eval_f64(&xm).unwrap()) / (2.0 * h);
        prop_assert!((d - fd).abs() <= 1e-6 * (1.0 + d.abs()));
    }

    #[test]
    fn constant_rescaling_scales_curvature(c in 0.3..3.0f64, x in point()) {
        let st = de_sitter();
        let scaled = st.scaled("scaled", c).unwrap();
        let (r, rs) = (scalar_curvature(&st, &x).unwrap(), scalar_curvature(&scaled, &x).unwrap());
        prop_assert!((rs * c - r).abs() <= 1e-10 * r.abs());
    }

    #[test]
    fn conformally_flat_curvature_formula(eps in -0.4..0.4f64, x in point()) {
        let omega = parse_expr(&format!("1 + {eps}*exp(-(x1^2 + x2^2))/x0")).unwrap();
        let dom = CoordBox::new([1.0, -1.0, -1.0, -1.0], [2.5, 1.0, 1.0, 1.0]).unwrap();
        let st = Spacetime::conformally_flat("w", dom, omega.clone(), 0.5).unwrap();
        // R = −6 ω⁻³ □_η ω
        let lap = omega.diff_multi(&[1, 1]).eval_f64(&x).unwrap() + omega.diff_multi(&[2, 2]).eval_f64(&x).unwrap()
            + omega.diff_multi(&[3, 3]).eval_f64(&x).unwrap() - omega.diff_multi(&[0, 0]).eval_f64(&x).unwrap();
        let predicted = -6.0 * lap / omega.eval_f64(&x).unwrap().powi(3);
        let r = scalar_curvature(&st, &x).unwrap();
        prop_assert!((r - predicted).abs() <= 1e-9 * predicted.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn world_function_is_symmetric(x in point(), d in spatial_offset()) {
        let st = de_sitter();
        let y = std::array::from_fn(|i| x[i] + d[i]);
        let cfg = GeodesicConfig::default();
        let (a, b) = (geodesic_bvp(&st, &x, &y, &cfg).unwrap(), geodesic_bvp(&st, &y, &x, &cfg).unwrap());
        prop_assert!((a.sigma - b.sigma).abs() <= 1e-10 * a.sigma.abs());
        prop_assert!((a.vanvleck - b.vanvleck).abs() <= 1e-8);
        // σ = ½ g(x)(∇σ, ∇σ) at either end
        let g = st.metric(&x).unwrap();
        let ginv = chlab::linalg::inverse(&g).unwrap();
        let norm = chlab::linalg::quad_form(&ginv, &a.grad_x, &a.grad_x);
        prop_assert!((0.5 * norm - a.sigma).abs() <= 1e-9 * a.sigma.abs());
    }

    #[test]
    fn flat_world_function_is_the_interval(x in point(), d in spatial_offset()) {
        let st = Spacetime::minkowski(CoordBox::new([-3.0; 4], [3.0; 4]).unwrap());
        let y = std::array::from_fn(|i| x[i] + d[i]);
        let w = geodesic_bvp(&st, &x, &y, &GeodesicConfig::default()).unwrap();
        let interval = 0.5 * (-d[0] * d[0] + d[1] * d[1] + d[2] * d[2] + d[3] * d[3]);
        prop_assert!((w.sigma - interval).abs() <= 1e-13);
        prop_assert!((w.vanvleck - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn rigid_dilation_shifts_the_parametrix(lambda in 0.4..4.0f64, x in point(), d in spatial_offset()) {
        // λ⁻² H_{λ⁻² g} = H_g − v log λ²
        let st = de_sitter();
        let cfg = HadamardConfig::default();
        let k = HadamardKernel::new(st.clone(), cfg).unwrap();
        let ks = HadamardKernel::new(st.scaled("small", lambda.powi(-2)).unwrap(), cfg).unwrap();
        let y = std::array::from_fn(|i| x[i] + d[i]);
        let t = k.terms(&x, &y).unwrap();
        let lhs = ks.parametrix(&x, &y).unwrap() / (lambda * lambda);
        let rhs = k.evaluate(&t) - cfg.kappa * chlab::hadamard::prefactor() * t.v() * (lambda * lambda).ln();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1.0));
    }

    #[test]
    fn wave_operator_law_for_random_test_functions(tilt in proptest::array::uniform4(-0.3..0.3f64), seed in 0u64..1000) {
        let cat = Catalog::builtin().unwrap();
        let e: &ConformalEmbedding = cat.embedding("ds_to_bump").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xc = chlab::harness::suites::random_point(&mut rng, e.image(), 0.3);
        let f = TestFunction::modulated_bump(e.apply_inverse(&xc).unwrap(), [0.2; 4], 1.0, tilt);
        let pts: Vec<[f64; 4]> = (0..3).map(|_| chlab::harness::suites::random_point(&mut rng, &CoordBox::around(xc, [0.1; 4]), 1.0)).collect();
        let r = check_wave_conformal_law(e, &f, &pts).unwrap();
        prop_assert!(r.max_residual <= 1e-6 * r.max_rhs.max(1e-300), "{} vs {}", r.max_residual, r.max_rhs);
    }

    #[test]
    fn conformal_embeddings_compose(x in point()) {
        let cat = Catalog::builtin().unwrap();
        let (e1, e2) = (cat.embedding("flat_to_ds").unwrap(), cat.embedding("ds_to_bump").unwrap());
        let c = ConformalEmbedding::compose(e2, e1).unwrap();
        let z = e2.apply(&x).unwrap();
        let direct = c.omega_at(&z).unwrap();
        let stepwise = e2.omega_at(&z).unwrap() * e1.omega_at(&e2.apply_inverse(&z).unwrap()).unwrap();
        prop_assert!((direct - stepwise).abs() <= 1e-12 * direct.abs());
        let back = c.apply(&c.apply_inverse(&z).unwrap()).unwrap();
        prop_assert!((0..4).all(|i| (back[i] - z[i]).abs() <= 1e-12));
        prop_assert_eq!(c.factors(), &["flat_to_ds".to_string(), "ds_to_bump".to_string()][..]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn extrapolation_recovers_the_constant(a in -1.0..1.0f64, b in -5.0..5.0f64, c in -5.0..5.0f64, d in -20.0..20.0f64) {
        let st = Spacetime::minkowski(CoordBox::new([-1.0; 4], [1.0; 4]).unwrap());
        let probe = LimitProbe::new(&st, [0.0; 4], [0.0, 1.0, 0.0, 0.0]).unwrap();
        let values = default_schedule().iter().map(|&s| a + b * s * s + c * s * s * s.ln() + d * s.powi(4)).collect();
        let fit = probe.extrapolate(values, 1e-13).unwrap();
        prop_assert!((fit.extrapolated_value - a).abs() <= 1e-9);
    }

    #[test]
    fn normal_form_agrees_with_oscillators(seed in 0u64..10_000, word in proptest::collection::vec(0u32..4, 1..6)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gens: Vec<Generator> = (0..4).map(|i| Generator::new("m", i)).collect();
        let osc = OscillatorRepresentation::random(&mut rng, 4);
        let table = osc.table(&gens);
        let w: Vec<Generator> = word.iter().map(|&i| gens[i as usize].clone()).collect();
        let nf = normal_form(&w, &table);
        prop_assert!(nf.is_normal());
        prop_assert_eq!(nf.normalize(&table), nf.clone());
        prop_assert!(osc.agree(&AlgebraElement::word(&w), &nf).unwrap());
    }

    #[test]
    fn star_reverses_products(u in proptest::collection::vec(0u32..3, 1..4), v in proptest::collection::vec(0u32..3, 1..4)) {
        let gens: Vec<Generator> = (0..3).map(|i| Generator::new("m", i)).collect();
        let word = |w: &[u32]| AlgebraElement::word(&w.iter().map(|&i| gens[i as usize].clone()).collect::<Vec<_>>());
        let (a, b) = (word(&u), word(&v));
        prop_assert_eq!(a.mul(&b).star(), b.star().mul(&a.star()));
        let sym = PairingTable::symbolic();
        prop_assert_eq!(a.mul(&b).star().normalize(&sym), a.mul(&b).normalize(&sym).star().normalize(&sym));
    }
}

#[test]
fn pairing_totals_are_telephone_numbers() {
    // involutions of n points: a(n) = a(n−1) + (n−1) a(n−2)
    let mut t = vec![1u64, 1];
    for n in 2..=12 {
        t.push(t[n - 1] + (n as u64 - 1) * t[n - 2]);
    }
    for n in 0..=12 {
        assert_eq!(count_pairings(n).iter().sum::<u64>(), t[n], "n = {n}");
    }
}

#[test]
fn wick_expansions_alternate_under_inversion() {
    for n in 0..=10 {
        let (e, i) = (wick_expand(n).unwrap(), wick_inverse(n).unwrap());
        for k in (n % 2..=n).step_by(2) {
            let m = (n - k) / 2;
            let sign: num_bigint::BigInt = if m % 2 == 0 { 1.into() } else { (-1).into() };
            assert_eq!(i.coefficient(k), sign * e.coefficient(k), "n = {n}, k = {k}");
        }
    }
}

#[test]
fn expression_display_is_stable() {
    let e = Expr::add(Expr::var(0), Expr::num(2.0));
    assert_eq!(parse_expr(&e.to_string()).unwrap(), parse_expr("x0 + 2").unwrap());
}
