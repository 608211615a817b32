use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::confmap::{ConformalEmbedding, TestFunction};
use crate::error::Error;
use crate::exprgeom::{parse_expr, CoordBox, Expr, Spacetime};
use crate::propagator::PropagatorConfig;

fn gens(st: &str, n: u32) -> Vec<Generator> {
    (0..n).map(|i| Generator::new(st, i)).collect()
}

fn random_word(rng: &mut ChaCha8Rng, alphabet: &[Generator], len: usize) -> Vec<Generator> {
    (0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len())].clone()).collect()
}

fn random_rational(rng: &mut ChaCha8Rng) -> BigRational {
    rational(rng.gen_range(-9..=9), rng.gen_range(1..=7))
}

#[test]
fn one_swap_produces_the_commutator() {
    let g = gens("m", 2);
    let (f, h) = (&g[0], &g[1]);
    let nf = normal_form(&[h.clone(), f.clone()], &PairingTable::symbolic());
    assert_eq!(nf.len(), 2);
    assert_eq!(nf.coefficient(&[f.clone(), h.clone()]), Coeff::one());
    let contracted = Monomial { word: vec![], pairings: vec![(f.clone(), h.clone())] };
    let c = nf.terms().find(|(m, _)| **m == contracted).map(|(_, c)| c.clone()).unwrap();
    assert_eq!(c, -imag_unit());

    let mut table = PairingTable::symbolic();
    table.insert(h, f, rational(3, 2));
    let nf = normal_form(&[h.clone(), f.clone()], &table);
    // E(f, h) = −3/2, so −iE(f, h) = 3i/2
    assert_eq!(nf.coefficient(&[]), imag_unit() * real(rational(3, 2)));
}

#[test]
fn repeated_generator_is_already_normal() {
    let f = Generator::new("m", 0);
    let w = AlgebraElement::word(&[f.clone(), f.clone()]);
    assert_eq!(w.normalize(&PairingTable::symbolic()), w);
}

#[test]
fn normal_form_matches_oscillator_representation() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let g = gens("m", 4);
    let osc = OscillatorRepresentation::random(&mut rng, g.len());
    let table = osc.table(&g);
    for n in 0..100 {
        let len = if n < 20 { 5 } else { rng.gen_range(1..=6) };
        let w = random_word(&mut rng, &g, len);
        let word = AlgebraElement::word(&w);
        let nf = word.normalize(&table);
        assert!(nf.is_normal());
        assert!(osc.agree(&word, &nf).unwrap(), "word {w:?}");
    }
    // a wrong sign in the swap rule is detected
    let mut flipped = PairingTable::symbolic();
    for i in 0..4 {
        for j in i + 1..4 {
            flipped.insert(&g[j], &g[i], rational(osc.pairing(i, j) as i64, 1));
        }
    }
    let w = [g[1].clone(), g[0].clone()];
    if osc.pairing(0, 1) != 0 {
        assert!(!osc.agree(&AlgebraElement::word(&w), &normal_form(&w, &flipped)).unwrap());
    }
}

#[test]
fn normalization_is_idempotent_and_respects_star() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let g = gens("m", 4);
    let sym = PairingTable::symbolic();
    for _ in 0..50 {
        let a = AlgebraElement::word(&random_word(&mut rng, &g, 3)).scale(&Coeff::new(random_rational(&mut rng), random_rational(&mut rng)));
        let b = AlgebraElement::word(&random_word(&mut rng, &g, 2)).scale(&imag_unit());
        let x = a.add(&b);
        let nf = x.normalize(&sym);
        assert_eq!(nf.normalize(&sym), nf);
        assert_eq!(x.star().star(), x);
        assert_eq!(a.mul(&b).star(), b.star().mul(&a.star()));
        // * respects the relations: N(x*) = N(N(x)*)
        assert_eq!(x.star().normalize(&sym), nf.star().normalize(&sym));
    }
}

#[test]
fn linearity_and_wave_exact_relations() {
    let g = gens("m", 4);
    let mut t = PairingTable::symbolic();
    let two = real(rational(2, 1));
    t.define_combination(&g[3], vec![(two.clone(), g[0].clone()), (Coeff::one(), g[1].clone())]);
    t.mark_wave_exact(&g[2]);
    let w = normal_form(&[g[3].clone(), g[1].clone()], &t);
    let expected = AlgebraElement::word(&[g[0].clone(), g[1].clone()])
        .scale(&two)
        .add(&AlgebraElement::word(&[g[1].clone(), g[1].clone()]));
    assert_eq!(w, expected);
    assert!(normal_form(&[g[0].clone(), g[2].clone(), g[1].clone()], &t).is_zero());
}

fn flat(name: &str, omega: &str) -> Spacetime {
    let dom = CoordBox::new([-1.0; 4], [1.0; 4]).unwrap();
    Spacetime::conformally_flat(name, dom, parse_expr(omega).unwrap(), 0.5).unwrap()
}

fn chain() -> (ConformalEmbedding, ConformalEmbedding) {
    let a = flat("a", "1");
    let b = flat("b", "1/(x0+3)");
    let c = flat("c", "exp(0.1*x1)/(x0+3)");
    let e1 = ConformalEmbedding::conformal_transformation("p", a, b.clone(), parse_expr("1/(x0+3)").unwrap()).unwrap();
    let e2 = ConformalEmbedding::conformal_transformation("q", b, c, parse_expr("exp(0.1*x1)").unwrap()).unwrap();
    (e1, e2)
}

#[test]
fn identity_morphism_changes_nothing() {
    let st = flat("a", "1");
    let g = gens("a", 3);
    let x = normal_form(&[g[2].clone(), g[0].clone(), g[1].clone()], &PairingTable::symbolic());
    assert_eq!(apply_morphism(&ConformalEmbedding::identity(&st), &x).unwrap(), x);
}

#[test]
fn morphisms_compose_and_are_injective() {
    let (e1, e2) = chain();
    let composite = ConformalEmbedding::compose(&e2, &e1).unwrap();
    let sym = PairingTable::symbolic();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = gens("a", 4);
    let mut images = BTreeMap::new();
    for _ in 0..100 {
        let len = rng.gen_range(1..=5);
        let w = random_word(&mut rng, &g, len);
        let nf = normal_form(&w, &sym);
        let stepwise = apply_morphism(&e2, &apply_morphism(&e1, &nf).unwrap()).unwrap();
        let direct = apply_morphism(&composite, &nf).unwrap();
        assert_eq!(stepwise, direct);
        // the image of a normal form is normal, and α commutes with normalization
        assert!(direct.is_normal());
        assert_eq!(normal_form(&w, &sym), nf);
        assert_eq!(apply_morphism(&composite, &AlgebraElement::word(&w)).unwrap().normalize(&sym), direct);
        let key = format!("{direct}");
        if let Some(prev) = images.insert(key, format!("{nf}")) {
            assert_eq!(prev, format!("{nf}"), "two normal forms share an image");
        }
    }
    assert!(matches!(apply_morphism(&e2, &normal_form(&g, &sym)), Err(Error::SpacetimeMismatch { .. })));
}

#[test]
fn registry_resolves_composite_pushforwards() {
    let (e1, e2) = chain();
    let composite = ConformalEmbedding::compose(&e2, &e1).unwrap();
    let mut reg = FieldRegistry::new();
    reg.register_embedding(&e1).unwrap();
    reg.register_embedding(&e2).unwrap();
    reg.register_embedding(&composite).unwrap();
    let f = TestFunction::modulated_bump([0.1, 0.0, 0.2, 0.0], [0.4; 4], 1.0, [0.3, -0.2, 0.0, 0.1]);
    let gen = reg.register_function(e1.source(), f.clone()).unwrap();
    let pushed = gen.pushed(&composite).unwrap();
    let via_path = reg.resolve(&pushed).unwrap();
    let direct = composite.weighted_pushforward(3.0, &f).unwrap();
    for p in direct.support().interior_grid(3) {
        let (a, b) = (via_path.eval(&p).unwrap(), direct.eval(&p).unwrap());
        assert!((a - b).abs() <= 1e-13 * (1.0 + b.abs()), "{a} vs {b} at {p:?}");
    }
}

#[test]
fn commutators_are_preserved_with_propagator_pairings() {
    let dom = CoordBox::new([0.5, -2.0, -2.0, -2.0], [3.0, 2.0, 2.0, 2.0]).unwrap();
    let mink = Spacetime::minkowski(dom);
    let ds = Spacetime::conformally_flat("ds", dom, parse_expr("1/x0").unwrap(), 0.5).unwrap();
    let e = ConformalEmbedding::conformal_transformation("to_ds", mink.clone(), ds, parse_expr("1/x0").unwrap()).unwrap();
    let mut reg = FieldRegistry::new();
    reg.register_embedding(&e).unwrap();
    let f = reg.register_function(&mink, TestFunction::bump([2.0, 0.5, 0.0, 0.0], [0.3; 4], 1.0)).unwrap();
    let g = reg.register_function(&mink, TestFunction::bump([1.5, 0.0, 0.0, 0.0], [0.3; 4], 1.0)).unwrap();
    let cfg = PropagatorConfig::default();
    let w = [g.clone(), f.clone()];
    let source_table = reg.numeric_pairings(&w, &cfg).unwrap();
    let lhs = apply_morphism(&e, &normal_form(&w, &source_table)).unwrap();
    let pushed = [g.pushed(&e).unwrap(), f.pushed(&e).unwrap()];
    let target_table = reg.numeric_pairings(&pushed, &cfg).unwrap();
    let rhs = normal_form(&pushed, &target_table);
    let (c_src, c_tgt) = (coeff_to_f64(&lhs.coefficient(&[])), coeff_to_f64(&rhs.coefficient(&[])));
    assert!(c_src.1.abs() > 1e-10, "{lhs}");
    assert!((c_src.1 - c_tgt.1).abs() < 1e-3 * c_src.1.abs(), "{lhs} vs {rhs}");
    let difference = lhs.sub(&rhs);
    assert!(difference.terms().all(|(m, _)| m.word.is_empty()), "{difference}");
}

#[test]
fn pairing_counts() {
    let e2 = wick_expand(2).unwrap();
    assert_eq!(e2.coefficient(2), BigInt::one());
    assert_eq!(e2.coefficient(0), BigInt::one());
    let e4 = wick_expand(4).unwrap();
    assert_eq!((e4.coefficient(4), e4.coefficient(2), e4.coefficient(0)), (1.into(), 6.into(), 3.into()));
    assert_eq!(e4.to_string(), "φ^4 = :φ^4: + 6 H :φ^2: + 3 H^2");
    assert_eq!(wick_expand(6).unwrap().coefficient(0), BigInt::from(15));
    // n!/(m!(n−2m)!2^m)
    let fact = |k: u64| (1..=k).product::<u64>().max(1);
    for n in 0..=MAX_POWER as u64 {
        let e = wick_expand(n as usize).unwrap();
        for m in 0..=n / 2 {
            let closed = fact(n) / (fact(m) * fact(n - 2 * m) * (1 << m));
            assert_eq!(e.coefficient((n - 2 * m) as usize), BigInt::from(closed), "n = {n}, m = {m}");
        }
    }
    assert!(wick_expand(MAX_POWER + 1).is_err());
}

#[test]
fn inverse_is_the_hermite_connection() {
    for n in 0..=8usize {
        let inv = wick_inverse(n).unwrap();
        let fwd = wick_expand(n).unwrap();
        for (&k, c) in &inv.coeffs {
            let m = (n - k) / 2;
            let sign = if m % 2 == 0 { 1 } else { -1 };
            assert_eq!(*c, fwd.coefficient(k) * sign);
        }
        // Σ_k inv[n][k] fwd[k][j] = δ_nj
        let mut composed: BTreeMap<usize, BigInt> = BTreeMap::new();
        for (&k, c) in &inv.coeffs {
            for (&j, d) in &wick_expand(k).unwrap().coeffs {
                *composed.entry(j).or_insert_with(BigInt::zero) += c * d;
            }
        }
        composed.retain(|_, v| !v.is_zero());
        assert_eq!(composed, BTreeMap::from([(n, BigInt::one())]), "n = {n}");
    }
}

#[test]
fn reordering_matches_double_expansion() {
    for n in 0..=8usize {
        let r = reorder_prescription(n, "B").unwrap();
        let d = reorder_by_double_expansion(n).unwrap();
        let expected: BTreeMap<usize, HbPolynomial> =
            r.coeffs.iter().map(|(&k, c)| (k, HbPolynomial::from([((0, (n - k) / 2), c.clone())]))).collect();
        assert_eq!(d, expected, "n = {n}");
    }
    assert_eq!(reorder_prescription(2, "B").unwrap().to_string(), ":φ^2:_H - :φ^2:_{H+B} = B");
    assert_eq!(
        reorder_prescription(4, "B").unwrap().to_string(),
        ":φ^4:_H - :φ^4:_{H+B} = 6 B :φ^2:_{H+B} + 3 B^2"
    );
    assert_eq!(reorder_prescription(3, "B").unwrap().to_string(), ":φ^3:_H - :φ^3:_{H+B} = 3 B :φ:_{H+B}");
}

#[test]
fn renormalization_shifts() {
    let id = renorm_apply(&RenormShift::new(4), 4).unwrap();
    assert_eq!(id.terms, BTreeMap::from([(4, Expr::num(1.0))]));
    let alpha = crate::covcheck::alpha(0.5);
    let r = Expr::param("R", 12.0);
    let shift = RenormShift::new(2).with(0, Expr::mul(Expr::num(alpha), r)).unwrap();
    let p = renorm_apply(&shift, 2).unwrap();
    let phi2 = -3.0e-3;
    assert_eq!(p.eval(&[1.0, 0.0, 0.0, 0.0], &[1.0, 0.0, phi2]).unwrap(), phi2 + alpha * 12.0);
    assert!(p.to_string().starts_with("φ^2 + ("));
    assert!(matches!(RenormShift::new(3).with(2, Expr::num(1.0)), Err(Error::RenormIndex { index: 2, k: 3 })));
    assert!(matches!(renorm_apply(&shift, 3), Err(Error::RenormIndex { .. })));

    let s1 = RenormShift::new(4).with(2, Expr::param("a", 1.5)).unwrap();
    let s2 = RenormShift::new(4).with(2, Expr::param("b", -0.25)).unwrap().with(0, Expr::num(2.0)).unwrap();
    let both = renorm_apply(&s1.then(&s2).unwrap(), 4).unwrap();
    let powers = [1.0, 0.0, 0.7, 0.0, 0.3];
    let x = [0.0; 4];
    let sum = renorm_apply(&s1, 4).unwrap().eval(&x, &powers).unwrap() + renorm_apply(&s2, 4).unwrap().eval(&x, &powers).unwrap()
        - powers[4];
    assert!((both.eval(&x, &powers).unwrap() - sum).abs() < 1e-15);
}
