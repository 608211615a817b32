//! Wick powers: expansion of `φⁿ` in normal-ordered powers, its inverse,
//! the change of normal ordering `H → H + B`, and the renormalization
//! freedom `φ̃ᵏ = φᵏ + Σ Cᵢ φⁱ`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exprgeom::Expr;

pub const MAX_POWER: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpansionKind {
    /// `φⁿ = Σ c_k K^{(n−k)/2} :φᵏ:`.
    Power,
    /// `:φⁿ: = Σ c_k K^{(n−k)/2} φᵏ`.
    Inverse,
    /// `:φⁿ:_H − :φⁿ:_{H+K} = Σ c_k K^{(n−k)/2} :φᵏ:_{H+K}`, `k < n`.
    Reorder,
}

/// Coefficients of `K^{(n−k)/2}` times a power of the field, keyed by the
/// surviving field count `k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PairingExpansion {
    pub n: usize,
    pub kind: ExpansionKind,
    /// Symbol of the contracted kernel, `H` or `B`.
    pub kernel: String,
    #[serde(serialize_with = "serialize_coeffs")]
    pub coeffs: BTreeMap<usize, BigInt>,
}

fn serialize_coeffs<S: serde::Serializer>(c: &BTreeMap<usize, BigInt>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_map(c.iter().map(|(k, v)| (k.to_string(), v.to_string())))
}

impl PairingExpansion {
    pub fn coefficient(&self, k: usize) -> BigInt {
        self.coeffs.get(&k).cloned().unwrap_or_else(BigInt::zero)
    }
}

fn check_power(n: usize) -> Result<()> {
    if n > MAX_POWER {
        return Err(Error::Domain(format!("power {n} exceeds the supported maximum {MAX_POWER}")));
    }
    Ok(())
}

/// Counts sets of disjoint pairs in `{0, …, n−1}` by size, by enumerating
/// them: the first free element is either left unpaired or paired with a
/// later free element.
pub fn count_pairings(n: usize) -> Vec<u64> {
    fn walk(free: &mut Vec<usize>, pairs: usize, counts: &mut [u64]) {
        let Some(first) = free.pop() else {
            counts[pairs] += 1;
            return;
        };
        walk(free, pairs, counts);
        for j in 0..free.len() {
            let partner = free.remove(j);
            walk(free, pairs + 1, counts);
            free.insert(j, partner);
        }
        free.push(first);
    }
    let mut counts = vec![0; n / 2 + 1];
    let mut free: Vec<usize> = (0..n).rev().collect();
    walk(&mut free, 0, &mut counts);
    counts
}

/// `φⁿ = Σ_m (number of ways to pick m disjoint pairs) H^m :φ^{n−2m}:`.
pub fn wick_expand(n: usize) -> Result<PairingExpansion> {
    check_power(n)?;
    let coeffs = count_pairings(n).into_iter().enumerate().map(|(m, c)| (n - 2 * m, BigInt::from(c))).collect();
    Ok(PairingExpansion { n, kind: ExpansionKind::Power, kernel: "H".into(), coeffs })
}

/// `:φⁿ:` in ordinary powers, by inverting the triangular system of
/// [`wick_expand`] order by order.
pub fn wick_inverse(n: usize) -> Result<PairingExpansion> {
    check_power(n)?;
    // :φⁿ: = φⁿ − Σ_{m≥1} c_m H^m :φ^{n−2m}:
    let mut inverses: Vec<BTreeMap<usize, BigInt>> = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let expansion = wick_expand(j)?;
        let mut row = BTreeMap::from([(j, BigInt::one())]);
        for (&k, c) in expansion.coeffs.iter().filter(|(&k, _)| k < j) {
            for (&l, d) in &inverses[k] {
                *row.entry(l).or_insert_with(BigInt::zero) -= c * d;
            }
        }
        row.retain(|_, v| !v.is_zero());
        inverses.push(row);
    }
    let coeffs = inverses.pop().expect("at least one row");
    Ok(PairingExpansion { n, kind: ExpansionKind::Inverse, kernel: "H".into(), coeffs })
}

/// `:φⁿ:_H − :φⁿ:_{H+B}` in Wick powers ordered with `H + B`. Contracting
/// with `B` instead of `H` gives the same pairing counts.
pub fn reorder_prescription(n: usize, delta: &str) -> Result<PairingExpansion> {
    let mut e = wick_expand(n)?;
    e.coeffs.remove(&n);
    e.kind = ExpansionKind::Reorder;
    e.kernel = delta.to_string();
    Ok(e)
}

/// Polynomial in `H` and `B`, keyed by the exponents `(a, b)` of `H^a B^b`.
pub type HbPolynomial = BTreeMap<(usize, usize), BigInt>;

fn binomial(l: usize, a: usize) -> BigInt {
    (0..a).fold(BigInt::one(), |acc, i| acc * BigInt::from(l - i) / BigInt::from(i + 1))
}

/// `:φⁿ:_H − :φⁿ:_{H+B}` in `:φᵏ:_{H+B}`, computed independently of
/// [`reorder_prescription`]: `:φⁿ:_H` is expanded in powers with
/// [`wick_inverse`], each power in Wick powers with kernel `H + B` with
/// [`wick_expand`], and `(H + B)^l` binomially. The `H` dependence must
/// cancel.
pub fn reorder_by_double_expansion(n: usize) -> Result<BTreeMap<usize, HbPolynomial>> {
    let mut out: BTreeMap<usize, HbPolynomial> = BTreeMap::new();
    for (&j, c) in &wick_inverse(n)?.coeffs {
        let h_pow = (n - j) / 2;
        for (&k, d) in &wick_expand(j)?.coeffs {
            let l = (j - k) / 2;
            for a in 0..=l {
                let e = out.entry(k).or_default().entry((h_pow + a, l - a)).or_insert_with(BigInt::zero);
                *e += c * d * binomial(l, a);
            }
        }
    }
    *out.entry(n).or_default().entry((0, 0)).or_insert_with(BigInt::zero) -= 1;
    for p in out.values_mut() {
        p.retain(|_, v| !v.is_zero());
    }
    out.retain(|_, p| !p.is_empty());
    Ok(out)
}

fn power(symbol: &str, k: usize) -> String {
    match k {
        0 => String::new(),
        1 => symbol.to_string(),
        _ => format!("{symbol}^{k}"),
    }
}

impl fmt::Display for PairingExpansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.n;
        let k = &self.kernel;
        let (lhs, field): (String, Box<dyn Fn(usize) -> String>) = match self.kind {
            ExpansionKind::Power => (if n == 0 { "1".into() } else { power("φ", n) }, Box::new(|j| format!(":{}:", power("φ", j)))),
            ExpansionKind::Inverse => (format!(":{}:", power("φ", n)), Box::new(|j| power("φ", j))),
            ExpansionKind::Reorder => (
                format!(":{0}:_H - :{0}:_{{H+{k}}}", power("φ", n)),
                Box::new(move |j| format!(":{}:_{{H+{}}}", power("φ", j), self.kernel)),
            ),
        };
        write!(f, "{lhs} =")?;
        if self.coeffs.is_empty() {
            return write!(f, " 0");
        }
        for (i, (&j, c)) in self.coeffs.iter().rev().enumerate() {
            let sign = if c.is_negative() { "-" } else if i == 0 { "" } else { "+" };
            let mut parts = Vec::new();
            if !c.abs().is_one() {
                parts.push(c.abs().to_string());
            }
            let kp = power(k, (n - j) / 2);
            if !kp.is_empty() {
                parts.push(kp);
            }
            if j > 0 {
                parts.push(field(j));
            }
            if parts.is_empty() {
                parts.push("1".into());
            }
            write!(f, " {sign}{}{}", if sign.is_empty() { "" } else { " " }, parts.join(" "))?;
        }
        Ok(())
    }
}

/// Finite renormalization `φᵏ ↦ φᵏ + Σ_{i ≤ k−2} Cᵢ φⁱ` with classical
/// coefficients `Cᵢ` built from the local geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct RenormShift {
    pub k: usize,
    pub coefficients: BTreeMap<usize, Expr>,
}

impl RenormShift {
    pub fn new(k: usize) -> Self {
        RenormShift { k, coefficients: BTreeMap::new() }
    }

    pub fn with(mut self, i: usize, c: Expr) -> Result<Self> {
        if i + 2 > self.k {
            return Err(Error::RenormIndex { index: i, k: self.k });
        }
        self.coefficients.insert(i, c);
        Ok(self)
    }

    /// Shifts compose by adding their coefficients.
    pub fn then(&self, other: &RenormShift) -> Result<Self> {
        if other.k != self.k {
            return Err(Error::Domain(format!("cannot compose shifts of powers {} and {}", self.k, other.k)));
        }
        let mut out = self.clone();
        for (&i, c) in &other.coefficients {
            let sum = match out.coefficients.remove(&i) {
                Some(a) => Expr::add(a, c.clone()),
                None => c.clone(),
            };
            out.coefficients.insert(i, sum);
        }
        Ok(out)
    }
}

/// `Σᵢ cᵢ(x) φⁱ` with symbolic coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldPolynomial {
    pub terms: BTreeMap<usize, Expr>,
}

impl FieldPolynomial {
    /// Value at `x` given the values `powers[i]` of the renormalized `φⁱ`.
    pub fn eval(&self, x: &[f64; 4], powers: &[f64]) -> Result<f64> {
        let mut acc = 0.0;
        for (&i, c) in &self.terms {
            let p = powers.get(i).ok_or_else(|| Error::Domain(format!("no value for the power {i}")))?;
            acc += c.eval_f64(x)? * p;
        }
        Ok(acc)
    }
}

impl fmt::Display for FieldPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, (&i, c)) in self.terms.iter().rev().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            let p = power("φ", i);
            match (c.as_num(), p.is_empty()) {
                (Some(v), false) if v == 1.0 => write!(f, "{p}")?,
                (_, true) => write!(f, "({c})")?,
                _ => write!(f, "({c}) {p}")?,
            }
        }
        Ok(())
    }
}

/// `φ̃ᵏ = φᵏ + Σ Cᵢ φⁱ`.
pub fn renorm_apply(shift: &RenormShift, k: usize) -> Result<FieldPolynomial> {
    if shift.k != k {
        return Err(Error::RenormIndex { index: shift.k, k });
    }
    let mut terms = BTreeMap::from([(k, Expr::num(1.0))]);
    for (&i, c) in &shift.coefficients {
        if i + 2 > k {
            return Err(Error::RenormIndex { index: i, k });
        }
        terms.insert(i, c.clone());
    }
    Ok(FieldPolynomial { terms })
}
