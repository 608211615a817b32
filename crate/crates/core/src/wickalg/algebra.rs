//! Polynomials in smeared fields `φ(f)` modulo the CCR, with exact
//! rational-complex coefficients.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::confmap::ConformalEmbedding;
use crate::error::{Error, Result};

pub type Coeff = Complex<BigRational>;

pub fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn real(q: BigRational) -> Coeff {
    Complex::new(q, BigRational::zero())
}

pub fn imag_unit() -> Coeff {
    Complex::new(BigRational::zero(), BigRational::one())
}

/// Exact rational image of a double.
pub fn exact(v: f64) -> Result<BigRational> {
    BigRational::from_float(v).ok_or_else(|| Error::Domain(format!("{v} has no rational value")))
}

pub fn coeff_to_f64(c: &Coeff) -> (f64, f64) {
    (c.re.to_f64().unwrap_or(f64::NAN), c.im.to_f64().unwrap_or(f64::NAN))
}

/// `φ(f)` for the test function with id `root`, transported along the
/// elementary embeddings in `path`, on the spacetime named `spacetime`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Generator {
    pub spacetime: String,
    pub root: u32,
    pub path: Vec<String>,
}

impl Generator {
    pub fn new(spacetime: &str, root: u32) -> Self {
        Generator { spacetime: spacetime.to_string(), root, path: Vec::new() }
    }

    /// The generator `φ′(ψ_*^{(3)} f)`.
    pub fn pushed(&self, e: &ConformalEmbedding) -> Result<Self> {
        if self.spacetime != e.source().name() {
            return Err(Error::SpacetimeMismatch { expected: e.source().name().to_string(), got: self.spacetime.clone() });
        }
        let mut path = self.path.clone();
        path.extend(e.factors().iter().cloned());
        Ok(Generator { spacetime: e.target().name().to_string(), root: self.root, path })
    }
}

/// Paths are compared from the outermost embedding inwards, so appending the
/// same factors to every generator preserves the order.
impl Ord for Generator {
    fn cmp(&self, other: &Self) -> Ordering {
        self.path
            .iter()
            .rev()
            .cmp(other.path.iter().rev())
            .then(self.root.cmp(&other.root))
            .then(self.spacetime.cmp(&other.spacetime))
    }
}

impl PartialOrd for Generator {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.root)?;
        for p in &self.path {
            write!(f, ">{p}")?;
        }
        write!(f, "@{}", self.spacetime)
    }
}

/// A word in the generators times a product of unevaluated pairings
/// `E(f, g)`, each stored with `f < g`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    pub word: Vec<Generator>,
    pub pairings: Vec<(Generator, Generator)>,
}

impl Monomial {
    pub fn word(word: Vec<Generator>) -> Self {
        Monomial { word, pairings: Vec::new() }
    }

    pub fn is_ordered(&self) -> bool {
        self.word.windows(2).all(|w| w[0] <= w[1])
    }
}

/// What an oracle knows about `E(f, g)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Pairing {
    Exact(BigRational),
    Symbolic,
}

/// Supplies the commutator function and the relations (i) and (iii).
pub trait PairingOracle {
    fn pairing(&self, f: &Generator, g: &Generator) -> Pairing;

    /// `f = P_g h` for some test function `h`, so `φ(f) = 0`.
    fn is_wave_exact(&self, _f: &Generator) -> bool {
        false
    }

    /// `f = Σ cᵢ fᵢ`, so `φ(f) = Σ cᵢ φ(fᵢ)`.
    fn decompose(&self, _f: &Generator) -> Option<&[(Coeff, Generator)]> {
        None
    }
}

/// A table of exact pairing values; pairs not in the table stay symbolic.
#[derive(Clone, Debug, Default)]
pub struct PairingTable {
    values: BTreeMap<(Generator, Generator), BigRational>,
    wave_exact: BTreeSet<Generator>,
    combinations: BTreeMap<Generator, Vec<(Coeff, Generator)>>,
}

impl PairingTable {
    pub fn symbolic() -> Self {
        Self::default()
    }

    /// Records `E(f, g) = q` and `E(g, f) = −q`.
    pub fn insert(&mut self, f: &Generator, g: &Generator, q: BigRational) {
        match f.cmp(g) {
            Ordering::Less => self.values.insert((f.clone(), g.clone()), q),
            Ordering::Greater => self.values.insert((g.clone(), f.clone()), -q),
            Ordering::Equal => None,
        };
    }

    pub fn insert_f64(&mut self, f: &Generator, g: &Generator, v: f64) -> Result<()> {
        self.insert(f, g, exact(v)?);
        Ok(())
    }

    pub fn get(&self, f: &Generator, g: &Generator) -> Option<BigRational> {
        match f.cmp(g) {
            Ordering::Less => self.values.get(&(f.clone(), g.clone())).cloned(),
            Ordering::Greater => self.values.get(&(g.clone(), f.clone())).map(|q| -q.clone()),
            Ordering::Equal => Some(BigRational::zero()),
        }
    }

    pub fn mark_wave_exact(&mut self, f: &Generator) {
        self.wave_exact.insert(f.clone());
    }

    pub fn define_combination(&mut self, f: &Generator, terms: Vec<(Coeff, Generator)>) {
        self.combinations.insert(f.clone(), terms);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl PairingOracle for PairingTable {
    fn pairing(&self, f: &Generator, g: &Generator) -> Pairing {
        self.get(f, g).map_or(Pairing::Symbolic, Pairing::Exact)
    }

    fn is_wave_exact(&self, f: &Generator) -> bool {
        self.wave_exact.contains(f)
    }

    fn decompose(&self, f: &Generator) -> Option<&[(Coeff, Generator)]> {
        self.combinations.get(f).map(|v| v.as_slice())
    }
}

/// A finite sum of monomials with nonzero coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AlgebraElement {
    terms: BTreeMap<Monomial, Coeff>,
}

impl AlgebraElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::term(Monomial::word(Vec::new()), Coeff::one())
    }

    pub fn term(m: Monomial, c: Coeff) -> Self {
        let mut e = Self::zero();
        e.add_term(m, c);
        e
    }

    /// `φ(f₁) ⋯ φ(fₙ)` as written.
    pub fn word(word: &[Generator]) -> Self {
        Self::term(Monomial::word(word.to_vec()), Coeff::one())
    }

    pub fn add_term(&mut self, m: Monomial, c: Coeff) {
        if c.is_zero() {
            return;
        }
        let sum = match self.terms.remove(&m) {
            Some(old) => old + c,
            None => c,
        };
        if !sum.is_zero() {
            self.terms.insert(m, sum);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Coeff)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of a word without unevaluated pairings.
    pub fn coefficient(&self, word: &[Generator]) -> Coeff {
        self.terms.get(&Monomial::word(word.to_vec())).cloned().unwrap_or_else(Coeff::zero)
    }

    pub fn generators(&self) -> BTreeSet<Generator> {
        let mut out = BTreeSet::new();
        for m in self.terms.keys() {
            out.extend(m.word.iter().cloned());
            for (a, b) in &m.pairings {
                out.insert(a.clone());
                out.insert(b.clone());
            }
        }
        out
    }

    pub fn is_normal(&self) -> bool {
        self.terms.keys().all(Monomial::is_ordered)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, c: &Coeff) -> Self {
        let mut out = Self::zero();
        for (m, v) in &self.terms {
            out.add_term(m.clone(), v * c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-Coeff::one()))
    }

    /// Concatenation of words, not reordered.
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let word = m1.word.iter().chain(&m2.word).cloned().collect();
                let mut pairings: Vec<_> = m1.pairings.iter().chain(&m2.pairings).cloned().collect();
                pairings.sort();
                out.add_term(Monomial { word, pairings }, c1 * c2);
            }
        }
        out
    }

    /// `(c φ(f₁)⋯φ(fₙ))* = c̄ φ(fₙ)⋯φ(f₁)` for real test functions; the
    /// pairings are real.
    pub fn star(&self) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let word = m.word.iter().rev().cloned().collect();
            out.add_term(Monomial { word, pairings: m.pairings.clone() }, c.conj());
        }
        out
    }

    /// Sorts every word with `φ(a)φ(b) = φ(b)φ(a) + iE(a, b)𝟙`, after
    /// expanding linear combinations and dropping `P_g`-exact generators.
    pub fn normalize(&self, oracle: &dyn PairingOracle) -> Self {
        let mut out = Self::zero();
        let mut stack: Vec<(Monomial, Coeff)> = self.terms.iter().map(|(m, c)| (m.clone(), c.clone())).collect();
        while let Some((m, c)) = stack.pop() {
            if c.is_zero() {
                continue;
            }
            if let Some((pos, parts)) = m.word.iter().enumerate().find_map(|(i, g)| oracle.decompose(g).map(|p| (i, p))) {
                for (a, h) in parts {
                    let mut word = m.word.clone();
                    word[pos] = h.clone();
                    stack.push((Monomial { word, pairings: m.pairings.clone() }, &c * a));
                }
                continue;
            }
            if m.word.iter().any(|g| oracle.is_wave_exact(g)) {
                continue;
            }
            let Some(i) = m.word.windows(2).position(|w| w[0] > w[1]) else {
                out.add_term(m, c);
                continue;
            };
            let (a, b) = (m.word[i].clone(), m.word[i + 1].clone());
            let mut swapped = m.word.clone();
            swapped.swap(i, i + 1);
            stack.push((Monomial { word: swapped, pairings: m.pairings.clone() }, c.clone()));
            let mut word = m.word.clone();
            word.drain(i..i + 2);
            // iE(a, b) = −iE(b, a) with b < a
            let minus_i = -imag_unit();
            match oracle.pairing(&b, &a) {
                Pairing::Exact(q) => stack.push((Monomial { word, pairings: m.pairings.clone() }, c * minus_i * real(q))),
                Pairing::Symbolic => {
                    let mut pairings = m.pairings.clone();
                    pairings.push((b, a));
                    pairings.sort();
                    stack.push((Monomial { word, pairings }, c * minus_i));
                }
            }
        }
        out
    }

    /// Replaces every generator by its image under `f`.
    pub fn map_generators(&self, f: impl Fn(&Generator) -> Result<Generator>) -> Result<Self> {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let word = m.word.iter().map(&f).collect::<Result<Vec<_>>>()?;
            let mut pairings = Vec::with_capacity(m.pairings.len());
            for (a, b) in &m.pairings {
                let (a, b) = (f(a)?, f(b)?);
                pairings.push(if a < b { (a, b) } else { (b, a) });
            }
            pairings.sort();
            out.add_term(Monomial { word, pairings }, c.clone());
        }
        Ok(out)
    }

    /// Largest coefficient modulus, in floating point.
    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| coeff_to_f64(c)).map(|(re, im)| re.hypot(im)).fold(0.0, f64::max)
    }

    /// True when every coefficient is a Gaussian rational with small
    /// denominators; used only for display.
    fn is_simple(c: &Coeff) -> bool {
        c.re.denom().bits() < 20 && c.im.denom().bits() < 20
    }
}

/// `normal_form(word, E)`.
pub fn normal_form(word: &[Generator], oracle: &dyn PairingOracle) -> AlgebraElement {
    AlgebraElement::word(word).normalize(oracle)
}

/// The morphism `α_ψ`: `φ(f₁)⋯φ(fₙ) ↦ φ′(ψ_*^{(3)} f₁)⋯φ′(ψ_*^{(3)} fₙ)`.
pub fn apply_morphism(e: &ConformalEmbedding, elem: &AlgebraElement) -> Result<AlgebraElement> {
    elem.map_generators(|g| g.pushed(e))
}

fn write_coeff(f: &mut fmt::Formatter<'_>, c: &Coeff) -> fmt::Result {
    if AlgebraElement::is_simple(c) {
        match (c.re.is_zero(), c.im.is_zero()) {
            (_, true) => write!(f, "{}", c.re),
            (true, false) => write!(f, "{}i", c.im),
            _ => write!(f, "({} {} {}i)", c.re, if c.im.is_negative() { "-" } else { "+" }, c.im.abs()),
        }
    } else {
        let (re, im) = coeff_to_f64(c);
        write!(f, "({re:e} {} {:e}i)", if im < 0.0 { "-" } else { "+" }, im.abs())
    }
}

impl fmt::Display for AlgebraElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (m, c)) in self.terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write_coeff(f, c)?;
            for (a, b) in &m.pairings {
                write!(f, " E({a},{b})")?;
            }
            if m.word.is_empty() {
                write!(f, " 1")?;
            }
            for g in &m.word {
                write!(f, " φ({g})")?;
            }
        }
        Ok(())
    }
}
