//! A finite-mode oscillator representation of the CCR, used as an
//! independent oracle for normal ordering.
//!
//! `φ_i = Σ_k (z_ik a_k + z̄_ik a_k†)` acts on unnormalized Fock states
//! `|n) = Π (a_k†)^{n_k} |0)`, where `a_k |n) = n_k |n − e_k)`. With
//! Gaussian-integer `z` every amplitude is a Gaussian integer and
//! `[φ_i, φ_j] = iE_ij` with `E_ij = 2 Im Σ_k z_ik z̄_jk`. Arithmetic is
//! checked, so a result is either exact or an error.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::Rng;

use super::algebra::{AlgebraElement, Generator, PairingTable};
use crate::error::{Error, Result};

pub const MODES: usize = 6;

type Gauss = (i128, i128);
type State = [u8; MODES];
pub type FockVector = HashMap<State, Gauss>;

fn overflow() -> Error {
    Error::Domain("oscillator amplitude overflow".into())
}

fn add(a: Gauss, b: Gauss) -> Result<Gauss> {
    Ok((a.0.checked_add(b.0).ok_or_else(overflow)?, a.1.checked_add(b.1).ok_or_else(overflow)?))
}

fn mul(a: Gauss, b: Gauss) -> Result<Gauss> {
    let m = |x: i128, y: i128| x.checked_mul(y).ok_or_else(overflow);
    Ok((m(a.0, b.0)?.checked_sub(m(a.1, b.1)?).ok_or_else(overflow)?, m(a.0, b.1)?.checked_add(m(a.1, b.0)?).ok_or_else(overflow)?))
}

fn accumulate(v: &mut FockVector, n: State, c: Gauss) -> Result<()> {
    let e = v.entry(n).or_insert((0, 0));
    *e = add(*e, c)?;
    Ok(())
}

#[derive(Clone, Debug)]
pub struct OscillatorRepresentation {
    /// `z[i][k]` for the field of generator `i` and mode `k`.
    pub z: Vec<[Gauss; MODES]>,
}

impl OscillatorRepresentation {
    /// Random Gaussian-integer couplings with parts in `−3..=3`.
    pub fn random(rng: &mut impl Rng, fields: usize) -> Self {
        let z = (0..fields).map(|_| std::array::from_fn(|_| (rng.gen_range(-3..=3), rng.gen_range(-3..=3)))).collect();
        OscillatorRepresentation { z }
    }

    /// `E_ij = 2 Im Σ_k z_ik z̄_jk`.
    pub fn pairing(&self, i: usize, j: usize) -> i128 {
        (0..MODES).map(|k| 2 * (self.z[i][k].1 * self.z[j][k].0 - self.z[i][k].0 * self.z[j][k].1)).sum()
    }

    /// The pairing table for generators whose roots index the fields.
    pub fn table(&self, gens: &[Generator]) -> PairingTable {
        let mut t = PairingTable::symbolic();
        for a in gens {
            for b in gens {
                if a < b {
                    let q = BigRational::from_integer(BigInt::from(self.pairing(a.root as usize, b.root as usize)));
                    t.insert(a, b, q);
                }
            }
        }
        t
    }

    pub fn apply_field(&self, i: usize, v: &FockVector) -> Result<FockVector> {
        let z = self.z.get(i).ok_or_else(|| Error::Domain(format!("no oscillator field for generator {i}")))?;
        let mut out = FockVector::new();
        for (n, &c) in v {
            for k in 0..MODES {
                if n[k] > 0 {
                    let mut m = *n;
                    m[k] -= 1;
                    accumulate(&mut out, m, mul(mul(c, z[k])?, (n[k] as i128, 0))?)?;
                }
                let mut m = *n;
                m[k] = m[k].checked_add(1).ok_or_else(overflow)?;
                accumulate(&mut out, m, mul(c, (z[k].0, -z[k].1))?)?;
            }
        }
        out.retain(|_, c| *c != (0, 0));
        Ok(out)
    }

    /// The operator of `elem` on `v`. Coefficients must be Gaussian integers
    /// and every pairing evaluated.
    pub fn apply(&self, elem: &AlgebraElement, v: &FockVector) -> Result<FockVector> {
        let mut out = FockVector::new();
        for (m, c) in elem.terms() {
            if !m.pairings.is_empty() {
                return Err(Error::Domain("unevaluated pairing in an oscillator check".into()));
            }
            let int = |q: &BigRational| -> Result<i128> {
                if !q.denom().to_i128().is_some_and(|d| d == 1) {
                    return Err(Error::Domain(format!("coefficient {q} is not an integer")));
                }
                q.numer().to_i128().ok_or_else(overflow)
            };
            let coeff = (int(&c.re)?, int(&c.im)?);
            let mut w = v.clone();
            for g in m.word.iter().rev() {
                w = self.apply_field(g.root as usize, &w)?;
            }
            for (n, a) in w {
                accumulate(&mut out, n, mul(a, coeff)?)?;
            }
        }
        out.retain(|_, c| *c != (0, 0));
        Ok(out)
    }

    /// The vacuum and the one-quantum states.
    pub fn low_states() -> Vec<FockVector> {
        let mut states = vec![[0u8; MODES]];
        for k in 0..MODES {
            let mut n = [0; MODES];
            n[k] = 1;
            states.push(n);
        }
        states.into_iter().map(|n| FockVector::from([(n, (1, 0))])).collect()
    }

    /// True when `a` and `b` act identically on [`Self::low_states`].
    pub fn agree(&self, a: &AlgebraElement, b: &AlgebraElement) -> Result<bool> {
        for v in Self::low_states() {
            if self.apply(a, &v)? != self.apply(b, &v)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}
