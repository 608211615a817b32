//! Test functions behind the generator ids, and pairing values from the
//! causal propagator.

use std::collections::BTreeMap;

use super::algebra::{Generator, PairingTable};
use crate::confmap::{ConformalEmbedding, TestFunction};
use crate::error::{Error, Result};
use crate::exprgeom::Spacetime;
use crate::propagator::{symplectic_form_with, PropagatorConfig};

#[derive(Clone, Debug, Default)]
pub struct FieldRegistry {
    spacetimes: BTreeMap<String, Spacetime>,
    roots: BTreeMap<u32, (String, TestFunction)>,
    embeddings: BTreeMap<String, ConformalEmbedding>,
}

impl FieldRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    fn add_spacetime(&mut self, st: &Spacetime) {
        self.spacetimes.entry(st.name().to_string()).or_insert_with(|| st.clone());
    }

    pub fn spacetime(&self, name: &str) -> Result<&Spacetime> {
        self.spacetimes.get(name).ok_or_else(|| Error::Domain(format!("spacetime `{name}` is not registered")))
    }

    /// Registers `f` on `st` under the next free id.
    pub fn register_function(&mut self, st: &Spacetime, f: TestFunction) -> Result<Generator> {
        f.check_inside(st)?;
        self.add_spacetime(st);
        let root = self.roots.keys().next_back().map_or(0, |k| k + 1);
        self.roots.insert(root, (st.name().to_string(), f));
        Ok(Generator::new(st.name(), root))
    }

    /// Registers an elementary embedding. A composite is accepted when all of
    /// its factors are already known.
    pub fn register_embedding(&mut self, e: &ConformalEmbedding) -> Result<()> {
        self.add_spacetime(e.source());
        self.add_spacetime(e.target());
        match e.factors() {
            [single] => {
                self.embeddings.insert(single.clone(), e.clone());
                Ok(())
            }
            factors => match factors.iter().find(|f| !self.embeddings.contains_key(*f)) {
                Some(missing) => Err(Error::Domain(format!("factor `{missing}` of `{}` is not registered", e.name()))),
                None => Ok(()),
            },
        }
    }

    /// The test function of `g`: the root function pushed forward with
    /// weight 3 along the path.
    pub fn resolve(&self, g: &Generator) -> Result<TestFunction> {
        let (st, f) = self.roots.get(&g.root).ok_or_else(|| Error::Domain(format!("unknown test function id {}", g.root)))?;
        let mut st = st.clone();
        let mut f = f.clone();
        for name in &g.path {
            let e = self.embeddings.get(name).ok_or_else(|| Error::Domain(format!("embedding `{name}` is not registered")))?;
            if e.source().name() != st {
                return Err(Error::SpacetimeMismatch { expected: e.source().name().to_string(), got: st });
            }
            f = e.weighted_pushforward(3.0, &f)?;
            st = e.target().name().to_string();
        }
        if st != g.spacetime {
            return Err(Error::SpacetimeMismatch { expected: g.spacetime.clone(), got: st });
        }
        Ok(f)
    }

    /// `E(f, g) = ∫ f (E g)` for every pair of distinct generators on a common
    /// spacetime, stored exactly as the rational value of the double.
    pub fn numeric_pairings(&self, gens: &[Generator], cfg: &PropagatorConfig) -> Result<PairingTable> {
        let mut table = PairingTable::symbolic();
        let mut sorted = gens.to_vec();
        sorted.sort();
        sorted.dedup();
        for (i, a) in sorted.iter().enumerate() {
            for b in &sorted[i + 1..] {
                if a.spacetime != b.spacetime {
                    continue;
                }
                let st = self.spacetime(&a.spacetime)?;
                let v = symplectic_form_with(st, &self.resolve(a)?, &self.resolve(b)?, cfg)?;
                table.insert_f64(a, b, v.value)?;
            }
        }
        Ok(table)
    }
}
