//! TOML catalogs of spacetimes and conformal embeddings.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::confmap::ConformalEmbedding;
use crate::error::{Error, Result};
use crate::exprgeom::{parse_expr_with, sym_index, CoordBox, Expr, Params, Spacetime};

/// The catalog shipped with the crate.
pub const DEFAULT_CATALOG: &str = include_str!("../../catalogs/default.toml");

const DEFAULT_PATCH_RADIUS: f64 = 0.5;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFile {
    #[serde(default)]
    parameters: BTreeMap<String, f64>,
    #[serde(default, rename = "spacetime")]
    spacetimes: Vec<SpacetimeSpec>,
    #[serde(default, rename = "embedding")]
    embeddings: Vec<EmbeddingSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpacetimeSpec {
    name: String,
    domain: [[f64; 2]; 4],
    omega: Option<String>,
    metric: Option<BTreeMap<String, String>>,
    patch_radius: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EmbeddingSpec {
    name: String,
    source: String,
    target: String,
    psi: [String; 4],
    psi_inv: [String; 4],
    omega: String,
    image_box: [[f64; 2]; 4],
}

#[derive(Clone, Debug)]
pub struct Catalog {
    pub parameters: Params,
    pub spacetimes: Vec<Spacetime>,
    pub embeddings: Vec<ConformalEmbedding>,
}

fn catalog_error(location: impl Into<String>, e: impl std::fmt::Display) -> Error {
    Error::Catalog { location: location.into(), message: e.to_string() }
}

impl Catalog {
    pub fn spacetime(&self, name: &str) -> Result<&Spacetime> {
        self.spacetimes
            .iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| catalog_error("catalog", format!("no spacetime named `{name}`")))
    }

    pub fn embedding(&self, name: &str) -> Result<&ConformalEmbedding> {
        self.embeddings
            .iter()
            .find(|e| e.name() == name)
            .ok_or_else(|| catalog_error("catalog", format!("no embedding named `{name}`")))
    }

    pub fn curved_spacetimes(&self) -> impl Iterator<Item = &Spacetime> {
        self.spacetimes.iter().filter(|s| !s.has_constant_metric())
    }

    pub fn builtin() -> Result<Self> {
        Self::parse(DEFAULT_CATALOG, "default catalog")
    }

    /// Parses and validates catalog text; `origin` names it in errors.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let file: CatalogFile = toml::from_str(text).map_err(|e| {
            let at = e.span().map(|s| line_col(text, s.start)).map_or_else(String::new, |(l, c)| format!(" line {l}, column {c}"));
            catalog_error(format!("{origin}{at}"), e.message())
        })?;
        let params = file.parameters;
        let mut spacetimes: Vec<Spacetime> = Vec::new();
        for entry in &file.spacetimes {
            let loc = format!("{origin}: spacetime `{}`", entry.name);
            if spacetimes.iter().any(|s| s.name() == entry.name) {
                return Err(catalog_error(loc, "duplicate name"));
            }
            spacetimes.push(build_spacetime(entry, &params).map_err(|e| catalog_error(&loc, e))?);
        }
        let mut embeddings: Vec<ConformalEmbedding> = Vec::new();
        for entry in &file.embeddings {
            let loc = format!("{origin}: embedding `{}`", entry.name);
            if embeddings.iter().any(|e| e.name() == entry.name) {
                return Err(catalog_error(loc, "duplicate name"));
            }
            let find = |n: &str| {
                spacetimes
                    .iter()
                    .find(|s| s.name() == n)
                    .cloned()
                    .ok_or_else(|| catalog_error(&loc, format!("unknown spacetime `{n}`")))
            };
            let (source, target) = (find(&entry.source)?, find(&entry.target)?);
            let e = build_embedding(entry, source, target, &params).map_err(|e| catalog_error(&loc, e))?;
            embeddings.push(e);
        }
        Ok(Catalog { parameters: params, spacetimes, embeddings })
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

fn parse(src: &str, params: &Params, what: &str) -> Result<Expr> {
    parse_expr_with(src, params).map_err(|e| Error::Domain(format!("{what}: {e}")))
}

fn boxed(iv: [[f64; 2]; 4]) -> Result<CoordBox> {
    CoordBox::from_intervals(iv)
}

fn build_spacetime(entry: &SpacetimeSpec, params: &Params) -> Result<Spacetime> {
    let domain = boxed(entry.domain)?;
    match (&entry.omega, &entry.metric) {
        (Some(w), None) => {
            let omega = parse(w, params, "omega")?;
            // ω² η is blind to the sign of ω, so positivity is checked here
            for p in domain.interior_grid(3).into_iter().chain(domain.boundary_grid(3)) {
                let v = omega.eval_f64(&p)?;
                if !(v > 0.0) {
                    return Err(Error::Domain(format!("omega = {v} is not positive at {p:?}")));
                }
            }
            let radius = match (entry.patch_radius, omega.as_num()) {
                (Some(r), _) => r,
                (None, Some(_)) => (0..4).map(|i| (domain.hi[i] - domain.lo[i]).powi(2)).sum::<f64>().sqrt(),
                (None, None) => DEFAULT_PATCH_RADIUS,
            };
            Spacetime::conformally_flat(&entry.name, domain, omega, radius)
        }
        (None, Some(m)) => {
            let mut comps: [Expr; 10] = std::array::from_fn(|_| Expr::num(0.0));
            for (key, src) in m {
                let idx = key
                    .strip_prefix('g')
                    .filter(|d| d.len() == 2 && d.bytes().all(|b| (b'0'..=b'3').contains(&b)))
                    .map(|d| ((d.as_bytes()[0] - b'0') as usize, (d.as_bytes()[1] - b'0') as usize))
                    .ok_or_else(|| Error::Domain(format!("metric key `{key}` is not of the form gab")))?;
                comps[sym_index(idx.0, idx.1)] = parse(src, params, key)?;
            }
            Spacetime::new(&entry.name, domain, comps, None, entry.patch_radius.unwrap_or(DEFAULT_PATCH_RADIUS))
        }
        _ => Err(Error::Domain("give exactly one of `omega` and `metric`".into())),
    }
}

fn build_embedding(entry: &EmbeddingSpec, source: Spacetime, target: Spacetime, params: &Params) -> Result<ConformalEmbedding> {
    let coords = |v: &[String; 4], what: &str| -> Result<[Expr; 4]> {
        let parsed = v.iter().enumerate().map(|(i, s)| parse(s, params, &format!("{what}[{i}]"))).collect::<Result<Vec<_>>>()?;
        Ok(parsed.try_into().expect("four components"))
    };
    let psi = coords(&entry.psi, "psi")?;
    let psi_inv = coords(&entry.psi_inv, "psi_inv")?;
    let omega = parse(&entry.omega, params, "omega")?;
    ConformalEmbedding::new(&entry.name, source, target, psi, psi_inv, omega, boxed(entry.image_box)?)
}

/// Reads and validates a catalog file.
pub fn catalog_load(path: &Path) -> Result<Catalog> {
    let text = std::fs::read_to_string(path).map_err(|e| catalog_error(path.display().to_string(), e))?;
    Catalog::parse(&text, &path.display().to_string())
}
