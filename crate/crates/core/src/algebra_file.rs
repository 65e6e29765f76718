//! Algebra specification files.
//!
//! ```toml
//! name = "rigid body"
//! dim = 3
//! metric = [1, 0, 0,  0, 2, 0,  0, 0, 3]   # row-major
//! brackets = [[1, 2, 3, 1], [2, 3, 1, 1], [3, 1, 2, "1"]]   # (i, j, k, c^k_ij), 1-based
//!
//! [representation]                          # optional
//! kind = "general"                          # general | nilpotent | so3
//! size = 3
//! generators = [[0, 0, 0, 0, 0, -1, 0, 1, 0], ...]   # row-major, one per basis vector
//! ```
//!
//! Values may be integers, decimals or `"p/q"` strings; decimals are read from their
//! literal text, so `0.1` is exactly `1/10`.

use std::path::Path;

use nalgebra::DMatrix;
use serde::Deserialize;

use crate::algebra::LieAlgebraSpec;
use crate::error::{Error, Result};
use crate::group::{RepKind, Representation};
use crate::scalar::{parse_rational, Rational};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AlgebraFile {
    name: Option<String>,
    dim: usize,
    metric: Vec<toml::Value>,
    #[serde(default)]
    brackets: Vec<Vec<toml::Value>>,
    representation: Option<RepresentationFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RepresentationFile {
    kind: String,
    size: usize,
    generators: Vec<Vec<f64>>,
}

pub fn load_algebra_file(path: &Path) -> Result<LieAlgebraSpec<Rational>> {
    let text = std::fs::read_to_string(path)?;
    let default_name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    parse_algebra_toml(&text, &default_name)
}

pub fn parse_algebra_toml(text: &str, default_name: &str) -> Result<LieAlgebraSpec<Rational>> {
    let file: AlgebraFile = toml::from_str(text).map_err(|e| Error::AlgebraFile(e.to_string()))?;
    let n = file.dim;
    if n == 0 {
        return Err(Error::AlgebraFile("dim must be positive".into()));
    }
    if file.metric.len() != n * n {
        return Err(Error::AlgebraFile(format!("metric has {} entries, expected {}", file.metric.len(), n * n)));
    }
    let flat = file
        .metric
        .iter()
        .enumerate()
        .map(|(i, v)| value(v, &format!("metric[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    let metric = flat.chunks(n).map(|r| r.to_vec()).collect();
    let mut brackets = Vec::with_capacity(file.brackets.len());
    for (b, entry) in file.brackets.iter().enumerate() {
        if entry.len() != 4 {
            return Err(Error::AlgebraFile(format!("brackets[{b}] must be [i, j, k, value]")));
        }
        let index = |v: &toml::Value| -> Result<usize> {
            match v.as_integer() {
                Some(i) if i >= 1 && (i as usize) <= n => Ok(i as usize - 1),
                _ => Err(Error::AlgebraFile(format!("brackets[{b}]: index {v} outside 1..={n}"))),
            }
        };
        let (i, j, k) = (index(&entry[0])?, index(&entry[1])?, index(&entry[2])?);
        if i == j {
            return Err(Error::AlgebraFile(format!("brackets[{b}]: [e_i, e_i] is always zero")));
        }
        brackets.push((i, j, k, value(&entry[3], &format!("brackets[{b}]"))?));
    }
    let name = file.name.unwrap_or_else(|| default_name.to_string());
    let alg = LieAlgebraSpec::new(name, n, &brackets, metric)?;
    match file.representation {
        None => Ok(alg),
        Some(rep) => {
            let kind = match rep.kind.as_str() {
                "general" => RepKind::General,
                "nilpotent" => RepKind::Nilpotent,
                "so3" => RepKind::So3,
                other => return Err(Error::AlgebraFile(format!("unknown representation kind {other:?}"))),
            };
            if rep.generators.len() != n || rep.generators.iter().any(|g| g.len() != rep.size * rep.size) {
                return Err(Error::AlgebraFile(format!(
                    "representation needs {n} generators of {} entries each",
                    rep.size * rep.size
                )));
            }
            let gens = rep.generators.iter().map(|g| DMatrix::from_row_slice(rep.size, rep.size, g)).collect();
            alg.with_representation(Representation::matrices(kind, gens)?)
        }
    }
}

fn value(v: &toml::Value, field: &str) -> Result<Rational> {
    let parsed = match v {
        toml::Value::Integer(i) => Some(Rational::from_integer((*i).into())),
        toml::Value::Float(f) if f.is_finite() => parse_rational(&f.to_string()),
        toml::Value::String(s) => parse_rational(s),
        _ => None,
    };
    parsed.ok_or_else(|| Error::AlgebraFile(format!("{field}: cannot read {v} as a rational number")))
}
