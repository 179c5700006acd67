//! Versioned JSON dataset files: fixed-point data, model manifolds and loop
//! maps. Every payload is re-validated on load.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::equivariant::EquivariantData;
use crate::error::{Error, Result};
use crate::genera::ModelManifold;
use crate::odd_chern::quadrature::{diagonal_loop, direct_sum, su2_identity, CMatrix};
use crate::odd_chern::LoopMap;

pub const SCHEMA_VERSION: u32 = 1;

/// Shipped schema for dataset files.
pub const SCHEMA_JSON: &str = include_str!("../data/schema.json");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LoopSpec {
    /// `φ ↦ diag(e^{i k φ})` sampled on `samples` nodes.
    DiagonalCircle { exponents: Vec<i64>, samples: usize },
    /// Explicit row-major samples `[re, im]` of a loop in `U(dim)`.
    CircleSamples { dim: usize, closed_endpoint: bool, samples: Vec<Vec<[f64; 2]>> },
    /// `S³ ≅ SU(2)` (or its reflection), stabilized by an identity block.
    Su2 {
        grid: usize,
        #[serde(default)]
        reflect: bool,
        #[serde(default)]
        stabilize: usize,
    },
}

impl LoopSpec {
    pub fn build(&self) -> Result<LoopMap> {
        match self {
            LoopSpec::DiagonalCircle { exponents, samples } => LoopMap::circle(*samples, diagonal_loop(exponents)),
            LoopSpec::CircleSamples { dim, closed_endpoint, samples } => {
                let mats = samples
                    .iter()
                    .enumerate()
                    .map(|(k, s)| {
                        if s.len() != dim * dim {
                            return Err(Error::Data(format!(
                                "sample {} has {} entries, expected {}",
                                k,
                                s.len(),
                                dim * dim
                            )));
                        }
                        let v: Vec<Complex64> = s.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
                        Ok(CMatrix::from_row_slice(*dim, *dim, &v))
                    })
                    .collect::<Result<Vec<_>>>()?;
                LoopMap::circle_from_samples(mats, *closed_endpoint)
            }
            LoopSpec::Su2 { grid, reflect, stabilize } => {
                let (reflect, k) = (*reflect, *stabilize);
                LoopMap::sphere3(*grid, move |z1, z2| {
                    let g = su2_identity(z1, if reflect { z2.conj() } else { z2 });
                    if k == 0 {
                        g
                    } else {
                        direct_sum(&g, &CMatrix::identity(k, k))
                    }
                })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum Payload {
    Equivariant(EquivariantData),
    ModelManifold(ModelManifold),
    LoopMap(LoopSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetFile {
    pub schema_version: u32,
    #[serde(default)]
    pub description: String,
    #[serde(flatten)]
    pub payload: Payload,
}

impl DatasetFile {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Data(format!(
                "unsupported schema_version {} (this build reads {})",
                self.schema_version, SCHEMA_VERSION
            )));
        }
        match &self.payload {
            Payload::Equivariant(d) => d.validate(),
            Payload::ModelManifold(m) => m.validate(),
            Payload::LoopMap(l) => match l {
                LoopSpec::DiagonalCircle { samples, .. } if *samples < 16 => {
                    Err(Error::Data(format!("loop needs at least 16 samples, got {}", samples)))
                }
                LoopSpec::Su2 { grid, .. } if *grid < 24 || grid % 2 != 0 => {
                    Err(Error::Data(format!("S³ grid must be even and >= 24, got {}", grid)))
                }
                _ => Ok(()),
            },
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let f: DatasetFile = serde_json::from_str(text)?;
        f.validate()?;
        Ok(f)
    }

    pub fn equivariant(&self) -> Result<&EquivariantData> {
        match &self.payload {
            Payload::Equivariant(d) => Ok(d),
            _ => Err(Error::Data("dataset does not hold fixed-point data".into())),
        }
    }

    pub fn model(&self) -> Result<&ModelManifold> {
        match &self.payload {
            Payload::ModelManifold(m) => Ok(m),
            _ => Err(Error::Data("dataset does not hold a model manifold".into())),
        }
    }

    pub fn loop_spec(&self) -> Result<&LoopSpec> {
        match &self.payload {
            Payload::LoopMap(l) => Ok(l),
            _ => Err(Error::Data("dataset does not hold a loop map".into())),
        }
    }
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<DatasetFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Data(format!("{}: {}", path.display(), e)))?;
    DatasetFile::parse(&text).map_err(|e| match e {
        Error::Data(m) => Error::Data(format!("{}: {}", path.display(), m)),
        Error::Json(j) => Error::Data(format!("{}: {}", path.display(), j)),
        other => other,
    })
}

/// Datasets compiled into the binary, keyed by short name.
pub const BUILTIN: &[(&str, &str)] = &[
    ("s3", include_str!("../data/s3_circle_action.json")),
    ("hp2_s7", include_str!("../data/hp2_s7.json")),
    ("hp2_s7_n1", include_str!("../data/hp2_s7_n1.json")),
    ("hp2_s7_n2", include_str!("../data/hp2_s7_n2.json")),
    ("cp2_s7", include_str!("../data/cp2_s7.json")),
    ("empty", include_str!("../data/empty_fixed_set.json")),
    ("gl_circle", include_str!("../data/gl_circle.json")),
    ("model7", include_str!("../data/model7.json")),
    ("model11", include_str!("../data/model11.json")),
    ("model11_p1", include_str!("../data/model11_p1_zero.json")),
    ("su2", include_str!("../data/su2_identity.json")),
    ("diag_circle", include_str!("../data/diag_circle.json")),
];

/// Built-in names that differ from their file stems.
const ALIASES: &[(&str, &str)] = &[
    ("s3_circle_action", "s3"),
    ("empty_fixed_set", "empty"),
    ("model11_p1_zero", "model11_p1"),
    ("su2_identity", "su2"),
];

pub fn builtin(name: &str) -> Result<DatasetFile> {
    let text = BUILTIN
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| {
            let names: Vec<&str> = BUILTIN.iter().map(|(n, _)| *n).collect();
            Error::Data(format!("no built-in dataset {:?} (known: {})", name, names.join(", ")))
        })?;
    DatasetFile::parse(text)
}

/// A path to a readable file, or else a built-in name (or its file name).
pub fn resolve(spec: &str) -> Result<DatasetFile> {
    if Path::new(spec).is_file() {
        load_dataset(spec)
    } else {
        let stem = spec.rsplit('/').next().unwrap_or(spec).trim_end_matches(".json");
        let name = ALIASES.iter().find(|(a, _)| *a == stem).map_or(stem, |(_, n)| *n);
        builtin(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_load_and_validate() {
        for (name, _) in BUILTIN {
            builtin(name).unwrap_or_else(|e| panic!("{}: {}", name, e));
        }
        let s3 = builtin("s3").unwrap();
        let d = s3.equivariant().unwrap();
        assert_eq!(d.components.len(), 1);
        assert_eq!(d.components[0].normal[0].gamma, 1);
        assert!(builtin("empty").unwrap().equivariant().unwrap().components.is_empty());
    }

    #[test]
    fn zero_gamma_file_rejected() {
        let text = builtin_text("s3").replace("\"gamma\": 1", "\"gamma\": 0");
        let e = DatasetFile::parse(&text).unwrap_err().to_string();
        assert!(e.contains("γ ∈ ℤ∖{0}"), "{}", e);
    }

    #[test]
    fn wrong_version_rejected() {
        let text = builtin_text("s3").replace("\"schema_version\": 1", "\"schema_version\": 9");
        assert!(matches!(DatasetFile::parse(&text), Err(Error::Data(_))));
    }

    #[test]
    fn resolve_accepts_file_names() {
        assert!(resolve("s3_circle_action.json").is_ok());
        assert!(resolve("hp2_s7").is_ok());
        assert!(resolve("nonexistent").is_err());
    }

    fn builtin_text(name: &str) -> String {
        BUILTIN.iter().find(|(n, _)| *n == name).unwrap().1.to_string()
    }
}
