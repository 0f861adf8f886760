use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

pub const SCHEMA: &str = include_str!("../schema/run-config.schema.json");

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    #[serde(rename = "L")]
    pub side_length: f64,
    #[serde(rename = "N")]
    pub samples: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub params: Map<String, Value>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub j_min: i32,
    pub j_max: i32,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub substeps: Option<usize>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exponents {
    pub p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    pub a: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regularizer: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub matrix: Vec<f64>,
    pub grid: GridSpec,
    pub symbol: SymbolSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponents: Option<Exponents>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<WeightSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn schema() -> Value {
    serde_json::from_str(SCHEMA).expect("bundled schema is valid JSON")
}

/// Checks `raw` against the schema, then deserialises it and applies the cross-field rules.
pub fn parse(raw: &str) -> Result<RunConfig, ConfigError> {
    let value: Value = serde_json::from_str(raw).map_err(|e| ConfigError(format!("config is not valid JSON: {e}")))?;
    let validator = jsonschema::validator_for(&schema()).map_err(|e| ConfigError(format!("schema: {e}")))?;
    let errors: Vec<String> = validator.iter_errors(&value).map(|e| e.to_string()).collect();
    if !errors.is_empty() {
        return Err(ConfigError(format!("config does not match the schema: {}", errors.join("; "))));
    }
    let cfg: RunConfig = serde_json::from_value(value).map_err(|e| ConfigError(format!("config: {e}")))?;
    let n = cfg.grid.n;
    if cfg.matrix.len() != n * n {
        return Err(ConfigError(format!(
            "matrix has {} entries but grid.n = {n} needs {}",
            cfg.matrix.len(),
            n * n
        )));
    }
    if let Some(w) = cfg.window {
        if w.j_min > w.j_max {
            return Err(ConfigError(format!("window j_min = {} exceeds j_max = {}", w.j_min, w.j_max)));
        }
    }
    if let Some(points) = &cfg.points {
        if let Some(bad) = points.iter().find(|p| p.len() != n) {
            return Err(ConfigError(format!("point {bad:?} does not have {n} coordinates")));
        }
    }
    Ok(cfg)
}

pub fn load(path: &Path) -> Result<(RunConfig, String), ConfigError> {
    let raw = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    Ok((parse(&raw)?, raw))
}

/// SHA-256 of the canonical (sorted-key, compact) JSON form.
pub fn hash(cfg: &RunConfig) -> String {
    let v = serde_json::to_value(cfg).expect("config serialises");
    let canonical = serde_json::to_string(&v).expect("value serialises");
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"matrix":[1,0,0,2],"grid":{"n":2,"L":16,"N":64},"symbol":{"id":"heat"}}"#;

    #[test]
    fn minimal_config_parses() {
        let cfg = parse(MINIMAL).unwrap();
        assert_eq!(cfg.grid.samples, 64);
        assert!(cfg.b.is_none());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let raw = MINIMAL.replace("\"symbol\"", "\"extra\":1,\"symbol\"");
        assert!(parse(&raw).is_err());
        let raw = MINIMAL.replace("\"N\":64", "\"N\":64,\"M\":3");
        assert!(parse(&raw).is_err());
    }

    #[test]
    fn schema_violations_are_rejected() {
        assert!(parse(&MINIMAL.replace("\"N\":64", "\"N\":63")).is_err());
        assert!(parse(&MINIMAL.replace("heat", "wavelet")).is_err());
        assert!(parse(&MINIMAL.replace("[1,0,0,2]", "[1,0,2]")).is_err());
    }

    #[test]
    fn hash_ignores_formatting() {
        let a = parse(MINIMAL).unwrap();
        let b = parse(&MINIMAL.replace(',', " , ")).unwrap();
        assert_eq!(hash(&a), hash(&b));
    }

    #[test]
    fn schema_lists_every_field() {
        let s = schema();
        let props = s["properties"].as_object().unwrap();
        for key in ["matrix", "grid", "symbol", "b", "window", "exponents", "weight", "seed", "output", "points", "count"] {
            assert!(props.contains_key(key), "{key}");
        }
        assert_eq!(props.len(), 11);
    }
}
