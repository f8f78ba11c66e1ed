//! The JSON problem bundle, `--set` overrides and diagnostics for malformed
//! input.

use std::path::Path;
use std::sync::Arc;

use glap::fixed_point::FixedPointConfig;
use glap::mesh::MeshSpec;
use glap::solver::{DiscreteProblem, SolverOptions, DEFAULT_EPSILON};
use glap::source::SourceTerm;
use glap::young::YoungFunction;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    pub mesh: MeshSpec,
    pub young: YoungFunction,
    pub source: SourceTerm,
    #[serde(default)]
    pub lambda: f64,
    #[serde(rename = "L", default)]
    pub l: f64,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub fixed_point: FixedPointConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub epsilon: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub escape_bound: f64,
    pub enforce_positive: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        let o = SolverOptions::default();
        SolverSection {
            epsilon: DEFAULT_EPSILON,
            tol: o.tol,
            max_iter: o.max_iter,
            escape_bound: o.escape_bound,
            enforce_positive: o.enforce_positive,
        }
    }
}

impl SolverSection {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            escape_bound: self.escape_bound,
            enforce_positive: self.enforce_positive,
        }
    }
}

impl Problem {
    pub fn discrete(&self) -> Result<DiscreteProblem, CliError> {
        let mesh = self.mesh.build().map_err(|e| CliError::Invalid(format!("mesh: {e}")))?;
        let dp = DiscreteProblem::new(Arc::new(mesh), self.young.clone(), self.source.clone())
            .with_lambda(self.lambda)
            .with_l(self.l)
            .with_epsilon(self.solver.epsilon);
        dp.validate().map_err(|e| CliError::Invalid(e.to_string()))?;
        self.fixed_point
            .validate()
            .map_err(|e| CliError::Invalid(format!("fixed_point: {e}")))?;
        Ok(dp)
    }
}

/// Reads a JSON file, reporting syntax errors with line and column.
pub fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        CliError::Invalid(format!(
            "{}: malformed JSON at line {}, column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })
}

/// Deserializes with the offending field path in the error message.
pub fn from_value<T: serde::de::DeserializeOwned>(v: Value, what: &str) -> Result<T, CliError> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let path = e.path().to_string();
        CliError::Invalid(format!("{what}: field `{path}`: {}", e.inner()))
    })
}

/// Parses `1/512`, `0.01` or `1e-3`.
pub fn parse_h(s: &str) -> Result<f64, String> {
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| format!("bad numerator in `{s}`"))?;
            let b: f64 = b.trim().parse().map_err(|_| format!("bad denominator in `{s}`"))?;
            a / b
        }
        None => s.trim().parse().map_err(|_| format!("not a number: `{s}`"))?,
    };
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("mesh size must be positive, got `{s}`"))
    }
}

/// Applies `a.b.c=value`; the value is read as JSON when it parses, else as a
/// string. Missing intermediate objects are created.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Invalid(format!("override `{assignment}` is not key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Invalid(format!("empty key in override `{path}`")));
    }
    let mut node = root;
    for key in &keys[..keys.len() - 1] {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| CliError::Invalid(format!("override `{path}`: `{key}` is not inside an object")))?;
        node = obj
            .entry(key.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    let obj = node
        .as_object_mut()
        .ok_or_else(|| CliError::Invalid(format!("override `{path}` does not point into an object")))?;
    obj.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

pub fn load_problem(path: &Path, overrides: &[String], h: Option<f64>) -> Result<Problem, CliError> {
    let mut v = read_json(path)?;
    for o in overrides {
        apply_override(&mut v, o)?;
    }
    if let Some(h) = h {
        apply_override(&mut v, &format!("mesh.h={h:e}"))?;
    }
    from_value(v, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn fractions_and_overrides() {
        assert_eq!(parse_h("1/512").unwrap(), 1.0 / 512.0);
        assert_eq!(parse_h("0.25").unwrap(), 0.25);
        assert!(parse_h("-1").is_err());
        assert!(parse_h("1/0").is_err());

        let mut v = json!({"solver": {"tol": 1e-8}});
        apply_override(&mut v, "solver.epsilon=1e-7").unwrap();
        apply_override(&mut v, "fixed_point.amplitudes=[1,2]").unwrap();
        apply_override(&mut v, "note=hello").unwrap();
        assert_eq!(v["solver"]["epsilon"], json!(1e-7));
        assert_eq!(v["fixed_point"]["amplitudes"], json!([1, 2]));
        assert_eq!(v["note"], json!("hello"));
        assert!(apply_override(&mut v, "solver.tol.x=1").is_err());
        assert!(apply_override(&mut v, "novalue").is_err());
    }

    #[test]
    fn unknown_fields_name_their_path() {
        let v = json!({
            "mesh": {"kind": "interval", "a": 0, "b": 1, "h": 0.1},
            "young": {"kind": "power", "params": {"p": 2}},
            "source": {"f": {"kind": "power", "q": 4}},
            "solver": {"epsilon": 1e-6, "tolerance": 1}
        });
        let err = from_value::<Problem>(v, "bundle").unwrap_err().to_string();
        assert!(err.contains("solver"), "{err}");
    }
}
