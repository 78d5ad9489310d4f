//! Problem configuration files: a versioned, human-readable TOML schema that
//! either names a built-in system or spells out the dynamics row by row.
//! Validation returns the full list of diagnostics, each naming the offending
//! field.

use reachtrack_core::analysis::builtin_problem;
use reachtrack_core::dynamics::{AffineForm, AffineIntervalBoxMap, Problem, RhsModel};
use reachtrack_core::grid::IntervalBox;
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub version: u32,
    /// Name of a built-in problem (`simp7` or `bp`); the explicit fields
    /// below are then optional and `L` selects the simp7 parameter.
    pub builtin: Option<String>,
    pub name: Option<String>,
    pub dim: Option<usize>,
    #[serde(rename = "T")]
    pub horizon: Option<f64>,
    #[serde(rename = "L")]
    pub lipschitz: Option<f64>,
    #[serde(rename = "P")]
    pub bound: Option<f64>,
    pub d_x: Option<usize>,
    pub d_u: Option<usize>,
    pub x0: Option<X0Spec>,
    pub rhs: Option<RhsSpec>,
    pub eps_ladder: Option<Vec<f64>>,
    pub out_dir: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct X0Spec {
    #[serde(rename = "type")]
    pub kind: String,
    pub point: Option<Vec<f64>>,
    pub lo: Option<Vec<f64>>,
    pub hi: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhsSpec {
    #[serde(rename = "type")]
    pub kind: String,
    pub rows: Vec<RowSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowSpec {
    pub lower: FormSpec,
    pub upper: FormSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormSpec {
    pub coeffs: Vec<f64>,
    pub offset: f64,
}

/// A fully validated configuration ready to run.
#[derive(Debug)]
pub struct LoadedConfig {
    pub problem: Problem,
    pub eps_ladder: Vec<f64>,
    pub out_dir: Option<PathBuf>,
    pub hash: String,
}

/// FNV-1a over the raw config bytes; stable across runs of the same file.
pub fn config_hash(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

pub fn load_config(path: &Path) -> Result<LoadedConfig, Vec<String>> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| vec![format!("cannot read config {}: {e}", path.display())])?;
    let parsed: ConfigFile =
        toml::from_str(&raw).map_err(|e| vec![format!("config parse error: {e}")])?;
    let hash = config_hash(raw.as_bytes());

    let mut diags = Vec::new();
    if parsed.version != 1 {
        diags.push(format!("version: unsupported schema version {}", parsed.version));
    }

    let problem = if let Some(builtin) = &parsed.builtin {
        match builtin_problem(builtin, parsed.lipschitz) {
            Ok(p) => Some(p),
            Err(e) => {
                diags.push(format!("builtin: {e}"));
                None
            }
        }
    } else {
        build_explicit(&parsed, &mut diags)
    };

    let eps_ladder = parsed.eps_ladder.clone().unwrap_or_default();
    if eps_ladder.iter().any(|&e| !(e.is_finite() && e > 0.0)) {
        diags.push("eps_ladder: thresholds must be positive".into());
    }
    for w in eps_ladder.windows(2) {
        if !(w[0] > w[1]) {
            diags.push(format!(
                "eps_ladder: must strictly decrease, found {} then {}",
                w[0], w[1]
            ));
        }
    }

    match (problem, diags.is_empty()) {
        (Some(problem), true) => Ok(LoadedConfig {
            problem,
            eps_ladder,
            out_dir: parsed.out_dir.map(PathBuf::from),
            hash,
        }),
        (_, _) => Err(diags),
    }
}

fn build_explicit(cfg: &ConfigFile, diags: &mut Vec<String>) -> Option<Problem> {
    let mut ok = true;
    let mut require = |field: &str, present: bool| {
        if !present {
            diags.push(format!("{field}: required when no builtin is named"));
            ok = false;
        }
    };
    require("name", cfg.name.is_some());
    require("dim", cfg.dim.is_some());
    require("T", cfg.horizon.is_some());
    require("L", cfg.lipschitz.is_some());
    require("P", cfg.bound.is_some());
    require("d_x", cfg.d_x.is_some());
    require("d_u", cfg.d_u.is_some());
    require("x0", cfg.x0.is_some());
    require("rhs", cfg.rhs.is_some());
    if !ok {
        return None;
    }

    let dim = cfg.dim.unwrap();
    let l = cfg.lipschitz.unwrap();
    let p = cfg.bound.unwrap();
    let horizon = cfg.horizon.unwrap();
    if !(l > 0.0) {
        diags.push(format!("L: must be positive, got {l}"));
    }
    if !(p > 0.0) {
        diags.push(format!("P: must be positive, got {p}"));
    }
    if !(horizon > 0.0) {
        diags.push(format!("T: must be positive, got {horizon}"));
    }
    if dim < 2 || (dim - 1).min(cfg.d_x.unwrap()) < 1 {
        diags.push("d_x: min(dim - 1, d_x) must be >= 1".into());
    }

    let rhs_spec = cfg.rhs.as_ref().unwrap();
    if rhs_spec.kind != "affine_interval_box" {
        diags.push(format!("rhs.type: unknown kind '{}'", rhs_spec.kind));
    }
    if rhs_spec.rows.len() != dim {
        diags.push(format!(
            "rhs.rows: expected {dim} rows, found {}",
            rhs_spec.rows.len()
        ));
    }
    for (i, row) in rhs_spec.rows.iter().enumerate() {
        if row.lower.coeffs.len() != dim || row.upper.coeffs.len() != dim {
            diags.push(format!("rhs.rows[{i}]: coefficient length must be {dim}"));
        }
    }

    let x0_spec = cfg.x0.as_ref().unwrap();
    let x0 = match x0_spec.kind.as_str() {
        "point" => match &x0_spec.point {
            Some(pt) if pt.len() == dim => Some(IntervalBox::point(pt)),
            Some(pt) => {
                diags.push(format!("x0.point: expected {dim} entries, found {}", pt.len()));
                None
            }
            None => {
                diags.push("x0.point: required for type \"point\"".into());
                None
            }
        },
        "box" => match (&x0_spec.lo, &x0_spec.hi) {
            (Some(lo), Some(hi)) => match IntervalBox::new(lo.clone(), hi.clone()) {
                Ok(b) => Some(b),
                Err(e) => {
                    diags.push(format!("x0: {e}"));
                    None
                }
            },
            _ => {
                diags.push("x0.lo / x0.hi: required for type \"box\"".into());
                None
            }
        },
        other => {
            diags.push(format!("x0.type: unknown kind '{other}'"));
            None
        }
    };

    if !diags.is_empty() {
        return None;
    }

    let rows = rhs_spec
        .rows
        .iter()
        .map(|r| {
            (
                AffineForm::new(r.lower.coeffs.clone(), r.lower.offset),
                AffineForm::new(r.upper.coeffs.clone(), r.upper.offset),
            )
        })
        .collect();
    let map = match AffineIntervalBoxMap::new(rows) {
        Ok(m) => m,
        Err(e) => {
            diags.push(format!("rhs: {e}"));
            return None;
        }
    };
    let rhs = match RhsModel::new(map, l, p, cfg.d_x.unwrap(), cfg.d_u.unwrap()) {
        Ok(m) => m,
        Err(e) => {
            diags.push(format!("rhs: {e}"));
            return None;
        }
    };
    match Problem::new(cfg.name.clone().unwrap(), rhs, x0?, horizon) {
        Ok(p) => Some(p),
        Err(e) => {
            diags.push(format!("problem: {e}"));
            None
        }
    }
}
