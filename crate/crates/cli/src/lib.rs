//! Library surface of the command-line frontend, split out so integration
//! tests can drive the commands in-process.

pub mod artifacts;
pub mod config;
pub mod runners;
pub mod svg;

use anyhow::{anyhow, Context, Result};
use reachtrack_core::grid::{DigitalSet, GridPoint, Resolution};
use reachtrack_core::scheme::Discretization;
use reachtrack_core::topology::BoundaryPair;
use std::path::Path;

/// Reads run artifacts back into memory for plotting.
pub fn load_artifacts(dir: &Path) -> Result<(Vec<BoundaryPair>, Discretization)> {
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.join("report.json"))
            .with_context(|| format!("cannot read {}", dir.join("report.json").display()))?,
    )?;
    let vecs = |key: &str| -> Result<Vec<f64>> {
        report["delta"][key]
            .as_array()
            .ok_or_else(|| anyhow!("report.json: missing delta.{key}"))?
            .iter()
            .map(|v| v.as_f64().ok_or_else(|| anyhow!("delta.{key}: not a number")))
            .collect()
    };
    let delta = Discretization::from_parts(vecs("h")?, vecs("t")?, vecs("rho")?)?;

    let csv = std::fs::read_to_string(dir.join("boundary.csv"))
        .with_context(|| format!("cannot read {}", dir.join("boundary.csv").display()))?;
    let mut lines = csv.lines();
    let header = lines.next().ok_or_else(|| anyhow!("boundary.csv is empty"))?;
    let dim = header.split(',').count() - 4;
    if dim == 0 {
        return Err(anyhow!("boundary.csv: no coordinate columns"));
    }

    let mut layers: Vec<(DigitalSet, DigitalSet)> = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 4 {
            return Err(anyhow!("boundary.csv line {}: wrong field count", ln + 2));
        }
        let k: usize = fields[0].parse()?;
        let rho: f64 = fields[2].parse()?;
        let layer: u8 = fields[3].parse()?;
        while layers.len() <= k {
            let r = Resolution::new(rho)?;
            layers.push((DigitalSet::new(r, dim), DigitalSet::new(r, dim)));
        }
        let coords: Vec<i64> = fields[4..]
            .iter()
            .map(|s| -> Result<i64> { Ok((s.parse::<f64>()? / rho).round() as i64) })
            .collect::<Result<_>>()?;
        let point = GridPoint::new(&coords);
        match layer {
            0 => layers[k].0.insert(point),
            1 => layers[k].1.insert(point),
            other => return Err(anyhow!("boundary.csv line {}: bad layer {other}", ln + 2)),
        }
    }
    let pairs = layers
        .into_iter()
        .map(|(d0, d1)| BoundaryPair::new(d0, d1).map_err(Into::into))
        .collect::<Result<Vec<_>>>()?;
    Ok((pairs, delta))
}

/// Renders the figures for the artifacts in `dir`: the step-profile plot
/// always, the set plot only for planar problems.
pub fn plot_artifacts(dir: &Path, require_sets: bool) -> Result<Vec<String>> {
    let (pairs, delta) = load_artifacts(dir)?;
    let mut written = Vec::new();

    let profile = svg::profile_svg(&delta);
    artifacts::write_atomic(&dir.join("profile.svg"), profile.as_bytes())?;
    written.push("profile.svg".into());

    match svg::boundary_sets_svg(&pairs, &delta) {
        Ok(sets) => {
            artifacts::write_atomic(&dir.join("sets.svg"), sets.as_bytes())?;
            written.push("sets.svg".into());
        }
        Err(e) if require_sets => return Err(e),
        Err(e) => eprintln!("skipping set plot: {e}"),
    }
    Ok(written)
}
