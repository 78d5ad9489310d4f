//! On-disk artifacts of a run: the per-step boundary CSV and the report JSON.
//! Outputs are deterministic for identical configs: points are written in
//! lexicographic index order and floats in shortest round-trip decimal.

use crate::runners::RunOutput;
use anyhow::{Context, Result};
use reachtrack_core::scheme::Discretization;
use reachtrack_core::topology::BoundaryPair;
use serde_json::{json, Map, Value};
use std::io::Write;
use std::path::Path;

/// Boundary CSV schema: `k,t,rho,layer,x1,...,xd` with embedded positions.
pub fn boundary_csv(boundaries: &[BoundaryPair], delta: &Discretization) -> String {
    let dim = boundaries.first().map(|p| p.dim()).unwrap_or(0);
    let mut out = String::from("k,t,rho,layer");
    for i in 1..=dim {
        out.push_str(&format!(",x{i}"));
    }
    out.push('\n');
    for (k, pair) in boundaries.iter().enumerate() {
        let t = delta.t()[k];
        let rho = pair.rho();
        for (layer, set) in [(0u8, pair.d0()), (1u8, pair.d1())] {
            for point in set.sorted_points() {
                out.push_str(&format!("{k},{t},{},{layer}", rho.get()));
                for &c in point.coords() {
                    out.push_str(&format!(",{}", rho.get() * c as f64));
                }
                out.push('\n');
            }
        }
    }
    out
}

pub fn report_json(output: &RunOutput, config_hash: &str) -> Value {
    let r = &output.report;
    let mut root = Map::new();
    root.insert("config_hash".into(), json!(config_hash));
    root.insert("algo".into(), json!(r.algo));
    root.insert(
        "delta".into(),
        json!({
            "h": r.delta.h(),
            "t": r.delta.t(),
            "rho": r.delta.rho(),
        }),
    );
    root.insert("E".into(), json!(r.e_value));
    root.insert("eps_ladder".into(), json!(r.eps_ladder));
    root.insert(
        "counters".into(),
        json!({
            "cR": r.counters.iter().map(|c| c.c_r).collect::<Vec<_>>(),
            "cF": r.counters.iter().map(|c| c.c_f).collect::<Vec<_>>(),
            "terminal_cR": r.terminal_c_r,
        }),
    );
    root.insert(
        "timings_ms".into(),
        json!({
            "raster": r.timings.raster_ms,
            "filter": r.timings.filter_ms,
            "restrict": r.timings.restrict_ms,
            "refine": r.timings.refine_ms,
        }),
    );
    if let Some(cert) = &r.hausdorff_to_exact {
        root.insert(
            "hausdorff_to_exact".into(),
            json!({"value": cert.value, "overestimate": cert.overestimate}),
        );
    }
    if let Some(rel) = r.relative_error {
        root.insert("relative_error".into(), json!(rel));
    }
    Value::Object(root)
}

pub fn write_run_artifacts(
    out_dir: &Path,
    output: &RunOutput,
    config_hash: &str,
) -> Result<()> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create output directory {}", out_dir.display()))?;
    let csv = boundary_csv(&output.boundaries, &output.report.delta);
    write_atomic(&out_dir.join("boundary.csv"), csv.as_bytes())?;
    let report = report_json(output, config_hash);
    write_atomic(
        &out_dir.join("report.json"),
        (serde_json::to_string_pretty(&report)? + "\n").as_bytes(),
    )?;
    Ok(())
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp)
            .with_context(|| format!("cannot create {}", tmp.display()))?;
        f.write_all(bytes)?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}
