//! Static SVG figures: superimposed boundary point sets at the sampling times
//! `j/16`, and the step profiles of a discretization. Hand-rolled writer;
//! coordinates are emitted with fixed precision so identical runs produce
//! identical files.

use anyhow::{anyhow, Result};
use reachtrack_core::scheme::Discretization;
use reachtrack_core::topology::BoundaryPair;

const W: f64 = 720.0;
const H: f64 = 720.0;
const MARGIN: f64 = 40.0;

fn color(idx: usize, total: usize) -> String {
    let hue = 240.0 - 240.0 * idx as f64 / total.max(1) as f64;
    format!("hsl({hue:.0},70%,45%)")
}

fn fmt(v: f64) -> String {
    format!("{v:.4}")
}

/// Indices of the nodes nearest to the times `j/16 * T`, deduplicated and in
/// increasing order.
pub fn sample_indices(delta: &Discretization) -> Vec<usize> {
    let t = delta.t();
    let horizon = delta.horizon();
    let mut picks = Vec::new();
    for j in 0..=16 {
        let target = horizon * j as f64 / 16.0;
        let nearest = (0..t.len())
            .min_by(|&a, &b| {
                (t[a] - target)
                    .abs()
                    .partial_cmp(&(t[b] - target).abs())
                    .unwrap()
            })
            .unwrap();
        if picks.last() != Some(&nearest) {
            picks.push(nearest);
        }
    }
    picks
}

/// Superimposed layer-0 point sets at the sampled times; planar problems only.
pub fn boundary_sets_svg(boundaries: &[BoundaryPair], delta: &Discretization) -> Result<String> {
    let dim = boundaries
        .first()
        .map(|p| p.dim())
        .ok_or_else(|| anyhow!("no boundary data to plot"))?;
    if dim != 2 {
        return Err(anyhow!(
            "set plots are unsupported for dimension {dim}; only planar problems can be drawn"
        ));
    }
    let picks = sample_indices(delta);

    let mut pts: Vec<(usize, f64, f64, f64)> = Vec::new(); // (pick index, x, y, rho)
    let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
    for (pi, &k) in picks.iter().enumerate() {
        let pair = &boundaries[k];
        let rho = pair.rho().get();
        for p in pair.d0().sorted_points() {
            let x = rho * p.coords()[0] as f64;
            let y = rho * p.coords()[1] as f64;
            xmin = xmin.min(x);
            xmax = xmax.max(x);
            ymin = ymin.min(y);
            ymax = ymax.max(y);
            pts.push((pi, x, y, rho));
        }
    }
    let span_x = (xmax - xmin).max(1e-9);
    let span_y = (ymax - ymin).max(1e-9);
    let scale = ((W - 2.0 * MARGIN) / span_x).min((H - 2.0 * MARGIN) / span_y);
    let sx = |x: f64| MARGIN + (x - xmin) * scale;
    let sy = |y: f64| H - MARGIN - (y - ymin) * scale;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    for (pi, x, y, rho) in &pts {
        let r = (rho * scale * 0.45).max(0.6);
        svg.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>\n",
            fmt(sx(*x) - r),
            fmt(sy(*y) - r),
            fmt(2.0 * r),
            fmt(2.0 * r),
            color(*pi, picks.len())
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"13\" fill=\"black\">boundary points at t = j/16 (blue early, red late)</text>\n",
        fmt(MARGIN),
        fmt(H - 12.0)
    ));
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Step profiles `(t_k, rho_k)` and `(t_k, h_k)` on a log axis; any dimension.
pub fn profile_svg(delta: &Discretization) -> String {
    let t = delta.t();
    let horizon = delta.horizon().max(1e-12);
    // staircase samples: rho over nodes, h over steps
    let rho_steps: Vec<(f64, f64, f64)> = (0..=delta.n())
        .map(|k| {
            let t0 = if k == 0 { 0.0 } else { t[k - 1] };
            (t0, t[k], delta.rho()[k])
        })
        .collect();
    let h_steps: Vec<(f64, f64, f64)> = (0..delta.n())
        .map(|k| (t[k], t[k + 1], delta.h()[k]))
        .collect();

    let values: Vec<f64> = rho_steps
        .iter()
        .chain(h_steps.iter())
        .map(|s| s.2)
        .collect();
    let vmin = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let vmax = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (log_lo, log_hi) = (vmin.log10().floor() - 0.2, vmax.log10().ceil() + 0.2);
    let sx = |x: f64| MARGIN + (x / horizon) * (W - 2.0 * MARGIN);
    let sy = |v: f64| {
        let frac = (v.log10() - log_lo) / (log_hi - log_lo).max(1e-9);
        H - MARGIN - frac * (H - 2.0 * MARGIN)
    };

    let staircase = |steps: &[(f64, f64, f64)]| -> String {
        let mut points = String::new();
        for (t0, t1, v) in steps {
            points.push_str(&format!(
                "{},{} {},{} ",
                fmt(sx(*t0)),
                fmt(sy(*v)),
                fmt(sx(*t1)),
                fmt(sy(*v))
            ));
        }
        points.trim_end().to_string()
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<polyline fill=\"none\" stroke=\"crimson\" stroke-width=\"1.5\" points=\"{}\"/>\n",
        staircase(&rho_steps)
    ));
    svg.push_str(&format!(
        "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"{}\"/>\n",
        staircase(&h_steps)
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"13\" fill=\"crimson\">rho(t)</text>\n",
        fmt(W - MARGIN - 60.0),
        fmt(MARGIN)
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"13\" fill=\"steelblue\">h(t)</text>\n",
        fmt(W - MARGIN - 60.0),
        fmt(MARGIN + 18.0)
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"13\" fill=\"black\">step profiles over [0, T], log scale</text>\n",
        fmt(MARGIN),
        fmt(H - 12.0)
    ));
    svg.push_str("</svg>\n");
    svg
}
