//! The three algorithm frontends sharing one output shape: the adaptive
//! boundary method, uniform boundary tracking, and the uniform full-set
//! scheme, plus the matched-threshold comparison.

use anyhow::{anyhow, Context, Result};
use reachtrack_core::analysis::{HausdorffCertificate, RunReport};
use reachtrack_core::dynamics::Problem;
use reachtrack_core::refine::{iterate, uniform_for_eps, error_e};
use reachtrack_core::scheme::full_euler_run_counted;
use reachtrack_core::topology::{trace, BoundaryPair};
use reachtrack_core::tracking::{track_run, PhaseTimings, StepCounters};

/// Ceiling on uniform step counts when matching a threshold by doubling.
pub const MAX_UNIFORM_N: usize = 1 << 22;
/// Ceiling on total rasterized points in a full-set run.
pub const MAX_FULL_SET_POINTS: u64 = 200_000_000;

pub struct RunOutput {
    pub report: RunReport,
    pub boundaries: Vec<BoundaryPair>,
}

/// Adaptive boundary tracking: the iterative driver over the whole ladder.
/// The reported counters are those of the final certified stage.
pub fn run_ba(problem: &Problem, eps_ladder: &[f64]) -> Result<RunOutput> {
    if eps_ladder.is_empty() {
        return Err(anyhow!("the adaptive run needs a nonempty eps_ladder"));
    }
    let outcome = iterate(problem, eps_ladder).context("adaptive run failed")?;
    let e_value = error_e(
        &outcome.delta,
        problem.rhs.lipschitz(),
        problem.rhs.bound(),
        problem.horizon,
    );
    let report = RunReport::from_iterate(problem, eps_ladder, &outcome, e_value)?;
    Ok(RunOutput {
        boundaries: outcome.run.pairs,
        report,
    })
}

/// Uniform boundary tracking at the coarsest admissible uniform
/// discretization meeting the threshold.
pub fn run_bu(problem: &Problem, eps: f64) -> Result<RunOutput> {
    let (l, p, horizon) = (
        problem.rhs.lipschitz(),
        problem.rhs.bound(),
        problem.horizon,
    );
    let delta = uniform_for_eps(l, p, horizon, eps, MAX_UNIFORM_N)?;
    let run = track_run(&problem.rhs, &problem.x0, &delta)?;
    let mut report = RunReport {
        algo: "bu".into(),
        e_value: error_e(&delta, l, p, horizon),
        delta,
        eps_ladder: vec![eps],
        counters: run.counters.clone(),
        terminal_c_r: run.terminal_c_r,
        timings: run.timings,
        hausdorff_to_exact: None,
        relative_error: None,
    };
    report.attach_exact_comparison(problem, run.pairs.last())?;
    Ok(RunOutput {
        boundaries: run.pairs,
        report,
    })
}

/// Uniform full-set recursion at the same threshold-matched discretization;
/// counters record stored set sizes and rasterized plate points per step.
pub fn run_eu(problem: &Problem, eps: f64) -> Result<RunOutput> {
    let (l, p, horizon) = (
        problem.rhs.lipschitz(),
        problem.rhs.bound(),
        problem.horizon,
    );
    let delta = uniform_for_eps(l, p, horizon, eps, MAX_UNIFORM_N)?;
    let start = std::time::Instant::now();
    let (sets, counts) =
        full_euler_run_counted(&problem.rhs, &problem.x0, &delta, Some(MAX_FULL_SET_POINTS))?;
    let raster_ms = start.elapsed().as_secs_f64() * 1e3;

    let counters: Vec<StepCounters> = sets
        .iter()
        .take(delta.n())
        .zip(counts.iter())
        .map(|(set, &c_f)| StepCounters {
            c_r: set.len() as u64,
            c_f,
        })
        .collect();
    let boundaries: Vec<BoundaryPair> = sets
        .iter()
        .map(trace)
        .collect::<reachtrack_core::Result<_>>()?;

    let mut report = RunReport {
        algo: "eu".into(),
        e_value: error_e(&delta, l, p, horizon),
        delta,
        eps_ladder: vec![eps],
        terminal_c_r: sets.last().map(|s| s.len() as u64).unwrap_or(0),
        counters,
        timings: PhaseTimings {
            raster_ms,
            ..Default::default()
        },
        hausdorff_to_exact: None,
        relative_error: None,
    };
    report.attach_exact_comparison(problem, boundaries.last())?;
    Ok(RunOutput { boundaries, report })
}

pub fn run_algo(problem: &Problem, algo: &str, eps_ladder: &[f64]) -> Result<RunOutput> {
    match algo {
        "ba" => run_ba(problem, eps_ladder),
        "bu" | "eu" => {
            let eps = *eps_ladder
                .last()
                .ok_or_else(|| anyhow!("{algo} needs a threshold; pass --eps-ladder"))?;
            if algo == "bu" {
                run_bu(problem, eps)
            } else {
                run_eu(problem, eps)
            }
        }
        other => Err(anyhow!("unknown algorithm '{other}' (expected ba, bu or eu)")),
    }
}

pub struct CompareEntry {
    pub algo: String,
    pub outcome: Result<RunOutput>,
}

pub struct Comparison {
    pub eps: f64,
    pub entries: Vec<CompareEntry>,
}

impl Comparison {
    pub fn total_c_f(&self, algo: &str) -> Option<u64> {
        self.entries
            .iter()
            .find(|e| e.algo == algo)
            .and_then(|e| e.outcome.as_ref().ok())
            .map(|o| o.report.counters.iter().map(|c| c.c_f).sum())
    }

    /// Whether the completed subset of (ba, bu, eu) is ordered by total
    /// rasterized points.
    pub fn ordering_holds(&self) -> bool {
        let chain: Vec<u64> = ["ba", "bu", "eu"]
            .iter()
            .filter_map(|a| self.total_c_f(a))
            .collect();
        chain.windows(2).all(|w| w[0] <= w[1])
    }
}

/// Runs the requested algorithms at one matched threshold.
pub fn compare(problem: &Problem, algos: &[String], eps: f64) -> Comparison {
    let entries = algos
        .iter()
        .map(|algo| CompareEntry {
            algo: algo.clone(),
            outcome: run_algo(problem, algo, &[eps]),
        })
        .collect();
    Comparison { eps, entries }
}

/// Summary line used by the exact-solution comparison in reports.
pub fn certificate_upper(cert: &Option<HausdorffCertificate>) -> Option<f64> {
    cert.as_ref().map(|c| c.upper())
}
