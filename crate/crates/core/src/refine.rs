//! The a-priori error functional, the heuristic cost estimator, the
//! subdivision rule with its local increments, the greedy refinement loop and
//! the iterative driver alternating tracked runs with refinement.

use crate::dynamics::{sigma_of, Problem};
use crate::error::{Error, Result};
use crate::grid::Resolution;
use crate::scheme::{validate_admissible, Discretization};
use crate::tracking::{track_run, PhaseTimings, StepCounters, TrackRun, Weight};
use std::time::Instant;

/// Parameters steering refinement: the threshold ladder and the problem
/// constants entering the error and cost functionals.
#[derive(Clone, Debug)]
pub struct RefinementConfig {
    pub eps_ladder: Vec<f64>,
    pub lipschitz: f64,
    pub bound: f64,
    pub horizon: f64,
    pub d_r: usize,
    pub d_f: usize,
}

impl RefinementConfig {
    pub fn new(
        eps_ladder: Vec<f64>,
        lipschitz: f64,
        bound: f64,
        horizon: f64,
        d_r: usize,
        d_f: usize,
    ) -> Result<Self> {
        if eps_ladder.iter().any(|&e| !(e.is_finite() && e > 0.0)) {
            return Err(Error::InvalidLadder("thresholds must be positive".into()));
        }
        for w in eps_ladder.windows(2) {
            if !(w[0] > w[1]) {
                return Err(Error::InvalidLadder(format!(
                    "thresholds must strictly decrease: {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if d_r < 1 {
            return Err(Error::InvalidModel("d_R must be >= 1".into()));
        }
        Ok(RefinementConfig {
            eps_ladder,
            lipschitz,
            bound,
            horizon,
            d_r,
            d_f,
        })
    }

    pub fn from_problem(problem: &Problem, eps_ladder: Vec<f64>) -> Result<Self> {
        RefinementConfig::new(
            eps_ladder,
            problem.rhs.lipschitz(),
            problem.rhs.bound(),
            problem.horizon,
            problem.rhs.d_r(),
            problem.rhs.d_f(),
        )
    }
}

/// One summand of the error bound for `k >= 1`; `chi` is the extra half-mesh
/// term charged when the step coarsens the grid.
fn e_term(l: f64, p: f64, horizon: f64, t_k: f64, h_k: f64, rho_prev: f64, chi: f64) -> f64 {
    let lh = l * h_k;
    ((l * (horizon - t_k)).exp())
        * (((lh).exp_m1()) * (p * h_k + (1.0 + lh) * (1.0 + lh) / lh * rho_prev / 2.0) + chi)
}

fn chi_of(rho_prev: f64, rho_k: f64) -> f64 {
    if rho_prev < rho_k {
        rho_k / 2.0
    } else {
        0.0
    }
}

/// A-priori Hausdorff error bound of a discretization at the final time.
pub fn error_e(delta: &Discretization, lipschitz: f64, bound: f64, horizon: f64) -> f64 {
    let (h, t, rho) = (delta.h(), delta.t(), delta.rho());
    let mut e = rho[0] / 2.0 * (lipschitz * horizon).exp();
    for k in 1..=delta.n() {
        e += e_term(
            lipschitz,
            bound,
            horizon,
            t[k],
            h[k - 1],
            rho[k - 1],
            chi_of(rho[k - 1], rho[k]),
        );
    }
    e
}

/// One summand of the cost estimator: the predicted number of grid points
/// rasterized in the step from node `k`.
fn c_term(
    v: &dyn Weight,
    l: f64,
    d_r: i32,
    d_f: i32,
    t_k: f64,
    h_next: f64,
    rho_k: f64,
    rho_next: f64,
) -> Result<f64> {
    let sigma = sigma_of(l, h_next, rho_k)?;
    Ok(4.0 * v.value(t_k)? * h_next.powi(d_f) * sigma
        / (rho_k.powi(d_r) * rho_k.min(rho_next).powi(d_f + 1)))
}

/// Heuristic computational cost of a discretization under the weight `v`.
pub fn cost_c(
    delta: &Discretization,
    v: &dyn Weight,
    d_r: usize,
    d_f: usize,
    lipschitz: f64,
) -> Result<f64> {
    let (h, t, rho) = (delta.h(), delta.t(), delta.rho());
    let mut c = 0.0;
    for k in 0..delta.n() {
        c += c_term(
            v,
            lipschitz,
            d_r as i32,
            d_f as i32,
            t[k],
            h[k],
            rho[k],
            rho[k + 1],
        )?;
    }
    Ok(c)
}

/// The subdivision rule: `j = 0` quarters the initial mesh only; `j >= 1`
/// halves step `j`, inserts the midpoint node, and replaces its mesh entry by
/// two quartered ones. Existing node values are kept verbatim so repeated
/// subdivision does not accumulate rounding drift.
pub fn subdivide(delta: &Discretization, j: usize) -> Result<Discretization> {
    let n = delta.n();
    if j > n {
        return Err(Error::Domain(format!("subdivision index {j} out of [0, {n}]")));
    }
    let (mut h, mut t, mut rho) = (delta.h().to_vec(), delta.t().to_vec(), delta.rho().to_vec());
    if j == 0 {
        rho[0] /= 4.0;
    } else {
        let half = h[j - 1] / 2.0;
        h[j - 1] = half;
        h.insert(j - 1, half);
        t.insert(j, t[j] - half);
        let quarter = rho[j] / 4.0;
        rho[j] = quarter;
        rho.insert(j, quarter);
    }
    Discretization::from_parts(h, t, rho)
}

/// Local error increment of subdividing at `j`: only the summands with
/// indices `j-1..=j+2` move, so the difference is assembled from those terms
/// alone and matches the global recomputation to machine precision.
pub fn delta_e(
    delta: &Discretization,
    j: usize,
    lipschitz: f64,
    bound: f64,
    horizon: f64,
) -> Result<f64> {
    let n = delta.n();
    if j > n {
        return Err(Error::Domain(format!("index {j} out of [0, {n}]")));
    }
    let (h, t, rho) = (delta.h(), delta.t(), delta.rho());
    let (l, p) = (lipschitz, bound);
    if j == 0 {
        let e0_old = rho[0] / 2.0 * (l * horizon).exp();
        let e0_new = rho[0] / 8.0 * (l * horizon).exp();
        let e1_old = e_term(l, p, horizon, t[1], h[0], rho[0], chi_of(rho[0], rho[1]));
        let e1_new = e_term(l, p, horizon, t[1], h[0], rho[0] / 4.0, chi_of(rho[0] / 4.0, rho[1]));
        return Ok(e0_new + e1_new - e0_old - e1_old);
    }
    let (h_j, t_j) = (h[j - 1], t[j]);
    let (rho_prev, rho_j) = (rho[j - 1], rho[j]);
    let quarter = rho_j / 4.0;

    let new_j = e_term(
        l,
        p,
        horizon,
        t_j - h_j / 2.0,
        h_j / 2.0,
        rho_prev,
        chi_of(rho_prev, quarter),
    );
    // the second half-step never coarsens: both new meshes equal rho_j / 4
    let new_j1 = e_term(l, p, horizon, t_j, h_j / 2.0, quarter, 0.0);
    let old_j = e_term(l, p, horizon, t_j, h_j, rho_prev, chi_of(rho_prev, rho_j));
    if j < n {
        let new_j2 = e_term(
            l,
            p,
            horizon,
            t[j + 1],
            h[j],
            quarter,
            chi_of(quarter, rho[j + 1]),
        );
        let old_j1 = e_term(l, p, horizon, t[j + 1], h[j], rho_j, chi_of(rho_j, rho[j + 1]));
        Ok(new_j + new_j1 + new_j2 - old_j - old_j1)
    } else {
        Ok(new_j + new_j1 - old_j)
    }
}

/// Local cost increment of subdividing at `j`; same index window as
/// [`delta_e`].
pub fn delta_c(
    delta: &Discretization,
    j: usize,
    v: &dyn Weight,
    d_r: usize,
    d_f: usize,
    lipschitz: f64,
) -> Result<f64> {
    let n = delta.n();
    if j > n {
        return Err(Error::Domain(format!("index {j} out of [0, {n}]")));
    }
    let (h, t, rho) = (delta.h(), delta.t(), delta.rho());
    let (dr, df, l) = (d_r as i32, d_f as i32, lipschitz);
    if j == 0 {
        let new = c_term(v, l, dr, df, t[0], h[0], rho[0] / 4.0, rho[1])?;
        let old = c_term(v, l, dr, df, t[0], h[0], rho[0], rho[1])?;
        return Ok(new - old);
    }
    let (h_j, t_j) = (h[j - 1], t[j]);
    let (rho_prev, rho_j) = (rho[j - 1], rho[j]);
    let quarter = rho_j / 4.0;

    let new_jm1 = c_term(v, l, dr, df, t[j - 1], h_j / 2.0, rho_prev, quarter)?;
    let new_j = c_term(v, l, dr, df, t_j - h_j / 2.0, h_j / 2.0, quarter, quarter)?;
    let old_jm1 = c_term(v, l, dr, df, t[j - 1], h_j, rho_prev, rho_j)?;
    if j < n {
        let new_j1 = c_term(v, l, dr, df, t_j, h[j], quarter, rho[j + 1])?;
        let old_j = c_term(v, l, dr, df, t_j, h[j], rho_j, rho[j + 1])?;
        Ok(new_jm1 + new_j + new_j1 - old_jm1 - old_j)
    } else {
        Ok(new_jm1 + new_j - old_jm1)
    }
}

const RATIO_TIE_TOL: f64 = 1e-12;

/// Greedy subdivision: while the error bound exceeds `eps`, subdivide where
/// the error-per-cost ratio is best (or where cost grows least if some cost
/// increments are nonpositive). Ties go to the smallest index.
pub fn refine_loop(
    delta0: &Discretization,
    eps: f64,
    cfg: &RefinementConfig,
    v: &dyn Weight,
) -> Result<Discretization> {
    refine_loop_observed(delta0, eps, cfg, v, |_, _| {})
}

/// As [`refine_loop`], invoking `observer(delta, chosen_index)` after every
/// subdivision.
pub fn refine_loop_observed(
    delta0: &Discretization,
    eps: f64,
    cfg: &RefinementConfig,
    v: &dyn Weight,
    mut observer: impl FnMut(&Discretization, usize),
) -> Result<Discretization> {
    let (l, p, horizon) = (cfg.lipschitz, cfg.bound, cfg.horizon);
    let report = validate_admissible(delta0, l, p, horizon);
    if !report.is_admissible() {
        return Err(Error::NotAdmissible(report.violations));
    }

    let mut delta = delta0.clone();
    // Increment caches over j = 0..=n; a subdivision at k only invalidates
    // the window [k-1, k+2] (new indexing), everything else shifts.
    let mut de: Vec<f64> = (0..=delta.n())
        .map(|j| delta_e(&delta, j, l, p, horizon))
        .collect::<Result<_>>()?;
    let mut dc: Vec<f64> = (0..=delta.n())
        .map(|j| delta_c(&delta, j, v, cfg.d_r, cfg.d_f, l))
        .collect::<Result<_>>()?;

    let mut iterations = 0usize;
    const MAX_ITERATIONS: usize = 2_000_000;

    while error_e(&delta, l, p, horizon) > eps {
        iterations += 1;
        if iterations > MAX_ITERATIONS {
            return Err(Error::ResourceLimit(format!(
                "refinement did not reach eps = {eps} within {MAX_ITERATIONS} subdivisions"
            )));
        }

        let all_costs_positive = dc.iter().all(|&c| c > 0.0);
        let k = if all_costs_positive {
            argmin_ratio(&de, &dc)
        } else {
            argmin(&dc)
        };

        delta = subdivide(&delta, k)?;
        observer(&delta, k);

        if k == 0 {
            for j in 0..=1.min(delta.n()) {
                de[j] = delta_e(&delta, j, l, p, horizon)?;
                dc[j] = delta_c(&delta, j, v, cfg.d_r, cfg.d_f, l)?;
            }
        } else {
            de.insert(k, 0.0);
            dc.insert(k, 0.0);
            let lo = k - 1;
            let hi = (k + 2).min(delta.n());
            for j in lo..=hi {
                de[j] = delta_e(&delta, j, l, p, horizon)?;
                dc[j] = delta_c(&delta, j, v, cfg.d_r, cfg.d_f, l)?;
            }
        }

        #[cfg(debug_assertions)]
        {
            for j in 0..=delta.n() {
                let fresh_e = delta_e(&delta, j, l, p, horizon)?;
                let fresh_c = delta_c(&delta, j, v, cfg.d_r, cfg.d_f, l)?;
                debug_assert!(
                    (de[j] - fresh_e).abs() <= 1e-12 * fresh_e.abs().max(1.0),
                    "stale error increment at {j}"
                );
                debug_assert!(
                    (dc[j] - fresh_c).abs() <= 1e-12 * fresh_c.abs().max(1.0),
                    "stale cost increment at {j}"
                );
            }
        }
    }
    Ok(delta)
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = j;
        }
    }
    best
}

fn argmin_ratio(de: &[f64], dc: &[f64]) -> usize {
    let mut best = 0;
    let mut best_ratio = de[0] / dc[0];
    for j in 1..de.len() {
        let r = de[j] / dc[j];
        let tie = (r - best_ratio).abs() <= RATIO_TIE_TOL * r.abs().max(best_ratio.abs());
        if r < best_ratio && !tie {
            best = j;
            best_ratio = r;
        }
    }
    best
}

/// The coarsest admissible uniform discretization with `E <= eps`, found by
/// doubling the step count from the admissibility minimum.
pub fn uniform_for_eps(
    lipschitz: f64,
    bound: f64,
    horizon: f64,
    eps: f64,
    max_n: usize,
) -> Result<Discretization> {
    let initial = Discretization::uniform_initial(lipschitz, bound, horizon)?;
    let mut n = initial.n();
    loop {
        let delta = Discretization::uniform(n, lipschitz, bound, horizon)?;
        if error_e(&delta, lipschitz, bound, horizon) <= eps {
            return Ok(delta);
        }
        if n > max_n / 2 {
            return Err(Error::ResourceLimit(format!(
                "no uniform discretization with E <= {eps} up to n = {n} (next attempt {})",
                n * 2
            )));
        }
        n *= 2;
    }
}

/// Per-stage record of the iterative driver.
#[derive(Clone, Debug)]
pub struct StageReport {
    /// The threshold this stage's discretization was refined to meet;
    /// `None` for the initial stage.
    pub met_eps: Option<f64>,
    pub n: usize,
    pub delta: Discretization,
    pub e_value: f64,
    pub counters: Vec<StepCounters>,
    pub terminal_c_r: u64,
    pub timings: PhaseTimings,
}

/// Result of the iterative driver.
#[derive(Clone, Debug)]
pub struct IterateOutcome {
    pub delta: Discretization,
    pub run: TrackRun,
    pub stages: Vec<StageReport>,
}

/// The iterative driver: start from the coarsest admissible uniform
/// discretization, then alternate boundary-tracked runs (which yield the
/// surrogate weight) with greedy refinement against the next threshold. A
/// ladder of length `m` performs `m + 1` tracked runs and meets every
/// threshold in order.
pub fn iterate(problem: &Problem, eps_ladder: &[f64]) -> Result<IterateOutcome> {
    let cfg = RefinementConfig::from_problem(problem, eps_ladder.to_vec())?;
    let (l, p, horizon) = (cfg.lipschitz, cfg.bound, cfg.horizon);
    let mut delta = Discretization::uniform_initial(l, p, horizon)?;
    let mut stages = Vec::with_capacity(eps_ladder.len() + 1);
    let mut last_run: Option<TrackRun> = None;

    for stage in 0..=eps_ladder.len() {
        let run = track_run(&problem.rhs, &problem.x0, &delta)?;
        let mut timings = run.timings;
        let e_value = error_e(&delta, l, p, horizon);

        let refined = if stage < eps_ladder.len() {
            let eps = eps_ladder[stage];
            let v = run.splines.product();
            let start = Instant::now();
            let next = refine_loop(&delta, eps, &cfg, &v)?;
            timings.refine_ms += start.elapsed().as_secs_f64() * 1e3;
            Some(next)
        } else {
            None
        };

        stages.push(StageReport {
            met_eps: if stage == 0 {
                None
            } else {
                Some(eps_ladder[stage - 1])
            },
            n: delta.n(),
            delta: delta.clone(),
            e_value,
            counters: run.counters.clone(),
            terminal_c_r: run.terminal_c_r,
            timings,
        });
        last_run = Some(run);
        if let Some(next) = refined {
            delta = next;
        }
    }

    Ok(IterateOutcome {
        delta,
        run: last_run.expect("at least one stage"),
        stages,
    })
}

/// Resolution of node `k` of a discretization.
pub fn rho_at(delta: &Discretization, k: usize) -> Result<Resolution> {
    Resolution::new(delta.rho()[k])
}
