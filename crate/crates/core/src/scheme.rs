//! Space-time discretizations and the full-set Euler recursion on uniform and
//! nonuniform grids. The full-set runner is the correctness oracle for the
//! boundary-tracking path.

use crate::dynamics::{alpha_of, euler_image, RhsModel};
use crate::error::{Error, Result};
use crate::grid::{rasterize, ConvexSet, DigitalSet, RasterMode, Resolution};
use crate::topology::restrict;
use rayon::prelude::*;

/// A tuple of stepsizes `h_1..h_n`, nodes `t_0..t_n` and mesh sizes
/// `rho_0..rho_n`. Node `t_k` carries the grid with spacing `rho_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Discretization {
    h: Vec<f64>,
    t: Vec<f64>,
    rho: Vec<f64>,
}

impl Discretization {
    pub fn from_parts(h: Vec<f64>, t: Vec<f64>, rho: Vec<f64>) -> Result<Self> {
        let n = h.len();
        if n == 0 {
            return Err(Error::InvalidDiscretization("need at least one step".into()));
        }
        if t.len() != n + 1 || rho.len() != n + 1 {
            return Err(Error::InvalidDiscretization(format!(
                "lengths must be (n, n+1, n+1), got ({}, {}, {})",
                n,
                t.len(),
                rho.len()
            )));
        }
        if h.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
            return Err(Error::InvalidDiscretization("stepsizes must be positive".into()));
        }
        if rho.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
            return Err(Error::InvalidDiscretization("mesh sizes must be positive".into()));
        }
        if t.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(Error::InvalidDiscretization("nodes must be nonnegative".into()));
        }
        Ok(Discretization { h, t, rho })
    }

    /// Uniform discretization with `n` steps over `[0, T]` and the mesh
    /// coupling `rho = 2 L P h^2` on every node.
    pub fn uniform(n: usize, lipschitz: f64, bound: f64, horizon: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDiscretization("need at least one step".into()));
        }
        let h = horizon / n as f64;
        let rho = 2.0 * lipschitz * bound * h * h;
        let hs = vec![h; n];
        let t = cumsum(&hs);
        Discretization::from_parts(hs, t, vec![rho; n + 1])
    }

    /// The initial discretization of the iterative driver: `n0 = ceil(4 L T)`
    /// uniform steps with mesh `2 L P T^2 / n0^2` everywhere. A relative
    /// guard keeps `ceil` from overshooting when `4 L T` is integral.
    pub fn uniform_initial(lipschitz: f64, bound: f64, horizon: f64) -> Result<Self> {
        let x = 4.0 * lipschitz * horizon;
        let n0 = (x - 1e-9 * x.max(1.0)).ceil().max(1.0) as usize;
        Discretization::uniform(n0, lipschitz, bound, horizon)
    }

    pub fn n(&self) -> usize {
        self.h.len()
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn horizon(&self) -> f64 {
        *self.t.last().unwrap()
    }

}

/// Node vector `(0, h_1, h_1 + h_2, ...)` of a stepsize sequence.
pub fn cumsum_nodes(h: &[f64]) -> Vec<f64> {
    let mut t = Vec::with_capacity(h.len() + 1);
    let mut acc = 0.0;
    t.push(0.0);
    for &v in h {
        acc += v;
        t.push(acc);
    }
    t
}

pub(crate) use cumsum_nodes as cumsum;

/// Diagnostics from the admissibility check; empty means admissible.
#[derive(Clone, Debug, Default)]
pub struct AdmissibilityReport {
    pub violations: Vec<String>,
}

impl AdmissibilityReport {
    pub fn is_admissible(&self) -> bool {
        self.violations.is_empty()
    }
}

const REL_TOL: f64 = 1e-9;

/// Checks all admissibility conditions and reports every violation: the
/// cumulative-sum structure of the nodes, the `1/(4L)` and `P/(8L)` caps, the
/// power-of-4 mesh ratios (log-4 exponents kept as integers), and the
/// coupling `rho_j = 2 L P h_j^2` for `j >= 1`.
pub fn validate_admissible(
    delta: &Discretization,
    lipschitz: f64,
    bound: f64,
    horizon: f64,
) -> AdmissibilityReport {
    let mut v = Vec::new();
    let (h, t, rho) = (delta.h(), delta.t(), delta.rho());
    let n = delta.n();
    let tol_t = REL_TOL * horizon.max(1.0);

    if t[0] != 0.0 {
        v.push(format!("t_0 = {} must be 0", t[0]));
    }
    for k in 1..=n {
        if (t[k] - t[k - 1] - h[k - 1]).abs() > tol_t {
            v.push(format!(
                "t_{k} - t_{} = {} differs from h_{k} = {}",
                k - 1,
                t[k] - t[k - 1],
                h[k - 1]
            ));
        }
    }
    if (t[n] - horizon).abs() > tol_t {
        v.push(format!("t_n = {} differs from T = {horizon}", t[n]));
    }

    let h_cap = 1.0 / (4.0 * lipschitz);
    for (k, &hk) in h.iter().enumerate() {
        if hk > h_cap * (1.0 + REL_TOL) {
            v.push(format!("h_{} = {hk} exceeds 1/(4L) = {h_cap}", k + 1));
        }
    }
    let rho_cap = bound / (8.0 * lipschitz);
    for (k, &rk) in rho.iter().enumerate() {
        if rk > rho_cap * (1.0 + REL_TOL) {
            v.push(format!("rho_{k} = {rk} exceeds P/(8L) = {rho_cap}"));
        }
    }

    let rho_min = rho.iter().cloned().fold(f64::INFINITY, f64::min);
    for (k, &rk) in rho.iter().enumerate() {
        let ratio = rk / rho_min;
        let ell = (ratio.ln() / 4.0f64.ln()).round();
        let reconstructed = rho_min * 4.0f64.powi(ell as i32);
        if (rk - reconstructed).abs() > 1e-12 * rk {
            v.push(format!(
                "rho_{k} / min rho = {ratio} is not an integer power of 4"
            ));
        }
    }

    for j in 1..=n {
        let coupled = 2.0 * lipschitz * bound * h[j - 1] * h[j - 1];
        if (rho[j] - coupled).abs() > 1e-9 * coupled {
            v.push(format!(
                "rho_{j} = {} violates the coupling 2 L P h_{j}^2 = {coupled}",
                rho[j]
            ));
        }
    }

    AdmissibilityReport { violations: v }
}

fn check_step_ratio(rho_from: f64, rho_to: f64) -> Result<()> {
    let ratio = rho_to / rho_from;
    if ratio <= 1.0 + 1e-12 {
        return Ok(()); // fine or equal grid: rasterize directly at the target
    }
    let k = ratio.round();
    if (ratio - k).abs() > 1e-12 * ratio {
        return Err(Error::BadRatio {
            ratio,
            reason: "coarsening requires an integer mesh ratio",
        });
    }
    Ok(())
}

/// One full-set Euler step from the grid of `m` to the grid with spacing
/// `rho_next`, using the blow-up `alpha(h, rho)` of the source grid: rasterize
/// every one-step image at `min(rho, rho_next)`, take the union, and restrict
/// when the target grid is coarser.
pub fn full_euler_step(
    f: &RhsModel,
    m: &DigitalSet,
    h: f64,
    rho_next: Resolution,
) -> Result<DigitalSet> {
    full_euler_step_counted(f, m, h, rho_next).map(|(s, _)| s)
}

/// As [`full_euler_step`], additionally counting the rasterized points over
/// all per-point plates before deduplication.
pub fn full_euler_step_counted(
    f: &RhsModel,
    m: &DigitalSet,
    h: f64,
    rho_next: Resolution,
) -> Result<(DigitalSet, u64)> {
    if m.is_empty() {
        return Err(Error::EmptySet);
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Domain(format!("step size {h} must be positive")));
    }
    let rho = m.rho();
    check_step_ratio(rho.get(), rho_next.get())?;
    let rho_raster = if rho_next.get() < rho.get() { rho_next } else { rho };
    let alpha = alpha_of(f.lipschitz(), h, rho.get());

    let points: Vec<_> = m.iter().cloned().collect();
    let dim = m.dim();
    let (union, computed) = points
        .par_iter()
        .map(|p| {
            let x = p.embed(rho);
            let plate = rasterize(&euler_image(f, &x, h), alpha, rho_raster, RasterMode::Full)
                .expect("alpha >= rho~/2 by construction");
            let count = plate.len() as u64;
            (plate, count)
        })
        .reduce(
            || (DigitalSet::new(rho_raster, dim), 0u64),
            |(sa, ca), (sb, cb)| (sa.union_with(sb), ca + cb),
        );

    let result = if rho_next.get() > rho.get() * (1.0 + 1e-12) {
        restrict(&union, rho_next)?
    } else {
        union
    };
    Ok((result, computed))
}

/// The full-set recursion: project the initial set with radius `rho_0 / 2`,
/// then step through the discretization. Returns the reachable set at every
/// node.
pub fn full_euler_run(
    f: &RhsModel,
    x0: &dyn ConvexSet,
    delta: &Discretization,
) -> Result<Vec<DigitalSet>> {
    full_euler_run_counted(f, x0, delta, None).map(|(s, _)| s)
}

/// As [`full_euler_run`], returning per-step counts of rasterized points and
/// aborting once `max_points` total work is exceeded.
pub fn full_euler_run_counted(
    f: &RhsModel,
    x0: &dyn ConvexSet,
    delta: &Discretization,
    max_points: Option<u64>,
) -> Result<(Vec<DigitalSet>, Vec<u64>)> {
    let rho0 = Resolution::new(delta.rho()[0])?;
    let r0 = rasterize(x0, rho0.get() / 2.0, rho0, RasterMode::Full)?;
    let mut sets = vec![r0];
    let mut counts = Vec::with_capacity(delta.n());
    let mut total = 0u64;
    for k in 1..=delta.n() {
        let rho_next = Resolution::new(delta.rho()[k])?;
        let (next, c) = full_euler_step_counted(f, &sets[k - 1], delta.h()[k - 1], rho_next)?;
        total += c;
        if let Some(limit) = max_points {
            if total > limit {
                return Err(Error::ResourceLimit(format!(
                    "full-set run exceeded {limit} rasterized points at step {k} of {}",
                    delta.n()
                )));
            }
        }
        counts.push(c);
        sets.push(next);
    }
    Ok((sets, counts))
}
