//! Exact solutions and error measurement for the shipped example systems,
//! relative-error conversion, and assembly of run reports.

use crate::dynamics::{AffineForm, AffineIntervalBoxMap, Problem, RhsModel};
use crate::error::{Error, Result};
use crate::grid::{ConvexSet, DigitalSet, IntervalBox};
use crate::refine::IterateOutcome;
use crate::scheme::Discretization;
use crate::tracking::{PhaseTimings, StepCounters};

/// The scaled-interval system `x_i' in [0.9, 1.0] L x_i` from the origin
/// `(1, 1)` over `[0, 1]`, with `P = L e^L` and dimensions `d_x = d_u = 2`.
pub fn simp7_problem(lipschitz: f64) -> Result<Problem> {
    let l = lipschitz;
    let map = AffineIntervalBoxMap::new(vec![
        (
            AffineForm::new(vec![0.9 * l, 0.0], 0.0),
            AffineForm::new(vec![l, 0.0], 0.0),
        ),
        (
            AffineForm::new(vec![0.0, 0.9 * l], 0.0),
            AffineForm::new(vec![0.0, l], 0.0),
        ),
    ])?;
    let rhs = RhsModel::new(map, l, l * l.exp(), 2, 2)?;
    Problem::new("simp7", rhs, IntervalBox::point(&[1.0, 1.0]), 1.0)
}

/// The rotation-like system `x_1' in [0, 1] pi x_2`, `x_2' in -[0, 1] pi x_1`
/// from `(-1, 0)` over `[0, 1]`, with `L = pi` and `P = pi^2`.
pub fn bp_problem() -> Result<Problem> {
    let pi = std::f64::consts::PI;
    let map = AffineIntervalBoxMap::new(vec![
        (
            AffineForm::constant(2, 0.0),
            AffineForm::new(vec![0.0, pi], 0.0),
        ),
        (
            AffineForm::constant(2, 0.0),
            AffineForm::new(vec![-pi, 0.0], 0.0),
        ),
    ])?;
    let rhs = RhsModel::new(map, pi, pi * pi, 2, 2)?;
    Problem::new("bp", rhs, IntervalBox::point(&[-1.0, 0.0]), 1.0)
}

/// Builds one of the named example problems, if the name is known.
pub fn builtin_problem(name: &str, lipschitz: Option<f64>) -> Result<Problem> {
    match name {
        "simp7" => simp7_problem(lipschitz.unwrap_or(1.0)),
        "bp" => bp_problem(),
        other => Err(Error::InvalidModel(format!("unknown builtin problem '{other}'"))),
    }
}

/// Exact reachable set of the scaled-interval example at time `t` in `[0, 1]`:
/// the square `[exp(0.9 L t), exp(L t)]^2`.
pub fn exact_reach_simp7(t: f64, lipschitz: f64) -> Result<IntervalBox> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("time {t} outside the horizon [0, 1]")));
    }
    let lo = (0.9 * lipschitz * t).exp();
    let hi = (lipschitz * t).exp();
    IntervalBox::new(vec![lo, lo], vec![hi, hi])
}

/// Two-sided Hausdorff distance between a digital set and a box, with an
/// explicit overestimation certificate: the true distance lies in
/// `[value, value + overestimate]`.
#[derive(Clone, Copy, Debug)]
pub struct HausdorffCertificate {
    pub value: f64,
    pub overestimate: f64,
}

impl HausdorffCertificate {
    /// A sound upper bound on the true distance.
    pub fn upper(&self) -> f64 {
        self.value + self.overestimate
    }
}

/// Hausdorff distance between the embedded points of `m` and the continuum
/// box `b`. The direction from the set is an exact finite maximum; the
/// direction from the box is evaluated on the corners plus a sampling grid
/// whose pitch certifies the overestimate (the distance field is
/// 1-Lipschitz in the Chebyshev metric).
pub fn hausdorff_to_box(m: &DigitalSet, b: &IntervalBox) -> Result<HausdorffCertificate> {
    if m.is_empty() {
        return Err(Error::EmptySet);
    }
    if m.dim() != b.dim() {
        return Err(Error::DimensionMismatch(m.dim(), b.dim()));
    }
    let dim = m.dim();
    let points: Vec<Vec<f64>> = m.iter().map(|p| p.embed(m.rho())).collect();

    let mut from_set = 0.0f64;
    for p in &points {
        from_set = from_set.max(b.dist_to_set(p));
    }

    let dist_to_m = |y: &[f64]| -> f64 {
        let mut best = f64::INFINITY;
        for p in &points {
            best = best.min(crate::grid::chebyshev_unchecked(y, p));
        }
        best
    };

    let mut from_box = 0.0f64;
    for corner in b.corners() {
        from_box = from_box.max(dist_to_m(&corner));
    }

    // Sampling grid over the box; cap the total count and widen the
    // certificate accordingly.
    let mut pitch = m.rho().get() / 4.0;
    const MAX_SAMPLES: f64 = 2e6;
    loop {
        let count: f64 = (0..dim)
            .map(|i| ((b.hi()[i] - b.lo()[i]) / pitch).floor() + 1.0)
            .product();
        if count <= MAX_SAMPLES {
            break;
        }
        pitch *= 2.0;
    }
    let steps: Vec<usize> = (0..dim)
        .map(|i| ((b.hi()[i] - b.lo()[i]) / pitch).floor() as usize)
        .collect();
    let mut idx = vec![0usize; dim];
    let mut pos = vec![0.0f64; dim];
    'outer: loop {
        for i in 0..dim {
            pos[i] = (b.lo()[i] + pitch * idx[i] as f64).min(b.hi()[i]);
        }
        from_box = from_box.max(dist_to_m(&pos));
        let mut i = dim;
        loop {
            if i == 0 {
                break 'outer;
            }
            i -= 1;
            if idx[i] < steps[i] {
                idx[i] += 1;
                break;
            }
            idx[i] = 0;
        }
    }

    // Samples cover the box within pitch/2 in every nondegenerate dimension;
    // a fully degenerate box is covered exactly.
    let coverage = if (0..dim).any(|i| b.hi()[i] > b.lo()[i]) {
        pitch / 2.0
    } else {
        0.0
    };
    let value = from_set.max(from_box);
    let possible_upper = from_set.max(from_box + coverage);
    Ok(HausdorffCertificate {
        value,
        overestimate: possible_upper - value,
    })
}

/// Relative accuracy of a threshold: `eps / e^{L T}`, the convention used to
/// normalize absolute thresholds on the scaled-interval example.
pub fn relative_error(eps: f64, lipschitz: f64, horizon: f64) -> f64 {
    eps * (-(lipschitz * horizon)).exp()
}

/// Assembled summary of one run, ready for serialization by a frontend.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub algo: String,
    pub delta: Discretization,
    pub e_value: f64,
    pub eps_ladder: Vec<f64>,
    pub counters: Vec<StepCounters>,
    pub terminal_c_r: u64,
    pub timings: PhaseTimings,
    pub hausdorff_to_exact: Option<HausdorffCertificate>,
    pub relative_error: Option<f64>,
}

impl RunReport {
    /// Total rasterized points over the steps of the (final) run.
    pub fn total_c_f(&self) -> u64 {
        self.counters.iter().map(|c| c.c_f).sum()
    }

    pub fn total_c_r(&self) -> u64 {
        self.counters.iter().map(|c| c.c_r).sum::<u64>() + self.terminal_c_r
    }

    /// Report for the iterative driver: counters and timings of the final
    /// certified stage, with the exact-solution comparison filled in for the
    /// scaled-interval example.
    pub fn from_iterate(
        problem: &Problem,
        eps_ladder: &[f64],
        outcome: &IterateOutcome,
        e_value: f64,
    ) -> Result<Self> {
        let final_stage = outcome.stages.last().expect("at least one stage");
        let mut report = RunReport {
            algo: "ba".into(),
            delta: outcome.delta.clone(),
            e_value,
            eps_ladder: eps_ladder.to_vec(),
            counters: final_stage.counters.clone(),
            terminal_c_r: final_stage.terminal_c_r,
            timings: outcome
                .stages
                .iter()
                .fold(PhaseTimings::default(), |mut acc, s| {
                    acc.add(&s.timings);
                    acc
                }),
            hausdorff_to_exact: None,
            relative_error: None,
        };
        report.attach_exact_comparison(problem, outcome.run.pairs.last())?;
        Ok(report)
    }

    /// Fills the exact-set distance and relative error when the problem has a
    /// known reachable set (the scaled-interval example).
    pub fn attach_exact_comparison(
        &mut self,
        problem: &Problem,
        final_pair: Option<&crate::topology::BoundaryPair>,
    ) -> Result<()> {
        if problem.name != "simp7" {
            return Ok(());
        }
        let l = problem.rhs.lipschitz();
        self.relative_error = Some(relative_error(self.e_value, l, problem.horizon));
        if let Some(pair) = final_pair {
            let set = crate::topology::reconstruct(pair)?;
            let exact = exact_reach_simp7(problem.horizon, l)?;
            self.hausdorff_to_exact = Some(hausdorff_to_box(&set, &exact)?);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{rasterize, GridPoint, RasterMode, Resolution};

    fn res(r: f64) -> Resolution {
        Resolution::new(r).unwrap()
    }

    #[test]
    fn exact_set_examples() {
        let b = exact_reach_simp7(0.0, 1.0).unwrap();
        assert_eq!(b, IntervalBox::point(&[1.0, 1.0]));
        let b = exact_reach_simp7(1.0, 1.0).unwrap();
        assert_eq!(b.lo(), &[0.9f64.exp(), 0.9f64.exp()]);
        assert_eq!(b.hi(), &[1.0f64.exp(), 1.0f64.exp()]);
        // substitution symmetry: L t = 1
        let b2 = exact_reach_simp7(0.5, 2.0).unwrap();
        assert_eq!(b, b2);
        assert!(exact_reach_simp7(1.5, 1.0).is_err());
    }

    #[test]
    fn hausdorff_to_box_corner_case() {
        let m = DigitalSet::from_points(res(1.0), 2, [GridPoint::new(&[0, 0])]).unwrap();
        let b = IntervalBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let cert = hausdorff_to_box(&m, &b).unwrap();
        // the farthest box point is the corner (1, 1), sampled exactly
        assert_eq!(cert.value, 1.0);
        assert!(cert.upper() >= 1.0);
    }

    #[test]
    fn hausdorff_to_box_coincidence() {
        // lattice-aligned degenerate box equal to the point set
        let m = DigitalSet::from_points(res(1.0), 2, [GridPoint::new(&[2, 3])]).unwrap();
        let b = IntervalBox::new(vec![2.0, 3.0], vec![2.0, 3.0]).unwrap();
        let cert = hausdorff_to_box(&m, &b).unwrap();
        assert_eq!(cert.value, 0.0);
        assert_eq!(cert.overestimate, 0.0);
    }

    #[test]
    fn hausdorff_of_rasterization_is_small() {
        let b = IntervalBox::new(vec![0.1, -0.2], vec![0.9, 0.6]).unwrap();
        let rho = 0.1;
        let m = rasterize(&b, rho / 2.0, res(rho), RasterMode::Full).unwrap();
        let cert = hausdorff_to_box(&m, &b).unwrap();
        assert!(cert.upper() <= rho / 2.0 + rho / 2.0 + 1e-12);
    }

    #[test]
    fn relative_error_reproduces_reported_ladder() {
        let cases = [
            (32.0, 0.59),
            (16.0, 0.29),
            (8.0, 0.15),
            (4.0, 0.073),
            (2.0, 0.037),
        ];
        for (eps, want) in cases {
            let got = relative_error(eps, 4.0, 1.0);
            // two significant figures
            assert_eq!(
                format!("{:.1e}", got),
                format!("{:.1e}", want),
                "eps = {eps}: {got} vs {want}"
            );
        }
        assert!((relative_error(4.0f64.exp(), 4.0, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn builtin_problems() {
        let p = simp7_problem(2.0).unwrap();
        assert_eq!(p.rhs.lipschitz(), 2.0);
        assert!((p.rhs.bound() - 2.0 * 2.0f64.exp()).abs() < 1e-14);
        assert_eq!(p.rhs.d_r(), 1);
        assert_eq!(p.rhs.d_f(), 1);
        let p = bp_problem().unwrap();
        assert_eq!(p.rhs.lipschitz(), std::f64::consts::PI);
        assert!(builtin_problem("nope", None).is_err());
    }
}
