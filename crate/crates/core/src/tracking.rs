//! The boundary-tracking step: evolves the boundary pair of a reachable set
//! one Euler step without reconstructing the set, gathers the point counters
//! that feed the cost model, and assembles the surrogate-volume splines over
//! a whole run.

use crate::dynamics::{alpha_of, euler_image, kappa_of, sigma_of, RhsModel};
use crate::error::{Error, Result};
use crate::grid::{
    neighbor_offsets, rasterize, ConvexSet, DigitalSet, RasterMode, Resolution,
};
use crate::scheme::Discretization;
use crate::topology::{expand_pair, restrict_pair, trace, BoundaryPair};
use rayon::prelude::*;
use std::time::Instant;

/// Point counters of one boundary step: `c_r` is the size of the four-layer
/// fan of the input pair, `c_f` the number of rasterized points computed over
/// all per-point projections (before deduplication).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepCounters {
    pub c_r: u64,
    pub c_f: u64,
}

/// Wall-clock time spent in the phases of a run, in milliseconds.
#[derive(Clone, Copy, Debug, Default)]
pub struct PhaseTimings {
    pub raster_ms: f64,
    pub filter_ms: f64,
    pub restrict_ms: f64,
    pub refine_ms: f64,
}

impl PhaseTimings {
    pub fn add(&mut self, other: &PhaseTimings) {
        self.raster_ms += other.raster_ms;
        self.filter_ms += other.filter_ms;
        self.restrict_ms += other.restrict_ms;
        self.refine_ms += other.refine_ms;
    }
}

/// A positive piecewise-linear function given by its interpolation nodes.
#[derive(Clone, Debug)]
pub struct LinearSpline {
    ts: Vec<f64>,
    vs: Vec<f64>,
}

impl LinearSpline {
    pub fn new(nodes: &[(f64, f64)]) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidSpline("need at least two nodes".into()));
        }
        for w in nodes.windows(2) {
            if !(w[0].0 < w[1].0) {
                return Err(Error::InvalidSpline(format!(
                    "nodes must be strictly increasing in t: {} then {}",
                    w[0].0, w[1].0
                )));
            }
        }
        if nodes.iter().any(|&(_, v)| !(v.is_finite() && v > 0.0)) {
            return Err(Error::InvalidSpline("values must be positive".into()));
        }
        Ok(LinearSpline {
            ts: nodes.iter().map(|n| n.0).collect(),
            vs: nodes.iter().map(|n| n.1).collect(),
        })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.ts[0], *self.ts.last().unwrap())
    }

    /// Exact interpolation by binary search; no extrapolation.
    pub fn value(&self, t: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        if !(t >= lo && t <= hi) {
            return Err(Error::SplineDomain { t, lo, hi });
        }
        let idx = match self.ts.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => return Ok(self.vs[i]),
            Err(i) => i,
        };
        let (t0, t1) = (self.ts[idx - 1], self.ts[idx]);
        let (v0, v1) = (self.vs[idx - 1], self.vs[idx]);
        Ok(v0 + (v1 - v0) * (t - t0) / (t1 - t0))
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.ts.iter().cloned().zip(self.vs.iter().cloned())
    }
}

/// A positive weight function on `[0, T]`, the `v` argument of the cost model.
pub trait Weight: Sync {
    fn value(&self, t: f64) -> Result<f64>;
}

impl Weight for LinearSpline {
    fn value(&self, t: f64) -> Result<f64> {
        LinearSpline::value(self, t)
    }
}

/// Constant weight; handy for synthetic cost models.
pub struct ConstWeight(pub f64);

impl Weight for ConstWeight {
    fn value(&self, _t: f64) -> Result<f64> {
        Ok(self.0)
    }
}

/// Pointwise product of two splines (piecewise quadratic, evaluated lazily).
pub struct ProductWeight<'a>(pub &'a LinearSpline, pub &'a LinearSpline);

impl Weight for ProductWeight<'_> {
    fn value(&self, t: f64) -> Result<f64> {
        Ok(self.0.value(t)? * self.1.value(t)?)
    }
}

/// Surrogate surface-area estimates collected along a run: nodes
/// `(t_k, v_R_k, v_F_k)` and their piecewise-linear interpolants.
#[derive(Clone, Debug)]
pub struct SurrogateSplines {
    pub nodes: Vec<(f64, f64, f64)>,
    pub v_r: LinearSpline,
    pub v_f: LinearSpline,
}

impl SurrogateSplines {
    pub fn new(nodes: Vec<(f64, f64, f64)>) -> Result<Self> {
        let r_nodes: Vec<(f64, f64)> = nodes.iter().map(|&(t, r, _)| (t, r)).collect();
        let f_nodes: Vec<(f64, f64)> = nodes.iter().map(|&(t, _, f)| (t, f)).collect();
        Ok(SurrogateSplines {
            v_r: LinearSpline::new(&r_nodes)?,
            v_f: LinearSpline::new(&f_nodes)?,
            nodes,
        })
    }

    /// The product weight `v = v_R * v_F` driving the cost estimator.
    pub fn product(&self) -> ProductWeight<'_> {
        ProductWeight(&self.v_r, &self.v_f)
    }
}

/// One boundary-tracking step from the grid of `d` to spacing `rho_next`.
///
/// With `rho~ = min(rho, rho')`, `alpha = alpha(h, rho)` and
/// `kappa = kappa(h, rho)`: expand the pair to its four layers, rasterize the
/// boundary of every per-point Euler image (the layer-0 images additionally
/// clipped to their full projections with the wider radius `alpha + kappa`),
/// filter the new layer-1/layer-0 points by exact one-step adjacency, and
/// restrict the resulting pair when the target grid is coarser.
pub fn psi_step(
    f: &RhsModel,
    d: &BoundaryPair,
    h: f64,
    rho_next: Resolution,
) -> Result<(BoundaryPair, StepCounters)> {
    let mut timings = PhaseTimings::default();
    psi_step_timed(f, d, h, rho_next, &mut timings)
}

pub fn psi_step_timed(
    f: &RhsModel,
    d: &BoundaryPair,
    h: f64,
    rho_next: Resolution,
    timings: &mut PhaseTimings,
) -> Result<(BoundaryPair, StepCounters)> {
    let l = f.lipschitz();
    let h_cap = 1.0 / (4.0 * l);
    // same relative slack as the admissibility check, so an admissible
    // discretization is never rejected here over float dust in ceil(4 L T)
    if !(h > 0.0) || h > h_cap * (1.0 + 1e-9) {
        return Err(Error::StepOutOfRange { h, limit: h_cap });
    }
    let rho = d.rho();
    let ratio = rho_next.get() / rho.get();
    if ratio > 1.0 + 1e-12 {
        let k = ratio.round();
        if (ratio - k).abs() > 1e-12 * ratio {
            return Err(Error::BadRatio {
                ratio,
                reason: "coarsening requires an integer mesh ratio",
            });
        }
    }
    let rho_t = if rho_next.get() < rho.get() { rho_next } else { rho };
    let alpha = alpha_of(l, h, rho.get());
    let kappa = kappa_of(l, h, rho.get())?;
    let dim = d.dim();

    let fan = expand_pair(d);
    let c_r = fan.total();

    let start = Instant::now();
    let outer_pts: Vec<_> = fan.d1.iter().chain(fan.d2.iter()).cloned().collect();
    let inner_pts: Vec<_> = fan.dm1.iter().cloned().collect();
    let zero_pts: Vec<_> = fan.d0.iter().cloned().collect();

    let boundary_raster = |pts: &[crate::grid::GridPoint]| -> (DigitalSet, u64) {
        pts.par_iter()
            .map(|p| {
                let img = euler_image(f, &p.embed(rho), h);
                let s = rasterize(&img, alpha, rho_t, RasterMode::Boundary)
                    .expect("positive alpha");
                let c = s.len() as u64;
                (s, c)
            })
            .reduce(
                || (DigitalSet::new(rho_t, dim), 0u64),
                |(sa, ca), (sb, cb)| (sa.union_with(sb), ca + cb),
            )
    };

    let (w1, c_w1) = boundary_raster(&outer_pts);
    let (w0m1, c_w0m1) = boundary_raster(&inner_pts);

    // Layer 0: per-point intersection of the kappa-widened boundary raster
    // with the full raster. The counter always follows the per-point form.
    let zero_parts = zero_pts
        .par_iter()
        .map(|p| {
            let img = euler_image(f, &p.embed(rho), h);
            let outer = rasterize(&img, alpha + kappa, rho_t, RasterMode::Boundary)
                .expect("positive alpha");
            let inner = rasterize(&img, alpha, rho_t, RasterMode::Full)
                .expect("alpha >= rho~/2 by construction");
            let mut isect = DigitalSet::new(rho_t, dim);
            for q in inner.iter() {
                if outer.contains(q) {
                    isect.insert(q.clone());
                }
            }
            let c = isect.len() as u64;
            (isect, outer, inner, c)
        })
        .collect::<Vec<_>>();

    let mut c_f = c_w1 + c_w0m1;
    let mut w00 = DigitalSet::new(rho_t, dim);
    #[cfg(feature = "w00-global-intersection")]
    let mut w00_outer = DigitalSet::new(rho_t, dim);
    #[cfg(feature = "w00-global-intersection")]
    let mut w00_inner = DigitalSet::new(rho_t, dim);
    for part in zero_parts {
        c_f += part.3;
        #[cfg(not(feature = "w00-global-intersection"))]
        {
            w00.extend_from(&part.0);
            let _ = (&part.1, &part.2);
        }
        #[cfg(feature = "w00-global-intersection")]
        {
            let _ = part.0;
            w00_outer.extend_from(&part.1);
            w00_inner.extend_from(&part.2);
        }
    }
    #[cfg(feature = "w00-global-intersection")]
    {
        for q in w00_inner.iter() {
            if w00_outer.contains(q) {
                w00.insert(q.clone());
            }
        }
    }
    timings.raster_ms += start.elapsed().as_secs_f64() * 1e3;

    // Exact adjacency filters: dist(x, S) = rho~ means x is outside S with a
    // one-step neighbor inside it; the distance to an empty S is infinite.
    let start = Instant::now();
    let offsets = neighbor_offsets(dim);
    let mut support = w00;
    support.extend_from(&w0m1);

    let mut d1_new = DigitalSet::new(rho_t, dim);
    for p in w1.iter() {
        if support.contains(p) {
            continue;
        }
        if offsets.iter().any(|off| support.contains(&p.offset(off))) {
            d1_new.insert(p.clone());
        }
    }
    let mut d0_new = DigitalSet::new(rho_t, dim);
    for p in support.iter() {
        if offsets.iter().any(|off| d1_new.contains(&p.offset(off))) {
            d0_new.insert(p.clone());
        }
    }
    timings.filter_ms += start.elapsed().as_secs_f64() * 1e3;

    let pair_t = BoundaryPair::new(d0_new, d1_new)?;
    let counters = StepCounters { c_r, c_f };
    if rho_next.get() > rho.get() * (1.0 + 1e-12) {
        let start = Instant::now();
        let coarse = restrict_pair(&pair_t, rho_next)?;
        timings.restrict_ms += start.elapsed().as_secs_f64() * 1e3;
        Ok((coarse, counters))
    } else {
        Ok((pair_t, counters))
    }
}

/// The result of a boundary-tracked run: the boundary pairs at every node,
/// the per-step counters, the terminal fan size, and the surrogate splines.
#[derive(Clone, Debug)]
pub struct TrackRun {
    pub pairs: Vec<BoundaryPair>,
    pub counters: Vec<StepCounters>,
    pub terminal_c_r: u64,
    pub splines: SurrogateSplines,
    pub timings: PhaseTimings,
}

/// Runs the boundary recursion over a whole discretization: trace the
/// projected initial set, apply the boundary step at every node, convert the
/// counters into surrogate surface areas
/// `v_R_k = c_R_k rho_k^{d_R} / 4` and
/// `v_F_k = rho~^{d_F+1} / (h^{d_F} sigma(h, rho_k)) * c_F_k / c_R_k`,
/// extend the last `v_F` node flat, and interpolate both sequences linearly.
pub fn track_run(f: &RhsModel, x0: &dyn ConvexSet, delta: &Discretization) -> Result<TrackRun> {
    let n = delta.n();
    let l = f.lipschitz();
    let d_r = f.d_r() as i32;
    let d_f = f.d_f() as i32;
    let mut timings = PhaseTimings::default();

    let start = Instant::now();
    let rho0 = Resolution::new(delta.rho()[0])?;
    let initial = rasterize(x0, rho0.get() / 2.0, rho0, RasterMode::Full)?;
    timings.raster_ms += start.elapsed().as_secs_f64() * 1e3;

    let mut pairs = vec![trace(&initial)?];
    let mut counters = Vec::with_capacity(n);
    let mut nodes: Vec<(f64, f64, f64)> = Vec::with_capacity(n + 1);

    for k in 0..n {
        let h = delta.h()[k];
        let rho_k = delta.rho()[k];
        let rho_next = Resolution::new(delta.rho()[k + 1])?;
        let (next, c) = psi_step_timed(f, &pairs[k], h, rho_next, &mut timings)?;

        let rho_t = rho_k.min(rho_next.get());
        let v_r = 0.25 * c.c_r as f64 * rho_k.powi(d_r);
        let v_f = rho_t.powi(d_f + 1) / (h.powi(d_f) * sigma_of(l, h, rho_k)?)
            * (c.c_f as f64 / c.c_r as f64);
        nodes.push((delta.t()[k], v_r, v_f));

        counters.push(c);
        pairs.push(next);
    }

    let terminal_c_r = expand_pair(&pairs[n]).total();
    let v_r_terminal = 0.25 * terminal_c_r as f64 * delta.rho()[n].powi(d_r);
    let v_f_terminal = nodes[n - 1].2;
    nodes.push((delta.t()[n], v_r_terminal, v_f_terminal));

    Ok(TrackRun {
        pairs,
        counters,
        terminal_c_r,
        splines: SurrogateSplines::new(nodes)?,
        timings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{AffineForm, AffineIntervalBoxMap};
    use crate::grid::IntervalBox;
    use crate::scheme::{full_euler_run, full_euler_step};
    use crate::testutil::{random_connected_set, Rng};
    use crate::topology::reconstruct;

    fn res(r: f64) -> Resolution {
        Resolution::new(r).unwrap()
    }

    fn simp7_model(l: f64) -> RhsModel {
        let map = AffineIntervalBoxMap::new(vec![
            (
                AffineForm::new(vec![0.9 * l, 0.0], 0.0),
                AffineForm::new(vec![l, 0.0], 0.0),
            ),
            (
                AffineForm::new(vec![0.0, 0.9 * l], 0.0),
                AffineForm::new(vec![0.0, l], 0.0),
            ),
        ])
        .unwrap();
        RhsModel::new(map, l, l * l.exp(), 2, 2).unwrap()
    }

    fn bp_model() -> RhsModel {
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
        ])
        .unwrap();
        RhsModel::new(map, pi, pi * pi, 2, 2).unwrap()
    }

    fn random_box_model(rng: &mut Rng, with_degenerate_row: bool) -> RhsModel {
        let l = 0.4 + 1.2 * rng.gen_f64();
        let mut rows = Vec::new();
        for i in 0..2 {
            // forms with |coefficients| <= l/2 each keep F an l-Lipschitz map
            let a = AffineForm::new(
                vec![
                    rng.gen_range_f64(-0.5, 0.5) * l,
                    rng.gen_range_f64(-0.5, 0.5) * l,
                ],
                rng.gen_range_f64(-0.3, 0.3),
            );
            let b = if with_degenerate_row && i == 0 {
                a.clone()
            } else {
                AffineForm::new(
                    vec![
                        rng.gen_range_f64(-0.5, 0.5) * l,
                        rng.gen_range_f64(-0.5, 0.5) * l,
                    ],
                    rng.gen_range_f64(-0.3, 0.3),
                )
            };
            rows.push((a, b));
        }
        let map = AffineIntervalBoxMap::new(rows).unwrap();
        RhsModel::new(map, l, 4.0, 2, 2).unwrap()
    }

    #[test]
    fn spline_examples() {
        let s = LinearSpline::new(&[(0.0, 1.0), (1.0, 1.0)]).unwrap();
        assert_eq!(s.value(0.37).unwrap(), 1.0);
        let s = LinearSpline::new(&[(0.0, 0.5), (1.0, 1.5)]).unwrap();
        assert_eq!(s.value(0.5).unwrap(), 1.0);
        let s = LinearSpline::new(&[(0.0, 2.0), (0.5, 4.0), (1.0, 3.0)]).unwrap();
        assert_eq!(s.value(0.75).unwrap(), 3.5);
        assert_eq!(s.value(0.5).unwrap(), 4.0);
        assert!(matches!(s.value(1.5), Err(Error::SplineDomain { .. })));
        assert!(LinearSpline::new(&[(0.0, 1.0), (0.0, 2.0)]).is_err());
        assert!(LinearSpline::new(&[(0.0, 0.0), (1.0, 2.0)]).is_err());
    }

    #[test]
    fn psi_equals_lifted_full_step_on_examples() {
        // stationary dynamics, tiny h: boundary of a plate maps to the
        // boundary of the plate's projection
        let zero =
            RhsModel::new(AffineIntervalBoxMap::constant(&[0.0, 0.0]), 1.0, 1.0, 2, 2).unwrap();
        let rho = 0.5;
        let m = random_connected_set(&mut Rng::new(1), res(rho), 2, 25);
        let d = trace(&m).unwrap();
        let (got, _) = psi_step(&zero, &d, 0.01, res(rho)).unwrap();
        let want = trace(&full_euler_step(&zero, &m, 0.01, res(rho)).unwrap()).unwrap();
        assert_eq!(got, want);
    }

    #[test]
    fn psi_equals_lifted_full_step_randomized() {
        let mut rng = Rng::new(0xabc0_0001);
        for case in 0..42 {
            // every few cases exercise a flat first coordinate of F
            let f = random_box_model(&mut rng, case % 7 == 3);
            let l = f.lipschitz();
            let rho = 0.1 + 0.3 * rng.gen_f64();
            let m = random_connected_set(&mut rng, res(rho), 2, 120);
            let d = trace(&m).unwrap();
            let h = (0.2 + 0.8 * rng.gen_f64()) / (4.0 * l);
            // refining ratios need not be reciprocal integers; coarsening
            // ratios any integer >= 2
            let rho_next = match case % 6 {
                0 => rho,
                1 => rho / 4.0,
                2 => rho / 3.0,
                3 => 2.0 * rho,
                4 => 3.0 * rho,
                _ => 4.0 * rho,
            };
            let (got, counters) = psi_step(&f, &d, h, res(rho_next)).unwrap();
            let want = trace(&full_euler_step(&f, &m, h, res(rho_next)).unwrap()).unwrap();
            assert_eq!(got, want, "case {case}");
            assert_eq!(counters.c_r, expand_pair(&d).total());
            assert!(counters.c_f >= 1);
            // the output is a genuine trace image of a chain-connected set
            let rec = reconstruct(&got).unwrap();
            assert!(crate::grid::is_chain_connected(&rec).unwrap());
        }
    }

    #[test]
    fn psi_equals_lifted_full_step_in_three_dimensions() {
        let mut rng = Rng::new(0xabc0_0003);
        let l = 0.8;
        let mut rows = Vec::new();
        for _ in 0..3 {
            let form = |rng: &mut Rng| {
                AffineForm::new(
                    vec![
                        rng.gen_range_f64(-0.3, 0.3) * l,
                        rng.gen_range_f64(-0.3, 0.3) * l,
                        rng.gen_range_f64(-0.3, 0.3) * l,
                    ],
                    rng.gen_range_f64(-0.2, 0.2),
                )
            };
            rows.push((form(&mut rng), form(&mut rng)));
        }
        let f = RhsModel::new(AffineIntervalBoxMap::new(rows).unwrap(), l, 2.0, 3, 3).unwrap();
        let rho = 0.25;
        for ratio in [1.0, 0.25, 4.0] {
            let m = random_connected_set(&mut rng, res(rho), 3, 50);
            let d = trace(&m).unwrap();
            let h = 0.8 / (4.0 * l);
            let (got, _) = psi_step(&f, &d, h, res(rho * ratio)).unwrap();
            let want = trace(&full_euler_step(&f, &m, h, res(rho * ratio)).unwrap()).unwrap();
            assert_eq!(got, want, "ratio {ratio}");
        }
    }

    #[test]
    fn psi_coarsening_is_restriction_of_fine_result() {
        let f = simp7_model(1.0);
        let rho = 0.05;
        let m = DigitalSet::from_points(res(rho), 2, [crate::grid::GridPoint::new(&[20, 20])])
            .unwrap();
        let d = trace(&m).unwrap();
        let (coarse, _) = psi_step(&f, &d, 0.25, res(4.0 * rho)).unwrap();
        let (fine, _) = psi_step(&f, &d, 0.25, res(rho)).unwrap();
        assert_eq!(coarse, restrict_pair(&fine, res(4.0 * rho)).unwrap());
    }

    #[test]
    fn psi_validates_step_size_and_ratio() {
        let f = simp7_model(1.0);
        let m = random_connected_set(&mut Rng::new(2), res(0.25), 2, 10);
        let d = trace(&m).unwrap();
        assert!(matches!(
            psi_step(&f, &d, 0.3, res(0.25)),
            Err(Error::StepOutOfRange { .. })
        ));
        assert!(matches!(
            psi_step(&f, &d, 0.25, res(0.6)),
            Err(Error::BadRatio { .. })
        ));
    }

    #[test]
    fn track_run_matches_full_run_step_by_step() {
        for f in [simp7_model(1.0), bp_model()] {
            let l = f.lipschitz();
            let p = f.bound();
            let delta = Discretization::uniform_initial(l, p, 1.0).unwrap();
            let x0 = if l > 3.0 {
                IntervalBox::point(&[-1.0, 0.0])
            } else {
                IntervalBox::point(&[1.0, 1.0])
            };
            let run = track_run(&f, &x0, &delta).unwrap();
            let sets = full_euler_run(&f, &x0, &delta).unwrap();
            assert_eq!(run.pairs.len(), sets.len());
            for (pair, set) in run.pairs.iter().zip(sets.iter()) {
                assert_eq!(pair, &trace(set).unwrap());
                assert_eq!(&reconstruct(pair).unwrap(), set);
            }
        }
    }

    #[test]
    fn stationary_dynamics_give_constant_v_r() {
        let zero =
            RhsModel::new(AffineIntervalBoxMap::constant(&[0.0, 0.0]), 1.0, 1.0, 2, 2).unwrap();
        let delta = Discretization::uniform(5, 1.0, 1.0, 1.0).unwrap();
        let rho0 = delta.rho()[0];
        let x0 = IntervalBox::new(vec![0.0, 0.0], vec![6.0 * rho0, 4.0 * rho0]).unwrap();
        let run = track_run(&zero, &x0, &delta).unwrap();
        let first = run.splines.nodes[0].1;
        for (_, v_r, _) in &run.splines.nodes {
            assert_eq!(*v_r, first);
        }
    }
}
