//! Shared helpers for the integration suites: a deterministic RNG, random
//! problem generators, and independent oracle computations that deliberately
//! avoid the code paths they are used to check.

#![allow(dead_code)]

use reachtrack_core::dynamics::{
    alpha_of, kappa_of, phi, AffineForm, AffineIntervalBoxMap, RhsModel,
};
use reachtrack_core::grid::{DigitalSet, GridPoint, RasterMode, Resolution};
use reachtrack_core::scheme::Discretization;
use reachtrack_core::topology::boundary_layers;

/// splitmix64; stable across platforms and releases.
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    pub fn gen_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn gen_range_f64(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.gen_f64()
    }

    pub fn gen_range(&mut self, lo: usize, hi: usize) -> usize {
        lo + (self.next_u64() as usize) % (hi - lo)
    }
}

/// Chain-connected digital set grown by a random walk from the origin.
pub fn random_connected_set(
    rng: &mut Rng,
    rho: Resolution,
    dim: usize,
    max_points: usize,
) -> DigitalSet {
    let mut set = DigitalSet::new(rho, dim);
    let origin = GridPoint::new(&vec![0i64; dim]);
    set.insert(origin.clone());
    let mut members = vec![origin];
    let target = 1 + rng.gen_range(0, max_points);
    while set.len() < target {
        let base = members[rng.gen_range(0, members.len())].clone();
        let mut coords: Vec<i64> = base.coords().to_vec();
        let mut moved = false;
        for c in coords.iter_mut() {
            let step = rng.gen_range(0, 3) as i64 - 1;
            *c += step;
            moved |= step != 0;
        }
        if !moved {
            continue;
        }
        let next = GridPoint::new(&coords);
        if !set.contains(&next) {
            set.insert(next.clone());
            members.push(next);
        }
    }
    set
}

/// Box-valued right-hand side with random affine coefficients whose row
/// coefficient magnitudes stay below `l/2`, keeping the map `l`-Lipschitz.
pub fn random_box_model(rng: &mut Rng, dim: usize) -> RhsModel {
    let l = 0.4 + 1.2 * rng.gen_f64();
    let mut rows = Vec::new();
    for _ in 0..dim {
        let form = |rng: &mut Rng| {
            AffineForm::new(
                (0..dim)
                    .map(|_| rng.gen_range_f64(-0.5, 0.5) * l)
                    .collect(),
                rng.gen_range_f64(-0.3, 0.3),
            )
        };
        rows.push((form(rng), form(rng)));
    }
    let map = AffineIntervalBoxMap::new(rows).unwrap();
    RhsModel::new(map, l, 4.0, dim, dim).unwrap()
}

/// Random admissible discretization: the coarsest admissible uniform tuple
/// for random constants, refined by a few random subdivisions (the rule
/// preserves admissibility).
pub fn random_admissible(
    rng: &mut Rng,
    max_subdivisions: usize,
) -> (Discretization, f64, f64, f64) {
    let l = rng.gen_range_f64(0.5, 2.0);
    let horizon = rng.gen_range_f64(0.5, 1.0);
    let p = rng.gen_range_f64(0.5, 3.0);
    let mut delta = Discretization::uniform_initial(l, p, horizon).unwrap();
    for _ in 0..rng.gen_range(0, max_subdivisions + 1) {
        let j = rng.gen_range(0, delta.n() + 1);
        delta = reachtrack_core::refine::subdivide(&delta, j).unwrap();
    }
    (delta, l, p, horizon)
}

/// Independent recomputation of the exact per-step cost from the full
/// reachable sets: layer sizes come from `boundary_layers` on the full set
/// (not from pair expansion) and every projection is re-rasterized here.
pub fn exact_cost_from_full_sets(
    f: &RhsModel,
    sets: &[DigitalSet],
    delta: &Discretization,
) -> Vec<u64> {
    let l = f.lipschitz();
    let mut out = Vec::with_capacity(delta.n());
    for k in 0..delta.n() {
        let h = delta.h()[k];
        let rho_k = delta.rho()[k];
        let rho_t = Resolution::new(rho_k.min(delta.rho()[k + 1])).unwrap();
        let alpha = alpha_of(l, h, rho_k);
        let kappa = kappa_of(l, h, rho_k).unwrap();
        let layers = boundary_layers(&sets[k], -1, 2).unwrap();
        let rho = sets[k].rho();

        let mut total = 0u64;
        for j in [-1i32, 1, 2] {
            for x in layers[&j].iter() {
                let plate = phi(f, &x.embed(rho), h, rho_t, alpha, RasterMode::Boundary).unwrap();
                total += plate.len() as u64;
            }
        }
        for x in layers[&0].iter() {
            let outer =
                phi(f, &x.embed(rho), h, rho_t, alpha + kappa, RasterMode::Boundary).unwrap();
            let inner = phi(f, &x.embed(rho), h, rho_t, alpha, RasterMode::Full).unwrap();
            let mut isect = 0u64;
            for q in inner.iter() {
                if outer.contains(q) {
                    isect += 1;
                }
            }
            total += isect;
        }
        out.push(total);
    }
    out
}
