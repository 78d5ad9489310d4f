//! Boundary layers of digital images, the trace map and its boundary-pair
//! representation, local expansion to the four-layer fan, set reconstruction,
//! and restriction between nested grids.
//!
//! A digital image is uniquely encoded by the pair of its innermost boundary
//! layer and the first exterior layer; the maps here move between the two
//! representations and across resolutions. Distance conventions: layer `j`
//! collects points at lattice distance exactly `|j| * rho` from layer 0,
//! inside the set for `j < 0` and outside for `j > 0`, and the distance to the
//! empty set is infinite.

use crate::error::{Error, Result};
use crate::grid::{neighbor_offsets, DigitalSet, GridPoint, Resolution};
use std::collections::BTreeMap;

/// The pair `(layer 0, layer 1)` of a digital image; uniquely encodes the set.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryPair {
    d0: DigitalSet,
    d1: DigitalSet,
}

impl BoundaryPair {
    /// Validates the cheap local invariants: matching grids, `d0` nonempty,
    /// disjointness, and every `d1` point one lattice step from `d0`.
    ///
    /// Membership in the image of the trace map is not decided here; it is
    /// the contract of [`reconstruct`], which fails on pairs outside it.
    pub fn new(d0: DigitalSet, d1: DigitalSet) -> Result<Self> {
        if d0.dim() != d1.dim() {
            return Err(Error::DimensionMismatch(d0.dim(), d1.dim()));
        }
        if d0.rho() != d1.rho() {
            return Err(Error::InvalidPair(format!(
                "layer resolutions differ: {} vs {}",
                d0.rho().get(),
                d1.rho().get()
            )));
        }
        if d0.is_empty() {
            return Err(Error::InvalidPair("layer 0 must be nonempty".into()));
        }
        for p in d1.iter() {
            if d0.contains(p) {
                return Err(Error::InvalidPair("layers 0 and 1 overlap".into()));
            }
        }
        let offsets = neighbor_offsets(d0.dim());
        for p in d1.iter() {
            let adjacent = offsets.iter().any(|off| d0.contains(&p.offset(off)));
            if !adjacent {
                return Err(Error::InvalidPair(format!(
                    "layer-1 point {:?} is not one step from layer 0",
                    p.coords()
                )));
            }
        }
        Ok(BoundaryPair { d0, d1 })
    }

    pub(crate) fn new_unchecked(d0: DigitalSet, d1: DigitalSet) -> Self {
        debug_assert!(!d0.is_empty());
        BoundaryPair { d0, d1 }
    }

    pub fn d0(&self) -> &DigitalSet {
        &self.d0
    }

    pub fn d1(&self) -> &DigitalSet {
        &self.d1
    }

    pub fn rho(&self) -> Resolution {
        self.d0.rho()
    }

    pub fn dim(&self) -> usize {
        self.d0.dim()
    }
}

/// Layers -1, 0, 1, 2 of one underlying set; the outer two may be empty.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerFan {
    pub dm1: DigitalSet,
    pub d0: DigitalSet,
    pub d1: DigitalSet,
    pub d2: DigitalSet,
}

impl LayerFan {
    /// Total number of points over the four layers.
    pub fn total(&self) -> u64 {
        (self.dm1.len() + self.d0.len() + self.d1.len() + self.d2.len()) as u64
    }
}

fn layer_zero(m: &DigitalSet) -> DigitalSet {
    let offsets = neighbor_offsets(m.dim());
    let mut d0 = DigitalSet::new(m.rho(), m.dim());
    for p in m.iter() {
        if offsets.iter().any(|off| !m.contains(&p.offset(off))) {
            d0.insert(p.clone());
        }
    }
    d0
}

/// One Chebyshev dilation step: points at lattice distance exactly one from
/// `core`, excluding `core` itself.
fn dilate_ring(core: &DigitalSet) -> DigitalSet {
    let offsets = neighbor_offsets(core.dim());
    let mut ring = DigitalSet::new(core.rho(), core.dim());
    for p in core.iter() {
        for off in &offsets {
            let q = p.offset(off);
            if !core.contains(&q) {
                ring.insert(q);
            }
        }
    }
    ring
}

/// Boundary layers of `m` for `j` in `[j_min, j_max] ⊆ [-2, 2]`, keyed by `j`.
/// Layer 0 consists of set points with an exterior lattice neighbor; positive
/// layers expand outward from it, negative layers inward.
pub fn boundary_layers(
    m: &DigitalSet,
    j_min: i32,
    j_max: i32,
) -> Result<BTreeMap<i32, DigitalSet>> {
    if m.is_empty() {
        return Err(Error::EmptySet);
    }
    if j_min > j_max || j_min < -2 || j_max > 2 {
        return Err(Error::LayerRange(j_min, j_max));
    }
    let d0 = layer_zero(m);
    debug_assert!(!d0.is_empty(), "finite nonempty sets always have a boundary");

    let mut out = BTreeMap::new();
    let need_dist_1 = j_min <= -1 || j_max >= 1;
    let need_dist_2 = j_min <= -2 || j_max >= 2;

    let ring1 = if need_dist_1 {
        Some(dilate_ring(&d0))
    } else {
        None
    };
    let ring2 = if need_dist_2 {
        let r1 = ring1.as_ref().unwrap();
        let mut hull = d0.clone();
        hull.extend_from(r1);
        Some(dilate_ring(&hull))
    } else {
        None
    };

    for j in j_min..=j_max {
        let layer = match j {
            0 => d0.clone(),
            1 | -1 => {
                let r1 = ring1.as_ref().unwrap();
                let mut s = DigitalSet::new(m.rho(), m.dim());
                for p in r1.iter() {
                    if m.contains(p) == (j < 0) {
                        s.insert(p.clone());
                    }
                }
                s
            }
            2 | -2 => {
                let r2 = ring2.as_ref().unwrap();
                let mut s = DigitalSet::new(m.rho(), m.dim());
                for p in r2.iter() {
                    if m.contains(p) == (j < 0) {
                        s.insert(p.clone());
                    }
                }
                s
            }
            _ => unreachable!(),
        };
        out.insert(j, layer);
    }
    Ok(out)
}

/// The boundary pair `(layer 0, layer 1)` of a nonempty digital image.
pub fn trace(m: &DigitalSet) -> Result<BoundaryPair> {
    if m.is_empty() {
        return Err(Error::EmptySet);
    }
    let d0 = layer_zero(m);
    let ring1 = dilate_ring(&d0);
    let mut d1 = DigitalSet::new(m.rho(), m.dim());
    for p in ring1.iter() {
        if !m.contains(p) {
            d1.insert(p.clone());
        }
    }
    Ok(BoundaryPair::new_unchecked(d0, d1))
}

/// Layers -1 and 2 by local neighbor search, without reconstructing the set.
///
/// Layer -1 is the set of lattice neighbors of layer 0 lying in neither
/// layer 0 nor 1; layer 2 collects neighbors of layer 1 outside the first
/// three layers.
pub fn expand_pair(d: &BoundaryPair) -> LayerFan {
    let offsets = neighbor_offsets(d.dim());
    let mut dm1 = DigitalSet::new(d.rho(), d.dim());
    for p in d.d0().iter() {
        for off in &offsets {
            let q = p.offset(off);
            if !d.d0().contains(&q) && !d.d1().contains(&q) {
                dm1.insert(q);
            }
        }
    }
    let mut d2 = DigitalSet::new(d.rho(), d.dim());
    for p in d.d1().iter() {
        for off in &offsets {
            let q = p.offset(off);
            if !d.d0().contains(&q) && !d.d1().contains(&q) && !dm1.contains(&q) {
                d2.insert(q);
            }
        }
    }
    LayerFan {
        dm1,
        d0: d.d0().clone(),
        d1: d.d1().clone(),
        d2,
    }
}

/// The unique set whose trace is `d`, by flood fill inward from layer 0 with
/// layer 1 as the exterior marker.
///
/// The fill is confined to the index bounds of layer 0 (every extremal point
/// of a set belongs to its layer 0); escaping them, or reproducing a
/// different trace, means the pair is not the trace of any set.
pub fn reconstruct(d: &BoundaryPair) -> Result<DigitalSet> {
    let offsets = neighbor_offsets(d.dim());
    let (lo, hi) = d
        .d0()
        .index_bounds()
        .expect("layer 0 of a valid pair is nonempty");

    let mut m = d.d0().clone();
    let mut stack: Vec<GridPoint> = m.iter().cloned().collect();
    while let Some(p) = stack.pop() {
        for off in &offsets {
            let q = p.offset(off);
            if m.contains(&q) || d.d1().contains(&q) {
                continue;
            }
            let inside = q
                .coords()
                .iter()
                .enumerate()
                .all(|(i, &c)| lo[i] <= c && c <= hi[i]);
            if !inside {
                return Err(Error::InvalidPair(
                    "fill escaped the hull of layer 0; pair is not a trace image".into(),
                ));
            }
            m.insert(q.clone());
            stack.push(q);
        }
    }

    let check = trace(&m)?;
    if check.d0() != d.d0() || check.d1() != d.d1() {
        return Err(Error::InvalidPair(
            "pair is not the trace of its fill".into(),
        ));
    }
    Ok(m)
}

fn coarse_ratio(rho_fine: Resolution, rho_coarse: Resolution) -> Result<i64> {
    let ratio = rho_coarse.get() / rho_fine.get();
    let k = ratio.round();
    if (ratio - k).abs() > 1e-12 * ratio || k < 2.0 {
        return Err(Error::BadRatio {
            ratio,
            reason: "restriction requires an integer ratio >= 2",
        });
    }
    Ok(k as i64)
}

fn div_floor(a: i64, b: i64) -> i64 {
    let (q, r) = (a / b, a % b);
    if r != 0 && (r < 0) != (b < 0) {
        q - 1
    } else {
        q
    }
}

fn div_ceil(a: i64, b: i64) -> i64 {
    let (q, r) = (a / b, a % b);
    if r != 0 && (r < 0) == (b < 0) {
        q + 1
    } else {
        q
    }
}

/// Coarse lattice points within half a coarse step of `m`, in exact integer
/// arithmetic: coarse index `c` is kept iff `2 * |r*c - k| <= r` holds
/// componentwise for some `k` in `m`, where `r` is the grid ratio.
pub fn restrict(m: &DigitalSet, rho_coarse: Resolution) -> Result<DigitalSet> {
    if m.is_empty() {
        return Err(Error::EmptySet);
    }
    let r = coarse_ratio(m.rho(), rho_coarse)?;
    let dim = m.dim();
    let mut out = DigitalSet::new(rho_coarse, dim);
    let mut lo = vec![0i64; dim];
    let mut hi = vec![0i64; dim];
    for p in m.iter() {
        for (i, &k) in p.coords().iter().enumerate() {
            lo[i] = div_ceil(2 * k - r, 2 * r);
            hi[i] = div_floor(2 * k + r, 2 * r);
        }
        let mut idx = lo.clone();
        'odometer: loop {
            out.insert(GridPoint::new(&idx));
            let mut i = dim;
            loop {
                if i == 0 {
                    break 'odometer;
                }
                i -= 1;
                if idx[i] < hi[i] {
                    idx[i] += 1;
                    break;
                }
                idx[i] = lo[i];
            }
        }
    }
    Ok(out)
}

/// Restriction lifted to boundary pairs: the trace of the restriction of the
/// reconstructed set. The composition is the defining identity; a local
/// reconstruction-free variant would have to match it bit for bit.
pub fn restrict_pair(d: &BoundaryPair, rho_coarse: Resolution) -> Result<BoundaryPair> {
    let m = reconstruct(d)?;
    let coarse = restrict(&m, rho_coarse)?;
    trace(&coarse)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{hausdorff_digital, is_chain_connected};
    use crate::testutil::{random_connected_set, Rng};

    fn res(r: f64) -> Resolution {
        Resolution::new(r).unwrap()
    }

    fn set2(rho: f64, pts: &[[i64; 2]]) -> DigitalSet {
        DigitalSet::from_points(res(rho), 2, pts.iter().map(|c| GridPoint::new(c))).unwrap()
    }

    /// Definition-level oracle: distances to layer 0 by scanning a window.
    fn layers_oracle(m: &DigitalSet, j: i32) -> DigitalSet {
        let offsets = neighbor_offsets(m.dim());
        let mut d0 = DigitalSet::new(m.rho(), m.dim());
        for p in m.iter() {
            if offsets.iter().any(|off| !m.contains(&p.offset(off))) {
                d0.insert(p.clone());
            }
        }
        if j == 0 {
            return d0;
        }
        let (lo, hi) = m.index_bounds().unwrap();
        let pad = 3i64;
        let mut out = DigitalSet::new(m.rho(), m.dim());
        let mut idx: Vec<i64> = lo.iter().map(|c| c - pad).collect();
        let hi_i: Vec<i64> = hi.iter().map(|c| c + pad).collect();
        let lo_i = idx.clone();
        loop {
            let p = GridPoint::new(&idx);
            let dist = d0.iter().map(|q| q.index_dist(&p)).min().unwrap();
            let inside = m.contains(&p);
            if dist == j.unsigned_abs() as u64 && inside == (j < 0) {
                out.insert(p);
            }
            let mut i = idx.len();
            let mut done = true;
            while i > 0 {
                i -= 1;
                if idx[i] < hi_i[i] {
                    idx[i] += 1;
                    done = false;
                    break;
                }
                idx[i] = lo_i[i];
            }
            if done {
                return out;
            }
        }
    }

    #[test]
    fn layers_of_singleton() {
        let m = set2(1.0, &[[0, 0]]);
        let layers = boundary_layers(&m, -1, 2).unwrap();
        assert_eq!(layers[&0], layers_oracle(&m, 0));
        assert_eq!(layers[&0].len(), 1);
        assert_eq!(layers[&1], layers_oracle(&m, 1));
        assert_eq!(layers[&1].len(), 8);
        assert!(layers[&-1].is_empty());
        assert_eq!(layers[&2].len(), 16);
    }

    #[test]
    fn layers_of_three_by_three() {
        let mut pts = vec![];
        for x in -1..=1 {
            for y in -1..=1 {
                pts.push([x, y]);
            }
        }
        let m = set2(1.0, &pts);
        let layers = boundary_layers(&m, -2, 2).unwrap();
        for j in -2..=2 {
            assert_eq!(layers[&j], layers_oracle(&m, j), "layer {j}");
        }
        assert_eq!(layers[&0].len(), 8);
        assert_eq!(layers[&-1].len(), 1);
        assert_eq!(layers[&1].len(), 16);
        assert_eq!(layers[&2].len(), 24);
        assert!(layers[&-2].is_empty());
    }

    #[test]
    fn layer_contract_errors() {
        let m = set2(1.0, &[[0, 0]]);
        assert!(matches!(
            boundary_layers(&m, -3, 2),
            Err(Error::LayerRange(-3, 2))
        ));
        assert!(matches!(
            boundary_layers(&DigitalSet::new(res(1.0), 2), 0, 1),
            Err(Error::EmptySet)
        ));
    }

    #[test]
    fn trace_examples() {
        let m = set2(1.0, &[[0, 0]]);
        let pair = trace(&m).unwrap();
        assert_eq!(pair.d0(), &layers_oracle(&m, 0));
        assert_eq!(pair.d1(), &layers_oracle(&m, 1));

        // two far-apart points: still a digital image, not chain-connected
        let m = set2(1.0, &[[0, 0], [5, 5]]);
        let pair = trace(&m).unwrap();
        assert_eq!(pair.d0().len(), 2);
        assert_eq!(pair.d1().len(), 16);
        assert_eq!(pair.d1(), &layers_oracle(&m, 1));
    }

    #[test]
    fn expand_pair_matches_layer_oracle() {
        for pts in [
            vec![[0i64, 0i64]],
            vec![[-1, 0], [0, 0], [1, 0]],
            (-1..=1)
                .flat_map(|x| (-1..=1).map(move |y| [x, y]))
                .collect::<Vec<_>>(),
        ] {
            let m = set2(1.0, &pts);
            let fan = expand_pair(&trace(&m).unwrap());
            assert_eq!(fan.dm1, layers_oracle(&m, -1));
            assert_eq!(fan.d2, layers_oracle(&m, 2));
        }
    }

    #[test]
    fn expand_pair_matches_layers_on_random_sets() {
        let mut rng = Rng::new(0x70b0_0001);
        for (dim, size) in [(2usize, 80), (3, 80), (2, 5000)] {
            let rounds = if size > 1000 { 2 } else { 12 };
            for _ in 0..rounds {
                let m = random_connected_set(&mut rng, res(1.0), dim, size);
                let fan = expand_pair(&trace(&m).unwrap());
                let layers = boundary_layers(&m, -1, 2).unwrap();
                assert_eq!(fan.dm1, layers[&-1]);
                assert_eq!(fan.d0, layers[&0]);
                assert_eq!(fan.d1, layers[&1]);
                assert_eq!(fan.d2, layers[&2]);
            }
        }
    }

    #[test]
    fn reconstruct_round_trip() {
        let mut pts = vec![];
        for x in -1..=1i64 {
            for y in -1..=1i64 {
                pts.push([x, y]);
            }
        }
        for m in [set2(1.0, &[[0, 0]]), set2(1.0, &pts)] {
            let pair = trace(&m).unwrap();
            assert_eq!(reconstruct(&pair).unwrap(), m);
        }
    }

    #[test]
    fn reconstruct_round_trip_random_including_holes() {
        let mut rng = Rng::new(0x70b0_0002);
        for _ in 0..25 {
            let m = random_connected_set(&mut rng, res(0.25), 2, 200);
            let pair = trace(&m).unwrap();
            assert_eq!(reconstruct(&pair).unwrap(), m);
        }
        // a ring with a hole: the fill must not leak into the cavity
        let mut pts = vec![];
        for x in -2..=2i64 {
            for y in -2..=2i64 {
                if x.abs() == 2 || y.abs() == 2 {
                    pts.push([x, y]);
                }
            }
        }
        let ring = set2(1.0, &pts);
        let pair = trace(&ring).unwrap();
        assert_eq!(reconstruct(&pair).unwrap(), ring);
    }

    #[test]
    fn reconstruct_rejects_invalid_pair() {
        let d0 = set2(1.0, &[[0, 0]]);
        let d1 = DigitalSet::new(res(1.0), 2);
        let pair = BoundaryPair::new(d0, d1).unwrap();
        assert!(matches!(reconstruct(&pair), Err(Error::InvalidPair(_))));
    }

    #[test]
    fn restrict_examples() {
        let m = set2(1.0, &[[0, 0], [1, 0]]);
        let got = restrict(&m, res(2.0)).unwrap();
        assert_eq!(got, set2(2.0, &[[0, 0], [1, 0]]));

        let m = set2(1.0, &[[0, 0]]);
        let got = restrict(&m, res(4.0)).unwrap();
        assert_eq!(got, set2(4.0, &[[0, 0]]));

        assert!(matches!(
            restrict(&m, res(1.5)),
            Err(Error::BadRatio { .. })
        ));
        assert!(matches!(restrict(&m, res(1.0)), Err(Error::BadRatio { .. })));
    }

    #[test]
    fn restrict_hausdorff_and_connectivity() {
        let mut rng = Rng::new(0x70b0_0003);
        for _ in 0..20 {
            let m = random_connected_set(&mut rng, res(0.5), 2, 120);
            for r in [2.0, 3.0, 4.0] {
                let coarse = restrict(&m, res(0.5 * r)).unwrap();
                let d = hausdorff_digital(&coarse, &m).unwrap();
                assert!(d <= 0.5 * r / 2.0, "dist {d} exceeds rho'/2 = {}", 0.25 * r);
                assert!(is_chain_connected(&coarse).unwrap());
            }
        }
    }

    #[test]
    fn restrict_pair_is_the_composition() {
        let mut rng = Rng::new(0x70b0_0004);
        for _ in 0..10 {
            let m = random_connected_set(&mut rng, res(0.5), 2, 150);
            let pair = trace(&m).unwrap();
            for r in [2.0, 4.0] {
                let got = restrict_pair(&pair, res(0.5 * r)).unwrap();
                let want = trace(&restrict(&reconstruct(&pair).unwrap(), res(0.5 * r)).unwrap())
                    .unwrap();
                assert_eq!(got, want);
            }
        }
        // singleton with ratio 3: coarse singleton plus its 8-neighborhood
        let m = set2(1.0, &[[0, 0]]);
        let got = restrict_pair(&trace(&m).unwrap(), res(3.0)).unwrap();
        let want = trace(&set2(3.0, &[[0, 0]])).unwrap();
        assert_eq!(got, want);
        assert_eq!(got.d1().len(), 8);
    }

    #[test]
    fn restrict_pair_on_a_square() {
        let mut pts = vec![];
        for x in -5..=5i64 {
            for y in -5..=5i64 {
                pts.push([x, y]);
            }
        }
        let m = set2(1.0, &pts);
        let pair = trace(&m).unwrap();
        let got = restrict_pair(&pair, res(2.0)).unwrap();
        let want = trace(&restrict(&m, res(2.0)).unwrap()).unwrap();
        assert_eq!(got, want);
    }
}
