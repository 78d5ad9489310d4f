//! Scaled integer lattices, digital sets, the Chebyshev metric, Hausdorff
//! distance, and rasterization of convex sets.
//!
//! All distances in this crate use the max norm. A digital set stores integer
//! lattice indices only; the embedded position of an index `k` at resolution
//! `rho` is `rho * k`. Keeping indices exact makes set equality, hashing and
//! the restriction chain between nested grids immune to rounding drift.

use crate::error::{Error, Result};
use smallvec::SmallVec;
use std::collections::HashSet;

pub type Coord = i64;
pub(crate) type CoordVec = SmallVec<[Coord; 4]>;

/// Relative tolerance absorbing floating-point ties in distance comparisons.
/// Ties are common because blow-up radii are often exact multiples of rho/2.
pub(crate) const TIE_REL_TOL: f64 = 1e-9;

/// Lattice spacing of a grid `rho * Z^d`.
#[derive(Clone, Copy, PartialEq, PartialOrd, Debug)]
pub struct Resolution(f64);

impl Resolution {
    pub fn new(rho: f64) -> Result<Self> {
        if rho.is_finite() && rho > 0.0 {
            Ok(Self(rho))
        } else {
            Err(Error::InvalidResolution(rho))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

/// An integer lattice index; the embedded position is `rho * coords`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct GridPoint(CoordVec);

impl GridPoint {
    pub fn new(coords: &[Coord]) -> Self {
        GridPoint(CoordVec::from_slice(coords))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn coords(&self) -> &[Coord] {
        &self.0
    }

    /// Embedded position `rho * k`, written into `out`.
    pub fn embed_into(&self, rho: Resolution, out: &mut [f64]) {
        for (o, &c) in out.iter_mut().zip(self.0.iter()) {
            *o = rho.get() * c as f64;
        }
    }

    pub fn embed(&self, rho: Resolution) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.embed_into(rho, &mut out);
        out
    }

    /// Chebyshev distance in index units (grid steps).
    pub fn index_dist(&self, other: &GridPoint) -> u64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.abs_diff(*b))
            .max()
            .unwrap_or(0)
    }

    pub(crate) fn offset(&self, delta: &[Coord]) -> GridPoint {
        let mut c = self.0.clone();
        for (ci, di) in c.iter_mut().zip(delta.iter()) {
            *ci += di;
        }
        GridPoint(c)
    }
}

/// All `3^d - 1` one-step Chebyshev neighbor offsets.
pub(crate) fn neighbor_offsets(dim: usize) -> Vec<CoordVec> {
    let mut out = Vec::with_capacity(3usize.pow(dim as u32) - 1);
    let mut cur: CoordVec = SmallVec::from_elem(-1, dim);
    loop {
        if cur.iter().any(|&c| c != 0) {
            out.push(cur.clone());
        }
        let mut i = 0;
        loop {
            if i == dim {
                return out;
            }
            if cur[i] < 1 {
                cur[i] += 1;
                break;
            }
            cur[i] = -1;
            i += 1;
        }
    }
}

/// A finite set of lattice points at one resolution.
///
/// The empty set is representable; operations that require an element of
/// `S_rho` (nonempty sets) check emptiness explicitly.
#[derive(Clone, Debug)]
pub struct DigitalSet {
    rho: Resolution,
    dim: usize,
    points: HashSet<GridPoint>,
}

impl PartialEq for DigitalSet {
    fn eq(&self, other: &Self) -> bool {
        self.rho == other.rho && self.dim == other.dim && self.points == other.points
    }
}

impl DigitalSet {
    pub fn new(rho: Resolution, dim: usize) -> Self {
        DigitalSet {
            rho,
            dim,
            points: HashSet::new(),
        }
    }

    pub fn from_points<I>(rho: Resolution, dim: usize, points: I) -> Result<Self>
    where
        I: IntoIterator<Item = GridPoint>,
    {
        let mut set = DigitalSet::new(rho, dim);
        for p in points {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch(p.dim(), dim));
            }
            set.points.insert(p);
        }
        Ok(set)
    }

    /// Convenience constructor from raw index tuples.
    pub fn from_indices(rho: Resolution, dim: usize, indices: &[&[Coord]]) -> Result<Self> {
        Self::from_points(rho, dim, indices.iter().map(|c| GridPoint::new(c)))
    }

    #[inline]
    pub fn rho(&self) -> Resolution {
        self.rho
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn contains(&self, p: &GridPoint) -> bool {
        self.points.contains(p)
    }

    pub fn insert(&mut self, p: GridPoint) {
        debug_assert_eq!(p.dim(), self.dim);
        self.points.insert(p);
    }

    pub fn iter(&self) -> impl Iterator<Item = &GridPoint> {
        self.points.iter()
    }

    pub fn extend_from(&mut self, other: &DigitalSet) {
        debug_assert_eq!(self.dim, other.dim);
        for p in other.iter() {
            self.points.insert(p.clone());
        }
    }

    pub fn union_with(mut self, other: DigitalSet) -> DigitalSet {
        if other.points.len() > self.points.len() {
            return other.union_with(self);
        }
        self.points.extend(other.points);
        self
    }

    /// Points in lexicographic index order; the deterministic view used for
    /// serialization and golden outputs.
    pub fn sorted_points(&self) -> Vec<GridPoint> {
        let mut v: Vec<GridPoint> = self.points.iter().cloned().collect();
        v.sort();
        v
    }

    /// Componentwise index bounds, `None` for the empty set.
    pub fn index_bounds(&self) -> Option<(CoordVec, CoordVec)> {
        let mut iter = self.points.iter();
        let first = iter.next()?;
        let mut lo = first.0.clone();
        let mut hi = first.0.clone();
        for p in iter {
            for i in 0..self.dim {
                lo[i] = lo[i].min(p.0[i]);
                hi[i] = hi[i].max(p.0[i]);
            }
        }
        Some((lo, hi))
    }
}

/// Chebyshev (max) distance between two positions.
pub fn chebyshev(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(x.len(), y.len()));
    }
    Ok(chebyshev_unchecked(x, y))
}

#[inline]
pub(crate) fn chebyshev_unchecked(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// A compact convex set presented to the rasterizer through distance queries.
///
/// `dist_to_set` and `dist_to_boundary` are Chebyshev distances; they coincide
/// for exterior points, and for a degenerate (lower-dimensional) set the
/// boundary equals the set itself.
pub trait ConvexSet: Sync {
    fn dim(&self) -> usize;
    fn dist_to_set(&self, y: &[f64]) -> f64;
    fn dist_to_boundary(&self, y: &[f64]) -> f64;
    /// Axis-aligned interval product containing the set.
    fn bounding_box(&self) -> (Vec<f64>, Vec<f64>);
}

/// Axis-aligned box, possibly degenerate in some coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl IntervalBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch(lo.len(), hi.len()));
        }
        if lo.is_empty() {
            return Err(Error::InvalidOracle("box dimension must be >= 1".into()));
        }
        for i in 0..lo.len() {
            if !lo[i].is_finite() || !hi[i].is_finite() || lo[i] > hi[i] {
                return Err(Error::InvalidOracle(format!(
                    "invalid interval [{}, {}] in coordinate {}",
                    lo[i], hi[i], i
                )));
            }
        }
        Ok(IntervalBox { lo, hi })
    }

    pub fn point(x: &[f64]) -> Self {
        IntervalBox {
            lo: x.to_vec(),
            hi: x.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo.iter().zip(self.hi.iter()).any(|(a, b)| a == b)
    }

    pub fn corners(&self) -> Vec<Vec<f64>> {
        let d = self.lo.len();
        let mut out = Vec::with_capacity(1 << d);
        for mask in 0u32..(1 << d) {
            let mut c = Vec::with_capacity(d);
            for i in 0..d {
                c.push(if mask & (1 << i) != 0 {
                    self.hi[i]
                } else {
                    self.lo[i]
                });
            }
            out.push(c);
        }
        out
    }
}

impl ConvexSet for IntervalBox {
    fn dim(&self) -> usize {
        IntervalBox::dim(self)
    }

    fn dist_to_set(&self, y: &[f64]) -> f64 {
        let mut d = 0.0f64;
        for ((lo, hi), yi) in self.lo.iter().zip(&self.hi).zip(y) {
            d = d.max(lo - yi).max(yi - hi);
        }
        d.max(0.0)
    }

    fn dist_to_boundary(&self, y: &[f64]) -> f64 {
        let outer = self.dist_to_set(y);
        if outer > 0.0 {
            return outer;
        }
        // Inside (or on) the box: distance to the nearest face. A degenerate
        // coordinate yields 0, so the boundary of a flat box is the box.
        let mut inner = f64::INFINITY;
        for ((lo, hi), yi) in self.lo.iter().zip(&self.hi).zip(y) {
            inner = inner.min(yi - lo).min(hi - yi);
        }
        inner.max(0.0)
    }

    fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        (self.lo.clone(), self.hi.clone())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RasterMode {
    Full,
    Boundary,
}

/// Lattice points within `alpha` of a convex set (`Full`) or of its
/// topological boundary (`Boundary`), enumerated lexicographically over the
/// bounding box inflated by `alpha`.
///
/// Distance tests use closed inequalities with the relative tolerance
/// `TIE_REL_TOL * rho` so that exact half-step ties land inside the set.
pub fn rasterize(
    set: &dyn ConvexSet,
    alpha: f64,
    rho: Resolution,
    mode: RasterMode,
) -> Result<DigitalSet> {
    let dim = set.dim();
    let r = rho.get();
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::Domain(format!("blow-up radius {alpha} must be positive")));
    }
    if mode == RasterMode::Full && alpha < (r / 2.0) * (1.0 - 1e-12) {
        return Err(Error::AlphaBelowHalfRho {
            alpha,
            half_rho: r / 2.0,
        });
    }
    let (lo, hi) = set.bounding_box();
    if lo.len() != dim || hi.len() != dim {
        return Err(Error::InvalidOracle("bounding box dimension mismatch".into()));
    }
    for i in 0..dim {
        if !(lo[i].is_finite() && hi[i].is_finite() && lo[i] <= hi[i]) {
            return Err(Error::InvalidOracle(format!(
                "bounding box coordinate {i} is not an interval"
            )));
        }
    }
    let eta = TIE_REL_TOL * r;
    let margin = alpha + eta;
    let mut lo_idx: Vec<Coord> = Vec::with_capacity(dim);
    let mut hi_idx: Vec<Coord> = Vec::with_capacity(dim);
    for i in 0..dim {
        lo_idx.push(((lo[i] - margin) / r).floor() as Coord - 1);
        hi_idx.push(((hi[i] + margin) / r).ceil() as Coord + 1);
    }

    let mut out = DigitalSet::new(rho, dim);
    let mut idx = lo_idx.clone();
    let mut pos = vec![0.0f64; dim];
    'outer: loop {
        for i in 0..dim {
            pos[i] = r * idx[i] as f64;
        }
        let d = match mode {
            RasterMode::Full => set.dist_to_set(&pos),
            RasterMode::Boundary => set.dist_to_boundary(&pos),
        };
        if d <= alpha + eta {
            out.insert(GridPoint::new(&idx));
        }
        // lexicographic odometer
        let mut i = dim;
        loop {
            if i == 0 {
                break 'outer;
            }
            i -= 1;
            if idx[i] < hi_idx[i] {
                idx[i] += 1;
                break;
            }
            idx[i] = lo_idx[i];
        }
    }
    // with alpha >= rho/2 every point of a nonempty set has a lattice point
    // in reach
    debug_assert!(mode == RasterMode::Boundary || !out.is_empty());
    Ok(out)
}

/// True iff any two points of `m` are joined by a lattice path with
/// consecutive Chebyshev distance exactly `rho` (8-connectivity in the plane).
pub fn is_chain_connected(m: &DigitalSet) -> Result<bool> {
    if m.is_empty() {
        return Err(Error::EmptySet);
    }
    let offsets = neighbor_offsets(m.dim());
    let start = m.iter().next().unwrap().clone();
    let mut seen: HashSet<GridPoint> = HashSet::with_capacity(m.len());
    seen.insert(start.clone());
    let mut stack = vec![start];
    while let Some(p) = stack.pop() {
        for off in &offsets {
            let q = p.offset(off);
            if m.contains(&q) && !seen.contains(&q) {
                seen.insert(q.clone());
                stack.push(q);
            }
        }
    }
    Ok(seen.len() == m.len())
}

/// Exact two-sided Hausdorff distance between the embedded point sets.
///
/// When the two resolutions are commensurable (integer ratio) the distances
/// are computed in integer index arithmetic and scaled once, so assertions
/// against exact multiples of the fine resolution hold without slack.
pub fn hausdorff_digital(a: &DigitalSet, b: &DigitalSet) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    let (ra, rb) = (a.rho().get(), b.rho().get());
    let (fine, coarse, rf, rc) = if ra <= rb { (a, b, ra, rb) } else { (b, a, rb, ra) };
    let ratio = rc / rf;
    let k = ratio.round();
    if (ratio - k).abs() <= 1e-12 * ratio && k >= 1.0 {
        let k = k as i64;
        let fa: Vec<CoordVec> = fine.iter().map(|p| p.0.clone()).collect();
        let fb: Vec<CoordVec> = coarse
            .iter()
            .map(|p| p.0.iter().map(|c| c * k).collect())
            .collect();
        let d = directed_int(&fa, &fb).max(directed_int(&fb, &fa));
        return Ok(rf * d as f64);
    }
    let pa: Vec<Vec<f64>> = fine.iter().map(|p| p.embed(fine.rho())).collect();
    let pb: Vec<Vec<f64>> = coarse.iter().map(|p| p.embed(coarse.rho())).collect();
    Ok(directed_float(&pa, &pb).max(directed_float(&pb, &pa)))
}

fn directed_int(from: &[CoordVec], to: &[CoordVec]) -> u64 {
    let mut worst = 0u64;
    for x in from {
        let mut best = u64::MAX;
        for y in to {
            let d = x
                .iter()
                .zip(y.iter())
                .map(|(a, b)| a.abs_diff(*b))
                .max()
                .unwrap_or(0);
            if d < best {
                best = d;
                if best <= worst {
                    break;
                }
            }
        }
        worst = worst.max(best);
    }
    worst
}

fn directed_float(from: &[Vec<f64>], to: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0f64;
    for x in from {
        let mut best = f64::INFINITY;
        for y in to {
            let d = chebyshev_unchecked(x, y);
            if d < best {
                best = d;
                if best <= worst {
                    break;
                }
            }
        }
        worst = worst.max(best);
    }
    worst
}
