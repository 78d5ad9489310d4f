//! Set-valued right-hand sides, the one-step Euler image `x + h F(x)` and its
//! rasterized maps, and the scalar widths alpha, kappa, sigma that control the
//! blow-up radii of the scheme.

use crate::error::{Error, Result};
use crate::grid::{rasterize, DigitalSet, IntervalBox, RasterMode, Resolution};

/// An affine function `x -> w . x + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineForm {
    pub coeffs: Vec<f64>,
    pub offset: f64,
}

impl AffineForm {
    pub fn new(coeffs: Vec<f64>, offset: f64) -> Self {
        AffineForm { coeffs, offset }
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        AffineForm {
            coeffs: vec![0.0; dim],
            offset: value,
        }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.offset
            + self
                .coeffs
                .iter()
                .zip(x.iter())
                .map(|(c, v)| c * v)
                .sum::<f64>()
    }
}

/// Box-valued map: per output coordinate, two affine forms whose values are
/// sorted into an interval at evaluation time. Sorting makes scaled-interval
/// dynamics like `[0.9, 1.0] L x_i` well-defined on both signs of the state,
/// and degenerate intervals are allowed.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineIntervalBoxMap {
    rows: Vec<(AffineForm, AffineForm)>,
}

impl AffineIntervalBoxMap {
    pub fn new(rows: Vec<(AffineForm, AffineForm)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidModel("box map needs at least one row".into()));
        }
        let dim = rows.len();
        for (i, (a, b)) in rows.iter().enumerate() {
            if a.coeffs.len() != dim || b.coeffs.len() != dim {
                return Err(Error::InvalidModel(format!(
                    "row {i}: coefficient length must equal the state dimension {dim}"
                )));
            }
        }
        Ok(AffineIntervalBoxMap { rows })
    }

    /// The constant map `x -> {value}`.
    pub fn constant(value: &[f64]) -> Self {
        let dim = value.len();
        AffineIntervalBoxMap {
            rows: value
                .iter()
                .map(|&v| (AffineForm::constant(dim, v), AffineForm::constant(dim, v)))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[(AffineForm, AffineForm)] {
        &self.rows
    }

    pub fn eval_box(&self, x: &[f64]) -> IntervalBox {
        let mut lo = Vec::with_capacity(self.rows.len());
        let mut hi = Vec::with_capacity(self.rows.len());
        for (a, b) in &self.rows {
            let (va, vb) = (a.eval(x), b.eval(x));
            lo.push(va.min(vb));
            hi.push(va.max(vb));
        }
        IntervalBox::new(lo, hi).expect("sorted endpoints form a valid box")
    }
}

/// A set-valued right-hand side together with its analytic metadata: the
/// Lipschitz constant `L` and uniform bound `P` in the Chebyshev metric, and
/// the user-supplied dimensions `d_x` of the reachable sets and `d_u` of the
/// images of `F`. The metadata is not derived from the map; it is part of the
/// problem statement.
#[derive(Clone, Debug)]
pub struct RhsModel {
    dim: usize,
    lipschitz: f64,
    bound: f64,
    d_x: usize,
    d_u: usize,
    map: AffineIntervalBoxMap,
}

impl RhsModel {
    pub fn new(
        map: AffineIntervalBoxMap,
        lipschitz: f64,
        bound: f64,
        d_x: usize,
        d_u: usize,
    ) -> Result<Self> {
        let dim = map.dim();
        if !(lipschitz.is_finite() && lipschitz > 0.0) {
            return Err(Error::InvalidModel(format!(
                "Lipschitz constant must be positive, got {lipschitz}"
            )));
        }
        if !(bound.is_finite() && bound > 0.0) {
            return Err(Error::InvalidModel(format!(
                "uniform bound must be positive, got {bound}"
            )));
        }
        let d_r = (dim - 1).min(d_x);
        if d_r < 1 {
            return Err(Error::InvalidModel(format!(
                "boundary dimension min(d - 1, d_x) = {d_r} must be >= 1"
            )));
        }
        Ok(RhsModel {
            dim,
            lipschitz,
            bound,
            d_x,
            d_u,
            map,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn d_x(&self) -> usize {
        self.d_x
    }

    pub fn d_u(&self) -> usize {
        self.d_u
    }

    /// Estimated dimension of reachable-set boundaries, `min(d - 1, d_x)`.
    pub fn d_r(&self) -> usize {
        (self.dim - 1).min(self.d_x)
    }

    /// Estimated dimension of the boundaries of `F`-images, `min(d - 1, d_u)`.
    pub fn d_f(&self) -> usize {
        (self.dim - 1).min(self.d_u)
    }

    pub fn map(&self) -> &AffineIntervalBoxMap {
        &self.map
    }

    /// The value set `F(x)`.
    pub fn evaluate(&self, x: &[f64]) -> IntervalBox {
        self.map.eval_box(x)
    }
}

/// A problem instance: dynamics, initial set, and time horizon.
#[derive(Clone, Debug)]
pub struct Problem {
    pub name: String,
    pub rhs: RhsModel,
    pub x0: IntervalBox,
    pub horizon: f64,
}

impl Problem {
    pub fn new(name: impl Into<String>, rhs: RhsModel, x0: IntervalBox, horizon: f64) -> Result<Self> {
        if x0.dim() != rhs.dim() {
            return Err(Error::DimensionMismatch(x0.dim(), rhs.dim()));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidModel(format!(
                "time horizon must be positive, got {horizon}"
            )));
        }
        Ok(Problem {
            name: name.into(),
            rhs,
            x0,
            horizon,
        })
    }
}

/// One-step Euler image `x + h F(x)` as a box.
pub fn euler_image(f: &RhsModel, x: &[f64], h: f64) -> IntervalBox {
    debug_assert!(h > 0.0);
    let fx = f.evaluate(x);
    let lo: Vec<f64> = x
        .iter()
        .zip(fx.lo().iter())
        .map(|(xi, a)| xi + h * a)
        .collect();
    let hi: Vec<f64> = x
        .iter()
        .zip(fx.hi().iter())
        .map(|(xi, b)| xi + h * b)
        .collect();
    IntervalBox::new(lo, hi).expect("euler image of a valid box is a valid box")
}

/// Rasterized Euler map: the projection of `x + h F(x)` (or of its boundary)
/// onto the grid with spacing `rho` and blow-up `alpha`.
pub fn phi(
    f: &RhsModel,
    x: &[f64],
    h: f64,
    rho: Resolution,
    alpha: f64,
    mode: RasterMode,
) -> Result<DigitalSet> {
    let image = euler_image(f, x, h);
    rasterize(&image, alpha, rho, mode)
}

/// Blow-up radius `(1 + L h) rho / 2` keeping one Euler step chain-connected.
pub fn alpha_of(lipschitz: f64, h: f64, rho: f64) -> f64 {
    (1.0 + lipschitz * h) * rho / 2.0
}

/// Auxiliary width `2 (1 + L h) (alpha / (1 - L h) + rho)`; requires `L h < 1`.
pub fn kappa_of(lipschitz: f64, h: f64, rho: f64) -> Result<f64> {
    if lipschitz * h >= 1.0 {
        return Err(Error::Domain(format!(
            "kappa undefined for L h = {} >= 1",
            lipschitz * h
        )));
    }
    let alpha = alpha_of(lipschitz, h, rho);
    Ok(2.0 * (1.0 + lipschitz * h) * (alpha / (1.0 - lipschitz * h) + rho))
}

/// Average annulus thickness `2 alpha + kappa / 4`, evaluated in the closed
/// form `(rho / 4) (1 + L h) ((1 + L h) / (1 - L h) + 6)`; requires `L h < 1`.
pub fn sigma_of(lipschitz: f64, h: f64, rho: f64) -> Result<f64> {
    if lipschitz * h >= 1.0 {
        return Err(Error::Domain(format!(
            "sigma undefined for L h = {} >= 1",
            lipschitz * h
        )));
    }
    let lh = lipschitz * h;
    Ok(rho / 4.0 * (1.0 + lh) * ((1.0 + lh) / (1.0 - lh) + 6.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{is_chain_connected, ConvexSet, GridPoint};
    use crate::testutil::{random_connected_set, Rng};

    fn res(r: f64) -> Resolution {
        Resolution::new(r).unwrap()
    }

    /// `x_i' in [0.9, 1.0] L x_i` in the plane.
    pub(crate) fn simp7_map(l: f64) -> AffineIntervalBoxMap {
        AffineIntervalBoxMap::new(vec![
            (
                AffineForm::new(vec![0.9 * l, 0.0], 0.0),
                AffineForm::new(vec![l, 0.0], 0.0),
            ),
            (
                AffineForm::new(vec![0.0, 0.9 * l], 0.0),
                AffineForm::new(vec![0.0, l], 0.0),
            ),
        ])
        .unwrap()
    }

    fn simp7_model(l: f64) -> RhsModel {
        RhsModel::new(simp7_map(l), l, l * l.exp(), 2, 2).unwrap()
    }

    /// `x1' in [0, 1] pi x2`, `x2' in -[0, 1] pi x1`.
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

    #[test]
    fn euler_image_examples() {
        // zero dynamics: the image is the point itself
        let zero = RhsModel::new(AffineIntervalBoxMap::constant(&[0.0, 0.0]), 1.0, 1.0, 2, 2)
            .unwrap();
        let img = euler_image(&zero, &[0.3, -0.7], 0.5);
        assert_eq!(img, IntervalBox::point(&[0.3, -0.7]));

        let f = simp7_model(1.0);
        let img = euler_image(&f, &[1.0, 1.0], 0.25);
        assert!((img.lo()[0] - 1.225).abs() < 1e-15);
        assert!((img.hi()[0] - 1.25).abs() < 1e-15);
        assert!((img.lo()[1] - 1.225).abs() < 1e-15);
        assert!((img.hi()[1] - 1.25).abs() < 1e-15);

        // interval endpoints sort even when the scaled state is negative
        let f = bp_model();
        let img = euler_image(&f, &[-1.0, 0.0], 0.25);
        assert_eq!(img.lo()[0], -1.0);
        assert_eq!(img.hi()[0], -1.0);
        assert_eq!(img.lo()[1], 0.0);
        assert!((img.hi()[1] - 0.25 * std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn phi_matches_brute_force_scan() {
        let f = simp7_model(1.0);
        let (h, rho) = (0.25, 0.05);
        let alpha = alpha_of(1.0, h, rho);
        assert!((alpha - 0.03125).abs() < 1e-15);

        let img = euler_image(&f, &[1.0, 1.0], h);
        for mode in [RasterMode::Full, RasterMode::Boundary] {
            let got = phi(&f, &[1.0, 1.0], h, res(rho), alpha, mode).unwrap();
            // independent scan over a wide window
            let mut want = DigitalSet::new(res(rho), 2);
            for kx in 20..=30i64 {
                for ky in 20..=30i64 {
                    let pos = [rho * kx as f64, rho * ky as f64];
                    let d = match mode {
                        RasterMode::Full => img.dist_to_set(&pos),
                        RasterMode::Boundary => img.dist_to_boundary(&pos),
                    };
                    if d <= alpha + 1e-9 * rho {
                        want.insert(GridPoint::new(&[kx, ky]));
                    }
                }
            }
            assert_eq!(got, want);
        }
    }

    #[test]
    fn phi_of_lattice_point_with_zero_dynamics() {
        let zero =
            RhsModel::new(AffineIntervalBoxMap::constant(&[0.0, 0.0]), 1.0, 1.0, 2, 2).unwrap();
        let rho = 0.5;
        let got = phi(&zero, &[1.0, -1.5], 0.1, res(rho), rho / 2.0, RasterMode::Full).unwrap();
        assert_eq!(got.sorted_points(), vec![GridPoint::new(&[2, -3])]);
    }

    #[test]
    fn scalar_width_values() {
        assert_eq!(alpha_of(1.0, 0.25, 0.1), 0.0625);
        let k = kappa_of(1.0, 0.25, 0.1).unwrap();
        assert!((k - 55.0 / 12.0 * 0.1).abs() < 1e-15, "kappa = {k}");
        let s = sigma_of(1.0, 0.25, 1.0).unwrap();
        assert!((s - 115.0 / 48.0).abs() < 1e-14, "sigma = {s}");
        assert!(kappa_of(2.0, 0.5, 0.1).is_err());
        assert!(sigma_of(2.0, 0.5, 0.1).is_err());
    }

    #[test]
    fn sigma_identities_and_monotonicity() {
        let (l, p) = (1.0, 1.0f64.exp());
        let (h_max, rho_max) = (1.0 / (4.0 * l), p / (8.0 * l));
        let mut prev_in_h = 0.0;
        for i in 1..=30 {
            let h = h_max * i as f64 / 30.0;
            for j in 1..=30 {
                let rho = rho_max * j as f64 / 30.0;
                let s = sigma_of(l, h, rho).unwrap();
                assert!(1.75 * rho <= s);
                let s_quarter = sigma_of(l, h, rho / 4.0).unwrap();
                assert!((s - 4.0 * s_quarter).abs() <= 1e-14 * s);
                let s_half_h = sigma_of(l, h / 2.0, rho).unwrap();
                assert!(0.5 * s <= s_half_h);
                // bounded by the corner value
                assert!(s <= sigma_of(l, h_max, rho_max).unwrap() * (1.0 + 1e-14));
            }
            let s_row = sigma_of(l, h, rho_max).unwrap();
            assert!(s_row > prev_in_h, "monotone in h");
            prev_in_h = s_row;
        }
    }

    #[test]
    fn union_of_euler_plates_stays_connected() {
        let mut rng = Rng::new(0xd19a_0001);
        for _ in 0..10 {
            let rho = 0.125;
            let m = random_connected_set(&mut rng, res(rho), 2, 60);
            let l = 0.5 + rng.gen_f64();
            let f = simp7_model(l);
            let h = 1.0 / (4.0 * l) * (0.5 + 0.5 * rng.gen_f64());
            let alpha = alpha_of(l, h, rho);
            let mut union = DigitalSet::new(res(rho), 2);
            for pt in m.iter() {
                let plate = phi(&f, &pt.embed(res(rho)), h, res(rho), alpha, RasterMode::Full)
                    .unwrap();
                union.extend_from(&plate);
            }
            assert!(is_chain_connected(&union).unwrap());
        }
    }

    #[test]
    fn model_validation() {
        assert!(RhsModel::new(simp7_map(1.0), 0.0, 1.0, 2, 2).is_err());
        assert!(RhsModel::new(simp7_map(1.0), 1.0, -1.0, 2, 2).is_err());
        // d_R = min(d - 1, d_x) must be >= 1
        assert!(RhsModel::new(simp7_map(1.0), 1.0, 1.0, 0, 2).is_err());
    }
}
