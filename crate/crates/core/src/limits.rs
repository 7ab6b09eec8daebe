//! Simulation of the limiting laws of boundary-corrected isotonic estimators.
//!
//! Brownian paths are drawn on discrete grids. The Chernoff-type law is the
//! argmax of `W_t - t²` on a two-sided grid. Boundary laws are left derivatives
//! of greatest convex minorants on `[0, ∞)`, approximated by a uniform grid on
//! `[0, T]` followed by a geometric tail that reaches far enough for a driftless
//! path's minorant to be unaffected by truncation.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{IrddError, Result};
use crate::isotonic::ConvexMinorant;
use crate::mc::{dgp_sample, DgpSpec};
use crate::rdd::{sharp_estimate, RddConfig};
use crate::rng::{derive_seed, stream_rng};
use crate::stats::{ks_distance, mean};

/// Grid for path simulation.
///
/// Two-sided draws use `{-T, ..., -Δt, 0, Δt, ..., T}`. One-sided draws use
/// `{0, Δt, ..., T}` extended by `T·r, T·r², ...` up to `tail_end` when
/// `tail_ratio` is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub step: f64,
    pub horizon: f64,
    pub tail_ratio: Option<f64>,
    pub tail_end: f64,
}

impl Grid {
    pub fn chernoff() -> Self {
        Grid {
            step: 1e-3,
            horizon: 3.0,
            tail_ratio: None,
            tail_end: 3.0,
        }
    }

    pub fn boundary() -> Self {
        Grid {
            step: 1e-3,
            horizon: 5.0,
            tail_ratio: Some(1.01),
            tail_end: 1e6,
        }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn without_tail(mut self) -> Self {
        self.tail_ratio = None;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.horizon > self.step) {
            return Err(IrddError::Config(format!(
                "grid needs 0 < step < horizon, got step {} horizon {}",
                self.step, self.horizon
            )));
        }
        if let Some(r) = self.tail_ratio {
            if !(r > 1.0) {
                return Err(IrddError::Config(format!("tail ratio must exceed 1, got {r}")));
            }
        }
        Ok(())
    }

    fn cells(&self) -> usize {
        (self.horizon / self.step).round() as usize
    }

    /// Times of the one-sided grid.
    pub fn one_sided_times(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let cells = self.cells();
        let mut t: Vec<f64> = (0..=cells).map(|i| i as f64 * self.step).collect();
        if let Some(r) = self.tail_ratio {
            let mut next = t[cells] * r;
            while next <= self.tail_end {
                t.push(next);
                next *= r;
            }
        }
        Ok(t)
    }

    /// Index of the one-sided grid point at `t`, which must be a grid point
    /// of the uniform part.
    fn index_of(&self, t: f64) -> Result<usize> {
        let i = (t / self.step).round();
        if (i * self.step - t).abs() > 1e-9 || i < 1.0 || i as usize > self.cells() {
            return Err(IrddError::Config(format!(
                "{t} is not an interior point of a grid with step {}",
                self.step
            )));
        }
        Ok(i as usize)
    }
}

/// A path sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProcessGrid {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// Standard Brownian motion started at zero on the given increasing times.
pub fn brownian_path<R: Rng + ?Sized>(times: &[f64], rng: &mut R) -> ProcessGrid {
    let mut values = Vec::with_capacity(times.len());
    let mut w = 0.0;
    let mut prev = times[0];
    for &t in times {
        let z: f64 = rng.sample(StandardNormal);
        w += (t - prev).sqrt() * z;
        prev = t;
        values.push(w);
    }
    ProcessGrid {
        times: times.to_vec(),
        values,
    }
}

/// Argmax over the two-sided grid of `scale·W_t - t²`.
///
/// Increments to the right and to the left of zero are drawn alternately, so
/// enlarging the horizon only appends to the path.
pub fn chernoff_draw_scaled<R: Rng + ?Sized>(rng: &mut R, grid: &Grid, scale: f64) -> Result<f64> {
    grid.validate()?;
    let sd = grid.step.sqrt() * scale;
    let (mut right, mut left) = (0.0, 0.0);
    let (mut best, mut arg) = (0.0, 0.0);
    for i in 1..=grid.cells() {
        let t = i as f64 * grid.step;
        let zr: f64 = rng.sample(StandardNormal);
        let zl: f64 = rng.sample(StandardNormal);
        right += sd * zr;
        left += sd * zl;
        let drift = t * t;
        if right - drift > best {
            best = right - drift;
            arg = t;
        }
        if left - drift > best {
            best = left - drift;
            arg = -t;
        }
    }
    Ok(arg)
}

/// One draw of `argmax_t (W_t - t²)`.
pub fn chernoff_draw<R: Rng + ?Sized>(rng: &mut R, grid: &Grid) -> Result<f64> {
    chernoff_draw_scaled(rng, grid, 1.0)
}

/// Rate regime of the boundary offset `c·n^{-a}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `a < 1/3`: same law as at an interior point.
    InteriorChernoff,
    /// `a = 1/3`: Brownian motion plus parabola.
    BoundaryThird,
    /// `a > 1/3`: driftless Brownian motion.
    BoundaryFast,
}

impl Regime {
    pub fn for_exponent(a: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(IrddError::Config(format!("a must lie in (0, 1), got {a}")));
        }
        Ok(if (a - 1.0 / 3.0).abs() < 1e-12 {
            Regime::BoundaryThird
        } else if a < 1.0 / 3.0 {
            Regime::InteriorChernoff
        } else {
            Regime::BoundaryFast
        })
    }
}

/// Local constants at the boundary: noise variance, running-variable density,
/// slope of the regression, and the correction constant `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitDrawSpec {
    pub sigma2: f64,
    pub density: f64,
    pub slope: f64,
    pub c: f64,
    pub regime: Regime,
}

impl LimitDrawSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("sigma2", self.sigma2), ("density", self.density), ("c", self.c)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(IrddError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.regime != Regime::BoundaryFast && !(self.slope > 0.0 && self.slope.is_finite()) {
            return Err(IrddError::Config(format!(
                "slope must be positive for this regime, got {}",
                self.slope
            )));
        }
        Ok(())
    }

    fn noise_coef(&self) -> f64 {
        (self.sigma2 / (self.c * self.density)).sqrt()
    }

    fn drift_coef(&self) -> f64 {
        match self.regime {
            Regime::BoundaryThird => self.c * self.slope / 2.0,
            _ => 0.0,
        }
    }
}

/// Left derivative at `times[at]` of the minorant of `noise·W + drift·t²`.
fn minorant_slope(times: &[f64], w: &[f64], noise: f64, drift: f64, at: usize) -> f64 {
    let v: Vec<f64> = times
        .iter()
        .zip(w)
        .map(|(&t, &w)| noise * w + drift * t * t)
        .collect();
    ConvexMinorant::from_columns(times, &v)
        .and_then(|h| h.left_derivative(times[at]))
        .expect("grid times are strictly increasing")
}

/// One draw from the limit law of the boundary-corrected estimator.
///
/// Boundary regimes return the minorant slope at `t = 1`, which must be a
/// point of the grid's uniform part. The interior regime returns the
/// Chernoff draw scaled by `|4·m'·σ²/f|^{1/3}`.
pub fn boundary_limit_draw<R: Rng + ?Sized>(spec: &LimitDrawSpec, rng: &mut R, grid: &Grid) -> Result<f64> {
    spec.validate()?;
    if spec.regime == Regime::InteriorChernoff {
        let scale = (4.0 * spec.slope * spec.sigma2 / spec.density).abs().cbrt();
        return Ok(scale * chernoff_draw(rng, grid)?);
    }
    let times = grid.one_sided_times()?;
    let one = grid.index_of(1.0)?;
    let path = brownian_path(&times, rng);
    Ok(minorant_slope(
        &times,
        &path.values,
        spec.noise_coef(),
        spec.drift_coef(),
        one,
    ))
}

/// One draw from the limit of `n^{1/3}(θ̂ - θ)` for the sharp estimator.
///
/// The control side reflects to a `[0, ∞)` problem, which turns the
/// difference of its minorant slope into a sum with an independent draw.
pub fn sharp_limit_draw<R: Rng + ?Sized>(
    below: &LimitDrawSpec,
    above: &LimitDrawSpec,
    rng: &mut R,
    grid: &Grid,
) -> Result<f64> {
    let plus = boundary_limit_draw(above, rng, grid)?;
    let minus = boundary_limit_draw(below, rng, grid)?;
    Ok(plus + minus)
}

/// Local constants on one side of a fuzzy design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FuzzySide {
    pub sigma2: f64,
    pub slope: f64,
    /// Treatment probability at the cutoff and its slope.
    pub p: f64,
    pub p_slope: f64,
    /// `E[ε(D - p(X)) | X]` at the cutoff.
    pub rho: f64,
    pub density: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FuzzyLimitSpec {
    pub below: FuzzySide,
    pub above: FuzzySide,
    /// Outcome jump `m₊ - m₋` at the cutoff.
    pub outcome_jump: f64,
    pub c: f64,
}

// (outcome slope, treatment slope) at t = 1 for one side with correlated paths.
fn fuzzy_side_draw<R: Rng + ?Sized>(
    side: &FuzzySide,
    c: f64,
    times: &[f64],
    one: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let pvar = side.p * (1.0 - side.p);
    if !(side.p > 0.0 && side.p < 1.0) || !(side.sigma2 > 0.0) || !(side.density > 0.0) {
        return Err(IrddError::Config(
            "fuzzy limit needs 0 < p < 1 and positive sigma2 and density".into(),
        ));
    }
    let r = side.rho / (side.sigma2 * pvar).sqrt();
    if !(r.abs() <= 1.0) {
        return Err(IrddError::Config(format!("implied correlation {r} is outside [-1, 1]")));
    }
    let mut w = Vec::with_capacity(times.len());
    let mut b = Vec::with_capacity(times.len());
    let (mut wv, mut bv, mut prev) = (0.0, 0.0, times[0]);
    let orth = (1.0 - r * r).sqrt();
    for &t in times {
        let s = (t - prev).sqrt();
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        wv += s * z1;
        bv += s * (r * z1 + orth * z2);
        prev = t;
        w.push(wv);
        b.push(bv);
    }
    let y = minorant_slope(
        times,
        &w,
        (side.sigma2 / (c * side.density)).sqrt(),
        c * side.slope / 2.0,
        one,
    );
    let d = minorant_slope(
        times,
        &b,
        (pvar / (c * side.density)).sqrt(),
        c * side.p_slope / 2.0,
        one,
    );
    Ok((y, d))
}

/// One draw from the limit of `n^{1/3}(θ̂_F - θ)` for the fuzzy estimator.
pub fn fuzzy_limit_draw<R: Rng + ?Sized>(spec: &FuzzyLimitSpec, rng: &mut R, grid: &Grid) -> Result<f64> {
    let times = grid.one_sided_times()?;
    let one = grid.index_of(1.0)?;
    let (y_plus, d_plus) = fuzzy_side_draw(&spec.above, spec.c, &times, one, rng)?;
    let (y_minus, d_minus) = fuzzy_side_draw(&spec.below, spec.c, &times, one, rng)?;
    let jump = spec.above.p - spec.below.p;
    let xi1 = y_plus + y_minus;
    let xi2 = d_plus + d_minus;
    Ok(xi1 / jump - spec.outcome_jump / (jump * jump) * xi2)
}

/// Parallel batch of draws, stream `i` for draw `i`.
pub fn draw_batch<F>(seed: u64, reps: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> Result<f64> + Sync,
{
    (0..reps as u64)
        .into_par_iter()
        .map(|i| f(&mut stream_rng(seed, i)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltReport {
    pub n: usize,
    pub reps: usize,
    pub ks: f64,
    /// Draws of `n^{1/3}(θ̂ - θ)` from simulated samples.
    pub estimator: Vec<f64>,
    pub limit: Vec<f64>,
}

/// Compare the finite-sample law of `n^{1/3}(θ̂ - θ)` with its limit for a
/// design with known local constants.
pub fn verify_clt(dgp: &DgpSpec, a: f64, c: f64, n: usize, reps: usize, seed: u64) -> Result<CltReport> {
    if Regime::for_exponent(a)? != Regime::BoundaryThird {
        return Err(IrddError::Config(format!(
            "the sharp limit law is simulated for a = 1/3 only, got {a}"
        )));
    }
    let cfg = RddConfig::default().with_c(c).with_a(a);
    let rate = (n as f64).cbrt();
    let estimator = draw_batch(derive_seed(seed, 0), reps, |rng| {
        let s = dgp_sample(dgp, n, rng)?;
        Ok(rate * (sharp_estimate(&s, &cfg)?.theta - dgp.theta))
    })?;
    let limit = sharp_limit_batch(dgp, c, reps, derive_seed(seed, 1), &Grid::boundary())?;
    Ok(CltReport {
        n,
        reps,
        ks: ks_distance(&estimator, &limit),
        estimator,
        limit,
    })
}

/// Draws from the sharp limit law with the design's local constants.
pub fn sharp_limit_batch(dgp: &DgpSpec, c: f64, reps: usize, seed: u64, grid: &Grid) -> Result<Vec<f64>> {
    let o = dgp.oracle();
    let side = |slope: f64, sigma2: f64| LimitDrawSpec {
        sigma2,
        density: o.density,
        slope,
        c,
        regime: Regime::BoundaryThird,
    };
    let below = side(o.slope.0, o.sigma2.0);
    let above = side(o.slope.1, o.sigma2.1);
    draw_batch(seed, reps, |rng| sharp_limit_draw(&below, &above, rng, grid))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CstarReport {
    pub cstar: f64,
    pub c_grid: Vec<f64>,
    /// Estimated `E|D(c)|²` at each grid value.
    pub objective: Vec<f64>,
    pub reps: usize,
    pub grid: Grid,
    pub seed: u64,
}

/// Default search grid for `c*`: 0.05, 0.06, ..., 1.00.
pub fn default_c_grid() -> Vec<f64> {
    (5..=100).map(|i| i as f64 / 100.0).collect()
}

/// Minimizer over `c_grid` of the second moment of the left derivative at
/// `c` of the minorant of `W_t + t²` on `[0, ∞)`.
///
/// All `c` values share each simulated path, so differences in the objective
/// are not swamped by independent noise.
pub fn estimate_cstar(seed: u64, grid: &Grid, reps: usize, c_grid: &[f64]) -> Result<CstarReport> {
    if reps == 0 || c_grid.is_empty() {
        return Err(IrddError::Config("estimate_cstar needs reps > 0 and a non-empty c grid".into()));
    }
    let times = grid.one_sided_times()?;
    let last = *times.last().unwrap();
    if c_grid.iter().any(|&c| !(c > 0.0 && c < last)) {
        return Err(IrddError::Config("c grid must lie inside the simulation grid".into()));
    }
    let per_path: Vec<Vec<f64>> = (0..reps as u64)
        .into_par_iter()
        .map(|i| {
            let path = brownian_path(&times, &mut stream_rng(seed, i));
            let v: Vec<f64> = times
                .iter()
                .zip(&path.values)
                .map(|(&t, &w)| w + t * t)
                .collect();
            let hull = ConvexMinorant::from_columns(&times, &v).expect("increasing grid");
            c_grid
                .iter()
                .map(|&c| {
                    let d = hull.left_derivative(c).expect("c inside grid");
                    d * d
                })
                .collect()
        })
        .collect();
    let objective: Vec<f64> = (0..c_grid.len())
        .map(|j| mean(&per_path.iter().map(|p| p[j]).collect::<Vec<_>>()))
        .collect();
    let best = objective
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(j, _)| j)
        .unwrap();
    Ok(CstarReport {
        cstar: c_grid[best],
        c_grid: c_grid.to_vec(),
        objective,
        reps,
        grid: *grid,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_noise_chernoff_is_zero() {
        let mut rng = stream_rng(0, 0);
        assert_eq!(chernoff_draw_scaled(&mut rng, &Grid::chernoff(), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn regimes_from_exponent() {
        assert_eq!(Regime::for_exponent(1.0 / 3.0).unwrap(), Regime::BoundaryThird);
        assert_eq!(Regime::for_exponent(0.2).unwrap(), Regime::InteriorChernoff);
        assert_eq!(Regime::for_exponent(0.5).unwrap(), Regime::BoundaryFast);
        assert!(Regime::for_exponent(1.0).is_err());
    }

    #[test]
    fn grid_contains_one_and_tail() {
        let g = Grid::boundary();
        let t = g.one_sided_times().unwrap();
        assert_eq!(t[g.index_of(1.0).unwrap()], 1.0);
        assert!(*t.last().unwrap() <= 1e6 && *t.last().unwrap() > 1e6 / 1.01);
        assert!(t.windows(2).all(|w| w[0] < w[1]));
        assert!(g.index_of(0.0).is_err());
    }

    #[test]
    fn parabola_only_slope_is_c_times_slope() {
        // Tiny noise: the minorant is the parabola and its slope at 1 is c·m'.
        let spec = LimitDrawSpec {
            sigma2: 1e-20,
            density: 1.0,
            slope: 0.8,
            c: 1.5,
            regime: Regime::BoundaryThird,
        };
        let d = boundary_limit_draw(&spec, &mut stream_rng(3, 0), &Grid::boundary()).unwrap();
        // Secant over the last cell: c·m'·(1 - Δt/2).
        assert!((d - 1.2).abs() < 1e-3, "{d}");
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = LimitDrawSpec {
            sigma2: 1.0,
            density: 1.0,
            slope: 0.0,
            c: 1.0,
            regime: Regime::BoundaryThird,
        };
        let g = Grid::boundary();
        assert!(boundary_limit_draw(&spec, &mut stream_rng(0, 0), &g).is_err());
        spec.regime = Regime::BoundaryFast;
        assert!(boundary_limit_draw(&spec, &mut stream_rng(0, 0), &g).is_ok());
        spec.density = 0.0;
        assert!(boundary_limit_draw(&spec, &mut stream_rng(0, 0), &g).is_err());
    }
}
