//! Sharp and fuzzy isotonic regression discontinuity estimators.
//!
//! The sample is split at the cutoff into a control side (`x < cutoff`) and a
//! treated side (`x >= cutoff`). Each side gets its own isotonic fit, and the
//! boundary values are read off at `cutoff ± c·n^{-a}` instead of at the
//! observations nearest the cutoff, which are inconsistent.

use serde::Serialize;

use crate::error::{IrddError, Result};
use crate::isotonic::{pava_fit, IsotonicDesign, StepFit};
use crate::sample::{Channel, Sample};

/// Minimizer of the asymptotic MSE of the boundary-corrected estimator in
/// units of its scale constant.
pub const CSTAR: f64 = 0.345;

/// Smallest treatment-probability jump a fuzzy estimate will divide by.
pub const MIN_DENOMINATOR: f64 = 1e-8;

/// Which sample size enters the boundary offset `c·n^{-a}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SampleSizeRule {
    /// Both sides use the full sample size.
    #[default]
    Pooled,
    /// Each side uses its own count.
    PerSide,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    #[default]
    Increasing,
    Decreasing,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Increasing => 1.0,
            Direction::Decreasing => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RddConfig {
    pub cutoff: f64,
    pub c: f64,
    pub a: f64,
    pub sample_size: SampleSizeRule,
    /// When false the control/treated labels swap and the sign of the effect flips.
    pub treated_above: bool,
    pub below: Direction,
    pub above: Direction,
}

impl Default for RddConfig {
    fn default() -> Self {
        RddConfig {
            cutoff: 0.0,
            c: 1.0,
            a: 1.0 / 3.0,
            sample_size: SampleSizeRule::Pooled,
            treated_above: true,
            below: Direction::Increasing,
            above: Direction::Increasing,
        }
    }
}

impl RddConfig {
    pub fn with_cutoff(mut self, cutoff: f64) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn with_a(mut self, a: f64) -> Self {
        self.a = a;
        self
    }

    pub fn with_sample_size(mut self, rule: SampleSizeRule) -> Self {
        self.sample_size = rule;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.cutoff.is_finite() {
            return Err(IrddError::Config(format!("cutoff {} is not finite", self.cutoff)));
        }
        check_ca(self.c, self.a)
    }

    /// Offsets `(h_below, h_above)` from the cutoff to the evaluation points.
    pub fn offsets(&self, n_below: usize, n_above: usize) -> (f64, f64) {
        match self.sample_size {
            SampleSizeRule::Pooled => {
                let h = offset(self.c, self.a, n_below + n_above);
                (h, h)
            }
            SampleSizeRule::PerSide => (
                offset(self.c, self.a, n_below),
                offset(self.c, self.a, n_above),
            ),
        }
    }
}

fn check_ca(c: f64, a: f64) -> Result<()> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(IrddError::Config(format!("c must be positive, got {c}")));
    }
    if !(a > 0.0 && a < 1.0) {
        return Err(IrddError::Config(format!("a must lie in (0, 1), got {a}")));
    }
    Ok(())
}

fn offset(c: f64, a: f64, n: usize) -> f64 {
    c * (n as f64).powf(-a)
}

/// Isotonic fit of `y` at `x ≥ 0`, evaluated at `c·n^{-a}` with `n` the
/// sample size. The boundary of interest is `x = 0`.
pub fn boundary_corrected_left(sample: &Sample, c: f64, a: f64) -> Result<f64> {
    check_ca(c, a)?;
    let fit = pava_fit(sample, Channel::Outcome)?;
    Ok(fit.eval(offset(c, a, sample.len())))
}

/// Mirror of [`boundary_corrected_left`] for a sample at `x ≤ 0` whose
/// boundary of interest is its right end: the fit is evaluated at
/// `-c·n^{-a}`, with the interpolation convention reflected as well.
pub fn boundary_corrected_right(sample: &Sample, c: f64, a: f64) -> Result<f64> {
    check_ca(c, a)?;
    let fit = pava_fit(sample, Channel::Outcome)?;
    Ok(fit.eval_right_continuous(-offset(c, a, sample.len())))
}

/// Scale constant `(2/m'·sqrt(σ²/f))^{2/3}` of the boundary estimator's MSE.
pub fn optimal_scale(slope: f64, sigma2: f64, density: f64) -> Result<f64> {
    for (name, v) in [("slope", slope), ("sigma2", sigma2), ("density", density)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(IrddError::Config(format!("{name} must be positive, got {v}")));
        }
    }
    Ok((2.0 / slope * (sigma2 / density).sqrt()).powf(2.0 / 3.0))
}

/// Fit at `x ≥ 0` evaluated at the MSE-optimal point `c*·A·n^{-1/3}`.
///
/// `n` is the sample size that drives the rate; pass the pooled count when the
/// side is one half of a discontinuity design.
pub fn optimal_c_eval(side: &Sample, n: usize, slope: f64, sigma2: f64, density: f64) -> Result<f64> {
    let scale = optimal_scale(slope, sigma2, density)?;
    let fit = pava_fit(side, Channel::Outcome)?;
    Ok(fit.eval(CSTAR * scale * (n as f64).powf(-1.0 / 3.0)))
}

/// Point estimate of the effect at the cutoff with diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RddEstimate {
    pub theta: f64,
    pub naive_theta: f64,
    pub side_n: (usize, usize),
    pub eval_points: (f64, f64),
    pub m_minus: f64,
    pub m_plus: f64,
    pub naive_m_minus: f64,
    pub naive_m_plus: f64,
    pub p_minus: Option<f64>,
    pub p_plus: Option<f64>,
    /// An evaluation point fell outside its side's data range.
    pub clamped: bool,
}

// One side of the design with an isotonic fit oriented by `sign`.
#[derive(Debug, Clone)]
pub(crate) struct SideFit {
    fit: StepFit,
    sign: f64,
}

impl SideFit {
    pub(crate) fn new(design: &IsotonicDesign, y: &[f64], direction: Direction) -> Self {
        let sign = direction.sign();
        let fit = if sign > 0.0 {
            design.fit(y)
        } else {
            let neg: Vec<f64> = y.iter().map(|v| -v).collect();
            design.fit(&neg)
        };
        SideFit { fit, sign }
    }

    // Treated side: boundary approached from the right.
    pub(crate) fn from_right(&self, x: f64) -> f64 {
        self.sign * self.fit.eval(x)
    }

    // Control side: boundary approached from the left.
    pub(crate) fn from_left(&self, x: f64) -> f64 {
        self.sign * self.fit.eval_right_continuous(x)
    }

    pub(crate) fn first(&self) -> f64 {
        self.sign * self.fit.first_value()
    }

    pub(crate) fn last(&self) -> f64 {
        self.sign * self.fit.last_value()
    }

    pub(crate) fn fitted(&self) -> Vec<f64> {
        self.fit.fitted().into_iter().map(|v| self.sign * v).collect()
    }
}

/// A sample split at the cutoff with a reusable design per side.
#[derive(Debug, Clone)]
pub(crate) struct SplitDesign {
    pub below: Sample,
    pub above: Sample,
    pub design_below: IsotonicDesign,
    pub design_above: IsotonicDesign,
}

impl SplitDesign {
    pub(crate) fn new(sample: &Sample, cutoff: f64) -> Result<Self> {
        let (below, above) = sample.split_at(cutoff)?;
        let design_below = IsotonicDesign::new(below.x())?;
        let design_above = IsotonicDesign::new(above.x())?;
        Ok(SplitDesign {
            below,
            above,
            design_below,
            design_above,
        })
    }

    pub(crate) fn side_n(&self) -> (usize, usize) {
        (self.below.len(), self.above.len())
    }

    pub(crate) fn clamped(&self, points: (f64, f64)) -> bool {
        points.0 < self.below.x()[0] || points.1 > *self.above.x().last().unwrap()
    }
}

// Corrected and naive boundary values on one channel: (m_minus, m_plus, naive_minus, naive_plus).
fn boundary_values(
    split: &SplitDesign,
    channel: Channel,
    dirs: (Direction, Direction),
    points: (f64, f64),
) -> Result<(f64, f64, f64, f64)> {
    let lo = SideFit::new(&split.design_below, split.below.response(channel)?, dirs.0);
    let hi = SideFit::new(&split.design_above, split.above.response(channel)?, dirs.1);
    Ok((lo.from_left(points.0), hi.from_right(points.1), lo.last(), hi.first()))
}

/// Sharp estimate with explicit offsets `(h_below, h_above)` from the cutoff.
pub fn sharp_estimate_at(sample: &Sample, cfg: &RddConfig, offsets: (f64, f64)) -> Result<RddEstimate> {
    cfg.validate()?;
    let split = SplitDesign::new(sample, cfg.cutoff)?;
    let points = (cfg.cutoff - offsets.0, cfg.cutoff + offsets.1);
    let (m_minus, m_plus, naive_m_minus, naive_m_plus) =
        boundary_values(&split, Channel::Outcome, (cfg.below, cfg.above), points)?;
    let sign = if cfg.treated_above { 1.0 } else { -1.0 };
    Ok(RddEstimate {
        theta: sign * (m_plus - m_minus),
        naive_theta: sign * (naive_m_plus - naive_m_minus),
        side_n: split.side_n(),
        eval_points: points,
        m_minus,
        m_plus,
        naive_m_minus,
        naive_m_plus,
        p_minus: None,
        p_plus: None,
        clamped: split.clamped(points),
    })
}

/// Boundary-corrected sharp iRDD estimate.
pub fn sharp_estimate(sample: &Sample, cfg: &RddConfig) -> Result<RddEstimate> {
    cfg.validate()?;
    let (below, above) = sample.split_at(cfg.cutoff)?;
    sharp_estimate_at(sample, cfg, cfg.offsets(below.len(), above.len()))
}

/// Sharp estimate evaluated at the MSE-optimal points, given the slopes of
/// the regression on each side and the noise variance and running-variable
/// density at the cutoff.
pub fn sharp_estimate_optimal(
    sample: &Sample,
    cfg: &RddConfig,
    slopes: (f64, f64),
    sigma2: (f64, f64),
    density: f64,
) -> Result<RddEstimate> {
    let n = sample.len() as f64;
    let rate = n.powf(-1.0 / 3.0);
    let h_below = CSTAR * optimal_scale(slopes.0, sigma2.0, density)? * rate;
    let h_above = CSTAR * optimal_scale(slopes.1, sigma2.1, density)? * rate;
    sharp_estimate_at(sample, cfg, (h_below, h_above))
}

/// Fuzzy iRDD estimate: the outcome jump divided by the jump in the isotonic
/// fit of the treatment indicator, both boundary-corrected the same way.
pub fn fuzzy_estimate(sample: &Sample, cfg: &RddConfig) -> Result<RddEstimate> {
    cfg.validate()?;
    if !sample.has_treatment() {
        return Err(IrddError::InvalidInput(
            "fuzzy estimation needs a treatment indicator column".into(),
        ));
    }
    let split = SplitDesign::new(sample, cfg.cutoff)?;
    let (n_below, n_above) = split.side_n();
    let offsets = cfg.offsets(n_below, n_above);
    let points = (cfg.cutoff - offsets.0, cfg.cutoff + offsets.1);
    let (m_minus, m_plus, naive_m_minus, naive_m_plus) =
        boundary_values(&split, Channel::Outcome, (cfg.below, cfg.above), points)?;
    let d_dir = if cfg.treated_above {
        Direction::Increasing
    } else {
        Direction::Decreasing
    };
    let (p_minus, p_plus, naive_p_minus, naive_p_plus) =
        boundary_values(&split, Channel::Treatment, (d_dir, d_dir), points)?;
    let denom = p_plus - p_minus;
    if denom.abs() < MIN_DENOMINATOR {
        return Err(IrddError::WeakDiscontinuity { p_minus, p_plus });
    }
    let naive_denom = naive_p_plus - naive_p_minus;
    let naive_theta = if naive_denom.abs() < MIN_DENOMINATOR {
        f64::NAN
    } else {
        (naive_m_plus - naive_m_minus) / naive_denom
    };
    Ok(RddEstimate {
        theta: (m_plus - m_minus) / denom,
        naive_theta,
        side_n: (n_below, n_above),
        eval_points: points,
        m_minus,
        m_plus,
        naive_m_minus,
        naive_m_plus,
        p_minus: Some(p_minus),
        p_plus: Some(p_plus),
        clamped: split.clamped(points),
    })
}

/// Two-sided fit frozen at its boundary-corrected values near the cutoff.
///
/// Outside `[cutoff - h_below, cutoff + h_above]` it follows the side fits;
/// inside it is constant at the value read off at the nearer evaluation point.
#[derive(Debug, Clone)]
pub struct TrimmedFit {
    cutoff: f64,
    points: (f64, f64),
    below: SideFit,
    above: SideFit,
    frozen: (f64, f64),
}

impl TrimmedFit {
    pub fn eval(&self, x: f64) -> f64 {
        if x < self.points.0 {
            self.below.from_right(x)
        } else if x < self.cutoff {
            self.frozen.0
        } else if x <= self.points.1 {
            self.frozen.1
        } else {
            self.above.from_right(x)
        }
    }

    /// `y - m̃(x)` for every row, in the input row order.
    pub fn residuals(&self, sample: &Sample) -> Vec<f64> {
        sample
            .x()
            .iter()
            .zip(sample.y())
            .map(|(&x, &y)| y - self.eval(x))
            .collect()
    }

    pub fn eval_points(&self) -> (f64, f64) {
        self.points
    }

    /// Boundary values `(m̂₋, m̂₊)` the fit is frozen at.
    pub fn frozen_values(&self) -> (f64, f64) {
        self.frozen
    }
}

/// Trimmed two-sided fit with offsets `c·n^{-a}` taken from `cfg`.
pub fn trimmed_fit(sample: &Sample, cfg: &RddConfig) -> Result<TrimmedFit> {
    cfg.validate()?;
    let split = SplitDesign::new(sample, cfg.cutoff)?;
    let (n_below, n_above) = split.side_n();
    let offsets = cfg.offsets(n_below, n_above);
    Ok(trimmed_from_split(&split, cfg, offsets))
}

pub(crate) fn trimmed_from_split(split: &SplitDesign, cfg: &RddConfig, offsets: (f64, f64)) -> TrimmedFit {
    let points = (cfg.cutoff - offsets.0, cfg.cutoff + offsets.1);
    let below = SideFit::new(&split.design_below, split.below.y(), cfg.below);
    let above = SideFit::new(&split.design_above, split.above.y(), cfg.above);
    let frozen = (below.from_left(points.0), above.from_right(points.1));
    TrimmedFit {
        cutoff: cfg.cutoff,
        points,
        below,
        above,
        frozen,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(x: &[f64], y: &[f64]) -> Sample {
        Sample::new(x.to_vec(), y.to_vec()).unwrap()
    }

    #[test]
    fn offset_at_thousand_is_a_tenth() {
        let h = offset(1.0, 1.0 / 3.0, 1000);
        assert!((h - 0.1).abs() < 1e-15);
    }

    #[test]
    fn corrected_examples() {
        let s = sample(&[0.05, 0.15, 0.25, 0.35], &[1.0, 3.0, 2.0, 4.0]);
        // 4^{-1/2} = 0.5 lies beyond the last knot, so the fit clamps.
        assert_eq!(boundary_corrected_left(&s, 1.0, 0.5).unwrap(), 4.0);
        // 0.4·4^{-1/2} = 0.2 lies in (0.15, 0.25].
        assert_eq!(boundary_corrected_left(&s, 0.4, 0.5).unwrap(), 2.5);
        let m = s.reflected();
        assert_eq!(boundary_corrected_right(&m, 1.0, 0.5).unwrap(), -4.0);
        assert_eq!(boundary_corrected_right(&m, 0.4, 0.5).unwrap(), -2.5);

        let flat = sample(&[0.1, 0.2, 0.3], &[7.0, 7.0, 7.0]);
        for (c, a) in [(1.0, 0.5), (0.1, 0.2), (3.0, 0.9)] {
            assert_eq!(boundary_corrected_left(&flat, c, a).unwrap(), 7.0);
            assert_eq!(boundary_corrected_right(&flat.reflected(), c, a).unwrap(), -7.0);
        }
    }

    #[test]
    fn config_is_validated() {
        let s = sample(&[0.1], &[1.0]);
        assert!(matches!(boundary_corrected_left(&s, 0.0, 0.5), Err(IrddError::Config(_))));
        assert!(matches!(boundary_corrected_left(&s, 1.0, 1.0), Err(IrddError::Config(_))));
        assert!(matches!(boundary_corrected_right(&s, -1.0, 0.5), Err(IrddError::Config(_))));
        assert!(matches!(optimal_scale(0.0, 1.0, 1.0), Err(IrddError::Config(_))));
    }

    #[test]
    fn optimal_scale_examples() {
        assert!((optimal_scale(2.0, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((optimal_scale(0.25, 1.0, 1.0).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn step_data_recovers_jump() {
        let x = [-0.3, -0.2, -0.1, 0.0, 0.1, 0.2];
        let y = [0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        for cfg in [RddConfig::default(), RddConfig::default().with_c(0.01).with_a(0.9)] {
            let est = sharp_estimate(&sample(&x, &y), &cfg).unwrap();
            assert_eq!(est.theta, 1.0);
            assert_eq!(est.naive_theta, 1.0);
            assert_eq!(est.side_n, (3, 3));
        }
    }

    #[test]
    fn empty_side_reports_counts() {
        let s = sample(&[0.1, 0.2], &[1.0, 2.0]);
        assert_eq!(
            sharp_estimate(&s, &RddConfig::default()).unwrap_err(),
            IrddError::InsufficientData { below: 0, above: 2 }
        );
    }

    #[test]
    fn treated_below_flips_sign() {
        let s = sample(&[-0.2, -0.1, 0.1, 0.2], &[0.0, 0.0, 2.0, 2.0]);
        let mut cfg = RddConfig::default();
        cfg.treated_above = false;
        assert_eq!(sharp_estimate(&s, &cfg).unwrap().theta, -2.0);
    }

    #[test]
    fn decreasing_side_is_fit_decreasing() {
        let s = sample(&[-0.2, -0.1, 0.1, 0.2, 0.3], &[0.0, 0.0, 3.0, 2.0, 1.0]);
        let mut cfg = RddConfig::default().with_c(0.1);
        cfg.above = Direction::Decreasing;
        let est = sharp_estimate(&s, &cfg).unwrap();
        assert_eq!(est.m_plus, 3.0);
        assert_eq!(est.naive_m_plus, 3.0);
    }

    #[test]
    fn fuzzy_with_sharp_indicator_matches_sharp() {
        let x = [-0.3, -0.2, -0.1, 0.0, 0.1, 0.2];
        let y = [0.1, 0.4, 0.2, 1.5, 1.1, 1.9];
        let d = [0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let s = Sample::with_treatment(x.to_vec(), y.to_vec(), d.to_vec()).unwrap();
        let cfg = RddConfig::default();
        let fz = fuzzy_estimate(&s, &cfg).unwrap();
        let sh = sharp_estimate(&s, &cfg).unwrap();
        assert_eq!(fz.theta, sh.theta);
        assert_eq!((fz.p_minus, fz.p_plus), (Some(0.0), Some(1.0)));
    }

    #[test]
    fn fuzzy_weak_discontinuity() {
        let x = [-0.2, -0.1, 0.1, 0.2];
        let s = Sample::with_treatment(x.to_vec(), vec![0.0, 0.0, 1.0, 1.0], vec![1.0; 4]).unwrap();
        assert!(matches!(
            fuzzy_estimate(&s, &RddConfig::default()),
            Err(IrddError::WeakDiscontinuity { .. })
        ));
        let s = Sample::new(x.to_vec(), vec![0.0; 4]).unwrap();
        assert!(matches!(
            fuzzy_estimate(&s, &RddConfig::default()),
            Err(IrddError::InvalidInput(_))
        ));
    }

    #[test]
    fn fuzzy_constructed_sample() {
        // Below: d = [0, 1, 0] fits to [0, 0.5, 0.5]; above: d = [0, 1, 1] fits unchanged.
        let x = [-0.3, -0.2, -0.1, 0.1, 0.2, 0.3];
        let y = [0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let d = [0.0, 1.0, 0.0, 0.0, 1.0, 1.0];
        let s = Sample::with_treatment(x.to_vec(), y.to_vec(), d.to_vec()).unwrap();
        // Pooled n = 6; c chosen so the offset is 0.15: eval at -0.15 and 0.15.
        let cfg = RddConfig::default().with_c(0.15 * 6f64.powf(1.0 / 3.0));
        let est = fuzzy_estimate(&s, &cfg).unwrap();
        assert_eq!(est.p_minus, Some(0.5));
        assert_eq!(est.p_plus, Some(1.0));
        assert!((est.theta - 2.0).abs() < 1e-12);
    }

    #[test]
    fn trimmed_fit_freezes_near_cutoff() {
        let x: Vec<f64> = (-100..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        let s = sample(&x, &x);
        let cfg = RddConfig::default()
            .with_a(0.5)
            .with_sample_size(SampleSizeRule::PerSide);
        let t = trimmed_fit(&s, &cfg).unwrap();
        let (lo, hi) = t.eval_points();
        assert!((lo + 0.1).abs() < 1e-15 && (hi - 0.1).abs() < 1e-15);
        let (f_lo, f_hi) = t.frozen_values();
        // Left-side value at -0.1 reads the last knot at or below it: -0.105.
        assert!((f_lo + 0.105).abs() < 1e-12);
        assert!((f_hi - 0.105).abs() < 1e-12);
        for &v in &[-0.1, -0.07, -0.0001] {
            assert_eq!(t.eval(v), f_lo);
        }
        for &v in &[0.0, 0.05, 0.1] {
            assert_eq!(t.eval(v), f_hi);
        }
        assert_eq!(t.eval(-0.205), -0.205);
        assert_eq!(t.eval(0.505), 0.505);
    }
}
