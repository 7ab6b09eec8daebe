//! Wild bootstrap for boundary values and sharp discontinuity effects.
//!
//! The trimmed procedure draws pseudo-outcomes around a fit that is frozen at
//! its boundary-corrected value near the boundary, then refits on the original
//! design. The naive procedure resamples around the untrimmed fit and reads off
//! the extreme fitted values; it is inconsistent and kept for comparison.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{IrddError, Result};
use crate::isotonic::{IsotonicDesign, StepFit};
use crate::rdd::{trimmed_from_split, RddConfig, SideFit, SplitDesign};
use crate::rng::stream_rng;
use crate::sample::Sample;
use crate::stats::{quantile_sorted, sorted_copy};

/// Bootstrap runs with fewer replicates than this are flagged.
pub const MIN_RECOMMENDED_REPS: usize = 100;

/// Mean-zero, unit-variance multiplier law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Multiplier {
    #[default]
    Rademacher,
    Gaussian,
    Mammen,
}

impl Multiplier {
    pub fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            Multiplier::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Multiplier::Gaussian => rng.sample(StandardNormal),
            Multiplier::Mammen => {
                let s5 = 5f64.sqrt();
                if rng.random::<f64>() < (s5 + 1.0) / (2.0 * s5) {
                    -(s5 - 1.0) / 2.0
                } else {
                    (s5 + 1.0) / 2.0
                }
            }
        }
    }
}

pub fn draw_multipliers<R: Rng + ?Sized>(kind: Multiplier, n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| kind.draw(rng)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum IntervalKind {
    /// `[θ - q(1 - α/2), θ - q(α/2)]` from the quantiles `q` of `θ* - θ`.
    #[default]
    Basic,
    /// `[θ + q(α/2), θ + q(1 - α/2)]`.
    Percentile,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BootstrapSettings {
    pub reps: usize,
    pub level: f64,
    pub multiplier: Multiplier,
    pub interval: IntervalKind,
    pub seed: u64,
    pub trimmed: bool,
}

impl Default for BootstrapSettings {
    fn default() -> Self {
        BootstrapSettings {
            reps: 999,
            level: 0.95,
            multiplier: Multiplier::Rademacher,
            interval: IntervalKind::Basic,
            seed: 0,
            trimmed: true,
        }
    }
}

impl BootstrapSettings {
    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(IrddError::Config("reps must be at least 1".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(IrddError::Config(format!(
                "level must lie in (0, 1), got {}",
                self.level
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapReport {
    pub estimate: f64,
    /// `θ* - θ` for every replicate, in replicate order.
    pub replicates: Vec<f64>,
    pub ci: (f64, f64),
    pub level: f64,
    pub reps: usize,
    pub c: f64,
    pub a: f64,
    pub eval_points: (f64, f64),
    pub settings: BootstrapSettings,
    /// Fewer than `MIN_RECOMMENDED_REPS` replicates were requested.
    pub few_replicates: bool,
}

impl BootstrapReport {
    pub fn length(&self) -> f64 {
        self.ci.1 - self.ci.0
    }

    pub fn covers(&self, value: f64) -> bool {
        self.ci.0 <= value && value <= self.ci.1
    }

    /// Interval at another level from the same replicates.
    pub fn interval_at(&self, level: f64) -> (f64, f64) {
        interval(
            self.estimate,
            &sorted_copy(&self.replicates),
            level,
            self.settings.interval,
        )
    }
}

fn interval(estimate: f64, sorted_reps: &[f64], level: f64, kind: IntervalKind) -> (f64, f64) {
    let alpha = 1.0 - level;
    let q_lo = quantile_sorted(sorted_reps, alpha / 2.0);
    let q_hi = quantile_sorted(sorted_reps, 1.0 - alpha / 2.0);
    match kind {
        IntervalKind::Basic => (estimate - q_hi, estimate - q_lo),
        IntervalKind::Percentile => (estimate + q_lo, estimate + q_hi),
    }
}

fn report(
    estimate: f64,
    replicates: Vec<f64>,
    c: f64,
    a: f64,
    eval_points: (f64, f64),
    settings: &BootstrapSettings,
) -> BootstrapReport {
    let ci = interval(
        estimate,
        &sorted_copy(&replicates),
        settings.level,
        settings.interval,
    );
    BootstrapReport {
        estimate,
        replicates,
        ci,
        level: settings.level,
        reps: settings.reps,
        c,
        a,
        eval_points,
        settings: *settings,
        few_replicates: settings.reps < MIN_RECOMMENDED_REPS,
    }
}

// Pseudo-outcomes center + η·resid with one multiplier per row.
fn perturb<R: Rng>(center: &[f64], resid: &[f64], kind: Multiplier, rng: &mut R) -> Vec<f64> {
    center
        .iter()
        .zip(resid)
        .map(|(&m, &e)| m + kind.draw(rng) * e)
        .collect()
}

fn replicate_all<F>(settings: &BootstrapSettings, f: F) -> Vec<f64>
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> f64 + Sync,
{
    (0..settings.reps as u64)
        .into_par_iter()
        .map(|b| f(&mut stream_rng(settings.seed, b)))
        .collect()
}

/// Trimmed wild bootstrap interval for the sharp effect.
///
/// `cfg.a` sets the trimming and evaluation rate; `1/2` is the usual choice.
/// With `settings.trimmed` false the pseudo-data are centered on the untrimmed
/// side fits while the estimate is still read off at the corrected points.
pub fn sharp_wild_ci(
    sample: &Sample,
    cfg: &RddConfig,
    settings: &BootstrapSettings,
) -> Result<BootstrapReport> {
    cfg.validate()?;
    settings.validate()?;
    let split = SplitDesign::new(sample, cfg.cutoff)?;
    let (n_below, n_above) = split.side_n();
    let trimmed = trimmed_from_split(&split, cfg, cfg.offsets(n_below, n_above));
    let points = trimmed.eval_points();
    let (f_lo, f_hi) = trimmed.frozen_values();
    let sign = if cfg.treated_above { 1.0 } else { -1.0 };
    let estimate = sign * (f_hi - f_lo);

    let center = |side: &Sample, design: &IsotonicDesign, dir| -> Vec<f64> {
        if settings.trimmed {
            side.x().iter().map(|&x| trimmed.eval(x)).collect()
        } else {
            SideFit::new(design, side.y(), dir).fitted()
        }
    };
    let c_lo = center(&split.below, &split.design_below, cfg.below);
    let c_hi = center(&split.above, &split.design_above, cfg.above);
    let r_lo: Vec<f64> = split.below.y().iter().zip(&c_lo).map(|(y, m)| y - m).collect();
    let r_hi: Vec<f64> = split.above.y().iter().zip(&c_hi).map(|(y, m)| y - m).collect();

    let replicates = replicate_all(settings, |rng| {
        let y_lo = perturb(&c_lo, &r_lo, settings.multiplier, rng);
        let y_hi = perturb(&c_hi, &r_hi, settings.multiplier, rng);
        let lo = SideFit::new(&split.design_below, &y_lo, cfg.below).from_left(points.0);
        let hi = SideFit::new(&split.design_above, &y_hi, cfg.above).from_right(points.1);
        sign * (hi - lo) - estimate
    });
    Ok(report(estimate, replicates, cfg.c, cfg.a, points, settings))
}

/// Naive wild bootstrap for the uncorrected effect: residuals from the
/// untrimmed fits and estimates read off at the observations nearest the cutoff.
pub fn naive_wild_ci(
    sample: &Sample,
    cfg: &RddConfig,
    settings: &BootstrapSettings,
) -> Result<BootstrapReport> {
    cfg.validate()?;
    settings.validate()?;
    let split = SplitDesign::new(sample, cfg.cutoff)?;
    let lo = SideFit::new(&split.design_below, split.below.y(), cfg.below);
    let hi = SideFit::new(&split.design_above, split.above.y(), cfg.above);
    let sign = if cfg.treated_above { 1.0 } else { -1.0 };
    let estimate = sign * (hi.first() - lo.last());
    let c_lo = lo.fitted();
    let c_hi = hi.fitted();
    let r_lo: Vec<f64> = split.below.y().iter().zip(&c_lo).map(|(y, m)| y - m).collect();
    let r_hi: Vec<f64> = split.above.y().iter().zip(&c_hi).map(|(y, m)| y - m).collect();

    let replicates = replicate_all(settings, |rng| {
        let y_lo = perturb(&c_lo, &r_lo, settings.multiplier, rng);
        let y_hi = perturb(&c_hi, &r_hi, settings.multiplier, rng);
        let lo = SideFit::new(&split.design_below, &y_lo, cfg.below).last();
        let hi = SideFit::new(&split.design_above, &y_hi, cfg.above).first();
        sign * (hi - lo) - estimate
    });
    let points = (*split.below.x().last().unwrap(), split.above.x()[0]);
    Ok(report(estimate, replicates, f64::NAN, f64::NAN, points, settings))
}

/// One-sided trimmed fit for a sample whose boundary of interest is `x = 0`
/// with support to the right: constant at `m̂(c·n^{-a})` on `[0, c·n^{-a}]`,
/// the isotonic fit beyond.
#[derive(Debug, Clone)]
pub struct BoundaryTrim {
    point: f64,
    fit: StepFit,
    frozen: f64,
    trimmed: bool,
}

impl BoundaryTrim {
    pub fn new(side: &Sample, c: f64, a: f64, trimmed: bool) -> Result<Self> {
        RddConfig::default().with_c(c).with_a(a).validate()?;
        let side = side.sorted();
        let design = IsotonicDesign::new(side.x())?;
        let fit = design.fit(side.y());
        let point = c * (side.len() as f64).powf(-a);
        let frozen = fit.eval(point);
        Ok(BoundaryTrim {
            point,
            fit,
            frozen,
            trimmed,
        })
    }

    pub fn eval_point(&self) -> f64 {
        self.point
    }

    pub fn estimate(&self) -> f64 {
        self.frozen
    }

    pub fn eval(&self, x: f64) -> f64 {
        if self.trimmed && x <= self.point {
            self.frozen
        } else {
            self.fit.eval(x)
        }
    }
}

/// Trimmed wild bootstrap interval for the boundary value `m(0)` of a sample
/// supported to the right of `x = 0`.
pub fn boundary_wild_ci(
    side: &Sample,
    c: f64,
    a: f64,
    settings: &BootstrapSettings,
) -> Result<BootstrapReport> {
    settings.validate()?;
    let trim = BoundaryTrim::new(side, c, a, settings.trimmed)?;
    let side = side.sorted();
    let design = IsotonicDesign::new(side.x())?;
    let center: Vec<f64> = side.x().iter().map(|&x| trim.eval(x)).collect();
    let resid: Vec<f64> = side.y().iter().zip(&center).map(|(y, m)| y - m).collect();
    let point = trim.eval_point();
    let estimate = trim.estimate();
    let replicates = replicate_all(settings, |rng| {
        let y = perturb(&center, &resid, settings.multiplier, rng);
        design.fit(&y).eval(point) - estimate
    });
    Ok(report(estimate, replicates, c, a, (0.0, point), settings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn rademacher_support() {
        let mut rng = stream_rng(1, 0);
        let v = draw_multipliers(Multiplier::Rademacher, 1000, &mut rng);
        assert!(v.iter().all(|&e| e == 1.0 || e == -1.0));
    }

    #[test]
    fn mammen_law_has_unit_moments() {
        let s5 = 5f64.sqrt();
        let (lo, hi) = (-(s5 - 1.0) / 2.0, (s5 + 1.0) / 2.0);
        let p = (s5 + 1.0) / (2.0 * s5);
        assert!((p * lo + (1.0 - p) * hi).abs() < 1e-15);
        assert!((p * lo * lo + (1.0 - p) * hi * hi - 1.0).abs() < 1e-14);
        let mut rng = stream_rng(2, 0);
        let v = draw_multipliers(Multiplier::Mammen, 1000, &mut rng);
        assert!(v.iter().all(|&e| e == lo || e == hi));
    }

    #[test]
    fn interval_kinds() {
        let reps = [-2.0, -1.0, 0.0, 1.0, 3.0];
        assert_eq!(interval(10.0, &reps, 0.5, IntervalKind::Basic), (9.0, 11.0));
        assert_eq!(interval(10.0, &reps, 0.5, IntervalKind::Percentile), (9.0, 11.0));
        let reps = [0.0, 0.0, 0.0, 4.0, 4.0];
        assert_eq!(interval(10.0, &reps, 0.5, IntervalKind::Basic), (6.0, 10.0));
        assert_eq!(interval(10.0, &reps, 0.5, IntervalKind::Percentile), (10.0, 14.0));
    }

    #[test]
    fn settings_are_validated() {
        let s = Sample::new(vec![-0.1, 0.1], vec![0.0, 1.0]).unwrap();
        let cfg = RddConfig::default().with_a(0.5);
        let bad = BootstrapSettings {
            reps: 0,
            ..Default::default()
        };
        assert!(matches!(sharp_wild_ci(&s, &cfg, &bad), Err(IrddError::Config(_))));
        let bad = BootstrapSettings {
            level: 1.0,
            ..Default::default()
        };
        assert!(matches!(sharp_wild_ci(&s, &cfg, &bad), Err(IrddError::Config(_))));
        let few = BootstrapSettings {
            reps: 20,
            ..Default::default()
        };
        assert!(sharp_wild_ci(&s, &cfg, &few).unwrap().few_replicates);
    }

    #[test]
    fn zero_residuals_give_zero_width() {
        let x: Vec<f64> = (-20..20).map(|i| i as f64 / 20.0).collect();
        let y: Vec<f64> = x.iter().map(|&v| if v >= 0.0 { 1.0 } else { 0.0 }).collect();
        let s = Sample::new(x.clone(), y).unwrap();
        let cfg = RddConfig::default().with_a(0.5);
        let set = BootstrapSettings {
            reps: 200,
            ..Default::default()
        };
        for r in [
            sharp_wild_ci(&s, &cfg, &set).unwrap(),
            naive_wild_ci(&s, &cfg, &set).unwrap(),
        ] {
            assert_eq!(r.estimate, 1.0);
            assert_eq!(r.ci, (1.0, 1.0));
            assert!(r.replicates.iter().all(|&v| v == 0.0));
        }
        let side = Sample::new(x.iter().map(|v| v + 1.5).collect(), vec![2.0; 40]).unwrap();
        let r = boundary_wild_ci(&side, 1.0, 0.5, &set).unwrap();
        assert_eq!(r.ci, (2.0, 2.0));
    }

    #[test]
    fn trimming_freezes_on_initial_segment() {
        let x: Vec<f64> = (1..=100).map(|i| i as f64 / 100.0).collect();
        let s = Sample::new(x.clone(), x.clone()).unwrap();
        let on = BoundaryTrim::new(&s, 1.0, 0.5, true).unwrap();
        let off = BoundaryTrim::new(&s, 1.0, 0.5, false).unwrap();
        assert!((on.eval_point() - 0.1).abs() < 1e-15);
        for &v in &x {
            if v <= on.eval_point() {
                assert_eq!(on.eval(v), on.estimate());
            } else {
                assert_eq!(on.eval(v), v);
            }
            assert_eq!(off.eval(v), v);
        }
    }
}
