//! Monte Carlo designs and replication tables.
//!
//! Every cell `(design, n)` draws its samples from streams keyed by the master
//! seed, the design and `n`, and all estimators in a cell see the same
//! samples. Results do not depend on the thread count.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{sharp_baseline_estimate, Baseline, LocalLinearConfig};
use crate::bootstrap::{sharp_wild_ci, BootstrapSettings};
use crate::error::{IrddError, Result};
use crate::rdd::{sharp_estimate, sharp_estimate_optimal, RddConfig};
use crate::rng::{derive_seed, stream_rng};
use crate::sample::Sample;
use crate::stats::{mean, pairwise_sum, variance};

pub const SCHEMA_VERSION: u32 = 1;

/// Regression function without the jump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeanFn {
    /// `exp(0.25 x)`
    Exp,
    /// `x³ + 0.25 x`
    Cubic,
    /// `(1 - e^{4x})` for `x >= 0`, `0.2 x` below.
    SteepDrop,
    /// Gaussian bump peaking at `x = 0.5` for `x >= 0`, `0.2 x` below.
    Bump,
    /// Identically zero.
    Flat,
}

impl MeanFn {
    pub fn eval(self, x: f64) -> f64 {
        let e125 = (-1.25f64).exp();
        match self {
            MeanFn::Exp => (0.25 * x).exp(),
            MeanFn::Cubic => x * x * x + 0.25 * x,
            MeanFn::SteepDrop => {
                if x >= 0.0 {
                    1.0 - (4.0 * x).exp()
                } else {
                    0.2 * x
                }
            }
            MeanFn::Bump => {
                if x >= 0.5 {
                    -e125 + (-(x - 0.5).powi(2)).exp()
                } else if x >= 0.0 {
                    -(e125 - (-5.0 * (x - 0.5).powi(2)).exp())
                } else {
                    0.2 * x
                }
            }
            MeanFn::Flat => 0.0,
        }
    }

    /// One-sided derivatives `(m'(0-), m'(0+))`.
    pub fn slopes_at_zero(self) -> (f64, f64) {
        match self {
            MeanFn::Exp | MeanFn::Cubic => (0.25, 0.25),
            MeanFn::SteepDrop => (0.2, -4.0),
            MeanFn::Bump => (0.2, 5.0 * (-1.25f64).exp()),
            MeanFn::Flat => (0.0, 0.0),
        }
    }
}

/// Running variable `2·Beta(α, β) - 1` on `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum XLaw {
    Beta22,
    Beta05,
}

impl XLaw {
    pub fn shape(self) -> (f64, f64) {
        match self {
            XLaw::Beta22 => (2.0, 2.0),
            XLaw::Beta05 => (0.5, 0.5),
        }
    }

    /// Density of the running variable at zero.
    pub fn density_at_zero(self) -> f64 {
        match self {
            // Beta(2,2) density at 1/2 is 1.5, halved by the affine map.
            XLaw::Beta22 => 0.75,
            // Beta(1/2,1/2) density at 1/2 is 2/π.
            XLaw::Beta05 => 1.0 / std::f64::consts::PI,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaFn {
    Constant(f64),
    /// `sqrt(x + 1)`
    SqrtShifted,
}

impl SigmaFn {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            SigmaFn::Constant(s) => s,
            SigmaFn::SqrtShifted => (x + 1.0).max(0.0).sqrt(),
        }
    }
}

/// Local constants at the cutoff for optimal-`c` and limit-law runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Oracle {
    pub slope: (f64, f64),
    pub sigma2: (f64, f64),
    pub density: f64,
}

/// `Y = m(X) + θ·1{X >= 0} + σ(X)·ε` with `ε` standard normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DgpSpec {
    pub id: Option<u8>,
    pub mean: MeanFn,
    pub theta: f64,
    pub x_law: XLaw,
    pub sigma: SigmaFn,
}

impl DgpSpec {
    /// Designs 1 to 8, homoskedastic or with `σ(x) = sqrt(x + 1)`.
    pub fn registry(id: u8, heteroskedastic: bool) -> Result<Self> {
        let (mean, x_law) = match id {
            1 => (MeanFn::Exp, XLaw::Beta22),
            2 => (MeanFn::Exp, XLaw::Beta05),
            3 => (MeanFn::Cubic, XLaw::Beta22),
            4 => (MeanFn::Cubic, XLaw::Beta05),
            5 => (MeanFn::SteepDrop, XLaw::Beta22),
            6 => (MeanFn::SteepDrop, XLaw::Beta05),
            7 => (MeanFn::Bump, XLaw::Beta22),
            8 => (MeanFn::Bump, XLaw::Beta05),
            _ => return Err(IrddError::Config(format!("unknown design id {id}"))),
        };
        Ok(DgpSpec {
            id: Some(id),
            mean,
            theta: 1.0,
            x_law,
            sigma: if heteroskedastic {
                SigmaFn::SqrtShifted
            } else {
                SigmaFn::Constant(1.0)
            },
        })
    }

    pub fn heteroskedastic(&self) -> bool {
        matches!(self.sigma, SigmaFn::SqrtShifted)
    }

    pub fn label(&self) -> String {
        let base = match self.id {
            Some(id) => format!("dgp{id}"),
            None => "custom".to_string(),
        };
        if self.heteroskedastic() {
            format!("{base}-het")
        } else {
            base
        }
    }

    pub fn regression(&self, x: f64) -> f64 {
        self.mean.eval(x) + if x >= 0.0 { self.theta } else { 0.0 }
    }

    pub fn oracle(&self) -> Oracle {
        let s2 = self.sigma.eval(0.0).powi(2);
        Oracle {
            slope: self.mean.slopes_at_zero(),
            sigma2: (s2, s2),
            density: self.x_law.density_at_zero(),
        }
    }

    fn key(&self, index: usize) -> u64 {
        let id = self.id.map_or(1000 + index as u64, u64::from);
        id | (u64::from(self.heteroskedastic()) << 16)
    }
}

/// Draw `n` observations; the treatment column is `1{x >= 0}`.
pub fn dgp_sample<R: Rng + ?Sized>(spec: &DgpSpec, n: usize, rng: &mut R) -> Result<Sample> {
    if n == 0 {
        return Err(IrddError::Config("sample size must be at least 1".into()));
    }
    let (a, b) = spec.x_law.shape();
    let ga = Gamma::new(a, 1.0).expect("positive shape");
    let gb = Gamma::new(b, 1.0).expect("positive shape");
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut d = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = ga.sample(rng);
        let v: f64 = gb.sample(rng);
        let xi = 2.0 * u / (u + v) - 1.0;
        let e: f64 = rng.sample(StandardNormal);
        x.push(xi);
        y.push(spec.regression(xi) + spec.sigma.eval(xi) * e);
        d.push(if xi >= 0.0 { 1.0 } else { 0.0 });
    }
    Sample::with_treatment(x, y, d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// Boundary-corrected isotonic estimator with `a = 1/3`.
    Irdd { c: f64 },
    /// Isotonic estimator at the MSE-optimal points from the design's oracle constants.
    IrddOptimal,
    /// Uncorrected isotonic estimator.
    Naive,
    Knn,
    LocalLinear,
    /// Returns the true effect; for checking the harness.
    Oracle,
}

impl Estimator {
    pub fn name(&self) -> String {
        match self {
            Estimator::Irdd { c } if *c == 1.0 => "irdd".into(),
            Estimator::Irdd { c } => format!("irdd-c{c}"),
            Estimator::IrddOptimal => "irdd-opt".into(),
            Estimator::Naive => "naive".into(),
            Estimator::Knn => "knn".into(),
            Estimator::LocalLinear => "ll".into(),
            Estimator::Oracle => "oracle".into(),
        }
    }

    pub fn estimate(&self, sample: &Sample, spec: &DgpSpec) -> Result<f64> {
        let cfg = RddConfig::default();
        match *self {
            Estimator::Irdd { c } => Ok(sharp_estimate(sample, &cfg.with_c(c))?.theta),
            Estimator::IrddOptimal => {
                let o = spec.oracle();
                Ok(sharp_estimate_optimal(sample, &cfg, o.slope, o.sigma2, o.density)?.theta)
            }
            Estimator::Naive => Ok(sharp_estimate(sample, &cfg)?.naive_theta),
            Estimator::Knn => Ok(sharp_baseline_estimate(sample, 0.0, &Baseline::Knn(None))?.theta),
            Estimator::LocalLinear => Ok(sharp_baseline_estimate(
                sample,
                0.0,
                &Baseline::LocalLinear(LocalLinearConfig::default()),
            )?
            .theta),
            Estimator::Oracle => Ok(spec.theta),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McRow {
    pub dgp: String,
    pub n: usize,
    pub estimator: String,
    pub reps: usize,
    pub skipped: usize,
    pub bias: f64,
    pub variance: f64,
    pub mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageRow {
    pub dgp: String,
    pub n: usize,
    pub c: f64,
    pub reps: usize,
    pub skipped: usize,
    pub boot_reps: usize,
    pub level: f64,
    pub coverage: f64,
    pub mean_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub schema_version: u32,
    pub seed: u64,
    pub reps: usize,
    pub rows: Vec<McRow>,
    pub coverage: Vec<CoverageRow>,
}

fn cell_seed(seed: u64, spec: &DgpSpec, index: usize, n: usize) -> u64 {
    derive_seed(derive_seed(seed, spec.key(index)), n as u64)
}

// An empty side or a degenerate baseline window skips the replication.
fn skippable(e: &IrddError) -> bool {
    matches!(e, IrddError::InsufficientData { .. } | IrddError::Degenerate(_))
}

/// Bias, variance and MSE of each estimator on each `(design, n)` cell.
pub fn mc_table(
    dgps: &[DgpSpec],
    sizes: &[usize],
    estimators: &[Estimator],
    reps: usize,
    seed: u64,
) -> Result<McReport> {
    if reps < 100 {
        return Err(IrddError::Config(format!("reps must be at least 100, got {reps}")));
    }
    let mut rows = Vec::new();
    for (i, spec) in dgps.iter().enumerate() {
        for &n in sizes {
            let cs = cell_seed(seed, spec, i, n);
            let draws: Vec<Option<Vec<f64>>> = (0..reps as u64)
                .into_par_iter()
                .map(|r| -> Result<Option<Vec<f64>>> {
                    let s = dgp_sample(spec, n, &mut stream_rng(cs, r))?;
                    let mut errs = Vec::with_capacity(estimators.len());
                    for est in estimators {
                        match est.estimate(&s, spec) {
                            Ok(t) => errs.push(t - spec.theta),
                            Err(e) if skippable(&e) => return Ok(None),
                            Err(e) => return Err(e),
                        }
                    }
                    Ok(Some(errs))
                })
                .collect::<Result<_>>()?;
            let kept: Vec<&Vec<f64>> = draws.iter().flatten().collect();
            for (j, est) in estimators.iter().enumerate() {
                let e: Vec<f64> = kept.iter().map(|v| v[j]).collect();
                let sq: Vec<f64> = e.iter().map(|v| v * v).collect();
                let (bias, var, mse) = if e.is_empty() {
                    (f64::NAN, f64::NAN, f64::NAN)
                } else {
                    (mean(&e), variance(&e), pairwise_sum(&sq) / e.len() as f64)
                };
                rows.push(McRow {
                    dgp: spec.label(),
                    n,
                    estimator: est.name(),
                    reps,
                    skipped: reps - kept.len(),
                    bias,
                    variance: var,
                    mse,
                });
            }
        }
    }
    Ok(McReport {
        schema_version: SCHEMA_VERSION,
        seed,
        reps,
        rows,
        coverage: Vec::new(),
    })
}

/// Coverage of the true effect and mean length of trimmed wild bootstrap
/// intervals (`a = 1/2`) for each `(design, n, c)` cell.
///
/// `boot.seed` is ignored; each replication derives its own.
pub fn coverage_table(
    dgps: &[DgpSpec],
    sizes: &[usize],
    c_grid: &[f64],
    reps: usize,
    boot: &BootstrapSettings,
    seed: u64,
) -> Result<McReport> {
    if reps == 0 {
        return Err(IrddError::Config("reps must be at least 1".into()));
    }
    let mut coverage = Vec::new();
    for (i, spec) in dgps.iter().enumerate() {
        for &n in sizes {
            let cs = cell_seed(seed, spec, i, n);
            for &c in c_grid {
                let cfg = RddConfig::default().with_c(c).with_a(0.5);
                let out: Vec<Option<(bool, f64)>> = (0..reps as u64)
                    .into_par_iter()
                    .map(|r| -> Result<Option<(bool, f64)>> {
                        let s = dgp_sample(spec, n, &mut stream_rng(cs, r))?;
                        let settings = BootstrapSettings {
                            seed: derive_seed(cs ^ 0xB0B0, r),
                            ..*boot
                        };
                        match sharp_wild_ci(&s, &cfg, &settings) {
                            Ok(rep) => Ok(Some((rep.covers(spec.theta), rep.length()))),
                            Err(e) if skippable(&e) => Ok(None),
                            Err(e) => Err(e),
                        }
                    })
                    .collect::<Result<_>>()?;
                let kept: Vec<(bool, f64)> = out.into_iter().flatten().collect();
                let hits: Vec<f64> = kept.iter().map(|&(h, _)| f64::from(u8::from(h))).collect();
                let lens: Vec<f64> = kept.iter().map(|&(_, l)| l).collect();
                coverage.push(CoverageRow {
                    dgp: spec.label(),
                    n,
                    c,
                    reps,
                    skipped: reps - kept.len(),
                    boot_reps: boot.reps,
                    level: boot.level,
                    coverage: if kept.is_empty() { f64::NAN } else { mean(&hits) },
                    mean_length: if kept.is_empty() { f64::NAN } else { mean(&lens) },
                });
            }
        }
    }
    Ok(McReport {
        schema_version: SCHEMA_VERSION,
        seed,
        reps,
        rows: Vec::new(),
        coverage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_formulas() {
        let d1 = DgpSpec::registry(1, false).unwrap();
        assert_eq!(d1.regression(-1e-300), (0.25f64 * -1e-300).exp());
        assert_eq!(d1.regression(0.0), 2.0);
        assert_eq!(d1.oracle().density, 0.75);
        assert!(DgpSpec::registry(9, false).is_err());
        assert_eq!(DgpSpec::registry(3, false).unwrap().mean.eval(0.5), 0.25);
        let d5 = DgpSpec::registry(5, false).unwrap();
        assert_eq!(d5.mean.eval(0.0), 0.0);
        assert_eq!(d5.mean.eval(-0.5), -0.1);
        let h = DgpSpec::registry(2, true).unwrap();
        assert_eq!(h.sigma.eval(0.0), 1.0);
        assert_eq!(h.sigma.eval(3.0), 2.0);
        assert_eq!(h.label(), "dgp2-het");
    }

    #[test]
    fn bump_formula_as_printed() {
        let m = MeanFn::Bump;
        let e = (-1.25f64).exp();
        let at = |x: f64| m.eval(x);
        assert!((at(0.25) - (-(e - (-0.3125f64).exp()))).abs() < 1e-15);
        assert!((at(0.5) - (1.0 - e)).abs() < 1e-15);
        assert!((at(0.75) - (-e + (-0.0625f64).exp())).abs() < 1e-15);
        assert!((at(0.25) - 0.445_111).abs() < 1e-6);
        assert!((at(0.5) - 0.713_495).abs() < 1e-6);
        assert!((at(0.75) - 0.652_908).abs() < 1e-6);
        assert_eq!(at(0.0), 0.0);
    }

    #[test]
    fn samples_are_reproducible_and_carry_treatment() {
        let spec = DgpSpec::registry(1, false).unwrap();
        let a = dgp_sample(&spec, 50, &mut stream_rng(1, 2)).unwrap();
        let b = dgp_sample(&spec, 50, &mut stream_rng(1, 2)).unwrap();
        assert_eq!(a, b);
        for (&x, &d) in a.x().iter().zip(a.d().unwrap()) {
            assert!((-1.0..=1.0).contains(&x));
            assert_eq!(d, if x >= 0.0 { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn oracle_estimator_has_zero_error() {
        let spec = DgpSpec::registry(1, false).unwrap();
        let r = mc_table(&[spec], &[50], &[Estimator::Oracle], 100, 3).unwrap();
        let row = &r.rows[0];
        assert_eq!((row.bias, row.variance, row.mse), (0.0, 0.0, 0.0));
        assert!(mc_table(&[spec], &[50], &[Estimator::Oracle], 99, 3).is_err());
    }
}
