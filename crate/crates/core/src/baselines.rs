//! Unrestricted boundary estimators used as benchmarks: k nearest neighbors
//! and local linear regression with a triangular kernel.

use serde::Serialize;

use crate::error::{IrddError, Result};
use crate::rdd::RddEstimate;
use crate::sample::Sample;
use crate::stats::sample_sd;

/// Largest `k` with `k³ <= n`.
pub fn default_k(n: usize) -> usize {
    let mut k = (n as f64).cbrt().round() as usize;
    while k * k * k > n {
        k -= 1;
    }
    while (k + 1) * (k + 1) * (k + 1) <= n {
        k += 1;
    }
    k.max(1)
}

/// Mean of `y` over the `k` observations closest to `boundary`.
///
/// Observations tied with the `k`-th closest distance are all included.
pub fn knn_boundary(side: &Sample, boundary: f64, k: usize) -> Result<f64> {
    if k == 0 || k > side.len() {
        return Err(IrddError::Config(format!(
            "k must lie in 1..={}, got {k}",
            side.len()
        )));
    }
    let mut by_dist: Vec<(f64, f64)> = side
        .x()
        .iter()
        .zip(side.y())
        .map(|(&x, &y)| ((x - boundary).abs(), y))
        .collect();
    by_dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let kth = by_dist[k - 1].0;
    let chosen: Vec<f64> = by_dist
        .iter()
        .take_while(|(d, _)| *d <= kth)
        .map(|&(_, y)| y)
        .collect();
    Ok(chosen.iter().sum::<f64>() / chosen.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Bandwidth {
    /// `1.06 · sd(x) · n^{-1/5}` on the side being fit.
    #[default]
    RuleOfThumb,
    Fixed(f64),
}

/// Local linear fit with triangular kernel `(1 - |u|)₊`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct LocalLinearConfig {
    pub bandwidth: Bandwidth,
}

impl LocalLinearConfig {
    pub fn bandwidth_for(&self, side: &Sample) -> Result<f64> {
        let h = match self.bandwidth {
            Bandwidth::Fixed(h) => h,
            Bandwidth::RuleOfThumb => {
                if side.len() < 2 {
                    return Err(IrddError::Degenerate(
                        "rule-of-thumb bandwidth needs at least two observations".into(),
                    ));
                }
                1.06 * sample_sd(side.x()) * (side.len() as f64).powf(-0.2)
            }
        };
        if !(h > 0.0 && h.is_finite()) {
            return Err(IrddError::Config(format!("bandwidth must be positive, got {h}")));
        }
        Ok(h)
    }
}

/// Intercept at `boundary` of the kernel-weighted least-squares line.
pub fn local_linear_boundary(side: &Sample, boundary: f64, cfg: &LocalLinearConfig) -> Result<f64> {
    let h = cfg.bandwidth_for(side)?;
    let (mut s0, mut s1, mut s2, mut t0, mut t1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut support: Vec<f64> = Vec::new();
    for (&x, &y) in side.x().iter().zip(side.y()) {
        let d = x - boundary;
        let w = 1.0 - (d / h).abs();
        if w <= 0.0 {
            continue;
        }
        support.push(x);
        s0 += w;
        s1 += w * d;
        s2 += w * d * d;
        t0 += w * y;
        t1 += w * d * y;
    }
    support.sort_by(f64::total_cmp);
    support.dedup();
    let det = s0 * s2 - s1 * s1;
    if support.len() < 2 || !(det > 1e-12 * s0 * s2) {
        return Err(IrddError::Degenerate(format!(
            "fewer than two distinct x within bandwidth {h}; try a larger bandwidth"
        )));
    }
    Ok((s2 * t0 - s1 * t1) / det)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Baseline {
    /// `None` uses `default_k` of the full sample size.
    Knn(Option<usize>),
    LocalLinear(LocalLinearConfig),
}

/// Effect estimate from a baseline fit on each side of the cutoff.
///
/// The uncorrected fields of the result are `NaN`; they only apply to the
/// isotonic estimator.
pub fn sharp_baseline_estimate(sample: &Sample, cutoff: f64, method: &Baseline) -> Result<RddEstimate> {
    let (below, above) = sample.split_at(cutoff)?;
    let (m_minus, m_plus) = match *method {
        Baseline::Knn(k) => {
            let k = k.unwrap_or_else(|| default_k(sample.len()));
            (
                knn_boundary(&below, cutoff, k.min(below.len()))?,
                knn_boundary(&above, cutoff, k.min(above.len()))?,
            )
        }
        Baseline::LocalLinear(cfg) => (
            local_linear_boundary(&below, cutoff, &cfg)?,
            local_linear_boundary(&above, cutoff, &cfg)?,
        ),
    };
    Ok(RddEstimate {
        theta: m_plus - m_minus,
        naive_theta: f64::NAN,
        side_n: (below.len(), above.len()),
        eval_points: (cutoff, cutoff),
        m_minus,
        m_plus,
        naive_m_minus: f64::NAN,
        naive_m_plus: f64::NAN,
        p_minus: None,
        p_plus: None,
        clamped: false,
    })
}
