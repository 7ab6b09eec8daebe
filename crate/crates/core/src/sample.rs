//! Observations of a running variable, an outcome and an optional treatment indicator.

use serde::Serialize;

use crate::error::{IrddError, Result};

/// Which response a fit is computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Outcome,
    Treatment,
}

/// A validated sample of `(x, y, d)` triples.
///
/// Every `x` and `y` is finite, and the treatment column, when present, holds
/// only 0 or 1 for every row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Option<Vec<f64>>,
}

impl Sample {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        Self::build(x, y, None)
    }

    pub fn with_treatment(x: Vec<f64>, y: Vec<f64>, d: Vec<f64>) -> Result<Self> {
        Self::build(x, y, Some(d))
    }

    fn build(x: Vec<f64>, y: Vec<f64>, d: Option<Vec<f64>>) -> Result<Self> {
        if x.is_empty() {
            return Err(IrddError::InvalidInput("sample is empty".into()));
        }
        if x.len() != y.len() {
            return Err(IrddError::InvalidInput(format!(
                "x has {} values but y has {}",
                x.len(),
                y.len()
            )));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(IrddError::InvalidInput(format!("x[{i}] is not finite")));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(IrddError::InvalidInput(format!("y[{i}] is not finite")));
        }
        if let Some(d) = &d {
            if d.len() != x.len() {
                return Err(IrddError::InvalidInput(format!(
                    "x has {} values but d has {}",
                    x.len(),
                    d.len()
                )));
            }
            if let Some(i) = d.iter().position(|&v| v != 0.0 && v != 1.0) {
                return Err(IrddError::InvalidInput(format!(
                    "d[{i}] = {} is not a binary treatment indicator",
                    d[i]
                )));
            }
        }
        Ok(Sample { x, y, d })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn d(&self) -> Option<&[f64]> {
        self.d.as_deref()
    }

    pub fn has_treatment(&self) -> bool {
        self.d.is_some()
    }

    /// The response column selected by `channel`.
    pub fn response(&self, channel: Channel) -> Result<&[f64]> {
        match channel {
            Channel::Outcome => Ok(&self.y),
            Channel::Treatment => self.d.as_deref().ok_or_else(|| {
                IrddError::InvalidInput("sample has no treatment indicator".into())
            }),
        }
    }

    pub fn is_sorted(&self) -> bool {
        self.x.windows(2).all(|w| w[0] <= w[1])
    }

    /// Canonical sorted view: rows ordered by `x`, then `y`, then `d`.
    ///
    /// The secondary keys make the view independent of the input row order,
    /// so every downstream result is invariant to row permutations.
    pub fn sorted(&self) -> Sample {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        let d = self.d.as_deref();
        idx.sort_by(|&i, &j| {
            self.x[i]
                .total_cmp(&self.x[j])
                .then(self.y[i].total_cmp(&self.y[j]))
                .then_with(|| match d {
                    Some(d) => d[i].total_cmp(&d[j]),
                    None => std::cmp::Ordering::Equal,
                })
        });
        self.select(&idx)
    }

    /// Rows at the given indices, in that order.
    pub fn select(&self, idx: &[usize]) -> Sample {
        Sample {
            x: idx.iter().map(|&i| self.x[i]).collect(),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            d: self
                .d
                .as_ref()
                .map(|d| idx.iter().map(|&i| d[i]).collect()),
        }
    }

    /// Number of distinct `x` values.
    pub fn distinct_x(&self) -> usize {
        let mut xs = self.x.clone();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs.len()
    }

    /// Number of rows whose `x` repeats an earlier row's `x`.
    pub fn tied_rows(&self) -> usize {
        self.len() - self.distinct_x()
    }

    /// Same rows with `y` replaced.
    pub fn with_y(&self, y: Vec<f64>) -> Result<Sample> {
        Self::build(self.x.clone(), y, self.d.clone())
    }

    /// Split into `(x < cutoff, x >= cutoff)`, both canonically sorted.
    pub fn split_at(&self, cutoff: f64) -> Result<(Sample, Sample)> {
        if !cutoff.is_finite() {
            return Err(IrddError::Config(format!("cutoff {cutoff} is not finite")));
        }
        let sorted = self.sorted();
        let k = sorted.x.partition_point(|&v| v < cutoff);
        if k == 0 || k == sorted.len() {
            return Err(IrddError::InsufficientData {
                below: k,
                above: sorted.len() - k,
            });
        }
        let below: Vec<usize> = (0..k).collect();
        let above: Vec<usize> = (k..sorted.len()).collect();
        Ok((sorted.select(&below), sorted.select(&above)))
    }

    /// Reflect through the origin: `(x, y) -> (-x, -y)`.
    ///
    /// A non-decreasing regression stays non-decreasing, and the right end of
    /// the support becomes the left end. The treatment column is not reflected.
    pub fn reflected(&self) -> Sample {
        Sample {
            x: self.x.iter().map(|v| -v).collect(),
            y: self.y.iter().map(|v| -v).collect(),
            d: self.d.clone(),
        }
    }
}
