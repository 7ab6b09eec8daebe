//! Least-squares isotonic regression and the convex-minorant geometry behind it.
//!
//! Observations sharing an `x` value are merged into one pseudo-observation
//! weighted by the group size, so the fit is a function of `x` even on tied
//! data. Blocks keep exact running `(count, sum)` pairs and two adjacent blocks
//! are pooled only when the left mean is strictly greater than the right one.

use serde::Serialize;

use crate::error::{IrddError, Result};
use crate::sample::{Channel, Sample};

/// A level set of the fitted step function.
///
/// `start..end` indexes observations of the canonically sorted sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Block {
    pub start: usize,
    pub end: usize,
    pub count: usize,
    pub mean: f64,
}

/// A fitted non-decreasing step function.
///
/// `knots` are the distinct sorted `x` values and `values[i]` is the fitted
/// level at `knots[i]`. Between knots the function is left-continuous: a point
/// in `(knots[i], knots[i + 1]]` takes `values[i + 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepFit {
    knots: Vec<f64>,
    values: Vec<f64>,
    blocks: Vec<Block>,
}

impl StepFit {
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Evaluate the left-continuous interpolation, clamped to the first and
    /// last fitted levels outside the knot range.
    pub fn eval(&self, x: f64) -> f64 {
        let i = self.knots.partition_point(|&k| k < x);
        self.values[i.min(self.values.len() - 1)]
    }

    /// Evaluate the right-continuous interpolation: a point in
    /// `[knots[i], knots[i + 1])` takes `values[i]`.
    ///
    /// This is the left-continuous rule seen through `x -> -x`, used for
    /// boundary values approached from the right end of a support.
    pub fn eval_right_continuous(&self, x: f64) -> f64 {
        let i = self.knots.partition_point(|&k| k <= x);
        self.values[i.saturating_sub(1)]
    }

    pub fn first_value(&self) -> f64 {
        self.values[0]
    }

    pub fn last_value(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Fitted value for every observation of the sorted sample.
    pub fn fitted(&self) -> Vec<f64> {
        let n = self.blocks.last().map_or(0, |b| b.end);
        let mut out = Vec::with_capacity(n);
        for b in &self.blocks {
            out.extend(std::iter::repeat_n(b.mean, b.count));
        }
        out
    }
}

/// Sorted design points with their tie structure.
///
/// Building the design once lets bootstrap replicates refit new responses on
/// the same `x` without re-sorting.
#[derive(Debug, Clone, PartialEq)]
pub struct IsotonicDesign {
    knots: Vec<f64>,
    // Exclusive end of each tie group in observation order.
    group_end: Vec<usize>,
}

impl IsotonicDesign {
    /// `x` must be sorted ascending.
    pub fn new(x: &[f64]) -> Result<Self> {
        if x.is_empty() {
            return Err(IrddError::InvalidInput("cannot fit an empty sample".into()));
        }
        if x.windows(2).any(|w| w[0] > w[1]) {
            return Err(IrddError::InvalidInput("design points are not sorted".into()));
        }
        let mut knots = Vec::new();
        let mut group_end = Vec::new();
        for (i, &v) in x.iter().enumerate() {
            if knots.last() == Some(&v) {
                *group_end.last_mut().unwrap() = i + 1;
            } else {
                knots.push(v);
                group_end.push(i + 1);
            }
        }
        Ok(IsotonicDesign { knots, group_end })
    }

    pub fn len(&self) -> usize {
        *self.group_end.last().unwrap()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn group_ends(&self) -> &[usize] {
        &self.group_end
    }

    /// Pool adjacent violators over the tie groups, single left-to-right pass.
    ///
    /// `y` is in the design's observation order.
    pub fn fit(&self, y: &[f64]) -> StepFit {
        assert_eq!(y.len(), self.len(), "response length does not match design");

        struct Run {
            sum: f64,
            count: usize,
            first_group: usize,
        }

        let mut stack: Vec<Run> = Vec::with_capacity(self.knots.len());
        let mut start = 0;
        for (g, &end) in self.group_end.iter().enumerate() {
            let sum: f64 = y[start..end].iter().sum();
            let mut run = Run {
                sum,
                count: end - start,
                first_group: g,
            };
            start = end;
            while let Some(prev) = stack.last() {
                if prev.sum / prev.count as f64 > run.sum / run.count as f64 {
                    let prev = stack.pop().unwrap();
                    run = Run {
                        sum: prev.sum + run.sum,
                        count: prev.count + run.count,
                        first_group: prev.first_group,
                    };
                } else {
                    break;
                }
            }
            stack.push(run);
        }

        let mut values = vec![0.0; self.knots.len()];
        let mut blocks = Vec::with_capacity(stack.len());
        for (k, run) in stack.iter().enumerate() {
            let last_group = stack
                .get(k + 1)
                .map_or(self.knots.len(), |next| next.first_group);
            let mean = run.sum / run.count as f64;
            values[run.first_group..last_group].fill(mean);
            let start = if run.first_group == 0 {
                0
            } else {
                self.group_end[run.first_group - 1]
            };
            blocks.push(Block {
                start,
                end: self.group_end[last_group - 1],
                count: run.count,
                mean,
            });
        }

        StepFit {
            knots: self.knots.clone(),
            values,
            blocks,
        }
    }
}

/// Weighted pool-adjacent-violators on an already ordered sequence.
///
/// Returns the fitted value for each entry. Weights must be positive.
pub fn pava_weighted(values: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(IrddError::InvalidInput("cannot fit an empty sequence".into()));
    }
    if values.len() != weights.len() {
        return Err(IrddError::InvalidInput("values and weights differ in length".into()));
    }
    if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
        return Err(IrddError::InvalidInput("weights must be positive and finite".into()));
    }
    // (weighted sum, total weight, number of entries)
    let mut stack: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        let mut cur = (v * w, w, 1);
        while let Some(&(s, t, k)) = stack.last() {
            if s / t > cur.0 / cur.1 {
                stack.pop();
                cur = (s + cur.0, t + cur.1, k + cur.2);
            } else {
                break;
            }
        }
        stack.push(cur);
    }
    let mut out = Vec::with_capacity(values.len());
    for (s, t, k) in stack {
        out.extend(std::iter::repeat_n(s / t, k));
    }
    Ok(out)
}

/// Isotonic least-squares fit of the selected response on `x`.
pub fn pava_fit(sample: &Sample, channel: Channel) -> Result<StepFit> {
    let sorted = if sample.is_sorted() {
        sample.clone()
    } else {
        sample.sorted()
    };
    let design = IsotonicDesign::new(sorted.x())?;
    Ok(design.fit(sorted.response(channel)?))
}

pub fn eval_step(fit: &StepFit, x: f64) -> f64 {
    fit.eval(x)
}

// Running (count, sum) totals at the end of each tie group.
fn group_totals(sample: &Sample) -> Result<(IsotonicDesign, Vec<(usize, f64)>, Sample)> {
    let sorted = sample.sorted();
    let design = IsotonicDesign::new(sorted.x())?;
    let mut totals = Vec::with_capacity(design.knots().len());
    let mut acc = 0.0;
    let mut start = 0;
    for &end in design.group_ends() {
        acc += sorted.y()[start..end].iter().sum::<f64>();
        totals.push((end, acc));
        start = end;
    }
    Ok((design, totals, sorted))
}

/// Uncorrected estimate at the left end of the support: the smallest running
/// mean of `y` in `x` order.
///
/// Prefixes end at tie-group boundaries, which keeps the result equal to the
/// fitted value at the smallest `x`.
pub fn naive_boundary_left(sample: &Sample) -> Result<f64> {
    let (_, totals, _) = group_totals(sample)?;
    Ok(totals
        .iter()
        .map(|&(k, s)| s / k as f64)
        .fold(f64::INFINITY, f64::min))
}

/// Uncorrected estimate at the right end of the support: the largest running
/// suffix mean of `y`.
pub fn naive_boundary_right(sample: &Sample) -> Result<f64> {
    let (design, totals, _) = group_totals(sample)?;
    let n = design.len();
    let total = totals.last().unwrap().1;
    let mut best = f64::NEG_INFINITY;
    let mut prev = (0usize, 0.0);
    for &(k, s) in &totals {
        let (k0, s0) = prev;
        best = best.max((total - s0) / (n - k0) as f64);
        prev = (k, s);
    }
    Ok(best)
}

/// Points `(F_n(t), M_n(t))` of the cumulative sum diagram, one per distinct
/// `x`, prefixed by the origin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CumSumDiagram {
    points: Vec<(f64, f64)>,
}

impl CumSumDiagram {
    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }
}

pub fn cumsum_diagram(sample: &Sample) -> Result<CumSumDiagram> {
    let (design, totals, _) = group_totals(sample)?;
    let n = design.len() as f64;
    let mut points = Vec::with_capacity(totals.len() + 1);
    points.push((0.0, 0.0));
    points.extend(totals.iter().map(|&(k, s)| (k as f64 / n, s / n)));
    Ok(CumSumDiagram { points })
}

/// Greatest convex minorant (lower convex hull) of a point set with strictly
/// increasing abscissae.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexMinorant {
    u: Vec<f64>,
    v: Vec<f64>,
}

impl ConvexMinorant {
    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        let (u, v): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
        Self::from_columns(&u, &v)
    }

    /// Monotone-chain construction from separate abscissa and ordinate columns.
    pub fn from_columns(u: &[f64], v: &[f64]) -> Result<Self> {
        if u.len() != v.len() {
            return Err(IrddError::InvalidInput("coordinate columns differ in length".into()));
        }
        if u.len() < 2 {
            return Err(IrddError::InvalidInput(
                "a convex minorant needs at least two points".into(),
            ));
        }
        if u.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(IrddError::InvalidInput(
                "abscissae must be strictly increasing".into(),
            ));
        }
        let mut hu: Vec<f64> = Vec::with_capacity(u.len());
        let mut hv: Vec<f64> = Vec::with_capacity(u.len());
        for (&pu, &pv) in u.iter().zip(v) {
            while hu.len() >= 2 {
                let k = hu.len();
                let (au, av) = (hu[k - 2], hv[k - 2]);
                let (bu, bv) = (hu[k - 1], hv[k - 1]);
                // Keep b only if a -> b -> p turns strictly counter-clockwise.
                let cross = (bu - au) * (pv - av) - (bv - av) * (pu - au);
                if cross <= 0.0 {
                    hu.pop();
                    hv.pop();
                } else {
                    break;
                }
            }
            hu.push(pu);
            hv.push(pv);
        }
        Ok(ConvexMinorant { u: hu, v: hv })
    }

    pub fn vertices(&self) -> Vec<(f64, f64)> {
        self.u.iter().copied().zip(self.v.iter().copied()).collect()
    }

    /// Segment slopes, non-decreasing.
    pub fn slopes(&self) -> Vec<f64> {
        (1..self.u.len())
            .map(|k| (self.v[k] - self.v[k - 1]) / (self.u[k] - self.u[k - 1]))
            .collect()
    }

    /// Slope of the hull segment whose abscissa interval `(u_k, u_{k+1}]`
    /// contains `at`.
    pub fn left_derivative(&self, at: f64) -> Result<f64> {
        let lo = self.u[0];
        let hi = *self.u.last().unwrap();
        if !(at > lo && at <= hi) {
            return Err(IrddError::OutOfRange { at, lo, hi });
        }
        let k = self.u.partition_point(|&w| w < at);
        Ok((self.v[k] - self.v[k - 1]) / (self.u[k] - self.u[k - 1]))
    }

    /// Value of the minorant at `u` by linear interpolation between vertices.
    pub fn value_at(&self, u: f64) -> f64 {
        let k = self.u.partition_point(|&w| w < u).clamp(1, self.u.len() - 1);
        let (u0, u1) = (self.u[k - 1], self.u[k]);
        let (v0, v1) = (self.v[k - 1], self.v[k]);
        v0 + (v1 - v0) * (u - u0) / (u1 - u0)
    }
}

/// Left derivative at `at` of the greatest convex minorant of `points`.
pub fn gcm_left_derivative(points: &[(f64, f64)], at: f64) -> Result<f64> {
    ConvexMinorant::new(points)?.left_derivative(at)
}

/// Both sides of the switching relation at a data point `x`:
/// `(m̂(x) <= level, U_n(level) >= x)`, where `U_n(a)` is the rightmost
/// maximizer of `a F_n(s) - M_n(s)` over `s` at and before the data.
///
/// The two flags agree for every level and data point.
pub fn verify_switching(sample: &Sample, level: f64, x: f64) -> Result<(bool, bool)> {
    if !level.is_finite() {
        return Err(IrddError::InvalidInput("level must be finite".into()));
    }
    let (design, totals, sorted) = group_totals(sample)?;
    let g = design
        .knots()
        .iter()
        .position(|&k| k == x)
        .ok_or_else(|| IrddError::InvalidInput(format!("{x} is not a data point")))?;
    let fit = design.fit(sorted.y());
    let scale = level.abs() * design.len() as f64 + sorted.y().iter().map(|v| v.abs()).sum::<f64>();
    let tol = 1e-12 * scale.max(1.0);
    let below = fit.values()[g] <= level + tol;

    // Objective n * (a F_n - M_n) at s before the data (k = 0) and at each group end.
    let mut best = 0.0;
    let mut best_k = 0;
    for (k, &(count, sum)) in totals.iter().enumerate() {
        let val = level * count as f64 - sum;
        if val >= best - tol {
            if val > best {
                best = val;
            }
            best_k = k + 1;
        }
    }
    Ok((below, best_k > g))
}
