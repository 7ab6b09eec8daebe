//! Isotonic regression at support boundaries and isotonic regression
//! discontinuity (iRDD) estimators.

pub mod baselines;
pub mod bootstrap;
pub mod error;
pub mod isotonic;
pub mod limits;
pub mod mc;
pub mod rdd;
pub mod rng;
pub mod sample;
pub mod stats;

pub use baselines::{
    default_k, knn_boundary, local_linear_boundary, sharp_baseline_estimate, Bandwidth, Baseline,
    LocalLinearConfig,
};
pub use bootstrap::{
    boundary_wild_ci, draw_multipliers, naive_wild_ci, sharp_wild_ci, BootstrapReport,
    BootstrapSettings, BoundaryTrim, IntervalKind, Multiplier,
};
pub use error::{IrddError, Result};
pub use isotonic::{
    cumsum_diagram, eval_step, gcm_left_derivative, naive_boundary_left, naive_boundary_right,
    pava_fit, pava_weighted, verify_switching, Block, ConvexMinorant, CumSumDiagram,
    IsotonicDesign, StepFit,
};
pub use limits::{
    boundary_limit_draw, chernoff_draw, estimate_cstar, fuzzy_limit_draw, sharp_limit_draw,
    verify_clt, CltReport, CstarReport, Grid, LimitDrawSpec, ProcessGrid, Regime,
};
pub use mc::{
    coverage_table, dgp_sample, mc_table, CoverageRow, DgpSpec, Estimator, McReport, McRow,
    MeanFn, SigmaFn, XLaw,
};
pub use rdd::{
    boundary_corrected_left, boundary_corrected_right, fuzzy_estimate, optimal_c_eval,
    optimal_scale, sharp_estimate, sharp_estimate_at, sharp_estimate_optimal, trimmed_fit,
    Direction, RddConfig, RddEstimate, SampleSizeRule, TrimmedFit, CSTAR,
};
pub use sample::{Channel, Sample};
