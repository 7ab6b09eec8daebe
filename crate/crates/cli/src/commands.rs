//! Command implementations. Each returns a `Report`; nothing here prints.

use serde_json::{json, Value};

use irdd_core::limits::{draw_batch, sharp_limit_batch};
use irdd_core::stats::{mean, quantile_sorted, sample_sd, sorted_copy};
use irdd_core::{
    boundary_limit_draw, chernoff_draw, coverage_table, estimate_cstar, fuzzy_estimate, mc_table,
    naive_wild_ci, pava_fit, sharp_baseline_estimate, sharp_estimate, sharp_wild_ci, Bandwidth,
    Baseline, BootstrapReport, BootstrapSettings, Channel, DgpSpec, Estimator, Grid, LimitDrawSpec,
    LocalLinearConfig, RddConfig, RddEstimate, Regime,
};

use crate::args::{
    ChannelArg, CiArgs, CstarArgs, DesignArgs, FitArgs, InputArgs, LimitArgs, McArgs, Method,
    RddArgs, RegimeArg,
};
use crate::error::{CliError, Result};
use crate::ingest::{ingest_csv, Columns, Ingested};
use crate::output::{num, write_file, Report, Table};

pub fn load(input: &InputArgs) -> Result<Ingested> {
    let columns = Columns {
        x: input.x_col.clone(),
        y: input.y_col.clone(),
        d: input.d_col.clone().unwrap_or_else(|| "d".into()),
        d_required: input.d_col.is_some(),
    };
    ingest_csv(&input.input, &columns, input.drop_invalid)
}

fn design_config(design: &DesignArgs, a: f64) -> Result<RddConfig> {
    let cfg = RddConfig {
        cutoff: design.cutoff,
        c: design.c,
        a,
        sample_size: design.sample_size.into(),
        treated_above: !design.treated_below,
        below: design.below.into(),
        above: design.above.into(),
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn fit(args: &FitArgs) -> Result<Report> {
    let data = load(&args.input)?;
    let channel = match args.channel {
        ChannelArg::Outcome => Channel::Outcome,
        ChannelArg::Treatment => Channel::Treatment,
    };
    if channel == Channel::Treatment && !data.sample.has_treatment() {
        return Err(CliError::Usage(
            "--channel treatment needs a treatment column (see --d-col)".into(),
        ));
    }
    let sides = match args.cutoff {
        Some(c) => {
            let (below, above) = data.sample.split_at(c)?;
            vec![("below", below), ("above", above)]
        }
        None => vec![("all", data.sample.clone())],
    };
    let mut table = Table::new(&["side", "x", "fitted"]);
    let mut parts = Vec::new();
    for (name, side) in &sides {
        let f = pava_fit(side, channel)?;
        for (k, v) in f.knots().iter().zip(f.values()) {
            table.push(vec![name.to_string(), num(*k), num(*v)]);
        }
        parts.push(json!({ "side": name, "x": f.knots(), "fitted": f.values() }));
    }
    let mut report = Report::new("fit", args, json!({ "sides": parts }), table);
    report.input = Some(data.summary);
    Ok(report)
}

const RDD_HEADER: [&str; 16] = [
    "method",
    "c",
    "a",
    "theta",
    "naive_theta",
    "eval_below",
    "eval_above",
    "m_minus",
    "m_plus",
    "naive_m_minus",
    "naive_m_plus",
    "p_minus",
    "p_plus",
    "n_below",
    "n_above",
    "clamped",
];

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn rdd_row(method: &str, c: f64, a: f64, e: &RddEstimate) -> Vec<String> {
    vec![
        method.to_string(),
        num(c),
        num(a),
        num(e.theta),
        num(e.naive_theta),
        num(e.eval_points.0),
        num(e.eval_points.1),
        num(e.m_minus),
        num(e.m_plus),
        num(e.naive_m_minus),
        num(e.naive_m_plus),
        opt(e.p_minus),
        opt(e.p_plus),
        e.side_n.0.to_string(),
        e.side_n.1.to_string(),
        e.clamped.to_string(),
    ]
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Irdd => "irdd",
        Method::Knn => "knn",
        Method::Ll => "ll",
    }
}

pub fn rdd(args: &RddArgs) -> Result<Report> {
    let data = load(&args.input)?;
    if args.fuzzy && !data.sample.has_treatment() {
        return Err(CliError::Usage("--fuzzy needs a treatment column (see --d-col)".into()));
    }
    let base = design_config(&args.design, args.a)?;
    let method = method_name(args.method);
    let mut table = Table::new(&RDD_HEADER);
    let mut estimates = Vec::new();
    let mut warnings = Vec::new();
    match args.method {
        Method::Irdd => {
            let cs = args.c_sweep.clone().unwrap_or_else(|| vec![base.c]);
            for c in cs {
                let cfg = base.with_c(c);
                cfg.validate()?;
                let e = if args.fuzzy {
                    fuzzy_estimate(&data.sample, &cfg)?
                } else {
                    sharp_estimate(&data.sample, &cfg)?
                };
                if e.clamped {
                    warnings.push(format!(
                        "c = {c}: an evaluation point lies beyond the data on its side; the outermost fit was used"
                    ));
                }
                table.push(rdd_row(method, c, cfg.a, &e));
                estimates.push(json!({ "c": c, "a": cfg.a, "estimate": e }));
            }
        }
        Method::Knn | Method::Ll => {
            if args.fuzzy || args.c_sweep.is_some() {
                return Err(CliError::Usage(format!(
                    "--fuzzy and --c-sweep apply to --method irdd only, not {method}"
                )));
            }
            let baseline = match args.method {
                Method::Knn => Baseline::Knn(args.k),
                _ => Baseline::LocalLinear(LocalLinearConfig {
                    bandwidth: args.bandwidth.map_or(Bandwidth::RuleOfThumb, Bandwidth::Fixed),
                }),
            };
            let mut e = sharp_baseline_estimate(&data.sample, base.cutoff, &baseline)?;
            if !base.treated_above {
                e.theta = -e.theta;
            }
            table.push(rdd_row(method, f64::NAN, f64::NAN, &e));
            estimates.push(json!({ "estimate": e }));
        }
    }
    let result = json!({ "method": method, "fuzzy": args.fuzzy, "estimates": estimates });
    let mut report = Report::new("rdd", args, result, table);
    report.input = Some(data.summary);
    report.warnings = warnings;
    Ok(report)
}

fn write_replicates(path: &std::path::Path, r: &BootstrapReport) -> Result<()> {
    let mut t = Table::new(&["replicate", "centered"]);
    for (i, v) in r.replicates.iter().enumerate() {
        t.push(vec![i.to_string(), num(*v)]);
    }
    write_file(path, &t.to_csv())
}

pub fn ci(args: &CiArgs) -> Result<Report> {
    if args.fuzzy {
        return Err(CliError::Usage(
            "confidence intervals are available for sharp designs only; the trimmed wild \
             bootstrap has no validity result for the fuzzy estimator"
                .into(),
        ));
    }
    let data = load(&args.input)?;
    let cfg = design_config(&args.design, args.a)?;
    let settings = BootstrapSettings {
        reps: args.boot.boot_reps,
        level: args.boot.level,
        multiplier: args.boot.multiplier.into(),
        interval: args.boot.interval.into(),
        seed: args.seed,
        trimmed: !args.no_trim,
    };
    let r = if args.naive {
        naive_wild_ci(&data.sample, &cfg, &settings)?
    } else {
        sharp_wild_ci(&data.sample, &cfg, &settings)?
    };
    if let Some(path) = &args.replicates {
        write_replicates(path, &r)?;
    }
    let mut table = Table::new(&[
        "estimate",
        "lower",
        "upper",
        "length",
        "level",
        "boot_reps",
        "c",
        "a",
        "eval_below",
        "eval_above",
        "naive",
    ]);
    table.push(vec![
        num(r.estimate),
        num(r.ci.0),
        num(r.ci.1),
        num(r.length()),
        num(r.level),
        r.reps.to_string(),
        num(r.c),
        num(r.a),
        num(r.eval_points.0),
        num(r.eval_points.1),
        args.naive.to_string(),
    ]);
    let result = json!({
        "estimate": r.estimate,
        "ci": [r.ci.0, r.ci.1],
        "length": r.length(),
        "level": r.level,
        "reps": r.reps,
        "c": r.c,
        "a": r.a,
        "eval_points": [r.eval_points.0, r.eval_points.1],
        "naive": args.naive,
        "few_replicates": r.few_replicates,
        "settings": r.settings,
    });
    let mut report = Report::new("ci", args, result, table);
    report.input = Some(data.summary);
    report.seed = Some(args.seed);
    report.meta = json!({ "estimate": r.estimate, "ci": [r.ci.0, r.ci.1] });
    if r.few_replicates {
        report
            .warnings
            .push(format!("only {} bootstrap replicates; quantiles will be noisy", r.reps));
    }
    Ok(report)
}

fn parse_estimators(names: &[String], cs: &[f64]) -> Result<Vec<Estimator>> {
    let mut out = Vec::new();
    for name in names {
        match name.as_str() {
            "irdd" => out.extend(cs.iter().map(|&c| Estimator::Irdd { c })),
            "irdd-opt" => out.push(Estimator::IrddOptimal),
            "naive" => out.push(Estimator::Naive),
            "knn" => out.push(Estimator::Knn),
            "ll" => out.push(Estimator::LocalLinear),
            "oracle" => out.push(Estimator::Oracle),
            other => {
                return Err(CliError::Usage(format!(
                    "unknown estimator `{other}`; expected irdd, irdd-opt, naive, knn, ll or oracle"
                )))
            }
        }
    }
    Ok(out)
}

pub fn mc(args: &McArgs) -> Result<Report> {
    let dgps = args
        .dgp
        .iter()
        .map(|&id| DgpSpec::registry(id, args.het))
        .collect::<irdd_core::Result<Vec<_>>>()?;
    let (mc, table) = if args.coverage {
        let boot = BootstrapSettings {
            reps: args.boot_reps,
            level: args.level,
            multiplier: args.multiplier.into(),
            ..BootstrapSettings::default()
        };
        boot.validate()?;
        let mc = coverage_table(&dgps, &args.n, &args.c, args.reps, &boot, args.seed)?;
        let mut t = Table::new(&[
            "dgp", "n", "c", "reps", "skipped", "boot_reps", "level", "coverage", "mean_length",
        ]);
        for r in &mc.coverage {
            t.push(vec![
                r.dgp.clone(),
                r.n.to_string(),
                num(r.c),
                r.reps.to_string(),
                r.skipped.to_string(),
                r.boot_reps.to_string(),
                num(r.level),
                num(r.coverage),
                num(r.mean_length),
            ]);
        }
        (mc, t)
    } else {
        let estimators = parse_estimators(&args.estimators, &args.c)?;
        let mc = mc_table(&dgps, &args.n, &estimators, args.reps, args.seed)?;
        let mut t = Table::new(&["dgp", "n", "estimator", "reps", "skipped", "bias", "variance", "mse"]);
        for r in &mc.rows {
            t.push(vec![
                r.dgp.clone(),
                r.n.to_string(),
                r.estimator.clone(),
                r.reps.to_string(),
                r.skipped.to_string(),
                num(r.bias),
                num(r.variance),
                num(r.mse),
            ]);
        }
        (mc, t)
    };
    let mut report = Report::new("mc", args, serde_json::to_value(&mc).expect("report"), table);
    report.seed = Some(args.seed);
    let skipped: usize = mc.rows.iter().map(|r| r.skipped).chain(mc.coverage.iter().map(|r| r.skipped)).sum();
    if skipped > 0 {
        report
            .warnings
            .push(format!("{skipped} replication(s) skipped for an empty side or degenerate window"));
    }
    Ok(report)
}

const SUMMARY_PROBS: [f64; 9] = [0.01, 0.025, 0.05, 0.25, 0.5, 0.75, 0.95, 0.975, 0.99];

fn summarize(draws: &[f64]) -> Value {
    let sorted = sorted_copy(draws);
    let q: Vec<Value> = SUMMARY_PROBS
        .iter()
        .map(|&p| json!({ "p": p, "value": quantile_sorted(&sorted, p) }))
        .collect();
    json!({ "reps": draws.len(), "mean": mean(draws), "sd": sample_sd(draws), "quantiles": q })
}

pub fn limit(args: &LimitArgs) -> Result<Report> {
    if args.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    let chernoff_grid = matches!(args.regime, RegimeArg::Chernoff | RegimeArg::Interior);
    let mut grid = if chernoff_grid { Grid::chernoff() } else { Grid::boundary() };
    if let Some(step) = args.step {
        grid = grid.with_step(step);
    }
    if let Some(h) = args.horizon {
        grid = grid.with_horizon(h);
    }
    let spec = |regime| LimitDrawSpec {
        sigma2: args.sigma2,
        density: args.density,
        slope: args.slope,
        c: args.c,
        regime,
    };
    let draws = match args.regime {
        RegimeArg::Chernoff => draw_batch(args.seed, args.reps, |rng| chernoff_draw(rng, &grid))?,
        RegimeArg::Interior | RegimeArg::Third | RegimeArg::Fast => {
            let s = spec(match args.regime {
                RegimeArg::Interior => Regime::InteriorChernoff,
                RegimeArg::Third => Regime::BoundaryThird,
                _ => Regime::BoundaryFast,
            });
            s.validate()?;
            draw_batch(args.seed, args.reps, |rng| boundary_limit_draw(&s, rng, &grid))?
        }
        RegimeArg::Sharp => {
            let dgp = DgpSpec::registry(args.dgp, args.het)?;
            sharp_limit_batch(&dgp, args.c, args.reps, args.seed, &grid)?
        }
    };
    let summary = summarize(&draws);
    let mut table = Table::new(&["draw", "value"]);
    for (i, v) in draws.iter().enumerate() {
        table.push(vec![i.to_string(), num(*v)]);
    }
    let result = json!({ "grid": grid, "summary": summary, "draws": draws });
    let mut report = Report::new("limit", args, result, table);
    report.seed = Some(args.seed);
    report.meta = json!({ "grid": grid, "draws": summary });
    Ok(report)
}

pub fn cstar(args: &CstarArgs) -> Result<Report> {
    if !(args.c_step > 0.0 && args.c_min > 0.0 && args.c_max >= args.c_min) {
        return Err(CliError::Usage("need 0 < --c-min <= --c-max and --c-step > 0".into()));
    }
    let steps = ((args.c_max - args.c_min) / args.c_step + 1e-9).floor() as usize;
    let c_grid: Vec<f64> = (0..=steps)
        .map(|i| ((args.c_min + i as f64 * args.c_step) * 1e9).round() / 1e9)
        .collect();
    let grid = Grid::boundary().with_step(args.step);
    let r = estimate_cstar(args.seed, &grid, args.reps, &c_grid)?;
    let mut table = Table::new(&["c", "objective"]);
    for (c, v) in r.c_grid.iter().zip(&r.objective) {
        table.push(vec![num(*c), num(*v)]);
    }
    let mut report = Report::new("cstar", args, serde_json::to_value(&r).expect("report"), table);
    report.seed = Some(args.seed);
    report.meta = json!({ "cstar": r.cstar });
    if args.reps < 10_000 {
        report
            .warnings
            .push(format!("{} draws is too few for a stable minimizer; use at least 10000", args.reps));
    }
    Ok(report)
}
