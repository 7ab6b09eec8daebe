use irdd_core::limits::{chernoff_draw_scaled, draw_batch, sharp_limit_batch, FuzzyLimitSpec, FuzzySide};
use irdd_core::rng::stream_rng;
use irdd_core::stats::{ks_distance, mean, sample_sd};
use irdd_core::{
    boundary_limit_draw, chernoff_draw, estimate_cstar, fuzzy_limit_draw, verify_clt, ConvexMinorant,
    DgpSpec, Grid, LimitDrawSpec, Regime,
};
use proptest::prelude::*;

fn spec(sigma2: f64, density: f64, slope: f64, c: f64, regime: Regime) -> LimitDrawSpec {
    LimitDrawSpec {
        sigma2,
        density,
        slope,
        c,
        regime,
    }
}

#[test]
fn chernoff_law_is_centered_and_matches_a_dense_grid() {
    let coarse = draw_batch(1, 100_000, |rng| chernoff_draw(rng, &Grid::chernoff())).unwrap();
    let m = mean(&coarse);
    assert!(m.abs() < 0.02, "mean {m}");
    let dense_grid = Grid::chernoff().with_step(1e-4);
    let dense = draw_batch(2, 20_000, |rng| chernoff_draw(rng, &dense_grid)).unwrap();
    let (sc, sd) = (sample_sd(&coarse), sample_sd(&dense));
    assert!((sc / sd - 1.0).abs() < 0.02, "coarse {sc} dense {sd}");
}

#[test]
fn chernoff_horizon_is_sufficient() {
    let wide = Grid::chernoff().with_horizon(6.0);
    let same = (0..1000u64)
        .filter(|&s| {
            let a = chernoff_draw(&mut stream_rng(s, 0), &Grid::chernoff()).unwrap();
            let b = chernoff_draw(&mut stream_rng(s, 0), &wide).unwrap();
            a == b
        })
        .count();
    assert!(same >= 990, "{same} of 1000");
}

#[test]
fn zero_noise_chernoff_peaks_at_zero() {
    assert_eq!(chernoff_draw_scaled(&mut stream_rng(3, 3), &Grid::chernoff(), 0.0).unwrap(), 0.0);
}

#[test]
fn brownian_increments_have_cell_variance() {
    let grid = Grid {
        step: 0.1,
        horizon: 1.0,
        tail_ratio: Some(1.5),
        tail_end: 100.0,
    };
    let times = grid.one_sided_times().unwrap();
    let paths: Vec<Vec<f64>> = (0..20_000u64)
        .map(|i| irdd_core::limits::brownian_path(&times, &mut stream_rng(8, i)).values)
        .collect();
    assert!(paths.iter().all(|p| p[0] == 0.0));
    for k in 1..times.len() {
        let inc: Vec<f64> = paths.iter().map(|p| p[k] - p[k - 1]).collect();
        let var = inc.iter().map(|v| v * v).sum::<f64>() / inc.len() as f64;
        let dt = times[k] - times[k - 1];
        assert!((var / dt - 1.0).abs() < 0.05, "cell {k}: {var} vs {dt}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn minorant_slope_is_monotone_in_the_point(seed in 0u64..10_000) {
        let times = Grid::boundary().with_step(1e-2).one_sided_times().unwrap();
        let path = irdd_core::limits::brownian_path(&times, &mut stream_rng(seed, 0));
        let hull = ConvexMinorant::from_columns(&times, &path.values).unwrap();
        let slopes: Vec<f64> = times[1..600].iter().map(|&t| hull.left_derivative(t).unwrap()).collect();
        prop_assert!(slopes.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn coefficient_algebra_leaves_draws_unchanged(seed in 0u64..10_000) {
        let g = Grid::boundary().with_step(1e-2);
        for regime in [Regime::BoundaryFast, Regime::BoundaryThird] {
            let a = boundary_limit_draw(&spec(1.0, 1.0, 1.0, 1.0, regime), &mut stream_rng(seed, 0), &g).unwrap();
            let b = boundary_limit_draw(&spec(2.0, 2.0, 1.0, 1.0, regime), &mut stream_rng(seed, 0), &g).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}

#[test]
fn noiseless_third_regime_returns_the_parabola_slope() {
    let s = spec(1e-14, 1.0, 1.5, 2.0, Regime::BoundaryThird);
    let d = boundary_limit_draw(&s, &mut stream_rng(0, 0), &Grid::boundary()).unwrap();
    // Slope of (c·m'/2)·t² on the cell ending at 1 is c·m'·(1 - Δt/2).
    assert!((d - 3.0).abs() < 3e-3, "{d}");
}

#[test]
fn driftless_draws_are_nonpositive() {
    let s = spec(1.0, 1.0, 0.0, 1.0, Regime::BoundaryFast);
    let draws = draw_batch(5, 4000, |rng| boundary_limit_draw(&s, rng, &Grid::boundary())).unwrap();
    let positive = draws.iter().filter(|&&d| d > 0.0).count();
    assert!((positive as f64) < 0.005 * draws.len() as f64, "{positive} positive draws");
    assert!(mean(&draws) < 0.0);
}

#[test]
fn interior_regime_scales_as_cube_root() {
    let g = Grid::chernoff();
    let a = spec(1.0, 1.0, 1.0, 1.0, Regime::InteriorChernoff);
    let b = spec(4.0, 0.5, 2.0, 1.0, Regime::InteriorChernoff);
    let da = draw_batch(10, 20_000, |rng| boundary_limit_draw(&a, rng, &g)).unwrap();
    let db = draw_batch(11, 20_000, |rng| boundary_limit_draw(&b, rng, &g)).unwrap();
    let ratio = sample_sd(&db) / sample_sd(&da);
    let want = (64.0f64 / 4.0).cbrt();
    assert!((ratio / want - 1.0).abs() < 0.05, "{ratio} vs {want}");
}

#[test]
fn invalid_draw_specs_are_rejected() {
    let g = Grid::boundary();
    let mut rng = stream_rng(0, 0);
    assert!(boundary_limit_draw(&spec(0.0, 1.0, 1.0, 1.0, Regime::BoundaryFast), &mut rng, &g).is_err());
    assert!(boundary_limit_draw(&spec(1.0, 1.0, -1.0, 1.0, Regime::BoundaryThird), &mut rng, &g).is_err());
    assert!(boundary_limit_draw(&spec(1.0, 1.0, 1.0, 1.0, Regime::BoundaryThird), &mut rng, &g.with_step(0.3)).is_err());
}

#[test]
fn cstar_objective() {
    let grid = Grid::boundary();
    let cs = [0.1, 0.3, 1.0, 3.0];
    let r1 = estimate_cstar(21, &grid, 20_000, &cs).unwrap();
    let r2 = estimate_cstar(22, &grid, 20_000, &cs).unwrap();
    for (j, &c) in cs.iter().enumerate() {
        let (u, v) = (r1.objective[j], r2.objective[j]);
        assert!(u.is_finite() && u > 0.0, "c={c}: {u}");
        assert!((u / v - 1.0).abs() < 0.06, "c={c}: {u} vs {v}");
    }
    assert_eq!(r1.cstar, 0.3);
    assert!(estimate_cstar(1, &grid, 0, &cs).is_err());
    assert!(estimate_cstar(1, &grid, 10, &[2e6]).is_err());
}

#[test]
fn clt_check_requires_the_third_rate() {
    let dgp = DgpSpec::registry(1, false).unwrap();
    assert!(verify_clt(&dgp, 0.5, 1.0, 100, 10, 1).is_err());
    let r = verify_clt(&dgp, 1.0 / 3.0, 1.0, 200, 50, 1).unwrap();
    assert_eq!(r.estimator.len(), 50);
    assert_eq!(ks_distance(&r.limit, &r.limit), 0.0);
    let again = sharp_limit_batch(&dgp, 1.0, 50, irdd_core::rng::derive_seed(1, 1), &Grid::boundary()).unwrap();
    assert_eq!(again, r.limit);
}

#[test]
fn fuzzy_limit_draws() {
    let side = |p: f64, rho: f64| FuzzySide {
        sigma2: 1.0,
        slope: 1.0,
        p,
        p_slope: 0.5,
        rho,
        density: 0.75,
    };
    let fz = FuzzyLimitSpec {
        below: side(0.2, 0.1),
        above: side(0.8, -0.1),
        outcome_jump: 0.6,
        c: 1.0,
    };
    let g = Grid::boundary();
    let a = draw_batch(3, 200, |rng| fuzzy_limit_draw(&fz, rng, &g)).unwrap();
    let b = draw_batch(3, 200, |rng| fuzzy_limit_draw(&fz, rng, &g)).unwrap();
    assert_eq!(a, b);
    assert!(a.iter().all(|v| v.is_finite()));
    let bad = FuzzyLimitSpec {
        above: side(0.8, 5.0),
        ..fz
    };
    assert!(fuzzy_limit_draw(&bad, &mut stream_rng(0, 0), &g).is_err());
}
