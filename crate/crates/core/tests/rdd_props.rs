use irdd_core::rng::stream_rng;
use irdd_core::{
    dgp_sample, fuzzy_estimate, optimal_c_eval, pava_fit, sharp_estimate, trimmed_fit, Channel,
    DgpSpec, IrddError, RddConfig, Sample, SampleSizeRule,
};
use proptest::prelude::*;

fn two_sided(max_n: usize) -> impl Strategy<Value = Sample> {
    (2..=max_n).prop_flat_map(|n| {
        (
            prop::collection::vec(-1.0f64..1.0, n),
            prop::collection::vec(-3.0f64..3.0, n),
            prop::collection::vec(prop::bool::ANY, n),
        )
            .prop_filter_map("both sides", |(x, y, d)| {
                let below = x.iter().filter(|&&v| v < 0.0).count();
                if below == 0 || below == x.len() {
                    return None;
                }
                let d = d.into_iter().map(|b| f64::from(u8::from(b))).collect();
                Some(Sample::with_treatment(x, y, d).unwrap())
            })
    })
}

fn config() -> impl Strategy<Value = RddConfig> {
    (0.05f64..3.0, 0.1f64..0.9, prop::bool::ANY).prop_map(|(c, a, pooled)| {
        RddConfig::default()
            .with_c(c)
            .with_a(a)
            .with_sample_size(if pooled { SampleSizeRule::Pooled } else { SampleSizeRule::PerSide })
    })
}

proptest! {
    #[test]
    fn naive_is_a_lower_bound(s in two_sided(40), cfg in config()) {
        let est = sharp_estimate(&s, &cfg).unwrap();
        let (below, above) = s.split_at(0.0).unwrap();
        let inside = est.eval_points.1 >= above.x()[0] && est.eval_points.0 <= *below.x().last().unwrap();
        if inside {
            prop_assert!(est.naive_theta <= est.theta + 1e-12);
        }
        prop_assert!(est.naive_m_plus <= est.m_plus + 1e-12);
        prop_assert!(est.naive_m_minus >= est.m_minus - 1e-12);
    }

    #[test]
    fn fuzzy_probabilities_are_in_unit_interval(s in two_sided(40), cfg in config()) {
        match fuzzy_estimate(&s, &cfg) {
            Ok(est) => {
                for p in [est.p_minus.unwrap(), est.p_plus.unwrap()] {
                    prop_assert!((0.0..=1.0).contains(&p));
                }
            }
            Err(IrddError::WeakDiscontinuity { p_minus, p_plus }) => {
                prop_assert!((p_plus - p_minus).abs() < 1e-8);
            }
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn row_order_does_not_matter(s in two_sided(30), cfg in config(), seed in 0u64..1000) {
        use rand::seq::SliceRandom;
        let mut idx: Vec<usize> = (0..s.len()).collect();
        idx.shuffle(&mut stream_rng(seed, 0));
        let shuffled = s.select(&idx);
        // Debug output compares NaN fields as equal.
        prop_assert_eq!(
            format!("{:?}", sharp_estimate(&s, &cfg)),
            format!("{:?}", sharp_estimate(&shuffled, &cfg))
        );
        prop_assert_eq!(
            format!("{:?}", fuzzy_estimate(&s, &cfg)),
            format!("{:?}", fuzzy_estimate(&shuffled, &cfg))
        );
    }

    #[test]
    fn shift_equivariance(s in two_sided(30), cfg in config(), b in -5.0f64..5.0) {
        let base = sharp_estimate(&s, &cfg).unwrap().theta;
        let all = s.with_y(s.y().iter().map(|v| v + b).collect()).unwrap();
        prop_assert!((sharp_estimate(&all, &cfg).unwrap().theta - base).abs() < 1e-9);
        let above = s
            .with_y(s.x().iter().zip(s.y()).map(|(&x, &y)| if x >= 0.0 { y + b } else { y }).collect())
            .unwrap();
        prop_assert!((sharp_estimate(&above, &cfg).unwrap().theta - (base + b)).abs() < 1e-9);
    }

    #[test]
    fn trimmed_fit_agrees_with_side_fits_away_from_cutoff(s in two_sided(40), c in 0.05f64..2.0) {
        let cfg = RddConfig::default().with_c(c).with_a(0.5);
        let t = trimmed_fit(&s, &cfg).unwrap();
        let (below, above) = s.split_at(0.0).unwrap();
        let fb = pava_fit(&below, Channel::Outcome).unwrap();
        let fa = pava_fit(&above, Channel::Outcome).unwrap();
        let (lo, hi) = t.eval_points();
        for &x in s.x() {
            if x < lo {
                prop_assert_eq!(t.eval(x), fb.eval(x));
            } else if x > hi {
                prop_assert_eq!(t.eval(x), fa.eval(x));
            } else if x < 0.0 {
                prop_assert_eq!(t.eval(x), t.frozen_values().0);
            } else {
                prop_assert_eq!(t.eval(x), t.frozen_values().1);
            }
        }
        let r = t.residuals(&s);
        for ((&x, &y), &e) in s.x().iter().zip(s.y()).zip(&r) {
            prop_assert_eq!(e, y - t.eval(x));
        }
    }
}

#[test]
fn noiseless_identity_has_small_positive_effect() {
    let x: Vec<f64> = (0..1000).map(|i| -1.0 + (i as f64 + 0.5) / 500.0).collect();
    let s = Sample::new(x.clone(), x).unwrap();
    let est = sharp_estimate(&s, &RddConfig::default()).unwrap();
    assert!(est.theta > 0.0 && est.theta < 0.5, "{}", est.theta);
    // Pooled n = 1000 puts the evaluation points at ±0.1.
    assert!((est.eval_points.1 - 0.1).abs() < 1e-12);
    assert!((est.eval_points.0 + 0.1).abs() < 1e-12);
    assert!(!est.clamped);
    let per_side = sharp_estimate(&s, &RddConfig::default().with_sample_size(SampleSizeRule::PerSide)).unwrap();
    assert!((per_side.eval_points.1 - 500f64.powf(-1.0 / 3.0)).abs() < 1e-12);
    assert!(per_side.theta > est.theta);
}

#[test]
fn far_evaluation_points_are_flagged() {
    let s = Sample::new(vec![-0.02, -0.01, 0.01, 0.02], vec![0.0, 0.5, 1.0, 2.0]).unwrap();
    let est = sharp_estimate(&s, &RddConfig::default()).unwrap();
    assert!(est.clamped);
    assert_eq!(est.m_plus, 2.0);
    assert_eq!(est.m_minus, 0.0);
}

#[test]
fn cutoff_shifts_the_design() {
    let x: Vec<f64> = (0..40).map(|i| 5.0 + i as f64 / 20.0).collect();
    let y: Vec<f64> = x.iter().map(|&v| if v >= 6.0 { 3.0 } else { 1.0 }).collect();
    let s = Sample::new(x, y).unwrap();
    let est = sharp_estimate(&s, &RddConfig::default().with_cutoff(6.0)).unwrap();
    assert_eq!(est.theta, 2.0);
    assert_eq!(est.side_n, (20, 20));
}

#[test]
fn optimal_evaluation_point() {
    // m' = 2, σ² = 1, f = 1 gives a unit scale, so the point is 0.345·n^{-1/3}.
    let x: Vec<f64> = (1..=1000).map(|i| i as f64 / 1000.0).collect();
    let s = Sample::new(x.clone(), x).unwrap();
    let v = optimal_c_eval(&s, 1000, 2.0, 1.0, 1.0).unwrap();
    assert!((v - 0.035).abs() < 1e-12, "{v}");
    assert!(optimal_c_eval(&s, 1000, -1.0, 1.0, 1.0).is_err());
}

#[test]
fn designs_produce_both_sides() {
    let spec = DgpSpec::registry(1, false).unwrap();
    let s = dgp_sample(&spec, 200, &mut stream_rng(4, 0)).unwrap();
    let est = sharp_estimate(&s, &RddConfig::default()).unwrap();
    assert_eq!(est.side_n.0 + est.side_n.1, 200);
    let fz = fuzzy_estimate(&s, &RddConfig::default()).unwrap();
    assert_eq!(fz.theta, est.theta);
}
