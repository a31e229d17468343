use dp_composer_core::dataset::{GridData, UserId};
use dp_composer_core::grouping::{ArrayMeans, GroupingStrategy};
use dp_composer_core::mechanisms::*;
use dp_composer_core::RngStream;
use proptest::prelude::*;

fn grid() -> impl Strategy<Value = GridData> {
    prop::collection::vec(prop::collection::vec(0.0f64..=10.0, 1..8), 1..12).prop_map(|users| {
        GridData::new(
            10.0,
            users
                .into_iter()
                .enumerate()
                .map(|(i, v)| (UserId::from(format!("u{i:02}")), v))
                .collect(),
        )
    })
}

proptest! {
    #[test]
    fn projection_is_idempotent_and_monotone(x in -5.0f64..15.0, y in -5.0f64..15.0, a in 0.0f64..5.0, w in 0.0f64..5.0) {
        let b = a + w;
        let p = project(x, a, b);
        prop_assert_eq!(project(p, a, b), p);
        prop_assert!(a <= p && p <= b);
        if x <= y {
            prop_assert!(p <= project(y, a, b));
        }
    }

    #[test]
    fn releases_are_reproducible(g in grid(), eps in 0.1f64..3.0, seed: u64) {
        let p = MechanismParams::new(eps, 10.0);
        let run = |f: &dyn Fn(&mut RngStream) -> MechanismOutput| (f(&mut RngStream::new(seed)), f(&mut RngStream::new(seed)));
        let (a, b) = run(&|r| baseline_release(&g, &p, r).unwrap());
        prop_assert_eq!(a, b);
        let (a, b) = run(&|r| levy_release(&g, &p, r).unwrap());
        prop_assert_eq!(&a, &b);
        let iv = a.interval.unwrap();
        prop_assert!(0.0 <= iv.lo && iv.lo <= iv.hi && iv.hi <= 10.0);
        let (a, b) = run(&|r| quantile_release(&g, &p, QuantileMode::Optimized, r).unwrap());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn noise_scales_follow_sensitivities(g in grid(), eps in 0.1f64..3.0) {
        let p = MechanismParams::new(eps, 10.0);
        let mut rng = RngStream::new(0);
        let out = baseline_release(&g, &p, &mut rng).unwrap();
        let s = dp_composer_core::sensitivity::variance_sensitivity(&g.counts(), 10.0).unwrap();
        prop_assert!((out.noise_scale_mean - 2.0 * s.delta_mu / eps).abs() < 1e-12);
        prop_assert!((out.noise_scale_var.unwrap() - 2.0 * s.delta_var / eps).abs() < 1e-12);

        let full = g.counts();
        let clipped = clip_release(&g, &full, &p, &mut RngStream::new(1)).unwrap();
        let base = baseline_release(&g, &p, &mut RngStream::new(1)).unwrap();
        prop_assert_eq!(clipped, base);

        let out = levy_release(&g, &p, &mut rng).unwrap();
        let iv = out.interval.unwrap();
        prop_assert!(iv.hi - iv.lo <= 10.0);
        let wp = MechanismParams { strategy: GroupingStrategy::WrapAround, ..p };
        let m_ub = *g.counts().iter().min().unwrap();
        let out = array_average_release(&g, m_ub, &wp, &mut rng).unwrap();
        let k = dp_composer_core::grouping::array_count_k(&g.counts(), m_ub) as f64;
        prop_assert!((out.noise_scale_mean - 2.0 * 10.0 / k / eps).abs() < 1e-12);
    }

    #[test]
    fn interval_width_at_most_three_tau(means in prop::collection::vec(0.0f64..=4.0, 1..20), tau in 0.05f64..5.0, seed: u64) {
        let m = ArrayMeans { weights: vec![1; means.len()], means };
        let iv = private_interval(&m, 1.0, tau, 4.0, &mut RngStream::new(seed)).unwrap();
        prop_assert!(iv.hi - iv.lo <= 3.0 * tau + 1e-12);
        prop_assert!(0.0 <= iv.lo && iv.hi <= 4.0);
    }

    #[test]
    fn quantiles_stay_in_range(values in prop::collection::vec(0.0f64..=1.0, 1..30), q in 0.0f64..=1.0, seed: u64) {
        let x = private_quantile(&values, q, 1.0, 1.0, &mut RngStream::new(seed)).unwrap();
        prop_assert!((0.0..=1.0).contains(&x));
    }
}
