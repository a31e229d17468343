use std::collections::BTreeMap;

use dp_composer_core::dataset::{GridData, UserId};
use dp_composer_core::grouping::*;
use proptest::prelude::*;

fn grid_from(m: &[u64]) -> GridData {
    GridData::new(
        1.0,
        m.iter()
            .enumerate()
            .map(|(i, &c)| {
                (
                    UserId::from(format!("u{i:03}")),
                    (0..c).map(|j| j as f64 / c as f64).collect(),
                )
            })
            .collect(),
    )
}

fn instance() -> impl Strategy<Value = (Vec<u64>, u64)> {
    prop::collection::vec(1u64..40, 1..30).prop_flat_map(|m| {
        let lo = *m.iter().min().unwrap();
        let hi = *m.iter().max().unwrap();
        (Just(m), lo..=hi)
    })
}

proptest! {
    #[test]
    fn array_counts((m, cap) in instance()) {
        let k = array_count_k(&m, cap);
        let wrap = wrap_around_layout(&m, cap).unwrap();
        let best = best_fit_layout(&m, cap).unwrap();
        prop_assert_eq!(wrap.arrays.len() as u64, k);
        prop_assert!(best.arrays.len() as u64 >= k);
        let placed = |l: &Layout| l.arrays.iter().flatten().map(|&(_, n)| n).sum::<u64>();
        prop_assert_eq!(placed(&wrap), k * cap);
        prop_assert_eq!(placed(&best), m.iter().map(|&x| x.min(cap)).sum::<u64>());
        for a in &wrap.arrays {
            prop_assert_eq!(a.iter().map(|&(_, n)| n).sum::<u64>(), cap);
        }
        for a in &best.arrays {
            prop_assert!(a.iter().map(|&(_, n)| n).sum::<u64>() <= cap);
        }
    }

    #[test]
    fn user_influence((m, cap) in instance()) {
        let g = grid_from(&m);
        let best = best_fit(&g, cap).unwrap();
        let wrap = wrap_around(&g, cap).unwrap();
        for (u, _) in &g.users {
            prop_assert_eq!(best.arrays_of(u).len(), 1);
            let w = wrap.arrays_of(u);
            prop_assert!(w.len() <= 2);
            if w.len() == 2 {
                prop_assert_eq!(w[1], w[0] + 1);
            }
        }
    }

    #[test]
    fn leading_samples_are_placed((m, cap) in instance()) {
        let g = grid_from(&m);
        let best = best_fit(&g, cap).unwrap();
        let mut seen: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for e in best.arrays.iter().flatten() {
            seen.entry(e.source.as_str()).or_default().push(e.value);
        }
        for (u, values) in &g.users {
            let want = &values[..values.len().min(cap as usize)];
            prop_assert_eq!(seen[u.as_str()].as_slice(), want);
        }
    }

    #[test]
    fn optimized_capacity_is_in_range(m in prop::collection::vec(1u64..200, 1..40)) {
        let c = optimized_mub(&m);
        prop_assert!(c >= *m.iter().min().unwrap() && c <= *m.iter().max().unwrap());
        let sum = |x: u64| m.iter().map(|&v| v.min(x)).sum::<u64>() as f64;
        let best = sum(c) / (c as f64).sqrt();
        for x in *m.iter().min().unwrap()..=*m.iter().max().unwrap() {
            prop_assert!(sum(x) / (x as f64).sqrt() <= best * (1.0 + 1e-12));
        }
    }

    #[test]
    fn means_are_bounded((m, cap) in instance()) {
        let means = array_means(&best_fit(&grid_from(&m), cap).unwrap());
        prop_assert_eq!(means.means.len(), means.weights.len());
        prop_assert!(means.means.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }
}
