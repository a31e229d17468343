use dp_composer_core::dataset::{grid_stats, Dataset, GridId, Record};
use proptest::prelude::*;

fn rows() -> impl Strategy<Value = Vec<(u8, u8, f64)>> {
    prop::collection::vec((0u8..5, 0u8..3, 0.0f64..=20.0), 1..60)
}

fn dataset(rows: &[(u8, u8, f64)]) -> Dataset {
    Dataset::new(
        rows.iter()
            .map(|&(u, g, v)| Record::new(format!("u{u}").as_str(), format!("g{g}").as_str(), v))
            .collect(),
        20.0,
    )
    .unwrap()
}

proptest! {
    #[test]
    fn variance_is_bounded(rows in rows()) {
        let d = dataset(&rows);
        for g in d.grid_ids() {
            let s = grid_stats(&d, &g).unwrap();
            prop_assert!(s.variance <= 100.0 + 1e-9);
            prop_assert!((0.0..=20.0).contains(&s.mean));
        }
    }

    #[test]
    fn row_order_does_not_change_stats(rows in rows(), seed: u64) {
        let d = dataset(&rows);
        let mut shuffled = rows.clone();
        // deterministic permutation from the seed
        let n = shuffled.len();
        let mut s = seed | 1;
        for i in (1..n).rev() {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            shuffled.swap(i, (s % (i as u64 + 1)) as usize);
        }
        let e = dataset(&shuffled);
        prop_assert_eq!(d.occupancy(), e.occupancy());
        for g in d.grid_ids() {
            let a = grid_stats(&d, &g).unwrap();
            let b = grid_stats(&e, &g).unwrap();
            prop_assert!((a.mean - b.mean).abs() < 1e-9);
            prop_assert!((a.variance - b.variance).abs() < 1e-9);
        }
        prop_assert!(grid_stats(&d, &GridId::from("nope")).is_err());
    }
}
