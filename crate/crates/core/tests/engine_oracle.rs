// SPDX-License-Identifier: MIT OR Apache-2.0

//! Power slices against exhaustive enumeration of segmentations.

mod common;

use exactseg::logspace::log_sum_exp;
use exactseg::oracle::segmentations;
use exactseg::{best_segmentation, log_segmentation_count, power_slices, SegmentMarginalTable, Semiring};
use proptest::prelude::*;

fn prefix(table: &SegmentMarginalTable, len: usize) -> SegmentMarginalTable {
    SegmentMarginalTable::from_log_weights(len, |s| table.log_f(s.start(), s.end())).unwrap()
}

fn suffix(table: &SegmentMarginalTable, from: usize) -> SegmentMarginalTable {
    let n = table.n();
    let off = from - 1;
    SegmentMarginalTable::from_log_weights(n - off, |s| table.log_f(s.start() + off, s.end() + off)).unwrap()
}

#[test]
fn totals_match_enumeration() {
    let mut rng = common::rng(21);
    for n in 1..=10 {
        for _ in 0..4 {
            let table = common::random_table(&mut rng, n);
            let sums = power_slices(&table, n, Semiring::LogSum).unwrap();
            let maxes = power_slices(&table, n, Semiring::MaxTropical).unwrap();
            for k in 1..=n {
                let want = common::brute_log_total(&table, k);
                assert!(common::rel_err(sums.total(k), want) < 1e-10, "n={n} k={k}");
                let (_, best) = common::brute_best(&table, k);
                assert!(common::rel_err(maxes.total(k), best) < 1e-10);
            }
        }
    }
}

#[test]
fn slices_match_prefix_and_suffix_enumeration() {
    let mut rng = common::rng(22);
    for n in 2..=9 {
        let table = common::random_table(&mut rng, n);
        let sums = power_slices(&table, n, Semiring::LogSum).unwrap();
        for k in 1..=n {
            for j in 2..=n + 1 {
                let got = sums.forward(k, j);
                if k > j - 1 {
                    assert_eq!(got, f64::NEG_INFINITY);
                } else {
                    let want = common::brute_log_total(&prefix(&table, j - 1), k);
                    assert!(common::rel_err(got, want) < 1e-10, "fwd n={n} k={k} j={j}");
                }
            }
            for i in 1..=n {
                let got = sums.backward(k, i);
                if k > n + 1 - i {
                    assert_eq!(got, f64::NEG_INFINITY);
                } else {
                    let want = common::brute_log_total(&suffix(&table, i), k);
                    assert!(common::rel_err(got, want) < 1e-10, "bwd n={n} k={k} i={i}");
                }
            }
        }
        // identity row
        assert_eq!(sums.forward(0, 1), 0.0);
        assert_eq!(sums.backward(0, n + 1), 0.0);
        assert_eq!(sums.forward(0, 2), f64::NEG_INFINITY);
    }
}

#[test]
fn forward_and_backward_agree_at_every_split() {
    let mut rng = common::rng(23);
    for semiring in [Semiring::LogSum, Semiring::MaxTropical] {
        let n = 40;
        let table = common::random_table(&mut rng, n);
        let s = power_slices(&table, 12, semiring).unwrap();
        for k in 1..=12 {
            assert!(common::rel_err(s.total(k), s.backward(k, 1)) < 1e-12);
            for a in 0..=k {
                let terms = (1..=n + 1).map(|t| s.forward(a, t) + s.backward(k - a, t));
                let joined = match semiring {
                    Semiring::LogSum => log_sum_exp(terms),
                    Semiring::MaxTropical => terms.fold(f64::NEG_INFINITY, f64::max),
                };
                assert!(common::rel_err(joined, s.total(k)) < 1e-11, "k={k} a={a}");
            }
        }
    }
}

#[test]
fn max_is_bounded_by_sum() {
    let mut rng = common::rng(24);
    let n = 60;
    let table = common::random_table(&mut rng, n);
    let sums = power_slices(&table, 20, Semiring::LogSum).unwrap();
    let maxes = power_slices(&table, 20, Semiring::MaxTropical).unwrap();
    for k in 1..=20 {
        let count = log_segmentation_count(n, k).unwrap();
        assert!(maxes.total(k) <= sums.total(k) + 1e-12);
        assert!(sums.total(k) <= maxes.total(k) + count + 1e-9);
    }
}

#[test]
fn constant_shift_moves_slice_k_by_k_times_c() {
    let mut rng = common::rng(25);
    let table = common::random_table(&mut rng, 30);
    let c = 3.75;
    let shifted = table.shifted(c);
    for semiring in [Semiring::LogSum, Semiring::MaxTropical] {
        let a = power_slices(&table, 10, semiring).unwrap();
        let b = power_slices(&shifted, 10, semiring).unwrap();
        for k in 1..=10 {
            assert!((b.total(k) - a.total(k) - k as f64 * c).abs() < 1e-9);
        }
    }
}

#[test]
fn best_segmentation_matches_enumeration() {
    let mut rng = common::rng(26);
    for n in 1..=10 {
        for _ in 0..3 {
            let table = common::random_table(&mut rng, n);
            for k in 1..=n {
                let (m, v) = best_segmentation(&table, k).unwrap();
                let (want, wv) = common::brute_best(&table, k);
                assert_eq!(m, want, "n={n} k={k}");
                assert!((v - wv).abs() < 1e-10);
                assert!((common::score(&table, &m) - v).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn ties_resolve_to_smallest_breakpoints() {
    // every segmentation has the same score
    let table = SegmentMarginalTable::from_log_weights(7, |_| -1.0).unwrap();
    for k in 1..=7 {
        let (m, _) = best_segmentation(&table, k).unwrap();
        assert_eq!(m, segmentations(7, k).next().unwrap());
    }
}

#[test]
fn prefix_backtrack_matches_enumeration() {
    let mut rng = common::rng(27);
    let table = common::random_table(&mut rng, 9);
    let maxes = power_slices(&table, 9, Semiring::MaxTropical).unwrap();
    for j in 2..=10 {
        for k in 1..j {
            let (m, v) = maxes.best_prefix_segmentation(k, j).unwrap();
            let (_, want) = common::brute_best(&prefix(&table, j - 1), k);
            assert!((v - want).abs() < 1e-10);
            assert_eq!(m.n(), j - 1);
            assert!((common::score(&table, &m) - v).abs() < 1e-10);
        }
    }
}

#[test]
fn kmax_beyond_length_is_rejected() {
    let table = SegmentMarginalTable::from_log_weights(3, |_| 0.0).unwrap();
    assert!(power_slices(&table, 4, Semiring::LogSum).is_err());
    assert!(power_slices(&table, 3, Semiring::LogSum).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_tables_agree_with_brute_force(seed in any::<u64>(), n in 1usize..=8) {
        let mut rng = common::rng(seed);
        let table = common::random_table(&mut rng, n);
        let sums = power_slices(&table, n, Semiring::LogSum).unwrap();
        for k in 1..=n {
            let want = common::brute_log_total(&table, k);
            prop_assert!(common::rel_err(sums.total(k), want) < 1e-10);
        }
    }
}
