// SPDX-License-Identifier: MIT OR Apache-2.0

#![allow(dead_code)]

use exactseg::oracle::segmentations;
use exactseg::{ModelHyper, SegmentMarginalTable, Segmentation, SeriesData};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Piecewise Poisson counts with a few random rate changes.
pub fn random_counts(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut rate = rng.random_range(0.5..8.0);
    (0..n)
        .map(|_| {
            if rng.random_bool(0.25) {
                rate = rng.random_range(0.5..8.0);
            }
            Poisson::new(rate).unwrap().sample(rng)
        })
        .collect()
}

/// Piecewise Gaussian values with random mean and scale changes.
pub fn random_reals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut mean = rng.random_range(-3.0..3.0);
    let mut sd = rng.random_range(0.2..2.0);
    (0..n)
        .map(|_| {
            if rng.random_bool(0.25) {
                mean = rng.random_range(-3.0..3.0);
                sd = rng.random_range(0.2..2.0);
            }
            Normal::new(mean, sd).unwrap().sample(rng)
        })
        .collect()
}

pub fn random_poisson(rng: &mut ChaCha8Rng, n: usize) -> (SeriesData, ModelHyper) {
    let data = SeriesData::poisson(&random_counts(rng, n)).unwrap();
    let a = rng.random_range(0.1..3.0);
    let b = rng.random_range(0.1..3.0);
    (data, ModelHyper::poisson(a, b).unwrap())
}

pub fn random_gaussian(rng: &mut ChaCha8Rng, n: usize) -> (SeriesData, ModelHyper) {
    let values = random_reals(rng, n);
    let hyper = ModelHyper::gaussian_default_for(&values).unwrap();
    (SeriesData::gaussian(&values).unwrap(), hyper)
}

pub fn random_table(rng: &mut ChaCha8Rng, n: usize) -> SegmentMarginalTable {
    let mut vals = vec![0.0; (n + 1) * (n + 1)];
    for v in vals.iter_mut() {
        *v = rng.random_range(-6.0..2.0);
    }
    SegmentMarginalTable::from_log_weights(n, |s| vals[(s.start() - 1) * (n + 1) + s.end() - 1]).unwrap()
}

pub fn score(table: &SegmentMarginalTable, m: &Segmentation) -> f64 {
    m.segments().map(|r| table.log_f(r.start(), r.end())).sum()
}

/// `log sum_{m in M_k} prod_r f(r)` by enumeration, accumulated naively in linear space
/// after factoring out the maximum.
pub fn brute_log_total(table: &SegmentMarginalTable, k: usize) -> f64 {
    let scores: Vec<f64> = segmentations(table.n(), k).map(|m| score(table, &m)).collect();
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln()
}

/// First maximizer in lexicographic order.
pub fn brute_best(table: &SegmentMarginalTable, k: usize) -> (Segmentation, f64) {
    let mut best: Option<(Segmentation, f64)> = None;
    for m in segmentations(table.n(), k) {
        let s = score(table, &m);
        if best.as_ref().is_none_or(|(_, b)| s > *b) {
            best = Some((m, s));
        }
    }
    best.unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
