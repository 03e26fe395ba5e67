// SPDX-License-Identifier: MIT OR Apache-2.0

//! Poisson simulation study: dimension recovery by BIC/ICL criteria and
//! Kullback-Leibler distance of signal estimates to the truth.
//!
//! Replicate seeds are derived with SplitMix64 from the base seed, the bit
//! pattern of `lambda` and the replicate index; each replicate draws from a
//! ChaCha8 stream seeded with that value, so every replicate is replayable
//! in isolation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::emission::{SegmentMarginalTable, SeriesData};
use crate::engine::PowerSlices;
use crate::error::{Result, SegError};
use crate::posterior::{posterior_mean_signal, segment_distributions};
use crate::selection::{mle_fits, Analysis, PriorNormalizer};
use crate::types::{ModelHyper, PriorSpec};

/// Simulation design: piecewise-constant Poisson means alternating between
/// `base` (odd segments) and `base + lambda` (even segments).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimDesign {
    pub n: usize,
    /// 1-based starting positions of segments 2..=K.
    pub changepoints: Vec<usize>,
    pub base: f64,
    pub lambdas: Vec<f64>,
    /// Values used for `alpha = beta`.
    pub hypers: Vec<f64>,
    pub replicates: usize,
    pub kmax: usize,
    pub seed: u64,
}

impl Default for SimDesign {
    fn default() -> Self {
        Self {
            n: 150,
            changepoints: vec![21, 29, 68, 82, 115, 135],
            base: 1.0,
            lambdas: vec![0.0, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0],
            hypers: vec![0.01, 0.1, 1.0],
            replicates: 50,
            kmax: 15,
            seed: 20_100_101,
        }
    }
}

impl SimDesign {
    pub fn true_dimension(&self) -> usize {
        self.changepoints.len() + 1
    }

    fn validate(&self) -> Result<()> {
        let mut prev = 1;
        for &c in &self.changepoints {
            if c <= prev || c > self.n {
                return Err(SegError::domain("change-points must be increasing within 2..=n"));
            }
            prev = c;
        }
        if !(self.base.is_finite() && self.base > 0.0) {
            return Err(SegError::domain("base mean must be positive"));
        }
        if self.kmax == 0 || self.kmax > self.n {
            return Err(SegError::domain(format!("kmax must lie in 1..={}", self.n)));
        }
        Ok(())
    }

    /// True mean at every position for a given `lambda`.
    pub fn true_means(&self, lambda: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n);
        let mut bounds = vec![1];
        bounds.extend_from_slice(&self.changepoints);
        bounds.push(self.n + 1);
        for (idx, w) in bounds.windows(2).enumerate() {
            let mean = if idx % 2 == 0 { self.base } else { self.base + lambda };
            out.extend(std::iter::repeat_n(mean, w[1] - w[0]));
        }
        out
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one replicate.
pub fn replicate_seed(base: u64, lambda: f64, replicate: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ lambda.to_bits()) ^ replicate as u64)
}

/// Draws one series from the design; deterministic in `seed`.
pub fn simulate_series(design: &SimDesign, lambda: f64, seed: u64) -> Result<SeriesData> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(SegError::domain(format!("lambda must be >= 0 (got {lambda})")));
    }
    design.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts: Vec<f64> = design
        .true_means(lambda)
        .into_iter()
        .map(|mu| {
            Poisson::new(mu)
                .map(|d| d.sample(&mut rng))
                .map_err(|e| SegError::domain(e.to_string()))
        })
        .collect::<Result<_>>()?;
    SeriesData::poisson(&counts)
}

/// `KL(Poisson(mu_hat) || Poisson(mu)) = mu_hat log(mu_hat / mu) - mu_hat + mu`, with `0 log 0 = 0`.
pub fn poisson_kl(mu_hat: f64, mu: f64) -> Result<f64> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(SegError::domain(format!("reference rate must be > 0 (got {mu})")));
    }
    if !(mu_hat >= 0.0 && mu_hat.is_finite()) {
        return Err(SegError::domain(format!("estimated rate must be >= 0 (got {mu_hat})")));
    }
    let fit = if mu_hat > 0.0 { mu_hat * (mu_hat / mu).ln() } else { 0.0 };
    Ok(fit - mu_hat + mu)
}

/// `d(mu_hat, mu) = sum_t KL(Poisson(mu_hat_t) || Poisson(mu_t))`.
pub fn kl_distance(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(SegError::invalid("estimate and truth differ in length"));
    }
    estimate.iter().zip(truth).map(|(&a, &b)| poisson_kl(a, b)).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// `argmin BIC(K)`, conditional-uniform prior.
    BicK,
    /// Dimension of `argmin BIC(m)`, conditional-uniform prior.
    BicM,
    /// `argmin ICL(K)`, conditional-uniform prior.
    Icl,
    /// `argmin BIC(K)` under equal probability for every segmentation.
    FlatBicK,
    /// Dimension of `argmin BIC(m)` under equal probability for every segmentation.
    FlatBicM,
}

impl Criterion {
    pub const ALL: [Criterion; 5] = [
        Criterion::BicK,
        Criterion::BicM,
        Criterion::Icl,
        Criterion::FlatBicK,
        Criterion::FlatBicM,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Criterion::BicK => "bic_k",
            Criterion::BicM => "bic_m",
            Criterion::Icl => "icl",
            Criterion::FlatBicK => "flat_bic_k",
            Criterion::FlatBicM => "flat_bic_m",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryRow {
    pub lambda: f64,
    /// `alpha = beta`.
    pub hyper: f64,
    pub criterion: Criterion,
    pub recovered: usize,
    pub replicates: usize,
    pub fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KlRow {
    pub lambda: f64,
    pub k: usize,
    pub mle_mean: f64,
    pub mle_std: f64,
    pub posterior_mean: f64,
    pub posterior_std: f64,
    pub replicates: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub seed: u64,
    pub recovery: Vec<RecoveryRow>,
    pub kl: Vec<KlRow>,
}

impl ExperimentResult {
    pub fn recovery_fraction(&self, lambda: f64, hyper: f64, criterion: Criterion) -> Option<f64> {
        self.recovery
            .iter()
            .find(|r| r.lambda == lambda && r.hyper == hyper && r.criterion == criterion)
            .map(|r| r.fraction)
    }

    pub fn kl_row(&self, lambda: f64, k: usize) -> Option<&KlRow> {
        self.kl.iter().find(|r| r.lambda == lambda && r.k == k)
    }
}

fn argmin_k(kmax: usize, score: impl Fn(usize) -> f64) -> usize {
    let mut best = (1, score(1));
    for k in 2..=kmax {
        let v = score(k);
        if v < best.1 {
            best = (k, v);
        }
    }
    best.0
}

/// Selected dimension for each criterion on one series.
pub fn selected_dimensions(data: &SeriesData, hyper: &ModelHyper, kmax: usize) -> Result<[(Criterion, usize); 5]> {
    let n = data.len();
    let analysis = Analysis::new(data.clone(), *hyper, PriorSpec::uniform_given_k(kmax)?)?;
    let report = analysis.report()?;
    // The flat prior shares the conditional-uniform table (a_r = 1); only the
    // per-dimension constants change.
    let flat = PriorNormalizer::new(&PriorSpec::flat_over_segmentations(n, kmax)?, n)?;
    let sums = analysis.sums();
    let maxes = analysis.maxes();
    let flat_bic_k = argmin_k(kmax, |k| -(flat.joint_offset(k) + sums.total(k)));
    let flat_bic_m = argmin_k(kmax, |k| -(flat.joint_offset(k) + maxes.total(k)));
    Ok([
        (Criterion::BicK, report.k_bic),
        (Criterion::BicM, report.k_bic_m),
        (Criterion::Icl, report.k_icl),
        (Criterion::FlatBicK, flat_bic_k),
        (Criterion::FlatBicM, flat_bic_m),
    ])
}

/// Fraction of replicates in which each criterion returns the true dimension,
/// for every `(lambda, alpha = beta)` cell of the design.
pub fn run_recovery_experiment(design: &SimDesign, replicates: usize) -> Result<ExperimentResult> {
    if replicates == 0 {
        return Err(SegError::domain("replicates must be >= 1"));
    }
    design.validate()?;
    let truth = design.true_dimension();
    let mut rows = Vec::new();
    for &lambda in &design.lambdas {
        let series: Vec<SeriesData> = (0..replicates)
            .into_par_iter()
            .map(|r| simulate_series(design, lambda, replicate_seed(design.seed, lambda, r)))
            .collect::<Result<_>>()?;
        for &h in &design.hypers {
            let hyper = ModelHyper::poisson(h, h)?;
            let picks: Vec<[(Criterion, usize); 5]> = series
                .par_iter()
                .map(|d| selected_dimensions(d, &hyper, design.kmax))
                .collect::<Result<_>>()?;
            for (ci, criterion) in Criterion::ALL.into_iter().enumerate() {
                let recovered = picks.iter().filter(|p| p[ci].1 == truth).count();
                rows.push(RecoveryRow {
                    lambda,
                    hyper: h,
                    criterion,
                    recovered,
                    replicates,
                    fraction: recovered as f64 / replicates as f64,
                });
            }
        }
    }
    Ok(ExperimentResult {
        seed: design.seed,
        recovery: rows,
        kl: Vec::new(),
    })
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Posterior mean signal for every `k = 1..=kmax`.
pub fn posterior_mean_signals(table: &SegmentMarginalTable, sums: &PowerSlices, kmax: usize) -> Result<Vec<Vec<f64>>> {
    (1..=kmax)
        .map(|k| {
            let s = segment_distributions(sums, table, k)?;
            posterior_mean_signal(&s, table)
        })
        .collect()
}

/// KL distance to the true signal of the maximum-likelihood fit and of the
/// posterior mean signal, for each `lambda` and each `K = 1..=kmax`.
pub fn run_kl_experiment(
    design: &SimDesign,
    lambdas: &[f64],
    kmax: usize,
    replicates: usize,
    hyper: f64,
) -> Result<ExperimentResult> {
    if replicates == 0 {
        return Err(SegError::domain("replicates must be >= 1"));
    }
    design.validate()?;
    if kmax == 0 || kmax > design.n {
        return Err(SegError::domain(format!("kmax must lie in 1..={}", design.n)));
    }
    let model = ModelHyper::poisson(hyper, hyper)?;
    let mut rows = Vec::new();
    for &lambda in lambdas {
        let truth = design.true_means(lambda);
        // per replicate: (d_mle[k], d_post[k])
        let dists: Vec<(Vec<f64>, Vec<f64>)> = (0..replicates)
            .into_par_iter()
            .map(|r| -> Result<_> {
                let data = simulate_series(design, lambda, replicate_seed(design.seed, lambda, r))?;
                let fits = mle_fits(&data, kmax)?;
                let analysis = Analysis::new(data, model, PriorSpec::uniform_given_k(kmax)?)?;
                let signals = posterior_mean_signals(analysis.table(), analysis.sums(), kmax)?;
                let d_mle = fits
                    .iter()
                    .map(|(_, f)| kl_distance(f, &truth))
                    .collect::<Result<Vec<_>>>()?;
                let d_post = signals
                    .iter()
                    .map(|s| kl_distance(s, &truth))
                    .collect::<Result<Vec<_>>>()?;
                Ok((d_mle, d_post))
            })
            .collect::<Result<_>>()?;
        for k in 1..=kmax {
            let mle: Vec<f64> = dists.iter().map(|d| d.0[k - 1]).collect();
            let post: Vec<f64> = dists.iter().map(|d| d.1[k - 1]).collect();
            let (mle_mean, mle_std) = mean_std(&mle);
            let (posterior_mean, posterior_std) = mean_std(&post);
            rows.push(KlRow {
                lambda,
                k,
                mle_mean,
                mle_std,
                posterior_mean,
                posterior_std,
                replicates,
            });
        }
    }
    Ok(ExperimentResult {
        seed: design.seed,
        recovery: Vec::new(),
        kl: rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kl_examples() {
        assert_eq!(poisson_kl(1.0, 1.0).unwrap(), 0.0);
        assert_eq!(poisson_kl(0.0, 1.0).unwrap(), 1.0);
        assert!(poisson_kl(1.0, 0.0).is_err());
        assert!(poisson_kl(-1.0, 1.0).is_err());
    }

    #[test]
    fn kl_matches_termwise_sum() {
        // sum over counts of Poisson(c; 2) log(Poisson(c; 2) / Poisson(c; 1))
        let mut total = 0.0;
        let mut p2 = (-2.0f64).exp();
        let mut p1 = (-1.0f64).exp();
        for c in 0..=50 {
            if c > 0 {
                p2 *= 2.0 / c as f64;
                p1 *= 1.0 / c as f64;
            }
            total += p2 * (p2 / p1).ln();
        }
        let kl = poisson_kl(2.0, 1.0).unwrap();
        assert!((kl - total).abs() < 1e-12);
        assert!((kl - 0.386294).abs() < 1e-6);
    }

    #[test]
    fn design_means() {
        let d = SimDesign::default();
        let m = d.true_means(3.0);
        assert_eq!(m.len(), 150);
        assert!(m[..20].iter().all(|&v| v == 1.0));
        assert!(m[20..28].iter().all(|&v| v == 4.0));
        assert_eq!(m[28], 1.0);
        assert_eq!(m[133], 4.0);
        assert_eq!(m[134], 1.0);
        assert_eq!(d.true_dimension(), 7);
    }

    #[test]
    fn simulation_is_seed_deterministic() {
        let d = SimDesign::default();
        let a = simulate_series(&d, 4.0, 7).unwrap();
        let b = simulate_series(&d, 4.0, 7).unwrap();
        let c = simulate_series(&d, 4.0, 8).unwrap();
        assert_eq!(a.values(), b.values());
        assert_ne!(a.values(), c.values());
        assert!(simulate_series(&d, -1.0, 7).is_err());
    }

    #[test]
    fn distance_zero_iff_equal() {
        let t = [1.0, 2.0, 3.0];
        assert_eq!(kl_distance(&t, &t).unwrap(), 0.0);
        assert!(kl_distance(&[1.0, 2.0, 3.1], &t).unwrap() > 0.0);
    }
}
