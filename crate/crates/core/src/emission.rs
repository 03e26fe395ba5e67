// SPDX-License-Identifier: MIT OR Apache-2.0

//! Conjugate per-segment evidence and posterior segment means.
//!
//! Both models are evaluated from prefix sums, so any segment costs O(1)
//! and the full upper-triangular table costs O(n^2).

use std::f64::consts::PI;

use crate::error::{Result, SegError};
use crate::logspace::ln_gamma;
use crate::types::{log_weight_for_len, ModelHyper, PriorSpec, Segment};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Poisson,
    Gaussian,
}

/// An observed series with its prefix statistics.
#[derive(Clone, Debug)]
pub struct SeriesData {
    model: ModelKind,
    values: Vec<f64>,
    cumsum: Vec<f64>,
    cumsum_sq: Vec<f64>,
    cum_log_fact: Vec<f64>,
}

impl SeriesData {
    /// Count data. Every value must be a non-negative integer.
    pub fn poisson(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(SegError::invalid("empty series"));
        }
        for (i, &y) in values.iter().enumerate() {
            if !(y.is_finite() && y >= 0.0 && y.fract() == 0.0) {
                return Err(SegError::mismatch(format!(
                    "poisson data must be non-negative integers; value {y} at position {}",
                    i + 1
                )));
            }
        }
        Ok(Self::build(ModelKind::Poisson, values.to_vec()))
    }

    pub fn poisson_counts(counts: &[u64]) -> Result<Self> {
        let values: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        Self::poisson(&values)
    }

    /// Real-valued data for the heteroscedastic Gaussian model.
    pub fn gaussian(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(SegError::invalid("empty series"));
        }
        if let Some(i) = values.iter().position(|y| !y.is_finite()) {
            return Err(SegError::invalid(format!("non-finite value at position {}", i + 1)));
        }
        Ok(Self::build(ModelKind::Gaussian, values.to_vec()))
    }

    fn build(model: ModelKind, values: Vec<f64>) -> Self {
        let n = values.len();
        let mut cumsum = Vec::with_capacity(n + 1);
        let mut cumsum_sq = Vec::with_capacity(n + 1);
        let mut cum_log_fact = Vec::with_capacity(n + 1);
        let (mut s, mut s2, mut lf) = (0.0, 0.0, 0.0);
        cumsum.push(0.0);
        cumsum_sq.push(0.0);
        cum_log_fact.push(0.0);
        for &y in &values {
            s += y;
            s2 += y * y;
            if model == ModelKind::Poisson {
                lf += ln_gamma(y + 1.0);
            }
            cumsum.push(s);
            cumsum_sq.push(s2);
            cum_log_fact.push(lf);
        }
        Self {
            model,
            values,
            cumsum,
            cumsum_sq,
            cum_log_fact,
        }
    }

    pub fn model(&self) -> ModelKind {
        self.model
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The same series in reverse order.
    pub fn reversed(&self) -> Self {
        let mut v = self.values.clone();
        v.reverse();
        Self::build(self.model, v)
    }

    #[inline]
    fn sum(&self, lo: usize, hi: usize) -> f64 {
        self.cumsum[hi] - self.cumsum[lo]
    }

    /// `n_r * S_r^2`, clamped at zero against cancellation.
    #[inline]
    fn centered_ss(&self, lo: usize, hi: usize) -> f64 {
        let len = (hi - lo) as f64;
        let s = self.sum(lo, hi);
        let ss = self.cumsum_sq[hi] - self.cumsum_sq[lo] - s * s / len;
        ss.max(0.0)
    }

    fn check(&self, seg: Segment, hyper: &ModelHyper) -> Result<()> {
        seg.check_within(self.len())?;
        match (self.model, hyper) {
            (ModelKind::Poisson, ModelHyper::Poisson { .. }) | (ModelKind::Gaussian, ModelHyper::Gaussian { .. }) => {
                Ok(())
            }
            _ => Err(SegError::mismatch(format!(
                "{:?} data paired with {:?} hyperparameters",
                self.model, hyper
            ))),
        }
    }
}

#[inline]
fn poisson_lm(data: &SeriesData, lo: usize, hi: usize, alpha: f64, beta: f64) -> f64 {
    let len = (hi - lo) as f64;
    let s = data.sum(lo, hi);
    let log_fact = data.cum_log_fact[hi] - data.cum_log_fact[lo];
    ln_gamma(alpha + s) + alpha * beta.ln() - (alpha + s) * (beta + len).ln() - ln_gamma(alpha) - log_fact
}

#[derive(Clone, Copy)]
struct GaussianConsts {
    mu0: f64,
    n0: f64,
    nu0: f64,
    s0: f64,
    base: f64,
}

impl GaussianConsts {
    fn new(mu0: f64, n0: f64, nu0: f64, s0: f64) -> Self {
        let base = 0.5 * n0.ln() + 0.5 * nu0 * (0.5 * s0).ln() - ln_gamma(0.5 * nu0);
        Self { mu0, n0, nu0, s0, base }
    }

    #[inline]
    fn log_marginal(&self, data: &SeriesData, lo: usize, hi: usize) -> f64 {
        let len = (hi - lo) as f64;
        let mean = data.sum(lo, hi) / len;
        let dev = mean - self.mu0;
        let denom = data.centered_ss(lo, hi) + self.s0 + len * self.n0 * dev * dev / (len + self.n0);
        let log_theta = std::f64::consts::LN_2 - denom.ln();
        let half = 0.5 * (self.nu0 + len);
        self.base + ln_gamma(half) - 0.5 * len * (2.0 * PI).ln() - 0.5 * (len + self.n0).ln() + half * log_theta
    }
}

/// `log P(Y^r)` under the Poisson-Gamma model.
pub fn poisson_log_marginal(seg: Segment, data: &SeriesData, hyper: &ModelHyper) -> Result<f64> {
    data.check(seg, hyper)?;
    match *hyper {
        ModelHyper::Poisson { alpha, beta } => Ok(poisson_lm(data, seg.lo(), seg.hi(), alpha, beta)),
        _ => Err(SegError::mismatch("poisson marginal needs poisson hyperparameters")),
    }
}

/// `log P(Y^r)` under the heteroscedastic Gaussian model with normal-gamma prior.
pub fn gaussian_log_marginal(seg: Segment, data: &SeriesData, hyper: &ModelHyper) -> Result<f64> {
    data.check(seg, hyper)?;
    match *hyper {
        ModelHyper::Gaussian { mu0, n0, nu0, s0 } => {
            Ok(GaussianConsts::new(mu0, n0, nu0, s0).log_marginal(data, seg.lo(), seg.hi()))
        }
        _ => Err(SegError::mismatch("gaussian marginal needs gaussian hyperparameters")),
    }
}

/// `log P(Y^r)` for whichever model the data carries.
pub fn log_marginal(seg: Segment, data: &SeriesData, hyper: &ModelHyper) -> Result<f64> {
    match data.model() {
        ModelKind::Poisson => poisson_log_marginal(seg, data, hyper),
        ModelKind::Gaussian => gaussian_log_marginal(seg, data, hyper),
    }
}

/// `E[mu_r | Y^r]`.
pub fn posterior_segment_mean(seg: Segment, data: &SeriesData, hyper: &ModelHyper) -> Result<f64> {
    data.check(seg, hyper)?;
    Ok(segment_mean(data, hyper, seg.lo(), seg.hi()))
}

#[inline]
fn segment_mean(data: &SeriesData, hyper: &ModelHyper, lo: usize, hi: usize) -> f64 {
    let len = (hi - lo) as f64;
    let s = data.sum(lo, hi);
    match *hyper {
        ModelHyper::Poisson { alpha, beta } => (alpha + s) / (beta + len),
        ModelHyper::Gaussian { mu0, n0, .. } => (n0 * mu0 + s) / (n0 + len),
    }
}

/// Dense upper-triangular `(n+1) x (n+1)` table of per-segment log weights
/// `log f(r) = log a_r + log P(Y^r)` and posterior segment means.
#[derive(Clone, Debug)]
pub struct SegmentMarginalTable {
    n: usize,
    logf: Vec<f64>,
    post_mean: Vec<f64>,
}

impl SegmentMarginalTable {
    /// Builds a table from closures over 0-based boundaries `lo < hi`.
    pub(crate) fn from_fn(
        n: usize,
        mut logf: impl FnMut(usize, usize) -> f64,
        mut mean: impl FnMut(usize, usize) -> f64,
    ) -> Self {
        let w = n + 1;
        let mut lf = vec![f64::NEG_INFINITY; w * w];
        let mut pm = vec![f64::NAN; w * w];
        for lo in 0..n {
            for hi in lo + 1..=n {
                lf[lo * w + hi] = logf(lo, hi);
                pm[lo * w + hi] = mean(lo, hi);
            }
        }
        Self {
            n,
            logf: lf,
            post_mean: pm,
        }
    }

    /// A table with arbitrary log weights over positions, keyed by 1-based `(start, end)`.
    pub fn from_log_weights(n: usize, mut logf: impl FnMut(Segment) -> f64) -> Result<Self> {
        if n == 0 {
            return Err(SegError::invalid("empty series"));
        }
        Ok(Self::from_fn(
            n,
            |lo, hi| logf(Segment::from_bounds(lo, hi)),
            |_, _| f64::NAN,
        ))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `log f([start, end))`; negative infinity outside the upper triangle.
    pub fn log_f(&self, start: usize, end: usize) -> f64 {
        if start == 0 || start >= end || end > self.n + 1 {
            return f64::NEG_INFINITY;
        }
        self.logf[(start - 1) * (self.n + 1) + end - 1]
    }

    /// `E[mu_r | Y^r]` for `r = [start, end)`.
    pub fn post_mean(&self, start: usize, end: usize) -> f64 {
        if start == 0 || start >= end || end > self.n + 1 {
            return f64::NAN;
        }
        self.post_mean[(start - 1) * (self.n + 1) + end - 1]
    }

    /// Row `lo` of the log table over 0-based boundaries.
    #[inline]
    pub(crate) fn row(&self, lo: usize) -> &[f64] {
        let w = self.n + 1;
        &self.logf[lo * w..(lo + 1) * w]
    }

    #[inline]
    pub(crate) fn mean_row(&self, lo: usize) -> &[f64] {
        let w = self.n + 1;
        &self.post_mean[lo * w..(lo + 1) * w]
    }

    /// Adds `c` to every finite log weight.
    pub fn shifted(&self, c: f64) -> Self {
        let mut out = self.clone();
        for v in out.logf.iter_mut().filter(|v| v.is_finite()) {
            *v += c;
        }
        out
    }
}

/// Fills `log a_r + log P(Y^r)` and `E[mu_r | Y^r]` for every segment.
pub fn build_marginal_table(data: &SeriesData, hyper: &ModelHyper, prior: &PriorSpec) -> Result<SegmentMarginalTable> {
    let n = data.len();
    data.check(Segment::from_bounds(0, n), hyper)?;
    let kind = prior.kind();
    let table = match *hyper {
        ModelHyper::Poisson { alpha, beta } => SegmentMarginalTable::from_fn(
            n,
            |lo, hi| log_weight_for_len(hi - lo, kind) + poisson_lm(data, lo, hi, alpha, beta),
            |lo, hi| segment_mean(data, hyper, lo, hi),
        ),
        ModelHyper::Gaussian { mu0, n0, nu0, s0 } => {
            let g = GaussianConsts::new(mu0, n0, nu0, s0);
            SegmentMarginalTable::from_fn(
                n,
                |lo, hi| log_weight_for_len(hi - lo, kind) + g.log_marginal(data, lo, hi),
                |lo, hi| segment_mean(data, hyper, lo, hi),
            )
        }
    };
    Ok(table)
}

/// Table with `f(r) = 1 / n_r`, used to normalize the homogeneous-lengths prior.
pub fn build_length_table(n: usize) -> Result<SegmentMarginalTable> {
    if n == 0 {
        return Err(SegError::invalid("empty series"));
    }
    Ok(SegmentMarginalTable::from_fn(
        n,
        |lo, hi| -((hi - lo) as f64).ln(),
        |_, _| f64::NAN,
    ))
}

/// Table of maximized Poisson log-likelihoods (rate = segment mean, `0 log 0 = 0`),
/// with the raw segment mean as the per-segment estimate.
pub fn build_mle_table(data: &SeriesData) -> Result<SegmentMarginalTable> {
    if data.model() != ModelKind::Poisson {
        return Err(SegError::mismatch("maximum-likelihood segmentation needs poisson data"));
    }
    let n = data.len();
    Ok(SegmentMarginalTable::from_fn(
        n,
        |lo, hi| {
            let len = (hi - lo) as f64;
            let s = data.sum(lo, hi);
            let log_fact = data.cum_log_fact[hi] - data.cum_log_fact[lo];
            let fit = if s > 0.0 { s * (s / len).ln() } else { 0.0 };
            fit - s - log_fact
        },
        |lo, hi| data.sum(lo, hi) / (hi - lo) as f64,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(a: usize, b: usize) -> Segment {
        Segment::new(a, b).unwrap()
    }

    #[test]
    fn poisson_single_point_examples() {
        let h = ModelHyper::poisson(1.0, 1.0).unwrap();
        let d0 = SeriesData::poisson(&[0.0]).unwrap();
        let d1 = SeriesData::poisson(&[1.0]).unwrap();
        assert!((poisson_log_marginal(seg(1, 2), &d0, &h).unwrap() - 0.5f64.ln()).abs() < 1e-14);
        assert!((poisson_log_marginal(seg(1, 2), &d1, &h).unwrap() - 0.25f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn poisson_rejects_bad_counts() {
        assert!(matches!(
            SeriesData::poisson(&[1.0, -2.0]),
            Err(SegError::ModelMismatch(_))
        ));
        assert!(matches!(SeriesData::poisson(&[1.5]), Err(SegError::ModelMismatch(_))));
    }

    #[test]
    fn model_mismatch_detected() {
        let d = SeriesData::gaussian(&[0.3, 1.0]).unwrap();
        let h = ModelHyper::poisson(1.0, 1.0).unwrap();
        assert!(matches!(
            poisson_log_marginal(seg(1, 3), &d, &h),
            Err(SegError::ModelMismatch(_))
        ));
        assert!(build_marginal_table(&d, &h, &PriorSpec::uniform_given_k(1).unwrap()).is_err());
    }

    #[test]
    fn gaussian_constant_segment_at_prior_mean() {
        // S^2 = 0 and ybar = mu0, so theta = 2/s0 whatever n0.
        let d = SeriesData::gaussian(&[1.5; 4]).unwrap();
        for n0 in [0.1, 1.0, 7.0] {
            let h = ModelHyper::gaussian(1.5, n0, 2.0, 3.0).unwrap();
            let lm = gaussian_log_marginal(seg(1, 5), &d, &h).unwrap();
            let (len, nu0, s0) = (4.0f64, 2.0f64, 3.0f64);
            let expected = 0.5 * n0.ln() + 0.5 * nu0 * (s0 / 2.0).ln() + ln_gamma((nu0 + len) / 2.0)
                - 0.5 * len * (2.0 * PI).ln()
                - ln_gamma(nu0 / 2.0)
                - 0.5 * (len + n0).ln()
                + 0.5 * (nu0 + len) * (2.0 / s0).ln();
            assert!((lm - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_reversal_invariance() {
        let d = SeriesData::gaussian(&[0.3, -1.2, 2.5, 0.0]).unwrap();
        let r = d.reversed();
        let h = ModelHyper::gaussian(0.1, 0.5, 1.0, 2.0).unwrap();
        let a = gaussian_log_marginal(seg(1, 5), &d, &h).unwrap();
        let b = gaussian_log_marginal(seg(1, 5), &r, &h).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn posterior_mean_limit() {
        let d = SeriesData::poisson(&[2.0, 4.0, 9.0]).unwrap();
        let h = ModelHyper::poisson(1e-8, 1e-8).unwrap();
        let m = posterior_segment_mean(seg(1, 4), &d, &h).unwrap();
        assert!((m - 5.0).abs() < 1e-6);
    }

    #[test]
    fn table_shape_and_corner_entries() {
        let d = SeriesData::poisson(&[0.0]).unwrap();
        let h = ModelHyper::poisson(1.0, 1.0).unwrap();
        let t = build_marginal_table(&d, &h, &PriorSpec::uniform_given_k(1).unwrap()).unwrap();
        assert_eq!(t.n(), 1);
        assert!((t.log_f(1, 2) - 0.5f64.ln()).abs() < 1e-14);
        assert_eq!(t.log_f(2, 2), f64::NEG_INFINITY);
        assert_eq!(t.log_f(2, 1), f64::NEG_INFINITY);
    }

    #[test]
    fn homogeneous_table_adds_length_weight() {
        let d = SeriesData::poisson(&[3.0, 1.0, 4.0, 1.0, 5.0]).unwrap();
        let h = ModelHyper::poisson(0.5, 2.0).unwrap();
        let u = build_marginal_table(&d, &h, &PriorSpec::uniform_given_k(5).unwrap()).unwrap();
        let w = build_marginal_table(&d, &h, &PriorSpec::homogeneous_lengths(5).unwrap()).unwrap();
        for i in 1..=5 {
            for j in i + 1..=6 {
                let diff = u.log_f(i, j) - w.log_f(i, j);
                assert!((diff - ((j - i) as f64).ln()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mle_table_values() {
        let d = SeriesData::poisson(&[0.0, 0.0, 2.0]).unwrap();
        let t = build_mle_table(&d).unwrap();
        assert_eq!(t.log_f(1, 3), 0.0);
        // rate 2/3 over three points, counts 0, 0, 2
        let expected = 2.0 * (2.0f64 / 3.0).ln() - 2.0 - 2f64.ln();
        assert!((t.log_f(1, 4) - expected).abs() < 1e-12);
        assert!((t.post_mean(1, 4) - 2.0 / 3.0).abs() < 1e-15);
        assert!(build_mle_table(&SeriesData::gaussian(&[1.0]).unwrap()).is_err());
    }
}
