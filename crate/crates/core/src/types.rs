// SPDX-License-Identifier: MIT OR Apache-2.0

//! Segments, segmentations, priors and hyperparameters.
//!
//! Every position reported through this module is 1-based: a series of
//! length `n` has positions `1..=n`, and a segment is the half-open range
//! `[start, end)` with `1 <= start < end <= n + 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SegError};
use crate::logspace::ln_gamma;

/// Half-open run of positions `[start, end)`, 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Segment {
    start: usize,
    end: usize,
}

impl Segment {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start == 0 || start >= end {
            return Err(SegError::domain(format!(
                "segment [{start}, {end}) must satisfy 1 <= start < end"
            )));
        }
        Ok(Self { start, end })
    }

    /// Builds a segment from 0-based boundary indices `lo < hi`.
    pub(crate) fn from_bounds(lo: usize, hi: usize) -> Self {
        debug_assert!(lo < hi);
        Self {
            start: lo + 1,
            end: hi + 1,
        }
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn end(&self) -> usize {
        self.end
    }

    /// Number of positions covered.
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, t: usize) -> bool {
        self.start <= t && t < self.end
    }

    pub(crate) fn lo(&self) -> usize {
        self.start - 1
    }

    pub(crate) fn hi(&self) -> usize {
        self.end - 1
    }

    pub(crate) fn check_within(&self, n: usize) -> Result<()> {
        if self.end > n + 1 {
            return Err(SegError::domain(format!(
                "segment [{}, {}) exceeds series length {n}",
                self.start, self.end
            )));
        }
        Ok(())
    }
}

/// A partition of `1..=n` into contiguous segments, stored as its
/// breakpoints `1 = tau_1 < tau_2 < ... < tau_{K+1} = n + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Segmentation {
    breakpoints: Vec<usize>,
}

impl Segmentation {
    pub fn from_breakpoints(breakpoints: Vec<usize>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(SegError::domain("a segmentation needs at least two breakpoints"));
        }
        if breakpoints[0] != 1 {
            return Err(SegError::domain("the first breakpoint must be 1"));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SegError::domain("breakpoints must be strictly increasing"));
        }
        Ok(Self { breakpoints })
    }

    /// Builds a segmentation from 0-based boundaries `0 = b_0 < ... < b_K = n`.
    pub(crate) fn from_bounds(bounds: &[usize]) -> Self {
        Self {
            breakpoints: bounds.iter().map(|b| b + 1).collect(),
        }
    }

    /// The single-segment segmentation of a series of length `n`.
    pub fn whole(n: usize) -> Self {
        Self {
            breakpoints: vec![1, n + 1],
        }
    }

    pub fn breakpoints(&self) -> &[usize] {
        &self.breakpoints
    }

    /// Interior change-points `tau_2, ..., tau_K`.
    pub fn changepoints(&self) -> &[usize] {
        &self.breakpoints[1..self.breakpoints.len() - 1]
    }

    /// Number of segments `K`.
    pub fn dimension(&self) -> usize {
        self.breakpoints.len() - 1
    }

    /// Length of the segmented series.
    pub fn n(&self) -> usize {
        self.breakpoints[self.breakpoints.len() - 1] - 1
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        self.breakpoints.windows(2).map(|w| Segment { start: w[0], end: w[1] })
    }

    /// The segment containing position `t`.
    pub fn segment_at(&self, t: usize) -> Option<Segment> {
        self.segments().find(|s| s.contains(t))
    }
}

/// Which factorable segmentation prior is in use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorKind {
    /// `P(m) = P(K) / C(n-1, K-1)`: uniform among segmentations of the same dimension.
    UniformGivenK,
    /// `P(m) = C * prod_r 1/n_r`, normalized over every segmentation with at most `kmax` segments.
    HomogeneousLengths,
}

/// Segmentation prior together with the largest dimension considered.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    kind: PriorKind,
    dimension_prior: Vec<f64>,
    kmax: usize,
}

impl PriorSpec {
    /// Uniform given `K`, with `P(K)` uniform over `1..=kmax`.
    pub fn uniform_given_k(kmax: usize) -> Result<Self> {
        if kmax == 0 {
            return Err(SegError::domain("kmax must be at least 1"));
        }
        Self::with_dimension_prior(vec![1.0 / kmax as f64; kmax])
    }

    /// Uniform given `K` with an explicit `P(K)` for `K = 1..=p.len()`.
    pub fn with_dimension_prior(dimension_prior: Vec<f64>) -> Result<Self> {
        if dimension_prior.is_empty() {
            return Err(SegError::domain("dimension prior must be non-empty"));
        }
        if dimension_prior.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(SegError::domain("dimension prior entries must be finite and >= 0"));
        }
        let total: f64 = dimension_prior.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(SegError::domain(format!("dimension prior must sum to 1 (got {total})")));
        }
        let kmax = dimension_prior.len();
        Ok(Self {
            kind: PriorKind::UniformGivenK,
            dimension_prior,
            kmax,
        })
    }

    /// Equal probability for every segmentation with at most `kmax`
    /// segments, whatever its dimension. This is the conditional-uniform
    /// prior with `P(K)` proportional to `C(n-1, K-1)`.
    pub fn flat_over_segmentations(n: usize, kmax: usize) -> Result<Self> {
        if kmax == 0 || kmax > n {
            return Err(SegError::domain(format!("kmax must lie in 1..={n}")));
        }
        let logs: Vec<f64> = (1..=kmax)
            .map(|k| log_segmentation_count(n, k))
            .collect::<Result<_>>()?;
        let norm = crate::logspace::log_sum_exp(logs.iter().copied());
        let mut probs: Vec<f64> = logs.iter().map(|l| (l - norm).exp()).collect();
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        Self::with_dimension_prior(probs)
    }

    pub fn homogeneous_lengths(kmax: usize) -> Result<Self> {
        if kmax == 0 {
            return Err(SegError::domain("kmax must be at least 1"));
        }
        Ok(Self {
            kind: PriorKind::HomogeneousLengths,
            dimension_prior: Vec::new(),
            kmax,
        })
    }

    pub fn kind(&self) -> PriorKind {
        self.kind
    }

    pub fn kmax(&self) -> usize {
        self.kmax
    }

    /// `P(K)` for the conditional-uniform prior; `None` for homogeneous lengths,
    /// where the dimension prior is implicit.
    pub fn dimension_prior(&self) -> Option<&[f64]> {
        match self.kind {
            PriorKind::UniformGivenK => Some(&self.dimension_prior),
            PriorKind::HomogeneousLengths => None,
        }
    }

    /// `log P(K)` for the conditional-uniform prior.
    pub(crate) fn log_dimension_prior(&self, k: usize) -> f64 {
        match self.dimension_prior.get(k.wrapping_sub(1)) {
            Some(p) => p.ln(),
            None => f64::NEG_INFINITY,
        }
    }

    pub(crate) fn check_against(&self, n: usize) -> Result<()> {
        if self.kmax > n {
            return Err(SegError::domain(format!(
                "kmax = {} exceeds series length {n}",
                self.kmax
            )));
        }
        Ok(())
    }
}

/// Conjugate hyperparameters, shared by every segment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelHyper {
    /// Segment rate `mu ~ Gamma(shape = alpha, rate = beta)`.
    Poisson { alpha: f64, beta: f64 },
    /// Segment precision `tau ~ Gamma(nu0/2, scale 2/s0)`, mean `mu | tau ~ N(mu0, 1/(n0 tau))`.
    Gaussian { mu0: f64, n0: f64, nu0: f64, s0: f64 },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(SegError::domain(format!("{name} must be finite and > 0 (got {v})")))
    }
}

impl ModelHyper {
    pub fn poisson(alpha: f64, beta: f64) -> Result<Self> {
        positive("alpha", alpha)?;
        positive("beta", beta)?;
        Ok(Self::Poisson { alpha, beta })
    }

    pub fn gaussian(mu0: f64, n0: f64, nu0: f64, s0: f64) -> Result<Self> {
        if !mu0.is_finite() {
            return Err(SegError::domain(format!("mu0 must be finite (got {mu0})")));
        }
        positive("n0", n0)?;
        positive("nu0", nu0)?;
        positive("s0", s0)?;
        Ok(Self::Gaussian { mu0, n0, nu0, s0 })
    }

    /// Data-scaled Gaussian defaults: `mu0` is the series mean, `n0 = 0.1`,
    /// `nu0 = 1`, and `s0` the series variance (1 when the series is constant).
    pub fn gaussian_default_for(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(SegError::invalid("empty series"));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n;
        let s0 = if var > 0.0 && var.is_finite() { var } else { 1.0 };
        Self::gaussian(mean, 0.1, 1.0, s0)
    }

    pub fn is_poisson(&self) -> bool {
        matches!(self, Self::Poisson { .. })
    }
}

/// `log a_r`: 0 under the conditional-uniform prior, `-log n_r` under homogeneous lengths.
pub fn log_prior_weight(seg: Segment, prior: &PriorSpec) -> f64 {
    log_weight_for_len(seg.len(), prior.kind())
}

#[inline]
pub(crate) fn log_weight_for_len(len: usize, kind: PriorKind) -> f64 {
    match kind {
        PriorKind::UniformGivenK => 0.0,
        PriorKind::HomogeneousLengths => -(len as f64).ln(),
    }
}

/// `log C(n-1, k-1)`, the log of the number of segmentations of `n` points into `k` segments.
pub fn log_segmentation_count(n: usize, k: usize) -> Result<f64> {
    if k == 0 || k > n {
        return Err(SegError::domain(format!("dimension {k} outside 1..={n}")));
    }
    Ok(ln_binomial(n - 1, k - 1))
}

pub(crate) fn ln_binomial(a: usize, b: usize) -> f64 {
    if b == 0 || b == a {
        return 0.0;
    }
    ln_gamma(a as f64 + 1.0) - ln_gamma(b as f64 + 1.0) - ln_gamma((a - b) as f64 + 1.0)
}
