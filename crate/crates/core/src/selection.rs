// SPDX-License-Identifier: MIT OR Apache-2.0

//! Exact BIC and ICL criteria, dimension choice and best segmentations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::emission::{build_length_table, build_marginal_table, build_mle_table, SegmentMarginalTable, SeriesData};
use crate::engine::{power_slices, PowerSlices, Semiring};
use crate::error::{Result, SegError};
use crate::logspace::log_sum_exp;
use crate::posterior::{posterior_entropy, segment_distributions, PosteriorSummary};
use crate::types::{ln_binomial, ModelHyper, PriorKind, PriorSpec, Segmentation};

/// Per-dimension prior constants. For any `m` with `K(m) = k`:
///
/// ```text
/// log P(m)     = joint_offset(k) + sum_r log a_r
/// log P(m | k) = conditional_offset(k) + sum_r log a_r
/// ```
#[derive(Clone, Debug)]
pub struct PriorNormalizer {
    kind: PriorKind,
    joint: Vec<f64>,
    conditional: Vec<f64>,
    log_constant: Option<f64>,
}

impl PriorNormalizer {
    pub fn new(prior: &PriorSpec, n: usize) -> Result<Self> {
        prior.check_against(n)?;
        let kmax = prior.kmax();
        let mut joint = vec![f64::NEG_INFINITY; kmax + 1];
        let mut conditional = vec![f64::NEG_INFINITY; kmax + 1];
        let mut log_constant = None;
        match prior.kind() {
            PriorKind::UniformGivenK => {
                for k in 1..=kmax {
                    let count = ln_binomial(n - 1, k - 1);
                    joint[k] = prior.log_dimension_prior(k) - count;
                    conditional[k] = -count;
                }
            }
            PriorKind::HomogeneousLengths => {
                // Z_k = sum over M_k of prod_r 1/n_r, from a second engine pass.
                let lengths = power_slices(&build_length_table(n)?, kmax, Semiring::LogSum)?;
                let log_c = -log_sum_exp((1..=kmax).map(|k| lengths.total(k)));
                for k in 1..=kmax {
                    joint[k] = log_c;
                    conditional[k] = -lengths.total(k);
                }
                log_constant = Some(log_c);
            }
        }
        Ok(Self {
            kind: prior.kind(),
            joint,
            conditional,
            log_constant,
        })
    }

    pub fn kind(&self) -> PriorKind {
        self.kind
    }

    pub fn joint_offset(&self, k: usize) -> f64 {
        self.joint.get(k).copied().unwrap_or(f64::NEG_INFINITY)
    }

    pub fn conditional_offset(&self, k: usize) -> f64 {
        self.conditional.get(k).copied().unwrap_or(f64::NEG_INFINITY)
    }

    /// `log C` of the homogeneous-lengths prior; it depends on `kmax`.
    pub fn log_constant(&self) -> Option<f64> {
        self.log_constant
    }

    /// Implied `log P(K)`. Explicit for the conditional-uniform prior,
    /// `log C + log Z_K` for homogeneous lengths.
    pub fn log_dimension_prior(&self, k: usize) -> f64 {
        self.joint_offset(k) - self.conditional_offset(k)
    }
}

/// `log P(Y, K)` from log-sum slices built on the table matching the prior.
pub fn log_p_y_k(slices: &PowerSlices, norm: &PriorNormalizer, k: usize) -> Result<f64> {
    if slices.semiring() != Semiring::LogSum {
        return Err(SegError::domain("log P(Y, K) needs log-sum slices"));
    }
    if k == 0 || k > slices.kmax() {
        return Err(SegError::domain(format!("dimension {k} outside 1..={}", slices.kmax())));
    }
    Ok(norm.joint_offset(k) + slices.total(k))
}

/// Criteria for one dimension `K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionScores {
    pub k: usize,
    pub log_pyk: f64,
    pub entropy: f64,
    /// `-log P(Y, K)`.
    pub bic_k: f64,
    /// `BIC(K) + H(K)`.
    pub icl_k: f64,
    pub best: Segmentation,
    /// `-log P(Y, m | K)` at the best segmentation of dimension `K`.
    pub bic_m_given_k: f64,
    /// `-log P(Y, m)` at the best segmentation of dimension `K`.
    pub bic_m: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub prior: PriorKind,
    pub kmax: usize,
    /// `log C` for homogeneous lengths (normalized over every dimension up to `kmax`).
    pub log_prior_constant: Option<f64>,
    pub dimensions: Vec<DimensionScores>,
    pub k_bic: usize,
    pub k_icl: usize,
    /// Dimension of the one-step best segmentation.
    pub k_bic_m: usize,
    pub best_segmentation: Segmentation,
}

fn argmin_by(rows: &[DimensionScores], key: impl Fn(&DimensionScores) -> f64) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for r in rows {
        let v = key(r);
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((r.k, v));
        }
    }
    best.map(|(k, _)| k)
        .ok_or_else(|| SegError::invalid("no dimensions to select from"))
}

/// `argmin_K BIC(K)`, ties to the smallest `K`.
pub fn select_dimension_bic(rows: &[DimensionScores]) -> Result<usize> {
    argmin_by(rows, |r| r.bic_k)
}

/// `argmin_K ICL(K)`, ties to the smallest `K`.
pub fn select_dimension_icl(rows: &[DimensionScores]) -> Result<usize> {
    argmin_by(rows, |r| r.icl_k)
}

/// `argmin_m BIC(m)` over every segmentation with at most `kmax` segments.
pub fn select_segmentation_one_step(rows: &[DimensionScores]) -> Result<Segmentation> {
    let k = argmin_by(rows, |r| r.bic_m)?;
    Ok(rows
        .iter()
        .find(|r| r.k == k)
        .expect("selected row exists")
        .best
        .clone())
}

/// Everything needed to evaluate posterior quantities and criteria for one series.
#[derive(Clone, Debug)]
pub struct Analysis {
    data: SeriesData,
    hyper: ModelHyper,
    prior: PriorSpec,
    table: SegmentMarginalTable,
    sums: PowerSlices,
    maxes: PowerSlices,
    norm: PriorNormalizer,
}

impl Analysis {
    pub fn new(data: SeriesData, hyper: ModelHyper, prior: PriorSpec) -> Result<Self> {
        let norm = PriorNormalizer::new(&prior, data.len())?;
        let table = build_marginal_table(&data, &hyper, &prior)?;
        let sums = power_slices(&table, prior.kmax(), Semiring::LogSum)?;
        let maxes = power_slices(&table, prior.kmax(), Semiring::MaxTropical)?;
        Ok(Self {
            data,
            hyper,
            prior,
            table,
            sums,
            maxes,
            norm,
        })
    }

    pub fn data(&self) -> &SeriesData {
        &self.data
    }

    pub fn hyper(&self) -> &ModelHyper {
        &self.hyper
    }

    pub fn prior(&self) -> &PriorSpec {
        &self.prior
    }

    pub fn table(&self) -> &SegmentMarginalTable {
        &self.table
    }

    pub fn sums(&self) -> &PowerSlices {
        &self.sums
    }

    pub fn maxes(&self) -> &PowerSlices {
        &self.maxes
    }

    pub fn normalizer(&self) -> &PriorNormalizer {
        &self.norm
    }

    pub fn kmax(&self) -> usize {
        self.prior.kmax()
    }

    pub fn log_p_y_k(&self, k: usize) -> Result<f64> {
        log_p_y_k(&self.sums, &self.norm, k)
    }

    /// `log P(Y, m)` for an arbitrary segmentation of the series.
    pub fn log_p_y_m(&self, m: &Segmentation) -> Result<f64> {
        let k = m.dimension();
        if m.n() != self.data.len() || k > self.kmax() {
            return Err(SegError::domain("segmentation outside the considered set"));
        }
        Ok(self.norm.joint_offset(k) + m.segments().map(|r| self.table.log_f(r.start(), r.end())).sum::<f64>())
    }

    pub fn entropy(&self, k: usize) -> Result<f64> {
        let seg_prob = segment_distributions(&self.sums, &self.table, k)?;
        posterior_entropy(&self.sums, &seg_prob, &self.table, k)
    }

    pub fn summary(&self, k: usize, level: f64) -> Result<PosteriorSummary> {
        PosteriorSummary::compute(&self.table, &self.sums, k, level, self.log_p_y_k(k)?)
    }

    /// Best segmentation of dimension `k` with `BIC(m | k)` and `BIC(m)`.
    pub fn best_segmentation(&self, k: usize) -> Result<(Segmentation, f64, f64)> {
        let (m, score) = self.maxes.best_segmentation(k)?;
        Ok((
            m,
            -(self.norm.conditional_offset(k) + score),
            -(self.norm.joint_offset(k) + score),
        ))
    }

    pub fn scores(&self, k: usize) -> Result<DimensionScores> {
        let log_pyk = self.log_p_y_k(k)?;
        let entropy = self.entropy(k)?;
        let (best, bic_m_given_k, bic_m) = self.best_segmentation(k)?;
        Ok(DimensionScores {
            k,
            log_pyk,
            entropy,
            bic_k: -log_pyk,
            icl_k: -log_pyk + entropy,
            best,
            bic_m_given_k,
            bic_m,
        })
    }

    pub fn report(&self) -> Result<SelectionReport> {
        let dimensions: Vec<DimensionScores> = (1..=self.kmax())
            .into_par_iter()
            .map(|k| self.scores(k))
            .collect::<Result<_>>()?;
        let best_segmentation = select_segmentation_one_step(&dimensions)?;
        Ok(SelectionReport {
            prior: self.prior.kind(),
            kmax: self.kmax(),
            log_prior_constant: self.norm.log_constant(),
            k_bic: select_dimension_bic(&dimensions)?,
            k_icl: select_dimension_icl(&dimensions)?,
            k_bic_m: best_segmentation.dimension(),
            best_segmentation,
            dimensions,
        })
    }
}

/// Maximum-likelihood Poisson segmentation into `k` segments and the
/// per-position fitted rate.
pub fn mle_best_segmentation(data: &SeriesData, k: usize) -> Result<(Segmentation, Vec<f64>)> {
    if k == 0 || k > data.len() {
        return Err(SegError::domain(format!("dimension {k} outside 1..={}", data.len())));
    }
    let table = build_mle_table(data)?;
    let slices = power_slices(&table, k, Semiring::MaxTropical)?;
    mle_fit(&table, &slices, k)
}

/// Maximum-likelihood fits for every `k` in `1..=kmax`, sharing one engine pass.
pub fn mle_fits(data: &SeriesData, kmax: usize) -> Result<Vec<(Segmentation, Vec<f64>)>> {
    let table = build_mle_table(data)?;
    let slices = power_slices(&table, kmax, Semiring::MaxTropical)?;
    (1..=kmax).map(|k| mle_fit(&table, &slices, k)).collect()
}

fn mle_fit(table: &SegmentMarginalTable, slices: &PowerSlices, k: usize) -> Result<(Segmentation, Vec<f64>)> {
    let (m, _) = slices.best_segmentation(k)?;
    let mut fitted = Vec::with_capacity(table.n());
    for r in m.segments() {
        let mean = table.post_mean(r.start(), r.end());
        fitted.extend(std::iter::repeat_n(mean, r.len()));
    }
    Ok((m, fitted))
}
