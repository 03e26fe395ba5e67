// SPDX-License-Identifier: MIT OR Apache-2.0

//! Exact posterior quantities given the number of segments `K`.
//!
//! Every probability is a ratio of sums over segmentation subsets that
//! factor into a prefix part, at most one fixed segment and a suffix part:
//!
//! ```text
//! B_{K,k}(t)       = F_{1,t}(k-1) F_{t,n+1}(K-k+1) / A_K
//! S_{K,k}(t1, t2)  = F_{1,t1}(k-1) f([t1,t2)) F_{t2,n+1}(K-k) / A_K
//! ```
//!
//! The prefix and suffix sums are the forward rows and backward columns of
//! the log-sum power slices. Unnormalized weights `f(r) = a_r P(Y^r)` are
//! used throughout; prior constants cancel in every ratio.

use serde::{Deserialize, Serialize};

use crate::emission::SegmentMarginalTable;
use crate::engine::{PowerSlices, Semiring};
use crate::error::{Result, SegError};
use crate::logspace::prob_from_log;

fn check_slices(slices: &PowerSlices, k: usize) -> Result<()> {
    if slices.semiring() != Semiring::LogSum {
        return Err(SegError::domain("posterior quantities need log-sum slices"));
    }
    if k == 0 || k > slices.kmax() {
        return Err(SegError::domain(format!("dimension {k} outside 1..={}", slices.kmax())));
    }
    Ok(())
}

/// Change-point position distributions for a fixed `K`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChangepointProbs {
    k: usize,
    n: usize,
    /// `bkk[k-1][t-1] = B_{K,k}(t)`; rank 1 is the point mass at `t = 1`.
    bkk: Vec<Vec<f64>>,
    /// `bk[t-1] = B_K(t)`, summed over the change-points `k = 2..=K`.
    bk: Vec<f64>,
}

impl ChangepointProbs {
    pub fn dimension(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `B_{K,k}(t)` for `t = 1..=n+1` (slice index `t - 1`).
    pub fn rank(&self, k: usize) -> &[f64] {
        &self.bkk[k - 1]
    }

    pub fn at(&self, k: usize, t: usize) -> f64 {
        if k == 0 || k > self.k || t == 0 || t > self.n + 1 {
            return 0.0;
        }
        self.bkk[k - 1][t - 1]
    }

    /// `B_K(t)` for `t = 1..=n+1` (slice index `t - 1`); sums to `K - 1`.
    pub fn any(&self) -> &[f64] {
        &self.bk
    }
}

/// `B_{K,k}(t)` for every rank `k` and position `t`, and their sum `B_K(t)`.
pub fn changepoint_distributions(slices: &PowerSlices, k: usize) -> Result<ChangepointProbs> {
    check_slices(slices, k)?;
    let n = slices.n();
    let log_total = slices.total(k);
    let mut bkk = Vec::with_capacity(k);
    let mut first = vec![0.0; n + 1];
    first[0] = 1.0;
    bkk.push(first);
    let mut bk = vec![0.0; n + 1];
    for rank in 2..=k {
        let fwd = slices.fwd_row(rank - 1);
        let bwd = slices.bwd_row(k - rank + 1);
        let mut row = vec![0.0; n + 1];
        for b in 1..n {
            let p = prob_from_log(fwd[b] + bwd[b] - log_total);
            row[b] = p;
            bk[b] += p;
        }
        bkk.push(row);
    }
    Ok(ChangepointProbs { k, n, bkk, bk })
}

/// Posterior segment probabilities `S_K(t1, t2)` for a fixed `K`.
#[derive(Clone, Debug)]
pub struct SegmentProbs {
    k: usize,
    n: usize,
    probs: Vec<f64>,
}

impl SegmentProbs {
    pub fn dimension(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `S_K([t1, t2))`, 1-based half-open; 0 outside the upper triangle.
    pub fn get(&self, t1: usize, t2: usize) -> f64 {
        if t1 == 0 || t1 >= t2 || t2 > self.n + 1 {
            return 0.0;
        }
        self.probs[(t1 - 1) * (self.n + 1) + t2 - 1]
    }

    #[inline]
    fn row(&self, lo: usize) -> &[f64] {
        let w = self.n + 1;
        &self.probs[lo * w..(lo + 1) * w]
    }

    /// Every segment with its probability, in row-major `(t1, t2)` order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n;
        (0..n).flat_map(move |lo| (lo + 1..=n).map(move |hi| (lo + 1, hi + 1, self.row(lo)[hi])))
    }
}

/// `S_K(t1, t2) = sum_k S_{K,k}(t1, t2)` for every segment, `O(K n^2)`.
pub fn segment_distributions(slices: &PowerSlices, table: &SegmentMarginalTable, k: usize) -> Result<SegmentProbs> {
    check_slices(slices, k)?;
    let n = slices.n();
    if table.n() != n {
        return Err(SegError::invalid("table and slices cover different series"));
    }
    let w = n + 1;
    let log_total = slices.total(k);
    let mut probs = vec![0.0; w * w];
    let mut ranks: Vec<(f64, &[f64])> = Vec::with_capacity(k);
    for lo in 0..n {
        ranks.clear();
        for rank in 1..=k {
            let head = slices.fwd_row(rank - 1)[lo];
            if head != f64::NEG_INFINITY {
                ranks.push((head - log_total, slices.bwd_row(k - rank)));
            }
        }
        if ranks.is_empty() {
            continue;
        }
        let row = table.row(lo);
        let out = &mut probs[lo * w..(lo + 1) * w];
        for hi in lo + 1..=n {
            let lf = row[hi];
            let mut s = 0.0;
            for &(head, tail) in &ranks {
                let t = tail[hi];
                if t != f64::NEG_INFINITY {
                    s += prob_from_log(head + lf + t);
                }
            }
            out[hi] = s;
        }
    }
    Ok(SegmentProbs { k, n, probs })
}

/// `S_{K,k}(t1, t2)`: probability that `[t1, t2)` is exactly the `k`-th segment.
pub fn segment_rank_probability(
    slices: &PowerSlices,
    table: &SegmentMarginalTable,
    k_total: usize,
    rank: usize,
    t1: usize,
    t2: usize,
) -> Result<f64> {
    check_slices(slices, k_total)?;
    let n = slices.n();
    if rank == 0 || rank > k_total || t1 == 0 || t1 >= t2 || t2 > n + 1 {
        return Ok(0.0);
    }
    let log = slices.forward(rank - 1, t1) + table.log_f(t1, t2) + slices.backward(k_total - rank, t2)
        - slices.total(k_total);
    Ok(prob_from_log(log))
}

/// Entropy of `P(m | Y, K)`: `-sum_r S_K(r) log f(r) + log A_K`, clamped at 0.
pub fn posterior_entropy(
    slices: &PowerSlices,
    seg_prob: &SegmentProbs,
    table: &SegmentMarginalTable,
    k: usize,
) -> Result<f64> {
    check_slices(slices, k)?;
    if seg_prob.dimension() != k || seg_prob.n() != table.n() {
        return Err(SegError::invalid(
            "segment probabilities do not match the requested dimension",
        ));
    }
    let n = table.n();
    let mut cross = 0.0;
    for lo in 0..n {
        let probs = seg_prob.row(lo);
        let logs = table.row(lo);
        for hi in lo + 1..=n {
            let p = probs[hi];
            if p > 0.0 {
                cross += p * logs[hi];
            }
        }
    }
    Ok((slices.total(k) - cross).max(0.0))
}

/// `s_K(t) = sum_{r containing t} S_K(r) mu_r`, indexed by `t - 1`.
pub fn posterior_mean_signal(seg_prob: &SegmentProbs, table: &SegmentMarginalTable) -> Result<Vec<f64>> {
    let n = table.n();
    if seg_prob.n() != n {
        return Err(SegError::invalid(
            "segment probabilities and table cover different series",
        ));
    }
    // Each segment [lo, hi) adds a constant over its span: accumulate in a
    // difference array and integrate once.
    let mut diff = vec![0.0; n + 1];
    for lo in 0..n {
        let probs = seg_prob.row(lo);
        let means = table.mean_row(lo);
        let mut opened = 0.0;
        for hi in lo + 1..=n {
            let p = probs[hi];
            if p > 0.0 {
                let w = p * means[hi];
                opened += w;
                diff[hi] -= w;
            }
        }
        diff[lo] += opened;
    }
    let mut out = Vec::with_capacity(n);
    let mut run = 0.0;
    for d in &diff[..n] {
        run += d;
        out.push(run);
    }
    Ok(out)
}

/// Probability that each position lies in some segment: all ones up to round-off.
pub fn coverage(seg_prob: &SegmentProbs) -> Vec<f64> {
    let n = seg_prob.n();
    let mut diff = vec![0.0; n + 1];
    for lo in 0..n {
        let probs = seg_prob.row(lo);
        let mut opened = 0.0;
        for (hi, &p) in probs.iter().enumerate().skip(lo + 1) {
            opened += p;
            diff[hi] -= p;
        }
        diff[lo] += opened;
    }
    let mut run = 0.0;
    diff[..n]
        .iter()
        .map(|d| {
            run += d;
            run
        })
        .collect()
}

/// Closed interval of positions for one change-point and the posterior mass it carries.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CredibleInterval {
    pub start: usize,
    pub end: usize,
    pub mass: f64,
}

impl CredibleInterval {
    pub fn width(&self) -> usize {
        self.end - self.start + 1
    }
}

const MASS_SLACK: f64 = 1e-12;

/// Shortest contiguous `[t1, t2]` whose mass reaches `level`; the leftmost
/// among equally short candidates. `row[t - 1]` holds the mass at position `t`.
pub fn credibility_interval(row: &[f64], level: f64) -> Result<CredibleInterval> {
    if !(level > 0.0 && level < 1.0) {
        return Err(SegError::domain(format!("credibility level {level} outside (0, 1)")));
    }
    let total: f64 = row.iter().sum();
    if (total - 1.0).abs() > 1e-8 {
        return Err(SegError::domain(format!("distribution sums to {total}, not 1")));
    }
    let mut prefix = Vec::with_capacity(row.len() + 1);
    prefix.push(0.0);
    let mut s = 0.0;
    for p in row {
        s += p;
        prefix.push(s);
    }
    let target = level - MASS_SLACK;
    // Two pointers: the minimal right end is non-decreasing in the left end.
    let mut best: Option<(usize, usize)> = None;
    let mut right = 0;
    for left in 0..row.len() {
        if right < left {
            right = left;
        }
        while right < row.len() && prefix[right + 1] - prefix[left] < target {
            right += 1;
        }
        if right == row.len() {
            break;
        }
        if best.is_none_or(|(l, r)| right - left < r - l) {
            best = Some((left, right));
        }
    }
    let (l, r) = best.unwrap_or((0, row.len() - 1));
    Ok(CredibleInterval {
        start: l + 1,
        end: r + 1,
        mass: row[l..=r].iter().sum(),
    })
}

/// Credible interval for one change-point `tau_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChangepointInterval {
    pub rank: usize,
    #[serde(flatten)]
    pub interval: CredibleInterval,
}

/// Every exact posterior quantity for a given `K`.
#[derive(Clone, Debug)]
pub struct PosteriorSummary {
    pub k: usize,
    pub log_pyk: f64,
    pub changepoints: ChangepointProbs,
    pub seg_prob: SegmentProbs,
    pub entropy: f64,
    pub mean_signal: Vec<f64>,
    pub cred_intervals: Vec<ChangepointInterval>,
}

impl PosteriorSummary {
    pub fn compute(
        table: &SegmentMarginalTable,
        slices: &PowerSlices,
        k: usize,
        level: f64,
        log_pyk: f64,
    ) -> Result<Self> {
        let changepoints = changepoint_distributions(slices, k)?;
        let seg_prob = segment_distributions(slices, table, k)?;
        let entropy = posterior_entropy(slices, &seg_prob, table, k)?;
        let mean_signal = posterior_mean_signal(&seg_prob, table)?;
        let cred_intervals = (2..=k)
            .map(|rank| {
                credibility_interval(changepoints.rank(rank), level)
                    .map(|interval| ChangepointInterval { rank, interval })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            k,
            log_pyk,
            changepoints,
            seg_prob,
            entropy,
            mean_signal,
            cred_intervals,
        })
    }
}
