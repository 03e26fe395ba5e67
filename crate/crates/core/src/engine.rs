// SPDX-License-Identifier: MIT OR Apache-2.0

//! Powers of the upper-triangular segment matrix under two semirings.
//!
//! Summing `prod_r f(r)` over all segmentations of `[i, j)` into `k`
//! segments is the `(i, j)` entry of `A^k` where `A_{ij} = f([i, j))`.
//! Only the first row and last column of each power are ever needed, so
//! they are propagated as vector-matrix products, `O(n^2)` per power.
//! Replacing (+, x) by (max, +) in the log domain yields the best
//! segmentation instead of the total.

use serde::{Deserialize, Serialize};

use crate::emission::SegmentMarginalTable;
use crate::error::{Result, SegError};
use crate::logspace::LogSumExp;
use crate::types::Segmentation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Semiring {
    /// (log-sum-exp, +): sums over segmentations.
    LogSum,
    /// (max, +): best segmentation.
    MaxTropical,
}

trait Accumulator: Copy {
    fn empty() -> Self;
    fn push(&mut self, x: f64, arg: usize);
    fn value(&self) -> f64;
    fn arg(&self) -> usize;
}

impl Accumulator for LogSumExp {
    fn empty() -> Self {
        LogSumExp::new()
    }
    #[inline]
    fn push(&mut self, x: f64, _arg: usize) {
        LogSumExp::push(self, x)
    }
    #[inline]
    fn value(&self) -> f64 {
        LogSumExp::value(self)
    }
    fn arg(&self) -> usize {
        usize::MAX
    }
}

#[derive(Clone, Copy)]
struct MaxPlus {
    best: f64,
    arg: usize,
}

impl Accumulator for MaxPlus {
    fn empty() -> Self {
        Self {
            best: f64::NEG_INFINITY,
            arg: usize::MAX,
        }
    }
    // Strict comparison: with arguments pushed in ascending order the
    // smallest maximizer wins.
    #[inline]
    fn push(&mut self, x: f64, arg: usize) {
        if x > self.best {
            self.best = x;
            self.arg = arg;
        }
    }
    #[inline]
    fn value(&self) -> f64 {
        self.best
    }
    fn arg(&self) -> usize {
        self.arg
    }
}

/// Maximizing intermediate boundaries for the max-tropical slices
/// (0-based boundary indices internally).
#[derive(Clone, Debug)]
pub struct ArgmaxTrace {
    /// `pred[k][j]`: start of the last segment of the best `k`-segmentation of `[0, j)`.
    pred: Vec<Vec<usize>>,
    /// `succ[k][i]`: end of the first segment of the best `k`-segmentation of `[i, n)`.
    succ: Vec<Vec<usize>>,
}

/// Forward rows `(A^k)_{1, .}` and backward columns `(A^k)_{., n+1}` for `k = 0..=kmax`,
/// in the log domain. Row `k = 0` is the semiring identity (0 at the
/// diagonal position, negative infinity elsewhere).
#[derive(Clone, Debug)]
pub struct PowerSlices {
    semiring: Semiring,
    n: usize,
    kmax: usize,
    forward: Vec<Vec<f64>>,
    backward: Vec<Vec<f64>>,
    trace: Option<ArgmaxTrace>,
}

impl PowerSlices {
    pub fn semiring(&self) -> Semiring {
        self.semiring
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kmax(&self) -> usize {
        self.kmax
    }

    /// `(A^k)_{1, j}` in the log domain, `j` a 1-based position in `1..=n+1`.
    pub fn forward(&self, k: usize, j: usize) -> f64 {
        self.forward[k][j - 1]
    }

    /// `(A^k)_{i, n+1}` in the log domain, `i` a 1-based position in `1..=n+1`.
    pub fn backward(&self, k: usize, i: usize) -> f64 {
        self.backward[k][i - 1]
    }

    /// Log of the total (or best) weight over all `k`-segmentations of the full series.
    pub fn total(&self, k: usize) -> f64 {
        self.forward[k][self.n]
    }

    #[inline]
    pub(crate) fn fwd_row(&self, k: usize) -> &[f64] {
        &self.forward[k]
    }

    #[inline]
    pub(crate) fn bwd_row(&self, k: usize) -> &[f64] {
        &self.backward[k]
    }

    pub fn trace(&self) -> Option<&ArgmaxTrace> {
        self.trace.as_ref()
    }

    /// Best `k`-segmentation of the full series, reconstructed front to back
    /// so that ties resolve to the lexicographically smallest breakpoints
    /// (ties as seen in floating point: mathematically equal scores reached
    /// by different summation orders may still differ in the last bit).
    /// Only available on max-tropical slices.
    pub fn best_segmentation(&self, k: usize) -> Result<(Segmentation, f64)> {
        let trace = self
            .trace
            .as_ref()
            .ok_or_else(|| SegError::domain("best segmentation needs max-tropical slices"))?;
        if k == 0 || k > self.kmax {
            return Err(SegError::domain(format!("dimension {k} outside 1..={}", self.kmax)));
        }
        let value = self.backward[k][0];
        if value == f64::NEG_INFINITY {
            return Err(SegError::domain(format!("no segmentation into {k} segments")));
        }
        let mut bounds = Vec::with_capacity(k + 1);
        let mut at = 0;
        bounds.push(at);
        for remaining in (1..=k).rev() {
            at = trace.succ[remaining][at];
            bounds.push(at);
        }
        debug_assert_eq!(at, self.n);
        Ok((Segmentation::from_bounds(&bounds), value))
    }

    /// Best segmentation of the prefix `[1, j)` into `k` segments, backtracked
    /// through the forward trace. `j` is a 1-based position.
    pub fn best_prefix_segmentation(&self, k: usize, j: usize) -> Result<(Segmentation, f64)> {
        let trace = self
            .trace
            .as_ref()
            .ok_or_else(|| SegError::domain("backtracking needs max-tropical slices"))?;
        if k == 0 || k > self.kmax || j == 0 || j > self.n + 1 {
            return Err(SegError::domain("prefix query out of range"));
        }
        let value = self.forward[k][j - 1];
        if value == f64::NEG_INFINITY {
            return Err(SegError::domain(format!(
                "no segmentation of [1, {j}) into {k} segments"
            )));
        }
        let mut bounds = vec![j - 1];
        let mut at = j - 1;
        for level in (1..=k).rev() {
            at = trace.pred[level][at];
            bounds.push(at);
        }
        bounds.reverse();
        Ok((Segmentation::from_bounds(&bounds), value))
    }
}

fn forward_pass<A: Accumulator>(table: &SegmentMarginalTable, kmax: usize) -> (Vec<Vec<f64>>, Vec<Vec<usize>>) {
    let n = table.n();
    let mut rows = Vec::with_capacity(kmax + 1);
    let mut args = Vec::with_capacity(kmax + 1);
    let mut first = vec![f64::NEG_INFINITY; n + 1];
    first[0] = 0.0;
    rows.push(first);
    args.push(vec![usize::MAX; n + 1]);
    let mut acc = vec![A::empty(); n + 1];
    for k in 1..=kmax {
        let prev = &rows[k - 1];
        acc.iter_mut().for_each(|a| *a = A::empty());
        // Scatter form keeps table access row-contiguous; each output still
        // accumulates its terms in ascending order of t.
        for (t, &p) in prev.iter().enumerate().take(n).skip(k - 1) {
            if p == f64::NEG_INFINITY {
                continue;
            }
            let row = table.row(t);
            for j in t + 1..=n {
                acc[j].push(p + row[j], t);
            }
        }
        rows.push(acc.iter().map(A::value).collect());
        args.push(acc.iter().map(A::arg).collect());
    }
    (rows, args)
}

fn backward_pass<A: Accumulator>(table: &SegmentMarginalTable, kmax: usize) -> (Vec<Vec<f64>>, Vec<Vec<usize>>) {
    let n = table.n();
    let mut rows = Vec::with_capacity(kmax + 1);
    let mut args = Vec::with_capacity(kmax + 1);
    let mut last = vec![f64::NEG_INFINITY; n + 1];
    last[n] = 0.0;
    rows.push(last);
    args.push(vec![usize::MAX; n + 1]);
    for k in 1..=kmax {
        let prev = &rows[k - 1];
        let mut out = vec![f64::NEG_INFINITY; n + 1];
        let mut arg = vec![usize::MAX; n + 1];
        for i in 0..=(n + 1).saturating_sub(k + 1) {
            let row = table.row(i);
            let mut a = A::empty();
            for t in i + 1..=n + 1 - k {
                let p = prev[t];
                if p != f64::NEG_INFINITY {
                    a.push(row[t] + p, t);
                }
            }
            out[i] = a.value();
            arg[i] = a.arg();
        }
        rows.push(out);
        args.push(arg);
    }
    (rows, args)
}

/// Computes forward rows and backward columns of `A^k` for `k = 0..=kmax`.
pub fn power_slices(table: &SegmentMarginalTable, kmax: usize, semiring: Semiring) -> Result<PowerSlices> {
    let n = table.n();
    if kmax > n {
        return Err(SegError::domain(format!("kmax = {kmax} exceeds series length {n}")));
    }
    let (forward, backward, trace) = match semiring {
        Semiring::LogSum => {
            let (f, _) = forward_pass::<LogSumExp>(table, kmax);
            let (b, _) = backward_pass::<LogSumExp>(table, kmax);
            (f, b, None)
        }
        Semiring::MaxTropical => {
            let (f, pred) = forward_pass::<MaxPlus>(table, kmax);
            let (b, succ) = backward_pass::<MaxPlus>(table, kmax);
            (f, b, Some(ArgmaxTrace { pred, succ }))
        }
    };
    Ok(PowerSlices {
        semiring,
        n,
        kmax,
        forward,
        backward,
        trace,
    })
}

/// `argmax_{m in M_k} sum_{r in m} log f(r)` and its value.
pub fn best_segmentation(table: &SegmentMarginalTable, k: usize) -> Result<(Segmentation, f64)> {
    if k == 0 || k > table.n() {
        return Err(SegError::domain(format!("dimension {k} outside 1..={}", table.n())));
    }
    power_slices(table, k, Semiring::MaxTropical)?.best_segmentation(k)
}
