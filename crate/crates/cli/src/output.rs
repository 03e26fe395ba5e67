// SPDX-License-Identifier: MIT OR Apache-2.0

//! Report and track writers. Floats go out as `{:.16e}` (17 significant
//! digits), which re-parses to the identical `f64`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use exactseg::simlab::ExperimentResult;
use exactseg::{CredibleInterval, ModelHyper, PosteriorSummary, SelectionReport};
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;
/// Rows of the segment table below this probability are not written.
pub const SEG_PROB_THRESHOLD: f64 = 1e-12;

pub struct Tsv {
    path: PathBuf,
    out: BufWriter<File>,
}

impl Tsv {
    pub fn create(dir: &Path, name: &str, header: &[&str]) -> Result<Self> {
        let path = dir.join(name);
        let file = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "{}", header.join("\t"))?;
        Ok(Self { path, out })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<()> {
        writeln!(self.out, "{}", fields.join("\t"))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<PathBuf> {
        self.out
            .flush()
            .with_context(|| format!("cannot write {}", self.path.display()))?;
        Ok(self.path)
    }
}

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

#[derive(Serialize)]
struct DimensionEntry {
    k: usize,
    log_pyk: f64,
    entropy: f64,
    bic_k: f64,
    icl_k: f64,
    bic_m_given_k: f64,
    bic_m: f64,
    best_changepoints: Vec<usize>,
}

#[derive(Serialize)]
struct IntervalEntry {
    rank: usize,
    start: usize,
    end: usize,
    mass: f64,
}

#[derive(Serialize)]
struct Files {
    changepoints: Vec<String>,
    any_changepoint: String,
    mean_signal: String,
    segments: String,
    intervals: String,
}

#[derive(Serialize)]
struct AnalysisReport<'a> {
    schema_version: u32,
    n: usize,
    model: &'a str,
    hyper: ModelHyper,
    prior: &'a str,
    kmax: usize,
    level: f64,
    selection_criterion: &'static str,
    selected_k: usize,
    k_bic: usize,
    k_icl: usize,
    k_bic_m: usize,
    best_changepoints: Vec<usize>,
    log_prior_constant: Option<f64>,
    seg_prob_threshold: f64,
    dimensions: Vec<DimensionEntry>,
    credibility_intervals: Vec<IntervalEntry>,
    files: Files,
}

pub struct AnalysisMeta<'a> {
    pub n: usize,
    pub model: &'a str,
    pub hyper: ModelHyper,
    pub prior: &'a str,
    pub level: f64,
}

/// Writes every analysis artifact into `dir` and returns the report path.
/// `summaries[k - 1]` is the summary for dimension `k`.
pub fn write_analysis(
    dir: &Path,
    meta: &AnalysisMeta<'_>,
    report: &SelectionReport,
    summaries: &[PosteriorSummary],
    selected: usize,
) -> Result<PathBuf> {
    let n = meta.n;
    let mut per_k = Vec::with_capacity(summaries.len());
    let mut any = Tsv::create(dir, "changepoint_any.tsv", &["k", "t", "value"])?;
    let mut mean = Tsv::create(dir, "mean_signal.tsv", &["k", "t", "value"])?;
    for s in summaries {
        let k = s.k;
        let mut tsv = Tsv::create(dir, &format!("changepoints_K{k:03}.tsv"), &["k", "t", "value"])?;
        for rank in 1..=k {
            for (t, &p) in s.changepoints.rank(rank)[..n].iter().enumerate() {
                tsv.row(&[rank.to_string(), (t + 1).to_string(), num(p)])?;
            }
        }
        per_k.push(file_name(&tsv.finish()?));
        for (t, &p) in s.changepoints.any()[..n].iter().enumerate() {
            any.row(&[k.to_string(), (t + 1).to_string(), num(p)])?;
        }
        for (t, &m) in s.mean_signal.iter().enumerate() {
            mean.row(&[k.to_string(), (t + 1).to_string(), num(m)])?;
        }
    }
    let any = any.finish()?;
    let mean = mean.finish()?;

    let chosen = &summaries[selected - 1];
    let mut seg = Tsv::create(dir, &format!("segments_K{selected:03}.tsv"), &["k", "t1", "t2", "prob"])?;
    for (t1, t2, p) in chosen.seg_prob.iter() {
        if p >= SEG_PROB_THRESHOLD {
            seg.row(&[selected.to_string(), t1.to_string(), t2.to_string(), num(p)])?;
        }
    }
    let seg = seg.finish()?;
    let mut ci = Tsv::create(
        dir,
        &format!("intervals_K{selected:03}.tsv"),
        &["k", "start", "end", "mass"],
    )?;
    for c in &chosen.cred_intervals {
        let CredibleInterval { start, end, mass } = c.interval;
        ci.row(&[c.rank.to_string(), start.to_string(), end.to_string(), num(mass)])?;
    }
    let ci = ci.finish()?;

    let doc = AnalysisReport {
        schema_version: SCHEMA_VERSION,
        n,
        model: meta.model,
        hyper: meta.hyper,
        prior: meta.prior,
        kmax: report.kmax,
        level: meta.level,
        selection_criterion: "icl",
        selected_k: selected,
        k_bic: report.k_bic,
        k_icl: report.k_icl,
        k_bic_m: report.k_bic_m,
        best_changepoints: report.best_segmentation.changepoints().to_vec(),
        log_prior_constant: report.log_prior_constant,
        seg_prob_threshold: SEG_PROB_THRESHOLD,
        dimensions: report
            .dimensions
            .iter()
            .map(|d| DimensionEntry {
                k: d.k,
                log_pyk: d.log_pyk,
                entropy: d.entropy,
                bic_k: d.bic_k,
                icl_k: d.icl_k,
                bic_m_given_k: d.bic_m_given_k,
                bic_m: d.bic_m,
                best_changepoints: d.best.changepoints().to_vec(),
            })
            .collect(),
        credibility_intervals: chosen
            .cred_intervals
            .iter()
            .map(|c| IntervalEntry {
                rank: c.rank,
                start: c.interval.start,
                end: c.interval.end,
                mass: c.interval.mass,
            })
            .collect(),
        files: Files {
            changepoints: per_k,
            any_changepoint: file_name(&any),
            mean_signal: file_name(&mean),
            segments: file_name(&seg),
            intervals: file_name(&ci),
        },
    };
    write_json(&dir.join("report.json"), &doc)
}

fn write_json(path: &Path, doc: &impl Serialize) -> Result<PathBuf> {
    let mut text = serde_json::to_string_pretty(doc)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path.to_path_buf())
}

pub fn write_experiment(dir: &Path, res: &ExperimentResult) -> Result<(PathBuf, PathBuf)> {
    let mut rec = Tsv::create(
        dir,
        "recovery.tsv",
        &[
            "seed",
            "lambda",
            "alpha_beta",
            "criterion",
            "recovered",
            "replicates",
            "fraction",
        ],
    )?;
    for r in &res.recovery {
        rec.row(&[
            res.seed.to_string(),
            r.lambda.to_string(),
            r.hyper.to_string(),
            r.criterion.name().to_string(),
            r.recovered.to_string(),
            r.replicates.to_string(),
            num(r.fraction),
        ])?;
    }
    let mut kl = Tsv::create(
        dir,
        "kl.tsv",
        &[
            "seed",
            "lambda",
            "k",
            "mle_mean",
            "mle_std",
            "posterior_mean",
            "posterior_std",
            "replicates",
        ],
    )?;
    for r in &res.kl {
        kl.row(&[
            res.seed.to_string(),
            r.lambda.to_string(),
            r.k.to_string(),
            num(r.mle_mean),
            num(r.mle_std),
            num(r.posterior_mean),
            num(r.posterior_std),
            r.replicates.to_string(),
        ])?;
    }
    Ok((rec.finish()?, kl.finish()?))
}
