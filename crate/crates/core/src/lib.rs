// SPDX-License-Identifier: MIT OR Apache-2.0

//! Exact Bayesian inference over the full space of segmentations of a 1-D series.
//!
//! For factorable models, sums and maxima over all `C(n-1, K-1)` segmentations
//! into `K` segments are entries of powers of an upper-triangular matrix of
//! per-segment weights. This crate evaluates them in `O(K n^2)` and derives
//! change-point and segment posteriors, credible intervals, posterior
//! entropy, the posterior mean signal and exact BIC/ICL criteria.
//!
//! ```
//! use exactseg::{Analysis, ModelHyper, PriorSpec, SeriesData};
//!
//! let data = SeriesData::poisson(&[0.0, 1.0, 0.0, 9.0, 11.0, 10.0]).unwrap();
//! let hyper = ModelHyper::poisson(1.0, 1.0).unwrap();
//! let analysis = Analysis::new(data, hyper, PriorSpec::uniform_given_k(4).unwrap()).unwrap();
//! let summary = analysis.summary(2, 0.95).unwrap();
//! assert!(summary.changepoints.at(2, 4) > 0.9);
//! ```

#![forbid(unsafe_code)]

pub mod emission;
pub mod engine;
pub mod error;
pub mod logspace;
pub mod oracle;
pub mod posterior;
pub mod selection;
pub mod simlab;
pub mod types;

pub use emission::{
    build_marginal_table, gaussian_log_marginal, poisson_log_marginal, posterior_segment_mean, ModelKind,
    SegmentMarginalTable, SeriesData,
};
pub use engine::{best_segmentation, power_slices, PowerSlices, Semiring};
pub use error::{Result, SegError};
pub use posterior::{
    changepoint_distributions, credibility_interval, posterior_entropy, posterior_mean_signal, segment_distributions,
    ChangepointProbs, CredibleInterval, PosteriorSummary, SegmentProbs,
};
pub use selection::{
    log_p_y_k, mle_best_segmentation, select_dimension_bic, select_dimension_icl, select_segmentation_one_step,
    Analysis, DimensionScores, PriorNormalizer, SelectionReport,
};
pub use types::{log_prior_weight, log_segmentation_count, ModelHyper, PriorKind, PriorSpec, Segment, Segmentation};
