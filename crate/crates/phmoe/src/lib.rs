//! Phase-type mixture-of-experts (PH-MoE) regression for positive loss
//! severities.
//!
//! The model: conditionally on covariates `x`, a response follows an
//! inhomogeneous phase-type law whose initial state probabilities are the
//! softmax of linear predictors in `x`. This crate provides
//!
//! - dense matrix kernels (exponentials, convolution integrals, fractional
//!   powers) in [`matcore`],
//! - inhomogeneity transform families in [`transforms`],
//! - distribution evaluation and tail analysis in [`phcore`],
//! - gating and design construction in [`moe`],
//! - the EM/R-step fitting engine with censoring support in [`emfit`],
//! - partial-likelihood inference in [`inference`],
//! - goodness-of-fit tooling in [`gof`], and
//! - exact simulation in [`simulate`].
//!
//! With the default `parallel` feature the per-observation loops (E-step,
//! likelihood, simulation) run on rayon; aggregation is a fixed-order
//! reduction, so results are bit-identical regardless of worker count.
//! Building with `--no-default-features` gives a dependency-free sequential
//! fallback with the same API.

pub mod emfit;
pub mod error;
pub mod gof;
pub mod inference;
pub mod matcore;
pub mod moe;
pub mod optim;
mod par;
pub mod phcore;
mod quad;
pub mod simulate;
pub mod transforms;

pub use error::{Error, Result};
pub use matcore::{SpectralSummary, SubIntensityMatrix};
pub use moe::{
    Column, ColumnKind, CovariateSchema, CovariateValue, DesignRow, GatingCoefficients,
    PhMoeModel, Standardization,
};
pub use phcore::{IphDistribution, PhaseDistribution, TailReport};
pub use transforms::{Transform, TransformFamily};
