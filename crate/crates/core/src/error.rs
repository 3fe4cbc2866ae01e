// Copyright 2026 The jumpgrad Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },

    /// The Taylor series did not reach the requested tolerance. Shrink `dt`.
    #[error("taylor-divergence: series did not converge within {max_terms} terms")]
    TaylorDivergence { max_terms: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("missing parameter: {0}")]
    MissingParameter(String),

    #[error("unknown op-kind `{0}`")]
    UnknownOp(String),

    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },

    #[error("singular-op: {0}")]
    SingularOp(String),

    #[error("non-scalar-cost: the cost node must hold a real scalar")]
    NonScalarCost,

    #[error("state-annihilated: zero-norm state at step {step}")]
    StateAnnihilated { step: usize },

    #[error("cptp-violation: {0}")]
    CptpViolation(String),

    #[error("gradient-blowup: non-finite gradient component")]
    GradientBlowup,

    #[error("sde-step-too-coarse: norm drift bound {drift:.3e} at step {step}")]
    SdeStepTooCoarse { step: usize, drift: f64 },

    #[error("degenerate-filter: ensemble mean signals are identical")]
    DegenerateFilter,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("closed-system routine called on a system with decay channels")]
    ChannelsPresent,

    #[error("mismatched horizons: {0}")]
    HorizonMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
