// Copyright 2026 The jumpgrad Authors
// SPDX-License-Identifier: Apache-2.0

//! Trajectory-based optimal control for open quantum systems.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod autodiff;
pub mod costs;
pub mod error;
pub mod linalg;
pub mod model;
pub mod optimizer;
pub mod oracles;
pub mod readout;
pub mod trajectory;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, StateBatch, C64};
pub use model::{ControlPulse, OpenSystem};
pub use optimizer::ConvergenceLog;
pub use readout::ClassifierResult;
pub use trajectory::{JumpRecord, TrajectoryResult};
