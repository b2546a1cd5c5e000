// SPDX-License-Identifier: Apache-2.0

//! Toolkit for benchmarking approximate nearest neighbor search: dataset
//! formats, exact oracles, quantizers, baseline indexes, accuracy metrics, an
//! experiment harness with a REST protocol, and leaderboard scoring.

pub mod dataset;
pub mod distance;
pub mod error;
pub mod exec;
pub mod harness;
pub mod index;
pub mod metrics;
pub mod oracle;
pub mod quantization;
pub mod scoring;

pub use distance::Metric;
pub use error::{Error, Result};
pub use exec::Executor;
