//! Calibrated analytical performance model of NVIDIA B200 (Blackwell) and
//! H200 (Hopper) GPUs.

// NaN inputs must fail the `!(x > 0.0)` style guards.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod decomp;
mod error;
pub mod lpfloat;
pub mod machine;
pub mod memsys;
mod precision;
mod prediction;
pub mod report;
pub mod tensor_core;
pub mod units;
pub mod workloads;

pub use error::{Error, Result};
pub use machine::{builtin_spec, load_machine_file, CalibrationSet, GpuSpec};
pub use precision::Precision;
pub use prediction::{Bottleneck, Metric, Prediction};
