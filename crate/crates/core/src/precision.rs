use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::Error;

/// Operand or accumulator precision tag as used by the Tensor Core tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Precision {
    Fp64,
    Fp32,
    Tf32,
    Bf16,
    Fp16,
    Fp8,
    Fp6,
    Fp4,
    Int32,
    Int8,
    Int4,
}

impl Precision {
    pub const ALL: [Precision; 11] = [
        Precision::Fp64,
        Precision::Fp32,
        Precision::Tf32,
        Precision::Bf16,
        Precision::Fp16,
        Precision::Fp8,
        Precision::Fp6,
        Precision::Fp4,
        Precision::Int32,
        Precision::Int8,
        Precision::Int4,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Precision::Fp64 => "fp64",
            Precision::Fp32 => "fp32",
            Precision::Tf32 => "tf32",
            Precision::Bf16 => "bf16",
            Precision::Fp16 => "fp16",
            Precision::Fp8 => "fp8",
            Precision::Fp6 => "fp6",
            Precision::Fp4 => "fp4",
            Precision::Int32 => "int32",
            Precision::Int8 => "int8",
            Precision::Int4 => "int4",
        }
    }

    pub fn is_integer(self) -> bool {
        matches!(self, Precision::Int32 | Precision::Int8 | Precision::Int4)
    }

    /// Throughput unit: TOPS for integer inputs, TFLOPS otherwise.
    pub fn throughput_unit(self) -> &'static str {
        if self.is_integer() {
            "TOPS"
        } else {
            "TFLOPS"
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        Precision::ALL
            .into_iter()
            .find(|p| p.as_str() == lower)
            .ok_or_else(|| Error::Unsupported(format!("unknown precision `{s}`")))
    }
}

impl Serialize for Precision {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}
