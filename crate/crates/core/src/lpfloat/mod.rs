//! Micro floating-point formats (FP4/FP6/FP8, e8m0 scales), block scaling
//! (MXFP4, NVFP4) and a quantized GEMM reference.

mod block;
mod format;
mod gemm;
mod stats;

pub use block::{BlockFormat, QuantizedBlock, MXFP4, NVFP4};
pub use format::{FloatFormat, Specials, ALL_FORMATS, E2M1, E2M3, E3M2, E4M3, E5M2, E8M0};
pub use gemm::{quantized_gemm, Accumulator, Matrix};
pub use stats::{quant_error_stats, QuantStats, Quantizer};

/// Sorted finite values of a format.
pub fn enumerate_values(format: &FloatFormat) -> Vec<f64> {
    format.enumerate_values()
}

pub fn encode(format: &FloatFormat, x: f64) -> u32 {
    format.encode(x)
}

pub fn decode(format: &FloatFormat, code: u32) -> crate::Result<f64> {
    format.decode(code)
}

pub fn quantize_block(bf: &BlockFormat, v: &[f64]) -> crate::Result<QuantizedBlock> {
    bf.quantize_block(v)
}

pub fn dequantize_block(bf: &BlockFormat, q: &QuantizedBlock) -> crate::Result<Vec<f64>> {
    bf.dequantize_block(q)
}
