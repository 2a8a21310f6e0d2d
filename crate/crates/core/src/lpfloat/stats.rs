use serde::Serialize;

use super::block::BlockFormat;
use super::format::FloatFormat;
use crate::error::{Error, Result};

/// Either a plain element format or a block-scaled one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum Quantizer {
    Scalar(FloatFormat),
    Block(BlockFormat),
}

impl Quantizer {
    pub fn by_name(name: &str) -> Result<Quantizer> {
        BlockFormat::by_name(name)
            .map(Quantizer::Block)
            .or_else(|_| FloatFormat::by_name(name).map(Quantizer::Scalar))
            .map_err(|_| Error::Unsupported(format!("unknown format `{name}`")))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Quantizer::Scalar(f) => f.name,
            Quantizer::Block(b) => b.name,
        }
    }

    pub fn elem(&self) -> FloatFormat {
        match self {
            Quantizer::Scalar(f) => *f,
            Quantizer::Block(b) => b.elem,
        }
    }

    /// Values after quantization, plus how many elements saturated.
    pub fn round_trip(&self, v: &[f64]) -> (Vec<f64>, usize) {
        match self {
            Quantizer::Scalar(f) => {
                let max = f.max_finite();
                let overflow = v.iter().filter(|x| x.abs() > max).count();
                (v.iter().map(|&x| f.quantize(x)).collect(), overflow)
            }
            Quantizer::Block(b) => {
                let emax = b.elem.max_finite();
                let mut overflow = 0;
                for chunk in v.chunks(b.block_size) {
                    let amax = chunk.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                    let (_, s) = b.choose_scale(amax);
                    overflow += chunk.iter().filter(|x| (*x / s).abs() > emax).count();
                }
                (b.fake_quantize(v), overflow)
            }
        }
    }
}

impl From<FloatFormat> for Quantizer {
    fn from(f: FloatFormat) -> Self {
        Quantizer::Scalar(f)
    }
}

impl From<BlockFormat> for Quantizer {
    fn from(b: BlockFormat) -> Self {
        Quantizer::Block(b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantStats {
    pub mse: f64,
    pub max_abs_err: f64,
    /// +inf when the round trip is exact.
    pub sqnr_db: f64,
    pub overflow_count: usize,
}

/// Error statistics of `v` against its quantized round trip.
pub fn quant_error_stats(q: impl Into<Quantizer>, v: &[f64]) -> Result<QuantStats> {
    if v.is_empty() {
        return Err(Error::Precondition("input vector is empty".into()));
    }
    let q = q.into();
    let (back, overflow_count) = q.round_trip(v);
    let mut signal = 0.0;
    let mut noise = 0.0;
    let mut max_abs_err = 0.0f64;
    for (x, y) in v.iter().zip(&back) {
        let e = x - y;
        signal += x * x;
        noise += e * e;
        max_abs_err = max_abs_err.max(e.abs());
    }
    let mse = noise / v.len() as f64;
    if signal == 0.0 {
        return Err(Error::DegenerateSignal { mse });
    }
    let sqnr_db = if noise == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (signal / noise).log10()
    };
    Ok(QuantStats {
        mse,
        max_abs_err,
        sqnr_db,
        overflow_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lpfloat::{E2M1, E4M3, MXFP4, NVFP4};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn representable_input_is_exact() {
        let v = E2M1.enumerate_values();
        let s = quant_error_stats(E2M1, &v).unwrap();
        assert_eq!(s.mse, 0.0);
        assert_eq!(s.max_abs_err, 0.0);
        assert_eq!(s.sqnr_db, f64::INFINITY);
    }

    #[test]
    fn zero_signal_is_degenerate() {
        assert_eq!(
            quant_error_stats(MXFP4, &[0.0; 8]),
            Err(Error::DegenerateSignal { mse: 0.0 })
        );
        assert!(quant_error_stats(MXFP4, &[]).is_err());
    }

    #[test]
    fn finer_formats_have_higher_sqnr() {
        let v = gaussian(4096, 7);
        let nv = quant_error_stats(NVFP4, &v).unwrap();
        let mx = quant_error_stats(MXFP4, &v).unwrap();
        assert!(nv.sqnr_db > mx.sqnr_db, "{nv:?} vs {mx:?}");
        let e4 = quant_error_stats(E4M3, &v).unwrap();
        let e2 = quant_error_stats(E2M1, &v).unwrap();
        assert!(e4.sqnr_db > e2.sqnr_db);
        assert!(e2.overflow_count == 0 || v.iter().any(|x| x.abs() > 6.0));
    }

    #[test]
    fn stats_match_direct_computation() {
        let v = gaussian(100, 3);
        let s = quant_error_stats(MXFP4, &v).unwrap();
        let back = MXFP4.fake_quantize(&v);
        let mse: f64 = v
            .iter()
            .zip(&back)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            / 100.0;
        assert!((s.mse - mse).abs() < 1e-15);
        assert_eq!(s.overflow_count, 0);
    }

    #[test]
    fn scalar_overflow_is_counted() {
        let s = quant_error_stats(E2M1, &[1.0, 7.0, -9.0]).unwrap();
        assert_eq!(s.overflow_count, 2);
    }
}
