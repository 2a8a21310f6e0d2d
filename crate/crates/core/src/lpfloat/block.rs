use serde::Serialize;

use super::format::{pow2, FloatFormat, E2M1, E4M3, E8M0};
use crate::error::{Error, Result};

/// Elements sharing one scale factor per `block_size` values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BlockFormat {
    pub name: &'static str,
    pub elem: FloatFormat,
    pub block_size: usize,
    pub scale_format: FloatFormat,
}

pub const MXFP4: BlockFormat = BlockFormat {
    name: "mxfp4",
    elem: E2M1,
    block_size: 32,
    scale_format: E8M0,
};

pub const NVFP4: BlockFormat = BlockFormat {
    name: "nvfp4",
    elem: E2M1,
    block_size: 16,
    scale_format: E4M3,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QuantizedBlock {
    pub scale_code: u32,
    pub codes: Vec<u32>,
}

impl BlockFormat {
    pub fn new(
        name: &'static str,
        elem: FloatFormat,
        block_size: usize,
        scale_format: FloatFormat,
    ) -> Result<Self> {
        if block_size == 0 {
            return Err(Error::Precondition("block_size must be > 0".into()));
        }
        Ok(BlockFormat {
            name,
            elem,
            block_size,
            scale_format,
        })
    }

    pub fn by_name(name: &str) -> Result<BlockFormat> {
        match name.to_ascii_lowercase().as_str() {
            "mxfp4" => Ok(MXFP4),
            "nvfp4" => Ok(NVFP4),
            _ => Err(Error::Unsupported(format!("unknown block format `{name}`"))),
        }
    }

    /// Scale for a block whose largest magnitude is `amax`, as (code, value).
    pub fn choose_scale(&self, amax: f64) -> (u32, f64) {
        let sf = &self.scale_format;
        let emax = self.elem.max_finite();
        if amax == 0.0 {
            let code = sf.encode(1.0);
            return (code, sf.decode(code).unwrap());
        }
        if sf.man_bits == 0 && sf.sign_bits == 0 {
            // smallest power of two s with amax / s <= emax
            let mut k = (amax / emax).log2().ceil() as i32;
            while amax / pow2(k) > emax {
                k += 1;
            }
            while amax / pow2(k - 1) <= emax {
                k -= 1;
            }
            let code = sf.encode(pow2(k));
            return (code, sf.decode(code).unwrap());
        }
        let mut code = sf.encode(amax / emax);
        let mut s = sf.decode(code).unwrap();
        if s <= 0.0 {
            code = sf.encode(sf.min_positive());
            s = sf.decode(code).unwrap();
        }
        let max_code = sf.encode(sf.max_finite());
        // rounding the scale down can push amax / s past the element range
        while amax / s > emax && code < max_code {
            code += 1;
            s = sf.decode(code).unwrap();
        }
        (code, s)
    }

    /// Quantizes exactly one block.
    pub fn quantize_block(&self, v: &[f64]) -> Result<QuantizedBlock> {
        if v.len() != self.block_size {
            return Err(Error::ShapeMismatch(format!(
                "{} expects blocks of {}, got {}",
                self.name,
                self.block_size,
                v.len()
            )));
        }
        let amax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let (scale_code, s) = self.choose_scale(amax);
        let codes = if amax == 0.0 {
            vec![0; v.len()]
        } else {
            v.iter().map(|x| self.elem.encode(x / s)).collect()
        };
        Ok(QuantizedBlock { scale_code, codes })
    }

    pub fn dequantize_block(&self, q: &QuantizedBlock) -> Result<Vec<f64>> {
        if q.codes.len() != self.block_size {
            return Err(Error::ShapeMismatch(format!(
                "{} expects {} codes, got {}",
                self.name,
                self.block_size,
                q.codes.len()
            )));
        }
        let s = self.scale_format.decode(q.scale_code)?;
        q.codes
            .iter()
            .map(|&c| Ok(self.elem.decode(c)? * s))
            .collect()
    }

    /// Quantizes a vector of any length; the last block is zero-padded.
    /// Returns the blocks and the number of padding elements.
    pub fn quantize_vector(&self, v: &[f64]) -> (Vec<QuantizedBlock>, usize) {
        let pad = (self.block_size - v.len() % self.block_size) % self.block_size;
        let mut blocks = Vec::with_capacity(v.len().div_ceil(self.block_size));
        let mut buf = vec![0.0; self.block_size];
        for chunk in v.chunks(self.block_size) {
            buf.fill(0.0);
            buf[..chunk.len()].copy_from_slice(chunk);
            blocks.push(
                self.quantize_block(&buf)
                    .expect("buffer has block_size elements"),
            );
        }
        (blocks, pad)
    }

    /// Inverse of [`quantize_vector`](Self::quantize_vector), truncated to `len`.
    pub fn dequantize_vector(&self, blocks: &[QuantizedBlock], len: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(blocks.len() * self.block_size);
        for b in blocks {
            out.extend(self.dequantize_block(b)?);
        }
        if out.len() < len {
            return Err(Error::ShapeMismatch(format!(
                "{} blocks hold {} values, need {len}",
                blocks.len(),
                out.len()
            )));
        }
        out.truncate(len);
        Ok(out)
    }

    /// Round trip of a vector through the format.
    pub fn fake_quantize(&self, v: &[f64]) -> Vec<f64> {
        let (blocks, _) = self.quantize_vector(v);
        self.dequantize_vector(&blocks, v.len())
            .expect("blocks produced by quantize_vector")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_match_block_contract() {
        assert_eq!(MXFP4.block_size, 32);
        assert_eq!(MXFP4.scale_format, E8M0);
        assert_eq!(NVFP4.block_size, 16);
        assert_eq!(NVFP4.scale_format, E4M3);
        assert_eq!(MXFP4.elem, E2M1);
        assert!(BlockFormat::new("x", E2M1, 0, E8M0).is_err());
    }

    #[test]
    fn zero_block() {
        let q = MXFP4.quantize_block(&[0.0; 32]).unwrap();
        assert_eq!(E8M0.decode(q.scale_code).unwrap(), 1.0);
        assert!(q.codes.iter().all(|&c| c == 0));
        assert_eq!(MXFP4.dequantize_block(&q).unwrap(), vec![0.0; 32]);
    }

    #[test]
    fn nvfp4_sixes_round_trip() {
        let v = [6.0; 16];
        let q = NVFP4.quantize_block(&v).unwrap();
        assert_eq!(E4M3.decode(q.scale_code).unwrap(), 1.0);
        assert!(q.codes.iter().all(|&c| E2M1.decode(c).unwrap() == 6.0));
        assert_eq!(NVFP4.dequantize_block(&q).unwrap(), v.to_vec());
    }

    #[test]
    fn mxfp4_power_of_two_scale() {
        let mut v = [0.0; 32];
        v[0] = 96.0;
        let q = MXFP4.quantize_block(&v).unwrap();
        assert_eq!(E8M0.decode(q.scale_code).unwrap(), 16.0);
        assert_eq!(E2M1.decode(q.codes[0]).unwrap(), 6.0);
        let back = MXFP4.dequantize_block(&q).unwrap();
        assert_eq!(back[0], 96.0);
        assert!(back[1..].iter().all(|&x| x == 0.0));
        // 97 needs the next power of two
        v[0] = 97.0;
        let q = MXFP4.quantize_block(&v).unwrap();
        assert_eq!(E8M0.decode(q.scale_code).unwrap(), 32.0);
    }

    #[test]
    fn nvfp4_scale_never_overflows_elements() {
        for amax in [0.1, 0.7, 1.0, 5.9, 6.1, 100.0, 1000.0, 2687.0] {
            let (_, s) = NVFP4.choose_scale(amax);
            assert!(amax / s <= 6.0, "amax {amax} scale {s}");
        }
    }

    #[test]
    fn wrong_lengths() {
        assert!(matches!(
            MXFP4.quantize_block(&[1.0; 16]),
            Err(Error::ShapeMismatch(_))
        ));
        let q = QuantizedBlock {
            scale_code: 127,
            codes: vec![0; 3],
        };
        assert!(MXFP4.dequantize_block(&q).is_err());
    }

    #[test]
    fn vector_padding() {
        let v: Vec<f64> = (0..40).map(|i| i as f64 * 0.25).collect();
        let (blocks, pad) = MXFP4.quantize_vector(&v);
        assert_eq!(blocks.len(), 2);
        assert_eq!(pad, 24);
        assert_eq!(MXFP4.dequantize_vector(&blocks, 40).unwrap().len(), 40);
        assert_eq!(MXFP4.quantize_vector(&[1.0; 64]).1, 0);
    }
}
