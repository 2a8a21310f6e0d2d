use half::f16;
use serde::Serialize;

use super::stats::Quantizer;
use crate::error::{Error, Result};
use crate::precision::Precision;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Accumulator used for the running dot-product sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Accumulator {
    Fp16,
    Fp32,
    /// Exact summation, standing in for integer accumulation.
    Exact,
}

impl Accumulator {
    pub fn from_precision(p: Precision) -> Result<Self> {
        match p {
            Precision::Fp16 => Ok(Accumulator::Fp16),
            Precision::Fp32 => Ok(Accumulator::Fp32),
            Precision::Int32 => Ok(Accumulator::Exact),
            other => Err(Error::Unsupported(format!("accumulator precision {other}"))),
        }
    }

    pub fn round(self, x: f64) -> f64 {
        match self {
            Accumulator::Fp16 => f16::from_f64(x).to_f64(),
            Accumulator::Fp32 => x as f32 as f64,
            Accumulator::Exact => x,
        }
    }
}

/// `A (m x k) * B (k x n)` with both operands quantized along k and every
/// multiply-add rounded to the accumulator precision.
pub fn quantized_gemm(
    a: &Matrix,
    b: &Matrix,
    q: impl Into<Quantizer>,
    accum: Accumulator,
) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(Error::ShapeMismatch(format!(
            "A is {}x{}, B is {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let q = q.into();
    let k = a.cols;
    let aq: Vec<Vec<f64>> = (0..a.rows).map(|r| q.round_trip(a.row(r)).0).collect();
    let bq: Vec<Vec<f64>> = (0..b.cols).map(|c| q.round_trip(&b.column(c)).0).collect();
    let mut out = Matrix::zeros(a.rows, b.cols);
    for (i, ar) in aq.iter().enumerate() {
        for (j, bc) in bq.iter().enumerate() {
            let mut acc = 0.0;
            for t in 0..k {
                acc = accum.round(acc + ar[t] * bc[t]);
            }
            out.data[i * b.cols + j] = acc;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lpfloat::{E2M1, MXFP4, NVFP4};

    #[test]
    fn identity_returns_b() {
        let vals = E2M1.enumerate_values();
        let b = Matrix::new(4, 3, (0..12).map(|i| vals[(i * 5) % vals.len()]).collect()).unwrap();
        for q in [Quantizer::from(E2M1), MXFP4.into()] {
            for acc in [Accumulator::Fp16, Accumulator::Fp32, Accumulator::Exact] {
                let c = quantized_gemm(&Matrix::identity(4), &b, q, acc).unwrap();
                assert_eq!(c, b, "{q:?} {acc:?}");
            }
        }
    }

    #[test]
    fn nvfp4_scale_cannot_hold_unit_rows() {
        // amax 1 needs scale 1/6, which e4m3 rounds to 0.171875
        let c = quantized_gemm(
            &Matrix::identity(2),
            &Matrix::identity(2),
            NVFP4,
            Accumulator::Exact,
        )
        .unwrap();
        assert_eq!(c.get(0, 0), 6.0 * 0.171875 * 6.0 * 0.171875);
    }

    #[test]
    fn shape_mismatch() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(2, 3);
        assert!(matches!(
            quantized_gemm(&a, &b, MXFP4, Accumulator::Fp32),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(Matrix::new(2, 2, vec![1.0]).is_err());
    }

    #[test]
    fn accumulator_rounding() {
        assert_eq!(Accumulator::Fp16.round(2049.0), 2048.0);
        assert_eq!(Accumulator::Fp32.round(16_777_217.0), 16_777_216.0);
        assert_eq!(Accumulator::Exact.round(16_777_217.0), 16_777_217.0);
        assert_eq!(
            Accumulator::from_precision(Precision::Int32).unwrap(),
            Accumulator::Exact
        );
        assert!(Accumulator::from_precision(Precision::Fp8).is_err());
    }
}
