use serde::Serialize;

use crate::error::{Error, Result};
use crate::machine::GpuSpec;
use crate::memsys::stream_triad;
use crate::precision::Precision;
use crate::prediction::{Bottleneck, Prediction};

/// Default row-pointer compression ratio for run-length encoded CSR.
pub const RLE_ROW_POINTER_RATIO: f64 = 8.2;

/// FP64 efficiency at matrix dimension `n` from the calibrated DGEMM points.
///
/// Linear in log2(n) between calibrated points, flat above the largest, and
/// below the smallest a saturating curve `f0 * n (n0 + h) / (n0 (n + h))`
/// with `h = n0 / 8`, which equals `f0` at `n0` and falls to zero at `n = 0`.
pub fn dgemm_efficiency(spec: &GpuSpec, n: u64) -> Result<(f64, bool)> {
    let pts = &spec.dgemm;
    let first = pts
        .first()
        .ok_or_else(|| Error::missing(format!("{} dgemm", spec.name), "no calibrated sizes"))?;
    let last = pts.last().unwrap_or(first);
    let x = n as f64;
    if let Some(p) = pts.iter().find(|p| p.dim == n) {
        return Ok((p.fraction(), false));
    }
    if n < first.dim {
        let n0 = first.dim as f64;
        let h = n0 / 8.0;
        return Ok((first.fraction() * x * (n0 + h) / (n0 * (x + h)), true));
    }
    if n > last.dim {
        return Ok((last.fraction(), true));
    }
    let hi = pts.iter().position(|p| p.dim > n).unwrap_or(pts.len() - 1);
    let (a, b) = (&pts[hi - 1], &pts[hi]);
    let t = (x.log2() - (a.dim as f64).log2()) / ((b.dim as f64).log2() - (a.dim as f64).log2());
    Ok((a.fraction() + t * (b.fraction() - a.fraction()), true))
}

fn dgemm_tflops(spec: &GpuSpec, n: u64) -> Result<(f64, f64, f64, bool)> {
    let peak = spec
        .theoretical_peak(Precision::Fp64)
        .ok_or_else(|| Error::missing(format!("{} fp64 peak", spec.name), "no theoretical peak"))?;
    let (eff, extrapolated) = dgemm_efficiency(spec, n)?;
    Ok((peak * eff, eff, peak, extrapolated))
}

/// Sustained FP64 DGEMM throughput for an n x n x n problem.
pub fn dgemm_fp64(spec: &GpuSpec, n: u64, baseline: Option<&GpuSpec>) -> Result<Prediction> {
    if n == 0 {
        return Err(Error::Precondition("matrix dimension must be >= 1".into()));
    }
    let (tflops, eff, peak, extrapolated) = dgemm_tflops(spec, n)?;
    let mut p = Prediction::new("dgemm_fp64", tflops, "TFLOPS", Bottleneck::Compute)
        .extrapolated(extrapolated)
        .with_metric("pct_of_peak", eff * 100.0, "%")
        .with_metric("theoretical_peak", peak, "TFLOPS");
    if let Some(b) = baseline {
        if let Ok((t, ..)) = dgemm_tflops(b, n) {
            p = p.with_baseline(t);
        }
    }
    Ok(p)
}

/// STREAM Triad bandwidth for arrays of `array_bytes` each.
pub fn stream(spec: &GpuSpec, array_bytes: f64, baseline: Option<&GpuSpec>) -> Result<Prediction> {
    let r = stream_triad(spec, array_bytes)?;
    let mut p = Prediction::new(
        "stream_triad",
        r.bandwidth.tbps(),
        "TB/s",
        Bottleneck::MemoryBw,
    )
    .with_metric("pct_of_peak", r.efficiency * 100.0, "%")
    .with_metric("working_set", r.working_set_bytes, "B")
    .with_metric("time", r.time_s * 1e3, "ms");
    if let Some(b) = baseline {
        p = p.with_baseline(stream_triad(b, array_bytes)?.bandwidth.tbps());
    }
    Ok(p)
}

/// CSR matrix shape for traffic estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SparseProfile {
    pub rows: u64,
    pub nnz: u64,
    pub index_compression_ratio: f64,
}

impl SparseProfile {
    pub fn new(rows: u64, nnz: u64) -> Self {
        SparseProfile {
            rows,
            nnz,
            index_compression_ratio: RLE_ROW_POINTER_RATIO,
        }
    }

    pub fn sparsity_pct(&self) -> f64 {
        100.0 * (1.0 - self.nnz as f64 / (self.rows as f64 * self.rows as f64))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpmvTraffic {
    pub value_bytes: f64,
    pub index_bytes: f64,
    pub compressed_bytes: f64,
    pub index_fraction: f64,
    pub reduction: f64,
}

/// Fraction of traffic removed when the index share of traffic is compressed
/// by `ratio`.
pub fn traffic_reduction(index_fraction: f64, ratio: f64) -> f64 {
    index_fraction * (1.0 - 1.0 / ratio)
}

/// FP64 values, 32-bit column indices and row pointers; indices are
/// compressed by the profile's ratio.
pub fn spmv_traffic(p: &SparseProfile) -> Result<SpmvTraffic> {
    if p.rows == 0 || p.nnz == 0 || !(p.index_compression_ratio >= 1.0) {
        return Err(Error::Precondition(
            "sparse profile needs rows, nnz > 0 and ratio >= 1".into(),
        ));
    }
    let value_bytes = 8.0 * p.nnz as f64;
    let index_bytes = 4.0 * p.nnz as f64 + 4.0 * (p.rows + 1) as f64;
    let total = value_bytes + index_bytes;
    let index_fraction = index_bytes / total;
    Ok(SpmvTraffic {
        value_bytes,
        index_bytes,
        compressed_bytes: value_bytes + index_bytes / p.index_compression_ratio,
        index_fraction,
        reduction: traffic_reduction(index_fraction, p.index_compression_ratio),
    })
}

/// SpMV throughput for a named matrix. Calibrated matrices are looked up;
/// any other matrix needs a profile and is scored at the mean calibrated rate.
pub fn spmv(
    spec: &GpuSpec,
    matrix: &str,
    profile: Option<&SparseProfile>,
    compressed: bool,
    baseline: Option<&GpuSpec>,
) -> Result<Prediction> {
    let (gflops, time_ms, speedup, extrapolated) = spmv_rate(spec, matrix, profile, compressed)?;
    let bottleneck = if compressed {
        Bottleneck::InputBw
    } else {
        Bottleneck::MemoryBw
    };
    let mut p = Prediction::new("spmv", gflops, "GFLOPS", bottleneck).extrapolated(extrapolated);
    if let Some(t) = time_ms {
        p = p.with_metric("time", t, "ms");
    }
    if compressed {
        p = p.with_metric("speedup_vs_uncompressed", speedup, "x");
    }
    if let Some(prof) = profile {
        let t = spmv_traffic(prof)?;
        p = p
            .with_metric("traffic_uncompressed", t.value_bytes + t.index_bytes, "B")
            .with_metric("traffic_compressed", t.compressed_bytes, "B")
            .with_metric("traffic_reduction", t.reduction, "fraction");
    }
    if let Some(b) = baseline {
        // the baseline runs uncompressed when it has no decompression engine
        let bc = compressed && b.de.is_some();
        if let Ok((g, ..)) = spmv_rate(b, matrix, profile, bc) {
            p = p.with_baseline(g);
        }
    }
    Ok(p)
}

fn spmv_rate(
    spec: &GpuSpec,
    matrix: &str,
    profile: Option<&SparseProfile>,
    compressed: bool,
) -> Result<(f64, Option<f64>, f64, bool)> {
    if compressed && spec.de.is_none() {
        return Err(Error::missing(
            format!("{} compressed spmv", spec.name),
            "no decompression engine",
        ));
    }
    let cell = spec
        .spmv
        .iter()
        .find(|(k, _)| k.eq_ignore_ascii_case(matrix))
        .map(|(_, c)| c);
    if let Some(c) = cell {
        if let (Some(g), Some(s)) = (c.compressed_gflops, c.speedup) {
            return Ok(if compressed {
                (g, c.compressed_time_ms, s, false)
            } else {
                (g / s, c.compressed_time_ms.map(|t| t * s), s, false)
            });
        }
        if let (Some(g), false) = (c.gflops, compressed) {
            return Ok((g, None, 1.0, false));
        }
    }
    if profile.is_none() {
        return Err(Error::missing(
            format!("spmv {matrix} on {}", spec.name),
            "matrix not calibrated and no profile given",
        ));
    }
    let rates: Vec<(f64, f64)> = spec
        .spmv
        .values()
        .filter_map(|c| match (c.compressed_gflops, c.speedup, c.gflops) {
            (Some(g), Some(s), _) => Some((g / s, s)),
            (_, _, Some(g)) => Some((g, 1.0)),
            _ => None,
        })
        .collect();
    if rates.is_empty() {
        return Err(Error::missing(
            format!("{} spmv", spec.name),
            "no calibrated matrices",
        ));
    }
    let n = rates.len() as f64;
    let base = rates.iter().map(|r| r.0).sum::<f64>() / n;
    let speedup = rates.iter().map(|r| r.1).sum::<f64>() / n;
    Ok(if compressed {
        (base * speedup, None, speedup, true)
    } else {
        (base, None, speedup, true)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::builtin_spec;

    fn specs() -> (GpuSpec, GpuSpec) {
        (builtin_spec("B200").unwrap(), builtin_spec("H200").unwrap())
    }

    #[test]
    fn dgemm_examples() {
        let (b, h) = specs();
        let p = dgemm_fp64(&b, 32768, Some(&h)).unwrap();
        assert!((p.value - 36.30).abs() < 0.005, "{}", p.value);
        assert!((p.secondary("pct_of_peak").unwrap() - 80.7).abs() < 1e-9);
        assert!((p.ratio.unwrap() - 1.92).abs() < 0.005);
        assert!(!p.extrapolated);
        let p = dgemm_fp64(&h, 8192, None).unwrap();
        assert!((p.value - 18.2).abs() < 0.05);
        assert!(dgemm_fp64(&b, 0, None).is_err());
    }

    #[test]
    fn dgemm_curve_shape() {
        let (b, _) = specs();
        let e = |n| dgemm_efficiency(&b, n).unwrap().0;
        assert!((e(8192) - 0.788).abs() < 1e-12);
        assert!(e(1024) < e(4096) && e(4096) < e(8192));
        assert!(e(1) > 0.0 && e(1) < 0.01);
        assert!(e(12000) > e(8192) && e(12000) < e(16384));
        assert_eq!(e(1 << 20), 0.807);
        assert!(dgemm_efficiency(&b, 12000).unwrap().1);
    }

    #[test]
    fn stream_ratio() {
        let (b, h) = specs();
        let p = stream(&b, 128e9, Some(&h)).unwrap();
        assert!((p.value - 7.48).abs() < 1e-9);
        assert!((p.ratio.unwrap() - 1.71).abs() < 0.005);
    }

    #[test]
    fn spmv_lookups() {
        let (b, h) = specs();
        let p = spmv(&b, "ldoor", None, true, Some(&h)).unwrap();
        assert_eq!(p.value, 5.04);
        assert_eq!(p.secondary("time"), Some(71.93));
        assert!((p.ratio.unwrap() - 1.575).abs() < 1e-9);
        let u = spmv(&b, "ldoor", None, false, None).unwrap();
        assert!((u.value - 5.04 / 3.16).abs() < 1e-12);
        assert!((u.value - 1.59).abs() < 0.005);
        assert!(matches!(
            spmv(&b, "nlpkkt240", None, true, None),
            Err(Error::MissingCalibration { .. })
        ));
        assert!(matches!(
            spmv(&h, "ldoor", None, true, None),
            Err(Error::MissingCalibration { .. })
        ));
        assert_eq!(spmv(&h, "ldoor", None, false, None).unwrap().value, 3.2);
    }

    #[test]
    fn spmv_profile_extrapolates() {
        let (b, _) = specs();
        let prof = SparseProfile::new(1_000_000, 3_000_000);
        let p = spmv(&b, "synthetic", Some(&prof), true, None).unwrap();
        assert!(p.extrapolated);
        assert!((p.value - (5.09 + 4.96 + 5.04) / 3.0).abs() < 1e-9);
        let r = p.secondary("traffic_reduction").unwrap();
        assert!(r > 0.0 && r < 1.0);
    }

    #[test]
    fn traffic_reduction_example() {
        let r = traffic_reduction(0.43, RLE_ROW_POINTER_RATIO);
        assert!((r - 0.43 * (1.0 - 1.0 / 8.2)).abs() < 1e-15);
        assert!((r - 0.38).abs() < 0.005);
    }
}
