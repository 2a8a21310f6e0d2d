use serde::Serialize;

use crate::error::{Error, Result};
use crate::machine::{GpuSpec, LatencyTable, LlmCell};
use crate::precision::Precision;
use crate::prediction::{Bottleneck, Prediction};
use crate::tensor_core::missing_precision;

/// Batch size and sequence length of the precision-sweep calibration.
pub const LLM_CALIBRATED_BATCH: u32 = 32;
pub const LLM_CALIBRATED_SEQ: u32 = 2048;

pub fn llm_cell<'a>(spec: &'a GpuSpec, model: &str, precision: Precision) -> Result<&'a LlmCell> {
    spec.llm
        .iter()
        .find(|((m, p), _)| m.eq_ignore_ascii_case(model) && *p == precision)
        .map(|(_, c)| c)
        .ok_or_else(|| {
            if spec.llm.keys().any(|(m, _)| m.eq_ignore_ascii_case(model)) {
                missing_precision(spec, precision)
            } else {
                Error::missing(format!("{model} on {}", spec.name), "model not calibrated")
            }
        })
}

/// Inference throughput for a calibrated (model, precision) cell.
pub fn llm_throughput(
    spec: &GpuSpec,
    model: &str,
    precision: Precision,
    batch: u32,
    seq_len: u32,
    baseline: Option<&GpuSpec>,
) -> Result<Prediction> {
    if batch == 0 || seq_len == 0 {
        return Err(Error::Precondition(
            "batch and sequence length must be >= 1".into(),
        ));
    }
    if (batch, seq_len) != (LLM_CALIBRATED_BATCH, LLM_CALIBRATED_SEQ) {
        return Err(Error::missing(
            format!("{model} at batch {batch}, seq {seq_len}"),
            format!("throughput is calibrated at batch {LLM_CALIBRATED_BATCH}, seq {LLM_CALIBRATED_SEQ} only"),
        ));
    }
    let cell = llm_cell(spec, model, precision)?;
    let mut p = Prediction::new(
        "llm_throughput",
        cell.tok_per_s,
        "tok/s",
        Bottleneck::Calibration,
    )
    .with_metric("bw_util_pct", cell.bw_util_pct, "%");
    if let Some(v) = cell.perplexity {
        p = p.with_metric("perplexity", v, "");
    }
    if let Some(v) = cell.delta_ppl_pct {
        p = p.with_metric("delta_ppl_pct", v, "%");
    }
    if let Some(b) = baseline {
        match llm_cell(b, model, precision) {
            Ok(bc) => {
                p = p.with_baseline(bc.tok_per_s).with_metric(
                    "baseline_bw_util_pct",
                    bc.bw_util_pct,
                    "%",
                )
            }
            Err(e) => p = p.with_note(format!("baseline {}: {e}", b.name)),
        }
    }
    if let Some((lo, hi)) = spec.annotations.l2_hit_rate_pct {
        p = p.with_note(format!("L2 hit rate {lo}-{hi}% across precisions"));
    }
    Ok(p)
}

/// Throughput ratio between two precisions of the same model.
pub fn precision_speedup(
    spec: &GpuSpec,
    model: &str,
    to: Precision,
    from: Precision,
) -> Result<f64> {
    Ok(llm_cell(spec, model, to)?.tok_per_s / llm_cell(spec, model, from)?.tok_per_s)
}

/// Affine latency model `a + c * batch` in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatencyFit {
    pub intercept_ms: f64,
    pub slope_ms: f64,
    /// Largest |fit - measured| / measured over the calibrated points.
    pub max_rel_residual: f64,
}

impl LatencyFit {
    pub fn latency_ms(&self, batch: f64) -> f64 {
        self.intercept_ms + self.slope_ms * batch
    }
}

fn latency_table(spec: &GpuSpec) -> Result<&LatencyTable> {
    spec.llm_latency
        .as_ref()
        .ok_or_else(|| Error::missing(format!("{} batch latency", spec.name), "not calibrated"))
}

/// Fits `a + c * batch` by minimizing the sum of squared relative residuals.
pub fn fit_latency(spec: &GpuSpec) -> Result<LatencyFit> {
    let t = latency_table(spec)?;
    if t.batches.len() < 2 {
        return Err(Error::IllConditioned(
            "latency fit needs two batch sizes".into(),
        ));
    }
    // weighted least squares with weights 1 / y^2
    let (mut sw, mut sx, mut sxx, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&b, &y) in t.batches.iter().zip(&t.latency_ms) {
        let x = b as f64;
        let w = 1.0 / (y * y);
        sw += w;
        sx += w * x;
        sxx += w * x * x;
        sy += w * y;
        sxy += w * x * y;
    }
    let det = sw * sxx - sx * sx;
    if det.abs() < 1e-300 {
        return Err(Error::IllConditioned(
            "latency batches are not distinct".into(),
        ));
    }
    let slope = (sw * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / sw;
    let max_rel_residual = t
        .batches
        .iter()
        .zip(&t.latency_ms)
        .map(|(&b, &y)| ((intercept + slope * b as f64) - y).abs() / y)
        .fold(0.0, f64::max);
    Ok(LatencyFit {
        intercept_ms: intercept,
        slope_ms: slope,
        max_rel_residual,
    })
}

/// Per-request latency at `batch` from the affine fit. Calibrated batch sizes
/// carry the measured latency as a secondary metric.
pub fn llm_latency(
    spec: &GpuSpec,
    batch: u32,
    seq_len: u32,
    baseline: Option<&GpuSpec>,
) -> Result<Prediction> {
    if batch == 0 {
        return Err(Error::Precondition("batch must be >= 1".into()));
    }
    let t = latency_table(spec)?;
    if seq_len != t.seq_len {
        return Err(Error::missing(
            format!("latency at seq {seq_len}"),
            format!("calibrated at seq {} only", t.seq_len),
        ));
    }
    let fit = fit_latency(spec)?;
    let ms = fit.latency_ms(batch as f64);
    let measured = t
        .batches
        .iter()
        .position(|&b| b == batch)
        .map(|i| t.latency_ms[i]);
    let mut p = Prediction::new("llm_latency", ms, "ms", Bottleneck::Calibration)
        .extrapolated(measured.is_none())
        .with_metric(
            "tok_per_s",
            batch as f64 * seq_len as f64 / (ms / 1e3),
            "tok/s",
        )
        .with_metric("fit_intercept", fit.intercept_ms, "ms")
        .with_metric("fit_slope", fit.slope_ms, "ms");
    if let Some(m) = measured {
        p = p.with_metric("calibrated", m, "ms");
    }
    if let Some(b) = baseline {
        if let Ok(bf) = fit_latency(b) {
            p = p.with_baseline(bf.latency_ms(batch as f64));
        }
    }
    let stages = if batch <= 4 {
        spec.annotations.pipeline_stages_low_batch
    } else {
        spec.annotations.pipeline_stages_high_batch
    };
    if let Some((lo, hi)) = stages {
        p = p.with_note(format!("pipeline stages {lo}-{hi}"));
    }
    Ok(p.with_note(format!("{} {}", t.model, t.precision)))
}
