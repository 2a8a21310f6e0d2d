use serde::Serialize;

use crate::error::{Error, Result};
use crate::machine::{GpuSpec, TrainingCell};
use crate::prediction::{Bottleneck, Prediction};

pub fn training_cell<'a>(spec: &'a GpuSpec, model: &str, batch: u32) -> Result<&'a TrainingCell> {
    spec.training
        .iter()
        .find(|((m, b), _)| m.eq_ignore_ascii_case(model) && *b == batch)
        .map(|(_, c)| c)
        .ok_or_else(|| {
            Error::missing(
                format!("{model} batch {batch} training on {}", spec.name),
                "not calibrated",
            )
        })
}

/// Measured training throughput with time-to-accuracy and energy metrics.
pub fn training_throughput(
    spec: &GpuSpec,
    model: &str,
    batch: u32,
    baseline: Option<&GpuSpec>,
) -> Result<Prediction> {
    let c = training_cell(spec, model, batch)?;
    let mut p = Prediction::new(
        "training_throughput",
        c.throughput,
        &c.unit,
        Bottleneck::Calibration,
    )
    .with_metric("time_to_accuracy", c.time_to_accuracy_hrs, "h");
    if let Some(pw) = c.per_watt {
        p = p
            .with_metric("per_watt", pw, &format!("{}/W", c.unit))
            .with_metric("implied_power", c.throughput / pw, "W");
    }
    if let Some(b) = baseline {
        if let Ok(bc) = training_cell(b, model, batch) {
            p = p.with_baseline(bc.throughput).with_metric(
                "baseline_time_to_accuracy",
                bc.time_to_accuracy_hrs,
                "h",
            );
        }
    }
    Ok(p)
}

/// Throughput per watt.
pub fn energy_efficiency(throughput: f64, power_watts: f64) -> Result<f64> {
    if !(power_watts > 0.0) {
        return Err(Error::Precondition(format!(
            "power must be positive, got {power_watts}"
        )));
    }
    Ok(throughput / power_watts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecompositionKind {
    Inference,
    Training,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition {
    pub factors: Vec<(String, f64)>,
    pub product: f64,
    pub measured_range: (f64, f64),
    /// Whether the product lies within 5% of the measured range.
    pub consistent: bool,
}

const CONSISTENCY_TOLERANCE: f64 = 0.05;

/// Composes speedup factors multiplicatively and checks them against a
/// measured end-to-end range.
pub fn decompose(factors: &[(&str, f64)], measured_range: (f64, f64)) -> Decomposition {
    let product: f64 = factors.iter().map(|f| f.1).product();
    let (lo, hi) = measured_range;
    let gap = if product < lo {
        (lo - product) / lo
    } else if product > hi {
        (product - hi) / hi
    } else {
        0.0
    };
    Decomposition {
        factors: factors.iter().map(|&(n, v)| (n.to_string(), v)).collect(),
        product,
        measured_range,
        consistent: gap <= CONSISTENCY_TOLERANCE,
    }
}

/// The published B200/H200 speedup factors for each workload class.
pub fn speedup_decomposition(kind: DecompositionKind) -> Decomposition {
    match kind {
        DecompositionKind::Inference => decompose(
            &[
                ("sm_count", 1.09),
                ("tensor_core", 1.27),
                ("memory_bandwidth", 1.23),
            ],
            (1.57, 1.59),
        ),
        DecompositionKind::Training => decompose(
            &[("sm_count", 1.09), ("cta_pairing", 1.27), ("tmem", 1.26)],
            (1.54, 1.56),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::builtin_spec;

    #[test]
    fn gpt_training() {
        let b = builtin_spec("B200").unwrap();
        let h = builtin_spec("H200").unwrap();
        let p = training_throughput(&b, "GPT-1.3B", 128, Some(&h)).unwrap();
        assert_eq!((p.value, p.unit.as_str()), (14397.0, "tok/s"));
        assert_eq!(p.secondary("per_watt"), Some(22.2));
        assert!((p.secondary("implied_power").unwrap() - 648.5).abs() < 0.05);
        let p = training_throughput(&b, "resnet-50", 1024, Some(&h)).unwrap();
        assert!((p.ratio.unwrap() - 1.54).abs() < 0.005);
        assert!(training_throughput(&b, "gpt-1.3b", 32, None).is_err());
    }

    #[test]
    fn energy() {
        assert!((energy_efficiency(14397.0, 648.5).unwrap() - 22.2).abs() < 0.005);
        assert!(energy_efficiency(1.0, 1e300).unwrap() < 1e-299);
        assert!(energy_efficiency(1.0, 0.0).is_err());
        assert!((22.2f64 / 15.6 - 1.42).abs() < 0.005);
    }

    #[test]
    fn decompositions_are_inconsistent() {
        let t = speedup_decomposition(DecompositionKind::Training);
        assert!((t.product - 1.09 * 1.27 * 1.26).abs() < 1e-12);
        assert!((t.product - 1.744).abs() < 0.001);
        assert!(!t.consistent);
        let i = speedup_decomposition(DecompositionKind::Inference);
        assert!((i.product - 1.702).abs() < 0.001);
        assert!(!i.consistent);
        let one = decompose(&[("a", 1.0), ("b", 1.0), ("c", 1.0)], (1.0, 1.0));
        assert_eq!(one.product, 1.0);
        assert!(one.consistent);
    }
}
