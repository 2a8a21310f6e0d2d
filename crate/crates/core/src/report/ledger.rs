use serde::Serialize;

use crate::workloads::{speedup_decomposition, DecompositionKind};

/// Two published values that cannot both hold under one model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Inconsistency {
    pub id: &'static str,
    pub topic: &'static str,
    pub first: String,
    pub first_anchor: &'static str,
    pub second: String,
    pub second_anchor: &'static str,
    pub resolution: &'static str,
}

/// Every known conflict between the calibration sources, in a stable order.
pub fn inconsistency_ledger() -> Vec<Inconsistency> {
    let train = speedup_decomposition(DecompositionKind::Training);
    let infer = speedup_decomposition(DecompositionKind::Inference);
    vec![
        Inconsistency {
            id: "fp16-peak-2x",
            topic: "FP16 Tensor Core throughput",
            first: "FP16/FP16 964.8 TFLOPS".into(),
            first_anchor: "T6",
            second: "FP16 1929.2 TFLOPS".into(),
            second_anchor: "T7",
            resolution: "both kept: instruction table and peak table are separate namespaces (2x apart)",
        },
        Inconsistency {
            id: "fp32-accum-halving",
            topic: "FP32 accumulation penalty",
            first: "FP16/FP32 482.4 TFLOPS".into(),
            first_anchor: "T6",
            second: "text: 1929.2 -> 964.6 TFLOPS".into(),
            second_anchor: "text (accumulator bottleneck)",
            resolution: "penalty computed from T6 (482.4 / 964.8 = 0.50); the halving ratio agrees, the absolute scale does not",
        },
        Inconsistency {
            id: "llm-token-scale",
            topic: "Mixtral-8x7B FP8 throughput at batch 32",
            first: "51,200 tok/s".into(),
            first_anchor: "T8",
            second: "734,264 tok/s".into(),
            second_anchor: "T9",
            resolution: "separate calibration namespaces, no conversion (about 14x apart)",
        },
        Inconsistency {
            id: "training-decomposition",
            topic: "training speedup decomposition",
            first: format!("product 1.09 x 1.27 x 1.26 = {:.3}", train.product),
            first_anchor: "text (training factors)",
            second: format!("measured {:.2}-{:.2}", train.measured_range.0, train.measured_range.1),
            second_anchor: "T11",
            resolution: "factors reported with consistent = false",
        },
        Inconsistency {
            id: "inference-decomposition",
            topic: "inference speedup decomposition",
            first: format!("product 1.09 x 1.27 x 1.23 = {:.3}", infer.product),
            first_anchor: "text (inference factors)",
            second: format!("measured {:.2}-{:.2}", infer.measured_range.0, infer.measured_range.1),
            second_anchor: "T8",
            resolution: "factors reported with consistent = false",
        },
        Inconsistency {
            id: "fp64-theoretical-peak",
            topic: "B200 FP64 theoretical peak",
            first: "text: 40 TFLOPS theoretical peak".into(),
            first_anchor: "text (DGEMM discussion)",
            second: "44.8 TFLOPS at 99.6% of peak = 44.98 TFLOPS; 36.3 / 0.807 = 44.98".into(),
            second_anchor: "T7, T12",
            resolution: "derived peak 44.98 used; 40 cannot be a peak below a measured 44.8",
        },
        Inconsistency {
            id: "tcgen05-latency-range",
            topic: "tcgen05 latency spread across precisions",
            first: "text: 1.27x (11.2-14.2 cycles)".into(),
            first_anchor: "text (precision sweep)",
            second: "11.2-12.6 cycles, 1.125x".into(),
            second_anchor: "T6",
            resolution: "T6 values used",
        },
        Inconsistency {
            id: "spmv-traffic",
            topic: "SpMV speedup against traffic reduction",
            first: "3.16x speedup".into(),
            first_anchor: "T14",
            second: "35% traffic reduction (1 / (1 - 0.35) = 1.54x)".into(),
            second_anchor: "text (sparse operations)",
            resolution: "both reported, neither derived from the other",
        },
        Inconsistency {
            id: "chunk-64k-depth",
            topic: "64 KB chunk batching",
            first: "pipeline depth 1".into(),
            first_anchor: "T3",
            second: "max speedup 69.81x at batch 1024".into(),
            second_anchor: "T3",
            resolution: "encoded verbatim; single rate back-derived as 85.7 / 69.81",
        },
        Inconsistency {
            id: "small-chunk-advice",
            topic: "32 KB chunks at 16 concurrent operations",
            first: "text: 53.8 GB/s".into(),
            first_anchor: "text (utilization strategy)",
            second: "16 x 0.75 GB/s = 12.0 GB/s at depth 16; 53.8 GB/s needs batch 1024".into(),
            second_anchor: "T3",
            resolution: "recommendation reports 12.0 GB/s at depth and 53.8 GB/s as peak",
        },
        Inconsistency {
            id: "training-power",
            topic: "training board power increase",
            first: "text: 14% higher power".into(),
            first_anchor: "text (training)",
            second: "(14397 / 22.2) / (9240 / 15.6) = 1.095".into(),
            second_anchor: "T11",
            resolution: "implied powers 648.5 W and 592.3 W used",
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_unique() {
        let l = inconsistency_ledger();
        let mut ids: Vec<_> = l.iter().map(|i| i.id).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), l.len());
        assert!(l[3].first.contains("1.744"));
        assert!(l[4].first.contains("1.703"));
    }
}
