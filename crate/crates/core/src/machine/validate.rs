use super::*;

/// Checks every invariant of the spec. An empty list means the spec is valid.
pub fn validate_spec(spec: &GpuSpec) -> Vec<Violation> {
    let mut v = Vec::new();
    let positive = |field: &str, x: f64, v: &mut Vec<Violation>| {
        if !(x > 0.0 && x.is_finite()) {
            v.push(Violation::new(field, format!("must be positive, got {x}")));
        }
    };
    let fraction = |field: &str, x: f64, v: &mut Vec<Violation>| {
        if !(x > 0.0 && x <= 1.0) {
            v.push(Violation::new(
                field,
                format!("fraction must be in (0, 1], got {x}"),
            ));
        }
    };
    let percent = |field: &str, x: f64, v: &mut Vec<Violation>| {
        if !(x > 0.0 && x <= 100.0) {
            v.push(Violation::new(
                field,
                format!("percentage must be in (0, 100], got {x}"),
            ));
        }
    };

    if spec.name.trim().is_empty() {
        v.push(Violation::new("gpu.name", "must not be empty"));
    }
    if spec.sm_count == 0 {
        v.push(Violation::new("gpu.sm_count", "must be > 0"));
    }
    positive("gpu.transistors_billion", spec.transistors_billion, &mut v);
    positive("gpu.hbm_capacity", spec.hbm_capacity_bytes as f64, &mut v);
    positive(
        "gpu.board_power_watts",
        spec.power.board_power_watts,
        &mut v,
    );

    let m = &spec.memory;
    positive("memory.hbm_peak_bw", m.hbm_peak_bw.bytes_per_sec(), &mut v);
    fraction(
        "memory.stream_small_fraction",
        m.stream_eff.small_fraction,
        &mut v,
    );
    fraction(
        "memory.stream_large_fraction",
        m.stream_eff.large_fraction,
        &mut v,
    );
    positive(
        "memory.stream_threshold",
        m.stream_eff.threshold_bytes,
        &mut v,
    );
    if let Some(c) = m.global_miss_latency_cycles {
        positive("memory.global_miss_latency_cycles", c, &mut v);
    }

    if spec.tensor.peak.is_empty() {
        v.push(Violation::new(
            "tensor.peak",
            "must list at least one precision",
        ));
    }
    for (p, e) in &spec.tensor.peak {
        positive(&format!("tensor.peak.{p}"), e.throughput, &mut v);
        if let Some(pct) = e.pct_of_peak {
            percent(&format!("tensor.peak.{p}.pct_of_peak"), pct, &mut v);
        }
    }
    for (p, t) in &spec.tensor.theoretical {
        positive(&format!("tensor.theoretical.{p}"), *t, &mut v);
    }
    for t in &spec.tensor.latency {
        positive(&format!("tensor.latency.{}", t.tile), t.cycles, &mut v);
    }
    for i in &spec.tensor.instr {
        let f = format!("tensor.instr.{}.{}", i.input, i.accum);
        positive(&format!("{f}.latency_cycles"), i.latency_cycles, &mut v);
        positive(&format!("{f}.throughput"), i.throughput, &mut v);
    }

    if let Some(t) = &spec.tmem {
        let cells = t.lanes as u64 * t.columns as u64 * t.cell_bits as u64 / 8;
        if cells != t.capacity_bytes {
            v.push(Violation::new(
                "tmem.capacity",
                format!(
                    "tmem capacity mismatch: {} lanes x {} columns x {} bits = {cells} bytes, declared {}",
                    t.lanes, t.columns, t.cell_bits, t.capacity_bytes
                ),
            ));
        }
        for (f, bw) in [
            ("tmem.read_bw", t.read_bw),
            ("tmem.write_bw", t.write_bw),
            ("tmem.sustained_mma_bw", t.sustained_mma_bw),
            ("tmem.global_path_bw", t.global_path_bw),
        ] {
            positive(f, bw.bytes_per_sec(), &mut v);
        }
        if t.read_bw < t.write_bw {
            v.push(Violation::new("tmem.read_bw", "must be >= write_bw"));
        }
        positive("tmem.miss_latency_cycles", t.miss_latency_cycles, &mut v);
        if t.miss_latency_cycles >= t.baseline_miss_latency_cycles {
            v.push(Violation::new(
                "tmem.miss_latency_cycles",
                "must be below baseline_miss_latency_cycles",
            ));
        }
    }

    if let Some(de) = &spec.de {
        if !(de.efficiency_threshold > 0.0 && de.efficiency_threshold < 1.0) {
            v.push(Violation::new(
                "decomp.efficiency_threshold",
                "must be in (0, 1)",
            ));
        }
        if !(de.saturation_margin > 0.0 && de.saturation_margin < 1.0) {
            v.push(Violation::new(
                "decomp.saturation_margin",
                "must be in (0, 1)",
            ));
        }
        positive(
            "decomp.output_ceiling",
            de.output_ceiling.bytes_per_sec(),
            &mut v,
        );
        positive("decomp.payload", de.payload_bytes, &mut v);
        if de.latency_overhead_ms < 0.0 {
            v.push(Violation::new("decomp.latency_overhead_ms", "must be >= 0"));
        }
        if de.output_band.0 > de.output_band.1 || de.output_band.0.bytes_per_sec() <= 0.0 {
            v.push(Violation::new(
                "decomp.output_band",
                "must satisfy 0 < low <= high",
            ));
        }
        for (name, f) in &de.format_profiles {
            let field = format!("decomp.format.{name}");
            positive(&format!("{field}.output"), f.output.bytes_per_sec(), &mut v);
            positive(&format!("{field}.latency_ms"), f.latency_ms, &mut v);
            if let Some(i) = f.input {
                positive(&format!("{field}.input"), i.bytes_per_sec(), &mut v);
            }
            if let Some(r) = f.compression_ratio {
                positive(&format!("{field}.compression_ratio"), r, &mut v);
            }
            if let (Some(i), Some(r)) = (f.input, f.compression_ratio) {
                let derived = f.output.gbps() / r;
                if (i.gbps() - derived).abs() / i.gbps() > 0.05 {
                    v.push(Violation::new(
                        field,
                        format!(
                            "input {} GB/s deviates >5% from output/ratio {derived:.2}",
                            i.gbps()
                        ),
                    ));
                }
            }
        }
        for (name, p) in &de.pattern_profiles {
            let field = format!("decomp.pattern.{name}");
            positive(
                &format!("{field}.compression_ratio"),
                p.compression_ratio,
                &mut v,
            );
            positive(&format!("{field}.input"), p.input.bytes_per_sec(), &mut v);
            positive(&format!("{field}.output"), p.output.bytes_per_sec(), &mut v);
            positive(&format!("{field}.latency_ms"), p.latency_ms, &mut v);
        }
        for (bytes, c) in &de.chunk_profiles {
            let field = format!("decomp.chunk.{bytes}");
            positive(
                &format!("{field}.single_rate"),
                c.single_rate.bytes_per_sec(),
                &mut v,
            );
            positive(&format!("{field}.peak"), c.peak.bytes_per_sec(), &mut v);
            positive(&format!("{field}.max_speedup"), c.max_speedup, &mut v);
            if c.pipeline_depth == 0 {
                v.push(Violation::new(
                    format!("{field}.pipeline_depth"),
                    "must be > 0",
                ));
            }
            if c.pipeline_depth > c.saturation_batch {
                v.push(Violation::new(
                    field.clone(),
                    "pipeline_depth must not exceed saturation_batch",
                ));
            }
            let product = c.single_rate.gbps() * c.max_speedup;
            if (c.peak.gbps() - product).abs() / c.peak.gbps() > 0.02 {
                v.push(Violation::new(
                    field,
                    format!(
                        "peak {} GB/s deviates >2% from single_rate x max_speedup {product:.2}",
                        c.peak.gbps()
                    ),
                ));
            }
        }
    }

    for (i, p) in spec.dgemm.iter().enumerate() {
        if p.dim == 0 {
            v.push(Violation::new(format!("dgemm.dims[{i}]"), "must be > 0"));
        }
        percent(&format!("dgemm.pct_of_peak[{i}]"), p.pct_of_peak, &mut v);
        if let Some(t) = p.tflops {
            positive(&format!("dgemm.tflops[{i}]"), t, &mut v);
        }
    }
    if spec.dgemm.windows(2).any(|w| w[0].dim >= w[1].dim) {
        v.push(Violation::new("dgemm.dims", "must be strictly increasing"));
    }

    for ((model, prec), c) in &spec.llm {
        let field = format!("llm.{model}.{prec}");
        positive(&format!("{field}.tok_per_s"), c.tok_per_s, &mut v);
        percent(&format!("{field}.bw_util_pct"), c.bw_util_pct, &mut v);
    }
    if let Some(l) = &spec.llm_latency {
        if l.seq_len == 0 {
            v.push(Violation::new("llm_latency.seq_len", "must be > 0"));
        }
        if l.batches.contains(&0) || l.batches.windows(2).any(|w| w[0] >= w[1]) {
            v.push(Violation::new(
                "llm_latency.batches",
                "must be positive and strictly increasing",
            ));
        }
        for (i, ms) in l.latency_ms.iter().enumerate() {
            positive(&format!("llm_latency.latency_ms[{i}]"), *ms, &mut v);
        }
    }
    for ((model, batch), c) in &spec.training {
        let field = format!("training.{model}.{batch}");
        positive(&format!("{field}.throughput"), c.throughput, &mut v);
        positive(
            &format!("{field}.time_to_accuracy_hrs"),
            c.time_to_accuracy_hrs,
            &mut v,
        );
        if let Some(w) = c.per_watt {
            positive(&format!("{field}.per_watt"), w, &mut v);
        }
    }
    for (name, c) in &spec.spmv {
        let field = format!("spmv.{name}");
        for (k, x) in [
            ("compressed_gflops", c.compressed_gflops),
            ("speedup", c.speedup),
            ("compressed_time_ms", c.compressed_time_ms),
            ("gflops", c.gflops),
        ] {
            if let Some(x) = x {
                positive(&format!("{field}.{k}"), x, &mut v);
            }
        }
        if let Some(s) = c.sparsity_pct {
            percent(&format!("{field}.sparsity_pct"), s, &mut v);
        }
    }
    if let Some(us) = spec.workload.attention_latency_us {
        positive("workload.attention.latency_us", us, &mut v);
    }
    v
}

/// One observation of a theoretical peak, and how far it sits from the
/// value derived from the peak table.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakConsistency {
    pub precision: Precision,
    pub source: String,
    pub derived_peak: f64,
    pub observed_peak: f64,
    pub rel_error: f64,
}

/// Compares the derived theoretical peak of each precision against every other
/// place the spec implies it (DGEMM efficiency points for FP64).
pub fn derived_peak_consistency(spec: &GpuSpec) -> Vec<PeakConsistency> {
    let mut out = Vec::new();
    for p in spec.tensor.peak.keys() {
        let Some(derived) = spec.theoretical_peak(*p) else {
            continue;
        };
        if let Some(e) = spec.tensor.peak.get(p) {
            if let Some(pct) = e.pct_of_peak {
                let observed = e.throughput / (pct / 100.0);
                out.push(PeakConsistency {
                    precision: *p,
                    source: "tensor.peak".into(),
                    derived_peak: derived,
                    observed_peak: observed,
                    rel_error: (observed - derived).abs() / derived,
                });
            }
        }
        if *p == Precision::Fp64 {
            for d in &spec.dgemm {
                if let Some(t) = d.tflops {
                    let observed = t / d.fraction();
                    out.push(PeakConsistency {
                        precision: *p,
                        source: format!("dgemm.{}", d.dim),
                        derived_peak: derived,
                        observed_peak: observed,
                        rel_error: (observed - derived).abs() / derived,
                    });
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::load::build;
    use super::super::{builtin_spec, builtin_text, load_machine_file};
    use super::*;
    use crate::error::Error;

    #[test]
    fn presets_are_valid() {
        for name in ["B200", "H200"] {
            assert_eq!(validate_spec(&builtin_spec(name).unwrap()), vec![]);
        }
    }

    #[test]
    fn tmem_capacity_mismatch_is_reported() {
        let mut spec = builtin_spec("B200").unwrap();
        spec.tmem.as_mut().unwrap().capacity_bytes = 128 * 1024;
        let v = validate_spec(&spec);
        assert_eq!(v.len(), 1);
        assert!(v[0].rule.contains("tmem capacity mismatch"));
        assert_eq!(v[0].field, "tmem.capacity");
    }

    #[test]
    fn pct_of_peak_above_one_is_reported() {
        let mut spec = builtin_spec("B200").unwrap();
        spec.tensor
            .peak
            .get_mut(&Precision::Fp4)
            .unwrap()
            .pct_of_peak = Some(105.0);
        let v = validate_spec(&spec);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "tensor.peak.fp4.pct_of_peak");
    }

    #[test]
    fn negative_bandwidth_fails_loading() {
        let text = builtin_text("B200")
            .unwrap()
            .replace("read_bw_tbps = 16", "read_bw_tbps = -1");
        assert!(build(&text).is_ok());
        match load_machine_file(&text).unwrap_err() {
            Error::Validation(v) => assert!(v.iter().any(|x| x.field == "tmem.read_bw")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn derived_peaks_agree_within_half_a_percent() {
        for name in ["B200", "H200"] {
            let spec = builtin_spec(name).unwrap();
            let checks = derived_peak_consistency(&spec);
            assert!(!checks.is_empty());
            for c in checks {
                assert!(c.rel_error <= 0.005, "{name} {c:?}");
            }
        }
        let b = builtin_spec("B200").unwrap();
        assert!((b.theoretical_peak(Precision::Fp64).unwrap() - 44.98).abs() < 0.01);
    }
}
