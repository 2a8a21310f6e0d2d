use std::fmt::Write as _;

use super::*;
use crate::units::{GB, KIB};

/// Serializes a spec back into the machine-file grammar.
///
/// `load_machine_file(&to_machine_file(&s))` yields a value equal to `s`.
pub fn to_machine_file(spec: &GpuSpec) -> String {
    let mut out = String::new();
    let o = &mut out;

    section(o, "gpu");
    kv_str(o, "name", &spec.name);
    kv_str(o, "generation", spec.generation.as_str());
    if let Some(b) = &spec.baseline {
        kv_str(o, "baseline", b);
    }
    kv(o, "sm_count", spec.sm_count);
    kv(o, "transistors_billion", spec.transistors_billion);
    kv(o, "hbm_capacity_gb", spec.hbm_capacity_bytes as f64 / GB);
    kv(o, "board_power_watts", spec.power.board_power_watts);

    let m = &spec.memory;
    section(o, "memory");
    kv(o, "hbm_peak_bw_tbps", m.hbm_peak_bw.tbps());
    kv(o, "stream_small_fraction", m.stream_eff.small_fraction);
    kv(o, "stream_large_fraction", m.stream_eff.large_fraction);
    kv(o, "stream_threshold_gb", m.stream_eff.threshold_bytes / GB);
    if let Some(c) = m.global_miss_latency_cycles {
        kv(o, "global_miss_latency_cycles", c);
    }

    section(o, "tensor.peak");
    for (p, e) in &spec.tensor.peak {
        match e.pct_of_peak {
            Some(pct) => kv(o, p.as_str(), format!("{}, {}", e.throughput, pct)),
            None => kv(o, p.as_str(), e.throughput),
        }
    }
    if !spec.tensor.theoretical.is_empty() {
        section(o, "tensor.theoretical");
        for (p, v) in &spec.tensor.theoretical {
            kv(o, p.as_str(), v);
        }
    }
    if !spec.tensor.latency.is_empty() {
        section(o, "tensor.latency");
        for t in &spec.tensor.latency {
            kv(o, &t.tile.to_string(), t.cycles);
        }
    }
    for i in &spec.tensor.instr {
        section(o, &format!("tensor.instr.{}.{}", i.input, i.accum));
        kv_str(o, "tile", &i.tile.to_string());
        kv(o, "latency_cycles", i.latency_cycles);
        kv(o, "throughput", i.throughput);
    }

    if let Some(t) = &spec.tmem {
        section(o, "tmem");
        kv(o, "capacity_kib", t.capacity_bytes as f64 / KIB as f64);
        kv(o, "lanes", t.lanes);
        kv(o, "columns", t.columns);
        kv(o, "cell_bits", t.cell_bits);
        kv(o, "read_bw_tbps", t.read_bw.tbps());
        kv(o, "write_bw_tbps", t.write_bw.tbps());
        kv(o, "miss_latency_cycles", t.miss_latency_cycles);
        kv(
            o,
            "baseline_miss_latency_cycles",
            t.baseline_miss_latency_cycles,
        );
        kv(o, "sustained_mma_bw_tbps", t.sustained_mma_bw.tbps());
        kv(o, "global_path_bw_tbps", t.global_path_bw.tbps());
    }

    if let Some(de) = &spec.de {
        section(o, "decomp");
        kv(o, "output_ceiling_gbps", de.output_ceiling.gbps());
        kv(o, "output_band_low_gbps", de.output_band.0.gbps());
        kv(o, "output_band_high_gbps", de.output_band.1.gbps());
        kv(o, "efficiency_threshold", de.efficiency_threshold);
        kv(o, "saturation_margin", de.saturation_margin);
        kv(o, "latency_overhead_ms", de.latency_overhead_ms);
        kv(o, "payload_mb", de.payload_bytes / 1e6);
        for (name, f) in &de.format_profiles {
            section(o, &format!("decomp.format.{name}"));
            if let Some(r) = f.compression_ratio {
                kv(o, "compression_ratio", r);
            }
            if let Some(i) = f.input {
                kv(o, "input_gbps", i.gbps());
            }
            kv(o, "output_gbps", f.output.gbps());
            kv(o, "latency_ms", f.latency_ms);
            kv_str(o, "use_case", &f.use_case);
        }
        for (name, p) in &de.pattern_profiles {
            section(o, &format!("decomp.pattern.{name}"));
            kv(o, "compression_ratio", p.compression_ratio);
            kv(o, "input_gbps", p.input.gbps());
            kv(o, "output_gbps", p.output.gbps());
            kv(o, "latency_ms", p.latency_ms);
        }
        for (bytes, c) in &de.chunk_profiles {
            section(o, &format!("decomp.chunk.{bytes}"));
            kv(o, "single_rate_gbps", c.single_rate.gbps());
            kv(o, "pipeline_depth", c.pipeline_depth);
            kv(o, "saturation_batch", c.saturation_batch);
            kv(o, "peak_gbps", c.peak.gbps());
            kv(o, "max_speedup", c.max_speedup);
        }
    }

    if !spec.dgemm.is_empty() {
        section(o, "dgemm");
        kv(o, "dims", list(spec.dgemm.iter().map(|p| p.dim as f64)));
        kv(
            o,
            "pct_of_peak",
            list(spec.dgemm.iter().map(|p| p.pct_of_peak)),
        );
        if spec.dgemm.iter().all(|p| p.tflops.is_some()) {
            kv(
                o,
                "tflops",
                list(spec.dgemm.iter().filter_map(|p| p.tflops)),
            );
        }
    }

    for ((model, prec), c) in &spec.llm {
        section(o, &format!("llm.{model}.{prec}"));
        kv(o, "tok_per_s", c.tok_per_s);
        kv(o, "bw_util_pct", c.bw_util_pct);
        if let Some(v) = c.perplexity {
            kv(o, "perplexity", v);
        }
        if let Some(v) = c.delta_ppl_pct {
            kv(o, "delta_ppl_pct", v);
        }
    }

    if let Some(l) = &spec.llm_latency {
        section(o, "llm_latency");
        kv_str(o, "model", &l.model);
        kv_str(o, "precision", l.precision.as_str());
        kv(o, "seq_len", l.seq_len);
        kv(o, "batches", list(l.batches.iter().map(|&b| b as f64)));
        kv(o, "latency_ms", list(l.latency_ms.iter().copied()));
        if let Some(t) = &l.tok_per_s {
            kv(o, "tok_per_s", list(t.iter().copied()));
        }
    }

    for ((model, batch), c) in &spec.training {
        section(o, &format!("training.{model}.{batch}"));
        kv(o, "throughput", c.throughput);
        kv_str(o, "unit", &c.unit);
        kv(o, "time_to_accuracy_hrs", c.time_to_accuracy_hrs);
        if let Some(v) = c.per_watt {
            kv(o, "per_watt", v);
        }
    }

    for (name, c) in &spec.spmv {
        section(o, &format!("spmv.{name}"));
        let fields = [
            ("sparsity_pct", c.sparsity_pct),
            ("compressed_gflops", c.compressed_gflops),
            ("speedup", c.speedup),
            ("compressed_time_ms", c.compressed_time_ms),
            ("gflops", c.gflops),
        ];
        for (k, v) in fields {
            if let Some(v) = v {
                kv(o, k, v);
            }
        }
    }

    if let Some(us) = spec.workload.attention_latency_us {
        section(o, "workload.attention");
        kv(o, "latency_us", us);
    }

    let a = &spec.annotations;
    if *a != Annotations::default() {
        section(o, "annotations");
        let pairs = [
            ("l2_hit_rate_pct", a.l2_hit_rate_pct),
            (
                "scheduler_stall_reduction_pct",
                a.scheduler_stall_reduction_pct,
            ),
            ("pipeline_stages_high_batch", a.pipeline_stages_high_batch),
            ("pipeline_stages_low_batch", a.pipeline_stages_low_batch),
        ];
        for (k, v) in pairs {
            if let Some((lo, hi)) = v {
                kv(o, k, format!("{lo}, {hi}"));
            }
        }
        if let Some(v) = a.chained_gemm_savings_tbps {
            kv(o, "chained_gemm_savings_tbps", v);
        }
    }
    out
}

fn section(o: &mut String, name: &str) {
    if !o.is_empty() {
        o.push('\n');
    }
    let _ = writeln!(o, "[{name}]");
}

fn kv(o: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(o, "{key} = {value}");
}

fn kv_str(o: &mut String, key: &str, value: &str) {
    let escaped = value.replace('\\', "\\\\").replace('"', "\\\"");
    let _ = writeln!(o, "{key} = \"{escaped}\"");
}

fn list(values: impl Iterator<Item = f64>) -> String {
    values.map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
}

#[cfg(test)]
mod tests {
    use super::super::{builtin_spec, load_machine_file};
    use super::*;

    #[test]
    fn presets_round_trip() {
        for name in ["B200", "H200"] {
            let spec = builtin_spec(name).unwrap();
            let text = to_machine_file(&spec);
            assert_eq!(load_machine_file(&text).unwrap(), spec, "{name}");
        }
    }

    #[test]
    fn strings_with_quotes_round_trip() {
        let mut spec = builtin_spec("H200").unwrap();
        spec.name = "odd \"name\" # \\".into();
        let back = load_machine_file(&to_machine_file(&spec)).unwrap();
        assert_eq!(back.name, spec.name);
    }
}
