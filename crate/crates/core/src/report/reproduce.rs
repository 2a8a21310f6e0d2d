use std::collections::BTreeMap;

use serde::Serialize;

use super::reference::{RefValue, ReferenceTable};
use crate::decomp::{
    chunk_profile, format_profile, pipeline_depth, saturation_point, sensitivity, Saturation,
};
use crate::error::{Error, Result};
use crate::machine::GpuSpec;
use crate::precision::Precision;
use crate::tensor_core::{
    instr_latency, instr_throughput, missing_precision, peak_throughput, sass_opcode, Isa, MmaInstr,
};
use crate::workloads::{
    dgemm_fp64, llm_latency, llm_throughput, spmv, stream, summary, training_throughput,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelValue {
    Number { value: f64, extrapolated: bool },
    Text { value: String },
    Missing { reason: String },
}

impl ModelValue {
    fn num(v: f64) -> Self {
        ModelValue::Number {
            value: v,
            extrapolated: false,
        }
    }

    fn text(s: impl Into<String>) -> Self {
        ModelValue::Text { value: s.into() }
    }

    fn from_result(r: Result<f64>) -> Self {
        match r {
            Ok(v) => Self::num(v),
            Err(e) => ModelValue::Missing {
                reason: e.to_string(),
            },
        }
    }

    fn from_option(v: Option<f64>, reason: &str) -> Self {
        v.map_or_else(
            || ModelValue::Missing {
                reason: reason.to_string(),
            },
            Self::num,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellComparison {
    pub row: String,
    pub column: String,
    pub reference: RefValue,
    pub model: ModelValue,
    pub rel_error: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub table_id: String,
    pub title: String,
    pub cells: Vec<CellComparison>,
    pub max_rel_error: f64,
    pub pass: bool,
    /// `row/column` of the failing cell furthest outside its tolerance, or of
    /// the largest error when every cell passes.
    pub worst: Option<String>,
    pub extrapolated: Vec<String>,
}

fn compare(reference: &RefValue, model: &ModelValue, tolerance: f64) -> (Option<f64>, bool, f64) {
    match (reference, model) {
        (RefValue::Number { value: r, .. }, ModelValue::Number { value: m, .. }) => {
            let diff = (m - r).abs();
            let rel = if *r == 0.0 { diff } else { diff / r.abs() };
            let allowed =
                tolerance * r.abs() + reference.rounding_allowance() + 1e-9 * r.abs().max(1.0);
            (
                Some(rel),
                diff <= allowed,
                (diff - allowed).max(0.0) / r.abs().max(f64::MIN_POSITIVE),
            )
        }
        (RefValue::Text { value: r }, ModelValue::Text { value: m }) => {
            let ok = r == m;
            (None, ok, if ok { 0.0 } else { f64::INFINITY })
        }
        (RefValue::NotAvailable, ModelValue::Missing { .. }) => (None, true, 0.0),
        _ => (None, false, f64::INFINITY),
    }
}

/// Compares model cells against a reference table.
pub fn compare_table(
    reference: &ReferenceTable,
    model: &BTreeMap<(String, String), ModelValue>,
) -> ComparisonReport {
    let mut cells = Vec::with_capacity(reference.cells.len());
    let mut worst: Option<(f64, f64, String)> = None;
    let mut extrapolated = Vec::new();
    for rc in &reference.cells {
        let key = (rc.row.clone(), rc.column.clone());
        let mv = model.get(&key).cloned().unwrap_or(ModelValue::Missing {
            reason: "not modeled".into(),
        });
        let (rel, pass, excess) = compare(&rc.value, &mv, rc.tolerance);
        let name = format!("{}/{}", rc.row, rc.column);
        if let ModelValue::Number {
            extrapolated: true, ..
        } = mv
        {
            extrapolated.push(name.clone());
        }
        let score = (excess, rel.unwrap_or(0.0));
        if worst
            .as_ref()
            .is_none_or(|w| score.0 > w.0 || (score.0 == w.0 && score.1 > w.1))
        {
            worst = Some((score.0, score.1, name));
        }
        cells.push(CellComparison {
            row: rc.row.clone(),
            column: rc.column.clone(),
            reference: rc.value.clone(),
            model: mv,
            rel_error: rel,
            tolerance: rc.tolerance,
            pass,
        });
    }
    let max_rel_error = cells.iter().filter_map(|c| c.rel_error).fold(0.0, f64::max);
    ComparisonReport {
        table_id: reference.id.clone(),
        title: reference.title.clone(),
        pass: cells.iter().all(|c| c.pass),
        max_rel_error,
        worst: worst.map(|w| w.2),
        extrapolated,
        cells,
    }
}

type Cells = BTreeMap<(String, String), ModelValue>;

fn put(cells: &mut Cells, row: &str, col: &str, v: ModelValue) {
    cells.insert((row.to_string(), col.to_string()), v);
}

/// Recomputes every cell of table `id` from the two machine descriptions.
pub fn model_cells(id: &str, b: &GpuSpec, h: &GpuSpec) -> Result<Cells> {
    let mut c = Cells::new();
    match id {
        "T1" => {
            let de = crate::decomp::de_params(b)?;
            for name in de.format_profiles.keys() {
                let f = format_profile(b, name)?;
                put(
                    &mut c,
                    name,
                    "compression_ratio",
                    ModelValue::from_result(f.ratio()),
                );
                put(
                    &mut c,
                    name,
                    "input_gbps",
                    ModelValue::from_result(f.input_gbps()),
                );
                put(
                    &mut c,
                    name,
                    "output_gbps",
                    ModelValue::num(f.output_gbps()),
                );
                put(&mut c, name, "latency_ms", ModelValue::num(f.latency_ms));
                put(
                    &mut c,
                    name,
                    "use_case",
                    ModelValue::text(f.use_case.clone()),
                );
            }
        }
        "T2" => {
            let de = crate::decomp::de_params(b)?;
            for p in de.pattern_profiles.values() {
                let s = sensitivity(b, p.compression_ratio, p.output.gbps())?;
                put(
                    &mut c,
                    &p.name,
                    "compression_ratio",
                    ModelValue::num(p.compression_ratio),
                );
                put(&mut c, &p.name, "input_gbps", ModelValue::num(s.input_gbps));
                put(
                    &mut c,
                    &p.name,
                    "output_gbps",
                    ModelValue::num(s.output_gbps),
                );
                put(&mut c, &p.name, "latency_ms", ModelValue::num(s.latency_ms));
            }
        }
        "T3" => {
            let de = crate::decomp::de_params(b)?;
            for &bytes in de.chunk_profiles.keys() {
                let cp = chunk_profile(b, bytes)?;
                let curve = cp.model_curve();
                let row = bytes.to_string();
                let depth = pipeline_depth(&curve, de.efficiency_threshold)?;
                put(
                    &mut c,
                    &row,
                    "pipeline_depth",
                    ModelValue::num(depth as f64),
                );
                match saturation_point(&curve, de.saturation_margin)? {
                    Saturation::At(s) => {
                        let peak = cp.point(s).aggregate_gbps;
                        put(&mut c, &row, "saturation_batch", ModelValue::num(s as f64));
                        put(&mut c, &row, "peak_gbps", ModelValue::num(peak));
                        put(
                            &mut c,
                            &row,
                            "max_speedup",
                            ModelValue::num(peak / cp.single_rate.gbps()),
                        );
                    }
                    Saturation::NotSaturated => {
                        put(
                            &mut c,
                            &row,
                            "saturation_batch",
                            ModelValue::Missing {
                                reason: "not saturated".into(),
                            },
                        );
                    }
                }
            }
        }
        "T4" => {
            use Precision::*;
            for p in [Fp64, Fp32, Fp4, Fp8, Int4, Int8] {
                for isa in [Isa::Tcgen05, Isa::Wgmma] {
                    let v = sass_opcode(isa, p).map_or_else(
                        |e| ModelValue::Missing {
                            reason: e.to_string(),
                        },
                        ModelValue::text,
                    );
                    put(&mut c, p.as_str(), isa.as_str(), v);
                }
            }
        }
        "T5" => {
            for (spec, isa) in [(h, Isa::Wgmma), (b, Isa::Tcgen05)] {
                for t in &spec.tensor.latency {
                    let instr = MmaInstr::new(isa, t.tile, Precision::Fp16, Precision::Fp16)?;
                    let lat = instr_latency(spec, &instr)?;
                    let row = format!("{} {}", isa.as_str(), t.tile);
                    let scope = match isa.scope() {
                        crate::tensor_core::Scope::Warp => "warp",
                        crate::tensor_core::Scope::WarpGroup => "warp-group",
                    };
                    put(&mut c, &row, "scope", ModelValue::text(scope));
                    put(
                        &mut c,
                        &row,
                        "latency_cycles",
                        ModelValue::Number {
                            value: lat.cycles,
                            extrapolated: lat.extrapolated,
                        },
                    );
                }
            }
        }
        "T6" => {
            for r in &b.tensor.instr {
                let instr = MmaInstr::new(Isa::Tcgen05, r.tile, r.input, r.accum)?;
                let row = format!("{}/{}", r.input, r.accum);
                put(&mut c, &row, "tile", ModelValue::text(r.tile.to_string()));
                put(
                    &mut c,
                    &row,
                    "latency_cycles",
                    ModelValue::num(instr_latency(b, &instr)?.cycles),
                );
                put(
                    &mut c,
                    &row,
                    "throughput",
                    ModelValue::num(instr_throughput(b, &instr)?.value),
                );
            }
        }
        "T7" => {
            for &p in b.tensor.peak.keys() {
                let pt = peak_throughput(b, p, Some(h))?;
                let row = p.as_str();
                put(&mut c, row, "b200", ModelValue::num(pt.tflops));
                put(
                    &mut c,
                    row,
                    "pct_of_peak",
                    ModelValue::from_option(pt.pct_of_peak, "not measured"),
                );
                let missing = missing_precision(h, p).to_string();
                put(
                    &mut c,
                    row,
                    "h200",
                    ModelValue::from_option(pt.baseline_tflops, &missing),
                );
                let speedup = match pt.speedup {
                    Some(s) => ModelValue::num(s),
                    None if missing.contains("new-in-Blackwell") => ModelValue::text("New"),
                    None => ModelValue::Missing { reason: missing },
                };
                put(&mut c, row, "speedup", speedup);
            }
        }
        "T8" => {
            for (model, p) in b.llm.keys() {
                let row = format!("{model}/{p}");
                let pr = llm_throughput(b, model, *p, 32, 2048, Some(h))?;
                let na = "not reported";
                put(&mut c, &row, "b200_tok_s", ModelValue::num(pr.value));
                put(
                    &mut c,
                    &row,
                    "h200_tok_s",
                    ModelValue::from_option(pr.baseline, na),
                );
                put(
                    &mut c,
                    &row,
                    "speedup",
                    ModelValue::from_option(pr.ratio, na),
                );
                put(
                    &mut c,
                    &row,
                    "b200_bw_pct",
                    ModelValue::from_option(pr.secondary("bw_util_pct"), na),
                );
                put(
                    &mut c,
                    &row,
                    "h200_bw_pct",
                    ModelValue::from_option(pr.secondary("baseline_bw_util_pct"), na),
                );
                put(
                    &mut c,
                    &row,
                    "perplexity",
                    ModelValue::from_option(pr.secondary("perplexity"), na),
                );
                put(
                    &mut c,
                    &row,
                    "delta_ppl_pct",
                    ModelValue::from_option(pr.secondary("delta_ppl_pct"), na),
                );
            }
        }
        "T9" => {
            let t = b
                .llm_latency
                .as_ref()
                .ok_or_else(|| Error::missing("batch latency", "not calibrated"))?;
            for &batch in &t.batches {
                let row = batch.to_string();
                let pb = llm_latency(b, batch, t.seq_len, None)?;
                let ph = llm_latency(h, batch, t.seq_len, None)?;
                put(&mut c, &row, "b200_ms", ModelValue::num(pb.value));
                put(&mut c, &row, "h200_ms", ModelValue::num(ph.value));
                put(&mut c, &row, "ratio", ModelValue::num(ph.value / pb.value));
                put(
                    &mut c,
                    &row,
                    "b200_tok_s",
                    ModelValue::from_option(pb.secondary("tok_per_s"), "no latency"),
                );
            }
        }
        "T10" => {
            const KEYS: [&str; 11] = [
                "llm-7b-fp4",
                "llm-8x7b-fp8",
                "llm-bs1-latency",
                "llm-8x22b-fp8",
                "attention",
                "dgemm-fp64",
                "stream-triad",
                "spmv-compressed",
                "gpt-training",
                "resnet-training",
                "energy-training",
            ];
            let rows = summary(b, h)?;
            for (key, r) in KEYS.iter().zip(&rows) {
                let na = "not available";
                put(&mut c, key, "b200", ModelValue::from_option(r.value, na));
                put(&mut c, key, "h200", ModelValue::from_option(r.baseline, na));
                put(
                    &mut c,
                    key,
                    "improvement",
                    ModelValue::from_option(r.improvement, na),
                );
            }
        }
        "T11" => {
            for (model, batch) in b.training.keys() {
                let row = format!("{model}/{batch}");
                let p = training_throughput(b, model, *batch, Some(h))?;
                let na = "not reported";
                put(&mut c, &row, "b200", ModelValue::num(p.value));
                put(
                    &mut c,
                    &row,
                    "h200",
                    ModelValue::from_option(p.baseline, na),
                );
                put(&mut c, &row, "ratio", ModelValue::from_option(p.ratio, na));
                put(
                    &mut c,
                    &row,
                    "tta_b200_hrs",
                    ModelValue::from_option(p.secondary("time_to_accuracy"), na),
                );
                put(
                    &mut c,
                    &row,
                    "tta_h200_hrs",
                    ModelValue::from_option(p.secondary("baseline_time_to_accuracy"), na),
                );
                put(
                    &mut c,
                    &row,
                    "energy_eff_b200",
                    ModelValue::from_option(p.secondary("per_watt"), na),
                );
            }
        }
        "T12" => {
            for n in b.dgemm.iter().map(|p| p.dim) {
                let row = n.to_string();
                let pb = dgemm_fp64(b, n, Some(h))?;
                let ph = dgemm_fp64(h, n, None)?;
                put(&mut c, &row, "b200_tflops", ModelValue::num(pb.value));
                put(&mut c, &row, "h200_tflops", ModelValue::num(ph.value));
                put(
                    &mut c,
                    &row,
                    "ratio",
                    ModelValue::from_option(pb.ratio, "no baseline"),
                );
                put(
                    &mut c,
                    &row,
                    "b200_pct",
                    ModelValue::from_option(pb.secondary("pct_of_peak"), ""),
                );
                put(
                    &mut c,
                    &row,
                    "h200_pct",
                    ModelValue::from_option(ph.secondary("pct_of_peak"), ""),
                );
            }
        }
        "T13" => {
            for gb in [4u32, 16, 64, 128] {
                let row = format!("{gb}GB");
                let bytes = gb as f64 * 1e9;
                let pb = stream(b, bytes, None)?;
                let ph = stream(h, bytes, None)?;
                put(&mut c, &row, "b200_tbps", ModelValue::num(pb.value));
                put(&mut c, &row, "h200_tbps", ModelValue::num(ph.value));
                put(
                    &mut c,
                    &row,
                    "b200_pct",
                    ModelValue::from_option(pb.secondary("pct_of_peak"), ""),
                );
                put(
                    &mut c,
                    &row,
                    "h200_pct",
                    ModelValue::from_option(ph.secondary("pct_of_peak"), ""),
                );
            }
        }
        "T14" => {
            for (name, cell) in &b.spmv {
                let p = spmv(b, name, None, true, None)?;
                put(
                    &mut c,
                    name,
                    "sparsity_pct",
                    ModelValue::from_option(cell.sparsity_pct, "not reported"),
                );
                put(&mut c, name, "gflops", ModelValue::num(p.value));
                put(
                    &mut c,
                    name,
                    "speedup",
                    ModelValue::from_option(p.secondary("speedup_vs_uncompressed"), ""),
                );
                put(
                    &mut c,
                    name,
                    "time_ms",
                    ModelValue::from_option(p.secondary("time"), "not reported"),
                );
            }
        }
        other => {
            return Err(Error::Precondition(format!(
                "unknown table `{other}`, expected T1..T14"
            )))
        }
    }
    Ok(c)
}

/// Recomputes table `id` and compares it with the bundled reference.
pub fn reproduce(id: &str, b: &GpuSpec, h: &GpuSpec) -> Result<ComparisonReport> {
    let reference = ReferenceTable::builtin(id)?;
    let cells = model_cells(&reference.id, b, h)?;
    Ok(compare_table(&reference, &cells))
}
