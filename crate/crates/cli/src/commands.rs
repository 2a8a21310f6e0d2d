use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use blackmodel_core::decomp::{batch_throughput, fit_chunk_model, parse_measurements};
use blackmodel_core::lpfloat::{quant_error_stats, Quantizer};
use blackmodel_core::report::{
    inconsistency_ledger, reproduce, ComparisonReport, ModelValue, RefValue, TABLE_IDS,
};
use blackmodel_core::tensor_core::peak_throughput;
use blackmodel_core::workloads::{self, SparseProfile};
use blackmodel_core::{Bottleneck, CalibrationSet, Error, GpuSpec, Precision, Prediction};
use serde_json::json;

use crate::args::{Command, GlobalArgs, PredictCmd};
use crate::render::{fmt_num, Report};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_MISSING: i32 = 3;
pub const EXIT_REPRODUCE: i32 = 4;
pub const EXIT_FIT: i32 = 5;

/// A failure with its exit status and a short kind tag.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: String,
    pub message: String,
}

impl CliError {
    fn new(code: i32, kind: &str, message: impl Into<String>) -> Self {
        CliError {
            code,
            kind: kind.into(),
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::MissingCalibration { .. } | Error::NoTmem(_) => EXIT_MISSING,
            Error::IllConditioned(_) | Error::NoPoint => EXIT_FIT,
            _ => EXIT_USAGE,
        };
        CliError::new(code, e.kind(), e.to_string())
    }
}

/// Output of a command that may still fail after printing.
pub struct Outcome {
    pub report: Report,
    pub trailer: Option<String>,
    pub error: Option<CliError>,
}

impl From<Report> for Outcome {
    fn from(report: Report) -> Self {
        Outcome {
            report,
            trailer: None,
            error: None,
        }
    }
}

pub fn load_set(g: &GlobalArgs) -> Result<CalibrationSet, CliError> {
    let mut set = match std::env::var_os("BLACKMODEL_SPEC_DIR") {
        Some(dir) if !dir.is_empty() => CalibrationSet::with_override_dir(Path::new(&dir))?,
        _ => CalibrationSet::builtin()?,
    };
    for p in &g.spec {
        set.insert_file(p)?;
    }
    Ok(set)
}

pub fn run(g: &GlobalArgs, cmd: &Command) -> Result<Outcome, CliError> {
    let set = load_set(g)?;
    match cmd {
        Command::Predict {
            what,
            baseline,
            no_baseline,
        } => {
            let spec = set.get(&g.gpu)?;
            let base = match (no_baseline, baseline) {
                (true, _) => None,
                (false, Some(name)) => Some(set.get(name)?),
                (false, None) => set.baseline_of(spec),
            };
            predict(spec, base, what).map(Outcome::from)
        }
        Command::Reproduce { table, all } => {
            let ids: Vec<String> = if *all {
                TABLE_IDS.iter().map(|s| s.to_string()).collect()
            } else {
                vec![table.clone().unwrap_or_default().to_ascii_uppercase()]
            };
            reproduce_tables(&set, &ids)
        }
        Command::Quantize {
            format,
            input,
            codes,
        } => quantize(format, input, codes.as_deref()).map(Outcome::from),
        Command::FitDe {
            csv,
            chunk_bytes,
            write,
        } => fit_de(csv, *chunk_bytes, *write),
        Command::Ledger => Ok(ledger().into()),
    }
}

fn precision(s: &str) -> Result<Precision, CliError> {
    s.parse::<Precision>().map_err(CliError::from)
}

fn prediction_report(command: &str, p: &Prediction) -> Report {
    let mut r = Report::new(command, &["metric", "value", "unit"]).outputs(p);
    r.row(vec![p.metric.clone(), fmt_num(p.value), p.unit.clone()]);
    if let (Some(b), Some(ratio)) = (p.baseline, p.ratio) {
        r.row(vec!["baseline".into(), fmt_num(b), p.unit.clone()]);
        r.row(vec!["ratio".into(), fmt_num(ratio), "x".into()]);
    }
    for m in &p.secondary {
        r.row(vec![m.name.clone(), fmt_num(m.value), m.unit.clone()]);
    }
    r.row(vec![
        "bottleneck".into(),
        p.bottleneck.as_str().into(),
        String::new(),
    ]);
    for n in &p.notes {
        r.row(vec!["note".into(), n.clone(), String::new()]);
    }
    if p.extrapolated {
        r.extrapolated.push(p.metric.clone());
        r.row(vec!["extrapolated".into(), "true".into(), String::new()]);
    }
    r
}

fn predict(spec: &GpuSpec, base: Option<&GpuSpec>, what: &PredictCmd) -> Result<Report, CliError> {
    let gpu = spec.name.as_str();
    let report = match what {
        PredictCmd::Dgemm { n } => {
            let p = workloads::dgemm_fp64(spec, *n, base)?;
            prediction_report("predict dgemm", &p)
                .input("gpu", gpu)
                .input("n", n)
        }
        PredictCmd::Llm {
            model,
            precision: prec,
            batch,
            seq,
        } => {
            let p = workloads::llm_throughput(spec, model, precision(prec)?, *batch, *seq, base)?;
            prediction_report("predict llm", &p)
                .input("gpu", gpu)
                .input("model", model)
                .input("precision", prec.to_ascii_lowercase())
                .input("batch", batch)
                .input("seq", seq)
        }
        PredictCmd::Latency { batch, seq } => {
            let p = workloads::llm_latency(spec, *batch, *seq, base)?;
            prediction_report("predict latency", &p)
                .input("gpu", gpu)
                .input("batch", batch)
                .input("seq", seq)
        }
        PredictCmd::Stream { array_gb } => {
            let p = workloads::stream(spec, array_gb * 1e9, base)?;
            prediction_report("predict stream", &p)
                .input("gpu", gpu)
                .input("array_gb", array_gb)
        }
        PredictCmd::Spmv {
            matrix,
            uncompressed,
            rows,
            nnz,
            index_ratio,
        } => {
            let profile = match (rows, nnz) {
                (Some(r), Some(n)) => Some(SparseProfile {
                    rows: *r,
                    nnz: *n,
                    index_compression_ratio: *index_ratio,
                }),
                _ => None,
            };
            let p = workloads::spmv(spec, matrix, profile.as_ref(), !uncompressed, base)?;
            prediction_report("predict spmv", &p)
                .input("gpu", gpu)
                .input("matrix", matrix)
                .input("compressed", !uncompressed)
                .input("profile", profile)
        }
        PredictCmd::Training { model, batch } => {
            let p = workloads::training_throughput(spec, model, *batch, base)?;
            prediction_report("predict training", &p)
                .input("gpu", gpu)
                .input("model", model)
                .input("batch", batch)
        }
        PredictCmd::Peak { precision: prec } => {
            let pt = peak_throughput(spec, precision(prec)?, base)?;
            let mut p = Prediction::new("peak_throughput", pt.tflops, pt.unit, Bottleneck::Compute);
            if let Some(b) = pt.baseline_tflops {
                p = p.with_baseline(b);
            }
            if let Some(pct) = pt.pct_of_peak {
                p = p.with_metric("pct_of_peak", pct, "%");
            }
            prediction_report("predict peak", &p)
                .input("gpu", gpu)
                .input("precision", prec.to_ascii_lowercase())
        }
        PredictCmd::Decomp {
            chunk_bytes,
            concurrency,
        } => {
            let t = batch_throughput(spec, *chunk_bytes, *concurrency)?;
            let p = Prediction::new(
                "decomp_aggregate",
                t.aggregate_gbps,
                "GB/s",
                Bottleneck::InputBw,
            )
            .with_metric("efficiency", t.efficiency, "fraction")
            .with_metric("speedup_vs_sequential", t.speedup_vs_sequential, "x");
            prediction_report("predict decomp", &p)
                .input("gpu", gpu)
                .input("chunk_bytes", chunk_bytes)
                .input("concurrency", concurrency)
        }
        PredictCmd::Summary => {
            let b = base.ok_or_else(|| {
                CliError::new(
                    EXIT_USAGE,
                    "precondition",
                    format!("{gpu} has no baseline machine"),
                )
            })?;
            let rows = workloads::summary(spec, b)?;
            let mut r = Report::new(
                "predict summary",
                &[
                    "workload",
                    "metric",
                    gpu,
                    &b.name,
                    "improvement",
                    "key_feature",
                ],
            )
            .input("gpu", gpu)
            .input("baseline", &b.name)
            .outputs(&rows);
            let na = |v: Option<f64>| v.map_or_else(|| "N/A".to_string(), fmt_num);
            for row in &rows {
                let mut imp = na(row.improvement);
                if let Some(basis) = row.improvement_basis {
                    imp = format!("{imp} {basis}");
                }
                r.row(vec![
                    row.workload.into(),
                    row.metric.into(),
                    na(row.value),
                    na(row.baseline),
                    imp,
                    row.key_feature.into(),
                ]);
            }
            r
        }
    };
    Ok(report)
}

fn ref_text(v: &RefValue) -> String {
    match v {
        RefValue::Number { value, decimals } => format!("{value:.*}", *decimals as usize),
        RefValue::Text { value } => value.clone(),
        RefValue::NotAvailable => "N/A".into(),
    }
}

fn model_text(v: &ModelValue) -> String {
    match v {
        ModelValue::Number { value, .. } => fmt_num(*value),
        ModelValue::Text { value } => value.clone(),
        ModelValue::Missing { .. } => "N/A".into(),
    }
}

fn status_line(r: &ComparisonReport) -> String {
    format!(
        "{} {} max_rel_error={} worst={}",
        r.table_id,
        if r.pass { "PASS" } else { "FAIL" },
        fmt_num(r.max_rel_error),
        r.worst.as_deref().unwrap_or("-")
    )
}

fn reproduce_tables(set: &CalibrationSet, ids: &[String]) -> Result<Outcome, CliError> {
    let b = set.get("B200")?;
    let h = set.get("H200")?;
    let reports: Vec<ComparisonReport> = ids
        .iter()
        .map(|id| reproduce(id, b, h))
        .collect::<Result<_, _>>()?;
    let mut r = Report::new(
        "reproduce",
        &[
            "table",
            "row",
            "column",
            "reference",
            "model",
            "rel_error",
            "tolerance",
            "pass",
        ],
    )
    .input("tables", ids)
    .outputs(&reports);
    let mut trailer = String::new();
    for rep in &reports {
        for c in &rep.cells {
            r.row(vec![
                rep.table_id.clone(),
                c.row.clone(),
                c.column.clone(),
                ref_text(&c.reference),
                model_text(&c.model),
                c.rel_error.map_or_else(String::new, fmt_num),
                fmt_num(c.tolerance),
                c.pass.to_string(),
            ]);
        }
        r.extrapolated.extend(
            rep.extrapolated
                .iter()
                .map(|e| format!("{}:{e}", rep.table_id)),
        );
        let _ = writeln!(trailer, "{}", status_line(rep));
    }
    let error = reports.iter().find(|rep| !rep.pass).map(|rep| {
        let worst = rep.worst.as_deref().unwrap_or("-");
        let detail = rep
            .cells
            .iter()
            .find(|c| format!("{}/{}", c.row, c.column) == worst)
            .map(|c| {
                format!(
                    " (reference {}, model {}, tolerance {})",
                    ref_text(&c.reference),
                    model_text(&c.model),
                    fmt_num(c.tolerance)
                )
            })
            .unwrap_or_default();
        CliError::new(
            EXIT_REPRODUCE,
            "reproduction",
            format!("{} failed: worst cell {worst}{detail}", rep.table_id),
        )
    });
    Ok(Outcome {
        report: r,
        trailer: Some(trailer),
        error,
    })
}

fn read_vector(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::new(EXIT_USAGE, "io", format!("{}: {e}", path.display())))?;
    let mut v = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let x: f64 = t
            .parse()
            .ok()
            .filter(|x: &f64| x.is_finite())
            .ok_or_else(|| {
                CliError::new(
                    EXIT_USAGE,
                    "parse",
                    format!("{}:{}: not a decimal: `{t}`", path.display(), i + 1),
                )
            })?;
        v.push(x);
    }
    Ok(v)
}

fn hex(code: u32, bits: u32) -> String {
    format!("{code:0w$x}", w = bits.div_ceil(4) as usize)
}

fn quantize(format: &str, input: &Path, codes: Option<&Path>) -> Result<Report, CliError> {
    let q = Quantizer::by_name(format)?;
    let v = read_vector(input)?;
    let stats = quant_error_stats(q, &v)?;
    let mut lines = String::new();
    let padding = match q {
        Quantizer::Scalar(f) => {
            for &x in &v {
                let _ = writeln!(lines, "{}", hex(f.encode(x), f.bits()));
            }
            0
        }
        Quantizer::Block(bf) => {
            let (blocks, pad) = bf.quantize_vector(&v);
            for b in &blocks {
                let elems: Vec<String> = b.codes.iter().map(|&c| hex(c, bf.elem.bits())).collect();
                let _ = writeln!(
                    lines,
                    "{} {}",
                    hex(b.scale_code, bf.scale_format.bits()),
                    elems.join(" ")
                );
            }
            pad
        }
    };
    if let Some(p) = codes {
        fs::write(p, &lines)
            .map_err(|e| CliError::new(EXIT_USAGE, "io", format!("{}: {e}", p.display())))?;
    }
    let mut r = Report::new("quantize", &["metric", "value"])
        .input("format", q.name())
        .input("input", input.display().to_string())
        .input("n", v.len())
        .outputs(json!({ "stats": stats, "padding": padding }));
    for (k, val) in [
        ("format", q.name().to_string()),
        ("n", v.len().to_string()),
        ("padding", padding.to_string()),
        ("mse", fmt_num(stats.mse)),
        ("max_abs_err", fmt_num(stats.max_abs_err)),
        ("sqnr_db", fmt_num(stats.sqnr_db)),
        ("overflow_count", stats.overflow_count.to_string()),
    ] {
        r.row(vec![k.into(), val]);
    }
    Ok(r)
}

fn fit_de(path: &Path, chunk_bytes: u64, write: bool) -> Result<Outcome, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::new(EXIT_USAGE, "io", format!("{}: {e}", path.display())))?;
    let pts = parse_measurements(&text)?;
    let fit = fit_chunk_model(&pts, chunk_bytes)?;
    let p = &fit.profile;
    let mut r = Report::new("fit-de", &["parameter", "value"])
        .input("csv", path.display().to_string())
        .input("chunk_bytes", chunk_bytes)
        .outputs(&fit);
    for (k, v) in [
        ("chunk_bytes", p.chunk_bytes.to_string()),
        ("single_rate_gbps", fmt_num(p.single_rate.gbps())),
        ("pipeline_depth", p.pipeline_depth.to_string()),
        ("saturation_batch", p.saturation_batch.to_string()),
        ("peak_gbps", fmt_num(p.peak.gbps())),
        ("max_speedup", fmt_num(p.max_speedup)),
        ("rms_residual_gbps", fmt_num(fit.rms_residual_gbps)),
        ("points", fit.points.to_string()),
    ] {
        r.row(vec![k.into(), v]);
    }
    if !write {
        return Ok(r.into());
    }
    let fragment = format!(
        "[decomp.chunk.{}]\nsingle_rate_gbps = {}\npipeline_depth = {}\nsaturation_batch = {}\npeak_gbps = {}\nmax_speedup = {}\n",
        p.chunk_bytes,
        fmt_num(p.single_rate.gbps()),
        p.pipeline_depth,
        p.saturation_batch,
        fmt_num(p.peak.gbps()),
        fmt_num(p.max_speedup)
    );
    Ok(Outcome {
        report: r,
        trailer: Some(fragment),
        error: None,
    })
}

fn ledger() -> Report {
    let entries = inconsistency_ledger();
    let mut r = Report::new(
        "ledger",
        &[
            "id",
            "topic",
            "first",
            "first_anchor",
            "second",
            "second_anchor",
            "resolution",
        ],
    )
    .outputs(&entries);
    for e in &entries {
        r.row(vec![
            e.id.into(),
            e.topic.into(),
            e.first.clone(),
            e.first_anchor.into(),
            e.second.clone(),
            e.second_anchor.into(),
            e.resolution.into(),
        ]);
    }
    r
}
