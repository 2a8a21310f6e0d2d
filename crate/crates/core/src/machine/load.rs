use std::collections::BTreeMap;

use super::parse::{parse_document, Entry, Section, Value};
use super::*;
use crate::error::{Error, Result};
use crate::units::{Bandwidth, GB, KIB};

/// Parses and validates a machine-description document.
pub fn load_machine_file(text: &str) -> Result<GpuSpec> {
    let spec = build(text)?;
    let violations = validate_spec(&spec);
    if violations.is_empty() {
        Ok(spec)
    } else {
        Err(Error::Validation(violations))
    }
}

/// Parses without validating; used by tests that need to inspect invalid specs.
pub(crate) fn build(text: &str) -> Result<GpuSpec> {
    let doc = parse_document(text)?;
    let mut b = Builder::default();
    for section in &doc.sections {
        b.section(section)?;
    }
    b.finish(text)
}

struct Reader<'a> {
    section: &'a Section,
    used: Vec<bool>,
}

impl<'a> Reader<'a> {
    fn new(section: &'a Section) -> Self {
        Reader {
            section,
            used: vec![false; section.entries.len()],
        }
    }

    fn take(&mut self, key: &str) -> Option<&'a Entry> {
        let idx = self.section.entries.iter().position(|e| e.key == key)?;
        self.used[idx] = true;
        Some(&self.section.entries[idx])
    }

    fn missing(&self, key: &str) -> Error {
        Error::parse(
            self.section.line,
            1,
            format!("[{}] is missing required key `{key}`", self.section.name),
        )
    }

    fn opt_num(&mut self, key: &str) -> Result<Option<f64>> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => num(e).map(Some),
        }
    }

    fn num(&mut self, key: &str) -> Result<f64> {
        self.opt_num(key)?.ok_or_else(|| self.missing(key))
    }

    fn int<T: TryFrom<u64>>(&mut self, key: &str) -> Result<T> {
        let e = self.take(key).ok_or_else(|| self.missing(key))?;
        int(e, num(e)?)
    }

    fn opt_str(&mut self, key: &str) -> Result<Option<String>> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => match &e.value {
                Value::Str(s) => Ok(Some(s.clone())),
                other => Err(type_error(e, "string", other)),
            },
        }
    }

    fn str(&mut self, key: &str) -> Result<String> {
        self.opt_str(key)?.ok_or_else(|| self.missing(key))
    }

    fn opt_nums(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => nums(e).map(Some),
        }
    }

    fn nums(&mut self, key: &str) -> Result<Vec<f64>> {
        self.opt_nums(key)?.ok_or_else(|| self.missing(key))
    }

    fn opt_pair(&mut self, key: &str) -> Result<Option<(f64, f64)>> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => {
                let v = nums(e)?;
                if v.len() != 2 {
                    return Err(Error::parse(
                        e.line,
                        e.column,
                        "expected a `low, high` pair",
                    ));
                }
                Ok(Some((v[0], v[1])))
            }
        }
    }

    /// Rejects any key that was not consumed.
    fn finish(self) -> Result<()> {
        for (e, used) in self.section.entries.iter().zip(&self.used) {
            if !used {
                return Err(Error::parse(
                    e.line,
                    e.column,
                    format!("unknown key `{}` in [{}]", e.key, self.section.name),
                ));
            }
        }
        Ok(())
    }
}

fn type_error(e: &Entry, want: &str, got: &Value) -> Error {
    Error::parse(
        e.line,
        e.column,
        format!("`{}` expects a {want}, found a {}", e.key, got.type_name()),
    )
}

fn num(e: &Entry) -> Result<f64> {
    match &e.value {
        Value::Num(v) => Ok(*v),
        other => Err(type_error(e, "number", other)),
    }
}

fn nums(e: &Entry) -> Result<Vec<f64>> {
    match &e.value {
        Value::Num(v) => Ok(vec![*v]),
        Value::List(items) => items
            .iter()
            .map(|v| match v {
                Value::Num(x) => Ok(*x),
                other => Err(type_error(e, "list of numbers", other)),
            })
            .collect(),
        other => Err(type_error(e, "list of numbers", other)),
    }
}

fn int<T: TryFrom<u64>>(e: &Entry, v: f64) -> Result<T> {
    if v.fract() != 0.0 || v < 0.0 {
        return Err(Error::parse(
            e.line,
            e.column,
            format!("`{}` expects a non-negative integer", e.key),
        ));
    }
    T::try_from(v as u64)
        .map_err(|_| Error::parse(e.line, e.column, format!("`{}` is out of range", e.key)))
}

fn header_error(s: &Section, msg: impl Into<String>) -> Error {
    Error::parse(s.line, 1, msg)
}

fn precision_at(s: &Section, text: &str) -> Result<Precision> {
    text.parse()
        .map_err(|_| header_error(s, format!("unknown precision `{text}` in [{}]", s.name)))
}

fn key_entries(s: &Section) -> impl Iterator<Item = &Entry> {
    s.entries.iter()
}

/// name, generation, baseline, sm count, transistors, HBM bytes, board watts
type GpuHeader = (String, Generation, Option<String>, u32, f64, u64, f64);

#[derive(Default)]
struct Builder {
    gpu: Option<GpuHeader>,
    memory: Option<MemoryParams>,
    tensor: TensorCalibration,
    has_peak: bool,
    tmem: Option<TmemParams>,
    de_globals: Option<DeGlobals>,
    formats: BTreeMap<String, DeFormatProfile>,
    patterns: BTreeMap<String, PatternProfile>,
    chunks: BTreeMap<u64, ChunkProfile>,
    dgemm: Vec<DgemmPoint>,
    llm: BTreeMap<(String, Precision), LlmCell>,
    llm_latency: Option<LatencyTable>,
    training: BTreeMap<(String, u32), TrainingCell>,
    spmv: BTreeMap<String, SpmvCell>,
    workload: WorkloadCalibration,
    annotations: Annotations,
}

struct DeGlobals {
    output_ceiling: Bandwidth,
    band: (Bandwidth, Bandwidth),
    efficiency_threshold: f64,
    saturation_margin: f64,
    latency_overhead_ms: f64,
    payload_bytes: f64,
}

impl Builder {
    fn section(&mut self, s: &Section) -> Result<()> {
        let path = s.path();
        let mut r = Reader::new(s);
        match path.as_slice() {
            ["gpu"] => {
                let name = r.str("name")?;
                let generation = match r.str("generation")?.as_str() {
                    "hopper" => Generation::Hopper,
                    "blackwell" => Generation::Blackwell,
                    other => return Err(header_error(s, format!("unknown generation `{other}`"))),
                };
                let baseline = r.opt_str("baseline")?;
                let sm = r.int("sm_count")?;
                let transistors = r.num("transistors_billion")?;
                let hbm = (r.num("hbm_capacity_gb")? * GB).round() as u64;
                let power = r.num("board_power_watts")?;
                self.gpu = Some((name, generation, baseline, sm, transistors, hbm, power));
            }
            ["memory"] => {
                self.memory = Some(MemoryParams {
                    hbm_peak_bw: Bandwidth::from_tbps(r.num("hbm_peak_bw_tbps")?),
                    stream_eff: StreamEfficiency {
                        small_fraction: r.num("stream_small_fraction")?,
                        large_fraction: r.num("stream_large_fraction")?,
                        threshold_bytes: r.num("stream_threshold_gb")? * GB,
                    },
                    global_miss_latency_cycles: r.opt_num("global_miss_latency_cycles")?,
                });
            }
            ["tensor", "peak"] => {
                self.has_peak = true;
                for e in key_entries(s) {
                    r.take(&e.key);
                    let p = e.key.parse::<Precision>().map_err(|_| {
                        Error::parse(e.line, e.column, format!("unknown precision `{}`", e.key))
                    })?;
                    let v = nums(e)?;
                    let entry = match v.as_slice() {
                        [t] => PeakEntry {
                            throughput: *t,
                            pct_of_peak: None,
                        },
                        [t, pct] => PeakEntry {
                            throughput: *t,
                            pct_of_peak: Some(*pct),
                        },
                        _ => {
                            return Err(Error::parse(
                                e.line,
                                e.column,
                                "expected `throughput` or `throughput, pct_of_peak`",
                            ))
                        }
                    };
                    self.tensor.peak.insert(p, entry);
                }
            }
            ["tensor", "theoretical"] => {
                for e in key_entries(s) {
                    r.take(&e.key);
                    let p = e.key.parse::<Precision>().map_err(|_| {
                        Error::parse(e.line, e.column, format!("unknown precision `{}`", e.key))
                    })?;
                    self.tensor.theoretical.insert(p, num(e)?);
                }
            }
            ["tensor", "latency"] => {
                for e in key_entries(s) {
                    r.take(&e.key);
                    let tile = e.key.parse::<Tile>().map_err(|_| {
                        Error::parse(e.line, e.column, format!("invalid tile `{}`", e.key))
                    })?;
                    self.tensor.latency.push(TileLatency {
                        tile,
                        cycles: num(e)?,
                    });
                }
            }
            ["tensor", "instr", input, accum] => {
                let input = precision_at(s, input)?;
                let accum = precision_at(s, accum)?;
                let tile_text = r.str("tile")?;
                let tile = tile_text
                    .parse::<Tile>()
                    .map_err(|_| header_error(s, format!("invalid tile `{tile_text}`")))?;
                self.tensor.instr.push(InstrCalibration {
                    input,
                    accum,
                    tile,
                    latency_cycles: r.num("latency_cycles")?,
                    throughput: r.num("throughput")?,
                });
            }
            ["tmem"] => {
                self.tmem = Some(TmemParams {
                    capacity_bytes: (r.num("capacity_kib")? * KIB as f64).round() as u64,
                    lanes: r.int("lanes")?,
                    columns: r.int("columns")?,
                    cell_bits: r.int("cell_bits")?,
                    read_bw: Bandwidth::from_tbps(r.num("read_bw_tbps")?),
                    write_bw: Bandwidth::from_tbps(r.num("write_bw_tbps")?),
                    miss_latency_cycles: r.num("miss_latency_cycles")?,
                    baseline_miss_latency_cycles: r.num("baseline_miss_latency_cycles")?,
                    sustained_mma_bw: Bandwidth::from_tbps(r.num("sustained_mma_bw_tbps")?),
                    global_path_bw: Bandwidth::from_tbps(r.num("global_path_bw_tbps")?),
                });
            }
            ["decomp"] => {
                self.de_globals = Some(DeGlobals {
                    output_ceiling: Bandwidth::from_gbps(r.num("output_ceiling_gbps")?),
                    band: (
                        Bandwidth::from_gbps(r.num("output_band_low_gbps")?),
                        Bandwidth::from_gbps(r.num("output_band_high_gbps")?),
                    ),
                    efficiency_threshold: r.num("efficiency_threshold")?,
                    saturation_margin: r.num("saturation_margin")?,
                    latency_overhead_ms: r.num("latency_overhead_ms")?,
                    payload_bytes: r.num("payload_mb")? * 1e6,
                });
            }
            ["decomp", "format", rest @ ..] if !rest.is_empty() => {
                let name = rest.join(".");
                self.formats.insert(
                    name.clone(),
                    DeFormatProfile {
                        name,
                        compression_ratio: r.opt_num("compression_ratio")?,
                        input: r.opt_num("input_gbps")?.map(Bandwidth::from_gbps),
                        output: Bandwidth::from_gbps(r.num("output_gbps")?),
                        latency_ms: r.num("latency_ms")?,
                        use_case: r.opt_str("use_case")?.unwrap_or_default(),
                    },
                );
            }
            ["decomp", "pattern", rest @ ..] if !rest.is_empty() => {
                let name = rest.join(".");
                self.patterns.insert(
                    name.clone(),
                    PatternProfile {
                        name,
                        compression_ratio: r.num("compression_ratio")?,
                        input: Bandwidth::from_gbps(r.num("input_gbps")?),
                        output: Bandwidth::from_gbps(r.num("output_gbps")?),
                        latency_ms: r.num("latency_ms")?,
                    },
                );
            }
            ["decomp", "chunk", bytes] => {
                let chunk_bytes: u64 = bytes
                    .parse()
                    .map_err(|_| header_error(s, format!("invalid chunk size `{bytes}`")))?;
                self.chunks.insert(
                    chunk_bytes,
                    ChunkProfile {
                        chunk_bytes,
                        single_rate: Bandwidth::from_gbps(r.num("single_rate_gbps")?),
                        pipeline_depth: r.int("pipeline_depth")?,
                        saturation_batch: r.int("saturation_batch")?,
                        peak: Bandwidth::from_gbps(r.num("peak_gbps")?),
                        max_speedup: r.num("max_speedup")?,
                    },
                );
            }
            ["dgemm"] => {
                let dims = r.nums("dims")?;
                let pct = r.nums("pct_of_peak")?;
                let tflops = r.opt_nums("tflops")?;
                if pct.len() != dims.len() || tflops.as_ref().is_some_and(|t| t.len() != dims.len())
                {
                    return Err(header_error(s, "[dgemm] lists differ in length"));
                }
                let dims_entry = s.entries.iter().find(|e| e.key == "dims").unwrap();
                for (i, d) in dims.iter().enumerate() {
                    self.dgemm.push(DgemmPoint {
                        dim: int(dims_entry, *d)?,
                        pct_of_peak: pct[i],
                        tflops: tflops.as_ref().map(|t| t[i]),
                    });
                }
            }
            ["llm", model @ .., prec] if !model.is_empty() => {
                let precision = precision_at(s, prec)?;
                self.llm.insert(
                    (model.join("."), precision),
                    LlmCell {
                        tok_per_s: r.num("tok_per_s")?,
                        bw_util_pct: r.num("bw_util_pct")?,
                        perplexity: r.opt_num("perplexity")?,
                        delta_ppl_pct: r.opt_num("delta_ppl_pct")?,
                    },
                );
            }
            ["llm_latency"] => {
                let model = r.str("model")?;
                let prec_text = r.str("precision")?;
                let precision = precision_at(s, &prec_text)?;
                let seq_len = r.int("seq_len")?;
                let batches_entry = r.take("batches").ok_or_else(|| r.missing("batches"))?;
                let batches = nums(batches_entry)?
                    .into_iter()
                    .map(|b| int(batches_entry, b))
                    .collect::<Result<Vec<u32>>>()?;
                let latency_ms = r.nums("latency_ms")?;
                let tok_per_s = r.opt_nums("tok_per_s")?;
                if latency_ms.len() != batches.len()
                    || tok_per_s.as_ref().is_some_and(|t| t.len() != batches.len())
                {
                    return Err(header_error(s, "[llm_latency] lists differ in length"));
                }
                self.llm_latency = Some(LatencyTable {
                    model,
                    precision,
                    seq_len,
                    batches,
                    latency_ms,
                    tok_per_s,
                });
            }
            ["training", model @ .., batch] if !model.is_empty() => {
                let batch: u32 = batch
                    .parse()
                    .map_err(|_| header_error(s, format!("invalid batch `{batch}`")))?;
                self.training.insert(
                    (model.join("."), batch),
                    TrainingCell {
                        throughput: r.num("throughput")?,
                        unit: r.str("unit")?,
                        time_to_accuracy_hrs: r.num("time_to_accuracy_hrs")?,
                        per_watt: r.opt_num("per_watt")?,
                    },
                );
            }
            ["spmv", rest @ ..] if !rest.is_empty() => {
                self.spmv.insert(
                    rest.join("."),
                    SpmvCell {
                        sparsity_pct: r.opt_num("sparsity_pct")?,
                        compressed_gflops: r.opt_num("compressed_gflops")?,
                        speedup: r.opt_num("speedup")?,
                        compressed_time_ms: r.opt_num("compressed_time_ms")?,
                        gflops: r.opt_num("gflops")?,
                    },
                );
            }
            ["workload", "attention"] => {
                self.workload.attention_latency_us = Some(r.num("latency_us")?);
            }
            ["annotations"] => {
                self.annotations = Annotations {
                    l2_hit_rate_pct: r.opt_pair("l2_hit_rate_pct")?,
                    scheduler_stall_reduction_pct: r.opt_pair("scheduler_stall_reduction_pct")?,
                    pipeline_stages_high_batch: r.opt_pair("pipeline_stages_high_batch")?,
                    pipeline_stages_low_batch: r.opt_pair("pipeline_stages_low_batch")?,
                    chained_gemm_savings_tbps: r.opt_num("chained_gemm_savings_tbps")?,
                };
            }
            _ => return Err(header_error(s, format!("unknown section [{}]", s.name))),
        }
        r.finish()
    }

    fn finish(self, text: &str) -> Result<GpuSpec> {
        let end = text.lines().count().max(1);
        let need = |what: &str| Error::parse(end, 1, format!("missing required section [{what}]"));
        let (name, generation, baseline, sm_count, transistors_billion, hbm, power) =
            self.gpu.ok_or_else(|| need("gpu"))?;
        let memory = self.memory.ok_or_else(|| need("memory"))?;
        if !self.has_peak {
            return Err(need("tensor.peak"));
        }
        let has_profiles =
            !self.formats.is_empty() || !self.patterns.is_empty() || !self.chunks.is_empty();
        let de = match self.de_globals {
            Some(g) => Some(DeParams {
                format_profiles: self.formats,
                pattern_profiles: self.patterns,
                chunk_profiles: self.chunks,
                output_ceiling: g.output_ceiling,
                output_band: g.band,
                efficiency_threshold: g.efficiency_threshold,
                saturation_margin: g.saturation_margin,
                latency_overhead_ms: g.latency_overhead_ms,
                payload_bytes: g.payload_bytes,
            }),
            None if has_profiles => return Err(need("decomp")),
            None => None,
        };
        Ok(GpuSpec {
            name,
            generation,
            baseline,
            sm_count,
            transistors_billion,
            hbm_capacity_bytes: hbm,
            power: PowerParams {
                board_power_watts: power,
            },
            memory,
            tensor: self.tensor,
            tmem: self.tmem,
            de,
            dgemm: self.dgemm,
            llm: self.llm,
            llm_latency: self.llm_latency,
            training: self.training,
            spmv: self.spmv,
            workload: self.workload,
            annotations: self.annotations,
        })
    }
}
