//! Tensor Core instruction model: SASS mapping, single-instruction latency,
//! throughput lookups, dependency chains and accumulator penalties.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::machine::{Generation, GpuSpec, TileLatency};
use crate::precision::Precision;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Isa {
    Tcgen05,
    Wgmma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Warp,
    WarpGroup,
}

impl Scope {
    pub fn threads(self) -> u32 {
        match self {
            Scope::Warp => 32,
            Scope::WarpGroup => 128,
        }
    }
}

impl Isa {
    pub fn scope(self) -> Scope {
        match self {
            Isa::Tcgen05 => Scope::Warp,
            Isa::Wgmma => Scope::WarpGroup,
        }
    }

    pub fn generation(self) -> Generation {
        match self {
            Isa::Tcgen05 => Generation::Blackwell,
            Isa::Wgmma => Generation::Hopper,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Isa::Tcgen05 => "tcgen05",
            Isa::Wgmma => "wgmma",
        }
    }
}

impl FromStr for Isa {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tcgen05" | "tcgen05.mma" => Ok(Isa::Tcgen05),
            "wgmma" => Ok(Isa::Wgmma),
            _ => Err(Error::Unsupported(format!("unknown isa `{s}`"))),
        }
    }
}

/// MMA tile shape in elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tile {
    pub m: u32,
    pub n: u32,
    pub k: u32,
}

impl Tile {
    pub const fn new(m: u32, n: u32, k: u32) -> Self {
        Tile { m, n, k }
    }

    pub fn volume(&self) -> f64 {
        self.m as f64 * self.n as f64 * self.k as f64
    }

    /// FLOPs of one instruction: one multiply and one add per MAC.
    pub fn flops(&self) -> f64 {
        2.0 * self.volume()
    }
}

impl fmt::Display for Tile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m{}n{}k{}", self.m, self.n, self.k)
    }
}

impl Serialize for Tile {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl FromStr for Tile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Unsupported(format!("invalid tile `{s}`, expected e.g. m64n64k16"));
        let rest = s.trim().strip_prefix('m').ok_or_else(bad)?;
        let (m, rest) = rest.split_once('n').ok_or_else(bad)?;
        let (n, k) = rest.split_once('k').ok_or_else(bad)?;
        let parse = |t: &str| t.parse::<u32>().ok().filter(|v| *v > 0).ok_or_else(bad);
        Ok(Tile::new(parse(m)?, parse(n)?, parse(k)?))
    }
}

/// One Tensor Core instruction instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MmaInstr {
    pub isa: Isa,
    pub tile: Tile,
    pub in_prec: Precision,
    pub accum_prec: Precision,
}

impl MmaInstr {
    pub fn new(isa: Isa, tile: Tile, in_prec: Precision, accum_prec: Precision) -> Result<Self> {
        if tile.m == 0 || tile.n == 0 || tile.k == 0 {
            return Err(Error::Precondition(format!(
                "tile {tile} has a zero dimension"
            )));
        }
        Ok(MmaInstr {
            isa,
            tile,
            in_prec,
            accum_prec,
        })
    }

    pub fn scope(&self) -> Scope {
        self.isa.scope()
    }
}

/// SASS opcode emitted for an ISA/precision pair.
pub fn sass_opcode(isa: Isa, precision: Precision) -> Result<&'static str> {
    use Precision::*;
    let op = match (isa, precision) {
        (_, Fp64) => Some("DMMA"),
        (Isa::Tcgen05, Fp32) => Some("HMMA"),
        (Isa::Wgmma, Fp32) => Some("HGMMA"),
        (Isa::Tcgen05, Fp4) => Some("OMMA"),
        (Isa::Tcgen05, Fp8) => Some("QMMA"),
        (Isa::Wgmma, Fp8) => Some("QGMMA"),
        (Isa::Tcgen05, Int4 | Int8) => Some("IMMA"),
        (Isa::Wgmma, Int4 | Int8) => Some("IGMMA"),
        _ => None,
    };
    op.ok_or_else(|| {
        Error::Unsupported(format!(
            "{} has no SASS mapping for {precision}",
            isa.as_str()
        ))
    })
}

/// How an uncalibrated tcgen05 tile is resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FallbackPolicy {
    NearestLogVolume,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatencyModel {
    pub tcgen05: Vec<TileLatency>,
    /// Cycles per 64 columns of n, least-squares fit through the origin.
    pub wgmma_base_cycles: Option<f64>,
    pub fallback: FallbackPolicy,
}

impl LatencyModel {
    pub fn from_spec(spec: &GpuSpec) -> Self {
        match spec.generation {
            Generation::Blackwell => LatencyModel {
                tcgen05: spec.tensor.latency.clone(),
                wgmma_base_cycles: None,
                fallback: FallbackPolicy::NearestLogVolume,
            },
            Generation::Hopper => {
                let (sxy, sxx) = spec
                    .tensor
                    .latency
                    .iter()
                    .fold((0.0, 0.0), |(sxy, sxx), t| {
                        let x = t.tile.n as f64 / 64.0;
                        (sxy + x * t.cycles, sxx + x * x)
                    });
                LatencyModel {
                    tcgen05: Vec::new(),
                    wgmma_base_cycles: (sxx > 0.0).then(|| sxy / sxx),
                    fallback: FallbackPolicy::NearestLogVolume,
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Latency {
    pub cycles: f64,
    pub extrapolated: bool,
    /// Calibrated tile the value was taken from, when it differs from the request.
    pub source_tile: Option<Tile>,
}

fn check_isa(spec: &GpuSpec, isa: Isa) -> Result<()> {
    if spec.generation != isa.generation() {
        return Err(Error::Unsupported(format!(
            "{} requires a {} machine, {} is {}",
            isa.as_str(),
            isa.generation().as_str(),
            spec.name,
            spec.generation.as_str()
        )));
    }
    Ok(())
}

/// Single-instruction latency in cycles.
pub fn instr_latency(spec: &GpuSpec, instr: &MmaInstr) -> Result<Latency> {
    check_isa(spec, instr.isa)?;
    match instr.isa {
        Isa::Wgmma => {
            let model = LatencyModel::from_spec(spec);
            let base = model
                .wgmma_base_cycles
                .ok_or_else(|| Error::missing("wgmma latency", "no calibrated tiles"))?;
            let calibrated = spec.tensor.latency.iter().any(|t| t.tile == instr.tile);
            Ok(Latency {
                cycles: base * instr.tile.n as f64 / 64.0,
                extrapolated: !calibrated,
                source_tile: None,
            })
        }
        Isa::Tcgen05 => {
            if let Some(row) = spec.tensor.instr.iter().find(|r| {
                r.tile == instr.tile && r.input == instr.in_prec && r.accum == instr.accum_prec
            }) {
                return Ok(Latency {
                    cycles: row.latency_cycles,
                    extrapolated: false,
                    source_tile: None,
                });
            }
            let target = instr.tile.volume().ln();
            let nearest = spec
                .tensor
                .latency
                .iter()
                .min_by(|a, b| {
                    let da = (a.tile.volume().ln() - target).abs();
                    let db = (b.tile.volume().ln() - target).abs();
                    da.total_cmp(&db)
                })
                .ok_or_else(|| Error::missing("tcgen05 latency", "no calibrated tiles"))?;
            let exact = nearest.tile == instr.tile;
            Ok(Latency {
                cycles: nearest.cycles,
                extrapolated: !exact,
                source_tile: (!exact).then_some(nearest.tile),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Throughput {
    pub value: f64,
    pub unit: &'static str,
    pub flops_per_instr: f64,
    /// True when the requested tile differs from the calibrated one.
    pub extrapolated: bool,
}

/// Sustained instruction throughput keyed by (input, accumulator) precision.
pub fn instr_throughput(spec: &GpuSpec, instr: &MmaInstr) -> Result<Throughput> {
    check_isa(spec, instr.isa)?;
    let row = spec
        .tensor
        .instr
        .iter()
        .find(|r| r.input == instr.in_prec && r.accum == instr.accum_prec)
        .ok_or_else(|| {
            Error::missing(
                format!("{}/{}", instr.in_prec, instr.accum_prec),
                format!("no instruction calibration on {}", spec.name),
            )
        })?;
    Ok(Throughput {
        value: row.throughput,
        unit: instr.in_prec.throughput_unit(),
        flops_per_instr: instr.tile.flops(),
        extrapolated: row.tile != instr.tile,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakThroughput {
    pub precision: Precision,
    pub tflops: f64,
    pub unit: &'static str,
    pub pct_of_peak: Option<f64>,
    pub baseline_name: Option<String>,
    pub baseline_tflops: Option<f64>,
    pub speedup: Option<f64>,
}

pub(crate) fn missing_precision(spec: &GpuSpec, p: Precision) -> Error {
    let reason =
        if spec.generation == Generation::Hopper && matches!(p, Precision::Fp4 | Precision::Fp6) {
            "new-in-Blackwell".to_string()
        } else {
            format!("not calibrated on {}", spec.name)
        };
    Error::missing(p.as_str(), reason)
}

/// Sustained peak for a precision, with the baseline speedup when the
/// baseline machine supports the precision.
pub fn peak_throughput(
    spec: &GpuSpec,
    precision: Precision,
    baseline: Option<&GpuSpec>,
) -> Result<PeakThroughput> {
    let e = spec
        .tensor
        .peak
        .get(&precision)
        .ok_or_else(|| missing_precision(spec, precision))?;
    let base = baseline.and_then(|b| b.tensor.peak.get(&precision).map(|x| (b, x.throughput)));
    Ok(PeakThroughput {
        precision,
        tflops: e.throughput,
        unit: precision.throughput_unit(),
        pct_of_peak: e.pct_of_peak,
        baseline_name: baseline.map(|b| b.name.clone()),
        baseline_tflops: base.map(|(_, t)| t),
        speedup: base.map(|(_, t)| e.throughput / t),
    })
}

/// Cycles for `chain_len` serially dependent instructions.
pub fn dependency_chain_cycles(spec: &GpuSpec, instr: &MmaInstr, chain_len: u64) -> Result<f64> {
    let lat = instr_latency(spec, instr)?;
    Ok(chain_len as f64 * lat.cycles)
}

/// Throughput of (input, accum) relative to the fastest accumulator for that input.
pub fn accum_penalty(spec: &GpuSpec, in_prec: Precision, accum_prec: Precision) -> Result<f64> {
    let rows: Vec<_> = spec
        .tensor
        .instr
        .iter()
        .filter(|r| r.input == in_prec)
        .collect();
    let this = rows.iter().find(|r| r.accum == accum_prec).ok_or_else(|| {
        Error::missing(
            format!("{in_prec}/{accum_prec}"),
            format!("no instruction calibration on {}", spec.name),
        )
    })?;
    let best = rows.iter().map(|r| r.throughput).fold(f64::MIN, f64::max);
    Ok(this.throughput / best)
}

/// (min, max) of wgmma / tcgen05 latency over tile pairs sharing m and k.
pub fn isa_latency_speedup_range(spec_b: &GpuSpec, spec_h: &GpuSpec) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for h in &spec_h.tensor.latency {
        for b in &spec_b.tensor.latency {
            if h.tile.m == b.tile.m && h.tile.k == b.tile.k {
                let r = h.cycles / b.cycles;
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
    }
    if lo.is_finite() {
        Ok((lo, hi))
    } else {
        Err(Error::EmptyComparison)
    }
}

/// max / min of calibrated single-instruction latencies (the `[tensor.latency]` tiles).
pub fn latency_spread(spec: &GpuSpec) -> Option<f64> {
    spread(spec.tensor.latency.iter().map(|t| t.cycles))
}

/// (latency spread, throughput spread) over the instruction table.
pub fn instr_spreads(spec: &GpuSpec) -> Option<(f64, f64)> {
    let lat = spread(spec.tensor.instr.iter().map(|r| r.latency_cycles))?;
    let thr = spread(spec.tensor.instr.iter().map(|r| r.throughput))?;
    Some((lat, thr))
}

fn spread(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    (lo.is_finite() && lo > 0.0).then(|| hi / lo)
}

/// Largest |fit - measured| over the calibrated wgmma tiles.
pub fn wgmma_fit_residual(spec: &GpuSpec) -> Option<f64> {
    let base = LatencyModel::from_spec(spec).wgmma_base_cycles?;
    spec.tensor
        .latency
        .iter()
        .map(|t| (base * t.tile.n as f64 / 64.0 - t.cycles).abs())
        .reduce(f64::max)
}

/// Scheduler-stall reduction range carried as metadata for warp-level issue.
pub fn scheduler_stall_annotation(spec: &GpuSpec) -> Option<(f64, f64)> {
    spec.annotations.scheduler_stall_reduction_pct
}
