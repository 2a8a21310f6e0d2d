//! One PASS/FAIL line per acceptance criterion.

use std::io::Write;
use std::process::Command;

use blackmodel_core::decomp::{
    batch_throughput, chunk_profile, fit_chunk_model, sweep_concurrencies,
};
use blackmodel_core::lpfloat::{
    quantized_gemm, Accumulator, Matrix, Quantizer, ALL_FORMATS, E2M1, MXFP4, NVFP4,
};
use blackmodel_core::machine::derived_peak_consistency;
use blackmodel_core::memsys::{stream_triad, tile_efficiency};
use blackmodel_core::report::{reproduce, TABLE_IDS};
use blackmodel_core::tensor_core::{
    accum_penalty, isa_latency_speedup_range, latency_spread, wgmma_fit_residual,
};
use blackmodel_core::workloads::llm_cell;
use blackmodel_core::{builtin_spec, GpuSpec, Precision};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

type Check = Result<(), String>;
type Criterion = (&'static str, fn() -> Check);

const CHUNKS: [u64; 4] = [32768, 65536, 131072, 262144];

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn specs() -> (GpuSpec, GpuSpec) {
    (builtin_spec("B200").unwrap(), builtin_spec("H200").unwrap())
}

fn golden_tables() -> Check {
    let (b, h) = specs();
    let mut bad = Vec::new();
    for id in TABLE_IDS {
        let r = reproduce(id, &b, &h).map_err(|e| e.to_string())?;
        if !r.pass {
            bad.push(format!(
                "{id} max_rel_error={:.4} worst={}",
                r.max_rel_error,
                r.worst.unwrap_or_default()
            ));
        }
    }
    ensure(bad.is_empty(), || bad.join("; "))
}

fn identities() -> Check {
    let (b, h) = specs();
    let de = b.de.as_ref().unwrap();
    for p in de.format_profiles.values() {
        if let (Ok(i), Ok(r)) = (p.input_gbps(), p.ratio()) {
            ensure(rel(p.output_gbps() / r, i) <= 0.05, || {
                format!("format ratio identity {}", p.name)
            })?;
        }
    }
    for p in de.pattern_profiles.values() {
        let derived = p.output.gbps() / p.compression_ratio;
        ensure(rel(derived, p.input.gbps()) <= 0.015, || {
            format!("ratio identity {}", p.name)
        })?;
    }
    ensure(de.pattern_profiles.len() == 4, || {
        format!("{} ratio rows", de.pattern_profiles.len())
    })?;
    for c in CHUNKS {
        let p = chunk_profile(&b, c).unwrap();
        ensure(
            rel(p.single_rate.gbps() * p.max_speedup, p.peak.gbps()) <= 0.02,
            || format!("peak identity {c}"),
        )?;
    }
    let mut n = 0;
    for s in [&b, &h] {
        let t = s.llm_latency.as_ref().unwrap();
        for ((&batch, &lat), &tps) in t
            .batches
            .iter()
            .zip(&t.latency_ms)
            .zip(t.tok_per_s.as_deref().unwrap_or(&[]))
        {
            let d = batch as f64 * t.seq_len as f64 / (lat / 1e3);
            ensure(rel(d, tps) <= 0.005, || {
                format!("tok/s identity {} batch {batch}", s.name)
            })?;
            n += 1;
        }
    }
    ensure(n >= 6, || format!("{n} tok/s rows"))?;
    for s in [&b, &h] {
        for c in derived_peak_consistency(s) {
            ensure(c.rel_error <= 0.005, || {
                format!("derived peak {} {:?}", s.name, c.precision)
            })?;
        }
    }
    Ok(())
}

fn tensor_laws() -> Check {
    let (b, h) = specs();
    ensure(wgmma_fit_residual(&h) == Some(0.0), || {
        format!("wgmma residual {:?}", wgmma_fit_residual(&h))
    })?;
    let spread = latency_spread(&b).unwrap();
    ensure(spread <= 1.05, || format!("tcgen05 spread {spread}"))?;
    let (lo, hi) = isa_latency_speedup_range(&b, &h).map_err(|e| e.to_string())?;
    ensure((lo - 2.9).abs() <= 0.1 && (hi - 11.6).abs() <= 0.1, || {
        format!("isa range ({lo}, {hi})")
    })?;
    let p = accum_penalty(&b, Precision::Fp16, Precision::Fp32).map_err(|e| e.to_string())?;
    ensure((p - 0.5).abs() <= 0.01, || format!("accum penalty {p}"))
}

fn lpfloat_suite() -> Check {
    for f in ALL_FORMATS {
        for code in 0..f.code_count() {
            let v = f.decode(code).map_err(|e| e.to_string())?;
            if !v.is_nan() {
                ensure(f.encode(v) == code, || format!("{} code {code:#x}", f.name))?;
            }
        }
    }
    let mut want: Vec<f64> = [0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0]
        .iter()
        .flat_map(|v| [-v, *v])
        .collect();
    want.sort_by(f64::total_cmp);
    want.dedup();
    let mut got = E2M1.enumerate_values();
    got.dedup();
    ensure(got == want, || format!("e2m1 values {got:?}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(10_000);
    for _ in 0..10_000 {
        for f in ALL_FORMATS {
            let (x, y): (f64, f64) = (
                rng.random_range(-500.0..500.0),
                rng.random_range(-500.0..500.0),
            );
            let (x, y) = if f.sign_bits == 0 {
                (x.abs(), y.abs())
            } else {
                (x, y)
            };
            let (lo, hi) = (x.min(y), x.max(y));
            ensure(f.quantize(lo) <= f.quantize(hi), || {
                format!("{} monotonicity {lo} {hi}", f.name)
            })?;
            if f.sign_bits == 1 {
                let s = 1 << (f.bits() - 1);
                ensure(f.encode(-x.abs()) == f.encode(x.abs()) ^ s, || {
                    format!("{} symmetry {x}", f.name)
                })?;
            }
        }
    }

    let bm = Matrix::new(
        4,
        4,
        (0..16)
            .map(|i| [0.5, -1.0, 3.0, 6.0, 1.5, -4.0, 2.0, 0.0][i % 8])
            .collect(),
    )
    .unwrap();
    for q in [Quantizer::Scalar(E2M1), Quantizer::Block(MXFP4)] {
        let c = quantized_gemm(&Matrix::identity(4), &bm, q, Accumulator::Exact)
            .map_err(|e| e.to_string())?;
        ensure(c == bm, || format!("identity oracle {}", q.name()))?;
    }
    for _ in 0..200 {
        let a: Vec<f64> = (0..16).map(|_| StandardNormal.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..16).map(|_| StandardNormal.sample(&mut rng)).collect();
        let q = Quantizer::Block(NVFP4);
        let c = quantized_gemm(
            &Matrix::new(4, 4, a.clone()).unwrap(),
            &Matrix::new(4, 4, b.clone()).unwrap(),
            q,
            Accumulator::Exact,
        )
        .map_err(|e| e.to_string())?;
        for i in 0..4 {
            let r = q.round_trip(&a[i * 4..i * 4 + 4]).0;
            for j in 0..4 {
                let col = q
                    .round_trip(&(0..4).map(|t| b[t * 4 + j]).collect::<Vec<_>>())
                    .0;
                let want: f64 = r.iter().zip(&col).map(|(x, y)| x * y).sum();
                ensure(c.get(i, j) == want, || format!("brute force ({i},{j})"))?;
            }
        }
    }
    Ok(())
}

fn de_fit() -> Check {
    let (b, _) = specs();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for c in CHUNKS {
        let truth = chunk_profile(&b, c).unwrap();
        for (noise, tol) in [(0.0, 0.01), (0.02, 0.05)] {
            let pts: Vec<(u32, f64)> = sweep_concurrencies()
                .map(|x| {
                    let e = if noise > 0.0 {
                        rng.random_range(-noise..=noise)
                    } else {
                        0.0
                    };
                    (x, truth.aggregate_gbps(x as f64) * (1.0 + e))
                })
                .collect();
            let f = fit_chunk_model(&pts, c).map_err(|e| e.to_string())?.profile;
            let errs = [
                rel(f.single_rate.gbps(), truth.single_rate.gbps()),
                rel(f.peak.gbps(), truth.peak.gbps()),
                rel(f.pipeline_depth as f64, truth.pipeline_depth as f64),
                rel(f.saturation_batch as f64, truth.saturation_batch as f64),
            ];
            let worst = errs.iter().cloned().fold(0.0, f64::max);
            ensure(worst <= tol, || format!("{c} at noise {noise}: {worst:.4}"))?;
        }
    }
    Ok(())
}

fn ledger() -> Check {
    let o = Command::new(env!("CARGO_BIN_EXE_blackmodel"))
        .args(["ledger", "--output", "csv"])
        .output()
        .map_err(|e| e.to_string())?;
    ensure(o.status.success(), || "ledger exited non-zero".into())?;
    let out = String::from_utf8_lossy(&o.stdout);
    for id in [
        "fp16-peak-2x",
        "llm-token-scale",
        "inference-decomposition",
        "fp64-theoretical-peak",
    ] {
        ensure(out.contains(id), || format!("{id} missing"))?;
    }
    Ok(())
}

fn property_suites() -> Check {
    let (b, h) = specs();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..2000 {
        let (x, y) = (rng.random_range(1u32..512), rng.random_range(1u32..512));
        let (lo, hi) = (x.min(y), x.max(y));
        let (el, eh) = (tile_efficiency(lo, lo), tile_efficiency(hi, hi));
        if hi <= 64 {
            ensure(el <= eh, || format!("tile efficiency {lo} {hi}"))?;
        }
        if lo >= 64 && hi <= 128 {
            ensure(el == eh, || format!("tile plateau {lo} {hi}"))?;
        }

        let c = CHUNKS[rng.random_range(0..4)];
        let (p, q) = (rng.random_range(1u32..4096), rng.random_range(1u32..4096));
        let e1 = batch_throughput(&b, c, p.min(q)).unwrap().efficiency;
        let e2 = batch_throughput(&b, c, p.max(q)).unwrap().efficiency;
        ensure(e2 <= e1 + 1e-12, || format!("batch efficiency {c} {p} {q}"))?;

        for s in [&b, &h] {
            let (u, v) = (
                rng.random_range(1e6..1e12f64),
                rng.random_range(1e6..1e12f64),
            );
            let l1 = stream_triad(s, u.min(v)).unwrap().efficiency;
            let l2 = stream_triad(s, u.max(v)).unwrap().efficiency;
            let levels = [
                s.memory.stream_eff.small_fraction,
                s.memory.stream_eff.large_fraction,
            ];
            ensure(levels.contains(&l1) && levels.contains(&l2), || {
                "stream level".into()
            })?;
            ensure(!(l1 == levels[1] && l2 == levels[0]), || {
                "stream switches back".into()
            })?;
        }
    }
    let models: std::collections::BTreeSet<&String> = b.llm.keys().map(|(m, _)| m).collect();
    let mut ordered = 0;
    for m in models {
        let cells: Result<Vec<_>, _> = [Precision::Fp4, Precision::Fp8, Precision::Fp16]
            .iter()
            .map(|p| llm_cell(&b, m, *p))
            .collect();
        let Ok(c) = cells else { continue };
        ensure(
            c[0].tok_per_s > c[1].tok_per_s && c[1].tok_per_s > c[2].tok_per_s,
            || format!("{m} tok/s order"),
        )?;
        ensure(
            c[0].bw_util_pct < c[1].bw_util_pct && c[1].bw_util_pct < c[2].bw_util_pct,
            || format!("{m} BW trend"),
        )?;
        ordered += 1;
    }
    ensure(ordered > 0, || "no model with fp4/fp8/fp16".into())
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 7] = [
        ("golden tables T1-T14", golden_tables),
        ("identity suite", identities),
        ("tensor core laws", tensor_laws),
        ("lpfloat exhaustive suite", lpfloat_suite),
        ("decompression fit self-consistency", de_fit),
        ("inconsistency ledger", ledger),
        ("invariant property suites", property_suites),
    ];
    let mut out = std::io::stdout().lock();
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(()) => writeln!(out, "criterion {}: PASS {name}", i + 1).unwrap(),
            Err(e) => {
                writeln!(out, "criterion {}: FAIL {name}: {e}", i + 1).unwrap();
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
