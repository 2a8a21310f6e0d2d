use blackmodel_core::decomp::{batch_throughput, sensitivity, ChunkProfile};
use blackmodel_core::lpfloat::{
    quantized_gemm, Accumulator, Matrix, Quantizer, ALL_FORMATS, MXFP4, NVFP4,
};
use blackmodel_core::machine::to_machine_file;
use blackmodel_core::memsys::{
    access_latency, chained_gemm_traffic, stream_triad, tile_efficiency, LatencyTier,
};
use blackmodel_core::units::Bandwidth;
use blackmodel_core::workloads::{dgemm_efficiency, llm_cell, llm_latency};
use blackmodel_core::{builtin_spec, load_machine_file, GpuSpec, Precision};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

fn cfg(cases: u32) -> Config {
    Config {
        cases,
        rng_seed: RngSeed::Fixed(0x5eed),
        failure_persistence: None,
        ..Config::default()
    }
}

fn b200() -> GpuSpec {
    builtin_spec("B200").unwrap()
}

fn format_index() -> impl Strategy<Value = usize> {
    0..ALL_FORMATS.len()
}

proptest! {
    #![proptest_config(cfg(10_000))]

    #[test]
    fn encode_is_monotone(fi in format_index(), a in -1.0e3f64..1.0e3, b in -1.0e3f64..1.0e3) {
        let f = ALL_FORMATS[fi];
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (lo, hi) = if f.sign_bits == 0 { (lo.abs().min(hi.abs()), lo.abs().max(hi.abs())) } else { (lo, hi) };
        let (qlo, qhi) = (f.quantize(lo), f.quantize(hi));
        prop_assert!(qlo <= qhi, "{} {lo} -> {qlo}, {hi} -> {qhi}", f.name);
    }

    #[test]
    fn encode_is_sign_symmetric(fi in 0usize..5, x in 0.0f64..1.0e3) {
        let f = ALL_FORMATS[fi];
        prop_assert_eq!(f.sign_bits, 1);
        let sign = 1u32 << (f.bits() - 1);
        prop_assert_eq!(f.encode(-x), f.encode(x) ^ sign, "{} {}", f.name, x);
    }

    #[test]
    fn scalar_quantize_is_idempotent(fi in format_index(), x in -1.0e3f64..1.0e3) {
        let f = ALL_FORMATS[fi];
        let x = if f.sign_bits == 0 { x.abs() } else { x };
        let q = f.quantize(x);
        prop_assert_eq!(f.quantize(q).to_bits(), q.to_bits());
    }
}

proptest! {
    #![proptest_config(cfg(512))]

    #[test]
    fn block_quantize_is_idempotent(v in prop::collection::vec(-100.0f64..100.0, 1..80), nv in any::<bool>()) {
        let bf = if nv { NVFP4 } else { MXFP4 };
        let once = bf.fake_quantize(&v);
        let twice = bf.fake_quantize(&once);
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn gemm_matches_brute_force(
        a in prop::collection::vec(-8.0f64..8.0, 16),
        b in prop::collection::vec(-8.0f64..8.0, 16),
        nv in any::<bool>(),
    ) {
        let bf = if nv { NVFP4 } else { MXFP4 };
        let am = Matrix::new(4, 4, a.clone()).unwrap();
        let bm = Matrix::new(4, 4, b.clone()).unwrap();
        let c = quantized_gemm(&am, &bm, bf, Accumulator::Exact).unwrap();
        let q = Quantizer::Block(bf);
        for i in 0..4 {
            let row = q.round_trip(&a[i * 4..i * 4 + 4]).0;
            for j in 0..4 {
                let col: Vec<f64> = (0..4).map(|t| b[t * 4 + j]).collect();
                let col = q.round_trip(&col).0;
                let want: f64 = row.iter().zip(&col).map(|(x, y)| x * y).sum();
                prop_assert_eq!(c.get(i, j), want);
            }
        }
    }

    #[test]
    fn tile_efficiency_piecewise(a in 1u32..512, b in 1u32..512) {
        let (lo, hi) = (a.min(b), a.max(b));
        let (elo, ehi) = (tile_efficiency(lo, lo), tile_efficiency(hi, hi));
        prop_assert_eq!(tile_efficiency(a, b), tile_efficiency(b, a));
        prop_assert_eq!(tile_efficiency(a, b), tile_efficiency(lo, lo));
        prop_assert!(elo > 0.0 && elo <= 1.0);
        if hi <= 64 {
            prop_assert!(elo <= ehi);
        }
        if (64..=128).contains(&lo) && hi <= 128 {
            prop_assert_eq!(elo, ehi);
            prop_assert_eq!(elo, 1.0);
        }
        if hi < 32 {
            prop_assert_eq!(elo, 0.45);
        }
        if lo > 128 {
            prop_assert_eq!(elo, 0.70);
        }
    }

    #[test]
    fn batch_efficiency_non_increasing(ci in 0usize..4, a in 1u32..4096, b in 1u32..4096) {
        let spec = b200();
        let chunk = [32768u64, 65536, 131072, 262144][ci];
        let (lo, hi) = (a.min(b), a.max(b));
        let el = batch_throughput(&spec, chunk, lo).unwrap().efficiency;
        let eh = batch_throughput(&spec, chunk, hi).unwrap().efficiency;
        prop_assert!(eh <= el + 1e-12, "{chunk}: eff({lo})={el} eff({hi})={eh}");
        prop_assert_eq!(batch_throughput(&spec, chunk, 1).unwrap().efficiency, 1.0);
    }

    #[test]
    fn synthetic_profiles_keep_efficiency_monotone(
        r in 0.1f64..10.0,
        dl in 0u32..6,
        sl in 1u32..6,
        frac in 0.0f64..1.0,
        a in 1u32..8192,
        b in 1u32..8192,
    ) {
        let d = 1u32 << dl;
        let s = d << sl;
        // peak anywhere between the linear top and linear growth to saturation
        let p = d as f64 * r + frac * (s as f64 * r - d as f64 * r);
        let c = ChunkProfile {
            chunk_bytes: 1,
            single_rate: Bandwidth::from_gbps(r),
            pipeline_depth: d,
            saturation_batch: s,
            peak: Bandwidth::from_gbps(p),
            max_speedup: p / r,
        };
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(c.point(hi).efficiency <= c.point(lo).efficiency + 1e-12);
        prop_assert!(c.aggregate_gbps(hi as f64) >= c.aggregate_gbps(lo as f64) - 1e-9);
    }

    #[test]
    fn stream_has_two_levels(gpu in prop::sample::select(vec!["B200", "H200"]), a in 1.0e6f64..1.0e12, b in 1.0e6f64..1.0e12) {
        let spec = builtin_spec(gpu).unwrap();
        let small = spec.memory.stream_eff.small_fraction;
        let large = spec.memory.stream_eff.large_fraction;
        let (lo, hi) = (a.min(b), a.max(b));
        let el = stream_triad(&spec, lo).unwrap().efficiency;
        let eh = stream_triad(&spec, hi).unwrap().efficiency;
        prop_assert!(el == small || el == large);
        prop_assert!(eh == small || eh == large);
        // the switch happens once: never back to the small level
        prop_assert!(!(el == large && eh == small));
        let t = spec.memory.stream_eff.threshold_bytes;
        prop_assert_eq!(el == small, 3.0 * lo < t);
    }

    #[test]
    fn llm_latency_strictly_increasing(gpu in prop::sample::select(vec!["B200", "H200"]), a in 1u32..4096, b in 1u32..4096) {
        prop_assume!(a != b);
        let spec = builtin_spec(gpu).unwrap();
        let (lo, hi) = (a.min(b), a.max(b));
        let tl = llm_latency(&spec, lo, 2048, None).unwrap().value;
        let th = llm_latency(&spec, hi, 2048, None).unwrap().value;
        prop_assert!(tl < th, "{gpu}: {lo} -> {tl}, {hi} -> {th}");
    }

    #[test]
    fn dgemm_efficiency_non_decreasing(gpu in prop::sample::select(vec!["B200", "H200"]), a in 64u64..65536, b in 64u64..65536) {
        let spec = builtin_spec(gpu).unwrap();
        let (lo, hi) = (a.min(b), a.max(b));
        let el = dgemm_efficiency(&spec, lo).unwrap().0;
        let eh = dgemm_efficiency(&spec, hi).unwrap().0;
        prop_assert!(el <= eh + 1e-12, "{gpu}: {lo} -> {el}, {hi} -> {eh}");
        prop_assert!(el > 0.0 && eh <= 1.0);
    }

    #[test]
    fn sensitivity_latency_band(ratio in 1.0f64..=246.0, out in 160.0f64..=220.0) {
        let s = sensitivity(&b200(), ratio, out).unwrap();
        prop_assert!((0.45..=0.70).contains(&s.latency_ms), "{ratio} {out} -> {}", s.latency_ms);
        prop_assert!((s.input_gbps * ratio - out).abs() < 1e-9 * out);
    }

    #[test]
    fn chained_gemm_saves_the_round_trip(m in 1u64..=128, n in 1u64..=512, k in 1u64..4096, e in prop::sample::select(vec![1u64, 2, 4])) {
        let spec = b200();
        let cap = spec.tmem.as_ref().unwrap().capacity_bytes;
        prop_assume!(m * n * e <= cap);
        let kept = chained_gemm_traffic(&spec, m, n, k, e, true).unwrap();
        let spilled = chained_gemm_traffic(&spec, m, n, k, e, false).unwrap();
        prop_assert_eq!(kept.bytes_saved_vs_baseline, 2 * m * n * e);
        prop_assert_eq!(spilled.bytes_saved_vs_baseline, 0);
        prop_assert_eq!(spilled.bytes_moved - kept.bytes_moved, 2 * m * n * e);
    }

    #[test]
    fn machine_file_round_trip(
        sm in 1u32..500,
        bw in 0.5f64..20.0,
        small in 0.05f64..1.0,
        large in 0.05f64..1.0,
        watts in 100.0f64..2000.0,
    ) {
        let mut spec = b200();
        spec.sm_count = sm;
        spec.memory.hbm_peak_bw = Bandwidth::from_tbps(bw);
        spec.memory.stream_eff.small_fraction = small;
        spec.memory.stream_eff.large_fraction = large;
        spec.power.board_power_watts = watts;
        let text = to_machine_file(&spec);
        let back = load_machine_file(&text).unwrap();
        prop_assert_eq!(back, spec);
    }
}

#[test]
fn tmem_miss_beats_baseline() {
    let b = b200();
    assert!(
        access_latency(&b, LatencyTier::TmemMiss).unwrap()
            < access_latency(&b, LatencyTier::BaselineGlobalMiss).unwrap()
    );
}

#[test]
fn precision_ordering_and_bw_trend() {
    let spec = b200();
    let models: Vec<String> = spec.llm.keys().map(|(m, _)| m.clone()).collect();
    let mut checked = 0;
    for m in models.iter().collect::<std::collections::BTreeSet<_>>() {
        let Ok(cells) = [Precision::Fp4, Precision::Fp8, Precision::Fp16]
            .map(|p| llm_cell(&spec, m, p))
            .into_iter()
            .collect::<Result<Vec<_>, _>>()
        else {
            continue;
        };
        assert!(
            cells[0].tok_per_s > cells[1].tok_per_s && cells[1].tok_per_s > cells[2].tok_per_s,
            "{m}"
        );
        assert!(
            cells[0].bw_util_pct < cells[1].bw_util_pct
                && cells[1].bw_util_pct < cells[2].bw_util_pct,
            "{m}"
        );
        checked += 1;
    }
    assert!(checked >= 1);
}
