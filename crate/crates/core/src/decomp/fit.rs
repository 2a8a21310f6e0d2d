use serde::Serialize;

use super::ChunkProfile;
use crate::error::{Error, Result};
use crate::units::Bandwidth;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChunkFit {
    pub profile: ChunkProfile,
    /// RMS of (model - measured) in GB/s over the input points.
    pub rms_residual_gbps: f64,
    pub points: usize,
}

/// Reads a `concurrency,gbps` measurement CSV.
pub fn parse_measurements(text: &str) -> Result<Vec<(u32, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| Error::parse(1, 1, e.to_string()))?
        .clone();
    if headers.len() != 2 || &headers[0] != "concurrency" || &headers[1] != "gbps" {
        return Err(Error::parse(1, 1, "expected header `concurrency,gbps`"));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(line, 1, e.to_string()))?;
        if rec.len() != 2 {
            return Err(Error::parse(line, 1, "expected two fields"));
        }
        let b: u32 =
            rec[0].parse().ok().filter(|b| *b > 0).ok_or_else(|| {
                Error::parse(line, 1, format!("invalid concurrency `{}`", &rec[0]))
            })?;
        let t: f64 = rec[1]
            .parse()
            .ok()
            .filter(|t: &f64| t.is_finite() && *t > 0.0)
            .ok_or_else(|| {
                Error::parse(
                    line,
                    rec[0].len() + 2,
                    format!("invalid gbps `{}`", &rec[1]),
                )
            })?;
        out.push((b, t));
    }
    Ok(out)
}

/// Least-squares fit of (single rate, depth, peak, saturation) to a measured
/// batching curve.
///
/// Depth and saturation are searched over the measured concurrencies; for each
/// pair, log(single rate) and log(peak) enter the model linearly in log space
/// and are solved in closed form. The pair with the smallest log-space sum of
/// squares wins.
pub fn fit_chunk_model(measurements: &[(u32, f64)], chunk_bytes: u64) -> Result<ChunkFit> {
    const PARAMS: usize = 4;
    if measurements.len() < PARAMS {
        return Err(Error::IllConditioned(format!(
            "{} points for {PARAMS} parameters",
            measurements.len()
        )));
    }
    let mut pts = measurements.to_vec();
    pts.sort_by_key(|p| p.0);
    if pts.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::IllConditioned("duplicate concurrency".into()));
    }
    if pts[0].0 != 1 {
        return Err(Error::IllConditioned(
            "measurements must include concurrency 1".into(),
        ));
    }
    if pts.iter().any(|p| !(p.1 > 0.0 && p.1.is_finite())) {
        return Err(Error::IllConditioned("throughputs must be positive".into()));
    }
    let logs: Vec<(f64, f64)> = pts
        .iter()
        .map(|&(b, t)| ((b as f64).ln(), t.ln()))
        .collect();

    let mut best: Option<(f64, u32, u32, f64, f64)> = None;
    for (di, &(d, _)) in pts.iter().enumerate() {
        for &(s, _) in &pts[di..] {
            let Some((lr, lp, ssr)) = solve(&logs, d, s) else {
                continue;
            };
            if best.is_none_or(|b| ssr < b.0 - 1e-15) {
                best = Some((ssr, d, s, lr, lp));
            }
        }
    }
    let (_, d, s, lr, lp) = best
        .ok_or_else(|| Error::IllConditioned("no depth/saturation pair is identifiable".into()))?;
    let r = lr.exp();
    let p = lp.exp();
    let profile = ChunkProfile {
        chunk_bytes,
        single_rate: Bandwidth::from_gbps(r),
        pipeline_depth: d,
        saturation_batch: s,
        peak: Bandwidth::from_gbps(p),
        max_speedup: p / r,
    };
    let sq: f64 = pts
        .iter()
        .map(|&(b, t)| (profile.aggregate_gbps(b as f64) - t).powi(2))
        .sum();
    Ok(ChunkFit {
        profile,
        rms_residual_gbps: (sq / pts.len() as f64).sqrt(),
        points: pts.len(),
    })
}

/// For fixed (d, s): each point gives `log T = u*log r + v*log P + c`.
/// Returns (log r, log P, residual sum of squares).
fn solve(logs: &[(f64, f64)], d: u32, s: u32) -> Option<(f64, f64, f64)> {
    let ld = (d as f64).ln();
    let ls = (s as f64).ln();
    let rows: Vec<(f64, f64, f64, f64)> = logs
        .iter()
        .map(|&(lb, lt)| {
            let (u, v, c) = if lb <= ld + 1e-12 {
                (1.0, 0.0, lb)
            } else if lb <= ls + 1e-12 {
                let w = (lb - ld) / (ls - ld);
                (1.0 - w, w, (1.0 - w) * ld)
            } else {
                (0.0, 1.0, 0.0)
            };
            (u, v, c, lt)
        })
        .collect();
    let (mut suu, mut suv, mut svv, mut suy, mut svy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(u, v, c, lt) in &rows {
        let y = lt - c;
        suu += u * u;
        suv += u * v;
        svv += v * v;
        suy += u * y;
        svy += v * y;
    }
    let det = suu * svv - suv * suv;
    if det.abs() < 1e-9 * (suu * svv).max(1e-300) || svv == 0.0 {
        return None;
    }
    let lr = (suy * svv - svy * suv) / det;
    let lp = (svy * suu - suy * suv) / det;
    // the peak must not sit below the linear region's top
    if lp < lr + ld - 1e-9 {
        return None;
    }
    let ssr = rows
        .iter()
        .map(|&(u, v, c, lt)| (u * lr + v * lp + c - lt).powi(2))
        .sum();
    Some((lr, lp, ssr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::model::sweep_concurrencies;
    use crate::machine::builtin_spec;

    fn samples(c: &ChunkProfile) -> Vec<(u32, f64)> {
        sweep_concurrencies()
            .map(|b| (b, c.aggregate_gbps(b as f64)))
            .collect()
    }

    #[test]
    fn recovers_noiseless_256k() {
        let b = builtin_spec("B200").unwrap();
        let c = b.de.unwrap().chunk_profiles[&262144].clone();
        let fit = fit_chunk_model(&samples(&c), 262144).unwrap();
        assert!((fit.profile.single_rate.gbps() - 3.21).abs() / 3.21 < 0.01);
        assert!((fit.profile.peak.gbps() - 151.6).abs() / 151.6 < 0.01);
        assert_eq!(fit.profile.pipeline_depth, 4);
        assert_eq!(fit.profile.saturation_batch, 1024);
        assert!(fit.rms_residual_gbps < 1e-6);
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(
            fit_chunk_model(&[(1, 1.0), (2, 2.0)], 1),
            Err(Error::IllConditioned(_))
        ));
        assert!(matches!(
            fit_chunk_model(&[(2, 1.0), (4, 2.0), (8, 3.0), (16, 3.5)], 1),
            Err(Error::IllConditioned(_))
        ));
    }

    #[test]
    fn csv_parsing() {
        let pts = parse_measurements("concurrency,gbps\n1,0.75\n2, 1.5\n").unwrap();
        assert_eq!(pts, vec![(1, 0.75), (2, 1.5)]);
        assert!(matches!(
            parse_measurements("b,t\n1,2\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_measurements("concurrency,gbps\n1,abc\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
