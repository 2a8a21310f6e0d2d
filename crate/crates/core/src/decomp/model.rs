use serde::Serialize;

use super::ChunkProfile;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BatchPoint {
    pub concurrency: u32,
    pub aggregate_gbps: f64,
    pub efficiency: f64,
}

/// Aggregate throughput against concurrency, concurrency strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchCurve {
    pub points: Vec<BatchPoint>,
}

impl BatchCurve {
    /// Builds a curve from (concurrency, gbps) pairs; efficiency is relative
    /// to the b = 1 rate (or the first point scaled down to one op).
    pub fn from_measurements(points: &[(u32, f64)]) -> Result<Self> {
        let mut pts = points.to_vec();
        pts.sort_by_key(|p| p.0);
        if pts.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Precondition("duplicate concurrency".into()));
        }
        let (b0, t0) = *pts
            .first()
            .ok_or_else(|| Error::Precondition("empty curve".into()))?;
        let single = t0 / b0 as f64;
        Ok(BatchCurve {
            points: pts
                .into_iter()
                .map(|(b, t)| BatchPoint {
                    concurrency: b,
                    aggregate_gbps: t,
                    efficiency: t / (b as f64 * single),
                })
                .collect(),
        })
    }
}

/// Powers of two from 1 to 2048: the sweep used for model curves.
pub fn sweep_concurrencies() -> impl Iterator<Item = u32> {
    (0..=11).map(|i| 1u32 << i)
}

impl ChunkProfile {
    /// Exponent of the power law between pipeline depth and saturation.
    pub fn growth_exponent(&self) -> f64 {
        let r = self.single_rate.gbps();
        let d = self.pipeline_depth as f64;
        let s = self.saturation_batch as f64;
        if self.saturation_batch <= self.pipeline_depth {
            return 0.0;
        }
        (self.peak.gbps() / (d * r)).ln() / (s / d).ln()
    }

    /// Aggregate GB/s at concurrency `b`: linear up to the pipeline depth,
    /// a power law up to saturation, flat at peak beyond.
    pub fn aggregate_gbps(&self, b: f64) -> f64 {
        let r = self.single_rate.gbps();
        let d = self.pipeline_depth as f64;
        let s = self.saturation_batch as f64;
        if b <= d {
            b * r
        } else if b <= s {
            d * r * (b / d).powf(self.growth_exponent())
        } else {
            self.peak.gbps()
        }
    }

    pub fn point(&self, concurrency: u32) -> BatchPoint {
        let b = concurrency as f64;
        let t = self.aggregate_gbps(b);
        BatchPoint {
            concurrency,
            aggregate_gbps: t,
            efficiency: t / (b * self.single_rate.gbps()),
        }
    }

    pub fn model_curve(&self) -> BatchCurve {
        BatchCurve {
            points: sweep_concurrencies().map(|b| self.point(b)).collect(),
        }
    }
}

/// Largest concurrency whose efficiency is at least `threshold`.
pub fn pipeline_depth(curve: &BatchCurve, threshold: f64) -> Result<u32> {
    curve
        .points
        .iter()
        .filter(|p| p.efficiency >= threshold - 1e-12)
        .map(|p| p.concurrency)
        .max()
        .ok_or(Error::NoPoint)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "concurrency", rename_all = "snake_case")]
pub enum Saturation {
    At(u32),
    NotSaturated,
}

/// First concurrency where moving to the next point (the doubling, on a
/// power-of-two sweep) improves aggregate throughput by less than `margin`.
pub fn saturation_point(curve: &BatchCurve, margin: f64) -> Result<Saturation> {
    if curve.points.len() < 2 {
        return Err(Error::Precondition(
            "saturation needs at least two points".into(),
        ));
    }
    for w in curve.points.windows(2) {
        if w[1].aggregate_gbps / w[0].aggregate_gbps - 1.0 < margin {
            return Ok(Saturation::At(w[0].concurrency));
        }
    }
    Ok(Saturation::NotSaturated)
}
