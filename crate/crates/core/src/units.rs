use std::fmt;

use serde::Serialize;

pub const KIB: u64 = 1024;
pub const GB: f64 = 1e9;

/// Bytes per second. Values are held as whole bytes/s so that a value written
/// back in TB/s or GB/s reloads bit-identically.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct Bandwidth(f64);

impl Bandwidth {
    pub fn from_bytes_per_sec(v: f64) -> Self {
        Bandwidth(v.round())
    }

    pub fn from_gbps(v: f64) -> Self {
        Self::from_bytes_per_sec(v * 1e9)
    }

    pub fn from_tbps(v: f64) -> Self {
        Self::from_bytes_per_sec(v * 1e12)
    }

    pub fn bytes_per_sec(self) -> f64 {
        self.0
    }

    pub fn gbps(self) -> f64 {
        self.0 / 1e9
    }

    pub fn tbps(self) -> f64 {
        self.0 / 1e12
    }
}

impl fmt::Display for Bandwidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 >= 1e12 {
            write!(f, "{} TB/s", self.tbps())
        } else {
            write!(f, "{} GB/s", self.gbps())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_round_trip_is_exact() {
        for v in [173.23, 0.85, 14.63, 219.80, 1.2276, 2.8343, 462.37] {
            let bw = Bandwidth::from_gbps(v);
            assert_eq!(Bandwidth::from_gbps(bw.gbps()), bw);
            assert_eq!(bw.gbps(), v);
        }
        assert_eq!(Bandwidth::from_tbps(3.8).tbps(), 3.8);
    }
}
