use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// How the top exponent field is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Specials {
    /// Every code is a finite number.
    FiniteOnly,
    /// All-ones exponent and mantissa is NaN; everything else is finite (e4m3).
    SingleNan,
    /// All-ones exponent is Inf (mantissa 0) or NaN.
    Ieee,
    /// No sign, no mantissa: code `2^exp_bits - 1` is NaN (e8m0).
    ScaleNan,
}

/// A micro floating-point encoding of at most 8 bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FloatFormat {
    pub name: &'static str,
    pub sign_bits: u32,
    pub exp_bits: u32,
    pub man_bits: u32,
    pub bias: i32,
    pub specials: Specials,
}

pub const E2M1: FloatFormat = FloatFormat::new("e2m1", 1, 2, 1, Specials::FiniteOnly);
pub const E3M2: FloatFormat = FloatFormat::new("e3m2", 1, 3, 2, Specials::FiniteOnly);
pub const E2M3: FloatFormat = FloatFormat::new("e2m3", 1, 2, 3, Specials::FiniteOnly);
pub const E4M3: FloatFormat = FloatFormat::new("e4m3", 1, 4, 3, Specials::SingleNan);
pub const E5M2: FloatFormat = FloatFormat::new("e5m2", 1, 5, 2, Specials::Ieee);
pub const E8M0: FloatFormat = FloatFormat::new("e8m0", 0, 8, 0, Specials::ScaleNan);

pub const ALL_FORMATS: [FloatFormat; 6] = [E2M1, E3M2, E2M3, E4M3, E5M2, E8M0];

impl FloatFormat {
    /// Format with the default bias `2^(exp_bits-1) - 1`.
    pub const fn new(
        name: &'static str,
        sign_bits: u32,
        exp_bits: u32,
        man_bits: u32,
        specials: Specials,
    ) -> Self {
        FloatFormat {
            name,
            sign_bits,
            exp_bits,
            man_bits,
            bias: (1 << (exp_bits - 1)) - 1,
            specials,
        }
    }

    pub fn by_name(name: &str) -> Result<FloatFormat> {
        let lower = name.to_ascii_lowercase();
        ALL_FORMATS
            .into_iter()
            .find(|f| f.name == lower)
            .ok_or_else(|| Error::Unsupported(format!("unknown float format `{name}`")))
    }

    pub fn bits(&self) -> u32 {
        self.sign_bits + self.exp_bits + self.man_bits
    }

    pub fn code_count(&self) -> u32 {
        1 << self.bits()
    }

    /// True when no code encodes an infinity.
    pub fn finite_only(&self) -> bool {
        self.specials != Specials::Ieee
    }

    fn exp_max_field(&self) -> i32 {
        (1 << self.exp_bits) - 1
    }

    fn sign_mask(&self) -> u32 {
        if self.sign_bits == 1 {
            1 << (self.exp_bits + self.man_bits)
        } else {
            0
        }
    }

    pub fn nan_code(&self) -> Option<u32> {
        let mag = (1 << (self.exp_bits + self.man_bits)) - 1;
        match self.specials {
            Specials::FiniteOnly => None,
            Specials::SingleNan | Specials::ScaleNan | Specials::Ieee => Some(mag),
        }
    }

    /// Largest finite value.
    pub fn max_finite(&self) -> f64 {
        let m = self.man_bits as i32;
        let top = self.exp_max_field();
        match self.specials {
            Specials::FiniteOnly => (2.0 - pow2(-m)) * pow2(top - self.bias),
            Specials::SingleNan => (2.0 - pow2(1 - m)) * pow2(top - self.bias),
            Specials::Ieee => (2.0 - pow2(-m)) * pow2(top - 1 - self.bias),
            Specials::ScaleNan => pow2(top - 1 - self.bias),
        }
    }

    /// Smallest positive value (the smallest subnormal when there are mantissa bits).
    pub fn min_positive(&self) -> f64 {
        if self.man_bits == 0 {
            pow2(-self.bias)
        } else {
            pow2(1 - self.bias - self.man_bits as i32)
        }
    }

    fn max_finite_code(&self) -> u32 {
        let mag_all = (1u32 << (self.exp_bits + self.man_bits)) - 1;
        match self.specials {
            Specials::FiniteOnly => mag_all,
            Specials::SingleNan | Specials::ScaleNan => mag_all - 1,
            Specials::Ieee => {
                ((self.exp_max_field() as u32 - 1) << self.man_bits) | ((1 << self.man_bits) - 1)
            }
        }
    }

    /// Exact value of a code. NaN and Inf codes decode to the matching f64 specials.
    pub fn decode(&self, code: u32) -> Result<f64> {
        if code >= self.code_count() {
            return Err(Error::InvalidCode {
                code,
                bits: self.bits(),
            });
        }
        let m = self.man_bits;
        let sign = if code & self.sign_mask() != 0 {
            -1.0
        } else {
            1.0
        };
        let e = ((code >> m) & ((1 << self.exp_bits) - 1)) as i32;
        let man = code & ((1 << m) - 1);
        let top = self.exp_max_field();
        match self.specials {
            Specials::Ieee if e == top => {
                return Ok(if man == 0 {
                    sign * f64::INFINITY
                } else {
                    f64::NAN
                });
            }
            Specials::SingleNan if e == top && man == (1 << m) - 1 => return Ok(f64::NAN),
            Specials::ScaleNan if e == top => return Ok(f64::NAN),
            _ => {}
        }
        let v = if m == 0 {
            pow2(e - self.bias)
        } else if e == 0 {
            man as f64 * pow2(1 - self.bias - m as i32)
        } else {
            (1.0 + man as f64 / (1u32 << m) as f64) * pow2(e - self.bias)
        };
        Ok(sign * v)
    }

    /// Round-to-nearest-even encoding. Finite values beyond the range saturate
    /// to the largest finite magnitude; NaN maps to the NaN code (or +0 when the
    /// format has none); Inf maps to Inf where the format has one.
    pub fn encode(&self, x: f64) -> u32 {
        if x.is_nan() {
            return self.nan_code().unwrap_or(0);
        }
        if self.sign_bits == 0 {
            if x <= 0.0 {
                return 0;
            }
            return self.encode_magnitude(x);
        }
        let sign = if x.is_sign_negative() {
            self.sign_mask()
        } else {
            0
        };
        sign | self.encode_magnitude(x.abs())
    }

    fn encode_magnitude(&self, a: f64) -> u32 {
        if a.is_infinite() {
            if self.specials == Specials::Ieee {
                return (self.exp_max_field() as u32) << self.man_bits;
            }
            return self.max_finite_code();
        }
        if a >= self.max_finite() {
            return self.max_finite_code();
        }
        let m = self.man_bits as i32;
        if m == 0 {
            return self.encode_power_of_two(a);
        }
        let emin = 1 - self.bias;
        let e = floor_log2(a).max(emin);
        let q = pow2(e - m);
        let n = (a / q).round_ties_even();
        let value = n * q;
        if value > self.max_finite() {
            return self.max_finite_code();
        }
        if value == 0.0 {
            return 0;
        }
        if value < pow2(emin) {
            return n as u32;
        }
        let ev = floor_log2(value);
        let man = (value / pow2(ev - m)) as u32 - (1 << m);
        (((ev + self.bias) as u32) << m) | man
    }

    /// Nearest power of two, ties to the even code.
    fn encode_power_of_two(&self, a: f64) -> u32 {
        let lo_exp = -self.bias;
        if a <= pow2(lo_exp) {
            return 0;
        }
        let k = floor_log2(a);
        let lo = pow2(k);
        let code_lo = (k + self.bias) as u32;
        if a == lo {
            return code_lo;
        }
        let mid = 1.5 * lo;
        if a < mid || (a == mid && code_lo.is_multiple_of(2)) {
            code_lo
        } else {
            (code_lo + 1).min(self.max_finite_code())
        }
    }

    /// Value after a round trip through the format.
    pub fn quantize(&self, x: f64) -> f64 {
        self.decode(self.encode(x))
            .expect("encode yields valid codes")
    }

    /// Every finite value, with both zeros collapsed, strictly increasing.
    pub fn enumerate_values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = (0..self.code_count())
            .map(|c| self.decode(c).unwrap())
            .filter(|x| x.is_finite())
            .map(|x| if x == 0.0 { 0.0 } else { x })
            .collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v.dedup();
        v
    }
}

impl fmt::Display for FloatFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name)
    }
}

pub(crate) fn pow2(e: i32) -> f64 {
    2f64.powi(e)
}

/// floor(log2(a)) for positive finite a, exact.
fn floor_log2(a: f64) -> i32 {
    let bits = a.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    if exp == 0 {
        // f64 subnormal
        let man = bits & ((1u64 << 52) - 1);
        -1074 + (63 - man.leading_zeros() as i32)
    } else {
        exp - 1023
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force oracle: nearest enumerated value, ties to the even code.
    fn oracle_encode(f: &FloatFormat, x: f64) -> f64 {
        let mut best: Option<(f64, u32)> = None;
        for c in 0..f.code_count() {
            let v = f.decode(c).unwrap();
            if !v.is_finite() {
                continue;
            }
            let d = (v - x).abs();
            best = match best {
                None => Some((v, c)),
                Some((bv, bc)) => {
                    let bd = (bv - x).abs();
                    if d < bd || (d == bd && c % 2 == 0 && bc % 2 == 1) {
                        Some((v, c))
                    } else {
                        Some((bv, bc))
                    }
                }
            };
        }
        best.unwrap().0
    }

    #[test]
    fn e2m1_value_set() {
        let pos = [0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0];
        let mut want: Vec<f64> = pos.iter().rev().map(|v| -v).filter(|v| *v != 0.0).collect();
        want.extend(pos);
        assert_eq!(E2M1.enumerate_values(), want);
        assert_eq!(E2M1.decode(0b0001).unwrap(), 0.5);
    }

    #[test]
    fn known_maxima() {
        assert_eq!(E4M3.max_finite(), 448.0);
        assert_eq!(*E4M3.enumerate_values().last().unwrap(), 448.0);
        assert_eq!(E5M2.max_finite(), 57344.0);
        assert_eq!(E3M2.max_finite(), 28.0);
        assert_eq!(E2M3.max_finite(), 7.5);
        assert_eq!(E2M1.max_finite(), 6.0);
        for f in ALL_FORMATS {
            assert_eq!(*f.enumerate_values().last().unwrap(), f.max_finite(), "{f}");
            let smallest_pos = f.enumerate_values().into_iter().find(|v| *v > 0.0).unwrap();
            assert_eq!(smallest_pos, f.min_positive(), "{f}");
        }
    }

    #[test]
    fn e8m0_is_powers_of_two() {
        let v = E8M0.enumerate_values();
        assert_eq!(v.len(), 255);
        for (i, x) in v.iter().enumerate() {
            assert_eq!(*x, 2f64.powi(i as i32 - 127));
        }
        assert_eq!(E8M0.decode(127).unwrap(), 1.0);
        assert!(E8M0.decode(255).unwrap().is_nan());
    }

    #[test]
    fn encode_examples() {
        assert_eq!(E2M1.decode(E2M1.encode(5.1)).unwrap(), 6.0);
        assert_eq!(E2M1.encode(0.0), 0);
        assert_eq!(E2M1.decode(E2M1.encode(1.0e9)).unwrap(), 6.0);
        assert_eq!(E2M1.decode(E2M1.encode(-1.0e9)).unwrap(), -6.0);
        // 2.5 lies between 2 (code 4) and 3 (code 5): tie to even
        assert_eq!(E2M1.quantize(2.5), 2.0);
        assert_eq!(E2M1.quantize(3.5), 4.0);
        assert_eq!(E2M1.quantize(0.25), 0.0);
        assert_eq!(E4M3.quantize(470.0), 448.0);
        assert!(E4M3.decode(E4M3.encode(f64::NAN)).unwrap().is_nan());
        assert_eq!(
            E5M2.decode(E5M2.encode(f64::INFINITY)).unwrap(),
            f64::INFINITY
        );
        // 3 is equidistant from 2 (code 128) and 4 (code 129)
        assert_eq!(E8M0.quantize(3.0), 2.0);
        assert_eq!(E8M0.quantize(3.1), 4.0);
        assert_eq!(E8M0.quantize(6.0), 8.0);
        assert_eq!(E8M0.quantize(0.0), 2f64.powi(-127));
    }

    #[test]
    fn invalid_code() {
        assert_eq!(
            E2M1.decode(16),
            Err(Error::InvalidCode { code: 16, bits: 4 })
        );
        assert!(E4M3.decode(255).is_ok());
        assert!(E3M2.decode(64).is_err());
    }

    #[test]
    fn exhaustive_round_trip() {
        for f in ALL_FORMATS {
            for c in 0..f.code_count() {
                let v = f.decode(c).unwrap();
                if v.is_nan() {
                    continue;
                }
                let back = f.encode(v);
                assert_eq!(f.decode(back).unwrap(), v, "{f} code {c:#x}");
                if v != 0.0 || c == 0 {
                    assert_eq!(back, c, "{f} code {c:#x}");
                }
            }
        }
    }

    #[test]
    fn matches_brute_force_on_midpoints_and_grid() {
        for f in ALL_FORMATS {
            let vals = f.enumerate_values();
            let mut probes = Vec::new();
            for w in vals.windows(2) {
                let mid = 0.5 * (w[0] + w[1]);
                probes.extend([
                    w[0],
                    mid,
                    w[1],
                    0.25 * w[0] + 0.75 * w[1],
                    0.75 * w[0] + 0.25 * w[1],
                ]);
            }
            probes.push(f.max_finite() * 1.01);
            probes.push(-f.max_finite() * 3.0);
            for x in probes {
                if f.sign_bits == 0 && x <= 0.0 {
                    continue;
                }
                assert_eq!(f.quantize(x), oracle_encode(&f, x), "{f} x={x}");
            }
        }
    }
}
