//! Two's-complement fixed-point scalars.
//!
//! A [`FixedPoint`] stores a signed raw word together with its format
//! (`total_bits` b, `frac_bits` f) and represents the real value
//! `raw / 2^f`. All rounding is round-to-nearest, ties-to-even, and overflow
//! is a reported error rather than a silent wrap: the digital registers being
//! emulated have a declared width and the cost model depends on it.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Bit layout of a fixed-point register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedPointFormat {
    /// Total register width in bits, including the sign bit. At most 63 so
    /// that raw words and their products fit `i64`/`i128`.
    pub total_bits: u32,
    /// Number of fractional bits.
    pub frac_bits: u32,
}

/// Default register layout used when a config does not override it.
pub const DEFAULT_FORMAT: FixedPointFormat = FixedPointFormat {
    total_bits: 32,
    frac_bits: 16,
};

impl Default for FixedPointFormat {
    fn default() -> Self {
        DEFAULT_FORMAT
    }
}

impl FixedPointFormat {
    pub fn new(total_bits: u32, frac_bits: u32) -> Result<Self> {
        if !(2..=63).contains(&total_bits) || frac_bits >= total_bits {
            return Err(Error::InvalidDimension(format!(
                "fixed-point format ({total_bits}, {frac_bits}) is not supported"
            )));
        }
        Ok(Self {
            total_bits,
            frac_bits,
        })
    }

    /// Smallest representable raw word.
    pub fn min_raw(&self) -> i64 {
        -(1i64 << (self.total_bits - 1))
    }

    /// Largest representable raw word.
    pub fn max_raw(&self) -> i64 {
        (1i64 << (self.total_bits - 1)) - 1
    }

    /// Value of one least-significant bit, `2^-f`.
    pub fn resolution(&self) -> f64 {
        (-(self.frac_bits as f64)).exp2()
    }

    /// Smallest representable value.
    pub fn min_value(&self) -> f64 {
        self.min_raw() as f64 * self.resolution()
    }

    /// Largest representable value.
    pub fn max_value(&self) -> f64 {
        self.max_raw() as f64 * self.resolution()
    }

    fn check_raw(&self, raw: i128) -> Result<i64> {
        if raw < self.min_raw() as i128 || raw > self.max_raw() as i128 {
            Err(Error::Overflow {
                raw,
                bits: self.total_bits,
            })
        } else {
            Ok(raw as i64)
        }
    }
}

/// A fixed-point number: `raw / 2^frac_bits` in two's complement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedPoint {
    raw: i64,
    format: FixedPointFormat,
}

/// Round `p / 2^shift` to the nearest integer, ties to even.
fn rshift_round_ties_even(p: i128, shift: u32) -> i128 {
    if shift == 0 {
        return p;
    }
    let floor = p >> shift; // arithmetic shift == floor division
    let rem = p - (floor << shift); // in [0, 2^shift)
    let half = 1i128 << (shift - 1);
    if rem > half || (rem == half && (floor & 1) == 1) {
        floor + 1
    } else {
        floor
    }
}

/// Floor integer square root of a non-negative `i128`.
fn isqrt_floor(n: i128) -> i128 {
    debug_assert!(n >= 0);
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as i128 + 2;
    while x * x > n {
        x -= 1;
    }
    x
}

impl FixedPoint {
    /// Encodes a real value, rounding to the nearest representable one
    /// (ties to even).
    pub fn encode(x: f64, format: FixedPointFormat) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::OutOfRange {
                value: x,
                min: format.min_value(),
                max: format.max_value(),
            });
        }
        let scaled = (x * (format.frac_bits as f64).exp2()).round_ties_even();
        if scaled < format.min_raw() as f64 || scaled > format.max_raw() as f64 {
            return Err(Error::OutOfRange {
                value: x,
                min: format.min_value(),
                max: format.max_value(),
            });
        }
        Ok(Self {
            raw: scaled as i64,
            format,
        })
    }

    pub fn from_raw(raw: i64, format: FixedPointFormat) -> Result<Self> {
        format.check_raw(raw as i128)?;
        Ok(Self { raw, format })
    }

    pub fn zero(format: FixedPointFormat) -> Self {
        Self { raw: 0, format }
    }

    pub fn one(format: FixedPointFormat) -> Result<Self> {
        Self::from_raw(1i64 << format.frac_bits, format)
    }

    /// Exact decoded value `raw / 2^f`.
    pub fn decode(&self) -> f64 {
        self.raw as f64 * self.format.resolution()
    }

    pub fn raw(&self) -> i64 {
        self.raw
    }

    pub fn format(&self) -> FixedPointFormat {
        self.format
    }

    pub fn is_negative(&self) -> bool {
        self.raw < 0
    }

    fn check_same_format(&self, other: &Self) -> Result<()> {
        if self.format != other.format {
            return Err(Error::ShapeMismatch(format!(
                "fixed-point format mismatch: ({}, {}) vs ({}, {})",
                self.format.total_bits,
                self.format.frac_bits,
                other.format.total_bits,
                other.format.frac_bits
            )));
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_same_format(other)?;
        let raw = self.format.check_raw(self.raw as i128 + other.raw as i128)?;
        Ok(Self {
            raw,
            format: self.format,
        })
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check_same_format(other)?;
        let raw = self.format.check_raw(self.raw as i128 - other.raw as i128)?;
        Ok(Self {
            raw,
            format: self.format,
        })
    }

    pub fn checked_neg(&self) -> Result<Self> {
        let raw = self.format.check_raw(-(self.raw as i128))?;
        Ok(Self {
            raw,
            format: self.format,
        })
    }

    /// Fixed-point product, rounded to nearest (ties to even) at the output
    /// precision.
    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check_same_format(other)?;
        let wide = self.raw as i128 * other.raw as i128;
        let raw = self
            .format
            .check_raw(rshift_round_ties_even(wide, self.format.frac_bits))?;
        Ok(Self {
            raw,
            format: self.format,
        })
    }

    /// Multiplication by a power of two (register relabeling, not charged).
    pub fn checked_shift(&self, exponent: i32) -> Result<Self> {
        let wide = self.raw as i128;
        let raw = if exponent >= 0 {
            self.format.check_raw(wide << exponent as u32)?
        } else {
            self.format
                .check_raw(rshift_round_ties_even(wide, (-exponent) as u32))?
        };
        Ok(Self {
            raw,
            format: self.format,
        })
    }

    /// max(0, x); exact in fixed point.
    pub fn relu(&self) -> Self {
        Self {
            raw: self.raw.max(0),
            format: self.format,
        }
    }

    /// Floor square root via the digit-recurrence schoolbook method:
    /// `sqrt(raw / 2^f) = isqrt(raw << f) / 2^f`.
    pub fn sqrt_floor(&self) -> Result<Self> {
        if self.raw < 0 {
            return Err(Error::DomainError(format!(
                "square root of negative value {}",
                self.decode()
            )));
        }
        let wide = (self.raw as i128) << self.format.frac_bits;
        let raw = self.format.check_raw(isqrt_floor(wide))?;
        Ok(Self {
            raw,
            format: self.format,
        })
    }
}

/// Encodes a real value into the given format. See [`FixedPoint::encode`].
pub fn fp_encode(x: f64, total_bits: u32, frac_bits: u32) -> Result<FixedPoint> {
    FixedPoint::encode(x, FixedPointFormat::new(total_bits, frac_bits)?)
}

/// Decodes a fixed-point value to its exact real value.
pub fn fp_decode(x: &FixedPoint) -> f64 {
    x.decode()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fmt(b: u32, f: u32) -> FixedPointFormat {
        FixedPointFormat::new(b, f).unwrap()
    }

    #[test]
    fn encode_zero_and_one() {
        assert_eq!(fp_encode(0.0, 16, 8).unwrap().raw(), 0);
        assert_eq!(fp_encode(1.0, 16, 8).unwrap().raw(), 256);
    }

    #[test]
    fn encode_rounds_to_nearest() {
        // 0.3 * 256 = 76.8 -> 77
        let x = fp_encode(0.3, 16, 8).unwrap();
        assert_eq!(x.raw(), 77);
        assert_eq!(x.decode(), 0.30078125);
    }

    #[test]
    fn decode_examples() {
        assert_eq!(FixedPoint::from_raw(0, fmt(16, 8)).unwrap().decode(), 0.0);
        assert_eq!(FixedPoint::from_raw(256, fmt(16, 8)).unwrap().decode(), 1.0);
        assert_eq!(
            FixedPoint::from_raw(-128, fmt(16, 8)).unwrap().decode(),
            -0.5
        );
    }

    #[test]
    fn range_bounds() {
        let f = fmt(16, 8);
        // [-2^(b-f-1), 2^(b-f-1) - 2^-f] = [-128, 127.99609375]
        assert_eq!(f.min_value(), -128.0);
        assert_eq!(f.max_value(), 128.0 - 1.0 / 256.0);
        assert!(fp_encode(-128.0, 16, 8).is_ok());
        assert!(matches!(
            fp_encode(128.0, 16, 8),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn overflow_is_reported() {
        let f = fmt(8, 4);
        let a = FixedPoint::from_raw(f.max_raw(), f).unwrap();
        let b = FixedPoint::one(f).unwrap();
        assert!(matches!(a.checked_add(&b), Err(Error::Overflow { .. })));
    }

    #[test]
    fn roundtrip_exhaustive_small_widths() {
        // encode(decode(x)) = x for every representable x, all b <= 12.
        for b in 2..=12u32 {
            for f in 0..b {
                let format = fmt(b, f);
                for raw in format.min_raw()..=format.max_raw() {
                    let x = FixedPoint::from_raw(raw, format).unwrap();
                    let back = FixedPoint::encode(x.decode(), format).unwrap();
                    assert_eq!(back.raw(), raw, "b={b} f={f} raw={raw}");
                }
            }
        }
    }

    #[test]
    fn ties_round_to_even() {
        // 2.5/16 lsb ties: raw target x.5 -> nearest even raw
        let f = fmt(16, 4);
        // 0.15625 * 16 = 2.5 -> 2 (even)
        assert_eq!(FixedPoint::encode(0.15625, f).unwrap().raw(), 2);
        // 0.21875 * 16 = 3.5 -> 4
        assert_eq!(FixedPoint::encode(0.21875, f).unwrap().raw(), 4);
        // -0.15625 * 16 = -2.5 -> -2
        assert_eq!(FixedPoint::encode(-0.15625, f).unwrap().raw(), -2);
    }

    #[test]
    fn mul_rounds_ties_even() {
        let f = fmt(16, 4);
        // 1.5 * 0.5 = 0.75 exact
        let a = FixedPoint::encode(1.5, f).unwrap();
        let b = FixedPoint::encode(0.5, f).unwrap();
        assert_eq!(a.checked_mul(&b).unwrap().decode(), 0.75);
        // raw 3 * raw 8 = 24 -> >>4 with rem 8 == half, floor 1 odd -> 2
        let c = FixedPoint::from_raw(3, f).unwrap();
        let d = FixedPoint::from_raw(8, f).unwrap();
        assert_eq!(c.checked_mul(&d).unwrap().raw(), 2);
    }

    #[test]
    fn sqrt_floor_matches_reference() {
        let f = fmt(32, 16);
        for &v in &[0.0, 0.25, 0.66668, 1.0, 2.0, 9.0, 123.456] {
            let x = FixedPoint::encode(v, f).unwrap();
            let s = x.sqrt_floor().unwrap().decode();
            let exact = x.decode().sqrt();
            assert!(s <= exact + 1e-12, "v={v}");
            assert!(exact - s <= f.resolution() * 1.001, "v={v}");
        }
        let neg = FixedPoint::encode(-1.0, f).unwrap();
        assert!(neg.sqrt_floor().is_err());
    }

    #[test]
    fn rounding_bound_holds_on_dense_samples() {
        // 1e5 uniform draws per format configuration
        let mut rng = crate::rng::RandomSource::new(0xF1F0);
        for (b, f) in [(16u32, 8u32), (24, 12), (32, 16), (48, 24)] {
            let format = fmt(b, f);
            let span = format.max_value().min(1000.0);
            let bound = 0.5 * format.resolution() * (1.0 + 1e-9);
            for _ in 0..100_000 {
                let x = rng.uniform_in(-span, span);
                let enc = FixedPoint::encode(x, format).unwrap();
                assert!((enc.decode() - x).abs() <= bound, "b={b} f={f} x={x}");
            }
        }
    }

    proptest! {
        #[test]
        fn rounding_error_within_half_lsb(x in -100.0f64..100.0, f in 4u32..20) {
            let format = fmt(32, f);
            let enc = FixedPoint::encode(x, format).unwrap();
            let bound = 0.5 * format.resolution() * (1.0 + 1e-9);
            prop_assert!((enc.decode() - x).abs() <= bound);
        }

        #[test]
        fn shift_roundtrips(raw in -1000i64..1000) {
            let format = fmt(32, 16);
            let x = FixedPoint::from_raw(raw * 4, format).unwrap();
            let y = x.checked_shift(3).unwrap().checked_shift(-3).unwrap();
            prop_assert_eq!(x.raw(), y.raw());
        }
    }
}
