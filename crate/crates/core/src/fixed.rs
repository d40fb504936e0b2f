//! Exact binary fixed-point points in `[0, 1)^d`.
//!
//! Each coordinate is a `u64` whose bits are the binary digits after the
//! radix point, most significant first. A point carries a precision `m`:
//! only the top `m` bits may be set, so a lower-precision point is already
//! zero-padded to any higher precision.

use std::fmt;

use thiserror::Error;

use crate::geometry::Vertex;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FixedError {
    #[error("coordinate {0:?} is outside [0, 1)")]
    CoordinateOutOfRange(String),
    #[error("malformed decimal {0:?}")]
    Malformed(String),
    #[error("precision {0} outside 1..=64")]
    InvalidPrecision(u32),
    #[error("raw value {raw:#x} has bits below precision {precision}")]
    ExcessBits { raw: u64, precision: u32 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cell coordinate {coord} outside level {k}")]
    OutOfGrid { coord: i64, k: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FixedPoint {
    coords: Vec<u64>,
    precision: u32,
}

impl FixedPoint {
    pub fn new(coords: Vec<u64>, precision: u32) -> Result<Self, FixedError> {
        if !(1..=64).contains(&precision) {
            return Err(FixedError::InvalidPrecision(precision));
        }
        let mask = low_mask(precision);
        if let Some(&raw) = coords.iter().find(|&&c| c & mask != 0) {
            return Err(FixedError::ExcessBits { raw, precision });
        }
        Ok(FixedPoint { coords, precision })
    }

    /// Full 64-bit precision.
    pub fn from_raw(coords: Vec<u64>) -> Self {
        FixedPoint {
            coords,
            precision: 64,
        }
    }

    /// Centre of grid cell `v` at level `k`: the `k` bits of each coordinate
    /// followed by a single 1 bit.
    pub fn cell_center(v: &Vertex, k: u32) -> Result<Self, FixedError> {
        if k > 63 {
            return Err(FixedError::InvalidPrecision(k + 1));
        }
        let coords = v
            .coords()
            .iter()
            .map(|&c| {
                if c < 0 || (c as u128) >= 1u128 << k {
                    return Err(FixedError::OutOfGrid { coord: c, k });
                }
                Ok((2 * c as u64 + 1) << (63 - k))
            })
            .collect::<Result<_, _>>()?;
        FixedPoint::new(coords, k + 1)
    }

    pub fn parse_decimal(values: &[&str]) -> Result<Self, FixedError> {
        let coords = values
            .iter()
            .map(|s| parse_fraction(s))
            .collect::<Result<_, _>>()?;
        Ok(FixedPoint::from_raw(coords))
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn raw(&self) -> &[u64] {
        &self.coords
    }

    /// Bit `level` (0 = most significant) of coordinate `axis` (1-based).
    pub fn bit(&self, axis: usize, level: u32) -> u8 {
        (self.coords[axis - 1] >> (63 - level) & 1) as u8
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coords.iter().map(|&c| raw_to_f64(c)).collect()
    }

    /// The grid cell containing the point at level `k`.
    pub fn cell(&self, k: u32) -> Vertex {
        Vertex(
            self.coords
                .iter()
                .map(|&c| if k == 0 { 0 } else { (c >> (64 - k)) as i64 })
                .collect(),
        )
    }
}

impl fmt::Display for FixedPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, &c) in self.coords.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(&format_fraction(c))?;
        }
        Ok(())
    }
}

fn low_mask(precision: u32) -> u64 {
    if precision >= 64 {
        0
    } else {
        u64::MAX >> precision
    }
}

pub fn raw_to_f64(raw: u64) -> f64 {
    raw as f64 / 18_446_744_073_709_551_616.0
}

/// Parses a decimal fraction in `[0, 1)` into its 64-bit binary expansion,
/// truncating exactly.
pub fn parse_fraction(text: &str) -> Result<u64, FixedError> {
    let s = text.trim();
    let (negative, s) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = s.split_once('.').unwrap_or((s, ""));
    let well_formed = (!int_part.is_empty() || !frac_part.is_empty())
        && int_part.bytes().all(|b| b.is_ascii_digit())
        && frac_part.bytes().all(|b| b.is_ascii_digit());
    if !well_formed {
        return Err(FixedError::Malformed(text.to_string()));
    }
    let is_zero = int_part.bytes().chain(frac_part.bytes()).all(|b| b == b'0');
    if is_zero {
        return Ok(0);
    }
    if negative || int_part.bytes().any(|b| b != b'0') {
        return Err(FixedError::CoordinateOutOfRange(text.to_string()));
    }
    let mut digits: Vec<u8> = frac_part
        .trim_end_matches('0')
        .bytes()
        .map(|b| b - b'0')
        .collect();
    let mut raw = 0u64;
    for _ in 0..64 {
        let mut carry = 0u8;
        for d in digits.iter_mut().rev() {
            let v = *d * 2 + carry;
            *d = v % 10;
            carry = v / 10;
        }
        raw = raw << 1 | u64::from(carry);
        while digits.last() == Some(&0) {
            digits.pop();
        }
    }
    Ok(raw)
}

/// Shortest decimal string that [`parse_fraction`] maps back to `raw`.
pub fn format_fraction(raw: u64) -> String {
    if raw == 0 {
        return "0".to_string();
    }
    let mut digits: Vec<u8> = Vec::new();
    let mut rem = raw as u128;
    let mut scale: u128 = 1;
    loop {
        rem *= 10;
        digits.push((rem >> 64) as u8);
        rem &= u64::MAX as u128;
        scale *= 10;
        if rem == 0 {
            break;
        }
        if (1u128 << 64) - rem < scale {
            let mut i = digits.len();
            loop {
                i -= 1;
                if digits[i] == 9 {
                    digits[i] = 0;
                } else {
                    digits[i] += 1;
                    break;
                }
            }
            break;
        }
    }
    while digits.last() == Some(&0) {
        digits.pop();
    }
    let mut s = String::with_capacity(digits.len() + 2);
    s.push_str("0.");
    s.extend(digits.iter().map(|&d| char::from(b'0' + d)));
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dyadic_values_are_exact() {
        assert_eq!(parse_fraction("0.5").unwrap(), 1 << 63);
        assert_eq!(parse_fraction("0.25").unwrap(), 1 << 62);
        assert_eq!(parse_fraction(".75").unwrap(), 3 << 62);
        assert_eq!(parse_fraction("0").unwrap(), 0);
        assert_eq!(parse_fraction("0.000").unwrap(), 0);
        let p = FixedPoint::parse_decimal(&["0.5", "0.25"]).unwrap();
        assert_eq!(p.bit(1, 0), 1);
        assert_eq!(p.bit(1, 1), 0);
        assert_eq!(p.bit(2, 0), 0);
        assert_eq!(p.bit(2, 1), 1);
    }

    #[test]
    fn truncation_of_thirds() {
        // 1/3 = 0.010101… in binary.
        let third = parse_fraction("0.333333333333333333333333333333333").unwrap();
        assert_eq!(third, 0x5555_5555_5555_5555);
    }

    #[test]
    fn out_of_range_and_malformed() {
        assert!(matches!(
            parse_fraction("1"),
            Err(FixedError::CoordinateOutOfRange(_))
        ));
        assert!(matches!(
            parse_fraction("1.0"),
            Err(FixedError::CoordinateOutOfRange(_))
        ));
        assert!(matches!(
            parse_fraction("-0.5"),
            Err(FixedError::CoordinateOutOfRange(_))
        ));
        assert!(matches!(
            parse_fraction("abc"),
            Err(FixedError::Malformed(_))
        ));
        assert!(matches!(parse_fraction("."), Err(FixedError::Malformed(_))));
        assert!(matches!(parse_fraction(""), Err(FixedError::Malformed(_))));
    }

    #[test]
    fn shortest_formatting() {
        assert_eq!(format_fraction(0), "0");
        assert_eq!(format_fraction(1 << 63), "0.5");
        assert_eq!(format_fraction(parse_fraction("0.1").unwrap()), "0.1");
        assert_eq!(format_fraction(parse_fraction("0.95").unwrap()), "0.95");
        assert!(format_fraction(u64::MAX).len() <= 22);
    }

    #[test]
    fn cell_centers() {
        let p = FixedPoint::cell_center(&Vertex(vec![0, 3]), 2).unwrap();
        assert_eq!(p.precision(), 3);
        assert_eq!(p.raw(), &[1 << 61, 7 << 61]);
        assert_eq!(p.cell(2), Vertex(vec![0, 3]));
        assert!(FixedPoint::cell_center(&Vertex(vec![4]), 2).is_err());
    }

    #[test]
    fn precision_is_enforced() {
        assert!(FixedPoint::new(vec![1], 63).is_err());
        assert!(FixedPoint::new(vec![1 << 63], 1).is_ok());
        assert!(FixedPoint::new(vec![0], 0).is_err());
    }

    proptest! {
        #[test]
        fn format_parse_round_trip(raw in any::<u64>()) {
            let s = format_fraction(raw);
            prop_assert_eq!(parse_fraction(&s).unwrap(), raw);
        }

        #[test]
        fn format_is_shortest(raw in any::<u64>()) {
            let s = format_fraction(raw);
            if let Some(frac) = s.strip_prefix("0.") {
                // Dropping the last digit (rounding either way) must not parse back.
                let n = frac.len() - 1;
                let prefix = &frac[..n];
                let down = format!("0.{prefix}");
                prop_assert_ne!(parse_fraction(&down).unwrap(), raw);
                let up: u128 = if n == 0 { 1 } else { prefix.parse::<u128>().unwrap() + 1 };
                if up < 10u128.pow(n as u32) {
                    let up = format!("0.{:0width$}", up, width = n);
                    prop_assert_ne!(parse_fraction(&up).unwrap(), raw);
                }
            }
        }

        #[test]
        fn parse_agrees_with_float_for_short_inputs(num in 0u32..1_000_000) {
            let s = format!("0.{num:06}");
            let raw = parse_fraction(&s).unwrap();
            let expected = (num as u128 * (1u128 << 64)) / 1_000_000;
            prop_assert_eq!(raw as u128, expected);
        }
    }
}
