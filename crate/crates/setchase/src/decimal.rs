//! Exact decimal numbers for value literals.
//!
//! Numeric values compare by their exact decimal value, so `0.60` and `0.6`
//! are the same literal. Internally a number is a normalized pair
//! `mantissa * 10^-scale` with no trailing zeros in the mantissa.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

/// A normalized exact decimal: `mantissa * 10^-scale`.
///
/// Invariant: if `scale > 0` then `mantissa % 10 != 0`, and `scale == 0`
/// whenever `mantissa == 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Decimal {
    mantissa: i64,
    scale: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecimalError {
    #[error("invalid decimal literal `{0}`")]
    Invalid(String),
    #[error("decimal literal `{0}` out of range")]
    OutOfRange(String),
}

impl Decimal {
    pub fn new(mantissa: i64, scale: u8) -> Self {
        let mut d = Decimal { mantissa, scale };
        d.normalize();
        d
    }

    pub fn zero() -> Self {
        Decimal {
            mantissa: 0,
            scale: 0,
        }
    }

    pub fn from_int(n: i64) -> Self {
        Decimal {
            mantissa: n,
            scale: 0,
        }
    }

    fn normalize(&mut self) {
        if self.mantissa == 0 {
            self.scale = 0;
            return;
        }
        while self.scale > 0 && self.mantissa % 10 == 0 {
            self.mantissa /= 10;
            self.scale -= 1;
        }
    }

    /// Compares `self` with the exact rational `num/den` (`den > 0`).
    ///
    /// Used by similarity built-ins so that thresholds like `0.6` are
    /// compared without any floating-point rounding.
    pub fn cmp_ratio(&self, num: i64, den: i64) -> Ordering {
        assert!(den > 0, "denominator must be positive");
        // self = m / 10^s, compare m * den with num * 10^s.
        let lhs = i128::from(self.mantissa) * i128::from(den);
        let rhs = i128::from(num) * 10_i128.pow(u32::from(self.scale));
        lhs.cmp(&rhs)
    }
}

impl FromStr for Decimal {
    type Err = DecimalError;

    fn from_str(s: &str) -> Result<Self, DecimalError> {
        let invalid = || DecimalError::Invalid(s.to_string());
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        if body.is_empty() {
            return Err(invalid());
        }
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(invalid());
        }
        if !int_part.chars().all(|c| c.is_ascii_digit())
            || !frac_part.chars().all(|c| c.is_ascii_digit())
        {
            return Err(invalid());
        }
        if frac_part.len() > 18 {
            return Err(DecimalError::OutOfRange(s.to_string()));
        }
        let mut mantissa: i64 = 0;
        for c in int_part.chars().chain(frac_part.chars()) {
            mantissa = mantissa
                .checked_mul(10)
                .and_then(|m| m.checked_add(i64::from(c as u8 - b'0')))
                .ok_or_else(|| DecimalError::OutOfRange(s.to_string()))?;
        }
        if neg {
            mantissa = -mantissa;
        }
        Ok(Decimal::new(mantissa, frac_part.len() as u8))
    }
}

impl Ord for Decimal {
    fn cmp(&self, other: &Self) -> Ordering {
        // Align scales and compare mantissas; i64 mantissas with scale <= 18
        // cannot overflow i128 here.
        let ls = u32::from(self.scale);
        let rs = u32::from(other.scale);
        let common = ls.max(rs);
        let lhs = i128::from(self.mantissa) * 10_i128.pow(common - ls);
        let rhs = i128::from(other.mantissa) * 10_i128.pow(common - rs);
        lhs.cmp(&rhs)
    }
}

impl PartialOrd for Decimal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.scale == 0 {
            return write!(f, "{}", self.mantissa);
        }
        let neg = self.mantissa < 0;
        let digits = self.mantissa.unsigned_abs().to_string();
        let scale = usize::from(self.scale);
        let (int_part, frac_part) = if digits.len() > scale {
            let split = digits.len() - scale;
            (digits[..split].to_string(), digits[split..].to_string())
        } else {
            (
                "0".to_string(),
                format!("{:0>width$}", digits, width = scale),
            )
        };
        write!(
            f,
            "{}{}.{}",
            if neg { "-" } else { "" },
            int_part,
            frac_part
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trailing_zeros_normalize() {
        assert_eq!("0.60".parse::<Decimal>().unwrap(), "0.6".parse().unwrap());
        assert_eq!("1.000".parse::<Decimal>().unwrap(), "1".parse().unwrap());
        assert_eq!("0.60".parse::<Decimal>().unwrap().to_string(), "0.6");
    }

    #[test]
    fn ordering_is_numeric() {
        let a: Decimal = "0.6".parse().unwrap();
        let b: Decimal = "0.625".parse().unwrap();
        assert!(a < b);
        assert!("2".parse::<Decimal>().unwrap() > "1.99".parse().unwrap());
        assert!("-1".parse::<Decimal>().unwrap() < "0.001".parse().unwrap());
    }

    #[test]
    fn ratio_comparison_is_exact() {
        let t: Decimal = "0.625".parse().unwrap();
        assert_eq!(t.cmp_ratio(5, 8), Ordering::Equal);
        assert_eq!(t.cmp_ratio(6, 8), Ordering::Less);
        let t: Decimal = "0.6".parse().unwrap();
        assert_eq!(t.cmp_ratio(5, 8), Ordering::Less);
    }

    #[test]
    fn rejects_garbage() {
        assert!("".parse::<Decimal>().is_err());
        assert!(".".parse::<Decimal>().is_err());
        assert!("1.2.3".parse::<Decimal>().is_err());
        assert!("1e5".parse::<Decimal>().is_err());
    }

    #[test]
    fn display_pads_fraction() {
        assert_eq!("0.05".parse::<Decimal>().unwrap().to_string(), "0.05");
        assert_eq!("-0.05".parse::<Decimal>().unwrap().to_string(), "-0.05");
        assert_eq!("10.5".parse::<Decimal>().unwrap().to_string(), "10.5");
    }
}
