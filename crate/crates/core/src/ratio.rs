//! Exact-rational helpers: construction from integers, parsing of the
//! probability syntax used in scenario files, and float conversion.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::ToPrimitive;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseProbError {
    #[error("empty probability string")]
    Empty,
    #[error("invalid probability literal `{0}`")]
    Invalid(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

/// Rational from an integer pair.
pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Rational from an integer.
pub fn rat_int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Parse a probability written as a ratio (`"1/2"`), a decimal (`"0.35"`),
/// or an integer (`"1"`). Decimals convert exactly: the digits over the
/// matching power of ten.
pub fn parse_probability(text: &str) -> Result<BigRational, ParseProbError> {
    let s = text.trim();
    if s.is_empty() {
        return Err(ParseProbError::Empty);
    }
    if let Some((n, d)) = s.split_once('/') {
        let num: BigInt = n
            .trim()
            .parse()
            .map_err(|_| ParseProbError::Invalid(text.into()))?;
        let den: BigInt = d
            .trim()
            .parse()
            .map_err(|_| ParseProbError::Invalid(text.into()))?;
        if den == BigInt::from(0) {
            return Err(ParseProbError::ZeroDenominator(text.into()));
        }
        return Ok(BigRational::new(num, den));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(ParseProbError::Invalid(text.into()));
        }
        let int_part = if int_part.is_empty() { "0" } else { int_part };
        let whole: BigInt = int_part
            .parse()
            .map_err(|_| ParseProbError::Invalid(text.into()))?;
        let digits: BigInt = frac_part
            .parse()
            .map_err(|_| ParseProbError::Invalid(text.into()))?;
        let scale = BigInt::from(10).pow(frac_part.len() as u32);
        let numer = whole * &scale + digits;
        return Ok(BigRational::new(numer, scale));
    }
    let n: BigInt = s
        .parse()
        .map_err(|_| ParseProbError::Invalid(text.into()))?;
    Ok(BigRational::from_integer(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_ratio_and_decimal_exactly() {
        assert_eq!(parse_probability("1/2").unwrap(), rat(1, 2));
        assert_eq!(parse_probability("3/12").unwrap(), rat(1, 4));
        assert_eq!(parse_probability("0.35").unwrap(), rat(7, 20));
        assert_eq!(parse_probability(".5").unwrap(), rat(1, 2));
        assert_eq!(parse_probability("1").unwrap(), rat_int(1));
        assert_eq!(parse_probability("0.125").unwrap(), rat(1, 8));
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_probability("").is_err());
        assert!(parse_probability("1/0").is_err());
        assert!(parse_probability("0.3.5").is_err());
        assert!(parse_probability("half").is_err());
        assert!(parse_probability("0.3e2").is_err());
    }
}
