//! Exact fractions used for percentages, thresholds and scores.
//!
//! All rates are kept as `Ratio<u64>` while computing and only turned into
//! floating point when written to a report.

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

pub type Rational = Ratio<u64>;

pub fn ratio(numer: u64, denom: u64) -> Rational {
    if denom == 0 {
        Rational::zero()
    } else {
        Rational::new(numer, denom)
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Rounds to three decimals, the precision used in every report.
pub fn round3(r: &Rational) -> f64 {
    (to_f64(r) * 1000.0).round() / 1000.0
}

/// Parses a non-negative decimal such as `0.15`, `1`, `.5` or `3/20` exactly.
pub fn parse_decimal(text: &str) -> Option<Rational> {
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n: u64 = n.trim().parse().ok()?;
        let d: u64 = d.trim().parse().ok()?;
        return (d != 0).then(|| Rational::new(n, d));
    }
    let (int, frac) = text.split_once('.').unwrap_or((text, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    if frac.len() > 18 {
        return None;
    }
    let scale = 10u64.pow(frac.len() as u32);
    let int: u64 = if int.is_empty() { 0 } else { int.parse().ok()? };
    let frac_val: u64 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
    Some(Rational::new(int.checked_mul(scale)?.checked_add(frac_val)?, scale))
}

/// Renders a fraction as a terminating decimal when it has one, otherwise as
/// `n/d`.
pub fn format_exact(r: &Rational) -> String {
    let mut d = *r.denom();
    let mut digits = 0u32;
    while d.is_multiple_of(10) {
        d /= 10;
        digits += 1;
    }
    while d.is_multiple_of(2) || d.is_multiple_of(5) {
        if d.is_multiple_of(2) {
            d /= 2;
        } else {
            d /= 5;
        }
        digits += 1;
    }
    if d != 1 || digits > 9 {
        return format!("{}/{}", r.numer(), r.denom());
    }
    let scale = 10u64.pow(digits);
    let scaled = r.numer() * (scale / r.denom());
    if digits == 0 {
        return scaled.to_string();
    }
    let int = scaled / scale;
    let frac = scaled % scale;
    let mut s = format!("{int}.{frac:0width$}", width = digits as usize);
    while s.ends_with('0') {
        s.pop();
    }
    if s.ends_with('.') {
        s.pop();
    }
    s
}

/// Serde adapter: a fraction is written as a JSON number when it has a short
/// decimal expansion and as an `"n/d"` string otherwise. Numbers are read back
/// through their shortest decimal text, so `0.15` round-trips to 3/20.
pub mod serde_fraction {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        let text = format_exact(r);
        if text.contains('/') {
            s.serialize_str(&text)
        } else {
            let v: f64 = text.parse().map_err(serde::ser::Error::custom)?;
            v.serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        let text = match Repr::deserialize(d)? {
            Repr::Num(v) if v.is_finite() && v >= 0.0 => format!("{v}"),
            Repr::Num(v) => return Err(de::Error::custom(format!("invalid fraction {v}"))),
            Repr::Text(t) => t,
        };
        parse_decimal(&text).ok_or_else(|| de::Error::custom(format!("invalid fraction `{text}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_parsing_is_exact() {
        assert_eq!(parse_decimal("0.15"), Some(ratio(3, 20)));
        assert_eq!(parse_decimal("1"), Some(ratio(1, 1)));
        assert_eq!(parse_decimal(".5"), Some(ratio(1, 2)));
        assert_eq!(parse_decimal("3/20"), Some(ratio(3, 20)));
        assert_eq!(parse_decimal("-1"), None);
        assert_eq!(parse_decimal("abc"), None);
        assert_eq!(parse_decimal("."), None);
    }

    #[test]
    fn exact_formatting() {
        assert_eq!(format_exact(&ratio(3, 20)), "0.15");
        assert_eq!(format_exact(&ratio(1, 1)), "1");
        assert_eq!(format_exact(&ratio(0, 1)), "0");
        assert_eq!(format_exact(&ratio(1, 3)), "1/3");
        assert_eq!(format_exact(&ratio(1, 8)), "0.125");
    }

    #[test]
    fn zero_denominator_is_zero() {
        assert_eq!(ratio(0, 0), Rational::zero());
    }
}
