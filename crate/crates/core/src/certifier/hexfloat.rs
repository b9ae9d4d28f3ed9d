//! C99-style hexadecimal float text (`0x1.8p-1`), lossless for every `f64`.

use super::CertError;

pub fn format_hex(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    if exp == 0 && frac == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, e) = if exp == 0 { (0, -1022) } else { (1, exp - 1023) };
    let mut digits = format!("{frac:013x}");
    while digits.ends_with('0') {
        digits.pop();
    }
    let dot = if digits.is_empty() { String::new() } else { format!(".{digits}") };
    let esign = if e >= 0 { "+" } else { "" };
    format!("{sign}0x{lead}{dot}p{esign}{e}")
}

pub fn parse_hex(s: &str) -> Result<f64, CertError> {
    let bad = || CertError::Format(format!("bad hex float {s:?}"));
    match s {
        "inf" => return Ok(f64::INFINITY),
        "-inf" => return Ok(f64::NEG_INFINITY),
        "nan" => return Ok(f64::NAN),
        _ => {}
    }
    let (neg, rest) = match s.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, s),
    };
    let rest = rest.strip_prefix("0x").ok_or_else(bad)?;
    let (mant, exp) = rest.split_once('p').ok_or_else(bad)?;
    let exp: i64 = exp.parse().map_err(|_| bad())?;
    let (lead, frac) = mant.split_once('.').unwrap_or((mant, ""));
    let lead = match lead {
        "0" => 0u64,
        "1" => 1u64,
        _ => return Err(bad()),
    };
    if frac.len() > 13 || !frac.chars().all(|c| c.is_ascii_hexdigit()) {
        return Err(bad());
    }
    let frac_bits =
        if frac.is_empty() { 0 } else { u64::from_str_radix(frac, 16).map_err(|_| bad())? << (4 * (13 - frac.len())) };
    let bits = match (lead, frac_bits) {
        (0, 0) => 0,
        (0, f) if exp == -1022 => f,
        (1, f) if (-1022..=1023).contains(&exp) => (((exp + 1023) as u64) << 52) | f,
        _ => return Err(bad()),
    };
    let x = f64::from_bits(bits);
    Ok(if neg { -x } else { x })
}

/// Serde adapter writing an `f64` as a hex float string.
pub mod serde_hex {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_hex(*x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let s = String::deserialize(d)?;
        super::parse_hex(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_strings() {
        assert_eq!(format_hex(1.0), "0x1p+0");
        assert_eq!(format_hex(0.75), "0x1.8p-1");
        assert_eq!(format_hex(-2.0), "-0x1p+1");
        assert_eq!(format_hex(0.0), "0x0p+0");
        assert_eq!(format_hex(5e-324), "0x0.0000000000001p-1022");
        assert_eq!(format_hex(f64::MAX), "0x1.fffffffffffffp+1023");
    }

    #[test]
    fn roundtrip() {
        for &x in &[1.0, 0.1, -3.75, 1e-310, 5e-324, f64::MAX, f64::MIN_POSITIVE, 0.523_204_233, -0.0, f64::INFINITY] {
            let back = parse_hex(&format_hex(x)).unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x}");
        }
        assert!(parse_hex("0x2p+0").is_err());
        assert!(parse_hex("1.0").is_err());
        assert!(parse_hex("0x1.gp+0").is_err());
    }
}
