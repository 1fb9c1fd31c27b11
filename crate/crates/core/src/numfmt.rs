//! Lossless number formatting for machine-readable outputs.
//!
//! Every `f64` written to a file or JSON document uses 17 significant digits,
//! which is enough to round-trip any double bit-exactly.

use serde::Serializer;
use serde_json::value::RawValue;

/// Formats `x` with 17 significant digits in scientific notation.
pub fn f17(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// Rounds to 4 significant digits for human-facing tables.
pub fn f4(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.3e}")
    } else {
        f17(x)
    }
}

/// Serde helper: writes an `f64` as a 17-digit JSON number (`null` if non-finite).
pub fn ser_f17<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if !x.is_finite() {
        return s.serialize_none();
    }
    let raw = RawValue::from_string(f17(*x)).map_err(serde::ser::Error::custom)?;
    serde::Serialize::serialize(&raw, s)
}

pub fn ser_f17_vec<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for x in xs {
        seq.serialize_element(&F17(*x))?;
    }
    seq.end()
}

pub fn ser_f17_opt<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => ser_f17(v, s),
        None => s.serialize_none(),
    }
}

/// Newtype that serializes through [`ser_f17`].
#[derive(Clone, Copy, Debug)]
pub struct F17(pub f64);

impl serde::Serialize for F17 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ser_f17(&self.0, s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for &x in &[0.1, 1.0 / 3.0, 7990.0, -2.33e2, 1e-300, 6.02214076e23] {
            let s = f17(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn json_uses_raw_17_digit_numbers() {
        #[derive(serde::Serialize)]
        struct T {
            #[serde(serialize_with = "ser_f17")]
            x: f64,
            #[serde(serialize_with = "ser_f17")]
            y: f64,
        }
        let s = serde_json::to_string(&T { x: 0.5, y: f64::NAN }).unwrap();
        assert_eq!(s, r#"{"x":5.0000000000000000e-1,"y":null}"#);
    }
}
