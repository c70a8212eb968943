//! Canonical JSON rendering: object keys in sorted order and every float
//! printed as `{:.16e}` (17 significant digits), so equal values always
//! produce identical bytes. Integers print without an exponent.

use std::io;

use serde::Serialize;

struct CanonicalFormatter;

impl serde_json::ser::Formatter for CanonicalFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{:.16e}", value as f64)
    }
}

/// Serializes any value to canonical JSON. Maps and structs are first
/// normalized through `serde_json::Value`, whose object representation keeps
/// keys sorted.
pub fn to_canonical_string<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let value = serde_json::to_value(value)?;
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, CanonicalFormatter);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("canonical JSON is valid UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_come_out_sorted() {
        let v = json!({"zeta": 1, "alpha": {"nested_b": 2, "nested_a": 3}});
        let s = to_canonical_string(&v).unwrap();
        assert_eq!(s, "{\"alpha\":{\"nested_a\":3,\"nested_b\":2},\"zeta\":1}");
    }

    #[test]
    fn float_format_is_frozen() {
        assert_eq!(to_canonical_string(&0.1).unwrap(), "1.0000000000000001e-1");
        assert_eq!(to_canonical_string(&3.0).unwrap(), "3.0000000000000000e0");
        // 17 significant digits roundtrip every f64 exactly.
        let tiny = to_canonical_string(&-2.5e-7).unwrap();
        assert!(tiny.ends_with("e-7"), "{tiny}");
        assert_eq!(tiny.parse::<f64>().unwrap(), -2.5e-7);
        // Integers stay plain.
        assert_eq!(to_canonical_string(&42u32).unwrap(), "42");
    }

    #[test]
    fn output_parses_back_to_the_same_value() {
        let v = json!({"m": [1.5, 0.25, -0.0625], "k": 3, "name": "x"});
        let s = to_canonical_string(&v).unwrap();
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
        // And a second rendering is byte-identical.
        assert_eq!(s, to_canonical_string(&back).unwrap());
    }

    #[test]
    fn derived_structs_are_normalized_too() {
        #[derive(Serialize)]
        struct Out {
            zebra: f64,
            apple: f64,
        }
        let s = to_canonical_string(&Out { zebra: 1.0, apple: 2.0 }).unwrap();
        assert!(s.find("apple").unwrap() < s.find("zebra").unwrap());
    }
}
