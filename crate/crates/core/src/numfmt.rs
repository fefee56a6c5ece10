//! Decimal text for reals: 17 significant digits, enough to round-trip any
//! `f64` bit-exactly.

use std::io;

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, Serializer};

/// Formats `x` in scientific notation with 17 significant digits.
pub fn real(x: f64) -> String {
    format!("{:.16e}", x)
}

/// JSON formatter that writes every float with [`real`].
#[derive(Clone, Copy, Debug, Default)]
pub struct RealFormatter;

impl Formatter for RealFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            writer.write_all(real(value).as_bytes())
        } else {
            CompactFormatter.write_null(writer)
        }
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

/// Serializes `value` as compact JSON using [`RealFormatter`].
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, RealFormatter);
    value.serialize(&mut ser)?;
    // the formatter only ever emits ASCII
    Ok(String::from_utf8(buf).expect("json output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for &x in &[0.1, 1.0 / 3.0, 2.0, 1e-300, 123456.789, 0.0, -0.7] {
            let s = real(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17);
        }
    }

    #[test]
    fn json_uses_real_format() {
        let s = to_json_string(&vec![0.1f64, 2.0]).unwrap();
        assert_eq!(s, "[1.0000000000000001e-1,2.0000000000000000e0]");
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![0.1, 2.0]);
    }
}
