//! Number formatting shared by every report: 12 significant digits, integral
//! values printed without a fractional part, negative zero folded to zero.

use num_complex::Complex64;
use serde_json::{Number, Value};

/// Significant digits used for every printed real.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Rounds `x` to `digits` significant digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let text = format!("{:.*e}", digits.saturating_sub(1), x);
    let rounded: f64 = text.parse().unwrap_or(x);
    if rounded == 0.0 {
        0.0
    } else {
        rounded
    }
}

/// A real as a JSON number with 12 significant digits.
pub fn real_json(x: f64) -> Value {
    let r = round_sig(x, SIGNIFICANT_DIGITS);
    if r == r.trunc() && r.abs() < 1e15 {
        return Value::Number(Number::from(r as i64));
    }
    Number::from_f64(r).map(Value::Number).unwrap_or(Value::Null)
}

/// An amplitude as the two-element array `[re, im]`.
pub fn amplitude_json(z: Complex64) -> Value {
    Value::Array(vec![real_json(z.re), real_json(z.im)])
}

/// Plain-text real with 12 significant digits.
pub fn real_text(x: f64) -> String {
    let r = round_sig(x, SIGNIFICANT_DIGITS);
    if r == r.trunc() && r.abs() < 1e15 {
        format!("{}", r as i64)
    } else {
        format!("{r}")
    }
}

/// Plain-text amplitude: `0.5`, `-i`, `0.707106781187i`, `(0.5-0.5i)`.
pub fn amplitude_text(z: Complex64) -> String {
    let re = round_sig(z.re, SIGNIFICANT_DIGITS);
    let im = round_sig(z.im, SIGNIFICANT_DIGITS);
    let imag = |v: f64| match v {
        1.0 => "i".to_string(),
        -1.0 => "-i".to_string(),
        v => format!("{}i", real_text(v)),
    };
    match (re == 0.0, im == 0.0) {
        (_, true) => real_text(re),
        (true, false) => imag(im),
        (false, false) => {
            let sign = if im < 0.0 { "-" } else { "+" };
            let mag = imag(im.abs());
            format!("({}{}{})", real_text(re), sign, mag)
        }
    }
}
