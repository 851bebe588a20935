//! Fixed-precision number rendering for reproducible output files.
//!
//! JSON reports carry 12 significant digits, CSV files 10. Values are first
//! rounded to the requested number of significant digits and then printed in
//! their shortest round-trip form, so identical inputs always produce
//! identical bytes.

pub const JSON_SIG_DIGITS: usize = 12;
pub const CSV_SIG_DIGITS: usize = 10;

/// Rounds `x` to `digits` significant decimal digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    let s = format!("{:.*e}", digits.saturating_sub(1), x);
    s.parse().unwrap_or(x)
}

/// Renders `x` at `digits` significant digits, using exponent notation only
/// for very small or very large magnitudes.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    let r = round_sig(x, digits);
    if r == 0.0 {
        return "0".to_string();
    }
    let a = r.abs();
    if (1e-5..1e15).contains(&a) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

pub fn fmt_csv(x: f64) -> String {
    fmt_sig(x, CSV_SIG_DIGITS)
}

/// Recursively rounds every number in a JSON value to 12 significant digits.
pub fn round_json(value: &mut serde_json::Value) {
    use serde_json::Value;
    match value {
        Value::Number(n) => {
            if n.is_f64() {
                if let Some(f) = n.as_f64() {
                    if let Some(r) = serde_json::Number::from_f64(round_sig(f, JSON_SIG_DIGITS)) {
                        *n = r;
                    }
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

/// Serializes `value` as pretty JSON with all floats at 12 significant digits.
pub fn to_json_string<T: serde::Serialize>(value: &T) -> serde_json::Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_json(&mut v);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}
