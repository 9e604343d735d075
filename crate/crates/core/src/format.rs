//! Fixed-precision number formatting for JSON and CSV output.

use serde::Serialize;
use serde_json::{Number, Value};

/// Significant digits of every printed real.
pub const SIG_DIGITS: usize = 9;

/// `x` rounded to nine significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIG_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Nine significant digits, trailing zeros removed; `nan`, `inf`, `-inf` for non-finite values.
pub fn fmt_real(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = round_sig(x);
    if r == 0.0 {
        return "0".into();
    }
    let mag = r.abs();
    if (1e-5..1e16).contains(&mag) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

fn normalize(v: Value) -> Value {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => match n.as_f64() {
            Some(x) => fmt_real(x).parse::<Number>().map(Value::Number).unwrap_or(Value::Null),
            None => Value::Null,
        },
        Value::Array(a) => Value::Array(a.into_iter().map(normalize).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, normalize(v))).collect()),
        other => other,
    }
}

/// Compact JSON with every real printed to nine significant digits.
///
/// Non-finite reals become `null`.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let v = serde_json::to_value(value).unwrap_or(Value::Null);
    normalize(v).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn reals() {
        assert_eq!(fmt_real(1.25), "1.25");
        assert_eq!(fmt_real(1.0), "1");
        assert_eq!(fmt_real(1.64f64.sqrt()), "1.28062485");
        assert_eq!(fmt_real(-0.0), "0");
        assert_eq!(fmt_real(f64::NAN), "nan");
        assert_eq!(fmt_real(1.922795554883314e-11), "1.92279555e-11");
        assert_eq!(fmt_real(123456789012.0), "123456789000");
    }

    #[test]
    fn json_numbers() {
        let v = json!({"n": 0, "B": 1.0, "x": [1.64f64.sqrt(), f64::NAN], "rho": 1.2500000000000002});
        assert_eq!(to_json(&v), r#"{"n":0,"B":1,"x":[1.28062485,null],"rho":1.25}"#);
    }
}
