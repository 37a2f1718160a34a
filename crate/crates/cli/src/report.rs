//! JSON helpers. Numbers carry 17 significant digits; infinities become the
//! strings `"inf"` / `"-inf"` and NaN becomes `null`.

use bmm_core::{BinaryMatrix, FlipProfile};
use serde_json::{Map, Number, Value};

pub const SCHEMA_VERSION: u64 = 1;

pub fn num(x: f64) -> Value {
    if x.is_nan() {
        Value::Null
    } else if x.is_infinite() {
        Value::String(if x > 0.0 { "inf" } else { "-inf" }.into())
    } else {
        let text = format!("{x:.16e}");
        Value::Number(
            text.parse::<Number>()
                .expect("formatted float is a JSON number"),
        )
    }
}

pub fn matrix(m: &BinaryMatrix) -> Value {
    Value::Array(m.row_strings().into_iter().map(Value::String).collect())
}

pub fn profile(p: &FlipProfile) -> Value {
    Value::Array(p.flips().iter().map(|&f| num(f)).collect())
}

/// Starts a report object with the schema version and command name.
pub fn header(command: &str) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("schema_version".into(), SCHEMA_VERSION.into());
    m.insert("command".into(), command.into());
    m
}
