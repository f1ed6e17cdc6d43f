//! State equivalence for scoring a run against ground truth.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::diff::{analyze_change, canonical_value, render_summary};
use crate::doc::{canonical_json, DocumentState};
use crate::llm::{complete_json_checked, prompts, render_prompt, ChatModel, LlmError};

/// Tolerance for physical dimensions in canonical mode, in points.
pub const DIMENSION_TOLERANCE_PT: f64 = 0.5;

/// Keys whose numbers (or arrays of numbers) are physical dimensions.
const DIMENSION_KEYS: &[&str] = &["width_pt", "height_pt", "row_heights_pt", "col_widths_pt"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JudgeMode {
    Strict,
    #[default]
    Canonical,
    Model,
}

impl JudgeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            JudgeMode::Strict => "strict",
            JudgeMode::Canonical => "canonical",
            JudgeMode::Model => "model",
        }
    }
}

impl fmt::Display for JudgeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for JudgeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(JudgeMode::Strict),
            "canonical" => Ok(JudgeMode::Canonical),
            "model" => Ok(JudgeMode::Model),
            other => Err(format!("unknown judge mode `{other}`")),
        }
    }
}

/// Byte equality of canonical JSON.
pub fn strict_equal(actual: &DocumentState, expected: &DocumentState) -> bool {
    actual == expected || canonical_json(actual) == canonical_json(expected)
}

/// Equality after normalization: whitespace runs collapse to one space,
/// adjacent runs with equal formatting merge, dimensions match within
/// [`DIMENSION_TOLERANCE_PT`], and image sequence numbers are ignored.
pub fn canonical_equal(actual: &DocumentState, expected: &DocumentState) -> bool {
    let a = normalize(canonical_value(actual));
    let b = normalize(canonical_value(expected));
    values_match(&a, &b, false)
}

fn collapse(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut in_ws = false;
    for ch in s.chars() {
        if ch.is_whitespace() {
            if !in_ws {
                out.push(' ');
            }
            in_ws = true;
        } else {
            out.push(ch);
            in_ws = false;
        }
    }
    out
}

fn without_text(run: &Map<String, Value>) -> Map<String, Value> {
    let mut m = run.clone();
    m.remove("text");
    m
}

fn merge_runs(runs: Vec<Value>) -> Vec<Value> {
    let mut out: Vec<Value> = Vec::with_capacity(runs.len());
    for r in runs {
        let Value::Object(mut obj) = r else {
            out.push(r);
            continue;
        };
        let text = obj
            .get("text")
            .and_then(Value::as_str)
            .unwrap_or("")
            .to_string();
        if text.is_empty() {
            continue;
        }
        if let Some(Value::Object(last)) = out.last_mut() {
            if without_text(last) == without_text(&obj) {
                let joined = format!("{}{}", last["text"].as_str().unwrap_or(""), text);
                last.insert("text".into(), Value::String(collapse(&joined)));
                continue;
            }
        }
        obj.insert("text".into(), Value::String(collapse(&text)));
        out.push(Value::Object(obj));
    }
    out
}

fn normalize(v: Value) -> Value {
    match v {
        Value::String(s) => Value::String(collapse(&s)),
        Value::Array(items) => Value::Array(items.into_iter().map(normalize).collect()),
        Value::Object(map) => {
            let mut out = Map::new();
            for (k, v) in map {
                let v = match (k.as_str(), v) {
                    ("image_sequence_index", _) => Value::Null,
                    ("runs", Value::Array(runs)) => {
                        Value::Array(merge_runs(runs.into_iter().map(normalize).collect()))
                    }
                    (_, v) => normalize(v),
                };
                out.insert(k, v);
            }
            Value::Object(out)
        }
        other => other,
    }
}

fn values_match(a: &Value, b: &Value, dimension: bool) -> bool {
    match (a, b) {
        (Value::Object(x), Value::Object(y)) => {
            x.len() == y.len()
                && x.iter().all(|(k, va)| {
                    y.get(k).is_some_and(|vb| {
                        values_match(va, vb, DIMENSION_KEYS.contains(&k.as_str()))
                    })
                })
        }
        (Value::Array(x), Value::Array(y)) => {
            x.len() == y.len() && x.iter().zip(y).all(|(p, q)| values_match(p, q, dimension))
        }
        (Value::Number(x), Value::Number(y)) if dimension => match (x.as_f64(), y.as_f64()) {
            (Some(p), Some(q)) => (p - q).abs() <= DIMENSION_TOLERANCE_PT + 1e-9,
            _ => x == y,
        },
        _ => a == b,
    }
}

/// Ask a model whether the remaining differences matter. Identical states
/// never reach the model.
pub fn model_equal(
    actual: &DocumentState,
    expected: &DocumentState,
    instruction: &str,
    model: &dyn ChatModel,
) -> Result<bool, LlmError> {
    if strict_equal(actual, expected) {
        return Ok(true);
    }
    let changes = render_summary(&analyze_change(expected, actual));
    let prompt = render_prompt(
        prompts::JUDGE,
        &[("changes", &changes), ("instruction", instruction)],
    );
    let (v, _) = complete_json_checked(model, &prompt, |v| match v.get("equivalent") {
        Some(Value::Bool(_)) => Ok(()),
        _ => Err("missing boolean field `equivalent`".into()),
    })?;
    Ok(v["equivalent"].as_bool().unwrap_or(false))
}

/// Deterministic judging; model mode needs [`model_equal`] and a client.
pub fn judge_equivalence(
    actual: &DocumentState,
    expected: &DocumentState,
    mode: JudgeMode,
) -> Result<bool, LlmError> {
    match mode {
        JudgeMode::Strict => Ok(strict_equal(actual, expected)),
        JudgeMode::Canonical => Ok(canonical_equal(actual, expected)),
        JudgeMode::Model => Err(LlmError::ModelUnavailable(
            "model judging needs a model client".into(),
        )),
    }
}
