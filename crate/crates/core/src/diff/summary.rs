use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::analyze::{Change, StateDelta};
use super::matcher::{OpTag, Opcode};
use crate::doc::value_to_canonical_string;
use crate::llm::{complete_json_checked, prompts, render_prompt, ChatModel, LlmError};

pub const NO_CHANGES: &str = "no changes detected";
const MAX_VALUE_CHARS: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SummaryMode {
    Deterministic,
    ModelAssisted,
}

fn short(v: &Value) -> String {
    let s = value_to_canonical_string(v);
    if s.chars().count() <= MAX_VALUE_CHARS {
        s
    } else {
        let cut: String = s.chars().take(MAX_VALUE_CHARS).collect();
        format!("{cut}...")
    }
}

fn slice(s: &str, a: usize, b: usize) -> String {
    s.chars().skip(a).take(b - a).collect()
}

fn describe_ops(ops: &[Opcode], old: &str, new: &str) -> String {
    ops.iter()
        .filter(|o| o.tag != OpTag::Equal)
        .map(|o| match o.tag {
            OpTag::Insert => format!("insert {:?} at {}", slice(new, o.j1, o.j2), o.i1),
            OpTag::Delete => format!("delete {:?} at {}", slice(old, o.i1, o.i2), o.i1),
            OpTag::Replace => format!(
                "replace {:?} with {:?} at {}",
                slice(old, o.i1, o.i2),
                slice(new, o.j1, o.j2),
                o.i1
            ),
            OpTag::Equal => unreachable!(),
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn describe(c: &Change) -> String {
    let at = match (&c.old_path, &c.new_path) {
        (Some(o), Some(n)) if o != n => format!("{n} (was {o})"),
        (_, Some(n)) => n.clone(),
        (Some(o), None) => o.clone(),
        (None, None) => String::new(),
    };
    let detail = match (&c.opcodes, &c.before, &c.after) {
        (Some(ops), Some(b), Some(a)) => describe_ops(
            ops,
            b.as_str().unwrap_or_default(),
            a.as_str().unwrap_or_default(),
        ),
        (_, Some(b), Some(a)) => format!("{} -> {}", short(b), short(a)),
        (_, None, Some(a)) => short(a),
        (_, Some(b), None) => short(b),
        _ => String::new(),
    };
    let mut line = format!("{} at {at}", c.kind);
    if !detail.is_empty() {
        line.push_str(": ");
        line.push_str(&detail);
    }
    if let Some(n) = &c.note {
        line.push_str(&format!(" [{n}]"));
    }
    line
}

/// One bullet per change, channels in fixed order.
pub fn render_summary(delta: &StateDelta) -> String {
    if delta.is_empty {
        return NO_CHANGES.to_string();
    }
    delta
        .iter()
        .map(|(ch, c)| format!("- {}: {}", ch.as_str(), describe(c)))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Summarize a delta. Model-assisted mode compresses the deterministic
/// rendering and returns the model's text as is.
pub fn summarize_delta(
    delta: &StateDelta,
    mode: SummaryMode,
    model: Option<&dyn ChatModel>,
) -> Result<String, LlmError> {
    let text = render_summary(delta);
    match mode {
        SummaryMode::Deterministic => Ok(text),
        SummaryMode::ModelAssisted => {
            let model = model.ok_or_else(|| {
                LlmError::ModelUnavailable("model-assisted summary needs a model".into())
            })?;
            let prompt = render_prompt(prompts::SUMMARIZE, &[("changes", &text)]);
            let (v, _) = complete_json_checked(model, &prompt, |v| match v.get("summary") {
                Some(Value::String(_)) => Ok(()),
                _ => Err("missing string field `summary`".into()),
            })?;
            Ok(v["summary"].as_str().unwrap_or_default().to_string())
        }
    }
}
