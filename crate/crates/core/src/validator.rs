//! Step validation and the confidence gate.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bench::strict_equal;
use crate::diff::{analyze_change, render_summary, StateDelta};
use crate::doc::{to_canonical_string, Document, DocumentState};
use crate::llm::{
    complete_json_checked, estimate_tokens, prompts, render_prompt, ChatModel, LlmError,
    SharedModel,
};
use crate::phrasing::Phrasebook;
use crate::planner::Annotations;
use crate::registry::{ApiCall, Registry};

pub const DEFAULT_THRESHOLD: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationVerdict {
    pub decision: Decision,
    pub confidence: f64,
    pub explanation: String,
}

impl ValidationVerdict {
    /// Confidence is clamped into `[0, 1]`; a failing verdict always explains itself.
    pub fn new(decision: Decision, confidence: f64, explanation: impl Into<String>) -> Self {
        let mut explanation = explanation.into();
        if decision == Decision::Fail && explanation.trim().is_empty() {
            explanation = "no explanation given".into();
        }
        let confidence = if confidence.is_nan() {
            1.0
        } else {
            confidence.clamp(0.0, 1.0)
        };
        ValidationVerdict {
            decision,
            confidence,
            explanation,
        }
    }

    pub fn pass(confidence: f64, explanation: impl Into<String>) -> Self {
        Self::new(Decision::Pass, confidence, explanation)
    }

    pub fn fail(confidence: f64, explanation: impl Into<String>) -> Self {
        Self::new(Decision::Fail, confidence, explanation)
    }

    /// The verdict used when the model reply cannot be read.
    pub fn unparseable() -> Self {
        Self::fail(1.0, "unparseable verdict")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateOutcome {
    Accept,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateReason {
    PassHighConf,
    LowConfDefaultAccept,
    FailHighConf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateDecision {
    pub outcome: GateOutcome,
    pub reason: GateReason,
}

impl GateDecision {
    pub fn accepted(&self) -> bool {
        self.outcome == GateOutcome::Accept
    }
}

/// Accept a confident pass or any low-confidence verdict; reject a confident
/// fail. Confidence equal to the threshold counts as confident.
pub fn gate(verdict: &ValidationVerdict, threshold: f64) -> GateDecision {
    assert!(
        threshold > 0.0 && threshold < 1.0,
        "threshold must lie in (0, 1)"
    );
    let confident = verdict.confidence >= threshold;
    let (outcome, reason) = match (verdict.decision, confident) {
        (Decision::Pass, true) => (GateOutcome::Accept, GateReason::PassHighConf),
        (Decision::Fail, true) => (GateOutcome::Reject, GateReason::FailHighConf),
        (_, false) => (GateOutcome::Accept, GateReason::LowConfDefaultAccept),
    };
    GateDecision { outcome, reason }
}

/// Everything a validator may look at for one executed step.
#[derive(Debug, Clone, Copy)]
pub struct ValidationInput<'a> {
    pub sub_instruction: &'a str,
    pub delta: &'a StateDelta,
    /// State before the step. Only the reference validators use it.
    pub before: &'a DocumentState,
    pub state: &'a DocumentState,
    pub history: &'a [ApiCall],
    pub session_id: &'a str,
    pub turn_id: u32,
    pub step_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Validated {
    pub verdict: ValidationVerdict,
    pub tokens: u64,
}

pub trait Validator: Send + Sync {
    /// Only `ModelUnavailable` is an error; unreadable replies become a failing verdict.
    fn validate(&self, input: &ValidationInput<'_>) -> Result<Validated, LlmError>;
}

fn history_text(history: &[ApiCall]) -> String {
    if history.is_empty() {
        return "(none)".into();
    }
    history
        .iter()
        .enumerate()
        .map(|(i, c)| format!("{}. {c}", i + 1))
        .collect::<Vec<_>>()
        .join("\n")
}

pub(crate) fn validation_prompt(input: &ValidationInput<'_>) -> String {
    render_prompt(
        prompts::VALIDATE,
        &[
            ("sub_instruction", input.sub_instruction),
            ("history", &history_text(input.history)),
            ("delta", &render_summary(input.delta)),
            ("state", &to_canonical_string(input.state)),
        ],
    )
}

/// Token cost charged by the simulated validators: the prompt a model would
/// have received plus the verdict it would have returned.
fn simulated_tokens(input: &ValidationInput<'_>, verdict: &ValidationVerdict) -> u64 {
    let reply = serde_json::to_string(verdict).unwrap_or_default();
    estimate_tokens(&validation_prompt(input)) + estimate_tokens(&reply)
}

/// The state `call` would produce from `before`; unchanged if it cannot run.
fn expected_after(call: &ApiCall, before: &DocumentState) -> DocumentState {
    let Ok(mut doc) = Document::from_state(before) else {
        return before.clone();
    };
    match Registry::shared().execute(call, &mut doc) {
        Ok(_) => doc.extract_state().unwrap_or_else(|_| before.clone()),
        Err(_) => before.clone(),
    }
}

fn compare(expected: &DocumentState, actual: &DocumentState) -> ValidationVerdict {
    if strict_equal(actual, expected) {
        return ValidationVerdict::pass(1.0, "state matches the expected result");
    }
    let summary = render_summary(&analyze_change(expected, actual));
    let first = summary
        .lines()
        .next()
        .unwrap_or("state differs")
        .trim_start_matches("- ");
    ValidationVerdict::fail(1.0, format!("differs from the expected result: {first}"))
}

/// Reference validator: compares the produced state with what the annotated
/// call for this step would have produced from the same starting state.
#[derive(Debug, Clone)]
pub struct OracleValidator {
    annotations: Arc<Annotations>,
}

impl OracleValidator {
    pub fn new(annotations: Arc<Annotations>) -> Self {
        OracleValidator { annotations }
    }
}

impl Validator for OracleValidator {
    fn validate(&self, input: &ValidationInput<'_>) -> Result<Validated, LlmError> {
        let verdict = match self
            .annotations
            .step(input.session_id, input.turn_id, input.step_index)
        {
            Some((_, call)) => compare(&expected_after(call, input.before), input.state),
            None => ValidationVerdict::fail(1.0, "no annotated step at this position"),
        };
        let tokens = simulated_tokens(input, &verdict);
        Ok(Validated { verdict, tokens })
    }
}

/// Annotation-free checker for interactive use: reads the sub-instruction
/// with the phrasebook and compares against that call's effect. Text it
/// cannot read gets a low-confidence verdict, which the gate accepts.
#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicValidator;

impl Validator for HeuristicValidator {
    fn validate(&self, input: &ValidationInput<'_>) -> Result<Validated, LlmError> {
        let verdict = match Phrasebook::standard().parse_sub(input.sub_instruction) {
            Some(call) => compare(&expected_after(&call, input.before), input.state),
            None if input.delta.is_empty => {
                ValidationVerdict::fail(0.7, "the step did not change the document")
            }
            None => ValidationVerdict::pass(
                0.4,
                "sub-instruction not understood; change looks plausible",
            ),
        };
        let tokens = simulated_tokens(input, &verdict);
        Ok(Validated { verdict, tokens })
    }
}

/// Asks a chat model for a JSON verdict.
#[derive(Clone)]
pub struct ModelValidator {
    model: SharedModel,
}

impl ModelValidator {
    pub fn new(model: SharedModel) -> Self {
        ModelValidator { model }
    }
}

fn check_verdict(v: &Value) -> Result<(), String> {
    match v.get("decision").and_then(Value::as_str) {
        Some("pass") | Some("fail") => {}
        _ => return Err("`decision` must be \"pass\" or \"fail\"".into()),
    }
    match v.get("confidence").and_then(Value::as_f64) {
        Some(c) if (0.0..=1.0).contains(&c) => {}
        _ => return Err("`confidence` must be a number in [0, 1]".into()),
    }
    if !v.get("explanation").is_some_and(Value::is_string) {
        return Err("`explanation` must be a string".into());
    }
    Ok(())
}

/// Parse a verdict object as requested from the model.
pub fn parse_verdict(v: &Value) -> Option<ValidationVerdict> {
    check_verdict(v).ok()?;
    let decision = match v["decision"].as_str()? {
        "pass" => Decision::Pass,
        _ => Decision::Fail,
    };
    Some(ValidationVerdict::new(
        decision,
        v["confidence"].as_f64()?,
        v["explanation"].as_str()?,
    ))
}

impl Validator for ModelValidator {
    fn validate(&self, input: &ValidationInput<'_>) -> Result<Validated, LlmError> {
        let model: &dyn ChatModel = self.model.as_ref();
        let before = model.meter().total();
        let verdict = match complete_json_checked(model, &validation_prompt(input), check_verdict) {
            Ok((v, _)) => parse_verdict(&v).unwrap_or_else(ValidationVerdict::unparseable),
            Err(LlmError::MalformedModelOutput(_)) => ValidationVerdict::unparseable(),
            Err(e) => return Err(e),
        };
        let tokens = model.meter().total() - before;
        Ok(Validated { verdict, tokens })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gate_examples() {
        let g = |d, c| gate(&ValidationVerdict::new(d, c, "x"), DEFAULT_THRESHOLD);
        assert_eq!(g(Decision::Pass, 0.9).reason, GateReason::PassHighConf);
        assert_eq!(
            g(Decision::Fail, 0.3).reason,
            GateReason::LowConfDefaultAccept
        );
        assert_eq!(g(Decision::Fail, 0.8).outcome, GateOutcome::Reject);
        assert_eq!(
            g(Decision::Pass, 0.5).reason,
            GateReason::LowConfDefaultAccept
        );
        assert_eq!(g(Decision::Fail, 0.6).outcome, GateOutcome::Reject);
    }

    #[test]
    fn malformed_reply_is_a_confident_fail() {
        use crate::llm::CannedModel;
        let m: SharedModel = Arc::new(CannedModel::new(["not json", "still not json"]));
        let st = crate::doc::new_document().extract_state().unwrap();
        let delta = StateDelta::default();
        let input = ValidationInput {
            sub_instruction: "add a paragraph",
            delta: &delta,
            before: &st,
            state: &st,
            history: &[],
            session_id: "s",
            turn_id: 1,
            step_index: 0,
        };
        let v = ModelValidator::new(m).validate(&input).unwrap();
        assert_eq!(v.verdict, ValidationVerdict::unparseable());
        assert!(v.tokens > 0);
    }
}
