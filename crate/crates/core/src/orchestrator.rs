//! The stepwise execution loop with snapshot-based rollback.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bench::SessionRecord;
use crate::diff::{analyze_change, render_summary, NO_CHANGES};
use crate::doc::{Document, DocumentState, StateParseError};
use crate::intent::{IntentClassifier, RuleClassifier};
use crate::planner::{FullPlanner, PlanContext, PlanError, Planner, StepKind, STEP_CAP};
use crate::registry::{ApiCall, ApiSchema, ExecError, Registry};
use crate::validator::{gate, GateDecision, ValidationInput, ValidationVerdict, Validator};

pub const TRACE_VERSION: u32 = 1;
pub const DEFAULT_SESSION_TIMEOUT_SECS: u64 = 600;
/// Candidate APIs come from this many top-ranked intent categories.
pub const CANDIDATE_INTENTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RollbackMode {
    None,
    ArgOnly,
    SingleRoundDual,
    MultiRound,
}

/// How far a rejected step may escalate. A round is one argument-level
/// attempt followed by one API-level attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct RollbackPolicy {
    mode: RollbackMode,
    rounds: u32,
}

impl RollbackPolicy {
    pub const NONE: RollbackPolicy = RollbackPolicy {
        mode: RollbackMode::None,
        rounds: 0,
    };
    pub const ARG_ONLY: RollbackPolicy = RollbackPolicy {
        mode: RollbackMode::ArgOnly,
        rounds: 1,
    };
    pub const SINGLE_ROUND_DUAL: RollbackPolicy = RollbackPolicy {
        mode: RollbackMode::SingleRoundDual,
        rounds: 1,
    };

    /// `multi_round(1)` is the same policy as `single_round_dual`.
    pub fn multi_round(rounds: u32) -> Self {
        assert!(rounds >= 1, "multi_round needs at least one round");
        if rounds == 1 {
            return Self::SINGLE_ROUND_DUAL;
        }
        RollbackPolicy {
            mode: RollbackMode::MultiRound,
            rounds,
        }
    }

    /// The four ablation variants, weakest first.
    pub fn ablation() -> [RollbackPolicy; 4] {
        [
            Self::NONE,
            Self::ARG_ONLY,
            Self::SINGLE_ROUND_DUAL,
            Self::multi_round(2),
        ]
    }

    pub fn mode(&self) -> RollbackMode {
        self.mode
    }

    pub fn rounds(&self) -> u32 {
        self.rounds
    }

    pub fn has_api_tier(&self) -> bool {
        matches!(
            self.mode,
            RollbackMode::SingleRoundDual | RollbackMode::MultiRound
        )
    }

    pub fn max_attempts(&self) -> usize {
        match self.mode {
            RollbackMode::None => 1,
            RollbackMode::ArgOnly => 2,
            _ => 1 + 2 * self.rounds as usize,
        }
    }
}

impl Default for RollbackPolicy {
    fn default() -> Self {
        Self::SINGLE_ROUND_DUAL
    }
}

impl fmt::Display for RollbackPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mode {
            RollbackMode::None => f.write_str("none"),
            RollbackMode::ArgOnly => f.write_str("arg_only"),
            RollbackMode::SingleRoundDual => f.write_str("single_round_dual"),
            RollbackMode::MultiRound => write!(f, "multi_round({})", self.rounds),
        }
    }
}

impl FromStr for RollbackPolicy {
    type Err = String;

    /// Accepts `none`, `arg_only`, `single_round_dual`, `multi_round(k)`,
    /// `multi_round:k` and `two_round`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "none" => return Ok(Self::NONE),
            "arg_only" => return Ok(Self::ARG_ONLY),
            "single_round_dual" => return Ok(Self::SINGLE_ROUND_DUAL),
            "two_round" => return Ok(Self::multi_round(2)),
            _ => {}
        }
        let k = s
            .strip_prefix("multi_round(")
            .and_then(|r| r.strip_suffix(')'))
            .or_else(|| s.strip_prefix("multi_round:"))
            .ok_or_else(|| format!("unknown rollback policy `{s}`"))?;
        match k.parse::<u32>() {
            Ok(k) if k >= 1 => Ok(Self::multi_round(k)),
            _ => Err(format!("bad round count in `{s}`")),
        }
    }
}

impl From<RollbackPolicy> for String {
    fn from(p: RollbackPolicy) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for RollbackPolicy {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Which tier produced the call a step settled on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcceptedVia {
    FirstTry,
    ArgRollback,
    ApiRollback,
    /// Last API-level attempt, accepted without validation.
    ApiRollbackForced,
    /// A rejected attempt kept because the policy has no further tier.
    ForcedLastAttempt,
}

/// What happened when an attempted call ran.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum AttemptOutcome {
    Executed {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        output: Option<String>,
    },
    ExecError {
        error: ExecError,
    },
    /// The call ran but the resulting document could not be read back.
    StateError {
        message: String,
    },
}

impl AttemptOutcome {
    pub fn is_failure(&self) -> bool {
        !matches!(self, AttemptOutcome::Executed { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub call: ApiCall,
    pub outcome: AttemptOutcome,
    pub delta_summary: String,
    pub change_count: usize,
    /// Absent for the unconditionally accepted last API-level attempt.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<ValidationVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate: Option<GateDecision>,
    pub validator_tokens: u64,
}

impl Attempt {
    pub fn accepted(&self) -> bool {
        self.gate.is_none_or(|g| g.accepted())
    }

    pub fn tokens(&self) -> u64 {
        self.call.token_cost + self.validator_tokens
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepTrace {
    pub step_index: usize,
    pub sub_instruction: String,
    pub planner_tokens: u64,
    pub attempts: Vec<Attempt>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_call: Option<ApiCall>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accepted_via: Option<AcceptedVia>,
    /// Set when the planner could not produce a call; the document was restored.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl StepTrace {
    pub fn tokens(&self) -> u64 {
        self.planner_tokens + self.attempts.iter().map(Attempt::tokens).sum::<u64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstructionStatus {
    Completed,
    StepCapExceeded,
    PlanFailed,
    TimedOut,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstructionTrace {
    pub turn_id: u32,
    pub instruction: String,
    pub status: InstructionStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub steps: Vec<StepTrace>,
    /// Accepted final calls.
    pub api_count: usize,
    /// Every executed attempt, rolled back or not.
    pub attempt_count: usize,
    pub token_count: u64,
}

impl InstructionTrace {
    fn new(turn_id: u32, instruction: &str) -> Self {
        InstructionTrace {
            turn_id,
            instruction: instruction.to_string(),
            status: InstructionStatus::Completed,
            error: None,
            steps: Vec::new(),
            api_count: 0,
            attempt_count: 0,
            token_count: 0,
        }
    }

    fn push(&mut self, step: StepTrace) {
        self.api_count += usize::from(step.final_call.is_some());
        self.attempt_count += step.attempts.len();
        self.token_count += step.tokens();
        self.steps.push(step);
    }

    fn fail(&mut self, status: InstructionStatus, error: impl Into<String>) {
        self.status = status;
        self.error = Some(error.into());
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTrace {
    pub trace_version: u32,
    pub session_id: String,
    pub strategy: String,
    pub policy: String,
    pub seed: u64,
    pub instructions: Vec<InstructionTrace>,
    pub api_count: usize,
    pub token_count: u64,
}

impl SessionTrace {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("traces serialize");
        s.push('\n');
        s
    }
}

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error("cannot read the document state: {0}")]
    State(#[from] StateParseError),
}

/// Where in a session an instruction sits.
#[derive(Debug, Clone, Copy)]
pub struct TurnContext<'a> {
    pub session_id: &'a str,
    pub turn_id: u32,
    pub instruction: &'a str,
    /// Earlier instructions of the session.
    pub dialogue: &'a [String],
}

/// Candidate APIs for a sub-instruction: the union over its top intents.
pub fn candidates_for(sub: &str) -> Vec<&'static ApiSchema> {
    let intents = RuleClassifier::standard()
        .classify(sub)
        .top_k(CANDIDATE_INTENTS);
    Registry::shared().apis_for_intents(&intents, CANDIDATE_INTENTS)
}

/// Stepwise agent: planner, validator, gate threshold and rollback policy.
#[derive(Clone)]
pub struct Orchestrator {
    pub planner: Arc<dyn Planner>,
    pub validator: Arc<dyn Validator>,
    pub policy: RollbackPolicy,
    pub threshold: f64,
    pub step_cap: usize,
}

struct StepScope<'a> {
    turn: TurnContext<'a>,
    step_index: usize,
    history: &'a [ApiCall],
}

impl Orchestrator {
    pub fn new(
        planner: Arc<dyn Planner>,
        validator: Arc<dyn Validator>,
        policy: RollbackPolicy,
    ) -> Self {
        Orchestrator {
            planner,
            validator,
            policy,
            threshold: crate::validator::DEFAULT_THRESHOLD,
            step_cap: STEP_CAP,
        }
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        assert!(
            threshold > 0.0 && threshold < 1.0,
            "threshold must lie in (0, 1)"
        );
        self.threshold = threshold;
        self
    }

    pub fn with_step_cap(mut self, step_cap: usize) -> Self {
        self.step_cap = step_cap;
        self
    }

    /// Plan and execute one instruction step by step. The document ends at
    /// the last accepted state whatever the outcome.
    pub fn run_instruction(
        &self,
        turn: TurnContext<'_>,
        doc: &mut Document,
        deadline: Option<Instant>,
    ) -> InstructionTrace {
        let mut trace = InstructionTrace::new(turn.turn_id, turn.instruction);
        let mut history: Vec<ApiCall> = Vec::new();
        for step_index in 0.. {
            if step_index >= self.step_cap {
                trace.fail(
                    InstructionStatus::StepCapExceeded,
                    format!("{} steps", self.step_cap),
                );
                break;
            }
            if deadline.is_some_and(|d| Instant::now() >= d) {
                trace.fail(InstructionStatus::TimedOut, "session time limit reached");
                break;
            }
            let state = match doc.extract_state() {
                Ok(s) => s,
                Err(e) => {
                    trace.fail(InstructionStatus::PlanFailed, e.to_string());
                    break;
                }
            };
            let ctx = PlanContext {
                instruction: turn.instruction,
                session_id: turn.session_id,
                turn_id: turn.turn_id,
                step_index,
                attempt: 0,
                history: &history,
                state: &state,
                session_dialogue: turn.dialogue,
            };
            let plan = match self.planner.next_step(&ctx) {
                Ok(p) => p,
                Err(e) => {
                    trace.fail(InstructionStatus::PlanFailed, e.to_string());
                    break;
                }
            };
            if plan.kind == StepKind::Done {
                trace.token_count += plan.token_cost;
                break;
            }
            let sub = plan.sub_instruction.clone().unwrap_or_default();
            let scope = StepScope {
                turn,
                step_index,
                history: &history,
            };
            let mut step = self.execute_step(&sub, doc, &state, &scope);
            step.planner_tokens = plan.token_cost;
            let unavailable = step
                .error
                .as_deref()
                .filter(|e| e.starts_with("model unavailable"))
                .map(String::from);
            if let Some(c) = &step.final_call {
                history.push(c.clone());
            }
            trace.push(step);
            if let Some(e) = unavailable {
                trace.fail(InstructionStatus::PlanFailed, e);
                break;
            }
        }
        trace
    }

    fn execute_step(
        &self,
        sub: &str,
        doc: &mut Document,
        before: &DocumentState,
        scope: &StepScope<'_>,
    ) -> StepTrace {
        let snapshot = doc.snapshot();
        let candidates = candidates_for(sub);
        let mut step = StepTrace {
            step_index: scope.step_index,
            sub_instruction: sub.to_string(),
            planner_tokens: 0,
            attempts: Vec::new(),
            final_call: None,
            accepted_via: None,
            error: None,
        };
        let ctx = |attempt: usize| PlanContext {
            instruction: scope.turn.instruction,
            session_id: scope.turn.session_id,
            turn_id: scope.turn.turn_id,
            step_index: scope.step_index,
            attempt,
            history: scope.history,
            state: before,
            session_dialogue: scope.turn.dialogue,
        };
        let restore = |doc: &mut Document| {
            doc.restore(&snapshot)
                .expect("snapshot taken from this document");
        };
        let abort = |doc: &mut Document, step: &mut StepTrace, e: PlanError| {
            doc.restore(&snapshot)
                .expect("snapshot taken from this document");
            step.error = Some(e.to_string());
        };

        let call = match self.planner.generate_api(sub, &candidates, &ctx(0)) {
            Ok(c) => c,
            Err(e) => {
                abort(doc, &mut step, e);
                return step;
            }
        };
        let first = self.attempt(call, sub, doc, before, scope, true);
        if self.settle(&mut step, first, AcceptedVia::FirstTry) {
            return step;
        }
        if self.policy.mode() == RollbackMode::None {
            force_last(&mut step);
            return step;
        }

        for round in 0..self.policy.rounds() {
            let last = step.attempts.last().expect("at least one attempt").clone();
            let skip_arg_tier = last.outcome.is_failure() && self.policy.has_api_tier();
            let mut basis = last;
            if !skip_arg_tier {
                restore(doc);
                let verdict = basis
                    .verdict
                    .clone()
                    .unwrap_or_else(ValidationVerdict::unparseable);
                let call = match self.planner.revise_arguments(
                    sub,
                    &basis.call,
                    &verdict,
                    &ctx(step.attempts.len()),
                ) {
                    Ok(c) => c,
                    Err(e) => {
                        abort(doc, &mut step, e);
                        return step;
                    }
                };
                let a = self.attempt(call, sub, doc, before, scope, true);
                if self.settle(&mut step, a, AcceptedVia::ArgRollback) {
                    return step;
                }
                if !self.policy.has_api_tier() {
                    force_last(&mut step);
                    return step;
                }
                basis = step.attempts.last().expect("just pushed").clone();
            }

            restore(doc);
            let verdict = basis
                .verdict
                .clone()
                .unwrap_or_else(ValidationVerdict::unparseable);
            let call = match self.planner.regenerate_api(
                sub,
                &basis.call,
                &verdict,
                &candidates,
                &ctx(step.attempts.len()),
            ) {
                Ok(c) => c,
                Err(e) => {
                    abort(doc, &mut step, e);
                    return step;
                }
            };
            let last_round = round + 1 == self.policy.rounds();
            let a = self.attempt(call, sub, doc, before, scope, !last_round);
            let via = if last_round {
                AcceptedVia::ApiRollbackForced
            } else {
                AcceptedVia::ApiRollback
            };
            if self.settle(&mut step, a, via) {
                return step;
            }
        }
        unreachable!("the last round always accepts its API-level attempt")
    }

    /// Record an attempt; on acceptance fix the step's outcome.
    fn settle(&self, step: &mut StepTrace, a: Attempt, via: AcceptedVia) -> bool {
        let accepted = a.accepted();
        if accepted {
            step.final_call = Some(a.call.clone());
            step.accepted_via = Some(via);
        }
        step.attempts.push(a);
        accepted
    }

    /// Execute, read back, diff and (optionally) validate one call. A call
    /// whose result cannot be read back is undone immediately.
    fn attempt(
        &self,
        call: ApiCall,
        sub: &str,
        doc: &mut Document,
        before: &DocumentState,
        scope: &StepScope<'_>,
        validate: bool,
    ) -> Attempt {
        let snapshot = doc.snapshot();
        let mut attempt = Attempt {
            call,
            outcome: AttemptOutcome::Executed { output: None },
            delta_summary: NO_CHANGES.to_string(),
            change_count: 0,
            verdict: None,
            gate: None,
            validator_tokens: 0,
        };
        let failure = match Registry::shared().execute(&attempt.call, doc) {
            Err(error) => {
                let msg = format!("execution failed: {error}");
                attempt.outcome = AttemptOutcome::ExecError { error };
                Some(msg)
            }
            Ok(output) => match doc.extract_state() {
                Err(e) => {
                    doc.restore(&snapshot)
                        .expect("snapshot taken from this document");
                    attempt.outcome = AttemptOutcome::StateError {
                        message: e.to_string(),
                    };
                    Some(format!("document state unreadable after the call: {e}"))
                }
                Ok(after) => {
                    attempt.outcome = AttemptOutcome::Executed { output };
                    let delta = analyze_change(before, &after);
                    attempt.delta_summary = render_summary(&delta);
                    attempt.change_count = delta.len();
                    if validate {
                        let input = ValidationInput {
                            sub_instruction: sub,
                            delta: &delta,
                            before,
                            state: &after,
                            history: scope.history,
                            session_id: scope.turn.session_id,
                            turn_id: scope.turn.turn_id,
                            step_index: scope.step_index,
                        };
                        let verdict = match self.validator.validate(&input) {
                            Ok(v) => {
                                attempt.validator_tokens = v.tokens;
                                v.verdict
                            }
                            Err(e) => {
                                ValidationVerdict::fail(1.0, format!("validator unavailable: {e}"))
                            }
                        };
                        attempt.gate = Some(gate(&verdict, self.threshold));
                        attempt.verdict = Some(verdict);
                    }
                    None
                }
            },
        };
        if let Some(msg) = failure {
            if validate {
                let verdict = ValidationVerdict::fail(1.0, msg);
                attempt.gate = Some(gate(&verdict, self.threshold));
                attempt.verdict = Some(verdict);
            }
        }
        attempt
    }
}

fn force_last(step: &mut StepTrace) {
    let last = step.attempts.last().expect("at least one attempt");
    step.final_call = Some(last.call.clone());
    step.accepted_via = Some(AcceptedVia::ForcedLastAttempt);
}

/// Execute a whole up-front plan with no validation or rollback. Calls that
/// fail to execute leave the document unchanged and are not counted.
pub fn run_upfront(
    planner: &dyn FullPlanner,
    turn: TurnContext<'_>,
    doc: &mut Document,
) -> InstructionTrace {
    let mut trace = InstructionTrace::new(turn.turn_id, turn.instruction);
    let state = match doc.extract_state() {
        Ok(s) => s,
        Err(e) => {
            trace.fail(InstructionStatus::PlanFailed, e.to_string());
            return trace;
        }
    };
    let ctx = PlanContext {
        instruction: turn.instruction,
        session_id: turn.session_id,
        turn_id: turn.turn_id,
        step_index: 0,
        attempt: 0,
        history: &[],
        state: &state,
        session_dialogue: turn.dialogue,
    };
    let plan = match planner.plan_full(&ctx) {
        Ok(p) => p,
        Err(e) => {
            trace.fail(InstructionStatus::PlanFailed, e.to_string());
            return trace;
        }
    };
    trace.token_count = plan.tokens;
    let mut prev = state;
    for (i, call) in plan.calls.into_iter().enumerate() {
        let mut attempt = Attempt {
            call,
            outcome: AttemptOutcome::Executed { output: None },
            delta_summary: NO_CHANGES.to_string(),
            change_count: 0,
            verdict: None,
            gate: None,
            validator_tokens: 0,
        };
        let snapshot = doc.snapshot();
        let mut ok = false;
        match Registry::shared().execute(&attempt.call, doc) {
            Err(error) => attempt.outcome = AttemptOutcome::ExecError { error },
            Ok(output) => match doc.extract_state() {
                Err(e) => {
                    doc.restore(&snapshot)
                        .expect("snapshot taken from this document");
                    attempt.outcome = AttemptOutcome::StateError {
                        message: e.to_string(),
                    };
                }
                Ok(after) => {
                    let delta = analyze_change(&prev, &after);
                    attempt.outcome = AttemptOutcome::Executed { output };
                    attempt.delta_summary = render_summary(&delta);
                    attempt.change_count = delta.len();
                    prev = after;
                    ok = true;
                }
            },
        }
        let step = StepTrace {
            step_index: i,
            sub_instruction: String::new(),
            planner_tokens: 0,
            final_call: ok.then(|| attempt.call.clone()),
            accepted_via: ok.then_some(AcceptedVia::FirstTry),
            attempts: vec![attempt],
            error: None,
        };
        trace.push(step);
    }
    trace
}

/// An agent that can run instructions: stepwise with rollback, or up front.
#[derive(Clone)]
pub enum Engine {
    Stepwise(Orchestrator),
    Upfront(Arc<dyn FullPlanner>),
}

impl Engine {
    pub fn run_instruction(
        &self,
        turn: TurnContext<'_>,
        doc: &mut Document,
        deadline: Option<Instant>,
    ) -> InstructionTrace {
        match self {
            Engine::Stepwise(o) => o.run_instruction(turn, doc, deadline),
            Engine::Upfront(p) => {
                if deadline.is_some_and(|d| Instant::now() >= d) {
                    let mut t = InstructionTrace::new(turn.turn_id, turn.instruction);
                    t.fail(InstructionStatus::TimedOut, "session time limit reached");
                    return t;
                }
                run_upfront(p.as_ref(), turn, doc)
            }
        }
    }
}

/// Labels recorded in a session trace.
#[derive(Debug, Clone, Default)]
pub struct TraceLabels {
    pub strategy: String,
    pub policy: String,
    pub seed: u64,
}

/// Outcome of one session run: the trace and the document state after each
/// instruction (`None` where the state could not be read).
#[derive(Debug, Clone)]
pub struct SessionRun {
    pub trace: SessionTrace,
    pub end_states: Vec<Option<DocumentState>>,
}

/// Run every instruction of a session in order on one evolving document.
/// A failed instruction does not stop the session.
pub fn run_session(
    engine: &Engine,
    session: &SessionRecord,
    labels: &TraceLabels,
    deadline: Option<Instant>,
) -> Result<SessionRun, OrchestratorError> {
    let mut doc = Document::from_state(&session.initial_state)?;
    let mut dialogue: Vec<String> = Vec::new();
    let mut instructions = Vec::with_capacity(session.turns.len());
    let mut end_states = Vec::with_capacity(session.turns.len());
    for turn in &session.turns {
        let ctx = TurnContext {
            session_id: &session.session_id,
            turn_id: turn.turn_id,
            instruction: &turn.instruction,
            dialogue: &dialogue,
        };
        let trace = engine.run_instruction(ctx, &mut doc, deadline);
        end_states.push(doc.extract_state().ok());
        instructions.push(trace);
        dialogue.push(turn.instruction.clone());
    }
    let trace = SessionTrace {
        trace_version: TRACE_VERSION,
        session_id: session.session_id.clone(),
        strategy: labels.strategy.clone(),
        policy: labels.policy.clone(),
        seed: labels.seed,
        api_count: instructions.iter().map(|t| t.api_count).sum(),
        token_count: instructions.iter().map(|t| t.token_count).sum(),
        instructions,
    };
    Ok(SessionRun { trace, end_states })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policy_names_round_trip() {
        for p in RollbackPolicy::ablation()
            .into_iter()
            .chain([RollbackPolicy::multi_round(3)])
        {
            assert_eq!(p.to_string().parse::<RollbackPolicy>().unwrap(), p);
        }
        assert_eq!(
            "multi_round(1)".parse::<RollbackPolicy>().unwrap(),
            RollbackPolicy::SINGLE_ROUND_DUAL
        );
        assert_eq!(
            "two_round"
                .parse::<RollbackPolicy>()
                .unwrap()
                .max_attempts(),
            5
        );
        assert!("multi_round(0)".parse::<RollbackPolicy>().is_err());
    }
}
