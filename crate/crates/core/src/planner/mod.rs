//! Planning: pick the next sub-instruction and the call that performs it.

mod baseline;
mod faults;
mod model;
mod rules;
mod scripted;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bench::SessionRecord;
use crate::doc::DocumentState;
use crate::llm::LlmError;
use crate::phrasing::{Lang, Phrasebook};
use crate::registry::{ApiCall, ApiSchema};
use crate::validator::ValidationVerdict;

pub use baseline::{
    lexical_cosine, HybridPlanner, RetrievalPlanner, SimulatedReasoningPlanner, RETRIEVAL_THRESHOLD,
};
pub use faults::{neighbor_call, perturb_args, FaultConfig, CALLS_PER_INSTRUCTION};
pub use model::{ModelFullPlanner, ModelPlanner};
pub use rules::RulePlanner;
pub use scripted::{NoisyPlanner, ScriptedPlanner, StepOverride};

/// Safety stop on steps per instruction.
pub const STEP_CAP: usize = 30;

/// What a planner sees when asked for its next move.
#[derive(Debug, Clone, Copy)]
pub struct PlanContext<'a> {
    pub instruction: &'a str,
    pub session_id: &'a str,
    pub turn_id: u32,
    /// Zero-based step within the instruction.
    pub step_index: usize,
    /// Zero-based attempt within the step.
    pub attempt: usize,
    /// Calls accepted so far for this instruction, in execution order.
    pub history: &'a [ApiCall],
    pub state: &'a DocumentState,
    /// Earlier instructions of the session.
    pub session_dialogue: &'a [String],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    SubInstruction,
    Done,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanStep {
    pub kind: StepKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sub_instruction: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
    #[serde(default)]
    pub token_cost: u64,
}

impl PlanStep {
    pub fn sub(text: impl Into<String>, token_cost: u64) -> Self {
        PlanStep {
            kind: StepKind::SubInstruction,
            sub_instruction: Some(text.into()),
            rationale: None,
            token_cost,
        }
    }

    pub fn done(token_cost: u64) -> Self {
        PlanStep {
            kind: StepKind::Done,
            sub_instruction: None,
            rationale: None,
            token_cost,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerStrategy {
    StepwiseModel,
    Scripted,
    Noisy,
    RetrievalOnly,
    ReasoningOnly,
    Hybrid,
}

impl PlannerStrategy {
    pub const ALL: [PlannerStrategy; 6] = [
        PlannerStrategy::StepwiseModel,
        PlannerStrategy::Scripted,
        PlannerStrategy::Noisy,
        PlannerStrategy::RetrievalOnly,
        PlannerStrategy::ReasoningOnly,
        PlannerStrategy::Hybrid,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PlannerStrategy::StepwiseModel => "stepwise_model",
            PlannerStrategy::Scripted => "scripted",
            PlannerStrategy::Noisy => "noisy",
            PlannerStrategy::RetrievalOnly => "retrieval_only",
            PlannerStrategy::ReasoningOnly => "reasoning_only",
            PlannerStrategy::Hybrid => "hybrid",
        }
    }

    /// Baselines plan the whole instruction up front and never roll back.
    pub fn is_upfront(self) -> bool {
        matches!(
            self,
            PlannerStrategy::RetrievalOnly
                | PlannerStrategy::ReasoningOnly
                | PlannerStrategy::Hybrid
        )
    }
}

impl fmt::Display for PlannerStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlannerStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PlannerStrategy::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown strategy `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("model unavailable: {0}")]
    ModelUnavailable(String),
    #[error("malformed model output: {0}")]
    MalformedModelOutput(String),
    #[error("generation failed: {0}")]
    Generation(String),
}

impl From<LlmError> for PlanError {
    fn from(e: LlmError) -> Self {
        match e {
            LlmError::ModelUnavailable(m) => PlanError::ModelUnavailable(m),
            LlmError::MalformedModelOutput(m) => PlanError::MalformedModelOutput(m),
        }
    }
}

/// A stepwise planner. Calls returned from `generate_api` and `regenerate_api`
/// always name an API from `candidates`.
pub trait Planner: Send + Sync {
    fn next_step(&self, ctx: &PlanContext<'_>) -> Result<PlanStep, PlanError>;

    fn generate_api(
        &self,
        sub: &str,
        candidates: &[&ApiSchema],
        ctx: &PlanContext<'_>,
    ) -> Result<ApiCall, PlanError>;

    /// Same API, new arguments.
    fn revise_arguments(
        &self,
        sub: &str,
        call: &ApiCall,
        verdict: &ValidationVerdict,
        ctx: &PlanContext<'_>,
    ) -> Result<ApiCall, PlanError>;

    /// A different API from `candidates`.
    fn regenerate_api(
        &self,
        sub: &str,
        call: &ApiCall,
        verdict: &ValidationVerdict,
        candidates: &[&ApiSchema],
        ctx: &PlanContext<'_>,
    ) -> Result<ApiCall, PlanError>;
}

/// A whole instruction planned in one go.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FullPlan {
    pub calls: Vec<ApiCall>,
    pub tokens: u64,
}

pub trait FullPlanner: Send + Sync {
    fn plan_full(&self, ctx: &PlanContext<'_>) -> Result<FullPlan, PlanError>;
}

/// Annotated `(sub-instruction, call)` steps for every turn of a set of sessions.
#[derive(Debug, Clone, Default)]
pub struct Annotations {
    turns: HashMap<(String, u32), Vec<(String, ApiCall)>>,
}

impl Annotations {
    pub fn from_sessions(sessions: &[SessionRecord]) -> Self {
        let mut a = Annotations::default();
        for s in sessions {
            a.add_session(s);
        }
        a
    }

    pub fn add_session(&mut self, s: &SessionRecord) {
        let book = Phrasebook::standard();
        for t in &s.turns {
            let steps = t
                .annotated_apis
                .iter()
                .enumerate()
                .map(|(i, call)| {
                    let sub = t
                        .sub_instructions
                        .get(i)
                        .cloned()
                        .filter(|_| t.sub_instructions.len() == t.annotated_apis.len())
                        .or_else(|| book.render_call(call, s.language, 0))
                        .or_else(|| book.render_call(call, Lang::En, 0))
                        .unwrap_or_else(|| call.to_string());
                    (sub, call.clone())
                })
                .collect();
            self.turns.insert((s.session_id.clone(), t.turn_id), steps);
        }
    }

    pub fn turn(&self, session_id: &str, turn_id: u32) -> Option<&[(String, ApiCall)]> {
        self.turns
            .get(&(session_id.to_string(), turn_id))
            .map(Vec::as_slice)
    }

    pub fn step(&self, session_id: &str, turn_id: u32, step: usize) -> Option<(&str, &ApiCall)> {
        self.turn(session_id, turn_id)?
            .get(step)
            .map(|(s, c)| (s.as_str(), c))
    }
}
