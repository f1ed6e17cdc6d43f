//! Instruction-level and session-level evaluation, and the metrics report.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::judge::{judge_equivalence, model_equal, JudgeMode};
use super::replay::fill_expected;
use super::session::{SessionError, SessionRecord};
use crate::doc::{Document, DocumentState};
use crate::llm::{LlmError, SharedModel};
use crate::orchestrator::{
    run_session, Engine, InstructionStatus, Orchestrator, RollbackPolicy, SessionTrace,
    TraceLabels, TurnContext, DEFAULT_SESSION_TIMEOUT_SECS,
};
use crate::planner::{
    Annotations, FaultConfig, HybridPlanner, ModelFullPlanner, ModelPlanner, NoisyPlanner,
    PlannerStrategy, RetrievalPlanner, ScriptedPlanner, SimulatedReasoningPlanner, STEP_CAP,
};
use crate::validator::{
    HeuristicValidator, ModelValidator, OracleValidator, Validator, DEFAULT_THRESHOLD,
};

/// Difficulty band by annotated call count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Difficulty {
    S,
    M,
    H,
}

impl Difficulty {
    pub fn of_count(calls: usize) -> Self {
        match calls {
            0..=3 => Difficulty::S,
            4..=6 => Difficulty::M,
            _ => Difficulty::H,
        }
    }
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

pub fn stratify_difficulty(turn: &super::Turn) -> Difficulty {
    Difficulty::of_count(turn.annotated_apis.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ValidatorKind {
    /// Compares against the annotated call's effect.
    #[default]
    Oracle,
    Heuristic,
    Model,
}

impl std::str::FromStr for ValidatorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oracle" => Ok(ValidatorKind::Oracle),
            "heuristic" => Ok(ValidatorKind::Heuristic),
            "model" => Ok(ValidatorKind::Model),
            _ => Err(format!("unknown validator `{s}`")),
        }
    }
}

/// Everything that defines one agent under evaluation.
#[derive(Clone)]
pub struct AgentConfig {
    pub strategy: PlannerStrategy,
    pub policy: RollbackPolicy,
    pub seed: u64,
    pub p_wrong_arg: f64,
    pub p_wrong_api: f64,
    pub threshold: f64,
    pub judge: JudgeMode,
    pub validator: ValidatorKind,
    pub step_cap: usize,
    pub session_timeout: Duration,
    /// Needed by the model-backed strategy, validator and judge.
    pub model: Option<SharedModel>,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            strategy: PlannerStrategy::Scripted,
            policy: RollbackPolicy::default(),
            seed: 0,
            p_wrong_arg: 0.15,
            p_wrong_api: 0.10,
            threshold: DEFAULT_THRESHOLD,
            judge: JudgeMode::Canonical,
            validator: ValidatorKind::Oracle,
            step_cap: STEP_CAP,
            session_timeout: Duration::from_secs(DEFAULT_SESSION_TIMEOUT_SECS),
            model: None,
        }
    }
}

impl fmt::Debug for AgentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AgentConfig")
            .field("strategy", &self.strategy)
            .field("policy", &self.policy)
            .field("seed", &self.seed)
            .field("p_wrong_arg", &self.p_wrong_arg)
            .field("p_wrong_api", &self.p_wrong_api)
            .field("threshold", &self.threshold)
            .field("judge", &self.judge)
            .field("validator", &self.validator)
            .field("model", &self.model.is_some())
            .finish()
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("{0} needs a model client; set DOCFLOW_LLM_ENDPOINT")]
    NeedsModel(&'static str),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

impl AgentConfig {
    pub fn faults(&self) -> FaultConfig {
        FaultConfig::new(self.p_wrong_arg, self.p_wrong_api, self.seed)
    }

    fn model(&self, what: &'static str) -> Result<SharedModel, EvalError> {
        self.model.clone().ok_or(EvalError::NeedsModel(what))
    }

    fn validator(&self, annotations: &Arc<Annotations>) -> Result<Arc<dyn Validator>, EvalError> {
        Ok(match self.validator {
            ValidatorKind::Oracle => Arc::new(OracleValidator::new(annotations.clone())),
            ValidatorKind::Heuristic => Arc::new(HeuristicValidator),
            ValidatorKind::Model => {
                Arc::new(ModelValidator::new(self.model("the model validator")?))
            }
        })
    }

    /// Build the agent. Simulated strategies replay `annotations`.
    pub fn engine(&self, annotations: &Arc<Annotations>) -> Result<Engine, EvalError> {
        let stepwise = |planner: Arc<dyn crate::planner::Planner>| -> Result<Engine, EvalError> {
            let o = Orchestrator::new(planner, self.validator(annotations)?, self.policy)
                .with_threshold(self.threshold)
                .with_step_cap(self.step_cap);
            Ok(Engine::Stepwise(o))
        };
        match self.strategy {
            PlannerStrategy::Scripted => {
                stepwise(Arc::new(ScriptedPlanner::new(annotations.clone())))
            }
            PlannerStrategy::Noisy => stepwise(Arc::new(NoisyPlanner::new(
                ScriptedPlanner::new(annotations.clone()),
                self.faults(),
            ))),
            PlannerStrategy::StepwiseModel => stepwise(Arc::new(ModelPlanner::new(
                self.model("the stepwise_model strategy")?,
            ))),
            PlannerStrategy::RetrievalOnly => {
                Ok(Engine::Upfront(Arc::new(RetrievalPlanner::default())))
            }
            PlannerStrategy::ReasoningOnly => Ok(Engine::Upfront(match &self.model {
                Some(m) => Arc::new(ModelFullPlanner::new(m.clone())),
                None => Arc::new(SimulatedReasoningPlanner::new(
                    annotations.clone(),
                    self.faults(),
                )),
            })),
            PlannerStrategy::Hybrid => {
                Ok(Engine::Upfront(Arc::new(HybridPlanner::new(self.faults()))))
            }
        }
    }

    fn judge(
        &self,
        actual: Option<&DocumentState>,
        expected: &DocumentState,
        instruction: &str,
    ) -> bool {
        let Some(actual) = actual else { return false };
        match (self.judge, &self.model) {
            (JudgeMode::Model, Some(m)) => {
                model_equal(actual, expected, instruction, m.as_ref()).unwrap_or(false)
            }
            (mode, _) => judge_equivalence(actual, expected, mode).unwrap_or(false),
        }
    }

    fn labels(&self) -> TraceLabels {
        TraceLabels {
            strategy: self.strategy.to_string(),
            policy: if self.strategy.is_upfront() {
                "none".into()
            } else {
                self.policy.to_string()
            },
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnResult {
    pub session_id: String,
    pub turn_id: u32,
    pub difficulty: Difficulty,
    pub success: bool,
    pub status: InstructionStatus,
    pub api_count: usize,
    pub token_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionResult {
    pub session_id: String,
    pub success: bool,
    pub turns_matched: usize,
    pub turns: usize,
    pub api_count: usize,
    pub token_count: u64,
}

/// Aggregate metrics. Accuracies are percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub iacc: f64,
    pub sacc: f64,
    pub apis_per_instruction: f64,
    pub apis_per_session: f64,
    pub tokens_per_instruction: f64,
    pub tokens_per_session: f64,
    /// Bands with no instructions are left out.
    pub iacc_by_difficulty: BTreeMap<Difficulty, f64>,
}

fn pct(hits: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        100.0 * hits as f64 / n as f64
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

impl RunReport {
    pub fn from_results(turns: &[TurnResult], sessions: &[SessionResult]) -> Self {
        let mut by_band: BTreeMap<Difficulty, (usize, usize)> = BTreeMap::new();
        for t in turns {
            let e = by_band.entry(t.difficulty).or_default();
            e.0 += usize::from(t.success);
            e.1 += 1;
        }
        RunReport {
            iacc: pct(turns.iter().filter(|t| t.success).count(), turns.len()),
            sacc: pct(
                sessions.iter().filter(|s| s.success).count(),
                sessions.len(),
            ),
            apis_per_instruction: mean(turns.iter().map(|t| t.api_count as f64)),
            apis_per_session: mean(sessions.iter().map(|s| s.api_count as f64)),
            tokens_per_instruction: mean(turns.iter().map(|t| t.token_count as f64)),
            tokens_per_session: mean(sessions.iter().map(|s| s.token_count as f64)),
            iacc_by_difficulty: by_band
                .into_iter()
                .map(|(d, (h, n))| (d, pct(h, n)))
                .collect(),
        }
    }
}

/// Everything one configuration produced on one session set.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub turns: Vec<TurnResult>,
    pub sessions: Vec<SessionResult>,
    /// Session-level traces, in session order.
    pub traces: Vec<SessionTrace>,
    pub report: RunReport,
}

/// Fill missing expected states so both protocols can judge.
pub fn prepare_sessions(sessions: &mut [SessionRecord]) -> Result<(), SessionError> {
    for s in sessions.iter_mut() {
        if s.turns.iter().any(|t| t.expected_state.is_none()) {
            fill_expected(s)?;
        } else {
            s.validate()?;
        }
    }
    Ok(())
}

/// Each turn runs in isolation from its ground-truth pre-state.
pub fn evaluate_instruction_level(
    sessions: &[SessionRecord],
    config: &AgentConfig,
    engine: &Engine,
) -> Result<Vec<TurnResult>, EvalError> {
    let per_session: Vec<Result<Vec<TurnResult>, EvalError>> = sessions
        .par_iter()
        .map(|s| {
            let deadline = Instant::now() + config.session_timeout;
            let mut pre = s.initial_state.clone();
            let mut dialogue = Vec::new();
            let mut out = Vec::with_capacity(s.turns.len());
            for turn in &s.turns {
                let expected =
                    turn.expected_state
                        .clone()
                        .ok_or_else(|| SessionError::Invalid {
                            session: s.session_id.clone(),
                            reason: format!("turn {} has no expected state", turn.turn_id),
                        })?;
                let mut doc = Document::from_state(&pre)
                    .map_err(|e| SessionError::State(s.session_id.clone(), e))?;
                let ctx = TurnContext {
                    session_id: &s.session_id,
                    turn_id: turn.turn_id,
                    instruction: &turn.instruction,
                    dialogue: &dialogue,
                };
                let trace = engine.run_instruction(ctx, &mut doc, Some(deadline));
                let actual = doc.extract_state().ok();
                out.push(TurnResult {
                    session_id: s.session_id.clone(),
                    turn_id: turn.turn_id,
                    difficulty: stratify_difficulty(turn),
                    success: config.judge(actual.as_ref(), &expected, &turn.instruction),
                    status: trace.status,
                    api_count: trace.api_count,
                    token_count: trace.token_count,
                });
                dialogue.push(turn.instruction.clone());
                pre = expected;
            }
            Ok(out)
        })
        .collect();
    let mut turns = Vec::new();
    for r in per_session {
        turns.extend(r?);
    }
    Ok(turns)
}

/// All turns in order on one evolving document; a session succeeds only if
/// every turn's end state matches.
pub fn evaluate_session_level(
    sessions: &[SessionRecord],
    config: &AgentConfig,
    engine: &Engine,
) -> Result<Vec<(SessionResult, SessionTrace)>, EvalError> {
    let labels = config.labels();
    sessions
        .par_iter()
        .map(|s| {
            let deadline = Instant::now() + config.session_timeout;
            let run = run_session(engine, s, &labels, Some(deadline)).map_err(|e| {
                SessionError::Invalid {
                    session: s.session_id.clone(),
                    reason: e.to_string(),
                }
            })?;
            let mut matched = 0;
            for (turn, actual) in s.turns.iter().zip(&run.end_states) {
                let expected =
                    turn.expected_state
                        .as_ref()
                        .ok_or_else(|| SessionError::Invalid {
                            session: s.session_id.clone(),
                            reason: format!("turn {} has no expected state", turn.turn_id),
                        })?;
                matched += usize::from(config.judge(actual.as_ref(), expected, &turn.instruction));
            }
            let result = SessionResult {
                session_id: s.session_id.clone(),
                success: matched == s.turns.len(),
                turns_matched: matched,
                turns: s.turns.len(),
                api_count: run.trace.api_count,
                token_count: run.trace.token_count,
            };
            Ok((result, run.trace))
        })
        .collect()
}

/// Both protocols plus the aggregate report. Sessions need expected states
/// (see [`prepare_sessions`]).
pub fn evaluate(sessions: &[SessionRecord], config: &AgentConfig) -> Result<Evaluation, EvalError> {
    let annotations = Arc::new(Annotations::from_sessions(sessions));
    let engine = config.engine(&annotations)?;
    let turns = evaluate_instruction_level(sessions, config, &engine)?;
    let (results, traces): (Vec<_>, Vec<_>) = evaluate_session_level(sessions, config, &engine)?
        .into_iter()
        .unzip();
    let report = RunReport::from_results(&turns, &results);
    Ok(Evaluation {
        turns,
        sessions: results,
        traces,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bands() {
        assert_eq!(Difficulty::of_count(2), Difficulty::S);
        assert_eq!(Difficulty::of_count(3), Difficulty::S);
        assert_eq!(Difficulty::of_count(5), Difficulty::M);
        assert_eq!(Difficulty::of_count(6), Difficulty::M);
        assert_eq!(Difficulty::of_count(7), Difficulty::H);
    }

    #[test]
    fn metric_arithmetic() {
        let turn = |ok| TurnResult {
            session_id: "s".into(),
            turn_id: 1,
            difficulty: Difficulty::S,
            success: ok,
            status: InstructionStatus::Completed,
            api_count: 2,
            token_count: 10,
        };
        let sess = |ok| SessionResult {
            session_id: "s".into(),
            success: ok,
            turns_matched: 0,
            turns: 1,
            api_count: 4,
            token_count: 40,
        };
        let turns = [turn(true), turn(true), turn(true), turn(false)];
        let sessions: Vec<_> = (0..50).map(|i| sess(i < 31)).collect();
        let r = RunReport::from_results(&turns, &sessions);
        assert_eq!(r.iacc, 75.0);
        assert!((r.sacc - 62.0).abs() < 1e-9);
        assert_eq!(r.apis_per_instruction, 2.0);
        assert_eq!(r.iacc_by_difficulty[&Difficulty::S], 75.0);
    }
}
