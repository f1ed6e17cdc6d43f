//! Upfront baselines: retrieval by lexical similarity, one-shot full
//! planning, and a rule-mapped hybrid. None of them roll back.

use std::collections::HashMap;
use std::sync::Arc;

use super::model::{call_reply, full_plan_prompt, generate_prompt};
use super::{Annotations, FaultConfig, FullPlan, FullPlanner, PlanContext, PlanError};
use crate::doc::Document;
use crate::llm::estimate_tokens;
use crate::orchestrator::candidates_for;
use crate::phrasing::Phrasebook;
use crate::registry::{ApiCall, ApiSchema, Args, Registry};

pub const RETRIEVAL_THRESHOLD: f64 = 0.75;

fn terms(text: &str) -> HashMap<String, f64> {
    let mut tf = HashMap::new();
    for w in text
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
    {
        *tf.entry(w.to_lowercase()).or_insert(0.0) += 1.0;
    }
    tf
}

/// Cosine similarity of the term-frequency vectors of two texts.
pub fn lexical_cosine(a: &str, b: &str) -> f64 {
    let (ta, tb) = (terms(a), terms(b));
    let dot: f64 = ta
        .iter()
        .filter_map(|(w, x)| tb.get(w).map(|y| x * y))
        .sum();
    let norm = |t: &HashMap<String, f64>| t.values().map(|x| x * x).sum::<f64>().sqrt();
    let n = norm(&ta) * norm(&tb);
    if n == 0.0 {
        0.0
    } else {
        dot / n
    }
}

fn api_text(schema: &ApiSchema) -> String {
    format!("{} {}", schema.name.replace('_', " "), schema.description)
}

/// Scores every API against the instruction, keeps those at or above the
/// threshold, best first, and fills required parameters with placeholders.
#[derive(Debug, Clone, Copy)]
pub struct RetrievalPlanner {
    pub threshold: f64,
}

impl Default for RetrievalPlanner {
    fn default() -> Self {
        RetrievalPlanner {
            threshold: RETRIEVAL_THRESHOLD,
        }
    }
}

impl RetrievalPlanner {
    /// `(api, score)` for every API, best first; ties keep registration order.
    pub fn rank(&self, instruction: &str) -> Vec<(&'static str, f64)> {
        let mut scored: Vec<(&'static str, f64)> = Registry::shared()
            .all()
            .iter()
            .map(|s| (s.name, lexical_cosine(instruction, &api_text(s))))
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1));
        scored
    }
}

fn instantiate(schema: &ApiSchema) -> ApiCall {
    let mut args = Args::new();
    for p in &schema.params {
        match (&p.default, p.required) {
            (Some(d), _) => {
                args.insert(p.name.to_string(), d.clone());
            }
            (None, true) => {
                args.insert(p.name.to_string(), p.ty.placeholder());
            }
            (None, false) => {}
        }
    }
    ApiCall::new(schema.name, args)
}

impl FullPlanner for RetrievalPlanner {
    fn plan_full(&self, ctx: &PlanContext<'_>) -> Result<FullPlan, PlanError> {
        let reg = Registry::shared();
        let calls = self
            .rank(ctx.instruction)
            .into_iter()
            .filter(|(_, s)| *s >= self.threshold)
            .filter_map(|(name, _)| reg.get(name).map(instantiate))
            .collect();
        // Only the query is embedded; the library is embedded once, offline.
        Ok(FullPlan {
            calls,
            tokens: estimate_tokens(ctx.instruction),
        })
    }
}

/// Applies `calls` in order, skipping the ones that fail, and returns the
/// document after each prefix.
struct Scratch {
    doc: Option<Document>,
}

impl Scratch {
    fn new(ctx: &PlanContext<'_>) -> Self {
        Scratch {
            doc: Document::from_state(ctx.state).ok(),
        }
    }

    fn state(&self) -> Option<crate::doc::DocumentState> {
        self.doc.as_ref().and_then(|d| d.extract_state().ok())
    }

    fn apply(&mut self, call: &ApiCall) {
        if let Some(d) = self.doc.as_mut() {
            let _ = Registry::shared().execute(call, d);
        }
    }
}

/// The full library in context and one reply with the whole sequence,
/// simulated from the annotations with faults at an elevated per-call hazard.
#[derive(Debug, Clone)]
pub struct SimulatedReasoningPlanner {
    annotations: Arc<Annotations>,
    faults: FaultConfig,
}

impl SimulatedReasoningPlanner {
    /// Per-call hazard relative to the stepwise planner: the model must
    /// ground every call at once without seeing intermediate states.
    pub const HAZARD_SCALE: f64 = 1.25;

    pub fn new(annotations: Arc<Annotations>, faults: FaultConfig) -> Self {
        SimulatedReasoningPlanner {
            annotations,
            faults: faults.scaled(Self::HAZARD_SCALE),
        }
    }
}

impl FullPlanner for SimulatedReasoningPlanner {
    fn plan_full(&self, ctx: &PlanContext<'_>) -> Result<FullPlan, PlanError> {
        let steps = self
            .annotations
            .turn(ctx.session_id, ctx.turn_id)
            .ok_or_else(|| {
                PlanError::Generation(format!(
                    "no annotations for {} turn {}",
                    ctx.session_id, ctx.turn_id
                ))
            })?;
        let all: Vec<&ApiSchema> = Registry::shared().all().iter().collect();
        let mut scratch = Scratch::new(ctx);
        let mut calls = Vec::with_capacity(steps.len());
        for (i, (_, correct)) in steps.iter().enumerate() {
            let state = scratch.state();
            let call = self.faults.corrupt(
                correct,
                &all,
                state.as_ref(),
                (ctx.session_id, ctx.turn_id, i),
            );
            scratch.apply(&call);
            calls.push(call);
        }
        let reply: String = calls.iter().map(call_reply).collect::<Vec<_>>().join(",");
        let tokens = estimate_tokens(&full_plan_prompt(ctx)) + estimate_tokens(&reply);
        Ok(FullPlan { calls, tokens })
    }
}

/// Intent representation first (sub-instructions with their intent
/// categories), then a rule mapper from each sub-instruction to a call.
/// Grounding faults apply at the base rate.
#[derive(Debug, Clone, Copy)]
pub struct HybridPlanner {
    faults: FaultConfig,
}

impl HybridPlanner {
    pub fn new(faults: FaultConfig) -> Self {
        HybridPlanner { faults }
    }
}

impl FullPlanner for HybridPlanner {
    fn plan_full(&self, ctx: &PlanContext<'_>) -> Result<FullPlan, PlanError> {
        let book = Phrasebook::standard();
        let subs = book.split(ctx.instruction);
        let mut scratch = Scratch::new(ctx);
        let mut calls = Vec::new();
        let mut tokens = 0;
        for (i, sub) in subs.iter().enumerate() {
            let candidates = candidates_for(sub);
            let sub_ctx = PlanContext {
                step_index: i,
                history: &calls,
                ..*ctx
            };
            tokens += estimate_tokens(&generate_prompt(sub, &candidates, &sub_ctx));
            // An unmapped sub-instruction ends the plan: the mapper has no rule for it.
            let Some(correct) = book.parse_sub(sub) else {
                break;
            };
            let state = scratch.state();
            let call = self.faults.corrupt(
                &correct,
                &candidates,
                state.as_ref(),
                (ctx.session_id, ctx.turn_id, i),
            );
            tokens += estimate_tokens(&call_reply(&call));
            scratch.apply(&call);
            calls.push(call);
        }
        Ok(FullPlan { calls, tokens })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_bounds() {
        assert!((lexical_cosine("add a table", "add a table") - 1.0).abs() < 1e-12);
        assert_eq!(lexical_cosine("add", "remove"), 0.0);
        assert_eq!(lexical_cosine("", "x"), 0.0);
    }
}
