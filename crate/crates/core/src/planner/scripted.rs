//! Planners that replay annotated steps, optionally with seeded faults.

use std::collections::HashMap;
use std::sync::Arc;

use super::faults::{neighbor_call, perturb_within};
use super::model::{
    call_reply, generate_prompt, next_step_prompt, regenerate_prompt, revise_prompt,
};
use super::{Annotations, FaultConfig, PlanContext, PlanError, PlanStep, Planner};
use crate::llm::estimate_tokens;
use crate::registry::{ApiCall, ApiSchema, Provenance};
use crate::validator::ValidationVerdict;

/// Replacement calls for one step position, used to stage specific traces.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepOverride {
    pub first: Option<ApiCall>,
    pub revision: Option<ApiCall>,
    pub regeneration: Option<ApiCall>,
}

type StepKey = (String, u32, usize);

fn key(ctx: &PlanContext<'_>) -> StepKey {
    (ctx.session_id.to_string(), ctx.turn_id, ctx.step_index)
}

fn charge(call: &ApiCall, prompt: &str, provenance: Provenance) -> ApiCall {
    let mut out = call.clone();
    out.provenance = provenance;
    out.token_cost = estimate_tokens(prompt) + estimate_tokens(&call_reply(call));
    out
}

fn among(call: &ApiCall, candidates: &[&ApiSchema]) -> Result<(), PlanError> {
    if candidates.iter().any(|c| c.name == call.api_name) {
        Ok(())
    } else {
        Err(PlanError::Generation(format!(
            "`{}` is not among the candidate APIs",
            call.api_name
        )))
    }
}

/// Follows the annotations exactly: the planner of a perfect model.
#[derive(Debug, Clone)]
pub struct ScriptedPlanner {
    annotations: Arc<Annotations>,
    overrides: HashMap<StepKey, StepOverride>,
}

impl ScriptedPlanner {
    pub fn new(annotations: Arc<Annotations>) -> Self {
        ScriptedPlanner {
            annotations,
            overrides: HashMap::new(),
        }
    }

    pub fn with_override(
        mut self,
        session_id: &str,
        turn_id: u32,
        step: usize,
        o: StepOverride,
    ) -> Self {
        self.overrides
            .insert((session_id.to_string(), turn_id, step), o);
        self
    }

    pub fn annotations(&self) -> &Arc<Annotations> {
        &self.annotations
    }

    fn annotated<'a>(&'a self, ctx: &PlanContext<'_>) -> Result<&'a ApiCall, PlanError> {
        self.annotations
            .step(ctx.session_id, ctx.turn_id, ctx.step_index)
            .map(|(_, c)| c)
            .ok_or_else(|| {
                PlanError::Generation(format!(
                    "no annotated step {} for {} turn {}",
                    ctx.step_index, ctx.session_id, ctx.turn_id
                ))
            })
    }

    fn override_for(&self, ctx: &PlanContext<'_>) -> Option<&StepOverride> {
        self.overrides.get(&key(ctx))
    }
}

impl Planner for ScriptedPlanner {
    fn next_step(&self, ctx: &PlanContext<'_>) -> Result<PlanStep, PlanError> {
        let prompt = next_step_prompt(ctx);
        Ok(
            match self
                .annotations
                .step(ctx.session_id, ctx.turn_id, ctx.step_index)
            {
                Some((sub, _)) => {
                    let cost = estimate_tokens(&prompt) + estimate_tokens(sub) + 8;
                    PlanStep::sub(sub, cost)
                }
                None => PlanStep::done(estimate_tokens(&prompt) + 8),
            },
        )
    }

    fn generate_api(
        &self,
        sub: &str,
        candidates: &[&ApiSchema],
        ctx: &PlanContext<'_>,
    ) -> Result<ApiCall, PlanError> {
        let call = match self.override_for(ctx).and_then(|o| o.first.as_ref()) {
            Some(c) => c,
            None => self.annotated(ctx)?,
        };
        among(call, candidates)?;
        Ok(charge(
            call,
            &generate_prompt(sub, candidates, ctx),
            Provenance::Planned,
        ))
    }

    fn revise_arguments(
        &self,
        sub: &str,
        call: &ApiCall,
        verdict: &ValidationVerdict,
        ctx: &PlanContext<'_>,
    ) -> Result<ApiCall, PlanError> {
        let out = match self.override_for(ctx).and_then(|o| o.revision.as_ref()) {
            Some(c) => c.clone(),
            None => {
                let ann = self.annotated(ctx)?;
                if ann.api_name == call.api_name {
                    ann.clone()
                } else {
                    call.clone()
                }
            }
        };
        if out.api_name != call.api_name {
            return Err(PlanError::Generation(format!(
                "revision changed the API from `{}` to `{}`",
                call.api_name, out.api_name
            )));
        }
        Ok(charge(
            &out,
            &revise_prompt(sub, call, verdict, ctx),
            Provenance::ArgRollback,
        ))
    }

    fn regenerate_api(
        &self,
        sub: &str,
        call: &ApiCall,
        verdict: &ValidationVerdict,
        candidates: &[&ApiSchema],
        ctx: &PlanContext<'_>,
    ) -> Result<ApiCall, PlanError> {
        let out = match self.override_for(ctx).and_then(|o| o.regeneration.as_ref()) {
            Some(c) => c.clone(),
            None => {
                let ann = self.annotated(ctx)?;
                if ann.api_name != call.api_name {
                    ann.clone()
                } else {
                    let mut rng = FaultConfig::none(0).rng(
                        "regen-pick",
                        ctx.session_id,
                        ctx.turn_id,
                        ctx.step_index,
                        ctx.attempt,
                    );
                    neighbor_call(ann, candidates, &mut rng).ok_or_else(|| {
                        PlanError::Generation(format!("no alternative to `{}`", call.api_name))
                    })?
                }
            }
        };
        regenerated(out, call, verdict, sub, candidates, ctx)
    }
}

fn regenerated(
    out: ApiCall,
    call: &ApiCall,
    verdict: &ValidationVerdict,
    sub: &str,
    candidates: &[&ApiSchema],
    ctx: &PlanContext<'_>,
) -> Result<ApiCall, PlanError> {
    if out.api_name == call.api_name {
        return Err(PlanError::Generation(format!(
            "regeneration kept the API `{}`",
            call.api_name
        )));
    }
    among(&out, candidates)?;
    let prompt = regenerate_prompt(sub, call, verdict, candidates, ctx);
    Ok(charge(&out, &prompt, Provenance::ApiRollback))
}

/// Replays the annotations with seeded argument and API faults. Revision
/// repairs an argument fault with the same probability a fresh call would
/// have been right; regeneration switches to the annotated API when the
/// current one is wrong.
#[derive(Debug, Clone)]
pub struct NoisyPlanner {
    inner: ScriptedPlanner,
    faults: FaultConfig,
}

impl NoisyPlanner {
    pub fn new(inner: ScriptedPlanner, faults: FaultConfig) -> Self {
        NoisyPlanner { inner, faults }
    }

    pub fn faults(&self) -> &FaultConfig {
        &self.faults
    }
}

impl Planner for NoisyPlanner {
    fn next_step(&self, ctx: &PlanContext<'_>) -> Result<PlanStep, PlanError> {
        self.inner.next_step(ctx)
    }

    fn generate_api(
        &self,
        sub: &str,
        candidates: &[&ApiSchema],
        ctx: &PlanContext<'_>,
    ) -> Result<ApiCall, PlanError> {
        if self
            .inner
            .override_for(ctx)
            .is_some_and(|o| o.first.is_some())
        {
            return self.inner.generate_api(sub, candidates, ctx);
        }
        let correct = self.inner.annotated(ctx)?;
        among(correct, candidates)?;
        let pos = (ctx.session_id, ctx.turn_id, ctx.step_index);
        let call = self
            .faults
            .corrupt(correct, candidates, Some(ctx.state), pos);
        Ok(charge(
            &call,
            &generate_prompt(sub, candidates, ctx),
            Provenance::Planned,
        ))
    }

    fn revise_arguments(
        &self,
        sub: &str,
        call: &ApiCall,
        verdict: &ValidationVerdict,
        ctx: &PlanContext<'_>,
    ) -> Result<ApiCall, PlanError> {
        if self
            .inner
            .override_for(ctx)
            .is_some_and(|o| o.revision.is_some())
        {
            return self.inner.revise_arguments(sub, call, verdict, ctx);
        }
        let ann = self.inner.annotated(ctx)?;
        let (s, t, i, a) = (ctx.session_id, ctx.turn_id, ctx.step_index, ctx.attempt);
        let mut rng = self.faults.rng("rev-pick", s, t, i, a);
        let out = if ann.api_name == call.api_name {
            if self.faults.unit("rev", s, t, i, a) < self.faults.q_arg() {
                perturb_within(ann, Some(ctx.state), &mut rng).unwrap_or_else(|| ann.clone())
            } else {
                ann.clone()
            }
        } else {
            perturb_within(call, Some(ctx.state), &mut rng).unwrap_or_else(|| call.clone())
        };
        Ok(charge(
            &out,
            &revise_prompt(sub, call, verdict, ctx),
            Provenance::ArgRollback,
        ))
    }

    fn regenerate_api(
        &self,
        sub: &str,
        call: &ApiCall,
        verdict: &ValidationVerdict,
        candidates: &[&ApiSchema],
        ctx: &PlanContext<'_>,
    ) -> Result<ApiCall, PlanError> {
        if self
            .inner
            .override_for(ctx)
            .is_some_and(|o| o.regeneration.is_some())
        {
            return self
                .inner
                .regenerate_api(sub, call, verdict, candidates, ctx);
        }
        let ann = self.inner.annotated(ctx)?;
        let out = if ann.api_name != call.api_name {
            ann.clone()
        } else {
            let mut rng = self.faults.rng(
                "regen-pick",
                ctx.session_id,
                ctx.turn_id,
                ctx.step_index,
                ctx.attempt,
            );
            neighbor_call(ann, candidates, &mut rng).ok_or_else(|| {
                PlanError::Generation(format!("no alternative to `{}`", call.api_name))
            })?
        };
        regenerated(out, call, verdict, sub, candidates, ctx)
    }
}
