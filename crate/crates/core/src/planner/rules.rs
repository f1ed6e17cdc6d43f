//! A model-free planner that reads instructions with the phrasebook.

use super::model::{call_reply, generate_prompt, next_step_prompt};
use super::{PlanContext, PlanError, PlanStep, Planner};
use crate::llm::estimate_tokens;
use crate::phrasing::Phrasebook;
use crate::registry::{ApiCall, ApiSchema, Provenance};
use crate::validator::ValidationVerdict;

/// Splits the instruction into sub-instructions and maps each one to a call
/// with the phrasebook templates. It has nothing better to offer on
/// rollback, so revision repeats the call and regeneration gives up.
#[derive(Debug, Clone, Copy, Default)]
pub struct RulePlanner;

impl Planner for RulePlanner {
    fn next_step(&self, ctx: &PlanContext<'_>) -> Result<PlanStep, PlanError> {
        let tokens = estimate_tokens(&next_step_prompt(ctx));
        let subs = Phrasebook::standard().split(ctx.instruction);
        Ok(match subs.into_iter().nth(ctx.step_index) {
            Some(sub) => PlanStep::sub(sub, tokens),
            None => PlanStep::done(tokens),
        })
    }

    fn generate_api(
        &self,
        sub: &str,
        candidates: &[&ApiSchema],
        ctx: &PlanContext<'_>,
    ) -> Result<ApiCall, PlanError> {
        let call = Phrasebook::standard()
            .parse_sub(sub)
            .ok_or_else(|| PlanError::Generation(format!("no template matches `{sub}`")))?;
        if !candidates.iter().any(|c| c.name == call.api_name) {
            return Err(PlanError::Generation(format!(
                "`{}` is not among the candidate APIs",
                call.api_name
            )));
        }
        let mut call = call.with_provenance(Provenance::Planned);
        call.token_cost = estimate_tokens(&generate_prompt(sub, candidates, ctx))
            + estimate_tokens(&call_reply(&call));
        Ok(call)
    }

    fn revise_arguments(
        &self,
        _sub: &str,
        call: &ApiCall,
        _verdict: &ValidationVerdict,
        _ctx: &PlanContext<'_>,
    ) -> Result<ApiCall, PlanError> {
        let mut out = call.clone().with_provenance(Provenance::ArgRollback);
        out.token_cost = 0;
        Ok(out)
    }

    fn regenerate_api(
        &self,
        _sub: &str,
        call: &ApiCall,
        _verdict: &ValidationVerdict,
        _candidates: &[&ApiSchema],
        _ctx: &PlanContext<'_>,
    ) -> Result<ApiCall, PlanError> {
        Err(PlanError::Generation(format!(
            "no alternative to `{}`",
            call.api_name
        )))
    }
}
