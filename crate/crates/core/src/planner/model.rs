//! Model-backed planners and the prompts every planner is charged for.

use serde_json::Value;

use super::{FullPlan, FullPlanner, PlanContext, PlanError, PlanStep, Planner, StepKind};
use crate::doc::{to_canonical_string, value_to_canonical_string};
use crate::llm::{complete_json_checked, prompts, render_prompt, ChatModel, SharedModel};
use crate::registry::{ApiCall, ApiSchema, Provenance, Registry};
use crate::validator::ValidationVerdict;

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

fn schemas_text(schemas: &[&ApiSchema]) -> String {
    let list: Vec<Value> = schemas.iter().map(|s| s.to_json()).collect();
    value_to_canonical_string(&Value::Array(list))
}

pub(crate) fn next_step_prompt(ctx: &PlanContext<'_>) -> String {
    render_prompt(
        prompts::NEXT_STEP,
        &[
            ("instruction", ctx.instruction),
            ("history", &history_text(ctx.history)),
            ("state", &to_canonical_string(ctx.state)),
        ],
    )
}

pub(crate) fn generate_prompt(
    sub: &str,
    candidates: &[&ApiSchema],
    ctx: &PlanContext<'_>,
) -> String {
    render_prompt(
        prompts::GENERATE_API,
        &[
            ("sub_instruction", sub),
            ("instruction", ctx.instruction),
            ("history", &history_text(ctx.history)),
            ("state", &to_canonical_string(ctx.state)),
            ("candidates", &schemas_text(candidates)),
        ],
    )
}

pub(crate) fn revise_prompt(
    sub: &str,
    call: &ApiCall,
    verdict: &ValidationVerdict,
    ctx: &PlanContext<'_>,
) -> String {
    let schema = Registry::shared()
        .get(&call.api_name)
        .map(|s| value_to_canonical_string(&s.to_json()))
        .unwrap_or_default();
    render_prompt(
        prompts::REVISE_ARGUMENTS,
        &[
            ("sub_instruction", sub),
            ("call", &call.to_string()),
            ("explanation", &verdict.explanation),
            ("state", &to_canonical_string(ctx.state)),
            ("schema", &schema),
            ("api_name", &call.api_name),
        ],
    )
}

pub(crate) fn regenerate_prompt(
    sub: &str,
    call: &ApiCall,
    verdict: &ValidationVerdict,
    candidates: &[&ApiSchema],
    ctx: &PlanContext<'_>,
) -> String {
    render_prompt(
        prompts::REGENERATE_API,
        &[
            ("sub_instruction", sub),
            ("call", &call.to_string()),
            ("explanation", &verdict.explanation),
            ("state", &to_canonical_string(ctx.state)),
            ("api_name", &call.api_name),
            ("candidates", &schemas_text(candidates)),
        ],
    )
}

pub(crate) fn full_plan_prompt(ctx: &PlanContext<'_>) -> String {
    let dialogue = if ctx.session_dialogue.is_empty() {
        "(none)".to_string()
    } else {
        ctx.session_dialogue.join("\n")
    };
    render_prompt(
        prompts::FULL_PLAN,
        &[
            ("instruction", ctx.instruction),
            ("dialogue", &dialogue),
            ("state", &to_canonical_string(ctx.state)),
            (
                "apis",
                &value_to_canonical_string(&Registry::shared().dump_json()),
            ),
        ],
    )
}

/// JSON reply a model would send for `call`, used for simulated token costs.
pub(crate) fn call_reply(call: &ApiCall) -> String {
    let args: serde_json::Map<String, Value> = call.args.clone().into_iter().collect();
    value_to_canonical_string(&serde_json::json!({"api_name": call.api_name, "args": args}))
}

fn parse_call(v: &Value) -> Result<ApiCall, String> {
    let name = v
        .get("api_name")
        .and_then(Value::as_str)
        .ok_or("missing string field `api_name`")?;
    let args = match v.get("args") {
        None | Some(Value::Null) => serde_json::Map::new(),
        Some(Value::Object(m)) => m.clone(),
        Some(_) => return Err("`args` must be an object".into()),
    };
    let call = ApiCall::new(name, args.into_iter().collect());
    Registry::shared()
        .canonicalize(&call)
        .map_err(|e| e.to_string())
}

/// The stepwise planner backed by a chat model.
#[derive(Clone)]
pub struct ModelPlanner {
    model: SharedModel,
}

impl ModelPlanner {
    pub fn new(model: SharedModel) -> Self {
        ModelPlanner { model }
    }

    fn ask_call(
        &self,
        prompt: &str,
        check: impl Fn(&ApiCall) -> Result<(), String>,
        provenance: Provenance,
    ) -> Result<ApiCall, PlanError> {
        let model: &dyn ChatModel = self.model.as_ref();
        let (v, tokens) = complete_json_checked(model, prompt, |v| check(&parse_call(v)?))?;
        let mut call = parse_call(&v).map_err(PlanError::MalformedModelOutput)?;
        call.provenance = provenance;
        call.token_cost = tokens;
        Ok(call)
    }
}

fn among(call: &ApiCall, candidates: &[&ApiSchema]) -> Result<(), String> {
    if candidates.iter().any(|c| c.name == call.api_name) {
        Ok(())
    } else {
        Err(format!(
            "`{}` is not one of the candidate APIs",
            call.api_name
        ))
    }
}

impl Planner for ModelPlanner {
    fn next_step(&self, ctx: &PlanContext<'_>) -> Result<PlanStep, PlanError> {
        let model: &dyn ChatModel = self.model.as_ref();
        let (v, tokens) = complete_json_checked(model, &next_step_prompt(ctx), |v| {
            match v.get("kind").and_then(Value::as_str) {
                Some("done") => Ok(()),
                Some("sub_instruction") => match v.get("sub_instruction").and_then(Value::as_str) {
                    Some(s) if !s.trim().is_empty() => Ok(()),
                    _ => Err("`sub_instruction` must be a non-empty string".into()),
                },
                _ => Err("`kind` must be \"sub_instruction\" or \"done\"".into()),
            }
        })?;
        let rationale = v.get("rationale").and_then(Value::as_str).map(String::from);
        let mut step = if v["kind"] == "done" {
            PlanStep::done(tokens)
        } else {
            PlanStep::sub(v["sub_instruction"].as_str().unwrap_or_default(), tokens)
        };
        step.rationale = rationale;
        debug_assert!(step.kind == StepKind::Done || step.sub_instruction.is_some());
        Ok(step)
    }

    fn generate_api(
        &self,
        sub: &str,
        candidates: &[&ApiSchema],
        ctx: &PlanContext<'_>,
    ) -> Result<ApiCall, PlanError> {
        if candidates.is_empty() {
            return Err(PlanError::Generation("no candidate APIs".into()));
        }
        self.ask_call(
            &generate_prompt(sub, candidates, ctx),
            |c| among(c, candidates),
            Provenance::Planned,
        )
    }

    fn revise_arguments(
        &self,
        sub: &str,
        call: &ApiCall,
        verdict: &ValidationVerdict,
        ctx: &PlanContext<'_>,
    ) -> Result<ApiCall, PlanError> {
        self.ask_call(
            &revise_prompt(sub, call, verdict, ctx),
            |c| {
                if c.api_name == call.api_name {
                    Ok(())
                } else {
                    Err(format!("the API must stay `{}`", call.api_name))
                }
            },
            Provenance::ArgRollback,
        )
    }

    fn regenerate_api(
        &self,
        sub: &str,
        call: &ApiCall,
        verdict: &ValidationVerdict,
        candidates: &[&ApiSchema],
        ctx: &PlanContext<'_>,
    ) -> Result<ApiCall, PlanError> {
        let others: Vec<&ApiSchema> = candidates
            .iter()
            .copied()
            .filter(|c| c.name != call.api_name)
            .collect();
        if others.is_empty() {
            return Err(PlanError::Generation(format!(
                "no candidate API other than `{}`",
                call.api_name
            )));
        }
        self.ask_call(
            &regenerate_prompt(sub, call, verdict, &others, ctx),
            |c| among(c, &others),
            Provenance::ApiRollback,
        )
    }
}

/// Reasoning-only baseline backed by a chat model: the full API library in
/// context, one reply with the whole call sequence.
#[derive(Clone)]
pub struct ModelFullPlanner {
    model: SharedModel,
}

impl ModelFullPlanner {
    pub fn new(model: SharedModel) -> Self {
        ModelFullPlanner { model }
    }
}

impl FullPlanner for ModelFullPlanner {
    fn plan_full(&self, ctx: &PlanContext<'_>) -> Result<FullPlan, PlanError> {
        let model: &dyn ChatModel = self.model.as_ref();
        let (v, tokens) = complete_json_checked(model, &full_plan_prompt(ctx), |v| {
            let calls = v
                .get("calls")
                .and_then(Value::as_array)
                .ok_or("missing array `calls`")?;
            calls.iter().try_for_each(|c| parse_call(c).map(|_| ()))
        })?;
        let calls = v["calls"]
            .as_array()
            .map(|a| a.iter().filter_map(|c| parse_call(c).ok()).collect())
            .unwrap_or_default();
        Ok(FullPlan { calls, tokens })
    }
}
