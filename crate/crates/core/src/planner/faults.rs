//! Seeded fault injection for the simulated planners.
//!
//! Every random decision is drawn from a generator keyed by the decision's
//! position (session, turn, step, attempt), never from shared state. Two runs
//! that differ only in rollback policy therefore see identical first-attempt
//! faults, and a higher fault rate faults a superset of the calls.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::doc::{Document, DocumentState};
use crate::hash::Fnv64;
use crate::phrasing::Phrasebook;
use crate::registry::{ApiCall, ApiSchema, ParamType, Registry};

/// Average calls per instruction the per-instruction fault rates are spread over.
pub const CALLS_PER_INSTRUCTION: f64 = 5.1;

/// Fault rates are per instruction; `hazard_scale` multiplies the underlying
/// per-call hazard (1.0 for the stepwise planner).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaultConfig {
    pub p_wrong_arg: f64,
    pub p_wrong_api: f64,
    pub seed: u64,
    #[serde(default = "one")]
    pub hazard_scale: f64,
}

fn one() -> f64 {
    1.0
}

impl FaultConfig {
    pub fn new(p_wrong_arg: f64, p_wrong_api: f64, seed: u64) -> Self {
        assert!((0.0..=1.0).contains(&p_wrong_arg) && (0.0..=1.0).contains(&p_wrong_api));
        FaultConfig {
            p_wrong_arg,
            p_wrong_api,
            seed,
            hazard_scale: 1.0,
        }
    }

    pub fn none(seed: u64) -> Self {
        Self::new(0.0, 0.0, seed)
    }

    pub fn scaled(mut self, hazard_scale: f64) -> Self {
        self.hazard_scale = hazard_scale;
        self
    }

    fn per_call(&self, p: f64) -> f64 {
        if p >= 1.0 {
            return 1.0;
        }
        1.0 - (1.0 - p).powf(self.hazard_scale / CALLS_PER_INSTRUCTION)
    }

    /// Per-call probability of an argument fault.
    pub fn q_arg(&self) -> f64 {
        self.per_call(self.p_wrong_arg)
    }

    /// Per-call probability of an API fault.
    pub fn q_api(&self) -> f64 {
        self.per_call(self.p_wrong_api)
    }

    pub(crate) fn rng(
        &self,
        tag: &str,
        session: &str,
        turn: u32,
        step: usize,
        attempt: usize,
    ) -> ChaCha8Rng {
        let key = Fnv64::new()
            .u64(self.seed)
            .field(tag.as_bytes())
            .field(session.as_bytes())
            .u64(turn as u64)
            .u64(step as u64)
            .u64(attempt as u64)
            .finish();
        ChaCha8Rng::seed_from_u64(key)
    }

    pub(crate) fn unit(
        &self,
        tag: &str,
        session: &str,
        turn: u32,
        step: usize,
        attempt: usize,
    ) -> f64 {
        self.rng(tag, session, turn, step, attempt).gen()
    }

    /// Apply the planning fault, if any, for one call position. With a state
    /// at hand, argument faults are drawn among values that still execute
    /// (an off-by-one onto an existing element rather than past the end).
    pub(crate) fn corrupt(
        &self,
        correct: &ApiCall,
        candidates: &[&ApiSchema],
        state: Option<&DocumentState>,
        pos: (&str, u32, usize),
    ) -> ApiCall {
        let (session, turn, step) = pos;
        if self.unit("api", session, turn, step, 0) < self.q_api() {
            let mut rng = self.rng("api-pick", session, turn, step, 0);
            if let Some(c) = neighbor_call(correct, candidates, &mut rng) {
                return c;
            }
        }
        if self.unit("arg", session, turn, step, 0) < self.q_arg() {
            let mut rng = self.rng("arg-pick", session, turn, step, 0);
            if let Some(c) = perturb_within(correct, state, &mut rng) {
                return c;
            }
        }
        correct.clone()
    }
}

/// Like [`perturb_args`], preferring perturbations that execute on `state`.
pub(crate) fn perturb_within(
    call: &ApiCall,
    state: Option<&DocumentState>,
    rng: &mut impl Rng,
) -> Option<ApiCall> {
    let Some(doc) = state.and_then(|s| Document::from_state(s).ok()) else {
        return perturb_args(call, rng);
    };
    let mut fallback = None;
    for _ in 0..8 {
        let Some(c) = perturb_args(call, rng) else {
            break;
        };
        if Registry::shared().execute(&c, &mut doc.clone()).is_ok() {
            return Some(c);
        }
        fallback.get_or_insert(c);
    }
    fallback
}

fn bump_index(v: &Value, rng: &mut impl Rng) -> Value {
    let n = v.as_u64().unwrap_or(0);
    if n == 0 || rng.gen_bool(0.5) {
        json!(n + 1)
    } else {
        json!(n - 1)
    }
}

/// A plausible wrong value for a non-index parameter.
fn nearby(ty: ParamType, v: &Value) -> Option<Value> {
    Some(match ty {
        ParamType::Count => json!(v.as_u64()? + 1),
        ParamType::PosFloat | ParamType::NonNegFloat | ParamType::Float => {
            json!(v.as_f64()? + 6.0)
        }
        ParamType::Bool => json!(!v.as_bool()?),
        ParamType::Choice(opts) => {
            let i = opts.iter().position(|o| Some(*o) == v.as_str())?;
            json!(opts[(i + 1) % opts.len()])
        }
        ParamType::Color => json!(if v.as_str()? == "000000" {
            "FFFFFF"
        } else {
            "000000"
        }),
        ParamType::Text | ParamType::NonEmptyText => {
            let s = v.as_str()?;
            let cut: String = match s.rsplit_once(' ') {
                Some((head, _)) => head.to_string(),
                None if s.chars().count() > 1 => s.chars().skip(1).collect(),
                None => format!("{s}{s}"),
            };
            json!(cut)
        }
        ParamType::TextList => {
            let mut items = v.as_array()?.clone();
            items.pop();
            if items.is_empty() {
                return None;
            }
            Value::Array(items)
        }
        ParamType::Index => return None,
    })
}

/// Perturb one argument: an index shifted by one or a header list rotated;
/// for calls without either, a nearby value of another argument.
pub fn perturb_args(call: &ApiCall, rng: &mut impl Rng) -> Option<ApiCall> {
    let reg = Registry::shared();
    let book = Phrasebook::standard();
    let schema = reg.get(&call.api_name)?;
    let eff = book.effective_args(call)?;
    let mut primary: Vec<&str> = Vec::new();
    let mut secondary: Vec<&str> = Vec::new();
    for p in &schema.params {
        let Some(v) = eff.get(p.name) else { continue };
        match p.ty {
            ParamType::Index => primary.push(p.name),
            ParamType::TextList => {
                let distinct = v
                    .as_array()
                    .is_some_and(|a| a.iter().any(|x| Some(x) != a.first()));
                if distinct {
                    primary.push(p.name);
                } else {
                    secondary.push(p.name);
                }
            }
            _ => secondary.push(p.name),
        }
    }
    let from_primary = !primary.is_empty();
    let pool = if from_primary { primary } else { secondary };
    let name = *pool.choose(rng)?;
    let ty = schema.param(name)?.ty;
    let old = &eff[name];
    let new = match ty {
        ParamType::Index => bump_index(old, rng),
        ParamType::TextList if from_primary => {
            let mut items = old.as_array()?.clone();
            items.rotate_left(1);
            Value::Array(items)
        }
        _ => nearby(ty, old)?,
    };
    let mut args = eff.clone();
    args.insert(name.to_string(), new);
    let out = book.minimal(&ApiCall::new(call.api_name.clone(), args))?;
    (!out.same_action(&book.minimal(call)?)).then_some(out)
}

fn filler(ty: ParamType, eff: &crate::registry::Args) -> Value {
    let some_text = || {
        eff.values()
            .find_map(|v| v.as_str().filter(|s| !s.is_empty()).map(String::from))
            .or_else(|| {
                eff.values()
                    .find_map(|v| v.as_array()?.first()?.as_str().map(String::from))
            })
            .unwrap_or_else(|| "text".to_string())
    };
    match ty {
        ParamType::Index => json!(0),
        ParamType::Count => json!(1),
        ParamType::Text | ParamType::NonEmptyText => json!(some_text()),
        ParamType::TextList => eff
            .values()
            .find(|v| v.is_array())
            .cloned()
            .unwrap_or_else(|| json!([some_text()])),
        ParamType::Bool => json!(true),
        ParamType::PosFloat | ParamType::NonNegFloat | ParamType::Float => json!(100.0),
        ParamType::Color => json!("000000"),
        ParamType::Choice(opts) => json!(opts[0]),
    }
}

/// Substitute a different API sharing an intent category, carrying over
/// arguments with matching names and filling the other required ones.
pub fn neighbor_call(
    call: &ApiCall,
    candidates: &[&ApiSchema],
    rng: &mut impl Rng,
) -> Option<ApiCall> {
    let reg = Registry::shared();
    let book = Phrasebook::standard();
    let schema = reg.get(&call.api_name)?;
    let eff = book.effective_args(call)?;
    let mut pool: Vec<&ApiSchema> = candidates
        .iter()
        .copied()
        .filter(|c| c.name != schema.name)
        .filter(|c| c.intent_categories.iter().any(|k| schema.has_category(*k)))
        .collect();
    if pool.is_empty() {
        pool = candidates
            .iter()
            .copied()
            .filter(|c| c.name != schema.name)
            .collect();
    }
    pool.shuffle(rng);
    for other in pool {
        let mut args = crate::registry::Args::new();
        for p in &other.params {
            let carried = eff.get(p.name).and_then(|v| p.ty.normalize(v));
            match carried {
                Some(v) => {
                    args.insert(p.name.to_string(), v);
                }
                None if p.required => {
                    args.insert(p.name.to_string(), filler(p.ty, &eff));
                }
                None => {}
            }
        }
        if let Some(c) = book.minimal(&ApiCall::new(other.name, args)) {
            return Some(c);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn per_call_rates_compound_back() {
        let f = FaultConfig::new(0.15, 0.10, 1);
        let arg = 1.0 - (1.0 - f.q_arg()).powf(CALLS_PER_INSTRUCTION);
        assert!((arg - 0.15).abs() < 1e-12);
        let scaled = f.scaled(1.25);
        assert!(scaled.q_api() > f.q_api());
    }

    #[test]
    fn header_fault_permutes() {
        let call = ApiCall::from_json(
            "add_table_header",
            json!({"table_index": 0, "headers": ["Dept", "Staff", "Age"]}),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let bad = perturb_args(&call, &mut rng).unwrap();
            assert_eq!(bad.api_name, "add_table_header");
            assert!(!bad.same_action(&call));
        }
    }

    #[test]
    fn neighbor_shares_a_category() {
        let reg = Registry::shared();
        let call = ApiCall::from_json(
            "add_table_header",
            json!({"table_index": 0, "headers": ["Dept", "Staff", "Age"]}),
        );
        let cands = reg.list_apis(Some(&[crate::registry::IntentCategory::TableOperation]));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let n = neighbor_call(&call, &cands, &mut rng).unwrap();
            assert_ne!(n.api_name, call.api_name);
            assert!(reg
                .get(&n.api_name)
                .unwrap()
                .has_category(crate::registry::IntentCategory::TableOperation));
            reg.validate_args(&n).unwrap();
        }
    }
}
