use std::sync::{Arc, Mutex};

use docflow::doc::{to_canonical_string, Document, DocumentState};
use docflow::llm::LlmError;
use docflow::orchestrator::{
    AcceptedVia, AttemptOutcome, InstructionStatus, Orchestrator, RollbackPolicy, StepTrace,
    TurnContext,
};
use docflow::planner::{PlanContext, PlanError, PlanStep, Planner};
use docflow::registry::{ApiCall, ApiSchema, Registry};
use docflow::validator::{Validated, ValidationInput, ValidationVerdict, Validator};
use serde_json::json;

fn para(text: &str) -> ApiCall {
    ApiCall::from_json("add_paragraph", json!({ "text": text }))
}

fn broken() -> ApiCall {
    ApiCall::from_json("delete_paragraph", json!({ "index": 99 }))
}

/// One-step planner with fixed answers per tier. `regen[i]` is the call of
/// the i-th API-level attempt; a missing revision is a generation error.
struct Fixed {
    first: ApiCall,
    revised: Option<ApiCall>,
    regen: Vec<ApiCall>,
    regen_seen: Mutex<usize>,
}

impl Fixed {
    fn new(first: ApiCall, revised: Option<ApiCall>, regen: Vec<ApiCall>) -> Arc<Self> {
        Arc::new(Fixed {
            first,
            revised,
            regen,
            regen_seen: Mutex::new(0),
        })
    }
}

impl Planner for Fixed {
    fn next_step(&self, ctx: &PlanContext<'_>) -> Result<PlanStep, PlanError> {
        Ok(if ctx.step_index == 0 {
            PlanStep::sub("add a paragraph", 1)
        } else {
            PlanStep::done(1)
        })
    }

    fn generate_api(
        &self,
        _: &str,
        _: &[&ApiSchema],
        _: &PlanContext<'_>,
    ) -> Result<ApiCall, PlanError> {
        Ok(self.first.clone())
    }

    fn revise_arguments(
        &self,
        _: &str,
        _: &ApiCall,
        _: &ValidationVerdict,
        _: &PlanContext<'_>,
    ) -> Result<ApiCall, PlanError> {
        self.revised
            .clone()
            .ok_or_else(|| PlanError::Generation("no revision".into()))
    }

    fn regenerate_api(
        &self,
        _: &str,
        _: &ApiCall,
        _: &ValidationVerdict,
        _: &[&ApiSchema],
        _: &PlanContext<'_>,
    ) -> Result<ApiCall, PlanError> {
        let mut n = self.regen_seen.lock().unwrap();
        let call = self
            .regen
            .get(*n)
            .or(self.regen.last())
            .cloned()
            .expect("regen call");
        *n += 1;
        Ok(call)
    }
}

/// Passes exactly when the state holds a paragraph reading "right", and
/// records the states it was shown.
#[derive(Default)]
struct Recorder {
    seen: Mutex<Vec<(DocumentState, DocumentState)>>,
}

impl Validator for Recorder {
    fn validate(&self, input: &ValidationInput<'_>) -> Result<Validated, LlmError> {
        self.seen
            .lock()
            .unwrap()
            .push((input.before.clone(), input.state.clone()));
        let ok = input.state.paragraphs.iter().any(|p| p.text == "right");
        let verdict = if ok {
            ValidationVerdict::pass(0.9, "found it")
        } else {
            ValidationVerdict::fail(0.9, "missing paragraph")
        };
        Ok(Validated {
            verdict,
            tokens: 10,
        })
    }
}

fn start_doc() -> Document {
    let mut doc = Document::new();
    Registry::shared()
        .execute(&para("intro"), &mut doc)
        .unwrap();
    doc
}

fn run(planner: Arc<Fixed>, policy: RollbackPolicy) -> (StepTrace, Document, Arc<Recorder>) {
    let validator = Arc::new(Recorder::default());
    let orch = Orchestrator::new(planner, validator.clone(), policy);
    let mut doc = start_doc();
    let turn = TurnContext {
        session_id: "t",
        turn_id: 1,
        instruction: "add a paragraph",
        dialogue: &[],
    };
    let trace = orch.run_instruction(turn, &mut doc, None);
    assert_eq!(trace.steps.len(), 1);
    (trace.steps[0].clone(), doc, validator)
}

fn texts(doc: &Document) -> Vec<String> {
    doc.extract_state()
        .unwrap()
        .paragraphs
        .into_iter()
        .map(|p| p.text)
        .collect()
}

#[test]
fn argument_fix_is_reachable_from_arg_only_upwards() {
    let cases = [
        (
            RollbackPolicy::NONE,
            AcceptedVia::ForcedLastAttempt,
            "wrong",
            1,
        ),
        (
            RollbackPolicy::ARG_ONLY,
            AcceptedVia::ArgRollback,
            "right",
            2,
        ),
        (
            RollbackPolicy::SINGLE_ROUND_DUAL,
            AcceptedVia::ArgRollback,
            "right",
            2,
        ),
        (
            RollbackPolicy::multi_round(2),
            AcceptedVia::ArgRollback,
            "right",
            2,
        ),
    ];
    for (policy, via, text, attempts) in cases {
        let planner = Fixed::new(para("wrong"), Some(para("right")), vec![para("other")]);
        let (step, doc, _) = run(planner, policy);
        assert_eq!(step.accepted_via, Some(via), "{policy}");
        assert_eq!(step.attempts.len(), attempts, "{policy}");
        assert_eq!(texts(&doc), ["intro", text], "{policy}");
    }
}

#[test]
fn api_fix_needs_the_api_tier() {
    let planner = || {
        Fixed::new(
            para("wrong"),
            Some(para("still wrong")),
            vec![para("right")],
        )
    };

    let (step, doc, _) = run(planner(), RollbackPolicy::ARG_ONLY);
    assert_eq!(step.accepted_via, Some(AcceptedVia::ForcedLastAttempt));
    assert_eq!(texts(&doc), ["intro", "still wrong"]);

    // The only round's API-level attempt is taken without asking the validator.
    let (step, doc, v) = run(planner(), RollbackPolicy::SINGLE_ROUND_DUAL);
    assert_eq!(step.accepted_via, Some(AcceptedVia::ApiRollbackForced));
    assert_eq!(step.attempts.len(), 3);
    assert!(step.attempts[2].verdict.is_none());
    assert_eq!(v.seen.lock().unwrap().len(), 2);
    assert_eq!(texts(&doc), ["intro", "right"]);

    let (step, _, v) = run(planner(), RollbackPolicy::multi_round(2));
    assert_eq!(step.accepted_via, Some(AcceptedVia::ApiRollback));
    assert_eq!(step.attempts.len(), 3);
    assert_eq!(v.seen.lock().unwrap().len(), 3);
}

#[test]
fn attempts_never_exceed_the_policy_bound() {
    for policy in [
        RollbackPolicy::NONE,
        RollbackPolicy::ARG_ONLY,
        RollbackPolicy::SINGLE_ROUND_DUAL,
        RollbackPolicy::multi_round(2),
        RollbackPolicy::multi_round(3),
    ] {
        let planner = Fixed::new(
            para("a"),
            Some(para("b")),
            vec![para("c"), para("d"), para("e")],
        );
        let (step, doc, _) = run(planner, policy);
        assert_eq!(step.attempts.len(), policy.max_attempts(), "{policy}");
        assert!(step.final_call.is_some());
        // Exactly one of the attempted paragraphs survives.
        assert_eq!(texts(&doc).len(), 2, "{policy}");
    }
    assert_eq!(RollbackPolicy::multi_round(3).max_attempts(), 7);
}

#[test]
fn execution_failure_goes_straight_to_the_api_tier() {
    let planner = Fixed::new(broken(), Some(para("revised")), vec![para("right")]);
    let (step, _, _) = run(planner, RollbackPolicy::multi_round(2));
    assert!(matches!(
        step.attempts[0].outcome,
        AttemptOutcome::ExecError { .. }
    ));
    assert_eq!(
        step.attempts[0].verdict.as_ref().map(|v| v.confidence),
        Some(1.0)
    );
    assert_eq!(step.attempts[1].call, para("right"));
    assert_eq!(step.accepted_via, Some(AcceptedVia::ApiRollback));

    // Without an API tier the argument tier still gets its turn.
    let planner = Fixed::new(broken(), Some(para("right")), vec![]);
    let (step, _, _) = run(planner, RollbackPolicy::ARG_ONLY);
    assert_eq!(step.attempts[1].call, para("right"));
    assert_eq!(step.accepted_via, Some(AcceptedVia::ArgRollback));
}

#[test]
fn generation_error_restores_the_step_snapshot() {
    let planner = Fixed::new(para("wrong"), None, vec![para("right")]);
    let (step, doc, _) = run(planner, RollbackPolicy::SINGLE_ROUND_DUAL);
    assert!(step.error.as_deref().unwrap().contains("no revision"));
    assert!(step.final_call.is_none());
    assert_eq!(
        to_canonical_string(&doc.extract_state().unwrap()),
        to_canonical_string(&start_doc().extract_state().unwrap())
    );
}

#[test]
fn every_attempt_starts_from_the_pre_step_state() {
    let planner = Fixed::new(para("a"), Some(para("b")), vec![para("c"), para("right")]);
    let (_, _, v) = run(planner, RollbackPolicy::multi_round(3));
    let before = start_doc().extract_state().unwrap();
    let seen = v.seen.lock().unwrap();
    assert_eq!(seen.len(), 5);
    for (b, after) in seen.iter() {
        assert_eq!(to_canonical_string(b), to_canonical_string(&before));
        assert_eq!(after.paragraphs.len(), 2, "rejected attempts must not leak");
    }
}

#[test]
fn step_cap_stops_a_planner_that_never_finishes() {
    struct Endless;
    impl Planner for Endless {
        fn next_step(&self, _: &PlanContext<'_>) -> Result<PlanStep, PlanError> {
            Ok(PlanStep::sub("add a paragraph", 1))
        }
        fn generate_api(
            &self,
            _: &str,
            _: &[&ApiSchema],
            _: &PlanContext<'_>,
        ) -> Result<ApiCall, PlanError> {
            Ok(para("right"))
        }
        fn revise_arguments(
            &self,
            _: &str,
            c: &ApiCall,
            _: &ValidationVerdict,
            _: &PlanContext<'_>,
        ) -> Result<ApiCall, PlanError> {
            Ok(c.clone())
        }
        fn regenerate_api(
            &self,
            _: &str,
            c: &ApiCall,
            _: &ValidationVerdict,
            _: &[&ApiSchema],
            _: &PlanContext<'_>,
        ) -> Result<ApiCall, PlanError> {
            Ok(c.clone())
        }
    }
    let orch = Orchestrator::new(
        Arc::new(Endless),
        Arc::new(Recorder::default()),
        RollbackPolicy::NONE,
    )
    .with_step_cap(4);
    let mut doc = Document::new();
    let turn = TurnContext {
        session_id: "t",
        turn_id: 1,
        instruction: "x",
        dialogue: &[],
    };
    let trace = orch.run_instruction(turn, &mut doc, None);
    assert_eq!(trace.status, InstructionStatus::StepCapExceeded);
    assert_eq!(trace.steps.len(), 4);
    assert_eq!(trace.api_count, 4);
}

#[test]
fn policy_names_round_trip() {
    for s in [
        "none",
        "arg_only",
        "single_round_dual",
        "multi_round(2)",
        "multi_round(5)",
    ] {
        let p: RollbackPolicy = s.parse().unwrap();
        assert_eq!(p.to_string(), s);
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<RollbackPolicy>(&json).unwrap(), p);
    }
    assert_eq!(
        "two_round".parse::<RollbackPolicy>().unwrap(),
        RollbackPolicy::multi_round(2)
    );
    assert_eq!(
        "multi_round:1".parse::<RollbackPolicy>().unwrap(),
        RollbackPolicy::SINGLE_ROUND_DUAL
    );
    assert!("multi_round(0)".parse::<RollbackPolicy>().is_err());
}
