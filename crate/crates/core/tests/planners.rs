use std::collections::BTreeMap;
use std::sync::Arc;

use docflow::bench::{generate_sessions, pre_states, GenProfile, SessionRecord};
use docflow::doc::DocumentState;
use docflow::orchestrator::candidates_for;
use docflow::planner::{
    Annotations, FaultConfig, FullPlanner, HybridPlanner, NoisyPlanner, PlanContext, PlanError,
    Planner, RetrievalPlanner, ScriptedPlanner, RETRIEVAL_THRESHOLD,
};
use docflow::registry::Registry;
use docflow::validator::ValidationVerdict;

fn ctx<'a>(
    s: &'a SessionRecord,
    turn: usize,
    step: usize,
    state: &'a DocumentState,
) -> PlanContext<'a> {
    PlanContext {
        instruction: &s.turns[turn].instruction,
        session_id: &s.session_id,
        turn_id: s.turns[turn].turn_id,
        step_index: step,
        attempt: 0,
        history: &[],
        state,
        session_dialogue: &[],
    }
}

/// Token-overlap cosine, written independently of the planner.
fn oracle_cosine(a: &str, b: &str) -> f64 {
    let bag = |t: &str| {
        let mut m: BTreeMap<String, u32> = BTreeMap::new();
        for w in t
            .to_lowercase()
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
        {
            *m.entry(w.to_string()).or_default() += 1;
        }
        m
    };
    let (x, y) = (bag(a), bag(b));
    let dot: u32 = x
        .iter()
        .map(|(w, n)| n * y.get(w).copied().unwrap_or(0))
        .sum();
    let norm = |m: &BTreeMap<String, u32>| (m.values().map(|n| n * n).sum::<u32>() as f64).sqrt();
    if dot == 0 {
        0.0
    } else {
        dot as f64 / (norm(&x) * norm(&y))
    }
}

#[test]
fn retrieval_ranking_matches_an_independent_cosine() {
    let query = "add a table with 2 rows";
    let dump = Registry::shared().dump_json();
    let mut expected: Vec<(String, f64)> = dump
        .as_array()
        .unwrap()
        .iter()
        .map(|api| {
            let name = api["name"].as_str().unwrap();
            let text = format!(
                "{} {}",
                name.replace('_', " "),
                api["description"].as_str().unwrap()
            );
            (name.to_string(), oracle_cosine(query, &text))
        })
        .collect();
    expected.sort_by(|a, b| b.1.total_cmp(&a.1));

    let ranked = RetrievalPlanner::default().rank(query);
    assert_eq!(ranked[0].0, "add_table");
    assert_eq!(expected[0].0, "add_table");
    for ((name, score), (oname, oscore)) in ranked.iter().zip(&expected) {
        assert!(
            (score - oscore).abs() < 1e-9,
            "{name} {score} vs {oname} {oscore}"
        );
    }
}

#[test]
fn retrieval_below_threshold_plans_nothing() {
    let s = &generate_sessions(1, 3, &GenProfile::default())[0];
    let mut s = s.clone();
    s.turns[0].instruction = "zebra quantum".into();
    let state = s.initial_state.clone();
    let planner = RetrievalPlanner::default();
    assert!(planner
        .rank("zebra quantum")
        .iter()
        .all(|(_, x)| *x < RETRIEVAL_THRESHOLD));
    assert!(planner
        .plan_full(&ctx(&s, 0, 0, &state))
        .unwrap()
        .calls
        .is_empty());
}

#[test]
fn fault_free_hybrid_reproduces_annotated_sequences() {
    let sessions = generate_sessions(10, 21, &GenProfile::default());
    let planner = HybridPlanner::new(FaultConfig::none(0));
    for s in &sessions {
        let pre = pre_states(s).unwrap();
        for (i, turn) in s.turns.iter().enumerate() {
            let plan = planner.plan_full(&ctx(s, i, 0, &pre[i])).unwrap();
            let reg = Registry::shared();
            let want: Vec<_> = turn
                .annotated_apis
                .iter()
                .map(|c| reg.canonicalize(c).unwrap())
                .collect();
            let got: Vec<_> = plan
                .calls
                .iter()
                .map(|c| reg.canonicalize(c).unwrap())
                .collect();
            assert_eq!(
                got.len(),
                want.len(),
                "{} turn {}",
                s.session_id,
                turn.turn_id
            );
            for (g, w) in got.iter().zip(&want) {
                assert!(g.same_action(w), "{g} vs {w}");
            }
        }
    }
}

#[test]
fn rollback_tiers_keep_or_change_the_api_as_promised() {
    let sessions = generate_sessions(15, 5, &GenProfile::default());
    let ann = Arc::new(Annotations::from_sessions(&sessions));
    let planner = NoisyPlanner::new(
        ScriptedPlanner::new(ann.clone()),
        FaultConfig::new(0.6, 0.4, 9),
    );
    let fail = ValidationVerdict::fail(0.9, "wrong result");
    let mut regenerated = 0;
    for s in &sessions {
        let pre = pre_states(s).unwrap();
        for (i, turn) in s.turns.iter().enumerate() {
            let c = ctx(s, i, 0, &pre[i]);
            let (sub, _) = ann.step(&s.session_id, turn.turn_id, 0).unwrap();
            let candidates = candidates_for(sub);
            let first = planner.generate_api(sub, &candidates, &c).unwrap();
            assert!(candidates.iter().any(|a| a.name == first.api_name));

            let revised = planner
                .revise_arguments(sub, &first, &fail, &PlanContext { attempt: 1, ..c })
                .unwrap();
            assert_eq!(revised.api_name, first.api_name);

            match planner.regenerate_api(
                sub,
                &revised,
                &fail,
                &candidates,
                &PlanContext { attempt: 2, ..c },
            ) {
                Ok(r) => {
                    assert_ne!(r.api_name, revised.api_name);
                    assert!(candidates.iter().any(|a| a.name == r.api_name));
                    regenerated += 1;
                }
                Err(e) => assert!(matches!(e, PlanError::Generation(_))),
            }
        }
    }
    assert!(regenerated > 50);
}

#[test]
fn regeneration_needs_another_candidate() {
    let s = &generate_sessions(1, 8, &GenProfile::default())[0];
    let ann = Arc::new(Annotations::from_sessions(std::slice::from_ref(s)));
    let planner = ScriptedPlanner::new(ann.clone());
    let (sub, call) = ann.step(&s.session_id, s.turns[0].turn_id, 0).unwrap();
    let only = [Registry::shared().get(&call.api_name).unwrap()];
    let fail = ValidationVerdict::fail(1.0, "wrong");
    let err = planner
        .regenerate_api(sub, call, &fail, &only, &ctx(s, 0, 0, &s.initial_state))
        .unwrap_err();
    assert!(matches!(err, PlanError::Generation(_)));
}
