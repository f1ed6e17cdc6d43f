//! End-to-end acceptance checks. Each test is one criterion; `cargo test
//! --test acceptance` prints one ok/FAILED line per criterion.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use docflow::bench::{
    ablation_configs, baseline_configs, generate_sessions, header_example, header_example_planner,
    prepare_sessions, random_call, random_document, run_matrix, write_run, AgentConfig, Difficulty,
    Evaluation, GenProfile, SessionRecord, HEADER_EXAMPLE_INSTRUCTION,
};
use docflow::diff::{analyze_change, apply_opcodes, canonical_value, diff_text, OpTag};
use docflow::doc::canonical_json;
use docflow::orchestrator::{AcceptedVia, Engine, Orchestrator, RollbackPolicy, TurnContext};
use docflow::phrasing::Lang;
use docflow::planner::{perturb_args, Annotations, PlannerStrategy};
use docflow::registry::Registry;
use docflow::validator::{gate, Decision, GateOutcome, OracleValidator, ValidationVerdict};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FAULT_SEEDS: [u64; 3] = [1, 2, 3];
const SESSION_SEED: u64 = 42;

fn noisy_base() -> AgentConfig {
    AgentConfig {
        strategy: PlannerStrategy::Noisy,
        p_wrong_arg: 0.15,
        p_wrong_api: 0.10,
        ..AgentConfig::default()
    }
}

fn fifty_sessions() -> &'static [SessionRecord] {
    static S: OnceLock<Vec<SessionRecord>> = OnceLock::new();
    S.get_or_init(|| {
        let mut s = generate_sessions(50, SESSION_SEED, &GenProfile::default());
        prepare_sessions(&mut s).expect("generated sessions replay");
        s
    })
}

/// Noisy planner under every rollback policy, for each fault seed.
fn ablation() -> &'static [(AgentConfig, Evaluation)] {
    static A: OnceLock<Vec<(AgentConfig, Evaluation)>> = OnceLock::new();
    A.get_or_init(|| {
        let configs = ablation_configs(&noisy_base(), &FAULT_SEEDS);
        run_matrix(fifty_sessions(), &configs, 4).expect("ablation runs")
    })
}

fn mean_over_seeds(policy: RollbackPolicy, f: impl Fn(&Evaluation) -> f64) -> f64 {
    let xs: Vec<f64> = ablation()
        .iter()
        .filter(|(c, _)| c.policy == policy)
        .map(|(_, e)| f(e))
        .collect();
    assert_eq!(xs.len(), FAULT_SEEDS.len());
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn report(name: &str, ok: bool, detail: String) {
    println!("[{}] {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{name} failed: {detail}");
}

#[test]
fn criterion_01_oracle_replay() {
    let start = Instant::now();
    let mut sessions = generate_sessions(100, 7, &GenProfile::default());
    prepare_sessions(&mut sessions).unwrap();
    let config = AgentConfig::default();
    let main = run_matrix(&sessions, std::slice::from_ref(&config), 4).unwrap();
    let elapsed = start.elapsed();
    let r = &main[0].1.report;
    let mut ok = r.iacc == 100.0 && r.sacc == 100.0 && elapsed < Duration::from_secs(60);
    let mut detail = format!(
        "iACC {:.2} sACC {:.2} in {:.1}s",
        r.iacc,
        r.sacc,
        elapsed.as_secs_f64()
    );

    // The policy cannot matter when nothing is ever rejected.
    let subset = &sessions[..20];
    let configs: Vec<AgentConfig> = RollbackPolicy::ablation()
        .into_iter()
        .map(|policy| AgentConfig {
            policy,
            ..config.clone()
        })
        .collect();
    for (c, e) in run_matrix(subset, &configs, 4).unwrap() {
        ok &= e.report.iacc == 100.0 && e.report.sacc == 100.0;
        detail.push_str(&format!(
            "; {} {:.0}/{:.0}",
            c.policy, e.report.iacc, e.report.sacc
        ));
    }
    report("oracle replay", ok, detail);
}

#[test]
fn criterion_02_rollback_ablation_ordering() {
    let [none, arg, dual, multi] = RollbackPolicy::ablation();
    let sacc = |p| mean_over_seeds(p, |e| e.report.sacc);
    let tok = |p| mean_over_seeds(p, |e| e.report.tokens_per_instruction);
    let (s0, s1, s2, s3) = (sacc(none), sacc(arg), sacc(dual), sacc(multi));
    let (t0, t1, t2, t3) = (tok(none), tok(arg), tok(dual), tok(multi));
    let ordered = s0 < s1 && s1 < s2 && s3 >= s2;
    let diminishing = (s2 - s1) >= 2.0 * (s3 - s2);
    let tokens = t0 < t1 && t1 < t2 && t2 < t3;
    report(
        "rollback ablation ordering",
        ordered && diminishing && tokens,
        format!(
            "sACC {s0:.2} < {s1:.2} < {s2:.2} <= {s3:.2}; gains {:.2} vs {:.2}; tokens/instr {t0:.0} < {t1:.0} < {t2:.0} < {t3:.0}",
            s2 - s1,
            s3 - s2
        ),
    );
}

#[test]
fn criterion_03_gate_truth_table() {
    let mut hits = 0;
    let mut cases = 0;
    for decision in [Decision::Pass, Decision::Fail] {
        for conf in [0.0, 0.3, 0.59, 0.6, 0.61, 1.0] {
            cases += 1;
            let expect_reject = decision == Decision::Fail && conf >= 0.6;
            let g = gate(&ValidationVerdict::new(decision, conf, "x"), 0.6);
            hits += usize::from((g.outcome == GateOutcome::Reject) == expect_reject);
        }
    }
    report(
        "gate truth table",
        hits == 12 && cases == 12,
        format!("{hits}/{cases}"),
    );
}

#[test]
fn criterion_04_diff_engine_oracle() {
    let reg = Registry::shared();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut agree, mut phantoms, mut changed_pairs) = (0, 0, 0);
    for i in 0..1000 {
        let lang = if i % 2 == 0 { Lang::En } else { Lang::Zh };
        let mut doc = random_document(&mut rng, lang);
        for _ in 0..rng.gen_range(0..3) {
            random_call(&mut rng, &mut doc, lang);
        }
        let prev = doc.extract_state().unwrap();
        let mut probe = doc.clone();
        let call = random_call(&mut rng, &mut probe, lang);
        // A third of the time run a perturbed variant instead, which may be a
        // no-op or fail outright.
        let mut next_doc = doc.clone();
        match rng.gen_range(0..3) {
            0 => {
                let bad = perturb_args(&call, &mut rng).unwrap_or(call);
                let _ = reg.execute(&bad, &mut next_doc);
            }
            _ => next_doc = probe,
        }
        let next = next_doc.extract_state().unwrap();
        let delta = analyze_change(&prev, &next);
        let bytes_equal = canonical_json(&prev) == canonical_json(&next);
        agree += usize::from(delta.is_empty == bytes_equal);
        changed_pairs += usize::from(!bytes_equal);
        let (p, n) = (canonical_value(&prev), canonical_value(&next));
        for (_, c) in delta.iter() {
            let before = c.old_path.as_ref().map(|q| p.pointer(q));
            let after = c.new_path.as_ref().map(|q| n.pointer(q));
            let real = match (&before, &after) {
                (Some(None), _) | (_, Some(None)) => false,
                (Some(b), Some(a)) => c.old_path != c.new_path || b != a,
                _ => true,
            };
            let matches_record =
                before.flatten() == c.before.as_ref() && after.flatten() == c.after.as_ref();
            phantoms += usize::from(!(real && matches_record));
        }
    }

    let mut ok_ops = 0;
    let alphabet: Vec<char> = "abcde fgh".chars().collect();
    for _ in 0..10_000 {
        let mut s = || -> String {
            (0..rng.gen_range(0..24))
                .map(|_| alphabet[rng.gen_range(0..alphabet.len())])
                .collect()
        };
        let (a, b) = (s(), s());
        let ops = diff_text(&a, &b);
        let rebuilt = apply_opcodes(&a, &b, &ops) == b;
        let equal_spans_match = ops.iter().filter(|o| o.tag == OpTag::Equal).all(|o| {
            let x: String = a.chars().skip(o.i1).take(o.i2 - o.i1).collect();
            let y: String = b.chars().skip(o.j1).take(o.j2 - o.j1).collect();
            x == y
        });
        ok_ops += usize::from(rebuilt && equal_spans_match);
    }
    report(
        "diff engine oracle",
        agree == 1000 && phantoms == 0 && ok_ops == 10_000,
        format!("emptiness {agree}/1000 ({changed_pairs} changed), phantom changes {phantoms}, opcode rebuilds {ok_ops}/10000"),
    );
}

#[test]
fn criterion_05_snapshot_safety() {
    let reg = Registry::shared();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut identical = 0;
    for i in 0..500 {
        let lang = if i % 2 == 0 { Lang::En } else { Lang::Zh };
        let mut doc = random_document(&mut rng, lang);
        let before = canonical_json(&doc.extract_state().unwrap());
        let handle = doc.snapshot();
        for _ in 0..rng.gen_range(1..5) {
            let call = random_call(&mut rng, &mut doc, lang);
            if rng.gen_bool(0.3) {
                if let Some(bad) = perturb_args(&call, &mut rng) {
                    let _ = reg.execute(&bad, &mut doc);
                }
            }
        }
        doc.restore(&handle).unwrap();
        identical += usize::from(canonical_json(&doc.extract_state().unwrap()) == before);
    }
    report(
        "snapshot safety",
        identical == 500,
        format!("{identical}/500 byte-identical"),
    );
}

#[test]
fn criterion_06_header_example_trace() {
    let session = header_example();
    let annotations = Arc::new(Annotations::from_sessions(std::slice::from_ref(&session)));
    let planner = Arc::new(header_example_planner(annotations.clone()));
    let validator = Arc::new(OracleValidator::new(annotations));
    let engine = Engine::Stepwise(Orchestrator::new(
        planner,
        validator,
        RollbackPolicy::SINGLE_ROUND_DUAL,
    ));
    let mut doc = docflow::doc::Document::from_state(&session.initial_state).unwrap();
    let turn = TurnContext {
        session_id: &session.session_id,
        turn_id: 1,
        instruction: HEADER_EXAMPLE_INSTRUCTION,
        dialogue: &[],
    };
    let trace = engine.run_instruction(turn, &mut doc, None);
    let first = &trace.steps[0];
    let seq: Vec<(String, Option<u64>, bool)> = first
        .attempts
        .iter()
        .map(|a| {
            (
                a.call.api_name.clone(),
                a.call.args.get("row").and_then(|v| v.as_u64()),
                a.accepted(),
            )
        })
        .collect();
    let expected = vec![
        ("merge_cell_table".to_string(), Some(0), false),
        ("merge_cell_table".to_string(), Some(1), false),
        ("add_table_header".to_string(), Some(0), true),
    ];
    let state = doc.extract_state().unwrap();
    let header: Vec<&str> = state.tables[0].cells[0]
        .iter()
        .map(|c| c.text.as_str())
        .collect();
    let ok = seq == expected
        && first.accepted_via == Some(AcceptedVia::ApiRollbackForced)
        && header == ["Dept", "Staff", "Age"]
        && Some(&state) == session.turns[0].expected_state.as_ref();
    report(
        "header example golden trace",
        ok,
        format!(
            "attempts {seq:?}, accepted via {:?}, header row {header:?}",
            first.accepted_via
        ),
    );
}

#[test]
fn criterion_07_generator_fidelity() {
    let sessions = generate_sessions(250, 7, &GenProfile::default());
    let n = sessions.len() as f64;
    let per_session_turns: Vec<usize> = sessions.iter().map(|s| s.turns.len()).collect();
    let per_session_apis: Vec<usize> = sessions.iter().map(|s| s.api_count()).collect();
    let per_turn: Vec<usize> = sessions
        .iter()
        .flat_map(|s| s.turns.iter().map(|t| t.annotated_apis.len()))
        .collect();
    let m_turns = per_session_turns.iter().sum::<usize>() as f64 / n;
    let m_apis = per_session_apis.iter().sum::<usize>() as f64 / n;
    let m_per = per_turn.iter().sum::<usize>() as f64 / per_turn.len() as f64;
    let within = |x: f64, target: f64| (x - target).abs() <= 0.1 * target;
    let in_range = |xs: &[usize], lo, hi| xs.iter().all(|&x| (lo..=hi).contains(&x));
    let ok = within(m_turns, 6.8)
        && within(m_apis, 34.8)
        && within(m_per, 5.1)
        && in_range(&per_session_turns, 4, 8)
        && in_range(&per_session_apis, 15, 75)
        && in_range(&per_turn, 2, 22);
    report(
        "generator fidelity",
        ok,
        format!(
            "means {m_turns:.2} instr/session, {m_apis:.2} APIs/session, {m_per:.2} APIs/instr"
        ),
    );
}

#[test]
fn criterion_08_difficulty_stratification() {
    let mut pooled: BTreeMap<Difficulty, (usize, usize)> = BTreeMap::new();
    for (c, e) in ablation() {
        if c.policy != RollbackPolicy::NONE {
            continue;
        }
        for t in &e.turns {
            let slot = pooled.entry(t.difficulty).or_default();
            slot.0 += usize::from(t.success);
            slot.1 += 1;
        }
    }
    let acc = |d| {
        pooled
            .get(&d)
            .map_or(f64::NAN, |(h, n)| 100.0 * *h as f64 / *n as f64)
    };
    let (s, m, h) = (acc(Difficulty::S), acc(Difficulty::M), acc(Difficulty::H));
    report(
        "difficulty stratification",
        s >= m && m >= h,
        format!("iACC S {s:.2} >= M {m:.2} >= H {h:.2} ({pooled:?})"),
    );
}

#[test]
fn criterion_09_baseline_ordering() {
    let sessions = fifty_sessions();
    let base = AgentConfig {
        policy: RollbackPolicy::SINGLE_ROUND_DUAL,
        ..noisy_base()
    };
    let results = run_matrix(sessions, &baseline_configs(&base, &FAULT_SEEDS), 4).unwrap();
    let mut ok = true;
    let mut detail = Vec::new();
    for seed in FAULT_SEEDS {
        let sacc = |s: PlannerStrategy| {
            results
                .iter()
                .find(|(c, _)| c.seed == seed && c.strategy == s)
                .map(|(_, e)| e.report.sacc)
                .unwrap()
        };
        let r = sacc(PlannerStrategy::RetrievalOnly);
        let q = sacc(PlannerStrategy::ReasoningOnly);
        let h = sacc(PlannerStrategy::Hybrid);
        let f = sacc(PlannerStrategy::Noisy);
        ok &= r < q && q < h && h < f;
        detail.push(format!("seed {seed}: {r:.1} < {q:.1} < {h:.1} < {f:.1}"));
    }
    report("baseline ordering", ok, detail.join("; "));
}

#[test]
fn criterion_10_determinism() {
    let mut sessions = generate_sessions(12, 99, &GenProfile::default());
    prepare_sessions(&mut sessions).unwrap();
    let configs = vec![
        AgentConfig {
            seed: 5,
            ..noisy_base()
        },
        AgentConfig {
            strategy: PlannerStrategy::Hybrid,
            seed: 5,
            ..noisy_base()
        },
    ];
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let results = run_matrix(&sessions, &configs, 3).unwrap();
        write_run(d.path(), &results).unwrap();
    }
    let mut files = 0;
    let mut same = 0;
    let mut stack = vec![dirs[0].path().to_path_buf()];
    while let Some(p) = stack.pop() {
        for entry in std::fs::read_dir(&p).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
                continue;
            }
            let rel = path.strip_prefix(dirs[0].path()).unwrap();
            files += 1;
            let other = std::fs::read(dirs[1].path().join(rel)).unwrap_or_default();
            same += usize::from(std::fs::read(&path).unwrap() == other);
        }
    }
    report(
        "determinism",
        files > 2 && same == files,
        format!("{same}/{files} output files byte-identical"),
    );
}
