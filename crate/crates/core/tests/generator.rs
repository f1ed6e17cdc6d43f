use docflow::bench::{generate_sessions, replay_annotated, GenProfile};
use docflow::phrasing::Phrasebook;

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

#[test]
fn distribution_matches_profile() {
    let sessions = generate_sessions(250, 7, &GenProfile::default());
    let turns: Vec<f64> = sessions.iter().map(|s| s.turns.len() as f64).collect();
    let apis: Vec<f64> = sessions.iter().map(|s| s.api_count() as f64).collect();
    let per_instr: Vec<f64> = sessions
        .iter()
        .flat_map(|s| s.turns.iter().map(|t| t.annotated_apis.len() as f64))
        .collect();
    let (mt, ma, mi) = (mean(&turns), mean(&apis), mean(&per_instr));
    eprintln!("turns {mt:.3} apis {ma:.3} per-instruction {mi:.3}");
    assert!((6.12..=7.48).contains(&mt), "{mt}");
    assert!((31.32..=38.28).contains(&ma), "{ma}");
    assert!((4.59..=5.61).contains(&mi), "{mi}");
    assert!(turns.iter().all(|&t| (4.0..=8.0).contains(&t)));
    assert!(apis.iter().all(|&a| (15.0..=75.0).contains(&a)));
    assert!(per_instr.iter().all(|&a| (2.0..=22.0).contains(&a)));
}

#[test]
fn generated_sessions_replay_and_parse() {
    let book = Phrasebook::standard();
    for s in generate_sessions(20, 11, &GenProfile::default()) {
        let states = replay_annotated(&s).expect("replays cleanly");
        for (t, st) in s.turns.iter().zip(&states) {
            assert_eq!(t.expected_state.as_ref(), Some(st));
            let parsed = book.parse_instruction(&t.instruction).expect("parses");
            assert_eq!(parsed.len(), t.annotated_apis.len());
        }
    }
}

#[test]
fn generation_is_deterministic() {
    let a = generate_sessions(5, 99, &GenProfile::default());
    let b = generate_sessions(5, 99, &GenProfile::default());
    let ja: Vec<String> = a.iter().map(|s| s.to_json()).collect();
    let jb: Vec<String> = b.iter().map(|s| s.to_json()).collect();
    assert_eq!(ja, jb);
}
