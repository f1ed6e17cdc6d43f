use std::collections::BTreeSet;

use docflow::bench::{generate_sessions, GenProfile};
use docflow::intent::{IntentClassifier, RuleClassifier};
use docflow::orchestrator::candidates_for;
use docflow::phrasing::{Lang, Phrasebook};
use docflow::registry::IntentCategory;

const FIXTURE: &str = include_str!("data/intents.tsv");

#[test]
fn top_intent_agrees_with_hand_labels() {
    let c = RuleClassifier::standard();
    let mut total = 0;
    let mut misses = Vec::new();
    for line in FIXTURE
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
    {
        let (text, label) = line.split_once('\t').expect("tab separated");
        let want = IntentCategory::parse(label.trim()).expect("known label");
        total += 1;
        let got = c.classify(text).top();
        if got != want {
            misses.push(format!("{text}: {got} (labelled {want})"));
        }
    }
    assert_eq!(total, 50);
    let agreement = (total - misses.len()) as f64 / total as f64;
    println!("top-1 agreement {:.0}%", agreement * 100.0);
    for m in &misses {
        println!("  miss: {m}");
    }
    assert!(agreement >= 0.90, "{misses:#?}");
}

#[test]
fn rendered_sub_instructions_keep_their_api_among_candidates() {
    let book = Phrasebook::standard();
    let mut apis = BTreeSet::new();
    let mut checked = 0;
    for s in generate_sessions(40, 17, &GenProfile::default()) {
        for call in s.turns.iter().flat_map(|t| &t.annotated_apis) {
            for lang in Lang::ALL {
                for v in 0..book.variants(call) {
                    let Some(sub) = book.render_call(call, lang, v) else {
                        continue;
                    };
                    let names: Vec<_> = candidates_for(&sub).iter().map(|a| a.name).collect();
                    assert!(
                        names.contains(&call.api_name.as_str()),
                        "{sub:?} lost {}",
                        call.api_name
                    );
                    checked += 1;
                }
            }
            apis.insert(call.api_name.clone());
        }
    }
    assert!(apis.len() >= 30, "only {} APIs exercised", apis.len());
    assert!(checked > 1000);
}
