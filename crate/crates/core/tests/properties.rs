use docflow::bench::{random_call, random_document, strict_equal};
use docflow::diff::{analyze_change, canonical_value};
use docflow::doc::{canonical_json, load_state, Document};
use docflow::phrasing::Lang;
use docflow::registry::Registry;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn doc_from(seed: u64, zh: bool) -> (Document, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lang = if zh { Lang::Zh } else { Lang::En };
    (random_document(&mut rng, lang), rng)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonical_json_round_trips(seed in any::<u64>(), zh in any::<bool>()) {
        let (doc, _) = doc_from(seed, zh);
        let state = doc.extract_state().unwrap();
        let bytes = canonical_json(&state);
        let back = load_state(&bytes).unwrap();
        prop_assert_eq!(canonical_json(&back), bytes.clone());
        let parsed: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        prop_assert_eq!(canonical_value(&state), parsed);
    }

    #[test]
    fn delta_is_empty_exactly_for_equal_states(seed in any::<u64>(), steps in 1usize..6) {
        let (mut doc, mut rng) = doc_from(seed, false);
        let before = doc.extract_state().unwrap();
        prop_assert!(analyze_change(&before, &before).is_empty);
        for _ in 0..steps {
            let call = random_call(&mut rng, &mut doc, Lang::En);
            let _ = Registry::shared().execute(&call, &mut doc);
        }
        let after = doc.extract_state().unwrap();
        prop_assert_eq!(analyze_change(&before, &after).is_empty, strict_equal(&before, &after));
    }

    #[test]
    fn restore_undoes_any_call_sequence(seed in any::<u64>(), steps in 1usize..8) {
        let (mut doc, mut rng) = doc_from(seed, true);
        let before = canonical_json(&doc.extract_state().unwrap());
        let snap = doc.snapshot();
        for _ in 0..steps {
            let call = random_call(&mut rng, &mut doc, Lang::Zh);
            let _ = Registry::shared().execute(&call, &mut doc);
        }
        doc.restore(&snap).unwrap();
        prop_assert_eq!(canonical_json(&doc.extract_state().unwrap()), before);
    }
}
