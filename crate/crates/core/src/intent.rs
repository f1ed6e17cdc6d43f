//! Intent classification: rank the eight categories for a sub-instruction.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::registry::IntentCategory;

const LEXICON_JSON: &str = include_str!("../data/lexicon.json");

/// Full distribution over the eight categories, best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentRanking {
    pub ranked: Vec<(IntentCategory, f64)>,
}

impl IntentRanking {
    /// Softmax over raw scores; ties keep the category enum order.
    pub fn from_scores(scores: &[(IntentCategory, f64)], temperature: f64) -> Self {
        let max = scores.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = scores
            .iter()
            .map(|s| ((s.1 - max) / temperature).exp())
            .collect();
        let total: f64 = exps.iter().sum();
        let mut ranked: Vec<(IntentCategory, f64)> = scores
            .iter()
            .zip(exps)
            .map(|(s, e)| (s.0, e / total))
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        IntentRanking { ranked }
    }

    pub fn top(&self) -> IntentCategory {
        self.ranked[0].0
    }

    pub fn top_k(&self, k: usize) -> Vec<IntentCategory> {
        top_k(self, k)
    }

    pub fn score(&self, c: IntentCategory) -> f64 {
        self.ranked
            .iter()
            .find(|r| r.0 == c)
            .map(|r| r.1)
            .unwrap_or(0.0)
    }
}

pub fn top_k(ranking: &IntentRanking, k: usize) -> Vec<IntentCategory> {
    assert!((1..=8).contains(&k), "k must be within 1..=8");
    ranking.ranked.iter().take(k).map(|r| r.0).collect()
}

pub trait IntentClassifier: Send + Sync {
    fn classify(&self, sub_instruction: &str) -> IntentRanking;
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("lexicon is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown category `{0}` in lexicon")]
    UnknownCategory(String),
    #[error("bad pattern `{pattern}`: {reason}")]
    Pattern { pattern: String, reason: String },
}

#[derive(Deserialize)]
struct LexiconFile {
    #[serde(default = "one")]
    temperature: f64,
    categories: std::collections::BTreeMap<String, Vec<LexiconEntry>>,
}

fn one() -> f64 {
    1.0
}

#[derive(Deserialize)]
struct LexiconEntry {
    pattern: String,
    weight: f64,
}

/// Keyword scorer: each pattern that matches adds its weight once to its
/// category; scores go through a softmax.
#[derive(Debug)]
pub struct RuleClassifier {
    entries: Vec<(IntentCategory, Regex, f64)>,
    temperature: f64,
}

impl RuleClassifier {
    pub fn standard() -> &'static RuleClassifier {
        static STD: OnceLock<RuleClassifier> = OnceLock::new();
        STD.get_or_init(|| {
            RuleClassifier::from_json(LEXICON_JSON).expect("built-in lexicon is valid")
        })
    }

    pub fn from_json(text: &str) -> Result<Self, LexiconError> {
        let file: LexiconFile = serde_json::from_str(text)?;
        let mut entries = Vec::new();
        for (name, list) in file.categories {
            let cat = IntentCategory::parse(&name).ok_or(LexiconError::UnknownCategory(name))?;
            for e in list {
                let re = Regex::new(&format!("(?i){}", e.pattern)).map_err(|err| {
                    LexiconError::Pattern {
                        pattern: e.pattern.clone(),
                        reason: err.to_string(),
                    }
                })?;
                entries.push((cat, re, e.weight));
            }
        }
        Ok(RuleClassifier {
            entries,
            temperature: file.temperature,
        })
    }

    pub fn raw_scores(&self, text: &str) -> Vec<(IntentCategory, f64)> {
        IntentCategory::ALL
            .iter()
            .map(|&c| {
                let s = self
                    .entries
                    .iter()
                    .filter(|(ec, re, _)| *ec == c && re.is_match(text))
                    .map(|e| e.2)
                    .sum();
                (c, s)
            })
            .collect()
    }
}

impl IntentClassifier for RuleClassifier {
    fn classify(&self, sub_instruction: &str) -> IntentRanking {
        IntentRanking::from_scores(&self.raw_scores(sub_instruction), self.temperature)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use IntentCategory::*;

    #[test]
    fn examples() {
        let c = RuleClassifier::standard();
        assert_eq!(
            c.classify("add headers Dept, Staff, Age to the table")
                .top(),
            TableOperation
        );
        assert_eq!(
            c.classify("make the second paragraph bold").top(),
            FormatStyleEditing
        );
        assert_eq!(
            c.classify("add a table of contents").top(),
            DocumentStructureUpdate
        );
    }

    #[test]
    fn unknown_text_is_uniform() {
        let r = RuleClassifier::standard().classify("do something");
        for (_, p) in &r.ranked {
            assert!((p - 0.125).abs() < 1e-9);
        }
        assert_eq!(
            r.top_k(3),
            vec![ContentCreation, ContentModification, TableOperation]
        );
    }

    #[test]
    fn distribution_is_normalized_and_sorted() {
        let r = RuleClassifier::standard().classify("insert a picture and resize the chart");
        let sum: f64 = r.ranked.iter().map(|x| x.1).sum();
        assert!((sum - 1.0).abs() < 1e-6);
        assert!(r.ranked.windows(2).all(|w| w[0].1 >= w[1].1));
        assert_eq!(r.ranked.len(), 8);
        assert_eq!(r.top_k(8).len(), 8);
    }
}
