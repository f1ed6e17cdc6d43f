//! Bilingual sub-instruction templates: render an [`ApiCall`] as text and
//! parse such text back into the call.
//!
//! Placeholders are parameter names in braces. `{name:ord}` renders a
//! zero-based index as a one-based ordinal ("third" / "3"). Text values are
//! quoted ('...' in English, 「...」 in Chinese).

use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::registry::{ApiCall, Args, ParamType, Registry};

const TEMPLATES_JSON: &str = include_str!("../data/templates.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lang {
    En,
    Zh,
}

impl Lang {
    pub const ALL: [Lang; 2] = [Lang::En, Lang::Zh];

    pub fn as_str(self) -> &'static str {
        match self {
            Lang::En => "en",
            Lang::Zh => "zh",
        }
    }
}

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("template file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("template for `{api}` is invalid: {reason}")]
    Invalid { api: String, reason: String },
}

#[derive(Deserialize)]
struct FileJoiner {
    between: String,
    end: String,
}

#[derive(Deserialize)]
struct FileTemplate {
    en: String,
    zh: String,
    #[serde(default)]
    fixed: BTreeMap<String, Value>,
}

#[derive(Deserialize)]
struct TemplateFile {
    joiners: BTreeMap<String, FileJoiner>,
    #[serde(default)]
    labels: BTreeMap<String, BTreeMap<String, String>>,
    apis: BTreeMap<String, Vec<FileTemplate>>,
}

#[derive(Debug, Clone, PartialEq)]
enum Piece {
    Lit(String),
    Slot { name: String, ordinal: bool },
}

#[derive(Debug)]
struct Template {
    pieces: [Vec<Piece>; 2],
    patterns: [Regex; 2],
    /// Slot names in the order their capture groups appear.
    slots: [Vec<(String, bool)>; 2],
    fixed: Args,
}

impl Template {
    fn placeholders(&self) -> impl Iterator<Item = &str> {
        self.slots[0].iter().map(|(n, _)| n.as_str())
    }
}

#[derive(Debug)]
pub struct Phrasebook {
    registry: &'static Registry,
    joiners: [(String, String); 2],
    zh_labels: BTreeMap<String, String>,
    apis: BTreeMap<String, Vec<Template>>,
}

const EN_ORDINALS: [&str; 10] = [
    "first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth", "tenth",
];

fn en_ordinal(n: u64) -> String {
    if (1..=10).contains(&n) {
        return EN_ORDINALS[n as usize - 1].to_string();
    }
    let suffix = match (n % 10, n % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    };
    format!("{n}{suffix}")
}

fn parse_en_ordinal(s: &str) -> Option<u64> {
    let lower = s.to_lowercase();
    if let Some(i) = EN_ORDINALS.iter().position(|w| *w == lower) {
        return Some(i as u64 + 1);
    }
    lower
        .trim_end_matches(|c: char| c.is_ascii_alphabetic())
        .parse()
        .ok()
}

/// Shortest decimal form at canonical precision: 12, 12.5, 0.125.
pub fn format_number(x: f64) -> String {
    let s = format!("{:.3}", crate::doc::round3(x));
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn split_pieces(template: &str, api: &str) -> Result<Vec<Piece>, TemplateError> {
    let mut pieces = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        if open > 0 {
            pieces.push(Piece::Lit(rest[..open].to_string()));
        }
        let close = rest[open..]
            .find('}')
            .ok_or_else(|| TemplateError::Invalid {
                api: api.to_string(),
                reason: format!("unclosed placeholder in `{template}`"),
            })?
            + open;
        let inner = &rest[open + 1..close];
        let (name, ordinal) = match inner.split_once(':') {
            Some((n, "ord")) => (n, true),
            Some((_, m)) => {
                return Err(TemplateError::Invalid {
                    api: api.to_string(),
                    reason: format!("unknown modifier `{m}`"),
                })
            }
            None => (inner, false),
        };
        pieces.push(Piece::Slot {
            name: name.to_string(),
            ordinal,
        });
        rest = &rest[close + 1..];
    }
    if !rest.is_empty() {
        pieces.push(Piece::Lit(rest.to_string()));
    }
    Ok(pieces)
}

impl Phrasebook {
    /// The built-in template set, parsed once.
    pub fn standard() -> &'static Phrasebook {
        static BOOK: OnceLock<Phrasebook> = OnceLock::new();
        BOOK.get_or_init(|| {
            Phrasebook::from_json(TEMPLATES_JSON, Registry::shared())
                .expect("built-in templates are valid")
        })
    }

    pub fn from_json(text: &str, registry: &'static Registry) -> Result<Self, TemplateError> {
        let file: TemplateFile = serde_json::from_str(text)?;
        let joiner = |lang: &str| {
            file.joiners
                .get(lang)
                .map(|j| (j.between.clone(), j.end.clone()))
                .ok_or_else(|| TemplateError::Invalid {
                    api: "*".into(),
                    reason: format!("missing joiner for `{lang}`"),
                })
        };
        let mut book = Phrasebook {
            registry,
            joiners: [joiner("en")?, joiner("zh")?],
            zh_labels: file.labels.get("zh").cloned().unwrap_or_default(),
            apis: BTreeMap::new(),
        };
        for (api, entries) in &file.apis {
            let schema = registry.get(api).ok_or_else(|| TemplateError::Invalid {
                api: api.clone(),
                reason: "not a registered API".into(),
            })?;
            let mut list = Vec::new();
            for t in entries {
                let pieces = [split_pieces(&t.en, api)?, split_pieces(&t.zh, api)?];
                let mut patterns = Vec::new();
                let mut slots: Vec<Vec<(String, bool)>> = Vec::new();
                for (li, lang) in Lang::ALL.into_iter().enumerate() {
                    let mut re = String::from("(?i)^");
                    let mut names = Vec::new();
                    for p in &pieces[li] {
                        match p {
                            Piece::Lit(s) => re.push_str(&regex::escape(s)),
                            Piece::Slot { name, ordinal } => {
                                let spec =
                                    schema.param(name).ok_or_else(|| TemplateError::Invalid {
                                        api: api.clone(),
                                        reason: format!("unknown parameter `{name}`"),
                                    })?;
                                re.push('(');
                                re.push_str(&book.slot_pattern(spec.ty, *ordinal, lang));
                                re.push(')');
                                names.push((name.clone(), *ordinal));
                            }
                        }
                    }
                    re.push('$');
                    patterns.push(Regex::new(&re).map_err(|e| TemplateError::Invalid {
                        api: api.clone(),
                        reason: e.to_string(),
                    })?);
                    slots.push(names);
                }
                let mut sorted: Vec<Vec<&str>> = slots
                    .iter()
                    .map(|s| s.iter().map(|(n, _)| n.as_str()).collect())
                    .collect();
                sorted.iter_mut().for_each(|s| s.sort_unstable());
                if sorted[0] != sorted[1] {
                    return Err(TemplateError::Invalid {
                        api: api.clone(),
                        reason: "English and Chinese variants use different placeholders".into(),
                    });
                }
                let fixed: Args = t.fixed.clone().into_iter().collect();
                let slots: [Vec<(String, bool)>; 2] = [slots[0].clone(), slots[1].clone()];
                let [p_en, p_zh]: [Regex; 2] = patterns.try_into().expect("two languages");
                list.push(Template {
                    pieces,
                    patterns: [p_en, p_zh],
                    slots,
                    fixed,
                });
            }
            book.apis.insert(api.clone(), list);
        }
        Ok(book)
    }

    fn label(&self, value: &str, lang: Lang) -> String {
        match lang {
            Lang::En => value.to_string(),
            Lang::Zh => self
                .zh_labels
                .get(value)
                .cloned()
                .unwrap_or_else(|| value.to_string()),
        }
    }

    fn slot_pattern(&self, ty: ParamType, ordinal: bool, lang: Lang) -> String {
        let quoted = match lang {
            Lang::En => "'[^']*'",
            Lang::Zh => "「[^」]*」",
        };
        match ty {
            ParamType::Index | ParamType::Count if ordinal => match lang {
                Lang::En => format!("{}|\\d+(?:st|nd|rd|th)", EN_ORDINALS.join("|")),
                Lang::Zh => "\\d+".into(),
            },
            ParamType::Index | ParamType::Count => "\\d+".into(),
            ParamType::PosFloat | ParamType::NonNegFloat | ParamType::Float => {
                "-?\\d+(?:\\.\\d+)?".into()
            }
            ParamType::Text | ParamType::NonEmptyText => quoted.into(),
            ParamType::TextList => match lang {
                Lang::En => format!("{quoted}(?:, {quoted})*"),
                Lang::Zh => format!("{quoted}(?:、{quoted})*"),
            },
            ParamType::Bool => "true|false".into(),
            ParamType::Color => "#[0-9A-Fa-f]{6}".into(),
            ParamType::Choice(options) => {
                let mut labels: Vec<String> = options
                    .iter()
                    .map(|o| regex::escape(&self.label(o, lang)))
                    .collect();
                // longer first so no label is shadowed by its own prefix
                labels.sort_by_key(|l| std::cmp::Reverse(l.len()));
                labels.join("|")
            }
        }
    }

    fn render_value(&self, ty: ParamType, ordinal: bool, v: &Value, lang: Lang) -> Option<String> {
        let quote = |s: &str| match lang {
            Lang::En => format!("'{s}'"),
            Lang::Zh => format!("「{s}」"),
        };
        Some(match ty {
            ParamType::Index | ParamType::Count => {
                let n = v.as_u64()?;
                match (ordinal, lang) {
                    (true, Lang::En) => en_ordinal(n + 1),
                    (true, Lang::Zh) => (n + 1).to_string(),
                    (false, _) => n.to_string(),
                }
            }
            ParamType::PosFloat | ParamType::NonNegFloat | ParamType::Float => {
                format_number(v.as_f64()?)
            }
            ParamType::Text | ParamType::NonEmptyText => {
                let s = v.as_str()?;
                let bad = match lang {
                    Lang::En => s.contains('\''),
                    Lang::Zh => s.contains('」'),
                };
                if bad {
                    return None;
                }
                quote(s)
            }
            ParamType::TextList => {
                let items: Option<Vec<String>> = v
                    .as_array()?
                    .iter()
                    .map(|x| self.render_value(ParamType::Text, false, x, lang))
                    .collect();
                let sep = match lang {
                    Lang::En => ", ",
                    Lang::Zh => "、",
                };
                items?.join(sep)
            }
            ParamType::Bool => v.as_bool()?.to_string(),
            ParamType::Color => format!("#{}", v.as_str()?),
            ParamType::Choice(_) => self.label(v.as_str()?, lang),
        })
    }

    fn parse_value(&self, ty: ParamType, ordinal: bool, s: &str, lang: Lang) -> Option<Value> {
        let unquote = |s: &str| -> String {
            let t = s.trim();
            let t = t
                .strip_prefix('\'')
                .or_else(|| t.strip_prefix('「'))
                .unwrap_or(t);
            let t = t
                .strip_suffix('\'')
                .or_else(|| t.strip_suffix('」'))
                .unwrap_or(t);
            t.to_string()
        };
        Some(match ty {
            ParamType::Index | ParamType::Count => {
                let n = if ordinal {
                    match lang {
                        Lang::En => parse_en_ordinal(s)?,
                        Lang::Zh => s.parse().ok()?,
                    }
                    .checked_sub(1)?
                } else {
                    s.parse().ok()?
                };
                Value::from(n)
            }
            ParamType::PosFloat | ParamType::NonNegFloat | ParamType::Float => {
                crate::registry::float_value(s.parse().ok()?)
            }
            ParamType::Text | ParamType::NonEmptyText => Value::from(unquote(s)),
            ParamType::TextList => {
                let re = match lang {
                    Lang::En => Regex::new("'([^']*)'"),
                    Lang::Zh => Regex::new("「([^」]*)」"),
                }
                .expect("static pattern");
                Value::from(
                    re.captures_iter(s)
                        .map(|c| c[1].to_string())
                        .collect::<Vec<_>>(),
                )
            }
            ParamType::Bool => Value::from(s.eq_ignore_ascii_case("true")),
            ParamType::Color => Value::from(s.trim_start_matches('#').to_ascii_uppercase()),
            ParamType::Choice(options) => {
                let hit = options
                    .iter()
                    .find(|o| self.label(o, lang).to_lowercase() == s.to_lowercase())?;
                Value::from(*hit)
            }
        })
    }

    /// Canonical arguments with every value equal to its schema default removed.
    pub fn minimal(&self, call: &ApiCall) -> Option<ApiCall> {
        let canon = self.registry.canonicalize(call).ok()?;
        let schema = self.registry.get(&canon.api_name)?;
        let mut out = canon.clone();
        out.args.retain(|k, v| {
            let default = schema
                .param(k)
                .and_then(|p| p.default.as_ref().and_then(|d| p.ty.normalize(d)));
            default.as_ref() != Some(v)
        });
        Some(out)
    }

    /// Arguments including defaults for every parameter that has one.
    pub fn effective_args(&self, call: &ApiCall) -> Option<Args> {
        let canon = self.registry.canonicalize(call).ok()?;
        let schema = self.registry.get(&canon.api_name)?;
        let mut args = canon.args;
        for p in &schema.params {
            if let Some(d) = &p.default {
                if !args.contains_key(p.name) {
                    args.insert(p.name.to_string(), p.ty.normalize(d)?);
                }
            }
        }
        Some(args)
    }

    fn applicable(&self, t: &Template, minimal: &ApiCall, effective: &Args) -> bool {
        let slot_names: Vec<&str> = t.placeholders().collect();
        let covered = minimal
            .args
            .keys()
            .all(|k| slot_names.contains(&k.as_str()) || t.fixed.contains_key(k));
        let fixed_ok = t.fixed.iter().all(|(k, v)| {
            let schema = self.registry.get(&minimal.api_name);
            let norm = schema
                .and_then(|s| s.param(k))
                .and_then(|p| p.ty.normalize(v));
            norm.is_some() && effective.get(k) == norm.as_ref()
        });
        let slots_ok = slot_names.iter().all(|n| effective.contains_key(*n));
        covered && fixed_ok && slots_ok
    }

    /// Number of templates able to express `call`.
    pub fn variants(&self, call: &ApiCall) -> usize {
        let (Some(min), Some(eff)) = (self.minimal(call), self.effective_args(call)) else {
            return 0;
        };
        self.apis
            .get(&call.api_name)
            .map(|ts| ts.iter().filter(|t| self.applicable(t, &min, &eff)).count())
            .unwrap_or(0)
    }

    /// Render with the `variant`-th applicable template (wrapping around).
    /// `None` when no template can express the call.
    pub fn render_call(&self, call: &ApiCall, lang: Lang, variant: usize) -> Option<String> {
        let min = self.minimal(call)?;
        let eff = self.effective_args(call)?;
        let schema = self.registry.get(&call.api_name)?;
        let usable: Vec<&Template> = self
            .apis
            .get(&call.api_name)?
            .iter()
            .filter(|t| self.applicable(t, &min, &eff))
            .collect();
        if usable.is_empty() {
            return None;
        }
        let t = usable[variant % usable.len()];
        let li = lang as usize;
        let mut out = String::new();
        for p in &t.pieces[li] {
            match p {
                Piece::Lit(s) => out.push_str(s),
                Piece::Slot { name, ordinal } => {
                    let ty = schema.param(name)?.ty;
                    out.push_str(&self.render_value(ty, *ordinal, eff.get(name)?, lang)?);
                }
            }
        }
        Some(out)
    }

    /// Parse one sub-instruction in either language. The result is in
    /// minimal form (defaults dropped), matching [`Phrasebook::minimal`].
    pub fn parse_sub(&self, text: &str) -> Option<ApiCall> {
        let text = text.trim();
        for schema in self.registry.all() {
            let Some(templates) = self.apis.get(schema.name) else {
                continue;
            };
            for t in templates {
                for lang in Lang::ALL {
                    let li = lang as usize;
                    let Some(caps) = t.patterns[li].captures(text) else {
                        continue;
                    };
                    let mut args = t.fixed.clone();
                    let mut ok = true;
                    for (gi, (name, ordinal)) in t.slots[li].iter().enumerate() {
                        let ty = schema.param(name).expect("checked at load").ty;
                        match self.parse_value(ty, *ordinal, &caps[gi + 1], lang) {
                            Some(v) => {
                                args.insert(name.clone(), v);
                            }
                            None => ok = false,
                        }
                    }
                    if !ok {
                        continue;
                    }
                    if let Some(call) = self.minimal(&ApiCall::new(schema.name, args)) {
                        return Some(call);
                    }
                }
            }
        }
        None
    }

    pub fn join(&self, subs: &[String], lang: Lang) -> String {
        let (between, end) = &self.joiners[lang as usize];
        let mut s = subs.join(between);
        if let Some(first) = s.chars().next() {
            let upper: String = first.to_uppercase().collect();
            s.replace_range(..first.len_utf8(), &upper);
        }
        s.push_str(end);
        s
    }

    /// Split an instruction into sub-instructions on the joiners, ignoring
    /// separators inside quotes.
    pub fn split(&self, instruction: &str) -> Vec<String> {
        let text = instruction.trim();
        let text = self
            .joiners
            .iter()
            .find_map(|(_, end)| text.strip_suffix(end.as_str()))
            .unwrap_or(text);
        let mut parts = Vec::new();
        let mut current = String::new();
        let mut in_en = false;
        let mut zh_depth = 0usize;
        let mut i = 0;
        let seps: Vec<&str> = self.joiners.iter().map(|(b, _)| b.as_str()).collect();
        while i < text.len() {
            let rest = &text[i..];
            if !in_en && zh_depth == 0 {
                if let Some(sep) = seps.iter().find(|s| rest.starts_with(**s)) {
                    parts.push(std::mem::take(&mut current));
                    i += sep.len();
                    continue;
                }
            }
            let ch = rest.chars().next().expect("in bounds");
            match ch {
                '\'' if zh_depth == 0 => in_en = !in_en,
                '「' if !in_en => zh_depth += 1,
                '」' if !in_en => zh_depth = zh_depth.saturating_sub(1),
                _ => {}
            }
            current.push(ch);
            i += ch.len_utf8();
        }
        parts.push(current);
        parts
            .into_iter()
            .map(|p| p.trim().to_string())
            .filter(|p| !p.is_empty())
            .map(|p| {
                let mut cs = p.chars();
                match cs.next() {
                    Some(c) => c.to_lowercase().chain(cs).collect(),
                    None => p,
                }
            })
            .collect()
    }

    /// Parse a whole instruction; `None` if any part is not understood.
    pub fn parse_instruction(&self, instruction: &str) -> Option<Vec<ApiCall>> {
        self.split(instruction)
            .iter()
            .map(|s| self.parse_sub(s))
            .collect()
    }

    pub fn templates_for(&self, api: &str) -> usize {
        self.apis.get(api).map_or(0, Vec::len)
    }

    /// Every template rendered with placeholder names, for inspection.
    pub fn raw_templates(&self, api: &str, lang: Lang) -> Vec<String> {
        self.apis
            .get(api)
            .map(|ts| {
                ts.iter()
                    .map(|t| {
                        t.pieces[lang as usize]
                            .iter()
                            .map(|p| match p {
                                Piece::Lit(s) => s.clone(),
                                Piece::Slot { name, .. } => format!("<{name}>"),
                            })
                            .collect()
                    })
                    .collect()
            })
            .unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn ordinals() {
        assert_eq!(en_ordinal(2), "second");
        assert_eq!(en_ordinal(11), "11th");
        assert_eq!(en_ordinal(22), "22nd");
        assert_eq!(parse_en_ordinal("23rd"), Some(23));
        assert_eq!(parse_en_ordinal("Third"), Some(3));
    }

    #[test]
    fn every_api_has_a_template() {
        let book = Phrasebook::standard();
        for s in Registry::shared().all() {
            assert!(book.templates_for(s.name) > 0, "{}", s.name);
        }
    }

    #[test]
    fn header_call_round_trips_in_both_languages() {
        let book = Phrasebook::standard();
        let call = ApiCall::from_json(
            "add_table_header",
            json!({"table_index": 0, "headers": ["Dept", "Staff", "Age"]}),
        );
        let en = book.render_call(&call, Lang::En, 0).unwrap();
        assert_eq!(en, "add headers 'Dept', 'Staff', 'Age' to the first table");
        let zh = book.render_call(&call, Lang::Zh, 0).unwrap();
        assert_eq!(zh, "为第1个表格添加表头「Dept」、「Staff」、「Age」");
        let want = book.minimal(&call).unwrap();
        assert!(book.parse_sub(&en).unwrap().same_action(&want));
        assert!(book.parse_sub(&zh).unwrap().same_action(&want));
    }

    #[test]
    fn split_respects_quotes() {
        let book = Phrasebook::standard();
        let parts = book.split("Add the watermark 'a, then b', then save the document.");
        assert_eq!(
            parts,
            vec!["add the watermark 'a, then b'", "save the document"]
        );
    }

    #[test]
    fn numbers_format_compactly() {
        assert_eq!(format_number(12.0), "12");
        assert_eq!(format_number(12.5), "12.5");
        assert_eq!(format_number(0.125), "0.125");
    }
}
