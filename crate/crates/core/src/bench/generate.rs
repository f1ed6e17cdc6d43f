//! Synthetic sessions. Every instruction is rendered from its annotated calls,
//! so ground truth is exact by construction.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::replay::fill_expected;
use super::session::{SessionRecord, Turn, SESSION_VERSION};
use crate::doc::{canonical_json, Document, DocumentState, StyleCategory};
use crate::hash::Fnv64;
use crate::phrasing::{Lang, Phrasebook};
use crate::registry::{ApiCall, Registry};

/// Shape of the generated benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenProfile {
    /// Weights for 4, 5, 6, 7 and 8 turns per session.
    pub turn_weights: Vec<f64>,
    /// Weights for 2..=9 calls per instruction.
    pub body_weights: Vec<f64>,
    /// Probability of a long instruction with 10..=22 calls.
    pub tail_prob: f64,
    pub session_api_min: usize,
    pub session_api_max: usize,
}

impl Default for GenProfile {
    fn default() -> Self {
        GenProfile {
            turn_weights: vec![0.06, 0.10, 0.16, 0.26, 0.42],
            body_weights: vec![0.22, 0.22, 0.18, 0.13, 0.09, 0.07, 0.05, 0.04],
            tail_prob: 0.07,
            session_api_min: 15,
            session_api_max: 75,
        }
    }
}

pub const MIN_TURNS: usize = 4;
pub const TAIL_MIN: usize = 10;
pub const TAIL_MAX: usize = 22;

const EN_WORDS: &[&str] = &[
    "budget",
    "report",
    "summary",
    "quarterly",
    "sales",
    "team",
    "project",
    "review",
    "plan",
    "market",
    "growth",
    "client",
    "update",
    "policy",
    "schedule",
    "meeting",
    "revenue",
    "forecast",
    "design",
    "launch",
    "risk",
    "goal",
    "metric",
    "training",
    "office",
    "supply",
    "contract",
    "region",
    "product",
    "feedback",
];
const ZH_WORDS: &[&str] = &[
    "预算", "报告", "摘要", "季度", "销售", "团队", "项目", "评审", "计划", "市场", "增长", "客户",
    "更新", "政策", "日程", "会议", "收入", "预测", "设计", "发布", "风险", "目标", "指标", "培训",
];
const FONTS: &[&str] = &["Arial", "Times New Roman", "Georgia", "Verdana", "Cambria"];
const COLORS: &[&str] = &["FF0000", "1F4E79", "00B050", "7030A0", "C00000", "333333"];
const TABLE_STYLES: &[&str] = &[
    "Table Grid",
    "Light Shading",
    "Medium Grid 1",
    "Plain Table 1",
];
const FONT_SIZES: &[f64] = &[9.0, 10.0, 12.0, 14.0, 16.0, 18.0, 24.0];
const SPACINGS: &[f64] = &[0.0, 6.0, 12.0, 18.0, 24.0];
const LINE_SPACINGS: &[f64] = &[1.0, 1.15, 1.5, 2.0];
const INDENTS: &[f64] = &[0.0, 18.0, 36.0, 72.0];
const ALIGNMENTS: &[&str] = &["left", "center", "right", "justify"];
const CHART_TYPES: &[&str] = &["bar", "line", "pie", "scatter"];

/// Relative frequency of each API in generated sequences.
const API_WEIGHTS: &[(&str, f64)] = &[
    ("add_paragraph", 6.0),
    ("insert_paragraph_at", 3.0),
    ("delete_paragraph", 1.0),
    ("edit_paragraph_text", 3.0),
    ("replace_text", 3.0),
    ("set_alignment", 3.0),
    ("set_bold", 3.0),
    ("set_italic", 3.0),
    ("set_font", 2.0),
    ("set_font_size", 2.0),
    ("set_font_color", 2.0),
    ("set_paragraph_style", 3.0),
    ("set_spacing", 2.0),
    ("set_indentation", 2.0),
    ("add_table", 3.0),
    ("delete_table", 0.5),
    ("add_table_header", 3.0),
    ("set_cell_text", 5.0),
    ("merge_cell_table", 2.0),
    ("split_cell_table", 1.0),
    ("set_table_style", 1.5),
    ("set_row_height", 1.5),
    ("set_col_width", 1.5),
    ("insert_image", 2.0),
    ("resize_image", 1.5),
    ("delete_image", 0.5),
    ("add_chart_stub", 1.5),
    ("update_chart_stub", 1.0),
    ("add_header", 1.0),
    ("add_footer", 1.0),
    ("add_page_number", 1.0),
    ("add_watermark", 1.0),
    ("add_toc", 0.7),
    ("add_hyperlink", 2.0),
    ("add_bookmark", 1.5),
    ("insert_page_break", 1.0),
    ("insert_line_break", 1.0),
    ("define_style", 1.0),
    ("save_document", 0.3),
    ("export_state", 0.2),
];

/// Calls that leave the state untouched by design.
fn is_lifecycle(api: &str) -> bool {
    matches!(api, "save_document" | "export_state")
}

struct Words(&'static [&'static str]);

impl Words {
    fn for_lang(lang: Lang) -> Self {
        match lang {
            Lang::En => Words(EN_WORDS),
            Lang::Zh => Words(ZH_WORDS),
        }
    }

    fn word(&self, rng: &mut impl Rng) -> String {
        self.0.choose(rng).expect("non-empty").to_string()
    }

    fn title(&self, rng: &mut impl Rng) -> String {
        capitalize(&self.word(rng))
    }

    fn sentence(&self, rng: &mut impl Rng) -> String {
        let n = rng.gen_range(2..=5);
        let words: Vec<String> = (0..n).map(|_| self.word(rng)).collect();
        let sep = if self.0 == ZH_WORDS { "" } else { " " };
        capitalize(&words.join(sep))
    }
}

fn capitalize(s: &str) -> String {
    let mut cs = s.chars();
    match cs.next() {
        Some(c) => c.to_uppercase().chain(cs).collect(),
        None => String::new(),
    }
}

fn pick<T: Clone>(rng: &mut impl Rng, xs: &[T]) -> T {
    xs.choose(rng).expect("non-empty").clone()
}

fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// A random character range inside a paragraph, or `None` for the whole text.
fn maybe_range(rng: &mut impl Rng, len: usize, args: &mut serde_json::Map<String, Value>) {
    if len >= 2 && rng.gen_bool(0.3) {
        let start = rng.gen_range(0..len - 1);
        let end = rng.gen_range(start + 1..=len);
        if start > 0 {
            args.insert("start".into(), json!(start));
        }
        if end < len {
            args.insert("end".into(), json!(end));
        }
    }
}

fn paragraph_styles(st: &DocumentState) -> Vec<String> {
    st.styles
        .iter()
        .filter(|s| s.style_category == StyleCategory::Paragraph && s.style_name != "TOC")
        .map(|s| s.style_name.clone())
        .collect()
}

/// Whether `api` has any chance of succeeding on `st`.
fn feasible(api: &str, st: &DocumentState) -> bool {
    let np = st.paragraphs.len();
    let has_text = st.paragraphs.iter().any(|p| !p.text.is_empty());
    let nt = st.tables.len();
    let merged = st
        .tables
        .iter()
        .any(|t| t.cells.iter().flatten().any(|c| c.merge.is_some()));
    match api {
        "delete_paragraph" => np > 1,
        "edit_paragraph_text"
        | "set_alignment"
        | "set_paragraph_style"
        | "set_spacing"
        | "set_indentation"
        | "add_bookmark"
        | "insert_page_break" => np > 0,
        "replace_text" | "set_bold" | "set_italic" | "set_font" | "set_font_size"
        | "set_font_color" | "insert_image" | "add_chart_stub" | "add_hyperlink"
        | "insert_line_break" => has_text,
        "delete_table" => nt > 1,
        "add_table_header" | "set_cell_text" | "merge_cell_table" | "set_table_style"
        | "set_row_height" | "set_col_width" => nt > 0,
        "add_table" => nt < 4,
        "split_cell_table" => merged,
        "resize_image" | "delete_image" => !st.images.is_empty(),
        "update_chart_stub" => st.images.iter().any(|i| i.chart.is_some()),
        "add_toc" => !st.page_layout.toc_present,
        _ => true,
    }
}

fn text_paragraphs(st: &DocumentState) -> Vec<usize> {
    st.paragraphs
        .iter()
        .filter(|p| !p.text.is_empty())
        .map(|p| p.index)
        .collect()
}

/// Propose one call for `api`; it may still fail or be a no-op.
fn propose(rng: &mut impl Rng, api: &str, st: &DocumentState, words: &Words) -> ApiCall {
    let np = st.paragraphs.len();
    let mut a = serde_json::Map::new();
    let any_para = |rng: &mut dyn rand::RngCore| rng.gen_range(0..np.max(1));
    match api {
        "add_paragraph" | "insert_paragraph_at" => {
            if api == "insert_paragraph_at" {
                a.insert("index".into(), json!(rng.gen_range(0..=np)));
            }
            a.insert("text".into(), json!(words.sentence(rng)));
            if rng.gen_bool(0.2) {
                a.insert("style".into(), json!(pick(rng, &paragraph_styles(st))));
            }
        }
        "delete_paragraph" => {
            a.insert("index".into(), json!(any_para(rng)));
        }
        "edit_paragraph_text" => {
            a.insert("index".into(), json!(any_para(rng)));
            a.insert("text".into(), json!(words.sentence(rng)));
        }
        "replace_text" => {
            let pi = pick(rng, &text_paragraphs(st));
            let text = &st.paragraphs[pi].text;
            let found: Vec<&str> = words
                .0
                .iter()
                .copied()
                .filter(|w| text.contains(w))
                .collect();
            let find = match found.choose(rng) {
                Some(w) => w.to_string(),
                None => text.chars().take(3).collect(),
            };
            a.insert("find".into(), json!(find));
            a.insert("replace".into(), json!(words.word(rng)));
            if rng.gen_bool(0.4) {
                a.insert("paragraph_index".into(), json!(pi));
            }
        }
        "set_alignment" => {
            a.insert("paragraph_index".into(), json!(any_para(rng)));
            a.insert("alignment".into(), json!(pick(rng, ALIGNMENTS)));
        }
        "set_bold" | "set_italic" | "set_font" | "set_font_size" | "set_font_color"
        | "add_hyperlink" => {
            let pi = pick(rng, &text_paragraphs(st));
            a.insert("paragraph_index".into(), json!(pi));
            match api {
                "set_bold" | "set_italic" => {
                    let flag = if api == "set_bold" { "bold" } else { "italic" };
                    let already = st.paragraphs[pi].runs.iter().all(|r| match flag {
                        "bold" => r.format.bold,
                        _ => r.format.italic,
                    });
                    if already {
                        a.insert("value".into(), json!(false));
                    }
                }
                "set_font" => {
                    a.insert("font_name".into(), json!(pick(rng, FONTS)));
                }
                "set_font_size" => {
                    a.insert("size_pt".into(), json!(pick(rng, FONT_SIZES)));
                }
                "set_font_color" => {
                    a.insert("color".into(), json!(pick(rng, COLORS)));
                }
                _ => {
                    a.insert(
                        "url".into(),
                        json!(format!("https://example.com/{}", pick(rng, EN_WORDS))),
                    );
                }
            }
            maybe_range(rng, char_len(&st.paragraphs[pi].text), &mut a);
        }
        "set_paragraph_style" => {
            a.insert("paragraph_index".into(), json!(any_para(rng)));
            a.insert("style".into(), json!(pick(rng, &paragraph_styles(st))));
        }
        "set_spacing" => {
            a.insert("paragraph_index".into(), json!(any_para(rng)));
            let mut any = false;
            for (key, pool) in [
                ("before_pt", SPACINGS),
                ("after_pt", SPACINGS),
                ("line", LINE_SPACINGS),
            ] {
                if rng.gen_bool(0.4) {
                    a.insert(key.into(), json!(pick(rng, pool)));
                    any = true;
                }
            }
            if !any {
                a.insert("after_pt".into(), json!(pick(rng, &SPACINGS[1..])));
            }
        }
        "set_indentation" => {
            a.insert("paragraph_index".into(), json!(any_para(rng)));
            let key = pick(rng, &["left_pt", "right_pt", "first_line_pt"]);
            a.insert(key.into(), json!(pick(rng, INDENTS)));
        }
        "add_table" => {
            a.insert("rows".into(), json!(rng.gen_range(2..=6)));
            a.insert("cols".into(), json!(rng.gen_range(2..=5)));
            if rng.gen_bool(0.2) {
                a.insert("style".into(), json!(pick(rng, TABLE_STYLES)));
            }
        }
        "delete_table" | "add_table_header" | "set_cell_text" | "merge_cell_table"
        | "split_cell_table" | "set_table_style" | "set_row_height" | "set_col_width" => {
            let candidates: Vec<usize> = match api {
                "split_cell_table" => st
                    .tables
                    .iter()
                    .filter(|t| t.cells.iter().flatten().any(|c| c.merge.is_some()))
                    .map(|t| t.index)
                    .collect(),
                _ => (0..st.tables.len()).collect(),
            };
            let ti = pick(rng, &candidates);
            let t = &st.tables[ti];
            a.insert("table_index".into(), json!(ti));
            let (rows, cols) = (t.row_count, t.col_count);
            match api {
                "add_table_header" => {
                    let n = rng.gen_range(1..=cols);
                    let headers: Vec<String> = (0..n).map(|_| words.title(rng)).collect();
                    a.insert("headers".into(), json!(headers));
                    if rng.gen_bool(0.15) {
                        a.insert("row".into(), json!(rng.gen_range(0..rows)));
                    }
                }
                "set_cell_text" => {
                    let free: Vec<(usize, usize)> = (0..rows)
                        .flat_map(|r| (0..cols).map(move |c| (r, c)))
                        .filter(|&(r, c)| {
                            t.cells[r][c]
                                .merge
                                .is_none_or(|m| (m.anchor_row, m.anchor_col) == (r, c))
                        })
                        .collect();
                    let (r, c) = pick(rng, &free);
                    a.insert("row".into(), json!(r));
                    a.insert("col".into(), json!(c));
                    let text = if rng.gen_bool(0.5) {
                        words.title(rng)
                    } else {
                        rng.gen_range(1..=99).to_string()
                    };
                    a.insert("text".into(), json!(text));
                }
                "merge_cell_table" => {
                    let rs = if rows > 1 && rng.gen_bool(0.3) { 2 } else { 1 };
                    let cs = if rs == 2 { rng.gen_range(1..=2) } else { 2 };
                    let cs = cs.min(cols);
                    a.insert("row".into(), json!(rng.gen_range(0..=rows - rs)));
                    a.insert("col".into(), json!(rng.gen_range(0..=cols - cs)));
                    a.insert("row_span".into(), json!(rs));
                    a.insert("col_span".into(), json!(cs));
                }
                "split_cell_table" => {
                    let anchors: Vec<(usize, usize)> = (0..rows)
                        .flat_map(|r| (0..cols).map(move |c| (r, c)))
                        .filter(|&(r, c)| {
                            t.cells[r][c]
                                .merge
                                .is_some_and(|m| (m.anchor_row, m.anchor_col) == (r, c))
                        })
                        .collect();
                    let (r, c) = pick(rng, &anchors);
                    a.insert("row".into(), json!(r));
                    a.insert("col".into(), json!(c));
                }
                "set_table_style" => {
                    a.insert("style".into(), json!(pick(rng, TABLE_STYLES)));
                }
                "set_row_height" => {
                    a.insert("row".into(), json!(rng.gen_range(0..rows)));
                    a.insert(
                        "height_pt".into(),
                        json!(pick(rng, &[18.0, 24.0, 30.0, 36.0])),
                    );
                }
                "set_col_width" => {
                    a.insert("col".into(), json!(rng.gen_range(0..cols)));
                    a.insert("width_pt".into(), json!(rng.gen_range(6..=30) as f64 * 5.0));
                }
                _ => {}
            }
        }
        "insert_image" | "add_chart_stub" => {
            let pi = pick(rng, &text_paragraphs(st));
            a.insert("paragraph_index".into(), json!(pi));
            let w = rng.gen_range(10..=60) as f64 * 5.0;
            let h = rng.gen_range(10..=40) as f64 * 5.0;
            if api == "insert_image" {
                a.insert("width_pt".into(), json!(w));
                a.insert("height_pt".into(), json!(h));
                if rng.gen_bool(0.2) {
                    a.insert("offset".into(), json!(0));
                }
            } else {
                if rng.gen_bool(0.5) {
                    a.insert("chart_type".into(), json!(pick(rng, CHART_TYPES)));
                }
                if rng.gen_bool(0.3) {
                    a.insert("series_count".into(), json!(rng.gen_range(2..=4)));
                }
                if rng.gen_bool(0.2) {
                    a.insert("width_pt".into(), json!(w));
                    a.insert("height_pt".into(), json!(h));
                }
            }
        }
        "resize_image" | "delete_image" => {
            a.insert(
                "image_index".into(),
                json!(rng.gen_range(0..st.images.len())),
            );
            if api == "resize_image" {
                a.insert(
                    "width_pt".into(),
                    json!(rng.gen_range(10..=60) as f64 * 5.0),
                );
                a.insert(
                    "height_pt".into(),
                    json!(rng.gen_range(10..=40) as f64 * 5.0),
                );
            }
        }
        "update_chart_stub" => {
            let charts: Vec<usize> = st
                .images
                .iter()
                .filter(|i| i.chart.is_some())
                .map(|i| i.image_sequence_index)
                .collect();
            a.insert("image_index".into(), json!(pick(rng, &charts)));
            if rng.gen_bool(0.6) {
                a.insert("chart_type".into(), json!(pick(rng, CHART_TYPES)));
            } else {
                a.insert("series_count".into(), json!(rng.gen_range(1..=5)));
            }
        }
        "add_header" | "add_footer" | "add_watermark" => {
            a.insert("text".into(), json!(words.sentence(rng)));
        }
        "add_page_number" => {
            if rng.gen_bool(0.3) {
                a.insert("format".into(), json!(pick(rng, &["roman", "letter"])));
            }
            if rng.gen_bool(0.2) {
                a.insert("start".into(), json!(rng.gen_range(2..=5)));
            }
        }
        "add_toc" => {
            if rng.gen_bool(0.3) {
                a.insert("title".into(), json!(words.title(rng)));
            }
        }
        "add_bookmark" => {
            a.insert("name".into(), json!(format!("bm_{}", pick(rng, EN_WORDS))));
            a.insert("paragraph_index".into(), json!(any_para(rng)));
        }
        "insert_page_break" => {
            a.insert("paragraph_index".into(), json!(any_para(rng)));
        }
        "insert_line_break" => {
            let pi = pick(rng, &text_paragraphs(st));
            a.insert("paragraph_index".into(), json!(pi));
            if rng.gen_bool(0.3) {
                a.insert("offset".into(), json!(0));
            }
        }
        "define_style" => {
            a.insert(
                "name".into(),
                json!(format!("Custom {}", capitalize(pick(rng, EN_WORDS)))),
            );
            if rng.gen_bool(0.2) {
                a.insert("category".into(), json!("character"));
            }
            a.insert("font_name".into(), json!(pick(rng, FONTS)));
            if rng.gen_bool(0.5) {
                a.insert("font_size_pt".into(), json!(pick(rng, FONT_SIZES)));
            }
            if rng.gen_bool(0.3) {
                a.insert("bold".into(), json!(true));
            }
        }
        "save_document" if rng.gen_bool(0.5) => {
            a.insert(
                "path".into(),
                json!(format!("{}.docx", pick(rng, EN_WORDS))),
            );
        }
        _ => {}
    }
    ApiCall::from_json(api, Value::Object(a))
}

/// A random call that executes successfully on `doc` and changes its state
/// (lifecycle calls excepted). The document is advanced; the call is returned
/// in minimal form.
pub fn random_call(rng: &mut impl Rng, doc: &mut Document, lang: Lang) -> ApiCall {
    random_call_where(rng, doc, lang, |_| true)
}

fn random_call_where(
    rng: &mut impl Rng,
    doc: &mut Document,
    lang: Lang,
    accept: impl Fn(&ApiCall) -> bool,
) -> ApiCall {
    let reg = Registry::shared();
    let book = Phrasebook::standard();
    let words = Words::for_lang(lang);
    let st = doc.extract_state().expect("generated documents extract");
    let before = canonical_json(&st);
    let options: Vec<(&str, f64)> = API_WEIGHTS
        .iter()
        .copied()
        .filter(|(api, _)| feasible(api, &st))
        .collect();
    let dist = WeightedIndex::new(options.iter().map(|o| o.1)).expect("some API is feasible");
    loop {
        let api = options[dist.sample(rng)].0;
        let call = book
            .minimal(&propose(rng, api, &st, &words))
            .expect("proposals validate");
        if !accept(&call) {
            continue;
        }
        let mut work = doc.clone();
        if reg.execute(&call, &mut work).is_err() {
            continue;
        }
        let after = work.extract_state().expect("generated documents extract");
        if !is_lifecycle(api) && canonical_json(&after) == before {
            continue;
        }
        *doc = work;
        return call;
    }
}

/// Sub-instruction text for `call`, verified to parse back to the same call.
fn phrase(rng: &mut impl Rng, call: &ApiCall, lang: Lang) -> Option<String> {
    let book = Phrasebook::standard();
    let n = book.variants(call);
    if n == 0 {
        return None;
    }
    let text = book.render_call(call, lang, rng.gen_range(0..n))?;
    match book.parse_sub(&text) {
        Some(back) if back.same_action(call) => Some(text),
        _ => None,
    }
}

/// A random starting document with a few paragraphs and usually a table.
pub fn random_document(rng: &mut impl Rng, lang: Lang) -> Document {
    let reg = Registry::shared();
    let words = Words::for_lang(lang);
    let mut doc = Document::new();
    for _ in 0..rng.gen_range(2..=5) {
        let call = ApiCall::from_json("add_paragraph", json!({"text": words.sentence(rng)}));
        reg.execute(&call, &mut doc)
            .expect("plain paragraphs always insert");
    }
    if rng.gen_bool(0.6) {
        let call = ApiCall::from_json(
            "add_table",
            json!({"rows": rng.gen_range(2..=5), "cols": rng.gen_range(2..=4)}),
        );
        reg.execute(&call, &mut doc)
            .expect("small tables always insert");
    }
    for _ in 0..rng.gen_range(0..=3) {
        random_call_where(rng, &mut doc, lang, |c| !is_lifecycle(&c.api_name));
    }
    doc
}

fn draw_calls(rng: &mut impl Rng, profile: &GenProfile) -> usize {
    if rng.gen_bool(profile.tail_prob) {
        rng.gen_range(TAIL_MIN..=TAIL_MAX)
    } else {
        let d = WeightedIndex::new(&profile.body_weights).expect("valid weights");
        2 + d.sample(rng)
    }
}

/// Turn and call counts for one session, resampled until the total is in range.
fn draw_shape(rng: &mut impl Rng, profile: &GenProfile) -> Vec<usize> {
    let turns = WeightedIndex::new(&profile.turn_weights).expect("valid weights");
    loop {
        let n = MIN_TURNS + turns.sample(rng);
        let shape: Vec<usize> = (0..n).map(|_| draw_calls(rng, profile)).collect();
        let total: usize = shape.iter().sum();
        if (profile.session_api_min..=profile.session_api_max).contains(&total) {
            return shape;
        }
    }
}

fn generate_turn(
    rng: &mut impl Rng,
    doc: &Document,
    lang: Lang,
    n_calls: usize,
    turn_id: u32,
) -> (Document, Turn) {
    let book = Phrasebook::standard();
    let start = canonical_json(&doc.extract_state().expect("extracts"));
    loop {
        let mut work = doc.clone();
        let mut calls = Vec::with_capacity(n_calls);
        let mut subs = Vec::with_capacity(n_calls);
        while calls.len() < n_calls {
            let mut probe = work.clone();
            let call = random_call(rng, &mut probe, lang);
            if let Some(text) = phrase(rng, &call, lang) {
                work = probe;
                subs.push(text);
                calls.push(call);
            }
        }
        let end = canonical_json(&work.extract_state().expect("extracts"));
        let instruction = book.join(&subs, lang);
        let parsed_ok = book.parse_instruction(&instruction).is_some_and(|p| {
            p.len() == calls.len() && p.iter().zip(&calls).all(|(a, b)| a.same_action(b))
        });
        if end != start && parsed_ok {
            let turn = Turn {
                turn_id,
                instruction,
                sub_instructions: subs,
                annotated_apis: calls,
                expected_state: None,
            };
            return (work, turn);
        }
    }
}

/// Deterministic per-session seed.
pub fn session_seed(seed: u64, index: usize) -> u64 {
    Fnv64::new().u64(seed).u64(index as u64).finish()
}

pub fn session_id(seed: u64, index: usize) -> String {
    format!("s{seed}-{index:04}")
}

/// One session; identical `(seed, index)` always yields the identical record.
pub fn generate_session(seed: u64, index: usize, profile: &GenProfile) -> SessionRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(session_seed(seed, index));
    let lang = if rng.gen_bool(0.5) {
        Lang::En
    } else {
        Lang::Zh
    };
    let shape = draw_shape(&mut rng, profile);
    let mut doc = random_document(&mut rng, lang);
    let initial_state = doc.extract_state().expect("extracts");
    let mut turns = Vec::with_capacity(shape.len());
    for (i, &k) in shape.iter().enumerate() {
        let (next, turn) = generate_turn(&mut rng, &doc, lang, k, i as u32 + 1);
        doc = next;
        turns.push(turn);
    }
    let mut session = SessionRecord {
        session_version: SESSION_VERSION,
        session_id: session_id(seed, index),
        language: lang,
        initial_state,
        turns,
    };
    fill_expected(&mut session).expect("generated calls replay");
    session
}

pub fn generate_sessions(n: usize, seed: u64, profile: &GenProfile) -> Vec<SessionRecord> {
    use rayon::prelude::*;
    (0..n)
        .into_par_iter()
        .map(|i| generate_session(seed, i, profile))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_session() {
        let p = GenProfile::default();
        let a = generate_session(3, 0, &p);
        let b = generate_session(3, 0, &p);
        assert_eq!(a.to_json(), b.to_json());
        assert!((4..=8).contains(&a.turns.len()));
    }

    #[test]
    fn random_calls_change_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut doc = random_document(&mut rng, Lang::En);
        for _ in 0..200 {
            let before = canonical_json(&doc.extract_state().unwrap());
            let call = random_call(&mut rng, &mut doc, Lang::En);
            let after = canonical_json(&doc.extract_state().unwrap());
            assert!(is_lifecycle(&call.api_name) || before != after, "{call}");
        }
    }
}
