//! The extracted document snapshot.
//!
//! A [`DocumentState`] is an immutable value describing everything the
//! planner, the change analyzer and the judge are allowed to see: document
//! info, paragraphs, tables, images, page layout, interactive elements and
//! style definitions. Live documents ([`crate::doc::Document`]) are only ever
//! observed through this type.

use serde::{Deserialize, Serialize};

use super::StateParseError;

pub const STATE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentState {
    pub state_version: u32,
    pub doc_info: DocInfo,
    pub paragraphs: Vec<ParagraphElement>,
    pub tables: Vec<TableElement>,
    pub images: Vec<ImageElement>,
    pub page_layout: PageLayout,
    pub interactive: InteractiveElements,
    pub styles: Vec<StyleDef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocInfo {
    pub total_paragraphs_count: usize,
    pub total_tables_count: usize,
    pub total_sections_count: usize,
    pub has_header_flag: bool,
    pub has_footer_flag: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alignment {
    Left,
    Center,
    Right,
    Justify,
}

impl Alignment {
    pub const ALL: [Alignment; 4] = [
        Alignment::Left,
        Alignment::Center,
        Alignment::Right,
        Alignment::Justify,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Alignment::Left => "left",
            Alignment::Center => "center",
            Alignment::Right => "right",
            Alignment::Justify => "justify",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParagraphElement {
    pub index: usize,
    pub text: String,
    pub style_name: String,
    pub alignment: Alignment,
    pub runs: Vec<TextRun>,
    pub spacing: Spacing,
    pub indentation: Indentation,
    pub embedded_image_refs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spacing {
    pub before_pt: f64,
    pub after_pt: f64,
    pub line: f64,
}

impl Default for Spacing {
    fn default() -> Self {
        Spacing {
            before_pt: 0.0,
            after_pt: 8.0,
            line: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Indentation {
    pub left_pt: f64,
    pub right_pt: f64,
    pub first_line_pt: f64,
}

/// Formatting shared by every character of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFormat {
    pub bold: bool,
    pub italic: bool,
    pub underline: bool,
    pub font_name: String,
    pub font_size_pt: f64,
    pub color_rgb: String,
}

impl Default for RunFormat {
    fn default() -> Self {
        RunFormat {
            bold: false,
            italic: false,
            underline: false,
            font_name: "Calibri".into(),
            font_size_pt: 11.0,
            color_rgb: "000000".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextRun {
    pub text: String,
    #[serde(flatten)]
    pub format: RunFormat,
}

impl TextRun {
    pub fn plain(text: impl Into<String>) -> Self {
        TextRun {
            text: text.into(),
            format: RunFormat::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableElement {
    pub index: usize,
    pub row_count: usize,
    pub col_count: usize,
    pub cells: Vec<Vec<Cell>>,
    pub table_style: String,
    pub row_heights_pt: Vec<f64>,
    pub col_widths_pt: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MergeInfo {
    pub anchor_row: usize,
    pub anchor_col: usize,
    pub row_span: usize,
    pub col_span: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Cell {
    pub text: String,
    pub runs: Vec<TextRun>,
    pub merge: Option<MergeInfo>,
    pub is_header: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartStub {
    pub chart_type: String,
    pub series_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageElement {
    pub host_paragraph_index: usize,
    pub host_text_run_index: usize,
    pub image_sequence_index: usize,
    pub width_pt: f64,
    pub height_pt: f64,
    /// Charts are inline shapes too; they carry a stub payload.
    pub chart: Option<ChartStub>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageNumbers {
    pub format: String,
    pub start: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PageLayout {
    pub headers: Vec<String>,
    pub footers: Vec<String>,
    pub page_numbers: Option<PageNumbers>,
    pub watermark: Option<String>,
    pub toc_present: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hyperlink {
    pub paragraph_index: usize,
    pub run_index: usize,
    pub url: String,
    pub display_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bookmark {
    pub name: String,
    pub paragraph_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineBreak {
    pub paragraph_index: usize,
    pub run_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct InteractiveElements {
    pub hyperlinks: Vec<Hyperlink>,
    pub bookmarks: Vec<Bookmark>,
    pub line_breaks: Vec<LineBreak>,
    pub page_breaks: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StyleCategory {
    Paragraph,
    Character,
    Table,
}

impl StyleCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            StyleCategory::Paragraph => "paragraph",
            StyleCategory::Character => "character",
            StyleCategory::Table => "table",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "paragraph" => Some(StyleCategory::Paragraph),
            "character" => Some(StyleCategory::Character),
            "table" => Some(StyleCategory::Table),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleDef {
    pub style_name: String,
    pub style_category: StyleCategory,
    pub font_name: String,
    pub font_size_pt: f64,
    pub bold_flag: bool,
    pub italic_flag: bool,
}

impl StyleDef {
    pub(crate) fn paragraph(name: &str, font: &str, size: f64, bold: bool) -> Self {
        StyleDef {
            style_name: name.into(),
            style_category: StyleCategory::Paragraph,
            font_name: font.into(),
            font_size_pt: size,
            bold_flag: bold,
            italic_flag: false,
        }
    }
}

/// The fixed style universe every new document starts with.
pub fn default_styles() -> Vec<StyleDef> {
    vec![
        StyleDef::paragraph("Normal", "Calibri", 11.0, false),
        StyleDef::paragraph("Heading 1", "Calibri Light", 16.0, true),
        StyleDef::paragraph("Heading 2", "Calibri Light", 13.0, true),
        StyleDef::paragraph("Heading 3", "Calibri Light", 12.0, true),
        StyleDef::paragraph("TOC", "Calibri", 11.0, false),
    ]
}

/// Round to the canonical precision of three decimals, folding `-0.0`.
pub fn round3(x: f64) -> f64 {
    let r = (x * 1000.0).round() / 1000.0;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn err(msg: impl Into<String>) -> StateParseError {
    StateParseError::Invariant(msg.into())
}

impl DocumentState {
    /// Check every structural invariant of a snapshot.
    pub fn validate(&self) -> Result<(), StateParseError> {
        if self.state_version != STATE_VERSION {
            return Err(StateParseError::Version(self.state_version));
        }
        let info = &self.doc_info;
        if info.total_paragraphs_count != self.paragraphs.len() {
            return Err(err("total_paragraphs_count does not match paragraphs"));
        }
        if info.total_tables_count != self.tables.len() {
            return Err(err("total_tables_count does not match tables"));
        }
        if info.total_sections_count == 0 {
            return Err(err("total_sections_count must be positive"));
        }
        if info.has_header_flag != !self.page_layout.headers.is_empty() {
            return Err(err("has_header_flag disagrees with headers"));
        }
        if info.has_footer_flag != !self.page_layout.footers.is_empty() {
            return Err(err("has_footer_flag disagrees with footers"));
        }

        for (i, p) in self.paragraphs.iter().enumerate() {
            if p.index != i {
                return Err(err(format!("paragraph {i} carries index {}", p.index)));
            }
            let joined: String = p.runs.iter().map(|r| r.text.as_str()).collect();
            if joined != p.text {
                return Err(err(format!("paragraph {i} text differs from its runs")));
            }
            if p.runs.iter().any(|r| r.text.is_empty()) {
                return Err(err(format!("paragraph {i} has an empty run")));
            }
            if p.runs.windows(2).any(|w| w[0].format == w[1].format) {
                return Err(err(format!("paragraph {i} has unmerged runs")));
            }
            validate_runs(&p.runs, &format!("paragraph {i}"))?;
            if p.spacing.before_pt < 0.0 || p.spacing.after_pt < 0.0 || p.spacing.line <= 0.0 {
                return Err(err(format!("paragraph {i} has invalid spacing")));
            }
            for &img in &p.embedded_image_refs {
                match self.images.get(img) {
                    Some(im) if im.host_paragraph_index == i => {}
                    _ => return Err(err(format!("paragraph {i} references image {img}"))),
                }
            }
        }

        for (i, t) in self.tables.iter().enumerate() {
            validate_table(i, t)?;
        }

        let mut seen = std::collections::HashSet::new();
        for (k, im) in self.images.iter().enumerate() {
            let host = self
                .paragraphs
                .get(im.host_paragraph_index)
                .ok_or_else(|| err(format!("image {k} host paragraph missing")))?;
            if im.host_text_run_index >= host.runs.len() {
                return Err(err(format!("image {k} host run missing")));
            }
            if !(im.width_pt > 0.0 && im.height_pt > 0.0) {
                return Err(err(format!("image {k} has non-positive size")));
            }
            if !seen.insert((
                im.host_paragraph_index,
                im.host_text_run_index,
                im.image_sequence_index,
            )) {
                return Err(err(format!("image {k} position is not unique")));
            }
            if !host.embedded_image_refs.contains(&k) {
                return Err(err(format!("image {k} missing from its host paragraph")));
            }
        }

        if self.page_layout.toc_present && !self.paragraphs.iter().any(|p| p.style_name == "TOC") {
            return Err(err("toc_present without a TOC paragraph"));
        }

        let ia = &self.interactive;
        for h in &ia.hyperlinks {
            self.check_run_ref(h.paragraph_index, h.run_index, "hyperlink")?;
        }
        for b in &ia.line_breaks {
            self.check_run_ref(b.paragraph_index, b.run_index, "line break")?;
        }
        let mut names = std::collections::HashSet::new();
        for b in &ia.bookmarks {
            if !names.insert(b.name.as_str()) {
                return Err(err(format!("duplicate bookmark {}", b.name)));
            }
            if b.paragraph_index >= self.paragraphs.len() {
                return Err(err(format!("bookmark {} points nowhere", b.name)));
            }
        }
        if ia.page_breaks.iter().any(|&p| p >= self.paragraphs.len()) {
            return Err(err("page break points nowhere"));
        }

        let mut style_names = std::collections::HashSet::new();
        for s in &self.styles {
            if !style_names.insert(s.style_name.as_str()) {
                return Err(err(format!("duplicate style {}", s.style_name)));
            }
            if s.font_size_pt <= 0.0 {
                return Err(err(format!("style {} has non-positive size", s.style_name)));
            }
        }
        Ok(())
    }

    fn check_run_ref(&self, para: usize, run: usize, what: &str) -> Result<(), StateParseError> {
        match self.paragraphs.get(para) {
            Some(p) if run < p.runs.len() => Ok(()),
            _ => Err(err(format!("{what} at ({para}, {run}) does not resolve"))),
        }
    }

    pub fn style(&self, name: &str) -> Option<&StyleDef> {
        self.styles.iter().find(|s| s.style_name == name)
    }
}

fn validate_runs(runs: &[TextRun], owner: &str) -> Result<(), StateParseError> {
    for r in runs {
        if r.format.font_size_pt <= 0.0 {
            return Err(err(format!("{owner} has a run with non-positive size")));
        }
        if r.format.color_rgb.len() != 6
            || !r.format.color_rgb.chars().all(|c| c.is_ascii_hexdigit())
        {
            return Err(err(format!("{owner} has a malformed color")));
        }
    }
    Ok(())
}

fn validate_table(i: usize, t: &TableElement) -> Result<(), StateParseError> {
    if t.index != i {
        return Err(err(format!("table {i} carries index {}", t.index)));
    }
    if t.row_count == 0 || t.col_count == 0 {
        return Err(err(format!("table {i} is empty")));
    }
    if t.cells.len() != t.row_count || t.cells.iter().any(|r| r.len() != t.col_count) {
        return Err(err(format!("table {i} cell matrix has wrong shape")));
    }
    if t.row_heights_pt.len() != t.row_count || t.col_widths_pt.len() != t.col_count {
        return Err(err(format!("table {i} dimension lists have wrong length")));
    }
    for (r, row) in t.cells.iter().enumerate() {
        for (c, cell) in row.iter().enumerate() {
            let joined: String = cell.runs.iter().map(|x| x.text.as_str()).collect();
            if joined != cell.text {
                return Err(err(format!(
                    "table {i} cell ({r},{c}) text differs from runs"
                )));
            }
            validate_runs(&cell.runs, &format!("table {i} cell ({r},{c})"))?;
            if let Some(m) = cell.merge {
                let inside = r >= m.anchor_row
                    && r < m.anchor_row + m.row_span
                    && c >= m.anchor_col
                    && c < m.anchor_col + m.col_span;
                if !inside || m.row_span == 0 || m.col_span == 0 {
                    return Err(err(format!("table {i} cell ({r},{c}) bad merge")));
                }
                if m.anchor_row + m.row_span > t.row_count
                    || m.anchor_col + m.col_span > t.col_count
                {
                    return Err(err(format!("table {i} merge overflows")));
                }
                let anchor = &t.cells[m.anchor_row][m.anchor_col];
                if anchor.merge != Some(m) {
                    return Err(err(format!("table {i} merge regions overlap")));
                }
                if (r, c) != (m.anchor_row, m.anchor_col) && !cell.text.is_empty() {
                    return Err(err(format!("table {i} merged cell ({r},{c}) has text")));
                }
            }
        }
    }
    Ok(())
}
