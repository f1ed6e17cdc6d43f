//! The live, mutable document.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use super::state::*;
use super::{DocError, StateParseError};

static NEXT_LINEAGE: AtomicU64 = AtomicU64::new(1);

fn fresh_lineage() -> u64 {
    NEXT_LINEAGE.fetch_add(1, Ordering::Relaxed)
}

/// An inline shape (picture or chart stub) anchored at a character offset.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Shape {
    pub offset: usize,
    pub width_pt: f64,
    pub height_pt: f64,
    pub chart: Option<ChartStub>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Link {
    pub offset: usize,
    pub url: String,
    pub display_text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Paragraph {
    pub style_name: String,
    pub alignment: Alignment,
    /// Kept normalized: no empty runs, no two adjacent runs with equal format.
    pub runs: Vec<TextRun>,
    pub spacing: Spacing,
    pub indentation: Indentation,
    pub shapes: Vec<Shape>,
    pub links: Vec<Link>,
    pub line_breaks: Vec<usize>,
    pub bookmarks: Vec<String>,
    pub page_break: bool,
}

impl Paragraph {
    pub fn new(text: &str, style_name: &str) -> Self {
        let mut p = Paragraph {
            style_name: style_name.to_string(),
            alignment: Alignment::Left,
            runs: vec![TextRun::plain(text)],
            spacing: Spacing::default(),
            indentation: Indentation::default(),
            shapes: Vec::new(),
            links: Vec::new(),
            line_breaks: Vec::new(),
            bookmarks: Vec::new(),
            page_break: false,
        };
        p.normalize();
        p
    }

    pub fn text(&self) -> String {
        self.runs.iter().map(|r| r.text.as_str()).collect()
    }

    pub fn char_len(&self) -> usize {
        self.runs.iter().map(|r| r.text.chars().count()).sum()
    }

    /// Drop empty runs, merge equal neighbours, clamp anchors into the text.
    pub fn normalize(&mut self) {
        normalize_runs(&mut self.runs);
        let len = self.char_len();
        if len == 0 {
            self.shapes.clear();
            self.links.clear();
            self.line_breaks.clear();
            return;
        }
        // Anchors only survive extraction at run granularity, so keep them
        // snapped to the start of their run.
        let starts: Vec<usize> = (0..self.runs.len()).map(|i| self.run_start(i)).collect();
        let snap = |o: usize| starts[self.run_at(o.min(len))];
        let shapes: Vec<usize> = self.shapes.iter().map(|s| snap(s.offset)).collect();
        let links: Vec<usize> = self.links.iter().map(|l| snap(l.offset)).collect();
        let breaks: Vec<usize> = self.line_breaks.iter().map(|&b| snap(b)).collect();
        for (s, o) in self.shapes.iter_mut().zip(shapes) {
            s.offset = o;
        }
        for (l, o) in self.links.iter_mut().zip(links) {
            l.offset = o;
        }
        self.line_breaks = breaks;
        self.shapes.sort_by_key(|s| s.offset);
        self.links.sort_by_key(|l| l.offset);
        self.line_breaks.sort_unstable();
    }

    /// Index of the run that holds character `offset` (end of text maps to the last run).
    pub fn run_at(&self, offset: usize) -> usize {
        let mut pos = 0;
        for (i, r) in self.runs.iter().enumerate() {
            let n = r.text.chars().count();
            if offset < pos + n {
                return i;
            }
            pos += n;
        }
        self.runs.len().saturating_sub(1)
    }

    pub fn run_start(&self, run: usize) -> usize {
        self.runs[..run]
            .iter()
            .map(|r| r.text.chars().count())
            .sum()
    }

    /// Apply `f` to the format of every character in `[start, end)`.
    pub fn format_range(&mut self, start: usize, end: usize, f: impl Fn(&mut RunFormat)) {
        split_at(&mut self.runs, start);
        split_at(&mut self.runs, end);
        let mut pos = 0;
        for r in &mut self.runs {
            let n = r.text.chars().count();
            if pos >= start && pos + n <= end {
                f(&mut r.format);
            }
            pos += n;
        }
        self.normalize();
    }

    pub fn set_text(&mut self, text: &str) {
        let format = self
            .runs
            .first()
            .map(|r| r.format.clone())
            .unwrap_or_default();
        self.runs = vec![TextRun {
            text: text.to_string(),
            format,
        }];
        self.normalize();
    }
}

pub(crate) fn normalize_runs(runs: &mut Vec<TextRun>) {
    runs.retain(|r| !r.text.is_empty());
    let mut merged: Vec<TextRun> = Vec::with_capacity(runs.len());
    for r in runs.drain(..) {
        match merged.last_mut() {
            Some(last) if last.format == r.format => last.text.push_str(&r.text),
            _ => merged.push(r),
        }
    }
    *runs = merged;
}

fn split_at(runs: &mut Vec<TextRun>, offset: usize) {
    let mut pos = 0;
    for i in 0..runs.len() {
        let n = runs[i].text.chars().count();
        if offset > pos && offset < pos + n {
            let cut = runs[i]
                .text
                .char_indices()
                .nth(offset - pos)
                .map(|(b, _)| b)
                .unwrap_or(runs[i].text.len());
            let tail = runs[i].text.split_off(cut);
            let fmt = runs[i].format.clone();
            runs.insert(
                i + 1,
                TextRun {
                    text: tail,
                    format: fmt,
                },
            );
            return;
        }
        pos += n;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Table {
    pub cells: Vec<Vec<Cell>>,
    pub table_style: String,
    pub row_heights_pt: Vec<f64>,
    pub col_widths_pt: Vec<f64>,
}

impl Table {
    pub fn new(rows: usize, cols: usize, style: &str) -> Self {
        Table {
            cells: vec![vec![Cell::default(); cols]; rows],
            table_style: style.to_string(),
            row_heights_pt: vec![20.0; rows],
            col_widths_pt: vec![(468.0 / cols as f64 * 10.0).round() / 10.0; cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.cells.len()
    }

    pub fn cols(&self) -> usize {
        self.cells.first().map_or(0, |r| r.len())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Body {
    pub paragraphs: Vec<Paragraph>,
    pub tables: Vec<Table>,
    pub page_layout: PageLayout,
    pub styles: Vec<StyleDef>,
    pub sections: usize,
    pub saved_to: Option<String>,
}

/// A mutable in-memory document. Observe it with [`Document::extract_state`].
#[derive(Debug, Clone)]
pub struct Document {
    lineage: u64,
    pub(crate) body: Body,
}

/// Opaque token for a saved document body; see [`Document::snapshot`].
#[derive(Debug, Clone)]
pub struct SnapshotHandle {
    lineage: u64,
    body: Arc<Body>,
}

impl Default for Document {
    fn default() -> Self {
        Self::new()
    }
}

impl Document {
    /// An empty document: no paragraphs or tables, one section, the five default styles.
    pub fn new() -> Self {
        Document {
            lineage: fresh_lineage(),
            body: Body {
                paragraphs: Vec::new(),
                tables: Vec::new(),
                page_layout: PageLayout::default(),
                styles: default_styles(),
                sections: 1,
                saved_to: None,
            },
        }
    }

    /// Rebuild a live document from a snapshot. Anchors are placed at the start
    /// of the run they reference, so `from_state(s).extract_state() == s` for
    /// every extracted state.
    pub fn from_state(state: &DocumentState) -> Result<Self, StateParseError> {
        state.validate()?;
        let mut paragraphs: Vec<Paragraph> = state
            .paragraphs
            .iter()
            .map(|p| Paragraph {
                style_name: p.style_name.clone(),
                alignment: p.alignment,
                runs: p.runs.clone(),
                spacing: p.spacing.clone(),
                indentation: p.indentation.clone(),
                shapes: Vec::new(),
                links: Vec::new(),
                line_breaks: Vec::new(),
                bookmarks: Vec::new(),
                page_break: false,
            })
            .collect();
        for im in &state.images {
            let p = &mut paragraphs[im.host_paragraph_index];
            let offset = p.run_start(im.host_text_run_index);
            p.shapes.push(Shape {
                offset,
                width_pt: im.width_pt,
                height_pt: im.height_pt,
                chart: im.chart.clone(),
            });
        }
        let ia = &state.interactive;
        for h in &ia.hyperlinks {
            let p = &mut paragraphs[h.paragraph_index];
            let offset = p.run_start(h.run_index);
            p.links.push(Link {
                offset,
                url: h.url.clone(),
                display_text: h.display_text.clone(),
            });
        }
        for b in &ia.line_breaks {
            let p = &mut paragraphs[b.paragraph_index];
            let offset = p.run_start(b.run_index);
            p.line_breaks.push(offset);
        }
        for b in &ia.bookmarks {
            paragraphs[b.paragraph_index].bookmarks.push(b.name.clone());
        }
        for &pb in &ia.page_breaks {
            paragraphs[pb].page_break = true;
        }
        for p in &mut paragraphs {
            p.normalize();
        }
        let tables = state
            .tables
            .iter()
            .map(|t| Table {
                cells: t.cells.clone(),
                table_style: t.table_style.clone(),
                row_heights_pt: t.row_heights_pt.clone(),
                col_widths_pt: t.col_widths_pt.clone(),
            })
            .collect();
        Ok(Document {
            lineage: fresh_lineage(),
            body: Body {
                paragraphs,
                tables,
                page_layout: state.page_layout.clone(),
                styles: state.styles.clone(),
                sections: state.doc_info.total_sections_count,
                saved_to: None,
            },
        })
    }

    /// Extract the canonical snapshot. Pure: never mutates the document.
    pub fn extract_state(&self) -> Result<DocumentState, StateParseError> {
        let b = &self.body;
        let mut images = Vec::new();
        let mut paragraphs = Vec::with_capacity(b.paragraphs.len());
        let mut hyperlinks = Vec::new();
        let mut bookmarks = Vec::new();
        let mut line_breaks = Vec::new();
        let mut page_breaks = Vec::new();

        for (pi, p) in b.paragraphs.iter().enumerate() {
            let mut refs = Vec::new();
            for s in &p.shapes {
                refs.push(images.len());
                images.push(ImageElement {
                    host_paragraph_index: pi,
                    host_text_run_index: p.run_at(s.offset),
                    image_sequence_index: images.len(),
                    width_pt: round3(s.width_pt),
                    height_pt: round3(s.height_pt),
                    chart: s.chart.clone(),
                });
            }
            for l in &p.links {
                hyperlinks.push(Hyperlink {
                    paragraph_index: pi,
                    run_index: p.run_at(l.offset),
                    url: l.url.clone(),
                    display_text: l.display_text.clone(),
                });
            }
            for &lb in &p.line_breaks {
                line_breaks.push(LineBreak {
                    paragraph_index: pi,
                    run_index: p.run_at(lb),
                });
            }
            for name in &p.bookmarks {
                bookmarks.push(Bookmark {
                    name: name.clone(),
                    paragraph_index: pi,
                });
            }
            if p.page_break {
                page_breaks.push(pi);
            }
            paragraphs.push(ParagraphElement {
                index: pi,
                text: p.text(),
                style_name: p.style_name.clone(),
                alignment: p.alignment,
                runs: p.runs.iter().map(round_run).collect(),
                spacing: Spacing {
                    before_pt: round3(p.spacing.before_pt),
                    after_pt: round3(p.spacing.after_pt),
                    line: round3(p.spacing.line),
                },
                indentation: Indentation {
                    left_pt: round3(p.indentation.left_pt),
                    right_pt: round3(p.indentation.right_pt),
                    first_line_pt: round3(p.indentation.first_line_pt),
                },
                embedded_image_refs: refs,
            });
        }

        let tables = b
            .tables
            .iter()
            .enumerate()
            .map(|(i, t)| TableElement {
                index: i,
                row_count: t.rows(),
                col_count: t.cols(),
                cells: t
                    .cells
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|c| Cell {
                                text: c.text.clone(),
                                runs: c.runs.iter().map(round_run).collect(),
                                merge: c.merge,
                                is_header: c.is_header,
                            })
                            .collect()
                    })
                    .collect(),
                table_style: t.table_style.clone(),
                row_heights_pt: t.row_heights_pt.iter().map(|&x| round3(x)).collect(),
                col_widths_pt: t.col_widths_pt.iter().map(|&x| round3(x)).collect(),
            })
            .collect();

        let state = DocumentState {
            state_version: STATE_VERSION,
            doc_info: DocInfo {
                total_paragraphs_count: b.paragraphs.len(),
                total_tables_count: b.tables.len(),
                total_sections_count: b.sections,
                has_header_flag: !b.page_layout.headers.is_empty(),
                has_footer_flag: !b.page_layout.footers.is_empty(),
            },
            paragraphs,
            tables,
            images,
            page_layout: b.page_layout.clone(),
            interactive: InteractiveElements {
                hyperlinks,
                bookmarks,
                line_breaks,
                page_breaks,
            },
            styles: b
                .styles
                .iter()
                .map(|s| StyleDef {
                    font_size_pt: round3(s.font_size_pt),
                    ..s.clone()
                })
                .collect(),
        };
        state.validate()?;
        Ok(state)
    }

    pub fn snapshot(&self) -> SnapshotHandle {
        SnapshotHandle {
            lineage: self.lineage,
            body: Arc::new(self.body.clone()),
        }
    }

    pub fn restore(&mut self, handle: &SnapshotHandle) -> Result<(), DocError> {
        if handle.lineage != self.lineage {
            return Err(DocError::InvalidHandle);
        }
        self.body = (*handle.body).clone();
        Ok(())
    }

    /// Path recorded by the last `save_document` call, if any.
    pub fn saved_to(&self) -> Option<&str> {
        self.body.saved_to.as_deref()
    }

    /// Write a raw spacing value without validation. Only useful for exercising
    /// the state-extraction failure path.
    #[doc(hidden)]
    pub fn force_spacing_unchecked(&mut self, paragraph: usize, before_pt: f64) {
        if let Some(p) = self.body.paragraphs.get_mut(paragraph) {
            p.spacing.before_pt = before_pt;
        }
    }
}

fn round_run(r: &TextRun) -> TextRun {
    TextRun {
        text: r.text.clone(),
        format: RunFormat {
            font_size_pt: round3(r.format.font_size_pt),
            ..r.format.clone()
        },
    }
}
