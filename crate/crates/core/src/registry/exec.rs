use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::{ApiCall, ApiSchema, Registry};
use crate::doc::{
    to_canonical_string, Alignment, Document, Link, MergeInfo, PageNumbers, Paragraph, RunFormat,
    Shape, StyleCategory, StyleDef, Table, TextRun,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecErrorKind {
    InvalidArgs,
    OutOfRange,
    NotFound,
    InvalidTarget,
    Duplicate,
    Conflict,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("{kind:?}: {message}")]
pub struct ExecError {
    pub kind: ExecErrorKind,
    pub message: String,
}

/// Result of running one call. `Ok` carries the optional textual output
/// (`save_document` reports the path, `export_state` the canonical JSON).
pub type ExecOutcome = Result<Option<String>, ExecError>;

fn fail<T>(kind: ExecErrorKind, message: impl Into<String>) -> Result<T, ExecError> {
    Err(ExecError {
        kind,
        message: message.into(),
    })
}

const MAX_TABLE_DIM: usize = 50;

pub(super) fn execute(reg: &Registry, call: &ApiCall, doc: &mut Document) -> ExecOutcome {
    let call = reg.canonicalize(call).map_err(|e| ExecError {
        kind: ExecErrorKind::InvalidArgs,
        message: e.to_string(),
    })?;
    let schema = reg
        .get(&call.api_name)
        .expect("canonicalize checked the name");
    // Mutate a copy so failures can never leave a half-applied change behind.
    let mut work = doc.clone();
    let out = apply(
        schema,
        &ArgView {
            schema,
            call: &call,
        },
        &mut work,
    )?;
    *doc = work;
    Ok(out)
}

struct ArgView<'a> {
    schema: &'a ApiSchema,
    call: &'a ApiCall,
}

impl ArgView<'_> {
    fn raw(&self, name: &str) -> Option<&Value> {
        self.call
            .args
            .get(name)
            .or_else(|| self.schema.param(name).and_then(|p| p.default.as_ref()))
    }

    fn opt_usize(&self, name: &str) -> Option<usize> {
        self.raw(name).and_then(Value::as_u64).map(|n| n as usize)
    }

    fn usize(&self, name: &str) -> usize {
        self.opt_usize(name).expect("validated required integer")
    }

    fn opt_str(&self, name: &str) -> Option<&str> {
        self.raw(name).and_then(Value::as_str)
    }

    fn str(&self, name: &str) -> &str {
        self.opt_str(name).expect("validated required text")
    }

    fn opt_f64(&self, name: &str) -> Option<f64> {
        self.raw(name).and_then(Value::as_f64)
    }

    fn f64(&self, name: &str) -> f64 {
        self.opt_f64(name).expect("validated required float")
    }

    fn bool(&self, name: &str) -> bool {
        self.raw(name).and_then(Value::as_bool).unwrap_or(false)
    }

    fn texts(&self, name: &str) -> Vec<String> {
        self.raw(name)
            .and_then(Value::as_array)
            .map(|a| {
                a.iter()
                    .filter_map(|v| v.as_str().map(String::from))
                    .collect()
            })
            .unwrap_or_default()
    }
}

fn para_mut(doc: &mut Document, i: usize) -> Result<&mut Paragraph, ExecError> {
    let n = doc.body.paragraphs.len();
    match doc.body.paragraphs.get_mut(i) {
        Some(p) => Ok(p),
        None => fail(
            ExecErrorKind::OutOfRange,
            format!("paragraph {i} does not exist ({n} paragraphs)"),
        ),
    }
}

fn table_mut(doc: &mut Document, i: usize) -> Result<&mut Table, ExecError> {
    let n = doc.body.tables.len();
    match doc.body.tables.get_mut(i) {
        Some(t) => Ok(t),
        None => fail(
            ExecErrorKind::OutOfRange,
            format!("table {i} does not exist ({n} tables)"),
        ),
    }
}

fn check_cell(t: &Table, row: usize, col: usize) -> Result<(), ExecError> {
    if row >= t.rows() || col >= t.cols() {
        return fail(
            ExecErrorKind::OutOfRange,
            format!("cell ({row},{col}) outside {}x{} table", t.rows(), t.cols()),
        );
    }
    if let Some(m) = t.cells[row][col].merge {
        if (m.anchor_row, m.anchor_col) != (row, col) {
            return fail(
                ExecErrorKind::Conflict,
                format!(
                    "cell ({row},{col}) is covered by the merge anchored at ({},{})",
                    m.anchor_row, m.anchor_col
                ),
            );
        }
    }
    Ok(())
}

fn require_paragraph_style(doc: &Document, name: &str) -> Result<(), ExecError> {
    match doc.body.styles.iter().find(|s| s.style_name == name) {
        Some(s) if s.style_category == StyleCategory::Paragraph => Ok(()),
        Some(_) => fail(
            ExecErrorKind::InvalidTarget,
            format!("style `{name}` is not a paragraph style"),
        ),
        None => fail(
            ExecErrorKind::NotFound,
            format!("style `{name}` is not defined"),
        ),
    }
}

fn char_range(p: &Paragraph, a: &ArgView<'_>) -> Result<(usize, usize), ExecError> {
    let len = p.char_len();
    if len == 0 {
        return fail(ExecErrorKind::InvalidTarget, "paragraph has no text");
    }
    let start = a.opt_usize("start").unwrap_or(0);
    let end = a.opt_usize("end").unwrap_or(len);
    if start >= end || end > len {
        return fail(
            ExecErrorKind::OutOfRange,
            format!("character range {start}..{end} invalid for length {len}"),
        );
    }
    Ok((start, end))
}

fn format_paragraph(
    doc: &mut Document,
    a: &ArgView<'_>,
    f: impl Fn(&mut RunFormat),
) -> ExecOutcome {
    let p = para_mut(doc, a.usize("paragraph_index"))?;
    let (start, end) = char_range(p, a)?;
    p.format_range(start, end, f);
    Ok(None)
}

/// Global image order: paragraphs in order, shapes by offset within each.
fn shape_mut(doc: &mut Document, index: usize) -> Result<&mut Shape, ExecError> {
    let total: usize = doc.body.paragraphs.iter().map(|p| p.shapes.len()).sum();
    let mut k = index;
    for p in &mut doc.body.paragraphs {
        if k < p.shapes.len() {
            return Ok(&mut p.shapes[k]);
        }
        k -= p.shapes.len();
    }
    fail(
        ExecErrorKind::OutOfRange,
        format!("image {index} does not exist ({total} images)"),
    )
}

fn fix_toc_flag(doc: &mut Document) {
    if !doc.body.paragraphs.iter().any(|p| p.style_name == "TOC") {
        doc.body.page_layout.toc_present = false;
    }
}

fn apply(schema: &ApiSchema, a: &ArgView<'_>, doc: &mut Document) -> ExecOutcome {
    use ExecErrorKind::*;
    match schema.name {
        "add_paragraph" => {
            let style = a.str("style");
            require_paragraph_style(doc, style)?;
            doc.body
                .paragraphs
                .push(Paragraph::new(a.str("text"), style));
        }
        "insert_paragraph_at" => {
            let style = a.str("style");
            require_paragraph_style(doc, style)?;
            let i = a.usize("index");
            let n = doc.body.paragraphs.len();
            if i > n {
                return fail(OutOfRange, format!("cannot insert at {i} ({n} paragraphs)"));
            }
            doc.body
                .paragraphs
                .insert(i, Paragraph::new(a.str("text"), style));
        }
        "delete_paragraph" => {
            let i = a.usize("index");
            para_mut(doc, i)?;
            doc.body.paragraphs.remove(i);
            fix_toc_flag(doc);
        }
        "edit_paragraph_text" => {
            para_mut(doc, a.usize("index"))?.set_text(a.str("text"));
        }
        "replace_text" => {
            let find = a.str("find");
            let with = a.str("replace");
            let targets: Vec<usize> = match a.opt_usize("paragraph_index") {
                Some(i) => {
                    para_mut(doc, i)?;
                    vec![i]
                }
                None => (0..doc.body.paragraphs.len()).collect(),
            };
            let mut hits = 0;
            for i in targets {
                let p = &mut doc.body.paragraphs[i];
                for r in &mut p.runs {
                    let n = r.text.matches(find).count();
                    if n > 0 {
                        hits += n;
                        r.text = r.text.replace(find, with);
                    }
                }
                p.normalize();
            }
            if hits == 0 {
                return fail(NotFound, format!("text `{find}` not found"));
            }
        }
        "set_alignment" => {
            let al = Alignment::parse(a.str("alignment")).expect("choice validated");
            para_mut(doc, a.usize("paragraph_index"))?.alignment = al;
        }
        "set_bold" => {
            let v = a.bool("value");
            return format_paragraph(doc, a, |f| f.bold = v);
        }
        "set_italic" => {
            let v = a.bool("value");
            return format_paragraph(doc, a, |f| f.italic = v);
        }
        "set_font" => {
            let name = a.str("font_name").to_string();
            return format_paragraph(doc, a, |f| f.font_name = name.clone());
        }
        "set_font_size" => {
            let size = a.f64("size_pt");
            return format_paragraph(doc, a, |f| f.font_size_pt = size);
        }
        "set_font_color" => {
            let color = a.str("color").to_string();
            return format_paragraph(doc, a, |f| f.color_rgb = color.clone());
        }
        "set_paragraph_style" => {
            let style = a.str("style");
            require_paragraph_style(doc, style)?;
            let i = a.usize("paragraph_index");
            para_mut(doc, i)?.style_name = style.to_string();
            fix_toc_flag(doc);
        }
        "set_spacing" => {
            let (b, af, l) = (
                a.opt_f64("before_pt"),
                a.opt_f64("after_pt"),
                a.opt_f64("line"),
            );
            if b.is_none() && af.is_none() && l.is_none() {
                return fail(InvalidArgs, "set_spacing needs at least one value");
            }
            let p = para_mut(doc, a.usize("paragraph_index"))?;
            if let Some(x) = b {
                p.spacing.before_pt = x;
            }
            if let Some(x) = af {
                p.spacing.after_pt = x;
            }
            if let Some(x) = l {
                p.spacing.line = x;
            }
        }
        "set_indentation" => {
            let (l, r, f) = (
                a.opt_f64("left_pt"),
                a.opt_f64("right_pt"),
                a.opt_f64("first_line_pt"),
            );
            if l.is_none() && r.is_none() && f.is_none() {
                return fail(InvalidArgs, "set_indentation needs at least one value");
            }
            let p = para_mut(doc, a.usize("paragraph_index"))?;
            if let Some(x) = l {
                p.indentation.left_pt = x;
            }
            if let Some(x) = r {
                p.indentation.right_pt = x;
            }
            if let Some(x) = f {
                p.indentation.first_line_pt = x;
            }
        }
        "add_table" => {
            let (rows, cols) = (a.usize("rows"), a.usize("cols"));
            if rows > MAX_TABLE_DIM || cols > MAX_TABLE_DIM {
                return fail(
                    OutOfRange,
                    format!("table {rows}x{cols} exceeds {MAX_TABLE_DIM}"),
                );
            }
            doc.body.tables.push(Table::new(rows, cols, a.str("style")));
        }
        "delete_table" => {
            let i = a.usize("table_index");
            table_mut(doc, i)?;
            doc.body.tables.remove(i);
        }
        "add_table_header" => {
            let headers = a.texts("headers");
            let row = a.usize("row");
            let t = table_mut(doc, a.usize("table_index"))?;
            if headers.len() > t.cols() {
                return fail(
                    OutOfRange,
                    format!("{} headers for {} columns", headers.len(), t.cols()),
                );
            }
            for c in 0..headers.len() {
                check_cell(t, row, c)?;
            }
            for (c, h) in headers.iter().enumerate() {
                let cell = &mut t.cells[row][c];
                cell.text = h.clone();
                cell.runs = if h.is_empty() {
                    Vec::new()
                } else {
                    vec![TextRun {
                        text: h.clone(),
                        format: RunFormat {
                            bold: true,
                            ..RunFormat::default()
                        },
                    }]
                };
                cell.is_header = true;
            }
        }
        "set_cell_text" => {
            let (row, col) = (a.usize("row"), a.usize("col"));
            let text = a.str("text");
            let t = table_mut(doc, a.usize("table_index"))?;
            check_cell(t, row, col)?;
            let cell = &mut t.cells[row][col];
            let format = cell
                .runs
                .first()
                .map(|r| r.format.clone())
                .unwrap_or_default();
            cell.text = text.to_string();
            cell.runs = if text.is_empty() {
                Vec::new()
            } else {
                vec![TextRun {
                    text: text.to_string(),
                    format,
                }]
            };
        }
        "merge_cell_table" => {
            let (row, col) = (a.usize("row"), a.usize("col"));
            let (rs, cs) = (a.usize("row_span"), a.usize("col_span"));
            let t = table_mut(doc, a.usize("table_index"))?;
            if rs * cs < 2 {
                return fail(InvalidArgs, "a merge must cover at least two cells");
            }
            if row + rs > t.rows() || col + cs > t.cols() {
                return fail(
                    OutOfRange,
                    format!(
                        "merge {rs}x{cs} at ({row},{col}) exceeds {}x{} table",
                        t.rows(),
                        t.cols()
                    ),
                );
            }
            let region = || (row..row + rs).flat_map(move |r| (col..col + cs).map(move |c| (r, c)));
            if region().any(|(r, c)| t.cells[r][c].merge.is_some()) {
                return fail(Conflict, "region overlaps an existing merge");
            }
            let text = region()
                .map(|(r, c)| t.cells[r][c].text.clone())
                .filter(|s| !s.is_empty())
                .collect::<Vec<_>>()
                .join(" ");
            let anchor = &t.cells[row][col];
            let format = anchor
                .runs
                .first()
                .map(|r| r.format.clone())
                .unwrap_or_default();
            let header = anchor.is_header;
            let info = MergeInfo {
                anchor_row: row,
                anchor_col: col,
                row_span: rs,
                col_span: cs,
            };
            for (r, c) in region() {
                let cell = &mut t.cells[r][c];
                cell.text.clear();
                cell.runs.clear();
                cell.merge = Some(info);
            }
            let anchor = &mut t.cells[row][col];
            anchor.runs = if text.is_empty() {
                Vec::new()
            } else {
                vec![TextRun {
                    text: text.clone(),
                    format,
                }]
            };
            anchor.text = text;
            anchor.is_header = header;
        }
        "split_cell_table" => {
            let (row, col) = (a.usize("row"), a.usize("col"));
            let t = table_mut(doc, a.usize("table_index"))?;
            if row >= t.rows() || col >= t.cols() {
                return fail(OutOfRange, format!("cell ({row},{col}) outside table"));
            }
            let m = match t.cells[row][col].merge {
                Some(m) if (m.anchor_row, m.anchor_col) == (row, col) => m,
                _ => {
                    return fail(
                        InvalidTarget,
                        format!("cell ({row},{col}) is not a merge anchor"),
                    )
                }
            };
            for r in m.anchor_row..m.anchor_row + m.row_span {
                for c in m.anchor_col..m.anchor_col + m.col_span {
                    t.cells[r][c].merge = None;
                }
            }
        }
        "set_table_style" => {
            let style = a.str("style").to_string();
            table_mut(doc, a.usize("table_index"))?.table_style = style;
        }
        "set_row_height" => {
            let row = a.usize("row");
            let h = a.f64("height_pt");
            let t = table_mut(doc, a.usize("table_index"))?;
            match t.row_heights_pt.get_mut(row) {
                Some(x) => *x = h,
                None => return fail(OutOfRange, format!("row {row} outside table")),
            }
        }
        "set_col_width" => {
            let col = a.usize("col");
            let w = a.f64("width_pt");
            let t = table_mut(doc, a.usize("table_index"))?;
            match t.col_widths_pt.get_mut(col) {
                Some(x) => *x = w,
                None => return fail(OutOfRange, format!("column {col} outside table")),
            }
        }
        "insert_image" | "add_chart_stub" => {
            let chart = (schema.name == "add_chart_stub").then(|| crate::doc::ChartStub {
                chart_type: a.str("chart_type").to_string(),
                series_count: a.usize("series_count"),
            });
            let (w, h) = (a.f64("width_pt"), a.f64("height_pt"));
            let offset = a.opt_usize("offset");
            let p = para_mut(doc, a.usize("paragraph_index"))?;
            let len = p.char_len();
            if len == 0 {
                return fail(
                    InvalidTarget,
                    "images need a paragraph with text to anchor to",
                );
            }
            let offset = offset.unwrap_or(len);
            if offset > len {
                return fail(OutOfRange, format!("offset {offset} beyond length {len}"));
            }
            p.shapes.push(Shape {
                offset,
                width_pt: w,
                height_pt: h,
                chart,
            });
            p.normalize();
        }
        "resize_image" => {
            let (w, h) = (a.f64("width_pt"), a.f64("height_pt"));
            let s = shape_mut(doc, a.usize("image_index"))?;
            s.width_pt = w;
            s.height_pt = h;
        }
        "delete_image" => {
            let idx = a.usize("image_index");
            shape_mut(doc, idx)?;
            let mut k = idx;
            for p in &mut doc.body.paragraphs {
                if k < p.shapes.len() {
                    p.shapes.remove(k);
                    break;
                }
                k -= p.shapes.len();
            }
        }
        "update_chart_stub" => {
            let kind = a.opt_str("chart_type").map(String::from);
            let series = a.opt_usize("series_count");
            if kind.is_none() && series.is_none() {
                return fail(
                    InvalidArgs,
                    "update_chart_stub needs chart_type or series_count",
                );
            }
            let s = shape_mut(doc, a.usize("image_index"))?;
            let chart = match s.chart.as_mut() {
                Some(c) => c,
                None => return fail(InvalidTarget, "image is not a chart"),
            };
            if let Some(k) = kind {
                chart.chart_type = k;
            }
            if let Some(n) = series {
                chart.series_count = n;
            }
        }
        "add_header" => doc.body.page_layout.headers.push(a.str("text").to_string()),
        "add_footer" => doc.body.page_layout.footers.push(a.str("text").to_string()),
        "add_page_number" => {
            doc.body.page_layout.page_numbers = Some(PageNumbers {
                format: a.str("format").to_string(),
                start: a.usize("start"),
            });
        }
        "add_watermark" => doc.body.page_layout.watermark = Some(a.str("text").to_string()),
        "add_toc" => {
            if doc.body.page_layout.toc_present {
                return fail(Duplicate, "the document already has a table of contents");
            }
            doc.body
                .paragraphs
                .insert(0, Paragraph::new(a.str("title"), "TOC"));
            doc.body.page_layout.toc_present = true;
        }
        "add_hyperlink" => {
            let url = a.str("url").to_string();
            let p = para_mut(doc, a.usize("paragraph_index"))?;
            let (start, end) = char_range(p, a)?;
            let display_text: String = p.text().chars().skip(start).take(end - start).collect();
            p.links.push(Link {
                offset: start,
                url,
                display_text,
            });
            p.normalize();
        }
        "add_bookmark" => {
            let name = a.str("name");
            if doc
                .body
                .paragraphs
                .iter()
                .any(|p| p.bookmarks.iter().any(|b| b == name))
            {
                return fail(Duplicate, format!("bookmark `{name}` already exists"));
            }
            para_mut(doc, a.usize("paragraph_index"))?
                .bookmarks
                .push(name.to_string());
        }
        "insert_page_break" => {
            let p = para_mut(doc, a.usize("paragraph_index"))?;
            if p.page_break {
                return fail(Duplicate, "paragraph already starts a new page");
            }
            p.page_break = true;
        }
        "insert_line_break" => {
            let offset = a.opt_usize("offset");
            let p = para_mut(doc, a.usize("paragraph_index"))?;
            let len = p.char_len();
            if len == 0 {
                return fail(InvalidTarget, "line breaks need a paragraph with text");
            }
            let offset = offset.unwrap_or(len);
            if offset > len {
                return fail(OutOfRange, format!("offset {offset} beyond length {len}"));
            }
            let snapped = p.run_start(p.run_at(offset));
            if p.line_breaks.contains(&snapped) {
                return fail(Duplicate, format!("line break already in run at {offset}"));
            }
            p.line_breaks.push(offset);
            p.normalize();
        }
        "define_style" => {
            let def = StyleDef {
                style_name: a.str("name").to_string(),
                style_category: StyleCategory::parse(a.str("category")).expect("choice validated"),
                font_name: a.str("font_name").to_string(),
                font_size_pt: a.f64("font_size_pt"),
                bold_flag: a.bool("bold"),
                italic_flag: a.bool("italic"),
            };
            let in_use = doc
                .body
                .paragraphs
                .iter()
                .any(|p| p.style_name == def.style_name);
            if in_use && def.style_category != StyleCategory::Paragraph {
                return fail(
                    Conflict,
                    format!("style `{}` is used by paragraphs", def.style_name),
                );
            }
            match doc
                .body
                .styles
                .iter_mut()
                .find(|s| s.style_name == def.style_name)
            {
                Some(s) => *s = def,
                None => doc.body.styles.push(def),
            }
        }
        "save_document" => {
            let path = a.str("path").to_string();
            doc.body.saved_to = Some(path.clone());
            return Ok(Some(path));
        }
        "export_state" => {
            let state = doc.extract_state().map_err(|e| ExecError {
                kind: InvalidTarget,
                message: e.to_string(),
            })?;
            return Ok(Some(to_canonical_string(&state)));
        }
        other => unreachable!("no executor for registered API {other}"),
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doc::canonical_json;
    use serde_json::json;

    fn run(doc: &mut Document, api: &str, args: Value) -> ExecOutcome {
        Registry::shared().execute(&ApiCall::from_json(api, args), doc)
    }

    #[test]
    fn add_table_on_empty_doc() {
        let mut d = Document::new();
        run(&mut d, "add_table", json!({"rows": 2, "cols": 3})).unwrap();
        let s = d.extract_state().unwrap();
        assert_eq!(s.tables.len(), 1);
        assert_eq!((s.tables[0].row_count, s.tables[0].col_count), (2, 3));
    }

    #[test]
    fn add_table_header_fills_row_zero() {
        let mut d = Document::new();
        run(&mut d, "add_table", json!({"rows": 3, "cols": 3})).unwrap();
        run(
            &mut d,
            "add_table_header",
            json!({"table_index": 0, "headers": ["Dept", "Staff", "Age"]}),
        )
        .unwrap();
        let s = d.extract_state().unwrap();
        let row: Vec<_> = s.tables[0].cells[0]
            .iter()
            .map(|c| c.text.as_str())
            .collect();
        assert_eq!(row, ["Dept", "Staff", "Age"]);
        assert!(s.tables[0].cells[0].iter().all(|c| c.is_header));
    }

    #[test]
    fn failed_call_leaves_document_untouched() {
        let mut d = Document::new();
        run(&mut d, "add_paragraph", json!({"text": "only"})).unwrap();
        let before = canonical_json(&d.extract_state().unwrap());
        let e = run(&mut d, "delete_paragraph", json!({"index": 99})).unwrap_err();
        assert_eq!(e.kind, ExecErrorKind::OutOfRange);
        assert_eq!(canonical_json(&d.extract_state().unwrap()), before);
    }

    #[test]
    fn merge_then_split() {
        let mut d = Document::new();
        run(&mut d, "add_table", json!({"rows": 2, "cols": 3})).unwrap();
        run(
            &mut d,
            "set_cell_text",
            json!({"table_index": 0, "row": 0, "col": 1, "text": "b"}),
        )
        .unwrap();
        run(
            &mut d,
            "merge_cell_table",
            json!({"table_index": 0, "row": 0}),
        )
        .unwrap();
        let s = d.extract_state().unwrap();
        assert_eq!(s.tables[0].cells[0][0].text, "b");
        assert_eq!(s.tables[0].cells[0][1].text, "");
        assert!(s.tables[0].cells[0][1].merge.is_some());
        let e = run(
            &mut d,
            "set_cell_text",
            json!({"table_index": 0, "row": 0, "col": 1, "text": "x"}),
        )
        .unwrap_err();
        assert_eq!(e.kind, ExecErrorKind::Conflict);
        run(
            &mut d,
            "split_cell_table",
            json!({"table_index": 0, "row": 0, "col": 0}),
        )
        .unwrap();
        assert!(d.extract_state().unwrap().tables[0].cells[0][1]
            .merge
            .is_none());
    }

    #[test]
    fn images_track_host_runs() {
        let mut d = Document::new();
        run(
            &mut d,
            "add_paragraph",
            json!({"text": "normal bold normal"}),
        )
        .unwrap();
        run(
            &mut d,
            "set_bold",
            json!({"paragraph_index": 0, "start": 7, "end": 11}),
        )
        .unwrap();
        run(
            &mut d,
            "insert_image",
            json!({"paragraph_index": 0, "width_pt": 10, "height_pt": 5, "offset": 8}),
        )
        .unwrap();
        let s = d.extract_state().unwrap();
        assert_eq!(s.images[0].host_text_run_index, 1);
        assert_eq!(s.paragraphs[0].embedded_image_refs, vec![0]);
    }

    #[test]
    fn toc_and_bookmarks() {
        let mut d = Document::new();
        run(&mut d, "add_paragraph", json!({"text": "body"})).unwrap();
        run(&mut d, "add_toc", json!({})).unwrap();
        assert!(run(&mut d, "add_toc", json!({})).is_err());
        run(
            &mut d,
            "add_bookmark",
            json!({"name": "b", "paragraph_index": 1}),
        )
        .unwrap();
        assert_eq!(
            run(
                &mut d,
                "add_bookmark",
                json!({"name": "b", "paragraph_index": 0})
            )
            .unwrap_err()
            .kind,
            ExecErrorKind::Duplicate
        );
        run(&mut d, "delete_paragraph", json!({"index": 0})).unwrap();
        let s = d.extract_state().unwrap();
        assert!(!s.page_layout.toc_present);
        assert_eq!(s.interactive.bookmarks[0].paragraph_index, 0);
    }

    #[test]
    fn lifecycle_calls_do_not_change_state() {
        let mut d = Document::new();
        run(&mut d, "add_paragraph", json!({"text": "x"})).unwrap();
        let before = canonical_json(&d.extract_state().unwrap());
        assert_eq!(
            run(&mut d, "save_document", json!({})).unwrap().as_deref(),
            Some("document.json")
        );
        let exported = run(&mut d, "export_state", json!({})).unwrap().unwrap();
        assert_eq!(exported.as_bytes(), before.as_slice());
        assert_eq!(canonical_json(&d.extract_state().unwrap()), before);
    }
}
