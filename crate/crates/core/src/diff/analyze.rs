use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::matcher::{diff_text, similarity, Opcode};
use super::signature::cell_signature;
use crate::doc::DocumentState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Structural,
    Content,
    Format,
    Style,
    Table,
    Hyperlink,
}

impl Channel {
    pub const ALL: [Channel; 6] = [
        Channel::Structural,
        Channel::Content,
        Channel::Format,
        Channel::Style,
        Channel::Table,
        Channel::Hyperlink,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Structural => "structural",
            Channel::Content => "content",
            Channel::Format => "format",
            Channel::Style => "style",
            Channel::Table => "table",
            Channel::Hyperlink => "hyperlink",
        }
    }
}

/// One observed difference. Paths are JSON pointers into the canonical state
/// JSON; `old_path` is absent for additions and `new_path` for removals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Change {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub old_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub before: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub after: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opcodes: Option<Vec<Opcode>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StateDelta {
    pub structural: Vec<Change>,
    pub content: Vec<Change>,
    pub format: Vec<Change>,
    pub style: Vec<Change>,
    pub table: Vec<Change>,
    pub hyperlink: Vec<Change>,
    pub is_empty: bool,
}

impl StateDelta {
    pub fn channel(&self, c: Channel) -> &[Change] {
        match c {
            Channel::Structural => &self.structural,
            Channel::Content => &self.content,
            Channel::Format => &self.format,
            Channel::Style => &self.style,
            Channel::Table => &self.table,
            Channel::Hyperlink => &self.hyperlink,
        }
    }

    fn channel_mut(&mut self, c: Channel) -> &mut Vec<Change> {
        match c {
            Channel::Structural => &mut self.structural,
            Channel::Content => &mut self.content,
            Channel::Format => &mut self.format,
            Channel::Style => &mut self.style,
            Channel::Table => &mut self.table,
            Channel::Hyperlink => &mut self.hyperlink,
        }
    }

    /// All changes in channel order.
    pub fn iter(&self) -> impl Iterator<Item = (Channel, &Change)> {
        Channel::ALL
            .into_iter()
            .flat_map(move |c| self.channel(c).iter().map(move |ch| (c, ch)))
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        Channel::ALL.iter().map(|&c| self.channel(c).len()).sum()
    }
}

/// Parse the canonical bytes back, so every comparison below happens at
/// canonical precision and agrees with byte equality.
pub fn canonical_value(state: &DocumentState) -> Value {
    crate::doc::canonical_tree(state)
}

/// Order-preserving pairing of two lists. Equal lengths pair by index;
/// otherwise a global alignment maximizes total similarity over pairs
/// scoring at least `0.5`.
pub fn align(n: usize, m: usize, sim: impl Fn(usize, usize) -> f64) -> Vec<(usize, usize)> {
    if n == m {
        return (0..n).map(|i| (i, i)).collect();
    }
    let mut s = vec![vec![0.0f64; m]; n];
    for (i, row) in s.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = sim(i, j);
        }
    }
    // best[i][j]: best score aligning a[i..] with b[j..]
    let mut best = vec![vec![0.0f64; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            let mut v = best[i + 1][j].max(best[i][j + 1]);
            if s[i][j] >= 0.5 {
                v = v.max(best[i + 1][j + 1] + s[i][j]);
            }
            best[i][j] = v;
        }
    }
    let (mut i, mut j) = (0, 0);
    let mut pairs = Vec::new();
    while i < n && j < m {
        if s[i][j] >= 0.5 && best[i][j] == best[i + 1][j + 1] + s[i][j] {
            pairs.push((i, j));
            i += 1;
            j += 1;
        } else if best[i][j] == best[i + 1][j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    pairs
}

fn arr(v: &Value) -> &[Value] {
    v.as_array().map(Vec::as_slice).unwrap_or(&[])
}

fn text_of(v: &Value) -> &str {
    v.get("text").and_then(Value::as_str).unwrap_or("")
}

const RUN_FIELDS: [&str; 6] = [
    "bold",
    "italic",
    "underline",
    "font_name",
    "font_size_pt",
    "color_rgb",
];

struct Builder<'a> {
    prev: &'a DocumentState,
    next: &'a DocumentState,
    p: &'a Value,
    n: &'a Value,
    delta: StateDelta,
}

impl Builder<'_> {
    fn push(
        &mut self,
        channel: Channel,
        kind: &str,
        old_path: Option<String>,
        new_path: Option<String>,
    ) -> &mut Change {
        let before = old_path.as_ref().and_then(|p| self.p.pointer(p)).cloned();
        let after = new_path.as_ref().and_then(|p| self.n.pointer(p)).cloned();
        let list = self.delta.channel_mut(channel);
        list.push(Change {
            kind: kind.to_string(),
            old_path,
            new_path,
            before,
            after,
            opcodes: None,
            note: None,
        });
        list.last_mut().expect("just pushed")
    }

    fn both(&mut self, channel: Channel, kind: &str, old: String, new: String) -> &mut Change {
        self.push(channel, kind, Some(old), Some(new))
    }

    /// Report `key` of two paired objects if it differs.
    fn field(&mut self, channel: Channel, kind: &str, old: &str, new: &str, key: &str) {
        let (op, np) = (format!("{old}/{key}"), format!("{new}/{key}"));
        if self.p.pointer(&op) != self.n.pointer(&np) {
            self.both(channel, kind, op, np);
        }
    }

    fn doc_info(&mut self) {
        let keys: Vec<String> = self.p["doc_info"]
            .as_object()
            .map(|o| o.keys().cloned().collect())
            .unwrap_or_default();
        for k in keys {
            self.field(
                Channel::Structural,
                "doc_info",
                "/doc_info",
                "/doc_info",
                &k,
            );
        }
    }

    /// Run-level comparison shared by paragraphs and cells. Run text is only
    /// reported when the owner text is unchanged, i.e. a pure re-segmentation;
    /// otherwise the content channel already carries it.
    fn runs(&mut self, old: &str, new: &str, text_changed: bool) {
        let pr = arr(self
            .p
            .pointer(&format!("{old}/runs"))
            .unwrap_or(&Value::Null))
        .len();
        let nr = arr(self
            .n
            .pointer(&format!("{new}/runs"))
            .unwrap_or(&Value::Null))
        .len();
        for r in 0..pr.min(nr) {
            let (o, n) = (format!("{old}/runs/{r}"), format!("{new}/runs/{r}"));
            if !text_changed {
                self.field(Channel::Format, "run_text", &o, &n, "text");
            }
            for f in RUN_FIELDS {
                self.field(Channel::Format, "run_format", &o, &n, f);
            }
        }
        for r in nr..pr {
            self.push(
                Channel::Format,
                "run_removed",
                Some(format!("{old}/runs/{r}")),
                None,
            );
        }
        for r in pr..nr {
            self.push(
                Channel::Format,
                "run_added",
                None,
                Some(format!("{new}/runs/{r}")),
            );
        }
    }

    fn paragraphs(&mut self) {
        let (pa, na) = (arr(&self.p["paragraphs"]), arr(&self.n["paragraphs"]));
        let pairs = align(pa.len(), na.len(), |i, j| {
            similarity(text_of(&pa[i]), text_of(&na[j]))
        });
        self.unpaired(
            Channel::Structural,
            "paragraph",
            "/paragraphs",
            pa.len(),
            na.len(),
            &pairs,
        );
        for &(i, j) in &pairs {
            let (o, n) = (format!("/paragraphs/{i}"), format!("/paragraphs/{j}"));
            let (ot, nt) = (text_of(&pa[i]), text_of(&na[j]));
            let text_changed = ot != nt;
            if text_changed {
                let ops = diff_text(ot, nt);
                self.both(
                    Channel::Content,
                    "paragraph_text",
                    format!("{o}/text"),
                    format!("{n}/text"),
                )
                .opcodes = Some(ops);
            }
            self.field(Channel::Style, "paragraph_style", &o, &n, "style_name");
            self.field(Channel::Format, "alignment", &o, &n, "alignment");
            for k in ["before_pt", "after_pt", "line"] {
                self.field(
                    Channel::Format,
                    "spacing",
                    &format!("{o}/spacing"),
                    &format!("{n}/spacing"),
                    k,
                );
            }
            for k in ["left_pt", "right_pt", "first_line_pt"] {
                self.field(
                    Channel::Format,
                    "indentation",
                    &format!("{o}/indentation"),
                    &format!("{n}/indentation"),
                    k,
                );
            }
            self.field(
                Channel::Structural,
                "image_refs",
                &o,
                &n,
                "embedded_image_refs",
            );
            self.runs(&o, &n, text_changed);
        }
    }

    fn unpaired(
        &mut self,
        channel: Channel,
        noun: &str,
        base: &str,
        n_old: usize,
        n_new: usize,
        pairs: &[(usize, usize)],
    ) {
        let mut old_seen = vec![false; n_old];
        let mut new_seen = vec![false; n_new];
        for &(i, j) in pairs {
            old_seen[i] = true;
            new_seen[j] = true;
        }
        for (i, _) in old_seen.iter().enumerate().filter(|(_, s)| !**s) {
            self.push(
                channel,
                &format!("{noun}_removed"),
                Some(format!("{base}/{i}")),
                None,
            );
        }
        for (j, _) in new_seen.iter().enumerate().filter(|(_, s)| !**s) {
            self.push(
                channel,
                &format!("{noun}_added"),
                None,
                Some(format!("{base}/{j}")),
            );
        }
    }

    fn tables(&mut self) {
        let (pt, nt) = (&self.prev.tables, &self.next.tables);
        let joined = |t: &crate::doc::TableElement| {
            t.cells
                .iter()
                .flatten()
                .map(|c| c.text.as_str())
                .collect::<Vec<_>>()
                .join("\u{1f}")
        };
        let (pj, nj): (Vec<String>, Vec<String>) = (
            pt.iter().map(joined).collect(),
            nt.iter().map(joined).collect(),
        );
        let pairs = align(pt.len(), nt.len(), |i, j| similarity(&pj[i], &nj[j]));
        self.unpaired(
            Channel::Structural,
            "table",
            "/tables",
            pt.len(),
            nt.len(),
            &pairs,
        );
        for &(i, j) in &pairs {
            let (o, n) = (format!("/tables/{i}"), format!("/tables/{j}"));
            self.field(Channel::Table, "dimension", &o, &n, "row_count");
            self.field(Channel::Table, "dimension", &o, &n, "col_count");
            self.field(Channel::Table, "table_style", &o, &n, "table_style");
            for (key, kind) in [
                ("row_heights_pt", "row_height"),
                ("col_widths_pt", "col_width"),
            ] {
                let (ol, nl) = (
                    arr(&self.p.pointer(&o).expect("paired")[key]).len(),
                    arr(&self.n.pointer(&n).expect("paired")[key]).len(),
                );
                if ol == nl {
                    for k in 0..ol {
                        self.field(
                            Channel::Table,
                            kind,
                            &format!("{o}/{key}"),
                            &format!("{n}/{key}"),
                            &k.to_string(),
                        );
                    }
                } else {
                    self.field(Channel::Table, kind, &o, &n, key);
                }
            }
            let (a, b) = (&pt[i], &nt[j]);
            let (rows, cols) = (a.row_count.max(b.row_count), a.col_count.max(b.col_count));
            for r in 0..rows {
                for c in 0..cols {
                    let pc = a.cells.get(r).and_then(|row| row.get(c));
                    let nc = b.cells.get(r).and_then(|row| row.get(c));
                    let (oc, ncp) = (format!("{o}/cells/{r}/{c}"), format!("{n}/cells/{r}/{c}"));
                    match (pc, nc) {
                        (Some(x), Some(y)) => {
                            let text_changed = x.text != y.text;
                            if text_changed {
                                let ops = diff_text(&x.text, &y.text);
                                self.both(
                                    Channel::Content,
                                    "cell_text",
                                    format!("{oc}/text"),
                                    format!("{ncp}/text"),
                                )
                                .opcodes = Some(ops);
                            }
                            let (sx, sy) = (cell_signature(x, r, c), cell_signature(y, r, c));
                            if sx != sy {
                                self.both(
                                    Channel::Table,
                                    "cell_signature",
                                    oc.clone(),
                                    ncp.clone(),
                                )
                                .note = Some(format!("{sx} -> {sy}"));
                            }
                            self.runs(&oc, &ncp, text_changed);
                        }
                        (Some(_), None) => {
                            self.push(Channel::Table, "cell_removed", Some(oc), None);
                        }
                        (None, Some(_)) => {
                            self.push(Channel::Table, "cell_added", None, Some(ncp));
                        }
                        (None, None) => {}
                    }
                }
            }
        }
    }

    fn images(&mut self) {
        let (pa, na) = (arr(&self.p["images"]), arr(&self.n["images"]));
        let same_shape = |x: &Value, y: &Value| {
            ["width_pt", "height_pt", "chart"]
                .iter()
                .all(|k| x.get(k) == y.get(k))
        };
        let pairs = align(pa.len(), na.len(), |i, j| {
            if same_shape(&pa[i], &na[j]) {
                1.0
            } else {
                0.0
            }
        });
        self.unpaired(
            Channel::Structural,
            "image",
            "/images",
            pa.len(),
            na.len(),
            &pairs,
        );
        for &(i, j) in &pairs {
            let (o, n) = (format!("/images/{i}"), format!("/images/{j}"));
            for k in [
                "host_paragraph_index",
                "host_text_run_index",
                "image_sequence_index",
            ] {
                self.field(Channel::Structural, "image_position", &o, &n, k);
            }
            for k in ["width_pt", "height_pt"] {
                self.field(Channel::Structural, "image_size", &o, &n, k);
            }
            self.field(Channel::Structural, "chart", &o, &n, "chart");
        }
    }

    fn indexed_list(&mut self, channel: Channel, kind: &str, base: &str) {
        let pl = arr(self.p.pointer(base).unwrap_or(&Value::Null)).len();
        let nl = arr(self.n.pointer(base).unwrap_or(&Value::Null)).len();
        for k in 0..pl.min(nl) {
            self.field(
                channel,
                &format!("{kind}_modified"),
                base,
                base,
                &k.to_string(),
            );
        }
        for k in nl..pl {
            self.push(
                channel,
                &format!("{kind}_removed"),
                Some(format!("{base}/{k}")),
                None,
            );
        }
        for k in pl..nl {
            self.push(
                channel,
                &format!("{kind}_added"),
                None,
                Some(format!("{base}/{k}")),
            );
        }
    }

    fn page_layout(&mut self) {
        self.indexed_list(Channel::Structural, "header", "/page_layout/headers");
        self.indexed_list(Channel::Structural, "footer", "/page_layout/footers");
        for k in ["page_numbers", "watermark", "toc_present"] {
            self.field(Channel::Structural, k, "/page_layout", "/page_layout", k);
        }
    }

    /// Lists of special elements. Same length: compare by position. Otherwise
    /// report the multiset difference so index shifts do not hide real edits.
    fn special(&mut self, key: &str, noun: &str) {
        let base = format!("/interactive/{key}");
        let (pa, na) = (
            arr(&self.p["interactive"][key]),
            arr(&self.n["interactive"][key]),
        );
        if pa.len() == na.len() {
            for k in 0..pa.len() {
                self.field(
                    Channel::Hyperlink,
                    &format!("{noun}_modified"),
                    &base,
                    &base,
                    &k.to_string(),
                );
            }
            return;
        }
        let mut used = vec![false; na.len()];
        let mut removed = Vec::new();
        for (i, x) in pa.iter().enumerate() {
            match (0..na.len()).find(|&j| !used[j] && na[j] == *x) {
                Some(j) => used[j] = true,
                None => removed.push(i),
            }
        }
        for i in removed {
            self.push(
                Channel::Hyperlink,
                &format!("{noun}_removed"),
                Some(format!("{base}/{i}")),
                None,
            );
        }
        for j in (0..na.len()).filter(|&j| !used[j]) {
            self.push(
                Channel::Hyperlink,
                &format!("{noun}_added"),
                None,
                Some(format!("{base}/{j}")),
            );
        }
    }

    fn interactive(&mut self) {
        self.special("hyperlinks", "hyperlink");
        self.special("bookmarks", "bookmark");
        self.special("line_breaks", "line_break");
        self.special("page_breaks", "page_break");
    }

    fn styles(&mut self) {
        let (ps, ns) = (&self.prev.styles, &self.next.styles);
        for (i, s) in ps.iter().enumerate() {
            match ns.iter().position(|t| t.style_name == s.style_name) {
                Some(j) => {
                    let (o, n) = (format!("/styles/{i}"), format!("/styles/{j}"));
                    if self.p.pointer(&o) != self.n.pointer(&n) {
                        self.both(Channel::Style, "style_definition", o, n);
                    }
                }
                None => {
                    self.push(
                        Channel::Style,
                        "style_removed",
                        Some(format!("/styles/{i}")),
                        None,
                    );
                }
            }
        }
        for (j, s) in ns.iter().enumerate() {
            if !ps.iter().any(|t| t.style_name == s.style_name) {
                self.push(
                    Channel::Style,
                    "style_added",
                    None,
                    Some(format!("/styles/{j}")),
                );
            }
        }
    }
}

/// Six-channel change record between two snapshots.
pub fn analyze_change(prev: &DocumentState, next: &DocumentState) -> StateDelta {
    let (p, n) = (canonical_value(prev), canonical_value(next));
    let mut b = Builder {
        prev,
        next,
        p: &p,
        n: &n,
        delta: StateDelta::default(),
    };
    b.doc_info();
    b.paragraphs();
    b.tables();
    b.images();
    b.page_layout();
    b.interactive();
    b.styles();
    // Anything the channel walkers cannot attribute (e.g. a reordered style
    // list) still has to show up, or an empty delta would lie.
    if b.delta.len() == 0 && p != n {
        b.push(
            Channel::Structural,
            "unclassified",
            Some(String::new()),
            Some(String::new()),
        );
    }
    let mut delta = b.delta;
    delta.is_empty = delta.len() == 0;
    delta
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn align_skips_inserted_item() {
        let a = ["x", "y", "z"];
        let b = ["x", "new", "y", "z"];
        let pairs = align(a.len(), b.len(), |i, j| similarity(a[i], b[j]));
        assert_eq!(pairs, vec![(0, 0), (1, 2), (2, 3)]);
    }

    #[test]
    fn align_equal_lengths_by_index() {
        assert_eq!(align(2, 2, |_, _| 0.0), vec![(0, 0), (1, 1)]);
    }
}
