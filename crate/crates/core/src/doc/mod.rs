//! In-memory document model, state extraction and canonical serialization.

mod canonical;
mod document;
mod state;

pub use canonical::{
    canonical_json, canonical_tree, load_state, to_canonical_string, value_to_canonical_string,
};
pub use document::{Document, SnapshotHandle};
pub(crate) use document::{Link, Paragraph, Shape, Table};
pub use state::*;

use thiserror::Error;

/// The live document could not be turned into a valid snapshot.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateParseError {
    #[error("state invariant violated: {0}")]
    Invariant(String),
    #[error("unsupported state_version {0}")]
    Version(u32),
    #[error("malformed state JSON: {0}")]
    Json(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DocError {
    #[error("snapshot handle belongs to a different document")]
    InvalidHandle,
}

pub fn new_document() -> Document {
    Document::new()
}

pub fn extract_state(doc: &Document) -> Result<DocumentState, StateParseError> {
    doc.extract_state()
}

/// 64-bit FNV-1a digest of the canonical JSON; handy as a compact state fingerprint.
pub fn state_digest(state: &DocumentState) -> u64 {
    crate::hash::fnv1a64(&canonical_json(state))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_info() {
        let s = new_document().extract_state().unwrap();
        assert_eq!(
            s.doc_info,
            DocInfo {
                total_paragraphs_count: 0,
                total_tables_count: 0,
                total_sections_count: 1,
                has_header_flag: false,
                has_footer_flag: false,
            }
        );
        assert!(s.styles.iter().any(|st| st.style_name == "Normal"));
        assert_eq!(s.styles.len(), 5);
    }

    #[test]
    fn new_document_is_deterministic() {
        let a = canonical_json(&new_document().extract_state().unwrap());
        let b = canonical_json(&new_document().extract_state().unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn bold_middle_gives_three_runs() {
        let mut doc = new_document();
        doc.body
            .paragraphs
            .push(Paragraph::new("normal bold normal", "Normal"));
        doc.body.paragraphs[0].format_range(7, 11, |f| f.bold = true);
        let s = doc.extract_state().unwrap();
        let runs = &s.paragraphs[0].runs;
        assert_eq!(runs.len(), 3);
        assert_eq!(runs[1].text, "bold");
        assert!(runs[1].format.bold && !runs[0].format.bold && !runs[2].format.bold);
    }

    #[test]
    fn round_trip_through_json() {
        let mut doc = new_document();
        doc.body.paragraphs.push(Paragraph::new("hello", "Normal"));
        doc.body.tables.push(Table::new(2, 3, "Table Grid"));
        let s = doc.extract_state().unwrap();
        assert_eq!(s.tables[0].row_count, 2);
        assert_eq!(s.tables[0].col_count, 3);
        assert_eq!(s.tables[0].cells.iter().flatten().count(), 6);
        let bytes = canonical_json(&s);
        let back = load_state(&bytes).unwrap();
        assert_eq!(canonical_json(&back), bytes);
        let rebuilt = Document::from_state(&back)
            .unwrap()
            .extract_state()
            .unwrap();
        assert_eq!(canonical_json(&rebuilt), bytes);
    }

    #[test]
    fn snapshot_restore_is_idempotent() {
        let mut doc = new_document();
        let before = canonical_json(&doc.extract_state().unwrap());
        let h = doc.snapshot();
        doc.body.paragraphs.push(Paragraph::new("x", "Normal"));
        doc.restore(&h).unwrap();
        doc.restore(&h).unwrap();
        assert_eq!(canonical_json(&doc.extract_state().unwrap()), before);
    }

    #[test]
    fn foreign_handle_is_rejected() {
        let a = new_document();
        let mut b = new_document();
        assert_eq!(b.restore(&a.snapshot()), Err(DocError::InvalidHandle));
    }

    #[test]
    fn broken_live_document_fails_extraction() {
        let mut doc = new_document();
        doc.body.paragraphs.push(Paragraph::new("x", "Normal"));
        doc.force_spacing_unchecked(0, -4.0);
        assert!(matches!(
            doc.extract_state(),
            Err(StateParseError::Invariant(_))
        ));
    }

    #[test]
    fn near_equal_floats_serialize_identically() {
        let mut doc = new_document();
        doc.body.tables.push(Table::new(1, 1, "Table Grid"));
        doc.body.tables[0].col_widths_pt[0] = 12.3456;
        let a = canonical_json(&doc.extract_state().unwrap());
        doc.body.tables[0].col_widths_pt[0] = 12.346;
        let b = canonical_json(&doc.extract_state().unwrap());
        assert_eq!(a, b);
    }
}
