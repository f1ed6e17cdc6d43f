//! Six-channel change analysis between consecutive document states.

mod analyze;
mod matcher;
mod signature;
mod summary;

pub use analyze::{align, analyze_change, canonical_value, Change, Channel, StateDelta};
pub use matcher::{apply_opcodes, diff_text, similarity, OpTag, Opcode, SequenceMatcher};
pub use signature::{cell_signature, CellSignature};
pub use summary::{render_summary, summarize_delta, SummaryMode, NO_CHANGES};
