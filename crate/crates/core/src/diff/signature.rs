use std::fmt;

use serde::{Deserialize, Serialize};

use crate::doc::Cell;
use crate::hash::Fnv64;

const NO_ANCHOR: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellSignature(pub u64);

impl fmt::Display for CellSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

/// Hash of content ∥ structure ∥ position ∥ merge for one cell.
pub fn cell_signature(cell: &Cell, row: usize, col: usize) -> CellSignature {
    let (row_span, col_span) = cell
        .merge
        .map(|m| (m.row_span, m.col_span))
        .unwrap_or((1, 1));
    let (ar, ac) = cell
        .merge
        .map(|m| (m.anchor_row as u64, m.anchor_col as u64))
        .unwrap_or((NO_ANCHOR, NO_ANCHOR));
    let mut h = Fnv64::new();
    h.field(cell.text.as_bytes());
    h.u64(row_span as u64)
        .u64(col_span as u64)
        .u64(cell.is_header as u64);
    h.u64(row as u64).u64(col as u64);
    h.u64(ar).u64(ac);
    CellSignature(h.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doc::MergeInfo;

    #[test]
    fn position_and_merge_matter() {
        let c = Cell {
            text: "A".into(),
            ..Cell::default()
        };
        assert_eq!(cell_signature(&c, 0, 0), cell_signature(&c, 0, 0));
        assert_ne!(cell_signature(&c, 0, 0), cell_signature(&c, 0, 1));
        let mut m = c.clone();
        m.merge = Some(MergeInfo {
            anchor_row: 0,
            anchor_col: 0,
            row_span: 1,
            col_span: 2,
        });
        assert_ne!(cell_signature(&c, 0, 0), cell_signature(&m, 0, 0));
    }
}
