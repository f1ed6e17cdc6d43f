//! Hand-built fixtures: the running table-header example.

use std::sync::Arc;

use serde_json::json;

use super::replay::fill_expected;
use super::session::{SessionRecord, Turn, SESSION_VERSION};
use crate::doc::Document;
use crate::phrasing::Lang;
use crate::planner::{Annotations, ScriptedPlanner, StepOverride};
use crate::registry::{ApiCall, Registry};

pub const HEADER_EXAMPLE_ID: &str = "header-example";
pub const HEADER_EXAMPLE_INSTRUCTION: &str =
    "Add headers 'Dept', 'Staff', 'Age' and fill the second row with 'Sales', '12', '35'.";

/// A titled document with an empty 3x3 table and one instruction that adds
/// a header row and fills the row below it.
pub fn header_example() -> SessionRecord {
    let reg = Registry::shared();
    let mut doc = Document::new();
    for call in [
        ApiCall::from_json("add_paragraph", json!({"text": "Staff overview"})),
        ApiCall::from_json("add_table", json!({"rows": 3, "cols": 3})),
    ] {
        reg.execute(&call, &mut doc)
            .expect("fixture calls are valid");
    }
    let mut annotated = vec![ApiCall::from_json(
        "add_table_header",
        json!({"table_index": 0, "headers": ["Dept", "Staff", "Age"]}),
    )];
    for (col, text) in ["Sales", "12", "35"].into_iter().enumerate() {
        annotated.push(ApiCall::from_json(
            "set_cell_text",
            json!({"table_index": 0, "row": 1, "col": col, "text": text}),
        ));
    }
    let mut s = SessionRecord {
        session_version: SESSION_VERSION,
        session_id: HEADER_EXAMPLE_ID.to_string(),
        language: Lang::En,
        initial_state: doc.extract_state().expect("fixture state is valid"),
        turns: vec![Turn {
            turn_id: 1,
            instruction: HEADER_EXAMPLE_INSTRUCTION.to_string(),
            sub_instructions: Vec::new(),
            annotated_apis: annotated,
            expected_state: None,
        }],
    };
    fill_expected(&mut s).expect("fixture replays");
    s
}

/// Scripted planner for [`header_example`] whose first step goes wrong twice:
/// it merges the header row, then the row below, before switching API.
pub fn header_example_planner(annotations: Arc<Annotations>) -> ScriptedPlanner {
    let merge =
        |row: u32| ApiCall::from_json("merge_cell_table", json!({"table_index": 0, "row": row}));
    let o = StepOverride {
        first: Some(merge(0)),
        revision: Some(merge(1)),
        regeneration: Some(ApiCall::from_json(
            "add_table_header",
            json!({"table_index": 0, "headers": ["Dept", "Staff", "Age"], "row": 0}),
        )),
    };
    ScriptedPlanner::new(annotations).with_override(HEADER_EXAMPLE_ID, 1, 0, o)
}
