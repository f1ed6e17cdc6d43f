//! Benchmark harness: sessions, ground truth, judging, evaluation and matrices.

pub mod eval;
pub mod fixtures;
pub mod generate;
pub mod judge;
pub mod matrix;
pub mod replay;
pub mod session;

pub use eval::{
    evaluate, evaluate_instruction_level, evaluate_session_level, prepare_sessions,
    stratify_difficulty, AgentConfig, Difficulty, EvalError, Evaluation, RunReport, SessionResult,
    TurnResult, ValidatorKind,
};
pub use fixtures::{
    header_example, header_example_planner, HEADER_EXAMPLE_ID, HEADER_EXAMPLE_INSTRUCTION,
};
pub use generate::{generate_session, generate_sessions, random_call, random_document, GenProfile};
pub use judge::{canonical_equal, judge_equivalence, model_equal, strict_equal, JudgeMode};
pub use matrix::{
    ablation_configs, baseline_configs, cell_label, format_table, new_run_dir, run_matrix,
    summaries, threshold_configs, to_csv, write_run, CellSummary, SWEEP_THRESHOLDS,
};
pub use replay::{fill_expected, pre_states, replay_annotated};
pub use session::{load_dir, load_path, SessionError, SessionRecord, Turn, SESSION_VERSION};
