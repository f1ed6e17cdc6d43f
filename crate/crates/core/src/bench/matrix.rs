//! Configuration matrices, run directories and report tables.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::eval::{evaluate, AgentConfig, Difficulty, EvalError, Evaluation, RunReport};
use super::judge::JudgeMode;
use super::session::SessionRecord;
use super::ValidatorKind;
use crate::orchestrator::RollbackPolicy;
use crate::planner::PlannerStrategy;

/// Gate thresholds swept by default.
pub const SWEEP_THRESHOLDS: [f64; 5] = [0.4, 0.5, 0.6, 0.7, 0.8];

/// One row of a matrix report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub label: String,
    pub strategy: PlannerStrategy,
    pub policy: RollbackPolicy,
    pub seed: u64,
    pub threshold: f64,
    pub judge: JudgeMode,
    pub validator: ValidatorKind,
    pub sessions: usize,
    pub instructions: usize,
    pub report: RunReport,
}

/// File-system friendly name of a configuration.
pub fn cell_label(c: &AgentConfig) -> String {
    let policy = if c.strategy.is_upfront() {
        "none".to_string()
    } else {
        c.policy.to_string()
    };
    let policy: String = policy
        .chars()
        .map(|ch| {
            if ch.is_ascii_alphanumeric() || ch == '_' {
                ch
            } else {
                '-'
            }
        })
        .collect();
    format!(
        "{}_{}_seed{}_t{:.2}",
        c.strategy,
        policy.trim_end_matches('-'),
        c.seed,
        c.threshold
    )
}

impl CellSummary {
    pub fn new(c: &AgentConfig, e: &Evaluation) -> Self {
        CellSummary {
            label: cell_label(c),
            strategy: c.strategy,
            policy: if c.strategy.is_upfront() {
                RollbackPolicy::NONE
            } else {
                c.policy
            },
            seed: c.seed,
            threshold: c.threshold,
            judge: c.judge,
            validator: c.validator,
            sessions: e.sessions.len(),
            instructions: e.turns.len(),
            report: e.report.clone(),
        }
    }
}

/// The rollback ablation: every policy for each seed.
pub fn ablation_configs(base: &AgentConfig, seeds: &[u64]) -> Vec<AgentConfig> {
    let mut out = Vec::new();
    for &seed in seeds {
        for policy in RollbackPolicy::ablation() {
            out.push(AgentConfig {
                policy,
                seed,
                ..base.clone()
            });
        }
    }
    out
}

/// The three baselines and the full stepwise agent for each seed.
pub fn baseline_configs(base: &AgentConfig, seeds: &[u64]) -> Vec<AgentConfig> {
    let mut out = Vec::new();
    for &seed in seeds {
        for strategy in [
            PlannerStrategy::RetrievalOnly,
            PlannerStrategy::ReasoningOnly,
            PlannerStrategy::Hybrid,
            PlannerStrategy::Noisy,
        ] {
            let policy = if strategy.is_upfront() {
                RollbackPolicy::NONE
            } else {
                base.policy
            };
            out.push(AgentConfig {
                strategy,
                policy,
                seed,
                ..base.clone()
            });
        }
    }
    out
}

/// The same agent at each gate threshold.
pub fn threshold_configs(base: &AgentConfig, thresholds: &[f64]) -> Vec<AgentConfig> {
    thresholds
        .iter()
        .map(|&threshold| AgentConfig {
            threshold,
            ..base.clone()
        })
        .collect()
}

/// Evaluate every configuration on the same sessions, sessions running on
/// at most `jobs` threads. Results come back in configuration order.
pub fn run_matrix(
    sessions: &[SessionRecord],
    configs: &[AgentConfig],
    jobs: usize,
) -> Result<Vec<(AgentConfig, Evaluation)>, EvalError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| {
        configs
            .iter()
            .map(|c| evaluate(sessions, c).map(|e| (c.clone(), e)))
            .collect()
    })
}

pub fn summaries(results: &[(AgentConfig, Evaluation)]) -> Vec<CellSummary> {
    results
        .iter()
        .map(|(c, e)| CellSummary::new(c, e))
        .collect()
}

const BANDS: [Difficulty; 3] = [Difficulty::S, Difficulty::M, Difficulty::H];

fn band(r: &RunReport, d: Difficulty) -> String {
    r.iacc_by_difficulty
        .get(&d)
        .map_or_else(String::new, |v| format!("{v:.2}"))
}

pub fn to_csv(cells: &[CellSummary]) -> String {
    let mut s = String::from(
        "label,strategy,policy,seed,threshold,sessions,instructions,iacc,sacc,\
         apis_per_instruction,apis_per_session,tokens_per_instruction,tokens_per_session,\
         iacc_s,iacc_m,iacc_h\n",
    );
    for c in cells {
        let r = &c.report;
        let _ = write!(
            s,
            "{},{},{},{},{:.2},{},{},{:.2},{:.2},{:.3},{:.3},{:.1},{:.1}",
            c.label,
            c.strategy,
            c.policy,
            c.seed,
            c.threshold,
            c.sessions,
            c.instructions,
            r.iacc,
            r.sacc,
            r.apis_per_instruction,
            r.apis_per_session,
            r.tokens_per_instruction,
            r.tokens_per_session,
        );
        for d in BANDS {
            let _ = write!(s, ",{}", band(r, d));
        }
        s.push('\n');
    }
    s
}

/// Aligned plain-text table for terminals.
pub fn format_table(cells: &[CellSummary]) -> String {
    let mut s = format!(
        "{:<16} {:<18} {:>5} {:>5} {:>7} {:>7} {:>7} {:>9} {:>7} {:>7} {:>7}\n",
        "strategy", "policy", "seed", "tau", "iACC", "sACC", "#APIs", "#tokens", "S", "M", "H"
    );
    for c in cells {
        let r = &c.report;
        let _ = writeln!(
            s,
            "{:<16} {:<18} {:>5} {:>5.2} {:>7.2} {:>7.2} {:>7.2} {:>9.0} {:>7} {:>7} {:>7}",
            c.strategy.as_str(),
            c.policy.to_string(),
            c.seed,
            c.threshold,
            r.iacc,
            r.sacc,
            r.apis_per_instruction,
            r.tokens_per_instruction,
            band(r, Difficulty::S),
            band(r, Difficulty::M),
            band(r, Difficulty::H),
        );
    }
    s
}

#[derive(Serialize)]
struct ReportFile<'a> {
    cells: &'a [CellSummary],
}

/// A fresh `runs/<unix-seconds>` directory under `root`.
pub fn new_run_dir(root: &Path) -> io::Result<PathBuf> {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut dir = root.join(secs.to_string());
    let mut n = 1;
    while dir.exists() {
        dir = root.join(format!("{secs}-{n}"));
        n += 1;
    }
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// Write `report.json`, `report.csv` and the session traces. With a single
/// configuration traces go to `traces/`, otherwise to `<label>/traces/`.
pub fn write_run(
    dir: &Path,
    results: &[(AgentConfig, Evaluation)],
) -> io::Result<Vec<CellSummary>> {
    fs::create_dir_all(dir)?;
    let cells = summaries(results);
    let mut json =
        serde_json::to_string_pretty(&ReportFile { cells: &cells }).map_err(io::Error::other)?;
    json.push('\n');
    fs::write(dir.join("report.json"), json)?;
    fs::write(dir.join("report.csv"), to_csv(&cells))?;
    for (cell, (_, e)) in cells.iter().zip(results) {
        let traces = if results.len() == 1 {
            dir.join("traces")
        } else {
            dir.join(&cell.label).join("traces")
        };
        fs::create_dir_all(&traces)?;
        for t in &e.traces {
            fs::write(traces.join(format!("{}.json", t.session_id)), t.to_json())?;
        }
    }
    Ok(cells)
}
