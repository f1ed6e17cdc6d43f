use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use docflow::bench::{
    ablation_configs, baseline_configs, format_table, generate_sessions, load_path, new_run_dir,
    prepare_sessions, run_matrix, threshold_configs, write_run, AgentConfig, GenProfile, JudgeMode,
    SessionRecord, ValidatorKind, SWEEP_THRESHOLDS,
};
use docflow::diff::{analyze_change, render_summary};
use docflow::doc::{load_state, to_canonical_string, Document};
use docflow::intent::{IntentClassifier, RuleClassifier};
use docflow::llm::{HttpChatModel, SharedModel, DEFAULT_TIMEOUT_SECS};
use docflow::orchestrator::{
    Orchestrator, RollbackPolicy, TurnContext, DEFAULT_SESSION_TIMEOUT_SECS,
};
use docflow::planner::{ModelPlanner, Planner, PlannerStrategy, RulePlanner, STEP_CAP};
use docflow::registry::Registry;
use docflow::validator::{HeuristicValidator, ModelValidator, Validator, DEFAULT_THRESHOLD};

#[derive(Parser)]
#[command(
    name = "docflow",
    version,
    about = "Stepwise document workflows with rollback, and their benchmark"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one agent configuration on a session file or directory
    Run(RunArgs),
    /// Run a configuration matrix (rollback ablation, baselines, gate thresholds)
    Bench(BenchArgs),
    /// Write synthetic sessions
    Generate(GenerateArgs),
    /// Show the changes between two state files
    Diff {
        before: PathBuf,
        after: PathBuf,
        /// Print the full change record as JSON
        #[arg(long)]
        json: bool,
    },
    /// Replay a session's annotated calls and fill in its expected states
    Replay {
        session: PathBuf,
        /// Write the completed session here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Inspect the API registry
    Apis {
        #[command(subcommand)]
        command: ApisCommand,
    },
    /// Inspect the intent classifier
    Intents {
        #[command(subcommand)]
        command: IntentsCommand,
    },
    /// Type instructions and run them against a working document
    Repl(ReplArgs),
}

#[derive(Subcommand)]
enum ApisCommand {
    /// Print every API schema as JSON
    Dump,
}

#[derive(Subcommand)]
enum IntentsCommand {
    /// Rank intent categories for a sub-instruction
    Classify {
        text: String,
        #[arg(long, default_value_t = 3)]
        k: usize,
    },
}

#[derive(Args, Clone)]
struct AgentArgs {
    /// Planner strategy [run: scripted, bench: noisy]
    #[arg(long)]
    strategy: Option<PlannerStrategy>,
    /// none | arg_only | single_round_dual | multi_round(k)
    #[arg(long, default_value = "single_round_dual")]
    policy: RollbackPolicy,
    /// Fault seed for the simulated planners
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    validator_threshold: f64,
    /// oracle | heuristic | model [model for stepwise_model, else oracle]
    #[arg(long)]
    validator: Option<ValidatorKind>,
    /// strict | canonical | model
    #[arg(long, default_value = "canonical")]
    judge_mode: JudgeMode,
    /// Per-instruction probability of an argument fault
    #[arg(long, default_value_t = 0.15)]
    p_wrong_arg: f64,
    /// Per-instruction probability of an API fault
    #[arg(long, default_value_t = 0.10)]
    p_wrong_api: f64,
    #[arg(long, default_value_t = STEP_CAP)]
    step_cap: usize,
    #[arg(long, default_value_t = DEFAULT_TIMEOUT_SECS)]
    llm_timeout_secs: u64,
    #[arg(long, default_value_t = DEFAULT_SESSION_TIMEOUT_SECS)]
    session_timeout_secs: u64,
    /// Worker threads for concurrent sessions
    #[arg(long, default_value_t = 4)]
    jobs: usize,
}

#[derive(Args)]
struct RunArgs {
    /// Session file or directory of session files
    #[arg(long)]
    sessions: PathBuf,
    #[command(flatten)]
    agent: AgentArgs,
    /// Parent of the run directory
    #[arg(long, default_value = "runs")]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Ablation,
    Baselines,
    Thresholds,
    All,
}

#[derive(Args)]
struct BenchArgs {
    /// Sessions to use; generated when absent
    #[arg(long)]
    sessions: Option<PathBuf>,
    /// Number of sessions to generate
    #[arg(long, default_value_t = 50)]
    n: usize,
    #[arg(long, default_value_t = 42)]
    session_seed: u64,
    #[arg(long, value_enum, default_value = "all")]
    suite: Suite,
    /// Fault seeds, comma separated
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    seeds: Vec<u64>,
    /// Gate thresholds for the threshold suite, comma separated
    #[arg(long, value_delimiter = ',')]
    thresholds: Vec<f64>,
    #[command(flatten)]
    agent: AgentArgs,
    #[arg(long, default_value = "runs")]
    out: PathBuf,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 50)]
    n: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value = "sessions")]
    out: PathBuf,
}

#[derive(Args)]
struct ReplArgs {
    /// Start from this state file instead of an empty document
    #[arg(long)]
    state: Option<PathBuf>,
    /// Plan with the configured model endpoint instead of the phrasebook rules
    #[arg(long)]
    model: bool,
    #[arg(long, default_value = "single_round_dual")]
    policy: RollbackPolicy,
    #[arg(long, default_value_t = DEFAULT_TIMEOUT_SECS)]
    llm_timeout_secs: u64,
}

/// Failures that are the caller's fault (bad paths, bad files, missing setup).
struct UsageError(String);

impl<E: std::fmt::Display> From<E> for UsageError {
    fn from(e: E) -> Self {
        UsageError(e.to_string())
    }
}

type CmdResult = Result<ExitCode, UsageError>;

// A closed stdout (e.g. piping into `head`) ends the command quietly.
macro_rules! out {
    ($($t:tt)*) => {
        if write!(io::stdout(), $($t)*).is_err() {
            return Ok(ExitCode::SUCCESS);
        }
    };
}

macro_rules! outln {
    ($($t:tt)*) => {
        if writeln!(io::stdout(), $($t)*).is_err() {
            return Ok(ExitCode::SUCCESS);
        }
    };
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Generate(a) => cmd_generate(a),
        Command::Diff {
            before,
            after,
            json,
        } => cmd_diff(&before, &after, json),
        Command::Replay { session, out } => cmd_replay(&session, out.as_deref()),
        Command::Apis {
            command: ApisCommand::Dump,
        } => cmd_apis_dump(),
        Command::Intents {
            command: IntentsCommand::Classify { text, k },
        } => cmd_classify(&text, k),
        Command::Repl(a) => cmd_repl(a),
    };
    match result {
        Ok(code) => code,
        Err(UsageError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn model_from_env(timeout_secs: u64) -> Result<SharedModel, UsageError> {
    let m = HttpChatModel::from_env(Duration::from_secs(timeout_secs))?;
    Ok(Arc::new(m))
}

fn agent_config(
    a: &AgentArgs,
    default_strategy: PlannerStrategy,
) -> Result<AgentConfig, UsageError> {
    if !(a.validator_threshold > 0.0 && a.validator_threshold < 1.0) {
        return Err(UsageError(
            "--validator-threshold must lie in (0, 1)".into(),
        ));
    }
    for p in [a.p_wrong_arg, a.p_wrong_api] {
        if !(0.0..=1.0).contains(&p) {
            return Err(UsageError("fault probabilities must lie in [0, 1]".into()));
        }
    }
    let strategy = a.strategy.unwrap_or(default_strategy);
    let validator = a
        .validator
        .unwrap_or(if strategy == PlannerStrategy::StepwiseModel {
            ValidatorKind::Model
        } else {
            ValidatorKind::Oracle
        });
    let needs_model = strategy == PlannerStrategy::StepwiseModel
        || validator == ValidatorKind::Model
        || a.judge_mode == JudgeMode::Model;
    let model = if needs_model {
        Some(model_from_env(a.llm_timeout_secs)?)
    } else {
        None
    };
    Ok(AgentConfig {
        strategy,
        policy: a.policy,
        seed: a.seed,
        p_wrong_arg: a.p_wrong_arg,
        p_wrong_api: a.p_wrong_api,
        threshold: a.validator_threshold,
        judge: a.judge_mode,
        validator,
        step_cap: a.step_cap,
        session_timeout: Duration::from_secs(a.session_timeout_secs),
        model,
    })
}

fn load_sessions(path: &Path) -> Result<Vec<SessionRecord>, UsageError> {
    let mut sessions = load_path(path)?;
    if sessions.is_empty() {
        return Err(UsageError(format!(
            "no session files in {}",
            path.display()
        )));
    }
    prepare_sessions(&mut sessions)?;
    Ok(sessions)
}

fn cmd_run(a: RunArgs) -> CmdResult {
    let config = agent_config(&a.agent, PlannerStrategy::Scripted)?;
    let sessions = load_sessions(&a.sessions)?;
    let results = run_matrix(&sessions, &[config], a.agent.jobs)?;
    let dir = new_run_dir(&a.out)?;
    let cells = write_run(&dir, &results)?;
    out!("{}", format_table(&cells));
    outln!("run directory: {}", dir.display());
    let eval = &results[0].1;
    let failures =
        eval.turns.iter().any(|t| !t.success) || eval.sessions.iter().any(|s| !s.success);
    Ok(if failures {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_bench(a: BenchArgs) -> CmdResult {
    let base = agent_config(&a.agent, PlannerStrategy::Noisy)?;
    let sessions = match &a.sessions {
        Some(p) => load_sessions(p)?,
        None => {
            let mut s = generate_sessions(a.n, a.session_seed, &GenProfile::default());
            prepare_sessions(&mut s)?;
            s
        }
    };
    let thresholds = if a.thresholds.is_empty() {
        SWEEP_THRESHOLDS.to_vec()
    } else {
        a.thresholds.clone()
    };
    let mut configs = Vec::new();
    if matches!(a.suite, Suite::Ablation | Suite::All) {
        configs.extend(ablation_configs(&base, &a.seeds));
    }
    if matches!(a.suite, Suite::Baselines | Suite::All) {
        for c in baseline_configs(&base, &a.seeds) {
            if !configs.iter().any(|d| same_cell(&c, d)) {
                configs.push(c);
            }
        }
    }
    if matches!(a.suite, Suite::Thresholds | Suite::All) {
        for &seed in &a.seeds {
            let seeded = AgentConfig {
                seed,
                ..base.clone()
            };
            for c in threshold_configs(&seeded, &thresholds) {
                if !configs.iter().any(|d| same_cell(&c, d)) {
                    configs.push(c);
                }
            }
        }
    }
    let results = run_matrix(&sessions, &configs, a.agent.jobs)?;
    let dir = new_run_dir(&a.out)?;
    let cells = write_run(&dir, &results)?;
    out!("{}", format_table(&cells));
    outln!("run directory: {}", dir.display());
    Ok(ExitCode::SUCCESS)
}

fn same_cell(a: &AgentConfig, b: &AgentConfig) -> bool {
    docflow::bench::cell_label(a) == docflow::bench::cell_label(b)
}

fn cmd_generate(a: GenerateArgs) -> CmdResult {
    if a.n == 0 {
        return Err(UsageError("--n must be at least 1".into()));
    }
    let mut sessions = generate_sessions(a.n, a.seed, &GenProfile::default());
    prepare_sessions(&mut sessions)?;
    std::fs::create_dir_all(&a.out)?;
    for s in &sessions {
        s.save(&a.out.join(format!("{}.json", s.session_id)))?;
    }
    let turns: usize = sessions.iter().map(|s| s.turns.len()).sum();
    let apis: usize = sessions.iter().map(|s| s.api_count()).sum();
    outln!(
        "wrote {} sessions to {} ({:.2} instructions/session, {:.2} APIs/instruction)",
        sessions.len(),
        a.out.display(),
        turns as f64 / sessions.len() as f64,
        apis as f64 / turns as f64
    );
    Ok(ExitCode::SUCCESS)
}

fn read_state(path: &Path) -> Result<docflow::doc::DocumentState, UsageError> {
    let bytes = std::fs::read(path).map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
    load_state(&bytes).map_err(|e| UsageError(format!("{}: {e}", path.display())))
}

fn cmd_diff(before: &Path, after: &Path, json: bool) -> CmdResult {
    let delta = analyze_change(&read_state(before)?, &read_state(after)?);
    if json {
        outln!("{}", serde_json::to_string_pretty(&delta)?);
    } else {
        outln!("{}", render_summary(&delta));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_replay(path: &Path, out: Option<&Path>) -> CmdResult {
    let mut session = SessionRecord::load(path)?;
    docflow::bench::fill_expected(&mut session)?;
    match out {
        Some(p) => session.save(p)?,
        None => out!("{}", session.to_json()),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_apis_dump() -> CmdResult {
    outln!(
        "{}",
        serde_json::to_string_pretty(&Registry::shared().dump_json())?
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_classify(text: &str, k: usize) -> CmdResult {
    if !(1..=8).contains(&k) {
        return Err(UsageError("--k must be within 1..=8".into()));
    }
    let ranking = RuleClassifier::standard().classify(text);
    for (cat, score) in ranking.ranked.iter().take(k) {
        outln!("{}\t{score:.3}", cat.as_str());
    }
    Ok(ExitCode::SUCCESS)
}

const REPL_HELP: &str =
    "commands: :state  :save <path>  :help  :quit; anything else runs as an instruction";

fn cmd_repl(a: ReplArgs) -> CmdResult {
    let mut doc = match &a.state {
        Some(p) => Document::from_state(&read_state(p)?)?,
        None => Document::new(),
    };
    let (planner, validator): (Arc<dyn Planner>, Arc<dyn Validator>) = if a.model {
        let m = model_from_env(a.llm_timeout_secs)?;
        (
            Arc::new(ModelPlanner::new(m.clone())),
            Arc::new(ModelValidator::new(m)),
        )
    } else {
        (Arc::new(RulePlanner), Arc::new(HeuristicValidator))
    };
    let orchestrator = Orchestrator::new(planner, validator, a.policy);
    let mut dialogue: Vec<String> = Vec::new();
    outln!("{REPL_HELP}");
    let stdin = io::stdin();
    loop {
        out!("> ");
        io::stdout().flush()?;
        let mut line = String::new();
        if stdin.lock().read_line(&mut line)? == 0 {
            break;
        }
        let line = line.trim();
        match line
            .split_once(' ')
            .map_or((line, ""), |(c, r)| (c, r.trim()))
        {
            ("", _) => continue,
            (":quit", _) | (":q", _) => break,
            (":help", _) => outln!("{REPL_HELP}"),
            (":state", _) => outln!("{}", to_canonical_string(&doc.extract_state()?)),
            (":save", path) if !path.is_empty() => {
                std::fs::write(path, to_canonical_string(&doc.extract_state()?))?;
                outln!("saved to {path}");
            }
            _ => {
                let before = doc.extract_state()?;
                let turn = TurnContext {
                    session_id: "repl",
                    turn_id: dialogue.len() as u32 + 1,
                    instruction: line,
                    dialogue: &dialogue,
                };
                let trace = orchestrator.run_instruction(turn, &mut doc, None);
                for step in &trace.steps {
                    match (&step.final_call, step.accepted_via, &step.error) {
                        (Some(c), Some(via), _) => {
                            outln!("  {} -> {c} [{via:?}]", step.sub_instruction)
                        }
                        (_, _, Some(e)) => outln!("  {} -> failed: {e}", step.sub_instruction),
                        _ => {}
                    }
                }
                if let Some(e) = &trace.error {
                    outln!("  stopped: {e}");
                }
                outln!(
                    "{}",
                    render_summary(&analyze_change(&before, &doc.extract_state()?))
                );
                dialogue.push(line.to_string());
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
