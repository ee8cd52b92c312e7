//! Command-line driver: scenario runs, tactic comparisons and an ordering
//! lab over pose-graph files.
//!
//! Exit codes: 0 on success, 2 for usage and configuration errors, 3 for
//! failures while running.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use pivotbsp::factorgraph::load_pose_graph;
use pivotbsp::ordering::{constrained_min_degree, OrderingConstraint, PatternGraph};
use pivotbsp::simworld::{parse_tactics, run_scenario, ScenarioConfig, ScenarioRun};
use pivotbsp::{Error, SqrtBelief, StateOrder, Tactic, VariableId};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "pivotbsp", version, about = "Predictive variable ordering for belief-space planning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write sessions.csv and summary.json.
    Run(ScenarioArgs),
    /// Run one scenario under several tactics and print their totals.
    Compare(ScenarioArgs),
    /// Factorize a pose-graph file under a chosen variable order.
    Graph(GraphArgs),
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated, e.g. `baseline,pivotmaxstar`.
    #[arg(long)]
    pub tactics: Option<String>,
    #[arg(long, value_name = "BOOL")]
    pub keep_order: Option<bool>,
    #[arg(long, value_name = "BOOL")]
    pub multi_hyp: Option<bool>,
    #[arg(long)]
    pub branch_k: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OrderKind {
    Identity,
    Mindeg,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// g2o-style file with VERTEX_SE2 and EDGE_SE2 records.
    pub file: PathBuf,
    #[arg(long, value_enum, default_value = "identity", conflicts_with = "order_file")]
    pub order: OrderKind,
    /// Whitespace-separated vertex ids giving the elimination order.
    #[arg(long)]
    pub order_file: Option<PathBuf>,
}

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    fn runtime(e: Error) -> Self {
        Failure {
            code: EXIT_RUNTIME,
            message: e.to_string(),
        }
    }
}

/// Reads the config file and applies command-line overrides.
pub fn load_config(args: &ScenarioArgs) -> Result<ScenarioConfig, Failure> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| Failure::config(format!("cannot read config {}: {e}", args.config.display())))?;
    let mut cfg = ScenarioConfig::from_kv(&text)
        .map_err(|e| Failure::config(format!("{}: {e}", args.config.display())))?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(t) = &args.tactics {
        cfg.tactics = parse_tactics(t).map_err(|e| Failure::config(e.to_string()))?;
    }
    if let Some(k) = args.keep_order {
        cfg.keep_order = k;
    }
    if let Some(m) = args.multi_hyp {
        cfg.multi_hyp = m;
    }
    if let Some(b) = args.branch_k {
        cfg.branch_k = b;
    }
    cfg.validate().map_err(|e| Failure::config(e.to_string()))?;
    Ok(cfg)
}

fn write_outputs(run: &ScenarioRun, out: &Path, with_summary: bool) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::runtime(Error::Io(e));
    fs::create_dir_all(out).map_err(io)?;
    let file = fs::File::create(out.join("sessions.csv")).map_err(io)?;
    run.write_csv(std::io::BufWriter::new(file)).map_err(Failure::runtime)?;
    if with_summary {
        fs::write(out.join("summary.json"), run.summary_json()).map_err(io)?;
    }
    Ok(())
}

pub fn cmd_run(args: &ScenarioArgs) -> Result<String, Failure> {
    let cfg = load_config(args)?;
    let run = run_scenario(&cfg).map_err(Failure::runtime)?;
    write_outputs(&run, &args.out, true)?;
    Ok(format!(
        "{} poses, {} planning sessions; wrote {}",
        run.summary.poses,
        run.summary.planning_sessions,
        args.out.display()
    ))
}

pub fn cmd_compare(args: &ScenarioArgs) -> Result<String, Failure> {
    let cfg = load_config(args)?;
    if cfg.tactics.len() < 2 {
        return Err(Failure::config("compare needs at least two tactics"));
    }
    let run = run_scenario(&cfg).map_err(Failure::runtime)?;
    write_outputs(&run, &args.out, true)?;
    Ok(run.table())
}

fn read_order_file(path: &Path, vars: &[VariableId]) -> Result<StateOrder, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read order file {}: {e}", path.display())))?;
    let seq = text
        .split_whitespace()
        .map(|tok| {
            let id: u32 = tok
                .parse()
                .map_err(|_| Failure::config(format!("bad vertex id {tok:?} in order file")))?;
            vars.iter()
                .copied()
                .find(|v| v.id == id)
                .ok_or_else(|| Failure::config(format!("order file names unknown vertex {id}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    StateOrder::new(seq).map_err(|e| Failure::config(e.to_string()))
}

pub fn cmd_graph(args: &GraphArgs) -> Result<String, Failure> {
    let file = fs::File::open(&args.file)
        .map_err(|e| Failure::runtime(Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", args.file.display())))))?;
    let graph = load_pose_graph(BufReader::new(file)).map_err(Failure::runtime)?;
    if graph.variables().is_empty() {
        return Err(Failure::runtime(Error::InvalidUpdate("pose graph has no vertices".into())));
    }
    let vars = graph.variables();
    let order = match (&args.order_file, args.order) {
        (Some(path), _) => read_order_file(path, vars)?,
        (None, OrderKind::Identity) => StateOrder::new(vars.to_vec()).map_err(Failure::runtime)?,
        (None, OrderKind::Mindeg) => {
            let pattern = PatternGraph::from_factors(vars, graph.factors()).map_err(Failure::runtime)?;
            let perm = constrained_min_degree(&pattern, &OrderingConstraint::uniform(vars.len()));
            StateOrder::new(perm.into_iter().map(|i| vars[i]).collect()).map_err(Failure::runtime)?
        }
    };
    let (b, flops) = SqrtBelief::build_counted(&graph, order).map_err(Failure::runtime)?;
    Ok(format!(
        "variables {}\nfactors {}\nnnz_R {}\nbuild_fma {}\nbuild_rotations {}",
        vars.len(),
        graph.factors().len(),
        b.nnz(),
        flops.fma,
        flops.rotations
    ))
}

/// Parses `args` (program name first), runs the command, prints its
/// output, and returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let outcome = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Graph(a) => cmd_graph(a),
    };
    match outcome {
        Ok(text) => {
            println!("{text}");
            EXIT_OK
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

/// Tactic names accepted by `--tactics`.
pub fn tactic_names() -> Vec<String> {
    Tactic::standard_set().iter().map(Tactic::to_string).collect()
}
