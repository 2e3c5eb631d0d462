//! `sem` — generate, simulate, validate, and chart service-entity mapping runs.
//!
//! Subcommands:
//!
//! * `generate` — write a topology or workload artifact from config parameters.
//! * `run` — simulate a request sequence and write all run artifacts.
//! * `validate` — replay a run directory, re-checking every accepted decision
//!   against the substrate as it evolves.
//! * `oracle` — cross-check the solvers against brute-force references on
//!   tiny random instances.
//! * `plot` — draw SVG line charts from one or more metrics CSV files.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation failure, 3 I/O failure.
//! Logging goes to stderr, controlled by the `SEM_LOG` environment variable.

mod plot;

use std::fmt;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sem_core::config::{ConfigError, RunConfig, SolverKind, TopologySource, WorkloadSource};
use sem_core::decision::{allocate, release, validate_decision};
use sem_core::model::generate_random_cpn;
use sem_core::oracle::oracle_sweep;
use sem_core::search::{InitStrategy, SearchTrace};
use sem_core::sim::{
    generate_workload, read_workload, render_metrics_csv, request_seed, run, write_workload,
    AbsSolver, DecisionRecord, MetricsSnapshot, RequestSolver, RwBfsSolver, Scenario, SimError,
    WorkloadRequest,
};
use sem_core::CpnTopology;

/// Seed streams, so the topology, the workload, and the per-request solver
/// draws stay independent under one run seed.
const TOPOLOGY_STREAM: u64 = 1;
const WORKLOAD_STREAM: u64 = 2;
const SOLVER_STREAM: u64 = 3;

// ---------------------------------------------------------------------------
// Errors and exit codes
// ---------------------------------------------------------------------------

#[derive(Debug)]
enum CliError {
    /// The command line asked for something contradictory (exit 1).
    Usage(String),
    /// Input data failed a check: bad config, malformed file, violated
    /// constraint, disagreeing oracle (exit 2).
    Validation(String),
    /// The filesystem got in the way (exit 3).
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Validation(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

fn read_to_string(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, bytes)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))
}

// ---------------------------------------------------------------------------
// Argument surface
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "sem",
    version,
    about = "Service-entity mapping: solver, simulator, and reporting tools"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a topology or workload artifact from config parameters.
    Generate(GenerateArgs),
    /// Simulate a run and write its artifacts into a directory.
    Run(RunArgs),
    /// Replay a run directory and re-check every accepted decision.
    Validate(ValidateArgs),
    /// Cross-check solvers against brute-force references on tiny instances.
    Oracle(OracleArgs),
    /// Draw SVG charts from metrics CSV files.
    Plot(PlotArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ArtifactArg {
    Topology,
    Workload,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Abs,
    Rwbfs,
}

impl From<SolverArg> for SolverKind {
    fn from(a: SolverArg) -> Self {
        match a {
            SolverArg::Abs => SolverKind::Abs,
            SolverArg::Rwbfs => SolverKind::Rwbfs,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    /// Frontier growth from a resource-weighted seed node.
    Default,
    /// Adopt the ranked breadth-first baseline mapping, then jitter.
    Rwbfs,
}

impl From<InitArg> for InitStrategy {
    fn from(a: InitArg) -> Self {
        match a {
            InitArg::Default => InitStrategy::Frontier,
            InitArg::Rwbfs => InitStrategy::RankedBfs,
        }
    }
}

#[derive(clap::Args)]
struct GenerateArgs {
    /// Which artifact to write.
    #[arg(value_enum)]
    artifact: ArtifactArg,
    /// Run config JSON; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Run config JSON; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the config's solver.
    #[arg(long, value_enum)]
    solver: Option<SolverArg>,
    /// Override the config's swarm initialization.
    #[arg(long, value_enum)]
    init: Option<InitArg>,
    /// Force single-threaded, bitwise-reproducible search scheduling.
    #[arg(long)]
    deterministic: bool,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for the run artifacts (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Also write per-request search traces (trace.jsonl).
    #[arg(long)]
    trace: bool,
}

#[derive(clap::Args)]
struct ValidateArgs {
    /// A directory previously written by `sem run`.
    #[arg(long)]
    run: PathBuf,
}

#[derive(clap::Args)]
struct OracleArgs {
    /// Number of random instances to check.
    #[arg(long, default_value_t = 20)]
    instances: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct PlotArgs {
    /// Metrics CSV files; each becomes one series per chart.
    #[arg(long = "input", required = true)]
    inputs: Vec<PathBuf>,
    /// Directory for the SVG files (created if missing).
    #[arg(long)]
    out: PathBuf,
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

fn load_config(path: Option<&Path>) -> Result<RunConfig, CliError> {
    match path {
        Some(p) => Ok(RunConfig::load(p)?),
        None => Ok(RunConfig::default()),
    }
}

fn resolve_topology(config: &RunConfig) -> Result<CpnTopology, CliError> {
    match &config.topology {
        TopologySource::File { path } => CpnTopology::parse(&read_to_string(Path::new(path))?)
            .map_err(|e| CliError::Validation(format!("{path}: {e}"))),
        TopologySource::Random(params) => {
            generate_random_cpn(params, request_seed(config.seed, TOPOLOGY_STREAM))
                .map_err(|e| CliError::Validation(e.to_string()))
        }
    }
}

fn resolve_workload(config: &RunConfig) -> Result<Vec<WorkloadRequest>, CliError> {
    match &config.workload {
        WorkloadSource::File { path } => {
            let file = fs::File::open(path)
                .map_err(|e| CliError::Io(format!("cannot read {path}: {e}")))?;
            Ok(read_workload(BufReader::new(file))?)
        }
        WorkloadSource::Random(params) => {
            Ok(generate_workload(params, request_seed(config.seed, WORKLOAD_STREAM))?)
        }
    }
}

fn build_solver(config: &RunConfig) -> Box<dyn RequestSolver> {
    match config.solver {
        SolverKind::Abs => Box::new(AbsSolver {
            params: config.search.clone(),
            frag: config.frag,
            tolerance: config.partition.tolerance(),
            init: config.init,
            deterministic: config.deterministic,
        }),
        SolverKind::Rwbfs => Box::new(RwBfsSolver),
    }
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

fn cmd_generate(args: GenerateArgs) -> Result<(), CliError> {
    let mut config = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    match args.artifact {
        ArtifactArg::Topology => {
            let TopologySource::Random(_) = &config.topology else {
                return Err(CliError::Usage(
                    "the config's topology source is a file; nothing to generate".into(),
                ));
            };
            write_file(&args.out, resolve_topology(&config)?.to_text())?;
        }
        ArtifactArg::Workload => {
            let WorkloadSource::Random(_) = &config.workload else {
                return Err(CliError::Usage(
                    "the config's workload source is a file; nothing to generate".into(),
                ));
            };
            let workload = resolve_workload(&config)?;
            let mut buf = Vec::new();
            write_workload(&mut buf, &workload)?;
            write_file(&args.out, buf)?;
        }
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

/// Everything a finished run claims about itself, in one JSON document.
/// Field values are pure functions of the config and seed under
/// `deterministic`, so identical invocations produce identical bytes.
#[derive(Serialize)]
struct RunSummary<'a> {
    solver: &'a str,
    seed: u64,
    arrived: u64,
    accepted: u64,
    solver_panics: u64,
    conservation_ok: bool,
    final_metrics: Option<&'a MetricsSnapshot>,
    config: &'a RunConfig,
}

#[derive(Serialize)]
struct TraceLine<'a> {
    req_id: u64,
    trace: &'a SearchTrace,
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let mut config = load_config(args.config.as_deref())?;
    if let Some(solver) = args.solver {
        config.solver = solver.into();
    }
    if let Some(init) = args.init {
        config.init = init.into();
    }
    if args.deterministic {
        config.deterministic = true;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.validate()?;

    let topology = resolve_topology(&config)?;
    let workload = resolve_workload(&config)?;
    create_dir(&args.out)?;
    write_file(&args.out.join("topology.txt"), topology.to_text())?;
    let mut buf = Vec::new();
    write_workload(&mut buf, &workload)?;
    write_file(&args.out.join("workload.jsonl"), buf)?;

    let mut solver = build_solver(&config);
    let scenario = Scenario {
        topology,
        workload,
        profit: config.profit,
        k_paths: config.routing.k_paths,
        base_seed: request_seed(config.seed, SOLVER_STREAM),
        collect_traces: args.trace,
    };
    let output = run(scenario, solver.as_mut())?;
    if !output.conservation_ok {
        return Err(CliError::Validation(
            "internal invariant broken: resources not fully restored after the drain".into(),
        ));
    }

    let mut decisions = String::new();
    for record in &output.decisions {
        decisions.push_str(&serde_json::to_string(record).expect("decision records serialize"));
        decisions.push('\n');
    }
    write_file(&args.out.join("decisions.jsonl"), decisions)?;
    write_file(&args.out.join("metrics.csv"), render_metrics_csv(&output.records))?;
    if args.trace {
        let mut traces = String::new();
        for (req_id, trace) in &output.traces {
            let line = TraceLine { req_id: *req_id, trace };
            traces.push_str(&serde_json::to_string(&line).expect("traces serialize"));
            traces.push('\n');
        }
        write_file(&args.out.join("trace.jsonl"), traces)?;
    }

    let last = output.snapshots.last();
    let summary = RunSummary {
        solver: solver.name(),
        seed: config.seed,
        arrived: last.map_or(0, |s| s.arrived),
        accepted: last.map_or(0, |s| s.accepted),
        solver_panics: output.solver_panics,
        conservation_ok: output.conservation_ok,
        final_metrics: last,
        config: &config,
    };
    let mut summary_json =
        serde_json::to_string_pretty(&summary).expect("summary serializes");
    summary_json.push('\n');
    write_file(&args.out.join("summary.json"), summary_json)?;

    println!(
        "{}: accepted {}/{} ({:.3}); final profit {:.3}; artifacts in {}",
        solver.name(),
        summary.accepted,
        summary.arrived,
        last.map_or(0.0, |s| s.acceptance_ratio),
        last.map_or(0.0, |s| s.profit),
        args.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

fn read_decisions(path: &Path) -> Result<Vec<DecisionRecord>, CliError> {
    let text = read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: DecisionRecord = serde_json::from_str(line).map_err(|e| {
            CliError::Validation(format!("{} line {}: {e}", path.display(), i + 1))
        })?;
        out.push(record);
    }
    Ok(out)
}

fn cmd_validate(args: ValidateArgs) -> Result<(), CliError> {
    let mut topology = CpnTopology::parse(&read_to_string(&args.run.join("topology.txt"))?)
        .map_err(|e| CliError::Validation(format!("topology.txt: {e}")))?;
    let workload_path = args.run.join("workload.jsonl");
    let file = fs::File::open(&workload_path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", workload_path.display())))?;
    let workload = read_workload(BufReader::new(file))?;
    let decisions = read_decisions(&args.run.join("decisions.jsonl"))?;

    let requests: std::collections::BTreeMap<u64, &WorkloadRequest> =
        workload.iter().map(|r| (r.id, r)).collect();
    let mut seen = std::collections::BTreeSet::new();
    for d in &decisions {
        if !seen.insert(d.req_id) {
            return Err(CliError::Validation(format!("duplicate decision for request {}", d.req_id)));
        }
        let Some(req) = requests.get(&d.req_id) else {
            return Err(CliError::Validation(format!(
                "decision references request {} absent from the workload",
                d.req_id
            )));
        };
        if d.arrival_time != req.arrival_time || d.decision.entity_id != d.req_id {
            return Err(CliError::Validation(format!(
                "decision for request {} disagrees with the workload timing or id",
                d.req_id
            )));
        }
    }

    // Chronological replay: (time, departures-before-arrivals, id).
    let mut events: Vec<(f64, u8, usize)> = Vec::with_capacity(decisions.len() * 2);
    for (i, d) in decisions.iter().enumerate() {
        events.push((d.arrival_time, 1, i));
        events.push((d.departure_time, 0, i));
    }
    events.sort_by(|a, b| {
        a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(decisions[a.2].req_id.cmp(&decisions[b.2].req_id))
    });

    for (_, class, i) in events {
        let d = &decisions[i];
        let entity = &requests[&d.req_id].entity;
        if class == 1 {
            let report = validate_decision(&topology, entity, &d.decision);
            if !report.is_ok() {
                for v in &report.violations {
                    eprintln!("request {}: constraint {} violated: {v:?}", d.req_id, v.constraint_index());
                }
                return Err(CliError::Validation(format!(
                    "decision for request {} violates {} constraint(s)",
                    d.req_id,
                    report.violations.len()
                )));
            }
            allocate(&mut topology, entity, &d.decision)
                .map_err(|e| CliError::Validation(format!("request {}: {e}", d.req_id)))?;
        } else {
            release(&mut topology, entity, &d.decision)
                .map_err(|e| CliError::Validation(format!("request {}: {e}", d.req_id)))?;
        }
    }

    if topology.cpu_used() != 0 || topology.bw_used() != 0 {
        return Err(CliError::Validation(
            "resources not exactly restored after replaying all departures".into(),
        ));
    }
    println!(
        "OK: replayed {} accepted decisions; every constraint holds; resources restored exactly",
        decisions.len()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// oracle
// ---------------------------------------------------------------------------

fn cmd_oracle(args: OracleArgs) -> Result<(), CliError> {
    let report = oracle_sweep(args.instances, args.seed)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let mut json = serde_json::to_string_pretty(&report).expect("sweep report serializes");
    json.push('\n');
    match &args.out {
        Some(path) => write_file(path, &json)?,
        None => print!("{json}"),
    }
    if !report.all_pass {
        return Err(CliError::Validation(format!(
            "oracle sweep found a disagreement ({} instances, seed {})",
            args.instances, args.seed
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// plot
// ---------------------------------------------------------------------------

struct MetricsTable {
    name: String,
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl MetricsTable {
    fn load(path: &Path) -> Result<Self, CliError> {
        let text = read_to_string(path)?;
        let mut lines = text.lines();
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| CliError::Validation(format!("{}: empty file", path.display())))?
            .split(',')
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<f64> = line
                .split(',')
                .map(|cell| match cell {
                    "true" => Ok(1.0),
                    "false" => Ok(0.0),
                    other => other.parse::<f64>().map_err(|e| {
                        CliError::Validation(format!("{} line {}: {e}", path.display(), i + 2))
                    }),
                })
                .collect::<Result<_, _>>()?;
            if row.len() != header.len() {
                return Err(CliError::Validation(format!(
                    "{} line {}: {} cells against {} header columns",
                    path.display(),
                    i + 2,
                    row.len(),
                    header.len()
                )));
            }
            rows.push(row);
        }
        let name = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
        Ok(MetricsTable { name, header, rows })
    }

    fn series(&self, x: &str, y: &str) -> Result<plot::Series, CliError> {
        let col = |label: &str| {
            self.header.iter().position(|h| h == label).ok_or_else(|| {
                CliError::Validation(format!("{}: missing column '{label}'", self.name))
            })
        };
        let (xi, yi) = (col(x)?, col(y)?);
        Ok(plot::Series {
            name: self.name.clone(),
            points: self.rows.iter().map(|r| (r[xi], r[yi])).collect(),
        })
    }
}

fn cmd_plot(args: PlotArgs) -> Result<(), CliError> {
    let tables =
        args.inputs.iter().map(|p| MetricsTable::load(p)).collect::<Result<Vec<_>, _>>()?;
    if tables.iter().all(|t| t.rows.is_empty()) {
        log::warn!("no data rows in any input; charts will only show axes");
    }
    create_dir(&args.out)?;
    let charts: [(&str, &str, &str); 4] = [
        ("cum_acceptance", "Acceptance ratio", "acceptance_ratio.svg"),
        ("lt_ar", "Long-term average revenue", "lt_avg_revenue.svg"),
        ("lt_rc_ratio", "Long-term revenue/cost ratio", "lt_rc_ratio.svg"),
        ("cu_ratio", "CPU utilization", "cu_ratio.svg"),
    ];
    for (column, title, file) in charts {
        let series =
            tables.iter().map(|t| t.series("t", column)).collect::<Result<Vec<_>, _>>()?;
        write_file(&args.out.join(file), plot::render_chart(title, "time", column, &series))?;
    }
    println!("wrote {} charts to {}", charts.len(), args.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("SEM_LOG")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version displays are successes; real usage errors are 1.
            let code = u8::from(e.use_stderr());
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Run(args) => cmd_run(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Plot(args) => cmd_plot(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
