use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Duration;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::Serialize;

use riskprop::engine::{actors_for_users, run, ActorConfig, Partitioner, RunSetup, StopCriteria};
use riskprop::experiment::{bench, efficiency_sweep, node_max_scores, runtime_fit, sample_sources, BenchConfig};
use riskprop::graph::{build_graph, ScoreSet, TemporalGraph, UserId};
use riskprop::io;
use riskprop::partition::DEFAULT_IMBALANCE;
use riskprop::reachability::{default_alphas, default_gammas, reachability_sweep, InitReference};
use riskprop::stats::{median, spearman};
use riskprop::synth::{generate, GraphKind, SynthConfig, DEFAULT_DAYS, DEFAULT_P_HIGH};
use riskprop::{Error, Result, DEFAULT_SEED, DEFAULT_T_NOW};

#[derive(Parser)]
#[command(name = "riskprop", version, about = "Actor-based risk propagation over temporal contact graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic contact graph and risk scores.
    Generate(GenerateArgs),
    /// Convert a SocioPatterns contact file into contacts and scores.
    Ingest(IngestArgs),
    /// Propagate risk and write exposure scores and run metrics.
    Run(RunArgs),
    /// Estimated and actual message reachability per source.
    Reach(ReachArgs),
    /// Reachability (and optionally efficiency) over a send-tolerance by
    /// transmission-rate grid.
    Sweep(SweepArgs),
    /// Runtime and message counts over a range of synthetic graph sizes.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SeedArgs {
    /// Random seed.
    #[arg(long, env = "RISKPROP_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Reference current time, in seconds.
    #[arg(long, default_value_t = DEFAULT_T_NOW, allow_hyphen_values = true)]
    t_now: i64,
}

#[derive(Args)]
struct GenerateArgs {
    /// Graph model: rgg or csfg.
    #[arg(long, default_value = "rgg")]
    graph: GraphKind,
    #[arg(long, default_value_t = 1000)]
    users: usize,
    /// Probability that a user is high risk.
    #[arg(long, default_value_t = DEFAULT_P_HIGH)]
    p_high: f64,
    /// Days of score and contact history.
    #[arg(long, default_value_t = DEFAULT_DAYS)]
    days: u32,
    #[command(flatten)]
    seed: SeedArgs,
    #[arg(long, default_value = "contacts.csv")]
    contacts: PathBuf,
    #[arg(long, default_value = "scores.csv")]
    scores: PathBuf,
}

#[derive(Args)]
struct IngestArgs {
    /// Whitespace-separated `t i j` rows.
    input: PathBuf,
    #[arg(long, default_value = "contacts.csv")]
    contacts: PathBuf,
    /// Also generate one risk score per participant, dated a day before t_now.
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Raw-id to user-id mapping.
    #[arg(long)]
    id_map: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_P_HIGH)]
    p_high: f64,
    #[command(flatten)]
    seed: SeedArgs,
}

#[derive(Args, Clone, Copy)]
struct ConfigArgs {
    /// Transmission rate.
    #[arg(long, default_value_t = 0.8)]
    alpha: f64,
    /// Send tolerance.
    #[arg(long, default_value_t = 0.6)]
    gamma: f64,
    /// Score time constant, in days.
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    /// Floor applied to magnitudes before taking logarithms.
    #[arg(long, default_value_t = 1e-7)]
    epsilon: f64,
    /// Days a score may postdate a contact and still be sent over it.
    #[arg(long, default_value_t = 2.0)]
    buffer_days: f64,
    /// Days of scores (and contacts) considered.
    #[arg(long, default_value_t = 14.0)]
    horizon_days: f64,
}

impl From<ConfigArgs> for ActorConfig {
    fn from(a: ConfigArgs) -> Self {
        ActorConfig {
            alpha: a.alpha,
            gamma: a.gamma,
            tau: a.tau,
            epsilon: a.epsilon,
            buffer_days: a.buffer_days,
            horizon_days: a.horizon_days,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ActorsArg {
    Auto,
    Fixed(usize),
}

impl FromStr for ActorsArg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(ActorsArg::Auto);
        }
        match s.parse() {
            Ok(0) | Err(_) => Err(format!("expected `auto` or a positive integer, got `{s}`")),
            Ok(k) => Ok(ActorsArg::Fixed(k)),
        }
    }
}

impl fmt::Display for ActorsArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActorsArg::Auto => f.write_str("auto"),
            ActorsArg::Fixed(k) => write!(f, "{k}"),
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PartitionerArg {
    BfsGrow,
    RoundRobin,
}

#[derive(Args)]
struct EngineArgs {
    /// Number of actors; `auto` uses 1 below 1000 users and 2 otherwise.
    #[arg(long, default_value = "auto")]
    actors: ActorsArg,
    #[arg(long, value_enum, default_value = "bfs-grow")]
    partitioner: PartitionerArg,
    /// Allowed block overweight for bfs-grow.
    #[arg(long, default_value_t = DEFAULT_IMBALANCE)]
    imbalance: f64,
    /// Use this `user_id,actor_index` assignment instead of partitioning.
    #[arg(long)]
    partition_in: Option<PathBuf>,
    /// Write the assignment used.
    #[arg(long)]
    partition_out: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
    /// Per-actor run-time limit, in seconds.
    #[arg(long, default_value_t = 3600.0)]
    max_duration: f64,
    /// Consecutive non-updating messages before an actor stops; 0 disables
    /// [default: 10 x users].
    #[arg(long)]
    early_stop: Option<u64>,
    /// Idle seconds before an actor stops; forced to 0 with one actor.
    #[arg(long, default_value_t = 3.0)]
    timeout: f64,
    /// Also stop every actor once no message is left anywhere.
    #[arg(long)]
    quiescence: bool,
    #[command(flatten)]
    seed: SeedArgs,
}

impl EngineArgs {
    fn setup(&self, users: usize) -> Result<RunSetup> {
        let actors = match self.actors {
            ActorsArg::Auto => actors_for_users(users),
            ActorsArg::Fixed(k) => k,
        };
        let timeout = if actors == 1 { 0.0 } else { self.timeout };
        let stop = StopCriteria {
            max_duration: Some(seconds(self.max_duration, "max-duration")?),
            early_stop: match self.early_stop {
                Some(0) => None,
                Some(m) => Some(m),
                None => Some(10 * users as u64),
            },
            timeout: Some(seconds(timeout, "timeout")?),
            quiescence: self.quiescence,
        };
        let partitioner = match &self.partition_in {
            Some(path) => Partitioner::Import(io::read_partition(path)?),
            None => match self.partitioner {
                PartitionerArg::BfsGrow => Partitioner::BfsGrow {
                    imbalance: self.imbalance,
                },
                PartitionerArg::RoundRobin => Partitioner::RoundRobin,
            },
        };
        let mut setup = RunSetup::new(actors, stop, self.seed.t_now);
        setup.partitioner = partitioner;
        setup.config = self.config.into();
        setup.contact_expiry_days = Some(setup.config.horizon_days);
        setup.seed = self.seed.seed;
        Ok(setup)
    }
}

fn seconds(value: f64, flag: &str) -> Result<Duration> {
    Duration::try_from_secs_f64(value).map_err(|_| Error::Config(format!("--{flag} must be a non-negative number of seconds")))
}

#[derive(Args)]
struct InputArgs {
    #[arg(long, default_value = "contacts.csv")]
    contacts: PathBuf,
    #[arg(long, default_value = "scores.csv")]
    scores: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long, default_value = "exposures.csv")]
    exposures: PathBuf,
    #[arg(long, default_value = "metrics.json")]
    metrics: PathBuf,
}

#[derive(Clone, Copy, Debug)]
enum ReferenceArg {
    Mean,
    MinReached,
    Fixed(f64),
}

impl FromStr for ReferenceArg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "mean" => Ok(ReferenceArg::Mean),
            "min-reached" => Ok(ReferenceArg::MinReached),
            _ => s
                .parse()
                .map(ReferenceArg::Fixed)
                .map_err(|_| format!("expected `mean`, `min-reached` or a magnitude, got `{s}`")),
        }
    }
}

impl From<ReferenceArg> for InitReference {
    fn from(r: ReferenceArg) -> Self {
        match r {
            ReferenceArg::Mean => InitReference::MeanAll,
            ReferenceArg::MinReached => InitReference::MinReached,
            ReferenceArg::Fixed(v) => InitReference::Fixed(v),
        }
    }
}

#[derive(Args)]
struct ReachCommon {
    #[command(flatten)]
    input: InputArgs,
    /// Source users (comma separated); defaults to a sample.
    #[arg(long, value_delimiter = ',')]
    sources: Vec<u32>,
    /// Number of sources drawn when none are listed.
    #[arg(long, default_value_t = 100)]
    sample: usize,
    /// Destination initial message for the estimate: mean, min-reached or a
    /// magnitude.
    #[arg(long, default_value = "mean")]
    init_reference: ReferenceArg,
    #[arg(long, default_value = "sweep.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct ReachArgs {
    #[command(flatten)]
    common: ReachCommon,
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    seed: SeedArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: ReachCommon,
    /// Send tolerances [default: 0.1 to 1.0 in steps of 0.1].
    #[arg(long, value_delimiter = ',')]
    gammas: Vec<f64>,
    /// Transmission rates [default: 0.1 to 0.9 in steps of 0.1].
    #[arg(long, value_delimiter = ',')]
    alphas: Vec<f64>,
    /// Quartile summary as JSON.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Also run the engine per grid cell and write normalized updates,
    /// messages and runtime here.
    #[arg(long)]
    efficiency: Option<PathBuf>,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value = "rgg")]
    graph: GraphKind,
    #[arg(long, default_value_t = 100)]
    users_from: usize,
    #[arg(long, default_value_t = 10_000)]
    users_to: usize,
    #[arg(long, default_value_t = 100)]
    step: usize,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    /// Stop runs at quiescence rather than after the idle timeout.
    #[arg(long)]
    quiescence: bool,
    #[command(flatten)]
    seed: SeedArgs,
    #[arg(long, default_value = "bench.csv")]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() || e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => e.exit(),
        Err(e) => {
            // Keep usage errors to one line; clap appends a `--help` hint.
            let text = e.to_string();
            eprintln!("{}", text.lines().next().unwrap_or("error: invalid arguments"));
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Ingest(a) => cmd_ingest(a),
        Command::Run(a) => cmd_run(a),
        Command::Reach(a) => cmd_reach(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_generate(a: GenerateArgs) -> Result<()> {
    let config = SynthConfig {
        users: a.users,
        kind: a.graph,
        p_high: a.p_high,
        days: a.days,
        t_now: a.seed.t_now,
        seed: a.seed.seed,
    };
    let data = generate(&config)?;
    io::write_contacts(&a.contacts, &data.contacts)?;
    io::write_scores(&a.scores, &data.scores)?;
    println!(
        "{} graph: {} users, {} contacts, {} scored users",
        a.graph,
        a.users,
        data.contacts.len(),
        data.scores.len()
    );
    Ok(())
}

fn cmd_ingest(a: IngestArgs) -> Result<()> {
    let ingested = io::ingest_sociopatterns(&a.input, a.seed.t_now)?;
    if ingested.self_loops > 0 {
        warn!("skipped {} self-contact rows", ingested.self_loops);
    }
    io::write_contacts(&a.contacts, &ingested.contacts)?;
    if let Some(path) = &a.id_map {
        io::write_id_map(path, &ingested.ids)?;
    }
    if let Some(path) = &a.scores {
        if !(0.0..=1.0).contains(&a.p_high) {
            return Err(Error::Config("--p-high must lie in [0, 1]".into()));
        }
        let scores = io::gen_realworld_scores(ingested.ids.users(), a.seed.t_now, a.p_high, a.seed.seed);
        io::write_scores(path, &scores)?;
    }
    println!("{} users, {} contacts", ingested.ids.len(), ingested.contacts.len());
    Ok(())
}

fn load(input: &InputArgs) -> Result<(Vec<riskprop::graph::Contact>, ScoreSet)> {
    Ok((io::read_contacts(&input.contacts)?, io::read_scores(&input.scores)?))
}

fn user_count(contacts: &[riskprop::graph::Contact]) -> usize {
    let mut users: Vec<UserId> = contacts.iter().flat_map(|c| [c.user_a, c.user_b]).collect();
    users.sort_unstable();
    users.dedup();
    users.len()
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let (contacts, scores) = load(&a.input)?;
    let setup = a.engine.setup(user_count(&contacts))?;
    let out = run(&contacts, &scores, &setup)?;
    report_run(&out);
    io::write_exposures(&a.exposures, &out.exposures)?;
    io::write_metrics(&a.metrics, &out.metrics)?;
    if let Some(path) = &a.engine.partition_out {
        write_assignment(path, &out.graph, out.partition.assignment())?;
    }
    println!(
        "{} users on {} actors: {} updates, {} messages, {:.3} s",
        out.graph.user_count(),
        out.partition.actors(),
        out.metrics.updates,
        out.metrics.messages_sent,
        out.metrics.wall_runtime_seconds
    );
    Ok(())
}

fn report_run(out: &riskprop::engine::RunOutput) {
    let r = &out.build_report;
    info!(
        "graph: {} self contacts, {} expired, {} duplicates dropped",
        r.self_loops, r.expired, r.duplicates
    );
    if !out.defaulted_users.is_empty() {
        info!("{} users had no score inside the horizon", out.defaulted_users.len());
    }
    if !out.ignored_users.is_empty() {
        warn!("{} scored users have no contacts and were ignored", out.ignored_users.len());
    }
}

fn write_assignment(path: &Path, graph: &TemporalGraph, assignment: &[u32]) -> Result<()> {
    let map = graph.users().iter().copied().zip(assignment.iter().copied()).collect();
    io::write_partition(path, &map)
}

#[derive(Serialize)]
struct SweepSummary {
    rows: usize,
    ratio_q1: Option<f64>,
    ratio_median: Option<f64>,
    ratio_q3: Option<f64>,
    cells: Vec<CellSummary>,
}

#[derive(Serialize)]
struct CellSummary {
    gamma: f64,
    alpha: f64,
    median_ratio: Option<f64>,
    median_depth: Option<f64>,
    estimated: Option<f64>,
}

fn reach_graph(common: &ReachCommon, config: &ActorConfig, t_now: i64, seed: u64) -> Result<(TemporalGraph, ScoreSet, Vec<UserId>)> {
    let (contacts, scores) = load(&common.input)?;
    let (graph, _) = build_graph(&contacts, t_now, Some(config.horizon_days))?;
    let sources = if common.sources.is_empty() {
        sample_sources(&graph, common.sample, seed)
    } else {
        common.sources.iter().map(|&u| UserId(u)).collect()
    };
    Ok((graph, scores, sources))
}

fn cmd_reach(a: ReachArgs) -> Result<()> {
    let config: ActorConfig = a.config.into();
    config.validate()?;
    let (graph, scores, sources) = reach_graph(&a.common, &config, a.seed.t_now, a.seed.seed)?;
    let max_scores = node_max_scores(&graph, &scores, a.seed.t_now, config.horizon_days);
    let result = reachability_sweep(
        &graph,
        &max_scores,
        &sources,
        &[config.gamma],
        &[config.alpha],
        a.common.init_reference.into(),
        &config,
    )?;
    io::write_sweep(&a.common.out, &result.rows)?;
    print_quartiles(&result.rows);
    Ok(())
}

fn print_quartiles(rows: &[riskprop::reachability::SweepRow]) {
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    match riskprop::stats::quartiles(&ratios) {
        Some(q) => println!("{} rows; ratio quartiles {:.3} {:.3} {:.3}", rows.len(), q.q1, q.q2, q.q3),
        None => println!("{} rows; no finite ratios", rows.len()),
    }
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let gammas = if a.gammas.is_empty() { default_gammas() } else { a.gammas.clone() };
    let alphas = if a.alphas.is_empty() { default_alphas() } else { a.alphas.clone() };
    let config: ActorConfig = a.engine.config.into();
    let (graph, scores, sources) = reach_graph(&a.common, &config, a.engine.seed.t_now, a.engine.seed.seed)?;
    let max_scores = node_max_scores(&graph, &scores, a.engine.seed.t_now, config.horizon_days);
    let result = reachability_sweep(
        &graph,
        &max_scores,
        &sources,
        &gammas,
        &alphas,
        a.common.init_reference.into(),
        &config,
    )?;
    io::write_sweep(&a.common.out, &result.rows)?;
    print_quartiles(&result.rows);

    if let Some(path) = &a.summary {
        let cells = gammas
            .iter()
            .flat_map(|&g| alphas.iter().map(move |&al| (g, al)))
            .map(|(gamma, alpha)| {
                let cell: Vec<_> = result.rows.iter().filter(|r| r.gamma == gamma && r.alpha == alpha).collect();
                let ratios: Vec<f64> = cell.iter().map(|r| r.ratio).collect();
                let depths: Vec<f64> = cell.iter().map(|r| r.actual_depth as f64).collect();
                CellSummary {
                    gamma,
                    alpha,
                    median_ratio: median(&ratios),
                    median_depth: median(&depths),
                    estimated: cell.first().map(|r| r.estimated),
                }
            })
            .collect();
        let q = result.ratio_quartiles;
        let summary = SweepSummary {
            rows: result.rows.len(),
            ratio_q1: q.map(|q| q.q1),
            ratio_median: q.map(|q| q.q2),
            ratio_q3: q.map(|q| q.q3),
            cells,
        };
        write_json(path, &summary)?;
    }

    if let Some(path) = &a.efficiency {
        let (contacts, scores) = load(&a.common.input)?;
        let setup = a.engine.setup(graph.user_count())?;
        let rows = efficiency_sweep(&contacts, &scores, &setup, &gammas, &alphas)?;
        io::write_records(path, &rows)?;
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    std::fs::write(path, text + "\n").map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    if a.step == 0 || a.users_from < 2 || a.users_from > a.users_to || a.reps == 0 {
        return Err(Error::Config(
            "need 2 <= users-from <= users-to, step > 0 and reps > 0".into(),
        ));
    }
    let config = BenchConfig {
        kind: a.graph,
        users: (a.users_from..=a.users_to).step_by(a.step).collect(),
        reps: a.reps,
        seed: a.seed.seed,
        t_now: a.seed.t_now,
        quiescence: a.quiescence,
    };
    let rows = bench(&config, |r| {
        info!(
            "n={} rep={} contacts={} runtime={:.3}s messages={}",
            r.n, r.rep, r.contacts, r.runtime, r.messages
        )
    })?;
    io::write_records(&a.out, &rows)?;

    if let Some(fit) = runtime_fit(&rows) {
        println!(
            "runtime ~ {:.3e} s/contact (se {:.1e}), R^2 {:.3}",
            fit.slope, fit.slope_se, fit.r_squared
        );
    }
    let mut medians: Vec<(f64, f64)> = Vec::new();
    for &n in &config.users {
        let group: Vec<_> = rows.iter().filter(|r| r.n == n).collect();
        let contacts: Vec<f64> = group.iter().map(|r| r.contacts as f64).collect();
        let runtime: Vec<f64> = group.iter().map(|r| r.runtime).collect();
        if let (Some(c), Some(t)) = (median(&contacts), median(&runtime)) {
            medians.push((c, t));
        }
    }
    let (c, t): (Vec<f64>, Vec<f64>) = medians.into_iter().unzip();
    if let Some(rho) = spearman(&c, &t) {
        println!("Spearman rho of median runtime vs contacts: {rho:.3}");
    }
    Ok(())
}
