//! Command-line interface: experiment orchestration, config-file handling,
//! and result serialization with write-then-rename discipline.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::attack::{run_ensemble, AttackStrategy, ExperimentConfig, GridSpec};
use crate::error::{Error, Result};
use crate::graph::SupplyGraph;
use crate::io::{
    atomic_write, census, edges_csv, ensemble_csv, ensemble_svg, ingest, nodes_csv, CensusSummary,
    RunManifest,
};
use crate::pipeline::{
    breakdown_report, convergence_report, fragmentation_report, full_report, ReportConfig,
    DEFAULT_LIMITS,
};
use crate::scale::Scale;
use crate::synth::{gen_configuration_powerlaw, gen_er, gen_supply_chain, SupplyGenParams};
use crate::thresholds::CONVERGENCE_EPSILON;

#[derive(Debug, Parser)]
#[command(
    name = "scnet",
    version,
    about = "Supply chain network robustness analysis",
    disable_help_subcommand = true
)]
struct Cli {
    /// TOML config file supplying defaults (flags win over file values).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Node table CSV (firm_id,name,country,sic,employees,is_msf).
    #[arg(long)]
    nodes: PathBuf,
    /// Edge list CSV (customer_id,supplier_id).
    #[arg(long)]
    edges: PathBuf,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Scales to analyze (comma-separated; default all four).
    #[arg(long, value_delimiter = ',')]
    scales: Vec<Scale>,
    /// Attack strategies (comma-separated; default all four).
    #[arg(long, value_delimiter = ',')]
    strategies: Vec<AttackStrategy>,
    /// Tier depth cap.
    #[arg(long)]
    tiers: Option<u32>,
    /// Realizations per ensemble (default depends on scale and strategy).
    #[arg(long)]
    realizations: Option<u32>,
    /// Master seed for all randomness.
    #[arg(long)]
    seed: Option<u64>,
    /// Maximum removal-grid points per sweep.
    #[arg(long)]
    grid_points: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load a graph and print its census.
    Ingest(InputArgs),
    /// Print the tier distribution table.
    Tiers(InputArgs),
    /// Run one removal ensemble and write curve CSV/JSON (and optional SVG).
    Attack {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        scale: Option<Scale>,
        #[arg(long)]
        strategy: Option<AttackStrategy>,
        #[arg(long)]
        tiers: Option<u32>,
        #[arg(long)]
        realizations: Option<u32>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        grid_points: Option<usize>,
        /// Also render the curves as an SVG.
        #[arg(long)]
        svg: bool,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep tier depths and report the recommended tier count per
    /// (scale, strategy).
    Converge {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        sweep: SweepArgs,
        /// Uniform-distance tolerance.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Report breakdown thresholds at the given ATSR limits.
    Breakdown {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        sweep: SweepArgs,
        /// ATSR limits, comma-separated (default 0.2,0.01).
        #[arg(long, value_delimiter = ',')]
        limits: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Report fragmentation thresholds under random removal per scale.
    Fragment {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic graph and write node/edge CSVs.
    Generate {
        /// Generator: supply, er, or powerlaw.
        #[arg(long, default_value = "supply")]
        kind: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Node count for er/powerlaw kinds.
        #[arg(long)]
        size: Option<usize>,
        /// Mean degree (er kind).
        #[arg(long)]
        mean_degree: Option<f64>,
        /// Degree exponent (powerlaw kind).
        #[arg(long)]
        gamma: Option<f64>,
        /// Minimum degree (powerlaw kind).
        #[arg(long)]
        kmin: Option<u64>,
        /// MSF count (supply kind).
        #[arg(long)]
        msf_count: Option<usize>,
        /// Tier count (supply kind).
        #[arg(long)]
        tiers: Option<u32>,
        /// Mean supplier links per firm (supply kind).
        #[arg(long)]
        mean_suppliers: Option<f64>,
        #[arg(long)]
        out_nodes: PathBuf,
        #[arg(long)]
        out_edges: PathBuf,
    },
    /// Run the full analysis bundle: convergence, breakdown, fragmentation.
    Report {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        limits: Vec<f64>,
        /// Realizations for the fragmentation ensembles.
        #[arg(long)]
        frag_realizations: Option<u32>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// File-supplied defaults; any key absent falls through to the built-in
/// default. Unknown keys are rejected so typos surface as usage errors.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    tiers: Option<u32>,
    realizations: Option<u32>,
    frag_realizations: Option<u32>,
    grid_points: Option<usize>,
    scale: Option<String>,
    strategy: Option<String>,
    scales: Option<Vec<String>>,
    strategies: Option<Vec<String>>,
    epsilon: Option<f64>,
    limits: Option<Vec<f64>>,
}

/// Usage problems exit 1; data problems exit 2.
enum CliError {
    Usage(String),
    Data(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> CliError {
        match e {
            Error::InvalidParameter(_) | Error::InvalidDamping(_) => CliError::Usage(e.to_string()),
            other => CliError::Data(other),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn load_file_config(path: Option<&Path>) -> CliResult<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| usage(format!("bad config {}: {e}", path.display())))
}

fn parse_list<T: FromStr<Err = Error>>(values: &[String], what: &str) -> CliResult<Vec<T>> {
    values
        .iter()
        .map(|s| s.parse().map_err(|e: Error| usage(format!("{what}: {e}"))))
        .collect()
}

/// flags > config file > built-in default.
fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn pick_scales(flags: &[Scale], file: &FileConfig) -> CliResult<Vec<Scale>> {
    if !flags.is_empty() {
        return Ok(flags.to_vec());
    }
    match &file.scales {
        Some(names) => parse_list(names, "scales"),
        None => Ok(Scale::ALL.to_vec()),
    }
}

fn pick_strategies(flags: &[AttackStrategy], file: &FileConfig) -> CliResult<Vec<AttackStrategy>> {
    if !flags.is_empty() {
        return Ok(flags.to_vec());
    }
    match &file.strategies {
        Some(names) => parse_list(names, "strategies"),
        None => Ok(AttackStrategy::ALL.to_vec()),
    }
}

fn report_config(sweep: &SweepArgs, file: &FileConfig) -> CliResult<ReportConfig> {
    let mut cfg = ReportConfig::new(pick(sweep.seed, file.seed, 0));
    cfg.tier_max = pick(sweep.tiers, file.tiers, 10);
    cfg.scales = pick_scales(&sweep.scales, file)?;
    cfg.strategies = pick_strategies(&sweep.strategies, file)?;
    cfg.realizations = sweep.realizations.or(file.realizations);
    cfg.max_grid_points = pick(sweep.grid_points, file.grid_points, GridSpec::DEFAULT_MAX_POINTS);
    Ok(cfg)
}

fn load_graph(input: &InputArgs) -> CliResult<SupplyGraph> {
    Ok(ingest(&input.nodes, &input.edges)?)
}

fn print_census(summary: &CensusSummary) {
    println!("nodes               {}", summary.nodes);
    println!("edges               {}", summary.edges);
    println!("msfs                {}", summary.msfs);
    println!("terminal suppliers  {}", summary.terminal_suppliers);
    println!("missing industry    {}", summary.missing_industry);
    println!("missing country     {}", summary.missing_country);
    println!("missing employees   {}", summary.missing_employees);
}

fn print_tiers(summary: &CensusSummary) {
    println!("tier,firms");
    for (tier, count) in &summary.tiers {
        println!("{tier},{count}");
    }
    if summary.unreachable > 0 {
        println!("unreachable,{}", summary.unreachable);
    }
}

fn manifest_for(
    command: &str,
    seed: u64,
    config: serde_json::Value,
    inputs: &[&Path],
) -> Result<RunManifest> {
    let mut manifest = RunManifest::new(command.to_string(), seed, config);
    for path in inputs {
        manifest.add_input(path)?;
    }
    Ok(manifest)
}

fn write_outputs(out_dir: &Path, files: &[(&str, &[u8])]) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io("create output directory", e))?;
    for (name, bytes) in files {
        atomic_write(&out_dir.join(name), bytes)?;
    }
    Ok(())
}

fn json_bytes<T: serde::Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::io("serialize json", std::io::Error::other(e)))?;
    text.push('\n');
    Ok(text.into_bytes())
}

fn run(cli: Cli) -> CliResult<()> {
    let file = load_file_config(cli.config.as_deref())?;
    match cli.command {
        Command::Ingest(input) => {
            let graph = load_graph(&input)?;
            print_census(&census(&graph));
        }
        Command::Tiers(input) => {
            let graph = load_graph(&input)?;
            print_tiers(&census(&graph));
        }
        Command::Attack {
            input,
            scale,
            strategy,
            tiers,
            realizations,
            seed,
            grid_points,
            svg,
            out,
        } => {
            let graph = load_graph(&input)?;
            let scale = match scale {
                Some(s) => s,
                None => match &file.scale {
                    Some(name) => name.parse().map_err(|e: Error| usage(e.to_string()))?,
                    None => Scale::Firm,
                },
            };
            let strategy = match strategy {
                Some(s) => s,
                None => match &file.strategy {
                    Some(name) => name.parse().map_err(|e: Error| usage(e.to_string()))?,
                    None => AttackStrategy::Random,
                },
            };
            let mut cfg = ExperimentConfig::new(
                scale,
                strategy,
                pick(tiers, file.tiers, 10),
                pick(seed, file.seed, 0),
            );
            if let Some(r) = realizations.or(file.realizations) {
                cfg.realizations = r;
            }
            cfg.max_grid_points = pick(grid_points, file.grid_points, GridSpec::DEFAULT_MAX_POINTS);
            let result = run_ensemble(&graph, &cfg)?;
            let manifest = manifest_for(
                "attack",
                cfg.master_seed,
                serde_json::to_value(&cfg).unwrap(),
                &[&input.nodes, &input.edges],
            )?;
            let csv = ensemble_csv(&result);
            let json = json_bytes(&result)?;
            let mut files: Vec<(&str, &[u8])> = vec![
                ("attack.csv", csv.as_bytes()),
                ("attack.json", &json),
            ];
            let svg_text;
            if svg {
                svg_text = ensemble_svg(&result);
                files.push(("attack.svg", svg_text.as_bytes()));
            }
            let manifest_json = json_bytes(&manifest)?;
            files.push(("manifest.json", &manifest_json));
            write_outputs(&out, &files)?;
        }
        Command::Converge {
            input,
            sweep,
            epsilon,
            out,
        } => {
            let graph = load_graph(&input)?;
            let mut cfg = report_config(&sweep, &file)?;
            cfg.epsilon = pick(epsilon, file.epsilon, CONVERGENCE_EPSILON);
            let report = convergence_report(&graph, &cfg)?;
            let manifest = manifest_for(
                "converge",
                cfg.master_seed,
                serde_json::to_value(&cfg).unwrap(),
                &[&input.nodes, &input.edges],
            )?;
            write_outputs(
                &out,
                &[
                    ("converge.json", &json_bytes(&report)?),
                    ("manifest.json", &json_bytes(&manifest)?),
                ],
            )?;
        }
        Command::Breakdown {
            input,
            sweep,
            limits,
            out,
        } => {
            let graph = load_graph(&input)?;
            let mut cfg = report_config(&sweep, &file)?;
            if !limits.is_empty() {
                cfg.limits = limits;
            } else if let Some(file_limits) = &file.limits {
                cfg.limits = file_limits.clone();
            } else {
                cfg.limits = DEFAULT_LIMITS.to_vec();
            }
            let report = breakdown_report(&graph, &cfg)?;
            let manifest = manifest_for(
                "breakdown",
                cfg.master_seed,
                serde_json::to_value(&cfg).unwrap(),
                &[&input.nodes, &input.edges],
            )?;
            write_outputs(
                &out,
                &[
                    ("breakdown.json", &json_bytes(&report)?),
                    ("manifest.json", &json_bytes(&manifest)?),
                ],
            )?;
        }
        Command::Fragment { input, sweep, out } => {
            let graph = load_graph(&input)?;
            let mut cfg = report_config(&sweep, &file)?;
            if let Some(r) = sweep.realizations.or(file.frag_realizations) {
                cfg.fragmentation_realizations = r;
            }
            let report = fragmentation_report(&graph, &cfg)?;
            let manifest = manifest_for(
                "fragment",
                cfg.master_seed,
                serde_json::to_value(&cfg).unwrap(),
                &[&input.nodes, &input.edges],
            )?;
            write_outputs(
                &out,
                &[
                    ("fragment.json", &json_bytes(&report)?),
                    ("manifest.json", &json_bytes(&manifest)?),
                ],
            )?;
        }
        Command::Generate {
            kind,
            seed,
            size,
            mean_degree,
            gamma,
            kmin,
            msf_count,
            tiers,
            mean_suppliers,
            out_nodes,
            out_edges,
        } => {
            let seed = pick(seed, file.seed, 0);
            let graph = match kind.as_str() {
                "supply" => {
                    let mut params = SupplyGenParams::default();
                    params.seed = seed;
                    if let Some(m) = msf_count {
                        params.msf_count = m;
                    }
                    if let Some(t) = tiers.or(file.tiers) {
                        params.tier_count = t;
                    }
                    if let Some(m) = mean_suppliers {
                        params.mean_new_suppliers_per_firm = m;
                    }
                    gen_supply_chain(&params)?.graph
                }
                "er" => {
                    let n = size.ok_or_else(|| usage("--size is required for --kind er"))?;
                    gen_er(n, mean_degree.unwrap_or(3.0), seed)?
                }
                "powerlaw" => {
                    let n = size.ok_or_else(|| usage("--size is required for --kind powerlaw"))?;
                    gen_configuration_powerlaw(n, gamma.unwrap_or(2.5), kmin.unwrap_or(1), seed)?
                }
                other => return Err(usage(format!("unknown generator kind `{other}`"))),
            };
            let params_json = serde_json::json!({
                "kind": kind, "seed": seed, "size": size, "mean_degree": mean_degree,
                "gamma": gamma, "kmin": kmin, "msf_count": msf_count,
                "tiers": tiers, "mean_suppliers": mean_suppliers,
            });
            let manifest = manifest_for("generate", seed, params_json, &[])?;
            if let Some(dir) = out_nodes.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| Error::io("create output directory", e))?;
            }
            if let Some(dir) = out_edges.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| Error::io("create output directory", e))?;
            }
            atomic_write(&out_nodes, nodes_csv(&graph).as_bytes())?;
            atomic_write(&out_edges, edges_csv(&graph).as_bytes())?;
            let manifest_path = out_nodes.with_extension("manifest.json");
            atomic_write(&manifest_path, &json_bytes(&manifest)?)?;
            print_census(&census(&graph));
        }
        Command::Report {
            input,
            sweep,
            epsilon,
            limits,
            frag_realizations,
            out,
        } => {
            let graph = load_graph(&input)?;
            let mut cfg = report_config(&sweep, &file)?;
            cfg.epsilon = pick(epsilon, file.epsilon, CONVERGENCE_EPSILON);
            if !limits.is_empty() {
                cfg.limits = limits;
            } else if let Some(file_limits) = &file.limits {
                cfg.limits = file_limits.clone();
            }
            if let Some(r) = frag_realizations.or(file.frag_realizations) {
                cfg.fragmentation_realizations = r;
            }
            let report = full_report(&graph, &cfg)?;
            let manifest = manifest_for(
                "report",
                cfg.master_seed,
                serde_json::to_value(&cfg).unwrap(),
                &[&input.nodes, &input.edges],
            )?;
            write_outputs(
                &out,
                &[
                    ("report.json", &json_bytes(&report)?),
                    ("manifest.json", &json_bytes(&manifest)?),
                ],
            )?;
        }
    }
    Ok(())
}

/// Configure the rayon worker pool from SCNET_THREADS (0 or unset = auto).
fn init_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("SCNET_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| usage(format!("SCNET_THREADS must be a number, got `{raw}`")))?;
    if n == 0 {
        return Ok(()); // auto
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| usage(format!("cannot configure {n} worker threads: {e}")))?;
    Ok(())
}

/// Entry point for the `scnet` binary. Exit 0 on success, 1 on usage errors,
/// 2 on data errors.
pub fn main_entry() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = init_threads() {
        if let CliError::Usage(msg) = e {
            eprintln!("error: {msg}");
        }
        return ExitCode::from(1);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
