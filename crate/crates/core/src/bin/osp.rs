//! Command line experiment runner for the secrecy-policy solver.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use osp_core::experiment::{self, ExperimentSpec};
use osp_core::mdp::SolveOptions;
use osp_core::powersplit::Splitter;
use osp_core::sim::SimOptions;

#[derive(Parser)]
#[command(name = "osp", version, about = "Secrecy-policy solver for an energy-harvesting transmitter")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the configuration's [output] dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Power splitting rule; overrides the configuration.
    #[arg(long, value_parser = parse_splitter)]
    splitter: Option<Splitter>,
    /// Directory for reward-table cache files.
    #[arg(long)]
    cache: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the base configuration (ignores any sweep section).
    Solve(CommonArgs),
    /// Solve every sweep point of the configuration.
    Sweep(CommonArgs),
    /// Solve, then validate each policy by Monte Carlo simulation.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Slots per simulated trajectory.
        #[arg(long, default_value_t = 1_000_000)]
        slots: u64,
        /// Base seed; row k simulates with seed + k.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Export the solved single-carrier policy as heatmap CSV data.
    Heatmap(CommonArgs),
}

fn parse_splitter(s: &str) -> Result<Splitter, String> {
    match s.to_ascii_lowercase().as_str() {
        "optimal" => Ok(Splitter::Optimal),
        "uniform" => Ok(Splitter::Uniform),
        other => Err(format!("unknown splitter '{other}' (use optimal or uniform)")),
    }
}

fn fail(kind: &str, message: &str) -> ExitCode {
    let escaped = message.replace('\\', "\\\\").replace('"', "\\\"");
    eprintln!("{{\"error\":\"{kind}\",\"message\":\"{escaped}\"}}");
    ExitCode::FAILURE
}

fn load_spec(common: &CommonArgs) -> Result<ExperimentSpec, ExitCode> {
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| fail("io", &format!("cannot read {}: {e}", common.config.display())))?;
    let mut spec = experiment::parse_experiment(&text).map_err(|e| fail("config", &e.to_string()))?;
    if let Some(out) = &common.out {
        spec.out_dir = out.clone();
    }
    if let Some(splitter) = common.splitter {
        spec.splitter = splitter;
    }
    Ok(spec)
}

fn setup(common: &CommonArgs) -> Result<(ExperimentSpec, SolveOptions), ExitCode> {
    if common.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(common.threads)
            .build_global()
            .map_err(|e| fail("threads", &e.to_string()))?;
    }
    let spec = load_spec(common)?;
    let opts = SolveOptions { table_cache_dir: common.cache.clone(), ..SolveOptions::default() };
    Ok((spec, opts))
}

fn report_rows(rows: &[experiment::RunRow]) -> Result<(), ExitCode> {
    let mut failures = 0;
    for row in rows {
        match &row.outcome {
            Ok(outcome) => println!(
                "{}: gain={} bits/slot iterations={} ({} ms)",
                row.run_id, outcome.report.gain, outcome.report.iterations, row.wall_ms
            ),
            Err(msg) => {
                failures += 1;
                let escaped = msg.replace('"', "'");
                eprintln!("{{\"error\":\"row\",\"run_id\":\"{}\",\"message\":\"{escaped}\"}}", row.run_id);
            }
        }
    }
    if failures > 0 {
        return Err(ExitCode::FAILURE);
    }
    Ok(())
}

fn run() -> Result<(), ExitCode> {
    match Cli::parse().command {
        Command::Solve(common) => {
            let (mut spec, opts) = setup(&common)?;
            spec.sweep = None;
            let out_dir = spec.out_dir.clone();
            let rows = experiment::execute(&spec, &opts, None, &out_dir)
                .map_err(|e| fail("run", &e.to_string()))?;
            report_rows(&rows)
        }
        Command::Sweep(common) => {
            let (spec, opts) = setup(&common)?;
            if spec.sweep.is_none() {
                return Err(fail("config", "sweep command needs a [sweep] section with a parameter"));
            }
            let out_dir = spec.out_dir.clone();
            let rows = experiment::execute(&spec, &opts, None, &out_dir)
                .map_err(|e| fail("run", &e.to_string()))?;
            report_rows(&rows)
        }
        Command::Simulate { common, slots, seed } => {
            let (spec, opts) = setup(&common)?;
            let sim_opts = SimOptions { slots, seed, ..SimOptions::default() };
            let out_dir = spec.out_dir.clone();
            let rows = experiment::execute(&spec, &opts, Some(&sim_opts), &out_dir)
                .map_err(|e| fail("run", &e.to_string()))?;
            report_rows(&rows)
        }
        Command::Heatmap(common) => {
            let (mut spec, opts) = setup(&common)?;
            spec.sweep = None;
            spec.variants = vec![experiment::Variant::Full];
            let out_dir = spec.out_dir.clone();
            let rows = experiment::execute(&spec, &opts, None, &out_dir)
                .map_err(|e| fail("run", &e.to_string()))?;
            let outcome = match &rows[0].outcome {
                Ok(outcome) => outcome,
                Err(msg) => return Err(fail("run", msg)),
            };
            let data = experiment::emit_policy_heatmap_data(&outcome.report)
                .map_err(|e| fail("heatmap", &e.to_string()))?;
            let mut file = std::fs::File::create(out_dir.join("heatmap.csv"))
                .map_err(|e| fail("io", &e.to_string()))?;
            experiment::write_heatmap_csv(&data, &spec, &mut file)
                .map_err(|e| fail("io", &e.to_string()))?;
            println!("heatmap.csv: {} rows", data.len());
            report_rows(&rows)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
