//! File-based front end: dataset generation, measurement, fitting,
//! optimization and sweeps, each writing deterministic artifacts.

pub mod artifact;
pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Parser, Subcommand};

use commands::{LoadedScenario, Outcome};
use config::PipelineConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "genflow",
    version,
    about = "Max-flow analysis for networks with generative nodes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Pipeline config, or the scenario/topology file for optimize, sweep and maxflow.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the synthetic dataset and its manifest.
    GenDataset,
    /// Measure rate-quality samples on the dataset.
    Measure,
    /// Fit the rate-quality curves to the samples.
    Fit,
    /// Optimize the prompt size for one scenario.
    Optimize {
        scenario: Option<PathBuf>,
        #[arg(long)]
        curve: Option<PathBuf>,
        /// Overrides the scenario's w.
        #[arg(long)]
        w: Option<f64>,
    },
    /// Optimize over a list of quality weights.
    Sweep {
        scenario: Option<PathBuf>,
        #[arg(long)]
        curve: Option<PathBuf>,
        /// Comma-separated weights; defaults to the scenario's `w_values`, then `w`.
        #[arg(long, value_delimiter = ',')]
        w: Vec<f64>,
    },
    /// Max flow, a minimum cut and divergences of a topology file.
    Maxflow { topology: Option<PathBuf> },
    /// gen-dataset, measure, fit and all sweeps in one run.
    Pipeline,
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match execute(&cli, stdout) {
        Ok(Outcome::Ok) => EXIT_OK,
        Ok(Outcome::Infeasible) => EXIT_INFEASIBLE,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    }
}

fn pipeline_config(cli: &Cli) -> anyhow::Result<(PipelineConfig, PathBuf)> {
    let (mut cfg, dir) = match &cli.config {
        Some(p) => {
            let text = artifact::read_text(p)?;
            let cfg: PipelineConfig =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
            (cfg, p.parent().unwrap_or(Path::new(".")).to_path_buf())
        }
        None => (PipelineConfig::default(), PathBuf::from(".")),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok((cfg, dir))
}

fn input_file<'a>(
    positional: &'a Option<PathBuf>,
    cli: &'a Cli,
    what: &str,
) -> anyhow::Result<&'a Path> {
    positional
        .as_deref()
        .or(cli.config.as_deref())
        .with_context(|| format!("missing {what} file (positional or --config)"))
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> anyhow::Result<Outcome> {
    match &cli.command {
        Command::GenDataset => {
            let (cfg, _) = pipeline_config(cli)?;
            let m = commands::gen_dataset(&cfg, &cli.out)?;
            writeln!(
                stdout,
                "wrote {} images, dataset {}",
                m.count, m.dataset_hash
            )?;
        }
        Command::Measure => {
            let (cfg, _) = pipeline_config(cli)?;
            let samples = commands::measure(&cfg, &cli.out, cli.jobs)?;
            writeln!(stdout, "wrote {} sample points", samples.len())?;
        }
        Command::Fit => {
            let (cfg, _) = pipeline_config(cli)?;
            for r in commands::fit(&cfg, &cli.out)? {
                writeln!(
                    stdout,
                    "{:<28} {:<18} r2={:.4}",
                    commands::curve_stem(r.scheme, r.strategy, r.metric),
                    r.family.to_string(),
                    r.r2
                )?;
            }
        }
        Command::Optimize { scenario, curve, w } => {
            let path = input_file(scenario, cli, "scenario")?;
            let sc = LoadedScenario::load(path, Some(&cli.out), curve.as_deref())?;
            let rows = sc.run(&[w.unwrap_or(sc.file.w)])?;
            commands::write_results(
                &cli.out.join(format!("optimize_{}.csv", sc.name)),
                &rows,
                sc.hash(),
            )?;
            print_rows(stdout, &rows)?;
            return Ok(commands::outcome(&rows));
        }
        Command::Sweep { scenario, curve, w } => {
            let path = input_file(scenario, cli, "scenario")?;
            let sc = LoadedScenario::load(path, Some(&cli.out), curve.as_deref())?;
            let ws = if w.is_empty() {
                sc.file.weights()
            } else {
                w.clone()
            };
            let rows = sc.run(&ws)?;
            commands::write_results(
                &cli.out.join(format!("sweep_{}.csv", sc.name)),
                &rows,
                sc.hash(),
            )?;
            print_rows(stdout, &rows)?;
            return Ok(commands::outcome(&rows));
        }
        Command::Maxflow { topology } => {
            let path = input_file(topology, cli, "topology")?;
            let text = artifact::read_text(path)?;
            let (report, outcome) = commands::maxflow_report(&text)
                .with_context(|| format!("in {}", path.display()))?;
            write!(stdout, "{report}")?;
            return Ok(outcome);
        }
        Command::Pipeline => {
            let (cfg, dir) = pipeline_config(cli)?;
            let summary = commands::pipeline(&cfg, &dir, &cli.out, cli.jobs)?;
            for r in &summary.curves {
                writeln!(
                    stdout,
                    "curve {:<28} {:<18} r2={:.4}",
                    commands::curve_stem(r.scheme, r.strategy, r.metric),
                    r.family.to_string(),
                    r.r2
                )?;
            }
            for (name, rows) in &summary.scenarios {
                writeln!(stdout, "scenario {name}")?;
                print_rows(stdout, rows)?;
            }
            writeln!(
                stdout,
                "manifest {}",
                artifact::combined_hash(&summary.manifest.files)
            )?;
            return Ok(summary.outcome);
        }
    }
    Ok(Outcome::Ok)
}

fn print_rows(stdout: &mut dyn Write, rows: &[genflow::flowopt::ResultRow]) -> anyhow::Result<()> {
    writeln!(
        stdout,
        "{:>8} {:>12} {:>10} {:>10} {:>10} {:>9}",
        "w", "L_p*", "lambda*", "y_g", "objective", "G_flow"
    )?;
    for r in rows {
        writeln!(
            stdout,
            "{:>8.4} {:>12.6} {:>10.6} {:>10.6} {:>10.6} {:>9.6}{}",
            r.w,
            r.lp_star,
            r.lambda_star,
            r.y_g,
            r.objective,
            r.g_flow,
            if r.feasible { "" } else { "  infeasible" }
        )?;
    }
    Ok(())
}
