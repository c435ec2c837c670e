use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use spingp_core::harness::{self, ExperimentConfig, Report};

#[derive(Parser)]
#[command(name = "spingp", version, about = "Spin-1 Gross-Pitaevskii evolution, scattering and long-time asymptotics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split-step evolution of the initial datum.
    Evolve(Common),
    /// Direct scattering: reflection coefficient and discrete spectrum.
    Scatter(Common),
    /// Closed-form soliton snapshots and cone localization.
    Soliton(Common),
    /// Long-time prediction from stored scattering data.
    Predict(Common),
    /// Full scenario: scatter, evolve, predict, compare.
    Pipeline(Common),
    /// Parabolic-cylinder and Gamma identity sweeps.
    PcfSelftest(SelftestArgs),
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SelftestArgs {
    /// Optional configuration supplying `pcf_samples` and `seed`.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

fn load(config: Option<&PathBuf>, out: Option<PathBuf>, seed: Option<u64>) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match config {
        Some(path) => ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = out {
        cfg.output_dir = out;
    }
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn print_table(report: &Report) {
    for c in &report.checks {
        let mark = if c.passed { "PASS" } else { "FAIL" };
        let rel = serde_json::to_value(c.relation).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        println!("{mark}  {:<48} {:>12.4e} {rel} {:.1e}", c.name, c.value, c.threshold);
    }
    if let Some(fit) = &report.decay_fit {
        println!("fit   slope {:.4}  intercept {:.4}  r^2 {:.4}", fit.slope, fit.intercept, fit.r_squared);
    }
    if let Some(err) = &report.error {
        println!("error: {err}");
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let report = match cli.command {
        Command::Evolve(a) => harness::run_evolve(&load(Some(&a.config), a.out, a.seed)?)?,
        Command::Scatter(a) => harness::run_scatter(&load(Some(&a.config), a.out, a.seed)?)?,
        Command::Soliton(a) => harness::run_soliton(&load(Some(&a.config), a.out, a.seed)?)?,
        Command::Predict(a) => harness::run_predict(&load(Some(&a.config), a.out, a.seed)?)?,
        Command::Pipeline(a) => harness::run_pipeline(&load(Some(&a.config), a.out, a.seed)?)?,
        Command::PcfSelftest(a) => {
            let explicit_out = a.out.is_some();
            let cfg = load(a.config.as_ref(), a.out, a.seed)?;
            let report = harness::run_pcf_selftest(cfg.pcf_samples, cfg.seed);
            if explicit_out || a.config.is_some() {
                report.write(cfg.output_dir.join("pcf-selftest_report.json"))?;
            }
            report
        }
    };
    print_table(&report);
    Ok(report.passed())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
