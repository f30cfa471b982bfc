use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use vtloop::harness::{cmd_accept, cmd_curves, cmd_identify, cmd_simulate, cmd_synth, Overrides, ScenarioConfig};
use vtloop::Result;

#[derive(Parser)]
#[command(name = "vtloop", version, about = "Closed-loop vibrotactile plate simulation and identification")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML); defaults apply when omitted
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Drive frequency, Hz
    #[arg(long, global = true)]
    freq: Option<f64>,
    /// Amplitude reference, m
    #[arg(long, global = true)]
    aref: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize and export the controllers
    Synth,
    /// Run the closed loop and write the sensor trace
    Simulate,
    /// Recover load, position and impedance from a trace
    Identify {
        /// Trace CSV written by `simulate`
        trace: PathBuf,
    },
    /// Write finger-model impedance and admittance curves
    Curves,
    /// Run the acceptance suite
    Accept {
        /// Run only these criteria
        #[arg(long = "criterion", value_name = "N")]
        only: Vec<u32>,
    },
}

fn run(cli: Cli) -> Result<bool> {
    let mut cfg = match &cli.common.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    cfg.apply(&Overrides {
        seed: cli.common.seed,
        freq_hz: cli.common.freq,
        a_ref_m: cli.common.aref,
        out_dir: cli.common.out.clone(),
    });
    let outcome = match &cli.command {
        Command::Synth => cmd_synth(&cfg, cli.common.freq)?,
        Command::Simulate => cmd_simulate(&cfg)?,
        Command::Identify { trace } => cmd_identify(&cfg, trace)?,
        Command::Curves => cmd_curves(&cfg)?,
        Command::Accept { only } => {
            let (outcome, report) = cmd_accept(&cfg, only)?;
            for r in &report.results {
                println!("{}", r.line());
            }
            eprintln!("{}", outcome.summary);
            return Ok(report.all_passed());
        }
    };
    for f in &outcome.files {
        println!("{}", f.display());
    }
    eprintln!("{}", outcome.summary);
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("vtloop: error[{}]: {msg}", e.kind());
            ExitCode::from(2)
        }
    }
}
