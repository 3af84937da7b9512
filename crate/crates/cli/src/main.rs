use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cusf::config::{Mode, SimConfig, SleepPolicy};
use cusf::engine::Summary;
use cusf::output::{run_to_dir, sweep, OutputError};

/// Time-slotted simulator of a cognitive-radio network with sensor-assisted
/// spectrum sensing.
#[derive(Parser)]
#[command(name = "cusf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write rounds.csv, summary.json and config.txt.
    Run(Common),
    /// Run one simulation per value of a parameter and write sweep.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// One of r_s, d_cr, p_idle, mode, sleep.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
}

#[derive(Args)]
struct Common {
    /// key = value config file; missing keys take their defaults.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    sleep: Option<SleepPolicy>,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<OutputError> for Failure {
    fn from(e: OutputError) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn resolve(c: &Common) -> Result<SimConfig, Failure> {
    let mut cfg = SimConfig::load(&c.config).map_err(|e| Failure::Config(e.to_string()))?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(r) = c.rounds {
        cfg.rounds = r;
    }
    if let Some(m) = c.mode {
        cfg.mode = m;
        if m != Mode::Cusf && c.sleep.is_none() {
            cfg.sleep = SleepPolicy::None;
        }
    }
    if let Some(p) = c.sleep {
        cfg.sleep = p;
    }
    cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
    Ok(cfg)
}

fn report(label: &str, s: &Summary) {
    let opt = |v: Option<f64>| v.map_or("-".to_owned(), |x| format!("{x:.4}"));
    println!(
        "{label}: energy {:.4} J (setup {:.2}%), mse {}, Q_d {}, mean n_s {}, modal K {}",
        s.total_energy_j,
        s.setup_share * 100.0,
        opt(s.mse),
        opt(s.detection_probability),
        opt(s.mean_n_s),
        s.modal_k.map_or("-".to_owned(), |k| k.to_string()),
    );
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run(c) => {
            let cfg = resolve(&c)?;
            let out = run_to_dir(&cfg, &c.out)?;
            report(&c.out.display().to_string(), &out.summary);
        }
        Command::Sweep { common, param, values } => {
            let cfg = resolve(&common)?;
            let summaries = sweep(&cfg, &param, &values, &common.out)?;
            for (v, s) in values.iter().zip(&summaries) {
                report(&format!("{param}={v}"), s);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
