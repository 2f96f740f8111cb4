use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use quadflow::{
    config, ode_report, reference_preset, verify, CoefficientSchedule, Error, FlowOptions, RunConfig, Schedule, Vec15,
};
use rayon::prelude::*;
use serde_json::json;

#[derive(Parser)]
#[command(name = "quadflow", version, about = "Factorized time evolution for 2D quadratic Hamiltonians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one or more configs and write their outputs (batch runs in parallel).
    Run {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
    /// Run the oracle suites and print a pass/fail table.
    Verify {
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, allow_negative_numbers = true)]
        t_end: Option<f64>,
        /// Override a preset parameter, e.g. `--param E_x=0`.
        #[arg(long = "param", value_parser = parse_param, conflicts_with = "config")]
        params: Vec<(String, f64)>,
        /// Print the report as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Evaluate only the Green function section of a config.
    Green { config: PathBuf },
    /// Print the reduced equations at one (a, alpha) point.
    PrintOdes {
        /// Fifteen comma-separated Hamiltonian coefficients.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, conflicts_with = "preset")]
        a: Option<Vec<f64>>,
        /// Take the coefficients from a preset (reference parameters) at `--t`.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        t: f64,
        /// Fifteen comma-separated group parameters; zero when omitted.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        alpha: Option<Vec<f64>>,
    },
}

/// Prints to stdout, ignoring a closed pipe (`quadflow ... | head`).
fn out(text: &str) {
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush());
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let v = v.trim().parse::<f64>().map_err(|e| format!("{k}: {e}"))?;
    Ok((k.trim().to_string(), v))
}

/// Failure to be reported as `{"error", "detail", "at"}`.
struct Failure {
    code: String,
    detail: String,
    at: Option<String>,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: e.code().into(), detail: e.to_string(), at: e.location() }
    }
}

impl Failure {
    fn new(code: &str, detail: impl Into<String>, at: Option<String>) -> Self {
        Failure { code: code.into(), detail: detail.into(), at }
    }

    fn emit(&self) {
        eprintln!("{}", json!({ "error": self.code, "detail": self.detail, "at": self.at }));
    }
}

fn vec15(name: &str, v: Option<Vec<f64>>) -> Result<Vec15, Failure> {
    match v {
        None => Ok(Vec15::zeros()),
        Some(v) if v.len() == 15 => Ok(Vec15::from_iterator(v)),
        Some(v) => Err(Failure::new("Usage", format!("--{name} needs 15 values, got {}", v.len()), Some(name.into()))),
    }
}

fn threads() -> Result<Option<usize>, Failure> {
    match std::env::var("QUADFLOW_THREADS") {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Failure::new(
                "InvalidEnvironment",
                format!("QUADFLOW_THREADS must be a positive integer, got `{s}`"),
                Some("QUADFLOW_THREADS".into()),
            )),
        },
    }
}

fn run_batch(configs: Vec<PathBuf>) -> Result<(), Failure> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads()? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Failure::new("InvalidEnvironment", e.to_string(), None))?;
    let results: Vec<Result<serde_json::Value, Failure>> =
        pool.install(|| configs.par_iter().map(|p| config::run_file(p).map_err(Failure::from)).collect());
    let mut failed = 0;
    for r in results {
        match r {
            Ok(summary) => out(&format!("{summary}\n")),
            Err(f) => {
                f.emit();
                failed += 1;
            }
        }
    }
    if failed > 0 {
        // each failure has already been reported
        return Err(Failure::new("BatchFailed", format!("{failed} of {} runs failed", configs.len()), None));
    }
    Ok(())
}

fn run_verify(
    preset: Option<String>,
    config: Option<PathBuf>,
    t_end: Option<f64>,
    params: Vec<(String, f64)>,
    as_json: bool,
) -> Result<(), Failure> {
    let (schedule, opts, t_end) = match config {
        Some(path) => {
            let cfg = RunConfig::from_path(&path).map_err(Error::from)?;
            let t = t_end.unwrap_or(cfg.run.t_end);
            if cfg.run.t_start != 0.0 || cfg.run.initial.is_some() {
                return Err(Failure::new("Usage", "verify integrates from t = 0 and the identity", Some("run.t_start".into())));
            }
            (cfg.schedule.clone(), cfg.flow_options(), t)
        }
        None => {
            let name = preset.unwrap_or_else(|| "landau".into());
            let overrides: BTreeMap<String, f64> = params.into_iter().collect();
            let p = reference_preset(&name, &overrides).map_err(Error::from)?;
            let s = CoefficientSchedule::from_preset(p, 1.0).map_err(Error::from)?;
            (s, FlowOptions::default(), t_end.unwrap_or(2.8))
        }
    };
    let report = verify(&schedule, t_end, &opts)?;
    if as_json {
        out(&format!("{}\n", serde_json::to_string_pretty(&report).expect("report serializes")));
    } else {
        out(&report.table());
    }
    if report.passed() {
        Ok(())
    } else {
        let names: Vec<&str> = report.suites.iter().filter(|s| !s.passed).map(|s| s.name.as_str()).collect();
        Err(Failure::new("VerificationFailed", format!("failed suites: {}", names.join(", ")), None))
    }
}

fn run_print_odes(a: Option<Vec<f64>>, preset: Option<String>, t: f64, alpha: Option<Vec<f64>>) -> Result<(), Failure> {
    let a = match (a, preset) {
        (Some(a), _) => vec15("a", Some(a))?,
        (None, name) => {
            let p = reference_preset(name.as_deref().unwrap_or("landau"), &BTreeMap::new()).map_err(Error::from)?;
            let s = CoefficientSchedule::from_preset(p, 1.0).map_err(Error::from)?;
            s.coefficients(t).map_err(Error::from)?
        }
    };
    let report = ode_report(&a, &vec15("alpha", alpha)?)?;
    out(&format!("{}\n", serde_json::to_string_pretty(&report).expect("finite report")));
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            out(&e.to_string());
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            Failure::new("Usage", e.to_string().trim_end(), None).emit();
            return ExitCode::from(2);
        }
    };
    let outcome = match cli.command {
        Command::Run { configs } => run_batch(configs),
        Command::Verify { preset, config, t_end, params, json } => run_verify(preset, config, t_end, params, json),
        Command::Green { config } => config::green_file(&config).map(|s| out(&format!("{s}\n"))).map_err(Failure::from),
        Command::PrintOdes { a, preset, t, alpha } => run_print_odes(a, preset, t, alpha),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            f.emit();
            ExitCode::FAILURE
        }
    }
}
