use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use tite_stein::files::{config_hash, load_design, load_final_data, load_scenario, write_atomic, LoadError};
use tite_stein::report::{finalize, finalize_text, oc_csv, oc_text, table_csv, table_text, SimReport, TableReport};
use tite_stein::runner::{env_threads, simulate};
use tite_stein::service::{serve, AppState};
use tite_stein::DEFAULT_SEED;
use tite_stein_core::table::generate_decision_table;
use tite_stein_core::{compute_boundaries, DesignParams, Mode};

const EXIT_CONFIG: u8 = 2;
const EXIT_NO_OBD: u8 = 3;

#[derive(Parser)]
#[command(name = "tite-stein", version, about = "Dose-finding design with late-onset toxicity and efficacy outcomes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Tite,
    Complete,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Check a design and optional scenario files.
    Validate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        scenario: Vec<PathBuf>,
    },
    /// Operating characteristics over replicated virtual trials.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, required = true)]
        scenario: Vec<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Decision table at the given design.
    DecisionTable {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Patient counts to tabulate; defaults to one to three cohorts.
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Candidate selection and verification on a complete dataset.
    Finalize {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Trial-conduct HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
        /// Directory for the per-trial event logs; in-memory when absent.
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum Failure {
    Config(String),
    NoObd,
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn design(config: Option<&Path>, mode: Option<ModeArg>) -> Result<DesignParams, Failure> {
    let mut p = match config {
        Some(f) => load_design(f)?,
        None => DesignParams::default(),
    };
    match mode {
        Some(ModeArg::Tite) => p.mode = Mode::Tite,
        Some(ModeArg::Complete) => p.mode = Mode::Complete,
        None => {}
    }
    Ok(p)
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(f) => write_atomic(f, bytes).map_err(|e| Failure::Config(format!("{}: {e}", f.display()))),
        None => {
            print!("{}", String::from_utf8_lossy(bytes));
            Ok(())
        }
    }
}

fn json_bytes<T: serde::Serialize>(v: &T) -> Vec<u8> {
    let mut b = serde_json::to_vec_pretty(v).expect("report serializes");
    b.push(b'\n');
    b
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { config, scenario } => {
            let p = design(config.as_deref(), None)?;
            let b = compute_boundaries(&p).map_err(|e| Failure::Config(e.to_string()))?;
            for s in &scenario {
                load_scenario(s, &p)?;
            }
            println!("ok config {}", config_hash(&p));
            println!("phi_L {:.6} phi_U {:.6} psi {:.6}", b.phi_l, b.phi_u, b.psi);
            Ok(())
        }
        Command::Simulate {
            config,
            scenario,
            reps,
            seed,
            out,
            mode,
            format,
        } => {
            let p = design(config.as_deref(), mode)?;
            // load everything before writing anything
            let docs = scenario
                .iter()
                .map(|f| load_scenario(f, &p))
                .collect::<Result<Vec<_>, _>>()?;
            let mut names = HashSet::new();
            for d in &docs {
                if !names.insert(d.scenario.name.clone()) {
                    return Err(Failure::Config(format!("duplicate scenario name `{}`", d.scenario.name)));
                }
            }
            if reps == 0 {
                return Err(Failure::Config("--reps must be at least 1".into()));
            }
            let hash = config_hash(&p);
            let threads = env_threads();
            let mut reports = Vec::with_capacity(docs.len());
            for d in &docs {
                let oc = simulate(&p, &d.scenario, &d.accrual, reps, seed, threads)
                    .map_err(|e| Failure::Config(e.to_string()))?;
                reports.push(SimReport {
                    config_hash: hash.clone(),
                    seed,
                    mode: p.mode,
                    scenario: d.scenario.name.clone(),
                    oc,
                });
            }
            fs::create_dir_all(&out).map_err(|e| Failure::Config(format!("{}: {e}", out.display())))?;
            for r in &reports {
                emit(Some(&out.join(format!("{}.oc.csv", r.scenario))), &oc_csv(std::slice::from_ref(r)))?;
                emit(Some(&out.join(format!("{}.oc.json", r.scenario))), &json_bytes(r))?;
            }
            match format {
                Format::Csv => emit(None, &oc_csv(&reports)),
                Format::Json => emit(None, &json_bytes(&reports)),
                Format::Text => emit(None, oc_text(&reports).as_bytes()),
            }
        }
        Command::DecisionTable { config, n, format, out } => {
            let p = design(config.as_deref(), None)?;
            let b = compute_boundaries(&p).map_err(|e| Failure::Config(e.to_string()))?;
            let c = p.cohort_size;
            let n = if n.is_empty() { vec![c, 2 * c, 3 * c] } else { n };
            let t = TableReport {
                config_hash: config_hash(&p),
                rows: generate_decision_table(&p, &b, &n),
            };
            let bytes = match format {
                Format::Csv => table_csv(&t),
                Format::Json => json_bytes(&t),
                Format::Text => table_text(&t).into_bytes(),
            };
            emit(out.as_deref(), &bytes)
        }
        Command::Finalize {
            config,
            data,
            seed,
            format,
            out,
        } => {
            let p = design(config.as_deref(), None)?;
            let d = load_final_data(&data, &p)?;
            let r = finalize(&d, &p, seed).map_err(|e| Failure::Config(e.to_string()))?;
            let bytes = match format {
                Format::Text => finalize_text(&r).into_bytes(),
                _ => json_bytes(&r),
            };
            emit(out.as_deref(), &bytes)?;
            match r.obd {
                Some(_) => Ok(()),
                None => Err(Failure::NoObd),
            }
        }
        Command::Serve { addr, data_dir } => {
            let state = match &data_dir {
                Some(d) => AppState::open(d).map_err(|e| Failure::Config(e.to_string()))?,
                None => AppState::in_memory(),
            };
            let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::Config(e.to_string()))?;
            eprintln!("listening on {addr}");
            rt.block_on(serve(&addr, state))
                .map_err(|e| Failure::Config(format!("{addr}: {e}")))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::NoObd) => ExitCode::from(EXIT_NO_OBD),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
