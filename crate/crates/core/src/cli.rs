//! Command-line front end. Every command returns a process exit code:
//! 0 success, 1 invalid configuration, 2 unreadable or malformed input,
//! 3 simulation failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::cost::{config_area, run_power, CostReport, CostTable, DEFAULT_CLOCK_HZ};
use crate::error::Error;
use crate::experiment::{read_json, run_sweep, write_rows_csv, ExperimentSpec};
use crate::loopnest::{analyze, enumerate_unrollings, input_trace, weight_trace, LayerSpec, LayerType, Network, Unrolling};
use crate::sim::{init_sim, validate_config, HierarchyConfig, RuntimeInputs, Stop, Summary};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SIMULATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "memhier", version, about = "Pattern-driven accelerator memory hierarchy toolkit")]
pub struct Cli {
    /// Rotates the order in which sweep points are executed.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a hierarchy configuration.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Simulate one pattern until a number of outputs.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        runtime: PathBuf,
        #[arg(long, default_value_t = 5000)]
        outputs: usize,
        #[arg(long, default_value_t = 0)]
        preload: u64,
        #[arg(long)]
        cost_table: Option<PathBuf>,
        /// Directory receiving events.csv and summary.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every point of an experiment file and emit one CSV row per point.
    Sweep {
        experiment: PathBuf,
        #[arg(long)]
        cost_table: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-layer access pattern analysis of a network file.
    Analyze {
        network: PathBuf,
        #[arg(long, value_enum, default_value_t = Dataset::Weights)]
        dataset: Dataset,
        #[arg(long, default_value_t = 64)]
        pe: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Area, and power when a runtime is given, of a configuration.
    Cost {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        runtime: Option<PathBuf>,
        #[arg(long, default_value_t = 5000)]
        outputs: usize,
        #[arg(long, default_value_t = 0)]
        preload: u64,
        #[arg(long)]
        cost_table: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Dataset {
    Weights,
    Inputs,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Validation { .. } | Error::Config(_) | Error::UnsupportedMacro { .. } => EXIT_VALIDATION,
        Error::Io { .. } | Error::Parse { .. } => EXIT_INPUT,
        Error::Deadlock { .. } | Error::UndefinedAverage => EXIT_SIMULATION,
    }
}

/// Parses `args` (program name first), executes, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(io_err(p)),
        None => {
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::Io {
                    path: "stdout".into(),
                    source: e,
                }),
                _ => Ok(()),
            }
        }
    }
}

fn load_table(path: Option<&PathBuf>) -> Result<Option<CostTable>, Error> {
    path.map(CostTable::load).transpose()
}

#[derive(Serialize)]
struct RunSummary {
    #[serde(flatten)]
    summary: Summary,
    cycles_per_output: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    cost: Option<CostReport>,
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn execute(cli: &Cli) -> Result<i32, Error> {
    match &cli.command {
        Command::Validate { config } => {
            let cfg: HierarchyConfig = read_json(config)?;
            let violations = validate_config(&cfg);
            for v in &violations {
                println!("{v}");
            }
            if violations.is_empty() {
                println!("ok");
                Ok(EXIT_OK)
            } else {
                Ok(EXIT_VALIDATION)
            }
        }
        Command::Run {
            config,
            runtime,
            outputs,
            preload,
            cost_table,
            out,
        } => {
            let cfg: HierarchyConfig = read_json(config)?;
            let rt: RuntimeInputs = read_json(runtime)?;
            let table = load_table(cost_table.as_ref())?;
            let mut sim = init_sim(&cfg, &rt)?;
            sim.preload(*preload);
            let report = sim.run(Stop::Outputs(*outputs))?;
            let cost = match &table {
                Some(t) if report.total_internal_cycles > 0 => {
                    Some(run_power(&cfg, &report, t, DEFAULT_CLOCK_HZ)?)
                }
                _ => None,
            };
            let summary = to_json(&RunSummary {
                summary: report.summary(),
                cycles_per_output: report.cycles_per_output(),
                cost,
            });
            match out {
                Some(dir) => {
                    let mut csv = Vec::new();
                    report.write_events_csv(&mut csv).map_err(io_err(dir))?;
                    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
                    let events = dir.join("events.csv");
                    std::fs::write(&events, csv).map_err(io_err(&events))?;
                    let path = dir.join("summary.json");
                    std::fs::write(&path, summary).map_err(io_err(&path))?;
                }
                None => emit(None, &summary)?,
            }
            Ok(EXIT_OK)
        }
        Command::Sweep {
            experiment,
            cost_table,
            out,
        } => {
            let (spec, base) = ExperimentSpec::load(experiment)?;
            let table = load_table(cost_table.as_ref())?;
            let points = spec.points(&base)?;
            // the seed rotates the execution order; rows keep the declared order
            let n = points.len().max(1);
            let order: Vec<usize> = (0..points.len()).map(|i| (i + cli.seed as usize) % n).collect();
            let rotated: Vec<_> = order.iter().map(|&i| points[i].clone()).collect();
            let rows = run_sweep(&rotated, table.as_ref(), spec.clock_hz.unwrap_or(DEFAULT_CLOCK_HZ))?;
            let mut sorted = vec![None; rows.len()];
            for (row, &i) in rows.into_iter().zip(&order) {
                sorted[i] = Some(row);
            }
            let rows: Vec<_> = sorted.into_iter().flatten().collect();
            let mut csv = Vec::new();
            write_rows_csv(&rows, &mut csv).expect("writing to memory");
            emit(out.as_deref(), &String::from_utf8(csv).expect("utf8"))?;
            Ok(EXIT_OK)
        }
        Command::Analyze {
            network,
            dataset,
            pe,
            out,
        } => {
            let net = Network::load(network)?;
            let csv = analysis_csv(&net, *dataset, *pe)?;
            emit(out.as_deref(), &csv)?;
            Ok(EXIT_OK)
        }
        Command::Cost {
            config,
            runtime,
            outputs,
            preload,
            cost_table,
            out,
        } => {
            let cfg: HierarchyConfig = read_json(config)?;
            let violations = validate_config(&cfg);
            if !violations.is_empty() {
                return Err(Error::Config(violations));
            }
            let table = load_table(cost_table.as_ref())?.unwrap_or_else(CostTable::default_table);
            let text = match runtime {
                None => to_json(&serde_json::json!({ "total_area": config_area(&cfg, &table)? })),
                Some(rt_path) => {
                    let rt: RuntimeInputs = read_json(rt_path)?;
                    let mut sim = init_sim(&cfg, &rt)?;
                    sim.set_event_logging(false);
                    sim.preload(*preload);
                    let report = sim.run(Stop::Outputs(*outputs))?;
                    to_json(&run_power(&cfg, &report, &table, DEFAULT_CLOCK_HZ)?)
                }
            };
            emit(out.as_deref(), &text)?;
            Ok(EXIT_OK)
        }
    }
}

/// Largest unrolling that fits in `pe` elements, preferring the last one in
/// enumeration order among equals.
pub fn best_unrolling(layer: &LayerSpec, pe: u64) -> Unrolling {
    (1..=pe)
        .rev()
        .find_map(|p| enumerate_unrollings(layer, p).last().copied())
        .unwrap_or(Unrolling::NONE)
}

pub fn analysis_csv(net: &Network, dataset: Dataset, pe: u64) -> Result<String, Error> {
    let mut out = Vec::new();
    writeln!(
        out,
        "layer,type,unrolling,unique_addresses,cycle_length,words_per_step,required_port_width,pattern"
    )
    .expect("writing to memory");
    for (i, layer) in net.layers.iter().enumerate() {
        let u = best_unrolling(layer, pe);
        let trace = match dataset {
            Dataset::Weights => weight_trace(layer, &u)?,
            Dataset::Inputs => input_trace(layer, &u)?,
        };
        let a = analyze(&trace, layer.word_width);
        let pattern = match a.pattern.pattern() {
            Some(p) => serde_json::to_value(p.kind)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default(),
            None => "unclassified".to_string(),
        };
        let kind = match layer.layer_type {
            LayerType::Conv => "CONV",
            LayerType::Fc => "FC",
        };
        writeln!(
            out,
            "{i},{kind},{u},{},{},{},{},{pattern}",
            a.unique_addresses, a.cycle_length, a.words_per_step, a.required_port_width
        )
        .expect("writing to memory");
    }
    Ok(String::from_utf8(out).expect("utf8"))
}
