//! Parameter sweeps over simulated hierarchies.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{config_area, run_power, CostTable};
use crate::error::{Error, Result};
use crate::sim::{init_sim, HierarchyConfig, RuntimeInputs, SimReport, Stop};

/// How much to preload before the measured run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preload {
    None,
    /// A fixed budget of internal cycles.
    Cycles(u64),
    /// Until the hierarchy stops accepting data.
    Fill,
}

impl Default for Preload {
    fn default() -> Self {
        Preload::None
    }
}

/// Quiet cycles that end a `Preload::Fill`.
pub const FILL_QUIET_CYCLES: u64 = 32;
const FILL_MAX_CYCLES: u64 = 1 << 20;

/// A swept runtime parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Cycle length of every level.
    CycleLength,
    /// Inter-cycle shift of every level.
    InterCycleShift,
    SkipShift,
    PreloadCycles,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepValues {
    List(Vec<u64>),
    Range { from: u64, to: u64 },
}

impl SweepValues {
    pub fn values(&self) -> Vec<u64> {
        match self {
            SweepValues::List(v) => v.clone(),
            SweepValues::Range { from, to } => (*from..=*to).collect(),
        }
    }
}

/// Either an inline value or a path relative to the experiment file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Source<T> {
    Path(PathBuf),
    Inline(T),
}

impl<T: for<'de> Deserialize<'de> + Clone> Source<T> {
    fn resolve(&self, base: &Path) -> Result<T> {
        match self {
            Source::Inline(v) => Ok(v.clone()),
            Source::Path(p) => read_json(&base.join(p)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Curve {
    pub label: String,
    pub config: Source<HierarchyConfig>,
    pub runtime: Source<RuntimeInputs>,
    #[serde(default)]
    pub preload: Preload,
    /// Overrides the experiment's sweep values.
    #[serde(default)]
    pub values: Option<SweepValues>,
    /// Swept values are divided by this before use, e.g. to express cycle
    /// lengths of a wide hierarchy in narrow output words.
    #[serde(default = "one")]
    pub value_divisor: u64,
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub parameter: SweepParameter,
    pub values: SweepValues,
    pub outputs: usize,
    pub curves: Vec<Curve>,
    /// Accelerator clock used for power figures.
    #[serde(default)]
    pub clock_hz: Option<f64>,
}

/// One fully resolved sweep point.
#[derive(Debug, Clone)]
pub struct Point {
    pub curve: String,
    pub value: u64,
    pub config: HierarchyConfig,
    pub runtime: RuntimeInputs,
    pub preload: Preload,
    pub outputs: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub curve: String,
    pub value: u64,
    pub total_cycles: u64,
    pub preload_cycles: u64,
    pub cycles_per_output: f64,
    pub offchip_requests: usize,
    pub area: Option<f64>,
    pub power: Option<f64>,
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

impl ExperimentSpec {
    pub fn load(path: impl AsRef<Path>) -> Result<(Self, PathBuf)> {
        let path = path.as_ref();
        let spec = read_json(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((spec, base))
    }

    /// Expands curves and values into independent points, in row order.
    pub fn points(&self, base: &Path) -> Result<Vec<Point>> {
        let mut points = Vec::new();
        for curve in &self.curves {
            let config = curve.config.resolve(base)?;
            let template = curve.runtime.resolve(base)?;
            let values = curve.values.as_ref().unwrap_or(&self.values).values();
            for value in values {
                let mut runtime = template.clone();
                let mut preload = curve.preload;
                let v = value / curve.value_divisor.max(1);
                let set = |arr: &mut Vec<u64>| arr.iter_mut().for_each(|x| *x = v);
                match self.parameter {
                    SweepParameter::CycleLength => set(&mut runtime.cycle_length),
                    SweepParameter::InterCycleShift => set(&mut runtime.inter_cycle_shift),
                    SweepParameter::SkipShift => set(&mut runtime.skip_shift),
                    SweepParameter::PreloadCycles => preload = Preload::Cycles(v),
                }
                runtime.validate(&config).map_err(|e| {
                    Error::validation(format!("{}={value}", curve.label), e.to_string())
                })?;
                points.push(Point {
                    curve: curve.label.clone(),
                    value,
                    config: config.clone(),
                    runtime,
                    preload,
                    outputs: self.outputs,
                });
            }
        }
        Ok(points)
    }
}

/// Runs one point: optional preload, then until `outputs` words came out.
pub fn run_point(point: &Point) -> Result<SimReport> {
    let mut sim = init_sim(&point.config, &point.runtime)?;
    sim.set_event_logging(false);
    match point.preload {
        Preload::None => {}
        Preload::Cycles(n) => sim.preload(n),
        Preload::Fill => {
            sim.preload_until_full(FILL_QUIET_CYCLES, FILL_MAX_CYCLES);
        }
    }
    sim.run(Stop::Outputs(point.outputs))
}

/// Runs every point in parallel. Rows keep the order of `points`.
pub fn run_sweep(points: &[Point], table: Option<&CostTable>, clock_hz: f64) -> Result<Vec<Row>> {
    points
        .par_iter()
        .map(|p| {
            let report = run_point(p)?;
            let (area, power) = match table {
                Some(t) => (
                    Some(config_area(&p.config, t)?),
                    Some(run_power(&p.config, &report, t, clock_hz)?.average_power),
                ),
                None => (None, None),
            };
            Ok(Row {
                curve: p.curve.clone(),
                value: p.value,
                total_cycles: report.total_internal_cycles,
                preload_cycles: report.preload_cycles,
                cycles_per_output: report.cycles_per_output(),
                offchip_requests: report.offchip_requests.len(),
                area,
                power,
            })
        })
        .collect()
}

pub fn write_rows_csv<W: std::io::Write>(rows: &[Row], mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "curve,value,total_cycles,preload_cycles,cycles_per_output,offchip_requests,area_um2,power_mw"
    )?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{:.4},{},{},{}",
            r.curve,
            r.value,
            r.total_cycles,
            r.preload_cycles,
            r.cycles_per_output,
            r.offchip_requests,
            opt(r.area),
            opt(r.power)
        )?;
    }
    Ok(())
}
