//! Benchmark campaigns: a grid of (instance, model, config) cells, one CSV
//! row per cell and per-(model, config) averages.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::Deserialize;

use crate::engine::{self, SolveStatus, SolverConfig};
use crate::formulations::{build_fjsp_relaxation, solve_with_acceleration, AccelConfig, BuildOptions, Formulation};
use crate::io::{generate_instance, parse_flexible_jobshop, parse_instance, parse_layout, GenConfig, Scale};
use crate::model::{Instance, Time};

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
pub enum BenchModel {
    #[serde(rename = "arc")]
    Arc,
    #[serde(rename = "embedded")]
    Embedded,
    #[serde(rename = "fjsp-relax")]
    Relax,
}

impl fmt::Display for BenchModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BenchModel::Arc => "arc",
            BenchModel::Embedded => "embedded",
            BenchModel::Relax => "fjsp-relax",
        })
    }
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceFormat {
    /// A ready instance; the zone/transbot/layout grid does not apply.
    #[default]
    Canonical,
    /// A flexible job shop, zoned by the generator once per grid point.
    Fjs,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSource {
    pub path: PathBuf,
    #[serde(default)]
    pub format: SourceFormat,
    pub name: Option<String>,
    #[serde(default = "default_scale")]
    pub scale: Scale,
    /// Stocker + machines travel matrix, small scale only.
    pub layout: Option<PathBuf>,
}

fn default_scale() -> Scale {
    Scale::Medium
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSpec {
    pub instances: Vec<InstanceSource>,
    pub formulations: Vec<BenchModel>,
    #[serde(default = "default_grid")]
    pub zones: Vec<usize>,
    #[serde(default = "default_grid")]
    pub transbots: Vec<usize>,
    #[serde(default = "default_layout_seeds")]
    pub layout_seeds: Vec<u64>,
    /// Seconds per run.
    #[serde(default = "default_time_limit")]
    pub time_limit: f64,
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default = "one")]
    pub repetitions: usize,
    /// Solver seed of the first repetition; later ones add the repetition index.
    #[serde(default)]
    pub seed: u64,
    pub node_limit: Option<u64>,
    #[serde(default = "yes")]
    pub warm_start: bool,
    #[serde(default = "yes")]
    pub initial_deadhead: bool,
    /// Cells run concurrently.
    #[serde(default = "one")]
    pub jobs: usize,
}

fn default_grid() -> Vec<usize> {
    vec![2]
}
fn default_layout_seeds() -> Vec<u64> {
    vec![1]
}
fn default_time_limit() -> f64 {
    600.0
}
fn one() -> usize {
    1
}
fn yes() -> bool {
    true
}

impl BenchSpec {
    pub fn check(&self) -> Result<(), String> {
        if self.instances.is_empty() {
            return Err("instance set is empty".into());
        }
        if self.formulations.is_empty() {
            return Err("formulation set is empty".into());
        }
        if self.zones.is_empty() || self.transbots.is_empty() || self.layout_seeds.is_empty() {
            return Err("zones, transbots and layout_seeds need at least one value".into());
        }
        if !(self.time_limit.is_finite() && self.time_limit > 0.0) {
            return Err(format!("time_limit must be positive, got {}", self.time_limit));
        }
        if self.repetitions == 0 {
            return Err("repetitions must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GridPoint {
    File,
    Generated { zones: usize, transbots: usize, layout_seed: u64 },
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridPoint::File => f.write_str("file"),
            GridPoint::Generated { zones, transbots, layout_seed } => write!(f, "z{zones}-v{transbots}-l{layout_seed}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRow {
    pub instance: String,
    pub model: BenchModel,
    pub config: GridPoint,
    pub seed: u64,
    pub cmax: Option<Time>,
    pub bound: Option<Time>,
    /// Optimal, Feasible, Infeasible, Timeout, or Error.
    pub status: String,
    pub seconds: f64,
    pub nodes: u64,
    pub error: Option<String>,
}

impl RunRow {
    fn sort_key(&self) -> (&str, BenchModel, GridPoint, u64) {
        (&self.instance, self.model, self.config, self.seed)
    }
}

/// An exact mean: `sum / count`.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Mean {
    pub sum: i128,
    pub count: u64,
}

impl Mean {
    pub fn value(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum as f64 / self.count as f64)
    }
}

impl fmt::Display for Mean {
    /// Two decimals, rounded half away from zero in integer arithmetic.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.count == 0 {
            return Ok(());
        }
        let c = self.count as i128;
        let scaled = self.sum * 100;
        let q = (scaled.abs() * 2 + c) / (2 * c);
        let sign = if scaled < 0 && q != 0 { "-" } else { "" };
        write!(f, "{sign}{}.{:02}", q / 100, q % 100)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AverageRow {
    pub model: BenchModel,
    pub config: GridPoint,
    pub runs: usize,
    /// Rows with a makespan.
    pub solved: usize,
    pub optimal: usize,
    pub cmax: Mean,
    pub seconds: f64,
}

pub fn averages(rows: &[RunRow]) -> Vec<AverageRow> {
    let mut groups: std::collections::BTreeMap<(BenchModel, GridPoint), Vec<&RunRow>> = Default::default();
    for r in rows {
        groups.entry((r.model, r.config)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((model, config), rs)| {
            let solved: Vec<Time> = rs.iter().filter_map(|r| r.cmax).collect();
            AverageRow {
                model,
                config,
                runs: rs.len(),
                solved: solved.len(),
                optimal: rs.iter().filter(|r| r.status == "Optimal").count(),
                cmax: Mean { sum: solved.iter().map(|&c| c as i128).sum(), count: solved.len() as u64 },
                seconds: rs.iter().map(|r| r.seconds).sum::<f64>() / rs.len() as f64,
            }
        })
        .collect()
}

pub const CSV_HEADER: [&str; 9] = ["instance", "model", "config", "seed", "CMAX", "bound", "status", "seconds", "nodes"];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl RunRow {
    pub fn csv_fields(&self) -> Vec<String> {
        vec![
            self.instance.clone(),
            self.model.to_string(),
            self.config.to_string(),
            self.seed.to_string(),
            opt(self.cmax),
            opt(self.bound),
            self.status.clone(),
            format!("{:.3}", self.seconds),
            self.nodes.to_string(),
        ]
    }
}

impl AverageRow {
    /// Same columns as run rows: CMAX holds the mean over solved runs and
    /// status carries the solved/optimal counts.
    pub fn csv_fields(&self) -> Vec<String> {
        vec![
            "AVG".into(),
            self.model.to_string(),
            self.config.to_string(),
            String::new(),
            self.cmax.to_string(),
            String::new(),
            format!("solved={}/{} optimal={}", self.solved, self.runs, self.optimal),
            format!("{:.3}", self.seconds),
            String::new(),
        ]
    }
}

pub fn write_csv<W: std::io::Write>(out: W, rows: &[RunRow], avgs: &[AverageRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record(r.csv_fields())?;
    }
    for a in avgs {
        w.write_record(a.csv_fields())?;
    }
    w.flush()?;
    Ok(())
}

/// One solve of one instance, shared by the bench runner and the CLI.
#[derive(Clone, Debug)]
pub struct RunSettings {
    pub time_limit: Duration,
    pub workers: usize,
    pub seed: u64,
    pub node_limit: Option<u64>,
    pub warm_start: bool,
    pub initial_deadhead: bool,
}

impl RunSettings {
    pub fn accel_config(&self) -> AccelConfig {
        AccelConfig {
            solver: SolverConfig {
                time_limit: self.time_limit,
                workers: self.workers,
                seed: self.seed,
                node_limit: self.node_limit,
                ..SolverConfig::default()
            },
            build: BuildOptions { initial_deadhead: self.initial_deadhead },
            use_relaxation: self.warm_start,
            ..AccelConfig::default()
        }
    }
}

pub fn status_name(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Optimal => "Optimal",
        SolveStatus::Feasible => "Feasible",
        SolveStatus::Infeasible => "Infeasible",
        SolveStatus::TimeoutNoSolution => "Timeout",
    }
}

/// Solves and fills a row. Full models are validated before a makespan is
/// reported; any failure becomes an Error row.
pub fn run_cell(inst: &Instance, model: BenchModel, config: GridPoint, settings: &RunSettings) -> RunRow {
    let mut row = RunRow {
        instance: inst.name().to_string(),
        model,
        config,
        seed: settings.seed,
        cmax: None,
        bound: None,
        status: "Error".into(),
        seconds: 0.0,
        nodes: 0,
        error: None,
    };
    let result = match model {
        BenchModel::Relax => build_fjsp_relaxation(inst).map_err(|e| e.to_string()).and_then(|(m, _)| {
            let cfg = settings.accel_config().solver;
            engine::solve(&m, &cfg).map_err(|e| e.to_string())
        }),
        BenchModel::Arc | BenchModel::Embedded => {
            let f = if model == BenchModel::Arc { Formulation::Arc } else { Formulation::Embedded };
            solve_with_acceleration(inst, f, &settings.accel_config()).map(|o| o.report).map_err(|e| e.to_string())
        }
    };
    match result {
        Ok(r) => {
            row.cmax = r.objective;
            row.bound = Some(r.bound);
            row.status = status_name(r.status).into();
            row.seconds = r.runtime.as_secs_f64();
            row.nodes = r.nodes;
        }
        Err(e) => row.error = Some(e),
    }
    row
}

/// Loads the instances of one source, one per grid point. A grid point the
/// generator rejects is returned as an error in place.
pub fn expand_source(
    src: &InstanceSource,
    spec: &BenchSpec,
    base_dir: &Path,
) -> Result<Vec<(GridPoint, Result<Instance, String>)>, String> {
    let path = base_dir.join(&src.path);
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = src.name.clone().unwrap_or(stem);
    match src.format {
        SourceFormat::Canonical => {
            let inst = parse_instance(&text).map_err(|e| format!("{}: {e}", path.display()))?;
            Ok(vec![(GridPoint::File, Ok(inst.with_name(name)))])
        }
        SourceFormat::Fjs => {
            let base = parse_flexible_jobshop(&text).map_err(|e| format!("{}: {e}", path.display()))?;
            let layout = match &src.layout {
                Some(l) => {
                    let lp = base_dir.join(l);
                    let t = std::fs::read_to_string(&lp).map_err(|e| format!("{}: {e}", lp.display()))?;
                    Some(parse_layout(&t).map_err(|e| format!("{}: {e}", lp.display()))?)
                }
                None => None,
            };
            let mut out = Vec::new();
            for &zones in &spec.zones {
                for &transbots in &spec.transbots {
                    for &layout_seed in &spec.layout_seeds {
                        let cfg = GenConfig {
                            layout: layout.clone(),
                            zones,
                            transbots,
                            seed: layout_seed,
                            ..GenConfig::new(name.clone(), base.clone(), src.scale)
                        };
                        let gp = GridPoint::Generated { zones, transbots, layout_seed };
                        out.push((gp, generate_instance(&cfg).map_err(|e| e.to_string())));
                    }
                }
            }
            Ok(out)
        }
    }
}

/// Runs the whole grid. Rows come back sorted by (instance, model, config,
/// seed) whatever the completion order; `on_row` sees them as they finish.
pub fn run_bench(spec: &BenchSpec, base_dir: &Path, on_row: &(dyn Fn(&RunRow) + Sync)) -> Result<Vec<RunRow>, String> {
    spec.check()?;
    let mut cells: Vec<(Option<Instance>, String, BenchModel, GridPoint, u64, Option<String>)> = Vec::new();
    for src in &spec.instances {
        let name = src
            .name
            .clone()
            .unwrap_or_else(|| src.path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
        match expand_source(src, spec, base_dir) {
            Ok(list) => {
                for (gp, inst) in list {
                    for &m in &spec.formulations {
                        for rep in 0..spec.repetitions {
                            let seed = spec.seed + rep as u64;
                            match &inst {
                                Ok(i) => cells.push((Some(i.clone()), name.clone(), m, gp, seed, None)),
                                Err(e) => cells.push((None, name.clone(), m, gp, seed, Some(e.clone()))),
                            }
                        }
                    }
                }
            }
            Err(e) => {
                for &m in &spec.formulations {
                    cells.push((None, name.clone(), m, GridPoint::File, spec.seed, Some(e.clone())));
                }
            }
        }
    }

    let next = AtomicUsize::new(0);
    let rows = Mutex::new(Vec::with_capacity(cells.len()));
    let run_one = |k: usize| {
        let (inst, name, model, gp, seed, err) = &cells[k];
        let row = match inst {
            Some(inst) => {
                let settings = RunSettings {
                    time_limit: Duration::from_secs_f64(spec.time_limit),
                    workers: spec.workers,
                    seed: *seed,
                    node_limit: spec.node_limit,
                    warm_start: spec.warm_start,
                    initial_deadhead: spec.initial_deadhead,
                };
                run_cell(inst, *model, *gp, &settings)
            }
            None => RunRow {
                instance: name.clone(),
                model: *model,
                config: *gp,
                seed: *seed,
                cmax: None,
                bound: None,
                status: "Error".into(),
                seconds: 0.0,
                nodes: 0,
                error: err.clone(),
            },
        };
        on_row(&row);
        rows.lock().expect("row lock poisoned").push(row);
    };
    std::thread::scope(|scope| {
        for _ in 0..spec.jobs.max(1).min(cells.len().max(1)) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= cells.len() {
                    break;
                }
                run_one(k);
            });
        }
    });
    let mut rows = rows.into_inner().expect("row lock poisoned");
    rows.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(model: BenchModel, cmax: Option<Time>, status: &str) -> RunRow {
        RunRow {
            instance: "x".into(),
            model,
            config: GridPoint::File,
            seed: 0,
            cmax,
            bound: None,
            status: status.into(),
            seconds: 1.0,
            nodes: 0,
            error: None,
        }
    }

    #[test]
    fn mean_is_exact_and_rounds_half_up() {
        assert_eq!(Mean { sum: 131, count: 1 }.to_string(), "131.00");
        assert_eq!(Mean { sum: 10, count: 3 }.to_string(), "3.33");
        assert_eq!(Mean { sum: 20, count: 3 }.to_string(), "6.67");
        assert_eq!(Mean { sum: 1, count: 8 }.to_string(), "0.13");
        assert_eq!(Mean { sum: 0, count: 0 }.to_string(), "");
    }

    #[test]
    fn averages_skip_unsolved_rows() {
        let rows = vec![
            row(BenchModel::Arc, Some(10), "Optimal"),
            row(BenchModel::Arc, Some(13), "Feasible"),
            row(BenchModel::Arc, None, "Error"),
            row(BenchModel::Embedded, Some(7), "Optimal"),
        ];
        let avgs = averages(&rows);
        assert_eq!(avgs.len(), 2);
        assert_eq!((avgs[0].runs, avgs[0].solved, avgs[0].optimal), (3, 2, 1));
        assert_eq!(avgs[0].cmax, Mean { sum: 23, count: 2 });
        assert_eq!(avgs[1].cmax.to_string(), "7.00");
    }

    #[test]
    fn spec_checks() {
        let spec = BenchSpec {
            instances: vec![InstanceSource {
                path: "a.txt".into(),
                format: SourceFormat::Canonical,
                name: None,
                scale: Scale::Medium,
                layout: None,
            }],
            formulations: vec![BenchModel::Arc, BenchModel::Relax],
            zones: default_grid(),
            transbots: default_grid(),
            layout_seeds: default_layout_seeds(),
            time_limit: default_time_limit(),
            workers: 1,
            repetitions: 1,
            seed: 0,
            node_limit: None,
            warm_start: true,
            initial_deadhead: true,
            jobs: 1,
        };
        assert!(spec.check().is_ok());
        assert!(BenchSpec { formulations: vec![], ..spec.clone() }.check().is_err());
        assert!(BenchSpec { instances: vec![], ..spec.clone() }.check().is_err());
        assert!(BenchSpec { time_limit: 0.0, ..spec }.check().is_err());
    }
}
