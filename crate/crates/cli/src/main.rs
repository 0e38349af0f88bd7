//! `fjspth`: generate, solve, validate, benchmark and plot.
//!
//! Exit status: 0 success, 1 usage or config, 2 I/O or parse, 3 infeasible
//! (or a schedule that fails validation), 4 internal invariant failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use fjspth::bench::{averages, run_bench, status_name, write_csv, BenchSpec, RunSettings};
use fjspth::engine::SolveStatus;
use fjspth::formulations::{solve_with_acceleration, Formulation, FormulationError};
use fjspth::gantt::render_gantt;
use fjspth::io::{
    generate_instance, parse_flexible_jobshop, parse_instance, parse_layout, parse_schedule, serialize_instance,
    serialize_schedule, GenConfig, Scale,
};
use fjspth::model::Instance;
use fjspth::verify::validate_schedule;

#[derive(Debug)]
enum Failure {
    Usage(anyhow::Error),
    Io(anyhow::Error),
    Infeasible(anyhow::Error),
    Internal(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Io(_) => 2,
            Failure::Infeasible(_) => 3,
            Failure::Internal(_) => 4,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Usage(e) | Failure::Io(e) | Failure::Infeasible(e) | Failure::Internal(e) => e,
        }
    }
}

type CmdResult = Result<(), Failure>;

#[derive(Parser)]
#[command(name = "fjspth", version, about = "Flexible job shop with zoned transbots and a handoff point")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Switch {
    On,
    Off,
}

impl Switch {
    fn on(self) -> bool {
        matches!(self, Switch::On)
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ScaleArg {
    Small,
    Medium,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ModelArg {
    Arc,
    Embedded,
}

#[derive(Subcommand)]
enum Cmd {
    /// Zone a flexible job shop file into a canonical instance.
    Generate {
        /// Flexible job shop benchmark file.
        #[arg(long)]
        base: PathBuf,
        /// Stocker + machines travel matrix (small scale).
        #[arg(long)]
        layout: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        zones: usize,
        #[arg(long, default_value_t = 2)]
        transbots: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "medium")]
        scale: ScaleArg,
        /// Instance name; defaults to the base file stem.
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve an instance and print one CSV row.
    Solve {
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "embedded")]
        model: ModelArg,
        /// Seconds.
        #[arg(long, default_value_t = 600.0)]
        time_limit: f64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, value_enum, default_value = "on")]
        warm_start: Switch,
        #[arg(long, value_enum, default_value = "on")]
        initial_deadhead: Switch,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Per-worker node budget; with one worker the run is reproducible.
        #[arg(long)]
        node_limit: Option<u64>,
        /// Where to write the schedule.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also print the incumbent trace as `# trace seconds makespan` lines.
        #[arg(long)]
        trace: bool,
    },
    /// Check a schedule; prints one line per violation.
    Validate { instance: PathBuf, schedule: PathBuf },
    /// Run a campaign described by a TOML file.
    Bench {
        spec: PathBuf,
        /// CSV destination; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a schedule as SVG.
    Gantt {
        instance: PathBuf,
        schedule: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(Failure::Io)
}

fn write(path: &Path, text: &str) -> CmdResult {
    fs::write(path, text).with_context(|| format!("writing {}", path.display())).map_err(Failure::Io)
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    let text = read(path)?;
    parse_instance(&text).with_context(|| format!("parsing {}", path.display())).map_err(Failure::Io)
}

fn load_schedule(inst: &Instance, path: &Path) -> Result<fjspth::model::Schedule, Failure> {
    let text = read(path)?;
    parse_schedule(inst, &text).with_context(|| format!("parsing {}", path.display())).map_err(Failure::Io)
}

#[allow(clippy::too_many_arguments)]
fn generate(
    base: &Path,
    layout: Option<&Path>,
    zones: usize,
    transbots: usize,
    seed: u64,
    scale: ScaleArg,
    name: Option<String>,
    out: &Path,
) -> CmdResult {
    let text = read(base)?;
    let data = parse_flexible_jobshop(&text).with_context(|| format!("parsing {}", base.display())).map_err(Failure::Io)?;
    let layout = match layout {
        Some(p) => Some(parse_layout(&read(p)?).with_context(|| format!("parsing {}", p.display())).map_err(Failure::Io)?),
        None => None,
    };
    let name = name.unwrap_or_else(|| base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
    let scale = match scale {
        ScaleArg::Small => Scale::Small,
        ScaleArg::Medium => Scale::Medium,
    };
    let cfg = GenConfig { layout, zones, transbots, seed, ..GenConfig::new(name, data, scale) };
    let inst = generate_instance(&cfg).map_err(|e| Failure::Usage(e.into()))?;
    write(out, &serialize_instance(&inst))?;
    println!(
        "{}: {} operations, {} machines, {} zones, {} transbots, seed {seed}",
        out.display(),
        inst.operations().len(),
        inst.machine_count(),
        inst.zones().len(),
        inst.transbots().len()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn solve(
    path: &Path,
    model: ModelArg,
    time_limit: f64,
    workers: usize,
    warm_start: Switch,
    initial_deadhead: Switch,
    seed: u64,
    node_limit: Option<u64>,
    out: Option<&Path>,
    trace: bool,
) -> CmdResult {
    if !(time_limit.is_finite() && time_limit > 0.0) {
        return Err(Failure::Usage(anyhow::anyhow!("--time-limit must be positive")));
    }
    if workers == 0 {
        return Err(Failure::Usage(anyhow::anyhow!("--workers must be at least 1")));
    }
    let inst = load_instance(path)?;
    let settings = RunSettings {
        time_limit: Duration::from_secs_f64(time_limit),
        workers,
        seed,
        node_limit,
        warm_start: warm_start.on(),
        initial_deadhead: initial_deadhead.on(),
    };
    let f = match model {
        ModelArg::Arc => Formulation::Arc,
        ModelArg::Embedded => Formulation::Embedded,
    };
    let outcome = match solve_with_acceleration(&inst, f, &settings.accel_config()) {
        Ok(o) => o,
        Err(e @ FormulationError::InvalidInstance(_)) => return Err(Failure::Io(e.into())),
        Err(e) => return Err(Failure::Internal(e.into())),
    };
    let r = &outcome.report;
    println!("instance,model,CMAX,bound,status,seconds,nodes");
    println!(
        "{},{f},{},{},{},{:.3},{}",
        inst.name(),
        r.objective.map(|c| c.to_string()).unwrap_or_default(),
        r.bound,
        status_name(r.status),
        r.runtime.as_secs_f64(),
        r.nodes
    );
    if trace {
        for (t, c) in &r.trace {
            println!("# trace {:.3} {c}", t.as_secs_f64());
        }
    }
    if let Some(s) = &outcome.schedule {
        // solve_with_acceleration validates already; a second look costs little
        let v = validate_schedule(&inst, s);
        if let Some(first) = v.first() {
            return Err(Failure::Internal(anyhow::anyhow!("solver produced an invalid schedule: {first}")));
        }
        if let Some(out) = out {
            write(out, &serialize_schedule(&inst, s))?;
        }
    }
    match r.status {
        SolveStatus::Infeasible => Err(Failure::Infeasible(anyhow::anyhow!("{} is infeasible", inst.name()))),
        _ => Ok(()),
    }
}

fn validate(instance: &Path, schedule: &Path) -> CmdResult {
    let inst = load_instance(instance)?;
    let s = load_schedule(&inst, schedule)?;
    let violations = validate_schedule(&inst, &s);
    for v in &violations {
        println!("{v}");
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Failure::Infeasible(anyhow::anyhow!("{} violation(s)", violations.len())))
    }
}

fn bench(spec_path: &Path, out: Option<&Path>) -> CmdResult {
    let text = read(spec_path)?;
    let spec: BenchSpec = toml::from_str(&text)
        .with_context(|| format!("parsing {}", spec_path.display()))
        .map_err(Failure::Usage)?;
    let base_dir = spec_path.parent().unwrap_or(Path::new("."));
    let rows = run_bench(&spec, base_dir, &|r| {
        eprintln!(
            "{} {} {} seed {}: {} {}{}",
            r.instance,
            r.model,
            r.config,
            r.seed,
            r.status,
            r.cmax.map(|c| c.to_string()).unwrap_or_else(|| "-".into()),
            r.error.as_ref().map(|e| format!(" ({e})")).unwrap_or_default()
        );
    })
    .map_err(|e| Failure::Usage(anyhow::anyhow!(e)))?;
    let avgs = averages(&rows);
    let mut buf = Vec::new();
    write_csv(&mut buf, &rows, &avgs).map_err(|e| Failure::Internal(e.into()))?;
    let text = String::from_utf8(buf).map_err(|e| Failure::Internal(e.into()))?;
    match out {
        Some(p) => write(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn gantt(instance: &Path, schedule: &Path, out: Option<&Path>) -> CmdResult {
    let inst = load_instance(instance)?;
    let s = load_schedule(&inst, schedule)?;
    let svg = render_gantt(&inst, &s).map_err(|v| {
        for x in &v {
            eprintln!("{x}");
        }
        Failure::Infeasible(anyhow::anyhow!("refusing to plot a schedule with {} violation(s)", v.len()))
    })?;
    match out {
        Some(p) => write(p, &svg),
        None => {
            print!("{svg}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> CmdResult {
    match cli.cmd {
        Cmd::Generate { base, layout, zones, transbots, seed, scale, name, out } => {
            generate(&base, layout.as_deref(), zones, transbots, seed, scale, name, &out)
        }
        Cmd::Solve { instance, model, time_limit, workers, warm_start, initial_deadhead, seed, node_limit, out, trace } => {
            solve(&instance, model, time_limit, workers, warm_start, initial_deadhead, seed, node_limit, out.as_deref(), trace)
        }
        Cmd::Validate { instance, schedule } => validate(&instance, &schedule),
        Cmd::Bench { spec, out } => bench(&spec, out.as_deref()),
        Cmd::Gantt { instance, schedule, out } => gantt(&instance, &schedule, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
