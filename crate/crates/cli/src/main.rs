use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use greener_core::cfg::{build_cfg, to_dot};
use greener_core::energy::{activity_stats, compare_report};
use greener_core::{
    analyze, annotate, parse_program, serialize_program, simulate, Mode, Program, Scheduler, SimConfig, SimResult,
    Threshold,
};

#[derive(Parser)]
#[command(
    name = "greener",
    version,
    about = "Register power-state analysis and warp pipeline simulation for GASM kernels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Annotate a program with per-register power states.
    Analyze {
        input: PathBuf,
        /// Minimum instruction distance that justifies a low-power state.
        #[arg(short = 'W', long = "threshold", default_value_t = 3)]
        threshold: u32,
        /// Output file for the annotated program (stdout if omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Write liveness/distance facts for every program point as CSV.
        #[arg(long)]
        dump_facts: Option<PathBuf>,
    },
    /// Simulate one mode and write a report.
    Sim {
        input: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, value_parser = parse_mode)]
        mode: Option<Mode>,
        /// Report JSON (stdout if omitted).
        #[arg(long)]
        report: Option<PathBuf>,
        /// Per-event trace CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Per-warp register activity CSV.
        #[arg(long)]
        activity: Option<PathBuf>,
    },
    /// Simulate several modes on the same configuration and compare them.
    Compare {
        /// Plain or annotated program; annotated with `-W` for greener if plain.
        input: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, value_delimiter = ',', value_parser = parse_mode, default_value = "baseline,sleepreg,greener")]
        modes: Vec<Mode>,
        /// Use this annotated program for greener instead of analysing the input.
        #[arg(long)]
        greener_input: Option<PathBuf>,
        #[arg(short = 'W', long = "threshold", default_value_t = 3)]
        threshold: u32,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Print the basic-block control-flow graph in Graphviz format.
    Cfg {
        input: PathBuf,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
}

#[derive(Args, Clone, Default)]
struct SimArgs {
    /// JSON file with SimConfig fields; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    runtime_opt: Option<bool>,
    #[arg(long, value_parser = parse_scheduler)]
    scheduler: Option<Scheduler>,
    #[arg(long)]
    warps: Option<usize>,
    #[arg(long)]
    regs_per_thread: Option<u32>,
    #[arg(long)]
    wake_sleep: Option<u32>,
    #[arg(long)]
    wake_off: Option<u32>,
    #[arg(long)]
    mem_latency: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Loop trip count for a branch target, as LABEL=N. Repeatable.
    #[arg(long = "trip-count", value_parser = parse_trip)]
    trip_counts: Vec<(String, u32)>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
}

fn parse_scheduler(s: &str) -> Result<Scheduler, String> {
    match s {
        "lrr" => Ok(Scheduler::Lrr),
        "gto" => Ok(Scheduler::Gto),
        _ => Err(format!("unknown scheduler `{s}` (expected lrr or gto)")),
    }
}

fn parse_trip(s: &str) -> Result<(String, u32), String> {
    let (label, n) = s.split_once('=').ok_or("expected LABEL=N")?;
    let n = n.parse().map_err(|e| format!("trip count `{n}`: {e}"))?;
    Ok((label.to_string(), n))
}

impl SimArgs {
    fn config(&self) -> Result<SimConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = read(path)?;
                serde_json::from_str(&text).with_context(|| format!("{}: invalid configuration", path.display()))?
            }
            None => SimConfig::default(),
        };
        if let Some(v) = self.runtime_opt {
            cfg.runtime_opt = Some(v);
        }
        if let Some(v) = self.scheduler {
            cfg.scheduler = v;
        }
        if let Some(v) = self.warps {
            cfg.warps = v;
        }
        if let Some(v) = self.regs_per_thread {
            cfg.registers_per_thread = v;
        }
        if let Some(v) = self.wake_sleep {
            cfg.wake_sleep_cycles = v;
        }
        if let Some(v) = self.wake_off {
            cfg.wake_off_cycles = v;
        }
        if let Some(v) = self.mem_latency {
            cfg.mem_latency = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        cfg.trip_counts.extend(self.trip_counts.iter().cloned());
        cfg.validate()?;
        Ok(cfg)
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load(path: &Path) -> Result<Program> {
    let text = read(path)?;
    parse_program(&text).with_context(|| format!("{}", path.display()))
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn threshold(w: u32) -> Result<Threshold> {
    Threshold::new(w).context("threshold must be at least 1")
}

fn annotate_with(p: &Program, w: u32) -> Result<Program> {
    let res = analyze(p, threshold(w)?)?;
    Ok(annotate(p, &res)?)
}

fn cmd_analyze(input: &Path, w: u32, output: Option<&Path>, facts: Option<&Path>) -> Result<()> {
    let p = load(input)?.without_power();
    let res = analyze(&p, threshold(w)?).with_context(|| format!("{}", input.display()))?;
    let annotated = annotate(&p, &res)?;
    if let Some(f) = facts {
        emit(Some(f), &res.facts_csv())?;
    }
    emit(output, &serialize_program(&annotated, true))
}

fn activity_csv(p: &Program, r: &SimResult) -> String {
    let trace = r.trace.as_deref().unwrap_or_default();
    let stats = activity_stats(trace, &r.lifetimes(), &p.registers());
    let mut out = String::from("warp,reg,activity\n");
    for ((w, reg), a) in &stats.per_warp {
        out.push_str(&format!("{w},{reg},{a}\n"));
    }
    out
}

fn cmd_sim(
    input: &Path,
    args: &SimArgs,
    mode: Option<Mode>,
    report: Option<&Path>,
    trace: Option<&Path>,
    activity: Option<&Path>,
) -> Result<()> {
    let p = load(input)?;
    let mut cfg = args.config()?;
    if let Some(m) = mode {
        cfg.mode = m;
    }
    cfg.trace = trace.is_some() || activity.is_some();
    let r = simulate(&p, &cfg).with_context(|| format!("{}", input.display()))?;
    if let Some(t) = trace {
        emit(Some(t), &r.trace_csv().unwrap_or_default())?;
    }
    if let Some(a) = activity {
        emit(Some(a), &activity_csv(&p, &r))?;
    }
    let rep = compare_report(&BTreeMap::from([(r.mode, r)]))?;
    emit(report, &(rep.to_json() + "\n"))
}

fn cmd_compare(
    input: &Path,
    args: &SimArgs,
    modes: &[Mode],
    greener_input: Option<&Path>,
    w: u32,
    report: Option<&Path>,
) -> Result<()> {
    if modes.len() < 2 {
        bail!("compare needs at least two modes");
    }
    let base = load(input)?;
    let plain = base.without_power();
    let greener = match greener_input {
        Some(g) => {
            let ann = load(g)?;
            if ann.fingerprint() != plain.fingerprint() {
                bail!("{} and {} are different programs", input.display(), g.display());
            }
            ann
        }
        None if base.is_annotated() => base.clone(),
        None => annotate_with(&plain, w)?,
    };
    let cfg = args.config()?;
    let results = std::thread::scope(|s| {
        let handles: Vec<_> = modes
            .iter()
            .map(|&m| {
                let p = if m == Mode::Greener { &greener } else { &plain };
                let cfg = SimConfig { mode: m, ..cfg.clone() };
                s.spawn(move || simulate(p, &cfg).map(|r| (m, r)))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect::<Result<BTreeMap<_, _>, _>>()
    })?;
    let rep = compare_report(&results)?;
    emit(report, &(rep.to_json() + "\n"))
}

fn cmd_cfg(input: &Path, dot: Option<&Path>) -> Result<()> {
    let p = load(input)?;
    let cfg = build_cfg(&p).with_context(|| format!("{}", input.display()))?;
    emit(dot, &to_dot(&p, &cfg))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze { input, threshold, output, dump_facts } => {
            cmd_analyze(&input, threshold, output.as_deref(), dump_facts.as_deref())
        }
        Command::Sim { input, sim, mode, report, trace, activity } => {
            cmd_sim(&input, &sim, mode, report.as_deref(), trace.as_deref(), activity.as_deref())
        }
        Command::Compare { input, sim, modes, greener_input, threshold, report } => {
            cmd_compare(&input, &sim, &modes, greener_input.as_deref(), threshold, report.as_deref())
        }
        Command::Cfg { input, dot } => cmd_cfg(&input, dot.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
