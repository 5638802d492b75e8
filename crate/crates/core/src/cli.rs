//! Command-line front end.
//!
//! Exit codes: 0 success, 1 runtime or I/O failure, 2 usage or validation
//! failure.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::danger::{DangerConfig, Policy};
use crate::detector::DetectorConfig;
use crate::harness::{
    compute_metrics, energy_report, generate_scenario, load_scenario, match_frames, run_pipeline, save_scenario,
    score_trace, write_trace, Beam, EnergyModel, EnergyPreset, EnergyReport, Preset, ScenarioIoError, ScenarioSpec,
    DEFAULT_MATCHING_RADIUS_M,
};
use crate::light::LightController;
use crate::montecarlo::{analytic_p_danger, brute_force_p_danger, load_slope, run_simulation, McConfig};

const SEED_ENV: &str = "BEAMGUARD_SEED";

#[derive(Debug, Parser)]
#[command(name = "beamguard", version, about = "Simulated LiDAR danger detection and headlight control")]
pub struct Cli {
    /// Report layout on standard output.
    #[arg(long, value_enum, default_value_t = Format::Table, global = true)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Aligned human-readable text.
    Table,
    /// One JSON object per line.
    Records,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a scripted scenario to a scenario file.
    Gen(GenArgs),
    /// Play a scenario through detection, danger labeling and the light.
    Run(RunArgs),
    /// Random-box sweep through the danger detector.
    Montecarlo(McArgs),
    /// Headlight energy for a given on-time.
    Energy(EnergyArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum, required_unless_present = "spec", conflicts_with = "spec")]
    pub preset: Option<Preset>,
    /// JSON scenario description instead of a preset.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, env = SEED_ENV)]
    pub seed: Option<u64>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub scenario: PathBuf,
    #[arg(long, value_enum, default_value_t = PolicyArg::Current)]
    pub policy: PolicyArg,
    /// Light timer, seconds.
    #[arg(long, default_value_t = 3.0)]
    pub tau: f64,
    #[arg(long, default_value_t = 3.0)]
    pub reaction_time: f64,
    /// Defaults to the width stored in the scenario file.
    #[arg(long)]
    pub vehicle_width: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_MATCHING_RADIUS_M)]
    pub matching_radius: f64,
    #[arg(long, value_enum, default_value_t = Beam::High)]
    pub beam: Beam,
    /// Also write the per-frame trace here.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[command(flatten)]
    pub detector: DetectorArgs,
}

#[derive(Debug, Args)]
pub struct DetectorArgs {
    #[arg(long)]
    pub cluster_radius: Option<f64>,
    #[arg(long)]
    pub min_cluster_points: Option<usize>,
    #[arg(long)]
    pub max_match_displacement: Option<f64>,
    #[arg(long)]
    pub cost_weight_displacement: Option<f64>,
    #[arg(long)]
    pub cost_weight_iou: Option<f64>,
    #[arg(long)]
    pub process_noise: Option<f64>,
    #[arg(long)]
    pub measurement_noise_position: Option<f64>,
    #[arg(long)]
    pub measurement_noise_velocity: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub ego_sign: Option<f64>,
}

impl DetectorArgs {
    fn apply(&self, mut cfg: DetectorConfig) -> DetectorConfig {
        macro_rules! set {
            ($($f:ident),*) => {$( if let Some(v) = self.$f { cfg.$f = v; } )*};
        }
        set!(
            cluster_radius,
            min_cluster_points,
            max_match_displacement,
            cost_weight_displacement,
            cost_weight_iou,
            process_noise,
            measurement_noise_position,
            measurement_noise_velocity,
            ego_sign
        );
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Current,
    Legacy,
}

impl From<PolicyArg> for Policy {
    fn from(p: PolicyArg) -> Policy {
        match p {
            PolicyArg::Current => Policy::Current,
            PolicyArg::Legacy => Policy::Legacy,
        }
    }
}

#[derive(Debug, Args)]
pub struct McArgs {
    /// Upper bound of the distance and speed ranges.
    #[arg(long, default_value_t = 60)]
    pub n: u64,
    /// Reaction time used by the danger threshold.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 100)]
    pub max_load: u32,
    #[arg(long, default_value_t = 1000)]
    pub trials: u32,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = PolicyArg::Current)]
    pub policy: PolicyArg,
    #[arg(long, default_value_t = 2.0)]
    pub vehicle_width: f64,
}

#[derive(Debug, Args)]
pub struct EnergyArgs {
    #[arg(long, value_enum, conflicts_with_all = ["on_time", "total_time"], required_unless_present_all = ["on_time", "total_time"])]
    pub scenario: Option<EnergyPreset>,
    /// Seconds the light was on.
    #[arg(long, requires = "total_time")]
    pub on_time: Option<f64>,
    /// Length of the drive, seconds.
    #[arg(long, requires = "on_time")]
    pub total_time: Option<f64>,
    #[arg(long, value_enum, default_value_t = Beam::High)]
    pub beam: Beam,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Parse arguments, run, print. Returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(out) => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            if lock.write_all(out.as_bytes()).and_then(|_| lock.flush()).is_err() {
                return 1;
            }
            0
        }
        Err(e) => {
            eprintln!("beamguard: {e}");
            e.exit_code()
        }
    }
}

/// Run a parsed command and return what it would print.
pub fn execute(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Gen(a) => cmd_gen(a, cli.format),
        Command::Run(a) => cmd_run(a, cli.format),
        Command::Montecarlo(a) => cmd_montecarlo(a, cli.format),
        Command::Energy(a) => cmd_energy(a, cli.format),
    }
}

fn record(out: &mut String, v: serde_json::Value) {
    out.push_str(&v.to_string());
    out.push('\n');
}

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.prec$}"))
}

fn cmd_gen(a: &GenArgs, format: Format) -> Result<String, CliError> {
    let spec = match (&a.preset, &a.spec) {
        (Some(p), _) => p.spec(a.seed.unwrap_or(0)),
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
            let mut spec: ScenarioSpec =
                serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            if let Some(seed) = a.seed {
                spec.seed = seed;
            }
            spec
        }
        (None, None) => return Err(usage("one of --preset or --spec is required")),
    };
    let scenario = generate_scenario(&spec).map_err(|e| usage(format!("invalid scenario spec: {e}")))?;
    save_scenario(&scenario, &a.output).map_err(|e| runtime(format!("{}: {e}", a.output.display())))?;

    let points: usize = scenario.frames.iter().map(|f| f.points.len()).sum();
    let mut out = String::new();
    match format {
        Format::Records => record(
            &mut out,
            json!({
                "kind": "scenario",
                "name": scenario.meta.name,
                "seed": scenario.meta.seed,
                "frames": scenario.frames.len(),
                "points": points,
                "duration_s": scenario.duration_s(),
            }),
        ),
        Format::Table => {
            let _ = writeln!(out, "name        {}", scenario.meta.name);
            let _ = writeln!(out, "seed        {}", scenario.meta.seed);
            let _ = writeln!(out, "frames      {}", scenario.frames.len());
            let _ = writeln!(out, "points      {points}");
            let _ = writeln!(out, "duration_s  {:.3}", scenario.duration_s());
        }
    }
    Ok(out)
}

fn energy_lines(out: &mut String, report: &EnergyReport, format: Format) {
    match format {
        Format::Records => {
            for r in &report.rows {
                record(
                    out,
                    json!({
                        "kind": "energy",
                        "headlight": r.headlight.name(),
                        "beam": report.beam,
                        "watts": r.watts,
                        "on_wh": r.on_wh,
                        "baseline_wh": r.baseline_wh,
                        "saved_wh": r.saved_wh,
                    }),
                );
            }
        }
        Format::Table => {
            let _ = writeln!(out, "{:<12}{:>8}{:>12}{:>14}{:>12}", "headlight", "watts", "on_wh", "baseline_wh", "saved_wh");
            for r in &report.rows {
                let _ = writeln!(
                    out,
                    "{:<12}{:>8}{:>12}{:>14}{:>12}",
                    r.headlight.name(),
                    opt(r.watts, 1),
                    opt(r.on_wh, 4),
                    opt(r.baseline_wh, 4),
                    opt(r.saved_wh, 4)
                );
            }
        }
    }
}

fn cmd_run(a: &RunArgs, format: Format) -> Result<String, CliError> {
    let detector = a.detector.apply(DetectorConfig::default());
    detector.validate().map_err(usage)?;
    LightController::new(a.tau).map_err(usage)?;
    if !(a.matching_radius > 0.0 && a.matching_radius.is_finite()) {
        return Err(usage("--matching-radius must be positive"));
    }

    let scenario = load_scenario(&a.scenario).map_err(|e| match e {
        ScenarioIoError::Io(e) => runtime(format!("{}: {e}", a.scenario.display())),
        other => runtime(format!("{}: {other}", a.scenario.display())),
    })?;
    let danger = DangerConfig {
        reaction_time_s: a.reaction_time,
        vehicle_width_m: a.vehicle_width.unwrap_or(scenario.meta.vehicle_width_m),
        policy: a.policy.into(),
    };
    danger.validate().map_err(usage)?;

    let trace = run_pipeline(&scenario, &detector, &danger, a.tau).map_err(runtime)?;
    if let Some(path) = &a.trace {
        let matches = match_frames(&trace, &scenario.ground_truth, a.matching_radius);
        let file = fs::File::create(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
        write_trace(&trace, &matches, BufWriter::new(file)).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    }
    let cm = score_trace(&trace, &scenario.ground_truth, a.matching_radius);
    let m = compute_metrics(&cm);
    let on_s = trace.light_on_s();
    let accepted = trace.frames.iter().filter(|f| f.accepted).count();
    let energy = energy_report(on_s, trace.duration_s, &EnergyModel::default(), a.beam).map_err(runtime)?;

    let mut out = String::new();
    match format {
        Format::Records => {
            record(
                &mut out,
                json!({
                    "kind": "run",
                    "scenario": trace.name,
                    "policy": danger.policy,
                    "tau_s": a.tau,
                    "frames": trace.frames.len(),
                    "duration_s": trace.duration_s,
                    "dangerous_verdicts": trace.dangerous_verdict_count(),
                    "accepted_messages": accepted,
                    "light_on_s": on_s,
                }),
            );
            record(&mut out, json!({ "kind": "confusion", "tp": cm.tp, "fp": cm.fp, "fn": cm.fn_, "tn": cm.tn }));
            record(
                &mut out,
                json!({
                    "kind": "metrics",
                    "precision": m.precision,
                    "recall": m.recall,
                    "accuracy": m.accuracy,
                    "f1": m.f1,
                }),
            );
        }
        Format::Table => {
            let _ = writeln!(out, "scenario            {}", trace.name);
            let _ = writeln!(out, "policy              {}", a.policy.to_possible_value().map_or_else(String::new, |v| v.get_name().to_string()));
            let _ = writeln!(out, "tau_s               {:.3}", a.tau);
            let _ = writeln!(out, "frames              {}", trace.frames.len());
            let _ = writeln!(out, "duration_s          {:.3}", trace.duration_s);
            let _ = writeln!(out, "dangerous_verdicts  {}", trace.dangerous_verdict_count());
            let _ = writeln!(out, "accepted_messages   {accepted}");
            let _ = writeln!(out, "light_on_s          {on_s:.3}");
            let _ = writeln!(out);
            let _ = writeln!(out, "tp {}  fp {}  fn {}  tn {}", cm.tp, cm.fp, cm.fn_, cm.tn);
            let pct = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{:.2}%", 100.0 * x));
            let _ = writeln!(out, "precision           {}", pct(m.precision));
            let _ = writeln!(out, "recall              {}", pct(m.recall));
            let _ = writeln!(out, "accuracy            {}", pct(m.accuracy));
            let _ = writeln!(out, "f1                  {}", pct(m.f1));
            let _ = writeln!(out);
        }
    }
    energy_lines(&mut out, &energy, format);
    Ok(out)
}

fn cmd_montecarlo(a: &McArgs, format: Format) -> Result<String, CliError> {
    let cfg = McConfig {
        n: a.n,
        alpha: a.alpha,
        max_load: a.max_load,
        num_trials: a.trials,
        seed: a.seed,
    };
    cfg.validate().map_err(usage)?;
    let danger = DangerConfig {
        reaction_time_s: a.alpha,
        vehicle_width_m: a.vehicle_width,
        policy: a.policy.into(),
    };
    danger.validate().map_err(usage)?;
    let result = run_simulation(&cfg, &danger).map_err(runtime)?;
    let analytic = analytic_p_danger(a.n, a.alpha).ok();
    let brute = brute_force_p_danger(a.n, a.alpha).ok();
    let fit = load_slope(&result.averages, 0.95);

    let mut out = String::new();
    match format {
        Format::Records => {
            for (i, avg) in result.averages.iter().enumerate() {
                record(&mut out, json!({ "kind": "load", "load": i + 1, "mean": avg }));
            }
            record(
                &mut out,
                json!({
                    "kind": "summary",
                    "n": a.n,
                    "alpha": a.alpha,
                    "max_load": a.max_load,
                    "num_trials": a.trials,
                    "seed": a.seed,
                    "grand_mean": result.grand_mean,
                    "analytic": analytic,
                    "brute_force": brute,
                    "slope": fit.map(|f| f.slope),
                    "slope_ci_low": fit.map(|f| f.ci_low),
                    "slope_ci_high": fit.map(|f| f.ci_high),
                }),
            );
        }
        Format::Table => {
            let _ = writeln!(out, "{:>6}{:>12}", "load", "mean");
            for (i, avg) in result.averages.iter().enumerate() {
                let _ = writeln!(out, "{:>6}{:>12.6}", i + 1, avg);
            }
            let _ = writeln!(out);
            let _ = writeln!(out, "n             {}", a.n);
            let _ = writeln!(out, "alpha         {}", a.alpha);
            let _ = writeln!(out, "max_load      {}", a.max_load);
            let _ = writeln!(out, "num_trials    {}", a.trials);
            let _ = writeln!(out, "seed          {}", a.seed);
            let _ = writeln!(out, "grand_mean    {:.6}", result.grand_mean);
            let _ = writeln!(out, "analytic      {}", opt(analytic, 6));
            let _ = writeln!(out, "brute_force   {}", opt(brute, 6));
            let _ = writeln!(out, "slope         {}", opt(fit.map(|f| f.slope), 8));
            let _ = writeln!(
                out,
                "slope_ci_95   {}",
                fit.map_or_else(|| "n/a".to_string(), |f| format!("[{:.8}, {:.8}]", f.ci_low, f.ci_high))
            );
        }
    }
    Ok(out)
}

fn cmd_energy(a: &EnergyArgs, format: Format) -> Result<String, CliError> {
    let (on, total) = match (a.scenario, a.on_time, a.total_time) {
        (Some(p), _, _) => p.times(),
        (None, Some(on), Some(total)) => (on, total),
        _ => return Err(usage("give --scenario, or both --on-time and --total-time")),
    };
    let report = energy_report(on, total, &EnergyModel::default(), a.beam).map_err(usage)?;
    let mut out = String::new();
    match format {
        Format::Records => record(
            &mut out,
            json!({
                "kind": "energy_summary",
                "on_time_s": report.on_time_s,
                "total_time_s": report.total_time_s,
                "fraction_saved": report.fraction_saved,
            }),
        ),
        Format::Table => {
            let _ = writeln!(out, "on_time_s       {:.3}", report.on_time_s);
            let _ = writeln!(out, "total_time_s    {:.3}", report.total_time_s);
            let _ = writeln!(out, "fraction_saved  {}", opt(report.fraction_saved, 4));
            let _ = writeln!(out);
        }
    }
    energy_lines(&mut out, &report, format);
    Ok(out)
}
