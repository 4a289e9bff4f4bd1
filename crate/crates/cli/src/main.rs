//! Batch command-line front end: simulate gaits and transitions, script
//! dances, compute metrics on logs, and sample randomization scenarios.

mod error;
mod plot;
mod report;
mod run;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use gaitgen_core::cpg::{self, GaitDefinition, Leg};
use gaitgen_core::kinematics::RobotGeometry;
use gaitgen_core::logfile::{LocomotionLog, LogWriter, SCHEMA_VERSION};
use gaitgen_core::phasegen::{self, ScriptedGait};
use gaitgen_core::randomize;
use gaitgen_core::trajectory::VelocityCommand;

use error::CliError;
use run::{SimConfig, SimResult, Source, TransitionPlan};

#[derive(Parser)]
#[command(
    name = "gaitgen",
    version,
    about = "Quadruped gait generation, transitions, and log metrics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List gait presets and built-in scripts
    Gaits {
        /// Extra gait presets from a plain-text file
        #[arg(long, value_name = "FILE")]
        gaits_file: Option<PathBuf>,
    },
    /// Simulate a gait or a scripted dance and write a CSV log
    Simulate(SimulateArgs),
    /// Simulate a gait transition and record its progress
    Transition(TransitionArgs),
    /// Evaluate a locomotion log
    Metrics(MetricsArgs),
    /// Sample domain-randomization scenarios as JSON
    Sample(SampleArgs),
}

#[derive(Args)]
struct CommonRunArgs {
    /// Forward velocity command (m/s)
    #[arg(long, default_value_t = 0.0)]
    vx: f64,
    /// Lateral velocity command (m/s)
    #[arg(long, default_value_t = 0.0)]
    vy: f64,
    /// Yaw-rate command (rad/s)
    #[arg(long, default_value_t = 0.0)]
    wz: f64,
    /// Simulated duration (s)
    #[arg(long, default_value_t = 5.0)]
    duration: f64,
    /// Integrator step (s)
    #[arg(long, default_value_t = 0.0025)]
    dt: f64,
    /// Control sampling rate (Hz)
    #[arg(long, default_value_t = 100.0)]
    rate: f64,
    /// Robot geometry file
    #[arg(long, value_name = "FILE")]
    geometry: Option<PathBuf>,
    /// Output base path; writes <out>.csv and <out>.meta.json
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Also write an SVG plot next to the log
    #[arg(long)]
    plot: bool,
    /// Seed for random initial oscillator phases
    #[arg(long)]
    seed: Option<u64>,
    /// Extra gait presets from a plain-text file
    #[arg(long, value_name = "FILE")]
    gaits_file: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Gait preset name
    #[arg(long, conflicts_with = "script")]
    gait: Option<String>,
    /// Built-in script name or script file path
    #[arg(long)]
    script: Option<String>,
    /// Hold one leg at the swing apex (FR, FL, HR, HL or 1..4)
    #[arg(long, value_name = "LEG")]
    pin_leg: Option<String>,
    /// Release the pinned leg at this time (s)
    #[arg(long, value_name = "T")]
    release_at: Option<f64>,
    #[command(flatten)]
    common: CommonRunArgs,
}

#[derive(Args)]
struct TransitionArgs {
    /// Initial gait preset
    #[arg(long)]
    from: String,
    /// Target gait preset
    #[arg(long)]
    to: String,
    /// Transition start time (s)
    #[arg(long, default_value_t = 1.0)]
    at: f64,
    /// Overshoot strength
    #[arg(long, default_value_t = 0.5)]
    k: f64,
    #[command(flatten)]
    common: CommonRunArgs,
}

#[derive(Args)]
struct MetricsArgs {
    /// Locomotion log to evaluate
    #[arg(long, value_name = "FILE")]
    log: PathBuf,
    /// Desired gait to compare the contact sequence against
    #[arg(long)]
    gait: Option<String>,
    /// Write the JSON report here as well
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Robot geometry file (for reward references)
    #[arg(long, value_name = "FILE")]
    geometry: Option<PathBuf>,
    /// Extra gait presets from a plain-text file
    #[arg(long, value_name = "FILE")]
    gaits_file: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    /// Base seed; scenario k uses seed + k
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of scenarios
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Write the JSON here instead of stdout only
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    // Die quietly when stdout closes early (`gaitgen gaits | head`).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gaits { gaits_file } => cmd_gaits(gaits_file.as_deref()),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Transition(args) => cmd_transition(args),
        Command::Metrics(args) => cmd_metrics(args),
        Command::Sample(args) => cmd_sample(args),
    }
}

/// Load presets, optionally extended/overridden by a gaits file.
fn gait_library(gaits_file: Option<&Path>) -> Result<Vec<GaitDefinition>, CliError> {
    let mut gaits = cpg::gait_table();
    if let Some(path) = gaits_file {
        let text = fs::read_to_string(path)?;
        for custom in cpg::parse_gait_file(&text)? {
            gaits.retain(|g| g.name != custom.name);
            gaits.push(custom);
        }
    }
    Ok(gaits)
}

fn resolve_gait(name: &str, gaits_file: Option<&Path>) -> Result<GaitDefinition, CliError> {
    let library = gait_library(gaits_file)?;
    let wanted = name.trim().to_ascii_lowercase().replace('_', "-");
    if let Some(gait) = library.iter().find(|g| g.name == wanted) {
        return Ok(gait.clone());
    }
    cpg::find_gait(name).ok_or_else(|| {
        CliError::config(format!(
            "unknown gait '{name}'; available: {}",
            library
                .iter()
                .map(|g| g.name.as_str())
                .collect::<Vec<_>>()
                .join(", ")
        ))
    })
}

fn resolve_script(spec: &str) -> Result<ScriptedGait, CliError> {
    let path = Path::new(spec);
    if path.exists() {
        let text = fs::read_to_string(path)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_else(|| "script".to_string());
        return Ok(ScriptedGait::parse(name, &text)?);
    }
    phasegen::find_script(spec).ok_or_else(|| {
        CliError::config(format!(
            "unknown script '{spec}'; built-ins: {}",
            phasegen::builtin_scripts()
                .iter()
                .map(|s| s.name().to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ))
    })
}

fn resolve_geometry(path: Option<&Path>) -> Result<RobotGeometry, CliError> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p)?;
            Ok(RobotGeometry::parse(&text)?)
        }
        None => Ok(RobotGeometry::default()),
    }
}

fn parse_leg(spec: &str) -> Result<Leg, CliError> {
    let normalized = spec.trim().to_ascii_uppercase();
    let leg = match normalized.as_str() {
        "1" | "FR" => Leg::FrontRight,
        "2" | "FL" => Leg::FrontLeft,
        "3" | "HR" => Leg::HindRight,
        "4" | "HL" => Leg::HindLeft,
        _ => {
            return Err(CliError::config(format!(
                "invalid leg '{spec}' (use FR, FL, HR, HL or 1..4)"
            )))
        }
    };
    Ok(leg)
}

fn cmd_gaits(gaits_file: Option<&Path>) -> Result<(), CliError> {
    let gaits = gait_library(gaits_file)?;
    println!("gait presets:");
    println!(
        "  {:<18} {:>6} {:>6}  phases (rad)",
        "name", "T(s)", "duty"
    );
    for gait in &gaits {
        let phases = if gait.three_legged {
            gait.offsets[..3]
                .iter()
                .map(|p| format!("{p:.4}"))
                .collect::<Vec<_>>()
                .join(", ")
        } else {
            gait.offsets
                .iter()
                .map(|p| format!("{p:.4}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        println!(
            "  {:<18} {:>6.2} {:>6.3}  [{}]{}",
            gait.name,
            gait.period,
            gait.duty,
            phases,
            if gait.three_legged { "  (three-legged)" } else { "" }
        );
    }
    println!();
    println!("built-in scripts:");
    for script in phasegen::builtin_scripts() {
        let duties = Leg::ALL
            .map(|leg| format!("{} {:.2}", leg.label(), script.leg_duty(leg)))
            .join(", ");
        println!(
            "  {:<18} period {:.2} s  duty [{}]",
            script.name(),
            script.period(),
            duties
        );
    }
    Ok(())
}

/// Strip a trailing `.csv` so `--out runs/trot.csv` and `--out runs/trot`
/// mean the same thing.
fn output_base(out: &Path) -> PathBuf {
    match out.extension() {
        Some(ext) if ext == "csv" => out.with_extension(""),
        _ => out.to_path_buf(),
    }
}

fn write_outputs(
    out: &Path,
    result: &SimResult,
    meta: serde_json::Value,
    plot: bool,
) -> Result<(), CliError> {
    let base = output_base(out);
    if let Some(parent) = base.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }

    let csv_path = base.with_extension("csv");
    let file = fs::File::create(&csv_path)?;
    let mut writer = LogWriter::new(std::io::BufWriter::new(file), &result.columns)?;
    for row in &result.rows {
        writer.write_row(row)?;
    }
    writer.finish()?;

    let meta_path = base.with_extension("meta.json");
    fs::write(&meta_path, serde_json::to_string_pretty(&meta).unwrap())?;

    println!("wrote {} ({} rows)", csv_path.display(), result.rows.len());
    println!("wrote {}", meta_path.display());

    if plot {
        let svg = if result.with_eta {
            plot::transition_plot(&result.columns, &result.rows)
        } else {
            plot::simulate_plot(&result.columns, &result.rows)
        };
        let svg_path = base.with_extension("svg");
        // Plots never affect the exit status.
        match fs::write(&svg_path, svg) {
            Ok(()) => println!("wrote {}", svg_path.display()),
            Err(e) => eprintln!("warning: could not write plot: {e}"),
        }
    }
    Ok(())
}

fn geometry_json(geometry: &RobotGeometry) -> serde_json::Value {
    json!({
        "abduction_offset": geometry.abduction_offset,
        "thigh": geometry.thigh,
        "shank": geometry.shank,
        "body_length": geometry.body_length,
        "body_width": geometry.body_width,
        "stand_height": geometry.stand_height,
        "knee_limits": [geometry.knee_limits.min, geometry.knee_limits.max],
    })
}

fn base_meta(cfg: &SimConfig) -> serde_json::Value {
    json!({
        "schema": SCHEMA_VERSION,
        "source": cfg.source.name(),
        "command": { "vx": cfg.command.forward, "vy": cfg.command.lateral, "wz": cfg.command.yaw_rate },
        "duration": cfg.duration,
        "dt": cfg.dt,
        "rate": cfg.rate,
        "seed": cfg.seed,
        "geometry": geometry_json(&cfg.geometry),
    })
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let common = &args.common;
    let source = match (&args.gait, &args.script) {
        (Some(gait), None) => Source::Gait(resolve_gait(gait, common.gaits_file.as_deref())?),
        (None, Some(script)) => Source::Script(resolve_script(script)?),
        (None, None) => return Err(CliError::config("one of --gait or --script is required")),
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    let pin_leg = args.pin_leg.as_deref().map(parse_leg).transpose()?;
    let cfg = SimConfig {
        source,
        command: VelocityCommand::new(common.vx, common.vy, common.wz),
        duration: common.duration,
        dt: common.dt,
        rate: common.rate,
        geometry: resolve_geometry(common.geometry.as_deref())?,
        seed: common.seed,
        pin_leg,
        release_at: args.release_at,
        transition: None,
    };
    let result = run::simulate(&cfg)?;

    let mut meta = base_meta(&cfg);
    meta["pin_leg"] = json!(cfg.pin_leg.map(|l| l.label()));
    meta["release_at"] = json!(cfg.release_at);
    write_outputs(&common.out, &result, meta, common.plot)
}

fn cmd_transition(args: TransitionArgs) -> Result<(), CliError> {
    let common = &args.common;
    let from = resolve_gait(&args.from, common.gaits_file.as_deref())?;
    let to = resolve_gait(&args.to, common.gaits_file.as_deref())?;
    let cfg = SimConfig {
        source: Source::Gait(from.clone()),
        command: VelocityCommand::new(common.vx, common.vy, common.wz),
        duration: common.duration,
        dt: common.dt,
        rate: common.rate,
        geometry: resolve_geometry(common.geometry.as_deref())?,
        seed: common.seed,
        pin_leg: None,
        release_at: None,
        transition: Some(TransitionPlan {
            target: to.clone(),
            at: args.at,
            overshoot: args.k,
        }),
    };
    let result = run::simulate(&cfg)?;

    // Converged when the recorded remaining progress first drops to the
    // completion threshold.
    let eta_idx = result.columns.len() - 1;
    let converge = result
        .rows
        .iter()
        .find(|row| !row[eta_idx].is_nan() && row[eta_idx] <= cpg::TRANSITION_CONVERGED)
        .map(|row| row[0]);
    match converge {
        Some(t) => println!("transition {} -> {} converged at {t:.2} s", from.name, to.name),
        None => println!(
            "transition {} -> {} did not converge within {} s",
            from.name, to.name, cfg.duration
        ),
    }

    let mut meta = base_meta(&cfg);
    meta["transition"] = json!({
        "from": from.name,
        "to": to.name,
        "at": args.at,
        "k": args.k,
        "converged_at": converge,
    });
    write_outputs(&common.out, &result, meta, common.plot)
}

fn cmd_metrics(args: MetricsArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.log)?;
    let log = LocomotionLog::parse(&text)?;

    // A run's metadata sidecar supplies the command and integrator step.
    let sidecar_path = {
        let base = output_base(&args.log);
        base.with_extension("meta.json")
    };
    let context = match fs::read_to_string(&sidecar_path) {
        Ok(raw) => serde_json::from_str::<serde_json::Value>(&raw)
            .map(|v| report::LogContext::from_sidecar(&v))
            .unwrap_or_default(),
        Err(_) => report::LogContext::default(),
    };

    let gait = args
        .gait
        .as_deref()
        .map(|name| resolve_gait(name, args.gaits_file.as_deref()))
        .transpose()?;
    let geometry = resolve_geometry(args.geometry.as_deref())?;

    let report = report::analyze(
        &log,
        &args.log.display().to_string(),
        gait.as_ref(),
        &context,
        &geometry,
    )?;
    print!("{}", report.text);
    let json = serde_json::to_string_pretty(&report.json).unwrap();
    println!("{json}");
    if let Some(out) = &args.out {
        fs::write(out, &json)?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn cmd_sample(args: SampleArgs) -> Result<(), CliError> {
    if args.count == 0 {
        return Err(CliError::config("--count must be at least 1"));
    }
    let spec = randomize::default_spec();
    let scenarios = randomize::sample_many(&spec, args.seed, args.count)?;
    let json = randomize::scenarios_to_json(&scenarios);
    println!("{json}");
    if let Some(out) = &args.out {
        fs::write(out, &json)?;
        eprintln!("wrote {}", out.display());
    }
    Ok(())
}
