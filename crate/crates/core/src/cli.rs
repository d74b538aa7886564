//! Command-line front end.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::allocation::{
    allocate_with_gimbal_fallback, extract_arm_commands, minimum_norm_oracle, saturate_thrust_set, EnvelopeDocument,
};
use crate::config::{ConfigError, ScenarioConfig};
use crate::roa;
use crate::sim::run_scenario;
use crate::so3::Vec3;
use crate::telemetry;
use crate::vehicle::Wrench;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "morphquad", version, about = "Thrust-vectoring quadrotor simulation and allocation tools")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario file (TOML). Defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// RNG seed, overriding the config's `seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario, writing telemetry CSV and a JSON summary.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Sample the force and torque envelopes.
    Envelope {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n_dirs: Option<usize>,
    },
    /// Monte-Carlo region-of-attraction study.
    Roa {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Print the allocation of one body-frame wrench.
    Allocate {
        #[command(flatten)]
        common: Common,
        /// Force as X,Y,Z (N).
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
        force: Vec3,
        /// Torque as X,Y,Z (N·m).
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
        torque: Vec3,
    },
}

fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let parts: Vec<f64> =
        s.split(',').map(|p| p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}"))).collect::<Result<_, _>>()?;
    match parts[..] {
        [x, y, z] if parts.iter().all(|v| v.is_finite()) => Ok(Vec3::new(x, y, z)),
        _ => Err(format!("expected three finite comma-separated numbers, got '{s}'")),
    }
}

fn load(common: &Common) -> Result<ScenarioConfig, ConfigError> {
    let mut cfg = match &common.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output.dir = out.clone();
    }
    Ok(cfg)
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    Ok(path)
}

/// Outcome of a command: exit code plus text for stdout and stderr.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Self { code: EXIT_OK, stdout, stderr: String::new() }
    }

    fn fail(code: i32, msg: impl std::fmt::Display) -> Self {
        Self { code, stdout: String::new(), stderr: format!("error: {msg}\n") }
    }
}

pub fn cmd_simulate(cfg: &ScenarioConfig) -> Outcome {
    let dt = cfg.sim.dt;
    let traj = match cfg.trajectory.build(dt) {
        Ok(t) => t,
        Err(e) => return Outcome::fail(EXIT_CONFIG, e),
    };
    let initial = cfg.initial.apply(traj.as_ref());
    let out = match run_scenario(&cfg.sim_config(), &cfg.vehicle, &cfg.gains(), traj.as_ref(), &initial) {
        Ok(o) => o,
        Err(e) => return Outcome::fail(EXIT_FAILURE, e),
    };
    let mut csv = Vec::new();
    telemetry::write_csv(&out.records, &mut csv).expect("writing to memory");
    let summary = telemetry::summary_json(&out.summary);
    let written = write_file(&cfg.output.dir, &cfg.output.telemetry, &csv)
        .and_then(|_| write_file(&cfg.output.dir, &cfg.output.summary, summary.as_bytes()));
    if let Err(e) = written {
        return Outcome::fail(EXIT_FAILURE, e);
    }
    let mut res = Outcome::ok(summary);
    if out.diverged {
        res.code = EXIT_DIVERGED;
        res.stderr = format!(
            "error: diverged at t = {:.3} s (position error above {} m)\n",
            out.records.last().map_or(0.0, |r| r.t),
            cfg.sim.divergence_bound
        );
    }
    res
}

pub fn cmd_envelope(cfg: &ScenarioConfig, n_dirs: Option<usize>) -> Outcome {
    let n = n_dirs.unwrap_or(cfg.envelope.n_dirs);
    if n == 0 {
        return Outcome::fail(EXIT_CONFIG, "--n-dirs must be at least 1");
    }
    let doc = EnvelopeDocument::compute(&cfg.vehicle, n);
    let json = serde_json::to_string_pretty(&doc).expect("envelope is plain data") + "\n";
    if let Err(e) = write_file(&cfg.output.dir, &cfg.output.envelope, json.as_bytes()) {
        return Outcome::fail(EXIT_FAILURE, e);
    }
    Outcome::ok(format!(
        "force:  min {:.6} N, max {:.6} N, ratio {:.6}\ntorque: min {:.6} N·m, max {:.6} N·m, ratio {:.6}\n",
        doc.force.summary.min,
        doc.force.summary.max,
        doc.force.summary.ratio,
        doc.torque.summary.min,
        doc.torque.summary.max,
        doc.torque.summary.ratio
    ))
}

pub fn cmd_roa(cfg: &ScenarioConfig, samples: Option<usize>) -> Outcome {
    let mut roa_cfg = cfg.roa.clone();
    if let Some(n) = samples {
        roa_cfg.samples = n;
    }
    if let Err(e) = roa_cfg.validate() {
        return Outcome::fail(EXIT_CONFIG, e);
    }
    let outcomes = match roa::run_monte_carlo(&roa_cfg, &cfg.gains(), &cfg.vehicle, cfg.seed) {
        Ok(o) => o,
        Err(e) => return Outcome::fail(EXIT_FAILURE, e),
    };
    let mut csv = Vec::new();
    roa::write_csv(&outcomes, &mut csv).expect("writing to memory");
    if let Err(e) = write_file(&cfg.output.dir, &cfg.output.roa, &csv) {
        return Outcome::fail(EXIT_FAILURE, e);
    }
    let converged = outcomes.iter().filter(|o| o.converged).count();
    let min_r2 = outcomes.iter().map(|o| o.r_squared).fold(f64::INFINITY, f64::min);
    Outcome::ok(format!("converged {converged}/{}\nmin R^2 {min_r2:.6}\n", outcomes.len()))
}

pub fn cmd_allocate(cfg: &ScenarioConfig, force: Vec3, torque: Vec3) -> Outcome {
    let p = &cfg.vehicle;
    let w = Wrench::new(force, torque);
    let alloc = allocate_with_gimbal_fallback(&w, p, cfg.sim.gimbal_eps);
    let (applied, sat) = saturate_thrust_set(&alloc.thrusts, p);
    let cmds = match extract_arm_commands(&applied, p) {
        Ok(c) => c,
        Err(e) => return Outcome::fail(EXIT_FAILURE, e),
    };
    let oracle_diff = match minimum_norm_oracle(&w, p) {
        Ok(o) => alloc.thrusts.distance(&o),
        Err(e) => return Outcome::fail(EXIT_FAILURE, e),
    };
    let mut s = String::new();
    let _ = writeln!(s, "arm {:>12} {:>12} {:>12} {:>10} {:>10} {:>12}", "t_x", "t_y", "t_z", "alpha", "beta", "omega");
    for (i, (t, c)) in applied.0.iter().zip(cmds.iter()).enumerate() {
        let _ = writeln!(
            s,
            "{:>3} {:>12.6} {:>12.6} {:>12.6} {:>10.6} {:>10.6} {:>12.4}",
            i + 1,
            t.x,
            t.y,
            t.z,
            c.alpha,
            c.beta,
            c.omega
        );
    }
    let _ = writeln!(s, "energy       {:.9e}", alloc.thrusts.energy());
    let _ = writeln!(s, "oracle_diff  {oracle_diff:.3e}");
    let _ = writeln!(s, "fallback     {}", alloc.fallback);
    let _ = writeln!(s, "saturated    {} (scale {:.6})", sat.saturated, sat.scale);
    Outcome::ok(s)
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK {
                Outcome::ok(text)
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    let common = match &cli.command {
        Command::Simulate { common } | Command::Envelope { common, .. } | Command::Roa { common, .. } => common,
        Command::Allocate { common, .. } => common,
    };
    let cfg = match load(common) {
        Ok(c) => c,
        Err(e) => return Outcome::fail(EXIT_CONFIG, e),
    };
    match cli.command {
        Command::Simulate { .. } => cmd_simulate(&cfg),
        Command::Envelope { n_dirs, .. } => cmd_envelope(&cfg, n_dirs),
        Command::Roa { samples, .. } => cmd_roa(&cfg, samples),
        Command::Allocate { force, torque, .. } => cmd_allocate(&cfg, force, torque),
    }
}

/// Entry point for the binary.
pub fn main() -> i32 {
    let res = run(std::env::args_os());
    let _ = std::io::stdout().write_all(res.stdout.as_bytes());
    let _ = std::io::stderr().write_all(res.stderr.as_bytes());
    res.code
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vec3_flag_parsing() {
        assert_eq!(parse_vec3("1,-2.5, 3").unwrap(), Vec3::new(1.0, -2.5, 3.0));
        assert!(parse_vec3("1,2").is_err());
        assert!(parse_vec3("1,2,x").is_err());
        assert!(parse_vec3("1,2,inf").is_err());
    }

    #[test]
    fn allocate_pure_lift_table() {
        let res = run(["morphquad", "allocate", "--force", "0,0,40", "--torque", "0,0,0"]);
        assert_eq!(res.code, 0, "{}", res.stderr);
        let rows: Vec<&str> = res.stdout.lines().skip(1).take(4).collect();
        for row in rows {
            let cols: Vec<f64> = row.split_whitespace().skip(1).map(|c| c.parse().unwrap()).collect();
            assert_eq!(&cols[..5], &[0.0, 0.0, 10.0, 0.0, 0.0]);
        }
        assert!(res.stdout.contains("fallback     false"));
    }

    #[test]
    fn allocate_flags_fallback_near_gimbal_lock() {
        let res = run(["morphquad", "allocate", "--force", "0,30,0", "--torque", "0,0,1"]);
        assert_eq!(res.code, 0, "{}", res.stderr);
        assert!(res.stdout.contains("fallback     true"), "{}", res.stdout);
    }

    #[test]
    fn bad_flags_are_config_errors() {
        assert_eq!(run(["morphquad", "allocate", "--force", "0,0", "--torque", "0,0,0"]).code, EXIT_CONFIG);
        assert_eq!(run(["morphquad", "simulate", "--config", "/nonexistent/x.toml"]).code, EXIT_CONFIG);
        assert_eq!(run(["morphquad", "frobnicate"]).code, EXIT_CONFIG);
        assert_eq!(run(["morphquad", "--help"]).code, EXIT_OK);
    }
}
