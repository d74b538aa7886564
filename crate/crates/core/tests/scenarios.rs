use std::collections::BTreeSet;
use std::path::PathBuf;

use morphquad::config::ScenarioConfig;
use morphquad::controller::GainSet;
use morphquad::roa::linear_fit;
use morphquad::sim::{run_scenario, ActuatorMode, RigidState, RunSummary, SimConfig};
use morphquad::so3::{exp_so3, Rotation, Vec3};
use morphquad::trajectories::HoverRef;
use morphquad::vehicle::VehicleParams;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn load(name: &str) -> ScenarioConfig {
    ScenarioConfig::load(&root().join("scenarios").join(name)).unwrap()
}

fn run_mode(cfg: &ScenarioConfig, mode: ActuatorMode, check_optimality: bool) -> RunSummary {
    let sim = SimConfig { actuator_mode: mode, check_optimality, ..cfg.sim_config() };
    let traj = cfg.trajectory.build(sim.dt).unwrap();
    let init = cfg.initial.apply(traj.as_ref());
    run_scenario(&sim, &cfg.vehicle, &cfg.gains(), traj.as_ref(), &init).unwrap().summary
}

#[test]
fn bundled_scenarios_parse() {
    let mut n = 0;
    for entry in std::fs::read_dir(root().join("scenarios")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            ScenarioConfig::load(&path).unwrap_or_else(|e| panic!("{e}"));
            n += 1;
        }
    }
    assert!(n >= 6);
}

fn keys(v: &serde_json::Value) -> BTreeSet<String> {
    v.as_object().unwrap().keys().cloned().collect()
}

#[test]
fn schema_matches_config_structure() {
    let schema: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(root().join("schema/scenario.schema.json")).unwrap()).unwrap();
    let cfg = ScenarioConfig { gains: Some(GainSet::scaled_default(4.0)), ..Default::default() };
    let doc = serde_json::to_value(&cfg).unwrap();
    let props = &schema["properties"];
    assert_eq!(keys(props), keys(&doc));
    for block in ["vehicle", "gains", "sim", "initial", "output", "roa", "envelope"] {
        assert_eq!(keys(&props[block]["properties"]), keys(&doc[block]), "{block}");
    }
    let kinds: BTreeSet<String> = props["trajectory"]["oneOf"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v["properties"]["kind"]["const"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(kinds, ["corkscrew", "hover", "pipe", "water_tower"].map(String::from).into());
}

/// Tracking error is ordered ideal ≤ instant ≤ rate-limited (10% slack).
#[test]
fn realism_is_monotone() {
    for name in ["water_tower.toml", "corkscrew.toml", "pipe.toml"] {
        let cfg = load(name);
        let e: Vec<f64> =
            [ActuatorMode::IdealWrench, ActuatorMode::InstantActuators, ActuatorMode::RateLimitedActuators]
                .into_iter()
                .map(|m| run_mode(&cfg, m, false).rms_ep)
                .collect();
        assert!(e[0] <= 1.1 * e[1] && e[1] <= 1.1 * e[2], "{name}: {e:?}");
    }
}

#[test]
fn allocation_is_optimal_in_the_loop() {
    for name in ["corkscrew.toml", "hover_disturbed.toml"] {
        let mut cfg = load(name);
        cfg.sim.duration = Some(4.0);
        let s = run_mode(&cfg, ActuatorMode::InstantActuators, true);
        assert!(s.max_energy_excess.unwrap() <= 1e-9, "{name}: {s:?}");
    }
}

#[test]
fn hover_from_large_attitude_error_decays_log_linearly() {
    let p = VehicleParams::default();
    let g = GainSet::scaled_default(p.mass);
    let traj = HoverRef::new(Vec3::new(0.0, 0.0, 2.0), Rotation::identity(), 8.0);
    // Ψ = 1 − cos θ = 1.9
    let theta = (-0.9f64).acos();
    let init = RigidState::at_rest(Vec3::new(0.0, 0.0, 2.0), exp_so3(&(Vec3::new(1.0, 2.0, -0.5).normalize() * theta)));
    let cfg = SimConfig { actuator_mode: ActuatorMode::IdealWrench, ..Default::default() };
    let out = run_scenario(&cfg, &p, &g, &traj, &init).unwrap();
    assert!((out.records[0].psi - 1.9).abs() < 1e-12);
    let last = out.records.last().unwrap();
    assert!(last.psi < 1e-12);
    let (t, l): (Vec<f64>, Vec<f64>) =
        out.records.iter().take_while(|r| r.psi > 1e-20).map(|r| (r.t, r.psi.ln())).unzip();
    let (slope, r2) = linear_fit(&t, &l);
    assert!(slope < 0.0 && r2 > 0.95, "slope {slope}, R² {r2}");
}

#[test]
fn instant_mode_matches_command_inside_envelope() {
    let cfg = load("water_tower.toml");
    let sim = SimConfig { duration: Some(5.0), ..cfg.sim_config() };
    let traj = cfg.trajectory.build(sim.dt).unwrap();
    let out = run_scenario(&sim, &cfg.vehicle, &cfg.gains(), traj.as_ref(), &cfg.initial.apply(traj.as_ref())).unwrap();
    for r in &out.records {
        assert_eq!(r.sat_scale, 1.0);
        assert!((r.achieved - r.commanded).norm() <= 1e-9 * (1.0 + r.commanded.norm()));
    }
}

#[test]
fn rate_limited_servos_respect_limit() {
    let cfg = load("pipe.toml");
    let sim = cfg.sim_config();
    let traj = cfg.trajectory.build(sim.dt).unwrap();
    let out = run_scenario(&sim, &cfg.vehicle, &cfg.gains(), traj.as_ref(), &cfg.initial.apply(traj.as_ref())).unwrap();
    let max_step = 10.0 * sim.dt * (1.0 + 1e-12);
    let omega_max = cfg.vehicle.max_rotor_speed();
    for pair in out.records.windows(2) {
        for (a, b) in pair[0].actuators.iter().zip(pair[1].actuators.iter()) {
            assert!((b.alpha - a.alpha).abs() <= max_step);
            assert!((b.beta - a.beta).abs() <= max_step);
            assert!((0.0..=omega_max).contains(&b.omega));
        }
    }
}
