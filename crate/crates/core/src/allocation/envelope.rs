//! Reachable force and torque envelopes under the per-arm thrust limit.
//!
//! Each direction is scanned by bisection on the feasibility predicate of the
//! allocator rather than by the closed forms, so the scan doubles as a check
//! of them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::allocate_wrench;
use crate::so3::Vec3;
use crate::vehicle::{VehicleParams, Wrench};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSample {
    pub direction: [f64; 3],
    pub max_magnitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSummary {
    pub min: f64,
    pub max: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub samples: Vec<EnvelopeSample>,
    pub summary: EnvelopeSummary,
}

/// Exported envelope document: force scan with zero torque, torque scan with zero force.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeDocument {
    pub max_thrust: f64,
    pub force: EnvelopeReport,
    pub torque: EnvelopeReport,
}

impl EnvelopeDocument {
    pub fn compute(params: &VehicleParams, n_dirs: usize) -> Self {
        Self {
            max_thrust: params.max_thrust,
            force: force_envelope(params, n_dirs),
            torque: torque_envelope(params, n_dirs),
        }
    }
}

/// Quasi-uniform unit directions on the sphere (golden-angle spiral).
pub fn fibonacci_sphere(n: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            Vec3::new(rho * phi.cos(), rho * phi.sin(), z)
        })
        .collect()
}

fn feasible(w: &Wrench, params: &VehicleParams) -> bool {
    allocate_wrench(w, params).max_norm() <= params.max_thrust
}

/// Largest `s` with `make(s)` feasible, to a relative tolerance of 1e-12.
fn max_feasible_scale(params: &VehicleParams, make: impl Fn(f64) -> Wrench) -> f64 {
    let mut lo = 0.0;
    let mut hi = params.max_thrust.max(1.0);
    while feasible(&make(hi), params) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return f64::INFINITY;
        }
    }
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if feasible(&make(mid), params) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn scan(params: &VehicleParams, n_dirs: usize, make: impl Fn(Vec3, f64) -> Wrench + Sync) -> EnvelopeReport {
    let samples: Vec<EnvelopeSample> = fibonacci_sphere(n_dirs.max(1))
        .into_par_iter()
        .map(|d| EnvelopeSample {
            direction: [d.x, d.y, d.z],
            max_magnitude: max_feasible_scale(params, |s| make(d, s)),
        })
        .collect();
    let min = samples.iter().map(|s| s.max_magnitude).fold(f64::INFINITY, f64::min);
    let max = samples.iter().map(|s| s.max_magnitude).fold(0.0, f64::max);
    EnvelopeReport { samples, summary: EnvelopeSummary { min, max, ratio: min / max } }
}

/// Maximum pure force (zero torque) per sampled direction.
pub fn force_envelope(params: &VehicleParams, n_dirs: usize) -> EnvelopeReport {
    scan(params, n_dirs, |d, s| Wrench::new(d * s, Vec3::zeros()))
}

/// Maximum pure torque (zero force) per sampled direction.
pub fn torque_envelope(params: &VehicleParams, n_dirs: usize) -> EnvelopeReport {
    scan(params, n_dirs, |d, s| Wrench::new(Vec3::zeros(), d * s))
}
