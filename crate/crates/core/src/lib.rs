//! Dynamics, geometric tracking control, energy-optimal thrust allocation and
//! scenario simulation for a co-axial quadrotor whose four rotor pairs can be
//! tilted about two axes each.
//!
//! Frames: world is z-up with gravity along −z; body x is the tool/camera
//! axis. Attitudes are body-to-world rotation matrices.

pub mod allocation;
pub mod cli;
pub mod config;
pub mod controller;
pub mod roa;
pub mod sim;
pub mod so3;
pub mod telemetry;
pub mod trajectories;
pub mod vehicle;
