//! Handover optimization for cellular-connected drones.
//!
//! Given a per-cell RSRP radio map and a 2D flight trajectory, `hosim`
//! learns per-waypoint serving-cell decisions with tabular Q-learning,
//! trading handover count against serving-cell RSRP through a weighted
//! reward, and benchmarks the learned policy against the
//! always-strongest-cell baseline.
//!
//! The pipeline:
//!
//! 1. [`radio_map`] builds, ingests, normalizes, and quantizes the RSRP map.
//! 2. [`trajectory`] generates fixed routes with 8-direction greedy stepping.
//! 3. [`qlearn`] constructs the reward tensor, trains the Q-table, and
//!    extracts policies; an exact backward-induction oracle covers the same
//!    problem for verification.
//! 4. [`eval`] runs seeded multi-route sweeps over weight combinations and
//!    aggregates handover counts, handover ratios, and RSRP CDFs.
//!
//! Runnable walkthroughs live in `examples/`; the `hosim` binary exposes the
//! same pipeline as `synth-map`, `gen-route`, `train`, and `sweep`
//! subcommands.
//!
//! # Example
//!
//! ```
//! use hosim::qlearn::{self, HyperParams};
//! use hosim::radio_map::{quantize, synthesize_samples, GridSpec, SyntheticMapConfig};
//! use hosim::trajectory::{generate_trajectory, Waypoint};
//!
//! let grid_spec = GridSpec {
//!     width_m: 1000.0,
//!     height_m: 800.0,
//!     bin_size_m: 50.0,
//!     ..GridSpec::default()
//! };
//! let map_config = SyntheticMapConfig {
//!     bs_positions: vec![[250.0, 400.0], [750.0, 400.0]],
//!     ..SyntheticMapConfig::default()
//! };
//! let samples = synthesize_samples(&map_config, &grid_spec, 6400).unwrap();
//! let grid = quantize(&samples, &grid_spec).unwrap();
//!
//! let route = generate_trajectory(
//!     Waypoint::new(100.0, 100.0),
//!     Waypoint::new(900.0, 700.0),
//!     50.0,
//!     &grid_spec,
//! )
//! .unwrap();
//!
//! let hp = HyperParams::default();
//! let candidates = qlearn::build_candidates(&grid, &route, hp.k).unwrap();
//! let (reward, _) = qlearn::build_reward(&candidates, hp.w_ho, hp.w_rsrp).unwrap();
//! let q = qlearn::train(&reward, &hp, 42).unwrap();
//! let learned = qlearn::extract_policy(&q, &candidates);
//! let baseline = qlearn::baseline_policy(&candidates);
//! assert!(learned.ho_count <= baseline.ho_count);
//! ```

pub mod commands;
pub mod config;
pub mod error;
pub mod eval;
pub mod qlearn;
pub mod radio_map;
pub mod trajectory;

pub use error::{Error, Result};
