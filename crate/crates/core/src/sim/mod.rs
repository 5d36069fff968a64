//! Radial time evolution of the partial-mass field `v`.

pub mod blowup;
pub mod config;
pub mod grid;
pub mod initial;
pub mod io;
pub mod run;
pub mod scheme;
pub mod transform;

pub use blowup::{estimate_blowup_time, BlowupEstimate};
pub use config::{InitSpec, SimConfig};
pub use grid::{Grid, Spacing};
pub use initial::{make_initial_data, make_initial_data_on, perturbed_profile};
pub use scheme::{Boundary, Frame, Integrator, RadialState, Scheme};
pub use transform::{transform, Field, Representation};
pub use run::{run, run_from, run_verdict, slice_count, PhysicalSample, StopReason, Trajectory};
