//! Backbone curves, forced response curves and reduced-model simulation for
//! two-dimensional normal-form manifolds.

mod backbone;
mod frc;
pub mod poly;
mod rom;
mod simulate;

pub use backbone::{backbone, backbone_curve, orbit_amplitudes, BackbonePoint};
pub use frc::{detect_eta, forced_terms, frc_sweep, lifted_amplitudes, FrcConfig, FrcPoint, FrcResult};
pub use rom::{extract_polar_rom, mode_pair, PolarRom};
pub use simulate::{lift_trajectory, rom_integrate, RomTrajectory};
