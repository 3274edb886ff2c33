//! Simulation and analysis of open-access coaxial rf ion traps.
//!
//! The usual flow is geometry ([`model`]) to basis potentials
//! ([`field_solver`]) to the secular energy ([`pseudopotential`]) to trap
//! observables ([`trap_analysis`]). [`compensation`], [`optics`] and
//! [`sensing`] build on those results.

pub mod compensation;
pub mod constants;
pub mod error;
pub mod field_solver;
pub mod model;
pub mod optics;
pub mod pseudopotential;
pub mod sensing;
pub mod trap_analysis;

pub use error::{Result, TrapError};
pub use field_solver::{eval, solve_basis, BasisSet, FieldSample, PotentialModel, SolverOptions, TrapField};
pub use model::{
    make_ion, preset_geometry, validate_geometry, DcSettings, DriveConfig, Electrode, IonSpecies, Role, Shape, TrapGeometry,
    Voltages,
};
pub use pseudopotential::EffectivePotential;
pub use trap_analysis::{analyze, ModeLabel, TrapReport};

/// Mesh refinement level used when none is given.
pub const DEFAULT_RESOLUTION: u32 = 4;
