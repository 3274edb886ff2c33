//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use nalgebra::Vector3;
use stylus_core::trap_analysis::{default_null_hint, find_null};
use stylus_core::{preset_geometry, DcSettings, DriveConfig, EffectivePotential, IonSpecies, SolverOptions, TrapField, TrapGeometry};

/// Preset 1 without rods, solved at the default resolution.
pub struct Fixture {
    pub geometry: TrapGeometry,
    pub potential: EffectivePotential,
    pub null: Vector3<f64>,
}

pub fn fixture() -> Fixture {
    let geometry = preset_geometry(1).unwrap().without_compensation();
    let field = TrapField::solve(&geometry, &SolverOptions::default()).unwrap();
    let drive = DriveConfig::from_hz(80.0, 20e6).unwrap();
    let potential = EffectivePotential::new(Arc::new(field), drive, IonSpecies::magnesium_24());
    let null = find_null(&potential, &DcSettings::zero(), Some(default_null_hint(&geometry))).unwrap();
    Fixture { geometry, potential, null }
}
