//! CODATA-2018 constants and unit helpers.

use serde::{Deserialize, Serialize};

pub const HBAR: f64 = 1.054_571_817e-34;
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Bohr magneton divided by Planck's constant, Hz/T.
pub const BOHR_MAGNETON_OVER_H: f64 = 1.399_624_493_61e10;
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;

/// A one-Bohr-magneton Zeeman slope rounded to 14 MHz/mT, in Hz/T.
pub const ZEEMAN_SLOPE_14_MHZ_PER_MT: f64 = 14.0e6 / 1.0e-3;

pub const MICRO: f64 = 1e-6;

/// The constant set as a value, for reports that echo their inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub elementary_charge: f64,
    pub atomic_mass_unit: f64,
    pub bohr_magneton_over_h: f64,
}

impl PhysicalConstants {
    pub const CODATA_2018: PhysicalConstants = PhysicalConstants {
        hbar: HBAR,
        elementary_charge: ELEMENTARY_CHARGE,
        atomic_mass_unit: ATOMIC_MASS_UNIT,
        bohr_magneton_over_h: BOHR_MAGNETON_OVER_H,
    };
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA_2018
    }
}

/// A length in micrometres, the unit every geometry file uses.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Micrometers(pub f64);

impl Micrometers {
    pub fn from_meters(m: f64) -> Self {
        Micrometers(m / MICRO)
    }

    pub fn to_meters(self) -> f64 {
        self.0 * MICRO
    }
}
