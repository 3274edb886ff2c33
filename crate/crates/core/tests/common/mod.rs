#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::Vector3;
use stylus_core::field_solver::{PotentialModel, SolverOptions, TrapField};
use stylus_core::model::{preset_geometry, DriveConfig, IonSpecies, Role, TrapGeometry, Voltages};
use stylus_core::pseudopotential::EffectivePotential;

/// Drives of the three reference traps: (U in V, rf frequency in Hz).
pub const DRIVES: [(f64, f64); 3] = [(290.0, 80.15e6), (460.0, 31.94e6), (400.0, 11.85e6)];

/// Quadratic rf potential `(A/2) (x^2 + y^2 - 2 z^2)` about `centre`, or
/// the planar quadrupole `(A/2)(x^2 - y^2)` when `planar` is set. Each
/// listed dc role contributes a uniform field along its vector.
pub struct Synthetic {
    pub a: f64,
    pub centre: Vector3<f64>,
    pub planar: bool,
    pub dc: Vec<(Role, Vector3<f64>)>,
}

impl Synthetic {
    pub fn bowl(a: f64, centre: Vector3<f64>) -> Self {
        Synthetic { a, centre, planar: false, dc: Vec::new() }
    }

    pub fn planar(a: f64) -> Self {
        Synthetic { a, centre: Vector3::zeros(), planar: true, dc: Vec::new() }
    }
}

impl PotentialModel for Synthetic {
    fn roles(&self) -> Vec<Role> {
        let mut r = vec![Role::Rf];
        r.extend(self.dc.iter().map(|d| d.0));
        r
    }

    fn contains(&self, _p: &Vector3<f64>) -> bool {
        false
    }

    fn field_many(&self, sets: &[&Voltages], p: &Vector3<f64>) -> Vec<(f64, Vector3<f64>)> {
        let d = p - self.centre;
        let (phi1, e1) = if self.planar {
            (0.5 * self.a * (d.x * d.x - d.y * d.y), Vector3::new(-self.a * d.x, self.a * d.y, 0.0))
        } else {
            (
                0.5 * self.a * (d.x * d.x + d.y * d.y - 2.0 * d.z * d.z),
                Vector3::new(-self.a * d.x, -self.a * d.y, 2.0 * self.a * d.z),
            )
        };
        sets.iter()
            .map(|v| {
                let u = v.get(Role::Rf);
                let mut phi = u * phi1;
                let mut e = e1 * u;
                for (role, field) in &self.dc {
                    let w = v.get(*role);
                    phi -= w * field.dot(p);
                    e += field * w;
                }
                (phi, e)
            })
            .collect()
    }
}

pub fn ion() -> IonSpecies {
    IonSpecies::magnesium_24()
}

/// Solved preset fields, shared within a test binary.
pub fn preset_field(id: u32, with_rods: bool) -> (TrapGeometry, Arc<TrapField>) {
    static CACHE: OnceLock<Mutex<HashMap<(u32, bool), (TrapGeometry, Arc<TrapField>)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap();
    map.entry((id, with_rods))
        .or_insert_with(|| {
            let g = preset_geometry(id).unwrap();
            let g = if with_rods { g } else { g.without_compensation() };
            let f = Arc::new(TrapField::solve(&g, &SolverOptions::default()).unwrap());
            (g, f)
        })
        .clone()
}

/// Effective potential of preset `id` with its reference drive.
pub fn preset_potential(id: u32, with_rods: bool) -> (TrapGeometry, EffectivePotential) {
    let (g, f) = preset_field(id, with_rods);
    let (u, hz) = DRIVES[id as usize - 1];
    (g, EffectivePotential::new(f, DriveConfig::from_hz(u, hz).unwrap(), ion()))
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
