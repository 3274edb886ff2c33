//! Ion species, electrode geometry and drive settings for the coaxial trap.
//!
//! Lengths in geometry types are micrometres; everything downstream of the
//! field solver works in SI units.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::constants::{ATOMIC_MASS_UNIT, ELEMENTARY_CHARGE, MICRO};
use crate::error::{Result, TrapError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IonSpecies {
    /// kg
    pub mass: f64,
    /// C
    pub charge: f64,
    pub label: String,
}

impl IonSpecies {
    pub fn new(mass_number: i64, charge_number: i64) -> Result<Self> {
        make_ion(mass_number, charge_number)
    }

    pub fn magnesium_24() -> Self {
        make_ion(24, 1).expect("valid species")
    }

    pub fn charge_number(&self) -> f64 {
        self.charge / ELEMENTARY_CHARGE
    }
}

pub fn make_ion(mass_number: i64, charge_number: i64) -> Result<IonSpecies> {
    if mass_number <= 0 {
        return Err(TrapError::InvalidInput(format!(
            "mass number must be positive, got {mass_number}"
        )));
    }
    if charge_number < 1 {
        return Err(TrapError::InvalidInput(format!(
            "charge number must be at least 1, got {charge_number}"
        )));
    }
    Ok(IonSpecies {
        mass: mass_number as f64 * ATOMIC_MASS_UNIT,
        charge: charge_number as f64 * ELEMENTARY_CHARGE,
        label: format!("A={mass_number} Z=+{charge_number}"),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Rf,
    CenterGround,
    OuterGroundPlane,
    CompA,
    CompB,
    CompC,
    CompD,
    AuxiliaryPlane,
}

impl Role {
    pub const COMPENSATION: [Role; 4] = [Role::CompA, Role::CompB, Role::CompC, Role::CompD];

    pub fn is_compensation(self) -> bool {
        matches!(self, Role::CompA | Role::CompB | Role::CompC | Role::CompD)
    }

    pub fn name(self) -> &'static str {
        match self {
            Role::Rf => "rf",
            Role::CenterGround => "center_ground",
            Role::OuterGroundPlane => "outer_ground_plane",
            Role::CompA => "comp_a",
            Role::CompB => "comp_b",
            Role::CompC => "comp_c",
            Role::CompD => "comp_d",
            Role::AuxiliaryPlane => "auxiliary_plane",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Conductor shapes. Tubes and planes are coaxial with the trap axis; rods
/// are vertical cylinders standing anywhere on the ground plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Tube {
        inner_radius_um: f64,
        outer_radius_um: f64,
        z_bottom_um: f64,
        z_top_um: f64,
    },
    /// Zero-thickness annular disk at height `z_um`; `inner_radius_um = 0`
    /// gives a full disk.
    Plane {
        z_um: f64,
        inner_radius_um: f64,
        outer_radius_um: f64,
    },
    Rod {
        radius_um: f64,
        center_um: [f64; 2],
        z_bottom_um: f64,
        z_top_um: f64,
    },
}

impl Shape {
    pub fn is_axisymmetric(&self) -> bool {
        !matches!(self, Shape::Rod { .. })
    }

    /// Radial extent `[min, max]` from the trap axis, µm.
    fn radial_extent(&self) -> (f64, f64) {
        match *self {
            Shape::Tube { inner_radius_um, outer_radius_um, .. } => (inner_radius_um, outer_radius_um),
            Shape::Plane { inner_radius_um, outer_radius_um, .. } => (inner_radius_um, outer_radius_um),
            Shape::Rod { radius_um, center_um, .. } => {
                let d = center_um[0].hypot(center_um[1]);
                ((d - radius_um).max(0.0), d + radius_um)
            }
        }
    }

    fn z_extent(&self) -> (f64, f64) {
        match *self {
            Shape::Tube { z_bottom_um, z_top_um, .. } | Shape::Rod { z_bottom_um, z_top_um, .. } => {
                (z_bottom_um, z_top_um)
            }
            Shape::Plane { z_um, .. } => (z_um, z_um),
        }
    }

    /// True if the SI point lies strictly inside the conductor volume.
    /// Zero-thickness planes never contain a point.
    pub fn contains(&self, p: [f64; 3]) -> bool {
        let (x, y, z) = (p[0] / MICRO, p[1] / MICRO, p[2] / MICRO);
        match *self {
            Shape::Tube { inner_radius_um, outer_radius_um, z_bottom_um, z_top_um } => {
                let r = x.hypot(y);
                (r > inner_radius_um || inner_radius_um == 0.0) && r < outer_radius_um && z > z_bottom_um && z < z_top_um
            }
            Shape::Plane { .. } => false,
            Shape::Rod { radius_um, center_um, z_bottom_um, z_top_um } => {
                (x - center_um[0]).hypot(y - center_um[1]) < radius_um && z > z_bottom_um && z < z_top_um
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Electrode {
    pub role: Role,
    pub shape: Shape,
}

/// A single failed geometry check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub electrodes: Vec<Role>,
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.electrodes.iter().map(|r| r.name()).collect();
        write!(f, "[{}] {}: {}", names.join(", "), self.field, self.message)
    }
}

/// Free parameters of the preset geometries that the measured trap data do
/// not pin down.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PresetOptions {
    pub comp_circle_radius_um: f64,
    pub comp_top_um: f64,
    pub ground_plane_radius_um: f64,
    /// Clearance hole in the ground plane around the rf tube.
    pub ground_plane_hole_radius_um: f64,
    /// Where the tubes end below the ground plane.
    pub tube_bottom_um: f64,
}

impl Default for PresetOptions {
    fn default() -> Self {
        PresetOptions {
            comp_circle_radius_um: 800.0,
            comp_top_um: 900.0,
            ground_plane_radius_um: 5000.0,
            ground_plane_hole_radius_um: 455.0,
            tube_bottom_um: -500.0,
        }
    }
}

pub const OD_RF_UM: f64 = 710.0;
pub const ID_RF_UM: f64 = 535.0;
pub const OD_CGND_UM: f64 = 205.0;
pub const ID_CGND_UM: f64 = 100.0;
pub const OD_COMP_UM: f64 = 150.0;
pub const H_RF_UM: f64 = 1110.0;

/// Azimuth of each compensation rod. A/D and B/C sit on opposite sides so
/// the A-D and B-C lines are the two diagonals.
pub fn compensation_azimuth(role: Role) -> Option<f64> {
    let deg = match role {
        Role::CompA => 45.0,
        Role::CompB => 135.0,
        Role::CompD => 225.0,
        Role::CompC => 315.0,
        _ => return None,
    };
    Some(deg * PI / 180.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapGeometry {
    pub electrodes: Vec<Electrode>,
    /// Protrusion of the centre-ground top above the rf top, µm.
    pub delta_h_um: f64,
    /// Height of the rf top above the ground plane, µm.
    pub h_rf_um: f64,
}

impl TrapGeometry {
    pub fn electrode(&self, role: Role) -> Option<&Electrode> {
        self.electrodes.iter().find(|e| e.role == role)
    }

    pub fn has_role(&self, role: Role) -> bool {
        self.electrode(role).is_some()
    }

    pub fn ground_plane_z_um(&self) -> f64 {
        match self.electrode(Role::OuterGroundPlane).map(|e| e.shape) {
            Some(Shape::Plane { z_um, .. }) => z_um,
            _ => 0.0,
        }
    }

    fn tube_top(&self, role: Role) -> Option<f64> {
        match self.electrode(role).map(|e| e.shape) {
            Some(Shape::Tube { z_top_um, .. }) => Some(z_top_um),
            _ => None,
        }
    }

    pub fn rf_top_um(&self) -> f64 {
        self.tube_top(Role::Rf).unwrap_or(self.ground_plane_z_um() + self.h_rf_um)
    }

    pub fn center_ground_top_um(&self) -> f64 {
        self.tube_top(Role::CenterGround).unwrap_or(self.rf_top_um() + self.delta_h_um)
    }

    pub fn rf_outer_radius_um(&self) -> Option<f64> {
        match self.electrode(Role::Rf).map(|e| e.shape) {
            Some(Shape::Tube { outer_radius_um, .. }) => Some(outer_radius_um),
            _ => None,
        }
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        self.electrodes.iter().any(|e| e.shape.contains(p))
    }

    pub fn without_compensation(&self) -> TrapGeometry {
        TrapGeometry {
            electrodes: self.electrodes.iter().copied().filter(|e| !e.role.is_compensation()).collect(),
            ..self.clone()
        }
    }

    /// Copy of the geometry with a grounded full disk added at `z_um`.
    pub fn with_auxiliary_plane(&self, z_um: f64, radius_um: f64) -> TrapGeometry {
        let mut g = self.clone();
        g.electrodes.retain(|e| e.role != Role::AuxiliaryPlane);
        g.electrodes.push(Electrode {
            role: Role::AuxiliaryPlane,
            shape: Shape::Plane { z_um, inner_radius_um: 0.0, outer_radius_um: radius_um },
        });
        g
    }

    pub fn validate(&self) -> Vec<Violation> {
        validate_geometry(self)
    }
}

/// One of the three test-trap geometries, differing only in the protrusion
/// of the centre electrode.
pub fn preset_geometry(config_id: u32) -> Result<TrapGeometry> {
    preset_geometry_with(config_id, &PresetOptions::default())
}

pub fn preset_delta_h_um(config_id: u32) -> Result<f64> {
    match config_id {
        1 => Ok(0.0),
        2 => Ok(250.0),
        3 => Ok(500.0),
        other => Err(TrapError::UnknownPreset(other)),
    }
}

pub fn preset_geometry_with(config_id: u32, opts: &PresetOptions) -> Result<TrapGeometry> {
    let delta_h = preset_delta_h_um(config_id)?;
    let ground_z = 0.0;
    let rf_top = ground_z + H_RF_UM;
    let mut electrodes = vec![
        Electrode {
            role: Role::Rf,
            shape: Shape::Tube {
                inner_radius_um: ID_RF_UM / 2.0,
                outer_radius_um: OD_RF_UM / 2.0,
                z_bottom_um: opts.tube_bottom_um,
                z_top_um: rf_top,
            },
        },
        Electrode {
            role: Role::CenterGround,
            shape: Shape::Tube {
                inner_radius_um: ID_CGND_UM / 2.0,
                outer_radius_um: OD_CGND_UM / 2.0,
                z_bottom_um: opts.tube_bottom_um,
                z_top_um: rf_top + delta_h,
            },
        },
        Electrode {
            role: Role::OuterGroundPlane,
            shape: Shape::Plane {
                z_um: ground_z,
                inner_radius_um: opts.ground_plane_hole_radius_um,
                outer_radius_um: opts.ground_plane_radius_um,
            },
        },
    ];
    for role in Role::COMPENSATION {
        let phi = compensation_azimuth(role).expect("compensation role");
        electrodes.push(Electrode {
            role,
            shape: Shape::Rod {
                radius_um: OD_COMP_UM / 2.0,
                center_um: [opts.comp_circle_radius_um * phi.cos(), opts.comp_circle_radius_um * phi.sin()],
                z_bottom_um: ground_z,
                z_top_um: ground_z + opts.comp_top_um,
            },
        });
    }
    Ok(TrapGeometry { electrodes, delta_h_um: delta_h, h_rf_um: H_RF_UM })
}

fn intervals_overlap(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 < b.1 && b.0 < a.1
}

fn closed_overlap(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 <= b.1 && b.0 <= a.1
}

fn conductors_overlap(a: &Shape, b: &Shape) -> bool {
    use Shape::*;
    match (a, b) {
        (Rod { radius_um: r1, center_um: c1, .. }, Rod { radius_um: r2, center_um: c2, .. }) => {
            (c1[0] - c2[0]).hypot(c1[1] - c2[1]) < r1 + r2 && intervals_overlap(a.z_extent(), b.z_extent())
        }
        (Plane { z_um: z1, .. }, Plane { z_um: z2, .. }) => {
            z1 == z2 && intervals_overlap(a.radial_extent(), b.radial_extent())
        }
        (Tube { .. }, Plane { z_um, .. }) | (Plane { z_um, .. }, Tube { .. }) => {
            let tube = if matches!(a, Tube { .. }) { a } else { b };
            closed_overlap(tube.z_extent(), (*z_um, *z_um))
                && intervals_overlap(a.radial_extent(), b.radial_extent())
        }
        (Rod { .. }, Plane { z_um, .. }) | (Plane { z_um, .. }, Rod { .. }) => {
            let rod = if matches!(a, Rod { .. }) { a } else { b };
            intervals_overlap(rod.z_extent(), (*z_um, *z_um))
                && intervals_overlap(a.radial_extent(), b.radial_extent())
        }
        _ => {
            intervals_overlap(a.radial_extent(), b.radial_extent())
                && intervals_overlap(a.z_extent(), b.z_extent())
        }
    }
}

/// Checks every geometry invariant; an empty list means the geometry is valid.
pub fn validate_geometry(g: &TrapGeometry) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |electrodes: Vec<Role>, field: &str, message: String| {
        out.push(Violation { electrodes, field: field.to_string(), message });
    };

    for role in [Role::Rf, Role::CenterGround, Role::OuterGroundPlane] {
        let n = g.electrodes.iter().filter(|e| e.role == role).count();
        if n != 1 {
            push(vec![role], "role", format!("must appear exactly once, found {n}"));
        }
    }
    for role in Role::COMPENSATION.into_iter().chain([Role::AuxiliaryPlane]) {
        let n = g.electrodes.iter().filter(|e| e.role == role).count();
        if n > 1 {
            push(vec![role], "role", format!("appears {n} times"));
        }
    }

    for e in &g.electrodes {
        let lengths: &[(&str, f64)] = &match e.shape {
            Shape::Tube { inner_radius_um, outer_radius_um, z_bottom_um, z_top_um } => {
                if inner_radius_um >= outer_radius_um {
                    push(vec![e.role], "inner_radius_um", format!("{inner_radius_um} >= outer radius {outer_radius_um}"));
                }
                if z_bottom_um >= z_top_um {
                    push(vec![e.role], "z_bottom_um", format!("{z_bottom_um} >= z_top {z_top_um}"));
                }
                [("inner_radius_um", inner_radius_um.max(1e-300)), ("outer_radius_um", outer_radius_um)]
            }
            Shape::Plane { inner_radius_um, outer_radius_um, .. } => {
                if inner_radius_um >= outer_radius_um {
                    push(vec![e.role], "inner_radius_um", format!("{inner_radius_um} >= outer radius {outer_radius_um}"));
                }
                if inner_radius_um < 0.0 {
                    push(vec![e.role], "inner_radius_um", "negative".into());
                }
                [("outer_radius_um", outer_radius_um), ("outer_radius_um", outer_radius_um)]
            }
            Shape::Rod { radius_um, z_bottom_um, z_top_um, .. } => {
                if z_bottom_um >= z_top_um {
                    push(vec![e.role], "z_bottom_um", format!("{z_bottom_um} >= z_top {z_top_um}"));
                }
                [("radius_um", radius_um), ("radius_um", radius_um)]
            }
        };
        for (name, v) in lengths {
            if !(v.is_finite() && *v > 0.0) {
                push(vec![e.role], name, format!("length must be positive and finite, got {v}"));
            }
        }
        if e.role.is_compensation() && !matches!(e.shape, Shape::Rod { .. }) {
            push(vec![e.role], "shape", "compensation electrodes must be rods".into());
        }
        if !e.role.is_compensation() && matches!(e.shape, Shape::Rod { .. }) {
            push(vec![e.role], "shape", "only compensation electrodes may be rods".into());
        }
    }

    for (i, a) in g.electrodes.iter().enumerate() {
        for b in &g.electrodes[i + 1..] {
            if conductors_overlap(&a.shape, &b.shape) {
                push(vec![a.role, b.role], "shape", "conductors overlap".into());
            }
        }
    }

    let ground_z = g.ground_plane_z_um();
    if let Some(Shape::Tube { z_top_um, .. }) = g.electrode(Role::Rf).map(|e| e.shape) {
        if (z_top_um - (ground_z + g.h_rf_um)).abs() > 1e-9 {
            push(vec![Role::Rf, Role::OuterGroundPlane], "h_rf_um", format!(
                "rf top {z_top_um} != ground plane {ground_z} + h_rf {}", g.h_rf_um
            ));
        }
        if let Some(Shape::Tube { z_top_um: c_top, .. }) = g.electrode(Role::CenterGround).map(|e| e.shape) {
            if (c_top - (z_top_um + g.delta_h_um)).abs() > 1e-9 {
                push(vec![Role::CenterGround, Role::Rf], "delta_h_um", format!(
                    "centre top {c_top} != rf top {z_top_um} + delta_h {}", g.delta_h_um
                ));
            }
        }
    }
    out
}

/// Electrode voltages keyed by role; absent roles are at 0 V.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Voltages(pub BTreeMap<Role, f64>);

impl Voltages {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(role: Role, v: f64) -> Self {
        let mut out = Self::new();
        out.set(role, v);
        out
    }

    pub fn get(&self, role: Role) -> f64 {
        self.0.get(&role).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, role: Role, v: f64) -> &mut Self {
        self.0.insert(role, v);
        self
    }

    pub fn with(mut self, role: Role, v: f64) -> Self {
        self.set(role, v);
        self
    }

    pub fn iter(&self) -> impl Iterator<Item = (Role, f64)> + '_ {
        self.0.iter().map(|(r, v)| (*r, *v))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Voltages(self.0.iter().map(|(r, v)| (*r, v * s)).collect())
    }

    pub fn plus(&self, other: &Voltages) -> Self {
        let mut out = self.clone();
        for (r, v) in other.iter() {
            *out.0.entry(r).or_insert(0.0) += v;
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.0.values().all(|v| *v == 0.0)
    }
}

impl FromIterator<(Role, f64)> for Voltages {
    fn from_iter<I: IntoIterator<Item = (Role, f64)>>(iter: I) -> Self {
        Voltages(iter.into_iter().collect())
    }
}

/// Static electrode voltages plus a uniform stray field at the ion.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DcSettings {
    pub voltages: Voltages,
    /// V/m
    pub stray_field: [f64; 3],
}

impl DcSettings {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_voltages(voltages: Voltages) -> Self {
        DcSettings { voltages, stray_field: [0.0; 3] }
    }

    pub fn with_stray_field(mut self, field: [f64; 3]) -> Self {
        self.stray_field = field;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveConfig {
    /// Zero-to-peak rf amplitude, V.
    pub rf_amplitude: f64,
    /// rf angular frequency, rad/s.
    pub rf_frequency: f64,
    pub dc_voltages: Voltages,
}

impl DriveConfig {
    pub fn new(rf_amplitude: f64, rf_frequency: f64) -> Result<Self> {
        if !(rf_frequency.is_finite() && rf_frequency > 0.0) {
            return Err(TrapError::InvalidInput(format!("rf frequency must be positive, got {rf_frequency}")));
        }
        if !(rf_amplitude.is_finite() && rf_amplitude >= 0.0) {
            return Err(TrapError::InvalidInput(format!("rf amplitude must be non-negative, got {rf_amplitude}")));
        }
        Ok(DriveConfig { rf_amplitude, rf_frequency, dc_voltages: Voltages::new() })
    }

    pub fn from_hz(rf_amplitude: f64, rf_frequency_hz: f64) -> Result<Self> {
        Self::new(rf_amplitude, 2.0 * PI * rf_frequency_hz)
    }

    pub fn rf_frequency_hz(&self) -> f64 {
        self.rf_frequency / (2.0 * PI)
    }

    pub fn with_amplitude(&self, u: f64) -> Self {
        DriveConfig { rf_amplitude: u, ..self.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_have_table_protrusions() {
        assert_eq!(preset_geometry(1).unwrap().delta_h_um, 0.0);
        assert_eq!(preset_geometry(2).unwrap().delta_h_um, 250.0);
        assert_eq!(preset_geometry(3).unwrap().delta_h_um, 500.0);
        assert!(matches!(preset_geometry(4), Err(TrapError::UnknownPreset(4))));
    }

    #[test]
    fn centre_ground_outer_radius() {
        let g = preset_geometry(2).unwrap();
        match g.electrode(Role::CenterGround).unwrap().shape {
            Shape::Tube { outer_radius_um, inner_radius_um, z_top_um, .. } => {
                assert_eq!(outer_radius_um, 102.5);
                assert_eq!(inner_radius_um, 50.0);
                assert_eq!(z_top_um, 1110.0 + 250.0);
            }
            other => panic!("unexpected shape {other:?}"),
        }
    }

    #[test]
    fn presets_are_valid_and_differ_only_in_protrusion() {
        let gs: Vec<_> = (1..=3).map(|i| preset_geometry(i).unwrap()).collect();
        for g in &gs {
            assert!(validate_geometry(g).is_empty(), "{:?}", validate_geometry(g));
        }
        for g in &gs[1..] {
            for (a, b) in gs[0].electrodes.iter().zip(&g.electrodes) {
                if a.role == Role::CenterGround {
                    let (Shape::Tube { z_top_um: t0, .. }, Shape::Tube { z_top_um: t1, .. }) = (a.shape, b.shape) else {
                        panic!()
                    };
                    assert_eq!(t1 - t0, g.delta_h_um);
                } else {
                    assert_eq!(a, b);
                }
            }
        }
    }

    #[test]
    fn overlap_is_reported_with_both_roles() {
        let mut g = preset_geometry(1).unwrap();
        for e in &mut g.electrodes {
            if let (Role::Rf, Shape::Tube { inner_radius_um, .. }) = (e.role, &mut e.shape) {
                *inner_radius_um = 90.0;
            }
        }
        let v = validate_geometry(&g);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].electrodes.contains(&Role::Rf) && v[0].electrodes.contains(&Role::CenterGround));
    }

    #[test]
    fn missing_rf_is_one_violation() {
        let mut g = preset_geometry(1).unwrap();
        g.electrodes.retain(|e| e.role != Role::Rf);
        let v = validate_geometry(&g);
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].electrodes, vec![Role::Rf]);
        assert_eq!(v[0].field, "role");
    }

    #[test]
    fn inconsistent_protrusion_is_flagged() {
        let mut g = preset_geometry(3).unwrap();
        g.delta_h_um = 400.0;
        let v = validate_geometry(&g);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "delta_h_um");
    }

    #[test]
    fn ion_construction() {
        let mg = make_ion(24, 1).unwrap();
        assert!((mg.mass - 3.9853e-26).abs() / 3.9853e-26 < 1e-4);
        assert_eq!(make_ion(1, 1).unwrap().charge, 1.602176634e-19);
        assert_eq!(make_ion(24, 2).unwrap().charge, 2.0 * 1.602176634e-19);
        assert!(make_ion(0, 1).is_err());
        assert!(make_ion(24, 0).is_err());
    }

    #[test]
    fn drive_rejects_bad_values() {
        assert!(DriveConfig::new(1.0, 0.0).is_err());
        assert!(DriveConfig::new(-1.0, 1.0).is_err());
        assert!(DriveConfig::from_hz(400.0, 11.85e6).is_ok());
    }
}
