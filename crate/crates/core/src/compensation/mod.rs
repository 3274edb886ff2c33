//! dc actuators (compensation rods A-D and the centre electrode): stray
//! field nulling, the micromotion diagnostic and radial-mode splitting.

mod rods;

pub use rods::LineChargeRod;

use std::fmt::Write as _;

use nalgebra::{Matrix3, SMatrix, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::MICRO;
use crate::error::{Result, TrapError};
use crate::field_solver::{sample_many, PotentialModel};
use crate::model::{DcSettings, Role, Voltages};
use crate::pseudopotential::EffectivePotential;
use crate::trap_analysis::{find_null, secular_frequencies, SecularMode};

/// Actuators in column order.
pub const ACTUATORS: [Role; 5] = [Role::CompA, Role::CompB, Role::CompC, Role::CompD, Role::CenterGround];

/// Displacement below which a trap counts as compensated, µm.
pub const COMPENSATED_THRESHOLD_UM: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Actuator {
    pub role: Role,
    /// Field at the null per volt, V/m.
    pub field: [f64; 3],
    /// Potential Hessian at the null per volt, V/m^2.
    pub hessian: [[f64; 3]; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActuatorBasis {
    pub null_um: [f64; 3],
    pub actuators: Vec<Actuator>,
}

impl ActuatorBasis {
    pub fn field_matrix(&self) -> SMatrix<f64, 3, 5> {
        SMatrix::<f64, 3, 5>::from_fn(|i, k| self.actuators[k].field[i])
    }

    /// Field added at the null by `voltages`.
    pub fn field_of(&self, voltages: &Voltages) -> Vector3<f64> {
        self.actuators.iter().map(|a| Vector3::from(a.field) * voltages.get(a.role)).sum()
    }
}

/// Per-volt field and curvature of every actuator at `null`.
pub fn actuator_basis(model: &dyn PotentialModel, null: &Vector3<f64>) -> Result<ActuatorBasis> {
    let roles = model.roles();
    if let Some(r) = ACTUATORS.iter().find(|r| !roles.contains(r)) {
        return Err(TrapError::MissingRole(*r));
    }
    let sets: Vec<Voltages> = ACTUATORS.iter().map(|r| Voltages::single(*r, 1.0)).collect();
    let refs: Vec<&Voltages> = sets.iter().collect();
    let samples = sample_many(model, &refs, null, true)?;
    let actuators = ACTUATORS
        .iter()
        .zip(samples)
        .map(|(role, s)| Actuator {
            role: *role,
            field: [s.field.x, s.field.y, s.field.z],
            hessian: std::array::from_fn(|i| std::array::from_fn(|j| s.hessian[(i, j)])),
        })
        .collect();
    let n = null / MICRO;
    Ok(ActuatorBasis { null_um: [n.x, n.y, n.z], actuators })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplacementPoint {
    pub rf_amplitude_v: f64,
    pub null_um: [f64; 3],
    /// Offset from the rf null, µm.
    pub displacement_um: [f64; 3],
}

impl DisplacementPoint {
    pub fn magnitude_um(&self) -> f64 {
        Vector3::from(self.displacement_um).norm()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompensationSolution {
    pub voltages: Voltages,
    pub stray_field: [f64; 3],
    /// Stray plus actuator field at the null, V/m.
    pub residual_field: [f64; 3],
    pub residual_norm: f64,
    pub displacement_vs_u: Vec<DisplacementPoint>,
}

impl CompensationSolution {
    /// `dc` with the compensation voltages added.
    pub fn apply(&self, dc: &DcSettings) -> DcSettings {
        DcSettings { voltages: dc.voltages.plus(&self.voltages), stray_field: dc.stray_field }
    }
}

/// Minimum-norm voltages cancelling `stray_field` at the null.
pub fn solve_compensation(basis: &ActuatorBasis, stray_field: [f64; 3]) -> Result<CompensationSolution> {
    let stray = Vector3::from(stray_field);
    if !stray.iter().all(|v| v.is_finite()) {
        return Err(TrapError::InvalidInput("stray field must be finite".into()));
    }
    let m = basis.field_matrix();
    let svd = m.svd(true, true);
    let u = svd.u.expect("requested");
    let v_t = svd.v_t.expect("requested");
    let smax = svd.singular_values.max();
    let tol = 1e-9 * smax;
    let rank = svd.singular_values.iter().filter(|s| **s > tol).count();
    if rank < 3 {
        let null_space = (0..3)
            .filter(|&k| svd.singular_values[k] <= tol)
            .map(|k| [u[(0, k)], u[(1, k)], u[(2, k)]])
            .collect();
        return Err(TrapError::RankDeficient { rank, null_space });
    }
    let mut x = nalgebra::SVector::<f64, 5>::zeros();
    for k in 0..3 {
        let coeff = -u.column(k).dot(&stray) / svd.singular_values[k];
        x += v_t.row(k).transpose() * coeff;
    }
    let voltages: Voltages = ACTUATORS.iter().zip(x.iter()).map(|(r, v)| (*r, *v)).collect();
    let residual = stray + m * x;
    Ok(CompensationSolution {
        voltages,
        stray_field,
        residual_field: [residual.x, residual.y, residual.z],
        residual_norm: residual.norm(),
        displacement_vs_u: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicromotionScan {
    pub rf_null_um: [f64; 3],
    pub points: Vec<DisplacementPoint>,
    /// Largest pairwise distance between minima, µm.
    pub max_pairwise_um: f64,
    pub threshold_um: f64,
    pub compensated: bool,
}

impl MicromotionScan {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("U,dx,dy,dz\n");
        for p in &self.points {
            let d = p.displacement_um;
            writeln!(s, "{},{:.6},{:.6},{:.6}", p.rf_amplitude_v, d[0], d[1], d[2]).expect("string write");
        }
        s
    }
}

/// Minimum position for each rf amplitude in `amplitudes`.
pub fn micromotion_scan(
    ep: &EffectivePotential,
    dc: &DcSettings,
    amplitudes: &[f64],
    hint: Option<Vector3<f64>>,
    threshold_um: f64,
) -> Result<MicromotionScan> {
    if amplitudes.len() < 2 {
        return Err(TrapError::InvalidInput("micromotion scan needs at least two rf amplitudes".into()));
    }
    let rf_null = find_null(ep, &DcSettings::zero(), hint)?;
    let points = amplitudes
        .par_iter()
        .map(|&u| {
            let e = ep.with_drive(ep.drive.with_amplitude(u));
            let p = find_null(&e, dc, Some(rf_null))?;
            let n = p / MICRO;
            let d = (p - rf_null) / MICRO;
            Ok(DisplacementPoint { rf_amplitude_v: u, null_um: [n.x, n.y, n.z], displacement_um: [d.x, d.y, d.z] })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut max_pairwise_um = 0.0f64;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            max_pairwise_um = max_pairwise_um.max((Vector3::from(a.null_um) - Vector3::from(b.null_um)).norm());
        }
    }
    let r = rf_null / MICRO;
    Ok(MicromotionScan {
        rf_null_um: [r.x, r.y, r.z],
        points,
        max_pairwise_um,
        threshold_um,
        compensated: max_pairwise_um < threshold_um,
    })
}

/// A and D at `+volts`, B and C at `-volts`.
pub fn quadrupole_pattern(volts: f64) -> Voltages {
    Voltages::new()
        .with(Role::CompA, volts)
        .with(Role::CompD, volts)
        .with(Role::CompB, -volts)
        .with(Role::CompC, -volts)
}

/// Voltages moved one rod position around the axis (A to B to D to C to
/// A), which is a 90 degree rotation.
pub fn rotate_quarter(v: &Voltages) -> Voltages {
    let next = |r: Role| match r {
        Role::CompA => Role::CompB,
        Role::CompB => Role::CompD,
        Role::CompD => Role::CompC,
        Role::CompC => Role::CompA,
        other => other,
    };
    v.iter().map(|(r, x)| (next(r), x)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialAxes {
    pub null_um: [f64; 3],
    /// Higher-frequency radial mode first.
    pub modes: [SecularMode; 2],
    pub splitting_hz: f64,
}

/// Radial modes and their splitting under the dc settings `dc`.
pub fn radial_axes(ep: &EffectivePotential, dc: &DcSettings, hint: Option<Vector3<f64>>) -> Result<RadialAxes> {
    let null = find_null(ep, dc, hint)?;
    let modes = secular_frequencies(ep, dc, &null)?;
    let (mut a, mut b) = (modes[1], modes[2]);
    if b.frequency_hz > a.frequency_hz {
        std::mem::swap(&mut a, &mut b);
    }
    let n = null / MICRO;
    Ok(RadialAxes { null_um: [n.x, n.y, n.z], modes: [a, b], splitting_hz: a.frequency_hz - b.frequency_hz })
}

/// Angle between two axes ignoring sign, degrees.
pub fn axis_angle_deg(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    (a.dot(b).abs() / (a.norm() * b.norm())).min(1.0).acos().to_degrees()
}

/// Rotation by 90 degrees about z, used to rotate principal axes.
pub fn quarter_turn() -> Matrix3<f64> {
    Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic_basis() -> ActuatorBasis {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let f = [[-s, -s, 0.1], [s, -s, 0.1], [s, s, 0.1], [-s, s, 0.1], [0.0, 0.0, -2.0]];
        ActuatorBasis {
            null_um: [0.0; 3],
            actuators: ACTUATORS.iter().zip(f).map(|(r, field)| Actuator { role: *r, field, hessian: [[0.0; 3]; 3] }).collect(),
        }
    }

    #[test]
    fn zero_stray_gives_zero_voltages() {
        let s = solve_compensation(&synthetic_basis(), [0.0; 3]).unwrap();
        assert!(s.voltages.iter().all(|(_, v)| v == 0.0));
    }

    #[test]
    fn round_trip_cancels_stray() {
        let b = synthetic_basis();
        let s = solve_compensation(&b, [10.0, -3.0, 2.0]).unwrap();
        let total = Vector3::new(10.0, -3.0, 2.0) + b.field_of(&s.voltages);
        assert!(total.norm() < 1e-9);
        assert!(s.residual_norm < 1e-9);
    }

    #[test]
    fn rank_deficiency_reports_direction() {
        let mut b = synthetic_basis();
        for a in &mut b.actuators {
            a.field[2] = 0.0;
        }
        match solve_compensation(&b, [1.0, 0.0, 0.0]) {
            Err(TrapError::RankDeficient { rank, null_space }) => {
                assert_eq!(rank, 2);
                assert_eq!(null_space.len(), 1);
                assert!((null_space[0][2].abs() - 1.0).abs() < 1e-9);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn quarter_rotation_cycles_rods() {
        let v = Voltages::single(Role::CompA, 1.0);
        let r = rotate_quarter(&rotate_quarter(&rotate_quarter(&rotate_quarter(&v))));
        assert_eq!(r, v);
        assert_eq!(rotate_quarter(&v).get(Role::CompB), 1.0);
        let q = quadrupole_pattern(0.5);
        assert_eq!(rotate_quarter(&q), q.scaled(-1.0));
    }
}
