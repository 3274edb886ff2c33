//! Trap survival as a grounded plane approaches the ion from above.

use std::sync::Arc;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{find_null, secular_frequencies, trap_depth, default_depth_options, DepthDomain, ModeLabel};
use crate::constants::MICRO;
use crate::error::{Result, TrapError};
use crate::field_solver::{default_focus_um, SolverOptions, TrapField};
use crate::model::{DcSettings, DriveConfig, IonSpecies, TrapGeometry};
use crate::pseudopotential::EffectivePotential;

/// Depth below which the trap counts as lost, meV.
pub const LOSS_DEPTH_MEV: f64 = 0.01;

/// Radius of the approaching plane, µm.
pub const PLANE_RADIUS_UM: f64 = 5000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProximityPoint {
    /// Plane height above the unperturbed ion position, µm.
    pub distance_um: f64,
    pub plane_z_um: f64,
    pub null_um: Option<[f64; 3]>,
    pub axial_mhz: Option<f64>,
    pub depth_mev: Option<f64>,
    pub trapped: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProximitySweep {
    pub ion_z_um: f64,
    pub points: Vec<ProximityPoint>,
    /// Largest distance at which the trap is lost, if any.
    pub critical_distance_um: Option<f64>,
}

fn evaluate(
    g: &TrapGeometry,
    opts: &SolverOptions,
    drive: &DriveConfig,
    ion: &IonSpecies,
    dc: &DcSettings,
    hint: Vector3<f64>,
) -> Result<(Vector3<f64>, f64, f64)> {
    let field = TrapField::solve(g, opts)?;
    let ep = EffectivePotential::new(Arc::new(field), drive.clone(), ion.clone());
    let null = find_null(&ep, dc, Some(hint))?;
    let modes = secular_frequencies(&ep, dc, &null)?;
    let axial = modes.iter().find(|m| m.label == ModeLabel::Axial).map_or(f64::NAN, |m| m.frequency_hz);
    let depth = trap_depth(&ep, dc, &null, &default_depth_options(&ep, dc, &null, DepthDomain::for_geometry(g, null.z / MICRO)))?;
    Ok((null, axial, depth.depth_mev()))
}

/// Sweep a grounded disk of radius 5 mm down towards the ion.
/// `distances_um` are plane heights above the unperturbed ion; they are
/// visited from far to near.
pub fn proximity_sweep(
    g: &TrapGeometry,
    solver: &SolverOptions,
    drive: &DriveConfig,
    ion: &IonSpecies,
    dc: &DcSettings,
    distances_um: &[f64],
) -> Result<ProximitySweep> {
    if distances_um.is_empty() || distances_um.iter().any(|d| !(*d > 0.0)) {
        return Err(TrapError::InvalidInput("proximity distances must be positive".into()));
    }
    let mut base = solver.clone();
    base.mesh.focus_um = Some(default_focus_um(g));
    let (ion_null, _, _) = evaluate(g, &base, drive, ion, dc, super::default_null_hint(g))?;
    let ion_z_um = ion_null.z / MICRO;
    let mut d: Vec<f64> = distances_um.to_vec();
    d.sort_by(|a, b| b.total_cmp(a));
    d.dedup();
    let mut hint = ion_null;
    let mut points = Vec::with_capacity(d.len());
    let mut critical = None;
    for dist in d {
        let plane_z_um = ion_z_um + dist;
        let gp = g.with_auxiliary_plane(plane_z_um, PLANE_RADIUS_UM);
        let mut o = base.clone();
        o.mesh.focus_um = Some([0.0, ion_z_um]);
        let point = match evaluate(&gp, &o, drive, ion, dc, hint) {
            Ok((null, axial, depth)) if null.z / MICRO < plane_z_um => {
                hint = null;
                let n = null / MICRO;
                ProximityPoint {
                    distance_um: dist,
                    plane_z_um,
                    null_um: Some([n.x, n.y, n.z]),
                    axial_mhz: Some(axial * 1e-6),
                    depth_mev: Some(depth),
                    trapped: depth >= LOSS_DEPTH_MEV,
                    note: None,
                }
            }
            Ok(_) => ProximityPoint {
                distance_um: dist,
                plane_z_um,
                null_um: None,
                axial_mhz: None,
                depth_mev: None,
                trapped: false,
                note: Some("minimum left the trapping region".into()),
            },
            Err(e @ (TrapError::NoMinimum(_) | TrapError::Saddle { .. } | TrapError::Unbounded | TrapError::InsideConductor(_))) => {
                ProximityPoint {
                    distance_um: dist,
                    plane_z_um,
                    null_um: None,
                    axial_mhz: None,
                    depth_mev: None,
                    trapped: false,
                    note: Some(e.to_string()),
                }
            }
            Err(e) => return Err(e),
        };
        if !point.trapped && critical.is_none() {
            critical = Some(dist);
        }
        points.push(point);
    }
    Ok(ProximitySweep { ion_z_um, points, critical_distance_um: critical })
}
