//! rf pseudopotential and total secular energy of the ion.
//!
//! `U_ps = q^2 U^2 |grad phi_rf|^2 / (4 m Omega^2)` with `phi_rf` the
//! unit-drive rf basis; the static part is `q (Phi_dc - E_stray . r)`.
//! Public energies are in eV; the `*_si` helpers work in joules.

pub mod contour;

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use contour::{isolines, Isoline, ScalarGrid};

use crate::constants::{ELEMENTARY_CHARGE, MICRO};
use crate::error::{Result, TrapError};
use crate::field_solver::{sample_many, PotentialModel};
use crate::model::{DcSettings, DriveConfig, IonSpecies, Role, Voltages};

/// Step for finite-difference Hessians of the energy.
const ENERGY_HESSIAN_STEP: f64 = 1.0 * MICRO;

#[derive(Clone)]
pub struct EffectivePotential {
    pub model: Arc<dyn PotentialModel>,
    pub drive: DriveConfig,
    pub ion: IonSpecies,
}

impl std::fmt::Debug for EffectivePotential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EffectivePotential")
            .field("roles", &self.model.roles())
            .field("drive", &self.drive)
            .field("ion", &self.ion)
            .finish()
    }
}

/// Energy, gradient and Hessian in SI units (J, J/m, J/m^2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergySample {
    pub energy: f64,
    pub gradient: Vector3<f64>,
    pub hessian: Matrix3<f64>,
}

fn rf_unit() -> Voltages {
    Voltages::single(Role::Rf, 1.0)
}

impl EffectivePotential {
    pub fn new(model: Arc<dyn PotentialModel>, drive: DriveConfig, ion: IonSpecies) -> Self {
        EffectivePotential { model, drive, ion }
    }

    pub fn with_drive(&self, drive: DriveConfig) -> Self {
        EffectivePotential { drive, ..self.clone() }
    }

    /// `q^2 / (4 m Omega^2)`, J m^2 / V^2.
    pub fn kappa(&self) -> f64 {
        let q = self.ion.charge;
        q * q / (4.0 * self.ion.mass * self.drive.rf_frequency * self.drive.rf_frequency)
    }

    fn check(&self, p: &Vector3<f64>) -> Result<()> {
        if self.model.contains(p) {
            Err(TrapError::InsideConductor([p.x, p.y, p.z]))
        } else {
            Ok(())
        }
    }

    /// Pseudopotential in joules.
    pub fn pseudo_energy_si(&self, p: &Vector3<f64>) -> Result<f64> {
        self.check(p)?;
        let u = self.drive.rf_amplitude;
        let (_, e) = self.model.field_many(&[&rf_unit()], p)[0];
        Ok(self.kappa() * u * u * e.norm_squared())
    }

    /// Total secular energy in joules (no Hessian).
    pub fn total_energy_si(&self, dc: &DcSettings, p: &Vector3<f64>) -> Result<f64> {
        self.check(p)?;
        let u = self.drive.rf_amplitude;
        let rf = rf_unit();
        let r = self.model.field_many(&[&rf, &dc.voltages], p);
        let stray = Vector3::from(dc.stray_field);
        Ok(self.kappa() * u * u * r[0].1.norm_squared() + self.ion.charge * (r[1].0 - stray.dot(p)))
    }

    /// Energy and gradient (Hessian left zero).
    pub fn energy_gradient(&self, dc: &DcSettings, p: &Vector3<f64>) -> Result<EnergySample> {
        let u = self.drive.rf_amplitude;
        let rf = rf_unit();
        let s = sample_many(self.model.as_ref(), &[&rf, &dc.voltages], p, false)?;
        let rf_h = self.model.hessian_many(&[&rf], p)[0];
        let q = self.ion.charge;
        let k = self.kappa() * u * u;
        let stray = Vector3::from(dc.stray_field);
        let e_rf = s[0].field;
        Ok(EnergySample {
            energy: k * e_rf.norm_squared() + q * (s[1].potential - stray.dot(p)),
            gradient: -(rf_h * e_rf) * (2.0 * k) - (s[1].field + stray) * q,
            hessian: Matrix3::zeros(),
        })
    }

    /// Energy, gradient and full Hessian; the Hessian is a central
    /// difference of the analytic gradient with a 1 µm step.
    pub fn energy_full(&self, dc: &DcSettings, p: &Vector3<f64>) -> Result<EnergySample> {
        let mut centre = self.energy_gradient(dc, p)?;
        let h = ENERGY_HESSIAN_STEP;
        let mut hess = Matrix3::zeros();
        for j in 0..3 {
            let mut e = Vector3::zeros();
            e[j] = h;
            let gp = self.energy_gradient(dc, &(p + e))?.gradient;
            let gm = self.energy_gradient(dc, &(p - e))?.gradient;
            hess.set_column(j, &((gp - gm) / (2.0 * h)));
        }
        centre.hessian = (hess + hess.transpose()) * 0.5;
        Ok(centre)
    }

    /// Unit-drive rf potential Hessian and dc potential Hessian (V/m^2).
    pub fn curvatures(&self, dc: &Voltages, p: &Vector3<f64>) -> Result<(Matrix3<f64>, Matrix3<f64>)> {
        let rf = rf_unit();
        let s = sample_many(self.model.as_ref(), &[&rf, dc], p, true)?;
        Ok((s[0].hessian, s[1].hessian))
    }
}

/// rf pseudopotential at `point`, eV.
pub fn pseudo_energy(ep: &EffectivePotential, point: &Vector3<f64>) -> Result<f64> {
    Ok(ep.pseudo_energy_si(point)? / ELEMENTARY_CHARGE)
}

/// Pseudopotential plus static potential energy at `point`, eV.
pub fn total_energy(ep: &EffectivePotential, dc: &DcSettings, point: &Vector3<f64>) -> Result<f64> {
    Ok(ep.total_energy_si(dc, point)? / ELEMENTARY_CHARGE)
}

/// A rectangular grid on the plane `origin + a u_axis + b v_axis`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneGrid {
    /// m
    pub origin: [f64; 3],
    pub u_axis: [f64; 3],
    pub v_axis: [f64; 3],
    /// Coordinate ranges along each axis, m.
    pub u_range: [f64; 2],
    pub v_range: [f64; 2],
    pub nu: usize,
    pub nv: usize,
}

impl PlaneGrid {
    /// The x-z plane through the trap axis, ranges in µm.
    pub fn meridian_um(x_range: [f64; 2], z_range: [f64; 2], nx: usize, nz: usize) -> Self {
        PlaneGrid {
            origin: [0.0; 3],
            u_axis: [1.0, 0.0, 0.0],
            v_axis: [0.0, 0.0, 1.0],
            u_range: [x_range[0] * MICRO, x_range[1] * MICRO],
            v_range: [z_range[0] * MICRO, z_range[1] * MICRO],
            nu: nx,
            nv: nz,
        }
    }

    fn coords(range: [f64; 2], n: usize) -> Vec<f64> {
        (0..n).map(|k| range[0] + (range[1] - range[0]) * k as f64 / (n.max(2) - 1) as f64).collect()
    }

    pub fn point(&self, u: f64, v: f64) -> Vector3<f64> {
        Vector3::from(self.origin) + Vector3::from(self.u_axis) * u + Vector3::from(self.v_axis) * v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourMap {
    pub grid: ScalarGrid,
    pub step_ev: f64,
    /// Lowest sampled energy and its plane coordinates (m).
    pub minimum_ev: f64,
    pub minimum_at: [f64; 2],
    pub isolines: Vec<Isoline>,
}

impl ContourMap {
    /// Closed isolines that enclose the sampled minimum.
    pub fn closed_around_minimum(&self) -> usize {
        self.isolines.iter().filter(|l| l.closed && l.encloses(self.minimum_at)).count()
    }

    /// `curve_id,level_ev,closed,u_um,v_um` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("curve_id,level_ev,closed,x_um,z_um\n");
        for (id, line) in self.isolines.iter().enumerate() {
            for p in &line.points {
                let _ = writeln!(out, "{},{},{},{},{}", id, line.level, line.closed, p[0] / MICRO, p[1] / MICRO);
            }
        }
        out
    }
}

/// Total energy sampled on `plane` with isolines at every multiple of
/// `isoline_step` (eV) between the grid minimum and maximum. Nodes inside
/// conductors are clipped.
pub fn contour_map(ep: &EffectivePotential, dc: &DcSettings, plane: &PlaneGrid, isoline_step: f64) -> Result<ContourMap> {
    if !(isoline_step > 0.0) {
        return Err(TrapError::InvalidInput(format!("isoline step must be positive, got {isoline_step}")));
    }
    let u = PlaneGrid::coords(plane.u_range, plane.nu);
    let v = PlaneGrid::coords(plane.v_range, plane.nv);
    let nodes: Vec<(f64, f64)> = v.iter().flat_map(|vj| u.iter().map(move |ui| (*ui, *vj))).collect();
    let values: Vec<f64> = nodes
        .par_iter()
        .map(|(ui, vj)| total_energy(ep, dc, &plane.point(*ui, *vj)).unwrap_or(f64::NAN))
        .collect();
    let grid = ScalarGrid { u, v, values };
    let (mut emin, mut emax, mut at) = (f64::INFINITY, f64::NEG_INFINITY, [0.0, 0.0]);
    for (k, val) in grid.values.iter().enumerate() {
        if !val.is_finite() {
            continue;
        }
        if *val < emin {
            emin = *val;
            at = [grid.u[k % grid.u.len()], grid.v[k / grid.u.len()]];
        }
        emax = emax.max(*val);
    }
    let mut lines = Vec::new();
    if emin.is_finite() {
        let first = (emin / isoline_step).floor() as i64 + 1;
        let last = (emax / isoline_step).ceil() as i64;
        for k in first..=last {
            let level = k as f64 * isoline_step;
            if level > emin && level < emax {
                lines.extend(isolines(&grid, level));
            }
        }
    }
    Ok(ContourMap { grid, step_ev: isoline_step, minimum_ev: emin, minimum_at: at, isolines: lines })
}
