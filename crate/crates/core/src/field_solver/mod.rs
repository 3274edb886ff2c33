//! Electrostatic basis potentials for the trap electrodes.
//!
//! The axisymmetric conductors are solved with a ring-charge boundary
//! element method ([`BasisSet`]); compensation rods are added as
//! collocated line charges ([`crate::compensation::LineChargeRod`]). Both
//! are combined in [`TrapField`].
//!
//! Voltage convention: when the outer ground plane is present, the far
//! boundary (the vacuum enclosure) is tied to it, so the potential is
//! `V_gnd + sum_k (V_k - V_gnd) phi_k`. Adding a constant to every electrode
//! then shifts the potential by exactly that constant.

pub mod bem;
pub mod mesh;
pub mod special;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

pub use bem::{BasisSet, SolverDiagnostics, SolverOptions};
pub use mesh::{MeshOptions, Panel};

use crate::compensation::LineChargeRod;
use crate::constants::MICRO;
use crate::error::{Result, TrapError};
use crate::model::{validate_geometry, Role, TrapGeometry, Voltages};

/// Finite-difference step for Hessians.
pub const HESSIAN_STEP: f64 = 0.5 * MICRO;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    /// m
    pub position: Vector3<f64>,
    /// V
    pub potential: f64,
    /// V/m
    pub field: Vector3<f64>,
    /// Second derivatives of the potential, V/m^2.
    pub hessian: Matrix3<f64>,
}

impl FieldSample {
    pub fn zero(position: Vector3<f64>) -> Self {
        FieldSample { position, potential: 0.0, field: Vector3::zeros(), hessian: Matrix3::zeros() }
    }
}

/// Anything that can produce superposed electrode potentials.
pub trait PotentialModel: Send + Sync {
    fn roles(&self) -> Vec<Role>;

    fn contains(&self, p: &Vector3<f64>) -> bool;

    /// Potential and field for each voltage set at `p`. No conductor check.
    fn field_many(&self, sets: &[&Voltages], p: &Vector3<f64>) -> Vec<(f64, Vector3<f64>)>;

    /// True if the potential for `v` is symmetric about the z axis.
    fn is_axisymmetric(&self, _v: &Voltages) -> bool {
        false
    }

    /// Hessians by five-point central differences of the field.
    fn hessian_many(&self, sets: &[&Voltages], p: &Vector3<f64>) -> Vec<Matrix3<f64>> {
        let h = HESSIAN_STEP;
        let mut out = vec![Matrix3::zeros(); sets.len()];
        for j in 0..3 {
            let mut e = Vector3::zeros();
            e[j] = h;
            let f = |s: f64| self.field_many(sets, &(p + e * s));
            let (p2, p1, m1, m2) = (f(2.0), f(1.0), f(-1.0), f(-2.0));
            for k in 0..sets.len() {
                let de = (-p2[k].1 + p1[k].1 * 8.0 - m1[k].1 * 8.0 + m2[k].1) / (12.0 * h);
                for i in 0..3 {
                    out[k][(i, j)] = -de[i];
                }
            }
        }
        for m in &mut out {
            *m = (*m + m.transpose()) * 0.5;
        }
        out
    }
}

fn reference_voltage(roles: &[Role], v: &Voltages) -> f64 {
    if roles.contains(&Role::OuterGroundPlane) {
        v.get(Role::OuterGroundPlane)
    } else {
        0.0
    }
}

/// Full samples (with Hessians if requested) for several voltage sets.
pub fn sample_many(
    model: &dyn PotentialModel,
    sets: &[&Voltages],
    p: &Vector3<f64>,
    with_hessian: bool,
) -> Result<Vec<FieldSample>> {
    if model.contains(p) {
        return Err(TrapError::InsideConductor([p.x, p.y, p.z]));
    }
    let fields = model.field_many(sets, p);
    let hess = if with_hessian { model.hessian_many(sets, p) } else { vec![Matrix3::zeros(); sets.len()] };
    Ok(fields
        .into_iter()
        .zip(hess)
        .map(|((potential, field), hessian)| FieldSample { position: *p, potential, field, hessian })
        .collect())
}

/// Superposed potential, field and Hessian for one voltage assignment.
pub fn eval(model: &dyn PotentialModel, voltages: &Voltages, point: &Vector3<f64>) -> Result<FieldSample> {
    Ok(sample_many(model, &[voltages], point, true)?.remove(0))
}

impl PotentialModel for BasisSet {
    fn roles(&self) -> Vec<Role> {
        BasisSet::roles(self).to_vec()
    }

    fn contains(&self, p: &Vector3<f64>) -> bool {
        BasisSet::contains(self, [p.x, p.y, p.z])
    }

    fn field_many(&self, sets: &[&Voltages], p: &Vector3<f64>) -> Vec<(f64, Vector3<f64>)> {
        TrapField::combine_fields(self, &[], sets, p)
    }

    fn is_axisymmetric(&self, _v: &Voltages) -> bool {
        true
    }
}

/// Boundary-element basis plus line-charge compensation rods.
#[derive(Debug, Clone)]
pub struct TrapField {
    basis: Arc<BasisSet>,
    rods: Vec<LineChargeRod>,
}

impl TrapField {
    pub fn new(basis: Arc<BasisSet>, rods: Vec<LineChargeRod>) -> Self {
        TrapField { basis, rods }
    }

    /// Solves the axisymmetric basis and attaches every rod in `g`.
    pub fn solve(g: &TrapGeometry, options: &SolverOptions) -> Result<TrapField> {
        let basis = Arc::new(solve_basis(g, options)?);
        Ok(TrapField { basis, rods: LineChargeRod::from_geometry(g) })
    }

    pub fn basis(&self) -> &Arc<BasisSet> {
        &self.basis
    }

    pub fn rods(&self) -> &[LineChargeRod] {
        &self.rods
    }

    fn combine_fields(basis: &BasisSet, rods: &[LineChargeRod], sets: &[&Voltages], p: &Vector3<f64>) -> Vec<(f64, Vector3<f64>)> {
        let mut roles = basis.roles().to_vec();
        roles.extend(rods.iter().map(|r| r.role));
        let refs: Vec<f64> = sets.iter().map(|v| reference_voltage(&roles, v)).collect();
        let has_ref = roles.contains(&Role::OuterGroundPlane);
        let densities: Vec<Vec<f64>> = sets
            .iter()
            .zip(&refs)
            .map(|(v, vref)| {
                let w: Vec<(Role, f64)> = basis
                    .roles()
                    .iter()
                    .filter(|r| !(has_ref && **r == Role::OuterGroundPlane))
                    .map(|r| (*r, v.get(*r) - vref))
                    .collect();
                basis.combine(&w)
            })
            .collect();
        let dens: Vec<&[f64]> = densities.iter().map(|d| d.as_slice()).collect();
        let bem = basis.field_many(&dens, [p.x, p.y, p.z]);
        let rod_unit: Vec<(f64, Vector3<f64>)> = rods.iter().map(|r| r.unit_field(p)).collect();
        sets.iter()
            .zip(&refs)
            .zip(bem)
            .map(|((v, vref), (phi, e))| {
                let mut phi = phi + vref;
                let mut e = Vector3::new(e[0], e[1], e[2]);
                for (rod, (rp, re)) in rods.iter().zip(&rod_unit) {
                    let w = v.get(rod.role) - vref;
                    phi += w * rp;
                    e += re * w;
                }
                (phi, e)
            })
            .collect()
    }
}

impl PotentialModel for TrapField {
    fn roles(&self) -> Vec<Role> {
        let mut r = self.basis.roles().to_vec();
        r.extend(self.rods.iter().map(|r| r.role));
        r
    }

    fn contains(&self, p: &Vector3<f64>) -> bool {
        self.basis.contains([p.x, p.y, p.z]) || self.rods.iter().any(|r| r.contains(p))
    }

    fn field_many(&self, sets: &[&Voltages], p: &Vector3<f64>) -> Vec<(f64, Vector3<f64>)> {
        Self::combine_fields(&self.basis, &self.rods, sets, p)
    }

    fn is_axisymmetric(&self, v: &Voltages) -> bool {
        let vref = reference_voltage(&self.roles(), v);
        self.rods.iter().all(|r| v.get(r.role) == vref)
    }
}

/// Default mesh focus: on axis, 250 µm above the centre electrode.
pub fn default_focus_um(g: &TrapGeometry) -> [f64; 2] {
    [0.0, g.center_ground_top_um() + 250.0]
}

/// Validates the geometry and solves one unit-potential basis per
/// axisymmetric electrode.
pub fn solve_basis(g: &TrapGeometry, options: &SolverOptions) -> Result<BasisSet> {
    let violations = validate_geometry(g);
    if !violations.is_empty() {
        return Err(TrapError::InvalidGeometry(violations.iter().map(|v| v.to_string()).collect()));
    }
    let mut opts = options.clone();
    if opts.mesh.focus_um.is_none() {
        opts.mesh.focus_um = Some(default_focus_um(g));
    }
    BasisSet::solve_electrodes(&g.electrodes, &opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub level: u32,
    pub panels: usize,
    pub bc_max_error: f64,
    pub bc_rms_error: f64,
    pub bc_fraction_within_tol: f64,
    /// Unit-basis potentials at each probe point.
    pub probe_potentials: Vec<BTreeMap<Role, f64>>,
    /// Largest probe-potential change from the previous level.
    pub max_change: Option<f64>,
}

/// Solves at each refinement level and tabulates boundary error and
/// probe-potential changes between successive levels.
pub fn convergence_study(
    electrodes: &[crate::model::Electrode],
    base: &SolverOptions,
    levels: &[u32],
    probes: &[Vector3<f64>],
) -> Result<Vec<ConvergenceRow>> {
    if levels.len() < 2 {
        return Err(TrapError::InvalidInput("convergence study needs at least two levels".into()));
    }
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for &level in levels {
        let mut opts = base.clone();
        opts.mesh.level = level;
        let basis = BasisSet::solve_electrodes(electrodes, &opts)?;
        let probe_potentials: Vec<BTreeMap<Role, f64>> = probes
            .iter()
            .map(|p| {
                basis
                    .roles()
                    .iter()
                    .map(|r| {
                        let d = basis.density(*r).expect("role");
                        let rho = p.x.hypot(p.y);
                        (*r, basis.meridian_many(&[d], rho, p.z, false)[0].0)
                    })
                    .collect()
            })
            .collect();
        let max_change = rows.last().map(|prev| {
            prev.probe_potentials
                .iter()
                .zip(&probe_potentials)
                .flat_map(|(a, b)| a.iter().map(move |(r, v)| (v - b[r]).abs()))
                .fold(0.0, f64::max)
        });
        let d = basis.diagnostics();
        rows.push(ConvergenceRow {
            level,
            panels: d.panels,
            bc_max_error: d.bc_max_error,
            bc_rms_error: d.bc_rms_error,
            bc_fraction_within_tol: d.bc_fraction_within_tol,
            probe_potentials,
            max_change,
        });
    }
    Ok(rows)
}

/// Convergence study on a validated trap geometry with the default focus.
pub fn convergence_study_geometry(
    g: &TrapGeometry,
    base: &SolverOptions,
    levels: &[u32],
    probes: &[Vector3<f64>],
) -> Result<Vec<ConvergenceRow>> {
    let violations = validate_geometry(g);
    if !violations.is_empty() {
        return Err(TrapError::InvalidGeometry(violations.iter().map(|v| v.to_string()).collect()));
    }
    let mut opts = base.clone();
    if opts.mesh.focus_um.is_none() {
        opts.mesh.focus_um = Some(default_focus_um(g));
    }
    let axisymmetric: Vec<_> = g.electrodes.iter().copied().filter(|e| e.shape.is_axisymmetric()).collect();
    convergence_study(&axisymmetric, &opts, levels, probes)
}

/// CSV of sampled potentials: `x_um,y_um,z_um,phi_v,ex_v_per_m,ey_v_per_m,ez_v_per_m`.
/// Points inside conductors are skipped.
pub fn potential_grid_csv(model: &dyn PotentialModel, voltages: &Voltages, points: &[Vector3<f64>]) -> String {
    let mut out = String::from("x_um,y_um,z_um,phi_v,ex_v_per_m,ey_v_per_m,ez_v_per_m\n");
    for p in points {
        if model.contains(p) {
            continue;
        }
        let (phi, e) = model.field_many(&[voltages], p)[0];
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            p.x / MICRO,
            p.y / MICRO,
            p.z / MICRO,
            phi,
            e.x,
            e.y,
            e.z
        );
    }
    out
}
