//! Trap characterisation: rf null, secular modes, Mathieu parameters,
//! trap depth and the ion-surface proximity sweep.

mod depth;
mod minimize;
mod proximity;

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

pub use depth::{default_depth_options, graded_axis, meridian_search, trap_depth, DepthDomain, DepthOptions, DepthResult};
pub use minimize::{nelder_mead, newton_minimize, MinimizeOptions, TOL_GRAD};
pub use proximity::{proximity_sweep, ProximityPoint, ProximitySweep, LOSS_DEPTH_MEV};

use crate::constants::MICRO;
use crate::error::{Result, TrapError};
use crate::model::{DcSettings, TrapGeometry, Voltages};
use crate::pseudopotential::EffectivePotential;

/// Mathieu q above which the pseudopotential picture is flagged.
pub const MATHIEU_Q_WARN: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeLabel {
    Axial,
    RadialAd,
    RadialBc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecularMode {
    pub label: ModeLabel,
    pub frequency_hz: f64,
    /// Unit principal axis.
    pub axis: [f64; 3],
    /// Energy curvature along the axis, J/m^2.
    pub curvature: f64,
}

impl SecularMode {
    pub fn angular_frequency(&self) -> f64 {
        2.0 * PI * self.frequency_hz
    }

    pub fn axis_vector(&self) -> Vector3<f64> {
        Vector3::from(self.axis)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MathieuParameters {
    pub label: ModeLabel,
    pub q: f64,
    pub a: f64,
}

/// Starting point for the null search: on axis, `1.2 dh + 150` µm above
/// the rf electrode top.
pub fn default_null_hint(g: &TrapGeometry) -> Vector3<f64> {
    Vector3::new(0.0, 0.0, (g.rf_top_um() + 1.2 * g.delta_h_um + 150.0) * MICRO)
}

/// Minimum of the total secular energy near `hint` (origin if absent).
pub fn find_null(ep: &EffectivePotential, dc: &DcSettings, hint: Option<Vector3<f64>>) -> Result<Vector3<f64>> {
    let start = hint.unwrap_or_else(Vector3::zeros);
    let opts = MinimizeOptions::default();
    if let Ok(p) = newton_minimize(ep, dc, start, &opts) {
        return Ok(p);
    }
    let f = |p: &Vector3<f64>| ep.total_energy_si(dc, p).unwrap_or(f64::INFINITY);
    let p = nelder_mead(f, start, 20.0 * MICRO, 1e-3 * MICRO, 4000);
    if !f(&p).is_finite() {
        return Err(TrapError::NoMinimum("no finite energy near the starting point".into()));
    }
    newton_minimize(ep, dc, p, &opts)
}

fn canonical_axis(v: Vector3<f64>) -> Vector3<f64> {
    let k = (0..3).rev().find(|&k| v[k].abs() > 1e-6).unwrap_or(2);
    if v[k] < 0.0 {
        -v
    } else {
        v
    }
}

fn ad_direction() -> Vector3<f64> {
    Vector3::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0)
}

fn bc_direction() -> Vector3<f64> {
    Vector3::new(-FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0)
}

/// Labelled modes from an energy Hessian at a minimum: the axial mode
/// first, then the radial mode closer to the A-D diagonal, then B-C.
pub fn modes_from_hessian(hessian: &Matrix3<f64>, mass: f64) -> Result<[SecularMode; 3]> {
    let eig = SymmetricEigen::new(*hessian);
    let mut lambdas = [eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2]];
    if lambdas.iter().any(|l| *l <= 0.0) {
        lambdas.sort_by(f64::total_cmp);
        return Err(TrapError::Saddle { eigenvalues: lambdas });
    }
    let vecs: Vec<Vector3<f64>> = (0..3).map(|k| eig.eigenvectors.column(k).into_owned()).collect();
    let ax = (0..3).max_by(|&a, &b| vecs[a].z.abs().total_cmp(&vecs[b].z.abs())).unwrap();
    let radial: Vec<usize> = (0..3).filter(|&k| k != ax).collect();
    let (r0, r1) = (radial[0], radial[1]);
    let scale = lambdas[r0].abs().max(lambdas[r1].abs());
    let mut axes = [vecs[ax], vecs[r0], vecs[r1]];
    let mut curv = [lambdas[ax], lambdas[r0], lambdas[r1]];
    if (lambdas[r0] - lambdas[r1]).abs() <= 1e-6 * scale {
        let a = ad_direction();
        let b = bc_direction();
        axes[1] = a;
        axes[2] = b;
        curv[1] = a.dot(&(hessian * a));
        curv[2] = b.dot(&(hessian * b));
    } else if vecs[r1].dot(&ad_direction()).abs() > vecs[r0].dot(&ad_direction()).abs() {
        axes.swap(1, 2);
        curv.swap(1, 2);
    }
    let labels = [ModeLabel::Axial, ModeLabel::RadialAd, ModeLabel::RadialBc];
    Ok(std::array::from_fn(|k| {
        let axis = canonical_axis(axes[k]);
        SecularMode {
            label: labels[k],
            frequency_hz: (curv[k] / mass).sqrt() / (2.0 * PI),
            axis: [axis.x, axis.y, axis.z],
            curvature: curv[k],
        }
    }))
}

/// Secular modes at the minimum `null`.
pub fn secular_frequencies(ep: &EffectivePotential, dc: &DcSettings, null: &Vector3<f64>) -> Result<[SecularMode; 3]> {
    let s = ep.energy_full(dc, null)?;
    modes_from_hessian(&s.hessian, ep.ion.mass)
}

/// Mathieu parameters along each mode axis and warnings for large q.
pub fn mathieu_parameters(
    ep: &EffectivePotential,
    dc: &Voltages,
    null: &Vector3<f64>,
    modes: &[SecularMode],
) -> Result<(Vec<MathieuParameters>, Vec<String>)> {
    let (h_rf, h_dc) = ep.curvatures(dc, null)?;
    let q = ep.ion.charge;
    let m = ep.ion.mass;
    let om2 = ep.drive.rf_frequency * ep.drive.rf_frequency;
    let u = ep.drive.rf_amplitude;
    let mut warnings = Vec::new();
    let out = modes
        .iter()
        .map(|mode| {
            let e = mode.axis_vector();
            let c = e.dot(&(h_rf * e));
            let d = e.dot(&(h_dc * e));
            let p = MathieuParameters { label: mode.label, q: 2.0 * q * u * c.abs() / (m * om2), a: 4.0 * q * d / (m * om2) };
            if p.q > MATHIEU_Q_WARN {
                warnings.push(format!(
                    "Mathieu q = {:.3} along the {:?} axis exceeds {MATHIEU_Q_WARN}; pseudopotential frequencies are approximate",
                    p.q, mode.label
                ));
            }
            p
        })
        .collect();
    Ok((out, warnings))
}

/// rf amplitude giving `target_hz` for the mode `label`, by secant
/// iteration (exact proportionality for an rf-only trap).
pub fn infer_rf_voltage(
    ep: &EffectivePotential,
    dc: &DcSettings,
    target_hz: f64,
    label: ModeLabel,
    hint: Option<Vector3<f64>>,
) -> Result<f64> {
    if !(target_hz > 0.0 && target_hz.is_finite()) {
        return Err(TrapError::InvalidInput(format!("target frequency must be positive, got {target_hz}")));
    }
    let mut null = hint;
    let freq = |u: f64, null: &mut Option<Vector3<f64>>| -> Result<f64> {
        let e = ep.with_drive(ep.drive.with_amplitude(u));
        let p = find_null(&e, dc, *null)?;
        *null = Some(p);
        let modes = secular_frequencies(&e, dc, &p)?;
        Ok(modes.iter().find(|m| m.label == label).expect("all labels present").frequency_hz)
    };
    let mut u0 = ep.drive.rf_amplitude.max(1.0);
    let mut f0 = freq(u0, &mut null)? - target_hz;
    let mut u1 = u0 * target_hz / (f0 + target_hz);
    for _ in 0..30 {
        let f1 = freq(u1, &mut null)? - target_hz;
        if (f1 / target_hz).abs() < 1e-6 {
            return Ok(u1);
        }
        let u2 = if f1 == f0 { u1 * target_hz / (f1 + target_hz) } else { u1 - f1 * (u1 - u0) / (f1 - f0) };
        if !(u2 > 0.0 && u2.is_finite()) {
            break;
        }
        u0 = u1;
        f0 = f1;
        u1 = u2;
    }
    Err(TrapError::NonConvergence(format!("rf voltage search for {target_hz} Hz did not converge")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapReport {
    pub null_position_um: [f64; 3],
    /// Ion height above the centre ground electrode, µm.
    pub distance_h_um: f64,
    pub modes: Vec<SecularMode>,
    pub mathieu: Vec<MathieuParameters>,
    pub trap_depth_mev: Option<f64>,
    pub depth: Option<DepthResult>,
    pub rf_drive_voltage_v: f64,
    pub rf_drive_frequency_mhz: f64,
    pub warnings: Vec<String>,
}

/// Observable summary with the row names of the reference table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub protrusion_height_um: f64,
    pub distance_h_um: f64,
    pub axial_mhz: f64,
    pub radial_ad_mhz: f64,
    pub radial_bc_mhz: f64,
    pub trap_depth_mev: f64,
    pub rf_drive_voltage_v: f64,
    pub rf_drive_frequency_mhz: f64,
}

impl TrapReport {
    pub fn mode(&self, label: ModeLabel) -> Option<&SecularMode> {
        self.modes.iter().find(|m| m.label == label)
    }

    pub fn frequency_mhz(&self, label: ModeLabel) -> f64 {
        self.mode(label).map_or(f64::NAN, |m| m.frequency_hz * 1e-6)
    }

    pub fn table_row(&self, protrusion_height_um: f64) -> TableRow {
        TableRow {
            protrusion_height_um,
            distance_h_um: self.distance_h_um,
            axial_mhz: self.frequency_mhz(ModeLabel::Axial),
            radial_ad_mhz: self.frequency_mhz(ModeLabel::RadialAd),
            radial_bc_mhz: self.frequency_mhz(ModeLabel::RadialBc),
            trap_depth_mev: self.trap_depth_mev.unwrap_or(f64::NAN),
            rf_drive_voltage_v: self.rf_drive_voltage_v,
            rf_drive_frequency_mhz: self.rf_drive_frequency_mhz,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub compute_depth: bool,
    /// Depth grid settings; derived from the geometry when absent.
    pub depth: Option<DepthOptions>,
    pub hint_um: Option<[f64; 3]>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions { compute_depth: true, depth: None, hint_um: None }
    }
}

/// Full characterisation of the trap formed by `ep` in geometry `g`.
pub fn analyze(g: &TrapGeometry, ep: &EffectivePotential, dc: &DcSettings, opts: &AnalysisOptions) -> Result<TrapReport> {
    let hint = opts.hint_um.map(|h| Vector3::from(h) * MICRO).unwrap_or_else(|| default_null_hint(g));
    let null = find_null(ep, dc, Some(hint))?;
    let modes = secular_frequencies(ep, dc, &null)?;
    let (mathieu, mut warnings) = mathieu_parameters(ep, &dc.voltages, &null, &modes)?;
    let null_um = null / MICRO;
    let depth = if opts.compute_depth {
        let d = opts.depth.unwrap_or_else(|| default_depth_options(ep, dc, &null, DepthDomain::for_geometry(g, null_um.z)));
        let r = trap_depth(ep, dc, &null, &d)?;
        if r.depth_mev() < LOSS_DEPTH_MEV {
            warnings.push(format!("trap depth {:.4} meV is below {LOSS_DEPTH_MEV} meV", r.depth_mev()));
        }
        Some(r)
    } else {
        None
    };
    Ok(TrapReport {
        null_position_um: [null_um.x, null_um.y, null_um.z],
        distance_h_um: null_um.z - g.center_ground_top_um(),
        modes: modes.to_vec(),
        mathieu,
        trap_depth_mev: depth.map(|d| d.depth_mev()),
        depth,
        rf_drive_voltage_v: ep.drive.rf_amplitude,
        rf_drive_frequency_mhz: ep.drive.rf_frequency_hz() * 1e-6,
        warnings,
    })
}
