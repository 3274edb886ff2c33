//! Axisymmetric single-layer boundary elements with piecewise-constant
//! density and midpoint collocation.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mesh::{mesh_electrodes, MeshOptions, Panel};
use super::special::{gauss, ring_potential_gradient, ring_potential_split};
use crate::constants::MICRO;
use crate::error::{Result, TrapError};
use crate::model::{Electrode, Role, Shape};

/// Integrals over one panel of unit density: potential and
/// `(d/drho, d/dz)` of the potential.
type PanelIntegral = (f64, f64, f64);

fn integrate_regular(panel: &Panel, t0: f64, t1: f64, p: [f64; 2], order: usize, with_grad: bool) -> PanelIntegral {
    let len = panel.length();
    let rule = gauss(order);
    let half = 0.5 * (t1 - t0);
    let mid = 0.5 * (t0 + t1);
    let (mut phi, mut dr, mut dz) = (0.0, 0.0, 0.0);
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        let s = (mid + half * x) / len;
        let q = panel.point_at(s);
        let weight = w * half * 2.0 * PI * q[0];
        if with_grad {
            let (f, fr, fz) = ring_potential_gradient(q[0], q[1], p[0], p[1]);
            phi += weight * f;
            dr += weight * fr;
            dz += weight * fz;
        } else {
            let (f, _, _) = ring_potential_gradient(q[0], q[1], p[0], p[1]);
            phi += weight * f;
        }
    }
    (phi, dr, dz)
}

fn order_for_ratio(ratio: f64) -> usize {
    if ratio > 8.0 {
        2
    } else if ratio > 4.0 {
        3
    } else if ratio > 2.0 {
        4
    } else {
        6
    }
}

/// `int_{u0}^{u1} ln sqrt(u^2 + n^2) du`.
fn log_distance_integral(u0: f64, u1: f64, n: f64) -> f64 {
    let f = |u: f64| {
        if n > 0.0 {
            0.5 * (u * (u * u + n * n).ln() - 2.0 * u + 2.0 * n * (u / n).atan())
        } else if u == 0.0 {
            0.0
        } else {
            u * u.abs().ln() - u
        }
    };
    f(u1) - f(u0)
}

/// Potential of a panel at a point close to or on it. The logarithmic
/// singularity of the ring kernel is subtracted and integrated exactly.
fn potential_near(panel: &Panel, p: [f64; 2]) -> f64 {
    let len = panel.length();
    let (tp, n) = panel.project(p);
    let tc = tp.clamp(0.0, len);
    let qc = panel.point_at(tc / len);
    let gc = 2.0 * PI * qc[0] * ring_potential_split(qc[0], qc[1], p[0], p[1]).1;
    let singular = gc * log_distance_integral(-tp, len - tp, n);

    let rule = gauss(8);
    let mut remainder = 0.0;
    let mut piece = |a: f64, b: f64| {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let t = mid + half * x;
            let q = panel.point_at(t / len);
            let (smooth, coeff) = ring_potential_split(q[0], q[1], p[0], p[1]);
            let d = (t - tp).hypot(n);
            let g = 2.0 * PI * q[0] * coeff;
            remainder += w * half * (2.0 * PI * q[0] * smooth - (g - gc) * d.ln());
        }
    };
    for (from, to) in [(tc, 0.0), (tc, len)] {
        let span = to - from;
        if span.abs() <= 0.0 {
            continue;
        }
        let fracs = [0.0, 1.0 / 81.0, 1.0 / 27.0, 1.0 / 9.0, 1.0 / 3.0, 1.0];
        for w in fracs.windows(2) {
            let (a, b) = (from + w[0] * span, from + w[1] * span);
            piece(a.min(b), a.max(b));
        }
    }
    remainder - singular
}

fn field_near(panel: &Panel, t0: f64, t1: f64, p: [f64; 2], depth: u32) -> PanelIntegral {
    let len = panel.length();
    let a = panel.point_at(t0 / len);
    let b = panel.point_at(t1 / len);
    let sub = Panel { start: a, end: b, owner: panel.owner };
    let dist = sub.distance_to(p);
    let li = t1 - t0;
    if dist > 1.5 * li || depth >= 16 {
        return integrate_regular(panel, t0, t1, p, 8, true);
    }
    let m = 0.5 * (t0 + t1);
    let l = field_near(panel, t0, m, p, depth + 1);
    let r = field_near(panel, m, t1, p, depth + 1);
    (l.0 + r.0, l.1 + r.1, l.2 + r.2)
}

fn panel_integral(panel: &Panel, p: [f64; 2], with_grad: bool) -> PanelIntegral {
    let len = panel.length();
    let dist = panel.distance_to(p);
    let ratio = dist / len;
    if ratio > 1.0 {
        return integrate_regular(panel, 0.0, len, p, order_for_ratio(ratio), with_grad);
    }
    if with_grad {
        let mut out = field_near(panel, 0.0, len, p, 0);
        out.0 = potential_near(panel, p);
        out
    } else {
        (potential_near(panel, p), 0.0, 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub mesh: MeshOptions,
    /// Allowed surface-potential error, V per V applied.
    pub tol_bc: f64,
    /// Allowed relative six-point Laplacian residual.
    pub tol_lap: f64,
    /// Condition estimate above which the boundary system is rejected.
    pub max_condition: f64,
}

impl SolverOptions {
    pub fn level(level: u32) -> Self {
        SolverOptions { mesh: MeshOptions::level(level), tol_bc: 1e-3, tol_lap: 1e-3, max_condition: 1e13 }
    }
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self::level(crate::DEFAULT_RESOLUTION)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub level: u32,
    pub panels: usize,
    pub panels_per_role: BTreeMap<Role, usize>,
    pub condition_estimate: f64,
    /// Largest surface-potential error over the sample points.
    pub bc_max_error: f64,
    /// Root-mean-square surface error over all samples.
    pub bc_rms_error: f64,
    /// Fraction of surface samples within `tol_bc` for every basis.
    pub bc_fraction_within_tol: f64,
    pub bc_samples: usize,
    pub laplace_residual_max: f64,
    pub laplace_probes: usize,
}

/// Unit-potential solutions for each axisymmetric electrode.
#[derive(Debug, Clone)]
pub struct BasisSet {
    roles: Vec<Role>,
    shapes: Vec<Shape>,
    panels: Vec<Panel>,
    /// `density[k][j]`: surface density over eps0 (V/m) on panel `j` when
    /// electrode `k` is at 1 V and the rest at 0 V.
    density: Vec<Vec<f64>>,
    options: SolverOptions,
    diagnostics: SolverDiagnostics,
}

fn one_norm_inverse_estimate(lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>, lut: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>, n: usize) -> f64 {
    // Hager's estimator.
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    let mut est = 0.0;
    for _ in 0..5 {
        let Some(y) = lu.solve(&x) else { return f64::INFINITY };
        est = y.iter().map(|v| v.abs()).sum();
        let xi = y.map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
        let Some(z) = lut.solve(&xi) else { return f64::INFINITY };
        let (j, zmax) = z.iter().enumerate().fold((0, 0.0), |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc });
        if zmax <= z.dot(&x) {
            break;
        }
        x = DVector::zeros(n);
        x[j] = 1.0;
    }
    est
}

impl BasisSet {
    /// Solves for every axisymmetric electrode in the list; rods are ignored.
    pub fn solve_electrodes(electrodes: &[Electrode], options: &SolverOptions) -> Result<BasisSet> {
        let (roles, panels) = mesh_electrodes(electrodes, &options.mesh)?;
        let shapes: Vec<Shape> = roles
            .iter()
            .map(|r| electrodes.iter().find(|e| e.role == *r).expect("meshed role").shape)
            .collect();
        let n = panels.len();
        let mids: Vec<[f64; 2]> = panels.iter().map(|p| p.midpoint()).collect();

        let rows: Vec<Vec<f64>> = mids
            .par_iter()
            .map(|m| panels.iter().map(|pj| panel_integral(pj, *m, false).0).collect())
            .collect();
        let a = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        let a_norm = (0..n).map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);

        let mut rhs = DMatrix::zeros(n, roles.len());
        for (j, p) in panels.iter().enumerate() {
            rhs[(j, p.owner)] = 1.0;
        }
        let lu = a.clone().lu();
        let lut = a.transpose().lu();
        let condition = a_norm * one_norm_inverse_estimate(&lu, &lut, n);
        if !condition.is_finite() || condition > options.max_condition {
            return Err(TrapError::IllConditioned { condition });
        }
        let sol = lu.solve(&rhs).ok_or(TrapError::IllConditioned { condition: f64::INFINITY })?;
        let density = (0..roles.len()).map(|k| sol.column(k).iter().copied().collect()).collect();

        let mut panels_per_role = BTreeMap::new();
        for p in &panels {
            *panels_per_role.entry(roles[p.owner]).or_insert(0) += 1;
        }
        let mut basis = BasisSet {
            roles,
            shapes,
            panels,
            density,
            options: options.clone(),
            diagnostics: SolverDiagnostics {
                level: options.mesh.level,
                panels: n,
                panels_per_role,
                condition_estimate: condition,
                bc_max_error: 0.0,
                bc_rms_error: 0.0,
                bc_fraction_within_tol: 0.0,
                bc_samples: 0,
                laplace_residual_max: 0.0,
                laplace_probes: 0,
            },
        };
        basis.check_boundary();
        basis.check_laplace();
        Ok(basis)
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn panels(&self) -> &[Panel] {
        &self.panels
    }

    pub fn options(&self) -> &SolverOptions {
        &self.options
    }

    pub fn diagnostics(&self) -> &SolverDiagnostics {
        &self.diagnostics
    }

    pub fn density(&self, role: Role) -> Option<&[f64]> {
        self.roles.iter().position(|r| *r == role).map(|k| self.density[k].as_slice())
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        self.shapes.iter().any(|s| s.contains(p))
    }

    /// Combined panel densities `sum_k w_k * density_k`.
    pub fn combine(&self, weights: &[(Role, f64)]) -> Vec<f64> {
        let mut out = vec![0.0; self.panels.len()];
        for (role, w) in weights {
            if *w == 0.0 {
                continue;
            }
            if let Some(d) = self.density(*role) {
                for (o, v) in out.iter_mut().zip(d) {
                    *o += w * v;
                }
            }
        }
        out
    }

    /// Potential and `(d/drho, d/dz)` in the meridian plane for each
    /// combined density.
    pub fn meridian_many(&self, densities: &[&[f64]], rho: f64, z: f64, with_grad: bool) -> Vec<(f64, f64, f64)> {
        let mut acc = vec![(0.0, 0.0, 0.0); densities.len()];
        for (j, panel) in self.panels.iter().enumerate() {
            let (f, fr, fz) = panel_integral(panel, [rho, z], with_grad);
            for (a, d) in acc.iter_mut().zip(densities) {
                let s = d[j];
                a.0 += s * f;
                a.1 += s * fr;
                a.2 += s * fz;
            }
        }
        acc
    }

    /// Potential and field `-grad(phi)` at a 3-D point for each density.
    pub fn field_many(&self, densities: &[&[f64]], p: [f64; 3]) -> Vec<(f64, [f64; 3])> {
        let rho = p[0].hypot(p[1]);
        self.meridian_many(densities, rho, p[2], true)
            .into_iter()
            .map(|(phi, dr, dz)| {
                let (ex, ey) = if rho > 0.0 { (-dr * p[0] / rho, -dr * p[1] / rho) } else { (0.0, 0.0) };
                (phi, [ex, ey, -dz])
            })
            .collect()
    }

    fn unit_densities(&self) -> Vec<&[f64]> {
        self.density.iter().map(|d| d.as_slice()).collect()
    }

    /// Surface potentials at the quarter points of every panel.
    pub fn surface_errors(&self) -> Vec<f64> {
        let densities = self.unit_densities();
        let samples: Vec<([f64; 2], usize)> = self
            .panels
            .iter()
            .flat_map(|p| [(p.point_at(0.25), p.owner), (p.point_at(0.75), p.owner)])
            .collect();
        samples
            .par_iter()
            .map(|(q, owner)| {
                self.meridian_many(&densities, q[0], q[1], false)
                    .iter()
                    .enumerate()
                    .map(|(k, v)| (v.0 - if k == *owner { 1.0 } else { 0.0 }).abs())
                    .fold(0.0, f64::max)
            })
            .collect()
    }

    fn check_boundary(&mut self) {
        let errs = self.surface_errors();
        let ok = errs.iter().filter(|e| **e <= self.options.tol_bc).count();
        self.diagnostics.bc_samples = errs.len();
        self.diagnostics.bc_max_error = errs.iter().copied().fold(0.0, f64::max);
        self.diagnostics.bc_rms_error = (errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64).sqrt();
        self.diagnostics.bc_fraction_within_tol = ok as f64 / errs.len() as f64;
    }

    /// Vacuum probe points on a lattice over the mesh bounding box, at
    /// least `clearance` from every panel.
    pub fn probe_points(&self, clearance: f64) -> Vec<[f64; 3]> {
        let (mut rmax, mut zmin, mut zmax) = (0.0f64, f64::INFINITY, f64::NEG_INFINITY);
        for p in &self.panels {
            for q in [p.start, p.end] {
                rmax = rmax.max(q[0]);
                zmin = zmin.min(q[1]);
                zmax = zmax.max(q[1]);
            }
        }
        let mut out = Vec::new();
        let n = 7;
        for i in 0..n {
            for k in 0..n {
                let rho = rmax * (i as f64 + 0.5) / n as f64 * 0.5;
                let z = zmin + (zmax - zmin) * (k as f64 + 0.5) / n as f64 + 0.25 * (zmax - zmin);
                let p3 = [rho, 0.0, z];
                let clear = self.panels.iter().all(|pn| pn.distance_to([rho, z]) > clearance);
                if clear && !self.contains(p3) {
                    out.push(p3);
                }
            }
        }
        out
    }

    fn check_laplace(&mut self) {
        let h = 2.0 * MICRO;
        let probes = self.probe_points(20.0 * MICRO);
        let densities = self.unit_densities();
        let worst = probes
            .par_iter()
            .map(|p| {
                let at = |dx: f64, dy: f64, dz: f64| -> Vec<f64> {
                    let q = [p[0] + dx, p[1] + dy, p[2] + dz];
                    let rho = q[0].hypot(q[1]);
                    self.meridian_many(&densities, rho, q[2], false).iter().map(|v| v.0).collect()
                };
                let c = at(0.0, 0.0, 0.0);
                let nbrs = [at(h, 0.0, 0.0), at(-h, 0.0, 0.0), at(0.0, h, 0.0), at(0.0, -h, 0.0), at(0.0, 0.0, h), at(0.0, 0.0, -h)];
                // Local scale: the largest basis potential at the probe.
                let scale = c.iter().fold(1e-12f64, |m, v| m.max(v.abs()));
                (0..c.len())
                    .map(|k| {
                        let lap: f64 = nbrs.iter().map(|v| v[k]).sum::<f64>() - 6.0 * c[k];
                        lap.abs() / scale
                    })
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max);
        self.diagnostics.laplace_probes = probes.len();
        self.diagnostics.laplace_residual_max = worst;
    }
}
