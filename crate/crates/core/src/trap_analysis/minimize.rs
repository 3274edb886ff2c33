//! Trust-region Newton minimisation of the secular energy with a
//! Nelder-Mead fallback.

use nalgebra::{SymmetricEigen, Vector3};

use crate::constants::{ELEMENTARY_CHARGE, MICRO};
use crate::error::{Result, TrapError};
use crate::model::DcSettings;
use crate::pseudopotential::EffectivePotential;

/// Gradient tolerance, 1e-6 eV/µm in J/m.
pub const TOL_GRAD: f64 = 1e-6 * ELEMENTARY_CHARGE / MICRO;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeOptions {
    pub tol_grad: f64,
    /// Stop once a Newton step is shorter than this, m.
    pub tol_step: f64,
    pub initial_radius: f64,
    pub max_radius: f64,
    pub max_iterations: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            tol_grad: TOL_GRAD,
            tol_step: 1e-4 * MICRO,
            initial_radius: 20.0 * MICRO,
            max_radius: 200.0 * MICRO,
            max_iterations: 80,
        }
    }
}

fn newton_step(h: &nalgebra::Matrix3<f64>, g: &Vector3<f64>) -> Option<Vector3<f64>> {
    let eig = SymmetricEigen::new(*h);
    if eig.eigenvalues.iter().any(|l| *l <= 0.0) {
        return None;
    }
    let mut step = Vector3::zeros();
    for k in 0..3 {
        let v = eig.eigenvectors.column(k);
        step -= v * (v.dot(g) / eig.eigenvalues[k]);
    }
    Some(step)
}

/// Newton iteration with a trust radius. Returns the converged point.
pub fn newton_minimize(ep: &EffectivePotential, dc: &DcSettings, start: Vector3<f64>, opts: &MinimizeOptions) -> Result<Vector3<f64>> {
    let mut p = start;
    let mut cur = ep.energy_full(dc, &p)?;
    let mut radius = opts.initial_radius;
    for _ in 0..opts.max_iterations {
        let pd_step = newton_step(&cur.hessian, &cur.gradient);
        let converged = cur.gradient.norm() < opts.tol_grad && pd_step.is_some();
        let mut step = match pd_step {
            Some(s) => s,
            None => -cur.gradient.normalize() * radius,
        };
        if converged && step.norm() < opts.tol_step {
            return Ok(p);
        }
        if step.norm() > radius {
            step *= radius / step.norm();
        }
        let trial = p + step;
        match ep.energy_full(dc, &trial) {
            Ok(next) if next.energy <= cur.energy || next.gradient.norm() < cur.gradient.norm() => {
                let full = step.norm() >= 0.99 * radius;
                p = trial;
                cur = next;
                if full {
                    radius = (2.0 * radius).min(opts.max_radius);
                }
                if converged {
                    return Ok(p);
                }
            }
            _ => {
                radius *= 0.25;
                if radius < 1e-3 * opts.tol_step {
                    break;
                }
            }
        }
    }
    if cur.gradient.norm() < opts.tol_grad && newton_step(&cur.hessian, &cur.gradient).is_some() {
        return Ok(p);
    }
    Err(TrapError::NoMinimum(format!(
        "Newton iteration stalled at ({:.3}, {:.3}, {:.3}) um with |grad| = {:.3e} eV/um",
        p.x / MICRO,
        p.y / MICRO,
        p.z / MICRO,
        cur.gradient.norm() * MICRO / ELEMENTARY_CHARGE
    )))
}

/// Derivative-free Nelder-Mead on `f`; infeasible points evaluate to +inf.
pub fn nelder_mead(f: impl Fn(&Vector3<f64>) -> f64, start: Vector3<f64>, size: f64, tol: f64, max_iter: usize) -> Vector3<f64> {
    let mut simplex: Vec<(Vector3<f64>, f64)> = (0..4)
        .map(|k| {
            let mut p = start;
            if k > 0 {
                p[k - 1] += size;
            }
            (p, f(&p))
        })
        .collect();
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex.iter().map(|s| (s.0 - simplex[0].0).norm()).fold(0.0, f64::max);
        if spread < tol {
            break;
        }
        let centroid = (simplex[0].0 + simplex[1].0 + simplex[2].0) / 3.0;
        let worst = simplex[3];
        let reflect = centroid + (centroid - worst.0);
        let fr = f(&reflect);
        if fr < simplex[0].1 {
            let expand = centroid + (centroid - worst.0) * 2.0;
            let fe = f(&expand);
            simplex[3] = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < simplex[2].1 {
            simplex[3] = (reflect, fr);
        } else {
            let contract = centroid + (worst.0 - centroid) * 0.5;
            let fc = f(&contract);
            if fc < worst.1 {
                simplex[3] = (contract, fc);
            } else {
                let best = simplex[0].0;
                for s in simplex.iter_mut().skip(1) {
                    s.0 = best + (s.0 - best) * 0.5;
                    s.1 = f(&s.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex[0].0
}
