use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::constants::MICRO;
use crate::model::{Role, Shape, TrapGeometry};

/// A compensation rod approximated by a uniform line charge on its axis.
///
/// The line runs from the rod bottom to one rod radius below the top face;
/// its strength is fixed by requiring 1 V at the top-centre point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineChargeRod {
    pub role: Role,
    /// Axis position, m.
    pub center: [f64; 2],
    pub radius: f64,
    pub z_bottom: f64,
    pub z_top: f64,
    /// Line charge density over 4 pi eps0, per volt applied (V).
    pub strength_per_volt: f64,
}

impl LineChargeRod {
    pub fn new(role: Role, center: [f64; 2], radius: f64, z_bottom: f64, z_top: f64) -> Self {
        // Potential per unit strength at the top centre, a distance
        // `radius` above the end of the line.
        let unit = ((z_top - z_bottom) / radius).ln();
        LineChargeRod {
            role,
            center,
            radius,
            z_bottom,
            z_top,
            strength_per_volt: 1.0 / unit,
        }
    }

    fn line_top(&self) -> f64 {
        self.z_top - self.radius
    }

    pub fn from_geometry(g: &TrapGeometry) -> Vec<LineChargeRod> {
        g.electrodes
            .iter()
            .filter_map(|e| match e.shape {
                Shape::Rod { radius_um, center_um, z_bottom_um, z_top_um } => Some(LineChargeRod::new(
                    e.role,
                    [center_um[0] * MICRO, center_um[1] * MICRO],
                    radius_um * MICRO,
                    z_bottom_um * MICRO,
                    z_top_um * MICRO,
                )),
                _ => None,
            })
            .collect()
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (p.x - self.center[0]).hypot(p.y - self.center[1]) < self.radius && p.z > self.z_bottom && p.z < self.z_top
    }

    /// Potential and field at `p` with the rod at 1 V.
    pub fn unit_field(&self, p: &Vector3<f64>) -> (f64, Vector3<f64>) {
        let k = self.strength_per_volt;
        let dx = p.x - self.center[0];
        let dy = p.y - self.center[1];
        let s = dx.hypot(dy);
        let u1 = self.z_bottom - p.z;
        let u2 = self.line_top() - p.z;
        if s < 1e-12 * self.radius {
            // On the rod axis, outside the line.
            let (a, b) = (u1.abs(), u2.abs());
            let phi = k * (a / b).ln() * if u2 < 0.0 { 1.0 } else { -1.0 };
            let ez = k * (1.0 / b - 1.0 / a);
            return (phi, Vector3::new(0.0, 0.0, ez));
        }
        let r1 = s.hypot(u1);
        let r2 = s.hypot(u2);
        let phi = k * ((u2 / s).asinh() - (u1 / s).asinh());
        // E = -grad(phi); d/dz of asinh(u/s) is -1/R, d/ds is -u/(s R).
        let ez = k * (1.0 / r2 - 1.0 / r1);
        let es = k * (u2 / r2 - u1 / r1) / s;
        (phi, Vector3::new(es * dx / s, es * dy / s, ez))
    }
}
