//! Parabolic collection mirror with the ion at its focus.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TrapError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MirrorSpec {
    /// Focal length, m.
    pub focal_length: f64,
    /// Mirror depth measured from the vertex, in focal lengths.
    pub depth_to_f: f64,
    /// Half-angle of the vertex hole seen from the focus, measured from
    /// the -axis, rad.
    pub vertex_hole_half_angle: f64,
}

impl MirrorSpec {
    pub fn new(focal_length: f64, depth_to_f: f64, vertex_hole_half_angle: f64) -> Result<Self> {
        let m = MirrorSpec { focal_length, depth_to_f, vertex_hole_half_angle };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.focal_length > 0.0) {
            return Err(TrapError::InvalidInput("focal length must be positive".into()));
        }
        if !(self.depth_to_f > 1.0) {
            return Err(TrapError::InvalidInput(format!("depth_to_f must exceed 1 so the focus lies inside the mirror, got {}", self.depth_to_f)));
        }
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&self.vertex_hole_half_angle) {
            return Err(TrapError::InvalidInput("vertex hole half-angle must lie in [0, pi/2)".into()));
        }
        Ok(())
    }

    /// Rim radius, m.
    pub fn rim_radius(&self) -> f64 {
        2.0 * self.focal_length * self.depth_to_f.sqrt()
    }

    /// Hole half-angle giving an intercepted fraction `fraction`.
    pub fn hole_for_fraction(focal_length: f64, depth_to_f: f64, fraction: f64) -> Result<Self> {
        let bare = MirrorSpec::new(focal_length, depth_to_f, 0.0)?;
        let cap = mirror_solid_angle(&bare) - fraction;
        if !(0.0..0.5).contains(&cap) {
            return Err(TrapError::InvalidInput(format!("fraction {fraction} is not reachable with a vertex hole")));
        }
        MirrorSpec::new(focal_length, depth_to_f, (1.0 - 2.0 * cap).acos())
    }
}

/// Polar angle of the rim seen from the focus, from the +axis.
pub fn mirror_geometry(ms: &MirrorSpec) -> f64 {
    let d = ms.depth_to_f;
    (2.0 * d.sqrt()).atan2(d - 1.0)
}

/// Fraction of 4 pi covered by the mirror surface.
pub fn mirror_solid_angle(ms: &MirrorSpec) -> f64 {
    0.5 * (1.0 + mirror_geometry(ms).cos()) - 0.5 * (1.0 - ms.vertex_hole_half_angle.cos())
}

/// Fraction of the power of a dipole along the mirror axis that lands on
/// the mirror.
pub fn dipole_collection_efficiency(ms: &MirrorSpec) -> f64 {
    let c = mirror_geometry(ms).cos();
    let ch = ms.vertex_hole_half_angle.cos();
    0.75 * (2.0 / 3.0 + c - c.powi(3) / 3.0) - 0.75 * (2.0 / 3.0 - ch + ch.powi(3) / 3.0)
}
