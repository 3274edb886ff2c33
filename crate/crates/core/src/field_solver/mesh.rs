//! Meridian-plane panel meshes for the axisymmetric conductors.

use serde::{Deserialize, Serialize};

use crate::constants::MICRO;
use crate::error::{Result, TrapError};
use crate::model::{Electrode, Role, Shape};

/// A straight generator segment in the `(rho, z)` half-plane, in metres.
/// Rotated about the axis it sweeps a conical band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub start: [f64; 2],
    pub end: [f64; 2],
    pub owner: usize,
}

impl Panel {
    pub fn length(&self) -> f64 {
        (self.end[0] - self.start[0]).hypot(self.end[1] - self.start[1])
    }

    pub fn midpoint(&self) -> [f64; 2] {
        self.point_at(0.5)
    }

    pub fn point_at(&self, s: f64) -> [f64; 2] {
        [
            self.start[0] + s * (self.end[0] - self.start[0]),
            self.start[1] + s * (self.end[1] - self.start[1]),
        ]
    }

    /// Unclamped projection parameter (arclength) of `p` onto the panel line
    /// and the perpendicular distance to that line.
    pub fn project(&self, p: [f64; 2]) -> (f64, f64) {
        let len = self.length();
        let tx = (self.end[0] - self.start[0]) / len;
        let tz = (self.end[1] - self.start[1]) / len;
        let dx = p[0] - self.start[0];
        let dz = p[1] - self.start[1];
        let t = dx * tx + dz * tz;
        let n = (dx * tz - dz * tx).abs();
        (t, n)
    }

    pub fn distance_to(&self, p: [f64; 2]) -> f64 {
        let len = self.length();
        let (t, n) = self.project(p);
        if t < 0.0 {
            (p[0] - self.start[0]).hypot(p[1] - self.start[1])
        } else if t > len {
            (p[0] - self.end[0]).hypot(p[1] - self.end[1])
        } else {
            n
        }
    }
}

/// Panel sizing. Each level halves the edge and near-field panel sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshOptions {
    pub level: u32,
    /// Panel size at conductor edges, µm, at level 0.
    pub edge_size_um: f64,
    /// Panel size near the focus, µm, at level 0.
    pub near_size_um: f64,
    /// Ratio between neighbouring panels.
    pub growth: f64,
    /// Panels far from the focus may grow to `far_slope * distance`
    /// (level 0, halved per level).
    pub far_slope: f64,
    pub max_size_um: f64,
    /// Point `(rho, z)` in µm where the mesh is finest; `None` refines
    /// uniformly.
    pub focus_um: Option<[f64; 2]>,
}

impl MeshOptions {
    pub fn level(level: u32) -> Self {
        MeshOptions {
            level,
            edge_size_um: 8.0,
            near_size_um: 40.0,
            growth: 1.25,
            far_slope: 0.5,
            max_size_um: 800.0,
            focus_um: None,
        }
    }

    pub fn with_focus(mut self, focus_um: [f64; 2]) -> Self {
        self.focus_um = Some(focus_um);
        self
    }

    fn scale(&self) -> f64 {
        0.5f64.powi(self.level as i32)
    }

    fn edge(&self) -> f64 {
        self.edge_size_um * self.scale()
    }

    fn cap_at(&self, p: [f64; 2]) -> f64 {
        let near = self.near_size_um * self.scale();
        match self.focus_um {
            None => near,
            Some(f) => {
                let d = (p[0] - f[0]).hypot(p[1] - f[1]);
                (self.far_slope * self.scale() * d).max(near).min(self.max_size_um)
            }
        }
    }
}

/// Breakpoints along `[0, len]`, graded geometrically from both ends.
fn graded_breaks(len: f64, opts: &MeshOptions, at: impl Fn(f64) -> [f64; 2]) -> Vec<f64> {
    let half = 0.5 * len;
    let mut left = vec![0.0];
    let mut size = opts.edge().min(half);
    let mut x = 0.0;
    while x < half {
        let cap = opts.cap_at(at(x)).min(opts.cap_at(at(len - x)));
        size = size.min(cap);
        x += size;
        left.push(x);
        size *= opts.growth;
    }
    // Snap the last break onto the midpoint, dropping it if it is a sliver.
    let n = left.len();
    if n > 2 && (x - half) > 0.5 * (left[n - 1] - left[n - 2]) {
        left.pop();
    }
    let scale = half / *left.last().expect("non-empty");
    for v in &mut left {
        *v *= scale;
    }
    let mut out = left.clone();
    for v in left.iter().rev().skip(1) {
        out.push(len - v);
    }
    out
}

fn segment_panels(p0: [f64; 2], p1: [f64; 2], owner: usize, opts: &MeshOptions, out: &mut Vec<Panel>) {
    let len_um = (p1[0] - p0[0]).hypot(p1[1] - p0[1]);
    let at = |s: f64| {
        let f = s / len_um;
        [p0[0] + f * (p1[0] - p0[0]), p0[1] + f * (p1[1] - p0[1])]
    };
    let breaks = graded_breaks(len_um, opts, at);
    for w in breaks.windows(2) {
        let a = at(w[0]);
        let b = at(w[1]);
        out.push(Panel {
            start: [a[0] * MICRO, a[1] * MICRO],
            end: [b[0] * MICRO, b[1] * MICRO],
            owner,
        });
    }
}

/// Meridian outline of an axisymmetric conductor, µm.
fn outline(shape: &Shape) -> Result<Vec<([f64; 2], [f64; 2])>> {
    match *shape {
        Shape::Tube { inner_radius_um: ri, outer_radius_um: ro, z_bottom_um: zb, z_top_um: zt } => {
            let mut segs = vec![([ro, zb], [ro, zt]), ([ro, zt], [ri, zt])];
            if ri > 0.0 {
                segs.push(([ri, zt], [ri, zb]));
            }
            segs.push(([ri, zb], [ro, zb]));
            Ok(segs)
        }
        Shape::Plane { z_um, inner_radius_um, outer_radius_um } => {
            Ok(vec![([inner_radius_um, z_um], [outer_radius_um, z_um])])
        }
        Shape::Rod { .. } => Err(TrapError::Unmeshable("rods are not axisymmetric".into())),
    }
}

/// Meshes the axisymmetric electrodes; panel `owner` indexes into the
/// returned role list.
pub fn mesh_electrodes(electrodes: &[Electrode], opts: &MeshOptions) -> Result<(Vec<Role>, Vec<Panel>)> {
    let mut roles = Vec::new();
    let mut panels = Vec::new();
    for e in electrodes.iter().filter(|e| e.shape.is_axisymmetric()) {
        if roles.contains(&e.role) {
            return Err(TrapError::Unmeshable(format!("duplicate role {}", e.role)));
        }
        let owner = roles.len();
        roles.push(e.role);
        for (a, b) in outline(&e.shape)? {
            if (a[0] - b[0]).hypot(a[1] - b[1]) <= 0.0 {
                return Err(TrapError::Unmeshable(format!("degenerate segment on {}", e.role)));
            }
            segment_panels(a, b, owner, opts, &mut panels);
        }
    }
    if panels.is_empty() {
        return Err(TrapError::Unmeshable("no axisymmetric conductors".into()));
    }
    Ok((roles, panels))
}
