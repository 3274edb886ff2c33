//! Occluders seen from the ion and the accessible solid angle.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::MICRO;
use crate::error::{Result, TrapError};
use crate::model::{Role, Shape, TrapGeometry};

/// Rays per RNG stream.
const BATCH: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OccluderShape {
    /// Coaxial cylinder wall; `z_min` may be `-inf`.
    Wall { radius: f64, z_min: f64, z_max: f64 },
    /// Flat coaxial annulus.
    Annulus { z: f64, inner_radius: f64, outer_radius: f64 },
    /// Solid cylinder with axis parallel to z at `center`.
    Rod { center: [f64; 2], radius: f64, z_min: f64, z_max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Occluder {
    pub role: Role,
    pub shape: OccluderShape,
}

impl Occluder {
    /// Distance along the unit ray `o + t d` to the first hit, if any.
    pub fn hit(&self, o: &Vector3<f64>, d: &Vector3<f64>) -> Option<f64> {
        match self.shape {
            OccluderShape::Wall { radius, z_min, z_max } => {
                cylinder_hits([0.0, 0.0], radius, o, d).into_iter().flatten().find(|&t| {
                    let z = o.z + t * d.z;
                    z >= z_min && z <= z_max
                })
            }
            OccluderShape::Annulus { z, inner_radius, outer_radius } => {
                if d.z == 0.0 {
                    return None;
                }
                let t = (z - o.z) / d.z;
                if t <= 0.0 {
                    return None;
                }
                let r = (o.x + t * d.x).hypot(o.y + t * d.y);
                (r >= inner_radius && r <= outer_radius).then_some(t)
            }
            OccluderShape::Rod { center, radius, z_min, z_max } => {
                let mut best: Option<f64> = None;
                let mut consider = |t: f64| {
                    if t > 0.0 && best.is_none_or(|b| t < b) {
                        best = Some(t);
                    }
                };
                for t in cylinder_hits(center, radius, o, d).into_iter().flatten() {
                    let z = o.z + t * d.z;
                    if z >= z_min && z <= z_max {
                        consider(t);
                    }
                }
                if d.z != 0.0 {
                    for zc in [z_min, z_max] {
                        let t = (zc - o.z) / d.z;
                        let r = (o.x + t * d.x - center[0]).hypot(o.y + t * d.y - center[1]);
                        if r <= radius {
                            consider(t);
                        }
                    }
                }
                best
            }
        }
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        match self.shape {
            OccluderShape::Rod { center, radius, z_min, z_max } => {
                (p.x - center[0]).hypot(p.y - center[1]) < radius && p.z > z_min && p.z < z_max
            }
            _ => false,
        }
    }
}

/// Positive roots of the ray/infinite-cylinder intersection, ascending.
fn cylinder_hits(c: [f64; 2], r: f64, o: &Vector3<f64>, d: &Vector3<f64>) -> [Option<f64>; 2] {
    let (ox, oy) = (o.x - c[0], o.y - c[1]);
    let a = d.x * d.x + d.y * d.y;
    if a == 0.0 {
        return [None, None];
    }
    let b = ox * d.x + oy * d.y;
    let cc = ox * ox + oy * oy - r * r;
    let disc = b * b - a * cc;
    if disc < 0.0 {
        return [None, None];
    }
    let s = disc.sqrt();
    let pos = |t: f64| (t > 0.0).then_some(t);
    [pos((-b - s) / a), pos((-b + s) / a)]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstructionScene {
    /// Ion position, m.
    pub viewpoint: [f64; 3],
    pub occluders: Vec<Occluder>,
    pub excluded: Vec<Role>,
}

/// Roles left out of the accessible-solid-angle count of the reference
/// table.
pub const TABLE_EXCLUSIONS: [Role; 5] = [Role::CompA, Role::CompB, Role::CompC, Role::CompD, Role::OuterGroundPlane];

impl ObstructionScene {
    pub fn empty(viewpoint: [f64; 3]) -> Self {
        ObstructionScene { viewpoint, occluders: Vec::new(), excluded: Vec::new() }
    }

    /// Occluders for every electrode of `g` not in `exclude`. Tube walls
    /// extend to `-inf` when `semi_infinite_tubes` is set.
    pub fn from_geometry(g: &TrapGeometry, viewpoint_um: [f64; 3], exclude: &[Role], semi_infinite_tubes: bool) -> Result<Self> {
        let mut occluders = Vec::new();
        for e in g.electrodes.iter().filter(|e| !exclude.contains(&e.role)) {
            if e.shape.contains(viewpoint_um.map(|v| v * MICRO)) {
                return Err(TrapError::InsideConductor(viewpoint_um.map(|v| v * MICRO)));
            }
            let role = e.role;
            match e.shape {
                Shape::Tube { inner_radius_um, outer_radius_um, z_bottom_um, z_top_um } => {
                    let (ri, ro, zt) = (inner_radius_um * MICRO, outer_radius_um * MICRO, z_top_um * MICRO);
                    let zb = if semi_infinite_tubes { f64::NEG_INFINITY } else { z_bottom_um * MICRO };
                    occluders.push(Occluder { role, shape: OccluderShape::Annulus { z: zt, inner_radius: ri, outer_radius: ro } });
                    occluders.push(Occluder { role, shape: OccluderShape::Wall { radius: ro, z_min: zb, z_max: zt } });
                    if ri > 0.0 {
                        occluders.push(Occluder { role, shape: OccluderShape::Wall { radius: ri, z_min: zb, z_max: zt } });
                    }
                    if !semi_infinite_tubes {
                        occluders.push(Occluder { role, shape: OccluderShape::Annulus { z: zb, inner_radius: ri, outer_radius: ro } });
                    }
                }
                Shape::Plane { z_um, inner_radius_um, outer_radius_um } => occluders.push(Occluder {
                    role,
                    shape: OccluderShape::Annulus { z: z_um * MICRO, inner_radius: inner_radius_um * MICRO, outer_radius: outer_radius_um * MICRO },
                }),
                Shape::Rod { radius_um, center_um, z_bottom_um, z_top_um } => occluders.push(Occluder {
                    role,
                    shape: OccluderShape::Rod {
                        center: [center_um[0] * MICRO, center_um[1] * MICRO],
                        radius: radius_um * MICRO,
                        z_min: z_bottom_um * MICRO,
                        z_max: z_top_um * MICRO,
                    },
                }),
            }
        }
        let scene = ObstructionScene {
            viewpoint: viewpoint_um.map(|v| v * MICRO),
            occluders,
            excluded: exclude.to_vec(),
        };
        scene.check()?;
        Ok(scene)
    }

    /// Scene of the reference table: ion on axis at `h_um` above the
    /// centre electrode, rods and outer plane excluded.
    pub fn table_scene(g: &TrapGeometry, h_um: f64) -> Result<Self> {
        Self::from_geometry(g, [0.0, 0.0, g.center_ground_top_um() + h_um], &TABLE_EXCLUSIONS, true)
    }

    pub fn with_occluder(mut self, o: Occluder) -> Self {
        self.occluders.push(o);
        self
    }

    fn check(&self) -> Result<()> {
        let p = Vector3::from(self.viewpoint);
        for o in &self.occluders {
            let inside = match o.shape {
                OccluderShape::Wall { radius, z_min, z_max } => {
                    let r = p.x.hypot(p.y);
                    (r - radius).abs() < 1e-15 && p.z >= z_min && p.z <= z_max
                }
                OccluderShape::Annulus { z, inner_radius, outer_radius } => {
                    let r = p.x.hypot(p.y);
                    p.z == z && r >= inner_radius && r <= outer_radius
                }
                OccluderShape::Rod { .. } => o.contains(&p),
            };
            if inside {
                return Err(TrapError::InsideConductor(self.viewpoint));
            }
        }
        Ok(())
    }

    /// First occluder hit along direction `d`, if any.
    pub fn blocked_by(&self, d: &Vector3<f64>) -> Option<Role> {
        let o = Vector3::from(self.viewpoint);
        let mut best: Option<(f64, Role)> = None;
        for occ in &self.occluders {
            if let Some(t) = occ.hit(&o, d) {
                if best.is_none_or(|(b, _)| t < b) {
                    best = Some((t, occ.role));
                }
            }
        }
        best.map(|(_, r)| r)
    }

    /// True if the scene is symmetric about the z axis with the viewpoint
    /// on it.
    pub fn is_coaxial(&self) -> bool {
        self.viewpoint[0] == 0.0
            && self.viewpoint[1] == 0.0
            && self.occluders.iter().all(|o| !matches!(o.shape, OccluderShape::Rod { .. }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SolidAngleMethod {
    Raycast { rays: u64, seed: u64 },
    Analytic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolidAngleEstimate {
    /// Accessible fraction of 4 pi.
    pub fraction: f64,
    /// Binomial standard error; zero for the analytic method.
    pub std_error: f64,
    pub rays: u64,
    pub escaped: u64,
}

fn direction(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    let c: f64 = 2.0 * rng.random::<f64>() - 1.0;
    let phi = 2.0 * PI * rng.random::<f64>();
    let s = (1.0 - c * c).max(0.0).sqrt();
    Vector3::new(s * phi.cos(), s * phi.sin(), c)
}

fn batch_rng(seed: u64, batch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch);
    rng
}

fn batches(rays: u64) -> impl ParallelIterator<Item = (u64, u64)> {
    let n = rays.div_ceil(BATCH);
    (0..n).into_par_iter().map(move |b| (b, BATCH.min(rays - b * BATCH)))
}

/// Fraction of isotropic directions from the viewpoint that escape.
pub fn accessible_solid_angle(scene: &ObstructionScene, method: SolidAngleMethod) -> Result<SolidAngleEstimate> {
    scene.check()?;
    match method {
        SolidAngleMethod::Raycast { rays, seed } => {
            if rays == 0 {
                return Err(TrapError::InvalidInput("ray count must be positive".into()));
            }
            let escaped: u64 = batches(rays)
                .map(|(b, count)| {
                    let mut rng = batch_rng(seed, b);
                    (0..count).filter(|_| scene.blocked_by(&direction(&mut rng)).is_none()).count() as u64
                })
                .sum();
            let p = escaped as f64 / rays as f64;
            Ok(SolidAngleEstimate { fraction: p, std_error: (p * (1.0 - p) / rays as f64).sqrt(), rays, escaped })
        }
        SolidAngleMethod::Analytic => {
            let fraction = 1.0 - blocked_fraction_coaxial(scene)?;
            Ok(SolidAngleEstimate { fraction, std_error: 0.0, rays: 0, escaped: 0 })
        }
    }
}

/// Union of the polar-angle cones subtended by each coaxial occluder.
pub fn blocked_fraction_coaxial(scene: &ObstructionScene) -> Result<f64> {
    if !scene.is_coaxial() {
        return Err(TrapError::InvalidInput("the analytic method needs a coaxial scene with the viewpoint on axis".into()));
    }
    let z0 = scene.viewpoint[2];
    // polar angle of the meridian point (r, z) seen from the viewpoint
    let angle = |r: f64, z: f64| -> f64 {
        if z == f64::NEG_INFINITY {
            PI
        } else {
            r.atan2(z - z0)
        }
    };
    let mut intervals: Vec<(f64, f64)> = scene
        .occluders
        .iter()
        .map(|o| {
            let (a, b) = match o.shape {
                OccluderShape::Wall { radius, z_min, z_max } => (angle(radius, z_max), angle(radius, z_min)),
                OccluderShape::Annulus { z, inner_radius, outer_radius } => (angle(inner_radius, z), angle(outer_radius, z)),
                OccluderShape::Rod { .. } => unreachable!("checked coaxial"),
            };
            (a.min(b), a.max(b))
        })
        .collect();
    intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut blocked = 0.0;
    let mut current: Option<(f64, f64)> = None;
    let cap = |(a, b): (f64, f64)| 0.5 * (a.cos() - b.cos());
    for iv in intervals {
        current = match current {
            Some((a, b)) if iv.0 <= b => Some((a, b.max(iv.1))),
            Some(c) => {
                blocked += cap(c);
                Some(iv)
            }
            None => Some(iv),
        };
    }
    if let Some(c) = current {
        blocked += cap(c);
    }
    Ok(blocked)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayHit {
    pub theta: f64,
    pub phi: f64,
    pub blocked_by: Option<Role>,
}

/// Per-ray record of the raycast, in ray order.
pub fn hit_map(scene: &ObstructionScene, rays: u64, seed: u64) -> Result<Vec<RayHit>> {
    scene.check()?;
    let chunks: Vec<Vec<RayHit>> = batches(rays)
        .map(|(b, count)| {
            let mut rng = batch_rng(seed, b);
            (0..count)
                .map(|_| {
                    let d = direction(&mut rng);
                    RayHit { theta: d.z.clamp(-1.0, 1.0).acos(), phi: d.y.atan2(d.x).rem_euclid(2.0 * PI), blocked_by: scene.blocked_by(&d) }
                })
                .collect()
        })
        .collect();
    Ok(chunks.into_iter().flatten().collect())
}

pub fn hit_map_csv(hits: &[RayHit]) -> String {
    let mut s = String::from("theta,phi,blocked_by\n");
    for h in hits {
        writeln!(s, "{:.6},{:.6},{}", h.theta, h.phi, h.blocked_by.map_or("none", |r| r.name())).expect("string write");
    }
    s
}
