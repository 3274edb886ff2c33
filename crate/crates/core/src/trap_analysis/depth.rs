//! Trap depth as the lowest barrier separating the minimum from the domain
//! boundary, found by a minimax (priority-flood) search on a graded grid.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{Matrix2, Vector2, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{ELEMENTARY_CHARGE, MICRO};
use crate::error::{Result, TrapError};
use crate::model::{DcSettings, TrapGeometry};
use crate::pseudopotential::EffectivePotential;

/// Search box around the minimum, absolute coordinates in µm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthDomain {
    pub radial_extent_um: f64,
    pub z_min_um: f64,
    pub z_max_um: f64,
}

impl DepthDomain {
    /// Box bounded below by the ground plane and above by an auxiliary
    /// plane if there is one.
    pub fn for_geometry(g: &TrapGeometry, null_z_um: f64) -> Self {
        let z_min_um = g.ground_plane_z_um() + 2.0;
        let mut z_max_um = null_z_um + 2500.0;
        for e in &g.electrodes {
            if let crate::model::Shape::Plane { z_um, .. } = e.shape {
                if z_um > null_z_um {
                    z_max_um = z_max_um.min(z_um - 2.0);
                }
            }
        }
        DepthDomain { radial_extent_um: 2000.0, z_min_um, z_max_um }
    }

    /// Symmetric box of half-width `half_um` around `centre`.
    pub fn around(centre_um: [f64; 3], half_um: f64) -> Self {
        DepthDomain {
            radial_extent_um: half_um + centre_um[0].hypot(centre_um[1]),
            z_min_um: centre_um[2] - half_um,
            z_max_um: centre_um[2] + half_um,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthOptions {
    pub domain: DepthDomain,
    /// Grid spacing at the minimum, µm.
    pub fine_spacing_um: f64,
    pub growth: f64,
    pub max_spacing_um: f64,
    /// Polish the escape point to a true saddle (meridian search only).
    pub refine_saddle: bool,
    /// Force a 3-D grid even for axisymmetric drives.
    pub force_3d: bool,
}

impl DepthOptions {
    pub fn new(domain: DepthDomain) -> Self {
        DepthOptions {
            domain,
            fine_spacing_um: 4.0,
            growth: 1.08,
            max_spacing_um: 80.0,
            refine_saddle: true,
            force_3d: false,
        }
    }

    /// Coarser settings for 3-D searches.
    pub fn coarse_3d(domain: DepthDomain) -> Self {
        DepthOptions {
            domain,
            fine_spacing_um: 10.0,
            growth: 1.2,
            max_spacing_um: 200.0,
            refine_saddle: false,
            force_3d: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthResult {
    pub depth_ev: f64,
    pub minimum_ev: f64,
    pub barrier_ev: f64,
    pub escape_point_um: [f64; 3],
    pub grid_nodes: usize,
    pub saddle_refined: bool,
}

impl DepthResult {
    pub fn depth_mev(&self) -> f64 {
        self.depth_ev * 1e3
    }
}

/// Graded 1-D coordinates containing `centre` exactly, clipped to `[lo, hi]`.
pub fn graded_axis(centre: f64, lo: f64, hi: f64, fine: f64, growth: f64, max: f64) -> Vec<f64> {
    let mut below = Vec::new();
    let mut above = Vec::new();
    let mut step = fine;
    let mut x = centre;
    while x > lo {
        x = (x - step).max(lo);
        below.push(x);
        step = (step * growth).min(max);
    }
    step = fine;
    x = centre;
    while x < hi {
        x = (x + step).min(hi);
        above.push(x);
        step = (step * growth).min(max);
    }
    below.reverse();
    below.push(centre);
    below.extend(above);
    below
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    cost: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Grid {
    axes: Vec<Vec<f64>>,
    /// Maps grid coordinates (one per axis) to a 3-D point in metres.
    to_point: fn(&[f64]) -> Vector3<f64>,
    /// Axes whose lower end is a symmetry line rather than a boundary.
    symmetric_low: Vec<bool>,
}

impl Grid {
    fn dims(&self) -> Vec<usize> {
        self.axes.iter().map(Vec::len).collect()
    }

    fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    fn unravel(&self, mut n: usize) -> Vec<usize> {
        let dims = self.dims();
        let mut idx = vec![0; dims.len()];
        for k in (0..dims.len()).rev() {
            idx[k] = n % dims[k];
            n /= dims[k];
        }
        idx
    }

    fn ravel(&self, idx: &[usize]) -> usize {
        let dims = self.dims();
        idx.iter().zip(&dims).fold(0, |acc, (i, d)| acc * d + i)
    }

    fn coords(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().enumerate().map(|(k, &i)| self.axes[k][i]).collect()
    }

    fn point(&self, n: usize) -> Vector3<f64> {
        (self.to_point)(&self.coords(&self.unravel(n)))
    }

    fn on_boundary(&self, idx: &[usize]) -> bool {
        idx.iter().enumerate().any(|(k, &i)| (i == 0 && !self.symmetric_low[k]) || i + 1 == self.axes[k].len())
    }
}

fn meridian_point(c: &[f64]) -> Vector3<f64> {
    Vector3::new(c[0] * MICRO, 0.0, c[1] * MICRO)
}

fn cartesian_point(c: &[f64]) -> Vector3<f64> {
    Vector3::new(c[0] * MICRO, c[1] * MICRO, c[2] * MICRO)
}

/// Edge passes only if no sample along it lies inside a conductor.
fn edge_clear(ep: &EffectivePotential, a: &Vector3<f64>, b: &Vector3<f64>) -> bool {
    let n = ((b - a).norm() / (5.0 * MICRO)).ceil().max(1.0) as usize;
    (1..n).all(|k| !ep.model.contains(&(a + (b - a) * (k as f64 / n as f64))))
}

/// Whether the depth search can run on the (r, z) meridian plane.
pub fn meridian_search(ep: &EffectivePotential, dc: &DcSettings, minimum: &Vector3<f64>) -> bool {
    minimum.x.hypot(minimum.y) < 1e-12
        && ep.model.is_axisymmetric(&dc.voltages)
        && dc.stray_field[0] == 0.0
        && dc.stray_field[1] == 0.0
}

/// Default grid: fine meridian settings when possible, coarse 3-D otherwise.
pub fn default_depth_options(ep: &EffectivePotential, dc: &DcSettings, minimum: &Vector3<f64>, domain: DepthDomain) -> DepthOptions {
    if meridian_search(ep, dc, minimum) {
        DepthOptions::new(domain)
    } else {
        DepthOptions::coarse_3d(domain)
    }
}

/// Depth of the trap whose minimum is at `minimum` (metres).
pub fn trap_depth(ep: &EffectivePotential, dc: &DcSettings, minimum: &Vector3<f64>, opts: &DepthOptions) -> Result<DepthResult> {
    let d = &opts.domain;
    let (f, g, m) = (opts.fine_spacing_um, opts.growth, opts.max_spacing_um);
    if !(f > 0.0 && g >= 1.0 && m >= f && d.z_max_um > d.z_min_um && d.radial_extent_um > 0.0) {
        return Err(TrapError::InvalidInput("bad depth grid options".into()));
    }
    let c = minimum / MICRO;
    if c.z <= d.z_min_um || c.z >= d.z_max_um {
        return Err(TrapError::InvalidInput("minimum lies outside the depth domain".into()));
    }
    let meridian = !opts.force_3d && meridian_search(ep, dc, minimum);
    let grid = if meridian {
        Grid {
            axes: vec![
                graded_axis(0.0, 0.0, d.radial_extent_um, f, g, m),
                graded_axis(c.z, d.z_min_um, d.z_max_um, f, g, m),
            ],
            to_point: meridian_point,
            symmetric_low: vec![true, false],
        }
    } else {
        let r = d.radial_extent_um;
        Grid {
            axes: vec![
                graded_axis(c.x, -r, r, f, g, m),
                graded_axis(c.y, -r, r, f, g, m),
                graded_axis(c.z, d.z_min_um, d.z_max_um, f, g, m),
            ],
            to_point: cartesian_point,
            symmetric_low: vec![false, false, false],
        }
    };
    let n = grid.len();
    let energy: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|k| {
            let p = grid.point(k);
            if ep.model.contains(&p) {
                f64::NAN
            } else {
                ep.total_energy_si(dc, &p).unwrap_or(f64::NAN)
            }
        })
        .collect();
    let start_idx: Vec<usize> = if meridian {
        vec![0, grid.axes[1].iter().position(|&z| z == c.z).unwrap()]
    } else {
        (0..3).map(|k| grid.axes[k].iter().position(|&x| x == c[k]).unwrap()).collect()
    };
    let start = grid.ravel(&start_idx);
    let e_min = energy[start];
    if !e_min.is_finite() {
        return Err(TrapError::InsideConductor([minimum.x, minimum.y, minimum.z]));
    }

    let mut cost = vec![f64::INFINITY; n];
    let mut peak = vec![usize::MAX; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    cost[start] = e_min;
    peak[start] = start;
    heap.push(Entry { cost: e_min, node: start });
    let dims = grid.dims();
    let mut exit = None;
    while let Some(Entry { cost: cst, node }) = heap.pop() {
        if done[node] {
            continue;
        }
        done[node] = true;
        let idx = grid.unravel(node);
        if grid.on_boundary(&idx) {
            exit = Some(node);
            break;
        }
        let here = grid.point(node);
        for k in 0..dims.len() {
            for delta in [-1i64, 1] {
                let j = idx[k] as i64 + delta;
                if j < 0 || j >= dims[k] as i64 {
                    continue;
                }
                let mut nb_idx = idx.clone();
                nb_idx[k] = j as usize;
                let nb = grid.ravel(&nb_idx);
                if done[nb] || !energy[nb].is_finite() {
                    continue;
                }
                if !edge_clear(ep, &here, &grid.point(nb)) {
                    continue;
                }
                let (c_new, p_new) = if energy[nb] > cst { (energy[nb], nb) } else { (cst, peak[node]) };
                if c_new < cost[nb] {
                    cost[nb] = c_new;
                    peak[nb] = p_new;
                    heap.push(Entry { cost: c_new, node: nb });
                }
            }
        }
    }
    let exit = exit.ok_or_else(|| TrapError::NoMinimum("minimum is sealed off by conductors".into()))?;
    let barrier = cost[exit];
    let boundary_low = energy
        .iter()
        .enumerate()
        .filter(|(k, e)| e.is_finite() && grid.on_boundary(&grid.unravel(*k)))
        .any(|(_, &e)| e < e_min - 1e-9 * ELEMENTARY_CHARGE);
    if barrier <= e_min && boundary_low {
        return Err(TrapError::Unbounded);
    }
    let mut saddle = grid.point(peak[exit]);
    let mut barrier_e = barrier;
    let mut refined = false;
    if meridian && opts.refine_saddle && barrier > e_min {
        if let Some((p, e)) = refine_meridian_saddle(ep, dc, &saddle, 2.0 * m * MICRO) {
            if e > e_min && (e - barrier).abs() <= 0.05 * (barrier - e_min) {
                saddle = p;
                barrier_e = e;
                refined = true;
            }
        }
    }
    Ok(DepthResult {
        depth_ev: (barrier_e - e_min).max(0.0) / ELEMENTARY_CHARGE,
        minimum_ev: e_min / ELEMENTARY_CHARGE,
        barrier_ev: barrier_e / ELEMENTARY_CHARGE,
        escape_point_um: [saddle.x / MICRO, saddle.y / MICRO, saddle.z / MICRO],
        grid_nodes: n,
        saddle_refined: refined,
    })
}

/// Newton search for a stationary point in the (x, z) half-plane.
fn refine_meridian_saddle(ep: &EffectivePotential, dc: &DcSettings, start: &Vector3<f64>, max_move: f64) -> Option<(Vector3<f64>, f64)> {
    let h = 0.5 * MICRO;
    let grad2 = |x: f64, z: f64| -> Option<Vector2<f64>> {
        let g = ep.energy_gradient(dc, &Vector3::new(x, 0.0, z)).ok()?.gradient;
        Some(Vector2::new(g.x, g.z))
    };
    let (mut x, mut z) = (start.x, start.z);
    let on_axis = x.abs() < 1e-9;
    for _ in 0..30 {
        let g = grad2(x, z)?;
        let step = if on_axis {
            let gzp = grad2(0.0, z + h)?.y;
            let gzm = grad2(0.0, z - h)?.y;
            let hzz = (gzp - gzm) / (2.0 * h);
            if hzz == 0.0 {
                return None;
            }
            Vector2::new(0.0, -g.y / hzz)
        } else {
            let gxp = grad2(x + h, z)?;
            let gxm = grad2(x - h, z)?;
            let gzp = grad2(x, z + h)?;
            let gzm = grad2(x, z - h)?;
            let cx = (gxp - gxm) / (2.0 * h);
            let cz = (gzp - gzm) / (2.0 * h);
            let hm = Matrix2::new(cx.x, cz.x, cx.y, cz.y);
            let hm = (hm + hm.transpose()) * 0.5;
            hm.try_inverse().map(|inv| -(inv * g))?
        };
        let step = if step.norm() > 0.25 * max_move { step * (0.25 * max_move / step.norm()) } else { step };
        x += step.x;
        z += step.y;
        if on_axis {
            x = 0.0;
        }
        if x < 0.0 || (Vector2::new(x - start.x, z - start.z)).norm() > max_move {
            return None;
        }
        if step.norm() < 1e-4 * MICRO {
            let p = Vector3::new(x, 0.0, z);
            return ep.total_energy_si(dc, &p).ok().map(|e| (p, e));
        }
    }
    None
}
