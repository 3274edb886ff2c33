//! Marching-squares isolines on a regular grid.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// Values on a regular `nu x nv` grid, row-major in `u`. `NaN` marks
/// excluded nodes (inside conductors); cells touching one are skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarGrid {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// `values[j * u.len() + i]` at `(u[i], v[j])`.
    pub values: Vec<f64>,
}

impl ScalarGrid {
    pub fn from_fn(u: Vec<f64>, v: Vec<f64>, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(u.len() * v.len());
        for &vj in &v {
            for &ui in &u {
                values.push(f(ui, vj));
            }
        }
        ScalarGrid { u, v, values }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.u.len() + i]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Isoline {
    pub level: f64,
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
}

impl Isoline {
    /// Even-odd point-in-polygon test; false for open curves.
    pub fn encloses(&self, p: [f64; 2]) -> bool {
        if !self.closed {
            return false;
        }
        let mut inside = false;
        let n = self.points.len();
        for k in 0..n {
            let a = self.points[k];
            let b = self.points[(k + 1) % n];
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                if p[0] < x {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

/// Edge key: horizontal edges `(i, j, 0)` from node (i,j) to (i+1,j),
/// vertical `(i, j, 1)` from (i,j) to (i,j+1).
type EdgeKey = (usize, usize, u8);

fn crossing(g: &ScalarGrid, key: EdgeKey, level: f64) -> [f64; 2] {
    let (i, j, d) = key;
    let (i2, j2) = if d == 0 { (i + 1, j) } else { (i, j + 1) };
    let (a, b) = (g.at(i, j), g.at(i2, j2));
    let t = if b != a { (level - a) / (b - a) } else { 0.5 };
    [g.u[i] + t * (g.u[i2] - g.u[i]), g.v[j] + t * (g.v[j2] - g.v[j])]
}

/// Isolines of `grid` at `level`, with asymptotic-decider-free saddle
/// resolution by the cell-centre average.
pub fn isolines(grid: &ScalarGrid, level: f64) -> Vec<Isoline> {
    let (nu, nv) = (grid.u.len(), grid.v.len());
    let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    for j in 0..nv.saturating_sub(1) {
        for i in 0..nu.saturating_sub(1) {
            let c = [grid.at(i, j), grid.at(i + 1, j), grid.at(i + 1, j + 1), grid.at(i, j + 1)];
            if c.iter().any(|x| !x.is_finite()) {
                continue;
            }
            let idx = c.iter().enumerate().fold(0u8, |acc, (k, x)| acc | (((*x > level) as u8) << k));
            // Edges: bottom, right, top, left.
            let bottom = (i, j, 0);
            let right = (i + 1, j, 1);
            let top = (i, j + 1, 0);
            let left = (i, j, 1);
            let centre_above = c.iter().sum::<f64>() / 4.0 > level;
            let segs: &[(EdgeKey, EdgeKey)] = match idx {
                0 | 15 => &[],
                1 | 14 => &[(left, bottom)],
                2 | 13 => &[(bottom, right)],
                3 | 12 => &[(left, right)],
                4 | 11 => &[(right, top)],
                6 | 9 => &[(bottom, top)],
                7 | 8 => &[(left, top)],
                5 => {
                    if centre_above {
                        &[(left, top), (bottom, right)]
                    } else {
                        &[(left, bottom), (right, top)]
                    }
                }
                10 => {
                    if centre_above {
                        &[(left, bottom), (right, top)]
                    } else {
                        &[(left, top), (bottom, right)]
                    }
                }
                _ => unreachable!(),
            };
            segments.extend_from_slice(segs);
        }
    }

    let mut adjacency: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (k, (a, b)) in segments.iter().enumerate() {
        adjacency.entry(*a).or_default().push(k);
        adjacency.entry(*b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();
    let other = |k: usize, e: EdgeKey| if segments[k].0 == e { segments[k].1 } else { segments[k].0 };
    let walk = |start: EdgeKey, first: usize, used: &mut Vec<bool>| -> Vec<EdgeKey> {
        let mut chain = vec![start];
        let mut seg = first;
        let mut at = start;
        loop {
            used[seg] = true;
            at = other(seg, at);
            chain.push(at);
            match adjacency[&at].iter().find(|s| !used[**s]) {
                Some(&next) => seg = next,
                None => break,
            }
        }
        chain
    };
    // Open curves first, starting from edges with a single segment.
    let mut keys: Vec<&EdgeKey> = adjacency.keys().collect();
    keys.sort();
    for &key in &keys {
        let segs = &adjacency[key];
        if segs.len() == 1 && !used[segs[0]] {
            let chain = walk(*key, segs[0], &mut used);
            out.push(Isoline { level, points: chain.iter().map(|e| crossing(grid, *e, level)).collect(), closed: false });
        }
    }
    for k in 0..segments.len() {
        if used[k] {
            continue;
        }
        let start = segments[k].0;
        let mut chain = walk(start, k, &mut used);
        let closed = chain.last() == Some(&start);
        if closed {
            chain.pop();
        }
        out.push(Isoline { level, points: chain.iter().map(|e| crossing(grid, *e, level)).collect(), closed });
    }
    out
}
