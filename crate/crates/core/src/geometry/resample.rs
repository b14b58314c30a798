//! Edge-length control for polygonal curves.

use super::mesh::{dist, SimplicialMesh};
use super::GeometryError;

/// Fewest vertices a resampled curve may have.
pub const MIN_VERTICES: usize = 8;

/// Collapses edges shorter than `0.5·target` and splits edges longer than
/// `1.5·target` into equal pieces. Fixed vertices are never removed. A
/// mesh that needs no change is returned as is.
pub fn resample_curve(mesh: &SimplicialMesh, target: f64) -> Result<SimplicialMesh, GeometryError> {
    if mesh.dim() != 1 {
        return Err(GeometryError::NotACurve { dim: mesh.dim() });
    }
    if !(target.is_finite() && target > 0.0) {
        return Err(GeometryError::InvalidParameter {
            name: "target_edge".into(),
            value: target.to_string(),
        });
    }
    let lens = mesh.edge_lengths();
    if lens.iter().all(|&l| l >= 0.5 * target && l <= 1.5 * target) {
        return Ok(mesh.clone());
    }

    let big_n = mesh.ambient_dim();
    let mut comps = components(mesh);
    let mut total: usize = comps.iter().map(|c| c.verts.len()).sum();

    for comp in &mut comps {
        loop {
            let ne = comp.num_edges();
            // shortest collapsible edge below threshold
            let mut pick: Option<(usize, f64)> = None;
            for e in 0..ne {
                let (a, b) = comp.edge(e);
                let l = dist(&comp.pts[a], &comp.pts[b]);
                if l < 0.5 * target && comp.removable(e).is_some() && pick.is_none_or(|(_, pl)| l < pl) {
                    pick = Some((e, l));
                }
            }
            let Some((e, _)) = pick else { break };
            if total <= MIN_VERTICES || comp.min_size() >= comp.verts.len() {
                return Err(GeometryError::ResolutionFloor {
                    vertices: total,
                    floor: MIN_VERTICES,
                });
            }
            let victim = comp.removable(e).unwrap();
            comp.verts.remove(victim);
            comp.pts.remove(victim);
            comp.fixed.remove(victim);
            total -= 1;
        }
    }

    for comp in &mut comps {
        let mut pts = Vec::new();
        let mut fixed = Vec::new();
        let ne = comp.num_edges();
        for e in 0..ne {
            let (a, b) = comp.edge(e);
            pts.push(comp.pts[a].clone());
            fixed.push(comp.fixed[a]);
            let l = dist(&comp.pts[a], &comp.pts[b]);
            if l > 1.5 * target {
                let k = (l / (1.5 * target)).ceil() as usize;
                for s in 1..k {
                    let t = s as f64 / k as f64;
                    pts.push(
                        comp.pts[a]
                            .iter()
                            .zip(&comp.pts[b])
                            .map(|(x, y)| x + t * (y - x))
                            .collect(),
                    );
                    fixed.push(false);
                }
            }
        }
        if !comp.closed {
            let last = comp.pts.len() - 1;
            pts.push(comp.pts[last].clone());
            fixed.push(comp.fixed[last]);
        }
        comp.pts = pts;
        comp.fixed = fixed;
    }

    let mut vertices = Vec::new();
    let mut cells = Vec::new();
    let mut flags = Vec::new();
    for comp in &comps {
        let base = flags.len();
        let k = comp.pts.len();
        for (p, &f) in comp.pts.iter().zip(&comp.fixed) {
            vertices.extend_from_slice(p);
            flags.push(f);
        }
        let ne = if comp.closed { k } else { k - 1 };
        for e in 0..ne {
            cells.push(base + e);
            cells.push(base + (e + 1) % k);
        }
    }
    SimplicialMesh::new(1, big_n, vertices, cells, Some(flags))
}

struct Component {
    verts: Vec<usize>,
    pts: Vec<Vec<f64>>,
    fixed: Vec<bool>,
    closed: bool,
}

impl Component {
    fn num_edges(&self) -> usize {
        if self.closed {
            self.pts.len()
        } else {
            self.pts.len() - 1
        }
    }

    fn edge(&self, e: usize) -> (usize, usize) {
        (e, (e + 1) % self.pts.len())
    }

    fn min_size(&self) -> usize {
        if self.closed {
            3
        } else {
            2
        }
    }

    /// Which endpoint of edge `e` to delete: a free one, preferring the one
    /// whose other incident edge is shorter.
    fn removable(&self, e: usize) -> Option<usize> {
        let k = self.pts.len();
        let (a, b) = self.edge(e);
        let other_len = |v: usize, away: usize| -> f64 {
            let w = if away == (v + 1) % k { (v + k - 1) % k } else { (v + 1) % k };
            if !self.closed && (v == 0 || v == k - 1) {
                return f64::INFINITY;
            }
            dist(&self.pts[v], &self.pts[w])
        };
        let free = |v: usize| !self.fixed[v] && (self.closed || (v != 0 && v != k - 1));
        match (free(a), free(b)) {
            (true, true) => {
                if other_len(a, b) <= other_len(b, a) {
                    Some(a)
                } else {
                    Some(b)
                }
            }
            (true, false) => Some(a),
            (false, true) => Some(b),
            (false, false) => None,
        }
    }
}

/// Splits a curve mesh into ordered chains and loops.
fn components(mesh: &SimplicialMesh) -> Vec<Component> {
    let nv = mesh.num_vertices();
    let mut next = vec![usize::MAX; nv];
    let mut has_prev = vec![false; nv];
    for c in 0..mesh.num_cells() {
        let s = mesh.cell(c);
        next[s[0]] = s[1];
        has_prev[s[1]] = true;
    }
    let mut seen = vec![false; nv];
    let mut out = Vec::new();
    let starts: Vec<usize> = (0..nv).filter(|&v| !has_prev[v]).chain(0..nv).collect();
    for start in starts {
        if seen[start] {
            continue;
        }
        let closed = has_prev[start];
        let mut verts = Vec::new();
        let mut v = start;
        loop {
            seen[v] = true;
            verts.push(v);
            v = next[v];
            if v == usize::MAX || v == start {
                break;
            }
        }
        out.push(Component {
            pts: verts.iter().map(|&v| mesh.vertex(v).to_vec()).collect(),
            fixed: verts.iter().map(|&v| mesh.fixed()[v]).collect(),
            verts,
            closed,
        });
    }
    out
}
