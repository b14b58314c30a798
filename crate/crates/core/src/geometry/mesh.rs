//! Simplicial curves and surfaces embedded in R^N.

use std::collections::HashMap;

use super::GeometryError;

/// Relative threshold below which a cell counts as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// An `n`-dimensional simplicial complex (`n` = 1 or 2) with vertices in R^N.
///
/// Vertices are stored row-major, `ambient` coordinates each. Cells are
/// stored flat with `dim + 1` indices each and must be consistently
/// oriented. `fixed` marks vertices that Dirichlet-type operations leave
/// alone; every vertex on the topological boundary must be fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplicialMesh {
    dim: usize,
    ambient: usize,
    vertices: Vec<f64>,
    cells: Vec<usize>,
    fixed: Vec<bool>,
    on_boundary: Vec<bool>,
}

impl SimplicialMesh {
    /// Builds and validates a mesh. `fixed = None` fixes exactly the
    /// topological boundary.
    pub fn new(
        dim: usize,
        ambient: usize,
        vertices: Vec<f64>,
        cells: Vec<usize>,
        fixed: Option<Vec<bool>>,
    ) -> Result<Self, GeometryError> {
        if !(1..=2).contains(&dim) {
            return Err(GeometryError::InvalidDimension { dim });
        }
        if ambient < dim + 1 {
            return Err(GeometryError::AmbientTooSmall { dim, ambient });
        }
        if vertices.len() % ambient != 0 {
            return Err(GeometryError::Malformed(format!(
                "{} coordinates is not a multiple of ambient dimension {ambient}",
                vertices.len()
            )));
        }
        if cells.len() % (dim + 1) != 0 {
            return Err(GeometryError::Malformed(format!(
                "{} cell indices is not a multiple of {}",
                cells.len(),
                dim + 1
            )));
        }
        let nv = vertices.len() / ambient;
        if nv == 0 || cells.is_empty() {
            return Err(GeometryError::Empty);
        }
        if let Some(i) = vertices.iter().position(|x| !x.is_finite()) {
            return Err(GeometryError::NonFinite { vertex: i / ambient });
        }
        for (c, cell) in cells.chunks(dim + 1).enumerate() {
            for (k, &i) in cell.iter().enumerate() {
                if i >= nv {
                    return Err(GeometryError::IndexOutOfRange { cell: c, index: i });
                }
                if cell[..k].contains(&i) {
                    return Err(GeometryError::DegenerateCell { cell: c, measure: 0.0 });
                }
            }
        }
        if let Some(f) = &fixed {
            if f.len() != nv {
                return Err(GeometryError::Malformed(format!(
                    "{} boundary flags for {nv} vertices",
                    f.len()
                )));
            }
        }

        let on_boundary = topology(dim, nv, &cells)?;
        let fixed = fixed.unwrap_or_else(|| on_boundary.clone());
        if let Some(v) = (0..nv).find(|&v| on_boundary[v] && !fixed[v]) {
            return Err(GeometryError::UnflaggedBoundary { vertex: v });
        }
        let mesh = Self {
            dim,
            ambient,
            vertices,
            cells,
            fixed,
            on_boundary,
        };
        mesh.check_degeneracy()?;
        Ok(mesh)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len() / self.ambient
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len() / (self.dim + 1)
    }

    pub fn vertices(&self) -> &[f64] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.vertices[i * self.ambient..(i + 1) * self.ambient]
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        &self.cells[c * (self.dim + 1)..(c + 1) * (self.dim + 1)]
    }

    /// Vertices held fixed by Dirichlet operations.
    pub fn fixed(&self) -> &[bool] {
        &self.fixed
    }

    /// Vertices on the topological boundary.
    pub fn on_boundary(&self) -> &[bool] {
        &self.on_boundary
    }

    pub fn is_closed(&self) -> bool {
        !self.on_boundary.iter().any(|&b| b)
    }

    /// Indices of vertices that are not fixed.
    pub fn free_vertices(&self) -> Vec<usize> {
        (0..self.num_vertices()).filter(|&v| !self.fixed[v]).collect()
    }

    /// Same topology and flags with new positions; revalidates degeneracy.
    pub fn with_positions(&self, vertices: Vec<f64>) -> Result<Self, GeometryError> {
        assert_eq!(vertices.len(), self.vertices.len());
        if let Some(i) = vertices.iter().position(|x| !x.is_finite()) {
            return Err(GeometryError::NonFinite { vertex: i / self.ambient });
        }
        let mesh = Self {
            vertices,
            ..self.clone()
        };
        mesh.check_degeneracy()?;
        Ok(mesh)
    }

    /// Replaces the Dirichlet flags. Boundary vertices stay fixed.
    pub fn with_fixed(&self, fixed: Vec<bool>) -> Result<Self, GeometryError> {
        if fixed.len() != self.num_vertices() {
            return Err(GeometryError::Malformed("flag count mismatch".into()));
        }
        if let Some(v) = (0..fixed.len()).find(|&v| self.on_boundary[v] && !fixed[v]) {
            return Err(GeometryError::UnflaggedBoundary { vertex: v });
        }
        Ok(Self {
            fixed,
            ..self.clone()
        })
    }

    /// `c·x + x0` applied to every vertex.
    pub fn scaled_translated(&self, c: f64, x0: &[f64]) -> Result<Self, GeometryError> {
        assert_eq!(x0.len(), self.ambient);
        let v = self
            .vertices
            .iter()
            .enumerate()
            .map(|(k, x)| c * x + x0[k % self.ambient])
            .collect();
        self.with_positions(v)
    }

    /// Applies `x -> R x + b` with `R` given row-major as `out x ambient`.
    pub fn transformed(&self, out: usize, r: &[f64], b: &[f64]) -> Result<Self, GeometryError> {
        assert_eq!(r.len(), out * self.ambient);
        assert_eq!(b.len(), out);
        let n = self.ambient;
        let mut v = Vec::with_capacity(self.num_vertices() * out);
        for p in self.vertices.chunks(n) {
            for i in 0..out {
                v.push(b[i] + (0..n).map(|j| r[i * n + j] * p[j]).sum::<f64>());
            }
        }
        Self::new(self.dim, out, v, self.cells.clone(), Some(self.fixed.clone()))
    }

    /// Pads coordinates with zeros up to `ambient`.
    pub fn embedded(&self, ambient: usize) -> Result<Self, GeometryError> {
        if ambient < self.ambient {
            return Err(GeometryError::AmbientMismatch {
                expected: self.ambient,
                found: ambient,
            });
        }
        let mut v = Vec::with_capacity(self.num_vertices() * ambient);
        for p in self.vertices.chunks(self.ambient) {
            v.extend_from_slice(p);
            v.extend(std::iter::repeat_n(0.0, ambient - self.ambient));
        }
        Self::new(self.dim, ambient, v, self.cells.clone(), Some(self.fixed.clone()))
    }

    /// Length or area of cell `c`.
    pub fn cell_measure(&self, c: usize) -> f64 {
        let cell = self.cell(c);
        let a = self.vertex(cell[0]);
        let b = self.vertex(cell[1]);
        if self.dim == 1 {
            return dist(a, b);
        }
        let p = self.vertex(cell[2]);
        let u: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
        let w: Vec<f64> = p.iter().zip(a).map(|(x, y)| x - y).collect();
        triangle_area(&u, &w)
    }

    pub fn cell_measures(&self) -> Vec<f64> {
        (0..self.num_cells()).map(|c| self.cell_measure(c)).collect()
    }

    /// Sum of cell lengths or areas.
    pub fn total_volume(&self) -> f64 {
        (0..self.num_cells()).map(|c| self.cell_measure(c)).sum()
    }

    pub fn cell_centroid(&self, c: usize) -> Vec<f64> {
        let k = (self.dim + 1) as f64;
        let mut out = vec![0.0; self.ambient];
        for &i in self.cell(c) {
            for (o, x) in out.iter_mut().zip(self.vertex(i)) {
                *o += x / k;
            }
        }
        out
    }

    /// Unique undirected edges `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e = Vec::with_capacity(self.num_cells() * 3);
        for cell in self.cells.chunks(self.dim + 1) {
            for a in 0..cell.len() {
                for b in a + 1..cell.len() {
                    let (i, j) = (cell[a].min(cell[b]), cell[a].max(cell[b]));
                    e.push((i, j));
                }
            }
        }
        e.sort_unstable();
        e.dedup();
        e
    }

    pub fn edge_lengths(&self) -> Vec<f64> {
        self.edges()
            .iter()
            .map(|&(i, j)| dist(self.vertex(i), self.vertex(j)))
            .collect()
    }

    pub fn min_edge(&self) -> f64 {
        self.edge_lengths().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn mean_edge(&self) -> f64 {
        let l = self.edge_lengths();
        l.iter().sum::<f64>() / l.len() as f64
    }

    /// Sorted one-ring neighbours of every vertex.
    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let mut nb = vec![Vec::new(); self.num_vertices()];
        for (i, j) in self.edges() {
            nb[i].push(j);
            nb[j].push(i);
        }
        for l in &mut nb {
            l.sort_unstable();
        }
        nb
    }

    /// Cells incident to every vertex.
    pub fn vertex_cells(&self) -> Vec<Vec<usize>> {
        let mut vc = vec![Vec::new(); self.num_vertices()];
        for (c, cell) in self.cells.chunks(self.dim + 1).enumerate() {
            for &i in cell {
                vc[i].push(c);
            }
        }
        vc
    }

    /// Worst cell shape quality in (0, 1]. Triangles use
    /// `4√3·area / Σ edge²` (1 for equilateral); curves use
    /// shortest over mean edge length.
    pub fn min_quality(&self) -> f64 {
        if self.dim == 1 {
            let l = self.edge_lengths();
            let mean = l.iter().sum::<f64>() / l.len() as f64;
            return l.iter().fold(f64::INFINITY, |m, &x| m.min(x)) / mean;
        }
        let mut q = f64::INFINITY;
        for c in 0..self.num_cells() {
            let cell = self.cell(c);
            let s: f64 = [(0, 1), (1, 2), (2, 0)]
                .iter()
                .map(|&(a, b)| dist2(self.vertex(cell[a]), self.vertex(cell[b])))
                .sum();
            q = q.min(4.0 * 3f64.sqrt() * self.cell_measure(c) / s);
        }
        q
    }

    pub fn centroid(&self) -> Vec<f64> {
        let n = self.num_vertices() as f64;
        let mut c = vec![0.0; self.ambient];
        for p in self.vertices.chunks(self.ambient) {
            for (ci, x) in c.iter_mut().zip(p) {
                *ci += x / n;
            }
        }
        c
    }

    /// Largest vertex norm.
    pub fn max_norm(&self) -> f64 {
        self.vertices
            .chunks(self.ambient)
            .map(|p| norm(p))
            .fold(0.0, f64::max)
    }

    /// Diagonal of the axis-aligned bounding box.
    pub fn extent(&self) -> f64 {
        let mut lo = vec![f64::INFINITY; self.ambient];
        let mut hi = vec![f64::NEG_INFINITY; self.ambient];
        for p in self.vertices.chunks(self.ambient) {
            for k in 0..self.ambient {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        lo.iter().zip(&hi).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt()
    }

    fn check_degeneracy(&self) -> Result<(), GeometryError> {
        let m = self.cell_measures();
        let mean = m.iter().sum::<f64>() / m.len() as f64;
        for (c, &x) in m.iter().enumerate() {
            if !(x > DEGENERACY_TOL * mean) {
                return Err(GeometryError::DegenerateCell { cell: c, measure: x });
            }
        }
        Ok(())
    }
}

/// Checks manifoldness and orientation, returns the boundary vertex mask.
fn topology(dim: usize, nv: usize, cells: &[usize]) -> Result<Vec<bool>, GeometryError> {
    let mut on_boundary = vec![false; nv];
    let mut used = vec![false; nv];
    cells.iter().for_each(|&i| used[i] = true);
    if let Some(v) = used.iter().position(|&u| !u) {
        return Err(GeometryError::NonManifold(format!("vertex {v} belongs to no cell")));
    }

    if dim == 1 {
        let mut out = vec![0u32; nv];
        let mut inc = vec![0u32; nv];
        for seg in cells.chunks(2) {
            out[seg[0]] += 1;
            inc[seg[1]] += 1;
        }
        for v in 0..nv {
            match (inc[v], out[v]) {
                (1, 1) => {}
                (0, 1) | (1, 0) => on_boundary[v] = true,
                (a, b) if a + b > 2 => {
                    return Err(GeometryError::NonManifold(format!(
                        "vertex {v} has {} incident segments",
                        a + b
                    )))
                }
                _ => return Err(GeometryError::InconsistentOrientation { cell: v }),
            }
        }
        return Ok(on_boundary);
    }

    // directed edge -> (cell) ; each undirected edge needs 1 or 2 cells with
    // opposite directions
    let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(cells.len());
    for (c, t) in cells.chunks(3).enumerate() {
        for k in 0..3 {
            let e = (t[k], t[(k + 1) % 3]);
            if directed.insert(e, c).is_some() {
                let (a, b) = e;
                let count = cells
                    .chunks(3)
                    .filter(|t| t.contains(&a) && t.contains(&b))
                    .count();
                if count > 2 {
                    return Err(GeometryError::NonManifold(format!(
                        "edge ({a}, {b}) has {count} incident triangles"
                    )));
                }
                return Err(GeometryError::InconsistentOrientation { cell: c });
            }
        }
    }
    for &(a, b) in directed.keys() {
        if !directed.contains_key(&(b, a)) {
            on_boundary[a] = true;
            on_boundary[b] = true;
        }
    }
    Ok(on_boundary)
}

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Area of the triangle spanned by `u` and `w` in any dimension.
pub(crate) fn triangle_area(u: &[f64], w: &[f64]) -> f64 {
    let uu = dot(u, u);
    let ww = dot(w, w);
    let uw = dot(u, w);
    0.5 * (uu * ww - uw * uw).max(0.0).sqrt()
}
