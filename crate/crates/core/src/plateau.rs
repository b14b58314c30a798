//! Form finding: minimal films spanning fixed boundary curves, the
//! two-catenoid experiment and the helicoid check.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::catalog::zip_rings;
use crate::geometry::mesh::dist;
use crate::geometry::operators::{assemble_stiffness, lumped_mass};
use crate::geometry::{build_operators, CatalogSpec, GeometryError, GeometryOperators, SimplicialMesh};
use crate::linalg::{CsrMatrix, EnvelopeCholesky, LinalgError, TripletBuilder};
use crate::variation::{volume_stability, SpectralReport, VariationError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlateauError {
    #[error("invalid boundary: {0}")]
    InvalidBoundary(String),
    #[error("initial mesh boundary does not match the boundary polygons: {0}")]
    BoundaryMismatch(String),
    #[error("no convergence after {iterations} iterations (max|H|·diameter = {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("mesh quality collapsed to {quality:e} at iteration {iteration}; try a better initial mesh")]
    QualityCollapse { iteration: usize, quality: f64 },
    #[error("no catenoid root found for half-separation {0}")]
    RootNotFound(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Variation(#[from] VariationError),
}

/// A closed polygon in R^N, vertices in order, the closing edge implied.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    pub ambient: usize,
    pub points: Vec<f64>,
}

impl Polygon {
    pub fn new(ambient: usize, points: Vec<f64>) -> Result<Self, PlateauError> {
        if ambient < 2 || points.len() % ambient != 0 {
            return Err(PlateauError::InvalidBoundary("coordinate count".into()));
        }
        let p = Self { ambient, points };
        if p.len() < 3 {
            return Err(PlateauError::InvalidBoundary("fewer than 3 vertices".into()));
        }
        if p.points.iter().any(|x| !x.is_finite()) {
            return Err(PlateauError::InvalidBoundary("non-finite coordinate".into()));
        }
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                if dist(p.vertex(i), p.vertex(j)) == 0.0 {
                    return Err(PlateauError::InvalidBoundary(format!("vertices {i} and {j} coincide")));
                }
            }
        }
        Ok(p)
    }

    /// Parses one vertex per line.
    pub fn from_text(text: &str) -> Result<Self, PlateauError> {
        let (w, pts) = crate::geometry::io::read_polygon(text)?;
        Self::new(w, pts)
    }

    /// Regular `k`-gon of the given radius in the `x₁x₂`-plane of R^N, at
    /// height `z` along `x₃` when `N ≥ 3`.
    pub fn circle(ambient: usize, radius: f64, z: f64, k: usize) -> Result<Self, PlateauError> {
        let mut pts = Vec::with_capacity(k * ambient);
        for i in 0..k {
            let t = 2.0 * std::f64::consts::PI * i as f64 / k as f64;
            let mut p = vec![0.0; ambient];
            p[0] = radius * t.cos();
            p[1] = radius * t.sin();
            if ambient >= 3 {
                p[2] = z;
            }
            pts.extend(p);
        }
        Self::new(ambient, pts)
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.ambient
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.points[i * self.ambient..(i + 1) * self.ambient]
    }

    fn centroid(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.ambient];
        for p in self.points.chunks(self.ambient) {
            c.iter_mut().zip(p).for_each(|(a, b)| *a += b);
        }
        c.iter_mut().for_each(|a| *a /= self.len() as f64);
        c
    }

    /// Point at fractional vertex index `f ∈ [0, len)`, linear along edges.
    fn at(&self, f: f64) -> Vec<f64> {
        let k = self.len();
        let i = (f.floor() as usize) % k;
        let w = f - f.floor();
        let (a, b) = (self.vertex(i), self.vertex((i + 1) % k));
        a.iter().zip(b).map(|(x, y)| x + w * (y - x)).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlateauControls {
    /// Convergence once `max|H|·diameter` drops below this.
    pub tol: f64,
    pub max_iterations: usize,
    /// Step of the semi-implicit descent in units of `diameter²`.
    pub dt: f64,
    /// Interior rings of the default cone.
    pub rings: usize,
    /// Quality collapse once `min_quality` falls below this fraction of
    /// its initial value.
    pub quality_ratio: f64,
    /// Eigenpairs in the stability report.
    pub eigs: usize,
    pub seed: u64,
}

impl Default for PlateauControls {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iterations: 5000,
            dt: 100.0,
            rings: 12,
            quality_ratio: 0.02,
            eigs: 6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlateauSolution {
    pub mesh: SimplicialMesh,
    /// Volume Jacobi spectrum, for hypersurfaces.
    pub report: Option<SpectralReport>,
    /// Largest normal component of `H` over interior vertices.
    pub max_h: f64,
    /// `max_h·diameter`.
    pub residual: f64,
    pub iterations: usize,
    /// Area after each accepted step, starting with the initial area.
    pub areas: Vec<f64>,
}

/// Cone from the centroid of a single boundary polygon, with `rings`
/// rings of vertices and interior points jittered by `1e-6·diameter`.
pub fn cone_mesh(boundary: &Polygon, rings: usize, seed: u64) -> Result<SimplicialMesh, PlateauError> {
    let rings = rings.max(1);
    let k = boundary.len();
    let c = boundary.centroid();
    let big_n = boundary.ambient;
    let diam = diameter(&boundary.points, big_n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = c.clone();
    let mut fixed = vec![false];
    let mut start = vec![0usize];
    let mut counts = vec![1usize];
    for j in 1..=rings {
        let n_j = if j == rings { k } else { ((k * j) as f64 / rings as f64).round().max(3.0) as usize };
        start.push(fixed.len());
        counts.push(n_j);
        let s = j as f64 / rings as f64;
        for i in 0..n_j {
            if j == rings {
                v.extend_from_slice(boundary.vertex(i));
                fixed.push(true);
                continue;
            }
            let p = boundary.at(k as f64 * i as f64 / n_j as f64);
            for d in 0..big_n {
                let jitter = 1e-6 * diam * (rng.random::<f64>() - 0.5);
                v.push(c[d] + s * (p[d] - c[d]) + jitter);
            }
            fixed.push(false);
        }
    }
    let mut cells = Vec::new();
    for i in 0..counts[1] {
        cells.extend_from_slice(&[0, start[1] + i, start[1] + (i + 1) % counts[1]]);
    }
    for j in 1..rings {
        zip_rings(&mut cells, start[j], counts[j], start[j + 1], counts[j + 1]);
    }
    Ok(SimplicialMesh::new(2, big_n, v, cells, Some(fixed))?)
}

fn diameter(points: &[f64], big_n: usize) -> f64 {
    let pts: Vec<&[f64]> = points.chunks(big_n).collect();
    let mut d = 0.0f64;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            d = d.max(dist(pts[i], pts[j]));
        }
    }
    d
}

/// Checks that the boundary vertices of `mesh` are exactly the polygon
/// vertices, up to `1e-9·diameter`.
fn check_boundary(mesh: &SimplicialMesh, boundary: &[Polygon], diam: f64) -> Result<(), PlateauError> {
    let bverts: Vec<usize> = (0..mesh.num_vertices()).filter(|&v| mesh.on_boundary()[v]).collect();
    let total: usize = boundary.iter().map(Polygon::len).sum();
    if bverts.len() != total {
        return Err(PlateauError::BoundaryMismatch(format!(
            "{} boundary vertices, {} polygon vertices",
            bverts.len(),
            total
        )));
    }
    for p in boundary {
        for i in 0..p.len() {
            if !bverts.iter().any(|&v| dist(mesh.vertex(v), p.vertex(i)) <= 1e-9 * diam) {
                return Err(PlateauError::BoundaryMismatch(format!("polygon vertex {i} is not on the mesh")));
            }
        }
    }
    Ok(())
}

/// Least-area film spanning the boundary polygons.
///
/// Interior vertices follow semi-implicit mean curvature flow with the
/// boundary held fixed; each step can only lower the area. Once that
/// stalls, damped Newton steps on the area over normal displacements take
/// over. Without an initial mesh a single polygon is spanned by a cone.
pub fn solve_plateau(
    boundary: &[Polygon],
    initial: Option<&SimplicialMesh>,
    controls: &PlateauControls,
) -> Result<PlateauSolution, PlateauError> {
    let first = boundary
        .first()
        .ok_or_else(|| PlateauError::InvalidBoundary("no polygon".into()))?;
    let big_n = first.ambient;
    if boundary.iter().any(|p| p.ambient != big_n) {
        return Err(PlateauError::InvalidBoundary("polygons in different dimensions".into()));
    }
    let all: Vec<f64> = boundary.iter().flat_map(|p| p.points.iter().copied()).collect();
    let diam = diameter(&all, big_n);
    let mut mesh = match initial {
        Some(m) => {
            if m.dim() != 2 || m.ambient_dim() != big_n {
                return Err(PlateauError::BoundaryMismatch("initial mesh is not a surface in the boundary's space".into()));
            }
            check_boundary(m, boundary, diam)?;
            m.clone()
        }
        None if boundary.len() == 1 => cone_mesh(first, controls.rings, controls.seed)?,
        None => {
            return Err(PlateauError::InvalidBoundary(
                "several boundary curves need an initial mesh".into(),
            ))
        }
    };
    let q0 = mesh.min_quality();
    let mut areas = vec![mesh.total_volume()];
    let dt = controls.dt * diam * diam;
    let mut iterations = 0;
    let mut anderson = Anderson::new(ANDERSON_DEPTH);
    let mut residuals = Vec::new();
    let mut newton: Option<f64> = None;
    loop {
        let ops = build_operators(&mesh)?;
        let max_h = max_normal_h(&ops);
        let residual = max_h * diam;
        if residual < controls.tol {
            let report = if big_n == 3 {
                Some(volume_stability(&mesh, &ops, controls.eigs)?)
            } else {
                None
            };
            return Ok(PlateauSolution {
                mesh,
                report,
                max_h,
                residual,
                iterations,
                areas,
            });
        }
        if iterations >= controls.max_iterations {
            return Err(PlateauError::NoConvergence { iterations, residual });
        }
        residuals.push(residual);
        if newton.is_none() && residuals.len() > STALL_WINDOW && residual > 0.5 * residuals[residuals.len() - 1 - STALL_WINDOW] {
            newton = Some(1e-3);
        }
        if let Some(mu) = newton.as_mut() {
            if let Some(next) = newton_step(&mesh, &ops, mu, q0 * controls.quality_ratio)? {
                iterations += 1;
                areas.push(next.total_volume());
                mesh = next;
                continue;
            }
        }
        let plain = descent_step(&mesh, dt).map_err(|e| match e {
            PlateauError::Geometry(GeometryError::DegenerateCell { .. }) => PlateauError::QualityCollapse {
                iteration: iterations,
                quality: 0.0,
            },
            other => other,
        })?;
        let area = mesh.total_volume();
        let next = match anderson.propose(mesh.vertices(), plain.vertices()) {
            Some(x) => match mesh.with_positions(x) {
                Ok(m) if m.total_volume() <= plain.total_volume().min(area) && m.min_quality() >= q0 * controls.quality_ratio => m,
                _ => {
                    anderson.reset();
                    plain
                }
            },
            None => plain,
        };
        iterations += 1;
        let q = next.min_quality();
        if q < controls.quality_ratio * q0 {
            return Err(PlateauError::QualityCollapse {
                iteration: iterations,
                quality: q,
            });
        }
        areas.push(next.total_volume());
        mesh = next;
    }
}

/// Iterations without halving the residual before switching to Newton.
const STALL_WINDOW: usize = 20;

/// Largest normal component of `H` over interior vertices. The tangential
/// part depends on how vertices sit along the surface, not on its shape.
fn max_normal_h(ops: &GeometryOperators) -> f64 {
    let frames = ops.frames();
    (0..ops.interior().len())
        .filter(|&v| ops.interior()[v])
        .map(|v| frames.normal_part(v, ops.h(v)).iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// Orthonormal basis of the normal space at `v`, `ambient - dim` vectors.
fn normal_basis(ops: &GeometryOperators, v: usize) -> Vec<Vec<f64>> {
    let big_n = ops.ambient_dim();
    let frames = ops.frames();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for axis in 0..big_n {
        let mut e = vec![0.0; big_n];
        e[axis] = 1.0;
        let mut e = frames.normal_part(v, &e);
        for b in &basis {
            let c: f64 = b.iter().zip(&e).map(|(x, y)| x * y).sum();
            e.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        let norm = e.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.5 {
            basis.push(e.into_iter().map(|x| x / norm).collect());
        }
        if basis.len() == big_n - ops.dim() {
            break;
        }
    }
    basis
}

/// One damped Newton step on the discrete area over normal displacements
/// of the free vertices. `mu` is the relative Levenberg-Marquardt damping,
/// adapted in place. Returns `None` when no damping gives an area decrease
/// that keeps quality above `min_quality`.
fn newton_step(
    mesh: &SimplicialMesh,
    ops: &GeometryOperators,
    mu: &mut f64,
    min_quality: f64,
) -> Result<Option<SimplicialMesh>, PlateauError> {
    let big_n = mesh.ambient_dim();
    let k = big_n - mesh.dim();
    let (g, h) = area_hessian(mesh);
    let dofs = mesh.free_vertices();
    let normals: Vec<Vec<Vec<f64>>> = dofs.iter().map(|&v| normal_basis(ops, v)).collect();
    if normals.iter().any(|b| b.len() != k) {
        return Ok(None);
    }
    // reduced gradient and Hessian, N^T g and N^T H N
    let n = dofs.len() * k;
    let mut rg = vec![0.0; n];
    for (l, basis) in normals.iter().enumerate() {
        for (a, nv) in basis.iter().enumerate() {
            rg[l * k + a] = (0..big_n).map(|d| nv[d] * g[l * big_n + d]).sum();
        }
    }
    let mut b = TripletBuilder::new(n);
    for l in 0..dofs.len() {
        for i in 0..big_n {
            for (col, value) in h.row(l * big_n + i) {
                let (m, j) = (col / big_n, col % big_n);
                for (a, na) in normals[l].iter().enumerate() {
                    for (c, nc) in normals[m].iter().enumerate() {
                        b.push(l * k + a, m * k + c, na[i] * value * nc[j]);
                    }
                }
            }
        }
    }
    let rh = b.build();
    let scale = rh.diagonal().iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let area = mesh.total_volume();
    for _ in 0..30 {
        let a = rh.scaled_plus_diagonal(1.0, &vec![*mu * scale; n]);
        let Ok(chol) = EnvelopeCholesky::factor(&a) else {
            *mu *= 10.0;
            continue;
        };
        let step = chol.solve(&rg);
        let mut x = mesh.vertices().to_vec();
        for (l, &v) in dofs.iter().enumerate() {
            for (a, nv) in normals[l].iter().enumerate() {
                for d in 0..big_n {
                    x[v * big_n + d] -= step[l * k + a] * nv[d];
                }
            }
        }
        match mesh.with_positions(x) {
            Ok(m) if m.total_volume() < area && m.min_quality() >= min_quality => {
                *mu = (*mu * 0.1).max(1e-14);
                return Ok(Some(m));
            }
            _ => *mu *= 10.0,
        }
    }
    Ok(None)
}

/// Gradient and Hessian of the total area in the free coordinates,
/// ordered free vertex by ambient coordinate. Triangles only.
fn area_hessian(mesh: &SimplicialMesh) -> (Vec<f64>, CsrMatrix) {
    let big_n = mesh.ambient_dim();
    let dofs = mesh.free_vertices();
    let mut local = vec![usize::MAX; mesh.num_vertices()];
    for (l, &v) in dofs.iter().enumerate() {
        local[v] = l;
    }
    let n = dofs.len() * big_n;
    let mut grad = vec![0.0; n];
    let mut b = TripletBuilder::new(n);
    for c in 0..mesh.num_cells() {
        let cell = mesh.cell(c);
        let p0 = mesh.vertex(cell[0]);
        let ea: Vec<f64> = mesh.vertex(cell[1]).iter().zip(p0).map(|(x, y)| x - y).collect();
        let eb: Vec<f64> = mesh.vertex(cell[2]).iter().zip(p0).map(|(x, y)| x - y).collect();
        let dot = |u: &[f64], w: &[f64]| u.iter().zip(w).map(|(x, y)| x * y).sum::<f64>();
        let (aa, bb, ab) = (dot(&ea, &ea), dot(&eb, &eb), dot(&ea, &eb));
        let gram = aa * bb - ab * ab;
        if gram <= 0.0 {
            continue;
        }
        let s = gram.sqrt();
        // derivatives of the Gram determinant in (a, b)
        let mut dg = vec![0.0; 2 * big_n];
        for i in 0..big_n {
            dg[i] = 2.0 * (bb * ea[i] - ab * eb[i]);
            dg[big_n + i] = 2.0 * (aa * eb[i] - ab * ea[i]);
        }
        let mut hab = DMatrix::<f64>::zeros(2 * big_n, 2 * big_n);
        for i in 0..big_n {
            for j in 0..big_n {
                let delta = if i == j { 1.0 } else { 0.0 };
                hab[(i, j)] = 2.0 * bb * delta - 2.0 * eb[i] * eb[j];
                hab[(big_n + i, big_n + j)] = 2.0 * aa * delta - 2.0 * ea[i] * ea[j];
                let cross = 4.0 * ea[i] * eb[j] - 2.0 * eb[i] * ea[j] - 2.0 * ab * delta;
                hab[(i, big_n + j)] = cross;
                hab[(big_n + j, i)] = cross;
            }
        }
        // area = sqrt(gram)/2
        for i in 0..2 * big_n {
            for j in 0..2 * big_n {
                hab[(i, j)] = hab[(i, j)] / (4.0 * s) - dg[i] * dg[j] / (8.0 * s * s * s);
            }
        }
        // vertex k sees a with weight ja[k] and b with weight jb[k]
        let ja = [-1.0, 1.0, 0.0];
        let jb = [-1.0, 0.0, 1.0];
        for (k, &vk) in cell.iter().enumerate() {
            let lk = local[vk];
            if lk == usize::MAX {
                continue;
            }
            for i in 0..big_n {
                grad[lk * big_n + i] += (ja[k] * dg[i] + jb[k] * dg[big_n + i]) / (4.0 * s);
            }
            for (m, &vm) in cell.iter().enumerate() {
                let lm = local[vm];
                if lm == usize::MAX {
                    continue;
                }
                for i in 0..big_n {
                    for j in 0..big_n {
                        let v = ja[k] * ja[m] * hab[(i, j)]
                            + ja[k] * jb[m] * hab[(i, big_n + j)]
                            + jb[k] * ja[m] * hab[(big_n + i, j)]
                            + jb[k] * jb[m] * hab[(big_n + i, big_n + j)];
                        b.push(lk * big_n + i, lm * big_n + j, v);
                    }
                }
            }
        }
    }
    (grad, b.build())
}

/// History length of the accelerated fixed-point iteration.
const ANDERSON_DEPTH: usize = 6;

/// Anderson mixing for the fixed point `x = G(x)` of the descent step.
/// Plain steps slide vertices tangentially and converge only linearly.
struct Anderson {
    depth: usize,
    xs: Vec<Vec<f64>>,
    fs: Vec<Vec<f64>>,
}

impl Anderson {
    fn new(depth: usize) -> Self {
        Self {
            depth,
            xs: Vec::new(),
            fs: Vec::new(),
        }
    }

    fn reset(&mut self) {
        self.xs.clear();
        self.fs.clear();
    }

    /// Records `x` and `G(x)` and returns the mixed iterate, once there is
    /// some history.
    fn propose(&mut self, x: &[f64], gx: &[f64]) -> Option<Vec<f64>> {
        let f: Vec<f64> = gx.iter().zip(x).map(|(g, x)| g - x).collect();
        self.xs.push(x.to_vec());
        self.fs.push(f);
        if self.xs.len() > self.depth + 1 {
            self.xs.remove(0);
            self.fs.remove(0);
        }
        let m = self.xs.len() - 1;
        if m == 0 {
            return None;
        }
        let n = x.len();
        let last = &self.fs[m];
        let df = DMatrix::from_fn(n, m, |i, j| self.fs[j + 1][i] - self.fs[j][i]);
        let rhs = DVector::from_column_slice(last);
        let gamma = df.svd(true, true).solve(&rhs, 1e-12).ok()?;
        let mut out = gx.to_vec();
        for j in 0..m {
            let g = gamma[j];
            for i in 0..n {
                let dx = self.xs[j + 1][i] - self.xs[j][i];
                let dfi = self.fs[j + 1][i] - self.fs[j][i];
                out[i] -= g * (dx + dfi);
            }
        }
        out.iter().all(|v| v.is_finite()).then_some(out)
    }
}

/// `(M - dt·K) x' = M x` on the free vertices with Dirichlet data.
fn descent_step(mesh: &SimplicialMesh, dt: f64) -> Result<SimplicialMesh, PlateauError> {
    let big_n = mesh.ambient_dim();
    let nv = mesh.num_vertices();
    let k = assemble_stiffness(mesh, None);
    let m = lumped_mass(mesh);
    let dofs = mesh.free_vertices();
    let mut local = vec![usize::MAX; nv];
    for (l, &v) in dofs.iter().enumerate() {
        local[v] = l;
    }
    let x = mesh.vertices();
    let mut rhs = vec![0.0; dofs.len() * big_n];
    for (l, &v) in dofs.iter().enumerate() {
        for d in 0..big_n {
            rhs[l * big_n + d] = m[v] * x[v * big_n + d];
        }
        for (j, w) in k.row(v) {
            if local[j] == usize::MAX {
                for d in 0..big_n {
                    rhs[l * big_n + d] += dt * w * x[j * big_n + d];
                }
            }
        }
    }
    let a = k.scaled_plus_diagonal(-dt, &m).principal_submatrix(&dofs);
    let sol = EnvelopeCholesky::factor(&a)?.solve_points(&rhs, big_n);
    let mut out = x.to_vec();
    for (l, &v) in dofs.iter().enumerate() {
        out[v * big_n..(v + 1) * big_n].copy_from_slice(&sol[l * big_n..(l + 1) * big_n]);
    }
    Ok(mesh.with_positions(out)?)
}

/// Root `u*` of `u·tanh(u) = 1`, where `u/cosh(u)` is largest.
fn fold_parameter() -> f64 {
    let mut u: f64 = 1.2;
    for _ in 0..50 {
        let f = u * u.tanh() - 1.0;
        let df = u.tanh() + u / u.cosh().powi(2);
        let step = f / df;
        u -= step;
        if step.abs() < 1e-16 {
            break;
        }
    }
    u
}

/// Largest half-separation `h*` at which two coaxial unit circles bound a
/// catenoid: the maximum of `h = u/cosh(u)` over `u = h/a > 0`.
pub fn critical_half_separation() -> f64 {
    let u = fold_parameter();
    u / u.cosh()
}

/// Necks `a` of the catenoids `r = a·cosh(z/a)` through unit circles at
/// `z = ±h`, i.e. the roots of `a·cosh(h/a) = 1`, as `(fat, thin)`.
/// `None` when `h` is beyond the fold.
pub fn catenoid_necks(h: f64) -> Result<Option<(f64, f64)>, PlateauError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(PlateauError::RootNotFound(h));
    }
    // in u = h/a the condition reads cosh(u) = u/h
    let g = |u: f64| u.cosh() - u / h;
    let us = fold_parameter();
    if g(us) > 0.0 {
        return Ok(None);
    }
    let bisect = |mut lo: f64, mut hi: f64| -> f64 {
        let s = g(lo).signum();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid).signum() == s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let mut hi = 2.0 * us;
    while g(hi) <= 0.0 {
        hi *= 2.0;
        if hi > 1e3 {
            return Err(PlateauError::RootNotFound(h));
        }
    }
    let u_fat = bisect(0.0, us);
    let u_thin = bisect(us, hi);
    Ok(Some((h / u_fat, h / u_thin)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Fat,
    Thin,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchRow {
    pub h: f64,
    pub branch: Branch,
    /// Neck radius `a`; 0 for `none`.
    pub neck: f64,
    pub index: Option<usize>,
    /// Largest volume Jacobi eigenvalue.
    pub top_eigenvalue: Option<f64>,
}

/// Clipped catenoid between unit circles at `z = ±h` with `around`
/// vertices per circle and square conformal cells.
pub fn catenoid_mesh(neck: f64, h: f64, around: usize) -> Result<SimplicialMesh, PlateauError> {
    let span = 2.0 * h / neck;
    let along = ((around as f64 * span / (2.0 * std::f64::consts::PI)).round() as usize).max(4);
    Ok(CatalogSpec::Catenoid {
        neck,
        half_height: h,
        around,
        along,
    }
    .generate()?)
}

/// For each `h`, both catenoid branches with their Morse index, or a
/// single `none` row beyond the fold.
pub fn catenoid_branch_scan(h_values: &[f64], around: usize) -> Result<Vec<BranchRow>, PlateauError> {
    let mut rows = Vec::new();
    for &h in h_values {
        match catenoid_necks(h)? {
            None => rows.push(BranchRow {
                h,
                branch: Branch::None,
                neck: 0.0,
                index: None,
                top_eigenvalue: None,
            }),
            Some((fat, thin)) => {
                for (branch, a) in [(Branch::Fat, fat), (Branch::Thin, thin)] {
                    let mesh = catenoid_mesh(a, h, around)?;
                    let ops = build_operators(&mesh)?;
                    let r = volume_stability(&mesh, &ops, 4)?;
                    rows.push(BranchRow {
                        h,
                        branch,
                        neck: a,
                        index: Some(r.index),
                        top_eigenvalue: r.eigenvalues.first().copied(),
                    });
                }
            }
        }
    }
    Ok(rows)
}

/// Largest `h` in `[lo, hi]` at which the root finder still returns both
/// branches, by bisection.
pub fn scan_fold(mut lo: f64, mut hi: f64) -> Result<f64, PlateauError> {
    if catenoid_necks(lo)?.is_none() || catenoid_necks(hi)?.is_some() {
        return Err(PlateauError::RootNotFound(lo));
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if catenoid_necks(mid)?.is_some() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HelicoidControls {
    pub radius: f64,
    pub height: f64,
    pub turns: f64,
    pub along: usize,
    pub across: usize,
}

impl Default for HelicoidControls {
    fn default() -> Self {
        Self {
            radius: 1.0,
            height: 2.0 * std::f64::consts::PI,
            turns: 1.0,
            along: 128,
            across: 32,
        }
    }
}

/// Largest interior |H| on a helicoid patch.
pub fn helicoid_validate(c: &HelicoidControls) -> Result<f64, PlateauError> {
    let mesh = CatalogSpec::Helicoid {
        radius: c.radius,
        height: c.height,
        turns: c.turns,
        along: c.along,
        across: c.across,
    }
    .generate()?;
    Ok(build_operators(&mesh)?.max_h_interior())
}
