//! Discrete Laplace-Beltrami, lumped mass, mean curvature vector and
//! second fundamental form norm.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix5, Vector5};

use super::mesh::{dot, SimplicialMesh};
use super::tangent::{oriented_normals, TangentFrames};
use super::GeometryError;
use crate::linalg::{CsrMatrix, TripletBuilder};

/// Operators of one mesh snapshot. `stiffness` is the symmetric negative
/// semidefinite cotangent matrix (positive off-diagonal weights), so that
/// `mass⁻¹·stiffness` approximates the Laplace-Beltrami operator.
#[derive(Debug, Clone)]
pub struct GeometryOperators {
    dim: usize,
    ambient: usize,
    stiffness: CsrMatrix,
    mass: Vec<f64>,
    mean_curvature: Vec<f64>,
    frames: TangentFrames,
    normals: Option<Vec<f64>>,
    a_squared: Option<Vec<f64>>,
    interior: Vec<bool>,
}

pub fn build_operators(mesh: &SimplicialMesh) -> Result<GeometryOperators, GeometryError> {
    let stiffness = assemble_stiffness(mesh, None);
    let mass = lumped_mass(mesh);
    let big_n = mesh.ambient_dim();
    let kx = stiffness.mul_points(mesh.vertices(), big_n);
    let mean_curvature: Vec<f64> = kx
        .iter()
        .enumerate()
        .map(|(k, v)| -v / mass[k / big_n])
        .collect();
    let frames = TangentFrames::new(mesh);
    let (normals, a_squared) = if big_n == mesh.dim() + 1 {
        let normals = oriented_normals(mesh, &frames);
        let a2 = if mesh.dim() == 1 {
            mean_curvature
                .chunks(big_n)
                .map(|h| dot(h, h))
                .collect()
        } else {
            quadric_a_squared(mesh, &normals)
        };
        (Some(normals), Some(a2))
    } else {
        (None, None)
    };
    Ok(GeometryOperators {
        dim: mesh.dim(),
        ambient: big_n,
        stiffness,
        mass,
        mean_curvature,
        frames,
        normals,
        a_squared,
        interior: mesh.on_boundary().iter().map(|b| !b).collect(),
    })
}

impl GeometryOperators {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Row-major mean curvature vectors, `ambient` entries per vertex.
    pub fn mean_curvature(&self) -> &[f64] {
        &self.mean_curvature
    }

    pub fn h(&self, v: usize) -> &[f64] {
        &self.mean_curvature[v * self.ambient..(v + 1) * self.ambient]
    }

    pub fn frames(&self) -> &TangentFrames {
        &self.frames
    }

    /// Vertices not on the topological boundary.
    pub fn interior(&self) -> &[bool] {
        &self.interior
    }

    /// Oriented unit normals, only for hypersurfaces.
    pub fn normals(&self) -> Result<&[f64], GeometryError> {
        self.normals.as_deref().ok_or(GeometryError::UnsupportedCodimension {
            dim: self.dim,
            ambient: self.ambient,
        })
    }

    pub fn normal(&self, v: usize) -> Result<&[f64], GeometryError> {
        Ok(&self.normals()?[v * self.ambient..(v + 1) * self.ambient])
    }

    /// Per-vertex |A|², only for hypersurfaces.
    pub fn a_squared(&self) -> Result<&[f64], GeometryError> {
        self.a_squared.as_deref().ok_or(GeometryError::UnsupportedCodimension {
            dim: self.dim,
            ambient: self.ambient,
        })
    }

    /// Scalar mean curvature `⟨H, n⟩` for hypersurfaces.
    pub fn scalar_mean_curvature(&self) -> Result<Vec<f64>, GeometryError> {
        let n = self.normals()?;
        Ok(self
            .mean_curvature
            .chunks(self.ambient)
            .zip(n.chunks(self.ambient))
            .map(|(h, nv)| dot(h, nv))
            .collect())
    }

    /// Largest |H| over interior vertices (all vertices on closed meshes).
    pub fn max_h_interior(&self) -> f64 {
        self.mean_curvature
            .chunks(self.ambient)
            .zip(&self.interior)
            .filter(|(_, &i)| i)
            .map(|(h, _)| dot(h, h).sqrt())
            .fold(0.0, f64::max)
    }

    /// `∫|H|²` with lumped quadrature.
    pub fn willmore(&self) -> f64 {
        self.mean_curvature
            .chunks(self.ambient)
            .zip(&self.mass)
            .map(|(h, m)| m * dot(h, h))
            .sum()
    }
}

/// Cotangent stiffness for triangles, `1/|e|` weights for segments. An
/// optional per-cell weight multiplies each cell's contribution.
pub fn assemble_stiffness(mesh: &SimplicialMesh, cell_weight: Option<&[f64]>) -> CsrMatrix {
    let mut b = TripletBuilder::new(mesh.num_vertices());
    for c in 0..mesh.num_cells() {
        let w = cell_weight.map_or(1.0, |cw| cw[c]);
        let cell = mesh.cell(c);
        if mesh.dim() == 1 {
            let len = mesh.cell_measure(c);
            b.push_edge_laplacian(cell[0], cell[1], w / len);
        } else {
            let t = TriangleGeometry::new(mesh, cell);
            for k in 0..3 {
                let (i, j) = (cell[(k + 1) % 3], cell[(k + 2) % 3]);
                b.push_edge_laplacian(i, j, 0.5 * w * t.cot[k]);
            }
        }
    }
    b.build()
}

/// Mixed Voronoi vertex areas for triangles (obtuse triangles split by
/// area), half incident lengths for curves. Sums to the total volume.
pub fn lumped_mass(mesh: &SimplicialMesh) -> Vec<f64> {
    let mut m = vec![0.0; mesh.num_vertices()];
    for c in 0..mesh.num_cells() {
        let cell = mesh.cell(c);
        if mesh.dim() == 1 {
            let half = 0.5 * mesh.cell_measure(c);
            m[cell[0]] += half;
            m[cell[1]] += half;
            continue;
        }
        let t = TriangleGeometry::new(mesh, cell);
        if let Some(obtuse) = (0..3).find(|&k| t.cot[k] < 0.0) {
            for k in 0..3 {
                m[cell[k]] += if k == obtuse { 0.5 } else { 0.25 } * t.area;
            }
        } else {
            for k in 0..3 {
                // edges (k, k+1) and (k, k+2) are opposite corners k+2 and k+1
                let e1 = t.sq_len[(k + 2) % 3];
                let e2 = t.sq_len[(k + 1) % 3];
                m[cell[k]] += 0.125 * (e1 * t.cot[(k + 2) % 3] + e2 * t.cot[(k + 1) % 3]);
            }
        }
    }
    m
}

/// Area, corner cotangents and squared opposite edge lengths of a triangle
/// in any ambient dimension.
pub(crate) struct TriangleGeometry {
    pub area: f64,
    pub cot: [f64; 3],
    pub sq_len: [f64; 3],
}

impl TriangleGeometry {
    pub fn new(mesh: &SimplicialMesh, cell: &[usize]) -> Self {
        let p = [mesh.vertex(cell[0]), mesh.vertex(cell[1]), mesh.vertex(cell[2])];
        let mut cot = [0.0; 3];
        let mut sq_len = [0.0; 3];
        let mut area = 0.0;
        for k in 0..3 {
            let o = p[k];
            let a = p[(k + 1) % 3];
            let b = p[(k + 2) % 3];
            let u: Vec<f64> = a.iter().zip(o).map(|(x, y)| x - y).collect();
            let w: Vec<f64> = b.iter().zip(o).map(|(x, y)| x - y).collect();
            let uu = dot(&u, &u);
            let ww = dot(&w, &w);
            let uw = dot(&u, &w);
            let cross = (uu * ww - uw * uw).max(0.0).sqrt();
            cot[k] = uw / cross;
            sq_len[k] = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            if k == 0 {
                area = 0.5 * cross;
            }
        }
        Self { area, cot, sq_len }
    }
}

/// |A|² at each vertex of a surface in R³ from a least-squares quadric
/// height function over the two-ring, expressed in the vertex frame.
fn quadric_a_squared(mesh: &SimplicialMesh, normals: &[f64]) -> Vec<f64> {
    let nb = mesh.vertex_neighbors();
    let nv = mesh.num_vertices();
    let mut out = vec![0.0; nv];
    let mut mark = vec![usize::MAX; nv];
    for v in 0..nv {
        let nrm = &normals[3 * v..3 * v + 3];
        let (t1, t2) = complete_frame(nrm);
        // gather rings until there are enough samples
        let mut ring: Vec<usize> = vec![v];
        mark[v] = v;
        let mut frontier = vec![v];
        let mut depth = 0;
        while depth < 2 || (ring.len() < 9 && depth < 5) {
            let mut next = Vec::new();
            for &u in &frontier {
                for &w in &nb[u] {
                    if mark[w] != v {
                        mark[w] = v;
                        ring.push(w);
                        next.push(w);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
            depth += 1;
        }
        let x = mesh.vertex(v);
        let pts: Vec<[f64; 3]> = ring[1..]
            .iter()
            .map(|&w| {
                let d: Vec<f64> = mesh.vertex(w).iter().zip(x).map(|(a, b)| a - b).collect();
                [dot(&d, &t1), dot(&d, &t2), dot(&d, nrm)]
            })
            .collect();
        let s = (pts.iter().map(|p| p[0] * p[0] + p[1] * p[1]).sum::<f64>() / pts.len() as f64)
            .sqrt()
            .max(f64::MIN_POSITIVE);
        // normal equations; the scaling keeps them well conditioned, and the
        // SVD handles the rank-deficient leftovers
        let mut ata = Matrix5::zeros();
        let mut atb = Vector5::zeros();
        for p in &pts {
            let (u, w) = (p[0] / s, p[1] / s);
            let row = Vector5::new(u * u, u * w, w * w, u, w);
            ata += row * row.transpose();
            atb += row * p[2];
        }
        let coef = match ata.cholesky() {
            Some(ch) => ch.solve(&atb),
            None => {
                let mut a = DMatrix::zeros(pts.len(), 5);
                let mut rhs = DVector::zeros(pts.len());
                for (r, p) in pts.iter().enumerate() {
                    let (u, w) = (p[0] / s, p[1] / s);
                    a[(r, 0)] = u * u;
                    a[(r, 1)] = u * w;
                    a[(r, 2)] = w * w;
                    a[(r, 3)] = u;
                    a[(r, 4)] = w;
                    rhs[r] = p[2];
                }
                match a.svd(true, true).solve(&rhs, 1e-12) {
                    Ok(c) => Vector5::from_iterator(c.iter().copied()),
                    Err(_) => continue,
                }
            }
        };
        let (qa, qb, qc) = (coef[0] / (s * s), coef[1] / (s * s), coef[2] / (s * s));
        let g = [coef[3] / s, coef[4] / s];
        let hess = Matrix2::new(2.0 * qa, qb, qb, 2.0 * qc);
        let metric = Matrix2::new(1.0 + g[0] * g[0], g[0] * g[1], g[0] * g[1], 1.0 + g[1] * g[1]);
        let second = hess / (1.0 + g[0] * g[0] + g[1] * g[1]).sqrt();
        let shape = metric.try_inverse().unwrap_or_else(Matrix2::identity) * second;
        out[v] = (shape * shape).trace();
    }
    out
}

/// Two unit vectors completing `n` to an orthonormal frame of R³.
fn complete_frame(n: &[f64]) -> ([f64; 3], [f64; 3]) {
    let helper = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = dot(&helper, n);
    let mut t1 = [helper[0] - d * n[0], helper[1] - d * n[1], helper[2] - d * n[2]];
    let l = dot(&t1, &t1).sqrt();
    t1.iter_mut().for_each(|x| *x /= l);
    let t2 = [
        n[1] * t1[2] - n[2] * t1[1],
        n[2] * t1[0] - n[0] * t1[2],
        n[0] * t1[1] - n[1] * t1[0],
    ];
    (t1, t2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::catalog::CatalogSpec;

    #[test]
    fn unit_circle_curvature() {
        let m = CatalogSpec::circle(1.0, 256).generate().unwrap();
        let ops = build_operators(&m).unwrap();
        for v in 0..m.num_vertices() {
            let h = ops.h(v);
            let x = m.vertex(v);
            assert!((dot(h, h).sqrt() - 1.0).abs() < 1e-3);
            assert!(dot(h, x) > 0.0);
        }
    }

    #[test]
    fn sphere_curvature_and_a_squared() {
        let m = CatalogSpec::sphere(2.0, 4).generate().unwrap();
        let ops = build_operators(&m).unwrap();
        let a2 = ops.a_squared().unwrap();
        for v in 0..m.num_vertices() {
            // H = (n/R²)x, so |H| = n/R = 1
            let x = m.vertex(v);
            let err: f64 = ops.h(v).iter().zip(x).map(|(h, x)| (h - x / 2.0).powi(2)).sum::<f64>().sqrt();
            assert!(err < 0.01, "{err}");
            assert!((a2[v] - 0.5).abs() < 0.01, "{}", a2[v]);
        }
    }

    #[test]
    fn flat_patch_is_flat() {
        let m = CatalogSpec::plane_patch(3.0, 0.5).generate().unwrap();
        let ops = build_operators(&m).unwrap();
        let a2 = ops.a_squared().unwrap();
        for v in 0..m.num_vertices() {
            if ops.interior()[v] {
                assert!(dot(ops.h(v), ops.h(v)).sqrt() < 1e-10);
                assert!(a2[v] < 1e-10);
            }
        }
    }

    #[test]
    fn mass_and_row_sums() {
        let m = CatalogSpec::sphere(1.0, 3).generate().unwrap();
        let ops = build_operators(&m).unwrap();
        let total: f64 = ops.mass().iter().sum();
        assert!((total - m.total_volume()).abs() < 1e-12 * total);
        assert!(ops.mass().iter().all(|&x| x > 0.0));
        for s in ops.stiffness().row_sums() {
            assert!(s.abs() < 1e-12);
        }
        assert!(ops.stiffness().asymmetry() < 1e-14);
    }

    #[test]
    fn codimension_two_has_no_a_squared() {
        let m = CatalogSpec::clifford_torus(16, 16).generate().unwrap();
        let ops = build_operators(&m).unwrap();
        assert!(matches!(
            ops.a_squared(),
            Err(GeometryError::UnsupportedCodimension { dim: 2, ambient: 4 })
        ));
        assert!(ops.normals().is_err());
    }
}
