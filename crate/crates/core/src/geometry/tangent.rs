//! Vertex tangent spaces and, for hypersurfaces, oriented unit normals.

use nalgebra::DMatrix;

use super::mesh::{dot, SimplicialMesh};
use crate::linalg::eigen::symmetric_eigen_desc;

/// Orthonormal tangent frames, `dim` vectors of length `ambient` per vertex.
#[derive(Debug, Clone)]
pub struct TangentFrames {
    dim: usize,
    ambient: usize,
    frames: Vec<f64>,
}

impl TangentFrames {
    /// Top-`n` eigenvectors of the measure-weighted average of the tangent
    /// projectors of the cells around each vertex.
    pub fn new(mesh: &SimplicialMesh) -> Self {
        let n = mesh.dim();
        let big_n = mesh.ambient_dim();
        let nv = mesh.num_vertices();
        let mut proj = vec![0.0; nv * big_n * big_n];
        for c in 0..mesh.num_cells() {
            let basis = cell_basis(mesh, c);
            let w = mesh.cell_measure(c);
            for &v in mesh.cell(c) {
                let p = &mut proj[v * big_n * big_n..(v + 1) * big_n * big_n];
                for e in &basis {
                    for a in 0..big_n {
                        for b in 0..big_n {
                            p[a * big_n + b] += w * e[a] * e[b];
                        }
                    }
                }
            }
        }
        let mut frames = vec![0.0; nv * n * big_n];
        for v in 0..nv {
            let m = DMatrix::from_row_slice(big_n, big_n, &proj[v * big_n * big_n..(v + 1) * big_n * big_n]);
            let (_, vecs) = symmetric_eigen_desc(m);
            for k in 0..n {
                for a in 0..big_n {
                    frames[(v * n + k) * big_n + a] = vecs[(a, k)];
                }
            }
        }
        Self {
            dim: n,
            ambient: big_n,
            frames,
        }
    }

    /// The `k`-th tangent vector at `v`.
    pub fn vector(&self, v: usize, k: usize) -> &[f64] {
        let s = (v * self.dim + k) * self.ambient;
        &self.frames[s..s + self.ambient]
    }

    pub fn tangential_part(&self, v: usize, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ambient];
        for k in 0..self.dim {
            let t = self.vector(v, k);
            let c = dot(t, x);
            for (o, ti) in out.iter_mut().zip(t) {
                *o += c * ti;
            }
        }
        out
    }

    pub fn normal_part(&self, v: usize, x: &[f64]) -> Vec<f64> {
        let t = self.tangential_part(v, x);
        x.iter().zip(&t).map(|(a, b)| a - b).collect()
    }

    /// Angle between `x` and the normal space at `v`, in radians
    /// (0 for the zero vector).
    pub fn normality_angle(&self, v: usize, x: &[f64]) -> f64 {
        let t = self.tangential_part(v, x);
        let tn = dot(&t, &t).sqrt();
        let xn = dot(x, x).sqrt();
        if xn == 0.0 {
            return 0.0;
        }
        (tn / xn).min(1.0).asin()
    }
}

/// Orthonormal basis of the affine span of cell `c`.
pub(crate) fn cell_basis(mesh: &SimplicialMesh, c: usize) -> Vec<Vec<f64>> {
    let cell = mesh.cell(c);
    let a = mesh.vertex(cell[0]);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(2);
    for &i in &cell[1..] {
        let mut e: Vec<f64> = mesh.vertex(i).iter().zip(a).map(|(x, y)| x - y).collect();
        for b in &basis {
            let d = dot(&e, b);
            e.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
        }
        let nrm = dot(&e, &e).sqrt();
        e.iter_mut().for_each(|x| *x /= nrm);
        basis.push(e);
    }
    basis
}

/// Oriented unit normals of a hypersurface mesh (`ambient = dim + 1`).
///
/// The normal line is the orthogonal complement of the vertex tangent
/// space; its sign follows the summed oriented cell normals, so a
/// counter-clockwise circle or an outward-oriented sphere gets outward
/// normals.
pub fn oriented_normals(mesh: &SimplicialMesh, frames: &TangentFrames) -> Vec<f64> {
    let big_n = mesh.ambient_dim();
    debug_assert_eq!(big_n, mesh.dim() + 1);
    let nv = mesh.num_vertices();
    let mut hint = vec![0.0; nv * big_n];
    for c in 0..mesh.num_cells() {
        let cell = mesh.cell(c);
        let w = oriented_cell_normal(mesh, cell);
        for &v in cell {
            for k in 0..big_n {
                hint[v * big_n + k] += w[k];
            }
        }
    }
    let mut normals = vec![0.0; nv * big_n];
    for v in 0..nv {
        // complement of the tangent frame by projecting the hint, falling
        // back to coordinate axes if the hint is tangential
        let h = &hint[v * big_n..(v + 1) * big_n];
        let mut candidates: Vec<Vec<f64>> = vec![h.to_vec()];
        for k in 0..big_n {
            let mut e = vec![0.0; big_n];
            e[k] = 1.0;
            candidates.push(e);
        }
        let mut best = vec![0.0; big_n];
        let mut best_norm = 0.0;
        for cand in candidates {
            let p = frames.normal_part(v, &cand);
            let pn = dot(&p, &p).sqrt();
            if pn > 1e-3 * dot(&cand, &cand).sqrt() {
                best = p;
                best_norm = pn;
                break;
            }
            if pn > best_norm {
                best = p;
                best_norm = pn;
            }
        }
        let sign = if dot(&best, h) < 0.0 { -1.0 } else { 1.0 };
        for k in 0..big_n {
            normals[v * big_n + k] = sign * best[k] / best_norm;
        }
    }
    normals
}

fn oriented_cell_normal(mesh: &SimplicialMesh, cell: &[usize]) -> Vec<f64> {
    let a = mesh.vertex(cell[0]);
    let b = mesh.vertex(cell[1]);
    if mesh.dim() == 1 {
        // rotate the segment direction by -90 degrees
        return vec![b[1] - a[1], -(b[0] - a[0])];
    }
    let c = mesh.vertex(cell[2]);
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let w = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    vec![
        u[1] * w[2] - u[2] * w[1],
        u[2] * w[0] - u[0] * w[2],
        u[0] * w[1] - u[1] * w[0],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::catalog::CatalogSpec;

    #[test]
    fn circle_normals_point_outward() {
        let m = CatalogSpec::circle(1.0, 64).generate().unwrap();
        let f = TangentFrames::new(&m);
        let n = oriented_normals(&m, &f);
        for v in 0..m.num_vertices() {
            let x = m.vertex(v);
            assert!((dot(&n[2 * v..2 * v + 2], x) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_frames_are_orthonormal_and_tangent() {
        let m = CatalogSpec::sphere(2.0, 2).generate().unwrap();
        let f = TangentFrames::new(&m);
        let n = oriented_normals(&m, &f);
        for v in 0..m.num_vertices() {
            let t0 = f.vector(v, 0);
            let t1 = f.vector(v, 1);
            assert!(dot(t0, t1).abs() < 1e-12);
            assert!((dot(t0, t0) - 1.0).abs() < 1e-12);
            let nv = &n[3 * v..3 * v + 3];
            let x = m.vertex(v);
            assert!(dot(nv, x) / 2.0 > 0.999);
            assert!(f.normality_angle(v, nv) < 1e-12);
        }
    }
}
