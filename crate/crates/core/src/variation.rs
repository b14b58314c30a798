//! First and second variation of volume and Gaussian area: Jacobi
//! operators, their spectra, Morse index and F-stability.

use serde::{Deserialize, Serialize};

use crate::geometry::mesh::dot;
use crate::geometry::operators::assemble_stiffness;
use crate::geometry::{build_operators, GeometryError, GeometryOperators, SimplicialMesh};
use crate::linalg::{largest_eigenpairs, CsrMatrix, EigenPairs, LinalgError};
use crate::shrinkers::shrinker_residual;

/// Largest angle (radians) between a section and the normal space.
pub const NORMALITY_TOL: f64 = 1e-6;
/// Gaussian principal angle below which a mode gets a scaling/translation label.
pub const LABEL_ANGLE: f64 = 0.1;
/// Relative instability threshold.
pub const INSTABILITY_REL: f64 = 1e-6;
/// Shrinker residual above which a stability report is flagged.
pub const RESIDUAL_FLAG_TOL: f64 = 0.05;

const EIGEN_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VariationError {
    #[error("section is not normal at vertex {vertex} (angle {angle:e} rad)")]
    NotNormal { vertex: usize, angle: f64 },
    #[error("section has {found} entries, expected {expected}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("step {step:e} is outside [1e-6, 1e-2] of the mesh scale {scale:e}")]
    InvalidStep { step: f64, scale: f64 },
    #[error("F-stability needs a closed mesh")]
    HasBoundary,
    #[error("no free vertices")]
    NoFreeVertices,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A vector field along the mesh, one ambient vector per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalSection {
    ambient: usize,
    values: Vec<f64>,
}

impl NormalSection {
    pub fn new(ambient: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len() % ambient, 0);
        Self { ambient, values }
    }

    /// `φ·n` on a hypersurface.
    pub fn from_scalar(ops: &GeometryOperators, phi: &[f64]) -> Result<Self, VariationError> {
        let n = ops.normals()?;
        let big_n = ops.ambient_dim();
        if phi.len() * big_n != n.len() {
            return Err(VariationError::SizeMismatch {
                expected: n.len() / big_n,
                found: phi.len(),
            });
        }
        let values = n
            .chunks(big_n)
            .zip(phi)
            .flat_map(|(nv, p)| nv.iter().map(move |x| p * x))
            .collect();
        Ok(Self { ambient: big_n, values })
    }

    /// Normal projection of arbitrary vectors, one per vertex.
    pub fn project(ops: &GeometryOperators, vectors: &[f64]) -> Self {
        let big_n = ops.ambient_dim();
        let values = vectors
            .chunks(big_n)
            .enumerate()
            .flat_map(|(v, x)| ops.frames().normal_part(v, x))
            .collect();
        Self { ambient: big_n, values }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, v: usize) -> &[f64] {
        &self.values[v * self.ambient..(v + 1) * self.ambient]
    }

    /// `x + s·V` on every vertex.
    pub fn displace(&self, mesh: &SimplicialMesh, s: f64) -> Result<SimplicialMesh, GeometryError> {
        let v = mesh
            .vertices()
            .iter()
            .zip(&self.values)
            .map(|(x, d)| x + s * d)
            .collect();
        mesh.with_positions(v)
    }

    fn check(&self, mesh: &SimplicialMesh, ops: &GeometryOperators) -> Result<(), VariationError> {
        if self.ambient != mesh.ambient_dim() || self.values.len() != mesh.vertices().len() {
            return Err(VariationError::SizeMismatch {
                expected: mesh.vertices().len(),
                found: self.values.len(),
            });
        }
        let mut worst = (0, 0.0f64);
        for v in 0..mesh.num_vertices() {
            let a = ops.frames().normality_angle(v, self.at(v));
            if a > worst.1 {
                worst = (v, a);
            }
        }
        if worst.1 > NORMALITY_TOL {
            return Err(VariationError::NotNormal {
                vertex: worst.0,
                angle: worst.1,
            });
        }
        Ok(())
    }
}

/// `∫⟨V, H⟩` with lumped quadrature.
///
/// Since `m·H = -K·x` and the cotangent form is the exact gradient of the
/// discrete volume, this is also the exact derivative of the polyhedral
/// volume along `V` (boundary vertices included).
pub fn first_variation(mesh: &SimplicialMesh, v: &NormalSection) -> Result<f64, VariationError> {
    let ops = build_operators(mesh)?;
    first_variation_with(mesh, &ops, v)
}

pub fn first_variation_with(
    mesh: &SimplicialMesh,
    ops: &GeometryOperators,
    v: &NormalSection,
) -> Result<f64, VariationError> {
    v.check(mesh, ops)?;
    Ok((0..mesh.num_vertices())
        .map(|i| ops.mass()[i] * dot(v.at(i), ops.h(i)))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstVariationCheck {
    pub analytic: f64,
    pub fd: f64,
    pub discrepancy: f64,
}

/// Compares [`first_variation`] with the central difference of the volume
/// of the literally displaced meshes `x ± h·V`.
pub fn check_first_variation_fd(
    mesh: &SimplicialMesh,
    v: &NormalSection,
    h: f64,
) -> Result<FirstVariationCheck, VariationError> {
    let scale = mesh.extent();
    if !(h >= 1e-6 * scale && h <= 1e-2 * scale) {
        return Err(VariationError::InvalidStep { step: h, scale });
    }
    let analytic = first_variation(mesh, v)?;
    let plus = v.displace(mesh, h)?.total_volume();
    let minus = v.displace(mesh, -h)?.total_volume();
    let fd = (plus - minus) / (2.0 * h);
    Ok(FirstVariationCheck {
        analytic,
        fd,
        discrepancy: (analytic - fd).abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    JacobiVolume,
    JacobiGaussian,
}

/// The pencil `A φ = μ diag(mass) φ` on the free vertices, where
/// `diag(mass)⁻¹ A` discretizes the scalar Jacobi operator `L`.
/// Instability means `μ > 0`.
#[derive(Debug, Clone)]
pub struct JacobiOperator {
    pub kind: OperatorKind,
    /// Restricted to `dofs`.
    pub matrix: CsrMatrix,
    pub mass: Vec<f64>,
    /// Free vertex indices.
    pub dofs: Vec<usize>,
    num_vertices: usize,
    /// Rayleigh quotient bound: the stiffness part is negative semidefinite.
    upper_bound: f64,
}

impl JacobiOperator {
    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    fn restrict(&self, phi: &[f64]) -> Vec<f64> {
        self.dofs.iter().map(|&v| phi[v]).collect()
    }

    fn extend(&self, phi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_vertices];
        for (&v, x) in self.dofs.iter().zip(phi) {
            out[v] = *x;
        }
        out
    }

    /// `L φ` at the free vertices (zero elsewhere); `φ` is taken as zero on
    /// fixed vertices.
    pub fn apply(&self, phi: &[f64]) -> Vec<f64> {
        let a = self.matrix.mul_vec(&self.restrict(phi));
        let l: Vec<f64> = a.iter().zip(&self.mass).map(|(x, m)| x / m).collect();
        self.extend(&l)
    }

    /// `φᵀ A φ ≈ ∫ φ L φ` (weighted for the Gaussian operator).
    pub fn quadratic_form(&self, phi: &[f64]) -> f64 {
        let r = self.restrict(phi);
        dot(&r, &self.matrix.mul_vec(&r))
    }

    /// Weighted inner product of two full-length fields over the free vertices.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.dofs
            .iter()
            .zip(&self.mass)
            .map(|(&v, m)| m * a[v] * b[v])
            .sum()
    }

    /// The `k` largest eigenpairs, vectors extended by zero to all vertices.
    pub fn eigenpairs(&self, k: usize) -> Result<EigenPairs, VariationError> {
        let pairs = largest_eigenpairs(&self.matrix, &self.mass, k, self.upper_bound, EIGEN_SEED)?;
        Ok(EigenPairs {
            values: pairs.values,
            vectors: pairs.vectors.iter().map(|v| self.extend(v)).collect(),
        })
    }
}

fn free_dofs(mesh: &SimplicialMesh) -> Result<Vec<usize>, VariationError> {
    let dofs = mesh.free_vertices();
    if dofs.is_empty() {
        return Err(VariationError::NoFreeVertices);
    }
    Ok(dofs)
}

/// `L φ = Δφ + |A|²φ` against the lumped mass, Dirichlet on fixed vertices.
pub fn jacobi_volume_operator(
    mesh: &SimplicialMesh,
    ops: &GeometryOperators,
) -> Result<JacobiOperator, VariationError> {
    let a2 = ops.a_squared()?;
    let dofs = free_dofs(mesh)?;
    let diag: Vec<f64> = ops.mass().iter().zip(a2).map(|(m, a)| m * a).collect();
    let full = ops.stiffness().scaled_plus_diagonal(1.0, &diag);
    Ok(JacobiOperator {
        kind: OperatorKind::JacobiVolume,
        matrix: full.principal_submatrix(&dofs),
        mass: dofs.iter().map(|&v| ops.mass()[v]).collect(),
        upper_bound: dofs.iter().map(|&v| a2[v]).fold(0.0, f64::max),
        dofs,
        num_vertices: mesh.num_vertices(),
    })
}

/// Gaussian weight `e^{-|x|²/4}` of a point.
fn rho(x: &[f64]) -> f64 {
    (-dot(x, x) / 4.0).exp()
}

/// `L φ = Δφ - ½⟨x^T, ∇φ⟩ + |A|²φ + ½φ`, discretized through the
/// Gaussian-weighted Dirichlet form (weight `e^{-|x|²/4}` at each cell
/// centroid) against the Gaussian mass `m·e^{-|x|²/4}`.
pub fn jacobi_gaussian_operator(
    mesh: &SimplicialMesh,
    ops: &GeometryOperators,
) -> Result<JacobiOperator, VariationError> {
    let a2 = ops.a_squared()?;
    let dofs = free_dofs(mesh)?;
    let cell_w: Vec<f64> = (0..mesh.num_cells()).map(|c| rho(&mesh.cell_centroid(c))).collect();
    let kg = assemble_stiffness(mesh, Some(&cell_w));
    let mg: Vec<f64> = (0..mesh.num_vertices())
        .map(|v| ops.mass()[v] * rho(mesh.vertex(v)))
        .collect();
    let diag: Vec<f64> = mg.iter().zip(a2).map(|(m, a)| m * (a + 0.5)).collect();
    let full = kg.scaled_plus_diagonal(1.0, &diag);
    Ok(JacobiOperator {
        kind: OperatorKind::JacobiGaussian,
        matrix: full.principal_submatrix(&dofs),
        mass: dofs.iter().map(|&v| mg[v]).collect(),
        upper_bound: dofs.iter().map(|&v| a2[v] + 0.5).fold(0.0, f64::max),
        dofs,
        num_vertices: mesh.num_vertices(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeLabel {
    #[serde(rename = "scaling_H")]
    ScalingH,
    #[serde(rename = "translation_E")]
    TranslationE,
    Generic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Stable,
    Unstable,
    FStable,
    FUnstable,
    /// Spectrum of a truncated noncompact shrinker; not an F-stability verdict.
    Truncated,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralReport {
    pub operator_kind: OperatorKind,
    /// Descending, `L φ = μ φ`; instability means `μ > 0`.
    pub eigenvalues: Vec<f64>,
    /// `-μ`, the opposite sign convention.
    pub negated_eigenvalues: Vec<f64>,
    /// Scalar normal components `φ`, one per vertex, mass-orthonormal.
    #[serde(skip)]
    pub eigensections: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<ModeLabel>>,
    /// Unstable directions, excluding labeled modes.
    pub index: usize,
    pub verdict: Verdict,
    pub threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shrinker_residual: Option<f64>,
    /// Set when the mesh is far from a shrinker, so F-stability is moot.
    pub residual_flag: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn threshold(values: &[f64]) -> f64 {
    INSTABILITY_REL * values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

/// Spectrum of the volume Jacobi operator: index and stable/unstable verdict.
pub fn volume_stability(
    mesh: &SimplicialMesh,
    ops: &GeometryOperators,
    k: usize,
) -> Result<SpectralReport, VariationError> {
    let op = jacobi_volume_operator(mesh, ops)?;
    let pairs = op.eigenpairs(k)?;
    let thr = threshold(&pairs.values);
    let index = pairs.values.iter().filter(|&&m| m > thr).count();
    Ok(SpectralReport {
        operator_kind: OperatorKind::JacobiVolume,
        negated_eigenvalues: pairs.values.iter().map(|m| -m).collect(),
        eigenvalues: pairs.values,
        eigensections: pairs.vectors,
        labels: None,
        index,
        verdict: if index == 0 { Verdict::Stable } else { Verdict::Unstable },
        threshold: thr,
        shrinker_residual: None,
        residual_flag: false,
        note: None,
    })
}

/// `φ_H = ⟨H, n⟩` and `⟨E_i, n⟩` for each coordinate direction.
pub fn scaling_and_translation_fields(ops: &GeometryOperators) -> Result<(Vec<f64>, Vec<Vec<f64>>), VariationError> {
    let phi_h = ops.scalar_mean_curvature()?;
    let big_n = ops.ambient_dim();
    let n = ops.normals()?;
    let e = (0..big_n)
        .map(|i| n.chunks(big_n).map(|nv| nv[i]).collect())
        .collect();
    Ok((phi_h, e))
}

/// Gaussian orthonormal basis (Gram-Schmidt) of the given fields; fields
/// that are numerically dependent are dropped.
fn orthonormalize(op: &JacobiOperator, fields: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for f in fields {
        let mut v = f.clone();
        let n0 = op.inner(&v, &v).sqrt();
        for b in &basis {
            let c = op.inner(&v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        let n = op.inner(&v, &v).sqrt();
        if n > 1e-8 * n0 && n > 0.0 {
            v.iter_mut().for_each(|x| *x /= n);
            basis.push(v);
        }
    }
    basis
}

/// Gaussian angle between `u` and the span of an orthonormal basis.
fn angle_to_span(op: &JacobiOperator, u: &[f64], basis: &[Vec<f64>]) -> f64 {
    let nu = op.inner(u, u).sqrt();
    if nu == 0.0 || basis.is_empty() {
        return std::f64::consts::FRAC_PI_2;
    }
    let p2: f64 = basis.iter().map(|b| op.inner(u, b).powi(2)).sum();
    (p2.sqrt() / nu).min(1.0).acos()
}

/// Gaussian principal angles (radians, ascending) between two subspaces,
/// each given by spanning fields.
pub fn principal_angles(op: &JacobiOperator, a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<f64> {
    let qa = orthonormalize(op, a);
    let qb = orthonormalize(op, b);
    let m = nalgebra::DMatrix::from_fn(qa.len(), qb.len(), |i, j| op.inner(&qa[i], &qb[j]));
    let mut s: Vec<f64> = m.svd(false, false).singular_values.iter().map(|x| x.min(1.0).acos()).collect();
    s.sort_by(f64::total_cmp);
    s
}

/// Default eigenpair count: ambient dimension plus five.
pub fn default_eig_count(mesh: &SimplicialMesh) -> usize {
    mesh.ambient_dim() + 5
}

/// F-stability of a closed hypersurface mesh from the `k` largest
/// eigenpairs of the Gaussian Jacobi operator.
pub fn f_stability(
    mesh: &SimplicialMesh,
    ops: &GeometryOperators,
    k: usize,
) -> Result<SpectralReport, VariationError> {
    if !mesh.is_closed() {
        return Err(VariationError::HasBoundary);
    }
    gaussian_spectrum(mesh, ops, k, false)
}

/// Gaussian Jacobi spectrum of a truncated noncompact mesh with Dirichlet
/// truncation. The verdict is always [`Verdict::Truncated`].
pub fn truncated_gaussian_spectrum(
    mesh: &SimplicialMesh,
    ops: &GeometryOperators,
    k: usize,
) -> Result<SpectralReport, VariationError> {
    gaussian_spectrum(mesh, ops, k, true)
}

fn gaussian_spectrum(
    mesh: &SimplicialMesh,
    ops: &GeometryOperators,
    k: usize,
    truncated: bool,
) -> Result<SpectralReport, VariationError> {
    let op = jacobi_gaussian_operator(mesh, ops)?;
    let pairs = op.eigenpairs(k)?;
    let (phi_h, e) = scaling_and_translation_fields(ops)?;
    let h_basis = orthonormalize(&op, &[phi_h]);
    let e_basis = orthonormalize(&op, &e);
    let labels: Vec<ModeLabel> = pairs
        .vectors
        .iter()
        .map(|u| {
            if angle_to_span(&op, u, &h_basis) < LABEL_ANGLE {
                ModeLabel::ScalingH
            } else if angle_to_span(&op, u, &e_basis) < LABEL_ANGLE {
                ModeLabel::TranslationE
            } else {
                ModeLabel::Generic
            }
        })
        .collect();
    let thr = threshold(&pairs.values);
    let index = pairs
        .values
        .iter()
        .zip(&labels)
        .filter(|(&m, &l)| m > thr && l == ModeLabel::Generic)
        .count();
    let residual = shrinker_residual(mesh)?;
    let verdict = match (truncated, index) {
        (true, _) => Verdict::Truncated,
        (false, 0) => Verdict::FStable,
        (false, _) => Verdict::FUnstable,
    };
    Ok(SpectralReport {
        operator_kind: OperatorKind::JacobiGaussian,
        negated_eigenvalues: pairs.values.iter().map(|m| -m).collect(),
        eigenvalues: pairs.values,
        eigensections: pairs.vectors,
        labels: Some(labels),
        index,
        verdict,
        threshold: thr,
        shrinker_residual: Some(residual),
        residual_flag: residual > RESIDUAL_FLAG_TOL,
        note: truncated.then(|| "truncated, not an F-stability verdict".to_string()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::gaussian_area;
    use crate::geometry::CatalogSpec;
    use std::f64::consts::PI;

    fn sphere(r: f64, level: usize) -> SimplicialMesh {
        CatalogSpec::sphere(r, level).generate().unwrap()
    }

    #[test]
    fn sphere_area_derivative() {
        let m = sphere(1.0, 4);
        let ops = build_operators(&m).unwrap();
        let v = NormalSection::from_scalar(&ops, &vec![1.0; m.num_vertices()]).unwrap();
        let fv = first_variation(&m, &v).unwrap();
        assert!((fv - 8.0 * PI).abs() < 0.01 * 8.0 * PI, "{fv}");
        let chk = check_first_variation_fd(&m, &v, 1e-4).unwrap();
        assert!(chk.discrepancy < 1e-6 * 8.0 * PI, "{chk:?}");
    }

    #[test]
    fn circle_length_derivative() {
        let m = CatalogSpec::circle(2.0, 512).generate().unwrap();
        let ops = build_operators(&m).unwrap();
        let v = NormalSection::from_scalar(&ops, &vec![1.0; m.num_vertices()]).unwrap();
        let chk = check_first_variation_fd(&m, &v, 1e-4).unwrap();
        assert!((chk.analytic - 2.0 * PI).abs() < 1e-3, "{chk:?}");
        assert!(chk.discrepancy < 1e-8);
    }

    #[test]
    fn flat_disk_has_no_first_variation() {
        let m = CatalogSpec::flat_disk(1.0, 8).generate().unwrap();
        let ops = build_operators(&m).unwrap();
        let phi: Vec<f64> = (0..m.num_vertices())
            .map(|v| if m.fixed()[v] { 0.0 } else { 1.0 - crate::geometry::mesh::norm(m.vertex(v)) })
            .collect();
        let v = NormalSection::from_scalar(&ops, &phi).unwrap();
        let chk = check_first_variation_fd(&m, &v, 1e-4).unwrap();
        assert!(chk.analytic.abs() < 1e-12 && chk.fd.abs() < 1e-8, "{chk:?}");
    }

    #[test]
    fn tangential_section_is_rejected() {
        let m = sphere(1.0, 2);
        let ops = build_operators(&m).unwrap();
        let t: Vec<f64> = (0..m.num_vertices()).flat_map(|v| ops.frames().vector(v, 0).to_vec()).collect();
        assert!(matches!(
            first_variation(&m, &NormalSection::new(3, t)),
            Err(VariationError::NotNormal { .. })
        ));
        let zero = NormalSection::new(3, vec![0.0; m.vertices().len()]);
        assert_eq!(first_variation(&m, &zero).unwrap(), 0.0);
    }

    #[test]
    fn bad_step_is_rejected() {
        let m = sphere(1.0, 1);
        let v = NormalSection::new(3, vec![0.0; m.vertices().len()]);
        assert!(matches!(
            check_first_variation_fd(&m, &v, 0.5),
            Err(VariationError::InvalidStep { .. })
        ));
    }

    #[test]
    fn flat_disk_is_volume_stable() {
        let m = CatalogSpec::flat_disk(1.0, 10).generate().unwrap();
        let ops = build_operators(&m).unwrap();
        let r = volume_stability(&m, &ops, 4).unwrap();
        assert_eq!(r.verdict, Verdict::Stable);
        assert!(r.eigenvalues.iter().all(|&m| m < 0.0));
        // first Dirichlet eigenvalue of the unit disk is j₀₁² ≈ 5.7832
        assert!((r.eigenvalues[0] + 5.7832).abs() < 0.1, "{:?}", r.eigenvalues);
    }

    #[test]
    fn gaussian_operator_is_symmetric_and_scales_h() {
        let m = sphere(2.0, 3);
        let ops = build_operators(&m).unwrap();
        let op = jacobi_gaussian_operator(&m, &ops).unwrap();
        assert!(op.matrix.asymmetry() < 1e-12);
        let (phi_h, _) = scaling_and_translation_fields(&ops).unwrap();
        let l = op.apply(&phi_h);
        let err = l.iter().zip(&phi_h).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let size = phi_h.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        assert!(err < 0.05 * size, "{err} vs {size}");
    }

    #[test]
    fn shrinker_sphere_is_f_stable() {
        let m = sphere(2.0, 3);
        let ops = build_operators(&m).unwrap();
        let r = f_stability(&m, &ops, 8).unwrap();
        assert_eq!(r.verdict, Verdict::FStable, "{r:?}");
        let labels = r.labels.as_ref().unwrap();
        assert_eq!(labels[0], ModeLabel::ScalingH);
        assert!(labels[1..4].iter().all(|&l| l == ModeLabel::TranslationE));
        assert!((r.eigenvalues[0] - 1.0).abs() < 0.05);
        assert!(r.eigenvalues[1..4].iter().all(|m| (m - 0.5).abs() < 0.05));
        assert!(r.eigenvalues[4..8].iter().all(|m| (m + 0.5).abs() < 0.05));
        assert!(!r.residual_flag);
    }

    #[test]
    fn wrong_radius_is_flagged() {
        let m = sphere(1.0, 2);
        let ops = build_operators(&m).unwrap();
        let r = f_stability(&m, &ops, 6).unwrap();
        assert!(r.residual_flag);
    }

    #[test]
    fn boundary_is_rejected() {
        let m = CatalogSpec::flat_disk(1.0, 4).generate().unwrap();
        let ops = build_operators(&m).unwrap();
        assert!(matches!(f_stability(&m, &ops, 4), Err(VariationError::HasBoundary)));
    }

    #[test]
    fn gaussian_second_variation_of_scaling() {
        // F(r·S²) = r² e^{-r²/4} has second derivative -4/e at r = 2
        let m = sphere(2.0, 4);
        let ops = build_operators(&m).unwrap();
        let op = jacobi_gaussian_operator(&m, &ops).unwrap();
        let one = vec![1.0; m.num_vertices()];
        let v = NormalSection::from_scalar(&ops, &one).unwrap();
        let h = 1e-3;
        let f0 = gaussian_area(&m);
        let fp = gaussian_area(&v.displace(&m, h).unwrap());
        let fm = gaussian_area(&v.displace(&m, -h).unwrap());
        let fd = (fp + fm - 2.0 * f0) / (h * h);
        let predicted = -op.quadratic_form(&one) / (4.0 * PI);
        assert!((fd - predicted).abs() < 0.05 * fd.abs(), "{fd} {predicted}");
        assert!((fd + 4.0 / std::f64::consts::E).abs() < 0.02);
    }

    #[test]
    fn report_serializes_both_conventions() {
        let m = sphere(2.0, 2);
        let ops = build_operators(&m).unwrap();
        let r = f_stability(&m, &ops, 5).unwrap();
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["operator_kind"], "jacobi_gaussian");
        assert_eq!(json["verdict"], "f_stable");
        assert_eq!(json["labels"][0], "scaling_H");
        assert_eq!(
            json["negated_eigenvalues"][0].as_f64().unwrap(),
            -json["eigenvalues"][0].as_f64().unwrap()
        );
    }
}
