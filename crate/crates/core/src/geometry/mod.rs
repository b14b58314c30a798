//! Simplicial meshes in arbitrary codimension and their discrete operators.

pub mod catalog;
pub mod hull;
pub mod io;
pub mod mesh;
pub mod operators;
pub mod resample;
pub mod tangent;

pub use catalog::{CatalogSpec, DiskLayout};
pub use hull::{convex_hull_contains, hull_distance};
pub use mesh::SimplicialMesh;
pub use operators::{build_operators, GeometryOperators};
pub use resample::resample_curve;
pub use tangent::TangentFrames;

use crate::linalg::LinalgError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("intrinsic dimension {dim} is not supported (expected 1 or 2)")]
    InvalidDimension { dim: usize },
    #[error("ambient dimension {ambient} is too small for a {dim}-dimensional mesh")]
    AmbientTooSmall { dim: usize, ambient: usize },
    #[error("malformed mesh: {0}")]
    Malformed(String),
    #[error("mesh is empty")]
    Empty,
    #[error("vertex {vertex} has a non-finite coordinate")]
    NonFinite { vertex: usize },
    #[error("cell {cell} references missing vertex {index}")]
    IndexOutOfRange { cell: usize, index: usize },
    #[error("cell {cell} is degenerate (measure {measure:e})")]
    DegenerateCell { cell: usize, measure: f64 },
    #[error("not a manifold: {0}")]
    NonManifold(String),
    #[error("cells are not consistently oriented near cell {cell}")]
    InconsistentOrientation { cell: usize },
    #[error("boundary vertex {vertex} is not flagged as fixed")]
    UnflaggedBoundary { vertex: usize },
    #[error("operation needs a hypersurface, mesh is {dim}-dimensional in R^{ambient}")]
    UnsupportedCodimension { dim: usize, ambient: usize },
    #[error("ambient dimension mismatch: expected {expected}, found {found}")]
    AmbientMismatch { expected: usize, found: usize },
    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: String, value: String },
    #[error("operation needs a curve, mesh is {dim}-dimensional")]
    NotACurve { dim: usize },
    #[error("resampling would leave fewer than {floor} vertices (currently {vertices})")]
    ResolutionFloor { vertices: usize, floor: usize },
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Total length or area.
pub fn total_volume(mesh: &SimplicialMesh) -> f64 {
    mesh.total_volume()
}

/// Builds a catalog mesh.
pub fn generate_catalog_mesh(spec: &CatalogSpec) -> Result<SimplicialMesh, GeometryError> {
    spec.generate()
}
