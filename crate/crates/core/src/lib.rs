//! Discrete mean curvature flow on simplicial meshes of any codimension,
//! Gaussian area and entropy, second variation of area and of the Gaussian
//! area, Plateau films and caloric polynomials.

pub mod caloric;
pub mod flow;
pub mod gaussian;
pub mod geometry;
pub mod linalg;
pub mod plateau;
pub mod shrinkers;
pub mod variation;

use caloric::CaloricError;
use flow::FlowError;
use gaussian::GaussianError;
use geometry::GeometryError;
use linalg::LinalgError;
use plateau::PlateauError;
use shrinkers::ShrinkerError;
use variation::VariationError;

/// Any error raised by the library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Variation(#[from] VariationError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Gaussian(#[from] GaussianError),
    #[error(transparent)]
    Shrinker(#[from] ShrinkerError),
    #[error(transparent)]
    Plateau(#[from] PlateauError),
    #[error(transparent)]
    Caloric(#[from] CaloricError),
}

impl Error {
    /// Bad input as opposed to a computation that failed on valid input.
    pub fn is_validation(&self) -> bool {
        match self {
            Self::Geometry(e) => geometry_is_validation(e),
            Self::Linalg(_) => false,
            Self::Variation(e) => match e {
                VariationError::Geometry(g) => geometry_is_validation(g),
                VariationError::Linalg(_) => false,
                _ => true,
            },
            Self::Flow(e) => match e {
                FlowError::Geometry(g) => geometry_is_validation(g),
                FlowError::Linalg(_) => false,
                _ => true,
            },
            Self::Gaussian(e) => !matches!(e, GaussianError::NoConvergence { .. }),
            Self::Shrinker(e) => match e {
                ShrinkerError::Geometry(g) => geometry_is_validation(g),
                _ => true,
            },
            Self::Plateau(e) => match e {
                PlateauError::InvalidBoundary(_) | PlateauError::BoundaryMismatch(_) | PlateauError::RootNotFound(_) => true,
                PlateauError::NoConvergence { .. } | PlateauError::QualityCollapse { .. } | PlateauError::Linalg(_) => false,
                PlateauError::Geometry(g) => geometry_is_validation(g),
                PlateauError::Variation(v) => Self::Variation(v.clone()).is_validation(),
            },
            Self::Caloric(_) => true,
        }
    }
}

fn geometry_is_validation(e: &GeometryError) -> bool {
    !matches!(e, GeometryError::ResolutionFloor { .. })
}
