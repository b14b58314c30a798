//! Round shrinkers `S^k_{√(2k)} × R^{n-k}`, the Clifford torus, their
//! Gaussian areas, the shrinker equation residual and complex curves.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::gaussian::EntropyReport;
use crate::geometry::mesh::{dist, dot};
use crate::geometry::{build_operators, CatalogSpec, DiskLayout, GeometryError, GeometryOperators, SimplicialMesh};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ShrinkerError {
    #[error("unknown shrinker `{0}`")]
    Unknown(String),
    #[error("invalid shrinker family: {0}")]
    InvalidFamily(String),
    #[error("entropy bound is only available for spheres, got {0:?}")]
    UnsupportedTopology(Topology),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShrinkerFamily {
    /// `R^n`.
    Plane { n: usize },
    /// `S^k_{√(2k)} × R^{n-k}`, `1 ≤ k ≤ n`.
    GeneralizedCylinder { k: usize, n: usize },
    /// `S¹_{√2} × S¹_{√2} ⊂ R⁴`.
    CliffordTorus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShrinkerSpec {
    pub family: ShrinkerFamily,
    pub expected_f: f64,
    /// Radius of the spherical factor.
    pub expected_radius: f64,
}

impl ShrinkerSpec {
    pub fn new(family: ShrinkerFamily) -> Result<Self, ShrinkerError> {
        let expected_radius = match family {
            ShrinkerFamily::Plane { n } if n >= 1 => 0.0,
            ShrinkerFamily::GeneralizedCylinder { k, n } if k >= 1 && k <= n => (2.0 * k as f64).sqrt(),
            ShrinkerFamily::CliffordTorus => 2f64.sqrt(),
            other => return Err(ShrinkerError::InvalidFamily(format!("{other:?}"))),
        };
        Ok(Self {
            family,
            expected_f: closed_form_f(family),
            expected_radius,
        })
    }

    /// `plane`, `line`, `circle`, `sphere2`, `cylinder`, `clifford_torus`,
    /// or `sphere<k>`/`cylinder<k>_<n>` for general factors.
    pub fn by_name(name: &str) -> Result<Self, ShrinkerError> {
        let family = match name {
            "plane" => ShrinkerFamily::Plane { n: 2 },
            "line" => ShrinkerFamily::Plane { n: 1 },
            "circle" | "sphere1" => ShrinkerFamily::GeneralizedCylinder { k: 1, n: 1 },
            "sphere2" => ShrinkerFamily::GeneralizedCylinder { k: 2, n: 2 },
            "cylinder" => ShrinkerFamily::GeneralizedCylinder { k: 1, n: 2 },
            "clifford_torus" => ShrinkerFamily::CliffordTorus,
            other => {
                let parsed = if let Some(k) = other.strip_prefix("sphere") {
                    k.parse().ok().map(|k| ShrinkerFamily::GeneralizedCylinder { k, n: k })
                } else if let Some(rest) = other.strip_prefix("cylinder") {
                    rest.split_once('_').and_then(|(k, n)| {
                        Some(ShrinkerFamily::GeneralizedCylinder {
                            k: k.parse().ok()?,
                            n: n.parse().ok()?,
                        })
                    })
                } else {
                    None
                };
                parsed.ok_or_else(|| ShrinkerError::Unknown(other.into()))?
            }
        };
        Self::new(family)
    }

    /// A mesh of this shrinker at the given refinement level, for the
    /// families that the catalog can build (intrinsic dimension ≤ 2).
    pub fn catalog_mesh(&self, level: usize) -> Result<SimplicialMesh, ShrinkerError> {
        let r = self.expected_radius;
        let spec = match self.family {
            ShrinkerFamily::Plane { n: 2 } => CatalogSpec::plane_patch(10.0, 1.0 / (1 << level) as f64),
            ShrinkerFamily::GeneralizedCylinder { k: 1, n: 1 } => CatalogSpec::circle(r, 16 << level),
            ShrinkerFamily::GeneralizedCylinder { k: 2, n: 2 } => CatalogSpec::sphere(r, level),
            ShrinkerFamily::GeneralizedCylinder { k: 1, n: 2 } => CatalogSpec::Cylinder {
                radius: r,
                half_length: 4.0 * r,
                around: 8 << level,
                along: 16 << level,
            },
            ShrinkerFamily::CliffordTorus => CatalogSpec::clifford_torus(8 << level, 8 << level),
            other => {
                return Err(ShrinkerError::InvalidFamily(format!(
                    "{other:?} has no catalog mesh"
                )))
            }
        };
        Ok(spec.generate()?)
    }
}

/// `F(S^k_{√(2k)}) = (4π)^{-k/2} |S^k| (2k)^{k/2} e^{-k/2}`; flat factors
/// contribute 1.
fn closed_form_f(family: ShrinkerFamily) -> f64 {
    match family {
        ShrinkerFamily::Plane { .. } => 1.0,
        ShrinkerFamily::GeneralizedCylinder { k, .. } => {
            let kf = k as f64;
            (4.0 * PI).powf(-kf / 2.0) * unit_sphere_area(k) * (2.0 * kf).powf(kf / 2.0) * (-kf / 2.0).exp()
        }
        ShrinkerFamily::CliffordTorus => 2.0 * PI / E,
    }
}

/// `|S^k| = 2π^{(k+1)/2} / Γ((k+1)/2)`.
fn unit_sphere_area(k: usize) -> f64 {
    2.0 * PI.powf((k as f64 + 1.0) / 2.0) / gamma_half_integer(k + 1)
}

/// `Γ(m/2)` for a positive integer `m`.
fn gamma_half_integer(m: usize) -> f64 {
    // Γ(1/2) = √π, Γ(1) = 1, Γ(x + 1) = xΓ(x)
    let (mut g, mut x) = if m % 2 == 0 { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    while 2.0 * x < m as f64 {
        g *= x;
        x += 1.0;
    }
    g
}

pub fn expected_gaussian_area(spec: &ShrinkerSpec) -> f64 {
    spec.expected_f
}

/// Residual of `H = x^⊥/2`, normalized by `max(‖H‖∞, 1)`, over vertices at
/// least two mean edge lengths away from the boundary.
pub fn shrinker_residual(mesh: &SimplicialMesh) -> Result<f64, GeometryError> {
    shrinker_residual_with_margin(mesh, 2.0)
}

pub fn shrinker_residual_with_margin(mesh: &SimplicialMesh, margin_edges: f64) -> Result<f64, GeometryError> {
    Ok(shrinker_residual_from(mesh, &build_operators(mesh)?, margin_edges))
}

/// Same as [`shrinker_residual_with_margin`] with prebuilt operators.
pub fn shrinker_residual_from(mesh: &SimplicialMesh, ops: &GeometryOperators, margin_edges: f64) -> f64 {
    let keep = away_from_boundary(mesh, margin_edges * mesh.mean_edge());
    let mut worst = 0.0f64;
    let mut hmax = 0.0f64;
    for v in (0..mesh.num_vertices()).filter(|&v| keep[v]) {
        let h = ops.h(v);
        let xp = ops.frames().normal_part(v, mesh.vertex(v));
        let r: Vec<f64> = h.iter().zip(&xp).map(|(a, b)| a - 0.5 * b).collect();
        worst = worst.max(dot(&r, &r).sqrt());
        hmax = hmax.max(dot(h, h).sqrt());
    }
    worst / hmax.max(1.0)
}

/// Vertices whose distance to every boundary vertex is at least `margin`.
pub(crate) fn away_from_boundary(mesh: &SimplicialMesh, margin: f64) -> Vec<bool> {
    let boundary: Vec<usize> = (0..mesh.num_vertices()).filter(|&v| mesh.on_boundary()[v]).collect();
    (0..mesh.num_vertices())
        .map(|v| {
            !mesh.on_boundary()[v]
                && boundary
                    .iter()
                    .all(|&b| dist(mesh.vertex(v), mesh.vertex(b)) >= margin)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Sphere,
    Genus(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundVerdict {
    Consistent,
    ViolatesBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub verdict: BoundVerdict,
    /// `4 - λ`; negative when the bound is violated.
    pub margin: f64,
}

/// Checks `λ < 4` for an F-stable spherical shrinker. Strict, no tolerance.
pub fn entropy_bound_check(report: &EntropyReport, topology: Topology) -> Result<BoundCheck, ShrinkerError> {
    if topology != Topology::Sphere {
        return Err(ShrinkerError::UnsupportedTopology(topology));
    }
    let verdict = if report.lambda < 4.0 {
        BoundVerdict::Consistent
    } else {
        BoundVerdict::ViolatesBound
    };
    Ok(BoundCheck {
        verdict,
        margin: 4.0 - report.lambda,
    })
}

/// Euler characteristic based topology of a closed orientable surface.
pub fn surface_topology(mesh: &SimplicialMesh) -> Option<Topology> {
    if mesh.dim() != 2 || !mesh.is_closed() {
        return None;
    }
    let chi = mesh.num_vertices() as i64 - mesh.edges().len() as i64 + mesh.num_cells() as i64;
    match chi {
        2 => Some(Topology::Sphere),
        c if c <= 0 && c % 2 == 0 => Some(Topology::Genus(((2 - c) / 2) as usize)),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaGrowthRow {
    pub r: f64,
    /// Radius of the disk `|z| ≤ ρ` whose graph is `B_r ∩ Σ`.
    pub rho: f64,
    pub area: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaGrowth {
    pub m: u32,
    pub rows: Vec<AreaGrowthRow>,
    /// Largest `C` with `Area(B_r ∩ Σ) ≥ C·m·r²` on every row.
    pub fitted_c: f64,
}

/// Area of `B_r ∩ {(z, z^m)}` divided by `r²` for each radius. The
/// intersection is the graph over `|z| ≤ ρ` with `ρ² + ρ^{2m} = r²`, which
/// is meshed with a boundary-conforming ring layout.
pub fn complex_curve_area_growth(m: u32, radii: &[f64], rings: usize) -> Result<AreaGrowth, ShrinkerError> {
    if m == 0 {
        return Err(ShrinkerError::InvalidFamily("m must be at least 1".into()));
    }
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        if !(r >= 1.0 && r.is_finite()) {
            return Err(GeometryError::InvalidParameter {
                name: "r".into(),
                value: r.to_string(),
            }
            .into());
        }
        let rho = ball_parameter_radius(m, r);
        let mesh = CatalogSpec::ComplexCurve {
            m,
            radius: rho,
            resolution: rings,
            layout: DiskLayout::Rings,
        }
        .generate()?;
        let area = mesh.total_volume();
        rows.push(AreaGrowthRow {
            r,
            rho,
            area,
            ratio: area / (r * r),
        });
    }
    let fitted_c = rows
        .iter()
        .map(|row| row.ratio / m as f64)
        .fold(f64::INFINITY, f64::min);
    Ok(AreaGrowth { m, rows, fitted_c })
}

/// Solves `ρ² + ρ^{2m} = r²` by bisection.
pub fn ball_parameter_radius(m: u32, r: f64) -> f64 {
    let g = |rho: f64| rho * rho + rho.powi(2 * m as i32) - r * r;
    let (mut lo, mut hi) = (0.0, r);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
