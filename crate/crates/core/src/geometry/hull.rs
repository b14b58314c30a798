//! Convex hull membership through a small linear program per point.

use super::mesh::SimplicialMesh;
use super::GeometryError;
use crate::linalg::lp::hull_l1_distance;

/// L1 distance from `p` to the convex hull of the vertices of `outer`.
pub fn hull_distance(outer: &SimplicialMesh, p: &[f64]) -> Result<f64, GeometryError> {
    if p.len() != outer.ambient_dim() {
        return Err(GeometryError::AmbientMismatch {
            expected: outer.ambient_dim(),
            found: p.len(),
        });
    }
    Ok(hull_l1_distance(outer.vertices(), outer.ambient_dim(), p)?)
}

/// True iff every vertex of `inner` is within `tol` of the convex hull of
/// the vertices of `outer`. Distance is measured in the L1 norm, which
/// dominates the Euclidean one, so a `true` answer is never wrong.
pub fn convex_hull_contains(
    outer: &SimplicialMesh,
    inner: &SimplicialMesh,
    tol: f64,
) -> Result<bool, GeometryError> {
    if outer.num_vertices() == 0 || inner.num_vertices() == 0 {
        return Err(GeometryError::Empty);
    }
    let n = outer.ambient_dim();
    if inner.ambient_dim() != n {
        return Err(GeometryError::AmbientMismatch {
            expected: n,
            found: inner.ambient_dim(),
        });
    }
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for p in outer.vertices().chunks(n) {
        for k in 0..n {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    for v in 0..inner.num_vertices() {
        let p = inner.vertex(v);
        // cheap reject against the bounding box
        let box_gap: f64 = (0..n).map(|k| (lo[k] - p[k]).max(p[k] - hi[k]).max(0.0)).sum();
        if box_gap > tol {
            return Ok(false);
        }
        if hull_l1_distance(outer.vertices(), n, p)? > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::catalog::CatalogSpec;

    #[test]
    fn nested_circles() {
        let unit = CatalogSpec::circle(1.0, 64).generate().unwrap();
        let half = CatalogSpec::circle(0.5, 64).generate().unwrap();
        let big = CatalogSpec::circle(1.1, 64).generate().unwrap();
        assert!(convex_hull_contains(&unit, &unit, 1e-9).unwrap());
        assert!(convex_hull_contains(&unit, &half, 1e-9).unwrap());
        assert!(!convex_hull_contains(&unit, &big, 1e-9).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let c = CatalogSpec::circle(1.0, 8).generate().unwrap();
        let s = CatalogSpec::sphere(1.0, 0).generate().unwrap();
        assert!(convex_hull_contains(&c, &s, 1e-9).is_err());
    }
}
