//! L1 distance from a point to the convex hull of a point set, by a
//! revised simplex method on
//!
//! ```text
//! min Σ (s⁺ + s⁻)  s.t.  Σ λ_i v_i + s⁺ - s⁻ = p,  Σ λ_i = 1,  λ, s ≥ 0.
//! ```

use nalgebra::{DMatrix, DVector};

use super::LinalgError;

const MAX_PIVOTS: usize = 5000;

/// `points` is row-major with `dim` coordinates per point.
pub fn hull_l1_distance(points: &[f64], dim: usize, p: &[f64]) -> Result<f64, LinalgError> {
    assert_eq!(p.len(), dim);
    let m = points.len() / dim;
    assert!(m > 0);
    let rows = dim + 1;
    // column j: 0..m are λ, then s⁺_k, then s⁻_k
    let column = |j: usize| -> DVector<f64> {
        let mut a = DVector::zeros(rows);
        if j < m {
            a.rows_mut(0, dim).copy_from_slice(&points[j * dim..(j + 1) * dim]);
            a[dim] = 1.0;
        } else if j < m + dim {
            a[j - m] = 1.0;
        } else {
            a[j - m - dim] = -1.0;
        }
        a
    };
    let cost = |j: usize| if j < m { 0.0 } else { 1.0 };

    // start from the nearest vertex, slacks absorbing the residual
    let i0 = (0..m)
        .min_by(|&a, &b| {
            let da: f64 = (0..dim).map(|k| (points[a * dim + k] - p[k]).powi(2)).sum();
            let db: f64 = (0..dim).map(|k| (points[b * dim + k] - p[k]).powi(2)).sum();
            da.total_cmp(&db)
        })
        .unwrap();
    let mut basis = vec![i0];
    for k in 0..dim {
        if p[k] - points[i0 * dim + k] >= 0.0 {
            basis.push(m + k);
        } else {
            basis.push(m + dim + k);
        }
    }
    let mut b = DVector::zeros(rows);
    b.rows_mut(0, dim).copy_from_slice(p);
    b[dim] = 1.0;

    let ncols = m + 2 * dim;
    for iter in 0..MAX_PIVOTS {
        let mut bmat = DMatrix::zeros(rows, rows);
        for (c, &j) in basis.iter().enumerate() {
            bmat.set_column(c, &column(j));
        }
        let binv = bmat.try_inverse().ok_or(LinalgError::SimplexStalled { iterations: iter })?;
        let xb = &binv * &b;
        let cb = DVector::from_iterator(rows, basis.iter().map(|&j| cost(j)));
        let y = binv.transpose() * cb;

        // Dantzig pricing, switching to Bland's rule late to rule out cycling
        let bland = iter > 50;
        let mut entering = None;
        let mut best = -1e-12;
        for j in 0..ncols {
            if basis.contains(&j) {
                continue;
            }
            let rc = if j < m {
                -(y[dim] + (0..dim).map(|k| y[k] * points[j * dim + k]).sum::<f64>())
            } else if j < m + dim {
                1.0 - y[j - m]
            } else {
                1.0 + y[j - m - dim]
            };
            if rc < best {
                entering = Some(j);
                if bland {
                    break;
                }
                best = rc;
            }
        }
        let Some(j) = entering else {
            return Ok(basis
                .iter()
                .zip(xb.iter())
                .filter(|(&j, _)| j >= m)
                .map(|(_, &x)| x.max(0.0))
                .sum());
        };
        let d = &binv * column(j);
        let mut leave = None;
        let mut ratio = f64::INFINITY;
        for r in 0..rows {
            if d[r] > 1e-12 {
                let t = xb[r].max(0.0) / d[r];
                if t < ratio - 1e-15 || (bland && t <= ratio && leave.is_some_and(|l: usize| basis[r] < basis[l])) {
                    ratio = t;
                    leave = Some(r);
                }
            }
        }
        // the objective is bounded below by zero, so a leaving row exists
        let r = leave.ok_or(LinalgError::SimplexStalled { iterations: iter })?;
        basis[r] = j;
    }
    Err(LinalgError::SimplexStalled {
        iterations: MAX_PIVOTS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Vec<f64> {
        vec![0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0]
    }

    #[test]
    fn interior_point_has_zero_distance() {
        assert!(hull_l1_distance(&square(), 2, &[0.3, 0.6]).unwrap() < 1e-12);
        assert!(hull_l1_distance(&square(), 2, &[1.0, 1.0]).unwrap() < 1e-12);
    }

    #[test]
    fn exterior_distance_is_l1() {
        let d = hull_l1_distance(&square(), 2, &[2.0, 3.0]).unwrap();
        assert!((d - 3.0).abs() < 1e-12);
        let d = hull_l1_distance(&square(), 2, &[0.5, -0.25]).unwrap();
        assert!((d - 0.25).abs() < 1e-12);
    }

    #[test]
    fn segment_in_higher_dimension() {
        let seg = vec![0.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0];
        assert!(hull_l1_distance(&seg, 4, &[1.0, 0.0, 0.0, 0.0]).unwrap() < 1e-12);
        let d = hull_l1_distance(&seg, 4, &[1.0, 0.0, 0.5, -0.5]).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
    }
}
