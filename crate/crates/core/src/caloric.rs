//! Caloric polynomials on the static `R^n` and the affine span of flow
//! snapshots.
//!
//! A polynomial `u(x, t)` is caloric when `∂_t u = Δu`. Every monomial `x^α`
//! extends uniquely to one, `Σ_j t^j Δ^j x^α / j!`; the sum is finite since
//! `Δ` lowers the degree by two.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::geometry::SimplicialMesh;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CaloricError {
    #[error("no meshes supplied")]
    EmptyInput,
    #[error("snapshot {index} lives in R^{found}, expected R^{expected}")]
    AmbientMismatch { index: usize, expected: usize, found: usize },
    #[error("point has {found} coordinates, polynomial has {expected}")]
    ArityMismatch { expected: usize, found: usize },
}

/// Polynomial in `(t, x_1, ..., x_n)` with exact rational coefficients.
///
/// Keys are exponent vectors `[k, α_1, ..., α_n]` for `t^k x^α`; zero
/// coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaloricPolynomial {
    n: usize,
    terms: BTreeMap<Vec<u32>, BigRational>,
}

/// One term of a [`CaloricPolynomial`], for serialization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaloricTerm {
    pub t_power: u32,
    pub x_powers: Vec<u32>,
    /// Exact rational as `p` or `p/q`.
    pub coefficient: String,
}

impl CaloricPolynomial {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            terms: BTreeMap::new(),
        }
    }

    /// `x^alpha` at `t = 0`.
    pub fn monomial(alpha: &[u32]) -> Self {
        let mut p = Self::zero(alpha.len());
        let mut key = vec![0];
        key.extend_from_slice(alpha);
        p.terms.insert(key, BigRational::one());
        p
    }

    pub fn num_space_vars(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Parabolic degree `max(|α| + 2k)` over the terms; 0 for the zero
    /// polynomial.
    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|k| 2 * k[0] + k[1..].iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn coefficient(&self, t_power: u32, x_powers: &[u32]) -> BigRational {
        let mut key = vec![t_power];
        key.extend_from_slice(x_powers);
        self.terms.get(&key).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn terms(&self) -> Vec<CaloricTerm> {
        self.terms
            .iter()
            .map(|(k, c)| CaloricTerm {
                t_power: k[0],
                x_powers: k[1..].to_vec(),
                coefficient: c.to_string(),
            })
            .collect()
    }

    fn add_term(&mut self, key: Vec<u32>, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(key.clone()).or_insert_with(BigRational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&key);
        }
    }

    /// Spatial Laplacian.
    pub fn laplacian(&self) -> Self {
        let mut out = Self::zero(self.n);
        for (key, c) in &self.terms {
            for i in 1..=self.n {
                let a = key[i];
                if a >= 2 {
                    let mut k = key.clone();
                    k[i] -= 2;
                    out.add_term(k, c * BigRational::from_integer(BigInt::from(a * (a - 1))));
                }
            }
        }
        out
    }

    pub fn time_derivative(&self) -> Self {
        let mut out = Self::zero(self.n);
        for (key, c) in &self.terms {
            if key[0] >= 1 {
                let mut k = key.clone();
                k[0] -= 1;
                out.add_term(k, c * BigRational::from_integer(BigInt::from(key[0])));
            }
        }
        out
    }

    /// `∂_t u - Δu`, exactly.
    pub fn heat_defect(&self) -> Self {
        let mut d = self.time_derivative();
        for (k, c) in self.laplacian().terms {
            d.add_term(k, -c);
        }
        d
    }

    pub fn is_caloric(&self) -> bool {
        self.heat_defect().is_zero()
    }

    /// The `t = 0` slice.
    pub fn initial_values(&self) -> Self {
        Self {
            n: self.n,
            terms: self
                .terms
                .iter()
                .filter(|(k, _)| k[0] == 0)
                .map(|(k, c)| (k.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn eval(&self, x: &[f64], t: f64) -> Result<f64, CaloricError> {
        if x.len() != self.n {
            return Err(CaloricError::ArityMismatch {
                expected: self.n,
                found: x.len(),
            });
        }
        Ok(self
            .terms
            .iter()
            .map(|(k, c)| {
                let mut v = c.to_f64().unwrap_or(f64::NAN) * t.powi(k[0] as i32);
                for (xi, &a) in x.iter().zip(&k[1..]) {
                    v *= xi.powi(a as i32);
                }
                v
            })
            .sum())
    }
}

impl fmt::Display for CaloricPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        // highest parabolic degree first, then fewer powers of t
        let mut keys: Vec<&Vec<u32>> = self.terms.keys().collect();
        keys.sort_by_key(|k| (std::cmp::Reverse(2 * k[0] + k[1..].iter().sum::<u32>()), k[0]));
        for (i, key) in keys.into_iter().enumerate() {
            let c = &self.terms[key];
            let negative = c < &BigRational::zero();
            let mag = if negative { -c.clone() } else { c.clone() };
            match (i, negative) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let mut factors = Vec::new();
            let power = |name: String, p: u32| if p == 1 { name } else { format!("{name}^{p}") };
            if key[0] > 0 {
                factors.push(power("t".into(), key[0]));
            }
            for (j, &a) in key[1..].iter().enumerate() {
                if a > 0 {
                    factors.push(power(format!("x{}", j + 1), a));
                }
            }
            if factors.is_empty() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{}", factors.join("*"))?;
            } else {
                write!(f, "{mag}*{}", factors.join("*"))?;
            }
        }
        Ok(())
    }
}

/// The caloric polynomial with initial values `x^alpha`.
pub fn caloric_extension(alpha: &[u32]) -> CaloricPolynomial {
    let mut out = CaloricPolynomial::zero(alpha.len());
    let mut power = CaloricPolynomial::monomial(alpha);
    let mut factorial = BigInt::one();
    let mut j: u32 = 0;
    while !power.is_zero() {
        for (key, c) in &power.terms {
            let mut k = key.clone();
            k[0] = j;
            out.add_term(k, c / BigRational::from_integer(factorial.clone()));
        }
        power = power.laplacian();
        j += 1;
        factorial *= BigInt::from(j);
    }
    out
}

/// Exponent vectors `α ∈ N^n` with `|α| ≤ d`, in graded order.
pub fn monomials_up_to(n: usize, d: u32) -> Vec<Vec<u32>> {
    fn rec(prefix: &mut Vec<u32>, left: usize, budget: u32, out: &mut Vec<Vec<u32>>) {
        if left == 0 {
            out.push(prefix.clone());
            return;
        }
        for a in 0..=budget {
            prefix.push(a);
            rec(prefix, left - 1, budget - a, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), n, d, &mut out);
    out.sort_by_key(|a| (a.iter().sum::<u32>(), std::cmp::Reverse(a.clone())));
    out
}

/// Caloric extensions of all monomials of degree at most `d` in `n`
/// variables.
pub fn caloric_basis(n: usize, d: u32) -> Vec<CaloricPolynomial> {
    monomials_up_to(n, d).iter().map(|a| caloric_extension(a)).collect()
}

/// Dimension of the caloric polynomials of parabolic degree at most `d` on
/// `R^n`.
///
/// Counts the extensions that are caloric, have degree at most `d` and
/// whose `t = 0` slice is exactly their own monomial. Distinct monomials as
/// initial values make the family triangular, hence independent, and every
/// caloric polynomial is the extension of its initial values.
pub fn dim_pd(n: usize, d: u32) -> usize {
    monomials_up_to(n, d)
        .iter()
        .filter(|alpha| {
            let u = caloric_extension(alpha);
            u.is_caloric() && u.degree() <= d && u.initial_values() == CaloricPolynomial::monomial(alpha)
        })
        .count()
}

/// `C(n + d, n)`.
pub fn binomial_count(n: usize, d: u32) -> u128 {
    let (n, d) = (n as u128, d as u128);
    (1..=n).fold(1u128, |acc, i| acc * (d + i) / i)
}

/// `normal · x = offset` holds on every vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearRelation {
    /// Unit length.
    pub normal: Vec<f64>,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanRank {
    pub affine_rank: usize,
    pub ambient_dim: usize,
    /// Of the centered coordinate matrix, descending.
    pub singular_values: Vec<f64>,
    pub centroid: Vec<f64>,
    /// Basis of the relations cutting out the affine span.
    pub relations: Vec<LinearRelation>,
}

/// Relative singular value cutoff for [`coordinate_span_rank`].
pub const SPAN_RANK_TOL: f64 = 1e-10;

/// Affine span of the vertices of all `meshes` together.
pub fn coordinate_span_rank(meshes: &[SimplicialMesh]) -> Result<SpanRank, CaloricError> {
    let first = meshes.first().ok_or(CaloricError::EmptyInput)?;
    let big_n = first.ambient_dim();
    for (index, m) in meshes.iter().enumerate() {
        if m.ambient_dim() != big_n {
            return Err(CaloricError::AmbientMismatch {
                index,
                expected: big_n,
                found: m.ambient_dim(),
            });
        }
    }
    let rows: usize = meshes.iter().map(|m| m.num_vertices()).sum();
    let mut centroid = vec![0.0; big_n];
    for m in meshes {
        for p in m.vertices().chunks(big_n) {
            centroid.iter_mut().zip(p).for_each(|(c, x)| *c += x);
        }
    }
    centroid.iter_mut().for_each(|c| *c /= rows as f64);
    let mut x = DMatrix::zeros(rows, big_n);
    let mut r = 0;
    for m in meshes {
        for p in m.vertices().chunks(big_n) {
            for d in 0..big_n {
                x[(r, d)] = p[d] - centroid[d];
            }
            r += 1;
        }
    }
    // pad so the decomposition always yields big_n right singular vectors
    if rows < big_n {
        x = x.resize_vertically(big_n, 0.0);
    }
    let svd = x.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors were requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let s_max = singular_values.first().copied().unwrap_or(0.0);
    let affine_rank = singular_values
        .iter()
        .filter(|&&s| s_max > 0.0 && s > SPAN_RANK_TOL * s_max)
        .count();
    let relations = order[affine_rank..]
        .iter()
        .map(|&i| {
            let normal: Vec<f64> = v_t.row(i).iter().copied().collect();
            let offset = normal.iter().zip(&centroid).map(|(a, b)| a * b).sum();
            LinearRelation { normal, offset }
        })
        .collect();
    Ok(SpanRank {
        affine_rank,
        ambient_dim: big_n,
        singular_values,
        centroid,
        relations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CatalogSpec;

    fn q(p: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(d))
    }

    #[test]
    fn extension_of_x_squared() {
        let u = caloric_extension(&[2]);
        assert_eq!(u.coefficient(0, &[2]), q(1, 1));
        assert_eq!(u.coefficient(1, &[0]), q(2, 1));
        assert_eq!(u.terms().len(), 2);
        assert_eq!(u.to_string(), "x1^2 + 2*t");
    }

    #[test]
    fn extension_of_x_fourth() {
        let u = caloric_extension(&[4]);
        assert_eq!(u.to_string(), "x1^4 + 12*t*x1^2 + 12*t^2");
        assert!(u.is_caloric());
        assert_eq!(u.degree(), 4);
    }

    #[test]
    fn harmonic_monomial_is_unchanged() {
        let u = caloric_extension(&[1, 0]);
        assert_eq!(u, CaloricPolynomial::monomial(&[1, 0]));
    }

    #[test]
    fn non_caloric_polynomial_is_detected() {
        let u = CaloricPolynomial::monomial(&[2, 0]);
        assert!(!u.is_caloric());
        assert_eq!(u.heat_defect().coefficient(0, &[0, 0]), q(-2, 1));
    }

    #[test]
    fn small_dimension_counts() {
        assert_eq!(dim_pd(2, 2), 6);
        assert_eq!(dim_pd(1, 1), 2);
        assert_eq!(dim_pd(3, 0), 1);
        assert_eq!(binomial_count(4, 8), 495);
    }

    #[test]
    fn evaluation_satisfies_heat_equation_numerically() {
        let u = caloric_extension(&[3, 2]);
        let (x, t, h) = ([0.7, -0.4], 0.3, 1e-4);
        let dt = (u.eval(&x, t + h).unwrap() - u.eval(&x, t - h).unwrap()) / (2.0 * h);
        let lap = u.laplacian().eval(&x, t).unwrap();
        assert!((dt - lap).abs() < 1e-6 * lap.abs().max(1.0));
        assert!(u.eval(&[1.0], 0.0).is_err());
    }

    #[test]
    fn planar_circle_in_r4_has_two_relations() {
        let c = CatalogSpec::Circle { radius: 1.0, segments: 64 }.generate().unwrap();
        let v: Vec<f64> = c.vertices().chunks(2).flat_map(|p| [p[0], p[1], 0.5, -2.0]).collect();
        let lifted = SimplicialMesh::new(1, 4, v, c.cells().to_vec(), None).unwrap();
        let r = coordinate_span_rank(&[lifted]).unwrap();
        assert_eq!(r.affine_rank, 2);
        assert_eq!(r.relations.len(), 2);
        for rel in &r.relations {
            assert!(rel.normal[0].abs() < 1e-12 && rel.normal[1].abs() < 1e-12);
        }
    }

    #[test]
    fn clifford_torus_spans_r4() {
        let t = CatalogSpec::CliffordTorus { around_a: 24, around_b: 24 }.generate().unwrap();
        let r = coordinate_span_rank(&[t]).unwrap();
        assert_eq!(r.affine_rank, 4);
        assert!(r.relations.is_empty());
    }

    #[test]
    fn empty_input_is_rejected() {
        assert_eq!(coordinate_span_rank(&[]), Err(CaloricError::EmptyInput));
    }
}
