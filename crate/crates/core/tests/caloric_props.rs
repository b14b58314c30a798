use std::str::FromStr;

use flowlab::caloric::{caloric_basis, caloric_extension, coordinate_span_rank, dim_pd, CaloricPolynomial};
use flowlab::geometry::{CatalogSpec, SimplicialMesh};
use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sum of |term| at (x, t): the size against which roundoff is measured.
fn magnitude(u: &CaloricPolynomial, x: &[f64], t: f64) -> f64 {
    u.terms()
        .iter()
        .map(|term| {
            let c = BigRational::from_str(&term.coefficient).unwrap().to_f64().unwrap().abs();
            let xs: f64 = term.x_powers.iter().zip(x).map(|(&a, xi)| xi.abs().powi(a as i32)).product();
            c * t.abs().powi(term.t_power as i32) * xs
        })
        .sum()
}

#[test]
fn heat_equation_holds_numerically_at_random_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let n = rng.random_range(1..=4);
        let alpha: Vec<u32> = (0..n).map(|_| rng.random_range(0..=5)).collect();
        let u = caloric_extension(&alpha);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let t = rng.random_range(-2.0..2.0);
        let ut = u.time_derivative();
        let lap = u.laplacian();
        let defect = ut.eval(&x, t).unwrap() - lap.eval(&x, t).unwrap();
        let scale = magnitude(&ut, &x, t) + magnitude(&lap, &x, t);
        assert!(defect.abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE), "{alpha:?} {defect:e} {scale:e}");
    }
}

#[test]
fn dimension_matches_pascal_triangle() {
    for n in 1..=4usize {
        for d in 0..=8u32 {
            // C(n+d, n) by the multiplicative formula
            let expected = (1..=n as u64).fold(1u64, |acc, i| acc * (d as u64 + i) / i);
            assert_eq!(dim_pd(n, d) as u64, expected, "n={n} d={d}");
        }
    }
}

#[test]
fn basis_restricts_to_monomials_at_time_zero() {
    for u in caloric_basis(3, 4) {
        assert!(u.is_caloric());
        let init = u.initial_values();
        assert_eq!(init.terms().len(), 1, "{u}");
        assert_eq!(init.degree(), u.degree());
    }
}

fn embed(mesh: &SimplicialMesh, q: &DMatrix<f64>, scale: f64, shift: &[f64]) -> SimplicialMesh {
    let k = mesh.ambient_dim();
    let big_n = q.nrows();
    let v: Vec<f64> = mesh
        .vertices()
        .chunks(k)
        .flat_map(|p| {
            (0..big_n)
                .map(|i| shift[i] + scale * (0..k).map(|j| q[(i, j)] * p[j]).sum::<f64>())
                .collect::<Vec<_>>()
        })
        .collect();
    SimplicialMesh::new(mesh.dim(), big_n, v, mesh.cells().to_vec(), None).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn span_rank_is_invariant_under_similarities(
        seed in any::<u64>(),
        scale in 0.05f64..20.0,
        extra in 0usize..3,
        shape in 0usize..3,
    ) {
        let mesh = match shape {
            0 => CatalogSpec::circle(1.0, 24),
            1 => CatalogSpec::sphere(1.0, 1),
            _ => CatalogSpec::clifford_torus(8, 8),
        }
        .generate()
        .unwrap();
        let expected = mesh.ambient_dim();
        let big_n = expected + extra;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = DMatrix::from_fn(big_n, big_n, |_, _| rng.random_range(-1.0..1.0)).qr().q();
        let shift: Vec<f64> = (0..big_n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let moved = embed(&mesh, &q, scale, &shift);
        let r = coordinate_span_rank(&[moved]).unwrap();
        prop_assert_eq!(r.affine_rank, expected);
        prop_assert_eq!(r.ambient_dim, big_n);
        prop_assert_eq!(r.relations.len(), extra);
    }

    #[test]
    fn extension_is_caloric_with_matching_degree(alpha in prop::collection::vec(0u32..7, 1..4)) {
        let u = caloric_extension(&alpha);
        prop_assert!(u.is_caloric());
        prop_assert_eq!(u.degree(), alpha.iter().sum::<u32>());
        prop_assert_eq!(u.initial_values(), CaloricPolynomial::monomial(&alpha));
    }
}
