use std::f64::consts::PI;

use flowlab::geometry::io::{read_obj, read_off, write_obj, write_off};
use flowlab::geometry::{build_operators, convex_hull_contains, CatalogSpec, SimplicialMesh};
use proptest::prelude::*;

fn sphere_curvature_error(level: usize, radius: f64) -> (f64, f64) {
    let mesh = CatalogSpec::sphere(radius, level).generate().unwrap();
    let ops = build_operators(&mesh).unwrap();
    let worst = (0..mesh.num_vertices())
        .map(|v| {
            let h = ops.h(v);
            let x = mesh.vertex(v);
            (0..3).map(|d| (h[d] - 2.0 * x[d] / (radius * radius)).powi(2)).sum::<f64>().sqrt()
        })
        .fold(0.0f64, f64::max);
    (worst, mesh.mean_edge())
}

#[test]
fn sphere_curvature_converges_at_first_order() {
    let errors: Vec<(f64, f64)> = (2..=5).map(|l| sphere_curvature_error(l, 1.5)).collect();
    for w in errors.windows(2) {
        let order = (w[0].0 / w[1].0).ln() / (w[0].1 / w[1].1).ln();
        assert!(order >= 0.9, "{errors:?}");
    }
}

#[test]
fn sphere_area_error_halves_per_level() {
    let exact = 4.0 * PI;
    let errors: Vec<f64> = (1..=5)
        .map(|l| (CatalogSpec::sphere(1.0, l).generate().unwrap().total_volume() - exact).abs())
        .collect();
    for w in errors.windows(2) {
        assert!(w[1] <= 0.5 * w[0], "{errors:?}");
    }
}

#[test]
fn stiffness_annihilates_affine_functions_on_flat_patches() {
    let mesh = CatalogSpec::plane_patch(2.0, 0.2).generate().unwrap();
    let ops = build_operators(&mesh).unwrap();
    let k = ops.stiffness();
    let f: Vec<f64> = mesh.vertices().chunks(3).map(|p| 0.3 + 1.7 * p[0] - 2.1 * p[1]).collect();
    let kf = k.mul_vec(&f);
    for v in 0..mesh.num_vertices() {
        if ops.interior()[v] {
            assert!(kf[v].abs() < 1e-10, "{v}: {}", kf[v]);
        }
    }
}

#[test]
fn off_and_obj_round_trip() {
    let mesh = CatalogSpec::clifford_torus(6, 5).generate().unwrap();
    for back in [read_off(&write_off(&mesh)).unwrap(), read_obj(&write_obj(&mesh)).unwrap()] {
        assert_eq!(back.cells(), mesh.cells());
        assert_eq!(back.vertices(), mesh.vertices());
    }
}

fn stiffness_is_symmetric_with_zero_rows(mesh: &SimplicialMesh) -> Result<(), TestCaseError> {
    let ops = build_operators(mesh).unwrap();
    let k = ops.stiffness().to_dense();
    let scale = k.amax();
    for i in 0..k.nrows() {
        prop_assert!(k.row(i).sum().abs() <= 1e-12 * scale);
        for j in 0..i {
            prop_assert!((k[(i, j)] - k[(j, i)]).abs() <= 1e-12 * scale);
        }
    }
    prop_assert!((ops.mass().iter().sum::<f64>() - mesh.total_volume()).abs() <= 1e-12 * mesh.total_volume());
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn catalog_operators_are_symmetric(radius in 0.2f64..5.0, shape in 0usize..4) {
        let mesh = match shape {
            0 => CatalogSpec::circle(radius, 20),
            1 => CatalogSpec::sphere(radius, 2),
            2 => CatalogSpec::Catenoid { neck: radius, half_height: 0.5 * radius, around: 16, along: 6 },
            _ => CatalogSpec::Ellipse { a: radius, b: 0.5 * radius, segments: 30 },
        }
        .generate()
        .unwrap();
        stiffness_is_symmetric_with_zero_rows(&mesh)?;
    }

    #[test]
    fn similarity_scales_measure_and_curvature(
        c in 0.2f64..5.0,
        x0 in prop::array::uniform3(-3.0f64..3.0),
    ) {
        let mesh = CatalogSpec::sphere(1.0, 2).generate().unwrap();
        let moved = mesh.scaled_translated(c, &x0).unwrap();
        prop_assert!((moved.total_volume() - c * c * mesh.total_volume()).abs() <= 1e-12 * moved.total_volume());
        let h0 = build_operators(&mesh).unwrap();
        let h1 = build_operators(&moved).unwrap();
        for v in 0..mesh.num_vertices() {
            for d in 0..3 {
                prop_assert!((h1.h(v)[d] * c - h0.h(v)[d]).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn hull_contains_shrunk_copies_but_not_grown_ones(c in 0.1f64..0.95, grow in 1.05f64..3.0) {
        let mesh = CatalogSpec::sphere(1.0, 1).generate().unwrap();
        let centre = mesh.centroid();
        let about = |s: f64| {
            let shift: Vec<f64> = centre.iter().map(|x| (1.0 - s) * x).collect();
            mesh.scaled_translated(s, &shift).unwrap()
        };
        prop_assert!(convex_hull_contains(&mesh, &about(c), 1e-9).unwrap());
        prop_assert!(!convex_hull_contains(&mesh, &about(grow), 1e-9).unwrap());
    }
}
