use flowlab::geometry::{build_operators, CatalogSpec, SimplicialMesh};
use flowlab::variation::{
    check_first_variation_fd, f_stability, jacobi_gaussian_operator, jacobi_volume_operator,
    scaling_and_translation_fields, NormalSection,
};
use proptest::prelude::*;

fn l2(op: &flowlab::variation::JacobiOperator, a: &[f64]) -> f64 {
    op.inner(a, a).sqrt()
}

/// Relative size of `Lφ_H - φ_H` on the shrinking sphere of radius 2.
fn scaling_mode_defect(level: usize) -> f64 {
    let mesh = CatalogSpec::sphere(2.0, level).generate().unwrap();
    let ops = build_operators(&mesh).unwrap();
    let op = jacobi_gaussian_operator(&mesh, &ops).unwrap();
    let (phi_h, _) = scaling_and_translation_fields(&ops).unwrap();
    let lphi = op.apply(&phi_h);
    let diff: Vec<f64> = lphi.iter().zip(&phi_h).map(|(a, b)| a - b).collect();
    l2(&op, &diff) / l2(&op, &phi_h)
}

#[test]
fn mean_curvature_is_the_scaling_eigenmode() {
    let coarse = scaling_mode_defect(3);
    let fine = scaling_mode_defect(4);
    assert!(fine < 0.02 && fine < coarse, "{coarse} {fine}");
}

#[test]
fn eigensections_are_mass_orthonormal() {
    let mesh = CatalogSpec::sphere(2.0, 3).generate().unwrap();
    let ops = build_operators(&mesh).unwrap();
    let op = jacobi_gaussian_operator(&mesh, &ops).unwrap();
    let pairs = op.eigenpairs(9).unwrap();
    for w in pairs.values.windows(2) {
        assert!(w[0] >= w[1]);
    }
    for (i, a) in pairs.vectors.iter().enumerate() {
        for (j, b) in pairs.vectors.iter().enumerate() {
            let expected = if i == j { 1.0 } else { 0.0 };
            assert!((op.inner(a, b) - expected).abs() < 1e-8, "{i} {j}");
        }
    }
    let report = f_stability(&mesh, &ops, 9).unwrap();
    for (mu, neg) in report.eigenvalues.iter().zip(&report.negated_eigenvalues) {
        assert_eq!(*mu, -neg);
    }
}

#[test]
fn flat_disk_matches_dirichlet_bessel_spectrum() {
    let mesh = CatalogSpec::flat_disk(1.0, 24).generate().unwrap();
    let ops = build_operators(&mesh).unwrap();
    let op = jacobi_volume_operator(&mesh, &ops).unwrap();
    let values = op.eigenpairs(4).unwrap().values;
    // squares of the first zeros of J0, J1 (twice), J2
    let expected = [5.783186, 14.681971, 14.681971, 26.374616];
    for (mu, lam) in values.iter().zip(expected) {
        assert!((-mu - lam).abs() < 0.02 * lam, "{values:?}");
    }
}

fn check_symmetric(mesh: &SimplicialMesh) -> Result<(), TestCaseError> {
    let ops = build_operators(mesh).unwrap();
    for op in [jacobi_volume_operator(mesh, &ops).unwrap(), jacobi_gaussian_operator(mesh, &ops).unwrap()] {
        let scale = op.matrix.diagonal().iter().fold(0.0f64, |m, d| m.max(d.abs()));
        prop_assert!(op.matrix.asymmetry() <= 1e-12 * scale);
        prop_assert!(op.mass.iter().all(|&m| m > 0.0));
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn jacobi_matrices_are_symmetric(radius in 0.5f64..3.0, shape in 0usize..3) {
        let mesh = match shape {
            0 => CatalogSpec::sphere(radius, 2),
            1 => CatalogSpec::Catenoid { neck: radius, half_height: 0.4 * radius, around: 24, along: 8 },
            _ => CatalogSpec::Ellipse { a: radius, b: 0.6 * radius, segments: 40 },
        }
        .generate()
        .unwrap();
        check_symmetric(&mesh)?;
    }

    #[test]
    fn first_variation_matches_central_differences(
        a in 0.5f64..2.0,
        ratio in 0.4f64..1.0,
        coef in prop::array::uniform4(-1.0f64..1.0),
    ) {
        let mesh = CatalogSpec::Ellipse { a, b: ratio * a, segments: 64 }.generate().unwrap();
        let ops = build_operators(&mesh).unwrap();
        let phi: Vec<f64> = mesh
            .vertices()
            .chunks(2)
            .map(|p| coef[0] + coef[1] * p[0] + coef[2] * p[1] + coef[3] * p[0] * p[1])
            .collect();
        prop_assume!(phi.iter().any(|x| x.abs() > 1e-3));
        let v = NormalSection::from_scalar(&ops, &phi).unwrap();
        let chk = check_first_variation_fd(&mesh, &v, 1e-4 * a).unwrap();
        prop_assert!(chk.discrepancy <= 1e-4 * chk.fd.abs().max(chk.analytic.abs()).max(1e-8));
    }
}
