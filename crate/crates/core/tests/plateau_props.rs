use flowlab::geometry::{build_operators, convex_hull_contains, CatalogSpec, SimplicialMesh};
use flowlab::plateau::{
    catenoid_branch_scan, catenoid_necks, helicoid_validate, solve_plateau, Branch, HelicoidControls,
    PlateauControls, PlateauError, Polygon,
};
use flowlab::variation::{first_variation, NormalSection, Verdict};
use proptest::prelude::*;

/// Number of positive eigenvalues of the axisymmetric Jacobi problem on the
/// catenoid `r = a cosh(z/a)`, `|z| ≤ h`, Dirichlet ends. Mode `k` obeys
/// `f'' - k²f/a² + 2f/(a² cosh²(z/a)) = μ cosh²(z/a) f`; the weight is
/// positive, so the count is the positive inertia of the difference
/// matrix, read off a tridiagonal LDLᵀ.
fn sturm_liouville_index(a: f64, h: f64) -> usize {
    let n = 4000;
    let dz = 2.0 * h / n as f64;
    let mut index = 0;
    for k in 0..4 {
        let multiplicity = if k == 0 { 1 } else { 2 };
        let off = 1.0 / (dz * dz);
        let mut d_prev = f64::INFINITY;
        let mut positive = 0;
        for i in 1..n {
            let z = -h + i as f64 * dz;
            let c = (z / a).cosh();
            let diag = -2.0 / (dz * dz) - (k * k) as f64 / (a * a) + 2.0 / (a * a * c * c);
            let d = if d_prev.is_infinite() { diag } else { diag - off * off / d_prev };
            if d > 0.0 {
                positive += 1;
            }
            d_prev = d;
        }
        index += multiplicity * positive;
    }
    index
}

#[test]
fn oracle_reproduces_fat_and_thin_indices() {
    for h in [0.1, 0.3, 0.5, 0.65] {
        let (fat, thin) = catenoid_necks(h).unwrap().unwrap();
        assert_eq!(sturm_liouville_index(fat, h), 0, "fat h={h}");
        assert_eq!(sturm_liouville_index(thin, h), 1, "thin h={h}");
    }
}

#[test]
fn branch_scan_agrees_with_oracle() {
    let hs: Vec<f64> = (0..12).map(|i| 0.1 + 0.05 * i as f64).collect();
    for row in catenoid_branch_scan(&hs, 48).unwrap() {
        let expected = sturm_liouville_index(row.neck, row.h);
        assert_ne!(row.branch, Branch::None);
        assert_eq!(row.index, Some(expected), "{row:?}");
    }
    assert!(catenoid_branch_scan(&[0.7], 48).unwrap().iter().all(|r| r.branch == Branch::None));
}

#[test]
fn helicoid_residual_halves_under_refinement() {
    let coarse = HelicoidControls::default();
    let fine = HelicoidControls {
        along: 2 * coarse.along,
        across: 2 * coarse.across,
        ..coarse
    };
    let (r0, r1) = (helicoid_validate(&coarse).unwrap(), helicoid_validate(&fine).unwrap());
    assert!(r0 < 1e-2 && r1 <= 0.5 * r0, "{r0} {r1}");
}

fn tube(h: f64) -> Result<flowlab::plateau::PlateauSolution, PlateauError> {
    let rings = [
        Polygon::circle(3, 1.0, -h, 48).unwrap(),
        Polygon::circle(3, 1.0, h, 48).unwrap(),
    ];
    let initial = CatalogSpec::Cylinder {
        radius: 1.0,
        half_length: h,
        around: 48,
        along: 16,
    }
    .generate()
    .unwrap();
    solve_plateau(&rings, Some(&initial), &PlateauControls::default())
}

#[test]
fn short_tube_relaxes_to_a_stable_catenoid() {
    let sol = tube(0.4).unwrap();
    assert!(sol.residual < 1e-6);
    assert_eq!(sol.report.unwrap().verdict, Verdict::Stable);
    let (fat, _) = catenoid_necks(0.4).unwrap().unwrap();
    let neck = sol
        .mesh
        .vertices()
        .chunks(3)
        .map(|p| p[0].hypot(p[1]))
        .fold(f64::INFINITY, f64::min);
    assert!((neck - fat).abs() < 1e-2, "{neck} vs {fat}");
}

#[test]
fn long_tube_pinches_off() {
    assert!(matches!(tube(0.8), Err(PlateauError::QualityCollapse { .. })));
}

fn polygon_mesh(p: &Polygon) -> SimplicialMesh {
    let k = p.len();
    let v: Vec<f64> = (0..k).flat_map(|i| p.vertex(i).to_vec()).collect();
    let cells: Vec<usize> = (0..k).flat_map(|i| [i, (i + 1) % k]).collect();
    SimplicialMesh::new(1, 3, v, cells, None).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn saddle_films_descend_stay_in_hull_and_are_critical(eps in 0.0f64..0.3, wave in 2usize..4, seed in any::<u64>()) {
        let k = 40;
        let points: Vec<f64> = (0..k)
            .flat_map(|i| {
                let th = std::f64::consts::TAU * i as f64 / k as f64;
                [th.cos(), th.sin(), eps * (wave as f64 * th).cos()]
            })
            .collect();
        let boundary = Polygon::new(3, points).unwrap();
        let controls = PlateauControls { seed, ..Default::default() };
        let sol = solve_plateau(std::slice::from_ref(&boundary), None, &controls).unwrap();
        for w in sol.areas.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
        prop_assert!(convex_hull_contains(&polygon_mesh(&boundary), &sol.mesh, 1e-9).unwrap());

        let ops = build_operators(&sol.mesh).unwrap();
        let fixed = sol.mesh.fixed();
        let phi: Vec<f64> = sol
            .mesh
            .vertices()
            .chunks(3)
            .enumerate()
            .map(|(i, p)| if fixed[i] { 0.0 } else { (1.0 - p[0] * p[0] - p[1] * p[1]) * (1.0 + p[0] - 0.5 * p[1]) })
            .collect();
        let v = NormalSection::from_scalar(&ops, &phi).unwrap();
        let area = sol.areas.last().unwrap();
        prop_assert!(first_variation(&sol.mesh, &v).unwrap().abs() < 1e-6 * area);
    }
}
