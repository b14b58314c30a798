use flowlab::flow::{run_flow, slice_at, tangent_flow_rescale, FlowControls, FlowKind, StopReason};
use flowlab::geometry::{build_operators, convex_hull_contains, CatalogSpec};
use flowlab::gaussian::entropy;
use proptest::prelude::*;

fn mcf(snapshot_every: usize) -> FlowControls {
    FlowControls {
        snapshot_every,
        dt_max: 2e-3,
        ..Default::default()
    }
}

#[test]
fn volume_rate_matches_willmore_energy() {
    let mesh = CatalogSpec::Ellipse { a: 1.5, b: 1.0, segments: 256 }.generate().unwrap();
    let ops = build_operators(&mesh).unwrap();
    let dt = 1e-5;
    let controls = FlowControls {
        dt_max: dt,
        horizon: dt,
        ..Default::default()
    };
    let trace = run_flow(&mesh, &controls).unwrap();
    let rate = (trace.rows[1].volume - trace.rows[0].volume) / dt;
    let expected = -ops.willmore();
    assert!((rate - expected).abs() < 0.05 * expected.abs(), "{rate} vs {expected}");
}

/// Largest vertex gap between the slices at `t = 0` and `t = 0.15`, both
/// magnified by `(T - t)^(-1/2)` about the measured extinction time.
fn self_similarity_gap(level: usize) -> f64 {
    let mesh = CatalogSpec::sphere(1.0, level).generate().unwrap();
    let controls = FlowControls {
        snapshot_every: 1,
        ..Default::default()
    };
    let trace = run_flow(&mesh, &controls).unwrap();
    let t0 = trace.extinction_time.unwrap();
    assert!(slice_at(&trace, 0.1).is_ok());
    let a = tangent_flow_rescale(&trace, &[0.0; 3], t0, 1.0 / (t0 - 1e-9).sqrt()).unwrap();
    let b = tangent_flow_rescale(&trace, &[0.0; 3], t0, 1.0 / (t0 - 0.15f64).sqrt()).unwrap();
    a.vertices()
        .iter()
        .zip(b.vertices())
        .map(|(p, q)| (p - q).abs())
        .fold(0.0f64, f64::max)
}

#[test]
fn shrinking_sphere_is_self_similar_up_to_mesh_error() {
    let gaps: Vec<f64> = (2..=4).map(self_similarity_gap).collect();
    assert!(gaps[2] < 5e-3, "{gaps:?}");
    for w in gaps.windows(2) {
        assert!(w[1] < 0.6 * w[0], "{gaps:?}");
    }
}

#[test]
fn entropy_does_not_increase_along_rescaled_flow() {
    let mesh = CatalogSpec::Ellipse { a: 2.0, b: 1.2, segments: 96 }.generate().unwrap();
    let controls = FlowControls {
        kind: FlowKind::Rescaled,
        horizon: 0.6,
        dt_max: 1e-2,
        snapshot_every: 20,
        ..Default::default()
    };
    let trace = run_flow(&mesh, &controls).unwrap();
    let lambdas: Vec<f64> = trace
        .snapshots
        .iter()
        .map(|s| entropy(&s.mesh, 4, 0).unwrap().lambda)
        .collect();
    assert!(lambdas.len() >= 3);
    for w in lambdas.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-6), "{lambdas:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn closed_curves_shrink_inside_their_hull(a in 0.5f64..2.0, ratio in 0.4f64..1.0, segments in 32usize..80) {
        let mesh = CatalogSpec::Ellipse { a, b: ratio * a, segments }.generate().unwrap();
        let controls = mcf(25);
        let trace = run_flow(&mesh, &controls).unwrap();
        prop_assert_eq!(trace.stop_reason, StopReason::Extinct);
        for w in trace.rows.windows(2) {
            prop_assert!(w[1].volume < w[0].volume);
        }
        for s in &trace.snapshots {
            prop_assert!(convex_hull_contains(&mesh, &s.mesh, 1e-9 * a).unwrap());
        }
        let t = trace.extinction_time.unwrap();
        prop_assert!(t <= trace.extinction_bound + controls.dt_max);
    }

    #[test]
    fn sphere_extinction_time_scales_with_radius(r in 0.5f64..1.5) {
        let mesh = CatalogSpec::sphere(r, 3).generate().unwrap();
        let trace = run_flow(&mesh, &mcf(0)).unwrap();
        let t = trace.extinction_time.unwrap();
        prop_assert!((t - r * r / 4.0).abs() < 0.02 * r * r / 4.0);
    }

    #[test]
    fn rescaled_flow_never_raises_gaussian_area(a in 1.2f64..2.5, ratio in 0.5f64..1.0) {
        let mesh = CatalogSpec::Ellipse { a, b: ratio * a, segments: 64 }.generate().unwrap();
        let controls = FlowControls {
            kind: FlowKind::Rescaled,
            horizon: 1.0,
            dt_max: 1e-2,
            ..Default::default()
        };
        let trace = run_flow(&mesh, &controls).unwrap();
        for w in trace.rows.windows(2) {
            prop_assert!(w[1].f <= w[0].f * (1.0 + 1e-8));
        }
    }
}
