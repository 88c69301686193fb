use std::collections::BTreeSet;

use heatlab_core::eigenfunction::{construct_positive_eigenfunction, verify_zero_propagation};
use heatlab_core::graph::{bfs_distances, decompose_balls, generate_family, Family, WeightedGraph};
use heatlab_core::heat::{
    solve_heat_spectral, step_heat_implicit, synthesize_ancient, HeatState, ImplicitHeatStepper,
    MeasureSupport, SpectralMeasure,
};
use heatlab_core::laplacian::{apply_laplacian, assemble_dirichlet, VertexFunction};
use heatlab_core::liouville::{classify_growth, default_time_grid, render_verdict};
use proptest::prelude::*;
use proptest::sample::Index;

/// Connected graph: a random spanning tree plus a few chords.
fn weighted_graph(max_n: usize) -> impl Strategy<Value = WeightedGraph> {
    (2..=max_n).prop_flat_map(|n| {
        (
            prop::collection::vec(0.25f64..4.0, n),
            prop::collection::vec((any::<Index>(), 0.25f64..4.0), n - 1),
            prop::collection::vec((0..n, 0..n, 0.25f64..4.0), 0..n),
        )
            .prop_map(move |(measure, tree, chords)| {
                let mut seen = BTreeSet::new();
                let mut edges = Vec::new();
                for (i, (parent, w)) in tree.into_iter().enumerate() {
                    let child = i + 1;
                    let p = parent.index(child);
                    seen.insert((p, child));
                    edges.push((p, child, w));
                }
                for (a, b, w) in chords {
                    let key = (a.min(b), a.max(b));
                    if a != b && seen.insert(key) {
                        edges.push((key.0, key.1, w));
                    }
                }
                WeightedGraph::new(measure, edges).unwrap()
            })
    })
}

fn graph_and_field(max_n: usize) -> impl Strategy<Value = (WeightedGraph, Vec<f64>, Vec<f64>)> {
    weighted_graph(max_n).prop_flat_map(|g| {
        let n = g.vertex_count();
        (
            Just(g),
            prop::collection::vec(-10.0f64..10.0, n),
            prop::collection::vec(-10.0f64..10.0, n),
        )
    })
}

fn inner(g: &WeightedGraph, f: &[f64], h: &[f64]) -> f64 {
    (0..g.vertex_count()).map(|x| g.measure(x) * f[x] * h[x]).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn laplacian_is_self_adjoint((g, f, h) in graph_and_field(14)) {
        let lf = apply_laplacian(&g, &f.clone().into()).unwrap();
        let lh = apply_laplacian(&g, &h.clone().into()).unwrap();
        let lhs = inner(&g, lf.values(), &h);
        let rhs = inner(&g, &f, lh.values());
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
    }

    #[test]
    fn laplacian_annihilates_mass((g, f, _) in graph_and_field(14)) {
        let lf = apply_laplacian(&g, &f.into()).unwrap();
        let scale: f64 = lf.values().iter().zip(g.measures()).map(|(v, m)| (v * m).abs()).sum();
        prop_assert!(lf.mass(&g).abs() <= 1e-12 * (1.0 + scale));
    }

    #[test]
    fn energy_is_nonpositive((g, f, _) in graph_and_field(14)) {
        let lf = apply_laplacian(&g, &f.clone().into()).unwrap();
        let energy: f64 = g.edges().iter().map(|e| e.weight * (f[e.a] - f[e.b]).powi(2)).sum();
        let q = inner(&g, lf.values(), &f);
        prop_assert!(q <= 1e-9 * (1.0 + energy));
        prop_assert!((q + energy).abs() <= 1e-9 * (1.0 + energy));
    }

    #[test]
    fn ball_layers_are_one_apart(g in weighted_graph(20), r in any::<Index>()) {
        let root = r.index(g.vertex_count());
        let balls = decompose_balls(&g, root).unwrap();
        for e in g.edges() {
            prop_assert!(balls.distance[e.a].abs_diff(balls.distance[e.b]) <= 1);
        }
        // ρ is a metric
        let d0 = bfs_distances(&g, root);
        for x in 0..g.vertex_count() {
            let dx = bfs_distances(&g, x);
            prop_assert_eq!(dx[root], d0[x]);
            for y in 0..g.vertex_count() {
                prop_assert!(d0[y].unwrap() <= d0[x].unwrap() + dx[y].unwrap());
            }
        }
    }

    #[test]
    fn dirichlet_operator_is_m_symmetric_and_dissipative((g, f, _) in graph_and_field(14), r in 1usize..4) {
        let balls = decompose_balls(&g, 0).unwrap();
        prop_assume!(balls.max_radius >= r);
        let op = assemble_dirichlet(&g, &balls, r).unwrap();
        for i in 0..op.dim() {
            for j in 0..op.dim() {
                let (mi, mj) = (op.mass()[i], op.mass()[j]);
                prop_assert!((mi * op.entry(i, j) - mj * op.entry(j, i)).abs() <= 1e-12);
            }
        }
        let v: Vec<f64> = op.interior().iter().map(|&x| f[x]).collect();
        prop_assert!(op.quadratic_form(&v) <= 1e-12);
    }

    #[test]
    fn implicit_step_keeps_sign_and_mass(
        (g, f, _) in graph_and_field(16),
        tau in prop::sample::select(vec![1e-3, 0.1, 1.0, 10.0, 1e3]),
    ) {
        let u0: Vec<f64> = f.iter().map(|v| v.abs()).collect();
        let state = HeatState::new(0.0, u0.into());
        let next = step_heat_implicit(&g, &state, tau).unwrap();
        prop_assert!(next.values.values().iter().all(|&v| v >= 0.0));
        let (m0, m1) = (state.values.mass(&g), next.values.mass(&g));
        prop_assert!((m1 - m0).abs() <= 1e-10 * m0.max(1e-300));
    }

    #[test]
    fn implicit_tracks_spectral((g, f, _) in graph_and_field(12), k in 4usize..40) {
        let tau = 1.0 / k as f64;
        let u0 = VertexFunction::new(f);
        let norm = u0.max_abs();
        let stepper = ImplicitHeatStepper::new(&g, tau).unwrap();
        let mut state = HeatState::new(0.0, u0.clone());
        for step in 1..=k {
            state = stepper.step(&state).unwrap();
            let exact = solve_heat_spectral(&g, &u0, step as f64 * tau).unwrap();
            let err = state
                .values
                .values()
                .iter()
                .zip(exact.values.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            prop_assert!(err <= 10.0 * tau * (1.0 + norm), "err {} at step {}", err, step);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn spatial_rate_is_monotone_in_lambda(
        mut lambdas in prop::collection::vec(0.05f64..2.0, 2..5),
        tree in any::<bool>(),
    ) {
        lambdas.sort_by(f64::total_cmp);
        let (g, root) = if tree {
            (generate_family(Family::TreeRegular, 9, Some(3)).unwrap(), 0)
        } else {
            (generate_family(Family::LatticeZ, 40, None).unwrap(), 40)
        };
        let balls = decompose_balls(&g, root).unwrap();
        let mut last = f64::NEG_INFINITY;
        for &lambda in &lambdas {
            let w = construct_positive_eigenfunction(&g, &balls, lambda).unwrap();
            let sol = synthesize_ancient(&g, SpectralMeasure::single(w, 0.0), 0.0).unwrap();
            let c = classify_growth(&sol, &balls, -1.0, &default_time_grid(), 0.02).unwrap();
            prop_assert!(c.spatial_rate >= last - 1e-12);
            last = c.spatial_rate;
        }
    }

    // |λ| near rate_tol would look subexponential without being stationary,
    // so nonzero atoms stay clear of the 0.02 band
    #[test]
    fn stationary_iff_zero_atom(
        lambda in prop_oneof![Just(0.0), 0.1f64..2.0, -0.15f64..-0.05],
    ) {
        let g = generate_family(Family::TreeRegular, 8, Some(3)).unwrap();
        let balls = decompose_balls(&g, 0).unwrap();
        let w = construct_positive_eigenfunction(&g, &balls, lambda).unwrap();
        prop_assert!(w.residual <= 1e-8);
        prop_assert!(verify_zero_propagation(&g, &w).unwrap());
        let sol = synthesize_ancient(&g, SpectralMeasure::single(w, 0.2), 0.0).unwrap();
        let c = classify_growth(&sol, &balls, -1.0, &default_time_grid(), 0.02).unwrap();
        let v = render_verdict(&sol, &c, 1e-8);
        prop_assert_eq!(v.stationary, v.measure_support == MeasureSupport::OnlyZero);
        prop_assert!(v.consistent_with_theorem);
    }
}
