//! The SMO solver checked against an exhaustive active-set QP oracle.

#[path = "support/qp_oracle.rs"]
mod qp_oracle;

use proptest::prelude::*;
use proptest::test_runner::RngSeed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swarm_svr_core::dataio::{FeatureMatrix, TargetVector};
use swarm_svr_core::kernels::{gram_matrix, KernelSpec};
use swarm_svr_core::svr::{kkt_violation, train, SvrParams};

fn matrix(rows: &[Vec<f64>]) -> FeatureMatrix {
    let names = (0..rows[0].len()).map(|j| format!("x{j}")).collect();
    FeatureMatrix::from_rows(rows, names).unwrap()
}

fn random_instance(rng: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, Vec<f64>, SvrParams) {
    let n = rng.random_range(1..=8);
    let d = rng.random_range(1..=3);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let c = [0.1, 0.5, 1.0, 5.0, 20.0][rng.random_range(0..5)];
    let eps = [0.0, 0.05, 0.1, 0.5][rng.random_range(0..4)];
    let gamma = rng.random_range(0.2..2.0);
    let params = SvrParams::new(c, eps, KernelSpec::rbf(gamma).unwrap()).unwrap();
    (rows, y, params)
}

#[test]
fn smo_matches_exhaustive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..50 {
        let (rows, y, params) = random_instance(&mut rng);
        let x = matrix(&rows);
        let g = gram_matrix(&params.kernel, &x);
        let k: Vec<Vec<f64>> = (0..y.len()).map(|i| g.row(i).to_vec()).collect();
        let expected = qp_oracle::oracle(&k, &y, params.c, params.epsilon);
        let yv = TargetVector(y.clone());
        let model = train(&x, &yv, &params).unwrap();
        let got = model.training.dual_objective;
        assert!(
            (got - expected).abs() <= 1e-3,
            "case {case}: smo {got} vs oracle {expected}"
        );
        let v = kkt_violation(&model, &x, &yv, &params);
        assert!(v <= params.tol, "case {case}: kkt violation {v}");
    }
}

#[test]
fn two_point_linear_matches_grid() {
    // β = (t, −t) is the only feasible direction; scan t over [−C, C].
    let x = matrix(&[vec![0.0], vec![1.0]]);
    let y = [0.2, 1.4];
    let (c, eps) = (0.8, 0.1);
    let params = SvrParams::new(c, eps, KernelSpec::linear())
        .unwrap()
        .with_tol(1e-6)
        .unwrap();
    let k = [[0.0, 0.0], [0.0, 1.0]];
    let steps = 200_000;
    let mut best = f64::INFINITY;
    for s in 0..=steps {
        let t = -c + 2.0 * c * s as f64 / steps as f64;
        let b = [t, -t];
        let quad: f64 = (0..2)
            .map(|i| b[i] * (k[i][0] * b[0] + k[i][1] * b[1]))
            .sum();
        let v = 0.5 * quad - (y[0] * b[0] + y[1] * b[1]) + eps * (b[0].abs() + b[1].abs());
        best = best.min(v);
    }
    let m = train(&x, &TargetVector(y.to_vec()), &params).unwrap();
    assert!((m.training.dual_objective - best).abs() < 1e-6);
}

#[test]
fn support_count_can_grow_with_epsilon() {
    // Exact optima: two support vectors at ε = 0.05, three at ε = 0.2.
    let rows = [
        [-0.3217736532830984],
        [-0.8760492711804625],
        [-1.5922298484602986],
    ];
    let y = [-1.207740124693166, 1.5070448933431582, 2.1456121454787715];
    let c = 7.657940022238756;
    let x = matrix(&rows.map(|r| r.to_vec()));
    let k: Vec<Vec<f64>> = {
        let g = gram_matrix(&KernelSpec::rbf(1.0).unwrap(), &x);
        (0..3).map(|i| g.row(i).to_vec()).collect()
    };
    let count = |beta: &[f64]| beta.iter().filter(|b| b.abs() > 1e-6).count();
    let (_, narrow) = qp_oracle::oracle_solution(&k, &y, c, 0.05);
    let (_, wide) = qp_oracle::oracle_solution(&k, &y, c, 0.2);
    assert_eq!((count(&narrow), count(&wide)), (2, 3));
    for (eps, expected) in [(0.05, 2), (0.2, 3)] {
        let p = SvrParams::new(c, eps, KernelSpec::rbf(1.0).unwrap())
            .unwrap()
            .with_tol(1e-9)
            .unwrap();
        let m = train(&x, &TargetVector(y.to_vec()), &p).unwrap();
        assert_eq!(count(&m.beta), expected);
    }
}

fn instance() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (2usize..25, 1usize..4).prop_flat_map(|(n, d)| {
        (
            prop::collection::vec(prop::collection::vec(-3.0f64..3.0, d), n),
            prop::collection::vec(-3.0f64..3.0, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 64,
        rng_seed: RngSeed::Fixed(0x5eed),
        ..ProptestConfig::default()
    })]

    #[test]
    fn dual_feasibility((rows, y) in instance(), c in 0.05f64..20.0, eps in 0.0f64..0.5) {
        let params = SvrParams::new(c, eps, KernelSpec::rbf(0.7).unwrap()).unwrap();
        let x = matrix(&rows);
        let yv = TargetVector(y);
        let m = train(&x, &yv, &params).unwrap();
        prop_assert!(m.beta.iter().all(|b| b.abs() <= c));
        prop_assert!(m.beta.iter().sum::<f64>().abs() <= params.tol);
        prop_assert!(kkt_violation(&m, &x, &yv, &params) <= params.tol);
    }

    #[test]
    fn wider_tube_never_grows_coefficient_mass((rows, y) in instance(), c in 0.1f64..10.0) {
        // The optimal value is a minimum of functions affine in ε, so it is
        // concave in ε and its slope Σ|βᵢ| cannot increase.
        let x = matrix(&rows);
        let yv = TargetVector(y.clone());
        let mass = |eps: f64| {
            let p = SvrParams::new(c, eps, KernelSpec::rbf(1.0).unwrap()).unwrap().with_tol(1e-9).unwrap();
            train(&x, &yv, &p).unwrap().beta.iter().map(|b| b.abs()).sum::<f64>()
        };
        prop_assert!(mass(0.3) <= mass(0.05) + 1e-6);
        let spread = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - y.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert_eq!(mass(spread / 2.0 + 1e-9), 0.0);
    }

    #[test]
    fn row_order_does_not_matter((rows, y) in instance(), seed in any::<u64>()) {
        let params = SvrParams::new(2.0, 0.1, KernelSpec::rbf(0.5).unwrap()).unwrap().with_tol(1e-8).unwrap();
        let mut order: Vec<usize> = (0..y.len()).collect();
        use rand::seq::SliceRandom;
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let rows2: Vec<Vec<f64>> = order.iter().map(|&i| rows[i].clone()).collect();
        let y2: Vec<f64> = order.iter().map(|&i| y[i]).collect();
        let a = train(&matrix(&rows), &TargetVector(y), &params).unwrap();
        let b = train(&matrix(&rows2), &TargetVector(y2), &params).unwrap();
        for probe in &rows {
            let (pa, pb) = (a.predict(probe).unwrap(), b.predict(probe).unwrap());
            prop_assert!((pa - pb).abs() < 1e-5, "{} vs {}", pa, pb);
        }
    }
}
