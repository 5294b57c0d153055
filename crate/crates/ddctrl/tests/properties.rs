//! Property tests for the crate-level invariants.

use ddctrl::linalg::{
    constrained_right_inverse, kernel_basis, spectral_radius, Mat, SymmetricMatrix,
};
use ddctrl::system::{explains, explanation_set, sample_explanations, simulate, LtiSystem};
use nalgebra::DVector;
use proptest::prelude::*;

fn small_matrix(rows: usize, cols: usize) -> impl Strategy<Value = Mat> {
    proptest::collection::vec(-3.0f64..3.0, rows * cols)
        .prop_map(move |v| Mat::from_row_slice(rows, cols, &v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn spectral_radius_scales_homogeneously(
        n in 1usize..5,
        c in -4.0f64..4.0,
        seed in any::<u64>(),
    ) {
        let mut rng = ddctrl::rng::SplitMix64::new(seed);
        let m = Mat::from_fn(n, n, |_, _| rng.uniform(-2.0, 2.0));
        let r0 = spectral_radius(&m).unwrap();
        let r1 = spectral_radius(&(&m * c)).unwrap();
        prop_assert!((r1 - c.abs() * r0).abs() <= 1e-9 * (1.0 + r0.abs()));
    }

    #[test]
    fn kernel_basis_is_orthonormal_annihilator(
        rows in 1usize..5,
        cols in 1usize..8,
        seed in any::<u64>(),
    ) {
        let mut rng = ddctrl::rng::SplitMix64::new(seed);
        let m = Mat::from_fn(rows, cols, |_, _| rng.uniform(-2.0, 2.0));
        let b = kernel_basis(&m).unwrap();
        if b.ncols() > 0 {
            prop_assert!((&m * &b).norm() <= 1e-10 * m.norm().max(1e-30));
            let gram = b.transpose() * &b;
            prop_assert!((gram - Mat::identity(b.ncols(), b.ncols())).norm() <= 1e-12);
        }
    }

    #[test]
    fn generating_system_always_explains_its_simulation(
        n in 1usize..4,
        m in 1usize..3,
        t in 1usize..8,
        seed in any::<u64>(),
    ) {
        let mut rng = ddctrl::rng::SplitMix64::new(seed);
        let sys = LtiSystem::new(
            Mat::from_fn(n, n, |_, _| rng.uniform(-1.0, 1.0)),
            Mat::from_fn(n, m, |_, _| rng.uniform(-1.0, 1.0)),
        )
        .unwrap();
        let inputs = Mat::from_fn(m, t, |_, _| rng.next_f64());
        let x0 = DVector::from_fn(n, |_, _| rng.next_f64());
        let rec = simulate(&sys, &x0, &inputs, None).unwrap();
        prop_assert!(explains(&sys, &rec, 1e-9).unwrap());

        // every sampled explanation also explains the record
        let es = explanation_set(&rec).unwrap();
        for hyp in sample_explanations(&es, 5, seed ^ 0xabcd) {
            prop_assert!(explains(&hyp, &rec, 1e-8).unwrap());
        }
    }

    #[test]
    fn right_inverse_identities_when_present(
        t in 2usize..9,
        p in 1usize..3,
        q in 1usize..3,
        seed in any::<u64>(),
    ) {
        let mut rng = ddctrl::rng::SplitMix64::new(seed);
        let m = Mat::from_fn(p, t, |_, _| rng.uniform(-2.0, 2.0));
        let z = Mat::from_fn(q, t, |_, _| rng.uniform(-2.0, 2.0));
        if let Some(g) = constrained_right_inverse(&m, &z).unwrap() {
            prop_assert!((&m * &g - Mat::identity(p, p)).norm() <= 1e-10);
            prop_assert!((&z * &g).norm() <= 1e-10);
        }
    }

    #[test]
    fn symmetrization_is_idempotent(mat in small_matrix(3, 3)) {
        let s1 = SymmetricMatrix::new(mat).unwrap();
        let s2 = SymmetricMatrix::new(s1.as_mat().clone()).unwrap();
        prop_assert_eq!(s1.as_mat(), s2.as_mat());
        prop_assert!((s1.as_mat() - s1.as_mat().transpose()).norm() == 0.0);
    }

    #[test]
    fn csv_round_trip_identity(
        rows in 1usize..5,
        cols in 1usize..5,
        seed in any::<u64>(),
    ) {
        let mut rng = ddctrl::rng::SplitMix64::new(seed);
        let m = Mat::from_fn(rows, cols, |_, _| {
            // mix of magnitudes, all finite
            let base = rng.uniform(-1.0, 1.0);
            let exp = rng.uniform(-12.0, 12.0);
            base * 10f64.powf(exp)
        });
        let dir = std::env::temp_dir().join(format!("ddctrl-prop-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(format!("m-{seed}.csv"));
        ddctrl::io::write_csv_matrix(&path, &m).unwrap();
        let back = ddctrl::io::read_csv_matrix(&path).unwrap();
        std::fs::remove_file(&path).ok();
        prop_assert_eq!(m, back);
    }
}
