//! Oracle-backed checks: every expected value here is computed by an
//! independent reference implementation before being asserted against the
//! library path.

use chronoscope_core::dataset::{generate_synthetic, ActivationSet, SyntheticSpec};
use chronoscope_core::linalg::{self, seeded_rng};
use chronoscope_core::manifold::knn_graph;
use chronoscope_core::testutil;
use chronoscope_core::{correlate, pca};
use ndarray::Array2;
use rand::Rng;

fn random_symmetric(n: usize, rng: &mut impl Rng) -> Array2<f64> {
    let mut s = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let v = rng.random::<f64>() * 4.0 - 2.0;
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    s
}

#[test]
fn eigenvalues_match_char_poly_bisection_5x5() {
    let mut rng = seeded_rng(2024);
    let s = random_symmetric(5, &mut rng);
    let expected = testutil::eigenvalues_by_bisection(&s, 40_000);
    let got = linalg::eig_sym(&s).unwrap();
    for (e, g) in expected.iter().zip(got.eigenvalues.iter()) {
        assert!((e - g).abs() <= 1e-8, "{e} vs {g}");
    }
    assert!(linalg::eig_residual_inf(&s, &got) <= 1e-8 * 10.0);
    assert!(linalg::orthonormality_defect(&got.eigenvectors) <= 1e-8);
}

#[test]
fn pearson_matches_double_double_reference() {
    let mut rng = seeded_rng(7171);
    for _ in 0..200 {
        let n = rng.random_range(3..120);
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 10.0 - 5.0).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&v| v * (rng.random::<f64>() - 0.5) + rng.random::<f64>() * 2.0)
            .collect();
        match correlate::pearson(&x, &y) {
            Ok(r) => {
                let reference = testutil::pearson_dd(&x, &y);
                assert!(
                    (r - reference).abs() <= 1e-12,
                    "pearson {r} vs reference {reference}"
                );
            }
            Err(_) => continue,
        }
    }
}

#[test]
fn knn_matches_independent_scan() {
    let mut rng = seeded_rng(555);
    let values = Array2::from_shape_fn((200, 16), |_| rng.random::<f64>() * 2.0 - 1.0);
    let set = ActivationSet {
        values: values.clone(),
        ids: (0..200).map(|i| format!("p{i}")).collect(),
        layer_tag: "t".into(),
        model_tag: "t".into(),
    };
    let graph = knn_graph(&set, 7).unwrap();
    let reference = testutil::knn_brute_force(&values, 7);
    assert_eq!(graph.neighbors, reference);
}

#[test]
fn pca_eigenvalues_match_covariance_char_poly() {
    // 6x3 fixture: the 3x3 covariance spectrum is found independently by
    // characteristic-polynomial bisection.
    let values = ndarray::array![
        [2.0, -1.0, 0.5],
        [1.5, 0.5, -0.25],
        [-0.75, 2.25, 1.0],
        [0.0, -1.5, 2.0],
        [3.0, 1.0, -1.0],
        [-2.0, 0.25, 0.75]
    ];
    let set = ActivationSet {
        values: values.clone(),
        ids: (0..6).map(|i| format!("p{i}")).collect(),
        layer_tag: "t".into(),
        model_tag: "t".into(),
    };
    let (xc, _) = linalg::center(&values);
    let cov = linalg::covariance(&xc);
    let expected = testutil::eigenvalues_by_bisection(&cov, 40_000);
    let model = pca::fit_pca(&set).unwrap();
    assert_eq!(model.eigenvalues.len(), expected.len());
    for (e, g) in expected.iter().zip(model.eigenvalues.iter()) {
        assert!((e - g).abs() <= 1e-8, "{e} vs {g}");
    }
}

#[test]
fn ground_truth_angles_track_years() {
    // Direct oracle on the generator output, independent of the analysis
    // pipeline: planted angles are affine in years, so the correlation is
    // essentially exact.
    let spec = SyntheticSpec {
        n: 2000,
        d: 512,
        planted_rank: 2,
        angular_rate: 0.97 * 2.0 * std::f64::consts::PI / 600.0,
        year_range: [1400, 2000],
        noise_sigma: 0.05,
        style_buckets: 10,
        seed: 42,
    };
    let (meta, _, truth) = generate_synthetic(&spec).unwrap();
    let years: Vec<f64> = meta.iter().map(|m| m.year.unwrap() as f64).collect();
    let pcc = correlate::pearson(&truth.angles, &years).unwrap();
    assert!(pcc >= 0.98, "ground-truth angle PCC {pcc}");
}

#[test]
fn projection_preserves_planted_plane_distances() {
    let spec = SyntheticSpec {
        n: 300,
        d: 40,
        planted_rank: 2,
        angular_rate: std::f64::consts::PI / 600.0,
        year_range: [1400, 2000],
        noise_sigma: 0.0,
        style_buckets: 4,
        seed: 77,
    };
    let (_, acts, truth) = generate_synthetic(&spec).unwrap();
    let model = pca::fit_pca(&acts).unwrap();
    let emb = pca::project(&model, &acts, 2).unwrap();
    // Pairwise distances in the embedding match distances between the
    // planted plane coordinates (projection into the recovered plane is a
    // rigid motion of the planted plane).
    let mut rng = seeded_rng(4);
    for _ in 0..500 {
        let i = rng.random_range(0..300);
        let j = rng.random_range(0..300);
        let de = {
            let dx = emb.coords[(i, 0)] - emb.coords[(j, 0)];
            let dy = emb.coords[(i, 1)] - emb.coords[(j, 1)];
            (dx * dx + dy * dy).sqrt()
        };
        let dp = {
            let dx = truth.plane_coords[(i, 0)] - truth.plane_coords[(j, 0)];
            let dy = truth.plane_coords[(i, 1)] - truth.plane_coords[(j, 1)];
            (dx * dx + dy * dy).sqrt()
        };
        assert!((de - dp).abs() <= 1e-8, "distance {de} vs planted {dp}");
    }
}

#[test]
fn planted_rank_two_spectrum() {
    let spec = SyntheticSpec {
        n: 200,
        d: 24,
        planted_rank: 2,
        angular_rate: std::f64::consts::PI / 600.0,
        year_range: [1400, 2000],
        noise_sigma: 0.0,
        style_buckets: 4,
        seed: 5,
    };
    let (_, acts, _) = generate_synthetic(&spec).unwrap();
    let (xc, _) = linalg::center(&acts.values);
    let cov = linalg::covariance(&xc);
    let eig = linalg::eig_sym_psd(&cov).unwrap();
    assert!(eig.eigenvalues[0] > 1e-3);
    assert!(eig.eigenvalues[1] > 1e-3);
    for &l in &eig.eigenvalues[2..] {
        assert!(l.abs() <= 1e-10, "eigenvalue {l} should vanish");
    }
}
