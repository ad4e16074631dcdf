//! Property-based invariants.

use chronoscope_core::dataset::{
    load_dataset, write_dataset, ActivationSet, PaintingMeta, StyleMergeMap,
};
use chronoscope_core::embedding::{Embedding, Provenance};
use chronoscope_core::error::Error;
use chronoscope_core::{correlate, pca};
use ndarray::{Array1, Array2};
use proptest::prelude::*;

/// Integer series engineered so every intermediate of the Pearson formula
/// is exactly representable: the affine identity then holds exactly.
fn exact_series() -> impl Strategy<Value = (Vec<f64>, i32, i32)> {
    (
        proptest::collection::vec(-50i32..=50, 4..40),
        proptest::sample::select(vec![-9i32, -5, -3, -2, -1, 1, 2, 3, 5, 9]),
        -100i32..=100,
    )
        .prop_map(|(mut xs, a, b)| {
            // Pad so the sum is divisible by the length (exact mean), and
            // ensure the series is not constant.
            let n = xs.len() as i32;
            let rem = xs.iter().sum::<i32>().rem_euclid(n);
            if rem != 0 {
                let last = xs.len() - 1;
                xs[last] -= rem;
            }
            if xs.iter().all(|&v| v == xs[0]) {
                xs[0] += n;
            }
            (xs.into_iter().map(|v| v as f64).collect(), a, b)
        })
}

proptest! {
    #[test]
    fn pearson_affine_identity_exact((xs, a, b) in exact_series()) {
        let ys: Vec<f64> = xs.iter().map(|&x| a as f64 * x + b as f64).collect();
        let r = correlate::pearson(&xs, &ys).unwrap();
        prop_assert_eq!(r, (a as f64).signum());
    }

    #[test]
    fn pearson_sign_flip_exact((xs, a, b) in exact_series()) {
        let ys: Vec<f64> = xs.iter().map(|&x| a as f64 * x + b as f64).collect();
        let r = correlate::pearson(&xs, &ys).unwrap();
        let neg: Vec<f64> = ys.iter().map(|&y| -y).collect();
        let r_neg = correlate::pearson(&xs, &neg).unwrap();
        prop_assert_eq!(r_neg, -r);
    }

    #[test]
    fn pearson_symmetric(
        xs in proptest::collection::vec(-1e3f64..1e3, 5..50),
        ys in proptest::collection::vec(-1e3f64..1e3, 5..50),
    ) {
        let n = xs.len().min(ys.len());
        let (xs, ys) = (&xs[..n], &ys[..n]);
        match (correlate::pearson(xs, ys), correlate::pearson(ys, xs)) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (Err(Error::ConstantSeries), Err(Error::ConstantSeries)) => {}
            (a, b) => prop_assert!(false, "asymmetric outcomes: {a:?} vs {b:?}"),
        }
    }

    #[test]
    fn pearson_affine_invariance_float(
        xs in proptest::collection::vec(-100f64..100.0, 5..40),
        ys in proptest::collection::vec(-100f64..100.0, 5..40),
        a in 0.25f64..8.0,
        b in -50f64..50.0,
    ) {
        let n = xs.len().min(ys.len());
        let (xs, ys) = (&xs[..n], &ys[..n]);
        if let Ok(r) = correlate::pearson(xs, ys) {
            let scaled: Vec<f64> = ys.iter().map(|&y| a * y + b).collect();
            let r2 = correlate::pearson(xs, &scaled).unwrap();
            prop_assert!((r - r2).abs() <= 1e-12, "{r} vs {r2}");
        }
    }

    #[test]
    fn dataset_round_trip_bit_exact(
        n in 2usize..12,
        d in 2usize..6,
        seed in 0u64..1000,
    ) {
        use rand::Rng;
        let mut rng = chronoscope_core::linalg::seeded_rng(seed);
        // f32-valued payload so the interchange format is lossless.
        let values = Array2::from_shape_fn((n, d), |_| rng.random::<f32>() as f64 * 8.0 - 4.0);
        let values = values.mapv(|v| v as f32 as f64);
        let meta: Vec<PaintingMeta> = (0..n)
            .map(|i| PaintingMeta {
                id: format!("p{i:04}"),
                artist: format!("artist-{}", i % 3),
                style: format!("style-{}", i % 2),
                year: if i % 4 == 0 { None } else { Some(1400 + i as i32 * 7) },
                wolfflin: if i % 3 == 0 {
                    [None; 5]
                } else {
                    [Some(1.0), Some(2.5), Some(5.0), None, Some(3.25)]
                },
            })
            .collect();
        let acts = ActivationSet {
            values,
            ids: (0..n).map(|i| format!("p{i:04}")).collect(),
            layer_tag: "fc".into(),
            model_tag: "m".into(),
        };
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&meta, &acts, dir.path()).unwrap();
        let (meta2, acts2) =
            load_dataset(&dir.path().join("meta.csv"), &dir.path().join("ds.bin"), None).unwrap();
        prop_assert_eq!(meta, meta2);
        prop_assert_eq!(&acts.ids, &acts2.ids);
        for (a, b) in acts.values.iter().zip(acts2.values.iter()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn merge_map_idempotent_on_arbitrary_labels(label in "[A-Za-z ]{1,20}") {
        let map = StyleMergeMap::default_table(false);
        let once = map.apply(&label).unwrap();
        let twice = map.apply(&once).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn subspace_dim_monotone_in_concentration(
        tail in proptest::collection::vec(0.01f64..1.0, 1..10),
        scale in 1.0f64..20.0,
        threshold in 0.5f64..0.99,
    ) {
        let mut eigenvalues = tail.clone();
        eigenvalues.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let base = make_model(eigenvalues.clone());
        let k_before = pca::subspace_dim(&base, threshold).unwrap();
        eigenvalues[0] *= scale;
        let boosted = make_model(eigenvalues);
        let k_after = pca::subspace_dim(&boosted, threshold).unwrap();
        prop_assert!(k_after <= k_before, "{k_after} > {k_before}");
    }
}

fn make_model(eigenvalues: Vec<f64>) -> pca::PcaModel {
    let k = eigenvalues.len();
    let total = eigenvalues.iter().sum();
    pca::PcaModel {
        mean: Array1::zeros(k),
        components: Array2::eye(k),
        eigenvalues,
        total_variance: total,
        provenance: Provenance::default(),
    }
}

#[test]
fn angular_correlation_rotation_invariant() {
    // Rotating the 2-D embedding shifts every angle by a constant, so the
    // best branch-cut PCC must agree within one scan step.
    let spec = chronoscope_core::dataset::SyntheticSpec {
        n: 400,
        d: 8,
        planted_rank: 2,
        angular_rate: 0.9 * 2.0 * std::f64::consts::PI / 600.0,
        year_range: [1400, 2000],
        noise_sigma: 0.02,
        style_buckets: 4,
        seed: 31,
    };
    let (meta, acts, _) = chronoscope_core::dataset::generate_synthetic(&spec).unwrap();
    let model = pca::fit_pca(&acts).unwrap();
    let emb = pca::project(&model, &acts, 2).unwrap();
    let base = correlate::angular_time_correlation(&correlate::polar(&emb).unwrap(), &meta).unwrap();
    let phi: f64 = 0.7;
    let rot = ndarray::array![[phi.cos(), -phi.sin()], [phi.sin(), phi.cos()]];
    let rotated = Embedding {
        ids: emb.ids.clone(),
        coords: emb.coords.dot(&rot.t()),
        provenance: Provenance::default(),
    };
    let turned =
        correlate::angular_time_correlation(&correlate::polar(&rotated).unwrap(), &meta).unwrap();
    assert!(
        (base.pcc.abs() - turned.pcc.abs()).abs() < 5e-3,
        "{} vs {}",
        base.pcc,
        turned.pcc
    );
}
