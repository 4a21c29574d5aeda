mod common;

use common::*;
use isopt_core::estimators::{snis_estimate, z_estimate};
use isopt_core::grid::{grid_sampler, Grid1D};
use isopt_core::noisy::*;
use isopt_core::{ProposalModel, RngStream, ScalarField, TargetModel, VectorField};

fn grid() -> Grid1D {
    Grid1D::new(-12.0, 12.0, 1 << 14).unwrap()
}

fn noisy(t: TargetModel, scale: f64) -> NoisyTargetModel {
    NoisyTargetModel::new(t, NoiseSpec::lognormal(scale).unwrap()).unwrap()
}

#[test]
fn optimal_noisy_z_unbiased_for_bounded_sd() {
    let nt = NoisyTargetModel::new(
        TargetModel::gaussian(0.0, 1.0),
        NoiseSpec::lognormal(1.0).unwrap(),
    )
    .unwrap()
    .with_sd_base(ScalarField::scalar(|x: f64| 0.1 * (-0.25 * x * x).exp()));
    let q = grid_sampler(&grid(), &noisy_optimal_proposal(&nt, NoisyKind::Z).unwrap())
        .unwrap()
        .into_proposal();
    let z = replicate(2000, 1, |rng| {
        Ok(noisy_z_estimate(&nt, &q, 200, rng)?.value())
    });
    assert!((mean(&z) - 1.0).abs() < 3.0 * se(&z));
}

#[test]
fn noise_removes_zero_variance() {
    let t = TargetModel::gaussian(0.0, 1.0);
    let q = t.as_proposal().unwrap();
    let z = replicate(200, 2, |rng| {
        Ok(noisy_z_estimate(&noisy(t.clone(), 0.2), &q, 100, rng)?.value())
    });
    assert!(var(&z) > 0.0);
    let z0 = replicate(200, 2, |rng| {
        Ok(noisy_z_estimate(&noisy(t.clone(), 0.0), &q, 100, rng)?.value())
    });
    assert!(var(&z0) < 1e-28);
}

#[test]
fn noisy_is_constant_vector() {
    let nt = noisy(TargetModel::gaussian(0.0, 1.0), 0.5);
    let q = ProposalModel::gaussian(0.0, 1.5);
    let f = VectorField::new(vec![
        ScalarField::constant(1, 2.0),
        ScalarField::constant(1, -1.0),
    ]);
    let runs: Vec<Vec<f64>> = (0..2000)
        .map(|k| {
            noisy_is_estimate(&nt, &q, &f, 100, 1.0, RngStream::replication(3, k))
                .unwrap()
                .estimate
        })
        .collect();
    for (c, want) in [2.0, -1.0].iter().enumerate() {
        let col: Vec<f64> = runs.iter().map(|r| r[c]).collect();
        assert!((mean(&col) - want).abs() < 3.0 * se(&col));
    }
}

#[test]
fn noisy_is_targets_oracle_mean() {
    let nt = noisy(TargetModel::gaussian_unnorm(0.7, 1.2), 0.2);
    let zb = z_bar(&nt, &grid()).unwrap();
    let ib = i_bar(&nt, &theta(), &grid()).unwrap();
    assert!((ib - 0.7).abs() < 1e-9);
    let q = ProposalModel::gaussian(0.5, 1.8);
    let est = replicate(2000, 4, |rng| {
        Ok(noisy_is_estimate(&nt, &q, &theta(), 200, zb, rng)?.value())
    });
    assert!((mean(&est) - ib).abs() < 3.0 * se(&est));
}

#[test]
fn noise_increases_optimal_snis_mse() {
    let t = benchmark();
    let f = VectorField::from(theta());
    let run = |scale: f64| {
        let nt = noisy(t.clone(), scale);
        let qf = noisy_optimal_proposal(&nt, NoisyKind::Snis(f.clone(), vec![-1.0])).unwrap();
        let q = grid_sampler(&grid_at(&t, -1.0), &qf)
            .unwrap()
            .into_proposal();
        let est = replicate(1000, 5, |rng| {
            Ok(noisy_snis_estimate(&nt, &q, &theta(), 2000, rng)?.value())
        });
        mse(&est, -1.0)
    };
    let (a, b) = (run(0.0), run(0.5));
    assert!(b > a, "{a} vs {b}");
}

#[test]
fn optimal_noisy_z_variance_matches_v_opt() {
    let nt = noisy(TargetModel::gaussian(0.0, 1.0), 0.3);
    let q = grid_sampler(&grid(), &noisy_optimal_proposal(&nt, NoisyKind::Z).unwrap())
        .unwrap()
        .into_proposal();
    let z = replicate(5000, 6, |rng| {
        Ok(noisy_z_estimate(&nt, &q, 500, rng)?.value())
    });
    let want = v_opt(&nt, &grid(), 500).unwrap();
    assert!((var(&z) / want - 1.0).abs() < 0.15, "{} vs {want}", var(&z));
}

#[test]
fn variance_nondecreasing_in_noise_scale() {
    let t = TargetModel::gaussian(0.0, 1.0);
    let q = ProposalModel::gaussian(0.0, 1.5);
    let v: Vec<f64> = [0.0, 0.25, 0.5, 1.0]
        .iter()
        .map(|s| {
            var(&replicate(5000, 7, |rng| {
                Ok(noisy_z_estimate(&noisy(t.clone(), *s), &q, 100, rng)?.value())
            }))
        })
        .collect();
    let inversions = v.windows(2).filter(|w| w[1] < w[0]).count();
    assert!(inversions <= 1, "{v:?}");
}

#[test]
fn zero_scale_matches_deterministic_for_every_family() {
    let t = TargetModel::gaussian_unnorm(0.0, 1.0);
    let q = ProposalModel::gaussian(0.3, 1.3);
    for family in [
        NoiseFamily::LognormalMeanMatched,
        NoiseFamily::GaussianTruncated,
        NoiseFamily::Gaussian,
    ] {
        let nt = NoisyTargetModel::new(t.clone(), NoiseSpec::new(family, 0.0).unwrap()).unwrap();
        let rng = RngStream::new(12, 1);
        let a = noisy_z_estimate(&nt, &q, 500, rng).unwrap();
        let b = z_estimate(&t, &q, 500, rng).unwrap();
        assert_eq!(a.value().to_bits(), b.value().to_bits());
        let a = noisy_snis_estimate(&nt, &q, &theta(), 500, rng).unwrap();
        let b = snis_estimate(&t, &q, &theta(), 500, rng).unwrap();
        assert_eq!(a.value().to_bits(), b.value().to_bits());
    }
}
