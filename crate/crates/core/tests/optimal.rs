mod common;

use common::*;
use isopt_core::estimators::{snis_estimate, z_estimate};
use isopt_core::grid::{quadrature_integrate, Grid1D};
use isopt_core::multi::snis3q_estimate;
use isopt_core::optimal::*;
use isopt_core::{ProposalModel, ScalarField, TargetModel};

/// `C_q = E_π̄|f - I|` for the benchmark, by quadrature.
fn c_q() -> f64 {
    let t = benchmark();
    let g = ScalarField::scalar(move |x| (x + 1.0).abs() * t.density1(x));
    quadrature_integrate(&grid_at(&benchmark(), -1.0), &g).unwrap()
}

#[test]
fn c_q_closed_form() {
    let c = c_q();
    // the kink at θ = -1 leaves an O(h²) trapezoid term near 1e-7
    assert!(
        (c - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-6,
        "{c}"
    );
}

#[test]
fn z_estimate_certificate() {
    let t = TargetModel::gaussian_unnorm(0.4, 0.9);
    let q = built_proposal(
        OptimalSpec::new(Scheme::Z).target(t.clone()),
        &Grid1D::new(-9.0, 10.0, 1 << 14).unwrap(),
    );
    let check = zero_variance_check(Scheme::Z, 1e-18, 200, 1, |rng| {
        Ok(z_estimate(&t, &q, 100, rng)?.value())
    });
    assert!(check.passed, "{check}");
}

#[test]
fn snis_optimal_variance_matches_lower_bound() {
    let t = benchmark();
    let q = snis_qopt();
    let n = 1000;
    let bound = c_q() * c_q() / n as f64;
    let check = variance_check(
        Scheme::Snis,
        VarianceTarget::Value {
            value: bound,
            rel_tol: 0.15,
        },
        1000,
        2,
        |rng| Ok(snis_estimate(&t, &q, &theta(), n, rng)?.value()),
    );
    assert!(check.passed, "{check}");
    assert!(check.variance >= bound * 0.85);
}

#[test]
fn no_proposal_beats_snis_bound() {
    let t = benchmark();
    let n = 500;
    let bound = c_q() * c_q() / n as f64;
    for q in [
        ProposalModel::gaussian(-1.0, 1.0),
        ProposalModel::gaussian(-1.0, 1.5),
        ProposalModel::gaussian(-0.5, 2.0),
    ] {
        let est = replicate(1000, 4, |rng| {
            Ok(snis_estimate(&t, &q, &theta(), n, rng)?.value())
        });
        // the sample variance of 1000 runs has relative sd ≈ 4.5%
        assert!(var(&est) >= bound * 0.85, "{} below {bound}", var(&est));
    }
}

#[test]
fn snis3q_certificate() {
    let t = TargetModel::gaussian_unnorm(-1.0, 1.0);
    let grid = grid_at(&t, 0.0);
    let (plus, minus) = OptimalSpec::new(Scheme::PositivisedPair)
        .target(t.clone())
        .f(theta())
        .build()
        .unwrap()
        .pair()
        .unwrap();
    let q1 = grid_proposal_or_empty(&grid, &plus)
        .unwrap()
        .map(|g| g.into_proposal());
    let q2 = grid_proposal_or_empty(&grid, &minus)
        .unwrap()
        .map(|g| g.into_proposal());
    let q3 = built_proposal(OptimalSpec::new(Scheme::Z).target(t.clone()), &grid);
    let check = zero_variance_check(Scheme::PositivisedPair, 1e-18, 100, 3, |rng| {
        Ok(snis3q_estimate(
            &t,
            q1.as_ref(),
            q2.as_ref(),
            &q3,
            &theta(),
            100,
            100,
            100,
            rng,
        )?
        .value())
    });
    assert!(check.passed, "{check}");
}

#[test]
fn failed_runs_fail_the_check() {
    let check = zero_variance_check(Scheme::Z, 1.0, 10, 1, |rng| {
        if rng.stream_id % 2 == 0 {
            Err(isopt_core::Error::AllWeightsZero)
        } else {
            Ok(0.0)
        }
    });
    assert!(!check.passed);
    assert_eq!(check.failed_runs, 5);
}
