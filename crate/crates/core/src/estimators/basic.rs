//! Monte Carlo, standard IS, IS estimate of `Z`, and self-normalized IS.

use super::{
    centered_mean, require_n, snis_reduce, weighted_draws, EstimateReport, WeightedSampleSet,
};
use crate::density::{ProposalModel, TargetModel};
use crate::error::{Error, Result};
use crate::field::Integrand;
use crate::rng::RngStream;

fn eval_all<F: Integrand + ?Sized>(ws: &WeightedSampleSet, f: &F) -> Result<Vec<Vec<f64>>> {
    let p = f.components();
    let mut cols = vec![Vec::with_capacity(ws.len()); p];
    let mut buf = vec![0.0; p];
    for th in ws.draws() {
        f.eval_into(th, &mut buf);
        for (col, v) in cols.iter_mut().zip(&buf) {
            if !v.is_finite() {
                return Err(Error::NonFiniteEvaluation {
                    at: th.to_vec(),
                    value: *v,
                });
            }
            col.push(*v);
        }
    }
    Ok(cols)
}

/// `(1/(nZ)) Σ wᵢ f(θᵢ)` per component.
pub(crate) fn is_reduce<F: Integrand + ?Sized>(
    ws: &WeightedSampleSet,
    f: &F,
    z: f64,
) -> Result<Vec<f64>> {
    let w = ws.raw_weights();
    let n = ws.len() as f64;
    Ok(eval_all(ws, f)?
        .iter()
        .map(|c| c.iter().zip(w).map(|(v, w)| w * v).sum::<f64>() / (n * z))
        .collect())
}

/// Plain average of `f` over exact draws from `π̄`.
pub fn mc_estimate<F: Integrand + ?Sized>(
    target: &TargetModel,
    f: &F,
    n: usize,
    rng: RngStream,
) -> Result<EstimateReport> {
    require_n(n, "n")?;
    let sampler = target
        .exact_sampler()
        .ok_or_else(|| Error::CapabilityError("mc_estimate needs an exact sampler".into()))?;
    let d = sampler.dim();
    let mut r = rng.rng();
    let mut draws = vec![0.0; n * d];
    for chunk in draws.chunks_exact_mut(d) {
        sampler.draw_into(&mut r, chunk);
    }
    let ws = WeightedSampleSet::unweighted(d, draws, vec![0; n]);
    let est = eval_all(&ws, f)?.iter().map(|c| centered_mean(c)).collect();
    Ok(EstimateReport::new("mc", est, n, rng).with_samples(ws))
}

/// `(1/(nZ)) Σ wᵢ f(θᵢ)` with `θᵢ ~ q`. Needs the target's `Z`.
pub fn is_estimate<F: Integrand + ?Sized>(
    target: &TargetModel,
    q: &ProposalModel,
    f: &F,
    n: usize,
    rng: RngStream,
) -> Result<EstimateReport> {
    require_n(n, "n")?;
    let z = target.known_z().ok_or_else(|| {
        Error::CapabilityError("is_estimate needs the normalizing constant".into())
    })?;
    let ws = weighted_draws(target, q, n, &mut rng.rng(), 0)?;
    let est = is_reduce(&ws, f, z)?;
    let mut rep = EstimateReport::new("is", est, n, rng).with_samples(ws);
    rep.z_hat = Some(z);
    Ok(rep)
}

/// `Ẑ = (1/n) Σ π(θᵢ)/q(θᵢ)` with `θᵢ ~ q`.
pub fn z_estimate(
    target: &TargetModel,
    q: &ProposalModel,
    n: usize,
    rng: RngStream,
) -> Result<EstimateReport> {
    require_n(n, "n")?;
    let ws = weighted_draws(target, q, n, &mut rng.rng(), 0)?;
    let z = ws.mean_weight();
    let mut rep = EstimateReport::new("z", vec![z], n, rng).with_samples(ws);
    rep.z_hat = Some(z);
    Ok(rep)
}

/// `Σ w̄ᵢ f(θᵢ)` with self-normalized weights; works with unnormalized `π`.
///
/// The result always lies within the range of `f` over the draws.
pub fn snis_estimate<F: Integrand + ?Sized>(
    target: &TargetModel,
    q: &ProposalModel,
    f: &F,
    n: usize,
    rng: RngStream,
) -> Result<EstimateReport> {
    require_n(n, "n")?;
    let ws = weighted_draws(target, q, n, &mut rng.rng(), 0)?;
    let est = snis_reduce(&ws, f)?;
    let mut rep = EstimateReport::new("snis", est, n, rng);
    rep.z_hat = Some(ws.mean_weight());
    Ok(rep.with_samples(ws))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{ScalarField, VectorField};

    fn theta() -> ScalarField {
        ScalarField::scalar(|x| x)
    }

    #[test]
    fn mc_mean_of_standard_normal() {
        let t = TargetModel::gaussian(0.0, 1.0);
        let r = mc_estimate(&t, &theta(), 100_000, RngStream::new(1, 0)).unwrap();
        assert!(r.value().abs() < 0.02);
    }

    #[test]
    fn mc_constant_is_exact() {
        let t = TargetModel::gaussian(0.0, 1.0);
        let r = mc_estimate(
            &t,
            &ScalarField::constant(1, 0.3),
            1000,
            RngStream::new(1, 0),
        )
        .unwrap();
        assert_eq!(r.value(), 0.3);
    }

    #[test]
    fn mc_requires_sampler() {
        let t = TargetModel::tabulated(vec![0.0, 1.0], vec![1.0, 1.0]).unwrap();
        let t = TargetModel::new(t.log_unnorm().clone(), t.support().clone());
        let e = mc_estimate(&t, &theta(), 10, RngStream::new(1, 0)).unwrap_err();
        assert!(matches!(e, Error::CapabilityError(_)));
    }

    #[test]
    fn is_with_target_as_proposal_matches_mc() {
        let t = TargetModel::gaussian(0.5, 1.0);
        let q = t.as_proposal().unwrap();
        let rng = RngStream::new(3, 1);
        let a = is_estimate(&t, &q, &theta(), 500, rng).unwrap();
        let b = mc_estimate(&t, &theta(), 500, rng).unwrap();
        assert!((a.value() - b.value()).abs() < 1e-12);
        assert!(a
            .samples
            .unwrap()
            .raw_weights()
            .iter()
            .all(|w| (w - 1.0).abs() < 1e-12));
    }

    #[test]
    fn z_from_normalized_proposal_at_target() {
        let t = TargetModel::gaussian_unnorm(0.0, 2.0);
        let q = ProposalModel::gaussian(0.0, 2.0);
        let r = z_estimate(&t, &q, 100, RngStream::new(1, 0)).unwrap();
        let z = 2.0 * (2.0 * std::f64::consts::PI).sqrt();
        assert!((r.value() / z - 1.0).abs() < 1e-12);
    }

    #[test]
    fn snis_constant_and_bounds() {
        let t = TargetModel::gaussian_unnorm(1.0, 1.0);
        let q = ProposalModel::gaussian(0.0, 3.0);
        let c = snis_estimate(
            &t,
            &q,
            &ScalarField::constant(1, -2.5),
            200,
            RngStream::new(9, 0),
        )
        .unwrap();
        assert_eq!(c.value(), -2.5);
        let r = snis_estimate(&t, &q, &theta(), 50_000, RngStream::new(9, 0)).unwrap();
        assert!((r.value() - 1.0).abs() < 0.05);
    }

    #[test]
    fn snis_vector_valued() {
        let t = TargetModel::gaussian_unnorm(1.0, 1.0);
        let q = ProposalModel::gaussian(1.0, 1.5);
        let f = VectorField::new(vec![theta(), ScalarField::scalar(|x| x * x)]);
        let r = snis_estimate(&t, &q, &f, 50_000, RngStream::new(2, 0)).unwrap();
        assert!((r.estimate[0] - 1.0).abs() < 0.03);
        assert!((r.estimate[1] - 2.0).abs() < 0.06);
    }

    #[test]
    fn support_violation_when_q_vanishes_at_draw() {
        use crate::density::gaussian_sampler;
        let t = TargetModel::gaussian(0.0, 1.0);
        let q = ProposalModel::new(
            ScalarField::scalar(|_| f64::NEG_INFINITY),
            gaussian_sampler(0.0, 1.0),
        );
        let e = z_estimate(&t, &q, 5, RngStream::new(1, 0)).unwrap_err();
        assert!(matches!(e, Error::SupportViolation { .. }));
    }

    #[test]
    fn zero_samples_rejected() {
        let t = TargetModel::gaussian(0.0, 1.0);
        assert!(mc_estimate(&t, &theta(), 0, RngStream::new(1, 0)).is_err());
    }
}
