//! Targets that can only be evaluated with noise.
//!
//! A [`NoisyTargetModel`] has conditional mean `m(θ)` (an unnormalized
//! [`TargetModel`]) and conditional sd `s(θ) = scale · s₀(θ)`, with `s₀ = m`
//! unless set otherwise, so `scale` is then the coefficient of variation.
//! Realizations follow a [`NoiseFamily`] matched to those two moments.
//!
//! The estimators draw `θᵢ` and then realize `π̃(θᵢ)` once, on the same
//! stream. A zero sd consumes no randomness, so at `scale = 0` every noisy
//! estimator is bitwise equal to its deterministic counterpart.

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

use crate::density::{ProposalModel, TargetModel};
use crate::error::{Error, Result};
use crate::estimators::{
    is_reduce, log_ratio, mean_exp, require_n, snis_reduce, EstimateReport, WeightedSampleSet,
};
use crate::field::{Integrand, ScalarField, VectorField};
use crate::grid::{quadrature_integrate, Grid1D};
use crate::rng::{McRng, RngStream};

/// Law of a single noisy evaluation given its mean `m` and sd `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseFamily {
    /// `m · exp(σε - σ²/2)` with `σ² = ln(1 + s²/m²)`; always positive.
    #[default]
    LognormalMeanMatched,
    /// Gaussian truncated at zero, with location and scale chosen so the
    /// truncated law has mean `m` and sd `s`. Requires `s < m`.
    GaussianTruncated,
    /// `m + sε`. Negative realizations are rejected, not clipped.
    Gaussian,
}

impl std::str::FromStr for NoiseFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lognormal" | "lognormal_meanmatched" => Ok(Self::LognormalMeanMatched),
            "gaussian_truncated" | "truncated" => Ok(Self::GaussianTruncated),
            "gaussian" => Ok(Self::Gaussian),
            _ => Err(Error::InvalidArgument(format!(
                "unknown noise family '{s}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub family: NoiseFamily,
    pub scale: f64,
}

impl NoiseSpec {
    pub fn new(family: NoiseFamily, scale: f64) -> Result<Self> {
        if !(scale >= 0.0) || !scale.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "noise scale must be finite and nonnegative, got {scale}"
            )));
        }
        Ok(Self { family, scale })
    }

    pub fn lognormal(scale: f64) -> Result<Self> {
        Self::new(NoiseFamily::LognormalMeanMatched, scale)
    }

    pub fn none() -> Self {
        Self {
            family: NoiseFamily::LognormalMeanMatched,
            scale: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NoisyTargetModel {
    mean: TargetModel,
    sd_base: Option<ScalarField>,
    noise: NoiseSpec,
    // standardized truncation point when s/m is the same everywhere
    kappa: Option<f64>,
}

impl NoisyTargetModel {
    /// Noise with sd `scale · m(θ)`.
    pub fn new(mean: TargetModel, noise: NoiseSpec) -> Result<Self> {
        let kappa = match noise.family {
            NoiseFamily::GaussianTruncated if noise.scale > 0.0 => {
                Some(truncation_kappa(noise.scale)?)
            }
            _ => None,
        };
        Ok(Self {
            mean,
            sd_base: None,
            noise,
            kappa,
        })
    }

    /// Noise with sd `scale · s₀(θ)`; `s₀` is a linear-space field.
    pub fn with_sd_base(mut self, s0: ScalarField) -> Self {
        self.sd_base = Some(s0);
        self.kappa = None;
        self
    }

    pub fn mean_target(&self) -> &TargetModel {
        &self.mean
    }

    pub fn noise(&self) -> NoiseSpec {
        self.noise
    }

    /// `m(θ)`.
    pub fn mean_field(&self) -> ScalarField {
        self.mean.density_field()
    }

    /// `s(θ)`.
    pub fn sd_field(&self) -> ScalarField {
        let c = self.noise.scale;
        match &self.sd_base {
            Some(s0) => s0.map(move |v| c * v),
            None => self.mean.density_field().map(move |v| c * v),
        }
    }

    fn sd_at(&self, theta: &[f64], log_m: f64) -> f64 {
        if self.noise.scale == 0.0 {
            return 0.0;
        }
        match &self.sd_base {
            Some(s0) => self.noise.scale * s0.eval(theta),
            None => self.noise.scale * log_m.exp(),
        }
    }

    /// `log π̃(θ)` for one fresh realization.
    pub fn realize(&self, theta: &[f64], rng: &mut McRng) -> Result<f64> {
        let lm = self.mean.log_density(theta);
        if lm.is_nan() || lm == f64::INFINITY {
            return Err(Error::NonFiniteEvaluation {
                at: theta.to_vec(),
                value: lm,
            });
        }
        let s = self.sd_at(theta, lm);
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::NonFiniteEvaluation {
                at: theta.to_vec(),
                value: s,
            });
        }
        if s == 0.0 {
            return Ok(lm);
        }
        match self.noise.family {
            NoiseFamily::Gaussian => {
                let eps: f64 = rng.sample(StandardNormal);
                let v = lm.exp() + s * eps;
                if v < 0.0 {
                    return Err(Error::NegativeRealization {
                        at: theta.to_vec(),
                        value: v,
                    });
                }
                Ok(v.ln())
            }
            _ if lm == f64::NEG_INFINITY => Err(Error::DegenerateDensity(format!(
                "a nonnegative noise law cannot have mean 0 and sd {s} at {theta:?}"
            ))),
            NoiseFamily::LognormalMeanMatched => {
                let log_cv = s.ln() - lm;
                let sigma2 = (2.0 * log_cv).exp().ln_1p();
                let eps: f64 = rng.sample(StandardNormal);
                Ok(lm - 0.5 * sigma2 + sigma2.sqrt() * eps)
            }
            NoiseFamily::GaussianTruncated => {
                let kappa = match self.kappa {
                    Some(k) => k,
                    None => truncation_kappa(s / lm.exp())?,
                };
                let tau = lm.exp() / (kappa + mills(kappa));
                let u: f64 = rng.random();
                // -Z ~ N(0,1) restricted to (-inf, κ)
                let w = std_normal().inverse_cdf(u * std_cdf(kappa));
                Ok((tau * (kappa - w)).max(0.0).ln())
            }
        }
    }
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("valid normal")
}

fn std_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `φ(κ)/Φ(κ)`.
fn mills(kappa: f64) -> f64 {
    let pdf = (-0.5 * kappa * kappa).exp() / (2.0 * std::f64::consts::PI).sqrt();
    pdf / std_cdf(kappa)
}

/// Coefficient of variation of `N(κτ, τ²)` truncated to `[0, ∞)`.
fn truncated_cv(kappa: f64) -> f64 {
    let l = mills(kappa);
    let a = kappa + l;
    (1.0 - l * a).max(0.0).sqrt() / a
}

/// Solves `truncated_cv(κ) = cv` by bisection; the cv decreases in `κ`.
fn truncation_kappa(cv: f64) -> Result<f64> {
    if !(cv > 0.0 && cv < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "truncated Gaussian noise needs 0 < s/m < 1, got {cv}"
        )));
    }
    let (mut lo, mut hi) = (-30.0, 1.0 / cv + 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if truncated_cv(mid) > cv {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Draw-then-realize loop; returns the noisy weights `π̃/q`.
fn noisy_weights(
    nt: &NoisyTargetModel,
    q: &ProposalModel,
    n: usize,
    rng: RngStream,
) -> Result<WeightedSampleSet> {
    require_n(n, "n")?;
    let d = q.dim();
    let mut r = rng.rng();
    let mut draws = vec![0.0; n * d];
    let mut log_w = Vec::with_capacity(n);
    for th in draws.chunks_exact_mut(d) {
        q.draw_into(&mut r, th);
        let lp = nt.realize(th, &mut r)?;
        log_w.push(log_ratio(lp, q.log_density(th), th)?);
    }
    Ok(WeightedSampleSet::unweighted(d, draws, vec![0; n]).with_log_weights(log_w))
}

fn finish(
    name: &str,
    est: Vec<f64>,
    n: usize,
    rng: RngStream,
    ws: WeightedSampleSet,
    nt: &NoisyTargetModel,
) -> EstimateReport {
    let mut rep = EstimateReport::new(name, est, n, rng);
    rep.z_hat = Some(ws.mean_weight());
    rep.noise_scale = Some(nt.noise.scale);
    rep.with_samples(ws)
}

/// `Z̃ = (1/n) Σ π̃(θᵢ)/q(θᵢ)`, unbiased for `Z̄ = ∫ m`.
pub fn noisy_z_estimate(
    nt: &NoisyTargetModel,
    q: &ProposalModel,
    n: usize,
    rng: RngStream,
) -> Result<EstimateReport> {
    let ws = noisy_weights(nt, q, n, rng)?;
    let z = mean_exp(ws.log_weights());
    Ok(finish("noisy_z", vec![z], n, rng, ws, nt))
}

/// `(1/(n Z̄)) Σ π̃(θᵢ) f(θᵢ)/q(θᵢ)` with `Z̄` supplied by the caller.
pub fn noisy_is_estimate<F: Integrand + ?Sized>(
    nt: &NoisyTargetModel,
    q: &ProposalModel,
    f: &F,
    n: usize,
    z_bar: f64,
    rng: RngStream,
) -> Result<EstimateReport> {
    if !(z_bar > 0.0) || !z_bar.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "z_bar must be positive and finite, got {z_bar}"
        )));
    }
    let ws = noisy_weights(nt, q, n, rng)?;
    let est = is_reduce(&ws, f, z_bar)?;
    let mut rep = finish("noisy_is", est, n, rng, ws, nt);
    rep.z_hat = Some(z_bar);
    Ok(rep)
}

/// Self-normalized noisy IS; `z_hat` carries `Z̃`.
pub fn noisy_snis_estimate<F: Integrand + ?Sized>(
    nt: &NoisyTargetModel,
    q: &ProposalModel,
    f: &F,
    n: usize,
    rng: RngStream,
) -> Result<EstimateReport> {
    let ws = noisy_weights(nt, q, n, rng)?;
    let est = snis_reduce(&ws, f)?;
    Ok(finish("noisy_snis", est, n, rng, ws, nt))
}

/// Which noisy estimator an optimal proposal is built for.
#[derive(Debug, Clone)]
pub enum NoisyKind {
    Z,
    Is(VectorField),
    Snis(VectorField, Vec<f64>),
}

/// Unnormalized optimal proposal: `√(m² + s²)` times `1`, `‖f‖₂` or
/// `‖f - Ī‖₂` depending on the estimator.
pub fn noisy_optimal_proposal(nt: &NoisyTargetModel, kind: NoisyKind) -> Result<ScalarField> {
    let m = nt.mean_field();
    let s = nt.sd_field();
    let dim = m.dim();
    let base = move |th: &[f64]| m.eval(th).hypot(s.eval(th));
    Ok(match kind {
        NoisyKind::Z => ScalarField::new(dim, base),
        NoisyKind::Is(f) => ScalarField::new(dim, move |th| {
            let v = f.eval(th);
            v.iter().map(|x| x * x).sum::<f64>().sqrt() * base(th)
        }),
        NoisyKind::Snis(f, ibar) => {
            if ibar.len() != f.len() {
                return Err(Error::InvalidArgument(format!(
                    "plug-in has {} components, f has {}",
                    ibar.len(),
                    f.len()
                )));
            }
            ScalarField::new(dim, move |th| {
                let v = f.eval(th);
                v.iter()
                    .zip(&ibar)
                    .map(|(x, i)| (x - i) * (x - i))
                    .sum::<f64>()
                    .sqrt()
                    * base(th)
            })
        }
    })
}

/// `Z̄ = ∫ m` by quadrature.
pub fn z_bar(nt: &NoisyTargetModel, grid: &Grid1D) -> Result<f64> {
    quadrature_integrate(grid, &nt.mean_field())
}

/// `Ī = ∫ f m / ∫ m` by quadrature.
pub fn i_bar(nt: &NoisyTargetModel, f: &ScalarField, grid: &Grid1D) -> Result<f64> {
    let m = nt.mean_field();
    let g = f.clone();
    let fm = ScalarField::new(m.dim(), move |th| g.eval(th) * m.eval(th));
    Ok(quadrature_integrate(grid, &fm)? / z_bar(nt, grid)?)
}

/// Minimum variance of `Z̃` at sample size `n`: `((∫√(m²+s²))² - Z̄²)/n`.
pub fn v_opt(nt: &NoisyTargetModel, grid: &Grid1D, n: usize) -> Result<f64> {
    let c = quadrature_integrate(grid, &noisy_optimal_proposal(nt, NoisyKind::Z)?)?;
    let z = z_bar(nt, grid)?;
    Ok((c * c - z * z) / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{is_estimate, sample_variance, snis_estimate, z_estimate};

    fn moments(nt: &NoisyTargetModel, x: f64, n: usize) -> (f64, f64) {
        let mut r = RngStream::new(77, 0).rng();
        let v: Vec<f64> = (0..n)
            .map(|_| nt.realize(&[x], &mut r).unwrap().exp())
            .collect();
        let m = v.iter().sum::<f64>() / n as f64;
        (m, sample_variance(&v).sqrt())
    }

    #[test]
    fn realizations_match_mean_and_sd() {
        for family in [
            NoiseFamily::LognormalMeanMatched,
            NoiseFamily::GaussianTruncated,
        ] {
            let nt = NoisyTargetModel::new(
                TargetModel::gaussian(0.0, 1.0),
                NoiseSpec::new(family, 0.4).unwrap(),
            )
            .unwrap();
            for x in [0.0, 0.7, -1.5] {
                let m = TargetModel::gaussian(0.0, 1.0).density1(x);
                let (em, es) = moments(&nt, x, 100_000);
                assert!(
                    (em / m - 1.0).abs() < 0.01,
                    "{family:?} mean at {x}: {em} vs {m}"
                );
                assert!(
                    (es / (0.4 * m) - 1.0).abs() < 0.02,
                    "{family:?} sd at {x}: {es}"
                );
            }
        }
    }

    #[test]
    fn truncated_needs_cv_below_one() {
        let e = NoisyTargetModel::new(
            TargetModel::gaussian(0.0, 1.0),
            NoiseSpec::new(NoiseFamily::GaussianTruncated, 1.2).unwrap(),
        );
        assert!(e.is_err());
    }

    #[test]
    fn raw_gaussian_rejects_negative_values() {
        let nt = NoisyTargetModel::new(
            TargetModel::gaussian(0.0, 1.0),
            NoiseSpec::new(NoiseFamily::Gaussian, 3.0).unwrap(),
        )
        .unwrap();
        let q = ProposalModel::gaussian(0.0, 1.0);
        let e = noisy_z_estimate(&nt, &q, 200, RngStream::new(1, 0)).unwrap_err();
        assert!(matches!(e, Error::NegativeRealization { .. }));
    }

    #[test]
    fn zero_scale_is_bitwise_deterministic() {
        let t = TargetModel::gaussian_unnorm(0.3, 1.2);
        let nt = NoisyTargetModel::new(t.clone(), NoiseSpec::none()).unwrap();
        let q = ProposalModel::gaussian(0.0, 2.0);
        let f = ScalarField::scalar(|x| x);
        let rng = RngStream::new(10, 3);
        assert_eq!(
            noisy_z_estimate(&nt, &q, 300, rng).unwrap().value(),
            z_estimate(&t, &q, 300, rng).unwrap().value()
        );
        assert_eq!(
            noisy_snis_estimate(&nt, &q, &f, 300, rng).unwrap().value(),
            snis_estimate(&t, &q, &f, 300, rng).unwrap().value()
        );
        let z = t.known_z().unwrap();
        assert_eq!(
            noisy_is_estimate(&nt, &q, &f, 300, z, rng).unwrap().value(),
            is_estimate(&t, &q, &f, 300, rng).unwrap().value()
        );
    }

    #[test]
    fn snis_constant_exact_under_noise() {
        let nt = NoisyTargetModel::new(
            TargetModel::gaussian(0.0, 1.0),
            NoiseSpec::lognormal(0.8).unwrap(),
        )
        .unwrap();
        let q = ProposalModel::gaussian(0.0, 1.5);
        let r = noisy_snis_estimate(
            &nt,
            &q,
            &ScalarField::constant(1, 4.25),
            100,
            RngStream::new(2, 2),
        )
        .unwrap();
        assert_eq!(r.value(), 4.25);
        assert_eq!(r.noise_scale, Some(0.8));
    }

    #[test]
    fn optimal_z_proposal_noise_forces_mass() {
        let t = TargetModel::new(
            ScalarField::scalar(|x: f64| if x > 0.0 { -x } else { f64::NEG_INFINITY }),
            crate::Support::real_line(),
        );
        let nt = NoisyTargetModel::new(t, NoiseSpec::lognormal(0.5).unwrap())
            .unwrap()
            .with_sd_base(ScalarField::constant(1, 1.0));
        let q = noisy_optimal_proposal(&nt, NoisyKind::Z).unwrap();
        assert!(q.eval1(-1.0) > 0.0);
        let nt0 =
            NoisyTargetModel::new(TargetModel::gaussian(0.0, 1.0), NoiseSpec::none()).unwrap();
        let q0 = noisy_optimal_proposal(&nt0, NoisyKind::Z).unwrap();
        assert!((q0.eval1(0.4) - TargetModel::gaussian(0.0, 1.0).density1(0.4)).abs() < 1e-16);
    }

    #[test]
    fn v_opt_positive_with_noise() {
        let grid = Grid1D::new(-12.0, 12.0, 8192).unwrap();
        let nt = NoisyTargetModel::new(
            TargetModel::gaussian(0.0, 1.0),
            NoiseSpec::lognormal(0.3).unwrap(),
        )
        .unwrap();
        let v = v_opt(&nt, &grid, 500).unwrap();
        // s = 0.3 m, so √(m²+s²) = √1.09 m
        assert!((v - 0.09 / 500.0).abs() < 1e-10);
        let nt0 =
            NoisyTargetModel::new(TargetModel::gaussian(0.0, 1.0), NoiseSpec::none()).unwrap();
        assert!(v_opt(&nt0, &grid, 500).unwrap().abs() < 1e-14);
    }
}
