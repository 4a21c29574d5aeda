//! Target and proposal density models.
//!
//! All densities are carried in log space. A [`TargetModel`] holds the log of
//! an unnormalized density `π` and, when known, its normalizing constant `Z`.
//! A [`ProposalModel`] is a normalized density paired with a sampler.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::PiecewiseLinear;
use crate::rng::McRng;

/// `ln √(2π)`.
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

type SamplerFn = dyn Fn(&mut McRng, &mut [f64]) + Send + Sync;

/// Procedure writing one draw into a caller-provided buffer.
#[derive(Clone)]
pub struct Sampler {
    dim: usize,
    f: Arc<SamplerFn>,
}

impl Sampler {
    pub fn new<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&mut McRng, &mut [f64]) + Send + Sync + 'static,
    {
        Self {
            dim,
            f: Arc::new(f),
        }
    }

    pub fn scalar<F>(f: F) -> Self
    where
        F: Fn(&mut McRng) -> f64 + Send + Sync + 'static,
    {
        Self::new(1, move |rng, out| out[0] = f(rng))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn draw_into(&self, rng: &mut McRng, out: &mut [f64]) {
        (self.f)(rng, out)
    }

    pub fn draw(&self, rng: &mut McRng) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.draw_into(rng, &mut out);
        out
    }
}

impl fmt::Debug for Sampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Sampler(dim={})", self.dim)
    }
}

/// Axis-aligned support; infinite bounds allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct Support {
    bounds: Vec<(f64, f64)>,
}

impl Support {
    pub fn real_line() -> Self {
        Self::interval(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        assert!(lo < hi, "support needs lo < hi");
        Self {
            bounds: vec![(lo, hi)],
        }
    }

    pub fn boxed(bounds: Vec<(f64, f64)>) -> Self {
        assert!(!bounds.is_empty() && bounds.iter().all(|(l, h)| l < h));
        Self { bounds }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta
            .iter()
            .zip(&self.bounds)
            .all(|(x, (lo, hi))| *x >= *lo && *x <= *hi)
    }

    /// Finite 1-D bounds, if any.
    pub fn finite_interval(&self) -> Option<(f64, f64)> {
        match self.bounds.as_slice() {
            [(lo, hi)] if lo.is_finite() && hi.is_finite() => Some((*lo, *hi)),
            _ => None,
        }
    }
}

#[inline]
pub fn gaussian_log_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    -0.5 * z * z - sigma.ln() - LN_SQRT_2PI
}

/// Numerically stable `ln Σ exp(xᵢ)`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || m.is_nan() {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Unnormalized target `π(θ)` with optional `Z` and exact sampler.
#[derive(Clone, Debug)]
pub struct TargetModel {
    log_unnorm: ScalarField,
    support: Support,
    known_z: Option<f64>,
    exact_sampler: Option<Sampler>,
    moments: Option<(f64, f64)>,
    label: String,
}

impl TargetModel {
    pub fn new(log_unnorm: ScalarField, support: Support) -> Self {
        Self {
            log_unnorm,
            support,
            known_z: None,
            exact_sampler: None,
            moments: None,
            label: "target".into(),
        }
    }

    pub fn with_known_z(mut self, z: f64) -> Result<Self> {
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "known Z must be positive, got {z}"
            )));
        }
        self.known_z = Some(z);
        Ok(self)
    }

    pub fn with_exact_sampler(mut self, sampler: Sampler) -> Self {
        self.exact_sampler = Some(sampler);
        self
    }

    /// Declares a mean and standard deviation; used for default grid bounds.
    pub fn with_moments(mut self, mean: f64, sd: f64) -> Self {
        self.moments = Some((mean, sd));
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Normalized `N(μ, σ²)`; `Z = 1`.
    pub fn gaussian(mu: f64, sigma: f64) -> Self {
        assert!(sigma > 0.0);
        Self::new(
            ScalarField::scalar(move |x| gaussian_log_pdf(x, mu, sigma)),
            Support::real_line(),
        )
        .with_known_z(1.0)
        .expect("unit Z")
        .with_exact_sampler(gaussian_sampler(mu, sigma))
        .with_moments(mu, sigma)
        .with_label(format!("gaussian({mu}, {sigma})"))
    }

    /// `exp(-(θ-μ)²/(2σ²))`, i.e. a Gaussian missing its `1/√(2πσ²)` factor.
    pub fn gaussian_unnorm(mu: f64, sigma: f64) -> Self {
        assert!(sigma > 0.0);
        Self::new(
            ScalarField::scalar(move |x| {
                let z = (x - mu) / sigma;
                -0.5 * z * z
            }),
            Support::real_line(),
        )
        .with_known_z(sigma * (2.0 * PI).sqrt())
        .expect("positive Z")
        .with_exact_sampler(gaussian_sampler(mu, sigma))
        .with_moments(mu, sigma)
        .with_label(format!("gaussian_unnorm({mu}, {sigma})"))
    }

    /// `π(θ) = Σ wᵢ N(θ | μᵢ, σᵢ²)`, so `Z = Σ wᵢ`.
    pub fn mixture(weights: &[f64], components: &[(f64, f64)]) -> Result<Self> {
        if weights.len() != components.len() || weights.is_empty() {
            return Err(Error::InvalidArgument(
                "mixture needs one weight per component".into(),
            ));
        }
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidArgument(
                "mixture weights must be positive".into(),
            ));
        }
        if components.iter().any(|(_, s)| !(*s > 0.0)) {
            return Err(Error::InvalidArgument(
                "mixture sigmas must be positive".into(),
            ));
        }
        let z: f64 = weights.iter().sum();
        let log_w: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
        let comps = components.to_vec();
        let comps_eval = comps.clone();
        let log_unnorm = ScalarField::scalar(move |x| {
            let term = |k: usize| {
                let (m, s) = comps_eval[k];
                log_w[k] + gaussian_log_pdf(x, m, s)
            };
            let top = (0..log_w.len()).map(term).fold(f64::NEG_INFINITY, f64::max);
            if top == f64::NEG_INFINITY {
                return top;
            }
            top + (0..log_w.len())
                .map(|k| (term(k) - top).exp())
                .sum::<f64>()
                .ln()
        });
        let cum: Vec<f64> = weights
            .iter()
            .scan(0.0, |acc, w| {
                *acc += w / z;
                Some(*acc)
            })
            .collect();
        let sampler = Sampler::scalar(move |rng| {
            let u: f64 = rng.random();
            let k = cum.iter().position(|c| u < *c).unwrap_or(cum.len() - 1);
            let (m, s) = comps[k];
            let e: f64 = rng.sample(StandardNormal);
            m + s * e
        });
        let lo = components
            .iter()
            .map(|(m, s)| m - 10.0 * s)
            .fold(f64::INFINITY, f64::min);
        let hi = components
            .iter()
            .map(|(m, s)| m + 10.0 * s)
            .fold(f64::NEG_INFINITY, f64::max);
        // Grid hint covering every component's ±10σ range.
        Ok(Self::new(log_unnorm, Support::real_line())
            .with_known_z(z)?
            .with_exact_sampler(sampler)
            .with_moments((lo + hi) / 2.0, (hi - lo) / 20.0)
            .with_label("mixture"))
    }

    /// Piecewise-linear density through `(xs, ys)`; zero outside `[xs[0], xs[last]]`.
    pub fn tabulated(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let table = Arc::new(PiecewiseLinear::new(xs, ys)?);
        let z = table.total_mass();
        let (lo, hi) = table.bounds();
        let eval = table.clone();
        let sample = table.clone();
        Ok(Self::new(
            ScalarField::scalar(move |x| eval.eval(x).ln()),
            Support::interval(lo, hi),
        )
        .with_known_z(z)?
        .with_exact_sampler(Sampler::scalar(move |rng| sample.sample(rng)))
        .with_label("tabulated"))
    }

    /// Multiplies `π` by `c > 0`.
    pub fn scaled(mut self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "scale must be positive, got {c}"
            )));
        }
        let inner = self.log_unnorm.clone();
        let lc = c.ln();
        self.log_unnorm = inner.map(move |v| v + lc);
        self.known_z = self.known_z.map(|z| z * c);
        Ok(self)
    }

    pub fn log_unnorm(&self) -> &ScalarField {
        &self.log_unnorm
    }

    #[inline]
    pub fn log_density(&self, theta: &[f64]) -> f64 {
        if !self.support.contains(theta) {
            return f64::NEG_INFINITY;
        }
        self.log_unnorm.eval(theta)
    }

    #[inline]
    pub fn log_density1(&self, x: f64) -> f64 {
        self.log_density(std::slice::from_ref(&x))
    }

    #[inline]
    pub fn density1(&self, x: f64) -> f64 {
        self.log_density1(x).exp()
    }

    pub fn dim(&self) -> usize {
        self.log_unnorm.dim()
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    pub fn known_z(&self) -> Option<f64> {
        self.known_z
    }

    pub fn exact_sampler(&self) -> Option<&Sampler> {
        self.exact_sampler.as_ref()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Default 1-D quadrature bounds: the finite support if declared, otherwise
    /// declared mean ± 10 standard deviations.
    pub fn grid_bounds(&self) -> Option<(f64, f64)> {
        self.support
            .finite_interval()
            .or_else(|| self.moments.map(|(m, s)| (m - 10.0 * s, m + 10.0 * s)))
    }

    /// Unnormalized density as a linear-space field.
    pub fn density_field(&self) -> ScalarField {
        let t = self.clone();
        ScalarField::new(self.dim(), move |x| t.log_density(x).exp())
    }

    /// `π̄ = π / z` as a linear-space field.
    pub fn normalized_field(&self, z: f64) -> ScalarField {
        let t = self.clone();
        let lz = z.ln();
        ScalarField::new(self.dim(), move |x| (t.log_density(x) - lz).exp())
    }

    /// The normalized target `π̄` wrapped as a proposal (needs `Z` and an exact sampler).
    pub fn as_proposal(&self) -> Result<ProposalModel> {
        let z = self
            .known_z
            .ok_or_else(|| Error::CapabilityError("target has no known Z".into()))?;
        let sampler = self
            .exact_sampler
            .clone()
            .ok_or_else(|| Error::CapabilityError("target has no exact sampler".into()))?;
        let t = self.clone();
        let lz = z.ln();
        Ok(ProposalModel::new(
            ScalarField::new(self.dim(), move |x| t.log_density(x) - lz),
            sampler,
        )
        .with_label(format!("normalized {}", self.label)))
    }
}

pub fn gaussian_sampler(mu: f64, sigma: f64) -> Sampler {
    Sampler::scalar(move |rng| {
        let e: f64 = rng.sample(StandardNormal);
        mu + sigma * e
    })
}

/// Normalized density `q` paired with a sampler.
#[derive(Clone, Debug)]
pub struct ProposalModel {
    log_density: ScalarField,
    sampler: Sampler,
    label: String,
}

impl ProposalModel {
    pub fn new(log_density: ScalarField, sampler: Sampler) -> Self {
        assert_eq!(
            log_density.dim(),
            sampler.dim(),
            "density and sampler dimensions differ"
        );
        Self {
            log_density,
            sampler,
            label: "proposal".into(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn gaussian(mu: f64, sigma: f64) -> Self {
        assert!(sigma > 0.0);
        Self::new(
            ScalarField::scalar(move |x| gaussian_log_pdf(x, mu, sigma)),
            gaussian_sampler(mu, sigma),
        )
        .with_label(format!("gaussian({mu}, {sigma})"))
    }

    /// Normalized mixture `Σ wᵢ N(μᵢ, σᵢ²)` with `Σ wᵢ = 1` enforced by rescaling.
    pub fn mixture(weights: &[f64], components: &[(f64, f64)]) -> Result<Self> {
        let z: f64 = weights.iter().sum();
        let scaled: Vec<f64> = weights.iter().map(|w| w / z).collect();
        let t = TargetModel::mixture(&scaled, components)?;
        Ok(t.as_proposal()?.with_label("mixture"))
    }

    pub fn log_density_field(&self) -> &ScalarField {
        &self.log_density
    }

    #[inline]
    pub fn log_density(&self, theta: &[f64]) -> f64 {
        self.log_density.eval(theta)
    }

    #[inline]
    pub fn log_density1(&self, x: f64) -> f64 {
        self.log_density.eval1(x)
    }

    #[inline]
    pub fn density1(&self, x: f64) -> f64 {
        self.log_density1(x).exp()
    }

    pub fn density_field(&self) -> ScalarField {
        self.log_density.exp()
    }

    pub fn sampler(&self) -> &Sampler {
        &self.sampler
    }

    pub fn dim(&self) -> usize {
        self.log_density.dim()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    #[inline]
    pub fn draw_into(&self, rng: &mut McRng, out: &mut [f64]) {
        self.sampler.draw_into(rng, out)
    }
}
