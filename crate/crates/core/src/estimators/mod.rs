//! Single-target estimators.
//!
//! [`basic`] holds ideal Monte Carlo, standard IS, the IS estimator of `Z`
//! and self-normalized IS. [`evidence`] holds the estimators of `Z` built on
//! other identities: reciprocal IS, ratio (umbrella) sampling and bridge
//! sampling, with the iterative schemes for the latter two.

pub mod basic;
pub mod evidence;

use std::collections::BTreeMap;

use crate::density::{ProposalModel, TargetModel};
use crate::error::{Error, Result};
use crate::field::Integrand;
use crate::rng::{McRng, RngStream};

pub(crate) use basic::is_reduce;
pub use basic::{is_estimate, mc_estimate, snis_estimate, z_estimate};
pub use evidence::{
    bridge_estimate, bridge_iterative, ris_estimate, umbrella_estimate, umbrella_iterative,
    IterativeResult, DEFAULT_REL_TOL,
};

/// Draws with their importance weights and the proposal that produced each.
///
/// `raw_weights[i] = exp(log_weights[i])`; normalized weights are formed with
/// a max-subtraction so they stay finite even when the raw weights overflow.
#[derive(Debug, Clone, Default)]
pub struct WeightedSampleSet {
    dim: usize,
    draws: Vec<f64>,
    log_weights: Vec<f64>,
    raw_weights: Vec<f64>,
    norm_weights: Vec<f64>,
    source_ids: Vec<usize>,
}

impl WeightedSampleSet {
    /// Unweighted draws (flattened, `dim` values per draw).
    pub fn unweighted(dim: usize, draws: Vec<f64>, source_ids: Vec<usize>) -> Self {
        assert_eq!(draws.len(), dim * source_ids.len());
        Self {
            dim,
            draws,
            source_ids,
            ..Default::default()
        }
    }

    pub fn with_log_weights(mut self, log_weights: Vec<f64>) -> Self {
        assert_eq!(log_weights.len(), self.len());
        let top = log_weights
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        self.raw_weights = log_weights.iter().map(|l| l.exp()).collect();
        self.norm_weights = if top.is_finite() {
            let shifted: Vec<f64> = log_weights.iter().map(|l| (l - top).exp()).collect();
            let s: f64 = shifted.iter().sum();
            shifted.into_iter().map(|v| v / s).collect()
        } else {
            vec![0.0; log_weights.len()]
        };
        self.log_weights = log_weights;
        self
    }

    pub fn len(&self) -> usize {
        self.source_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source_ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn draw(&self, i: usize) -> &[f64] {
        &self.draws[i * self.dim..(i + 1) * self.dim]
    }

    pub fn draws(&self) -> impl Iterator<Item = &[f64]> {
        self.draws.chunks_exact(self.dim)
    }

    pub fn is_weighted(&self) -> bool {
        self.log_weights.len() == self.len() && !self.is_empty()
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn raw_weights(&self) -> &[f64] {
        &self.raw_weights
    }

    pub fn norm_weights(&self) -> &[f64] {
        &self.norm_weights
    }

    pub fn source_ids(&self) -> &[usize] {
        &self.source_ids
    }

    /// `(1/n) Σ wᵢ`, computed from log weights.
    pub fn mean_weight(&self) -> f64 {
        mean_exp(&self.log_weights)
    }

    pub fn weight_stats(&self) -> WeightStats {
        let max_norm_weight = self.norm_weights.iter().copied().fold(0.0, f64::max);
        WeightStats {
            max_norm_weight,
            raw_weight_variance: population_variance(&self.raw_weights),
        }
    }
}

/// Summary of a weight vector carried in every report row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightStats {
    pub max_norm_weight: f64,
    pub raw_weight_variance: f64,
}

/// Output of one estimator run.
#[derive(Debug, Clone)]
pub struct EstimateReport {
    pub estimator: String,
    pub estimate: Vec<f64>,
    pub n_samples: usize,
    pub z_hat: Option<f64>,
    pub weight_stats: Option<WeightStats>,
    pub rng: RngStream,
    /// The weighted draws behind the estimate, when a single set produced it.
    pub samples: Option<WeightedSampleSet>,
    /// Secondary quantities, e.g. `inverse_z` for reciprocal IS.
    pub extras: BTreeMap<&'static str, f64>,
    pub noise_scale: Option<f64>,
}

impl EstimateReport {
    pub(crate) fn new(
        estimator: &str,
        estimate: Vec<f64>,
        n_samples: usize,
        rng: RngStream,
    ) -> Self {
        Self {
            estimator: estimator.to_string(),
            estimate,
            n_samples,
            z_hat: None,
            weight_stats: None,
            rng,
            samples: None,
            extras: BTreeMap::new(),
            noise_scale: None,
        }
    }

    pub(crate) fn with_samples(mut self, ws: WeightedSampleSet) -> Self {
        if ws.is_weighted() {
            self.weight_stats = Some(ws.weight_stats());
        }
        self.samples = Some(ws);
        self
    }

    /// First (or only) component of the estimate.
    pub fn value(&self) -> f64 {
        self.estimate[0]
    }

    pub const CSV_HEADER: &'static str =
        "estimator,n,seed,stream,estimate,z_hat,max_norm_weight,raw_weight_variance";

    /// One CSV record; vector estimates are joined with `;`.
    pub fn to_csv_row(&self) -> String {
        let est = self
            .estimate
            .iter()
            .map(|v| fmt_num(*v))
            .collect::<Vec<_>>()
            .join(";");
        let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{}",
            self.estimator,
            self.n_samples,
            self.rng.seed,
            self.rng.stream_id,
            est,
            opt(self.z_hat),
            opt(self.weight_stats.map(|w| w.max_norm_weight)),
            opt(self.weight_stats.map(|w| w.raw_weight_variance)),
        )
    }
}

/// Shortest round-trip decimal representation.
pub fn fmt_num(v: f64) -> String {
    format!("{v:?}")
}

pub(crate) fn require_n(n: usize, what: &str) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument(format!("{what} must be at least 1")));
    }
    Ok(())
}

/// Splits a budget into `parts` near-equal shares, earlier shares first.
pub fn split_budget(n: usize, parts: usize) -> Vec<usize> {
    let base = n / parts;
    let extra = n % parts;
    (0..parts).map(|k| base + usize::from(k < extra)).collect()
}

/// `(1/n) Σ exp(xᵢ)` without overflow in the intermediate sum.
pub fn mean_exp(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let top = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return top.exp();
    }
    let s: f64 = xs.iter().map(|x| (x - top).exp()).sum();
    top.exp() * (s / xs.len() as f64)
}

/// Mean as `x₀ + Σ(xᵢ - x₀)/n`: exact for constant inputs.
pub fn centered_mean(xs: &[f64]) -> f64 {
    let x0 = xs[0];
    x0 + xs.iter().map(|x| x - x0).sum::<f64>() / xs.len() as f64
}

pub fn population_variance(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = centered_mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

/// Unbiased (n - 1) sample variance.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = centered_mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// `log π(θ) - log q(θ)`, rejecting draws where `q` vanishes.
#[inline]
pub(crate) fn log_ratio(log_num: f64, log_den: f64, theta: &[f64]) -> Result<f64> {
    if log_num.is_nan() || log_den.is_nan() || log_num == f64::INFINITY || log_den == f64::INFINITY
    {
        let value = if log_num.is_finite() {
            log_den
        } else {
            log_num
        };
        return Err(Error::NonFiniteEvaluation {
            at: theta.to_vec(),
            value,
        });
    }
    if log_den == f64::NEG_INFINITY {
        return Err(Error::SupportViolation { at: theta.to_vec() });
    }
    Ok(log_num - log_den)
}

/// `n` draws from `q`, flattened.
pub(crate) fn draw_many(q: &ProposalModel, n: usize, rng: &mut McRng) -> Vec<f64> {
    let d = q.dim();
    let mut out = vec![0.0; n * d];
    for chunk in out.chunks_exact_mut(d) {
        q.draw_into(rng, chunk);
    }
    out
}

/// Draws `n` points from `q` and weights them by `π/q`.
pub(crate) fn weighted_draws(
    target: &TargetModel,
    q: &ProposalModel,
    n: usize,
    rng: &mut McRng,
    source: usize,
) -> Result<WeightedSampleSet> {
    let d = q.dim();
    let draws = draw_many(q, n, rng);
    let log_w = draws
        .chunks_exact(d)
        .map(|th| log_ratio(target.log_density(th), q.log_density(th), th))
        .collect::<Result<Vec<_>>>()?;
    Ok(WeightedSampleSet::unweighted(d, draws, vec![source; n]).with_log_weights(log_w))
}

/// Self-normalized average `Σ w̄ᵢ f(θᵢ)` of every component, centred on the
/// first draw and clamped to the range of `f` over the draws.
pub(crate) fn snis_reduce<F: Integrand + ?Sized>(
    ws: &WeightedSampleSet,
    f: &F,
) -> Result<Vec<f64>> {
    let p = f.components();
    let nw = ws.norm_weights();
    if nw.is_empty() || nw.iter().all(|w| *w == 0.0) {
        return Err(Error::AllWeightsZero);
    }
    let mut vals = vec![0.0; p];
    let mut first = vec![0.0; p];
    let mut lo = vec![f64::INFINITY; p];
    let mut hi = vec![f64::NEG_INFINITY; p];
    let mut acc = vec![0.0; p];
    f.eval_into(ws.draw(0), &mut first);
    for (i, th) in ws.draws().enumerate() {
        f.eval_into(th, &mut vals);
        for k in 0..p {
            let v = vals[k];
            if !v.is_finite() {
                return Err(Error::NonFiniteEvaluation {
                    at: th.to_vec(),
                    value: v,
                });
            }
            lo[k] = lo[k].min(v);
            hi[k] = hi[k].max(v);
            acc[k] += nw[i] * (v - first[k]);
        }
    }
    let total: f64 = nw.iter().sum();
    Ok((0..p)
        .map(|k| (first[k] + acc[k] / total).clamp(lo[k], hi[k]))
        .collect())
}
