//! Multiple-proposal estimators.
//!
//! The two- and three-proposal estimators split `f = f₊ - f₋` and give each
//! part (and, for the self-normalized forms, `Z`) its own proposal and its
//! own independent draws. A branch whose part vanishes identically is passed
//! as `None`: it contributes exactly 0, consumes no draws, and its budget is
//! handed to the live branch.
//!
//! Multiple importance sampling draws a fixed number of points from every
//! proposal of a [`ProposalBank`] (deterministic mixture sampling, no random
//! component selection). Weights use either the proposal that produced each
//! draw or the whole mixture. With `K` draws from each of `R` proposals the
//! optimal denominator `(1/RK) Σ_r Σ_k q_r(θ)` collapses to `(1/R) Σ_r q_r(θ)`;
//! with per-proposal counts `K_r` the count-weighted mixture
//! `Σ_r (K_r/N) q_r(θ)` is used.

use crate::density::{ProposalModel, TargetModel};
use crate::error::{Error, Result};
use crate::estimators::{
    draw_many, log_ratio, mean_exp, require_n, snis_reduce, EstimateReport, WeightedSampleSet,
};
use crate::field::ScalarField;
use crate::rng::{McRng, RngStream};

/// `f₊ = max(0, f)` and `f₋ = max(0, -f)`.
#[derive(Debug, Clone)]
pub struct PositivisedPair {
    pub f_plus: ScalarField,
    pub f_minus: ScalarField,
}

pub fn positivise(f: &ScalarField) -> PositivisedPair {
    PositivisedPair {
        f_plus: f.map(|v| v.max(0.0)),
        f_minus: f.map(|v| (-v).max(0.0)),
    }
}

/// `(1/n) Σ g(θᵢ) π(θᵢ)/q(θᵢ)` with `θᵢ ~ q`, plus its weighted draws.
fn weighted_mean(
    target: &TargetModel,
    q: &ProposalModel,
    g: &ScalarField,
    n: usize,
    rng: &mut McRng,
) -> Result<(f64, WeightedSampleSet)> {
    let d = q.dim();
    let draws = draw_many(q, n, rng);
    let mut terms = Vec::with_capacity(n);
    let mut log_w = Vec::with_capacity(n);
    for th in draws.chunks_exact(d) {
        let lw = log_ratio(target.log_density(th), q.log_density(th), th)?;
        let v = g.eval(th);
        if !v.is_finite() {
            return Err(Error::NonFiniteEvaluation {
                at: th.to_vec(),
                value: v,
            });
        }
        terms.push(if v == 0.0 { 0.0 } else { v * lw.exp() });
        log_w.push(lw);
    }
    let mean = terms.iter().sum::<f64>() / n as f64;
    Ok((
        mean,
        WeightedSampleSet::unweighted(d, draws, vec![0; n]).with_log_weights(log_w),
    ))
}

fn branch_budgets(live: [bool; 2], n: [usize; 2]) -> [usize; 2] {
    match live {
        [true, false] => [n[0] + n[1], 0],
        [false, true] => [0, n[0] + n[1]],
        _ => n,
    }
}

/// Two-proposal IS: `Î = Î₊ - Î₋`, with `Î₊` from `n1` draws of `q1` and `Î₋`
/// from `n2` draws of `q2`. Needs the target's `Z`.
///
/// The positive branch uses branch 0 of `rng`, the negative branch branch 1.
#[allow(clippy::too_many_arguments)]
pub fn is2q_estimate(
    target: &TargetModel,
    q1: Option<&ProposalModel>,
    q2: Option<&ProposalModel>,
    f: &ScalarField,
    n1: usize,
    n2: usize,
    rng: RngStream,
) -> Result<EstimateReport> {
    let z = target.known_z().ok_or_else(|| {
        Error::CapabilityError("is2q_estimate needs the normalizing constant".into())
    })?;
    let pair = positivise(f);
    let [n1, n2] = branch_budgets([q1.is_some(), q2.is_some()], [n1, n2]);
    let mut parts = [0.0; 2];
    let mut reports = Vec::new();
    for (k, (q, g, n)) in [(q1, &pair.f_plus, n1), (q2, &pair.f_minus, n2)]
        .into_iter()
        .enumerate()
    {
        if let Some(q) = q {
            require_n(n, "branch budget")?;
            let (m, ws) = weighted_mean(target, q, g, n, &mut rng.branch(k as u64).rng())?;
            parts[k] = m / z;
            reports.push(ws);
        }
    }
    let mut rep = EstimateReport::new("is2q", vec![parts[0] - parts[1]], n1 + n2, rng);
    rep.z_hat = Some(z);
    rep.extras.insert("i_plus", parts[0]);
    rep.extras.insert("i_minus", parts[1]);
    if reports.len() == 1 {
        rep = rep.with_samples(reports.pop().unwrap());
    }
    Ok(rep)
}

/// `Ê / Ẑ` with `Ê = (1/n1) Σ f π/q1` over draws of `q1` (branch 0) and
/// `Ẑ = (1/n2) Σ π/q2` over draws of `q2` (branch 1).
pub fn snis2q_estimate(
    target: &TargetModel,
    q1: &ProposalModel,
    q2: &ProposalModel,
    f: &ScalarField,
    n1: usize,
    n2: usize,
    rng: RngStream,
) -> Result<EstimateReport> {
    require_n(n1, "n1")?;
    require_n(n2, "n2")?;
    let (e, _) = weighted_mean(target, q1, f, n1, &mut rng.branch(0).rng())?;
    let (z, ws) = weighted_mean(
        target,
        q2,
        &ScalarField::constant(q2.dim(), 1.0),
        n2,
        &mut rng.branch(1).rng(),
    )?;
    if !(z > 0.0) {
        return Err(Error::DegenerateEstimate(
            "denominator estimate is zero".into(),
        ));
    }
    let mut rep = EstimateReport::new("snis2q", vec![e / z], n1 + n2, rng).with_samples(ws);
    rep.z_hat = Some(z);
    rep.extras.insert("numerator", e);
    Ok(rep)
}

/// `(Ê₊ - Ê₋) / Ẑ` with three independent draw sets: `q1` for `f₊π`
/// (branch 0), `q3` for `π` (branch 1) and `q2` for `f₋π` (branch 2).
///
/// A `None` positive or negative proposal marks an empty branch.
#[allow(clippy::too_many_arguments)]
pub fn snis3q_estimate(
    target: &TargetModel,
    q1: Option<&ProposalModel>,
    q2: Option<&ProposalModel>,
    q3: &ProposalModel,
    f: &ScalarField,
    n1: usize,
    n2: usize,
    n3: usize,
    rng: RngStream,
) -> Result<EstimateReport> {
    require_n(n3, "n3")?;
    let pair = positivise(f);
    let [n1, n2] = branch_budgets([q1.is_some(), q2.is_some()], [n1, n2]);
    let mut e = [0.0; 2];
    for (k, (q, g, n, b)) in [(q1, &pair.f_plus, n1, 0), (q2, &pair.f_minus, n2, 2)]
        .into_iter()
        .enumerate()
    {
        if let Some(q) = q {
            require_n(n, "branch budget")?;
            e[k] = weighted_mean(target, q, g, n, &mut rng.branch(b).rng())?.0;
        }
    }
    let (z, ws) = weighted_mean(
        target,
        q3,
        &ScalarField::constant(q3.dim(), 1.0),
        n3,
        &mut rng.branch(1).rng(),
    )?;
    if !(z > 0.0) {
        return Err(Error::DegenerateEstimate(
            "denominator estimate is zero".into(),
        ));
    }
    let mut rep =
        EstimateReport::new("snis3q", vec![(e[0] - e[1]) / z], n1 + n2 + n3, rng).with_samples(ws);
    rep.z_hat = Some(z);
    rep.extras.insert("e_plus", e[0]);
    rep.extras.insert("e_minus", e[1]);
    Ok(rep)
}

/// Ordered proposals with a fixed number of draws from each.
#[derive(Debug, Clone)]
pub struct ProposalBank {
    proposals: Vec<ProposalModel>,
    counts: Vec<usize>,
}

impl ProposalBank {
    /// `k` draws from every proposal.
    pub fn new(proposals: Vec<ProposalModel>, k: usize) -> Result<Self> {
        let counts = vec![k; proposals.len()];
        Self::with_counts(proposals, counts)
    }

    /// `counts[r]` draws from proposal `r`; encodes rational mixture weights.
    pub fn with_counts(proposals: Vec<ProposalModel>, counts: Vec<usize>) -> Result<Self> {
        if proposals.is_empty() {
            return Err(Error::InvalidArgument("proposal bank is empty".into()));
        }
        if counts.len() != proposals.len() || counts.contains(&0) {
            return Err(Error::InvalidArgument(
                "every proposal needs a positive draw count".into(),
            ));
        }
        let d = proposals[0].dim();
        if proposals.iter().any(|q| q.dim() != d) {
            return Err(Error::InvalidArgument(
                "proposals differ in dimension".into(),
            ));
        }
        Ok(Self { proposals, counts })
    }

    pub fn proposals(&self) -> &[ProposalModel] {
        &self.proposals
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.proposals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.proposals.is_empty()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn dim(&self) -> usize {
        self.proposals[0].dim()
    }

    /// `log Σ_r (K_r/N) q_r(θ)`.
    pub fn log_mixture_density(&self, theta: &[f64]) -> f64 {
        let mut top = f64::NEG_INFINITY;
        for q in &self.proposals {
            top = top.max(q.log_density(theta));
        }
        if !top.is_finite() {
            return top;
        }
        let s: f64 = self
            .proposals
            .iter()
            .zip(&self.counts)
            .map(|(q, k)| *k as f64 * (q.log_density(theta) - top).exp())
            .sum();
        top + (s / self.total() as f64).ln()
    }
}

/// Which density divides `π` in the multiple-proposal weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MisScheme {
    /// `ψ = q_r` for a draw from proposal `r`.
    Standard,
    /// `ψ` = the bank's mixture density.
    FullDm,
}

impl std::str::FromStr for MisScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Self::Standard),
            "full-dm" | "full_dm" => Ok(Self::FullDm),
            _ => Err(Error::InvalidArgument(format!(
                "unknown MIS weighting scheme '{s}'"
            ))),
        }
    }
}

/// Exactly `K_r` draws from proposal `r`, in bank order, tagged by source.
pub fn dm_sample(bank: &ProposalBank, rng: RngStream) -> WeightedSampleSet {
    let mut r = rng.rng();
    let d = bank.dim();
    let mut draws = Vec::with_capacity(bank.total() * d);
    let mut ids = Vec::with_capacity(bank.total());
    for (i, (q, k)) in bank.proposals.iter().zip(&bank.counts).enumerate() {
        draws.extend(draw_many(q, *k, &mut r));
        ids.extend(std::iter::repeat_n(i, *k));
    }
    WeightedSampleSet::unweighted(d, draws, ids)
}

/// Attaches `π/ψ` weights to draws from [`dm_sample`] on the same bank.
pub fn mis_weights(
    bank: &ProposalBank,
    draws: WeightedSampleSet,
    target: &TargetModel,
    scheme: MisScheme,
) -> Result<WeightedSampleSet> {
    let log_w = draws
        .draws()
        .zip(draws.source_ids())
        .map(|(th, &src)| {
            let psi = match scheme {
                MisScheme::Standard => bank.proposals[src].log_density(th),
                MisScheme::FullDm => bank.log_mixture_density(th),
            };
            log_ratio(target.log_density(th), psi, th)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(draws.with_log_weights(log_w))
}

/// Self-normalized estimate over the pooled, MIS-weighted draws.
pub fn mis_estimate(
    bank: &ProposalBank,
    target: &TargetModel,
    f: &ScalarField,
    scheme: MisScheme,
    rng: RngStream,
) -> Result<EstimateReport> {
    let ws = mis_weights(bank, dm_sample(bank, rng), target, scheme)?;
    let est = snis_reduce(&ws, f)?;
    let name = match scheme {
        MisScheme::Standard => "mis_standard",
        MisScheme::FullDm => "mis_full_dm",
    };
    let mut rep = EstimateReport::new(name, est, bank.total(), rng);
    rep.z_hat = Some(mean_exp(ws.log_weights()));
    Ok(rep.with_samples(ws))
}
