//! Estimators of the normalizing constant beyond plain IS.
//!
//! The auxiliary density `φ` is always passed as a log-density field. It
//! must be normalized for reciprocal IS and umbrella sampling; in bridge
//! sampling its constant cancels.

use super::{draw_many, log_ratio, mean_exp, require_n, EstimateReport, WeightedSampleSet};
use crate::density::{ProposalModel, TargetModel};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::{grid_sampler, Grid1D, Tabulation};
use crate::rng::{McRng, RngStream};

/// Outcome of an iterative scheme: the final estimate plus `Ẑ⁽ᵗ⁾` per step.
#[derive(Debug, Clone)]
pub struct IterativeResult {
    pub report: EstimateReport,
    pub trace: Vec<f64>,
    pub converged: bool,
}

/// Relative-change stopping tolerance used when the caller has no preference.
pub const DEFAULT_REL_TOL: f64 = 1e-3;

impl IterativeResult {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    /// `iteration,z_hat` rows, iterations counted from 1.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iteration,z_hat\n");
        for (t, z) in self.trace.iter().enumerate() {
            out.push_str(&format!("{},{}\n", t + 1, super::fmt_num(*z)));
        }
        out
    }
}

fn exact_draws(
    target: &TargetModel,
    n: usize,
    rng: &mut McRng,
    who: &str,
) -> Result<(usize, Vec<f64>)> {
    let s = target.exact_sampler().ok_or_else(|| {
        Error::CapabilityError(format!("{who} needs an exact sampler for the target"))
    })?;
    let d = s.dim();
    let mut out = vec![0.0; n * d];
    for chunk in out.chunks_exact_mut(d) {
        s.draw_into(rng, chunk);
    }
    Ok((d, out))
}

fn log_ratios(
    d: usize,
    draws: &[f64],
    num: &ScalarField,
    den: impl Fn(&[f64]) -> f64,
) -> Result<Vec<f64>> {
    draws
        .chunks_exact(d)
        .map(|th| log_ratio(num.eval(th), den(th), th))
        .collect()
}

/// Reciprocal IS: `1/Ẑ = (1/n) Σ φ(θᵢ)/π(θᵢ)` with `θᵢ ~ π̄`.
///
/// `extras["inverse_z"]` holds the mean ratio itself.
pub fn ris_estimate(
    target: &TargetModel,
    log_phi: &ScalarField,
    n: usize,
    rng: RngStream,
) -> Result<EstimateReport> {
    require_n(n, "n")?;
    let (d, draws) = exact_draws(target, n, &mut rng.rng(), "ris_estimate")?;
    let lr = log_ratios(d, &draws, log_phi, |th| target.log_density(th))?;
    let inv = mean_exp(&lr);
    if !(inv > 0.0) || !inv.is_finite() {
        return Err(Error::DegenerateEstimate(format!(
            "mean of phi/pi over draws is {inv}"
        )));
    }
    let z = 1.0 / inv;
    let ws = WeightedSampleSet::unweighted(d, draws, vec![0; n]).with_log_weights(lr);
    let mut rep = EstimateReport::new("ris", vec![z], n, rng).with_samples(ws);
    rep.z_hat = Some(z);
    rep.extras.insert("inverse_z", inv);
    Ok(rep)
}

/// Ratio (umbrella) sampling: `Ẑ = Σ π(zᵢ)/q(zᵢ) / Σ φ(zᵢ)/q(zᵢ)` with `zᵢ ~ q`.
pub fn umbrella_estimate(
    target: &TargetModel,
    log_phi: &ScalarField,
    q: &ProposalModel,
    n: usize,
    rng: RngStream,
) -> Result<EstimateReport> {
    require_n(n, "n")?;
    let draws = draw_many(q, n, &mut rng.rng());
    let d = q.dim();
    let lw_pi = log_ratios(d, &draws, target.log_unnorm(), |th| q.log_density(th))?;
    let lw_phi = log_ratios(d, &draws, log_phi, |th| q.log_density(th))?;
    let num = mean_exp(&lw_pi);
    let den = mean_exp(&lw_phi);
    if !(den > 0.0) {
        return Err(Error::DegenerateEstimate(
            "phi/q vanishes at every draw".into(),
        ));
    }
    let z = num / den;
    let ws = WeightedSampleSet::unweighted(d, draws, vec![0; n]).with_log_weights(lw_pi);
    let mut rep = EstimateReport::new("umbrella", vec![z], n, rng).with_samples(ws);
    rep.z_hat = Some(z);
    rep.extras.insert("denominator", den);
    Ok(rep)
}

fn rel_change(new: f64, old: f64) -> f64 {
    ((new - old) / old).abs()
}

/// Iterated umbrella sampling. Step `t` estimates `Ẑ⁽ᵗ⁾` with the current
/// proposal on branch `t - 1` of `rng`, then rebuilds the proposal on `grid`
/// as `q ∝ |π - Ẑ⁽ᵗ⁾ φ|`. If that density has no mass left (the target and
/// `Ẑφ` agree everywhere) the proposal is kept.
///
/// Stops when the relative change of `Ẑ` drops below `rel_tol`, or after
/// `t_max` steps. An infinite `rel_tol` runs exactly one step.
#[allow(clippy::too_many_arguments)]
pub fn umbrella_iterative(
    target: &TargetModel,
    log_phi: &ScalarField,
    q_init: &ProposalModel,
    grid: &Grid1D,
    n: usize,
    t_max: usize,
    rel_tol: f64,
    rng: RngStream,
) -> Result<IterativeResult> {
    require_n(t_max, "t_max")?;
    let mut q = q_init.clone();
    let mut trace = Vec::with_capacity(t_max);
    let mut converged = false;
    let mut last = None;
    let pi = target.density_field();
    let phi = log_phi.exp();
    for t in 1..=t_max {
        let rep = umbrella_estimate(target, log_phi, &q, n, rng.branch(t as u64 - 1))?;
        let z = rep.value();
        let prev = trace.last().copied();
        trace.push(z);
        last = Some(rep);
        if rel_tol.is_infinite() || prev.is_some_and(|p| rel_change(z, p) < rel_tol) {
            converged = true;
            break;
        }
        if t == t_max {
            break;
        }
        let (p, f) = (pi.clone(), phi.clone());
        let resid = ScalarField::scalar(move |x| (p.eval1(x) - z * f.eval1(x)).abs());
        let values = grid.tabulate(&resid)?;
        let pi_mass = Tabulation {
            grid: *grid,
            values: grid.tabulate(&pi)?,
        }
        .integral();
        let mass = Tabulation {
            grid: *grid,
            values,
        }
        .integral();
        if mass > 1e-10 * pi_mass {
            q = grid_sampler(grid, &resid)?.into_proposal();
        }
    }
    let mut report = last.expect("at least one iteration");
    report.estimator = "umbrella_iterative".into();
    Ok(IterativeResult {
        report,
        trace,
        converged,
    })
}

/// Bridge sampling with bridge density `φ`:
/// `Ẑ = mean_{z~q}[φ/q] / mean_{θ~π̄}[φ/π]`.
///
/// The `n1` target draws come from branch 0 of `rng` and the `n2` proposal
/// draws from branch 1, so with `φ = q` the denominator is the reciprocal IS
/// estimate on the same stream.
pub fn bridge_estimate(
    target: &TargetModel,
    q: &ProposalModel,
    log_phi: &ScalarField,
    n1: usize,
    n2: usize,
    rng: RngStream,
) -> Result<EstimateReport> {
    require_n(n1, "n1")?;
    require_n(n2, "n2")?;
    let (d, theta) = exact_draws(target, n1, &mut rng.branch(0).rng(), "bridge_estimate")?;
    let zs = draw_many(q, n2, &mut rng.branch(1).rng());
    let den = mean_exp(&log_ratios(d, &theta, log_phi, |th| {
        target.log_density(th)
    })?);
    let num = mean_exp(&log_ratios(d, &zs, log_phi, |th| q.log_density(th))?);
    if !(den > 0.0) || !den.is_finite() {
        return Err(Error::DegenerateEstimate(format!(
            "bridge denominator is {den}"
        )));
    }
    let z = num / den;
    let mut rep = EstimateReport::new("bridge", vec![z], n1 + n2, rng);
    rep.z_hat = Some(z);
    rep.extras.insert("numerator", num);
    rep.extras.insert("denominator", den);
    Ok(rep)
}

/// Fixed-point iteration for the optimal bridge, reusing one set of draws:
///
/// `Ẑ⁽ᵗ⁾ = mean_{z~q}[1/(N₁ + N₂ Ẑ⁽ᵗ⁻¹⁾ q/π)] / mean_{θ~π̄}[1/(N₁ π/q + N₂ Ẑ⁽ᵗ⁻¹⁾)]`.
///
/// Stops when `|Ẑ⁽ᵗ⁾ - Ẑ⁽ᵗ⁻¹⁾| / Ẑ⁽ᵗ⁻¹⁾ < rel_tol` (with `Ẑ⁽⁰⁾ = z_init`) or
/// after `t_max` steps.
#[allow(clippy::too_many_arguments)]
pub fn bridge_iterative(
    target: &TargetModel,
    q: &ProposalModel,
    n1: usize,
    n2: usize,
    z_init: f64,
    t_max: usize,
    rel_tol: f64,
    rng: RngStream,
) -> Result<IterativeResult> {
    require_n(n1, "n1")?;
    require_n(n2, "n2")?;
    require_n(t_max, "t_max")?;
    if !(z_init > 0.0) || !z_init.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "z_init must be positive and finite, got {z_init}"
        )));
    }
    let (d, theta) = exact_draws(target, n1, &mut rng.branch(0).rng(), "bridge_iterative")?;
    let zs = draw_many(q, n2, &mut rng.branch(1).rng());
    // log(q/π) at both sample sets
    let lr_theta = theta
        .chunks_exact(d)
        .map(|th| {
            let lp = target.log_density(th);
            if lp == f64::NEG_INFINITY {
                return Err(Error::SupportViolation { at: th.to_vec() });
            }
            let lq = q.log_density(th);
            if lq.is_nan() || lp.is_nan() {
                return Err(Error::NonFiniteEvaluation {
                    at: th.to_vec(),
                    value: f64::NAN,
                });
            }
            Ok(lq - lp)
        })
        .collect::<Result<Vec<_>>>()?;
    let lr_z = log_ratios(d, &zs, q.log_density_field(), |th| target.log_density(th))?;
    let (a, b) = (n1 as f64, n2 as f64);
    let mut z = z_init;
    let mut trace = Vec::with_capacity(t_max);
    let mut converged = false;
    for _ in 0..t_max {
        let num = lr_z
            .iter()
            .map(|l| 1.0 / (a + b * z * l.exp()))
            .sum::<f64>()
            / b;
        let den = lr_theta
            .iter()
            .map(|l| 1.0 / (a * (-l).exp() + b * z))
            .sum::<f64>()
            / a;
        if !(den > 0.0) || !num.is_finite() {
            return Err(Error::DegenerateEstimate(format!(
                "bridge iteration produced {num}/{den}"
            )));
        }
        let next = num / den;
        trace.push(next);
        let done = rel_change(next, z) < rel_tol;
        z = next;
        if done {
            converged = true;
            break;
        }
    }
    let mut rep = EstimateReport::new("bridge_iterative", vec![z], n1 + n2, rng);
    rep.z_hat = Some(z);
    Ok(IterativeResult {
        report: rep,
        trace,
        converged,
    })
}
