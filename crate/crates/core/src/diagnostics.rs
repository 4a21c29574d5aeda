//! Divergences, effective sample sizes, and closed-form variance curves.
//!
//! The curves are for the Gaussian benchmark: `π(θ) = exp(-θ²/2)`, so
//! `Z = √(2π)`, with a `N(0, h²)` proposal (IS of `Z`) or a `N(0, h²)`
//! auxiliary density under draws from `π̄` (reciprocal IS of `1/Z`).

use std::f64::consts::PI;
use std::fmt;

use crate::density::{ProposalModel, TargetModel};
use crate::error::{Error, Result};
use crate::estimators::{population_variance, WeightedSampleSet};
use crate::field::ScalarField;
use crate::grid::{quadrature_integrate, target_z, Grid1D};

/// A real number, `+∞`, or a value outside the formula's domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    PosInfinity,
    Undefined,
}

impl ExtendedReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    /// `+∞` as `f64::INFINITY`, undefined as NaN.
    pub fn to_f64(self) -> f64 {
        match self {
            ExtendedReal::Finite(v) => v,
            ExtendedReal::PosInfinity => f64::INFINITY,
            ExtendedReal::Undefined => f64::NAN,
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite(v) => write!(f, "{v:?}"),
            ExtendedReal::PosInfinity => f.write_str("inf"),
            ExtendedReal::Undefined => f.write_str("undefined"),
        }
    }
}

/// `Var[Ẑ_IS]` for `q = N(0, h²)`: `(2π/n)(h/√(2 - 1/h²) - 1)`, defined for
/// `h > 1/√2` and infinite at `h = 1/√2`.
pub fn var_is_gaussian(h: f64, n: usize) -> ExtendedReal {
    let d = 2.0 - 1.0 / (h * h);
    if !(h > 0.0) || d < -ASYMPTOTE_TOL {
        ExtendedReal::Undefined
    } else if d <= ASYMPTOTE_TOL {
        ExtendedReal::PosInfinity
    } else {
        ExtendedReal::Finite(2.0 * PI / n as f64 * (h / d.sqrt() - 1.0))
    }
}

/// `Var[r̂]` of reciprocal IS with `φ = N(0, h²)`:
/// `(1/(2πn))(1/(h²√(2/h² - 1)) - 1)`, defined for `0 < h < √2`.
pub fn var_ris_inv_gaussian(h: f64, n: usize) -> ExtendedReal {
    let d = 2.0 / (h * h) - 1.0;
    if !(h > 0.0) || d < -ASYMPTOTE_TOL {
        ExtendedReal::Undefined
    } else if d <= ASYMPTOTE_TOL {
        ExtendedReal::PosInfinity
    } else {
        ExtendedReal::Finite((1.0 / (h * h * d.sqrt()) - 1.0) / (2.0 * PI * n as f64))
    }
}

// relative rounding slack when `h` is given as a rounded 1/√2 or √2
const ASYMPTOTE_TOL: f64 = 1e-12;

fn normalized(target: &TargetModel, grid: &Grid1D) -> Result<ScalarField> {
    let lz = target_z(target, grid)?.ln();
    Ok(target.log_unnorm().map(move |l| (l - lz).exp()))
}

/// `∫ (p - q)² / q` on the grid, rejecting points where `q = 0 < p`.
fn pearson(p: &ScalarField, q: &ScalarField, grid: &Grid1D) -> Result<f64> {
    for x in grid.abscissae() {
        if q.eval1(x) == 0.0 && p.eval1(x) > 0.0 {
            return Err(Error::SupportViolation { at: vec![x] });
        }
    }
    let (p, q) = (p.clone(), q.clone());
    let g = ScalarField::scalar(move |x| {
        let (a, b) = (p.eval1(x), q.eval1(x));
        if b == 0.0 {
            0.0
        } else {
            (a - b) * (a - b) / b
        }
    });
    quadrature_integrate(grid, &g)
}

/// Pearson divergence `D_χ²(π̄, q) = ∫ (π̄ - q)²/q`.
pub fn chi2_divergence(target: &TargetModel, q: &ProposalModel, grid: &Grid1D) -> Result<f64> {
    pearson(&normalized(target, grid)?, &q.density_field(), grid)
}

/// `∫ |a - b|`.
pub fn l1_distance(a: &ScalarField, b: &ScalarField, grid: &Grid1D) -> Result<f64> {
    let (a, b) = (a.clone(), b.clone());
    quadrature_integrate(
        grid,
        &ScalarField::scalar(move |x| (a.eval1(x) - b.eval1(x)).abs()),
    )
}

/// `(∫ |g|^p)^(1/p)`.
pub fn lp_norm(g: &ScalarField, p: f64, grid: &Grid1D) -> Result<f64> {
    let g = g.clone();
    Ok(quadrature_integrate(
        grid,
        &ScalarField::scalar(move |x| g.eval1(x).abs().powf(p)),
    )?
    .powf(1.0 / p))
}

/// `‖π̄ - q‖₂ · ‖(π̄ - q)/q‖₂`, an upper bound on the Pearson divergence.
pub fn holder_bound(target: &TargetModel, q: &ProposalModel, grid: &Grid1D) -> Result<f64> {
    let p = normalized(target, grid)?;
    let qd = q.density_field();
    let (p1, q1) = (p.clone(), qd.clone());
    let diff = ScalarField::scalar(move |x| p1.eval1(x) - q1.eval1(x));
    let rel = ScalarField::scalar(move |x| {
        let b = qd.eval1(x);
        if b == 0.0 {
            0.0
        } else {
            (p.eval1(x) - b) / b
        }
    });
    Ok(lp_norm(&diff, 2.0, grid)? * lp_norm(&rel, 2.0, grid)?)
}

/// `ρ = E_q[(π̄/q)²] = ∫ π̄²/q` by quadrature.
pub fn rho_quadrature(target: &TargetModel, q: &ProposalModel, grid: &Grid1D) -> Result<f64> {
    let p = normalized(target, grid)?;
    let qd = q.density_field();
    let g = ScalarField::scalar(move |x| {
        let (a, b) = (p.eval1(x), qd.eval1(x));
        if a == 0.0 {
            0.0
        } else {
            a * a / b
        }
    });
    quadrature_integrate(grid, &g)
}

/// `ρ` as the empirical second moment of `w/Z`.
pub fn rho_empirical(ws: &WeightedSampleSet, z: f64) -> f64 {
    let w = ws.raw_weights();
    w.iter().map(|v| (v / z) * (v / z)).sum::<f64>() / w.len() as f64
}

/// MSE bound `4 ‖f‖_∞ ρ / n` for self-normalized IS with bounded `f`.
pub fn snis_mse_bound(f_sup: f64, rho: f64, n: usize) -> Result<f64> {
    if !(f_sup > 0.0) || !f_sup.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "the bound needs a finite positive sup|f|, got {f_sup}"
        )));
    }
    if !(rho >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "rho is a second moment of pi/q and is at least 1, got {rho}"
        )));
    }
    Ok(4.0 * f_sup * rho / n as f64)
}

/// Theoretical `ESS/N`: baseline MSE over the estimator's MSE.
pub fn ess_ratio(mse_baseline: f64, mse_estimator: f64) -> f64 {
    mse_baseline / mse_estimator
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightDiagnostics {
    pub var_raw: f64,
    pub max_norm: f64,
    /// `1 / Σ w̄ᵢ²`.
    pub ess_weights: f64,
}

pub fn weight_diagnostics(ws: &WeightedSampleSet) -> WeightDiagnostics {
    let nw = ws.norm_weights();
    let s2: f64 = nw.iter().map(|w| w * w).sum();
    WeightDiagnostics {
        var_raw: population_variance(ws.raw_weights()),
        max_norm: nw.iter().copied().fold(0.0, f64::max),
        ess_weights: if s2 > 0.0 { 1.0 / s2 } else { 0.0 },
    }
}
