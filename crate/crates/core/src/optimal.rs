//! Optimal (unnormalized) proposal densities.
//!
//! [`OptimalSpec`] names a scheme and carries the inputs its formula needs.
//! Unknown constants (`I`, the vector `I`, `Z`, `Ẑ`) are never estimated
//! here: they are explicit plug-ins, filled by the caller from quadrature or
//! from a pilot run. The built fields are nonnegative everywhere and ready
//! for [`grid_sampler`](crate::grid::grid_sampler).
//!
//! | scheme | density |
//! |---|---|
//! | `StdIs` | `|f| π̄` |
//! | `Snis` | `|f - I| π̄` |
//! | `Z` | `π` |
//! | `JointIz` | `π √((f - I)² + Z²)` |
//! | `VectorIs` | `‖f‖₂ π̄` |
//! | `VectorSnis` | `‖f - I‖₂ π̄` |
//! | `MultiTargetIs` | `|f| ‖(π̄₁, …, π̄_M)‖₂` |
//! | `MultiTargetSnis` | `‖(π̄_m (f - I_m))_m‖₂` |
//! | `GeneralIs` | `‖(f_p π̄_p)_p‖₂` |
//! | `GeneralSnis` | `‖(π̄_p (f_p - I_p))_p‖₂` |
//! | `PositivisedPair` | `(f₊ π̄, f₋ π̄)` |
//! | `UmbrellaQ` | `|π - Ẑ φ|` |
//! | `BridgePhi` | `q π / (N₁ π + N₂ Ẑ q)` |
//!
//! Single-target schemes use `π̄` when the target declares `Z` and `π`
//! otherwise; the two differ only by a constant factor.

use rayon::prelude::*;

use crate::density::{ProposalModel, TargetModel};
use crate::error::{Error, Result};
use crate::estimators::sample_variance;
use crate::field::{ScalarField, VectorField};
use crate::grid::{grid_sampler, Grid1D, GridProposal, Tabulation};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    StdIs,
    Snis,
    Z,
    JointIz,
    VectorIs,
    VectorSnis,
    MultiTargetIs,
    MultiTargetSnis,
    GeneralIs,
    GeneralSnis,
    PositivisedPair,
    UmbrellaQ,
    BridgePhi,
}

impl Scheme {
    pub const ALL: [Scheme; 13] = [
        Scheme::StdIs,
        Scheme::Snis,
        Scheme::Z,
        Scheme::JointIz,
        Scheme::VectorIs,
        Scheme::VectorSnis,
        Scheme::MultiTargetIs,
        Scheme::MultiTargetSnis,
        Scheme::GeneralIs,
        Scheme::GeneralSnis,
        Scheme::PositivisedPair,
        Scheme::UmbrellaQ,
        Scheme::BridgePhi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::StdIs => "std_is",
            Scheme::Snis => "snis",
            Scheme::Z => "z",
            Scheme::JointIz => "joint_iz",
            Scheme::VectorIs => "vector_is",
            Scheme::VectorSnis => "vector_snis",
            Scheme::MultiTargetIs => "multi_target_is",
            Scheme::MultiTargetSnis => "multi_target_snis",
            Scheme::GeneralIs => "general_is",
            Scheme::GeneralSnis => "general_snis",
            Scheme::PositivisedPair => "positivised_pair",
            Scheme::UmbrellaQ => "umbrella_q",
            Scheme::BridgePhi => "bridge_phi",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scheme '{s}'")))
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A scheme plus the inputs its formula needs; see the module table.
#[derive(Debug, Clone)]
pub struct OptimalSpec {
    scheme: Scheme,
    targets: Vec<TargetModel>,
    f: Option<ScalarField>,
    f_vec: Option<VectorField>,
    i: Option<f64>,
    i_vec: Option<Vec<f64>>,
    z: Option<f64>,
    z_vec: Option<Vec<f64>>,
    z_hat: Option<f64>,
    log_phi: Option<ScalarField>,
    proposal: Option<ProposalModel>,
    budgets: Option<(usize, usize)>,
}

/// Result of [`OptimalSpec::build`].
#[derive(Debug, Clone)]
pub enum Built {
    Single(ScalarField),
    Pair {
        plus: ScalarField,
        minus: ScalarField,
    },
}

impl Built {
    pub fn single(self) -> Result<ScalarField> {
        match self {
            Built::Single(f) => Ok(f),
            Built::Pair { .. } => Err(Error::SpecError(
                "scheme builds a pair, not a single density".into(),
            )),
        }
    }

    pub fn pair(self) -> Result<(ScalarField, ScalarField)> {
        match self {
            Built::Pair { plus, minus } => Ok((plus, minus)),
            Built::Single(_) => Err(Error::SpecError(
                "scheme builds a single density, not a pair".into(),
            )),
        }
    }
}

fn missing(scheme: Scheme, what: &str) -> Error {
    Error::SpecError(format!("scheme {scheme} requires {what}"))
}

fn norm2(xs: impl Iterator<Item = f64>) -> f64 {
    xs.map(|x| x * x).sum::<f64>().sqrt()
}

impl OptimalSpec {
    pub fn new(scheme: Scheme) -> Self {
        Self {
            scheme,
            targets: Vec::new(),
            f: None,
            f_vec: None,
            i: None,
            i_vec: None,
            z: None,
            z_vec: None,
            z_hat: None,
            log_phi: None,
            proposal: None,
            budgets: None,
        }
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn target(mut self, t: TargetModel) -> Self {
        self.targets = vec![t];
        self
    }

    pub fn targets(mut self, ts: Vec<TargetModel>) -> Self {
        self.targets = ts;
        self
    }

    pub fn f(mut self, f: ScalarField) -> Self {
        self.f = Some(f);
        self
    }

    pub fn f_vec(mut self, f: VectorField) -> Self {
        self.f_vec = Some(f);
        self
    }

    pub fn plug_i(mut self, i: f64) -> Self {
        self.i = Some(i);
        self
    }

    pub fn plug_i_vec(mut self, i: Vec<f64>) -> Self {
        self.i_vec = Some(i);
        self
    }

    pub fn plug_z(mut self, z: f64) -> Self {
        self.z = Some(z);
        self
    }

    /// Normalizing constants of the targets, overriding declared ones.
    pub fn plug_z_vec(mut self, z: Vec<f64>) -> Self {
        self.z_vec = Some(z);
        self
    }

    pub fn plug_z_hat(mut self, z: f64) -> Self {
        self.z_hat = Some(z);
        self
    }

    /// Normalized auxiliary density `φ`, as a log density.
    pub fn log_phi(mut self, phi: ScalarField) -> Self {
        self.log_phi = Some(phi);
        self
    }

    pub fn proposal(mut self, q: ProposalModel) -> Self {
        self.proposal = Some(q);
        self
    }

    pub fn budgets(mut self, n1: usize, n2: usize) -> Self {
        self.budgets = Some((n1, n2));
        self
    }

    fn one_target(&self) -> Result<&TargetModel> {
        match self.targets.as_slice() {
            [t] => Ok(t),
            [] => Err(missing(self.scheme, "a target")),
            _ => Err(Error::SpecError(format!(
                "scheme {} takes exactly one target",
                self.scheme
            ))),
        }
    }

    fn scalar_f(&self) -> Result<ScalarField> {
        self.f
            .clone()
            .ok_or_else(|| missing(self.scheme, "a scalar function f"))
    }

    fn vector_f(&self) -> Result<VectorField> {
        self.f_vec
            .clone()
            .or_else(|| self.f.clone().map(VectorField::from))
            .ok_or_else(|| missing(self.scheme, "a vector function f"))
    }

    fn i_vector(&self, len: usize) -> Result<Vec<f64>> {
        let v = self
            .i_vec
            .clone()
            .or_else(|| self.i.map(|i| vec![i]))
            .ok_or_else(|| missing(self.scheme, "the plug-in vector I"))?;
        if v.len() != len {
            return Err(Error::SpecError(format!(
                "scheme {} needs {len} plug-in components of I, got {}",
                self.scheme,
                v.len()
            )));
        }
        Ok(v)
    }

    /// `log Z_m` for every target, plug-ins first.
    fn log_zs(&self) -> Result<Vec<f64>> {
        if self.targets.is_empty() {
            return Err(missing(self.scheme, "at least one target"));
        }
        if let Some(z) = &self.z_vec {
            if z.len() != self.targets.len() {
                return Err(Error::SpecError(format!(
                    "{} plug-in Z values for {} targets",
                    z.len(),
                    self.targets.len()
                )));
            }
            return Ok(z.iter().map(|v| v.ln()).collect());
        }
        self.targets
            .iter()
            .enumerate()
            .map(|(m, t)| {
                t.known_z().map(f64::ln).ok_or_else(|| {
                    missing(
                        self.scheme,
                        &format!("the normalizing constant Z_{} of target {m}", m + 1),
                    )
                })
            })
            .collect()
    }

    /// `π̄` of a single target (or `π` when its `Z` is unknown).
    fn bar(&self) -> Result<ScalarField> {
        let t = self.one_target()?;
        let lz = self.z.or(t.known_z()).map_or(0.0, f64::ln);
        Ok(t.log_unnorm().map(move |l| (l - lz).exp()))
    }

    /// Pointwise evaluator of every normalized target, with the target count.
    #[allow(clippy::type_complexity)]
    fn bars(&self) -> Result<(usize, impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static)> {
        let lz = self.log_zs()?;
        let logs: Vec<ScalarField> = self
            .targets
            .iter()
            .map(|t| t.log_unnorm().clone())
            .collect();
        let dim = logs[0].dim();
        Ok((dim, move |th: &[f64], out: &mut [f64]| {
            for ((o, l), z) in out.iter_mut().zip(&logs).zip(&lz) {
                *o = (l.eval(th) - z).exp();
            }
        }))
    }

    pub fn build(&self) -> Result<Built> {
        let s = self.scheme;
        let single = |f: ScalarField| Ok(Built::Single(f));
        match s {
            Scheme::StdIs | Scheme::Snis => {
                let f = self.scalar_f()?;
                let i = if s == Scheme::Snis {
                    self.i.ok_or_else(|| missing(s, "the plug-in I"))?
                } else {
                    0.0
                };
                let p = self.bar()?;
                single(ScalarField::new(p.dim(), move |th| {
                    (f.eval(th) - i).abs() * p.eval(th)
                }))
            }
            Scheme::Z => {
                let t = self.one_target()?;
                single(t.density_field())
            }
            Scheme::JointIz => {
                let f = self.scalar_f()?;
                let i = self.i.ok_or_else(|| missing(s, "the plug-in I"))?;
                let z = self.z.ok_or_else(|| missing(s, "the plug-in Z"))?;
                let p = self.one_target()?.density_field();
                single(ScalarField::new(p.dim(), move |th| {
                    p.eval(th) * (f.eval(th) - i).hypot(z)
                }))
            }
            Scheme::VectorIs | Scheme::VectorSnis => {
                let f = self.vector_f()?;
                let i = if s == Scheme::VectorSnis {
                    self.i_vector(f.len())?
                } else {
                    vec![0.0; f.len()]
                };
                let p = self.bar()?;
                single(ScalarField::new(p.dim(), move |th| {
                    let v = f.eval(th);
                    norm2(v.iter().zip(&i).map(|(a, b)| a - b)) * p.eval(th)
                }))
            }
            Scheme::MultiTargetIs | Scheme::MultiTargetSnis => {
                let f = self.scalar_f()?;
                let m = self.targets.len();
                let i = if s == Scheme::MultiTargetSnis {
                    self.i_vector(m)?
                } else {
                    vec![0.0; m]
                };
                let (dim, bars) = self.bars()?;
                single(ScalarField::new(dim, move |th| {
                    let mut buf = vec![0.0; m];
                    bars(th, &mut buf);
                    let fv = f.eval(th);
                    norm2(buf.iter().zip(&i).map(|(p, im)| p * (fv - im)))
                }))
            }
            Scheme::GeneralIs | Scheme::GeneralSnis => {
                let f = self.vector_f()?;
                let p = self.targets.len();
                if f.len() != p {
                    return Err(Error::SpecError(format!(
                        "scheme {s} pairs each of f's {} components with one of {p} targets",
                        f.len()
                    )));
                }
                let i = if s == Scheme::GeneralSnis {
                    self.i_vector(p)?
                } else {
                    vec![0.0; p]
                };
                let (dim, bars) = self.bars()?;
                single(ScalarField::new(dim, move |th| {
                    let mut buf = vec![0.0; p];
                    bars(th, &mut buf);
                    let fv = f.eval(th);
                    norm2(buf.iter().zip(&fv).zip(&i).map(|((b, x), ip)| b * (x - ip)))
                }))
            }
            Scheme::PositivisedPair => {
                let f = self.scalar_f()?;
                let p = self.bar()?;
                let (f2, p2) = (f.clone(), p.clone());
                let dim = p.dim();
                Ok(Built::Pair {
                    plus: ScalarField::new(dim, move |th| f.eval(th).max(0.0) * p.eval(th)),
                    minus: ScalarField::new(dim, move |th| (-f2.eval(th)).max(0.0) * p2.eval(th)),
                })
            }
            Scheme::UmbrellaQ => {
                let p = self.one_target()?.density_field();
                let phi = self
                    .log_phi
                    .clone()
                    .ok_or_else(|| missing(s, "the auxiliary density phi"))?;
                let zh = self.z_hat.ok_or_else(|| missing(s, "the plug-in Z-hat"))?;
                single(ScalarField::new(p.dim(), move |th| {
                    (p.eval(th) - zh * phi.eval(th).exp()).abs()
                }))
            }
            Scheme::BridgePhi => {
                let t = self.one_target()?;
                let q = self
                    .proposal
                    .clone()
                    .ok_or_else(|| missing(s, "the proposal q"))?;
                let zh = self.z_hat.ok_or_else(|| missing(s, "the plug-in Z-hat"))?;
                let (n1, n2) = self
                    .budgets
                    .ok_or_else(|| missing(s, "the budgets n1 and n2"))?;
                let (a, b) = (n1 as f64, n2 as f64);
                let lp = t.log_unnorm().clone();
                // q π / (N₁ π + N₂ Ẑ q) = 1 / (N₁/q + N₂ Ẑ/π)
                single(ScalarField::new(t.dim(), move |th| {
                    let (lp, lq) = (lp.eval(th), q.log_density(th));
                    if lp == f64::NEG_INFINITY || lq == f64::NEG_INFINITY {
                        return 0.0;
                    }
                    1.0 / (a * (-lq).exp() + b * zh * (-lp).exp())
                }))
            }
        }
    }
}

/// Grid proposal for a built density, or `None` when it has no mass on the
/// grid (an empty positivised branch).
pub fn grid_proposal_or_empty(grid: &Grid1D, unnorm: &ScalarField) -> Result<Option<GridProposal>> {
    let values = grid.tabulate(unnorm)?;
    if values.iter().all(|v| *v == 0.0) {
        return Ok(None);
    }
    let mass = Tabulation {
        grid: *grid,
        values,
    }
    .integral();
    if !(mass > 0.0) {
        return Ok(None);
    }
    grid_sampler(grid, unnorm).map(Some)
}

/// What the replication variance of a certified estimator should be.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarianceTarget {
    /// Below the threshold.
    Zero { threshold: f64 },
    /// Within `rel_tol` of a known value, e.g. the SNIS lower bound.
    Value { value: f64, rel_tol: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceCheck {
    pub scheme: Scheme,
    pub runs: usize,
    pub failed_runs: usize,
    pub variance: f64,
    pub target: VarianceTarget,
    pub passed: bool,
}

impl std::fmt::Display for VarianceCheck {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        match self.target {
            VarianceTarget::Zero { threshold } => write!(
                f,
                "{status} {}: variance {:.3e} over {} runs (threshold {threshold:.1e})",
                self.scheme, self.variance, self.runs
            ),
            VarianceTarget::Value { value, rel_tol } => write!(
                f,
                "{status} {}: variance {:.4e} over {} runs, expected {value:.4e} ± {:.0}%",
                self.scheme,
                self.variance,
                self.runs,
                100.0 * rel_tol
            ),
        }
    }
}

/// Runs `runner` on `runs` replication streams of `seed` and compares the
/// sample variance of its outputs with `target`. Failures of individual runs
/// are counted, never propagated.
pub fn variance_check<F>(
    scheme: Scheme,
    target: VarianceTarget,
    runs: usize,
    seed: u64,
    runner: F,
) -> VarianceCheck
where
    F: Fn(RngStream) -> Result<f64> + Sync,
{
    let results: Vec<Result<f64>> = (0..runs as u64)
        .into_par_iter()
        .map(|k| runner(RngStream::replication(seed, k)))
        .collect();
    let values: Vec<f64> = results
        .iter()
        .filter_map(|r| r.as_ref().ok().copied())
        .collect();
    let failed_runs = runs - values.len();
    let variance = if values.len() >= 2 {
        sample_variance(&values)
    } else {
        f64::NAN
    };
    let ok = match target {
        VarianceTarget::Zero { threshold } => variance < threshold,
        VarianceTarget::Value { value, rel_tol } => ((variance - value) / value).abs() <= rel_tol,
    };
    VarianceCheck {
        scheme,
        runs,
        failed_runs,
        variance,
        target,
        passed: ok && failed_runs == 0,
    }
}

/// [`variance_check`] against zero.
pub fn zero_variance_check<F>(
    scheme: Scheme,
    threshold: f64,
    runs: usize,
    seed: u64,
    runner: F,
) -> VarianceCheck
where
    F: Fn(RngStream) -> Result<f64> + Sync,
{
    variance_check(
        scheme,
        VarianceTarget::Zero { threshold },
        runs,
        seed,
        runner,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::is_estimate;

    fn theta() -> ScalarField {
        ScalarField::scalar(|x| x)
    }

    fn probe() -> impl Iterator<Item = f64> {
        (0..2001).map(|i| -8.0 + 16.0 * i as f64 / 2000.0)
    }

    #[test]
    fn std_is_vanishes_at_root_and_is_bimodal() {
        let q = OptimalSpec::new(Scheme::StdIs)
            .target(TargetModel::gaussian(-1.0, 1.0))
            .f(theta())
            .build()
            .unwrap();
        let q = q.single().unwrap();
        assert_eq!(q.eval1(0.0), 0.0);
        let xs: Vec<f64> = (0..801).map(|i| -5.0 + 8.0 * i as f64 / 800.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| q.eval1(*x)).collect();
        let peaks = (1..ys.len() - 1)
            .filter(|&i| ys[i] > ys[i - 1] && ys[i] >= ys[i + 1])
            .count();
        assert_eq!(peaks, 2);
    }

    #[test]
    fn snis_zero_at_mode() {
        let t = TargetModel::gaussian(-1.0, 1.0);
        let q = OptimalSpec::new(Scheme::Snis)
            .target(t.clone())
            .f(theta())
            .plug_i(-1.0)
            .build()
            .unwrap();
        let q = q.single().unwrap();
        assert_eq!(q.eval1(-1.0), 0.0);
        assert!((q.eval1(0.5) - 1.5 * t.density1(0.5)).abs() < 1e-15);
    }

    #[test]
    fn missing_plug_in_is_named() {
        let e = OptimalSpec::new(Scheme::Snis)
            .target(TargetModel::gaussian(0.0, 1.0))
            .f(theta())
            .build()
            .unwrap_err();
        match e {
            Error::SpecError(m) => assert!(m.contains("plug-in I")),
            other => panic!("{other:?}"),
        }
        let e = OptimalSpec::new(Scheme::MultiTargetIs)
            .targets(vec![
                TargetModel::gaussian(0.0, 1.0),
                TargetModel::new(theta(), crate::Support::real_line()),
            ])
            .f(theta())
            .build()
            .unwrap_err();
        assert!(matches!(e, Error::SpecError(m) if m.contains("Z_2")));
    }

    #[test]
    fn joint_iz_at_f_equal_i() {
        let t = TargetModel::gaussian_unnorm(0.0, 1.0);
        let q = OptimalSpec::new(Scheme::JointIz)
            .target(t.clone())
            .f(theta())
            .plug_i(0.5)
            .plug_z(2.0)
            .build();
        let q = q.unwrap().single().unwrap();
        assert!((q.eval1(0.5) - t.density1(0.5) * 2.0).abs() < 1e-15);
    }

    #[test]
    fn vector_is_zero_where_all_components_vanish() {
        let f = VectorField::new(vec![theta(), ScalarField::scalar(|x| x * x)]);
        let q = OptimalSpec::new(Scheme::VectorIs)
            .target(TargetModel::gaussian(0.0, 1.0))
            .f_vec(f)
            .build();
        assert_eq!(q.unwrap().single().unwrap().eval1(0.0), 0.0);
    }

    #[test]
    fn umbrella_q_formula() {
        let t = TargetModel::gaussian_unnorm(0.0, 1.0);
        let phi = ProposalModel::gaussian(1.0, 1.0);
        let q = OptimalSpec::new(Scheme::UmbrellaQ)
            .target(t.clone())
            .log_phi(phi.log_density_field().clone())
            .plug_z_hat(2.5)
            .build()
            .unwrap()
            .single()
            .unwrap();
        for x in probe() {
            assert!((q.eval1(x) - (t.density1(x) - 2.5 * phi.density1(x)).abs()).abs() < 1e-15);
        }
    }

    #[test]
    fn scheme_reductions_pointwise() {
        let t = TargetModel::gaussian_unnorm(0.5, 1.3);
        let f = ScalarField::scalar(|x| x.sin() + 0.2);
        let base = OptimalSpec::new(Scheme::StdIs)
            .target(t.clone())
            .f(f.clone())
            .build()
            .unwrap()
            .single()
            .unwrap();
        let vis = OptimalSpec::new(Scheme::VectorIs)
            .target(t.clone())
            .f_vec(f.clone().into());
        let mti = OptimalSpec::new(Scheme::MultiTargetIs)
            .targets(vec![t.clone()])
            .f(f.clone());
        let gis = OptimalSpec::new(Scheme::GeneralIs)
            .targets(vec![t.clone()])
            .f_vec(f.clone().into());
        let snis = OptimalSpec::new(Scheme::Snis)
            .target(t.clone())
            .f(f.clone())
            .plug_i(0.3);
        let vsn = OptimalSpec::new(Scheme::VectorSnis)
            .target(t.clone())
            .f_vec(f.clone().into())
            .plug_i_vec(vec![0.3]);
        let mts = OptimalSpec::new(Scheme::MultiTargetSnis)
            .targets(vec![t.clone()])
            .f(f.clone())
            .plug_i_vec(vec![0.3]);
        let gsn = OptimalSpec::new(Scheme::GeneralSnis)
            .targets(vec![t.clone()])
            .f_vec(f.into())
            .plug_i_vec(vec![0.3]);
        let sbase = snis.build().unwrap().single().unwrap();
        for (spec, reference) in [
            (vis, &base),
            (mti, &base),
            (gis, &base),
            (vsn, &sbase),
            (mts, &sbase),
            (gsn, &sbase),
        ] {
            let q = spec.build().unwrap().single().unwrap();
            for x in probe() {
                let (a, b) = (q.eval1(x), reference.eval1(x));
                assert!(
                    (a - b).abs() <= 1e-12 * b.abs().max(1e-300),
                    "{} at {x}",
                    spec.scheme()
                );
            }
        }
    }

    #[test]
    fn every_scheme_is_nonnegative() {
        let t = TargetModel::gaussian(-1.0, 1.0);
        let t2 = TargetModel::gaussian(1.0, 0.5);
        let f = ScalarField::scalar(|x| x * x * x - x);
        let fv = VectorField::new(vec![f.clone(), theta()]);
        let q = ProposalModel::gaussian(0.0, 2.0);
        for s in Scheme::ALL {
            let spec = OptimalSpec::new(s)
                .target(t.clone())
                .f(f.clone())
                .f_vec(fv.clone())
                .plug_i(0.1)
                .plug_i_vec(vec![0.1, -0.2])
                .plug_z(1.0)
                .plug_z_hat(0.9)
                .log_phi(q.log_density_field().clone())
                .proposal(q.clone())
                .budgets(10, 20);
            let spec = match s {
                Scheme::MultiTargetIs
                | Scheme::MultiTargetSnis
                | Scheme::GeneralIs
                | Scheme::GeneralSnis => spec.targets(vec![t.clone(), t2.clone()]),
                _ => spec,
            };
            let fields = match spec.build().unwrap() {
                Built::Single(a) => vec![a],
                Built::Pair { plus, minus } => vec![plus, minus],
            };
            for g in fields {
                assert!(probe().all(|x| g.eval1(x) >= 0.0), "{s}");
            }
        }
    }

    #[test]
    fn bridge_phi_is_harmonic_mean() {
        let t = TargetModel::gaussian_unnorm(0.0, 1.0);
        let z = (2.0 * std::f64::consts::PI).sqrt();
        let q = ProposalModel::gaussian(0.0, 1.5);
        let phi = OptimalSpec::new(Scheme::BridgePhi)
            .target(t.clone())
            .proposal(q.clone())
            .plug_z_hat(z)
            .budgets(300, 100)
            .build()
            .unwrap()
            .single()
            .unwrap();
        for x in [-2.0, 0.0, 1.3] {
            let (p, qq) = (t.density1(x), q.density1(x));
            let want = qq * p / (300.0 * p + 100.0 * z * qq);
            assert!((phi.eval1(x) / want - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_variance_for_nonnegative_f() {
        let t = TargetModel::gaussian(0.0, 1.0);
        let f = ScalarField::scalar(|x| x * x);
        let grid = Grid1D::new(-12.0, 12.0, 1 << 14).unwrap();
        let built = OptimalSpec::new(Scheme::StdIs)
            .target(t.clone())
            .f(f.clone())
            .build()
            .unwrap()
            .single()
            .unwrap();
        let q = grid_sampler(&grid, &built).unwrap().into_proposal();
        let check = zero_variance_check(Scheme::StdIs, 1e-18, 50, 3, |rng| {
            Ok(is_estimate(&t, &q, &f, 100, rng)?.value())
        });
        assert!(check.passed, "{check}");
    }

    #[test]
    fn empty_branch_detected() {
        let grid = Grid1D::new(-5.0, 5.0, 256).unwrap();
        let (plus, minus) = OptimalSpec::new(Scheme::PositivisedPair)
            .target(TargetModel::gaussian(0.0, 1.0))
            .f(ScalarField::scalar(|x| x * x + 1.0))
            .build()
            .unwrap()
            .pair()
            .unwrap();
        assert!(grid_proposal_or_empty(&grid, &plus).unwrap().is_some());
        assert!(grid_proposal_or_empty(&grid, &minus).unwrap().is_none());
    }
}
