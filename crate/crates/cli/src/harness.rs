//! Experiment orchestration: oracle truth, proposal construction,
//! replications and the summary row.

use isopt_core::estimators::{
    bridge_estimate, bridge_iterative, fmt_num, is_estimate, mc_estimate, ris_estimate,
    snis_estimate, umbrella_estimate, umbrella_iterative, z_estimate,
};
use isopt_core::grid::{grid_sampler, integrate_split, quadrature_integrate, Grid1D};
use isopt_core::multi::{is2q_estimate, mis_estimate, snis2q_estimate, snis3q_estimate};
use isopt_core::noisy::{
    noisy_is_estimate, noisy_optimal_proposal, noisy_snis_estimate, noisy_z_estimate, z_bar,
};
use isopt_core::optimal::grid_proposal_or_empty;
use isopt_core::{
    EstimateReport, NoisyKind, NoisyTargetModel, OptimalSpec, ProposalBank, ProposalModel,
    RngStream, ScalarField, Scheme, TargetModel, VectorField,
};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, EstimatorKind, ExperimentConfig, PluginMode};
use crate::csv::{csv_field, CsvTable};
use crate::specs::{FSpec, ProposalSpec};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// The config parsed but does not describe a runnable experiment.
    #[error("{0}")]
    Setup(String),
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Setup(_) => 2,
            CliError::Io { .. } => 1,
        }
    }
}

fn setup(context: &str) -> impl Fn(isopt_core::Error) -> CliError + '_ {
    move |e| CliError::Setup(format!("{context}: {e}"))
}

/// Quadrature truth for a target and integrand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Oracle {
    pub z: f64,
    pub i: f64,
    /// `Var_π̄[f]`, the per-draw variance of ideal Monte Carlo.
    pub var_f: f64,
    /// Largest scaled disagreement of `z` and `i` with a double-resolution rerun.
    pub residual: f64,
}

fn moments(
    target: &TargetModel,
    f: &ScalarField,
    grid: &Grid1D,
    cuts: &[f64],
) -> isopt_core::Result<(f64, f64, f64)> {
    let integrate = |g: &ScalarField| {
        if cuts.is_empty() {
            quadrature_integrate(grid, g)
        } else {
            integrate_split(grid, g, cuts)
        }
    };
    let p = target.density_field();
    let z = integrate(&p)?;
    let (p1, f1) = (p.clone(), f.clone());
    let i = integrate(&ScalarField::scalar(move |x| f1.eval1(x) * p1.eval1(x)))? / z;
    let f2 = f.clone();
    let second = integrate(&ScalarField::scalar(move |x| {
        (f2.eval1(x) - i).powi(2) * p.eval1(x)
    }))? / z;
    Ok((z, i, second))
}

impl Oracle {
    /// `cuts` are the singular points of `f`; pieces between them are
    /// integrated separately.
    pub fn compute(
        target: &TargetModel,
        f: &ScalarField,
        grid: &Grid1D,
        cuts: &[f64],
    ) -> isopt_core::Result<Self> {
        let (z, i, var_f) = moments(target, f, grid, cuts)?;
        let fine = grid.with_points(2 * grid.n_points() - 1)?;
        let (z2, i2, _) = moments(target, f, &fine, cuts)?;
        let scaled = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
        Ok(Self {
            z,
            i,
            var_f,
            residual: scaled(z, z2).max(scaled(i, i2)),
        })
    }
}

/// Constants plugged into optimal-proposal formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlugIns {
    pub i: f64,
    pub z: f64,
}

enum Plan {
    Mc,
    Is(ProposalModel),
    Z(ProposalModel),
    Snis(ProposalModel),
    Ris(ScalarField),
    Umbrella {
        log_phi: ScalarField,
        q: ProposalModel,
    },
    UmbrellaIterative {
        log_phi: ScalarField,
        q: ProposalModel,
    },
    Bridge {
        q: ProposalModel,
        log_phi: ScalarField,
        n1: usize,
        n2: usize,
    },
    BridgeIterative {
        q: ProposalModel,
        n1: usize,
        n2: usize,
    },
    Is2q {
        q1: Option<ProposalModel>,
        q2: Option<ProposalModel>,
        n1: usize,
        n2: usize,
    },
    Snis2q {
        q1: ProposalModel,
        q2: ProposalModel,
        n1: usize,
        n2: usize,
    },
    Snis3q {
        q1: Option<ProposalModel>,
        q2: Option<ProposalModel>,
        q3: ProposalModel,
        n: [usize; 3],
    },
    Mis(ProposalBank),
    NoisyZ {
        nt: NoisyTargetModel,
        q: ProposalModel,
    },
    NoisyIs {
        nt: NoisyTargetModel,
        q: ProposalModel,
        z_bar: f64,
    },
    NoisySnis {
        nt: NoisyTargetModel,
        q: ProposalModel,
    },
}

/// A fully constructed experiment, ready to replicate.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub target: TargetModel,
    pub f: ScalarField,
    pub grid: Grid1D,
    pub oracle: Oracle,
    pub plugins: PlugIns,
    plan: Plan,
}

/// Stream id reserved for pilot runs; replications use ids `0..reps`.
const PILOT_STREAM: u64 = u64::MAX;

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self, CliError> {
        let target = config.target.target().map_err(CliError::Setup)?;
        let f_spec = config.f[0].clone();
        let f = f_spec.field();
        let (lo, hi) = target
            .grid_bounds()
            .ok_or_else(|| CliError::Setup("target declares no grid bounds".into()))?;
        let grid = Grid1D::new(lo, hi, config.grid_points).map_err(setup("grid"))?;
        let oracle = Oracle::compute(&target, &f, &grid, &f_spec.breakpoints())
            .map_err(setup("oracle quadrature"))?;
        let plugins = match config.plugin {
            PluginMode::Oracle => PlugIns {
                i: oracle.i,
                z: oracle.z,
            },
            PluginMode::Pilot => pilot(&config, &target, &f, (lo, hi))?,
        };
        let mut exp = Self {
            config,
            target,
            f,
            grid,
            oracle,
            plugins,
            plan: Plan::Mc,
        };
        exp.plan = exp.plan(&f_spec, (lo, hi))?;
        Ok(exp)
    }

    /// Grid with the kink of `|f - level|` on a node when it is known.
    fn grid_at(&self, f: &FSpec, level: f64, bounds: (f64, f64)) -> Result<Grid1D, CliError> {
        let n = self.config.grid_points;
        match f
            .affine_root(level)
            .filter(|r| *r > bounds.0 && *r < bounds.1)
        {
            Some(root) => Grid1D::aligned(bounds.0, bounds.1, n, root),
            None => Grid1D::new(bounds.0, bounds.1, n),
        }
        .map_err(setup("grid"))
    }

    fn sampled(&self, grid: &Grid1D, unnorm: &ScalarField) -> Result<ProposalModel, CliError> {
        Ok(grid_sampler(grid, unnorm)
            .map_err(setup("optimal proposal"))?
            .into_proposal()
            .with_label("qopt"))
    }

    fn normalized_target(&self) -> Result<ProposalModel, CliError> {
        match self.target.as_proposal() {
            Ok(q) => Ok(q),
            Err(_) => self.sampled(&self.grid, &self.target.density_field()),
        }
    }

    fn spec(&self, scheme: Scheme) -> OptimalSpec {
        OptimalSpec::new(scheme)
            .target(self.target.clone())
            .f(self.f.clone())
            .plug_i(self.plugins.i)
            .plug_z(self.plugins.z)
    }

    fn single(&self, scheme: Scheme, grid: &Grid1D) -> Result<ProposalModel, CliError> {
        let built = self
            .spec(scheme)
            .build()
            .and_then(|b| b.single())
            .map_err(setup(scheme.name()))?;
        self.sampled(grid, &built)
    }

    fn pair(
        &self,
        grid: &Grid1D,
    ) -> Result<(Option<ProposalModel>, Option<ProposalModel>), CliError> {
        let (plus, minus) = self
            .spec(Scheme::PositivisedPair)
            .build()
            .and_then(|b| b.pair())
            .map_err(setup("positivised_pair"))?;
        let branch = |d: &ScalarField| -> Result<Option<ProposalModel>, CliError> {
            Ok(grid_proposal_or_empty(grid, d)
                .map_err(setup("positivised_pair"))?
                .map(|g| g.into_proposal()))
        };
        Ok((branch(&plus)?, branch(&minus)?))
    }

    fn resolve(
        &self,
        spec: Option<&ProposalSpec>,
        field: &str,
        qopt: impl FnOnce() -> Result<ProposalModel, CliError>,
    ) -> Result<ProposalModel, CliError> {
        match spec {
            None => Err(CliError::Setup(format!(
                "estimator {} requires '{field}'",
                self.config.estimator
            ))),
            Some(ProposalSpec::Density(d)) => d.proposal().map_err(CliError::Setup),
            Some(ProposalSpec::Target) => self.normalized_target(),
            Some(ProposalSpec::Qopt) => qopt(),
        }
    }

    /// `log φ`: an explicit density, or `π̄` for `target`/`qopt`.
    fn log_phi(&self, bridge_q: Option<&ProposalModel>) -> Result<ScalarField, CliError> {
        match self.config.phi.as_ref() {
            Some(ProposalSpec::Density(d)) => Ok(d
                .proposal()
                .map_err(CliError::Setup)?
                .log_density_field()
                .clone()),
            Some(ProposalSpec::Qopt) if bridge_q.is_some() => {
                let (n1, n2) = two(&self.config.branch_budgets());
                let built = OptimalSpec::new(Scheme::BridgePhi)
                    .target(self.target.clone())
                    .proposal(bridge_q.expect("checked").clone())
                    .plug_z_hat(self.plugins.z)
                    .budgets(n1, n2)
                    .build()
                    .and_then(|b| b.single())
                    .map_err(setup("bridge_phi"))?;
                Ok(built.ln())
            }
            Some(_) => {
                let lz = self.plugins.z.ln();
                Ok(self.target.log_unnorm().map(move |l| l - lz))
            }
            None => Err(CliError::Setup(format!(
                "estimator {} requires 'phi'",
                self.config.estimator
            ))),
        }
    }

    fn plan(&self, f: &FSpec, bounds: (f64, f64)) -> Result<Plan, CliError> {
        let c = &self.config;
        let budgets = c.branch_budgets();
        let g0 = self.grid_at(f, 0.0, bounds)?;
        let gi = self.grid_at(f, self.plugins.i, bounds)?;
        let p1 = c.proposal.as_ref();
        let z_opt = || self.single(Scheme::Z, &self.grid);
        let noisy =
            || NoisyTargetModel::new(self.target.clone(), c.noise).map_err(setup("noise model"));
        let noisy_q = |nt: &NoisyTargetModel, kind: NoisyKind, grid: &Grid1D| {
            self.resolve(p1, "proposal", || {
                let d =
                    noisy_optimal_proposal(nt, kind).map_err(setup("noisy optimal proposal"))?;
                self.sampled(grid, &d)
            })
        };
        let second = |spec: Option<&ProposalSpec>,
                      qopt: &dyn Fn() -> Result<ProposalModel, CliError>| {
            self.resolve(spec.or(p1), "proposal2", qopt)
        };
        Ok(match c.estimator {
            EstimatorKind::Mc => {
                if self.target.exact_sampler().is_none() {
                    return Err(CliError::Setup(
                        "mc needs a target with an exact sampler".into(),
                    ));
                }
                Plan::Mc
            }
            EstimatorKind::Is => {
                Plan::Is(self.resolve(p1, "proposal", || self.single(Scheme::StdIs, &g0))?)
            }
            EstimatorKind::Z => Plan::Z(self.resolve(p1, "proposal", z_opt)?),
            EstimatorKind::Snis => {
                Plan::Snis(self.resolve(p1, "proposal", || self.single(Scheme::Snis, &gi))?)
            }
            EstimatorKind::Ris => Plan::Ris(self.log_phi(None)?),
            EstimatorKind::Umbrella | EstimatorKind::UmbrellaIterative => {
                let log_phi = self.log_phi(None)?;
                let q = self.resolve(p1, "proposal", || {
                    let built = self
                        .spec(Scheme::UmbrellaQ)
                        .log_phi(log_phi.clone())
                        .plug_z_hat(self.plugins.z)
                        .build()
                        .and_then(|b| b.single())
                        .map_err(setup("umbrella_q"))?;
                    let values = self.grid.tabulate(&built).map_err(setup("umbrella_q"))?;
                    let mass = isopt_core::grid::Tabulation { grid: self.grid, values }.integral();
                    if !(mass > 1e-10 * self.plugins.z) {
                        return Err(CliError::Setup(
                            "umbrella_q vanishes: phi equals the normalized target, so every proposal is exact".into(),
                        ));
                    }
                    self.sampled(&self.grid, &built)
                })?;
                if c.estimator == EstimatorKind::Umbrella {
                    Plan::Umbrella { log_phi, q }
                } else {
                    Plan::UmbrellaIterative { log_phi, q }
                }
            }
            EstimatorKind::Bridge | EstimatorKind::BridgeIterative => {
                let no_qopt = || {
                    Err(CliError::Setup(
                        "bridge proposals have no built-in optimum; give a density".into(),
                    ))
                };
                let q = match p1 {
                    None => self.normalized_target()?,
                    some => self.resolve(some, "proposal", no_qopt)?,
                };
                let (n1, n2) = two(&budgets);
                if c.estimator == EstimatorKind::Bridge {
                    Plan::Bridge {
                        log_phi: self.log_phi(Some(&q))?,
                        q,
                        n1,
                        n2,
                    }
                } else {
                    Plan::BridgeIterative { q, n1, n2 }
                }
            }
            EstimatorKind::Is2q => {
                let (n1, n2) = two(&budgets);
                let (q1, q2) = if p1 == Some(&ProposalSpec::Qopt) {
                    self.pair(&g0)?
                } else {
                    let q1 = self.resolve(p1, "proposal", || unreachable!("handled above"))?;
                    let q2 = second(c.proposal2.as_ref(), &|| {
                        Err(CliError::Setup(
                            "proposal2 = qopt needs proposal = qopt".into(),
                        ))
                    })?;
                    (Some(q1), Some(q2))
                };
                Plan::Is2q { q1, q2, n1, n2 }
            }
            EstimatorKind::Snis2q => {
                let (n1, n2) = two(&budgets);
                let q1 = self.resolve(p1, "proposal", || self.single(Scheme::StdIs, &g0))?;
                let q2 = second(c.proposal2.as_ref(), &z_opt)?;
                Plan::Snis2q { q1, q2, n1, n2 }
            }
            EstimatorKind::Snis3q => {
                let n = [budgets[0], budgets[1], budgets[2]];
                let (q1, q2) = if p1 == Some(&ProposalSpec::Qopt) {
                    self.pair(&g0)?
                } else {
                    let q1 = self.resolve(p1, "proposal", || unreachable!("handled above"))?;
                    let q2 = second(c.proposal2.as_ref(), &|| {
                        Err(CliError::Setup(
                            "proposal2 = qopt needs proposal = qopt".into(),
                        ))
                    })?;
                    (Some(q1), Some(q2))
                };
                let q3 = self.resolve(c.proposal3.as_ref().or(p1), "proposal3", z_opt)?;
                Plan::Snis3q { q1, q2, q3, n }
            }
            EstimatorKind::Mis => {
                let props = c
                    .bank
                    .iter()
                    .map(|d| d.proposal())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(CliError::Setup)?;
                Plan::Mis(ProposalBank::new(props, c.n).map_err(setup("bank"))?)
            }
            EstimatorKind::NoisyZ => {
                let nt = noisy()?;
                let q = noisy_q(&nt, NoisyKind::Z, &self.grid)?;
                Plan::NoisyZ { nt, q }
            }
            EstimatorKind::NoisyIs => {
                let nt = noisy()?;
                let q = noisy_q(&nt, NoisyKind::Is(VectorField::from(self.f.clone())), &g0)?;
                let zb = z_bar(&nt, &self.grid).map_err(setup("z_bar"))?;
                Plan::NoisyIs { nt, q, z_bar: zb }
            }
            EstimatorKind::NoisySnis => {
                let nt = noisy()?;
                let kind = NoisyKind::Snis(VectorField::from(self.f.clone()), vec![self.plugins.i]);
                let q = noisy_q(&nt, kind, &gi)?;
                Plan::NoisySnis { nt, q }
            }
        })
    }

    /// The quantity the estimator targets.
    pub fn truth(&self) -> f64 {
        if self.config.estimator.estimates_z() {
            self.oracle.z
        } else {
            self.oracle.i
        }
    }

    /// One replication on its own stream.
    pub fn run_one(&self, rng: RngStream) -> isopt_core::Result<EstimateReport> {
        let (t, f) = (&self.target, &self.f);
        let c = &self.config;
        let n = c.n;
        let mut rep = match &self.plan {
            Plan::Mc => mc_estimate(t, f, n, rng),
            Plan::Is(q) => is_estimate(t, q, f, n, rng),
            Plan::Z(q) => z_estimate(t, q, n, rng),
            Plan::Snis(q) => snis_estimate(t, q, f, n, rng),
            Plan::Ris(phi) => ris_estimate(t, phi, n, rng),
            Plan::Umbrella { log_phi, q } => umbrella_estimate(t, log_phi, q, n, rng),
            Plan::UmbrellaIterative { log_phi, q } => {
                umbrella_iterative(t, log_phi, q, &self.grid, n, c.t_max, c.rel_tol, rng)
                    .map(with_iterations)
            }
            Plan::Bridge { q, log_phi, n1, n2 } => bridge_estimate(t, q, log_phi, *n1, *n2, rng),
            Plan::BridgeIterative { q, n1, n2 } => {
                bridge_iterative(t, q, *n1, *n2, c.z_init, c.t_max, c.rel_tol, rng)
                    .map(with_iterations)
            }
            Plan::Is2q { q1, q2, n1, n2 } => {
                is2q_estimate(t, q1.as_ref(), q2.as_ref(), f, *n1, *n2, rng)
            }
            Plan::Snis2q { q1, q2, n1, n2 } => snis2q_estimate(t, q1, q2, f, *n1, *n2, rng),
            Plan::Snis3q {
                q1,
                q2,
                q3,
                n: [a, b, d],
            } => snis3q_estimate(t, q1.as_ref(), q2.as_ref(), q3, f, *a, *b, *d, rng),
            Plan::Mis(bank) => mis_estimate(bank, t, f, c.mis_weights, rng),
            Plan::NoisyZ { nt, q } => noisy_z_estimate(nt, q, n, rng),
            Plan::NoisyIs { nt, q, z_bar } => noisy_is_estimate(nt, q, f, n, *z_bar, rng),
            Plan::NoisySnis { nt, q } => noisy_snis_estimate(nt, q, f, n, rng),
        }?;
        // Replication summaries never need the draws; dropping them keeps memory flat.
        rep.samples = None;
        Ok(rep)
    }

    /// All replications, ordered by index regardless of completion order.
    pub fn replicate(&self) -> Vec<isopt_core::Result<EstimateReport>> {
        let seed = self.config.seed;
        (0..self.config.replications as u64)
            .into_par_iter()
            .map(|k| self.run_one(RngStream::replication(seed, k)))
            .collect()
    }

    pub fn run(&self) -> RunOutput {
        let runs = self.replicate();
        let values: Vec<f64> = runs
            .iter()
            .filter_map(|r| r.as_ref().ok().map(EstimateReport::value))
            .collect();
        let failed = runs.len() - values.len();
        let baseline = (!self.config.estimator.estimates_z())
            .then(|| self.oracle.var_f / self.config.total_budget() as f64);
        let summary = ReplicationSummary::new(
            self.config.estimator.name(),
            self.config.total_budget(),
            self.truth(),
            &values,
            failed,
            baseline,
        )
        .with_oracle_residual(self.oracle.residual);
        RunOutput { summary, runs }
    }
}

fn two(b: &[usize]) -> (usize, usize) {
    (b[0], b[1])
}

fn with_iterations(r: isopt_core::IterativeResult) -> EstimateReport {
    let iters = r.iterations() as f64;
    let mut rep = r.report;
    rep.extras.insert("iterations", iters);
    rep
}

/// Plug-ins from one SNIS pilot run on a dedicated stream.
fn pilot(
    c: &ExperimentConfig,
    target: &TargetModel,
    f: &ScalarField,
    bounds: (f64, f64),
) -> Result<PlugIns, CliError> {
    let q = match &c.pilot_proposal {
        Some(d) => d.proposal().map_err(CliError::Setup)?,
        // the grid bounds span ±10 sd around the declared mean
        None => ProposalModel::gaussian(0.5 * (bounds.0 + bounds.1), (bounds.1 - bounds.0) / 10.0),
    };
    let n = c.n_pilot.unwrap_or((c.n / 10).max(1));
    let r = snis_estimate(target, &q, f, n, RngStream::new(c.seed, PILOT_STREAM))
        .map_err(setup("pilot run"))?;
    let z = r
        .z_hat
        .ok_or_else(|| CliError::Setup("pilot run produced no evidence estimate".into()))?;
    Ok(PlugIns { i: r.value(), z })
}

pub struct RunOutput {
    pub summary: ReplicationSummary,
    pub runs: Vec<isopt_core::Result<EstimateReport>>,
}

impl RunOutput {
    pub fn failed(&self) -> usize {
        self.summary.failed
    }

    /// Per-run records in replication order.
    pub fn runs_table(&self, estimator: &str, n: usize, seed: u64) -> CsvTable {
        let mut t = CsvTable::new(&format!("replication,{},error", EstimateReport::CSV_HEADER));
        for (k, r) in self.runs.iter().enumerate() {
            match r {
                Ok(rep) => t.push(format!("{k},{},", rep.to_csv_row())),
                Err(e) => t.push(format!(
                    "{k},{estimator},{n},{seed},{k},,,,,{}",
                    csv_field(&e.to_string())
                )),
            }
        }
        t
    }
}

/// One row of replication statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationSummary {
    pub estimator: String,
    pub n: usize,
    pub replications: usize,
    pub failed: usize,
    pub mean: f64,
    pub oracle: f64,
    pub bias: f64,
    /// Population variance over successful runs.
    pub variance: f64,
    /// `variance + bias²`.
    pub mse: f64,
    /// Ideal-MC MSE at the same budget over this MSE; absent for evidence estimators.
    pub ess_ratio: Option<f64>,
    pub oracle_residual: f64,
}

impl ReplicationSummary {
    pub const CSV_HEADER: &'static str =
        "estimator,n,replications,failed,mean,oracle,bias,variance,mse,ess_ratio,oracle_residual";

    pub fn new(
        estimator: &str,
        n: usize,
        oracle: f64,
        values: &[f64],
        failed: usize,
        baseline_mse: Option<f64>,
    ) -> Self {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let variance = if values.is_empty() {
            f64::NAN
        } else {
            isopt_core::estimators::population_variance(values)
        };
        let bias = mean - oracle;
        let mse = variance + bias * bias;
        Self {
            estimator: estimator.into(),
            n,
            replications: values.len() + failed,
            failed,
            mean,
            oracle,
            bias,
            variance,
            mse,
            ess_ratio: baseline_mse.map(|b| isopt_core::diagnostics::ess_ratio(b, mse)),
            oracle_residual: 0.0,
        }
    }

    pub fn with_oracle_residual(mut self, r: f64) -> Self {
        self.oracle_residual = r;
        self
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.estimator,
            self.n,
            self.replications,
            self.failed,
            fmt_num(self.mean),
            fmt_num(self.oracle),
            fmt_num(self.bias),
            fmt_num(self.variance),
            fmt_num(self.mse),
            self.ess_ratio.map(fmt_num).unwrap_or_default(),
            fmt_num(self.oracle_residual),
        )
    }
}

pub fn summary_table(rows: &[ReplicationSummary]) -> CsvTable {
    let mut t = CsvTable::new(ReplicationSummary::CSV_HEADER);
    for r in rows {
        t.push(r.to_csv_row());
    }
    t
}

/// Builds and runs a config, writing the configured outputs.
pub fn run(config: ExperimentConfig) -> Result<RunOutput, CliError> {
    let exp = Experiment::new(config)?;
    let out = exp.run();
    let c = &exp.config;
    if let Some(path) = &c.runs_output {
        out.runs_table(c.estimator.name(), c.n, c.seed)
            .write(path)?;
    }
    if let Some(path) = &c.output {
        summary_table(std::slice::from_ref(&out.summary)).write(path)?;
    }
    Ok(out)
}
