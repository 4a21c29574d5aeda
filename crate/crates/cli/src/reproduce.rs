//! Regeneration of the benchmark tables and figure data.

use isopt_core::diagnostics::{var_is_gaussian, var_ris_inv_gaussian, ExtendedReal};
use isopt_core::estimators::{
    fmt_num, population_variance, ris_estimate, split_budget, z_estimate,
};
use isopt_core::grid::{quadrature_integrate, Grid1D, Tabulation};
use isopt_core::{OptimalSpec, ProposalModel, RngStream, ScalarField, Scheme, TargetModel};
use rayon::prelude::*;

use crate::config::{ConfigError, EstimatorKind, ExperimentConfig, Origin, RawConfig};
use crate::csv::CsvTable;
use crate::expr::Expr;
use crate::harness::{CliError, Experiment, Oracle, ReplicationSummary};
use crate::specs::{parse_f_list, vector_field, DensitySpec, FSpec, ProposalSpec};

pub const TABLE3_NS: [usize; 6] = [10, 50, 100, 500, 1000, 5000];

/// `table3` estimator columns: label and proposal (`None` is ideal MC).
pub fn table3_columns() -> Vec<(&'static str, Option<ProposalSpec>)> {
    let h = |s: f64| {
        Some(ProposalSpec::Density(DensitySpec::Gaussian {
            mu: -1.0,
            sigma: s,
        }))
    };
    vec![
        ("mc", None),
        ("snis_qopt", Some(ProposalSpec::Qopt)),
        ("snis_h1.5", h(1.5)),
        ("snis_h5", h(5.0)),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table3Row {
    pub label: &'static str,
    pub summary: ReplicationSummary,
    /// Empirical ideal-MC MSE at the same `N` over this row's MSE.
    pub ess_over_n: f64,
}

/// MSE and `ESS/N` on the benchmark `N(-1, 1)`, `f(θ) = θ`.
pub fn table3(
    seed: u64,
    reps: usize,
    ns: &[usize],
    grid_points: usize,
) -> Result<Vec<Table3Row>, CliError> {
    let mut rows = Vec::new();
    for &n in ns {
        let mut mc_mse = f64::NAN;
        for (label, proposal) in table3_columns() {
            let kind = if proposal.is_none() {
                EstimatorKind::Mc
            } else {
                EstimatorKind::Snis
            };
            let mut c = ExperimentConfig::benchmark(kind);
            c.proposal = proposal;
            (c.n, c.replications, c.seed, c.grid_points) = (n, reps, seed, grid_points);
            let mut summary = Experiment::new(c)?.run().summary;
            summary.estimator = label.into();
            if kind == EstimatorKind::Mc {
                mc_mse = summary.mse;
            }
            let ess_over_n = mc_mse / summary.mse;
            rows.push(Table3Row {
                label,
                summary,
                ess_over_n,
            });
        }
    }
    Ok(rows)
}

pub fn table3_csv(rows: &[Table3Row]) -> CsvTable {
    let mut t = CsvTable::new("n,estimator,mean,variance,mse,ess_over_n,replications,failed");
    for r in rows {
        let s = &r.summary;
        t.push(format!(
            "{},{},{},{},{},{},{},{}",
            s.n,
            r.label,
            fmt_num(s.mean),
            fmt_num(s.variance),
            fmt_num(s.mse),
            fmt_num(r.ess_over_n),
            s.replications,
            s.failed
        ));
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Curve {
    /// `Ẑ_IS` with `q = N(0, h²)`.
    Is,
    /// `1/Ẑ_RIS` with `φ = N(0, h²)`.
    Ris,
}

impl std::str::FromStr for Curve {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "is" => Ok(Curve::Is),
            "ris" => Ok(Curve::Ris),
            _ => Err(format!("unknown curve '{s}'; expected is or ris")),
        }
    }
}

impl Curve {
    pub fn name(self) -> &'static str {
        match self {
            Curve::Is => "is",
            Curve::Ris => "ris",
        }
    }

    pub fn theory(self, h: f64, n: usize) -> ExtendedReal {
        match self {
            Curve::Is => var_is_gaussian(h, n),
            Curve::Ris => var_ris_inv_gaussian(h, n),
        }
    }
}

/// One point of a closed-form variance curve with its empirical counterpart.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub curve: Curve,
    pub h: f64,
    pub n: usize,
    pub runs: usize,
    pub failed: usize,
    pub theoretical: ExtendedReal,
    /// Variance of the quantity the closed form describes (`Ẑ` or `1/Ẑ`).
    pub empirical: f64,
    pub z_mean: f64,
    pub z_bias: f64,
    pub z_bias_se: f64,
    pub z_var: f64,
    pub z_mse: f64,
}

/// Replicates one curve point on the unnormalized standard Gaussian, `Z = √(2π)`.
pub fn curve_point(curve: Curve, h: f64, n: usize, runs: usize, seed: u64) -> CurvePoint {
    let t = TargetModel::gaussian_unnorm(0.0, 1.0);
    let q = ProposalModel::gaussian(0.0, h);
    let phi = q.log_density_field().clone();
    let z_true = t.known_z().expect("gaussian_unnorm has a known Z");
    let out: Vec<Option<(f64, f64)>> = (0..runs as u64)
        .into_par_iter()
        .map(|k| {
            let rng = RngStream::replication(seed, k);
            match curve {
                Curve::Is => z_estimate(&t, &q, n, rng)
                    .ok()
                    .map(|r| (r.value(), r.value())),
                Curve::Ris => ris_estimate(&t, &phi, n, rng)
                    .ok()
                    .map(|r| (r.extras["inverse_z"], r.value())),
            }
        })
        .collect();
    let ok: Vec<(f64, f64)> = out.iter().flatten().copied().collect();
    let estimand: Vec<f64> = ok.iter().map(|p| p.0).collect();
    let zs: Vec<f64> = ok.iter().map(|p| p.1).collect();
    let z_mean = zs.iter().sum::<f64>() / zs.len() as f64;
    let z_var = population_variance(&zs);
    let z_bias = z_mean - z_true;
    CurvePoint {
        curve,
        h,
        n,
        runs,
        failed: runs - ok.len(),
        theoretical: curve.theory(h, n),
        empirical: population_variance(&estimand),
        z_mean,
        z_bias,
        z_bias_se: (z_var / zs.len() as f64).sqrt(),
        z_var,
        z_mse: z_var + z_bias * z_bias,
    }
}

/// `steps` evenly spaced values from `from` to `to` inclusive.
pub fn linspace(from: f64, to: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![from],
        _ => (0..steps)
            .map(|k| from + (to - from) * k as f64 / (steps - 1) as f64)
            .collect(),
    }
}

/// Default sweep `h = 0.05, 0.10, ..., 3.00`.
pub fn default_hs() -> Vec<f64> {
    (1..=60).map(|k| k as f64 / 20.0).collect()
}

pub fn curves(seed: u64, runs: usize, n: usize, hs: &[f64]) -> Vec<CurvePoint> {
    [Curve::Is, Curve::Ris]
        .iter()
        .flat_map(|c| hs.iter().map(move |h| curve_point(*c, *h, n, runs, seed)))
        .collect()
}

pub fn curves_csv(points: &[CurvePoint]) -> CsvTable {
    let mut t = CsvTable::new(
        "curve,h,n,runs,failed,theoretical_var,empirical_var,z_mean,z_bias,z_bias_se,z_var,z_mse",
    );
    for p in points {
        t.push(format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            p.curve.name(),
            fmt_num(p.h),
            p.n,
            p.runs,
            p.failed,
            p.theoretical,
            fmt_num(p.empirical),
            fmt_num(p.z_mean),
            fmt_num(p.z_bias),
            fmt_num(p.z_bias_se),
            fmt_num(p.z_var),
            fmt_num(p.z_mse),
        ));
    }
    t
}

/// The narrow `(h, theoretical, empirical, runs)` form used by `diag sweep`.
pub fn diag_sweep_csv(points: &[CurvePoint]) -> CsvTable {
    let mut t = CsvTable::new("h,theoretical,empirical,runs,failed");
    for p in points {
        t.push(format!(
            "{},{},{},{},{}",
            fmt_num(p.h),
            p.theoretical,
            fmt_num(p.empirical),
            p.runs,
            p.failed
        ));
    }
    t
}

/// Tabulates `field` and scales it to unit trapezoid mass; a massless field stays zero.
fn normalized_column(grid: &Grid1D, field: &ScalarField) -> Result<Vec<f64>, CliError> {
    let values = grid
        .tabulate(field)
        .map_err(|e| CliError::Setup(e.to_string()))?;
    let mass = Tabulation {
        grid: *grid,
        values: values.clone(),
    }
    .integral();
    Ok(if mass > 0.0 {
        values.iter().map(|v| v / mass).collect()
    } else {
        values
    })
}

fn columns_csv(header: &str, grid: &Grid1D, cols: &[Vec<f64>]) -> CsvTable {
    let mut t = CsvTable::new(header);
    for (k, x) in grid.abscissae().iter().enumerate() {
        let mut row = fmt_num(*x);
        for c in cols {
            row.push(',');
            row.push_str(&fmt_num(c[k]));
        }
        t.push(row);
    }
    t
}

/// Benchmark densities behind the optimal-proposal figures, all normalized.
pub fn figures123(grid_points: usize) -> Result<CsvTable, CliError> {
    let t = TargetModel::gaussian(-1.0, 1.0);
    let (lo, hi) = t.grid_bounds().expect("gaussian declares moments");
    let grid =
        Grid1D::aligned(lo, hi, grid_points, 0.0).map_err(|e| CliError::Setup(e.to_string()))?;
    let f = ScalarField::scalar(|x| x);
    let spec = |s| {
        OptimalSpec::new(s)
            .target(t.clone())
            .f(f.clone())
            .plug_i(-1.0)
    };
    let single = |s: Scheme| {
        spec(s)
            .build()
            .and_then(|b| b.single())
            .map_err(|e| CliError::Setup(e.to_string()))
    };
    let (plus, minus) = spec(Scheme::PositivisedPair)
        .build()
        .and_then(|b| b.pair())
        .map_err(|e| CliError::Setup(e.to_string()))?;
    let cols = vec![
        normalized_column(&grid, &t.density_field())?,
        normalized_column(&grid, &single(Scheme::StdIs)?)?,
        normalized_column(&grid, &single(Scheme::Snis)?)?,
        normalized_column(&grid, &plus)?,
        normalized_column(&grid, &minus)?,
        normalized_column(&grid, &ProposalModel::gaussian(-1.0, 1.5).density_field())?,
        normalized_column(&grid, &ProposalModel::gaussian(-1.0, 5.0).density_field())?,
    ];
    Ok(columns_csv(
        "theta,target,std_is,snis,positivised_plus,positivised_minus,q_h1_5,q_h5",
        &grid,
        &cols,
    ))
}

fn field_err(raw_key: &str, msg: String) -> CliError {
    CliError::Config(ConfigError::Field {
        origin: Origin::Flag,
        field: raw_key.into(),
        msg,
    })
}

/// Optimal proposal of `scheme` built from config keys `target`, `targets`,
/// `f`, `phi`, `proposal`, `n`/`budgets` and `grid_points`; every unknown
/// constant comes from quadrature.
pub fn qopt_dump(raw: &RawConfig, scheme: Scheme) -> Result<CsvTable, CliError> {
    let base = raw.base_dir.as_path();
    let parse = |key: &str| {
        raw.get(key)
            .map(|v| Expr::parse(v).map_err(|m| field_err(key, m)))
            .transpose()
    };
    let target = match parse("target")? {
        Some(e) => DensitySpec::from_expr(&e, base).map_err(|m| field_err("target", m))?,
        None => DensitySpec::Gaussian {
            mu: -1.0,
            sigma: 1.0,
        },
    };
    let targets: Vec<DensitySpec> = match parse("targets")? {
        Some(e) => e
            .list()
            .map_err(|m| field_err("targets", m))?
            .iter()
            .map(|d| DensitySpec::from_expr(d, base))
            .collect::<Result<_, _>>()
            .map_err(|m| field_err("targets", m))?,
        None => vec![target.clone()],
    };
    let fs: Vec<FSpec> = match parse("f")? {
        Some(e) => parse_f_list(&e).map_err(|m| field_err("f", m))?,
        None => vec![FSpec::Theta],
    };
    let grid_points = match raw.get("grid_points") {
        Some(v) => v
            .parse()
            .map_err(|e| field_err("grid_points", format!("'{v}': {e}")))?,
        None => isopt_core::grid::DEFAULT_GRID_POINTS,
    };
    let n: usize = match raw.get("n") {
        Some(v) => v
            .parse()
            .map_err(|e| field_err("n", format!("'{v}': {e}")))?,
        None => 1000,
    };
    let setup = |e: isopt_core::Error| CliError::Setup(e.to_string());
    let t = target.target().map_err(CliError::Setup)?;
    let ts = targets
        .iter()
        .map(|d| d.target())
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::Setup)?;
    let (lo, hi) = ts
        .iter()
        .chain(std::iter::once(&t))
        .filter_map(|m| m.grid_bounds())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (l, h)| {
            (a.min(l), b.max(h))
        });
    let grid = Grid1D::new(lo, hi, grid_points).map_err(setup)?;
    let oracle = |m: &TargetModel, f: &FSpec| {
        Oracle::compute(m, &f.field(), &grid, &f.breakpoints()).map_err(setup)
    };
    let o = oracle(&t, &fs[0])?;
    let i_vec = match scheme {
        Scheme::MultiTargetSnis => ts
            .iter()
            .map(|m| oracle(m, &fs[0]).map(|o| o.i))
            .collect::<Result<Vec<_>, _>>()?,
        Scheme::GeneralSnis => ts
            .iter()
            .zip(&fs)
            .map(|(m, f)| oracle(m, f).map(|o| o.i))
            .collect::<Result<Vec<_>, _>>()?,
        _ => fs
            .iter()
            .map(|f| oracle(&t, f).map(|o| o.i))
            .collect::<Result<Vec<_>, _>>()?,
    };
    let multi = matches!(
        scheme,
        Scheme::MultiTargetIs | Scheme::MultiTargetSnis | Scheme::GeneralIs | Scheme::GeneralSnis
    );
    let mut spec = OptimalSpec::new(scheme)
        .plug_i(o.i)
        .plug_z(o.z)
        .plug_z_hat(o.z)
        .plug_i_vec(i_vec);
    spec = if multi {
        let zs = ts
            .iter()
            .map(|m| oracle(m, &fs[0]).map(|o| o.z))
            .collect::<Result<Vec<_>, _>>()?;
        spec.targets(ts.clone()).plug_z_vec(zs)
    } else {
        spec.target(t.clone())
    };
    spec = if fs.len() == 1 {
        spec.f(fs[0].field())
    } else {
        spec.f_vec(vector_field(&fs))
    };
    if let Some(e) = parse("phi")? {
        let d = DensitySpec::from_expr(&e, base).map_err(|m| field_err("phi", m))?;
        spec = spec.log_phi(
            d.proposal()
                .map_err(CliError::Setup)?
                .log_density_field()
                .clone(),
        );
    }
    if let Some(e) = parse("proposal")? {
        let d = DensitySpec::from_expr(&e, base).map_err(|m| field_err("proposal", m))?;
        spec = spec.proposal(d.proposal().map_err(CliError::Setup)?);
    }
    let b = split_budget(n, 2);
    spec = spec.budgets(b[0], b[1]);
    let level = if matches!(scheme, Scheme::Snis | Scheme::JointIz) {
        o.i
    } else {
        0.0
    };
    let grid = match fs[0].affine_root(level).filter(|r| *r > lo && *r < hi) {
        Some(r) if fs.len() == 1 && !multi => {
            Grid1D::aligned(lo, hi, grid_points, r).map_err(setup)?
        }
        _ => grid,
    };
    match spec.build().map_err(setup)? {
        isopt_core::Built::Single(d) => Ok(columns_csv(
            "theta,q",
            &grid,
            &[normalized_column(&grid, &d)?],
        )),
        isopt_core::Built::Pair { plus, minus } => Ok(columns_csv(
            "theta,q_plus,q_minus",
            &grid,
            &[
                normalized_column(&grid, &plus)?,
                normalized_column(&grid, &minus)?,
            ],
        )),
    }
}

/// Mass of a dumped column, for checks.
pub fn column_mass(table: &CsvTable, col: usize) -> f64 {
    let rows: Vec<Vec<f64>> = table
        .rows()
        .iter()
        .map(|r| {
            r.split(',')
                .map(|v| v.parse::<f64>().unwrap_or(f64::NAN))
                .collect()
        })
        .collect();
    let xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r[col]).collect();
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// `C_q = E_π̄|f - I|` on the benchmark, the SNIS fundamental constant.
pub fn benchmark_c_q(grid_points: usize) -> Result<f64, CliError> {
    let t = TargetModel::gaussian(-1.0, 1.0);
    let (lo, hi) = t.grid_bounds().expect("moments declared");
    let grid =
        Grid1D::aligned(lo, hi, grid_points, -1.0).map_err(|e| CliError::Setup(e.to_string()))?;
    let g = ScalarField::scalar(move |x| (x + 1.0).abs() * t.density1(x));
    quadrature_integrate(&grid, &g).map_err(|e| CliError::Setup(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_endpoints() {
        assert_eq!(linspace(1.0, 2.0, 3), vec![1.0, 1.5, 2.0]);
        assert_eq!(linspace(1.0, 2.0, 1), vec![1.0]);
        assert!(default_hs().contains(&1.0) && default_hs().contains(&1.5));
    }

    #[test]
    fn curve_at_h1_is_exact() {
        for c in [Curve::Is, Curve::Ris] {
            let p = curve_point(c, 1.0, 50, 20, 1);
            assert!(p.empirical < 1e-20, "{c:?}");
            assert_eq!(p.theoretical.finite(), Some(0.0));
        }
    }

    #[test]
    fn qopt_dump_mass_is_one() {
        let mut raw = RawConfig::default();
        raw.set("grid_points", "4097").unwrap();
        for s in [Scheme::StdIs, Scheme::Snis, Scheme::Z, Scheme::JointIz] {
            let t = qopt_dump(&raw, s).unwrap();
            assert!((column_mass(&t, 1) - 1.0).abs() < 1e-9, "{s}");
        }
        let pair = qopt_dump(&raw, Scheme::PositivisedPair).unwrap();
        assert!(pair.render().starts_with("theta,q_plus,q_minus\n"));
    }

    #[test]
    fn qopt_dump_reports_missing_inputs() {
        let raw = RawConfig::default();
        assert!(
            matches!(qopt_dump(&raw, Scheme::UmbrellaQ), Err(CliError::Setup(m)) if m.contains("phi"))
        );
    }

    #[test]
    fn c_q_is_sqrt_two_over_pi() {
        assert!(
            (benchmark_c_q(1 << 14).unwrap() - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-6
        );
    }
}
