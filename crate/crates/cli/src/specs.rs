//! Declarative target, proposal and integrand specs.

use std::path::{Path, PathBuf};

use isopt_core::{ProposalModel, ScalarField, TargetModel, VectorField};

use crate::expr::Expr;

/// A one-dimensional density family usable as a target, a proposal or `φ`.
#[derive(Debug, Clone, PartialEq)]
pub enum DensitySpec {
    Gaussian {
        mu: f64,
        sigma: f64,
    },
    GaussianUnnorm {
        mu: f64,
        sigma: f64,
    },
    Mixture {
        weights: Vec<f64>,
        components: Vec<(f64, f64)>,
    },
    Tabulated(PathBuf),
}

fn args_n<'a>(name: &str, args: &'a [Expr], n: usize) -> Result<&'a [Expr], String> {
    if args.len() != n {
        return Err(format!("{name} takes {n} argument(s), got {}", args.len()));
    }
    Ok(args)
}

fn positive(name: &str, v: f64) -> Result<f64, String> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{name} must be positive and finite, got {v}"))
    }
}

fn component(e: &Expr) -> Result<(f64, f64), String> {
    let pair = match e {
        Expr::Call(name, args) if name == "gaussian" => args_n(name, args, 2)?,
        Expr::List(items) => args_n("a mixture component", items, 2)?,
        other => {
            return Err(format!(
                "mixture component must be gaussian(mu, sigma) or [mu, sigma], got '{other}'"
            ))
        }
    };
    Ok((pair[0].num()?, positive("sigma", pair[1].num()?)?))
}

impl DensitySpec {
    pub fn from_expr(e: &Expr, base: &Path) -> Result<Self, String> {
        let (name, args) = e.head()?;
        match name {
            "gaussian" | "gaussian_unnorm" => {
                let a = args_n(name, args, 2)?;
                let (mu, sigma) = (a[0].num()?, positive("sigma", a[1].num()?)?);
                Ok(if name == "gaussian" {
                    DensitySpec::Gaussian { mu, sigma }
                } else {
                    DensitySpec::GaussianUnnorm { mu, sigma }
                })
            }
            "mixture" => {
                let a = args_n(name, args, 2)?;
                let weights = a[0].list()?.iter().map(Expr::num).collect::<Result<Vec<_>, _>>()?;
                let components = a[1].list()?.iter().map(component).collect::<Result<Vec<_>, _>>()?;
                if weights.len() != components.len() || weights.is_empty() {
                    return Err("mixture needs one weight per component".into());
                }
                Ok(DensitySpec::Mixture { weights, components })
            }
            "tabulated" => {
                let a = args_n(name, args, 1)?;
                let path = match &a[0] {
                    Expr::Word(w) => PathBuf::from(w),
                    other => return Err(format!("tabulated takes a path, got '{other}'")),
                };
                Ok(DensitySpec::Tabulated(if path.is_absolute() { path } else { base.join(path) }))
            }
            other => Err(format!("unknown density '{other}'; expected gaussian, gaussian_unnorm, mixture or tabulated")),
        }
    }

    pub fn target(&self) -> Result<TargetModel, String> {
        let t = match self {
            DensitySpec::Gaussian { mu, sigma } => TargetModel::gaussian(*mu, *sigma),
            DensitySpec::GaussianUnnorm { mu, sigma } => TargetModel::gaussian_unnorm(*mu, *sigma),
            DensitySpec::Mixture {
                weights,
                components,
            } => TargetModel::mixture(weights, components).map_err(|e| e.to_string())?,
            DensitySpec::Tabulated(path) => {
                let (xs, ys) = read_table(path)?;
                TargetModel::tabulated(xs, ys).map_err(|e| format!("{}: {e}", path.display()))?
            }
        };
        Ok(t)
    }

    /// The normalized version of the density, with a sampler.
    pub fn proposal(&self) -> Result<ProposalModel, String> {
        match self {
            DensitySpec::Gaussian { mu, sigma } | DensitySpec::GaussianUnnorm { mu, sigma } => {
                Ok(ProposalModel::gaussian(*mu, *sigma))
            }
            DensitySpec::Mixture {
                weights,
                components,
            } => ProposalModel::mixture(weights, components).map_err(|e| e.to_string()),
            DensitySpec::Tabulated(_) => self.target()?.as_proposal().map_err(|e| e.to_string()),
        }
    }
}

/// Two-column CSV `(abscissa, density)`; a non-numeric first line is a header.
pub fn read_table(path: &Path) -> Result<(Vec<f64>, Vec<f64>), String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed = match cols.as_slice() {
            [a, b] => a
                .parse::<f64>()
                .and_then(|x| b.parse::<f64>().map(|y| (x, y))),
            _ => {
                return Err(format!(
                    "{}:{}: expected two columns",
                    path.display(),
                    k + 1
                ))
            }
        };
        match parsed {
            Ok((x, y)) => {
                xs.push(x);
                ys.push(y);
            }
            Err(_) if xs.is_empty() && k == 0 => {}
            Err(e) => return Err(format!("{}:{}: {e}", path.display(), k + 1)),
        }
    }
    Ok((xs, ys))
}

/// Where proposal draws come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ProposalSpec {
    Density(DensitySpec),
    /// The estimator's optimal proposal, grid-built from oracle plug-ins.
    Qopt,
    /// The normalized target itself.
    Target,
}

impl ProposalSpec {
    pub fn from_expr(e: &Expr, base: &Path) -> Result<Self, String> {
        match e {
            Expr::Word(w) if w == "qopt" => Ok(ProposalSpec::Qopt),
            Expr::Word(w) if w == "target" => Ok(ProposalSpec::Target),
            _ => DensitySpec::from_expr(e, base).map(ProposalSpec::Density),
        }
    }
}

/// Built-in integrands.
#[derive(Debug, Clone, PartialEq)]
pub enum FSpec {
    Theta,
    Square,
    SqrtAbs,
    Tanh,
    Const(f64),
    /// `c₀ + c₁θ + c₂θ² + ...`
    Poly(Vec<f64>),
}

impl FSpec {
    pub fn from_expr(e: &Expr) -> Result<Self, String> {
        let (name, args) = e.head()?;
        let nums = || args.iter().map(Expr::num).collect::<Result<Vec<_>, _>>();
        match name {
            "theta" => args_n(name, args, 0).map(|_| FSpec::Theta),
            "square" => args_n(name, args, 0).map(|_| FSpec::Square),
            "sqrt_abs" => args_n(name, args, 0).map(|_| FSpec::SqrtAbs),
            "tanh" => args_n(name, args, 0).map(|_| FSpec::Tanh),
            "const" => Ok(FSpec::Const(args_n(name, args, 1)?[0].num()?)),
            "poly" if !args.is_empty() => Ok(FSpec::Poly(nums()?)),
            "poly" => Err("poly needs at least one coefficient".into()),
            other => Err(format!("unknown function '{other}'; expected theta, square, sqrt_abs, tanh, const(c) or poly(c0, ...)")),
        }
    }

    pub fn field(&self) -> ScalarField {
        match self.clone() {
            FSpec::Theta => ScalarField::scalar(|x| x),
            FSpec::Square => ScalarField::scalar(|x| x * x),
            FSpec::SqrtAbs => ScalarField::scalar(|x: f64| x.abs().sqrt()),
            FSpec::Tanh => ScalarField::scalar(f64::tanh),
            FSpec::Const(c) => ScalarField::constant(1, c),
            FSpec::Poly(c) => {
                ScalarField::scalar(move |x| c.iter().rev().fold(0.0, |acc, k| acc * x + k))
            }
        }
    }

    /// Points where `f` is not smooth enough for the plain trapezoid rule.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            FSpec::SqrtAbs => vec![0.0],
            _ => Vec::new(),
        }
    }

    /// The solution of `f(θ) = level` when `f` is affine and nonconstant.
    ///
    /// Optimal proposals built from `|f - level|` have a kink there; placing
    /// it on a grid node keeps the trapezoid rule exact on both sides.
    pub fn affine_root(&self, level: f64) -> Option<f64> {
        let (c0, c1) = match self {
            FSpec::Theta => (0.0, 1.0),
            FSpec::Poly(c) if c.len() <= 2 || c[2..].iter().all(|v| *v == 0.0) => {
                (c[0], c.get(1).copied().unwrap_or(0.0))
            }
            _ => return None,
        };
        (c1 != 0.0).then(|| (level - c0) / c1)
    }
}

/// One integrand or a list of them for the vector schemes.
pub fn parse_f_list(e: &Expr) -> Result<Vec<FSpec>, String> {
    match e {
        Expr::List(items) if !items.is_empty() => items.iter().map(FSpec::from_expr).collect(),
        Expr::List(_) => Err("empty function list".into()),
        other => Ok(vec![FSpec::from_expr(other)?]),
    }
}

pub fn vector_field(fs: &[FSpec]) -> VectorField {
    VectorField::new(fs.iter().map(FSpec::field).collect())
}
