//! Uniform 1-D grids: the quadrature oracle and inverse-CDF sampling of
//! tabulated (possibly unnormalized) densities.
//!
//! Integrals use the composite trapezoid rule. Densities with kinks such as
//! `|f(θ) - I| π̄(θ)` gain nothing from higher-order rules, and the trapezoid
//! sum over a piecewise-linear interpolant is exactly that interpolant's
//! integral, which keeps the sampler and its normalizer consistent.
//!
//! [`integrate_split`] additionally splits the range at caller-declared
//! breakpoints and applies the trapezoid rule after a smoothstep change of
//! variables on each piece, which restores fast convergence for integrands
//! like `√|θ|` whose derivatives blow up at a point.

use std::ops::Deref;
use std::sync::Arc;

use rand::Rng;

use crate::density::{ProposalModel, Sampler, TargetModel};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::rng::McRng;

pub const DEFAULT_GRID_POINTS: usize = 1 << 14;

/// Uniformly spaced abscissae on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    lo: f64,
    hi: f64,
    n_points: usize,
    anchor: f64,
    anchor_index: usize,
}

impl Grid1D {
    pub fn new(lo: f64, hi: f64, n_points: usize) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "grid needs finite lo < hi, got [{lo}, {hi}]"
            )));
        }
        if n_points < 2 {
            return Err(Error::InvalidArgument(
                "grid needs at least 2 points".into(),
            ));
        }
        Ok(Self {
            lo,
            hi,
            n_points,
            anchor: lo,
            anchor_index: 0,
        })
    }

    pub fn with_default_points(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, DEFAULT_GRID_POINTS)
    }

    /// Grid with the same spacing as `new(lo, hi, n_points)`, shifted left by
    /// less than one cell and extended by one node so that `anchor` is a node.
    ///
    /// Used to place the sign change of `f` exactly on a node so that
    /// piecewise-linear interpolation of `f₊ π̄` keeps zero mass where `f₊ = 0`.
    pub fn aligned(lo: f64, hi: f64, n_points: usize, anchor: f64) -> Result<Self> {
        let base = Self::new(lo, hi, n_points)?;
        if !(anchor > lo && anchor < hi) {
            return Ok(base);
        }
        let h = base.spacing();
        let k = ((anchor - lo) / h).ceil() as usize;
        let new_lo = anchor - k as f64 * h;
        let n = n_points + 1;
        Ok(Self {
            lo: new_lo,
            hi: anchor + (n - 1 - k) as f64 * h,
            n_points: n,
            anchor,
            anchor_index: k,
        })
    }

    /// Grid over a target's declared bounds.
    pub fn for_target(target: &TargetModel, n_points: usize) -> Result<Self> {
        let (lo, hi) = target.grid_bounds().ok_or_else(|| {
            Error::InvalidArgument(
                "target declares neither finite support nor moments; pass explicit grid bounds"
                    .into(),
            )
        })?;
        Self::new(lo, hi, n_points)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        if self.anchor_index == 0 && self.anchor == self.lo {
            (self.hi - self.lo) / (self.n_points - 1) as f64
        } else {
            (self.anchor - self.lo) / self.anchor_index as f64
        }
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        let h = self.spacing();
        if i == self.n_points - 1 && self.anchor_index == 0 {
            return self.hi;
        }
        self.anchor + (i as f64 - self.anchor_index as f64) * h
    }

    pub fn abscissae(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }

    /// Same bounds and anchor, `n_points` replaced.
    pub fn with_points(&self, n_points: usize) -> Result<Self> {
        Self::new(self.lo, self.hi, n_points)
    }

    /// Evaluates `field` at every node; non-finite values are rejected.
    pub fn tabulate(&self, field: &ScalarField) -> Result<Vec<f64>> {
        (0..self.n_points)
            .map(|i| {
                let x = self.x(i);
                let v = field.eval1(x);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::NonFiniteEvaluation {
                        at: vec![x],
                        value: v,
                    })
                }
            })
            .collect()
    }
}

fn trapezoid(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    let inner: f64 = values[1..n - 1].iter().sum();
    h * (inner + 0.5 * (values[0] + values[n - 1]))
}

/// Composite trapezoid approximation of `∫_lo^hi field(θ) dθ`.
pub fn quadrature_integrate(grid: &Grid1D, field: &ScalarField) -> Result<f64> {
    let values = grid.tabulate(field)?;
    Ok(trapezoid(&values, grid.spacing()))
}

/// Trapezoid rule on each piece between breakpoints, after mapping each piece
/// `[a, b]` through `θ = a + (b - a)(3t² - 2t³)`. The mapping's derivative
/// vanishes at both ends, so endpoint nodes carry zero weight and are never
/// evaluated. The total node budget is `grid.n_points()`.
pub fn integrate_split(grid: &Grid1D, field: &ScalarField, breakpoints: &[f64]) -> Result<f64> {
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|b| *b > grid.lo() && *b < grid.hi())
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(grid.lo());
    edges.extend(cuts);
    edges.push(grid.hi());
    let span = grid.hi() - grid.lo();
    let mut total = 0.0;
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let m = (((b - a) / span) * grid.n_points() as f64).ceil().max(32.0) as usize;
        let dt = 1.0 / m as f64;
        let mut s = 0.0;
        for j in 1..m {
            let t = j as f64 * dt;
            let x = a + (b - a) * t * t * (3.0 - 2.0 * t);
            let jac = (b - a) * 6.0 * t * (1.0 - t);
            let v = field.eval1(x);
            if !v.is_finite() {
                return Err(Error::NonFiniteEvaluation {
                    at: vec![x],
                    value: v,
                });
            }
            s += v * jac;
        }
        total += s * dt;
    }
    Ok(total)
}

/// Values of a function on a grid.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub grid: Grid1D,
    pub values: Vec<f64>,
}

impl Tabulation {
    pub fn integral(&self) -> f64 {
        trapezoid(&self.values, self.grid.spacing())
    }
}

/// `Z = ∫ π` on the grid, plus the tabulated `π / Z`.
pub fn normalize(grid: &Grid1D, target: &TargetModel) -> Result<(f64, Tabulation)> {
    let values = grid.tabulate(&target.density_field())?;
    let z = trapezoid(&values, grid.spacing());
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::DegenerateDensity(format!(
            "normalizing constant is {z}"
        )));
    }
    let values = values.into_iter().map(|v| v / z).collect();
    Ok((
        z,
        Tabulation {
            grid: *grid,
            values,
        },
    ))
}

/// `Z` of a target: the declared value if present, otherwise grid quadrature.
pub fn target_z(target: &TargetModel, grid: &Grid1D) -> Result<f64> {
    match target.known_z() {
        Some(z) => Ok(z),
        None => normalize(grid, target).map(|(z, _)| z),
    }
}

/// Nonnegative piecewise-linear density through sorted nodes, with its CDF.
#[derive(Debug, Clone)]
pub struct PiecewiseLinear {
    xs: Vec<f64>,
    ys: Vec<f64>,
    cdf: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::InvalidArgument(
                "table needs at least two (x, y) pairs".into(),
            ));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument(
                "table abscissae must be strictly increasing".into(),
            ));
        }
        for (x, y) in xs.iter().zip(&ys) {
            if !y.is_finite() {
                return Err(Error::NonFiniteEvaluation {
                    at: vec![*x],
                    value: *y,
                });
            }
            if *y < 0.0 {
                return Err(Error::NegativeDensity { at: *x, value: *y });
            }
        }
        let mut cdf = Vec::with_capacity(xs.len());
        cdf.push(0.0);
        let mut acc = 0.0;
        for i in 1..xs.len() {
            acc += 0.5 * (ys[i - 1] + ys[i]) * (xs[i] - xs[i - 1]);
            cdf.push(acc);
        }
        if !(acc > 0.0) {
            return Err(Error::DegenerateDensity(
                "tabulated density is identically zero".into(),
            ));
        }
        Ok(Self { xs, ys, cdf })
    }

    pub fn total_mass(&self) -> f64 {
        *self.cdf.last().unwrap()
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    fn cell(&self, x: f64) -> Option<usize> {
        let (lo, hi) = self.bounds();
        if !(x >= lo && x <= hi) {
            return None;
        }
        let k = self.xs.partition_point(|v| *v <= x);
        Some(k.clamp(1, self.xs.len() - 1) - 1)
    }

    /// Interpolated (unnormalized) density; zero outside the table.
    pub fn eval(&self, x: f64) -> f64 {
        match self.cell(x) {
            None => 0.0,
            Some(k) => {
                let t = (x - self.xs[k]) / (self.xs[k + 1] - self.xs[k]);
                self.ys[k] + t * (self.ys[k + 1] - self.ys[k])
            }
        }
    }

    /// Normalized CDF at `x`.
    pub fn cdf_at(&self, x: f64) -> f64 {
        let (lo, hi) = self.bounds();
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        let k = self.cell(x).unwrap();
        let d = x - self.xs[k];
        let slope = (self.ys[k + 1] - self.ys[k]) / (self.xs[k + 1] - self.xs[k]);
        (self.cdf[k] + self.ys[k] * d + 0.5 * slope * d * d) / self.total_mass()
    }

    /// Exact inverse-CDF draw from the interpolated density.
    pub fn sample(&self, rng: &mut McRng) -> f64 {
        let u: f64 = rng.random();
        self.quantile(u)
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let target = u * self.total_mass();
        let k = self
            .cdf
            .partition_point(|c| *c <= target)
            .clamp(1, self.cdf.len() - 1)
            - 1;
        let r = target - self.cdf[k];
        let (a, b) = (self.ys[k], self.ys[k + 1]);
        let h = self.xs[k + 1] - self.xs[k];
        // Mass up to offset t in the cell: a t + (b - a) t² / (2h) = r.
        let disc = a * a + 2.0 * (b - a) * r / h;
        let denom = a + disc.max(0.0).sqrt();
        let t = if denom > 0.0 { 2.0 * r / denom } else { 0.0 };
        (self.xs[k] + t.clamp(0.0, h)).min(self.xs[k + 1])
    }
}

/// Proposal sampled by inverse CDF from the linear interpolant of a
/// tabulated unnormalized density.
///
/// Pointwise evaluation uses the supplied field divided by the trapezoid
/// normalizer, so for `q ∝ g` the ratio `g / q` equals the normalizer at
/// every draw. The interpolant differs from `g` between nodes by
/// `O(h²)`; that residual is the only discrepancy between the sampled law and
/// the evaluated density.
#[derive(Debug, Clone)]
pub struct GridProposal {
    proposal: ProposalModel,
    table: Arc<PiecewiseLinear>,
    norm_const: f64,
}

impl GridProposal {
    pub fn norm_const(&self) -> f64 {
        self.norm_const
    }

    pub fn table(&self) -> &PiecewiseLinear {
        &self.table
    }

    pub fn proposal(&self) -> &ProposalModel {
        &self.proposal
    }

    pub fn into_proposal(self) -> ProposalModel {
        self.proposal
    }

    /// Same sampler, but evaluated through the interpolant itself, i.e. the
    /// exact density of the draws.
    pub fn interpolated(&self) -> ProposalModel {
        let t = self.table.clone();
        let lc = self.norm_const.ln();
        ProposalModel::new(
            ScalarField::scalar(move |x| t.eval(x).ln() - lc),
            self.proposal.sampler().clone(),
        )
        .with_label(format!("{} (interpolated)", self.proposal.label()))
    }
}

impl Deref for GridProposal {
    type Target = ProposalModel;
    fn deref(&self) -> &ProposalModel {
        &self.proposal
    }
}

impl From<GridProposal> for ProposalModel {
    fn from(g: GridProposal) -> Self {
        g.proposal
    }
}

/// Makes a nonnegative unnormalized density usable as a proposal.
pub fn grid_sampler(grid: &Grid1D, unnorm_density: &ScalarField) -> Result<GridProposal> {
    let xs = grid.abscissae();
    let ys = grid.tabulate(unnorm_density)?;
    let table = Arc::new(PiecewiseLinear::new(xs, ys)?);
    let norm_const = table.total_mass();
    let (lo, hi) = table.bounds();
    let lc = norm_const.ln();
    let g = unnorm_density.clone();
    let log_density = ScalarField::scalar(move |x| {
        if x < lo || x > hi {
            f64::NEG_INFINITY
        } else {
            g.eval1(x).ln() - lc
        }
    });
    let st = table.clone();
    let sampler = Sampler::scalar(move |rng| st.sample(rng));
    Ok(GridProposal {
        proposal: ProposalModel::new(log_density, sampler).with_label("grid"),
        table,
        norm_const,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::gaussian_log_pdf;
    use crate::rng::RngStream;
    use std::f64::consts::PI;

    #[test]
    fn constant_integrand_is_exact() {
        let g = Grid1D::new(0.0, 1.0, 1024).unwrap();
        let v = quadrature_integrate(&g, &ScalarField::constant(1, 1.0)).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_integral_matches_closed_form() {
        let g = Grid1D::with_default_points(-10.0, 10.0).unwrap();
        let v = quadrature_integrate(&g, &ScalarField::scalar(|x| (-0.5 * x * x).exp())).unwrap();
        assert!((v - (2.0 * PI).sqrt()).abs() < 1e-8);
    }

    #[test]
    fn non_finite_value_reports_abscissa() {
        let g = Grid1D::new(-1.0, 1.0, 3).unwrap();
        let err = quadrature_integrate(&g, &ScalarField::scalar(|x| 1.0 / x)).unwrap_err();
        assert_eq!(
            err,
            Error::NonFiniteEvaluation {
                at: vec![0.0],
                value: f64::INFINITY
            }
        );
    }

    #[test]
    fn sqrt_abs_reference_agrees_across_resolutions() {
        let f = ScalarField::scalar(|x: f64| x.abs().sqrt() * gaussian_log_pdf(x, -1.0, 1.0).exp());
        let coarse = Grid1D::new(-12.0, 10.0, 1 << 14).unwrap();
        let fine = coarse.with_points(1 << 16).unwrap();
        let a = integrate_split(&coarse, &f, &[0.0]).unwrap();
        let b = integrate_split(&fine, &f, &[0.0]).unwrap();
        assert!((a - b).abs() < 1e-7, "{a} vs {b}");
    }

    #[test]
    fn normalize_examples() {
        let g = Grid1D::with_default_points(-11.0, 9.0).unwrap();
        let (z, tab) = normalize(&g, &TargetModel::gaussian(-1.0, 1.0)).unwrap();
        assert!((z - 1.0).abs() < 1e-8);
        assert!((tab.integral() - 1.0).abs() < 1e-10);

        let g = Grid1D::with_default_points(-10.0, 10.0).unwrap();
        let (z, _) = normalize(&g, &TargetModel::gaussian_unnorm(0.0, 1.0)).unwrap();
        assert!((z - (2.0 * PI).sqrt()).abs() < 1e-8);

        let (z, _) = normalize(&g, &TargetModel::gaussian(0.0, 1.0).scaled(3.0).unwrap()).unwrap();
        assert!((z - 3.0).abs() < 1e-8);
    }

    #[test]
    fn normalize_rejects_zero_mass() {
        let g = Grid1D::new(0.0, 1.0, 16).unwrap();
        let t = TargetModel::new(
            ScalarField::scalar(|_| f64::NEG_INFINITY),
            crate::density::Support::real_line(),
        );
        assert!(matches!(
            normalize(&g, &t),
            Err(Error::DegenerateDensity(_))
        ));
    }

    #[test]
    fn grid_sampler_rejects_bad_densities() {
        let g = Grid1D::new(-1.0, 1.0, 11).unwrap();
        let neg = grid_sampler(&g, &ScalarField::scalar(|x| x));
        assert!(matches!(neg, Err(Error::NegativeDensity { .. })));
        let zero = grid_sampler(&g, &ScalarField::constant(1, 0.0));
        assert!(matches!(zero, Err(Error::DegenerateDensity(_))));
    }

    #[test]
    fn grid_sampler_zero_at_kink() {
        let g = Grid1D::with_default_points(-11.0, 9.0).unwrap();
        let q = grid_sampler(
            &g,
            &ScalarField::scalar(|x: f64| x.abs() * gaussian_log_pdf(x, -1.0, 1.0).exp()),
        )
        .unwrap();
        assert_eq!(q.density1(0.0), 0.0);
    }

    #[test]
    fn grid_sampler_symmetric_mean() {
        let g = Grid1D::with_default_points(-10.0, 10.0).unwrap();
        let q = grid_sampler(&g, &ScalarField::scalar(|x| (-0.5 * x * x).exp())).unwrap();
        let mut rng = RngStream::new(5, 0).rng();
        let n = 100_000;
        let mean = (0..n).map(|_| q.sampler().draw(&mut rng)[0]).sum::<f64>() / n as f64;
        assert!(mean.abs() < 3.0 / (n as f64).sqrt());
    }

    #[test]
    fn grid_density_integrates_to_one() {
        let g = Grid1D::with_default_points(-10.0, 10.0).unwrap();
        let q = grid_sampler(
            &g,
            &ScalarField::scalar(|x: f64| (x * x + 0.1) * (-0.5 * x * x).exp()),
        )
        .unwrap();
        let mass = quadrature_integrate(&g, &q.density_field()).unwrap();
        assert!((mass - 1.0).abs() < 1e-8);
    }

    #[test]
    fn quantile_inverts_cdf() {
        let t = PiecewiseLinear::new(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 1.0]).unwrap();
        for u in [0.0, 0.1, 0.25, 0.5, 0.9, 0.999] {
            let x = t.quantile(u);
            assert!((t.cdf_at(x) - u).abs() < 1e-12, "u={u}");
        }
    }

    #[test]
    fn aligned_grid_places_anchor_on_node() {
        let g = Grid1D::aligned(-11.3, 9.0, 1000, 0.0).unwrap();
        let h = g.spacing();
        assert!(g.lo() <= -11.3 && g.hi() >= 9.0 - h);
        assert!(g.abscissae().contains(&0.0));
    }
}
