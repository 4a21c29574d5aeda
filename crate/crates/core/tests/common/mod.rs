#![allow(dead_code)]

use isopt_core::density::TargetModel;
use isopt_core::field::ScalarField;
use isopt_core::grid::{grid_sampler, Grid1D};
use isopt_core::optimal::{OptimalSpec, Scheme};
use isopt_core::{ProposalModel, Result, RngStream};
use rayon::prelude::*;

pub const GRID_POINTS: usize = 1 << 14;

/// Runs `f` on `reps` replication streams of `seed`, in index order.
pub fn replicate<F>(reps: usize, seed: u64, f: F) -> Vec<f64>
where
    F: Fn(RngStream) -> Result<f64> + Sync,
{
    (0..reps as u64)
        .into_par_iter()
        .map(|k| f(RngStream::replication(seed, k)).expect("replication failed"))
        .collect()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn var(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn mse(xs: &[f64], truth: f64) -> f64 {
    xs.iter().map(|x| (x - truth) * (x - truth)).sum::<f64>() / xs.len() as f64
}

/// Standard error of the mean.
pub fn se(xs: &[f64]) -> f64 {
    (var(xs) / xs.len() as f64).sqrt()
}

pub fn theta() -> ScalarField {
    ScalarField::scalar(|x| x)
}

/// N(-1, 1) with f(θ) = θ, I = -1.
pub fn benchmark() -> TargetModel {
    TargetModel::gaussian(-1.0, 1.0)
}

/// exp(-θ²/2), Z = √(2π).
pub fn gauss_unnorm() -> TargetModel {
    TargetModel::gaussian_unnorm(0.0, 1.0)
}

pub fn sqrt_2pi() -> f64 {
    (2.0 * std::f64::consts::PI).sqrt()
}

/// Grid over the target's range with a node at `anchor`.
pub fn grid_at(target: &TargetModel, anchor: f64) -> Grid1D {
    let (lo, hi) = target.grid_bounds().unwrap();
    Grid1D::aligned(lo, hi, GRID_POINTS, anchor).unwrap()
}

/// Grid-built optimal proposal for a single-density scheme.
pub fn built_proposal(spec: OptimalSpec, grid: &Grid1D) -> ProposalModel {
    let f = spec.build().unwrap().single().unwrap();
    grid_sampler(grid, &f).unwrap().into_proposal()
}

/// `|θ + 1| π̄` for the benchmark.
pub fn snis_qopt() -> ProposalModel {
    let t = benchmark();
    built_proposal(
        OptimalSpec::new(Scheme::Snis)
            .target(t.clone())
            .f(theta())
            .plug_i(-1.0),
        &grid_at(&t, -1.0),
    )
}
