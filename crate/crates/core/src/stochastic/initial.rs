use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SpatialGrid;
use crate::rng::{stream, Purpose};

/// How initial positions are drawn from the initial density.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    Iid,
    /// One uniform per stratum `[(i + u)/n]` along the first axis.
    #[default]
    Stratified,
}

fn cumulative(weights: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut c = vec![0.0];
    let mut acc = 0.0;
    for w in weights {
        acc += w.max(0.0);
        c.push(acc);
    }
    c
}

/// Position within the piecewise-constant density with cumulative weights `cdf` at level `u`.
fn invert(cdf: &[f64], u: f64) -> f64 {
    let target = u * cdf[cdf.len() - 1];
    let j = cdf.partition_point(|&c| c <= target).clamp(1, cdf.len() - 1) - 1;
    let w = cdf[j + 1] - cdf[j];
    let frac = if w > 0.0 { ((target - cdf[j]) / w).clamp(0.0, 1.0 - 1e-12) } else { 0.5 };
    j as f64 + frac
}

/// Sample `n` positions from the cellwise-constant density `omega` on `grid`.
/// Sample `i` uses only the streams of index `i`.
pub fn sample_initial_positions(
    omega: &[f64],
    grid: &SpatialGrid,
    n: usize,
    master_seed: u64,
    sampling: Sampling,
) -> Result<Vec<[f64; 2]>> {
    if omega.len() != grid.len() {
        return Err(Error::GridMismatch("density length does not match grid".into()));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("ensemble size must be positive".into()));
    }
    let (n0, n1) = grid.shape();
    let marginal = cumulative((0..n0).map(|i| omega[i * n1..(i + 1) * n1].iter().sum()));
    if !(marginal[n0] > 0.0) {
        return Err(Error::ZeroField);
    }
    let a0 = grid.axis(0);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut r = stream(master_seed, Purpose::InitialPosition, i as u64);
        let u: f64 = r.random();
        let u = match sampling {
            Sampling::Iid => u,
            Sampling::Stratified => (i as f64 + u) / n as f64,
        };
        let s0 = invert(&marginal, u);
        let mut q = [a0.origin() + s0 * a0.spacing(), 0.0];
        if grid.dims() == 2 {
            let row = (s0.floor() as usize).min(n0 - 1);
            let cond = cumulative(omega[row * n1..(row + 1) * n1].iter().copied());
            let u2: f64 = stream(master_seed, Purpose::InitialPositionSecond, i as u64).random();
            let a1 = grid.axis(1);
            q[1] = a1.origin() + invert(&cond, u2) * a1.spacing();
        }
        out.push(q);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Axis, Boundary};

    #[test]
    fn stratified_uniform_is_evenly_spread() {
        let g = SpatialGrid::line(Axis::new(0.0, 1.0, 16).unwrap(), Boundary::HardWall);
        let q = sample_initial_positions(&[1.0; 16], &g, 100, 3, Sampling::Stratified).unwrap();
        for (i, p) in q.iter().enumerate() {
            assert!(p[0] >= i as f64 / 100.0 - 1e-12 && p[0] <= (i + 1) as f64 / 100.0 + 1e-12);
        }
    }

    #[test]
    fn zero_weight_cells_are_never_hit() {
        let g = SpatialGrid::line(Axis::new(0.0, 16.0, 16).unwrap(), Boundary::HardWall);
        let mut w = vec![0.0; 16];
        w[5] = 1.0;
        for p in sample_initial_positions(&w, &g, 50, 9, Sampling::Iid).unwrap() {
            assert!(p[0] >= 5.0 && p[0] < 6.0);
        }
    }
}
