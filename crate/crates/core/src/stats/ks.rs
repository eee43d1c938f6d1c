use crate::error::{Error, Result};
use crate::grid::Axis;

/// Asymptotic Kolmogorov quantiles.
pub const KS_COEFF_95: f64 = 1.3581;
pub const KS_COEFF_99: f64 = 1.6276;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BandLevel {
    P95,
    P99,
}

impl BandLevel {
    pub fn coefficient(self) -> f64 {
        match self {
            BandLevel::P95 => KS_COEFF_95,
            BandLevel::P99 => KS_COEFF_99,
        }
    }
}

/// One-sample band `c / sqrt(n)`.
pub fn ks_band(n: usize, level: BandLevel) -> f64 {
    level.coefficient() / (n as f64).sqrt()
}

/// Two-sample band `c sqrt((n + m) / (n m))`.
pub fn ks_two_sample_band(n: usize, m: usize, level: BandLevel) -> f64 {
    let (n, m) = (n as f64, m as f64);
    level.coefficient() * ((n + m) / (n * m)).sqrt()
}

/// Density that is constant on each grid cell; its CDF is piecewise linear.
#[derive(Clone, Debug)]
pub struct CellDensity {
    origin: f64,
    dq: f64,
    cdf: Vec<f64>,
}

impl CellDensity {
    pub fn from_grid_density(axis: &Axis, density: &[f64]) -> Result<Self> {
        if density.len() != axis.len() {
            return Err(Error::GridMismatch("density length does not match axis".into()));
        }
        let mut cdf = Vec::with_capacity(density.len() + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        for &w in density {
            acc += w.max(0.0);
            cdf.push(acc);
        }
        if !(acc > 0.0) {
            return Err(Error::ZeroField);
        }
        cdf.iter_mut().for_each(|c| *c /= acc);
        Ok(Self { origin: axis.origin(), dq: axis.spacing(), cdf })
    }

    /// Marginal along axis `d` of a row-major plane density.
    pub fn marginal(axes: &[Axis], density: &[f64], d: usize) -> Result<Self> {
        let (n0, n1) = (axes[0].len(), axes[1].len());
        if density.len() != n0 * n1 {
            return Err(Error::GridMismatch("density length does not match plane".into()));
        }
        let m: Vec<f64> = if d == 0 {
            (0..n0).map(|i| density[i * n1..(i + 1) * n1].iter().sum()).collect()
        } else {
            (0..n1).map(|j| (0..n0).map(|i| density[i * n1 + j]).sum()).collect()
        };
        Self::from_grid_density(&axes[d], &m)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let s = (x - self.origin) / self.dq;
        let n = self.cdf.len() - 1;
        if s <= 0.0 {
            return 0.0;
        }
        if s >= n as f64 {
            return 1.0;
        }
        let j = s.floor() as usize;
        let w = s - j as f64;
        self.cdf[j] + w * (self.cdf[j + 1] - self.cdf[j])
    }
}

/// Sup distance between the empirical CDF and `cdf`, with `cdf_left` the left
/// limit (equal to `cdf` for continuous references). Ties are grouped.
pub fn ks_distance_with(samples: &[f64], cdf: impl Fn(f64) -> f64, cdf_left: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("empty sample set".into()));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("non-finite sample".into()));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < s.len() {
        let mut j = i;
        while j + 1 < s.len() && s[j + 1] == s[i] {
            j += 1;
        }
        let x = s[i];
        d = d.max((j + 1) as f64 / n - cdf(x)).max(cdf_left(x) - i as f64 / n);
        i = j + 1;
    }
    Ok(d.clamp(0.0, 1.0))
}

pub fn ks_distance(samples: &[f64], reference: &CellDensity) -> Result<f64> {
    ks_distance_with(samples, |x| reference.cdf(x), |x| reference.cdf(x))
}

/// Two-sample sup distance between empirical CDFs.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData("empty sample set".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}
