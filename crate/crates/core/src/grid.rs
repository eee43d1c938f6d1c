//! Uniform cell-centred grids on one or two configuration axes.
//!
//! Node `j` of an axis sits at `origin + (j + 1/2) * dq`, so that each node
//! owns the cell `[origin + j dq, origin + (j + 1) dq)`. Hard walls coincide
//! with the outer cell faces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_POINTS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    Periodic,
    HardWall,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    origin: f64,
    extent: f64,
    n: usize,
}

impl Axis {
    pub fn new(origin: f64, extent: f64, n: usize) -> Result<Self> {
        if !origin.is_finite() || !extent.is_finite() || extent <= 0.0 {
            return Err(Error::Grid(format!(
                "axis needs finite origin and positive extent (origin {origin}, extent {extent})"
            )));
        }
        if n < MIN_POINTS {
            return Err(Error::Grid(format!("axis needs at least {MIN_POINTS} points, got {n}")));
        }
        Ok(Self { origin, extent, n })
    }

    /// Axis symmetric about zero.
    pub fn centered(extent: f64, n: usize) -> Result<Self> {
        Self::new(-0.5 * extent, extent, n)
    }

    #[inline]
    pub fn origin(&self) -> f64 {
        self.origin
    }

    #[inline]
    pub fn extent(&self) -> f64 {
        self.extent
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn end(&self) -> f64 {
        self.origin + self.extent
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.extent / self.n as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        self.origin + (j as f64 + 0.5) * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n as i64;
        let dk = 2.0 * std::f64::consts::PI / self.extent;
        (0..n)
            .map(|j| {
                let m = if j <= (n - 1) / 2 { j } else { j - n };
                m as f64 * dk
            })
            .collect()
    }

    /// Fractional node coordinate of `x`: 0 at node 0, 1 at node 1, ...
    #[inline]
    pub fn fractional_index(&self, x: f64) -> f64 {
        (x - self.origin) / self.spacing() - 0.5
    }

    /// Map a position back into the domain: wrap for periodic, mirror for hard walls.
    #[inline]
    pub fn confine(&self, x: f64, boundary: Boundary) -> f64 {
        if x >= self.origin && x < self.origin + self.extent {
            return x;
        }
        match boundary {
            Boundary::Periodic => {
                let mut y = (x - self.origin).rem_euclid(self.extent);
                if y >= self.extent {
                    y = 0.0;
                }
                self.origin + y
            }
            Boundary::HardWall => {
                let period = 2.0 * self.extent;
                let y = (x - self.origin).rem_euclid(period);
                let y = if y > self.extent { period - y } else { y };
                self.origin + y
            }
        }
    }

    /// Signed displacement `b - a`, using the minimum image on periodic axes.
    #[inline]
    pub fn displacement(&self, a: f64, b: f64, boundary: Boundary) -> f64 {
        let d = b - a;
        match boundary {
            Boundary::Periodic => d - self.extent * (d / self.extent).round(),
            Boundary::HardWall => d,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    axes: Vec<Axis>,
    boundary: Boundary,
}

impl SpatialGrid {
    pub fn new(axes: Vec<Axis>, boundary: Boundary) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::Grid(format!("grids have 1 or 2 axes, got {}", axes.len())));
        }
        Ok(Self { axes, boundary })
    }

    pub fn line(axis: Axis, boundary: Boundary) -> Self {
        Self { axes: vec![axis], boundary }
    }

    pub fn plane(a: Axis, b: Axis, boundary: Boundary) -> Self {
        Self { axes: vec![a, b], boundary }
    }

    #[inline]
    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    #[inline]
    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    #[inline]
    pub fn axis(&self, d: usize) -> &Axis {
        &self.axes[d]
    }

    #[inline]
    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.axes.iter().map(Axis::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Volume element `dq^dims`.
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::spacing).product()
    }

    /// Row-major shape; axis 0 varies slowest.
    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        match self.axes.len() {
            1 => (self.axes[0].len(), 1),
            _ => (self.axes[0].len(), self.axes[1].len()),
        }
    }

    /// Coordinates of flat node index `i`.
    pub fn position(&self, i: usize) -> [f64; 2] {
        let (_, n1) = self.shape();
        match self.axes.len() {
            1 => [self.axes[0].node(i), 0.0],
            _ => [self.axes[0].node(i / n1), self.axes[1].node(i % n1)],
        }
    }

    pub fn is_power_of_two(&self) -> bool {
        self.axes.iter().all(|a| a.len().is_power_of_two())
    }

    pub fn require_spectral(&self) -> Result<()> {
        if self.is_power_of_two() {
            Ok(())
        } else {
            Err(Error::Grid("spectral operators need power-of-two point counts".into()))
        }
    }

    pub fn same_as(&self, other: &SpatialGrid) -> bool {
        self == other
    }

    pub fn check_same(&self, other: &SpatialGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch("fields live on different grids".into()))
        }
    }

    pub fn confine(&self, q: &mut [f64]) {
        for (d, x) in q.iter_mut().enumerate() {
            *x = self.axes[d].confine(*x, self.boundary);
        }
    }
}
