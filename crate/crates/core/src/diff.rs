//! Spatial differential operators on [`SpatialGrid`]s.
//!
//! Periodic grids default to spectral differentiation, hard-wall grids to
//! fourth-order central differences with one-sided closures at the walls.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::Result;
use crate::grid::{Boundary, SpatialGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Spectral,
    FourthOrder,
}

impl Scheme {
    pub fn default_for(boundary: Boundary) -> Self {
        match boundary {
            Boundary::Periodic => Scheme::Spectral,
            Boundary::HardWall => Scheme::FourthOrder,
        }
    }
}

#[derive(Clone)]
struct AxisPlan {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    k: Vec<f64>,
}

/// First and second partial derivatives of a complex field, one entry per axis.
pub struct ComplexDerivatives {
    pub first: Vec<Vec<Complex64>>,
    pub second: Option<Vec<Vec<Complex64>>>,
}

#[derive(Clone)]
pub struct Differentiator {
    grid: SpatialGrid,
    scheme: Scheme,
    plans: Vec<AxisPlan>,
}

impl std::fmt::Debug for Differentiator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Differentiator").field("scheme", &self.scheme).finish()
    }
}

impl Differentiator {
    pub fn new(grid: &SpatialGrid) -> Result<Self> {
        Self::with_scheme(grid, Scheme::default_for(grid.boundary()))
    }

    pub fn with_scheme(grid: &SpatialGrid, scheme: Scheme) -> Result<Self> {
        let mut plans = Vec::new();
        if scheme == Scheme::Spectral {
            grid.require_spectral()?;
            let mut planner = FftPlanner::new();
            for axis in grid.axes() {
                plans.push(AxisPlan {
                    fwd: planner.plan_fft_forward(axis.len()),
                    inv: planner.plan_fft_inverse(axis.len()),
                    k: axis.wavenumbers(),
                });
            }
        }
        Ok(Self { grid: grid.clone(), scheme, plans })
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Partial derivative of order 1 or 2 along `axis`.
    pub fn derivative_complex(&self, f: &[Complex64], axis: usize, order: u8) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); f.len()];
        let h = self.grid.axis(axis).spacing();
        let periodic = self.grid.boundary() == Boundary::Periodic;
        match self.scheme {
            Scheme::Spectral => {
                let plan = &self.plans[axis];
                let n = plan.k.len();
                let norm = 1.0 / n as f64;
                let mut scratch = vec![Complex64::new(0.0, 0.0); plan.fwd.get_inplace_scratch_len().max(plan.inv.get_inplace_scratch_len())];
                map_lines(&self.grid, axis, f, &mut out, |line_in, line_out| {
                    line_out.copy_from_slice(line_in);
                    plan.fwd.process_with_scratch(line_out, &mut scratch);
                    for (j, c) in line_out.iter_mut().enumerate() {
                        let k = plan.k[j];
                        *c = match order {
                            1 if n % 2 == 0 && j == n / 2 => Complex64::new(0.0, 0.0),
                            1 => *c * Complex64::new(0.0, k * norm),
                            _ => *c * (-k * k * norm),
                        };
                    }
                    plan.inv.process_with_scratch(line_out, &mut scratch);
                });
            }
            Scheme::FourthOrder => {
                map_lines(&self.grid, axis, f, &mut out, |line_in, line_out| {
                    if order == 1 {
                        fd4_first(line_in, line_out, h, periodic);
                    } else {
                        fd4_second(line_in, line_out, h, periodic);
                    }
                });
            }
        }
        out
    }

    pub fn derivatives_complex(&self, f: &[Complex64], second: bool) -> ComplexDerivatives {
        let dims = self.grid.dims();
        let first = (0..dims).map(|d| self.derivative_complex(f, d, 1)).collect();
        let second = second.then(|| (0..dims).map(|d| self.derivative_complex(f, d, 2)).collect());
        ComplexDerivatives { first, second }
    }

    pub fn derivative(&self, f: &[f64], axis: usize, order: u8) -> Vec<f64> {
        let c: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.derivative_complex(&c, axis, order).into_iter().map(|z| z.re).collect()
    }

    /// One component per axis.
    pub fn gradient(&self, f: &[f64]) -> Vec<Vec<f64>> {
        (0..self.grid.dims()).map(|d| self.derivative(f, d, 1)).collect()
    }

    pub fn laplacian(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; f.len()];
        for d in 0..self.grid.dims() {
            for (o, v) in out.iter_mut().zip(self.derivative(f, d, 2)) {
                *o += v;
            }
        }
        out
    }

    pub fn divergence(&self, v: &[Vec<f64>]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for (d, comp) in v.iter().enumerate() {
            for (o, x) in out.iter_mut().zip(self.derivative(comp, d, 1)) {
                *o += x;
            }
        }
        out
    }
}

/// Apply `f` to every grid line along `axis`.
pub(crate) fn map_lines<T: Copy + Default>(
    grid: &SpatialGrid,
    axis: usize,
    input: &[T],
    output: &mut [T],
    mut f: impl FnMut(&[T], &mut [T]),
) {
    let (n0, n1) = grid.shape();
    if grid.dims() == 1 {
        f(input, output);
        return;
    }
    if axis == 1 {
        for (a, b) in input.chunks(n1).zip(output.chunks_mut(n1)) {
            f(a, b);
        }
    } else {
        let mut line_in = vec![T::default(); n0];
        let mut line_out = vec![T::default(); n0];
        for col in 0..n1 {
            for r in 0..n0 {
                line_in[r] = input[r * n1 + col];
            }
            f(&line_in, &mut line_out);
            for r in 0..n0 {
                output[r * n1 + col] = line_out[r];
            }
        }
    }
}

pub(crate) trait LineValue:
    Copy + std::ops::Add<Output = Self> + std::ops::Sub<Output = Self> + std::ops::Mul<f64, Output = Self>
{
}
impl LineValue for f64 {}
impl LineValue for Complex64 {}

fn fd4_first<T: LineValue>(f: &[T], out: &mut [T], h: f64, periodic: bool) {
    let n = f.len();
    let c = 1.0 / (12.0 * h);
    if periodic {
        for j in 0..n {
            let m2 = f[(j + n - 2) % n];
            let m1 = f[(j + n - 1) % n];
            let p1 = f[(j + 1) % n];
            let p2 = f[(j + 2) % n];
            out[j] = ((p1 - m1) * 8.0 - (p2 - m2)) * c;
        }
        return;
    }
    for j in 2..n - 2 {
        out[j] = ((f[j + 1] - f[j - 1]) * 8.0 - (f[j + 2] - f[j - 2])) * c;
    }
    out[0] = (f[0] * -25.0 + f[1] * 48.0 - f[2] * 36.0 + f[3] * 16.0 - f[4] * 3.0) * c;
    out[1] = (f[0] * -3.0 - f[1] * 10.0 + f[2] * 18.0 - f[3] * 6.0 + f[4]) * c;
    out[n - 1] = (f[n - 1] * 25.0 - f[n - 2] * 48.0 + f[n - 3] * 36.0 - f[n - 4] * 16.0 + f[n - 5] * 3.0) * c;
    out[n - 2] = (f[n - 1] * 3.0 + f[n - 2] * 10.0 - f[n - 3] * 18.0 + f[n - 4] * 6.0 - f[n - 5]) * c;
}

fn fd4_second<T: LineValue>(f: &[T], out: &mut [T], h: f64, periodic: bool) {
    let n = f.len();
    let c = 1.0 / (12.0 * h * h);
    if periodic {
        for j in 0..n {
            let m2 = f[(j + n - 2) % n];
            let m1 = f[(j + n - 1) % n];
            let p1 = f[(j + 1) % n];
            let p2 = f[(j + 2) % n];
            out[j] = ((p1 + m1) * 16.0 - (p2 + m2) - f[j] * 30.0) * c;
        }
        return;
    }
    for j in 2..n - 2 {
        out[j] = ((f[j + 1] + f[j - 1]) * 16.0 - (f[j + 2] + f[j - 2]) - f[j] * 30.0) * c;
    }
    out[0] = (f[0] * 45.0 - f[1] * 154.0 + f[2] * 214.0 - f[3] * 156.0 + f[4] * 61.0 - f[5] * 10.0) * c;
    out[1] = (f[0] * 10.0 - f[1] * 15.0 - f[2] * 4.0 + f[3] * 14.0 - f[4] * 6.0 + f[5]) * c;
    out[n - 1] = (f[n - 1] * 45.0 - f[n - 2] * 154.0 + f[n - 3] * 214.0 - f[n - 4] * 156.0 + f[n - 5] * 61.0
        - f[n - 6] * 10.0)
        * c;
    out[n - 2] = (f[n - 1] * 10.0 - f[n - 2] * 15.0 - f[n - 3] * 4.0 + f[n - 4] * 14.0 - f[n - 5] * 6.0 + f[n - 6]) * c;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Axis;
    use std::f64::consts::PI;

    fn periodic_line(n: usize) -> SpatialGrid {
        SpatialGrid::line(Axis::new(0.0, 2.0 * PI, n).unwrap(), Boundary::Periodic)
    }

    #[test]
    fn spectral_gradient_of_sine_is_cosine() {
        let g = periodic_line(64);
        let d = Differentiator::new(&g).unwrap();
        let x = g.axis(0).nodes();
        let f: Vec<f64> = x.iter().map(|x| x.sin()).collect();
        let df = &d.gradient(&f)[0];
        for (xi, v) in x.iter().zip(df) {
            assert!((v - xi.cos()).abs() < 1e-10);
        }
    }

    #[test]
    fn spectral_derivative_of_resolved_plane_wave() {
        let g = periodic_line(32);
        let d = Differentiator::new(&g).unwrap();
        let k = 5.0;
        let f: Vec<Complex64> = g.axis(0).nodes().iter().map(|&x| Complex64::new(0.0, k * x).exp()).collect();
        let df = d.derivative_complex(&f, 0, 1);
        for (a, b) in f.iter().zip(&df) {
            assert!((a * Complex64::new(0.0, k) - b).norm() < 1e-12);
        }
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        for boundary in [Boundary::Periodic, Boundary::HardWall] {
            let g = SpatialGrid::plane(Axis::centered(4.0, 16).unwrap(), Axis::centered(3.0, 32).unwrap(), boundary);
            let d = Differentiator::new(&g).unwrap();
            let lap = d.laplacian(&vec![2.5; g.len()]);
            assert!(lap.iter().all(|v| v.abs() < 1e-9));
        }
    }

    #[test]
    fn fourth_order_is_exact_on_quartics() {
        let g = SpatialGrid::line(Axis::new(-1.0, 2.0, 20).unwrap(), Boundary::HardWall);
        let d = Differentiator::new(&g).unwrap();
        let x = g.axis(0).nodes();
        let f: Vec<f64> = x.iter().map(|x| x.powi(4) - 2.0 * x.powi(3) + x).collect();
        let d1 = d.derivative(&f, 0, 1);
        let d2 = d.derivative(&f, 0, 2);
        for (i, x) in x.iter().enumerate() {
            assert!((d1[i] - (4.0 * x.powi(3) - 6.0 * x * x + 1.0)).abs() < 1e-9, "d1 at {i}");
            assert!((d2[i] - (12.0 * x * x - 12.0 * x)).abs() < 1e-8, "d2 at {i}");
        }
    }

    #[test]
    fn fourth_order_converges_at_fourth_order() {
        let err = |n: usize| {
            let g = SpatialGrid::line(Axis::new(0.0, 1.0, n).unwrap(), Boundary::HardWall);
            let d = Differentiator::new(&g).unwrap();
            let x = g.axis(0).nodes();
            let f: Vec<f64> = x.iter().map(|x| (3.0 * x).exp()).collect();
            d.derivative(&f, 0, 1).iter().zip(&x).map(|(v, x)| (v - 3.0 * (3.0 * x).exp()).abs()).fold(0.0, f64::max)
        };
        let order = (err(32) / err(64)).log2();
        assert!(order > 3.5, "observed order {order}");
    }

    #[test]
    fn divergence_along_second_axis() {
        let g = SpatialGrid::plane(
            Axis::new(0.0, 2.0 * PI, 16).unwrap(),
            Axis::new(0.0, 2.0 * PI, 32).unwrap(),
            Boundary::Periodic,
        );
        let d = Differentiator::new(&g).unwrap();
        let v0 = vec![0.0; g.len()];
        let v1: Vec<f64> = (0..g.len()).map(|i| g.position(i)[1].sin()).collect();
        let div = d.divergence(&[v0, v1]);
        for i in 0..g.len() {
            assert!((div[i] - g.position(i)[1].cos()).abs() < 1e-10);
        }
    }
}
