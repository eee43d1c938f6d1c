//! Complex wave functions and their polar (density/phase-gradient) decomposition.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::diff::{map_lines, Differentiator};
use crate::error::{Error, Result};
use crate::grid::{Boundary, SpatialGrid};

/// Accepted deviation of `sum |psi|^2 dq^dims` from one.
pub const NORM_TOLERANCE: f64 = 1e-8;
/// Nodes are cells with `omega < NODE_EPSILON * max(omega)`.
pub const NODE_EPSILON: f64 = 1e-12;
/// Mean plaquette curl above which a phase gradient is rejected as non-integrable.
pub const CURL_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct WaveFunction {
    grid: SpatialGrid,
    values: Vec<Complex64>,
    time: f64,
}

impl WaveFunction {
    pub fn new(grid: SpatialGrid, values: Vec<Complex64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values, time })
    }

    pub fn from_fn(grid: &SpatialGrid, time: f64, f: impl Fn([f64; 2]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.position(i))).collect();
        Self { grid: grid.clone(), values, time }
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(Complex64::norm_sqr).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(Complex64::norm_sqr).collect()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let norm = self.norm();
        if norm <= 0.0 || !norm.is_finite() {
            return Err(Error::ZeroField);
        }
        let s = norm.sqrt().recip();
        self.values.iter_mut().for_each(|v| *v *= s);
        Ok(())
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    pub fn check_normalized(&self) -> Result<()> {
        let norm = self.norm();
        if norm == 0.0 {
            return Err(Error::ZeroField);
        }
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm });
        }
        Ok(())
    }

    /// `<self|other>` by grid quadrature.
    pub fn inner(&self, other: &WaveFunction) -> Complex64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).sum::<Complex64>() * self.grid.cell_volume()
    }

    pub fn l2_distance(&self, other: &WaveFunction) -> f64 {
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm_sqr()).sum();
        (s * self.grid.cell_volume()).sqrt()
    }

    pub fn with_global_phase(&self, phi: f64) -> Self {
        let r = Complex64::from_polar(1.0, phi);
        Self { grid: self.grid.clone(), values: self.values.iter().map(|v| v * r).collect(), time: self.time }
    }
}

/// Second spatial derivatives of the phase and log-density, per axis.
#[derive(Clone, Debug)]
pub struct SecondOrderFields {
    pub d2_s: Vec<Vec<f64>>,
    pub d2_ln_omega: Vec<Vec<f64>>,
}

/// Hydrodynamic view of a wave function: density, phase gradient and
/// log-density gradient, with nodes flagged and zeroed.
#[derive(Clone, Debug)]
pub struct PolarFields {
    grid: SpatialGrid,
    time: f64,
    hbar_eff: f64,
    omega: Vec<f64>,
    grad_s: Vec<Vec<f64>>,
    grad_ln_omega: Vec<Vec<f64>>,
    node: Vec<bool>,
    dt_s: Option<Vec<f64>>,
    second: Option<SecondOrderFields>,
}

impl PolarFields {
    /// Assemble fields directly; nodes are flagged from `omega`.
    pub fn from_parts(
        grid: SpatialGrid,
        time: f64,
        hbar_eff: f64,
        omega: Vec<f64>,
        grad_s: Vec<Vec<f64>>,
        grad_ln_omega: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if hbar_eff <= 0.0 {
            return Err(Error::InvalidParameter("hbar_eff must be positive".into()));
        }
        let n = grid.len();
        if omega.len() != n
            || grad_s.len() != grid.dims()
            || grad_ln_omega.len() != grid.dims()
            || grad_s.iter().chain(&grad_ln_omega).any(|c| c.len() != n)
        {
            return Err(Error::GridMismatch("field component lengths do not match grid".into()));
        }
        let node = flag_nodes(&omega)?;
        Ok(Self { grid, time, hbar_eff, omega, grad_s, grad_ln_omega, node, dt_s: None, second: None })
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn hbar_eff(&self) -> f64 {
        self.hbar_eff
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn grad_s(&self) -> &[Vec<f64>] {
        &self.grad_s
    }

    pub fn grad_ln_omega(&self) -> &[Vec<f64>] {
        &self.grad_ln_omega
    }

    pub fn node_mask(&self) -> &[bool] {
        &self.node
    }

    pub fn node_count(&self) -> usize {
        self.node.iter().filter(|&&b| b).count()
    }

    pub fn dt_s(&self) -> Option<&[f64]> {
        self.dt_s.as_deref()
    }

    pub fn second(&self) -> Option<&SecondOrderFields> {
        self.second.as_ref()
    }

    pub fn set_dt_s(&mut self, dt_s: Vec<f64>) -> Result<()> {
        if dt_s.len() != self.grid.len() {
            return Err(Error::GridMismatch("dtS length does not match grid".into()));
        }
        self.dt_s = Some(dt_s);
        Ok(())
    }

    /// Mass of the density on the grid.
    pub fn total_probability(&self) -> f64 {
        self.omega.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// Divergence of the phase-gradient velocity, `sum_d d2S_d / m_d`.
    pub fn theta(&self, masses: &[f64]) -> Result<Vec<f64>> {
        let second = self.require_second()?;
        let mut out = vec![0.0; self.grid.len()];
        for (d, comp) in second.d2_s.iter().enumerate() {
            for (o, v) in out.iter_mut().zip(comp) {
                *o += v / masses[d];
            }
        }
        Ok(out)
    }

    /// Quantum potential `-(hbar^2/2m) lap(sqrt Omega)/sqrt Omega`, summed over axes.
    pub fn quantum_potential(&self, masses: &[f64]) -> Result<Vec<f64>> {
        let second = self.require_second()?;
        let h2 = self.hbar_eff * self.hbar_eff;
        let mut q = vec![0.0; self.grid.len()];
        for d in 0..self.grid.dims() {
            let c = h2 / (2.0 * masses[d]);
            for i in 0..q.len() {
                let g = self.grad_ln_omega[d][i];
                q[i] -= c * (0.5 * second.d2_ln_omega[d][i] + 0.25 * g * g);
            }
        }
        Ok(q)
    }

    /// Fill `dtS` from the quantum Hamilton-Jacobi identity for potential values `v` on the grid.
    pub fn set_dt_s_from_hamilton_jacobi(&mut self, v: &[f64], masses: &[f64]) -> Result<()> {
        let q = self.quantum_potential(masses)?;
        let mut dt_s = vec![0.0; self.grid.len()];
        for i in 0..dt_s.len() {
            if self.node[i] {
                continue;
            }
            let kinetic: f64 = (0..self.grid.dims()).map(|d| self.grad_s[d][i].powi(2) / (2.0 * masses[d])).sum();
            dt_s[i] = -kinetic - v[i] - q[i];
        }
        self.dt_s = Some(dt_s);
        Ok(())
    }

    /// Pointwise blend `(1 - w) a + w b` of density and gradients. Nodes are
    /// re-flagged from the blended density; `dtS` and second-order parts are
    /// blended only when both frames carry them.
    pub fn lerp(a: &PolarFields, b: &PolarFields, w: f64) -> Result<PolarFields> {
        a.grid.check_same(&b.grid)?;
        let mix = |x: &[f64], y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(p, q)| (1.0 - w) * p + w * q).collect() };
        let mix_v = |x: &[Vec<f64>], y: &[Vec<f64>]| -> Vec<Vec<f64>> { x.iter().zip(y).map(|(p, q)| mix(p, q)).collect() };
        let mut out = PolarFields::from_parts(
            a.grid.clone(),
            (1.0 - w) * a.time + w * b.time,
            a.hbar_eff,
            mix(&a.omega, &b.omega),
            mix_v(&a.grad_s, &b.grad_s),
            mix_v(&a.grad_ln_omega, &b.grad_ln_omega),
        )?;
        for i in 0..out.node.len() {
            if out.node[i] || a.node[i] || b.node[i] {
                out.node[i] = true;
                for d in 0..out.grid.dims() {
                    out.grad_s[d][i] = 0.0;
                    out.grad_ln_omega[d][i] = 0.0;
                }
            }
        }
        if let (Some(x), Some(y)) = (&a.dt_s, &b.dt_s) {
            out.dt_s = Some(mix(x, y));
        }
        if let (Some(x), Some(y)) = (&a.second, &b.second) {
            out.second = Some(SecondOrderFields {
                d2_s: mix_v(&x.d2_s, &y.d2_s),
                d2_ln_omega: mix_v(&x.d2_ln_omega, &y.d2_ln_omega),
            });
        }
        Ok(out)
    }

    fn require_second(&self) -> Result<&SecondOrderFields> {
        self.second
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("second-order fields were not computed".into()))
    }
}

fn flag_nodes(omega: &[f64]) -> Result<Vec<bool>> {
    let max = omega.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 || !max.is_finite() {
        return Err(Error::ZeroField);
    }
    let eps = NODE_EPSILON * max;
    Ok(omega.iter().map(|&w| w < eps).collect())
}

/// Reusable differentiation context for decompositions on one grid.
#[derive(Clone, Debug)]
pub struct FieldOps {
    diff: Differentiator,
}

impl FieldOps {
    pub fn new(grid: &SpatialGrid) -> Result<Self> {
        Ok(Self { diff: Differentiator::new(grid)? })
    }

    pub fn with_differentiator(diff: Differentiator) -> Self {
        Self { diff }
    }

    pub fn grid(&self) -> &SpatialGrid {
        self.diff.grid()
    }

    pub fn differentiator(&self) -> &Differentiator {
        &self.diff
    }

    /// Polar decomposition; `second` also computes `d2S` and `d2 ln Omega`.
    pub fn decompose(&self, psi: &WaveFunction, hbar_eff: f64, second: bool) -> Result<PolarFields> {
        if hbar_eff <= 0.0 || !hbar_eff.is_finite() {
            return Err(Error::InvalidParameter(format!("hbar_eff must be positive, got {hbar_eff}")));
        }
        psi.grid().check_same(self.grid())?;
        psi.check_normalized()?;
        self.decompose_unchecked(psi, hbar_eff, second)
    }

    pub(crate) fn decompose_unchecked(&self, psi: &WaveFunction, hbar_eff: f64, second: bool) -> Result<PolarFields> {
        let grid = psi.grid();
        let vals = psi.values();
        let omega: Vec<f64> = vals.iter().map(Complex64::norm_sqr).collect();
        let node = flag_nodes(&omega)?;
        let derivs = self.diff.derivatives_complex(vals, second);
        let dims = grid.dims();
        let n = grid.len();
        let mut grad_s = vec![vec![0.0; n]; dims];
        let mut grad_ln = vec![vec![0.0; n]; dims];
        let mut d2_s = vec![vec![0.0; if second { n } else { 0 }]; dims];
        let mut d2_ln = vec![vec![0.0; if second { n } else { 0 }]; dims];
        for d in 0..dims {
            for i in 0..n {
                if node[i] {
                    continue;
                }
                let inv = vals[i].conj() / omega[i];
                let r = derivs.first[d][i] * inv;
                grad_s[d][i] = hbar_eff * r.im;
                grad_ln[d][i] = 2.0 * r.re;
                if let Some(sec) = &derivs.second {
                    let s = sec[d][i] * inv - r * r;
                    d2_s[d][i] = hbar_eff * s.im;
                    d2_ln[d][i] = 2.0 * s.re;
                }
            }
        }
        Ok(PolarFields {
            grid: grid.clone(),
            time: psi.time(),
            hbar_eff,
            omega,
            grad_s,
            grad_ln_omega: grad_ln,
            node,
            dt_s: None,
            second: second.then_some(SecondOrderFields { d2_s, d2_ln_omega: d2_ln }),
        })
    }

    /// Rebuild `sqrt(Omega) exp(i S / hbar)` with `S` the line integral of
    /// `grad S` from `reference_node` (a flat node index).
    pub fn synthesize(&self, fields: &PolarFields, reference_node: usize) -> Result<WaveFunction> {
        let grid = fields.grid();
        grid.check_same(self.grid())?;
        if reference_node >= grid.len() {
            return Err(Error::InvalidParameter(format!("reference node {reference_node} outside grid")));
        }
        if grid.dims() == 2 {
            check_curl_free(fields)?;
        }
        let s = integrate_phase(fields, reference_node)?;
        let hbar = fields.hbar_eff();
        let values = fields
            .omega()
            .iter()
            .zip(&s)
            .map(|(&w, &s)| Complex64::from_polar(w.sqrt(), s / hbar))
            .collect();
        WaveFunction::new(grid.clone(), values, fields.time())
    }
}

/// Polar decomposition with a freshly planned differentiator.
pub fn polar_decompose(psi: &WaveFunction, hbar_eff: f64) -> Result<PolarFields> {
    FieldOps::new(psi.grid())?.decompose(psi, hbar_eff, false)
}

pub fn synthesize_wavefunction(fields: &PolarFields, reference_node: usize) -> Result<WaveFunction> {
    FieldOps::new(fields.grid())?.synthesize(fields, reference_node)
}

/// `dS/dt` at the midpoint of two frames: `hbar * arg(psi1 conj(psi0)) / dt`.
pub fn phase_rate(psi0: &WaveFunction, psi1: &WaveFunction, hbar_eff: f64) -> Result<Vec<f64>> {
    psi0.grid().check_same(psi1.grid())?;
    let dt = psi1.time() - psi0.time();
    if dt <= 0.0 {
        return Err(Error::InvalidParameter("frames must be ordered in time".into()));
    }
    Ok(psi0
        .values()
        .iter()
        .zip(psi1.values())
        .map(|(a, b)| hbar_eff * (b * a.conj()).arg() / dt)
        .collect())
}

fn check_curl_free(fields: &PolarFields) -> Result<()> {
    let grid = fields.grid();
    let (n0, n1) = grid.shape();
    let (h0, h1) = (grid.axis(0).spacing(), grid.axis(1).spacing());
    let g0 = &fields.grad_s()[0];
    let g1 = &fields.grad_s()[1];
    let node = fields.node_mask();
    let at = |i: usize, j: usize| i * n1 + j;
    let loop_circulation = |i0: usize, j0: usize, i1: usize, j1: usize| {
        // counter-clockwise around the rectangle of nodes [i0, i1] x [j0, j1]
        let mut c = 0.0;
        for i in i0..i1 {
            c += 0.5 * h0 * (g0[at(i, j0)] + g0[at(i + 1, j0)]);
            c -= 0.5 * h0 * (g0[at(i, j1)] + g0[at(i + 1, j1)]);
        }
        for j in j0..j1 {
            c += 0.5 * h1 * (g1[at(i1, j)] + g1[at(i1, j + 1)]);
            c -= 0.5 * h1 * (g1[at(i0, j)] + g1[at(i0, j + 1)]);
        }
        c
    };
    for i in 0..n0 - 1 {
        for j in 0..n1 - 1 {
            let corners = [at(i, j), at(i + 1, j), at(i, j + 1), at(i + 1, j + 1)];
            if corners.iter().any(|&c| node[c]) {
                continue;
            }
            let curl = loop_circulation(i, j, i + 1, j + 1) / (h0 * h1);
            if curl.abs() > CURL_TOLERANCE {
                let [x, y] = grid.position(at(i, j));
                return Err(Error::Vortex(format!("mean curl {curl:.3e} in the cell at ({x:.4}, {y:.4})")));
            }
        }
    }
    // a node sitting exactly on the grid hides its plaquettes; test the ring around it
    let quantum = 2.0 * std::f64::consts::PI * fields.hbar_eff();
    for i in 1..n0 - 1 {
        for j in 1..n1 - 1 {
            if !node[at(i, j)] {
                continue;
            }
            let ring_clear = (i - 1..=i + 1).all(|a| (j - 1..=j + 1).all(|b| (a, b) == (i, j) || !node[at(a, b)]));
            if ring_clear && loop_circulation(i - 1, j - 1, i + 1, j + 1).abs() > 0.5 * quantum {
                let [x, y] = grid.position(at(i, j));
                return Err(Error::Vortex(format!("quantized circulation around the node at ({x:.4}, {y:.4})")));
            }
        }
    }
    Ok(())
}

fn integrate_phase(fields: &PolarFields, reference_node: usize) -> Result<Vec<f64>> {
    let grid = fields.grid();
    // zeroed node cells break the smoothness a spectral antiderivative needs
    let periodic = grid.boundary() == Boundary::Periodic && fields.node_count() == 0;
    if periodic {
        grid.require_spectral()?;
    }
    let (_, n1) = grid.shape();
    if grid.dims() == 1 {
        return Ok(integrate_line(&fields.grad_s()[0], grid.axis(0).spacing(), periodic, reference_node));
    }
    let (ri, rj) = (reference_node / n1, reference_node % n1);
    // along axis 1 on the reference row, then along axis 0 down every column
    let row: Vec<f64> = fields.grad_s()[1][ri * n1..(ri + 1) * n1].to_vec();
    let s_row = integrate_line(&row, grid.axis(1).spacing(), periodic, rj);
    let mut s = vec![0.0; grid.len()];
    let h0 = grid.axis(0).spacing();
    map_lines(grid, 0, &fields.grad_s()[0], &mut s, |line_in, line_out| {
        line_out.copy_from_slice(&integrate_line(line_in, h0, periodic, ri));
    });
    for (i, v) in s.iter_mut().enumerate() {
        *v += s_row[i % n1];
    }
    Ok(s)
}

/// Antiderivative of nodal samples `f`, zero at node `reference`.
fn integrate_line(f: &[f64], h: f64, periodic: bool, reference: usize) -> Vec<f64> {
    let n = f.len();
    if periodic {
        let mean = f.iter().sum::<f64>() / n as f64;
        let mut planner = FftPlanner::new();
        let mut buf: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x - mean, 0.0)).collect();
        planner.plan_fft_forward(n).process(&mut buf);
        let dk = 2.0 * std::f64::consts::PI / (h * n as f64);
        for (j, c) in buf.iter_mut().enumerate() {
            let m = if j <= (n - 1) / 2 { j as i64 } else { j as i64 - n as i64 };
            *c = if m == 0 || (n % 2 == 0 && j == n / 2) {
                Complex64::new(0.0, 0.0)
            } else {
                *c / Complex64::new(0.0, m as f64 * dk * n as f64)
            };
        }
        planner.plan_fft_inverse(n).process(&mut buf);
        let r = buf[reference].re;
        return (0..n).map(|j| mean * (j as f64 - reference as f64) * h + buf[j].re - r).collect();
    }
    // cumulative cubic-interpolant cell integrals
    let mut cell = vec![0.0; n - 1];
    for (j, c) in cell.iter_mut().enumerate() {
        *c = if j == 0 {
            h / 24.0 * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3])
        } else if j == n - 2 {
            h / 24.0 * (f[n - 4] - 5.0 * f[n - 3] + 19.0 * f[n - 2] + 9.0 * f[n - 1])
        } else {
            h / 24.0 * (-f[j - 1] + 13.0 * f[j] + 13.0 * f[j + 1] - f[j + 2])
        };
    }
    let mut s = vec![0.0; n];
    for j in reference + 1..n {
        s[j] = s[j - 1] + cell[j - 1];
    }
    for j in (0..reference).rev() {
        s[j] = s[j + 1] - cell[j];
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Axis;
    use std::f64::consts::PI;

    fn line(extent: f64, n: usize, boundary: Boundary) -> SpatialGrid {
        SpatialGrid::line(Axis::centered(extent, n).unwrap(), boundary)
    }

    fn gaussian(grid: &SpatialGrid, center: f64, p: f64) -> WaveFunction {
        WaveFunction::from_fn(grid, 0.0, |q| {
            Complex64::from_polar((-(q[0] - center).powi(2) / 2.0).exp(), p * q[0])
        })
        .normalized()
        .unwrap()
    }

    #[test]
    fn plane_wave_has_uniform_density_and_constant_phase_gradient() {
        let grid = SpatialGrid::line(Axis::new(0.0, 2.0 * PI, 64).unwrap(), Boundary::Periodic);
        let psi = WaveFunction::from_fn(&grid, 0.0, |q| Complex64::from_polar(1.0, 2.0 * q[0])).normalized().unwrap();
        let f = polar_decompose(&psi, 1.0).unwrap();
        for i in 0..grid.len() {
            assert!((f.omega()[i] - 1.0 / (2.0 * PI)).abs() < 1e-12);
            assert!((f.grad_s()[0][i] - 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn oscillator_ground_state_fields() {
        let grid = line(20.0, 256, Boundary::Periodic);
        let psi = gaussian(&grid, 0.0, 0.0);
        let f = polar_decompose(&psi, 1.0).unwrap();
        for (i, q) in grid.axis(0).nodes().into_iter().enumerate() {
            assert!((f.omega()[i] - (-q * q).exp() / PI.sqrt()).abs() < 1e-10);
            // roundoff in the derivative is amplified by 1/|psi| in the far tail
            let tol = if f.omega()[i] > 1e-6 { 1e-10 } else { 1e-4 };
            assert!(f.grad_s()[0][i].abs() < tol, "q = {q}: {}", f.grad_s()[0][i]);
        }
        assert!((f.total_probability() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn real_positive_field_has_no_phase_gradient() {
        let grid = line(10.0, 128, Boundary::HardWall);
        let psi = WaveFunction::from_fn(&grid, 0.0, |q| Complex64::new(1.0 + 0.5 * q[0].cos().powi(2), 0.0))
            .normalized()
            .unwrap();
        let f = polar_decompose(&psi, 1.0).unwrap();
        assert!(f.grad_s()[0].iter().all(|g| *g == 0.0));
    }

    #[test]
    fn rejects_unnormalized_and_zero_fields() {
        let grid = line(10.0, 64, Boundary::Periodic);
        let psi = WaveFunction::from_fn(&grid, 0.0, |_| Complex64::new(2.0, 0.0));
        assert!(matches!(polar_decompose(&psi, 1.0), Err(Error::NotNormalized { .. })));
        let zero = WaveFunction::from_fn(&grid, 0.0, |_| Complex64::new(0.0, 0.0));
        assert!(matches!(polar_decompose(&zero, 1.0), Err(Error::ZeroField)));
    }

    #[test]
    fn nodes_are_flagged_and_zeroed() {
        let grid = line(40.0, 256, Boundary::Periodic);
        let psi = gaussian(&grid, 0.0, 1.0);
        let f = polar_decompose(&psi, 1.0).unwrap();
        assert!(f.node_count() > 0);
        for i in 0..grid.len() {
            if f.node_mask()[i] {
                assert_eq!(f.grad_s()[0][i], 0.0);
            }
        }
    }

    #[test]
    fn global_phase_does_not_change_fields() {
        let grid = line(20.0, 128, Boundary::Periodic);
        let psi = gaussian(&grid, 1.0, 0.7);
        let a = polar_decompose(&psi, 1.0).unwrap();
        let b = polar_decompose(&psi.with_global_phase(1.234), 1.0).unwrap();
        for i in 0..grid.len() {
            assert!((a.omega()[i] - b.omega()[i]).abs() < 1e-15);
            let tol = if a.omega()[i] > 1e-6 { 1e-10 } else { 1e-4 };
            assert!((a.grad_s()[0][i] - b.grad_s()[0][i]).abs() < tol);
        }
    }

    #[test]
    fn synthesize_uniform_density_gives_plane_wave() {
        let grid = SpatialGrid::line(Axis::new(0.0, 2.0 * PI, 64).unwrap(), Boundary::Periodic);
        let n = grid.len();
        let f = PolarFields::from_parts(
            grid.clone(),
            0.0,
            1.0,
            vec![1.0 / (2.0 * PI); n],
            vec![vec![3.0; n]],
            vec![vec![0.0; n]],
        )
        .unwrap();
        let psi = synthesize_wavefunction(&f, 0).unwrap();
        let target = WaveFunction::from_fn(&grid, 0.0, |q| Complex64::from_polar(1.0, 3.0 * q[0])).normalized().unwrap();
        let overlap = target.inner(&psi).norm();
        assert!((overlap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hard_wall_integration_is_fourth_order_accurate() {
        let err = |n: usize| {
            let h = 3.2 / n as f64;
            let x = |j: usize| (j as f64 + 0.5) * h;
            let f: Vec<f64> = (0..n).map(|j| x(j).cos()).collect();
            let s = integrate_line(&f, h, false, n / 4);
            (0..n).map(|j| (s[j] - (x(j).sin() - x(n / 4).sin())).abs()).fold(0.0, f64::max)
        };
        let (coarse, fine) = (err(64), err(128));
        assert!(coarse < 1e-6, "{coarse}");
        assert!(coarse / fine > 12.0, "ratio {}", coarse / fine);
    }

    #[test]
    fn detects_vortex_in_plane() {
        let a = Axis::centered(8.0, 64).unwrap();
        let grid = SpatialGrid::plane(a.clone(), a, Boundary::Periodic);
        let psi = WaveFunction::from_fn(&grid, 0.0, |q| {
            Complex64::new(q[0], q[1]) * (-(q[0] * q[0] + q[1] * q[1]) / 2.0).exp()
        })
        .normalized()
        .unwrap();
        let f = polar_decompose(&psi, 1.0).unwrap();
        assert!(matches!(synthesize_wavefunction(&f, 0), Err(Error::Vortex(_))));
    }

    #[test]
    fn detects_vortex_on_a_grid_node() {
        // odd point count puts a node exactly on the vortex core
        let a = Axis::new(-4.0 - 4.0 / 63.0, 8.0 + 8.0 / 63.0, 64).unwrap();
        let grid = SpatialGrid::plane(a.clone(), a, Boundary::HardWall);
        let c = grid.axis(0).node(32);
        let psi = WaveFunction::from_fn(&grid, 0.0, |q| {
            Complex64::new(q[0] - c, q[1] - c) * (-((q[0] - c).powi(2) + (q[1] - c).powi(2)) / 2.0).exp()
        })
        .normalized()
        .unwrap();
        let f = polar_decompose(&psi, 1.0).unwrap();
        assert!(f.node_count() >= 1);
        assert!(matches!(synthesize_wavefunction(&f, 0), Err(Error::Vortex(_))));
    }

    #[test]
    fn product_state_round_trip_in_plane() {
        // smooth, periodic and node-free
        let a = Axis::centered(12.0, 64).unwrap();
        let grid = SpatialGrid::plane(a.clone(), a, Boundary::Periodic);
        let k = 2.0 * PI / 12.0;
        let psi = WaveFunction::from_fn(&grid, 0.0, |q| {
            let amp = (1.0 + 0.5 * (k * q[0]).cos()) * (1.0 + 0.3 * (k * q[1]).sin());
            Complex64::from_polar(amp, k * q[0] - 2.0 * k * q[1] + 0.4 * (k * q[1]).sin())
        })
        .normalized()
        .unwrap();
        let ops = FieldOps::new(&grid).unwrap();
        let f = ops.decompose(&psi, 1.0, false).unwrap();
        assert_eq!(f.node_count(), 0);
        let back = ops.synthesize(&f, grid.len() / 2 + 32).unwrap();
        let g = ops.decompose(&back, 1.0, false).unwrap();
        for i in 0..grid.len() {
            for d in 0..2 {
                assert!((f.grad_s()[d][i] - g.grad_s()[d][i]).abs() < 1e-8);
            }
        }
    }
}
