//! Strang split-step Fourier propagator: half potential kick, exact kinetic
//! step in momentum space, half potential kick.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{Boundary, SpatialGrid};
use crate::system::ClassicalSystem;

pub struct SplitStep {
    grid: SpatialGrid,
    dt: f64,
    half_kick: Vec<Complex64>,
    drift: Vec<Complex64>,
    kinetic: Vec<f64>,
    potential: Vec<f64>,
    plans: Vec<(Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>)>,
    scratch: Vec<Complex64>,
    transpose: Vec<Complex64>,
}

impl SplitStep {
    pub fn new(grid: &SpatialGrid, system: &ClassicalSystem, hbar: f64, dt: f64) -> Result<Self> {
        grid.require_spectral()?;
        if grid.boundary() != Boundary::Periodic {
            return Err(Error::Grid("split-step needs a periodic grid".into()));
        }
        let potential = system.potential_on(grid)?;
        let mut planner = FftPlanner::new();
        let plans: Vec<_> = grid
            .axes()
            .iter()
            .map(|a| (planner.plan_fft_forward(a.len()), planner.plan_fft_inverse(a.len())))
            .collect();
        let (n0, n1) = grid.shape();
        let k0 = grid.axis(0).wavenumbers();
        let k1 = if grid.dims() == 2 { grid.axis(1).wavenumbers() } else { vec![0.0] };
        let m = system.masses();
        let mut kinetic = Vec::with_capacity(grid.len());
        for i in 0..n0 {
            for j in 0..n1 {
                let mut t = hbar * hbar * k0[i] * k0[i] / (2.0 * m[0]);
                if grid.dims() == 2 {
                    t += hbar * hbar * k1[j] * k1[j] / (2.0 * m[1]);
                }
                kinetic.push(t);
            }
        }
        let norm = 1.0 / grid.len() as f64;
        let drift = kinetic.iter().map(|&t| Complex64::from_polar(norm, -t * dt / hbar)).collect();
        let half_kick = potential.iter().map(|&v| Complex64::from_polar(1.0, -0.5 * v * dt / hbar)).collect();
        let scratch_len = plans
            .iter()
            .map(|(f, i)| f.get_inplace_scratch_len().max(i.get_inplace_scratch_len()))
            .max()
            .unwrap_or(0);
        Ok(Self {
            grid: grid.clone(),
            dt,
            half_kick,
            drift,
            kinetic,
            potential,
            plans,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            transpose: vec![Complex64::new(0.0, 0.0); if grid.dims() == 2 { grid.len() } else { 0 }],
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn transform(&mut self, data: &mut [Complex64], forward: bool) {
        let pick = |p: &(Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>)| if forward { p.0.clone() } else { p.1.clone() };
        if self.grid.dims() == 1 {
            pick(&self.plans[0]).process_with_scratch(data, &mut self.scratch);
            return;
        }
        let (n0, n1) = self.grid.shape();
        // rows are contiguous along axis 1
        pick(&self.plans[1]).process_with_scratch(data, &mut self.scratch);
        for i in 0..n0 {
            for j in 0..n1 {
                self.transpose[j * n0 + i] = data[i * n1 + j];
            }
        }
        pick(&self.plans[0]).process_with_scratch(&mut self.transpose, &mut self.scratch);
        for j in 0..n1 {
            for i in 0..n0 {
                data[i * n1 + j] = self.transpose[j * n0 + i];
            }
        }
    }

    pub fn step(&mut self, psi: &mut [Complex64]) {
        for (v, k) in psi.iter_mut().zip(&self.half_kick) {
            *v *= k;
        }
        self.transform(psi, true);
        for (v, d) in psi.iter_mut().zip(&self.drift) {
            *v *= d;
        }
        self.transform(psi, false);
        for (v, k) in psi.iter_mut().zip(&self.half_kick) {
            *v *= k;
        }
    }

    /// `<H>` with the spectral kinetic operator, normalized by the current norm.
    pub fn energy(&mut self, psi: &[Complex64]) -> f64 {
        let mut buf = psi.to_vec();
        self.transform(&mut buf, true);
        let total_k: f64 = buf.iter().map(Complex64::norm_sqr).sum();
        let kin: f64 = buf.iter().zip(&self.kinetic).map(|(c, t)| c.norm_sqr() * t).sum::<f64>() / total_k;
        let total: f64 = psi.iter().map(Complex64::norm_sqr).sum();
        let pot: f64 = psi.iter().zip(&self.potential).map(|(c, v)| c.norm_sqr() * v).sum::<f64>() / total;
        kin + pot
    }
}
