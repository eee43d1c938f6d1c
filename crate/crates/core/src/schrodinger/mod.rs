//! Schrödinger evolution used as the generator of the time-dependent fields.

pub mod analytic;
pub mod crank_nicolson;
pub mod split_step;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::WaveFunction;
use crate::grid::SpatialGrid;
use crate::system::ClassicalSystem;

pub use analytic::{analytic_state, pair_state, AnalyticState, InitialState, PairState};
pub use crank_nicolson::CrankNicolson;
pub use split_step::SplitStep;

/// Norm drift that aborts a propagation.
pub const INSTABILITY_NORM_DRIFT: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    SplitStep,
    CrankNicolson,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::SplitStep => "split-step",
            Method::CrankNicolson => "crank-nicolson",
        }
    }
}

fn default_fd_order() -> usize {
    8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagatorConfig {
    pub method: Method,
    pub dt_solver: f64,
    #[serde(default)]
    pub steps: usize,
    /// Keep every `record_every`-th frame; 0 keeps only the first and last.
    #[serde(default)]
    pub record_every: usize,
    /// Central-difference order of the Crank-Nicolson Laplacian.
    #[serde(default = "default_fd_order")]
    pub fd_order: usize,
}

impl PropagatorConfig {
    pub fn new(method: Method, dt_solver: f64, steps: usize) -> Self {
        Self { method, dt_solver, steps, record_every: 0, fd_order: default_fd_order() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt_solver > 0.0 && self.dt_solver.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt_solver must be positive, got {}", self.dt_solver)));
        }
        crank_nicolson::second_derivative_stencil(self.fd_order)?;
        Ok(())
    }

    /// `dt hbar / (m dq^2)`, the largest over axes. Crank-Nicolson accuracy is
    /// reported as degraded when this reaches one.
    pub fn stability_ratio(&self, grid: &SpatialGrid, system: &ClassicalSystem, hbar: f64) -> f64 {
        grid.axes()
            .iter()
            .zip(system.masses())
            .map(|(a, m)| self.dt_solver * hbar / (m * a.spacing().powi(2)))
            .fold(0.0, f64::max)
    }
}

pub enum Propagator {
    SplitStep(SplitStep),
    CrankNicolson(CrankNicolson),
}

impl Propagator {
    pub fn new(grid: &SpatialGrid, system: &ClassicalSystem, hbar: f64, cfg: &PropagatorConfig) -> Result<Self> {
        cfg.validate()?;
        system.check_grid(grid)?;
        if !(hbar > 0.0) {
            return Err(Error::InvalidParameter("hbar must be positive".into()));
        }
        Ok(match cfg.method {
            Method::SplitStep => Propagator::SplitStep(SplitStep::new(grid, system, hbar, cfg.dt_solver)?),
            Method::CrankNicolson => {
                Propagator::CrankNicolson(CrankNicolson::new(grid, system, hbar, cfg.dt_solver, cfg.fd_order)?)
            }
        })
    }

    pub fn dt(&self) -> f64 {
        match self {
            Propagator::SplitStep(s) => s.dt(),
            Propagator::CrankNicolson(c) => c.dt(),
        }
    }

    pub fn step(&mut self, psi: &mut WaveFunction) {
        let dt = self.dt();
        match self {
            Propagator::SplitStep(s) => s.step(psi.values_mut()),
            Propagator::CrankNicolson(c) => c.step(psi.values_mut()),
        }
        psi.set_time(psi.time() + dt);
    }

    pub fn energy(&mut self, psi: &WaveFunction) -> f64 {
        match self {
            Propagator::SplitStep(s) => s.energy(psi.values()),
            Propagator::CrankNicolson(c) => c.energy(psi.values()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Propagation {
    pub frames: Vec<WaveFunction>,
    /// Largest `|norm(t) - norm(0)|` seen.
    pub norm_drift: f64,
    /// `|E(T) - E(0)| / |E(0)|` with the method's own Hamiltonian.
    pub energy_drift: f64,
    pub stability_ratio: f64,
}

impl Propagation {
    pub fn last(&self) -> &WaveFunction {
        self.frames.last().expect("propagation keeps at least the initial frame")
    }
}

/// Evolve `psi` for `cfg.steps` steps of `cfg.dt_solver`.
pub fn propagate(psi: &WaveFunction, system: &ClassicalSystem, hbar: f64, cfg: &PropagatorConfig) -> Result<Propagation> {
    psi.check_normalized()?;
    let mut prop = Propagator::new(psi.grid(), system, hbar, cfg)?;
    let mut cur = psi.clone();
    let norm0 = cur.norm();
    let e0 = prop.energy(&cur);
    let mut frames = vec![cur.clone()];
    let mut norm_drift: f64 = 0.0;
    for k in 1..=cfg.steps {
        prop.step(&mut cur);
        let drift = (cur.norm() - norm0).abs();
        norm_drift = norm_drift.max(drift);
        if !(drift <= INSTABILITY_NORM_DRIFT) {
            return Err(Error::Unstable(format!(
                "norm drifted by {drift:.3e} after {k} steps of {} (dt = {})",
                cfg.method.name(),
                cfg.dt_solver
            )));
        }
        if (cfg.record_every > 0 && k % cfg.record_every == 0) || k == cfg.steps {
            frames.push(cur.clone());
        }
    }
    let e1 = prop.energy(&cur);
    Ok(Propagation {
        frames,
        norm_drift,
        energy_drift: (e1 - e0).abs() / e0.abs().max(f64::MIN_POSITIVE),
        stability_ratio: cfg.stability_ratio(psi.grid(), system, hbar),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Axis, Boundary};
    use crate::system::AxisPotential;

    fn moments(psi: &WaveFunction) -> (f64, f64) {
        let a = psi.grid().axis(0);
        let h = a.spacing();
        let rho = psi.density();
        let m1: f64 = rho.iter().enumerate().map(|(i, r)| r * a.node(i) * h).sum();
        let m2: f64 = rho.iter().enumerate().map(|(i, r)| r * a.node(i) * a.node(i) * h).sum();
        (m1, (m2 - m1 * m1).sqrt())
    }

    #[test]
    fn coherent_packet_centre_follows_cosine() {
        let grid = SpatialGrid::line(Axis::centered(20.0, 256).unwrap(), Boundary::Periodic);
        let sho = ClassicalSystem::one_dimensional(1.0, AxisPotential::Harmonic { omega: 1.0, center: 0.0 }).unwrap();
        let st = AnalyticState::ShoCoherent { omega: 1.0, center: 0.0, displacement: 1.0, velocity: 0.0 };
        let psi = analytic_state(&st, &grid, 1.0, 1.0, 0.0).unwrap();
        let dt = 4.0 * std::f64::consts::PI / 4000.0;
        let mut cfg = PropagatorConfig::new(Method::SplitStep, dt, 4000);
        cfg.record_every = 100;
        let run = propagate(&psi, &sho, 1.0, &cfg).unwrap();
        for f in &run.frames {
            assert!((moments(f).0 - f.time().cos()).abs() < 1e-4, "t = {}", f.time());
        }
        assert!(run.norm_drift < 1e-12);
    }

    #[test]
    fn free_gaussian_width_at_t2() {
        let grid = SpatialGrid::line(Axis::centered(40.0, 512).unwrap(), Boundary::Periodic);
        let free = ClassicalSystem::one_dimensional(1.0, AxisPotential::Free).unwrap();
        let st = AnalyticState::FreeGaussian { sigma0: 1.0, q0: 0.0, p0: 0.0 };
        let psi = analytic_state(&st, &grid, 1.0, 1.0, 0.0).unwrap();
        for method in [Method::SplitStep, Method::CrankNicolson] {
            let run = propagate(&psi, &free, 1.0, &PropagatorConfig::new(method, 1e-3, 2000)).unwrap();
            let w = moments(run.last()).1;
            assert!((w - 2f64.sqrt()).abs() < 1e-4, "{}: {w}", method.name());
        }
    }

    #[test]
    fn plane_wave_only_gains_a_global_phase() {
        let grid = SpatialGrid::line(Axis::new(0.0, 2.0 * std::f64::consts::PI, 64).unwrap(), Boundary::Periodic);
        let free = ClassicalSystem::one_dimensional(1.0, AxisPotential::Free).unwrap();
        let psi = analytic_state(&AnalyticState::PlaneWave { k: 3.0 }, &grid, 1.0, 1.0, 0.0).unwrap();
        let run = propagate(&psi, &free, 1.0, &PropagatorConfig::new(Method::SplitStep, 1e-2, 50)).unwrap();
        let end = run.last();
        let phase = (end.values()[0] / psi.values()[0]).arg();
        assert!(end.l2_distance(&psi.with_global_phase(phase)) < 1e-12);
        assert!((phase + 4.5 * 0.5).abs() < 1e-12);
    }

    #[test]
    fn bad_configurations_are_rejected() {
        let grid = SpatialGrid::line(Axis::centered(20.0, 64).unwrap(), Boundary::Periodic);
        let free = ClassicalSystem::one_dimensional(1.0, AxisPotential::Free).unwrap();
        assert!(Propagator::new(&grid, &free, 1.0, &PropagatorConfig::new(Method::SplitStep, 0.0, 1)).is_err());
        assert!(Propagator::new(&grid, &free, -1.0, &PropagatorConfig::new(Method::SplitStep, 1e-3, 1)).is_err());
        let mut cfg = PropagatorConfig::new(Method::CrankNicolson, 1e-3, 1);
        cfg.fd_order = 3;
        assert!(cfg.validate().is_err());
        let wall = SpatialGrid::line(Axis::centered(2.0, 64).unwrap(), Boundary::HardWall);
        let bx = ClassicalSystem::one_dimensional(1.0, AxisPotential::Box).unwrap();
        assert!(Propagator::new(&wall, &bx, 1.0, &PropagatorConfig::new(Method::SplitStep, 1e-3, 1)).is_err());
    }
}
