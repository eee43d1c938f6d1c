use crate::error::{Error, Result};
use crate::field::{FieldOps, PolarFields, WaveFunction};
use crate::grid::SpatialGrid;
use crate::schrodinger::{analytic_state, pair_state, AnalyticState, InitialState, Propagator, PropagatorConfig, INSTABILITY_NORM_DRIFT};
use crate::system::{AxisPotential, ClassicalSystem};

/// Supplier of polar fields along the run. Calls arrive with non-decreasing `t`.
pub trait FieldSource {
    fn grid(&self) -> &SpatialGrid;
    fn hbar(&self) -> f64;
    fn fields_at(&mut self, t: f64) -> Result<PolarFields>;
    /// The wave function at `t` when the source holds it exactly at that time.
    fn wavefunction_at(&mut self, t: f64) -> Result<Option<WaveFunction>>;
}

/// Closed-form states evaluated at every requested time.
pub struct AnalyticSource {
    state: InitialState,
    grid: SpatialGrid,
    hbar: f64,
    masses: Vec<f64>,
    ops: FieldOps,
}

/// Whether `state` evolves exactly as the closed form under `potential`.
pub fn state_matches_potential(state: &AnalyticState, potential: &AxisPotential) -> bool {
    match (state, potential) {
        (AnalyticState::ShoGround { omega, center }, AxisPotential::Harmonic { omega: w, center: c })
        | (AnalyticState::ShoCoherent { omega, center, .. }, AxisPotential::Harmonic { omega: w, center: c }) => {
            (omega - w).abs() < 1e-12 && (center - c).abs() < 1e-12
        }
        (AnalyticState::FreeGaussian { .. } | AnalyticState::PlaneWave { .. }, AxisPotential::Free) => true,
        (AnalyticState::BoxEigenstate { .. }, AxisPotential::Box) => true,
        _ => false,
    }
}

impl AnalyticSource {
    pub fn new(state: InitialState, grid: &SpatialGrid, system: &ClassicalSystem, hbar: f64) -> Result<Self> {
        system.check_grid(grid)?;
        if !system.is_separable() {
            return Err(Error::Interacting("closed-form evolution needs a separable system".into()));
        }
        let pots = system.axis_potentials();
        let ok = match &state {
            InitialState::Single(s) => grid.dims() == 1 && state_matches_potential(s, &pots[0]),
            InitialState::Pair(p) => {
                let [a, b] = p.factors();
                let same_axes = p.is_product()
                    || (pots[0] == pots[1] && system.masses()[0] == system.masses()[1] && grid.axis(0) == grid.axis(1));
                grid.dims() == 2 && same_axes && state_matches_potential(a, &pots[0]) && state_matches_potential(b, &pots[1])
            }
        };
        if !ok {
            return Err(Error::Unsupported("initial state has no closed-form evolution under this system".into()));
        }
        let src = Self { state, grid: grid.clone(), hbar, masses: system.masses().to_vec(), ops: FieldOps::new(grid)? };
        src.psi(0.0)?;
        Ok(src)
    }

    pub fn psi(&self, t: f64) -> Result<WaveFunction> {
        match &self.state {
            InitialState::Single(s) => analytic_state(s, &self.grid, self.hbar, self.masses[0], t),
            InitialState::Pair(p) => pair_state(p, &self.grid, self.hbar, [self.masses[0], self.masses[1]], t),
        }
    }
}

impl FieldSource for AnalyticSource {
    fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    fn hbar(&self) -> f64 {
        self.hbar
    }

    fn fields_at(&mut self, t: f64) -> Result<PolarFields> {
        self.ops.decompose(&self.psi(t)?, self.hbar, false)
    }

    fn wavefunction_at(&mut self, t: f64) -> Result<Option<WaveFunction>> {
        self.psi(t).map(Some)
    }
}

/// Fields from a running propagator; off-step times blend the two bracketing
/// solver frames linearly.
pub struct SolverSource {
    prop: Propagator,
    ops: FieldOps,
    hbar: f64,
    dt: f64,
    step: u64,
    norm0: f64,
    cur: WaveFunction,
    prev: Option<WaveFunction>,
    cache: Vec<(u64, PolarFields)>,
}

const STEP_SNAP: f64 = 1e-6;

impl SolverSource {
    pub fn new(psi0: WaveFunction, system: &ClassicalSystem, hbar: f64, cfg: &PropagatorConfig) -> Result<Self> {
        psi0.check_normalized()?;
        let prop = Propagator::new(psi0.grid(), system, hbar, cfg)?;
        let ops = FieldOps::new(psi0.grid())?;
        Ok(Self {
            prop,
            ops,
            hbar,
            dt: cfg.dt_solver,
            step: 0,
            norm0: psi0.norm(),
            cur: psi0,
            prev: None,
            cache: Vec::new(),
        })
    }

    fn advance_to(&mut self, k: u64) -> Result<()> {
        if k < self.step {
            return Err(Error::InvalidParameter("solver source cannot go back in time".into()));
        }
        while self.step < k {
            if self.step + 1 == k {
                self.prev = Some(self.cur.clone());
            }
            self.prop.step(&mut self.cur);
            self.step += 1;
            self.cur.set_time(self.step as f64 * self.dt);
            let drift = (self.cur.norm() - self.norm0).abs();
            if !(drift <= INSTABILITY_NORM_DRIFT) {
                return Err(Error::Unstable(format!("norm drifted by {drift:.3e} after {} solver steps", self.step)));
            }
        }
        Ok(())
    }

    fn fields_for_step(&mut self, k: u64) -> Result<PolarFields> {
        if let Some((_, f)) = self.cache.iter().find(|(s, _)| *s == k) {
            return Ok(f.clone());
        }
        let psi = if k == self.step {
            &self.cur
        } else if k + 1 == self.step && self.prev.is_some() {
            self.prev.as_ref().unwrap()
        } else {
            return Err(Error::InvalidParameter(format!("solver frame {k} is no longer available")));
        };
        // Propagation drifts the norm by roundoff only; decompose without re-checking.
        let f = self.ops.decompose_unchecked(psi, self.hbar, false)?;
        self.cache.retain(|(s, _)| *s + 1 >= k);
        self.cache.push((k, f.clone()));
        Ok(f)
    }

    fn locate(&self, t: f64) -> (u64, Option<f64>) {
        let x = t / self.dt;
        let r = x.round();
        if (x - r).abs() < STEP_SNAP {
            (r.max(0.0) as u64, None)
        } else {
            let hi = x.ceil().max(1.0) as u64;
            (hi, Some(x - (hi - 1) as f64))
        }
    }
}

impl FieldSource for SolverSource {
    fn grid(&self) -> &SpatialGrid {
        self.ops.grid()
    }

    fn hbar(&self) -> f64 {
        self.hbar
    }

    fn fields_at(&mut self, t: f64) -> Result<PolarFields> {
        let (k, w) = self.locate(t);
        self.advance_to(k)?;
        match w {
            None => self.fields_for_step(k),
            Some(w) => {
                let a = self.fields_for_step(k - 1)?;
                let b = self.fields_for_step(k)?;
                PolarFields::lerp(&a, &b, w)
            }
        }
    }

    fn wavefunction_at(&mut self, t: f64) -> Result<Option<WaveFunction>> {
        let (k, w) = self.locate(t);
        self.advance_to(k)?;
        Ok(if w.is_none() { Some(self.cur.clone()) } else { None })
    }
}

/// Pre-recorded frames, blended linearly between neighbours.
pub struct RecordedSource {
    frames: Vec<WaveFunction>,
    ops: FieldOps,
    hbar: f64,
    cache: Vec<(usize, PolarFields)>,
}

impl RecordedSource {
    pub fn new(frames: Vec<WaveFunction>, hbar: f64) -> Result<Self> {
        let first = frames.first().ok_or_else(|| Error::InvalidParameter("no frames supplied".into()))?;
        let ops = FieldOps::new(first.grid())?;
        for w in frames.windows(2) {
            w[0].grid().check_same(w[1].grid())?;
            if !(w[1].time() > w[0].time()) {
                return Err(Error::InvalidParameter("frame times must increase".into()));
            }
        }
        Ok(Self { frames, ops, hbar, cache: Vec::new() })
    }

    fn decomposed(&mut self, i: usize) -> Result<PolarFields> {
        if let Some((_, f)) = self.cache.iter().find(|(j, _)| *j == i) {
            return Ok(f.clone());
        }
        let f = self.ops.decompose_unchecked(&self.frames[i], self.hbar, false)?;
        if self.cache.len() >= 2 {
            self.cache.remove(0);
        }
        self.cache.push((i, f.clone()));
        Ok(f)
    }

    fn bracket(&self, t: f64) -> Result<(usize, f64)> {
        let last = self.frames.len() - 1;
        let tol = 1e-9 * (1.0 + t.abs());
        if t < self.frames[0].time() - tol || t > self.frames[last].time() + tol {
            return Err(Error::InvalidParameter(format!("time {t} outside the recorded frames")));
        }
        let j = self.frames.partition_point(|f| f.time() <= t + tol);
        let i = j.saturating_sub(1).min(last);
        if i == last || (self.frames[i].time() - t).abs() <= tol {
            return Ok((i, 0.0));
        }
        let (t0, t1) = (self.frames[i].time(), self.frames[i + 1].time());
        Ok((i, (t - t0) / (t1 - t0)))
    }
}

impl FieldSource for RecordedSource {
    fn grid(&self) -> &SpatialGrid {
        self.frames[0].grid()
    }

    fn hbar(&self) -> f64 {
        self.hbar
    }

    fn fields_at(&mut self, t: f64) -> Result<PolarFields> {
        let (i, w) = self.bracket(t)?;
        if w == 0.0 {
            return self.decomposed(i);
        }
        let a = self.decomposed(i)?;
        let b = self.decomposed(i + 1)?;
        PolarFields::lerp(&a, &b, w)
    }

    fn wavefunction_at(&mut self, t: f64) -> Result<Option<WaveFunction>> {
        let (i, w) = self.bracket(t)?;
        Ok(if w == 0.0 { Some(self.frames[i].clone()) } else { None })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Axis, Boundary};
    use crate::schrodinger::{analytic_state, Method};

    fn setup() -> (SpatialGrid, ClassicalSystem, AnalyticState) {
        let grid = SpatialGrid::line(Axis::centered(20.0, 256).unwrap(), Boundary::Periodic);
        let sys = ClassicalSystem::one_dimensional(1.0, AxisPotential::Harmonic { omega: 1.0, center: 0.0 }).unwrap();
        (grid, sys, AnalyticState::ShoCoherent { omega: 1.0, center: 0.0, displacement: 1.0, velocity: 0.0 })
    }

    fn max_gap(a: &[f64], b: &[f64], omega: &[f64]) -> f64 {
        let peak = omega.iter().cloned().fold(0.0, f64::max);
        a.iter().zip(b).zip(omega).filter(|(_, w)| **w > 1e-6 * peak).map(|((x, y), _)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn solver_frames_follow_the_closed_form() {
        let (grid, sys, st) = setup();
        let psi0 = analytic_state(&st, &grid, 1.0, 1.0, 0.0).unwrap();
        let mut solver = SolverSource::new(psi0, &sys, 1.0, &PropagatorConfig::new(Method::SplitStep, 1e-3, 0)).unwrap();
        let mut exact = AnalyticSource::new(InitialState::Single(st), &grid, &sys, 1.0).unwrap();
        for t in [0.0, 0.25, 1.0] {
            let (a, b) = (solver.fields_at(t).unwrap(), exact.fields_at(t).unwrap());
            assert!(max_gap(&a.grad_s()[0], &b.grad_s()[0], b.omega()) < 1e-4, "t = {t}");
        }
        assert!(solver.fields_at(0.5).is_err(), "going back in time");
    }

    #[test]
    fn off_step_times_blend_neighbouring_frames() {
        let (grid, sys, st) = setup();
        let psi0 = analytic_state(&st, &grid, 1.0, 1.0, 0.0).unwrap();
        let cfg = PropagatorConfig::new(Method::SplitStep, 1e-2, 0);
        let mut s = SolverSource::new(psi0.clone(), &sys, 1.0, &cfg).unwrap();
        let mid = s.fields_at(0.005).unwrap();
        let mut s2 = SolverSource::new(psi0, &sys, 1.0, &cfg).unwrap();
        let (a, b) = (s2.fields_at(0.0).unwrap(), s2.fields_at(0.01).unwrap());
        let i = 100;
        assert!((mid.grad_s()[0][i] - 0.5 * (a.grad_s()[0][i] + b.grad_s()[0][i])).abs() < 1e-12);
        assert!(s.wavefunction_at(0.005).unwrap().is_none());
    }

    #[test]
    fn recorded_frames_are_bracketed() {
        let (grid, _, st) = setup();
        let frames: Vec<WaveFunction> = (0..3).map(|k| analytic_state(&st, &grid, 1.0, 1.0, 0.1 * k as f64).unwrap()).collect();
        let mut r = RecordedSource::new(frames, 1.0).unwrap();
        assert!(r.fields_at(0.15).is_ok());
        assert!(r.fields_at(0.3).is_err());
        let backwards = vec![
            analytic_state(&st, &grid, 1.0, 1.0, 0.1).unwrap(),
            analytic_state(&st, &grid, 1.0, 1.0, 0.0).unwrap(),
        ];
        assert!(RecordedSource::new(backwards, 1.0).is_err());
    }

    #[test]
    fn analytic_source_needs_a_matching_potential() {
        let (grid, _, st) = setup();
        let free = ClassicalSystem::one_dimensional(1.0, AxisPotential::Free).unwrap();
        assert!(!state_matches_potential(&st, &AxisPotential::Free));
        assert!(AnalyticSource::new(InitialState::Single(st), &grid, &free, 1.0).is_err());
    }
}
