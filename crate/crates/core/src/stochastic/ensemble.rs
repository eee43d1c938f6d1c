use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{PolarFields, WaveFunction};
use crate::stochastic::initial::{sample_initial_positions, Sampling};
use crate::stochastic::sign::SignProcess;
use crate::stochastic::source::FieldSource;
use crate::stochastic::velocity::{TrajectoryState, VelocityField};
use crate::stochastic::ModelParams;

#[derive(Clone, Debug)]
pub struct EnsembleConfig {
    pub n: usize,
    pub master_seed: u64,
    pub t_end: f64,
    pub checkpoints: Vec<f64>,
    /// `false` drops the osmotic term, giving phase-gradient (Bohmian) paths.
    pub osmotic: bool,
    pub sampling: Sampling,
    /// Full paths are kept for the first `record_paths` trajectories.
    pub record_paths: usize,
    pub record_stride: usize,
    /// Starting points overriding sampling from the initial density.
    pub initial: Option<Vec<[f64; 2]>>,
}

impl EnsembleConfig {
    pub fn new(n: usize, master_seed: u64, t_end: f64) -> Self {
        Self {
            n,
            master_seed,
            t_end,
            checkpoints: Vec::new(),
            osmotic: true,
            sampling: Sampling::default(),
            record_paths: 0,
            record_stride: 1,
            initial: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub time: f64,
    pub step: usize,
    pub positions: Vec<[f64; 2]>,
    /// Sign drawn for the step that starts at this checkpoint.
    pub signs: Vec<i8>,
    pub fields: PolarFields,
    pub psi: Option<WaveFunction>,
}

#[derive(Clone, Debug)]
pub struct PathRecord {
    pub index: usize,
    pub times: Vec<f64>,
    pub q: Vec<[f64; 2]>,
    pub signs: Vec<i8>,
}

#[derive(Clone, Debug)]
pub struct TrajectoryEnsemble {
    pub dims: usize,
    pub master_seed: u64,
    pub dt: f64,
    pub steps: usize,
    pub osmotic: bool,
    pub initial: Vec<[f64; 2]>,
    pub checkpoints: Vec<Checkpoint>,
    pub paths: Vec<PathRecord>,
    pub node_events: Vec<u32>,
}

impl TrajectoryEnsemble {
    pub fn len(&self) -> usize {
        self.initial.len()
    }

    pub fn is_empty(&self) -> bool {
        self.initial.is_empty()
    }

    /// Checkpoint whose step is closest to `t`.
    pub fn checkpoint_near(&self, t: f64) -> Option<&Checkpoint> {
        self.checkpoints.iter().min_by(|a, b| (a.time - t).abs().total_cmp(&(b.time - t).abs()))
    }

    pub fn total_node_events(&self) -> u64 {
        self.node_events.iter().map(|&x| x as u64).sum()
    }

    /// Component `d` of every position at checkpoint `k`.
    pub fn coordinates(&self, k: usize, d: usize) -> Vec<f64> {
        self.checkpoints[k].positions.iter().map(|q| q[d]).collect()
    }
}

/// Evolve `cfg.n` trajectories through the fields supplied by `source`.
///
/// Trajectory `i` uses only the streams of index `i`, so the result does not
/// depend on the thread count or scheduling.
pub fn evolve_ensemble(
    source: &mut dyn FieldSource,
    masses: &[f64],
    params: &ModelParams,
    cfg: &EnsembleConfig,
) -> Result<TrajectoryEnsemble> {
    params.validate()?;
    let grid = source.grid().clone();
    let dims = grid.dims();
    if masses.len() != dims {
        return Err(Error::GridMismatch(format!("{} masses for a {dims}-dimensional field source", masses.len())));
    }
    if !(cfg.t_end >= 0.0) {
        return Err(Error::InvalidParameter("run length must be non-negative".into()));
    }
    let dt = params.dt;
    let t_end = cfg.checkpoints.iter().cloned().fold(cfg.t_end, f64::max);
    let steps = (t_end / dt).round() as usize;
    let mut ck_steps: Vec<usize> = cfg.checkpoints.iter().map(|t| (t / dt).round() as usize).collect();
    ck_steps.sort_unstable();
    ck_steps.dedup();

    let mut f0_fields = source.fields_at(0.0)?;
    let initial = match &cfg.initial {
        Some(q) => {
            if q.len() != cfg.n {
                return Err(Error::InvalidParameter("initial positions do not match ensemble size".into()));
            }
            q.clone()
        }
        None => sample_initial_positions(f0_fields.omega(), &grid, cfg.n, cfg.master_seed, cfg.sampling)?,
    };
    // kept apart so the stepping loop streams through compact arrays
    let mut states: Vec<TrajectoryState> = initial.iter().map(|q| TrajectoryState::at(&q[..dims])).collect();
    let mut processes: Vec<SignProcess> =
        (0..initial.len()).map(|i| SignProcess::new(cfg.master_seed, i as u64)).collect();
    let mut signs = vec![1i8; initial.len()];
    let n_paths = cfg.record_paths.min(cfg.n);
    let stride = cfg.record_stride.max(1);
    let mut paths: Vec<PathRecord> =
        (0..n_paths).map(|i| PathRecord { index: i, times: vec![], q: vec![], signs: vec![] }).collect();
    let mut checkpoints = Vec::with_capacity(ck_steps.len());
    let mut f0 = VelocityField::new(&f0_fields, masses)?;
    let mut next_ck = 0;

    for k in 0..=steps {
        let t = k as f64 * dt;
        signs.par_iter_mut().zip(processes.par_iter_mut()).for_each(|(s, p)| *s = p.step());
        if k % stride == 0 || k == steps {
            for (p, i) in paths.iter_mut().zip(0..) {
                p.times.push(t);
                p.q.push(states[i].q);
                p.signs.push(signs[i]);
            }
        }
        if next_ck < ck_steps.len() && ck_steps[next_ck] == k {
            checkpoints.push(Checkpoint {
                time: t,
                step: k,
                positions: states.iter().map(|w| w.q).collect(),
                signs: signs.clone(),
                fields: f0_fields.clone(),
                psi: source.wavefunction_at(t)?,
            });
            next_ck += 1;
        }
        if k == steps {
            break;
        }
        let f1_fields = source.fields_at(t + dt)?;
        let f1 = VelocityField::new(&f1_fields, masses)?;
        let lam = if cfg.osmotic { params.lambda_mag_at(t) } else { 0.0 };
        let finite = states
            .par_iter_mut()
            .zip(signs.par_iter())
            .map(|(w, &s)| {
                w.heun_step(&f0, &f1, s as f64 * lam, dt);
                w.q[0].is_finite() && w.q[1].is_finite()
            })
            .reduce(|| true, |a, b| a && b);
        if !finite {
            let bad = states.iter().position(|w| !w.q.iter().all(|x| x.is_finite())).unwrap_or(0);
            return Err(Error::Unstable(format!("trajectory {bad} became non-finite at step {}", k + 1)));
        }
        f0 = f1;
        f0_fields = f1_fields;
    }

    Ok(TrajectoryEnsemble {
        dims,
        master_seed: cfg.master_seed,
        dt,
        steps,
        osmotic: cfg.osmotic,
        initial,
        checkpoints,
        paths,
        node_events: states.iter().map(|w| w.node_events).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Axis, Boundary, SpatialGrid};
    use crate::schrodinger::{AnalyticState, InitialState};
    use crate::stochastic::AnalyticSource;
    use crate::system::{AxisPotential, ClassicalSystem};

    fn coherent_source() -> (AnalyticSource, ClassicalSystem) {
        let grid = SpatialGrid::line(Axis::centered(20.0, 256).unwrap(), Boundary::Periodic);
        let sys = ClassicalSystem::one_dimensional(1.0, AxisPotential::Harmonic { omega: 1.0, center: 0.0 }).unwrap();
        let st = AnalyticState::ShoCoherent { omega: 1.0, center: 0.0, displacement: 1.0, velocity: 0.0 };
        (AnalyticSource::new(InitialState::Single(st), &grid, &sys, 1.0).unwrap(), sys)
    }

    #[test]
    fn thread_count_does_not_change_the_result() {
        let params = ModelParams::with_step(1.0, 1e-2);
        let mut cfg = EnsembleConfig::new(500, 9, 0.5);
        cfg.checkpoints = vec![0.0, 0.5];
        let run = |threads| {
            let (mut src, sys) = coherent_source();
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| evolve_ensemble(&mut src, sys.masses(), &params, &cfg).unwrap())
        };
        let (a, b) = (run(1), run(3));
        assert_eq!(a.checkpoints.len(), 2);
        for (x, y) in a.checkpoints.iter().zip(&b.checkpoints) {
            assert_eq!(x.signs, y.signs);
            assert!(x.positions.iter().zip(&y.positions).all(|(p, q)| p[0].to_bits() == q[0].to_bits()));
        }
    }

    #[test]
    fn without_osmotic_term_paths_are_bohmian() {
        let (mut src, sys) = coherent_source();
        let params = ModelParams::with_step(1.0, 1e-2);
        let mut cfg = EnsembleConfig::new(8, 3, 0.1);
        cfg.osmotic = false;
        cfg.checkpoints = vec![0.1];
        let ens = evolve_ensemble(&mut src, sys.masses(), &params, &cfg).unwrap();
        for (i, start) in ens.initial.iter().enumerate() {
            let mut st = TrajectoryState::at(&start[..1]);
            for k in 0..10 {
                let f0 = VelocityField::new(&src.fields_at(k as f64 * 1e-2).unwrap(), sys.masses()).unwrap();
                let f1 = VelocityField::new(&src.fields_at((k + 1) as f64 * 1e-2).unwrap(), sys.masses()).unwrap();
                st.heun_step(&f0, &f1, 0.0, 1e-2);
            }
            let q = st.q;
            assert_eq!(q[0].to_bits(), ens.checkpoints[0].positions[i][0].to_bits());
        }
    }

    #[test]
    fn paths_are_recorded_with_stride() {
        let (mut src, sys) = coherent_source();
        let mut cfg = EnsembleConfig::new(20, 1, 0.1);
        cfg.record_paths = 2;
        cfg.record_stride = 3;
        let ens = evolve_ensemble(&mut src, sys.masses(), &ModelParams::with_step(1.0, 1e-2), &cfg).unwrap();
        assert_eq!(ens.paths.len(), 2);
        assert_eq!(ens.paths[0].times.len(), 5);
        assert!((ens.paths[0].times[1] - 0.03).abs() < 1e-12);
        assert_eq!(ens.paths[0].q[0], ens.initial[0]);
    }

    #[test]
    fn mismatched_initial_positions_are_rejected() {
        let (mut src, sys) = coherent_source();
        let mut cfg = EnsembleConfig::new(4, 1, 0.1);
        cfg.initial = Some(vec![[0.0, 0.0]; 3]);
        assert!(evolve_ensemble(&mut src, sys.masses(), &ModelParams::with_step(1.0, 1e-2), &cfg).is_err());
    }
}
