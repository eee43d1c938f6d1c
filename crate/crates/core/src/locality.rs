//! Two-particle non-interacting scenarios: additivity of the balance terms,
//! independence of the deviation law, and invariance of one particle's
//! statistics under changes to the other's potential.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{phase_rate, FieldOps, PolarFields, WaveFunction};
use crate::grid::{Boundary, SpatialGrid};
use crate::rng::Purpose;
use crate::schrodinger::{Propagator, PropagatorConfig};
use crate::stats::{ks_band, ks_distance_with, ks_two_sample, ks_two_sample_band, moments, BandLevel};
use crate::stochastic::{compute_da_step, sample_deviations, TrajectoryEnsemble};
use crate::system::ClassicalSystem;

/// Density fraction below which pointwise additivity is not scored.
pub const BULK_FRACTION: f64 = 1e-6;

/// Two 1D systems and states, and their tensor-product combination.
#[derive(Clone, Debug)]
pub struct ProductScenario {
    pub system1: ClassicalSystem,
    pub system2: ClassicalSystem,
    pub psi1: WaveFunction,
    pub psi2: WaveFunction,
    pub grid: SpatialGrid,
    pub system: ClassicalSystem,
    pub psi: WaveFunction,
}

impl ProductScenario {
    pub fn new(system1: ClassicalSystem, system2: ClassicalSystem, psi1: WaveFunction, psi2: WaveFunction) -> Result<Self> {
        if system1.dims() != 1 || system2.dims() != 1 || psi1.grid().dims() != 1 || psi2.grid().dims() != 1 {
            return Err(Error::InvalidParameter("product scenarios combine two one-dimensional parts".into()));
        }
        if psi1.grid().boundary() != psi2.grid().boundary() {
            return Err(Error::GridMismatch("both factors need the same boundary kind".into()));
        }
        psi1.check_normalized()?;
        psi2.check_normalized()?;
        let grid = SpatialGrid::plane(psi1.grid().axis(0).clone(), psi2.grid().axis(0).clone(), psi1.grid().boundary());
        let system = ClassicalSystem::pair(&system1, &system2)?;
        let (a, b) = (psi1.values(), psi2.values());
        let values: Vec<Complex64> = a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect();
        let psi = WaveFunction::new(grid.clone(), values, psi1.time())?;
        Ok(Self { system1, system2, psi1, psi2, grid, system, psi })
    }

    pub fn boundary(&self) -> Boundary {
        self.grid.boundary()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DecompositionReport {
    pub time: f64,
    /// `max |psi_12 - psi_1 psi_2|` after propagation.
    pub product_defect: f64,
    pub theta_defect: f64,
    pub info_defect: f64,
    pub ds_defect: f64,
    pub da_defect: f64,
    pub sigma_defect: f64,
}

impl DecompositionReport {
    pub fn max_defect(&self) -> f64 {
        [self.theta_defect, self.info_defect, self.ds_defect, self.da_defect, self.sigma_defect]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

fn advance(prop: &mut Propagator, psi: &mut WaveFunction, steps: usize) {
    let t0 = psi.time();
    for k in 1..=steps {
        prop.step(psi);
        psi.set_time(t0 + k as f64 * prop.dt());
    }
}

fn frames(
    psi: &WaveFunction,
    system: &ClassicalSystem,
    hbar: f64,
    cfg: &PropagatorConfig,
    steps: usize,
) -> Result<(PolarFields, PolarFields, Vec<f64>, WaveFunction)> {
    let mut prop = Propagator::new(psi.grid(), system, hbar, cfg)?;
    let mut a = psi.clone();
    advance(&mut prop, &mut a, steps);
    let mut b = a.clone();
    advance(&mut prop, &mut b, 1);
    let ops = FieldOps::new(psi.grid())?;
    let fa = ops.decompose(&a, hbar, true)?;
    let fb = ops.decompose(&b, hbar, true)?;
    let rate = phase_rate(&a, &b, hbar)?;
    Ok((fa, fb, rate, a))
}

/// Propagate the factors and the joint state to `t` and score the additivity
/// of theta, dI = -d ln Omega, dS, dA and the entropy production.
pub fn check_decomposition(scenario: &ProductScenario, t: f64, hbar: f64, cfg: &PropagatorConfig) -> Result<DecompositionReport> {
    if !scenario.system.is_separable() {
        return Err(Error::Interacting("additivity checks need a non-interacting pair".into()));
    }
    let steps = (t / cfg.dt_solver).round() as usize;
    let dt = cfg.dt_solver;
    let (f1a, f1b, r1, p1) = frames(&scenario.psi1, &scenario.system1, hbar, cfg, steps)?;
    let (f2a, f2b, r2, p2) = frames(&scenario.psi2, &scenario.system2, hbar, cfg, steps)?;
    let (fa, fb, r12, p12) = frames(&scenario.psi, &scenario.system, hbar, cfg, steps)?;
    let n2 = scenario.grid.axis(1).len();
    let mut product_defect: f64 = 0.0;
    for (i, v) in p12.values().iter().enumerate() {
        product_defect = product_defect.max((v - p1.values()[i / n2] * p2.values()[i % n2]).norm());
    }
    let th1 = f1a.theta(scenario.system1.masses())?;
    let th2 = f2a.theta(scenario.system2.masses())?;
    let th = fa.theta(scenario.system.masses())?;
    let peak = fa.omega().iter().cloned().fold(0.0, f64::max);
    let di = |a: &PolarFields, b: &PolarFields, i: usize| -(b.omega()[i].ln() - a.omega()[i].ln());
    let (mut theta_defect, mut info_defect, mut ds_defect): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for i in 0..scenario.grid.len() {
        let (i1, i2) = (i / n2, i % n2);
        let bulk = fa.omega()[i] >= BULK_FRACTION * peak && !fa.node_mask()[i] && !fb.node_mask()[i];
        if !bulk || f1a.node_mask()[i1] || f2a.node_mask()[i2] {
            continue;
        }
        theta_defect = theta_defect.max((th[i] - th1[i1] - th2[i2]).abs());
        info_defect = info_defect.max((di(&fa, &fb, i) - di(&f1a, &f1b, i1) - di(&f2a, &f2b, i2)).abs());
        ds_defect = ds_defect.max(((r12[i] - r1[i1] - r2[i2]) * dt).abs());
    }
    // dA and production along a few representative joint steps
    let mut da_defect: f64 = 0.0;
    let mut sigma_defect: f64 = 0.0;
    let devs1 = sample_deviations(hbar, 64, 1, Purpose::Deviation)?;
    let devs2 = sample_deviations(hbar, 64, 1, Purpose::DeviationSecond)?;
    for k in 0..64 {
        let x = -1.0 + 2.0 * k as f64 / 63.0;
        let (q, qn) = ([x, 0.5 * x], [x + 0.3 * dt, 0.5 * x - 0.7 * dt]);
        let joint = compute_da_step(&q, &qn, &scenario.system, dt);
        let sum = compute_da_step(&q[..1], &qn[..1], &scenario.system1, dt)
            + compute_da_step(&q[1..], &qn[1..], &scenario.system2, dt);
        da_defect = da_defect.max((joint - sum).abs());
        let joint_sigma = 2.0 / hbar * (devs1[k] + devs2[k]);
        sigma_defect = sigma_defect.max((joint_sigma - 2.0 / hbar * devs1[k] - 2.0 / hbar * devs2[k]).abs());
    }
    Ok(DecompositionReport { time: steps as f64 * dt, product_defect, theta_defect, info_defect, ds_defect, da_defect, sigma_defect })
}

#[derive(Clone, Debug, Serialize)]
pub struct SeparabilityReport {
    pub n: usize,
    pub lambda: f64,
    pub correlation: f64,
    pub correlation_band: f64,
    pub mean_abs: [f64; 2],
    pub ks: [f64; 2],
    pub ks_band: f64,
}

impl SeparabilityReport {
    pub fn independent(&self) -> bool {
        self.correlation.abs() < self.correlation_band
    }

    pub fn marginals_match(&self, rel: f64) -> bool {
        let target = 0.5 * self.lambda.abs();
        self.mean_abs.iter().all(|m| (m - target).abs() <= rel * target) && self.ks.iter().all(|k| *k < self.ks_band)
    }
}

/// Draw per-particle deviations from independent streams and test the joint
/// law for factorization and each marginal against the exponential law.
pub fn check_transition_separability(lambda: f64, n: usize, master_seed: u64) -> Result<SeparabilityReport> {
    let a = sample_deviations(lambda, n, master_seed, Purpose::Deviation)?;
    let b = sample_deviations(lambda, n, master_seed, Purpose::DeviationSecond)?;
    let rate = 2.0 / lambda.abs();
    let s = lambda.signum();
    let cdf = |x: f64| {
        let y = s * x;
        if y <= 0.0 { 0.0 } else { 1.0 - (-rate * y).exp() }
    };
    let mags = |v: &[f64]| v.iter().map(|x| x * s).collect::<Vec<f64>>();
    let (ma, mb) = (mags(&a), mags(&b));
    Ok(SeparabilityReport {
        n,
        lambda,
        correlation: moments::correlation(&a, &b),
        correlation_band: 4.0 / (n as f64).sqrt(),
        mean_abs: [moments::mean(&ma), moments::mean(&mb)],
        ks: [
            ks_distance_with(&ma, |x| cdf(s * x), |x| cdf(s * x))?,
            ks_distance_with(&mb, |x| cdf(s * x), |x| cdf(s * x))?,
        ],
        ks_band: ks_band(n, BandLevel::P99),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MarginalCheckpoint {
    pub time: f64,
    pub ks: f64,
    pub band: f64,
    /// Largest per-trajectory difference of the first coordinate.
    pub max_path_difference: f64,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum MarginalReport {
    Compared { checkpoints: Vec<MarginalCheckpoint> },
    /// Non-product initial states have no separable marginal dynamics to compare.
    OutOfScope { reason: String },
}

impl MarginalReport {
    pub fn within_noise(&self) -> Option<bool> {
        match self {
            MarginalReport::Compared { checkpoints } => Some(checkpoints.iter().all(|c| c.ks < c.band)),
            MarginalReport::OutOfScope { .. } => None,
        }
    }
}

/// Compare particle-1 marginals of two runs that differ only in the second
/// particle's potential.
pub fn marginal_invariance_test(a: &TrajectoryEnsemble, b: &TrajectoryEnsemble, product_state: bool) -> Result<MarginalReport> {
    if !product_state {
        return Ok(MarginalReport::OutOfScope { reason: "out of scope: conditional structure of a non-product state".into() });
    }
    if a.master_seed != b.master_seed {
        return Err(Error::SeedMismatch(format!("runs use seeds {} and {}", a.master_seed, b.master_seed)));
    }
    if a.dims != 2 || b.dims != 2 || a.checkpoints.len() != b.checkpoints.len() || a.len() != b.len() {
        return Err(Error::InvalidParameter("runs must be two-particle ensembles with matching checkpoints".into()));
    }
    let mut out = Vec::with_capacity(a.checkpoints.len());
    for (k, (ca, cb)) in a.checkpoints.iter().zip(&b.checkpoints).enumerate() {
        if ca.step != cb.step {
            return Err(Error::InvalidParameter("checkpoint times differ between runs".into()));
        }
        let (xa, xb) = (a.coordinates(k, 0), b.coordinates(k, 0));
        let max_path_difference = xa.iter().zip(&xb).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        out.push(MarginalCheckpoint {
            time: ca.time,
            ks: ks_two_sample(&xa, &xb)?,
            band: ks_two_sample_band(xa.len(), xb.len(), BandLevel::P99),
            max_path_difference,
        });
    }
    Ok(MarginalReport::Compared { checkpoints: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Axis;
    use crate::schrodinger::{analytic_state, AnalyticState, Method};
    use crate::system::AxisPotential;

    fn scenario() -> ProductScenario {
        let line = SpatialGrid::line(Axis::centered(16.0, 64).unwrap(), Boundary::Periodic);
        let s = ClassicalSystem::one_dimensional(1.0, AxisPotential::Harmonic { omega: 1.0, center: 0.0 }).unwrap();
        let g = analytic_state(&AnalyticState::ShoGround { omega: 1.0, center: 0.0 }, &line, 1.0, 1.0, 0.0).unwrap();
        ProductScenario::new(s.clone(), s, g.clone(), g).unwrap()
    }

    #[test]
    fn two_ground_states_have_vanishing_theta() {
        let cfg = PropagatorConfig::new(Method::SplitStep, 1e-3, 0);
        let r = check_decomposition(&scenario(), 0.1, 1.0, &cfg).unwrap();
        assert!(r.product_defect < 1e-12);
        assert!(r.max_defect() < 1e-6, "{r:?}");
    }

    #[test]
    fn deviations_factorize() {
        let r = check_transition_separability(1.0, 100_000, 3).unwrap();
        assert!(r.independent(), "{r:?}");
        assert!(r.marginals_match(0.02), "{r:?}");
    }
}
