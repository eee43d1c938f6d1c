//! Classical Hamiltonian reference dynamics (the small-|lambda| limit).

use crate::error::{Error, Result};
use crate::system::ClassicalSystem;

#[derive(Clone, Debug)]
pub struct ClassicalTrajectory {
    pub times: Vec<f64>,
    pub q: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
}

impl ClassicalTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn energy(&self, system: &ClassicalSystem, k: usize) -> f64 {
        system.hamiltonian(&self.q[k], &self.p[k])
    }

    /// Largest relative energy deviation from the initial value.
    pub fn max_energy_drift(&self, system: &ClassicalSystem) -> f64 {
        let e0 = self.energy(system, 0);
        let scale = e0.abs().max(f64::MIN_POSITIVE);
        (0..self.len()).map(|k| (self.energy(system, k) - e0).abs() / scale).fold(0.0, f64::max)
    }

    /// Position component `d` at time `t`, linearly interpolated between steps.
    pub fn position_at(&self, t: f64, d: usize) -> f64 {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.q[0][d];
        }
        if t >= self.times[n - 1] {
            return self.q[n - 1][d];
        }
        let dt = self.times[1] - self.times[0];
        let k = (((t - self.times[0]) / dt).floor() as usize).min(n - 2);
        let w = (t - self.times[k]) / dt;
        (1.0 - w) * self.q[k][d] + w * self.q[k + 1][d]
    }

    pub fn last(&self) -> (&[f64], &[f64]) {
        let n = self.len() - 1;
        (&self.q[n], &self.p[n])
    }
}

/// Velocity-Verlet integration of Hamilton's equations for `H = p^2/2m + V`.
pub fn integrate_hamilton(
    q0: &[f64],
    p0: &[f64],
    system: &ClassicalSystem,
    dt: f64,
    t_end: f64,
) -> Result<ClassicalTrajectory> {
    if !(dt > 0.0) || !(t_end > 0.0) {
        return Err(Error::InvalidParameter(format!("need dt > 0 and T > 0 (dt = {dt}, T = {t_end})")));
    }
    let dims = system.dims();
    if q0.len() != dims || p0.len() != dims {
        return Err(Error::InvalidParameter("initial conditions do not match system dimension".into()));
    }
    let steps = (t_end / dt).round().max(1.0) as usize;
    let m = system.masses();
    let mut q = q0.to_vec();
    let mut p = p0.to_vec();
    let mut f = vec![0.0; dims];
    system.force(&q, &mut f);
    let mut out = ClassicalTrajectory {
        times: Vec::with_capacity(steps + 1),
        q: Vec::with_capacity(steps + 1),
        p: Vec::with_capacity(steps + 1),
    };
    out.times.push(0.0);
    out.q.push(q.clone());
    out.p.push(p.clone());
    for k in 1..=steps {
        for d in 0..dims {
            p[d] += 0.5 * dt * f[d];
            q[d] += dt * p[d] / m[d];
        }
        system.force(&q, &mut f);
        if f.iter().any(|x| !x.is_finite()) {
            return Err(Error::Unstable(format!("non-finite force at step {k}")));
        }
        for d in 0..dims {
            p[d] += 0.5 * dt * f[d];
        }
        out.times.push(k as f64 * dt);
        out.q.push(q.clone());
        out.p.push(p.clone());
    }
    Ok(out)
}

/// `dH/dp` at `p = grad`, i.e. `grad / m` per axis.
pub fn classical_velocity_field(system: &ClassicalSystem, grad: &[Vec<f64>]) -> Vec<Vec<f64>> {
    grad.iter().zip(system.masses()).map(|(g, m)| g.iter().map(|x| x / m).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::AxisPotential;
    use std::f64::consts::PI;

    fn sho() -> ClassicalSystem {
        ClassicalSystem::one_dimensional(1.0, AxisPotential::Harmonic { omega: 1.0, center: 0.0 }).unwrap()
    }

    #[test]
    fn oscillator_returns_after_one_period() {
        let tr = integrate_hamilton(&[1.0], &[0.0], &sho(), 1e-3, 2.0 * PI).unwrap();
        let (q, _) = tr.last();
        let t = *tr.times.last().unwrap();
        assert!((q[0] - t.cos()).abs() < 1e-6);
    }

    #[test]
    fn free_particle_moves_uniformly() {
        let free = ClassicalSystem::one_dimensional(2.0, AxisPotential::Free).unwrap();
        let tr = integrate_hamilton(&[0.5], &[3.0], &free, 0.01, 2.0).unwrap();
        for (t, q) in tr.times.iter().zip(&tr.q) {
            assert!((q[0] - (0.5 + 1.5 * t)).abs() < 1e-12);
        }
    }

    #[test]
    fn energy_is_conserved_over_ten_time_units() {
        let tr = integrate_hamilton(&[1.0], &[0.3], &sho(), 1e-3, 10.0).unwrap();
        assert!(tr.max_energy_drift(&sho()) < 1e-6);
    }

    #[test]
    fn time_reversal_recovers_initial_state() {
        let quartic = ClassicalSystem::one_dimensional(1.0, AxisPotential::Quartic { a: 0.25 }).unwrap();
        let fwd = integrate_hamilton(&[1.2], &[-0.4], &quartic, 1e-3, 3.0).unwrap();
        let (q, p) = fwd.last();
        let back = integrate_hamilton(q, &[-p[0]], &quartic, 1e-3, 3.0).unwrap();
        let (q2, p2) = back.last();
        assert!((q2[0] - 1.2).abs() < 1e-8);
        assert!((-p2[0] + 0.4).abs() < 1e-8);
    }

    #[test]
    fn velocity_field_divides_by_mass() {
        let s = ClassicalSystem::new(vec![1.0, 4.0], vec![AxisPotential::Free, AxisPotential::Free]).unwrap();
        let v = classical_velocity_field(&s, &[vec![2.0, 0.0], vec![2.0, 8.0]]);
        assert_eq!(v, vec![vec![2.0, 0.0], vec![0.5, 2.0]]);
    }

    #[test]
    fn rejects_non_positive_step() {
        assert!(integrate_hamilton(&[0.0], &[0.0], &sho(), 0.0, 1.0).is_err());
    }
}
