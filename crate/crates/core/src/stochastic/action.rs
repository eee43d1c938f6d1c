use crate::error::{Error, Result};
use crate::field::PolarFields;
use crate::interp::Probe;
use crate::system::ClassicalSystem;

/// `L dt` along the straight step from `q` to `q_next`, with `p = m (q_next - q)/dt`
/// and the potential at the midpoint.
pub fn compute_da_step(q: &[f64], q_next: &[f64], system: &ClassicalSystem, dt: f64) -> f64 {
    let m = system.masses();
    let mut kinetic = 0.0;
    let mut mid = [0.0; 2];
    for d in 0..q.len() {
        let v = (q_next[d] - q[d]) / dt;
        kinetic += 0.5 * m[d] * v * v;
        mid[d] = 0.5 * (q[d] + q_next[d]);
    }
    (kinetic - system.potential(&mid[..q.len()])) * dt
}

/// Chain-rule increment `dtS dt + gradS . dq`, trapezoidal between the two frames.
pub fn compute_ds_step(q: &[f64], q_next: &[f64], f0: &PolarFields, f1: &PolarFields, dt: f64) -> Result<f64> {
    f0.grid().check_same(f1.grid())?;
    let (s0, s1) = match (f0.dt_s(), f1.dt_s()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::InvalidParameter("dtS is required on both frames".into())),
    };
    let p0 = Probe::new(f0.grid(), q);
    let p1 = Probe::new(f1.grid(), q_next);
    let mut ds = 0.5 * dt * (p0.eval(s0) + p1.eval(s1));
    for d in 0..q.len() {
        ds += 0.5 * (q_next[d] - q[d]) * (p0.eval(&f0.grad_s()[d]) + p1.eval(&f1.grad_s()[d]));
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldOps;
    use crate::grid::{Axis, Boundary, SpatialGrid};
    use crate::schrodinger::{analytic_state, AnalyticState};
    use crate::system::AxisPotential;

    #[test]
    fn static_free_particle_has_no_action() {
        let free = ClassicalSystem::one_dimensional(1.0, AxisPotential::Free).unwrap();
        assert_eq!(compute_da_step(&[0.3], &[0.3], &free, 1e-3), 0.0);
    }

    #[test]
    fn drifting_free_particle() {
        let free = ClassicalSystem::one_dimensional(2.0, AxisPotential::Free).unwrap();
        let (k, dt) = (3.0, 1e-3);
        let da = compute_da_step(&[0.0], &[k / 2.0 * dt], &free, dt);
        assert!((da - k * k / 4.0 * dt).abs() < 1e-15);
    }

    #[test]
    fn ground_state_kinetic_and_potential_cancel() {
        let sho = ClassicalSystem::one_dimensional(1.0, AxisPotential::Harmonic { omega: 1.0, center: 0.0 }).unwrap();
        let dt = 1e-3;
        let da = compute_da_step(&[0.5], &[0.5 - 0.5 * dt], &sho, dt);
        assert!(da.abs() < dt * dt, "{da}");
    }

    fn frames(st: &AnalyticState, grid: &SpatialGrid, dt: f64) -> (PolarFields, PolarFields) {
        let ops = FieldOps::new(grid).unwrap();
        let a = analytic_state(st, grid, 1.0, 1.0, 0.0).unwrap();
        let b = analytic_state(st, grid, 1.0, 1.0, dt).unwrap();
        let rate = crate::field::phase_rate(&a, &b, 1.0).unwrap();
        let mut f0 = ops.decompose(&a, 1.0, false).unwrap();
        let mut f1 = ops.decompose(&b, 1.0, false).unwrap();
        f0.set_dt_s(rate.clone()).unwrap();
        f1.set_dt_s(rate).unwrap();
        (f0, f1)
    }

    #[test]
    fn stationary_phase_of_ground_state() {
        let grid = SpatialGrid::line(Axis::centered(20.0, 256).unwrap(), Boundary::Periodic);
        let dt = 1e-3;
        let (f0, f1) = frames(&AnalyticState::ShoGround { omega: 1.0, center: 0.0 }, &grid, dt);
        let ds = compute_ds_step(&[0.2], &[0.2], &f0, &f1, dt).unwrap();
        assert!((ds + 0.5 * dt).abs() < 1e-9, "{ds}");
    }

    #[test]
    fn plane_wave_phase_along_the_flow() {
        let grid = SpatialGrid::line(Axis::new(0.0, 2.0 * std::f64::consts::PI, 64).unwrap(), Boundary::Periodic);
        let (k, dt) = (2.0, 1e-3);
        let (f0, f1) = frames(&AnalyticState::PlaneWave { k }, &grid, dt);
        let ds = compute_ds_step(&[1.0], &[1.0 + k * dt], &f0, &f1, dt).unwrap();
        assert!((ds - 0.5 * k * k * dt).abs() < 1e-9, "{ds}");
    }

    #[test]
    fn missing_phase_rate_is_an_error() {
        let grid = SpatialGrid::line(Axis::centered(20.0, 64).unwrap(), Boundary::Periodic);
        let f = crate::field::polar_decompose(
            &analytic_state(&AnalyticState::ShoGround { omega: 1.0, center: 0.0 }, &grid, 1.0, 1.0, 0.0).unwrap(),
            1.0,
        )
        .unwrap();
        assert!(compute_ds_step(&[0.0], &[0.0], &f, &f, 1e-3).is_err());
    }
}
