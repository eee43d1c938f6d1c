use crate::error::{Error, Result};
use crate::field::PolarFields;
use crate::grid::SpatialGrid;
use crate::interp::{Probe, Stencil};
use crate::stochastic::ModelParams;
use crate::system::ClassicalSystem;

/// Frame of velocity data: `v = drift + lambda_signed * osmotic`, with
/// `drift = gradS / m` and `osmotic = grad ln Omega / (2 m)`.
#[derive(Clone, Debug)]
pub struct VelocityField {
    grid: SpatialGrid,
    drift: Vec<Vec<f64>>,
    osmotic: Vec<Vec<f64>>,
    node: Vec<bool>,
    /// Line grids: `[drift, osmotic, node]` per node, for a single gather.
    packed: Vec<[f64; 3]>,
    line: (f64, f64, usize),
}

#[derive(Clone, Copy, Debug)]
pub struct VelocitySample {
    pub drift: [f64; 2],
    pub osmotic: [f64; 2],
    pub at_node: bool,
}

impl VelocityField {
    pub fn new(fields: &PolarFields, masses: &[f64]) -> Result<Self> {
        let dims = fields.grid().dims();
        if masses.len() != dims {
            return Err(Error::GridMismatch(format!("{} masses for a {dims}-dimensional grid", masses.len())));
        }
        let scale = |c: &Vec<f64>, f: f64| c.iter().map(|x| x * f).collect::<Vec<f64>>();
        let drift: Vec<Vec<f64>> = fields.grad_s().iter().zip(masses).map(|(c, m)| scale(c, 1.0 / m)).collect();
        let osmotic: Vec<Vec<f64>> =
            fields.grad_ln_omega().iter().zip(masses).map(|(c, m)| scale(c, 0.5 / m)).collect();
        let node = fields.node_mask().to_vec();
        let packed = if dims == 1 {
            (0..node.len()).map(|i| [drift[0][i], osmotic[0][i], node[i] as u8 as f64]).collect()
        } else {
            Vec::new()
        };
        let a = fields.grid().axis(0);
        let line = (a.origin(), 1.0 / a.spacing(), a.len());
        Ok(Self { grid: fields.grid().clone(), drift, osmotic, node, packed, line })
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    #[inline]
    pub fn sample(&self, q: &[f64]) -> VelocitySample {
        if !self.packed.is_empty() {
            let (origin, inv_h, n) = self.line;
            let st = Stencil::at_index((q[0] - origin) * inv_h - 0.5, n, self.grid.boundary());
            let (mut v, mut o, mut hit) = (0.0, 0.0, 0.0);
            for k in 0..4 {
                let c = &self.packed[st.idx[k]];
                v += st.w[k] * c[0];
                o += st.w[k] * c[1];
                hit += c[2];
            }
            return VelocitySample { drift: [v, 0.0], osmotic: [o, 0.0], at_node: hit > 0.0 };
        }
        let probe = Probe::new(&self.grid, q);
        let mut s = VelocitySample { drift: [0.0; 2], osmotic: [0.0; 2], at_node: probe.touches(&self.node) };
        for d in 0..self.drift.len() {
            s.drift[d] = probe.eval(&self.drift[d]);
            s.osmotic[d] = probe.eval(&self.osmotic[d]);
        }
        s
    }
}

/// Velocity of one configuration point, with the osmotic term frozen at the
/// last valid value while the stencil touches a node.
#[derive(Clone, Copy, Debug, Default)]
pub struct TrajectoryState {
    pub q: [f64; 2],
    pub last_osmotic: [f64; 2],
    pub node_events: u32,
}

impl TrajectoryState {
    pub fn at(q: &[f64]) -> Self {
        let mut s = Self::default();
        s.q[..q.len()].copy_from_slice(q);
        s
    }

    #[inline]
    fn velocity(&mut self, field: &VelocityField, q: &[f64; 2], lambda_signed: f64, hit: &mut bool) -> [f64; 2] {
        let s = field.sample(&q[..field.grid.dims()]);
        let osm = if s.at_node {
            *hit = true;
            self.last_osmotic
        } else {
            self.last_osmotic = s.osmotic;
            s.osmotic
        };
        [s.drift[0] + lambda_signed * osm[0], s.drift[1] + lambda_signed * osm[1]]
    }

    /// One Heun step from `f0` (time t) to `f1` (time t + dt) with the sign frozen.
    #[inline]
    pub fn heun_step(&mut self, f0: &VelocityField, f1: &VelocityField, lambda_signed: f64, dt: f64) {
        let dims = f0.grid.dims();
        let mut hit = false;
        let q = self.q;
        let v1 = self.velocity(f0, &q, lambda_signed, &mut hit);
        let mut pred = [q[0] + dt * v1[0], q[1] + dt * v1[1]];
        f0.grid.confine(&mut pred[..dims]);
        let v2 = self.velocity(f1, &pred, lambda_signed, &mut hit);
        let mut next = [q[0] + 0.5 * dt * (v1[0] + v2[0]), q[1] + 0.5 * dt * (v1[1] + v2[1])];
        f0.grid.confine(&mut next[..dims]);
        if dims == 1 {
            next[1] = 0.0;
        }
        self.q = next;
        self.node_events += hit as u32;
    }
}

/// Actual velocity `(gradS + s |lambda|/2 grad ln Omega)/m` at `q`, cubic-interpolated.
/// At a node the osmotic part is dropped and `at_node` is set.
#[derive(Clone, Debug, PartialEq)]
pub struct ActualVelocity {
    pub v: Vec<f64>,
    pub at_node: bool,
}

pub fn actual_velocity(
    q: &[f64],
    fields: &PolarFields,
    sign: i8,
    params: &ModelParams,
    system: &ClassicalSystem,
) -> Result<ActualVelocity> {
    let grid = fields.grid();
    if q.len() != grid.dims() || system.dims() != grid.dims() {
        return Err(Error::GridMismatch("configuration, fields and system dimensions differ".into()));
    }
    let probe = Probe::new(grid, q);
    let at_node = probe.touches(fields.node_mask());
    let lam = sign as f64 * params.lambda_mag_at(fields.time());
    let v = (0..grid.dims())
        .map(|d| {
            let osm = if at_node { 0.0 } else { 0.5 * lam * probe.eval(&fields.grad_ln_omega()[d]) };
            (probe.eval(&fields.grad_s()[d]) + osm) / system.masses()[d]
        })
        .collect();
    Ok(ActualVelocity { v, at_node })
}

/// Single Heun step of one configuration point between two field frames.
pub fn step_trajectory(
    q: &[f64],
    fields_t: &PolarFields,
    fields_next: &PolarFields,
    sign: i8,
    params: &ModelParams,
    system: &ClassicalSystem,
) -> Result<Vec<f64>> {
    fields_t.grid().check_same(fields_next.grid())?;
    let f0 = VelocityField::new(fields_t, system.masses())?;
    let f1 = VelocityField::new(fields_next, system.masses())?;
    let mut st = TrajectoryState::at(q);
    st.heun_step(&f0, &f1, sign as f64 * params.lambda_mag_at(fields_t.time()), params.dt);
    Ok(st.q[..q.len()].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::polar_decompose;
    use crate::grid::{Axis, Boundary};
    use crate::schrodinger::{analytic_state, AnalyticState};
    use crate::system::AxisPotential;

    fn sho() -> ClassicalSystem {
        ClassicalSystem::one_dimensional(1.0, AxisPotential::Harmonic { omega: 1.0, center: 0.0 }).unwrap()
    }

    fn ground() -> PolarFields {
        let grid = SpatialGrid::line(Axis::centered(20.0, 512).unwrap(), Boundary::Periodic);
        let st = AnalyticState::ShoGround { omega: 1.0, center: 0.0 };
        polar_decompose(&analytic_state(&st, &grid, 1.0, 1.0, 0.0).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn plane_wave_moves_at_k_over_m() {
        let grid = SpatialGrid::line(Axis::new(0.0, 2.0 * std::f64::consts::PI, 64).unwrap(), Boundary::Periodic);
        let st = AnalyticState::PlaneWave { k: 2.0 };
        let f = polar_decompose(&analytic_state(&st, &grid, 1.0, 1.0, 0.0).unwrap(), 1.0).unwrap();
        let free = ClassicalSystem::one_dimensional(2.0, AxisPotential::Free).unwrap();
        for sign in [1, -1] {
            let v = actual_velocity(&[1.3], &f, sign, &ModelParams::with_step(1.0, 1e-3), &free).unwrap();
            assert!((v.v[0] - 1.0).abs() < 1e-12, "{v:?}");
        }
    }

    #[test]
    fn ground_state_velocity_flips_with_sign() {
        let f = ground();
        let p = ModelParams::with_step(1.0, 1e-3);
        let plus = actual_velocity(&[0.5], &f, 1, &p, &sho()).unwrap();
        let minus = actual_velocity(&[0.5], &f, -1, &p, &sho()).unwrap();
        assert!((plus.v[0] + 0.5).abs() < 1e-6, "{plus:?}");
        assert!((minus.v[0] - 0.5).abs() < 1e-6, "{minus:?}");
    }

    #[test]
    fn heun_step_on_ground_state() {
        let f = ground();
        let p = ModelParams::with_step(1.0, 1e-3);
        let q = step_trajectory(&[0.5], &f, &f, 1, &p, &sho()).unwrap();
        // dq/dt = -q, one Heun step: q (1 - dt + dt^2/2)
        assert!((q[0] - 0.5 * (1.0 - 1e-3 + 0.5e-6)).abs() < 1e-8, "{q:?}");
        let back = step_trajectory(&[0.5], &f, &f, -1, &p, &sho()).unwrap();
        let mean = 0.5 * (q[0] + back[0]);
        assert!((mean - 0.5).abs() < 1e-6, "sign-averaged step {mean}");
    }

    #[test]
    fn flat_fields_leave_the_point_in_place() {
        let grid = SpatialGrid::line(Axis::new(0.0, 4.0, 64).unwrap(), Boundary::Periodic);
        let psi = crate::field::WaveFunction::from_fn(&grid, 0.0, |_| num_complex::Complex64::new(0.5, 0.0));
        let f = polar_decompose(&psi, 1.0).unwrap();
        let free = ClassicalSystem::one_dimensional(1.0, AxisPotential::Free).unwrap();
        let q = step_trajectory(&[1.7], &f, &f, 1, &ModelParams::with_step(1.0, 1e-2), &free).unwrap();
        assert!((q[0] - 1.7).abs() < 1e-14);
    }

    #[test]
    fn node_freezes_osmotic_term() {
        let grid = SpatialGrid::line(Axis::centered(2.0, 255).unwrap(), Boundary::HardWall);
        let st = AnalyticState::BoxEigenstate { n: 2 };
        let f = polar_decompose(&analytic_state(&st, &grid, 1.0, 1.0, 0.0).unwrap(), 1.0).unwrap();
        assert!(f.node_count() > 0);
        let bx = ClassicalSystem::one_dimensional(1.0, AxisPotential::Box).unwrap();
        let p = ModelParams::with_step(1.0, 1e-3);
        let v = actual_velocity(&[0.0], &f, 1, &p, &bx).unwrap();
        assert!(v.at_node && v.v.iter().all(|x| x.is_finite()));

        let field = VelocityField::new(&f, &[1.0]).unwrap();
        let mut st = TrajectoryState::at(&[0.05]);
        for _ in 0..200 {
            st.heun_step(&field, &field, 1.0, 1e-3);
            assert!(st.q[0].is_finite() && st.q[0].abs() <= 1.0);
        }
    }


    mod props {
        use super::*;
        use crate::field::polar_decompose;
        use crate::grid::{Axis, Boundary, SpatialGrid};
        use crate::schrodinger::{analytic_state, AnalyticState};
        use crate::system::AxisPotential;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn opposite_signs_average_to_the_drift(q in -3.0f64..3.0, x0 in -1.0f64..1.0, lam in 0.1f64..3.0) {
                let grid = SpatialGrid::line(Axis::centered(20.0, 256).unwrap(), Boundary::Periodic);
                let st = AnalyticState::ShoCoherent { omega: 1.0, center: 0.0, displacement: x0, velocity: 0.3 };
                let f = polar_decompose(&analytic_state(&st, &grid, 1.0, 1.0, 0.4).unwrap(), 1.0).unwrap();
                let sho = ClassicalSystem::one_dimensional(1.0, AxisPotential::Harmonic { omega: 1.0, center: 0.0 }).unwrap();
                let p = ModelParams::with_step(lam, 1e-3);
                let up = actual_velocity(&[q], &f, 1, &p, &sho).unwrap().v[0];
                let down = actual_velocity(&[q], &f, -1, &p, &sho).unwrap().v[0];
                let drift = VelocityField::new(&f, &[1.0]).unwrap().sample(&[q]).drift[0];
                prop_assert!((0.5 * (up + down) - drift).abs() < 1e-9);
                // osmotic part of the coherent state is -(q - centre), scaled by lambda/2
                let centre = x0 * 0.4f64.cos() + 0.3 * 0.4f64.sin();
                prop_assert!((0.5 * (up - down) + lam * (q - centre)).abs() < 1e-3);
            }
        }
    }
}
