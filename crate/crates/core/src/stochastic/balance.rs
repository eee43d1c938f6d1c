use crate::error::{Error, Result};
use crate::field::{phase_rate, FieldOps, PolarFields, WaveFunction};
use crate::stochastic::ModelParams;
use crate::system::ClassicalSystem;

/// Residuals are reported where the midpoint density is at least this fraction of its peak.
pub const BULK_FRACTION: f64 = 1e-6;

/// Two adjacent solver frames with second-order fields and the midpoint `dtS`.
#[derive(Clone, Debug)]
pub struct BalanceFrames {
    pub f0: PolarFields,
    pub f1: PolarFields,
    pub dt_s: Vec<f64>,
    pub dt: f64,
}

impl BalanceFrames {
    pub fn new(ops: &FieldOps, psi0: &WaveFunction, psi1: &WaveFunction, hbar: f64) -> Result<Self> {
        let dt = psi1.time() - psi0.time();
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter("balance frames must be ordered in time".into()));
        }
        psi0.check_normalized()?;
        psi1.check_normalized()?;
        Ok(Self {
            f0: ops.decompose(psi0, hbar, true)?,
            f1: ops.decompose(psi1, hbar, true)?,
            dt_s: phase_rate(psi0, psi1, hbar)?,
            dt,
        })
    }

    fn bulk_mask(&self) -> Vec<bool> {
        let w0 = self.f0.omega();
        let w1 = self.f1.omega();
        let peak = w0.iter().zip(w1).map(|(a, b)| 0.5 * (a + b)).fold(0.0, f64::max);
        (0..w0.len())
            .map(|i| {
                !self.f0.node_mask()[i] && !self.f1.node_mask()[i] && 0.5 * (w0[i] + w1[i]) >= BULK_FRACTION * peak
            })
            .collect()
    }

    fn mid(&self, a: &[f64], b: &[f64], i: usize) -> f64 {
        0.5 * (a[i] + b[i])
    }
}

#[derive(Clone, Debug)]
pub struct BalanceResidual {
    pub values: Vec<f64>,
    pub bulk: Vec<bool>,
}

impl BalanceResidual {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().zip(&self.bulk).filter(|(_, &b)| b).map(|(v, _)| v.abs()).fold(0.0, f64::max)
    }

    pub fn max_abs_difference(&self, other: &[f64]) -> f64 {
        self.values
            .iter()
            .zip(other)
            .zip(&self.bulk)
            .filter(|(_, &b)| b)
            .map(|((v, o), _)| (v - o).abs())
            .fold(0.0, f64::max)
    }
}

/// Time component of the balance at sign `sign`:
/// `-dt ln Omega - (2/lambda)(H(q, p) + dtS) - theta`, with
/// `p = gradS + (lambda/2) grad ln Omega` and midpoint spatial fields.
pub fn information_balance_residual(
    frames: &BalanceFrames,
    sign: i8,
    params: &ModelParams,
    system: &ClassicalSystem,
) -> Result<BalanceResidual> {
    let grid = frames.f0.grid();
    system.check_grid(grid)?;
    let lam = sign as f64 * params.lambda_mag_at(frames.f0.time());
    let m = system.masses();
    let bulk = frames.bulk_mask();
    let (s0, s1) = (second(&frames.f0)?, second(&frames.f1)?);
    let mut values = vec![0.0; grid.len()];
    for i in 0..grid.len() {
        if frames.f0.node_mask()[i] || frames.f1.node_mask()[i] {
            continue;
        }
        let q = grid.position(i);
        let dt_ln = (frames.f1.omega()[i].ln() - frames.f0.omega()[i].ln()) / frames.dt;
        let mut h = system.potential(&q[..grid.dims()]);
        let mut theta = 0.0;
        for d in 0..grid.dims() {
            let gs = frames.mid(&frames.f0.grad_s()[d], &frames.f1.grad_s()[d], i);
            let gl = frames.mid(&frames.f0.grad_ln_omega()[d], &frames.f1.grad_ln_omega()[d], i);
            let p = gs + 0.5 * lam * gl;
            h += p * p / (2.0 * m[d]);
            theta += frames.mid(&s0.d2_s[d], &s1.d2_s[d], i) / m[d];
        }
        values[i] = -dt_ln - (2.0 / lam) * (h + frames.dt_s[i]) - theta;
    }
    Ok(BalanceResidual { values, bulk })
}

/// `(R+ + R-)/2`.
pub fn sign_averaged_balance_residual(
    frames: &BalanceFrames,
    params: &ModelParams,
    system: &ClassicalSystem,
) -> Result<BalanceResidual> {
    let plus = information_balance_residual(frames, 1, params, system)?;
    let minus = information_balance_residual(frames, -1, params, system)?;
    Ok(BalanceResidual {
        values: plus.values.iter().zip(&minus.values).map(|(a, b)| 0.5 * (a + b)).collect(),
        bulk: plus.bulk,
    })
}

/// Closed form of the single-sign residual when `|lambda| = hbar`:
/// `-s sum_d (hbar/2m_d)(d2 ln Omega + (d ln Omega)^2)`.
pub fn predicted_single_sign_residual(frames: &BalanceFrames, sign: i8, system: &ClassicalSystem) -> Result<Vec<f64>> {
    let grid = frames.f0.grid();
    let hbar = frames.f0.hbar_eff();
    let (s0, s1) = (second(&frames.f0)?, second(&frames.f1)?);
    let mut out = vec![0.0; grid.len()];
    for (i, o) in out.iter_mut().enumerate() {
        for d in 0..grid.dims() {
            let gl = frames.mid(&frames.f0.grad_ln_omega()[d], &frames.f1.grad_ln_omega()[d], i);
            let d2 = frames.mid(&s0.d2_ln_omega[d], &s1.d2_ln_omega[d], i);
            *o -= sign as f64 * hbar / (2.0 * system.masses()[d]) * (d2 + gl * gl);
        }
    }
    Ok(out)
}

/// Spatial component per axis: `-d ln Omega - (2/lambda)(gradS - p)` with the
/// actual momentum `p`. Vanishes identically up to roundoff.
pub fn spatial_balance_residual(fields: &PolarFields, sign: i8, params: &ModelParams) -> Vec<Vec<f64>> {
    let lam = sign as f64 * params.lambda_mag_at(fields.time());
    fields
        .grad_s()
        .iter()
        .zip(fields.grad_ln_omega())
        .map(|(gs, gl)| {
            gs.iter()
                .zip(gl)
                .map(|(&s, &l)| {
                    let p = s + 0.5 * lam * l;
                    -l - (2.0 / lam) * (s - p)
                })
                .collect()
        })
        .collect()
}

/// Energy form of the time component, `(lambda/2) R`.
pub fn energy_relation_residual(residual: &BalanceResidual, sign: i8, params: &ModelParams, t: f64) -> Vec<f64> {
    let half = 0.5 * sign as f64 * params.lambda_mag_at(t);
    residual.values.iter().map(|r| half * r).collect()
}

fn second(f: &PolarFields) -> Result<&crate::field::SecondOrderFields> {
    f.second().ok_or_else(|| Error::InvalidParameter("balance frames need second-order fields".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Axis, Boundary, SpatialGrid};
    use crate::schrodinger::{analytic_state, AnalyticState};
    use crate::system::AxisPotential;

    fn sho() -> ClassicalSystem {
        ClassicalSystem::one_dimensional(1.0, AxisPotential::Harmonic { omega: 1.0, center: 0.0 }).unwrap()
    }

    fn frames(st: &AnalyticState, t: f64, dt: f64) -> BalanceFrames {
        let grid = SpatialGrid::line(Axis::centered(25.6, 512).unwrap(), Boundary::Periodic);
        let ops = FieldOps::new(&grid).unwrap();
        let a = analytic_state(st, &grid, 1.0, 1.0, t).unwrap();
        let b = analytic_state(st, &grid, 1.0, 1.0, t + dt).unwrap();
        BalanceFrames::new(&ops, &a, &b, 1.0).unwrap()
    }

    #[test]
    fn sign_averaged_residual_vanishes_on_ground_and_coherent_states() {
        let p = ModelParams::with_step(1.0, 1e-3);
        for st in [
            AnalyticState::ShoGround { omega: 1.0, center: 0.0 },
            AnalyticState::ShoCoherent { omega: 1.0, center: 0.0, displacement: 1.0, velocity: 0.0 },
        ] {
            let r = sign_averaged_balance_residual(&frames(&st, 0.5, 1e-4), &p, &sho()).unwrap();
            assert!(r.max_abs() < 1e-4, "{st:?}: {}", r.max_abs());
        }
    }

    #[test]
    fn single_sign_residuals_match_closed_form_and_mirror() {
        let fr = frames(&AnalyticState::ShoGround { omega: 1.0, center: 0.0 }, 0.0, 1e-4);
        let p = ModelParams::with_step(1.0, 1e-3);
        let plus = information_balance_residual(&fr, 1, &p, &sho()).unwrap();
        let minus = information_balance_residual(&fr, -1, &p, &sho()).unwrap();
        let pred = predicted_single_sign_residual(&fr, 1, &sho()).unwrap();
        assert!(plus.max_abs_difference(&pred) < 1e-6);
        let mirrored: Vec<f64> = minus.values.iter().map(|v| -v).collect();
        assert!(plus.max_abs_difference(&mirrored) < 1e-6);
        // ground state: d2 ln Omega + (d ln Omega)^2 = -2 + 4 q^2, so R+ = 1 - 2 q^2
        let grid = fr.f0.grid();
        let i = (0..grid.len()).min_by(|&a, &b| grid.position(a)[0].abs().total_cmp(&grid.position(b)[0].abs())).unwrap();
        let q = grid.position(i)[0];
        assert!((plus.values[i] - (1.0 - 2.0 * q * q)).abs() < 1e-6);
    }

    #[test]
    fn spatial_component_is_identically_zero() {
        let fr = frames(&AnalyticState::ShoCoherent { omega: 1.0, center: 0.0, displacement: 1.0, velocity: 0.3 }, 0.2, 1e-4);
        for sign in [1, -1] {
            let r = spatial_balance_residual(&fr.f0, sign, &ModelParams::with_step(0.7, 1e-3));
            assert!(r[0].iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn energy_form_scales_by_half_lambda() {
        let fr = frames(&AnalyticState::ShoGround { omega: 1.0, center: 0.0 }, 0.0, 1e-4);
        let p = ModelParams::with_step(1.0, 1e-3);
        let plus = information_balance_residual(&fr, 1, &p, &sho()).unwrap();
        let e = energy_relation_residual(&plus, 1, &p, 0.0);
        assert!(e.iter().zip(&plus.values).all(|(a, b)| (a - 0.5 * b).abs() < 1e-15));
    }

    #[test]
    fn frames_must_be_ordered() {
        let grid = SpatialGrid::line(Axis::centered(20.0, 64).unwrap(), Boundary::Periodic);
        let ops = FieldOps::new(&grid).unwrap();
        let a = analytic_state(&AnalyticState::ShoGround { omega: 1.0, center: 0.0 }, &grid, 1.0, 1.0, 0.0).unwrap();
        assert!(BalanceFrames::new(&ops, &a, &a, 1.0).is_err());
    }
}
