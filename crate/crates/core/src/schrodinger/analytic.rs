//! Closed-form reference states used as initial conditions and oracles.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::WaveFunction;
use crate::grid::{Axis, Boundary, SpatialGrid};

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AnalyticState {
    ShoGround {
        #[serde(default = "one")]
        omega: f64,
        #[serde(default)]
        center: f64,
    },
    ShoCoherent {
        #[serde(default = "one")]
        omega: f64,
        #[serde(default)]
        center: f64,
        displacement: f64,
        #[serde(default)]
        velocity: f64,
    },
    FreeGaussian {
        #[serde(default = "one")]
        sigma0: f64,
        #[serde(default)]
        q0: f64,
        #[serde(default)]
        p0: f64,
    },
    BoxEigenstate {
        n: u32,
    },
    PlaneWave {
        k: f64,
    },
}

pub const STATE_KINDS: [&str; 5] = ["sho-ground", "sho-coherent", "free-gaussian", "box-eigenstate", "plane-wave"];

impl AnalyticState {
    /// Build from a kind name and numeric parameters.
    pub fn from_kind(kind: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        if !STATE_KINDS.contains(&kind) {
            return Err(Error::InvalidParameter(format!(
                "unknown state kind `{kind}` (expected one of {})",
                STATE_KINDS.join(", ")
            )));
        }
        let mut obj = serde_json::Map::new();
        obj.insert("kind".into(), kind.into());
        for (k, v) in params {
            let value = if k == "n" { serde_json::json!(*v as u32) } else { serde_json::json!(v) };
            obj.insert(k.clone(), value);
        }
        let state: AnalyticState = serde_json::from_value(serde_json::Value::Object(obj))
            .map_err(|e| Error::InvalidParameter(format!("{kind}: {e}")))?;
        state.validate()?;
        Ok(state)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AnalyticState::ShoGround { .. } => "sho-ground",
            AnalyticState::ShoCoherent { .. } => "sho-coherent",
            AnalyticState::FreeGaussian { .. } => "free-gaussian",
            AnalyticState::BoxEigenstate { .. } => "box-eigenstate",
            AnalyticState::PlaneWave { .. } => "plane-wave",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        match *self {
            AnalyticState::ShoGround { omega, center } if !(omega > 0.0) || !center.is_finite() => {
                bad("sho-ground needs omega > 0")
            }
            AnalyticState::ShoCoherent { omega, displacement, velocity, .. }
                if !(omega > 0.0) || !displacement.is_finite() || !velocity.is_finite() =>
            {
                bad("sho-coherent needs omega > 0 and finite displacement/velocity")
            }
            AnalyticState::FreeGaussian { sigma0, q0, p0 } if !(sigma0 > 0.0) || !q0.is_finite() || !p0.is_finite() => {
                bad("free-gaussian needs sigma0 > 0")
            }
            AnalyticState::BoxEigenstate { n } if n == 0 => bad("box-eigenstate needs n >= 1"),
            AnalyticState::PlaneWave { k } if !k.is_finite() => bad("plane-wave needs finite k"),
            _ => Ok(()),
        }
    }

    /// Check the state fits the axis and boundary it will be sampled on.
    pub fn check_axis(&self, axis: &Axis, boundary: Boundary) -> Result<()> {
        match *self {
            AnalyticState::BoxEigenstate { .. } if boundary != Boundary::HardWall => {
                Err(Error::InvalidParameter("box-eigenstate needs a hard-wall grid".into()))
            }
            AnalyticState::PlaneWave { k } => {
                if boundary != Boundary::Periodic {
                    return Err(Error::InvalidParameter("plane-wave needs a periodic grid".into()));
                }
                let m = k * axis.extent() / (2.0 * PI);
                if (m - m.round()).abs() > 1e-9 {
                    return Err(Error::InvalidParameter(format!(
                        "plane-wave k = {k} is not commensurate with the periodic extent"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Unnormalized-on-grid amplitude at `q` and time `t` (exactly normalized on the line).
    pub fn amplitude(&self, q: f64, t: f64, hbar: f64, mass: f64, axis: &Axis) -> Complex64 {
        match *self {
            AnalyticState::ShoGround { omega, center } => {
                let a = mass * omega / hbar;
                let y = q - center;
                Complex64::from_polar((a / PI).powf(0.25) * (-0.5 * a * y * y).exp(), -0.5 * omega * t)
            }
            AnalyticState::ShoCoherent { omega, center, displacement, velocity } => {
                let a = mass * omega / hbar;
                let p0 = mass * velocity;
                let (x, p) = coherent_phase_space(omega, mass, displacement, p0, t);
                let y = q - center;
                let phase = (p * (y - 0.5 * x) + 0.5 * p0 * displacement) / hbar - 0.5 * omega * t;
                Complex64::from_polar((a / PI).powf(0.25) * (-0.5 * a * (y - x).powi(2)).exp(), phase)
            }
            AnalyticState::FreeGaussian { sigma0, q0, p0 } => {
                let tau = hbar * t / (2.0 * mass * sigma0 * sigma0);
                let spread = Complex64::new(1.0, tau);
                let x = q - q0 - p0 * t / mass;
                let pref = (2.0 * PI * sigma0 * sigma0).powf(-0.25) / spread.sqrt();
                let expo = -Complex64::new(x * x, 0.0) / (4.0 * sigma0 * sigma0 * spread)
                    + Complex64::new(0.0, (p0 * (q - q0) - p0 * p0 * t / (2.0 * mass)) / hbar);
                pref * expo.exp()
            }
            AnalyticState::BoxEigenstate { n } => {
                let l = axis.extent();
                let k = n as f64 * PI / l;
                let e = hbar * hbar * k * k / (2.0 * mass);
                Complex64::from_polar((2.0 / l).sqrt() * (k * (q - axis.origin())).sin(), -e * t / hbar)
            }
            AnalyticState::PlaneWave { k } => {
                let l = axis.extent();
                Complex64::from_polar(l.sqrt().recip(), k * q - hbar * k * k * t / (2.0 * mass))
            }
        }
    }

    /// Expected position at time `t`.
    pub fn mean_position(&self, t: f64, mass: f64, axis: &Axis) -> f64 {
        match *self {
            AnalyticState::ShoGround { center, .. } => center,
            AnalyticState::ShoCoherent { omega, center, displacement, velocity } => {
                center + coherent_phase_space(omega, mass, displacement, mass * velocity, t).0
            }
            AnalyticState::FreeGaussian { q0, p0, .. } => q0 + p0 * t / mass,
            AnalyticState::BoxEigenstate { .. } | AnalyticState::PlaneWave { .. } => axis.origin() + 0.5 * axis.extent(),
        }
    }

    /// Expected momentum at time `t`.
    pub fn mean_momentum(&self, t: f64, mass: f64) -> f64 {
        match *self {
            AnalyticState::ShoCoherent { omega, displacement, velocity, .. } => {
                coherent_phase_space(omega, mass, displacement, mass * velocity, t).1
            }
            AnalyticState::FreeGaussian { p0, .. } => p0,
            AnalyticState::PlaneWave { k } => k,
            _ => 0.0,
        }
    }

    /// Position standard deviation at time `t`, where closed form is simple.
    pub fn width(&self, t: f64, hbar: f64, mass: f64) -> Option<f64> {
        match *self {
            AnalyticState::ShoGround { omega, .. } | AnalyticState::ShoCoherent { omega, .. } => {
                Some((hbar / (2.0 * mass * omega)).sqrt())
            }
            AnalyticState::FreeGaussian { sigma0, .. } => {
                let tau = hbar * t / (2.0 * mass * sigma0 * sigma0);
                Some(sigma0 * (1.0 + tau * tau).sqrt())
            }
            _ => None,
        }
    }

    /// Energy expectation.
    pub fn energy(&self, hbar: f64, mass: f64, axis: &Axis) -> f64 {
        match *self {
            AnalyticState::ShoGround { omega, .. } => 0.5 * hbar * omega,
            AnalyticState::ShoCoherent { omega, displacement, velocity, .. } => {
                0.5 * mass * velocity * velocity + 0.5 * mass * omega * omega * displacement * displacement + 0.5 * hbar * omega
            }
            AnalyticState::FreeGaussian { sigma0, p0, .. } => {
                p0 * p0 / (2.0 * mass) + hbar * hbar / (8.0 * mass * sigma0 * sigma0)
            }
            AnalyticState::BoxEigenstate { n } => {
                let k = n as f64 * PI / axis.extent();
                hbar * hbar * k * k / (2.0 * mass)
            }
            AnalyticState::PlaneWave { k } => hbar * hbar * k * k / (2.0 * mass),
        }
    }
}

/// Classical `(x, p)` of an oscillator relative to its center.
pub fn coherent_phase_space(omega: f64, mass: f64, x0: f64, p0: f64, t: f64) -> (f64, f64) {
    let (s, c) = (omega * t).sin_cos();
    (x0 * c + p0 / (mass * omega) * s, p0 * c - mass * omega * x0 * s)
}

/// Two-particle initial state on a plane grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PairState {
    /// `psi_a(q1) psi_b(q2)`
    Product { factors: [AnalyticState; 2] },
    /// `psi_a(q1) psi_b(q2) + psi_b(q1) psi_a(q2)`, renormalized; not separable.
    Symmetrized { factors: [AnalyticState; 2] },
}

impl PairState {
    pub fn factors(&self) -> &[AnalyticState; 2] {
        match self {
            PairState::Product { factors } | PairState::Symmetrized { factors } => factors,
        }
    }

    pub fn is_product(&self) -> bool {
        matches!(self, PairState::Product { .. })
    }
}

/// Initial condition for a scenario: one particle or a pair.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialState {
    Single(AnalyticState),
    Pair(PairState),
}

impl InitialState {
    pub fn is_product(&self) -> bool {
        match self {
            InitialState::Single(_) => true,
            InitialState::Pair(p) => p.is_product(),
        }
    }
}

/// Exact state at time `t` sampled on `grid` and renormalized by quadrature.
pub fn analytic_state(state: &AnalyticState, grid: &SpatialGrid, hbar: f64, mass: f64, t: f64) -> Result<WaveFunction> {
    if grid.dims() != 1 {
        return Err(Error::GridMismatch("single-particle states need a line grid".into()));
    }
    state.validate()?;
    let axis = grid.axis(0);
    state.check_axis(axis, grid.boundary())?;
    WaveFunction::from_fn(grid, t, |q| state.amplitude(q[0], t, hbar, mass, axis)).normalized()
}

/// Pair state at time `t` for non-interacting evolution under per-axis masses.
pub fn pair_state(state: &PairState, grid: &SpatialGrid, hbar: f64, masses: [f64; 2], t: f64) -> Result<WaveFunction> {
    if grid.dims() != 2 {
        return Err(Error::GridMismatch("pair states need a plane grid".into()));
    }
    let [a, b] = state.factors();
    let (ax0, ax1) = (grid.axis(0), grid.axis(1));
    for (s, ax) in [(a, ax0), (b, ax1)] {
        s.validate()?;
        s.check_axis(ax, grid.boundary())?;
    }
    let psi = match state {
        PairState::Product { .. } => WaveFunction::from_fn(grid, t, |q| {
            a.amplitude(q[0], t, hbar, masses[0], ax0) * b.amplitude(q[1], t, hbar, masses[1], ax1)
        }),
        PairState::Symmetrized { .. } => WaveFunction::from_fn(grid, t, |q| {
            a.amplitude(q[0], t, hbar, masses[0], ax0) * b.amplitude(q[1], t, hbar, masses[1], ax1)
                + b.amplitude(q[0], t, hbar, masses[0], ax0) * a.amplitude(q[1], t, hbar, masses[1], ax1)
        }),
    };
    psi.normalized()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(extent: f64, n: usize, b: Boundary) -> SpatialGrid {
        SpatialGrid::line(Axis::centered(extent, n).unwrap(), b)
    }

    #[test]
    fn ground_state_density_is_time_independent() {
        let g = line(20.0, 256, Boundary::Periodic);
        let s = AnalyticState::ShoGround { omega: 1.0, center: 0.0 };
        let a = analytic_state(&s, &g, 1.0, 1.0, 0.0).unwrap();
        let b = analytic_state(&s, &g, 1.0, 1.0, 3.7).unwrap();
        for (i, q) in g.axis(0).nodes().into_iter().enumerate() {
            let expect = (-q * q).exp() / PI.sqrt();
            assert!((a.values()[i].norm_sqr() - expect).abs() < 1e-12);
            assert!((b.values()[i].norm_sqr() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn free_gaussian_starts_with_variance_sigma0_squared() {
        let g = line(30.0, 512, Boundary::Periodic);
        let s = AnalyticState::FreeGaussian { sigma0: 1.3, q0: 0.5, p0: 0.0 };
        let psi = analytic_state(&s, &g, 1.0, 1.0, 0.0).unwrap();
        let x = g.axis(0).nodes();
        let w = psi.density();
        let dq = g.axis(0).spacing();
        let mean: f64 = x.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() * dq;
        let var: f64 = x.iter().zip(&w).map(|(x, w)| (x - mean).powi(2) * w).sum::<f64>() * dq;
        assert!((mean - 0.5).abs() < 1e-10);
        assert!((var - 1.69).abs() < 1e-10);
    }

    #[test]
    fn box_ground_state_density() {
        let g = SpatialGrid::line(Axis::new(0.0, 2.0, 64).unwrap(), Boundary::HardWall);
        let s = AnalyticState::BoxEigenstate { n: 1 };
        let psi = analytic_state(&s, &g, 1.0, 1.0, 0.4).unwrap();
        for (i, q) in g.axis(0).nodes().into_iter().enumerate() {
            assert!((psi.values()[i].norm_sqr() - (PI * q / 2.0).sin().powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn coherent_state_starts_at_displacement() {
        let s = AnalyticState::ShoCoherent { omega: 1.0, center: 0.0, displacement: 1.0, velocity: 0.5 };
        let ax = Axis::centered(20.0, 64).unwrap();
        assert!((s.mean_position(0.0, 1.0, &ax) - 1.0).abs() < 1e-15);
        assert!((s.mean_position(PI, 1.0, &ax) + 1.0).abs() < 1e-12);
        assert!((s.mean_momentum(0.0, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn unknown_kind_is_rejected() {
        let err = AnalyticState::from_kind("squeezed", &BTreeMap::new()).unwrap_err();
        assert!(err.to_string().contains("unknown state kind"));
        let mut p = BTreeMap::new();
        p.insert("n".to_string(), 2.0);
        assert_eq!(AnalyticState::from_kind("box-eigenstate", &p).unwrap(), AnalyticState::BoxEigenstate { n: 2 });
    }

    #[test]
    fn plane_wave_must_be_commensurate() {
        let g = SpatialGrid::line(Axis::new(0.0, 2.0 * PI, 32).unwrap(), Boundary::Periodic);
        assert!(analytic_state(&AnalyticState::PlaneWave { k: 2.0 }, &g, 1.0, 1.0, 0.0).is_ok());
        assert!(analytic_state(&AnalyticState::PlaneWave { k: 2.5 }, &g, 1.0, 1.0, 0.0).is_err());
    }
}
