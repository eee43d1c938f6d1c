//! Classical systems: masses plus a potential over configuration space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SpatialGrid;

/// Potential acting on a single configuration axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AxisPotential {
    Free,
    /// `m omega^2 (q - center)^2 / 2`
    Harmonic {
        omega: f64,
        #[serde(default)]
        center: f64,
    },
    /// `a q^4`
    Quartic { a: f64 },
    /// Zero inside the grid; the walls come from a hard-wall boundary.
    Box,
}

impl AxisPotential {
    pub fn validate(&self) -> Result<()> {
        match *self {
            AxisPotential::Harmonic { omega, center } if !(omega > 0.0 && omega.is_finite() && center.is_finite()) => {
                Err(Error::InvalidParameter(format!("harmonic potential needs omega > 0, got {omega}")))
            }
            AxisPotential::Quartic { a } if !(a > 0.0 && a.is_finite()) => {
                Err(Error::InvalidParameter(format!("quartic potential needs a > 0, got {a}")))
            }
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn value(&self, q: f64, mass: f64) -> f64 {
        match *self {
            AxisPotential::Free | AxisPotential::Box => 0.0,
            AxisPotential::Harmonic { omega, center } => 0.5 * mass * omega * omega * (q - center).powi(2),
            AxisPotential::Quartic { a } => a * q.powi(4),
        }
    }

    /// `dV/dq`
    #[inline]
    pub fn slope(&self, q: f64, mass: f64) -> f64 {
        match *self {
            AxisPotential::Free | AxisPotential::Box => 0.0,
            AxisPotential::Harmonic { omega, center } => mass * omega * omega * (q - center),
            AxisPotential::Quartic { a } => 4.0 * a * q.powi(3),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalSystem {
    masses: Vec<f64>,
    axes: Vec<AxisPotential>,
    /// Bilinear interaction `coupling * q0 * q1` (two axes only).
    coupling: f64,
}

impl ClassicalSystem {
    pub fn new(masses: Vec<f64>, axes: Vec<AxisPotential>) -> Result<Self> {
        Self::with_coupling(masses, axes, 0.0)
    }

    pub fn with_coupling(masses: Vec<f64>, axes: Vec<AxisPotential>, coupling: f64) -> Result<Self> {
        if masses.is_empty() || masses.len() > 2 || masses.len() != axes.len() {
            return Err(Error::InvalidParameter(format!(
                "need one mass and one potential per axis (1 or 2), got {} and {}",
                masses.len(),
                axes.len()
            )));
        }
        if masses.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
            return Err(Error::InvalidParameter("masses must be positive and finite".into()));
        }
        if !coupling.is_finite() || (coupling != 0.0 && masses.len() != 2) {
            return Err(Error::InvalidParameter("coupling needs two axes and a finite value".into()));
        }
        for a in &axes {
            a.validate()?;
        }
        Ok(Self { masses, axes, coupling })
    }

    pub fn one_dimensional(mass: f64, potential: AxisPotential) -> Result<Self> {
        Self::new(vec![mass], vec![potential])
    }

    /// Non-interacting pair `V(q1, q2) = V1(q1) + V2(q2)`.
    pub fn pair(first: &ClassicalSystem, second: &ClassicalSystem) -> Result<Self> {
        if first.dims() != 1 || second.dims() != 1 {
            return Err(Error::InvalidParameter("pairs are built from one-dimensional systems".into()));
        }
        Self::new(
            vec![first.masses[0], second.masses[0]],
            vec![first.axes[0].clone(), second.axes[0].clone()],
        )
    }

    pub fn dims(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn axis_potentials(&self) -> &[AxisPotential] {
        &self.axes
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn is_separable(&self) -> bool {
        self.coupling == 0.0
    }

    /// Single-axis subsystem `d` (only meaningful when separable).
    pub fn factor(&self, d: usize) -> Result<ClassicalSystem> {
        if !self.is_separable() {
            return Err(Error::Interacting(format!("coupling {} links the axes", self.coupling)));
        }
        Self::one_dimensional(self.masses[d], self.axes[d].clone())
    }

    #[inline]
    pub fn potential(&self, q: &[f64]) -> f64 {
        let mut v = 0.0;
        for d in 0..self.dims() {
            v += self.axes[d].value(q[d], self.masses[d]);
        }
        if self.coupling != 0.0 {
            v += self.coupling * q[0] * q[1];
        }
        v
    }

    /// `-grad V`
    pub fn force(&self, q: &[f64], out: &mut [f64]) {
        for d in 0..self.dims() {
            out[d] = -self.axes[d].slope(q[d], self.masses[d]);
        }
        if self.coupling != 0.0 {
            out[0] -= self.coupling * q[1];
            out[1] -= self.coupling * q[0];
        }
    }

    pub fn hamiltonian(&self, q: &[f64], p: &[f64]) -> f64 {
        let kinetic: f64 = (0..self.dims()).map(|d| p[d] * p[d] / (2.0 * self.masses[d])).sum();
        kinetic + self.potential(q)
    }

    pub fn check_grid(&self, grid: &SpatialGrid) -> Result<()> {
        if grid.dims() != self.dims() {
            return Err(Error::GridMismatch(format!(
                "system has {} axes, grid has {}",
                self.dims(),
                grid.dims()
            )));
        }
        Ok(())
    }

    /// Potential sampled at the grid nodes.
    pub fn potential_on(&self, grid: &SpatialGrid) -> Result<Vec<f64>> {
        self.check_grid(grid)?;
        let v: Vec<f64> = (0..grid.len()).map(|i| self.potential(&grid.position(i))).collect();
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("potential is not finite on the grid".into()));
        }
        Ok(v)
    }
}
