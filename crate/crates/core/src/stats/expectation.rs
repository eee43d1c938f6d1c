use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;

use crate::diff::Differentiator;
use crate::error::{Error, Result};
use crate::field::WaveFunction;
use crate::stats::moments::{mean, std_error};
use crate::system::ClassicalSystem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observable {
    Momentum,
    MomentumSquared,
    Energy,
}

impl Observable {
    pub const ALL: [Observable; 3] = [Observable::Momentum, Observable::MomentumSquared, Observable::Energy];

    pub fn name(&self) -> &'static str {
        match self {
            Observable::Momentum => "p",
            Observable::MomentumSquared => "p2",
            Observable::Energy => "H",
        }
    }
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "p" | "momentum" => Ok(Observable::Momentum),
            "p2" | "p^2" | "momentum-squared" => Ok(Observable::MomentumSquared),
            "H" | "h" | "energy" => Ok(Observable::Energy),
            other => Err(Error::Unsupported(format!("observable `{other}` (supported: p, p2, H)"))),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpectationComparison {
    pub observable: Observable,
    pub model: f64,
    pub operator: f64,
    pub std_error: f64,
    pub z: f64,
}

/// z-score of `model - reference` under standard error `se`; exact agreement
/// at zero error counts as zero.
pub fn z_score(model: f64, reference: f64, se: f64) -> f64 {
    let diff = model - reference;
    if se > 0.0 {
        diff / se
    } else if diff.abs() <= 1e-12 * reference.abs().max(1.0) {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

/// Grid quadrature of `<psi|O|psi>` for the momentum along `axis`, its square,
/// or the full Hamiltonian.
pub fn operator_average(psi: &WaveFunction, system: &ClassicalSystem, observable: Observable, axis: usize, hbar: f64) -> Result<f64> {
    let grid = psi.grid();
    system.check_grid(grid)?;
    let diff = Differentiator::new(grid)?;
    let dv = grid.cell_volume();
    let v = psi.values();
    let norm = psi.norm();
    let quad = |o: &[Complex64]| -> f64 { v.iter().zip(o).map(|(a, b)| (a.conj() * b).re).sum::<f64>() * dv / norm };
    let p2 = |d: usize| hbar * hbar * -quad(&diff.derivative_complex(v, d, 2));
    Ok(match observable {
        Observable::Momentum => {
            let d1 = diff.derivative_complex(v, axis, 1);
            let im: f64 = v.iter().zip(&d1).map(|(a, b)| (a.conj() * b).im).sum::<f64>() * dv / norm;
            hbar * im
        }
        Observable::MomentumSquared => p2(axis),
        Observable::Energy => {
            let pot = system.potential_on(grid)?;
            let kinetic: f64 = (0..grid.dims()).map(|d| p2(d) / (2.0 * system.masses()[d])).sum();
            let potential: f64 = v.iter().zip(&pot).map(|(a, u)| a.norm_sqr() * u).sum::<f64>() * dv / norm;
            kinetic + potential
        }
    })
}

/// Model average from (position, momentum) samples against the operator average.
pub fn expectation_compare(
    positions: &[[f64; 2]],
    momenta: &[[f64; 2]],
    psi: &WaveFunction,
    system: &ClassicalSystem,
    observable: Observable,
    axis: usize,
    hbar: f64,
) -> Result<ExpectationComparison> {
    if positions.len() != momenta.len() || momenta.len() < 2 {
        return Err(Error::InsufficientData("need at least two paired samples".into()));
    }
    let dims = psi.grid().dims();
    let values: Vec<f64> = match observable {
        Observable::Momentum => momenta.iter().map(|p| p[axis]).collect(),
        Observable::MomentumSquared => momenta.iter().map(|p| p[axis] * p[axis]).collect(),
        Observable::Energy => positions
            .iter()
            .zip(momenta)
            .map(|(q, p)| system.hamiltonian(&q[..dims], &p[..dims]))
            .collect(),
    };
    let model = mean(&values);
    let se = std_error(&values);
    let operator = operator_average(psi, system, observable, axis, hbar)?;
    Ok(ExpectationComparison { observable, model, operator, std_error: se, z: z_score(model, operator, se) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_supported_observables() {
        assert_eq!("p".parse::<Observable>().unwrap(), Observable::Momentum);
        assert_eq!("H".parse::<Observable>().unwrap(), Observable::Energy);
        assert!(matches!("p3".parse::<Observable>(), Err(Error::Unsupported(_))));
    }

    #[test]
    fn zero_error_z_scores() {
        assert_eq!(z_score(2.0, 2.0, 0.0), 0.0);
        assert!(z_score(2.1, 2.0, 0.0).is_infinite());
        assert_eq!(z_score(2.1, 2.0, 0.05), 2.0000000000000018);
    }
}
