use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Required separation between adjacent time scales.
pub const HIERARCHY_FACTOR: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    #[serde(default = "one")]
    pub lambda_mag: f64,
    pub dt: f64,
    pub tau_xi: f64,
    pub tau_lambda: f64,
    /// Optional piecewise-constant |lambda| per window of length `tau_lambda`.
    /// The last value holds after the list runs out.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lambda_windows: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

impl ModelParams {
    /// Smallest valid hierarchy for a given step: `tau_xi = 10 dt`, `tau_lambda = 100 dt`.
    pub fn with_step(lambda_mag: f64, dt: f64) -> Self {
        Self {
            lambda_mag,
            dt,
            tau_xi: HIERARCHY_FACTOR * dt,
            tau_lambda: HIERARCHY_FACTOR * HIERARCHY_FACTOR * dt,
            lambda_windows: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |x: f64| x.is_finite() && x > 0.0;
        if !pos(self.lambda_mag) {
            return Err(Error::InvalidParameter(format!("lambda_mag must be positive, got {}", self.lambda_mag)));
        }
        if !pos(self.dt) || !pos(self.tau_xi) || !pos(self.tau_lambda) {
            return Err(Error::InvalidParameter("dt, tau_xi and tau_lambda must be positive".into()));
        }
        let slack = 1.0 - 1e-12;
        if self.tau_xi < HIERARCHY_FACTOR * self.dt * slack {
            return Err(Error::Hierarchy(format!(
                "tau_xi = {} must be at least {} x dt = {}",
                self.tau_xi,
                HIERARCHY_FACTOR,
                HIERARCHY_FACTOR * self.dt
            )));
        }
        if self.tau_lambda < HIERARCHY_FACTOR * self.tau_xi * slack {
            return Err(Error::Hierarchy(format!(
                "tau_lambda = {} must be at least {} x tau_xi = {}",
                self.tau_lambda,
                HIERARCHY_FACTOR,
                HIERARCHY_FACTOR * self.tau_xi
            )));
        }
        if let Some(bad) = self.lambda_windows.iter().find(|x| !pos(**x)) {
            return Err(Error::InvalidParameter(format!("lambda window value {bad} is not positive")));
        }
        Ok(())
    }

    pub fn lambda_mag_at(&self, t: f64) -> f64 {
        if self.lambda_windows.is_empty() {
            return self.lambda_mag;
        }
        let w = ((t / self.tau_lambda).floor().max(0.0) as usize).min(self.lambda_windows.len() - 1);
        self.lambda_windows[w]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut p = self.clone();
        p.lambda_mag *= factor;
        p.lambda_windows.iter_mut().for_each(|x| *x *= factor);
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hierarchy_is_enforced() {
        assert!(ModelParams::with_step(1.0, 1e-3).validate().is_ok());
        let mut p = ModelParams::with_step(1.0, 1e-3);
        p.tau_xi = 5e-4;
        assert!(matches!(p.validate(), Err(Error::Hierarchy(_))));
        let mut p = ModelParams::with_step(1.0, 1e-3);
        p.tau_lambda = 0.05;
        assert!(matches!(p.validate(), Err(Error::Hierarchy(_))));
    }

    #[test]
    fn windows_are_piecewise_constant() {
        let mut p = ModelParams::with_step(1.0, 1e-3);
        p.lambda_windows = vec![1.0, 0.5];
        assert_eq!(p.lambda_mag_at(0.05), 1.0);
        assert_eq!(p.lambda_mag_at(0.15), 0.5);
        assert_eq!(p.lambda_mag_at(9.0), 0.5);
    }
}
