use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::PolarFields;
use crate::stats::moments::{mean, std_dev, std_dev_rel_error};

#[derive(Clone, Debug, Serialize)]
pub struct UncertaintyReport {
    pub n: usize,
    pub sigma_q: f64,
    pub sigma_p: f64,
    pub product: f64,
    /// Relative standard error of the product.
    pub stat_err: f64,
}

/// `sigma_q sigma_p` of paired samples with its propagated relative error.
pub fn uncertainty_product(q: &[f64], p: &[f64]) -> Result<UncertaintyReport> {
    if q.len() != p.len() {
        return Err(Error::InvalidParameter("q and p sample sets differ in length".into()));
    }
    if q.len() < 2 {
        return Err(Error::InsufficientData("need at least two samples".into()));
    }
    let (sq, sp) = (std_dev(q), std_dev(p));
    let scale = |x: &[f64]| x.iter().map(|v| v.abs()).fold(0.0, f64::max).max(mean(x).abs()).max(1e-300);
    if !(sq > 1e-12 * scale(q)) || !(sp > 1e-12 * scale(p)) {
        return Err(Error::Degenerate(format!("zero-variance sample (sigma_q = {sq:e}, sigma_p = {sp:e})")));
    }
    Ok(UncertaintyReport {
        n: q.len(),
        sigma_q: sq,
        sigma_p: sp,
        product: sq * sp,
        stat_err: std_dev_rel_error(q) + std_dev_rel_error(p),
    })
}

/// Grid quadrature of the Cramér-Rao chain `sigma_q sigma_p >= sigma_q (hbar/2) sqrt(F) >= hbar/2`
/// along one axis, with `F = int Omega (d ln Omega)^2`.
#[derive(Clone, Debug, Serialize)]
pub struct FisherBound {
    pub fisher_information: f64,
    pub sigma_q: f64,
    /// Momentum spread of the sign-randomized field momentum.
    pub sigma_p: f64,
    pub product: f64,
    /// `sigma_q (hbar/2) sqrt(F)`, never below `hbar/2`.
    pub osmotic_bound: f64,
}

pub fn fisher_bound(fields: &PolarFields, axis: usize, lambda_mag: f64) -> Result<FisherBound> {
    let grid = fields.grid();
    if axis >= grid.dims() {
        return Err(Error::InvalidParameter(format!("axis {axis} out of range")));
    }
    let w = fields.omega();
    let dv = grid.cell_volume();
    let norm: f64 = w.iter().sum::<f64>() * dv;
    let x = |i: usize| grid.position(i)[axis];
    let (mut mq, mut mq2, mut f, mut mp, mut mp2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let gl = &fields.grad_ln_omega()[axis];
    let gs = &fields.grad_s()[axis];
    let half = 0.5 * lambda_mag;
    for i in 0..w.len() {
        let c = w[i] * dv / norm;
        mq += c * x(i);
        mq2 += c * x(i) * x(i);
        f += c * gl[i] * gl[i];
        mp += c * gs[i];
        mp2 += c * (gs[i] * gs[i] + half * half * gl[i] * gl[i]);
    }
    let sigma_q = (mq2 - mq * mq).max(0.0).sqrt();
    let sigma_p = (mp2 - mp * mp).max(0.0).sqrt();
    Ok(FisherBound {
        fisher_information: f,
        sigma_q,
        sigma_p,
        product: sigma_q * sigma_p,
        osmotic_bound: sigma_q * half * f.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_input_is_flagged() {
        let q = [1.0, 2.0, 3.0];
        assert!(matches!(uncertainty_product(&q, &[2.0; 3]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn product_of_scaled_samples() {
        let q = [-1.0, 0.0, 1.0, 0.0];
        let p = [0.0, 2.0, 0.0, -2.0];
        let r = uncertainty_product(&q, &p).unwrap();
        assert!((r.product - (2.0f64 / 3.0).sqrt() * (8.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }
}
