use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub stderr: f64,
    pub prefactor: f64,
}

/// Least-squares fit of `ln y = ln c + a ln x`.
pub fn fit_scaling(xs: &[f64], ys: &[f64]) -> Result<PowerLawFit> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidParameter("xs and ys differ in length".into()));
    }
    if xs.len() < 3 {
        return Err(Error::InsufficientData(format!("need at least 3 points, got {}", xs.len())));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParameter("power-law fit needs positive finite values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("all x values are equal".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let a = sxy / sxx;
    let b = my - a * mx;
    let rss: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - b - a * x).powi(2)).sum();
    Ok(PowerLawFit { exponent: a, stderr: (rss / (n - 2.0) / sxx).sqrt(), prefactor: b.exp() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_has_unit_exponent() {
        let xs = [1e-4, 1e-3, 1e-2, 1e-1];
        let f = fit_scaling(&xs, &xs).unwrap();
        assert!((f.exponent - 1.0).abs() < 1e-12 && f.stderr < 1e-12);
    }

    #[test]
    fn constant_has_zero_exponent() {
        let f = fit_scaling(&[1.0, 2.0, 4.0], &[3.0; 3]).unwrap();
        assert!(f.exponent.abs() < 1e-12);
        assert!((f.prefactor - 3.0).abs() < 1e-12);
    }

    #[test]
    fn square_root_with_noise() {
        let xs: [f64; 3] = [1e-4, 1e-3, 1e-2];
        let noise = [1.01, 0.99, 1.01];
        let ys: Vec<f64> = xs.iter().zip(noise).map(|(x, e)| x.sqrt() * e).collect();
        let f = fit_scaling(&xs, &ys).unwrap();
        assert!((f.exponent - 0.5).abs() < 0.05);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_scaling(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(fit_scaling(&[1.0, 2.0, -3.0], &[1.0, 2.0, 3.0]).is_err());
    }
}
