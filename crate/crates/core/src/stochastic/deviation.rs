use rand::Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};

/// One realized deviation `dS - dA` from infinitesimal stationary action.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeviationSample {
    pub value: f64,
    pub lambda_signed: f64,
}

impl DeviationSample {
    /// `(2/lambda)(dS - dA)`, never negative.
    pub fn production(&self) -> f64 {
        2.0 * self.value / self.lambda_signed
    }
}

fn law(lambda_signed: f64) -> Result<Exp<f64>> {
    if lambda_signed == 0.0 || !lambda_signed.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda must be finite and non-zero, got {lambda_signed}")));
    }
    Exp::new(2.0 / lambda_signed.abs()).map_err(|e| Error::InvalidParameter(e.to_string()))
}

/// `sign(lambda) * Exp(rate 2/|lambda|)`; the mean magnitude is `|lambda|/2`.
pub fn sample_deviation<R: Rng + ?Sized>(lambda_signed: f64, rng: &mut R) -> Result<DeviationSample> {
    let e = law(lambda_signed)?;
    Ok(DeviationSample { value: lambda_signed.signum() * e.sample(rng), lambda_signed })
}

pub const DEVIATION_CHUNK: usize = 1 << 16;

/// `n` deviation values drawn in fixed chunks of `DEVIATION_CHUNK`, chunk `c`
/// from stream `(purpose, c)`, so the output is independent of threading.
pub fn sample_deviations(lambda_signed: f64, n: usize, master_seed: u64, purpose: Purpose) -> Result<Vec<f64>> {
    let e = law(lambda_signed)?;
    let s = lambda_signed.signum();
    let mut out = vec![0.0; n];
    out.par_chunks_mut(DEVIATION_CHUNK).enumerate().for_each(|(c, chunk)| {
        let mut rng = stream(master_seed, purpose, c as u64);
        for x in chunk.iter_mut() {
            *x = s * e.sample(&mut rng);
        }
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Purpose;

    #[test]
    fn sign_follows_lambda_and_production_is_non_negative() {
        let mut rng = stream(5, Purpose::Deviation, 0);
        for lam in [2.0, -1.0, 0.3] {
            for _ in 0..1000 {
                let d = sample_deviation(lam, &mut rng).unwrap();
                assert!(d.value * lam >= 0.0);
                assert!(d.production() >= 0.0);
            }
        }
    }

    #[test]
    fn zero_lambda_is_rejected() {
        let mut rng = stream(5, Purpose::Deviation, 0);
        assert!(sample_deviation(0.0, &mut rng).is_err());
    }

    #[test]
    fn mean_magnitude_is_half_lambda() {
        for lam in [2.0, -1.0] {
            let v = sample_deviations(lam, 1_000_000, 11, Purpose::Deviation).unwrap();
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            assert!((mean - lam / 2.0).abs() < 0.01 * lam.abs() / 2.0, "lambda {lam}: mean {mean}");
        }
    }


    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn deviations_carry_the_sign_of_lambda(lam in prop_oneof![-10.0f64..-1e-3, 1e-3f64..10.0], seed in any::<u64>()) {
                let xs = sample_deviations(lam, 200, seed, Purpose::Synthetic).unwrap();
                prop_assert!(xs.iter().all(|x| x * lam >= 0.0 && x.is_finite()));
            }
        }
    }
}
