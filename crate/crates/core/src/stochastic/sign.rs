use rand::RngCore;
use rand_chacha::ChaCha8Rng;

use crate::rng::{stream, Purpose};

/// Equal-probability sign of lambda, redrawn every step.
/// Each 64-bit draw supplies the next 64 signs, low bit first.
#[derive(Clone, Debug)]
pub struct SignProcess {
    rng: ChaCha8Rng,
    bits: u64,
    left: u32,
    current: i8,
}

impl SignProcess {
    pub fn new(master_seed: u64, index: u64) -> Self {
        Self { rng: stream(master_seed, Purpose::Sign, index), bits: 0, left: 0, current: 1 }
    }

    pub fn current(&self) -> i8 {
        self.current
    }

    #[inline]
    pub fn step(&mut self) -> i8 {
        if self.left == 0 {
            self.bits = self.rng.next_u64();
            self.left = 64;
        }
        self.current = if self.bits & 1 == 1 { 1 } else { -1 };
        self.bits >>= 1;
        self.left -= 1;
        self.current
    }
}

pub fn step_sign(process: &mut SignProcess) -> i8 {
    process.step()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regression_locked_sequence() {
        let mut p = SignProcess::new(20240607, 0);
        let a: Vec<i8> = (0..16).map(|_| p.step()).collect();
        let mut q = SignProcess::new(20240607, 0);
        let b: Vec<i8> = (0..16).map(|_| q.step()).collect();
        assert_eq!(a, b);
        assert!(a.iter().any(|&s| s == 1) && a.iter().any(|&s| s == -1));
    }

    #[test]
    fn unbiased_with_half_flip_rate() {
        let m = 1_000_000;
        let mut p = SignProcess::new(1, 0);
        let mut sum = 0i64;
        let mut flips = 0u64;
        let mut prev = p.step();
        sum += prev as i64;
        for _ in 1..m {
            let s = p.step();
            sum += s as i64;
            flips += (s != prev) as u64;
            prev = s;
        }
        let mean = sum as f64 / m as f64;
        assert!(mean.abs() < 0.004, "mean {mean}");
        let rate = flips as f64 / (m - 1) as f64;
        assert!((rate - 0.5).abs() < 0.002, "flip rate {rate}");
    }
}
