//! Local cubic (four-point Lagrange) interpolation of nodal fields.

use crate::grid::{Axis, Boundary, SpatialGrid};

#[derive(Clone, Copy, Debug)]
pub struct Stencil {
    pub idx: [usize; 4],
    pub w: [f64; 4],
}

impl Stencil {
    #[inline]
    pub fn new(axis: &Axis, boundary: Boundary, x: f64) -> Self {
        Self::at_index(axis.fractional_index(x), axis.len(), boundary)
    }

    /// Stencil at fractional node coordinate `s` on an axis of `n` nodes.
    #[inline]
    pub fn at_index(s: f64, n: usize, boundary: Boundary) -> Self {
        let ni = n as i64;
        match boundary {
            Boundary::Periodic => {
                let fl = floor(s);
                let base = fl as i64 - 1;
                let w = lagrange4(s - fl + 1.0);
                let idx = if base >= 0 && base + 3 < ni {
                    let b = base as usize;
                    [b, b + 1, b + 2, b + 3]
                } else {
                    [0, 1, 2, 3].map(|k| (base + k).rem_euclid(ni) as usize)
                };
                Stencil { idx, w }
            }
            Boundary::HardWall => {
                let s = s.clamp(0.0, (n - 1) as f64);
                let base = (s as i64 - 1).clamp(0, ni - 4) as usize;
                let w = lagrange4(s - base as f64);
                Stencil { idx: [base, base + 1, base + 2, base + 3], w }
            }
        }
    }
}

#[inline]
fn floor(s: f64) -> f64 {
    // truncation is a single instruction; only negative inputs need the libm path
    if s >= 0.0 && s < 9.0e15 {
        (s as i64) as f64
    } else {
        s.floor()
    }
}

/// Weights of the cubic through nodes 0, 1, 2, 3 evaluated at `u`.
#[inline]
fn lagrange4(u: f64) -> [f64; 4] {
    let (a, b, c, d) = (u, u - 1.0, u - 2.0, u - 3.0);
    const SIXTH: f64 = 1.0 / 6.0;
    let (ab, cd) = (a * b, c * d);
    [-b * cd * SIXTH, a * cd * 0.5, -ab * d * 0.5, ab * c * SIXTH]
}

/// Tensor-product stencil on a line or plane grid.
#[derive(Clone, Copy, Debug)]
pub struct Probe {
    s0: Stencil,
    s1: Option<Stencil>,
    n1: usize,
}

impl Probe {
    #[inline]
    pub fn new(grid: &SpatialGrid, q: &[f64]) -> Self {
        let b = grid.boundary();
        let s0 = Stencil::new(grid.axis(0), b, q[0]);
        if grid.dims() == 2 {
            Probe { s0, s1: Some(Stencil::new(grid.axis(1), b, q[1])), n1: grid.axis(1).len() }
        } else {
            Probe { s0, s1: None, n1: 1 }
        }
    }

    #[inline]
    pub fn eval(&self, f: &[f64]) -> f64 {
        match &self.s1 {
            None => (0..4).map(|k| self.s0.w[k] * f[self.s0.idx[k]]).sum(),
            Some(s1) => {
                let mut acc = 0.0;
                for a in 0..4 {
                    let row = self.s0.idx[a] * self.n1;
                    let mut r = 0.0;
                    for b in 0..4 {
                        r += s1.w[b] * f[row + s1.idx[b]];
                    }
                    acc += self.s0.w[a] * r;
                }
                acc
            }
        }
    }

    /// Whether any stencil node is set in `mask`.
    #[inline]
    pub fn touches(&self, mask: &[bool]) -> bool {
        match &self.s1 {
            None => self.s0.idx.iter().any(|&i| mask[i]),
            Some(s1) => self.s0.idx.iter().any(|&a| s1.idx.iter().any(|&b| mask[a * self.n1 + b])),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reproduces_cubics_exactly() {
        let g = SpatialGrid::line(Axis::new(-2.0, 4.0, 32).unwrap(), Boundary::HardWall);
        let f: Vec<f64> = g.axis(0).nodes().iter().map(|x| x.powi(3) - x + 2.0).collect();
        for x in [-1.9, -0.33, 0.0, 1.01, 1.87] {
            let v = Probe::new(&g, &[x]).eval(&f);
            assert!((v - (x * x * x - x + 2.0)).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn periodic_stencil_wraps() {
        let g = SpatialGrid::line(Axis::new(0.0, 2.0 * std::f64::consts::PI, 64).unwrap(), Boundary::Periodic);
        let f: Vec<f64> = g.axis(0).nodes().iter().map(|x| x.sin()).collect();
        let x = 0.01;
        assert!((Probe::new(&g, &[x]).eval(&f) - x.sin()).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn weights_sum_to_one(x in -3.0f64..3.0) {
            let a = Axis::new(-2.0, 4.0, 16).unwrap();
            for b in [Boundary::Periodic, Boundary::HardWall] {
                let s = Stencil::new(&a, b, x);
                prop_assert!((s.w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                prop_assert!(s.idx.iter().all(|&i| i < 16));
            }
        }
    }
}
