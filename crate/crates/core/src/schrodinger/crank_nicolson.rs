//! Crank-Nicolson propagator on line grids with a banded central-difference
//! Laplacian. Hard walls treat the wave function as zero outside the grid;
//! periodic grids fold the wrapped stencil entries in with a Woodbury update.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Boundary, SpatialGrid};
use crate::system::ClassicalSystem;

/// Central second-derivative stencil `c_0, c_1, ..., c_p` (symmetric).
pub fn second_derivative_stencil(order: usize) -> Result<Vec<f64>> {
    Ok(match order {
        2 => vec![-2.0, 1.0],
        4 => vec![-5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0],
        6 => vec![-49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0],
        8 => vec![-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0],
        _ => return Err(Error::InvalidParameter(format!("finite-difference order {order} not in {{2,4,6,8}}"))),
    })
}

/// Banded matrix with half-bandwidth `p`, LU-factorized in place without pivoting.
#[derive(Clone, Debug)]
struct BandLu {
    n: usize,
    p: usize,
    band: Vec<Complex64>,
}

impl BandLu {
    fn at(&self, i: usize, j: usize) -> Complex64 {
        self.band[i * (2 * self.p + 1) + (j + self.p - i)]
    }

    fn at_mut(&mut self, i: usize, j: usize) -> &mut Complex64 {
        &mut self.band[i * (2 * self.p + 1) + (j + self.p - i)]
    }

    fn factorize(n: usize, p: usize, band: Vec<Complex64>) -> Result<Self> {
        let mut m = Self { n, p, band };
        for k in 0..n {
            let pivot = m.at(k, k);
            if pivot.norm() < 1e-300 {
                return Err(Error::Unstable("zero pivot in banded factorization".into()));
            }
            for i in k + 1..(k + p + 1).min(n) {
                let l = m.at(i, k) / pivot;
                *m.at_mut(i, k) = l;
                for j in k + 1..(k + p + 1).min(n) {
                    let u = m.at(k, j);
                    *m.at_mut(i, j) -= l * u;
                }
            }
        }
        Ok(m)
    }

    fn solve_in_place(&self, x: &mut [Complex64]) {
        let (n, p) = (self.n, self.p);
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(p)..i {
                s -= self.at(i, k) * x[k];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..(i + p + 1).min(n) {
                s -= self.at(i, j) * x[j];
            }
            x[i] = s / self.at(i, i);
        }
    }
}

/// Dense solve with partial pivoting for the small Woodbury capacitance matrix.
fn dense_inverse(mut a: Vec<Vec<Complex64>>) -> Result<Vec<Vec<Complex64>>> {
    let m = a.len();
    let mut inv: Vec<Vec<Complex64>> =
        (0..m).map(|i| (0..m).map(|j| Complex64::new((i == j) as u8 as f64, 0.0)).collect()).collect();
    for col in 0..m {
        let piv = (col..m).max_by(|&x, &y| a[x][col].norm().total_cmp(&a[y][col].norm())).unwrap();
        if a[piv][col].norm() < 1e-300 {
            return Err(Error::Unstable("singular capacitance matrix".into()));
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let d = a[col][col];
        for j in 0..m {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for r in 0..m {
            if r != col {
                let f = a[r][col];
                for j in 0..m {
                    let (ac, ic) = (a[col][j], inv[col][j]);
                    a[r][j] -= f * ac;
                    inv[r][j] -= f * ic;
                }
            }
        }
    }
    Ok(inv)
}

struct Woodbury {
    rows: Vec<usize>,
    /// Wrapped entries per boundary row: (column, value).
    corners: Vec<Vec<(usize, Complex64)>>,
    z: Vec<Vec<Complex64>>,
    capacitance_inv: Vec<Vec<Complex64>>,
}

pub struct CrankNicolson {
    n: usize,
    p: usize,
    periodic: bool,
    /// Hamiltonian stencil: kinetic offsets 0..=p and the potential diagonal.
    kin: Vec<f64>,
    potential: Vec<f64>,
    alpha: Complex64,
    lu: BandLu,
    woodbury: Option<Woodbury>,
    rhs: Vec<Complex64>,
    dt: f64,
}

impl CrankNicolson {
    pub fn new(grid: &SpatialGrid, system: &ClassicalSystem, hbar: f64, dt: f64, order: usize) -> Result<Self> {
        if grid.dims() != 1 {
            return Err(Error::Unsupported("Crank-Nicolson is implemented for line grids only".into()));
        }
        let stencil = second_derivative_stencil(order)?;
        let p = stencil.len() - 1;
        let n = grid.len();
        if n <= 2 * p + 1 {
            return Err(Error::Grid("grid too small for the stencil".into()));
        }
        let h = grid.axis(0).spacing();
        let mass = system.masses()[0];
        let kin: Vec<f64> = stencil.iter().map(|c| -hbar * hbar / (2.0 * mass * h * h) * c).collect();
        let potential = system.potential_on(grid)?;
        let periodic = grid.boundary() == Boundary::Periodic;
        let alpha = Complex64::new(0.0, 0.5 * dt / hbar);

        let w = 2 * p + 1;
        let mut band = vec![Complex64::new(0.0, 0.0); n * w];
        for i in 0..n {
            for o in -(p as isize)..=(p as isize) {
                let j = i as isize + o;
                if j < 0 || j >= n as isize {
                    continue;
                }
                let mut hij = kin[o.unsigned_abs()];
                if o == 0 {
                    hij += potential[i];
                }
                let mut v = alpha * hij;
                if o == 0 {
                    v += 1.0;
                }
                band[i * w + (o + p as isize) as usize] = v;
            }
        }
        let lu = BandLu::factorize(n, p, band)?;

        let woodbury = if periodic {
            let rows: Vec<usize> = (0..p).chain(n - p..n).collect();
            let corners: Vec<Vec<(usize, Complex64)>> = rows
                .iter()
                .map(|&i| {
                    (-(p as isize)..=(p as isize))
                        .filter_map(|o| {
                            let j = i as isize + o;
                            if j < 0 || j >= n as isize {
                                Some((j.rem_euclid(n as isize) as usize, alpha * kin[o.unsigned_abs()]))
                            } else {
                                None
                            }
                        })
                        .collect()
                })
                .collect();
            let z: Vec<Vec<Complex64>> = rows
                .iter()
                .map(|&r| {
                    let mut e = vec![Complex64::new(0.0, 0.0); n];
                    e[r] = Complex64::new(1.0, 0.0);
                    lu.solve_in_place(&mut e);
                    e
                })
                .collect();
            let m = rows.len();
            let mut cap = vec![vec![Complex64::new(0.0, 0.0); m]; m];
            for a in 0..m {
                for b in 0..m {
                    let dot: Complex64 = corners[a].iter().map(|&(c, v)| v * z[b][c]).sum();
                    cap[a][b] = dot + if a == b { 1.0 } else { 0.0 };
                }
            }
            Some(Woodbury { rows, corners, z, capacitance_inv: dense_inverse(cap)? })
        } else {
            None
        };

        Ok(Self { n, p, periodic, kin, potential, alpha, lu, woodbury, rhs: vec![Complex64::new(0.0, 0.0); n], dt })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn apply_hamiltonian(&self, psi: &[Complex64], out: &mut [Complex64]) {
        let (n, p) = (self.n as isize, self.p as isize);
        for i in 0..self.n {
            let mut s = psi[i] * (self.kin[0] + self.potential[i]);
            for o in 1..=p {
                for j in [i as isize - o, i as isize + o] {
                    let v = if j >= 0 && j < n {
                        psi[j as usize]
                    } else if self.periodic {
                        psi[j.rem_euclid(n) as usize]
                    } else {
                        continue;
                    };
                    s += v * self.kin[o as usize];
                }
            }
            out[i] = s;
        }
    }

    pub fn step(&mut self, psi: &mut [Complex64]) {
        let mut rhs = std::mem::take(&mut self.rhs);
        self.apply_hamiltonian(psi, &mut rhs);
        for (r, v) in rhs.iter_mut().zip(psi.iter()) {
            *r = *v - self.alpha * *r;
        }
        self.lu.solve_in_place(&mut rhs);
        if let Some(w) = &self.woodbury {
            let t: Vec<Complex64> =
                w.corners.iter().map(|row| row.iter().map(|&(c, v)| v * rhs[c]).sum()).collect();
            let m = w.rows.len();
            for a in 0..m {
                let s: Complex64 = (0..m).map(|b| w.capacitance_inv[a][b] * t[b]).sum();
                for (x, zc) in rhs.iter_mut().zip(&w.z[a]) {
                    *x -= zc * s;
                }
            }
        }
        psi.copy_from_slice(&rhs);
        self.rhs = rhs;
    }

    /// `<H>` with the finite-difference Hamiltonian.
    pub fn energy(&self, psi: &[Complex64]) -> f64 {
        let mut h = vec![Complex64::new(0.0, 0.0); self.n];
        self.apply_hamiltonian(psi, &mut h);
        let num: Complex64 = psi.iter().zip(&h).map(|(a, b)| a.conj() * b).sum();
        let den: f64 = psi.iter().map(Complex64::norm_sqr).sum();
        num.re / den
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencils_annihilate_constants_and_reproduce_quadratics() {
        for order in [2, 4, 6, 8] {
            let c = second_derivative_stencil(order).unwrap();
            let sum: f64 = c[0] + 2.0 * c[1..].iter().sum::<f64>();
            assert!(sum.abs() < 1e-13);
            // second derivative of x^2 at 0 is 2
            let d2: f64 = 2.0 * c.iter().enumerate().skip(1).map(|(o, v)| v * (o * o) as f64).sum::<f64>();
            assert!((d2 - 2.0).abs() < 1e-12, "order {order}");
        }
        assert!(second_derivative_stencil(3).is_err());
    }

    #[test]
    fn banded_solve_matches_multiplication() {
        let n = 12;
        let p = 2;
        let w = 2 * p + 1;
        let mut band = vec![Complex64::new(0.0, 0.0); n * w];
        for i in 0..n {
            for o in 0..w {
                let j = i as isize + o as isize - p as isize;
                if j >= 0 && j < n as isize {
                    band[i * w + o] = if o == p {
                        Complex64::new(1.0, 0.3 * i as f64)
                    } else {
                        Complex64::new(0.0, 0.1 * (o as f64 + 1.0))
                    };
                }
            }
        }
        let orig = band.clone();
        let lu = BandLu::factorize(n, p, band).unwrap();
        let x: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, -(i as f64) * 0.5)).collect();
        let mut b = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            for o in 0..w {
                let j = i as isize + o as isize - p as isize;
                if j >= 0 && j < n as isize {
                    b[i] += orig[i * w + o] * x[j as usize];
                }
            }
        }
        lu.solve_in_place(&mut b);
        for (a, e) in b.iter().zip(&x) {
            assert!((a - e).norm() < 1e-10);
        }
    }
}
