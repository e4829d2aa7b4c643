//! Reference implementations that share no code with the library.
#![allow(dead_code, clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Spin value of bit `i`: bit set means +1.
pub fn spin(x: usize, i: usize) -> f64 {
    if x >> i & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// `sum_{i<j} J_ij s_i s_j + sum_i B_i s_i`, with `j` an `n x n` matrix of rows.
pub fn energy(j: &[Vec<f64>], b: &[f64], x: usize) -> f64 {
    let n = b.len();
    let mut e = 0.0;
    for p in 0..n {
        e += b[p] * spin(x, p);
        for q in p + 1..n {
            e += j[p][q] * spin(x, p) * spin(x, q);
        }
    }
    e
}

/// Dense Hamiltonian with tunneling `c` on every single-flip pair.
pub fn hamiltonian(j: &[Vec<f64>], b: &[f64], c: &[f64]) -> Vec<Vec<f64>> {
    let n = b.len();
    let dim = 1 << n;
    let mut h = vec![vec![0.0; dim]; dim];
    for x in 0..dim {
        h[x][x] = energy(j, b, x);
        for (p, cp) in c.iter().enumerate() {
            h[x][x ^ (1 << p)] += cp;
        }
    }
    h
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let m = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..m)
            .flat_map(|p| (0..m).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| a[p][q] * a[p][q])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..m {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..m {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..m).map(|k| a[k][k]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Global minimum and strict local minima (every neighbour strictly higher).
pub fn exhaustive_landscape(j: &[Vec<f64>], b: &[f64]) -> (usize, Vec<usize>) {
    let n = b.len();
    let e: Vec<f64> = (0..1usize << n).map(|x| energy(j, b, x)).collect();
    let global = (0..e.len()).fold(0, |best, x| if e[x] < e[best] { x } else { best });
    let local = (0..e.len())
        .filter(|&x| x != global && (0..n).all(|p| e[x ^ (1 << p)] > e[x]))
        .collect();
    (global, local)
}

pub struct Instance {
    pub j: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl Instance {
    pub fn random(n: usize, tunneling: f64, rng: &mut ChaCha8Rng) -> Self {
        let mut j = vec![vec![0.0; n]; n];
        for p in 0..n {
            for q in p + 1..n {
                let v = rng.random_range(-1.0..1.0);
                j[p][q] = v;
                j[q][p] = v;
            }
        }
        let b = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let c = (0..n).map(|_| tunneling * rng.random_range(0.0..1.0)).collect();
        Instance { j, b, c }
    }

    pub fn params(&self) -> lemtrap::ClusterParams {
        let n = self.b.len();
        let flat = self.j.iter().flatten().copied().collect();
        lemtrap::ClusterParams::new(n, flat, self.b.clone(), self.c.clone()).unwrap()
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
