//! Pseudo-spin cluster parameters, the number-state basis and the Ising
//! Hamiltonian with transverse tunneling
//!
//! ```text
//! H = sum_{i<j} J_ij s^z_i s^z_j + sum_i B_i s^z_i + sum_i C_i s^x_i
//! ```
//!
//! Pairs are summed once. Coefficients written for a double sum over
//! `i != j` (each pair counted twice) translate as `J_ij = 2 A_ij`.
//!
//! Basis index `X` is the configuration read as an unsigned integer with
//! bit `i` holding spin `i`; bit value 1 is the `s^z = +1` state. Index 0
//! is the all-down state.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Largest cluster the dense representation accepts (2^14 basis states).
pub const MAX_SPINS: usize = 14;

/// A number state `|x_1 x_2 ... x_n>`.
///
/// Displayed and parsed with spin 0 first, so `"100"` has only bit 0 set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinConfig {
    bits: u32,
    width: u8,
}

impl SpinConfig {
    pub fn new(bits: u32, width: usize) -> Result<Self> {
        if width == 0 || width > 32 {
            return Err(Error::dimension(
                "cluster::SpinConfig",
                format!("width {width} not in 1..=32"),
            ));
        }
        if width < 32 && bits >> width != 0 {
            return Err(Error::dimension(
                "cluster::SpinConfig",
                format!("bits {bits:#b} exceed width {width}"),
            ));
        }
        Ok(SpinConfig {
            bits,
            width: width as u8,
        })
    }

    /// Configuration for basis index `index` of an `n`-spin cluster.
    pub fn from_index(index: usize, n: usize) -> Self {
        debug_assert!((1..=32).contains(&n) && (n == 32 || index >> n == 0));
        SpinConfig {
            bits: index as u32,
            width: n as u8,
        }
    }

    pub fn all_down(n: usize) -> Self {
        SpinConfig::from_index(0, n)
    }

    pub fn all_up(n: usize) -> Self {
        SpinConfig::from_index(full_mask(n) as usize, n)
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    pub fn index(self) -> usize {
        self.bits as usize
    }

    pub fn width(self) -> usize {
        self.width as usize
    }

    pub fn bit(self, i: usize) -> bool {
        self.bits >> i & 1 == 1
    }

    /// `s^z` eigenvalue of spin `i`: +1 when the bit is set.
    pub fn spin(self, i: usize) -> f64 {
        if self.bit(i) {
            1.0
        } else {
            -1.0
        }
    }

    pub fn flipped(self, i: usize) -> Self {
        SpinConfig {
            bits: self.bits ^ (1 << i),
            width: self.width,
        }
    }

    pub fn complement(self) -> Self {
        SpinConfig {
            bits: !self.bits & full_mask(self.width()),
            width: self.width,
        }
    }
}

impl fmt::Display for SpinConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.width() {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for SpinConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut bits = 0u32;
        for (i, ch) in s.chars().enumerate() {
            match ch {
                '0' => {}
                '1' if i < 32 => bits |= 1 << i,
                _ => {
                    return Err(Error::validation(
                        "cluster::SpinConfig",
                        format!("`{s}` is not a bit string of at most 32 characters"),
                    ))
                }
            }
        }
        SpinConfig::new(bits, s.chars().count())
    }
}

pub(crate) fn full_mask(n: usize) -> u32 {
    if n >= 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

/// Couplings `J_ij`, biases `B_i` and tunnelings `C_i` of one cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterParams {
    n: usize,
    coupling: Vec<f64>,
    bias: Vec<f64>,
    tunneling: Vec<f64>,
}

impl ClusterParams {
    /// `coupling` is the full row-major `n x n` matrix; it must be symmetric
    /// with a zero diagonal.
    pub fn new(n: usize, coupling: Vec<f64>, bias: Vec<f64>, tunneling: Vec<f64>) -> Result<Self> {
        const OP: &str = "cluster::ClusterParams";
        if n == 0 || n > 32 {
            return Err(Error::validation(OP, format!("n = {n} must be in 1..=32")));
        }
        if coupling.len() != n * n {
            return Err(Error::dimension(
                OP,
                format!("coupling has {} entries, expected {}", coupling.len(), n * n),
            ));
        }
        if bias.len() != n {
            return Err(Error::dimension(
                OP,
                format!("bias has length {}, expected {n}", bias.len()),
            ));
        }
        if tunneling.len() != n {
            return Err(Error::dimension(
                OP,
                format!("tunneling has length {}, expected {n}", tunneling.len()),
            ));
        }
        if let Some(bad) = coupling.iter().chain(&bias).chain(&tunneling).find(|v| !v.is_finite()) {
            return Err(Error::validation(OP, format!("non-finite parameter {bad}")));
        }
        for i in 0..n {
            if coupling[i * n + i] != 0.0 {
                return Err(Error::validation(
                    OP,
                    format!("coupling diagonal J[{i}][{i}] must be zero"),
                ));
            }
            for j in i + 1..n {
                if coupling[i * n + j] != coupling[j * n + i] {
                    return Err(Error::validation(OP, format!("coupling not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(ClusterParams {
            n,
            coupling,
            bias,
            tunneling,
        })
    }

    /// Builds the symmetric coupling matrix from its strict upper triangle,
    /// given row-major: `J01 J02 .. J0(n-1) J12 ..`.
    pub fn from_upper_triangle(n: usize, upper: &[f64], bias: Vec<f64>, tunneling: Vec<f64>) -> Result<Self> {
        let expected = n * n.saturating_sub(1) / 2;
        if upper.len() != expected {
            return Err(Error::dimension(
                "cluster::ClusterParams",
                format!("upper triangle has {} entries, expected {expected}", upper.len()),
            ));
        }
        let mut coupling = vec![0.0; n * n];
        let mut it = upper.iter();
        for i in 0..n {
            for j in i + 1..n {
                let v = *it.next().unwrap();
                coupling[i * n + j] = v;
                coupling[j * n + i] = v;
            }
        }
        ClusterParams::new(n, coupling, bias, tunneling)
    }

    /// Fully connected cluster with the same coupling, bias and tunneling on
    /// every spin.
    pub fn uniform(n: usize, coupling: f64, bias: f64, tunneling: f64) -> Result<Self> {
        let mut j = vec![coupling; n * n];
        for i in 0..n {
            j[i * n + i] = 0.0;
        }
        ClusterParams::new(n, j, vec![bias; n], vec![tunneling; n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1usize << self.n
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.coupling[i * self.n + j]
    }

    pub fn upper_triangle(&self) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| self.coupling(i, j))
            .collect()
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn tunneling(&self) -> &[f64] {
        &self.tunneling
    }

    /// Same couplings and biases with a new tunneling vector.
    pub fn with_tunneling(&self, tunneling: Vec<f64>) -> Result<Self> {
        ClusterParams::new(self.n, self.coupling.clone(), self.bias.clone(), tunneling)
    }

    /// Classical energy of basis index `index`; no width check.
    pub fn energy_of_index(&self, index: usize) -> f64 {
        let n = self.n;
        let s = |i: usize| if index >> i & 1 == 1 { 1.0 } else { -1.0 };
        let mut e = 0.0;
        for i in 0..n {
            let si = s(i);
            for j in i + 1..n {
                e += self.coupling[i * n + j] * si * s(j);
            }
        }
        for i in 0..n {
            e += self.bias[i] * s(i);
        }
        e
    }

    /// All `2^n` classical energies in basis order.
    pub fn classical_energies(&self) -> Vec<f64> {
        (0..self.dim()).map(|x| self.energy_of_index(x)).collect()
    }

    /// Default degeneracy tolerance: `1e-9` times the spread of classical
    /// energies.
    pub fn default_degeneracy_tolerance(&self) -> f64 {
        let energies = self.classical_energies();
        let (lo, hi) = energies
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| {
                (lo.min(e), hi.max(e))
            });
        1e-9 * (hi - lo)
    }

    pub(crate) fn check_config(&self, op: &'static str, config: SpinConfig) -> Result<()> {
        if config.width() != self.n {
            return Err(Error::dimension(
                op,
                format!("configuration width {} != n = {}", config.width(), self.n),
            ));
        }
        Ok(())
    }
}

pub fn classical_energy(params: &ClusterParams, config: SpinConfig) -> Result<f64> {
    params.check_config("cluster::classical_energy", config)?;
    Ok(params.energy_of_index(config.index()))
}

pub fn hamming_distance(x: SpinConfig, y: SpinConfig) -> Result<u32> {
    if x.width() != y.width() {
        return Err(Error::dimension(
            "cluster::hamming_distance",
            format!("widths {} and {} differ", x.width(), y.width()),
        ));
    }
    Ok((x.bits ^ y.bits).count_ones())
}

/// `s^z_i |X> = sign |X>`.
pub fn apply_sigma_z(i: usize, config: SpinConfig) -> Result<(f64, SpinConfig)> {
    if i >= config.width() {
        return Err(Error::domain(
            "cluster::apply_sigma_z",
            format!("spin index {i} >= n = {}", config.width()),
        ));
    }
    Ok((config.spin(i), config))
}

pub fn apply_sigma_x(i: usize, config: SpinConfig) -> Result<SpinConfig> {
    if i >= config.width() {
        return Err(Error::domain(
            "cluster::apply_sigma_x",
            format!("spin index {i} >= n = {}", config.width()),
        ));
    }
    Ok(config.flipped(i))
}

/// Dense real symmetric Hamiltonian over the `2^n` number states.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    n: usize,
    matrix: DMatrix<f64>,
}

impl HamiltonianMatrix {
    /// Wraps an arbitrary `2^n x 2^n` matrix. Symmetry is checked later by
    /// [`crate::spectrum::diagonalize`].
    pub fn from_dense(n: usize, matrix: DMatrix<f64>) -> Result<Self> {
        let dim = 1usize << n;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::dimension(
                "cluster::HamiltonianMatrix",
                format!("{}x{} matrix for n = {n}", matrix.nrows(), matrix.ncols()),
            ));
        }
        Ok(HamiltonianMatrix { n, matrix })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.matrix[(row, col)]
    }

    pub fn is_symmetric(&self) -> bool {
        let m = &self.matrix;
        (0..m.nrows()).all(|r| (r + 1..m.ncols()).all(|c| m[(r, c)] == m[(c, r)]))
    }
}

pub fn build_hamiltonian(params: &ClusterParams) -> Result<HamiltonianMatrix> {
    let n = params.n();
    if n > MAX_SPINS {
        return Err(Error::capacity(
            "cluster::build_hamiltonian",
            format!("n = {n} exceeds the dense limit of {MAX_SPINS} spins"),
        ));
    }
    let dim = params.dim();
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for x in 0..dim {
        m[(x, x)] = params.energy_of_index(x);
        for (i, &c) in params.tunneling().iter().enumerate() {
            m[(x, x ^ (1 << i))] = c;
        }
    }
    Ok(HamiltonianMatrix { n, matrix: m })
}
