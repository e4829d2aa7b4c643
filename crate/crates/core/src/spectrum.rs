//! Exact diagonalization, the classical energy landscape, and dressed
//! eigenstates anchored to number states.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::cluster::{hamming_distance, ClusterParams, HamiltonianMatrix, SpinConfig, MAX_SPINS};
use crate::error::{Error, Result};
use crate::stats::linear_fit;

/// Residual and orthonormality tolerance, relative to the spectral norm.
pub const EIGEN_TOLERANCE: f64 = 1e-10;

/// Minimum anchor overlap for a dressed state to keep its label.
pub const PERTURBATIVE_OVERLAP: f64 = 0.5;

/// Amplitudes below this are treated as zero by [`overlap_decay`].
pub const AMPLITUDE_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone)]
pub struct EigenSystem {
    n: usize,
    eigenvalues: Vec<f64>,
    /// Column `k` belongs to `eigenvalues[k]`.
    eigenvectors: DMatrix<f64>,
}

impl EigenSystem {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, k: usize) -> Vec<f64> {
        self.eigenvectors.column(k).iter().copied().collect()
    }

    /// Largest minus smallest eigenvalue.
    pub fn spread(&self) -> f64 {
        self.eigenvalues.last().unwrap() - self.eigenvalues[0]
    }
}

/// Dense symmetric eigendecomposition with ascending eigenvalues.
///
/// Each eigenvector's sign is fixed so its largest-magnitude component
/// (lowest index on ties) is positive.
pub fn diagonalize(h: &HamiltonianMatrix) -> Result<EigenSystem> {
    const OP: &str = "spectrum::diagonalize";
    if h.n() > MAX_SPINS {
        return Err(Error::capacity(OP, format!("n = {} exceeds {MAX_SPINS}", h.n())));
    }
    if !h.is_symmetric() {
        return Err(Error::validation(OP, "matrix is not symmetric"));
    }
    let m = h.matrix().clone();
    let dim = m.nrows();
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, 1000 * dim.max(10))
        .ok_or_else(|| Error::numerical(OP, format!("symmetric eigensolver did not converge (dim {dim})")))?;

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::<f64>::zeros(dim, dim);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let mut pivot = 0;
        for r in 1..dim {
            if col[r].abs() > col[pivot].abs() {
                pivot = r;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..dim {
            vectors[(r, dst)] = sign * col[r];
        }
    }

    let norm = eigenvalues.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let hv = h.matrix() * &vectors;
    let mut worst_residual = 0.0f64;
    for k in 0..dim {
        let r = (hv.column(k) - vectors.column(k) * eigenvalues[k]).norm();
        worst_residual = worst_residual.max(r);
    }
    let gram = vectors.transpose() * &vectors;
    let mut worst_orth = 0.0f64;
    for r in 0..dim {
        for c in 0..dim {
            let target = if r == c { 1.0 } else { 0.0 };
            worst_orth = worst_orth.max((gram[(r, c)] - target).abs());
        }
    }
    if worst_residual > EIGEN_TOLERANCE * norm || worst_orth > EIGEN_TOLERANCE {
        return Err(Error::numerical(
            OP,
            format!(
                "eigenpairs out of tolerance: max residual {worst_residual:.3e} (norm {norm:.3e}), \
                 max orthonormality defect {worst_orth:.3e}"
            ),
        ));
    }
    Ok(EigenSystem {
        n: h.n(),
        eigenvalues,
        eigenvectors: vectors,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalMinimum {
    pub config: SpinConfig,
    pub energy: f64,
    /// Hamming distance to the global minimum.
    pub barrier_distance: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeReport {
    pub global_minimum: SpinConfig,
    pub global_energy: f64,
    /// Strict local minima other than the global one, in basis order.
    pub local_minima: Vec<LocalMinimum>,
    pub degenerate: bool,
    pub tolerance: f64,
}

impl LandscapeReport {
    /// The local minimum farthest from the global one; ties go to the lower
    /// energy.
    pub fn farthest_minimum(&self) -> Option<&LocalMinimum> {
        self.local_minima.iter().max_by(|a, b| {
            a.barrier_distance
                .cmp(&b.barrier_distance)
                .then(b.energy.total_cmp(&a.energy))
        })
    }

    /// Farthest local minimum, or the complement of the global minimum when
    /// the landscape has none.
    pub fn partner(&self) -> SpinConfig {
        self.farthest_minimum()
            .map(|m| m.config)
            .unwrap_or_else(|| self.global_minimum.complement())
    }
}

/// Enumerates the classical landscape. A configuration is a local minimum
/// when every single-flip neighbour lies more than `tolerance` above it.
/// `tolerance = None` uses [`ClusterParams::default_degeneracy_tolerance`].
pub fn find_local_minima(params: &ClusterParams, tolerance: Option<f64>) -> Result<LandscapeReport> {
    const OP: &str = "spectrum::find_local_minima";
    let n = params.n();
    if n > MAX_SPINS {
        return Err(Error::capacity(OP, format!("n = {n} exceeds {MAX_SPINS}")));
    }
    let eps = tolerance.unwrap_or_else(|| params.default_degeneracy_tolerance());
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::validation(
            OP,
            format!("tolerance {eps} must be finite and non-negative"),
        ));
    }
    let energies = params.classical_energies();
    let mut global = 0;
    for (x, &e) in energies.iter().enumerate() {
        if e < energies[global] {
            global = x;
        }
    }
    let global_cfg = SpinConfig::from_index(global, n);
    let global_energy = energies[global];

    let is_strict_min = |x: usize| (0..n).all(|i| energies[x ^ (1 << i)] - energies[x] > eps);
    let mut local_minima = Vec::new();
    let mut minima_energies = vec![global_energy];
    for x in 0..energies.len() {
        if x == global || !is_strict_min(x) {
            continue;
        }
        let config = SpinConfig::from_index(x, n);
        local_minima.push(LocalMinimum {
            config,
            energy: energies[x],
            barrier_distance: hamming_distance(config, global_cfg)?,
        });
        minima_energies.push(energies[x]);
    }
    let ties_global = energies
        .iter()
        .enumerate()
        .any(|(x, &e)| x != global && e - global_energy <= eps);
    let mut degenerate = ties_global;
    for a in 0..minima_energies.len() {
        for b in a + 1..minima_energies.len() {
            if (minima_energies[a] - minima_energies[b]).abs() <= eps {
                degenerate = true;
            }
        }
    }
    Ok(LandscapeReport {
        global_minimum: global_cfg,
        global_energy,
        local_minima,
        degenerate,
        tolerance: eps,
    })
}

/// An exact eigenstate labelled by the number state it overlaps most.
#[derive(Debug, Clone, PartialEq)]
pub struct DressedState {
    pub anchor: SpinConfig,
    pub eigenindex: usize,
    pub energy: f64,
    /// `|<anchor|psi>|^2`.
    pub overlap_sq: f64,
    /// `<Z|psi>` in basis order; the anchor amplitude is positive.
    pub amplitudes: Vec<f64>,
}

impl DressedState {
    pub fn amplitude(&self, z: SpinConfig) -> f64 {
        self.amplitudes[z.index()]
    }

    pub fn n(&self) -> usize {
        self.anchor.width()
    }
}

pub fn dress(eig: &EigenSystem, anchor: SpinConfig) -> Result<DressedState> {
    const OP: &str = "spectrum::dress";
    if anchor.width() != eig.n() {
        return Err(Error::dimension(
            OP,
            format!("anchor width {} != n = {}", anchor.width(), eig.n()),
        ));
    }
    let a = anchor.index();
    let vecs = eig.eigenvectors();
    let mut best = 0;
    for k in 1..eig.dim() {
        if vecs[(a, k)].powi(2) > vecs[(a, best)].powi(2) {
            best = k;
        }
    }
    let overlap_sq = vecs[(a, best)].powi(2);
    if overlap_sq < PERTURBATIVE_OVERLAP {
        return Err(Error::StrongMixing {
            op: OP,
            anchor: anchor.to_string(),
            overlap_sq,
        });
    }
    let sign = if vecs[(a, best)] < 0.0 { -1.0 } else { 1.0 };
    let amplitudes = vecs.column(best).iter().map(|v| sign * v).collect();
    Ok(DressedState {
        anchor,
        eigenindex: best,
        energy: eig.eigenvalues()[best],
        overlap_sq,
        amplitudes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapDecay {
    pub anchor: SpinConfig,
    /// `(k, max |<Z|psi>|)` over configurations at Hamming distance `k`,
    /// for `k = 1..=n`.
    pub per_distance: Vec<(u32, f64)>,
    /// Least-squares slope of `log10(max amplitude)` against `k`; `None`
    /// when fewer than two distances are above the floor.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub excluded: usize,
}

pub fn overlap_decay(d: &DressedState) -> Result<OverlapDecay> {
    const OP: &str = "spectrum::overlap_decay";
    if d.overlap_sq < PERTURBATIVE_OVERLAP {
        return Err(Error::StrongMixing {
            op: OP,
            anchor: d.anchor.to_string(),
            overlap_sq: d.overlap_sq,
        });
    }
    let n = d.n();
    let mut maxima = vec![0.0f64; n + 1];
    for (z, amp) in d.amplitudes.iter().enumerate() {
        let k = (z as u32 ^ d.anchor.bits()).count_ones() as usize;
        maxima[k] = maxima[k].max(amp.abs());
    }
    let per_distance: Vec<(u32, f64)> = (1..=n).map(|k| (k as u32, maxima[k])).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = per_distance
        .iter()
        .filter(|(_, a)| *a >= AMPLITUDE_FLOOR)
        .map(|&(k, a)| (k as f64, a.log10()))
        .unzip();
    let excluded = n - xs.len();
    let fit = linear_fit(&xs, &ys);
    Ok(OverlapDecay {
        anchor: d.anchor,
        per_distance,
        slope: fit.map(|f| f.slope),
        intercept: fit.map(|f| f.intercept),
        excluded,
    })
}

/// Single-flip energy gaps `|E(flip_i(anchor)) - E(anchor)|`.
pub fn single_flip_gaps(params: &ClusterParams, anchor: SpinConfig) -> Result<Vec<f64>> {
    params.check_config("spectrum::single_flip_gaps", anchor)?;
    let e0 = params.energy_of_index(anchor.index());
    Ok((0..params.n())
        .map(|i| (params.energy_of_index(anchor.flipped(i).index()) - e0).abs())
        .collect())
}

/// Geometric mean of the single-flip gaps at `anchor`.
pub fn typical_level_spacing(params: &ClusterParams, anchor: SpinConfig) -> Result<f64> {
    const OP: &str = "spectrum::typical_level_spacing";
    params.check_config(OP, anchor)?;
    let gaps = single_flip_gaps(params, anchor)?;
    let eps = params.default_degeneracy_tolerance();
    if let Some(i) = gaps.iter().position(|&g| g <= eps) {
        return Err(Error::degeneracy(
            OP,
            format!("flipping spin {i} of {anchor} costs no energy"),
        ));
    }
    let mean_log = gaps.iter().map(|g| g.ln()).sum::<f64>() / gaps.len() as f64;
    let a = mean_log.exp();
    // exact when all gaps coincide
    if gaps.iter().all(|&g| g == gaps[0]) {
        return Ok(gaps[0]);
    }
    Ok(a)
}

/// Dressed ground state and dressed farthest local minimum.
pub fn ground_and_lem(params: &ClusterParams, eig: &EigenSystem) -> Result<(DressedState, DressedState)> {
    let landscape = find_local_minima(params, None)?;
    let lem = landscape.farthest_minimum().ok_or_else(|| {
        Error::domain(
            "spectrum::ground_and_lem",
            "landscape has no local energy minimum besides the global one",
        )
    })?;
    Ok((dress(eig, landscape.global_minimum)?, dress(eig, lem.config)?))
}
