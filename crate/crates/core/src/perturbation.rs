//! Perturbative estimates that do not touch the eigensolver: first-order
//! stationary amplitudes and the shortest-path multi-flip sum.

use crate::cluster::{hamming_distance, ClusterParams, SpinConfig};
use crate::error::{Error, Result};
use crate::spectrum::AMPLITUDE_FLOOR;
use crate::stats::{linear_fit, CompensatedSum};
use crate::transition::CouplingSpec;

/// Path enumeration is limited to clusters of this size (8! orderings).
pub const MAX_PATH_SPINS: usize = 8;

/// First-order admixture `<z|anchor'> = C_i / (E(anchor) - E(z))` of a
/// neighbour `z` differing from `anchor` in spin `i`.
pub fn rs_amplitude_first_order(params: &ClusterParams, anchor: SpinConfig, z: SpinConfig) -> Result<f64> {
    const OP: &str = "perturbation::rs_amplitude_first_order";
    params.check_config(OP, anchor)?;
    params.check_config(OP, z)?;
    let d = hamming_distance(anchor, z)?;
    if d != 1 {
        return Err(Error::domain(
            OP,
            format!("{anchor} and {z} are at distance {d}, expected 1"),
        ));
    }
    let i = (anchor.bits() ^ z.bits()).trailing_zeros() as usize;
    let denom = params.energy_of_index(anchor.index()) - params.energy_of_index(z.index());
    if denom.abs() <= params.default_degeneracy_tolerance() {
        return Err(Error::degeneracy(
            OP,
            format!("{anchor} and {z} have equal classical energy"),
        ));
    }
    Ok(params.tunneling()[i] / denom)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSumResult {
    pub source: SpinConfig,
    pub target: SpinConfig,
    pub order: u32,
    /// Effective `d`-th order element, energy units.
    pub amplitude: f64,
    pub path_count: u64,
    /// `(amplitude / g_max)^2`.
    pub rate_ratio: f64,
}

/// Sums every ordering of the `d` distinct flips taking `source` to
/// `target`:
///
/// ```text
/// sum_paths  prod_k g_{i_k}  /  prod_{k=1}^{d-1} (E(source) - E(Z_k))
/// ```
///
/// where `Z_k` is the configuration after the first `k` flips.
pub fn multiphoton_path_sum(
    params: &ClusterParams,
    coupling: &CouplingSpec,
    source: SpinConfig,
    target: SpinConfig,
) -> Result<PathSumResult> {
    const OP: &str = "perturbation::multiphoton_path_sum";
    params.check_config(OP, source)?;
    params.check_config(OP, target)?;
    if coupling.n() != params.n() {
        return Err(Error::dimension(
            OP,
            format!("coupling n = {} != cluster n = {}", coupling.n(), params.n()),
        ));
    }
    let d = hamming_distance(source, target)?;
    if d == 0 {
        return Err(Error::domain(OP, "source equals target"));
    }
    if params.n() > MAX_PATH_SPINS {
        return Err(Error::capacity(
            OP,
            format!("n = {} exceeds the path budget of {MAX_PATH_SPINS}", params.n()),
        ));
    }
    let flips: Vec<usize> = (0..params.n())
        .filter(|&i| (source.bits() ^ target.bits()) >> i & 1 == 1)
        .collect();
    let e0 = params.energy_of_index(source.index());
    let eps = params.default_degeneracy_tolerance();
    let walker = PathWalker {
        params,
        g: coupling.g(),
        e0,
        eps,
        flips: &flips,
    };

    // one partial sum per first flip, combined in flip order
    let mut total = CompensatedSum::default();
    let mut path = Vec::with_capacity(flips.len());
    for (slot, &first) in flips.iter().enumerate() {
        let remaining: Vec<usize> = (0..flips.len()).filter(|&s| s != slot).collect();
        path.clear();
        path.push(first);
        let mut partial = CompensatedSum::default();
        walker.descend(
            source.index() ^ (1 << first),
            coupling.g()[first],
            &remaining,
            &mut path,
            &mut partial,
        )?;
        total.add(partial.value());
    }
    let amplitude = total.value();
    let g_max = coupling.g_max();
    let rate_ratio = if g_max > 0.0 { (amplitude / g_max).powi(2) } else { 0.0 };
    Ok(PathSumResult {
        source,
        target,
        order: d,
        amplitude,
        path_count: (1..=d as u64).product(),
        rate_ratio,
    })
}

struct PathWalker<'a> {
    params: &'a ClusterParams,
    g: &'a [f64],
    e0: f64,
    eps: f64,
    flips: &'a [usize],
}

impl PathWalker<'_> {
    fn descend(
        &self,
        current: usize,
        weight: f64,
        remaining: &[usize],
        path: &mut Vec<usize>,
        acc: &mut CompensatedSum,
    ) -> Result<()> {
        if remaining.is_empty() {
            acc.add(weight);
            return Ok(());
        }
        let denom = self.e0 - self.params.energy_of_index(current);
        if denom.abs() <= self.eps {
            let seq: Vec<String> = path.iter().map(|i| i.to_string()).collect();
            return Err(Error::degeneracy(
                "perturbation::multiphoton_path_sum",
                format!(
                    "intermediate {} on flip path [{}] is degenerate with the source",
                    SpinConfig::from_index(current, self.params.n()),
                    seq.join(",")
                ),
            ));
        }
        let w = weight / denom;
        for (pos, &slot) in remaining.iter().enumerate() {
            let spin = self.flips[slot];
            let rest: Vec<usize> = remaining
                .iter()
                .enumerate()
                .filter(|&(p, _)| p != pos)
                .map(|(_, &s)| s)
                .collect();
            path.push(spin);
            self.descend(current ^ (1 << spin), w * self.g[spin], &rest, path, acc)?;
            path.pop();
        }
        Ok(())
    }
}

/// Least-squares slope of `log10|amplitude|` against order `d`.
/// Amplitudes below the floor are dropped; at least three distinct orders
/// must remain.
pub fn scaling_exponent(amplitudes: &[(u32, f64)]) -> Result<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = amplitudes
        .iter()
        .filter(|(_, a)| a.abs() >= AMPLITUDE_FLOOR && a.is_finite())
        .map(|&(d, a)| (d as f64, a.abs().log10()))
        .unzip();
    let mut distinct = xs.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::insufficient(
            "perturbation::scaling_exponent",
            format!("{} usable distinct orders, need 3", distinct.len()),
        ));
    }
    Ok(linear_fit(&xs, &ys).expect("distinct abscissae").slope)
}
