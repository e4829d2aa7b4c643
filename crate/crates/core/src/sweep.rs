//! Parameter grids over cluster size and coupling ratio.
//!
//! For a grid point `(n, r)` the cluster is built without tunneling, its
//! farthest local minimum fixes `A_typ`, and then tunneling and noise
//! amplitudes are set to `C_i = f_i = g_i = r * A_typ`.

use rayon::prelude::*;

use crate::cluster::{build_hamiltonian, ClusterParams, SpinConfig, MAX_SPINS};
use crate::dynamics::{self, default_total_time, evolve_pair, golden_rule_rate, TrajectoryConfig, MAX_DYNAMICS_SPINS};
use crate::error::{Error, Result};
use crate::perturbation::{multiphoton_path_sum, scaling_exponent, MAX_PATH_SPINS};
use crate::spectrum::{diagonalize, dress, find_local_minima, overlap_decay, typical_level_spacing};
use crate::stats::linear_fit;
use crate::transition::{
    check_bound_with_spacing, lifetime_extension, matrix_element, CouplingSpec, NoiseModel, DEFAULT_CORRELATION_TIME,
};

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// Fully connected, `J_ij = coupling`, `B_i = bias`.
    UniformFerromagnet { coupling: f64, bias: f64 },
    /// Couplings and biases taken from the listed clusters (one per `n`);
    /// their tunneling is replaced per grid point.
    Explicit(Vec<ClusterParams>),
}

impl Default for Family {
    fn default() -> Self {
        Family::UniformFerromagnet {
            coupling: -1.0,
            bias: 0.1,
        }
    }
}

/// Noise kind with the correlation time in units of `1 / A_typ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSetting {
    White,
    Exponential { tau: f64 },
}

impl Default for NoiseSetting {
    fn default() -> Self {
        NoiseSetting::Exponential {
            tau: DEFAULT_CORRELATION_TIME,
        }
    }
}

impl NoiseSetting {
    pub fn resolve(self, a_typ: f64) -> NoiseModel {
        match self {
            NoiseSetting::White => NoiseModel::White,
            NoiseSetting::Exponential { tau } => NoiseModel::Exponential { tau: tau / a_typ },
        }
    }
}

/// Trajectory settings with times in units of `1 / A_typ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsSettings {
    pub time_step: f64,
    /// `None` picks `20 / (golden-rule rate)` capped at the step limit.
    pub total_time: Option<f64>,
    pub trajectories: usize,
}

impl Default for DynamicsSettings {
    fn default() -> Self {
        DynamicsSettings {
            time_step: dynamics::DEFAULT_TIME_STEP,
            total_time: None,
            trajectories: dynamics::DEFAULT_TRAJECTORIES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Channels {
    pub overlaps: bool,
    pub rates: bool,
    pub path_sums: bool,
    pub dynamics: bool,
}

impl Channels {
    pub fn all() -> Self {
        Channels {
            overlaps: true,
            rates: true,
            path_sums: true,
            dynamics: true,
        }
    }

    pub fn static_only() -> Self {
        Channels {
            overlaps: true,
            rates: true,
            path_sums: true,
            dynamics: false,
        }
    }

    pub fn names(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if self.overlaps {
            v.push("overlaps");
        }
        if self.rates {
            v.push("rates");
        }
        if self.path_sums {
            v.push("pathsums");
        }
        if self.dynamics {
            v.push("dynamics");
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub n_values: Vec<usize>,
    pub ratio_values: Vec<f64>,
    pub family: Family,
    pub channels: Channels,
    pub noise: NoiseSetting,
    pub dynamics: DynamicsSettings,
    pub seed: u64,
}

impl SweepGrid {
    pub fn uniform(n_values: Vec<usize>, ratio_values: Vec<f64>, channels: Channels, seed: u64) -> Self {
        SweepGrid {
            n_values,
            ratio_values,
            family: Family::default(),
            channels,
            noise: NoiseSetting::default(),
            dynamics: DynamicsSettings::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        const OP: &str = "sweep::run_sweep";
        if self.n_values.is_empty() || self.ratio_values.is_empty() {
            return Err(Error::validation(OP, "grid needs at least one n and one ratio"));
        }
        if let Some(r) = self.ratio_values.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
            return Err(Error::validation(OP, format!("ratio {r} outside (0, 1)")));
        }
        let limit = if self.channels.path_sums || self.channels.dynamics {
            MAX_PATH_SPINS.min(MAX_DYNAMICS_SPINS)
        } else {
            MAX_SPINS
        };
        for &n in &self.n_values {
            if n == 0 {
                return Err(Error::validation(OP, "n must be positive"));
            }
            if n > limit {
                return Err(Error::capacity(
                    OP,
                    format!("n = {n} exceeds {limit} for channels {:?}", self.channels.names()),
                ));
            }
            if let Family::Explicit(list) = &self.family {
                if !list.iter().any(|p| p.n() == n) {
                    return Err(Error::validation(
                        OP,
                        format!("explicit family has no cluster with n = {n}"),
                    ));
                }
            }
        }
        if self.channels.dynamics {
            let d = &self.dynamics;
            if !(d.time_step > 0.0) || d.trajectories == 0 || d.total_time.is_some_and(|t| !(t > 0.0)) {
                return Err(Error::validation(OP, "dynamics settings must be positive"));
            }
        }
        Ok(())
    }
}

/// Cluster, couplings and level spacing for one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub params: ClusterParams,
    pub coupling: CouplingSpec,
    pub a_typ: f64,
    pub ground: SpinConfig,
    pub lem: SpinConfig,
}

impl Family {
    pub fn base(&self, n: usize) -> Result<ClusterParams> {
        match self {
            Family::UniformFerromagnet { coupling, bias } => ClusterParams::uniform(n, *coupling, *bias, 0.0),
            Family::Explicit(list) => list
                .iter()
                .find(|p| p.n() == n)
                .ok_or_else(|| Error::validation("sweep::Family", format!("no explicit cluster with n = {n}")))?
                .with_tunneling(vec![0.0; n]),
        }
    }

    pub fn point(&self, n: usize, ratio: f64, noise: NoiseSetting) -> Result<GridPoint> {
        let base = self.base(n)?;
        let landscape = find_local_minima(&base, None)?;
        let lem = landscape
            .farthest_minimum()
            .ok_or_else(|| Error::domain("sweep::Family", format!("n = {n} cluster has no local energy minimum")))?
            .config;
        let a_typ = typical_level_spacing(&base, lem)?;
        let amp = ratio * a_typ;
        let params = base.with_tunneling(vec![amp; n])?;
        let coupling = CouplingSpec::uniform(n, amp, amp, noise.resolve(a_typ))?;
        Ok(GridPoint {
            params,
            coupling,
            a_typ,
            ground: landscape.global_minimum,
            lem,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepRow {
    pub n: usize,
    pub ratio: f64,
    pub a_typ: Option<f64>,
    pub matrix_element: Option<f64>,
    pub rate_ratio: Option<f64>,
    pub size_bound: Option<f64>,
    pub bound_margin: Option<f64>,
    pub lifetime_extension: Option<f64>,
    pub overlap_slope: Option<f64>,
    pub pathsum_slope: Option<f64>,
    pub fitted_dynamics_rate: Option<f64>,
    pub seed: u64,
    /// `code@channel` for every channel that failed, `;`-separated.
    pub error: Option<String>,
}

impl SweepRow {
    pub fn value(&self, column: SweepColumn) -> Option<f64> {
        match column {
            SweepColumn::MatrixElement => self.matrix_element.map(f64::abs),
            SweepColumn::RateRatio => self.rate_ratio,
            SweepColumn::SizeBound => self.size_bound,
            SweepColumn::FittedDynamicsRate => self.fitted_dynamics_rate,
        }
    }
}

/// Columns that can be fitted against `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepColumn {
    MatrixElement,
    RateRatio,
    SizeBound,
    FittedDynamicsRate,
}

impl std::str::FromStr for SweepColumn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "matrix_element" => Ok(SweepColumn::MatrixElement),
            "rate_ratio" => Ok(SweepColumn::RateRatio),
            "size_bound" => Ok(SweepColumn::SizeBound),
            "fitted_dynamics_rate" => Ok(SweepColumn::FittedDynamicsRate),
            other => Err(Error::validation(
                "sweep::fit_size_scaling",
                format!("column `{other}` cannot be fitted"),
            )),
        }
    }
}

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn point_seed(master: u64, n: usize, ratio_index: usize) -> u64 {
    mix(mix(master ^ mix(n as u64)) ^ ratio_index as u64)
}

pub fn run_sweep(grid: &SweepGrid) -> Result<Vec<SweepRow>> {
    grid.validate()?;
    let points: Vec<(usize, usize, f64)> = grid
        .n_values
        .iter()
        .flat_map(|&n| grid.ratio_values.iter().enumerate().map(move |(k, &r)| (n, k, r)))
        .collect();
    Ok(points
        .par_iter()
        .map(|&(n, k, ratio)| {
            let mut row = SweepRow {
                n,
                ratio,
                seed: point_seed(grid.seed, n, k),
                ..Default::default()
            };
            let failures = fill_row(grid, &mut row);
            if !failures.is_empty() {
                let codes: Vec<String> = failures.iter().map(|(ch, e)| format!("{}@{ch}", e.code())).collect();
                row.error = Some(codes.join(";"));
            }
            row
        })
        .collect())
}

/// Runs each requested channel; a failing channel leaves its columns empty
/// and the others still run.
fn fill_row(grid: &SweepGrid, row: &mut SweepRow) -> Vec<(&'static str, Error)> {
    let mut failures = Vec::new();
    let pt = match grid.family.point(row.n, row.ratio, grid.noise) {
        Ok(pt) => pt,
        Err(e) => return vec![("setup", e)],
    };
    row.a_typ = Some(pt.a_typ);
    let ch = grid.channels;

    if ch.path_sums {
        if let Err(e) = path_sum_channel(&pt, row) {
            failures.push(("pathsums", e));
        }
    }
    if !(ch.overlaps || ch.rates || ch.dynamics) {
        return failures;
    }
    let dressed = build_hamiltonian(&pt.params)
        .and_then(|h| diagonalize(&h))
        .and_then(|eig| Ok((dress(&eig, pt.ground)?, dress(&eig, pt.lem)?, eig)));
    let (ground, lem, eig) = match dressed {
        Ok(d) => d,
        Err(e) => {
            failures.push(("spectrum", e));
            return failures;
        }
    };

    if ch.overlaps {
        match overlap_decay(&ground) {
            Ok(d) => row.overlap_slope = d.slope,
            Err(e) => failures.push(("overlaps", e)),
        }
    }
    let report = match matrix_element(&ground, &lem, &pt.coupling) {
        Ok(r) => r,
        Err(e) => {
            failures.push(("rates", e));
            return failures;
        }
    };
    if ch.rates {
        let verdict = check_bound_with_spacing(&report, &pt.params, &pt.coupling, pt.a_typ)
            .and_then(|v| Ok((v, lifetime_extension(row.n, row.ratio)?)));
        match verdict {
            Ok((v, ext)) => {
                row.matrix_element = Some(report.matrix_element);
                row.rate_ratio = Some(report.rate_ratio);
                row.size_bound = Some(v.bound);
                row.bound_margin = Some(v.margin);
                row.lifetime_extension = Some(ext);
            }
            Err(e) => failures.push(("rates", e)),
        }
    }
    if ch.dynamics {
        let d = grid.dynamics;
        let dt = d.time_step / pt.a_typ;
        let total = match d.total_time {
            Some(t) => t / pt.a_typ,
            None => default_total_time(golden_rule_rate(&report, pt.coupling.noise()), dt),
        };
        let tcfg = TrajectoryConfig {
            time_step: dt,
            total_time: total,
            trajectory_count: d.trajectories,
            seed: row.seed,
            noise: pt.coupling.clone(),
        };
        match evolve_pair(&pt.params, &eig, &ground, &lem, &tcfg) {
            Ok(trace) => row.fitted_dynamics_rate = Some(trace.fitted_rate),
            Err(e) => failures.push(("dynamics", e)),
        }
    }
    failures
}

/// Path sums from the ground configuration to targets that flip the first
/// `d` bits separating it from the local minimum.
fn path_sum_channel(pt: &GridPoint, row: &mut SweepRow) -> Result<()> {
    let source = pt.ground;
    let mut target = source;
    let mut amps = Vec::new();
    for i in (0..row.n).filter(|&i| pt.ground.bit(i) != pt.lem.bit(i)) {
        target = target.flipped(i);
        let r = multiphoton_path_sum(&pt.params, &pt.coupling, source, target)?;
        amps.push((r.order, r.amplitude));
    }
    row.pathsum_slope = Some(scaling_exponent(&amps)?);
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub used: usize,
    pub excluded: usize,
}

/// Least squares of `log10(column)` against `n`. Rows without a positive
/// finite value are skipped and counted.
pub fn fit_size_scaling(rows: &[SweepRow], column: SweepColumn) -> Result<ScalingFit> {
    const OP: &str = "sweep::fit_size_scaling";
    if let Some(first) = rows.first() {
        if rows.iter().any(|r| r.ratio != first.ratio) {
            return Err(Error::validation(OP, "rows must share one ratio"));
        }
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter_map(|r| {
            r.value(column)
                .filter(|v| v.is_finite() && *v > 0.0)
                .map(|v| (r.n as f64, v.log10()))
        })
        .unzip();
    let excluded = rows.len() - xs.len();
    let mut distinct = xs.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::insufficient(
            OP,
            format!("{} distinct n with usable values, need 3", distinct.len()),
        ));
    }
    let fit = linear_fit(&xs, &ys).expect("distinct abscissae");
    Ok(ScalingFit {
        slope: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        used: xs.len(),
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_channel_set_keeps_only_identity_columns() {
        let grid = SweepGrid::uniform(vec![3, 4], vec![0.01], Channels::default(), 1);
        let rows = run_sweep(&grid).unwrap();
        assert_eq!(rows.len(), 2);
        for r in &rows {
            assert!(r.a_typ.is_some());
            assert!(r.matrix_element.is_none() && r.overlap_slope.is_none() && r.pathsum_slope.is_none());
            assert!(r.error.is_none());
        }
    }

    #[test]
    fn five_spin_row_reports_bound() {
        let grid = SweepGrid::uniform(
            vec![5],
            vec![0.01],
            Channels {
                rates: true,
                ..Default::default()
            },
            1,
        );
        let rows = run_sweep(&grid).unwrap();
        let b = rows[0].size_bound.unwrap();
        assert!((b - 1e-10).abs() <= 1e-12 * 1e-10, "{b}");
        assert_eq!(rows[0].lifetime_extension, Some(10.0));
    }

    #[test]
    fn per_row_errors_do_not_abort() {
        // n = 2 has only two path orders, too few for a slope
        let grid = SweepGrid::uniform(vec![2, 3], vec![0.01], Channels::static_only(), 1);
        let rows = run_sweep(&grid).unwrap();
        assert_eq!(rows[0].error.as_deref(), Some("insufficient_data@pathsums"));
        assert!(rows[0].pathsum_slope.is_none());
        assert!(rows[0].rate_ratio.is_some() && rows[0].overlap_slope.is_some());
        assert!(rows[1].error.is_none());
        assert!(rows[1].pathsum_slope.unwrap() < 0.0);
    }

    #[test]
    fn invalid_grids() {
        let mut grid = SweepGrid::uniform(vec![9], vec![0.01], Channels::all(), 1);
        assert!(matches!(run_sweep(&grid), Err(Error::Capacity { .. })));
        grid.n_values = vec![3];
        grid.ratio_values = vec![1.5];
        assert!(matches!(run_sweep(&grid), Err(Error::Validation { .. })));
        grid.ratio_values = vec![];
        assert!(run_sweep(&grid).is_err());
    }

    #[test]
    fn synthetic_scaling_fit() {
        let r: f64 = 0.01;
        let rows: Vec<SweepRow> = (2..=6)
            .map(|n| SweepRow {
                n,
                ratio: r,
                rate_ratio: Some(r.powi(2 * n as i32)),
                ..Default::default()
            })
            .collect();
        let fit = fit_size_scaling(&rows, SweepColumn::RateRatio).unwrap();
        assert!((fit.slope + 4.0).abs() < 1e-9);
        assert_eq!(fit.used, 5);

        let same: Vec<SweepRow> = (0..4)
            .map(|_| SweepRow {
                n: 3,
                ratio: r,
                rate_ratio: Some(1e-3),
                ..Default::default()
            })
            .collect();
        assert!(matches!(
            fit_size_scaling(&same, SweepColumn::RateRatio),
            Err(Error::InsufficientData { .. })
        ));

        let mut gappy = rows.clone();
        gappy[1].rate_ratio = Some(0.0);
        gappy[2].rate_ratio = None;
        let fit = fit_size_scaling(&gappy, SweepColumn::RateRatio).unwrap();
        assert_eq!((fit.used, fit.excluded), (3, 2));
    }

    #[test]
    fn seeds_depend_on_coordinates() {
        assert_ne!(point_seed(1, 3, 0), point_seed(1, 4, 0));
        assert_ne!(point_seed(1, 3, 0), point_seed(1, 3, 1));
        assert_eq!(point_seed(9, 3, 1), point_seed(9, 3, 1));
    }
}
