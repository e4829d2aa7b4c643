//! Golden-rule matrix elements between the dressed ground state and the
//! dressed local minimum under the environmental coupling
//!
//! ```text
//! H'(t) = sum_i F_i(t) s^z_i + sum_i G_i(t) s^x_i
//! ```
//!
//! evaluated as a static snapshot with amplitudes `f_i`, `g_i`. Rates are
//! reported relative to the unsuppressed single-flip rate: the element is
//! divided by the coupling scale `max(f_i, g_i)` before squaring.

use crate::cluster::{ClusterParams, SpinConfig};
use crate::error::{Error, Result};
use crate::spectrum::{typical_level_spacing, DressedState};
use crate::stats::CompensatedSum;

/// Multiplier on the size-scaling bound before a verdict is failed.
pub const BOUND_SAFETY_FACTOR: f64 = 1e2;

/// Correlation time of the default noise, in units of `1 / A_typ`.
pub const DEFAULT_CORRELATION_TIME: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    /// Delta-correlated noise of unit intensity.
    White,
    /// Stationary unit-variance Ornstein-Uhlenbeck process,
    /// `<x(t) x(t')> = exp(-|t - t'| / tau)`.
    Exponential { tau: f64 },
}

impl NoiseModel {
    /// Two-sided spectral density at angular frequency `omega`.
    pub fn spectral_density(&self, omega: f64) -> f64 {
        match *self {
            NoiseModel::White => 1.0,
            NoiseModel::Exponential { tau } => 2.0 * tau / (1.0 + omega * omega * tau * tau),
        }
    }
}

/// Noise amplitudes on the `s^z` (`f`) and `s^x` (`g`) channels.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSpec {
    f: Vec<f64>,
    g: Vec<f64>,
    noise: NoiseModel,
}

impl CouplingSpec {
    pub fn new(f: Vec<f64>, g: Vec<f64>, noise: NoiseModel) -> Result<Self> {
        const OP: &str = "transition::CouplingSpec";
        if f.len() != g.len() {
            return Err(Error::dimension(
                OP,
                format!("f has length {}, g has length {}", f.len(), g.len()),
            ));
        }
        if let Some(v) = f.iter().chain(&g).find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::validation(
                OP,
                format!("amplitude {v} must be finite and non-negative"),
            ));
        }
        if let NoiseModel::Exponential { tau } = noise {
            if !(tau.is_finite() && tau > 0.0) {
                return Err(Error::validation(
                    OP,
                    format!("correlation time {tau} must be positive"),
                ));
            }
        }
        Ok(CouplingSpec { f, g, noise })
    }

    pub fn uniform(n: usize, f: f64, g: f64, noise: NoiseModel) -> Result<Self> {
        CouplingSpec::new(vec![f; n], vec![g; n], noise)
    }

    pub fn zero(n: usize) -> Self {
        CouplingSpec {
            f: vec![0.0; n],
            g: vec![0.0; n],
            noise: NoiseModel::White,
        }
    }

    pub fn n(&self) -> usize {
        self.f.len()
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    pub fn g_max(&self) -> f64 {
        self.g.iter().fold(0.0, |a: f64, &b| a.max(b))
    }

    /// `max_i max(f_i, g_i)`, the amplitude a single direct flip would see.
    pub fn scale(&self) -> f64 {
        self.f.iter().chain(&self.g).fold(0.0, |a: f64, &b| a.max(b))
    }

    pub fn scaled(&self, s: f64) -> Self {
        CouplingSpec {
            f: self.f.iter().map(|v| v * s).collect(),
            g: self.g.iter().map(|v| v * s).collect(),
            noise: self.noise,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub ground: SpinConfig,
    pub lem: SpinConfig,
    /// `<ground'| H' |lem'>` in energy units.
    pub matrix_element: f64,
    /// `E(lem') - E(ground')`.
    pub splitting: f64,
    pub coupling_scale: f64,
    /// `(matrix_element / coupling_scale)^2`; zero when the scale is zero.
    pub rate_ratio: f64,
    /// Per-spin contribution of `f_i s^z_i`.
    pub sigma_z: Vec<f64>,
    /// Per-spin contribution of `g_i s^x_i`.
    pub sigma_x: Vec<f64>,
}

impl RateReport {
    pub fn sigma_z_total(&self) -> f64 {
        self.sigma_z.iter().copied().collect::<CompensatedSum>().value()
    }

    pub fn sigma_x_total(&self) -> f64 {
        self.sigma_x.iter().copied().collect::<CompensatedSum>().value()
    }
}

pub fn matrix_element(ground: &DressedState, lem: &DressedState, coupling: &CouplingSpec) -> Result<RateReport> {
    const OP: &str = "transition::matrix_element";
    if ground.eigenindex == lem.eigenindex {
        return Err(Error::domain(
            OP,
            format!("both anchors dress eigenstate {}", ground.eigenindex),
        ));
    }
    let n = ground.n();
    if lem.n() != n || coupling.n() != n {
        return Err(Error::dimension(
            OP,
            format!("ground n = {n}, lem n = {}, coupling n = {}", lem.n(), coupling.n()),
        ));
    }
    let (pg, pl) = (&ground.amplitudes, &lem.amplitudes);
    let mut sigma_z = Vec::with_capacity(n);
    let mut sigma_x = Vec::with_capacity(n);
    for i in 0..n {
        let mut z = CompensatedSum::default();
        let mut x = CompensatedSum::default();
        for (idx, &l) in pl.iter().enumerate() {
            let s = if idx >> i & 1 == 1 { 1.0 } else { -1.0 };
            z.add(pg[idx] * s * l);
            x.add(pg[idx ^ (1 << i)] * l);
        }
        sigma_z.push(coupling.f[i] * z.value());
        sigma_x.push(coupling.g[i] * x.value());
    }
    let matrix_element = sigma_z
        .iter()
        .chain(&sigma_x)
        .copied()
        .collect::<CompensatedSum>()
        .value();
    let coupling_scale = coupling.scale();
    let rate_ratio = if coupling_scale > 0.0 {
        (matrix_element / coupling_scale).powi(2)
    } else {
        0.0
    };
    Ok(RateReport {
        ground: ground.anchor,
        lem: lem.anchor,
        matrix_element,
        splitting: lem.energy - ground.energy,
        coupling_scale,
        rate_ratio,
        sigma_z,
        sigma_x,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundVerdict {
    pub a_typ: f64,
    /// `(max(C_typ, g_typ) / A_typ)^n`.
    pub bound: f64,
    pub rate_ratio: f64,
    pub safety_factor: f64,
    pub satisfied: bool,
    /// `log10(bound / rate_ratio)`; infinite when the rate vanishes.
    pub margin: f64,
}

/// Checks the size-scaling bound with `A_typ` taken at the local-minimum
/// anchor of the report.
pub fn check_bound(report: &RateReport, params: &ClusterParams, coupling: &CouplingSpec) -> Result<BoundVerdict> {
    let a_typ = typical_level_spacing(params, report.lem)?;
    check_bound_with_spacing(report, params, coupling, a_typ)
}

pub fn check_bound_with_spacing(
    report: &RateReport,
    params: &ClusterParams,
    coupling: &CouplingSpec,
    a_typ: f64,
) -> Result<BoundVerdict> {
    const OP: &str = "transition::check_bound";
    if !(a_typ.is_finite() && a_typ > 0.0) {
        return Err(Error::degeneracy(OP, format!("level spacing {a_typ} is not positive")));
    }
    if !(report.rate_ratio >= 0.0) {
        return Err(Error::validation(
            OP,
            format!("rate ratio {} is negative", report.rate_ratio),
        ));
    }
    let c_typ = params.tunneling().iter().fold(0.0f64, |a, c| a.max(c.abs()));
    let ratio = c_typ.max(coupling.g_max()) / a_typ;
    let bound = ratio.powi(params.n() as i32);
    let satisfied = report.rate_ratio <= bound * BOUND_SAFETY_FACTOR;
    let margin = if report.rate_ratio == 0.0 {
        f64::INFINITY
    } else {
        (bound / report.rate_ratio).log10()
    };
    Ok(BoundVerdict {
        a_typ,
        bound,
        rate_ratio: report.rate_ratio,
        safety_factor: BOUND_SAFETY_FACTOR,
        satisfied,
        margin,
    })
}

/// Orders of magnitude gained in lifetime, `n log10(1 / ratio)`.
pub fn lifetime_extension(n: usize, ratio: f64) -> Result<f64> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::domain(
            "transition::lifetime_extension",
            format!("ratio {ratio} outside (0, 1); the perturbative picture does not apply"),
        ));
    }
    Ok(-(n as f64) * ratio.log10())
}
