//! Stochastic-trajectory evolution of an equal superposition of the dressed
//! ground state and the dressed local minimum.
//!
//! Each trajectory integrates
//!
//! ```text
//! i d|psi>/dt = [H + sum_i f_i xi_i(t) s^z_i + sum_i g_i eta_i(t) s^x_i] |psi>
//! ```
//!
//! with independent unit noise processes held constant across one RK4
//! step. The coherence is `|E[<G|psi><psi|L>]|` over trajectories with the
//! deterministic rotation at the ground-LEM splitting removed.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::cluster::{ClusterParams, SpinConfig};
use crate::error::{Error, Result};
use crate::spectrum::{dress, find_local_minima, DressedState, EigenSystem};
use crate::stats::{linear_fit, CompensatedSum};
use crate::transition::{CouplingSpec, NoiseModel, RateReport};

/// Trajectory budget: at most 2^8 basis states.
pub const MAX_DYNAMICS_SPINS: usize = 8;

/// `time_step * eigenvalue spread` must not exceed this.
pub const STABILITY_LIMIT: f64 = 0.05;

/// Largest tolerated norm drift over one step before renormalization.
pub const NORM_DRIFT_LIMIT: f64 = 1e-3;

/// Coherence window used for the exponential fit.
pub const FIT_WINDOW: (f64, f64) = (0.1, 0.45);

/// Fits below this R^2 are inconclusive.
pub const MIN_FIT_QUALITY: f64 = 0.9;

/// Fitted and predicted rates within this factor are consistent.
pub const CONSISTENCY_FACTOR: f64 = 3.0;

pub const DEFAULT_TIME_STEP: f64 = 0.01;
pub const DEFAULT_TRAJECTORIES: usize = 200;
pub const MAX_STEPS: u64 = 1_000_000;

const TARGET_SAMPLES: u64 = 2000;
const STOP_COHERENCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryConfig {
    /// Absolute time step (inverse energy units).
    pub time_step: f64,
    pub total_time: f64,
    pub trajectory_count: usize,
    pub seed: u64,
    pub noise: CouplingSpec,
}

impl TrajectoryConfig {
    /// Default step `0.01 / a_typ` and 200 trajectories; `total_time` still
    /// has to be chosen, see [`default_total_time`].
    pub fn with_defaults(a_typ: f64, noise: CouplingSpec, seed: u64, total_time: f64) -> Self {
        TrajectoryConfig {
            time_step: DEFAULT_TIME_STEP / a_typ,
            total_time,
            trajectory_count: DEFAULT_TRAJECTORIES,
            seed,
            noise,
        }
    }
}

/// Golden-rule estimate `|M|^2 S(omega)` of the ground-LEM transition rate
/// for classical noise with spectral density `S`.
pub fn golden_rule_rate(report: &RateReport, noise: NoiseModel) -> f64 {
    report.matrix_element.powi(2) * noise.spectral_density(report.splitting)
}

/// `20 / predicted_rate`, capped at [`MAX_STEPS`] steps.
pub fn default_total_time(predicted_rate: f64, time_step: f64) -> f64 {
    let cap = MAX_STEPS as f64 * time_step;
    if predicted_rate > 0.0 {
        (20.0 / predicted_rate).min(cap)
    } else {
        cap
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceTrace {
    pub times: Vec<f64>,
    pub coherence: Vec<f64>,
    /// Monte-Carlo standard error of each coherence sample.
    pub mc_error: Vec<f64>,
    pub fitted_rate: f64,
    /// R^2 of the log-linear fit; zero when no fit was possible.
    pub fit_quality: f64,
    /// Set when the coherence never entered the fit window; `fitted_rate`
    /// is then an upper limit.
    pub upper_limit: bool,
    pub window_points: usize,
    pub trajectory_count: usize,
}

/// Chooses the pair from the landscape (global minimum and the farthest
/// local minimum, or the bitwise complement when there is none) and evolves
/// their superposition.
pub fn evolve_superposition(
    params: &ClusterParams,
    eig: &EigenSystem,
    tcfg: &TrajectoryConfig,
) -> Result<CoherenceTrace> {
    let (ground, partner) = superposition_anchors(params)?;
    let ground = dress(eig, ground)?;
    let partner = dress(eig, partner)?;
    evolve_pair(params, eig, &ground, &partner, tcfg)
}

pub fn evolve_pair(
    params: &ClusterParams,
    eig: &EigenSystem,
    ground: &DressedState,
    partner: &DressedState,
    tcfg: &TrajectoryConfig,
) -> Result<CoherenceTrace> {
    const OP: &str = "dynamics::evolve_superposition";
    let n = params.n();
    if n > MAX_DYNAMICS_SPINS {
        return Err(Error::capacity(
            OP,
            format!("n = {n} exceeds the trajectory budget of {MAX_DYNAMICS_SPINS}"),
        ));
    }
    if tcfg.noise.n() != n || ground.n() != n || partner.n() != n || eig.n() != n {
        return Err(Error::dimension(
            OP,
            "cluster, eigensystem, dressed states and noise disagree on n",
        ));
    }
    if ground.eigenindex == partner.eigenindex {
        return Err(Error::domain(OP, "ground and partner dress the same eigenstate"));
    }
    if tcfg.trajectory_count == 0 {
        return Err(Error::validation(OP, "trajectory_count must be at least 1"));
    }
    if !(tcfg.time_step > 0.0 && tcfg.time_step.is_finite()) || !(tcfg.total_time > 0.0 && tcfg.total_time.is_finite())
    {
        return Err(Error::validation(OP, "time_step and total_time must be positive"));
    }
    let stiffness = tcfg.time_step * eig.spread();
    if stiffness > STABILITY_LIMIT {
        return Err(Error::StepSize {
            op: OP,
            msg: format!("time_step x spread = {stiffness:.4} exceeds {STABILITY_LIMIT}"),
        });
    }
    let steps = (tcfg.total_time / tcfg.time_step).round().max(1.0) as u64;
    if steps > MAX_STEPS {
        return Err(Error::capacity(
            OP,
            format!("{steps} steps exceed the limit of {MAX_STEPS}"),
        ));
    }
    let sample_every = (steps / TARGET_SAMPLES).max(1);

    let mid = 0.5 * (ground.energy + partner.energy);
    let omega = partner.energy - ground.energy;
    let system = Propagator {
        n,
        energies: params.classical_energies().into_iter().map(|e| e - mid).collect(),
        tunneling: params.tunneling().to_vec(),
        f: tcfg.noise.f().to_vec(),
        g: tcfg.noise.g().to_vec(),
        noise: tcfg.noise.noise(),
        dt: tcfg.time_step,
    };
    let initial: Vec<Complex64> = ground
        .amplitudes
        .iter()
        .zip(&partner.amplitudes)
        .map(|(a, b)| Complex64::new((a + b) / std::f64::consts::SQRT_2, 0.0))
        .collect();
    let norm = initial.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let initial: Vec<Complex64> = initial.iter().map(|c| c / norm).collect();

    let mut trajectories: Vec<Trajectory> = (0..tcfg.trajectory_count)
        .map(|k| system.start(initial.clone(), tcfg.seed, k as u64))
        .collect();

    let mut times = Vec::new();
    let mut coherence = Vec::new();
    let mut mc_error = Vec::new();
    let mut done = 0u64;
    loop {
        let t = done as f64 * tcfg.time_step;
        let (c, err) = sample(&trajectories, ground, partner, omega * t);
        times.push(t);
        coherence.push(c);
        mc_error.push(err);
        if done >= steps || c < STOP_COHERENCE {
            break;
        }
        // geometric spacing early so fast decays are still resolved
        let block = sample_every.min((done / 20).max(1)).min(steps - done);
        trajectories
            .par_iter_mut()
            .try_for_each(|tr| system.advance(tr, block))?;
        done += block;
    }

    let (fitted_rate, fit_quality, upper_limit, window_points) = fit_decay(&times, &coherence);
    Ok(CoherenceTrace {
        times,
        coherence,
        mc_error,
        fitted_rate,
        fit_quality,
        upper_limit,
        window_points,
        trajectory_count: tcfg.trajectory_count,
    })
}

fn sample(trajectories: &[Trajectory], ground: &DressedState, partner: &DressedState, phase: f64) -> (f64, f64) {
    let rot = Complex64::from_polar(1.0, phase);
    let values: Vec<Complex64> = trajectories
        .iter()
        .map(|tr| {
            let (mut gre, mut gim) = (CompensatedSum::default(), CompensatedSum::default());
            let (mut lre, mut lim) = (CompensatedSum::default(), CompensatedSum::default());
            for (k, psi) in tr.psi.iter().enumerate() {
                gre.add(ground.amplitudes[k] * psi.re);
                gim.add(ground.amplitudes[k] * psi.im);
                lre.add(partner.amplitudes[k] * psi.re);
                lim.add(partner.amplitudes[k] * psi.im);
            }
            let cg = Complex64::new(gre.value(), gim.value());
            let cl = Complex64::new(lre.value(), lim.value());
            cg.conj() * cl * rot
        })
        .collect();
    let count = values.len() as f64;
    let re: CompensatedSum = values.iter().map(|v| v.re).collect();
    let im: CompensatedSum = values.iter().map(|v| v.im).collect();
    let mean = Complex64::new(re.value() / count, im.value() / count);
    let err = if values.len() > 1 {
        let var: CompensatedSum = values.iter().map(|v| (v - mean).norm_sqr()).collect();
        (var.value() / (count * (count - 1.0))).sqrt()
    } else {
        0.0
    };
    (mean.norm(), err)
}

/// Returns `(rate, r_squared, upper_limit, points)`.
fn fit_decay(times: &[f64], coherence: &[f64]) -> (f64, f64, bool, usize) {
    let (lo, hi) = FIT_WINDOW;
    let (xs, ys): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(coherence)
        .filter(|(_, &c)| c >= lo && c <= hi)
        .map(|(&t, &c)| (t, c.ln()))
        .unzip();
    if xs.len() >= 3 {
        if let Some(fit) = linear_fit(&xs, &ys) {
            return (-fit.slope, fit.r_squared, false, xs.len());
        }
    }
    let t_end = *times.last().unwrap();
    let min_c = coherence.iter().copied().fold(f64::INFINITY, f64::min);
    if min_c > hi {
        // never reached the window: decay slower than this
        let limit = if t_end > 0.0 {
            (0.5 / hi).ln() / t_end
        } else {
            f64::INFINITY
        };
        return (limit, 0.0, true, xs.len());
    }
    // passed through the window between samples
    let (t, c) = times
        .iter()
        .zip(coherence)
        .find(|(_, &c)| c <= hi)
        .map(|(&t, &c)| (t, c))
        .unwrap();
    let rate = if t > 0.0 {
        (0.5 / c.max(f64::MIN_POSITIVE)).ln() / t
    } else {
        f64::INFINITY
    };
    (rate, 0.0, false, xs.len())
}

struct Propagator {
    n: usize,
    energies: Vec<f64>,
    tunneling: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    noise: NoiseModel,
    dt: f64,
}

struct Trajectory {
    psi: Vec<Complex64>,
    xi: Vec<f64>,
    eta: Vec<f64>,
    rng: ChaCha8Rng,
    scratch: Scratch,
    steps_taken: u64,
}

struct Scratch {
    diag: Vec<f64>,
    off: Vec<f64>,
    k: [Vec<Complex64>; 4],
    tmp: Vec<Complex64>,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

impl Propagator {
    fn start(&self, psi: Vec<Complex64>, seed: u64, index: u64) -> Trajectory {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let dim = psi.len();
        let (xi, eta) = match self.noise {
            NoiseModel::Exponential { .. } => {
                let xi = (0..self.n).map(|_| normal(&mut rng)).collect();
                let eta = (0..self.n).map(|_| normal(&mut rng)).collect();
                (xi, eta)
            }
            NoiseModel::White => (vec![0.0; self.n], vec![0.0; self.n]),
        };
        let zeros = vec![Complex64::new(0.0, 0.0); dim];
        Trajectory {
            psi,
            xi,
            eta,
            rng,
            scratch: Scratch {
                diag: vec![0.0; dim],
                off: vec![0.0; self.n],
                k: [zeros.clone(), zeros.clone(), zeros.clone(), zeros.clone()],
                tmp: zeros,
            },
            steps_taken: 0,
        }
    }

    fn advance(&self, tr: &mut Trajectory, steps: u64) -> Result<()> {
        for _ in 0..steps {
            self.step(tr)?;
        }
        Ok(())
    }

    fn step(&self, tr: &mut Trajectory) -> Result<()> {
        let n = self.n;
        let dt = self.dt;
        if let NoiseModel::White = self.noise {
            let s = dt.sqrt().recip();
            for i in 0..n {
                tr.xi[i] = normal(&mut tr.rng) * s;
            }
            for i in 0..n {
                tr.eta[i] = normal(&mut tr.rng) * s;
            }
        }
        let sc = &mut tr.scratch;
        for (x, d) in sc.diag.iter_mut().enumerate() {
            let mut v = self.energies[x];
            for i in 0..n {
                let s = if x >> i & 1 == 1 { 1.0 } else { -1.0 };
                v += self.f[i] * tr.xi[i] * s;
            }
            *d = v;
        }
        for i in 0..n {
            sc.off[i] = self.tunneling[i] + self.g[i] * tr.eta[i];
        }

        let Scratch { diag, off, k, tmp } = sc;
        let [k1, k2, k3, k4] = k;
        derivative(diag, off, &tr.psi, k1);
        axpy(&tr.psi, 0.5 * dt, k1, tmp);
        derivative(diag, off, tmp, k2);
        axpy(&tr.psi, 0.5 * dt, k2, tmp);
        derivative(diag, off, tmp, k3);
        axpy(&tr.psi, dt, k3, tmp);
        derivative(diag, off, tmp, k4);
        for x in 0..tr.psi.len() {
            tr.psi[x] += (k1[x] + 2.0 * k2[x] + 2.0 * k3[x] + k4[x]) * (dt / 6.0);
        }
        let norm = tr.psi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_DRIFT_LIMIT || !norm.is_finite() {
            return Err(Error::StepSize {
                op: "dynamics::evolve_superposition",
                msg: format!("norm drifted to {norm:.6} at step {}", tr.steps_taken + 1),
            });
        }
        for c in tr.psi.iter_mut() {
            *c /= norm;
        }
        tr.steps_taken += 1;

        if let NoiseModel::Exponential { tau } = self.noise {
            let a = (-dt / tau).exp();
            let b = (1.0 - a * a).sqrt();
            for i in 0..n {
                tr.xi[i] = a * tr.xi[i] + b * normal(&mut tr.rng);
            }
            for i in 0..n {
                tr.eta[i] = a * tr.eta[i] + b * normal(&mut tr.rng);
            }
        }
        Ok(())
    }
}

/// `out = -i H psi` for diagonal `diag` and flip amplitudes `off`.
fn derivative(diag: &[f64], off: &[f64], psi: &[Complex64], out: &mut [Complex64]) {
    for x in 0..psi.len() {
        let mut h = psi[x] * diag[x];
        for (i, &o) in off.iter().enumerate() {
            h += psi[x ^ (1 << i)] * o;
        }
        out[x] = Complex64::new(h.im, -h.re);
    }
}

fn axpy(base: &[Complex64], a: f64, k: &[Complex64], out: &mut [Complex64]) {
    for x in 0..base.len() {
        out[x] = base[x] + k[x] * a;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    /// Rate per unit `rate_ratio` measured at the reference point.
    pub r0: f64,
}

impl Calibration {
    pub fn from_reference(trace: &CoherenceTrace, report: &RateReport) -> Result<Self> {
        const OP: &str = "dynamics::rate_vs_prediction";
        if trace.upper_limit || trace.fit_quality < MIN_FIT_QUALITY {
            return Err(Error::insufficient(
                OP,
                format!(
                    "reference fit unusable (R^2 = {:.3}, upper limit: {})",
                    trace.fit_quality, trace.upper_limit
                ),
            ));
        }
        if !(report.rate_ratio > 0.0) {
            return Err(Error::insufficient(OP, "reference rate ratio is zero"));
        }
        Ok(Calibration {
            r0: trace.fitted_rate / report.rate_ratio,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Consistent,
    Inconsistent,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Consistent => "consistent",
            Verdict::Inconsistent => "inconsistent",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateComparison {
    pub fitted_rate: f64,
    pub predicted_rate: f64,
    /// `fitted / predicted`; `None` when nothing is predicted.
    pub ratio: Option<f64>,
    pub verdict: Verdict,
}

pub fn rate_vs_prediction(trace: &CoherenceTrace, report: &RateReport, calibration: Calibration) -> RateComparison {
    let predicted_rate = calibration.r0 * report.rate_ratio;
    let fitted_rate = trace.fitted_rate;
    if trace.upper_limit {
        // no decay observed: consistent as long as the prediction is below
        // the limit
        let verdict = if predicted_rate <= CONSISTENCY_FACTOR * fitted_rate {
            Verdict::Consistent
        } else {
            Verdict::Inconsistent
        };
        let ratio = (predicted_rate > 0.0).then(|| fitted_rate / predicted_rate);
        return RateComparison {
            fitted_rate,
            predicted_rate,
            ratio,
            verdict,
        };
    }
    if trace.fit_quality < MIN_FIT_QUALITY || predicted_rate <= 0.0 {
        let ratio = (predicted_rate > 0.0).then(|| fitted_rate / predicted_rate);
        return RateComparison {
            fitted_rate,
            predicted_rate,
            ratio,
            verdict: Verdict::Inconclusive,
        };
    }
    let ratio = fitted_rate / predicted_rate;
    let verdict = if (1.0 / CONSISTENCY_FACTOR..=CONSISTENCY_FACTOR).contains(&ratio) {
        Verdict::Consistent
    } else {
        Verdict::Inconsistent
    };
    RateComparison {
        fitted_rate,
        predicted_rate,
        ratio: Some(ratio),
        verdict,
    }
}

/// Anchors of the pair used by [`evolve_superposition`].
pub fn superposition_anchors(params: &ClusterParams) -> Result<(SpinConfig, SpinConfig)> {
    let landscape = find_local_minima(params, None)?;
    Ok((landscape.global_minimum, landscape.partner()))
}
