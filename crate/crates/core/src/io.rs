//! Run configuration text and CSV output.
//!
//! Configuration is sectioned `key = value` text:
//!
//! ```text
//! seed = 7
//!
//! [cluster]
//! n = 3
//! j = -1          # uniform coupling; or give [couplings] upper = ...
//! b = 0.1         # scalar broadcasts to all spins
//! c = 0.01
//!
//! [noise]
//! kind = exponential
//! tau = 10        # units of 1 / A_typ
//! ratio = 0.01    # sets c, f, g = ratio * A_typ when they are absent
//! ```
//!
//! Couplings are the pair values `J_ij` of `sum_{i<j} J_ij s_i s_j`. A
//! coefficient written for a double sum over `i != j` must be doubled.
//! Times in `[dynamics]` are in units of `1 / A_typ`. Lines without `=`
//! continue the previous value, which is convenient for coupling blocks.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use crate::cluster::{ClusterParams, SpinConfig, MAX_SPINS};
use crate::dynamics::CoherenceTrace;
use crate::error::{Error, Result};
use crate::perturbation::PathSumResult;
use crate::spectrum::{find_local_minima, typical_level_spacing, EigenSystem, LandscapeReport, OverlapDecay};
use crate::sweep::{Channels, DynamicsSettings, Family, NoiseSetting, SweepGrid, SweepRow};
use crate::transition::{BoundVerdict, CouplingSpec, RateReport, DEFAULT_CORRELATION_TIME};
use crate::VERSION;

const OP: &str = "io::parse_config";

const SECTIONS: &[(&str, &[&str])] = &[
    ("", &["seed"]),
    ("cluster", &["n", "j", "b", "c", "a_typ", "eps_deg"]),
    ("couplings", &["upper", "full"]),
    ("noise", &["kind", "tau", "f", "g", "ratio"]),
    ("dynamics", &["time_step", "total_time", "trajectories"]),
    ("sweep", &["n", "ratio", "coupling", "bias", "channels"]),
    ("output", &["path"]),
];

/// A single cluster with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterConfig {
    pub params: ClusterParams,
    /// Dephasing amplitudes `f_i`.
    pub f: Vec<f64>,
    /// Flip amplitudes `g_i`.
    pub g: Vec<f64>,
    pub a_typ: f64,
    pub eps_deg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub n_values: Vec<usize>,
    pub ratio_values: Vec<f64>,
    pub coupling: f64,
    pub bias: f64,
    pub channels: Channels,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub cluster: Option<ClusterConfig>,
    pub noise: NoiseSetting,
    pub ratio: Option<f64>,
    pub dynamics: DynamicsSettings,
    pub sweep: Option<SweepConfig>,
    pub output: Option<String>,
}

impl RunConfig {
    pub fn cluster(&self) -> Result<&ClusterConfig> {
        self.cluster
            .as_ref()
            .ok_or_else(|| Error::validation("io::RunConfig", "this command needs a [cluster] section"))
    }

    pub fn coupling(&self) -> Result<CouplingSpec> {
        let c = self.cluster()?;
        CouplingSpec::new(c.f.clone(), c.g.clone(), self.noise.resolve(c.a_typ))
    }

    pub fn sweep_grid(&self) -> Result<SweepGrid> {
        let s = self
            .sweep
            .as_ref()
            .ok_or_else(|| Error::validation("io::RunConfig", "this command needs a [sweep] section"))?;
        Ok(SweepGrid {
            n_values: s.n_values.clone(),
            ratio_values: s.ratio_values.clone(),
            family: Family::UniformFerromagnet {
                coupling: s.coupling,
                bias: s.bias,
            },
            channels: s.channels,
            noise: self.noise,
            dynamics: self.dynamics,
            seed: self.seed,
        })
    }

    /// Canonical text; `parse_config(&cfg.render())` returns `cfg`.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "seed = {}", self.seed);
        if let Some(c) = &self.cluster {
            let p = &c.params;
            let _ = writeln!(s, "\n[cluster]\nn = {}", p.n());
            let _ = writeln!(s, "b = {}", reals(p.bias()));
            let _ = writeln!(s, "c = {}", reals(p.tunneling()));
            let _ = writeln!(s, "a_typ = {}", real(c.a_typ));
            let _ = writeln!(s, "eps_deg = {}", real(c.eps_deg));
            if p.n() > 1 {
                let _ = writeln!(s, "\n[couplings]\nupper = {}", reals(&p.upper_triangle()));
            }
        }
        s.push_str("\n[noise]\n");
        match self.noise {
            NoiseSetting::White => s.push_str("kind = white\n"),
            NoiseSetting::Exponential { tau } => {
                let _ = writeln!(s, "kind = exponential\ntau = {}", real(tau));
            }
        }
        if let Some(r) = self.ratio {
            let _ = writeln!(s, "ratio = {}", real(r));
        }
        if let Some(c) = &self.cluster {
            let _ = writeln!(s, "f = {}\ng = {}", reals(&c.f), reals(&c.g));
        }
        let d = &self.dynamics;
        let _ = writeln!(s, "\n[dynamics]\ntime_step = {}", real(d.time_step));
        if let Some(t) = d.total_time {
            let _ = writeln!(s, "total_time = {}", real(t));
        }
        let _ = writeln!(s, "trajectories = {}", d.trajectories);
        if let Some(sw) = &self.sweep {
            let ns: Vec<String> = sw.n_values.iter().map(|n| n.to_string()).collect();
            let _ = writeln!(s, "\n[sweep]\nn = {}", ns.join(" "));
            let _ = writeln!(s, "ratio = {}", reals(&sw.ratio_values));
            let _ = writeln!(s, "coupling = {}\nbias = {}", real(sw.coupling), real(sw.bias));
            let names = sw.channels.names();
            let _ = writeln!(
                s,
                "channels = {}",
                if names.is_empty() {
                    "none".to_string()
                } else {
                    names.join(" ")
                }
            );
        }
        if let Some(path) = &self.output {
            let _ = writeln!(s, "\n[output]\npath = {path}");
        }
        s
    }
}

/// Shortest text that reads back as the same double: 17 significant digits.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn reals(xs: &[f64]) -> String {
    xs.iter().map(|x| real(*x)).collect::<Vec<_>>().join(" ")
}

struct Entry {
    line: usize,
    value: String,
}

struct Document {
    sections: BTreeMap<&'static str, (usize, BTreeMap<&'static str, Entry>)>,
}

fn lex(text: &str) -> Result<Document> {
    let mut sections: BTreeMap<&'static str, (usize, BTreeMap<&'static str, Entry>)> = BTreeMap::new();
    sections.insert("", (0, BTreeMap::new()));
    let mut current: &'static str = "";
    let mut last_key: Option<&'static str> = None;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(rest) = body.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::Syntax {
                    line,
                    msg: format!("malformed section header `{body}`"),
                })?
                .trim();
            let &(known, _) = SECTIONS
                .iter()
                .find(|(s, _)| !s.is_empty() && *s == name)
                .ok_or_else(|| Error::Syntax {
                    line,
                    msg: format!("unknown section [{name}]"),
                })?;
            if sections.contains_key(known) {
                return Err(Error::Syntax {
                    line,
                    msg: format!("section [{name}] repeated"),
                });
            }
            sections.insert(known, (line, BTreeMap::new()));
            current = known;
            last_key = None;
            continue;
        }
        let entries = &mut sections.get_mut(current).expect("current section exists").1;
        match body.split_once('=') {
            Some((key, value)) => {
                let key = key.trim();
                let keys = SECTIONS
                    .iter()
                    .find(|(s, _)| *s == current)
                    .map(|(_, k)| *k)
                    .unwrap_or(&[]);
                let &known = keys.iter().find(|k| **k == key).ok_or_else(|| Error::UnknownKey {
                    line,
                    section: current.to_string(),
                    key: key.to_string(),
                })?;
                if entries.contains_key(known) {
                    return Err(Error::Syntax {
                        line,
                        msg: format!("key `{key}` repeated"),
                    });
                }
                let value = value.trim();
                if value.is_empty() {
                    return Err(Error::Syntax {
                        line,
                        msg: format!("key `{key}` has no value"),
                    });
                }
                entries.insert(
                    known,
                    Entry {
                        line,
                        value: value.to_string(),
                    },
                );
                last_key = Some(known);
            }
            None => {
                let key = last_key.ok_or_else(|| Error::Syntax {
                    line,
                    msg: format!("expected `key = value`, got `{body}`"),
                })?;
                let e = entries.get_mut(key).expect("last key recorded");
                e.value.push(' ');
                e.value.push_str(body);
            }
        }
    }
    Ok(Document { sections })
}

impl Document {
    fn has(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    fn entry(&self, section: &str, key: &str) -> Option<&Entry> {
        self.sections.get(section).and_then(|(_, m)| m.get(key))
    }

    fn parse<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<T>> {
        self.entry(section, key)
            .map(|e| {
                e.value.parse::<T>().map_err(|_| Error::Syntax {
                    line: e.line,
                    msg: format!("`{}` is not a valid value for `{}`", e.value, dotted(section, key)),
                })
            })
            .transpose()
    }

    fn list<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<Vec<T>>> {
        self.entry(section, key)
            .map(|e| {
                e.value
                    .split_whitespace()
                    .map(|tok| {
                        tok.parse::<T>().map_err(|_| Error::Syntax {
                            line: e.line,
                            msg: format!("`{tok}` is not a valid entry for `{}`", dotted(section, key)),
                        })
                    })
                    .collect()
            })
            .transpose()
    }

    fn real(&self, section: &str, key: &str) -> Result<Option<f64>> {
        let v: Option<f64> = self.parse(section, key)?;
        if let Some(x) = v {
            if !x.is_finite() {
                return Err(Error::validation(
                    OP,
                    format!("`{}` must be finite", dotted(section, key)),
                ));
            }
        }
        Ok(v)
    }

    fn reals(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>> {
        let v: Option<Vec<f64>> = self.list(section, key)?;
        if let Some(xs) = &v {
            if xs.iter().any(|x| !x.is_finite()) {
                return Err(Error::validation(
                    OP,
                    format!("`{}` must be finite", dotted(section, key)),
                ));
            }
        }
        Ok(v)
    }

    /// A scalar broadcast to `n` entries, or exactly `n` entries.
    fn per_spin(&self, section: &str, key: &str, n: usize) -> Result<Option<Vec<f64>>> {
        match self.reals(section, key)? {
            None => Ok(None),
            Some(v) if v.len() == 1 => Ok(Some(vec![v[0]; n])),
            Some(v) if v.len() == n => Ok(Some(v)),
            Some(v) => Err(Error::dimension(
                OP,
                format!(
                    "key `{}` has {} entries, expected 1 or n = {n}",
                    dotted(section, key),
                    v.len()
                ),
            )),
        }
    }
}

fn dotted(section: &str, key: &str) -> String {
    if section.is_empty() {
        key.to_string()
    } else {
        format!("{section}.{key}")
    }
}

fn positive(v: Option<f64>, name: &str) -> Result<Option<f64>> {
    match v {
        Some(x) if !(x > 0.0) => Err(Error::validation(OP, format!("`{name}` must be positive, got {x}"))),
        _ => Ok(v),
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let doc = lex(text)?;
    let seed = doc.parse::<u64>("", "seed")?.unwrap_or(0);

    let ratio = positive(doc.real("noise", "ratio")?, "noise.ratio")?;
    let kind: Option<String> = doc.parse("noise", "kind")?;
    let tau = positive(doc.real("noise", "tau")?, "noise.tau")?;
    let noise = match kind.as_deref().unwrap_or("exponential") {
        "white" if tau.is_some() => return Err(Error::validation(OP, "`noise.tau` given for white noise")),
        "white" => NoiseSetting::White,
        "exponential" => NoiseSetting::Exponential {
            tau: tau.unwrap_or(DEFAULT_CORRELATION_TIME),
        },
        other => {
            return Err(Error::validation(
                OP,
                format!("`noise.kind` must be white or exponential, got `{other}`"),
            ))
        }
    };

    let defaults = DynamicsSettings::default();
    let trajectories = doc
        .parse::<usize>("dynamics", "trajectories")?
        .unwrap_or(defaults.trajectories);
    if trajectories == 0 {
        return Err(Error::validation(OP, "`dynamics.trajectories` must be positive"));
    }
    let dynamics = DynamicsSettings {
        time_step: positive(doc.real("dynamics", "time_step")?, "dynamics.time_step")?.unwrap_or(defaults.time_step),
        total_time: positive(doc.real("dynamics", "total_time")?, "dynamics.total_time")?,
        trajectories,
    };

    let cluster = if doc.has("cluster") {
        Some(parse_cluster(&doc, ratio)?)
    } else {
        for (s, k) in [("couplings", None), ("noise", Some("f")), ("noise", Some("g"))] {
            let present = match k {
                None => doc.has(s),
                Some(k) => doc.entry(s, k).is_some(),
            };
            if present {
                return Err(Error::validation(
                    OP,
                    format!(
                        "[{s}]{} needs a [cluster] section",
                        k.map(|k| format!(" {k}")).unwrap_or_default()
                    ),
                ));
            }
        }
        None
    };

    let sweep = if doc.has("sweep") {
        Some(parse_sweep(&doc)?)
    } else {
        None
    };
    let output: Option<String> = doc.parse("output", "path")?;

    let cfg = RunConfig {
        seed,
        cluster,
        noise,
        ratio,
        dynamics,
        sweep,
        output,
    };
    if cfg.sweep.is_some() {
        cfg.sweep_grid()?.validate()?;
    }
    Ok(cfg)
}

fn parse_cluster(doc: &Document, ratio: Option<f64>) -> Result<ClusterConfig> {
    let n: usize = doc
        .parse("cluster", "n")?
        .ok_or_else(|| Error::validation(OP, "`cluster.n` is required"))?;
    if n == 0 {
        return Err(Error::validation(OP, "`cluster.n` must be positive"));
    }
    if n > MAX_SPINS {
        return Err(Error::capacity(OP, format!("`cluster.n` = {n} exceeds {MAX_SPINS}")));
    }
    let bias = doc.per_spin("cluster", "b", n)?.unwrap_or_else(|| vec![0.0; n]);
    let zero = vec![0.0; n];

    let j = doc.real("cluster", "j")?;
    let upper = doc.reals("couplings", "upper")?;
    let full = doc.reals("couplings", "full")?;
    let base = match (j, upper, full) {
        (Some(j), None, None) => ClusterParams::uniform(n, j, 0.0, 0.0)?.with_tunneling(zero.clone())?,
        (None, Some(u), None) => {
            let expected = n * (n - 1) / 2;
            if u.len() != expected {
                return Err(Error::dimension(
                    OP,
                    format!(
                        "key `couplings.upper` has {} entries, expected n(n-1)/2 = {expected}",
                        u.len()
                    ),
                ));
            }
            ClusterParams::from_upper_triangle(n, &u, zero.clone(), zero.clone())?
        }
        (None, None, Some(m)) => {
            if m.len() != n * n {
                return Err(Error::dimension(
                    OP,
                    format!("key `couplings.full` has {} entries, expected n^2 = {}", m.len(), n * n),
                ));
            }
            ClusterParams::new(n, m, zero.clone(), zero.clone())?
        }
        (None, None, None) if n == 1 => ClusterParams::uniform(1, 0.0, 0.0, 0.0)?,
        (None, None, None) => return Err(Error::validation(OP, "give `cluster.j` or a [couplings] block")),
        _ => {
            return Err(Error::validation(
                OP,
                "give exactly one of `cluster.j`, `couplings.upper`, `couplings.full`",
            ))
        }
    };
    let coupling = base.clone();
    let n_pairs: Vec<f64> = coupling.upper_triangle();
    let base = ClusterParams::from_upper_triangle(n, &n_pairs, bias, zero)?;

    let a_typ = match positive(doc.real("cluster", "a_typ")?, "cluster.a_typ")? {
        Some(a) => a,
        None => {
            let landscape = find_local_minima(&base, None)?;
            let anchor = landscape
                .farthest_minimum()
                .map(|m| m.config)
                .unwrap_or(landscape.global_minimum);
            typical_level_spacing(&base, anchor)?
        }
    };
    let eps_deg = match doc.real("cluster", "eps_deg")? {
        Some(e) if e < 0.0 => return Err(Error::validation(OP, "`cluster.eps_deg` must be non-negative")),
        Some(e) => e,
        None => base.default_degeneracy_tolerance(),
    };
    let derived = ratio.map(|r| vec![r * a_typ; n]);
    let tunneling = doc
        .per_spin("cluster", "c", n)?
        .or_else(|| derived.clone())
        .unwrap_or_else(|| vec![0.0; n]);
    let params = base.with_tunneling(tunneling)?;
    let f = doc
        .per_spin("noise", "f", n)?
        .or_else(|| derived.clone())
        .unwrap_or_else(|| params.tunneling().to_vec());
    let g = doc
        .per_spin("noise", "g", n)?
        .or(derived)
        .unwrap_or_else(|| params.tunneling().to_vec());
    CouplingSpec::new(f.clone(), g.clone(), NoiseSetting::White.resolve(a_typ))?;
    Ok(ClusterConfig {
        params,
        f,
        g,
        a_typ,
        eps_deg,
    })
}

fn parse_sweep(doc: &Document) -> Result<SweepConfig> {
    let n_values: Vec<usize> = doc
        .list("sweep", "n")?
        .ok_or_else(|| Error::validation(OP, "`sweep.n` is required"))?;
    let ratio_values = doc
        .reals("sweep", "ratio")?
        .ok_or_else(|| Error::validation(OP, "`sweep.ratio` is required"))?;
    let coupling = doc.real("sweep", "coupling")?.unwrap_or(-1.0);
    let bias = doc.real("sweep", "bias")?.unwrap_or(0.1);
    let channels = match doc.list::<String>("sweep", "channels")? {
        None => Channels::static_only(),
        Some(names) => {
            let mut ch = Channels::default();
            for name in &names {
                match name.as_str() {
                    "none" if names.len() == 1 => {}
                    "overlaps" => ch.overlaps = true,
                    "rates" => ch.rates = true,
                    "pathsums" => ch.path_sums = true,
                    "dynamics" => ch.dynamics = true,
                    other => {
                        return Err(Error::validation(
                            OP,
                            format!("unknown channel `{other}` in `sweep.channels`"),
                        ))
                    }
                }
            }
            ch
        }
    };
    Ok(SweepConfig {
        n_values,
        ratio_values,
        coupling,
        bias,
        channels,
    })
}

/// Rows of text fields under a fixed header.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Comment block written above the CSV header.
#[derive(Debug, Clone, PartialEq)]
pub struct Metadata {
    pub command: String,
    pub seed: u64,
    pub config: String,
    pub summary: Vec<(String, String)>,
}

impl Metadata {
    pub fn new(command: &str, cfg: &RunConfig) -> Self {
        Metadata {
            command: command.to_string(),
            seed: cfg.seed,
            config: cfg.render(),
            summary: Vec::new(),
        }
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.to_string(), value.to_string()));
    }
}

pub fn emit_csv<W: Write>(mut out: W, meta: &Metadata, table: &Table) -> Result<()> {
    const OP: &str = "io::emit_csv";
    let io = |source| Error::Io { op: OP, source };
    let mut head = String::new();
    let _ = writeln!(head, "# lemtrap {VERSION}");
    let _ = writeln!(head, "# command = {}", meta.command);
    let _ = writeln!(head, "# seed = {}", meta.seed);
    for line in meta.config.lines() {
        if line.is_empty() {
            continue;
        }
        let _ = writeln!(head, "# config: {line}");
    }
    for (k, v) in &meta.summary {
        let _ = writeln!(head, "# {k} = {v}");
    }
    out.write_all(head.as_bytes()).map_err(io)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(out);
    let csv_err = |e: csv::Error| Error::Io {
        op: OP,
        source: e.into(),
    };
    w.write_record(&table.header).map_err(csv_err)?;
    for row in &table.rows {
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush().map_err(io)?;
    Ok(())
}

fn opt(x: Option<f64>) -> String {
    x.map(real).unwrap_or_default()
}

pub fn spectrum_table(eig: &EigenSystem) -> Table {
    let mut t = Table::new(&["index", "eigenvalue", "dominant_config", "dominant_weight"]);
    let n = eig.n();
    for (k, &e) in eig.eigenvalues().iter().enumerate() {
        let col = eig.eigenvectors().column(k);
        let (idx, w) = col
            .iter()
            .enumerate()
            .map(|(i, a)| (i, a * a))
            .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        t.push(vec![
            k.to_string(),
            real(e),
            SpinConfig::from_index(idx, n).to_string(),
            real(w),
        ]);
    }
    t
}

pub fn landscape_table(report: &LandscapeReport) -> Table {
    let mut t = Table::new(&["role", "config", "energy", "barrier_distance"]);
    t.push(vec![
        "global".into(),
        report.global_minimum.to_string(),
        real(report.global_energy),
        "0".into(),
    ]);
    for m in &report.local_minima {
        t.push(vec![
            "local".into(),
            m.config.to_string(),
            real(m.energy),
            m.barrier_distance.to_string(),
        ]);
    }
    t
}

pub fn overlaps_table(decays: &[OverlapDecay]) -> Table {
    let mut t = Table::new(&["anchor", "distance", "max_amplitude", "log10_max_amplitude"]);
    for d in decays {
        for &(dist, amp) in &d.per_distance {
            t.push(vec![
                d.anchor.to_string(),
                dist.to_string(),
                real(amp),
                real(amp.log10()),
            ]);
        }
    }
    t
}

pub fn rates_table(report: &RateReport, verdict: &BoundVerdict) -> Table {
    let mut t = Table::new(&["channel", "spin", "value"]);
    for (i, v) in report.sigma_z.iter().enumerate() {
        t.push(vec!["sigma_z".into(), i.to_string(), real(*v)]);
    }
    for (i, v) in report.sigma_x.iter().enumerate() {
        t.push(vec!["sigma_x".into(), i.to_string(), real(*v)]);
    }
    for (name, v) in [
        ("matrix_element", report.matrix_element),
        ("splitting", report.splitting),
        ("coupling_scale", report.coupling_scale),
        ("rate_ratio", report.rate_ratio),
        ("a_typ", verdict.a_typ),
        ("size_bound", verdict.bound),
        ("bound_margin", verdict.margin),
    ] {
        t.push(vec![name.into(), String::new(), real(v)]);
    }
    t
}

pub fn pathsum_table(results: &[PathSumResult]) -> Table {
    let mut t = Table::new(&["source", "target", "order", "path_count", "amplitude", "rate_ratio"]);
    for r in results {
        t.push(vec![
            r.source.to_string(),
            r.target.to_string(),
            r.order.to_string(),
            r.path_count.to_string(),
            real(r.amplitude),
            real(r.rate_ratio),
        ]);
    }
    t
}

pub fn trace_table(trace: &CoherenceTrace) -> Table {
    let mut t = Table::new(&["time", "coherence", "mc_error"]);
    for k in 0..trace.times.len() {
        t.push(vec![
            real(trace.times[k]),
            real(trace.coherence[k]),
            real(trace.mc_error[k]),
        ]);
    }
    t
}

pub const SWEEP_HEADER: &[&str] = &[
    "n",
    "ratio",
    "a_typ",
    "matrix_element",
    "rate_ratio",
    "size_bound",
    "bound_margin",
    "lifetime_extension",
    "overlap_slope",
    "pathsum_slope",
    "fitted_dynamics_rate",
    "seed",
    "error",
];

pub fn sweep_table(rows: &[SweepRow]) -> Table {
    let mut t = Table::new(SWEEP_HEADER);
    for r in rows {
        t.push(vec![
            r.n.to_string(),
            real(r.ratio),
            opt(r.a_typ),
            opt(r.matrix_element),
            opt(r.rate_ratio),
            opt(r.size_bound),
            opt(r.bound_margin),
            opt(r.lifetime_extension),
            opt(r.overlap_slope),
            opt(r.pathsum_slope),
            opt(r.fitted_dynamics_rate),
            r.seed.to_string(),
            r.error.clone().unwrap_or_default(),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "
seed = 3
[cluster]
n = 3
j = -1
b = 0.1
c = 0.02   # broadcast
";

    #[test]
    fn scalar_broadcast() {
        let cfg = parse_config(MINIMAL).unwrap();
        let c = cfg.cluster.as_ref().unwrap();
        assert_eq!(c.params.bias(), &[0.1; 3]);
        assert_eq!(c.params.tunneling(), &[0.02; 3]);
        assert_eq!(c.f, vec![0.02; 3]);
        assert_eq!(c.params.coupling(0, 2), -1.0);
        assert!((c.a_typ - 3.8).abs() < 1e-12);
        assert_eq!(cfg.seed, 3);
    }

    #[test]
    fn wrong_bias_length_names_key() {
        let err = parse_config("[cluster]\nn = 3\nj = -1\nb = 0.1 0.2\n").unwrap_err();
        assert!(matches!(err, Error::Dimension { .. }));
        assert!(err.to_string().contains("cluster.b"), "{err}");
    }

    #[test]
    fn upper_triangle_block() {
        let text = "[cluster]\nn = 3\nb = 0.1\n[couplings]\nupper = -1 -0.5\n   -0.25\n";
        let cfg = parse_config(text).unwrap();
        let p = &cfg.cluster.as_ref().unwrap().params;
        assert_eq!(p.coupling(0, 1), -1.0);
        assert_eq!(p.coupling(2, 0), -0.5);
        assert_eq!(p.coupling(2, 1), -0.25);
        assert_eq!(parse_config(&cfg.render()).unwrap(), cfg);
    }

    #[test]
    fn asymmetric_full_matrix_rejected() {
        let text = "[cluster]\nn = 2\n[couplings]\nfull = 0 1\n 2 0\n";
        assert!(matches!(parse_config(text), Err(Error::Validation { .. })));
    }

    #[test]
    fn syntax_and_unknown_keys_carry_lines() {
        match parse_config("seed = 1\n[cluster]\nn = 2\nbias = 0.1\n") {
            Err(Error::UnknownKey { line: 4, section, key }) => {
                assert_eq!((section.as_str(), key.as_str()), ("cluster", "bias"))
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_config("[cluster\n"), Err(Error::Syntax { line: 1, .. })));
        assert!(matches!(
            parse_config("\n\n[bogus]\n"),
            Err(Error::Syntax { line: 3, .. })
        ));
        assert!(matches!(
            parse_config("orphan value\n"),
            Err(Error::Syntax { line: 1, .. })
        ));
        assert!(matches!(parse_config("seed = x\n"), Err(Error::Syntax { line: 1, .. })));
        assert!(matches!(
            parse_config("seed = 1\nseed = 2\n"),
            Err(Error::Syntax { line: 2, .. })
        ));
    }

    #[test]
    fn capacity_and_grid_checks() {
        assert!(matches!(
            parse_config("[cluster]\nn = 15\nj = -1\n"),
            Err(Error::Capacity { .. })
        ));
        assert!(matches!(
            parse_config("[sweep]\nn = 3 9\nratio = 0.01\n"),
            Err(Error::Capacity { .. })
        ));
        let cfg = parse_config("[sweep]\nn = 3 9\nratio = 0.01\nchannels = rates\n").unwrap();
        assert_eq!(
            cfg.sweep.unwrap().channels,
            Channels {
                rates: true,
                ..Default::default()
            }
        );
    }

    #[test]
    fn ratio_sets_amplitudes() {
        let cfg = parse_config("[cluster]\nn = 4\nj = -1\nb = 0.1\n[noise]\nratio = 0.01\nkind = white\n").unwrap();
        let c = cfg.cluster.as_ref().unwrap();
        assert!((c.a_typ - 5.8).abs() < 1e-12);
        assert!((c.params.tunneling()[0] - 0.058).abs() < 1e-15);
        assert_eq!(c.g, c.params.tunneling());
        assert_eq!(cfg.noise, NoiseSetting::White);
        assert_eq!(cfg.coupling().unwrap().noise(), crate::NoiseModel::White);
    }

    #[test]
    fn render_round_trip() {
        let text = "seed = 11\n[cluster]\nn = 2\nj = -0.7\nb = 0.1 -0.3\nc = 0.05\n[noise]\ntau = 4\nf = 0.01\n\
                    [dynamics]\ntotal_time = 30\n[sweep]\nn = 2 3 4\nratio = 0.01 0.003\nchannels = none\n[output]\npath = out.csv\n";
        let cfg = parse_config(text).unwrap();
        let again = parse_config(&cfg.render()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.render(), cfg.render());
    }

    #[test]
    fn reals_round_trip_exactly() {
        for x in [0.1, 1.0 / 3.0, -2.7, 1e-300, 6.02214076e23, f64::MIN_POSITIVE, 0.0] {
            assert_eq!(real(x).parse::<f64>().unwrap(), x);
        }
    }

    fn emit(table: &Table) -> String {
        let cfg = parse_config(MINIMAL).unwrap();
        let mut buf = Vec::new();
        emit_csv(&mut buf, &Metadata::new("sweep", &cfg), table).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn empty_table_is_header_and_metadata() {
        let text = emit(&sweep_table(&[]));
        let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body, vec![SWEEP_HEADER.join(",")]);
        assert!(text.starts_with("# lemtrap "));
        assert!(text.contains("# seed = 3"));
    }

    #[test]
    fn single_row_in_declared_order() {
        let row = SweepRow {
            n: 5,
            ratio: 0.01,
            a_typ: Some(7.8),
            size_bound: Some(1e-10),
            seed: 9,
            ..Default::default()
        };
        let text = emit(&sweep_table(std::slice::from_ref(&row)));
        let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body.len(), 2);
        let fields: Vec<&str> = body[1].split(',').collect();
        assert_eq!(fields.len(), SWEEP_HEADER.len());
        assert_eq!(fields[0], "5");
        assert_eq!(fields[1].parse::<f64>().unwrap(), row.ratio);
        assert_eq!(fields[2].parse::<f64>().unwrap(), 7.8);
        assert_eq!(fields[5].parse::<f64>().unwrap(), 1e-10);
        assert_eq!(fields[3], "");
        assert_eq!(fields[11], "9");
    }
}
