use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lemtrap::dynamics::{default_total_time, evolve_pair, golden_rule_rate, TrajectoryConfig};
use lemtrap::io::{self, Metadata, RunConfig, Table};
use lemtrap::sweep::SweepColumn;
use lemtrap::{
    build_hamiltonian, diagonalize, dress, find_local_minima, fit_size_scaling, matrix_element, multiphoton_path_sum,
    overlap_decay, run_sweep, scaling_exponent, Error, LandscapeReport,
};

#[derive(Parser)]
#[command(
    name = "lemtrap",
    version,
    about = "Coherence between the ground state and a local energy minimum of a pseudo-spin cluster"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues with their dominant configuration
    Spectrum(Common),
    /// Global minimum and local minima of the classical energy
    Landscape(Common),
    /// Dressed-state amplitude decay with Hamming distance
    Overlaps(Common),
    /// Ground to local-minimum matrix element and the size-scaling bound
    Rates(Common),
    /// Multi-flip perturbative path sums toward the local minimum
    Pathsum(Common),
    /// Noisy trajectories of the ground/local-minimum superposition
    Dynamics(Common),
    /// Grid over cluster size and coupling ratio
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output file; standard output when absent
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Overrides the seed in the config
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    #[arg(long)]
    quiet: bool,
}

struct Outcome {
    meta: Metadata,
    table: Table,
    summary: Vec<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let (name, common) = match &cli.command {
        Command::Spectrum(c) => ("spectrum", c),
        Command::Landscape(c) => ("landscape", c),
        Command::Overlaps(c) => ("overlaps", c),
        Command::Rates(c) => ("rates", c),
        Command::Pathsum(c) => ("pathsum", c),
        Command::Dynamics(c) => ("dynamics", c),
        Command::Sweep(c) => ("sweep", c),
    };
    match run(name, common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lemtrap {name}: {e}");
            ExitCode::from(e.category().exit_code() as u8)
        }
    }
}

fn run(name: &str, common: &Common) -> lemtrap::Result<()> {
    let text = fs::read_to_string(&common.config).map_err(|source| Error::Io {
        op: "cli::read_config",
        source,
    })?;
    let mut cfg = io::parse_config(&text)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let outcome = match name {
        "spectrum" => spectrum(&cfg)?,
        "landscape" => landscape(&cfg)?,
        "overlaps" => overlaps(&cfg)?,
        "rates" => rates(&cfg)?,
        "pathsum" => pathsum(&cfg)?,
        "dynamics" => dynamics(&cfg)?,
        "sweep" => sweep(&cfg)?,
        _ => unreachable!("clap only yields known subcommands"),
    };

    let mut buf = Vec::new();
    io::emit_csv(&mut buf, &outcome.meta, &outcome.table)?;
    let out = common.out.clone().or_else(|| cfg.output.as_ref().map(PathBuf::from));
    let write_err = |source| Error::Io {
        op: "cli::write_output",
        source,
    };
    match out {
        Some(path) => fs::write(path, &buf).map_err(write_err)?,
        None => std::io::stdout().lock().write_all(&buf).map_err(write_err)?,
    }
    if !common.quiet {
        for line in &outcome.summary {
            eprintln!("{line}");
        }
    }
    Ok(())
}

impl Outcome {
    fn new(name: &str, cfg: &RunConfig, table: Table) -> Self {
        Outcome {
            meta: Metadata::new(name, cfg),
            table,
            summary: Vec::new(),
        }
    }

    fn note(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        self.summary.push(format!("{key}: {value}"));
        self.meta.note(key, value);
    }
}

fn landscape_of(cfg: &RunConfig) -> lemtrap::Result<LandscapeReport> {
    let c = cfg.cluster()?;
    find_local_minima(&c.params, Some(c.eps_deg))
}

fn spectrum(cfg: &RunConfig) -> lemtrap::Result<Outcome> {
    let c = cfg.cluster()?;
    let eig = diagonalize(&build_hamiltonian(&c.params)?)?;
    let mut o = Outcome::new("spectrum", cfg, io::spectrum_table(&eig));
    let e = eig.eigenvalues();
    o.note("ground_energy", io::real(e[0]));
    if e.len() > 1 {
        o.note("first_gap", io::real(e[1] - e[0]));
    }
    Ok(o)
}

fn landscape(cfg: &RunConfig) -> lemtrap::Result<Outcome> {
    let report = landscape_of(cfg)?;
    let mut o = Outcome::new("landscape", cfg, io::landscape_table(&report));
    o.note("global_minimum", report.global_minimum);
    let lems: Vec<String> = report.local_minima.iter().map(|m| m.config.to_string()).collect();
    o.note(
        "local_minima",
        if lems.is_empty() {
            "none".to_string()
        } else {
            lems.join(" ")
        },
    );
    o.note("degenerate", report.degenerate);
    Ok(o)
}

fn overlaps(cfg: &RunConfig) -> lemtrap::Result<Outcome> {
    let c = cfg.cluster()?;
    let report = landscape_of(cfg)?;
    let eig = diagonalize(&build_hamiltonian(&c.params)?)?;
    let anchors = std::iter::once(report.global_minimum).chain(report.local_minima.iter().map(|m| m.config));
    let decays = anchors
        .map(|a| overlap_decay(&dress(&eig, a)?))
        .collect::<lemtrap::Result<Vec<_>>>()?;
    let mut o = Outcome::new("overlaps", cfg, io::overlaps_table(&decays));
    for d in &decays {
        let slope = d.slope.map(io::real).unwrap_or_else(|| "none".into());
        o.note(&format!("slope_{}", d.anchor), slope);
    }
    Ok(o)
}

fn rates(cfg: &RunConfig) -> lemtrap::Result<Outcome> {
    let c = cfg.cluster()?;
    let report = landscape_of(cfg)?;
    let lem = report.farthest_minimum().ok_or_else(no_lem)?.config;
    let eig = diagonalize(&build_hamiltonian(&c.params)?)?;
    let coupling = cfg.coupling()?;
    let rr = matrix_element(&dress(&eig, report.global_minimum)?, &dress(&eig, lem)?, &coupling)?;
    let verdict = lemtrap::transition::check_bound_with_spacing(&rr, &c.params, &coupling, c.a_typ)?;
    let mut o = Outcome::new("rates", cfg, io::rates_table(&rr, &verdict));
    o.note("rate_ratio", io::real(rr.rate_ratio));
    o.note("size_bound", io::real(verdict.bound));
    o.note("bound_satisfied", verdict.satisfied);
    if let Some(r) = cfg.ratio {
        o.note(
            "lifetime_extension",
            io::real(lemtrap::lifetime_extension(c.params.n(), r)?),
        );
    }
    Ok(o)
}

fn no_lem() -> Error {
    Error::Domain {
        op: "cli::anchors",
        msg: "the landscape has no local energy minimum".into(),
    }
}

fn pathsum(cfg: &RunConfig) -> lemtrap::Result<Outcome> {
    let c = cfg.cluster()?;
    let report = landscape_of(cfg)?;
    let source = report.global_minimum;
    let target = report.partner();
    let coupling = cfg.coupling()?;
    let mut results = Vec::new();
    let mut z = source;
    for i in (0..c.params.n()).filter(|&i| source.bit(i) != target.bit(i)) {
        z = z.flipped(i);
        results.push(multiphoton_path_sum(&c.params, &coupling, source, z)?);
    }
    let mut o = Outcome::new("pathsum", cfg, io::pathsum_table(&results));
    let pts: Vec<(u32, f64)> = results.iter().map(|r| (r.order, r.amplitude)).collect();
    match scaling_exponent(&pts) {
        Ok(s) => o.note("log10_amplitude_per_order", io::real(s)),
        Err(_) => o.note("log10_amplitude_per_order", "too few orders"),
    }
    Ok(o)
}

fn dynamics(cfg: &RunConfig) -> lemtrap::Result<Outcome> {
    let c = cfg.cluster()?;
    let report = landscape_of(cfg)?;
    let eig = diagonalize(&build_hamiltonian(&c.params)?)?;
    let ground = dress(&eig, report.global_minimum)?;
    let partner = dress(&eig, report.partner())?;
    let coupling = cfg.coupling()?;
    let rr = matrix_element(&ground, &partner, &coupling)?;
    let predicted = golden_rule_rate(&rr, coupling.noise());
    let dt = cfg.dynamics.time_step / c.a_typ;
    let total_time = match cfg.dynamics.total_time {
        Some(t) => t / c.a_typ,
        None => default_total_time(predicted, dt),
    };
    let tcfg = TrajectoryConfig {
        time_step: dt,
        total_time,
        trajectory_count: cfg.dynamics.trajectories,
        seed: cfg.seed,
        noise: coupling,
    };
    let trace = evolve_pair(&c.params, &eig, &ground, &partner, &tcfg)?;
    let mut o = Outcome::new("dynamics", cfg, io::trace_table(&trace));
    o.note("fitted_rate", io::real(trace.fitted_rate));
    o.note("upper_limit", trace.upper_limit);
    o.note("fit_quality", io::real(trace.fit_quality));
    o.note("golden_rule_rate", io::real(predicted));
    Ok(o)
}

fn sweep(cfg: &RunConfig) -> lemtrap::Result<Outcome> {
    let grid = cfg.sweep_grid()?;
    let rows = run_sweep(&grid)?;
    let mut o = Outcome::new("sweep", cfg, io::sweep_table(&rows));
    o.note("rows", rows.len());
    o.note("failed_rows", rows.iter().filter(|r| r.error.is_some()).count());
    if grid.channels.rates {
        for &r in &grid.ratio_values {
            let at: Vec<_> = rows.iter().filter(|row| row.ratio == r).cloned().collect();
            if let Ok(fit) = fit_size_scaling(&at, SweepColumn::RateRatio) {
                o.note(&format!("rate_ratio_slope_at_{}", io::real(r)), io::real(fit.slope));
            }
        }
    }
    Ok(o)
}
