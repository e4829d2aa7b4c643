//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so every line is printed; exits non-zero when any criterion fails.

mod common;

use std::time::{Duration, Instant};

use lemtrap::dynamics::{evolve_pair, golden_rule_rate, superposition_anchors, TrajectoryConfig};
use lemtrap::io::{self, Metadata, Table};
use lemtrap::sweep::{GridPoint, NoiseSetting};
use lemtrap::{
    build_hamiltonian, diagonalize, dress, find_local_minima, fit_size_scaling, matrix_element, multiphoton_path_sum,
    overlap_decay, rate_vs_prediction, rs_amplitude_first_order, run_sweep, Calibration, Channels, ClusterParams,
    CoherenceTrace, CouplingSpec, Family, NoiseModel, SpinConfig, SweepColumn, SweepGrid, Verdict,
};

const SEED: u64 = 20240501;
const OVERLAP_RATIOS: [f64; 3] = [0.1, 0.03, 0.01];

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
    csv: Vec<u8>,
}

fn csv(command: &str, table: &Table) -> Vec<u8> {
    let meta = Metadata {
        command: command.to_string(),
        seed: SEED,
        config: String::new(),
        summary: Vec::new(),
    };
    let mut buf = Vec::new();
    io::emit_csv(&mut buf, &meta, table).unwrap();
    buf
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn headline() -> Outcome {
    let run = |n: usize, r: f64| {
        let grid = SweepGrid::uniform(
            vec![n],
            vec![r],
            Channels {
                rates: true,
                ..Default::default()
            },
            SEED,
        );
        run_sweep(&grid).unwrap().remove(0)
    };
    let five = run(5, 0.01);
    let four = run(4, 0.001);
    let bound = five.size_bound.unwrap();
    let pass = rel(bound, 1e-10) <= 1e-12
        && five.lifetime_extension == Some(10.0)
        && four.lifetime_extension == Some(12.0)
        && five.error.is_none()
        && four.error.is_none();
    Outcome {
        pass,
        detail: format!(
            "n=5 r=0.01: bound {bound:.6e}, extension {:?}; n=4 r=0.001: extension {:?}",
            five.lifetime_extension, four.lifetime_extension
        ),
        csv: csv("sweep", &io::sweep_table(&[five, four])),
    }
}

fn size_scaling() -> Outcome {
    let r: f64 = 0.01;
    let grid = SweepGrid::uniform(
        (2..=6).collect(),
        vec![r],
        Channels {
            rates: true,
            ..Default::default()
        },
        SEED,
    );
    let rows = run_sweep(&grid).unwrap();
    let fit = fit_size_scaling(&rows, SweepColumn::RateRatio).unwrap();
    let target = (2.0 * r.log10()).abs();
    let band = fit.slope < 0.0 && (0.7 * target..=1.3 * target).contains(&fit.slope.abs());
    let rates: Vec<f64> = rows.iter().map(|row| row.rate_ratio.unwrap()).collect();
    let worst_step = rates.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
    let margins_ok = rows.iter().all(|row| row.bound_margin.unwrap() >= -2.0);

    // the static overlap channel must stay within its budget up to n = 10
    let start = Instant::now();
    let big = SweepGrid::uniform(
        (7..=10).collect(),
        vec![r],
        Channels {
            overlaps: true,
            ..Default::default()
        },
        SEED,
    );
    let big_rows = run_sweep(&big).unwrap();
    let big_time = start.elapsed();
    let big_ok = big_rows.iter().all(|row| row.error.is_none()) && big_time < Duration::from_secs(120);

    Outcome {
        pass: band && worst_step <= 0.1 && margins_ok && big_ok,
        detail: format!(
            "slope {:.4} (|slope| / {target} = {:.3}, R^2 {:.4}), largest step ratio {worst_step:.3e}, margins >= -2: {margins_ok}, overlaps n=7..10 in {:.1}s",
            fit.slope,
            fit.slope.abs() / target,
            fit.r_squared,
            big_time.as_secs_f64()
        ),
        csv: csv("sweep", &io::sweep_table(&rows)),
    }
}

fn point(n: usize, r: f64) -> GridPoint {
    Family::default().point(n, r, NoiseSetting::default()).unwrap()
}

fn overlap_decay_slopes() -> Outcome {
    let mut slopes = Vec::new();
    let mut within = true;
    let mut detail = Vec::new();
    let mut decays = Vec::new();
    for r in OVERLAP_RATIOS {
        let pt = point(4, r);
        let eig = diagonalize(&build_hamiltonian(&pt.params).unwrap()).unwrap();
        let ground = overlap_decay(&dress(&eig, pt.ground).unwrap()).unwrap();
        let lem = overlap_decay(&dress(&eig, pt.lem).unwrap()).unwrap();
        let target = (pt.params.tunneling()[0] / pt.a_typ).log10();
        let slope = ground.slope.unwrap();
        let dev = rel(slope, target);
        within &= dev <= 0.3;
        slopes.push(slope);
        detail.push(format!(
            "r={r}: slope {slope:.3} vs {target:.3} ({:.0}% off; local-minimum anchor {:.3})",
            100.0 * dev,
            lem.slope.unwrap()
        ));
        decays.push(ground);
        decays.push(lem);
    }
    let steeper = slopes.windows(2).all(|w| w[1] < w[0]);
    detail.push(format!("steeper as r falls: {steeper}"));
    Outcome {
        pass: within && steeper,
        detail: detail.join("; "),
        csv: csv("overlaps", &io::overlaps_table(&decays)),
    }
}

fn selection_rules() -> Outcome {
    let mut rng = common::rng(SEED);
    let mut worst_z: f64 = 0.0;
    let mut worst_x: f64 = 0.0;
    let mut table = Table::new(&["instance", "channel", "worst"]);
    for k in 0..5 {
        let inst = common::Instance::random(4, 0.0, &mut rng);
        let params = inst.params();
        let eig = diagonalize(&build_hamiltonian(&params).unwrap()).unwrap();
        let states: Vec<_> = (0..16)
            .map(|x| dress(&eig, SpinConfig::from_index(x, 4)).unwrap())
            .collect();
        let f_only = CouplingSpec::new(vec![0.3, 0.7, 1.1, 0.5], vec![0.0; 4], NoiseModel::White).unwrap();
        let g_only = CouplingSpec::new(vec![0.0; 4], vec![0.4, 0.9, 0.2, 1.3], NoiseModel::White).unwrap();
        let (mut wz, mut wx) = (0.0f64, 0.0f64);
        for x in 0..16usize {
            for y in 0..16usize {
                if x == y {
                    continue;
                }
                wz = wz.max(
                    matrix_element(&states[x], &states[y], &f_only)
                        .unwrap()
                        .sigma_z_total()
                        .abs(),
                );
                if (x ^ y).count_ones() >= 2 {
                    wx = wx.max(
                        matrix_element(&states[x], &states[y], &g_only)
                            .unwrap()
                            .sigma_x_total()
                            .abs(),
                    );
                }
            }
        }
        table.push(vec![k.to_string(), "sigma_z".into(), io::real(wz)]);
        table.push(vec![k.to_string(), "sigma_x".into(), io::real(wx)]);
        worst_z = worst_z.max(wz);
        worst_x = worst_x.max(wx);
    }
    Outcome {
        pass: worst_z <= 1e-14 && worst_x <= 1e-14,
        detail: format!("max |sigma_z| between distinct states {worst_z:.1e}, max |sigma_x| at D >= 2 {worst_x:.1e}"),
        csv: csv("rates", &table),
    }
}

fn oracle_equivalence() -> Outcome {
    let mut rng = common::rng(SEED ^ 5);
    let mut table = Table::new(&["check", "worst"]);

    let mut one: f64 = 0.0;
    for k in 0..20 {
        let (b, c) = (-1.0 + 0.1 * k as f64, 0.05 * k as f64);
        let p = ClusterParams::new(1, vec![0.0], vec![b], vec![c]).unwrap();
        let e = diagonalize(&build_hamiltonian(&p).unwrap()).unwrap();
        let s = (b * b + c * c).sqrt();
        one = one
            .max((e.eigenvalues()[0] + s).abs())
            .max((e.eigenvalues()[1] - s).abs());
    }

    let mut two: f64 = 0.0;
    for _ in 0..50 {
        let inst = common::Instance::random(2, 1.0, &mut rng);
        let want = common::jacobi_eigenvalues(common::hamiltonian(&inst.j, &inst.b, &inst.c));
        let got = diagonalize(&build_hamiltonian(&inst.params()).unwrap()).unwrap();
        for (a, b) in got.eigenvalues().iter().zip(&want) {
            two = two.max((a - b).abs());
        }
    }

    let mut mismatches = 0;
    for k in 0..100 {
        let n = 1 + k % 6;
        let inst = common::Instance::random(n, 0.0, &mut rng);
        let (global, local) = common::exhaustive_landscape(&inst.j, &inst.b);
        let report = find_local_minima(&inst.params(), None).unwrap();
        let found: Vec<usize> = report.local_minima.iter().map(|m| m.config.index()).collect();
        let distances_ok = report
            .local_minima
            .iter()
            .all(|m| m.barrier_distance == (m.config.index() ^ global).count_ones());
        if report.global_minimum.index() != global || found != local || !distances_ok {
            mismatches += 1;
        }
    }
    table.push(vec!["one_spin".into(), io::real(one)]);
    table.push(vec!["two_spin".into(), io::real(two)]);
    table.push(vec!["landscape_mismatches".into(), mismatches.to_string()]);
    Outcome {
        pass: one <= 1e-12 && two <= 1e-10 && mismatches == 0,
        detail: format!("1-spin {one:.1e}, 2-spin vs Jacobi {two:.1e}, landscape mismatches {mismatches}/100"),
        csv: csv("spectrum", &table),
    }
}

fn perturbation_cross_check() -> Outcome {
    let mut table = Table::new(&["ratio", "anchor", "worst_relative_error", "allowed"]);
    let mut pass = true;
    let mut detail = Vec::new();
    for r in OVERLAP_RATIOS {
        let pt = point(4, r);
        let eig = diagonalize(&build_hamiltonian(&pt.params).unwrap()).unwrap();
        let allowed = 10.0 * (pt.params.tunneling()[0] / pt.a_typ).powi(2);
        for anchor in [pt.ground, pt.lem] {
            let d = dress(&eig, anchor).unwrap();
            let worst = (0..4)
                .map(|i| {
                    let z = anchor.flipped(i);
                    let rs = rs_amplitude_first_order(&pt.params, anchor, z).unwrap();
                    rel(d.amplitude(z), rs)
                })
                .fold(0.0, f64::max);
            pass &= worst <= allowed;
            detail.push(format!("r={r} {anchor}: {:.2} r^2", worst / (allowed / 10.0)));
            table.push(vec![
                io::real(r),
                anchor.to_string(),
                io::real(worst),
                io::real(allowed),
            ]);
        }
    }

    let pt = point(5, 0.01);
    let mut homog: f64 = 0.0;
    for s in [0.5, 2.0, 10.0] {
        let scaled = pt.coupling.scaled(s);
        let mut target = pt.ground;
        for i in 0..5 {
            target = target.flipped(i);
            let base = multiphoton_path_sum(&pt.params, &pt.coupling, pt.ground, target).unwrap();
            let sc = multiphoton_path_sum(&pt.params, &scaled, pt.ground, target).unwrap();
            homog = homog.max(rel(sc.amplitude, s.powi(base.order as i32) * base.amplitude));
        }
    }
    pass &= homog <= 1e-12;
    detail.push(format!("path-sum homogeneity {homog:.1e}"));
    table.push(vec!["".into(), "homogeneity".into(), io::real(homog), io::real(1e-12)]);
    Outcome {
        pass,
        detail: detail.join("; "),
        csv: csv("pathsum", &table),
    }
}

fn trace(
    params: &ClusterParams,
    coupling: CouplingSpec,
    a_typ: f64,
    seed: u64,
) -> (CoherenceTrace, lemtrap::RateReport) {
    let eig = diagonalize(&build_hamiltonian(params).unwrap()).unwrap();
    let (g, l) = superposition_anchors(params).unwrap();
    let (g, l) = (dress(&eig, g).unwrap(), dress(&eig, l).unwrap());
    let report = matrix_element(&g, &l, &coupling).unwrap();
    let predicted = golden_rule_rate(&report, coupling.noise());
    let dt = lemtrap::dynamics::DEFAULT_TIME_STEP / a_typ;
    let total = lemtrap::dynamics::default_total_time(predicted, dt);
    let tcfg = TrajectoryConfig::with_defaults(a_typ, coupling, seed, total);
    (evolve_pair(params, &eig, &g, &l, &tcfg).unwrap(), report)
}

fn dynamics_consistency() -> Outcome {
    let r = 0.05;
    let two = point(2, r);
    let three = point(3, r);
    let (t2, rep2) = trace(&two.params, two.coupling.clone(), two.a_typ, SEED);
    let (t3, rep3) = trace(&three.params, three.coupling.clone(), three.a_typ, SEED + 1);

    let quiet_dt = 0.01 / three.a_typ;
    let (quiet, _) = {
        let eig = diagonalize(&build_hamiltonian(&three.params).unwrap()).unwrap();
        let (g, l) = (dress(&eig, three.ground).unwrap(), dress(&eig, three.lem).unwrap());
        let mut tcfg = TrajectoryConfig::with_defaults(three.a_typ, CouplingSpec::zero(3), SEED, 20_000.0 * quiet_dt);
        tcfg.trajectory_count = 4;
        (evolve_pair(&three.params, &eig, &g, &l, &tcfg).unwrap(), ())
    };
    let flat = quiet.coherence.iter().map(|c| (c - 0.5).abs()).fold(0.0, f64::max);

    let (verdict, detail) = match Calibration::from_reference(&t2, &rep2) {
        Ok(cal) => {
            let cmp = rate_vs_prediction(&t3, &rep3, cal);
            (
                cmp.verdict,
                format!(
                    "fitted n=2 {:.4e}, n=3 {:.4e} (ratio {:.3}); predicted n=3 {:.4e} (rate_ratio ratio {:.3e}); fitted/predicted {:.3e}, verdict {}",
                    t2.fitted_rate,
                    t3.fitted_rate,
                    t3.fitted_rate / t2.fitted_rate,
                    cmp.predicted_rate,
                    rep3.rate_ratio / rep2.rate_ratio,
                    cmp.ratio.unwrap_or(f64::NAN),
                    cmp.verdict.as_str()
                ),
            )
        }
        Err(e) => (Verdict::Inconclusive, format!("calibration failed: {e}")),
    };
    let mut table = io::trace_table(&t3);
    table.rows.extend(io::trace_table(&t2).rows);
    Outcome {
        pass: verdict == Verdict::Consistent && flat <= 1e-6,
        detail: format!("{detail}; zero-noise max |c - 0.5| {flat:.1e}"),
        csv: csv("dynamics", &table),
    }
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("1 headline bound and lifetime extension", headline),
        ("2 exponential size scaling of rate ratio", size_scaling),
        ("3 overlap decay with Hamming distance", overlap_decay_slopes),
        ("4 exact selection rules at zero tunneling", selection_rules),
        ("5 oracle equivalence", oracle_equivalence),
        ("6 perturbative cross-checks", perturbation_cross_check),
        ("7 dynamics against golden rule", dynamics_consistency),
    ];
    let mut failed = 0;
    let mut identical = true;
    let mut repeat_detail = Vec::new();
    for (name, run) in criteria {
        let start = Instant::now();
        let first = run();
        let elapsed = start.elapsed().as_secs_f64();
        println!(
            "{} criterion {name} ({elapsed:.1}s): {}",
            if first.pass { "PASS" } else { "FAIL" },
            first.detail
        );
        failed += usize::from(!first.pass);
        let again = run();
        let same = again.csv == first.csv;
        identical &= same;
        repeat_detail.push(format!("{}:{}", &name[..1], if same { "same" } else { "differs" }));
    }
    println!(
        "{} criterion 8 byte-identical CSV on repeat: {}",
        if identical { "PASS" } else { "FAIL" },
        repeat_detail.join(" ")
    );
    failed += usize::from(!identical);
    println!("acceptance: {} of 8 criteria failed", failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
