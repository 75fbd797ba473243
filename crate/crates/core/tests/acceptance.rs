//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use beamswitch_core::metrics::data_given_error;
use beamswitch_core::montecarlo::replay_sample;
use beamswitch_core::{
    build_plan, evaluate, run_sweep, simulate, theta_rsu, Agreement, BdeSurface, DesignSpec,
    LinkBudget, McConfig, PerformanceResult, QuadratureConfig, ScenarioParams, Strategy, SweepGrid,
};

const SIGMA_LOW: f64 = 0.02;
const SIGMA_HIGH: f64 = 0.04;

type Criterion = (&'static str, fn(&Sweeps) -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

/// Standard-grid sweeps, computed once and shared across criteria.
struct Sweeps {
    params: ScenarioParams,
    quad: QuadratureConfig,
    low: Vec<PerformanceResult>,
    high: Vec<PerformanceResult>,
}

impl Sweeps {
    fn compute() -> Self {
        let params = ScenarioParams::default();
        let quad = QuadratureConfig::default();
        let low = run_sweep(&SweepGrid::standard(SIGMA_LOW * params.v), &params, &quad)
            .expect("sweep at 0.02v");
        let high = run_sweep(&SweepGrid::standard(SIGMA_HIGH * params.v), &params, &quad)
            .expect("sweep at 0.04v");
        Self { params, quad, low, high }
    }
}

fn max_rate(results: &[PerformanceResult], strategy: Strategy) -> f64 {
    results
        .iter()
        .filter(|r| r.spec.strategy == strategy)
        .map(|r| r.total_rate)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn find(results: &[PerformanceResult], strategy: Strategy, n: usize, o: f64) -> &PerformanceResult {
    results
        .iter()
        .find(|r| r.spec.strategy == strategy && r.spec.n_beams == n && (r.spec.overlap - o).abs() < 1e-12)
        .expect("grid point present")
}

fn eval_at(params: &ScenarioParams, quad: &QuadratureConfig, spec: DesignSpec) -> PerformanceResult {
    let lb = LinkBudget::derive(params).unwrap();
    let plan = build_plan(&spec, params).unwrap();
    evaluate(&plan, &lb, params, quad).unwrap()
}

fn oracle_equivalence(s: &Sweeps) -> Verdict {
    let mc = McConfig::new(100_000, 1e-5, 0x5EED).unwrap();
    let mut failures = Vec::new();
    let mut worst_rate: f64 = 0.0;
    let mut worst_out: f64 = 0.0;
    for rel in [SIGMA_LOW, SIGMA_HIGH] {
        let params = s.params.with_relative_sigma(rel);
        let lb = LinkBudget::derive(&params).unwrap();
        for strategy in Strategy::ALL {
            for n in [5, 10, 20] {
                for o in [0.0, 0.3] {
                    let plan = build_plan(&DesignSpec::new(strategy, n, o).unwrap(), &params).unwrap();
                    let analytic = evaluate(&plan, &lb, &params, &s.quad).unwrap();
                    let sim = simulate(&plan, &lb, &params, &mc).unwrap();
                    let a = Agreement::new(&analytic, &sim);
                    worst_rate = worst_rate.max(a.rate_diff / a.rate_tol);
                    worst_out = worst_out.max(a.outage_diff / a.outage_tol);
                    if !a.passes() {
                        failures.push(format!(
                            "{strategy} N={n} o={o} sigma={rel}v: rate {:.4e} vs {:.4e}, outage {:.5} vs {:.5}",
                            analytic.total_rate, sim.mean_rate, analytic.outage_fraction, sim.mean_outage_fraction
                        ));
                    }
                }
            }
        }
    }
    Verdict::new(
        failures.is_empty(),
        format!(
            "24 points, worst diff/tol rate {worst_rate:.3} outage {worst_out:.3}{}",
            if failures.is_empty() { String::new() } else { format!("; failing: {}", failures.join("; ")) }
        ),
    )
}

fn rate_ratio(s: &Sweeps) -> Verdict {
    let ratio = max_rate(&s.low, Strategy::EqualCoverage) / max_rate(&s.low, Strategy::EqualBeam);
    Verdict::new((1.2..=1.8).contains(&ratio), format!("max-rate ratio EC/EB = {ratio:.4}, want [1.2, 1.8]"))
}

fn sensitivity(s: &Sweeps) -> Verdict {
    let drop = |st| {
        let lo = max_rate(&s.low, st);
        (lo - max_rate(&s.high, st)) / lo
    };
    let (ec, eb) = (drop(Strategy::EqualCoverage), drop(Strategy::EqualBeam));
    Verdict::new(ec > eb, format!("max-rate drop EC {:.2}% vs EB {:.2}%", 100.0 * ec, 100.0 * eb))
}

/// Matched points are every (N_b, o) of the standard grid at both 0.02v and 0.04v.
fn outage_ordering(s: &Sweeps) -> Verdict {
    let mut total = 0usize;
    let mut ok = 0usize;
    for results in [&s.low, &s.high] {
        for eb in results.iter().filter(|r| r.spec.strategy == Strategy::EqualBeam) {
            let ec = find(results, Strategy::EqualCoverage, eb.spec.n_beams, eb.spec.overlap);
            total += 1;
            if eb.outage_fraction <= ec.outage_fraction {
                ok += 1;
            }
        }
    }
    let share = ok as f64 / total as f64;
    Verdict::new(
        share >= 0.9,
        format!("EB outage <= EC outage at {ok}/{total} matched points ({:.1}%), want >= 90%", 100.0 * share),
    )
}

/// Crossover: the first N_b >= 30 at which BDE_EC - BDE_EB is no longer
/// positive, refined by linear interpolation against N_b - 1.
fn crossover(diff: &[(usize, f64)]) -> Option<f64> {
    diff.windows(2)
        .filter(|w| w[1].0 >= 30)
        .find(|w| w[0].1 > 0.0 && w[1].1 <= 0.0)
        .map(|w| {
            let (n0, d0) = (w[0].0 as f64, w[0].1);
            let (n1, d1) = (w[1].0 as f64, w[1].1);
            n0 + d0 / (d0 - d1) * (n1 - n0)
        })
}

fn bde_crossover(s: &Sweeps) -> Verdict {
    let surface = BdeSurface::from_results(&s.high).expect("calibration at 0.04v");
    let mut pass = true;
    let mut notes = Vec::new();
    for o in [0.0, 0.3] {
        let diff: Vec<(usize, f64)> = (1..=60)
            .map(|n| {
                let ec = surface.get(Strategy::EqualCoverage, n, o).unwrap().bde;
                let eb = surface.get(Strategy::EqualBeam, n, o).unwrap().bde;
                (n, ec - eb)
            })
            .collect();
        let at = |n: usize| diff[n - 1].1;
        let cross = crossover(&diff);
        let ok = at(30) > 0.0 && at(55) < 0.0 && cross.is_some_and(|c| (35.0..=50.0).contains(&c));
        pass &= ok;
        notes.push(format!(
            "o={o}: EC-EB at N=30 {:+.4}, at N=55 {:+.4}, crossover {}",
            at(30),
            at(55),
            cross.map_or("none".to_string(), |c| format!("{c:.2}"))
        ));
    }
    Verdict::new(pass, notes.join("; "))
}

fn trends(s: &Sweeps) -> Verdict {
    let mut pass = true;
    let mut notes = Vec::new();
    for strategy in Strategy::ALL {
        let pts: Vec<_> = [5, 10, 20, 40].iter().map(|&n| find(&s.high, strategy, n, 0.3)).collect();
        let rate_up = pts.windows(2).all(|w| w[1].total_rate >= w[0].total_rate);
        let out_up = pts.windows(2).all(|w| w[1].outage_fraction >= w[0].outage_fraction);
        pass &= rate_up && out_up;
        notes.push(format!(
            "{strategy} rate Gbps [{}] outage% [{}]",
            pts.iter().map(|r| format!("{:.3}", r.total_rate / 1e9)).collect::<Vec<_>>().join(", "),
            pts.iter().map(|r| format!("{:.3}", 100.0 * r.outage_fraction)).collect::<Vec<_>>().join(", ")
        ));
    }
    Verdict::new(pass, notes.join("; "))
}

fn deterministic_limits(s: &Sweeps) -> Verdict {
    let mut pass = true;
    let mut worst: f64 = 0.0;
    let exact = s.params.with_sigma(0.0);
    let lb = LinkBudget::derive(&exact).unwrap();
    for strategy in Strategy::ALL {
        for n in [1, 5, 20, 60] {
            for o in [0.0, 0.3, 0.5] {
                let spec = DesignSpec::new(strategy, n, o).unwrap();
                let plan = build_plan(&spec, &exact).unwrap();
                let r = evaluate(&plan, &lb, &exact, &s.quad).unwrap();
                let data: f64 = (1..=n)
                    .map(|i| data_given_error(i, 0.0, &plan, &lb, &exact, &s.quad).unwrap())
                    .sum();
                let direct = data / exact.traversal_time();
                let stepped = replay_sample(&plan, &lb, &exact, 0.0, 1e-5).unwrap();
                let replayed = stepped.data_bits / exact.traversal_time();
                let rel = ((r.total_rate - direct).abs() / direct).max((r.total_rate - replayed).abs() / replayed);
                worst = worst.max(rel);
                pass &= stepped.outage_time == 0.0;
                pass &= r.outage_fraction == 0.0 && rel <= 1e-3;
            }
        }
    }
    let mut single_ok = true;
    for rel in [SIGMA_LOW, SIGMA_HIGH, 0.2] {
        let p = s.params.with_relative_sigma(rel);
        for strategy in Strategy::ALL {
            let r = eval_at(&p, &s.quad, DesignSpec::new(strategy, 1, 0.0).unwrap());
            single_ok &= r.outage_fraction == 0.0;
        }
    }
    Verdict::new(
        pass && single_ok,
        format!("sigma=0 worst rel rate diff vs data integral and 10us replay {worst:.2e}, zero outage {pass}; N=1 zero outage {single_ok}"),
    )
}

fn numerical_hygiene(s: &Sweeps) -> Verdict {
    let fine = s.quad.with_rel_tol(s.quad.rel_tol / 2.0);
    let mut worst: f64 = 0.0;
    for (rel, results) in [(SIGMA_LOW, &s.low), (SIGMA_HIGH, &s.high)] {
        let grid = SweepGrid::standard(rel * s.params.v);
        let refined = run_sweep(&grid, &s.params, &fine).unwrap();
        for (a, b) in results.iter().zip(&refined) {
            worst = worst.max((a.total_rate - b.total_rate).abs() / a.total_rate.abs());
            let scale = a.outage_fraction.abs().max(1e-9);
            worst = worst.max((a.outage_fraction - b.outage_fraction).abs() / scale);
        }
    }
    let quad_ok = worst < 1e-3;

    let mut bde_ok = true;
    for results in [&s.low, &s.high] {
        let surface = BdeSurface::from_results(results).unwrap();
        bde_ok &= surface.entries.iter().all(|e| (0.0..=1.0).contains(&e.bde));
    }

    let theta = theta_rsu(&s.params);
    let mut geo_ok = true;
    for strategy in Strategy::ALL {
        for n in 1..=60 {
            for k in 0..=5 {
                let o = k as f64 / 10.0;
                let plan = build_plan(&DesignSpec::new(strategy, n, o).unwrap(), &s.params).unwrap();
                let tiles = plan.sectors.first().unwrap().b_begin == 0.0
                    && plan.sectors.last().unwrap().b_end == s.params.d_l
                    && plan.sectors.windows(2).all(|w| w[1].b_begin <= w[0].b_end && w[0].switch_out <= w[1].switch_out);
                geo_ok &= tiles && (plan.nominal_width_sum() - theta).abs() <= 1e-9;
            }
        }
    }
    Verdict::new(
        quad_ok && bde_ok && geo_ok,
        format!("rel_tol halving worst rel change {worst:.2e}; BDE in [0,1] {bde_ok}; geometry invariants {geo_ok}"),
    )
}

fn main() -> ExitCode {
    let started = Instant::now();
    let sweeps = Sweeps::compute();
    let criteria: [Criterion; 8] = [
        ("1 oracle equivalence", oracle_equivalence),
        ("2 max-rate ratio", rate_ratio),
        ("3 sensitivity to speed error", sensitivity),
        ("4 outage ordering", outage_ordering),
        ("5 BDE crossover", bde_crossover),
        ("6 trends in N_b", trends),
        ("7 deterministic limits", deterministic_limits),
        ("8 numerical hygiene", numerical_hygiene),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let t = Instant::now();
        let v = check(&sweeps);
        if !v.pass {
            failed += 1;
        }
        println!(
            "{} criterion {name}: {} ({:.1}s)",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed ({:.1}s total)",
        criteria.len() - failed,
        started.elapsed().as_secs_f64()
    );
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
