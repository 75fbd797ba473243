//! Monte Carlo replay of the switching schedule.
//!
//! Each sample draws a speed error, lets the RSU switch beams on the schedule
//! it derives from `v + v_e`, and walks the true trajectory on a fixed time
//! grid (midpoint sampling), crediting capacity when the active beam covers
//! the vehicle and outage otherwise. Nothing here shares code with the
//! quadrature path in [`crate::metrics`].
//!
//! Capacity at step `k` depends only on `k` and the active beam, so per-beam
//! prefix sums over each beam's coverage are built once and every sample is
//! replayed in O(N_b). [`trace_sample`] does the same replay step by step.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{BeamPlan, ScenarioParams};
use crate::linkbudget::{BeamChannel, LinkBudget};
use crate::metrics::{PerformanceResult, MAX_SLOWDOWN};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub n_samples: usize,
    /// Time step in seconds. Stored as f64 bits so the struct stays `Eq`.
    dt_bits: u64,
    pub seed: u64,
}

impl McConfig {
    pub fn new(n_samples: usize, dt: f64, seed: u64) -> Result<Self> {
        if n_samples == 0 {
            return Err(Error::McConfig("n_samples must be >= 1".into()));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::McConfig(format!("dt must be > 0, got {dt}")));
        }
        Ok(Self {
            n_samples,
            dt_bits: dt.to_bits(),
            seed,
        })
    }

    pub fn dt(&self) -> f64 {
        f64::from_bits(self.dt_bits)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_samples(mut self, n_samples: usize) -> Self {
        self.n_samples = n_samples.max(1);
        self
    }
}

impl Default for McConfig {
    fn default() -> Self {
        Self::new(100_000, 1e-5, 0x5EED).expect("valid defaults")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McResult {
    pub mean_rate: f64,
    pub mean_outage_fraction: f64,
    pub stderr_rate: f64,
    pub stderr_outage: f64,
    pub n_samples: usize,
    /// Draws discarded because `v + v_e` was not safely positive.
    pub rejected: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleOutcome {
    pub v_e: f64,
    pub data_bits: f64,
    pub covered_time: f64,
    pub outage_time: f64,
}

/// Step-by-step record of one replay.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTrace {
    /// Active beam (1-based) at each step; `None` never occurs inside the road.
    pub active: Vec<Option<usize>>,
    pub covered: Vec<bool>,
    pub outcome: SampleOutcome,
}

/// Uniform time grid over one traversal.
#[derive(Debug, Clone, Copy)]
struct Grid {
    steps: usize,
    dt: f64,
}

impl Grid {
    fn new(params: &ScenarioParams, dt: f64) -> Self {
        let total = params.traversal_time();
        let steps = ((total / dt).round() as usize).max(1);
        Self {
            steps,
            dt: total / steps as f64,
        }
    }

    #[inline]
    fn time(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.dt
    }

    /// Smallest step `k` in `0..=steps` with `pred(k)`, for `pred` monotone
    /// false -> true. `guess` only seeds the search.
    fn first_step(&self, guess: f64, pred: impl Fn(usize) -> bool) -> usize {
        let mut k = if guess.is_finite() {
            guess.ceil().clamp(0.0, self.steps as f64) as usize
        } else if guess > 0.0 {
            self.steps
        } else {
            0
        };
        while k > 0 && pred(k - 1) {
            k -= 1;
        }
        while k < self.steps && !pred(k) {
            k += 1;
        }
        k
    }

    /// First step whose position `speed * t_k` is at or beyond `pos`.
    fn reaching(&self, pos: f64, speed: f64) -> usize {
        self.first_step(pos / (speed * self.dt) - 0.5, |k| speed * self.time(k) >= pos)
    }

    /// First step whose position is strictly beyond `pos`.
    fn passing(&self, pos: f64, speed: f64) -> usize {
        self.first_step(pos / (speed * self.dt) - 0.5, |k| speed * self.time(k) > pos)
    }
}

/// Capacity prefix sums over the steps at which one beam covers the vehicle.
struct CoverageTable {
    first: usize,
    /// `prefix[m]` = bits over steps `first .. first + m`.
    prefix: Vec<f64>,
}

impl CoverageTable {
    fn end(&self) -> usize {
        self.first + self.prefix.len() - 1
    }

    /// Bits and step count over `[start, stop)` intersected with the coverage.
    fn span(&self, start: usize, stop: usize) -> (f64, usize) {
        let a = start.max(self.first);
        let b = stop.min(self.end());
        if b <= a {
            return (0.0, 0);
        }
        (self.prefix[b - self.first] - self.prefix[a - self.first], b - a)
    }
}

struct Replay<'a> {
    plan: &'a BeamPlan,
    params: &'a ScenarioParams,
    grid: Grid,
    tables: Vec<CoverageTable>,
}

impl<'a> Replay<'a> {
    fn new(plan: &'a BeamPlan, lb: &LinkBudget, params: &'a ScenarioParams, dt: f64) -> Result<Self> {
        check_dwell(plan, params, dt)?;
        let grid = Grid::new(params, dt);
        let v = params.v;
        let channels = channels(plan, lb, params)?;
        let tables = plan
            .sectors
            .par_iter()
            .zip(channels.par_iter())
            .map(|(s, ch)| {
                let first = grid.reaching(s.b_begin, v);
                let end = grid.passing(s.b_end, v);
                let mut prefix = Vec::with_capacity(end.saturating_sub(first) + 1);
                let mut acc = 0.0;
                prefix.push(acc);
                for k in first..end.max(first) {
                    acc += ch.capacity_at(v * grid.time(k)) * grid.dt;
                    prefix.push(acc);
                }
                CoverageTable { first, prefix }
            })
            .collect();
        Ok(Self {
            plan,
            params,
            grid,
            tables,
        })
    }

    fn run(&self, v_e: f64) -> SampleOutcome {
        let u = self.params.v + v_e;
        let n = self.plan.n_beams();
        let mut data = 0.0;
        let mut covered = 0usize;
        let mut start = 0usize;
        for (j, table) in self.tables.iter().enumerate() {
            let stop = if j + 1 == n {
                self.grid.steps
            } else {
                self.grid.reaching(self.plan.sectors[j].switch_out, u)
            };
            let (bits, count) = table.span(start, stop);
            data += bits;
            covered += count;
            start = stop;
            if start >= self.grid.steps {
                break;
            }
        }
        let covered_time = covered as f64 * self.grid.dt;
        SampleOutcome {
            v_e,
            data_bits: data,
            covered_time,
            outage_time: (self.grid.steps - covered) as f64 * self.grid.dt,
        }
    }
}

fn channels(plan: &BeamPlan, lb: &LinkBudget, params: &ScenarioParams) -> Result<Vec<BeamChannel>> {
    plan.sectors
        .iter()
        .map(|s| lb.beam_channel(s.azimuth_width, params))
        .collect()
}

fn check_dwell(plan: &BeamPlan, params: &ScenarioParams, dt: f64) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::McConfig(format!("dt must be > 0, got {dt}")));
    }
    let min_dwell = (1..=plan.n_beams())
        .map(|i| (plan.sector(i).switch_out - plan.switch_in(i)) / params.v)
        .fold(f64::INFINITY, f64::min);
    if dt > min_dwell {
        return Err(Error::McConfig(format!(
            "dt = {dt} s exceeds the shortest beam dwell time {min_dwell:.3e} s"
        )));
    }
    Ok(())
}

/// Draws the speed error for sample `index`; each index has its own stream.
fn draw_error(seed: u64, index: u64, sigma: f64, v: f64) -> (f64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut rejected = 0;
    loop {
        let z: f64 = StandardNormal.sample(&mut rng);
        let v_e = sigma * z;
        if v_e > -MAX_SLOWDOWN * v {
            return (v_e, rejected);
        }
        rejected += 1;
    }
}

pub fn simulate(
    plan: &BeamPlan,
    lb: &LinkBudget,
    params: &ScenarioParams,
    mc: &McConfig,
) -> Result<McResult> {
    params.validate()?;
    let replay = Replay::new(plan, lb, params, mc.dt())?;
    let total = params.traversal_time();
    let samples: Vec<(f64, f64, u64)> = (0..mc.n_samples as u64)
        .into_par_iter()
        .map(|idx| {
            let (v_e, rejected) = draw_error(mc.seed, idx, params.sigma_v, params.v);
            let o = replay.run(v_e);
            (o.data_bits / total, o.outage_time / total, rejected)
        })
        .collect();

    // Sequential reduction keeps results independent of the thread count.
    let n = samples.len() as f64;
    let (mut sr, mut so, mut rejected) = (0.0, 0.0, 0u64);
    for &(r, o, k) in &samples {
        sr += r;
        so += o;
        rejected += k;
    }
    let (mr, mo) = (sr / n, so / n);
    let (mut vr, mut vo) = (0.0, 0.0);
    for &(r, o, _) in &samples {
        vr += (r - mr) * (r - mr);
        vo += (o - mo) * (o - mo);
    }
    let denom = (n - 1.0).max(1.0);
    Ok(McResult {
        mean_rate: mr,
        mean_outage_fraction: mo,
        stderr_rate: (vr / denom / n).sqrt(),
        stderr_outage: (vo / denom / n).sqrt(),
        n_samples: samples.len(),
        rejected,
    })
}

/// Relative rate tolerance for analytic vs Monte Carlo agreement.
pub const RATE_REL_TOL: f64 = 0.02;
/// Absolute outage-fraction tolerance for analytic vs Monte Carlo agreement.
pub const OUTAGE_ABS_TOL: f64 = 0.005;
/// Standard errors allowed on top of the fixed tolerances.
pub const STDERR_MULTIPLE: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Agreement {
    pub rate_diff: f64,
    pub rate_tol: f64,
    pub outage_diff: f64,
    pub outage_tol: f64,
}

impl Agreement {
    /// Rate within `max(2%, 3 SE)`, outage within `max(0.005, 3 SE)`.
    pub fn new(analytic: &PerformanceResult, mc: &McResult) -> Self {
        Self {
            rate_diff: (analytic.total_rate - mc.mean_rate).abs(),
            rate_tol: (RATE_REL_TOL * mc.mean_rate.abs()).max(STDERR_MULTIPLE * mc.stderr_rate),
            outage_diff: (analytic.outage_fraction - mc.mean_outage_fraction).abs(),
            outage_tol: OUTAGE_ABS_TOL.max(STDERR_MULTIPLE * mc.stderr_outage),
        }
    }

    pub fn rate_ok(&self) -> bool {
        self.rate_diff <= self.rate_tol
    }

    pub fn outage_ok(&self) -> bool {
        self.outage_diff <= self.outage_tol
    }

    pub fn passes(&self) -> bool {
        self.rate_ok() && self.outage_ok()
    }
}

/// Replays one traversal with a given speed error, one step at a time.
pub fn trace_sample(
    plan: &BeamPlan,
    lb: &LinkBudget,
    params: &ScenarioParams,
    v_e: f64,
    dt: f64,
) -> Result<SampleTrace> {
    params.validate()?;
    check_dwell(plan, params, dt)?;
    let grid = Grid::new(params, dt);
    let channels = channels(plan, lb, params)?;
    let n = plan.n_beams();
    let u = params.v + v_e;
    let mut active = Vec::with_capacity(grid.steps);
    let mut covered = Vec::with_capacity(grid.steps);
    let mut beam = 0usize;
    let mut data = 0.0;
    for k in 0..grid.steps {
        let t = grid.time(k);
        let believed = u * t;
        while beam + 1 < n && believed >= plan.sectors[beam].switch_out {
            beam += 1;
        }
        let s = &plan.sectors[beam];
        let x = params.v * t;
        let hit = x >= s.b_begin && x <= s.b_end;
        if hit {
            data += channels[beam].capacity_at(x) * grid.dt;
        }
        active.push(Some(beam + 1));
        covered.push(hit);
    }
    let hits = covered.iter().filter(|&&c| c).count();
    Ok(SampleTrace {
        active,
        covered,
        outcome: SampleOutcome {
            v_e,
            data_bits: data,
            covered_time: hits as f64 * grid.dt,
            outage_time: (grid.steps - hits) as f64 * grid.dt,
        },
    })
}

/// Same as one sample of [`simulate`], exposed for checking against [`trace_sample`].
pub fn replay_sample(
    plan: &BeamPlan,
    lb: &LinkBudget,
    params: &ScenarioParams,
    v_e: f64,
    dt: f64,
) -> Result<SampleOutcome> {
    params.validate()?;
    Ok(Replay::new(plan, lb, params, dt)?.run(v_e))
}
