//! Analytic performance of a beam plan under Gaussian speed estimation error.
//!
//! The RSU schedules the switch into beam `i` at `b_{i-1} / (v + v_e)` and out
//! of it at `b_i / (v + v_e)`, while the vehicle actually sits at `v t`. Data
//! is collected while the active beam covers the vehicle; the remaining time
//! is outage. Averages over `v_e ~ N(0, sigma_v^2)` use nested adaptive
//! quadrature: outer over `v_e`, inner over time.
//!
//! Edge conventions: the first beam is active from entry, and the last beam
//! is held until the vehicle leaves the covered stretch, so no outage is
//! booked beyond either end of the road.

use std::cell::Cell;

use crate::error::{Error, Result};
use crate::gaussian::{pdf, q_function};
use crate::geometry::{BeamPlan, DesignSpec, ScenarioParams};
use crate::linkbudget::{BeamChannel, LinkBudget};
use crate::quadrature::{integrate, integrate_pieces, NonConvergence, QuadratureConfig};

/// Speed errors are integrated over at most this many standard deviations.
pub const TRUNCATION_SIGMAS: f64 = 6.0;

/// Errors at or below `-MAX_SLOWDOWN * v` are excluded: the vehicle must move forward.
pub const MAX_SLOWDOWN: f64 = 0.99;

/// Which lower limit the late-switch (`v_e < 0`) outage integral uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutageForm {
    /// Integrates the late-switch outage of the segment after beam `i` from
    /// the error at which that segment is missed entirely. Together with the
    /// saturated term of beam `i + 1` this partitions the error axis without
    /// double counting.
    #[default]
    Consistent,
    /// Uses beam `i`'s own miss threshold `v (b_{i-1} - b_{i,e}) / b_{i,e}`
    /// as the lower limit, which overlaps the saturated term of beam `i + 1`
    /// and overstates outage when errors are large relative to beam length.
    AsPrinted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamPerformance {
    pub index: usize,
    /// Error-averaged contribution to the traversal data rate (bit/s).
    pub rate: f64,
    /// Expected outage time attributed to this beam (s).
    pub outage: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceResult {
    pub per_beam: Vec<BeamPerformance>,
    pub total_rate: f64,
    /// Total expected outage divided by the traversal time `d_l / v`.
    pub outage_fraction: f64,
    pub spec: DesignSpec,
    pub sigma_v: f64,
}

/// Evaluation context binding one plan to its scenario.
pub struct Analysis<'a> {
    plan: &'a BeamPlan,
    params: &'a ScenarioParams,
    quad: QuadratureConfig,
    form: OutageForm,
    channels: Vec<BeamChannel>,
}

impl<'a> Analysis<'a> {
    pub fn new(
        plan: &'a BeamPlan,
        lb: &LinkBudget,
        params: &'a ScenarioParams,
        quad: &QuadratureConfig,
    ) -> Result<Self> {
        params.validate()?;
        if !quad.is_valid() {
            return Err(Error::InvalidParams(format!(
                "quadrature tolerances must be positive: {quad:?}"
            )));
        }
        let channels = plan
            .sectors
            .iter()
            .map(|s| lb.beam_channel(s.azimuth_width, params))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            plan,
            params,
            quad: *quad,
            form: OutageForm::default(),
            channels,
        })
    }

    pub fn with_outage_form(mut self, form: OutageForm) -> Self {
        self.form = form;
        self
    }

    fn check_beam(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.plan.n_beams() {
            return Err(Error::Domain {
                what: "beam index",
                value: i as f64,
                expected: "1 <= i <= n_beams",
            });
        }
        Ok(())
    }

    fn is_last(&self, i: usize) -> bool {
        i == self.plan.n_beams()
    }

    /// Time window `[lo, hi]` during which beam `i` is active and covers the vehicle.
    fn data_window(&self, i: usize, v_e: f64) -> (f64, f64) {
        let v = self.params.v;
        let u = v + v_e;
        let s = self.plan.sector(i);
        let b_prev = self.plan.switch_in(i);
        if self.is_last(i) {
            let lo = if v_e >= 0.0 {
                (s.b_begin / v).max(b_prev / u)
            } else {
                b_prev / u
            };
            return (lo, self.params.d_l / v);
        }
        if v_e >= 0.0 {
            ((s.b_begin / v).max(b_prev / u), s.switch_out / u)
        } else {
            (b_prev / u, (s.b_end / v).min(s.switch_out / u))
        }
    }

    /// Bits delivered through beam `i` for a given speed error.
    pub fn data_given_error(&self, i: usize, v_e: f64) -> Result<f64> {
        self.check_beam(i)?;
        if !(v_e.is_finite() && self.params.v + v_e > 0.0) {
            return Err(Error::Domain {
                what: "speed error",
                value: v_e,
                expected: "v + v_e > 0",
            });
        }
        self.data_inner(i, v_e)
    }

    fn data_inner(&self, i: usize, v_e: f64) -> Result<f64> {
        let (lo, hi) = self.data_window(i, v_e);
        if !(hi > lo) {
            return Ok(0.0);
        }
        let v = self.params.v;
        let ch = &self.channels[i - 1];
        let inner = QuadratureConfig {
            rel_tol: 0.1 * self.quad.rel_tol,
            ..self.quad
        };
        integrate(|t| ch.capacity_at(v * t), lo, hi, &inner).map_err(|e| numerical(i, "data", e))
    }

    /// Error-averaged data rate contributed by beam `i` (bit/s).
    pub fn avg_rate(&self, i: usize) -> Result<f64> {
        self.check_beam(i)?;
        let p = self.params;
        let v = p.v;
        let sigma = p.sigma_v;
        if sigma == 0.0 {
            return Ok(v / p.d_l * self.data_inner(i, 0.0)?);
        }
        let s = self.plan.sector(i);
        let b_prev = self.plan.switch_in(i);
        let last = self.is_last(i);

        // Beyond these errors the beam never covers the vehicle while active.
        let pos_limit = if last || s.b_begin <= 0.0 {
            f64::INFINITY
        } else {
            v * (s.switch_out - s.b_begin) / s.b_begin
        };
        let neg_limit = v * (b_prev - s.b_end) / s.b_end;
        let hi = pos_limit.min(TRUNCATION_SIGMAS * sigma);
        let lo = neg_limit
            .max(-TRUNCATION_SIGMAS * sigma)
            .max(-MAX_SLOWDOWN * v);

        // Kinks where the coverage edge takes over from the schedule edge.
        let mut breaks = Vec::with_capacity(2);
        if s.b_begin > 0.0 {
            breaks.push(v * (b_prev - s.b_begin) / s.b_begin);
        }
        if !last {
            breaks.push(v * (s.switch_out - s.b_end) / s.b_end);
        }

        let failure: Cell<Option<Error>> = Cell::new(None);
        let integrand = |v_e: f64| -> f64 {
            match self.data_inner(i, v_e) {
                Ok(d) => (v + v_e) / p.d_l * d * pdf(v_e, sigma),
                Err(e) => {
                    failure.set(Some(e));
                    f64::NAN
                }
            }
        };
        let cfg = QuadratureConfig {
            abs_tol: self.quad.abs_tol * v / p.d_l,
            ..self.quad
        };
        let ahead = integrate_pieces(integrand, 0.0, hi, &breaks, &cfg);
        let behind = integrate_pieces(integrand, lo, 0.0, &breaks, &cfg);
        if let Some(e) = failure.take() {
            return Err(e);
        }
        let ahead = ahead.map_err(|e| numerical(i, "rate", e))?;
        let behind = behind.map_err(|e| numerical(i, "rate", e))?;
        Ok(ahead + behind)
    }

    /// Expected outage time attributed to beam `i` (s).
    pub fn outage_time(&self, i: usize) -> Result<f64> {
        self.check_beam(i)?;
        let p = self.params;
        let v = p.v;
        let sigma = p.sigma_v;
        if sigma == 0.0 {
            return Ok(0.0);
        }
        let n = self.plan.n_beams();
        let s = self.plan.sector(i);
        let b_prev = self.plan.switch_in(i);
        let b_i = s.switch_out;
        let cap = TRUNCATION_SIGMAS * sigma;
        // abs_tol is expressed in bits; convert to seconds of full-band airtime.
        let cfg = QuadratureConfig {
            abs_tol: self.quad.abs_tol / p.bandwidth,
            ..self.quad
        };
        let mut total = 0.0;

        // Early switching (v_e >= 0): the vehicle lags behind the schedule and
        // is dropped before reaching the next beam's coverage.
        if i < n {
            let next_begin = self.plan.sector(i + 1).b_begin;
            let saturation = if s.b_begin > 0.0 {
                v * (b_i - s.b_begin) / s.b_begin
            } else {
                f64::INFINITY
            };
            total += (next_begin - s.b_begin) / v * q_function(saturation / sigma);
            let start = (v * (b_i - next_begin) / next_begin).max(0.0);
            total += integrate(
                |v_e| (next_begin / v - b_i / (v + v_e)) * pdf(v_e, sigma),
                start,
                saturation.min(cap),
                &cfg,
            )
            .map_err(|e| numerical(i, "outage ahead", e))?;
        }

        // Late switching (v_e < 0): the vehicle runs past the active beam.
        if i > 1 {
            let prev_end = self.plan.sector(i - 1).b_end;
            let arg = v * (s.b_end - b_prev) / (s.b_end * sigma);
            total += (s.b_end - prev_end) / v * q_function(arg);
        }
        if i < n {
            let hi = v * (b_i - s.b_end) / s.b_end;
            let lo = match self.form {
                OutageForm::Consistent => {
                    let next_end = self.plan.sector(i + 1).b_end;
                    v * (b_i - next_end) / next_end
                }
                OutageForm::AsPrinted => v * (b_prev - s.b_end) / s.b_end,
            };
            let lo = lo.max(-cap).max(-MAX_SLOWDOWN * v);
            total += integrate(
                |v_e| (b_i / (v + v_e) - s.b_end / v) * pdf(v_e, sigma),
                lo,
                hi.min(0.0),
                &cfg,
            )
            .map_err(|e| numerical(i, "outage behind", e))?;
        }
        Ok(total)
    }

    pub fn evaluate(&self) -> Result<PerformanceResult> {
        let per_beam = (1..=self.plan.n_beams())
            .map(|i| {
                Ok(BeamPerformance {
                    index: i,
                    rate: self.avg_rate(i)?,
                    outage: self.outage_time(i)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let total_rate = per_beam.iter().map(|b| b.rate).sum();
        let total_outage: f64 = per_beam.iter().map(|b| b.outage).sum();
        Ok(PerformanceResult {
            per_beam,
            total_rate,
            outage_fraction: total_outage / self.params.traversal_time(),
            spec: self.plan.spec,
            sigma_v: self.params.sigma_v,
        })
    }
}

fn numerical(beam: usize, stage: &'static str, e: NonConvergence) -> Error {
    Error::Numerical {
        beam,
        stage,
        lo: e.lo,
        hi: e.hi,
    }
}

pub fn data_given_error(
    i: usize,
    v_e: f64,
    plan: &BeamPlan,
    lb: &LinkBudget,
    params: &ScenarioParams,
    quad: &QuadratureConfig,
) -> Result<f64> {
    Analysis::new(plan, lb, params, quad)?.data_given_error(i, v_e)
}

pub fn avg_rate(
    i: usize,
    plan: &BeamPlan,
    lb: &LinkBudget,
    params: &ScenarioParams,
    quad: &QuadratureConfig,
) -> Result<f64> {
    Analysis::new(plan, lb, params, quad)?.avg_rate(i)
}

pub fn outage_time(
    i: usize,
    plan: &BeamPlan,
    lb: &LinkBudget,
    params: &ScenarioParams,
    quad: &QuadratureConfig,
) -> Result<f64> {
    Analysis::new(plan, lb, params, quad)?.outage_time(i)
}

pub fn evaluate(
    plan: &BeamPlan,
    lb: &LinkBudget,
    params: &ScenarioParams,
    quad: &QuadratureConfig,
) -> Result<PerformanceResult> {
    Analysis::new(plan, lb, params, quad)?.evaluate()
}
