//! Design-space sweeps and the beam design efficiency (BDE) score.
//!
//! BDE = alpha * rate - beta * outage_fraction, with (alpha, beta) fixed so
//! that the best corner (max rate, min outage) of the sweep scores 1 and the
//! worst corner (min rate, max outage) scores 0.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{build_plan, DesignSpec, ScenarioParams, Strategy, MAX_OVERLAP};
use crate::linkbudget::LinkBudget;
use crate::metrics::{Analysis, OutageForm, PerformanceResult};
use crate::quadrature::QuadratureConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub n_beams: Vec<usize>,
    pub overlaps: Vec<f64>,
    pub strategies: Vec<Strategy>,
    pub sigma_v: f64,
}

impl SweepGrid {
    /// N_b in 1..=60, overlap in {0, 0.1, ..., 0.5}, both strategies.
    pub fn standard(sigma_v: f64) -> Self {
        Self {
            n_beams: (1..=60).collect(),
            overlaps: (0..=5).map(|k| k as f64 / 10.0).collect(),
            strategies: Strategy::ALL.to_vec(),
            sigma_v,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_beams.is_empty() || self.overlaps.is_empty() || self.strategies.is_empty() {
            return Err(Error::InvalidGrid("every axis needs at least one value".into()));
        }
        if self.n_beams.contains(&0) {
            return Err(Error::InvalidGrid("n_beams values must be >= 1".into()));
        }
        if let Some(o) = self
            .overlaps
            .iter()
            .find(|o| !(o.is_finite() && (0.0..=MAX_OVERLAP).contains(*o)))
        {
            return Err(Error::InvalidGrid(format!(
                "overlap {o} outside [0, 0.5]: each beam may overlap its adjacent beams by at most 50%"
            )));
        }
        if !(self.sigma_v.is_finite() && self.sigma_v >= 0.0) {
            return Err(Error::InvalidGrid(format!("sigma_v must be >= 0, got {}", self.sigma_v)));
        }
        Ok(())
    }

    /// Grid points in output order: strategy-major, then N_b, then overlap.
    pub fn points(&self) -> Vec<DesignSpec> {
        let mut out = Vec::with_capacity(self.len());
        for &strategy in &self.strategies {
            for &n_beams in &self.n_beams {
                for &overlap in &self.overlaps {
                    out.push(DesignSpec {
                        strategy,
                        n_beams,
                        overlap,
                    });
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.strategies.len() * self.n_beams.len() * self.overlaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn run_sweep(
    grid: &SweepGrid,
    params: &ScenarioParams,
    quad: &QuadratureConfig,
) -> Result<Vec<PerformanceResult>> {
    run_sweep_with(grid, params, quad, OutageForm::default())
}

/// Evaluates every grid point in parallel; results keep grid order.
pub fn run_sweep_with(
    grid: &SweepGrid,
    params: &ScenarioParams,
    quad: &QuadratureConfig,
    form: OutageForm,
) -> Result<Vec<PerformanceResult>> {
    grid.validate()?;
    let params = params.with_sigma(grid.sigma_v);
    let lb = LinkBudget::derive(&params)?;
    grid.points()
        .into_par_iter()
        .map(|spec| {
            let run = || -> Result<PerformanceResult> {
                let plan = build_plan(&spec, &params)?;
                Analysis::new(&plan, &lb, &params, quad)?
                    .with_outage_form(form)
                    .evaluate()
            };
            run().map_err(|e| Error::AtGridPoint {
                strategy: spec.strategy,
                n_beams: spec.n_beams,
                overlap: spec.overlap,
                source: Box::new(e),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BdeWeights {
    /// Weight on rate, 1/(bit/s).
    pub alpha: f64,
    /// Weight on outage fraction.
    pub beta: f64,
    pub max_rate: f64,
    pub min_rate: f64,
    pub max_out: f64,
    pub min_out: f64,
}

/// Solves
///   alpha * max_rate - beta * min_out = 1
///   alpha * min_rate - beta * max_out = 0
/// over the extrema of `results`.
pub fn calibrate(results: &[PerformanceResult]) -> Result<BdeWeights> {
    if results.len() < 2 {
        return Err(Error::Calibration(format!(
            "need at least 2 results, got {}",
            results.len()
        )));
    }
    let fold = |f: fn(&PerformanceResult) -> f64, pick: fn(f64, f64) -> f64| {
        results.iter().map(f).reduce(pick).unwrap_or(f64::NAN)
    };
    let max_rate = fold(|r| r.total_rate, f64::max);
    let min_rate = fold(|r| r.total_rate, f64::min);
    let max_out = fold(|r| r.outage_fraction, f64::max);
    let min_out = fold(|r| r.outage_fraction, f64::min);

    let det = max_rate * max_out - min_rate * min_out;
    let scale = (max_rate * max_out).abs().max((min_rate * min_out).abs());
    if !(det.is_finite()) || det.abs() <= 1e-12 * scale || det == 0.0 {
        return Err(Error::Calibration(format!(
            "max_rate * max_out == min_rate * min_out (max_rate = {max_rate}, min_rate = {min_rate}, \
             max_out = {max_out}, min_out = {min_out})"
        )));
    }
    Ok(BdeWeights {
        alpha: max_out / det,
        beta: min_rate / det,
        max_rate,
        min_rate,
        max_out,
        min_out,
    })
}

pub fn efficiency(result: &PerformanceResult, w: &BdeWeights) -> f64 {
    w.alpha * result.total_rate - w.beta * result.outage_fraction
}

#[derive(Debug, Clone, PartialEq)]
pub struct BdeEntry {
    pub strategy: Strategy,
    pub n_beams: usize,
    pub overlap: f64,
    pub rate: f64,
    pub outage_fraction: f64,
    pub bde: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BdeSurface {
    pub weights: BdeWeights,
    pub entries: Vec<BdeEntry>,
}

impl BdeSurface {
    /// Calibrates on `results` and scores each of them.
    pub fn from_results(results: &[PerformanceResult]) -> Result<Self> {
        let weights = calibrate(results)?;
        let entries = results
            .iter()
            .map(|r| BdeEntry {
                strategy: r.spec.strategy,
                n_beams: r.spec.n_beams,
                overlap: r.spec.overlap,
                rate: r.total_rate,
                outage_fraction: r.outage_fraction,
                bde: efficiency(r, &weights),
            })
            .collect();
        Ok(Self { weights, entries })
    }

    pub fn get(&self, strategy: Strategy, n_beams: usize, overlap: f64) -> Option<&BdeEntry> {
        self.entries.iter().find(|e| {
            e.strategy == strategy && e.n_beams == n_beams && (e.overlap - overlap).abs() < 1e-12
        })
    }
}
