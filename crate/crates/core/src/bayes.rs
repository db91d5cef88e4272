//! Two-phase sequential Bayesian estimation on discretized priors.
//!
//! Phase 1 spends `m1 = ceil(gamma M)` shots in the basis of the first
//! parameter and updates its posterior with a likelihood averaged over the
//! prior of the other parameter. Phase 2 spends the remaining shots in the
//! second basis with the first parameter pinned to its phase-1 posterior mean.
//! Measurement settings stay fixed throughout; nothing is adaptive.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bounds::{classify_region, optimal_se};
use crate::error::{Error, Result};
use crate::fisher::{evaluate_qfim, ParamPoint};
use crate::models::{Measurement, StateModel};

/// Probabilities are floored here before taking logs.
pub const PROB_FLOOR: f64 = 1e-300;
const NORMALIZATION_TOL: f64 = 1e-9;

/// Probability masses on `n` cells of equal width covering `[lo, hi]`, each
/// represented by its midpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorGrid {
    lo: f64,
    hi: f64,
    weights: Vec<f64>,
}

impl PosteriorGrid {
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid needs >= 2 points, got {n}"
            )));
        }
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "empty grid range [{lo}, {hi}]"
            )));
        }
        Ok(Self {
            lo,
            hi,
            weights: vec![1.0 / n as f64; n],
        })
    }

    /// Uniform prior of total width `width` centered on `center`.
    pub fn centered(center: f64, width: f64, n: usize) -> Result<Self> {
        Self::uniform(center - 0.5 * width, center + 0.5 * width, n)
    }

    /// Grid with explicit (nonnegative, not necessarily normalized) weights.
    pub fn with_weights(lo: f64, hi: f64, weights: Vec<f64>) -> Result<Self> {
        let mut grid = Self::uniform(lo, hi, weights.len())?;
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter(
                "negative or non-finite weight".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::UnnormalizedProbs { sum });
        }
        grid.weights = weights.into_iter().map(|w| w / sum).collect();
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn point(&self, k: usize) -> f64 {
        let n = self.weights.len();
        self.lo + (self.hi - self.lo) * (k as f64 + 0.5) / n as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|k| self.point(k))
    }
}

/// Posterior mean and variance over the support points.
pub fn posterior_mean_var(grid: &PosteriorGrid) -> (f64, f64) {
    let mean: f64 = grid.points().zip(&grid.weights).map(|(x, w)| w * x).sum();
    // Centered second moment avoids cancellation for narrow posteriors.
    let var: f64 = grid
        .points()
        .zip(&grid.weights)
        .map(|(x, w)| w * (x - mean) * (x - mean))
        .sum();
    (mean, var.max(0.0))
}

/// `w_k <- w_k exp(loglik_k - max loglik)`, renormalized.
pub fn posterior_update(grid: &PosteriorGrid, loglik: &[f64]) -> Result<PosteriorGrid> {
    if loglik.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            found: loglik.len(),
        });
    }
    let max = grid
        .weights
        .iter()
        .zip(loglik)
        .filter(|(w, _)| **w > 0.0)
        .map(|(_, l)| *l)
        .fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::ZeroLikelihood);
    }
    let mut weights: Vec<f64> = grid
        .weights
        .iter()
        .zip(loglik)
        .map(|(w, l)| if *w > 0.0 { w * (l - max).exp() } else { 0.0 })
        .collect();
    let sum: f64 = weights.iter().sum();
    if !(sum > 0.0) || !sum.is_finite() {
        return Err(Error::ZeroLikelihood);
    }
    weights.iter_mut().for_each(|w| *w /= sum);
    Ok(PosteriorGrid {
        lo: grid.lo,
        hi: grid.hi,
        weights,
    })
}

/// Multinomial outcome counts from `count` independent categorical draws.
///
/// Each shot consumes exactly one uniform variate, so splitting a run into
/// batches does not change the sampled record.
pub fn sample_outcomes<R: Rng + ?Sized>(
    probs: &[f64],
    count: u64,
    rng: &mut R,
) -> Result<Vec<u64>> {
    let sum: f64 = probs.iter().sum();
    if probs.is_empty()
        || probs.iter().any(|p| !(*p >= 0.0))
        || (sum - 1.0).abs() > NORMALIZATION_TOL
    {
        return Err(Error::UnnormalizedProbs { sum });
    }
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in probs {
        acc += p / sum;
        cdf.push(acc);
    }
    let last_positive = probs.iter().rposition(|p| *p > 0.0).unwrap_or(0);
    let mut counts = vec![0u64; probs.len()];
    for _ in 0..count {
        let u: f64 = rng.random();
        let k = cdf.partition_point(|c| *c <= u).min(last_positive);
        // Zero-probability outcomes are never drawn.
        let k = if probs[k] > 0.0 {
            k
        } else {
            (k..=last_positive)
                .find(|&j| probs[j] > 0.0)
                .unwrap_or(last_positive)
        };
        counts[k] += 1;
    }
    Ok(counts)
}

/// Which parameter a likelihood is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Lambda1,
    Lambda2,
}

impl Target {
    fn other(self) -> Target {
        match self {
            Target::Lambda1 => Target::Lambda2,
            Target::Lambda2 => Target::Lambda1,
        }
    }

    fn point(self, target: f64, other: f64) -> ParamPoint {
        match self {
            Target::Lambda1 => ParamPoint::new(target, other),
            Target::Lambda2 => ParamPoint::new(other, target),
        }
    }

    pub fn value(self, p: ParamPoint) -> f64 {
        match self {
            Target::Lambda1 => p.lambda1,
            Target::Lambda2 => p.lambda2,
        }
    }
}

fn floored_log(p: f64) -> f64 {
    p.max(PROB_FLOOR).ln()
}

fn outcome_log_probs(
    model: &dyn StateModel,
    measurement: &Measurement,
    point: ParamPoint,
) -> Result<Vec<f64>> {
    let state = model.sample(point)?.state;
    Ok(measurement
        .probabilities(&state)?
        .into_iter()
        .map(floored_log)
        .collect())
}

fn check_counts(counts: &[u64], outcomes: usize) -> Result<()> {
    if counts.len() != outcomes {
        return Err(Error::DimensionMismatch {
            expected: outcomes,
            found: counts.len(),
        });
    }
    Ok(())
}

/// Log outcome probabilities over a (target x nuisance) product grid.
///
/// Built once per run; evaluating a marginal likelihood from cumulative
/// counts then needs no further model evaluations.
#[derive(Debug, Clone)]
pub struct MarginalTable {
    target: Target,
    n_nuisance: usize,
    outcomes: usize,
    log_probs: Vec<f64>,
}

impl MarginalTable {
    pub fn build(
        model: &dyn StateModel,
        measurement: &Measurement,
        target: Target,
        target_grid: &PosteriorGrid,
        nuisance_grid: &PosteriorGrid,
    ) -> Result<Self> {
        let outcomes = measurement.num_outcomes();
        let nuisance: Vec<f64> = nuisance_grid.points().collect();
        let rows = (0..target_grid.len())
            .into_par_iter()
            .map(|i| {
                let t = target_grid.point(i);
                let mut row = Vec::with_capacity(nuisance.len() * outcomes);
                for &u in &nuisance {
                    row.extend(outcome_log_probs(model, measurement, target.point(t, u))?);
                }
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            target,
            n_nuisance: nuisance_grid.len(),
            outcomes,
            log_probs: rows.concat(),
        })
    }

    pub fn target(&self) -> Target {
        self.target
    }

    /// `ln sum_u p(u) prod_mu p(x_mu | t, u)^{c_mu}` for every target point `t`.
    pub fn log_likelihood(&self, counts: &[u64], nuisance: &PosteriorGrid) -> Result<Vec<f64>> {
        check_counts(counts, self.outcomes)?;
        if nuisance.len() != self.n_nuisance {
            return Err(Error::DimensionMismatch {
                expected: self.n_nuisance,
                found: nuisance.len(),
            });
        }
        let floor = floored_log(0.0);
        let observed: Vec<(usize, f64)> = counts
            .iter()
            .enumerate()
            .filter(|(_, c)| **c > 0)
            .map(|(k, c)| (k, *c as f64))
            .collect();
        let log_prior: Vec<f64> = nuisance.weights().iter().map(|w| w.ln()).collect();
        let width = self.n_nuisance * self.outcomes;
        let rows: Vec<(f64, bool)> = self
            .log_probs
            .par_chunks_exact(width)
            .map(|row| {
                let mut supported = false;
                let mut max = f64::NEG_INFINITY;
                let terms: Vec<f64> = row
                    .chunks_exact(self.outcomes)
                    .zip(&log_prior)
                    .map(|(cell, &lp)| {
                        let mut ll = lp;
                        let mut underflow = false;
                        for &(k, c) in &observed {
                            ll += c * cell[k];
                            underflow |= cell[k] <= floor;
                        }
                        supported |= !underflow && lp.is_finite();
                        max = max.max(ll);
                        ll
                    })
                    .collect();
                let lse = if max.is_finite() {
                    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
                } else {
                    f64::NEG_INFINITY
                };
                (lse, supported)
            })
            .collect();
        let any_supported = rows.iter().any(|r| r.1);
        let out: Vec<f64> = rows.into_iter().map(|r| r.0).collect();
        if !any_supported {
            return Err(Error::ZeroLikelihood);
        }
        Ok(out)
    }
}

/// Log outcome probabilities along one parameter with the other one fixed.
#[derive(Debug, Clone)]
pub struct ConditionalTable {
    outcomes: usize,
    log_probs: Vec<f64>,
}

impl ConditionalTable {
    pub fn build(
        model: &dyn StateModel,
        measurement: &Measurement,
        target: Target,
        grid: &PosteriorGrid,
        fixed_other: f64,
    ) -> Result<Self> {
        let outcomes = measurement.num_outcomes();
        let rows = (0..grid.len())
            .into_par_iter()
            .map(|k| {
                outcome_log_probs(model, measurement, target.point(grid.point(k), fixed_other))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            outcomes,
            log_probs: rows.concat(),
        })
    }

    /// `sum_mu c_mu ln p(x_mu | t)` for every grid point `t`.
    pub fn log_likelihood(&self, counts: &[u64]) -> Result<Vec<f64>> {
        check_counts(counts, self.outcomes)?;
        let floor = floored_log(0.0);
        let mut any_supported = false;
        let out = self
            .log_probs
            .chunks_exact(self.outcomes)
            .map(|cell| {
                let mut underflow = false;
                let mut ll = 0.0;
                for (k, &c) in counts.iter().enumerate() {
                    if c > 0 {
                        ll += c as f64 * cell[k];
                        underflow |= cell[k] <= floor;
                    }
                }
                any_supported |= !underflow;
                ll
            })
            .collect();
        if !any_supported {
            return Err(Error::ZeroLikelihood);
        }
        Ok(out)
    }
}

/// Marginal log-likelihood of `lambda1`, averaging over the `lambda2` prior.
pub fn marginal_likelihood_1(
    model: &dyn StateModel,
    measurement: &Measurement,
    counts: &[u64],
    grid1: &PosteriorGrid,
    grid2: &PosteriorGrid,
) -> Result<Vec<f64>> {
    MarginalTable::build(model, measurement, Target::Lambda1, grid1, grid2)?
        .log_likelihood(counts, grid2)
}

/// Marginal log-likelihood of `lambda2`, averaging over the `lambda1` prior.
pub fn marginal_likelihood_2(
    model: &dyn StateModel,
    measurement: &Measurement,
    counts: &[u64],
    grid2: &PosteriorGrid,
    grid1: &PosteriorGrid,
) -> Result<Vec<f64>> {
    MarginalTable::build(model, measurement, Target::Lambda2, grid2, grid1)?
        .log_likelihood(counts, grid1)
}

/// Log-likelihood of `lambda2` with `lambda1` pinned to `lambda1_est`.
pub fn conditional_likelihood_2(
    model: &dyn StateModel,
    measurement: &Measurement,
    counts: &[u64],
    grid2: &PosteriorGrid,
    lambda1_est: f64,
) -> Result<Vec<f64>> {
    ConditionalTable::build(model, measurement, Target::Lambda2, grid2, lambda1_est)?
        .log_likelihood(counts)
}

/// Log-likelihood of `lambda1` with `lambda2` pinned to `lambda2_est`.
pub fn conditional_likelihood_1(
    model: &dyn StateModel,
    measurement: &Measurement,
    counts: &[u64],
    grid1: &PosteriorGrid,
    lambda2_est: f64,
) -> Result<Vec<f64>> {
    ConditionalTable::build(model, measurement, Target::Lambda1, grid1, lambda2_est)?
        .log_likelihood(counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementOrder {
    First1Then2,
    First2Then1,
}

impl MeasurementOrder {
    fn first(self) -> Target {
        match self {
            MeasurementOrder::First1Then2 => Target::Lambda1,
            MeasurementOrder::First2Then1 => Target::Lambda2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BayesConfig {
    pub total_shots: u64,
    pub gamma: f64,
    pub seed: u64,
    pub grid_points: usize,
    pub true_point: ParamPoint,
    pub prior_width1: f64,
    pub prior_width2: f64,
    pub order: MeasurementOrder,
    pub batch_size: u64,
}

impl BayesConfig {
    pub const DEFAULT_GRID_POINTS: usize = 1000;

    /// Shots for the first and second phase.
    pub fn split(&self) -> Result<(u64, u64)> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::GammaOutOfRange(self.gamma));
        }
        let m1 = (self.gamma * self.total_shots as f64).ceil() as u64;
        let m1 = m1.min(self.total_shots);
        let m2 = self.total_shots - m1;
        if m1 < 1 || m2 < 1 {
            return Err(Error::InvalidParameter(format!(
                "budget split ({m1}, {m2}) leaves a phase without shots"
            )));
        }
        Ok((m1, m2))
    }

    pub fn validate(&self) -> Result<()> {
        self.split()?;
        if self.grid_points < 2 {
            return Err(Error::InvalidParameter("grid_points must be >= 2".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::InvalidParameter("batch_size must be >= 1".into()));
        }
        if !(self.prior_width1 > 0.0 && self.prior_width2 > 0.0) {
            return Err(Error::InvalidParameter("prior widths must be > 0".into()));
        }
        if !self.true_point.is_finite() {
            return Err(Error::InvalidParameter("non-finite true point".into()));
        }
        Ok(())
    }

    fn prior(&self, target: Target) -> Result<PosteriorGrid> {
        let width = match target {
            Target::Lambda1 => self.prior_width1,
            Target::Lambda2 => self.prior_width2,
        };
        PosteriorGrid::centered(target.value(self.true_point), width, self.grid_points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub shots_used: u64,
    pub est1: f64,
    pub est2: f64,
    pub var1: f64,
    pub var2: f64,
    pub scaled_error: f64,
    pub mu: f64,
    pub mu_tilde: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BayesTrace {
    pub rows: Vec<TraceRow>,
}

impl BayesTrace {
    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }
}

/// A run that stopped early; `trace` holds the rows written before the failure.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("Bayesian run aborted after {} trace rows: {error}", trace.rows.len())]
pub struct BayesAbort {
    pub trace: BayesTrace,
    pub error: Error,
}

/// Seed-independent part of a run: priors, the phase-1 likelihood table,
/// outcome distributions at the true point and the reference bounds.
pub struct StepwiseBayes<'a> {
    model: &'a dyn StateModel,
    cfg: BayesConfig,
    first: Target,
    m1: u64,
    m2: u64,
    prior_first: PosteriorGrid,
    prior_second: PosteriorGrid,
    measurement_first: Measurement,
    measurement_second: Measurement,
    table: MarginalTable,
    true_probs_first: Vec<f64>,
    true_probs_second: Vec<f64>,
    mu: f64,
    mu_tilde: f64,
}

impl<'a> StepwiseBayes<'a> {
    pub fn new(model: &'a dyn StateModel, cfg: &BayesConfig) -> Result<Self> {
        cfg.validate()?;
        let (m1, m2) = cfg.split()?;
        let first = cfg.order.first();
        let second = first.other();
        let prior_first = cfg.prior(first)?;
        let prior_second = cfg.prior(second)?;
        let measurement_for = |t: Target| match t {
            Target::Lambda1 => model.measurement1(),
            Target::Lambda2 => model.measurement2(),
        };
        let measurement_first = measurement_for(first);
        let measurement_second = measurement_for(second);
        let table = MarginalTable::build(
            model,
            &measurement_first,
            first,
            &prior_first,
            &prior_second,
        )?;
        let truth = model.sample(cfg.true_point)?.state;
        let true_probs_first = measurement_first.probabilities(&truth)?;
        let true_probs_second = measurement_second.probabilities(&truth)?;
        let eval = evaluate_qfim(|p| model.sample(p), cfg.true_point)?;
        let report = classify_region(&eval.qfim);
        let mu_tilde = optimal_se(&eval.qfim)
            .map(|s| s.mu_tilde)
            .unwrap_or(f64::INFINITY);
        Ok(Self {
            model,
            cfg: cfg.clone(),
            first,
            m1,
            m2,
            prior_first,
            prior_second,
            measurement_first,
            measurement_second,
            table,
            true_probs_first,
            true_probs_second,
            mu: report.mu,
            mu_tilde,
        })
    }

    pub fn config(&self) -> &BayesConfig {
        &self.cfg
    }

    /// JE bound at the true point.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Optimal SE bound at the true point.
    pub fn mu_tilde(&self) -> f64 {
        self.mu_tilde
    }

    pub fn phase_shots(&self) -> (u64, u64) {
        (self.m1, self.m2)
    }

    fn row(&self, shots_used: u64, first: (f64, f64), second: (f64, f64)) -> TraceRow {
        let ((est1, var1), (est2, var2)) = match self.first {
            Target::Lambda1 => (first, second),
            Target::Lambda2 => (second, first),
        };
        TraceRow {
            shots_used,
            est1,
            est2,
            var1,
            var2,
            scaled_error: shots_used as f64 * (var1 + var2),
            mu: self.mu,
            mu_tilde: self.mu_tilde,
        }
    }

    pub fn run(&self, seed: u64) -> std::result::Result<BayesTrace, BayesAbort> {
        let mut trace = BayesTrace::default();
        match self.run_into(seed, &mut trace) {
            Ok(()) => Ok(trace),
            Err(error) => Err(BayesAbort { trace, error }),
        }
    }

    fn run_into(&self, seed: u64, trace: &mut BayesTrace) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let batch = self.cfg.batch_size;
        let second_prior_moments = posterior_mean_var(&self.prior_second);

        let mut counts = vec![0u64; self.measurement_first.num_outcomes()];
        let mut used = 0u64;
        let mut posterior_first = self.prior_first.clone();
        while used < self.m1 {
            let shots = batch.min(self.m1 - used);
            let drawn = sample_outcomes(&self.true_probs_first, shots, &mut rng)?;
            counts.iter_mut().zip(&drawn).for_each(|(c, d)| *c += d);
            used += shots;
            let loglik = self.table.log_likelihood(&counts, &self.prior_second)?;
            posterior_first = posterior_update(&self.prior_first, &loglik)?;
            trace.rows.push(self.row(
                used,
                posterior_mean_var(&posterior_first),
                second_prior_moments,
            ));
        }
        let first_moments = posterior_mean_var(&posterior_first);

        let conditional = ConditionalTable::build(
            self.model,
            &self.measurement_second,
            self.first.other(),
            &self.prior_second,
            first_moments.0,
        )?;
        let mut counts = vec![0u64; self.measurement_second.num_outcomes()];
        let mut used2 = 0u64;
        while used2 < self.m2 {
            let shots = batch.min(self.m2 - used2);
            let drawn = sample_outcomes(&self.true_probs_second, shots, &mut rng)?;
            counts.iter_mut().zip(&drawn).for_each(|(c, d)| *c += d);
            used2 += shots;
            let loglik = conditional.log_likelihood(&counts)?;
            let posterior_second = posterior_update(&self.prior_second, &loglik)?;
            trace.rows.push(self.row(
                self.m1 + used2,
                first_moments,
                posterior_mean_var(&posterior_second),
            ));
        }
        Ok(())
    }
}

pub fn run_stepwise_bayes(
    model: &dyn StateModel,
    cfg: &BayesConfig,
) -> std::result::Result<BayesTrace, BayesAbort> {
    let prepared = StepwiseBayes::new(model, cfg).map_err(|error| BayesAbort {
        trace: BayesTrace::default(),
        error,
    })?;
    prepared.run(cfg.seed)
}
