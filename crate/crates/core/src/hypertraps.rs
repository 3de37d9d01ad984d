//! Hypercubic accumulation model for task completion orders.
//!
//! A learner's progress is a walk on the hypercube of acquired-task sets,
//! starting from the empty set and adding one task at a time. The rate at
//! which an unacquired task `i` is completed next, given the acquired set `x`,
//! is
//!
//! ```text
//! rate(i | x) = exp(θ_ii + Σ_{j ∈ x} θ_ji)
//! ```
//!
//! so the `T × T` matrix `θ` holds a basal log-rate per task on the diagonal
//! and the additive effect of having completed `j` on the log-rate of `i` off
//! the diagonal. The next task is drawn with probability proportional to its
//! rate. Since completion orders are fully observed, the likelihood of a
//! sequence is the exact product of its step probabilities. An incomplete
//! sequence is scored on its observed steps only.
//!
//! All likelihoods are handled in log space.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::TaskId;
use crate::stats::{log_mean_exp, log_sum_exp};

/// Log-rate parameters. Row = already acquired task, column = affected task.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaMatrix {
    num_tasks: usize,
    values: Vec<f64>,
}

impl ThetaMatrix {
    pub fn zeros(num_tasks: usize) -> Self {
        ThetaMatrix {
            num_tasks,
            values: vec![0.0; num_tasks * num_tasks],
        }
    }

    /// Row-major `values[source * T + target]`.
    pub fn from_row_major(num_tasks: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != num_tasks * num_tasks {
            return Err(Error::DimensionMismatch {
                expected: num_tasks * num_tasks,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("theta entries must be finite".into()));
        }
        Ok(ThetaMatrix { num_tasks, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let t = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != t) {
            return Err(Error::DimensionMismatch {
                expected: t,
                found: bad.len(),
            });
        }
        Self::from_row_major(t, rows.concat())
    }

    pub fn num_tasks(&self) -> usize {
        self.num_tasks
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Zero-based `(source, target)`; the diagonal is the basal log-rate.
    pub fn get(&self, source: usize, target: usize) -> f64 {
        self.values[source * self.num_tasks + target]
    }

    pub fn set(&mut self, source: usize, target: usize, value: f64) {
        assert!(value.is_finite(), "theta entries must be finite");
        self.values[source * self.num_tasks + target] = value;
    }

    pub fn basal(&self, task: usize) -> f64 {
        self.get(task, task)
    }

    /// Effect of `source` on every task's log-rate.
    fn row(&self, source: usize) -> &[f64] {
        &self.values[source * self.num_tasks..(source + 1) * self.num_tasks]
    }

    fn basal_vector(&self) -> Vec<f64> {
        (0..self.num_tasks).map(|i| self.basal(i)).collect()
    }
}

impl Serialize for ThetaMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.values.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ThetaMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let values = Vec::<f64>::deserialize(d)?;
        let t = (values.len() as f64).sqrt().round() as usize;
        ThetaMatrix::from_row_major(t, values).map_err(serde::de::Error::custom)
    }
}

/// Set of acquired tasks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskState {
    acquired: Vec<bool>,
    count: usize,
}

impl TaskState {
    pub fn empty(num_tasks: usize) -> Self {
        TaskState {
            acquired: vec![false; num_tasks],
            count: 0,
        }
    }

    pub fn from_tasks(num_tasks: usize, tasks: &[TaskId]) -> Result<Self> {
        let mut state = TaskState::empty(num_tasks);
        for &task in tasks {
            check_task(task, num_tasks)?;
            state.insert(task);
        }
        Ok(state)
    }

    pub fn num_tasks(&self) -> usize {
        self.acquired.len()
    }

    pub fn contains(&self, task: TaskId) -> bool {
        self.acquired[task.index()]
    }

    pub fn insert(&mut self, task: TaskId) {
        if !std::mem::replace(&mut self.acquired[task.index()], true) {
            self.count += 1;
        }
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn is_full(&self) -> bool {
        self.count == self.acquired.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = TaskId> + '_ {
        self.acquired
            .iter()
            .enumerate()
            .filter(|(_, &a)| a)
            .map(|(i, _)| TaskId::from_index(i))
    }
}

fn check_task(task: TaskId, num_tasks: usize) -> Result<()> {
    if task.0 == 0 || task.index() >= num_tasks {
        return Err(Error::TaskOutOfRange {
            task: task.0 as i64,
            max: num_tasks,
        });
    }
    Ok(())
}

fn check_dims(theta: &ThetaMatrix, num_tasks: usize) -> Result<()> {
    if theta.num_tasks() != num_tasks {
        return Err(Error::DimensionMismatch {
            expected: theta.num_tasks(),
            found: num_tasks,
        });
    }
    Ok(())
}

/// Zero-based indices of a duplicate-free sequence of valid tasks.
fn sequence_indices(seq: &[TaskId], num_tasks: usize) -> Result<Vec<usize>> {
    let mut seen = vec![false; num_tasks];
    seq.iter()
        .map(|&task| {
            check_task(task, num_tasks)?;
            if std::mem::replace(&mut seen[task.index()], true) {
                return Err(Error::DuplicateTask { task });
            }
            Ok(task.index())
        })
        .collect()
}

/// Log-rates of every task in `state` (acquired entries are meaningless).
fn log_rates(theta: &ThetaMatrix, state: &TaskState) -> Vec<f64> {
    let mut lr = theta.basal_vector();
    for source in state.iter() {
        for (r, d) in lr.iter_mut().zip(theta.row(source.index())) {
            *r += d;
        }
    }
    lr
}

fn log_normaliser(lr: &[f64], acquired: &[bool]) -> f64 {
    log_sum_exp(lr.iter().zip(acquired).filter(|(_, &a)| !a).map(|(&r, _)| r))
}

/// Probability that `next` is the next task completed from `state`.
pub fn step_probability(theta: &ThetaMatrix, state: &TaskState, next: TaskId) -> Result<f64> {
    check_dims(theta, state.num_tasks())?;
    check_task(next, theta.num_tasks())?;
    if state.is_full() {
        return Err(Error::FullState);
    }
    if state.contains(next) {
        return Err(Error::AlreadyAcquired { task: next });
    }
    let lr = log_rates(theta, state);
    let log_z = log_normaliser(&lr, &state.acquired);
    Ok((lr[next.index()] - log_z).exp())
}

/// Log step probabilities of an already validated index sequence.
fn step_log_probs_unchecked(theta: &ThetaMatrix, seq: &[usize]) -> Vec<f64> {
    let t = theta.num_tasks();
    let mut lr = theta.basal_vector();
    let mut acquired = vec![false; t];
    let mut out = Vec::with_capacity(seq.len());
    for &next in seq {
        let log_z = log_normaliser(&lr, &acquired);
        out.push(lr[next] - log_z);
        acquired[next] = true;
        for (r, d) in lr.iter_mut().zip(theta.row(next)) {
            *r += d;
        }
    }
    out
}

/// Log probability of each observed step of `seq`.
pub fn step_log_probs(theta: &ThetaMatrix, seq: &[TaskId]) -> Result<Vec<f64>> {
    let idx = sequence_indices(seq, theta.num_tasks())?;
    Ok(step_log_probs_unchecked(theta, &idx))
}

/// `ln P(seq | θ)` over the observed steps.
pub fn sequence_loglik(theta: &ThetaMatrix, seq: &[TaskId]) -> Result<f64> {
    Ok(step_log_probs(theta, seq)?.iter().sum())
}

/// Draws the first `length` tasks of a walk from the empty state.
pub fn sample_sequence_with<R: Rng + ?Sized>(theta: &ThetaMatrix, length: usize, rng: &mut R) -> Result<Vec<TaskId>> {
    let t = theta.num_tasks();
    if length == 0 || length > t {
        return Err(Error::LengthOutOfRange { length, max: t });
    }
    let mut lr = theta.basal_vector();
    let mut acquired = vec![false; t];
    let mut weights = vec![0.0; t];
    let mut out = Vec::with_capacity(length);
    for _ in 0..length {
        let max = lr
            .iter()
            .zip(&acquired)
            .filter(|(_, &a)| !a)
            .map(|(&r, _)| r)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for i in 0..t {
            weights[i] = if acquired[i] { 0.0 } else { (lr[i] - max).exp() };
            total += weights[i];
        }
        let mut u = rng.random::<f64>() * total;
        let mut pick = None;
        for i in 0..t {
            if acquired[i] {
                continue;
            }
            pick = Some(i);
            if u < weights[i] {
                break;
            }
            u -= weights[i];
        }
        let next = pick.expect("state is not full");
        out.push(TaskId::from_index(next));
        acquired[next] = true;
        for (r, d) in lr.iter_mut().zip(theta.row(next)) {
            *r += d;
        }
    }
    Ok(out)
}

pub fn sample_sequence(theta: &ThetaMatrix, length: usize, seed: u64) -> Result<Vec<TaskId>> {
    sample_sequence_with(theta, length, &mut ChaCha8Rng::seed_from_u64(seed))
}

// ---------------------------------------------------------------------------
// Posterior sampling
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McmcConfig {
    /// Total iterations, burn-in included.
    pub chain_length: usize,
    pub burn_in: usize,
    pub thinning: usize,
    /// Standard deviation of the single-entry Gaussian proposal.
    pub proposal_sd: f64,
    /// Standard deviation of the independent zero-mean Gaussian prior on every entry.
    pub prior_sd: f64,
    pub seed: u64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            chain_length: 200_000,
            burn_in: 50_000,
            thinning: 100,
            proposal_sd: 0.1,
            prior_sd: 5.0,
            seed: 1,
        }
    }
}

impl McmcConfig {
    pub fn num_samples(&self) -> usize {
        if self.thinning == 0 {
            return 0;
        }
        self.chain_length.saturating_sub(self.burn_in) / self.thinning
    }

    pub fn validate(&self) -> Result<()> {
        if self.thinning == 0 {
            return Err(Error::InvalidConfig("thinning must be at least 1".into()));
        }
        if !(self.proposal_sd > 0.0 && self.proposal_sd.is_finite()) {
            return Err(Error::InvalidConfig("proposal_sd must be positive".into()));
        }
        if !(self.prior_sd > 0.0 && self.prior_sd.is_finite()) {
            return Err(Error::InvalidConfig("prior_sd must be positive".into()));
        }
        if self.num_samples() == 0 {
            return Err(Error::EmptyPosterior);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcDiagnostics {
    pub proposed: u64,
    pub accepted: u64,
    pub acceptance_rate: f64,
    /// Data log-likelihood at every retained sample.
    pub loglik_trace: Vec<f64>,
    /// Seeds of the chains pooled into the posterior.
    pub chain_seeds: Vec<u64>,
}

pub const POSTERIOR_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PosteriorRepr")]
pub struct Posterior {
    pub schema_version: u32,
    pub group: String,
    pub num_tasks: usize,
    pub config: McmcConfig,
    pub diagnostics: McmcDiagnostics,
    /// Row-major `T × T` parameter arrays.
    pub samples: Vec<ThetaMatrix>,
}

#[derive(Deserialize)]
struct PosteriorRepr {
    schema_version: u32,
    group: String,
    num_tasks: usize,
    config: McmcConfig,
    diagnostics: McmcDiagnostics,
    samples: Vec<ThetaMatrix>,
}

impl TryFrom<PosteriorRepr> for Posterior {
    type Error = Error;

    fn try_from(r: PosteriorRepr) -> Result<Self> {
        if r.schema_version != POSTERIOR_SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported posterior schema version {}",
                r.schema_version
            )));
        }
        if r.samples.is_empty() {
            return Err(Error::EmptyPosterior);
        }
        for s in &r.samples {
            check_dims(s, r.num_tasks)?;
        }
        Ok(Posterior {
            schema_version: r.schema_version,
            group: r.group,
            num_tasks: r.num_tasks,
            config: r.config,
            diagnostics: r.diagnostics,
            samples: r.samples,
        })
    }
}

impl Posterior {
    /// Posterior made of fixed parameter values, mostly useful in tests.
    pub fn from_samples(group: impl Into<String>, samples: Vec<ThetaMatrix>) -> Result<Self> {
        let first = samples.first().ok_or(Error::EmptyPosterior)?;
        let num_tasks = first.num_tasks();
        for s in &samples {
            check_dims(s, num_tasks)?;
        }
        Ok(Posterior {
            schema_version: POSTERIOR_SCHEMA_VERSION,
            group: group.into(),
            num_tasks,
            config: McmcConfig::default(),
            diagnostics: McmcDiagnostics {
                proposed: 0,
                accepted: 0,
                acceptance_rate: 0.0,
                loglik_trace: vec![],
                chain_seeds: vec![],
            },
            samples,
        })
    }

    /// Pools the samples of an independent chain on the same data.
    pub fn merge(mut self, other: Posterior) -> Result<Posterior> {
        if other.num_tasks != self.num_tasks {
            return Err(Error::DimensionMismatch {
                expected: self.num_tasks,
                found: other.num_tasks,
            });
        }
        let d = &mut self.diagnostics;
        d.proposed += other.diagnostics.proposed;
        d.accepted += other.diagnostics.accepted;
        d.acceptance_rate = if d.proposed == 0 {
            0.0
        } else {
            d.accepted as f64 / d.proposed as f64
        };
        d.loglik_trace.extend(other.diagnostics.loglik_trace);
        d.chain_seeds.extend(other.diagnostics.chain_seeds);
        self.samples.extend(other.samples);
        Ok(self)
    }

    /// Elementwise mean of the samples.
    pub fn mean_theta(&self) -> ThetaMatrix {
        let mut values = vec![0.0; self.num_tasks * self.num_tasks];
        for s in &self.samples {
            for (acc, v) in values.iter_mut().zip(s.as_slice()) {
                *acc += v;
            }
        }
        let k = self.samples.len() as f64;
        values.iter_mut().for_each(|v| *v /= k);
        ThetaMatrix {
            num_tasks: self.num_tasks,
            values,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Posterior> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Per-sequence cache of log-rates and log-normalisers at every step, so a
/// single-entry change of θ can be scored in time linear in the affected steps.
struct SequenceCache {
    seq: Vec<usize>,
    /// Position of each task in `seq`, `usize::MAX` if absent.
    pos: Vec<usize>,
    /// `lr[m * T + i]`: log-rate of task `i` before step `m`.
    lr: Vec<f64>,
    log_z: Vec<f64>,
}

impl SequenceCache {
    fn new(seq: Vec<usize>, num_tasks: usize) -> Self {
        let mut pos = vec![usize::MAX; num_tasks];
        for (m, &task) in seq.iter().enumerate() {
            pos[task] = m;
        }
        let n = seq.len();
        SequenceCache {
            seq,
            pos,
            lr: vec![0.0; n * num_tasks],
            log_z: vec![0.0; n],
        }
    }

    /// Recomputes the cache from θ and returns the sequence log-likelihood.
    fn rebuild(&mut self, theta: &ThetaMatrix) -> f64 {
        let t = theta.num_tasks();
        let mut lr = theta.basal_vector();
        let mut acquired = vec![false; t];
        let mut ll = 0.0;
        for (m, &next) in self.seq.iter().enumerate() {
            self.lr[m * t..(m + 1) * t].copy_from_slice(&lr);
            let log_z = log_normaliser(&lr, &acquired);
            self.log_z[m] = log_z;
            ll += lr[next] - log_z;
            acquired[next] = true;
            for (r, d) in lr.iter_mut().zip(theta.row(next)) {
                *r += d;
            }
        }
        ll
    }

    /// Steps whose choice depends on `θ[source][target]`.
    fn affected_steps(&self, source: usize, target: usize) -> std::ops::Range<usize> {
        let n = self.seq.len();
        let end = if self.pos[target] == usize::MAX { n } else { self.pos[target] + 1 };
        let start = if source == target {
            0
        } else if self.pos[source] == usize::MAX {
            return 0..0;
        } else {
            self.pos[source] + 1
        };
        start..end.max(start)
    }

    fn delta_loglik(&self, source: usize, target: usize, delta: f64, expm1_delta: f64, t: usize) -> f64 {
        let mut d = 0.0;
        for m in self.affected_steps(source, target) {
            let q = (self.lr[m * t + target] - self.log_z[m]).exp();
            d -= (q * expm1_delta).ln_1p();
            if self.seq[m] == target {
                d += delta;
            }
        }
        d
    }

    fn apply(&mut self, source: usize, target: usize, delta: f64, expm1_delta: f64, t: usize) {
        for m in self.affected_steps(source, target) {
            let q = (self.lr[m * t + target] - self.log_z[m]).exp();
            self.log_z[m] += (q * expm1_delta).ln_1p();
            self.lr[m * t + target] += delta;
        }
    }
}

/// Accepted moves between exact recomputations of the cached normalisers.
const REFRESH_INTERVAL: u64 = 2_000;

/// Random-walk Metropolis-Hastings over θ.
///
/// Target: `Π_k P(s_k | θ) · Π N(θ_ij; 0, prior_sd²)`. Each iteration perturbs
/// one uniformly chosen entry by `N(0, proposal_sd²)`. The chain starts at
/// `θ = 0` and is fully determined by `config.seed`.
pub fn fit_mcmc(sequences: &[Vec<TaskId>], num_tasks: usize, config: &McmcConfig) -> Result<Posterior> {
    config.validate()?;
    if num_tasks == 0 {
        return Err(Error::InvalidConfig("model needs at least one task".into()));
    }
    let mut caches = Vec::new();
    for seq in sequences {
        let idx = sequence_indices(seq, num_tasks)?;
        if !idx.is_empty() {
            caches.push(SequenceCache::new(idx, num_tasks));
        }
    }
    if caches.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }

    let t = num_tasks;
    let mut theta = ThetaMatrix::zeros(t);
    let rebuild_all = |caches: &mut Vec<SequenceCache>, theta: &ThetaMatrix| -> f64 {
        caches.iter_mut().map(|c| c.rebuild(theta)).sum()
    };
    let mut loglik = rebuild_all(&mut caches, &theta);
    if !loglik.is_finite() {
        return Err(Error::NonFiniteLikelihood);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let proposal = Normal::new(0.0, config.proposal_sd).expect("validated sd");
    let inv_two_var = 1.0 / (2.0 * config.prior_sd * config.prior_sd);
    let mut samples = Vec::with_capacity(config.num_samples());
    let mut trace = Vec::with_capacity(config.num_samples());
    let mut accepted = 0u64;

    for iter in 0..config.chain_length {
        let entry = rng.random_range(0..t * t);
        let (source, target) = (entry / t, entry % t);
        let delta = proposal.sample(&mut rng);
        let old = theta.values[entry];
        let new = old + delta;
        let expm1_delta = delta.exp_m1();
        let d_ll: f64 = caches
            .iter()
            .map(|c| c.delta_loglik(source, target, delta, expm1_delta, t))
            .sum();
        if !d_ll.is_finite() {
            return Err(Error::NonFiniteLikelihood);
        }
        let d_prior = (old * old - new * new) * inv_two_var;
        let log_u = rng.random::<f64>().ln();
        if log_u < d_ll + d_prior {
            theta.values[entry] = new;
            for c in caches.iter_mut() {
                c.apply(source, target, delta, expm1_delta, t);
            }
            loglik += d_ll;
            accepted += 1;
            if accepted.is_multiple_of(REFRESH_INTERVAL) {
                loglik = rebuild_all(&mut caches, &theta);
            }
        }
        if iter >= config.burn_in && (iter - config.burn_in + 1).is_multiple_of(config.thinning) {
            samples.push(theta.clone());
            trace.push(loglik);
        }
    }

    let proposed = config.chain_length as u64;
    Ok(Posterior {
        schema_version: POSTERIOR_SCHEMA_VERSION,
        group: String::new(),
        num_tasks: t,
        config: *config,
        diagnostics: McmcDiagnostics {
            proposed,
            accepted,
            acceptance_rate: accepted as f64 / proposed as f64,
            loglik_trace: trace,
            chain_seeds: vec![config.seed],
        },
        samples,
    })
}

/// `ln mean_s P(prefix | θ_s)` over the posterior samples.
pub fn marginal_loglik(prefix: &[TaskId], posterior: &Posterior) -> Result<f64> {
    let idx = sequence_indices(prefix, posterior.num_tasks)?;
    let lls: Vec<f64> = posterior
        .samples
        .par_iter()
        .map(|s| step_log_probs_unchecked(s, &idx).iter().sum())
        .collect();
    Ok(log_mean_exp(&lls))
}

/// Marginal log-likelihood of every prefix `seq[..n]`, `n = 1..=len`.
pub fn prefix_marginal_logliks(seq: &[TaskId], posterior: &Posterior) -> Result<Vec<f64>> {
    let idx = sequence_indices(seq, posterior.num_tasks)?;
    let per_sample: Vec<Vec<f64>> = posterior
        .samples
        .par_iter()
        .map(|s| {
            let mut acc = 0.0;
            step_log_probs_unchecked(s, &idx)
                .into_iter()
                .map(|lp| {
                    acc += lp;
                    acc
                })
                .collect()
        })
        .collect();
    let mut column = vec![0.0; per_sample.len()];
    Ok((0..idx.len())
        .map(|n| {
            for (c, s) in column.iter_mut().zip(&per_sample) {
                *c = s[n];
            }
            log_mean_exp(&column)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u32]) -> Vec<TaskId> {
        v.iter().map(|&t| TaskId(t)).collect()
    }

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn uniform_step_probabilities() {
        let theta = ThetaMatrix::zeros(4);
        let empty = TaskState::empty(4);
        for t in 1..=4 {
            close(step_probability(&theta, &empty, TaskId(t)).unwrap(), 0.25, 1e-15);
        }
        let state = TaskState::from_tasks(4, &ids(&[1, 2])).unwrap();
        close(step_probability(&theta, &state, TaskId(3)).unwrap(), 0.5, 1e-15);
    }

    #[test]
    fn basal_rate_step() {
        let mut theta = ThetaMatrix::zeros(2);
        theta.set(0, 0, 3f64.ln());
        let p = step_probability(&theta, &TaskState::empty(2), TaskId(1)).unwrap();
        close(p, 0.75, 1e-15);
    }

    #[test]
    fn step_errors() {
        let theta = ThetaMatrix::zeros(2);
        let state = TaskState::from_tasks(2, &ids(&[1])).unwrap();
        assert!(matches!(
            step_probability(&theta, &state, TaskId(1)),
            Err(Error::AlreadyAcquired { .. })
        ));
        let full = TaskState::from_tasks(2, &ids(&[1, 2])).unwrap();
        assert!(matches!(step_probability(&theta, &full, TaskId(1)), Err(Error::FullState)));
        assert!(matches!(
            step_probability(&theta, &state, TaskId(3)),
            Err(Error::TaskOutOfRange { .. })
        ));
    }

    #[test]
    fn loglik_examples() {
        let theta = ThetaMatrix::zeros(3);
        close(sequence_loglik(&theta, &ids(&[2, 3, 1])).unwrap(), (1.0f64 / 6.0).ln(), 1e-15);
        let theta4 = ThetaMatrix::zeros(4);
        close(sequence_loglik(&theta4, &ids(&[4, 1])).unwrap(), (1.0f64 / 12.0).ln(), 1e-15);
        let mut theta = ThetaMatrix::zeros(3);
        theta.set(0, 0, 2f64.ln());
        close(sequence_loglik(&theta, &ids(&[1, 2])).unwrap(), 0.25f64.ln(), 1e-15);
        assert_eq!(sequence_loglik(&theta, &[]).unwrap(), 0.0);
    }

    #[test]
    fn loglik_errors() {
        let theta = ThetaMatrix::zeros(3);
        assert!(matches!(
            sequence_loglik(&theta, &ids(&[1, 1])),
            Err(Error::DuplicateTask { .. })
        ));
        assert!(matches!(
            sequence_loglik(&theta, &ids(&[4])),
            Err(Error::TaskOutOfRange { .. })
        ));
        assert!(matches!(
            sequence_loglik(&theta, &ids(&[0])),
            Err(Error::TaskOutOfRange { .. })
        ));
    }

    #[test]
    fn sample_lengths() {
        let theta = ThetaMatrix::zeros(5);
        let s = sample_sequence(&theta, 5, 9).unwrap();
        let mut sorted = s.clone();
        sorted.sort();
        assert_eq!(sorted, ids(&[1, 2, 3, 4, 5]));
        assert!(matches!(sample_sequence(&theta, 0, 1), Err(Error::LengthOutOfRange { .. })));
        assert!(matches!(sample_sequence(&theta, 6, 1), Err(Error::LengthOutOfRange { .. })));
        assert_eq!(sample_sequence(&theta, 3, 4).unwrap(), sample_sequence(&theta, 3, 4).unwrap());
    }

    #[test]
    fn strong_basal_rate_dominates_first_pick() {
        let mut theta = ThetaMatrix::zeros(3);
        theta.set(1, 1, 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = 20_000;
        let hits = (0..draws)
            .filter(|_| sample_sequence_with(&theta, 1, &mut rng).unwrap()[0] == TaskId(2))
            .count();
        let exact = 10f64.exp() / (10f64.exp() + 2.0);
        assert!(hits as f64 / draws as f64 > 0.99);
        assert!(exact > 0.99);
    }

    #[test]
    fn mcmc_config_validation() {
        let cfg = McmcConfig {
            chain_length: 100,
            burn_in: 100,
            ..McmcConfig::default()
        };
        assert!(matches!(fit_mcmc(&[ids(&[1, 2])], 2, &cfg), Err(Error::EmptyPosterior)));
        let cfg = McmcConfig {
            chain_length: 100,
            burn_in: 0,
            thinning: 10,
            ..McmcConfig::default()
        };
        assert!(matches!(fit_mcmc(&[], 2, &cfg), Err(Error::EmptyTrainingSet)));
        assert!(matches!(fit_mcmc(&[vec![]], 2, &cfg), Err(Error::EmptyTrainingSet)));
        let p = fit_mcmc(&[ids(&[1, 2])], 2, &cfg).unwrap();
        assert_eq!(p.samples.len(), 10);
        assert_eq!(p.diagnostics.loglik_trace.len(), 10);
    }

    #[test]
    fn incremental_likelihood_tracks_exact_value() {
        let seqs = vec![ids(&[1, 3, 2, 4]), ids(&[2, 1]), ids(&[4, 3, 1, 2]), ids(&[3])];
        let cfg = McmcConfig {
            chain_length: 5_000,
            burn_in: 0,
            thinning: 50,
            proposal_sd: 0.5,
            prior_sd: 2.0,
            seed: 11,
        };
        let post = fit_mcmc(&seqs, 4, &cfg).unwrap();
        for (theta, &ll) in post.samples.iter().zip(&post.diagnostics.loglik_trace) {
            let exact: f64 = seqs.iter().map(|s| sequence_loglik(theta, s).unwrap()).sum();
            close(ll, exact, 1e-9);
        }
        assert!(post.diagnostics.acceptance_rate > 0.05);
    }

    #[test]
    fn marginal_examples() {
        let mut a = ThetaMatrix::zeros(2);
        a.set(0, 0, 0.7);
        let single = Posterior::from_samples("g", vec![a.clone()]).unwrap();
        let seq = ids(&[1]);
        close(
            marginal_loglik(&seq, &single).unwrap(),
            sequence_loglik(&a, &seq).unwrap(),
            1e-15,
        );
        let twice = Posterior::from_samples("g", vec![a.clone(), a.clone()]).unwrap();
        close(
            marginal_loglik(&seq, &twice).unwrap(),
            sequence_loglik(&a, &seq).unwrap(),
            1e-15,
        );
        // likelihoods 0.2 and 0.4 for first pick = task 1
        let mut b = ThetaMatrix::zeros(2);
        b.set(1, 1, 4f64.ln());
        let mut c = ThetaMatrix::zeros(2);
        c.set(1, 1, 1.5f64.ln());
        close(sequence_loglik(&b, &seq).unwrap().exp(), 0.2, 1e-15);
        close(sequence_loglik(&c, &seq).unwrap().exp(), 0.4, 1e-15);
        let mixed = Posterior::from_samples("g", vec![b, c]).unwrap();
        close(marginal_loglik(&seq, &mixed).unwrap(), 0.3f64.ln(), 1e-14);
    }

    #[test]
    fn prefix_marginals_match_marginal() {
        let mut a = ThetaMatrix::zeros(4);
        a.set(0, 1, 1.2);
        a.set(2, 2, -0.4);
        let post = Posterior::from_samples("g", vec![a, ThetaMatrix::zeros(4)]).unwrap();
        let seq = ids(&[3, 1, 2, 4]);
        let curve = prefix_marginal_logliks(&seq, &post).unwrap();
        for n in 1..=4 {
            close(curve[n - 1], marginal_loglik(&seq[..n], &post).unwrap(), 1e-12);
        }
    }

    #[test]
    fn posterior_json_round_trip() {
        let seqs = vec![ids(&[1, 2, 3])];
        let cfg = McmcConfig {
            chain_length: 300,
            burn_in: 100,
            thinning: 50,
            ..McmcConfig::default()
        };
        let mut post = fit_mcmc(&seqs, 3, &cfg).unwrap();
        post.group = "g1".into();
        let back = Posterior::from_json(&post.to_json().unwrap()).unwrap();
        assert_eq!(back, post);
        let bad = post.to_json().unwrap().replace("\"schema_version\":1", "\"schema_version\":9");
        assert!(Posterior::from_json(&bad).is_err());
    }

    #[test]
    fn merging_chains() {
        let seqs = vec![ids(&[1, 2])];
        let cfg = |seed| McmcConfig {
            chain_length: 200,
            burn_in: 0,
            thinning: 20,
            seed,
            ..McmcConfig::default()
        };
        let a = fit_mcmc(&seqs, 2, &cfg(1)).unwrap();
        let b = fit_mcmc(&seqs, 2, &cfg(2)).unwrap();
        let merged = a.merge(b).unwrap();
        assert_eq!(merged.samples.len(), 20);
        assert_eq!(merged.diagnostics.chain_seeds, vec![1, 2]);
        assert_eq!(merged.diagnostics.proposed, 400);
    }
}
