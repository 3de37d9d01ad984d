//! Two-group naive Bayes classification of sequence prefixes.
//!
//! For a prefix `s` of a learner's sequence the posterior odds of membership
//! in `g_1` against `g_2` are
//!
//! ```text
//! P(g_1 | s) / P(g_2 | s) = P(s | π(g_1)) P(g_1) / (P(s | π(g_2)) P(g_2))
//! ```
//!
//! where `P(s | π(g))` averages the sequence likelihood over posterior
//! samples fitted to group `g`.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contrast::{split_by_grade, GroupSplit};
use crate::error::{Error, Result};
use crate::hypertraps::{fit_mcmc, marginal_loglik, prefix_marginal_logliks, McmcConfig, Posterior};
use crate::ingest::{Cohort, LearnerRecord, TaskId};
use crate::seed::derive_seed;

#[derive(Debug, Clone)]
pub struct ClassifierInput {
    pub posterior_g1: Posterior,
    pub posterior_g2: Posterior,
    pub prior_g1: f64,
    pub prior_g2: f64,
}

impl ClassifierInput {
    pub fn new(posterior_g1: Posterior, posterior_g2: Posterior, prior_g1: f64, prior_g2: f64) -> Result<Self> {
        if !(prior_g1 > 0.0 && prior_g2 > 0.0) || ((prior_g1 + prior_g2) - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "group priors must be positive and sum to 1 (got {prior_g1}, {prior_g2})"
            )));
        }
        if posterior_g1.num_tasks != posterior_g2.num_tasks {
            return Err(Error::DimensionMismatch {
                expected: posterior_g1.num_tasks,
                found: posterior_g2.num_tasks,
            });
        }
        Ok(ClassifierInput {
            posterior_g1,
            posterior_g2,
            prior_g1,
            prior_g2,
        })
    }

    /// Same classifier with the group labels exchanged.
    pub fn swapped(&self) -> ClassifierInput {
        ClassifierInput {
            posterior_g1: self.posterior_g2.clone(),
            posterior_g2: self.posterior_g1.clone(),
            prior_g1: self.prior_g2,
            prior_g2: self.prior_g1,
        }
    }

    fn log_prior_odds(&self) -> f64 {
        self.prior_g1.ln() - self.prior_g2.ln()
    }
}

/// Smallest probability reported; keeps outputs strictly inside (0, 1).
const PROB_FLOOR: f64 = f64::EPSILON / 2.0;

/// Logistic function of the log-odds.
///
/// The smaller of `p` and `1 - p` is rounded to a multiple of 2⁻⁵³ so that
/// `1 - p` is exact and negating the log-odds maps `p` to exactly `1 - p`.
pub fn probability_from_log_odds(log_odds: f64) -> f64 {
    let e = (-log_odds.abs()).exp();
    let small = e / (1.0 + e);
    let scale = 2f64.powi(53);
    let small = ((small * scale).round() / scale).max(PROB_FLOOR);
    if log_odds >= 0.0 {
        1.0 - small
    } else {
        small
    }
}

/// `P(g_1 | prefix)`
pub fn classify_prefix(prefix: &[TaskId], input: &ClassifierInput) -> Result<f64> {
    let l1 = marginal_loglik(prefix, &input.posterior_g1)?;
    let l2 = marginal_loglik(prefix, &input.posterior_g2)?;
    Ok(probability_from_log_odds(l1 - l2 + input.log_prior_odds()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupLabel {
    G1,
    G2,
}

impl GroupLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            GroupLabel::G1 => "g1",
            GroupLabel::G2 => "g2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityCurve {
    pub learner_id: String,
    pub true_group: GroupLabel,
    /// `P(g_1 | first n tasks)` for `n = 1..=n_k`.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveAggregate {
    /// Learners still contributing at each prefix length.
    pub learners: Vec<usize>,
    pub mean: Vec<f64>,
    pub fraction_above_half: Vec<f64>,
}

impl CurveAggregate {
    pub fn of(curves: &[&ProbabilityCurve]) -> CurveAggregate {
        let longest = curves.iter().map(|c| c.values.len()).max().unwrap_or(0);
        let mut agg = CurveAggregate {
            learners: vec![0; longest],
            mean: vec![0.0; longest],
            fraction_above_half: vec![0.0; longest],
        };
        for n in 0..longest {
            let values: Vec<f64> = curves.iter().filter_map(|c| c.values.get(n).copied()).collect();
            let k = values.len() as f64;
            agg.learners[n] = values.len();
            agg.mean[n] = values.iter().sum::<f64>() / k;
            agg.fraction_above_half[n] = values.iter().filter(|&&v| v > 0.5).count() as f64 / k;
        }
        agg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSet {
    pub curves: Vec<ProbabilityCurve>,
    /// Over all evaluated learners.
    pub all: CurveAggregate,
    pub g1: CurveAggregate,
    pub g2: CurveAggregate,
}

/// Classifies every prefix of every learner. Learners with empty sequences are skipped.
pub fn probability_curves(learners: &[(&LearnerRecord, GroupLabel)], input: &ClassifierInput) -> Result<CurveSet> {
    let log_prior = input.log_prior_odds();
    let curves = learners
        .par_iter()
        .filter(|(l, _)| !l.is_empty())
        .map(|(learner, label)| {
            let l1 = prefix_marginal_logliks(&learner.sequence, &input.posterior_g1)?;
            let l2 = prefix_marginal_logliks(&learner.sequence, &input.posterior_g2)?;
            Ok(ProbabilityCurve {
                learner_id: learner.learner_id.clone(),
                true_group: *label,
                values: l1
                    .iter()
                    .zip(&l2)
                    .map(|(a, b)| probability_from_log_odds(a - b + log_prior))
                    .collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pick = |g: Option<GroupLabel>| -> Vec<&ProbabilityCurve> {
        curves
            .iter()
            .filter(|c| g.is_none_or(|g| c.true_group == g))
            .collect()
    };
    Ok(CurveSet {
        all: CurveAggregate::of(&pick(None)),
        g1: CurveAggregate::of(&pick(Some(GroupLabel::G1))),
        g2: CurveAggregate::of(&pick(Some(GroupLabel::G2))),
        curves,
    })
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentMode {
    InSample,
    Holdout,
}

impl std::str::FromStr for ExperimentMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "in-sample" | "in_sample" => Ok(ExperimentMode::InSample),
            "holdout" => Ok(ExperimentMode::Holdout),
            other => Err(Error::InvalidConfig(format!("unknown experiment mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub quantile: f64,
    pub mode: ExperimentMode,
    pub holdout_frac: f64,
    pub seed: u64,
    pub mcmc: McmcConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupFit {
    pub label: GroupLabel,
    pub train: Vec<String>,
    pub test: Vec<String>,
    pub chain_seed: u64,
    pub acceptance_rate: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub split: GroupSplit,
    pub prior_g1: f64,
    pub prior_g2: f64,
    pub g1: GroupFit,
    pub g2: GroupFit,
    pub curves: CurveSet,
}

/// Output of [`run_experiment_with_posteriors`], keeping the fitted posteriors.
pub struct Experiment {
    pub report: ExperimentReport,
    pub posterior_g1: Posterior,
    pub posterior_g2: Posterior,
}

/// Splits `ids` into (train, test) by seeded shuffle; `ids` order is kept within each part.
fn holdout_partition(ids: &[String], frac: f64, rng: &mut ChaCha8Rng) -> (Vec<String>, Vec<String>) {
    let n_test = ((ids.len() as f64 * frac).round() as usize).clamp(1, ids.len());
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.shuffle(rng);
    let mut is_test = vec![false; ids.len()];
    for &i in &order[..n_test] {
        is_test[i] = true;
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (id, t) in ids.iter().zip(is_test) {
        if t {
            test.push(id.clone());
        } else {
            train.push(id.clone());
        }
    }
    (train, test)
}

pub fn run_experiment(cohort: &Cohort, config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment_with_posteriors(cohort, config).map(|e| e.report)
}

/// Splits by grade, fits one posterior per group and classifies every prefix.
///
/// In-sample mode trains and evaluates on all members of both groups. Holdout
/// mode shuffles each group with the experiment seed, holds out
/// `holdout_frac` of it for evaluation and trains on the rest. Priors are the
/// training-set group proportions.
pub fn run_experiment_with_posteriors(cohort: &Cohort, config: &ExperimentConfig) -> Result<Experiment> {
    config.mcmc.validate()?;
    let split = split_by_grade(cohort, config.quantile)?;
    let active = |ids: &[String]| -> Vec<String> {
        ids.iter()
            .filter(|id| cohort.learner(id).is_some_and(|l| !l.is_empty()))
            .cloned()
            .collect()
    };
    let high = active(&split.high);
    let low = active(&split.low);

    let ((train1, test1), (train2, test2)) = match config.mode {
        ExperimentMode::InSample => ((high.clone(), high), (low.clone(), low)),
        ExperimentMode::Holdout => {
            if !(config.holdout_frac > 0.0 && config.holdout_frac < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "holdout_frac must lie in (0, 1), got {}",
                    config.holdout_frac
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let a = holdout_partition(&high, config.holdout_frac, &mut rng);
            let b = holdout_partition(&low, config.holdout_frac, &mut rng);
            (a, b)
        }
    };
    for (label, train) in [("g1", &train1), ("g2", &train2)] {
        if train.len() < 2 {
            return Err(Error::GroupTooSmall {
                group: label.to_string(),
                size: train.len(),
            });
        }
    }

    let sequences = |ids: &[String]| -> Vec<Vec<TaskId>> {
        ids.iter()
            .filter_map(|id| cohort.learner(id))
            .map(|l| l.sequence.clone())
            .collect()
    };
    let t = cohort.course().num_tasks();
    let seed1 = derive_seed(config.seed, 1);
    let seed2 = derive_seed(config.seed, 2);
    let (post1, post2) = rayon::join(
        || fit_mcmc(&sequences(&train1), t, &McmcConfig { seed: seed1, ..config.mcmc }),
        || fit_mcmc(&sequences(&train2), t, &McmcConfig { seed: seed2, ..config.mcmc }),
    );
    let (mut post1, mut post2) = (post1?, post2?);
    post1.group = "g1".into();
    post2.group = "g2".into();

    let total = (train1.len() + train2.len()) as f64;
    let prior_g1 = train1.len() as f64 / total;
    let prior_g2 = train2.len() as f64 / total;
    let input = ClassifierInput::new(post1, post2, prior_g1, prior_g2)?;

    let mut evaluated: Vec<(&LearnerRecord, GroupLabel)> = Vec::new();
    for (ids, label) in [(&test1, GroupLabel::G1), (&test2, GroupLabel::G2)] {
        evaluated.extend(ids.iter().filter_map(|id| cohort.learner(id)).map(|l| (l, label)));
    }
    let curves = probability_curves(&evaluated, &input)?;

    let fit = |label, train: Vec<String>, test: Vec<String>, seed, post: &Posterior| GroupFit {
        label,
        train,
        test,
        chain_seed: seed,
        acceptance_rate: post.diagnostics.acceptance_rate,
        samples: post.samples.len(),
    };
    let report = ExperimentReport {
        config: config.clone(),
        prior_g1,
        prior_g2,
        g1: fit(GroupLabel::G1, train1, test1, seed1, &input.posterior_g1),
        g2: fit(GroupLabel::G2, train2, test2, seed2, &input.posterior_g2),
        split,
        curves,
    };
    Ok(Experiment {
        report,
        posterior_g1: input.posterior_g1,
        posterior_g2: input.posterior_g2,
    })
}

/// Long format `learner_id,true_group,n,p_g1`.
pub fn write_curves_csv(curves: &CurveSet, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["learner_id", "true_group", "n", "p_g1"])?;
    for curve in &curves.curves {
        for (n, p) in curve.values.iter().enumerate() {
            w.write_record([
                curve.learner_id.clone(),
                curve.true_group.as_str().to_string(),
                (n + 1).to_string(),
                p.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
