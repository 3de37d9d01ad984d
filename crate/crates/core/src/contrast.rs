//! High versus low performer comparisons.
//!
//! Learners are split by grade into a top and bottom quantile. The two groups
//! are then compared through their transition matrices (`Δπ = π_high - π_low`),
//! per-task completion frequency and mean sequence position, and survey
//! confidence.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Cohort, Confidence, LearnerRecord, TaskId, TaskType};
use crate::matrix::Matrix;
use crate::seqstats::{session_transition_matrix, transition_probability_matrix, TransitionMatrix};
use crate::stats::{self, TTest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitWarning {
    /// Equal grades straddle a group boundary; membership was decided by learner id.
    BoundaryTie,
    /// The lowest high-group grade equals the highest low-group grade.
    DegenerateSplit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSplit {
    pub quantile: f64,
    /// `g_1`, best grade first.
    pub high: Vec<String>,
    /// `g_2`, best grade first.
    pub low: Vec<String>,
    pub warnings: Vec<SplitWarning>,
}

impl GroupSplit {
    /// Same split with the group labels exchanged.
    pub fn swapped(&self) -> GroupSplit {
        GroupSplit {
            quantile: self.quantile,
            high: self.low.clone(),
            low: self.high.clone(),
            warnings: self.warnings.clone(),
        }
    }
}

/// Top and bottom `⌊q·N'⌋` learners by grade, where `N'` counts graded learners.
///
/// Learners are ranked by descending grade, then ascending learner id.
pub fn split_by_grade(cohort: &Cohort, quantile: f64) -> Result<GroupSplit> {
    if !(quantile > 0.0 && quantile <= 0.5) {
        return Err(Error::InvalidQuantile(quantile));
    }
    let mut graded: Vec<(&str, f64)> = cohort
        .learners()
        .iter()
        .filter_map(|l| l.grade.map(|g| (l.learner_id.as_str(), g)))
        .collect();
    let n = graded.len();
    // tolerate q·N' landing just below an integer
    let k = (quantile * n as f64 + 1e-9).floor() as usize;
    if n < 2 || k == 0 {
        return Err(Error::TooFewGraded { graded: n });
    }
    graded.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));

    let mut warnings = Vec::new();
    let high_tie = k < n && graded[k - 1].1 == graded[k].1;
    let low_tie = n - k > 0 && graded[n - k].1 == graded[n - k - 1].1;
    if high_tie || low_tie {
        warnings.push(SplitWarning::BoundaryTie);
    }
    if graded[k - 1].1 == graded[n - k].1 {
        warnings.push(SplitWarning::DegenerateSplit);
    }
    Ok(GroupSplit {
        quantile,
        high: graded[..k].iter().map(|(id, _)| id.to_string()).collect(),
        low: graded[n - k..].iter().map(|(id, _)| id.to_string()).collect(),
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Task,
    Session,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaTransition {
    pub level: Level,
    /// `π_high - π_low`
    pub delta: Matrix<f64>,
    /// `max(Δπ, 0)`
    pub positive: Matrix<f64>,
    /// `max(-Δπ, 0)`
    pub negative: Matrix<f64>,
    pub high: TransitionMatrix,
    pub low: TransitionMatrix,
}

fn group_transitions(cohort: &Cohort, ids: &[String], level: Level, label: &str) -> Result<TransitionMatrix> {
    let sub = cohort.subset(ids)?;
    let result = match level {
        Level::Task => transition_probability_matrix(&sub),
        Level::Session => session_transition_matrix(&sub),
    };
    result.map_err(|e| match e {
        Error::NoTransitions { .. } => Error::NoTransitions {
            group: Some(label.to_string()),
        },
        other => other,
    })
}

pub fn delta_transition(cohort: &Cohort, split: &GroupSplit, level: Level) -> Result<DeltaTransition> {
    let high = group_transitions(cohort, &split.high, level, "high")?;
    let low = group_transitions(cohort, &split.low, level, "low")?;
    let delta = high.conditional.zip_map(&low.conditional, |a, b| a - b);
    Ok(DeltaTransition {
        level,
        positive: delta.map(|&d| d.max(0.0)),
        negative: delta.map(|&d| (-d).max(0.0)),
        delta,
        high,
        low,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskContrast {
    pub task_id: TaskId,
    pub task_type: TaskType,
    pub freq_high: f64,
    pub freq_low: f64,
    /// `freq_high - freq_low`
    pub dfreq: f64,
    pub meanrank_high: Option<f64>,
    pub meanrank_low: Option<f64>,
    /// `meanrank_low - meanrank_high`; positive when high performers complete
    /// the task earlier in their sequences.
    pub drank: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
}

impl Spread {
    fn of(values: &[f64]) -> Option<Spread> {
        stats::quartiles(values).map(|(q25, median, q75)| Spread { q25, median, q75 })
    }
}

/// Median and interquartile range of a task type's contrasts, over the tasks
/// of that type whose `drank` is defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeSummary {
    pub task_type: TaskType,
    pub tasks: usize,
    pub dfreq: Option<Spread>,
    pub drank: Option<Spread>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskContrastReport {
    pub tasks: Vec<TaskContrast>,
    pub by_type: Vec<TypeSummary>,
}

/// Per task: (learners containing it, sum of one-based positions).
fn completion_tally<'a>(learners: impl Iterator<Item = &'a LearnerRecord>, t: usize) -> (usize, Vec<u64>, Vec<u64>) {
    let mut members = 0;
    let mut count = vec![0u64; t];
    let mut rank_sum = vec![0u64; t];
    for learner in learners {
        members += 1;
        for (pos, task) in learner.sequence.iter().enumerate() {
            count[task.index()] += 1;
            rank_sum[task.index()] += pos as u64 + 1;
        }
    }
    (members, count, rank_sum)
}

pub fn task_contrast(cohort: &Cohort, split: &GroupSplit) -> Result<TaskContrastReport> {
    let t = cohort.course().num_tasks();
    let high = cohort.subset(&split.high)?;
    let low = cohort.subset(&split.low)?;
    let (n_high, count_high, sum_high) = completion_tally(high.learners().iter(), t);
    let (n_low, count_low, sum_low) = completion_tally(low.learners().iter(), t);

    let freq = |count: u64, members: usize| {
        if members == 0 {
            0.0
        } else {
            count as f64 / members as f64
        }
    };
    let meanrank = |sum: u64, count: u64| (count > 0).then(|| sum as f64 / count as f64);

    let tasks: Vec<TaskContrast> = cohort
        .course()
        .tasks()
        .iter()
        .map(|task| {
            let i = task.task_id.index();
            let freq_high = freq(count_high[i], n_high);
            let freq_low = freq(count_low[i], n_low);
            let meanrank_high = meanrank(sum_high[i], count_high[i]);
            let meanrank_low = meanrank(sum_low[i], count_low[i]);
            TaskContrast {
                task_id: task.task_id,
                task_type: task.task_type,
                freq_high,
                freq_low,
                dfreq: freq_high - freq_low,
                meanrank_high,
                meanrank_low,
                drank: meanrank_high.zip(meanrank_low).map(|(h, l)| l - h),
            }
        })
        .collect();

    let mut grouped: BTreeMap<TaskType, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for c in &tasks {
        let entry = grouped.entry(c.task_type).or_default();
        if let Some(drank) = c.drank {
            entry.0.push(c.dfreq);
            entry.1.push(drank);
        }
    }
    let by_type = grouped
        .into_iter()
        .map(|(task_type, (dfreq, drank))| TypeSummary {
            task_type,
            tasks: dfreq.len(),
            dfreq: Spread::of(&dfreq),
            drank: Spread::of(&drank),
        })
        .collect();
    Ok(TaskContrastReport { tasks, by_type })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_task_contrast_csv(report: &TaskContrastReport, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "task_id",
        "task_type",
        "freq_high",
        "freq_low",
        "dfreq",
        "meanrank_high",
        "meanrank_low",
        "drank",
    ])?;
    for c in &report.tasks {
        w.write_record([
            c.task_id.to_string(),
            c.task_type.token().to_string(),
            c.freq_high.to_string(),
            c.freq_low.to_string(),
            c.dfreq.to_string(),
            opt(c.meanrank_high),
            opt(c.meanrank_low),
            opt(c.drank),
        ])?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Confidence
// ---------------------------------------------------------------------------

/// `C = confident / (revisit + support + confident)` over the learner's
/// responses, optionally restricted to `tasks`.
pub fn confidence_score(learner: &LearnerRecord, tasks: Option<&BTreeSet<TaskId>>) -> Option<f64> {
    let (mut confident, mut total) = (0u64, 0u64);
    for (task, response) in &learner.confidence {
        if tasks.is_some_and(|set| !set.contains(task)) {
            continue;
        }
        total += 1;
        if *response == Confidence::Confident {
            confident += 1;
        }
    }
    (total > 0).then(|| confident as f64 / total as f64)
}

fn confident_fraction<'a>(learners: impl Iterator<Item = &'a LearnerRecord>, task: TaskId) -> Option<f64> {
    let (mut confident, mut total) = (0u64, 0u64);
    for learner in learners {
        if let Some(response) = learner.confidence.get(&task) {
            total += 1;
            if *response == Confidence::Confident {
                confident += 1;
            }
        }
    }
    (total > 0).then(|| confident as f64 / total as f64)
}

/// Fraction of learners answering the survey for `task` who said they were confident.
pub fn task_confidence(cohort: &Cohort, task: TaskId) -> Result<Option<f64>> {
    if !cohort.course().contains(task) {
        return Err(Error::TaskOutOfRange {
            task: task.0 as i64,
            max: cohort.course().num_tasks(),
        });
    }
    Ok(confident_fraction(cohort.learners().iter(), task))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupConfidence {
    /// Learners with at least one response.
    pub responding: usize,
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfidence {
    pub learner_id: String,
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceStats {
    pub learners: Vec<LearnerConfidence>,
    pub high: GroupConfidence,
    pub low: GroupConfidence,
    /// Tasks answered by both groups; the pairing index of the t-test.
    pub paired_tasks: Vec<TaskId>,
    pub paired_test: Option<TTest>,
    /// Why the paired test could not be computed, if it could not.
    pub paired_test_error: Option<String>,
}

fn group_confidence(cohort: &Cohort, ids: &[String]) -> GroupConfidence {
    let scores: Vec<f64> = ids
        .iter()
        .filter_map(|id| cohort.learner(id))
        .filter_map(|l| confidence_score(l, None))
        .collect();
    GroupConfidence {
        responding: scores.len(),
        mean: (!scores.is_empty()).then(|| stats::mean(&scores)),
        std: stats::sample_std(&scores),
    }
}

/// Per-learner `C`, per-group summaries, and a paired t-test over tasks of
/// the per-task confident fraction in each group. `None` when nobody answered
/// the survey.
pub fn confidence_stats(cohort: &Cohort, split: &GroupSplit) -> Result<Option<ConfidenceStats>> {
    if cohort.learners().iter().all(|l| l.confidence.is_empty()) {
        return Ok(None);
    }
    let high = cohort.subset(&split.high)?;
    let low = cohort.subset(&split.low)?;
    let mut paired_tasks = Vec::new();
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for task in cohort.course().tasks() {
        let h = confident_fraction(high.learners().iter(), task.task_id);
        let l = confident_fraction(low.learners().iter(), task.task_id);
        if let (Some(h), Some(l)) = (h, l) {
            paired_tasks.push(task.task_id);
            x.push(h);
            y.push(l);
        }
    }
    let (paired_test, paired_test_error) = match stats::paired_t_test(&x, &y) {
        Ok(t) => (Some(t), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(Some(ConfidenceStats {
        learners: cohort
            .learners()
            .iter()
            .map(|l| LearnerConfidence {
                learner_id: l.learner_id.clone(),
                score: confidence_score(l, None),
            })
            .collect(),
        high: group_confidence(cohort, &split.high),
        low: group_confidence(cohort, &split.low),
        paired_tasks,
        paired_test,
        paired_test_error,
    }))
}
