//! Synthetic cohorts drawn from known model parameters, plus exact
//! enumeration oracles for small courses.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypertraps::{sample_sequence_with, ThetaMatrix};
use crate::ingest::{self, Cohort, Confidence, CourseSpec, LearnerRecord, Task, TaskId, TaskType};
use crate::matrix::Matrix;
use crate::seed::derive_seed;
use crate::seqstats::PositionMatrix;

/// Largest course handled by the enumeration oracles.
pub const MAX_ENUMERATION_TASKS: usize = 8;

/// Base parameter pattern for a group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThetaSpec {
    /// All log-rates zero: uniformly random orderings.
    Zero,
    /// Completing task `i` raises the log-rate of `i + 1` by `strength`;
    /// task 1 gets basal log-rate `start`.
    NominalChain { strength: f64, start: f64 },
    /// Mirror image of `NominalChain`, running from task T down to task 1.
    ReverseChain { strength: f64, start: f64 },
    /// Full matrix, `rows[source][target]`.
    Explicit { rows: Vec<Vec<f64>> },
}

/// Single entry set after the base pattern is built (one-based ids).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaOverride {
    pub source: u32,
    pub target: u32,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaConfig {
    #[serde(flatten)]
    pub base: ThetaSpec,
    #[serde(default)]
    pub overrides: Vec<ThetaOverride>,
}

impl ThetaConfig {
    pub fn build(&self, num_tasks: usize) -> Result<ThetaMatrix> {
        let t = num_tasks;
        let mut theta = match &self.base {
            ThetaSpec::Zero => ThetaMatrix::zeros(t),
            ThetaSpec::NominalChain { strength, start } => {
                let mut m = ThetaMatrix::zeros(t);
                m.set(0, 0, *start);
                for i in 0..t.saturating_sub(1) {
                    m.set(i, i + 1, *strength);
                }
                m
            }
            ThetaSpec::ReverseChain { strength, start } => {
                let mut m = ThetaMatrix::zeros(t);
                m.set(t - 1, t - 1, *start);
                for i in 1..t {
                    m.set(i, i - 1, *strength);
                }
                m
            }
            ThetaSpec::Explicit { rows } => {
                let m = ThetaMatrix::from_rows(rows)?;
                if m.num_tasks() != t {
                    return Err(Error::DimensionMismatch {
                        expected: t,
                        found: m.num_tasks(),
                    });
                }
                m
            }
        };
        for o in &self.overrides {
            let (s, g) = (o.source as usize, o.target as usize);
            if s == 0 || g == 0 || s > t || g > t || !o.value.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "theta override ({}, {}) = {} is out of range",
                    o.source, o.target, o.value
                )));
            }
            theta.set(s - 1, g - 1, o.value);
        }
        Ok(theta)
    }
}

/// Grades drawn uniformly from `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradeModel {
    pub min: f64,
    pub max: f64,
}

/// Sequence length `min_length + K`, capped at `T`, where `K` counts the
/// further tasks completed before stopping with probability `stop_prob` at
/// each step (a truncated geometric law). `min_length` is at least 1 so every
/// synthetic learner appears in the events file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DropoutModel {
    pub min_length: usize,
    pub stop_prob: f64,
}

impl Default for DropoutModel {
    fn default() -> Self {
        DropoutModel {
            min_length: 1,
            stop_prob: 0.0,
        }
    }
}

impl DropoutModel {
    fn draw<R: Rng>(&self, num_tasks: usize, rng: &mut R) -> usize {
        let mut len = self.min_length.min(num_tasks);
        while len < num_tasks && rng.random::<f64>() >= self.stop_prob {
            len += 1;
        }
        len
    }
}

/// Response probabilities for each completed task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceModel {
    pub confident: f64,
    pub revisit: f64,
    pub support: f64,
}

impl ConfidenceModel {
    fn draw<R: Rng>(&self, rng: &mut R) -> Confidence {
        let total = self.confident + self.revisit + self.support;
        let u = rng.random::<f64>() * total;
        if u < self.confident {
            Confidence::Confident
        } else if u < self.confident + self.revisit {
            Confidence::Revisit
        } else {
            Confidence::Support
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupScenario {
    pub name: String,
    pub learners: usize,
    pub theta: ThetaConfig,
    pub grade: GradeModel,
    #[serde(default)]
    pub dropout: DropoutModel,
    #[serde(default)]
    pub confidence: Option<ConfidenceModel>,
}

/// Groups are listed from best to worst grade band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub num_tasks: usize,
    pub num_sessions: usize,
    /// Task types in nominal order; defaults to cycling through every type.
    #[serde(default)]
    pub task_types: Option<Vec<TaskType>>,
    pub groups: Vec<GroupScenario>,
    pub seed: u64,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.num_tasks == 0 {
            return bad("scenario needs at least one task".into());
        }
        if let Some(types) = &self.task_types {
            if types.len() != self.num_tasks {
                return bad(format!("{} task types for {} tasks", types.len(), self.num_tasks));
            }
        }
        for g in &self.groups {
            if !(0.0..=100.0).contains(&g.grade.min) || !(0.0..=100.0).contains(&g.grade.max) || g.grade.min > g.grade.max {
                return bad(format!("group {}: grade band must lie within [0, 100]", g.name));
            }
            if g.dropout.min_length == 0 || g.dropout.min_length > self.num_tasks || !(0.0..=1.0).contains(&g.dropout.stop_prob) {
                return bad(format!("group {}: invalid dropout model", g.name));
            }
            if let Some(c) = g.confidence {
                let ok = [c.confident, c.revisit, c.support].iter().all(|p| *p >= 0.0 && p.is_finite())
                    && c.confident + c.revisit + c.support > 0.0;
                if !ok {
                    return bad(format!("group {}: invalid confidence model", g.name));
                }
            }
        }
        for pair in self.groups.windows(2) {
            if pair[0].grade.min < pair[1].grade.max {
                return bad(format!(
                    "grade bands of {} and {} overlap; list groups from best to worst",
                    pair[0].name, pair[1].name
                ));
            }
        }
        let mut names: Vec<&str> = self.groups.iter().map(|g| g.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return bad("group names must be unique".into());
        }
        Ok(())
    }

    pub fn course(&self) -> Result<CourseSpec> {
        let base = CourseSpec::uniform(self.num_tasks, self.num_sessions)?;
        match &self.task_types {
            None => Ok(base),
            Some(types) => CourseSpec::new(
                base.tasks()
                    .iter()
                    .zip(types)
                    .map(|(t, ty)| Task {
                        task_id: t.task_id,
                        session_id: t.session_id,
                        task_type: *ty,
                    })
                    .collect(),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCohort {
    pub cohort: Cohort,
    /// learner id → group name
    pub labels: BTreeMap<String, String>,
    pub thetas: BTreeMap<String, ThetaMatrix>,
}

/// Draws every learner of every group. Learner `k` of the scenario uses its
/// own seed derived from the scenario seed, so output is independent of
/// evaluation order.
pub fn generate_cohort(scenario: &Scenario) -> Result<SyntheticCohort> {
    scenario.validate()?;
    let course = scenario.course()?;
    let t = scenario.num_tasks;
    let mut learners = Vec::new();
    let mut labels = BTreeMap::new();
    let mut thetas = BTreeMap::new();
    let mut global = 0u64;
    for group in &scenario.groups {
        let theta = group.theta.build(t)?;
        for k in 0..group.learners {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(scenario.seed, global));
            global += 1;
            let id = format!("{}-{:03}", group.name, k);
            let len = group.dropout.draw(t, &mut rng);
            let sequence = sample_sequence_with(&theta, len, &mut rng)?;
            let mut record = LearnerRecord::new(id.clone(), sequence);
            record.grade = Some(group.grade.min + rng.random::<f64>() * (group.grade.max - group.grade.min));
            if let Some(model) = group.confidence {
                for &task in &record.sequence {
                    record.confidence.insert(task, model.draw(&mut rng));
                }
            }
            labels.insert(id, group.name.clone());
            learners.push(record);
        }
        thetas.insert(group.name.clone(), theta);
    }
    Ok(SyntheticCohort {
        cohort: Cohort::new(course, learners)?,
        labels,
        thetas,
    })
}

/// Writes `course.csv`, `events.csv`, `grades.csv`, `confidence.csv` and
/// `labels.csv` into `dir`.
pub fn write_cohort_files(synthetic: &SyntheticCohort, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let cohort = &synthetic.cohort;
    ingest::write_course_csv(cohort.course(), fs::File::create(dir.join("course.csv"))?)?;
    ingest::write_events_csv(cohort, 1_700_000_000, fs::File::create(dir.join("events.csv"))?)?;
    ingest::write_grades_csv(cohort, fs::File::create(dir.join("grades.csv"))?)?;
    ingest::write_confidence_csv(cohort, fs::File::create(dir.join("confidence.csv"))?)?;
    let mut w = csv::Writer::from_path(dir.join("labels.csv"))?;
    w.write_record(["learner_id", "group"])?;
    for (id, group) in &synthetic.labels {
        w.write_record([id, group])?;
    }
    w.flush()?;
    Ok(())
}

fn check_enumerable(theta: &ThetaMatrix) -> Result<()> {
    if theta.num_tasks() > MAX_ENUMERATION_TASKS {
        return Err(Error::TooLarge {
            tasks: theta.num_tasks(),
            max: MAX_ENUMERATION_TASKS,
        });
    }
    Ok(())
}

/// Exact probability of every ordered sequence of `length` distinct tasks,
/// by depth-first expansion of the model's step rates.
pub fn enumerate_orderings(theta: &ThetaMatrix, length: usize) -> Result<BTreeMap<Vec<TaskId>, f64>> {
    check_enumerable(theta)?;
    let t = theta.num_tasks();
    if length > t {
        return Err(Error::LengthOutOfRange { length, max: t });
    }
    let mut out = BTreeMap::new();
    let mut prefix = Vec::with_capacity(length);
    expand(theta, length, &mut prefix, 1.0, &mut out);
    Ok(out)
}

fn expand(theta: &ThetaMatrix, length: usize, prefix: &mut Vec<usize>, prob: f64, out: &mut BTreeMap<Vec<TaskId>, f64>) {
    if prefix.len() == length {
        out.insert(prefix.iter().map(|&i| TaskId::from_index(i)).collect(), prob);
        return;
    }
    let t = theta.num_tasks();
    let rates: Vec<f64> = (0..t)
        .map(|i| {
            if prefix.contains(&i) {
                0.0
            } else {
                let log_rate = theta.get(i, i) + prefix.iter().map(|&j| theta.get(j, i)).sum::<f64>();
                log_rate.exp()
            }
        })
        .collect();
    let total: f64 = rates.iter().sum();
    for (i, rate) in rates.into_iter().enumerate() {
        if prefix.contains(&i) {
            continue;
        }
        prefix.push(i);
        expand(theta, length, prefix, prob * rate / total, out);
        prefix.pop();
    }
}

/// Position matrix implied by the model over full-length orderings.
/// `counts` is left at zero since no data is involved.
pub fn exact_position_matrix(theta: &ThetaMatrix) -> Result<PositionMatrix> {
    let t = theta.num_tasks();
    let orderings = enumerate_orderings(theta, t)?;
    let mut probabilities = Matrix::<f64>::zeros(t, t);
    for (ordering, p) in &orderings {
        for (pos, task) in ordering.iter().enumerate() {
            probabilities[(task.index(), pos)] += p;
        }
    }
    Ok(PositionMatrix {
        probabilities,
        counts: Matrix::zeros(t, t),
    })
}

/// Scenario with two equally sized groups on a `T`-task course: a high-grade
/// group following `high` and a low-grade group following `low`.
pub fn two_group_scenario(
    num_tasks: usize,
    num_sessions: usize,
    learners_per_group: usize,
    high: ThetaSpec,
    low: ThetaSpec,
    dropout: DropoutModel,
    seed: u64,
) -> Scenario {
    let group = |name: &str, theta: ThetaSpec, grade: GradeModel| GroupScenario {
        name: name.to_string(),
        learners: learners_per_group,
        theta: ThetaConfig {
            base: theta,
            overrides: vec![],
        },
        grade,
        dropout,
        confidence: None,
    };
    Scenario {
        num_tasks,
        num_sessions,
        task_types: None,
        groups: vec![
            group("high", high, GradeModel { min: 70.0, max: 95.0 }),
            group("low", low, GradeModel { min: 20.0, max: 50.0 }),
        ],
        seed,
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_orderings() {
        let o = enumerate_orderings(&ThetaMatrix::zeros(3), 3).unwrap();
        assert_eq!(o.len(), 6);
        for p in o.values() {
            assert!((p - 1.0 / 6.0).abs() < 1e-15);
        }
    }

    #[test]
    fn basal_rate_orderings() {
        let mut theta = ThetaMatrix::zeros(2);
        theta.set(0, 0, 3f64.ln());
        let o = enumerate_orderings(&theta, 2).unwrap();
        assert!((o[&vec![TaskId(1), TaskId(2)]] - 0.75).abs() < 1e-15);
        assert!((o[&vec![TaskId(2), TaskId(1)]] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn enumeration_limits() {
        assert!(matches!(
            enumerate_orderings(&ThetaMatrix::zeros(9), 2),
            Err(Error::TooLarge { .. })
        ));
        assert!(matches!(
            exact_position_matrix(&ThetaMatrix::zeros(9)),
            Err(Error::TooLarge { .. })
        ));
        assert_eq!(enumerate_orderings(&ThetaMatrix::zeros(3), 0).unwrap().len(), 1);
    }

    #[test]
    fn uniform_exact_position_matrix() {
        let p = exact_position_matrix(&ThetaMatrix::zeros(3)).unwrap();
        for v in p.probabilities.as_slice() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn strong_chain_is_nearly_identity() {
        let theta = ThetaConfig {
            base: ThetaSpec::NominalChain {
                strength: 12.0,
                start: 12.0,
            },
            overrides: vec![],
        }
        .build(5)
        .unwrap();
        let p = exact_position_matrix(&theta).unwrap();
        assert!(p.probabilities.max_abs_diff(&Matrix::identity(5)) < 1e-3);
    }

    #[test]
    fn empty_scenario() {
        let s = two_group_scenario(4, 2, 0, ThetaSpec::Zero, ThetaSpec::Zero, DropoutModel::default(), 1);
        let synth = generate_cohort(&s).unwrap();
        assert!(synth.cohort.is_empty());
    }

    #[test]
    fn scenario_generation_is_seeded() {
        let s = two_group_scenario(
            6,
            2,
            5,
            ThetaSpec::NominalChain { strength: 3.0, start: 3.0 },
            ThetaSpec::Zero,
            DropoutModel {
                min_length: 2,
                stop_prob: 0.3,
            },
            42,
        );
        let a = generate_cohort(&s).unwrap();
        let b = generate_cohort(&s).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cohort.len(), 10);
        assert!(a.cohort.learners().iter().all(|l| l.len() >= 2));
        let mut other = s.clone();
        other.seed = 43;
        assert_ne!(generate_cohort(&other).unwrap().cohort, a.cohort);
    }

    #[test]
    fn overlapping_grade_bands_rejected() {
        let mut s = two_group_scenario(4, 1, 2, ThetaSpec::Zero, ThetaSpec::Zero, DropoutModel::default(), 1);
        s.groups[1].grade = GradeModel { min: 60.0, max: 80.0 };
        assert!(matches!(generate_cohort(&s), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn overrides_and_explicit() {
        let cfg = ThetaConfig {
            base: ThetaSpec::Explicit {
                rows: vec![vec![0.0, 1.0], vec![2.0, 3.0]],
            },
            overrides: vec![ThetaOverride {
                source: 1,
                target: 1,
                value: -1.0,
            }],
        };
        let theta = cfg.build(2).unwrap();
        assert_eq!(theta.as_slice(), &[-1.0, 1.0, 2.0, 3.0]);
        assert!(cfg.build(3).is_err());
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<ThetaConfig>(&json).unwrap(), cfg);
    }
}
