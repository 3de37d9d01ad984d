//! Ensemble statistics over completion sequences.
//!
//! * [`position_probability_matrix`]: `p_ij`, the probability that task `i`
//!   is the `j`-th task a learner completes.
//! * [`transition_probability_matrix`]: counts `m_ij` of task `j` directly
//!   following task `i`, their share of all transitions, and the row-normalised
//!   conditional probabilities `π_ij`.
//! * [`session_transition_matrix`]: the same transition statistics after
//!   replacing every task with its session. Consecutive tasks from one
//!   session are *not* merged, so within-session moves land on the diagonal.
//! * [`deviation_profile`]: how far each completion sits from where the
//!   learner's own tasks would fall in nominal order.
//!
//! Rows without observations are left at zero rather than made uniform, so a
//! zero row always means "no evidence". Note that `π` summarises observed
//! successions; because tasks are acquired once and never lost it is not the
//! transition matrix of a Markov chain over acquisition states.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Cohort, CourseSpec, LearnerRecord, TaskId};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionMatrix {
    /// `p_ij`; row = task, column = position.
    pub probabilities: Matrix<f64>,
    /// `n_ij`
    pub counts: Matrix<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    /// `π_ij = P(next = j | previous = i)`
    pub conditional: Matrix<f64>,
    /// `p_{i→j}`, normalised over all transitions.
    pub joint: Matrix<f64>,
    /// `m_ij`
    pub counts: Matrix<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationProfile {
    pub learner_id: String,
    /// Tasks in completion order.
    pub tasks: Vec<TaskId>,
    /// Deviation per completed task, aligned with `tasks`. Negative means
    /// completed earlier than nominal order would place it.
    pub values: Vec<f64>,
    pub completion_fraction: f64,
}

fn row_normalise(counts: &Matrix<u64>) -> Matrix<f64> {
    let mut out = Matrix::zeros(counts.rows(), counts.cols());
    for r in 0..counts.rows() {
        let total: u64 = counts.row(r).iter().sum();
        if total == 0 {
            continue;
        }
        for (dst, &c) in out.row_mut(r).iter_mut().zip(counts.row(r)) {
            *dst = c as f64 / total as f64;
        }
    }
    out
}

pub fn position_probability_matrix(cohort: &Cohort) -> Result<PositionMatrix> {
    let t = cohort.course().num_tasks();
    let mut counts = Matrix::<u64>::zeros(t, t);
    let mut any = false;
    for learner in cohort.active_learners() {
        any = true;
        for (pos, task) in learner.sequence.iter().enumerate() {
            counts[(task.index(), pos)] += 1;
        }
    }
    if !any {
        return Err(Error::EmptyCohort);
    }
    Ok(PositionMatrix {
        probabilities: row_normalise(&counts),
        counts,
    })
}

/// Transition statistics over sequences of zero-based state indices `< dim`.
pub fn transitions_from_indices<'a, I>(sequences: I, dim: usize) -> Result<TransitionMatrix>
where
    I: IntoIterator<Item = &'a [usize]>,
{
    let mut counts = Matrix::<u64>::zeros(dim, dim);
    let mut total = 0u64;
    for seq in sequences {
        for pair in seq.windows(2) {
            counts[(pair[0], pair[1])] += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::NoTransitions { group: None });
    }
    let joint = counts.map(|&c| c as f64 / total as f64);
    Ok(TransitionMatrix {
        conditional: row_normalise(&counts),
        joint,
        counts,
    })
}

pub fn transition_probability_matrix(cohort: &Cohort) -> Result<TransitionMatrix> {
    let seqs: Vec<Vec<usize>> = cohort
        .learners()
        .iter()
        .map(|l| l.sequence.iter().map(|t| t.index()).collect())
        .collect();
    transitions_from_indices(seqs.iter().map(Vec::as_slice), cohort.course().num_tasks())
}

/// Learner sequence with every task replaced by its zero-based session index.
pub fn session_sequence(learner: &LearnerRecord, course: &CourseSpec) -> Vec<usize> {
    learner
        .sequence
        .iter()
        .map(|&t| course.session_of(t).index())
        .collect()
}

pub fn session_transition_matrix(cohort: &Cohort) -> Result<TransitionMatrix> {
    let course = cohort.course();
    let seqs: Vec<Vec<usize>> = cohort
        .learners()
        .iter()
        .map(|l| session_sequence(l, course))
        .collect();
    transitions_from_indices(seqs.iter().map(Vec::as_slice), course.num_sessions())
}

/// Deviation of each completion from nominal order, relative to the
/// learner's own set of completed tasks.
///
/// For the task at one-based position `j`, with rank `r` among the learner's
/// completed tasks sorted by id, the deviation is `(j - r) / n`. A learner who
/// skips tasks but keeps the rest in nominal order scores zero everywhere.
pub fn deviation_profile(learner: &LearnerRecord, course: &CourseSpec) -> Result<DeviationProfile> {
    let n = learner.sequence.len();
    if n == 0 {
        return Err(Error::EmptySequence);
    }
    let mut sorted = learner.sequence.clone();
    sorted.sort_unstable();
    let values = learner
        .sequence
        .iter()
        .enumerate()
        .map(|(pos, task)| {
            let rank = sorted.binary_search(task).expect("task from the same sequence");
            (pos as f64 - rank as f64) / n as f64
        })
        .collect();
    Ok(DeviationProfile {
        learner_id: learner.learner_id.clone(),
        tasks: learner.sequence.clone(),
        values,
        completion_fraction: n as f64 / course.num_tasks() as f64,
    })
}

/// Row `task` of `P`: the distribution of positions at which it was completed.
pub fn position_histogram(matrix: &PositionMatrix, task: TaskId) -> Result<Vec<f64>> {
    let t = matrix.probabilities.rows();
    if task.0 == 0 || task.index() >= t {
        return Err(Error::TaskOutOfRange {
            task: task.0 as i64,
            max: t,
        });
    }
    Ok(matrix.probabilities.row(task.index()).to_vec())
}

/// Non-zero transitions as `(from, to, count, π)` with one-based labels.
pub fn edge_list(matrix: &TransitionMatrix) -> Vec<(usize, usize, u64, f64)> {
    let dim = matrix.counts.rows();
    let mut edges = Vec::new();
    for i in 0..dim {
        for j in 0..dim {
            let c = matrix.counts[(i, j)];
            if c > 0 {
                edges.push((i + 1, j + 1, c, matrix.conditional[(i, j)]));
            }
        }
    }
    edges
}

pub fn write_edge_list_csv(matrix: &TransitionMatrix, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["from", "to", "count", "probability"])?;
    for (from, to, count, p) in edge_list(matrix) {
        w.write_record([from.to_string(), to.to_string(), count.to_string(), p.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_deviation_csv(profiles: &[DeviationProfile], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["learner_id", "task_id", "position", "deviation"])?;
    for profile in profiles {
        for (pos, (task, value)) in profile.tasks.iter().zip(&profile.values).enumerate() {
            w.write_record([
                profile.learner_id.clone(),
                task.to_string(),
                (pos + 1).to_string(),
                value.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Long-format rows of `P`, skipping zero entries.
pub fn write_position_histograms_csv(matrix: &PositionMatrix, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["task_id", "position", "count", "probability"])?;
    let p = &matrix.probabilities;
    for i in 0..p.rows() {
        for j in 0..p.cols() {
            let c = matrix.counts[(i, j)];
            if c > 0 {
                w.write_record([
                    (i + 1).to_string(),
                    (j + 1).to_string(),
                    c.to_string(),
                    p[(i, j)].to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn course(t: usize, s: usize) -> CourseSpec {
        CourseSpec::uniform(t, s).unwrap()
    }

    fn cohort(course: CourseSpec, seqs: &[&[u32]]) -> Cohort {
        let learners = seqs
            .iter()
            .enumerate()
            .map(|(i, s)| LearnerRecord::new(format!("L{i}"), s.iter().map(|&t| TaskId(t)).collect()))
            .collect();
        Cohort::new(course, learners).unwrap()
    }

    fn assert_rows(m: &Matrix<f64>, expected: &[&[f64]]) {
        for (r, row) in expected.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                assert!((m[(r, c)] - v).abs() < 1e-15, "({r},{c}) = {} != {v}", m[(r, c)]);
            }
        }
    }

    #[test]
    fn nominal_cohort_gives_identity() {
        let c = cohort(course(4, 2), &[&[1, 2, 3, 4], &[1, 2, 3, 4]]);
        let p = position_probability_matrix(&c).unwrap();
        assert_eq!(p.probabilities, Matrix::identity(4));
    }

    #[test]
    fn three_learner_position_matrix() {
        let c = cohort(course(3, 1), &[&[1, 2, 3], &[2, 1, 3], &[1, 3, 2]]);
        let p = position_probability_matrix(&c).unwrap();
        let third = 1.0 / 3.0;
        assert_rows(
            &p.probabilities,
            &[&[2.0 / 3.0, third, 0.0], &[third, third, third], &[0.0, third, 2.0 / 3.0]],
        );
        assert_eq!(position_histogram(&p, TaskId(2)).unwrap(), vec![third, third, third]);
    }

    #[test]
    fn empty_cohort() {
        let c = cohort(course(3, 1), &[&[], &[]]);
        assert!(matches!(position_probability_matrix(&c), Err(Error::EmptyCohort)));
        assert!(matches!(
            transition_probability_matrix(&c),
            Err(Error::NoTransitions { .. })
        ));
    }

    #[test]
    fn uncompleted_task_row_is_zero() {
        let c = cohort(course(3, 1), &[&[1, 2]]);
        let p = position_probability_matrix(&c).unwrap();
        assert_eq!(position_histogram(&p, TaskId(3)).unwrap(), vec![0.0; 3]);
        assert!(matches!(
            position_histogram(&p, TaskId(4)),
            Err(Error::TaskOutOfRange { .. })
        ));
    }

    #[test]
    fn hand_counted_transitions() {
        let c = cohort(course(3, 1), &[&[1, 2, 3], &[1, 3, 2]]);
        let tm = transition_probability_matrix(&c).unwrap();
        assert_eq!(tm.counts.as_slice(), &[0, 1, 1, 0, 0, 1, 0, 1, 0]);
        assert_rows(&tm.conditional, &[&[0.0, 0.5, 0.5], &[0.0, 0.0, 1.0], &[0.0, 1.0, 0.0]]);
        for (i, &c) in tm.counts.as_slice().iter().enumerate() {
            let expected = if c == 1 { 0.25 } else { 0.0 };
            assert_eq!(tm.joint.as_slice()[i], expected);
        }
    }

    #[test]
    fn single_pair() {
        let c = cohort(course(3, 1), &[&[1, 2]]);
        let tm = transition_probability_matrix(&c).unwrap();
        assert_eq!(tm.conditional[(0, 1)], 1.0);
        assert_eq!(tm.conditional.as_slice().iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn nominal_transitions_are_upper_shift() {
        let c = cohort(course(5, 1), &[&[1u32, 2, 3, 4, 5][..]; 3]);
        let tm = transition_probability_matrix(&c).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let expected = if j == i + 1 { 1.0 } else { 0.0 };
                assert_eq!(tm.conditional[(i, j)], expected);
            }
        }
    }

    #[test]
    fn session_coarse_graining() {
        // tasks 1,2 in session 1; task 3 in session 2
        let c = cohort(course(3, 2), &[&[1, 2, 3]]);
        assert_eq!(c.course().session_of(TaskId(2)).0, 1);
        let sm = session_transition_matrix(&c).unwrap();
        assert_eq!(sm.counts.as_slice(), &[1, 1, 0, 0]);
        assert_rows(&sm.conditional, &[&[0.5, 0.5], &[0.0, 0.0]]);

        let c = cohort(course(4, 2), &[&[1, 2, 3, 4]]);
        let sm = session_transition_matrix(&c).unwrap();
        assert_rows(&sm.conditional, &[&[0.5, 0.5], &[0.0, 1.0]]);

        let c = cohort(course(3, 1), &[&[2, 1]]);
        let sm = session_transition_matrix(&c).unwrap();
        assert_eq!(sm.conditional.as_slice(), &[1.0]);
    }

    #[test]
    fn deviation_examples() {
        let spec = course(3, 1);
        let sorted = LearnerRecord::new("a", vec![TaskId(1), TaskId(3)]);
        let d = deviation_profile(&sorted, &spec).unwrap();
        assert_eq!(d.values, vec![0.0, 0.0]);
        assert!((d.completion_fraction - 2.0 / 3.0).abs() < 1e-15);

        let shuffled = LearnerRecord::new("b", vec![TaskId(3), TaskId(1), TaskId(2)]);
        let d = deviation_profile(&shuffled, &spec).unwrap();
        assert_eq!(d.values, vec![-2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);

        let empty = LearnerRecord::new("c", vec![]);
        assert!(matches!(deviation_profile(&empty, &spec), Err(Error::EmptySequence)));
    }

    #[test]
    fn partial_completion_fraction() {
        let spec = course(123, 10);
        let learner = LearnerRecord::new("29", (1..=62).map(TaskId).collect());
        let d = deviation_profile(&learner, &spec).unwrap();
        assert!((d.completion_fraction - 0.504).abs() < 1e-3);
    }

    #[test]
    fn edges_and_exports() {
        let c = cohort(course(3, 1), &[&[1, 2, 3], &[1, 3, 2]]);
        let tm = transition_probability_matrix(&c).unwrap();
        assert_eq!(edge_list(&tm).len(), 4);
        let mut buf = Vec::new();
        let profiles = vec![deviation_profile(&c.learners()[1], c.course()).unwrap()];
        write_deviation_csv(&profiles, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("learner_id,task_id,position,deviation\nL1,1,1,0\n"));
    }
}
