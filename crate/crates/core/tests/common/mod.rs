#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use taskseq::{Cohort, CourseSpec, LearnerRecord, TaskId};

/// Random cohort on a uniform course with `2..=max_tasks` tasks and
/// `1..=max_learners` learners. Each learner completes a random-length prefix
/// of a random permutation; some learners complete nothing. The first learner
/// always has at least two tasks, so transitions exist. Grades, when requested,
/// are drawn on a coarse grid so ties occur.
pub fn random_cohort<R: Rng>(rng: &mut R, max_tasks: usize, max_learners: usize, graded: bool) -> Cohort {
    let t = rng.random_range(2..=max_tasks);
    let s = rng.random_range(1..=t.min(8));
    let n = rng.random_range(1..=max_learners);
    let course = CourseSpec::uniform(t, s).unwrap();
    let learners = (0..n)
        .map(|k| {
            let mut order: Vec<TaskId> = (0..t).map(TaskId::from_index).collect();
            order.shuffle(rng);
            let len = if k == 0 { rng.random_range(2..=t) } else { rng.random_range(0..=t) };
            order.truncate(len);
            let mut learner = LearnerRecord::new(format!("u{k:03}"), order);
            if graded {
                learner.grade = Some(rng.random_range(0..=40) as f64 * 2.5);
            }
            learner
        })
        .collect();
    Cohort::new(course, learners).unwrap()
}

/// Cohort where every learner follows the nominal order `1..=len`.
pub fn nominal_cohort(t: usize, sessions: usize, lengths: &[usize]) -> Cohort {
    let course = CourseSpec::uniform(t, sessions).unwrap();
    let learners = lengths
        .iter()
        .enumerate()
        .map(|(k, &len)| LearnerRecord::new(format!("n{k:03}"), (0..len).map(TaskId::from_index).collect()))
        .collect();
    Cohort::new(course, learners).unwrap()
}

pub fn ids(seq: &[u32]) -> Vec<TaskId> {
    seq.iter().map(|&i| TaskId(i)).collect()
}
