mod common;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use taskseq::seqstats::{
    deviation_profile, position_probability_matrix, session_transition_matrix, transition_probability_matrix,
};
use taskseq::{Cohort, CourseSpec, LearnerRecord, Matrix, TaskId};

fn cohort_from(seed: u64, max_tasks: usize, max_learners: usize) -> Cohort {
    common::random_cohort(&mut ChaCha8Rng::seed_from_u64(seed), max_tasks, max_learners, false)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn probability_rows_are_normalised_or_empty(seed in any::<u64>()) {
        let cohort = cohort_from(seed, 25, 40);
        let p = position_probability_matrix(&cohort).unwrap();
        let pi = transition_probability_matrix(&cohort).unwrap();
        for (m, counts) in [(&p.probabilities, &p.counts), (&pi.conditional, &pi.counts)] {
            for r in 0..m.rows() {
                let total: u64 = counts.row(r).iter().sum();
                let s: f64 = m.row(r).iter().sum();
                if total == 0 {
                    prop_assert!(m.row(r).iter().all(|&v| v == 0.0));
                } else {
                    prop_assert!((s - 1.0).abs() <= 1e-12);
                }
            }
        }
        let joint: f64 = pi.joint.as_slice().iter().sum();
        prop_assert!((joint - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn counts_are_conserved(seed in any::<u64>()) {
        let cohort = cohort_from(seed, 25, 40);
        let p = position_probability_matrix(&cohort).unwrap();
        let pi = transition_probability_matrix(&cohort).unwrap();
        let completions: usize = cohort.learners().iter().map(|l| l.len()).sum();
        let steps: usize = cohort.learners().iter().map(|l| l.len().saturating_sub(1)).sum();
        prop_assert_eq!(p.counts.as_slice().iter().sum::<u64>(), completions as u64);
        prop_assert_eq!(pi.counts.as_slice().iter().sum::<u64>(), steps as u64);
    }

    #[test]
    fn session_counts_fold_task_counts(seed in any::<u64>()) {
        let cohort = cohort_from(seed, 25, 40);
        let course = cohort.course();
        let task = transition_probability_matrix(&cohort).unwrap();
        let session = session_transition_matrix(&cohort).unwrap();
        let s = course.num_sessions();
        let mut folded = Matrix::<u64>::zeros(s, s);
        for i in 0..course.num_tasks() {
            for j in 0..course.num_tasks() {
                let a = course.session_of(TaskId::from_index(i)).index();
                let b = course.session_of(TaskId::from_index(j)).index();
                folded[(a, b)] += task.counts[(i, j)];
            }
        }
        prop_assert_eq!(folded, session.counts);
    }

    #[test]
    fn learner_order_is_irrelevant(seed in any::<u64>()) {
        let cohort = cohort_from(seed, 15, 30);
        let mut learners = cohort.learners().to_vec();
        learners.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 1));
        for (k, l) in learners.iter_mut().enumerate() {
            l.learner_id = format!("z{k:03}");
        }
        let other = Cohort::new(cohort.course().clone(), learners).unwrap();
        prop_assert_eq!(position_probability_matrix(&cohort).unwrap(), position_probability_matrix(&other).unwrap());
        prop_assert_eq!(transition_probability_matrix(&cohort).unwrap(), transition_probability_matrix(&other).unwrap());
    }

    /// Relabelling tasks by a permutation permutes the rows of P and both axes of π.
    #[test]
    fn task_relabelling_permutes_matrices(seed in any::<u64>()) {
        let cohort = cohort_from(seed, 12, 30);
        let t = cohort.course().num_tasks();
        let mut perm: Vec<usize> = (0..t).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 2));
        let course = CourseSpec::uniform(t, 1).unwrap();
        let relabel = |l: &LearnerRecord| {
            LearnerRecord::new(l.learner_id.clone(), l.sequence.iter().map(|x| TaskId::from_index(perm[x.index()])).collect())
        };
        let original = Cohort::new(course.clone(), cohort.learners().to_vec()).unwrap();
        let moved = Cohort::new(course, cohort.learners().iter().map(relabel).collect()).unwrap();
        let (p0, p1) = (position_probability_matrix(&original).unwrap(), position_probability_matrix(&moved).unwrap());
        let (m0, m1) = (transition_probability_matrix(&original).unwrap(), transition_probability_matrix(&moved).unwrap());
        for i in 0..t {
            prop_assert_eq!(p0.counts.row(i), p1.counts.row(perm[i]));
            for j in 0..t {
                prop_assert_eq!(m0.counts[(i, j)], m1.counts[(perm[i], perm[j])]);
                prop_assert_eq!(m0.conditional[(i, j)], m1.conditional[(perm[i], perm[j])]);
            }
        }
    }

    #[test]
    fn deviations_are_bounded_and_sum_to_zero(seed in any::<u64>()) {
        let cohort = cohort_from(seed, 25, 10);
        for learner in cohort.active_learners() {
            let d = deviation_profile(learner, cohort.course()).unwrap();
            let n = learner.len() as f64;
            prop_assert!(d.values.iter().all(|v| v.abs() <= (n - 1.0) / n + 1e-12));
            prop_assert!(d.values.iter().sum::<f64>().abs() <= 1e-9);
        }
    }
}

#[test]
fn nominal_cohort_gives_identity_and_shift() {
    let t = 9;
    let cohort = common::nominal_cohort(t, 3, &[t, t, t, t]);
    let p = position_probability_matrix(&cohort).unwrap();
    assert_eq!(p.probabilities, Matrix::identity(t));
    let pi = transition_probability_matrix(&cohort).unwrap();
    for i in 0..t {
        for j in 0..t {
            assert_eq!(pi.conditional[(i, j)], if j == i + 1 { 1.0 } else { 0.0 });
        }
    }
    for learner in cohort.learners() {
        let d = deviation_profile(learner, cohort.course()).unwrap();
        assert!(d.values.iter().all(|&v| v == 0.0));
    }
}
