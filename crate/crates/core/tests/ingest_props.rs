mod common;

use std::collections::BTreeMap;
use std::fs;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use taskseq::ingest::{self, Cohort, CourseSpec, TaskId};
use taskseq::synth::{generate_cohort, ConfidenceModel, DropoutModel, ThetaSpec};

type Event = (String, u32, i64);

fn write_events(dir: &std::path::Path, events: &[Event]) -> std::path::PathBuf {
    let path = dir.join("events.csv");
    let mut text = String::from("learner_id,task_id,timestamp\n");
    for (l, t, ts) in events {
        text.push_str(&format!("{l},{t},{ts}\n"));
    }
    fs::write(&path, text).unwrap();
    path
}

/// Earliest event per (learner, task), then sorted by (timestamp, task).
fn first_completion_oracle(events: &[Event]) -> BTreeMap<String, Vec<TaskId>> {
    let mut first: BTreeMap<(String, u32), i64> = BTreeMap::new();
    for (l, t, ts) in events {
        let e = first.entry((l.clone(), *t)).or_insert(*ts);
        *e = (*e).min(*ts);
    }
    let mut per: BTreeMap<String, Vec<(i64, u32)>> = BTreeMap::new();
    for ((l, t), ts) in first {
        per.entry(l).or_default().push((ts, t));
    }
    per.into_iter()
        .map(|(l, mut v)| {
            v.sort();
            (l, v.into_iter().map(|(_, t)| TaskId(t)).collect())
        })
        .collect()
}

fn events_strategy() -> impl Strategy<Value = (usize, Vec<Event>)> {
    (2usize..12).prop_flat_map(|t| {
        let event = (0u8..5, 1..=t as u32, 0i64..30).prop_map(|(l, task, ts)| (format!("L{l}"), task, ts));
        (Just(t), prop::collection::vec(event, 1..60))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn row_order_does_not_matter((t, events) in events_strategy(), seed in any::<u64>()) {
        let dir = tempfile::tempdir().unwrap();
        let course = CourseSpec::uniform(t, 1).unwrap();
        let a = ingest::parse_events(write_events(dir.path(), &events), &course).unwrap();
        let mut shuffled = events.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let b = ingest::parse_events(write_events(dir.path(), &shuffled), &course).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn sequences_follow_first_completion_rule((t, events) in events_strategy()) {
        let dir = tempfile::tempdir().unwrap();
        let course = CourseSpec::uniform(t, 1).unwrap();
        let cohort = ingest::parse_events(write_events(dir.path(), &events), &course).unwrap();
        let oracle = first_completion_oracle(&events);
        prop_assert_eq!(cohort.len(), oracle.len());
        for learner in cohort.learners() {
            let mut sorted = learner.sequence.clone();
            sorted.sort();
            sorted.dedup();
            prop_assert_eq!(sorted.len(), learner.sequence.len());
            prop_assert!(learner.sequence.iter().all(|x| (1..=t as u32).contains(&x.0)));
            prop_assert_eq!(&learner.sequence, &oracle[&learner.learner_id]);
        }
    }

    #[test]
    fn csv_round_trip_is_identity(seed in any::<u64>(), t in 2usize..15, per_group in 1usize..8) {
        let mut scenario = taskseq::synth::two_group_scenario(
            t, (t / 3).max(1), per_group,
            ThetaSpec::NominalChain { strength: 2.0, start: 1.0 }, ThetaSpec::Zero,
            DropoutModel { min_length: 1, stop_prob: 0.3 }, seed,
        );
        scenario.groups[0].confidence = Some(ConfidenceModel { confident: 1.0, revisit: 1.0, support: 1.0 });
        let original = generate_cohort(&scenario).unwrap().cohort;
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        ingest::write_course_csv(original.course(), fs::File::create(d.join("c.csv")).unwrap()).unwrap();
        ingest::write_events_csv(&original, 0, fs::File::create(d.join("e.csv")).unwrap()).unwrap();
        ingest::write_grades_csv(&original, fs::File::create(d.join("g.csv")).unwrap()).unwrap();
        ingest::write_confidence_csv(&original, fs::File::create(d.join("k.csv")).unwrap()).unwrap();
        let course = ingest::parse_course_spec(d.join("c.csv")).unwrap();
        let parsed = ingest::parse_events(d.join("e.csv"), &course).unwrap();
        let parsed = ingest::attach_grades(parsed, d.join("g.csv")).unwrap();
        let parsed = ingest::attach_confidence(parsed, d.join("k.csv")).unwrap();
        prop_assert_eq!(&parsed, &original);
        prop_assert_eq!(Cohort::from_json(&parsed.to_json().unwrap()).unwrap(), parsed);
    }
}

#[test]
fn json_round_trip_keeps_empty_learners() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let cohort = common::random_cohort(&mut rng, 10, 20, true);
        let again = Cohort::from_json(&cohort.to_json().unwrap()).unwrap();
        assert_eq!(again, cohort);
    }
}

#[test]
fn iso_and_epoch_timestamps_agree() {
    let dir = tempfile::tempdir().unwrap();
    let course = CourseSpec::uniform(3, 1).unwrap();
    let iso = dir.path().join("iso.csv");
    fs::write(
        &iso,
        "learner_id,task_id,timestamp\nA,3,2024-01-01T00:00:00Z\nA,1,2024-01-01T00:01:00Z\nA,2,2023-12-31T23:59:00Z\n",
    )
    .unwrap();
    let epoch = dir.path().join("epoch.csv");
    fs::write(&epoch, "learner_id,task_id,timestamp\nA,3,1704067200\nA,1,1704067260\nA,2,1704067140\n").unwrap();
    let a = ingest::parse_events(&iso, &course).unwrap();
    let b = ingest::parse_events(&epoch, &course).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.learners()[0].sequence, common::ids(&[2, 3, 1]));
}
