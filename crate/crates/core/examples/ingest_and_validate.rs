//! Parse a small course, event log, grade sheet and survey, then show how
//! malformed input is reported.
//!
//!     cargo run --example ingest_and_validate

use std::fs;

use taskseq::ingest;

fn main() -> taskseq::Result<()> {
    let dir = tempfile::tempdir()?;
    let path = |name: &str| dir.path().join(name);

    fs::write(
        path("course.csv"),
        "task_id,session_id,task_type\n1,1,reading_video\n2,1,quiz\n3,2,coursework\n4,2,discussion_post\n",
    )?;
    // Learner B repeats task 1 and has a tie at t=50.
    fs::write(
        path("events.csv"),
        "learner_id,task_id,timestamp\n\
         A,2,20\nA,1,10\nA,3,30\n\
         B,1,40\nB,4,50\nB,3,50\nB,1,90\n",
    )?;
    fs::write(path("grades.csv"), "learner_id,grade\nA,69.7\nB,81.5\n")?;
    fs::write(
        path("confidence.csv"),
        "learner_id,task_id,response\nA,1,confident\nA,2,revisit\nA,2,support\nB,3,confident\n",
    )?;

    let course = ingest::parse_course_spec(path("course.csv"))?;
    let cohort = ingest::parse_events(path("events.csv"), &course)?;
    let cohort = ingest::attach_grades(cohort, path("grades.csv"))?;
    let cohort = ingest::attach_confidence(cohort, path("confidence.csv"))?;

    println!("{} tasks in {} sessions", course.num_tasks(), course.num_sessions());
    for l in cohort.learners() {
        let seq: Vec<String> = l.sequence.iter().map(|t| t.to_string()).collect();
        println!(
            "{}: sequence [{}], grade {:?}, ties {}, responses {}",
            l.learner_id,
            seq.join(", "),
            l.grade,
            l.had_ties,
            l.confidence.len()
        );
    }
    println!("survey overwrites: {}", cohort.diagnostics().confidence_overwrites);

    fs::write(path("bad.csv"), "learner_id,task_id,timestamp\nA,9,10\n")?;
    let err = ingest::parse_events(path("bad.csv"), &course).unwrap_err();
    println!("bad events file -> {} ({err})", err.kind());
    Ok(())
}
