//! Load a scenario from JSON and write the generated cohort as course,
//! events, grades, survey and label files.
//!
//!     cargo run --example synthetic_scenario -- out/synthetic

use taskseq::synth::{generate_cohort, write_cohort_files, Scenario};

const SCENARIO: &str = r#"{
  "num_tasks": 10,
  "num_sessions": 2,
  "seed": 2024,
  "groups": [
    {
      "name": "planners",
      "learners": 12,
      "theta": {"kind": "nominal_chain", "strength": 3.0, "start": 2.0},
      "grade": {"min": 70, "max": 95},
      "dropout": {"min_length": 6, "stop_prob": 0.2},
      "confidence": {"confident": 0.7, "revisit": 0.2, "support": 0.1}
    },
    {
      "name": "skimmers",
      "learners": 12,
      "theta": {"kind": "zero", "overrides": [{"source": 5, "target": 5, "value": 2.0}]},
      "grade": {"min": 30, "max": 60},
      "dropout": {"min_length": 2, "stop_prob": 0.4}
    }
  ]
}"#;

fn main() -> taskseq::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "synthetic_cohort".into());
    let scenario = Scenario::from_json(SCENARIO)?;
    let synthetic = generate_cohort(&scenario)?;
    write_cohort_files(&synthetic, out.as_ref())?;
    for (group, theta) in &synthetic.thetas {
        println!("{group}: basal rate of task 1 = {:+.1}", theta.basal(0));
    }
    let lengths: Vec<usize> = synthetic.cohort.learners().iter().map(|l| l.len()).collect();
    println!("wrote {} learners to {out}, sequence lengths {lengths:?}", lengths.len());
    Ok(())
}
