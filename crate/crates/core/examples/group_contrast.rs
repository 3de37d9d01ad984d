//! Compare top and bottom quartile learners: transition differences, task
//! frequency and rank contrasts, and self-reported confidence.
//!
//!     cargo run --example group_contrast

use taskseq::contrast::{confidence_stats, delta_transition, split_by_grade, task_contrast, Level};
use taskseq::synth::{generate_cohort, two_group_scenario, ConfidenceModel, DropoutModel, ThetaSpec};

fn main() -> taskseq::Result<()> {
    let mut scenario = two_group_scenario(
        12,
        3,
        30,
        ThetaSpec::NominalChain { strength: 3.0, start: 2.0 },
        ThetaSpec::Zero,
        DropoutModel { min_length: 3, stop_prob: 0.15 },
        7,
    );
    scenario.groups[0].confidence = Some(ConfidenceModel { confident: 0.7, revisit: 0.2, support: 0.1 });
    scenario.groups[1].confidence = Some(ConfidenceModel { confident: 0.4, revisit: 0.4, support: 0.2 });
    let cohort = generate_cohort(&scenario)?.cohort;

    let split = split_by_grade(&cohort, 0.25)?;
    println!("{} learners per group, warnings {:?}", split.high.len(), split.warnings);

    let delta = delta_transition(&cohort, &split, Level::Task)?;
    let (mut best, mut worst) = ((0, 0, f64::MIN), (0, 0, f64::MAX));
    for i in 0..delta.delta.rows() {
        for j in 0..delta.delta.cols() {
            let v = delta.delta[(i, j)];
            if v > best.2 {
                best = (i + 1, j + 1, v);
            }
            if v < worst.2 {
                worst = (i + 1, j + 1, v);
            }
        }
    }
    println!("most high-leaning transition {} -> {} ({:+.2})", best.0, best.1, best.2);
    println!("most low-leaning transition {} -> {} ({:+.2})", worst.0, worst.1, worst.2);

    let report = task_contrast(&cohort, &split)?;
    println!("task  type                 dfreq   drank");
    for c in &report.tasks {
        let drank = c.drank.map(|d| format!("{d:+.2}")).unwrap_or_else(|| "-".into());
        println!("{:>4}  {:<20} {:+.2}   {drank}", c.task_id, c.task_type.token(), c.dfreq);
    }

    if let Some(stats) = confidence_stats(&cohort, &split)? {
        let show = |m: Option<f64>| m.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into());
        println!("mean confidence: high {}, low {}", show(stats.high.mean), show(stats.low.mean));
        match stats.paired_test {
            Some(t) => println!("paired over {} tasks: t = {:.3}, p = {:.4}", t.n, t.t, t.p),
            None => println!("paired test unavailable: {:?}", stats.paired_test_error),
        }
    }
    Ok(())
}
