//! Position and transition statistics for a synthetic cohort where one group
//! follows the course order and the other jumps around.
//!
//!     cargo run --example sequence_statistics

use taskseq::seqstats::{
    deviation_profile, edge_list, position_probability_matrix, session_transition_matrix,
    transition_probability_matrix,
};
use taskseq::synth::{generate_cohort, two_group_scenario, DropoutModel, ThetaSpec};
use taskseq::Matrix;

fn show(title: &str, m: &Matrix<f64>) {
    println!("{title}");
    for r in 0..m.rows() {
        let row: Vec<String> = m.row(r).iter().map(|v| format!("{v:5.2}")).collect();
        println!("  {:>2} | {}", r + 1, row.join(" "));
    }
}

fn main() -> taskseq::Result<()> {
    let scenario = two_group_scenario(
        8,
        2,
        25,
        ThetaSpec::NominalChain { strength: 4.0, start: 3.0 },
        ThetaSpec::Zero,
        DropoutModel { min_length: 4, stop_prob: 0.2 },
        42,
    );
    let cohort = generate_cohort(&scenario)?.cohort;

    let p = position_probability_matrix(&cohort)?;
    show("P(task i at position j)", &p.probabilities);
    let pi = transition_probability_matrix(&cohort)?;
    show("P(next = j | previous = i)", &pi.conditional);
    show("session transitions", &session_transition_matrix(&cohort)?.conditional);

    let mut edges = edge_list(&pi);
    edges.sort_by_key(|e| std::cmp::Reverse(e.2));
    println!("most frequent transitions:");
    for (from, to, count, prob) in edges.iter().take(5) {
        println!("  {from} -> {to}: {count} times (pi = {prob:.2})");
    }

    for learner in cohort.learners().iter().step_by(20) {
        let d = deviation_profile(learner, cohort.course())?;
        let v: Vec<String> = d.values.iter().map(|x| format!("{x:+.2}")).collect();
        println!("{} deviations: {}", d.learner_id, v.join(" "));
    }
    Ok(())
}
