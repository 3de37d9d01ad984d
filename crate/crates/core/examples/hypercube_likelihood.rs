//! The hypercubic transition model on a four-task course: step
//! probabilities, exact sequence likelihoods and sampling.
//!
//!     cargo run --example hypercube_likelihood

use std::collections::BTreeMap;

use taskseq::hypertraps::{sample_sequence, sequence_loglik, step_probability, TaskState, ThetaMatrix};
use taskseq::synth::{enumerate_orderings, exact_position_matrix};
use taskseq::TaskId;

fn show(seq: &[TaskId]) -> String {
    seq.iter().map(TaskId::to_string).collect::<Vec<_>>().join(" ")
}

fn main() -> taskseq::Result<()> {
    // rows[source][target]; the diagonal holds basal log-rates.
    let theta = ThetaMatrix::from_rows(&[
        vec![1.0, 2.0, 0.0, 0.0],
        vec![0.0, -1.0, 2.0, 0.0],
        vec![0.0, 0.0, -1.0, 2.0],
        vec![0.0, 0.0, 0.0, -1.0],
    ])?;

    let empty = TaskState::empty(4);
    for t in 1..=4 {
        println!("P(first task = {t}) = {:.4}", step_probability(&theta, &empty, TaskId(t))?);
    }

    let law = enumerate_orderings(&theta, 4)?;
    let mut ranked: Vec<_> = law.iter().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(a.1));
    println!("most likely orderings:");
    for (seq, p) in ranked.iter().take(4) {
        let ll = sequence_loglik(&theta, seq)?;
        println!("  {}: p = {p:.4}, exp(loglik) = {:.4}", show(seq), ll.exp());
    }

    let draws = 20_000;
    let mut counts: BTreeMap<Vec<TaskId>, usize> = BTreeMap::new();
    for seed in 0..draws {
        *counts.entry(sample_sequence(&theta, 4, seed)?).or_default() += 1;
    }
    let (seq, p) = ranked[0];
    println!("sampled frequency of {}: {:.4} (exact {p:.4})", show(seq), counts[seq] as f64 / draws as f64);

    let exact = exact_position_matrix(&theta)?;
    println!("P(task 1 at position 1) = {:.4}", exact.probabilities[(0, 0)]);
    Ok(())
}
