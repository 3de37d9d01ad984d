//! Classify learners from the first n tasks they complete, both on the
//! training learners and on held-out ones.
//!
//!     cargo run --release --example prefix_classifier

use taskseq::classifier::{run_experiment, ExperimentConfig, ExperimentMode};
use taskseq::hypertraps::McmcConfig;
use taskseq::synth::{generate_cohort, two_group_scenario, DropoutModel, ThetaSpec};

fn main() -> taskseq::Result<()> {
    let scenario = two_group_scenario(
        20,
        5,
        15,
        ThetaSpec::NominalChain { strength: 4.0, start: 4.0 },
        ThetaSpec::Zero,
        DropoutModel { min_length: 10, stop_prob: 0.1 },
        1,
    );
    let cohort = generate_cohort(&scenario)?.cohort;
    let mcmc = McmcConfig {
        chain_length: 200_000,
        burn_in: 50_000,
        thinning: 750,
        proposal_sd: 0.3,
        prior_sd: 1.0,
        seed: 1,
    };

    for mode in [ExperimentMode::InSample, ExperimentMode::Holdout] {
        let config = ExperimentConfig {
            quantile: 0.5,
            mode,
            holdout_frac: 0.3,
            seed: 9,
            mcmc,
        };
        let report = run_experiment(&cohort, &config)?;
        println!(
            "{mode:?}: {} + {} evaluated learners",
            report.g1.test.len(),
            report.g2.test.len()
        );
        for n in [1, 3, 5, 10] {
            println!(
                "  n = {n:>2}: mean P(g1) for g1 {:.3}, for g2 {:.3}",
                report.curves.g1.mean[n - 1],
                report.curves.g2.mean[n - 1]
            );
        }
    }
    Ok(())
}
