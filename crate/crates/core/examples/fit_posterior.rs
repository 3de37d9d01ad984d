//! Fit the transition model to sequences drawn from a known parameter matrix
//! and compare the posterior-predictive position matrix with the truth.
//!
//!     cargo run --release --example fit_posterior

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use taskseq::hypertraps::{fit_mcmc, sample_sequence_with, McmcConfig};
use taskseq::synth::{exact_position_matrix, ThetaConfig, ThetaSpec};
use taskseq::Matrix;

fn main() -> taskseq::Result<()> {
    let t = 5;
    let truth = ThetaConfig {
        base: ThetaSpec::NominalChain { strength: 3.0, start: 2.0 },
        overrides: vec![],
    }
    .build(t)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let data: Vec<_> = (0..150).map(|_| sample_sequence_with(&truth, t, &mut rng)).collect::<Result<_, _>>()?;

    let config = McmcConfig {
        chain_length: 100_000,
        burn_in: 25_000,
        thinning: 500,
        proposal_sd: 0.3,
        prior_sd: 5.0,
        seed: 1,
    };
    let posterior = fit_mcmc(&data, t, &config)?;
    println!(
        "{} samples, acceptance rate {:.3}",
        posterior.samples.len(),
        posterior.diagnostics.acceptance_rate
    );

    let mean = posterior.mean_theta();
    println!("posterior mean of chain entries:");
    for i in 0..t - 1 {
        println!("  theta[{}][{}] = {:+.2} (true {:+.2})", i + 1, i + 2, mean.get(i, i + 1), truth.get(i, i + 1));
    }

    let mut predictive = Matrix::<f64>::zeros(t, t);
    for s in &posterior.samples {
        let p = exact_position_matrix(s)?.probabilities;
        for (acc, v) in predictive.as_mut_slice().iter_mut().zip(p.as_slice()) {
            *acc += v / posterior.samples.len() as f64;
        }
    }
    let exact = exact_position_matrix(&truth)?.probabilities;
    println!("max |predictive P - true P| = {:.4}", predictive.max_abs_diff(&exact));
    Ok(())
}
