use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use taskseq::hypertraps::{
    fit_mcmc, marginal_loglik, prefix_marginal_logliks, sample_sequence, sequence_loglik, step_probability, McmcConfig,
    Posterior, TaskState, ThetaMatrix,
};
use taskseq::synth::{enumerate_orderings, exact_position_matrix};
use taskseq::TaskId;

fn theta_strategy(max_tasks: usize) -> impl Strategy<Value = ThetaMatrix> {
    (2..=max_tasks).prop_flat_map(|t| {
        prop::collection::vec(-3.0f64..3.0, t * t).prop_map(move |v| ThetaMatrix::from_row_major(t, v).unwrap())
    })
}

fn random_theta(seed: u64, t: usize) -> ThetaMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    ThetaMatrix::from_row_major(t, (0..t * t).map(|_| normal.sample(&mut rng)).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn step_probabilities_sum_to_one(theta in theta_strategy(8), picks in prop::collection::vec(any::<prop::sample::Index>(), 0..7)) {
        let t = theta.num_tasks();
        let mut state = TaskState::empty(t);
        for pick in picks.iter().take(t - 1) {
            let free: Vec<TaskId> = (0..t).map(TaskId::from_index).filter(|x| !state.contains(*x)).collect();
            state.insert(free[pick.index(free.len())]);
        }
        let total: f64 = (0..t)
            .map(TaskId::from_index)
            .filter(|x| !state.contains(*x))
            .map(|x| step_probability(&theta, &state, x).unwrap())
            .sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
    }

    /// Adding the same constant to every basal rate leaves all step probabilities unchanged.
    #[test]
    fn basal_shift_is_invisible(theta in theta_strategy(6), shift in -5.0f64..5.0, seed in any::<u64>()) {
        let t = theta.num_tasks();
        let mut shifted = theta.clone();
        for i in 0..t {
            shifted.set(i, i, theta.get(i, i) + shift);
        }
        let seq = sample_sequence(&theta, t, seed).unwrap();
        let a = sequence_loglik(&theta, &seq).unwrap();
        let b = sequence_loglik(&shifted, &seq).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
    }

    #[test]
    fn orderings_form_a_distribution(theta in theta_strategy(6), len in 1usize..=6) {
        let t = theta.num_tasks();
        let len = len.min(t);
        let law = enumerate_orderings(&theta, len).unwrap();
        let total: f64 = law.values().sum();
        prop_assert!((total - 1.0).abs() <= 1e-9);
        for (seq, p) in law.iter().take(20) {
            prop_assert!((sequence_loglik(&theta, seq).unwrap().exp() - p).abs() <= 1e-12);
        }
    }

    #[test]
    fn exact_position_matrix_is_doubly_stochastic(theta in theta_strategy(6)) {
        let p = exact_position_matrix(&theta).unwrap().probabilities;
        for i in 0..p.rows() {
            prop_assert!((p.row(i).iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            prop_assert!(((0..p.rows()).map(|r| p[(r, i)]).sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn sampled_sequences_are_duplicate_free(theta in theta_strategy(10), seed in any::<u64>(), len in 1usize..=10) {
        let len = len.min(theta.num_tasks());
        let seq = sample_sequence(&theta, len, seed).unwrap();
        let mut sorted = seq.clone();
        sorted.sort();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), len);
        prop_assert_eq!(sample_sequence(&theta, len, seed).unwrap(), seq);
    }
}

fn small_config(seed: u64) -> McmcConfig {
    McmcConfig {
        chain_length: 6000,
        burn_in: 1000,
        thinning: 50,
        proposal_sd: 0.4,
        prior_sd: 3.0,
        seed,
    }
}

fn training_set() -> Vec<Vec<TaskId>> {
    let theta = random_theta(3, 5);
    (0..30).map(|k| sample_sequence(&theta, 2 + k % 4, k as u64).unwrap()).collect()
}

#[test]
fn fits_are_reproducible_and_seed_sensitive() {
    let data = training_set();
    let a = fit_mcmc(&data, 5, &small_config(11)).unwrap();
    let b = fit_mcmc(&data, 5, &small_config(11)).unwrap();
    let c = fit_mcmc(&data, 5, &small_config(12)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    assert_ne!(a.samples, c.samples);
    assert_eq!(a.samples.len(), small_config(11).num_samples());
}

#[test]
fn posterior_survives_json() {
    let posterior = fit_mcmc(&training_set(), 5, &small_config(4)).unwrap();
    let again = Posterior::from_json(&posterior.to_json().unwrap()).unwrap();
    assert_eq!(again, posterior);
}

#[test]
fn prefix_marginals_match_one_at_a_time() {
    let posterior = fit_mcmc(&training_set(), 5, &small_config(8)).unwrap();
    let seq = sample_sequence(&random_theta(9, 5), 5, 1).unwrap();
    let all = prefix_marginal_logliks(&seq, &posterior).unwrap();
    for n in 1..=seq.len() {
        let single = marginal_loglik(&seq[..n], &posterior).unwrap();
        assert!((all[n - 1] - single).abs() <= 1e-9, "prefix {n}: {} vs {single}", all[n - 1]);
    }
    for w in all.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "longer prefixes cannot be more likely");
    }
}

#[test]
fn posterior_prefers_the_training_order() {
    let forward: Vec<TaskId> = (0..4).map(TaskId::from_index).collect();
    let backward: Vec<TaskId> = forward.iter().rev().copied().collect();
    let data = vec![forward.clone(); 40];
    let posterior = fit_mcmc(&data, 4, &McmcConfig { chain_length: 40_000, burn_in: 10_000, thinning: 100, ..small_config(2) }).unwrap();
    let f = marginal_loglik(&forward, &posterior).unwrap();
    let b = marginal_loglik(&backward, &posterior).unwrap();
    assert!(f > b + 3.0, "forward {f}, backward {b}");
    assert!(f > (1.0f64 / 24.0).ln());
}
