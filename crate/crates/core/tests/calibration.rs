//! Null calibration of the permutation test over a larger number of trials
//! than the acceptance run, with an independent master seed.

use liestat::*;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn se3_covariance(scale: f64, rng: &mut ChaCha8Rng) -> CovarianceAtIdentity {
    let q = DMatrix::from_fn(6, 6, |_, _| rng.random_range(-1.0..1.0));
    let m = (&q * q.transpose() / 6.0 + DMatrix::identity(6, 6)) * scale;
    let m = (&m + m.transpose()) * 0.5;
    CovarianceAtIdentity::new(GroupDescriptor::SE3, m, 1.0).unwrap()
}

#[test]
fn null_rejection_rate_and_p_values_are_calibrated() {
    let trials = 1000;
    let mut p = [Vec::with_capacity(trials), Vec::with_capacity(trials)];
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(123_456);
        rng.set_stream(trial as u64);
        let mean = random_element(&GroupDescriptor::SE3, 1.0, &mut rng);
        let cov = se3_covariance(0.02, &mut rng);
        let a = sample_wrapped_gaussian(&mean, &cov, 20, rng.random()).unwrap().samples;
        let b = sample_wrapped_gaussian(&mean, &cov, 20, rng.random()).unwrap().samples;
        let cfg = PermutationConfig { n_permutations: 500, seed: rng.random(), ..Default::default() };
        let reports = permutation_tests(&a, &b, &cfg, &[Statistic::HotellingT2, Statistic::Bhattacharyya]).unwrap();
        for (k, r) in reports.iter().enumerate() {
            p[k].push(r.p_value);
        }
    }
    // three binomial standard deviations around 0.05
    let sd = (0.05f64 * 0.95 / trials as f64).sqrt();
    for (name, ps) in ["t2", "bhattacharyya"].iter().zip(&p) {
        let rate = ps.iter().filter(|&&x| x < 0.05).count() as f64 / trials as f64;
        let mean_p = ps.iter().sum::<f64>() / trials as f64;
        println!("{name}: rejection rate {rate:.3}, mean p {mean_p:.3}");
        assert!((rate - 0.05).abs() <= 3.0 * sd, "{name}: rejection rate {rate}");
        // a uniform p-value has mean 1/2 and standard deviation 1/sqrt(12)
        let sd_mean = (1.0 / 12.0 / trials as f64).sqrt();
        assert!((mean_p - 0.5).abs() <= 4.0 * sd_mean, "{name}: mean p {mean_p}");
    }
}
