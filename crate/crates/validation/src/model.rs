//! Reference values for the record-growth model.

/// `H_n` as the literal sum `Σ_{i=1..n} 1/(n-i+1)`.
pub fn harmonic_direct(n: u64) -> f64 {
    let mut total = 0.0;
    for i in 1..=n {
        total += 1.0 / (n - i + 1) as f64;
    }
    total
}

/// Mean over `replicates` runs of the largest of `n` exponential samples
/// with mean `mu`, drawn by inversion.
pub fn monte_carlo_record(n: u64, mu: f64, replicates: u64, seed: u64) -> f64 {
    use rand::{Rng, SeedableRng};
    use rayon::prelude::*;
    let total: f64 = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ r.wrapping_mul(0x9E37_79B9_7F4A_7C15));
            (0..n).map(|_| -mu * (1.0 - rng.gen::<f64>()).ln()).fold(0.0, f64::max)
        })
        .sum();
    total / replicates as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use bmn::stochastic::{expected_record, expected_record_over_time, harmonic, RecordModel, HARMONIC_SUM_LIMIT};

    const MODEL: RecordModel = RecordModel { mu: 1.0, a: 1.0, k: 1.0 };

    #[test]
    fn expected_record_is_the_direct_harmonic_sum() {
        let mu = 28.5;
        let model = RecordModel { mu, ..MODEL };
        for n in 1..=10_000 {
            assert_eq!(expected_record(&model, n), mu * harmonic_direct(n), "n = {n}");
        }
    }

    #[test]
    fn asymptotic_branch_continues_the_sum() {
        let n = HARMONIC_SUM_LIMIT;
        let summed = harmonic(n);
        let series = harmonic(n + 1) - 1.0 / (n + 1) as f64;
        assert!((summed - series).abs() < 1e-12, "{summed} vs {series}");
    }

    #[test]
    fn expected_record_matches_simulated_maxima() {
        for (n, replicates) in [(1_000u64, 4_000u64), (100_000, 400)] {
            let mu = 20.0;
            let model = RecordModel { mu, ..MODEL };
            let simulated = monte_carlo_record(n, mu, replicates, 7);
            let predicted = expected_record(&model, n);
            let rel = (simulated - predicted).abs() / predicted;
            assert!(rel < 0.02, "n = {n}: simulated {simulated}, predicted {predicted}");
        }
    }

    #[test]
    fn record_over_time_agrees_with_game_count_for_large_searches() {
        let model = RecordModel { mu: 20.0, a: 50.0, k: 0.3 };
        for t in [30.0, 40.0, 60.0, 100.0] {
            let n = model.a * f64::exp(model.k * t);
            let by_count = expected_record(&model, n.round() as u64);
            let by_time = expected_record_over_time(&model, t);
            // H_n - (γ + ln n) is about 1/(2n), plus the rounding of n
            assert!((by_count - by_time).abs() <= model.mu / n, "t = {t}: {by_count} vs {by_time}");
        }
    }
}
