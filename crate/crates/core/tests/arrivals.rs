use cbm_core::rng::{streams, StreamKey};
use cbm_core::shock_arrivals::*;
use proptest::prelude::*;
use rayon::prelude::*;

fn counts_at(params: &ShotNoiseParams<f64>, times: &[f64], n: usize, seed: u64) -> Vec<Vec<f64>> {
    let horizon = times.iter().cloned().fold(0.0, f64::max);
    let per_run: Vec<Vec<f64>> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = StreamKey::new(seed, i).stream(streams::ARRIVALS);
            let shocks = simulate_shocks(params, horizon, &mut rng);
            let arr = simulate_arrivals(params, &shocks, horizon, &mut rng).unwrap();
            times.iter().map(|&t| arr.count_until(t) as f64).collect()
        })
        .collect();
    (0..times.len()).map(|j| per_run.iter().map(|r| r[j]).collect()).collect()
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

#[test]
fn mean_count_matches_closed_form() {
    let p = ShotNoiseParams::new(1.0, 2.0, 0.5).unwrap();
    let times = [1.0, 2.0, 5.0, 10.0];
    let cols = counts_at(&p, &times, 100_000, 11);
    for (t, col) in times.iter().zip(&cols) {
        let (m, se) = mean_se(col);
        let exact = expected_num_arrivals(&p, *t);
        assert!((m - exact).abs() < 3.0 * se, "t={t}: {m} vs {exact} (se {se})");
    }
}

#[test]
fn no_shocks_gives_poisson_counts() {
    let p = ShotNoiseParams::new(1.5, 0.0, 0.5).unwrap();
    let cols = counts_at(&p, &[4.0], 40_000, 3);
    let (m, se) = mean_se(&cols[0]);
    assert!((m - 6.0).abs() < 3.0 * se);
    let var = cols[0].iter().map(|x| (x - m).powi(2)).sum::<f64>() / (cols[0].len() as f64 - 1.0);
    // Poisson dispersion index 1; sd of the sample variance ≈ sqrt((2m² + m)/n).
    let sd = ((2.0 * 36.0 + 6.0) / 40_000.0f64).sqrt();
    assert!((var - 6.0).abs() < 4.0 * sd, "variance {var}");
}

#[test]
fn shot_noise_is_overdispersed() {
    let p = ShotNoiseParams::new(1.0, 2.0, 0.5).unwrap();
    let cols = counts_at(&p, &[5.0], 20_000, 5);
    let (m, _) = mean_se(&cols[0]);
    let var = cols[0].iter().map(|x| (x - m).powi(2)).sum::<f64>() / (cols[0].len() as f64 - 1.0);
    assert!(var > 1.5 * m);
}

#[test]
fn stream_and_batch_samplers_agree_in_law() {
    // Same law, different random consumption: compare mean counts.
    let p = ShotNoiseParams::new(0.5, 1.0, 1.0).unwrap();
    let n = 40_000u64;
    let counts: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut s = ArrivalStream::new(p, StreamKey::new(77, i).stream(0));
            s.take_until(6.0).0.len() as f64
        })
        .collect();
    let (m, se) = mean_se(&counts);
    let exact = expected_num_arrivals(&p, 6.0);
    assert!((m - exact).abs() < 3.0 * se, "{m} vs {exact}");
}

#[test]
fn arrival_gaps_are_exponential_without_shocks() {
    // Kolmogorov–Smirnov on the first arrival time of a homogeneous stream.
    let p = ShotNoiseParams::new(2.0, 0.0, 1.0).unwrap();
    let n = 5_000u64;
    let mut firsts: Vec<f64> = (0..n)
        .map(|i| ArrivalStream::new(p, StreamKey::new(9, i).stream(0)).next_arrival().unwrap())
        .collect();
    firsts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let d = firsts
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = 1.0 - (-2.0 * x).exp();
            let lo = i as f64 / n as f64;
            let hi = (i + 1) as f64 / n as f64;
            (f - lo).abs().max((hi - f).abs())
        })
        .fold(0.0, f64::max);
    // 1% critical value.
    assert!(d < 1.63 / (n as f64).sqrt(), "KS statistic {d}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn intensity_never_below_baseline(
        lambda0 in 0.0f64..3.0, mu in 0.0f64..3.0, delta in 0.05f64..3.0, seed in any::<u64>(), s in 0.0f64..10.0,
    ) {
        let p = ShotNoiseParams::new(lambda0, mu, delta).unwrap();
        let mut rng = StreamKey::new(seed, 0).stream(0);
        let shocks = simulate_shocks(&p, 10.0, &mut rng);
        let lam = intensity_at(&p, &shocks, s).unwrap();
        prop_assert!(lam >= lambda0);
        let n = shocks.shock_times.iter().filter(|&&t| t <= s).count() as f64;
        prop_assert!(lam <= lambda0 + n + 1e-12);
    }

    #[test]
    fn arrivals_sorted_inside_horizon(
        lambda0 in 0.0f64..3.0, mu in 0.0f64..3.0, delta in 0.05f64..3.0, seed in any::<u64>(),
    ) {
        let p = ShotNoiseParams::new(lambda0, mu, delta).unwrap();
        let mut rng = StreamKey::new(seed, 1).stream(0);
        let shocks = simulate_shocks(&p, 8.0, &mut rng);
        let arr = simulate_arrivals(&p, &shocks, 8.0, &mut rng).unwrap();
        prop_assert!(ArrivalTrajectory::new(8.0, arr.arrival_times.clone()).is_ok());
    }

    #[test]
    fn expected_count_is_integral_of_expected_intensity(
        lambda0 in 0.0f64..3.0, mu in 0.0f64..3.0, delta in 0.05f64..3.0, s in 0.01f64..20.0,
    ) {
        let p = ShotNoiseParams::new(lambda0, mu, delta).unwrap();
        let gl = cbm_core::special_functions::GaussLegendre::new(40);
        let numeric = gl.integrate(|u| expected_intensity(&p, u), 0.0, s);
        let exact = expected_num_arrivals(&p, s);
        prop_assert!((numeric - exact).abs() <= 1e-9 * exact.max(1.0));
    }
}
