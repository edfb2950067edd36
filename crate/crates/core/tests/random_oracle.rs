use coverplace::random::{
    ec0_random_closed_form, exact_ec0_random, exact_ec0_random_rational, expected_cost_random,
    harmonic_bounds, hoeffding_sandwich, monte_carlo_expected_cost, monte_carlo_sampled_failures,
    simulate_spacing_survival, spacing_joint_survival,
};
use num_traits::ToPrimitive;
use proptest::prelude::*;

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// E[C0] for m uniforms via inclusion-exclusion on the m + 1 spacings.
/// C0 > t iff a border spacing exceeds t or an interior one exceeds 2t, and
/// the integral of (1 - k t)_+^m over [0, 1] is 1 / (k (m + 1)).
fn inclusion_exclusion(m: usize) -> f64 {
    let mut total = 0.0;
    for a in 0..=2usize {
        for b in 0..m {
            if a + b == 0 {
                continue;
            }
            let sign = if (a + b) % 2 == 1 { 1.0 } else { -1.0 };
            let k = (a + 2 * b) as f64;
            total += sign * binom(2, a) * binom(m - 1, b) / (k * (m + 1) as f64);
        }
    }
    total
}

#[test]
fn small_m_values() {
    assert!((exact_ec0_random(1) - 0.75).abs() < 1e-15);
    assert!((exact_ec0_random(2) - 19.0 / 36.0).abs() < 1e-15);
    assert_eq!(exact_ec0_random(0), 1.0);
}

#[test]
fn rational_matches_inclusion_exclusion() {
    for m in 1..=14 {
        let exact = exact_ec0_random_rational(m).to_f64().unwrap();
        let oracle = inclusion_exclusion(m);
        assert!((exact - oracle).abs() <= 1e-10, "m={m}: {exact} vs {oracle}");
    }
}

#[test]
fn closed_form_matches_rational() {
    for m in 1..=60 {
        let exact = exact_ec0_random_rational(m).to_f64().unwrap();
        let closed = ec0_random_closed_form(m);
        assert!((exact - closed).abs() <= 1e-10, "m={m}: {exact} vs {closed}");
    }
}

#[test]
fn harmonic_bounds_bracket_exact_value() {
    for m in 1..=2_000 {
        let (lo, hi) = harmonic_bounds(m);
        let v = exact_ec0_random(m);
        assert!(lo <= v + 1e-12 && v <= hi + 1e-12, "m={m}");
    }
}

#[test]
fn monte_carlo_agrees_with_mixture() {
    let exact = expected_cost_random(10, 0.3).unwrap();
    let dp = monte_carlo_expected_cost(10, 0.3, 4_000, 11).unwrap();
    assert!((dp.estimate - exact).abs() <= 4.0 * dp.stderr, "{dp:?} vs {exact}");
    let sampled = monte_carlo_sampled_failures(10, 0.3, 20_000, 12).unwrap();
    assert!((sampled.estimate - exact).abs() <= 4.0 * sampled.stderr, "{sampled:?} vs {exact}");
}

#[test]
fn rope_cutting_joint_survival() {
    let th = [(1, 0.2), (3, 0.1)];
    let target = spacing_joint_survival(5, &th);
    assert!((target - 0.7f64.powi(5)).abs() < 1e-15);
    let sim = simulate_spacing_survival(5, &th, 1_000_000, 7).unwrap();
    assert!((sim.estimate - target).abs() <= 3.0 * sim.stderr, "{sim:?}");
}

#[test]
fn spacing_index_is_validated() {
    assert!(simulate_spacing_survival(3, &[(5, 0.1)], 10, 1).is_err());
    assert!(simulate_spacing_survival(3, &[(0, 0.1)], 10, 1).is_err());
}

#[test]
fn sandwich_contains_mixture_at_n_400() {
    for i in 2..=8 {
        let p = i as f64 / 10.0;
        let b = hoeffding_sandwich(400, p, 0.1).unwrap();
        let v = expected_cost_random(400, p).unwrap();
        assert!(b.contains(v), "p={p}: {b:?} vs {v}");
    }
    assert!(hoeffding_sandwich(400, 0.05, 0.1).is_err());
}

proptest! {
    #[test]
    fn mixture_is_monotone_in_p(n in 1usize..80, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let clo = expected_cost_random(n, lo).unwrap();
        let chi = expected_cost_random(n, hi).unwrap();
        prop_assert!(clo <= chi + 1e-12);
    }

    #[test]
    fn exact_value_decreases_in_m(m in 1usize..500) {
        prop_assert!(exact_ec0_random(m + 1) < exact_ec0_random(m));
    }
}
