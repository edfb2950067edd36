use coverplace::runs::{
    expected_cost_equispaced, expected_longest_run, longest_run_main_terms,
    truncated_geometric_mean, RunLawParams,
};
use proptest::prelude::*;

/// Worst-case gap of the active sensors, written out from scratch.
fn brute_c0(active: &[f64]) -> f64 {
    match active {
        [] => 1.0,
        [first, .., last] | [first @ last] => {
            let mut worst = first.max(1.0 - last);
            for w in active.windows(2) {
                worst = worst.max((w[1] - w[0]) / 2.0);
            }
            worst
        }
    }
}

/// E[C(x_eq)] by summing over all failure patterns.
fn brute_equispaced(n: usize, p: f64) -> f64 {
    let xs: Vec<f64> = (0..n).map(|i| (2 * i + 1) as f64 / (2 * n) as f64).collect();
    (0u32..1 << n)
        .map(|alive| {
            let active: Vec<f64> = (0..n).filter(|i| alive >> i & 1 == 1).map(|i| xs[i]).collect();
            let k = active.len() as i32;
            p.powi(n as i32 - k) * (1.0 - p).powi(k) * brute_c0(&active)
        })
        .sum()
}

fn brute_longest_run_mean(n: usize, p: f64) -> f64 {
    (0u32..1 << n)
        .map(|failed| {
            let (mut best, mut cur) = (0, 0);
            for i in 0..n {
                if failed >> i & 1 == 1 {
                    cur += 1;
                    best = best.max(cur);
                } else {
                    cur = 0;
                }
            }
            let f = failed.count_ones() as i32;
            p.powi(f) * (1.0 - p).powi(n as i32 - f) * best as f64
        })
        .sum()
}

#[test]
fn equispaced_matches_enumeration() {
    for n in 1..=14 {
        for i in 1..=19 {
            let p = i as f64 * 0.05;
            let fast = expected_cost_equispaced(n, p);
            let slow = brute_equispaced(n, p);
            assert!((fast - slow).abs() <= 1e-12, "n={n} p={p}: {fast} vs {slow}");
        }
    }
}

#[test]
fn longest_run_mean_matches_enumeration() {
    for n in 1..=14 {
        for &p in &[0.1, 0.35, 0.5, 0.8] {
            let fast = expected_longest_run(n, p);
            let slow = brute_longest_run_mean(n, p);
            assert!((fast - slow).abs() <= 1e-12, "n={n} p={p}");
        }
    }
}

#[test]
fn longest_run_expansion_is_accurate() {
    for &n in &[1_000usize, 10_000, 100_000] {
        for &p in &[0.3, 0.5, 0.7] {
            let err = (expected_longest_run(n, p) - longest_run_main_terms(n, p)).abs();
            assert!(err <= RunLawParams::new(n, p).r_bound + 0.05, "n={n} p={p} err={err}");
        }
    }
}

#[test]
fn equispaced_cost_scaled_by_n_stays_near_log_n() {
    for &n in &[100usize, 1_000, 10_000, 100_000] {
        for &p in &[0.3, 0.5, 0.7] {
            let lhs = 2.0 * n as f64 * expected_cost_equispaced(n, p);
            let rhs = (n as f64).ln() / (1.0 / p).ln();
            assert!((lhs - rhs).abs() <= 10.0, "n={n} p={p}");
        }
    }
}

#[test]
fn equispaced_is_sandwiched_by_run_statistics() {
    // the cost is driven by the longest interior run and the border runs:
    // (E[R_n] + 1) / (2n) <= C(x_eq) <= (2 E[R_n] + 1) / (2n) + p^n
    for &n in &[10usize, 50, 200, 1000] {
        for &p in &[0.2, 0.5, 0.8] {
            let c = expected_cost_equispaced(n, p);
            let r = expected_longest_run(n, p);
            let nf = 2.0 * n as f64;
            assert!(c >= (r + 1.0) / nf - 1e-12, "n={n} p={p}");
            assert!(c <= (2.0 * r + 1.0) / nf + p.powi(n as i32) + 1e-12, "n={n} p={p}");
        }
    }
}

proptest! {
    #[test]
    fn equispaced_cost_is_monotone_in_p(n in 1usize..60, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(expected_cost_equispaced(n, lo) <= expected_cost_equispaced(n, hi) + 1e-13);
    }

    #[test]
    fn truncated_geometric_below_untruncated(n in 1usize..200, p in 0.0f64..0.99) {
        prop_assert!(truncated_geometric_mean(n, p) <= p / (1.0 - p) + 1e-12);
    }
}
