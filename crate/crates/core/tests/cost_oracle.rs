use coverplace::cost::{
    c0_circle, c0_line, expected_cost_dp, expected_cost_enumeration, expected_subgradient,
};
use coverplace::model::{FailureModel, Geometry, Placement};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_model(rng: &mut ChaCha8Rng, n: usize) -> FailureModel {
    if rng.random_bool(0.25) {
        let k = rng.random_range(0..n);
        FailureModel::cortes(k, n).unwrap()
    } else {
        FailureModel::independent(rng.random_range(0.0..1.0)).unwrap()
    }
}

fn random_placement(rng: &mut ChaCha8Rng, n: usize) -> Placement {
    // mix continuous draws with coarse grid values to exercise ties
    let raw: Vec<f64> = (0..n)
        .map(|_| {
            if rng.random_bool(0.3) {
                rng.random_range(0..=8) as f64 / 8.0
            } else {
                rng.random_range(0.0..=1.0)
            }
        })
        .collect();
    Placement::new(&raw).unwrap()
}

#[test]
fn dp_matches_enumeration_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(20240611);
    for case in 0..200 {
        let n = rng.random_range(1..=14);
        let x = random_placement(&mut rng, n);
        let model = random_model(&mut rng, n);
        let geom = if rng.random_bool(0.5) {
            Geometry::Interval
        } else {
            Geometry::Circle
        };
        let dp = expected_cost_dp(&x, &model, geom).unwrap().expected_cost;
        let en = expected_cost_enumeration(&x, &model, geom)
            .unwrap()
            .expected_cost;
        assert!(
            (dp - en).abs() <= 1e-10,
            "case {case}: n={n} {model:?} {geom:?} dp={dp} enum={en}"
        );
        assert!(dp > 0.0 && dp <= 1.0 + 1e-15);
    }
}

#[test]
fn circle_never_costs_more_than_interval() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let n = rng.random_range(1..=10);
        let x = random_placement(&mut rng, n);
        let model = random_model(&mut rng, n);
        let line = expected_cost_dp(&x, &model, Geometry::Interval)
            .unwrap()
            .expected_cost;
        let circle = expected_cost_dp(&x, &model, Geometry::Circle)
            .unwrap()
            .expected_cost;
        assert!(circle <= line + 1e-12);
    }
}

proptest! {
    #[test]
    fn circle_cost_bounded_by_line_cost(mut xs in prop::collection::vec(0.0f64..=1.0, 1..12)) {
        xs.sort_by(f64::total_cmp);
        let line = c0_line(&xs);
        let circle = c0_circle(&xs);
        prop_assert!(circle <= line);
        if circle < line {
            let border = xs[0].max(1.0 - xs[xs.len() - 1]);
            prop_assert_eq!(line, border);
        }
    }
}

#[test]
fn subgradient_inequality_holds() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..100 {
        let n = rng.random_range(1..=8);
        let x = random_placement(&mut rng, n);
        let y = random_placement(&mut rng, n);
        let model = random_model(&mut rng, n);
        for geom in [Geometry::Interval, Geometry::Circle] {
            let g = expected_subgradient(&x, &model, geom).unwrap();
            let cx = expected_cost_dp(&x, &model, geom).unwrap().expected_cost;
            let cy = expected_cost_dp(&y, &model, geom).unwrap().expected_cost;
            let lin: f64 = g
                .iter()
                .zip(y.positions().iter().zip(x.positions()))
                .map(|(gi, (yi, xi))| gi * (yi - xi))
                .sum();
            assert!(cy >= cx + lin - 1e-9, "{geom:?}: {cy} < {cx} + {lin}");
        }
    }
}

/// Smallest margin between the maximizing term and the runner-up over all
/// active sets, plus the gap between sorted coordinates.
fn differentiability_margin(xs: &[f64]) -> f64 {
    let n = xs.len();
    let mut margin = f64::INFINITY;
    for w in xs.windows(2) {
        margin = margin.min(w[1] - w[0]);
    }
    for mask in 1u32..(1 << n) {
        let act: Vec<f64> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| xs[i]).collect();
        let mut terms = vec![act[0], 1.0 - act[act.len() - 1]];
        terms.extend(act.windows(2).map(|w| 0.5 * (w[1] - w[0])));
        terms.sort_by(|a, b| b.total_cmp(a));
        if terms.len() > 1 {
            margin = margin.min(terms[0] - terms[1]);
        }
    }
    margin
}

#[test]
fn subgradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(31337);
    let model = FailureModel::independent(0.35).unwrap();
    let mut checked = 0;
    while checked < 50 {
        let n = rng.random_range(1..=6);
        let mut raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.02..0.98)).collect();
        raw.sort_by(f64::total_cmp);
        if differentiability_margin(&raw) <= 1e-6 * 10.0 {
            continue;
        }
        let x = Placement::new(&raw).unwrap();
        let g = expected_subgradient(&x, &model, Geometry::Interval).unwrap();
        let h = 1e-6;
        for i in 0..n {
            let mut up = raw.clone();
            let mut down = raw.clone();
            up[i] += h;
            down[i] -= h;
            let cu = expected_cost_enumeration(
                &Placement::new(&up).unwrap(),
                &model,
                Geometry::Interval,
            )
            .unwrap()
            .expected_cost;
            let cd = expected_cost_enumeration(
                &Placement::new(&down).unwrap(),
                &model,
                Geometry::Interval,
            )
            .unwrap()
            .expected_cost;
            let fd = (cu - cd) / (2.0 * h);
            assert!((fd - g[i]).abs() <= 1e-4, "coord {i}: fd {fd} vs {}", g[i]);
        }
        checked += 1;
    }
}
