//! Named placements and the seeded uniform sampler.
//!
//! Random streams come from ChaCha20 seeded with the 64-bit run seed, with
//! the replicate index selecting the stream. The same (seed, index) pair
//! gives the same draws on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::cost::expected_cost;
use crate::error::{Error, Result};
use crate::model::{FailureModel, Geometry, Placement};
use crate::optimizer::equispaced_positions;

/// Identifier of the random stream contract, written into every output file.
pub const GENERATOR_ID: &str = "chacha20-stream-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlacementKind {
    Equispaced,
    SingleCluster,
    Alternative,
    ThreeCluster(usize),
    Random(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedPlacement {
    pub kind: PlacementKind,
    pub placement: Placement,
}

fn bad_arity(kind: &'static str, n: usize, reason: &'static str) -> Error {
    Error::BadArity {
        kind,
        n,
        reason,
    }
}

/// (1, 2, 4, 6, ..., 2n - 4, 2n - 3) / (2n - 2): the equispaced layout on a
/// denser grid, with the two outermost sensors pulled towards the borders.
pub fn alternative_positions(n: usize) -> Result<Vec<f64>> {
    if n < 4 {
        return Err(bad_arity("Alternative", n, "needs at least 4 sensors"));
    }
    let d = (2 * n - 2) as f64;
    let mut xs = Vec::with_capacity(n);
    xs.push(1.0 / d);
    xs.extend((1..=n - 2).map(|i| (2 * i) as f64 / d));
    xs.push((2 * n - 3) as f64 / d);
    Ok(xs)
}

/// k sensors at 1/4, n - 2k at 1/2 and k at 3/4.
pub fn three_cluster_positions(n: usize, k: usize) -> Result<Vec<f64>> {
    if k == 0 || 2 * k > n {
        return Err(bad_arity("ThreeCluster", n, "needs 1 <= k <= n/2"));
    }
    let mut xs = vec![0.25; k];
    xs.extend(std::iter::repeat_n(0.5, n - 2 * k));
    xs.extend(std::iter::repeat_n(0.75, k));
    Ok(xs)
}

pub fn make_named(kind: PlacementKind, n: usize) -> Result<NamedPlacement> {
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let positions = match kind {
        PlacementKind::Equispaced => equispaced_positions(n),
        PlacementKind::SingleCluster => vec![0.5; n],
        PlacementKind::Alternative => alternative_positions(n)?,
        PlacementKind::ThreeCluster(k) => three_cluster_positions(n, k)?,
        PlacementKind::Random(seed) => {
            return Ok(NamedPlacement {
                kind,
                placement: sample_uniform_placement(n, seed, 0),
            })
        }
    };
    Ok(NamedPlacement {
        kind,
        placement: Placement::new(&positions)?,
    })
}

/// Independent stream for replicate `index` of a run seeded with `seed`.
pub fn replicate_rng(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// n i.i.d. uniforms on [0, 1) from replicate `index`, sorted.
pub fn sample_uniform_placement(n: usize, seed: u64, index: u64) -> Placement {
    let mut rng = replicate_rng(seed, index);
    let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    Placement::new(&raw).expect("uniform draws lie in [0, 1)")
}

/// Cluster size picked by the selection rule alone: 1 when p <= 1/3,
/// otherwise the smallest k <= n/2 with p^k in (1/4, 3/4).
pub fn three_cluster_candidate_k(n: usize, p: f64) -> Option<usize> {
    if p <= 1.0 / 3.0 {
        return Some(1);
    }
    (1..=n / 2).find(|&k| {
        let pk = p.powi(k as i32);
        pk > 0.25 && pk < 0.75
    })
}

/// Cluster size k for which the three-cluster layout provably beats the
/// single cluster, i.e. p^k (1 - p^k) > 2 p^n.
pub fn choose_three_cluster_k(n: usize, p: f64) -> Result<usize> {
    if n < 4 {
        return Err(bad_arity("ThreeCluster", n, "needs at least 4 sensors"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::BadProbability(p));
    }
    let holds = |k: usize| {
        let pk = p.powi(k as i32);
        pk * (1.0 - pk) > 2.0 * p.powi(n as i32)
    };
    match three_cluster_candidate_k(n, p) {
        Some(k) if holds(k) => Ok(k),
        _ => Err(Error::NoValidK { n, p }),
    }
}

/// A sensor count and failure rate p = c / n at which the alternative layout
/// is strictly cheaper than the equispaced one on the interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlternativeWitness {
    pub n: usize,
    pub c: f64,
    pub p: f64,
    pub alternative_cost: f64,
    pub equispaced_cost: f64,
}

/// The witness used by the regression checks, located by
/// [`search_alternative_witness`] over n <= 64 and c in {4, 4.5, ..., 8}.
pub const FROZEN_WITNESS: (usize, f64) = (7, 4.0);

/// First (n, c) in scan order with C(x_alt) < C(x_eq), scanning n upwards and
/// c over `c_grid` for each n.
pub fn search_alternative_witness(max_n: usize, c_grid: &[f64]) -> Option<AlternativeWitness> {
    (4..=max_n).find_map(|n| {
        c_grid.iter().find_map(|&c| {
            let witness = alternative_witness_at(n, c).ok()?;
            (witness.alternative_cost < witness.equispaced_cost).then_some(witness)
        })
    })
}

/// Evaluates both layouts at (n, p = c / n).
pub fn alternative_witness_at(n: usize, c: f64) -> Result<AlternativeWitness> {
    let p = c / n as f64;
    let model = FailureModel::independent_open(p)?;
    let alt = make_named(PlacementKind::Alternative, n)?.placement;
    let eq = make_named(PlacementKind::Equispaced, n)?.placement;
    Ok(AlternativeWitness {
        n,
        c,
        p,
        alternative_cost: expected_cost(&alt, &model, Geometry::Interval)?,
        equispaced_cost: expected_cost(&eq, &model, Geometry::Interval)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_constructions() {
        let eq = make_named(PlacementKind::Equispaced, 3).unwrap();
        assert_eq!(eq.placement.positions(), &[1.0 / 6.0, 0.5, 5.0 / 6.0]);
        let alt = make_named(PlacementKind::Alternative, 4).unwrap();
        assert_eq!(
            alt.placement.positions(),
            &[1.0 / 6.0, 2.0 / 6.0, 4.0 / 6.0, 5.0 / 6.0]
        );
        assert_eq!(alternative_positions(6).unwrap().len(), 6);
        let three = make_named(PlacementKind::ThreeCluster(1), 4).unwrap();
        assert_eq!(three.placement.positions(), &[0.25, 0.5, 0.5, 0.75]);
        let sgl = make_named(PlacementKind::SingleCluster, 5).unwrap();
        assert!(sgl.placement.positions().iter().all(|&x| x == 0.5));
    }

    #[test]
    fn arity_errors() {
        assert!(matches!(
            make_named(PlacementKind::Alternative, 3),
            Err(Error::BadArity { .. })
        ));
        assert!(make_named(PlacementKind::ThreeCluster(3), 5).is_err());
        assert!(make_named(PlacementKind::ThreeCluster(0), 5).is_err());
        assert!(make_named(PlacementKind::Equispaced, 0).is_err());
    }

    #[test]
    fn equispaced_failure_free_cost() {
        for n in 1..40 {
            let x = make_named(PlacementKind::Equispaced, n).unwrap().placement;
            let c = crate::cost::c0_line(x.positions());
            assert!((c - 1.0 / (2 * n) as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn three_cluster_choices() {
        assert_eq!(choose_three_cluster_k(10, 0.3).unwrap(), 1);
        assert_eq!(choose_three_cluster_k(10, 0.65).unwrap(), 1);
        assert_eq!(three_cluster_candidate_k(10, 0.9), Some(3));
        // no k can satisfy the inequality: y (1 - y) <= 1/4 < 2 * 0.9^10
        assert!(matches!(
            choose_three_cluster_k(10, 0.9),
            Err(Error::NoValidK { .. })
        ));
    }

    #[test]
    fn sampler_is_reproducible() {
        let a = sample_uniform_placement(5, 42, 0);
        let b = sample_uniform_placement(5, 42, 0);
        let c = sample_uniform_placement(5, 42, 1);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn sampler_golden_values() {
        let x = sample_uniform_placement(5, 42, 0);
        assert_eq!(
            x.positions(),
            &[
                0.09781386633443878,
                0.16315255492515823,
                0.16741662677052205,
                0.4101988062348858,
                0.5140492957650241
            ]
        );
        let y = sample_uniform_placement(3, 2024, 7);
        assert_eq!(
            y.positions(),
            &[0.02406239570935187, 0.5087075118308713, 0.5936609631768239]
        );
    }

    #[test]
    fn frozen_witness_is_the_first_in_scan_order() {
        let grid: Vec<f64> = (0..=8).map(|i| 4.0 + 0.5 * i as f64).collect();
        let found = search_alternative_witness(64, &grid).unwrap();
        assert_eq!((found.n, found.c), FROZEN_WITNESS);
        assert!(found.equispaced_cost - found.alternative_cost > 1e-4);
    }
}
