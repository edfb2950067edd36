//! Placements, failure laws and active sets.
//!
//! Sensor indices are 0-based throughout the crate. A placement is always
//! stored sorted; the permutation back to the caller's order is kept so
//! results can be reported against the original input.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::binomial;

/// Sorted sensor positions in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    positions: Vec<f64>,
    /// `order[k]` is the input index of the k-th smallest position.
    order: Vec<usize>,
}

impl Placement {
    pub fn new(raw: &[f64]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some((index, &value)) = raw
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::EntryOutOfRange { index, value });
        }
        let mut order: Vec<usize> = (0..raw.len()).collect();
        // stable: coincident sensors keep their input order
        order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]));
        let positions = order.iter().map(|&i| raw[i]).collect();
        Ok(Self { positions, order })
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn permutation(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Max-norm distance between two placements of equal size.
    pub fn distance(&self, other: &Placement) -> f64 {
        self.positions
            .iter()
            .zip(&other.positions)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Rotate on the unit circle so that the first sensor sits at 0.
    pub fn canonical_circle(&self) -> Placement {
        let shift = self.positions[0];
        let raw: Vec<f64> = self
            .positions
            .iter()
            .map(|&x| {
                let y = x - shift;
                if y < 0.0 {
                    y + 1.0
                } else {
                    y.min(1.0)
                }
            })
            .collect();
        Placement::new(&raw).expect("rotation stays inside [0, 1]")
    }
}

/// Probability law over active sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FailureModel {
    /// Every sensor fails independently with probability `p`.
    Independent { p: f64 },
    /// Exactly `k` of `n` sensors fail; the failing set is uniform.
    Cortes { k: usize, n: usize },
}

impl FailureModel {
    /// Independent failures, accepting the degenerate endpoints p = 0 and p = 1.
    pub fn independent(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::BadProbability(p));
        }
        Ok(Self::Independent { p })
    }

    /// Independent failures for optimization, which needs p strictly inside (0, 1).
    pub fn independent_open(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::BadProbability(p));
        }
        Ok(Self::Independent { p })
    }

    pub fn cortes(k: usize, n: usize) -> Result<Self> {
        if k >= n {
            return Err(Error::BadCortes { k, n });
        }
        Ok(Self::Cortes { k, n })
    }

    /// Probability of one particular active set of the given size among `n` sensors.
    pub fn probability_of_size(&self, active: usize, n: usize) -> f64 {
        match *self {
            FailureModel::Independent { p } => {
                p.powi((n - active) as i32) * (1.0 - p).powi(active as i32)
            }
            FailureModel::Cortes { k, n: model_n } => {
                if model_n == n && active + k == n {
                    1.0 / binomial(n, k)
                } else {
                    0.0
                }
            }
        }
    }

    /// Probability that no sensor is active.
    pub fn empty_set_mass(&self, n: usize) -> f64 {
        self.probability_of_size(0, n)
    }

    pub(crate) fn check_size(&self, n: usize) -> Result<()> {
        match *self {
            FailureModel::Cortes { n: model_n, .. } if model_n != n => Err(Error::ModelMismatch {
                model_n,
                placement_n: n,
            }),
            _ => Ok(()),
        }
    }
}

/// Coverage semantics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Geometry {
    Interval,
    Circle,
}

/// Strictly increasing list of active sensor indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActiveSet {
    members: Vec<usize>,
}

impl ActiveSet {
    pub fn new(mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        members.dedup();
        Self { members }
    }

    /// Members are the set bits of `mask`.
    pub fn from_mask(mask: u64) -> Self {
        let members = (0..64).filter(|i| mask >> i & 1 == 1).collect();
        Self { members }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Pr(E_A) for active set `active` among `n` sensors.
pub fn probability_of_active_set(
    model: &FailureModel,
    active: &ActiveSet,
    n: usize,
) -> Result<f64> {
    if let Some(&member) = active.members().iter().find(|&&m| m >= n) {
        return Err(Error::BadActiveSet { member, n });
    }
    Ok(model.probability_of_size(active.len(), n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::CompensatedSum;
    use proptest::prelude::*;

    #[test]
    fn placement_sorts_and_records_permutation() {
        let x = Placement::new(&[0.75, 0.25]).unwrap();
        assert_eq!(x.positions(), &[0.25, 0.75]);
        assert_eq!(x.permutation(), &[1, 0]);

        let single = Placement::new(&[0.5]).unwrap();
        assert_eq!(single.positions(), &[0.5]);

        let cluster = Placement::new(&[0.1, 0.1, 0.1]).unwrap();
        assert_eq!(cluster.positions(), &[0.1, 0.1, 0.1]);
        assert_eq!(cluster.permutation(), &[0, 1, 2]);
    }

    #[test]
    fn placement_rejects_bad_input() {
        assert_eq!(Placement::new(&[]), Err(Error::EmptyInput));
        assert_eq!(
            Placement::new(&[0.2, 1.5]),
            Err(Error::EntryOutOfRange {
                index: 1,
                value: 1.5
            })
        );
        assert!(Placement::new(&[f64::NAN]).is_err());
    }

    #[test]
    fn active_set_probabilities() {
        let ind = FailureModel::independent(0.5).unwrap();
        let a = ActiveSet::new(vec![0, 2]);
        assert_eq!(probability_of_active_set(&ind, &a, 3).unwrap(), 0.125);

        let cortes = FailureModel::cortes(1, 4).unwrap();
        let three = ActiveSet::new(vec![0, 1, 2]);
        assert_eq!(probability_of_active_set(&cortes, &three, 4).unwrap(), 0.25);
        let two = ActiveSet::new(vec![0, 1]);
        assert_eq!(probability_of_active_set(&cortes, &two, 4).unwrap(), 0.0);

        assert!(probability_of_active_set(&ind, &ActiveSet::new(vec![3]), 3).is_err());
    }

    #[test]
    fn model_constructors_validate() {
        assert!(FailureModel::independent(0.0).is_ok());
        assert!(FailureModel::independent(1.0).is_ok());
        assert!(FailureModel::independent(1.1).is_err());
        assert!(FailureModel::independent_open(0.0).is_err());
        assert!(FailureModel::independent_open(1.0).is_err());
        assert!(FailureModel::cortes(3, 3).is_err());
        assert!(FailureModel::cortes(0, 3).is_ok());
    }

    #[test]
    fn cortes_mass_sits_on_one_cardinality() {
        for n in 1..=10 {
            for k in 0..n {
                let model = FailureModel::cortes(k, n).unwrap();
                let mut total = 0.0;
                for mask in 0u64..(1 << n) {
                    let set = ActiveSet::from_mask(mask);
                    let pr = probability_of_active_set(&model, &set, n).unwrap();
                    if set.len() != n - k {
                        assert_eq!(pr, 0.0);
                    }
                    total += pr;
                }
                assert!((total - 1.0).abs() < 1e-12, "n={n} k={k} total={total}");
            }
        }
    }

    #[test]
    fn canonical_circle_puts_first_sensor_at_zero() {
        let x = Placement::new(&[0.3, 0.5, 0.9]).unwrap();
        let c = x.canonical_circle();
        assert_eq!(c.positions()[0], 0.0);
        assert!((c.positions()[1] - 0.2).abs() < 1e-15);
        assert!((c.positions()[2] - 0.6).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn independent_mass_sums_to_one(p in 0.0f64..=1.0, n in 1usize..=14) {
            let model = FailureModel::independent(p).unwrap();
            let total: CompensatedSum = (0u64..(1 << n))
                .map(|mask| probability_of_active_set(&model, &ActiveSet::from_mask(mask), n).unwrap())
                .collect();
            prop_assert!((total.value() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn probability_depends_only_on_cardinality(p in 0.0f64..=1.0, mask in 0u64..4096, shift in 0u32..12) {
            let n = 12;
            let rotated = ((mask << shift) | (mask >> (n - shift as usize))) & 0xfff;
            let model = FailureModel::independent(p).unwrap();
            let a = probability_of_active_set(&model, &ActiveSet::from_mask(mask), n).unwrap();
            let b = probability_of_active_set(&model, &ActiveSet::from_mask(rotated), n).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn placement_is_sorted_and_length_preserving(raw in prop::collection::vec(0.0f64..=1.0, 1..30)) {
            let x = Placement::new(&raw).unwrap();
            prop_assert_eq!(x.len(), raw.len());
            prop_assert!(x.positions().windows(2).all(|w| w[0] <= w[1]));
            for (k, &i) in x.permutation().iter().enumerate() {
                prop_assert_eq!(x.positions()[k], raw[i]);
            }
        }
    }
}
