//! Segment boundaries for a trajectory.
//!
//! A boundary at state position `u ∈ 1..=T` means the token emitted at step
//! `u - 1` closes a segment. The terminal position `T` is always a boundary.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::traj::Trajectory;
use crate::{Error, Result};

/// Probability threshold used when none is configured.
pub const DEFAULT_THRESHOLD: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentationMethod {
    Probability,
    Uniform,
    Delimiter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentationConfig {
    pub method: SegmentationMethod,
    /// Boundary iff the emitted token's probability is strictly below `p`.
    pub p: f64,
    /// Segment length for uniform segmentation.
    #[serde(rename = "M")]
    pub segment_len: usize,
    /// Token ids that close a segment.
    pub delimiters: Vec<u32>,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            method: SegmentationMethod::Probability,
            p: DEFAULT_THRESHOLD,
            segment_len: 200,
            delimiters: Vec::new(),
        }
    }
}

impl SegmentationConfig {
    pub fn probability(p: f64) -> Self {
        Self {
            p,
            ..Self::default()
        }
    }

    pub fn uniform(segment_len: usize) -> Self {
        Self {
            method: SegmentationMethod::Uniform,
            segment_len,
            ..Self::default()
        }
    }

    pub fn delimiter(delimiters: Vec<u32>) -> Self {
        Self {
            method: SegmentationMethod::Delimiter,
            delimiters,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.method {
            SegmentationMethod::Probability => check_threshold(self.p),
            SegmentationMethod::Uniform if self.segment_len == 0 => Err(Error::invalid(
                "uniform segment length M must be at least 1",
            )),
            SegmentationMethod::Delimiter if self.delimiters.is_empty() => Err(Error::invalid(
                "delimiter segmentation needs at least one delimiter",
            )),
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> String {
        match self.method {
            SegmentationMethod::Probability => format!("p={}", self.p),
            SegmentationMethod::Uniform => format!("M={}", self.segment_len),
            SegmentationMethod::Delimiter => {
                let ids: Vec<String> = self.delimiters.iter().map(u32::to_string).collect();
                format!("delim={}", ids.join("|"))
            }
        }
    }

    /// Apply this configuration to a trajectory.
    pub fn segment(&self, traj: &Trajectory) -> Result<BoundarySet> {
        self.validate()?;
        match self.method {
            SegmentationMethod::Probability => segment_probability(traj, self.p),
            SegmentationMethod::Uniform => segment_uniform(traj.len(), self.segment_len),
            SegmentationMethod::Delimiter => {
                let set: BTreeSet<u32> = self.delimiters.iter().copied().collect();
                segment_delimiter(traj, &set)
            }
        }
    }
}

fn check_threshold(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid(format!(
            "threshold p must lie in (0, 1], got {p}"
        )));
    }
    Ok(())
}

/// Ordered boundary positions for one trajectory, always ending at `T`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundarySet {
    positions: Vec<usize>,
    horizon: usize,
}

impl BoundarySet {
    pub fn new(positions: Vec<usize>, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::invalid("boundary set needs a horizon of at least 1"));
        }
        if positions.last() != Some(&horizon) {
            return Err(Error::invalid(format!(
                "boundary set must end at the terminal position {horizon}"
            )));
        }
        if positions[0] == 0 {
            return Err(Error::invalid("boundary position 0 is outside [1, T]"));
        }
        if positions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(
                "boundary positions must be strictly increasing",
            ));
        }
        Ok(Self { positions, horizon })
    }

    /// Build from a per-position predicate over `1..=T`, appending `T`.
    pub fn from_predicate(horizon: usize, mut is_boundary: impl FnMut(usize) -> bool) -> Self {
        let mut positions: Vec<usize> = (1..horizon).filter(|&u| is_boundary(u)).collect();
        positions.push(horizon);
        Self { positions, horizon }
    }

    /// Only the terminal position.
    pub fn terminal_only(horizon: usize) -> Self {
        Self::from_predicate(horizon, |_| false)
    }

    /// Every position `1..=T`.
    pub fn all(horizon: usize) -> Self {
        Self::from_predicate(horizon, |_| true)
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Number of segments, `|B|`.
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn contains(&self, position: usize) -> bool {
        self.positions.binary_search(&position).is_ok()
    }

    /// Mean tokens per segment, `T / |B|`.
    pub fn mean_segment_length(&self) -> f64 {
        self.horizon as f64 / self.positions.len() as f64
    }
}

/// Boundary at `u` iff `gen_probs[u - 1] < p`.
pub fn segment_probability(traj: &Trajectory, p: f64) -> Result<BoundarySet> {
    check_threshold(p)?;
    let probs = traj.gen_probs();
    Ok(BoundarySet::from_predicate(traj.len(), |u| {
        probs[u - 1] < p
    }))
}

/// Boundaries at multiples of `segment_len` plus `T`.
pub fn segment_uniform(horizon: usize, segment_len: usize) -> Result<BoundarySet> {
    if horizon == 0 {
        return Err(Error::invalid("uniform segmentation needs T >= 1"));
    }
    if segment_len == 0 {
        return Err(Error::invalid(
            "uniform segment length M must be at least 1",
        ));
    }
    Ok(BoundarySet::from_predicate(horizon, |u| {
        u % segment_len == 0
    }))
}

/// Boundary at `u` iff the token emitted at step `u - 1` is a delimiter.
pub fn segment_delimiter(traj: &Trajectory, delimiters: &BTreeSet<u32>) -> Result<BoundarySet> {
    if delimiters.is_empty() {
        return Err(Error::invalid(
            "delimiter segmentation needs at least one delimiter",
        ));
    }
    let tokens = traj.tokens();
    Ok(BoundarySet::from_predicate(traj.len(), |u| {
        delimiters.contains(&tokens[u - 1])
    }))
}

/// Mean over trajectories of `T / |B|`.
pub fn avg_segment_length(boundaries: &[BoundarySet]) -> Result<f64> {
    if boundaries.is_empty() {
        return Err(Error::invalid(
            "average segment length of an empty collection",
        ));
    }
    let total: f64 = boundaries
        .iter()
        .map(BoundarySet::mean_segment_length)
        .sum();
    Ok(total / boundaries.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn traj_probs(probs: Vec<f64>) -> Trajectory {
        Trajectory::new(vec![0; probs.len()], probs, 1.0).unwrap()
    }

    #[test]
    fn probability_threshold_example() {
        let t = traj_probs(vec![0.9, 0.15, 0.8, 0.05, 0.99]);
        assert_eq!(
            segment_probability(&t, 0.2).unwrap().positions(),
            &[2, 4, 5]
        );
    }

    #[test]
    fn probability_extremes() {
        let t = traj_probs(vec![0.9, 1e-6, 0.8, 0.5]);
        assert_eq!(segment_probability(&t, 1e-12).unwrap().positions(), &[4]);
        let t = traj_probs(vec![0.1, 0.1, 0.1]);
        assert_eq!(
            segment_probability(&t, 0.5).unwrap().positions(),
            &[1, 2, 3]
        );
        assert!(segment_probability(&t, 0.0).is_err());
        assert!(segment_probability(&t, 1.5).is_err());
    }

    #[test]
    fn ties_are_not_boundaries() {
        let t = traj_probs(vec![0.2, 0.19, 0.2]);
        assert_eq!(segment_probability(&t, 0.2).unwrap().positions(), &[2, 3]);
    }

    #[test]
    fn first_position_can_be_boundary() {
        let t = traj_probs(vec![0.01, 0.9, 0.9]);
        assert_eq!(segment_probability(&t, 0.2).unwrap().positions(), &[1, 3]);
    }

    #[test]
    fn uniform_examples() {
        assert_eq!(segment_uniform(12, 4).unwrap().positions(), &[4, 8, 12]);
        assert_eq!(
            segment_uniform(10, 1).unwrap().positions(),
            &(1..=10).collect::<Vec<_>>()[..]
        );
        assert_eq!(segment_uniform(10, 4).unwrap().positions(), &[4, 8, 10]);
        assert!(segment_uniform(10, 0).is_err());
    }

    #[test]
    fn delimiter_examples() {
        let t = Trajectory::new(vec![7, 3, 9, 3, 5], vec![1.0; 5], 0.0).unwrap();
        let d: BTreeSet<u32> = [3].into();
        assert_eq!(segment_delimiter(&t, &d).unwrap().positions(), &[2, 4, 5]);
        let d: BTreeSet<u32> = [42].into();
        assert_eq!(segment_delimiter(&t, &d).unwrap().positions(), &[5]);
        let d: BTreeSet<u32> = [7, 3, 9, 5].into();
        assert_eq!(
            segment_delimiter(&t, &d).unwrap().positions(),
            &[1, 2, 3, 4, 5]
        );
        assert!(segment_delimiter(&t, &BTreeSet::new()).is_err());
    }

    #[test]
    fn terminal_delimiter_appears_once() {
        let t = Trajectory::new(vec![1, 3], vec![1.0; 2], 0.0).unwrap();
        let d: BTreeSet<u32> = [3].into();
        assert_eq!(segment_delimiter(&t, &d).unwrap().positions(), &[2]);
    }

    #[test]
    fn average_lengths() {
        let a = BoundarySet::new(vec![4, 8, 12], 12).unwrap();
        assert_eq!(avg_segment_length(&[a]).unwrap(), 4.0);
        let a = BoundarySet::new(vec![10], 10).unwrap();
        let b = BoundarySet::new(vec![5, 10], 10).unwrap();
        assert_eq!(avg_segment_length(&[a, b]).unwrap(), 7.5);
        assert_eq!(avg_segment_length(&[BoundarySet::all(6)]).unwrap(), 1.0);
        assert!(avg_segment_length(&[]).is_err());
    }

    #[test]
    fn boundary_set_validation() {
        assert!(BoundarySet::new(vec![2, 3], 4).is_err());
        assert!(BoundarySet::new(vec![0, 4], 4).is_err());
        assert!(BoundarySet::new(vec![3, 2, 4], 4).is_err());
        assert!(BoundarySet::new(vec![], 4).is_err());
        assert!(BoundarySet::new(vec![1, 4], 4).unwrap().contains(1));
    }

    #[test]
    fn config_validation() {
        assert!(SegmentationConfig::probability(0.0).validate().is_err());
        assert!(SegmentationConfig::uniform(0).validate().is_err());
        assert!(SegmentationConfig::delimiter(vec![]).validate().is_err());
        assert!(SegmentationConfig::delimiter(vec![1]).validate().is_ok());
    }

    proptest! {
        #[test]
        fn monotone_in_threshold(
            probs in prop::collection::vec(1e-6f64..=1.0, 1..100),
            p1 in 1e-3f64..=1.0,
            p2 in 1e-3f64..=1.0,
        ) {
            let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
            let t = traj_probs(probs);
            let small = segment_probability(&t, lo).unwrap();
            let large = segment_probability(&t, hi).unwrap();
            prop_assert!(small.positions().iter().all(|u| large.contains(*u)));
            prop_assert_eq!(*small.positions().last().unwrap(), t.len());
            prop_assert_eq!(small, segment_probability(&t, lo).unwrap());
        }

        #[test]
        fn uniform_matches_crafted_probabilities(t_len in 1usize..80, m in 1usize..12) {
            let probs: Vec<f64> = (1..=t_len)
                .map(|u| if u % m == 0 { 0.05 } else { 0.9 })
                .collect();
            let t = traj_probs(probs);
            prop_assert_eq!(
                segment_probability(&t, 0.2).unwrap(),
                segment_uniform(t_len, m).unwrap()
            );
        }
    }
}
