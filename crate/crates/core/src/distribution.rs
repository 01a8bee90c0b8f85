use std::fmt;
use std::ops::Index;

use crate::error::{Error, Result};

/// Entries above this negative threshold are treated as round-off and clamped to zero.
pub const NEGATIVE_SLACK: f64 = 1e-12;
/// Allowed deviation of the total mass from one.
pub const MASS_TOLERANCE: f64 = 1e-10;

/// Probability vector over the micro-states of a [`StateSpace`](crate::StateSpace).
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    /// Validates `probs`, clamping tiny negative round-off to zero.
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty vector".into()));
        }
        for (i, p) in probs.iter_mut().enumerate() {
            if !p.is_finite() || *p < -NEGATIVE_SLACK {
                return Err(Error::InvalidDistribution(format!("entry {i} is {p}")));
            }
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("mass {total} differs from 1")));
        }
        Ok(Distribution(probs))
    }

    pub fn point_mass(len: usize, index: usize) -> Self {
        assert!(index < len, "point mass index {index} out of range {len}");
        let mut v = vec![0.0; len];
        v[index] = 1.0;
        Distribution(v)
    }

    pub fn uniform(len: usize) -> Self {
        assert!(len > 0);
        Distribution(vec![1.0 / len as f64; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Infinity-norm distance to another vector of the same length.
    pub fn max_abs_diff(&self, other: &[f64]) -> f64 {
        assert_eq!(self.len(), other.len());
        self.0
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Index<usize> for Distribution {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// The four macro-states of the system, named by what sender and receivers hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MacroState {
    /// No valid IR at the sender.
    S1,
    /// Sender and every receiver hold the same valid IR (consistency).
    S2,
    /// A fresh IR is in transfer to the receivers.
    S3,
    /// Valid IR at the sender, some receivers missing it, no transfer in progress.
    S4,
}

impl MacroState {
    pub const ALL: [MacroState; 4] = [MacroState::S1, MacroState::S2, MacroState::S3, MacroState::S4];

    pub const fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

impl fmt::Display for MacroState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MacroState::S1 => "S1",
            MacroState::S2 => "S2",
            MacroState::S3 => "S3",
            MacroState::S4 => "S4",
        };
        f.write_str(s)
    }
}

/// Probability of each macro-state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroDistribution(pub [f64; 4]);

impl MacroDistribution {
    pub fn get(&self, state: MacroState) -> f64 {
        self.0[state.index()]
    }

    /// Probability of consistency, i.e. of macro-state S2.
    pub fn consistency(&self) -> f64 {
        self.get(MacroState::S2)
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn max_abs_diff(&self, other: &MacroDistribution) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Index<MacroState> for MacroDistribution {
    type Output = f64;

    fn index(&self, s: MacroState) -> &f64 {
        &self.0[s.index()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(Distribution::new(vec![]).is_err());
        assert!(Distribution::new(vec![0.5, 0.6]).is_err());
        assert!(Distribution::new(vec![1.1, -0.1]).is_err());
        assert!(Distribution::new(vec![f64::NAN, 1.0]).is_err());
        let d = Distribution::new(vec![1.0, -1e-13]).unwrap();
        assert_eq!(d.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn helpers() {
        let d = Distribution::point_mass(3, 1);
        assert_eq!(d.as_slice(), &[0.0, 1.0, 0.0]);
        assert!((Distribution::uniform(22).total() - 1.0).abs() < 1e-12);
        assert_eq!(d.max_abs_diff(&[0.0, 0.5, 0.5]), 0.5);
        assert_eq!(MacroState::from_index(2), Some(MacroState::S3));
        assert_eq!(MacroState::from_index(4), None);
    }
}
