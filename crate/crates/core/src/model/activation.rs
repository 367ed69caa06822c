use std::fmt;

/// Binary on/off pattern over the base stations.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActivationVector(Vec<bool>);

impl ActivationVector {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn all_ones(len: usize) -> Self {
        Self(vec![true; len])
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![false; len])
    }

    /// Pattern whose bit `l` is bit `l` of `mask`.
    pub fn from_mask(mask: usize, len: usize) -> Self {
        Self((0..len).map(|l| mask >> l & 1 == 1).collect())
    }

    pub fn to_mask(&self) -> usize {
        self.0.iter().enumerate().filter(|(_, &b)| b).map(|(l, _)| 1usize << l).sum()
    }

    /// Parses a string of `0`/`1` characters, first character is BS 0.
    pub fn from_bitstring(s: &str) -> Option<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(Self)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_active(&self, l: usize) -> bool {
        self.0[l]
    }

    pub fn set(&mut self, l: usize, on: bool) {
        self.0[l] = on;
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn count_active(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// `sum_l a_l x_l`.
    pub fn dot(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).filter(|(&b, _)| b).map(|(_, v)| v).sum()
    }

    /// Componentwise `self <= other`.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.0.iter().zip(&other.0).all(|(&a, &b)| !a || b)
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }
}

impl fmt::Display for ActivationVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}
