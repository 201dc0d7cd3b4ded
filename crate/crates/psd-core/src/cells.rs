//! Cell subsets of a discretized spectral space.

use alloc::vec;
use alloc::vec::Vec;

/// Subset of the cells (atoms, grid cells, momentum modes) of a discretized
/// spectral measure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellMask {
    bits: Vec<bool>,
}

impl CellMask {
    pub fn new_empty(len: usize) -> Self {
        Self { bits: vec![false; len] }
    }

    pub fn new_full(len: usize) -> Self {
        Self { bits: vec![true; len] }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut m = Self::new_empty(len);
        for i in indices {
            m.bits[i] = true;
        }
        m
    }

    /// Cells selected by a predicate.
    pub fn from_fn(len: usize, f: impl Fn(usize) -> bool) -> Self {
        Self { bits: (0..len).map(f).collect() }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn complement(&self) -> Self {
        Self { bits: self.bits.iter().map(|b| !b).collect() }
    }

    pub fn union(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len());
        Self {
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| a | b)
                .collect(),
        }
    }

    pub fn intersection(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len());
        Self {
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| a & b)
                .collect(),
        }
    }

    pub fn difference(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len());
        Self {
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| a & !b)
                .collect(),
        }
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.bits.iter().zip(&other.bits).all(|(&a, &b)| !(a & b))
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }
}

/// Checks that the masks cover every cell exactly once.
pub fn is_partition(masks: &[CellMask], len: usize) -> bool {
    if masks.iter().any(|m| m.len() != len) {
        return false;
    }
    (0..len).all(|c| masks.iter().filter(|m| m.contains(c)).count() == 1)
}

/// Label-per-cell view of a disjoint mask family; cells covered by no mask
/// are reported as `None`.
pub fn labels_of(masks: &[CellMask], len: usize) -> Vec<Option<u8>> {
    (0..len)
        .map(|c| {
            masks
                .iter()
                .position(|m| m.contains(c))
                .map(|i| i as u8)
        })
        .collect()
}
