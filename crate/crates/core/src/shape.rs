//! Labeled tensor-factor bookkeeping for multipartite matrices.
//!
//! A [`SubsystemShape`] records an ordered list of labeled local dimensions.
//! Matrix indices are row-major over the factors: the first factor is the
//! most significant digit. The canonical order for bipartite channels is
//! `A0, B0, A1, B1` (inputs first).

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsystemShape {
    names: Vec<String>,
    dims: Vec<usize>,
}

impl SubsystemShape {
    pub fn new<S: Into<String>>(parts: Vec<(S, usize)>) -> Result<Self> {
        let mut names = Vec::with_capacity(parts.len());
        let mut dims = Vec::with_capacity(parts.len());
        for (name, d) in parts {
            let name = name.into();
            if d == 0 {
                return Err(Error::Invalid(format!("subsystem `{name}` has dimension 0")));
            }
            if names.contains(&name) {
                return Err(Error::Invalid(format!("duplicate subsystem label `{name}`")));
            }
            names.push(name);
            dims.push(d);
        }
        Ok(Self { names, dims })
    }

    /// Two-qubit channel shape `A0,B0,A1,B1` with the given local dimensions.
    pub fn channel(d_a0: usize, d_b0: usize, d_a1: usize, d_b1: usize) -> Self {
        Self::new(vec![("A0", d_a0), ("B0", d_b0), ("A1", d_a1), ("B1", d_b1)]).unwrap()
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    /// Total Hilbert-space dimension (product of local dimensions).
    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn names(&self) -> Vec<&str> {
        self.names.iter().map(|s| s.as_str()).collect()
    }

    pub fn dim_of(&self, name: &str) -> Result<usize> {
        Ok(self.dims[self.index_of(name)?])
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownLabel(name.to_string()))
    }

    pub fn indices_of(&self, names: &[&str]) -> Result<Vec<usize>> {
        names.iter().map(|n| self.index_of(n)).collect()
    }

    /// Subshape obtained by keeping the listed factor positions, in order.
    pub fn select(&self, positions: &[usize]) -> Self {
        Self {
            names: positions.iter().map(|&p| self.names[p].clone()).collect(),
            dims: positions.iter().map(|&p| self.dims[p]).collect(),
        }
    }

    pub fn concat(&self, other: &Self) -> Result<Self> {
        let mut parts: Vec<(String, usize)> = self
            .names
            .iter()
            .cloned()
            .zip(self.dims.iter().copied())
            .collect();
        parts.extend(other.names.iter().cloned().zip(other.dims.iter().copied()));
        Self::new(parts)
    }

    /// Row-major strides of each factor in the composite index.
    pub fn strides(&self) -> Vec<usize> {
        let n = self.dims.len();
        let mut s = vec![1usize; n];
        for k in (0..n.saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.dims[k + 1];
        }
        s
    }

    /// Decompose a composite index into per-factor digits.
    pub fn unravel(&self, mut idx: usize) -> Vec<usize> {
        let mut digits = vec![0usize; self.dims.len()];
        for k in (0..self.dims.len()).rev() {
            digits[k] = idx % self.dims[k];
            idx /= self.dims[k];
        }
        digits
    }

    /// Recompose per-factor digits into a composite index.
    pub fn ravel(&self, digits: &[usize]) -> usize {
        debug_assert_eq!(digits.len(), self.dims.len());
        let mut idx = 0usize;
        for (k, &d) in digits.iter().enumerate() {
            debug_assert!(d < self.dims[k]);
            idx = idx * self.dims[k] + d;
        }
        idx
    }

    /// Index permutation realizing a reordering of factors.
    ///
    /// `order[k]` names the old position placed at new position `k`. The
    /// returned map sends each new composite index to the old composite index
    /// holding the same entry.
    pub fn permutation_map(&self, order: &[usize]) -> Vec<usize> {
        debug_assert_eq!(order.len(), self.len());
        let new_shape = self.select(order);
        let old_strides = self.strides();
        let dim = self.dim();
        let mut map = vec![0usize; dim];
        for (new_idx, slot) in map.iter_mut().enumerate() {
            let digits = new_shape.unravel(new_idx);
            let mut old_idx = 0usize;
            for (k, &d) in digits.iter().enumerate() {
                old_idx += d * old_strides[order[k]];
            }
            *slot = old_idx;
        }
        map
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ravel_unravel_roundtrip() {
        let s = SubsystemShape::channel(2, 3, 2, 2);
        assert_eq!(s.dim(), 24);
        for idx in 0..s.dim() {
            assert_eq!(s.ravel(&s.unravel(idx)), idx);
        }
    }

    #[test]
    fn strides_are_row_major() {
        let s = SubsystemShape::channel(2, 2, 2, 2);
        assert_eq!(s.strides(), vec![8, 4, 2, 1]);
    }

    #[test]
    fn duplicate_labels_rejected() {
        assert!(SubsystemShape::new(vec![("A", 2), ("A", 2)]).is_err());
    }

    #[test]
    fn permutation_map_swaps_digits() {
        let s = SubsystemShape::new(vec![("X", 2), ("Y", 3)]).unwrap();
        let map = s.permutation_map(&[1, 0]);
        // new index (y, x) -> old index (x, y)
        for x in 0..2 {
            for y in 0..3 {
                let new_idx = y * 2 + x;
                let old_idx = x * 3 + y;
                assert_eq!(map[new_idx], old_idx);
            }
        }
    }
}
