use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{CurError, Result};

/// Ordered row or column selection into a dimension of size `dim`.
///
/// Stored 0-based; rendered 1-based. Repeated entries are legal and come from
/// sampling with replacement.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IndexSet {
    indices: Vec<usize>,
    dim: usize,
}

impl IndexSet {
    /// From 0-based indices.
    pub fn new(indices: Vec<usize>, dim: usize) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= dim) {
            return Err(CurError::IndexOutOfRange {
                index: bad + 1,
                bound: dim,
            });
        }
        Ok(Self { indices, dim })
    }

    /// From 1-based indices, as typed on the command line.
    pub fn from_one_based(indices: &[usize], dim: usize) -> Result<Self> {
        let mut zero = Vec::with_capacity(indices.len());
        for &i in indices {
            if i == 0 || i > dim {
                return Err(CurError::IndexOutOfRange {
                    index: i,
                    bound: dim,
                });
            }
            zero.push(i - 1);
        }
        Ok(Self { indices: zero, dim })
    }

    /// Parses `"1,4,7"` (1-based).
    pub fn parse(text: &str, dim: usize) -> Result<Self> {
        let parsed = text
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<usize>()
                    .map_err(|_| CurError::invalid(format!("bad index '{s}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        if parsed.is_empty() {
            return Err(CurError::invalid("empty index list"));
        }
        Self::from_one_based(&parsed, dim)
    }

    /// Every index `0..dim` in order.
    pub fn full(dim: usize) -> Self {
        Self {
            indices: (0..dim).collect(),
            dim,
        }
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn target_dimension(&self) -> usize {
        self.dim
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.indices.iter().map(|i| i + 1).collect()
    }

    pub fn has_duplicates(&self) -> bool {
        let mut seen = vec![false; self.dim];
        self.indices
            .iter()
            .any(|&i| std::mem::replace(&mut seen[i], true))
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, i) in self.indices.iter().enumerate() {
            if n > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        Ok(())
    }
}

impl Serialize for IndexSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
