use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NodeSet;

/// Sparse real vector over node indices.
///
/// Entries are kept sorted by index and no stored value is ever exactly
/// `0.0`, so the key set is the support. Nothing is pruned by magnitude.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn zeros() -> Self {
        SparseVector::default()
    }

    pub fn unit(node: usize, value: f64) -> Self {
        let mut v = SparseVector::default();
        if value != 0.0 {
            v.entries.push((node, value));
        }
        v
    }

    /// Builds from arbitrary `(index, value)` pairs. Repeated indices are an
    /// error; zero values are dropped.
    pub fn from_pairs(mut pairs: Vec<(usize, f64)>) -> Result<Self> {
        pairs.sort_by_key(|&(i, _)| i);
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::invalid("repeated index in sparse vector"));
        }
        pairs.retain(|&(_, v)| v != 0.0);
        Ok(SparseVector { entries: pairs })
    }

    /// Input must already be sorted with distinct indices.
    pub(crate) fn from_sorted_unchecked(mut entries: Vec<(usize, f64)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        entries.retain(|&(_, v)| v != 0.0);
        SparseVector { entries }
    }

    pub fn from_dense(values: &[f64]) -> Self {
        SparseVector {
            entries: values
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(i, &v)| (i, v))
                .collect(),
        }
    }

    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for &(i, v) in &self.entries {
            out[i] = v;
        }
        out
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, node: usize) -> f64 {
        match self.entries.binary_search_by_key(&node, |&(i, _)| i) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0.0,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|&(i, _)| i)
    }

    pub fn support(&self) -> NodeSet {
        NodeSet::from_sorted(self.indices().collect()).expect("sparse vector indices are sorted")
    }

    pub fn norm_inf(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, &(_, v)| m.max(v.abs()))
    }

    pub fn norm2(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let mut total = 0.0;
        merge(&self.entries, &other.entries, |_, a, b| total += a * b);
        total
    }

    pub fn all_finite(&self) -> bool {
        self.entries.iter().all(|&(_, v)| v.is_finite())
    }

    /// `a·self + b·other`; entries that evaluate to exactly zero are dropped.
    pub fn lincomb(&self, a: f64, other: &SparseVector, b: f64) -> SparseVector {
        let mut out = Vec::with_capacity(self.len() + other.len());
        merge(&self.entries, &other.entries, |i, x, y| {
            let v = a * x + b * y;
            if v != 0.0 {
                out.push((i, v));
            }
        });
        SparseVector { entries: out }
    }

    pub fn sub(&self, other: &SparseVector) -> SparseVector {
        self.lincomb(1.0, other, -1.0)
    }

    /// `‖self − other‖_∞` over the union of both supports.
    pub fn dist_inf(&self, other: &SparseVector) -> f64 {
        let mut m: f64 = 0.0;
        merge(&self.entries, &other.entries, |_, a, b| m = m.max((a - b).abs()));
        m
    }

    pub fn dist2(&self, other: &SparseVector) -> f64 {
        let mut s = 0.0;
        merge(&self.entries, &other.entries, |_, a, b| s += (a - b) * (a - b));
        s.sqrt()
    }
}

/// Visits the union of two index-sorted entry lists, passing 0.0 for a side
/// that has no entry at that index.
fn merge(a: &[(usize, f64)], b: &[(usize, f64)], mut visit: impl FnMut(usize, f64, f64)) {
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let ia = a.get(i).map_or(usize::MAX, |e| e.0);
        let jb = b.get(j).map_or(usize::MAX, |e| e.0);
        if ia < jb {
            visit(ia, a[i].1, 0.0);
            i += 1;
        } else if jb < ia {
            visit(jb, 0.0, b[j].1);
            j += 1;
        } else {
            visit(ia, a[i].1, b[j].1);
            i += 1;
            j += 1;
        }
    }
}
