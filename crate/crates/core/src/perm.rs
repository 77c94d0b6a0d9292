//! Permutations of `n` letters in one-line notation, 0-based.
//!
//! `p.apply(j)` is the image of `j`. Composition follows function composition:
//! `p.compose(&q)` applies `q` first, so the register representation satisfies
//! `P(p) P(q) = P(p.compose(&q))`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    pub fn from_images(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            if i >= n || seen[i] {
                return Err(Error::Domain(format!("{images:?} is not a permutation")));
            }
            seen[i] = true;
        }
        Ok(Permutation(images))
    }

    /// The transposition exchanging letters `i` and `j`.
    pub fn transposition(n: usize, i: usize, j: usize) -> Self {
        assert!(i < n && j < n, "transposition letters out of range");
        let mut v: Vec<usize> = (0..n).collect();
        v.swap(i, j);
        Permutation(v)
    }

    /// The adjacent transposition `(i, i+1)`.
    pub fn adjacent(n: usize, i: usize) -> Self {
        Self::transposition(n, i, i + 1)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }

    pub fn apply(&self, j: usize) -> usize {
        self.0[j]
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &x)| i == x)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        assert_eq!(self.len(), other.len(), "composing permutations of different degree");
        Permutation(other.0.iter().map(|&j| self.0[j]).collect())
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.len()];
        for (i, &x) in self.0.iter().enumerate() {
            inv[x] = i;
        }
        Permutation(inv)
    }

    /// Embeds into `S_m` (m ≥ n) fixing the extra letters.
    pub fn extend(&self, m: usize) -> Permutation {
        assert!(m >= self.len());
        let mut v = self.0.clone();
        v.extend(self.len()..m);
        Permutation(v)
    }

    pub fn sign(&self) -> i32 {
        let inversions = self.adjacent_decomposition().len();
        if inversions % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// Indices `i_1, …, i_k` with `self = s_{i_1} ∘ … ∘ s_{i_k}`, where `s_i = (i, i+1)`.
    /// Obtained by bubble sort, so `k` equals the number of inversions.
    pub fn adjacent_decomposition(&self) -> Vec<usize> {
        let mut w = self.0.clone();
        let mut steps = Vec::new();
        let n = w.len();
        loop {
            let mut swapped = false;
            for j in 0..n.saturating_sub(1) {
                if w[j] > w[j + 1] {
                    w.swap(j, j + 1);
                    steps.push(j);
                    swapped = true;
                }
            }
            if !swapped {
                break;
            }
        }
        // w ∘ s_{j1} ∘ … ∘ s_{jk} = e, hence w = s_{jk} ∘ … ∘ s_{j1}.
        steps.reverse();
        steps
    }

    /// All `n!` permutations in lexicographic order of their one-line notation.
    pub fn all(n: usize) -> Vec<Permutation> {
        let mut out = Vec::new();
        let mut cur: Vec<usize> = (0..n).collect();
        loop {
            out.push(Permutation(cur.clone()));
            // next lexicographic permutation
            let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) else {
                break;
            };
            let j = (i + 1..n).rev().find(|&j| cur[j] > cur[i]).expect("successor exists");
            cur.swap(i, j);
            cur[i + 1..].reverse();
        }
        out
    }
}

pub fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}
