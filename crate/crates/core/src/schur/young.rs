//! Partitions, standard Young tableaux and Young's orthogonal representation.

use crate::error::{Error, Result};
use crate::perm::Permutation;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// A partition `λ ⊢ n` with positive, weakly decreasing parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct YoungDiagram(Vec<usize>);

impl YoungDiagram {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.contains(&0) {
            return Err(Error::Domain(format!("partition {parts:?} has a zero part")));
        }
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Domain(format!("partition {parts:?} is not weakly decreasing")));
        }
        Ok(YoungDiagram(parts))
    }

    pub fn parts(&self) -> &[usize] {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.iter().sum()
    }

    /// `ℓ(λ)`, the number of parts.
    pub fn length(&self) -> usize {
        self.0.len()
    }

    pub fn boxes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.iter().enumerate().flat_map(|(r, &len)| (0..len).map(move |c| (r, c)))
    }

    pub fn conjugate(&self) -> YoungDiagram {
        let width = self.0.first().copied().unwrap_or(0);
        YoungDiagram((0..width).map(|c| self.0.iter().filter(|&&len| len > c).count()).collect())
    }

    pub fn hook(&self, row: usize, col: usize) -> usize {
        let arm = self.0[row] - col - 1;
        let leg = self.0.iter().skip(row + 1).filter(|&&len| len > col).count();
        arm + leg + 1
    }

    /// Number of standard tableaux, by the hook length formula.
    pub fn specht_dim(&self) -> u128 {
        let num: Vec<u64> = (1..=self.n() as u64).collect();
        let den: Vec<u64> = self.boxes().map(|(r, c)| self.hook(r, c) as u64).collect();
        exact_ratio(&num, &den)
    }

    /// Dimension of the `GL_d` irrep `V_λ^d`; zero when `ℓ(λ) > d`. Hook-content formula.
    pub fn weyl_dim(&self, d: usize) -> u128 {
        if self.length() > d {
            return 0;
        }
        let num: Vec<u64> = self.boxes().map(|(r, c)| (d + c - r) as u64).collect();
        let den: Vec<u64> = self.boxes().map(|(r, c)| self.hook(r, c) as u64).collect();
        exact_ratio(&num, &den)
    }

    /// Standard tableaux in descending lexicographic order of content vectors.
    pub fn standard_tableaux(&self) -> Vec<StandardTableau> {
        let mut fillings = Vec::new();
        let mut rows: Vec<Vec<usize>> = self.0.iter().map(|_| Vec::new()).collect();
        fill(&self.0, &mut rows, 0, self.n(), &mut fillings);
        let mut out: Vec<StandardTableau> =
            fillings.into_iter().map(|rows| StandardTableau::from_rows(self.clone(), rows)).collect();
        out.sort_by(|a, b| b.content.cmp(&a.content));
        out
    }
}

impl TryFrom<Vec<usize>> for YoungDiagram {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        YoungDiagram::new(v)
    }
}

impl From<YoungDiagram> for Vec<usize> {
    fn from(y: YoungDiagram) -> Vec<usize> {
        y.0
    }
}

impl std::fmt::Display for YoungDiagram {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|p| p.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Places letters `next..n` row by row, keeping rows and columns increasing.
fn fill(shape: &[usize], rows: &mut [Vec<usize>], next: usize, n: usize, out: &mut Vec<Vec<Vec<usize>>>) {
    if next == n {
        out.push(rows.to_vec());
        return;
    }
    for r in 0..shape.len() {
        let col = rows[r].len();
        let fits_row = col < shape[r];
        let fits_col = r == 0 || rows[r - 1].len() > col;
        if fits_row && fits_col {
            rows[r].push(next);
            fill(shape, rows, next + 1, n, out);
            rows[r].pop();
        }
    }
}

/// `Π num / Π den` for an integral ratio, via prime exponents so no intermediate overflows.
fn exact_ratio(num: &[u64], den: &[u64]) -> u128 {
    let mut exps: HashMap<u64, i64> = HashMap::new();
    let mut add = |mut x: u64, sign: i64| {
        let mut p = 2;
        while p * p <= x {
            while x % p == 0 {
                *exps.entry(p).or_default() += sign;
                x /= p;
            }
            p += 1;
        }
        if x > 1 {
            *exps.entry(x).or_default() += sign;
        }
    };
    for &x in num {
        if x == 0 {
            return 0;
        }
        add(x, 1);
    }
    for &x in den {
        add(x, -1);
    }
    exps.into_iter().fold(1u128, |acc, (p, e)| {
        assert!(e >= 0, "ratio is not an integer");
        acc * (p as u128).pow(e as u32)
    })
}

/// All partitions of `n` with at most `max_len` parts, lexicographically descending.
pub fn enumerate_partitions(n: usize, max_len: usize) -> Vec<YoungDiagram> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    partitions_rec(n, n, max_len, &mut cur, &mut out);
    out
}

fn partitions_rec(rest: usize, cap: usize, slots: usize, cur: &mut Vec<usize>, out: &mut Vec<YoungDiagram>) {
    if rest == 0 {
        out.push(YoungDiagram(cur.clone()));
        return;
    }
    if slots == 0 {
        return;
    }
    for p in (1..=cap.min(rest)).rev() {
        cur.push(p);
        partitions_rec(rest - p, p, slots - 1, cur, out);
        cur.pop();
    }
}

/// A standard filling of a Young diagram by the letters `0..n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StandardTableau {
    shape: YoungDiagram,
    rows: Vec<Vec<usize>>,
    /// `content[i]` = column − row of the box holding letter `i`.
    content: Vec<i64>,
}

impl StandardTableau {
    fn from_rows(shape: YoungDiagram, rows: Vec<Vec<usize>>) -> Self {
        let n = shape.n();
        let mut content = vec![0; n];
        for (r, row) in rows.iter().enumerate() {
            for (c, &x) in row.iter().enumerate() {
                content[x] = c as i64 - r as i64;
            }
        }
        StandardTableau { shape, rows, content }
    }

    pub fn shape(&self) -> &YoungDiagram {
        &self.shape
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn content(&self) -> &[i64] {
        &self.content
    }

    /// `c(i+1) − c(i)`; its reciprocal is the diagonal entry of `κ(s_i)`.
    pub fn axial_distance(&self, i: usize) -> i64 {
        self.content[i + 1] - self.content[i]
    }

    /// The tableau with letters `i` and `i+1` exchanged, when that is standard.
    pub fn swapped(&self, i: usize) -> Option<StandardTableau> {
        if self.axial_distance(i).abs() == 1 {
            return None;
        }
        let rows = self
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&x| {
                        if x == i {
                            i + 1
                        } else if x == i + 1 {
                            i
                        } else {
                            x
                        }
                    })
                    .collect()
            })
            .collect();
        Some(StandardTableau::from_rows(self.shape.clone(), rows))
    }
}

/// Young's orthogonal representation `κ_λ` in the ordered SYT basis.
#[derive(Clone, Debug)]
pub struct YoungRep {
    lambda: YoungDiagram,
    tableaux: Vec<StandardTableau>,
    index: HashMap<Vec<i64>, usize>,
}

impl YoungRep {
    pub fn new(lambda: YoungDiagram) -> Self {
        let tableaux = lambda.standard_tableaux();
        let index = tableaux.iter().enumerate().map(|(i, t)| (t.content.clone(), i)).collect();
        YoungRep { lambda, tableaux, index }
    }

    pub fn lambda(&self) -> &YoungDiagram {
        &self.lambda
    }

    pub fn tableaux(&self) -> &[StandardTableau] {
        &self.tableaux
    }

    pub fn dim(&self) -> usize {
        self.tableaux.len()
    }

    pub fn index_of(&self, t: &StandardTableau) -> usize {
        self.index[&t.content]
    }

    /// `κ_λ((i, i+1))`, 0-based `i`.
    pub fn generator(&self, i: usize) -> Result<DMatrix<f64>> {
        let n = self.lambda.n();
        if i + 1 >= n {
            return Err(Error::Domain(format!("adjacent transposition ({i},{}) outside S_{n}", i + 1)));
        }
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for (j, t) in self.tableaux.iter().enumerate() {
            let r = t.axial_distance(i) as f64;
            m[(j, j)] = 1.0 / r;
            if let Some(s) = t.swapped(i) {
                m[(self.index_of(&s), j)] = (1.0 - 1.0 / (r * r)).sqrt();
            }
        }
        Ok(m)
    }

    /// `κ_λ(π)` as the product of generators along the bubble-sort word of `π`.
    pub fn matrix(&self, pi: &Permutation) -> Result<DMatrix<f64>> {
        let mut m = DMatrix::identity(self.dim(), self.dim());
        for i in pi.adjacent_decomposition() {
            m *= self.generator(i)?;
        }
        Ok(m)
    }

    pub fn character(&self, pi: &Permutation) -> Result<f64> {
        Ok(self.matrix(pi)?.trace())
    }
}

/// Sorted cycle lengths; characters are constant on these classes.
pub fn cycle_type(pi: &Permutation) -> Vec<usize> {
    let n = pi.len();
    let mut seen = vec![false; n];
    let mut lens = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        let mut len = 0;
        let mut x = s;
        while !seen[x] {
            seen[x] = true;
            x = pi.apply(x);
            len += 1;
        }
        lens.push(len);
    }
    lens.sort_unstable_by(|a, b| b.cmp(a));
    lens
}

#[cfg(test)]
mod tests {
    use super::*;

    fn yd(p: &[usize]) -> YoungDiagram {
        YoungDiagram::new(p.to_vec()).unwrap()
    }

    #[test]
    fn partition_enumeration() {
        assert_eq!(enumerate_partitions(2, 2), vec![yd(&[2]), yd(&[1, 1])]);
        assert_eq!(enumerate_partitions(3, 2), vec![yd(&[3]), yd(&[2, 1])]);
        assert_eq!(enumerate_partitions(4, 4).len(), 5);
        assert_eq!(enumerate_partitions(1, 1), vec![yd(&[1])]);
    }

    #[test]
    fn dims_small() {
        assert_eq!(yd(&[2, 1]).specht_dim(), 2);
        assert_eq!(yd(&[3]).weyl_dim(2), 4);
        assert_eq!(yd(&[1, 1, 1]).weyl_dim(2), 0);
        assert_eq!(yd(&[4, 2, 1]).specht_dim(), 35);
        for lam in enumerate_partitions(6, 6) {
            assert_eq!(lam.specht_dim() as usize, lam.standard_tableaux().len());
        }
    }

    #[test]
    fn yor_of_21() {
        let rep = YoungRep::new(yd(&[2, 1]));
        let s1 = rep.generator(0).unwrap();
        let s2 = rep.generator(1).unwrap();
        let h = 3f64.sqrt() / 2.0;
        assert_eq!(s1, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]));
        let expected = DMatrix::from_row_slice(2, 2, &[-0.5, h, h, 0.5]);
        assert!((s2 - expected).abs().max() < 1e-15);
    }

    #[test]
    fn trivial_and_sign_reps() {
        for n in 2..6 {
            let triv = YoungRep::new(yd(&[n]));
            let sign = YoungRep::new(YoungDiagram::new(vec![1; n]).unwrap());
            for i in 0..n - 1 {
                assert_eq!(triv.generator(i).unwrap()[(0, 0)], 1.0);
                assert_eq!(sign.generator(i).unwrap()[(0, 0)], -1.0);
            }
        }
    }

    #[test]
    fn cycle_types() {
        let p = Permutation::from_images(vec![1, 2, 0, 4, 3]).unwrap();
        assert_eq!(cycle_type(&p), vec![3, 2]);
        assert_eq!(cycle_type(&Permutation::identity(3)), vec![1, 1, 1]);
    }
}
