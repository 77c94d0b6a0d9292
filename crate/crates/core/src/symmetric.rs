//! Symmetric-subspace projectors, the symmetric group algebra, Jucys–Murphy
//! elements and the moment operators of the GPS estimator.

use crate::error::{Error, Result};
use crate::perm::{factorial, Permutation};
use crate::tensor::{check_cap, re, Mat, Operator, RegisterShape, C64};
use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, OnceLock, RwLock};

/// Largest symmetric group whose elements are enumerated or realized.
pub const MAX_GROUP_DEGREE: usize = 8;

/// `d[n] = C(n + d − 1, n)`, the dimension of `∨^n ℂ^d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SymDim {
    pub d: usize,
    pub n: usize,
    pub value: u128,
}

impl SymDim {
    pub fn new(n: usize, d: usize) -> Self {
        SymDim { d, n, value: sym_dim(n, d) }
    }

    pub fn as_f64(&self) -> f64 {
        self.value as f64
    }
}

pub fn sym_dim(n: usize, d: usize) -> u128 {
    if d == 0 {
        return u128::from(n == 0);
    }
    let mut acc: u128 = 1;
    for i in 1..=n as u128 {
        acc = acc * (d as u128 - 1 + i) / i;
    }
    acc
}

pub fn sym_dim_f64(n: usize, d: usize) -> f64 {
    sym_dim(n, d) as f64
}

type MapKey = (Permutation, usize);

struct MapCache {
    maps: RwLock<HashMap<MapKey, Arc<Vec<usize>>>>,
    stored: std::sync::atomic::AtomicUsize,
}

const MAP_CACHE_BUDGET: usize = 50_000_000;

fn map_cache() -> &'static MapCache {
    static CACHE: OnceLock<MapCache> = OnceLock::new();
    CACHE.get_or_init(|| MapCache { maps: RwLock::new(HashMap::new()), stored: std::sync::atomic::AtomicUsize::new(0) })
}

/// Index map over `d^n` basis states. The dense-operator cap does not apply:
/// contractions use these maps on spaces whose operators are never formed.
fn uniform_permutation_map(pi: &Permutation, d: usize) -> Result<Vec<usize>> {
    let n = pi.len();
    let total = d
        .checked_pow(n as u32)
        .filter(|&t| t <= MAP_CACHE_BUDGET)
        .ok_or_else(|| Error::Unsupported(format!("index map over {d}^{n} basis states")))?;
    let mut weights = vec![1usize; n];
    for j in (0..n.saturating_sub(1)).rev() {
        weights[j] = weights[j + 1] * d;
    }
    let mut map = Vec::with_capacity(total);
    for i in 0..total {
        let mut rest = i;
        let mut image = 0;
        for j in 0..n {
            let digit = rest / weights[j];
            rest %= weights[j];
            image += digit * weights[pi.apply(j)];
        }
        map.push(image);
    }
    Ok(map)
}

/// Basis-index map of `P(π)` on `(ℂ^d)^⊗n`: `P(π)|i⟩ = |map[i]⟩`. Memoized per `(π, d)`.
pub fn permutation_index_map(pi: &Permutation, d: usize) -> Result<Arc<Vec<usize>>> {
    let key = (pi.clone(), d);
    let cache = map_cache();
    if let Some(m) = cache.maps.read().expect("map cache poisoned").get(&key) {
        return Ok(m.clone());
    }
    let map = Arc::new(uniform_permutation_map(pi, d)?);
    use std::sync::atomic::Ordering;
    if cache.stored.load(Ordering::Relaxed) + map.len() <= MAP_CACHE_BUDGET {
        let mut w = cache.maps.write().expect("map cache poisoned");
        if w.insert(key, map.clone()).is_none() {
            cache.stored.fetch_add(map.len(), Ordering::Relaxed);
        }
    }
    Ok(map)
}

/// `Σ_π c_π π` in the group algebra `ℂ[S_n]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupAlgebraElement {
    n: usize,
    terms: BTreeMap<Permutation, C64>,
}

impl GroupAlgebraElement {
    pub fn zero(n: usize) -> Self {
        GroupAlgebraElement { n, terms: BTreeMap::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_permutation(Permutation::identity(n), re(1.0))
    }

    pub fn from_permutation(p: Permutation, coeff: C64) -> Self {
        let n = p.len();
        let mut terms = BTreeMap::new();
        terms.insert(p, coeff);
        GroupAlgebraElement { n, terms }
    }

    /// `Σ_{π∈S_n} π`.
    pub fn sum_all(n: usize) -> Result<Self> {
        check_degree(n)?;
        let terms = Permutation::all(n).into_iter().map(|p| (p, re(1.0))).collect();
        Ok(GroupAlgebraElement { n, terms })
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Permutation, &C64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, p: &Permutation) -> C64 {
        self.terms.get(p).copied().unwrap_or_default()
    }

    fn check_same_degree(&self, other: &Self) {
        assert_eq!(self.n, other.n, "group algebra elements of different degree");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_same_degree(other);
        let mut out = self.clone();
        for (p, &c) in &other.terms {
            *out.terms.entry(p.clone()).or_default() += c;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(re(-1.0)))
    }

    pub fn scale(&self, s: C64) -> Self {
        GroupAlgebraElement { n: self.n, terms: self.terms.iter().map(|(p, &c)| (p.clone(), c * s)).collect() }
    }

    /// Convolution product; `(a·b)` realizes as `R(a)·R(b)`.
    pub fn mul(&self, other: &Self) -> Self {
        self.check_same_degree(other);
        let mut terms: BTreeMap<Permutation, C64> = BTreeMap::new();
        for (p, &a) in &self.terms {
            for (q, &b) in &other.terms {
                *terms.entry(p.compose(q)).or_default() += a * b;
            }
        }
        GroupAlgebraElement { n: self.n, terms }
    }

    /// Embedding `ℂ[S_n] → ℂ[S_m]` fixing letters `n..m`.
    pub fn extend(&self, m: usize) -> Self {
        GroupAlgebraElement { n: m, terms: self.terms.iter().map(|(p, &c)| (p.extend(m), c)).collect() }
    }

    /// Drops coefficients with modulus at most `tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        GroupAlgebraElement {
            n: self.n,
            terms: self.terms.iter().filter(|(_, c)| c.norm() > tol).map(|(p, &c)| (p.clone(), c)).collect(),
        }
    }

    /// Largest coefficient difference.
    pub fn distance(&self, other: &Self) -> f64 {
        self.sub(other).terms.values().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// `Σ_π c_π P(π)` on `(ℂ^d)^⊗n`.
    pub fn realize(&self, d: usize) -> Result<Operator> {
        let shape = RegisterShape::uniform(d, self.n)?;
        let t = shape.total();
        let mut mat = Mat::zeros(t, t);
        for (p, &c) in &self.terms {
            let map = permutation_index_map(p, d)?;
            for (i, &j) in map.iter().enumerate() {
                mat[(j, i)] += c;
            }
        }
        Operator::new(shape, mat)
    }

    /// `R(self) · m` for a matrix with `d^n` rows, without forming `R(self)`.
    pub fn apply_left(&self, d: usize, m: &Mat) -> Result<Mat> {
        let mut out = Mat::zeros(m.nrows(), m.ncols());
        for (p, &c) in &self.terms {
            let map = permutation_index_map(p, d)?;
            if map.len() != m.nrows() {
                return Err(Error::Shape("row count does not match d^n".into()));
            }
            for (i, &j) in map.iter().enumerate() {
                for col in 0..m.ncols() {
                    out[(j, col)] += c * m[(i, col)];
                }
            }
        }
        Ok(out)
    }
}

fn check_degree(n: usize) -> Result<()> {
    if n > MAX_GROUP_DEGREE {
        Err(Error::Unsupported(format!("symmetric group S_{n} exceeds the cap n ≤ {MAX_GROUP_DEGREE}")))
    } else {
        Ok(())
    }
}

/// `X_i = (1,i) + … + (i−1,i)` in `ℂ[S_n]`, with 1-based `i` (`X_1 = 0`).
pub fn jucys_murphy(i: usize, n: usize) -> Result<GroupAlgebraElement> {
    if i == 0 || i > n {
        return Err(Error::Domain(format!("Jucys–Murphy index {i} outside 1..={n}")));
    }
    let mut x = GroupAlgebraElement::zero(n);
    for j in 0..i - 1 {
        x = x.add(&GroupAlgebraElement::from_permutation(Permutation::transposition(n, j, i - 1), re(1.0)));
    }
    Ok(x)
}

/// `e + X_i`.
pub fn jucys_murphy_shifted(i: usize, n: usize) -> Result<GroupAlgebraElement> {
    Ok(GroupAlgebraElement::identity(n).add(&jucys_murphy(i, n)?))
}

/// `Π_sym^{n,d} = (1/n!) Σ_π P(π)`.
pub fn sym_projector(n: usize, d: usize) -> Result<Operator> {
    check_degree(n)?;
    check_cap(d.checked_pow(n as u32).unwrap_or(usize::MAX))?;
    let weight = re(1.0 / factorial(n) as f64);
    GroupAlgebraElement::sum_all(n)?.scale(weight).realize(d)
}

/// `∫ |u⟩⟨u|^⊗m du = Π_sym^{m,d} / d[m]`.
pub fn exact_haar_projector_integral(m: usize, d: usize) -> Result<Operator> {
    if m == 0 {
        return Err(Error::Domain("m must be at least 1".into()));
    }
    let p = sym_projector(m, d)?;
    Ok(p.scale(re(1.0 / sym_dim_f64(m, d))))
}

/// Group-algebra element `g_k` on `S_{n+k}` with `M^(k) = R(g_k)·(Π_sym^n ⊗ I^⊗k)`.
///
/// `g_1 = X_{n+1}/n` and
/// `g_2 = (X_{n+2}X_{n+1} + (n+1,n+2))/n² − (e+X_{n+2})(e+X_{n+1}) / (n²(d+n+1))`,
/// the last term being the rising-factorial form of `Lower_mom`.
pub fn moment_element(k: usize, n: usize, d: usize) -> Result<GroupAlgebraElement> {
    if n == 0 {
        return Err(Error::Domain("moment operators need n ≥ 1".into()));
    }
    let nf = n as f64;
    match k {
        1 => Ok(jucys_murphy(n + 1, n + 1)?.scale(re(1.0 / nf))),
        2 => {
            let m = n + 2;
            Ok(moment_main_element(n)?.sub(&lower_moment_element(n, d)?.extend(m)))
        }
        _ => Err(Error::Unsupported(format!("moment operator of order {k}"))),
    }
}

/// `(X_{n+2}X_{n+1} + (n+1,n+2))/n²` on `S_{n+2}`.
pub fn moment_main_element(n: usize) -> Result<GroupAlgebraElement> {
    let m = n + 2;
    let x2 = jucys_murphy(m, m)?;
    let x1 = jucys_murphy(m - 1, m)?;
    let swap_last = GroupAlgebraElement::from_permutation(Permutation::transposition(m, m - 2, m - 1), re(1.0));
    Ok(x2.mul(&x1).add(&swap_last).scale(re(1.0 / (n * n) as f64)))
}

/// `Lower_mom` as `(e+X_{n+2})(e+X_{n+1}) / (n²(d+n+1))` on `S_{n+2}`.
pub fn lower_moment_element(n: usize, d: usize) -> Result<GroupAlgebraElement> {
    let m = n + 2;
    let a = jucys_murphy_shifted(m, m)?;
    let b = jucys_murphy_shifted(m - 1, m)?;
    Ok(a.mul(&b).scale(re(1.0 / ((n * n) as f64 * (d + n + 1) as f64))))
}

/// `M^(k)` on `(ℂ^d)^⊗(n+k)` from the Jucys–Murphy formulas.
pub fn moment_operator(k: usize, n: usize, d: usize) -> Result<Operator> {
    let g = moment_element(k, n, d)?;
    let pi_n = sym_projector(n, d)?;
    let id = Mat::identity(d.pow(k as u32), d.pow(k as u32));
    let right = pi_n.matrix().kronecker(&id);
    let left = g.realize(d)?;
    Operator::new(left.shape().clone(), left.matrix() * right)
}

/// `M^(k) = d[n]·∫ |u⟩⟨u|^⊗n ⊗ σ̂_u^⊗k du` with `σ̂_u = ((d+n)/n)|u⟩⟨u| − I/n`,
/// expanded term by term into exact projector integrals. Independent of the
/// Jucys–Murphy route.
pub fn moment_operator_from_integrals(k: usize, n: usize, d: usize) -> Result<Operator> {
    if n == 0 {
        return Err(Error::Domain("moment operators need n ≥ 1".into()));
    }
    let a = (d + n) as f64 / n as f64;
    let b = 1.0 / n as f64;
    let dn = sym_dim_f64(n, d);
    let id = Mat::identity(d, d);
    let j = |m: usize| exact_haar_projector_integral(m, d);
    let mat = match k {
        1 => j(n + 1)?.matrix() * re(a) - j(n)?.matrix().kronecker(&id) * re(b),
        2 => {
            let jn1 = j(n + 1)?.matrix().kronecker(&id);
            let s = crate::tensor::permutation_operator(&Permutation::transposition(n + 2, n, n + 1), d)?;
            let jn1_swapped = s.matrix() * &jn1 * s.matrix();
            j(n + 2)?.matrix() * re(a * a) - (jn1 + jn1_swapped) * re(a * b)
                + j(n)?.matrix().kronecker(&id).kronecker(&id) * re(b * b)
        }
        _ => return Err(Error::Unsupported(format!("moment operator of order {k}"))),
    };
    Operator::new(RegisterShape::uniform(d, n + k)?, mat * re(dn))
}

/// `tr_{1..n}(R(g)·(ψ ⊗ I^⊗k))` for `g ∈ ℂ[S_{n+k}]` and `ψ` on `(ℂ^d)^⊗n`.
/// Costs `d^{n+k}` per group element, never forming `R(g)`.
pub fn contract_with_state(g: &GroupAlgebraElement, psi: &Mat, n: usize, k: usize, d: usize) -> Result<Mat> {
    if g.degree() != n + k {
        return Err(Error::Shape(format!("element of S_{} contracted with n={n}, k={k}", g.degree())));
    }
    let dn = d.pow(n as u32);
    let dk = d.pow(k as u32);
    if psi.nrows() != dn || psi.ncols() != dn {
        return Err(Error::Shape("state dimension is not d^n".into()));
    }
    let mut out = Mat::zeros(dk, dk);
    for (p, &coef) in g.terms() {
        let map = permutation_index_map(p, d)?;
        // (P M)[map(K), J] = M[K, J]; the trace pairs the high digits of map(K) with J.
        for (kidx, &img) in map.iter().enumerate() {
            let (y_hi, y_lo) = (kidx / dk, kidx % dk);
            let (x, a) = (img / dk, img % dk);
            out[(a, y_lo)] += coef * psi[(y_hi, x)];
        }
    }
    Ok(out)
}

/// `‖Π_sym ψ − ψ‖_F`, the leakage of `ψ` out of the symmetric subspace.
pub fn symmetric_leakage(psi: &Mat, n: usize, d: usize) -> Result<f64> {
    let avg = GroupAlgebraElement::sum_all(n)?.scale(re(1.0 / factorial(n) as f64));
    let projected = avg.apply_left(d, psi)?;
    Ok(crate::tensor::frobenius(&(projected - psi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{permutation_operator, rel_frobenius, swap};

    #[test]
    fn dimensions() {
        assert_eq!(sym_dim(2, 2), 3);
        assert_eq!(sym_dim(3, 2), 4);
        assert_eq!(sym_dim(3, 3), 10);
        assert_eq!(sym_dim(0, 5), 1);
        for d in 1..6 {
            for n in 0..8 {
                let ratio = sym_dim_f64(n, d) / sym_dim_f64(n + 1, d);
                assert!((ratio - (n + 1) as f64 / (n + d) as f64).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn projector_examples() {
        let p1 = sym_projector(1, 3).unwrap();
        assert_eq!(p1.matrix(), &Mat::identity(3, 3));
        let p2 = sym_projector(2, 2).unwrap();
        let expected = (Mat::identity(4, 4) + swap(2).matrix()) * re(0.5);
        assert!(rel_frobenius(p2.matrix(), &expected) < 1e-15);
        assert!(p2.is_projector(1e-12));
        assert!((p2.trace().re - 3.0).abs() < 1e-12);
        let p3 = sym_projector(3, 2).unwrap();
        let rank = p3.eigh().values.iter().filter(|&&v| v > 0.5).count();
        assert_eq!(rank, 4);
    }

    #[test]
    fn jm_small_cases() {
        assert!(jucys_murphy(1, 3).unwrap().is_empty());
        let x2 = jucys_murphy(2, 2).unwrap();
        assert_eq!(x2.len(), 1);
        assert_eq!(x2.coefficient(&Permutation::transposition(2, 0, 1)), re(1.0));
        let prod = (1..=3)
            .rev()
            .fold(GroupAlgebraElement::identity(3), |acc, i| acc.mul(&jucys_murphy_shifted(i, 3).unwrap()));
        assert_eq!(prod.len(), 6);
        assert!(prod.terms().all(|(_, c)| (*c - re(1.0)).norm() < 1e-15));
    }

    #[test]
    fn realization_is_homomorphism() {
        let all = Permutation::all(3);
        for p in &all {
            for q in &all {
                let a = GroupAlgebraElement::from_permutation(p.clone(), re(1.0));
                let b = GroupAlgebraElement::from_permutation(q.clone(), re(1.0));
                let lhs = a.mul(&b).realize(2).unwrap();
                let rhs = permutation_operator(p, 2).unwrap().mul(&permutation_operator(q, 2).unwrap()).unwrap();
                assert_eq!(lhs.matrix(), rhs.matrix());
            }
        }
    }

    #[test]
    fn first_moment_operator_n1_is_swap() {
        let m = moment_operator(1, 1, 2).unwrap();
        assert!(rel_frobenius(m.matrix(), swap(2).matrix()) < 1e-14);
        let m2 = moment_operator_from_integrals(1, 1, 2).unwrap();
        assert!(rel_frobenius(m2.matrix(), swap(2).matrix()) < 1e-12);
        assert!(moment_operator(3, 1, 2).is_err());
    }

    #[test]
    fn contraction_matches_dense() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(9);
        let (n, d, k) = (2, 2, 2);
        let v = crate::tensor::haar_vector(d, &mut rng);
        let vn = v.kronecker(&v);
        let psi = &vn * vn.adjoint();
        let g = moment_element(k, n, d).unwrap();
        let fast = contract_with_state(&g, &psi, n, k, d).unwrap();
        let dense = g.realize(d).unwrap();
        let full = dense.matrix() * psi.kronecker(&Mat::identity(4, 4));
        let full = Operator::new(RegisterShape::uniform(d, n + k).unwrap(), full).unwrap();
        let slow = crate::tensor::partial_trace(&full, &[2, 3]).unwrap();
        assert!(rel_frobenius(&fast, slow.matrix()) < 1e-13);
    }
}
