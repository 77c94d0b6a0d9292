//! Dense complex linear algebra over multi-register Hilbert spaces.
//!
//! Matrices are `nalgebra` dense complex matrices. Register `0` is the most
//! significant digit of a basis index, so `kron(a, b)` places `a` on register 0.

use crate::error::{Error, Result};
use crate::perm::Permutation;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicUsize, Ordering};

pub type C64 = Complex64;
pub type Mat = DMatrix<C64>;
pub type Vector = DVector<C64>;

pub const DEFAULT_DIM_CAP: usize = 10_000;
/// Tolerance of the structural predicates (`is_hermitian`, `is_psd`, …).
pub const PREDICATE_TOL: f64 = 1e-10;

static DIM_CAP: AtomicUsize = AtomicUsize::new(DEFAULT_DIM_CAP);

pub fn dim_cap() -> usize {
    DIM_CAP.load(Ordering::Relaxed)
}

pub fn set_dim_cap(cap: usize) {
    DIM_CAP.store(cap, Ordering::Relaxed);
}

pub(crate) fn check_cap(total: usize) -> Result<()> {
    let cap = dim_cap();
    if total > cap {
        Err(Error::DimensionCap { requested: total, cap })
    } else {
        Ok(())
    }
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Ordered subsystem dimensions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct RegisterShape(Vec<usize>);

impl RegisterShape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::Shape(format!("zero-dimensional register in {dims:?}")));
        }
        let total = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::Shape(format!("dimension overflow for {dims:?}")))?;
        check_cap(total)?;
        Ok(RegisterShape(dims))
    }

    /// `(ℂ^d)^⊗n`.
    pub fn uniform(d: usize, n: usize) -> Result<Self> {
        Self::new(vec![d; n])
    }

    /// `(ℂ^d ⊗ ℂ^r)^⊗n` in the interleaved layout `A_1 B_1 … A_n B_n`.
    pub fn interleaved(d: usize, r: usize, n: usize) -> Result<Self> {
        Self::new((0..n).flat_map(|_| [d, r]).collect())
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> usize {
        self.0.iter().product()
    }

    pub fn concat(&self, other: &RegisterShape) -> Result<Self> {
        let mut dims = self.0.clone();
        dims.extend_from_slice(&other.0);
        Self::new(dims)
    }

    /// Mixed-radix digits of a basis index, register 0 first.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.len()];
        for (slot, &d) in out.iter_mut().zip(&self.0).rev() {
            *slot = index % d;
            index /= d;
        }
        out
    }

    pub fn index(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.0).fold(0, |acc, (&x, &d)| acc * d + x)
    }
}

impl TryFrom<Vec<usize>> for RegisterShape {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        RegisterShape::new(v)
    }
}

impl From<RegisterShape> for Vec<usize> {
    fn from(s: RegisterShape) -> Vec<usize> {
        s.0
    }
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and the
/// matching orthonormal eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: Mat,
}

impl HermitianEigen {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Reassembles `Σ f(λ_i) v_i v_i†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Mat {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, &v) in self.values.iter().enumerate() {
            let s = re(f(v));
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        &scaled * self.vectors.adjoint()
    }
}

/// Hermitian eigensolver for a square matrix assumed Hermitian; the input is
/// symmetrized first so round-off asymmetry does not leak into the result.
pub fn eigh(m: &Mat) -> HermitianEigen {
    let herm = (m + m.adjoint()) * re(0.5);
    let eig = nalgebra::linalg::SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = Mat::from_fn(m.nrows(), m.ncols(), |i, j| eig.eigenvectors[(i, order[j])]);
    HermitianEigen { values, vectors }
}

pub fn frobenius(m: &Mat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖a − b‖_F / max(‖b‖_F, 1)`: relative for large targets, absolute near zero.
pub fn rel_frobenius(a: &Mat, b: &Mat) -> f64 {
    frobenius(&(a - b)) / frobenius(b).max(1.0)
}

/// Basis projector `|i⟩⟨i|` as a matrix.
pub fn basis_projector(dim: usize, i: usize) -> Mat {
    let mut m = Mat::zeros(dim, dim);
    m[(i, i)] = re(1.0);
    m
}

/// A square operator on a register shape.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    shape: RegisterShape,
    mat: Mat,
}

impl Operator {
    pub fn new(shape: RegisterShape, mat: Mat) -> Result<Self> {
        let t = shape.total();
        if mat.nrows() != t || mat.ncols() != t {
            return Err(Error::Shape(format!(
                "matrix is {}x{} but shape {:?} has total dimension {t}",
                mat.nrows(),
                mat.ncols(),
                shape.dims()
            )));
        }
        Ok(Operator { shape, mat })
    }

    /// Single-register operator.
    pub fn from_matrix(mat: Mat) -> Result<Self> {
        let shape = RegisterShape::new(vec![mat.nrows()])?;
        Self::new(shape, mat)
    }

    pub fn identity(shape: RegisterShape) -> Self {
        let t = shape.total();
        Operator { shape, mat: Mat::identity(t, t) }
    }

    pub fn zeros(shape: RegisterShape) -> Self {
        let t = shape.total();
        Operator { shape, mat: Mat::zeros(t, t) }
    }

    pub fn projector(state: &PureState) -> Self {
        Operator { shape: state.shape.clone(), mat: &state.amps * state.amps.adjoint() }
    }

    pub fn shape(&self) -> &RegisterShape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &Mat {
        &self.mat
    }

    pub fn into_matrix(self) -> Mat {
        self.mat
    }

    /// Same matrix, different register bookkeeping of equal total dimension.
    pub fn with_shape(self, shape: RegisterShape) -> Result<Self> {
        Self::new(shape, self.mat)
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn dagger(&self) -> Self {
        Operator { shape: self.shape.clone(), mat: self.mat.adjoint() }
    }

    pub fn scale(&self, s: C64) -> Self {
        Operator { shape: self.shape.clone(), mat: &self.mat * s }
    }

    fn same_shape(&self, other: &Operator) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::Shape(format!("shape mismatch {:?} vs {:?}", self.shape.dims(), other.shape.dims())));
        }
        Ok(())
    }

    pub fn add(&self, other: &Operator) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Operator { shape: self.shape.clone(), mat: &self.mat + &other.mat })
    }

    pub fn sub(&self, other: &Operator) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Operator { shape: self.shape.clone(), mat: &self.mat - &other.mat })
    }

    pub fn mul(&self, other: &Operator) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Operator { shape: self.shape.clone(), mat: &self.mat * &other.mat })
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius(&self.mat)
    }

    /// Largest absolute eigenvalue of the Hermitian part.
    pub fn hermitian_norm(&self) -> f64 {
        eigh(&self.mat).max_abs()
    }

    pub fn eigh(&self) -> HermitianEigen {
        eigh(&self.mat)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        frobenius(&(&self.mat - self.mat.adjoint())) <= tol * self.frobenius_norm().max(1.0)
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        if !self.is_hermitian(tol) {
            return false;
        }
        let e = self.eigh();
        let floor = -tol * e.max_abs().max(1e-300);
        e.values.first().is_none_or(|&v| v >= floor)
    }

    pub fn is_unit_trace(&self, tol: f64) -> bool {
        (self.trace() - re(1.0)).norm() <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let n = self.dim();
        frobenius(&(self.mat.adjoint() * &self.mat - Mat::identity(n, n))) <= tol * (n as f64).sqrt()
    }

    pub fn is_projector(&self, tol: f64) -> bool {
        self.is_hermitian(tol)
            && frobenius(&(&self.mat * &self.mat - &self.mat)) <= tol * self.frobenius_norm().max(1.0)
    }

    /// Checks PSD to `−1e-10·‖A‖` and returns the matrix with negative eigenvalues clipped.
    pub fn clipped_psd(&self) -> Result<Mat> {
        let e = self.eigh();
        let floor = -PREDICATE_TOL * e.max_abs();
        if let Some(&v) = e.values.first() {
            if v < floor {
                return Err(Error::Domain(format!("operator is not PSD (min eigenvalue {v:e})")));
            }
        }
        Ok(e.map(|v| v.max(0.0)))
    }

    pub fn expectation(&self, state: &PureState) -> C64 {
        (state.amps.adjoint() * &self.mat * &state.amps)[(0, 0)]
    }
}

/// A unit vector tagged with a register shape.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    shape: RegisterShape,
    amps: Vector,
}

pub const STATE_NORM_TOL: f64 = 1e-12;

impl PureState {
    pub fn new(shape: RegisterShape, amps: Vector) -> Result<Self> {
        if amps.len() != shape.total() {
            return Err(Error::Shape(format!("{} amplitudes for shape {:?}", amps.len(), shape.dims())));
        }
        if (amps.norm() - 1.0).abs() > STATE_NORM_TOL {
            return Err(Error::Domain(format!("state norm {} is not 1", amps.norm())));
        }
        Ok(PureState { shape, amps })
    }

    /// Normalizes `amps`; fails on a (numerically) zero vector.
    pub fn normalized(shape: RegisterShape, amps: Vector) -> Result<Self> {
        let norm = amps.norm();
        if norm < 1e-300 {
            return Err(Error::Numerical("cannot normalize a zero vector".into()));
        }
        Self::new(shape, amps / re(norm))
    }

    pub fn from_vector(amps: Vector) -> Result<Self> {
        let shape = RegisterShape::new(vec![amps.len()])?;
        Self::normalized(shape, amps)
    }

    pub fn basis(shape: RegisterShape, index: usize) -> Self {
        let mut amps = Vector::zeros(shape.total());
        amps[index] = re(1.0);
        PureState { shape, amps }
    }

    pub fn shape(&self) -> &RegisterShape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &Vector {
        &self.amps
    }

    pub fn inner(&self, other: &PureState) -> C64 {
        self.amps.dotc(&other.amps)
    }

    pub fn kron(&self, other: &PureState) -> Result<PureState> {
        Ok(PureState { shape: self.shape.concat(&other.shape)?, amps: self.amps.kronecker(&other.amps) })
    }

    pub fn density(&self) -> Operator {
        Operator::projector(self)
    }

    /// `|ψ⟩^⊗n`.
    pub fn tensor_power(&self, n: usize) -> Result<PureState> {
        let mut dims = Vec::with_capacity(self.shape.len() * n);
        for _ in 0..n {
            dims.extend_from_slice(self.shape.dims());
        }
        let shape = RegisterShape::new(dims)?;
        let mut amps = Vector::from_element(1, re(1.0));
        for _ in 0..n {
            amps = amps.kronecker(&self.amps);
        }
        Ok(PureState { shape, amps })
    }
}

pub fn kron(a: &Operator, b: &Operator) -> Result<Operator> {
    let shape = a.shape.concat(&b.shape)?;
    Ok(Operator { shape, mat: a.mat.kronecker(&b.mat) })
}

/// `a^⊗n`.
pub fn tensor_power(a: &Operator, n: usize) -> Result<Operator> {
    let mut dims = Vec::with_capacity(a.shape.len() * n);
    for _ in 0..n {
        dims.extend_from_slice(a.shape.dims());
    }
    let shape = RegisterShape::new(dims)?;
    let mut mat = Mat::identity(1, 1);
    for _ in 0..n {
        mat = mat.kronecker(&a.mat);
    }
    Ok(Operator { shape, mat })
}

/// Traces out every register not listed in `keep`; kept registers retain their original order.
pub fn partial_trace(m: &Operator, keep: &[usize]) -> Result<Operator> {
    let dims = m.shape.dims();
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if let Some(&bad) = kept.iter().find(|&&k| k >= dims.len()) {
        return Err(Error::Shape(format!("register {bad} out of range for {} registers", dims.len())));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !kept.contains(i)).collect();
    let kept_shape = RegisterShape::new(kept.iter().map(|&i| dims[i]).collect())?;
    let traced_shape = RegisterShape::new(traced.iter().map(|&i| dims[i]).collect())?;
    let kt = kept_shape.total();
    let tt = traced_shape.total();

    // Group full basis indices by their traced-register multi-index.
    let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::with_capacity(kt); tt];
    for full in 0..m.shape.total() {
        let digits = m.shape.digits(full);
        let kd: Vec<usize> = kept.iter().map(|&i| digits[i]).collect();
        let td: Vec<usize> = traced.iter().map(|&i| digits[i]).collect();
        groups[traced_shape.index(&td)].push((kept_shape.index(&kd), full));
    }
    let mut out = Mat::zeros(kt, kt);
    for group in &groups {
        for &(ki, fi) in group {
            for &(kj, fj) in group {
                out[(ki, kj)] += m.mat[(fi, fj)];
            }
        }
    }
    Operator::new(kept_shape, out)
}

/// Basis-index map of the register permutation that moves register `j` to slot `pi(j)`:
/// entry `i` is the image of basis index `i`. The output shape has `dims'[pi(j)] = dims[j]`.
pub fn register_permutation_map(dims: &[usize], pi: &Permutation) -> Result<(RegisterShape, Vec<usize>)> {
    if dims.len() != pi.len() {
        return Err(Error::Shape(format!("permutation of {} letters on {} registers", pi.len(), dims.len())));
    }
    let in_shape = RegisterShape::new(dims.to_vec())?;
    let mut out_dims = vec![0; dims.len()];
    for (j, &d) in dims.iter().enumerate() {
        out_dims[pi.apply(j)] = d;
    }
    let out_shape = RegisterShape::new(out_dims)?;
    let mut map = Vec::with_capacity(in_shape.total());
    let mut out_digits = vec![0; dims.len()];
    for i in 0..in_shape.total() {
        let digits = in_shape.digits(i);
        for (j, &x) in digits.iter().enumerate() {
            out_digits[pi.apply(j)] = x;
        }
        map.push(out_shape.index(&out_digits));
    }
    Ok((out_shape, map))
}

/// The permutation operator `P(π)` on `(ℂ^d)^⊗n`:
/// `|i_1 … i_n⟩ ↦ |i_{π⁻¹(1)} … i_{π⁻¹(n)}⟩`.
pub fn permutation_operator(pi: &Permutation, d: usize) -> Result<Operator> {
    let (shape, map) = register_permutation_map(&vec![d; pi.len()], pi)?;
    let t = shape.total();
    let mut mat = Mat::zeros(t, t);
    for (i, &j) in map.iter().enumerate() {
        mat[(j, i)] = re(1.0);
    }
    Operator::new(shape, mat)
}

/// `P m P†` for the register permutation `pi`, with the permuted shape.
pub fn permute_registers(m: &Operator, pi: &Permutation) -> Result<Operator> {
    let (shape, map) = register_permutation_map(m.shape.dims(), pi)?;
    let t = shape.total();
    let mut out = Mat::zeros(t, t);
    for (i, &pi_i) in map.iter().enumerate() {
        for (j, &pj) in map.iter().enumerate() {
            out[(pi_i, pj)] = m.mat[(i, j)];
        }
    }
    Operator::new(shape, out)
}

pub fn permute_state_registers(v: &PureState, pi: &Permutation) -> Result<PureState> {
    let (shape, map) = register_permutation_map(v.shape.dims(), pi)?;
    let mut out = Vector::zeros(shape.total());
    for (i, &j) in map.iter().enumerate() {
        out[j] = v.amps[i];
    }
    PureState::new(shape, out)
}

/// Register permutation taking `A_1 B_1 … A_n B_n` to `A_1 … A_n B_1 … B_n`.
pub fn regroup_permutation(n: usize) -> Permutation {
    let mut images = vec![0; 2 * n];
    for i in 0..n {
        images[2 * i] = i;
        images[2 * i + 1] = n + i;
    }
    Permutation::from_images(images).expect("valid regroup permutation")
}

/// Converts an operator from the interleaved layout to the grouped layout.
pub fn regroup(m: &Operator) -> Result<Operator> {
    let n = m.shape.len() / 2;
    if m.shape.len() != 2 * n {
        return Err(Error::Shape("regroup needs an even number of registers".into()));
    }
    permute_registers(m, &regroup_permutation(n))
}

/// Inverse of [`regroup`].
pub fn interleave(m: &Operator) -> Result<Operator> {
    let n = m.shape.len() / 2;
    if m.shape.len() != 2 * n {
        return Err(Error::Shape("interleave needs an even number of registers".into()));
    }
    permute_registers(m, &regroup_permutation(n).inverse())
}

fn check_density(m: &Operator, name: &str) -> Result<Mat> {
    if !m.is_unit_trace(1e-8) {
        return Err(Error::Domain(format!("{name} does not have unit trace")));
    }
    m.clipped_psd()
}

/// Eigenvalues within `dim·ε·max` of zero are indistinguishable from round-off.
fn round_off_floor(values: &[f64]) -> f64 {
    let top = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    values.len() as f64 * f64::EPSILON * top
}

/// Square root of a PSD matrix; eigenvalues at round-off level are treated as zero.
pub fn sqrt_psd(m: &Mat) -> Mat {
    let eig = eigh(m);
    let floor = round_off_floor(&eig.values);
    eig.map(|v| if v > floor { v.sqrt() } else { 0.0 })
}

/// `F(ρ, σ) = ‖√ρ √σ‖_1²`.
pub fn fidelity(rho: &Operator, sigma: &Operator) -> Result<f64> {
    rho.same_shape(sigma)?;
    let a = check_density(rho, "rho")?;
    let b = check_density(sigma, "sigma")?;
    let s = sqrt_psd(&a);
    let inner = &s * b * &s;
    let values = eigh(&inner).values;
    let floor = round_off_floor(&values);
    let root_trace: f64 = values.iter().filter(|&&v| v > floor).map(|v| v.sqrt()).sum();
    Ok((root_trace * root_trace).clamp(0.0, 1.0))
}

/// `½‖ρ − σ‖_1` for Hermitian inputs.
pub fn trace_distance(rho: &Operator, sigma: &Operator) -> Result<f64> {
    let diff = rho.sub(sigma)?;
    Ok(0.5 * diff.eigh().values.iter().map(|v| v.abs()).sum::<f64>())
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    c(a, b) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix of i.i.d. unit-variance complex Gaussians.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Mat {
    Mat::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

pub fn haar_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vector {
    loop {
        let v = Vector::from_fn(d, |_, _| complex_gaussian(rng));
        let norm = v.norm();
        if norm > 1e-150 {
            return v / re(norm);
        }
    }
}

pub fn haar_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<PureState> {
    let shape = RegisterShape::new(vec![d])?;
    PureState::new(shape, haar_vector(d, rng))
}

/// Haar unitary matrix: QR of a Ginibre matrix with the phases of diag(R) moved into Q.
pub fn haar_unitary_matrix<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Mat {
    let z = ginibre(d, d, rng);
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let diag = r[(j, j)];
        let phase = if diag.norm() > 0.0 { diag / diag.norm() } else { re(1.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Operator> {
    Operator::from_matrix(haar_unitary_matrix(d, rng))
}

/// `(G + G†)/2` with `G` Ginibre.
pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Mat {
    let g = ginibre(d, d, rng);
    (&g + g.adjoint()) * re(0.5)
}

/// A random density matrix of the given rank: `G G† / tr(G G†)` with `G` a `d × rank` Ginibre matrix.
pub fn random_density<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> Result<Operator> {
    if rank == 0 || rank > d {
        return Err(Error::Domain(format!("rank {rank} impossible in dimension {d}")));
    }
    let g = ginibre(d, rank, rng);
    let m = &g * g.adjoint();
    let t = m.trace();
    Operator::from_matrix(m / t)
}

/// SWAP on `ℂ^d ⊗ ℂ^d`.
pub fn swap(d: usize) -> Operator {
    permutation_operator(&Permutation::transposition(2, 0, 1), d).expect("small swap")
}

#[derive(Serialize, Deserialize)]
struct OperatorJson {
    shape: Vec<usize>,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for Operator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let t = self.dim();
        let mut r = Vec::with_capacity(t * t);
        let mut i = Vec::with_capacity(t * t);
        for row in 0..t {
            for col in 0..t {
                let z = self.mat[(row, col)];
                r.push(z.re);
                i.push(z.im);
            }
        }
        OperatorJson { shape: self.shape.dims().to_vec(), re: r, im: i }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Operator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = OperatorJson::deserialize(d)?;
        let shape = RegisterShape::new(j.shape).map_err(D::Error::custom)?;
        let t = shape.total();
        if j.re.len() != t * t || j.im.len() != t * t {
            return Err(D::Error::custom(format!("expected {} entries", t * t)));
        }
        let mat = Mat::from_fn(t, t, |r, col| c(j.re[r * t + col], j.im[r * t + col]));
        Operator::new(shape, mat).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn pauli_x() -> Operator {
        Operator::from_matrix(Mat::from_row_slice(2, 2, &[re(0.0), re(1.0), re(1.0), re(0.0)])).unwrap()
    }

    #[test]
    fn kron_identities_and_basis() {
        let i2 = Operator::identity(RegisterShape::new(vec![2]).unwrap());
        let i4 = kron(&i2, &i2).unwrap();
        assert_eq!(i4.matrix(), &Mat::identity(4, 4));
        assert_eq!(i4.shape().dims(), &[2, 2]);
        let p0 = Operator::from_matrix(basis_projector(2, 0)).unwrap();
        let p1 = Operator::from_matrix(basis_projector(2, 1)).unwrap();
        assert_eq!(kron(&p0, &p1).unwrap().matrix(), &basis_projector(4, 1));
    }

    #[test]
    fn kron_xx_flips_both_qubits() {
        let xx = kron(&pauli_x(), &pauli_x()).unwrap();
        let v = xx.matrix() * Vector::from_vec(vec![re(1.0), re(0.0), re(0.0), re(0.0)]);
        assert_eq!(v, Vector::from_vec(vec![re(0.0), re(0.0), re(0.0), re(1.0)]));
    }

    #[test]
    fn partial_trace_examples() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let rho = random_density(2, 2, &mut rng).unwrap();
        let sigma = random_density(3, 2, &mut rng).unwrap();
        let pt = partial_trace(&kron(&rho, &sigma).unwrap(), &[0]).unwrap();
        assert!(rel_frobenius(pt.matrix(), rho.matrix()) < 1e-12);
        let pt1 = partial_trace(&kron(&rho, &sigma).unwrap(), &[1]).unwrap();
        assert!(rel_frobenius(pt1.matrix(), sigma.matrix()) < 1e-12);

        let epr = PureState::from_vector(Vector::from_vec(vec![re(1.0), re(0.0), re(0.0), re(1.0)]))
            .unwrap()
            .density()
            .with_shape(RegisterShape::new(vec![2, 2]).unwrap())
            .unwrap();
        let red = partial_trace(&epr, &[0]).unwrap();
        assert!(rel_frobenius(red.matrix(), &(Mat::identity(2, 2) * re(0.5))) < 1e-12);

        // SWAP reduced by a brute-force entry loop.
        for d in 1..4 {
            let s = swap(d);
            let mut brute = Mat::zeros(d, d);
            for a in 0..d {
                for b in 0..d {
                    for j in 0..d {
                        brute[(a, b)] += s.matrix()[(a * d + j, b * d + j)];
                    }
                }
            }
            let pt = partial_trace(&s, &[0]).unwrap();
            assert_eq!(pt.matrix(), &brute);
            assert_eq!(pt.matrix(), &Mat::identity(d, d));
        }
        assert!(partial_trace(&epr, &[2]).is_err());
    }

    #[test]
    fn permutation_operator_basics() {
        let id = permutation_operator(&Permutation::identity(3), 2).unwrap();
        assert_eq!(id.matrix(), &Mat::identity(8, 8));
        let s = permutation_operator(&Permutation::transposition(2, 0, 1), 2).unwrap();
        let mut expected = Mat::zeros(4, 4);
        for (i, j) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            expected[(i, j)] = re(1.0);
        }
        assert_eq!(s.matrix(), &expected);
        // |i1 i2 i3⟩ ↦ |i_{π⁻¹(1)} i_{π⁻¹(2)} i_{π⁻¹(3)}⟩ for the 3-cycle 0→1→2→0.
        let pi = Permutation::from_images(vec![1, 2, 0]).unwrap();
        let p = permutation_operator(&pi, 3).unwrap();
        let shape = RegisterShape::uniform(3, 3).unwrap();
        let inv = pi.inverse();
        for idx in 0..27 {
            let digits = shape.digits(idx);
            let out: Vec<usize> = (0..3).map(|k| digits[inv.apply(k)]).collect();
            assert_eq!(p.matrix()[(shape.index(&out), idx)], re(1.0));
        }
    }

    #[test]
    fn interleaved_permutation_factorizes() {
        // P_{AB}(π) = P_A(π) ⊗ P_B(π) after regrouping.
        for n in [2usize, 3] {
            for pi in Permutation::all(n) {
                let pa = permutation_operator(&pi, 2).unwrap();
                let pb = permutation_operator(&pi, 2).unwrap();
                let grouped = kron(&pa, &pb).unwrap();
                let pab = permutation_operator(&pi, 4).unwrap();
                let pab = pab.with_shape(RegisterShape::interleaved(2, 2, n).unwrap()).unwrap();
                let regrouped = regroup(&pab).unwrap();
                assert_eq!(regrouped.matrix(), grouped.matrix());
            }
        }
    }

    #[test]
    fn regroup_round_trip() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let m = Operator::new(RegisterShape::interleaved(2, 3, 2).unwrap(), ginibre(36, 36, &mut rng)).unwrap();
        let g = regroup(&m).unwrap();
        assert_eq!(g.shape().dims(), &[2, 2, 3, 3]);
        assert_eq!(interleave(&g).unwrap(), m);
    }

    #[test]
    fn fidelity_examples() {
        let p0 = Operator::from_matrix(basis_projector(2, 0)).unwrap();
        let p1 = Operator::from_matrix(basis_projector(2, 1)).unwrap();
        let mixed = Operator::from_matrix(Mat::identity(2, 2) * re(0.5)).unwrap();
        assert!((fidelity(&p0, &p0).unwrap() - 1.0).abs() < 1e-12);
        assert!(fidelity(&p0, &p1).unwrap().abs() < 1e-12);
        assert!((fidelity(&mixed, &p0).unwrap() - 0.5).abs() < 1e-12);
        let bad = Operator::from_matrix(Mat::from_diagonal(&Vector::from_vec(vec![re(1.5), re(-0.5)]))).unwrap();
        assert!(fidelity(&bad, &p0).is_err());
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for d in 1..6 {
            let u = haar_unitary(d, &mut rng).unwrap();
            assert!(u.is_unitary(1e-10));
        }
        let u1 = haar_unitary(1, &mut rng).unwrap();
        assert!((u1.matrix()[(0, 0)].norm() - 1.0).abs() < 1e-12);
        assert!((haar_state(1, &mut rng).unwrap().amplitudes()[0].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn operator_json_round_trip() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let rho = random_density(3, 2, &mut rng).unwrap();
        let s = serde_json::to_string(&rho).unwrap();
        let back: Operator = serde_json::from_str(&s).unwrap();
        assert_eq!(back, rho);
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["re"].as_array().unwrap().len(), 9);
        assert_eq!(v["re"][1].as_f64().unwrap(), rho.matrix()[(0, 1)].re);
    }

    #[test]
    fn dimension_cap_enforced() {
        assert!(matches!(RegisterShape::uniform(10, 5), Err(Error::DimensionCap { .. })));
    }
}
