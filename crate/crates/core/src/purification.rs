//! Random purification: fixed and Haar-random purifications, the purification
//! channel on `(ℂ^d)^⊗n` in exact and trajectory form, its Kraus operators and
//! quasi-purification of a single Schur block.
//!
//! Output operators live on `(ℂ^d ⊗ ℂ^r)^⊗n` in the interleaved layout
//! `A_1 B_1 … A_n B_n`.

use crate::error::{Error, Result};
use crate::schur::{SchurDecomposition, YoungDiagram, YoungRep};
use crate::tensor::{
    frobenius, haar_unitary_matrix, interleave, re, register_permutation_map, regroup_permutation, Mat, Operator,
    PureState, RegisterShape, Vector,
};
use rand::Rng;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Numerical-rank threshold, relative to the largest eigenvalue.
pub const RANK_TOL: f64 = 1e-10;

/// Mass allowed on Schur blocks the channel cannot purify into.
pub const TRUNCATION_TOL: f64 = 1e-9;

fn check_density(rho: &Operator) -> Result<()> {
    if !rho.is_hermitian(1e-9) || !rho.is_psd(1e-9) || !rho.is_unit_trace(1e-9) {
        return Err(Error::Domain("input is not a density matrix".into()));
    }
    Ok(())
}

pub fn numerical_rank(rho: &Operator) -> usize {
    let eig = rho.eigh();
    let top = eig.max_abs();
    eig.values.iter().filter(|&&v| v > RANK_TOL * top.max(f64::MIN_POSITIVE)).count()
}

/// `|ρ₀⟩ = Σ_i √α_i |v_i⟩|i⟩` with eigenvalues in descending order.
pub fn purify_state(rho: &Operator, r: usize) -> Result<PureState> {
    check_density(rho)?;
    let rank = numerical_rank(rho);
    if r < rank {
        return Err(Error::Domain(format!("purification rank {r} below the state rank {rank}")));
    }
    let d = rho.dim();
    let eig = rho.eigh();
    let mut amps = Vector::zeros(d * r);
    for (slot, idx) in (0..d).rev().take(r).enumerate() {
        let w = eig.values[idx].max(0.0).sqrt();
        for a in 0..d {
            amps[a * r + slot] = eig.vectors[(a, idx)] * re(w);
        }
    }
    PureState::normalized(RegisterShape::new(vec![d, r])?, amps)
}

/// `(I_d ⊗ U)|ρ₀⟩` with `U` Haar on `U(r)`.
pub fn random_purification<R: Rng + ?Sized>(rho: &Operator, r: usize, rng: &mut R) -> Result<PureState> {
    let fixed = purify_state(rho, r)?;
    let u = haar_unitary_matrix(r, rng);
    let d = rho.dim();
    let op = Mat::identity(d, d).kronecker(&u);
    PureState::normalized(fixed.shape().clone(), op * fixed.amplitudes())
}

/// `(1/√dim λ) Σ_S |S⟩|S⟩` on two Specht registers.
#[derive(Clone, Debug)]
pub struct EprSpecht {
    pub lambda: YoungDiagram,
    pub vector: Vector,
}

impl EprSpecht {
    pub fn new(lambda: YoungDiagram) -> Self {
        let dim = lambda.specht_dim() as usize;
        let mut vector = Vector::zeros(dim * dim);
        let w = 1.0 / (dim as f64).sqrt();
        for s in 0..dim {
            vector[s * dim + s] = re(w);
        }
        EprSpecht { lambda, vector }
    }

    /// `‖(κ(π) ⊗ κ(π))|EPR⟩ − |EPR⟩‖` maximized over `S_n`.
    pub fn invariance_residual(&self) -> Result<f64> {
        let rep = YoungRep::new(self.lambda.clone());
        let mut worst: f64 = 0.0;
        for pi in crate::perm::Permutation::all(self.lambda.n()) {
            let k = rep.matrix(&pi)?.map(re);
            let moved = k.kronecker(&k) * &self.vector;
            worst = worst.max((moved - &self.vector).norm());
        }
        Ok(worst)
    }
}

/// One `λ` block of the double Schur basis of `(ℂ^d ⊗ ℂ^r)^⊗n`.
#[derive(Clone, Debug)]
pub struct DoubleSchurBlock {
    pub lambda: YoungDiagram,
    pub specht_dim: usize,
    pub weyl_dim_d: usize,
    pub weyl_dim_r: usize,
    /// `(dr)^n × (weyl_dim_d·weyl_dim_r)` isometry; column `(q, q′)` is the image of
    /// `|λλ⟩|EPR_λ⟩|q⟩|q′⟩` in the interleaved computational basis.
    pub isometry: Mat,
}

impl DoubleSchurBlock {
    /// Columns of the isometry with a fixed `q′`.
    pub fn columns_for_purifier(&self, qp: usize) -> Mat {
        let cols: Vec<usize> = (0..self.weyl_dim_d).map(|q| q * self.weyl_dim_r + qp).collect();
        Mat::from_fn(self.isometry.nrows(), cols.len(), |i, j| self.isometry[(i, cols[j])])
    }
}

/// The pair of Schur transforms on `(ℂ^d)^⊗n` and `(ℂ^r)^⊗n` and the blocks of
/// their tensor product that meet the symmetric subspace of `(ℂ^d ⊗ ℂ^r)^⊗n`.
#[derive(Clone, Debug)]
pub struct DoubleSchur {
    n: usize,
    d: usize,
    r: usize,
    sd_d: Arc<SchurDecomposition>,
    sd_r: Arc<SchurDecomposition>,
    blocks: Vec<DoubleSchurBlock>,
}

impl DoubleSchur {
    pub fn new(sd_d: Arc<SchurDecomposition>, sd_r: Arc<SchurDecomposition>) -> Result<Self> {
        let n = sd_d.n();
        if sd_r.n() != n {
            return Err(Error::Shape("Schur transforms on different numbers of copies".into()));
        }
        let (d, r) = (sd_d.d(), sd_r.d());
        crate::tensor::check_cap((d * r).checked_pow(n as u32).unwrap_or(usize::MAX))?;
        let mut grouped_dims = vec![d; n];
        grouped_dims.extend(std::iter::repeat_n(r, n));
        let (_, to_interleaved) = register_permutation_map(&grouped_dims, &regroup_permutation(n).inverse())?;
        let mut blocks = Vec::new();
        for bd in sd_d.blocks() {
            let Some(br) = sd_r.block(&bd.lambda) else { continue };
            let specht = bd.specht_dim();
            let scale = re(1.0 / (specht as f64).sqrt());
            let mut grouped = Mat::zeros(d.pow(n as u32) * r.pow(n as u32), bd.weyl_dim * br.weyl_dim);
            for (wd, wr) in bd.sectors.iter().zip(&br.sectors) {
                grouped += wd.kronecker(wr);
            }
            let mut isometry = Mat::zeros(grouped.nrows(), grouped.ncols());
            for (i, &j) in to_interleaved.iter().enumerate() {
                isometry.row_mut(j).copy_from(&grouped.row(i));
            }
            isometry *= scale;
            blocks.push(DoubleSchurBlock {
                lambda: bd.lambda.clone(),
                specht_dim: specht,
                weyl_dim_d: bd.weyl_dim,
                weyl_dim_r: br.weyl_dim,
                isometry,
            });
        }
        Ok(DoubleSchur { n, d, r, sd_d, sd_r, blocks })
    }

    /// Process-wide memoized instance built on the cached Schur transforms.
    pub fn cached(n: usize, d: usize, r: usize) -> Result<Arc<Self>> {
        type Memo = Mutex<HashMap<(usize, usize, usize), Arc<DoubleSchur>>>;
        static MEMO: OnceLock<Memo> = OnceLock::new();
        let memo = MEMO.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(ds) = memo.lock().expect("double Schur memo poisoned").get(&(n, d, r)) {
            return Ok(ds.clone());
        }
        let ds = Arc::new(Self::new(SchurDecomposition::cached(n, d)?, SchurDecomposition::cached(n, r)?)?);
        memo.lock().expect("double Schur memo poisoned").insert((n, d, r), ds.clone());
        Ok(ds)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn schur_d(&self) -> &SchurDecomposition {
        &self.sd_d
    }

    pub fn schur_r(&self) -> &SchurDecomposition {
        &self.sd_r
    }

    pub fn blocks(&self) -> &[DoubleSchurBlock] {
        &self.blocks
    }

    pub fn block(&self, lambda: &YoungDiagram) -> Option<&DoubleSchurBlock> {
        self.blocks.iter().find(|b| &b.lambda == lambda)
    }

    pub fn output_shape(&self) -> Result<RegisterShape> {
        RegisterShape::interleaved(self.d, self.r, self.n)
    }

    /// `Σ_λ V_λ V_λ†`, which should be `Π_sym^{n, dr}`.
    pub fn symmetric_projector(&self) -> Mat {
        let dim = (self.d * self.r).pow(self.n as u32);
        let mut out = Mat::zeros(dim, dim);
        for b in &self.blocks {
            out += &b.isometry * b.isometry.adjoint();
        }
        out
    }

    /// Entrywise distance between `(U^d ⊗ U^r) Π_sym (U^d ⊗ U^r)†` and
    /// `Σ_{ℓ(λ)≤r} |λλ⟩⟨λλ| ⊗ |EPR_λ⟩⟨EPR_λ| ⊗ I`, with `Π_sym` built from permutations.
    pub fn projector_identity_residual(&self) -> Result<f64> {
        let dd = self.d * self.r;
        let sym = crate::symmetric::sym_projector(self.n, dd)?;
        let grouped = crate::tensor::regroup(&sym.with_shape(self.output_shape()?)?)?;
        let u = self.sd_d.unitary().kronecker(&self.sd_r.unitary());
        let conj = &u * grouped.matrix() * u.adjoint();

        // Schur labels of each basis index of the two factors.
        let labels = |sd: &SchurDecomposition| -> Vec<(usize, usize, usize)> {
            let mut out = Vec::new();
            for (bi, b) in sd.blocks().iter().enumerate() {
                for s in 0..b.specht_dim() {
                    for q in 0..b.weyl_dim {
                        out.push((bi, s, q));
                    }
                }
            }
            out
        };
        let ld = labels(&self.sd_d);
        let lr = labels(&self.sd_r);
        let name_d: Vec<&YoungDiagram> = self.sd_d.blocks().iter().map(|b| &b.lambda).collect();
        let name_r: Vec<&YoungDiagram> = self.sd_r.blocks().iter().map(|b| &b.lambda).collect();
        let dr = lr.len();
        let mut expected = Mat::zeros(conj.nrows(), conj.ncols());
        for (i, &(bi, s, q)) in ld.iter().enumerate() {
            for (ip, &(bip, sp, qp)) in lr.iter().enumerate() {
                if name_d[bi] != name_r[bip] || s != sp {
                    continue;
                }
                let dim = self.sd_d.blocks()[bi].specht_dim() as f64;
                for (j, &(bj, t, q2)) in ld.iter().enumerate() {
                    if bj != bi || q2 != q {
                        continue;
                    }
                    // Column partner in the r factor: same block, tableau t, same q′.
                    let jp = lr.iter().position(|&(b2, t2, q2p)| b2 == bip && t2 == t && q2p == qp);
                    if let Some(jp) = jp {
                        expected[(i * dr + ip, j * dr + jp)] = re(1.0 / dim);
                    }
                }
            }
        }
        Ok(frobenius(&(conj - expected)))
    }

    fn check_support(&self, probs: &[(YoungDiagram, f64)]) -> Result<()> {
        let lost: f64 = probs.iter().filter(|(l, _)| l.length() > self.r).map(|(_, p)| p).sum();
        if lost > TRUNCATION_TOL {
            return Err(Error::Domain(format!(
                "input has mass {lost:.3e} on Schur blocks with more than {} rows",
                self.r
            )));
        }
        Ok(())
    }

    /// `Σ_S W_S† ψ W_S`, the Weyl-register marginal of the `λ` block (trace = block weight).
    fn weyl_marginal(&self, lambda: &YoungDiagram, state: &Mat) -> Result<Mat> {
        let b = self.sd_d.block(lambda).ok_or_else(|| Error::Domain(format!("no block {lambda}")))?;
        let mut out = Mat::zeros(b.weyl_dim, b.weyl_dim);
        for w in &b.sectors {
            out += w.adjoint() * state * w;
        }
        Ok(out)
    }

    /// `V_λ (Y ⊗ I/dimV_r) V_λ†`.
    fn lift(&self, block: &DoubleSchurBlock, weyl: &Mat) -> Mat {
        let id = Mat::identity(block.weyl_dim_r, block.weyl_dim_r) * re(1.0 / block.weyl_dim_r as f64);
        &block.isometry * weyl.kronecker(&id) * block.isometry.adjoint()
    }

    /// Exact channel output: the dephased sum over every admissible `λ`.
    pub fn apply(&self, state: &Operator) -> Result<Operator> {
        self.check_input(state)?;
        let probs = self.sd_d.block_probabilities(state.matrix())?;
        self.check_support(&probs)?;
        let dim = (self.d * self.r).pow(self.n as u32);
        let mut out = Mat::zeros(dim, dim);
        for b in &self.blocks {
            let y = self.weyl_marginal(&b.lambda, state.matrix())?;
            out += self.lift(b, &y);
        }
        Operator::new(self.output_shape()?, out)
    }

    /// One trajectory: samples `λ` and returns the normalized branch output.
    pub fn sample<R: Rng + ?Sized>(&self, state: &Operator, rng: &mut R) -> Result<(YoungDiagram, Operator)> {
        self.check_input(state)?;
        let probs = self.sd_d.block_probabilities(state.matrix())?;
        self.check_support(&probs)?;
        let lambda = sample_label(&probs, rng)?;
        let b = self.block(&lambda).expect("admissible blocks are present");
        let y = self.weyl_marginal(&lambda, state.matrix())?;
        let weight = y.trace().re;
        let out = self.lift(b, &(y / re(weight)));
        Ok((lambda, Operator::new(self.output_shape()?, out)?))
    }

    fn check_input(&self, state: &Operator) -> Result<()> {
        if state.dim() != self.d.pow(self.n as u32) {
            return Err(Error::Shape(format!(
                "state of dimension {} for d^n = {}",
                state.dim(),
                self.d.pow(self.n as u32)
            )));
        }
        if !state.is_unit_trace(1e-9) || !state.is_psd(1e-9) {
            return Err(Error::Domain("channel input is not a density matrix".into()));
        }
        Ok(())
    }

    /// `Σ_λ dim(λ) · V_λ (ν_λ(ρ) ⊗ I/dimV_r) V_λ†` for a single-copy state `ρ`.
    pub fn final_formula(&self, rho: &Operator) -> Result<Operator> {
        let dim = (self.d * self.r).pow(self.n as u32);
        let mut out = Mat::zeros(dim, dim);
        for b in &self.blocks {
            let nu = self.sd_d.weyl_block(&b.lambda, rho)?;
            out += self.lift(b, &(nu * re(b.specht_dim as f64)));
        }
        Operator::new(self.output_shape()?, out)
    }

    /// Kraus operators `K_{λST}` in the computational bases, `(dr)^n × d^n`, ordered by `(S, T)`.
    pub fn kraus_operators(&self, lambda: &YoungDiagram) -> Result<Vec<Mat>> {
        if lambda.length() > self.r {
            return Err(Error::Domain(format!("{lambda} has more than {} rows", self.r)));
        }
        let b = self.block(lambda).ok_or_else(|| Error::Domain(format!("no block {lambda}")))?;
        let sb = self.sd_d.block(lambda).expect("block present in both transforms");
        let norm = re(1.0 / (b.weyl_dim_r as f64).sqrt());
        let mut out = Vec::with_capacity(b.specht_dim * b.weyl_dim_r);
        for w in &sb.sectors {
            for t in 0..b.weyl_dim_r {
                out.push(b.columns_for_purifier(t) * w.adjoint() * norm);
            }
        }
        Ok(out)
    }

    /// `‖Σ K†K − Π_λ‖_F`.
    pub fn kraus_completeness_residual(&self, lambda: &YoungDiagram) -> Result<f64> {
        let ks = self.kraus_operators(lambda)?;
        let dim = self.d.pow(self.n as u32);
        let mut sum = Mat::zeros(dim, dim);
        for k in &ks {
            sum += k.adjoint() * k;
        }
        let proj = self.sd_d.block(lambda).expect("block exists").projector();
        Ok(frobenius(&(sum - proj)))
    }

    /// Channel action through the Kraus sum, for cross-checking [`Self::apply`].
    pub fn apply_kraus(&self, state: &Operator) -> Result<Operator> {
        self.check_input(state)?;
        let dim = (self.d * self.r).pow(self.n as u32);
        let mut out = Mat::zeros(dim, dim);
        for b in &self.blocks {
            for k in self.kraus_operators(&b.lambda)? {
                out += &k * state.matrix() * k.adjoint();
            }
        }
        Operator::new(self.output_shape()?, out)
    }
}

fn sample_label<R: Rng + ?Sized>(probs: &[(YoungDiagram, f64)], rng: &mut R) -> Result<YoungDiagram> {
    let total: f64 = probs.iter().map(|(_, p)| p.max(0.0)).sum();
    if total <= 0.0 {
        return Err(Error::Numerical("no Schur block carries weight".into()));
    }
    let mut u = rng.random::<f64>() * total;
    for (l, p) in probs {
        let p = p.max(0.0);
        if u < p {
            return Ok(l.clone());
        }
        u -= p;
    }
    Ok(probs.iter().rev().find(|(_, p)| *p > 0.0).expect("positive total").0.clone())
}

/// Output of quasi-purification on one Schur block: `|λλ⟩⟨λλ| ⊗ |EPR_λ⟩⟨EPR_λ| ⊗ Y ⊗ I/dimV(λ, ℓ(λ))`.
#[derive(Clone, Debug)]
pub struct PurifiedBlockState {
    pub lambda: YoungDiagram,
    /// Purification rank, `ℓ(λ)`.
    pub rank: usize,
    pub epr: EprSpecht,
    /// Unit-trace Weyl-register state `Y` on `V^d_λ`.
    pub weyl: Mat,
    pub purifier_dim: usize,
}

impl PurifiedBlockState {
    /// Operator over `P ⊗ P′ ⊗ Q ⊗ Q′` (the `Y` labels are implicit).
    pub fn operator(&self) -> Mat {
        let epr = &self.epr.vector * self.epr.vector.adjoint();
        let id = Mat::identity(self.purifier_dim, self.purifier_dim) * re(1.0 / self.purifier_dim as f64);
        epr.kronecker(&self.weyl).kronecker(&id)
    }

    /// `tr_{P′Q′}`, an operator on `P ⊗ Q`.
    pub fn reduced(&self) -> Mat {
        let s = self.epr.lambda.specht_dim() as usize;
        (Mat::identity(s, s) * re(1.0 / s as f64)).kronecker(&self.weyl)
    }

    /// The state on `(ℂ^d ⊗ ℂ^ℓ)^⊗n` in the interleaved computational basis.
    pub fn to_computational(&self, ds: &DoubleSchur) -> Result<Operator> {
        let b = self.double_block(ds)?;
        Operator::new(ds.output_shape()?, ds.lift(b, &self.weyl))
    }

    /// Eigen-decomposition of [`Self::to_computational`] read off the block structure:
    /// eigenvalues `y_i / dimV_r` with eigenvectors `V_λ(e_i ⊗ f_j)`. Zero eigenvalues are dropped.
    pub fn spectrum(&self, ds: &DoubleSchur) -> Result<(Vec<f64>, Mat)> {
        let b = self.double_block(ds)?;
        let eig = crate::tensor::eigh(&self.weyl);
        let keep: Vec<usize> = (0..eig.values.len()).filter(|&i| eig.values[i] > RANK_TOL * eig.max_abs()).collect();
        let wr = b.weyl_dim_r;
        let mut values = Vec::with_capacity(keep.len() * wr);
        let mut coeffs = Mat::zeros(b.weyl_dim_d * wr, keep.len() * wr);
        for (col, &i) in keep.iter().enumerate() {
            for j in 0..wr {
                values.push(eig.values[i] / wr as f64);
                for q in 0..b.weyl_dim_d {
                    coeffs[(q * wr + j, col * wr + j)] = eig.vectors[(q, i)];
                }
            }
        }
        Ok((values, &b.isometry * coeffs))
    }

    fn double_block<'a>(&self, ds: &'a DoubleSchur) -> Result<&'a DoubleSchurBlock> {
        if ds.r() != self.rank {
            return Err(Error::Shape(format!("double Schur of rank {} for a rank-{} purification", ds.r(), self.rank)));
        }
        ds.block(&self.lambda).ok_or_else(|| Error::Domain(format!("no block {}", self.lambda)))
    }
}

/// Purifies a collapsed block state at rank `ℓ(λ)`. `block_state` is in Schur
/// coordinates over (Specht, Weyl), as returned by weak Schur sampling.
pub fn quasi_purify(block_state: &Operator, lambda: &YoungDiagram) -> Result<PurifiedBlockState> {
    let dims = block_state.shape().dims();
    let specht = lambda.specht_dim() as usize;
    if dims.len() != 2 || dims[0] != specht {
        return Err(Error::Shape(format!("block state shape {dims:?} does not match {lambda}")));
    }
    let weyl = crate::tensor::partial_trace(block_state, &[1])?.into_matrix();
    let tr = weyl.trace().re;
    if (tr - 1.0).abs() > 1e-9 {
        return Err(Error::Domain("block state is not normalized".into()));
    }
    let rank = lambda.length();
    Ok(PurifiedBlockState {
        lambda: lambda.clone(),
        rank,
        epr: EprSpecht::new(lambda.clone()),
        weyl,
        purifier_dim: lambda.weyl_dim(rank) as usize,
    })
}

/// Haar average of `(I ⊗ U^⊗n)|Φ⟩⟨Φ|(I ⊗ U^⊗n)†` over the purifying registers,
/// computed from Schur's lemma on the `r`-dimensional Schur basis alone.
/// `phi` is a state on `(ℂ^d ⊗ ℂ^r)^⊗n` in the interleaved layout.
pub fn purifier_twirl(phi: &PureState, sd_r: &SchurDecomposition, d: usize) -> Result<Operator> {
    let n = sd_r.n();
    let r = sd_r.d();
    let shape = RegisterShape::interleaved(d, r, n)?;
    if phi.dim() != shape.total() {
        return Err(Error::Shape("twirl input does not match (d·r)^n".into()));
    }
    let grouped = crate::tensor::permute_state_registers(
        &PureState::new(shape, phi.amplitudes().clone())?,
        &regroup_permutation(n),
    )?;
    let (da, db) = (d.pow(n as u32), r.pow(n as u32));
    let coeffs = Mat::from_fn(da, db, |a, b| grouped.amplitudes()[a * db + b]);
    let mut out = Mat::zeros(da * db, da * db);
    for blk in sd_r.blocks() {
        let wr = blk.weyl_dim as f64;
        let projected: Vec<Mat> = blk.sectors.iter().map(|w| &coeffs * w.map(|z| z.conj())).collect();
        for (s, cs) in projected.iter().enumerate() {
            for (t, ct) in projected.iter().enumerate() {
                let a_part = cs * ct.adjoint();
                let b_part = &blk.sectors[s] * blk.sectors[t].adjoint();
                out += a_part.kronecker(&b_part) * re(1.0 / wr);
            }
        }
    }
    let mut dims = vec![d; n];
    dims.extend(std::iter::repeat_n(r, n));
    interleave(&Operator::new(RegisterShape::new(dims)?, out)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{partial_trace, random_density, tensor_power};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn purification_reproduces_state() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let rho = random_density(3, 2, &mut rng).unwrap();
        let p = purify_state(&rho, 2).unwrap();
        let back = partial_trace(&p.density(), &[0]).unwrap();
        assert!(frobenius(&(back.matrix() - rho.matrix())) < 1e-10);
        assert!(purify_state(&rho, 1).is_err());
    }

    #[test]
    fn maximally_mixed_qubit_gives_maximal_entanglement() {
        let rho = Operator::from_matrix(Mat::identity(2, 2) * re(0.5)).unwrap();
        let p = purify_state(&rho, 2).unwrap();
        let reduced = partial_trace(&p.density(), &[1]).unwrap();
        assert!(frobenius(&(reduced.matrix() - Mat::identity(2, 2) * re(0.5))) < 1e-12);
    }

    #[test]
    fn epr_is_invariant() {
        for parts in [vec![2, 1], vec![2, 2], vec![3, 1]] {
            let e = EprSpecht::new(YoungDiagram::new(parts).unwrap());
            assert!((e.vector.norm() - 1.0).abs() < 1e-12);
            assert!(e.invariance_residual().unwrap() < 1e-12);
        }
    }

    #[test]
    fn single_copy_channel_appends_maximally_mixed() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let rho = random_density(2, 2, &mut rng).unwrap();
        let ds = DoubleSchur::new(
            Arc::new(SchurDecomposition::build(1, 2).unwrap()),
            Arc::new(SchurDecomposition::build(1, 3).unwrap()),
        )
        .unwrap();
        let out = ds.apply(&rho).unwrap();
        let expected = rho.matrix().kronecker(&(Mat::identity(3, 3) * re(1.0 / 3.0)));
        assert!(frobenius(&(out.matrix() - expected)) < 1e-12);
    }

    #[test]
    fn channel_matches_final_formula_twirl_and_kraus() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let ds = DoubleSchur::new(
            Arc::new(SchurDecomposition::build(3, 2).unwrap()),
            Arc::new(SchurDecomposition::build(3, 2).unwrap()),
        )
        .unwrap();
        let rho = random_density(2, 2, &mut rng).unwrap();
        let input = tensor_power(&rho, 3).unwrap();
        let out = ds.apply(&input).unwrap();
        let formula = ds.final_formula(&rho).unwrap();
        assert!(frobenius(&(out.matrix() - formula.matrix())) < 1e-9);
        let twirl = purifier_twirl(&purify_state(&rho, 2).unwrap().tensor_power(3).unwrap(), ds.schur_r(), 2).unwrap();
        assert!(frobenius(&(out.matrix() - twirl.matrix())) < 1e-9);
        let kraus = ds.apply_kraus(&input).unwrap();
        assert!(frobenius(&(out.matrix() - kraus.matrix())) < 1e-9);
        for b in ds.blocks() {
            assert!(ds.kraus_completeness_residual(&b.lambda).unwrap() < 1e-9);
            assert_eq!(ds.kraus_operators(&b.lambda).unwrap().len(), b.specht_dim * b.weyl_dim_r);
        }
    }

    #[test]
    fn projector_identity_small() {
        let ds = DoubleSchur::new(
            Arc::new(SchurDecomposition::build(2, 2).unwrap()),
            Arc::new(SchurDecomposition::build(2, 2).unwrap()),
        )
        .unwrap();
        assert!(ds.projector_identity_residual().unwrap() < 1e-9);
        let sym = crate::symmetric::sym_projector(2, 4).unwrap();
        assert!(frobenius(&(ds.symmetric_projector() - sym.matrix())) < 1e-9);
    }

    #[test]
    fn truncated_mass_is_rejected() {
        let ds = DoubleSchur::new(
            Arc::new(SchurDecomposition::build(2, 2).unwrap()),
            Arc::new(SchurDecomposition::build(2, 1).unwrap()),
        )
        .unwrap();
        let mixed = Operator::from_matrix(Mat::identity(4, 4) * re(0.25)).unwrap();
        assert!(matches!(ds.apply(&mixed), Err(Error::Domain(_))));
    }

    #[test]
    fn quasi_purified_block_traces_back() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let sd = SchurDecomposition::build(3, 2).unwrap();
        let rho = random_density(2, 2, &mut rng).unwrap();
        let input = tensor_power(&rho, 3).unwrap();
        let (lambda, block) = sd.weak_schur_sample(&input, &mut rng).unwrap();
        let p = quasi_purify(&block, &lambda).unwrap();
        assert_eq!(p.rank, lambda.length());
        assert!(frobenius(&(p.reduced() - block.matrix())) < 1e-9);
        assert!((p.operator().trace().re - 1.0).abs() < 1e-12);
    }
}
