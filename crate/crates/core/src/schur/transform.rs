//! Explicit Schur transform on `(ℂ^d)^⊗n` for small `n`.
//!
//! Each block `λ` stores one isometry per standard tableau `S`; column `q` of
//! the sector for `S` is the image of `|λ⟩|S⟩|q⟩` under `U_Schur†`. The sectors
//! are joint eigenspaces of the realized Jucys–Murphy operators and are linked
//! by Young's orthogonal form, so `P(π)` acts as `κ_λ(π) ⊗ I` on every block.

use super::young::{cycle_type, enumerate_partitions, StandardTableau, YoungDiagram, YoungRep};
use crate::error::{Error, Result};
use crate::perm::{factorial, Permutation};
use crate::symmetric::{jucys_murphy, permutation_index_map, GroupAlgebraElement, MAX_GROUP_DEGREE};
use crate::tensor::{c, check_cap, eigh, frobenius, random_density, re, tensor_power, Mat, Operator, RegisterShape};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, VecDeque};
use std::path::PathBuf;
use std::sync::{Arc, Mutex, OnceLock};

/// Eigenvalues of the realized Jucys–Murphy operators are integers; this separates them.
pub const JM_CLUSTER_TOL: f64 = 1e-6;

/// Bumped whenever the serialized layout or the basis conventions change.
pub const CACHE_FORMAT: u32 = 1;

/// Environment variable naming the on-disk cache directory.
pub const CACHE_ENV: &str = "TOMOFORGE_CACHE_DIR";

#[derive(Clone, Debug)]
pub struct SchurBlock {
    pub lambda: YoungDiagram,
    pub tableaux: Vec<StandardTableau>,
    pub weyl_dim: usize,
    /// One `d^n × weyl_dim` isometry per tableau, in tableau order.
    pub sectors: Vec<Mat>,
}

impl SchurBlock {
    pub fn specht_dim(&self) -> usize {
        self.tableaux.len()
    }

    /// Block dimension `dim(λ)·dimV(λ,d)`.
    pub fn size(&self) -> usize {
        self.specht_dim() * self.weyl_dim
    }

    /// `W_λ = [W_{S_1} | W_{S_2} | …]`, columns indexed by `(S, q)`.
    pub fn isometry(&self) -> Mat {
        let rows = self.sectors[0].nrows();
        let mut out = Mat::zeros(rows, self.size());
        for (s, w) in self.sectors.iter().enumerate() {
            out.columns_mut(s * self.weyl_dim, self.weyl_dim).copy_from(w);
        }
        out
    }

    /// `Π_λ = W_λ W_λ†`.
    pub fn projector(&self) -> Mat {
        let w = self.isometry();
        &w * w.adjoint()
    }
}

#[derive(Clone, Debug)]
pub struct SchurDecomposition {
    d: usize,
    n: usize,
    blocks: Vec<SchurBlock>,
}

/// Residuals of the structural invariants, as reported by `schur-validate`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SchurValidation {
    pub n: usize,
    pub d: usize,
    pub dimension_sum: usize,
    pub dimension_ok: bool,
    pub unitarity_residual: f64,
    pub permutation_offblock_residual: f64,
    pub yor_residual: f64,
    pub tensor_power_offblock_residual: f64,
    pub tensor_power_identity_residual: f64,
    pub jm_eigen_residual: f64,
}

impl SchurValidation {
    pub fn max_residual(&self) -> f64 {
        [
            self.unitarity_residual,
            self.permutation_offblock_residual,
            self.yor_residual,
            self.tensor_power_offblock_residual,
            self.tensor_power_identity_residual,
            self.jm_eigen_residual,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

impl SchurDecomposition {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[SchurBlock] {
        &self.blocks
    }

    pub fn block(&self, lambda: &YoungDiagram) -> Option<&SchurBlock> {
        self.blocks.iter().find(|b| &b.lambda == lambda)
    }

    pub fn dim(&self) -> usize {
        self.d.pow(self.n as u32)
    }

    /// Builds the transform following the isotypic-projector / Jucys–Murphy /
    /// transport construction.
    pub fn build(n: usize, d: usize) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::Domain("Schur transform needs n ≥ 1 and d ≥ 1".into()));
        }
        if n > MAX_GROUP_DEGREE {
            return Err(Error::Unsupported(format!("Schur transform for n = {n} > {MAX_GROUP_DEGREE}")));
        }
        check_cap(d.checked_pow(n as u32).unwrap_or(usize::MAX))?;
        let perms = Permutation::all(n);
        let blocks = enumerate_partitions(n, d)
            .into_iter()
            .map(|lambda| build_block(lambda, n, d, &perms))
            .collect::<Result<Vec<_>>>()?;
        let total: usize = blocks.iter().map(SchurBlock::size).sum();
        if total != d.pow(n as u32) {
            return Err(Error::Construction(format!("block dimensions sum to {total}, expected {}", d.pow(n as u32))));
        }
        Ok(SchurDecomposition { d, n, blocks })
    }

    /// Process-wide memoized transform, backed by the on-disk cache when
    /// `TOMOFORGE_CACHE_DIR` is set.
    pub fn cached(n: usize, d: usize) -> Result<Arc<Self>> {
        type Memo = Mutex<HashMap<(usize, usize), Arc<SchurDecomposition>>>;
        static MEMO: OnceLock<Memo> = OnceLock::new();
        let memo = MEMO.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(sd) = memo.lock().expect("schur memo poisoned").get(&(n, d)) {
            return Ok(sd.clone());
        }
        let sd = Arc::new(match std::env::var_os(CACHE_ENV) {
            Some(dir) => Self::load_or_build(n, d, PathBuf::from(dir))?,
            None => Self::build(n, d)?,
        });
        memo.lock().expect("schur memo poisoned").insert((n, d), sd.clone());
        Ok(sd)
    }

    pub fn cache_file_name(n: usize, d: usize) -> String {
        format!("schur-n{n}-d{d}.json")
    }

    /// Loads `dir/schur-n{n}-d{d}.json` if it carries the current version, otherwise
    /// builds and (re)writes it.
    pub fn load_or_build(n: usize, d: usize, dir: PathBuf) -> Result<Self> {
        let path = dir.join(Self::cache_file_name(n, d));
        if let Ok(text) = std::fs::read_to_string(&path) {
            if let Ok(sd) = Self::from_json(&text) {
                if sd.n == n && sd.d == d {
                    return Ok(sd);
                }
            }
        }
        let sd = Self::build(n, d)?;
        std::fs::create_dir_all(&dir).map_err(|e| Error::Cache(format!("{}: {e}", dir.display())))?;
        let tmp = path.with_extension(format!("json.tmp{}", std::process::id()));
        std::fs::write(&tmp, sd.to_json()?).map_err(|e| Error::Cache(format!("{}: {e}", tmp.display())))?;
        std::fs::rename(&tmp, &path).map_err(|e| Error::Cache(format!("{}: {e}", path.display())))?;
        Ok(sd)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = CacheFile {
            format: CACHE_FORMAT,
            version: env!("CARGO_PKG_VERSION").to_string(),
            n: self.n,
            d: self.d,
            blocks: self
                .blocks
                .iter()
                .map(|b| CacheBlock {
                    lambda: b.lambda.clone(),
                    weyl_dim: b.weyl_dim,
                    sectors: b.sectors.iter().map(MatJson::from_mat).collect(),
                })
                .collect(),
        };
        serde_json::to_string(&file).map_err(|e| Error::Cache(e.to_string()))
    }

    /// Parses a cache file; rejects other format or library versions.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: CacheFile = serde_json::from_str(text).map_err(|e| Error::Cache(e.to_string()))?;
        if file.format != CACHE_FORMAT || file.version != env!("CARGO_PKG_VERSION") {
            return Err(Error::Cache(format!(
                "cache version {} / format {} does not match {} / {CACHE_FORMAT}",
                file.version,
                file.format,
                env!("CARGO_PKG_VERSION")
            )));
        }
        let blocks = file
            .blocks
            .into_iter()
            .map(|b| {
                let tableaux = b.lambda.standard_tableaux();
                let sectors = b.sectors.iter().map(MatJson::to_mat).collect::<Result<Vec<_>>>()?;
                if sectors.len() != tableaux.len() {
                    return Err(Error::Cache("sector count does not match tableaux".into()));
                }
                Ok(SchurBlock { lambda: b.lambda, tableaux, weyl_dim: b.weyl_dim, sectors })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SchurDecomposition { d: file.d, n: file.n, blocks })
    }

    /// `U_Schur`, rows ordered by block, then tableau, then Weyl index.
    pub fn unitary(&self) -> Mat {
        self.full_isometry().adjoint()
    }

    fn full_isometry(&self) -> Mat {
        let dim = self.dim();
        let mut out = Mat::zeros(dim, dim);
        let mut offset = 0;
        for b in &self.blocks {
            out.columns_mut(offset, b.size()).copy_from(&b.isometry());
            offset += b.size();
        }
        out
    }

    /// Start offset of every block inside the Schur basis.
    pub fn block_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.blocks.len());
        let mut acc = 0;
        for b in &self.blocks {
            offsets.push(acc);
            acc += b.size();
        }
        offsets
    }

    /// `U m U†`.
    pub fn to_schur_basis(&self, m: &Mat) -> Mat {
        let w = self.full_isometry();
        w.adjoint() * m * w
    }

    fn require_block(&self, lambda: &YoungDiagram) -> Result<&SchurBlock> {
        self.block(lambda)
            .ok_or_else(|| Error::Domain(format!("no block {lambda} in the (n={}, d={}) transform", self.n, self.d)))
    }

    /// `ν_λ^d(ρ)`, the Weyl-register block of `U ρ^⊗n U†`.
    pub fn weyl_block(&self, lambda: &YoungDiagram, rho: &Operator) -> Result<Mat> {
        let b = self.require_block(lambda)?;
        let power = tensor_power(rho, self.n)?;
        let w = &b.sectors[0];
        Ok(w.adjoint() * power.matrix() * w)
    }

    /// `s_λ^d(ρ) = tr ν_λ^d(ρ)`, read from the block trace.
    pub fn schur_polynomial_value(&self, lambda: &YoungDiagram, rho: &Operator) -> Result<f64> {
        if lambda.length() > self.d {
            return Ok(0.0);
        }
        Ok(self.weyl_block(lambda, rho)?.trace().re)
    }

    /// `tr(Π_λ ψ)` for every block, in block order.
    pub fn block_probabilities(&self, state: &Mat) -> Result<Vec<(YoungDiagram, f64)>> {
        if state.nrows() != self.dim() {
            return Err(Error::Shape(format!(
                "state of dimension {} for a d^n = {} transform",
                state.nrows(),
                self.dim()
            )));
        }
        Ok(self
            .blocks
            .iter()
            .map(|b| {
                let p: f64 = b.sectors.iter().map(|w| (w.adjoint() * state * w).trace().re).sum();
                (b.lambda.clone(), p)
            })
            .collect())
    }

    /// Samples `λ` with probability `tr(Π_λ ψ)` and returns the renormalized
    /// post-measurement block in Schur coordinates (registers: Specht, Weyl).
    pub fn weak_schur_sample<R: Rng + ?Sized>(
        &self,
        state: &Operator,
        rng: &mut R,
    ) -> Result<(YoungDiagram, Operator)> {
        let probs = self.block_probabilities(state.matrix())?;
        let total: f64 = probs.iter().map(|(_, p)| p.max(0.0)).sum();
        if total < 1e-12 {
            return Err(Error::Numerical("state has negligible weight on every Schur block".into()));
        }
        let mut u = rng.random::<f64>() * total;
        let mut chosen = probs.len() - 1;
        for (i, (_, p)) in probs.iter().enumerate() {
            if u < p.max(0.0) {
                chosen = i;
                break;
            }
            u -= p.max(0.0);
        }
        let (lambda, p) = probs[chosen].clone();
        let b = &self.blocks[chosen];
        let w = b.isometry();
        let block = w.adjoint() * state.matrix() * &w / re(p);
        let shape = RegisterShape::new(vec![b.specht_dim(), b.weyl_dim])?;
        Ok((lambda, Operator::new(shape, block)?))
    }

    /// Checks every structural invariant; `rng` drives the random `ρ` and `π` probes.
    pub fn validate<R: Rng + ?Sized>(&self, probes: usize, rng: &mut R) -> Result<SchurValidation> {
        let dim = self.dim();
        let dimension_sum: usize = self.blocks.iter().map(SchurBlock::size).sum();
        let w = self.full_isometry();
        let unitarity_residual = frobenius(&(w.adjoint() * &w - Mat::identity(dim, dim)));
        let offsets = self.block_offsets();
        let reps: Vec<YoungRep> = self.blocks.iter().map(|b| YoungRep::new(b.lambda.clone())).collect();

        let all = Permutation::all(self.n);
        let perms: Vec<Permutation> = if all.len() <= probes.max(1) {
            all
        } else {
            (0..probes).map(|_| all[rng.random_range(0..all.len())].clone()).collect()
        };
        let mut offblock: f64 = 0.0;
        let mut yor: f64 = 0.0;
        for pi in &perms {
            let p = GroupAlgebraElement::from_permutation(pi.clone(), re(1.0)).realize(self.d)?;
            let conj = w.adjoint() * p.matrix() * &w;
            let (off, per_block) = split_blocks(&conj, &offsets, &self.blocks);
            offblock = offblock.max(off);
            for ((blk, rep), m) in self.blocks.iter().zip(&reps).zip(per_block) {
                let kappa = rep.matrix(pi)?;
                let expected = Mat::from_fn(blk.size(), blk.size(), |i, j| {
                    let (s, q) = (i / blk.weyl_dim, i % blk.weyl_dim);
                    let (t, q2) = (j / blk.weyl_dim, j % blk.weyl_dim);
                    if q == q2 {
                        re(kappa[(s, t)])
                    } else {
                        re(0.0)
                    }
                });
                yor = yor.max(frobenius(&(m - expected)));
            }
        }

        let mut tp_off: f64 = 0.0;
        let mut tp_id: f64 = 0.0;
        for _ in 0..probes.max(1) {
            let rho = random_density(self.d, self.d, rng)?;
            let power = tensor_power(&rho, self.n)?;
            let conj = w.adjoint() * power.matrix() * &w;
            let (off, per_block) = split_blocks(&conj, &offsets, &self.blocks);
            tp_off = tp_off.max(off);
            for (blk, m) in self.blocks.iter().zip(per_block) {
                // Block must be I_{dim λ} ⊗ ν: identical diagonal Weyl sub-blocks, zero elsewhere.
                let wd = blk.weyl_dim;
                let nu = m.view((0, 0), (wd, wd)).clone_owned();
                for s in 0..blk.specht_dim() {
                    for t in 0..blk.specht_dim() {
                        let sub = m.view((s * wd, t * wd), (wd, wd)).clone_owned();
                        let target = if s == t { nu.clone() } else { Mat::zeros(wd, wd) };
                        tp_id = tp_id.max(frobenius(&(sub - target)));
                    }
                }
            }
        }

        let mut jm: f64 = 0.0;
        for k in 2..=self.n {
            let x = jucys_murphy(k, self.n)?;
            for b in &self.blocks {
                for (t, sector) in b.tableaux.iter().zip(&b.sectors) {
                    let applied = x.apply_left(self.d, sector)?;
                    jm = jm.max(frobenius(&(applied - sector * re(t.content()[k - 1] as f64))));
                }
            }
        }

        Ok(SchurValidation {
            n: self.n,
            d: self.d,
            dimension_sum,
            dimension_ok: dimension_sum == dim,
            unitarity_residual,
            permutation_offblock_residual: offblock,
            yor_residual: yor,
            tensor_power_offblock_residual: tp_off,
            tensor_power_identity_residual: tp_id,
            jm_eigen_residual: jm,
        })
    }
}

/// Splits a Schur-basis matrix into its diagonal blocks and the Frobenius norm of everything else.
fn split_blocks(m: &Mat, offsets: &[usize], blocks: &[SchurBlock]) -> (f64, Vec<Mat>) {
    let mut owner = vec![0usize; m.nrows()];
    for (k, (&o, b)) in offsets.iter().zip(blocks).enumerate() {
        owner[o..o + b.size()].fill(k);
    }
    let mut outside = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if owner[i] != owner[j] {
                outside += m[(i, j)].norm_sqr();
            }
        }
    }
    let diag = offsets.iter().zip(blocks).map(|(&o, b)| m.view((o, o), (b.size(), b.size())).clone_owned()).collect();
    (outside.sqrt(), diag)
}

fn build_block(lambda: YoungDiagram, n: usize, d: usize, perms: &[Permutation]) -> Result<SchurBlock> {
    let rep = YoungRep::new(lambda.clone());
    let tableaux = rep.tableaux().to_vec();
    let specht = tableaux.len();
    let weyl = lambda.weyl_dim(d) as usize;
    let dim = d.pow(n as u32);

    // (1) isotypic projector Π_λ = (dim λ / n!) Σ_π χ_λ(π) P(π).
    let mut chars: HashMap<Vec<usize>, f64> = HashMap::new();
    let mut proj = Mat::zeros(dim, dim);
    let norm = specht as f64 / factorial(n) as f64;
    for pi in perms {
        let ct = cycle_type(pi);
        let chi = match chars.get(&ct) {
            Some(&x) => x,
            None => {
                let x = rep.character(pi)?;
                chars.insert(ct, x);
                x
            }
        };
        if chi.abs() < 1e-14 {
            continue;
        }
        let map = permutation_index_map(pi, d)?;
        for (i, &j) in map.iter().enumerate() {
            proj[(j, i)] += re(norm * chi);
        }
    }
    let eig = eigh(&proj);
    let keep: Vec<usize> = (0..dim).filter(|&i| eig.values[i] > 0.5).collect();
    if keep.len() != specht * weyl {
        return Err(Error::Construction(format!(
            "isotypic projector for {lambda} has rank {}, expected {}",
            keep.len(),
            specht * weyl
        )));
    }
    let mut basis = Mat::from_fn(dim, keep.len(), |i, j| eig.vectors[(i, keep[j])]);

    // (2) restrict to the joint Jucys–Murphy eigenspace of the content-minimal tableau.
    let start = tableaux.len() - 1;
    let target = tableaux[start].content().to_vec();
    for k in 2..=n {
        let x = jucys_murphy(k, n)?;
        let h = basis.adjoint() * x.apply_left(d, &basis)?;
        let e = eigh(&h);
        let want = target[k - 1] as f64;
        let sel: Vec<usize> = (0..e.values.len()).filter(|&i| (e.values[i] - want).abs() < JM_CLUSTER_TOL).collect();
        if sel.is_empty() {
            return Err(Error::Construction(format!(
                "no eigenvalue {want} of X_{k} inside block {lambda}; spectrum {:?}",
                e.values
            )));
        }
        let v = Mat::from_fn(e.vectors.nrows(), sel.len(), |i, j| e.vectors[(i, sel[j])]);
        basis = &basis * v;
    }
    if basis.ncols() != weyl {
        return Err(Error::Construction(format!(
            "sector of the content-minimal tableau of {lambda} has dimension {}, expected {weyl}",
            basis.ncols()
        )));
    }

    // (3) transport the sector basis along adjacent transpositions.
    let mut sectors: Vec<Option<Mat>> = vec![None; specht];
    sectors[start] = Some(basis);
    let mut queue = VecDeque::from([start]);
    while let Some(idx) = queue.pop_front() {
        let t = &tableaux[idx];
        let w = sectors[idx].clone().expect("queued sectors are known");
        for i in 0..n - 1 {
            let Some(s) = t.swapped(i) else { continue };
            let sidx = rep.index_of(&s);
            if sectors[sidx].is_some() {
                continue;
            }
            let r = t.axial_distance(i) as f64;
            let pw = GroupAlgebraElement::from_permutation(Permutation::adjacent(n, i), re(1.0)).apply_left(d, &w)?;
            let moved = (pw - &w * re(1.0 / r)) * c(1.0 / (1.0 - 1.0 / (r * r)).sqrt(), 0.0);
            sectors[sidx] = Some(moved);
            queue.push_back(sidx);
        }
    }
    let sectors = sectors
        .into_iter()
        .enumerate()
        .map(|(i, s)| s.ok_or_else(|| Error::Construction(format!("tableau {i} of {lambda} unreachable"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(SchurBlock { lambda, tableaux, weyl_dim: weyl, sectors })
}

#[derive(Serialize, Deserialize)]
struct CacheFile {
    format: u32,
    version: String,
    n: usize,
    d: usize,
    blocks: Vec<CacheBlock>,
}

#[derive(Serialize, Deserialize)]
struct CacheBlock {
    lambda: YoungDiagram,
    weyl_dim: usize,
    sectors: Vec<MatJson>,
}

#[derive(Serialize, Deserialize)]
struct MatJson {
    rows: usize,
    cols: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl MatJson {
    fn from_mat(m: &Mat) -> Self {
        let mut r = Vec::with_capacity(m.len());
        let mut i = Vec::with_capacity(m.len());
        for row in 0..m.nrows() {
            for col in 0..m.ncols() {
                r.push(m[(row, col)].re);
                i.push(m[(row, col)].im);
            }
        }
        MatJson { rows: m.nrows(), cols: m.ncols(), re: r, im: i }
    }

    fn to_mat(&self) -> Result<Mat> {
        if self.re.len() != self.rows * self.cols || self.im.len() != self.rows * self.cols {
            return Err(Error::Cache("matrix entry count mismatch".into()));
        }
        Ok(Mat::from_fn(self.rows, self.cols, |r, col| c(self.re[r * self.cols + col], self.im[r * self.cols + col])))
    }
}
