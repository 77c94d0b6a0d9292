//! The pretty good measurement over the rank-`r` Hilbert–Schmidt measure and
//! its equivalence with the purify-then-measure pipeline.

use crate::error::{Error, Result};
use crate::estimators::SymmetricSampler;
use crate::perm::Permutation;
use crate::purification::DoubleSchur;
use crate::schur::{SchurDecomposition, YoungDiagram};
use crate::stats::ks_two_sample;
use crate::symmetric::{sym_dim_f64, sym_projector};
use crate::tensor::{
    c, frobenius, haar_unitary_matrix, haar_vector, partial_trace, permutation_operator, re, register_permutation_map,
    tensor_power, Mat, Operator, PureState, RegisterShape, Vector,
};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Eigenvalues below this fraction of the largest are outside the support.
pub const PSEUDO_INVERSE_TOL: f64 = 1e-10;

/// Family-wise significance level of the KS comparisons.
pub const KS_ALPHA: f64 = 0.01;

/// Number of fixed observables compared by KS.
pub const KS_OBSERVABLES: usize = 5;

/// Draws of the rank-`r` Hilbert–Schmidt measure on `d × d` density matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HsMeasureSampler {
    d: usize,
    r: usize,
}

impl HsMeasureSampler {
    pub fn new(d: usize, r: usize) -> Result<Self> {
        if d == 0 || r == 0 {
            return Err(Error::Domain("Hilbert–Schmidt measure needs d, r ≥ 1".into()));
        }
        Ok(HsMeasureSampler { d, r })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Operator {
        let u = haar_vector(self.d * self.r, rng);
        reduced_state(&u, self.d, self.r)
    }
}

/// `tr_B |u⟩⟨u|` for `u ∈ ℂ^d ⊗ ℂ^r` with index `a·r + b`.
fn reduced_state(u: &Vector, d: usize, r: usize) -> Operator {
    let m = Mat::from_fn(d, r, |a, b| u[a * r + b]);
    Operator::from_matrix(&m * m.adjoint()).expect("square reduced state")
}

pub fn hs_sample<R: Rng + ?Sized>(d: usize, r: usize, rng: &mut R) -> Result<Operator> {
    Ok(HsMeasureSampler::new(d, r)?.sample(rng))
}

/// `E[tr σ²]` under the rank-`r` measure, as `tr((SWAP_A ⊗ I_B)·Π_sym^{2,dr})/D[2]`.
pub fn hs_expected_purity(d: usize, r: usize) -> Result<f64> {
    let big = d * r;
    let sym = sym_projector(2, big)?;
    let (_, map) = register_permutation_map(&[d, r, d, r], &Permutation::transposition(4, 0, 2))?;
    let overlap: f64 = map.iter().enumerate().map(|(i, &j)| sym.matrix()[(j, i)].re).sum();
    Ok(overlap / sym_dim_f64(2, big))
}

/// `N = ∫ σ^⊗n dμ(σ)` and its pseudo-inverse square root.
#[derive(Clone, Debug)]
pub struct PgmNormalizer {
    n: usize,
    d: usize,
    r: usize,
    normalizer: Operator,
    pseudo_inverse_sqrt: Operator,
}

impl PgmNormalizer {
    /// Partial trace of `Π_sym^{n,dr}/D[n]` over the purifying registers.
    pub fn new(n: usize, d: usize, r: usize) -> Result<Self> {
        if n == 0 || d == 0 || r == 0 {
            return Err(Error::Domain("normalizer needs n, d, r ≥ 1".into()));
        }
        let big = d * r;
        let sym = sym_projector(n, big)?.with_shape(RegisterShape::interleaved(d, r, n)?)?;
        let keep: Vec<usize> = (0..n).map(|i| 2 * i).collect();
        let reduced = partial_trace(&sym, &keep)?.into_matrix() / re(sym_dim_f64(n, big));
        let eig = crate::tensor::eigh(&reduced);
        let cutoff = PSEUDO_INVERSE_TOL * eig.max_abs();
        let inv_sqrt = eig.map(|x| if x > cutoff { 1.0 / x.sqrt() } else { 0.0 });
        let shape = RegisterShape::uniform(d, n)?;
        Ok(PgmNormalizer {
            n,
            d,
            r,
            normalizer: Operator::new(shape.clone(), reduced)?,
            pseudo_inverse_sqrt: Operator::new(shape, inv_sqrt)?,
        })
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

    pub fn operator(&self) -> &Operator {
        &self.normalizer
    }

    pub fn pseudo_inverse_sqrt(&self) -> &Operator {
        &self.pseudo_inverse_sqrt
    }

    /// Weight of the `λ` block: `dimV(λ, r)/(D[n]·dim λ)`, zero when `ℓ(λ) > r`.
    pub fn block_weight(&self, lambda: &YoungDiagram) -> f64 {
        lambda.weyl_dim(self.r) as f64 / (sym_dim_f64(self.n, self.d * self.r) * lambda.specht_dim() as f64)
    }

    /// `‖N − Σ_λ weight_λ·Π_λ‖_F`.
    pub fn block_form_residual(&self, sd: &SchurDecomposition) -> Result<f64> {
        self.check_schur(sd)?;
        let dim = self.normalizer.dim();
        let mut expected = Mat::zeros(dim, dim);
        for b in sd.blocks() {
            expected += b.projector() * re(self.block_weight(&b.lambda));
        }
        Ok(frobenius(&(self.normalizer.matrix() - expected)))
    }

    /// Numerical rank of `N` and the expected `Σ_{ℓ(λ)≤r} dim λ · dimV(λ, d)`.
    pub fn support_rank(&self, sd: &SchurDecomposition) -> Result<(usize, usize)> {
        self.check_schur(sd)?;
        let eig = self.normalizer.eigh();
        let cutoff = PSEUDO_INVERSE_TOL * eig.max_abs();
        let rank = eig.values.iter().filter(|&&x| x > cutoff).count();
        let expected = sd.blocks().iter().filter(|b| b.lambda.length() <= self.r).map(|b| b.size()).sum();
        Ok((rank, expected))
    }

    /// Largest commutator norm of `N` with every `P(π)` and with `probes` Haar `U^⊗n`.
    pub fn invariance_residual<R: Rng + ?Sized>(&self, probes: usize, rng: &mut R) -> Result<f64> {
        let n_mat = self.normalizer.matrix();
        let mut worst: f64 = 0.0;
        for pi in Permutation::all(self.n) {
            let p = permutation_operator(&pi, self.d)?.into_matrix();
            worst = worst.max(frobenius(&(&p * n_mat - n_mat * &p)));
        }
        for _ in 0..probes {
            let u = Operator::from_matrix(haar_unitary_matrix(self.d, rng))?;
            let un = tensor_power(&u, self.n)?.into_matrix();
            worst = worst.max(frobenius(&(&un * n_mat - n_mat * &un)));
        }
        Ok(worst)
    }

    /// Blockwise completeness of the PGM weights: for every admissible `λ`,
    /// `(D[n]·dim λ/dimV(λ, r))·W_S† N W_S` against the identity on the Weyl register,
    /// together with `‖N^{-1/2} N N^{-1/2} − Σ_{ℓ(λ)≤r} Π_λ‖_F`.
    pub fn completeness_residual(&self, sd: &SchurDecomposition) -> Result<f64> {
        self.check_schur(sd)?;
        let n_mat = self.normalizer.matrix();
        let dn = sym_dim_f64(self.n, self.d * self.r);
        let dim = n_mat.nrows();
        let mut support = Mat::zeros(dim, dim);
        let mut worst: f64 = 0.0;
        for b in sd.blocks().iter().filter(|b| b.lambda.length() <= self.r) {
            let scale = dn * b.specht_dim() as f64 / b.lambda.weyl_dim(self.r) as f64;
            for w in &b.sectors {
                let block = w.adjoint() * n_mat * w * re(scale);
                worst = worst.max(frobenius(&(block - Mat::identity(b.weyl_dim, b.weyl_dim))));
            }
            support += b.projector();
        }
        let s = self.pseudo_inverse_sqrt.matrix();
        worst = worst.max(frobenius(&(s * n_mat * s - support)));
        Ok(worst)
    }

    /// Density of the PGM outcome `σ_u` with respect to the Haar measure on `u`:
    /// `tr(ψ·N^{-1/2} σ_u^⊗n N^{-1/2})`.
    pub fn outcome_density(&self, psi: &Operator, u: &Vector) -> Result<f64> {
        let sigma = reduced_state(u, self.d, self.r);
        let power = tensor_power(&sigma, self.n)?.into_matrix();
        let s = self.pseudo_inverse_sqrt.matrix();
        Ok((psi.matrix() * s * power * s).trace().re)
    }

    fn check_schur(&self, sd: &SchurDecomposition) -> Result<()> {
        if sd.n() != self.n || sd.d() != self.d {
            return Err(Error::Shape(format!(
                "Schur transform (n={}, d={}) for a normalizer with (n={}, d={})",
                sd.n(),
                sd.d(),
                self.n,
                self.d
            )));
        }
        Ok(())
    }
}

pub fn pgm_normalizer(n: usize, d: usize, r: usize) -> Result<PgmNormalizer> {
    PgmNormalizer::new(n, d, r)
}

fn check_u(u: &PureState, ds: &DoubleSchur) -> Result<()> {
    if u.dim() != ds.d() * ds.r() {
        return Err(Error::Shape(format!("vector of dimension {} is not in ℂ^{} ⊗ ℂ^{}", u.dim(), ds.d(), ds.r())));
    }
    Ok(())
}

/// `Σ_K K†·|u⟩⟨u|^⊗n·K` over the Kraus operators of the purification channel.
pub fn adjoint_on_power(u: &PureState, ds: &DoubleSchur) -> Result<Mat> {
    check_u(u, ds)?;
    let power = u.tensor_power(ds.n())?.density().into_matrix();
    let dim = ds.d().pow(ds.n() as u32);
    let mut out = Mat::zeros(dim, dim);
    for b in ds.blocks() {
        for k in ds.kraus_operators(&b.lambda)? {
            out += k.adjoint() * &power * k;
        }
    }
    Ok(out)
}

/// `‖Φ†(|u⟩⟨u|^⊗n) − Σ_λ (dim λ/dimV(λ, r))·Σ_S W_S ν_λ(σ_u) W_S†‖_F`.
pub fn verify_adjoint_lemma(u: &PureState, ds: &DoubleSchur) -> Result<f64> {
    let lhs = adjoint_on_power(u, ds)?;
    let sigma = reduced_state(u.amplitudes(), ds.d(), ds.r());
    let dim = lhs.nrows();
    let mut rhs = Mat::zeros(dim, dim);
    for b in ds.blocks() {
        let nu = ds.schur_d().weyl_block(&b.lambda, &sigma)?;
        let coeff = re(b.specht_dim as f64 / b.weyl_dim_r as f64);
        let sb = ds.schur_d().block(&b.lambda).expect("block present in both transforms");
        for w in &sb.sectors {
            rhs += w * &nu * w.adjoint() * coeff;
        }
    }
    Ok(frobenius(&(lhs - rhs)))
}

/// The fixed observables whose expectation values are compared by KS.
pub fn ks_observables(d: usize) -> Result<Vec<(String, Mat)>> {
    if d < 2 {
        return Err(Error::Domain("KS observables need d ≥ 2".into()));
    }
    let mut x = Mat::zeros(d, d);
    x[(0, 1)] = re(1.0);
    x[(1, 0)] = re(1.0);
    let mut y = Mat::zeros(d, d);
    y[(0, 1)] = c(0.0, -1.0);
    y[(1, 0)] = c(0.0, 1.0);
    let mut z = Mat::zeros(d, d);
    z[(0, 0)] = re(1.0);
    z[(1, 1)] = re(-1.0);
    let h = re(std::f64::consts::FRAC_1_SQRT_2);
    Ok(vec![
        ("x01".into(), x.clone()),
        ("y01".into(), y.clone()),
        ("z01".into(), z.clone()),
        ("xz01".into(), (&x + &z) * h),
        ("yz01".into(), (&y + &z) * h),
    ])
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ObservableKs {
    pub observable: String,
    pub statistic: f64,
    pub p_value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PgmEquivalenceReport {
    pub d: usize,
    pub r: usize,
    pub n: usize,
    pub n_samples: usize,
    pub ks: Vec<ObservableKs>,
    pub min_p_value: f64,
    /// Per-test threshold `α / #observables`.
    pub p_threshold: f64,
    pub ks_pass: bool,
    pub density_points: usize,
    /// Largest `|PGM density − D[n]·tr(Φ(ψ)|u⟩⟨u|^⊗n)|` over the probe points.
    pub density_max_residual: f64,
    /// Acceptance rate of the direct rejection sampler.
    pub direct_acceptance: f64,
}

/// Mix(GPS) measurement trajectory: purify-sample, Hayashi on the branch, trace out `B`.
struct PipelineRoute<'a> {
    ds: &'a DoubleSchur,
    psi: &'a Operator,
    samplers: HashMap<YoungDiagram, SymmetricSampler>,
}

impl PipelineRoute<'_> {
    fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Operator> {
        let (lambda, branch) = self.ds.sample(self.psi, rng)?;
        let (n, big) = (self.ds.n(), self.ds.d() * self.ds.r());
        let sampler = match self.samplers.entry(lambda) {
            std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(SymmetricSampler::new(&branch.with_shape(RegisterShape::uniform(big, n)?)?, n, big)?)
            }
        };
        let u = sampler.sample(rng)?.state;
        Ok(reduced_state(&u, self.ds.d(), self.ds.r()))
    }
}

/// Rejection sampler against the PGM outcome density with Haar proposals.
struct DirectRoute<'a> {
    normalizer: &'a PgmNormalizer,
    psi: &'a Operator,
    bound: f64,
    proposals: u64,
    accepted: u64,
}

impl DirectRoute<'_> {
    fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Operator> {
        let big = self.normalizer.d * self.normalizer.r;
        let budget = (100.0 * self.bound).ceil().max(1e4) as u64;
        for _ in 0..budget {
            self.proposals += 1;
            let u = haar_vector(big, rng);
            if rng.random::<f64>() * self.bound < self.normalizer.outcome_density(self.psi, &u)? {
                self.accepted += 1;
                return Ok(reduced_state(&u, self.normalizer.d, self.normalizer.r));
            }
        }
        Err(Error::SamplerAbort(format!("direct PGM sampler: no acceptance in {budget} proposals")))
    }
}

/// Compares the outcome distributions of the Mix(GPS) measurement and the PGM on `psi`.
pub fn verify_pgm_equivalence<R: Rng + ?Sized>(
    psi: &Operator,
    ds: &DoubleSchur,
    n_samples: usize,
    density_points: usize,
    rng: &mut R,
) -> Result<PgmEquivalenceReport> {
    let (n, d, r) = (ds.n(), ds.d(), ds.r());
    if psi.dim() != d.pow(n as u32) {
        return Err(Error::Shape(format!("state of dimension {} for d^n = {}", psi.dim(), d.pow(n as u32))));
    }
    if !psi.is_psd(1e-9) || !psi.is_unit_trace(1e-9) {
        return Err(Error::Domain("PGM input is not a density matrix".into()));
    }
    if n_samples < 2 {
        return Err(Error::Domain("KS comparison needs at least two samples".into()));
    }
    let normalizer = PgmNormalizer::new(n, d, r)?;

    // Pointwise density chain.
    let channel_out = ds.apply(psi)?.into_matrix();
    let dn = sym_dim_f64(n, d * r);
    let mut density_max_residual: f64 = 0.0;
    for _ in 0..density_points {
        let u = PureState::from_vector(haar_vector(d * r, rng))?;
        let pgm = normalizer.outcome_density(psi, u.amplitudes())?;
        let power = u.tensor_power(n)?;
        let pipeline = dn * (power.amplitudes().adjoint() * &channel_out * power.amplitudes())[(0, 0)].re;
        density_max_residual = density_max_residual.max((pgm - pipeline).abs());
    }

    let observables = ks_observables(d)?;
    let stat =
        |sigma: &Operator| -> Vec<f64> { observables.iter().map(|(_, o)| (sigma.matrix() * o).trace().re).collect() };
    let mut pipeline = PipelineRoute { ds, psi, samplers: HashMap::new() };
    let s = normalizer.pseudo_inverse_sqrt.matrix();
    let bound = crate::tensor::eigh(&(s * psi.matrix() * s)).max_abs();
    let mut direct = DirectRoute { normalizer: &normalizer, psi, bound, proposals: 0, accepted: 0 };
    let mut a = vec![Vec::with_capacity(n_samples); observables.len()];
    let mut b = vec![Vec::with_capacity(n_samples); observables.len()];
    for _ in 0..n_samples {
        for (k, v) in stat(&pipeline.sample(rng)?).into_iter().enumerate() {
            a[k].push(v);
        }
        for (k, v) in stat(&direct.sample(rng)?).into_iter().enumerate() {
            b[k].push(v);
        }
    }
    let mut ks = Vec::with_capacity(observables.len());
    for ((name, _), (xa, xb)) in observables.iter().zip(a.iter().zip(&b)) {
        let res = ks_two_sample(xa, xb)?;
        ks.push(ObservableKs { observable: name.clone(), statistic: res.statistic, p_value: res.p_value });
    }
    let min_p_value = ks.iter().map(|k| k.p_value).fold(1.0, f64::min);
    let p_threshold = KS_ALPHA / observables.len() as f64;
    Ok(PgmEquivalenceReport {
        d,
        r,
        n,
        n_samples,
        ks,
        min_p_value,
        p_threshold,
        ks_pass: min_p_value >= p_threshold,
        density_points,
        density_max_residual,
        direct_acceptance: direct.accepted as f64 / direct.proposals.max(1) as f64,
    })
}

/// The Mix⁺ reading: for each `λ` with weight on `ρ^⊗n`, the post-measurement state
/// `Π_λ ρ^⊗n Π_λ / p_λ` run through the rank-`ℓ(λ)` equivalence check.
pub fn verify_mix_plus_branches<R: Rng + ?Sized>(
    rho: &Operator,
    n: usize,
    n_samples: usize,
    density_points: usize,
    rng: &mut R,
) -> Result<Vec<(YoungDiagram, f64, PgmEquivalenceReport)>> {
    let d = rho.dim();
    let sd = SchurDecomposition::cached(n, d)?;
    let power = tensor_power(rho, n)?;
    let mut out = Vec::new();
    for b in sd.blocks() {
        let proj = b.projector();
        let branch = &proj * power.matrix() * &proj;
        let p = branch.trace().re;
        if p < 1e-12 {
            continue;
        }
        let psi = Operator::new(power.shape().clone(), branch / re(p))?;
        let ds = DoubleSchur::cached(n, d, b.lambda.length())?;
        let report = verify_pgm_equivalence(&psi, &ds, n_samples, density_points, rng)?;
        out.push((b.lambda.clone(), p, report));
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BranchReport {
    pub lambda: Vec<usize>,
    pub probability: f64,
    pub report: PgmEquivalenceReport,
}

/// Everything `pgm-check` reports for one `(d, r, n)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PgmCheckReport {
    pub d: usize,
    pub r: usize,
    pub n: usize,
    pub normalizer_block_residual: f64,
    pub normalizer_rank: usize,
    pub normalizer_expected_rank: usize,
    pub normalizer_invariance_residual: f64,
    pub completeness_residual: f64,
    pub adjoint_lemma_max_residual: f64,
    pub adjoint_lemma_probes: usize,
    pub equivalence: PgmEquivalenceReport,
    pub mix_plus_branches: Vec<BranchReport>,
}

impl PgmCheckReport {
    pub fn max_residual(&self) -> f64 {
        [
            self.normalizer_block_residual,
            self.normalizer_invariance_residual,
            self.completeness_residual,
            self.adjoint_lemma_max_residual,
            self.equivalence.density_max_residual,
        ]
        .into_iter()
        .chain(self.mix_plus_branches.iter().map(|b| b.report.density_max_residual))
        .fold(0.0, f64::max)
    }

    pub fn all_ks_pass(&self) -> bool {
        self.equivalence.ks_pass && self.mix_plus_branches.iter().all(|b| b.report.ks_pass)
    }
}

/// Runs every PGM check on a random rank-`r` state.
pub fn pgm_check<R: Rng + ?Sized>(
    d: usize,
    r: usize,
    n: usize,
    n_samples: usize,
    adjoint_probes: usize,
    rng: &mut R,
) -> Result<PgmCheckReport> {
    if r > d {
        return Err(Error::Domain(format!("purification rank {r} exceeds d = {d}")));
    }
    let ds = DoubleSchur::cached(n, d, r)?;
    let normalizer = PgmNormalizer::new(n, d, r)?;
    let sd = ds.schur_d();
    let (normalizer_rank, normalizer_expected_rank) = normalizer.support_rank(sd)?;
    let mut adjoint_lemma_max_residual: f64 = 0.0;
    for _ in 0..adjoint_probes {
        let u = PureState::from_vector(haar_vector(d * r, rng))?;
        adjoint_lemma_max_residual = adjoint_lemma_max_residual.max(verify_adjoint_lemma(&u, &ds)?);
    }
    let rho = crate::tensor::random_density(d, r, rng)?;
    let psi = tensor_power(&rho, n)?;
    let density_points = 100;
    let equivalence = verify_pgm_equivalence(&psi, &ds, n_samples, density_points, rng)?;
    let mix_plus_branches = verify_mix_plus_branches(&rho, n, n_samples, density_points, rng)?
        .into_iter()
        .map(|(l, p, report)| BranchReport { lambda: l.parts().to_vec(), probability: p, report })
        .collect();
    Ok(PgmCheckReport {
        d,
        r,
        n,
        normalizer_block_residual: normalizer.block_form_residual(sd)?,
        normalizer_rank,
        normalizer_expected_rank,
        normalizer_invariance_residual: normalizer.invariance_residual(5, rng)?,
        completeness_residual: normalizer.completeness_residual(sd)?,
        adjoint_lemma_max_residual,
        adjoint_lemma_probes: adjoint_probes,
        equivalence,
        mix_plus_branches,
    })
}
