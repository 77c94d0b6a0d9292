//! Tomography estimators: GKKT with random bases, Hayashi's covariant POVM,
//! the GPS unbiased estimator, the standard unentangled estimator, and the
//! Mix / Mix⁺ reductions from mixed to pure state tomography.

use crate::error::{Error, Result};
use crate::purification::{quasi_purify, random_purification, DoubleSchur};
use crate::schur::{SchurDecomposition, YoungDiagram};
use crate::symmetric::{sym_dim_f64, symmetric_leakage, MAX_GROUP_DEGREE};
use crate::tensor::{
    c, eigh, haar_unitary_matrix, haar_vector, partial_trace, re, tensor_power, Mat, Operator, PureState,
    RegisterShape, Vector,
};
use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Hayashi rejection sampling gives up below this acceptance rate.
pub const MIN_ACCEPTANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Gkkt,
    Hayashi,
    Gps,
    MixGkkt,
    MixGps,
    MixPlusGps,
    Standard,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::Gkkt,
        Algorithm::Hayashi,
        Algorithm::Gps,
        Algorithm::MixGkkt,
        Algorithm::MixGps,
        Algorithm::MixPlusGps,
        Algorithm::Standard,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Gkkt => "gkkt",
            Algorithm::Hayashi => "hayashi",
            Algorithm::Gps => "gps",
            Algorithm::MixGkkt => "mix-gkkt",
            Algorithm::MixGps => "mix-gps",
            Algorithm::MixPlusGps => "mix-plus-gps",
            Algorithm::Standard => "standard",
        }
    }

    /// Whether the algorithm needs a pure input state.
    pub fn pure_only(self) -> bool {
        matches!(self, Algorithm::Hayashi | Algorithm::Gps)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown algorithm '{s}'")))
    }
}

/// Inner pure-state estimator of the Mix reduction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InnerEstimator {
    Gkkt,
    Hayashi,
    Gps,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SampleMeta {
    pub algorithm: String,
    pub lambda: Option<YoungDiagram>,
    /// Acceptance rate of the Hayashi rejection sampler, when one ran.
    pub acceptance: Option<f64>,
    /// Set when a non-PSD average was clipped and renormalized.
    pub clipped: bool,
}

#[derive(Clone, Debug)]
pub struct EstimatorSample {
    pub estimate: Operator,
    pub meta: SampleMeta,
}

fn density_of(psi: &PureState) -> Mat {
    psi.amplitudes() * psi.amplitudes().adjoint()
}

fn projector(v: &Vector) -> Mat {
    v * v.adjoint()
}

/// Measures `state` in the basis `V†|j⟩` for a Haar-random `V`; returns `V†|j⟩`.
fn random_basis_outcome<R: Rng + ?Sized>(state: &Mat, rng: &mut R) -> Vector {
    let d = state.nrows();
    let v = haar_unitary_matrix(d, rng);
    let rotated = &v * state * v.adjoint();
    let u = rng.random::<f64>();
    let mut acc = 0.0;
    let mut j = d - 1;
    for i in 0..d {
        acc += rotated[(i, i)].re.max(0.0);
        if u < acc {
            j = i;
            break;
        }
    }
    v.adjoint().column(j).into_owned()
}

fn gkkt_round_on(state: &Mat, rng: &mut (impl Rng + ?Sized)) -> Mat {
    let d = state.nrows();
    let out = random_basis_outcome(state, rng);
    projector(&out) * re((d + 1) as f64) - Mat::identity(d, d)
}

/// `(d+1)V†|j⟩⟨j|V − I` for one random-basis measurement of `ψ`.
pub fn gkkt_single_round<R: Rng + ?Sized>(psi: &PureState, rng: &mut R) -> Result<Operator> {
    let m = gkkt_round_on(&density_of(psi), rng);
    Operator::from_matrix(m)
}

/// Average of `n` GKKT rounds on an arbitrary single-copy state.
pub fn gkkt_average<R: Rng + ?Sized>(state: &Operator, n: usize, rng: &mut R) -> Result<Mat> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    let d = state.dim();
    let mut sum = Mat::zeros(d, d);
    for _ in 0..n {
        sum += gkkt_round_on(state.matrix(), rng);
    }
    Ok(sum / re(n as f64))
}

/// Top eigenvector; among numerically equal maxima the lowest index wins.
pub fn top_eigenvector(m: &Mat) -> Vector {
    let eig = eigh(m);
    let top = *eig.values.last().expect("non-empty matrix");
    let idx = (0..eig.values.len())
        .find(|&i| (eig.values[i] - top).abs() <= 1e-12 * top.abs().max(1.0))
        .expect("maximum exists");
    eig.vectors.column(idx).into_owned()
}

/// GKKT pure-state estimate: top eigenvector of the `n`-round average.
pub fn gkkt_estimate<R: Rng + ?Sized>(psi: &PureState, n: usize, rng: &mut R) -> Result<PureState> {
    let avg = gkkt_average(&psi.density(), n, rng)?;
    PureState::normalized(psi.shape().clone(), top_eigenvector(&avg))
}

/// Exact Hayashi outcome for the product input `|ψ⟩^⊗n`.
pub fn hayashi_sample_product<R: Rng + ?Sized>(psi: &PureState, n: usize, rng: &mut R) -> Result<PureState> {
    let dim = psi.dim();
    if dim == 1 {
        return Ok(psi.clone());
    }
    let x = Beta::new((n + 1) as f64, (dim - 1) as f64).map_err(|e| Error::Domain(e.to_string()))?.sample(rng);
    let a = psi.amplitudes();
    let mut perp = haar_vector(dim, rng);
    let overlap = a.dotc(&perp);
    perp -= a * overlap;
    let norm = perp.norm();
    if norm < 1e-12 {
        return Err(Error::Numerical("degenerate orthogonal direction".into()));
    }
    perp /= re(norm);
    let theta = rng.random::<f64>() * std::f64::consts::TAU;
    let v = a * re(x.sqrt()) + perp * (c(theta.cos(), theta.sin()) * (1.0 - x).sqrt());
    PureState::normalized(psi.shape().clone(), v)
}

/// Rejection sampler for Hayashi's POVM `{D[n]·|u⟩⟨u|^⊗n du}` on a state in `∨^n ℂ^D`.
#[derive(Clone, Debug)]
pub struct SymmetricSampler {
    n: usize,
    dim: usize,
    values: Vec<f64>,
    vectors: Mat,
    lambda_max: f64,
    sym_dim: f64,
}

#[derive(Clone, Debug)]
pub struct HayashiDraw {
    pub state: Vector,
    pub proposals: u64,
}

impl SymmetricSampler {
    /// Validates `psi_sym` (PSD, unit trace, symmetric support) and keeps its non-zero spectrum.
    pub fn new(psi_sym: &Operator, n: usize, dim: usize) -> Result<Self> {
        if psi_sym.dim() != dim.pow(n as u32) {
            return Err(Error::Shape(format!("operator of dimension {} is not on (ℂ^{dim})^⊗{n}", psi_sym.dim())));
        }
        if !psi_sym.is_psd(1e-9) || !psi_sym.is_unit_trace(1e-9) {
            return Err(Error::Domain("Hayashi input is not a density matrix".into()));
        }
        if n <= MAX_GROUP_DEGREE && symmetric_leakage(psi_sym.matrix(), n, dim)? > 1e-9 {
            return Err(Error::Domain("Hayashi input is not supported in the symmetric subspace".into()));
        }
        let eig = psi_sym.eigh();
        let keep: Vec<usize> = (0..eig.values.len()).filter(|&i| eig.values[i] > 1e-12).collect();
        let values = keep.iter().map(|&i| eig.values[i]).collect();
        let vectors = Mat::from_fn(eig.vectors.nrows(), keep.len(), |r, k| eig.vectors[(r, keep[k])]);
        Self::from_spectrum(values, vectors, n, dim)
    }

    /// Trusted spectral form `Σ_i values[i]·|v_i⟩⟨v_i|` with orthonormal columns `v_i`.
    pub fn from_spectrum(values: Vec<f64>, vectors: Mat, n: usize, dim: usize) -> Result<Self> {
        if values.len() != vectors.ncols() || vectors.nrows() != dim.pow(n as u32) {
            return Err(Error::Shape("spectrum does not match the eigenvector matrix".into()));
        }
        let lambda_max = values.iter().copied().fold(0.0, f64::max);
        if lambda_max <= 0.0 {
            return Err(Error::Domain("Hayashi input has no positive eigenvalue".into()));
        }
        let sampler = SymmetricSampler { n, dim, values, vectors, lambda_max, sym_dim: sym_dim_f64(n, dim) };
        if sampler.acceptance() < MIN_ACCEPTANCE {
            return Err(Error::SamplerAbort(format!(
                "expected acceptance {:.3e} below {MIN_ACCEPTANCE:e} (D[n] = {}, λ_max = {:.3e})",
                sampler.acceptance(),
                sampler.sym_dim,
                lambda_max
            )));
        }
        Ok(sampler)
    }

    /// Expected acceptance rate `1/(D[n]·λ_max)`.
    pub fn acceptance(&self) -> f64 {
        1.0 / (self.sym_dim * self.lambda_max)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `⟨u^⊗n|ψ_sym|u^⊗n⟩`.
    pub fn overlap(&self, u: &Vector) -> f64 {
        let mut power = u.clone();
        for _ in 1..self.n {
            power = power.kronecker(u);
        }
        let amps = self.vectors.adjoint() * power;
        self.values.iter().zip(amps.iter()).map(|(l, a)| l * a.norm_sqr()).sum()
    }

    /// Outcome density with respect to the Haar measure, `D[n]·⟨u^⊗n|ψ_sym|u^⊗n⟩`.
    pub fn density(&self, u: &Vector) -> f64 {
        self.sym_dim * self.overlap(u)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<HayashiDraw> {
        let budget = (100.0 / self.acceptance()).ceil().max(1e4) as u64;
        for proposals in 1..=budget {
            let u = haar_vector(self.dim, rng);
            if rng.random::<f64>() * self.lambda_max < self.overlap(&u) {
                return Ok(HayashiDraw { state: u, proposals });
            }
        }
        Err(Error::SamplerAbort(format!("no acceptance in {budget} proposals")))
    }
}

/// One Hayashi outcome for a general symmetric state.
pub fn hayashi_sample_general<R: Rng + ?Sized>(
    psi_sym: &Operator,
    n: usize,
    dim: usize,
    rng: &mut R,
) -> Result<(Vector, f64)> {
    let sampler = SymmetricSampler::new(psi_sym, n, dim)?;
    let draw = sampler.sample(rng)?;
    Ok((draw.state, sampler.acceptance()))
}

/// `((D+n)/n)|v⟩⟨v| − I/n`.
pub fn gps_estimate(v: &PureState, n: usize) -> Result<Operator> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    let dim = v.dim();
    let nf = n as f64;
    let m = density_of(v) * re((dim as f64 + nf) / nf) - Mat::identity(dim, dim) * re(1.0 / nf);
    Operator::new(v.shape().clone(), m)
}

/// Draws `|v⟩` with density `d·⟨v|σ|v⟩` against the Haar measure.
pub fn uniform_povm_outcome<R: Rng + ?Sized>(sigma: &Operator, rng: &mut R) -> Result<Vector> {
    let d = sigma.dim();
    let top = sigma.eigh().max_abs();
    if top <= 0.0 {
        return Err(Error::Domain("uniform POVM on a zero operator".into()));
    }
    loop {
        let v = haar_vector(d, rng);
        let w = v.dotc(&(sigma.matrix() * &v)).re;
        if rng.random::<f64>() * top < w {
            return Ok(v);
        }
    }
}

/// Average of `n` rounds of `(d+1)|v⟩⟨v| − I` under the uniform POVM.
pub fn standard_unentangled_estimate<R: Rng + ?Sized>(sigma: &Operator, n: usize, rng: &mut R) -> Result<Operator> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    if !sigma.is_psd(1e-9) || !sigma.is_unit_trace(1e-9) {
        return Err(Error::Domain("input is not a density matrix".into()));
    }
    let d = sigma.dim();
    let mut sum = Mat::zeros(d, d);
    for _ in 0..n {
        let v = uniform_povm_outcome(sigma, rng)?;
        sum += projector(&v) * re((d + 1) as f64) - Mat::identity(d, d);
    }
    Operator::new(sigma.shape().clone(), sum / re(n as f64))
}

fn trace_out_purifier(v: &Mat, d: usize, r: usize) -> Result<Mat> {
    let op = Operator::new(RegisterShape::new(vec![d, r])?, v.clone())?;
    Ok(partial_trace(&op, &[0])?.into_matrix())
}

/// Mix reduction on product input: one random purification, then the inner estimator on `|ρ̃⟩^⊗n`.
pub fn mix_pipeline<R: Rng + ?Sized>(
    rho: &Operator,
    r: usize,
    n: usize,
    inner: InnerEstimator,
    rng: &mut R,
) -> Result<EstimatorSample> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    let d = rho.dim();
    let purified = random_purification(rho, r, rng)?;
    let (algorithm, v_mat) = match inner {
        InnerEstimator::Gkkt => (Algorithm::MixGkkt.name(), density_of(&gkkt_estimate(&purified, n, rng)?)),
        InnerEstimator::Hayashi => ("mix-hayashi", density_of(&hayashi_sample_product(&purified, n, rng)?)),
        InnerEstimator::Gps => {
            let v = hayashi_sample_product(&purified, n, rng)?;
            (Algorithm::MixGps.name(), gps_estimate(&v, n)?.into_matrix())
        }
    };
    let estimate = Operator::from_matrix(trace_out_purifier(&v_mat, d, r)?)?;
    Ok(EstimatorSample { estimate, meta: SampleMeta { algorithm: algorithm.to_string(), ..SampleMeta::default() } })
}

/// How Mix⁺ realizes the weak Schur sample, quasi-purification and Hayashi steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MixPlusBackend {
    /// Dense for small `n`, the qubit sampler for `d = 2` beyond that.
    #[default]
    Auto,
    /// Explicit Schur transforms and rejection sampling on `∨^n(ℂ^d ⊗ ℂ^ℓ)`.
    Dense,
    /// Exact conditional sampler for `d = 2` at any `n`.
    Qubit,
}

const DENSE_MIX_PLUS_MAX_N: usize = 4;

/// Mix⁺(GPS): weak Schur sampling, quasi-purification at rank `ℓ(λ)`, Hayashi and GPS.
pub fn mix_plus_pipeline<R: Rng + ?Sized>(
    rho: &Operator,
    n: usize,
    backend: MixPlusBackend,
    rng: &mut R,
) -> Result<EstimatorSample> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    if !rho.is_psd(1e-9) || !rho.is_unit_trace(1e-9) {
        return Err(Error::Domain("input is not a density matrix".into()));
    }
    let d = rho.dim();
    let dense_ok =
        n <= DENSE_MIX_PLUS_MAX_N && (d * d).checked_pow(n as u32).is_some_and(|v| v <= crate::tensor::dim_cap());
    match backend {
        MixPlusBackend::Dense => mix_plus_dense(rho, n, rng),
        MixPlusBackend::Qubit => mix_plus_qubit(rho, n, rng),
        MixPlusBackend::Auto if dense_ok => mix_plus_dense(rho, n, rng),
        MixPlusBackend::Auto if d == 2 => mix_plus_qubit(rho, n, rng),
        MixPlusBackend::Auto => Err(Error::Unsupported(format!("Mix⁺ at d = {d}, n = {n} exceeds the dense backend"))),
    }
}

fn mix_plus_dense<R: Rng + ?Sized>(rho: &Operator, n: usize, rng: &mut R) -> Result<EstimatorSample> {
    let d = rho.dim();
    let sd = SchurDecomposition::cached(n, d)?;
    let power = tensor_power(rho, n)?;
    let (lambda, block) = sd.weak_schur_sample(&power, rng)?;
    let purified = quasi_purify(&block, &lambda)?;
    let ell = purified.rank;
    let ds = DoubleSchur::cached(n, d, ell)?;
    let (values, vectors) = purified.spectrum(&ds)?;
    let sampler = SymmetricSampler::from_spectrum(values, vectors, n, d * ell)?;
    let draw = sampler.sample(rng)?;
    let estimate = purified_gps_marginal(&draw.state, d, ell, n)?;
    Ok(EstimatorSample {
        estimate,
        meta: SampleMeta {
            algorithm: Algorithm::MixPlusGps.to_string(),
            lambda: Some(lambda),
            acceptance: Some(sampler.acceptance()),
            clipped: false,
        },
    })
}

/// `tr_B` of the GPS estimate for an outcome `v ∈ ℂ^d ⊗ ℂ^ℓ`.
fn purified_gps_marginal(v: &Vector, d: usize, ell: usize, n: usize) -> Result<Operator> {
    let sigma = trace_out_purifier(&projector(v), d, ell)?;
    Operator::from_matrix(gps_marginal(&sigma, d, ell, n))
}

/// `((dℓ+n)/n)·σ − (ℓ/n)·I_d`.
fn gps_marginal(sigma: &Mat, d: usize, ell: usize, n: usize) -> Mat {
    let nf = n as f64;
    sigma * re(((d * ell) as f64 + nf) / nf) - Mat::identity(d, d) * re(ell as f64 / nf)
}

/// `ln(dim λ · s_λ(p, q))` for the two-row shape `(n−k, k)`, `p ≥ q`.
pub fn qubit_log_block_weight(n: usize, k: usize, p: f64, q: f64) -> f64 {
    if 2 * k > n {
        return f64::NEG_INFINITY;
    }
    if k > 0 && q <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let ln_binom = |a: usize, b: usize| statrs::function::factorial::ln_binomial(a as u64, b as u64);
    // dim(n−k, k) = C(n,k)·(n−2k+1)/(n−k+1)
    let ln_dim = ln_binom(n, k) + ((n - 2 * k + 1) as f64).ln() - ((n - k + 1) as f64).ln();
    let m = n - 2 * k;
    let ln_pq = if k == 0 { 0.0 } else { k as f64 * (p.ln() + q.ln()) };
    ln_dim + ln_pq + ln_complete_homogeneous(m, p, q)
}

/// `ln h_m(p, q)` for `p ≥ q ≥ 0`.
fn ln_complete_homogeneous(m: usize, p: f64, q: f64) -> f64 {
    let t = q / p;
    let ratio = if 1.0 - t < 1e-9 { (m + 1) as f64 } else { (1.0 - t.powi(m as i32 + 1)) / (1.0 - t) };
    m as f64 * p.ln() + ratio.ln()
}

/// Two-row weak Schur sample for `ρ^⊗n`, `ρ` a qubit state with eigenvalues `p ≥ q`.
pub fn qubit_weak_schur_sample<R: Rng + ?Sized>(n: usize, p: f64, q: f64, rng: &mut R) -> usize {
    let weights: Vec<f64> = (0..=n / 2).map(|k| qubit_log_block_weight(n, k, p, q)).collect();
    let top = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let probs: Vec<f64> = weights.iter().map(|w| (w - top).exp()).collect();
    let total: f64 = probs.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (k, p) in probs.iter().enumerate() {
        if u < *p {
            return k;
        }
        u -= p;
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Unit `w ∈ ℂ²` with density `∝ ⟨w|ρ|w⟩^m` against Haar, in the basis `(e_p, e_q)`.
fn qubit_tilted_direction<R: Rng + ?Sized>(m: usize, p: f64, q: f64, rng: &mut R) -> Vector {
    // With x = |w_p|² uniform under Haar, y = q + (p−q)x has density ∝ y^m on [q, p].
    let t = q / p;
    let x = if p - q < 1e-12 {
        rng.random::<f64>()
    } else {
        let e = (m + 1) as f64;
        let lo = t.powf(e);
        let y_over_p = (lo + rng.random::<f64>() * (1.0 - lo)).powf(1.0 / e);
        ((y_over_p - t) / (1.0 - t)).clamp(0.0, 1.0)
    };
    let theta = rng.random::<f64>() * std::f64::consts::TAU;
    Vector::from_vec(vec![re(x.sqrt()), c(theta.cos(), theta.sin()) * (1.0 - x).sqrt()])
}

fn mix_plus_qubit<R: Rng + ?Sized>(rho: &Operator, n: usize, rng: &mut R) -> Result<EstimatorSample> {
    if rho.dim() != 2 {
        return Err(Error::Unsupported("the qubit Mix⁺ backend needs d = 2".into()));
    }
    let eig = rho.eigh();
    let (p, q) = (eig.values[1].max(0.0), eig.values[0].max(0.0));
    let frame = Mat::from_fn(2, 2, |i, j| eig.vectors[(i, 1 - j)]);
    let k = qubit_weak_schur_sample(n, p, q, rng);
    let lambda = YoungDiagram::new(if k == 0 { vec![n] } else { vec![n - k, k] })?;
    let nf = n as f64;
    let local = if k == 0 {
        let u = qubit_tilted_direction(n, p, q, rng);
        projector(&u) * re((2.0 + nf) / nf) - Mat::identity(2, 2) * re(1.0 / nf)
    } else {
        let m = n - 2 * k;
        let w = qubit_tilted_direction(m, p, q, rng);
        let tilted = Vector::from_vec(vec![w[0] * p.sqrt(), w[1] * q.sqrt()]);
        let wp = &tilted / re(tilted.norm());
        // Frame with first column w′.
        let frame_w = Mat::from_row_slice(2, 2, &[wp[0], -wp[1].conj(), wp[1], wp[0].conj()]);
        let kk = k + 2;
        let t = Beta::new((kk + m) as f64, kk as f64).map_err(|e| Error::Domain(e.to_string()))?.sample(rng);
        let a = haar_vector(kk, rng);
        let b = haar_vector(kk, rng);
        let mut g = Mat::zeros(2, kk);
        for j in 0..kk {
            g[(0, j)] = a[j] * t.sqrt();
            g[(1, j)] = b[j] * (1.0 - t).sqrt();
        }
        let sigma0 = &g * g.adjoint();
        let sigma = &frame_w * sigma0 * frame_w.adjoint();
        gps_marginal(&sigma, 2, 2, n)
    };
    let estimate = &frame * local * frame.adjoint();
    Ok(EstimatorSample {
        estimate: Operator::new(rho.shape().clone(), estimate)?,
        meta: SampleMeta {
            algorithm: Algorithm::MixPlusGps.to_string(),
            lambda: Some(lambda),
            ..SampleMeta::default()
        },
    })
}

/// Clips negative eigenvalues and renormalizes.
pub fn clip_to_density(m: &Mat) -> Result<Mat> {
    let eig = eigh(m);
    let clipped = eig.map(|v| v.max(0.0));
    let tr = clipped.trace().re;
    if tr <= 0.0 {
        return Err(Error::Numerical("clipped estimate has zero trace".into()));
    }
    Ok(clipped / re(tr))
}
