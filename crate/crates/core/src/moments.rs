//! Exact first and second moments of the GPS-based estimators, computed from
//! moment operators instead of sampling, and the functional checks on the
//! lower-order term.

use crate::error::{Error, Result};
use crate::purification::{DoubleSchur, EprSpecht, PurifiedBlockState};
use crate::schur::SchurDecomposition;
use crate::symmetric::{contract_with_state, lower_moment_element, moment_element, symmetric_leakage};
use crate::tensor::{
    ginibre, partial_trace, random_hermitian, re, rel_frobenius, swap, tensor_power, Mat, Operator, RegisterShape,
};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Tolerance for the sign and symmetry checks on the lower-order term.
pub const PROPERTY_TOL: f64 = 1e-9;

/// Random probes per functional check.
pub const PROPERTY_PROBES: usize = 50;

#[derive(Clone, Debug)]
pub struct SymMoments {
    /// `E[σ̂]` on `ℂ^D`.
    pub first: Mat,
    /// `E[σ̂ ⊗ σ̂]` on `(ℂ^D)^⊗2`.
    pub second: Mat,
}

fn check_symmetric(psi_sym: &Mat, n: usize, dim: usize) -> Result<()> {
    let leak = symmetric_leakage(psi_sym, n, dim)?;
    if leak > 1e-9 {
        return Err(Error::Domain(format!("state leaks {leak:.3e} outside the symmetric subspace")));
    }
    Ok(())
}

/// `tr_{1..n}(M^(k)·ψ_sym ⊗ I^⊗k)` for `k = 1, 2`.
pub fn exact_moments_on_sym_state(psi_sym: &Mat, n: usize, dim: usize) -> Result<SymMoments> {
    check_symmetric(psi_sym, n, dim)?;
    let first = contract_with_state(&moment_element(1, n, dim)?, psi_sym, n, 1, dim)?;
    let second = contract_with_state(&moment_element(2, n, dim)?, psi_sym, n, 2, dim)?;
    Ok(SymMoments { first, second })
}

/// `tr_{1..n}(Lower_mom·ψ_sym ⊗ I^⊗2)`, computed on its own.
pub fn lower_on_sym_state(psi_sym: &Mat, n: usize, dim: usize) -> Result<Mat> {
    let g = lower_moment_element(n, dim)?.extend(n + 2);
    contract_with_state(&g, psi_sym, n, 2, dim)
}

/// Values of the four functional checks on a candidate lower-order term.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LowerProperties {
    /// `tr(SWAP·L)`.
    pub swap_trace: f64,
    /// `min_O tr(O⊗O·L)` over random Hermitian `O`.
    pub min_obs_square: f64,
    /// `max |tr(O₁⊗O₂·L) − tr(O₂⊗O₁·L)|`.
    pub max_pair_asymmetry: f64,
    /// `min_Q Re tr(Q†⊗Q·L)` over random complex `Q`.
    pub min_q_sandwich: f64,
    pub swap_trace_nonneg: bool,
    pub obs_square_nonneg: bool,
    pub hermitian_pair_symmetric: bool,
    pub q_sandwich_nonneg: bool,
}

impl LowerProperties {
    pub fn all_pass(&self) -> bool {
        self.swap_trace_nonneg && self.obs_square_nonneg && self.hermitian_pair_symmetric && self.q_sandwich_nonneg
    }
}

fn pair_trace(a: &Mat, b: &Mat, l: &Mat) -> crate::tensor::C64 {
    (a.kronecker(b) * l).trace()
}

/// Runs the four checks with `PROPERTY_PROBES` random probes each.
pub fn lower_term_properties<R: Rng + ?Sized>(l: &Mat, d: usize, rng: &mut R) -> Result<LowerProperties> {
    if l.nrows() != d * d || l.ncols() != d * d {
        return Err(Error::Shape(format!("lower term is not on (ℂ^{d})^⊗2")));
    }
    if crate::tensor::frobenius(&(l - l.adjoint())) > 1e-9 * l.norm().max(1.0) {
        return Err(Error::Domain("lower term is not Hermitian".into()));
    }
    let swap_trace = (swap(d).matrix() * l).trace().re;
    let mut min_obs_square = f64::INFINITY;
    let mut max_pair_asymmetry: f64 = 0.0;
    let mut min_q_sandwich = f64::INFINITY;
    for _ in 0..PROPERTY_PROBES {
        let o1 = random_hermitian(d, rng);
        let o2 = random_hermitian(d, rng);
        min_obs_square = min_obs_square.min(pair_trace(&o1, &o1, l).re);
        max_pair_asymmetry = max_pair_asymmetry.max((pair_trace(&o1, &o2, l) - pair_trace(&o2, &o1, l)).norm());
        let q = ginibre(d, d, rng);
        min_q_sandwich = min_q_sandwich.min(pair_trace(&q.adjoint(), &q, l).re);
    }
    Ok(LowerProperties {
        swap_trace,
        min_obs_square,
        max_pair_asymmetry,
        min_q_sandwich,
        swap_trace_nonneg: swap_trace >= -PROPERTY_TOL,
        obs_square_nonneg: min_obs_square >= -PROPERTY_TOL,
        hermitian_pair_symmetric: max_pair_asymmetry <= PROPERTY_TOL,
        q_sandwich_nonneg: min_q_sandwich >= -PROPERTY_TOL,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MainCoefficients {
    pub rho_rho: f64,
    pub cross: f64,
    pub swap: f64,
}

/// `c_ρρ·ρ⊗ρ + c_cross·(ρ⊗I + I⊗ρ)·SWAP + c_swap·SWAP`.
pub fn main_terms(rho: &Mat, c: MainCoefficients) -> Mat {
    let d = rho.nrows();
    let id = Mat::identity(d, d);
    let s = swap(d).into_matrix();
    rho.kronecker(rho) * re(c.rho_rho) + (rho.kronecker(&id) + id.kronecker(rho)) * &s * re(c.cross) + s * re(c.swap)
}

/// `tr(SWAP·X)/d²`, the SWAP component of `X` under the trace inner product.
pub fn swap_component(x: &Mat, d: usize) -> f64 {
    (swap(d).matrix() * x).trace().re / (d * d) as f64
}

#[derive(Clone, Debug)]
pub struct SecondMomentReport {
    pub d: usize,
    pub n: usize,
    pub first: Mat,
    pub second: Mat,
    /// `main − E[ρ̂⊗ρ̂]`.
    pub lower: Mat,
    pub coefficients: MainCoefficients,
    /// Relative Frobenius distance of `E[ρ̂]` from `ρ`.
    pub first_moment_error: f64,
    /// Relative Frobenius distance between `lower` and the separately contracted `Lower_mom` term.
    pub lower_direct_error: f64,
    /// SWAP component of `E[ρ̂⊗ρ̂] + Lower − c_ρρ ρ⊗ρ − c_cross (ρ⊗I + I⊗ρ)SWAP`.
    pub fitted_swap: f64,
    pub expected_length: Option<f64>,
    pub properties: LowerProperties,
    /// `tr(E[ρ̂⊗ρ̂]·SWAP) − tr(ρ²) = E‖ρ̂‖²_F − ‖ρ‖²_F`.
    pub frobenius_variance: f64,
}

/// Scalar summary for JSON output.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MomentSummary {
    pub d: usize,
    pub n: usize,
    pub coefficients: MainCoefficients,
    pub fitted_swap: f64,
    pub first_moment_error: f64,
    pub lower_direct_error: f64,
    pub expected_length: Option<f64>,
    pub frobenius_variance: f64,
    pub properties: LowerProperties,
}

impl SecondMomentReport {
    pub fn summary(&self) -> MomentSummary {
        MomentSummary {
            d: self.d,
            n: self.n,
            coefficients: self.coefficients,
            fitted_swap: self.fitted_swap,
            first_moment_error: self.first_moment_error,
            lower_direct_error: self.lower_direct_error,
            expected_length: self.expected_length,
            frobenius_variance: self.frobenius_variance,
            properties: self.properties.clone(),
        }
    }
}

fn trace_purifier_single(m: &Mat, d: usize, r: usize) -> Result<Mat> {
    Ok(partial_trace(&Operator::new(RegisterShape::new(vec![d, r])?, m.clone())?, &[0])?.into_matrix())
}

fn trace_purifier_pair(m: &Mat, d: usize, r: usize) -> Result<Mat> {
    Ok(partial_trace(&Operator::new(RegisterShape::new(vec![d, r, d, r])?, m.clone())?, &[0, 2])?.into_matrix())
}

/// Moments of `tr_B` of the GPS estimate run on one symmetric state over `ℂ^d ⊗ ℂ^r`.
struct PurifiedMoments {
    first: Mat,
    second: Mat,
    lower: Mat,
}

fn purified_moments(state: &Mat, n: usize, d: usize, r: usize) -> Result<PurifiedMoments> {
    let dim = d * r;
    let m = exact_moments_on_sym_state(state, n, dim)?;
    Ok(PurifiedMoments {
        first: trace_purifier_single(&m.first, d, r)?,
        second: trace_purifier_pair(&m.second, d, r)?,
        lower: trace_purifier_pair(&lower_on_sym_state(state, n, dim)?, d, r)?,
    })
}

fn check_state(rho: &Operator) -> Result<()> {
    if !rho.is_psd(1e-9) || !rho.is_unit_trace(1e-9) {
        return Err(Error::Domain("input is not a density matrix".into()));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn assemble<R: Rng + ?Sized>(
    rho: &Operator,
    n: usize,
    first: Mat,
    second: Mat,
    lower_direct: Mat,
    coefficients: MainCoefficients,
    expected_length: Option<f64>,
    rng: &mut R,
) -> Result<SecondMomentReport> {
    let d = rho.dim();
    let main = main_terms(rho.matrix(), coefficients);
    let lower = &main - &second;
    let without_swap =
        &second + &lower_direct - main_terms(rho.matrix(), MainCoefficients { swap: 0.0, ..coefficients });
    let frobenius_variance = (swap(d).matrix() * &second).trace().re - (rho.matrix() * rho.matrix()).trace().re;
    Ok(SecondMomentReport {
        d,
        n,
        first_moment_error: rel_frobenius(&first, rho.matrix()),
        lower_direct_error: rel_frobenius(&lower, &lower_direct),
        fitted_swap: swap_component(&without_swap, d),
        properties: lower_term_properties(&lower, d, rng)?,
        first,
        second,
        lower,
        coefficients,
        expected_length,
        frobenius_variance,
    })
}

/// Exact moments of Mix(GPS) at purification rank `r` with `n` copies.
pub fn mix_gps_moments<R: Rng + ?Sized>(rho: &Operator, r: usize, n: usize, rng: &mut R) -> Result<SecondMomentReport> {
    check_state(rho)?;
    let d = rho.dim();
    let ds = DoubleSchur::cached(n, d, r)?;
    let output = ds.apply(&tensor_power(rho, n)?)?;
    let m = purified_moments(output.matrix(), n, d, r)?;
    let nf = n as f64;
    let coefficients = MainCoefficients { rho_rho: (nf - 1.0) / nf, cross: 1.0 / nf, swap: r as f64 / (nf * nf) };
    assemble(rho, n, m.first, m.second, m.lower, coefficients, None, rng)
}

/// The quasi-purified state `τ_λ(ρ)` on `(ℂ^d ⊗ ℂ^ℓ(λ))^⊗n` for every block with positive weight,
/// paired with the weight `p_λ = dim(λ)·s_λ(ρ)`.
pub fn quasi_purified_branches(rho: &Operator, n: usize) -> Result<Vec<(f64, PurifiedBlockState, Operator)>> {
    check_state(rho)?;
    let d = rho.dim();
    let sd = SchurDecomposition::cached(n, d)?;
    let mut out = Vec::new();
    for b in sd.blocks() {
        let nu = sd.weyl_block(&b.lambda, rho)?;
        let s = nu.trace().re;
        let p = b.specht_dim() as f64 * s;
        if p <= 1e-15 {
            continue;
        }
        let ell = b.lambda.length();
        let state = PurifiedBlockState {
            lambda: b.lambda.clone(),
            rank: ell,
            epr: EprSpecht::new(b.lambda.clone()),
            weyl: nu / re(s),
            purifier_dim: b.lambda.weyl_dim(ell) as usize,
        };
        let ds = DoubleSchur::cached(n, d, ell)?;
        let tau = state.to_computational(&ds)?;
        out.push((p, state, tau));
    }
    Ok(out)
}

/// Exact moments of Mix⁺(GPS) with `n` copies.
pub fn mix_plus_gps_moments<R: Rng + ?Sized>(rho: &Operator, n: usize, rng: &mut R) -> Result<SecondMomentReport> {
    let d = rho.dim();
    let mut first = Mat::zeros(d, d);
    let mut second = Mat::zeros(d * d, d * d);
    let mut lower = Mat::zeros(d * d, d * d);
    let mut expected_length = 0.0;
    for (p, state, tau) in quasi_purified_branches(rho, n)? {
        let m = purified_moments(tau.matrix(), n, d, state.rank)?;
        first += m.first * re(p);
        second += m.second * re(p);
        lower += m.lower * re(p);
        expected_length += p * state.rank as f64;
    }
    let nf = n as f64;
    let coefficients =
        MainCoefficients { rho_rho: (nf - 1.0) / nf, cross: 1.0 / nf, swap: expected_length / (nf * nf) };
    assemble(rho, n, first, second, lower, coefficients, Some(expected_length), rng)
}

/// `‖E_λ tr_B tr_{k+1..n}(τ_λ) − ρ^⊗k‖` relative Frobenius, for `1 ≤ k ≤ n`.
pub fn partial_trace_helper_residual(rho: &Operator, n: usize, k: usize) -> Result<f64> {
    if k == 0 || k > n {
        return Err(Error::Domain(format!("k = {k} outside 1..={n}")));
    }
    let d = rho.dim();
    let mut acc = Mat::zeros(d.pow(k as u32), d.pow(k as u32));
    for (p, _, tau) in quasi_purified_branches(rho, n)? {
        let keep: Vec<usize> = (0..k).map(|i| 2 * i).collect();
        acc += partial_trace(&tau, &keep)?.into_matrix() * re(p);
    }
    Ok(rel_frobenius(&acc, tensor_power(rho, k)?.matrix()))
}

/// Exact `E[σ̂_avg ⊗ σ̂_avg]` of the standard unentangled estimator with `n` rounds:
/// `((n−1)/n)·σ⊗σ + (1/n)·E_1`, where a single round gives
/// `E_1 = ((d+1)/(d+2))·(SWAP + (σ⊗I + I⊗σ)·SWAP) − (1/(d+2))·(I + σ⊗I + I⊗σ)`.
pub fn standard_estimator_second_moment(sigma: &Mat, n: usize) -> Mat {
    let d = sigma.nrows();
    let df = d as f64;
    let nf = n as f64;
    let id = Mat::identity(d, d);
    let s = swap(d).into_matrix();
    let marg = sigma.kronecker(&id) + id.kronecker(sigma);
    let single =
        (&s + &marg * &s) * re((df + 1.0) / (df + 2.0)) - (Mat::identity(d * d, d * d) + &marg) * re(1.0 / (df + 2.0));
    sigma.kronecker(sigma) * re((nf - 1.0) / nf) + single * re(1.0 / nf)
}

/// Lower term of the standard estimator against main coefficients `((n−1)/n, 1/n, 1/n)`:
/// `(1/(n(d+2)))·(I + σ⊗I + I⊗σ)·(I + SWAP)`.
pub fn standard_estimator_lower(sigma: &Mat, n: usize) -> Mat {
    let d = sigma.nrows();
    let id = Mat::identity(d, d);
    let s = swap(d).into_matrix();
    let marg = Mat::identity(d * d, d * d) + sigma.kronecker(&id) + id.kronecker(sigma);
    marg * (Mat::identity(d * d, d * d) + s) * re(1.0 / (n as f64 * (d as f64 + 2.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{frobenius, haar_state, random_density};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn sos_generator_passes_and_negative_swap_fails() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let x = random_hermitian(3, &mut rng);
        let l = x.kronecker(&x);
        assert!(lower_term_properties(&l, 3, &mut rng).unwrap().all_pass());
        let neg = swap(3).into_matrix() * re(-1.0);
        let p = lower_term_properties(&neg, 3, &mut rng).unwrap();
        assert!(!p.swap_trace_nonneg);
        assert!((p.swap_trace + 9.0).abs() < 1e-12);
    }

    #[test]
    fn pure_product_moments_match_corollary() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        for n in [2, 3] {
            let psi = haar_state(2, &mut rng).unwrap();
            let rho = psi.density();
            let power = tensor_power(&rho, n).unwrap();
            let m = exact_moments_on_sym_state(power.matrix(), n, 2).unwrap();
            assert!(rel_frobenius(&m.first, rho.matrix()) < 1e-10);
            let nf = n as f64;
            let c = MainCoefficients { rho_rho: (nf - 1.0) / nf, cross: 1.0 / nf, swap: 1.0 / (nf * nf) };
            let lower = main_terms(rho.matrix(), c) - &m.second;
            // The lower term is a positive combination of |u⟩⟨u|^⊗2, hence PSD.
            let eig = crate::tensor::eigh(&lower);
            assert!(eig.values[0] > -1e-12);
            let direct = lower_on_sym_state(power.matrix(), n, 2).unwrap();
            assert!(rel_frobenius(&lower, &direct) < 1e-10);
        }
    }

    #[test]
    fn maximally_mixed_qubit_expected_length() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let rho = Operator::from_matrix(Mat::identity(2, 2) * re(0.5)).unwrap();
        let rep = mix_plus_gps_moments(&rho, 2, &mut rng).unwrap();
        assert!((rep.expected_length.unwrap() - 1.25).abs() < 1e-12);
    }

    #[test]
    fn mix_and_mix_plus_reports() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let rho = random_density(2, 2, &mut rng).unwrap();
        let a = mix_gps_moments(&rho, 2, 2, &mut rng).unwrap();
        let b = mix_plus_gps_moments(&rho, 2, &mut rng).unwrap();
        for rep in [&a, &b] {
            assert!(rep.first_moment_error < 1e-9);
            assert!(rep.lower_direct_error < 1e-9, "{}", rep.lower_direct_error);
            assert!((rep.fitted_swap - rep.coefficients.swap).abs() < 1e-9);
            assert!(rep.properties.all_pass(), "{:?}", rep.properties);
            assert!(rep.frobenius_variance >= 0.0);
        }
        let gap = a.fitted_swap - b.fitted_swap;
        let expected = (2.0 - b.expected_length.unwrap()) / 4.0;
        assert!((gap - expected).abs() < 1e-9);
    }

    #[test]
    fn helper_lemma_small() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let rho = random_density(2, 2, &mut rng).unwrap();
        for k in [1, 2] {
            assert!(partial_trace_helper_residual(&rho, 3, k).unwrap() < 1e-9);
        }
    }

    #[test]
    fn standard_estimator_frobenius_variance() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let sigma = random_density(3, 2, &mut rng).unwrap().into_matrix();
        for n in [1, 4] {
            let second = standard_estimator_second_moment(&sigma, n);
            let var = (swap(3).matrix() * &second).trace().re - (&sigma * &sigma).trace().re;
            let purity = (&sigma * &sigma).trace().re;
            assert!((var - (9.0 + 3.0 - 1.0 - purity) / n as f64).abs() < 1e-12);
            let nf = n as f64;
            let c = MainCoefficients { rho_rho: (nf - 1.0) / nf, cross: 1.0 / nf, swap: 1.0 / nf };
            let lower = main_terms(&sigma, c) - &second;
            assert!(frobenius(&(lower - standard_estimator_lower(&sigma, n))) < 1e-12);
        }
    }
}
