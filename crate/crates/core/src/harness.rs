//! Experiment plumbing: configuration and its hash, per-trial RNG streams,
//! trial runners for every subcommand, and the two applications
//! (k-entangled averaging and plug-in shadow estimation).

use crate::error::{Error, Result};
use crate::estimators::{
    clip_to_density, gkkt_average, gkkt_estimate, gps_estimate, hayashi_sample_product, mix_pipeline,
    mix_plus_pipeline, standard_unentangled_estimate, top_eigenvector, Algorithm, EstimatorSample, InnerEstimator,
    MixPlusBackend, SampleMeta,
};
use crate::purification::{numerical_rank, random_purification, DoubleSchur};
use crate::stats::lower_median;
use crate::tensor::{
    c, fidelity, frobenius, random_density, re, rel_frobenius, tensor_power, trace_distance, Mat, Operator, PureState,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

/// Generator family and stream-derivation rule, recorded in output metadata.
pub const RNG_FAMILY: &str = "chacha20/sha256-stream-v1";

/// Deterministic stream for `(seed, tag, index)`: the ChaCha20 key is
/// `SHA-256("tomoforge" ‖ seed_le ‖ tag ‖ 0x00 ‖ index_le)`.
pub fn derive_rng(seed: u64, tag: &str, index: u64) -> ChaCha20Rng {
    let mut h = Sha256::new();
    h.update(b"tomoforge");
    h.update(seed.to_le_bytes());
    h.update(tag.as_bytes());
    h.update([0u8]);
    h.update(index.to_le_bytes());
    let key: [u8; 32] = h.finalize().into();
    ChaCha20Rng::from_seed(key)
}

/// Which state an experiment runs on.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum StateSpec {
    /// Ginibre-induced random state of the given rank.
    RandomRank(usize),
    MaximallyMixed,
    /// Operator JSON file.
    File(PathBuf),
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateSpec::RandomRank(k) => write!(f, "random-rank-{k}"),
            StateSpec::MaximallyMixed => f.write_str("maximally-mixed"),
            StateSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl FromStr for StateSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "maximally-mixed" {
            return Ok(StateSpec::MaximallyMixed);
        }
        if let Some(k) = s.strip_prefix("random-rank-") {
            let k: usize = k.parse().map_err(|_| Error::Domain(format!("bad rank in state spec '{s}'")))?;
            if k == 0 {
                return Err(Error::Domain("state rank must be at least 1".into()));
            }
            return Ok(StateSpec::RandomRank(k));
        }
        if let Some(p) = s.strip_prefix("file:") {
            return Ok(StateSpec::File(PathBuf::from(p)));
        }
        Err(Error::Domain(format!("unknown state spec '{s}' (expected random-rank-K, maximally-mixed or file:PATH)")))
    }
}

impl TryFrom<String> for StateSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<StateSpec> for String {
    fn from(s: StateSpec) -> String {
        s.to_string()
    }
}

fn check_density(rho: &Operator) -> Result<()> {
    if !rho.is_hermitian(1e-9) || !rho.is_psd(1e-9) || !rho.is_unit_trace(1e-9) {
        return Err(Error::Domain("state is not a density matrix".into()));
    }
    Ok(())
}

/// Materializes the state; random states draw from the `"state"` stream.
pub fn prepare_state(spec: &StateSpec, d: usize, seed: u64) -> Result<Operator> {
    let rho = match spec {
        StateSpec::RandomRank(k) => random_density(d, *k, &mut derive_rng(seed, "state", 0))?,
        StateSpec::MaximallyMixed => Operator::from_matrix(Mat::identity(d, d) * re(1.0 / d as f64))?,
        StateSpec::File(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Domain(format!("cannot read state file {}: {e}", path.display())))?;
            let op: Operator = serde_json::from_str(&text)
                .map_err(|e| Error::Domain(format!("bad state file {}: {e}", path.display())))?;
            Operator::from_matrix(op.into_matrix())?
        }
    };
    if rho.dim() != d {
        return Err(Error::Shape(format!("state has dimension {}, expected d = {d}", rho.dim())));
    }
    check_density(&rho)?;
    Ok(rho)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Tomography,
    Moments,
    PurifyCheck,
    PgmCheck,
    Shadows,
    SchurValidate,
    KEntangled,
}

/// Everything that determines a run. The output path is not part of it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub algorithm: Option<Algorithm>,
    pub d: usize,
    pub r: usize,
    pub n: usize,
    pub trials: usize,
    pub state: StateSpec,
    pub seed: u64,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    /// Copies per batch for k-entangled averaging.
    pub k: Option<usize>,
    /// Median-of-means repetitions for shadows.
    pub k_mom: Option<usize>,
    /// Copies per shadows round.
    pub n_prime: Option<usize>,
    pub observables: Option<PathBuf>,
    pub samples: Option<usize>,
    #[serde(skip)]
    pub out: PathBuf,
}

impl ExperimentConfig {
    pub fn new(command: Command, d: usize, seed: u64) -> Self {
        ExperimentConfig {
            command,
            algorithm: None,
            d,
            r: d,
            n: 1,
            trials: 1,
            state: StateSpec::RandomRank(d),
            seed,
            epsilon: None,
            delta: None,
            k: None,
            k_mom: None,
            n_prime: None,
            observables: None,
            samples: None,
            out: PathBuf::new(),
        }
    }

    /// Canonical JSON of the config (output path excluded).
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// First 16 hex digits of SHA-256 over the canonical JSON.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.r == 0 || self.n == 0 || self.trials == 0 {
            return Err(Error::Domain("d, r, n and trials must all be positive".into()));
        }
        if self.r > self.d {
            return Err(Error::Domain(format!("purification rank r = {} exceeds d = {}", self.r, self.d)));
        }
        if let StateSpec::RandomRank(k) = self.state {
            if k > self.d {
                return Err(Error::Domain(format!("state rank {k} exceeds d = {}", self.d)));
            }
        }
        Ok(())
    }
}

/// One tomography trial as written to CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TomographyRow {
    pub trial: u64,
    pub n: usize,
    pub d: usize,
    pub r: usize,
    pub algorithm: String,
    pub fidelity: f64,
    pub trace_distance: f64,
    pub lambda: Option<String>,
    pub seed: u64,
    /// Set when a non-PSD estimate was clipped before computing fidelity.
    #[serde(skip)]
    pub clipped: bool,
}

fn pure_input(rho: &Operator) -> Result<PureState> {
    if numerical_rank(rho) != 1 {
        return Err(Error::Domain("this algorithm needs a pure input state".into()));
    }
    PureState::normalized(rho.shape().clone(), top_eigenvector(rho.matrix()))
}

fn from_pure(algorithm: Algorithm, v: &PureState) -> Result<EstimatorSample> {
    Ok(EstimatorSample {
        estimate: v.density(),
        meta: SampleMeta { algorithm: algorithm.to_string(), ..SampleMeta::default() },
    })
}

/// One run of `algorithm` on `n` copies of `rho`.
pub fn run_algorithm<R: Rng + ?Sized>(
    algorithm: Algorithm,
    rho: &Operator,
    r: usize,
    n: usize,
    rng: &mut R,
) -> Result<EstimatorSample> {
    match algorithm {
        Algorithm::Gkkt if numerical_rank(rho) == 1 => from_pure(algorithm, &gkkt_estimate(&pure_input(rho)?, n, rng)?),
        Algorithm::Gkkt => {
            let avg = gkkt_average(rho, n, rng)?;
            Ok(EstimatorSample {
                estimate: Operator::new(rho.shape().clone(), clip_to_density(&avg)?)?,
                meta: SampleMeta { algorithm: algorithm.to_string(), clipped: true, ..SampleMeta::default() },
            })
        }
        Algorithm::Hayashi => from_pure(algorithm, &hayashi_sample_product(&pure_input(rho)?, n, rng)?),
        Algorithm::Gps => {
            let v = hayashi_sample_product(&pure_input(rho)?, n, rng)?;
            Ok(EstimatorSample {
                estimate: gps_estimate(&v, n)?,
                meta: SampleMeta { algorithm: algorithm.to_string(), ..SampleMeta::default() },
            })
        }
        Algorithm::MixGkkt => mix_pipeline(rho, r, n, InnerEstimator::Gkkt, rng),
        Algorithm::MixGps => mix_pipeline(rho, r, n, InnerEstimator::Gps, rng),
        Algorithm::MixPlusGps => mix_plus_pipeline(rho, n, MixPlusBackend::Auto, rng),
        Algorithm::Standard => Ok(EstimatorSample {
            estimate: standard_unentangled_estimate(rho, n, rng)?,
            meta: SampleMeta { algorithm: algorithm.to_string(), ..SampleMeta::default() },
        }),
    }
}

/// Fidelity against the PSD-clipped estimate (flagged when clipping changed it)
/// and trace distance against the raw estimate.
pub fn score(rho: &Operator, estimate: &Operator) -> Result<(f64, f64, bool)> {
    let td = trace_distance(rho, estimate)?;
    if estimate.is_psd(1e-9) && estimate.is_unit_trace(1e-9) {
        return Ok((fidelity(rho, estimate)?, td, false));
    }
    let clipped = Operator::new(estimate.shape().clone(), clip_to_density(estimate.matrix())?)?;
    Ok((fidelity(rho, &clipped)?, td, true))
}

/// All tomography trials, in parallel, sorted by trial index.
pub fn run_tomography(cfg: &ExperimentConfig, rho: &Operator) -> Result<Vec<TomographyRow>> {
    cfg.validate()?;
    let algorithm = cfg.algorithm.ok_or_else(|| Error::Domain("tomography needs an algorithm".into()))?;
    if matches!(algorithm, Algorithm::MixGkkt | Algorithm::MixGps) && numerical_rank(rho) > cfg.r {
        return Err(Error::Domain(format!("state rank {} exceeds r = {}", numerical_rank(rho), cfg.r)));
    }
    let mut rows: Vec<TomographyRow> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = derive_rng(cfg.seed, "tomography", t);
            let sample = run_algorithm(algorithm, rho, cfg.r, cfg.n, &mut rng)?;
            let (fid, td, clipped) = score(rho, &sample.estimate)?;
            Ok(TomographyRow {
                trial: t,
                n: cfg.n,
                d: cfg.d,
                r: cfg.r,
                algorithm: algorithm.to_string(),
                fidelity: fid,
                trace_distance: td,
                lambda: sample.meta.lambda.map(|l| l.to_string()),
                seed: cfg.seed,
                clipped: clipped || sample.meta.clipped,
            })
        })
        .collect::<Result<_>>()?;
    rows.sort_by_key(|r| r.trial);
    Ok(rows)
}

/// Average of `n_total / k` independent Mix⁺(GPS) estimates on batches of `k` copies.
#[derive(Clone, Debug)]
pub struct KEntangledEstimate {
    pub estimate: Operator,
    pub batches: usize,
    /// Copies left over when `k` does not divide `n_total`.
    pub dropped: usize,
}

pub fn run_k_entangled<R: Rng + ?Sized>(
    rho: &Operator,
    n_total: usize,
    k: usize,
    rng: &mut R,
) -> Result<KEntangledEstimate> {
    if k == 0 || k > n_total {
        return Err(Error::Domain(format!("batch size k = {k} must lie in 1..={n_total}")));
    }
    let batches = n_total / k;
    let d = rho.dim();
    let mut sum = Mat::zeros(d, d);
    for _ in 0..batches {
        sum += mix_plus_pipeline(rho, k, MixPlusBackend::Auto, rng)?.estimate.matrix();
    }
    Ok(KEntangledEstimate {
        estimate: Operator::new(rho.shape().clone(), sum / re(batches as f64))?,
        batches,
        dropped: n_total - batches * k,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KEntangledRow {
    pub trial: u64,
    pub n_total: usize,
    pub k: usize,
    pub batches: usize,
    pub d: usize,
    pub frobenius_sq_error: f64,
    pub fidelity: f64,
    pub trace_distance: f64,
    pub seed: u64,
}

/// k-entangled trials with `cfg.n` as the total copy count.
pub fn run_k_entangled_trials(cfg: &ExperimentConfig, rho: &Operator) -> Result<Vec<KEntangledRow>> {
    cfg.validate()?;
    let k = cfg.k.ok_or_else(|| Error::Domain("k-entangled needs --k".into()))?;
    let mut rows: Vec<KEntangledRow> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = derive_rng(cfg.seed, "k-entangled", t);
            let est = run_k_entangled(rho, cfg.n, k, &mut rng)?;
            let (fid, td, _) = score(rho, &est.estimate)?;
            let err = frobenius(&(est.estimate.matrix() - rho.matrix()));
            Ok(KEntangledRow {
                trial: t,
                n_total: cfg.n,
                k,
                batches: est.batches,
                d: cfg.d,
                frobenius_sq_error: err * err,
                fidelity: fid,
                trace_distance: td,
                seed: cfg.seed,
            })
        })
        .collect::<Result<_>>()?;
    rows.sort_by_key(|r| r.trial);
    Ok(rows)
}

/// A Hermitian observable with operator norm at most one.
#[derive(Clone, Debug)]
pub struct Observable {
    id: String,
    matrix: Mat,
}

impl Observable {
    pub fn new(id: impl Into<String>, matrix: Mat) -> Result<Self> {
        let id = id.into();
        let op = Operator::from_matrix(matrix)?;
        if !op.is_hermitian(1e-9) {
            return Err(Error::Domain(format!("observable '{id}' is not Hermitian")));
        }
        let norm = op.eigh().max_abs();
        if norm > 1.0 + 1e-9 {
            return Err(Error::Domain(format!("observable '{id}' has operator norm {norm} > 1")));
        }
        Ok(Observable { id, matrix: op.into_matrix() })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn matrix(&self) -> &Mat {
        &self.matrix
    }

    pub fn expectation(&self, state: &Mat) -> f64 {
        (state * &self.matrix).trace().re
    }
}

#[derive(Deserialize)]
struct ObservableJson {
    id: String,
    re: Vec<Vec<f64>>,
    #[serde(default)]
    im: Option<Vec<Vec<f64>>>,
}

#[derive(Deserialize)]
struct ObservableFile {
    observables: Vec<ObservableJson>,
}

/// Parses `{"observables": [{"id", "re": [[..]], "im": [[..]]}]}` and validates every entry.
pub fn parse_observables(text: &str, d: usize) -> Result<Vec<Observable>> {
    let file: ObservableFile =
        serde_json::from_str(text).map_err(|e| Error::Domain(format!("bad observables file: {e}")))?;
    if file.observables.is_empty() {
        return Err(Error::Domain("observables file lists no observables".into()));
    }
    file.observables
        .into_iter()
        .map(|o| {
            let rows_ok = |m: &Vec<Vec<f64>>| m.len() == d && m.iter().all(|row| row.len() == d);
            if !rows_ok(&o.re) || o.im.as_ref().is_some_and(|m| !rows_ok(m)) {
                return Err(Error::Shape(format!("observable '{}' is not {d} × {d}", o.id)));
            }
            let mat = Mat::from_fn(d, d, |i, j| c(o.re[i][j], o.im.as_ref().map_or(0.0, |m| m[i][j])));
            Observable::new(o.id, mat)
        })
        .collect()
}

/// One shadows round: `tr(O_i·ρ̂)` for a single Mix⁺(GPS) estimate on `n_prime` copies.
pub fn shadow_round<R: Rng + ?Sized>(
    rho: &Operator,
    observables: &[Observable],
    n_prime: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let est = mix_plus_pipeline(rho, n_prime, MixPlusBackend::Auto, rng)?.estimate;
    Ok(observables.iter().map(|o| o.expectation(est.matrix())).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShadowRow {
    pub observable_id: String,
    pub true_value: f64,
    pub estimate: f64,
    pub abs_error: f64,
}

/// `k_mom` rounds of Mix⁺(GPS) on `n_prime` copies; per-observable lower median of the rounds.
pub fn run_shadows<R: Rng + ?Sized>(
    rho: &Operator,
    observables: &[Observable],
    n_prime: usize,
    k_mom: usize,
    rng: &mut R,
) -> Result<Vec<ShadowRow>> {
    if k_mom == 0 || n_prime == 0 {
        return Err(Error::Domain("shadows needs n′ ≥ 1 and k_mom ≥ 1".into()));
    }
    for o in observables {
        if o.matrix.nrows() != rho.dim() {
            return Err(Error::Shape(format!("observable '{}' does not act on ℂ^{}", o.id, rho.dim())));
        }
    }
    let mut rounds = vec![Vec::with_capacity(k_mom); observables.len()];
    for _ in 0..k_mom {
        for (slot, v) in rounds.iter_mut().zip(shadow_round(rho, observables, n_prime, rng)?) {
            slot.push(v);
        }
    }
    observables
        .iter()
        .zip(&rounds)
        .map(|(o, vals)| {
            let estimate = lower_median(vals)?;
            let true_value = o.expectation(rho.matrix());
            Ok(ShadowRow {
                observable_id: o.id.clone(),
                true_value,
                estimate,
                abs_error: (estimate - true_value).abs(),
            })
        })
        .collect()
}

/// Output of `purify-check`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PurifyCheckReport {
    pub d: usize,
    pub r: usize,
    pub n: usize,
    /// Relative Frobenius distance between the channel output and the closed form.
    pub frobenius_error: f64,
    /// Relative Frobenius distance between the block form and the Kraus sum.
    pub kraus_error: f64,
    /// Trace distance between the exact output and the empirical mean of `|ρ̃⟩⟨ρ̃|^⊗n`.
    pub mc_trace_distance: f64,
    /// `(3/2)·√dim·√(Σ_ij Var(entry_ij)/N)`, a 3σ envelope for the trace distance.
    pub mc_bound: f64,
    pub n_samples: usize,
    pub seed: u64,
}

pub fn purify_check(rho: &Operator, r: usize, n: usize, n_samples: usize, seed: u64) -> Result<PurifyCheckReport> {
    if n_samples < 2 {
        return Err(Error::Domain("purify-check needs at least two samples".into()));
    }
    let d = rho.dim();
    let ds = DoubleSchur::cached(n, d, r)?;
    let power = tensor_power(rho, n)?;
    let exact = ds.apply(&power)?;
    let formula = ds.final_formula(rho)?;
    let kraus = ds.apply_kraus(&power)?;
    let mut rng = derive_rng(seed, "purify-check", 0);
    let dim = exact.dim();
    let mut sum = Mat::zeros(dim, dim);
    let mut sum_sq = nalgebra::DMatrix::<f64>::zeros(dim, dim);
    for _ in 0..n_samples {
        let v = random_purification(rho, r, &mut rng)?.tensor_power(n)?;
        let a = v.amplitudes();
        let outer = a * a.adjoint();
        sum_sq += outer.map(|z| z.norm_sqr());
        sum += outer;
    }
    let ns = n_samples as f64;
    let mean = sum / re(ns);
    // Per-entry variance of the complex entry, unbiased.
    let total_var: f64 =
        mean.iter().zip(sum_sq.iter()).map(|(m, s2)| ((s2 / ns - m.norm_sqr()) * ns / (ns - 1.0)).max(0.0)).sum();
    let mc_bound = 1.5 * (dim as f64).sqrt() * (total_var / ns).sqrt();
    let empirical = Operator::new(exact.shape().clone(), mean)?;
    Ok(PurifyCheckReport {
        d,
        r,
        n,
        frobenius_error: rel_frobenius(exact.matrix(), formula.matrix()),
        kraus_error: rel_frobenius(exact.matrix(), kraus.matrix()),
        mc_trace_distance: trace_distance(&exact, &empirical)?,
        mc_bound,
        n_samples,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = derive_rng(7, "tomography", 3).random();
        let b: u64 = derive_rng(7, "tomography", 3).random();
        let c: u64 = derive_rng(7, "tomography", 4).random();
        let e: u64 = derive_rng(7, "shadows", 3).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, e);
    }

    #[test]
    fn state_spec_round_trip() {
        for s in ["random-rank-2", "maximally-mixed", "file:/tmp/x.json"] {
            assert_eq!(s.parse::<StateSpec>().unwrap().to_string(), s);
        }
        assert!("random-rank-0".parse::<StateSpec>().is_err());
        assert!("pure".parse::<StateSpec>().is_err());
    }

    #[test]
    fn config_hash_ignores_output_path() {
        let mut a = ExperimentConfig::new(Command::Tomography, 2, 1);
        let mut b = a.clone();
        a.out = PathBuf::from("a.csv");
        b.out = PathBuf::from("b.csv");
        assert_eq!(a.hash(), b.hash());
        b.seed = 2;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn tomography_is_deterministic() {
        let mut cfg = ExperimentConfig::new(Command::Tomography, 2, 11);
        cfg.algorithm = Some(Algorithm::MixGps);
        cfg.n = 20;
        cfg.trials = 8;
        let rho = prepare_state(&cfg.state, 2, cfg.seed).unwrap();
        let a = run_tomography(&cfg, &rho).unwrap();
        let b = run_tomography(&cfg, &rho).unwrap();
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0].trial < w[1].trial));
    }

    #[test]
    fn pure_only_algorithms_reject_mixed_states() {
        let mut rng = derive_rng(1, "t", 0);
        let rho = random_density(2, 2, &mut rng).unwrap();
        assert!(run_algorithm(Algorithm::Gps, &rho, 2, 4, &mut rng).is_err());
        let s = run_algorithm(Algorithm::Gkkt, &rho, 2, 4, &mut rng).unwrap();
        assert!(s.meta.clipped);
    }

    #[test]
    fn identity_observable_is_exact() {
        let mut rng = derive_rng(2, "t", 0);
        let rho = random_density(2, 2, &mut rng).unwrap();
        let obs = vec![Observable::new("id", Mat::identity(2, 2)).unwrap()];
        let rows = run_shadows(&rho, &obs, 10, 3, &mut rng).unwrap();
        assert!((rows[0].estimate - 1.0).abs() < 1e-9);
        assert!(rows[0].abs_error < 1e-9);
    }

    #[test]
    fn observables_are_validated() {
        let ok = r#"{"observables": [{"id": "z", "re": [[1, 0], [0, -1]]}]}"#;
        assert_eq!(parse_observables(ok, 2).unwrap().len(), 1);
        let big = r#"{"observables": [{"id": "2z", "re": [[2, 0], [0, -2]]}]}"#;
        assert!(parse_observables(big, 2).is_err());
        let nonherm = r#"{"observables": [{"id": "a", "re": [[0, 1], [0, 0]]}]}"#;
        assert!(parse_observables(nonherm, 2).is_err());
    }

    #[test]
    fn full_batch_equals_single_run() {
        let rho = prepare_state(&StateSpec::RandomRank(2), 2, 3).unwrap();
        let a = run_k_entangled(&rho, 3, 3, &mut derive_rng(5, "k", 0)).unwrap();
        let b = mix_plus_pipeline(&rho, 3, MixPlusBackend::Auto, &mut derive_rng(5, "k", 0)).unwrap();
        assert_eq!(a.batches, 1);
        assert!(frobenius(&(a.estimate.matrix() - b.estimate.matrix())) < 1e-15);
        let trunc = run_k_entangled(&rho, 7, 2, &mut derive_rng(5, "k", 0)).unwrap();
        assert_eq!((trunc.batches, trunc.dropped), (3, 1));
    }

    #[test]
    fn k_entangled_is_unbiased() {
        let rho = prepare_state(&StateSpec::RandomRank(2), 2, 4).unwrap();
        let mut rng = derive_rng(6, "k", 0);
        let mut sum = Mat::zeros(2, 2);
        let runs = 10_000;
        for _ in 0..runs {
            sum += run_k_entangled(&rho, 8, 2, &mut rng).unwrap().estimate.matrix();
        }
        let avg = sum / re(runs as f64);
        assert!(frobenius(&(avg - rho.matrix())) < 5e-2);
    }

    #[test]
    fn purify_check_small() {
        let rho = prepare_state(&StateSpec::RandomRank(2), 2, 8).unwrap();
        let rep = purify_check(&rho, 2, 2, 2000, 1).unwrap();
        assert!(rep.frobenius_error < 1e-9 && rep.kraus_error < 1e-9);
        assert!(rep.mc_trace_distance < rep.mc_bound, "{rep:?}");
    }
}
