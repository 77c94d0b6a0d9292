use crate::cli::{
    Cli, Common, KEntangledArgs, MomentsArgs, PgmCheckArgs, PurifyCheckArgs, SchurValidateArgs, ShadowsArgs, StateArgs,
    Sub, TomographyArgs,
};
use crate::output::{csv_bytes, json_bytes, write_atomic, ShadowRecord};
use clap::Parser;
use serde::Serialize;
use tomoforge_core::estimators::Algorithm;
use tomoforge_core::harness::{
    derive_rng, parse_observables, prepare_state, purify_check, run_k_entangled_trials, run_shadows, run_tomography,
    Command, ExperimentConfig, StateSpec,
};
use tomoforge_core::moments::{mix_gps_moments, mix_plus_gps_moments, MomentSummary};
use tomoforge_core::pgm::pgm_check;
use tomoforge_core::schur::SchurDecomposition;
use tomoforge_core::Error;

/// Residual above which `schur-validate` reports a numerical failure.
const SCHUR_TOL: f64 = 1e-9;

#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Numerical(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Numerical(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Validation(m) => write!(f, "{m}"),
            Failure::Numerical(m) => write!(f, "numerical abort: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Validation(e.to_string())
        }
    }
}

/// What a finished subcommand reports: its summary line and whether its checks failed.
struct Outcome {
    summary: String,
    failed: bool,
}

impl Outcome {
    fn ok(summary: String) -> Self {
        Outcome { summary, failed: false }
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn main_cli(args: &[String]) -> u8 {
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(f) => {
            eprintln!("error: {f}");
            return f.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            if outcome.failed {
                2
            } else {
                0
            }
        }
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}

/// Splices the keys of a `--config` JSON object in as flags right after the
/// subcommand, so flags given explicitly later on the command line override them.
fn expand_config(args: &[String]) -> Result<Vec<String>, Failure> {
    let mut path = None;
    for (i, a) in args.iter().enumerate() {
        if a == "--config" {
            path = args.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else { return Ok(args.to_vec()) };
    let text =
        std::fs::read_to_string(&path).map_err(|e| Failure::Validation(format!("cannot read config {path}: {e}")))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Failure::Validation(format!("bad config {path}: {e}")))?;
    let obj = value.as_object().ok_or_else(|| Failure::Validation(format!("config {path} is not a JSON object")))?;
    let mut injected = Vec::new();
    for (key, v) in obj {
        let flag = format!("--{}", key.replace('_', "-"));
        match v {
            serde_json::Value::Null | serde_json::Value::Bool(false) => {}
            serde_json::Value::Bool(true) => injected.push(flag),
            serde_json::Value::String(s) => injected.extend([flag, s.clone()]),
            serde_json::Value::Number(n) => injected.extend([flag, n.to_string()]),
            _ => return Err(Failure::Validation(format!("config key '{key}' must be a scalar"))),
        }
    }
    if args.len() < 2 {
        return Ok(args.to_vec());
    }
    let mut out = args[..2].to_vec();
    out.extend(injected);
    out.extend_from_slice(&args[2..]);
    Ok(out)
}

fn resolve_state(s: &StateArgs, rank_default: usize) -> Result<StateSpec, Failure> {
    match (s.state.as_deref(), &s.state_file) {
        (None, None) => Ok(StateSpec::RandomRank(rank_default)),
        (Some("file"), Some(p)) | (None, Some(p)) => Ok(StateSpec::File(p.clone())),
        (Some("file"), None) => Err(Failure::Validation("--state file needs --state-file PATH".into())),
        (Some(other), _) => Ok(other.parse()?),
    }
}

fn base_config(command: Command, common: &Common, d: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(command, d, common.seed);
    cfg.out = common.out.clone();
    cfg
}

fn dispatch(sub: Sub) -> Result<Outcome, Failure> {
    match sub {
        Sub::Tomography(a) => tomography(a),
        Sub::Moments(a) => moments(a),
        Sub::PurifyCheck(a) => purify(a),
        Sub::PgmCheck(a) => pgm(a),
        Sub::Shadows(a) => shadows(a),
        Sub::SchurValidate(a) => schur_validate(a),
        Sub::KEntangled(a) => k_entangled(a),
    }
}

fn tomography(a: TomographyArgs) -> Result<Outcome, Failure> {
    let algorithm: Algorithm = a.algorithm.parse()?;
    let pure = algorithm.pure_only() || algorithm == Algorithm::Gkkt;
    let r = a.r.unwrap_or(if pure { 1 } else { a.d });
    let mut cfg = base_config(Command::Tomography, &a.common, a.d);
    cfg.algorithm = Some(algorithm);
    cfg.r = r;
    cfg.n = a.n;
    cfg.trials = a.trials;
    cfg.state = resolve_state(&a.state, r)?;
    cfg.epsilon = a.epsilon;
    cfg.delta = a.delta;
    cfg.validate()?;
    let rho = prepare_state(&cfg.state, cfg.d, cfg.seed)?;
    let rows = run_tomography(&cfg, &rho)?;
    if let Some(path) = &a.dump_state {
        let bytes = serde_json::to_vec(&rho).map_err(|e| Failure::Validation(e.to_string()))?;
        write_atomic(path, &bytes)?;
    }
    write_atomic(&cfg.out, &csv_bytes(&cfg, &rows)?)?;
    let mut fids: Vec<f64> = rows.iter().map(|r| r.fidelity).collect();
    fids.sort_by(f64::total_cmp);
    let clipped = rows.iter().filter(|r| r.clipped).count();
    let mut summary = format!(
        "tomography {algorithm}: {} trials, median fidelity {:.6}, {clipped} clipped estimates, wrote {} (config {})",
        rows.len(),
        fids[(fids.len() - 1) / 2],
        cfg.out.display(),
        cfg.hash()
    );
    if let Some(eps) = cfg.epsilon {
        let hits = fids.iter().filter(|&&f| f >= 1.0 - eps).count();
        summary.push_str(&format!(", {hits}/{} trials with fidelity ≥ 1 − {eps}", rows.len()));
    }
    Ok(Outcome::ok(summary))
}

#[derive(Serialize)]
struct MomentsReport {
    mix_gps: MomentSummary,
    mix_plus_gps: MomentSummary,
    expected_length: f64,
    swap_gap: f64,
    expected_swap_gap: f64,
    swap_gap_error: f64,
    all_properties_pass: bool,
}

fn moments(a: MomentsArgs) -> Result<Outcome, Failure> {
    let r = a.r.unwrap_or(a.d);
    let mut cfg = base_config(Command::Moments, &a.common, a.d);
    cfg.r = r;
    cfg.n = a.n;
    cfg.state = resolve_state(&a.state, r)?;
    cfg.validate()?;
    let rho = prepare_state(&cfg.state, cfg.d, cfg.seed)?;
    let mut rng = derive_rng(cfg.seed, "moments", 0);
    let mix = mix_gps_moments(&rho, r, cfg.n, &mut rng)?;
    let plus = mix_plus_gps_moments(&rho, cfg.n, &mut rng)?;
    let expected_length =
        plus.expected_length.ok_or_else(|| Failure::Numerical("Mix⁺ moments carry no expected length".into()))?;
    let nsq = (cfg.n * cfg.n) as f64;
    let swap_gap = mix.fitted_swap - plus.fitted_swap;
    let expected_swap_gap = (r as f64 - expected_length) / nsq;
    let report = MomentsReport {
        all_properties_pass: mix.properties.all_pass() && plus.properties.all_pass(),
        mix_gps: mix.summary(),
        mix_plus_gps: plus.summary(),
        expected_length,
        swap_gap,
        expected_swap_gap,
        swap_gap_error: (swap_gap - expected_swap_gap).abs(),
    };
    write_atomic(&cfg.out, &json_bytes(&cfg, &report)?)?;
    Ok(Outcome::ok(format!(
        "moments d={} r={r} n={}: E[ℓ]={expected_length:.6}, SWAP gap error {:.2e}, properties {}, wrote {}",
        cfg.d,
        cfg.n,
        report.swap_gap_error,
        if report.all_properties_pass { "pass" } else { "FAIL" },
        cfg.out.display()
    )))
}

fn purify(a: PurifyCheckArgs) -> Result<Outcome, Failure> {
    let r = a.r.unwrap_or(a.d);
    let mut cfg = base_config(Command::PurifyCheck, &a.common, a.d);
    cfg.r = r;
    cfg.n = a.n;
    cfg.samples = Some(a.samples);
    cfg.state = resolve_state(&a.state, r)?;
    cfg.validate()?;
    let rho = prepare_state(&cfg.state, cfg.d, cfg.seed)?;
    let report = purify_check(&rho, r, cfg.n, a.samples, cfg.seed)?;
    write_atomic(&cfg.out, &json_bytes(&cfg, &report)?)?;
    Ok(Outcome::ok(format!(
        "purify-check d={} r={r} n={}: frobenius error {:.2e}, MC trace distance {:.4e} (3σ bound {:.4e}), wrote {}",
        cfg.d,
        cfg.n,
        report.frobenius_error,
        report.mc_trace_distance,
        report.mc_bound,
        cfg.out.display()
    )))
}

fn pgm(a: PgmCheckArgs) -> Result<Outcome, Failure> {
    let r = a.r.unwrap_or(a.d);
    let mut cfg = base_config(Command::PgmCheck, &a.common, a.d);
    cfg.r = r;
    cfg.n = a.n;
    cfg.samples = Some(a.samples);
    cfg.trials = a.adjoint_probes.max(1);
    cfg.validate()?;
    let mut rng = derive_rng(cfg.seed, "pgm-check", 0);
    let report = pgm_check(cfg.d, r, cfg.n, a.samples, a.adjoint_probes, &mut rng)?;
    write_atomic(&cfg.out, &json_bytes(&cfg, &report)?)?;
    Ok(Outcome::ok(format!(
        "pgm-check d={} r={r} n={}: max residual {:.2e}, min KS p {:.4}, KS {}, wrote {}",
        cfg.d,
        cfg.n,
        report.max_residual(),
        report.equivalence.min_p_value,
        if report.all_ks_pass() { "pass" } else { "FAIL" },
        cfg.out.display()
    )))
}

fn shadows(a: ShadowsArgs) -> Result<Outcome, Failure> {
    let mut cfg = base_config(Command::Shadows, &a.common, a.d);
    cfg.state = resolve_state(&a.state, a.d)?;
    cfg.n = a.n_prime;
    cfg.n_prime = Some(a.n_prime);
    cfg.k_mom = Some(a.k_mom);
    cfg.trials = a.trials;
    cfg.observables = Some(a.observables.clone());
    cfg.epsilon = a.epsilon;
    cfg.delta = a.delta;
    cfg.validate()?;
    let text = std::fs::read_to_string(&a.observables)
        .map_err(|e| Failure::Validation(format!("cannot read {}: {e}", a.observables.display())))?;
    let observables = parse_observables(&text, cfg.d)?;
    let rho = prepare_state(&cfg.state, cfg.d, cfg.seed)?;
    let mut records = Vec::new();
    for t in 0..cfg.trials as u64 {
        let mut rng = derive_rng(cfg.seed, "shadows", t);
        for row in run_shadows(&rho, &observables, a.n_prime, a.k_mom, &mut rng)? {
            records.push(ShadowRecord { trial: t, row });
        }
    }
    write_atomic(&cfg.out, &csv_bytes(&cfg, &records)?)?;
    let worst = records.iter().map(|r| r.row.abs_error).fold(0.0, f64::max);
    let mut summary = format!(
        "shadows: {} observables × {} runs, max abs error {worst:.4}, wrote {}",
        observables.len(),
        cfg.trials,
        cfg.out.display()
    );
    if let Some(eps) = cfg.epsilon {
        let covered = records.iter().filter(|r| r.row.abs_error <= eps).count();
        summary.push_str(&format!(", {covered}/{} estimates within {eps}", records.len()));
    }
    Ok(Outcome::ok(summary))
}

fn schur_validate(a: SchurValidateArgs) -> Result<Outcome, Failure> {
    let mut cfg = base_config(Command::SchurValidate, &a.common, a.d);
    cfg.r = 1;
    cfg.n = a.n;
    cfg.samples = Some(a.probes);
    cfg.validate()?;
    let sd = SchurDecomposition::cached(cfg.n, cfg.d)?;
    let report = sd.validate(a.probes, &mut derive_rng(cfg.seed, "schur-validate", 0))?;
    write_atomic(&cfg.out, &json_bytes(&cfg, &report)?)?;
    let failed = report.max_residual() > SCHUR_TOL || !report.dimension_ok;
    Ok(Outcome {
        summary: format!(
            "schur-validate n={} d={}: {} blocks, max residual {:.2e}{}, wrote {}",
            cfg.n,
            cfg.d,
            sd.blocks().len(),
            report.max_residual(),
            if failed { " (FAIL)" } else { "" },
            cfg.out.display()
        ),
        failed,
    })
}

fn k_entangled(a: KEntangledArgs) -> Result<Outcome, Failure> {
    let mut cfg = base_config(Command::KEntangled, &a.common, a.d);
    cfg.n = a.n_total;
    cfg.k = Some(a.k);
    cfg.trials = a.trials;
    cfg.state = resolve_state(&a.state, a.d)?;
    cfg.validate()?;
    if a.k == 0 || a.k > a.n_total {
        return Err(Failure::Validation(format!("--k must lie in 1..={}", a.n_total)));
    }
    if a.n_total % a.k != 0 {
        eprintln!("warning: k = {} does not divide n_total = {}; dropping {} copies", a.k, a.n_total, a.n_total % a.k);
    }
    let rho = prepare_state(&cfg.state, cfg.d, cfg.seed)?;
    let rows = run_k_entangled_trials(&cfg, &rho)?;
    write_atomic(&cfg.out, &csv_bytes(&cfg, &rows)?)?;
    let mse = rows.iter().map(|r| r.frobenius_sq_error).sum::<f64>() / rows.len() as f64;
    Ok(Outcome::ok(format!(
        "k-entangled n_total={} k={}: {} trials, mean squared Frobenius error {mse:.4e}, wrote {}",
        cfg.n,
        a.k,
        rows.len(),
        cfg.out.display()
    )))
}
