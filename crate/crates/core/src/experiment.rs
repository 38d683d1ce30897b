//! Named experiments, CSV output and run manifests.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error as ThisError;

use crate::closed_form::{eta, eta_asymptote, eta_gap};
use crate::config::{validate, DerivedParams, SystemConfig, CONFIG_FIELDS};
use crate::downlink::IrsMode;
use crate::error::{ConfigError, Error};
use crate::estimator::{decay_matrix, error_covariance, estimate_covariance};
use crate::montecarlo::{fidelity_key, fourth_moment_oracle, rate_curve, Fidelity, McRunner, RateEstimate, DEFAULT_T_SAMPLES};
use crate::phase_noise::{drift_matrix, sample_trajectories};
use crate::rng::{purpose, StreamKey};
use crate::uplink::dft_schedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExperimentInfo {
    pub name: &'static str,
    pub kind: &'static str,
    pub description: &'static str,
}

pub const EXPERIMENTS: &[ExperimentInfo] = &[
    ExperimentInfo {
        name: "fig2",
        kind: "rate sweep",
        description: "ergodic rate against uplink noise variance sigma_u2, N from config",
    },
    ExperimentInfo {
        name: "fig2b",
        kind: "normalized",
        description: "normalized rate against sigma_u2 for N in {16, 32, 64}",
    },
    ExperimentInfo {
        name: "fig3",
        kind: "rate sweep",
        description: "ergodic rate against the common phase noise constant zeta, beta/sigma_u2 = 20 dB",
    },
    ExperimentInfo {
        name: "fig3b",
        kind: "normalized",
        description: "normalized rate against zeta for N in {16, 32, 64}",
    },
    ExperimentInfo {
        name: "oracle",
        kind: "moments",
        description: "measured vs closed-form vs exact SNR moments for (M, N) in {(4,8), (16,16), (32,64)}",
    },
    ExperimentInfo {
        name: "properties",
        kind: "identities",
        description: "exact identities and eta properties with their measured residuals",
    },
];

pub fn experiment_names() -> Vec<&'static str> {
    EXPERIMENTS.iter().map(|e| e.name).collect()
}

/// Human-readable listing.
pub fn list_text() -> String {
    let mut out = String::new();
    for e in EXPERIMENTS {
        out.push_str(&format!("{:<11} {:<12} {}\n", e.name, e.kind, e.description));
    }
    out
}

/// One JSON object per line.
pub fn list_records() -> String {
    EXPERIMENTS
        .iter()
        .map(|e| {
            serde_json::json!({ "name": e.name, "kind": e.kind, "description": e.description }).to_string() + "\n"
        })
        .collect()
}

#[derive(Debug, ThisError)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("unknown experiment `{name}`; available: {}", experiment_names().join(", "))]
    UnknownExperiment { name: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Runtime(#[from] Error),
}

impl RunError {
    /// 1 for configuration and naming problems, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::UnknownExperiment { .. } => 1,
            RunError::Io { .. } | RunError::Runtime(_) => 2,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepVariable {
    #[serde(rename = "sigma_u2")]
    SigmaU2,
    #[serde(rename = "zeta_common")]
    ZetaCommon,
    #[serde(rename = "N")]
    Elements,
}

impl SweepVariable {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVariable::SigmaU2 => "sigma_u2",
            SweepVariable::ZetaCommon => "zeta_common",
            SweepVariable::Elements => "N",
        }
    }

    /// `base` with this variable set to `value`.
    pub fn apply(self, base: &SystemConfig, value: f64) -> SystemConfig {
        let mut cfg = base.clone();
        match self {
            SweepVariable::SigmaU2 => cfg.sigma_u2 = value,
            SweepVariable::ZetaCommon => {
                cfg.zeta_bs = value;
                cfg.zeta_ue = value;
            }
            SweepVariable::Elements => {
                cfg.n = value as usize;
                cfg.b = None;
            }
        }
        cfg
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub modes: Vec<IrsMode>,
    pub fidelities: Vec<Fidelity>,
    pub trials: usize,
}

impl SweepSpec {
    pub fn check(&self) -> Result<(), ConfigError> {
        if self.values.is_empty() {
            return Err(ConfigError::single("values", "sweep grid is empty"));
        }
        if !self.values.windows(2).all(|w| w[0] < w[1]) {
            return Err(ConfigError::single("values", "sweep grid must be strictly increasing"));
        }
        if self.modes.is_empty() {
            return Err(ConfigError::single("modes", "no IRS mode selected"));
        }
        if self.fidelities.is_empty() {
            return Err(ConfigError::single("fidelities", "no fidelity selected"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub variable: SweepVariable,
    pub value: f64,
    #[serde(rename = "N")]
    pub elements: usize,
    #[serde(rename = "M")]
    pub antennas: usize,
    pub mode: IrsMode,
    pub fidelity: Fidelity,
    pub rate: f64,
    pub rate_perfect_csi: f64,
    pub normalized_rate: f64,
    pub ci_half_width: Option<f64>,
    pub seed: u64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRow {
    #[serde(rename = "M")]
    pub antennas: usize,
    #[serde(rename = "N")]
    pub elements: usize,
    pub mode: IrsMode,
    pub t: usize,
    pub eta: f64,
    pub trials: usize,
    pub quantity: &'static str,
    pub measured: f64,
    pub half_width: f64,
    pub closed_form: f64,
    pub exact: Option<f64>,
    pub gap_closed_form: f64,
    pub gap_exact: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyRow {
    pub property: &'static str,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Knobs that are not part of the physical configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOptions {
    /// Trials per simulated symbol; `None` uses the experiment default.
    pub trials: Option<usize>,
    pub workers: usize,
    pub t_samples: usize,
    pub modes: Option<Vec<IrsMode>>,
    pub fidelities: Option<Vec<Fidelity>>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            trials: None,
            workers: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            t_samples: DEFAULT_T_SAMPLES,
            modes: None,
            fidelities: None,
        }
    }
}

pub const RUN_KEYS: &[&str] = &["trials", "workers", "t_samples", "modes", "fidelities"];

pub const DEFAULT_SWEEP_TRIALS: usize = 1000;
pub const DEFAULT_ORACLE_TRIALS: usize = 20_000;

fn parse_count(field: &'static str, value: &str) -> Result<usize, ConfigError> {
    match value.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(ConfigError::single(field, format!("expected a positive integer, got `{value}`"))),
    }
}

fn parse_list<T: std::str::FromStr>(field: &'static str, value: &str) -> Result<Vec<T>, ConfigError> {
    let items = value
        .split(',')
        .map(|s| s.trim().parse::<T>().map_err(|_| ConfigError::single(field, format!("unknown entry `{s}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    if items.is_empty() {
        return Err(ConfigError::single(field, "empty list"));
    }
    Ok(items)
}

/// Applies `key=value` overrides to the config or the run options.
pub fn apply_overrides(
    mut config: SystemConfig,
    mut options: RunOptions,
    overrides: &[String],
) -> Result<(SystemConfig, RunOptions), ConfigError> {
    for item in overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| ConfigError::single("set", format!("expected key=value, got `{item}`")))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "trials" => options.trials = Some(parse_count("trials", value)?),
            "workers" => options.workers = parse_count("workers", value)?,
            "t_samples" => options.t_samples = parse_count("t_samples", value)?,
            "modes" => options.modes = Some(parse_list("modes", value)?),
            "fidelities" => options.fidelities = Some(parse_list("fidelities", value)?),
            _ if CONFIG_FIELDS.contains(&key) => config = config.with_override(key, value)?,
            _ => {
                return Err(ConfigError::single(
                    "set",
                    format!(
                        "unknown key `{key}`; accepted: {}, {}",
                        CONFIG_FIELDS.join(", "),
                        RUN_KEYS.join(", ")
                    ),
                ))
            }
        }
    }
    Ok((config, options))
}

/// Output of one experiment run.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub csv: String,
    pub rows: usize,
    pub trials: usize,
}

fn to_csv<R: Serialize>(rows: &[R]) -> Result<String, RunError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| Error::InvalidArgument(format!("CSV encoding failed: {e}")))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidArgument(format!("CSV encoding failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

/// `beta * {1e-3, ..., 1e2}`: pilot SNR from 30 dB down to -20 dB.
pub fn sigma_u2_grid(beta_cas: f64) -> Vec<f64> {
    [1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2].iter().map(|r| beta_cas * r).collect()
}

pub const ZETA_GRID: [f64; 5] = [1e-22, 1e-21, 1e-20, 1e-19, 1e-18];
pub const PANEL_B_ELEMENTS: [usize; 3] = [16, 32, 64];
pub const ORACLE_GRID: [(usize, usize); 3] = [(4, 8), (16, 16), (32, 64)];

fn default_modes() -> Vec<IrsMode> {
    vec![IrsMode::Random, IrsMode::Optimized]
}

fn default_fidelities() -> Vec<Fidelity> {
    vec![Fidelity::Analytic, Fidelity::Simplified]
}

/// Runs `name` against `config`.
pub fn run_experiment(name: &str, config: &SystemConfig, options: &RunOptions) -> Result<Outcome, RunError> {
    let base = validate(config)?;
    let modes = options.modes.clone().unwrap_or_else(default_modes);
    let fidelities = options.fidelities.clone().unwrap_or_else(default_fidelities);
    let sweep_trials = options.trials.unwrap_or(DEFAULT_SWEEP_TRIALS);
    let spec = |variable, values| SweepSpec {
        variable,
        values,
        modes: modes.clone(),
        fidelities: fidelities.clone(),
        trials: sweep_trials,
    };
    // fixed 20 dB pilot SNR for the zeta sweeps
    let fig3_base = SystemConfig {
        sigma_u2: base.beta_cas / 100.0,
        ..config.clone()
    };
    match name {
        "fig2" => sweep(config, &spec(SweepVariable::SigmaU2, sigma_u2_grid(base.beta_cas)), None, options),
        "fig2b" => sweep(config, &spec(SweepVariable::SigmaU2, sigma_u2_grid(base.beta_cas)), Some(&PANEL_B_ELEMENTS), options),
        "fig3" => sweep(&fig3_base, &spec(SweepVariable::ZetaCommon, ZETA_GRID.to_vec()), None, options),
        "fig3b" => sweep(&fig3_base, &spec(SweepVariable::ZetaCommon, ZETA_GRID.to_vec()), Some(&PANEL_B_ELEMENTS), options),
        "oracle" => oracle(config, &modes, options),
        "properties" => properties(config),
        _ => Err(RunError::UnknownExperiment { name: name.to_string() }),
    }
}

/// One curve per entry of `elements` (with `B` following `N`), or a single
/// curve for `base` as given.
fn sweep(base: &SystemConfig, spec: &SweepSpec, elements: Option<&[usize]>, options: &RunOptions) -> Result<Outcome, RunError> {
    spec.check()?;
    let runner = McRunner::new(spec.trials, options.workers)?;
    let mut rows = Vec::new();
    let mut trials = 0;
    let curves: Vec<SystemConfig> = match elements {
        Some(ns) => ns.iter().map(|&n| SweepVariable::Elements.apply(base, n as f64)).collect(),
        None => vec![base.clone()],
    };
    for curve_cfg in &curves {
        let n = curve_cfg.n;
        let points = spec
            .values
            .iter()
            .map(|&v| validate(&spec.variable.apply(curve_cfg, v)))
            .collect::<Result<Vec<_>, _>>()?;
        let perfect: Vec<DerivedParams<f64>> = points.iter().map(|p| p.with_perfect_csi()).collect();
        // results[mode][fidelity] = (curve, perfect curve)
        let mut results = Vec::new();
        for &mode in &spec.modes {
            let mut per_fidelity = Vec::new();
            for &fidelity in &spec.fidelities {
                let key = fidelity_key(base.seed, fidelity).child(n as u64);
                let curve = rate_curve(&points, mode, fidelity, &runner, options.t_samples, key)?;
                let reference = perfect_curve(&perfect, mode, fidelity, &runner, options.t_samples, key)?;
                trials += curve.iter().chain(&reference).map(|r| r.trials).sum::<usize>();
                per_fidelity.push((curve, reference));
            }
            results.push(per_fidelity);
        }
        for (i, (&value, point)) in spec.values.iter().zip(&points).enumerate() {
            for (mi, &mode) in spec.modes.iter().enumerate() {
                for (fi, &fidelity) in spec.fidelities.iter().enumerate() {
                    let (curve, reference) = &results[mi][fi];
                    let (r, p) = (curve[i], reference[i]);
                    rows.push(ResultRow {
                        variable: spec.variable,
                        value,
                        elements: point.elements,
                        antennas: point.antennas,
                        mode,
                        fidelity,
                        rate: r.rate,
                        rate_perfect_csi: p.rate,
                        normalized_rate: r.rate / p.rate,
                        ci_half_width: (fidelity != Fidelity::Analytic).then_some(r.half_width),
                        seed: base.seed,
                        trials: if fidelity == Fidelity::Analytic { 0 } else { spec.trials },
                    });
                }
            }
        }
    }
    Ok(Outcome {
        csv: to_csv(&rows)?,
        rows: rows.len(),
        trials,
    })
}

/// Perfect-CSI rates, evaluated once per distinct parameter set.
fn perfect_curve(
    points: &[DerivedParams<f64>],
    mode: IrsMode,
    fidelity: Fidelity,
    runner: &McRunner,
    t_samples: usize,
    key: StreamKey,
) -> Result<Vec<RateEstimate<f64>>, Error> {
    let mut cache: Vec<(&DerivedParams<f64>, RateEstimate<f64>)> = Vec::new();
    let mut out = Vec::with_capacity(points.len());
    for p in points {
        let hit = cache.iter().find(|(q, _)| *q == p).map(|(_, r)| *r);
        let r = match hit {
            Some(r) => RateEstimate { trials: 0, ..r },
            None => {
                let r = rate_curve(std::slice::from_ref(p), mode, fidelity, runner, t_samples, key)?[0];
                cache.push((p, r));
                r
            }
        };
        out.push(r);
    }
    Ok(out)
}

fn oracle(config: &SystemConfig, modes: &[IrsMode], options: &RunOptions) -> Result<Outcome, RunError> {
    let trials = options.trials.unwrap_or(DEFAULT_ORACLE_TRIALS);
    let runner = McRunner::new(trials, options.workers)?;
    let mut rows = Vec::new();
    for &(m, n) in &ORACLE_GRID {
        let cfg = SystemConfig {
            m,
            n,
            b: None,
            ..config.clone()
        };
        let p = validate(&cfg)?;
        let t = p.pilots + 1;
        for &mode in modes {
            let key = StreamKey::from_seed(config.seed)
                .child(purpose::ORACLE)
                .child((m * 1000 + n) as u64);
            let rep = fourth_moment_oracle(&p, t, mode, &runner, key)?;
            let mut push = |quantity, s: &crate::stats::Summary<f64>, closed_form: f64, exact: Option<f64>| {
                rows.push(OracleRow {
                    antennas: m,
                    elements: n,
                    mode,
                    t,
                    eta: rep.eta,
                    trials,
                    quantity,
                    measured: s.mean,
                    half_width: s.half_width(),
                    closed_form,
                    exact,
                    gap_closed_form: (s.mean - closed_form) / closed_form,
                    gap_exact: exact.map(|e| (s.mean - e) / e),
                    seed: config.seed,
                });
            };
            push("denominator", &rep.denominator, rep.denominator_closed_form, rep.denominator_exact);
            push("numerator", &rep.numerator, rep.numerator_closed_form, rep.numerator_exact);
            push("aligned_second_moment", &rep.aligned, rep.aligned_closed_form, Some(rep.aligned_exact));
            let scale = p.snr_scale();
            let snr_cf = scale * rep.numerator_closed_form / rep.denominator_closed_form;
            let snr_exact = rep.numerator_exact.map(|x| scale * x / rep.denominator_closed_form);
            push("snr", &rep.snr, snr_cf, snr_exact);
        }
    }
    Ok(Outcome {
        csv: to_csv(&rows)?,
        rows: rows.len(),
        trials: trials * rows.len() / 4,
    })
}

fn max_abs_diff(a: &[Complex<f64>], b: &[Complex<f64>]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn check(property: &'static str, measured: f64, tolerance: f64) -> PropertyRow {
    PropertyRow {
        property,
        measured,
        tolerance,
        passed: measured.abs() <= tolerance,
    }
}

/// Smallest `N` with `N beta / (N beta + sigma_u2) > target` computed from
/// the full `eta` formulas.
pub fn uplink_noise_threshold(beta_cas: f64, sigma_u2: f64, sigma2: f64, target: f64) -> Result<usize, Error> {
    for n in 1..=10_000_000usize {
        let t = n + 1;
        let ratio = eta(t, n, beta_cas, sigma_u2, sigma2 / 2.0, sigma2 / 2.0)?.value
            / eta_asymptote(t, n, beta_cas, sigma2 / 2.0, sigma2 / 2.0)?;
        if ratio - target > 1e-12 {
            return Ok(n);
        }
    }
    Err(Error::InvalidArgument("threshold not reached".into()))
}

fn properties(config: &SystemConfig) -> Result<Outcome, RunError> {
    let beta = validate(config)?.beta_cas;
    let mut rng = StreamKey::from_seed(config.seed).child(purpose::PROPERTIES).rng();
    let mut rows = Vec::new();

    // covariances with phase noise and 20 dB pilot SNR
    let (m, n) = (3, 8);
    let (s_bs, s_ue) = (1e-3, 5e-4);
    let sched = dft_schedule::<f64>(n, n, &(1..=n).collect::<Vec<_>>())?;
    let t = n + 5;
    let d = decay_matrix(t, &sched.pilot_times, &sched.pilot_symbols, s_bs, s_ue)?;
    let psi = estimate_covariance(&sched, &d, beta, beta / 100.0, m, n)?;
    let c = error_covariance(&sched, &d, beta, beta / 100.0, m, n)?;
    let sum = psi.expand() + c.expand();
    let ident = DMatrix::<Complex<f64>>::identity(m * n, m * n) * Complex::new(beta, 0.0);
    rows.push(check("psi_plus_c_minus_beta_identity_rel", max_abs_diff(sum.as_slice(), ident.as_slice()) / beta, 1e-10));

    let eta_t = eta(t, n, beta, beta / 100.0, s_bs, s_ue)?.value;
    let mn_eta = (m * n) as f64 * eta_t;
    rows.push(check("trace_psi_minus_mn_eta_rel", (psi.trace() - mn_eta) / mn_eta, 1e-10));

    let ratio = eta_t / eta_asymptote(t, n, beta, s_bs, s_ue)?;
    let nb = n as f64 * beta;
    rows.push(check("eta_ratio_minus_pilot_gain", ratio - nb / (nb + beta / 100.0), 1e-12));

    let big = 64;
    let phi = dft_schedule::<f64>(big, big, &(1..=big).collect::<Vec<_>>())?.phi;
    let gram = phi.adjoint() * &phi;
    let n_ident = DMatrix::<Complex<f64>>::identity(big, big) * Complex::new(big as f64, 0.0);
    rows.push(check("dft_gram_minus_n_identity", max_abs_diff(gram.as_slice(), n_ident.as_slice()), 1e-10));

    // D H phi against (phi^T kron D) vec(H)
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (mm, nn) = (rng.random_range(1..=4usize), rng.random_range(1..=4usize));
        let h = crate::channel::sample_cascaded(mm, nn, 1.0, &mut rng).h_cas;
        let traj = sample_trajectories(mm, 3, 0.1, 0.05, &mut rng);
        let dt = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(drift_matrix(&traj, 3)?.entries));
        let phi = crate::downlink::random_irs::<f64, _>(nn, &mut rng).phi;
        let direct = &dt * &h * &phi;
        let vec_form = phi.transpose().kronecker(&dt) * crate::channel::vectorize(&h);
        worst = worst.max(max_abs_diff(direct.as_slice(), vec_form.as_slice()));
    }
    rows.push(check("vec_form_minus_matrix_form", worst, 1e-12));

    let mut min_gap = f64::INFINITY;
    for _ in 0..200 {
        let n = rng.random_range(2..=256usize);
        let t = n + rng.random_range(1..=256usize);
        let s = if rng.random_bool(0.2) { 0.0 } else { 10f64.powf(rng.random_range(-7.0..-2.3)) };
        min_gap = min_gap.min(eta_gap(n, t, 1.0, s, s / 2.0)?);
    }
    rows.push(PropertyRow {
        property: "eta_gap_min",
        measured: min_gap,
        tolerance: 1e-15,
        passed: min_gap >= -1e-15,
    });

    let threshold = uplink_noise_threshold(1e-7, 1e-5, 0.0, 0.99)?;
    rows.push(PropertyRow {
        property: "uplink_noise_threshold_n",
        measured: threshold as f64,
        tolerance: 0.0,
        passed: threshold == 9901,
    });

    Ok(Outcome {
        csv: to_csv(&rows)?,
        rows: rows.len(),
        trials: 0,
    })
}

/// SHA-256 over `blob <len>\0<content>`, the object framing git uses.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub experiment: String,
    pub config: SystemConfig,
    pub seed: u64,
    pub overrides: Vec<String>,
    pub options: RunOptions,
    /// Hash of the resolved config, experiment name and output-relevant options.
    pub input_hash: String,
    pub output_hash: String,
    pub rows: usize,
    pub crate_version: &'static str,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

/// Loads the config, runs the experiment and writes the CSV and manifest.
pub fn run(config_path: &Path, experiment: &str, out: &Path, overrides: &[String]) -> Result<Manifest, RunError> {
    if !EXPERIMENTS.iter().any(|e| e.name == experiment) {
        return Err(RunError::UnknownExperiment {
            name: experiment.to_string(),
        });
    }
    let text = fs::read_to_string(config_path)
        .map_err(|e| ConfigError::single("config", format!("cannot read {}: {e}", config_path.display())))?;
    let config = SystemConfig::from_json(&text)?;
    let (config, options) = apply_overrides(config, RunOptions::default(), overrides)?;
    let config = config.resolved();
    validate(&config)?;

    let outcome = run_experiment(experiment, &config, &options)?;

    // workers do not change the output, so they stay out of the input hash
    let hashed = serde_json::json!({
        "experiment": experiment,
        "config": &config,
        "trials": options.trials,
        "t_samples": options.t_samples,
        "modes": &options.modes,
        "fidelities": &options.fidelities,
    });
    let manifest = Manifest {
        experiment: experiment.to_string(),
        seed: config.seed,
        config,
        overrides: overrides.to_vec(),
        options,
        input_hash: content_hash(hashed.to_string().as_bytes()),
        output_hash: content_hash(outcome.csv.as_bytes()),
        rows: outcome.rows,
        crate_version: env!("CARGO_PKG_VERSION"),
    };
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(out, outcome.csv.as_bytes()).map_err(io_err(out))?;
    let mpath = manifest_path(out);
    let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    fs::write(&mpath, body).map_err(io_err(&mpath))?;
    Ok(manifest)
}
