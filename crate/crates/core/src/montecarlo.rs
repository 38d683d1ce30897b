//! Monte Carlo estimates of the averaged SNR and the ergodic rate.
//!
//! Two fidelities are available:
//! * simplified: the estimate is drawn directly as CN(0, eta I) and the
//!   estimation error as independent CN(0, (beta - eta) I);
//! * full: channel, phase-noise paths, uplink pilots and the MMSE estimator
//!   are all simulated.
//!
//! Trials are grouped in fixed-size chunks. Each trial draws from its own
//! substream `key.child(trial)`, chunks are reduced in index order, and so
//! the result does not depend on the worker count.
//!
//! Draws are always made in the same order with unit variance and scaled
//! afterwards (a zero variance still consumes its draws). Two parameter
//! points that share a key therefore see common random numbers, which keeps
//! sweeps smooth.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};

use crate::channel::{sample_cascaded, CMatrix};
use crate::closed_form::{avg_snr_at, eta_at, ergodic_rate, precoder_norm_sq};
use crate::config::DerivedParams;
use crate::downlink::{mrt_precoder, optimize_irs, optimize_irs_sum, random_irs, snr_from_matrix, IrsMode, IrsPhaseVector};
use crate::error::{Error, Result};
use crate::estimator::{conj_transpose, decay_matrix, estimate_covariance, KroneckerCovariance, MmseEstimator};
use crate::moments;
use crate::phase_noise::{drift_matrix, sample_trajectories};
use crate::real::Real;
use crate::rng::{purpose, StreamKey};
use crate::stats::Summary;
use crate::uplink::{dft_schedule, simulate_uplink, PilotSchedule};

/// Trials per work unit. Fixed so chunk boundaries never depend on threads.
pub const CHUNK: usize = 256;

/// Default number of downlink symbols simulated per rate evaluation.
pub const DEFAULT_T_SAMPLES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fidelity {
    Analytic,
    Simplified,
    Full,
}

impl Fidelity {
    pub const ALL: [Fidelity; 3] = [Fidelity::Analytic, Fidelity::Simplified, Fidelity::Full];

    pub fn as_str(self) -> &'static str {
        match self {
            Fidelity::Analytic => "analytic",
            Fidelity::Simplified => "simplified",
            Fidelity::Full => "full",
        }
    }
}

impl fmt::Display for Fidelity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Fidelity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Fidelity::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown fidelity `{s}`")))
    }
}

/// Mean SNR at one symbol with its 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrSummary<T> {
    pub mean: T,
    pub half_width: T,
    pub trials: u64,
    pub t: usize,
    pub mode: IrsMode,
    pub fidelity: Fidelity,
}

impl<T: Real> SnrSummary<T> {
    fn from_summary(s: &Summary<T>, t: usize, mode: IrsMode, fidelity: Fidelity) -> Self {
        Self {
            mean: s.mean,
            half_width: s.half_width(),
            trials: s.count,
            t,
            mode,
            fidelity,
        }
    }
}

/// Trial count plus a worker pool.
pub struct McRunner {
    trials: usize,
    workers: usize,
    pool: ThreadPool,
}

impl fmt::Debug for McRunner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("McRunner")
            .field("trials", &self.trials)
            .field("workers", &self.workers)
            .finish()
    }
}

impl McRunner {
    pub fn new(trials: usize, workers: usize) -> Result<Self> {
        if trials == 0 {
            return Err(Error::InvalidArgument("trial count must be positive".into()));
        }
        if workers == 0 {
            return Err(Error::InvalidArgument("worker count must be positive".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
        Ok(Self { trials, workers, pool })
    }

    pub fn trials(&self) -> usize {
        self.trials
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Same pool, different trial count.
    pub fn with_trials(&self, trials: usize) -> Result<Self> {
        Self::new(trials, self.workers)
    }

    /// Runs `trial` once per trial index with that trial's generator and
    /// folds the per-chunk accumulators in chunk order.
    pub fn reduce<A, I, F, M>(&self, key: StreamKey, init: I, trial: F, merge: M) -> Result<A>
    where
        A: Send,
        I: Fn() -> A + Sync,
        F: Fn(&mut ChaCha8Rng, &mut A) -> Result<()> + Sync,
        M: Fn(A, A) -> A,
    {
        let chunks = self.trials.div_ceil(CHUNK);
        let trials = self.trials;
        let parts: Vec<Result<A>> = self.pool.install(|| {
            (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut acc = init();
                    for i in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                        let mut rng = key.child(i as u64).rng();
                        trial(&mut rng, &mut acc)?;
                    }
                    Ok(acc)
                })
                .collect()
        });
        let mut out = init();
        for part in parts {
            out = merge(out, part?);
        }
        Ok(out)
    }
}

fn merge_all<T: Real>(a: Vec<Summary<T>>, b: Vec<Summary<T>>) -> Vec<Summary<T>> {
    a.iter().zip(&b).map(|(x, y)| x.merge(y)).collect()
}

fn unit_matrix<T: Real, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix<T> {
    let mut x = CMatrix::zeros(rows, cols);
    for z in x.iter_mut() {
        *z = T::complex_gaussian(rng, T::one());
    }
    x
}

fn choose_phases<T: Real, R: Rng + ?Sized>(
    mode: IrsMode,
    h_hat: &CMatrix<T>,
    h_eff: &CMatrix<T>,
    rng: &mut R,
) -> Result<IrsPhaseVector<T>> {
    // random phases are always drawn so every mode consumes the same stream
    let random = random_irs(h_hat.ncols(), rng);
    match mode {
        IrsMode::Random => Ok(random),
        IrsMode::Optimized => optimize_irs(h_hat, 0),
        IrsMode::OptimizedSum => Ok(optimize_irs_sum(h_eff)),
    }
}

fn check_after_pilots<T: Real>(params: &DerivedParams<T>, t: usize) -> Result<()> {
    if t <= params.pilots || t > params.coherence {
        return Err(Error::OutOfRange {
            what: "symbol index",
            detail: format!("t = {t} must lie in {}..={}", params.pilots + 1, params.coherence),
        });
    }
    Ok(())
}

/// Per-trial quantities of the simplified model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplifiedDraw<T> {
    pub snr: T,
    /// `|(H~ phi)^T (H^ phi)^*|^2`.
    pub numerator: T,
    /// `||H^ phi||^2`.
    pub denominator: T,
    /// `(sum_n |H^[0, n]|)^2`.
    pub aligned: T,
}

/// One simplified-model trial at estimate gain `eta`.
pub fn simplified_trial<T: Real, R: Rng + ?Sized>(
    params: &DerivedParams<T>,
    eta: T,
    mode: IrsMode,
    rng: &mut R,
) -> Result<SimplifiedDraw<T>> {
    let (m, n) = (params.antennas, params.elements);
    if !(eta >= T::zero() && eta <= params.beta_cas) {
        return Err(Error::OutOfRange {
            what: "estimate gain",
            detail: format!("eta = {eta} outside [0, beta = {}]", params.beta_cas),
        });
    }
    let sd_hat = Complex::new(eta.sqrt(), T::zero());
    let sd_err = Complex::new((params.beta_cas - eta).sqrt(), T::zero());
    let h_hat = unit_matrix::<T, _>(m, n, rng) * sd_hat;
    let h_eff = &h_hat + unit_matrix::<T, _>(m, n, rng) * sd_err;
    let phi = choose_phases(mode, &h_hat, &h_eff, rng)?;

    let norm_sq = precoder_norm_sq(mode, m, n, eta);
    let snr = if norm_sq > T::zero() {
        let w = mrt_precoder(&h_hat, &phi, norm_sq.sqrt())?;
        snr_from_matrix(&h_eff, &phi.phi, &w.w, params.snr_scale())
    } else {
        T::zero()
    };
    let g_hat = &h_hat * &phi.phi;
    let g = &h_eff * &phi.phi;
    let cross = g.iter().zip(g_hat.iter()).fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a * b.conj());
    let l1 = h_hat.row(0).iter().fold(T::zero(), |acc, z| acc + z.norm());
    Ok(SimplifiedDraw {
        snr,
        numerator: cross.norm_sqr(),
        denominator: g_hat.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()),
        aligned: l1 * l1,
    })
}

fn simplified_summary<T: Real>(
    params: &DerivedParams<T>,
    eta: T,
    mode: IrsMode,
    runner: &McRunner,
    key: StreamKey,
) -> Result<Summary<T>> {
    runner.reduce(
        key,
        Summary::default,
        |rng, acc| {
            acc.push(simplified_trial(params, eta, mode, rng)?.snr);
            Ok(())
        },
        |a, b| a.merge(&b),
    )
}

/// Simplified-model mean SNR at downlink symbol `t`.
pub fn simulate_simplified<T: Real>(
    params: &DerivedParams<T>,
    t: usize,
    mode: IrsMode,
    runner: &McRunner,
    key: StreamKey,
) -> Result<SnrSummary<T>> {
    check_after_pilots(params, t)?;
    let eta = eta_at(params, t)?;
    let s = simplified_summary(params, eta, mode, runner, key)?;
    Ok(SnrSummary::from_summary(&s, t, mode, Fidelity::Simplified))
}

/// Everything the full pipeline needs that does not change between trials.
struct FullContext<T: Real> {
    schedule: PilotSchedule<T>,
    targets: Vec<(usize, MmseEstimator<T>, T)>,
    horizon: usize,
}

fn full_context<T: Real>(params: &DerivedParams<T>, ts: &[usize], mode: IrsMode) -> Result<FullContext<T>> {
    if params.pilots != params.elements {
        return Err(Error::InvalidArgument(format!(
            "full pipeline needs B = N, got B = {}, N = {}",
            params.pilots, params.elements
        )));
    }
    let schedule = dft_schedule::<T>(params.pilots, params.elements, &params.pilot_times)?;
    let mut targets = Vec::with_capacity(ts.len());
    for &t in ts {
        check_after_pilots(params, t)?;
        let d = decay_matrix(t, &schedule.pilot_times, &schedule.pilot_symbols, params.sigma_bs2, params.sigma_ue2)?;
        let est = MmseEstimator::new(&schedule, &d, params.beta_cas, params.sigma_u2, params.antennas)?;
        let norm_sq = precoder_norm_sq(mode, params.antennas, params.elements, eta_at(params, t)?);
        targets.push((t, est, norm_sq.sqrt()));
    }
    let horizon = ts.iter().copied().max().unwrap_or(0);
    Ok(FullContext { schedule, targets, horizon })
}

/// True channel and estimate at each target symbol for one trial.
struct FullDraw<T: Real> {
    per_t: Vec<(CMatrix<T>, CMatrix<T>)>,
}

fn full_draw<T: Real, R: Rng + ?Sized>(params: &DerivedParams<T>, ctx: &FullContext<T>, rng: &mut R) -> Result<FullDraw<T>> {
    let (m, n) = (params.antennas, params.elements);
    let ch = sample_cascaded(m, n, params.beta_cas, rng);
    let traj = sample_trajectories(m, ctx.horizon, params.sigma_bs2, params.sigma_ue2, rng);
    let obs = simulate_uplink(&ch.vectorized(), &traj, &ctx.schedule, params.sigma_u2, rng)?;
    let mut per_t = Vec::with_capacity(ctx.targets.len());
    for (t, est, _) in &ctx.targets {
        let h_hat = est.estimate_matrix(&obs)?;
        let drift = drift_matrix(&traj, *t)?;
        let mut h_eff = ch.h_cas.clone();
        for (mut row, d) in h_eff.row_iter_mut().zip(&drift.entries) {
            row *= *d;
        }
        per_t.push((h_eff, h_hat));
    }
    Ok(FullDraw { per_t })
}

/// Full-pipeline mean SNR at several downlink symbols; each trial serves
/// every `t` in `ts` from one channel, one set of phase paths and one
/// uplink observation.
pub fn simulate_full_multi<T: Real>(
    params: &DerivedParams<T>,
    ts: &[usize],
    mode: IrsMode,
    runner: &McRunner,
    key: StreamKey,
) -> Result<Vec<SnrSummary<T>>> {
    let sums = full_summaries(params, ts, mode, runner, key)?;
    Ok(sums
        .iter()
        .zip(ts)
        .map(|(s, &t)| SnrSummary::from_summary(s, t, mode, Fidelity::Full))
        .collect())
}

fn full_summaries<T: Real>(
    params: &DerivedParams<T>,
    ts: &[usize],
    mode: IrsMode,
    runner: &McRunner,
    key: StreamKey,
) -> Result<Vec<Summary<T>>> {
    let ctx = full_context(params, ts, mode)?;
    let scale = params.snr_scale();
    runner.reduce(
        key,
        || vec![Summary::default(); ts.len()],
        |rng, acc| {
            let draw = full_draw(params, &ctx, rng)?;
            for ((h_eff, h_hat), ((_, _, norm), slot)) in draw.per_t.iter().zip(ctx.targets.iter().zip(acc.iter_mut())) {
                let phi = choose_phases(mode, h_hat, h_eff, rng)?;
                let w = mrt_precoder(h_hat, &phi, *norm)?;
                slot.push(snr_from_matrix(h_eff, &phi.phi, &w.w, scale));
            }
            Ok(())
        },
        merge_all,
    )
}

/// Full-pipeline mean SNR at downlink symbol `t`.
pub fn simulate_full<T: Real>(
    params: &DerivedParams<T>,
    t: usize,
    mode: IrsMode,
    runner: &McRunner,
    key: StreamKey,
) -> Result<SnrSummary<T>> {
    Ok(simulate_full_multi(params, &[t], mode, runner, key)?[0])
}

/// Measured and predicted numerator/denominator moments.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport<T> {
    pub antennas: usize,
    pub elements: usize,
    pub t: usize,
    pub mode: IrsMode,
    pub eta: T,
    pub numerator: Summary<T>,
    pub denominator: Summary<T>,
    pub aligned: Summary<T>,
    pub snr: Summary<T>,
    /// Numerator implied by the closed-form SNR.
    pub numerator_closed_form: T,
    pub numerator_exact: Option<T>,
    pub denominator_closed_form: T,
    pub denominator_exact: Option<T>,
    /// `N^2 pi eta / 4`.
    pub aligned_closed_form: T,
    /// `N eta + N (N - 1) pi eta / 4`.
    pub aligned_exact: T,
}

fn rel_gap<T: Real>(measured: T, reference: T) -> T {
    (measured - reference) / reference
}

impl<T: Real> OracleReport<T> {
    pub fn numerator_gap(&self) -> T {
        rel_gap(self.numerator.mean, self.numerator_closed_form)
    }

    pub fn denominator_gap(&self) -> T {
        rel_gap(self.denominator.mean, self.denominator_closed_form)
    }

    pub fn aligned_gap(&self) -> T {
        rel_gap(self.aligned.mean, self.aligned_closed_form)
    }

    /// `(E_exact - E_closed_form) / E_closed_form` for the aligned moment.
    pub fn aligned_gap_exact(&self) -> T {
        rel_gap(self.aligned_exact, self.aligned_closed_form)
    }
}

/// Separately estimates `E[||H^ phi||^2]`, `E[|(H~ phi)^T (H^ phi)^*|^2]` and
/// `E[(sum_n |H^[0, n]|)^2]` under the simplified model.
pub fn fourth_moment_oracle<T: Real>(
    params: &DerivedParams<T>,
    t: usize,
    mode: IrsMode,
    runner: &McRunner,
    key: StreamKey,
) -> Result<OracleReport<T>> {
    check_after_pilots(params, t)?;
    let eta = eta_at(params, t)?;
    let sums = runner.reduce(
        key,
        || vec![Summary::default(); 4],
        |rng, acc| {
            let d = simplified_trial(params, eta, mode, rng)?;
            acc[0].push(d.numerator);
            acc[1].push(d.denominator);
            acc[2].push(d.aligned);
            acc[3].push(d.snr);
            Ok(())
        },
        merge_all,
    )?;
    let (m, n, beta) = (params.antennas, params.elements, params.beta_cas);
    Ok(OracleReport {
        antennas: m,
        elements: n,
        t,
        mode,
        eta,
        numerator: sums[0],
        denominator: sums[1],
        aligned: sums[2],
        snr: sums[3],
        numerator_closed_form: moments::closed_form_numerator(mode, m, n, beta, eta),
        numerator_exact: moments::exact_numerator(mode, m, n, beta, eta),
        denominator_closed_form: precoder_norm_sq(mode, m, n, eta),
        denominator_exact: moments::exact_denominator(mode, m, n, eta),
        aligned_closed_form: moments::aligned_second_moment_approx(n, eta),
        aligned_exact: moments::aligned_second_moment(n, eta),
    })
}

/// Sample second moments of the full-pipeline estimate at one symbol.
#[derive(Debug, Clone)]
pub struct EstimatorStats<T: Real> {
    pub t: usize,
    pub trials: usize,
    /// `(1/K) sum h^ h^^H`.
    pub estimate_cov: CMatrix<T>,
    /// `(1/K) sum (h~ - h^) h^^H`.
    pub cross_cov: CMatrix<T>,
    /// `(1/K) sum (h~ - h^)(h~ - h^)^H`.
    pub error_cov: CMatrix<T>,
    /// Predicted estimate covariance.
    pub psi: KroneckerCovariance<T>,
}

/// Accumulates estimate and error second moments over full-pipeline trials.
pub fn estimator_statistics<T: Real>(
    params: &DerivedParams<T>,
    t: usize,
    runner: &McRunner,
    key: StreamKey,
) -> Result<EstimatorStats<T>> {
    let ctx = full_context(params, &[t], IrsMode::Random)?;
    let dim = params.antennas * params.elements;
    let zero = || (CMatrix::<T>::zeros(dim, dim), CMatrix::<T>::zeros(dim, dim), CMatrix::<T>::zeros(dim, dim));
    let (hh, eh, ee) = runner.reduce(
        key,
        zero,
        |rng, acc| {
            let draw = full_draw(params, &ctx, rng)?;
            let (h_eff, h_hat) = &draw.per_t[0];
            let h = CMatrix::from_column_slice(dim, 1, h_hat.as_slice());
            let e = CMatrix::from_column_slice(dim, 1, (h_eff - h_hat).as_slice());
            let h_adj = conj_transpose(&h);
            acc.0 += &h * &h_adj;
            acc.1 += &e * &h_adj;
            acc.2 += &e * conj_transpose(&e);
            Ok(())
        },
        |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2),
    )?;
    let k = Complex::new(T::of(runner.trials() as f64), T::zero());
    let d = decay_matrix(t, &ctx.schedule.pilot_times, &ctx.schedule.pilot_symbols, params.sigma_bs2, params.sigma_ue2)?;
    let psi = estimate_covariance(&ctx.schedule, &d, params.beta_cas, params.sigma_u2, params.antennas, params.elements)?;
    Ok(EstimatorStats {
        t,
        trials: runner.trials(),
        estimate_cov: hh / k,
        cross_cov: eh / k,
        error_cov: ee / k,
        psi,
    })
}

/// Evenly spaced downlink symbols including both ends of `B+1..=T`.
pub fn sample_times(pilots: usize, coherence: usize, count: usize) -> Vec<usize> {
    let first = pilots + 1;
    let span = coherence.saturating_sub(first);
    if count == 0 || coherence < first {
        return Vec::new();
    }
    if count > span {
        return (first..=coherence).collect();
    }
    if count == 1 {
        return vec![first];
    }
    let mut ts: Vec<usize> = (0..count)
        .map(|k| first + ((k * span) as f64 / (count - 1) as f64).round() as usize)
        .collect();
    ts.dedup();
    ts
}

/// Rate and its 95% half-width (zero for the analytic fidelity).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate<T> {
    pub rate: T,
    pub half_width: T,
    pub trials: usize,
}

/// Mean SNR summary for each sampled symbol.
fn sampled_snr<T: Real>(
    params: &DerivedParams<T>,
    ts: &[usize],
    mode: IrsMode,
    fidelity: Fidelity,
    runner: &McRunner,
    key: StreamKey,
) -> Result<Vec<Summary<T>>> {
    match fidelity {
        Fidelity::Analytic => Err(Error::InvalidArgument("analytic fidelity has nothing to sample".into())),
        Fidelity::Simplified => ts
            .iter()
            .map(|&t| simplified_summary(params, eta_at(params, t)?, mode, runner, key.child(t as u64)))
            .collect(),
        Fidelity::Full => full_summaries(params, ts, mode, runner, key),
    }
}

/// Ergodic rate at one parameter point.
///
/// Monte Carlo fidelities simulate `t_samples` evenly spaced symbols and
/// fill in the rest of the downlink by interpolating the mean SNR linearly
/// in `eta(t)` between neighbouring samples. Without phase noise `eta` does
/// not depend on `t`, so all samples are pooled into one mean.
///
/// The half-width propagates the per-sample half-widths through
/// `log2(1 + x)` and sums them, which is conservative.
pub fn rate_at<T: Real>(
    params: &DerivedParams<T>,
    mode: IrsMode,
    fidelity: Fidelity,
    runner: &McRunner,
    t_samples: usize,
    key: StreamKey,
) -> Result<RateEstimate<T>> {
    if params.pilots != params.elements {
        return Err(Error::InvalidArgument(format!(
            "rate evaluation needs B = N, got B = {}, N = {}",
            params.pilots, params.elements
        )));
    }
    let times: Vec<usize> = params.downlink_times().collect();
    if fidelity == Fidelity::Analytic {
        let snrs = times
            .iter()
            .map(|&t| avg_snr_at(params, t, mode))
            .collect::<Result<Vec<_>>>()?;
        return Ok(RateEstimate {
            rate: ergodic_rate(&snrs, params.coherence)?,
            half_width: T::zero(),
            trials: 0,
        });
    }
    let ts = sample_times(params.pilots, params.coherence, t_samples.max(1));
    let sums = sampled_snr(params, &ts, mode, fidelity, runner, key)?;
    let etas = ts.iter().map(|&t| eta_at(params, t)).collect::<Result<Vec<_>>>()?;
    let constant = etas.iter().all(|&e| e == etas[0]);

    let mut snrs = Vec::with_capacity(times.len());
    let mut hws = Vec::with_capacity(times.len());
    if constant {
        let pooled = sums.iter().fold(Summary::default(), |acc, s| acc.merge(s));
        snrs.resize(times.len(), pooled.mean.max(T::zero()));
        hws.resize(times.len(), pooled.half_width());
    } else {
        let mut seg = 0;
        for &t in &times {
            while seg + 2 < ts.len() && t > ts[seg + 1] {
                seg += 1;
            }
            let (a, b) = if ts.len() == 1 { (0, 0) } else { (seg, seg + 1) };
            let e = eta_at(params, t)?;
            let span = etas[b] - etas[a];
            let w = if span == T::zero() { T::zero() } else { (e - etas[a]) / span };
            let lerp = |x: T, y: T| x + (y - x) * w;
            snrs.push(lerp(sums[a].mean, sums[b].mean).max(T::zero()));
            hws.push(lerp(sums[a].half_width(), sums[b].half_width()));
        }
    }
    let rate = ergodic_rate(&snrs, params.coherence)?;
    let half_width = snrs
        .iter()
        .zip(&hws)
        .fold(T::zero(), |acc, (&s, &h)| acc + h / (T::one() + s))
        / T::LN_2()
        / T::of(params.coherence as f64);
    Ok(RateEstimate {
        rate,
        half_width,
        trials: runner.trials() * ts.len(),
    })
}

/// Rate at each point of a sweep. Every point uses the same stream so the
/// curve is computed with common random numbers.
pub fn rate_curve<T: Real>(
    points: &[DerivedParams<T>],
    mode: IrsMode,
    fidelity: Fidelity,
    runner: &McRunner,
    t_samples: usize,
    key: StreamKey,
) -> Result<Vec<RateEstimate<T>>> {
    points
        .iter()
        .map(|p| rate_at(p, mode, fidelity, runner, t_samples, key))
        .collect()
}

/// Root stream for a given fidelity and seed.
pub fn fidelity_key(seed: u64, fidelity: Fidelity) -> StreamKey {
    let tag = match fidelity {
        Fidelity::Full => purpose::FULL,
        _ => purpose::SIMPLIFIED,
    };
    StreamKey::from_seed(seed).child(tag)
}
