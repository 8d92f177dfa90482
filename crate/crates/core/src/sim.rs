//! Seeded Monte Carlo sweeps with Gray-mapped QPSK.
//!
//! Power normalization: `τ1 = τr = N`, `σ_r² = N/ρ1`, `τ2 = ρ2·σ_r²` and
//! `σ1² = σ2² = N/ρr`, so equal SNRs give `τ1 = τ2 = τr = N`.
//!
//! Randomness is split by counter: every trial draws its channel from its
//! own ChaCha stream of the master seed (shared by all SNR points and
//! schemes), and symbols and noise of trial `t` at SNR point `k` come from
//! another stream keyed by `(k, t)`. Trials run in parallel, results are
//! collected in trial order and reduced sequentially, so the output does
//! not depend on the thread count.

use std::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cp::{self, AllocationMode, CpOptions};
use crate::iterative::{self, Init, IterativeOptions, StreamMode};
use crate::linalg::{self, ComplexMatrix};
use crate::model::{self, ChannelSet, PrecoderSet, Side, SystemConfig};
use crate::sas::{self, SasOptions};
use crate::{Complex, Error, Result};

/// Points with more failed trials than this fraction are flagged.
pub const FAILURE_FLAG_FRACTION: f64 = 0.1;
const SYMBOL_CHUNK: usize = 4096;
const SYMBOL_STREAM_BIT: u64 = 1 << 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Iterative,
    Cp,
    CpUniform,
    Sas,
    /// Identity-scaled precoders with Wiener decoders.
    None,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Iterative,
        Scheme::Cp,
        Scheme::CpUniform,
        Scheme::Sas,
        Scheme::None,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Iterative => "iterative",
            Scheme::Cp => "cp",
            Scheme::CpUniform => "cp-uniform",
            Scheme::Sas => "sas",
            Scheme::None => "none",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// SNRs in dB: `ρ1 = τ1/σ_r²`, `ρ2 = τ2/σ_r²`, `ρr = τr/σ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrPoint {
    pub rho1_db: f64,
    pub rho2_db: f64,
    pub rhor_db: f64,
}

impl SnrPoint {
    pub fn uniform(db: f64) -> Self {
        Self {
            rho1_db: db,
            rho2_db: db,
            rhor_db: db,
        }
    }

    /// Configuration for `N` source and `M` relay antennas.
    pub fn config(&self, n: usize, m: usize) -> Result<SystemConfig<f64>> {
        let lin = |db: f64| 10f64.powf(db / 10.0);
        let nn = n as f64;
        let sigmar_sq = nn / lin(self.rho1_db);
        let sigma_sq = nn / lin(self.rhor_db);
        SystemConfig::new(
            n,
            m,
            nn,
            lin(self.rho2_db) * sigmar_sq,
            nn,
            sigma_sq,
            sigma_sq,
            sigmar_sq,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub n: usize,
    pub m: usize,
    pub snr: Vec<SnrPoint>,
    /// Schemes evaluated on shared channel draws; rows come out grouped
    /// by SNR point, schemes in the order given.
    pub schemes: Vec<Scheme>,
    pub streams: StreamMode,
    pub trials: usize,
    pub symbols_per_trial: usize,
    pub seed: u64,
    pub reciprocal: bool,
    /// Random restarts of the iterative scheme; `0` uses the identity
    /// initialization.
    pub restarts: usize,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::Config("antenna counts must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.trials > u32::MAX as usize || self.snr.len() > (u32::MAX >> 1) as usize {
            return Err(Error::Config("too many trials or SNR points".into()));
        }
        if self.snr.is_empty() {
            return Err(Error::Config("the SNR grid is empty".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("no scheme selected".into()));
        }
        for p in &self.snr {
            if ![p.rho1_db, p.rho2_db, p.rhor_db].iter().all(|x| x.is_finite()) {
                return Err(Error::Config("SNR values must be finite".into()));
            }
        }
        for &s in &self.schemes {
            match (s, self.streams) {
                (Scheme::Cp | Scheme::CpUniform, StreamMode::Single) => {
                    return Err(Error::Config(format!("scheme {s} needs multi-stream mode")));
                }
                (Scheme::Cp | Scheme::CpUniform, _) if self.m != self.n => {
                    return Err(Error::Config(format!(
                        "scheme {s} needs M = N, got N={}, M={}",
                        self.n, self.m
                    )));
                }
                (Scheme::Sas, StreamMode::Multi) => {
                    return Err(Error::Config("scheme sas needs single-stream mode".into()));
                }
                (Scheme::Iterative, _) if self.m < self.n => {
                    return Err(Error::Config(format!(
                        "scheme iterative needs M >= N, got N={}, M={}",
                        self.n, self.m
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// I.i.d. `CN(0, 1)` channels; `G_i = H_iᵀ` when `reciprocal`.
pub fn draw_channels<R: Rng + ?Sized>(n: usize, m: usize, reciprocal: bool, rng: &mut R) -> ChannelSet<f64> {
    let h1 = linalg::complex_gaussian(m, n, rng);
    let h2 = linalg::complex_gaussian(m, n, rng);
    let (g1, g2) = if reciprocal {
        (h1.transpose(), h2.transpose())
    } else {
        (linalg::complex_gaussian(n, m, rng), linalg::complex_gaussian(n, m, rng))
    };
    ChannelSet { h1, h2, g1, g2 }
}

fn channel_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn symbol_rng(seed: u64, point: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SYMBOL_STREAM_BIT | ((point as u64) << 32) | trial as u64);
    rng
}

/// Error counts of one QPSK transmission, indexed by destination: entry
/// `i` concerns the stream of the other source as decoded at `S_i`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TransmitStats {
    pub bit_errors: [u64; 2],
    pub bits: [u64; 2],
    pub symbols: u64,
    /// Sum over symbol vectors of `‖W_i·y_i − s_ī‖²`.
    pub sq_error: [f64; 2],
    /// Sum of the squares of the same quantity.
    pub sq_error_sq: [f64; 2],
}

impl TransmitStats {
    pub fn ber(&self, side: Side) -> f64 {
        let i = side.index();
        if self.bits[i] == 0 {
            0.0
        } else {
            self.bit_errors[i] as f64 / self.bits[i] as f64
        }
    }

    /// Empirical `J_i` and its standard error.
    pub fn mse(&self, side: Side) -> (f64, f64) {
        let i = side.index();
        let t = self.symbols as f64;
        let mean = self.sq_error[i] / t;
        let var = (self.sq_error_sq[i] / t - mean * mean).max(0.0) * t / (t - 1.0).max(1.0);
        (mean, (var / t).sqrt())
    }
}

const QPSK_SCALE: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn qpsk(bits: u8) -> Complex<f64> {
    let axis = |b: u8| if b == 0 { QPSK_SCALE } else { -QPSK_SCALE };
    Complex::new(axis(bits & 1), axis((bits >> 1) & 1))
}

/// Hard decision; an exact zero decides bit 0.
fn slice(z: Complex<f64>) -> u8 {
    u8::from(z.re < 0.0) | (u8::from(z.im < 0.0) << 1)
}

fn noise<R: Rng + ?Sized>(rows: usize, cols: usize, var: f64, rng: &mut R) -> ComplexMatrix<f64> {
    linalg::complex_gaussian::<f64, R>(rows, cols, rng) * Complex::new(var.sqrt(), 0.0)
}

/// Sends `symbols` QPSK vectors per source through the relay chain with
/// perfect self-interference cancellation and decodes them with `W_i`.
pub fn transmit_qpsk<R: Rng + ?Sized>(
    cfg: &SystemConfig<f64>,
    ch: &ChannelSet<f64>,
    p: &PrecoderSet<f64>,
    symbols: usize,
    rng: &mut R,
) -> Result<TransmitStats> {
    ch.check(cfg)?;
    let d = p.a1.ncols();
    if p.a2.ncols() != d || p.w1.nrows() != d || p.w2.nrows() != d {
        return Err(Error::Dimension("precoders and decoders carry different stream counts".into()));
    }
    let mut stats = TransmitStats::default();
    let mut left = symbols;
    while left > 0 {
        let t = left.min(SYMBOL_CHUNK);
        left -= t;
        let mut bits = [vec![0u8; d * t], vec![0u8; d * t]];
        let mut s = [DMatrix::zeros(d, t), DMatrix::zeros(d, t)];
        for side in 0..2 {
            for (k, b) in bits[side].iter_mut().enumerate() {
                *b = rng.random::<u8>() & 3;
                s[side][(k % d, k / d)] = qpsk(*b);
            }
        }
        let nr = noise(cfg.m, t, cfg.sigmar_sq, rng);
        let n1 = noise(cfg.n, t, cfg.sigma1_sq, rng);
        let n2 = noise(cfg.n, t, cfg.sigma2_sq, rng);
        let x1 = &ch.h1 * &p.a1 * &s[0];
        let x2 = &ch.h2 * &p.a2 * &s[1];
        let yr = &x1 + &x2 + nr;
        let xr = &p.ar * yr;
        let noises = [n1, n2];
        let own = [&x1, &x2];
        for side in [Side::One, Side::Two] {
            let i = side.index();
            let other = side.other().index();
            // self-interference G_i·Ar·H_i·A_i·s_i removed exactly
            let y = ch.g(side) * (&xr - &p.ar * own[i]) + &noises[i];
            let est = p.w(side) * y;
            for col in 0..t {
                let mut e = 0.0;
                for row in 0..d {
                    let z = est[(row, col)];
                    e += (z - s[other][(row, col)]).norm_sqr();
                    let sent = bits[other][col * d + row];
                    stats.bit_errors[i] += u64::from((slice(z) ^ sent).count_ones());
                }
                stats.sq_error[i] += e;
                stats.sq_error_sq[i] += e * e;
            }
            stats.bits[i] += 2 * (d * t) as u64;
        }
        stats.symbols += t as u64;
    }
    Ok(stats)
}

/// Result of one scheme on one channel at one SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub total_mse: f64,
    pub ber: [f64; 2],
    pub iterations: usize,
    pub converged: bool,
}

/// Designs the precoders of `scheme` for one channel.
pub fn design(
    scheme: Scheme,
    cfg: &SystemConfig<f64>,
    ch: &ChannelSet<f64>,
    streams: StreamMode,
    restarts: usize,
    restart_seed: u64,
) -> Result<(PrecoderSet<f64>, usize, bool)> {
    match scheme {
        Scheme::Iterative => {
            let opts = IterativeOptions {
                streams,
                ..IterativeOptions::default()
            };
            let (p, t) = if restarts == 0 {
                iterative::run_algorithm1(cfg, ch, &opts)?
            } else {
                iterative::run_best_of_random(cfg, ch, &opts, restarts, restart_seed)?
            };
            Ok((p, t.iterations, t.converged))
        }
        Scheme::Cp | Scheme::CpUniform => {
            let opts = CpOptions {
                mode: if scheme == Scheme::Cp {
                    AllocationMode::Optimized
                } else {
                    AllocationMode::Uniform
                },
                ..CpOptions::default()
            };
            let (p, t) = cp::run_algorithm2(cfg, ch, &opts)?;
            Ok((p, t.iterations, t.converged))
        }
        Scheme::Sas => {
            let r = sas::run_algorithm3(cfg, ch, &SasOptions::default())?;
            let (iters, conv) = (r.best.iterations, r.best.converged);
            Ok((r.precoders(cfg), iters, conv))
        }
        Scheme::None => {
            let p = iterative::initial_precoders(cfg, ch, &Init::Identity, streams)?;
            Ok((model::with_mmse_decoders(cfg, ch, p)?, 0, true))
        }
    }
}

fn run_trial(spec: &ExperimentSpec, trial: usize) -> Vec<std::result::Result<TrialOutcome, String>> {
    let ch = draw_channels(spec.n, spec.m, spec.reciprocal, &mut channel_rng(spec.seed, trial));
    let restart_seed = spec.seed.wrapping_add((trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut out = Vec::with_capacity(spec.snr.len() * spec.schemes.len());
    for (k, point) in spec.snr.iter().enumerate() {
        for &scheme in &spec.schemes {
            let one = || -> Result<TrialOutcome> {
                let cfg = point.config(spec.n, spec.m)?;
                let (p, iterations, converged) = design(scheme, &cfg, &ch, spec.streams, spec.restarts, restart_seed)?;
                let total_mse = model::total_mse(&cfg, &ch, &p)?;
                let mut rng = symbol_rng(spec.seed, k, trial);
                let ber = if spec.symbols_per_trial > 0 {
                    let st = transmit_qpsk(&cfg, &ch, &p, spec.symbols_per_trial, &mut rng)?;
                    [st.ber(Side::One), st.ber(Side::Two)]
                } else {
                    [0.0; 2]
                };
                Ok(TrialOutcome {
                    total_mse,
                    ber,
                    iterations,
                    converged,
                })
            };
            out.push(one().map_err(|e| e.to_string()));
        }
    }
    out
}

/// Aggregates of one scheme at one SNR point over successful trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub snr: SnrPoint,
    pub scheme: Scheme,
    pub mean_total_mse: f64,
    /// BER of the data decoded at `S1` (sent by `S2`).
    pub mean_ber_s1: f64,
    /// BER of the data decoded at `S2` (sent by `S1`).
    pub mean_ber_s2: f64,
    pub trials: usize,
    pub failures: usize,
    /// Successful trials whose solver stopped at its iteration cap.
    pub not_converged: usize,
    pub mean_iters: f64,
    /// First failure message, if any.
    pub first_failure: Option<String>,
}

impl SweepPoint {
    pub fn mean_ber(&self) -> f64 {
        0.5 * (self.mean_ber_s1 + self.mean_ber_s2)
    }

    pub fn flagged(&self) -> bool {
        self.failures as f64 > FAILURE_FLAG_FRACTION * self.trials as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    /// True if any point lost more than 10% of its trials.
    pub fn flagged(&self) -> bool {
        self.points.iter().any(SweepPoint::flagged)
    }
}

/// Runs the sweep on the current rayon pool.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<SweepResult> {
    spec.validate()?;
    let per_trial: Vec<_> = (0..spec.trials)
        .into_par_iter()
        .map(|t| run_trial(spec, t))
        .collect();

    let mut points = Vec::with_capacity(spec.snr.len() * spec.schemes.len());
    for (k, &snr) in spec.snr.iter().enumerate() {
        for (j, &scheme) in spec.schemes.iter().enumerate() {
            let idx = k * spec.schemes.len() + j;
            let mut ok = 0usize;
            let mut failures = 0usize;
            let mut not_converged = 0usize;
            let mut first_failure = None;
            let (mut mse, mut b1, mut b2, mut iters) = (0.0, 0.0, 0.0, 0.0);
            for trial in &per_trial {
                match &trial[idx] {
                    Ok(o) => {
                        ok += 1;
                        mse += o.total_mse;
                        b1 += o.ber[0];
                        b2 += o.ber[1];
                        iters += o.iterations as f64;
                        not_converged += usize::from(!o.converged);
                    }
                    Err(e) => {
                        failures += 1;
                        if first_failure.is_none() {
                            first_failure = Some(e.clone());
                        }
                    }
                }
            }
            let mean = |x: f64| if ok == 0 { f64::NAN } else { x / ok as f64 };
            points.push(SweepPoint {
                snr,
                scheme,
                mean_total_mse: mean(mse),
                mean_ber_s1: mean(b1),
                mean_ber_s2: mean(b2),
                trials: spec.trials,
                failures,
                not_converged,
                mean_iters: mean(iters),
                first_failure,
            });
        }
    }
    Ok(SweepResult { points })
}

/// Runs the sweep on a dedicated pool of `threads` workers.
pub fn run_sweep_with_threads(spec: &ExperimentSpec, threads: usize) -> Result<SweepResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
    pool.install(|| run_sweep(spec))
}
