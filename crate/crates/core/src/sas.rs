//! Single-stream precoding by source antenna selection.
//!
//! Each source sends its one stream at full power from a single antenna,
//! so the sources need no precoder. For every antenna pair the relay
//! precoder and the two receive vectors are optimized by alternating two
//! closed-form updates; the pair with the smallest Total-MSE wins.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::iterative::RelayProblem;
use crate::linalg::{self, cx, trace_re, ComplexMatrix};
use crate::model::{self, ChannelSet, PrecoderSet, Side, SystemConfig};
use crate::{Error, Real, Result};

/// Source antennas `(n, m)`: `n` at the first source, `m` at the second.
pub type AntennaPair = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SasInit {
    /// `sqrt(τ_r / Tr{R_x})·I`.
    Identity,
    /// Gaussian relay precoder scaled onto the budget; the seed is mixed
    /// with the pair index.
    Random(u64),
}

#[derive(Debug, Clone)]
pub struct SasOptions<T: Real> {
    pub max_iters: usize,
    pub rel_tol: T,
    pub bisection_tol: T,
    pub init: SasInit,
}

impl<T: Real> Default for SasOptions<T> {
    fn default() -> Self {
        Self {
            max_iters: 200,
            rel_tol: T::lit(1e-6),
            bisection_tol: T::lit(1e-10),
            init: SasInit::Identity,
        }
    }
}

/// Outcome for one antenna pair.
#[derive(Debug, Clone)]
pub struct PairSolution<T: Real> {
    pub pair: AntennaPair,
    pub ar: ComplexMatrix<T>,
    /// Receive vectors (`N × 1`); the decoders are their adjoints.
    pub w1: ComplexMatrix<T>,
    pub w2: ComplexMatrix<T>,
    /// Total-MSE: the starting value, then one entry per iteration.
    pub trace: Vec<T>,
    pub converged: bool,
    pub iterations: usize,
}

impl<T: Real> PairSolution<T> {
    pub fn total_mse(&self) -> T {
        *self.trace.last().expect("trace holds the starting value")
    }
}

#[derive(Debug, Clone)]
pub struct SasResult<T: Real> {
    pub best: PairSolution<T>,
    /// Total-MSE of every pair, indexed `[n][m]`.
    pub table: Vec<Vec<T>>,
}

impl<T: Real> SasResult<T> {
    pub fn pair(&self) -> AntennaPair {
        self.best.pair
    }

    pub fn total_mse(&self) -> T {
        self.best.total_mse()
    }

    /// The selected design as a single-stream precoder set.
    pub fn precoders(&self, cfg: &SystemConfig<T>) -> PrecoderSet<T> {
        pair_precoders(cfg, self.best.pair, &self.best.ar, &self.best.w1, &self.best.w2)
    }
}

/// Selection "precoders" `sqrt(τ_i)·e_k` (`N × 1`).
pub fn selection_vectors<T: Real>(cfg: &SystemConfig<T>, pair: AntennaPair) -> (ComplexMatrix<T>, ComplexMatrix<T>) {
    let unit = |k: usize, tau: T| {
        let mut e = linalg::zeros::<T>(cfg.n, 1);
        e[(k, 0)] = cx(tau.sqrt());
        e
    };
    (unit(pair.0, cfg.tau1), unit(pair.1, cfg.tau2))
}

fn pair_precoders<T: Real>(
    cfg: &SystemConfig<T>,
    pair: AntennaPair,
    ar: &ComplexMatrix<T>,
    w1: &ComplexMatrix<T>,
    w2: &ComplexMatrix<T>,
) -> PrecoderSet<T> {
    let (a1, a2) = selection_vectors(cfg, pair);
    PrecoderSet {
        a1,
        a2,
        ar: ar.clone(),
        w1: w1.adjoint(),
        w2: w2.adjoint(),
    }
}

fn check_pair<T: Real>(cfg: &SystemConfig<T>, pair: AntennaPair) -> Result<()> {
    if pair.0 >= cfg.n || pair.1 >= cfg.n {
        return Err(Error::Dimension(format!(
            "antenna pair {pair:?} out of range for N={}",
            cfg.n
        )));
    }
    Ok(())
}

/// Wiener receive vectors
/// `w_i = sqrt(τ_ī)·[G_i·Ar·R_xī·Arᴴ·G_iᴴ + σ_i²·I]⁻¹·G_i·Ar·h_ī`.
pub fn sas_decoder_update<T: Real>(
    cfg: &SystemConfig<T>,
    ch: &ChannelSet<T>,
    ar: &ComplexMatrix<T>,
    pair: AntennaPair,
) -> Result<(ComplexMatrix<T>, ComplexMatrix<T>)> {
    check_pair(cfg, pair)?;
    ch.check(cfg)?;
    let (a1, a2) = selection_vectors(cfg, pair);
    let a = [a1, a2];
    let solve = |side: Side| -> Result<ComplexMatrix<T>> {
        let other = side.other();
        let ga = ch.g(side) * ar;
        let rx = model::source_covariance(cfg, ch.h(other), &a[other.index()]);
        let rw = &ga * rx * ga.adjoint() + linalg::identity::<T>(cfg.n) * cx(cfg.sigma_sq(side));
        let f = &ga * ch.h(other) * &a[other.index()];
        linalg::solve_hermitian_psd(&rw, &f)
    };
    Ok((solve(Side::One)?, solve(Side::Two)?))
}

/// Optimal relay precoder for fixed receive vectors.
pub fn sas_relay_update<T: Real>(
    cfg: &SystemConfig<T>,
    ch: &ChannelSet<T>,
    w1: &ComplexMatrix<T>,
    w2: &ComplexMatrix<T>,
    pair: AntennaPair,
    bisection_tol: T,
) -> Result<ComplexMatrix<T>> {
    check_pair(cfg, pair)?;
    let (a1, a2) = selection_vectors(cfg, pair);
    let problem = RelayProblem::new(cfg, ch, &a1, &a2, &w1.adjoint(), &w2.adjoint())?;
    Ok(problem.solve(cfg.taur, bisection_tol)?.ar)
}

/// `J_1 + J_2` for one pair.
pub fn pair_mse<T: Real>(
    cfg: &SystemConfig<T>,
    ch: &ChannelSet<T>,
    pair: AntennaPair,
    ar: &ComplexMatrix<T>,
    w1: &ComplexMatrix<T>,
    w2: &ComplexMatrix<T>,
) -> Result<T> {
    model::total_mse(cfg, ch, &pair_precoders(cfg, pair, ar, w1, w2))
}

fn initial_relay<T: Real>(
    cfg: &SystemConfig<T>,
    ch: &ChannelSet<T>,
    pair: AntennaPair,
    init: SasInit,
) -> ComplexMatrix<T> {
    let (a1, a2) = selection_vectors(cfg, pair);
    let rx = model::relay_covariance(cfg, ch, &a1, &a2);
    match init {
        SasInit::Identity => linalg::identity::<T>(cfg.m) * cx((cfg.taur / trace_re(&rx)).sqrt()),
        SasInit::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((pair.0 * cfg.n + pair.1) as u64);
            let g: ComplexMatrix<T> = linalg::complex_gaussian(cfg.m, cfg.m, &mut rng);
            let used = trace_re(&(&g * rx * g.adjoint()));
            g * cx((cfg.taur / used).sqrt())
        }
    }
}

/// Two-step alternation for one antenna pair.
pub fn run_pair<T: Real>(
    cfg: &SystemConfig<T>,
    ch: &ChannelSet<T>,
    pair: AntennaPair,
    opts: &SasOptions<T>,
) -> Result<PairSolution<T>> {
    check_pair(cfg, pair)?;
    let mut ar = initial_relay(cfg, ch, pair, opts.init);
    let (mut w1, mut w2) = sas_decoder_update(cfg, ch, &ar, pair)?;
    let mut current = pair_mse(cfg, ch, pair, &ar, &w1, &w2)?;
    let mut sol = PairSolution {
        pair,
        ar: ar.clone(),
        w1: w1.clone(),
        w2: w2.clone(),
        trace: vec![current],
        converged: false,
        iterations: 0,
    };
    for iter in 1..=opts.max_iters {
        let mut step = || -> Result<()> {
            let cand = sas_relay_update(cfg, ch, &w1, &w2, pair, opts.bisection_tol)?;
            // guards against rounding; the update is optimal in exact
            // arithmetic
            if pair_mse(cfg, ch, pair, &cand, &w1, &w2)? <= current {
                ar = cand;
            }
            let (c1, c2) = sas_decoder_update(cfg, ch, &ar, pair)?;
            w1 = c1;
            w2 = c2;
            Ok(())
        };
        step().map_err(|e| e.at_iteration(iter))?;
        let next = pair_mse(cfg, ch, pair, &ar, &w1, &w2)?;
        sol.trace.push(next);
        sol.iterations = iter;
        let change = (current - next).abs();
        current = next;
        if change <= opts.rel_tol * next.abs() {
            sol.converged = true;
            break;
        }
    }
    sol.ar = ar;
    sol.w1 = w1;
    sol.w2 = w2;
    Ok(sol)
}

/// Exhaustive search over all `N × N` antenna pairs.
///
/// Ties go to the lexicographically smallest pair.
pub fn run_algorithm3<T: Real>(
    cfg: &SystemConfig<T>,
    ch: &ChannelSet<T>,
    opts: &SasOptions<T>,
) -> Result<SasResult<T>> {
    cfg.validate()?;
    ch.check(cfg)?;
    if opts.max_iters == 0 {
        return Err(Error::Config("max_iters must be at least 1".into()));
    }
    let mut table = vec![vec![T::zero(); cfg.n]; cfg.n];
    let mut best: Option<PairSolution<T>> = None;
    for n in 0..cfg.n {
        for m in 0..cfg.n {
            let sol = run_pair(cfg, ch, (n, m), opts)?;
            table[n][m] = sol.total_mse();
            if best.as_ref().is_none_or(|b| sol.total_mse() < b.total_mse()) {
                best = Some(sol);
            }
        }
    }
    Ok(SasResult {
        best: best.expect("at least one antenna pair"),
        table,
    })
}
