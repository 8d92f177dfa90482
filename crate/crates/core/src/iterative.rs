//! Alternating decoder / relay / source optimization.
//!
//! Each cycle replaces the decoders by their Wiener solutions, the relay
//! precoder by the solution of its convex sub-problem (closed form plus a
//! bisection on the power multiplier) and the source precoders by the
//! solution of the source QCQP. Every step solves its sub-problem
//! optimally, so the Total-MSE cannot increase.

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, cx, identity, kron, trace_re, vec, ComplexMatrix};
use crate::model::{self, ChannelSet, PrecoderSet, SystemConfig};
use crate::qcqp;
use crate::{Error, Real, Result};

const EXTRAPOLATION_LAG: usize = 2;

/// Number of data streams per source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum StreamMode {
    /// `N` streams per source.
    #[default]
    Multi,
    /// One stream per source.
    Single,
}

impl StreamMode {
    pub fn streams(self, n: usize) -> usize {
        match self {
            StreamMode::Multi => n,
            StreamMode::Single => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Init<T: Real> {
    /// `A_i = sqrt(τ_i/N)·I` (all-equal vector for one stream) and a
    /// scaled identity relay meeting the relay budget exactly.
    Identity,
    /// Gaussian precoders scaled to meet every budget exactly.
    Random(u64),
    Provided(PrecoderSet<T>),
}

#[derive(Debug, Clone)]
pub struct IterativeOptions<T: Real> {
    pub max_iters: usize,
    pub rel_tol: T,
    pub init: Init<T>,
    pub bisection_tol: T,
    pub qcqp_tol: T,
    pub streams: StreamMode,
    /// After each cycle, try an extrapolated point along the displacement
    /// over the last two cycles and keep it only if it lowers the
    /// Total-MSE.
    pub extrapolate: bool,
}

impl<T: Real> Default for IterativeOptions<T> {
    fn default() -> Self {
        Self {
            max_iters: 500,
            rel_tol: T::lit(1e-6),
            init: Init::Identity,
            bisection_tol: T::lit(1e-10),
            qcqp_tol: T::lit(1e-8),
            streams: StreamMode::Multi,
            extrapolate: true,
        }
    }
}

impl<T: Real> IterativeOptions<T> {
    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        for (name, v) in [
            ("rel_tol", self.rel_tol),
            ("bisection_tol", self.bisection_tol),
            ("qcqp_tol", self.qcqp_tol),
        ] {
            if !(v > T::zero()) {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace<T: Real> {
    /// Total-MSE under Wiener decoders: the initial value, then one entry
    /// per completed iteration.
    pub total_mse: Vec<T>,
    /// Relay power multiplier from the last relay update.
    pub relay_lambda: T,
    /// Source QCQP multipliers (two source budgets, relay budget) from the
    /// last source update.
    pub source_multipliers: Vec<T>,
    pub converged: bool,
    pub iterations: usize,
}

impl<T: Real> IterationTrace<T> {
    pub fn final_mse(&self) -> T {
        *self.total_mse.last().expect("trace holds the initial value")
    }

    /// Largest increase between consecutive entries (zero when monotone).
    pub fn max_increase(&self) -> T {
        self.total_mse
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(T::zero(), |a, b| a.max(b))
    }
}

/// Data of the relay sub-problem for fixed `A_i`, `W_i`.
#[derive(Debug, Clone)]
pub struct RelayProblem<T: Real> {
    base: ComplexMatrix<T>,
    rx_kron: ComplexMatrix<T>,
    rx: ComplexMatrix<T>,
    rhs: ComplexMatrix<T>,
    rr: ComplexMatrix<T>,
    m: usize,
}

#[derive(Debug, Clone)]
pub struct RelaySolution<T: Real> {
    pub ar: ComplexMatrix<T>,
    pub lambda: T,
    /// Upper bound `sqrt(Tr{R_r·R_x⁻¹·R_rᴴ}/τ_r)` on the multiplier.
    pub lambda_bound: T,
}

impl<T: Real> RelayProblem<T> {
    pub fn new(
        cfg: &SystemConfig<T>,
        ch: &ChannelSet<T>,
        a1: &ComplexMatrix<T>,
        a2: &ComplexMatrix<T>,
        w1: &ComplexMatrix<T>,
        w2: &ComplexMatrix<T>,
    ) -> Result<Self> {
        ch.check(cfg)?;
        let m = cfg.m;
        let rx1 = model::source_covariance(cfg, &ch.h1, a1);
        let rx2 = model::source_covariance(cfg, &ch.h2, a2);
        let rx = model::relay_covariance(cfg, ch, a1, a2);
        let w1g1 = w1 * &ch.g1;
        let w2g2 = w2 * &ch.g2;
        let rr1 = w1g1.adjoint() * &w1g1;
        let rr2 = w2g2.adjoint() * &w2g2;
        let rr = w1g1.adjoint() * (&ch.h2 * a2).adjoint() + w2g2.adjoint() * (&ch.h1 * a1).adjoint();
        let base = kron(&rx2.transpose(), &rr1) + kron(&rx1.transpose(), &rr2);
        let rx_kron = kron(&rx.transpose(), &identity::<T>(m));
        Ok(Self {
            base,
            rx_kron,
            rhs: vec(&rr),
            rx,
            rr,
            m,
        })
    }

    /// Stationary point of the Lagrangian for multiplier `λ`.
    pub fn candidate(&self, lambda: T) -> Result<ComplexMatrix<T>> {
        let sys = &self.base + &self.rx_kron * cx(lambda);
        let v = linalg::solve_hermitian_psd(&sys, &self.rhs)?;
        linalg::mat(&v, self.m, self.m)
    }

    /// Like [`candidate`](Self::candidate), but `None` when the system is
    /// singular or too badly conditioned to trust the solution.
    fn well_posed_candidate(&self, lambda: T) -> Result<Option<ComplexMatrix<T>>> {
        let sys = &self.base + &self.rx_kron * cx(lambda);
        let chol = match linalg::cholesky(&sys) {
            Ok(c) => c,
            Err(Error::NotPositiveDefinite(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        let pivots = chol.l_dirty().diagonal();
        let (lo, hi) = pivots
            .iter()
            .fold((T::max_value().unwrap_or(T::one()), T::zero()), |(a, b), d| (a.min(d.re), b.max(d.re)));
        if lo * lo < hi * hi * T::eps() * T::lit(1e4) {
            return Ok(None);
        }
        linalg::mat(&chol.solve(&self.rhs), self.m, self.m).map(Some)
    }

    /// `g(λ) = Tr{Ar(λ)·R_x·Ar(λ)ᴴ}`.
    pub fn power(&self, ar: &ComplexMatrix<T>) -> T {
        trace_re(&(ar * &self.rx * ar.adjoint()))
    }

    pub fn lambda_bound(&self, taur: T) -> Result<T> {
        let x = linalg::solve_hermitian_psd(&self.rx, &self.rr.adjoint())?;
        Ok((trace_re(&(&self.rr * x)).max(T::zero()) / taur).sqrt())
    }

    /// Solves the relay sub-problem for budget `taur`.
    pub fn solve(&self, taur: T, tol: T) -> Result<RelaySolution<T>> {
        let bound = self.lambda_bound(taur)?;
        if self.rr.norm() == T::zero() {
            return Ok(RelaySolution {
                ar: linalg::zeros(self.m, self.m),
                lambda: T::zero(),
                lambda_bound: bound,
            });
        }
        // The unconstrained system is singular when the decoders do not
        // span the relay space; a vanishing multiplier then selects the
        // minimum-power minimizer. The floor grows until the system is
        // safely factorizable.
        let scale = (self.base.camax() / self.rx.camax()).max(T::eps());
        let mut lambda0 = T::zero();
        let ar0 = loop {
            if let Some(ar) = self.well_posed_candidate(lambda0)? {
                break ar;
            }
            lambda0 = if lambda0 == T::zero() {
                T::eps() * T::lit(1e3) * scale
            } else {
                lambda0 * T::lit(10.0)
            };
            if lambda0 > T::lit(1e-3) * scale {
                return Err(Error::NotPositiveDefinite("relay system stays singular".into()));
            }
        };
        if self.power(&ar0) <= taur {
            return Ok(RelaySolution {
                ar: ar0,
                lambda: lambda0,
                lambda_bound: bound,
            });
        }

        let mut lo = lambda0;
        let mut hi = bound.max(lambda0 * T::lit(2.0)).max(T::eps());
        let mut grow = 0;
        let mut ar_hi = loop {
            match self.well_posed_candidate(hi)? {
                Some(ar) if self.power(&ar) <= taur => break ar,
                _ => {}
            }
            grow += 1;
            if grow > 60 {
                return Err(Error::Solver(
                    "could not bracket the relay power multiplier".into(),
                ));
            }
            lo = hi;
            hi *= T::lit(2.0);
        };
        for _ in 0..200 {
            if self.power(&ar_hi) >= taur * (T::one() - tol) {
                break;
            }
            let mid = (lo + hi) * T::lit(0.5);
            if mid <= lo || mid >= hi {
                break;
            }
            // a system too close to singular sits on the low side
            match self.well_posed_candidate(mid)? {
                Some(ar) if self.power(&ar) <= taur => {
                    hi = mid;
                    ar_hi = ar;
                }
                _ => lo = mid,
            }
        }
        Ok(RelaySolution {
            ar: ar_hi,
            lambda: hi,
            lambda_bound: bound,
        })
    }
}

/// Optimal relay precoder for fixed source precoders and decoders.
pub fn relay_update<T: Real>(
    cfg: &SystemConfig<T>,
    ch: &ChannelSet<T>,
    a1: &ComplexMatrix<T>,
    a2: &ComplexMatrix<T>,
    w1: &ComplexMatrix<T>,
    w2: &ComplexMatrix<T>,
    bisection_tol: T,
) -> Result<RelaySolution<T>> {
    RelayProblem::new(cfg, ch, a1, a2, w1, w2)?.solve(cfg.taur, bisection_tol)
}

#[derive(Debug, Clone)]
pub struct SourceSolution<T: Real> {
    pub a1: ComplexMatrix<T>,
    pub a2: ComplexMatrix<T>,
    /// `J_s1 + J_s2` at the solution.
    pub objective: T,
    pub multipliers: Vec<T>,
    pub kkt_residual: T,
}

/// Optimal source precoders for fixed relay precoder and decoders.
pub fn source_update<T: Real>(
    cfg: &SystemConfig<T>,
    ch: &ChannelSet<T>,
    ar: &ComplexMatrix<T>,
    w1: &ComplexMatrix<T>,
    w2: &ComplexMatrix<T>,
    tol: T,
) -> Result<SourceSolution<T>> {
    let q = qcqp::embed_source_problem(cfg, ch, ar, w1, w2)?;
    let sol = qcqp::solve_qcqp(&q, tol)?;
    let (a1, a2) = qcqp::unpack_sources(&sol.x, cfg.n, w2.nrows(), w1.nrows())?;
    Ok(SourceSolution {
        a1,
        a2,
        objective: sol.objective,
        multipliers: sol.multipliers,
        kkt_residual: sol.kkt_residual,
    })
}

/// Relay precoder `sqrt(τ_r / Tr{R_x})·I`.
pub fn scaled_identity_relay<T: Real>(
    cfg: &SystemConfig<T>,
    ch: &ChannelSet<T>,
    a1: &ComplexMatrix<T>,
    a2: &ComplexMatrix<T>,
) -> ComplexMatrix<T> {
    let rx = model::relay_covariance(cfg, ch, a1, a2);
    identity::<T>(cfg.m) * cx((cfg.taur / trace_re(&rx)).sqrt())
}

/// Initial precoders (decoders left at zero).
pub fn initial_precoders<T: Real>(
    cfg: &SystemConfig<T>,
    ch: &ChannelSet<T>,
    init: &Init<T>,
    streams: StreamMode,
) -> Result<PrecoderSet<T>> {
    let (n, m) = (cfg.n, cfg.m);
    let d = streams.streams(n);
    match init {
        Init::Identity => {
            let shape = |tau: T| {
                let unit = match streams {
                    StreamMode::Multi => identity::<T>(n),
                    StreamMode::Single => ComplexMatrix::from_element(n, 1, cx(T::one())),
                };
                unit * cx((tau / T::from_usize_lossy(n)).sqrt())
            };
            let a1 = shape(cfg.tau1);
            let a2 = shape(cfg.tau2);
            let ar = scaled_identity_relay(cfg, ch, &a1, &a2);
            Ok(PrecoderSet::from_precoders(a1, a2, ar))
        }
        Init::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut draw = |rows, cols, budget: T| {
                let g: ComplexMatrix<T> = linalg::complex_gaussian(rows, cols, &mut rng);
                let scale = (budget / g.norm_squared()).sqrt();
                g * cx(scale)
            };
            let a1 = draw(n, d, cfg.tau1);
            let a2 = draw(n, d, cfg.tau2);
            let ar = draw(m, m, T::one());
            let p = PrecoderSet::from_precoders(a1, a2, ar);
            let used = model::relay_power(cfg, ch, &p);
            let ar = &p.ar * cx((cfg.taur / used).sqrt());
            Ok(PrecoderSet { ar, ..p })
        }
        Init::Provided(p) => {
            if p.a1.ncols() != d || p.a2.ncols() != d {
                return Err(Error::Dimension(format!(
                    "provided precoders carry {}/{} streams, expected {d}",
                    p.a1.ncols(),
                    p.a2.ncols()
                )));
            }
            let p = PrecoderSet::from_precoders(p.a1.clone(), p.a2.clone(), p.ar.clone());
            model::check_power(cfg, ch, &p)?;
            Ok(p)
        }
    }
}

/// Runs the alternating optimization to convergence.
pub fn run_algorithm1<T: Real>(
    cfg: &SystemConfig<T>,
    ch: &ChannelSet<T>,
    opts: &IterativeOptions<T>,
) -> Result<(PrecoderSet<T>, IterationTrace<T>)> {
    opts.validate()?;
    cfg.validate()?;
    if cfg.m < cfg.n {
        return Err(Error::Config(format!(
            "iterative precoding needs M >= N, got N={}, M={}",
            cfg.n, cfg.m
        )));
    }
    ch.check(cfg)?;
    let p = initial_precoders(cfg, ch, &opts.init, opts.streams)?;
    let mut p = model::with_mmse_decoders(cfg, ch, p)?;
    let mut current = model::total_mse(cfg, ch, &p)?;
    let mut trace = IterationTrace {
        total_mse: vec![current],
        relay_lambda: T::zero(),
        source_multipliers: Vec::new(),
        converged: false,
        iterations: 0,
    };

    let mut beta = T::one();
    // two-step lag damps the zig-zag between the relay and source blocks
    let mut history: VecDeque<PrecoderSet<T>> = VecDeque::with_capacity(EXTRAPOLATION_LAG + 1);
    for iter in 1..=opts.max_iters {
        let step = |p: &mut PrecoderSet<T>, trace: &mut IterationTrace<T>| -> Result<T> {
            let mut j = model::total_mse(cfg, ch, p)?;

            let relay = relay_update(cfg, ch, &p.a1, &p.a2, &p.w1, &p.w2, opts.bisection_tol)?;
            let mut cand = p.clone();
            cand.ar = relay.ar;
            let jc = model::total_mse(cfg, ch, &cand)?;
            // guards against rounding; each update is optimal in exact
            // arithmetic
            if jc <= j {
                *p = cand;
                j = jc;
                trace.relay_lambda = relay.lambda;
            }

            let src = source_update(cfg, ch, &p.ar, &p.w1, &p.w2, opts.qcqp_tol)?;
            let mut cand = p.clone();
            cand.a1 = src.a1;
            cand.a2 = src.a2;
            if model::total_mse(cfg, ch, &cand)? <= j {
                *p = cand;
                trace.source_multipliers = src.multipliers;
            }

            *p = model::with_mmse_decoders(cfg, ch, p.clone())?;
            model::total_mse(cfg, ch, p)
        };
        history.push_back(p.clone());
        if history.len() > EXTRAPOLATION_LAG {
            history.pop_front();
        }
        let before = history[0].clone();
        let mut next = step(&mut p, &mut trace).map_err(|e| e.at_iteration(iter))?;
        if opts.extrapolate {
            let (cand, jc, b) = extrapolate_search(cfg, ch, &before, &p, next, beta)
                .map_err(|e| e.at_iteration(iter))?;
            if let Some(cand) = cand {
                p = cand;
                next = jc;
                beta = b;
            } else {
                beta = T::one();
            }
        }
        trace.total_mse.push(next);
        trace.iterations = iter;
        let change = (current - next).abs();
        current = next;
        if change <= opts.rel_tol * next.abs() {
            trace.converged = true;
            break;
        }
    }
    Ok((p, trace))
}

/// Line search along `cur − prev`: doubles the step while the
/// Total-MSE keeps falling, halves it while it does not improve.
/// Returns the best point found (if any beats `j_cur`), its value and step.
fn extrapolate_search<T: Real>(
    cfg: &SystemConfig<T>,
    ch: &ChannelSet<T>,
    prev: &PrecoderSet<T>,
    cur: &PrecoderSet<T>,
    j_cur: T,
    beta: T,
) -> Result<(Option<PrecoderSet<T>>, T, T)> {
    let two = T::lit(2.0);
    let eval = |b: T| -> Result<(PrecoderSet<T>, T)> {
        let p = extrapolate(cfg, ch, prev, cur, b)?;
        let j = model::total_mse(cfg, ch, &p)?;
        Ok((p, j))
    };
    let (mut best_p, mut best_j) = eval(beta)?;
    let mut b = beta;
    if best_j < j_cur {
        for _ in 0..12 {
            let (p, j) = eval(b * two)?;
            if j >= best_j {
                break;
            }
            best_p = p;
            best_j = j;
            b *= two;
        }
        return Ok((Some(best_p), best_j, b));
    }
    for _ in 0..4 {
        b /= two;
        let (p, j) = eval(b)?;
        if j < j_cur {
            return Ok((Some(p), j, b));
        }
    }
    Ok((None, j_cur, b))
}

/// `cur + β·(cur − prev)` for the three precoders, scaled back onto the
/// power budgets, with fresh Wiener decoders.
fn extrapolate<T: Real>(
    cfg: &SystemConfig<T>,
    ch: &ChannelSet<T>,
    prev: &PrecoderSet<T>,
    cur: &PrecoderSet<T>,
    beta: T,
) -> Result<PrecoderSet<T>> {
    let push = |x: &ComplexMatrix<T>, y: &ComplexMatrix<T>| y + (y - x) * cx(beta);
    let fit = |a: ComplexMatrix<T>, tau: T| {
        let used = a.norm_squared();
        if used > tau {
            a * cx((tau / used).sqrt())
        } else {
            a
        }
    };
    let a1 = fit(push(&prev.a1, &cur.a1), cfg.tau1);
    let a2 = fit(push(&prev.a2, &cur.a2), cfg.tau2);
    let mut p = PrecoderSet::from_precoders(a1, a2, push(&prev.ar, &cur.ar));
    let used = model::relay_power(cfg, ch, &p);
    if used > cfg.taur {
        p.ar *= cx((cfg.taur / used).sqrt());
    }
    model::with_mmse_decoders(cfg, ch, p)
}

/// Best of `restarts` runs from independent random initializations.
///
/// Seeds are `seed, seed + 1, ...`; ties keep the earliest run.
pub fn run_best_of_random<T: Real>(
    cfg: &SystemConfig<T>,
    ch: &ChannelSet<T>,
    opts: &IterativeOptions<T>,
    restarts: usize,
    seed: u64,
) -> Result<(PrecoderSet<T>, IterationTrace<T>)> {
    if restarts == 0 {
        return Err(Error::Config("restarts must be at least 1".into()));
    }
    let mut best: Option<(PrecoderSet<T>, IterationTrace<T>)> = None;
    for k in 0..restarts {
        let run_opts = IterativeOptions {
            init: Init::Random(seed.wrapping_add(k as u64)),
            ..opts.clone()
        };
        let (p, t) = run_algorithm1(cfg, ch, &run_opts)?;
        if best.as_ref().is_none_or(|(_, bt)| t.final_mse() < bt.final_mse()) {
            best = Some((p, t));
        }
    }
    Ok(best.expect("at least one restart"))
}
