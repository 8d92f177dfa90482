//! Channel-parallelization precoding with joint power allocation.
//!
//! For `M = N` the MAC pair `{H1, H2}` is jointly diagonalized by a GSVD
//! and the stacked BC channel `G = [G1; G2]` by an SVD. With the precoders
//! `A_i = U_hi·Λ_Ai` and `Ar = U_g·Λ_Ar·V_h⁻¹` every link becomes a set of
//! parallel scalar sub-channels, and the design reduces to choosing the
//! per-stream powers `p_A1`, `p_A2`, `p_Ar`. The powers minimize the
//! diagonal upper bound
//!
//! ```text
//! J^u_i = Σ_n (s + e·x) / (s + e·x + p_g·p_h(ī)·x·y)
//! ```
//!
//! with `x = p_Ar`, `y = p_A(ī)`, `s = σ_i²·λ_Bgi`, `e = σ_r²·λ_Bh·p_g`,
//! alternating a water-filling relay step and a convex source step.

use serde::{Deserialize, Serialize};

use crate::linalg::{self, cx, ComplexMatrix};
use crate::model::{self, ChannelSet, PrecoderSet, Side, SystemConfig};
use crate::{Error, Real, Result};

const MAX_BISECTIONS: usize = 300;

/// Factors of the joint channel diagonalization and the diagonal data of
/// the per-stream model.
#[derive(Debug, Clone)]
pub struct ParallelizedChannels<T: Real> {
    /// Diagonal of `Λ_h1`.
    pub lambda_h1: Vec<T>,
    /// Diagonal of `Λ_h2`.
    pub lambda_h2: Vec<T>,
    /// Leading `N` singular values of `[G1; G2]`.
    pub lambda_g: Vec<T>,
    /// Diagonal of `B_h = (V_hᴴ·V_h)⁻¹`.
    pub lambda_bh: Vec<T>,
    /// Diagonal of `B_g1 = (Ṽ_g1ᴴ·Ṽ_g1)⁻¹`.
    pub lambda_bg1: Vec<T>,
    /// Diagonal of `B_g2 = (Ṽ_g2ᴴ·Ṽ_g2)⁻¹`.
    pub lambda_bg2: Vec<T>,
    pub u_h1: ComplexMatrix<T>,
    pub u_h2: ComplexMatrix<T>,
    pub u_g: ComplexMatrix<T>,
    pub v_h: ComplexMatrix<T>,
    pub v_g: ComplexMatrix<T>,
    v_h_inv: ComplexMatrix<T>,
}

impl<T: Real> ParallelizedChannels<T> {
    pub fn streams(&self) -> usize {
        self.lambda_g.len()
    }

    /// Squared MAC gain `p_hi` of stream `n`.
    pub fn p_h(&self, side: Side, n: usize) -> T {
        let l = match side {
            Side::One => self.lambda_h1[n],
            Side::Two => self.lambda_h2[n],
        };
        l * l
    }

    /// Squared BC gain `p_g` of stream `n`.
    pub fn p_g(&self, n: usize) -> T {
        self.lambda_g[n] * self.lambda_g[n]
    }

    pub fn lambda_bg(&self, side: Side) -> &[T] {
        match side {
            Side::One => &self.lambda_bg1,
            Side::Two => &self.lambda_bg2,
        }
    }

    pub fn v_h_inverse(&self) -> &ComplexMatrix<T> {
        &self.v_h_inv
    }
}

/// Per-stream powers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation<T: Real> {
    pub p_a1: Vec<T>,
    pub p_a2: Vec<T>,
    pub p_ar: Vec<T>,
}

impl<T: Real> PowerAllocation<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            p_a1: vec![T::zero(); n],
            p_a2: vec![T::zero(); n],
            p_ar: vec![T::zero(); n],
        }
    }

    pub fn p_a(&self, side: Side) -> &[T] {
        match side {
            Side::One => &self.p_a1,
            Side::Two => &self.p_a2,
        }
    }

    /// Checks lengths, signs and the three budgets (relative slack
    /// `POWER_TOL`).
    pub fn check(&self, cfg: &SystemConfig<T>, pc: &ParallelizedChannels<T>) -> Result<()> {
        let n = pc.streams();
        for (name, v) in [("p_a1", &self.p_a1), ("p_a2", &self.p_a2), ("p_ar", &self.p_ar)] {
            if v.len() != n {
                return Err(Error::Dimension(format!("{name} has {} entries, expected {n}", v.len())));
            }
            if v.iter().any(|x| !x.is_finite() || *x < T::zero()) {
                return Err(Error::Constraint(format!("{name} must be finite and non-negative")));
            }
        }
        let slack = T::one() + T::lit(model::POWER_TOL);
        let budgets = [
            ("source 1", sum(&self.p_a1), cfg.tau1),
            ("source 2", sum(&self.p_a2), cfg.tau2),
            ("relay", relay_usage(cfg, pc, self), cfg.taur),
        ];
        for (name, used, tau) in budgets {
            if used > tau * slack {
                return Err(Error::Constraint(format!(
                    "{name} power {} exceeds budget {}",
                    used.as_f64(),
                    tau.as_f64()
                )));
            }
        }
        Ok(())
    }
}

fn sum<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |a, &b| a + b)
}

/// Joint diagonalization of the MAC pair and the stacked BC channel.
pub fn parallelize<T: Real>(cfg: &SystemConfig<T>, ch: &ChannelSet<T>) -> Result<ParallelizedChannels<T>> {
    cfg.validate()?;
    if cfg.m != cfg.n {
        return Err(Error::Config(format!(
            "channel parallelization needs M = N (unequal sub-channel gains otherwise), got N={}, M={}",
            cfg.n, cfg.m
        )));
    }
    ch.check(cfg)?;
    let n = cfg.n;

    let gs = linalg::gsvd(&ch.h1, &ch.h2)?;
    let v_h_inv = gs
        .v
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::IllConditioned("GSVD factor V_h is singular".into()))?;
    let b_h = &v_h_inv * v_h_inv.adjoint();

    let mut g = linalg::zeros::<T>(2 * n, n);
    g.rows_mut(0, n).copy_from(&ch.g1);
    g.rows_mut(n, n).copy_from(&ch.g2);
    let sv = linalg::svd(&g)?;
    let smax = sv.singular_values[0];
    if !(sv.singular_values[n - 1] > smax * T::eps() * T::lit(1e4)) {
        return Err(Error::IllConditioned("stacked BC channel is rank deficient".into()));
    }
    let bg = |rows: usize| -> Result<Vec<T>> {
        let vt = sv.u.view((rows, 0), (n, n)).into_owned();
        let inv = linalg::inverse_hermitian_psd(&(vt.adjoint() * vt))
            .map_err(|_| Error::IllConditioned("BC block of V_g is singular".into()))?;
        Ok((0..n).map(|k| inv[(k, k)].re).collect())
    };

    Ok(ParallelizedChannels {
        lambda_h1: gs.lambda1.clone(),
        lambda_h2: gs.lambda2.clone(),
        lambda_g: sv.singular_values[..n].to_vec(),
        lambda_bh: (0..n).map(|k| b_h[(k, k)].re).collect(),
        lambda_bg1: bg(0)?,
        lambda_bg2: bg(n)?,
        u_h1: gs.u1,
        u_h2: gs.u2,
        u_g: sv.v,
        v_h: gs.v,
        v_g: sv.u,
        v_h_inv,
    })
}

/// Relay power `Σ_n p_Ar·(p_h1·p_A1 + p_h2·p_A2 + σ_r²·λ_Bh)`.
pub fn relay_usage<T: Real>(cfg: &SystemConfig<T>, pc: &ParallelizedChannels<T>, pa: &PowerAllocation<T>) -> T {
    relay_coefficients(cfg, pc, &pa.p_a1, &pa.p_a2)
        .iter()
        .zip(&pa.p_ar)
        .fold(T::zero(), |acc, (&c, &x)| acc + c * x)
}

fn relay_coefficients<T: Real>(
    cfg: &SystemConfig<T>,
    pc: &ParallelizedChannels<T>,
    p_a1: &[T],
    p_a2: &[T],
) -> Vec<T> {
    (0..pc.streams())
        .map(|n| pc.p_h(Side::One, n) * p_a1[n] + pc.p_h(Side::Two, n) * p_a2[n] + cfg.sigmar_sq * pc.lambda_bh[n])
        .collect()
}

/// Builds the structured precoders and their Wiener decoders.
pub fn assemble_precoders<T: Real>(
    cfg: &SystemConfig<T>,
    ch: &ChannelSet<T>,
    pc: &ParallelizedChannels<T>,
    pa: &PowerAllocation<T>,
) -> Result<PrecoderSet<T>> {
    pa.check(cfg, pc)?;
    let diag = |p: &[T]| {
        let d: Vec<_> = p.iter().map(|&x| cx(x.sqrt())).collect();
        ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(d))
    };
    let a1 = &pc.u_h1 * diag(&pa.p_a1);
    let a2 = &pc.u_h2 * diag(&pa.p_a2);
    let ar = &pc.u_g * diag(&pa.p_ar) * &pc.v_h_inv;
    model::with_mmse_decoders(cfg, ch, PrecoderSet::from_precoders(a1, a2, ar))
}

/// Per-stream upper bound term at destination `side`: `x` is the relay
/// power and `y` the power of the other source.
fn bound_term<T: Real>(cfg: &SystemConfig<T>, pc: &ParallelizedChannels<T>, side: Side, n: usize, x: T, y: T) -> T {
    let s = cfg.sigma_sq(side) * pc.lambda_bg(side)[n];
    let num = s + cfg.sigmar_sq * pc.lambda_bh[n] * pc.p_g(n) * x;
    num / (num + pc.p_g(n) * pc.p_h(side.other(), n) * x * y)
}

/// `J^u_i` for destination `side`.
pub fn upper_bound_side<T: Real>(
    cfg: &SystemConfig<T>,
    pc: &ParallelizedChannels<T>,
    pa: &PowerAllocation<T>,
    side: Side,
) -> T {
    let y = pa.p_a(side.other());
    (0..pc.streams()).fold(T::zero(), |acc, n| acc + bound_term(cfg, pc, side, n, pa.p_ar[n], y[n]))
}

/// `J^u_1 + J^u_2`.
pub fn upper_bound_mse<T: Real>(cfg: &SystemConfig<T>, pc: &ParallelizedChannels<T>, pa: &PowerAllocation<T>) -> T {
    upper_bound_side(cfg, pc, pa, Side::One) + upper_bound_side(cfg, pc, pa, Side::Two)
}

/// Bisection on a non-increasing function: largest point of `[lo, hi]`
/// (to relative width `tol`) where `f` is still at least `target`. Returns
/// the upper end of the final bracket.
fn bisect_decreasing<T: Real>(mut lo: T, mut hi: T, tol: T, f: impl Fn(T) -> T, target: T) -> T {
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= tol * hi {
            break;
        }
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Relay stream data: `rhs(x) = Σ_i a_i·s_i / (s_i + (e + a_i)·x)²` is the
/// magnitude of the derivative of the two bound terms in `x`.
struct RelayStream<T: Real> {
    s: [T; 2],
    a: [T; 2],
    e: T,
    c: T,
}

impl<T: Real> RelayStream<T> {
    fn new(cfg: &SystemConfig<T>, pc: &ParallelizedChannels<T>, n: usize, p_a1: &[T], p_a2: &[T]) -> Self {
        let p_src = [p_a1[n], p_a2[n]];
        let pg = pc.p_g(n);
        let side_data = |side: Side| {
            let other = side.other();
            (
                cfg.sigma_sq(side) * pc.lambda_bg(side)[n],
                pg * pc.p_h(other, n) * p_src[other.index()],
            )
        };
        let (s1, a1) = side_data(Side::One);
        let (s2, a2) = side_data(Side::Two);
        Self {
            s: [s1, s2],
            a: [a1, a2],
            e: cfg.sigmar_sq * pc.lambda_bh[n] * pg,
            c: pc.p_h(Side::One, n) * p_a1[n] + pc.p_h(Side::Two, n) * p_a2[n] + cfg.sigmar_sq * pc.lambda_bh[n],
        }
    }

    fn rhs(&self, x: T) -> T {
        (0..2).fold(T::zero(), |acc, i| {
            let d = self.s[i] + (self.e + self.a[i]) * x;
            acc + self.a[i] * self.s[i] / (d * d)
        })
    }

    /// Power solving `μ·c = rhs(x)`, or zero when the stream is switched
    /// off (`μ·c ≥ rhs(0)`).
    fn power(&self, mu: T, tol: T) -> T {
        let target = mu * self.c;
        if target >= self.rhs(T::zero()) {
            return T::zero();
        }
        // rhs(x) ≤ Σ a_i·s_i/((e + a_i)·x)², so this end is past the root
        let k = (0..2).fold(T::zero(), |acc, i| {
            if self.a[i] > T::zero() {
                let d = self.e + self.a[i];
                acc + self.a[i] * self.s[i] / (d * d)
            } else {
                acc
            }
        });
        let hi = (k / target).sqrt();
        bisect_decreasing(T::zero(), hi, tol, |x| self.rhs(x), target)
    }
}

/// Relay step result.
#[derive(Debug, Clone, PartialEq)]
pub struct RelayWaterfill<T: Real> {
    pub p_ar: Vec<T>,
    /// Multiplier of the relay budget.
    pub mu: T,
}

/// Optimal relay powers for fixed source powers (water-filling).
///
/// Each stream solves `μ·c_n = rhs_n(p)` or is switched off, and `μ` is
/// bisected so the relay budget is met with equality.
pub fn relay_waterfill<T: Real>(
    cfg: &SystemConfig<T>,
    pc: &ParallelizedChannels<T>,
    p_a1: &[T],
    p_a2: &[T],
    tol: T,
) -> Result<RelayWaterfill<T>> {
    let n = pc.streams();
    if p_a1.len() != n || p_a2.len() != n {
        return Err(Error::Dimension(format!("source powers must have {n} entries")));
    }
    let streams: Vec<_> = (0..n).map(|k| RelayStream::new(cfg, pc, k, p_a1, p_a2)).collect();
    let mu_max = streams
        .iter()
        .map(|s| s.rhs(T::zero()) / s.c)
        .fold(T::zero(), |a, b| a.max(b));
    if mu_max <= T::zero() {
        // no signal reaches either destination; the bound is flat in p_Ar
        return Ok(RelayWaterfill {
            p_ar: vec![T::zero(); n],
            mu: T::zero(),
        });
    }
    let alloc = |mu: T| -> Vec<T> { streams.iter().map(|s| s.power(mu, tol)).collect() };
    let usage = |mu: T| -> T {
        streams
            .iter()
            .fold(T::zero(), |acc, s| acc + s.c * s.power(mu, tol))
    };

    let mut lo = mu_max;
    let mut halvings = 0;
    while usage(lo) < cfg.taur {
        lo *= T::lit(0.5);
        halvings += 1;
        if halvings > 2000 || lo <= T::zero() {
            return Err(Error::Solver("could not bracket the relay water level".into()));
        }
    }
    let mu = bisect_decreasing(lo, mu_max, tol, usage, cfg.taur);
    let p_ar = alloc(mu);
    let used = streams
        .iter()
        .zip(&p_ar)
        .fold(T::zero(), |acc, (s, &x)| acc + s.c * x);
    if used <= T::zero() {
        return Err(Error::Solver("all relay streams switched off with budget unspent".into()));
    }
    Ok(RelayWaterfill { p_ar, mu })
}

/// Source step result; `multipliers` are `[ν1, ν2, μ]` for the two
/// source budgets and the relay budget.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceAllocation<T: Real> {
    pub p_a1: Vec<T>,
    pub p_a2: Vec<T>,
    pub multipliers: [T; 3],
}

/// Term of source `j` on stream `n`: its bound term is `b/(b + k·y)`, so the
/// marginal gain is `b·k/(b + k·y)²`; `d` is its relay power coefficient.
#[derive(Clone, Copy)]
struct SourceStream<T: Real> {
    b: T,
    k: T,
    d: T,
}

impl<T: Real> SourceStream<T> {
    /// Power at prices `ν + μ·d`.
    fn power(&self, nu: T, mu: T) -> T {
        if self.k <= T::zero() {
            return T::zero();
        }
        let w = nu + mu * self.d;
        if w >= self.k / self.b {
            return T::zero();
        }
        ((self.b * self.k / w).sqrt() - self.b) / self.k
    }
}

/// Powers of one source at relay price `μ`: the source budget is met with
/// equality unless it is slack at `ν = 0`.
fn source_side<T: Real>(streams: &[SourceStream<T>], tau: T, mu: T, tol: T) -> (Vec<T>, T) {
    let powers = |nu: T| -> Vec<T> { streams.iter().map(|s| s.power(nu, mu)).collect() };
    let total = |nu: T| sum(&powers(nu));
    let free = streams.iter().all(|s| s.k <= T::zero() || mu * s.d > T::zero());
    if free && total(T::zero()) <= tau {
        return (powers(T::zero()), T::zero());
    }
    let nu_max = streams
        .iter()
        .filter(|s| s.k > T::zero())
        .map(|s| s.k / s.b)
        .fold(T::zero(), |a, b| a.max(b));
    let nu = bisect_decreasing(T::zero(), nu_max, tol, total, tau);
    (powers(nu), nu)
}

/// Optimal source powers for fixed relay powers.
///
/// The bound is separable and convex in the source powers and all three
/// budgets are linear, so the KKT conditions give every stream in closed
/// form in terms of the multipliers; `ν1`, `ν2` and `μ` are found by
/// nested bisection.
pub fn source_power_update<T: Real>(
    cfg: &SystemConfig<T>,
    pc: &ParallelizedChannels<T>,
    p_ar: &[T],
    tol: T,
) -> Result<SourceAllocation<T>> {
    let n = pc.streams();
    if p_ar.len() != n {
        return Err(Error::Dimension(format!("relay powers must have {n} entries")));
    }
    if p_ar.iter().any(|x| !x.is_finite() || *x < T::zero()) {
        return Err(Error::Constraint("relay powers must be finite and non-negative".into()));
    }
    let noise = (0..n).fold(T::zero(), |acc, k| acc + p_ar[k] * cfg.sigmar_sq * pc.lambda_bh[k]);
    let budget = cfg.taur - noise;
    if budget < -cfg.taur * T::lit(model::POWER_TOL) {
        return Err(Error::InfeasibleBudget(
            "relay noise forwarding alone exceeds the relay budget".into(),
        ));
    }
    let budget = budget.max(T::zero());

    // source j drives the bound term at destination ī = other(j)
    let streams_of = |j: Side| -> Vec<SourceStream<T>> {
        let dest = j.other();
        (0..n)
            .map(|k| {
                let x = p_ar[k];
                SourceStream {
                    b: cfg.sigma_sq(dest) * pc.lambda_bg(dest)[k]
                        + cfg.sigmar_sq * pc.lambda_bh[k] * pc.p_g(k) * x,
                    k: pc.p_g(k) * pc.p_h(j, k) * x,
                    d: x * pc.p_h(j, k),
                }
            })
            .collect()
    };
    let s1 = streams_of(Side::One);
    let s2 = streams_of(Side::Two);
    let solve = |mu: T| {
        let (p1, nu1) = source_side(&s1, cfg.tau1, mu, tol);
        let (p2, nu2) = source_side(&s2, cfg.tau2, mu, tol);
        (p1, p2, nu1, nu2)
    };
    let usage = |p1: &[T], p2: &[T]| {
        (0..n).fold(T::zero(), |acc, k| acc + s1[k].d * p1[k] + s2[k].d * p2[k])
    };

    let (p1, p2, nu1, nu2) = solve(T::zero());
    if usage(&p1, &p2) <= budget {
        return Ok(SourceAllocation {
            p_a1: p1,
            p_a2: p2,
            multipliers: [nu1, nu2, T::zero()],
        });
    }
    let mu_max = s1
        .iter()
        .chain(&s2)
        .filter(|s| s.d > T::zero())
        .map(|s| s.k / (s.b * s.d))
        .fold(T::zero(), |a, b| a.max(b));
    let mu = bisect_decreasing(
        T::zero(),
        mu_max,
        tol,
        |mu| {
            let (p1, p2, _, _) = solve(mu);
            usage(&p1, &p2)
        },
        budget,
    );
    let (p1, p2, nu1, nu2) = solve(mu);
    Ok(SourceAllocation {
        p_a1: p1,
        p_a2: p2,
        multipliers: [nu1, nu2, mu],
    })
}

/// Source powers `τ_i/N` per stream and relay power split evenly so the
/// relay budget holds with equality.
pub fn uniform_allocation<T: Real>(cfg: &SystemConfig<T>, pc: &ParallelizedChannels<T>) -> PowerAllocation<T> {
    let n = pc.streams();
    let nn = T::from_usize_lossy(n);
    let p_a1 = vec![cfg.tau1 / nn; n];
    let p_a2 = vec![cfg.tau2 / nn; n];
    let c = sum(&relay_coefficients(cfg, pc, &p_a1, &p_a2));
    PowerAllocation {
        p_ar: vec![cfg.taur / c; n],
        p_a1,
        p_a2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum AllocationMode {
    /// Alternating relay water-filling and source power optimization.
    #[default]
    Optimized,
    /// Equal powers over streams, no iteration.
    Uniform,
}

#[derive(Debug, Clone)]
pub struct CpOptions<T: Real> {
    pub max_iters: usize,
    pub rel_tol: T,
    /// Relative bracket width of every multiplier bisection.
    pub tol: T,
    pub mode: AllocationMode,
    /// Starting allocation; uniform when `None`.
    pub start: Option<PowerAllocation<T>>,
}

impl<T: Real> Default for CpOptions<T> {
    fn default() -> Self {
        Self {
            max_iters: 100,
            rel_tol: T::lit(1e-8),
            tol: T::lit(1e-13),
            mode: AllocationMode::Optimized,
            start: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpTrace<T: Real> {
    /// `J^u_1 + J^u_2`: the starting value, then one entry per iteration.
    pub upper_bound: Vec<T>,
    /// Bound after every relay and every source step.
    pub half_steps: Vec<T>,
    /// `Ĵ_1 + Ĵ_2` of the assembled precoders, aligned with `upper_bound`.
    pub total_mse: Vec<T>,
    pub allocation: PowerAllocation<T>,
    pub converged: bool,
    pub iterations: usize,
}

impl<T: Real> CpTrace<T> {
    pub fn final_bound(&self) -> T {
        *self.upper_bound.last().expect("trace holds the starting value")
    }

    pub fn final_mse(&self) -> T {
        *self.total_mse.last().expect("trace holds the starting value")
    }
}

/// Channel-parallelization precoding.
pub fn run_algorithm2<T: Real>(
    cfg: &SystemConfig<T>,
    ch: &ChannelSet<T>,
    opts: &CpOptions<T>,
) -> Result<(PrecoderSet<T>, CpTrace<T>)> {
    if opts.max_iters == 0 {
        return Err(Error::Config("max_iters must be at least 1".into()));
    }
    if !(opts.rel_tol > T::zero()) || !(opts.tol > T::zero()) {
        return Err(Error::Config("tolerances must be positive".into()));
    }
    let pc = parallelize(cfg, ch)?;
    let mut pa = match &opts.start {
        Some(pa) => {
            pa.check(cfg, &pc)?;
            pa.clone()
        }
        None => uniform_allocation(cfg, &pc),
    };
    let exact = |pa: &PowerAllocation<T>| -> Result<(PrecoderSet<T>, T)> {
        let p = assemble_precoders(cfg, ch, &pc, pa)?;
        let j = model::mmse_total(cfg, ch, &p)?;
        Ok((p, j))
    };
    let mut current = upper_bound_mse(cfg, &pc, &pa);
    let (mut p, j0) = exact(&pa)?;
    let mut trace = CpTrace {
        upper_bound: vec![current],
        half_steps: vec![current],
        total_mse: vec![j0],
        allocation: pa.clone(),
        converged: false,
        iterations: 0,
    };
    if opts.mode == AllocationMode::Uniform {
        trace.converged = true;
        return Ok((p, trace));
    }

    for iter in 1..=opts.max_iters {
        let wf = relay_waterfill(cfg, &pc, &pa.p_a1, &pa.p_a2, opts.tol).map_err(|e| e.at_iteration(iter))?;
        let cand = PowerAllocation {
            p_ar: wf.p_ar,
            ..pa.clone()
        };
        let jc = upper_bound_mse(cfg, &pc, &cand);
        let mut j = current;
        // guards against rounding; both steps are exact minimizations
        if jc <= j {
            pa = cand;
            j = jc;
        }
        trace.half_steps.push(j);

        let src = source_power_update(cfg, &pc, &pa.p_ar, opts.tol).map_err(|e| e.at_iteration(iter))?;
        let cand = PowerAllocation {
            p_a1: src.p_a1,
            p_a2: src.p_a2,
            p_ar: pa.p_ar.clone(),
        };
        let jc = upper_bound_mse(cfg, &pc, &cand);
        if jc <= j {
            pa = cand;
            j = jc;
        }
        trace.half_steps.push(j);

        let (pi, ji) = exact(&pa).map_err(|e| e.at_iteration(iter))?;
        p = pi;
        trace.upper_bound.push(j);
        trace.total_mse.push(ji);
        trace.iterations = iter;
        let change = (current - j).abs();
        current = j;
        if change <= opts.rel_tol * j.abs() {
            trace.converged = true;
            break;
        }
    }
    trace.allocation = pa;
    Ok((p, trace))
}
