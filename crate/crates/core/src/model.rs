//! The `(N, M, N)` two-way relay signal model.
//!
//! Source `i` sends `x_i = A_i·s_i` with `E[s_i·s_iᴴ] = I`. The relay
//! forwards `Ar·(H1·x1 + H2·x2 + n_r)` and destination `i`, after removing
//! its own back-propagated signal, sees
//! `y_i = F_i·s_ī + G_i·Ar·n_r + n_i` with `F_i = G_i·Ar·H_ī·A_ī`.
//!
//! Precoders may carry fewer streams than antennas (`A_i` is `N × d`,
//! `W_i` is `d × N`); the multi-stream designs use `d = N` and the
//! single-stream ones `d = 1`.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, cx, identity, trace_re, ComplexMatrix};
use crate::{Error, Real, Result};

/// Relative slack allowed on power constraints.
pub const POWER_TOL: f64 = 1e-9;

/// Channel condition number above which a warning is logged.
pub const COND_WARN: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    One,
    Two,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::One, Side::Two];

    /// The partner node `ī`.
    pub fn other(self) -> Side {
        match self {
            Side::One => Side::Two,
            Side::Two => Side::One,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Side::One => 0,
            Side::Two => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig<T: Real> {
    /// Antennas per source.
    pub n: usize,
    /// Antennas at the relay.
    pub m: usize,
    pub tau1: T,
    pub tau2: T,
    pub taur: T,
    pub sigma1_sq: T,
    pub sigma2_sq: T,
    pub sigmar_sq: T,
}

impl<T: Real> SystemConfig<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n: usize,
        m: usize,
        tau1: T,
        tau2: T,
        taur: T,
        sigma1_sq: T,
        sigma2_sq: T,
        sigmar_sq: T,
    ) -> Result<Self> {
        let cfg = Self {
            n,
            m,
            tau1,
            tau2,
            taur,
            sigma1_sq,
            sigma2_sq,
            sigmar_sq,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::Config(format!(
                "antenna counts must be positive (N={}, M={})",
                self.n, self.m
            )));
        }
        let named = [
            ("tau1", self.tau1),
            ("tau2", self.tau2),
            ("taur", self.taur),
            ("sigma1_sq", self.sigma1_sq),
            ("sigma2_sq", self.sigma2_sq),
            ("sigmar_sq", self.sigmar_sq),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v > T::zero()) {
                return Err(Error::Config(format!(
                    "{name} must be positive and finite, got {}",
                    v.as_f64()
                )));
            }
        }
        Ok(())
    }

    /// Source power budget `τ_i`.
    pub fn tau(&self, side: Side) -> T {
        match side {
            Side::One => self.tau1,
            Side::Two => self.tau2,
        }
    }

    /// Destination noise variance `σ_i²`.
    pub fn sigma_sq(&self, side: Side) -> T {
        match side {
            Side::One => self.sigma1_sq,
            Side::Two => self.sigma2_sq,
        }
    }

    /// Same system with every power budget multiplied by `factor`.
    pub fn scale_budgets(&self, factor: T) -> Self {
        Self {
            tau1: self.tau1 * factor,
            tau2: self.tau2 * factor,
            taur: self.taur * factor,
            ..self.clone()
        }
    }
}

/// One channel realization: `H_i` is `M × N`, `G_i` is `N × M`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet<T: Real> {
    pub h1: ComplexMatrix<T>,
    pub h2: ComplexMatrix<T>,
    pub g1: ComplexMatrix<T>,
    pub g2: ComplexMatrix<T>,
}

impl<T: Real> ChannelSet<T> {
    /// Checks shapes against `cfg` and warns on badly conditioned links.
    pub fn new(
        cfg: &SystemConfig<T>,
        h1: ComplexMatrix<T>,
        h2: ComplexMatrix<T>,
        g1: ComplexMatrix<T>,
        g2: ComplexMatrix<T>,
    ) -> Result<Self> {
        let ch = Self { h1, h2, g1, g2 };
        ch.check(cfg)?;
        for (name, mat) in [("H1", &ch.h1), ("H2", &ch.h2), ("G1", &ch.g1), ("G2", &ch.g2)] {
            let cond = linalg::condition_number(mat)?;
            if cond.as_f64() > COND_WARN {
                warn!("channel {name} is badly conditioned (cond = {:.3e})", cond.as_f64());
            }
        }
        Ok(ch)
    }

    /// Reciprocal channels `G_i = H_iᵀ`.
    pub fn reciprocal(
        cfg: &SystemConfig<T>,
        h1: ComplexMatrix<T>,
        h2: ComplexMatrix<T>,
    ) -> Result<Self> {
        let g1 = h1.transpose();
        let g2 = h2.transpose();
        Self::new(cfg, h1, h2, g1, g2)
    }

    pub fn check(&self, cfg: &SystemConfig<T>) -> Result<()> {
        let (n, m) = (cfg.n, cfg.m);
        for (name, mat, shape) in [
            ("H1", &self.h1, (m, n)),
            ("H2", &self.h2, (m, n)),
            ("G1", &self.g1, (n, m)),
            ("G2", &self.g2, (n, m)),
        ] {
            if mat.shape() != shape {
                return Err(Error::Dimension(format!(
                    "{name} is {:?}, expected {shape:?}",
                    mat.shape()
                )));
            }
            linalg::ensure_finite(mat, name)?;
        }
        Ok(())
    }

    pub fn h(&self, side: Side) -> &ComplexMatrix<T> {
        match side {
            Side::One => &self.h1,
            Side::Two => &self.h2,
        }
    }

    pub fn g(&self, side: Side) -> &ComplexMatrix<T> {
        match side {
            Side::One => &self.g1,
            Side::Two => &self.g2,
        }
    }
}

/// Source precoders `A_i` (`N × d`), relay precoder `Ar` (`M × M`) and
/// decoders `W_i` (`d × N`).
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet<T: Real> {
    pub a1: ComplexMatrix<T>,
    pub a2: ComplexMatrix<T>,
    pub ar: ComplexMatrix<T>,
    pub w1: ComplexMatrix<T>,
    pub w2: ComplexMatrix<T>,
}

impl<T: Real> PrecoderSet<T> {
    /// Precoders with zero decoders; call [`with_mmse_decoders`] to fill them.
    pub fn from_precoders(a1: ComplexMatrix<T>, a2: ComplexMatrix<T>, ar: ComplexMatrix<T>) -> Self {
        let w1 = linalg::zeros(a2.ncols(), a1.nrows());
        let w2 = linalg::zeros(a1.ncols(), a2.nrows());
        Self { a1, a2, ar, w1, w2 }
    }

    pub fn a(&self, side: Side) -> &ComplexMatrix<T> {
        match side {
            Side::One => &self.a1,
            Side::Two => &self.a2,
        }
    }

    pub fn w(&self, side: Side) -> &ComplexMatrix<T> {
        match side {
            Side::One => &self.w1,
            Side::Two => &self.w2,
        }
    }

    pub fn set_w(&mut self, side: Side, w: ComplexMatrix<T>) {
        match side {
            Side::One => self.w1 = w,
            Side::Two => self.w2 = w,
        }
    }

    fn check(&self, cfg: &SystemConfig<T>) -> Result<()> {
        let (n, m) = (cfg.n, cfg.m);
        let d1 = self.a1.ncols();
        let d2 = self.a2.ncols();
        for (name, mat, shape) in [
            ("A1", &self.a1, (n, d1)),
            ("A2", &self.a2, (n, d2)),
            ("Ar", &self.ar, (m, m)),
            ("W1", &self.w1, (d2, n)),
            ("W2", &self.w2, (d1, n)),
        ] {
            if mat.shape() != shape {
                return Err(Error::Dimension(format!(
                    "{name} is {:?}, expected {shape:?}",
                    mat.shape()
                )));
            }
        }
        Ok(())
    }
}

fn check_all<T: Real>(cfg: &SystemConfig<T>, ch: &ChannelSet<T>, p: &PrecoderSet<T>) -> Result<()> {
    ch.check(cfg)?;
    p.check(cfg)
}

/// `F_i = G_i·Ar·H_ī·A_ī`.
pub fn equivalent_channel<T: Real>(
    ch: &ChannelSet<T>,
    p: &PrecoderSet<T>,
    side: Side,
) -> Result<ComplexMatrix<T>> {
    let o = side.other();
    let (g, ar, h, a) = (ch.g(side), &p.ar, ch.h(o), p.a(o));
    if g.ncols() != ar.nrows() || ar.ncols() != h.nrows() || h.ncols() != a.nrows() {
        return Err(Error::Dimension(format!(
            "cannot chain G {:?}, Ar {:?}, H {:?}, A {:?}",
            g.shape(),
            ar.shape(),
            h.shape(),
            a.shape()
        )));
    }
    Ok(g * ar * h * a)
}

/// `R_{x_i} = H_i·A_i·A_iᴴ·H_iᴴ + σ_r²·I`.
pub fn source_covariance<T: Real>(
    cfg: &SystemConfig<T>,
    h: &ComplexMatrix<T>,
    a: &ComplexMatrix<T>,
) -> ComplexMatrix<T> {
    let ha = h * a;
    &ha * ha.adjoint() + identity::<T>(h.nrows()) * cx(cfg.sigmar_sq)
}

/// Relay input covariance `R_x = Σ_i H_i·A_i·A_iᴴ·H_iᴴ + σ_r²·I`.
pub fn relay_covariance<T: Real>(
    cfg: &SystemConfig<T>,
    ch: &ChannelSet<T>,
    a1: &ComplexMatrix<T>,
    a2: &ComplexMatrix<T>,
) -> ComplexMatrix<T> {
    let h1a = &ch.h1 * a1;
    let h2a = &ch.h2 * a2;
    &h1a * h1a.adjoint() + &h2a * h2a.adjoint() + identity::<T>(cfg.m) * cx(cfg.sigmar_sq)
}

/// `Tr(A_i·A_iᴴ)`.
pub fn source_power<T: Real>(p: &PrecoderSet<T>, side: Side) -> T {
    p.a(side).norm_squared()
}

/// `Tr{Ar·R_x·Arᴴ}`.
pub fn relay_power<T: Real>(cfg: &SystemConfig<T>, ch: &ChannelSet<T>, p: &PrecoderSet<T>) -> T {
    let rx = relay_covariance(cfg, ch, &p.a1, &p.a2);
    trace_re(&(&p.ar * rx * p.ar.adjoint()))
}

/// Errors with [`Error::Constraint`] when a power budget is exceeded by
/// more than [`POWER_TOL`] relative.
pub fn check_power<T: Real>(cfg: &SystemConfig<T>, ch: &ChannelSet<T>, p: &PrecoderSet<T>) -> Result<()> {
    let slack = T::one() + T::lit(POWER_TOL);
    for side in Side::BOTH {
        let used = source_power(p, side);
        if used > cfg.tau(side) * slack {
            return Err(Error::Constraint(format!(
                "source {} power {:.6e} exceeds budget {:.6e}",
                side.index() + 1,
                used.as_f64(),
                cfg.tau(side).as_f64()
            )));
        }
    }
    let used = relay_power(cfg, ch, p);
    if used > cfg.taur * slack {
        return Err(Error::Constraint(format!(
            "relay power {:.6e} exceeds budget {:.6e}",
            used.as_f64(),
            cfg.taur.as_f64()
        )));
    }
    Ok(())
}

/// Noise covariance at destination `i` after self-interference removal:
/// `σ_i²·I + σ_r²·G_i·Ar·Arᴴ·G_iᴴ`.
fn noise_covariance<T: Real>(
    cfg: &SystemConfig<T>,
    ch: &ChannelSet<T>,
    ar: &ComplexMatrix<T>,
    side: Side,
) -> ComplexMatrix<T> {
    let ga = ch.g(side) * ar;
    (&ga * ga.adjoint()) * cx(cfg.sigmar_sq) + identity::<T>(cfg.n) * cx(cfg.sigma_sq(side))
}

/// MSE at destination `i` for the decoder stored in `p`.
pub fn mse<T: Real>(
    cfg: &SystemConfig<T>,
    ch: &ChannelSet<T>,
    p: &PrecoderSet<T>,
    side: Side,
) -> Result<T> {
    check_all(cfg, ch, p)?;
    let f = equivalent_channel(ch, p, side)?;
    let w = p.w(side);
    let wf = w * &f;
    let d = wf.nrows();
    let r = noise_covariance(cfg, ch, &p.ar, side);
    let e = &wf - identity::<T>(d);
    Ok(e.norm_squared() + trace_re(&(w * r * w.adjoint())))
}

/// `J1 + J2` with the decoders stored in `p`.
pub fn total_mse<T: Real>(cfg: &SystemConfig<T>, ch: &ChannelSet<T>, p: &PrecoderSet<T>) -> Result<T> {
    Ok(mse(cfg, ch, p, Side::One)? + mse(cfg, ch, p, Side::Two)?)
}

/// Wiener decoder `W_i = F_iᴴ·R_{w_i}⁻¹`.
pub fn mmse_decoder<T: Real>(
    cfg: &SystemConfig<T>,
    ch: &ChannelSet<T>,
    p: &PrecoderSet<T>,
    side: Side,
) -> Result<ComplexMatrix<T>> {
    check_all(cfg, ch, p)?;
    let f = equivalent_channel(ch, p, side)?;
    let rw = &f * f.adjoint() + noise_covariance(cfg, ch, &p.ar, side);
    // R_w is Hermitian, so Fᴴ·R_w⁻¹ = (R_w⁻¹·F)ᴴ
    Ok(linalg::solve_hermitian_psd(&rw, &f)?.adjoint())
}

/// Replaces both decoders by their Wiener solutions.
pub fn with_mmse_decoders<T: Real>(
    cfg: &SystemConfig<T>,
    ch: &ChannelSet<T>,
    mut p: PrecoderSet<T>,
) -> Result<PrecoderSet<T>> {
    let w1 = mmse_decoder(cfg, ch, &p, Side::One)?;
    let w2 = mmse_decoder(cfg, ch, &p, Side::Two)?;
    p.w1 = w1;
    p.w2 = w2;
    Ok(p)
}

/// `Ĵ_i = Tr{[I + F_iᴴ·R_n⁻¹·F_i]⁻¹}`, the MSE under the Wiener decoder.
pub fn mmse_residual<T: Real>(
    cfg: &SystemConfig<T>,
    ch: &ChannelSet<T>,
    p: &PrecoderSet<T>,
    side: Side,
) -> Result<T> {
    check_all(cfg, ch, p)?;
    let f = equivalent_channel(ch, p, side)?;
    let rn = noise_covariance(cfg, ch, &p.ar, side);
    let snr = f.adjoint() * linalg::solve_hermitian_psd(&rn, &f)?;
    let k = linalg::hermitian_part(&snr) + identity::<T>(f.ncols());
    Ok(trace_re(&linalg::inverse_hermitian_psd(&k)?))
}

/// `Ĵ1 + Ĵ2`.
pub fn mmse_total<T: Real>(cfg: &SystemConfig<T>, ch: &ChannelSet<T>, p: &PrecoderSet<T>) -> Result<T> {
    Ok(mmse_residual(cfg, ch, p, Side::One)? + mmse_residual(cfg, ch, p, Side::Two)?)
}

/// Total-MSE floor `2·max(N − M, 0)` that no precoder can beat.
pub fn theorem1_floor<T: Real>(cfg: &SystemConfig<T>) -> T {
    T::from_usize_lossy(2 * cfg.n.saturating_sub(cfg.m))
}
