//! Convex QCQP for the source-precoder step.
//!
//! Problems have the form
//!
//! ```text
//! minimize    xᵀ·P·x + bᵀ·x + c
//! subject to  xᵀ·Q_k·x ≤ r_k
//! ```
//!
//! with `P`, `Q_k` symmetric PSD and `r_k > 0`, so `x = 0` is strictly
//! feasible. [`solve_qcqp`] is a log-barrier method with damped Newton
//! centering steps.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::linalg::{cx, trace_re, ComplexMatrix};
use crate::model::{ChannelSet, SystemConfig};
use crate::{Error, Real, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QuadConstraint<T: Real> {
    pub q: DMatrix<T>,
    pub r: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealQcqp<T: Real> {
    pub p: DMatrix<T>,
    pub b: DVector<T>,
    pub c: T,
    pub constraints: Vec<QuadConstraint<T>>,
}

fn quad<T: Real>(m: &DMatrix<T>, x: &DVector<T>) -> T {
    x.dot(&(m * x))
}

fn min_eigenvalue<T: Real>(m: &DMatrix<T>) -> Result<T> {
    let n = m.nrows();
    let sym = (m + m.transpose()) * T::lit(0.5);
    let eig = SymmetricEigen::try_new(sym, T::eps(), 1000 * n.max(1))
        .ok_or_else(|| Error::Decomposition("symmetric eigendecomposition".into()))?;
    Ok(eig.eigenvalues.iter().copied().fold(T::max_value().unwrap_or(T::one()), |a, b| a.min(b)))
}

impl<T: Real> RealQcqp<T> {
    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn objective(&self, x: &DVector<T>) -> T {
        quad(&self.p, x) + self.b.dot(x) + self.c
    }

    /// `r_k − xᵀ·Q_k·x` for every constraint.
    pub fn slacks(&self, x: &DVector<T>) -> Vec<T> {
        self.constraints.iter().map(|k| k.r - quad(&k.q, x)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        let square = |m: &DMatrix<T>| m.nrows() == n && m.ncols() == n;
        if !square(&self.p) || self.constraints.iter().any(|k| !square(&k.q)) {
            return Err(Error::Dimension(format!(
                "QCQP matrices must all be {n}x{n}"
            )));
        }
        let tol = T::lit(1e-9);
        for (name, m) in std::iter::once(("P", &self.p))
            .chain(self.constraints.iter().map(|k| ("Q", &k.q)))
        {
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("QCQP matrix {name}")));
            }
            let scale = m.amax().max(T::one());
            if (m - m.transpose()).amax() > tol * scale {
                return Err(Error::Solver(format!("QCQP matrix {name} is not symmetric")));
            }
            if n > 0 && min_eigenvalue(m)? < -tol * scale {
                return Err(Error::Solver(format!("QCQP matrix {name} is not PSD")));
            }
        }
        for (k, c) in self.constraints.iter().enumerate() {
            if !(c.r > T::zero()) {
                return Err(Error::InfeasibleBudget(format!(
                    "constraint {} has non-positive bound {:.6e}",
                    k + 1,
                    c.r.as_f64()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct QcqpSolution<T: Real> {
    pub x: DVector<T>,
    pub objective: T,
    /// Multipliers `λ_k` estimated from the barrier as `1/(t·s_k)`.
    pub multipliers: Vec<T>,
    /// Stationarity norm plus complementary slackness `Σ λ_k·s_k`.
    pub kkt_residual: T,
    /// Objective after each centering step.
    pub outer_objectives: Vec<T>,
}

#[derive(Debug, Clone, Copy)]
pub struct QcqpOptions {
    pub tol: f64,
    pub max_outer: usize,
    pub max_newton: usize,
}

impl Default for QcqpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_outer: 60,
            max_newton: 200,
        }
    }
}

/// Solves with default iteration limits and the given tolerance.
pub fn solve_qcqp<T: Real>(q: &RealQcqp<T>, tol: T) -> Result<QcqpSolution<T>> {
    solve_qcqp_with(
        q,
        &QcqpOptions {
            tol: tol.as_f64(),
            ..QcqpOptions::default()
        },
    )
}

pub fn solve_qcqp_with<T: Real>(q: &RealQcqp<T>, opts: &QcqpOptions) -> Result<QcqpSolution<T>> {
    q.validate()?;
    if !(opts.tol > 0.0) {
        return Err(Error::Config("QCQP tolerance must be positive".into()));
    }
    let n = q.dim();
    let tol = T::lit(opts.tol);
    let m = T::from_usize_lossy(q.constraints.len());
    let half = T::lit(0.5);
    let two = T::lit(2.0);

    let mut x = DVector::<T>::zeros(n);
    let mut t = T::one();
    let mut outer_objectives = Vec::new();

    let stationarity = |x: &DVector<T>, t: T| -> (T, Vec<T>) {
        let s = q.slacks(x);
        let mut g = (&q.p * x) * two + &q.b;
        let lambdas: Vec<T> = s.iter().map(|&sk| T::one() / (t * sk)).collect();
        for (k, c) in q.constraints.iter().enumerate() {
            g += (&c.q * x) * (two * lambdas[k]);
        }
        (g.norm(), lambdas)
    };

    for _outer in 0..opts.max_outer {
        center(q, &mut x, t, opts.max_newton, tol)?;
        outer_objectives.push(q.objective(&x));
        let gap = m / t;
        if gap <= tol * half {
            let (stat, lambdas) = stationarity(&x, t);
            let barrier = Candidate {
                x: x.clone(),
                multipliers: lambdas,
                residual: stat + gap,
            };
            let best = match polish(q, &barrier) {
                Some(p) if p.residual < barrier.residual => p,
                _ => barrier,
            };
            if !stat.is_finite() {
                break;
            }
            if best.residual <= tol {
                let objective = q.objective(&best.x);
                return Ok(QcqpSolution {
                    x: best.x,
                    objective,
                    multipliers: best.multipliers,
                    kkt_residual: best.residual,
                    outer_objectives,
                });
            }
        }
        t *= T::lit(10.0);
    }
    let (stat, _) = stationarity(&x, t);
    Err(Error::Solver(format!(
        "barrier method did not converge: stationarity {:.3e}, gap {:.3e}",
        stat.as_f64(),
        (m / t).as_f64()
    )))
}

struct Candidate<T: Real> {
    x: DVector<T>,
    multipliers: Vec<T>,
    residual: T,
}

/// KKT residual: stationarity norm plus `Σ λ_k·|s_k|`.
fn kkt_residual<T: Real>(q: &RealQcqp<T>, x: &DVector<T>, lambdas: &[T]) -> T {
    let two = T::lit(2.0);
    let mut g = (&q.p * x) * two + &q.b;
    let mut comp = T::zero();
    for ((c, &l), s) in q.constraints.iter().zip(lambdas).zip(q.slacks(x)) {
        g += (&c.q * x) * (two * l);
        comp += l * s.abs();
    }
    g.norm() + comp
}

/// Newton iteration on the KKT equations, holding each subset of the
/// constraints at equality in turn; keeps the valid point with the
/// smallest residual.
///
/// Near the boundary the barrier multipliers `1/(t·s_k)` inherit the
/// rounding error of the slacks, which caps the attainable stationarity.
/// Solving the equality-constrained system directly removes that floor.
fn polish<T: Real>(q: &RealQcqp<T>, start: &Candidate<T>) -> Option<Candidate<T>> {
    let k = q.constraints.len();
    let mut best: Option<Candidate<T>> = None;
    for mask in 0u32..(1 << k) {
        let active: Vec<usize> = (0..k).filter(|&i| mask & (1 << i) != 0).collect();
        if let Some(c) = polish_active(q, start, &active) {
            if best.as_ref().is_none_or(|b| c.residual < b.residual) {
                best = Some(c);
            }
        }
    }
    best
}

fn polish_active<T: Real>(q: &RealQcqp<T>, start: &Candidate<T>, active: &[usize]) -> Option<Candidate<T>> {
    let n = q.dim();
    let two = T::lit(2.0);
    let na = active.len();
    let mut x = start.x.clone();
    let mut lam: Vec<T> = active.iter().map(|&k| start.multipliers[k]).collect();
    for _ in 0..30 {
        let mut f = DVector::<T>::zeros(n + na);
        let mut jac = DMatrix::<T>::zeros(n + na, n + na);
        let grad = (&q.p * &x) * two + &q.b;
        f.rows_mut(0, n).copy_from(&grad);
        jac.view_mut((0, 0), (n, n)).copy_from(&(&q.p * two));
        for (a, &k) in active.iter().enumerate() {
            let c = &q.constraints[k];
            let qx = &c.q * &x;
            let mut top = f.rows_mut(0, n);
            top += &qx * (two * lam[a]);
            let mut blk = jac.view_mut((0, 0), (n, n));
            blk += &c.q * (two * lam[a]);
            jac.view_mut((0, n + a), (n, 1)).copy_from(&(&qx * two));
            jac.view_mut((n + a, 0), (1, n)).copy_from(&(qx.transpose() * -two));
            f[n + a] = c.r - x.dot(&qx);
        }
        if f.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let step = jac.lu().solve(&-&f)?;
        x += step.rows(0, n);
        for a in 0..na {
            lam[a] += step[n + a];
        }
        if step.norm() <= T::eps() * T::lit(10.0) * (T::one() + x.norm()) {
            break;
        }
    }
    if lam.iter().any(|&l| l < T::zero()) {
        return None;
    }
    let slacks = q.slacks(&x);
    for (k, c) in q.constraints.iter().enumerate() {
        if slacks[k] < -T::lit(1e-12) * c.r {
            return None;
        }
    }
    let mut multipliers = vec![T::zero(); q.constraints.len()];
    for (a, &k) in active.iter().enumerate() {
        multipliers[k] = lam[a];
    }
    let residual = kkt_residual(q, &x, &multipliers);
    residual.is_finite().then_some(Candidate {
        x,
        multipliers,
        residual,
    })
}

/// Damped Newton minimization of `t·f(x) − Σ ln s_k(x)` from a strictly
/// feasible `x`.
fn center<T: Real>(q: &RealQcqp<T>, x: &mut DVector<T>, t: T, max_iter: usize, tol: T) -> Result<()> {
    let n = x.len();
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    for _ in 0..max_iter {
        let s = q.slacks(x);
        let fgrad = (&q.p * &*x) * two + &q.b;
        let mut grad = &fgrad * t;
        let mut hess = &q.p * (two * t);
        let qx: Vec<DVector<T>> = q.constraints.iter().map(|c| &c.q * &*x).collect();
        for (k, c) in q.constraints.iter().enumerate() {
            grad += &qx[k] * (two / s[k]);
            hess += &c.q * (two / s[k]);
            hess += (&qx[k] * qx[k].transpose()) * (four / (s[k] * s[k]));
        }
        if grad.norm() <= tol * t * T::lit(0.1) {
            return Ok(());
        }
        let scale = hess.amax().max(T::one());
        let mut chol = None;
        let mut reg = T::lit(1e-12);
        while chol.is_none() && reg <= T::lit(1e-4) {
            let mut h = hess.clone();
            for i in 0..n {
                h[(i, i)] += reg * scale;
            }
            chol = h.cholesky();
            reg *= T::lit(100.0);
        }
        // the barrier Hessian is positive definite in exact arithmetic, so
        // a failure here means the step is below working precision
        let Some(chol) = chol else {
            return Ok(());
        };
        let dx = -chol.solve(&grad);
        let decrement = -grad.dot(&dx);
        if decrement <= T::zero() {
            return Ok(());
        }

        // Changes are evaluated in closed form so that tiny improvements
        // are not lost to cancellation between large objective values.
        let dpd = quad(&q.p, &dx);
        let gdx = fgrad.dot(&dx);
        let qd: Vec<(T, T)> = q
            .constraints
            .iter()
            .enumerate()
            .map(|(k, c)| (qx[k].dot(&dx), quad(&c.q, &dx)))
            .collect();
        let mut alpha = T::one();
        let mut accepted = false;
        for _ in 0..60 {
            let mut change = t * (alpha * gdx + alpha * alpha * dpd);
            let mut feasible = true;
            for (k, &(xqd, dqd)) in qd.iter().enumerate() {
                let ds = -(two * alpha * xqd + alpha * alpha * dqd);
                let ratio = ds / s[k];
                if !(ratio > -T::one()) {
                    feasible = false;
                    break;
                }
                change -= ratio.ln_1p();
            }
            if feasible && change <= -T::lit(0.25) * alpha * decrement {
                accepted = true;
                break;
            }
            alpha *= half();
        }
        if !accepted {
            // no further progress is representable
            return Ok(());
        }
        *x += &dx * alpha;
        if decrement * half() <= T::eps() * T::lit(10.0) {
            return Ok(());
        }
    }
    Ok(())
}

fn half<T: Real>() -> T {
    T::lit(0.5)
}

/// Real embedding of the Hermitian form `vec(A)ᴴ·(I_d ⊗ K)·vec(A)` over
/// `[Re vec(A); Im vec(A)]`.
fn embed_hermitian<T: Real>(k: &ComplexMatrix<T>, d: usize) -> DMatrix<T> {
    let n = k.nrows();
    let dim = n * d;
    let mut out = DMatrix::<T>::zeros(2 * dim, 2 * dim);
    for blk in 0..d {
        let o = blk * n;
        for i in 0..n {
            for j in 0..n {
                // Hermitian part so the embedding is exactly symmetric
                let z = (k[(i, j)] + k[(j, i)].conj()) * cx(T::lit(0.5));
                out[(o + i, o + j)] = z.re;
                out[(dim + o + i, dim + o + j)] = z.re;
                out[(o + i, dim + o + j)] = -z.im;
                out[(dim + o + i, o + j)] = z.im;
            }
        }
    }
    out
}

/// `[Re vec(A1); Im vec(A1); Re vec(A2); Im vec(A2)]`.
pub fn pack_sources<T: Real>(a1: &ComplexMatrix<T>, a2: &ComplexMatrix<T>) -> DVector<T> {
    let mut v = Vec::with_capacity(2 * (a1.len() + a2.len()));
    for a in [a1, a2] {
        v.extend(a.iter().map(|z| z.re));
        v.extend(a.iter().map(|z| z.im));
    }
    DVector::from_vec(v)
}

/// Inverse of [`pack_sources`] for `N × d1` and `N × d2` precoders.
pub fn unpack_sources<T: Real>(
    x: &DVector<T>,
    n: usize,
    d1: usize,
    d2: usize,
) -> Result<(ComplexMatrix<T>, ComplexMatrix<T>)> {
    let (l1, l2) = (n * d1, n * d2);
    if x.len() != 2 * (l1 + l2) {
        return Err(Error::Dimension(format!(
            "vector of length {} does not hold two {n}x{d1}/{n}x{d2} precoders",
            x.len()
        )));
    }
    let build = |off: usize, len: usize, d: usize| {
        ComplexMatrix::from_fn(n, d, |i, j| {
            let idx = j * n + i;
            nalgebra::Complex::new(x[off + idx], x[off + len + idx])
        })
    };
    Ok((build(0, l1, d1), build(2 * l1, l2, d2)))
}

/// Source-precoder problem with `Ar`, `W1`, `W2` fixed, in real form.
///
/// The objective equals `J_s1 + J_s2` exactly (the constant term
/// `Tr{R_s13 + R_s23}` is included in `c`). Constraints are the two source
/// budgets and the relay budget net of amplified relay noise.
pub fn embed_source_problem<T: Real>(
    cfg: &SystemConfig<T>,
    ch: &ChannelSet<T>,
    ar: &ComplexMatrix<T>,
    w1: &ComplexMatrix<T>,
    w2: &ComplexMatrix<T>,
) -> Result<RealQcqp<T>> {
    ch.check(cfg)?;
    let (n, m) = (cfg.n, cfg.m);
    if ar.shape() != (m, m) || w1.ncols() != n || w2.ncols() != n {
        return Err(Error::Dimension(format!(
            "Ar {:?}, W1 {:?}, W2 {:?} do not fit N={n}, M={m}",
            ar.shape(),
            w1.shape(),
            w2.shape()
        )));
    }
    let taur_net = cfg.taur - cfg.sigmar_sq * ar.norm_squared();
    if !(taur_net > T::zero()) {
        return Err(Error::InfeasibleBudget(format!(
            "relay noise alone uses {:.6e} of the {:.6e} relay budget",
            (cfg.sigmar_sq * ar.norm_squared()).as_f64(),
            cfg.taur.as_f64()
        )));
    }
    // W1 decodes s2 and W2 decodes s1
    let d1 = w2.nrows();
    let d2 = w1.nrows();

    // J_s1 depends on A2 through R_s11, R_s12; J_s2 on A1 likewise
    let r_s12 = w1 * &ch.g1 * ar * &ch.h2;
    let r_s22 = w2 * &ch.g2 * ar * &ch.h1;
    let r_s11 = r_s12.adjoint() * &r_s12;
    let r_s21 = r_s22.adjoint() * &r_s22;
    let r_s3 = |w: &ComplexMatrix<T>, g: &ComplexMatrix<T>, sigma_sq: T| {
        let wga = w * g * ar;
        trace_re(&(&wga * wga.adjoint())) * cfg.sigmar_sq
            + w.norm_squared() * sigma_sq
            + T::from_usize_lossy(w.nrows())
    };
    let c = r_s3(w1, &ch.g1, cfg.sigma1_sq) + r_s3(w2, &ch.g2, cfg.sigma2_sq);

    let arh1 = ar * &ch.h1;
    let arh2 = ar * &ch.h2;
    let r_p1 = arh1.adjoint() * &arh1;
    let r_p2 = arh2.adjoint() * &arh2;

    let l1 = 2 * n * d1;
    let l2 = 2 * n * d2;
    let dim = l1 + l2;
    let mut p = DMatrix::<T>::zeros(dim, dim);
    p.view_mut((0, 0), (l1, l1)).copy_from(&embed_hermitian(&r_s21, d1));
    p.view_mut((l1, l1), (l2, l2)).copy_from(&embed_hermitian(&r_s11, d2));

    // −2·Re Tr{R·A} = −2·(Re b̂ᵀ·Re â − Im b̂ᵀ·Im â), b̂ = vec(Rᵀ)
    let mut b = DVector::<T>::zeros(dim);
    for (off, r, d) in [(0, &r_s22, d1), (l1, &r_s12, d2)] {
        let len = n * d;
        let rt = r.transpose();
        for (idx, z) in rt.iter().enumerate() {
            b[off + idx] = -T::lit(2.0) * z.re;
            b[off + len + idx] = T::lit(2.0) * z.im;
        }
    }

    let mut q1 = DMatrix::<T>::zeros(dim, dim);
    q1.view_mut((0, 0), (l1, l1)).fill_with_identity();
    let mut q2 = DMatrix::<T>::zeros(dim, dim);
    q2.view_mut((l1, l1), (l2, l2)).fill_with_identity();
    let mut q3 = DMatrix::<T>::zeros(dim, dim);
    q3.view_mut((0, 0), (l1, l1)).copy_from(&embed_hermitian(&r_p1, d1));
    q3.view_mut((l1, l1), (l2, l2)).copy_from(&embed_hermitian(&r_p2, d2));

    Ok(RealQcqp {
        p,
        b,
        c,
        constraints: vec![
            QuadConstraint { q: q1, r: cfg.tau1 },
            QuadConstraint { q: q2, r: cfg.tau2 },
            QuadConstraint { q: q3, r: taur_net },
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::from_real_rows;
    use crate::model::{self, PrecoderSet, Side};
    use nalgebra::Complex;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(r: usize, c: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix<f64> {
        ComplexMatrix::from_fn(r, c, |_, _| {
            Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    fn instance(n: usize, m: usize, seed: u64) -> (SystemConfig<f64>, ChannelSet<f64>, PrecoderSet<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = SystemConfig::new(n, m, 1.0, 2.0, 4.0, 0.2, 0.3, 0.1).unwrap();
        let ch = ChannelSet::new(
            &cfg,
            random(m, n, &mut rng),
            random(m, n, &mut rng),
            random(n, m, &mut rng),
            random(n, m, &mut rng),
        )
        .unwrap();
        let mut p = PrecoderSet::from_precoders(
            random(n, n, &mut rng),
            random(n, n, &mut rng),
            random(m, m, &mut rng),
        );
        p.w1 = random(n, n, &mut rng);
        p.w2 = random(n, n, &mut rng);
        (cfg, ch, p)
    }

    #[test]
    fn toy_problem() {
        // minimize a² + b² − 2a  s.t.  a² + b² ≤ 0.25
        let q = RealQcqp::<f64> {
            p: DMatrix::identity(2, 2),
            b: DVector::from_vec(vec![-2.0, 0.0]),
            c: 0.0,
            constraints: vec![QuadConstraint {
                q: DMatrix::identity(2, 2),
                r: 0.25,
            }],
        };
        let sol: QcqpSolution<f64> = solve_qcqp(&q, 1e-8).unwrap();
        assert!((sol.x[0] - 0.5).abs() < 1e-7 && sol.x[1].abs() < 1e-7);
        assert!(sol.kkt_residual <= 1e-8);
        assert!(sol.outer_objectives.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn interior_solution_is_stationary() {
        let p = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let b = DVector::from_vec(vec![1.0, -1.0]);
        let q = RealQcqp {
            p: p.clone(),
            b: b.clone(),
            c: 0.0,
            constraints: vec![QuadConstraint {
                q: DMatrix::identity(2, 2),
                r: 1e6,
            }],
        };
        let sol = solve_qcqp(&q, 1e-8).unwrap();
        assert!((&p * &sol.x * 2.0 + &b).norm() <= 1e-8);
    }

    #[test]
    fn embedding_reproduces_source_mse() {
        for seed in 0..10 {
            let (cfg, ch, p) = instance(2, 3, seed);
            let q = embed_source_problem(&cfg, &ch, &p.ar, &p.w1, &p.w2).unwrap();
            let x = pack_sources(&p.a1, &p.a2);
            let direct = model::total_mse(&cfg, &ch, &p).unwrap();
            assert!((q.objective(&x) - direct).abs() <= 1e-9 * direct);
            let (a1, a2) = unpack_sources(&x, 2, 2, 2).unwrap();
            assert_eq!((a1, a2), (p.a1.clone(), p.a2.clone()));

            let rx = model::relay_covariance(&cfg, &ch, &p.a1, &p.a2);
            let relay = trace_re(&(&p.ar * rx * p.ar.adjoint()));
            let s = q.slacks(&x);
            assert!((cfg.taur - s[2] - relay).abs() <= 1e-9 * relay);
            assert!((cfg.tau1 - s[0] - model::source_power(&p, Side::One)).abs() < 1e-12);
        }
    }

    #[test]
    fn scalar_embedding_structure() {
        let cfg = SystemConfig::new(1, 1, 1.0, 1.0, 10.0, 1.0, 1.0, 1.0).unwrap();
        let one = from_real_rows(1, 1, &[1.0]).unwrap();
        let ch = ChannelSet::new(&cfg, one.clone(), one.clone() * cx(2.0), one.clone(), one.clone() * cx(3.0)).unwrap();
        let ar = one.clone();
        let w1 = one.clone() * cx(0.5);
        let w2 = one.clone();
        let q = embed_source_problem(&cfg, &ch, &ar, &w1, &w2).unwrap();
        // |w2·g2·ar·h1|² = 9 on A1, |w1·g1·ar·h2|² = 1 on A2
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![9.0, 9.0, 1.0, 1.0]));
        assert!((q.p - expected).amax() < 1e-14);
    }

    #[test]
    fn zero_decoders_give_zero_solution() {
        let (cfg, ch, mut p) = instance(2, 2, 4);
        p.w1 = ComplexMatrix::zeros(2, 2);
        p.w2 = ComplexMatrix::zeros(2, 2);
        let q = embed_source_problem(&cfg, &ch, &p.ar, &p.w1, &p.w2).unwrap();
        assert!(q.b.amax() == 0.0);
        let sol = solve_qcqp(&q, 1e-8).unwrap();
        assert!(sol.x.amax() < 1e-8);
    }

    #[test]
    fn exhausted_relay_budget_is_rejected() {
        let (mut cfg, ch, p) = instance(2, 2, 5);
        cfg.taur = 1e-6;
        assert!(matches!(
            embed_source_problem(&cfg, &ch, &p.ar, &p.w1, &p.w2),
            Err(Error::InfeasibleBudget(_))
        ));
    }

    #[test]
    fn solution_beats_random_feasible_points() {
        let (cfg, ch, p) = instance(2, 2, 6);
        let q = embed_source_problem(&cfg, &ch, &p.ar, &p.w1, &p.w2).unwrap();
        let sol = solve_qcqp(&q, 1e-8).unwrap();
        for (k, s) in q.slacks(&sol.x).iter().enumerate() {
            assert!(*s >= -1e-9 * q.constraints[k].r);
        }
        assert!(sol.kkt_residual <= 1e-8);
        let mut rng = ChaCha8Rng::seed_from_u64(60);
        for _ in 0..1000 {
            let mut x = DVector::from_fn(q.dim(), |_, _| rng.random::<f64>() - 0.5);
            let worst = q
                .constraints
                .iter()
                .map(|c| (quad(&c.q, &x) / c.r).sqrt())
                .fold(0.0, f64::max);
            x *= rng.random::<f64>() / worst.max(1e-300);
            assert!(q.objective(&x) >= sol.objective - 1e-9);
        }
    }
}
