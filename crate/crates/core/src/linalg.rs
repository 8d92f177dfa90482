//! Dense complex linear algebra shared by the solvers.
//!
//! Matrices are `nalgebra` dense matrices stored column-major. `vec`/`mat`
//! use column stacking, which is what makes
//! `vec(A·X·B) = (Bᵀ ⊗ A)·vec(X)` hold.
//!
//! Plain SVD, Hermitian eigendecomposition, QR and Cholesky come from
//! `nalgebra`. The GSVD is assembled here from a QR factorization of the
//! stacked pair followed by a CS decomposition of the orthonormal factor.

use nalgebra::{Cholesky, Complex, DMatrix, DVector, SymmetricEigen, SVD};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Real, Result};

/// Dense complex matrix; entries are stored column-major.
pub type ComplexMatrix<T> = DMatrix<Complex<T>>;

pub(crate) fn cx<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

/// Builds a matrix from row-major complex data, rejecting empty shapes and
/// non-finite entries.
pub fn from_row_slice<T: Real>(
    rows: usize,
    cols: usize,
    data: &[Complex<T>],
) -> Result<ComplexMatrix<T>> {
    if rows == 0 || cols == 0 {
        return Err(Error::Dimension(format!(
            "matrix must be at least 1x1, got {rows}x{cols}"
        )));
    }
    if data.len() != rows * cols {
        return Err(Error::Dimension(format!(
            "{} entries supplied for a {rows}x{cols} matrix",
            data.len()
        )));
    }
    let m = DMatrix::from_row_slice(rows, cols, data);
    ensure_finite(&m, "matrix data")?;
    Ok(m)
}

/// Real-valued variant of [`from_row_slice`].
pub fn from_real_rows<T: Real>(rows: usize, cols: usize, data: &[T]) -> Result<ComplexMatrix<T>> {
    let data: Vec<_> = data.iter().map(|&x| cx(x)).collect();
    from_row_slice(rows, cols, &data)
}

pub fn ensure_finite<T: Real>(a: &ComplexMatrix<T>, what: &str) -> Result<()> {
    if a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

pub fn identity<T: Real>(n: usize) -> ComplexMatrix<T> {
    DMatrix::identity(n, n)
}

pub fn zeros<T: Real>(rows: usize, cols: usize) -> ComplexMatrix<T> {
    DMatrix::zeros(rows, cols)
}

/// Matrix of i.i.d. `CN(0, 1)` entries (real and imaginary parts each of
/// variance 1/2), drawn column by column.
pub fn complex_gaussian<T: Real, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix<T> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex::new(T::lit(re * s), T::lit(im * s))
    })
}

/// Real part of the trace.
pub fn trace_re<T: Real>(a: &ComplexMatrix<T>) -> T {
    a.trace().re
}

pub fn scale<T: Real>(a: &ComplexMatrix<T>, s: T) -> ComplexMatrix<T> {
    a * cx(s)
}

/// `(A + Aᴴ)/2`.
pub fn hermitian_part<T: Real>(a: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    (a + a.adjoint()) * cx(T::lit(0.5))
}

/// Full singular value decomposition `A = U·Σ·Vᴴ` with `U`, `V` square.
#[derive(Debug, Clone)]
pub struct SvdResult<T: Real> {
    /// `rows × rows` unitary.
    pub u: ComplexMatrix<T>,
    /// `min(rows, cols)` values, non-increasing.
    pub singular_values: Vec<T>,
    /// `cols × cols` unitary.
    pub v: ComplexMatrix<T>,
}

impl<T: Real> SvdResult<T> {
    /// The `rows × cols` matrix with the singular values on its diagonal.
    pub fn sigma(&self) -> ComplexMatrix<T> {
        let mut s = zeros(self.u.nrows(), self.v.nrows());
        for (k, &sv) in self.singular_values.iter().enumerate() {
            s[(k, k)] = cx(sv);
        }
        s
    }

    pub fn reconstruct(&self) -> ComplexMatrix<T> {
        &self.u * self.sigma() * self.v.adjoint()
    }
}

/// Full SVD with singular values sorted in non-increasing order.
pub fn svd<T: Real>(a: &ComplexMatrix<T>) -> Result<SvdResult<T>> {
    ensure_finite(a, "svd input")?;
    let (rows, cols) = a.shape();
    let max_iter = 1000 * (rows + cols);
    let dec = SVD::try_new(a.clone(), true, true, T::eps(), max_iter)
        .ok_or_else(|| Error::Decomposition(format!("svd of {rows}x{cols} matrix")))?;
    let u_thin = dec.u.expect("u requested");
    let v_thin = dec.v_t.expect("v requested").adjoint();

    let mut order: Vec<usize> = (0..dec.singular_values.len()).collect();
    order.sort_by(|&i, &j| {
        dec.singular_values[j]
            .partial_cmp(&dec.singular_values[i])
            .expect("finite singular values")
    });
    let singular_values = order.iter().map(|&i| dec.singular_values[i]).collect();
    let u_cols: Vec<_> = order.iter().map(|&i| u_thin.column(i).into_owned()).collect();
    let v_cols: Vec<_> = order.iter().map(|&i| v_thin.column(i).into_owned()).collect();

    Ok(SvdResult {
        u: complete_unitary(&u_cols, rows),
        singular_values,
        v: complete_unitary(&v_cols, cols),
    })
}

/// Extends orthonormal columns to a `dim × dim` unitary matrix.
fn complete_unitary<T: Real>(cols: &[DVector<Complex<T>>], dim: usize) -> ComplexMatrix<T> {
    let mut basis: Vec<DVector<Complex<T>>> = cols.to_vec();
    while basis.len() < dim {
        let mut best: Option<(T, DVector<Complex<T>>)> = None;
        for j in 0..dim {
            let mut r = DVector::<Complex<T>>::zeros(dim);
            r[j] = Complex::new(T::one(), T::zero());
            // two passes of classical Gram-Schmidt
            for _ in 0..2 {
                for q in &basis {
                    let proj = q.dotc(&r);
                    r -= q * proj;
                }
            }
            let norm = r.norm();
            if best.as_ref().is_none_or(|(b, _)| norm > *b) {
                best = Some((norm, r));
            }
        }
        let (norm, r) = best.expect("dim > 0");
        basis.push(r * cx(T::one() / norm));
    }
    DMatrix::from_columns(&basis)
}

/// Generalized SVD of an `M × N` pair in the orientation
/// `H1 = V·Σ1·U1ᴴ`, `H2 = V·Σ2·U2ᴴ`.
///
/// `V` is `M × M` non-singular, `U1`, `U2` are `N × N` unitary and
/// `Σ1 = [0; Λ1]`, `Σ2 = [Λ2; 0]` are `M × N`, the zero blocks having
/// `M − N` rows. The cores satisfy `Σ1·Σ1ᵀ + Σ2·Σ2ᵀ = I_M`; for `M = N`
/// this is `Λ1² + Λ2² = I_N`.
#[derive(Debug, Clone)]
pub struct GsvdResult<T: Real> {
    pub v: ComplexMatrix<T>,
    pub u1: ComplexMatrix<T>,
    pub u2: ComplexMatrix<T>,
    pub sigma1: ComplexMatrix<T>,
    pub sigma2: ComplexMatrix<T>,
    /// Diagonal of `Λ1`, non-decreasing.
    pub lambda1: Vec<T>,
    /// Diagonal of `Λ2`, non-increasing.
    pub lambda2: Vec<T>,
}

impl<T: Real> GsvdResult<T> {
    pub fn reconstruct(&self) -> (ComplexMatrix<T>, ComplexMatrix<T>) {
        (
            &self.v * &self.sigma1 * self.u1.adjoint(),
            &self.v * &self.sigma2 * self.u2.adjoint(),
        )
    }

    /// `‖Σ1·Σ1ᵀ + Σ2·Σ2ᵀ − I_M‖_F`.
    pub fn normalization_residual(&self) -> T {
        let m = self.v.nrows();
        let gram = &self.sigma1 * self.sigma1.transpose() + &self.sigma2 * self.sigma2.transpose();
        (gram - identity::<T>(m)).norm()
    }
}

fn rank_tolerance<T: Real>() -> T {
    T::eps() * T::lit(1e4)
}

/// GSVD of the pair `(a, b)`, both `M × N` with `N ≤ M ≤ 2N`.
///
/// Bookkeeping: the CS-based construction works on the conjugate
/// transposes `Aᴴ, Bᴴ` (`N × M`, "short and wide"). We QR-factor the
/// stacked `[Aᴴ; Bᴴ] = Q·R`, take the CS decomposition
/// `Q1 = U1·C·Wᴴ`, `Q2 = U2·S·Wᴴ` of the two `N × M` blocks of `Q`, and
/// transpose back, which gives `V = Rᴴ·W`, `Σ1 = Cᵀ`, `Σ2 = Sᵀ`.
pub fn gsvd<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> Result<GsvdResult<T>> {
    ensure_finite(a, "gsvd first matrix")?;
    ensure_finite(b, "gsvd second matrix")?;
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!(
            "gsvd pair shapes differ: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let (m, n) = a.shape();
    if n > m || m > 2 * n {
        return Err(Error::Dimension(format!(
            "gsvd requires N <= M <= 2N, got M={m}, N={n}"
        )));
    }

    let sa = svd(a)?.singular_values;
    let sb = svd(b)?.singular_values;
    let scale = sa[0].max(sb[0]);
    let tol = rank_tolerance::<T>();
    if scale <= T::zero() || sa[n - 1] <= tol * scale || sb[n - 1] <= tol * scale {
        return Err(Error::IllConditioned(
            "gsvd pair members must both have full column rank".into(),
        ));
    }

    let mut stacked = zeros::<T>(2 * n, m);
    stacked.rows_mut(0, n).copy_from(&a.adjoint());
    stacked.rows_mut(n, n).copy_from(&b.adjoint());
    let sz = svd(&stacked)?.singular_values;
    if sz[m - 1] <= tol * sz[0] {
        return Err(Error::IllConditioned(format!(
            "stacked pair has rank below {m}"
        )));
    }

    let qr = stacked.qr();
    let q = qr.q();
    let r = qr.r();
    let q1 = q.rows(0, n).into_owned();
    let q2 = q.rows(n, n).into_owned();

    // CS decomposition. SVD of Q1 fixes W and U1; the null space of Q1
    // goes first so that C = [0, Λ1] with Λ1 ascending.
    let cs = svd(&q1)?;
    let mut w_cols = Vec::with_capacity(m);
    for j in n..m {
        w_cols.push(cs.v.column(j).into_owned());
    }
    for j in (0..n).rev() {
        w_cols.push(cs.v.column(j).into_owned());
    }
    let w = DMatrix::from_columns(&w_cols);
    let u1_cols: Vec<_> = (0..n).rev().map(|j| cs.u.column(j).into_owned()).collect();
    let u1 = DMatrix::from_columns(&u1_cols);
    let lambda1: Vec<T> = cs.singular_values.iter().rev().copied().collect();

    // Q2·W has mutually orthogonal columns, the trailing M − N of which
    // vanish. A QR of the leading block yields a unitary U2 and, on the
    // diagonal of R, the entries of Λ2.
    let q2w = &q2 * w.columns(0, n);
    let qr2 = q2w.qr();
    let mut u2 = qr2.q();
    let t = qr2.r();
    let mut lambda2 = Vec::with_capacity(n);
    for j in 0..n {
        let d = t[(j, j)];
        let mag = (d.re * d.re + d.im * d.im).sqrt();
        if mag > T::zero() {
            let phase = d * cx(T::one() / mag);
            let col = u2.column(j) * phase;
            u2.set_column(j, &col);
        }
        lambda2.push(mag);
    }

    let v = r.adjoint() * &w;
    let mut sigma1 = zeros::<T>(m, n);
    let mut sigma2 = zeros::<T>(m, n);
    for k in 0..n {
        sigma1[(m - n + k, k)] = cx(lambda1[k]);
        sigma2[(k, k)] = cx(lambda2[k]);
    }

    Ok(GsvdResult {
        v,
        u1,
        u2,
        sigma1,
        sigma2,
        lambda1,
        lambda2,
    })
}

/// Kronecker product `A ⊗ B`.
pub fn kron<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    a.kronecker(b)
}

/// Column-stacking vectorization, returned as a column matrix.
pub fn vec<T: Real>(a: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    DMatrix::from_column_slice(a.len(), 1, a.as_slice())
}

/// Inverse of [`vec`].
pub fn mat<T: Real>(v: &ComplexMatrix<T>, rows: usize, cols: usize) -> Result<ComplexMatrix<T>> {
    if v.len() != rows * cols {
        return Err(Error::Dimension(format!(
            "cannot reshape {} entries into {rows}x{cols}",
            v.len()
        )));
    }
    Ok(DMatrix::from_column_slice(rows, cols, v.as_slice()))
}

fn require_square<T: Real>(a: &ComplexMatrix<T>, what: &str) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!(
            "{what} must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(a.nrows())
}

/// Cholesky factor of a Hermitian positive definite matrix.
pub fn cholesky<T: Real>(a: &ComplexMatrix<T>) -> Result<Cholesky<Complex<T>, nalgebra::Dyn>> {
    require_square(a, "Hermitian matrix")?;
    ensure_finite(a, "Hermitian matrix")?;
    let norm = a.norm();
    let skew = (a - a.adjoint()).norm();
    if skew > T::eps().sqrt() * norm {
        return Err(Error::NotPositiveDefinite(format!(
            "matrix is not Hermitian (skew part {:.3e})",
            skew.as_f64()
        )));
    }
    let chol = Cholesky::new(hermitian_part(a))
        .ok_or_else(|| Error::NotPositiveDefinite("Cholesky factorization failed".into()))?;
    // complex square roots never fail, so an indefinite input shows up as
    // a non-real pivot instead
    let l = chol.l_dirty();
    for j in 0..l.nrows() {
        let d = l[(j, j)];
        if !(d.re > T::zero() && d.im.abs() <= d.re * T::eps().sqrt()) {
            return Err(Error::NotPositiveDefinite(format!("pivot {j} is not positive")));
        }
    }
    Ok(chol)
}

/// Solves `A·X = B` for Hermitian positive definite `A`.
pub fn solve_hermitian_psd<T: Real>(
    a: &ComplexMatrix<T>,
    b: &ComplexMatrix<T>,
) -> Result<ComplexMatrix<T>> {
    if a.nrows() != b.nrows() {
        return Err(Error::Dimension(format!(
            "right-hand side has {} rows, system has {}",
            b.nrows(),
            a.nrows()
        )));
    }
    Ok(cholesky(a)?.solve(b))
}

/// Inverse of a Hermitian positive definite matrix.
pub fn inverse_hermitian_psd<T: Real>(a: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    Ok(cholesky(a)?.inverse())
}

/// Eigenvalues of the Hermitian part of `a`, ascending.
pub fn hermitian_eigenvalues<T: Real>(a: &ComplexMatrix<T>) -> Result<Vec<T>> {
    let n = require_square(a, "eigenvalue input")?;
    ensure_finite(a, "eigenvalue input")?;
    let eig = SymmetricEigen::try_new(hermitian_part(a), T::eps(), 1000 * n)
        .ok_or_else(|| Error::Decomposition("Hermitian eigendecomposition".into()))?;
    let mut vals: Vec<T> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    Ok(vals)
}

/// `true` iff the smallest eigenvalue of (the Hermitian part of) `a` is at
/// least `-tol`.
pub fn is_psd<T: Real>(a: &ComplexMatrix<T>, tol: T) -> Result<bool> {
    let vals = hermitian_eigenvalues(a)?;
    Ok(vals.first().is_none_or(|&v| v >= -tol))
}

/// Ratio of extreme singular values; infinite for rank-deficient input.
pub fn condition_number<T: Real>(a: &ComplexMatrix<T>) -> Result<T> {
    let s = svd(a)?.singular_values;
    let smin = *s.last().expect("non-empty");
    if smin <= T::zero() {
        return Ok(T::max_value().unwrap_or(T::one() / T::eps()));
    }
    Ok(s[0] / smin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| {
            Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    fn unitary_error(u: &ComplexMatrix<f64>) -> f64 {
        (u.adjoint() * u - identity::<f64>(u.ncols())).norm()
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert!(matches!(
            from_real_rows::<f64>(0, 2, &[]),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            from_real_rows::<f64>(1, 2, &[1.0]),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            from_real_rows::<f64>(1, 2, &[1.0, f64::NAN]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn svd_identity_and_diagonal() {
        let i2 = identity::<f64>(2);
        let s = svd(&i2).unwrap();
        assert_eq!(s.singular_values, vec![1.0, 1.0]);
        assert!((s.reconstruct() - &i2).norm() < 1e-14);

        let d = from_real_rows::<f64>(2, 2, &[3.0, 0.0, 0.0, 0.0]).unwrap();
        let s = svd(&d).unwrap();
        assert!((s.singular_values[0] - 3.0).abs() < 1e-14);
        assert!(s.singular_values[1].abs() < 1e-14);
    }

    #[test]
    fn svd_rectangular_is_full_and_sorted() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (r, c) in [(4, 2), (2, 4), (3, 3), (5, 1)] {
            let a = random(r, c, &mut rng);
            let s = svd(&a).unwrap();
            assert_eq!(s.u.shape(), (r, r));
            assert_eq!(s.v.shape(), (c, c));
            assert!((s.reconstruct() - &a).norm() < 1e-10 * a.norm());
            assert!(unitary_error(&s.u) < 1e-10);
            assert!(unitary_error(&s.v) < 1e-10);
            assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn gsvd_identity_pair() {
        let i2 = identity::<f64>(2);
        let g = gsvd(&i2, &i2).unwrap();
        let (r1, r2) = g.reconstruct();
        assert!((r1 - &i2).norm() < 1e-9);
        assert!((r2 - &i2).norm() < 1e-9);
        assert!(g.normalization_residual() < 1e-9);
        for (l1, l2) in g.lambda1.iter().zip(&g.lambda2) {
            assert!((l1 - 0.5f64.sqrt()).abs() < 1e-9);
            assert!((l2 - 0.5f64.sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn gsvd_rejects_degenerate_pairs() {
        let i2 = identity::<f64>(2);
        let z = zeros::<f64>(2, 2);
        assert!(matches!(gsvd(&i2, &z), Err(Error::IllConditioned(_))));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random(5, 2, &mut rng);
        let b = random(5, 2, &mut rng);
        assert!(matches!(gsvd(&a, &b), Err(Error::Dimension(_))));
        let a = random(2, 3, &mut rng);
        let b = random(2, 3, &mut rng);
        assert!(matches!(gsvd(&a, &b), Err(Error::Dimension(_))));
    }

    #[test]
    fn gsvd_tall_pairs_keep_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (m, n) in [(3, 2), (4, 2), (5, 3)] {
            let a = random(m, n, &mut rng);
            let b = random(m, n, &mut rng);
            let g = gsvd(&a, &b).unwrap();
            let (ra, rb) = g.reconstruct();
            assert!((ra - &a).norm() < 1e-9 * a.norm());
            assert!((rb - &b).norm() < 1e-9 * b.norm());
            assert!(unitary_error(&g.u1) < 1e-10);
            assert!(unitary_error(&g.u2) < 1e-10);
            assert!(g.normalization_residual() < 1e-9);
            // leading rows of Σ1 and trailing rows of Σ2 are zero
            assert!(g.sigma1.rows(0, m - n).norm() == 0.0);
            assert!(g.sigma2.rows(n, m - n).norm() == 0.0);
        }
    }

    #[test]
    fn kron_hand_expansion() {
        let a = from_real_rows::<f64>(2, 2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = from_real_rows::<f64>(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let k = kron(&a, &b);
        assert_eq!(k.shape(), (4, 4));
        // block (1,2) is 2·B
        let block = k.view((0, 2), (2, 2)).into_owned();
        let expected = from_real_rows::<f64>(2, 2, &[0.0, 2.0, 2.0, 0.0]).unwrap();
        assert_eq!(block, expected);
        assert_eq!(kron(&identity::<f64>(2), &identity::<f64>(2)), identity::<f64>(4));
    }

    #[test]
    fn vec_is_column_stacking() {
        let a = from_real_rows::<f64>(2, 2, &[1.0, 3.0, 2.0, 4.0]).unwrap();
        let v = vec(&a);
        let re: Vec<f64> = v.iter().map(|z| z.re).collect();
        assert_eq!(re, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(mat(&v, 2, 2).unwrap(), a);
        assert!(matches!(mat(&v, 3, 2), Err(Error::Dimension(_))));
    }

    #[test]
    fn hermitian_solves() {
        let a = from_real_rows::<f64>(2, 2, &[2.0, 0.0, 0.0, 4.0]).unwrap();
        let b = from_real_rows::<f64>(2, 1, &[2.0, 4.0]).unwrap();
        let x = solve_hermitian_psd(&a, &b).unwrap();
        assert!((x[0].re - 1.0).abs() < 1e-15 && (x[1].re - 1.0).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let b = random(3, 2, &mut rng);
        let x = solve_hermitian_psd(&identity::<f64>(3), &b).unwrap();
        assert!((x - &b).norm() < 1e-15);

        let indefinite = from_real_rows::<f64>(2, 2, &[1.0, 0.0, 0.0, -1.0]).unwrap();
        assert!(matches!(
            solve_hermitian_psd(&indefinite, &identity::<f64>(2)),
            Err(Error::NotPositiveDefinite(_))
        ));
    }

    #[test]
    fn psd_checks() {
        assert!(is_psd(&identity::<f64>(3), 1e-12).unwrap());
        let d = from_real_rows::<f64>(2, 2, &[1.0, 0.0, 0.0, -1.0]).unwrap();
        assert!(!is_psd(&d, 1e-12).unwrap());
        assert!(matches!(
            is_psd(&zeros::<f64>(2, 3), 1e-12),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn single_precision_gsvd() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a64 = random(2, 2, &mut rng);
        let b64 = random(2, 2, &mut rng);
        let a: ComplexMatrix<f32> = a64.map(|z| Complex::new(z.re as f32, z.im as f32));
        let b: ComplexMatrix<f32> = b64.map(|z| Complex::new(z.re as f32, z.im as f32));
        let g = gsvd(&a, &b).unwrap();
        let (ra, rb) = g.reconstruct();
        assert!((ra - &a).norm() < 1e-4 * a.norm());
        assert!((rb - &b).norm() < 1e-4 * b.norm());
        assert!(g.normalization_residual() < 1e-4);
    }
}
