//! Dense real matrices and the small decomposition kernel the rest of the
//! crate is built on: LU inverse, scaling-and-squaring exponential, principal
//! logarithm, one-sided Jacobi SVD, rank and least squares.
//!
//! Everything here targets small matrices (group dimension at most 12, so
//! ambient operators at most 144 entries). Algorithms are chosen for
//! determinism and verifiable contracts, not asymptotics.

mod poly;

pub use poly::{characteristic_polynomial, eigenvalues, polynomial_roots, Polynomial};

use thiserror::Error;

/// Complex value used for eigenvalues and polynomial roots.
pub type ComplexScalar = num_complex::Complex64;

/// Errors from the dense kernel.
#[derive(Debug, Clone, Error)]
pub enum LinalgError {
    /// Inverse or solve hit a matrix whose determinant is below the
    /// singularity threshold; carries the offending |det|.
    #[error("matrix is numerically singular (|det| = {abs_det:.3e})")]
    Singular { abs_det: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("characteristic polynomial supports n <= {max}, got {got}")]
    UnsupportedSize { got: usize, max: usize },
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("matrix logarithm needs every eigenvalue off the closed negative real axis")]
    NoRealLogarithm,
    #[error("root residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    RootResidual { residual: f64, tol: f64 },
}

/// Dense real matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diag(entries: &[f64]) -> Self {
        let n = entries.len();
        let mut m = Matrix::zeros(n, n);
        for (i, &e) in entries.iter().enumerate() {
            m.data[i * n + i] = e;
        }
        m
    }

    /// Builds a matrix from nested rows. Panics if the rows are ragged.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix { rows: r, cols: c, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    /// Row-major flat view, the vectorization convention used throughout.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "flat data length mismatch");
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| self.data[i * self.cols..(i + 1) * self.cols].to_vec())
            .collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: f64) -> Matrix {
        let data = self.data.iter().map(|a| a * s).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "inner dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    pub fn trace(&self) -> f64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn approx_eq(&self, other: &Matrix, tol: f64) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.max_abs_diff(other) <= tol
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[f64]) {
        assert_eq!(v.len(), self.rows);
        for i in 0..self.rows {
            self.set(i, j, v[i]);
        }
    }

    pub fn determinant(&self) -> f64 {
        match self.lu() {
            Some(lu) => lu.det,
            None => 0.0,
        }
    }

    /// LU with partial pivoting. Returns None only for empty matrices.
    fn lu(&self) -> Option<Lu> {
        assert!(self.is_square(), "LU needs a square matrix");
        let n = self.rows;
        if n == 0 {
            return None;
        }
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut det = 1.0;
        for k in 0..n {
            let mut p = k;
            let mut best = a.get(k, k).abs();
            for i in k + 1..n {
                let v = a.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if p != k {
                for j in 0..n {
                    let tmp = a.get(k, j);
                    a.set(k, j, a.get(p, j));
                    a.set(p, j, tmp);
                }
                perm.swap(k, p);
                det = -det;
            }
            let pivot = a.get(k, k);
            det *= pivot;
            if pivot == 0.0 {
                continue;
            }
            for i in k + 1..n {
                let m = a.get(i, k) / pivot;
                a.set(i, k, m);
                for j in k + 1..n {
                    a.set(i, j, a.get(i, j) - m * a.get(k, j));
                }
            }
        }
        Some(Lu { lu: a, perm, det })
    }

    /// Hadamard bound, the scale against which |det| is judged singular.
    fn hadamard_bound(&self) -> f64 {
        (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| self.get(i, j).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .product()
    }

    pub fn inverse(&self) -> Result<Matrix, LinalgError> {
        matrix_inverse(self)
    }
}

struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
    det: f64,
}

impl Lu {
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.rows;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = b[self.perm[i]];
            for j in 0..i {
                s -= self.lu.get(i, j) * y[j];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..n {
                s -= self.lu.get(i, j) * y[j];
            }
            y[i] = s / self.lu.get(i, i);
        }
        y
    }
}

/// Relative determinant threshold below which a matrix is treated as singular.
const SINGULAR_TOL: f64 = 1e-12;

/// Inverse by LU with partial pivoting.
///
/// Fails with the offending |det| when |det| <= 1e-12 times the Hadamard
/// bound of the matrix, so near-rank-deficient inputs are rejected instead of
/// amplified.
pub fn matrix_inverse(a: &Matrix) -> Result<Matrix, LinalgError> {
    assert!(a.is_square(), "inverse needs a square matrix");
    let lu = a.lu().ok_or(LinalgError::Singular { abs_det: 0.0 })?;
    let scale = a.hadamard_bound().max(f64::MIN_POSITIVE);
    if lu.det.abs() <= SINGULAR_TOL * scale {
        return Err(LinalgError::Singular { abs_det: lu.det.abs() });
    }
    let n = a.rows;
    let mut inv = Matrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = lu.solve(&e);
        inv.set_column(j, &col);
        e[j] = 0.0;
    }
    Ok(inv)
}

/// Solves A x = b for square invertible A.
pub fn solve_linear(a: &Matrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    assert!(a.is_square() && a.rows == b.len());
    let lu = a.lu().ok_or(LinalgError::Singular { abs_det: 0.0 })?;
    let scale = a.hadamard_bound().max(f64::MIN_POSITIVE);
    if lu.det.abs() <= SINGULAR_TOL * scale {
        return Err(LinalgError::Singular { abs_det: lu.det.abs() });
    }
    Ok(lu.solve(b))
}

/// Matrix exponential by scaling and squaring with a Taylor evaluation of the
/// scaled block. Relative error stays below 1e-12 for one-norms up to 10.
pub fn matrix_exponential(a: &Matrix) -> Matrix {
    assert!(a.is_square());
    let n = a.rows;
    let norm = a.one_norm();
    let s = if norm > 0.25 { (norm / 0.25).log2().ceil().max(0.0) as u32 } else { 0 };
    let b = a.scale(0.5f64.powi(s as i32));
    let mut term = Matrix::identity(n);
    let mut sum = Matrix::identity(n);
    for k in 1..=64u32 {
        term = term.matmul(&b).scale(1.0 / k as f64);
        sum = sum.add(&term);
        if term.frobenius_norm() <= 1e-18 * sum.frobenius_norm() {
            break;
        }
    }
    let mut out = sum;
    for _ in 0..s {
        out = out.matmul(&out);
    }
    out
}

/// Principal square root by the Denman-Beavers iteration.
pub fn matrix_sqrt(a: &Matrix) -> Result<Matrix, LinalgError> {
    assert!(a.is_square());
    let n = a.rows;
    let mut y = a.clone();
    let mut z = Matrix::identity(n);
    for _ in 0..100 {
        let y_inv = matrix_inverse(&y).map_err(|_| LinalgError::NoRealLogarithm)?;
        let z_inv = matrix_inverse(&z).map_err(|_| LinalgError::NoRealLogarithm)?;
        let y_next = y.add(&z_inv).scale(0.5);
        let z_next = z.add(&y_inv).scale(0.5);
        let delta = y_next.max_abs_diff(&y);
        y = y_next;
        z = z_next;
        if delta <= 1e-15 * y.max_abs().max(1.0) {
            return Ok(y);
        }
    }
    Err(LinalgError::NoConvergence("Denman-Beavers square root".into()))
}

/// Principal matrix logarithm by inverse scaling and squaring: repeated
/// principal square roots until the iterate is within 1/4 of the identity,
/// then the alternating log series, then the 2^s rescale.
///
/// Requires every eigenvalue off the closed negative real axis; callers that
/// can check the spectrum first get a cleaner error that way.
pub fn matrix_log(a: &Matrix) -> Result<Matrix, LinalgError> {
    assert!(a.is_square());
    let n = a.rows;
    let eye = Matrix::identity(n);
    let mut x = a.clone();
    let mut s = 0u32;
    while x.sub(&eye).one_norm() > 0.25 {
        x = matrix_sqrt(&x)?;
        s += 1;
        if s > 60 {
            return Err(LinalgError::NoConvergence("inverse scaling and squaring".into()));
        }
    }
    let m = x.sub(&eye);
    let mut acc = Matrix::zeros(n, n);
    let mut pow = m.clone();
    for k in 1..=80u32 {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let term = pow.scale(sign / k as f64);
        acc = acc.add(&term);
        if term.frobenius_norm() <= 1e-17 * acc.frobenius_norm().max(1e-300) {
            break;
        }
        pow = pow.matmul(&m);
    }
    Ok(acc.scale(2f64.powi(s as i32)))
}

/// Thin SVD product of a one-sided Jacobi run: `a = u * diag(sigma) * v^T`
/// with `sigma` sorted descending and `v` square.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

/// One-sided Jacobi SVD. Deterministic: fixed sweep order, no randomness, so
/// equal inputs give bit-equal outputs.
pub fn svd(a: &Matrix) -> Svd {
    let mut work = a.clone();
    let rows = work.rows;
    let cols = work.cols;
    let mut v = Matrix::identity(cols);
    let tol = 1e-15;
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for i in 0..rows {
                    let ap = work.get(i, p);
                    let aq = work.get(i, q);
                    alpha += ap * ap;
                    beta += aq * aq;
                    gamma += ap * aq;
                }
                let denom = (alpha * beta).sqrt();
                if denom == 0.0 || gamma.abs() <= tol * denom {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let ap = work.get(i, p);
                    let aq = work.get(i, q);
                    work.set(i, p, c * ap - s * aq);
                    work.set(i, q, s * ap + c * aq);
                }
                for i in 0..cols {
                    let vp = v.get(i, p);
                    let vq = v.get(i, q);
                    v.set(i, p, c * vp - s * vq);
                    v.set(i, q, s * vp + c * vq);
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sigma: Vec<f64> = (0..cols)
        .map(|j| (0..rows).map(|i| work.get(i, j).powi(2)).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap().then(i.cmp(&j)));
    let mut u = Matrix::zeros(rows, cols);
    let mut v_sorted = Matrix::zeros(cols, cols);
    let mut sigma_sorted = vec![0.0; cols];
    for (dst, &src) in order.iter().enumerate() {
        sigma_sorted[dst] = sigma[src];
        let s = sigma[src];
        for i in 0..rows {
            let val = work.get(i, src);
            u.set(i, dst, if s > 0.0 { val / s } else { 0.0 });
        }
        for i in 0..cols {
            v_sorted.set(i, dst, v.get(i, src));
        }
    }
    sigma = sigma_sorted;
    Svd { u, sigma, v: v_sorted }
}

/// Number of singular values above `tol` times the largest one. The zero
/// matrix has rank 0 for every tolerance.
pub fn numerical_rank(a: &Matrix, tol: f64) -> usize {
    let sv = svd(a);
    let smax = sv.sigma.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    sv.sigma.iter().filter(|&&s| s > tol * smax).count()
}

/// Minimum-norm least-squares solution of `a x = b` through the SVD
/// pseudo-inverse. Returns the solution and the residual norm `|a x - b|`.
pub fn least_squares(a: &Matrix, b: &[f64]) -> (Vec<f64>, f64) {
    assert_eq!(a.rows, b.len());
    let sv = svd(a);
    let smax = sv.sigma.first().copied().unwrap_or(0.0);
    let cutoff = 1e-13 * smax;
    let mut x = vec![0.0; a.cols];
    for (j, &s) in sv.sigma.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            continue;
        }
        let uj_b: f64 = (0..a.rows).map(|i| sv.u.get(i, j) * b[i]).sum();
        let coef = uj_b / s;
        for i in 0..a.cols {
            x[i] += coef * sv.v.get(i, j);
        }
    }
    let ax = a.apply(&x);
    let res = ax
        .iter()
        .zip(b)
        .map(|(p, q)| (p - q).powi(2))
        .sum::<f64>()
        .sqrt();
    (x, res)
}

/// Last `dim` right singular vectors, an orthonormal basis of the numerical
/// kernel when the caller knows its dimension.
pub fn kernel_basis(a: &Matrix, dim: usize) -> Vec<Vec<f64>> {
    let sv = svd(a);
    let cols = a.cols;
    assert!(dim <= cols);
    (cols - dim..cols).map(|j| sv.v.column(j)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rot(theta: f64) -> Matrix {
        Matrix::from_rows(&[
            vec![theta.cos(), -theta.sin()],
            vec![theta.sin(), theta.cos()],
        ])
    }

    #[test]
    fn exponential_matches_closed_forms() {
        // Nilpotent shear: exp([[0,t],[0,0]]) = [[1,t],[0,1]].
        let t = 0.7;
        let shear = matrix_exponential(&Matrix::from_rows(&[vec![0.0, t], vec![0.0, 0.0]]));
        assert!(shear.approx_eq(&Matrix::from_rows(&[vec![1.0, t], vec![0.0, 1.0]]), 1e-14));

        // Diagonal: exp(diag(a,b)) = diag(e^a, e^b).
        let d = matrix_exponential(&Matrix::diag(&[2f64.ln(), -(2f64.ln())]));
        assert!(d.approx_eq(&Matrix::diag(&[2.0, 0.5]), 1e-13));

        // Rotation generator with norm close to the contract limit.
        let theta = 9.5;
        let gen = Matrix::from_rows(&[vec![0.0, -theta], vec![theta, 0.0]]);
        let r = matrix_exponential(&gen);
        assert!(r.max_abs_diff(&rot(theta)) <= 1e-12 * rot(theta).max_abs().max(1.0));
    }

    #[test]
    fn inverse_rejects_singular_and_reports_det() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        match matrix_inverse(&a) {
            Err(LinalgError::Singular { abs_det }) => assert!(abs_det <= 1e-10),
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn inverse_contract_on_well_conditioned() {
        let a = Matrix::from_rows(&[
            vec![1.0, 1.0, 0.0],
            vec![0.0, 1.0, 2.0],
            vec![-1.0, 0.5, 1.0],
        ]);
        let inv = matrix_inverse(&a).unwrap();
        assert!(a.matmul(&inv).approx_eq(&Matrix::identity(3), 1e-10));
        assert!(inv.matmul(&a).approx_eq(&Matrix::identity(3), 1e-10));
    }

    #[test]
    fn log_inverts_exp_near_identity_and_beyond() {
        let x = Matrix::from_rows(&[vec![0.3, 0.8, 0.0], vec![-0.2, 0.1, 0.4], vec![0.0, 0.5, -0.4]]);
        let back = matrix_log(&matrix_exponential(&x)).unwrap();
        assert!(back.approx_eq(&x, 1e-12));

        // Unipotent case: principal log of exp of a strictly upper matrix.
        let nilp = Matrix::from_rows(&[vec![0.0, 3.0], vec![0.0, 0.0]]);
        let back = matrix_log(&matrix_exponential(&nilp)).unwrap();
        assert!(back.approx_eq(&nilp, 1e-12));
    }

    #[test]
    fn log_rejects_negative_real_spectrum() {
        let a = Matrix::diag(&[-1.0, -2.0]);
        assert!(matrix_log(&a).is_err());
    }

    #[test]
    fn rank_examples() {
        assert_eq!(numerical_rank(&Matrix::zeros(3, 3), 1e-10), 0);
        let rank1 = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert_eq!(numerical_rank(&rank1, 1e-10), 1);
        assert_eq!(numerical_rank(&Matrix::identity(4), 1e-10), 4);
        // Wide matrix, full row rank.
        let wide = Matrix::from_rows(&[vec![1.0, 0.0, 2.0, 1.0], vec![0.0, 1.0, 1.0, -1.0]]);
        assert_eq!(numerical_rank(&wide, 1e-10), 2);
    }

    #[test]
    fn svd_reconstructs() {
        let a = Matrix::from_rows(&[vec![2.0, 0.0, 1.0], vec![-1.0, 1.0, 0.0], vec![0.0, 3.0, 1.0]]);
        let sv = svd(&a);
        let recon = sv.u.matmul(&Matrix::diag(&sv.sigma)).matmul(&sv.v.transpose());
        assert!(recon.approx_eq(&a, 1e-12));
        assert!(sv.sigma.windows(2).all(|w| w[0] >= w[1]));
        assert!(sv.v.transpose().matmul(&sv.v).approx_eq(&Matrix::identity(3), 1e-12));
    }

    #[test]
    fn least_squares_minimum_norm() {
        // Underdetermined: x + y = 2 has minimum-norm solution (1, 1).
        let a = Matrix::from_rows(&[vec![1.0, 1.0]]);
        let (x, res) = least_squares(&a, &[2.0]);
        assert!(res <= 1e-12);
        assert!((x[0] - 1.0).abs() <= 1e-12 && (x[1] - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn kernel_basis_spans_nullspace() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        let base = kernel_basis(&a, 1);
        let v = &base[0];
        let image = a.apply(v);
        assert!(image.iter().all(|x| x.abs() <= 1e-12));
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() <= 1e-12);
    }

    fn bounded_matrix(n: usize, bound: f64) -> impl Strategy<Value = Matrix> {
        prop::collection::vec(-bound..bound, n * n)
            .prop_map(move |data| Matrix::from_vec(n, n, data))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        // exp(A) exp(-A) = I within 1e-10 for |A| <= 5.
        #[test]
        fn exp_of_negation_is_inverse(a in bounded_matrix(3, 5.0 / 3.0)) {
            let e = matrix_exponential(&a);
            let e_neg = matrix_exponential(&a.scale(-1.0));
            prop_assert!(e.matmul(&e_neg).approx_eq(&Matrix::identity(3), 1e-10));
        }

        // det(exp(A)) = exp(tr(A)) within 1e-9 relative.
        #[test]
        fn det_exp_is_exp_trace(a in bounded_matrix(3, 1.5)) {
            let lhs = matrix_exponential(&a).determinant();
            let rhs = a.trace().exp();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1.0));
        }

        #[test]
        fn inverse_roundtrip(a in bounded_matrix(3, 2.0)) {
            if let Ok(inv) = matrix_inverse(&a) {
                // Contract applies to well-conditioned inputs; gate on the
                // same det/scale ratio the kernel uses, with margin.
                let ratio = a.determinant().abs() / a.hadamard_bound().max(1e-300);
                if ratio > 1e-3 {
                    prop_assert!(a.matmul(&inv).approx_eq(&Matrix::identity(3), 1e-10));
                }
            }
        }
    }
}
