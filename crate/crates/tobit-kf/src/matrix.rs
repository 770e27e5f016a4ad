//! Small dense row-major matrices and the handful of factorizations the
//! filters need.
//!
//! State and measurement dimensions in this crate are tiny (single digits), so
//! everything here favours auditability over asymptotic speed: multiplication
//! is the naive triple loop, [`solve`] is Gaussian elimination with partial
//! pivoting, and the symmetric eigensolver behind [`symmetrize_psd`] is cyclic
//! Jacobi. No external linear-algebra crate is involved, which keeps the
//! numerical core portable to `no_std` targets.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Index, IndexMut, Mul};

/// Relative pivot threshold below which [`solve`] reports singularity.
pub const SINGULARITY_RTOL: f64 = 1e-12;

/// Errors produced by the dense-matrix kernels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MatrixError {
    /// Operand shapes are incompatible for the named operation.
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    /// Elimination hit a pivot below `SINGULARITY_RTOL * ‖a‖∞`.
    Singular { pivot: usize },
    /// A Cholesky pivot went negative beyond tolerance.
    NotPositiveSemidefinite { pivot: usize },
}

impl fmt::Display for MatrixError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixError::ShapeMismatch { op, left, right } => write!(
                f,
                "{op}: incompatible shapes {}x{} and {}x{}",
                left.0, left.1, right.0, right.1
            ),
            MatrixError::Singular { pivot } => {
                write!(f, "matrix is singular to working precision at pivot {pivot}")
            }
            MatrixError::NotPositiveSemidefinite { pivot } => {
                write!(f, "matrix is not positive semidefinite (pivot {pivot})")
            }
        }
    }
}

/// Dense row-major matrix of `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Dense column vector of `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct Vector {
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Square matrix with `d` on the diagonal.
    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Matrix::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Build from row arrays: `Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]])`.
    pub fn from_rows<const N: usize>(rows: &[[f64; N]]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * N);
        for r in rows {
            data.extend_from_slice(r);
        }
        Matrix {
            rows: rows.len(),
            cols: N,
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        debug_assert_eq!(self.shape(), other.shape());
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        out
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        debug_assert_eq!(self.shape(), other.shape());
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        out
    }

    pub fn scaled(&self, s: f64) -> Matrix {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a *= s;
        }
        out
    }

    /// Scale row `i` by `s` in place.
    pub fn scale_row(&mut self, i: usize, s: f64) {
        for j in 0..self.cols {
            self[(i, j)] *= s;
        }
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diag().iter().sum()
    }

    /// Matrix infinity norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest absolute entry; handy for tolerance scaling in tests.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            let t = self[(a, j)];
            self[(a, j)] = self[(b, j)];
            self[(b, j)] = t;
        }
    }

    /// `(self + selfᵀ) / 2`.
    pub fn symmetrized(&self) -> Matrix {
        debug_assert!(self.is_square());
        Matrix::from_fn(self.rows, self.cols, |i, j| {
            0.5 * (self[(i, j)] + self[(j, i)])
        })
    }

    pub fn mul_vec(&self, v: &Vector) -> Vector {
        debug_assert_eq!(self.cols, v.len());
        let mut out = Vector::zeros(self.rows);
        for i in 0..self.rows {
            let mut s = 0.0;
            for j in 0..self.cols {
                s += self[(i, j)] * v[j];
            }
            out[i] = s;
        }
        out
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        mat_mul(self, rhs).expect("matrix product shape mismatch")
    }
}

impl Mul<&Vector> for &Matrix {
    type Output = Vector;
    fn mul(self, rhs: &Vector) -> Vector {
        self.mul_vec(rhs)
    }
}

impl Vector {
    pub fn zeros(n: usize) -> Self {
        Vector { data: vec![0.0; n] }
    }

    pub fn from_slice(s: &[f64]) -> Self {
        Vector { data: s.to_vec() }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn add(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.len(), other.len());
        Vector {
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.len(), other.len());
        Vector {
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Vector {
        Vector {
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm_inf(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Squared Euclidean norm.
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Column-vector outer product `self · otherᵀ`.
    pub fn outer(&self, other: &Vector) -> Matrix {
        Matrix::from_fn(self.len(), other.len(), |i, j| self[i] * other[j])
    }

    pub fn iter(&self) -> core::slice::Iter<'_, f64> {
        self.data.iter()
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

impl IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.data[i]
    }
}

/// `a · b`, checking shapes.
pub fn mat_mul(a: &Matrix, b: &Matrix) -> Result<Matrix, MatrixError> {
    if a.cols != b.rows {
        return Err(MatrixError::ShapeMismatch {
            op: "mat_mul",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let mut out = Matrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for k in 0..a.cols {
            let aik = a[(i, k)];
            if aik == 0.0 {
                continue;
            }
            for j in 0..b.cols {
                out[(i, j)] += aik * b[(k, j)];
            }
        }
    }
    Ok(out)
}

/// Solve `a · x = b` for possibly multiple right-hand sides (the columns of
/// `b`) by Gaussian elimination with partial pivoting.
///
/// Reports [`MatrixError::Singular`] with the offending pivot column when the
/// best available pivot falls below `SINGULARITY_RTOL * ‖a‖∞`.
pub fn solve(a: &Matrix, b: &Matrix) -> Result<Matrix, MatrixError> {
    if !a.is_square() || a.rows != b.rows {
        return Err(MatrixError::ShapeMismatch {
            op: "solve",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let n = a.rows;
    let k = b.cols;
    let mut lu = a.clone();
    let mut x = b.clone();
    // Floor the scale so an all-zero matrix still trips the singularity check.
    let tol = SINGULARITY_RTOL * a.norm_inf().max(f64::MIN_POSITIVE);

    for col in 0..n {
        let mut p = col;
        let mut best = lu[(col, col)].abs();
        for r in col + 1..n {
            let v = lu[(r, col)].abs();
            if v > best {
                best = v;
                p = r;
            }
        }
        if !(best >= tol) {
            return Err(MatrixError::Singular { pivot: col });
        }
        lu.swap_rows(p, col);
        x.swap_rows(p, col);
        let d = lu[(col, col)];
        for r in col + 1..n {
            let f = lu[(r, col)] / d;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                lu[(r, c)] -= f * lu[(col, c)];
            }
            for c in 0..k {
                x[(r, c)] -= f * x[(col, c)];
            }
        }
    }
    for col in (0..n).rev() {
        for c in 0..k {
            let mut s = x[(col, c)];
            for j in col + 1..n {
                s -= lu[(col, j)] * x[(j, c)];
            }
            x[(col, c)] = s / lu[(col, col)];
        }
    }
    Ok(x)
}

/// Solve `a · x = b` for a single right-hand-side vector.
pub fn solve_vec(a: &Matrix, b: &Vector) -> Result<Vector, MatrixError> {
    let bm = Matrix::from_fn(b.len(), 1, |i, _| b[i]);
    let xm = solve(a, &bm)?;
    Ok(Vector {
        data: (0..xm.rows()).map(|i| xm[(i, 0)]).collect(),
    })
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, v)` with `m ≈ v · diag(eigenvalues) · vᵀ` and the
/// eigenvectors in the columns of `v`. The input is symmetrized first, so
/// mild asymmetry from accumulated round-off is tolerated.
pub fn sym_eigen(m: &Matrix) -> (Vec<f64>, Matrix) {
    assert!(m.is_square(), "sym_eigen needs a square matrix");
    let n = m.rows;
    let mut a = m.symmetrized();
    let mut v = Matrix::identity(n);
    if n <= 1 {
        return (a.diag(), v);
    }
    let scale = a.max_abs().max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                off = off.max(a[(p, q)].abs());
            }
        }
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                // Smaller-angle root of t² + 2θt − 1 = 0, for stability.
                let t = if theta >= 0.0 {
                    1.0 / (theta + libm::sqrt(theta * theta + 1.0))
                } else {
                    -1.0 / (-theta + libm::sqrt(theta * theta + 1.0))
                };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = c * aip - s * aiq;
                    a[(i, q)] = s * aip + c * aiq;
                }
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = c * apj - s * aqj;
                    a[(q, j)] = s * apj + c * aqj;
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = c * vip - s * viq;
                    v[(i, q)] = s * vip + c * viq;
                }
            }
        }
    }
    (a.diag(), v)
}

/// Smallest eigenvalue of a (symmetrized) square matrix.
pub fn min_eigenvalue(m: &Matrix) -> f64 {
    let (evals, _) = sym_eigen(m);
    evals.into_iter().fold(f64::INFINITY, f64::min)
}

/// Symmetrize `m` and clip its eigenvalues from below at `floor`.
///
/// Used to keep covariance estimates positive semidefinite after updates that
/// are only PSD in exact arithmetic. When no eigenvalue falls below the floor
/// the symmetrized input is returned unchanged.
pub fn symmetrize_psd(m: &Matrix, floor: f64) -> Matrix {
    assert!(m.is_square(), "symmetrize_psd needs a square matrix");
    let sym = m.symmetrized();
    let (evals, v) = sym_eigen(&sym);
    if evals.iter().all(|&l| l >= floor) {
        return sym;
    }
    let n = sym.rows();
    let mut out = Matrix::zeros(n, n);
    for (idx, &l) in evals.iter().enumerate() {
        let l = l.max(floor);
        if l == 0.0 {
            continue;
        }
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += l * v[(i, idx)] * v[(j, idx)];
            }
        }
    }
    // Exact symmetry regardless of accumulation order.
    out.symmetrized()
}

/// Lower-triangular `L` with `L·Lᵀ = m` for a symmetric positive
/// *semi*definite `m`; zero pivots (within tolerance) produce zero columns.
///
/// Rejects inputs whose pivots go negative beyond `1e-8` of the matrix scale,
/// which catches genuinely indefinite inputs without tripping on round-off.
pub fn cholesky_psd(m: &Matrix) -> Result<Matrix, MatrixError> {
    assert!(m.is_square(), "cholesky_psd needs a square matrix");
    let n = m.rows;
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    let zero_tol = 1e-12 * scale;
    let neg_tol = 1e-8 * scale;
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d < -neg_tol {
            return Err(MatrixError::NotPositiveSemidefinite { pivot: j });
        }
        if d <= zero_tol {
            continue; // semidefinite direction: leave the column at zero
        }
        let dj = libm::sqrt(d);
        l[(j, j)] = dj;
        for i in j + 1..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / dj;
        }
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn mat_mul_known_product() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]);
        let b = Matrix::from_rows(&[[5.0, 6.0], [7.0, 8.0]]);
        let c = mat_mul(&a, &b).unwrap();
        assert_eq!(c, Matrix::from_rows(&[[19.0, 22.0], [43.0, 50.0]]));
    }

    #[test]
    fn mat_mul_identity_is_noop() {
        let a = Matrix::from_rows(&[[1.5, -2.0, 0.25], [0.0, 3.0, -1.0]]);
        let c = mat_mul(&a, &Matrix::identity(3)).unwrap();
        assert_eq!(c, a);
    }

    #[test]
    fn mat_mul_shape_mismatch_names_both_shapes() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(2, 2);
        let err = mat_mul(&a, &b).unwrap_err();
        assert_eq!(
            err,
            MatrixError::ShapeMismatch {
                op: "mat_mul",
                left: (2, 3),
                right: (2, 2)
            }
        );
        let msg = alloc::format!("{err}");
        assert!(msg.contains("2x3") && msg.contains("2x2"), "{msg}");
    }

    #[test]
    fn solve_residual_random_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.random_range(1..=6usize);
            let a = Matrix::from_fn(n, n, |i, j| {
                rng.random_range(-1.0..1.0) + if i == j { 2.0 } else { 0.0 }
            });
            let b = Matrix::from_fn(n, 2, |_, _| rng.random_range(-3.0..3.0));
            let x = solve(&a, &b).unwrap();
            let r = mat_mul(&a, &x).unwrap().sub(&b);
            assert!(
                r.norm_inf() <= 1e-9 * b.norm_inf().max(1.0),
                "residual {} too large",
                r.norm_inf()
            );
        }
    }

    #[test]
    fn solve_reports_singularity_with_pivot_index() {
        // Second row is a multiple of the first: rank 1, fails at pivot 1.
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]);
        let b = Matrix::zeros(2, 1);
        assert_eq!(solve(&a, &b).unwrap_err(), MatrixError::Singular { pivot: 1 });
        let zero = Matrix::zeros(3, 3);
        assert_eq!(
            solve(&zero, &Matrix::zeros(3, 1)).unwrap_err(),
            MatrixError::Singular { pivot: 0 }
        );
    }

    #[test]
    fn solve_shape_mismatch() {
        let a = Matrix::zeros(3, 2);
        let b = Matrix::zeros(3, 1);
        assert!(matches!(
            solve(&a, &b),
            Err(MatrixError::ShapeMismatch { op: "solve", .. })
        ));
    }

    #[test]
    fn sym_eigen_known_2x2() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3.
        let m = Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]);
        let (mut evals, v) = sym_eigen(&m);
        evals.sort_by(f64::total_cmp);
        assert_close(evals[0], 1.0, 1e-12);
        assert_close(evals[1], 3.0, 1e-12);
        // Eigenvectors orthonormal: VᵀV = I.
        let vtv = mat_mul(&v.transpose(), &v).unwrap();
        assert!(vtv.sub(&Matrix::identity(2)).norm_inf() < 1e-12);
    }

    #[test]
    fn sym_eigen_reconstructs_random_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let n = rng.random_range(2..=6usize);
            let g = Matrix::from_fn(n, n, |_, _| rng.random_range(-2.0..2.0));
            let m = g.symmetrized();
            let (evals, v) = sym_eigen(&m);
            let recon = mat_mul(
                &mat_mul(&v, &Matrix::from_diag(&evals)).unwrap(),
                &v.transpose(),
            )
            .unwrap();
            assert!(
                recon.sub(&m).norm_inf() <= 1e-11 * m.norm_inf().max(1.0),
                "reconstruction error {}",
                recon.sub(&m).norm_inf()
            );
        }
    }

    /// Independent PSD certificate: plain textbook Cholesky without the
    /// semidefinite tolerance tricks of `cholesky_psd`.
    fn chol_certifies_psd(m: &Matrix, shift: f64) -> bool {
        let n = m.rows();
        let mut a = m.clone();
        for i in 0..n {
            a[(i, i)] += shift;
        }
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if d < 0.0 {
                return false;
            }
            l[(j, j)] = libm::sqrt(d);
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = if l[(j, j)] > 0.0 { s / l[(j, j)] } else { 0.0 };
            }
        }
        true
    }

    #[test]
    fn symmetrize_psd_clips_from_below() {
        // Shear matrix: symmetrizes to [[0, .5], [.5, 0]] with eigenvalues ±0.5.
        let m = Matrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]);
        let out = symmetrize_psd(&m, 0.0);
        assert!(out.sub(&out.transpose()).norm_inf() == 0.0);
        // min eigenvalue ≥ -1e-12, certified by an independent Cholesky.
        assert!(chol_certifies_psd(&out, 1e-12));
        // The positive eigenpair must survive: eigenvalue 0.5 along (1,1)/√2.
        assert_close(out[(0, 0)] + out[(0, 1)] + out[(1, 0)] + out[(1, 1)], 1.0, 1e-12);
    }

    #[test]
    fn symmetrize_psd_leaves_psd_input_unchanged() {
        let m = Matrix::from_rows(&[[2.0, 0.3, 0.0], [0.3, 1.0, -0.2], [0.0, -0.2, 0.5]]);
        let out = symmetrize_psd(&m, 0.0);
        assert!(out.sub(&m).norm_inf() <= 1e-12);
    }

    #[test]
    fn symmetrize_psd_random_inputs_certified() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..30 {
            let n = rng.random_range(1..=5usize);
            let m = Matrix::from_fn(n, n, |_, _| rng.random_range(-2.0..2.0));
            let floor = [0.0, 1e-12, 0.1][rng.random_range(0..3usize)];
            let out = symmetrize_psd(&m, floor);
            assert!(out.sub(&out.transpose()).norm_inf() == 0.0);
            assert!(chol_certifies_psd(&out, 1e-12 - floor.min(0.0)));
            // Idempotent on its own output.
            let again = symmetrize_psd(&out, floor);
            assert!(again.sub(&out).norm_inf() <= 1e-12 * out.norm_inf().max(1.0));
        }
    }

    #[test]
    fn cholesky_psd_handles_semidefinite() {
        let l = cholesky_psd(&Matrix::zeros(3, 3)).unwrap();
        assert_eq!(l, Matrix::zeros(3, 3));

        // Rank-1 PSD matrix.
        let m = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]);
        let l = cholesky_psd(&m).unwrap();
        let recon = mat_mul(&l, &l.transpose()).unwrap();
        assert!(recon.sub(&m).norm_inf() <= 1e-12);

        let id = cholesky_psd(&Matrix::identity(4)).unwrap();
        assert_eq!(id, Matrix::identity(4));

        // Indefinite input (eigenvalues 3 and -1) must be rejected.
        let bad = Matrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]);
        assert!(matches!(
            cholesky_psd(&bad),
            Err(MatrixError::NotPositiveSemidefinite { .. })
        ));
    }

    #[test]
    fn vector_outer_and_dot() {
        let a = Vector::from_slice(&[1.0, 2.0]);
        let b = Vector::from_slice(&[3.0, 4.0, 5.0]);
        let o = a.outer(&b);
        assert_eq!(o, Matrix::from_rows(&[[3.0, 4.0, 5.0], [6.0, 8.0, 10.0]]));
        assert_eq!(a.dot(&a), 5.0);
    }
}
