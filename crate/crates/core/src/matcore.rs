//! Small dense matrix kernel: determinant, adjugate, numeric rank, symmetric
//! eigenvalues. Sized for estimator state dimensions (n up to ~12), where
//! correctness at singular points matters more than asymptotic speed.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MatError {
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("invalid shape: rows and cols must be >= 1")]
    EmptyShape,
}

/// Dense row-major matrix of `f64`. Entries are validated finite on
/// construction; every operation may assume finiteness of its inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, MatError> {
        if rows == 0 || cols == 0 {
            return Err(MatError::EmptyShape);
        }
        if data.len() != rows * cols {
            return Err(MatError::DimMismatch(format!(
                "{}x{} needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        for (k, v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(MatError::NonFinite {
                    row: k / cols,
                    col: k % cols,
                });
            }
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1);
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MatError> {
        if rows.is_empty() {
            return Err(MatError::EmptyShape);
        }
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(MatError::DimMismatch("ragged rows".into()));
            }
            data.extend_from_slice(r);
        }
        Matrix::new(rows.len(), cols, data)
    }

    /// Column vector from a slice.
    pub fn column(v: &[f64]) -> Self {
        Matrix::new(v.len(), 1, v.to_vec()).expect("finite column")
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

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix, MatError> {
        if self.cols != other.rows {
            return Err(MatError::DimMismatch(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>, MatError> {
        if self.cols != v.len() {
            return Err(MatError::DimMismatch(format!(
                "{}x{} * vec{}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let mut acc = 0.0;
            for j in 0..self.cols {
                acc += self[(i, j)] * v[j];
            }
            out[i] = acc;
        }
        Ok(out)
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix, MatError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(MatError::DimMismatch("add shapes differ".into()));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix, MatError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(MatError::DimMismatch("sub shapes differ".into()));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| c * v).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Outer product x yᵀ.
    pub fn outer(x: &[f64], y: &[f64]) -> Matrix {
        let mut out = Matrix::zeros(x.len(), y.len());
        for i in 0..x.len() {
            for j in 0..y.len() {
                out[(i, j)] = x[i] * y[j];
            }
        }
        out
    }

    /// Largest |a_ij - a_ji|; 0 for an exactly symmetric matrix.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols.min(self.rows) {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Determinant: closed form for n <= 2, partial-pivot elimination above.
pub fn determinant(a: &Matrix) -> Result<f64, MatError> {
    if !a.is_square() {
        return Err(MatError::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    let n = a.rows;
    match n {
        1 => Ok(a[(0, 0)]),
        2 => Ok(a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)]),
        _ => {
            let mut m = a.clone();
            let mut det = 1.0;
            for col in 0..n {
                let mut pivot_row = col;
                let mut pivot_mag = m[(col, col)].abs();
                for r in (col + 1)..n {
                    if m[(r, col)].abs() > pivot_mag {
                        pivot_mag = m[(r, col)].abs();
                        pivot_row = r;
                    }
                }
                if pivot_mag == 0.0 {
                    return Ok(0.0);
                }
                if pivot_row != col {
                    for j in 0..n {
                        let tmp = m[(col, j)];
                        m[(col, j)] = m[(pivot_row, j)];
                        m[(pivot_row, j)] = tmp;
                    }
                    det = -det;
                }
                let p = m[(col, col)];
                det *= p;
                for r in (col + 1)..n {
                    let factor = m[(r, col)] / p;
                    if factor == 0.0 {
                        continue;
                    }
                    for j in col..n {
                        m[(r, j)] -= factor * m[(col, j)];
                    }
                }
            }
            Ok(det)
        }
    }
}

/// Minor determinant with row `i` and column `j` removed, via elimination.
fn minor_det(a: &Matrix, i: usize, j: usize) -> f64 {
    let n = a.rows;
    if n == 1 {
        // Empty minor: determinant of the 0x0 matrix is 1 by convention.
        return 1.0;
    }
    let mut data = Vec::with_capacity((n - 1) * (n - 1));
    for r in 0..n {
        if r == i {
            continue;
        }
        for c in 0..n {
            if c == j {
                continue;
            }
            data.push(a[(r, c)]);
        }
    }
    let m = Matrix {
        rows: n - 1,
        cols: n - 1,
        data,
    };
    determinant(&m).expect("square minor")
}

fn adjugate_cofactor(a: &Matrix) -> Matrix {
    let n = a.rows;
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            // adj = transpose of the cofactor matrix
            out[(j, i)] = sign * minor_det(a, i, j);
        }
    }
    out
}

/// Gauss-Jordan inverse with partial pivoting. Returns `None` when a pivot
/// vanishes (singular to working precision).
pub fn inverse(a: &Matrix) -> Result<Option<Matrix>, MatError> {
    if !a.is_square() {
        return Err(MatError::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    let n = a.rows;
    let mut m = a.clone();
    let mut inv = Matrix::identity(n);
    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_mag = m[(col, col)].abs();
        for r in (col + 1)..n {
            if m[(r, col)].abs() > pivot_mag {
                pivot_mag = m[(r, col)].abs();
                pivot_row = r;
            }
        }
        if pivot_mag == 0.0 {
            return Ok(None);
        }
        if pivot_row != col {
            for j in 0..n {
                m.data.swap(col * n + j, pivot_row * n + j);
                inv.data.swap(col * n + j, pivot_row * n + j);
            }
        }
        let p = m[(col, col)];
        for j in 0..n {
            m[(col, j)] /= p;
            inv[(col, j)] /= p;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = m[(r, col)];
            if factor == 0.0 {
                continue;
            }
            for j in 0..n {
                m[(r, j)] -= factor * m[(col, j)];
                inv[(r, j)] -= factor * inv[(col, j)];
            }
        }
    }
    Ok(Some(inv))
}

/// Classical adjugate, satisfying `a * adj(a) = det(a) * I` even at singular
/// points. Cofactor expansion for n <= 4; `det * inverse` above that when the
/// determinant is well scaled, cofactors otherwise.
pub fn adjugate(a: &Matrix) -> Result<Matrix, MatError> {
    if !a.is_square() {
        return Err(MatError::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    let n = a.rows;
    if n == 1 {
        return Ok(Matrix::identity(1));
    }
    if n <= 4 {
        return Ok(adjugate_cofactor(a));
    }
    let det = determinant(a)?;
    let scale = a.max_abs().powi(n as i32);
    if det.abs() > 1e-12 * scale {
        if let Some(inv) = inverse(a)? {
            return Ok(inv.scale(det));
        }
    }
    Ok(adjugate_cofactor(a))
}

/// Numeric rank via elimination with complete pivoting: the count of pivots
/// exceeding `rel_tol` times the largest pivot. The zero matrix has rank 0.
pub fn numeric_rank(a: &Matrix, rel_tol: f64) -> usize {
    assert!(rel_tol > 0.0 && rel_tol < 1.0, "rel_tol must be in (0, 1)");
    let mut m = a.clone();
    let (rows, cols) = (m.rows, m.cols);
    let kmax = rows.min(cols);
    let mut pivots = Vec::with_capacity(kmax);
    let mut row_perm: Vec<usize> = (0..rows).collect();
    let mut col_perm: Vec<usize> = (0..cols).collect();
    for k in 0..kmax {
        let mut best = (k, k, 0.0f64);
        for i in k..rows {
            for j in k..cols {
                let v = m[(row_perm[i], col_perm[j])].abs();
                if v > best.2 {
                    best = (i, j, v);
                }
            }
        }
        if best.2 == 0.0 {
            break;
        }
        row_perm.swap(k, best.0);
        col_perm.swap(k, best.1);
        let p = m[(row_perm[k], col_perm[k])];
        pivots.push(p.abs());
        for i in (k + 1)..rows {
            let factor = m[(row_perm[i], col_perm[k])] / p;
            if factor == 0.0 {
                continue;
            }
            for j in k..cols {
                let v = m[(row_perm[k], col_perm[j])];
                m[(row_perm[i], col_perm[j])] -= factor * v;
            }
        }
    }
    match pivots.first() {
        None => 0,
        Some(&p0) => pivots.iter().filter(|p| **p > rel_tol * p0).count(),
    }
}

/// Eigenvalues of a symmetric matrix by the cyclic Jacobi method, ascending.
///
/// The input is symmetrized as (A + Aᵀ)/2 first, so callers may pass window
/// averages carrying round-off asymmetry.
pub fn sym_eigenvalues(a: &Matrix) -> Result<Vec<f64>, MatError> {
    if !a.is_square() {
        return Err(MatError::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    let n = a.rows;
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = 0.5 * (a[(i, j)] + a[(j, i)]);
        }
    }
    let scale = m.max_abs().max(1e-300);
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(m[(i, j)].abs());
            }
        }
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    m[(k, p)] = c * akp - s * akq;
                    m[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[(p, k)];
                    let aqk = m[(q, k)];
                    m[(p, k)] = c * apk - s * aqk;
                    m[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(eig)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force Laplace expansion along the first row; the independent
    /// oracle for the elimination-based determinant.
    fn det_cofactor_oracle(a: &Matrix) -> f64 {
        let n = a.rows();
        if n == 1 {
            return a[(0, 0)];
        }
        let mut acc = 0.0;
        for j in 0..n {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let mut data = Vec::new();
            for r in 1..n {
                for c in 0..n {
                    if c != j {
                        data.push(a[(r, c)]);
                    }
                }
            }
            let minor = Matrix::new(n - 1, n - 1, data).unwrap();
            acc += sign * a[(0, j)] * det_cofactor_oracle(&minor);
        }
        acc
    }

    // Small deterministic LCG so the random-matrix tests need no RNG dep here.
    struct Lcg(u64);
    impl Lcg {
        fn next_f64(&mut self) -> f64 {
            self.0 = self
                .0
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            // uniform in [-1, 1]
            ((self.0 >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        }
        fn matrix(&mut self, n: usize) -> Matrix {
            let data: Vec<f64> = (0..n * n).map(|_| self.next_f64()).collect();
            Matrix::new(n, n, data).unwrap()
        }
    }

    #[test]
    fn det_identity_2x2() {
        assert_eq!(determinant(&Matrix::identity(2)).unwrap(), 1.0);
    }

    #[test]
    fn det_oscillator_autocovariance() {
        // diag(0.5, 0.5/omega^2) with omega = 1
        let a = Matrix::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert!((determinant(&a).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn det_matches_cofactor_oracle_5x5() {
        let mut rng = Lcg(23341);
        for _ in 0..20 {
            let a = rng.matrix(5);
            let expect = det_cofactor_oracle(&a);
            let got = determinant(&a).unwrap();
            assert!(
                (got - expect).abs() <= 1e-10 * expect.abs().max(1e-30),
                "det {got} vs oracle {expect}"
            );
        }
    }

    #[test]
    fn det_non_square_rejected() {
        let a = Matrix::zeros(2, 3);
        assert!(matches!(determinant(&a), Err(MatError::NotSquare { .. })));
    }

    #[test]
    fn adjugate_identity_small_n() {
        for n in 1..=4 {
            let adj = adjugate(&Matrix::identity(n)).unwrap();
            assert_eq!(adj, Matrix::identity(n));
        }
    }

    #[test]
    fn adjugate_2x2_closed_form() {
        let a = Matrix::from_rows(&[vec![3.0, -2.0], vec![7.0, 5.0]]).unwrap();
        let adj = adjugate(&a).unwrap();
        let expect = Matrix::from_rows(&[vec![5.0, 2.0], vec![-7.0, 3.0]]).unwrap();
        assert_eq!(adj, expect);
    }

    #[test]
    fn adjugate_one_by_one_is_unit() {
        let a = Matrix::new(1, 1, vec![42.0]).unwrap();
        assert_eq!(adjugate(&a).unwrap(), Matrix::identity(1));
    }

    #[test]
    fn adjugate_identity_residual_6x6() {
        let mut rng = Lcg(7);
        for _ in 0..10 {
            let a = rng.matrix(6);
            let det = determinant(&a).unwrap();
            let adj = adjugate(&a).unwrap();
            let resid = a
                .mul(&adj)
                .unwrap()
                .sub(&Matrix::identity(6).scale(det))
                .unwrap();
            assert!(
                resid.max_abs() <= 1e-9 * (1.0 + det.abs()),
                "residual {} too large",
                resid.max_abs()
            );
        }
    }

    #[test]
    fn adjugate_singular_matrix_still_consistent() {
        // rank-1 5x5: adj must be the zero matrix for n >= 3 yet satisfy the identity
        let mut a = Matrix::zeros(5, 5);
        for i in 0..5 {
            for j in 0..5 {
                a[(i, j)] = (i + 1) as f64 * (j + 1) as f64;
            }
        }
        let adj = adjugate(&a).unwrap();
        let prod = a.mul(&adj).unwrap();
        assert!(prod.max_abs() <= 1e-9 * a.max_abs());
    }

    #[test]
    fn rank_identity_and_proportional_rows() {
        assert_eq!(numeric_rank(&Matrix::identity(3), 1e-9), 3);
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(numeric_rank(&a, 1e-9), 1);
    }

    #[test]
    fn rank_of_constraint_product_is_one() {
        // Hᵀ adj(Λ) L₂ with Hᵀ = [1 1], L₂ = [1; 0] and SPD Λ
        for lam in [
            Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap(),
            Matrix::from_rows(&[vec![1.5, -0.3], vec![-0.3, 0.8]]).unwrap(),
            Matrix::from_rows(&[vec![0.58, 0.2], vec![0.2, 0.35]]).unwrap(),
        ] {
            let h_t = Matrix::new(1, 2, vec![1.0, 1.0]).unwrap();
            let l2 = Matrix::new(2, 1, vec![1.0, 0.0]).unwrap();
            let prod = h_t.mul(&adjugate(&lam).unwrap()).unwrap().mul(&l2).unwrap();
            assert_eq!(numeric_rank(&prod, 1e-9), 1);
        }
    }

    #[test]
    fn rank_zero_matrix() {
        assert_eq!(numeric_rank(&Matrix::zeros(3, 3), 1e-9), 0);
    }

    #[test]
    fn triangular_det_is_diagonal_product() {
        let a = Matrix::from_rows(&[
            vec![2.0, 3.0, -1.0],
            vec![0.0, -4.0, 0.5],
            vec![0.0, 0.0, 1.5],
        ])
        .unwrap();
        assert!((determinant(&a).unwrap() - 2.0 * -4.0 * 1.5).abs() < 1e-12);
    }

    #[test]
    fn sym_eigenvalues_diag_and_rotation() {
        let a = Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 5.0]]).unwrap();
        let e = sym_eigenvalues(&a).unwrap();
        assert!((e[0] - 2.0).abs() < 1e-12 && (e[1] - 5.0).abs() < 1e-12);
        // [[2,1],[1,2]] has eigenvalues 1 and 3
        let b = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let e = sym_eigenvalues(&b).unwrap();
        assert!((e[0] - 1.0).abs() < 1e-12 && (e[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn non_finite_rejected_at_construction() {
        let r = Matrix::new(1, 2, vec![1.0, f64::NAN]);
        assert!(matches!(r, Err(MatError::NonFinite { .. })));
    }
}
