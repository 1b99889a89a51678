//! Dense complex linear algebra: LU with partial pivoting, solves, and
//! induced infinity norms.
//!
//! Real matrices are stored as complex matrices with zero imaginary parts,
//! so every consumer goes through a single code path.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::{max_modulus, re, Real, C};

/// Relative pivot threshold below which a factorization is flagged singular.
pub const PIVOT_REL_TOL: f64 = 1e-12;

/// Row-major dense matrix of complex entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C::new(T::zero(), T::zero()); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = re(T::one());
        }
        m
    }

    /// Builds a matrix from row-major complex entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a real matrix from nested rows. Panics on ragged input.
    pub fn from_real_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend(row.iter().map(|&v| re(v)));
        }
        Self {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn diag(d: &[C<T>]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C<T>] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C<T>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[C<T>]) {
        assert_eq!(col.len(), self.rows);
        for (i, &v) in col.iter().enumerate() {
            self[(i, j)] = v;
        }
    }

    pub fn mul_vec(&self, v: &[C<T>]) -> Result<Vec<C<T>>> {
        if v.len() != self.cols {
            return Err(Error::Dimension(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn mul_mat(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: C<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension("matrix shapes differ".into()));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// Copies the `rows x cols` block starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    /// Writes `b` into `self` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Self) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] = b[(i, j)];
            }
        }
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        max_modulus(&self.data)
    }

    /// Induced infinity norm: the maximum over rows of the sum of entry moduli.
    pub fn inf_norm_induced(&self) -> T {
        inf_norm_induced(self)
    }

    /// Converts to another scalar precision.
    pub fn cast<U: Real>(&self) -> DenseMatrix<U> {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|z| C::new(U::lit(z.re.as_f64()), U::lit(z.im.as_f64())))
                .collect(),
        }
    }
}

impl<T: Real> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = C<T>;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for DenseMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Max over rows of the sum of entry moduli.
pub fn inf_norm_induced<T: Real>(m: &DenseMatrix<T>) -> T {
    (0..m.rows())
        .map(|i| m.row(i).iter().map(|z| z.norm()).sum::<T>())
        .fold(T::zero(), T::max)
}

/// Max entry modulus of a vector.
pub fn inf_norm_vec<T: Real>(v: &[C<T>]) -> T {
    max_modulus(v)
}

/// Packed LU factors `P A = L U` with unit lower triangle.
#[derive(Debug, Clone)]
pub struct LuFactorization<T: Real> {
    lu: DenseMatrix<T>,
    /// `perm[i]` is the original row placed at position `i`.
    perm: Vec<usize>,
    singular: bool,
}

impl<T: Real> LuFactorization<T> {
    #[inline]
    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    #[inline]
    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Solves `A x = b` for the factorized `A`.
    pub fn solve(&self, b: &[C<T>]) -> Result<Vec<C<T>>> {
        if self.singular {
            return Err(Error::SingularJacobian);
        }
        let n = self.dim();
        if b.len() != n {
            return Err(Error::Dimension(format!(
                "rhs of length {} for a {n}x{n} system",
                b.len()
            )));
        }
        let mut x: Vec<C<T>> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc / self.lu[(i, i)];
        }
        Ok(x)
    }

    /// Inverse, assembled by solving against each unit vector.
    pub fn inverse(&self) -> Result<DenseMatrix<T>> {
        let n = self.dim();
        let mut inv = DenseMatrix::zeros(n, n);
        let mut e = vec![C::new(T::zero(), T::zero()); n];
        for j in 0..n {
            e[j] = re(T::one());
            let col = self.solve(&e)?;
            inv.set_column(j, &col);
            e[j] = re(T::zero());
        }
        Ok(inv)
    }
}

/// Factorizes a square matrix with partial pivoting.
///
/// The singularity flag is set when some pivot modulus falls below
/// `PIVOT_REL_TOL` times the largest initial entry modulus.
pub fn lu_factor<T: Real>(m: &DenseMatrix<T>) -> Result<LuFactorization<T>> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "LU of a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    let n = m.rows();
    let threshold = T::tol(PIVOT_REL_TOL) * m.max_abs();
    let mut lu = m.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut singular = false;

    for k in 0..n {
        let (piv, piv_mag) =
            (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, T::neg_infinity()), |best, cur| {
                    if cur.1 > best.1 {
                        cur
                    } else {
                        best
                    }
                });
        if piv_mag <= threshold {
            singular = true;
            break;
        }
        if piv != k {
            perm.swap(piv, k);
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(piv, j)];
                lu[(piv, j)] = tmp;
            }
        }
        let pivot = lu[(k, k)];
        for i in k + 1..n {
            let factor = lu[(i, k)] / pivot;
            lu[(i, k)] = factor;
            if factor.re == T::zero() && factor.im == T::zero() {
                continue;
            }
            for j in k + 1..n {
                let u = lu[(k, j)];
                lu[(i, j)] -= factor * u;
            }
        }
    }
    Ok(LuFactorization { lu, perm, singular })
}

/// Solves with a factorization; free-function form of [`LuFactorization::solve`].
pub fn solve<T: Real>(f: &LuFactorization<T>, b: &[C<T>]) -> Result<Vec<C<T>>> {
    f.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rv(v: &[f64]) -> Vec<C<f64>> {
        v.iter().map(|&x| re(x)).collect()
    }

    /// Determinant by cofactor expansion along the first row.
    fn det_cofactor(a: &[Vec<f64>]) -> f64 {
        let n = a.len();
        if n == 1 {
            return a[0][0];
        }
        (0..n)
            .map(|j| {
                let minor: Vec<Vec<f64>> = a[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|(c, _)| *c != j)
                            .map(|(_, &v)| v)
                            .collect()
                    })
                    .collect();
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * a[0][j] * det_cofactor(&minor)
            })
            .sum()
    }

    /// Inverse entry (i, j) via the adjugate.
    fn inverse_cofactor(a: &[Vec<f64>], i: usize, j: usize) -> f64 {
        let n = a.len();
        let minor: Vec<Vec<f64>> = (0..n)
            .filter(|&r| r != j)
            .map(|r| (0..n).filter(|&c| c != i).map(|c| a[r][c]).collect())
            .collect();
        let sign = if (i + j).is_multiple_of(2) { 1.0 } else { -1.0 };
        sign * det_cofactor(&minor) / det_cofactor(a)
    }

    #[test]
    fn identity_solve_is_identity() {
        let f = lu_factor(&DenseMatrix::<f64>::identity(3)).unwrap();
        assert!(!f.is_singular());
        assert_eq!(
            f.solve(&rv(&[1.0, 2.0, 3.0])).unwrap(),
            rv(&[1.0, 2.0, 3.0])
        );
    }

    #[test]
    fn permutation_matrix_records_pivot() {
        let m = DenseMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let f = lu_factor(&m).unwrap();
        assert_eq!(f.permutation(), &[1, 0]);
        assert_eq!(f.solve(&rv(&[3.0, 5.0])).unwrap(), rv(&[5.0, 3.0]));
    }

    #[test]
    fn hilbert_matches_cofactor_inverse() {
        let h: Vec<Vec<f64>> = (0..4)
            .map(|i| (0..4).map(|j| 1.0 / (i + j + 1) as f64).collect())
            .collect();
        let f = lu_factor(&DenseMatrix::from_real_rows(&h)).unwrap();
        let col = f.solve(&rv(&[1.0, 0.0, 0.0, 0.0])).unwrap();
        for (i, z) in col.iter().enumerate() {
            let expect = inverse_cofactor(&h, i, 0);
            assert!((z.re - expect).abs() <= 1e-8, "{i}: {} vs {expect}", z.re);
            assert_eq!(z.im, 0.0);
        }
        // frozen from the oracle: first column of inv(hilbert(4))
        assert!((col[0].re - 16.0).abs() < 1e-8);
        assert!((col[3].re + 140.0).abs() < 1e-8);
    }

    #[test]
    fn diagonal_solve() {
        let m = DenseMatrix::from_real_rows(&[vec![2.0, 0.0], vec![0.0, 4.0]]);
        let f = lu_factor(&m).unwrap();
        assert_eq!(f.solve(&rv(&[2.0, 4.0])).unwrap(), rv(&[1.0, 1.0]));
    }

    #[test]
    fn singular_and_nonsquare_inputs() {
        let m = DenseMatrix::from_real_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        let f = lu_factor(&m).unwrap();
        assert!(f.is_singular());
        assert!(matches!(
            f.solve(&rv(&[1.0, 1.0])),
            Err(Error::SingularJacobian)
        ));
        let tall = DenseMatrix::<f64>::zeros(3, 2);
        assert!(matches!(lu_factor(&tall), Err(Error::Dimension(_))));
        assert!(lu_factor(&DenseMatrix::<f64>::zeros(2, 2))
            .unwrap()
            .is_singular());
    }

    #[test]
    fn norms() {
        assert_eq!(inf_norm_induced(&DenseMatrix::<f64>::identity(3)), 1.0);
        let m = DenseMatrix::from_real_rows(&[vec![1.0, -2.0], vec![3.0, 4.0]]);
        assert_eq!(inf_norm_induced(&m), 7.0);
        let c =
            DenseMatrix::from_row_major(2, 2, vec![C::new(3.0, 4.0), re(0.0), re(1.0), re(1.0)])
                .unwrap();
        assert_eq!(inf_norm_induced(&c), 5.0);
        assert_eq!(inf_norm_vec::<f64>(&rv(&[0.0, 0.0])), 0.0);
        assert_eq!(inf_norm_vec(&rv(&[1.0, -3.0, 2.0])), 3.0);
        assert_eq!(inf_norm_vec(&[C::new(3.0, 4.0)]), 5.0);
    }

    #[test]
    fn rejects_non_finite_entries() {
        let r = DenseMatrix::<f64>::from_row_major(1, 1, vec![re(f64::NAN)]);
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn f32_solve() {
        let m = DenseMatrix::<f32>::from_real_rows(&[vec![4.0, 1.0], vec![1.0, 3.0]]);
        let f = lu_factor(&m).unwrap();
        let x = f.solve(&[re(1.0f32), re(2.0)]).unwrap();
        assert!((x[0].re - 1.0 / 11.0).abs() < 1e-6);
        assert!((x[1].re - 7.0 / 11.0).abs() < 1e-6);
    }
}
