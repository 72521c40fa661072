//! Dense matrices over the rationals with fraction-free (Bareiss)
//! determinants and ranks. Used wherever a sign or rank decision must be
//! exact: principal minors of subgenerators, quadratic-form ranks, and the
//! cross-check of the symbolic denominator.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::ratfun::rational_to_f64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExactError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("index {index} out of range for size {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("entry {0:?} is not finite")]
    NotFinite(f64),
}

/// Row-major dense matrix of `BigRational` entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigRational>,
}

impl QMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMatrix {
            rows,
            cols,
            data: vec![BigRational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = QMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigRational::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<BigRational>>) -> Result<Self, ExactError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(ExactError::Dimension("ragged rows".into()));
        }
        Ok(QMatrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_int_rows(rows: &[&[i64]]) -> Self {
        QMatrix::from_rows(
            rows.iter()
                .map(|r| {
                    r.iter()
                        .map(|&v| BigRational::from_integer(BigInt::from(v)))
                        .collect()
                })
                .collect(),
        )
        .expect("literal rows are rectangular")
    }

    /// Exact lift of a floating-point matrix; every finite `f64` is a rational.
    pub fn from_f64(m: &DMatrix<f64>) -> Result<Self, ExactError> {
        let mut out = QMatrix::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out[(i, j)] =
                    BigRational::from_float(m[(i, j)]).ok_or(ExactError::NotFinite(m[(i, j)]))?;
            }
        }
        Ok(out)
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| rational_to_f64(&self[(i, j)]))
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }

    pub fn transpose(&self) -> QMatrix {
        let mut out = QMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].clone();
            }
        }
        out
    }

    pub fn add(&self, other: &QMatrix) -> Result<QMatrix, ExactError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(ExactError::Dimension(format!(
                "{}x{} + {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &QMatrix) -> Result<QMatrix, ExactError> {
        self.add(&other.scale(&-BigRational::one()))
    }

    pub fn scale(&self, factor: &BigRational) -> QMatrix {
        QMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn mul(&self, other: &QMatrix) -> Result<QMatrix, ExactError> {
        if self.cols != other.rows {
            return Err(ExactError::Dimension(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = QMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let prod = a * &other[(k, j)];
                    out[(i, j)] += prod;
                }
            }
        }
        Ok(out)
    }

    /// Principal submatrix retaining the given row/column indices.
    pub fn principal_submatrix(&self, subset: &[usize]) -> Result<QMatrix, ExactError> {
        for &i in subset {
            if i >= self.rows.min(self.cols) {
                return Err(ExactError::IndexOutOfRange {
                    index: i,
                    size: self.rows.min(self.cols),
                });
            }
        }
        let k = subset.len();
        let mut out = QMatrix::zeros(k, k);
        for (a, &i) in subset.iter().enumerate() {
            for (b, &j) in subset.iter().enumerate() {
                out[(a, b)] = self[(i, j)].clone();
            }
        }
        Ok(out)
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> Result<BigRational, ExactError> {
        if !self.is_square() {
            return Err(ExactError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        if n == 0 {
            // Determinant of the empty matrix is 1 by convention.
            return Ok(BigRational::one());
        }
        let (mut m, denom) = self.cleared();
        let mut sign = 1i32;
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if m[k][k].is_zero() {
                match (k + 1..n).find(|&r| !m[r][k].is_zero()) {
                    Some(r) => {
                        m.swap(k, r);
                        sign = -sign;
                    }
                    None => return Ok(BigRational::zero()),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                    m[i][j] = num / &prev;
                }
                m[i][k] = BigInt::zero();
            }
            prev = m[k][k].clone();
        }
        let det_int = BigRational::from_integer(m[n - 1][n - 1].clone() * BigInt::from(sign));
        Ok(det_int / denom)
    }

    /// Exact rank by fraction-free elimination with column pivot skipping.
    pub fn rank(&self) -> usize {
        let (mut m, _) = self.cleared();
        let rows = self.rows;
        let cols = self.cols;
        let mut rank = 0;
        let mut prev = BigInt::one();
        for col in 0..cols {
            let Some(pivot) = (rank..rows).find(|&r| !m[r][col].is_zero()) else {
                continue;
            };
            m.swap(rank, pivot);
            for i in rank + 1..rows {
                for j in col + 1..cols {
                    let num = &m[i][j] * &m[rank][col] - &m[i][col] * &m[rank][j];
                    m[i][j] = num / &prev;
                }
                m[i][col] = BigInt::zero();
            }
            prev = m[rank][col].clone();
            rank += 1;
            if rank == rows {
                break;
            }
        }
        rank
    }

    /// Clears denominators row by row: returns the integer matrix and the
    /// product of the row scalings (so `det(self) = det(int) / denom`).
    fn cleared(&self) -> (Vec<Vec<BigInt>>, BigRational) {
        let mut denom = BigRational::one();
        let mut out = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let mut lcm = BigInt::one();
            for j in 0..self.cols {
                lcm = lcm.lcm(self[(i, j)].denom());
            }
            denom *= BigRational::from_integer(lcm.clone());
            out.push(
                (0..self.cols)
                    .map(|j| {
                        let v = &self[(i, j)];
                        v.numer() * (&lcm / v.denom())
                    })
                    .collect(),
            );
        }
        (out, denom)
    }
}

impl std::ops::Index<(usize, usize)> for QMatrix {
    type Output = BigRational;

    fn index(&self, (i, j): (usize, usize)) -> &BigRational {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for QMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigRational {
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn det_matches_cofactor_expansion() {
        let m = QMatrix::from_int_rows(&[&[1, 2, 2], &[2, 3, 4], &[2, 4, 3]]);
        assert_eq!(m.det().unwrap(), BigRational::from_integer(BigInt::from(1)));
    }

    #[test]
    fn det_empty_matrix_is_one() {
        let m = QMatrix::zeros(0, 0);
        assert_eq!(m.det().unwrap(), BigRational::one());
    }

    #[test]
    fn det_with_rational_entries() {
        let m = QMatrix::from_rows(vec![
            vec![rat(1, 2), rat(1, 3)],
            vec![rat(1, 4), rat(1, 5)],
        ])
        .unwrap();
        // 1/10 - 1/12 = 1/60
        assert_eq!(m.det().unwrap(), rat(1, 60));
    }

    #[test]
    fn det_singular() {
        let m = QMatrix::from_int_rows(&[&[1, 2], &[2, 4]]);
        assert_eq!(m.det().unwrap(), BigRational::zero());
        assert_eq!(m.rank(), 1);
    }

    #[test]
    fn rank_of_rectangular() {
        let m = QMatrix::from_int_rows(&[&[1, 2, 3], &[2, 4, 6]]);
        assert_eq!(m.rank(), 1);
        let m = QMatrix::from_int_rows(&[&[0, 1, 0], &[0, 0, 1]]);
        assert_eq!(m.rank(), 2);
    }

    #[test]
    fn f64_lift_is_exact() {
        let d = DMatrix::from_row_slice(2, 2, &[0.5, 0.25, -1.0, 3.0]);
        let q = QMatrix::from_f64(&d).unwrap();
        assert_eq!(q[(0, 0)], rat(1, 2));
        assert_eq!(q[(0, 1)], rat(1, 4));
        assert_eq!(q.to_f64(), d);
    }

    #[test]
    fn principal_submatrix_and_product() {
        let m = QMatrix::from_int_rows(&[&[3, 9], &[9, 1]]);
        let s = m.principal_submatrix(&[0]).unwrap();
        assert_eq!(s.det().unwrap(), BigRational::from_integer(BigInt::from(3)));
        let i = QMatrix::identity(2);
        assert_eq!(m.mul(&i).unwrap(), m);
    }
}
