//! Tiny dense square matrices and their singular values.
//!
//! Singular values come from a cyclic Jacobi eigen-decomposition of `AᵗA`.
//! The matrices handled here are linearity matrices of dimension at most a
//! few dozen, where Jacobi is accurate and deterministic.

use std::fmt;

use serde::Serialize;

use crate::error::{invalid, Result};

/// Maximum number of cyclic Jacobi sweeps before giving up on convergence.
const MAX_SWEEPS: usize = 100;

/// Dense `k×k` real matrix, row-major, finite entries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SquareMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl SquareMatrix {
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return invalid("matrix dimension must be at least 1");
        }
        if entries.len() != dim * dim {
            return invalid(format!("expected {} entries for a {dim}x{dim} matrix, got {}", dim * dim, entries.len()));
        }
        if let Some(bad) = entries.iter().find(|v| !v.is_finite()) {
            return invalid(format!("matrix entry {bad} is not finite"));
        }
        Ok(Self { dim, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return invalid("matrix rows must all have length equal to the row count");
        }
        Self::new(dim, rows.concat())
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            m.entries[i * dim + i] = 1.0;
        }
        Ok(m)
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::new(dim, vec![0.0; dim * dim])
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        let dim = diag.len();
        let mut m = Self::zeros(dim)?;
        for (i, &d) in diag.iter().enumerate() {
            m.entries[i * dim + i] = d;
        }
        if !m.entries.iter().all(|v| v.is_finite()) {
            return invalid("diagonal entries must be finite");
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.dim + col]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.dim, self.entries.iter().map(|v| v * c).collect())
    }

    pub fn transpose(&self) -> Self {
        let k = self.dim;
        let mut out = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                out[j * k + i] = self.entries[i * k + j];
            }
        }
        Self { dim: k, entries: out }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return invalid("matrix dimensions differ");
        }
        let k = self.dim;
        let mut out = vec![0.0; k * k];
        for i in 0..k {
            for l in 0..k {
                let a = self.entries[i * k + l];
                if a == 0.0 {
                    continue;
                }
                for j in 0..k {
                    out[i * k + j] += a * other.entries[l * k + j];
                }
            }
        }
        Self::new(k, out)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim {
            return invalid("vector length does not match matrix dimension");
        }
        Ok(self.entries.chunks(self.dim).map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect())
    }

    /// `AᵗA`.
    pub fn gram(&self) -> Self {
        let k = self.dim;
        let mut out = vec![0.0; k * k];
        for i in 0..k {
            for j in i..k {
                let s: f64 = (0..k).map(|r| self.entries[r * k + i] * self.entries[r * k + j]).sum();
                out[i * k + j] = s;
                out[j * k + i] = s;
            }
        }
        Self { dim: k, entries: out }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn determinant(&self) -> f64 {
        let k = self.dim;
        let mut a = self.entries.clone();
        let mut det = 1.0;
        for col in 0..k {
            let pivot = (col..k).max_by(|&r, &s| a[r * k + col].abs().total_cmp(&a[s * k + col].abs())).unwrap_or(col);
            if a[pivot * k + col] == 0.0 {
                return 0.0;
            }
            if pivot != col {
                for j in 0..k {
                    a.swap(col * k + j, pivot * k + j);
                }
                det = -det;
            }
            let p = a[col * k + col];
            det *= p;
            for r in col + 1..k {
                let factor = a[r * k + col] / p;
                if factor != 0.0 {
                    for j in col..k {
                        a[r * k + j] -= factor * a[col * k + j];
                    }
                }
            }
        }
        det
    }

    /// Eigenvalues of a symmetric matrix in ascending order.
    ///
    /// Only the upper triangle is read. Sweeps stop once the off-diagonal
    /// Frobenius norm falls below `1e-14 · ‖A‖_F`.
    pub fn symmetric_eigenvalues(&self) -> Vec<f64> {
        let k = self.dim;
        let mut a = self.entries.clone();
        for i in 0..k {
            for j in 0..i {
                a[i * k + j] = a[j * k + i];
            }
        }
        let tol = 1e-14 * self.frobenius_norm();
        for _ in 0..MAX_SWEEPS {
            let off: f64 = (0..k)
                .flat_map(|i| (0..k).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[i * k + j] * a[i * k + j])
                .sum::<f64>()
                .sqrt();
            if off <= tol {
                break;
            }
            for p in 0..k {
                for q in p + 1..k {
                    let apq = a[p * k + q];
                    if apq == 0.0 {
                        continue;
                    }
                    let app = a[p * k + p];
                    let aqq = a[q * k + q];
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for r in 0..k {
                        let arp = a[r * k + p];
                        let arq = a[r * k + q];
                        a[r * k + p] = c * arp - s * arq;
                        a[r * k + q] = s * arp + c * arq;
                    }
                    for r in 0..k {
                        let apr = a[p * k + r];
                        let aqr = a[q * k + r];
                        a[p * k + r] = c * apr - s * aqr;
                        a[q * k + r] = s * apr + c * aqr;
                    }
                }
            }
        }
        let mut eig: Vec<f64> = (0..k).map(|i| a[i * k + i]).collect();
        eig.sort_by(f64::total_cmp);
        eig
    }

    /// Singular values in ascending order.
    pub fn singular_values(&self) -> Vec<f64> {
        self.gram().symmetric_eigenvalues().into_iter().map(|e| e.max(0.0).sqrt()).collect()
    }
}

impl fmt::Display for SquareMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, row) in self.entries.chunks(self.dim).enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
            write!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

/// Smallest singular value `σ₁(A)`.
pub fn smallest_singular_value(a: &SquareMatrix) -> f64 {
    a.singular_values()[0]
}

/// `sqrt(det(AᵗA) / trace(AᵗA)^(k-1))`, a lower bound on `σ₁(A)`.
pub fn sigma1_lower_bound(a: &SquareMatrix) -> Result<f64> {
    let trace = a.entries.iter().map(|v| v * v).sum::<f64>();
    if trace == 0.0 {
        return invalid("the zero matrix has no singular value lower bound (trace is zero)");
    }
    let det = a.determinant();
    let k = a.dim as i32;
    // work in logs so that tiny matrices do not underflow
    if det == 0.0 {
        return Ok(0.0);
    }
    let ln = (2.0 * det.abs().ln() - f64::from(k - 1) * trace.ln()) / 2.0;
    Ok(ln.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_and_diagonal() {
        let i3 = SquareMatrix::identity(3).unwrap();
        assert_relative_eq!(smallest_singular_value(&i3), 1.0, max_relative = 1e-12);
        assert_relative_eq!(sigma1_lower_bound(&i3).unwrap(), 1.0 / 3.0, max_relative = 1e-12);
        let d = SquareMatrix::diagonal(&[2.0, 5.0]).unwrap();
        assert_relative_eq!(smallest_singular_value(&d), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn one_by_one_lower_bound_is_abs() {
        for c in [-3.5, 0.25, 7.0] {
            let m = SquareMatrix::new(1, vec![c]).unwrap();
            assert_relative_eq!(sigma1_lower_bound(&m).unwrap(), c.abs(), max_relative = 1e-14);
            assert_relative_eq!(smallest_singular_value(&m), c.abs(), max_relative = 1e-14);
        }
    }

    #[test]
    fn reference_svd_value() {
        // reference SVD of [[5/3,-1,-1],[0,1,0],[0,0,1]] (LAPACK via numpy,
        // and sqrt of the smallest char-poly root of AᵗA)
        let m =
            SquareMatrix::from_rows(&[vec![5.0 / 3.0, -1.0, -1.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        assert_relative_eq!(smallest_singular_value(&m), 0.727_494_896_385_664_5, max_relative = 1e-10);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SquareMatrix::new(2, vec![1.0, f64::NAN, 0.0, 1.0]).is_err());
        assert!(SquareMatrix::new(2, vec![1.0, f64::INFINITY, 0.0, 1.0]).is_err());
        assert!(SquareMatrix::new(0, vec![]).is_err());
        assert!(SquareMatrix::new(2, vec![1.0]).is_err());
        let zero = SquareMatrix::zeros(3).unwrap();
        assert!(matches!(sigma1_lower_bound(&zero), Err(crate::Error::InvalidInput(_))));
    }

    #[test]
    fn determinant_matches_cofactor_expansion() {
        let m = SquareMatrix::from_rows(&[vec![2.0, -1.0, 0.5], vec![0.3, 4.0, 1.0], vec![-2.0, 0.0, 1.5]]).unwrap();
        let r = m.rows();
        let cof = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
        assert_relative_eq!(m.determinant(), cof, max_relative = 1e-12);
    }

    #[test]
    fn eigenvalues_of_known_symmetric_matrix() {
        let m = SquareMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let e = m.symmetric_eigenvalues();
        assert_relative_eq!(e[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(e[1], 3.0, max_relative = 1e-12);
    }
}
