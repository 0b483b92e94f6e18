//! Small dense matrix helpers for observed-information work.
//!
//! The parameter vectors here have at most eight entries, so plain
//! `Vec<Vec<f64>>` matrices with textbook algorithms are entirely adequate.

use crate::error::{Error, Result};

pub type Matrix = Vec<Vec<f64>>;

/// Identity-seeded Gauss–Jordan inverse with partial pivoting.
pub fn invert(m: &Matrix) -> Option<Matrix> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.iter().map(|r| {
        let mut row = r.clone();
        row.resize(n, 0.0);
        row
    }).collect();
    let mut inv: Matrix = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for col in 0..n {
        let pivot_row =
            (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if !(a[pivot_row][col].abs() >= 1e-300) {
            return None;
        }
        a.swap(col, pivot_row);
        inv.swap(col, pivot_row);
        let p = a[col][col];
        for j in 0..n {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for i in 0..n {
            if i != col {
                let factor = a[i][col];
                if factor != 0.0 {
                    for j in 0..n {
                        a[i][j] -= factor * a[col][j];
                        inv[i][j] -= factor * inv[col][j];
                    }
                }
            }
        }
    }
    Some(inv)
}

/// Eigenvalues of a symmetric matrix by the cyclic Jacobi method.
pub fn sym_eigenvalues(m: &Matrix) -> Vec<f64> {
    let n = m.len();
    let mut a = m.clone();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i][j] * a[i][j];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// Invert a symmetric positive-definite-ish matrix, refusing when its
/// spectral condition number exceeds `max_condition` or any entry is
/// non-finite.
pub fn invert_conditioned(m: &Matrix, max_condition: f64) -> Result<Matrix> {
    if m.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::SingularInformation(f64::INFINITY));
    }
    let eig = sym_eigenvalues(m);
    let max_abs = eig.iter().fold(0.0f64, |a, &e| a.max(e.abs()));
    let min_abs = eig.iter().fold(f64::INFINITY, |a, &e| a.min(e.abs()));
    let cond = if min_abs > 0.0 { max_abs / min_abs } else { f64::INFINITY };
    if !cond.is_finite() || cond > max_condition {
        return Err(Error::SingularInformation(cond));
    }
    invert(m).ok_or(Error::SingularInformation(cond))
}

/// Quadratic form g' M g.
pub fn quadratic_form(m: &Matrix, g: &[f64]) -> f64 {
    let n = g.len();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += g[i] * m[i][j] * g[j];
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn inverts_spd_matrix() {
        let m = vec![vec![4.0, 1.0, 0.5], vec![1.0, 3.0, 0.2], vec![0.5, 0.2, 2.0]];
        let inv = invert(&m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let prod: f64 = (0..3).map(|k| m[i][k] * inv[k][j]).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(prod, expected, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn eigenvalues_of_diagonal() {
        let m = vec![vec![2.0, 0.0], vec![0.0, 5.0]];
        let mut e = sym_eigenvalues(&m);
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_abs_diff_eq!(e[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e[1], 5.0, epsilon = 1e-12);
    }

    #[test]
    fn conditioned_inverse_rejects_singular() {
        let m = vec![vec![1.0, 1.0], vec![1.0, 1.0 + 1e-15]];
        assert!(matches!(
            invert_conditioned(&m, 1e12),
            Err(Error::SingularInformation(_))
        ));
    }
}
