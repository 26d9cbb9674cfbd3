//! Dense symmetric eigendecomposition via cyclic Jacobi rotations.
//!
//! The matrices here are tiny (n_dim x n_dim, n_dim = 3 for qubits), and the policy
//! needs a deterministic eigenvector convention: eigenvalues ascending, ties kept in
//! the order the sweep produced them, and a diagonal input (in particular V0 =
//! lambda0 I) must come back with the canonical basis as eigenvectors. Jacobi gives all
//! of that by construction, since a diagonal matrix triggers no rotations at all.

use crate::error::{Error, Result};

/// Eigendecomposition of a symmetric matrix: `values` ascending, `vectors` column-major
/// (column j is the eigenvector of values[j]).
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub n: usize,
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
}

impl SymEigen {
    pub fn vector(&self, j: usize) -> &[f64] {
        &self.vectors[j * self.n..(j + 1) * self.n]
    }
}

const MAX_SWEEPS: usize = 64;

/// Cyclic Jacobi on a symmetric matrix in row-major order.
pub fn sym_eigen(n: usize, mat: &[f64]) -> Result<SymEigen> {
    if mat.len() != n * n {
        return Err(Error::DimensionMismatch {
            what: "sym_eigen matrix length",
            expected: n * n,
            got: mat.len(),
        });
    }
    let mut a = mat.to_vec();
    // accumulate rotations; columns of q become the eigenvectors
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        q[i * n + i] = 1.0;
    }

    let fro2: f64 = a.iter().map(|x| x * x).sum();
    let tol = 1e-30 * fro2.max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        let off2: f64 = (0..n)
            .flat_map(|p| (p + 1..n).map(move |r| (p, r)))
            .map(|(p, r)| {
                let x = a[p * n + r];
                2.0 * x * x
            })
            .sum();
        if off2 <= tol {
            break;
        }
        for p in 0..n {
            for r in p + 1..n {
                let apr = a[p * n + r];
                if apr == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let arr = a[r * n + r];
                let tau = (arr - app) / (2.0 * apr);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // A <- J^T A J on rows/columns p, r
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akr = a[k * n + r];
                    a[k * n + p] = c * akp - s * akr;
                    a[k * n + r] = s * akp + c * akr;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let ark = a[r * n + k];
                    a[p * n + k] = c * apk - s * ark;
                    a[r * n + k] = s * apk + c * ark;
                }
                // symmetry restoration for the rotated 2x2 block
                a[p * n + r] = 0.0;
                a[r * n + p] = 0.0;
                for k in 0..n {
                    let qkp = q[p * n + k];
                    let qkr = q[r * n + k];
                    q[p * n + k] = c * qkp - s * qkr;
                    q[r * n + k] = s * qkp + c * qkr;
                }
            }
        }
    }

    // ascending sort, stable in the original index for degenerate spectra
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[i * n + i]
            .partial_cmp(&a[j * n + j])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let values: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (slot, &src) in order.iter().enumerate() {
        for k in 0..n {
            // q holds eigenvectors in its rows (accumulated transposed); emit column-major
            vectors[slot * n + k] = q[src * n + k];
        }
    }
    Ok(SymEigen { n, values, vectors })
}

pub fn mat_vec(n: usize, mat: &[f64], x: &[f64]) -> Vec<f64> {
    (0..n)
        .map(|i| (0..n).map(|j| mat[i * n + j] * x[j]).sum())
        .collect()
}
