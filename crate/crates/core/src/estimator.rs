//! Weighted least squares machinery shared by the bandit policy.
//!
//! `DesignMatrix` tracks V = lambda0 I + sum_s w_s a_s a_s^T together with its inverse,
//! updated by Sherman-Morrison so solves stay O(n^2) per step. `EstimatorBank` keeps k
//! right-hand sides over one shared design, one per independent reward stream, and
//! selects among the k solutions by medians of pairwise V-distances.

use crate::error::{Error, Result};
use crate::linalg::{self, SymEigen};

/// Regularized weighted design matrix with a maintained inverse and cached spectrum.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    n: usize,
    mat: Vec<f64>,
    inv: Vec<f64>,
    eigen: Option<SymEigen>,
}

impl DesignMatrix {
    pub fn new(n: usize, lambda0: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::config("design matrix needs n >= 1"));
        }
        if !lambda0.is_finite() || lambda0 <= 0.0 {
            return Err(Error::OutOfRange {
                what: "lambda0",
                value: lambda0,
                lo: f64::MIN_POSITIVE,
                hi: f64::INFINITY,
            });
        }
        let mut mat = vec![0.0; n * n];
        let mut inv = vec![0.0; n * n];
        for i in 0..n {
            mat[i * n + i] = lambda0;
            inv[i * n + i] = 1.0 / lambda0;
        }
        Ok(DesignMatrix {
            n,
            mat,
            inv,
            eigen: None,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &[f64] {
        &self.mat
    }

    /// V += weight a a^T, inverse via Sherman-Morrison. Weight must be nonnegative.
    pub fn rank_one_update(&mut self, a: &[f64], weight: f64) -> Result<()> {
        self.check_dim(a)?;
        if !weight.is_finite() || weight < 0.0 {
            return Err(Error::OutOfRange {
                what: "update weight",
                value: weight,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                self.mat[i * n + j] += weight * a[i] * a[j];
            }
        }
        let u = linalg::mat_vec(n, &self.inv, a);
        let denom = 1.0 + weight * dot(a, &u);
        let scale = weight / denom;
        for i in 0..n {
            for j in 0..n {
                self.inv[i * n + j] -= scale * u[i] * u[j];
            }
        }
        self.eigen = None;
        Ok(())
    }

    /// Spectrum of the current V, cached until the next update.
    pub fn eigen(&mut self) -> Result<&SymEigen> {
        if self.eigen.is_none() {
            self.eigen = Some(linalg::sym_eigen(self.n, &self.mat)?);
        }
        Ok(self.eigen.as_ref().unwrap())
    }

    pub fn lambda_min(&mut self) -> Result<f64> {
        Ok(self.eigen()?.values[0])
    }

    pub fn lambda_max(&mut self) -> Result<f64> {
        Ok(*self.eigen()?.values.last().unwrap())
    }

    /// V^{-1} rhs from the maintained inverse.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(rhs)?;
        Ok(linalg::mat_vec(self.n, &self.inv, rhs))
    }

    /// V^{-1} rhs from a fresh factorization of V, ignoring the maintained inverse.
    /// Reference path for checking inverse drift.
    pub fn solve_fresh(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(rhs)?;
        let eig = linalg::sym_eigen(self.n, &self.mat)?;
        let n = self.n;
        let mut out = vec![0.0; n];
        for j in 0..n {
            let q = eig.vector(j);
            let c = dot(q, rhs) / eig.values[j];
            for i in 0..n {
                out[i] += c * q[i];
            }
        }
        Ok(out)
    }

    /// x^T V x.
    pub fn quadratic_form(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let vx = linalg::mat_vec(self.n, &self.mat, x);
        Ok(dot(x, &vx))
    }

    /// sqrt((x - y)^T V (x - y)), the metric used for median selection.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        Ok(self.quadratic_form(&diff)?.max(0.0).sqrt())
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch {
                what: "design matrix operand",
                expected: self.n,
                got: v.len(),
            });
        }
        Ok(())
    }
}

/// k parallel least-squares estimators over one shared design.
#[derive(Debug, Clone)]
pub struct EstimatorBank {
    design: DesignMatrix,
    b: Vec<Vec<f64>>,
}

impl EstimatorBank {
    pub fn new(n: usize, k: usize, lambda0: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::config("estimator bank needs k >= 1"));
        }
        Ok(EstimatorBank {
            design: DesignMatrix::new(n, lambda0)?,
            b: vec![vec![0.0; n]; k],
        })
    }

    pub fn k(&self) -> usize {
        self.b.len()
    }

    pub fn design(&self) -> &DesignMatrix {
        &self.design
    }

    pub fn design_mut(&mut self) -> &mut DesignMatrix {
        &mut self.design
    }

    /// One shared action with one reward per estimator: b_j += w r_j a for each j,
    /// V += w a a^T once.
    pub fn observe(&mut self, a: &[f64], rewards: &[f64], weight: f64) -> Result<()> {
        if rewards.len() != self.b.len() {
            return Err(Error::DimensionMismatch {
                what: "rewards per estimator",
                expected: self.b.len(),
                got: rewards.len(),
            });
        }
        self.design.rank_one_update(a, weight)?;
        for (bj, &r) in self.b.iter_mut().zip(rewards) {
            for (bi, &ai) in bj.iter_mut().zip(a) {
                *bi += weight * r * ai;
            }
        }
        Ok(())
    }

    /// theta_j = V^{-1} b_j for every estimator.
    pub fn estimates(&self) -> Result<Vec<Vec<f64>>> {
        self.b.iter().map(|bj| self.design.solve(bj)).collect()
    }

    /// Median-of-means selection: for each estimator take the lower median of its
    /// V-distances to the others, then pick the smallest (lowest index on ties).
    pub fn mom_select(&self) -> Result<(usize, Vec<f64>)> {
        let est = self.estimates()?;
        let k = est.len();
        if k == 1 {
            return Ok((0, est.into_iter().next().unwrap()));
        }
        let mut dist = vec![0.0; k * k];
        for i in 0..k {
            for j in (i + 1)..k {
                let d = self.design.distance(&est[i], &est[j])?;
                dist[i * k + j] = d;
                dist[j * k + i] = d;
            }
        }
        let mut best = 0usize;
        let mut best_med = f64::INFINITY;
        let mut others = Vec::with_capacity(k - 1);
        for j in 0..k {
            others.clear();
            others.extend((0..k).filter(|&i| i != j).map(|i| dist[j * k + i]));
            others.sort_by(|a, b| a.total_cmp(b));
            let med = others[(others.len() - 1) / 2];
            if med < best_med {
                best_med = med;
                best = j;
            }
        }
        Ok((best, est.into_iter().nth(best).unwrap()))
    }
}

/// Confidence radius constant: beta(n, lambda0) = 9 (sqrt(9 n) + lambda0)^2.
pub fn beta(n_dim: usize, lambda0: f64) -> f64 {
    let s = (9.0 * n_dim as f64).sqrt() + lambda0;
    9.0 * s * s
}

/// Whether theta lies in the ellipsoid of V-radius sqrt(beta) around the estimate.
pub fn in_confidence(
    design: &DesignMatrix,
    estimate: &[f64],
    theta: &[f64],
    beta: f64,
) -> Result<bool> {
    let diff: Vec<f64> = estimate.iter().zip(theta).map(|(a, b)| a - b).collect();
    Ok(design.quadratic_form(&diff)? <= beta)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
