//! Conjugate gradient over an abstract inner-product space.
//!
//! The same core drives two solves: volume vectors with the standard complex
//! inner product, and Hermitian matrices with `⟨A,B⟩ = Re tr(AᴴB)`. For a
//! self-adjoint positive semidefinite operator all CG scalars are real, so
//! the trait only exposes the real part of the inner product.
//!
//! Starting from zero keeps every iterate inside the Krylov space of the
//! right-hand side; singular directions of the operator are never populated,
//! and capping the iteration count inverts only the dominant part of the
//! spectrum. That truncation is the sole regularization used here.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Element of an inner-product space usable by [`cg_solve`].
pub trait CgVector: Clone {
    /// Real part of the inner product with `other`.
    fn dot_re(&self, other: &Self) -> f64;
    /// `self += alpha * other`.
    fn scaled_add(&mut self, alpha: f64, other: &Self);
    /// `self *= alpha`.
    fn scale(&mut self, alpha: f64);
    fn zeros_like(&self) -> Self;
}

impl CgVector for Vec<f64> {
    fn dot_re(&self, other: &Self) -> f64 {
        self.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    fn scaled_add(&mut self, alpha: f64, other: &Self) {
        for (a, b) in self.iter_mut().zip(other) {
            *a += alpha * b;
        }
    }

    fn scale(&mut self, alpha: f64) {
        for a in self.iter_mut() {
            *a *= alpha;
        }
    }

    fn zeros_like(&self) -> Self {
        vec![0.0; self.len()]
    }
}

/// Solver knobs. `rel_tol = 0` disables the residual test, making the
/// iteration cap the only stop.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CgOptions {
    pub max_iters: usize,
    pub rel_tol: f64,
    pub record_residuals: bool,
}

impl CgOptions {
    /// Defaults for the mean solve: the problem is well conditioned, so run
    /// to a tight residual with a generous cap.
    pub fn mean_default() -> Self {
        CgOptions { max_iters: 200, rel_tol: 1e-8, record_residuals: true }
    }

    /// Defaults for the covariance solve: ten iterations, no residual stop.
    pub fn covariance_default() -> Self {
        CgOptions { max_iters: 10, rel_tol: 0.0, record_residuals: true }
    }

    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::config("max_iters must be at least 1".to_string()));
        }
        if self.rel_tol < 0.0 || !self.rel_tol.is_finite() {
            return Err(Error::config(format!("rel_tol must be finite and >= 0, got {}", self.rel_tol)));
        }
        Ok(())
    }
}

/// What stopped the iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Tolerance,
    IterationCap,
}

/// Iteration trace of one CG run.
///
/// Residuals are relative to `‖rhs‖`. They are not asserted monotone:
/// Euclidean-norm CG residuals may oscillate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CgReport {
    pub iterations: usize,
    pub residuals: Vec<f64>,
    pub terminated_by: Termination,
}

/// Standard conjugate gradient from the zero initial guess.
///
/// `apply` must be linear, self-adjoint, and positive semidefinite over the
/// space. Stops at `rel_tol` on `‖residual‖/‖rhs‖` or at `max_iters`,
/// whichever comes first. Non-finite values abort with a numerical error
/// naming the iteration.
pub fn cg_solve<V, F>(mut apply: F, rhs: &V, opts: &CgOptions) -> Result<(V, CgReport)>
where
    V: CgVector,
    F: FnMut(&V) -> V,
{
    opts.validate()?;
    let norm_b = rhs.dot_re(rhs).sqrt();
    if !norm_b.is_finite() {
        return Err(Error::numerical("right-hand side is not finite".to_string()));
    }
    let mut x = rhs.zeros_like();
    if norm_b == 0.0 {
        return Ok((x, CgReport { iterations: 0, residuals: vec![], terminated_by: Termination::Tolerance }));
    }

    let mut r = rhs.clone();
    let mut p = r.clone();
    let mut rho = norm_b * norm_b;
    let mut residuals = Vec::new();
    let mut iterations = 0;
    let mut terminated_by = Termination::IterationCap;

    for iter in 1..=opts.max_iters {
        let q = apply(&p);
        let pq = p.dot_re(&q);
        if !pq.is_finite() {
            return Err(Error::numerical(format!("non-finite curvature at iteration {iter}")));
        }
        if pq <= 0.0 {
            return Err(Error::numerical(format!(
                "operator curvature {pq:.3e} is not positive at iteration {iter}; \
                 the operator is not PSD on the Krylov space"
            )));
        }
        let alpha = rho / pq;
        x.scaled_add(alpha, &p);
        r.scaled_add(-alpha, &q);
        let rho_new = r.dot_re(&r);
        if !rho_new.is_finite() {
            return Err(Error::numerical(format!("non-finite residual at iteration {iter}")));
        }
        let rel = rho_new.sqrt() / norm_b;
        if opts.record_residuals {
            residuals.push(rel);
        }
        iterations = iter;
        if rel <= opts.rel_tol {
            terminated_by = Termination::Tolerance;
            break;
        }
        let beta = rho_new / rho;
        p.scale(beta);
        p.scaled_add(1.0, &r);
        rho = rho_new;
    }

    Ok((x, CgReport { iterations, residuals, terminated_by }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn matvec(a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
        a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
    }

    fn random_spd(dim: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
        let g: Vec<Vec<f64>> =
            (0..dim).map(|_| (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect()).collect();
        // A = GᵀG + I keeps the conditioning tame
        let mut a = vec![vec![0.0; dim]; dim];
        for i in 0..dim {
            for j in 0..dim {
                let mut s = 0.0;
                for k in 0..dim {
                    s += g[k][i] * g[k][j];
                }
                a[i][j] = s + if i == j { 1.0 } else { 0.0 };
            }
        }
        a
    }

    #[test]
    fn identity_converges_in_one_iteration() {
        let rhs: Vec<f64> = vec![3.0, -1.0, 2.0, 0.5];
        let (x, report) = cg_solve(|v: &Vec<f64>| v.clone(), &rhs, &CgOptions {
            max_iters: 50,
            rel_tol: 1e-12,
            record_residuals: true,
        })
        .unwrap();
        assert_eq!(report.iterations, 1);
        assert_eq!(report.terminated_by, Termination::Tolerance);
        for (a, b) in x.iter().zip(&rhs) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_rhs_returns_zero_without_iterating() {
        let rhs = vec![0.0; 6];
        let (x, report) = cg_solve(|v: &Vec<f64>| v.clone(), &rhs, &CgOptions {
            max_iters: 50,
            rel_tol: 1e-12,
            record_residuals: true,
        })
        .unwrap();
        assert_eq!(report.iterations, 0);
        assert!(x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn spd_system_matches_dense_solve() {
        let dim = 30;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let a = random_spd(dim, &mut rng);
        let b: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect();

        // dense oracle via nalgebra LU
        let na = nalgebra::DMatrix::from_fn(dim, dim, |i, j| a[i][j]);
        let nb = nalgebra::DVector::from_column_slice(&b);
        let exact = na.lu().solve(&nb).unwrap();

        let (x, report) = cg_solve(|v: &Vec<f64>| matvec(&a, v), &b, &CgOptions {
            max_iters: dim,
            rel_tol: 1e-12,
            record_residuals: true,
        })
        .unwrap();
        assert!(report.iterations <= dim);
        for i in 0..dim {
            assert!((x[i] - exact[i]).abs() < 1e-8, "component {i}: {} vs {}", x[i], exact[i]);
        }
    }

    #[test]
    fn iteration_cap_is_honored() {
        let dim = 30;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_spd(dim, &mut rng);
        let b: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect();
        let (_, report) = cg_solve(|v: &Vec<f64>| matvec(&a, v), &b, &CgOptions {
            max_iters: 3,
            rel_tol: 0.0,
            record_residuals: true,
        })
        .unwrap();
        assert_eq!(report.iterations, 3);
        assert_eq!(report.terminated_by, Termination::IterationCap);
        assert_eq!(report.residuals.len(), 3);
    }

    #[test]
    fn iterates_stay_in_the_krylov_space() {
        let dim = 12;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_spd(dim, &mut rng);
        let b: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect();

        for k in 1..=5usize {
            let (x, _) = cg_solve(|v: &Vec<f64>| matvec(&a, v), &b, &CgOptions {
                max_iters: k,
                rel_tol: 0.0,
                record_residuals: false,
            })
            .unwrap();
            // orthonormal basis of span{b, Ab, ..., A^{k-1}b}
            let mut basis: Vec<Vec<f64>> = Vec::new();
            let mut v = b.clone();
            for _ in 0..k {
                let mut w = v.clone();
                for u in &basis {
                    let c = w.dot_re(u);
                    w.scaled_add(-c, u);
                }
                let n = w.dot_re(&w).sqrt();
                if n > 1e-12 {
                    w.scale(1.0 / n);
                    basis.push(w);
                }
                v = matvec(&a, &v);
            }
            let mut residual = x.clone();
            for u in &basis {
                let c = x.dot_re(u);
                residual.scaled_add(-c, u);
            }
            let out = residual.dot_re(&residual).sqrt();
            let xn = x.dot_re(&x).sqrt();
            assert!(out <= 1e-10 * xn.max(1.0), "k={k}: out-of-space component {out}");
        }
    }

    #[test]
    fn invalid_options_rejected() {
        let rhs = vec![1.0];
        let opts = CgOptions { max_iters: 0, rel_tol: 1e-8, record_residuals: false };
        assert!(cg_solve(|v: &Vec<f64>| v.clone(), &rhs, &opts).is_err());
    }
}
