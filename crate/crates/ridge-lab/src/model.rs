//! Ridge regression and risk evaluation.
//!
//! The estimator minimizes the penalized empirical objective
//! (1/n)Σ(Y_i − ⟨θ, X_i⟩)² + λ‖θ‖², which in closed form is
//! θ̂_λ = (Σ̂_n + λ)^{-1}·(1/n)ΣY_iX_i with Σ̂_n the empirical covariance.
//! Both the primal d×d form and the dual n×n Gram form are exposed; they
//! agree algebraically and the dual is cheaper when n < d. There is no
//! intercept and no centering; callers wanting an intercept append a
//! constant feature.

use crate::error::{Error, Result};
use crate::linalg::{self, SymMatrix};
use crate::synth::Problem;

/// An i.i.d. regression sample with its generating seed, so any derived
/// quantity is reproducible from (problem, n, seed) alone.
#[derive(Debug, Clone)]
pub struct Dataset {
    d: usize,
    n: usize,
    /// Row-major n×d; row i is the covariate vector X_i.
    xs: Vec<f64>,
    ys: Vec<f64>,
    seed: u64,
}

impl Dataset {
    pub fn new(d: usize, xs: Vec<f64>, ys: Vec<f64>, seed: u64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        let n = ys.len();
        if n == 0 {
            return Err(Error::InvalidInput("dataset must contain at least one observation".into()));
        }
        if xs.len() != n * d {
            return Err(Error::DimensionMismatch { expected: n * d, got: xs.len() });
        }
        if !xs.iter().chain(&ys).all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("dataset entries must be finite".into()));
        }
        Ok(Self { d, n, xs, ys, seed })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Covariate vector X_i.
    pub fn x(&self, i: usize) -> &[f64] {
        &self.xs[i * self.d..(i + 1) * self.d]
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// A fitted ridge estimator together with the inputs that determine it.
#[derive(Debug, Clone)]
pub struct RidgeModel {
    pub theta_hat: Vec<f64>,
    pub lambda: f64,
    /// The empirical covariance Σ̂_n of the training sample.
    pub sigma_hat_n: SymMatrix,
}

/// Empirical covariance Σ̂_n = (1/n)Σ X_iX_iᵀ.
pub fn empirical_covariance(data: &Dataset) -> SymMatrix {
    let d = data.dim();
    let mut acc = vec![0.0; d * d];
    for i in 0..data.n() {
        let x = data.x(i);
        for a in 0..d {
            if x[a] == 0.0 {
                continue;
            }
            for b in a..d {
                acc[a * d + b] += x[a] * x[b];
            }
        }
    }
    let inv_n = 1.0 / data.n() as f64;
    for a in 0..d {
        for b in a..d {
            acc[a * d + b] *= inv_n;
            acc[b * d + a] = acc[a * d + b];
        }
    }
    SymMatrix::new(d, acc).expect("finite data gives a finite covariance")
}

/// (1/n)Σ Y_iX_i, the right-hand side of the normal equations.
fn response_moment(data: &Dataset) -> Vec<f64> {
    let d = data.dim();
    let mut b = vec![0.0; d];
    for i in 0..data.n() {
        let y = data.ys()[i];
        for (bj, xj) in b.iter_mut().zip(data.x(i)) {
            *bj += y * xj;
        }
    }
    for bj in &mut b {
        *bj /= data.n() as f64;
    }
    b
}

/// Fits ridge in the primal (d×d) form: θ̂ = (Σ̂_n + λ)^{-1}·(1/n)ΣY_iX_i.
pub fn ridge_fit_primal(data: &Dataset, lambda: f64) -> Result<RidgeModel> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!("ridge requires lambda > 0, got {lambda}")));
    }
    let sigma_hat_n = empirical_covariance(data);
    let b = response_moment(data);
    let theta_hat = linalg::resolvent_apply(&sigma_hat_n, lambda, &b)?;
    Ok(RidgeModel { theta_hat, lambda, sigma_hat_n })
}

/// Fits ridge in the dual (n×n Gram) form: θ̂ = Xᵀ(K + λn)^{-1}y with
/// K_{ij} = ⟨X_i, X_j⟩. Algebraically identical to the primal fit.
pub fn ridge_fit_dual(data: &Dataset, lambda: f64) -> Result<RidgeModel> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!("ridge requires lambda > 0, got {lambda}")));
    }
    let n = data.n();
    let d = data.dim();
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        let xi = data.x(i);
        for j in i..n {
            let g = linalg::dot(xi, data.x(j));
            gram[i * n + j] = g;
            gram[j * n + i] = g;
        }
    }
    let k = SymMatrix::new(n, gram)?;
    let alpha = linalg::resolvent_apply(&k, lambda * n as f64, data.ys())?;
    let mut theta_hat = vec![0.0; d];
    for (i, &ai) in alpha.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        for (t, xj) in theta_hat.iter_mut().zip(data.x(i)) {
            *t += ai * xj;
        }
    }
    Ok(RidgeModel { theta_hat, lambda, sigma_hat_n: empirical_covariance(data) })
}

/// Convenience dispatch: dual form when n < d, primal otherwise.
pub fn ridge_fit(data: &Dataset, lambda: f64) -> Result<RidgeModel> {
    if data.n() < data.dim() {
        ridge_fit_dual(data, lambda)
    } else {
        ridge_fit_primal(data, lambda)
    }
}

/// Excess risk of θ over the optimum θ*: ‖θ − θ*‖²_Σ = ⟨Σ(θ−θ*), θ−θ*⟩.
pub fn excess_risk(theta: &[f64], sigma: &SymMatrix, theta_star: &[f64]) -> Result<f64> {
    if theta.len() != sigma.dim() {
        return Err(Error::DimensionMismatch { expected: sigma.dim(), got: theta.len() });
    }
    if theta_star.len() != sigma.dim() {
        return Err(Error::DimensionMismatch { expected: sigma.dim(), got: theta_star.len() });
    }
    sigma.require_psd("risk covariance")?;
    let diff: Vec<f64> = theta.iter().zip(theta_star).map(|(a, b)| a - b).collect();
    // Rounding can leave a quadratic form of a PSD matrix a hair below zero.
    Ok(sigma.quad_form(&diff).max(0.0))
}

/// Population risk L(θ) = E(Y − ⟨θ, X⟩)². Under the constant-conditional-
/// variance noise model this is ‖θ − θ*‖²_Σ + σ² exactly.
pub fn population_risk(theta: &[f64], problem: &Problem) -> Result<f64> {
    let excess = excess_risk(theta, problem.covariance(), problem.theta_star())?;
    Ok(excess + problem.noise_sd() * problem.noise_sd())
}
