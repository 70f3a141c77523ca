//! Closed-form spectral functionals of a covariance operator.
//!
//! Every quantity here is a function of the eigenvalues of Σ and of the
//! coordinates of the target in Σ's eigenbasis, so one cached
//! eigendecomposition serves an entire λ sweep. Eigenvalues inside the
//! PSD gate's rounding band below zero are clamped to 0 throughout.

use crate::error::{Error, Result};
use crate::linalg::{self, SymMatrix};

/// The two terms of the exact risk decomposition at a fixed design:
/// E[𝓔(θ̂_λ) | X] = bias_term + variance_term.
#[derive(Debug, Clone, Copy)]
pub struct Lemma1Terms {
    /// λ²⟨(Σ̂_n+λ)^{-1}Σ(Σ̂_n+λ)^{-1}θ*, θ*⟩.
    pub bias_term: f64,
    /// (σ²/n)·Tr[(Σ̂_n+λ)^{-1}Σ].
    pub variance_term: f64,
}

/// The deterministic excess-risk bound
/// total = (1 + R²/(λn))²·bias_part + (1 + R²/(λn))·variance_part.
#[derive(Debug, Clone, Copy)]
pub struct Theorem1Bound {
    /// 1 + R²/(λn); always greater than 1.
    pub inflation: f64,
    /// λ⟨(Σ+λ)^{-1}Σθ*, θ*⟩, the regularization bias.
    pub bias_part: f64,
    /// σ²·d_λ/n, the noise term.
    pub variance_part: f64,
    pub total: f64,
}

fn validate_lambda(lambda: f64) -> Result<()> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    Ok(())
}

fn validate_vector(sigma: &SymMatrix, v: &[f64]) -> Result<()> {
    if v.len() != sigma.dim() {
        return Err(Error::DimensionMismatch { expected: sigma.dim(), got: v.len() });
    }
    Ok(())
}

/// Effective dimension d_λ = Tr[(Σ+λ)^{-1}Σ] = Σ_i μ_i/(μ_i+λ).
///
/// Lies in [0, min(d, Tr(Σ)/λ)] and decreases strictly in λ whenever
/// Σ ≠ 0.
pub fn effective_dimension(sigma: &SymMatrix, lambda: f64) -> Result<f64> {
    validate_lambda(lambda)?;
    sigma.require_psd("covariance")?;
    Ok(sigma
        .eigenvalues()?
        .iter()
        .map(|&mu| {
            let m = mu.max(0.0);
            m / (m + lambda)
        })
        .sum())
}

/// The regularization bias λ⟨(Σ+λ)^{-1}Σθ*, θ*⟩, equal to the gap
/// inf_θ {L(θ) + λ‖θ‖²} − L(θ*) between the penalized and unpenalized
/// optima. Nonnegative, at most λ‖θ*‖², and nondecreasing in λ.
pub fn bias_functional(sigma: &SymMatrix, lambda: f64, theta_star: &[f64]) -> Result<f64> {
    validate_lambda(lambda)?;
    validate_vector(sigma, theta_star)?;
    sigma.require_psd("covariance")?;
    let e = sigma.eig()?;
    let coeffs = e.to_eigenbasis(theta_star);
    Ok(e.values
        .iter()
        .zip(&coeffs)
        .map(|(&mu, &c)| {
            let m = mu.max(0.0);
            lambda * m * c * c / (m + lambda)
        })
        .sum())
}

/// The penalized population minimizer θ_λ = (Σ+λ)^{-1}Σθ*, the unique
/// minimizer of L(θ) + λ‖θ‖².
pub fn regularized_minimizer(sigma: &SymMatrix, lambda: f64, theta_star: &[f64]) -> Result<Vec<f64>> {
    validate_lambda(lambda)?;
    validate_vector(sigma, theta_star)?;
    sigma.require_psd("covariance")?;
    let e = sigma.eig()?;
    let mut coeffs = e.to_eigenbasis(theta_star);
    for (c, &mu) in coeffs.iter_mut().zip(&e.values) {
        let m = mu.max(0.0);
        *c *= m / (m + lambda);
    }
    Ok(e.from_eigenbasis(&coeffs))
}

/// The excess risk of the penalized minimizer itself:
/// λ²⟨(Σ+λ)^{-2}Σθ*, θ*⟩ = 𝓔(θ_λ). Always at most `bias_functional`,
/// which carries an extra λ‖θ_λ‖².
pub fn population_bias(sigma: &SymMatrix, lambda: f64, theta_star: &[f64]) -> Result<f64> {
    validate_lambda(lambda)?;
    validate_vector(sigma, theta_star)?;
    sigma.require_psd("covariance")?;
    let e = sigma.eig()?;
    let coeffs = e.to_eigenbasis(theta_star);
    Ok(e.values
        .iter()
        .zip(&coeffs)
        .map(|(&mu, &c)| {
            let m = mu.max(0.0);
            let ratio = lambda / (m + lambda);
            ratio * ratio * m * c * c
        })
        .sum())
}

/// The two terms of the fixed-design risk decomposition, evaluated exactly
/// from the empirical covariance of one sample and the population Σ.
pub fn lemma1_terms(
    sigma_hat_n: &SymMatrix,
    sigma: &SymMatrix,
    theta_star: &[f64],
    lambda: f64,
    noise_sd: f64,
    n: usize,
) -> Result<Lemma1Terms> {
    validate_lambda(lambda)?;
    validate_vector(sigma, theta_star)?;
    if sigma_hat_n.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch { expected: sigma.dim(), got: sigma_hat_n.dim() });
    }
    if n == 0 {
        return Err(Error::InvalidInput("sample size must be at least 1".into()));
    }
    if !noise_sd.is_finite() || noise_sd < 0.0 {
        return Err(Error::InvalidInput(format!(
            "noise standard deviation must be nonnegative, got {noise_sd}"
        )));
    }
    sigma.require_psd("population covariance")?;
    let u = linalg::resolvent_apply(sigma_hat_n, lambda, theta_star)?;
    let bias_term = (lambda * lambda * sigma.quad_form(&u)).max(0.0);
    let variance_term =
        noise_sd * noise_sd / n as f64 * sigma_hat_n.trace_resolvent_product(lambda, sigma)?;
    Ok(Lemma1Terms { bias_term, variance_term: variance_term.max(0.0) })
}

/// The deterministic excess-risk bound assembled from the bias functional
/// and the effective dimension.
pub fn theorem1_bound(
    sigma: &SymMatrix,
    theta_star: &[f64],
    lambda: f64,
    n: usize,
    radius: f64,
    noise_sd: f64,
) -> Result<Theorem1Bound> {
    validate_lambda(lambda)?;
    if n == 0 {
        return Err(Error::InvalidInput("sample size must be at least 1".into()));
    }
    if !radius.is_finite() || radius <= 0.0 {
        return Err(Error::Domain(format!("norm bound must be positive, got {radius}")));
    }
    if !noise_sd.is_finite() || noise_sd < 0.0 {
        return Err(Error::InvalidInput(format!(
            "noise standard deviation must be nonnegative, got {noise_sd}"
        )));
    }
    let inflation = 1.0 + radius * radius / (lambda * n as f64);
    let bias_part = bias_functional(sigma, lambda, theta_star)?;
    let variance_part = noise_sd * noise_sd * effective_dimension(sigma, lambda)? / n as f64;
    Ok(Theorem1Bound {
        inflation,
        bias_part,
        variance_part,
        total: inflation * inflation * bias_part + inflation * variance_part,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::excess_risk;
    use crate::rng::SplitMix64;
    use crate::synth::poly_spectrum;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "expected {a} ≈ {b} within {tol}");
    }

    fn random_psd(d: usize, rng: &mut SplitMix64) -> SymMatrix {
        let data = (0..d * d).map(|_| rng.next_gaussian()).collect();
        SymMatrix::new(d, data).unwrap().spectral_map(|mu| mu.abs()).unwrap()
    }

    #[test]
    fn effective_dimension_identity_and_zero() {
        for lambda in [0.1, 1.0, 10.0] {
            let got = effective_dimension(&SymMatrix::identity(6), lambda).unwrap();
            assert_close(got, 6.0 / (1.0 + lambda), 1e-12);
        }
        assert_eq!(effective_dimension(&SymMatrix::zeros(4), 0.5).unwrap(), 0.0);
        assert!(effective_dimension(&SymMatrix::identity(2), 0.0).is_err());
    }

    #[test]
    fn effective_dimension_polynomial_decay() {
        let spectrum = poly_spectrum(200, 2.0).unwrap();
        let sigma = SymMatrix::from_diag(&spectrum).unwrap();
        let lambda = 0.01;
        let got = effective_dimension(&sigma, lambda).unwrap();
        // Direct summation over the raw spectrum, bypassing the matrix path.
        let oracle: f64 = spectrum.iter().map(|&mu| mu / (mu + lambda)).sum();
        assert_close(got, oracle, 1e-12 * oracle);
        // Decay budget: d_λ ≤ 2·Tr(Σ^{1/2})·λ^{-1/2}.
        let budget: f64 = spectrum.iter().map(|&mu| mu.sqrt()).sum();
        assert!(got <= 2.0 * budget / lambda.sqrt());
    }

    #[test]
    fn effective_dimension_monotone_and_bounded() {
        let spectrum = poly_spectrum(30, 2.0).unwrap();
        let sigma = SymMatrix::from_diag(&spectrum).unwrap();
        let trace: f64 = spectrum.iter().sum();
        let mut last = f64::INFINITY;
        for k in -6..=2 {
            let lambda = 10f64.powi(k);
            let d_l = effective_dimension(&sigma, lambda).unwrap();
            assert!(d_l < last);
            assert!(lambda * d_l <= trace * (1.0 + 1e-12));
            last = d_l;
        }
        // Small-λ limit approaches the rank.
        let near_rank = effective_dimension(&sigma, 1e-14).unwrap();
        assert!((near_rank - 30.0).abs() < 1e-8);
    }

    #[test]
    fn bias_functional_identity_covariance() {
        let theta = vec![1.0, -2.0, 2.0];
        let norm_sq = 9.0;
        for lambda in [0.05, 0.5, 5.0] {
            let got = bias_functional(&SymMatrix::identity(3), lambda, &theta).unwrap();
            assert_close(got, lambda * norm_sq / (1.0 + lambda), 1e-12);
        }
        assert_eq!(bias_functional(&SymMatrix::identity(3), 1.0, &[0.0; 3]).unwrap(), 0.0);
    }

    #[test]
    fn bias_functional_bounds_and_monotonicity() {
        let mut rng = SplitMix64::new(61);
        let sigma = random_psd(5, &mut rng);
        let theta: Vec<f64> = (0..5).map(|_| rng.next_gaussian()).collect();
        let theta_norm_sq = linalg::dot(&theta, &theta);
        let sigma_quad = sigma.quad_form(&theta);
        let mut last = 0.0;
        for k in -4..=3 {
            let lambda = 10f64.powi(k);
            let b = bias_functional(&sigma, lambda, &theta).unwrap();
            assert!(b >= 0.0);
            assert!(b <= lambda * theta_norm_sq * (1.0 + 1e-12));
            assert!(b <= sigma_quad * (1.0 + 1e-12));
            assert!(b >= last * (1.0 - 1e-12), "bias decreased in lambda");
            last = b;
        }
    }

    #[test]
    fn bias_functional_equals_penalized_gap() {
        // bias = 𝓔(θ_λ) + λ‖θ_λ‖², the objective gap at the penalized
        // minimizer.
        let mut rng = SplitMix64::new(67);
        for _ in 0..20 {
            let sigma = random_psd(4, &mut rng);
            let theta: Vec<f64> = (0..4).map(|_| rng.next_gaussian()).collect();
            let lambda = 0.3;
            let t_l = regularized_minimizer(&sigma, lambda, &theta).unwrap();
            let gap = excess_risk(&t_l, &sigma, &theta).unwrap() + lambda * linalg::dot(&t_l, &t_l);
            let bias = bias_functional(&sigma, lambda, &theta).unwrap();
            assert_close(bias, gap, 1e-10 * (1.0 + bias.abs()));
        }
    }

    #[test]
    fn regularized_minimizer_basics() {
        let sigma = SymMatrix::identity(4);
        let theta = vec![2.0, -1.0, 0.5, 3.0];
        let lambda = 0.25;
        let t_l = regularized_minimizer(&sigma, lambda, &theta).unwrap();
        for (a, b) in t_l.iter().zip(&theta) {
            assert_close(*a, b / 1.25, 1e-12);
        }
        assert_eq!(regularized_minimizer(&sigma, 1.0, &[0.0; 4]).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn regularized_minimizer_stationarity() {
        let mut rng = SplitMix64::new(71);
        let sigma = random_psd(5, &mut rng);
        let theta: Vec<f64> = (0..5).map(|_| rng.next_gaussian()).collect();
        let lambda = 0.7;
        let t_l = regularized_minimizer(&sigma, lambda, &theta).unwrap();
        let lhs = sigma.add_diag(lambda).matvec(&t_l);
        let rhs = sigma.matvec(&theta);
        let resid: Vec<f64> = lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect();
        assert!(linalg::norm(&resid) <= 1e-9 * linalg::norm(&rhs).max(1.0));
    }

    #[test]
    fn population_bias_closed_forms() {
        let theta = vec![1.0, 1.0];
        let lambda = 0.5;
        let got = population_bias(&SymMatrix::identity(2), lambda, &theta).unwrap();
        assert_close(got, lambda * lambda * 2.0 / (1.5 * 1.5), 1e-12);
        assert_eq!(population_bias(&SymMatrix::identity(2), 1.0, &[0.0; 2]).unwrap(), 0.0);
    }

    #[test]
    fn population_bias_is_risk_of_minimizer_and_below_bias() {
        let mut rng = SplitMix64::new(73);
        for _ in 0..20 {
            let sigma = random_psd(4, &mut rng);
            let theta: Vec<f64> = (0..4).map(|_| rng.next_gaussian()).collect();
            let lambda = 10f64.powf(rng.next_f64() * 3.0 - 2.0);
            let pb = population_bias(&sigma, lambda, &theta).unwrap();
            let t_l = regularized_minimizer(&sigma, lambda, &theta).unwrap();
            let risk = excess_risk(&t_l, &sigma, &theta).unwrap();
            assert_close(pb, risk, 1e-10 * (1.0 + pb.abs()));
            let b = bias_functional(&sigma, lambda, &theta).unwrap();
            assert!(pb <= b * (1.0 + 1e-12));
        }
    }

    #[test]
    fn lemma1_terms_identity_case() {
        let i4 = SymMatrix::identity(4);
        let theta = vec![1.0, 0.0, -1.0, 2.0];
        let lambda = 0.5;
        let terms = lemma1_terms(&i4, &i4, &theta, lambda, 2.0, 10).unwrap();
        let norm_sq = 6.0;
        assert_close(terms.bias_term, lambda * lambda * norm_sq / (1.5 * 1.5), 1e-12);
        assert_close(terms.variance_term, 4.0 * 4.0 / (10.0 * 1.5), 1e-12);
        let silent = lemma1_terms(&i4, &i4, &theta, lambda, 0.0, 10).unwrap();
        assert_eq!(silent.variance_term, 0.0);
    }

    #[test]
    fn lemma1_terms_match_matrix_evaluation() {
        let mut rng = SplitMix64::new(79);
        let hat = random_psd(4, &mut rng);
        let pop = random_psd(4, &mut rng);
        let theta: Vec<f64> = (0..4).map(|_| rng.next_gaussian()).collect();
        let (lambda, noise, n) = (0.4, 1.3, 25);
        let terms = lemma1_terms(&hat, &pop, &theta, lambda, noise, n).unwrap();
        // Bias via the explicit sandwich matrix.
        let sandwich = hat.resolvent_sandwich(lambda, &pop).unwrap();
        let bias = lambda * lambda * sandwich.quad_form(&theta);
        assert_close(terms.bias_term, bias, 1e-10 * (1.0 + bias.abs()));
        // Variance via eigenvalue summation of the trace product.
        let e = hat.eig().unwrap();
        let tr: f64 =
            (0..4).map(|j| pop.quad_form(e.vector(j)) / (e.values[j] + lambda)).sum();
        assert_close(terms.variance_term, noise * noise / n as f64 * tr, 1e-12 * (1.0 + tr));
    }

    #[test]
    fn theorem1_bound_structure() {
        let sigma = SymMatrix::identity(5);
        let zero = theorem1_bound(&sigma, &[0.0; 5], 0.1, 50, 5f64.sqrt(), 0.0).unwrap();
        assert_eq!(zero.total, 0.0);

        let theta = vec![1.0; 5];
        let (lambda, n, radius, noise) = (0.2, 50usize, 5f64.sqrt(), 1.5);
        let b = theorem1_bound(&sigma, &theta, lambda, n, radius, noise).unwrap();
        let inflation = 1.0 + radius * radius / (lambda * n as f64);
        assert_close(b.inflation, inflation, 1e-14);
        assert_close(b.bias_part, lambda * 5.0 / 1.2, 1e-12);
        assert_close(b.variance_part, noise * noise * (5.0 / 1.2) / n as f64, 1e-12);
        assert_close(
            b.total,
            inflation * inflation * b.bias_part + inflation * b.variance_part,
            0.0,
        );
        assert!(b.inflation > 1.0);
    }

    #[test]
    fn theorem1_bound_inflation_two_at_critical_lambda() {
        let sigma = SymMatrix::identity(5);
        let theta = vec![1.0; 5];
        let (n, radius, noise) = (50usize, 5f64.sqrt(), 1.0);
        let lambda = radius * radius / n as f64;
        let b = theorem1_bound(&sigma, &theta, lambda, n, radius, noise).unwrap();
        assert_close(b.inflation, 2.0, 1e-12);
        assert_close(b.total, 4.0 * b.bias_part + 2.0 * b.variance_part, 1e-12 * b.total);
    }

    #[test]
    fn functionals_reject_bad_lambda() {
        let sigma = SymMatrix::identity(2);
        let theta = vec![1.0, 1.0];
        assert!(effective_dimension(&sigma, -1.0).is_err());
        assert!(bias_functional(&sigma, 0.0, &theta).is_err());
        assert!(regularized_minimizer(&sigma, 0.0, &theta).is_err());
        assert!(population_bias(&sigma, f64::NAN, &theta).is_err());
        assert!(lemma1_terms(&sigma, &sigma, &theta, 0.0, 1.0, 5).is_err());
        assert!(theorem1_bound(&sigma, &theta, 0.0, 5, 1.0, 1.0).is_err());
    }
}
