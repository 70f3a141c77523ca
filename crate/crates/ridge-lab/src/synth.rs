//! Synthetic regression problems with exactly known structure.
//!
//! The design distribution is atomic and sign-symmetric: in the standard
//! basis the atoms are ±√(d·μ_i)·e_i, each with probability 1/(2d). That
//! choice makes the covariance E[XXᵀ] = diag(μ) exact rather than
//! approximate, gives the smallest norm bound R = √(d·μ_max) available in
//! this family, and keeps every expectation over the design computable by
//! enumeration at small d. Labels follow Y = ⟨θ*, X⟩ + ε with ε Gaussian
//! of standard deviation σ drawn independently of X, so the conditional
//! mean is linear and the conditional variance is exactly σ².

use crate::error::{Error, Result};
use crate::linalg::{self, SymMatrix};
use crate::model::Dataset;
use crate::rng::SplitMix64;

/// Tolerance for the exact-covariance and source-norm construction checks.
const INVARIANT_TOL: f64 = 1e-10;

/// A finitely supported, zero-mean design distribution with precomputed
/// covariance and norm bound.
#[derive(Debug, Clone)]
pub struct DesignDistribution {
    d: usize,
    /// (support point, probability); probabilities sum to 1.
    atoms: Vec<(Vec<f64>, f64)>,
    /// Every atom satisfies ‖x‖ ≤ radius.
    radius: f64,
    /// Exact covariance E[XXᵀ] over the atoms.
    covariance: SymMatrix,
}

impl DesignDistribution {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn atoms(&self) -> &[(Vec<f64>, f64)] {
        &self.atoms
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn covariance(&self) -> &SymMatrix {
        &self.covariance
    }

    /// E[XXᵀ] recomputed by direct enumeration over the atoms.
    pub fn enumerate_covariance(&self) -> SymMatrix {
        let d = self.d;
        let mut data = vec![0.0; d * d];
        for (x, p) in &self.atoms {
            for i in 0..d {
                let s = p * x[i];
                if s == 0.0 {
                    continue;
                }
                for j in 0..d {
                    data[i * d + j] += s * x[j];
                }
            }
        }
        SymMatrix::new(d, data).expect("finite atoms give a finite covariance")
    }

    /// Index of one atom drawn according to the atom probabilities.
    fn sample_index(&self, rng: &mut SplitMix64) -> usize {
        let u = rng.next_f64();
        let mut cum = 0.0;
        for (k, (_, p)) in self.atoms.iter().enumerate() {
            cum += p;
            if u < cum {
                return k;
            }
        }
        self.atoms.len() - 1
    }
}

/// Builds the sign-symmetric atomic design whose covariance is exactly
/// diag(spectrum). The spectrum must be nonincreasing, nonnegative, and
/// not identically zero; zero entries contribute zero atoms, which keeps
/// the atom count at 2d and the probabilities uniform.
pub fn make_bounded_design(spectrum: &[f64]) -> Result<DesignDistribution> {
    let d = spectrum.len();
    if d == 0 {
        return Err(Error::InvalidInput("spectrum must be nonempty".into()));
    }
    if !spectrum.iter().all(|x| x.is_finite() && *x >= 0.0) {
        return Err(Error::InvalidInput("spectrum entries must be finite and nonnegative".into()));
    }
    if spectrum.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidInput("spectrum must be nonincreasing".into()));
    }
    if spectrum[0] == 0.0 {
        return Err(Error::InvalidInput("spectrum must have at least one positive entry".into()));
    }
    let prob = 1.0 / (2 * d) as f64;
    let mut atoms = Vec::with_capacity(2 * d);
    for (i, &mu) in spectrum.iter().enumerate() {
        let scale = (d as f64 * mu).sqrt();
        for sign in [1.0, -1.0] {
            let mut x = vec![0.0; d];
            x[i] = sign * scale;
            atoms.push((x, prob));
        }
    }
    let design = DesignDistribution {
        d,
        atoms,
        radius: (d as f64 * spectrum[0]).sqrt(),
        covariance: SymMatrix::from_diag(spectrum)?,
    };
    // The enumeration cross-check is cubic in d, so it guards only the small
    // dimensions where construction bugs would already show up.
    #[cfg(debug_assertions)]
    if d <= 64 {
        let err = design
            .enumerate_covariance()
            .sub(design.covariance())
            .frobenius_norm();
        debug_assert!(
            err <= 1e-12 * (1.0 + design.covariance.frobenius_norm()),
            "atom enumeration drifted from the stored covariance: {err}"
        );
    }
    Ok(design)
}

/// Geometric spectrum μ_i = i^{-b}, i = 1..d.
pub fn poly_spectrum(d: usize, b: f64) -> Result<Vec<f64>> {
    if d == 0 {
        return Err(Error::InvalidInput("spectrum must be nonempty".into()));
    }
    if !b.is_finite() || b <= 0.0 {
        return Err(Error::Domain(format!("decay exponent must be positive, got {b}")));
    }
    Ok((1..=d).map(|i| (i as f64).powf(-b)).collect())
}

/// A target vector with prescribed smoothness relative to the covariance:
/// θ* = c·Σ^{r/2}·u with u spread uniformly over the eigendirections that
/// carry positive eigenvalue, and c chosen so that ‖Σ^{(1−r)/2}θ*‖ = ρ.
pub fn make_source_target(sigma: &SymMatrix, r: f64, rho: f64) -> Result<Vec<f64>> {
    validate_source_args(sigma, r, rho)?;
    let d = sigma.dim();
    if rho == 0.0 {
        return Ok(vec![0.0; d]);
    }
    let e = sigma.eig()?;
    let pos_sum: f64 = e.values.iter().filter(|&&mu| mu > 0.0).sum();
    if pos_sum <= 0.0 {
        return Err(Error::Domain("covariance has no positive eigenvalue".into()));
    }
    // ‖Σ^{(1−r)/2}·Σ^{r/2}u‖² = Σ_{μ>0} μ/d for unit-coordinate u, so the
    // normalization is independent of r.
    let c = rho * (d as f64 / pos_sum).sqrt();
    let coeffs: Vec<f64> = e
        .values
        .iter()
        .map(|&mu| if mu > 0.0 { c * mu.powf(r / 2.0) / (d as f64).sqrt() } else { 0.0 })
        .collect();
    Ok(e.from_eigenbasis(&coeffs))
}

/// Variant of [`make_source_target`] whose coefficient profile is matched
/// to the spectral capacity: with w = Σ^{(1−r)/2}θ*, the weights satisfy
/// w_j² ∝ μ_j^{1/decay_b}. Under a polynomially decaying spectrum this is
/// the fixed target whose regularization bias actually decays like
/// λ^{min(r,1)}, making it the right probe for rate sweeps; the uniform
/// construction concentrates too much weight on leading directions and
/// decays faster than the certified rate when r < 1.
pub fn make_capacity_matched_target(
    sigma: &SymMatrix,
    r: f64,
    rho: f64,
    decay_b: f64,
) -> Result<Vec<f64>> {
    validate_source_args(sigma, r, rho)?;
    if !decay_b.is_finite() || decay_b <= 0.0 {
        return Err(Error::Domain(format!("decay exponent must be positive, got {decay_b}")));
    }
    let d = sigma.dim();
    if rho == 0.0 {
        return Ok(vec![0.0; d]);
    }
    let e = sigma.eig()?;
    let weight_sum: f64 =
        e.values.iter().filter(|&&mu| mu > 0.0).map(|&mu| mu.powf(1.0 / decay_b)).sum();
    if weight_sum <= 0.0 {
        return Err(Error::Domain("covariance has no positive eigenvalue".into()));
    }
    // t_j = √κ·μ^{(r−1)/2 + 1/(2b)} gives Σ μ^{1−r} t_j² = κ·Σ μ^{1/b} = ρ².
    let kappa = rho * rho / weight_sum;
    let coeffs: Vec<f64> = e
        .values
        .iter()
        .map(|&mu| {
            if mu > 0.0 {
                kappa.sqrt() * mu.powf((r - 1.0) / 2.0 + 1.0 / (2.0 * decay_b))
            } else {
                0.0
            }
        })
        .collect();
    Ok(e.from_eigenbasis(&coeffs))
}

/// Variant of [`make_source_target`] concentrated on the leading
/// eigendirection instead of spread across the spectrum.
pub fn make_source_target_aligned(sigma: &SymMatrix, r: f64, rho: f64) -> Result<Vec<f64>> {
    validate_source_args(sigma, r, rho)?;
    let d = sigma.dim();
    if rho == 0.0 {
        return Ok(vec![0.0; d]);
    }
    let e = sigma.eig()?;
    let mu_max = e.values[d - 1];
    if mu_max <= 0.0 {
        return Err(Error::Domain("covariance has no positive eigenvalue".into()));
    }
    let mut coeffs = vec![0.0; d];
    coeffs[d - 1] = rho * mu_max.powf((r - 1.0) / 2.0);
    Ok(e.from_eigenbasis(&coeffs))
}

fn validate_source_args(sigma: &SymMatrix, r: f64, rho: f64) -> Result<()> {
    if !r.is_finite() || r <= 0.0 {
        return Err(Error::Domain(format!("source exponent must be positive, got {r}")));
    }
    if !rho.is_finite() || rho < 0.0 {
        return Err(Error::Domain(format!("source norm must be nonnegative, got {rho}")));
    }
    sigma.require_psd("covariance")
}

/// Tr(Σ^{1/b}) for b > 1, the budget that controls how fast the spectrum
/// decays; eigenvalues inside the PSD gate's band below zero count as 0.
pub fn spectrum_budget(sigma: &SymMatrix, b: f64) -> Result<f64> {
    if !b.is_finite() || b <= 1.0 {
        return Err(Error::Domain(format!("spectrum budget requires b > 1, got {b}")));
    }
    sigma.require_psd("covariance")?;
    Ok(sigma.eigenvalues()?.iter().map(|&mu| mu.max(0.0).powf(1.0 / b)).sum())
}

/// Spectral-decay certificate: Tr(Σ^{1/b}) ≤ budget.
#[derive(Debug, Clone, Copy)]
pub struct SpectrumParams {
    pub b: f64,
    pub budget: f64,
}

/// Smoothness certificate for the target: ‖Σ^{(1−r)/2}θ*‖ = rho.
#[derive(Debug, Clone, Copy)]
pub struct SourceParams {
    pub r: f64,
    pub rho: f64,
}

/// A fully specified regression problem: design distribution, target
/// vector, and noise level, with optional decay and smoothness
/// certificates checked at construction.
#[derive(Debug, Clone)]
pub struct Problem {
    design: DesignDistribution,
    theta_star: Vec<f64>,
    noise_sd: f64,
    spectrum_params: Option<SpectrumParams>,
    source_params: Option<SourceParams>,
}

impl Problem {
    pub fn new(design: DesignDistribution, theta_star: Vec<f64>, noise_sd: f64) -> Result<Self> {
        if theta_star.len() != design.dim() {
            return Err(Error::DimensionMismatch { expected: design.dim(), got: theta_star.len() });
        }
        if !theta_star.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidInput("target vector must be finite".into()));
        }
        if !noise_sd.is_finite() || noise_sd < 0.0 {
            return Err(Error::InvalidInput(format!(
                "noise standard deviation must be nonnegative, got {noise_sd}"
            )));
        }
        Ok(Self { design, theta_star, noise_sd, spectrum_params: None, source_params: None })
    }

    /// Builds the problem around a source target constructed from (r, ρ).
    pub fn with_source(design: DesignDistribution, r: f64, rho: f64, noise_sd: f64) -> Result<Self> {
        let theta_star = make_source_target(design.covariance(), r, rho)?;
        let mut problem = Self::new(design, theta_star, noise_sd)?;
        problem.source_params = Some(SourceParams { r, rho });
        problem.check_source_norm()?;
        Ok(problem)
    }

    /// Attaches the decay certificate for the given b.
    pub fn with_spectrum_budget(mut self, b: f64) -> Result<Self> {
        let budget = spectrum_budget(self.design.covariance(), b)?;
        self.spectrum_params = Some(SpectrumParams { b, budget });
        Ok(self)
    }

    fn check_source_norm(&self) -> Result<()> {
        let Some(sp) = self.source_params else {
            return Ok(());
        };
        let e = self.design.covariance().eig()?;
        let coeffs = e.to_eigenbasis(&self.theta_star);
        let sq: f64 = e
            .values
            .iter()
            .zip(&coeffs)
            .filter(|(&mu, _)| mu > 0.0)
            .map(|(&mu, &c)| mu.powf(1.0 - sp.r) * c * c)
            .sum();
        let got = sq.sqrt();
        if (got - sp.rho).abs() > INVARIANT_TOL * sp.rho.max(1.0) {
            return Err(Error::Domain(format!(
                "source norm drifted during construction: expected {}, got {got}",
                sp.rho
            )));
        }
        Ok(())
    }

    pub fn design(&self) -> &DesignDistribution {
        &self.design
    }

    pub fn dim(&self) -> usize {
        self.design.dim()
    }

    pub fn theta_star(&self) -> &[f64] {
        &self.theta_star
    }

    pub fn noise_sd(&self) -> f64 {
        self.noise_sd
    }

    pub fn covariance(&self) -> &SymMatrix {
        self.design.covariance()
    }

    pub fn radius(&self) -> f64 {
        self.design.radius()
    }

    pub fn spectrum_params(&self) -> Option<SpectrumParams> {
        self.spectrum_params
    }

    pub fn source_params(&self) -> Option<SourceParams> {
        self.source_params
    }
}

/// Draws an i.i.d. sample of size n from the problem, deterministically
/// from the seed. Each observation consumes one atom index and one
/// Gaussian, in that order; the Gaussian is drawn even when σ = 0 so the
/// stream layout does not depend on the noise level.
pub fn sample_dataset(problem: &Problem, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidInput("sample size must be at least 1".into()));
    }
    let d = problem.dim();
    let design = problem.design();
    let mut rng = SplitMix64::new(seed);
    let mut xs = Vec::with_capacity(n * d);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let (x, _) = &design.atoms()[design.sample_index(&mut rng)];
        let eps = rng.next_gaussian();
        // The norm bound is structural, never statistical.
        assert!(
            linalg::norm(x) <= design.radius() * (1.0 + 1e-12),
            "sampled point violates the design norm bound"
        );
        ys.push(linalg::dot(problem.theta_star(), x) + problem.noise_sd() * eps);
        xs.extend_from_slice(x);
    }
    Dataset::new(d, xs, ys, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "expected {a} ≈ {b} within {tol}");
    }

    #[test]
    fn identity_design_d2() {
        let design = make_bounded_design(&[1.0, 1.0]).unwrap();
        assert_eq!(design.atoms().len(), 4);
        for (x, p) in design.atoms() {
            assert_close(*p, 0.25, 1e-15);
            assert_close(linalg::norm(x), 2f64.sqrt(), 1e-15);
        }
        assert_close(design.radius(), 2f64.sqrt(), 1e-15);
        let cov = design.covariance();
        assert_close(cov.at(0, 0), 1.0, 1e-15);
        assert_close(cov.at(1, 1), 1.0, 1e-15);
        assert_close(cov.at(0, 1), 0.0, 1e-15);
        // Tr(Σ) = E‖X‖² meets the norm bound with equality here.
        assert_close(cov.trace(), design.radius() * design.radius(), 1e-15);
    }

    #[test]
    fn rank_deficient_design() {
        let design = make_bounded_design(&[1.0, 0.0]).unwrap();
        assert_eq!(design.atoms().len(), 4);
        assert_close(design.covariance().at(0, 0), 1.0, 0.0);
        assert_close(design.covariance().at(1, 1), 0.0, 0.0);
        assert_close(design.radius(), 2f64.sqrt(), 1e-15);
    }

    #[test]
    fn design_enumeration_matches_covariance() {
        let spectrum = poly_spectrum(50, 2.0).unwrap();
        let design = make_bounded_design(&spectrum).unwrap();
        let err = design.enumerate_covariance().sub(design.covariance()).frobenius_norm();
        assert!(err <= 1e-14);
        // Zero mean by sign symmetry.
        let mut mean = vec![0.0; 50];
        for (x, p) in design.atoms() {
            for (m, xi) in mean.iter_mut().zip(x) {
                *m += p * xi;
            }
        }
        assert!(linalg::norm(&mean) == 0.0);
    }

    #[test]
    fn design_rejects_bad_spectra() {
        assert!(make_bounded_design(&[]).is_err());
        assert!(make_bounded_design(&[0.0, 0.0]).is_err());
        assert!(make_bounded_design(&[1.0, 2.0]).is_err());
        assert!(make_bounded_design(&[1.0, f64::NAN]).is_err());
        assert!(make_bounded_design(&[1.0, -0.5]).is_err());
    }

    #[test]
    fn source_target_identity_covariance() {
        let sigma = SymMatrix::identity(4);
        for r in [0.5, 1.0, 2.0] {
            let theta = make_source_target(&sigma, r, 3.0).unwrap();
            assert_close(linalg::norm(&theta), 3.0, 1e-12);
            for t in &theta {
                assert_close(*t, 1.5, 1e-12);
            }
        }
    }

    #[test]
    fn source_target_zero_rho() {
        let sigma = SymMatrix::identity(3);
        assert_eq!(make_source_target(&sigma, 1.0, 0.0).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn source_target_polynomial_decay() {
        let d = 20;
        let spectrum = poly_spectrum(d, 2.0).unwrap();
        let sigma = SymMatrix::from_diag(&spectrum).unwrap();
        let theta = make_source_target(&sigma, 1.0, 1.0).unwrap();
        // r = 1 makes the constraint norm the plain Euclidean norm.
        assert_close(linalg::norm(&theta), 1.0, 1e-12);
        // Coordinates decay like μ_i^{1/2} = 1/i.
        for i in 0..d {
            let expected = theta[0] / (i + 1) as f64;
            assert_close(theta[i], expected, 1e-12 * theta[0].abs());
        }
    }

    #[test]
    fn capacity_matched_target_norm_and_profile() {
        let d = 50;
        let spectrum = poly_spectrum(d, 2.0).unwrap();
        let sigma = SymMatrix::from_diag(&spectrum).unwrap();
        for r in [0.5, 1.0, 2.0] {
            let theta = make_capacity_matched_target(&sigma, r, 1.5, 2.0).unwrap();
            // Constraint norm is exact: Σ μ^{1−r} t_i² = ρ².
            let norm_sq: f64 = theta
                .iter()
                .zip(&spectrum)
                .map(|(&t, &mu)| mu.powf(1.0 - r) * t * t)
                .sum();
            assert_close(norm_sq, 2.25, 1e-10);
        }
        // At r = 0.5, b = 2 the per-coordinate exponent cancels: flat profile.
        let theta = make_capacity_matched_target(&sigma, 0.5, 1.0, 2.0).unwrap();
        for i in 1..d {
            assert_close(theta[i], theta[0], 1e-12 * theta[0].abs());
        }
        assert!(make_capacity_matched_target(&sigma, 0.5, 1.0, 0.0).is_err());
        let zero = make_capacity_matched_target(&sigma, 0.5, 0.0, 2.0).unwrap();
        assert!(zero.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn source_target_aligned_variant() {
        let sigma = SymMatrix::from_diag(&[1.0, 0.25]).unwrap();
        let theta = make_source_target_aligned(&sigma, 0.5, 2.0).unwrap();
        // All mass on the leading eigendirection (the first axis here).
        assert_close(theta[1], 0.0, 1e-15);
        // ‖Σ^{1/4}θ*‖ = |θ*_0| with μ_max = 1.
        assert_close(theta[0].abs(), 2.0, 1e-12);
    }

    #[test]
    fn source_target_rejects_bad_args() {
        let sigma = SymMatrix::identity(2);
        assert!(make_source_target(&sigma, 0.0, 1.0).is_err());
        assert!(make_source_target(&sigma, -1.0, 1.0).is_err());
        assert!(make_source_target(&sigma, 1.0, -1.0).is_err());
        assert!(make_source_target(&SymMatrix::zeros(2), 1.0, 1.0).is_err());
    }

    #[test]
    fn spectrum_budget_examples() {
        assert_close(spectrum_budget(&SymMatrix::identity(7), 2.0).unwrap(), 7.0, 1e-12);
        assert_close(spectrum_budget(&SymMatrix::zeros(3), 2.0).unwrap(), 0.0, 0.0);
        assert!(spectrum_budget(&SymMatrix::identity(2), 1.0).is_err());
        // For μ_i = i^{-2} and b = 2 the budget is the harmonic number H_d.
        let sigma = SymMatrix::from_diag(&poly_spectrum(100, 2.0).unwrap()).unwrap();
        assert_close(spectrum_budget(&sigma, 2.0).unwrap(), 5.187377517639621, 1e-12);
    }

    #[test]
    fn problem_with_source_and_budget() {
        let design = make_bounded_design(&poly_spectrum(10, 2.0).unwrap()).unwrap();
        let problem = Problem::with_source(design, 0.5, 1.0, 1.0)
            .unwrap()
            .with_spectrum_budget(2.0)
            .unwrap();
        let sp = problem.spectrum_params().unwrap();
        assert_eq!(sp.b, 2.0);
        let h10: f64 = (1..=10).map(|i| 1.0 / i as f64).sum();
        assert_close(sp.budget, h10, 1e-12);
        let src = problem.source_params().unwrap();
        assert_eq!((src.r, src.rho), (0.5, 1.0));
    }

    #[test]
    fn problem_validates_inputs() {
        let design = make_bounded_design(&[1.0, 1.0]).unwrap();
        assert!(Problem::new(design.clone(), vec![0.0; 3], 1.0).is_err());
        assert!(Problem::new(design.clone(), vec![0.0, f64::INFINITY], 1.0).is_err());
        assert!(Problem::new(design, vec![0.0; 2], -1.0).is_err());
    }

    #[test]
    fn sampling_is_deterministic_and_noiseless_when_sigma_zero() {
        let design = make_bounded_design(&[1.0, 0.5]).unwrap();
        let problem = Problem::new(design, vec![1.0, -2.0], 0.0).unwrap();
        let a = sample_dataset(&problem, 25, 99).unwrap();
        let b = sample_dataset(&problem, 25, 99).unwrap();
        assert_eq!(a.xs(), b.xs());
        assert_eq!(a.ys(), b.ys());
        for i in 0..25 {
            assert_eq!(a.ys()[i], linalg::dot(problem.theta_star(), a.x(i)));
        }
        assert!(sample_dataset(&problem, 0, 1).is_err());
    }

    #[test]
    fn sampling_mean_is_near_zero() {
        let design = make_bounded_design(&[1.0, 1.0, 1.0]).unwrap();
        let trace = design.covariance().trace();
        let problem = Problem::new(design, vec![0.0; 3], 0.0).unwrap();
        let n = 100_000;
        let data = sample_dataset(&problem, n, 2024).unwrap();
        let mut mean = vec![0.0; 3];
        for i in 0..n {
            for (m, xi) in mean.iter_mut().zip(data.x(i)) {
                *m += xi / n as f64;
            }
        }
        assert!(linalg::norm(&mean) <= 4.0 * (trace / n as f64).sqrt());
    }

    #[test]
    fn noise_variance_matches_sigma() {
        let design = make_bounded_design(&[1.0]).unwrap();
        let problem = Problem::new(design, vec![0.0], 2.0).unwrap();
        let n = 100_000;
        let data = sample_dataset(&problem, n, 7).unwrap();
        let var = data.ys().iter().map(|y| y * y).sum::<f64>() / n as f64;
        // Var(y²-mean) for Gaussian is 2σ⁴; allow 4 standard errors.
        assert!((var - 4.0).abs() <= 4.0 * (2.0 * 16.0 / n as f64).sqrt());
    }
}
