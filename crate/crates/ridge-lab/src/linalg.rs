//! Dense symmetric linear algebra on small matrices.
//!
//! Everything rests on one primitive: an eigendecomposition computed by
//! cyclic Jacobi rotations and cached inside the matrix. Resolvents
//! (M + λ)^{-1}, fractional powers, and square roots are all evaluated
//! spectrally from that single decomposition, so a matrix reused across a
//! λ grid is factored exactly once. Dimensions stay in the hundreds at
//! most; there are no sparse or iterative paths.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Jacobi sweeps stop when the off-diagonal Frobenius norm falls below
/// this fraction of the full Frobenius norm of the input.
pub const JACOBI_REL_TOL: f64 = 1e-12;

/// Hard cap on Jacobi sweeps. Cyclic Jacobi converges quadratically once
/// sweeps begin to bite; matrices in the supported size range need well
/// under twenty sweeps, so hitting the cap signals non-finite input or a
/// bug rather than slow convergence.
pub const MAX_JACOBI_SWEEPS: usize = 100;

/// A matrix passes the positive-semidefinite gate when its smallest
/// eigenvalue is at least -PSD_REL_TOL * max(1, ||M||_op). Averages of
/// exactly-PSD matrices accumulate rounding noise of this order, so an
/// exact zero cutoff would reject them spuriously.
pub const PSD_REL_TOL: f64 = 1e-10;

/// Slack in the midpoint-convexity comparison, relative to 1 + |rhs|.
pub const CONVEXITY_REL_TOL: f64 = 1e-10;

/// Dot product. Panics if lengths differ.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "dot: length mismatch");
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm.
pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Eigendecomposition of a symmetric matrix: M = V diag(values) Vᵀ.
#[derive(Debug, Clone)]
pub struct Eig {
    d: usize,
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, column-major: entry i of eigenvector j
    /// sits at `vectors[j*d + i]`, so each eigenvector is contiguous.
    vectors: Vec<f64>,
}

impl Eig {
    pub fn dim(&self) -> usize {
        self.d
    }

    /// Eigenvector j as a slice.
    pub fn vector(&self, j: usize) -> &[f64] {
        &self.vectors[j * self.d..(j + 1) * self.d]
    }

    /// Coordinates of v in the eigenbasis: Vᵀ v.
    pub fn to_eigenbasis(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.d, "to_eigenbasis: length mismatch");
        (0..self.d).map(|j| dot(self.vector(j), v)).collect()
    }

    /// Vector with eigenbasis coordinates c: V c.
    pub fn from_eigenbasis(&self, c: &[f64]) -> Vec<f64> {
        assert_eq!(c.len(), self.d, "from_eigenbasis: length mismatch");
        let mut out = vec![0.0; self.d];
        for (j, &cj) in c.iter().enumerate() {
            if cj == 0.0 {
                continue;
            }
            for (o, vij) in out.iter_mut().zip(self.vector(j)) {
                *o += cj * vij;
            }
        }
        out
    }

    /// Representation of S in the eigenbasis: Vᵀ S V.
    pub fn to_eigenbasis_matrix(&self, s: &SymMatrix) -> SymMatrix {
        let d = self.d;
        assert_eq!(s.d, d, "to_eigenbasis_matrix: dimension mismatch");
        // t holds S V column-major: t[j*d + i] = (S V)_{ij}.
        let mut t = vec![0.0; d * d];
        for j in 0..d {
            let col = self.vector(j);
            for i in 0..d {
                t[j * d + i] = dot(&s.data[i * d..(i + 1) * d], col);
            }
        }
        let mut data = vec![0.0; d * d];
        for i in 0..d {
            let vi = self.vector(i);
            for j in i..d {
                let x = dot(vi, &t[j * d..(j + 1) * d]);
                data[i * d + j] = x;
                data[j * d + i] = x;
            }
        }
        SymMatrix::from_symmetric_data(d, data)
    }

    /// Matrix with eigenbasis representation B: V B Vᵀ.
    pub fn from_eigenbasis_matrix(&self, b: &SymMatrix) -> SymMatrix {
        let d = self.d;
        assert_eq!(b.d, d, "from_eigenbasis_matrix: dimension mismatch");
        // p holds V B column-major: column l of V B is sum_k B_{kl} * (eigenvector k).
        let mut p = vec![0.0; d * d];
        for k in 0..d {
            let vk = self.vector(k);
            for l in 0..d {
                let bkl = b.data[k * d + l];
                if bkl == 0.0 {
                    continue;
                }
                for i in 0..d {
                    p[l * d + i] += bkl * vk[i];
                }
            }
        }
        // result_{ij} = sum_l (V B)_{il} V_{jl}, accumulated as outer products.
        let mut data = vec![0.0; d * d];
        for l in 0..d {
            let vl = self.vector(l);
            for i in 0..d {
                let pil = p[l * d + i];
                if pil == 0.0 {
                    continue;
                }
                let row = &mut data[i * d..(i + 1) * d];
                for (rj, vlj) in row.iter_mut().zip(vl) {
                    *rj += pil * vlj;
                }
            }
        }
        for i in 0..d {
            for j in (i + 1)..d {
                let m = 0.5 * (data[i * d + j] + data[j * d + i]);
                data[i * d + j] = m;
                data[j * d + i] = m;
            }
        }
        SymMatrix::from_symmetric_data(d, data)
    }

    /// Matrix sharing this eigenbasis with the given eigenvalues:
    /// V diag(w) Vᵀ.
    pub fn matrix_with_eigenvalues(&self, w: &[f64]) -> SymMatrix {
        let d = self.d;
        assert_eq!(w.len(), d, "matrix_with_eigenvalues: length mismatch");
        let mut data = vec![0.0; d * d];
        for (k, &wk) in w.iter().enumerate() {
            if wk == 0.0 {
                continue;
            }
            let col = self.vector(k);
            for i in 0..d {
                let s = wk * col[i];
                if s == 0.0 {
                    continue;
                }
                for j in i..d {
                    data[i * d + j] += s * col[j];
                }
            }
        }
        for i in 0..d {
            for j in (i + 1)..d {
                data[j * d + i] = data[i * d + j];
            }
        }
        SymMatrix::from_symmetric_data(d, data)
    }
}

/// A dense symmetric matrix with a lazily cached eigendecomposition.
///
/// Entries are symmetrized to (M + Mᵀ)/2 at construction, so the stored
/// array is symmetric exactly, not merely within tolerance. Values are
/// immutable afterwards; the eigendecomposition cache fills at most once
/// behind a one-time initialization barrier, which keeps shared instances
/// safe to use from many threads.
#[derive(Debug, Clone)]
pub struct SymMatrix {
    d: usize,
    /// Row-major d*d entries, exactly symmetric.
    data: Vec<f64>,
    eig: OnceLock<Eig>,
}

impl SymMatrix {
    /// Builds a d x d symmetric matrix from row-major entries. The input
    /// is symmetrized as (M + Mᵀ)/2; non-finite entries are rejected.
    pub fn new(d: usize, entries: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidInput("matrix dimension must be positive".into()));
        }
        if entries.len() != d * d {
            return Err(Error::DimensionMismatch { expected: d * d, got: entries.len() });
        }
        if !entries.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidInput("matrix entries must be finite".into()));
        }
        let mut data = entries;
        for i in 0..d {
            for j in (i + 1)..d {
                let m = 0.5 * (data[i * d + j] + data[j * d + i]);
                data[i * d + j] = m;
                data[j * d + i] = m;
            }
        }
        Ok(Self { d, data, eig: OnceLock::new() })
    }

    /// Wraps data already known to be exactly symmetric and finite.
    fn from_symmetric_data(d: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), d * d);
        Self { d, data, eig: OnceLock::new() }
    }

    pub fn zeros(d: usize) -> Self {
        assert!(d > 0, "matrix dimension must be positive");
        Self::from_symmetric_data(d, vec![0.0; d * d])
    }

    pub fn identity(d: usize) -> Self {
        let mut m = Self::zeros(d);
        for i in 0..d {
            m.data[i * d + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Result<Self> {
        let d = diag.len();
        if d == 0 {
            return Err(Error::InvalidInput("matrix dimension must be positive".into()));
        }
        if !diag.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidInput("matrix entries must be finite".into()));
        }
        let mut m = Self::zeros(d);
        for (i, &x) in diag.iter().enumerate() {
            m.data[i * d + i] = x;
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.d + j]
    }

    /// M v. Panics on length mismatch.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.d, "matvec: length mismatch");
        (0..self.d).map(|i| dot(&self.data[i * self.d..(i + 1) * self.d], v)).collect()
    }

    /// Quadratic form ⟨M v, v⟩. Panics on length mismatch.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        dot(&self.matvec(v), v)
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.d, other.d, "add: dimension mismatch");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        SymMatrix::from_symmetric_data(self.d, data)
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.d, other.d, "sub: dimension mismatch");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        SymMatrix::from_symmetric_data(self.d, data)
    }

    pub fn scale(&self, c: f64) -> SymMatrix {
        assert!(c.is_finite(), "scale: factor must be finite");
        SymMatrix::from_symmetric_data(self.d, self.data.iter().map(|a| a * c).collect())
    }

    /// M + λI.
    pub fn add_diag(&self, lambda: f64) -> SymMatrix {
        let mut data = self.data.clone();
        for i in 0..self.d {
            data[i * self.d + i] += lambda;
        }
        SymMatrix::from_symmetric_data(self.d, data)
    }

    pub fn trace(&self) -> f64 {
        (0..self.d).map(|i| self.data[i * self.d + i]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// The cached eigendecomposition, computing it on first use.
    pub fn eig(&self) -> Result<&Eig> {
        if let Some(e) = self.eig.get() {
            return Ok(e);
        }
        let e = jacobi_eig(self)?;
        Ok(self.eig.get_or_init(|| e))
    }

    pub fn eigenvalues(&self) -> Result<&[f64]> {
        Ok(&self.eig()?.values)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eig()?.values[0])
    }

    /// Operator norm, i.e. the largest eigenvalue magnitude.
    pub fn operator_norm(&self) -> Result<f64> {
        let vals = &self.eig()?.values;
        Ok(vals[0].abs().max(vals[self.d - 1].abs()))
    }

    /// Whether the matrix passes the PSD gate
    /// λ_min ≥ -PSD_REL_TOL * max(1, ||M||_op).
    pub fn is_psd(&self) -> Result<bool> {
        let vals = &self.eig()?.values;
        let op = vals[0].abs().max(vals[self.d - 1].abs());
        Ok(vals[0] >= -PSD_REL_TOL * op.max(1.0))
    }

    /// Domain error unless the matrix passes the PSD gate; `what` names
    /// the operand in the message.
    pub fn require_psd(&self, what: &str) -> Result<()> {
        if self.is_psd()? {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "{what} is not positive semidefinite (min eigenvalue {:e})",
                self.min_eigenvalue()?
            )))
        }
    }

    /// V f(D) Vᵀ for a scalar function f of the eigenvalues.
    pub fn spectral_map(&self, f: impl Fn(f64) -> f64) -> Result<SymMatrix> {
        let e = self.eig()?;
        let w: Vec<f64> = e.values.iter().map(|&mu| f(mu)).collect();
        if !w.iter().all(|x| x.is_finite()) {
            return Err(Error::Domain("spectral map produced a non-finite eigenvalue".into()));
        }
        Ok(e.matrix_with_eigenvalues(&w))
    }

    /// PSD square root. Eigenvalues inside the PSD gate's tolerance band
    /// below zero are clamped to 0 before the root is taken, so averaged
    /// matrices with rounding-level negative eigenvalues stay usable.
    pub fn sqrt_psd(&self) -> Result<SymMatrix> {
        self.require_psd("square root operand")?;
        self.spectral_map(|mu| mu.max(0.0).sqrt())
    }

    /// PSD power M^p with the pseudo-power convention: eigenvalues clamped
    /// at zero map to 0 for every exponent, including negative ones, so
    /// negative powers act as inverses on the range of M only.
    pub fn pow_psd(&self, p: f64) -> Result<SymMatrix> {
        self.require_psd("power operand")?;
        self.spectral_map(|mu| {
            let c = mu.max(0.0);
            if c == 0.0 {
                0.0
            } else {
                c.powf(p)
            }
        })
    }

    /// Tr[(M + λ)^{-1} S] evaluated through M's eigendecomposition.
    pub fn trace_resolvent_product(&self, lambda: f64, s: &SymMatrix) -> Result<f64> {
        if !(lambda > 0.0) {
            return Err(Error::Domain(format!("resolvent requires lambda > 0, got {lambda}")));
        }
        if s.d != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: s.d });
        }
        let e = self.eig()?;
        if e.values[0] + lambda <= 0.0 {
            return Err(Error::Domain(format!(
                "shift {lambda} does not make the matrix positive definite (min eigenvalue {:e})",
                e.values[0]
            )));
        }
        Ok((0..self.d).map(|j| s.quad_form(e.vector(j)) / (e.values[j] + lambda)).sum())
    }

    /// (M + λ)^{-1} S (M + λ)^{-1} from one eigendecomposition of M.
    pub fn resolvent_sandwich(&self, lambda: f64, s: &SymMatrix) -> Result<SymMatrix> {
        if !(lambda > 0.0) {
            return Err(Error::Domain(format!("resolvent requires lambda > 0, got {lambda}")));
        }
        if s.d != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: s.d });
        }
        let e = self.eig()?;
        if e.values[0] + lambda <= 0.0 {
            return Err(Error::Domain(format!(
                "shift {lambda} does not make the matrix positive definite (min eigenvalue {:e})",
                e.values[0]
            )));
        }
        let mut b = e.to_eigenbasis_matrix(s);
        let d = self.d;
        for j in 0..d {
            for k in 0..d {
                b.data[j * d + k] /= (e.values[j] + lambda) * (e.values[k] + lambda);
            }
        }
        Ok(e.from_eigenbasis_matrix(&b))
    }
}

impl std::ops::Index<(usize, usize)> for SymMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.d + j]
    }
}

/// Eigendecomposition of a symmetric matrix: eigenvalues ascending,
/// eigenvectors orthonormal.
pub fn eig_sym(m: &SymMatrix) -> Result<&Eig> {
    m.eig()
}

/// (M + λ)^{-1} v for PSD M and λ > 0.
pub fn resolvent_apply(m: &SymMatrix, lambda: f64, v: &[f64]) -> Result<Vec<f64>> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("resolvent requires lambda > 0, got {lambda}")));
    }
    if v.len() != m.d {
        return Err(Error::DimensionMismatch { expected: m.d, got: v.len() });
    }
    m.require_psd("resolvent operand")?;
    let e = m.eig()?;
    if e.values[0] + lambda <= 0.0 {
        return Err(Error::Domain(format!(
            "shift {lambda} does not make the matrix positive definite (min eigenvalue {:e})",
            e.values[0]
        )));
    }
    let mut c = e.to_eigenbasis(v);
    for (cj, &mu) in c.iter_mut().zip(&e.values) {
        *cj /= mu + lambda;
    }
    Ok(e.from_eigenbasis(&c))
}

/// Rank-one update solve via the identity
/// S^{-1}v = (1 + ⟨S^{-1}v, v⟩) (S + vvᵀ)^{-1} v.
///
/// Returns (w, factor) with w = (S + vvᵀ)^{-1} v and
/// factor = 1 + ⟨S^{-1}v, v⟩, so S^{-1}v = factor * w.
pub fn sherman_morrison_apply(s: &SymMatrix, v: &[f64]) -> Result<(Vec<f64>, f64)> {
    if v.len() != s.d {
        return Err(Error::DimensionMismatch { expected: s.d, got: v.len() });
    }
    let e = s.eig()?;
    if e.values[0] <= 0.0 {
        return Err(Error::Domain(format!(
            "matrix must be positive definite (min eigenvalue {:e})",
            e.values[0]
        )));
    }
    let mut c = e.to_eigenbasis(v);
    for (cj, &mu) in c.iter_mut().zip(&e.values) {
        *cj /= mu;
    }
    let s_inv_v = e.from_eigenbasis(&c);
    // factor >= 1 because S is positive definite.
    let factor = 1.0 + dot(&s_inv_v, v);
    let w = s_inv_v.iter().map(|u| u / factor).collect();
    Ok((w, factor))
}

/// Verdict of a semidefinite-order comparison A ⪯ B.
#[derive(Debug, Clone, Copy)]
pub struct PsdOrderResult {
    /// Smallest eigenvalue of B − A; negative values measure violation.
    pub min_eig_of_difference: f64,
    /// Slack below zero that still counts as ordered.
    pub tolerance_used: f64,
    /// min_eig_of_difference ≥ −tolerance_used.
    pub holds: bool,
}

/// Tests A ⪯ B in the semidefinite order, within slack `tol`.
pub fn psd_order_leq(a: &SymMatrix, b: &SymMatrix, tol: f64) -> Result<PsdOrderResult> {
    if a.d != b.d {
        return Err(Error::DimensionMismatch { expected: a.d, got: b.d });
    }
    if !(tol >= 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be nonnegative, got {tol}")));
    }
    let min_eig = b.sub(a).min_eigenvalue()?;
    Ok(PsdOrderResult { min_eig_of_difference: min_eig, tolerance_used: tol, holds: min_eig >= -tol })
}

/// Tr(AB) for symmetric A, B.
pub fn trace_product(a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    if a.d != b.d {
        return Err(Error::DimensionMismatch { expected: a.d, got: b.d });
    }
    Ok(a.data.iter().zip(&b.data).map(|(x, y)| x * y).sum())
}

/// Tr(M^{-1} S) for positive-definite M.
fn trace_inverse_product(m: &SymMatrix, s: &SymMatrix) -> Result<f64> {
    let e = m.eig()?;
    if e.values[0] <= 0.0 {
        return Err(Error::Domain(format!(
            "matrix must be positive definite (min eigenvalue {:e})",
            e.values[0]
        )));
    }
    Ok((0..m.d).map(|j| s.quad_form(e.vector(j)) / e.values[j]).sum())
}

/// Midpoint-convexity check for the map A ↦ Tr(A^{-1} S) on the
/// positive-definite cone: returns (lhs, rhs, holds) where
/// lhs = Tr(((A+B)/2)^{-1} S), rhs = (Tr(A^{-1}S) + Tr(B^{-1}S))/2, and
/// holds means lhs ≤ rhs within CONVEXITY_REL_TOL slack.
pub fn trace_inverse_convexity_check(
    a: &SymMatrix,
    b: &SymMatrix,
    s: &SymMatrix,
) -> Result<(f64, f64, bool)> {
    if a.d != b.d {
        return Err(Error::DimensionMismatch { expected: a.d, got: b.d });
    }
    if s.d != a.d {
        return Err(Error::DimensionMismatch { expected: a.d, got: s.d });
    }
    for m in [a, b] {
        if m.min_eigenvalue()? <= 0.0 {
            return Err(Error::Domain(format!(
                "convexity check operands must be positive definite (min eigenvalue {:e})",
                m.min_eigenvalue()?
            )));
        }
    }
    s.require_psd("convexity check weight")?;
    let mid = a.add(b).scale(0.5);
    let lhs = trace_inverse_product(&mid, s)?;
    let rhs = 0.5 * (trace_inverse_product(a, s)? + trace_inverse_product(b, s)?);
    let holds = lhs <= rhs + CONVEXITY_REL_TOL * (1.0 + rhs.abs());
    Ok((lhs, rhs, holds))
}

/// Cyclic Jacobi eigendecomposition.
///
/// Sweeps rotate every off-diagonal pair (p, q) in row order; the sweep
/// loop stops when the off-diagonal Frobenius norm drops below
/// JACOBI_REL_TOL times the Frobenius norm of the input.
fn jacobi_eig(m: &SymMatrix) -> Result<Eig> {
    let d = m.d;
    let mut a = m.data.clone();
    // Eigenvectors accumulate column-major so each is contiguous.
    let mut v = vec![0.0; d * d];
    for j in 0..d {
        v[j * d + j] = 1.0;
    }
    let threshold = JACOBI_REL_TOL * m.frobenius_norm();

    for _ in 0..=MAX_JACOBI_SWEEPS {
        if off_diagonal_norm(&a, d) <= threshold {
            return Ok(sorted_eig(d, &a, &v));
        }
        for p in 0..d.saturating_sub(1) {
            for q in (p + 1)..d {
                let apq = a[p * d + q];
                if apq == 0.0 {
                    continue;
                }
                let h = a[q * d + q] - a[p * d + p];
                // Rotation angle from the smaller root of t² + 2θt − 1 = 0.
                // When the angle is below rounding, the linearized form
                // avoids overflow in θ².
                let t = if apq.abs() * 100.0 < h.abs() * f64::EPSILON {
                    apq / h
                } else {
                    let theta = h / (2.0 * apq);
                    let t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                    if theta < 0.0 {
                        -t
                    } else {
                        t
                    }
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for i in 0..d {
                    if i == p || i == q {
                        continue;
                    }
                    let aip = a[i * d + p];
                    let aiq = a[i * d + q];
                    let nip = c * aip - s * aiq;
                    let niq = s * aip + c * aiq;
                    a[i * d + p] = nip;
                    a[p * d + i] = nip;
                    a[i * d + q] = niq;
                    a[q * d + i] = niq;
                }
                a[p * d + p] -= t * apq;
                a[q * d + q] += t * apq;
                a[p * d + q] = 0.0;
                a[q * d + p] = 0.0;
                for i in 0..d {
                    let vip = v[p * d + i];
                    let viq = v[q * d + i];
                    v[p * d + i] = c * vip - s * viq;
                    v[q * d + i] = s * vip + c * viq;
                }
            }
        }
    }
    Err(Error::NoConvergence(MAX_JACOBI_SWEEPS))
}

fn off_diagonal_norm(a: &[f64], d: usize) -> f64 {
    let mut sum = 0.0;
    for i in 0..d {
        for j in (i + 1)..d {
            sum += 2.0 * a[i * d + j] * a[i * d + j];
        }
    }
    sum.sqrt()
}

fn sorted_eig(d: usize, a: &[f64], v: &[f64]) -> Eig {
    let mut idx: Vec<usize> = (0..d).collect();
    idx.sort_by(|&x, &y| a[x * d + x].partial_cmp(&a[y * d + y]).expect("finite eigenvalues"));
    let values = idx.iter().map(|&k| a[k * d + k]).collect();
    let mut vectors = vec![0.0; d * d];
    for (new_j, &old_j) in idx.iter().enumerate() {
        vectors[new_j * d..(new_j + 1) * d].copy_from_slice(&v[old_j * d..(old_j + 1) * d]);
    }
    Eig { d, values, vectors }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "expected {a} ≈ {b} within {tol}");
    }

    fn random_sym(d: usize, rng: &mut SplitMix64) -> SymMatrix {
        let data = (0..d * d).map(|_| rng.next_gaussian()).collect();
        SymMatrix::new(d, data).unwrap()
    }

    fn random_spd(d: usize, rng: &mut SplitMix64) -> SymMatrix {
        random_sym(d, rng).spectral_map(|mu| mu.abs() + 0.5).unwrap()
    }

    #[test]
    fn construction_symmetrizes_and_validates() {
        let m = SymMatrix::new(2, vec![0.0, 1.0, 3.0, 0.0]).unwrap();
        assert_eq!(m.at(0, 1), 2.0);
        assert_eq!(m.at(1, 0), 2.0);
        assert!(SymMatrix::new(2, vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
        assert!(SymMatrix::new(2, vec![0.0; 3]).is_err());
        assert!(SymMatrix::new(0, vec![]).is_err());
    }

    #[test]
    fn eig_identity() {
        let e = SymMatrix::identity(3).eig().unwrap().clone();
        for val in &e.values {
            assert_close(*val, 1.0, 1e-15);
        }
    }

    #[test]
    fn eig_diagonal_sorts_ascending() {
        let m = SymMatrix::from_diag(&[3.0, 1.0, 2.0]).unwrap();
        let e = m.eig().unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
        // Permutation eigenvectors: eigenvalue 1 lives on axis 1, etc.
        assert_close(e.vector(0)[1].abs(), 1.0, 1e-15);
        assert_close(e.vector(1)[2].abs(), 1.0, 1e-15);
        assert_close(e.vector(2)[0].abs(), 1.0, 1e-15);
    }

    #[test]
    fn eig_reconstructs_and_is_orthonormal() {
        let mut rng = SplitMix64::new(101);
        for d in [1, 2, 5, 8] {
            let m = random_sym(d, &mut rng);
            let e = m.eig().unwrap();
            let recon = e.matrix_with_eigenvalues(&e.values);
            let err = recon.sub(&m).operator_norm().unwrap();
            let scale = 1.0 + m.operator_norm().unwrap();
            assert!(err <= 1e-10 * scale, "reconstruction error {err} at d={d}");
            for i in 0..d {
                for j in 0..d {
                    let g = dot(e.vector(i), e.vector(j));
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert_close(g, expect, 1e-12);
                }
            }
        }
    }

    #[test]
    fn eig_handles_zero_matrix() {
        let zeros = SymMatrix::zeros(4);
        let e = zeros.eig().unwrap();
        assert!(e.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn resolvent_apply_trivial_cases() {
        let v = vec![1.0, -2.0, 3.0];
        let half: Vec<f64> = v.iter().map(|x| x / 2.0).collect();
        let r0 = resolvent_apply(&SymMatrix::zeros(3), 2.0, &v).unwrap();
        let r1 = resolvent_apply(&SymMatrix::identity(3), 1.0, &v).unwrap();
        for i in 0..3 {
            assert_close(r0[i], half[i], 1e-15);
            assert_close(r1[i], half[i], 1e-15);
        }
    }

    #[test]
    fn resolvent_apply_residual() {
        let mut rng = SplitMix64::new(7);
        let m = random_spd(4, &mut rng);
        let v: Vec<f64> = (0..4).map(|_| rng.next_gaussian()).collect();
        let lambda = 0.1;
        let r = resolvent_apply(&m, lambda, &v).unwrap();
        let back = m.add_diag(lambda).matvec(&r);
        let resid = norm(&back.iter().zip(&v).map(|(a, b)| a - b).collect::<Vec<_>>());
        assert!(resid <= 1e-9 * norm(&v), "residual {resid}");
    }

    #[test]
    fn resolvent_rejects_bad_lambda() {
        let m = SymMatrix::identity(2);
        assert!(resolvent_apply(&m, 0.0, &[1.0, 1.0]).is_err());
        assert!(resolvent_apply(&m, -1.0, &[1.0, 1.0]).is_err());
        assert!(resolvent_apply(&m, 1.0, &[1.0]).is_err());
    }

    #[test]
    fn resolvent_rejects_indefinite_matrix() {
        let m = SymMatrix::from_diag(&[1.0, -1.0]).unwrap();
        assert!(resolvent_apply(&m, 0.5, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn sherman_morrison_unit_case() {
        let (w, factor) = sherman_morrison_apply(&SymMatrix::identity(2), &[1.0, 0.0]).unwrap();
        assert_close(factor, 2.0, 1e-15);
        assert_close(w[0], 0.5, 1e-15);
        assert_close(w[1], 0.0, 1e-15);
    }

    #[test]
    fn sherman_morrison_zero_vector() {
        let (w, factor) = sherman_morrison_apply(&SymMatrix::identity(3), &[0.0; 3]).unwrap();
        assert_eq!(w, vec![0.0; 3]);
        assert_close(factor, 1.0, 0.0);
    }

    #[test]
    fn sherman_morrison_identity_holds() {
        let mut rng = SplitMix64::new(33);
        for _ in 0..50 {
            let s = random_spd(3, &mut rng);
            let v: Vec<f64> = (0..3).map(|_| rng.next_gaussian()).collect();
            let (w, factor) = sherman_morrison_apply(&s, &v).unwrap();
            // Compare factor * w against a direct inverse application.
            let e = s.eig().unwrap();
            let mut c = e.to_eigenbasis(&v);
            for (cj, &mu) in c.iter_mut().zip(&e.values) {
                *cj /= mu;
            }
            let direct = e.from_eigenbasis(&c);
            let diff: Vec<f64> = direct.iter().zip(&w).map(|(a, b)| a - b * factor).collect();
            assert!(norm(&diff) <= 1e-10 * norm(&direct).max(1e-300));
        }
    }

    #[test]
    fn sherman_morrison_rejects_singular() {
        let m = SymMatrix::from_diag(&[1.0, 0.0]).unwrap();
        assert!(sherman_morrison_apply(&m, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn psd_order_basic() {
        let z = SymMatrix::zeros(2);
        let i = SymMatrix::identity(2);
        let up = psd_order_leq(&z, &i, 0.0).unwrap();
        assert!(up.holds);
        assert_close(up.min_eig_of_difference, 1.0, 1e-14);
        let down = psd_order_leq(&i, &z, 0.0).unwrap();
        assert!(!down.holds);
        assert_close(down.min_eig_of_difference, -1.0, 1e-14);
        assert!(psd_order_leq(&z, &i, -1.0).is_err());
        assert!(psd_order_leq(&z, &SymMatrix::identity(3), 0.0).is_err());
    }

    #[test]
    fn psd_order_resolvent_contraction() {
        // (M+λ)^{-1} M (M+λ)^{-1} ⪯ (M+λ)^{-1} for PSD M: spectrally,
        // μ/(μ+λ)² ≤ 1/(μ+λ).
        let mut rng = SplitMix64::new(19);
        let m = random_sym(4, &mut rng).spectral_map(|mu| mu.abs()).unwrap();
        let lambda = 0.7;
        let lhs = m.resolvent_sandwich(lambda, &m).unwrap();
        let rhs = m.spectral_map(|mu| 1.0 / (mu + lambda)).unwrap();
        let res = psd_order_leq(&lhs, &rhs, 1e-12).unwrap();
        assert!(res.holds, "min eig {}", res.min_eig_of_difference);
    }

    #[test]
    fn convexity_check_examples() {
        let i2 = SymMatrix::identity(2);
        let (lhs, rhs, holds) = trace_inverse_convexity_check(&i2, &i2, &i2).unwrap();
        assert_close(lhs, 2.0, 1e-14);
        assert_close(rhs, 2.0, 1e-14);
        assert!(holds);

        let a = SymMatrix::from_diag(&[1.0, 4.0]).unwrap();
        let b = SymMatrix::from_diag(&[4.0, 1.0]).unwrap();
        let (lhs, rhs, holds) = trace_inverse_convexity_check(&a, &b, &i2).unwrap();
        assert_close(lhs, 0.8, 1e-14);
        assert_close(rhs, 1.25, 1e-14);
        assert!(holds);
    }

    #[test]
    fn convexity_rejects_indefinite() {
        let a = SymMatrix::from_diag(&[1.0, -1.0]).unwrap();
        let i2 = SymMatrix::identity(2);
        assert!(trace_inverse_convexity_check(&a, &i2, &i2).is_err());
    }

    #[test]
    fn trace_resolvent_matches_spectral_sum() {
        let mut rng = SplitMix64::new(55);
        let m = random_sym(5, &mut rng).spectral_map(|mu| mu.abs()).unwrap();
        let lambda = 0.3;
        let via_trace = m.trace_resolvent_product(lambda, &m).unwrap();
        let direct: f64 = m.eigenvalues().unwrap().iter().map(|&mu| mu / (mu + lambda)).sum();
        assert_close(via_trace, direct, 1e-10 * (1.0 + direct.abs()));
    }

    #[test]
    fn sqrt_psd_squares_back() {
        let mut rng = SplitMix64::new(91);
        let m = random_sym(4, &mut rng).spectral_map(|mu| mu.abs()).unwrap();
        let root = m.sqrt_psd().unwrap();
        // root² via the spectral map of root against m.
        let sq = root.spectral_map(|mu| mu * mu).unwrap();
        let err = sq.sub(&m).operator_norm().unwrap();
        assert!(err <= 1e-10 * (1.0 + m.operator_norm().unwrap()));
    }

    #[test]
    fn pow_psd_pseudo_inverse_convention() {
        let m = SymMatrix::from_diag(&[4.0, 0.0]).unwrap();
        let p = m.pow_psd(-0.5).unwrap();
        assert_close(p.at(0, 0), 0.5, 1e-14);
        assert_close(p.at(1, 1), 0.0, 0.0);
    }

    #[test]
    fn trace_product_is_entrywise_sum() {
        let a = SymMatrix::from_diag(&[1.0, 2.0]).unwrap();
        let b = SymMatrix::new(2, vec![3.0, 1.0, 1.0, 5.0]).unwrap();
        assert_close(trace_product(&a, &b).unwrap(), 3.0 + 10.0, 1e-14);
    }

    #[test]
    fn eigenbasis_matrix_round_trip() {
        let mut rng = SplitMix64::new(123);
        let m = random_sym(5, &mut rng);
        let s = random_sym(5, &mut rng);
        let e = m.eig().unwrap();
        let b = e.to_eigenbasis_matrix(&s);
        let back = e.from_eigenbasis_matrix(&b);
        let err = back.sub(&s).operator_norm().unwrap();
        assert!(err <= 1e-10 * (1.0 + s.operator_norm().unwrap()));
    }
}
