//! Oracles shared by the integration suites. Deliberately naive dense
//! routines: they share no code path with the library's spectral solvers,
//! which is what makes them worth checking against.

#![allow(dead_code)]

use ridge_lab::linalg::SymMatrix;

/// Solves A·x = b by Gauss-Jordan elimination with partial pivoting.
pub fn gauss_jordan_solve(a: &[f64], d: usize, b: &[f64]) -> Vec<f64> {
    assert_eq!(a.len(), d * d);
    assert_eq!(b.len(), d);
    let w = d + 1;
    let mut m = vec![0.0; d * w];
    for i in 0..d {
        m[i * w..i * w + d].copy_from_slice(&a[i * d..(i + 1) * d]);
        m[i * w + d] = b[i];
    }
    for col in 0..d {
        let pivot = (col..d)
            .max_by(|&r1, &r2| {
                m[r1 * w + col].abs().partial_cmp(&m[r2 * w + col].abs()).unwrap()
            })
            .unwrap();
        assert!(m[pivot * w + col].abs() > 1e-300, "singular matrix fed to the oracle");
        if pivot != col {
            for j in 0..w {
                m.swap(col * w + j, pivot * w + j);
            }
        }
        let p = m[col * w + col];
        for j in col..w {
            m[col * w + j] /= p;
        }
        for row in 0..d {
            if row == col {
                continue;
            }
            let f = m[row * w + col];
            if f != 0.0 {
                for j in col..w {
                    m[row * w + j] -= f * m[col * w + j];
                }
            }
        }
    }
    (0..d).map(|i| m[i * w + d]).collect()
}

/// Dense inverse via one Gauss-Jordan solve per basis vector.
pub fn gj_inverse(a: &[f64], d: usize) -> Vec<f64> {
    let mut inv = vec![0.0; d * d];
    for j in 0..d {
        let mut e = vec![0.0; d];
        e[j] = 1.0;
        let col = gauss_jordan_solve(a, d, &e);
        for i in 0..d {
            inv[i * d + j] = col[i];
        }
    }
    inv
}

pub fn mat_mul(a: &[f64], b: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for k in 0..d {
            let aik = a[i * d + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..d {
                out[i * d + j] += aik * b[k * d + j];
            }
        }
    }
    out
}

pub fn mat_trace(a: &[f64], d: usize) -> f64 {
    (0..d).map(|i| a[i * d + i]).sum()
}

/// Row-major entries of a symmetric matrix with λ added to the diagonal.
pub fn shifted_entries(m: &SymMatrix, lambda: f64) -> Vec<f64> {
    let d = m.dim();
    let mut a = m.entries().to_vec();
    for i in 0..d {
        a[i * d + i] += lambda;
    }
    a
}

/// Eigenvalues of the symmetric 2×2 matrix [[a, b], [b, c]], ascending.
pub fn eig2(a: f64, b: f64, c: f64) -> (f64, f64) {
    let mean = 0.5 * (a + c);
    let r = (0.5 * (a - c)).hypot(b);
    (mean - r, mean + r)
}

/// Every length-n sequence of design atoms with its probability; exact
/// expectations over small designs come from summing these.
pub fn enumerate_sequences(
    atoms: &[(Vec<f64>, f64)],
    n: usize,
) -> Vec<(Vec<Vec<f64>>, f64)> {
    let mut out = vec![(Vec::new(), 1.0)];
    for _ in 0..n {
        let mut next = Vec::with_capacity(out.len() * atoms.len());
        for (seq, p) in &out {
            for (atom, w) in atoms {
                let mut longer = seq.clone();
                longer.push(atom.clone());
                next.push((longer, p * w));
            }
        }
        out = next;
    }
    out
}

pub fn l2_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn l2_norm(a: &[f64]) -> f64 {
    a.iter().map(|&x| x * x).sum::<f64>().sqrt()
}
