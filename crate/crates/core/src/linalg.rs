//! Small dense complex matrices stored row-major as `Vec<Complex64>`.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub fn identity(n: usize) -> Vec<Complex64> {
    let mut m = vec![Complex64::default(); n * n];
    for i in 0..n {
        m[i * n + i] = Complex64::new(1.0, 0.0);
    }
    m
}

pub fn to_dmatrix(n: usize, m: &[Complex64]) -> DMatrix<Complex64> {
    DMatrix::from_row_slice(n, n, m)
}

pub fn from_dmatrix(m: &DMatrix<Complex64>) -> Vec<Complex64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push(m[(i, j)]);
        }
    }
    out
}

pub fn matmul(n: usize, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == Complex64::default() {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

pub fn adjoint(n: usize, a: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); n * n];
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = a[i * n + j].conj();
        }
    }
    out
}

/// Largest `|A_jl − conj(A_lj)|`.
pub fn hermitian_residual(n: usize, a: &[Complex64]) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for l in j..n {
            worst = worst.max((a[j * n + l] - a[l * n + j].conj()).norm());
        }
    }
    worst
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Eigenvalues (ascending) and row-major eigenvector matrix `U` (eigenvectors in
/// columns) of a Hermitian matrix.
pub fn hermitian_eigen(n: usize, a: &[Complex64]) -> (Vec<f64>, Vec<Complex64>) {
    let eig = to_dmatrix(n, a).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut u = vec![Complex64::default(); n * n];
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            u[row * n + col] = eig.eigenvectors[(row, src)];
        }
    }
    (values, u)
}

pub fn min_eigenvalue(n: usize, a: &[Complex64]) -> f64 {
    if n == 1 {
        return a[0].re;
    }
    if n == 2 {
        // closed form for the common spin-½ case
        let (p, s) = (a[0].re, a[3].re);
        let off = a[1].norm_sqr().max(a[2].norm_sqr());
        let mean = 0.5 * (p + s);
        let half = 0.5 * (p - s);
        return mean - (half * half + off).sqrt();
    }
    to_dmatrix(n, a)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}
