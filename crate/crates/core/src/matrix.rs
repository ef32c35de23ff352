//! Dense `n × n` complex matrix kernels on row-major slices.

use num_complex::Complex64;

pub type C64 = Complex64;

#[inline]
pub fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

pub fn identity(n: usize) -> Vec<C64> {
    let mut m = vec![zero(); n * n];
    for i in 0..n {
        m[i * n + i] = C64::new(1.0, 0.0);
    }
    m
}

/// Matrix unit `E_{ij}` (zero-based indices).
pub fn unit(n: usize, i: usize, j: usize) -> Vec<C64> {
    let mut m = vec![zero(); n * n];
    m[i * n + j] = C64::new(1.0, 0.0);
    m
}

pub fn diag(entries: &[C64]) -> Vec<C64> {
    let n = entries.len();
    let mut m = vec![zero(); n * n];
    for (i, &d) in entries.iter().enumerate() {
        m[i * n + i] = d;
    }
    m
}

/// `out = a · b`
#[inline]
pub fn mul_into(a: &[C64], b: &[C64], out: &mut [C64], n: usize) {
    for i in 0..n {
        for j in 0..n {
            let mut acc = zero();
            for k in 0..n {
                acc += a[i * n + k] * b[k * n + j];
            }
            out[i * n + j] = acc;
        }
    }
}

pub fn mul(a: &[C64], b: &[C64], n: usize) -> Vec<C64> {
    let mut out = vec![zero(); n * n];
    mul_into(a, b, &mut out, n);
    out
}

/// `out = a·b - b·a`
#[inline]
pub fn commutator_into(a: &[C64], b: &[C64], out: &mut [C64], n: usize) {
    for i in 0..n {
        for j in 0..n {
            let mut acc = zero();
            for k in 0..n {
                acc += a[i * n + k] * b[k * n + j] - b[i * n + k] * a[k * n + j];
            }
            out[i * n + j] = acc;
        }
    }
}

pub fn commutator(a: &[C64], b: &[C64], n: usize) -> Vec<C64> {
    let mut out = vec![zero(); n * n];
    commutator_into(a, b, &mut out, n);
    out
}

#[inline]
pub fn adjoint_into(a: &[C64], out: &mut [C64], n: usize) {
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = a[i * n + j].conj();
        }
    }
}

pub fn adjoint(a: &[C64], n: usize) -> Vec<C64> {
    let mut out = vec![zero(); n * n];
    adjoint_into(a, &mut out, n);
    out
}

pub fn transpose(a: &[C64], n: usize) -> Vec<C64> {
    let mut out = vec![zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = a[i * n + j];
        }
    }
    out
}

pub fn trace(a: &[C64], n: usize) -> C64 {
    (0..n).map(|i| a[i * n + i]).sum()
}

/// Frobenius pairing `trace(a · b*)`.
pub fn frobenius(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

pub fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

pub fn max_abs_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn scaled(a: &[C64], s: C64) -> Vec<C64> {
    a.iter().map(|x| x * s).collect()
}

pub fn add(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Eigenvalues of a Hermitian matrix (lower triangle trusted), descending.
pub fn hermitian_eigenvalues(a: &[C64], n: usize) -> Vec<f64> {
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        if i >= j {
            a[i * n + j]
        } else {
            a[j * n + i].conj()
        }
    });
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}
