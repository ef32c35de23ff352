//! Discrete unit-area square torus and its Fourier layout.
//!
//! Sites are indexed `s = j * N + k` with coordinates `(x, y) = (j/N, k/N)`.
//! The Fourier mode stored at index `s` is `e^{2πi(px + qy)}` where `p` and
//! `q` are the signed wavenumbers of `j` and `k` in `[-N/2, N/2)`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub const MIN_SIDE: usize = 8;
pub const MAX_SIDE: usize = 512;

pub struct TorusGrid {
    side: usize,
    wavenumbers: Vec<i64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// Spectral multiplier of `∂_z` per mode, Nyquist zeroed.
    dz: Vec<Complex64>,
    /// Spectral multiplier of `∂_z̄` per mode, Nyquist zeroed.
    dzbar: Vec<Complex64>,
}

pub type Grid = Arc<TorusGrid>;

/// Builds the unit-area square torus with `side × side` sites.
pub fn make_grid(side: usize) -> Result<Grid> {
    if !side.is_multiple_of(2) || !(MIN_SIDE..=MAX_SIDE).contains(&side) {
        return Err(Error::InvalidGrid(side));
    }
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(side);
    let inv = planner.plan_fft_inverse(side);
    let half = (side / 2) as i64;
    let wavenumbers: Vec<i64> = (0..side as i64)
        .map(|i| if i < half { i } else { i - side as i64 })
        .collect();
    let mut dz = Vec::with_capacity(side * side);
    let mut dzbar = Vec::with_capacity(side * side);
    for &p in &wavenumbers {
        for &q in &wavenumbers {
            if p == -half || q == -half {
                dz.push(Complex64::new(0.0, 0.0));
                dzbar.push(Complex64::new(0.0, 0.0));
            } else {
                let (p, q) = (p as f64, q as f64);
                // πi(p - iq) and πi(p + iq)
                dz.push(Complex64::new(PI * q, PI * p));
                dzbar.push(Complex64::new(-PI * q, PI * p));
            }
        }
    }
    Ok(Arc::new(TorusGrid {
        side,
        wavenumbers,
        fwd,
        inv,
        dz,
        dzbar,
    }))
}

impl TorusGrid {
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn sites(&self) -> usize {
        self.side * self.side
    }

    /// Always 1: the torus is normalized to unit area.
    pub fn area(&self) -> f64 {
        1.0
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.side as f64
    }

    /// Signed wavenumber of a one-dimensional FFT index.
    pub fn wavenumber(&self, index: usize) -> i64 {
        self.wavenumbers[index]
    }

    /// `(p, q)` of the mode stored at site index `s`.
    pub fn mode(&self, s: usize) -> (i64, i64) {
        (
            self.wavenumbers[s / self.side],
            self.wavenumbers[s % self.side],
        )
    }

    /// Site index holding mode `(p, q)`; wavenumbers are taken mod N.
    pub fn mode_index(&self, p: i64, q: i64) -> usize {
        let n = self.side as i64;
        (p.rem_euclid(n) * n + q.rem_euclid(n)) as usize
    }

    /// Index of the mode `-k` for the mode stored at `s`.
    pub fn negated_mode(&self, s: usize) -> usize {
        let (p, q) = self.mode(s);
        self.mode_index(-p, -q)
    }

    pub fn coords(&self, s: usize) -> (f64, f64) {
        let h = self.spacing();
        ((s / self.side) as f64 * h, (s % self.side) as f64 * h)
    }

    pub fn is_nyquist(&self, s: usize) -> bool {
        let half = (self.side / 2) as i64;
        let (p, q) = self.mode(s);
        p == -half || q == -half
    }

    pub fn dz_multiplier(&self) -> &[Complex64] {
        &self.dz
    }

    pub fn dzbar_multiplier(&self) -> &[Complex64] {
        &self.dzbar
    }

    /// Largest `|∂_z̄|` multiplier over resolved modes.
    pub fn max_derivative_multiplier(&self) -> f64 {
        self.dzbar.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// In-place unnormalized forward 2D transform of one `N × N` plane.
    pub fn fft2(&self, plane: &mut [Complex64], scratch: &mut [Complex64]) {
        self.transform(plane, scratch, &self.fwd);
    }

    /// In-place inverse 2D transform, normalized so `ifft2(fft2(f)) = f`.
    pub fn ifft2(&self, plane: &mut [Complex64], scratch: &mut [Complex64]) {
        self.transform(plane, scratch, &self.inv);
        let scale = 1.0 / self.sites() as f64;
        for v in plane.iter_mut() {
            *v *= scale;
        }
    }

    fn transform(&self, plane: &mut [Complex64], scratch: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.side;
        debug_assert_eq!(plane.len(), n * n);
        debug_assert_eq!(scratch.len(), n * n);
        // along y (contiguous), then along x via transpose
        fft.process(plane);
        transpose(plane, scratch, n);
        fft.process(scratch);
        transpose(scratch, plane, n);
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    for j in 0..n {
        for k in 0..n {
            dst[k * n + j] = src[j * n + k];
        }
    }
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid").field("side", &self.side).finish()
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.side == other.side
    }
}
