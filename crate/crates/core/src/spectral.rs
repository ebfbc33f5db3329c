//! Fourier transforms and spectral derivatives on a [`Grid2D`].
//!
//! The forward transform approximates the continuum transform
//! `f^(k) = int f(x) exp(-i k.(x + L/2)) dx` by `h^2` times the DFT, so
//! Parseval reads `int |f|^2 = L^-2 sum_k |f^(k)|^2`. Odd-order multipliers
//! (`i k`, gauge kernels) drop the Nyquist mode so real fields stay real.

use num_complex::Complex64;

use crate::field::{ComplexField2D, VectorField2D};
use crate::grid::Grid2D;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Fourier coefficients of a field in transform order.
#[derive(Clone, Debug)]
pub struct Spectrum {
    grid: Grid2D,
    modes: Vec<Complex64>,
}

impl Spectrum {
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn modes(&self) -> &[Complex64] {
        &self.modes
    }

    /// Coefficient at wavenumber indices `(m1, m2)` in transform order.
    pub fn mode(&self, m1: usize, m2: usize) -> Complex64 {
        self.modes[self.grid.index(m1, m2)]
    }

    /// `L^-2 sum |f^(k)|^2`, equal to `int |f|^2` by Parseval.
    pub fn parseval_sum(&self) -> f64 {
        let l = self.grid.length();
        self.modes.iter().map(|m| m.norm_sqr()).sum::<f64>() / (l * l)
    }
}

pub fn forward(field: &ComplexField2D) -> Spectrum {
    let grid = field.grid();
    let mut modes = fft_forward(grid, field.values());
    let w = grid.cell_area();
    for m in modes.iter_mut() {
        *m *= w;
    }
    Spectrum {
        grid: grid.clone(),
        modes,
    }
}

pub fn inverse(spectrum: &Spectrum) -> ComplexField2D {
    let grid = &spectrum.grid;
    let w = 1.0 / grid.cell_area();
    let mut values: Vec<Complex64> = spectrum.modes.iter().map(|m| m * w).collect();
    grid.fft().inverse(&mut values);
    ComplexField2D::from_vec_unchecked(grid, values)
}

/// `(d/dx1, d/dx2)` of `field`.
pub fn spectral_gradient(field: &ComplexField2D) -> VectorField2D {
    let grid = field.grid();
    let spec = fft_forward(grid, field.values());
    let (gx, gy) = gradient_from_raw(grid, &spec);
    VectorField2D {
        x: ComplexField2D::from_vec_unchecked(grid, gx),
        y: ComplexField2D::from_vec_unchecked(grid, gy),
    }
}

/// Multiplier `-|k|^2` (full lattice, Nyquist included).
pub fn spectral_laplacian(field: &ComplexField2D) -> ComplexField2D {
    let grid = field.grid();
    let k = grid.wavenumbers();
    let out = filter(grid, field.values(), |m1, m2| -(k[m1] * k[m1] + k[m2] * k[m2]));
    ComplexField2D::from_vec_unchecked(grid, out)
}

/// `d v_x / dx1 + d v_y / dx2`.
pub fn spectral_divergence(v: &VectorField2D) -> ComplexField2D {
    let grid = v.grid();
    ComplexField2D::from_vec_unchecked(grid, divergence_raw(grid, v.x.values(), v.y.values()))
}

/// Scalar curl `d v_y / dx1 - d v_x / dx2`.
pub fn spectral_curl(v: &VectorField2D) -> ComplexField2D {
    let grid = v.grid();
    let ko = grid.k_odd();
    let n = grid.n();
    let sx = fft_forward(grid, v.x.values());
    let mut sy = fft_forward(grid, v.y.values());
    for m1 in 0..n {
        for m2 in 0..n {
            let idx = m1 * n + m2;
            sy[idx] = I * (ko[m1] * sy[idx] - ko[m2] * sx[idx]);
        }
    }
    grid.fft().inverse(&mut sy);
    ComplexField2D::from_vec_unchecked(grid, sy)
}

/// Mass-preserving dilation `s * f(s x)`, evaluated from the Fourier
/// interpolant of `f`. Points with `s x` outside the box get zero.
pub fn dilate(field: &ComplexField2D, s: f64) -> ComplexField2D {
    let grid = field.grid();
    let n = grid.n();
    let half = 0.5 * grid.length();
    let k = grid.k_odd();
    let mut coeffs = fft_forward(grid, field.values());
    let inv = 1.0 / n as f64;
    // 1-D interpolation matrix E[i][m] = exp(i k_m (s x_i + L/2)) / n
    let mut e = vec![Complex64::default(); n * n];
    let mut inside = vec![false; n];
    for i in 0..n {
        let xs = s * grid.coord(i);
        inside[i] = xs >= -half && xs < half;
        for m in 0..n {
            e[i * n + m] = Complex64::from_polar(inv, k[m] * (xs + half));
        }
    }
    // rows: t[m1][j] = sum_m2 c[m1][m2] E[j][m2]
    let mut t = vec![Complex64::default(); n * n];
    for m1 in 0..n {
        for j in 0..n {
            let mut acc = Complex64::default();
            for m2 in 0..n {
                acc += coeffs[m1 * n + m2] * e[j * n + m2];
            }
            t[m1 * n + j] = acc;
        }
    }
    for i in 0..n {
        for j in 0..n {
            let mut acc = Complex64::default();
            if inside[i] && inside[j] {
                for m1 in 0..n {
                    acc += e[i * n + m1] * t[m1 * n + j];
                }
            }
            coeffs[i * n + j] = acc * s;
        }
    }
    ComplexField2D::from_vec_unchecked(grid, coeffs)
}

pub(crate) fn fft_forward(grid: &Grid2D, values: &[Complex64]) -> Vec<Complex64> {
    let mut buf = values.to_vec();
    grid.fft().forward(&mut buf);
    buf
}

/// Applies a real mode-wise multiplier `m(m1, m2)` and transforms back.
pub(crate) fn filter(
    grid: &Grid2D,
    values: &[Complex64],
    multiplier: impl Fn(usize, usize) -> f64,
) -> Vec<Complex64> {
    let n = grid.n();
    let mut spec = fft_forward(grid, values);
    for m1 in 0..n {
        for m2 in 0..n {
            spec[m1 * n + m2] *= multiplier(m1, m2);
        }
    }
    grid.fft().inverse(&mut spec);
    spec
}

/// Drops every mode with a Nyquist index. Those modes have no discrete
/// derivative, so flows are kept out of them.
pub(crate) fn nyquist_free(grid: &Grid2D, v: &[Complex64]) -> Vec<Complex64> {
    let half = grid.n() / 2;
    filter(grid, v, |m1, m2| if m1 == half || m2 == half { 0.0 } else { 1.0 })
}

/// Gradient from a raw (unnormalized DFT) spectrum.
pub(crate) fn gradient_from_raw(grid: &Grid2D, spec: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = grid.n();
    let ko = grid.k_odd();
    let mut gx = vec![Complex64::default(); spec.len()];
    let mut gy = vec![Complex64::default(); spec.len()];
    for m1 in 0..n {
        for m2 in 0..n {
            let idx = m1 * n + m2;
            gx[idx] = I * ko[m1] * spec[idx];
            gy[idx] = I * ko[m2] * spec[idx];
        }
    }
    let fft = grid.fft();
    crate::par::join(|| fft.inverse(&mut gx), || fft.inverse(&mut gy));
    (gx, gy)
}

pub(crate) fn divergence_raw(grid: &Grid2D, vx: &[Complex64], vy: &[Complex64]) -> Vec<Complex64> {
    let n = grid.n();
    let ko = grid.k_odd();
    let (sx, mut sy) = crate::par::join(|| fft_forward(grid, vx), || fft_forward(grid, vy));
    for m1 in 0..n {
        for m2 in 0..n {
            let idx = m1 * n + m2;
            sy[idx] = I * (ko[m1] * sx[idx] + ko[m2] * sy[idx]);
        }
    }
    grid.fft().inverse(&mut sy);
    sy
}
