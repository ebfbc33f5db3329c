//! Self-generated Chern-Simons gauge fields and the smoothing resolvents.
//!
//! `A[f] = (grad_perp log|.|) * f` and `A*[F] = int (x-y)_perp/|x-y|^2 . F(y) dy`
//! are Fourier multipliers `-2 pi i k_perp / |k|^2` with `k_perp = (-k2, k1)`.
//! On the torus the `k = 0` mode is dropped, which amounts to a uniform
//! neutralizing background. [`Padding::Double`] instead evaluates the
//! free-space (aperiodic) convolution: the kernel is the gradient of the
//! logarithm truncated at the box diameter, whose Fourier transform is
//! smooth, sampled on a 4x grid and applied by a cyclic convolution on a 2x
//! zero-padded grid.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::fft::Fft2;
use crate::field::{ComplexField2D, VectorField2D};
use crate::grid::Grid2D;
use crate::spectral;

/// Largest tolerated `|Im| / peak` for inputs that must be real.
pub const REALNESS_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ZeroModePolicy {
    /// The `k = 0` multiplier is set to zero.
    #[default]
    Drop,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Padding {
    /// Periodic convolution on the computational box.
    #[default]
    None,
    /// Free-space convolution via a 2x zero-padded grid.
    Double,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GaugeOptions {
    pub zero_mode_policy: ZeroModePolicy,
    pub padding: Padding,
}

impl GaugeOptions {
    pub fn periodic() -> Self {
        GaugeOptions::default()
    }

    pub fn free_space() -> Self {
        GaugeOptions {
            padding: Padding::Double,
            ..GaugeOptions::default()
        }
    }
}

/// `A[f]` for a real density `f`.
pub fn gauge_a(density: &ComplexField2D, opts: &GaugeOptions) -> Result<VectorField2D> {
    ensure_real(density)?;
    let grid = density.grid();
    let (ax, ay) = potential(grid, opts, &density.real_parts());
    Ok(VectorField2D {
        x: ComplexField2D::from_real(grid, &ax)?,
        y: ComplexField2D::from_real(grid, &ay)?,
    })
}

/// `A*[F]` for a real vector field `F`.
pub fn gauge_conv(current: &VectorField2D, opts: &GaugeOptions) -> Result<ComplexField2D> {
    ensure_real(&current.x)?;
    ensure_real(&current.y)?;
    let grid = current.grid();
    let out = conv(grid, opts, &current.x.real_parts(), &current.y.real_parts());
    ComplexField2D::from_real(grid, &out)
}

/// `(1 - eps^(1/4) Laplacian)^-1 field`.
pub fn mollify(field: &ComplexField2D, eps: f64) -> Result<ComplexField2D> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(CoreError::param("eps", format!("{eps} must be positive")));
    }
    let grid = field.grid();
    let k = grid.wavenumbers();
    let c = eps.powf(0.25);
    let out = spectral::filter(grid, field.values(), |m1, m2| {
        1.0 / (1.0 + c * (k[m1] * k[m1] + k[m2] * k[m2]))
    });
    Ok(ComplexField2D::from_vec_unchecked(grid, out))
}

/// `(1 + eps Laplacian^2)^-1 field`; `eps = 0` is the identity.
pub fn regularized_resolvent(field: &ComplexField2D, eps: f64) -> Result<ComplexField2D> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(CoreError::param("eps", format!("{eps} must be nonnegative")));
    }
    let grid = field.grid();
    Ok(ComplexField2D::from_vec_unchecked(
        grid,
        resolvent_raw(grid, field.values(), eps),
    ))
}

pub(crate) fn resolvent_raw(grid: &Grid2D, values: &[Complex64], eps: f64) -> Vec<Complex64> {
    if eps == 0.0 {
        return values.to_vec();
    }
    let k = grid.wavenumbers();
    spectral::filter(grid, values, |m1, m2| {
        let k2 = k[m1] * k[m1] + k[m2] * k[m2];
        1.0 / (1.0 + eps * k2 * k2)
    })
}

fn ensure_real(field: &ComplexField2D) -> Result<()> {
    let ratio = field.imaginary_ratio();
    if ratio > REALNESS_TOLERANCE {
        Err(CoreError::NotReal { ratio })
    } else {
        Ok(())
    }
}

/// Components `(A_x, A_y)` of `A[density]`.
pub(crate) fn potential(grid: &Grid2D, opts: &GaugeOptions, density: &[f64]) -> (Vec<f64>, Vec<f64>) {
    match opts.padding {
        Padding::None => {
            let mut spec: Vec<Complex64> = density.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            let fft = grid.fft();
            fft.forward(&mut spec);
            let n = grid.n();
            let k = grid.wavenumbers();
            let ko = grid.k_odd();
            for m1 in 0..n {
                for m2 in 0..n {
                    let idx = m1 * n + m2;
                    let (mx, my) = periodic_multiplier(k, ko, m1, m2);
                    spec[idx] *= mx + Complex64::i() * my;
                }
            }
            fft.inverse(&mut spec);
            spec.into_iter().map(|v| (v.re, v.im)).unzip()
        }
        Padding::Double => grid.free_space_kernel().potential(density),
    }
}

/// `A*[(fx, fy)]`.
pub(crate) fn conv(grid: &Grid2D, opts: &GaugeOptions, fx: &[f64], fy: &[f64]) -> Vec<f64> {
    match opts.padding {
        Padding::None => {
            let n = grid.n();
            let mut z: Vec<Complex64> = fx.iter().zip(fy).map(|(&a, &b)| Complex64::new(a, b)).collect();
            let fft = grid.fft();
            fft.forward(&mut z);
            let k = grid.wavenumbers();
            let ko = grid.k_odd();
            let out = combine_packed(n, &z, |m1, m2| periodic_multiplier(k, ko, m1, m2));
            let mut out = out;
            fft.inverse(&mut out);
            out.into_iter().map(|v| v.re).collect()
        }
        Padding::Double => grid.free_space_kernel().conv(fx, fy),
    }
}

/// The pair of purely imaginary multipliers `(m_x, m_y)` returned as the
/// coefficients of `i`: `A_x^ = i m_x f^`, `A_y^ = i m_y f^`.
#[inline]
fn periodic_multiplier(k: &[f64], ko: &[f64], m1: usize, m2: usize) -> (Complex64, Complex64) {
    let k2 = k[m1] * k[m1] + k[m2] * k[m2];
    if k2 == 0.0 {
        return (Complex64::default(), Complex64::default());
    }
    // -2 pi i k_perp / |k|^2, k_perp = (-k2, k1)
    let s = 2.0 * PI / k2;
    (Complex64::new(0.0, s * ko[m2]), Complex64::new(0.0, -s * ko[m1]))
}

/// Given `Z = FFT(fx + i fy)` for real `fx, fy`, returns
/// `mx * FFT(fx) + my * FFT(fy)`.
fn combine_packed(
    n: usize,
    z: &[Complex64],
    mult: impl Fn(usize, usize) -> (Complex64, Complex64),
) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); z.len()];
    for m1 in 0..n {
        let r1 = (n - m1) % n;
        for m2 in 0..n {
            let r2 = (n - m2) % n;
            let a = z[m1 * n + m2];
            let b = z[r1 * n + r2].conj();
            let fx = 0.5 * (a + b);
            let fy = Complex64::new(0.0, -0.5) * (a - b);
            let (mx, my) = mult(m1, m2);
            out[m1 * n + m2] = mx * fx + my * fy;
        }
    }
    out
}

/// Transformed free-space kernels on the 2x grid.
pub(crate) struct FreeSpaceKernel {
    n: usize,
    fft: Fft2,
    mx: Vec<Complex64>,
    my: Vec<Complex64>,
}

/// Fourier transform of `log|x|` restricted to `|x| < r`.
fn truncated_log_transform(k: f64, r: f64) -> f64 {
    let z = k * r;
    let log_r = r.ln();
    if z < 1e-2 {
        let z2 = z * z;
        let j1_over_z = 0.5 - z2 / 16.0 + z2 * z2 / 384.0;
        let one_minus_j0_over_z2 = 0.25 - z2 / 64.0 + z2 * z2 / 2304.0;
        2.0 * PI * r * r * (log_r * j1_over_z - one_minus_j0_over_z2)
    } else {
        2.0 * PI * (r * log_r * libm::j1(z) / k - (1.0 - libm::j0(z)) / (k * k))
    }
}

impl FreeSpaceKernel {
    pub(crate) fn build(grid: &Grid2D) -> Self {
        let n = grid.n();
        let l = grid.length();
        let radius = SQRT_2 * l;

        // Real-space kernels W_x + i W_y on the 4x grid (period 4L, same spacing).
        let n4 = 4 * n;
        let dk = 2.0 * PI / (4.0 * l);
        let wave = |m: usize, len: usize| -> f64 {
            if m < len / 2 {
                m as f64 * dk
            } else {
                (m as f64 - len as f64) * dk
            }
        };
        let mut w4 = vec![Complex64::default(); n4 * n4];
        for m1 in 0..n4 {
            let k1 = wave(m1, n4);
            let k1o = if m1 == n4 / 2 { 0.0 } else { k1 };
            for m2 in 0..n4 {
                let k2 = wave(m2, n4);
                let k2o = if m2 == n4 / 2 { 0.0 } else { k2 };
                let g = truncated_log_transform((k1 * k1 + k2 * k2).sqrt(), radius);
                // i k_perp g, packed as x + i y
                let wx = Complex64::new(0.0, -k2o * g);
                let wy = Complex64::new(0.0, k1o * g);
                w4[m1 * n4 + m2] = wx + Complex64::i() * wy;
            }
        }
        Fft2::new(n4).inverse(&mut w4);

        // Offsets |p| <= n-1 per axis, placed cyclically on the 2x grid.
        let n2 = 2 * n;
        let mut w2 = vec![Complex64::default(); n2 * n2];
        let span = n as isize - 1;
        for p1 in -span..=span {
            let s1 = p1.rem_euclid(n4 as isize) as usize;
            let d1 = p1.rem_euclid(n2 as isize) as usize;
            for p2 in -span..=span {
                let s2 = p2.rem_euclid(n4 as isize) as usize;
                let d2 = p2.rem_euclid(n2 as isize) as usize;
                w2[d1 * n2 + d2] = w4[s1 * n4 + s2];
            }
        }
        drop(w4);
        let fft = Fft2::new(n2);
        fft.forward(&mut w2);
        // unpack FFT(W_x), FFT(W_y) from FFT(W_x + i W_y)
        let mut mx = vec![Complex64::default(); n2 * n2];
        let mut my = vec![Complex64::default(); n2 * n2];
        for m1 in 0..n2 {
            let r1 = (n2 - m1) % n2;
            for m2 in 0..n2 {
                let r2 = (n2 - m2) % n2;
                let a = w2[m1 * n2 + m2];
                let b = w2[r1 * n2 + r2].conj();
                mx[m1 * n2 + m2] = 0.5 * (a + b);
                my[m1 * n2 + m2] = Complex64::new(0.0, -0.5) * (a - b);
            }
        }
        FreeSpaceKernel { n, fft, mx, my }
    }

    fn pad(&self, a: &[f64], b: &[f64]) -> Vec<Complex64> {
        let n = self.n;
        let n2 = 2 * n;
        let mut buf = vec![Complex64::default(); n2 * n2];
        for i in 0..n {
            for j in 0..n {
                buf[i * n2 + j] = Complex64::new(a[i * n + j], b[i * n + j]);
            }
        }
        buf
    }

    fn potential(&self, density: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.n;
        let n2 = 2 * n;
        let zeros = vec![0.0; density.len()];
        let mut buf = self.pad(density, &zeros);
        self.fft.forward(&mut buf);
        for (idx, v) in buf.iter_mut().enumerate() {
            *v *= self.mx[idx] + Complex64::i() * self.my[idx];
        }
        self.fft.inverse(&mut buf);
        let mut ax = Vec::with_capacity(n * n);
        let mut ay = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let v = buf[i * n2 + j];
                ax.push(v.re);
                ay.push(v.im);
            }
        }
        (ax, ay)
    }

    fn conv(&self, fx: &[f64], fy: &[f64]) -> Vec<f64> {
        let n = self.n;
        let n2 = 2 * n;
        let mut buf = self.pad(fx, fy);
        self.fft.forward(&mut buf);
        let mut out = combine_packed(n2, &buf, |m1, m2| {
            let idx = m1 * n2 + m2;
            (self.mx[idx], self.my[idx])
        });
        self.fft.inverse(&mut out);
        let mut res = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                res.push(out[i * n2 + j].re);
            }
        }
        res
    }
}
