//! Periodic square computational domain and its wavenumber lattice.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{CoreError, Result};
use crate::fft::Fft2;
use crate::gauge::FreeSpaceKernel;

/// A periodic `n x n` box of side `length` centred at the origin.
///
/// Sample `(i, j)` sits at `x = (-L/2 + i h, -L/2 + j h)`; the first index
/// runs along `x1`. Cloning is cheap: the FFT plans and cached gauge kernels
/// are shared.
#[derive(Clone)]
pub struct Grid2D {
    inner: Arc<GridInner>,
}

struct GridInner {
    n: usize,
    length: f64,
    spacing: f64,
    /// Wavenumbers in transform order: 0, 1, ..., n/2-1, -n/2, ..., -1 (times 2 pi / L).
    k: Vec<f64>,
    /// Same lattice with the Nyquist entry zeroed, used for odd-order derivatives.
    k_odd: Vec<f64>,
    fft: Fft2,
    free_space: OnceLock<FreeSpaceKernel>,
}

impl fmt::Debug for Grid2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid2D")
            .field("n", &self.n())
            .field("length", &self.length())
            .finish()
    }
}

impl PartialEq for Grid2D {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.n() == other.n() && self.length() == other.length())
    }
}

/// Builds a grid with `n` points per side (even, at least 4) on a box of side `length`.
pub fn make_grid(n: usize, length: f64) -> Result<Grid2D> {
    Grid2D::new(n, length)
}

impl Grid2D {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 4 {
            return Err(CoreError::InvalidGrid(format!("n = {n} is below the minimum of 4")));
        }
        if n % 2 != 0 {
            return Err(CoreError::InvalidGrid(format!("n = {n} must be even")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(CoreError::InvalidGrid(format!("length = {length} must be positive")));
        }
        let k = wavenumbers(n, length);
        let mut k_odd = k.clone();
        k_odd[n / 2] = 0.0;
        Ok(Grid2D {
            inner: Arc::new(GridInner {
                n,
                length,
                spacing: length / n as f64,
                k,
                k_odd,
                fft: Fft2::new(n),
                free_space: OnceLock::new(),
            }),
        })
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn length(&self) -> f64 {
        self.inner.length
    }

    pub fn spacing(&self) -> f64 {
        self.inner.spacing
    }

    /// Number of samples, `n^2`.
    pub fn len(&self) -> usize {
        self.inner.n * self.inner.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight of every sample, `h^2`.
    pub fn cell_area(&self) -> f64 {
        self.inner.spacing * self.inner.spacing
    }

    /// Coordinate of index `i` along either axis.
    pub fn coord(&self, i: usize) -> f64 {
        -0.5 * self.inner.length + i as f64 * self.inner.spacing
    }

    /// Per-axis wavenumbers in transform order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.inner.k
    }

    pub(crate) fn k_odd(&self) -> &[f64] {
        &self.inner.k_odd
    }

    pub(crate) fn fft(&self) -> &Fft2 {
        &self.inner.fft
    }

    pub(crate) fn free_space_kernel(&self) -> &FreeSpaceKernel {
        self.inner
            .free_space
            .get_or_init(|| FreeSpaceKernel::build(self))
    }

    /// Row-major index of sample `(i, j)`.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.inner.n + j
    }

    /// A grid with the same spacing and twice the side length.
    pub fn doubled(&self) -> Result<Grid2D> {
        Grid2D::new(2 * self.n(), 2.0 * self.length())
    }
}

fn wavenumbers(n: usize, length: f64) -> Vec<f64> {
    let dk = 2.0 * PI / length;
    (0..n)
        .map(|m| {
            let signed = if m < n / 2 { m as f64 } else { m as f64 - n as f64 };
            signed * dk
        })
        .collect()
}
