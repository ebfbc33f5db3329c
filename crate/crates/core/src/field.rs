//! Sampled complex and vector fields with grid quadrature.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{CoreError, Result};
use crate::grid::Grid2D;

/// `n x n` complex samples on a [`Grid2D`], row-major.
#[derive(Clone, Debug)]
pub struct ComplexField2D {
    grid: Grid2D,
    values: Vec<Complex64>,
}

/// A pair of fields `(x, y)` on one grid.
#[derive(Clone, Debug)]
pub struct VectorField2D {
    pub x: ComplexField2D,
    pub y: ComplexField2D,
}

impl ComplexField2D {
    pub fn new(grid: &Grid2D, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(CoreError::ShapeMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        Ok(ComplexField2D {
            grid: grid.clone(),
            values,
        })
    }

    pub(crate) fn from_vec_unchecked(grid: &Grid2D, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        ComplexField2D {
            grid: grid.clone(),
            values,
        }
    }

    pub fn zeros(grid: &Grid2D) -> Self {
        ComplexField2D::from_vec_unchecked(grid, vec![Complex64::default(); grid.len()])
    }

    /// Samples `f(x1, x2)` at every grid point.
    pub fn from_fn(grid: &Grid2D, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..n {
            let x1 = grid.coord(i);
            for j in 0..n {
                values.push(f(x1, grid.coord(j)));
            }
        }
        ComplexField2D::from_vec_unchecked(grid, values)
    }

    pub fn from_real(grid: &Grid2D, values: &[f64]) -> Result<Self> {
        ComplexField2D::new(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub(crate) fn ensure_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(CoreError::NonFinite)
        }
    }

    pub(crate) fn ensure_same_grid(&self, other: &ComplexField2D) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(CoreError::GridMismatch)
        }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        ComplexField2D::from_vec_unchecked(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        self.map(|v| v * factor)
    }

    /// `self + factor * other`.
    pub fn axpy(&self, factor: Complex64, other: &ComplexField2D) -> Result<Self> {
        self.ensure_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + factor * b)
            .collect();
        Ok(ComplexField2D::from_vec_unchecked(&self.grid, values))
    }

    pub fn sub(&self, other: &ComplexField2D) -> Result<Self> {
        self.axpy(Complex64::new(-1.0, 0.0), other)
    }

    /// Real parts as a plain vector.
    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    /// Largest `|Im|` relative to the largest `|value|`; 0 for the zero field.
    pub fn imaginary_ratio(&self) -> f64 {
        let peak = self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max) / peak
    }

    /// `|psi|^2` as plain reals.
    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    /// `int |psi|^2`.
    pub fn mass(&self) -> f64 {
        self.grid.cell_area() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    /// Rescales to the requested mass. Fails on the zero field.
    pub fn with_mass(&self, mass: f64) -> Result<Self> {
        let current = self.mass();
        if current == 0.0 {
            return Err(CoreError::ZeroField);
        }
        Ok(self.scaled(Complex64::new((mass / current).sqrt(), 0.0)))
    }

    /// Fraction of the mass inside the central half box `|x1|, |x2| < L/4`.
    pub fn central_mass_fraction(&self) -> f64 {
        let total = self.mass();
        if total == 0.0 {
            return 1.0;
        }
        let n = self.grid.n();
        let quarter = 0.25 * self.grid.length();
        let mut inside = 0.0;
        for i in 0..n {
            if self.grid.coord(i).abs() >= quarter {
                continue;
            }
            for j in 0..n {
                if self.grid.coord(j).abs() < quarter {
                    inside += self.values[i * n + j].norm_sqr();
                }
            }
        }
        inside * self.grid.cell_area() / total
    }
}

impl VectorField2D {
    pub fn new(x: ComplexField2D, y: ComplexField2D) -> Result<Self> {
        x.ensure_same_grid(&y)?;
        Ok(VectorField2D { x, y })
    }

    pub fn zeros(grid: &Grid2D) -> Self {
        VectorField2D {
            x: ComplexField2D::zeros(grid),
            y: ComplexField2D::zeros(grid),
        }
    }

    pub fn grid(&self) -> &Grid2D {
        self.x.grid()
    }

    pub fn imaginary_ratio(&self) -> f64 {
        self.x.imaginary_ratio().max(self.y.imaginary_ratio())
    }

    /// Pointwise Euclidean magnitude `sqrt(|x|^2 + |y|^2)`.
    pub fn magnitude(&self) -> Vec<f64> {
        self.x
            .values()
            .iter()
            .zip(self.y.values())
            .map(|(a, b)| (a.norm_sqr() + b.norm_sqr()).sqrt())
            .collect()
    }

    /// `int conj(self) . other`.
    pub fn inner_product(&self, other: &VectorField2D) -> Result<Complex64> {
        Ok(inner_product(&self.x, &other.x)? + inner_product(&self.y, &other.y)?)
    }
}

/// `L^p` norm with uniform quadrature; `p = f64::INFINITY` gives the sup norm.
pub fn lp_norm(field: &ComplexField2D, p: f64) -> Result<f64> {
    lp_norm_of_magnitudes(field.grid(), field.values().iter().map(|v| v.norm()), p)
}

pub(crate) fn lp_norm_of_magnitudes(
    grid: &Grid2D,
    magnitudes: impl Iterator<Item = f64>,
    p: f64,
) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(CoreError::param("p", format!("{p} is below 1")));
    }
    if p.is_infinite() {
        return Ok(magnitudes.fold(0.0, f64::max));
    }
    let sum: f64 = if p == 2.0 {
        magnitudes.map(|m| m * m).sum()
    } else {
        magnitudes.map(|m| m.powf(p)).sum()
    };
    Ok((grid.cell_area() * sum).powf(1.0 / p))
}

/// `int conj(f) g`, conjugate-linear in the first argument.
pub fn inner_product(f: &ComplexField2D, g: &ComplexField2D) -> Result<Complex64> {
    f.ensure_same_grid(g)?;
    Ok(raw_inner(f.values(), g.values()) * f.grid().cell_area())
}

pub(crate) fn raw_inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn raw_norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum()
}

/// Unit-mass Gaussian `(2/pi)^(1/2) exp(-|x - c|^2)` scaled to `mass`.
pub fn gaussian(grid: &Grid2D, center: (f64, f64), width: f64, mass: f64) -> ComplexField2D {
    let raw = ComplexField2D::from_fn(grid, |x1, x2| {
        let r2 = (x1 - center.0).powi(2) + (x2 - center.1).powi(2);
        Complex64::new((-r2 / (width * width)).exp(), 0.0)
    });
    raw.with_mass(mass).unwrap_or(raw)
}

/// `(x1 + i x2)^m exp(-|x|^2 / 2)` for `m >= 0`, `(x1 - i x2)^|m| exp(..)` for `m < 0`.
pub fn vortex(grid: &Grid2D, winding: i32, mass: f64) -> ComplexField2D {
    let raw = ComplexField2D::from_fn(grid, |x1, x2| {
        let z = if winding >= 0 {
            Complex64::new(x1, x2)
        } else {
            Complex64::new(x1, -x2)
        };
        z.powu(winding.unsigned_abs()) * (-(x1 * x1 + x2 * x2) / 2.0).exp()
    });
    raw.with_mass(mass).unwrap_or(raw)
}

/// A smooth localized complex field: a sum of a few Gaussian packets with
/// random centres, widths, amplitudes and momenta, kept in the central
/// third of the box.
pub fn random_smooth(grid: &Grid2D, rng: &mut impl Rng) -> ComplexField2D {
    let third = grid.length() / 6.0;
    let count = rng.gen_range(1..=4);
    let packets: Vec<_> = (0..count)
        .map(|_| {
            let c = (rng.gen_range(-third..third), rng.gen_range(-third..third));
            let w = rng.gen_range(0.8..2.0);
            let amp = Complex64::from_polar(rng.gen_range(0.3..1.0), rng.gen_range(0.0..std::f64::consts::TAU));
            let p = (rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
            (c, w, amp, p)
        })
        .collect();
    ComplexField2D::from_fn(grid, |x1, x2| {
        packets
            .iter()
            .map(|&((c1, c2), w, amp, (p1, p2))| {
                let r2 = (x1 - c1).powi(2) + (x2 - c2).powi(2);
                amp * (-r2 / (w * w)).exp() * Complex64::from_polar(1.0, p1 * x1 + p2 * x2)
            })
            .sum()
    })
}
