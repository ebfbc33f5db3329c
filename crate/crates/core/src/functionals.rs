//! Energies, currents, the Lagrange multiplier, the variance moment and the
//! inequality audit.
//!
//! Everything is evaluated with the uniform quadrature of the grid. The
//! energy gradient is the exact derivative of the discrete energy, written
//! in conservative form `D^+ D psi - 2 beta A*[j] psi - 2 gamma |psi|^2 psi`
//! with `D = grad + i beta A[|psi|^2]` and `D^+ V = -div V - i beta A.V`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::field::{ComplexField2D, VectorField2D};
use crate::gauge::{self, GaugeOptions};
use crate::grid::Grid2D;
use crate::spectral;

/// Constant of the Hardy-type gauge inequality.
pub const HARDY_CONSTANT: f64 = 1.5;
/// Points with `|psi|` below this are skipped by the pointwise diamagnetic check.
pub const MODULUS_FLOOR: f64 = 1e-12;
/// Absolute per-point slack of the diamagnetic check.
pub const DIAMAGNETIC_SLACK: f64 = 1e-6;
/// Relative tolerance of every audit comparison.
pub const AUDIT_RELATIVE_SLACK: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicsParams {
    /// Magnetic self-interaction strength, `>= 0`.
    pub beta: f64,
    /// Interaction strength, positive when attractive.
    pub gamma: f64,
    /// Fourth-order regularization strength, `>= 0`.
    pub eps: f64,
    pub gauge: GaugeOptions,
}

impl PhysicsParams {
    pub fn new(beta: f64, gamma: f64, eps: f64) -> Result<Self> {
        let p = PhysicsParams {
            beta,
            gamma,
            eps,
            gauge: GaugeOptions::default(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_gauge(mut self, gauge: GaugeOptions) -> Self {
        self.gauge = gauge;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(CoreError::param("beta", format!("{} must be finite and >= 0", self.beta)));
        }
        if !self.gamma.is_finite() {
            return Err(CoreError::param("gamma", "must be finite"));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(CoreError::param("eps", format!("{} must be finite and >= 0", self.eps)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyBreakdown {
    pub mass: f64,
    /// `int |(grad + i beta A) psi|^2`
    pub covariant_kinetic: f64,
    /// `int |psi|^4`
    pub quartic: f64,
    /// `covariant_kinetic - gamma * quartic`
    pub energy: f64,
    pub plain_kinetic: f64,
    /// `beta^2 int |A psi|^2`
    pub gauge_quadratic: f64,
    /// `2 beta int A . J`
    pub cross_term: f64,
    /// `||grad psi||_2`
    pub grad_norm: f64,
    /// `int |x|^2 |psi|^2`
    pub variance: f64,
}

impl EnergyBreakdown {
    pub fn is_finite(&self) -> bool {
        [
            self.mass,
            self.covariant_kinetic,
            self.quartic,
            self.energy,
            self.plain_kinetic,
            self.gauge_quadratic,
            self.cross_term,
            self.grad_norm,
            self.variance,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Pointwise building blocks shared by the energy, its gradient and the audit.
pub(crate) struct Covariant {
    pub(crate) density: Vec<f64>,
    pub(crate) grad: (Vec<Complex64>, Vec<Complex64>),
    /// `A[|psi|^2]`; empty when `beta = 0`.
    pub(crate) a: (Vec<f64>, Vec<f64>),
    /// `D psi`
    pub(crate) cov: (Vec<Complex64>, Vec<Complex64>),
}

impl Covariant {
    pub(crate) fn new(grid: &Grid2D, psi: &[Complex64], beta: f64, opts: &GaugeOptions) -> Self {
        let density: Vec<f64> = psi.iter().map(|v| v.norm_sqr()).collect();
        let spec = spectral::fft_forward(grid, psi);
        let (grad, a) = crate::par::join(
            || spectral::gradient_from_raw(grid, &spec),
            || {
                if beta != 0.0 {
                    gauge::potential(grid, opts, &density)
                } else {
                    (Vec::new(), Vec::new())
                }
            },
        );
        let cov = if beta != 0.0 {
            let shift = |g: &[Complex64], a: &[f64]| -> Vec<Complex64> {
                g.iter()
                    .zip(a)
                    .zip(psi)
                    .map(|((g, a), p)| g + Complex64::new(0.0, beta * a) * p)
                    .collect()
            };
            (shift(&grad.0, &a.0), shift(&grad.1, &a.1))
        } else {
            grad.clone()
        };
        Covariant { density, grad, a, cov }
    }

    pub(crate) fn has_gauge(&self) -> bool {
        !self.a.0.is_empty()
    }
}

pub(crate) fn sum_sq(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Gauged current `Im(conj(psi) D psi)` per component.
fn covariant_current(psi: &[Complex64], cov: &[Complex64]) -> Vec<f64> {
    psi.iter().zip(cov).map(|(p, d)| (p.conj() * d).im).collect()
}

/// Every term of the energy gradient except `-div D psi`.
fn gradient_pointwise(
    grid: &Grid2D,
    psi: &[Complex64],
    c: &Covariant,
    beta: f64,
    gamma: f64,
    opts: &GaugeOptions,
) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = psi
        .iter()
        .zip(&c.density)
        .map(|(p, rho)| -2.0 * gamma * rho * p)
        .collect();
    if c.has_gauge() {
        let jx = covariant_current(psi, &c.cov.0);
        let jy = covariant_current(psi, &c.cov.1);
        let astar = gauge::conv(grid, opts, &jx, &jy);
        for (idx, o) in out.iter_mut().enumerate() {
            let a_dot = c.a.0[idx] * c.cov.0[idx] + c.a.1[idx] * c.cov.1[idx];
            *o += Complex64::new(0.0, -beta) * a_dot - 2.0 * beta * astar[idx] * psi[idx];
        }
    }
    out
}

/// Exact gradient of the discrete energy: `dE(psi + s delta)/ds = 2 Re <delta, G>`.
pub(crate) fn energy_gradient_raw(
    grid: &Grid2D,
    psi: &[Complex64],
    c: &Covariant,
    beta: f64,
    gamma: f64,
    opts: &GaugeOptions,
) -> Vec<Complex64> {
    let div = spectral::divergence_raw(grid, &c.cov.0, &c.cov.1);
    let mut out = gradient_pointwise(grid, psi, c, beta, gamma, opts);
    out.iter_mut().zip(&div).for_each(|(o, d)| *o -= d);
    out
}

/// The energy gradient with its Nyquist modes removed and, for `eps > 0`,
/// passed through `(1 + eps Laplacian^2)^-1`. For Nyquist-free `delta` this
/// is still the exact derivative; it is the velocity field of the flows,
/// which therefore never excite the unresolved Nyquist modes.
pub(crate) fn energy_gradient_projected(
    grid: &Grid2D,
    psi: &[Complex64],
    c: &Covariant,
    beta: f64,
    gamma: f64,
    opts: &GaugeOptions,
    eps: f64,
) -> Vec<Complex64> {
    let n = grid.n();
    let half = n / 2;
    let k = grid.wavenumbers();
    let pointwise = gradient_pointwise(grid, psi, c, beta, gamma, opts);
    let ((sx, sy), mut sp) = crate::par::join(
        || {
            crate::par::join(
                || spectral::fft_forward(grid, &c.cov.0),
                || spectral::fft_forward(grid, &c.cov.1),
            )
        },
        || spectral::fft_forward(grid, &pointwise),
    );
    for m1 in 0..n {
        for m2 in 0..n {
            let idx = m1 * n + m2;
            if m1 == half || m2 == half {
                sp[idx] = Complex64::default();
                continue;
            }
            let div = Complex64::i() * (k[m1] * sx[idx] + k[m2] * sy[idx]);
            let mut v = sp[idx] - div;
            if eps > 0.0 {
                let k2 = k[m1] * k[m1] + k[m2] * k[m2];
                v /= 1.0 + eps * k2 * k2;
            }
            sp[idx] = v;
        }
    }
    grid.fft().inverse(&mut sp);
    sp
}

/// `J = Im(conj(psi) grad psi)`.
pub fn current_j(psi: &ComplexField2D) -> VectorField2D {
    let grad = spectral::spectral_gradient(psi);
    let im = |g: &ComplexField2D| {
        let v = psi
            .values()
            .iter()
            .zip(g.values())
            .map(|(p, d)| Complex64::new((p.conj() * d).im, 0.0))
            .collect();
        ComplexField2D::from_vec_unchecked(psi.grid(), v)
    };
    VectorField2D {
        x: im(&grad.x),
        y: im(&grad.y),
    }
}

/// `j_beta = J + beta A[|psi|^2] |psi|^2`.
pub fn current_jbeta(psi: &ComplexField2D, beta: f64, opts: &GaugeOptions) -> VectorField2D {
    let grid = psi.grid();
    let c = Covariant::new(grid, psi.values(), beta, opts);
    let comp = |cov: &[Complex64]| {
        let v = covariant_current(psi.values(), cov)
            .into_iter()
            .map(|j| Complex64::new(j, 0.0))
            .collect();
        ComplexField2D::from_vec_unchecked(grid, v)
    };
    VectorField2D {
        x: comp(&c.cov.0),
        y: comp(&c.cov.1),
    }
}

pub(crate) fn breakdown_from(
    grid: &Grid2D,
    psi: &[Complex64],
    c: &Covariant,
    beta: f64,
    gamma: f64,
) -> EnergyBreakdown {
    let w = grid.cell_area();
    let mass = c.density.iter().sum::<f64>() * w;
    let quartic = c.density.iter().map(|r| r * r).sum::<f64>() * w;
    let plain = (sum_sq(&c.grad.0) + sum_sq(&c.grad.1)) * w;
    let covariant_kinetic = (sum_sq(&c.cov.0) + sum_sq(&c.cov.1)) * w;
    let (gauge_quadratic, cross_term) = if c.has_gauge() {
        let mut gq = 0.0;
        let mut cross = 0.0;
        for idx in 0..psi.len() {
            let (ax, ay) = (c.a.0[idx], c.a.1[idx]);
            let rho = c.density[idx];
            gq += (ax * ax + ay * ay) * rho;
            let jx = (psi[idx].conj() * c.grad.0[idx]).im;
            let jy = (psi[idx].conj() * c.grad.1[idx]).im;
            cross += ax * jx + ay * jy;
        }
        (beta * beta * gq * w, 2.0 * beta * cross * w)
    } else {
        (0.0, 0.0)
    };
    EnergyBreakdown {
        mass,
        covariant_kinetic,
        quartic,
        energy: covariant_kinetic - gamma * quartic,
        plain_kinetic: plain,
        gauge_quadratic,
        cross_term,
        grad_norm: plain.sqrt(),
        variance: variance_raw(grid, &c.density),
    }
}

pub fn energy(psi: &ComplexField2D, params: &PhysicsParams) -> EnergyBreakdown {
    let grid = psi.grid();
    let c = Covariant::new(grid, psi.values(), params.beta, &params.gauge);
    breakdown_from(grid, psi.values(), &c, params.beta, params.gamma)
}

/// `(beta^2 int |A psi|^2 - int |grad psi|^2) / int |psi|^2`.
pub fn lambda_beta(psi: &ComplexField2D, beta: f64, opts: &GaugeOptions) -> Result<f64> {
    let e = energy(
        psi,
        &PhysicsParams {
            beta,
            gamma: 0.0,
            eps: 0.0,
            gauge: *opts,
        },
    );
    if e.mass == 0.0 {
        return Err(CoreError::ZeroField);
    }
    Ok((e.gauge_quadratic - e.plain_kinetic) / e.mass)
}

pub fn variance_moment(psi: &ComplexField2D) -> f64 {
    variance_raw(psi.grid(), &psi.density())
}

fn variance_raw(grid: &Grid2D, density: &[f64]) -> f64 {
    let n = grid.n();
    let r2: Vec<f64> = (0..n).map(|i| grid.coord(i).powi(2)).collect();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (r2[i] + r2[j]) * density[i * n + j];
        }
    }
    acc * grid.cell_area()
}

#[derive(Clone, Debug, PartialEq)]
pub struct InequalityCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`
    pub slack: f64,
    pub pass: bool,
}

impl InequalityCheck {
    fn new(name: &'static str, lhs: f64, rhs: f64) -> Self {
        InequalityCheck {
            name,
            lhs,
            rhs,
            slack: rhs - lhs,
            pass: lhs <= rhs * (1.0 + AUDIT_RELATIVE_SLACK),
        }
    }

    pub fn csv_row(&self) -> String {
        format!("{},{:e},{:e},{:e},{}", self.name, self.lhs, self.rhs, self.slack, self.pass)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditReport {
    /// Diamagnetic, Hardy, Gagliardo-Nirenberg, L-infinity gauge, weak Young.
    pub checks: Vec<InequalityCheck>,
    pub hardy_constant: f64,
    pub gn_constant: f64,
}

impl AuditReport {
    pub const CSV_HEADER: &'static str = "name,lhs,rhs,slack,pass";

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.pass).count()
    }

    /// Observed `int |A psi|^2 / ((int |psi|^2)^2 int |grad |psi||^2)`.
    pub fn hardy_ratio(&self) -> f64 {
        let h = &self.checks[1];
        h.lhs / h.rhs * self.hardy_constant
    }

    pub fn csv_rows(&self) -> Vec<String> {
        self.checks.iter().map(InequalityCheck::csv_row).collect()
    }
}

/// Evaluates the five inequalities on `psi`. `gn_constant` is the sharp
/// Gagliardo-Nirenberg constant, i.e. the zero-field interpolation constant.
pub fn audit_inequalities(
    psi: &ComplexField2D,
    beta: f64,
    gn_constant: f64,
    opts: &GaugeOptions,
) -> Result<AuditReport> {
    psi.ensure_finite()?;
    let grid = psi.grid();
    let values = psi.values();
    let w = grid.cell_area();
    // A[|psi|^2] is needed by the Hardy and gauge checks even when beta = 0.
    let c = Covariant::new(grid, values, beta, opts);
    let mass = c.density.iter().sum::<f64>() * w;
    if mass == 0.0 {
        return Err(CoreError::ZeroField);
    }
    let (ax, ay) = if c.has_gauge() {
        c.a.clone()
    } else {
        gauge::potential(grid, opts, &c.density)
    };

    // grad|psi| = Re(conj(psi) grad psi) / |psi| away from zeros
    let mut worst_excess = f64::NEG_INFINITY;
    let mut modulus_grad_sq = 0.0;
    for idx in 0..values.len() {
        let m = values[idx].norm();
        if m <= MODULUS_FLOOR {
            continue;
        }
        let gx = (values[idx].conj() * c.grad.0[idx]).re / m;
        let gy = (values[idx].conj() * c.grad.1[idx]).re / m;
        let lhs = gx.hypot(gy);
        let rhs = c.cov.0[idx].norm().hypot(c.cov.1[idx].norm());
        worst_excess = worst_excess.max(lhs - rhs);
        modulus_grad_sq += gx * gx + gy * gy;
    }
    modulus_grad_sq *= w;
    let diamagnetic = InequalityCheck::new("diamagnetic", worst_excess, DIAMAGNETIC_SLACK);

    let a_psi_sq: f64 = (0..values.len())
        .map(|idx| (ax[idx] * ax[idx] + ay[idx] * ay[idx]) * c.density[idx])
        .sum::<f64>()
        * w;
    let hardy = InequalityCheck::new(
        "hardy",
        a_psi_sq,
        HARDY_CONSTANT * mass * mass * modulus_grad_sq,
    );

    let quartic = c.density.iter().map(|r| r * r).sum::<f64>() * w;
    let plain = (sum_sq(&c.grad.0) + sum_sq(&c.grad.1)) * w;
    let gn = InequalityCheck::new("gagliardo_nirenberg", gn_constant * quartic, mass * plain);

    let l1 = mass;
    let l4 = quartic.sqrt().sqrt();
    let a_sup = ax
        .iter()
        .zip(&ay)
        .map(|(x, y)| x.hypot(*y))
        .fold(0.0, f64::max);
    let linf = InequalityCheck::new("gauge_linf", a_sup, l1 + (3.0 * PI).powf(0.75) * l4);

    let a_l4 = (ax
        .iter()
        .zip(&ay)
        .map(|(x, y)| (x * x + y * y).powi(2))
        .sum::<f64>()
        * w)
        .powf(0.25);
    let f_l43 = (c.density.iter().map(|r| r.powf(4.0 / 3.0)).sum::<f64>() * w).powf(0.75);
    let young = InequalityCheck::new("weak_young", a_l4, 2.0 * PI.sqrt() * f_l43);

    Ok(AuditReport {
        checks: vec![diamagnetic, hardy, gn, linf, young],
        hardy_constant: HARDY_CONSTANT,
        gn_constant,
    })
}
