//! The interpolation constant
//! `gamma*(beta) = inf { int |(grad + i beta A[|phi|^2]) phi|^2 / int |phi|^4 : int |phi|^2 = 1 }`
//! by a preconditioned normalized gradient flow, plus the Euler-Lagrange
//! operator, the numerical derivative of `gamma*` and the multiplier identity.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CoreError, Result};
use crate::field::{self, raw_inner, ComplexField2D};
use crate::functionals::{energy_gradient_projected, energy_gradient_raw, sum_sq, Covariant};
use crate::gauge::GaugeOptions;
use crate::grid::Grid2D;
use crate::{par, spectral};

/// Restarts whose quotients differ by less than this are tied.
const QUOTIENT_TIE: f64 = 1e-10;
/// Backtracking gives up below this step.
const MIN_STEP: f64 = 1e-14;
const STEP_GROWTH: f64 = 1.1;
const ACCEPTS_BEFORE_GROWTH: usize = 3;
/// Default stopping tolerance relative to the quotient.
pub const DEFAULT_RELATIVE_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub enum Init {
    /// Unit-mass Gaussian of width 1.
    Gaussian,
    /// `(x1 +- i x2)^|m| exp(-|x|^2/2)`.
    Vortex(i32),
    /// A given starting field, e.g. read from a snapshot.
    Field(ComplexField2D),
}

#[derive(Clone, Debug)]
pub struct MinimizerOptions {
    pub init: Init,
    /// Initial flow step.
    pub step: f64,
    /// Residual tolerance; `None` means `1e-6` times the current quotient.
    pub tol_residual: Option<f64>,
    pub max_iters: usize,
    /// Additional randomized starts beyond `init`.
    pub restarts: usize,
    pub seed: u64,
    pub gauge: GaugeOptions,
    /// Holds `int |phi|^4` at its initial value along the flow. The quotient
    /// is dilation invariant, so this only pins the length scale.
    pub fix_scale: bool,
}

impl Default for MinimizerOptions {
    fn default() -> Self {
        MinimizerOptions {
            init: Init::Gaussian,
            step: 0.5,
            tol_residual: None,
            max_iters: 4000,
            restarts: 0,
            seed: 0,
            gauge: GaugeOptions::default(),
            fix_scale: true,
        }
    }
}

impl MinimizerOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(CoreError::param("step", "must be positive"));
        }
        if let Some(t) = self.tol_residual {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CoreError::param("tol_residual", "must be positive"));
            }
        }
        if self.max_iters == 0 {
            return Err(CoreError::param("max_iters", "must be at least 1"));
        }
        Ok(())
    }
}

/// Outcome of one start of the flow.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowSummary {
    pub quotient: f64,
    pub el_residual: f64,
    /// Multiplier of the fixed-scale constraint; zero at a free critical point.
    pub scale_multiplier: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct MinimizerResult {
    pub beta: f64,
    pub gamma_star: f64,
    /// Unit-mass minimizer.
    pub minimizer: ComplexField2D,
    pub el_residual: f64,
    pub scale_multiplier: f64,
    /// Lagrange multiplier `<phi, H phi>`; equals the phase rate formula on the minimizer.
    pub lambda: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Quotients of the accepted iterates of the winning start.
    pub history: Vec<f64>,
    /// Every start, in order; the winner is among them.
    pub starts: Vec<FlowSummary>,
}

impl MinimizerResult {
    pub const CSV_HEADER: &'static str = "beta,gamma_star,lambda,residual,iterations";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.12e},{:.12e},{:.6e},{}",
            self.beta, self.gamma_star, self.lambda, self.el_residual, self.iterations
        )
    }
}

/// `H[phi] phi`, the gradient of the energy with interaction `gamma`
/// (`dE(phi + s delta)/ds = 2 Re <delta, H[phi] phi>`).
pub fn el_apply(phi: &ComplexField2D, beta: f64, gamma: f64, opts: &GaugeOptions) -> ComplexField2D {
    let grid = phi.grid();
    let c = Covariant::new(grid, phi.values(), beta, opts);
    let out = energy_gradient_raw(grid, phi.values(), &c, beta, gamma, opts);
    ComplexField2D::from_vec_unchecked(grid, out)
}

fn kinetic_and_quartic(grid: &Grid2D, c: &Covariant) -> (f64, f64) {
    let w = grid.cell_area();
    let k = (sum_sq(&c.cov.0) + sum_sq(&c.cov.1)) * w;
    let p = c.density.iter().map(|r| r * r).sum::<f64>() * w;
    (k, p)
}

fn normalize(grid: &Grid2D, v: &mut [Complex64]) -> bool {
    let m = field::raw_norm_sqr(v) * grid.cell_area();
    if !(m > 0.0 && m.is_finite()) {
        return false;
    }
    let s = m.sqrt().recip();
    v.iter_mut().for_each(|z| *z *= s);
    true
}

struct Flow {
    phi: Vec<Complex64>,
    summary: FlowSummary,
    lambda: f64,
    history: Vec<f64>,
}

fn weighted_inner(a: &[Complex64], b: &[Complex64], w: f64) -> Complex64 {
    raw_inner(a, b) * w
}

/// Real least-squares coefficients `(a, b)` minimizing `||g - a phi - b s||`;
/// the constraint normals live in the real inner product `Re <., .>`.
fn multipliers(phi: &[Complex64], s: Option<&[Complex64]>, g: &[Complex64], w: f64) -> (f64, f64) {
    let g11 = weighted_inner(phi, phi, w).re;
    let r1 = weighted_inner(phi, g, w).re;
    let Some(s) = s else {
        return (r1 / g11, 0.0);
    };
    let g12 = weighted_inner(phi, s, w).re;
    let g22 = weighted_inner(s, s, w).re;
    let r2 = weighted_inner(s, g, w).re;
    let det = g11 * g22 - g12 * g12;
    if det <= 1e-14 * g11 * g22 {
        return (r1 / g11, 0.0);
    }
    ((g22 * r1 - g12 * r2) / det, (g11 * r2 - g12 * r1) / det)
}

fn quartic_raw(v: &[Complex64], w: f64) -> f64 {
    v.iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>() * w
}

/// Moves a unit-mass field back onto `int |phi|^4 = target` along the
/// smoothed direction `|phi|^2 phi`, keeping unit mass.
fn retract_quartic(grid: &Grid2D, t: &mut Vec<Complex64>, target: f64) -> bool {
    let w = grid.cell_area();
    for _ in 0..40 {
        let p = quartic_raw(t, w);
        if (p - target).abs() <= 1e-13 * target {
            return true;
        }
        let cubic: Vec<Complex64> = t.iter().map(|z| z * z.norm_sqr()).collect();
        let mut u = spectral::nyquist_free(grid, &cubic);
        let along = weighted_inner(t, &u, w).re;
        u.iter_mut().zip(t.iter()).for_each(|(u, z)| *u -= along * z);
        let slope = 4.0 * weighted_inner(&cubic, &u, w).re;
        if !(slope.abs() > 0.0) {
            return false;
        }
        let c = (target - p) / slope;
        t.iter_mut().zip(&u).for_each(|(z, u)| *z += c * u);
        if !normalize(grid, t) {
            return false;
        }
    }
    false
}

fn run_flow(
    grid: &Grid2D,
    beta: f64,
    phi: Vec<Complex64>,
    opts: &MinimizerOptions,
) -> Result<Flow> {
    let mut phi = spectral::nyquist_free(grid, &phi);
    if !normalize(grid, &mut phi) {
        return Err(CoreError::ZeroField);
    }
    let w = grid.cell_area();
    let k = grid.wavenumbers();
    let half = grid.n() / 2;
    let gauge = &opts.gauge;
    let mut c = Covariant::new(grid, &phi, beta, gauge);
    let (mut kin, quart) = kinetic_and_quartic(grid, &c);
    let scale_target = quart;
    let mut q = kin / quart;
    let mut history = vec![q];
    let mut tau = opts.step;
    let mut streak = 0;
    let mut iterations = 0;
    let mut converged = false;
    let mut residual;
    let mut lambda;
    let mut scale_multiplier;
    loop {
        let g = energy_gradient_projected(grid, &phi, &c, beta, q, gauge, 0.0);
        lambda = weighted_inner(&phi, &g, w).re;
        let s = if opts.fix_scale {
            let cubic: Vec<Complex64> = phi.iter().map(|z| z * z.norm_sqr()).collect();
            Some(spectral::nyquist_free(grid, &cubic))
        } else {
            None
        };
        let (a, b) = multipliers(&phi, s.as_deref(), &g, w);
        scale_multiplier = b;
        let r: Vec<Complex64> = match &s {
            Some(s) => g
                .iter()
                .zip(&phi)
                .zip(s)
                .map(|((g, p), s)| g - a * p - b * s)
                .collect(),
            None => g.iter().zip(&phi).map(|(g, p)| g - a * p).collect(),
        };
        residual = (field::raw_norm_sqr(&r) * w).sqrt();
        let tol = opts.tol_residual.unwrap_or(DEFAULT_RELATIVE_TOL * q.abs());
        if residual <= tol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iters {
            break;
        }
        let shift = kin.max(1e-3);
        let d = spectral::filter(grid, &r, |m1, m2| {
            if m1 == half || m2 == half {
                0.0
            } else {
                1.0 / (shift + k[m1] * k[m1] + k[m2] * k[m2])
            }
        });

        let mut accepted = false;
        while tau >= MIN_STEP {
            let mut trial: Vec<Complex64> = phi.iter().zip(&d).map(|(p, d)| p - tau * d).collect();
            let ok = normalize(grid, &mut trial)
                && (!opts.fix_scale || retract_quartic(grid, &mut trial, scale_target));
            if ok {
                let ct = Covariant::new(grid, &trial, beta, gauge);
                let (kt, pt) = kinetic_and_quartic(grid, &ct);
                let qt = kt / pt;
                if qt <= q {
                    phi = trial;
                    c = ct;
                    kin = kt;
                    q = qt;
                    accepted = true;
                    break;
                }
            }
            tau *= 0.5;
            streak = 0;
        }
        if !accepted {
            break;
        }
        history.push(q);
        iterations += 1;
        streak += 1;
        if streak >= ACCEPTS_BEFORE_GROWTH {
            tau *= STEP_GROWTH;
            streak = 0;
        }
    }
    Ok(Flow {
        phi,
        summary: FlowSummary {
            quotient: q,
            el_residual: residual,
            scale_multiplier,
            iterations,
            converged,
        },
        lambda,
        history,
    })
}

fn start_field(grid: &Grid2D, init: &Init) -> Result<Vec<Complex64>> {
    Ok(match init {
        Init::Gaussian => field::gaussian(grid, (0.0, 0.0), 1.0, 1.0).into_values(),
        Init::Vortex(m) => field::vortex(grid, *m, 1.0).into_values(),
        Init::Field(f) => {
            if f.grid() != grid {
                return Err(CoreError::GridMismatch);
            }
            f.ensure_finite()?;
            f.values().to_vec()
        }
    })
}

/// Starting fields for the randomized restarts: vortex profiles first when
/// vorticity is expected, then seeded perturbations of the primary start.
fn restart_fields(grid: &Grid2D, beta: f64, opts: &MinimizerOptions) -> Result<Vec<Vec<Complex64>>> {
    let base = start_field(grid, &opts.init)?;
    let mut out = vec![base.clone()];
    let mut extra: Vec<Vec<Complex64>> = Vec::new();
    if beta >= 2.0 {
        extra.push(field::vortex(grid, 1, 1.0).into_values());
        extra.push(field::vortex(grid, -1, 1.0).into_values());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    while extra.len() < opts.restarts {
        let width = rng.gen_range(0.6..1.8);
        let bump = field::gaussian(grid, (0.0, 0.0), width, 1.0);
        let noise = field::random_smooth(grid, &mut rng);
        let amp = rng.gen_range(0.05..0.3);
        let v = bump
            .values()
            .iter()
            .zip(noise.values())
            .map(|(b, n)| b + amp * n * b.norm().sqrt())
            .collect();
        extra.push(v);
    }
    extra.truncate(opts.restarts);
    out.extend(extra);
    Ok(out)
}

/// Minimizes the covariant quotient at unit mass; returns the best start.
pub fn minimize_gamma_star(beta: f64, grid: &Grid2D, opts: &MinimizerOptions) -> Result<MinimizerResult> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(CoreError::param("beta", format!("{beta} must be finite and >= 0")));
    }
    opts.validate()?;
    let starts = restart_fields(grid, beta, opts)?;
    let flows: Vec<Result<Flow>> = par::map(starts, |phi| run_flow(grid, beta, phi, opts));
    let flows: Vec<Flow> = flows.into_iter().collect::<Result<_>>()?;
    let mut best = 0;
    for (i, f) in flows.iter().enumerate().skip(1) {
        let b = &flows[best].summary;
        let s = &f.summary;
        let tied = (s.quotient - b.quotient).abs() <= QUOTIENT_TIE * b.quotient.abs();
        if (!tied && s.quotient < b.quotient) || (tied && s.el_residual < b.el_residual) {
            best = i;
        }
    }
    let summaries: Vec<FlowSummary> = flows.iter().map(|f| f.summary.clone()).collect();
    let win = flows.into_iter().nth(best).expect("at least one start");
    Ok(MinimizerResult {
        beta,
        gamma_star: win.summary.quotient,
        minimizer: ComplexField2D::from_vec_unchecked(grid, win.phi),
        el_residual: win.summary.el_residual,
        scale_multiplier: win.summary.scale_multiplier,
        lambda: win.lambda,
        iterations: win.summary.iterations,
        converged: win.summary.converged,
        history: win.history,
        starts: summaries,
    })
}

/// Secant steps on the log dilation in [`stationary_scale`].
const SCALE_SEARCH_STEPS: usize = 10;
/// First probe and largest secant step in log dilation.
const SCALE_PROBE: f64 = 0.05;
const SCALE_MAX_STEP: f64 = 0.3;

/// Dilates a fixed-scale minimizer until its scale multiplier vanishes.
///
/// On a finite grid the quotient is only approximately dilation invariant,
/// so a fixed-scale minimizer carries a small residual force
/// `scale_multiplier * |phi|^2 phi`. The returned field is a free critical
/// point of the discrete quotient up to `|scale_multiplier| <= tol * gamma*`,
/// which makes it an exact standing wave of the discrete flow. Returns the
/// best candidate found, with `converged = false` if the tolerance was not
/// met.
pub fn stationary_scale(
    base: &MinimizerResult,
    grid: &Grid2D,
    opts: &MinimizerOptions,
    tol: f64,
) -> Result<MinimizerResult> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(CoreError::param("tol", "must be positive"));
    }
    let target = |r: &MinimizerResult| r.scale_multiplier.abs() <= tol * r.gamma_star.abs();
    if target(base) {
        return Ok(base.clone());
    }
    let mut o = opts.clone();
    o.restarts = 0;
    o.fix_scale = true;
    // (log dilation relative to base, result)
    let mut tried: Vec<(f64, MinimizerResult)> = vec![(0.0, base.clone())];
    let mut next = SCALE_PROBE;
    for _ in 0..SCALE_SEARCH_STEPS {
        let (u_near, near) = tried
            .iter()
            .min_by(|a, b| (a.0 - next).abs().total_cmp(&(b.0 - next).abs()))
            .expect("nonempty");
        o.init = Init::Field(spectral::dilate(&near.minimizer, (next - u_near).exp()));
        let r = minimize_gamma_star(base.beta, grid, &o)?;
        let done = target(&r) && r.converged;
        tried.push((next, r));
        if done {
            break;
        }
        let k = tried.len();
        let (u1, f1) = (tried[k - 1].0, tried[k - 1].1.scale_multiplier);
        let (u0, f0) = (tried[k - 2].0, tried[k - 2].1.scale_multiplier);
        let slope = (f1 - f0) / (u1 - u0);
        let step = if slope != 0.0 && slope.is_finite() {
            (-f1 / slope).clamp(-SCALE_MAX_STEP, SCALE_MAX_STEP)
        } else {
            SCALE_PROBE
        };
        next = u1 + step;
    }
    let (_, mut best) = tried
        .into_iter()
        .min_by(|a, b| a.1.scale_multiplier.abs().total_cmp(&b.1.scale_multiplier.abs()))
        .expect("nonempty");
    best.converged = best.converged && target(&best);
    Ok(best)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeEstimate {
    pub value: f64,
    pub beta: f64,
    pub h: f64,
    /// Forward difference used because `beta < h`.
    pub one_sided: bool,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub converged: bool,
}

/// Default difference step `0.05 max(beta, 1)`.
pub fn default_derivative_step(beta: f64) -> f64 {
    0.05 * beta.max(1.0)
}

/// Central difference of `gamma*` at `beta`, forward difference when `beta < h`.
/// Both evaluations start from the minimizer at `beta` (or `opts.init` when
/// `warm` is `None`).
pub fn gamma_star_derivative(
    beta: f64,
    h: f64,
    grid: &Grid2D,
    opts: &MinimizerOptions,
    warm: Option<&MinimizerResult>,
) -> Result<DerivativeEstimate> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(CoreError::param("h", "must be positive"));
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(CoreError::param("beta", "must be finite and >= 0"));
    }
    let one_sided = beta < h;
    let mut o = opts.clone();
    if let Some(w) = warm {
        o.init = Init::Field(w.minimizer.clone());
    }
    let lo_beta = if one_sided { beta } else { beta - h };
    let (plus, minus) = par::join(
        || minimize_gamma_star(beta + h, grid, &o),
        || minimize_gamma_star(lo_beta, grid, &o),
    );
    let (plus, minus) = (plus?, minus?);
    let span = if one_sided { h } else { 2.0 * h };
    Ok(DerivativeEstimate {
        value: (plus.gamma_star - minus.gamma_star) / span,
        beta,
        h,
        one_sided,
        gamma_plus: plus.gamma_star,
        gamma_minus: minus.gamma_star,
        converged: plus.converged && minus.converged,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LambdaIdentityReport {
    pub beta: f64,
    /// `beta^2 int |A phi|^2 - int |grad phi|^2` on the unit-mass minimizer.
    pub lhs: f64,
    /// `(beta gamma*' - gamma*) int |phi|^4`.
    pub rhs: f64,
    /// `int |phi|^4`, the scale of the comparison.
    pub quartic: f64,
    /// `|lhs - rhs| / quartic`.
    pub rel_gap: f64,
    pub gamma_star: f64,
    pub derivative: f64,
    pub converged: bool,
}

/// Checks `beta^2 int |A phi|^2 - int |grad phi|^2 = (beta gamma*'(beta) - gamma*(beta)) int |phi|^4`.
pub fn check_lambda_identity(
    beta: f64,
    h: f64,
    grid: &Grid2D,
    opts: &MinimizerOptions,
) -> Result<LambdaIdentityReport> {
    let base = minimize_gamma_star(beta, grid, opts)?;
    let d = gamma_star_derivative(beta, h, grid, opts, Some(&base))?;
    Ok(lambda_identity_from(&base, &d, &opts.gauge))
}

/// Assembles the identity check from an existing minimizer and derivative.
pub fn lambda_identity_from(
    base: &MinimizerResult,
    d: &DerivativeEstimate,
    gauge: &GaugeOptions,
) -> LambdaIdentityReport {
    let beta = base.beta;
    let phi = &base.minimizer;
    let e = crate::functionals::energy(
        phi,
        &crate::functionals::PhysicsParams {
            beta,
            gamma: 0.0,
            eps: 0.0,
            gauge: *gauge,
        },
    );
    let lhs = e.gauge_quadratic - e.plain_kinetic;
    let rhs = (beta * d.value - base.gamma_star) * e.quartic;
    LambdaIdentityReport {
        beta,
        lhs,
        rhs,
        quartic: e.quartic,
        rel_gap: (lhs - rhs).abs() / e.quartic,
        gamma_star: base.gamma_star,
        derivative: d.value,
        converged: base.converged && d.converged,
    }
}
