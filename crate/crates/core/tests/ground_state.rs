mod common;

use std::f64::consts::PI;

use common::{grid, rel, townes_mass};
use css_core::evolution::zero_energy_data;
use css_core::functionals::{energy, lambda_beta, PhysicsParams};
use css_core::gauge::GaugeOptions;
use css_core::ground_state::{
    check_lambda_identity, default_derivative_step, gamma_star_derivative, minimize_gamma_star,
    stationary_scale, Init, MinimizerOptions,
};
use css_core::ComplexField2D;

#[test]
fn shooting_oracle_reproduces_the_known_profile() {
    let m = townes_mass();
    assert!((m - 11.7009).abs() < 1e-3, "{m}");
}

#[test]
fn zero_field_constant_matches_the_ground_state_mass() {
    // Pohozaev gives int |grad Q|^2 = int Q^2 = int Q^4 / 2, so the quotient is mass / 2
    let g = grid(64, 16.0);
    let r = minimize_gamma_star(0.0, &g, &MinimizerOptions::default()).unwrap();
    assert!(r.converged);
    assert!(rel(r.gamma_star, townes_mass() / 2.0) < 1e-4, "{}", r.gamma_star);
}

#[test]
fn rejects_invalid_options() {
    let g = grid(32, 8.0);
    let o = MinimizerOptions::default();
    assert!(minimize_gamma_star(-0.5, &g, &o).is_err());
    assert!(minimize_gamma_star(f64::NAN, &g, &o).is_err());
    for bad in [
        MinimizerOptions { step: 0.0, ..o.clone() },
        MinimizerOptions { tol_residual: Some(-1.0), ..o.clone() },
        MinimizerOptions { max_iters: 0, ..o.clone() },
        MinimizerOptions { init: Init::Field(ComplexField2D::zeros(&grid(16, 8.0))), ..o.clone() },
    ] {
        assert!(minimize_gamma_star(1.0, &g, &bad).is_err());
    }
    let zero = MinimizerOptions { init: Init::Field(ComplexField2D::zeros(&g)), ..o.clone() };
    assert!(minimize_gamma_star(1.0, &g, &zero).is_err());
}

#[test]
fn minimizer_is_a_unit_mass_critical_point() {
    let g = grid(64, 16.0);
    for beta in [0.5, 1.0] {
        let r = minimize_gamma_star(beta, &g, &MinimizerOptions::default()).unwrap();
        assert!(r.converged);
        assert!(rel(r.minimizer.mass(), 1.0) < 1e-12);
        assert!(r.el_residual <= 1e-6 * r.gamma_star);
        // gamma* is the quotient of the returned field
        let e = energy(&r.minimizer, &PhysicsParams::new(beta, 0.0, 0.0).unwrap());
        assert!(rel(r.gamma_star, e.covariant_kinetic / e.quartic) < 1e-12);
        // accepted iterates never increase the quotient
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(r.history.len(), r.iterations + 1);
        // the multiplier is the phase rate of the zero-energy data
        let lam = lambda_beta(&r.minimizer, beta, &GaugeOptions::periodic()).unwrap();
        assert!((r.lambda - lam).abs() < 1e-4 * lam.abs().max(1.0), "{} vs {lam}", r.lambda);
    }
}

#[test]
fn sandwich_below_the_self_dual_line() {
    let g = grid(64, 16.0);
    let mut prev_ratio = f64::INFINITY;
    for beta in [0.5, 1.0, 1.5] {
        let r = minimize_gamma_star(beta, &g, &MinimizerOptions::default()).unwrap();
        assert!(2.0 * PI * beta <= r.gamma_star, "beta {beta}: {}", r.gamma_star);
        assert!(r.gamma_star <= 2.0 * PI + 0.5 * PI * beta * beta, "beta {beta}: {}", r.gamma_star);
        let ratio = r.gamma_star / beta;
        assert!(ratio <= prev_ratio);
        prev_ratio = ratio;
    }
}

#[test]
fn runs_are_deterministic_and_restarts_only_help() {
    let g = grid(32, 12.0);
    let o = MinimizerOptions { restarts: 2, seed: 9, ..MinimizerOptions::default() };
    let a = minimize_gamma_star(0.7, &g, &o).unwrap();
    let b = minimize_gamma_star(0.7, &g, &o).unwrap();
    assert_eq!(a.gamma_star.to_bits(), b.gamma_star.to_bits());
    assert_eq!(a.minimizer.values(), b.minimizer.values());
    assert_eq!(a.starts.len(), 3);
    let best = a.starts.iter().map(|s| s.quotient).fold(f64::INFINITY, f64::min);
    assert!(a.gamma_star <= best * (1.0 + 1e-9));
    let single = minimize_gamma_star(0.7, &g, &MinimizerOptions::default()).unwrap();
    assert!(a.gamma_star <= single.gamma_star * (1.0 + 1e-9));
}

#[test]
fn zero_energy_data_has_zero_energy() {
    let g = grid(64, 16.0);
    let r = minimize_gamma_star(0.6, &g, &MinimizerOptions::default()).unwrap();
    let (psi, p) = zero_energy_data(&r, 0.3, 2.0, GaugeOptions::periodic());
    let e = energy(&psi, &p);
    assert!(rel(e.mass, 2.0) < 1e-12);
    assert!(e.energy.abs() < 1e-10 * e.covariant_kinetic);
}

#[test]
fn derivative_is_one_sided_near_zero() {
    let g = grid(32, 12.0);
    let o = MinimizerOptions::default();
    assert!(gamma_star_derivative(1.0, 0.0, &g, &o, None).is_err());
    assert!(gamma_star_derivative(-1.0, 0.1, &g, &o, None).is_err());
    assert_eq!(default_derivative_step(0.2), 0.05);
    assert!(rel(default_derivative_step(3.0), 0.15) < 1e-15);
    let d = gamma_star_derivative(0.02, 0.05, &g, &o, None).unwrap();
    assert!(d.one_sided);
    assert!(d.value.is_finite() && d.value >= 0.0);
    let c = gamma_star_derivative(1.0, 0.05, &g, &o, None).unwrap();
    assert!(!c.one_sided);
    assert!(rel(c.value, (c.gamma_plus - c.gamma_minus) / 0.1) < 1e-12);
}

#[test]
fn identity_holds_below_the_self_dual_line() {
    let g = grid(64, 16.0);
    let rep = check_lambda_identity(1.0, 0.05, &g, &MinimizerOptions::default()).unwrap();
    assert!(rep.converged);
    assert!(rep.rel_gap < 0.03, "{rep:?}");
}

#[test]
fn stationary_scale_accepts_a_stationary_base_and_rejects_bad_tolerances() {
    let g = grid(32, 12.0);
    let o = MinimizerOptions::default();
    let base = minimize_gamma_star(0.5, &g, &o).unwrap();
    assert!(stationary_scale(&base, &g, &o, 0.0).is_err());
    let same = stationary_scale(&base, &g, &o, 1e9).unwrap();
    assert_eq!(same.gamma_star.to_bits(), base.gamma_star.to_bits());
}

#[test]
fn stationary_scale_removes_the_scale_force() {
    let g = grid(64, 16.0);
    let o = MinimizerOptions { gauge: GaugeOptions::free_space(), ..MinimizerOptions::default() };
    let base = minimize_gamma_star(0.5, &g, &o).unwrap();
    let tol = 1e-6;
    let r = stationary_scale(&base, &g, &o, tol).unwrap();
    assert!(r.converged);
    assert!(r.scale_multiplier.abs() <= tol * r.gamma_star);
    assert!(rel(r.gamma_star, base.gamma_star) < 1e-3);
}
