mod common;

use common::{grid, rel, rel_l2, rng};
use css_core::evolution::{
    classify_with_minimizer, evolve, evolve_with, extrapolate_blowup_time, regularized_mass, rhs,
    standing_wave_error, step, virial_check, zero_energy_data, Classification, ClassifyBudget,
    DiagnosticRecord, DiagnosticsSeries, DtControl, Event, EvolveConfig, Observation, Prediction,
    Scheme,
};
use css_core::field::{gaussian, lp_norm, random_smooth};
use css_core::functionals::PhysicsParams;
use css_core::gauge::GaugeOptions;
use css_core::ground_state::{minimize_gamma_star, MinimizerOptions};
use css_core::{ComplexField2D, CoreError, Grid2D};
use num_complex::Complex64;
use proptest::prelude::*;
use rustfft::FftPlanner;

fn params(beta: f64, gamma: f64) -> PhysicsParams {
    PhysicsParams::new(beta, gamma, 0.0).unwrap()
}

fn config(p: PhysicsParams, dt: f64, t_final: f64) -> EvolveConfig {
    EvolveConfig::new(p, dt, t_final)
}

/// In-place unnormalized 2-D DFT (forward) or its normalized inverse.
fn dft2(v: &mut [Complex64], n: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let plan = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    for row in v.chunks_mut(n) {
        plan.process(row);
    }
    let mut col = vec![Complex64::default(); n];
    for j in 0..n {
        for i in 0..n {
            col[i] = v[i * n + j];
        }
        plan.process(&mut col);
        for i in 0..n {
            v[i * n + j] = col[i];
        }
    }
    if inverse {
        let s = 1.0 / (n * n) as f64;
        v.iter_mut().for_each(|z| *z *= s);
    }
}

/// Strang split-step Fourier solver of `i psi_t = -(1/2) Laplacian psi - gamma |psi|^2 psi`.
fn split_step(psi0: &ComplexField2D, gamma: f64, dt: f64, steps: usize) -> ComplexField2D {
    let g = psi0.grid();
    let n = g.n();
    let k = g.wavenumbers();
    let half_kick = |v: &mut [Complex64]| {
        for z in v.iter_mut() {
            *z *= Complex64::from_polar(1.0, 0.5 * gamma * z.norm_sqr() * dt);
        }
    };
    let mut v = psi0.values().to_vec();
    for _ in 0..steps {
        half_kick(&mut v);
        dft2(&mut v, n, false);
        for m1 in 0..n {
            for m2 in 0..n {
                let k2 = k[m1] * k[m1] + k[m2] * k[m2];
                v[m1 * n + m2] *= Complex64::from_polar(1.0, -0.5 * k2 * dt);
            }
        }
        dft2(&mut v, n, true);
        half_kick(&mut v);
    }
    ComplexField2D::new(g, v).unwrap()
}

/// Exact free evolution of `exp(-|x|^2 / (2 s0))`: `(s0 / s) exp(-|x|^2 / (2 s))`, `s = s0 + i t`.
fn free_gaussian(g: &Grid2D, s0: f64, t: f64) -> ComplexField2D {
    let s = Complex64::new(s0, t);
    ComplexField2D::from_fn(g, |x, y| (s0 / s) * (-(x * x + y * y) / (2.0 * s)).exp())
}

#[test]
fn free_evolution_matches_the_spreading_gaussian() {
    let g = grid(64, 16.0);
    let psi0 = free_gaussian(&g, 0.5, 0.0);
    let out = evolve(&psi0, &config(params(0.0, 0.0), 2.5e-3, 0.5)).unwrap();
    assert_eq!(out.classification, Classification::Completed);
    let err = rel_l2(&out.field, &free_gaussian(&g, 0.5, 0.5));
    assert!(err < 1e-9, "{err}");
    assert_eq!(out.steps, 200);
    assert!((out.t - 0.5).abs() < 1e-12);
}

#[test]
fn cubic_evolution_matches_split_step_reference() {
    let g = grid(64, 16.0);
    let psi0 = gaussian(&g, (0.3, -0.2), 1.0, 3.0);
    let t = 0.5;
    let rk = evolve(&psi0, &config(params(0.0, 1.0), 2.5e-3, t)).unwrap();
    let reference = split_step(&psi0, 1.0, 1e-4, 5000);
    let err = rel_l2(&rk.field, &reference);
    assert!(err < 1e-6, "{err}");
}

#[test]
fn fourth_order_self_convergence() {
    let g = grid(64, 16.0);
    let psi0 = gaussian(&g, (0.0, 0.0), 1.0, 2.0);
    let p = params(1.0, 1.0);
    let fields: Vec<ComplexField2D> = [1e-2, 5e-3, 2.5e-3]
        .iter()
        .map(|&dt| evolve(&psi0, &config(p, dt, 0.5)).unwrap().field)
        .collect();
    let e1 = lp_norm(&fields[0].sub(&fields[1]).unwrap(), 2.0).unwrap();
    let e2 = lp_norm(&fields[1].sub(&fields[2]).unwrap(), 2.0).unwrap();
    let order = (e1 / e2).log2();
    assert!((3.7..=4.3).contains(&order), "order {order}");
}

#[test]
fn regularized_flow_conserves_its_mass_and_the_energy() {
    let g = grid(64, 16.0);
    let psi0 = gaussian(&g, (0.0, 0.0), 1.0, 2.0);
    let mut c = config(PhysicsParams::new(1.0, 1.0, 1e-3).unwrap(), 2e-3, 0.2);
    c.scheme = Scheme::Rk4Regularized;
    c.diagnostics_every = 20;
    let out = evolve(&psi0, &c).unwrap();
    let drift = rel(regularized_mass(&out.field, 1e-3), regularized_mass(&psi0, 1e-3));
    assert!(drift < 1e-8, "{drift}");
    assert!(out.series.max_drift(|r| r.energy) < 1e-8);
    // eps only acts through the regularized scheme
    let direct = rhs(&psi0, &c.params, Scheme::Rk4Direct);
    let plain = rhs(&psi0, &params(1.0, 1.0), Scheme::Rk4Direct);
    assert!(rel_l2(&direct, &plain) < 1e-15);
}

#[test]
fn regularized_solutions_approach_the_direct_one_linearly() {
    let g = grid(64, 16.0);
    let psi0 = gaussian(&g, (0.0, 0.0), 0.8, 2.0);
    let t = 0.3;
    let base = evolve(&psi0, &config(params(1.0, 1.0), 2e-3, t)).unwrap().field;
    let gaps: Vec<f64> = [1e-5, 1e-6, 1e-7]
        .iter()
        .map(|&eps| {
            let mut c = config(PhysicsParams::new(1.0, 1.0, eps).unwrap(), 2e-3, t);
            c.scheme = Scheme::Rk4Regularized;
            rel_l2(&evolve(&psi0, &c).unwrap().field, &base)
        })
        .collect();
    for w in gaps.windows(2) {
        let ratio = w[0] / w[1];
        assert!((7.0..=13.0).contains(&ratio), "{gaps:?}");
    }
}

#[test]
fn invalid_configurations_are_rejected() {
    let g = grid(32, 8.0);
    let psi = gaussian(&g, (0.0, 0.0), 1.0, 1.0);
    let ok = config(params(1.0, 1.0), 1e-3, 0.1);
    for bad in [
        EvolveConfig { dt: 0.0, ..ok },
        EvolveConfig { dt: f64::NAN, ..ok },
        EvolveConfig { t_final: -1.0, ..ok },
        EvolveConfig { diagnostics_every: 0, ..ok },
        EvolveConfig { blowup_factor: 1.0, ..ok },
        EvolveConfig { dt_control: DtControl::GradientCfl(0.0), ..ok },
    ] {
        assert!(matches!(evolve(&psi, &bad), Err(CoreError::InvalidParameter { .. })));
    }
    assert_eq!(evolve(&ComplexField2D::zeros(&g), &ok).unwrap_err(), CoreError::ZeroField);
    let nan = psi.map(|z| if z.re > 0.5 { Complex64::new(f64::NAN, 0.0) } else { z });
    assert!(evolve(&nan, &ok).is_err());
    assert!(step(&psi, &ok.params, -1e-3, Scheme::Rk4Direct).is_err());
}

#[test]
fn zero_duration_returns_the_data() {
    let g = grid(48, 12.0);
    let psi = gaussian(&g, (0.0, 0.0), 1.0, 1.0);
    let out = evolve(&psi, &config(params(1.0, 1.0), 1e-3, 0.0)).unwrap();
    assert_eq!(out.steps, 0);
    assert_eq!(out.series.records.len(), 1);
    let err = rel_l2(&out.field, &psi);
    assert!(err < 1e-14, "{err}");
}

#[test]
fn observer_sees_every_record_and_snapshot() {
    let g = grid(32, 8.0);
    let psi = gaussian(&g, (0.0, 0.0), 1.0, 1.0);
    let mut c = config(params(0.5, 1.0), 1e-3, 0.05);
    c.snapshot_every = 7;
    c.diagnostics_every = 5;
    let (mut records, mut snaps) = (0, Vec::new());
    let out = evolve_with(&psi, &c, |ev| match ev {
        Event::Record(..) => records += 1,
        Event::Snapshot { step, .. } => snaps.push(step),
    })
    .unwrap();
    assert_eq!(out.steps, 50);
    assert_eq!(records, out.series.records.len());
    assert_eq!(records, 11);
    assert_eq!(snaps, vec![7, 14, 21, 28, 35, 42, 49]);
    let csv = out.series.to_csv();
    assert!(csv.starts_with(DiagnosticsSeries::CSV_HEADER));
    assert_eq!(csv.lines().count(), 12);
}

#[test]
fn runs_are_bitwise_reproducible() {
    let g = grid(32, 8.0);
    let psi = random_smooth(&g, &mut rng(5));
    let c = config(params(1.0, 2.0), 2e-3, 0.05);
    let a = evolve(&psi, &c).unwrap();
    let b = evolve(&psi, &c).unwrap();
    assert_eq!(a.field.values(), b.field.values());
    assert_eq!(a.series, b.series);
}

#[test]
fn blowup_time_extrapolation_recovers_a_square_root_singularity() {
    let t_star = 0.8;
    let records: Vec<DiagnosticRecord> = (0..30)
        .map(|i| {
            let t = 0.5 + 0.01 * i as f64;
            DiagnosticRecord {
                t,
                mass: 1.0,
                energy: -1.0,
                covariant_kinetic: 1.0,
                quartic: 1.0,
                grad_norm: (t_star - t).powf(-0.5),
                variance: 1.0,
                phase_error: 0.0,
                lambda_est: 0.0,
            }
        })
        .collect();
    let est = extrapolate_blowup_time(&records).unwrap();
    assert!((est - t_star).abs() < 1e-10);
    assert!(extrapolate_blowup_time(&records[..2]).is_none());
    let flat: Vec<DiagnosticRecord> = records
        .iter()
        .map(|r| DiagnosticRecord { grad_norm: 1.0, ..*r })
        .collect();
    assert!(extrapolate_blowup_time(&flat).is_none());
}

#[test]
fn supercritical_gaussian_blows_up_with_concave_variance() {
    // E = 2 m / w^2 - gamma m^2 / (pi w^2) < 0 for m = 20, w = 1
    let g = grid(128, 10.0);
    let psi = gaussian(&g, (0.0, 0.0), 1.0, 20.0);
    let mut c = config(params(0.0, 1.0), 1e-3, 1.0);
    c.dt_control = DtControl::GradientCfl(1.0);
    c.diagnostics_every = 5;
    let out = evolve(&psi, &c).unwrap();
    let Classification::Blowup { t_cross, t_star_estimate } = out.classification else {
        panic!("expected blowup, got {:?}", out.classification);
    };
    assert!(t_cross > 0.0 && t_cross < 1.0);
    let last = out.series.records.last().unwrap();
    assert!(last.grad_norm >= 10.0 * out.series.records[0].grad_norm);
    let t_star = t_star_estimate.unwrap();
    assert!(t_star > 0.5 * t_cross && t_star < 2.0 * t_cross, "{t_star} vs {t_cross}");
    let first = &out.series.records[0];
    assert!(first.energy < 0.0);
    // V(t) = V(0) + E t^2 for real data, so the variance vanishes by sqrt(V(0) / |E|)
    assert!(t_cross < (first.variance / first.energy.abs()).sqrt());
}

#[test]
fn virial_identity_on_a_clean_run() {
    let g = grid(128, 24.0);
    let psi = gaussian(&g, (0.0, 0.0), 1.0, 1.0);
    let mut c = config(params(1.0, 1.0), 2e-3, 0.5);
    c.diagnostics_every = 5;
    let out = evolve(&psi, &c).unwrap();
    let v = virial_check(&out.series).unwrap();
    assert!(!v.contaminated);
    assert!(v.max_rel_gap < 1e-2, "{}", v.max_rel_gap);
    assert!(virial_check(&DiagnosticsSeries::default()).is_err());
}

#[test]
fn ground_state_data_is_a_standing_wave() {
    let g = grid(64, 16.0);
    let min = minimize_gamma_star(0.0, &g, &MinimizerOptions::default()).unwrap();
    let (psi, p) = zero_energy_data(&min, 0.0, 1.0, GaugeOptions::periodic());
    let r = standing_wave_error(&psi, &p, 0.3, 2e-3).unwrap();
    assert!(r.phase_err < 1e-4, "{r:?}");
    assert!(rel(r.lambda_measured, r.lambda_formula) < 1e-3, "{r:?}");
    assert!(r.lambda_measured < 0.0 && !r.is_static);
    let r0 = standing_wave_error(&psi, &p, 0.0, 2e-3).unwrap();
    assert_eq!(r0.phase_err, 0.0);
    assert!(rel(r0.lambda_measured, r0.lambda_formula) < 1e-3, "{r0:?}");
    // data off the zero-energy line is refused
    let heavier = psi.scaled(1.1.into());
    assert!(matches!(
        standing_wave_error(&heavier, &p, 0.1, 2e-3),
        Err(CoreError::Precondition(_))
    ));
}

#[test]
fn classification_below_and_near_the_threshold() {
    let g = grid(64, 16.0);
    let budget = ClassifyBudget { t_final: 0.5, ..ClassifyBudget::default() };
    let min = minimize_gamma_star(0.5, &g, &budget.minimizer).unwrap();
    let mass = 1.0;
    let threshold = min.gamma_star / mass;
    let below = classify_with_minimizer(0.5, 0.5 * threshold, mass, &min, &budget).unwrap();
    assert_eq!(below.predicted, Prediction::Global);
    assert_eq!(below.observed, Observation::Completed);
    assert_eq!(below.agrees(), Some(true));
    assert!(below.self_dual_gap.is_none());
    let near = classify_with_minimizer(0.5, 1.001 * threshold, mass, &min, &budget).unwrap();
    assert_eq!(near.predicted, Prediction::BlowupPossible);
    assert_eq!(near.observed, Observation::Undetermined);
    assert_eq!(near.agrees(), None);
    assert!(classify_with_minimizer(1.0, threshold, mass, &min, &budget).is_err());
    assert!(classify_with_minimizer(0.5, threshold, 0.0, &min, &budget).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn mass_and_energy_are_conserved(seed in any::<u64>(), beta in 0.0..2.0f64, gamma in -1.0..2.0f64, free in any::<bool>()) {
        let g = grid(64, 16.0);
        let psi = random_smooth(&g, &mut rng(seed)).with_mass(1.0).unwrap();
        let gauge = if free { GaugeOptions::free_space() } else { GaugeOptions::periodic() };
        let mut c = config(params(beta, gamma).with_gauge(gauge), 2e-3, 0.1);
        c.diagnostics_every = 10;
        let out = evolve(&psi, &c).unwrap();
        prop_assert_eq!(out.classification, Classification::Completed);
        prop_assert!(out.series.max_drift(|r| r.mass) < 1e-10);
        let e0 = out.series.records[0];
        let drift = out.series.records.iter().map(|r| (r.energy - e0.energy).abs()).fold(0.0, f64::max);
        prop_assert!(drift < 1e-6 * e0.covariant_kinetic.max(e0.energy.abs()), "{}", drift);
    }
}
