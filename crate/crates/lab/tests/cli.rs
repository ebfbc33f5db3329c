use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use css_lab::exit;
use css_lab::snapshot::{Snapshot, HEADER_LEN};

fn lab(dir: &Path, args: &[&str]) -> Output {
    lab_env(dir, args, None)
}

fn lab_env(dir: &Path, args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_css-lab"));
    cmd.args(args).current_dir(dir).env_remove("CSS_LAB_THREADS");
    if let Some(t) = threads {
        cmd.env("CSS_LAB_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Value of a `key = value` line of the report.
fn field(o: &Output, key: &str) -> String {
    stdout(o)
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")).map(str::to_string))
        .unwrap_or_else(|| panic!("no `{key}` in:\n{}", stdout(o)))
}

fn number(o: &Output, key: &str) -> f64 {
    field(o, key).parse().unwrap()
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn csv_column(text: &str, name: &str) -> Vec<f64> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect()
}

#[test]
fn gamma_star_at_the_self_dual_point() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(dir.path(), &["gamma-star", "--beta", "2", "--n", "128", "--length", "24", "--out", "o"]);
    assert_eq!(code(&o), exit::OK, "{}", stderr(&o));
    let g = number(&o, "gamma_star");
    assert!((g - 4.0 * PI).abs() < 0.01 * 4.0 * PI, "{g}");
    assert_eq!(field(&o, "converged"), "true");
    let csv = std::fs::read_to_string(dir.path().join("o/gamma_star.csv")).unwrap();
    assert!(csv.starts_with("beta,gamma_star,lambda,residual,iterations\n"));
    assert_eq!(csv.lines().count(), 2);
    let snap = Snapshot::read(&dir.path().join("o/minimizer_beta_2.cssf")).unwrap();
    assert_eq!(snap.n, 128);
    assert_eq!((snap.beta, snap.length), (2.0, 24.0));
}

#[test]
fn gamma_star_without_field_is_half_the_ground_state_mass() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(dir.path(), &["gamma-star", "--beta", "0", "--n", "64", "--length", "16", "--out", "o"]);
    assert_eq!(code(&o), exit::OK);
    // 2 pi int Q^2 r dr = 11.7009 for the ground state of the cubic equation
    let g = number(&o, "gamma_star");
    assert!((g - 11.7009 / 2.0).abs() < 0.01 * 5.85, "{g}");
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases: &[&[&str]] = &[
        &["gamma-star", "--beta", "-1"],
        &["gamma-star", "--beta", "1", "--n", "7"],
        &["gamma-star", "--beta", "1", "--max-iters", "0"],
        &["audit", "--trials", "0"],
        &["scan", "--beta", "1", "--gamma", "", "--mass", "1"],
        &["scan", "--beta", "1", "--gamma", "--mass", "1"],
        &["scan", "--beta", "1", "--gamma", "1", "--mass", "0"],
        &["standing-wave", "--beta", "1", "--mass", "-2"],
        &["lambda", "--beta", "1", "--h", "0"],
        &["frobnicate"],
        &[],
    ];
    for args in cases {
        let o = lab(dir.path(), args);
        assert_eq!(code(&o), exit::USAGE, "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn evolve_config_errors_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config("free_schrodinger.cfg")).unwrap();
    let cases = [
        (text.replace("grid.n = 128\n", ""), "grid.n"),
        (text.replace("time.dt = 1e-3", "time.dt = -1"), "time.dt"),
        (format!("{text}physics.alpha = 1\n"), "physics.alpha"),
    ];
    for (body, key) in cases {
        let cfg = dir.path().join("bad.cfg");
        std::fs::write(&cfg, body).unwrap();
        let o = lab(dir.path(), &["evolve", "bad.cfg"]);
        assert_eq!(code(&o), exit::USAGE);
        assert!(stderr(&o).contains(&format!("`{key}`")), "{}", stderr(&o));
        // nothing ran, so nothing was written
        assert!(!dir.path().join("out").exists());
    }
}

#[test]
fn io_failures_exit_five() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&lab(dir.path(), &["evolve", "missing.cfg"])), exit::IO);
    // an output directory that cannot be created
    std::fs::write(dir.path().join("blocker"), b"").unwrap();
    let o = lab(dir.path(), &["gamma-star", "--beta", "0", "--n", "32", "--length", "12", "--out", "blocker/sub"]);
    assert_eq!(code(&o), exit::IO, "{}", stderr(&o));
    let text = std::fs::read_to_string(config("free_schrodinger.cfg")).unwrap();
    let cfg = text.replace("init.kind = gaussian", "init.kind = file\ninit.path = nowhere.cssf");
    std::fs::write(dir.path().join("f.cfg"), cfg).unwrap();
    assert_eq!(code(&lab(dir.path(), &["evolve", "f.cfg"])), exit::IO);
}

#[test]
fn free_flow_conserves_mass_to_round_off() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(dir.path(), &["evolve", config("free_schrodinger.cfg").to_str().unwrap()]);
    assert_eq!(code(&o), exit::OK, "{}", stderr(&o));
    assert_eq!(field(&o, "classification"), "completed");
    let csv = std::fs::read_to_string(dir.path().join("out/free_schrodinger/diagnostics.csv")).unwrap();
    assert!(csv.starts_with("t,mass,energy,cov_kinetic,quartic,grad_norm,variance,phase_error,lambda_est\n"));
    let mass = csv_column(&csv, "mass");
    assert_eq!(mass.len(), 21);
    let drift = mass.iter().map(|m| (m - mass[0]).abs()).fold(0.0, f64::max) / mass[0];
    assert!(drift <= 1e-10, "{drift}");
    let t = csv_column(&csv, "t");
    assert_eq!(*t.last().unwrap(), 1.0);
    // free spreading: V(t) = V0 + E t^2 with V0 = 1/2, E = 2
    let v = csv_column(&csv, "variance");
    assert!((v.last().unwrap() - 2.5).abs() < 1e-6, "{v:?}");
}

#[test]
fn negative_energy_run_blows_up() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(dir.path(), &["evolve", config("negative_energy.cfg").to_str().unwrap()]);
    assert_eq!(code(&o), exit::BLOWUP, "{}", stderr(&o));
    assert_eq!(field(&o, "classification"), "blowup");
    let t_cross = number(&o, "t_cross");
    let t_star = number(&o, "t_star_estimate");
    assert!(t_cross > 0.0 && t_cross < 2.0);
    assert!(t_star > 0.5 * t_cross && t_star < 2.0 * t_cross, "{t_star} vs {t_cross}");
    assert!(dir.path().join("out/negative_energy/final.cssf").exists());
}

#[test]
fn snapshots_follow_the_cadence_and_layout() {
    let dir = tempfile::tempdir().unwrap();
    let body = "grid.n = 32\ngrid.length = 12\nphysics.beta = 0.5\nphysics.gamma = 1\n\
                time.dt = 1e-3\ntime.t_final = 0.02\ninit.kind = gaussian\n\
                output.snapshot_every = 8\noutput.diagnostics_every = 5\noutput.dir = run\n";
    std::fs::write(dir.path().join("s.cfg"), body).unwrap();
    let o = lab(dir.path(), &["evolve", "s.cfg"]);
    assert_eq!(code(&o), exit::OK, "{}", stderr(&o));
    let mut names: Vec<String> = std::fs::read_dir(dir.path().join("run"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        ["diagnostics.csv", "final.cssf", "snapshot_00000008.cssf", "snapshot_00000016.cssf"]
    );
    let bytes = std::fs::read(dir.path().join("run/snapshot_00000016.cssf")).unwrap();
    assert_eq!(bytes.len(), HEADER_LEN + 16 * 32 * 32);
    let snap = Snapshot::from_bytes(&bytes).unwrap();
    assert!((snap.t - 0.016).abs() < 1e-12);
    assert_eq!((snap.beta, snap.gamma, snap.eps), (0.5, 1.0, 0.0));

    // a snapshot is valid initial data, and a snapshot of it reproduces it bit for bit
    let restart = "grid.n = 32\ngrid.length = 12\nphysics.beta = 0.5\nphysics.gamma = 1\n\
                   time.dt = 1e-3\ntime.t_final = 0.004\ninit.kind = file\n\
                   init.path = run/final.cssf\noutput.dir = again\n";
    std::fs::write(dir.path().join("r.cfg"), restart).unwrap();
    assert_eq!(code(&lab(dir.path(), &["evolve", "r.cfg"])), exit::OK);
    let first = Snapshot::read(&dir.path().join("run/final.cssf")).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("again/diagnostics.csv")).unwrap();
    let m0 = csv_column(&csv, "mass")[0];
    let direct: f64 = first.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * (12.0f64 / 32.0).powi(2);
    assert!((m0 - direct).abs() < 1e-12 * direct);
}

#[test]
fn double_box_doubles_side_and_points() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(dir.path(), &["--double-box", "gamma-star", "--beta", "0.5", "--n", "32", "--length", "12", "--out", "o"]);
    assert_eq!(code(&o), exit::OK);
    let snap = Snapshot::read(&dir.path().join("o/minimizer_beta_0.5.cssf")).unwrap();
    assert_eq!((snap.n, snap.length), (64, 24.0));
}

#[test]
fn standing_wave_without_evolution_has_no_phase_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(
        dir.path(),
        &["standing-wave", "--beta", "1", "--mass", "2", "--t-final", "0", "--n", "64", "--length", "16", "--out", "o"],
    );
    assert_eq!(code(&o), exit::OK, "{}", stderr(&o));
    assert_eq!(number(&o, "phase_err"), 0.0);
    assert_eq!(number(&o, "theta"), 2.0);
    assert!(number(&o, "energy").abs() < 1e-10);
}

#[test]
fn standing_wave_below_the_static_range_rotates() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(
        dir.path(),
        &["standing-wave", "--beta", "0.25", "--mass", "2", "--t-final", "0.2", "--n", "64", "--length", "16", "--out", "o"],
    );
    assert_eq!(code(&o), exit::OK, "{}", stderr(&o));
    assert_eq!(field(&o, "verdict"), "non-static");
    let (lm, lf) = (number(&o, "lambda_measured"), number(&o, "lambda_formula"));
    assert!(lm < 0.0);
    assert!((lm - lf).abs() < 1e-3 * lf.abs(), "{lm} vs {lf}");
    assert!(number(&o, "phase_err") < 1e-4);
}

#[test]
fn lambda_reports_the_identity() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(dir.path(), &["lambda", "--beta", "1", "--n", "64", "--length", "16", "--out", "o"]);
    assert_eq!(code(&o), exit::OK);
    assert!(number(&o, "identity_rel_gap") < 0.03);
    assert_eq!(number(&o, "lambda_beta"), number(&o, "identity_lhs"));
    assert!(dir.path().join("o/lambda.csv").exists());
}

fn scan_args() -> Vec<&'static str> {
    vec![
        "scan", "--beta", "1", "--mass", "2,3", "--gamma", "0.5", "--gamma-mode", "threshold",
        "--n", "64", "--length", "16", "--t-final", "0.3", "--out", "o",
    ]
}

#[test]
fn scan_below_threshold_is_global_and_independent_of_the_pool() {
    let one = tempfile::tempdir().unwrap();
    let many = tempfile::tempdir().unwrap();
    let a = lab_env(one.path(), &scan_args(), Some("1"));
    let b = lab_env(many.path(), &scan_args(), Some("4"));
    assert_eq!(code(&a), exit::OK, "{}", stderr(&a));
    assert_eq!(code(&b), exit::OK);
    let ta = std::fs::read(one.path().join("o/scan.csv")).unwrap();
    let tb = std::fs::read(many.path().join("o/scan.csv")).unwrap();
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("beta,gamma,mass,threshold,predicted,observed,agree"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    for r in rows {
        assert!(r.ends_with(",global,completed,true"), "{r}");
    }
}

#[test]
fn thread_cap_must_be_a_positive_integer() {
    let dir = tempfile::tempdir().unwrap();
    for bad in ["0", "-3", "many", ""] {
        let o = lab_env(dir.path(), &["audit", "--trials", "1"], Some(bad));
        assert_eq!(code(&o), exit::USAGE, "{bad:?}");
        assert!(stderr(&o).contains("CSS_LAB_THREADS"));
    }
}

#[test]
fn audit_is_clean_and_deterministic() {
    let one = tempfile::tempdir().unwrap();
    let many = tempfile::tempdir().unwrap();
    let args = ["audit", "--seed", "7", "--trials", "200", "--out", "o"];
    let a = lab_env(one.path(), &args, Some("1"));
    let b = lab_env(many.path(), &args, Some("3"));
    assert_eq!(code(&a), exit::OK, "{}", stdout(&a));
    assert_eq!(number(&a, "failures"), 0.0);
    assert_eq!(number(&a, "checks"), 200.0 * 4.0 * 5.0);
    assert_eq!(stdout(&a), stdout(&b));
    let ca = std::fs::read(one.path().join("o/audit.csv")).unwrap();
    assert_eq!(ca, std::fs::read(many.path().join("o/audit.csv")).unwrap());
    let other = lab(one.path(), &["audit", "--seed", "8", "--trials", "3", "--out", "p"]);
    assert_eq!(code(&other), exit::OK);
    assert_ne!(std::fs::read(one.path().join("p/audit.csv")).unwrap()[..2000], ca[..2000]);
}
