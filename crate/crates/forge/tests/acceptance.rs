//! Acceptance suite: one test per criterion, each running the registered
//! experiment(s) at the pinned tolerances and printing a PASS/FAIL line.
//! Run with `cargo test -p forge --test acceptance -- --nocapture` to see the
//! per-criterion lines.

use forge::{default_config, experiments::run_in_memory, ExperimentReport};

fn run_checked(criterion: &str, names: &[&str]) -> Vec<ExperimentReport> {
    let mut reports = Vec::new();
    let mut all = true;
    for name in names {
        let cfg = default_config(name).expect("registered experiment");
        let report = match run_in_memory(&cfg) {
            Ok(r) => r,
            Err(e) => {
                println!("FAIL {criterion} [{name}]: error {e}");
                panic!("{criterion}: experiment {name} errored: {e}");
            }
        };
        all &= report.passed;
        if !report.passed {
            for (check, ok) in &report.checks {
                if !ok {
                    let val = report.scalars.get(check.trim_end_matches("_ok")).copied();
                    println!("      failed check {check} (value {val:?})");
                }
            }
        }
        reports.push(report);
    }
    println!("{} {criterion}", if all { "PASS" } else { "FAIL" });
    assert!(all, "{criterion} failed; see check list above");
    reports
}

#[test]
fn criterion_01_eh_ricci_flatness() {
    let r = run_checked("criterion 1: EH Ricci-flatness < 1e-5 (s in {0.25,1,4})", &["eh-ricci-flat"]);
    for row in &r[0].rows {
        assert!(row[1] < 1e-5, "s = {}: relative Ricci {}", row[0], row[1]);
    }
}

#[test]
fn criterion_02_ale_decay() {
    let r = run_checked("criterion 2: ALE decay exponents -4 +- 0.1 and -3 +- 0.1", &["ale-decay"]);
    let s = &r[0].scalars;
    assert!((s["metric_decay_slope"] + 4.0).abs() <= 0.1);
    assert!((s["potential_gradient_slope"] + 3.0).abs() <= 0.1);
}

#[test]
fn criterion_03_scaling_isometry() {
    let r = run_checked("criterion 3: scaling isometry defect < 1e-12 (s in {0.25, 4})", &["scaling-isometry"]);
    for row in &r[0].rows {
        assert!(row[1] < 1e-12);
    }
}

#[test]
fn criterion_04_bolt_geometry() {
    let r = run_checked("criterion 4: bolt volume s*pi and diameter sqrt(s)/2 within 1%", &["bolt-geometry"]);
    for row in &r[0].rows {
        let s = row[0];
        assert!((row[1] - s * std::f64::consts::PI).abs() / (s * std::f64::consts::PI) < 0.01);
        assert!((row[2] - 0.5 * s.sqrt()).abs() <= 0.01 * 0.5 * s.sqrt());
    }
}

#[test]
fn criterion_05_annulus_estimates() {
    let reports = run_checked(
        "criterion 5: annulus slopes 2/2/1/2 within 0.15 over eps in {0.04,0.02,0.01,0.005}",
        &["annulus-decay", "ricci-potential", "ricci-slope", "q-decay"],
    );
    let expected = [2.0, 2.0, 1.0, 2.0];
    for (report, target) in reports.iter().zip(expected.iter()) {
        let slope = report.scalars["fitted_slope"];
        assert!((slope - target).abs() <= 0.15, "{}: slope {slope} vs {target}", report.experiment);
    }
}

#[test]
fn criterion_06_triple_algebra() {
    let r = run_checked(
        "criterion 6: su2(eh) < 1e-9, Q-equivariance < 1e-13, triple metric vs eh < 1e-10",
        &["triple-algebra"],
    );
    let s = &r[0].scalars;
    assert!(s["su2_deviation"] < 1e-9);
    assert!(s["q_equivariance"] < 1e-13);
    assert!(s["triple_to_metric_vs_eh"] < 1e-10);
}

#[test]
fn criterion_07_matrix_map() {
    let r = run_checked(
        "criterion 7: matrix map round trip <= 1e-12 on 10^3 inputs, D F(0) = id/2 to 1e-6",
        &["matrix-f"],
    );
    let s = &r[0].scalars;
    assert!(s["round_trip_residual"] <= 1e-12);
    assert!(s["derivative_at_zero"] <= 1e-6);
}

#[test]
fn criterion_08_fixed_point_engine() {
    let r = run_checked(
        "criterion 8: toy root to 1e-12, smallness refusal, MA refinement slope 2 +- 0.2",
        &["fixed-point"],
    );
    let s = &r[0].scalars;
    assert!(s["toy_root_error"] < 1e-12);
    assert!((s["refinement_slope"] - 2.0).abs() <= 0.2);
}

#[test]
fn criterion_09_uniform_invertibility() {
    let r = run_checked(
        "criterion 9: radial inverse bounds within factor 2 over eps in {0.1,0.05,0.025}; rate windows enforced",
        &["uniform-inverse"],
    );
    assert!(r[0].scalars["bound_ratio"] < 2.0);
}

#[test]
fn criterion_10_hodge_dirac() {
    let r = run_checked(
        "criterion 10: Dirac kernel 4 (full) / 0 (even) on 16^4; post-solve orthogonality",
        &["hodge-dirac"],
    );
    let s = &r[0].scalars;
    assert_eq!(s["kernel_full"], 4.0);
    assert_eq!(s["kernel_even"], 0.0);
    assert!(s["orthogonality_normalized"] <= 1e-10);
}

#[test]
fn criterion_11_degeneration_bookkeeping() {
    let r = run_checked("criterion 11: parameter counts 58 / 28 / 10 and exact bubble columns", &["degeneration"]);
    let counts: Vec<f64> = r[0].rows.iter().map(|row| row[2]).collect();
    assert_eq!(counts, vec![58.0, 28.0, 10.0]);
}
