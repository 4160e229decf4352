//! The twelve acceptance criteria, one PASS/FAIL line each.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::process::Command;
use std::time::{Duration, Instant};

use ogk::orlicz::{gauge_abs, orlicz_abs};
use ogk::suites::{run, CheckRecord, RunReport, SuiteConfig, Verdict};
use ogk::young::YoungFunction;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: Vec<bool>,
}

impl Outcome {
    fn report(&mut self, n: usize, what: &str, ok: bool, detail: String) {
        println!("{} criterion {n:>2}: {what} ({detail})", if ok { "PASS" } else { "FAIL" });
        self.passed.push(ok);
    }
}

/// Records of `suite` whose names start with `prefix`.
fn records<'a>(r: &'a RunReport, suite: &str, prefix: &str) -> Vec<&'a CheckRecord> {
    r.suites
        .iter()
        .filter(|s| s.suite == suite)
        .flat_map(|s| s.checks.iter())
        .filter(|c| c.name.starts_with(prefix))
        .collect()
}

/// All of the records pass and there is at least one.
fn all_pass(rs: &[&CheckRecord]) -> (bool, String) {
    let failed: Vec<&str> = rs.iter().filter(|c| c.verdict == Verdict::Fail).map(|c| c.name.as_str()).collect();
    let worst = rs.iter().map(|c| c.slack).fold(f64::INFINITY, f64::min);
    (
        !rs.is_empty() && failed.is_empty(),
        format!("{} checks, worst slack {worst:.3e}, failed {:?}", rs.len(), failed),
    )
}

fn group_pass(r: &RunReport, parts: &[(&str, &str)]) -> (bool, String) {
    let mut ok = true;
    let mut details = Vec::new();
    for (suite, prefix) in parts {
        let (o, d) = all_pass(&records(r, suite, prefix));
        ok &= o;
        details.push(format!("{prefix}: {d}"));
    }
    (ok, details.join("; "))
}

fn norm_engine(out: &mut Outcome) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let powers: Vec<(f64, YoungFunction)> = [1.5, 2.0, 3.0].iter().map(|&p| (p, YoungFunction::power(p).unwrap())).collect();
    let (mut worst_gauge, mut worst_orlicz): (f64, f64) = (0.0, 0.0);
    for _ in 0..10_000 {
        let len = rng.gen_range(1..=64);
        let a: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..10.0)).collect();
        let w = vec![1.0; len];
        for (p, phi) in &powers {
            let exact = a.iter().map(|v| v.powf(*p)).sum::<f64>().powf(1.0 / p);
            let k = gauge_abs(phi, &a, &w).unwrap();
            worst_gauge = worst_gauge.max((k - exact).abs() / exact);
            if *p == 2.0 {
                let (o, _) = orlicz_abs(phi, &a, &w).unwrap();
                worst_orlicz = worst_orlicz.max((o - 2.0 * exact).abs() / (2.0 * exact));
            }
        }
    }
    let took = start.elapsed();
    out.report(
        1,
        "gauge norm is the p-norm, Orlicz norm of x² is 2‖f‖₂",
        worst_gauge <= 1e-9 && worst_orlicz <= 1e-8 && took <= Duration::from_secs(10),
        format!("10⁴ vectors, gauge rel err {worst_gauge:.2e}, Orlicz rel err {worst_orlicz:.2e}, {:.2} s", took.as_secs_f64()),
    );
}

fn strip_timing(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Object(m) => {
            m.remove("wall_time_ms");
            m.values_mut().for_each(strip_timing);
        }
        serde_json::Value::Array(a) => a.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

fn determinism(out: &mut Outcome) {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let mut reports = Vec::new();
    let mut codes = Vec::new();
    for i in 0..2 {
        let path = dir.path().join(format!("r{i}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_ogk"))
            .args(["check", "all", "--seed", "7", "--out", path.to_str().unwrap()])
            .status()
            .expect("binary runs");
        codes.push(status.code());
        let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        strip_timing(&mut v);
        reports.push(serde_json::to_string(&v).unwrap());
    }
    let per_run = start.elapsed() / 2;
    let suites = serde_json::from_str::<serde_json::Value>(&reports[0]).unwrap()["suites"].as_array().map_or(0, |a| a.len());
    out.report(
        12,
        "`ogk check all --seed 7` is reproducible",
        reports[0] == reports[1] && codes == [Some(0), Some(0)] && suites >= 12 && per_run <= Duration::from_secs(300),
        format!("{suites} suites, identical {}, exit codes {codes:?}, {:.1} s per run", reports[0] == reports[1], per_run.as_secs_f64()),
    );
}

#[test]
fn acceptance() {
    let mut out = Outcome { passed: Vec::new() };
    norm_engine(&mut out);

    let cfg = SuiteConfig::new(7, 1000);
    let r = run("all", &cfg).expect("valid config");

    let (ok, d) = group_pass(&r, &[("orlicz.sandwich", "gauge_le_orlicz"), ("orlicz.sandwich", "orlicz_le_twice_gauge")]);
    out.report(2, "‖f‖⁰ ≤ ‖f‖ ≤ 2‖f‖⁰ over all zoo pairs and groupoids", ok, d);

    let (ok, d) = group_pass(&r, &[("young.conjugate", "fenchel_young"), ("orlicz.inequalities", "holder")]);
    out.report(3, "Hölder and Fenchel–Young slacks", ok, d);

    let (ok, d) = group_pass(&r, &[("convalg.structure", "matrix_product")]);
    let sizes = records(&r, "convalg.structure", "matrix_product").len();
    out.report(4, "pair groupoid convolution is matrix multiplication", ok && sizes == 9, d);

    let (ok, d) = group_pass(&r, &[("convalg.isometry", "isometry")]);
    out.report(5, "left translations are isometries", ok && cfg.trials / 10 >= 100, d);

    let (ok, d) = group_pass(
        &r,
        &[
            ("convalg.algebra-bound", "convolution_bound"),
            ("convalg.algebra-bound", "commutative"),
            ("convalg.algebra-bound", "noncommuting_pair_found"),
        ],
    );
    out.report(6, "convolution bound, commutativity, S3 witness", ok, d);

    let (ok, d) = group_pass(&r, &[("convalg.convolvers", "left_convolver_le_l1"), ("convalg.convolvers", "right_convolver_le_2kf2")]);
    out.report(7, "left and right convolution operator bounds", ok, d);

    let (ok, d) = group_pass(
        &r,
        &[
            ("convalg.identity", "exact_identity"),
            ("convalg.identity", "shrinking_monotone"),
            ("convalg.identity", "shrinking_terminal"),
        ],
    );
    out.report(8, "exact identity, shrinking identities", ok, d);

    let agree = records(&r, "ideals.equivalence", "verdicts_agree");
    let total: usize = agree
        .iter()
        .filter_map(|c| c.name.rsplit_once(" of ").and_then(|(_, t)| t.trim_end_matches(" invariant)").parse::<usize>().ok()))
        .sum();
    let (ok, d) = group_pass(&r, &[("ideals.equivalence", "verdicts_agree"), ("ideals.equivalence", "structured")]);
    out.report(9, "invariant subbundles are exactly the left ideals", ok && total >= 200, format!("{total} random subbundles; {d}"));

    let (ok, d) = group_pass(
        &r,
        &[
            ("convolutor.dual", "null_representations_vanish"),
            ("convolutor.dual", "right_module_identity"),
            ("convolutor.dual", "upper_sandwich"),
            ("convolutor.dual", "identity_lower_witness"),
        ],
    );
    out.report(10, "dual functional: null representations, module identity, sandwich", ok, d);

    let (ok, d) = group_pass(
        &r,
        &[
            ("fieldlab.continuity", "closed_form_profile"),
            ("fieldlab.continuity", "modulus_shrinks[z2-linear"),
        ],
    );
    out.report(11, "z2-linear profile matches √(2(1+u)), modulus halves", ok, d);

    determinism(&mut out);

    let failed: Vec<usize> = out.passed.iter().enumerate().filter(|(_, ok)| !**ok).map(|(i, _)| i + 1).collect();
    assert_eq!(out.passed.len(), 12);
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
    assert!(r.passed, "some suite check failed");
}
