//! Acceptance suite: one test per release criterion. Each test prints a
//! single pass/fail line with the measured quantities, then asserts.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use nalgebra::Complex;
use qlattice::model::{self, LatticeOperator, Word};
use qlattice::pseudospectrum as ps;
use qlattice::{metric, phase, spectral, ErrorCategory};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

type C64 = Complex<f64>;

fn verdict(criterion: &str, ok: bool, detail: &str) {
    let flag = if ok { "PASS" } else { "FAIL" };
    println!("criterion {criterion}: {flag} [{detail}]");
    assert!(ok, "criterion {criterion}: FAIL [{detail}]");
}

fn op(n: usize, word: &str, t: f64) -> LatticeOperator {
    model::build_operator(n, &model::parse_word(word).unwrap(), t).unwrap()
}

#[test]
fn criterion_01_phase_table_counts() {
    let started = Instant::now();
    let rows = phase::classify_all_words(10, 0.1).unwrap();
    let elapsed = started.elapsed();

    let mut ok = rows.len() == 32;
    let expected = [
        ("ooooo", 0, 10),
        ("ooooe", 2, 10),
        ("ooeee", 6, 10),
        ("eoooe", 2, 10),
        ("eoeee", 2, 10),
        ("eeeee", 10, 10),
    ];
    let mut mismatches = Vec::new();
    for (word, before, after) in expected {
        match rows.iter().find(|r| r.word == word) {
            Some(row) if row.n_real_before == before && row.n_real_after == after => {}
            Some(row) => {
                ok = false;
                mismatches.push(format!(
                    "{word}: got ({}, {})",
                    row.n_real_before, row.n_real_after
                ));
            }
            None => {
                ok = false;
                mismatches.push(format!("{word}: missing"));
            }
        }
    }
    ok &= elapsed.as_secs_f64() < 5.0;
    verdict(
        "01 phase-table counts",
        ok,
        &format!(
            "32-word table in {:.2}s, mismatches: {}",
            elapsed.as_secs_f64(),
            if mismatches.is_empty() { "none".into() } else { mismatches.join("; ") }
        ),
    );
}

#[test]
fn criterion_02_closed_form_spectrum() {
    let mut max_err: f64 = 0.0;
    let mut max_im: f64 = 0.0;
    for n in [2usize, 3, 10, 50] {
        let len = (n / 2).max(1);
        let all_e = (1u128 << len) - 1;
        let alternating = {
            let mut v = 0u128;
            for b in (0..len).step_by(2) {
                v |= 1 << b;
            }
            v
        };
        for index in [0u128, all_e, alternating] {
            let word = Word::from_index(len, index).unwrap();
            for t in [0.01, 0.1, 0.4] {
                let operator = LatticeOperator::build(n, &word, t).unwrap();
                let spectrum = spectral::eigenvalues(&operator).unwrap();
                let radius = 2.0 * (t * (1.0 - t)).sqrt();
                let mut oracle: Vec<f64> = (1..=n)
                    .map(|k| radius * (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos())
                    .collect();
                oracle.sort_by(f64::total_cmp);
                for (got, want) in spectrum.eigenvalues.iter().zip(oracle) {
                    max_err = max_err.max((got.re - want).abs());
                    max_im = max_im.max(got.im.abs());
                }
            }
        }
    }
    let ok = max_err <= 1e-10 && max_im <= 1e-10;
    verdict(
        "02 closed-form spectrum",
        ok,
        &format!("max |re error| {max_err:.2e}, max |im| {max_im:.2e}, tolerance 1e-10"),
    );
}

#[test]
fn criterion_03_unfolding_exponent() {
    let word = model::parse_word("ooooo").unwrap();
    let grid: Vec<f64> = (0..25)
        .map(|k| 10f64.powf(-4.0 + 2.0 * k as f64 / 24.0))
        .collect();
    let sweep = spectral::sweep(10, &word, &grid).unwrap();
    let ids: Vec<usize> = (0..10).collect();
    let fit = spectral::unfolding_fit(&sweep, &ids, (1e-4, 1e-2)).unwrap();
    let worst = fit
        .slopes
        .iter()
        .map(|s| (s - 0.5).abs())
        .fold(0.0f64, f64::max);
    let ok = fit.slopes.len() == 10 && worst <= 0.02;
    verdict(
        "03 unfolding exponent",
        ok,
        &format!(
            "10 trajectories, shared exponent {:.4}, worst |slope - 0.5| = {worst:.2e}, budget 0.02",
            fit.exponent
        ),
    );
}

#[test]
fn criterion_04_jordan_degeneracy() {
    let mut ok = true;
    let mut detail = String::new();
    for n in 2..=12usize {
        let operator = model::jordan_block(n).unwrap();
        let certificate = phase::defectiveness(&operator, C64::new(0.0, 0.0)).unwrap();
        let spectrum = spectral::eigenvalues(&operator).unwrap();
        let max_mag = spectrum
            .eigenvalues
            .iter()
            .map(|q| q.norm())
            .fold(0.0f64, f64::max);
        let good = certificate.rank == n - 1
            && certificate.geometric_multiplicity == 1
            && certificate.algebraic_multiplicity == n
            && max_mag <= 1e-6;
        if !good {
            ok = false;
            detail = format!(
                "n={n}: rank {} geometric {} |q|max {max_mag:.1e}",
                certificate.rank, certificate.geometric_multiplicity
            );
        }
    }
    if ok {
        detail = "n = 2..=12: rank n-1, geometric multiplicity 1, |q| <= 1e-6".into();
    }
    verdict("04 nilpotent degeneracy", ok, &detail);
}

#[test]
fn criterion_05_metric_pipeline() {
    let operator = op(10, "ooooe", 0.1);
    let solution = metric::metric_from_weights(&operator, &[1.0; 10]).unwrap();
    let theta_norm = solution.theta.norm();
    let intertwining_ok = solution.residual <= 1e-10 * theta_norm;
    let positive_ok = solution.positive_definite && solution.min_eigenvalue > 0.0;

    let omega = metric::factor_metric(&solution.theta).unwrap();
    let factor_err = (omega.adjoint() * &omega - &solution.theta).norm();
    let factor_ok = factor_err <= 1e-12;

    let image = metric::hermitize(&operator, &omega).unwrap();
    let herm_ok = image.hermiticity_residual <= 1e-8 * image.q_image.norm();
    let iso_ok = image.isospectrality_residual <= 1e-8;

    let ok = intertwining_ok && positive_ok && factor_ok && herm_ok && iso_ok;
    verdict(
        "05 metric pipeline",
        ok,
        &format!(
            "intertwining {:.1e} (<= 1e-10*|theta|), min eig {:.3e}, factor {factor_err:.1e} (<= 1e-12), \
             hermiticity {:.1e} (<= 1e-8*|image|), isospectrality {:.1e} (<= 1e-8)",
            solution.residual, solution.min_eigenvalue,
            image.hermiticity_residual, image.isospectrality_residual
        ),
    );
}

#[test]
fn criterion_06_intertwiner_dimension() {
    let mut ok = true;
    let mut detail = String::new();
    let mut worst_fit: f64 = 0.0;
    for n in 2..=8usize {
        let len = (n / 2).max(1);
        let all_o = Word::from_index(len, 0).unwrap();
        let all_e = Word::from_index(len, (1u128 << len) - 1).unwrap();
        // positive couplings either way; both spectra are real and simple
        let cases = [
            (all_o.clone(), 0.1),
            (all_o, 0.3),
            (all_e.clone(), -0.1),
            (all_e, -0.3),
        ];
        for (word, t) in cases {
            let operator = LatticeOperator::build(n, &word, t).unwrap();
            let basis = metric::intertwiner_basis(&operator);
            let solution = metric::metric_from_weights(&operator, &vec![1.0; n]).unwrap();
            let fit = metric::span_fit_residual(&basis, &solution.theta);
            worst_fit = worst_fit.max(fit);
            if basis.len() != n || fit > 1e-9 {
                ok = false;
                detail = format!("n={n} word {word} t={t}: dim {} fit {fit:.1e}", basis.len());
            }
        }
    }
    if ok {
        detail = format!("n = 2..=8: null-space dimension n, worst span fit {worst_fit:.1e} (<= 1e-9)");
    }
    verdict("06 intertwiner dimension", ok, &detail);
}

#[test]
fn criterion_07_resolvent_norm_oracle() {
    // 200 random well-separated samples against the dense route.
    let mut rng = ChaCha8Rng::seed_from_u64(20260815);
    let mut accepted = 0usize;
    let mut max_rel: f64 = 0.0;
    while accepted < 200 {
        let n = rng.random_range(2..=20usize);
        let len = (n / 2).max(1);
        let index = rng.random_range(0..(1u128 << len));
        let word = Word::from_index(len, index).unwrap();
        let mut t: f64 = rng.random_range(-0.45..0.45);
        if t.abs() < 0.02 {
            t += 0.1;
        }
        let operator = LatticeOperator::build(n, &word, t).unwrap();
        let z = C64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let dense = ps::sigma_min_dense(&operator, z);
        if dense < 1e-3 {
            // near-singular points have no meaningful relative scale
            continue;
        }
        let fast = ps::sigma_min(&operator, z);
        max_rel = max_rel.max((fast - dense).abs() / dense);
        accepted += 1;
    }
    let routes_ok = max_rel <= 1e-10;

    // Full default grid: bound against the spectrum, timed single-threaded.
    let operator = op(10, "eooee", -0.1);
    let grid = ps::GridSpec::default_window();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let started = Instant::now();
    let field = pool.install(|| ps::resolvent_field(&operator, &grid));
    let elapsed = started.elapsed();
    let spectrum = spectral::eigenvalues(&operator).unwrap();
    let mut max_excess: f64 = 0.0;
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let z = grid.point(ix, iy);
            let dist = spectrum
                .eigenvalues
                .iter()
                .map(|q| (q - z).norm())
                .fold(f64::INFINITY, f64::min);
            max_excess = max_excess.max(field.value(ix, iy) - dist);
        }
    }
    let bound_ok = max_excess <= 1e-12;
    let time_ok = elapsed.as_secs_f64() < 30.0;

    let ok = routes_ok && bound_ok && time_ok;
    verdict(
        "07 resolvent-norm oracle",
        ok,
        &format!(
            "200 samples max relative gap {max_rel:.1e} (<= 1e-10), grid bound excess {max_excess:.1e} \
             (<= 1e-12), 201x201 single-threaded in {:.1}s (< 30s)",
            elapsed.as_secs_f64()
        ),
    );
}

/// Largest threshold at which every real cluster separates from every
/// ghost-bearing cluster, i.e. the bottleneck over real-ghost pairs.
fn real_ghost_bottleneck(word: &str) -> f64 {
    let operator = op(10, word, -0.1);
    let grid = ps::GridSpec::default_window();
    let field = ps::resolvent_field(&operator, &grid);
    let ladder = ps::default_ladder();
    let report = ps::component_report(&operator, &field, &ladder).unwrap();
    let class = spectral::classify_operator(&operator).unwrap();
    let spectrum = spectral::eigenvalues(&operator).unwrap();

    let is_real: Vec<bool> = report
        .clusters
        .iter()
        .map(|c| {
            c.members
                .iter()
                .all(|&m| spectrum.eigenvalues[m].im.abs() <= class.tolerance_used)
        })
        .collect();
    let mixed = report.clusters.iter().enumerate().any(|(i, c)| {
        let any_real = c
            .members
            .iter()
            .any(|&m| spectrum.eigenvalues[m].im.abs() <= class.tolerance_used);
        any_real && !is_real[i]
    });
    assert!(!mixed, "{word}: a cluster mixes real and ghost eigenvalues");

    let mut bottleneck = f64::INFINITY;
    for i in 0..report.clusters.len() {
        for j in 0..report.clusters.len() {
            if is_real[i] && !is_real[j] {
                bottleneck = bottleneck.min(report.merge_matrix[(i, j)]);
            }
        }
    }
    bottleneck
}

#[test]
fn criterion_08_separation_ordering() {
    // Nesting along the default ladder.
    let operator = op(10, "eooee", -0.1);
    let grid = ps::GridSpec::default_window();
    let field = ps::resolvent_field(&operator, &grid);
    let ladder = ps::default_ladder();
    let mut nested = true;
    for pair in ladder.windows(2) {
        let (coarse, fine) = (pair[0], pair[1]);
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                let s = field.value(ix, iy);
                if s < fine && !(s < coarse) {
                    nested = false;
                }
            }
        }
    }

    let strong = real_ghost_bottleneck("eooee");
    let middle = real_ghost_bottleneck("eoooe");
    let weak = real_ghost_bottleneck("eoeee");
    let ordered = strong > middle && middle > weak;

    let ok = nested && ordered;
    verdict(
        "08 separation ordering",
        ok,
        &format!(
            "nesting {}; real-ghost merge thresholds: eooee {strong:.3e}, eoooe {middle:.3e}, \
             eoeee {weak:.3e}; required eooee > eoooe > eoeee",
            if nested { "holds" } else { "violated" }
        ),
    );
}

#[test]
fn criterion_09_projector_properties() {
    let mut ok = true;
    let mut detail = String::new();
    let mut tested = 0usize;
    for n in 2..=12usize {
        let len = (n / 2).max(1);
        let alternating = {
            let mut v = 0u128;
            for b in (0..len).step_by(2) {
                v |= 1 << b;
            }
            v
        };
        let indices = [0u128, (1u128 << len) - 1, alternating, 1];
        for index in indices {
            let word = Word::from_index(len, index).unwrap();
            for t in [-0.1, -0.3, 0.1] {
                let operator = LatticeOperator::build(n, &word, t).unwrap();
                let model = match phase::real_subspace_projector(&operator) {
                    Ok(model) => model,
                    // instances without a simple spectrum are outside
                    // the projector's contract
                    Err(e) if e.category() == ErrorCategory::Numerical => continue,
                    Err(e) => {
                        ok = false;
                        detail = format!("n={n} word {word} t={t}: {e}");
                        continue;
                    }
                };
                tested += 1;
                let p_scale = model.projector.norm().max(1.0);
                let q_scale = operator.frobenius_norm().max(1.0);
                let trace: C64 = model.projector.diagonal().iter().sum();
                let trace_err = (trace - C64::new(model.reduced_dim as f64, 0.0)).norm();

                let mut spectrum_err: f64 = 0.0;
                let dim = model.reduced_dim;
                for &r in &model.real_eigenvalues {
                    let mut shifted = model.q_reduced.clone();
                    for d in 0..dim {
                        shifted[(d, d)] -= C64::new(r, 0.0);
                    }
                    let smallest = shifted
                        .svd(false, false)
                        .singular_values
                        .iter()
                        .fold(f64::INFINITY, |a, &b| a.min(b));
                    spectrum_err = spectrum_err.max(smallest);
                }

                let good = model.idempotency_residual <= 1e-9 * p_scale
                    && model.commutation_residual <= 1e-9 * p_scale * q_scale
                    && trace_err <= 1e-8
                    && (dim == 0 || spectrum_err <= 1e-8);
                if !good {
                    ok = false;
                    detail = format!(
                        "n={n} word {word} t={t}: idempotency {:.1e} commutation {:.1e} \
                         trace error {trace_err:.1e} spectrum error {spectrum_err:.1e}",
                        model.idempotency_residual, model.commutation_residual
                    );
                }
            }
        }
    }

    let probe = phase::real_subspace_projector(&op(10, "ooooe", -0.1)).unwrap();
    if probe.reduced_dim != 2 {
        ok = false;
        detail = format!("(ooooe, -0.1) reduced dimension {} != 2", probe.reduced_dim);
    }
    if ok {
        detail = format!(
            "{tested} simple-spectrum instances to n = 12; (ooooe, -0.1) reduced dimension 2"
        );
    }
    verdict("09 projector properties", ok, &detail);
}

struct CliRun {
    dir: PathBuf,
}

impl CliRun {
    fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!(
            "qlattice-acceptance-{}-{tag}",
            std::process::id()
        ));
        std::fs::create_dir_all(&dir).unwrap();
        CliRun { dir }
    }

    fn run(&self, args: &[&str]) {
        let status = Command::new(env!("CARGO_BIN_EXE_qlattice"))
            .args(args)
            .env("QLATTICE_OUTPUT_DIR", &self.dir)
            .status()
            .unwrap();
        assert!(status.success(), "qlattice {args:?} failed in {:?}", self.dir);
    }
}

impl Drop for CliRun {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.dir);
    }
}

fn files_match(a: &Path, b: &Path, name: &str) -> bool {
    let left = std::fs::read(a.join(name)).unwrap();
    let right = std::fs::read(b.join(name)).unwrap();
    left == right
}

#[test]
fn criterion_10_deterministic_cli() {
    let battery: &[&[&str]] = &[
        &["matrix", "--n", "10", "--word", "ooooe", "--t", "0.1", "--out", "matrix.json"],
        &["matrix", "--n", "10", "--word", "ooooe", "--t", "0.1", "--format", "csv", "--out", "matrix.csv"],
        &["sweep", "--n", "6", "--word", "ooe", "--t-min", "-0.2", "--t-max", "0.2", "--steps", "21", "--format", "csv", "--out", "sweep.csv"],
        &["classify", "--n", "10", "--word", "ooooe", "--t", "-0.1", "--out", "classify.json"],
        &["metric", "--n", "10", "--word", "ooooe", "--t", "0.1", "--hermitize", "--out", "metric.json"],
        &["project", "--n", "10", "--word", "ooooe", "--t", "-0.1", "--hermitize", "--out", "project.json"],
    ];
    let threaded: &[(&[&str], &str, &str)] = &[
        (
            &["pseudospec", "--n", "8", "--word", "eooo", "--t", "-0.1", "--grid", "-1.5", "1.5", "-1.5", "1.5", "31", "31", "--out", "pseudospec.json", "--contours", "contours.json"],
            "1",
            "4",
        ),
        (
            &["phase-table", "--n", "8", "--t0", "0.1", "--format", "csv", "--out", "table.csv"],
            "2",
            "5",
        ),
    ];

    let first = CliRun::new("a");
    let second = CliRun::new("b");
    let mut outputs = Vec::new();
    for args in battery {
        first.run(args);
        second.run(args);
        outputs.push(args[args.len() - 1]);
    }
    for (args, threads_a, threads_b) in threaded {
        let mut with_a: Vec<&str> = args.to_vec();
        with_a.extend(["--threads", threads_a]);
        let mut with_b: Vec<&str> = args.to_vec();
        with_b.extend(["--threads", threads_b]);
        first.run(&with_a);
        second.run(&with_b);
        for chunk in args.windows(2) {
            if chunk[0] == "--out" || chunk[0] == "--contours" {
                outputs.push(chunk[1]);
            }
        }
    }

    let mut mismatched = Vec::new();
    for name in &outputs {
        if !files_match(&first.dir, &second.dir, name) {
            mismatched.push(*name);
        }
    }

    // spot-check that the compared artifacts are real documents
    let doc: serde_json::Value =
        serde_json::from_slice(&std::fs::read(first.dir.join("metric.json")).unwrap()).unwrap();
    let schema_ok = doc.get("schema_version").is_some();

    let ok = mismatched.is_empty() && schema_ok;
    verdict(
        "10 deterministic cli",
        ok,
        &format!(
            "{} artifacts byte-compared across repeated runs and thread counts, mismatches: {}",
            outputs.len(),
            if mismatched.is_empty() { "none".into() } else { mismatched.join(", ") }
        ),
    );
}
