//! Acceptance gate: runs every criterion, prints one line each, and exits
//! non-zero if any fails.

use std::f64::consts::{E, FRAC_1_SQRT_2, PI};
use std::process::Command;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use symentropy::density::DensityModel;
use symentropy::estimators::{
    cross_term_mc, entropy_quadrature_1d, score_projection_residual, QuadratureSpec,
};
use symentropy::fixtures::{bimodal, bimodal_product, correlated_gaussian, gaussian_iid, rotated_bimodal, trimodal};
use symentropy::harness::{
    asymmetric_counterexample, calibrate, equality_demo_n2, gaussianity_probe, verify_fisher_lemma, verify_kdim,
    verify_main, Budget, Verdict,
};
use symentropy::heat_flow::entropy_via_debruijn;
use symentropy::linalg::{balanced_projection, ProjectionMethod};
use symentropy::GaussianMixture;

const TOL_SIGMA: f64 = 3.0;
const SAMPLES: usize = 200_000;
const SEED: u64 = 7;
/// Ceiling on the combined stderr of Gaussian equality cases.
const GAUSSIAN_SIGMA_CEILING: f64 = 0.01;
const RESIDUAL_EXACT: f64 = 1e-10;
const DEBRUIJN_NODES: usize = 64;
const DEBRUIJN_SAMPLES: usize = 100_000;
const DEBRUIJN_TOL: f64 = 0.01;
const DEBRUIJN_SECONDS: f64 = 300.0;
const COUNTEREXAMPLE_TOL: f64 = 1e-6;
const COUNTEREXAMPLE_LITERAL: f64 = -0.73612;
const STABILITY_SEEDS: std::ops::RangeInclusive<u64> = 1..=10;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn budget(seed: u64) -> Budget {
    Budget {
        samples: SAMPLES,
        seed,
        tol_sigma: TOL_SIGMA,
    }
}

/// Symmetric laws for the main suite: (name, law, is Gaussian).
fn main_fixtures() -> Vec<(&'static str, GaussianMixture, bool)> {
    vec![
        ("gaussian-iid-n3", gaussian_iid(3), true),
        ("gaussian-iid-n4", gaussian_iid(4), true),
        ("bimodal-product-n2", bimodal_product(2), false),
        ("bimodal-product-n3", bimodal_product(3), false),
        ("rotated-bimodal", rotated_bimodal(), false),
    ]
}

fn calibration() -> Outcome {
    let report = calibrate(&budget(SEED)).expect("calibration runs");
    let worst = report
        .entries
        .iter()
        .max_by(|a, b| a.z.total_cmp(&b.z))
        .expect("non-empty battery");
    outcome(
        report.max_z <= TOL_SIGMA,
        format!(
            "{} checks, max z {:.2} ({} n={} var={})",
            report.entries.len(),
            report.max_z,
            worst.estimator,
            worst.dim,
            worst.variance
        ),
    )
}

fn main_suite() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, law, gaussian) in main_fixtures() {
        let r = verify_main(&law, &budget(SEED)).expect("symmetric fixture");
        let ok = if gaussian {
            r.verdict == Verdict::HoldsWithEquality && r.sigma <= GAUSSIAN_SIGMA_CEILING
        } else {
            r.verdict.holds()
        };
        pass &= ok;
        parts.push(format!("{name} {:?} gap {:.4} sigma {:.4}", r.verdict, r.gap, r.sigma));
    }
    outcome(pass, parts.join("; "))
}

fn two_dim_equality() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, base) in [("bimodal", bimodal()), ("trimodal", trimodal())] {
        let r = equality_demo_n2(&base, &budget(SEED)).expect("symmetric base");
        let ok = r.gap.abs() <= TOL_SIGMA * r.sigma && r.z_independent;
        pass &= ok;
        parts.push(format!("{name} gap {:.5} sigma {:.5} z-independent {}", r.gap, r.sigma, r.z_independent));
    }
    outcome(pass, parts.join("; "))
}

fn gaussianity() -> Outcome {
    let b = gaussianity_probe(&bimodal_product(3), &budget(SEED)).expect("n = 3");
    let g = gaussianity_probe(&gaussian_iid(3), &budget(SEED)).expect("n = 3");
    let pass = b.strict_gap && b.main_gap > 0.0 && b.independence_failures >= 1 && g.all_pass();
    outcome(
        pass,
        format!(
            "bimodal gap {:.4} ({:.1} sigma), {} of {} relations fail; gaussian gap {:.5}, {} failures",
            b.main_gap,
            b.main_gap / b.main_sigma,
            b.independence_failures,
            b.checks.len(),
            g.main_gap,
            g.independence_failures
        ),
    )
}

fn kdim() -> Outcome {
    let shapes = [
        (1, 3, ProjectionMethod::Hadamard),
        (2, 4, ProjectionMethod::Hadamard),
        (4, 8, ProjectionMethod::Hadamard),
        (2, 5, ProjectionMethod::FrequencyPairs),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, n, method) in shapes {
        let a = balanced_projection(k, n, method).expect("supported shape");
        let g = verify_kdim(&gaussian_iid(n), &a, &budget(SEED)).expect("balanced");
        let b = verify_kdim(&bimodal_product(n), &a, &budget(SEED)).expect("balanced");
        pass &= g.verdict == Verdict::HoldsWithEquality && b.verdict.holds();
        parts.push(format!("({k},{n}) gaussian {:?} bimodal {:?} gap {:.4}", g.verdict, b.verdict, b.gap));
    }
    outcome(pass, parts.join("; "))
}

fn fisher_bound() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, law, gaussian) in main_fixtures() {
        let r = verify_fisher_lemma(&law, &budget(SEED)).expect("symmetric fixture");
        let ok = if gaussian {
            r.verdict == Verdict::HoldsWithEquality
        } else {
            r.verdict.holds()
        };
        pass &= ok;
        parts.push(format!("{name} {:?}", r.verdict));
    }
    outcome(pass, parts.join("; "))
}

fn cross_terms() -> Outcome {
    let mut pass = true;
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (_, law, _) in main_fixtures() {
        let n = law.dim();
        for i in 0..n {
            for j in i + 1..n {
                let c = cross_term_mc(&law, i, j, SAMPLES, SEED + (i * n + j) as u64).expect("valid pair");
                let z = c.z_score(0.0);
                worst = worst.max(z);
                pass &= z <= TOL_SIGMA;
                count += 1;
            }
        }
    }
    let rho: f64 = -0.9;
    // precision matrix of [[1, ρ], [ρ, 1]]: off-diagonal -ρ / (1 - ρ²)
    let expected = -rho / (1.0 - rho * rho);
    let c = cross_term_mc(&correlated_gaussian(rho).unwrap(), 0, 1, SAMPLES, SEED).unwrap();
    let detected = c.value.abs() > TOL_SIGMA * c.stderr;
    pass &= c.z_score(expected) <= TOL_SIGMA && detected && (expected - 4.7368).abs() < 1e-4;
    outcome(
        pass,
        format!(
            "{count} symmetric pairs, max z {worst:.2}; correlated {:.4} +- {:.4} vs {expected:.4}",
            c.value, c.stderr
        ),
    )
}

fn score_projection() -> Outcome {
    let cov = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, -0.2, 0.3, 2.0, 0.4, -0.2, 0.4, 1.5]);
    let g3 = GaussianMixture::gaussian(DVector::from_vec(vec![0.5, -1.0, 0.0]), cov).unwrap();
    let s = 1.0 / 3f64.sqrt();
    let r1 = score_projection_residual(&g3, &DMatrix::from_row_slice(1, 3, &[s, s, s]), 8, 2_000, SEED).unwrap();
    let h = balanced_projection(2, 4, ProjectionMethod::Hadamard).unwrap();
    let r2 = score_projection_residual(&gaussian_iid(4), &h.matrix, 8, 2_000, SEED).unwrap();
    let a = DMatrix::from_row_slice(1, 2, &[FRAC_1_SQRT_2, FRAC_1_SQRT_2]);
    let r3 = score_projection_residual(&bimodal_product(2), &a, 5, 100_000, SEED).unwrap();
    let pass = r1.max_residual <= RESIDUAL_EXACT && r2.max_residual <= RESIDUAL_EXACT && r3.max_z <= TOL_SIGMA;
    outcome(
        pass,
        format!(
            "gaussian residuals {:.1e}, {:.1e}; bimodal max residual {:.2e} (max z {:.2})",
            r1.max_residual, r2.max_residual, r3.max_residual, r3.max_z
        ),
    )
}

fn debruijn() -> Outcome {
    let law = bimodal();
    let q = entropy_quadrature_1d(&law, &QuadratureSpec::default()).unwrap();
    let start = Instant::now();
    let d = entropy_via_debruijn(&law, DEBRUIJN_NODES, DEBRUIJN_SAMPLES, SEED).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let diff = (d.entropy.value - q.value).abs();
    outcome(
        diff < DEBRUIJN_TOL && secs <= DEBRUIJN_SECONDS,
        format!(
            "heat-flow {:.5} +- {:.5} vs quadrature {:.5}, |diff| {diff:.5}, {secs:.1}s",
            d.entropy.value, d.entropy.stderr, q.value
        ),
    )
}

fn run_cli(args: &[&str], threads: &str) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_symentropy"))
        .args(args)
        .env("SYMENTROPY_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn counterexample() -> (Outcome, String) {
    let r = asymmetric_counterexample(-0.9).unwrap();
    let rho: f64 = -0.9;
    let c = 2.0 * PI * E;
    // independent oracle: ½ln(2πe(1+ρ)) - ¼ln((2πe)²(1-ρ²))
    let oracle = 0.5 * (c * (1.0 + rho)).ln() - 0.25 * (c * c * (1.0 - rho * rho)).ln();
    let out = run_cli(&["counterexample"], "2");
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).expect("json report");
    let cli_gap = json["gap"].as_f64().unwrap();
    let asym = run_cli(&["verify", "--law", "builtin:correlated-gaussian-rho-0.9"], "2");
    let pass = (r.gap - oracle).abs() <= COUNTEREXAMPLE_TOL
        && r.verdict == Verdict::Violated
        && !r.symmetric
        && out.status.code() == Some(0)
        && cli_gap == r.gap
        && asym.status.code() == Some(2);
    let note = format!(
        "note: rounded reference {COUNTEREXAMPLE_LITERAL} differs from the closed form {oracle:.7} by {:.1e}",
        (COUNTEREXAMPLE_LITERAL - oracle).abs()
    );
    (
        outcome(
            pass,
            format!(
                "gap {:.7} vs closed form {oracle:.7}, verdict {:?}, exit {:?}, asymmetric verify exit {:?}",
                r.gap,
                r.verdict,
                out.status.code(),
                asym.status.code()
            ),
        ),
        note,
    )
}

fn reproducibility() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let invocations: [&[&str]; 3] = [
        &["verify", "--law", "builtin:bimodal-product-n3", "--samples", "50000", "--seed", "3"],
        &["scan", "--law", "builtin:rotated-bimodal", "--resolution", "30", "--samples", "50000"],
        &["kdim", "--law", "builtin:bimodal-product-n4", "--k", "2", "--samples", "50000"],
    ];
    let mut identical = true;
    for (i, args) in invocations.iter().enumerate() {
        let mut files = Vec::new();
        for (run, threads) in ["1", "4", "4"].iter().enumerate() {
            let path = dir.path().join(format!("r{i}-{run}"));
            let mut full: Vec<&str> = args.to_vec();
            let p = path.to_str().unwrap().to_string();
            full.extend(["--out", &p]);
            let out = run_cli(&full, threads);
            identical &= out.status.code() == Some(0);
            files.push(std::fs::read(&path).unwrap());
        }
        identical &= files.windows(2).all(|w| w[0] == w[1]);
    }
    let mut stable = true;
    let mut parts = Vec::new();
    for (name, law, _) in main_fixtures() {
        let verdicts: Vec<Verdict> = STABILITY_SEEDS
            .map(|s| verify_main(&law, &budget(s)).unwrap().verdict)
            .collect();
        let same = verdicts.iter().all(|v| *v == verdicts[0]);
        stable &= same;
        parts.push(format!("{name} {:?}{}", verdicts[0], if same { "" } else { " (unstable)" }));
    }
    outcome(
        identical && stable,
        format!("byte-identical reports {identical}; 10-seed verdicts: {}", parts.join(", ")),
    )
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("calibration battery", calibration),
        ("main inequality on symmetric mixtures", main_suite),
        ("two-dimensional non-Gaussian equality", two_dim_equality),
        ("Gaussianity evidence for n = 3", gaussianity),
        ("balanced k-dimensional projections", kdim),
        ("Fisher information of the normalized sum", fisher_bound),
        ("vanishing score cross terms", cross_terms),
        ("score projection identity", score_projection),
        ("heat-flow entropy representation", debruijn),
    ];
    let mut failures = 0;
    let mut number = 0;
    let report = |name: &str, o: &Outcome, number: usize| {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {number:>2} {name}: {}", o.detail);
    };
    for (name, check) in criteria {
        number += 1;
        let start = Instant::now();
        let o = check();
        report(name, &o, number);
        println!("        ({:.1}s)", start.elapsed().as_secs_f64());
        failures += usize::from(!o.pass);
    }
    number += 1;
    let (o, note) = counterexample();
    report("symmetry necessity counterexample", &o, number);
    println!("        {note}");
    failures += usize::from(!o.pass);
    number += 1;
    let o = reproducibility();
    report("reproducibility", &o, number);
    failures += usize::from(!o.pass);

    println!("acceptance: {} of {number} criteria pass", number - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
