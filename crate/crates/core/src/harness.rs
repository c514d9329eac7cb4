//! Inequality reports assembled from the estimators.
//!
//! Every comparison uses the same decision rule on `gap` and the combined
//! standard error `σ`: `holds` if `gap > tσ`, `holds_with_equality` if
//! `|gap| ≤ tσ`, `violated` if `gap < -tσ`, and `inconclusive` when `σ` is
//! not finite. `t` is the budget's `tol_sigma`, 3 by default.
//!
//! Seed schedule: `h(X)` and `I(X)` are always drawn with the budget seed, so
//! reports on the same law share them; a second independent estimate (the
//! projected law in `verify_kdim` and `verify_fisher_lemma`) uses
//! `stream_seed(seed, 1)`.

use std::f64::consts::{E, PI};
use std::io::Write;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::density::{check_symmetry, gaussian_entropy, rotated_iid_construction, rotation_45, GaussianMixture};
use crate::density::{sample, DensityModel, SymmetryReport, SYMMETRY_TOL};
use crate::error::{Error, Result};
use crate::estimators::{
    entropy_knn, entropy_mc, entropy_quadrature_1d, fisher_mc, mixed_partial_independence, projection_entropy,
    EntropyEstimate, EntropyMethod, FisherEstimate, MixedPartialConfig, QuadratureSpec, DEFAULT_KNN_K,
};
use crate::heat_flow::entropy_via_debruijn;
use crate::linalg::{check_balanced, proof_basis_family, BalancedProjection};
use crate::numfmt::{self, fmt17};
use crate::rng::stream_seed;

/// Probe points used by the symmetry precondition.
pub const SYMMETRY_PROBES: usize = 64;
pub const DEFAULT_SAMPLES: usize = 200_000;
pub const DEFAULT_TOL_SIGMA: f64 = 3.0;

/// Sample size, seed and decision threshold for one report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Budget {
    pub samples: usize,
    #[serde(skip)]
    pub seed: u64,
    #[serde(serialize_with = "numfmt::f64")]
    pub tol_sigma: f64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            samples: DEFAULT_SAMPLES,
            seed: 0,
            tol_sigma: DEFAULT_TOL_SIGMA,
        }
    }
}

impl Budget {
    pub fn with_seed(seed: u64) -> Self {
        Budget {
            seed,
            ..Budget::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    HoldsWithEquality,
    Violated,
    Inconclusive,
}

impl Verdict {
    pub fn from_gap(gap: f64, sigma: f64, tol_sigma: f64) -> Verdict {
        if gap.is_nan() || !sigma.is_finite() {
            Verdict::Inconclusive
        } else if gap.abs() <= tol_sigma * sigma {
            Verdict::HoldsWithEquality
        } else if gap > 0.0 {
            Verdict::Holds
        } else {
            Verdict::Violated
        }
    }

    pub fn holds(self) -> bool {
        matches!(self, Verdict::Holds | Verdict::HoldsWithEquality)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Statement {
    #[serde(rename = "thm_main")]
    Coordinate,
    #[serde(rename = "corollary")]
    Directional,
    #[serde(rename = "thm_kdim")]
    Subspace,
    #[serde(rename = "fisher_lemma")]
    FisherBound,
}

/// Left-hand side of a comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Estimate {
    Entropy(EntropyEstimate),
    Fisher(FisherEstimate),
}

impl Estimate {
    pub fn value(&self) -> f64 {
        match self {
            Estimate::Entropy(e) => e.value,
            Estimate::Fisher(f) => f.value,
        }
    }

    pub fn stderr(&self) -> f64 {
        match self {
            Estimate::Entropy(e) => e.stderr,
            Estimate::Fisher(f) => f.stderr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub statement: Statement,
    pub lhs: Estimate,
    #[serde(serialize_with = "numfmt::f64")]
    pub rhs: f64,
    #[serde(serialize_with = "numfmt::f64")]
    pub rhs_stderr: f64,
    /// `lhs - rhs`, or `rhs - lhs` for the Fisher comparison.
    #[serde(serialize_with = "numfmt::f64")]
    pub gap: f64,
    #[serde(serialize_with = "numfmt::f64")]
    pub sigma: f64,
    pub verdict: Verdict,
    /// Whether the law passed the symmetry check.
    pub symmetric: bool,
    /// Set when the bound is `-∞` and the inequality holds without estimation.
    pub trivial: bool,
    pub law_fingerprint: String,
    pub seed: u64,
    pub budget: Budget,
    pub notes: Vec<String>,
}

impl InequalityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// `|gap| / σ`, zero when both vanish.
    pub fn z(&self) -> f64 {
        crate::estimators::z_score(self.gap, self.sigma)
    }
}

fn combine(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}

fn require_symmetric(mix: &GaussianMixture, seed: u64) -> Result<SymmetryReport> {
    let report = check_symmetry(mix, SYMMETRY_PROBES, seed, SYMMETRY_TOL);
    if !report.verdict {
        return Err(Error::NotSymmetric(report.max_violation));
    }
    Ok(report)
}

struct Parts {
    statement: Statement,
    lhs: Estimate,
    rhs: f64,
    rhs_stderr: f64,
    gap: f64,
    notes: Vec<String>,
}

fn assemble(mix: &GaussianMixture, budget: &Budget, symmetric: bool, trivial: bool, p: Parts) -> InequalityReport {
    let sigma = combine(p.lhs.stderr(), p.rhs_stderr);
    let verdict = if trivial {
        Verdict::Holds
    } else {
        Verdict::from_gap(p.gap, sigma, budget.tol_sigma)
    };
    InequalityReport {
        statement: p.statement,
        lhs: p.lhs,
        rhs: p.rhs,
        rhs_stderr: p.rhs_stderr,
        gap: p.gap,
        sigma,
        verdict,
        symmetric,
        trivial,
        law_fingerprint: mix.fingerprint(),
        seed: budget.seed,
        budget: *budget,
        notes: p.notes,
    }
}

fn entropy_of_law(mix: &GaussianMixture, budget: &Budget) -> Result<EntropyEstimate> {
    entropy_mc(mix, budget.samples, budget.seed)
}

/// `h(Σ Xᵢ/√n) ≥ h(X)/n`.
pub fn verify_main(mix: &GaussianMixture, budget: &Budget) -> Result<InequalityReport> {
    let n = mix.dim();
    let a = vec![1.0 / (n as f64).sqrt(); n];
    let mut report = directional(mix, &a, 0.0, budget)?;
    report.statement = Statement::Coordinate;
    report.notes.clear();
    Ok(report)
}

/// `h(a·X) ≥ h(X)/n + ln(n^{n/2} Π|aᵢ|)` for a unit vector `a`.
pub fn verify_directional(mix: &GaussianMixture, a: &[f64], budget: &Budget) -> Result<InequalityReport> {
    directional(mix, a, directional_log_term(a), budget)
}

fn directional(mix: &GaussianMixture, a: &[f64], log_term: f64, budget: &Budget) -> Result<InequalityReport> {
    let n = mix.dim();
    if a.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.len(),
            context: "direction vector".into(),
        });
    }
    crate::estimators::require_unit(a)?;
    require_symmetric(mix, budget.seed)?;
    let hx = entropy_of_law(mix, budget)?;
    let lhs = projection_entropy(mix, a)?;
    if log_term == f64::NEG_INFINITY {
        return Ok(assemble(
            mix,
            budget,
            true,
            true,
            Parts {
                statement: Statement::Directional,
                lhs: Estimate::Entropy(lhs),
                rhs: f64::NEG_INFINITY,
                rhs_stderr: hx.stderr / n as f64,
                gap: f64::INFINITY,
                notes: vec!["a has a zero coordinate: the bound is -inf".into()],
            },
        ));
    }
    let notes = vec!["bound uses |a_i|: a·X has the same law for every sign pattern of a when X is symmetric".into()];
    let rhs = hx.value / n as f64 + log_term;
    Ok(assemble(
        mix,
        budget,
        true,
        false,
        Parts {
            statement: Statement::Directional,
            lhs: Estimate::Entropy(lhs),
            rhs,
            rhs_stderr: hx.stderr / n as f64,
            gap: lhs.value - rhs,
            notes,
        },
    ))
}

/// `ln(n^{n/2} Π|aᵢ|)`, `-∞` when a coordinate vanishes.
pub fn directional_log_term(a: &[f64]) -> f64 {
    let n = a.len() as f64;
    0.5 * n * n.ln() + a.iter().map(|x| x.abs().ln()).sum::<f64>()
}

/// `h(AX) ≥ (k/n) h(X)` for a balanced `k×n` projection `A`.
pub fn verify_kdim(mix: &GaussianMixture, a: &BalancedProjection, budget: &Budget) -> Result<InequalityReport> {
    let n = mix.dim();
    if a.cols != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.cols,
            context: "projection columns".into(),
        });
    }
    let balance = check_balanced(&a.matrix, 1e-10);
    if !balance.balanced {
        return Err(Error::NotBalanced {
            row_dev: balance.row_deviation,
            col_dev: balance.column_deviation,
        });
    }
    require_symmetric(mix, budget.seed)?;
    let k = a.rows;
    let lhs = if k == 1 {
        let row: Vec<f64> = a.matrix.row(0).iter().copied().collect();
        projection_entropy(mix, &row)?
    } else {
        let projected = mix.push_forward_linear(&a.matrix)?.merge_duplicates()?;
        entropy_mc(&projected, budget.samples, stream_seed(budget.seed, 1))?
    };
    let hx = entropy_of_law(mix, budget)?;
    // k·h/n rather than (k/n)·h so that k = 1 rounds like the main bound
    let rhs = k as f64 * hx.value / n as f64;
    Ok(assemble(
        mix,
        budget,
        true,
        false,
        Parts {
            statement: Statement::Subspace,
            lhs: Estimate::Entropy(lhs),
            rhs,
            rhs_stderr: k as f64 * hx.stderr / n as f64,
            gap: lhs.value - rhs,
            notes: Vec::new(),
        },
    ))
}

/// `I(Σ Xᵢ/√n) ≤ I(X)/n`; the gap is `rhs - lhs`.
pub fn verify_fisher_lemma(mix: &GaussianMixture, budget: &Budget) -> Result<InequalityReport> {
    require_symmetric(mix, budget.seed)?;
    let n = mix.dim();
    let row = DMatrix::from_element(1, n, 1.0 / (n as f64).sqrt());
    let projected = mix.push_forward_linear(&row)?.merge_duplicates()?;
    let lhs = fisher_mc(&projected, budget.samples, stream_seed(budget.seed, 1))?;
    let ix = fisher_mc(mix, budget.samples, budget.seed)?;
    let rhs = ix.value / n as f64;
    Ok(assemble(
        mix,
        budget,
        true,
        false,
        Parts {
            statement: Statement::FisherBound,
            lhs: Estimate::Fisher(lhs),
            rhs,
            rhs_stderr: ix.stderr / n as f64,
            gap: rhs - lhs.value,
            notes: Vec::new(),
        },
    ))
}

/// Outcome of [`equality_demo_n2`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EqualityDemoReport {
    pub lhs: EntropyEstimate,
    #[serde(serialize_with = "numfmt::f64")]
    pub rhs: f64,
    #[serde(serialize_with = "numfmt::f64")]
    pub gap: f64,
    #[serde(serialize_with = "numfmt::f64")]
    pub sigma: f64,
    pub verdict: Verdict,
    /// `Z = Rᵀ X` has independent coordinates (vanishing mixed partials).
    pub z_independent: bool,
    #[serde(serialize_with = "numfmt::f64")]
    pub z_max_mixed_partial: f64,
    pub z_symmetric: bool,
    pub law_fingerprint: String,
    pub seed: u64,
    pub budget: Budget,
}

/// Two-dimensional equality case: `X = R Z` with `R` the 45° rotation and
/// `Z₁, Z₂` i.i.d. copies of `base`.
pub fn equality_demo_n2(base: &GaussianMixture, budget: &Budget) -> Result<EqualityDemoReport> {
    if base.dim() != 1 {
        return Err(Error::NotUnivariate(base.dim()));
    }
    let base_check = check_symmetry(base, SYMMETRY_PROBES, budget.seed, SYMMETRY_TOL);
    if !base_check.verdict {
        return Err(Error::NotSymmetricBase(base_check.max_violation));
    }
    let law = rotated_iid_construction(base)?;
    let report = verify_main(&law, budget)?;
    let z = law.push_forward_linear(&rotation_45().transpose())?;
    let independence = mixed_partial_independence(
        &z,
        0,
        &MixedPartialConfig {
            seed: budget.seed,
            ..MixedPartialConfig::default()
        },
    )?;
    let z_symmetric = check_symmetry(&z, SYMMETRY_PROBES, budget.seed, SYMMETRY_TOL).verdict;
    let Estimate::Entropy(lhs) = report.lhs else {
        unreachable!("entropy comparison")
    };
    Ok(EqualityDemoReport {
        lhs,
        rhs: report.rhs,
        gap: report.gap,
        sigma: report.sigma,
        verdict: report.verdict,
        z_independent: independence.verdict,
        z_max_mixed_partial: independence.max_mixed_partial,
        z_symmetric,
        law_fingerprint: law.fingerprint(),
        seed: budget.seed,
        budget: *budget,
    })
}

/// One independence relation `Z(1) ⫫ (Z(2), …, Z(n))` for `Z = Aᵢᵀ X`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndependenceCheck {
    pub basis: usize,
    #[serde(serialize_with = "numfmt::f64")]
    pub max_mixed_partial: f64,
    #[serde(serialize_with = "numfmt::f64")]
    pub tolerance: f64,
    pub independent: bool,
}

/// Outcome of [`gaussianity_probe`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianityReport {
    pub main: InequalityReport,
    #[serde(serialize_with = "numfmt::f64")]
    pub main_gap: f64,
    #[serde(serialize_with = "numfmt::f64")]
    pub main_sigma: f64,
    /// `main_gap > tol_sigma · main_sigma`.
    pub strict_gap: bool,
    pub checks: Vec<IndependenceCheck>,
    pub independence_failures: usize,
}

impl GaussianityReport {
    /// Every relation that holds at equality was observed.
    pub fn all_pass(&self) -> bool {
        self.independence_failures == 0 && self.main.verdict == Verdict::HoldsWithEquality
    }
}

/// Measures the main gap and, for each basis of the proof family, whether
/// the first rotated coordinate is independent of the rest.
pub fn gaussianity_probe(mix: &GaussianMixture, budget: &Budget) -> Result<GaussianityReport> {
    let n = mix.dim();
    if n < 3 {
        return Err(Error::DimensionTooSmall { dim: n, min: 3 });
    }
    let main = verify_main(mix, budget)?;
    let family = proof_basis_family(n)?;
    let config = MixedPartialConfig {
        seed: budget.seed,
        ..MixedPartialConfig::default()
    };
    let checks = family
        .bases
        .iter()
        .enumerate()
        .map(|(i, basis)| {
            let z = mix.push_forward_linear(&basis.matrix().transpose())?;
            let r = mixed_partial_independence(&z, 0, &config)?;
            Ok(IndependenceCheck {
                basis: i,
                max_mixed_partial: r.max_mixed_partial,
                tolerance: r.effective_tol,
                independent: r.verdict,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GaussianityReport {
        main_gap: main.gap,
        main_sigma: main.sigma,
        strict_gap: main.gap > budget.tol_sigma * main.sigma,
        independence_failures: checks.iter().filter(|c| !c.independent).count(),
        checks,
        main,
    })
}

/// One direction of [`direction_scan`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    #[serde(serialize_with = "numfmt::vec")]
    pub a: Vec<f64>,
    #[serde(serialize_with = "numfmt::f64")]
    pub entropy: f64,
    /// Combined stderr of `entropy` and `bound`.
    #[serde(serialize_with = "numfmt::f64")]
    pub stderr: f64,
    #[serde(serialize_with = "numfmt::f64")]
    pub bound: f64,
    #[serde(serialize_with = "numfmt::f64")]
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanTable {
    pub dim: usize,
    pub law_entropy: EntropyEstimate,
    pub rows: Vec<ScanRow>,
    /// Row with the largest projected entropy.
    pub argmax: usize,
    pub law_fingerprint: String,
    pub seed: u64,
    pub budget: Budget,
}

impl ScanTable {
    /// CSV with columns `a1..an,entropy,stderr,bound,margin`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header: Vec<String> = (1..=self.dim)
            .map(|i| format!("a{i}"))
            .chain(["entropy", "stderr", "bound", "margin"].map(String::from))
            .collect();
        writeln!(out, "{}", header.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row
                .a
                .iter()
                .chain([&row.entropy, &row.stderr, &row.bound, &row.margin])
                .map(|x| fmt17(*x))
                .collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }

    /// Every row satisfies `margin ≥ -tσ`.
    pub fn all_within(&self, tol_sigma: f64) -> bool {
        self.rows.iter().all(|r| r.margin >= -tol_sigma * r.stderr)
    }
}

/// Unit directions in the closed positive quadrant (`n = 2`, angles
/// `j·(π/2)/resolution`) or the open positive octant (`n = 3`, a Fibonacci
/// sphere of `8·resolution` points).
pub fn scan_directions(n: usize, resolution: usize) -> Result<Vec<Vec<f64>>> {
    if resolution == 0 {
        return Err(Error::invalid("resolution", "must be at least 1"));
    }
    match n {
        2 => Ok((0..resolution)
            .map(|j| {
                let theta = j as f64 * (PI / 2.0) / resolution as f64;
                vec![theta.cos(), theta.sin()]
            })
            .collect()),
        3 => {
            let total = 8 * resolution;
            let golden = PI * (3.0 - 5f64.sqrt());
            Ok((0..total)
                .map(|i| {
                    let y = 1.0 - 2.0 * (i as f64 + 0.5) / total as f64;
                    let r = (1.0 - y * y).sqrt();
                    let phi = golden * i as f64;
                    let v = [r * phi.cos(), y, r * phi.sin()];
                    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    v.iter().map(|x| x / norm).collect::<Vec<f64>>()
                })
                .filter(|v| v.iter().all(|&x| x > 0.0))
                .collect())
        }
        other => Err(Error::UnsupportedDimension(other)),
    }
}

/// Projected entropy and directional bound over a grid of directions.
pub fn direction_scan(mix: &GaussianMixture, resolution: usize, budget: &Budget) -> Result<ScanTable> {
    let n = mix.dim();
    let directions = scan_directions(n, resolution)?;
    require_symmetric(mix, budget.seed)?;
    let hx = entropy_of_law(mix, budget)?;
    let rows = directions
        .into_iter()
        .map(|a| {
            let e = projection_entropy(mix, &a)?;
            let bound = hx.value / n as f64 + directional_log_term(&a);
            let stderr = combine(e.stderr, hx.stderr / n as f64);
            Ok(ScanRow {
                entropy: e.value,
                stderr,
                bound,
                margin: e.value - bound,
                a,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let argmax = rows
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.entropy.total_cmp(&y.1.entropy))
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok(ScanTable {
        dim: n,
        law_entropy: hx,
        rows,
        argmax,
        law_fingerprint: mix.fingerprint(),
        seed: budget.seed,
        budget: *budget,
    })
}

/// `N(0, [[1,ρ],[ρ,1]])` compared in closed form along `(1,1)/√2`:
/// `h(Y) = ½ ln(2πe(1+ρ))`, `h(X)/2 = ¼ ln((2πe)²(1-ρ²))`,
/// `gap = ½ ln(1+ρ) - ¼ ln(1-ρ²)`.
pub fn asymmetric_counterexample(rho: f64) -> Result<InequalityReport> {
    let law = crate::fixtures::correlated_gaussian(rho)?;
    let symmetric = check_symmetry(&law, SYMMETRY_PROBES, 0, SYMMETRY_TOL).verdict;
    let c = 2.0 * PI * E;
    let lhs = 0.5 * (c * (1.0 + rho)).ln();
    let rhs = gaussian_entropy(law.components()[0].cov()) / 2.0;
    let gap = 0.5 * (1.0 + rho).ln() - 0.25 * (1.0 - rho * rho).ln();
    let budget = Budget {
        samples: 0,
        seed: 0,
        tol_sigma: DEFAULT_TOL_SIGMA,
    };
    Ok(assemble(
        &law,
        &budget,
        symmetric,
        false,
        Parts {
            statement: Statement::Coordinate,
            lhs: Estimate::Entropy(EntropyEstimate {
                value: lhs,
                stderr: 0.0,
                method: EntropyMethod::ClosedForm,
                count: 0,
            }),
            rhs,
            rhs_stderr: 0.0,
            gap,
            notes: vec!["closed-form Gaussian entropies; no sampling".into()],
        },
    ))
}

/// One line of the calibration battery.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationEntry {
    pub estimator: String,
    pub dim: usize,
    #[serde(serialize_with = "numfmt::f64")]
    pub variance: f64,
    #[serde(serialize_with = "numfmt::f64")]
    pub expected: f64,
    #[serde(serialize_with = "numfmt::f64")]
    pub value: f64,
    #[serde(serialize_with = "numfmt::f64")]
    pub stderr: f64,
    #[serde(serialize_with = "numfmt::f64")]
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationReport {
    pub entries: Vec<CalibrationEntry>,
    #[serde(serialize_with = "numfmt::f64")]
    pub max_z: f64,
    pub pass: bool,
    pub seed: u64,
    pub budget: Budget,
}

pub const CALIBRATION_DIMS: [usize; 4] = [1, 2, 3, 4];
pub const CALIBRATION_VARIANCES: [f64; 3] = [0.25, 1.0, 4.0];
/// Heat-flow nodes used by the calibration battery.
pub const CALIBRATION_NODES: usize = 32;

/// Closed-form Gaussian checks of every estimator over
/// [`CALIBRATION_DIMS`] × [`CALIBRATION_VARIANCES`].
pub fn calibrate(budget: &Budget) -> Result<CalibrationReport> {
    let mut entries = Vec::new();
    let mut stream = 0u64;
    let mut next_seed = || {
        stream += 1;
        stream_seed(budget.seed, stream)
    };
    let mut push = |estimator: &str, dim: usize, variance: f64, expected: f64, value: f64, stderr: f64| {
        entries.push(CalibrationEntry {
            estimator: estimator.to_string(),
            dim,
            variance,
            expected,
            value,
            stderr,
            z: crate::estimators::z_score(value - expected, stderr),
        });
    };
    for &n in &CALIBRATION_DIMS {
        for &v in &CALIBRATION_VARIANCES {
            let g = GaussianMixture::isotropic(n, v)?;
            let h = gaussian_entropy(&DMatrix::from_diagonal_element(n, n, v));
            let e = entropy_mc(&g, budget.samples, next_seed())?;
            push("entropy_mc", n, v, h, e.value, e.stderr);
            if n == 1 {
                let e = entropy_quadrature_1d(&g, &QuadratureSpec::default())?;
                push("entropy_quadrature_1d", n, v, h, e.value, e.stderr);
            }
            let e = entropy_knn(&sample(&g, budget.samples, next_seed()), DEFAULT_KNN_K)?;
            push("entropy_knn", n, v, h, e.value, e.stderr);
            let f = fisher_mc(&g, budget.samples, next_seed())?;
            push("fisher_mc", n, v, n as f64 / v, f.value, f.stderr);
            let e = entropy_via_debruijn(&g, CALIBRATION_NODES, budget.samples, next_seed())?;
            push("entropy_via_debruijn", n, v, h, e.entropy.value, e.entropy.stderr);
        }
    }
    let max_z = entries.iter().map(|e| e.z).fold(0.0, f64::max);
    Ok(CalibrationReport {
        pass: max_z <= budget.tol_sigma,
        entries,
        max_z,
        seed: budget.seed,
        budget: *budget,
    })
}
