//! Entropy and Fisher-information estimators with reported uncertainty, and
//! numerical checks of the score identities behind the inequalities:
//! vanishing cross terms, the score-projection identity, and independence
//! through vanishing mixed partials of the log-density.
//!
//! Monte Carlo quantities report `stderr = sample-std / √count`; quadrature
//! reports the convergence difference between adjacent resolutions.

mod knn;

pub use knn::{entropy_knn, DEFAULT_K as DEFAULT_KNN_K};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::density::{sample, DensityModel, GaussianMixture};
use crate::error::{Error, Result};
use crate::numfmt;
use crate::quadrature::{adaptive, GaussLegendre};
use crate::rng::{map_chunks, merge_all, stream_seed, RunningStats};

/// Smallest sample count accepted by the Monte Carlo estimators.
pub const MIN_MC_COUNT: usize = 100;
/// Tail mass allowed outside the quadrature window.
pub const MAX_TAIL_MASS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyMethod {
    McLogdensity,
    #[serde(rename = "quadrature_1d")]
    Quadrature1d,
    Knn,
    Debruijn,
    ClosedForm,
}

/// Differential entropy in nats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyEstimate {
    #[serde(serialize_with = "numfmt::f64")]
    pub value: f64,
    #[serde(serialize_with = "numfmt::f64")]
    pub stderr: f64,
    pub method: EntropyMethod,
    pub count: usize,
}

/// Trace of the Fisher information matrix, `E‖∇log f(X)‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FisherEstimate {
    #[serde(serialize_with = "numfmt::f64")]
    pub value: f64,
    #[serde(serialize_with = "numfmt::f64")]
    pub stderr: f64,
    pub count: usize,
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    #[serde(serialize_with = "numfmt::f64")]
    pub value: f64,
    #[serde(serialize_with = "numfmt::f64")]
    pub stderr: f64,
    pub count: usize,
}

impl MeanEstimate {
    pub fn z_score(&self, reference: f64) -> f64 {
        z_score(self.value - reference, self.stderr)
    }
}

/// `diff / stderr`, treating an exact zero difference as zero.
pub fn z_score(diff: f64, stderr: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else {
        diff.abs() / stderr
    }
}

fn check_count(count: usize) -> Result<()> {
    if count < MIN_MC_COUNT {
        return Err(Error::TooFewSamples {
            needed: MIN_MC_COUNT,
            got: count,
        });
    }
    Ok(())
}

/// Averages `stat` over `count` draws; `None` from `stat` aborts with `err`.
fn mc_mean<D, F>(d: &D, count: usize, seed: u64, err: Error, stat: F) -> Result<RunningStats>
where
    D: DensityModel + ?Sized,
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    let n = d.dim();
    let parts = map_chunks(count, seed, |rng, range| {
        let mut x = vec![0.0; n];
        let mut stats = RunningStats::new();
        for _ in range {
            d.sample_into(rng, &mut x);
            match stat(&x) {
                Some(v) if v.is_finite() => stats.push(v),
                _ => return None,
            }
        }
        Some(stats)
    });
    let parts: Option<Vec<RunningStats>> = parts.into_iter().collect();
    parts.map(|p| merge_all(&p)).ok_or(err)
}

/// `-mean log f(Xᵢ)` over the law's own samples.
pub fn entropy_mc<D: DensityModel + ?Sized>(d: &D, count: usize, seed: u64) -> Result<EntropyEstimate> {
    check_count(count)?;
    let stats = mc_mean(d, count, seed, Error::NonFiniteLogDensity, |x| Some(-d.log_density(x)))?;
    Ok(EntropyEstimate {
        value: stats.mean(),
        stderr: stats.stderr(),
        method: EntropyMethod::McLogdensity,
        count,
    })
}

/// Controls for [`entropy_quadrature_1d`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Half-width of the window; `None` uses the law's own tail radius.
    pub radius: Option<f64>,
    /// Gauss–Legendre nodes per panel.
    pub nodes: usize,
    pub initial_panels: usize,
    pub tol: f64,
    pub max_depth: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            radius: None,
            nodes: 20,
            initial_panels: 32,
            tol: 1e-13,
            max_depth: 30,
        }
    }
}

/// `-∫ f log f` over `[-R, R]` by adaptive composite Gauss–Legendre.
///
/// The stderr is the summed `|fine - coarse|` panel differences plus a bound
/// on the truncated tail, `tail_mass(R) * (1 + |log f(R)|)`, plus a rounding
/// floor of `64 ε (1 + |h|)`.
pub fn entropy_quadrature_1d<D: DensityModel + ?Sized>(d: &D, spec: &QuadratureSpec) -> Result<EntropyEstimate> {
    if d.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: d.dim(),
            context: "entropy_quadrature_1d needs a one-dimensional law".into(),
        });
    }
    let radius = match spec.radius.or_else(|| d.tail_radius()) {
        Some(r) if r > 0.0 && r.is_finite() => r,
        _ => return Err(Error::invalid("radius", "a positive finite truncation radius is required")),
    };
    let tail = d.tail_mass(radius).unwrap_or(0.0);
    if tail > MAX_TAIL_MASS {
        return Err(Error::TruncationInsufficient {
            radius,
            tail_mass: tail,
        });
    }
    let rule = GaussLegendre::new(spec.nodes.max(2));
    let q = adaptive(&rule, -radius, radius, spec.initial_panels, spec.tol, spec.max_depth, |x| {
        let lf = d.log_density(&[x]);
        let f = lf.exp();
        if f == 0.0 {
            0.0
        } else {
            -f * lf
        }
    });
    let edge = d.log_density(&[radius]).abs().max(d.log_density(&[-radius]).abs());
    let truncation = tail * (1.0 + if edge.is_finite() { edge } else { 0.0 });
    let rounding = 64.0 * f64::EPSILON * (1.0 + q.value.abs());
    Ok(EntropyEstimate {
        value: q.value,
        stderr: q.error + truncation + rounding,
        method: EntropyMethod::Quadrature1d,
        count: q.panels * rule.len(),
    })
}

/// Checks `‖a‖₂ = 1` within 1e-10.
pub fn require_unit(a: &[f64]) -> Result<()> {
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !((norm - 1.0).abs() <= 1e-10) {
        return Err(Error::NotUnitVector(norm));
    }
    Ok(())
}

/// Entropy of the one-dimensional projection `a·X`, computed analytically
/// through the pushforward mixture and quadrature.
pub fn projection_entropy(mix: &GaussianMixture, a: &[f64]) -> Result<EntropyEstimate> {
    require_unit(a)?;
    let row = DMatrix::from_row_slice(1, a.len(), a);
    let projected = mix.push_forward_linear(&row)?.merge_duplicates()?;
    entropy_quadrature_1d(&projected, &QuadratureSpec::default())
}

/// `mean ‖∇log f(Xᵢ)‖²`.
pub fn fisher_mc<D: DensityModel + ?Sized>(d: &D, count: usize, seed: u64) -> Result<FisherEstimate> {
    check_count(count)?;
    let n = d.dim();
    let stats = mc_mean(d, count, seed, Error::NonFiniteScore, |x| {
        let mut s = vec![0.0; n];
        d.score(x, &mut s);
        Some(s.iter().map(|v| v * v).sum())
    })?;
    Ok(FisherEstimate {
        value: stats.mean(),
        stderr: stats.stderr(),
        count,
    })
}

/// Fisher information of a mixture with the moment-matched Gaussian as a
/// control variate.
///
/// With `m`, `C` the mixture mean and covariance and `P = C⁻¹`, the statistic
/// is `‖ρ(X)‖² - ‖P(X - m)‖²` plus the exact `E‖P(X - m)‖² = tr P`. Draws are
/// identical to [`fisher_mc`] with the same seed. The correction vanishes for
/// a single Gaussian.
pub fn fisher_mc_gaussian_cv(mix: &GaussianMixture, count: usize, seed: u64) -> Result<FisherEstimate> {
    check_count(count)?;
    let stats = fisher_cv_stats(mix, count, seed, |_, v| v)?;
    let (_, trace) = control_variate_parts(mix)?;
    Ok(FisherEstimate {
        value: stats.mean() + trace,
        stderr: stats.stderr(),
        count,
    })
}

pub(crate) fn control_variate_parts(mix: &GaussianMixture) -> Result<(Vec<f64>, f64)> {
    let cov = mix.covariance();
    let prec = cov.clone().try_inverse().ok_or(Error::NotPositiveDefinite {
        index: 0,
        min_eigenvalue: 0.0,
    })?;
    let n = mix.dim();
    let rows: Vec<f64> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| prec[(i, j)]).collect();
    Ok((rows, prec.trace()))
}

/// Per-draw control-variate statistic, mapped through `post(index, value)`.
pub(crate) fn fisher_cv_stats<F>(mix: &GaussianMixture, count: usize, seed: u64, post: F) -> Result<RunningStats>
where
    F: Fn(usize, f64) -> f64 + Sync,
{
    let n = mix.dim();
    let (prec, _) = control_variate_parts(mix)?;
    let mean = mix.mean();
    let parts = map_chunks(count, seed, |rng, range| {
        let mut x = vec![0.0; n];
        let mut s = vec![0.0; n];
        let mut stats = RunningStats::new();
        for i in range {
            mix.sample_into(rng, &mut x);
            mix.score(&x, &mut s);
            let full: f64 = s.iter().map(|v| v * v).sum();
            let mut gauss = 0.0;
            for a in 0..n {
                let mut acc = 0.0;
                for b in 0..n {
                    acc += prec[a * n + b] * (x[b] - mean[b]);
                }
                gauss += acc * acc;
            }
            let v = full - gauss;
            if !v.is_finite() {
                return None;
            }
            stats.push(post(i, v));
        }
        Some(stats)
    });
    let parts: Option<Vec<RunningStats>> = parts.into_iter().collect();
    parts.map(|p| merge_all(&p)).ok_or(Error::NonFiniteScore)
}

/// `E[ρᵢ(X) ρⱼ(X)]` for `i ≠ j`.
pub fn cross_term_mc<D: DensityModel + ?Sized>(
    d: &D,
    i: usize,
    j: usize,
    count: usize,
    seed: u64,
) -> Result<MeanEstimate> {
    let n = d.dim();
    for idx in [i, j] {
        if idx >= n {
            return Err(Error::IndexOutOfRange { index: idx, dim: n });
        }
    }
    if i == j {
        return Err(Error::invalid("j", format!("cross term needs i != j (got i = j = {i})")));
    }
    check_count(count)?;
    let stats = mc_mean(d, count, seed, Error::NonFiniteScore, |x| {
        let mut s = vec![0.0; n];
        d.score(x, &mut s);
        Some(s[i] * s[j])
    })?;
    Ok(MeanEstimate {
        value: stats.mean(),
        stderr: stats.stderr(),
        count,
    })
}

/// Outcome of [`score_projection_residual`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualReport {
    /// `max_y ‖ρ_Y(y) - E[A ρ_X(X) | Y = y]‖₂`.
    pub max_residual: f64,
    /// Standard error of the conditional-mean estimate at the worst probe.
    pub stderr: f64,
    /// Largest `residual / stderr` over probes.
    pub max_z: f64,
    pub probes: usize,
    pub count: usize,
}

struct Conditioner {
    /// `Σ Aᵀ (AΣAᵀ)⁻¹`, `n×k`.
    gain: DMatrix<f64>,
    /// `(I - gain A) L`, a square root of the conditional covariance.
    spread: DMatrix<f64>,
    projected_mean: DVector<f64>,
    mean: DVector<f64>,
}

/// Compares the score of `Y = AX` with the conditional expectation of the
/// projected score of `X`.
///
/// The left side is analytic. The right side samples `X | Y = y` exactly:
/// the component is drawn from its posterior weight at `y`, then the point
/// from that component's Gaussian conditional, using antithetic pairs
/// `c ± Bz`. For a single Gaussian the score is affine, so each antithetic
/// pair reproduces the conditional mean exactly.
pub fn score_projection_residual(
    mix: &GaussianMixture,
    a: &DMatrix<f64>,
    probes: usize,
    count: usize,
    seed: u64,
) -> Result<ResidualReport> {
    let projected = mix.push_forward_linear(a)?;
    let k = a.nrows();
    let n = a.ncols();
    let row_dev = (a * a.transpose() - DMatrix::<f64>::identity(k, k)).abs().max();
    if row_dev > 1e-10 {
        return Err(Error::invalid("A", format!("rows must be orthonormal (deviation {row_dev:e})")));
    }
    if probes == 0 || count == 0 {
        return Err(Error::invalid("probes", "probes and count must be positive"));
    }
    let conds: Vec<Conditioner> = mix
        .components()
        .iter()
        .zip(projected.components())
        .map(|(c, p)| {
            let s_inv = p.cov().clone().try_inverse().ok_or(Error::RankDeficient { min_singular: 0.0 })?;
            let gain = c.cov() * a.transpose() * s_inv;
            let l = c.cov().clone().cholesky().expect("validated SPD").l();
            let spread = (DMatrix::<f64>::identity(n, n) - &gain * a) * l;
            Ok(Conditioner {
                gain,
                spread,
                projected_mean: p.mean().clone(),
                mean: c.mean().clone(),
            })
        })
        .collect::<Result<_>>()?;

    let ys = sample(&projected, probes, stream_seed(seed, u64::MAX));
    let mut report = ResidualReport {
        max_residual: 0.0,
        stderr: 0.0,
        max_z: 0.0,
        probes,
        count,
    };
    for (p, y) in ys.iter().enumerate() {
        let mut lhs = vec![0.0; k];
        projected.score(y, &mut lhs);
        let yv = DVector::from_column_slice(y);
        // posterior component weights at y
        let logs: Vec<f64> = projected
            .components()
            .iter()
            .map(|c| {
                let single = GaussianMixture::gaussian(c.mean().clone(), c.cov().clone()).expect("valid component");
                c.weight().ln() + single.log_density(y)
            })
            .collect();
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let post: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = post.iter().sum();
        let cumulative: Vec<f64> = post
            .iter()
            .scan(0.0, |acc, w| {
                *acc += w / total;
                Some(*acc)
            })
            .collect();
        let centers: Vec<DVector<f64>> = conds
            .iter()
            .map(|c| &c.mean + &c.gain * (&yv - &c.projected_mean))
            .collect();

        let parts = map_chunks(count, stream_seed(seed, p as u64), |rng, range| {
            let mut stats = vec![RunningStats::new(); k];
            let mut z = DVector::<f64>::zeros(n);
            let mut s = vec![0.0; n];
            for _ in range {
                let u: f64 = rng.random();
                let m = cumulative.iter().position(|&c| u < c).unwrap_or(cumulative.len() - 1);
                for zi in z.iter_mut() {
                    *zi = rng.sample(StandardNormal);
                }
                let offset = &conds[m].spread * &z;
                let mut acc = vec![0.0; k];
                for sign in [1.0, -1.0] {
                    let x: Vec<f64> = (0..n).map(|i| centers[m][i] + sign * offset[i]).collect();
                    mix.score(&x, &mut s);
                    for (r, out) in acc.iter_mut().enumerate() {
                        *out += 0.5 * (0..n).map(|c| a[(r, c)] * s[c]).sum::<f64>();
                    }
                }
                for (st, v) in stats.iter_mut().zip(acc) {
                    st.push(v);
                }
            }
            stats
        });
        let mut merged = vec![RunningStats::new(); k];
        for part in &parts {
            for (m, s) in merged.iter_mut().zip(part) {
                m.merge(s);
            }
        }
        let residual = merged
            .iter()
            .zip(&lhs)
            .map(|(m, l)| (m.mean() - l).powi(2))
            .sum::<f64>()
            .sqrt();
        let stderr = merged.iter().map(|m| m.stderr().powi(2)).sum::<f64>().sqrt();
        report.max_z = report.max_z.max(z_score(residual, stderr));
        if residual >= report.max_residual {
            report.max_residual = residual;
            report.stderr = stderr;
        }
    }
    Ok(report)
}

/// Controls for [`mixed_partial_independence`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedPartialConfig {
    pub probes: usize,
    pub step: f64,
    pub tol: f64,
    pub seed: u64,
}

impl Default for MixedPartialConfig {
    fn default() -> Self {
        MixedPartialConfig {
            probes: 64,
            step: 1e-4,
            tol: 1e-5,
            seed: 0,
        }
    }
}

/// Outcome of [`mixed_partial_independence`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndependenceReport {
    pub index: usize,
    /// `max |∂²/∂x_k∂x_i log f|` over probes and `k ≠ i`.
    pub max_mixed_partial: f64,
    pub worst_k: usize,
    /// Largest tolerance used, including the rounding guard.
    pub effective_tol: f64,
    pub probes: usize,
    /// True when every probe stays within its tolerance.
    pub verdict: bool,
}

/// Central mixed second differences of `log f` at sampled probes.
///
/// Coordinate `i` is independent of the others iff every mixed partial
/// `∂²/∂x_k∂x_i log f` vanishes. Each probe is compared with
/// `tol + 16 ε max|log f| / h²`, the rounding floor of the stencil.
pub fn mixed_partial_independence<D: DensityModel + ?Sized>(
    d: &D,
    i: usize,
    config: &MixedPartialConfig,
) -> Result<IndependenceReport> {
    let n = d.dim();
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, dim: n });
    }
    let h = config.step;
    if !(h > 0.0) {
        return Err(Error::invalid("step", "finite-difference step must be positive"));
    }
    let mut report = IndependenceReport {
        index: i,
        max_mixed_partial: 0.0,
        worst_k: if i == 0 { 1.min(n - 1) } else { 0 },
        effective_tol: config.tol,
        probes: config.probes,
        verdict: true,
    };
    let points = sample(d, config.probes.max(1), config.seed);
    let mut y = vec![0.0; n];
    for x in &points {
        for k in (0..n).filter(|&k| k != i) {
            let mut eval = |sk: f64, si: f64| {
                y.copy_from_slice(x);
                y[k] += sk * h;
                y[i] += si * h;
                d.log_density(&y)
            };
            let vals = [eval(1.0, 1.0), eval(1.0, -1.0), eval(-1.0, 1.0), eval(-1.0, -1.0)];
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteLogDensity);
            }
            let mixed = (vals[0] - vals[1] - vals[2] + vals[3]) / (4.0 * h * h);
            let scale = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let tol = config.tol + 16.0 * f64::EPSILON * scale / (h * h);
            report.effective_tol = report.effective_tol.max(tol);
            if mixed.abs() > tol {
                report.verdict = false;
            }
            if mixed.abs() > report.max_mixed_partial {
                report.max_mixed_partial = mixed.abs();
                report.worst_k = k;
            }
        }
    }
    Ok(report)
}
