//! Gaussian mixtures and the density-model abstraction.
//!
//! A [`GaussianMixture`] carries exact log-density and score evaluation and
//! stays closed under linear pushforwards, isotropic Gaussian smoothing and
//! coordinate sign reflections, which is everything the estimators need to
//! build the projected and smoothed laws analytically.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::numfmt;
use crate::rng::{map_chunks, StreamRng};

/// Eigenvalue floor for covariance validation.
pub const SPD_FLOOR: f64 = 1e-12;
/// Singular-value floor for full-row-rank checks.
pub const RANK_FLOOR: f64 = 1e-10;
/// Entrywise tolerance used when merging coincident components.
pub const MERGE_TOL: f64 = 1e-12;
/// Largest dimension accepted by [`GaussianMixture::symmetrize`].
pub const MAX_SYMMETRIZE_DIM: usize = 12;
/// Default tolerance for the symmetry preconditions of the verifiers.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// A probability law on R^n with analytic log-density, score and a sampler.
pub trait DensityModel: Sync {
    fn dim(&self) -> usize;

    /// Natural log of the density at `x`.
    fn log_density(&self, x: &[f64]) -> f64;

    /// Gradient of the log-density at `x`, written into `out`.
    fn score(&self, x: &[f64], out: &mut [f64]);

    /// Draws one point from the law.
    fn sample_into(&self, rng: &mut StreamRng, out: &mut [f64]);

    /// Probability outside `[-r, r]` for one-dimensional laws, when known.
    fn tail_mass(&self, _radius: f64) -> Option<f64> {
        None
    }

    /// A truncation radius suitable for quadrature, when known.
    fn tail_radius(&self) -> Option<f64> {
        None
    }
}

impl<D: DensityModel + ?Sized> DensityModel for &D {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn log_density(&self, x: &[f64]) -> f64 {
        (**self).log_density(x)
    }
    fn score(&self, x: &[f64], out: &mut [f64]) {
        (**self).score(x, out)
    }
    fn sample_into(&self, rng: &mut StreamRng, out: &mut [f64]) {
        (**self).sample_into(rng, out)
    }
    fn tail_mass(&self, radius: f64) -> Option<f64> {
        (**self).tail_mass(radius)
    }
    fn tail_radius(&self) -> Option<f64> {
        (**self).tail_radius()
    }
}

/// One weighted Gaussian component with cached factorizations.
#[derive(Debug, Clone)]
pub struct Component {
    weight: f64,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    // row-major lower Cholesky factor and precision matrix
    chol: Vec<f64>,
    prec: Vec<f64>,
    log_norm: f64,
}

impl Component {
    fn build(index: usize, weight: f64, mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        let sym = (&cov + cov.transpose()) * 0.5;
        let min_eig = SymmetricEigen::new(sym.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if !(min_eig > SPD_FLOOR) {
            return Err(Error::NotPositiveDefinite {
                index,
                min_eigenvalue: min_eig,
            });
        }
        let chol = sym.clone().cholesky().ok_or(Error::NotPositiveDefinite {
            index,
            min_eigenvalue: min_eig,
        })?;
        let l = chol.l();
        let log_det: f64 = 2.0 * (0..n).map(|i| l[(i, i)].ln()).sum::<f64>();
        let prec = chol.inverse();
        let prec = (&prec + prec.transpose()) * 0.5;
        Ok(Component {
            weight,
            chol: row_major(&l),
            prec: row_major(&prec),
            log_norm: -0.5 * (n as f64 * (2.0 * PI).ln() + log_det),
            mean,
            cov: sym,
        })
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Log of `weight * N(x; mean, cov)`.
    #[inline]
    fn weighted_log_pdf(&self, x: &[f64]) -> f64 {
        let n = x.len();
        let mu = self.mean.as_slice();
        let mut q = 0.0;
        for i in 0..n {
            let di = x[i] - mu[i];
            let row = &self.prec[i * n..(i + 1) * n];
            let mut acc = 0.0;
            for j in 0..n {
                acc += row[j] * (x[j] - mu[j]);
            }
            q += di * acc;
        }
        self.weight.ln() + self.log_norm - 0.5 * q
    }

    /// Adds `scale * (-prec (x - mean))` into `out`.
    #[inline]
    fn add_score(&self, x: &[f64], scale: f64, out: &mut [f64]) {
        let n = x.len();
        let mu = self.mean.as_slice();
        for i in 0..n {
            let row = &self.prec[i * n..(i + 1) * n];
            let mut acc = 0.0;
            for j in 0..n {
                acc += row[j] * (x[j] - mu[j]);
            }
            out[i] -= scale * acc;
        }
    }

    /// `mean + L z`.
    #[inline]
    fn realize(&self, z: &[f64], out: &mut [f64]) {
        let n = z.len();
        for i in 0..n {
            let row = &self.chol[i * n..(i + 1) * n];
            let mut acc = self.mean[i];
            for j in 0..=i {
                acc += row[j] * z[j];
            }
            out[i] = acc;
        }
    }

    fn same_as(&self, other: &Component) -> bool {
        self.mean
            .iter()
            .zip(other.mean.iter())
            .all(|(a, b)| (a - b).abs() <= MERGE_TOL)
            && self
                .cov
                .iter()
                .zip(other.cov.iter())
                .all(|(a, b)| (a - b).abs() <= MERGE_TOL)
    }
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            v.push(m[(i, j)]);
        }
    }
    v
}

/// Finite mixture `sum_m w_m N(mean_m, cov_m)` on R^n.
#[derive(Debug, Clone)]
pub struct GaussianMixture {
    dim: usize,
    components: Vec<Component>,
}

impl GaussianMixture {
    /// Builds a mixture from `(weight, mean, cov)` triples. Weights are
    /// normalized; covariances are symmetrized and must be positive definite.
    pub fn new(parts: Vec<(f64, DVector<f64>, DMatrix<f64>)>) -> Result<Self> {
        let Some(first) = parts.first() else {
            return Err(Error::EmptyMixture);
        };
        let dim = first.1.len();
        if dim == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
                context: "component 0 mean is empty".into(),
            });
        }
        let mut total = 0.0;
        for (index, (w, mean, cov)) in parts.iter().enumerate() {
            if !(w.is_finite() && *w > 0.0) {
                return Err(Error::InvalidWeight { index, weight: *w });
            }
            if mean.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: mean.len(),
                    context: format!("mean of component {index}"),
                });
            }
            if cov.nrows() != dim || cov.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: if cov.nrows() != dim { cov.nrows() } else { cov.ncols() },
                    context: format!("covariance of component {index}"),
                });
            }
            total += w;
        }
        let components = parts
            .into_iter()
            .enumerate()
            .map(|(i, (w, mean, cov))| Component::build(i, w / total, mean, cov))
            .collect::<Result<Vec<_>>>()?;
        Ok(GaussianMixture { dim, components })
    }

    /// Single Gaussian `N(mean, cov)`.
    pub fn gaussian(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        Self::new(vec![(1.0, mean, cov)])
    }

    /// `N(0, variance * I_n)`.
    pub fn isotropic(n: usize, variance: f64) -> Result<Self> {
        Self::gaussian(DVector::zeros(n), DMatrix::identity(n, n) * variance)
    }

    /// One-dimensional mixture from `(weight, mean, variance)` triples.
    pub fn univariate(parts: &[(f64, f64, f64)]) -> Result<Self> {
        Self::new(
            parts
                .iter()
                .map(|&(w, m, v)| (w, DVector::from_element(1, m), DMatrix::from_element(1, 1, v)))
                .collect(),
        )
    }

    /// Law of independent blocks `(X_1, ..., X_k)` with `X_i ~ factors[i]`.
    pub fn product(factors: &[&GaussianMixture]) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::EmptyMixture);
        }
        let mut acc: Vec<(f64, Vec<f64>, DMatrix<f64>)> = vec![(1.0, vec![], DMatrix::zeros(0, 0))];
        for f in factors {
            let mut next = Vec::with_capacity(acc.len() * f.components.len());
            for (w, mean, cov) in &acc {
                for c in &f.components {
                    let d0 = mean.len();
                    let d1 = f.dim;
                    let mut m = mean.clone();
                    m.extend(c.mean.iter());
                    let mut s = DMatrix::zeros(d0 + d1, d0 + d1);
                    s.view_mut((0, 0), (d0, d0)).copy_from(cov);
                    s.view_mut((d0, d0), (d1, d1)).copy_from(&c.cov);
                    next.push((w * c.weight, m, s));
                }
            }
            acc = next;
        }
        Self::new(
            acc.into_iter()
                .map(|(w, m, s)| (w, DVector::from_vec(m), s))
                .collect(),
        )
    }

    /// `n` independent copies of a one-dimensional law.
    pub fn iid_power(base: &GaussianMixture, n: usize) -> Result<Self> {
        let factors = vec![base; n];
        Self::product(&factors)
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    fn rebuild(&self, parts: Vec<(f64, DVector<f64>, DMatrix<f64>)>) -> Result<Self> {
        Self::new(parts)
    }

    /// Law of `A X` for a full-row-rank `k x n` matrix `A`.
    pub fn push_forward_linear(&self, a: &DMatrix<f64>) -> Result<Self> {
        if a.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: a.ncols(),
                context: "columns of the pushforward matrix".into(),
            });
        }
        let k = a.nrows();
        if k == 0 || k > self.dim {
            return Err(Error::RankDeficient { min_singular: 0.0 });
        }
        let min_sv = min_singular_value(a);
        if !(min_sv >= RANK_FLOOR) {
            return Err(Error::RankDeficient {
                min_singular: min_sv,
            });
        }
        self.rebuild(
            self.components
                .iter()
                .map(|c| (c.weight, a * &c.mean, a * &c.cov * a.transpose()))
                .collect(),
        )
    }

    /// Law of `X + sqrt(t) Z` with `Z ~ N(0, I)` independent of `X`.
    pub fn convolve_isotropic(&self, t: f64) -> Result<Self> {
        if !(t >= 0.0) {
            return Err(Error::NegativeTime(t));
        }
        if t == 0.0 {
            return Ok(self.clone());
        }
        let eye = DMatrix::<f64>::identity(self.dim, self.dim);
        self.rebuild(
            self.components
                .iter()
                .map(|c| (c.weight, c.mean.clone(), &c.cov + &eye * t))
                .collect(),
        )
    }

    /// Average of the law over all `2^n` coordinate sign reflections, with
    /// coincident components merged.
    pub fn symmetrize(&self) -> Result<Self> {
        let n = self.dim;
        if n > MAX_SYMMETRIZE_DIM {
            return Err(Error::DimensionTooLarge {
                dim: n,
                max: MAX_SYMMETRIZE_DIM,
            });
        }
        let patterns = 1usize << n;
        let mut parts = Vec::with_capacity(patterns * self.components.len());
        for pattern in 0..patterns {
            let signs = DVector::from_fn(n, |i, _| if pattern >> i & 1 == 1 { -1.0 } else { 1.0 });
            for c in &self.components {
                let mean = c.mean.component_mul(&signs);
                let cov = DMatrix::from_fn(n, n, |i, j| c.cov[(i, j)] * signs[i] * signs[j]);
                parts.push((c.weight / patterns as f64, mean, cov));
            }
        }
        self.rebuild(parts)?.merge_duplicates()
    }

    /// Merges components whose mean and covariance agree entrywise within
    /// [`MERGE_TOL`], summing their weights. Order of first occurrence is kept.
    pub fn merge_duplicates(&self) -> Result<Self> {
        let mut kept: Vec<Component> = Vec::new();
        for c in &self.components {
            match kept.iter_mut().find(|k| k.same_as(c)) {
                Some(k) => k.weight += c.weight,
                None => kept.push(c.clone()),
            }
        }
        self.rebuild(
            kept.into_iter()
                .map(|c| (c.weight, c.mean, c.cov))
                .collect(),
        )
    }

    pub fn mean(&self) -> DVector<f64> {
        self.components
            .iter()
            .fold(DVector::zeros(self.dim), |acc, c| acc + &c.mean * c.weight)
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        let mu = self.mean();
        let second = self.components.iter().fold(DMatrix::zeros(self.dim, self.dim), |acc, c| {
            acc + (&c.cov + &c.mean * c.mean.transpose()) * c.weight
        });
        let cov = second - &mu * mu.transpose();
        (&cov + cov.transpose()) * 0.5
    }

    /// Draws the latent component index and standard normal vector.
    #[inline]
    pub fn sample_latent(&self, rng: &mut StreamRng, z: &mut [f64]) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut index = self.components.len() - 1;
        for (i, c) in self.components.iter().enumerate() {
            acc += c.weight;
            if u < acc {
                index = i;
                break;
            }
        }
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        index
    }

    /// Maps a latent draw to a point of the law.
    #[inline]
    pub fn realize(&self, index: usize, z: &[f64], out: &mut [f64]) {
        self.components[index].realize(z, out);
    }

    /// Log-weights of every component at `x` (unnormalized responsibilities).
    fn component_logs(&self, x: &[f64], buf: &mut Vec<f64>) -> f64 {
        buf.clear();
        let mut max = f64::NEG_INFINITY;
        for c in &self.components {
            let l = c.weighted_log_pdf(x);
            max = max.max(l);
            buf.push(l);
        }
        max
    }

    /// Serializable description of the mixture.
    pub fn to_file(&self) -> MixtureFile {
        MixtureFile {
            dim: self.dim,
            components: self
                .components
                .iter()
                .map(|c| ComponentFile {
                    weight: c.weight,
                    mean: c.mean.iter().copied().collect(),
                    cov: (0..self.dim)
                        .map(|i| (0..self.dim).map(|j| c.cov[(i, j)]).collect())
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn from_file(file: &MixtureFile) -> Result<Self> {
        if file.components.is_empty() {
            return Err(Error::EmptyMixture);
        }
        let mut parts = Vec::with_capacity(file.components.len());
        for (index, c) in file.components.iter().enumerate() {
            if c.mean.len() != file.dim {
                return Err(Error::DimensionMismatch {
                    expected: file.dim,
                    got: c.mean.len(),
                    context: format!("components[{index}].mean"),
                });
            }
            if c.cov.len() != file.dim || c.cov.iter().any(|r| r.len() != file.dim) {
                return Err(Error::DimensionMismatch {
                    expected: file.dim,
                    got: c.cov.len(),
                    context: format!("components[{index}].cov must be {0}x{0}", file.dim),
                });
            }
            let cov = DMatrix::from_fn(file.dim, file.dim, |i, j| c.cov[i][j]);
            parts.push((c.weight, DVector::from_vec(c.mean.clone()), cov));
        }
        Self::new(parts)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("mixture serialization")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MixtureFile = serde_json::from_str(text)?;
        Self::from_file(&file)
    }

    /// Short hex digest of the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

impl DensityModel for GaussianMixture {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        if self.components.len() == 1 {
            return self.components[0].weighted_log_pdf(x);
        }
        let mut buf = Vec::with_capacity(self.components.len());
        let max = self.component_logs(x, &mut buf);
        if !max.is_finite() {
            return max;
        }
        max + buf.iter().map(|l| (l - max).exp()).sum::<f64>().ln()
    }

    fn score(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        if self.components.len() == 1 {
            self.components[0].add_score(x, 1.0, out);
            return;
        }
        let mut buf = Vec::with_capacity(self.components.len());
        let max = self.component_logs(x, &mut buf);
        let mut total = 0.0;
        for l in buf.iter_mut() {
            *l = (*l - max).exp();
            total += *l;
        }
        for (c, r) in self.components.iter().zip(&buf) {
            let resp = r / total;
            if resp > 0.0 {
                c.add_score(x, resp, out);
            }
        }
    }

    fn sample_into(&self, rng: &mut StreamRng, out: &mut [f64]) {
        let mut z = vec![0.0; self.dim];
        let index = self.sample_latent(rng, &mut z);
        self.realize(index, &z, out);
    }

    fn tail_mass(&self, radius: f64) -> Option<f64> {
        if self.dim != 1 {
            return None;
        }
        Some(
            self.components
                .iter()
                .map(|c| {
                    let sd = c.cov[(0, 0)].sqrt();
                    let mu = c.mean[0];
                    let upper = 0.5 * erfc((radius - mu) / (sd * std::f64::consts::SQRT_2));
                    let lower = 0.5 * erfc((radius + mu) / (sd * std::f64::consts::SQRT_2));
                    c.weight * (upper + lower)
                })
                .sum(),
        )
    }

    fn tail_radius(&self) -> Option<f64> {
        if self.dim != 1 {
            return None;
        }
        let max_mean = self.components.iter().map(|c| c.mean[0].abs()).fold(0.0, f64::max);
        let max_sd = self
            .components
            .iter()
            .map(|c| c.cov[(0, 0)].sqrt())
            .fold(0.0, f64::max);
        Some(max_mean + 8.0 * max_sd)
    }
}

/// Smallest singular value of a matrix.
pub fn min_singular_value(a: &DMatrix<f64>) -> f64 {
    a.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Closed-form entropy of `N(mu, cov)` in nats: `½ ln((2πe)^n det cov)`.
pub fn gaussian_entropy(cov: &DMatrix<f64>) -> f64 {
    let n = cov.nrows() as f64;
    0.5 * (n * (2.0 * PI * std::f64::consts::E).ln() + cov.determinant().ln())
}

/// On-disk mixture description: `{dim, components: [{weight, mean, cov}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureFile {
    pub dim: usize,
    pub components: Vec<ComponentFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentFile {
    #[serde(serialize_with = "numfmt::f64")]
    pub weight: f64,
    #[serde(serialize_with = "numfmt::vec")]
    pub mean: Vec<f64>,
    #[serde(serialize_with = "numfmt::mat")]
    pub cov: Vec<Vec<f64>>,
}

/// Outcome of a sign-reflection symmetry probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetryReport {
    pub max_violation: f64,
    pub probe_count: usize,
    pub verdict: bool,
}

/// Compares `log f` at every sign pattern of sampled probe points against
/// `log f(|x|)`. Dimensions above [`MAX_SYMMETRIZE_DIM`] check single-sign
/// flips and the full flip only.
pub fn check_symmetry<D: DensityModel + ?Sized>(
    d: &D,
    probes: usize,
    seed: u64,
    tol: f64,
) -> SymmetryReport {
    let n = d.dim();
    let points = sample(d, probes.max(1), seed);
    let patterns: Vec<u64> = if n <= MAX_SYMMETRIZE_DIM {
        (1..(1u64 << n)).collect()
    } else {
        (0..n).map(|i| 1u64 << i).chain([u64::MAX]).collect()
    };
    let mut max_violation: f64 = 0.0;
    let mut reflected = vec![0.0; n];
    for x in &points {
        let abs: Vec<f64> = x.iter().map(|v| v.abs()).collect();
        let reference = d.log_density(&abs);
        for &p in &patterns {
            for i in 0..n {
                reflected[i] = if p >> i & 1 == 1 { -abs[i] } else { abs[i] };
            }
            let v = d.log_density(&reflected);
            let diff = if v == reference { 0.0 } else { (v - reference).abs() };
            if diff.is_nan() {
                max_violation = f64::INFINITY;
            } else {
                max_violation = max_violation.max(diff);
            }
        }
    }
    SymmetryReport {
        max_violation,
        probe_count: points.len(),
        verdict: max_violation <= tol,
    }
}

/// Draws `count` points; the result depends only on `(d, count, seed)`.
pub fn sample<D: DensityModel + ?Sized>(d: &D, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = d.dim();
    map_chunks(count, seed, |rng, range| {
        range
            .map(|_| {
                let mut x = vec![0.0; n];
                d.sample_into(rng, &mut x);
                x
            })
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

/// The 45° rotation `(1/√2)[[1, -1], [1, 1]]`.
pub fn rotation_45() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 1.0, 1.0]) * FRAC_1_SQRT_2
}

fn require_symmetric_base<D: DensityModel + ?Sized>(base: &D) -> Result<()> {
    if base.dim() != 1 {
        return Err(Error::NotUnivariate(base.dim()));
    }
    let report = check_symmetry(base, 64, 0, SYMMETRY_TOL);
    if !report.verdict {
        return Err(Error::NotSymmetricBase(report.max_violation));
    }
    Ok(())
}

/// Law of `X = A Z` with `A` the 45° rotation and `Z` i.i.d. copies of a
/// symmetric one-dimensional mixture, realized as a product mixture pushed
/// through `A`.
pub fn rotated_iid_construction(base: &GaussianMixture) -> Result<GaussianMixture> {
    require_symmetric_base(base)?;
    GaussianMixture::iid_power(base, 2)?.push_forward_linear(&rotation_45())
}

/// Rotated i.i.d. law for an arbitrary symmetric one-dimensional base:
/// `f_X(x1, x2) = f_Z((x1 + x2)/√2) f_Z((x2 - x1)/√2)`.
#[derive(Debug, Clone)]
pub struct RotatedIid<D> {
    base: D,
}

impl<D: DensityModel> RotatedIid<D> {
    pub fn new(base: D) -> Result<Self> {
        require_symmetric_base(&base)?;
        Ok(RotatedIid { base })
    }

    pub fn base(&self) -> &D {
        &self.base
    }
}

impl<D: DensityModel> DensityModel for RotatedIid<D> {
    fn dim(&self) -> usize {
        2
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let z1 = (x[0] + x[1]) * FRAC_1_SQRT_2;
        let z2 = (x[1] - x[0]) * FRAC_1_SQRT_2;
        self.base.log_density(&[z1]) + self.base.log_density(&[z2])
    }

    fn score(&self, x: &[f64], out: &mut [f64]) {
        let z1 = (x[0] + x[1]) * FRAC_1_SQRT_2;
        let z2 = (x[1] - x[0]) * FRAC_1_SQRT_2;
        let mut s1 = [0.0];
        let mut s2 = [0.0];
        self.base.score(&[z1], &mut s1);
        self.base.score(&[z2], &mut s2);
        out[0] = (s1[0] - s2[0]) * FRAC_1_SQRT_2;
        out[1] = (s1[0] + s2[0]) * FRAC_1_SQRT_2;
    }

    fn sample_into(&self, rng: &mut StreamRng, out: &mut [f64]) {
        let mut z1 = [0.0];
        let mut z2 = [0.0];
        self.base.sample_into(rng, &mut z1);
        self.base.sample_into(rng, &mut z2);
        out[0] = (z1[0] - z2[0]) * FRAC_1_SQRT_2;
        out[1] = (z1[0] + z2[0]) * FRAC_1_SQRT_2;
    }
}
