//! Gaussian smoothing `X_t = X + √t Z` and the integral representation
//!
//! `h(X) = (n/2) ln 2πe - ½ ∫₀^∞ (I(X_t) - n/(1+t)) dt`.
//!
//! The integral is computed after the substitution `t = u/(1-u)` with a
//! Gauss–Legendre rule in `u`. The Fisher information at each node uses the
//! moment-matched Gaussian `N(m, C + tI)` as a control variate. Its own
//! contribution `tr (C+tI)⁻¹ - n/(1+t)` integrates in closed form to
//! `-ln det C`, which leaves
//!
//! `h(X) = ½ ln((2πe)ⁿ det C) - ½ ∫₀^∞ E[‖ρ_t(X_t)‖² - ‖(C+tI)⁻¹(X_t - m)‖²] dt`.
//!
//! All nodes share one latent draw `(component, z)` per sample, so each
//! sample contributes one weighted sum over nodes and the stderr of those
//! sums accounts for the correlation between nodes.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::density::{gaussian_entropy, DensityModel, GaussianMixture};
use crate::error::{Error, Result};
use crate::estimators::{fisher_mc, EntropyEstimate, EntropyMethod, FisherEstimate, MIN_MC_COUNT};
use crate::numfmt::{self, fmt17};
use crate::quadrature::GaussLegendre;
use crate::rng::{map_chunks, merge_all, RunningStats};

/// Smallest node count accepted by [`entropy_via_debruijn`].
pub const MIN_NODES: usize = 16;

/// Fisher information along the smoothing path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FisherPath {
    pub times: Vec<f64>,
    pub values: Vec<FisherEstimate>,
}

impl FisherPath {
    /// CSV with header `t,value,stderr`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,value,stderr")?;
        for (t, v) in self.times.iter().zip(&self.values) {
            writeln!(out, "{},{},{}", fmt17(*t), fmt17(v.value), fmt17(v.stderr))?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

/// `I(X_t)` at each time, every node drawn with the same seed.
pub fn fisher_path(mix: &GaussianMixture, times: &[f64], count: usize, seed: u64) -> Result<FisherPath> {
    if let Some(&t) = times.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
        return Err(Error::NegativeTime(t));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("times", "must be strictly increasing"));
    }
    let values = times
        .iter()
        .map(|&t| fisher_mc(&mix.convolve_isotropic(t)?, count, seed))
        .collect::<Result<_>>()?;
    Ok(FisherPath {
        times: times.to_vec(),
        values,
    })
}

/// Entropy from the heat-flow integral, with its error budget split out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DebruijnEstimate {
    /// `stderr` combines the Monte Carlo and quadrature parts in quadrature.
    pub entropy: EntropyEstimate,
    #[serde(serialize_with = "numfmt::f64")]
    pub mc_stderr: f64,
    /// `|result(nodes) - result(nodes/2)|` on the same draws.
    #[serde(serialize_with = "numfmt::f64")]
    pub quadrature_stderr: f64,
    pub nodes: usize,
}

struct Node {
    law: GaussianMixture,
    /// `(C + tI)⁻¹`, row-major.
    precision: Vec<f64>,
    /// Quadrature weight including the Jacobian `(1-u)⁻²`.
    weight: f64,
}

fn build_nodes(mix: &GaussianMixture, cov: &DMatrix<f64>, rule: &GaussLegendre) -> Result<Vec<Node>> {
    let n = mix.dim();
    rule.mapped(0.0, 1.0)
        .map(|(u, w)| {
            let t = u / (1.0 - u);
            let shifted = cov + DMatrix::<f64>::identity(n, n) * t;
            let inv = shifted.try_inverse().ok_or(Error::NotPositiveDefinite {
                index: 0,
                min_eigenvalue: 0.0,
            })?;
            Ok(Node {
                law: mix.convolve_isotropic(t)?,
                precision: inv.transpose().as_slice().to_vec(),
                weight: w / ((1.0 - u) * (1.0 - u)),
            })
        })
        .collect()
}

/// `h(X)` by the heat-flow integral with `nodes` Gauss–Legendre points.
pub fn entropy_via_debruijn(mix: &GaussianMixture, nodes: usize, count: usize, seed: u64) -> Result<DebruijnEstimate> {
    if nodes < MIN_NODES {
        return Err(Error::invalid("nodes", format!("must be at least {MIN_NODES} (got {nodes})")));
    }
    if count < MIN_MC_COUNT {
        return Err(Error::TooFewSamples {
            needed: MIN_MC_COUNT,
            got: count,
        });
    }
    let n = mix.dim();
    let cov = mix.covariance();
    let mean: DVector<f64> = mix.mean();
    let fine = build_nodes(mix, &cov, &GaussLegendre::new(nodes))?;
    let coarse = build_nodes(mix, &cov, &GaussLegendre::new(nodes / 2))?;

    let excess = |node: &Node, x: &mut [f64], s: &mut [f64], index: usize, z: &[f64]| -> f64 {
        node.law.realize(index, z, x);
        node.law.score(x, s);
        let full: f64 = s.iter().map(|v| v * v).sum();
        let mut gauss = 0.0;
        for a in 0..n {
            let row = &node.precision[a * n..(a + 1) * n];
            let p: f64 = row.iter().zip(x.iter()).zip(mean.iter()).map(|((r, xi), m)| r * (xi - m)).sum();
            gauss += p * p;
        }
        node.weight * (full - gauss)
    };

    let parts = map_chunks(count, seed, |rng, range| {
        let mut z = vec![0.0; n];
        let mut x = vec![0.0; n];
        let mut s = vec![0.0; n];
        let mut fine_stats = RunningStats::new();
        let mut coarse_stats = RunningStats::new();
        for _ in range {
            let index = mix.sample_latent(rng, &mut z);
            let f: f64 = fine.iter().map(|node| excess(node, &mut x, &mut s, index, &z)).sum();
            let c: f64 = coarse.iter().map(|node| excess(node, &mut x, &mut s, index, &z)).sum();
            if !(f.is_finite() && c.is_finite()) {
                return None;
            }
            fine_stats.push(f);
            coarse_stats.push(c);
        }
        Some((fine_stats, coarse_stats))
    });
    let parts: Vec<(RunningStats, RunningStats)> = parts
        .into_iter()
        .collect::<Option<_>>()
        .ok_or(Error::NonFiniteScore)?;
    let fine_stats = merge_all(parts.iter().map(|p| &p.0));
    let coarse_stats = merge_all(parts.iter().map(|p| &p.1));

    let base = gaussian_entropy(&cov);
    let value = base - 0.5 * fine_stats.mean();
    let mc_stderr = 0.5 * fine_stats.stderr();
    let quadrature_stderr = 0.5 * (fine_stats.mean() - coarse_stats.mean()).abs();
    let rounding = 64.0 * f64::EPSILON * (1.0 + base.abs());
    Ok(DebruijnEstimate {
        entropy: EntropyEstimate {
            value,
            stderr: (mc_stderr.powi(2) + quadrature_stderr.powi(2)).sqrt() + rounding,
            method: EntropyMethod::Debruijn,
            count,
        },
        mc_stderr,
        quadrature_stderr,
        nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{entropy_quadrature_1d, QuadratureSpec};
    use std::f64::consts::{E, PI};

    fn bimodal() -> GaussianMixture {
        GaussianMixture::univariate(&[(0.5, -2.0, 1.0), (0.5, 2.0, 1.0)]).unwrap()
    }

    #[test]
    fn fisher_path_gaussian_closed_forms() {
        let g = GaussianMixture::isotropic(2, 1.0).unwrap();
        let path = fisher_path(&g, &[0.0, 1.0, 3.0], 100_000, 1).unwrap();
        for (t, v) in path.times.iter().zip(&path.values) {
            let exact = 2.0 / (1.0 + t);
            assert!((v.value - exact).abs() <= 3.0 * v.stderr, "t={t}: {v:?}");
        }
        let g4 = GaussianMixture::isotropic(1, 4.0).unwrap();
        let p = fisher_path(&g4, &[0.0], 100_000, 2).unwrap();
        assert!((p.values[0].value - 0.25).abs() <= 3.0 * p.values[0].stderr);
    }

    #[test]
    fn fisher_path_large_time_scale() {
        let path = fisher_path(&bimodal(), &[1e6], 50_000, 3).unwrap();
        // variance of the bimodal law is 5
        let oracle = 1.0 / (1e6 + 5.0);
        let v = path.values[0];
        assert!((v.value - oracle).abs() <= 3.0 * v.stderr, "{v:?}");
    }

    #[test]
    fn fisher_path_decreases_for_bimodal() {
        let path = fisher_path(&bimodal(), &[0.0, 0.5, 1.0, 2.0, 4.0], 100_000, 4).unwrap();
        for w in path.values.windows(2) {
            assert!(w[1].value < w[0].value + 3.0 * (w[0].stderr + w[1].stderr));
        }
    }

    #[test]
    fn fisher_path_validation_and_csv() {
        let g = GaussianMixture::isotropic(1, 1.0).unwrap();
        assert_eq!(fisher_path(&g, &[-1.0], 1000, 1).unwrap_err(), Error::NegativeTime(-1.0));
        assert!(fisher_path(&g, &[1.0, 1.0], 1000, 1).is_err());
        let csv = fisher_path(&g, &[0.0, 1.0], 1000, 1).unwrap().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,value,stderr");
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("1.0000000000000000e0,"));
    }

    #[test]
    fn debruijn_gaussians_are_exact() {
        let cases = [
            (GaussianMixture::isotropic(1, 1.0).unwrap(), 0.5 * (2.0 * PI * E).ln()),
            (GaussianMixture::isotropic(1, 4.0).unwrap(), 0.5 * (2.0 * PI * E * 4.0).ln()),
            (
                GaussianMixture::gaussian(
                    DVector::zeros(3),
                    DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0])),
                )
                .unwrap(),
                0.5 * ((2.0 * PI * E).powi(3) * 6.0).ln(),
            ),
        ];
        for (g, exact) in cases {
            let e = entropy_via_debruijn(&g, 32, 1000, 5).unwrap();
            assert!((e.entropy.value - exact).abs() <= 3.0 * e.entropy.stderr, "{e:?} vs {exact}");
            assert!((e.entropy.value - exact).abs() < 1e-10);
        }
        assert!((0.5 * (2.0 * PI * E * 4.0).ln() - 2.112_086).abs() < 1e-6);
    }

    #[test]
    fn debruijn_bimodal_matches_quadrature() {
        let b = bimodal();
        let q = entropy_quadrature_1d(&b, &QuadratureSpec::default()).unwrap();
        let e = entropy_via_debruijn(&b, 64, 100_000, 6).unwrap();
        let diff = (e.entropy.value - q.value).abs();
        assert!(diff <= 3.0 * e.entropy.stderr, "{e:?} vs {q:?}");
        assert!(diff < 0.01);
    }

    #[test]
    fn debruijn_node_refinement_within_quadrature_error() {
        let b = bimodal();
        let e32 = entropy_via_debruijn(&b, 32, 20_000, 7).unwrap();
        let e64 = entropy_via_debruijn(&b, 64, 20_000, 7).unwrap();
        let change = (e64.entropy.value - e32.entropy.value).abs();
        assert!(change <= e32.quadrature_stderr.max(e32.entropy.stderr), "{e32:?} {e64:?}");
    }

    #[test]
    fn debruijn_validation() {
        let g = GaussianMixture::isotropic(1, 1.0).unwrap();
        assert!(entropy_via_debruijn(&g, 15, 1000, 1).is_err());
        assert!(matches!(
            entropy_via_debruijn(&g, 16, 10, 1).unwrap_err(),
            Error::TooFewSamples { .. }
        ));
    }
}
