//! Kozachenko–Leonenko nearest-neighbour entropy estimator.
//!
//! `h = ψ(N) - ψ(k) + ln V_n + (n/N) Σᵢ ln εᵢ`, with `εᵢ` the Euclidean
//! distance from point `i` to its `k`-th nearest neighbour and `V_n` the
//! volume of the unit ball. Exact duplicate points are separated before the
//! search: the `j`-th repeat of a point gets `j * 1e-12` added to its first
//! coordinate.

use std::f64::consts::PI;
use std::num::NonZero;

use kiddo::{ImmutableKdTree, SquaredEuclidean};
use rayon::prelude::*;
use statrs::function::gamma::{digamma, ln_gamma};

use super::{EntropyEstimate, EntropyMethod};
use crate::error::{Error, Result};
use crate::rng::RunningStats;

pub const DEFAULT_K: usize = 4;
pub const DUPLICATE_JITTER: f64 = 1e-12;
/// Folds used for the stderr estimate.
pub const FOLDS: usize = 25;
const MAX_DIM: usize = 10;

fn kth_distances_fixed<const D: usize>(points: &[Vec<f64>], k: usize) -> Vec<f64> {
    let pts: Vec<[f64; D]> = points
        .iter()
        .map(|p| {
            let mut a = [0.0; D];
            a.copy_from_slice(p);
            a
        })
        .collect();
    let tree: ImmutableKdTree<f64, D> = ImmutableKdTree::new_from_slice(&pts);
    let qty = NonZero::new(k + 1).expect("k + 1 > 0");
    pts.par_iter()
        .map(|q| {
            tree.nearest_n::<SquaredEuclidean>(q, qty)
                .iter()
                .map(|nn| nn.distance)
                .fold(0.0, f64::max)
                .sqrt()
        })
        .collect()
}

fn kth_distances(points: &[Vec<f64>], k: usize) -> Vec<f64> {
    macro_rules! dispatch {
        ($($d:literal),*) => {
            match points[0].len() {
                $($d => kth_distances_fixed::<$d>(points, k),)*
                other => unreachable!("dimension {other} rejected earlier"),
            }
        };
    }
    dispatch!(1, 2, 3, 4, 5, 6, 7, 8, 9, 10)
}

fn ln_unit_ball_volume(n: usize) -> f64 {
    0.5 * n as f64 * PI.ln() - ln_gamma(0.5 * n as f64 + 1.0)
}

fn kl_estimate(points: &[Vec<f64>], k: usize) -> f64 {
    let n = points[0].len();
    let count = points.len();
    let sum_log: f64 = kth_distances(points, k).iter().map(|e| e.ln()).sum();
    digamma(count as f64) - digamma(k as f64)
        + ln_unit_ball_volume(n)
        + n as f64 * sum_log / count as f64
}

fn separate_duplicates(samples: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut points = samples.to_vec();
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a]
            .iter()
            .zip(&points[b])
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut repeat = 0usize;
    for w in 1..order.len() {
        if samples[order[w]] == samples[order[w - 1]] {
            repeat += 1;
            points[order[w]][0] += repeat as f64 * DUPLICATE_JITTER;
        } else {
            repeat = 0;
        }
    }
    points
}

/// Nearest-neighbour entropy estimate from samples.
///
/// The stderr combines two parts in quadrature: the spread of the estimates
/// on `m ≤` [`FOLDS`] contiguous folds divided by `√m`, and a bias bound
/// `|h̄_fold - h_N| / (m^p - 1)` with `p = 1/n`, extrapolated from the mean
/// fold estimate under a bias decaying like `N^-p`. The observed decay on
/// Gaussians in two to four dimensions is at least this fast. The stderr is
/// infinite when the sample cannot fill two folds.
pub fn entropy_knn(samples: &[Vec<f64>], k: usize) -> Result<EntropyEstimate> {
    if k == 0 {
        return Err(Error::invalid("k", "neighbour order must be at least 1"));
    }
    let needed = 2 * k + 2;
    if samples.len() < needed {
        return Err(Error::TooFewSamples {
            needed,
            got: samples.len(),
        });
    }
    let n = samples[0].len();
    if n == 0 || n > MAX_DIM {
        return Err(Error::DimensionTooLarge { dim: n, max: MAX_DIM });
    }
    if let Some(bad) = samples.iter().position(|s| s.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: samples[bad].len(),
            context: format!("sample {bad}"),
        });
    }
    if samples.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::invalid("samples", "all coordinates must be finite"));
    }
    let points = separate_duplicates(samples);
    let value = kl_estimate(&points, k);

    let folds = (points.len() / needed).min(FOLDS);
    let stderr = if folds < 2 {
        f64::INFINITY
    } else {
        let size = points.len() / folds;
        let spread: RunningStats = (0..folds)
            .map(|f| kl_estimate(&points[f * size..(f + 1) * size], k))
            .collect();
        let noise = spread.variance().sqrt() / (folds as f64).sqrt();
        let rate = 1.0 / n as f64;
        let bias = (spread.mean() - value).abs() / ((folds as f64).powf(rate) - 1.0);
        (noise * noise + bias * bias).sqrt()
    };
    Ok(EntropyEstimate {
        value,
        stderr,
        method: EntropyMethod::Knn,
        count: samples.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{sample, GaussianMixture};

    #[test]
    fn unit_ball_volumes() {
        assert!((ln_unit_ball_volume(1) - 2f64.ln()).abs() < 1e-12);
        assert!((ln_unit_ball_volume(2) - PI.ln()).abs() < 1e-12);
        assert!((ln_unit_ball_volume(3) - (4.0 * PI / 3.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn kth_distance_on_a_line() {
        let pts: Vec<Vec<f64>> = [0.0, 1.0, 3.0, 6.0].iter().map(|&x| vec![x]).collect();
        let d = kth_distances(&pts, 2);
        assert_eq!(d, vec![3.0, 2.0, 3.0, 5.0]);
    }

    #[test]
    fn too_few_samples() {
        let pts = vec![vec![0.0]; 5];
        assert_eq!(
            entropy_knn(&pts, 4).unwrap_err(),
            Error::TooFewSamples { needed: 10, got: 5 }
        );
    }

    #[test]
    fn duplicates_are_separated() {
        let mut pts: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64 * 0.37 % 5.0, 1.0]).collect();
        pts.push(pts[3].clone());
        pts.push(pts[3].clone());
        let sep = separate_duplicates(&pts);
        assert_ne!(sep[3], sep[40]);
        assert_ne!(sep[40], sep[41]);
        assert!(entropy_knn(&pts, 4).unwrap().value.is_finite());
    }

    #[test]
    fn standard_normal_1d() {
        let g = GaussianMixture::isotropic(1, 1.0).unwrap();
        let est = entropy_knn(&sample(&g, 100_000, 21), DEFAULT_K).unwrap();
        assert!((est.value - 1.418_938_533_204_672_7).abs() < 0.02, "{est:?}");
        assert!(est.stderr > 0.0 && est.stderr < 0.02);
    }

    #[test]
    fn standard_normal_2d() {
        let g = GaussianMixture::isotropic(2, 1.0).unwrap();
        let est = entropy_knn(&sample(&g, 100_000, 22), DEFAULT_K).unwrap();
        assert!((est.value - 2.837_877_066_409_345).abs() < 0.03, "{est:?}");
    }

    #[test]
    fn scaling_shifts_by_log_factor() {
        let g = GaussianMixture::isotropic(1, 1.0).unwrap();
        let xs = sample(&g, 20_000, 23);
        let scaled: Vec<Vec<f64>> = xs.iter().map(|x| vec![2.0 * x[0]]).collect();
        let a = entropy_knn(&xs, 4).unwrap().value;
        let b = entropy_knn(&scaled, 4).unwrap().value;
        assert!((b - a - 2f64.ln()).abs() < 1e-9);
    }
}
