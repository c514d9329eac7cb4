use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use symentropy::density::{check_symmetry, DensityModel, SYMMETRY_TOL};
use symentropy::estimators::{entropy_mc, projection_entropy};
use symentropy::harness::Verdict;
use symentropy::linalg::{balanced_projection, check_balanced, gram_schmidt, ProjectionMethod};
use symentropy::GaussianMixture;

fn univariate() -> impl Strategy<Value = GaussianMixture> {
    prop::collection::vec((0.1f64..1.0, -3.0f64..3.0, 0.2f64..3.0), 1..4)
        .prop_map(|parts| GaussianMixture::univariate(&parts).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn symmetrized_products_are_symmetric(a in univariate(), b in univariate()) {
        let law = GaussianMixture::product(&[&a, &b]).unwrap().symmetrize().unwrap();
        prop_assert!(check_symmetry(&law, 16, 1, SYMMETRY_TOL).verdict);
    }

    #[test]
    fn pushforward_preserves_mean_and_covariance(a in univariate(), b in univariate(), angle in 0.0f64..6.28) {
        let law = GaussianMixture::product(&[&a, &b]).unwrap();
        let r = DMatrix::from_row_slice(2, 2, &[angle.cos(), -angle.sin(), angle.sin(), angle.cos()]);
        let y = law.push_forward_linear(&r).unwrap();
        let mean_err = (y.mean() - &r * law.mean()).abs().max();
        let cov_err = (y.covariance() - &r * law.covariance() * r.transpose()).abs().max();
        prop_assert!(mean_err < 1e-12 && cov_err < 1e-10);
    }

    #[test]
    fn convolution_adds_variance(a in univariate(), t in 0.0f64..10.0) {
        let c = a.convolve_isotropic(t).unwrap();
        prop_assert!((c.covariance()[(0, 0)] - a.covariance()[(0, 0)] - t).abs() < 1e-10);
    }

    #[test]
    fn projection_entropy_is_sign_invariant(a in univariate(), b in univariate(), angle in 0.1f64..1.4) {
        let law = GaussianMixture::product(&[&a, &b]).unwrap().symmetrize().unwrap();
        let e1 = projection_entropy(&law, &[angle.cos(), angle.sin()]).unwrap().value;
        let e2 = projection_entropy(&law, &[angle.cos(), -angle.sin()]).unwrap().value;
        prop_assert!((e1 - e2).abs() < 1e-9);
    }

    #[test]
    fn entropy_shifts_by_log_scale(a in univariate(), s in 0.2f64..5.0) {
        let scaled = a.push_forward_linear(&DMatrix::from_element(1, 1, s)).unwrap();
        let e1 = entropy_mc(&a, 2000, 3).unwrap().value;
        let e2 = entropy_mc(&scaled, 2000, 3).unwrap().value;
        // identical latent draws, so the shift is exact up to rounding
        prop_assert!((e2 - e1 - s.ln()).abs() < 1e-9);
    }

    #[test]
    fn gram_schmidt_is_orthonormal(entries in prop::collection::vec(-1.0f64..1.0, 16)) {
        let vs: Vec<DVector<f64>> = (0..4)
            .map(|i| DVector::from_fn(4, |j, _| entries[4 * i + j] + if i == j { 3.0 } else { 0.0 }))
            .collect();
        let q = gram_schmidt(&vs).unwrap();
        prop_assert!(q.orthonormality_error() < 1e-12);
    }

    #[test]
    fn balanced_projections_are_balanced(k in 1usize..4, log_n in 2u32..4) {
        let n = 1usize << log_n;
        let a = balanced_projection(k.min(n), n, ProjectionMethod::Hadamard).unwrap();
        prop_assert!(check_balanced(&a.matrix, 1e-12).balanced);
    }

    #[test]
    fn verdict_rule_is_monotone(gap in -1.0f64..1.0, sigma in 0.0f64..0.5) {
        let v = Verdict::from_gap(gap, sigma, 3.0);
        match v {
            Verdict::Holds => prop_assert!(gap > 3.0 * sigma),
            Verdict::HoldsWithEquality => prop_assert!(gap.abs() <= 3.0 * sigma),
            Verdict::Violated => prop_assert!(gap < -3.0 * sigma),
            Verdict::Inconclusive => prop_assert!(false),
        }
    }
}

#[test]
fn samples_have_the_model_dimension() {
    let a = GaussianMixture::isotropic(3, 1.0).unwrap();
    let xs = symentropy::density::sample(&a, 10, 5);
    assert_eq!(xs.len(), 10);
    assert!(xs.iter().all(|x| x.len() == a.dim()));
}
