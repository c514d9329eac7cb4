//! Named laws used by the CLI and the test suites.
//!
//! | name | law |
//! |---|---|
//! | `gaussian-iid-nK` | `N(0, I_K)` |
//! | `bimodal-product-nK` | `K` i.i.d. copies of `½N(-2,1) + ½N(2,1)` |
//! | `rotated-bimodal` | 45° rotation of two i.i.d. bimodal coordinates |
//! | `correlated-gaussian-rhoR` | `N(0, [[1,R],[R,1]])` |
//! | `trimodal` | `¼N(-3,0.25) + ½N(0,0.25) + ¼N(3,0.25)` (one-dimensional) |
//! | `bimodal` | `½N(-2,1) + ½N(2,1)` (one-dimensional) |

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::density::{rotated_iid_construction, GaussianMixture};
use crate::error::{Error, Result};

pub const BUILTIN_PREFIX: &str = "builtin:";
/// Largest `K` accepted by the `-nK` families.
pub const MAX_BUILTIN_DIM: usize = 10;

pub fn bimodal() -> GaussianMixture {
    GaussianMixture::univariate(&[(0.5, -2.0, 1.0), (0.5, 2.0, 1.0)]).expect("valid fixture")
}

pub fn trimodal() -> GaussianMixture {
    GaussianMixture::univariate(&[(0.25, -3.0, 0.25), (0.5, 0.0, 0.25), (0.25, 3.0, 0.25)]).expect("valid fixture")
}

pub fn gaussian_iid(n: usize) -> GaussianMixture {
    GaussianMixture::isotropic(n, 1.0).expect("valid fixture")
}

pub fn bimodal_product(n: usize) -> GaussianMixture {
    GaussianMixture::iid_power(&bimodal(), n).expect("valid fixture")
}

pub fn rotated_bimodal() -> GaussianMixture {
    rotated_iid_construction(&bimodal()).expect("valid fixture")
}

pub fn correlated_gaussian(rho: f64) -> Result<GaussianMixture> {
    if !(rho.abs() < 1.0) {
        return Err(Error::invalid("law", format!("correlation must lie in (-1, 1), got {rho}")));
    }
    GaussianMixture::gaussian(DVector::zeros(2), DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]))
}

fn parse_dim(name: &str, digits: &str) -> Result<usize> {
    match digits.parse::<usize>() {
        Ok(n) if (1..=MAX_BUILTIN_DIM).contains(&n) => Ok(n),
        _ => Err(Error::invalid(
            "law",
            format!("`{name}`: dimension must be an integer in 1..={MAX_BUILTIN_DIM}"),
        )),
    }
}

/// Resolves a builtin name, without the `builtin:` prefix.
pub fn builtin(name: &str) -> Result<GaussianMixture> {
    if let Some(k) = name.strip_prefix("gaussian-iid-n") {
        return Ok(gaussian_iid(parse_dim(name, k)?));
    }
    if let Some(k) = name.strip_prefix("bimodal-product-n") {
        return Ok(bimodal_product(parse_dim(name, k)?));
    }
    if let Some(r) = name.strip_prefix("correlated-gaussian-rho") {
        let rho: f64 = r.parse().map_err(|_| {
            Error::invalid("law", format!("`{name}`: correlation must be a number in (-1, 1)"))
        })?;
        return correlated_gaussian(rho);
    }
    match name {
        "rotated-bimodal" => Ok(rotated_bimodal()),
        "bimodal" => Ok(bimodal()),
        "trimodal" => Ok(trimodal()),
        _ => Err(Error::invalid(
            "law",
            format!(
                "unknown builtin `{name}`; expected gaussian-iid-nK, bimodal-product-nK (K in 1..={MAX_BUILTIN_DIM}), \
                 rotated-bimodal, correlated-gaussian-rhoR (R in (-1, 1)), bimodal or trimodal"
            ),
        )),
    }
}

/// Resolves `builtin:<name>` or reads a mixture JSON file.
pub fn resolve_law(spec: &str) -> Result<GaussianMixture> {
    if let Some(name) = spec.strip_prefix(BUILTIN_PREFIX) {
        return builtin(name);
    }
    let path = Path::new(spec);
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::invalid("law", format!("cannot read `{spec}`: {e}")))?;
    GaussianMixture::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{check_symmetry, DensityModel, SYMMETRY_TOL};

    #[test]
    fn builtins_resolve() {
        assert_eq!(resolve_law("builtin:gaussian-iid-n3").unwrap().dim(), 3);
        assert_eq!(resolve_law("builtin:bimodal-product-n4").unwrap().len(), 16);
        assert_eq!(resolve_law("builtin:rotated-bimodal").unwrap().dim(), 2);
        let c = resolve_law("builtin:correlated-gaussian-rho-0.9").unwrap();
        assert_eq!(c.components()[0].cov()[(0, 1)], -0.9);
    }

    #[test]
    fn builtin_errors_name_the_range() {
        let msg = builtin("gaussian-iid-n0").unwrap_err().to_string();
        assert!(msg.contains("1..=10"), "{msg}");
        let msg = builtin("correlated-gaussian-rho1.5").unwrap_err().to_string();
        assert!(msg.contains("(-1, 1)"), "{msg}");
        assert!(builtin("nonsense").is_err());
        assert!(resolve_law("/nonexistent/law.json").is_err());
    }

    #[test]
    fn symmetric_fixtures_are_symmetric() {
        for law in [gaussian_iid(3), bimodal_product(3), rotated_bimodal(), trimodal(), bimodal()] {
            assert!(check_symmetry(&law, 32, 1, SYMMETRY_TOL).verdict);
        }
        assert!(!check_symmetry(&correlated_gaussian(-0.9).unwrap(), 32, 1, SYMMETRY_TOL).verdict);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("law.json");
        std::fs::write(&path, rotated_bimodal().to_json()).unwrap();
        let law = resolve_law(path.to_str().unwrap()).unwrap();
        assert_eq!(law.fingerprint(), rotated_bimodal().fingerprint());
    }
}
