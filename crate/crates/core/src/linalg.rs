//! Small exact-structure linear algebra: Gram–Schmidt, sign-vertex bases,
//! the rotated-basis family used for the equality analysis in dimension
//! n ≥ 3, and balanced k×n projections.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::density::min_singular_value;
use crate::error::{Error, Result};
use crate::numfmt;

/// Entrywise tolerance for constructions that are exact in real arithmetic.
pub const EXACT_TOL: f64 = 1e-12;
/// Relative residual below which a vector counts as dependent.
pub const DEPENDENCE_FLOOR: f64 = 1e-10;

/// Square matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalBasis {
    matrix: DMatrix<f64>,
}

impl OrthonormalBasis {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Basis vectors as columns.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn column(&self, j: usize) -> DVector<f64> {
        self.matrix.column(j).into_owned()
    }

    /// `max |QᵀQ - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.dim();
        (self.matrix.transpose() * &self.matrix - DMatrix::<f64>::identity(n, n))
            .abs()
            .max()
    }
}

/// Modified Gram–Schmidt with one reorthogonalization pass. The first `j`
/// outputs span the same space as the first `j` inputs.
pub fn gram_schmidt(vectors: &[DVector<f64>]) -> Result<OrthonormalBasis> {
    let n = vectors.first().map(|v| v.len()).unwrap_or(0);
    if vectors.len() != n || n == 0 {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: vectors.len(),
            context: "gram_schmidt needs n vectors of length n".into(),
        });
    }
    let mut q: Vec<DVector<f64>> = Vec::with_capacity(n);
    for (index, v) in vectors.iter().enumerate() {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: v.len(),
                context: format!("vector {index}"),
            });
        }
        let scale = v.norm();
        let mut w = v.clone();
        for _pass in 0..2 {
            for qi in &q {
                let c = qi.dot(&w);
                w.axpy(-c, qi, 1.0);
            }
        }
        let norm = w.norm();
        if !(scale > 0.0) || norm / scale < DEPENDENCE_FLOOR {
            return Err(Error::LinearlyDependent {
                index,
                residual: if scale > 0.0 { norm / scale } else { 0.0 },
            });
        }
        q.push(w / norm);
    }
    Ok(OrthonormalBasis {
        matrix: DMatrix::from_columns(&q),
    })
}

/// Orthonormal basis whose first column is `signs / √n`.
///
/// The all-ones direction is completed with the Householder reflection that
/// maps `e₁` to `(1, …, 1)/√n`; rows with a negative sign are then negated.
pub fn sign_vertex_basis(signs: &[i8]) -> Result<OrthonormalBasis> {
    let n = signs.len();
    if n < 2 {
        return Err(Error::DimensionTooSmall { dim: n, min: 2 });
    }
    if let Some(i) = signs.iter().position(|&s| s != 1 && s != -1) {
        return Err(Error::invalid("signs", format!("entry {i} must be +1 or -1")));
    }
    let v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut w = -v.clone();
    w[0] += 1.0;
    let ww = w.dot(&w);
    let mut h = DMatrix::<f64>::identity(n, n) - (&w * w.transpose()) * (2.0 / ww);
    // the first column is v up to rounding; pin it exactly
    h.set_column(0, &v);
    for (i, &s) in signs.iter().enumerate() {
        if s < 0 {
            h.row_mut(i).neg_mut();
        }
    }
    Ok(OrthonormalBasis { matrix: h })
}

/// Vectors, Gram–Schmidt bases and connecting rotations for the n ≥ 3
/// equality analysis.
#[derive(Debug, Clone)]
pub struct ProofBasisFamily {
    pub n: usize,
    /// Sign vectors with every coordinate ±1/√n.
    pub v: Vec<DVector<f64>>,
    /// `bases[i]` is Gram–Schmidt applied to `v[i], v[0], …` (skipping `v[i]`).
    pub bases: Vec<OrthonormalBasis>,
    /// `rotations[i] = bases[0]ᵀ bases[i]`.
    pub rotations: Vec<DMatrix<f64>>,
}

/// Builds the family from `vᵢ(j) = -1/√n` if `i = j`, else `+1/√n`; for
/// `n = 4` the first vector is replaced by the all-ones direction so that it
/// is not orthogonal to the second.
pub fn proof_basis_family(n: usize) -> Result<ProofBasisFamily> {
    if n < 3 {
        return Err(Error::DimensionTooSmall { dim: n, min: 3 });
    }
    let s = 1.0 / (n as f64).sqrt();
    let mut v: Vec<DVector<f64>> = (0..n)
        .map(|i| DVector::from_fn(n, |j, _| if i == j { -s } else { s }))
        .collect();
    if n == 4 {
        v[0] = DVector::from_element(n, s);
    }
    let mut bases = Vec::with_capacity(n);
    for i in 0..n {
        let order: Vec<DVector<f64>> = std::iter::once(v[i].clone())
            .chain((0..n).filter(|&j| j != i).map(|j| v[j].clone()))
            .collect();
        bases.push(gram_schmidt(&order)?);
    }
    let a1t = bases[0].matrix().transpose();
    let rotations = bases.iter().map(|b| &a1t * b.matrix()).collect();
    Ok(ProofBasisFamily { n, v, bases, rotations })
}

/// Worst deviations from the family's structural invariants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FamilyReport {
    /// `max |‖vᵢ(j)| - 1/√n|`.
    pub sign_vector_error: f64,
    pub v1_dot_v2: f64,
    /// `max |Aᵢ e₁ - vᵢ|`.
    pub first_column_error: f64,
    /// `max` over the last `n - i` columns of `|Aᵢ - A₁|` (1-based `i`).
    pub carried_column_error: f64,
    /// `max` entry of `Rᵢ` outside the `i×i` block ⊕ identity pattern.
    pub block_error: f64,
    pub orthonormality_error: f64,
    /// Smallest singular value of `(v¹ … vⁿ)`.
    pub min_singular: f64,
}

impl ProofBasisFamily {
    pub fn report(&self) -> FamilyReport {
        let n = self.n;
        let s = 1.0 / (n as f64).sqrt();
        let sign_vector_error = self
            .v
            .iter()
            .flat_map(|v| v.iter().map(move |x| (x.abs() - s).abs()))
            .fold(0.0, f64::max);
        let mut first_column_error: f64 = 0.0;
        let mut carried_column_error: f64 = 0.0;
        let mut block_error: f64 = 0.0;
        let mut orthonormality_error: f64 = 0.0;
        for (i0, (basis, r)) in self.bases.iter().zip(&self.rotations).enumerate() {
            let i = i0 + 1;
            first_column_error =
                first_column_error.max((basis.column(0) - &self.v[i0]).abs().max());
            for col in i..n {
                carried_column_error = carried_column_error
                    .max((basis.column(col) - self.bases[0].column(col)).abs().max());
            }
            for a in 0..n {
                for b in 0..n {
                    let in_block = a < i && b < i;
                    if !in_block {
                        let want = if a == b { 1.0 } else { 0.0 };
                        block_error = block_error.max((r[(a, b)] - want).abs());
                    }
                }
            }
            orthonormality_error = orthonormality_error.max(basis.orthonormality_error());
        }
        FamilyReport {
            sign_vector_error,
            v1_dot_v2: self.v[0].dot(&self.v[1]),
            first_column_error,
            carried_column_error,
            block_error,
            orthonormality_error,
            min_singular: min_singular_value(&DMatrix::from_columns(&self.v)),
        }
    }
}

/// Construction used by [`balanced_projection`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionMethod {
    /// Rows of the Sylvester–Hadamard matrix scaled by `1/√n`. For `k = 1`
    /// any `n` is accepted and the single row is `(1, …, 1)/√n`.
    Hadamard,
    /// Paired rows `√(2/n) cos(2πfj/n)`, `√(2/n) sin(2πfj/n)` for `f = 1..k/2`.
    FrequencyPairs,
}

impl std::str::FromStr for ProjectionMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hadamard" => Ok(ProjectionMethod::Hadamard),
            "frequency_pairs" | "frequency-pairs" => Ok(ProjectionMethod::FrequencyPairs),
            other => Err(Error::invalid(
                "method",
                format!("`{other}` is not one of hadamard, frequency_pairs"),
            )),
        }
    }
}

/// `k×n` matrix with orthonormal rows and every column of squared norm `k/n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalancedProjection {
    pub rows: usize,
    pub cols: usize,
    #[serde(serialize_with = "serialize_matrix")]
    pub matrix: DMatrix<f64>,
}

impl BalancedProjection {
    /// Validates an arbitrary matrix as a balanced projection.
    pub fn new(matrix: DMatrix<f64>, tol: f64) -> Result<Self> {
        let report = check_balanced(&matrix, tol);
        if !report.balanced {
            return Err(Error::NotBalanced {
                row_dev: report.row_deviation,
                col_dev: report.column_deviation,
            });
        }
        Ok(BalancedProjection {
            rows: matrix.nrows(),
            cols: matrix.ncols(),
            matrix,
        })
    }
}

fn sylvester_entry(i: usize, j: usize) -> f64 {
    if (i & j).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn balanced_projection(k: usize, n: usize, method: ProjectionMethod) -> Result<BalancedProjection> {
    let unsupported = |reason: &str| Error::UnsupportedShape {
        k,
        n,
        reason: reason.to_string(),
    };
    let matrix = match method {
        ProjectionMethod::Hadamard => {
            if n == 0 || k == 0 || k > n {
                return Err(unsupported("hadamard needs 1 <= k <= n"));
            }
            if k > 1 && !n.is_power_of_two() {
                return Err(unsupported(
                    "hadamard needs n a power of two when k > 1 (k = 1 accepts any n)",
                ));
            }
            let s = 1.0 / (n as f64).sqrt();
            DMatrix::from_fn(k, n, |i, j| sylvester_entry(i, j) * s)
        }
        ProjectionMethod::FrequencyPairs => {
            if k % 2 != 0 || k < 2 || k >= n {
                return Err(unsupported("frequency_pairs needs k even with 2 <= k < n"));
            }
            let s = (2.0 / n as f64).sqrt();
            DMatrix::from_fn(k, n, |i, j| {
                let f = (i / 2 + 1) as f64;
                let phase = 2.0 * PI * f * j as f64 / n as f64;
                if i % 2 == 0 {
                    s * phase.cos()
                } else {
                    s * phase.sin()
                }
            })
        }
    };
    BalancedProjection::new(matrix, EXACT_TOL)
}

/// Outcome of [`check_balanced`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BalanceReport {
    pub balanced: bool,
    /// `max |AAᵀ - I|`.
    pub row_deviation: f64,
    /// `max_j |Σᵢ aᵢⱼ² - k/n|`.
    pub column_deviation: f64,
    pub worst_column: usize,
}

pub fn check_balanced(a: &DMatrix<f64>, tol: f64) -> BalanceReport {
    let k = a.nrows();
    let n = a.ncols();
    if k == 0 || n == 0 {
        return BalanceReport {
            balanced: false,
            row_deviation: f64::INFINITY,
            column_deviation: f64::INFINITY,
            worst_column: 0,
        };
    }
    let row_deviation = (a * a.transpose() - DMatrix::<f64>::identity(k, k)).abs().max();
    let target = k as f64 / n as f64;
    let (worst_column, column_deviation) = (0..n)
        .map(|j| (j, (a.column(j).norm_squared() - target).abs()))
        .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    BalanceReport {
        balanced: row_deviation <= tol && column_deviation <= tol,
        row_deviation,
        column_deviation,
        worst_column,
    }
}

fn serialize_matrix<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    numfmt::mat(&matrix_rows(m), s)
}

pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Row-major JSON array with 17-significant-digit entries.
pub fn matrix_to_json(m: &DMatrix<f64>) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::new(&mut out);
    numfmt::mat(&matrix_rows(m), &mut ser).expect("matrix serialization");
    String::from_utf8(out).expect("utf8")
}

pub fn matrix_from_json(text: &str) -> Result<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = serde_json::from_str(text)?;
    let k = rows.len();
    let n = rows.first().map(|r| r.len()).unwrap_or(0);
    if k == 0 || n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse("matrix rows must be nonempty and of equal length".into()));
    }
    Ok(DMatrix::from_fn(k, n, |i, j| rows[i][j]))
}
