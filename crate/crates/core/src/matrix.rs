//! Exact integer matrices and the toppling-matrix conditions.
//!
//! A [`ToppleMatrix`] is an integer matrix with nonpositive off-diagonal
//! entries, positive determinant and an entrywise nonnegative adjugate with a
//! positive diagonal. These conditions are equivalent to the existence of a
//! positive row vector `r` with `rΔ ≥ 0`, and to the existence of a positive
//! column vector `h` with `Δh > 0`.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::json;

/// Square matrix of arbitrary-precision integers, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    n: usize,
    entries: Vec<BigInt>,
}

impl IntMatrix {
    pub fn from_rows(rows: Vec<Vec<BigInt>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptyMatrix);
        }
        let mut entries = Vec::with_capacity(n * n);
        for (row, values) in rows.into_iter().enumerate() {
            if values.len() != n {
                return Err(Error::NotSquare {
                    row,
                    len: values.len(),
                    n,
                });
            }
            entries.extend(values);
        }
        Ok(IntMatrix { n, entries })
    }

    pub fn from_i64_rows<R: AsRef<[i64]>>(rows: &[R]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.as_ref().iter().map(|&x| BigInt::from(x)).collect())
                .collect(),
        )
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| {
            if i == j {
                BigInt::one()
            } else {
                BigInt::zero()
            }
        })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> BigInt) -> Self {
        assert!(n > 0, "matrix dimension must be positive");
        let entries = (0..n * n).map(|k| f(k / n, k % n)).collect();
        IntMatrix { n, entries }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn column(&self, j: usize) -> Vec<BigInt> {
        (0..self.n).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn rows(&self) -> Vec<Vec<BigInt>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i).clone())
    }

    pub fn mul(&self, other: &IntMatrix) -> Self {
        assert_eq!(self.n, other.n, "dimension mismatch");
        Self::from_fn(self.n, |i, j| {
            (0..self.n).map(|k| self.get(i, k) * other.get(k, j)).sum()
        })
    }

    /// Row vector times matrix, `vM`.
    pub fn left_mul(&self, v: &[BigInt]) -> Result<Vec<BigInt>> {
        self.check_len(v.len())?;
        Ok((0..self.n)
            .map(|j| v.iter().enumerate().map(|(i, x)| x * self.get(i, j)).sum())
            .collect())
    }

    /// Matrix times column vector, `Mv`.
    pub fn right_mul(&self, v: &[BigInt]) -> Result<Vec<BigInt>> {
        self.check_len(v.len())?;
        Ok((0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(a, x)| a * x).sum())
            .collect())
    }

    /// The submatrix keeping the given rows and columns, in the given order.
    pub fn submatrix(&self, keep: &[usize]) -> Self {
        Self::from_fn(keep.len(), |a, b| self.get(keep[a], keep[b]).clone())
    }

    pub fn is_scalar_identity(&self, scalar: &BigInt) -> bool {
        (0..self.n).all(|i| {
            (0..self.n).all(|j| {
                let v = self.get(i, j);
                if i == j {
                    v == scalar
                } else {
                    v.is_zero()
                }
            })
        })
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn determinant(&self) -> BigInt {
        let n = self.n;
        let mut a: Vec<Vec<BigInt>> = self.rows();
        let mut sign_flip = false;
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[k][k].is_zero() {
                match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                    Some(p) => {
                        a.swap(k, p);
                        sign_flip = !sign_flip;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    // Division is exact: Sylvester's identity.
                    let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                    a[i][j] = v;
                }
                a[i][k] = BigInt::zero();
            }
            prev = a[k][k].clone();
        }
        let det = a[n - 1][n - 1].clone();
        if sign_flip {
            -det
        } else {
            det
        }
    }

    /// Adjugate by cofactors: `adj[i][j] = (-1)^(i+j) det(M without row j, column i)`.
    ///
    /// The identity `M · adj(M) = det(M) · I` is checked before returning.
    pub fn adjugate(&self) -> Self {
        let n = self.n;
        if n == 1 {
            return IntMatrix::identity(1);
        }
        let adj = Self::from_fn(n, |i, j| {
            let rows: Vec<usize> = (0..n).filter(|&r| r != j).collect();
            let cols: Vec<usize> = (0..n).filter(|&c| c != i).collect();
            let minor = Self::from_fn(n - 1, |a, b| self.get(rows[a], cols[b]).clone());
            let d = minor.determinant();
            if (i + j) % 2 == 0 {
                d
            } else {
                -d
            }
        });
        assert!(
            self.mul(&adj).is_scalar_identity(&self.determinant()),
            "adjugate identity failed"
        );
        adj
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: len,
            });
        }
        Ok(())
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            let row: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// A positive integer vector `r` with `c = rΔ ≥ 0`, plus `m = Σ r_i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct RateVector {
    #[serde(serialize_with = "json::int_vec")]
    r: Vec<BigInt>,
    #[serde(serialize_with = "json::int_vec")]
    c: Vec<BigInt>,
    #[serde(serialize_with = "json::int")]
    m: BigInt,
}

impl RateVector {
    /// Checks `r > 0` and `rΔ ≥ 0` against `matrix`.
    pub fn new(matrix: &ToppleMatrix, r: Vec<BigInt>) -> Result<Self> {
        let c = matrix.matrix().left_mul(&r)?;
        if let Some(i) = r.iter().position(|x| !x.is_positive()) {
            return Err(Error::NotRateVector(format!(
                "entry {} is {}, must be positive",
                i + 1,
                r[i]
            )));
        }
        if let Some(j) = c.iter().position(|x| x.is_negative()) {
            return Err(Error::NotRateVector(format!(
                "component {} of rΔ is {}, must be nonnegative",
                j + 1,
                c[j]
            )));
        }
        let m = r.iter().sum();
        Ok(RateVector { r, c, m })
    }

    pub fn from_i64(matrix: &ToppleMatrix, r: &[i64]) -> Result<Self> {
        Self::new(matrix, r.iter().map(|&x| BigInt::from(x)).collect())
    }

    pub fn rates(&self) -> &[BigInt] {
        &self.r
    }

    /// `c = rΔ`.
    pub fn load(&self) -> &[BigInt] {
        &self.c
    }

    /// `m = Σ r_i`.
    pub fn total(&self) -> &BigInt {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.r.len()
    }

    /// `b·r` for a positive integer `b`.
    pub fn scaled(&self, b: u64) -> Self {
        assert!(b > 0, "scale factor must be positive");
        let b = BigInt::from(b);
        RateVector {
            r: self.r.iter().map(|x| x * &b).collect(),
            c: self.c.iter().map(|x| x * &b).collect(),
            m: &self.m * &b,
        }
    }

    /// `r + r'`; both must belong to the same matrix.
    pub fn sum(&self, other: &RateVector) -> Self {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        RateVector {
            r: self.r.iter().zip(&other.r).map(|(a, b)| a + b).collect(),
            c: self.c.iter().zip(&other.c).map(|(a, b)| a + b).collect(),
            m: &self.m + &other.m,
        }
    }

    /// Componentwise `self ≤ other`.
    pub fn dominated_by(&self, other: &RateVector) -> bool {
        self.r.iter().zip(&other.r).all(|(a, b)| a <= b)
    }
}

/// Outcome of checking the toppling-matrix conditions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub is_toppling: bool,
    #[serde(serialize_with = "json::int")]
    pub det: BigInt,
    /// `r = 1·adj(Δ)`, so that `rΔ = det·1`.
    pub row_certificate: Option<RateVector>,
    /// `h = adj(Δ)·1ᵀ`, so that `Δh = det·1ᵀ`.
    #[serde(serialize_with = "json::opt_int_vec")]
    pub column_certificate: Option<Vec<BigInt>>,
    pub violations: Vec<String>,
}

/// Checks, in order: off-diagonal entries are ≤ 0; the determinant is
/// positive; the adjugate has a positive diagonal and nonnegative entries.
/// Only the first failing stage is reported.
pub fn validate_toppling(matrix: &IntMatrix) -> ValidationReport {
    validate_parts(matrix).0
}

fn validate_parts(matrix: &IntMatrix) -> (ValidationReport, Option<IntMatrix>) {
    let n = matrix.dim();
    let det = matrix.determinant();
    let mut violations = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let v = matrix.get(i, j);
            if i != j && v.is_positive() {
                violations.push(format!(
                    "off-diagonal entry ({},{}) = {} is positive",
                    i + 1,
                    j + 1,
                    v
                ));
            }
        }
    }
    let rejected = |violations| ValidationReport {
        is_toppling: false,
        det: det.clone(),
        row_certificate: None,
        column_certificate: None,
        violations,
    };
    if !violations.is_empty() {
        return (rejected(violations), None);
    }
    if !det.is_positive() {
        violations.push(format!("determinant is {det}, must be positive"));
        return (rejected(violations), None);
    }
    let adj = matrix.adjugate();
    for i in 0..n {
        for j in 0..n {
            let a = adj.get(i, j);
            if i == j && !a.is_positive() {
                violations.push(format!(
                    "adjugate diagonal entry ({},{}) = {} is not positive",
                    i + 1,
                    j + 1,
                    a
                ));
            } else if a.is_negative() {
                violations.push(format!(
                    "adjugate entry ({},{}) = {} is negative",
                    i + 1,
                    j + 1,
                    a
                ));
            }
        }
    }
    if !violations.is_empty() {
        return (rejected(violations), None);
    }
    let ones = vec![BigInt::one(); n];
    let r = adj.left_mul(&ones).expect("dimensions agree");
    let c = matrix.left_mul(&r).expect("dimensions agree");
    let h = adj.right_mul(&ones).expect("dimensions agree");
    let row_certificate = RateVector {
        m: r.iter().sum(),
        r,
        c,
    };
    let report = ValidationReport {
        is_toppling: true,
        det,
        row_certificate: Some(row_certificate),
        column_certificate: Some(h),
        violations,
    };
    (report, Some(adj))
}

/// A validated toppling matrix with its determinant and adjugate cached.
///
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToppleMatrix {
    entries: IntMatrix,
    det: BigInt,
    adj: IntMatrix,
    canonical: RateVector,
}

impl ToppleMatrix {
    pub fn new(entries: IntMatrix) -> Result<Self> {
        let (report, adj) = validate_parts(&entries);
        match (report.is_toppling, adj, report.row_certificate) {
            (true, Some(adj), Some(canonical)) => Ok(ToppleMatrix {
                entries,
                det: report.det,
                adj,
                canonical,
            }),
            _ => Err(Error::NotToppling(report.violations)),
        }
    }

    pub fn from_i64_rows<R: AsRef<[i64]>>(rows: &[R]) -> Result<Self> {
        Self::new(IntMatrix::from_i64_rows(rows)?)
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        self.entries.get(i, j)
    }

    /// The `i`-th row `Δ_i`, the vector subtracted when vertex `i` topples.
    pub fn row(&self, i: usize) -> &[BigInt] {
        self.entries.row(i)
    }

    pub fn diagonal(&self, i: usize) -> &BigInt {
        self.entries.get(i, i)
    }

    pub fn determinant(&self) -> &BigInt {
        &self.det
    }

    pub fn adjugate(&self) -> &IntMatrix {
        &self.adj
    }

    pub fn transpose(&self) -> Result<Self> {
        Self::new(self.entries.transpose())
    }

    /// `r = 1·adj(Δ)`, the column sums of the adjugate. Always a rate vector,
    /// with `rΔ = det·1`.
    pub fn canonical_rate(&self) -> RateVector {
        self.canonical.clone()
    }

    pub fn is_rate_vector(&self, r: &[BigInt]) -> Result<bool> {
        match RateVector::new(self, r.to_vec()) {
            Ok(_) => Ok(true),
            Err(Error::NotRateVector(_)) => Ok(false),
            Err(e) => Err(e),
        }
    }

    pub fn rate_vector(&self, r: Vec<BigInt>) -> Result<RateVector> {
        RateVector::new(self, r)
    }

    /// `det Δ[I]` for a nonempty set of 0-based indices.
    pub fn principal_minor(&self, subset: &[usize]) -> Result<BigInt> {
        if subset.is_empty() {
            return Err(Error::EmptySubset);
        }
        let n = self.dim();
        if let Some(&index) = subset.iter().find(|&&i| i >= n) {
            return Err(Error::VertexOutOfRange { index, n });
        }
        let mut keep = subset.to_vec();
        keep.sort_unstable();
        keep.dedup();
        Ok(self.entries.submatrix(&keep).determinant())
    }

    /// `d = (Δ_11 − 1, …, Δ_nn − 1)`, the maximal stable configuration.
    pub fn d_cap(&self) -> Vec<BigInt> {
        (0..self.dim())
            .map(|i| self.diagonal(i) - BigInt::one())
            .collect()
    }

    /// Number of points of the stable box `∏ [0, Δ_jj − 1]`.
    pub fn stable_box_size(&self) -> BigInt {
        (0..self.dim()).map(|i| self.diagonal(i).clone()).product()
    }
}

impl fmt::Display for ToppleMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.entries.fmt(f)
    }
}
