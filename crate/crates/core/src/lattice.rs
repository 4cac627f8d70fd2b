//! Classes of `Zⁿ` modulo the row lattice `⟨Δ⟩` spanned by the rows of `Δ`.
//!
//! Since `x·Δ = g` has the rational solution `x = g·adj(Δ) / det Δ`, a vector
//! `g` lies in `⟨Δ⟩` exactly when every entry of `g·adj(Δ)` is divisible by
//! `det Δ`. The map `g ↦ g·adj(Δ) mod det Δ` is therefore a complete class
//! invariant.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::budget::Budgets;
use crate::error::{Error, Result};
use crate::json;
use crate::matrix::{RateVector, ToppleMatrix};
use crate::parking::{enumerate_parking, recurrent_to_parking};
use crate::sandpile::{enumerate_recurrent, relax, Configuration};

fn check_dim(matrix: &ToppleMatrix, len: usize) -> Result<()> {
    if len != matrix.dim() {
        return Err(Error::LengthMismatch {
            expected: matrix.dim(),
            got: len,
        });
    }
    Ok(())
}

/// Order of `Zⁿ / ⟨Δ⟩`.
pub fn group_order(matrix: &ToppleMatrix) -> BigInt {
    matrix.determinant().clone()
}

/// Canonical class label: `v·adj(Δ)` reduced into `[0, det Δ)` entrywise.
pub fn class_key(matrix: &ToppleMatrix, v: &[BigInt]) -> Result<Vec<BigInt>> {
    let det = matrix.determinant();
    Ok(matrix
        .adjugate()
        .left_mul(v)?
        .into_iter()
        .map(|y| y.mod_floor(det))
        .collect())
}

/// `Some(x)` with `v − w = x·Δ` when the two vectors are equivalent,
/// `None` otherwise.
pub fn same_class(
    matrix: &ToppleMatrix,
    v: &[BigInt],
    w: &[BigInt],
) -> Result<Option<Vec<BigInt>>> {
    check_dim(matrix, v.len())?;
    check_dim(matrix, w.len())?;
    let diff: Vec<BigInt> = v.iter().zip(w).map(|(a, b)| a - b).collect();
    let det = matrix.determinant();
    let scaled = matrix.adjugate().left_mul(&diff)?;
    let mut x = Vec::with_capacity(scaled.len());
    for y in scaled {
        let (q, r) = y.div_rem(det);
        if !r.is_zero() {
            return Ok(None);
        }
        x.push(q);
    }
    Ok(Some(x))
}

/// The recurrent configuration equivalent to `v`.
///
/// Shifts `v` by the smallest multiple `k·det(Δ)·1` (an element of `⟨Δ⟩`)
/// that makes it nonnegative, stabilizes, and then applies
/// `u ↦ stab(u + rΔ)` until a fixed point is reached.
pub fn recurrent_representative(
    matrix: &ToppleMatrix,
    rate: &RateVector,
    v: &[BigInt],
    budgets: &Budgets,
) -> Result<Configuration> {
    check_dim(matrix, v.len())?;
    check_dim(matrix, rate.dim())?;
    let det = matrix.determinant();
    let lowest = v.iter().min().expect("dimension is positive");
    let shift = if lowest.is_negative() {
        (-lowest).div_ceil(det) * det
    } else {
        BigInt::zero()
    };
    let shifted: Vec<BigInt> = v.iter().map(|x| x + &shift).collect();
    let mut u = relax(matrix, shifted, budgets.topples)?;

    let cap = matrix.stable_box_size().to_u64().unwrap_or(u64::MAX);
    let mut seen = BTreeSet::new();
    for _ in 0..=cap {
        let loaded: Vec<BigInt> = u.iter().zip(rate.load()).map(|(a, c)| a + c).collect();
        let next = relax(matrix, loaded, budgets.topples)?;
        if next == u {
            return Configuration::new(u);
        }
        if cfg!(debug_assertions) {
            assert!(
                seen.insert(u.clone()),
                "iteration revisited a non-fixed configuration"
            );
        }
        u = next;
    }
    Err(Error::IterationCap { cap })
}

/// Cross-check of the parking set, the recurrent set and the lattice classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuditReport {
    #[serde(serialize_with = "json::int")]
    pub det: BigInt,
    pub parking_count: usize,
    pub recurrent_count: usize,
    pub violations: Vec<String>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Enumerates both sets and checks that parking functions lie in pairwise
/// distinct classes, that recurrent configurations lie in pairwise distinct
/// classes covering all `det Δ` of them, that `u ↦ d − u` sends every
/// recurrent configuration to a parking function, and that both sets have
/// exactly `det Δ` elements.
pub fn class_audit(matrix: &ToppleMatrix, budgets: &Budgets) -> Result<AuditReport> {
    let parking = enumerate_parking(matrix, budgets)?;
    let recurrent = enumerate_recurrent(matrix, &matrix.canonical_rate(), budgets)?;
    let det = group_order(matrix);
    let mut violations = Vec::new();

    let mut parking_classes: BTreeMap<Vec<BigInt>, &Configuration> = BTreeMap::new();
    for f in &parking {
        if let Some(prev) = parking_classes.insert(class_key(matrix, f.as_slice())?, f) {
            violations.push(format!("parking functions {prev} and {f} share a class"));
        }
    }

    let parking_set: BTreeSet<&Configuration> = parking.iter().collect();
    let mut recurrent_classes: BTreeMap<Vec<BigInt>, &Configuration> = BTreeMap::new();
    for u in &recurrent {
        if let Some(prev) = recurrent_classes.insert(class_key(matrix, u.as_slice())?, u) {
            violations.push(format!(
                "recurrent configurations {prev} and {u} share a class"
            ));
        }
        match recurrent_to_parking(matrix, u) {
            Ok(f) if parking_set.contains(&f) => {}
            Ok(f) => violations.push(format!(
                "recurrent configuration {u} maps to {f}, which is not a parking function"
            )),
            Err(e) => violations.push(format!("recurrent configuration {u}: {e}")),
        }
    }
    if BigInt::from(recurrent_classes.len()) != det {
        violations.push(format!(
            "recurrent configurations meet {} classes, expected {det}",
            recurrent_classes.len()
        ));
    }
    if BigInt::from(parking.len()) != det {
        violations.push(format!(
            "{} parking functions, expected {det}",
            parking.len()
        ));
    }
    if BigInt::from(recurrent.len()) != det {
        violations.push(format!(
            "{} recurrent configurations, expected {det}",
            recurrent.len()
        ));
    }
    Ok(AuditReport {
        det,
        parking_count: parking.len(),
        recurrent_count: recurrent.len(),
        violations,
    })
}
