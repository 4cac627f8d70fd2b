//! Parking functions of a toppling matrix.
//!
//! For a rate vector `r`, `Ω(r)` is the set of nonzero integer vectors `χ`
//! with `0 ≤ χ(i) ≤ r_i`. A function `f ≥ 0` is a `(Δ, r)`-parking function
//! when every `χ ∈ Ω(r)` has a vertex `j` with `χ(j) ≥ 1` and
//! `f(j) < ⟨χ, Δʲ⟩`, where `Δʲ` is the `j`-th column. The set does not
//! depend on `r`.
//!
//! Two membership tests are provided. The definition-level scan over `Ω(r)`
//! is an oracle; its cost grows as `∏ (r_i + 1)`. The fast test peels one
//! element at a time off the multiset with `r_i` copies of each vertex,
//! always removing a vertex `j` that satisfies the strict inequality for the
//! remaining multiset. It succeeds for every choice order exactly when `f`
//! is a parking function.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::budget::Budgets;
use crate::error::{Error, Result};
use crate::json;
use crate::matrix::{RateVector, ToppleMatrix};
use crate::sandpile::{Configuration, StableBox};

/// Characteristic vector of a nonempty submultiset of `V(r)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CharVector(Vec<BigInt>);

impl CharVector {
    pub fn as_slice(&self) -> &[BigInt] {
        &self.0
    }
}

impl Serialize for CharVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        json::int_vec(&self.0, s)
    }
}

/// `⟨χ, Δʲ⟩ = Σ_i χ(i) Δ_ij`.
pub fn column_pairing(matrix: &ToppleMatrix, chi: &[BigInt], j: usize) -> Result<BigInt> {
    if chi.len() != matrix.dim() {
        return Err(Error::LengthMismatch {
            expected: matrix.dim(),
            got: chi.len(),
        });
    }
    if j >= matrix.dim() {
        return Err(Error::VertexOutOfRange {
            index: j,
            n: matrix.dim(),
        });
    }
    Ok(chi
        .iter()
        .enumerate()
        .map(|(i, x)| x * matrix.get(i, j))
        .sum())
}

/// `|Ω(r)| = ∏ (r_i + 1) − 1`.
pub fn omega_size(rate: &RateVector) -> BigInt {
    rate.rates()
        .iter()
        .map(|r| r + BigInt::one())
        .product::<BigInt>()
        - BigInt::one()
}

/// Visits every `χ ∈ Ω(r)` in lexicographic order together with its
/// pairings `p_j = ⟨χ, Δʲ⟩`. The visitor returns `false` to stop early.
fn scan_omega(
    matrix: &ToppleMatrix,
    rate: &RateVector,
    budgets: &Budgets,
    mut visit: impl FnMut(&[u64], &[BigInt]) -> bool,
) -> Result<()> {
    let size = omega_size(rate);
    if size.to_u64().is_none_or(|s| s > budgets.omega) {
        return Err(Error::BudgetExceeded {
            what: "characteristic-vector set",
            size,
            budget: budgets.omega,
        });
    }
    let n = matrix.dim();
    let limits: Vec<u64> = rate
        .rates()
        .iter()
        .map(|r| r.to_u64().expect("bounded by the budget"))
        .collect();
    let wraps: Vec<Vec<BigInt>> = (0..n)
        .map(|i| {
            matrix
                .row(i)
                .iter()
                .map(|d| d * BigInt::from(limits[i]))
                .collect()
        })
        .collect();
    let mut digits = vec![0u64; n];
    let mut pairings = vec![BigInt::zero(); n];
    'outer: loop {
        let mut pos = n;
        loop {
            if pos == 0 {
                break 'outer;
            }
            pos -= 1;
            if digits[pos] < limits[pos] {
                digits[pos] += 1;
                for (p, d) in pairings.iter_mut().zip(matrix.row(pos)) {
                    *p += d;
                }
                break;
            }
            digits[pos] = 0;
            for (p, w) in pairings.iter_mut().zip(&wraps[pos]) {
                *p -= w;
            }
        }
        if !visit(&digits, &pairings) {
            break;
        }
    }
    Ok(())
}

fn check_dim(matrix: &ToppleMatrix, len: usize) -> Result<()> {
    if len != matrix.dim() {
        return Err(Error::LengthMismatch {
            expected: matrix.dim(),
            got: len,
        });
    }
    Ok(())
}

/// First `χ ∈ Ω(r)` (lexicographic) with no vertex `j` such that
/// `χ(j) ≥ 1` and `thresholds_j < ⟨χ, Δʲ⟩`.
fn omega_counterexample(
    matrix: &ToppleMatrix,
    rate: &RateVector,
    thresholds: &[BigInt],
    budgets: &Budgets,
) -> Result<Option<CharVector>> {
    check_dim(matrix, thresholds.len())?;
    check_dim(matrix, rate.dim())?;
    let mut witness = None;
    scan_omega(matrix, rate, budgets, |chi, pairings| {
        let ok = chi
            .iter()
            .zip(thresholds)
            .zip(pairings)
            .any(|((&x, t), p)| x >= 1 && t < p);
        if !ok {
            witness = Some(CharVector(chi.iter().map(|&x| BigInt::from(x)).collect()));
        }
        ok
    })?;
    Ok(witness)
}

/// Definition-level oracle: `None` when `f` is a `(Δ, r)`-parking function,
/// otherwise the first `χ` that defeats it.
pub fn parking_counterexample(
    matrix: &ToppleMatrix,
    rate: &RateVector,
    f: &Configuration,
    budgets: &Budgets,
) -> Result<Option<CharVector>> {
    omega_counterexample(matrix, rate, f.as_slice(), budgets)
}

pub fn is_parking_bruteforce(
    matrix: &ToppleMatrix,
    rate: &RateVector,
    f: &Configuration,
    budgets: &Budgets,
) -> Result<bool> {
    Ok(parking_counterexample(matrix, rate, f, budgets)?.is_none())
}

/// Which eligible vertex the peeling procedure removes next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    #[default]
    Lowest,
    Highest,
    Random {
        seed: u64,
    },
}

/// Result of the peeling procedure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GreedyOutcome {
    /// Every element was removed; `sequence` lists vertices (0-based) in
    /// removal order.
    Parked { sequence: Vec<usize> },
    /// No remaining vertex qualified at `step` (1-based); `remaining` is the
    /// multiset left at that point.
    Stalled { step: u64, remaining: CharVector },
}

impl GreedyOutcome {
    pub fn is_parked(&self) -> bool {
        matches!(self, GreedyOutcome::Parked { .. })
    }
}

impl Serialize for GreedyOutcome {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        #[serde(tag = "outcome", rename_all = "lowercase")]
        enum Wire<'a> {
            Parked {
                sequence: Vec<usize>,
            },
            Stalled {
                step: u64,
                remaining: &'a CharVector,
            },
        }
        match self {
            GreedyOutcome::Parked { sequence } => Wire::Parked {
                sequence: sequence.iter().map(|v| v + 1).collect(),
            },
            GreedyOutcome::Stalled { step, remaining } => Wire::Stalled {
                step: *step,
                remaining,
            },
        }
        .serialize(s)
    }
}

/// Peels `V(r)` while `thresholds_j < ⟨χ, Δʲ⟩` holds for the removed
/// vertex `j` and the multiset `χ` remaining just before its removal.
fn peel(
    matrix: &ToppleMatrix,
    rate: &RateVector,
    thresholds: &[BigInt],
    tie: TieBreak,
    budgets: &Budgets,
) -> Result<GreedyOutcome> {
    check_dim(matrix, thresholds.len())?;
    check_dim(matrix, rate.dim())?;
    let total = rate.total();
    let steps = total.to_u64().filter(|&m| m <= budgets.topples);
    let Some(steps) = steps else {
        return Err(Error::BudgetExceeded {
            what: "peeling sequence (sum of rates)",
            size: total.clone(),
            budget: budgets.topples,
        });
    };
    let n = matrix.dim();
    let mut remaining: Vec<u64> = rate
        .rates()
        .iter()
        .map(|r| r.to_u64().expect("bounded by the sum"))
        .collect();
    let mut pairings: Vec<BigInt> = rate.load().to_vec();
    let mut rng = match tie {
        TieBreak::Random { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };
    let mut eligible = Vec::with_capacity(n);
    let mut sequence = Vec::with_capacity(steps as usize);
    for step in 1..=steps {
        eligible.clear();
        eligible.extend((0..n).filter(|&j| remaining[j] > 0 && thresholds[j] < pairings[j]));
        let pick = match (tie, rng.as_mut()) {
            (TieBreak::Highest, _) => eligible.last().copied(),
            (_, Some(rng)) if !eligible.is_empty() => {
                Some(eligible[rng.gen_range(0..eligible.len())])
            }
            _ => eligible.first().copied(),
        };
        let Some(j) = pick else {
            return Ok(GreedyOutcome::Stalled {
                step,
                remaining: CharVector(remaining.iter().map(|&x| BigInt::from(x)).collect()),
            });
        };
        remaining[j] -= 1;
        for (p, d) in pairings.iter_mut().zip(matrix.row(j)) {
            *p -= d;
        }
        sequence.push(j);
    }
    Ok(GreedyOutcome::Parked { sequence })
}

/// Fast membership test for `(Δ, r)`-parking functions.
pub fn is_parking_greedy(
    matrix: &ToppleMatrix,
    rate: &RateVector,
    f: &Configuration,
    tie: TieBreak,
    budgets: &Budgets,
) -> Result<GreedyOutcome> {
    peel(matrix, rate, f.as_slice(), tie, budgets)
}

/// Membership in the parking set, using the canonical rate vector.
pub fn is_parking(matrix: &ToppleMatrix, f: &Configuration, budgets: &Budgets) -> Result<bool> {
    Ok(is_parking_greedy(
        matrix,
        &matrix.canonical_rate(),
        f,
        TieBreak::Lowest,
        budgets,
    )?
    .is_parked())
}

/// The parking set, sorted lexicographically, computed with the canonical
/// rate vector. Every parking function lies in the stable box.
pub fn enumerate_parking(matrix: &ToppleMatrix, budgets: &Budgets) -> Result<Vec<Configuration>> {
    enumerate_parking_for(matrix, &matrix.canonical_rate(), budgets)
}

/// The `(Δ, r)`-parking set for an explicit rate vector.
pub fn enumerate_parking_for(
    matrix: &ToppleMatrix,
    rate: &RateVector,
    budgets: &Budgets,
) -> Result<Vec<Configuration>> {
    StableBox::new(matrix, budgets)?
        .filter(|f| Ok(is_parking_greedy(matrix, rate, f, TieBreak::Lowest, budgets)?.is_parked()))
}

fn reflect(matrix: &ToppleMatrix, v: &Configuration) -> Result<Configuration> {
    check_dim(matrix, v.len())?;
    let image: Vec<BigInt> = matrix
        .d_cap()
        .into_iter()
        .zip(v.as_slice())
        .map(|(d, x)| d - x)
        .collect();
    if let Some(index) = image.iter().position(|x| x.is_negative()) {
        return Err(Error::OutsideStableBox { index });
    }
    Configuration::new(image)
}

/// `f ↦ d − f`.
pub fn parking_to_recurrent(matrix: &ToppleMatrix, f: &Configuration) -> Result<Configuration> {
    reflect(matrix, f)
}

/// `u ↦ d − u`.
pub fn recurrent_to_parking(matrix: &ToppleMatrix, u: &Configuration) -> Result<Configuration> {
    reflect(matrix, u)
}

fn allowed_thresholds(matrix: &ToppleMatrix, u: &Configuration) -> Result<Vec<BigInt>> {
    check_dim(matrix, u.len())?;
    Ok(matrix
        .d_cap()
        .into_iter()
        .zip(u.as_slice())
        .map(|(d, x)| d - x)
        .collect())
}

/// `u` is r-allowed when every `χ ∈ Ω(r)` has `j` with `χ(j) ≥ 1` and
/// `u_j ≥ Δ_jj − ⟨χ, Δʲ⟩`, i.e. `(d − u)_j < ⟨χ, Δʲ⟩`. Decided by peeling
/// with thresholds `d − u`, which may be negative.
pub fn is_r_allowed(
    matrix: &ToppleMatrix,
    rate: &RateVector,
    u: &Configuration,
    budgets: &Budgets,
) -> Result<bool> {
    let thresholds = allowed_thresholds(matrix, u)?;
    Ok(peel(matrix, rate, &thresholds, TieBreak::Lowest, budgets)?.is_parked())
}

/// Direct scan of `Ω(r)` for the r-allowed condition.
pub fn is_r_allowed_bruteforce(
    matrix: &ToppleMatrix,
    rate: &RateVector,
    u: &Configuration,
    budgets: &Budgets,
) -> Result<bool> {
    let thresholds = allowed_thresholds(matrix, u)?;
    Ok(omega_counterexample(matrix, rate, &thresholds, budgets)?.is_none())
}

/// Subset-based allowed test: every nonempty `I` has `j ∈ I` with
/// `u_j ≥ Σ_{i ∈ I∖{j}} (−Δ_ij)`. Not equivalent to recurrence in general.
pub fn is_dhar_allowed(
    matrix: &ToppleMatrix,
    u: &Configuration,
    budgets: &Budgets,
) -> Result<bool> {
    check_dim(matrix, u.len())?;
    let n = matrix.dim();
    if n > budgets.subset_dim || n >= 64 {
        return Err(Error::BudgetExceeded {
            what: "subset scan (dimension)",
            size: BigInt::from(n),
            budget: budgets.subset_dim as u64,
        });
    }
    let members = |mask: u64| (0..n).filter(move |&i| mask >> i & 1 == 1);
    Ok((1u64..1 << n).all(|mask| {
        members(mask).any(|j| {
            let inflow: BigInt = members(mask)
                .filter(|&i| i != j)
                .map(|i| -matrix.get(i, j))
                .sum();
            u.as_slice()[j] >= inflow
        })
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> ToppleMatrix {
        ToppleMatrix::from_i64_rows(&[[2, -1], [-3, 4]]).unwrap()
    }

    fn cfg(v: &[i64]) -> Configuration {
        Configuration::from_i64(v).unwrap()
    }

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn pairing_examples() {
        let m = example();
        assert_eq!(
            column_pairing(&m, &ints(&[2, 1]), 0).unwrap(),
            BigInt::from(1)
        );
        assert_eq!(
            column_pairing(&m, &ints(&[2, 1]), 1).unwrap(),
            BigInt::from(2)
        );
        assert_eq!(
            column_pairing(&m, &ints(&[0, 1]), 1).unwrap(),
            BigInt::from(4)
        );
        assert_eq!(
            column_pairing(&m, &ints(&[1, 0]), 0).unwrap(),
            BigInt::from(2)
        );
    }

    #[test]
    fn omega_scan_visits_every_vector_once_in_order() {
        let m = example();
        let r = RateVector::from_i64(&m, &[2, 1]).unwrap();
        assert_eq!(omega_size(&r), BigInt::from(5));
        let mut seen = Vec::new();
        scan_omega(&m, &r, &Budgets::default(), |chi, p| {
            let chi_big: Vec<BigInt> = chi.iter().map(|&x| BigInt::from(x)).collect();
            let expected: Vec<BigInt> = (0..2)
                .map(|j| column_pairing(&m, &chi_big, j).unwrap())
                .collect();
            assert_eq!(p, expected.as_slice());
            seen.push(chi.to_vec());
            true
        })
        .unwrap();
        assert_eq!(
            seen,
            vec![vec![0, 1], vec![1, 0], vec![1, 1], vec![2, 0], vec![2, 1]]
        );
    }

    #[test]
    fn bruteforce_examples() {
        let m = example();
        let r = RateVector::from_i64(&m, &[2, 1]).unwrap();
        let b = Budgets::default();
        assert!(is_parking_bruteforce(&m, &r, &cfg(&[1, 1]), &b).unwrap());
        assert!(!is_parking_bruteforce(&m, &r, &cfg(&[1, 2]), &b).unwrap());
        // χ = (1,1): pairings (−1, 3); f(1)=0 ≮ −1 and f(2)=3 ≮ 3.
        let w = parking_counterexample(&m, &r, &cfg(&[0, 3]), &b).unwrap();
        assert_eq!(w.unwrap().as_slice(), ints(&[1, 1]).as_slice());
    }

    #[test]
    fn bruteforce_budget() {
        let m = example();
        let r = RateVector::from_i64(&m, &[2, 1]).unwrap();
        let b = Budgets {
            omega: 4,
            ..Budgets::default()
        };
        assert!(matches!(
            is_parking_bruteforce(&m, &r, &cfg(&[0, 0]), &b),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn greedy_examples() {
        let m = example();
        let r = RateVector::from_i64(&m, &[2, 1]).unwrap();
        let b = Budgets::default();
        assert_eq!(
            is_parking_greedy(&m, &r, &cfg(&[1, 1]), TieBreak::Lowest, &b).unwrap(),
            GreedyOutcome::Parked {
                sequence: vec![1, 0, 0]
            }
        );
        assert_eq!(
            is_parking_greedy(&m, &r, &cfg(&[1, 2]), TieBreak::Lowest, &b).unwrap(),
            GreedyOutcome::Stalled {
                step: 1,
                remaining: CharVector(ints(&[2, 1]))
            }
        );
        for tie in [
            TieBreak::Lowest,
            TieBreak::Highest,
            TieBreak::Random { seed: 3 },
        ] {
            let out = is_parking_greedy(&m, &r, &cfg(&[0, 0]), tie, &b).unwrap();
            let GreedyOutcome::Parked { mut sequence } = out else {
                panic!("(0,0) must park")
            };
            sequence.sort();
            assert_eq!(sequence, vec![0, 0, 1]);
        }
    }

    #[test]
    fn parking_set_examples() {
        let b = Budgets::default();
        let want = |vs: &[&[i64]]| vs.iter().map(|v| cfg(v)).collect::<Vec<_>>();
        assert_eq!(
            enumerate_parking(&example(), &b).unwrap(),
            want(&[&[0, 0], &[0, 1], &[0, 2], &[1, 0], &[1, 1]])
        );
        let one = ToppleMatrix::from_i64_rows(&[[1]]).unwrap();
        assert_eq!(enumerate_parking(&one, &b).unwrap(), want(&[&[0]]));
        let k3 = ToppleMatrix::from_i64_rows(&[[2, -1], [-1, 2]]).unwrap();
        assert_eq!(
            enumerate_parking(&k3, &b).unwrap(),
            want(&[&[0, 0], &[0, 1], &[1, 0]])
        );
    }

    #[test]
    fn classical_parking_functions_of_length_two_by_definition() {
        // Direct Ω scan with r = (1,1) on the K3 reduced Laplacian.
        let k3 = ToppleMatrix::from_i64_rows(&[[2, -1], [-1, 2]]).unwrap();
        let r = RateVector::from_i64(&k3, &[1, 1]).unwrap();
        let b = Budgets::default();
        let got: Vec<_> = StableBox::new(&k3, &b)
            .unwrap()
            .iter()
            .filter(|f| is_parking_bruteforce(&k3, &r, f, &b).unwrap())
            .collect();
        assert_eq!(got, vec![cfg(&[0, 0]), cfg(&[0, 1]), cfg(&[1, 0])]);
    }

    #[test]
    fn bijection_examples() {
        let m = example();
        assert_eq!(
            parking_to_recurrent(&m, &cfg(&[0, 0])).unwrap(),
            cfg(&[1, 3])
        );
        assert_eq!(
            parking_to_recurrent(&m, &cfg(&[1, 1])).unwrap(),
            cfg(&[0, 2])
        );
        assert_eq!(
            parking_to_recurrent(&m, &cfg(&[1, 0])).unwrap(),
            cfg(&[0, 3])
        );
        assert_eq!(
            recurrent_to_parking(&m, &cfg(&[0, 3])).unwrap(),
            cfg(&[1, 0])
        );
        assert_eq!(
            parking_to_recurrent(&m, &cfg(&[2, 0])).unwrap_err(),
            Error::OutsideStableBox { index: 0 }
        );
    }

    #[test]
    fn r_allowed_examples() {
        let m = example();
        let r = RateVector::from_i64(&m, &[2, 1]).unwrap();
        let b = Budgets::default();
        for (u, want) in [([1, 3], true), ([0, 0], false), ([1, 1], true)] {
            assert_eq!(is_r_allowed(&m, &r, &cfg(&u), &b).unwrap(), want);
            assert_eq!(is_r_allowed_bruteforce(&m, &r, &cfg(&u), &b).unwrap(), want);
        }
        // Unstable configurations may be allowed too; both routes agree.
        for u in [[5, 0], [0, 9], [3, 4]] {
            assert_eq!(
                is_r_allowed(&m, &r, &cfg(&u), &b).unwrap(),
                is_r_allowed_bruteforce(&m, &r, &cfg(&u), &b).unwrap()
            );
        }
    }

    #[test]
    fn dhar_allowed_examples() {
        let m = example();
        let b = Budgets::default();
        assert!(is_dhar_allowed(&m, &cfg(&[1, 3]), &b).unwrap());
        assert!(!is_dhar_allowed(&m, &cfg(&[0, 0]), &b).unwrap());
        let one = ToppleMatrix::from_i64_rows(&[[3]]).unwrap();
        for u in 0..3 {
            assert!(is_dhar_allowed(&one, &cfg(&[u]), &b).unwrap());
        }
        let tight = Budgets {
            subset_dim: 1,
            ..Budgets::default()
        };
        assert!(is_dhar_allowed(&m, &cfg(&[1, 3]), &tight).is_err());
    }

    #[test]
    fn greedy_outcome_serializes_one_based() {
        let out = GreedyOutcome::Parked {
            sequence: vec![1, 0, 0],
        };
        assert_eq!(
            serde_json::to_string(&out).unwrap(),
            r#"{"outcome":"parked","sequence":[2,1,1]}"#
        );
    }
}
