//! Configurations, toppling, stabilization and the recurrence test.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::budget::Budgets;
use crate::error::{Error, Result};
use crate::json;
use crate::matrix::{RateVector, ToppleMatrix};

/// A nonnegative integer vector: chip counts, or a candidate parking function.
///
/// Ordering is lexicographic.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration(Vec<BigInt>);

impl Configuration {
    pub fn new(values: Vec<BigInt>) -> Result<Self> {
        if let Some(index) = values.iter().position(|x| x.is_negative()) {
            return Err(Error::NegativeEntry { index });
        }
        Ok(Configuration(values))
    }

    pub fn from_i64(values: &[i64]) -> Result<Self> {
        Self::new(values.iter().map(|&x| BigInt::from(x)).collect())
    }

    pub fn zeros(n: usize) -> Self {
        Configuration(vec![BigInt::zero(); n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[BigInt] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<BigInt> {
        self.0
    }

    /// `self + e_i`.
    pub fn add_unit(&self, i: usize) -> Self {
        let mut v = self.0.clone();
        v[i] += 1;
        Configuration(v)
    }
}

impl Serialize for Configuration {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        json::int_vec(&self.0, s)
    }
}

impl std::fmt::Display for Configuration {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// An ordered toppling sequence together with its multiplicity count.
///
/// Vertices are 0-based in memory and 1-based when serialized.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ToppleRecord {
    sequence: Vec<usize>,
    representation: Vec<u64>,
}

impl ToppleRecord {
    pub fn new(n: usize) -> Self {
        ToppleRecord {
            sequence: Vec::new(),
            representation: vec![0; n],
        }
    }

    fn push(&mut self, vertex: usize) {
        self.sequence.push(vertex);
        self.representation[vertex] += 1;
    }

    pub fn sequence(&self) -> &[usize] {
        &self.sequence
    }

    pub fn representation(&self) -> &[u64] {
        &self.representation
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }

    /// Replays the sequence from `start`, checking that every toppled vertex
    /// is critical when it fires.
    pub fn replay(&self, matrix: &ToppleMatrix, start: &Configuration) -> Result<Configuration> {
        self.sequence
            .iter()
            .try_fold(start.clone(), |u, &i| topple(matrix, &u, i))
    }
}

impl Serialize for ToppleRecord {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire<'a> {
            sequence: Vec<usize>,
            representation: &'a [u64],
        }
        Wire {
            sequence: self.sequence.iter().map(|v| v + 1).collect(),
            representation: &self.representation,
        }
        .serialize(s)
    }
}

/// Which critical vertex fires next. Results never depend on the choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TopplePolicy {
    #[default]
    LowestIndex,
    /// Uniform choice among critical vertices, reproducible from the seed.
    Random { seed: u64 },
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

fn check_vertex(matrix: &ToppleMatrix, i: usize) -> Result<()> {
    if i >= matrix.dim() {
        return Err(Error::VertexOutOfRange {
            index: i,
            n: matrix.dim(),
        });
    }
    Ok(())
}

pub fn is_critical(matrix: &ToppleMatrix, u: &Configuration, i: usize) -> bool {
    &u.0[i] >= matrix.diagonal(i)
}

/// True iff `0 ≤ u_i < Δ_ii` for every vertex.
pub fn is_stable(matrix: &ToppleMatrix, u: &Configuration) -> Result<bool> {
    check_dim(matrix, u.len())?;
    Ok((0..matrix.dim()).all(|i| !is_critical(matrix, u, i)))
}

/// Fires critical vertex `i`: returns `u − Δ_i`.
pub fn topple(matrix: &ToppleMatrix, u: &Configuration, i: usize) -> Result<Configuration> {
    check_dim(matrix, u.len())?;
    check_vertex(matrix, i)?;
    if !is_critical(matrix, u, i) {
        return Err(Error::NotCritical { vertex: i });
    }
    let v = u.0.iter().zip(matrix.row(i)).map(|(a, b)| a - b).collect();
    Ok(Configuration(v))
}

/// Topples until stable, one vertex at a time, recording the sequence.
pub fn stabilize(
    matrix: &ToppleMatrix,
    u: &Configuration,
    policy: TopplePolicy,
    budgets: &Budgets,
) -> Result<(Configuration, ToppleRecord)> {
    check_dim(matrix, u.len())?;
    let n = matrix.dim();
    let mut rng = match policy {
        TopplePolicy::Random { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        TopplePolicy::LowestIndex => None,
    };
    let mut v = u.0.clone();
    let mut record = ToppleRecord::new(n);
    let mut critical = Vec::with_capacity(n);
    loop {
        critical.clear();
        critical.extend((0..n).filter(|&i| &v[i] >= matrix.diagonal(i)));
        let next = match rng.as_mut() {
            None => critical.first().copied(),
            Some(rng) => critical.choose(rng).copied(),
        };
        let Some(i) = next else { break };
        if record.sequence.len() as u64 >= budgets.topples {
            return Err(Error::ToppleCapExceeded {
                cap: budgets.topples,
            });
        }
        for (x, d) in v.iter_mut().zip(matrix.row(i)) {
            *x -= d;
        }
        record.push(i);
    }
    Ok((Configuration(v), record))
}

/// Stabilizes without recording, firing each critical vertex as many times
/// in a row as it stays critical. Accepts any vector whose entries are
/// nonnegative.
pub(crate) fn relax(matrix: &ToppleMatrix, mut v: Vec<BigInt>, cap: u64) -> Result<Vec<BigInt>> {
    let n = matrix.dim();
    let mut fired: u64 = 0;
    loop {
        let mut changed = false;
        for i in 0..n {
            let diag = matrix.diagonal(i);
            if &v[i] < diag {
                continue;
            }
            // Firing i only lowers v_i, so it stays critical for k rounds.
            let k = &v[i] / diag;
            let k_small = k.to_u64().filter(|k| fired.saturating_add(*k) <= cap);
            match k_small {
                Some(ks) => fired += ks,
                None => return Err(Error::ToppleCapExceeded { cap }),
            }
            if k.is_one() {
                for (x, d) in v.iter_mut().zip(matrix.row(i)) {
                    *x -= d;
                }
            } else {
                for (x, d) in v.iter_mut().zip(matrix.row(i)) {
                    *x -= d * &k;
                }
            }
            changed = true;
        }
        if !changed {
            return Ok(v);
        }
    }
}

/// Stabilized configuration only; same result as [`stabilize`] under any
/// policy.
pub fn stabilized(
    matrix: &ToppleMatrix,
    u: &Configuration,
    budgets: &Budgets,
) -> Result<Configuration> {
    check_dim(matrix, u.len())?;
    relax(matrix, u.0.clone(), budgets.topples).map(Configuration)
}

/// Avalanche operator `A_i`: add one chip at `i` to a stable `u`, then
/// stabilize.
pub fn avalanche(
    matrix: &ToppleMatrix,
    u: &Configuration,
    i: usize,
    budgets: &Budgets,
) -> Result<Configuration> {
    check_vertex(matrix, i)?;
    if !is_stable(matrix, u)? {
        return Err(Error::NotStable);
    }
    stabilized(matrix, &u.add_unit(i), budgets)
}

/// `u` is recurrent for `r` iff it is stable and `u + rΔ` stabilizes back
/// to `u`.
pub fn is_recurrent(
    matrix: &ToppleMatrix,
    rate: &RateVector,
    u: &Configuration,
    budgets: &Budgets,
) -> Result<bool> {
    check_dim(matrix, u.len())?;
    check_dim(matrix, rate.dim())?;
    if !is_stable(matrix, u)? {
        return Ok(false);
    }
    let loaded: Vec<BigInt> = u.0.iter().zip(rate.load()).map(|(a, c)| a + c).collect();
    Ok(relax(matrix, loaded, budgets.topples)? == u.0)
}

/// All recurrent configurations for `rate`, in lexicographic order.
pub fn enumerate_recurrent(
    matrix: &ToppleMatrix,
    rate: &RateVector,
    budgets: &Budgets,
) -> Result<Vec<Configuration>> {
    StableBox::new(matrix, budgets)?.filter(|u| is_recurrent(matrix, rate, u, budgets))
}

/// The finite box `∏_j [0, Δ_jj − 1]` holding every stable configuration,
/// indexed in lexicographic order.
#[derive(Debug, Clone)]
pub struct StableBox {
    radices: Vec<u64>,
    size: u64,
}

impl StableBox {
    pub fn new(matrix: &ToppleMatrix, budgets: &Budgets) -> Result<Self> {
        let size = matrix.stable_box_size();
        let size_small = size.to_u64().filter(|&s| s <= budgets.stable_box);
        let Some(size_small) = size_small else {
            return Err(Error::BudgetExceeded {
                what: "stable box (product of diagonal entries)",
                size,
                budget: budgets.stable_box,
            });
        };
        let radices = (0..matrix.dim())
            .map(|i| {
                matrix
                    .diagonal(i)
                    .to_u64()
                    .expect("bounded by the box size")
            })
            .collect();
        Ok(StableBox {
            radices,
            size: size_small,
        })
    }

    pub fn len(&self) -> u64 {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    /// The `index`-th point; the last coordinate varies fastest.
    pub fn get(&self, mut index: u64) -> Configuration {
        let mut v = vec![BigInt::zero(); self.radices.len()];
        for (slot, &radix) in v.iter_mut().zip(&self.radices).rev() {
            *slot = BigInt::from(index % radix);
            index /= radix;
        }
        Configuration(v)
    }

    pub fn iter(&self) -> impl Iterator<Item = Configuration> + '_ {
        (0..self.size).map(|k| self.get(k))
    }

    /// Points satisfying `keep`, in lexicographic order. Evaluated in
    /// parallel; the first error in box order wins.
    pub fn filter<F>(&self, keep: F) -> Result<Vec<Configuration>>
    where
        F: Fn(&Configuration) -> Result<bool> + Sync,
    {
        let marks: Vec<Result<Option<Configuration>>> = (0..self.size)
            .into_par_iter()
            .map(|k| {
                let u = self.get(k);
                Ok(keep(&u)?.then_some(u))
            })
            .collect();
        marks.into_iter().filter_map(Result::transpose).collect()
    }
}
