#![allow(dead_code)]

use num_bigint::BigInt;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use toppling::{Configuration, RateVector, ToppleMatrix};

pub fn ints(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

pub fn cfg(v: &[i64]) -> Configuration {
    Configuration::from_i64(v).unwrap()
}

pub fn cfgs(list: &[&[i64]]) -> Vec<Configuration> {
    list.iter().map(|v| cfg(v)).collect()
}

pub fn example() -> ToppleMatrix {
    ToppleMatrix::from_i64_rows(&[[2, -1], [-3, 4]]).unwrap()
}

pub fn example_rate(m: &ToppleMatrix) -> RateVector {
    RateVector::from_i64(m, &[2, 1]).unwrap()
}

/// Rows with diagonal in `1..=max_diag`, nonpositive off-diagonal entries and
/// nonnegative row sums; resampled until the matrix validates.
pub fn random_rows(rng: &mut ChaCha8Rng, n: usize, max_diag: i64) -> Vec<Vec<i64>> {
    loop {
        let mut rows = vec![vec![0i64; n]; n];
        for (i, row) in rows.iter_mut().enumerate() {
            let d = rng.gen_range(1..=max_diag);
            row[i] = d;
            if n == 1 {
                continue;
            }
            let mut spare = rng.gen_range(0..=d);
            while spare > 0 {
                let mut j = rng.gen_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                let take = rng.gen_range(1..=spare);
                row[j] -= take;
                spare -= take;
            }
        }
        if ToppleMatrix::from_i64_rows(&rows).is_ok() {
            return rows;
        }
    }
}

pub fn random_toppling(rng: &mut ChaCha8Rng, n: usize, max_diag: i64) -> ToppleMatrix {
    ToppleMatrix::from_i64_rows(&random_rows(rng, n, max_diag)).unwrap()
}

/// Plain `i64` stabilizer used as an oracle: always topples the lowest
/// unstable vertex. Returns the stable result and the toppling counts.
pub fn naive_stabilize(rows: &[Vec<i64>], u: &[i64]) -> (Vec<i64>, Vec<u64>) {
    let mut v = u.to_vec();
    let mut counts = vec![0u64; v.len()];
    while let Some(i) = (0..v.len()).find(|&i| v[i] >= rows[i][i]) {
        for (x, d) in v.iter_mut().zip(&rows[i]) {
            *x -= d;
        }
        counts[i] += 1;
    }
    (v, counts)
}

/// Plain `i64` reading of the parking definition: every nonzero
/// `0 ≤ χ ≤ r` has some `j` with `χ_j ≥ 1` and `f_j < Σ_i χ_i Δ_ij`.
pub fn naive_is_parking(rows: &[Vec<i64>], r: &[i64], f: &[i64]) -> bool {
    let n = rows.len();
    let mut chi = vec![0i64; n];
    loop {
        let mut k = n;
        loop {
            if k == 0 {
                return true;
            }
            k -= 1;
            if chi[k] < r[k] {
                chi[k] += 1;
                break;
            }
            chi[k] = 0;
        }
        let ok =
            (0..n).any(|j| chi[j] >= 1 && f[j] < (0..n).map(|i| chi[i] * rows[i][j]).sum::<i64>());
        if !ok {
            return false;
        }
    }
}

pub fn stable_box(rows: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for (i, row) in rows.iter().enumerate() {
        out = out
            .into_iter()
            .flat_map(|p: Vec<i64>| {
                (0..row[i]).map(move |x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    out
}
