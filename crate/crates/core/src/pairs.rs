//! Exhaustive or seeded-sampled scans over unordered pairs of a point set.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::par::{self, Execution};

/// Sets larger than this are scanned by sampling.
pub const EXACT_PAIR_LIMIT: usize = 5000;
pub const SAMPLED_PAIRS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanMode {
    Exact,
    Sampled,
}

pub fn scan_mode(n: usize) -> ScanMode {
    if n <= EXACT_PAIR_LIMIT {
        ScanMode::Exact
    } else {
        ScanMode::Sampled
    }
}

fn sampled_pairs(n: usize, seed: u64) -> Vec<(u32, u32)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..SAMPLED_PAIRS)
        .map(|_| loop {
            let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
            if i != j {
                break (i.min(j) as u32, i.max(j) as u32);
            }
        })
        .collect()
}

/// Max of `f(a, b)` over pairs of distinct members of `set` (0 when fewer than two).
pub fn pair_max<F>(exec: Execution, set: &[usize], seed: u64, f: F) -> (f64, ScanMode)
where
    F: Fn(usize, usize) -> f64 + Sync + Send,
{
    let n = set.len();
    let mode = scan_mode(n);
    if n < 2 {
        return (0.0, mode);
    }
    let value = match mode {
        ScanMode::Exact => par::max(exec, n, 0.0, |i| (i + 1..n).map(|j| f(set[i], set[j])).fold(0.0, par::nan_max)),
        ScanMode::Sampled => {
            let pairs = sampled_pairs(n, seed);
            par::max(exec, pairs.len(), 0.0, |k| {
                let (i, j) = pairs[k];
                f(set[i as usize], set[j as usize])
            })
        }
    };
    (value, mode)
}

/// Scatter `(t, v)` from `f`, reduced to the max `v` per distinct `t` and sorted by `t`.
/// Pairs for which `f` returns `None` are ignored.
pub fn pair_scatter<F>(exec: Execution, set: &[usize], seed: u64, f: F) -> (Vec<(f64, f64)>, ScanMode)
where
    F: Fn(usize, usize) -> Option<(f64, f64)> + Sync + Send,
{
    let n = set.len();
    let mode = scan_mode(n);
    if n < 2 {
        return (Vec::new(), mode);
    }
    let merge = |mut a: HashMap<u64, f64>, b: HashMap<u64, f64>| {
        for (k, v) in b {
            let e = a.entry(k).or_insert(v);
            *e = par::nan_max(*e, v);
        }
        a
    };
    let insert = |mut m: HashMap<u64, f64>, (t, v): (f64, f64)| {
        let e = m.entry(t.to_bits()).or_insert(v);
        *e = par::nan_max(*e, v);
        m
    };
    let map = match mode {
        ScanMode::Exact => par::fold_reduce(
            exec,
            n,
            HashMap::new,
            |m, i| (i + 1..n).filter_map(|j| f(set[i], set[j])).fold(m, insert),
            merge,
        ),
        ScanMode::Sampled => {
            let pairs = sampled_pairs(n, seed);
            par::fold_reduce(
                exec,
                pairs.len(),
                HashMap::new,
                |m, k| {
                    let (i, j) = pairs[k];
                    match f(set[i as usize], set[j as usize]) {
                        Some(p) => insert(m, p),
                        None => m,
                    }
                },
                merge,
            )
        }
    };
    let mut out: Vec<(f64, f64)> = map.into_iter().map(|(k, v)| (f64::from_bits(k), v)).collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    (out, mode)
}
