#![allow(dead_code)]

use emocov::coverage::CoverageState;
use emocov::{EmotionLabel, FeatureVector};
use std::collections::BTreeSet;
use std::path::PathBuf;

/// A cell as (kind indices, value indices), independent of the library's indexing.
pub type RawCell = (Vec<usize>, Vec<usize>);

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

pub fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

pub fn n_choose_k(n: usize, k: usize) -> usize {
    let num: usize = (n - k + 1..=n).product();
    let den: usize = (1..=k).product();
    num / den
}

/// k-subsets of 0..n in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|i| m & (1 << i) != 0).collect::<Vec<_>>())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

pub fn every_cell(k: usize, alpha: usize) -> Vec<RawCell> {
    let mut out = Vec::new();
    for kinds in subsets(4, k) {
        for code in 0..alpha.pow(k as u32) {
            let mut values = Vec::with_capacity(k);
            let mut c = code;
            for _ in 0..k {
                values.push(c % alpha);
                c /= alpha;
            }
            out.push((kinds.clone(), values));
        }
    }
    out
}

/// Cells covered by `vectors`, decided by checking each cell against each vector.
pub fn oracle_cells(vectors: &[[usize; 4]], k: usize, alpha: usize) -> BTreeSet<RawCell> {
    every_cell(k, alpha)
        .into_iter()
        .filter(|(kinds, values)| vectors.iter().any(|v| kinds.iter().zip(values).all(|(&i, &x)| v[i] == x)))
        .collect()
}

pub fn state_cells(state: &CoverageState) -> BTreeSet<RawCell> {
    state
        .covered_cells()
        .iter()
        .map(|c| {
            (
                c.projection().kinds().iter().map(|k| k.index()).collect(),
                c.values().iter().map(|v| v.index()).collect(),
            )
        })
        .collect()
}

pub fn vector(raw: [usize; 4]) -> FeatureVector {
    FeatureVector::from_values(raw.map(|i| EmotionLabel::ALL[i]))
}
