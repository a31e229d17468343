//! Pseudo-user arrays for one grid and the rules for choosing their
//! capacity `m_UB`.
//!
//! Users are processed by non-increasing count, ties by token. Each user
//! contributes its first `min(m_ℓ, m_UB)` samples.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::{GridData, UserId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupingStrategy {
    WrapAround,
    BestFit,
}

/// One placed sample and the user it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub value: f64,
    pub source: UserId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGroup {
    pub capacity: u64,
    pub strategy: GroupingStrategy,
    pub arrays: Vec<Vec<Entry>>,
}

impl ArrayGroup {
    pub fn len(&self) -> usize {
        self.arrays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrays.is_empty()
    }

    pub fn placed(&self) -> usize {
        self.arrays.iter().map(Vec::len).sum()
    }

    /// Indices of the arrays holding at least one sample of `user`.
    pub fn arrays_of(&self, user: &UserId) -> Vec<usize> {
        self.arrays
            .iter()
            .enumerate()
            .filter(|(_, a)| a.iter().any(|e| &e.source == user))
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayMeans {
    pub means: Vec<f64>,
    pub weights: Vec<u64>,
}

/// A placement of per-user sample counts: `arrays[i]` lists
/// `(user index, samples placed)` pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub capacity: u64,
    pub arrays: Vec<Vec<(usize, u64)>>,
}

/// K = ⌊Σ min(m_ℓ, m_UB) / m_UB⌋.
pub fn array_count_k(m_list: &[u64], m_ub: u64) -> u64 {
    if m_ub == 0 {
        return 0;
    }
    m_list.iter().map(|&m| m.min(m_ub)).sum::<u64>() / m_ub
}

fn processing_order(m_list: &[u64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..m_list.len()).collect();
    // stable sort keeps index (token) order among equal counts
    order.sort_by(|&a, &b| m_list[b].cmp(&m_list[a]));
    order
}

pub fn wrap_around_layout(m_list: &[u64], m_ub: u64) -> Result<Layout> {
    if m_ub == 0 {
        return Err(Error::InvalidCapacity(m_ub));
    }
    let mut arrays: Vec<Vec<(usize, u64)>> = Vec::new();
    let mut current: Vec<(usize, u64)> = Vec::new();
    let mut fill = 0u64;
    for i in processing_order(m_list) {
        let mut r = m_list[i].min(m_ub);
        while r > 0 {
            let take = r.min(m_ub - fill);
            current.push((i, take));
            fill += take;
            r -= take;
            if fill == m_ub {
                arrays.push(core::mem::take(&mut current));
                fill = 0;
            }
        }
    }
    // the trailing partial array is discarded
    Ok(Layout {
        capacity: m_ub,
        arrays,
    })
}

pub fn best_fit_layout(m_list: &[u64], m_ub: u64) -> Result<Layout> {
    if m_ub == 0 {
        return Err(Error::InvalidCapacity(m_ub));
    }
    let mut arrays: Vec<Vec<(usize, u64)>> = Vec::new();
    let mut fills: Vec<u64> = Vec::new();
    let mut by_fill: BTreeMap<u64, BTreeSet<usize>> = BTreeMap::new();
    for i in processing_order(m_list) {
        let r = m_list[i].min(m_ub);
        if r == 0 {
            continue;
        }
        let slot = by_fill
            .range(..=m_ub - r)
            .next_back()
            .map(|(_, idx)| *idx.iter().next().expect("fill buckets are never empty"));
        let a = match slot {
            Some(a) => {
                let old = fills[a];
                let bucket = by_fill.get_mut(&old).expect("bucket exists");
                bucket.remove(&a);
                if bucket.is_empty() {
                    by_fill.remove(&old);
                }
                a
            }
            None => {
                arrays.push(Vec::new());
                fills.push(0);
                arrays.len() - 1
            }
        };
        arrays[a].push((i, r));
        fills[a] += r;
        by_fill.entry(fills[a]).or_default().insert(a);
    }
    Ok(Layout {
        capacity: m_ub,
        arrays,
    })
}

pub fn layout(m_list: &[u64], m_ub: u64, strategy: GroupingStrategy) -> Result<Layout> {
    match strategy {
        GroupingStrategy::WrapAround => wrap_around_layout(m_list, m_ub),
        GroupingStrategy::BestFit => best_fit_layout(m_list, m_ub),
    }
}

/// K̄, the number of arrays BestFit opens.
pub fn best_fit_count(m_list: &[u64], m_ub: u64) -> Result<u64> {
    Ok(best_fit_layout(m_list, m_ub)?.arrays.len() as u64)
}

fn materialize(grid: &GridData, layout: Layout, strategy: GroupingStrategy) -> ArrayGroup {
    // per user, how many samples have already been placed
    let mut cursor = vec![0usize; grid.users.len()];
    let arrays = layout
        .arrays
        .into_iter()
        .map(|parts| {
            let mut out = Vec::new();
            for (i, n) in parts {
                let (user, values) = &grid.users[i];
                let start = cursor[i];
                for &value in &values[start..start + n as usize] {
                    out.push(Entry {
                        value,
                        source: user.clone(),
                    });
                }
                cursor[i] += n as usize;
            }
            out
        })
        .collect();
    ArrayGroup {
        capacity: layout.capacity,
        strategy,
        arrays,
    }
}

pub fn wrap_around(grid: &GridData, m_ub: u64) -> Result<ArrayGroup> {
    let layout = wrap_around_layout(&grid.counts(), m_ub)?;
    Ok(materialize(grid, layout, GroupingStrategy::WrapAround))
}

pub fn best_fit(grid: &GridData, m_ub: u64) -> Result<ArrayGroup> {
    let layout = best_fit_layout(&grid.counts(), m_ub)?;
    Ok(materialize(grid, layout, GroupingStrategy::BestFit))
}

pub fn group(grid: &GridData, m_ub: u64, strategy: GroupingStrategy) -> Result<ArrayGroup> {
    match strategy {
        GroupingStrategy::WrapAround => wrap_around(grid, m_ub),
        GroupingStrategy::BestFit => best_fit(grid, m_ub),
    }
}

/// Median count; the lower middle element for even lengths. Zero for an
/// empty list.
pub fn median_mub(m_list: &[u64]) -> u64 {
    if m_list.is_empty() {
        return 0;
    }
    let mut sorted = m_list.to_vec();
    sorted.sort_unstable();
    sorted[(sorted.len() - 1) / 2]
}

/// The integer `m` in `[min m_ℓ, max m_ℓ]` maximizing Σ min(m_ℓ, m) / √m,
/// smallest on ties. Zero for an empty list.
pub fn optimized_mub(m_list: &[u64]) -> u64 {
    let mut sorted = m_list.to_vec();
    sorted.sort_unstable();
    let (Some(&lo), Some(&hi)) = (sorted.first(), sorted.last()) else {
        return 0;
    };
    // compare S(m)/√m exactly: S(a)²·b vs S(b)²·a
    let mut best = lo;
    let mut best_s = sum_min(&sorted, lo) as u128;
    let mut below = 0usize;
    let mut prefix = 0u128;
    for m in lo..=hi {
        while below < sorted.len() && sorted[below] < m {
            prefix += sorted[below] as u128;
            below += 1;
        }
        let s = prefix + (sorted.len() - below) as u128 * m as u128;
        if s * s * best as u128 > best_s * best_s * m as u128 {
            best = m;
            best_s = s;
        }
    }
    best
}

fn sum_min(m_list: &[u64], m: u64) -> u64 {
    m_list.iter().map(|&x| x.min(m)).sum()
}

pub fn array_means(group: &ArrayGroup) -> ArrayMeans {
    let mut means = Vec::with_capacity(group.arrays.len());
    let mut weights = Vec::with_capacity(group.arrays.len());
    for a in group.arrays.iter().filter(|a| !a.is_empty()) {
        let sum: f64 = a.iter().map(|e| e.value).sum();
        means.push(sum / a.len() as f64);
        weights.push(a.len() as u64);
    }
    ArrayMeans { means, weights }
}
