//! Records, per-grid views and the public occupancy array.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

macro_rules! token {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(Arc<str>);

        impl $name {
            pub fn new(token: &str) -> Self {
                Self(Arc::from(token))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                fmt::Debug::fmt(&*self.0, f)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(token: &str) -> Self {
                Self::new(token)
            }
        }

        impl From<String> for $name {
            fn from(token: String) -> Self {
                Self(Arc::from(token))
            }
        }
    };
}

token!(
    /// Opaque user token. Lexicographic order is the processing order.
    UserId
);
token!(
    /// Opaque grid token.
    GridId
);

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub user: UserId,
    pub grid: GridId,
    pub value: f64,
}

impl Record {
    pub fn new(user: impl Into<UserId>, grid: impl Into<GridId>, value: f64) -> Self {
        Self {
            user: user.into(),
            grid: grid.into(),
            value,
        }
    }
}

/// Mean and population variance of one grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridStats {
    pub mean: f64,
    pub variance: f64,
    pub n: u64,
}

/// Population mean and variance (divisor `n`) of a non-empty slice.
pub(crate) fn population_stats<'a>(
    values: impl Iterator<Item = &'a f64> + Clone,
) -> Option<GridStats> {
    let mut n = 0u64;
    let mut sum = 0.0;
    for v in values.clone() {
        n += 1;
        sum += v;
    }
    if n == 0 {
        return None;
    }
    let mean = sum / n as f64;
    let mut ss = 0.0;
    for v in values {
        let d = v - mean;
        ss += d * d;
    }
    Some(GridStats {
        mean,
        variance: ss / n as f64,
        n,
    })
}

/// The samples of one grid, grouped per user in token order, each user's
/// samples in their original order.
#[derive(Debug, Clone, PartialEq)]
pub struct GridData {
    pub bound_u: f64,
    pub users: Vec<(UserId, Vec<f64>)>,
}

impl GridData {
    pub fn new(bound_u: f64, mut users: Vec<(UserId, Vec<f64>)>) -> Self {
        users.sort_by(|a, b| a.0.cmp(&b.0));
        Self { bound_u, users }
    }

    /// Per-user sample counts, in user order.
    pub fn counts(&self) -> Vec<u64> {
        self.users.iter().map(|(_, v)| v.len() as u64).collect()
    }

    pub fn total(&self) -> u64 {
        self.users.iter().map(|(_, v)| v.len() as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    pub fn stats(&self) -> Result<GridStats> {
        population_stats(self.users.iter().flat_map(|(_, v)| v.iter())).ok_or(Error::EmptyGrid)
    }

    /// Statistics of the retained samples: the first `gamma[i]` samples of
    /// user `i`.
    pub fn clipped_stats(&self, gamma: &[u64]) -> Result<GridStats> {
        if gamma.len() != self.users.len() {
            return Err(Error::InvalidPlan(alloc::format!(
                "{} retained counts for {} users",
                gamma.len(),
                self.users.len()
            )));
        }
        for ((user, v), &g) in self.users.iter().zip(gamma) {
            if g > v.len() as u64 {
                return Err(Error::InvalidPlan(alloc::format!(
                    "user {user} retains {g} of {} samples",
                    v.len()
                )));
            }
        }
        let retained = self
            .users
            .iter()
            .zip(gamma)
            .flat_map(|((_, v), &g)| v[..g as usize].iter());
        population_stats(retained).ok_or(Error::ZeroRetained)
    }
}

/// A validated dataset: records in input order plus the public bound `U`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<Record>,
    bound_u: f64,
}

impl Dataset {
    pub fn new(records: Vec<Record>, bound_u: f64) -> Result<Self> {
        if !(bound_u > 0.0 && bound_u.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!(
                "bound U must be positive and finite (got {bound_u})"
            )));
        }
        if records.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for r in &records {
            if !(0.0..=bound_u).contains(&r.value) {
                return Err(Error::ValueOutOfRange {
                    user: r.user.clone(),
                    grid: r.grid.clone(),
                    value: r.value,
                    bound: bound_u,
                });
            }
        }
        Ok(Self { records, bound_u })
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn bound_u(&self) -> f64 {
        self.bound_u
    }

    pub fn occupancy(&self) -> OccupancyArray {
        let mut grids: BTreeMap<GridId, BTreeMap<UserId, u64>> = BTreeMap::new();
        for r in &self.records {
            *grids
                .entry(r.grid.clone())
                .or_default()
                .entry(r.user.clone())
                .or_insert(0) += 1;
        }
        OccupancyArray { grids }
    }

    pub fn grid_ids(&self) -> Vec<GridId> {
        let mut ids: Vec<GridId> = self.records.iter().map(|r| r.grid.clone()).collect();
        ids.sort();
        ids.dedup();
        ids
    }

    pub fn grid(&self, grid: &GridId) -> Result<GridData> {
        let mut users: BTreeMap<UserId, Vec<f64>> = BTreeMap::new();
        for r in self.records.iter().filter(|r| &r.grid == grid) {
            users.entry(r.user.clone()).or_default().push(r.value);
        }
        if users.is_empty() {
            return Err(Error::UnknownGrid(grid.clone()));
        }
        Ok(GridData {
            bound_u: self.bound_u,
            users: users.into_iter().collect(),
        })
    }

    /// All grids at once, keyed by grid token.
    pub fn grids(&self) -> BTreeMap<GridId, GridData> {
        let mut grids: BTreeMap<GridId, BTreeMap<UserId, Vec<f64>>> = BTreeMap::new();
        for r in &self.records {
            grids
                .entry(r.grid.clone())
                .or_default()
                .entry(r.user.clone())
                .or_default()
                .push(r.value);
        }
        grids
            .into_iter()
            .map(|(g, users)| {
                (
                    g,
                    GridData {
                        bound_u: self.bound_u,
                        users: users.into_iter().collect(),
                    },
                )
            })
            .collect()
    }
}

pub fn grid_stats(dataset: &Dataset, grid: &GridId) -> Result<GridStats> {
    dataset.grid(grid)?.stats()
}

/// Per-grid, per-user contribution counts. Zero entries are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OccupancyArray {
    grids: BTreeMap<GridId, BTreeMap<UserId, u64>>,
}

impl OccupancyArray {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds from `(user, grid, count)` triples, rejecting zero counts and
    /// repeated pairs.
    pub fn from_entries<I, U, G>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (U, G, u64)>,
        U: Into<UserId>,
        G: Into<GridId>,
    {
        let mut occ = Self::new();
        for (u, g, c) in entries {
            occ.insert(u.into(), g.into(), c)?;
        }
        Ok(occ)
    }

    pub fn insert(&mut self, user: UserId, grid: GridId, count: u64) -> Result<()> {
        if count == 0 {
            return Err(Error::NonPositiveCount { user, grid });
        }
        let row = self.grids.entry(grid.clone()).or_default();
        if row.contains_key(&user) {
            return Err(Error::DuplicateEntry { user, grid });
        }
        row.insert(user, count);
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.grids.is_empty()
    }

    pub fn grids(&self) -> impl Iterator<Item = (&GridId, &BTreeMap<UserId, u64>)> {
        self.grids.iter()
    }

    pub fn grid(&self, grid: &GridId) -> Option<&BTreeMap<UserId, u64>> {
        self.grids.get(grid)
    }

    pub fn num_grids(&self) -> usize {
        self.grids.len()
    }

    pub fn count(&self, grid: &GridId, user: &UserId) -> u64 {
        self.grids
            .get(grid)
            .and_then(|row| row.get(user))
            .copied()
            .unwrap_or(0)
    }

    /// Counts of one grid in user order.
    pub fn grid_counts(&self, grid: &GridId) -> Option<Vec<u64>> {
        self.grids
            .get(grid)
            .map(|row| row.values().copied().collect())
    }

    /// G_ℓ for every user: the grids each user occupies.
    pub fn user_grids(&self) -> BTreeMap<UserId, Vec<GridId>> {
        let mut out: BTreeMap<UserId, Vec<GridId>> = BTreeMap::new();
        for (g, row) in &self.grids {
            for u in row.keys() {
                out.entry(u.clone()).or_default().push(g.clone());
            }
        }
        out
    }

    /// Row sums m_ℓ.
    pub fn user_totals(&self) -> BTreeMap<UserId, u64> {
        let mut out: BTreeMap<UserId, u64> = BTreeMap::new();
        for row in self.grids.values() {
            for (u, &c) in row {
                *out.entry(u.clone()).or_insert(0) += c;
            }
        }
        out
    }

    pub fn num_users(&self) -> usize {
        self.user_grids().len()
    }

    /// G_1 = max_ℓ |G_ℓ|, zero for an empty array.
    pub fn max_grids_per_user(&self) -> usize {
        self.user_grids().values().map(Vec::len).max().unwrap_or(0)
    }

    /// m_g★ for one grid.
    pub fn grid_max(&self, grid: &GridId) -> Option<u64> {
        self.grids
            .get(grid)
            .and_then(|row| row.values().copied().max())
    }

    /// m★ over the whole array.
    pub fn max_count(&self) -> u64 {
        self.grids
            .values()
            .flat_map(|row| row.values().copied())
            .max()
            .unwrap_or(0)
    }

    /// (user, grid, count) triples in grid-then-user order.
    pub fn entries(&self) -> impl Iterator<Item = (&UserId, &GridId, u64)> {
        self.grids
            .iter()
            .flat_map(|(g, row)| row.iter().map(move |(u, &c)| (u, g, c)))
    }
}
