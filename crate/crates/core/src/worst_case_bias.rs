//! Worst-case clipping bias of the mean and variance over all datasets with
//! a given occupancy, for a given choice of retained counts.
//!
//! A user keeping Γ_ℓ of its m_ℓ samples keeps the first Γ_ℓ of them. Let
//! n = Σm and r = ΣΓ. The mean bias is U(1 − r/n). The variance bias is
//!
//! * 0 when nothing is dropped,
//! * U²·r(n − r)/n² when n < 2r,
//! * U²/4 when n ≥ 2r and n is even,
//! * U²/4·(1 − 1/n²) when n ≥ 2r and n is odd.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::dataset::{GridData, GridId, OccupancyArray, UserId};
use crate::error::{Error, Result};

/// Retained counts Γ_{g,ℓ}. Pairs without an entry keep all their samples;
/// an entry of 0 suppresses the user in that grid.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClipPlan {
    retained: BTreeMap<GridId, BTreeMap<UserId, u64>>,
}

impl ClipPlan {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, grid: GridId, user: UserId, retained: u64) {
        self.retained
            .entry(grid)
            .or_default()
            .insert(user, retained);
    }

    pub fn suppress(&mut self, grid: GridId, user: UserId) {
        self.set(grid, user, 0);
    }

    pub fn is_empty(&self) -> bool {
        self.retained.values().all(BTreeMap::is_empty)
    }

    /// Explicit entries as (grid, user, Γ).
    pub fn entries(&self) -> impl Iterator<Item = (&GridId, &UserId, u64)> {
        self.retained
            .iter()
            .flat_map(|(g, row)| row.iter().map(move |(u, &c)| (g, u, c)))
    }

    pub fn retained(&self, occupancy: &OccupancyArray, grid: &GridId, user: &UserId) -> u64 {
        self.retained
            .get(grid)
            .and_then(|row| row.get(user))
            .copied()
            .unwrap_or_else(|| occupancy.count(grid, user))
    }

    /// Γ for every user of `grid`, in user order, alongside m.
    pub fn grid_lists(
        &self,
        occupancy: &OccupancyArray,
        grid: &GridId,
    ) -> Result<(Vec<u64>, Vec<u64>)> {
        let row = occupancy
            .grid(grid)
            .ok_or_else(|| Error::UnknownGrid(grid.clone()))?;
        let overrides = self.retained.get(grid);
        let mut m = Vec::with_capacity(row.len());
        let mut gamma = Vec::with_capacity(row.len());
        for (u, &c) in row {
            m.push(c);
            gamma.push(overrides.and_then(|o| o.get(u)).copied().unwrap_or(c));
        }
        Ok((m, gamma))
    }

    /// Checks every entry refers to an occupied pair and Γ ≤ m.
    pub fn validate(&self, occupancy: &OccupancyArray) -> Result<()> {
        for (g, u, c) in self.entries() {
            let m = occupancy.count(g, u);
            if m == 0 {
                return Err(Error::InvalidPlan(format!(
                    "user {u} has no samples in grid {g}"
                )));
            }
            if c > m {
                return Err(Error::InvalidPlan(format!(
                    "user {u} retains {c} of {m} samples in grid {g}"
                )));
            }
        }
        Ok(())
    }

    /// The occupancy after clipping, with suppressed pairs removed.
    pub fn apply(&self, occupancy: &OccupancyArray) -> OccupancyArray {
        let mut out = OccupancyArray::new();
        for (u, g, _) in occupancy.entries() {
            let r = self.retained(occupancy, g, u);
            if r > 0 {
                out.insert(u.clone(), g.clone(), r)
                    .expect("entries are unique and positive");
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BiasBranch {
    /// Γ = m.
    Unclipped,
    /// Fewer samples dropped than retained (Σm < 2ΣΓ).
    FewDropped,
    /// Σm ≥ 2ΣΓ with Σm even.
    EvenTotal,
    /// Σm ≥ 2ΣΓ with Σm odd.
    OddTotal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasReport {
    pub e_mu: f64,
    pub e_var: f64,
    pub var_branch: BiasBranch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BiasTarget {
    Mean,
    Variance,
}

/// Returns (Σm, ΣΓ) after checking the two lists describe a valid plan.
fn totals(m_list: &[u64], gamma_list: &[u64]) -> Result<(u64, u64)> {
    if m_list.len() != gamma_list.len() {
        return Err(Error::InvalidPlan(format!(
            "{} counts but {} retained counts",
            m_list.len(),
            gamma_list.len()
        )));
    }
    if let Some((m, g)) = m_list.iter().zip(gamma_list).find(|(m, g)| g > m) {
        return Err(Error::InvalidPlan(format!(
            "retained {g} exceeds count {m}"
        )));
    }
    let r: u64 = gamma_list.iter().sum();
    if r == 0 {
        return Err(Error::ZeroRetained);
    }
    Ok((m_list.iter().sum(), r))
}

pub(crate) fn mean_bias_formula(total: u64, retained: u64, bound_u: f64) -> f64 {
    bound_u * (total - retained) as f64 / total as f64
}

pub(crate) fn variance_bias_formula(total: u64, retained: u64, bound_u: f64) -> (f64, BiasBranch) {
    let u2 = bound_u * bound_u;
    let n = total as f64;
    if retained == total {
        (0.0, BiasBranch::Unclipped)
    } else if total < 2 * retained {
        let r = retained as f64;
        (u2 * r * (n - r) / (n * n), BiasBranch::FewDropped)
    } else if total.is_multiple_of(2) {
        (u2 / 4.0, BiasBranch::EvenTotal)
    } else {
        (u2 / 4.0 * (1.0 - 1.0 / (n * n)), BiasBranch::OddTotal)
    }
}

/// E_μ = U(1 − ΣΓ/Σm).
pub fn mean_bias(m_list: &[u64], gamma_list: &[u64], bound_u: f64) -> Result<f64> {
    let (n, r) = totals(m_list, gamma_list)?;
    Ok(mean_bias_formula(n, r, bound_u))
}

pub fn variance_bias(m_list: &[u64], gamma_list: &[u64], bound_u: f64) -> Result<BiasReport> {
    let (n, r) = totals(m_list, gamma_list)?;
    let (e_var, var_branch) = variance_bias_formula(n, r, bound_u);
    Ok(BiasReport {
        e_mu: mean_bias_formula(n, r, bound_u),
        e_var,
        var_branch,
    })
}

/// Per-user samples of a dataset attaining the worst-case bias for
/// `target`.
///
/// Retained samples are 0. For the mean, and for the variance when fewer
/// samples are dropped than retained, every dropped sample is U. Otherwise
/// the dropped samples hold ⌈n/2⌉ − ΣΓ zeros followed by ⌊n/2⌋ copies of U,
/// so the full dataset is as spread as possible while the clipped one is
/// constant.
pub fn extremal_samples(
    m_list: &[u64],
    gamma_list: &[u64],
    bound_u: f64,
    target: BiasTarget,
) -> Result<Vec<Vec<f64>>> {
    let (n, r) = totals(m_list, gamma_list)?;
    if n == r {
        return Err(Error::InvalidPlan("no samples are dropped".into()));
    }
    let mut zeros_left = match target {
        BiasTarget::Variance if n >= 2 * r => n.div_ceil(2) - r,
        _ => 0,
    };
    Ok(m_list
        .iter()
        .zip(gamma_list)
        .map(|(&m, &g)| {
            let mut s = Vec::with_capacity(m as usize);
            s.resize(g as usize, 0.0);
            for _ in g..m {
                if zeros_left > 0 {
                    zeros_left -= 1;
                    s.push(0.0);
                } else {
                    s.push(bound_u);
                }
            }
            s
        })
        .collect())
}

/// [`extremal_samples`] as a grid with users `u01`, `u02`, ….
pub fn extremal_bias_dataset(
    m_list: &[u64],
    gamma_list: &[u64],
    bound_u: f64,
    target: BiasTarget,
) -> Result<GridData> {
    let samples = extremal_samples(m_list, gamma_list, bound_u, target)?;
    let width = samples.len().to_string().len().max(2);
    let users = samples
        .into_iter()
        .enumerate()
        .map(|(i, s)| (UserId::from(format!("u{:0width$}", i + 1)), s))
        .collect();
    Ok(GridData::new(bound_u, users))
}

pub mod oracle {
    //! Exhaustive worst-case bias over {0, U}-valued datasets.

    use alloc::vec::Vec;

    use crate::dataset::population_stats;
    use crate::error::{Error, Result};

    pub const LIMIT: u64 = 16;

    /// (max |μ − μ_clip|, max |Var − Var_clip|) over every dataset with
    /// samples in {0, U}.
    pub fn brute_force_bias(
        m_list: &[u64],
        gamma_list: &[u64],
        bound_u: f64,
    ) -> Result<(f64, f64)> {
        let n: u64 = m_list.iter().sum();
        if n > LIMIT {
            return Err(Error::TooLarge {
                total: n,
                limit: LIMIT,
            });
        }
        if gamma_list.iter().sum::<u64>() == 0 {
            return Err(Error::ZeroRetained);
        }
        let mut kept = Vec::new();
        for (&m, &g) in m_list.iter().zip(gamma_list) {
            for j in 0..m {
                kept.push(j < g);
            }
        }
        let mut all = Vec::with_capacity(n as usize);
        let mut clipped = Vec::with_capacity(n as usize);
        let (mut best_mu, mut best_var) = (0.0f64, 0.0f64);
        for mask in 0u32..1 << n {
            all.clear();
            clipped.clear();
            for (i, &k) in kept.iter().enumerate() {
                let v = if mask >> i & 1 == 1 { bound_u } else { 0.0 };
                all.push(v);
                if k {
                    clipped.push(v);
                }
            }
            let a = population_stats(all.iter()).expect("n > 0");
            let c = population_stats(clipped.iter()).expect("retained > 0");
            best_mu = best_mu.max((a.mean - c.mean).abs());
            best_var = best_var.max((a.variance - c.variance).abs());
        }
        Ok((best_mu, best_var))
    }
}

#[cfg(test)]
mod tests {
    use super::oracle::brute_force_bias;
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn mean_examples() {
        assert_eq!(mean_bias(&[3, 2], &[3, 2], 10.0).unwrap(), 0.0);
        assert!(close(mean_bias(&[3, 2], &[2, 1], 10.0).unwrap(), 4.0));
        assert!(close(mean_bias(&[5], &[1], 1.0).unwrap(), 0.8));
        assert_eq!(mean_bias(&[5], &[0], 1.0), Err(Error::ZeroRetained));
        assert!(mean_bias(&[5], &[6], 1.0).is_err());
    }

    #[test]
    fn variance_examples() {
        let r = variance_bias(&[3, 2], &[3, 2], 5.0).unwrap();
        assert_eq!((r.e_var, r.var_branch), (0.0, BiasBranch::Unclipped));
        let r = variance_bias(&[3, 2], &[1, 1], 5.0).unwrap();
        assert!(close(r.e_var, 6.0));
        assert_eq!(r.var_branch, BiasBranch::OddTotal);
        let r = variance_bias(&[3, 2], &[2, 2], 5.0).unwrap();
        assert!(close(r.e_var, 4.0));
        assert_eq!(r.var_branch, BiasBranch::FewDropped);
        let r = variance_bias(&[5], &[1], 1.0).unwrap();
        assert!(close(r.e_var, 0.24));
        assert_eq!(r.var_branch, BiasBranch::OddTotal);
        let r = variance_bias(&[4], &[1], 1.0).unwrap();
        assert_eq!((r.e_var, r.var_branch), (0.25, BiasBranch::EvenTotal));
    }

    #[test]
    fn formulas_match_oracle() {
        let cases: [(&[u64], &[u64]); 6] = [
            (&[3, 2], &[1, 1]),
            (&[3, 2], &[2, 2]),
            (&[5], &[1]),
            (&[2], &[1]),
            (&[4, 1, 3], &[2, 1, 0]),
            (&[2, 2, 2], &[2, 2, 1]),
        ];
        for (m, g) in cases {
            let (bm, bv) = brute_force_bias(m, g, 2.0).unwrap();
            let r = variance_bias(m, g, 2.0).unwrap();
            assert!(close(bm, r.e_mu), "{m:?} {g:?}");
            assert!(close(bv, r.e_var), "{m:?} {g:?}: {bv} vs {}", r.e_var);
        }
    }

    #[test]
    fn extremal_examples() {
        let d = extremal_bias_dataset(&[3, 2], &[1, 1], 5.0, BiasTarget::Variance).unwrap();
        assert_eq!(d.users[0].1, [0.0, 0.0, 5.0]);
        assert_eq!(d.users[1].1, [0.0, 5.0]);
        let gap = d.stats().unwrap().variance - d.clipped_stats(&[1, 1]).unwrap().variance;
        assert!(close(gap, 6.0));

        let d = extremal_bias_dataset(&[2], &[1], 1.0, BiasTarget::Variance).unwrap();
        assert_eq!(d.users[0].1, [0.0, 1.0]);

        let d = extremal_bias_dataset(&[3, 2], &[2, 1], 10.0, BiasTarget::Mean).unwrap();
        let gap = d.stats().unwrap().mean - d.clipped_stats(&[2, 1]).unwrap().mean;
        assert!(close(gap, 4.0));

        assert!(matches!(
            extremal_bias_dataset(&[3], &[3], 1.0, BiasTarget::Mean),
            Err(Error::InvalidPlan(_))
        ));
    }

    #[test]
    fn plan_lists_and_apply() {
        let occ =
            OccupancyArray::from_entries([("a", "g", 3), ("b", "g", 2), ("a", "h", 1)]).unwrap();
        let mut plan = ClipPlan::new();
        plan.set("g".into(), "a".into(), 1);
        plan.suppress("h".into(), "a".into());
        plan.validate(&occ).unwrap();
        let (m, g) = plan.grid_lists(&occ, &"g".into()).unwrap();
        assert_eq!((m, g), (alloc::vec![3, 2], alloc::vec![1, 2]));
        let after = plan.apply(&occ);
        assert_eq!(after.num_grids(), 1);
        assert_eq!(after.count(&"g".into(), &"a".into()), 1);

        plan.set("g".into(), "b".into(), 3);
        assert!(plan.validate(&occ).is_err());
    }
}
