//! User-level sensitivities of the sample mean and the population variance.
//!
//! All functions take per-user counts of one grid. Zero entries are allowed
//! and stand for users without (retained) samples.

use crate::error::{Error, Result};
use crate::grouping::GroupingStrategy;

/// Which case of the variance sensitivity formula applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarianceBranch {
    /// Σm > 2m★: U²·m★(Σm − m★)/(Σm)².
    AboveTwice,
    /// Σm ≤ 2m★ and Σm even: U²/4.
    EvenCap,
    /// Σm ≤ 2m★ and Σm odd: U²/4·(1 − 1/(Σm)²).
    OddCap,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityReport {
    pub delta_mu: f64,
    pub delta_var: f64,
    pub branch: VarianceBranch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainReport {
    pub delta_f: f64,
    pub delta_tilde: f64,
    pub opt: f64,
    pub gain: f64,
}

fn max_and_total(counts: &[u64]) -> (u64, u64) {
    counts
        .iter()
        .fold((0, 0), |(mx, tot), &c| (mx.max(c), tot + c))
}

/// Variance sensitivity from the largest count and the total.
pub(crate) fn variance_formula(max: u64, total: u64, bound_u: f64) -> (f64, VarianceBranch) {
    let u2 = bound_u * bound_u;
    let n = total as f64;
    if total > 2 * max {
        let m = max as f64;
        (u2 * m * (n - m) / (n * n), VarianceBranch::AboveTwice)
    } else if total.is_multiple_of(2) {
        (u2 / 4.0, VarianceBranch::EvenCap)
    } else {
        (u2 / 4.0 * (1.0 - 1.0 / (n * n)), VarianceBranch::OddCap)
    }
}

/// Δ_μ = U·m★/Σm.
pub fn mean_sensitivity(m_list: &[u64], bound_u: f64) -> Result<f64> {
    let (max, total) = max_and_total(m_list);
    if total == 0 {
        return Err(Error::ZeroTotal);
    }
    Ok(bound_u * max as f64 / total as f64)
}

pub fn variance_sensitivity(m_list: &[u64], bound_u: f64) -> Result<SensitivityReport> {
    let (max, total) = max_and_total(m_list);
    if total == 0 {
        return Err(Error::ZeroTotal);
    }
    let (delta_var, branch) = variance_formula(max, total, bound_u);
    Ok(SensitivityReport {
        delta_mu: bound_u * max as f64 / total as f64,
        delta_var,
        branch,
    })
}

/// Δ_μ of the clipped mean, U·Γ★/ΣΓ.
pub fn clipped_mean_sensitivity(gamma_list: &[u64], bound_u: f64) -> Result<f64> {
    mean_sensitivity(gamma_list, bound_u).map_err(|_| Error::ZeroRetained)
}

pub fn clipped_variance_sensitivity(gamma_list: &[u64], bound_u: f64) -> Result<SensitivityReport> {
    variance_sensitivity(gamma_list, bound_u).map_err(|_| Error::ZeroRetained)
}

/// Variance sensitivity when every one of `l` users holds one sample:
/// U²(L − 1)/L².
pub fn item_level_variance_sensitivity(l: u64, bound_u: f64) -> f64 {
    let n = l as f64;
    bound_u * bound_u * (n - 1.0) / (n * n)
}

/// Sensitivity of the array-averaging estimator: 2U/K under WrapAround,
/// U/K̄ under BestFit.
pub fn array_avg_sensitivity(strategy: GroupingStrategy, arrays: u64, bound_u: f64) -> Result<f64> {
    if arrays == 0 {
        return Err(Error::InvalidParameter(
            "array count must be at least 1".into(),
        ));
    }
    Ok(match strategy {
        GroupingStrategy::WrapAround => 2.0 * bound_u / arrays as f64,
        GroupingStrategy::BestFit => bound_u / arrays as f64,
    })
}

/// Compares the mean sensitivity with the idealized array sensitivity
/// Δ̃ = U·m_UB/Σ min(m_ℓ, m_UB).
pub fn gain_report(m_list: &[u64], m_ub: u64, bound_u: f64) -> Result<GainReport> {
    if m_ub == 0 {
        return Err(Error::InvalidCapacity(0));
    }
    let delta_f = mean_sensitivity(m_list, bound_u)?;
    let (max, total) = max_and_total(m_list);
    let clipped: u64 = m_list.iter().map(|&m| m.min(m_ub)).sum();
    let delta_tilde = bound_u * m_ub as f64 / clipped as f64;
    let users = m_list.iter().filter(|&&m| m > 0).count() as f64;
    Ok(GainReport {
        delta_f,
        delta_tilde,
        opt: max as f64 * users / total as f64,
        gain: delta_f / delta_tilde,
    })
}

pub mod oracle {
    //! Exhaustive reference computations on tiny inputs.
    //!
    //! The extremal neighbouring datasets for the variance place every
    //! sample at 0 or U, so enumerating {0, U}-valued datasets is exact.

    use alloc::vec::Vec;

    use crate::dataset::population_stats;
    use crate::error::{Error, Result};

    /// Largest total sample count the oracles accept.
    pub const LIMIT: u64 = 10;

    fn block_offsets(m_list: &[u64]) -> Result<(Vec<u32>, u32)> {
        let total: u64 = m_list.iter().sum();
        if total > LIMIT {
            return Err(Error::TooLarge {
                total,
                limit: LIMIT,
            });
        }
        if total == 0 {
            return Err(Error::ZeroTotal);
        }
        let mut offsets = Vec::with_capacity(m_list.len());
        let mut at = 0u32;
        for &m in m_list {
            offsets.push(at);
            at += m as u32;
        }
        Ok((offsets, at))
    }

    /// Statistic of every {0, U} dataset, indexed by the bitmask of
    /// positions holding U.
    fn table(n: u32, bound_u: f64, stat: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut values = Vec::with_capacity(n as usize);
        (0u32..1 << n)
            .map(|mask| {
                values.clear();
                values.extend((0..n).map(|i| if mask >> i & 1 == 1 { bound_u } else { 0.0 }));
                let s = population_stats(values.iter()).expect("n > 0");
                stat(s.mean, s.variance)
            })
            .collect()
    }

    fn max_neighbour_gap(
        m_list: &[u64],
        bound_u: f64,
        stat: impl Fn(f64, f64) -> f64,
    ) -> Result<f64> {
        let (offsets, n) = block_offsets(m_list)?;
        let values = table(n, bound_u, stat);
        let mut best = 0.0f64;
        for mask in 0u32..1 << n {
            for (k, &m) in m_list.iter().enumerate() {
                if m == 0 {
                    continue;
                }
                let block = ((1u32 << m) - 1) << offsets[k];
                let rest = mask & !block;
                for r in 0u32..1 << m {
                    let other = rest | r << offsets[k];
                    best = best.max((values[mask as usize] - values[other as usize]).abs());
                }
            }
        }
        Ok(best)
    }

    /// max |Var(D) − Var(D')| over user-level neighbours D, D'.
    pub fn brute_force_variance_sensitivity(m_list: &[u64], bound_u: f64) -> Result<f64> {
        max_neighbour_gap(m_list, bound_u, |_, var| var)
    }

    /// max |μ(D) − μ(D')| over user-level neighbours D, D'.
    pub fn brute_force_mean_sensitivity(m_list: &[u64], bound_u: f64) -> Result<f64> {
        max_neighbour_gap(m_list, bound_u, |mean, _| mean)
    }
}
