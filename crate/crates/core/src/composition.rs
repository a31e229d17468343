//! Privacy accounting across grids, per-grid worst-case error budgets and
//! the Clip-User suppression algorithm.
//!
//! Releasing every grid with budget ε costs a user ε for each grid it
//! occupies, so the overall loss is K·ε with K the largest number of grids
//! any user occupies. Clip-User suppresses users in single grids, lowering
//! K, as long as no grid's worst-case error rises above the largest
//! per-grid error of the unclipped release.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::dataset::{Dataset, GridId, OccupancyArray, UserId};
use crate::error::{Error, Result};
use crate::mechanisms::{self, MechanismOutput, MechanismParams};
use crate::rng::RngStream;
use crate::sensitivity::{self, variance_formula};
use crate::worst_case_bias::{self, mean_bias_formula, variance_bias_formula, ClipPlan};

/// Worst-case error of one grid: clipping bias plus the expected absolute
/// Laplace noise of the mean and variance releases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBudget {
    pub bias_mean: f64,
    pub bias_var: f64,
    pub noise_mean: f64,
    pub noise_var: f64,
    pub total: f64,
}

impl ErrorBudget {
    fn new(bias_mean: f64, bias_var: f64, noise_mean: f64, noise_var: f64) -> Self {
        Self {
            bias_mean,
            bias_var,
            noise_mean,
            noise_var,
            total: bias_mean + bias_var + noise_mean + noise_var,
        }
    }
}

/// The budget from grid aggregates: Σm, ΣΓ and Γ★.
fn budget_from(
    total: u64,
    retained: u64,
    max_retained: u64,
    bound_u: f64,
    epsilon: f64,
) -> ErrorBudget {
    let (bias_var, _) = variance_bias_formula(total, retained, bound_u);
    let (dvar, _) = variance_formula(max_retained, retained, bound_u);
    let dmu = bound_u * max_retained as f64 / retained as f64;
    ErrorBudget::new(
        mean_bias_formula(total, retained, bound_u),
        bias_var,
        2.0 * dmu / epsilon,
        2.0 * dvar / epsilon,
    )
}

/// E_g for one grid given its counts and retained counts.
pub fn grid_error(
    m_list: &[u64],
    gamma_list: &[u64],
    bound_u: f64,
    epsilon: f64,
) -> Result<ErrorBudget> {
    let bias = worst_case_bias::variance_bias(m_list, gamma_list, bound_u)?;
    let sens = sensitivity::clipped_variance_sensitivity(gamma_list, bound_u)?;
    Ok(ErrorBudget::new(
        bias.e_mu,
        bias.e_var,
        2.0 * sens.delta_mu / epsilon,
        2.0 * sens.delta_var / epsilon,
    ))
}

/// max_ℓ Σ_{g ∈ G_ℓ} ε_g.
pub fn privacy_loss(
    occupancy: &OccupancyArray,
    eps_per_grid: &BTreeMap<GridId, f64>,
) -> Result<f64> {
    let mut per_user: BTreeMap<&UserId, f64> = BTreeMap::new();
    for (u, g, _) in occupancy.entries() {
        let eps = eps_per_grid
            .get(g)
            .ok_or_else(|| Error::UnknownGrid(g.clone()))?;
        *per_user.entry(u).or_insert(0.0) += eps;
    }
    Ok(per_user.values().copied().fold(0.0, f64::max))
}

/// Loss when every grid is released with the same ε: G_1·ε.
pub fn uniform_privacy_loss(occupancy: &OccupancyArray, epsilon: f64) -> f64 {
    occupancy.max_grids_per_user() as f64 * epsilon
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClipUserOptions {
    /// Never suppress in the grid with the smallest initial error.
    pub protect_min_error_grid: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuppressionEvent {
    pub stage: usize,
    pub user: UserId,
    pub grid: GridId,
    /// E_g of `grid` after the suppression.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum HaltReason {
    /// The best suppression for `user` would push `grid` above the cap.
    ErrorCapExceeded {
        user: UserId,
        grid: GridId,
        error: f64,
    },
    /// Every grid of `user` is either protected or would be emptied.
    NoCandidate { user: UserId },
    /// No user occupies more than one grid.
    SingleGridOccupancy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClipUserResult {
    pub occupancy: OccupancyArray,
    pub plan: ClipPlan,
    /// K = max_ℓ G_ℓ after suppression.
    pub k_factor: usize,
    /// G_1 before suppression.
    pub initial_k: usize,
    /// E, the largest initial per-grid error.
    pub error_cap: f64,
    pub initial_errors: BTreeMap<GridId, ErrorBudget>,
    pub per_grid_errors: BTreeMap<GridId, ErrorBudget>,
    pub trace: Vec<SuppressionEvent>,
    pub halt: HaltReason,
}

/// Running aggregates of one grid while users are being suppressed.
#[derive(Debug, Clone)]
struct GridState {
    total: u64,
    retained: u64,
    /// Multiset of the retained counts of active users.
    counts: BTreeMap<u64, usize>,
}

impl GridState {
    fn new(row: &BTreeMap<UserId, u64>) -> Self {
        let mut counts = BTreeMap::new();
        for &c in row.values() {
            *counts.entry(c).or_insert(0) += 1;
        }
        let total = row.values().sum();
        Self {
            total,
            retained: total,
            counts,
        }
    }

    fn max(&self) -> u64 {
        *self
            .counts
            .keys()
            .next_back()
            .expect("grid keeps at least one user")
    }

    fn budget(&self, bound_u: f64, epsilon: f64) -> ErrorBudget {
        budget_from(self.total, self.retained, self.max(), bound_u, epsilon)
    }

    /// Budget after dropping one user with count `c`, or `None` if that
    /// would leave the grid empty.
    fn budget_without(&self, c: u64, bound_u: f64, epsilon: f64) -> Option<ErrorBudget> {
        let retained = self.retained - c;
        if retained == 0 {
            return None;
        }
        let max = self.max();
        let max = if c == max && self.counts[&c] == 1 {
            *self
                .counts
                .range(..c)
                .next_back()
                .map(|(k, _)| k)
                .expect("retained > 0")
        } else {
            max
        };
        Some(budget_from(self.total, retained, max, bound_u, epsilon))
    }

    fn remove(&mut self, c: u64) {
        self.retained -= c;
        let n = self.counts.get_mut(&c).expect("count present");
        *n -= 1;
        if *n == 0 {
            self.counts.remove(&c);
        }
    }
}

/// Greedy stage-wise suppression. At each stage the users occupying the most
/// grids are visited in token order; each is suppressed in the grid where
/// that costs least, provided the resulting grid error stays within E.
pub fn clip_user(
    occupancy: &OccupancyArray,
    bound_u: f64,
    epsilon: f64,
    options: ClipUserOptions,
) -> Result<ClipUserResult> {
    if occupancy.is_empty() {
        return Err(Error::InvalidParameter("occupancy is empty".into()));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "epsilon must be positive (got {epsilon})"
        )));
    }
    if !(bound_u > 0.0 && bound_u.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!(
            "bound U must be positive and finite (got {bound_u})"
        )));
    }

    let mut grids: BTreeMap<GridId, GridState> = occupancy
        .grids()
        .map(|(g, row)| (g.clone(), GridState::new(row)))
        .collect();
    let initial_errors: BTreeMap<GridId, ErrorBudget> = grids
        .iter()
        .map(|(g, s)| (g.clone(), s.budget(bound_u, epsilon)))
        .collect();
    let error_cap = initial_errors
        .values()
        .map(|b| b.total)
        .fold(f64::NEG_INFINITY, f64::max);
    let protected = if options.protect_min_error_grid {
        // least token among minimizers
        initial_errors
            .iter()
            .fold(None::<(&GridId, f64)>, |best, (g, b)| match best {
                Some((_, e)) if e <= b.total => best,
                _ => Some((g, b.total)),
            })
            .map(|(g, _)| g.clone())
    } else {
        None
    };

    let mut active: BTreeMap<UserId, BTreeSet<GridId>> = occupancy
        .user_grids()
        .into_iter()
        .map(|(u, gs)| (u, gs.into_iter().collect()))
        .collect();
    let initial_k = active.values().map(BTreeSet::len).max().unwrap_or(0);

    let mut plan = ClipPlan::new();
    let mut trace = Vec::new();
    let mut stage = 0;
    let halt = 'stages: loop {
        let top = active.values().map(BTreeSet::len).max().unwrap_or(0);
        if top <= 1 {
            break HaltReason::SingleGridOccupancy;
        }
        stage += 1;
        let frontier: Vec<UserId> = active
            .iter()
            .filter(|(_, gs)| gs.len() == top)
            .map(|(u, _)| u.clone())
            .collect();
        for user in frontier {
            let mut best: Option<(GridId, ErrorBudget)> = None;
            for g in &active[&user] {
                if protected.as_ref() == Some(g) {
                    continue;
                }
                let c = occupancy.count(g, &user);
                let Some(b) = grids[g].budget_without(c, bound_u, epsilon) else {
                    continue;
                };
                // strict comparison keeps the least grid token on ties
                if best.as_ref().is_none_or(|(_, cur)| b.total < cur.total) {
                    best = Some((g.clone(), b));
                }
            }
            let Some((grid, budget)) = best else {
                break 'stages HaltReason::NoCandidate { user };
            };
            if budget.total > error_cap {
                break 'stages HaltReason::ErrorCapExceeded {
                    user,
                    grid,
                    error: budget.total,
                };
            }
            let c = occupancy.count(&grid, &user);
            grids.get_mut(&grid).expect("grid exists").remove(c);
            active.get_mut(&user).expect("user exists").remove(&grid);
            plan.suppress(grid.clone(), user.clone());
            trace.push(SuppressionEvent {
                stage,
                user,
                grid,
                error: budget.total,
            });
        }
    };

    let per_grid_errors = grids
        .iter()
        .map(|(g, s)| (g.clone(), s.budget(bound_u, epsilon)))
        .collect();
    Ok(ClipUserResult {
        occupancy: occupancy.clone(),
        plan,
        k_factor: active.values().map(BTreeSet::len).max().unwrap_or(0),
        initial_k,
        error_cap,
        initial_errors,
        per_grid_errors,
        trace,
        halt,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PostRelease {
    pub outputs: BTreeMap<GridId, MechanismOutput>,
    /// Composed loss K·ε of releasing every grid.
    pub privacy_loss: f64,
}

/// Releases every grid of `dataset` with the clip mechanism under the
/// suppression plan. Each grid draws from its own substream of `rng`.
pub fn post_release(
    dataset: &Dataset,
    result: &ClipUserResult,
    epsilon: f64,
    rng: &RngStream,
) -> Result<PostRelease> {
    if dataset.occupancy() != result.occupancy {
        return Err(Error::OccupancyMismatch);
    }
    let params = MechanismParams::new(epsilon, dataset.bound_u());
    let mut outputs = BTreeMap::new();
    for (g, data) in dataset.grids() {
        let (_, gamma) = result.plan.grid_lists(&result.occupancy, &g)?;
        let mut stream = rng.split(g.as_str());
        outputs.insert(
            g,
            mechanisms::clip_release(&data, &gamma, &params, &mut stream)?,
        );
    }
    let after = result.plan.apply(&result.occupancy);
    Ok(PostRelease {
        outputs,
        privacy_loss: uniform_privacy_loss(&after, epsilon),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoUserResult {
    /// The chosen per-user cap m for every grid.
    pub per_grid_m: BTreeMap<GridId, u64>,
    pub per_grid_errors: BTreeMap<GridId, f64>,
    /// Ē = max_g Ē_g.
    pub new_error: f64,
}

/// Scans every cap m ∈ [Γ_★, Γ★] over the positive retained counts of a
/// grid, clipping each retained count to min(Γ, m); suppressed users stay
/// suppressed and count as dropped. Returns (m, Ē_g) with the largest m
/// among minimizers.
pub fn pseudo_user_grid(
    m_list: &[u64],
    gamma_list: &[u64],
    bound_u: f64,
    epsilon: f64,
) -> Result<(u64, f64)> {
    // validates the plan and rejects ΣΓ = 0
    worst_case_bias::mean_bias(m_list, gamma_list, bound_u)?;
    let total: u64 = m_list.iter().sum();
    let mut positive: Vec<u64> = gamma_list.iter().copied().filter(|&g| g > 0).collect();
    positive.sort_unstable();
    let lo = positive[0];
    let hi = positive[positive.len() - 1];
    let mut below = 0usize;
    let mut prefix = 0u64;
    let mut best = (hi, f64::INFINITY);
    for m in lo..=hi {
        while below < positive.len() && positive[below] < m {
            prefix += positive[below];
            below += 1;
        }
        let retained = prefix + (positive.len() - below) as u64 * m;
        let e = budget_from(total, retained, m, bound_u, epsilon).total;
        if e <= best.1 {
            best = (m, e);
        }
    }
    Ok(best)
}

pub fn pseudo_user_optimize(
    occupancy: &OccupancyArray,
    plan: &ClipPlan,
    bound_u: f64,
    epsilon: f64,
) -> Result<PseudoUserResult> {
    plan.validate(occupancy)?;
    let mut per_grid_m = BTreeMap::new();
    let mut per_grid_errors = BTreeMap::new();
    let mut new_error = f64::NEG_INFINITY;
    for (g, _) in occupancy.grids() {
        let (m, gamma) = plan.grid_lists(occupancy, g)?;
        let (cap, e) = pseudo_user_grid(&m, &gamma, bound_u, epsilon)?;
        per_grid_m.insert(g.clone(), cap);
        per_grid_errors.insert(g.clone(), e);
        new_error = new_error.max(e);
    }
    Ok(PseudoUserResult {
        per_grid_m,
        per_grid_errors,
        new_error,
    })
}
