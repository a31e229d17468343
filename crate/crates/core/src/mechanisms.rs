//! Laplace and exponential-mechanism primitives and the per-grid release
//! mechanisms built on them.
//!
//! Every mechanism spends a total budget of `epsilon` on one grid. Mean and
//! variance releases split it evenly; the interval and quantile based mean
//! estimators spend half on locating an interval and half on the final
//! noisy mean.

use alloc::vec;
use alloc::vec::Vec;

use rand::distr::{Distribution, Open01};
use rand::{Rng, RngCore};

use crate::dataset::GridData;
use crate::error::{Error, Result};
use crate::grouping::{self, ArrayMeans, GroupingStrategy};
use crate::sensitivity;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MechanismParams {
    pub epsilon: f64,
    pub bound_u: f64,
    /// Failure probability of the concentration radius used by Levy.
    pub gamma: f64,
    pub strategy: GroupingStrategy,
}

impl MechanismParams {
    pub fn new(epsilon: f64, bound_u: f64) -> Self {
        Self {
            epsilon,
            bound_u,
            gamma: 0.2,
            strategy: GroupingStrategy::BestFit,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParameter(alloc::format!(
                "epsilon must be positive (got {})",
                self.epsilon
            )));
        }
        if !(self.bound_u > 0.0 && self.bound_u.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!(
                "bound U must be positive and finite (got {})",
                self.bound_u
            )));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidParameter(alloc::format!(
                "gamma must lie in (0, 1) (got {})",
                self.gamma
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalEstimate {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MechanismOutput {
    pub noisy_mean: f64,
    pub noisy_variance: Option<f64>,
    /// Laplace scale of the noise added to the mean.
    pub noise_scale_mean: f64,
    pub noise_scale_var: Option<f64>,
    pub interval: Option<IntervalEstimate>,
    /// Set when the optimized quantile ranks had to be pulled inwards.
    pub rank_clamped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuantileMode {
    Fixed,
    Optimized,
}

/// Inverse CDF of the zero-mean Laplace distribution with scale `b`.
pub fn laplace_from_uniform(u: f64, b: f64) -> f64 {
    if u < 0.5 {
        b * libm::log(2.0 * u)
    } else {
        -b * libm::log(2.0 - 2.0 * u)
    }
}

pub fn sample_laplace<R: RngCore + ?Sized>(rng: &mut R, scale_b: f64) -> Result<f64> {
    if !(scale_b > 0.0) {
        return Err(Error::NonPositiveScale(scale_b));
    }
    let u: f64 = Open01.sample(rng);
    Ok(laplace_from_uniform(u, scale_b))
}

/// Laplace noise where a zero scale (infinite budget or zero sensitivity)
/// means no noise. No randomness is consumed in that case.
fn noise<R: RngCore + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    if scale == 0.0 {
        0.0
    } else {
        sample_laplace(rng, scale).expect("positive scale")
    }
}

/// Laplace scale for a coordinate with sensitivity `delta` and budget `eps`.
fn scale(delta: f64, eps: f64) -> f64 {
    if eps.is_infinite() {
        0.0
    } else {
        delta / eps
    }
}

/// Π_{[a,b]}(x).
pub fn project(x: f64, a: f64, b: f64) -> f64 {
    b.min(a.max(x))
}

/// Draws index `i` with probability proportional to `exp(log_weights[i])`.
/// Entries of −∞ are never drawn.
pub fn sample_log_weights<R: RngCore + ?Sized>(rng: &mut R, log_weights: &[f64]) -> Option<usize> {
    let max = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return None;
    }
    let weights: Vec<f64> = log_weights.iter().map(|&w| libm::exp(w - max)).collect();
    let total: f64 = weights.iter().sum();
    let mut target = rng.random::<f64>() * total;
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        last = Some(i);
        if target < w {
            return Some(i);
        }
        target -= w;
    }
    last
}

/// `−(eps/2)·d`, treating a zero distance as zero penalty even for an
/// infinite budget.
fn penalty(eps: f64, d: f64) -> f64 {
    if d == 0.0 {
        0.0
    } else {
        -(eps / 2.0) * d
    }
}

pub fn baseline_release<R: RngCore + ?Sized>(
    grid: &GridData,
    params: &MechanismParams,
    rng: &mut R,
) -> Result<MechanismOutput> {
    params.validate()?;
    let stats = grid.stats()?;
    let sens = sensitivity::variance_sensitivity(&grid.counts(), params.bound_u)?;
    let half = params.epsilon / 2.0;
    let scale_mean = scale(sens.delta_mu, half);
    let scale_var = scale(sens.delta_var, half);
    Ok(MechanismOutput {
        noisy_mean: stats.mean + noise(rng, scale_mean),
        noisy_variance: Some(stats.variance + noise(rng, scale_var)),
        noise_scale_mean: scale_mean,
        noise_scale_var: Some(scale_var),
        interval: None,
        rank_clamped: false,
    })
}

/// Releases the statistics of the retained samples, the first `gamma[i]`
/// samples of user `i` (users in token order).
pub fn clip_release<R: RngCore + ?Sized>(
    grid: &GridData,
    gamma: &[u64],
    params: &MechanismParams,
    rng: &mut R,
) -> Result<MechanismOutput> {
    params.validate()?;
    let stats = grid.clipped_stats(gamma)?;
    let sens = sensitivity::clipped_variance_sensitivity(gamma, params.bound_u)?;
    let half = params.epsilon / 2.0;
    let scale_mean = scale(sens.delta_mu, half);
    let scale_var = scale(sens.delta_var, half);
    Ok(MechanismOutput {
        noisy_mean: stats.mean + noise(rng, scale_mean),
        noisy_variance: Some(stats.variance + noise(rng, scale_var)),
        noise_scale_mean: scale_mean,
        noise_scale_var: Some(scale_var),
        interval: None,
        rank_clamped: false,
    })
}

fn mean_only(noisy_mean: f64, noise_scale_mean: f64) -> MechanismOutput {
    MechanismOutput {
        noisy_mean,
        noisy_variance: None,
        noise_scale_mean,
        noise_scale_var: None,
        interval: None,
        rank_clamped: false,
    }
}

fn average(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Mean of the array means, with noise calibrated to 2U/K (WrapAround) or
/// U/K̄ (BestFit).
pub fn array_average_release<R: RngCore + ?Sized>(
    grid: &GridData,
    m_ub: u64,
    params: &MechanismParams,
    rng: &mut R,
) -> Result<MechanismOutput> {
    params.validate()?;
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let group = grouping::group(grid, m_ub, params.strategy)?;
    if group.is_empty() {
        return Err(Error::InvalidParameter(alloc::format!(
            "capacity {m_ub} leaves no full array"
        )));
    }
    let means = grouping::array_means(&group);
    let delta =
        sensitivity::array_avg_sensitivity(params.strategy, group.len() as u64, params.bound_u)?;
    let s = scale(delta, params.epsilon);
    Ok(mean_only(average(&means.means) + noise(rng, s), s))
}

/// U·√(ln(2K̄/γ) / (2m_UB)).
pub fn concentration_tau(bound_u: f64, kbar: u64, gamma: f64, m_ub: u64) -> f64 {
    bound_u * libm::sqrt(libm::log(2.0 * kbar as f64 / gamma) / (2.0 * m_ub as f64))
}

/// Bins of width τ covering (0, U]; the last one may be shorter.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalBins {
    pub midpoints: Vec<f64>,
    /// c(x) at every midpoint.
    pub costs: Vec<u64>,
}

const MAX_BINS: f64 = 1e7;

/// Snaps every mean to its nearest bin midpoint and evaluates
/// c(x) = max(#{μ_i < x}, #{μ_i > x}) at each midpoint.
pub fn interval_bins(means: &[f64], tau: f64, bound_u: f64) -> Result<IntervalBins> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "tau must be positive (got {tau})"
        )));
    }
    let n = libm::ceil(bound_u / tau);
    if n > MAX_BINS {
        return Err(Error::InvalidParameter(alloc::format!(
            "tau {tau} gives more than {MAX_BINS} bins"
        )));
    }
    let n = (n as usize).max(1);
    let midpoints: Vec<f64> = (0..n)
        .map(|i| {
            let lo = i as f64 * tau;
            let hi = ((i + 1) as f64 * tau).min(bound_u);
            (lo + hi) / 2.0
        })
        .collect();
    let mut per_bin = vec![0u64; n];
    for &x in means {
        per_bin[nearest(&midpoints, x)] += 1;
    }
    let total: u64 = per_bin.iter().sum();
    let mut below = 0u64;
    let costs = per_bin
        .iter()
        .map(|&here| {
            let above = total - below - here;
            let c = below.max(above);
            below += here;
            c
        })
        .collect();
    Ok(IntervalBins { midpoints, costs })
}

/// Index of the midpoint closest to `x`, the lower one on ties.
fn nearest(midpoints: &[f64], x: f64) -> usize {
    let i = midpoints.partition_point(|&m| m < x);
    if i == 0 {
        0
    } else if i == midpoints.len() || x - midpoints[i - 1] <= midpoints[i] - x {
        i - 1
    } else {
        i
    }
}

/// Selection probabilities ∝ exp(−eps_half·c(x)/2) over the bin midpoints.
pub fn interval_probabilities(bins: &IntervalBins, eps_half: f64) -> Vec<f64> {
    let logw = interval_log_weights(bins, eps_half);
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logw.iter().map(|&l| libm::exp(l - max)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

fn interval_log_weights(bins: &IntervalBins, eps_half: f64) -> Vec<f64> {
    let cmin = bins.costs.iter().copied().min().unwrap_or(0);
    bins.costs
        .iter()
        .map(|&c| penalty(eps_half, (c - cmin) as f64))
        .collect()
}

/// Privately locates an interval of width at most 3τ around the bulk of the
/// array means.
pub fn private_interval<R: RngCore + ?Sized>(
    means: &ArrayMeans,
    eps_half: f64,
    tau: f64,
    bound_u: f64,
    rng: &mut R,
) -> Result<IntervalEstimate> {
    if !(eps_half > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "interval budget must be positive (got {eps_half})"
        )));
    }
    let bins = interval_bins(&means.means, tau, bound_u)?;
    let i = sample_log_weights(rng, &interval_log_weights(&bins, eps_half))
        .expect("some bin has finite weight");
    let centre = bins.midpoints[i];
    Ok(IntervalEstimate {
        lo: (centre - 1.5 * tau).max(0.0),
        hi: (centre + 1.5 * tau).min(bound_u),
    })
}

fn best_fit_means(grid: &GridData) -> Result<(u64, ArrayMeans)> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let counts = grid.counts();
    let m_ub = grouping::optimized_mub(&counts);
    let group = grouping::best_fit(grid, m_ub)?;
    Ok((m_ub, grouping::array_means(&group)))
}

fn projected_release<R: RngCore + ?Sized>(
    means: &ArrayMeans,
    lo: f64,
    hi: f64,
    eps: f64,
    rng: &mut R,
) -> (f64, f64) {
    let k = means.means.len() as f64;
    let projected: Vec<f64> = means.means.iter().map(|&x| project(x, lo, hi)).collect();
    let s = scale((hi - lo) / k, eps);
    (average(&projected) + noise(rng, s), s)
}

/// Array averaging with BestFit arrays of optimized capacity, after
/// projecting the array means onto a privately chosen interval.
pub fn levy_release<R: RngCore + ?Sized>(
    grid: &GridData,
    params: &MechanismParams,
    rng: &mut R,
) -> Result<MechanismOutput> {
    params.validate()?;
    let (m_ub, means) = best_fit_means(grid)?;
    let kbar = means.means.len() as u64;
    let tau = concentration_tau(params.bound_u, kbar, params.gamma, m_ub);
    let half = params.epsilon / 2.0;
    let iv = private_interval(&means, half, tau, params.bound_u, rng)?;
    let (noisy_mean, s) = projected_release(&means, iv.lo, iv.hi, half, rng);
    Ok(MechanismOutput {
        interval: Some(iv),
        ..mean_only(noisy_mean, s)
    })
}

/// Log-weights of the gaps between consecutive order statistics (with
/// sentinels 0 and U) for the level-`q` quantile.
pub fn quantile_log_weights(sorted: &[f64], q: f64, eps_q: f64, bound_u: f64) -> Vec<f64> {
    let n = sorted.len();
    let target = q * n as f64;
    (0..=n)
        .map(|i| {
            let lo = if i == 0 { 0.0 } else { sorted[i - 1] };
            let hi = if i == n { bound_u } else { sorted[i] };
            let width = hi - lo;
            if width <= 0.0 {
                f64::NEG_INFINITY
            } else {
                libm::log(width) + penalty(eps_q, libm::fabs(i as f64 - target))
            }
        })
        .collect()
}

/// Exponential-mechanism quantile: picks a gap between order statistics with
/// probability ∝ width·exp(−(ε/2)|i − qn|), then a uniform point in it.
pub fn private_quantile<R: RngCore + ?Sized>(
    values: &[f64],
    q: f64,
    eps_q: f64,
    bound_u: f64,
    rng: &mut R,
) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyValues);
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParameter(alloc::format!(
            "quantile level {q} outside [0, 1]"
        )));
    }
    if !(eps_q > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "quantile budget must be positive (got {eps_q})"
        )));
    }
    let mut sorted: Vec<f64> = values.iter().map(|&v| v.clamp(0.0, bound_u)).collect();
    sorted.sort_by(f64::total_cmp);
    let logw = quantile_log_weights(&sorted, q, eps_q, bound_u);
    let i = sample_log_weights(rng, &logw).expect("the gaps cover [0, U]");
    let n = sorted.len();
    let lo = if i == 0 { 0.0 } else { sorted[i - 1] };
    let hi = if i == n { bound_u } else { sorted[i] };
    Ok(lo + rng.random::<f64>() * (hi - lo))
}

/// Rank t used by the optimized quantile mode and whether it was clamped.
pub fn optimized_rank(epsilon: f64, kbar: u64) -> (u64, bool) {
    let t = libm::ceil(2.0 / epsilon) as u64;
    if 2 * t >= kbar {
        (kbar.saturating_sub(1) / 2, true)
    } else {
        (t, false)
    }
}

/// Mean of the array means projected onto an interval between two private
/// quantiles, each estimated with a quarter of the budget.
pub fn quantile_release<R: RngCore + ?Sized>(
    grid: &GridData,
    params: &MechanismParams,
    mode: QuantileMode,
    rng: &mut R,
) -> Result<MechanismOutput> {
    params.validate()?;
    let (_, means) = best_fit_means(grid)?;
    let kbar = means.means.len() as u64;
    let (levels, rank_clamped) = match mode {
        QuantileMode::Fixed => ((0.1, 0.9), false),
        QuantileMode::Optimized => {
            let (t, clamped) = optimized_rank(params.epsilon, kbar);
            let l = t as f64 / kbar as f64;
            ((l, 1.0 - l), clamped)
        }
    };
    let quarter = params.epsilon / 4.0;
    let a = private_quantile(&means.means, levels.0, quarter, params.bound_u, rng)?;
    let b = private_quantile(&means.means, levels.1, quarter, params.bound_u, rng)?;
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let (noisy_mean, s) = projected_release(&means, lo, hi, params.epsilon / 2.0, rng);
    Ok(MechanismOutput {
        interval: Some(IntervalEstimate { lo, hi }),
        rank_clamped,
        ..mean_only(noisy_mean, s)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::UserId;
    use crate::rng::RngStream;
    use alloc::format;

    fn grid(users: &[&[f64]], u: f64) -> GridData {
        GridData::new(
            u,
            users
                .iter()
                .enumerate()
                .map(|(i, v)| (UserId::from(format!("u{}", i + 1)), v.to_vec()))
                .collect(),
        )
    }

    #[test]
    fn laplace_inverse_cdf() {
        assert_eq!(laplace_from_uniform(0.5, 3.0), 0.0);
        assert!((laplace_from_uniform(0.25, 1.0) + libm::log(2.0)).abs() < 1e-15);
        assert!((laplace_from_uniform(0.75, 1.0) - libm::log(2.0)).abs() < 1e-15);
        let mut a = RngStream::new(1);
        let mut b = RngStream::new(1);
        assert_eq!(sample_laplace(&mut a, 1.0), sample_laplace(&mut b, 1.0));
        assert_eq!(
            sample_laplace(&mut a, 0.0),
            Err(Error::NonPositiveScale(0.0))
        );
    }

    #[test]
    fn baseline_scales_and_zero_noise_limit() {
        let g = grid(&[&[0.2, 0.4], &[0.9]], 1.0);
        let mut rng = RngStream::new(3);
        let out =
            baseline_release(&g, &MechanismParams::new(f64::INFINITY, 1.0), &mut rng).unwrap();
        let s = g.stats().unwrap();
        assert_eq!(out.noisy_mean, s.mean);
        assert_eq!(out.noisy_variance, Some(s.variance));

        let out = baseline_release(&g, &MechanismParams::new(1.0, 1.0), &mut rng).unwrap();
        assert!((out.noise_scale_mean - 2.0 * 2.0 / 3.0).abs() < 1e-12);
        let single = grid(&[&[0.5, 0.1]], 1.0);
        let out = baseline_release(&single, &MechanismParams::new(1.0, 1.0), &mut rng).unwrap();
        assert_eq!(out.noise_scale_mean, 2.0);
    }

    #[test]
    fn clip_uses_leading_samples() {
        let g = grid(&[&[1.0, 2.0, 9.0], &[3.0, 9.0]], 10.0);
        let mut rng = RngStream::new(3);
        let p = MechanismParams::new(f64::INFINITY, 10.0);
        let out = clip_release(&g, &[2, 1], &p, &mut rng).unwrap();
        assert_eq!(out.noisy_mean, 2.0);
        let p = MechanismParams::new(1.0, 10.0);
        let out = clip_release(&g, &[2, 1], &p, &mut rng).unwrap();
        let dv = sensitivity::clipped_variance_sensitivity(&[2, 1], 10.0)
            .unwrap()
            .delta_var;
        assert_eq!(out.noise_scale_var, Some(2.0 * dv));
        assert_eq!(
            clip_release(&g, &[0, 0], &p, &mut rng),
            Err(Error::ZeroRetained)
        );
    }

    #[test]
    fn array_average_example() {
        let g = grid(&[&[1.0; 4], &[2.0; 3], &[3.0; 2], &[4.0; 2]], 10.0);
        let mut rng = RngStream::new(3);
        let p = MechanismParams::new(f64::INFINITY, 10.0);
        let out = array_average_release(&g, 4, &p, &mut rng).unwrap();
        assert!((out.noisy_mean - (1.0 + 2.0 + 3.5) / 3.0).abs() < 1e-12);
        let p = MechanismParams::new(1.0, 10.0);
        let out = array_average_release(&g, 4, &p, &mut rng).unwrap();
        assert!((out.noise_scale_mean - 10.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn tau_example() {
        let t = concentration_tau(1.0, 2, 0.4, 2);
        assert!((t - libm::sqrt(libm::log(10.0) / 4.0)).abs() < 1e-12);
        assert!((concentration_tau(3.0, 2, 0.4, 2) - 3.0 * t).abs() < 1e-12);
    }

    #[test]
    fn interval_costs_example() {
        let b = interval_bins(&[1.2, 1.4, 3.3], 1.0, 4.0).unwrap();
        assert_eq!(b.midpoints, vec![0.5, 1.5, 2.5, 3.5]);
        assert_eq!(b.costs, vec![3, 1, 2, 2]);
        let b = interval_bins(&[0.1], 1.0, 2.5).unwrap();
        assert_eq!(b.midpoints, vec![0.5, 1.5, 2.25]);
        assert!(interval_bins(&[0.1], 0.0, 2.5).is_err());
    }

    #[test]
    fn interval_clamps_and_is_narrow() {
        let means = ArrayMeans {
            means: vec![0.5],
            weights: vec![1],
        };
        let mut rng = RngStream::new(9);
        let iv = private_interval(&means, 1.0, 4.0, 4.0, &mut rng).unwrap();
        assert_eq!((iv.lo, iv.hi), (0.0, 4.0));
        for s in 0..50 {
            let mut rng = RngStream::new(s);
            let iv = private_interval(&means, 1.0, 0.3, 4.0, &mut rng).unwrap();
            assert!(0.0 <= iv.lo && iv.lo <= iv.hi && iv.hi <= 4.0);
            assert!(iv.hi - iv.lo <= 0.9 + 1e-12);
        }
    }

    #[test]
    fn quantile_weights() {
        // one value u: gaps [0,u] and [u,U] at distances |0 − n/2| and |1 − n/2|
        let w = quantile_log_weights(&[1.0], 0.5, 2.0, 4.0);
        assert!((w[0] - (libm::log(1.0) - 0.5)).abs() < 1e-12);
        assert!((w[1] - (libm::log(3.0) - 0.5)).abs() < 1e-12);
        let w = quantile_log_weights(&[2.0, 2.0, 2.0], 0.5, 1.0, 4.0);
        assert_eq!(w[1], f64::NEG_INFINITY);
        assert_eq!(w[2], f64::NEG_INFINITY);
        let mut rng = RngStream::new(1);
        assert_eq!(
            private_quantile(&[], 0.5, 1.0, 1.0, &mut rng),
            Err(Error::EmptyValues)
        );
        // infinite budget stays inside the exact quantile gap
        let x = private_quantile(&[1.0, 2.0, 3.0, 4.0], 0.5, f64::INFINITY, 5.0, &mut rng).unwrap();
        assert!((2.0..=3.0).contains(&x));
    }

    #[test]
    fn optimized_ranks() {
        assert_eq!(optimized_rank(1.0, 20), (2, false));
        assert_eq!(optimized_rank(0.1, 20), (9, true));
        assert_eq!(optimized_rank(1.0, 4), (1, true));
    }

    #[test]
    fn projection() {
        assert_eq!(project(5.0, 1.0, 3.0), 3.0);
        assert_eq!(project(0.0, 1.0, 3.0), 1.0);
        assert_eq!(project(2.0, 1.0, 3.0), 2.0);
    }

    #[test]
    fn mechanisms_are_reproducible() {
        let g = grid(&[&[1.0, 2.0, 3.0], &[4.0, 5.0], &[6.0], &[7.0, 8.0]], 10.0);
        let p = MechanismParams::new(0.5, 10.0);
        for mode in [QuantileMode::Fixed, QuantileMode::Optimized] {
            let a = quantile_release(&g, &p, mode, &mut RngStream::new(4)).unwrap();
            let b = quantile_release(&g, &p, mode, &mut RngStream::new(4)).unwrap();
            assert_eq!(a, b);
            let iv = a.interval.unwrap();
            assert!(iv.lo <= iv.hi);
        }
        let a = levy_release(&g, &p, &mut RngStream::new(4)).unwrap();
        let b = levy_release(&g, &p, &mut RngStream::new(4)).unwrap();
        assert_eq!(a, b);
    }
}
