//! Monte Carlo estimators over synthetic occupancies, MAE evaluation of the
//! mean mechanisms and the scaling-law checks.
//!
//! Trials run in parallel, each on its own substream of the root seed.
//! Results are collected in trial order and reduced sequentially, so the
//! output does not depend on the number of threads.

use rayon::prelude::*;
use serde::Serialize;

use dp_composer_core::composition::{clip_user, pseudo_user_optimize, ClipUserOptions};
use dp_composer_core::dataset::GridData;
use dp_composer_core::grouping::{self, GroupingStrategy};
use dp_composer_core::mechanisms::{self, MechanismParams, QuantileMode};
use dp_composer_core::sensitivity;
use dp_composer_core::synth::{self, ScalingMode, SynthParams};
use dp_composer_core::RngStream;

use crate::error::{Error, Result};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "DP_COMPOSER_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub epsilons: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub protect_min_error_grid: bool,
}

impl ExperimentConfig {
    pub fn new(epsilons: Vec<f64>, trials: usize, seed: u64) -> Self {
        Self {
            epsilons,
            trials,
            seed,
            protect_min_error_grid: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilons.is_empty() {
            return Err(Error::Usage("at least one epsilon is required".into()));
        }
        if self.epsilons.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::Usage("epsilons must be positive and finite".into()));
        }
        if self.epsilons.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Usage("epsilons must be sorted".into()));
        }
        if self.trials == 0 {
            return Err(Error::Usage("trials must be at least 1".into()));
        }
        Ok(())
    }
}

/// 0.1, 0.2, …, 2.0.
pub fn default_epsilons() -> Vec<f64> {
    (1..=20).map(|i| i as f64 / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub epsilon: f64,
    pub value: f64,
    pub label: String,
}

fn point(epsilon: f64, value: f64, label: &str) -> CurvePoint {
    CurvePoint {
        epsilon,
        value,
        label: label.to_string(),
    }
}

/// Runs `f` on a pool sized by [`THREADS_ENV`] when set.
pub fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| {
            Error::Usage(format!(
                "{THREADS_ENV} must be a positive integer (got `{v}`)"
            ))
        })?,
        Err(_) => 0,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Usage(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn trial_occupancies<'a>(
    params: &'a SynthParams,
    config: &ExperimentConfig,
) -> impl IndexedParallelIterator<Item = Result<dp_composer_core::OccupancyArray>> + 'a {
    let root = RngStream::new(config.seed);
    (0..config.trials).into_par_iter().map(move |i| {
        let mut rng = root.split_indexed("occupancy", i as u64);
        Ok(synth::generate_occupancy(params, &mut rng)?)
    })
}

/// Per ε: the average of K·ε over fresh occupancies (`clip_user`) and of
/// G_1·ε (`no_suppression`).
pub fn monte_carlo_privacy(
    params: &SynthParams,
    config: &ExperimentConfig,
) -> Result<Vec<CurvePoint>> {
    config.validate()?;
    let opts = ClipUserOptions {
        protect_min_error_grid: config.protect_min_error_grid,
    };
    let per_trial: Vec<Result<(usize, Vec<usize>)>> = with_pool(|| {
        trial_occupancies(params, config)
            .map(|occ| {
                let occ = occ?;
                let ks = config
                    .epsilons
                    .iter()
                    .map(|&eps| Ok(clip_user(&occ, params.bound_u, eps, opts)?.k_factor))
                    .collect::<Result<Vec<_>>>()?;
                Ok((occ.max_grids_per_user(), ks))
            })
            .collect()
    })?;
    let per_trial = per_trial.into_iter().collect::<Result<Vec<_>>>()?;
    let n = per_trial.len() as f64;
    let mut out = Vec::with_capacity(2 * config.epsilons.len());
    for (j, &eps) in config.epsilons.iter().enumerate() {
        let k: f64 = per_trial
            .iter()
            .map(|(_, ks)| ks[j] as f64 * eps)
            .sum::<f64>()
            / n;
        let g1: f64 = per_trial.iter().map(|(g, _)| *g as f64 * eps).sum::<f64>() / n;
        out.push(point(eps, k, "clip_user"));
        out.push(point(eps, g1, "no_suppression"));
    }
    Ok(out)
}

/// Per ε: the average error Ē after Clip-User and pseudo-user clipping
/// (`pseudo_user`) and the average initial cap E (`original`).
pub fn monte_carlo_error(
    params: &SynthParams,
    config: &ExperimentConfig,
) -> Result<Vec<CurvePoint>> {
    config.validate()?;
    let opts = ClipUserOptions {
        protect_min_error_grid: config.protect_min_error_grid,
    };
    let per_trial: Vec<Result<Vec<(f64, f64)>>> = with_pool(|| {
        trial_occupancies(params, config)
            .map(|occ| {
                let occ = occ?;
                config
                    .epsilons
                    .iter()
                    .map(|&eps| {
                        let r = clip_user(&occ, params.bound_u, eps, opts)?;
                        let p = pseudo_user_optimize(&occ, &r.plan, params.bound_u, eps)?;
                        Ok((p.new_error, r.error_cap))
                    })
                    .collect()
            })
            .collect()
    })?;
    let per_trial = per_trial.into_iter().collect::<Result<Vec<_>>>()?;
    let n = per_trial.len() as f64;
    let mut out = Vec::with_capacity(2 * config.epsilons.len());
    for (j, &eps) in config.epsilons.iter().enumerate() {
        let e_bar: f64 = per_trial.iter().map(|t| t[j].0).sum::<f64>() / n;
        let e: f64 = per_trial.iter().map(|t| t[j].1).sum::<f64>() / n;
        out.push(point(eps, e_bar, "pseudo_user"));
        out.push(point(eps, e, "original"));
    }
    Ok(out)
}

/// How the array capacity of the array-averaging estimator is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MubRule {
    Median,
    Optimized,
    Fixed(u64),
}

impl MubRule {
    pub fn resolve(self, counts: &[u64]) -> u64 {
        match self {
            MubRule::Median => grouping::median_mub(counts),
            MubRule::Optimized => grouping::optimized_mub(counts),
            MubRule::Fixed(m) => m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeanMechanism {
    Baseline,
    ArrayAverage {
        strategy: GroupingStrategy,
        mub: MubRule,
    },
    Levy {
        gamma: f64,
    },
    Quantile(QuantileMode),
}

impl MeanMechanism {
    pub fn label(&self) -> &'static str {
        match self {
            MeanMechanism::Baseline => "baseline",
            MeanMechanism::ArrayAverage {
                strategy: GroupingStrategy::WrapAround,
                ..
            } => "array_avg_wrap",
            MeanMechanism::ArrayAverage {
                strategy: GroupingStrategy::BestFit,
                ..
            } => "array_avg_best",
            MeanMechanism::Levy { .. } => "levy",
            MeanMechanism::Quantile(QuantileMode::Fixed) => "quantile_fixed",
            MeanMechanism::Quantile(QuantileMode::Optimized) => "quantile_optimized",
        }
    }

    /// One private mean estimate of `grid` spending `eps` in total.
    pub fn release(&self, grid: &GridData, eps: f64, rng: &mut RngStream) -> Result<f64> {
        let mut params = MechanismParams::new(eps, grid.bound_u);
        let out = match *self {
            MeanMechanism::Baseline => {
                // the whole budget on the mean
                let delta = sensitivity::mean_sensitivity(&grid.counts(), grid.bound_u)?;
                let s = grid.stats()?;
                return Ok(s.mean + mechanisms::sample_laplace(rng, delta / eps)?);
            }
            MeanMechanism::ArrayAverage { strategy, mub } => {
                params.strategy = strategy;
                mechanisms::array_average_release(grid, mub.resolve(&grid.counts()), &params, rng)?
            }
            MeanMechanism::Levy { gamma } => {
                params.gamma = gamma;
                mechanisms::levy_release(grid, &params, rng)?
            }
            MeanMechanism::Quantile(mode) => {
                mechanisms::quantile_release(grid, &params, mode, rng)?
            }
        };
        Ok(out.noisy_mean)
    }
}

/// Mean absolute error of a mean mechanism per ε. The baseline is reported
/// analytically as Δ_μ/ε; the others average |M(D) − μ(D)| over
/// `config.trials` runs.
pub fn mae_eval(
    mechanism: MeanMechanism,
    grid: &GridData,
    config: &ExperimentConfig,
) -> Result<Vec<CurvePoint>> {
    config.validate()?;
    let label = mechanism.label();
    let truth = grid.stats()?.mean;
    if let MeanMechanism::Baseline = mechanism {
        let delta = sensitivity::mean_sensitivity(&grid.counts(), grid.bound_u)?;
        return Ok(config
            .epsilons
            .iter()
            .map(|&e| point(e, delta / e, label))
            .collect());
    }
    let root = RngStream::new(config.seed);
    let mut out = Vec::with_capacity(config.epsilons.len());
    for (j, &eps) in config.epsilons.iter().enumerate() {
        let stream = root.split_indexed(label, j as u64);
        let errors: Vec<Result<f64>> = with_pool(|| {
            (0..config.trials)
                .into_par_iter()
                .map(|i| {
                    let mut rng = stream.split_indexed("trial", i as u64);
                    Ok((mechanism.release(grid, eps, &mut rng)? - truth).abs())
                })
                .collect()
        })?;
        let mut total = 0.0;
        for e in errors {
            total += e?;
        }
        out.push(point(eps, total / config.trials as f64, label));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LawCheck {
    pub law: String,
    pub lambda: u64,
    pub expected: f64,
    pub actual: f64,
    /// False when the law's premise does not hold for this input.
    pub applicable: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub checks: Vec<LawCheck>,
}

impl ScalingReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &LawCheck> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

fn exact(law: &str, lambda: u64, expected: u64, actual: u64) -> LawCheck {
    LawCheck {
        law: law.to_string(),
        lambda,
        expected: expected as f64,
        actual: actual as f64,
        applicable: true,
        pass: expected == actual,
    }
}

fn approx(law: &str, lambda: u64, expected: f64, actual: f64) -> LawCheck {
    LawCheck {
        law: law.to_string(),
        lambda,
        expected,
        actual,
        applicable: true,
        pass: (expected - actual).abs() <= 1e-12 * expected.abs().max(1.0),
    }
}

/// Δ_Levy = min(3τ, U)/K̄ with BestFit arrays of optimized capacity.
/// Returns the value and whether the τ branch (3τ < U) is active.
pub fn levy_sensitivity(m_list: &[u64], bound_u: f64, gamma: f64) -> Result<(f64, bool)> {
    let m_ub = grouping::optimized_mub(m_list);
    let kbar = grouping::best_fit_count(m_list, m_ub)?;
    let tau = mechanisms::concentration_tau(bound_u, kbar, gamma, m_ub);
    let width = (3.0 * tau).min(bound_u);
    Ok((width / kbar as f64, 3.0 * tau < bound_u))
}

/// Checks the sample- and user-scaling laws of the array capacity, the
/// array counts and the sensitivities, as stated, for every λ.
pub fn check_scaling_laws(
    m_list: &[u64],
    lambdas: &[u64],
    bound_u: f64,
    gamma: f64,
) -> Result<ScalingReport> {
    if m_list.is_empty() || m_list.contains(&0) {
        return Err(Error::Usage(
            "counts must be a non-empty list of positive integers".into(),
        ));
    }
    if lambdas.contains(&0) {
        return Err(Error::Usage("scaling factors must be at least 1".into()));
    }
    let opt = grouping::optimized_mub(m_list);
    let med = grouping::median_mub(m_list);
    let k = grouping::array_count_k(m_list, opt);
    let kbar = grouping::best_fit_count(m_list, opt)?;
    let dmu = sensitivity::mean_sensitivity(m_list, bound_u)?;
    let (dlevy, tau_branch) = levy_sensitivity(m_list, bound_u, gamma)?;
    let mut checks = Vec::new();
    for &lambda in lambdas {
        let s = synth::scale_counts(m_list, ScalingMode::Sample, lambda);
        let s_opt = grouping::optimized_mub(&s);
        checks.push(exact("sample/m_ub_optimized", lambda, lambda * opt, s_opt));
        checks.push(exact(
            "sample/m_ub_median",
            lambda,
            lambda * med,
            grouping::median_mub(&s),
        ));
        let s_k = grouping::array_count_k(&s, s_opt);
        let s_kbar = grouping::best_fit_count(&s, s_opt)?;
        checks.push(exact("sample/k", lambda, k, s_k));
        checks.push(exact("sample/k_bar", lambda, kbar, s_kbar));
        checks.push(approx(
            "sample/delta_mu",
            lambda,
            dmu,
            sensitivity::mean_sensitivity(&s, bound_u)?,
        ));
        if k > 0 && s_k > 0 {
            checks.push(approx(
                "sample/delta_wrap",
                lambda,
                sensitivity::array_avg_sensitivity(GroupingStrategy::WrapAround, k, bound_u)?,
                sensitivity::array_avg_sensitivity(GroupingStrategy::WrapAround, s_k, bound_u)?,
            ));
        }
        checks.push(approx(
            "sample/delta_best",
            lambda,
            sensitivity::array_avg_sensitivity(GroupingStrategy::BestFit, kbar, bound_u)?,
            sensitivity::array_avg_sensitivity(GroupingStrategy::BestFit, s_kbar, bound_u)?,
        ));
        let (s_levy, s_branch) = levy_sensitivity(&s, bound_u, gamma)?;
        let mut levy = approx(
            "sample/delta_levy",
            lambda,
            dlevy / (lambda as f64).sqrt(),
            s_levy,
        );
        if !(tau_branch && s_branch) {
            levy.applicable = false;
            levy.pass = true;
        }
        checks.push(levy);

        let u = synth::scale_counts(m_list, ScalingMode::User, lambda);
        let u_opt = grouping::optimized_mub(&u);
        checks.push(exact("user/m_ub_optimized", lambda, opt, u_opt));
        checks.push(exact(
            "user/k",
            lambda,
            lambda * k,
            grouping::array_count_k(&u, u_opt),
        ));
        checks.push(exact(
            "user/k_bar",
            lambda,
            lambda * kbar,
            grouping::best_fit_count(&u, u_opt)?,
        ));
    }
    Ok(ScalingReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use dp_composer_core::dataset::UserId;

    fn small() -> SynthParams {
        SynthParams {
            num_grids: 4,
            num_users: 15,
            geo_q: 0.3,
            heavy_gamma: 1.0,
            bound_u: 1.0,
        }
    }

    #[test]
    fn privacy_curve_below_reference() {
        let cfg = ExperimentConfig::new(vec![0.5, 1.0], 3, 11);
        let pts = monte_carlo_privacy(&small(), &cfg).unwrap();
        assert_eq!(pts.len(), 4);
        for pair in pts.chunks(2) {
            assert!(pair[0].value <= pair[1].value + 1e-12);
            assert_eq!(pair[1].value, 4.0 * pair[1].epsilon);
        }
        assert_eq!(monte_carlo_privacy(&small(), &cfg).unwrap(), pts);
    }

    #[test]
    fn error_curve_below_original() {
        let cfg = ExperimentConfig::new(vec![0.5, 1.0], 3, 11);
        let pts = monte_carlo_error(&small(), &cfg).unwrap();
        for pair in pts.chunks(2) {
            assert!(pair[0].value <= pair[1].value + 1e-12);
        }
    }

    #[test]
    fn single_grid_users_cost_epsilon() {
        let p = SynthParams {
            num_grids: 1,
            num_users: 1,
            ..small()
        };
        let pts = monte_carlo_privacy(&p, &ExperimentConfig::new(vec![0.3], 2, 1)).unwrap();
        assert_eq!(pts[0].value, 0.3);
    }

    #[test]
    fn baseline_mae_is_analytic() {
        let g = GridData::new(
            1.0,
            vec![
                (UserId::from("a"), vec![0.5; 3]),
                (UserId::from("b"), vec![0.1]),
            ],
        );
        let pts = mae_eval(
            MeanMechanism::Baseline,
            &g,
            &ExperimentConfig::new(vec![0.5, 2.0], 1, 0),
        )
        .unwrap();
        assert_eq!(pts[0].value, 0.75 / 0.5);
        assert_eq!(pts[1].value, 0.75 / 2.0);
    }

    #[test]
    fn laplace_only_mae_matches_scale() {
        // all values equal: array averaging has no bias, only noise of scale U/K̄
        let users = (0..6)
            .map(|i| (UserId::from(format!("u{i}")), vec![0.4; 3]))
            .collect();
        let g = GridData::new(1.0, users);
        let mech = MeanMechanism::ArrayAverage {
            strategy: GroupingStrategy::BestFit,
            mub: MubRule::Fixed(3),
        };
        let pts = mae_eval(mech, &g, &ExperimentConfig::new(vec![1.0], 10_000, 5)).unwrap();
        let b = 1.0 / 6.0;
        assert!((pts[0].value / b - 1.0).abs() < 0.03, "{}", pts[0].value);
    }

    #[test]
    fn scaling_examples() {
        let r = check_scaling_laws(&[1, 4, 9], &[1], 1.0, 0.2).unwrap();
        assert!(r.all_pass());
        let r = check_scaling_laws(&[1, 4, 9], &[10], 1.0, 0.2).unwrap();
        let get = |law: &str| r.checks.iter().find(|c| c.law == law).unwrap().clone();
        assert_eq!(get("sample/m_ub_optimized").actual, 90.0);
        assert!(get("sample/k").pass);
        // K = ⌊14/9⌋ = 1 becomes ⌊42/9⌋ = 4 rather than 3 under user scaling
        let r = check_scaling_laws(&[1, 4, 9], &[3], 1.0, 0.2).unwrap();
        let k = r.checks.iter().find(|c| c.law == "user/k").unwrap();
        assert_eq!((k.expected, k.actual, k.pass), (3.0, 4.0, false));
    }
}
