//! The `dp-composer` command line.
//!
//! Every subcommand renders a table, written as CSV (default) or as a JSON
//! array of row objects. Exit status: 0 on success, 2 on usage errors, 3 on
//! IO errors and 4 on invalid data.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use dp_composer_core::composition::{self, ClipUserOptions, HaltReason};
use dp_composer_core::dataset::{Dataset, GridData, GridId, OccupancyArray};
use dp_composer_core::grouping::{self, GroupingStrategy};
use dp_composer_core::mechanisms::{self, MechanismOutput, MechanismParams, QuantileMode};
use dp_composer_core::sensitivity;
use dp_composer_core::synth::{self, ScalingMode, SynthParams, ValueModel};
use dp_composer_core::worst_case_bias;
use dp_composer_core::RngStream;

use crate::error::{Error, Result};
use crate::harness::{self, ExperimentConfig, MeanMechanism, MubRule};
use crate::io;

#[derive(Debug, Parser)]
#[command(
    name = "dp-composer",
    version,
    about = "User-level differentially private grid statistics"
)]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Flat `key = value` file supplying defaults for long options.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-grid sample count, mean and population variance.
    Stats(StatsArgs),
    /// Mean and variance sensitivities of a count list.
    Sensitivity(SensitivityArgs),
    /// Worst-case clipping bias of a count list and its retained counts.
    Bias(BiasArgs),
    /// One private release per grid.
    Mechanism(MechanismArgs),
    /// Clip-User suppression, optionally followed by a release.
    ClipUser(ClipUserArgs),
    /// Synthetic occupancy or dataset.
    Synth(SynthArgs),
    /// Monte Carlo privacy or error curves over synthetic occupancies.
    Montecarlo(MonteCarloArgs),
    /// Mean absolute error of a mean mechanism.
    Mae(MaeArgs),
    /// Sample and user scaling-law checks.
    Scaling(ScalingArgs),
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub u: f64,
}

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub counts: Vec<u64>,
    #[arg(long)]
    pub u: f64,
    /// Also report the array-averaging gain at this capacity.
    #[arg(long)]
    pub m_ub: Option<u64>,
}

#[derive(Debug, Args)]
pub struct BiasArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub counts: Vec<u64>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub retained: Vec<u64>,
    #[arg(long)]
    pub u: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MechanismKind {
    Baseline,
    Clip,
    ArrayWrap,
    ArrayBest,
    Levy,
    QuantileFixed,
    QuantileOptimized,
}

fn parse_mub(s: &str) -> std::result::Result<MubRule, String> {
    match s {
        "median" => Ok(MubRule::Median),
        "optimized" => Ok(MubRule::Optimized),
        _ => match s.parse::<u64>() {
            Ok(m) if m > 0 => Ok(MubRule::Fixed(m)),
            _ => Err(format!(
                "expected `median`, `optimized` or a positive integer, got `{s}`"
            )),
        },
    }
}

#[derive(Debug, Args)]
pub struct MechanismArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub u: f64,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, value_enum)]
    pub mechanism: MechanismKind,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Release only this grid.
    #[arg(long)]
    pub grid: Option<String>,
    /// Array capacity for array averaging.
    #[arg(long, value_parser = parse_mub, default_value = "optimized")]
    pub m_ub: MubRule,
    /// Failure probability of the interval step.
    #[arg(long, default_value_t = 0.2)]
    pub gamma: f64,
    /// Per-user sample cap for `clip`.
    #[arg(long)]
    pub cap: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ClipUserArgs {
    #[arg(long)]
    pub occupancy: Option<PathBuf>,
    /// Dataset to release after suppression; its occupancy is used when
    /// `--occupancy` is absent.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub u: f64,
    #[arg(long)]
    pub eps: f64,
    /// Never suppress in the grid with the smallest initial error.
    #[arg(long)]
    pub protect: bool,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SynthOpts {
    #[arg(long, default_value_t = 12)]
    pub grids: usize,
    #[arg(long, default_value_t = 4095)]
    pub users: usize,
    /// Success probability of the geometric count law.
    #[arg(long, default_value_t = 0.01)]
    pub q: f64,
    /// Heavy-hitter boost factor.
    #[arg(long, default_value_t = 0.0)]
    pub heavy_gamma: f64,
    #[arg(long, default_value_t = 65.0)]
    pub u: f64,
}

impl SynthOpts {
    fn params(&self) -> SynthParams {
        SynthParams {
            num_grids: self.grids,
            num_users: self.users,
            geo_q: self.q,
            heavy_gamma: self.heavy_gamma,
            bound_u: self.u,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    Sample,
    User,
}

impl From<ScaleArg> for ScalingMode {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Sample => ScalingMode::Sample,
            ScaleArg::User => ScalingMode::User,
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub synth: SynthOpts,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Emit a dataset of projected Gaussian values instead of counts.
    #[arg(long)]
    pub values: bool,
    #[arg(long, default_value_t = 20.66769)]
    pub mu: f64,
    /// Variance σ² of the value model.
    #[arg(long, default_value_t = 115.135)]
    pub variance: f64,
    #[arg(long, value_enum)]
    pub scale: Option<ScaleArg>,
    #[arg(long, default_value_t = 1)]
    pub lambda: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Privacy,
    Error,
}

#[derive(Debug, Args)]
pub struct MonteCarloArgs {
    #[arg(long, value_enum)]
    pub metric: Metric,
    #[command(flatten)]
    pub synth: SynthOpts,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    /// Comma separated ε grid; defaults to 0.1, 0.2, …, 2.
    #[arg(long, value_delimiter = ',')]
    pub eps: Vec<f64>,
    #[arg(long)]
    pub protect: bool,
}

#[derive(Debug, Args)]
pub struct MaeArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub u: f64,
    /// Grid to evaluate; optional when the dataset has a single grid.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, value_enum)]
    pub mechanism: MechanismKind,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, value_delimiter = ',')]
    pub eps: Vec<f64>,
    #[arg(long, value_parser = parse_mub, default_value = "optimized")]
    pub m_ub: MubRule,
    #[arg(long, default_value_t = 0.2)]
    pub gamma: f64,
}

#[derive(Debug, Args)]
pub struct ScalingArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub counts: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "2,3,10")]
    pub lambdas: Vec<u64>,
    #[arg(long, default_value_t = 1.0)]
    pub u: f64,
    #[arg(long, default_value_t = 0.2)]
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(u64),
    Num(f64),
    Bool(bool),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => x.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Int(i) => Value::from(*i),
            Cell::Num(x) => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<u64> for Cell {
    fn from(i: u64) -> Self {
        Cell::Int(i)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as u64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(o: Option<T>) -> Self {
        o.map_or(Cell::Empty, Into::into)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.columns)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::csv))?;
                }
                let bytes = w
                    .into_inner()
                    .map_err(|e| Error::io("<output>", e.into_error()))?;
                Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let obj: Map<String, Value> = self
                            .columns
                            .iter()
                            .zip(row)
                            .map(|(c, v)| (c.to_string(), v.json()))
                            .collect();
                        Value::Object(obj)
                    })
                    .collect();
                let mut s = serde_json::to_string_pretty(&rows)?;
                s.push('\n');
                Ok(s)
            }
        }
    }
}

fn kv(rows: Vec<(&str, Cell)>) -> Table {
    let mut t = Table::new(&["quantity", "value"]);
    for (k, v) in rows {
        t.push(vec![k.into(), v]);
    }
    t
}

fn require_seed(seed: Option<u64>, what: &str) -> Result<u64> {
    seed.ok_or_else(|| Error::Usage(format!("--seed is required for {what}")))
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn load_dataset(path: &Path, bound_u: f64) -> Result<Dataset> {
    io::parse_dataset(&io::read_file(&path_str(path))?, bound_u)
}

fn load_occupancy(path: &Path) -> Result<OccupancyArray> {
    io::parse_occupancy(&io::read_file(&path_str(path))?)
}

fn epsilons(list: &[f64]) -> Vec<f64> {
    if list.is_empty() {
        harness::default_epsilons()
    } else {
        list.to_vec()
    }
}

fn debug_label<T: std::fmt::Debug>(x: &T) -> String {
    format!("{x:?}")
}

fn stats(a: &StatsArgs) -> Result<Table> {
    let d = load_dataset(&a.data, a.u)?;
    let mut t = Table::new(&["grid", "users", "n", "mean", "variance"]);
    for (g, data) in d.grids() {
        let s = data.stats()?;
        t.push(vec![
            g.as_str().into(),
            data.users.len().into(),
            s.n.into(),
            s.mean.into(),
            s.variance.into(),
        ]);
    }
    Ok(t)
}

fn sensitivity_cmd(a: &SensitivityArgs) -> Result<Table> {
    let r = sensitivity::variance_sensitivity(&a.counts, a.u)?;
    let mut rows = vec![
        ("delta_mu", r.delta_mu.into()),
        ("delta_var", r.delta_var.into()),
        ("branch", debug_label(&r.branch).into()),
        ("m_ub_median", grouping::median_mub(&a.counts).into()),
        ("m_ub_optimized", grouping::optimized_mub(&a.counts).into()),
    ];
    if let Some(m_ub) = a.m_ub {
        let g = sensitivity::gain_report(&a.counts, m_ub, a.u)?;
        rows.extend([
            ("delta_f", g.delta_f.into()),
            ("delta_tilde", g.delta_tilde.into()),
            ("opt", g.opt.into()),
            ("gain", g.gain.into()),
        ]);
    }
    Ok(kv(rows))
}

fn bias_cmd(a: &BiasArgs) -> Result<Table> {
    let r = worst_case_bias::variance_bias(&a.counts, &a.retained, a.u)?;
    Ok(kv(vec![
        ("e_mu", r.e_mu.into()),
        ("e_var", r.e_var.into()),
        ("branch", debug_label(&r.var_branch).into()),
    ]))
}

fn mean_mechanism(kind: MechanismKind, mub: MubRule, gamma: f64) -> Result<MeanMechanism> {
    Ok(match kind {
        MechanismKind::Baseline => MeanMechanism::Baseline,
        MechanismKind::ArrayWrap => MeanMechanism::ArrayAverage {
            strategy: GroupingStrategy::WrapAround,
            mub,
        },
        MechanismKind::ArrayBest => MeanMechanism::ArrayAverage {
            strategy: GroupingStrategy::BestFit,
            mub,
        },
        MechanismKind::Levy => MeanMechanism::Levy { gamma },
        MechanismKind::QuantileFixed => MeanMechanism::Quantile(QuantileMode::Fixed),
        MechanismKind::QuantileOptimized => MeanMechanism::Quantile(QuantileMode::Optimized),
        MechanismKind::Clip => {
            return Err(Error::Usage("`clip` is not a mean-only mechanism".into()))
        }
    })
}

fn release_one(a: &MechanismArgs, grid: &GridData, rng: &mut RngStream) -> Result<MechanismOutput> {
    let mut params = MechanismParams::new(a.eps, a.u);
    params.gamma = a.gamma;
    let out = match a.mechanism {
        MechanismKind::Baseline => mechanisms::baseline_release(grid, &params, rng)?,
        MechanismKind::Clip => {
            let cap = a
                .cap
                .ok_or_else(|| Error::Usage("--cap is required for `clip`".into()))?;
            let gamma: Vec<u64> = grid.counts().iter().map(|&m| m.min(cap)).collect();
            mechanisms::clip_release(grid, &gamma, &params, rng)?
        }
        MechanismKind::ArrayWrap | MechanismKind::ArrayBest => {
            params.strategy = if a.mechanism == MechanismKind::ArrayWrap {
                GroupingStrategy::WrapAround
            } else {
                GroupingStrategy::BestFit
            };
            mechanisms::array_average_release(grid, a.m_ub.resolve(&grid.counts()), &params, rng)?
        }
        MechanismKind::Levy => mechanisms::levy_release(grid, &params, rng)?,
        MechanismKind::QuantileFixed => {
            mechanisms::quantile_release(grid, &params, QuantileMode::Fixed, rng)?
        }
        MechanismKind::QuantileOptimized => {
            mechanisms::quantile_release(grid, &params, QuantileMode::Optimized, rng)?
        }
    };
    Ok(out)
}

fn output_row(grid: &GridId, label: &str, o: &MechanismOutput) -> Vec<Cell> {
    vec![
        grid.as_str().into(),
        label.into(),
        o.noisy_mean.into(),
        o.noisy_variance.into(),
        o.noise_scale_mean.into(),
        o.noise_scale_var.into(),
        o.interval.map(|i| i.lo).into(),
        o.interval.map(|i| i.hi).into(),
        o.rank_clamped.into(),
    ]
}

const OUTPUT_COLUMNS: [&str; 9] = [
    "grid",
    "mechanism",
    "noisy_mean",
    "noisy_variance",
    "noise_scale_mean",
    "noise_scale_var",
    "interval_lo",
    "interval_hi",
    "rank_clamped",
];

fn selected_grids(d: &Dataset, grid: Option<&str>) -> Result<Vec<(GridId, GridData)>> {
    match grid {
        Some(g) => {
            let id = GridId::from(g);
            let data = d.grid(&id)?;
            Ok(vec![(id, data)])
        }
        None => Ok(d.grids().into_iter().collect()),
    }
}

fn mechanism_cmd(a: &MechanismArgs) -> Result<Table> {
    let seed = require_seed(a.seed, "`mechanism`")?;
    let d = load_dataset(&a.data, a.u)?;
    let root = RngStream::new(seed);
    let label = a
        .mechanism
        .to_possible_value()
        .expect("no skipped variants")
        .get_name()
        .to_string();
    let mut t = Table::new(&OUTPUT_COLUMNS);
    for (g, data) in selected_grids(&d, a.grid.as_deref())? {
        let mut rng = root.split(g.as_str());
        let out = release_one(a, &data, &mut rng)?;
        t.push(output_row(&g, &label, &out));
    }
    Ok(t)
}

fn clip_user_cmd(a: &ClipUserArgs) -> Result<Table> {
    let dataset = match &a.data {
        Some(p) => Some(load_dataset(p, a.u)?),
        None => None,
    };
    let occ = match (&a.occupancy, &dataset) {
        (Some(p), _) => load_occupancy(p)?,
        (None, Some(d)) => d.occupancy(),
        (None, None) => {
            return Err(Error::Usage(
                "one of --occupancy or --data is required".into(),
            ))
        }
    };
    let seed = match &dataset {
        Some(_) => Some(require_seed(a.seed, "`clip-user --data`")?),
        None => None,
    };
    let opts = ClipUserOptions {
        protect_min_error_grid: a.protect,
    };
    let r = composition::clip_user(&occ, a.u, a.eps, opts)?;
    let mut t = Table::new(&["kind", "stage", "user", "grid", "value"]);
    let summary = |t: &mut Table, kind: &str, v: Cell| {
        t.push(vec![kind.into(), Cell::Empty, Cell::Empty, Cell::Empty, v])
    };
    summary(&mut t, "error_cap", r.error_cap.into());
    summary(&mut t, "initial_k", r.initial_k.into());
    summary(&mut t, "k_factor", r.k_factor.into());
    let after = r.plan.apply(&r.occupancy);
    summary(
        &mut t,
        "privacy_loss",
        composition::uniform_privacy_loss(&after, a.eps).into(),
    );
    match &r.halt {
        HaltReason::ErrorCapExceeded { user, grid, error } => t.push(vec![
            "halt_error_cap".into(),
            Cell::Empty,
            user.as_str().into(),
            grid.as_str().into(),
            (*error).into(),
        ]),
        HaltReason::NoCandidate { user } => t.push(vec![
            "halt_no_candidate".into(),
            Cell::Empty,
            user.as_str().into(),
            Cell::Empty,
            Cell::Empty,
        ]),
        HaltReason::SingleGridOccupancy => summary(&mut t, "halt_single_grid", Cell::Empty),
    }
    for e in &r.trace {
        t.push(vec![
            "suppress".into(),
            e.stage.into(),
            e.user.as_str().into(),
            e.grid.as_str().into(),
            e.error.into(),
        ]);
    }
    for (g, b) in &r.per_grid_errors {
        t.push(vec![
            "grid_error".into(),
            Cell::Empty,
            Cell::Empty,
            g.as_str().into(),
            b.total.into(),
        ]);
    }
    if let (Some(d), Some(seed)) = (&dataset, seed) {
        let rel = composition::post_release(d, &r, a.eps, &RngStream::new(seed))?;
        for (g, o) in &rel.outputs {
            t.push(vec![
                "release_mean".into(),
                Cell::Empty,
                Cell::Empty,
                g.as_str().into(),
                o.noisy_mean.into(),
            ]);
            t.push(vec![
                "release_variance".into(),
                Cell::Empty,
                Cell::Empty,
                g.as_str().into(),
                o.noisy_variance.into(),
            ]);
        }
    }
    Ok(t)
}

fn synth_cmd(a: &SynthArgs, format: Format) -> Result<String> {
    let seed = require_seed(a.seed, "`synth`")?;
    let params = a.synth.params();
    let root = RngStream::new(seed);
    let mut occ = synth::generate_occupancy(&params, &mut root.split("occupancy"))?;
    if let Some(mode) = a.scale {
        occ = synth::scale_occupancy(&occ, mode.into(), a.lambda)?;
    }
    if a.values {
        if !(a.variance >= 0.0) {
            return Err(Error::Usage("--variance must be non-negative".into()));
        }
        let model = ValueModel {
            mu: a.mu,
            sigma: a.variance.sqrt(),
        };
        let d = synth::generate_values(&occ, model, params.bound_u, &mut root.split("values"))?;
        match format {
            Format::Csv => {
                let mut buf = Vec::new();
                io::write_dataset(&d, &mut buf)?;
                Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
            }
            Format::Json => {
                let mut t = Table::new(&["user", "grid", "value"]);
                for r in d.records() {
                    t.push(vec![
                        r.user.as_str().into(),
                        r.grid.as_str().into(),
                        r.value.into(),
                    ]);
                }
                t.render(format)
            }
        }
    } else {
        match format {
            Format::Csv => {
                let mut buf = Vec::new();
                io::write_occupancy(&occ, &mut buf)?;
                Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
            }
            Format::Json => {
                let mut t = Table::new(&["user", "grid", "count"]);
                for (u, g, c) in occ.entries() {
                    t.push(vec![u.as_str().into(), g.as_str().into(), c.into()]);
                }
                t.render(format)
            }
        }
    }
}

fn curve_table(points: &[harness::CurvePoint]) -> Table {
    let mut t = Table::new(&["epsilon", "value", "label"]);
    for p in points {
        t.push(vec![
            p.epsilon.into(),
            p.value.into(),
            p.label.as_str().into(),
        ]);
    }
    t
}

fn montecarlo_cmd(a: &MonteCarloArgs) -> Result<Table> {
    let seed = require_seed(a.seed, "`montecarlo`")?;
    let mut cfg = ExperimentConfig::new(epsilons(&a.eps), a.trials, seed);
    cfg.protect_min_error_grid = a.protect;
    let params = a.synth.params();
    let points = match a.metric {
        Metric::Privacy => harness::monte_carlo_privacy(&params, &cfg)?,
        Metric::Error => harness::monte_carlo_error(&params, &cfg)?,
    };
    Ok(curve_table(&points))
}

fn mae_cmd(a: &MaeArgs) -> Result<Table> {
    let seed = require_seed(a.seed, "`mae`")?;
    let d = load_dataset(&a.data, a.u)?;
    let grid = match &a.grid {
        Some(g) => d.grid(&GridId::from(g.as_str()))?,
        None => {
            let mut grids = d.grids().into_values();
            match (grids.next(), grids.next()) {
                (Some(g), None) => g,
                _ => {
                    return Err(Error::Usage(
                        "--grid is required for multi-grid datasets".into(),
                    ))
                }
            }
        }
    };
    let mech = mean_mechanism(a.mechanism, a.m_ub, a.gamma)?;
    let cfg = ExperimentConfig::new(epsilons(&a.eps), a.trials, seed);
    Ok(curve_table(&harness::mae_eval(mech, &grid, &cfg)?))
}

fn scaling_cmd(a: &ScalingArgs) -> Result<Table> {
    let r = harness::check_scaling_laws(&a.counts, &a.lambdas, a.u, a.gamma)?;
    let mut t = Table::new(&["law", "lambda", "expected", "actual", "applicable", "pass"]);
    for c in &r.checks {
        t.push(vec![
            c.law.as_str().into(),
            c.lambda.into(),
            c.expected.into(),
            c.actual.into(),
            c.applicable.into(),
            c.pass.into(),
        ]);
    }
    Ok(t)
}

/// Runs a parsed command and returns the rendered output.
pub fn execute(cli: &Cli) -> Result<String> {
    let table = match &cli.command {
        Command::Stats(a) => stats(a)?,
        Command::Sensitivity(a) => sensitivity_cmd(a)?,
        Command::Bias(a) => bias_cmd(a)?,
        Command::Mechanism(a) => mechanism_cmd(a)?,
        Command::ClipUser(a) => clip_user_cmd(a)?,
        Command::Synth(a) => return synth_cmd(a, cli.format),
        Command::Montecarlo(a) => montecarlo_cmd(a)?,
        Command::Mae(a) => mae_cmd(a)?,
        Command::Scaling(a) => scaling_cmd(a)?,
    };
    table.render(cli.format)
}

const SUBCOMMANDS: [&str; 9] = [
    "stats",
    "sensitivity",
    "bias",
    "mechanism",
    "clip-user",
    "synth",
    "montecarlo",
    "mae",
    "scaling",
];

/// Parses a flat `key = value` file. Blank lines and `#` comments are
/// skipped.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Usage(format!("config line {}: expected `key = value`", i + 1))
        })?;
        let k = k.trim().trim_start_matches("--");
        if k.is_empty() {
            return Err(Error::Usage(format!("config line {}: empty key", i + 1)));
        }
        out.push((k.replace('_', "-"), v.trim().to_string()));
    }
    Ok(out)
}

/// Splices options from `--config FILE` into `args` right after the
/// subcommand. Options given on the command line win. `true` and `false`
/// values switch boolean flags on or leave them off.
pub fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let strs: Vec<Option<&str>> = args.iter().map(|a| a.to_str()).collect();
    let mut path = None;
    for (i, a) in strs.iter().enumerate() {
        match a {
            Some("--config") => path = strs.get(i + 1).copied().flatten(),
            Some(s) if s.starts_with("--config=") => path = Some(&s["--config=".len()..]),
            _ => {}
        }
    }
    let Some(path) = path else {
        return Ok(args);
    };
    let entries = parse_config(&io::read_file(path)?)?;
    let Some(pos) = strs
        .iter()
        .skip(1)
        .position(|a| a.is_some_and(|s| SUBCOMMANDS.contains(&s)))
    else {
        return Ok(args);
    };
    let present = |key: &str| {
        let flag = format!("--{key}");
        let prefix = format!("--{key}=");
        strs.iter()
            .flatten()
            .any(|s| *s == flag || s.starts_with(&prefix))
    };
    let mut extra: Vec<OsString> = Vec::new();
    for (k, v) in entries {
        if k == "config" || present(&k) {
            continue;
        }
        match v.as_str() {
            "true" => extra.push(format!("--{k}").into()),
            "false" => {}
            _ => {
                extra.push(format!("--{k}").into());
                extra.push(v.into());
            }
        }
    }
    let at = pos + 2;
    let mut out = args[..at].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[at..]);
    Ok(out)
}

fn emit(cli: &Cli, text: &str) -> Result<()> {
    match &cli.output {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(path_str(p), e)),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

/// Entry point: returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli).and_then(|text| emit(&cli, &text)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
