//! Evaluation sweeps, inversion timing and the AVD-vs-domain-size fit.
//!
//! A sweep varies one parameter over a grid. At every grid point and trial
//! it samples attribute subsets, randomizes the records with `ε / w` per
//! attribute, runs each scheme and scores it against the empirical joint of
//! the unperturbed records.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{empirical_distribution, AttributeSubset, Dataset, ProbTensor};
use crate::error::{Error, Result};
use crate::estimator::{
    estimate_castell, estimate_naive, estimate_reduced, estimate_rr_independent_from_lambda,
    estimate_rr_joint, estimate_truncated_from_lambda, select_hybrid, Method, TruncationOptions,
};
use crate::ingest::{load_csv, IngestConfig};
use crate::metrics::{self, subset_collection};
use crate::randomizer::{
    randomize_dataset, randomize_joint, RandomizationMatrix, RandomizationPlan, DEFAULT_DOMAIN_CAP,
};
use crate::stats::{self, LinearFit};
use crate::synth::{sample_dataset, SynthSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSource {
    Csv {
        path: PathBuf,
        /// Ingest profile; all columns are read as inferred categoricals without one.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        profile: Option<PathBuf>,
    },
    Synth(SynthSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// Subset width.
    W,
    /// Number of records (subsampled, or regenerated for synthetic sources).
    N,
    /// Total budget over the `w` subset attributes.
    Epsilon,
    /// Subset width, with one `(|Ω_S|, error)` point kept per subset.
    Omega,
    /// Cramér's V of a synthetic source.
    V,
}

fn default_w() -> usize {
    2
}
fn default_epsilon() -> f64 {
    1.0
}
fn default_trials() -> usize {
    1
}
fn default_subsets() -> usize {
    metrics::DEFAULT_SUBSET_COUNT
}
fn default_cap() -> usize {
    DEFAULT_DOMAIN_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub dataset: DatasetSource,
    pub schemes: Vec<Method>,
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    /// Subset width when not swept.
    #[serde(default = "default_w")]
    pub w: usize,
    /// Total budget over the subset attributes when not swept.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Upper limit on the number of subsets per grid point.
    #[serde(default = "default_subsets")]
    pub subsets: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_cap")]
    pub domain_cap: usize,
    #[serde(default)]
    pub truncation: TruncationOptions,
    /// Line-delimited JSON destination, written as points complete.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("no schemes requested".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.subsets == 0 {
            return Err(Error::Config("subsets must be at least 1".into()));
        }
        if self.variable == SweepVariable::V && !matches!(self.dataset, DatasetSource::Synth(_)) {
            return Err(Error::Config("sweeping V needs a synthetic source".into()));
        }
        for &v in &self.values {
            let integral = matches!(
                self.variable,
                SweepVariable::W | SweepVariable::N | SweepVariable::Omega
            );
            if !(v > 0.0 || (self.variable == SweepVariable::V && v == 0.0))
                || (integral && v.fract() != 0.0)
            {
                return Err(Error::Config(format!(
                    "grid value {v} invalid for {:?}",
                    self.variable
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub scheme: Method,
    pub value: f64,
    pub trial: usize,
    pub w: usize,
    pub n: usize,
    pub epsilon_total: f64,
    pub epsilon_per_attribute: f64,
    /// `None` when every subset was skipped.
    pub avd: Option<f64>,
    pub mae: Option<f64>,
    pub mse: Option<f64>,
    pub subsets_used: usize,
    pub subsets_skipped: usize,
    /// `(|Ω_S|, max-cell error)` per subset, for omega sweeps.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub scheme: Method,
    pub value: f64,
    pub trials: usize,
    pub skipped_trials: usize,
    pub mean_avd: Option<f64>,
    pub std_avd: Option<f64>,
    pub mean_mae: Option<f64>,
    pub std_mae: Option<f64>,
    pub mean_mse: Option<f64>,
    pub std_mse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub version: String,
    pub threads: usize,
    /// Seconds since the Unix epoch; the only field that varies between runs.
    pub timestamp: u64,
}

impl Environment {
    fn capture() -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            threads: rayon::current_num_threads(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub seed: u64,
    pub spec: ExperimentSpec,
    pub records: Vec<TrialRecord>,
    pub summary: Vec<PointSummary>,
    pub environment: Environment,
}

impl ExperimentResult {
    /// Summary for one scheme at one grid value.
    pub fn point(&self, scheme: Method, value: f64) -> Option<&PointSummary> {
        self.summary
            .iter()
            .find(|s| s.scheme == scheme && s.value == value)
    }

    /// All `(|Ω_S|, error)` points recorded for `scheme`.
    pub fn omega_points(&self, scheme: Method) -> Vec<(f64, f64)> {
        self.records
            .iter()
            .filter(|r| r.scheme == scheme)
            .flat_map(|r| r.points.iter().copied())
            .collect()
    }
}

// SplitMix64 finaliser; keeps derived seeds independent of thread timing.
fn mix(parts: &[u64]) -> u64 {
    parts.iter().fold(0x9E37_79B9_7F4A_7C15, |acc, &p| {
        let mut z = acc ^ p.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(acc << 6);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    })
}

pub fn load_source(source: &DatasetSource) -> Result<Dataset> {
    match source {
        DatasetSource::Csv { path, profile } => {
            let config = match profile {
                Some(p) => IngestConfig::from_path(p)?,
                None => IngestConfig::default(),
            };
            Ok(load_csv(path, &config)?.dataset)
        }
        DatasetSource::Synth(spec) => sample_dataset(spec),
    }
}

struct Point {
    w: usize,
    epsilon_total: f64,
}

fn point_params(spec: &ExperimentSpec, value: f64) -> Point {
    match spec.variable {
        SweepVariable::W | SweepVariable::Omega => Point {
            w: value as usize,
            epsilon_total: spec.epsilon,
        },
        SweepVariable::Epsilon => Point {
            w: spec.w,
            epsilon_total: value,
        },
        SweepVariable::N | SweepVariable::V => Point {
            w: spec.w,
            epsilon_total: spec.epsilon,
        },
    }
}

fn trial_data(spec: &ExperimentSpec, base: &Dataset, value: f64, seed: u64) -> Result<Dataset> {
    match (spec.variable, &spec.dataset) {
        (SweepVariable::N, DatasetSource::Synth(s)) => sample_dataset(&SynthSpec {
            n: value as usize,
            seed,
            ..s.clone()
        }),
        (SweepVariable::N, DatasetSource::Csv { .. }) => {
            let n = value as usize;
            if n > base.n() {
                return Err(Error::OutOfRange(format!(
                    "cannot subsample {n} of {} records",
                    base.n()
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut rows = index::sample(&mut rng, base.n(), n).into_vec();
            rows.sort_unstable();
            base.select_records(&rows)
        }
        (SweepVariable::V, DatasetSource::Synth(s)) => sample_dataset(&SynthSpec {
            v_target: value,
            seed,
            ..s.clone()
        }),
        _ => Ok(base.clone()),
    }
}

struct SchemeScore {
    sups: Vec<f64>,
    maes: Vec<f64>,
    mses: Vec<f64>,
    points: Vec<(f64, f64)>,
    skipped: usize,
}

#[allow(clippy::too_many_arguments)]
fn run_trial(
    spec: &ExperimentSpec,
    base: &Dataset,
    value: f64,
    point_index: usize,
    trial: usize,
    subsets: &[AttributeSubset],
) -> Result<Vec<TrialRecord>> {
    let Point { w, epsilon_total } = point_params(spec, value);
    let trial_seed = mix(&[spec.seed, point_index as u64, trial as u64]);
    let data = trial_data(spec, base, value, mix(&[trial_seed, 1]))?;
    let eps_attr = epsilon_total / w as f64;
    let plan = RandomizationPlan::per_attribute(data.schema(), &vec![eps_attr; data.m()])?;
    let y = randomize_dataset(&data, &plan, mix(&[trial_seed, 2]))?;

    let mut scores: Vec<SchemeScore> = spec
        .schemes
        .iter()
        .map(|_| SchemeScore {
            sups: Vec::new(),
            maes: Vec::new(),
            mses: Vec::new(),
            points: Vec::new(),
            skipped: 0,
        })
        .collect();
    let d_max = data.schema().sizes().into_iter().max().unwrap_or(2);
    let hybrid = select_hybrid(data.n(), w, d_max, eps_attr)?.method;

    for (si, subset) in subsets.iter().enumerate() {
        let truth = empirical_distribution(&data, subset)?;
        let lambda = empirical_distribution(&y, subset)?;
        let matrices = plan.for_subset(subset)?;
        for (scheme, score) in spec.schemes.iter().zip(&mut scores) {
            let cap = spec.domain_cap;
            let est: Result<ProbTensor> = match scheme {
                Method::RrJoint => (|| {
                    let cells = truth.len();
                    if cells > cap {
                        return Err(Error::DomainTooLarge { size: cells, cap });
                    }
                    let joint = RandomizationMatrix::dp(cells, epsilon_total)?;
                    let joint_lambda =
                        randomize_joint(&data, subset, &joint, mix(&[trial_seed, 3, si as u64]))?;
                    estimate_rr_joint(&joint_lambda, &joint, cap)
                })(),
                Method::RrIndependent => estimate_rr_independent_from_lambda(&lambda, &matrices),
                Method::Naive => estimate_naive(&lambda, &matrices, cap),
                Method::Reduced => estimate_reduced(&lambda, &matrices, cap),
                Method::Castell => estimate_castell(&lambda, &matrices),
                Method::Truncated => {
                    estimate_truncated_from_lambda(&lambda, &matrices, spec.truncation)
                }
                Method::Hybrid => match hybrid {
                    Method::Castell => estimate_castell(&lambda, &matrices),
                    _ => estimate_rr_independent_from_lambda(&lambda, &matrices),
                },
            };
            let est = match est {
                Ok(e) => e,
                Err(Error::DomainTooLarge { .. }) => {
                    score.skipped += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let sup = metrics::sup_distance(&truth, &est)?;
            score.sups.push(sup);
            score.maes.push(metrics::mae(&truth, &est)?);
            score.mses.push(metrics::mse(&truth, &est)?);
            if spec.variable == SweepVariable::Omega {
                score.points.push((truth.len() as f64, sup));
            }
        }
    }

    Ok(spec
        .schemes
        .iter()
        .zip(scores)
        .map(|(&scheme, s)| TrialRecord {
            scheme,
            value,
            trial,
            w,
            n: data.n(),
            epsilon_total,
            epsilon_per_attribute: eps_attr,
            avd: stats::mean(&s.sups),
            mae: stats::mean(&s.maes),
            mse: stats::mean(&s.mses),
            subsets_used: s.sups.len(),
            subsets_skipped: s.skipped,
            points: s.points,
        })
        .collect())
}

fn summarize(spec: &ExperimentSpec, value: f64, records: &[TrialRecord]) -> Vec<PointSummary> {
    spec.schemes
        .iter()
        .map(|&scheme| {
            let mine: Vec<&TrialRecord> = records.iter().filter(|r| r.scheme == scheme).collect();
            let collect = |f: fn(&TrialRecord) -> Option<f64>| -> Vec<f64> {
                mine.iter().filter_map(|r| f(r)).collect()
            };
            let avd = collect(|r| r.avd);
            let mae = collect(|r| r.mae);
            let mse = collect(|r| r.mse);
            let spread = |xs: &[f64]| (!xs.is_empty()).then(|| stats::std_dev(xs));
            PointSummary {
                scheme,
                value,
                trials: mine.len(),
                skipped_trials: mine.iter().filter(|r| r.avd.is_none()).count(),
                mean_avd: stats::mean(&avd),
                std_avd: spread(&avd),
                mean_mae: stats::mean(&mae),
                std_mae: spread(&mae),
                mean_mse: stats::mean(&mse),
                std_mse: spread(&mse),
            }
        })
        .collect()
}

/// Runs a sweep over the dataset named by the spec.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let data = load_source(&spec.dataset)?;
    run_sweep_on(&data, spec)
}

/// Runs a sweep over an already loaded dataset. For synthetic sources the
/// dataset is replaced per trial when `n` or `V` is swept.
pub fn run_sweep_on(data: &Dataset, spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let mut sink = match &spec.output {
        Some(path) => Some(BufWriter::new(
            File::create(path).map_err(|e| Error::io(path, e))?,
        )),
        None => None,
    };
    let out_path = spec.output.clone().unwrap_or_default();
    let mut records = Vec::new();
    let mut summary = Vec::new();
    for (pi, &value) in spec.values.iter().enumerate() {
        let w = point_params(spec, value).w;
        if w < 1 || w > data.m() {
            return Err(Error::InvalidSubset(format!(
                "w = {w} for a dataset with {} attributes",
                data.m()
            )));
        }
        let subsets = subset_collection(
            data.m(),
            w,
            spec.subsets,
            mix(&[spec.seed, pi as u64, 0xA5]),
        )?;
        let per_trial: Vec<Vec<TrialRecord>> = (0..spec.trials)
            .into_par_iter()
            .map(|t| run_trial(spec, data, value, pi, t, &subsets))
            .collect::<Result<_>>()?;
        let point_records: Vec<TrialRecord> = per_trial.into_iter().flatten().collect();
        if let Some(sink) = sink.as_mut() {
            for r in &point_records {
                serde_json::to_writer(&mut *sink, r)?;
                sink.write_all(b"\n").map_err(|e| Error::io(&out_path, e))?;
            }
            sink.flush().map_err(|e| Error::io(&out_path, e))?;
        }
        summary.extend(summarize(spec, value, &point_records));
        records.extend(point_records);
    }
    let result = ExperimentResult {
        seed: spec.seed,
        spec: spec.clone(),
        records,
        summary,
        environment: Environment::capture(),
    };
    if let Some(sink) = sink.as_mut() {
        serde_json::to_writer(
            &mut *sink,
            &serde_json::json!({ "summary": result.summary, "environment": result.environment }),
        )?;
        sink.write_all(b"\n").map_err(|e| Error::io(&out_path, e))?;
        sink.flush().map_err(|e| Error::io(&out_path, e))?;
    }
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingSpec {
    pub d: usize,
    pub w_grid: Vec<usize>,
    /// Probability of reporting the true category.
    pub keep_probability: f64,
    pub repetitions: usize,
    /// Naïve and reduced are skipped above this many cells.
    pub cap: usize,
    pub seed: u64,
}

impl Default for TimingSpec {
    fn default() -> Self {
        Self {
            d: 3,
            w_grid: (2..=6).collect(),
            keep_probability: 0.5,
            repetitions: 100,
            cap: DEFAULT_DOMAIN_CAP,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub w: usize,
    pub cells: usize,
    /// Median seconds per estimate; `None` when above the cap.
    pub naive: Option<f64>,
    pub reduced: Option<f64>,
    pub castell: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingTable {
    pub spec: TimingSpec,
    pub rows: Vec<TimingRow>,
}

// Repeats `op` often enough per sample that timer resolution is negligible.
fn median_seconds(repetitions: usize, mut op: impl FnMut() -> Result<()>) -> Result<f64> {
    const TARGET: f64 = 2e-4;
    let started = Instant::now();
    op()?;
    let first = started.elapsed().as_secs_f64().max(1e-9);
    let inner = ((TARGET / first).ceil() as usize).clamp(1, 100_000);
    let mut samples = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        let t = Instant::now();
        for _ in 0..inner {
            op()?;
        }
        samples.push(t.elapsed().as_secs_f64() / inner as f64);
    }
    Ok(stats::median(&samples).unwrap_or(first))
}

fn random_tensor(shape: &[usize], seed: u64) -> Result<ProbTensor> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells: usize = shape.iter().product();
    let mut values: Vec<f64> = (0..cells).map(|_| rng.gen::<f64>()).collect();
    let total: f64 = values.iter().sum();
    values.iter_mut().for_each(|v| *v /= total);
    ProbTensor::new(shape.to_vec(), values)
}

/// Median wall time of the three RR-Ind-Joint paths, each including the
/// inversions it needs, over `d^w` cells. Runs sequentially.
pub fn run_timing(spec: &TimingSpec) -> Result<TimingTable> {
    if spec.repetitions == 0 || spec.w_grid.is_empty() {
        return Err(Error::Config(
            "timing needs repetitions and a w grid".into(),
        ));
    }
    let matrix = RandomizationMatrix::keep_probability(spec.d, spec.keep_probability)?;
    let mut rows = Vec::new();
    for &w in &spec.w_grid {
        if w == 0 {
            return Err(Error::Config("w must be at least 1".into()));
        }
        let shape = vec![spec.d; w];
        let cells = spec.d.checked_pow(w as u32).unwrap_or(usize::MAX);
        let lambda = random_tensor(&shape, mix(&[spec.seed, w as u64]))?;
        let matrices = vec![&matrix; w];
        let within_cap = cells <= spec.cap;
        let naive = within_cap
            .then(|| {
                median_seconds(spec.repetitions, || {
                    std::hint::black_box(estimate_naive(&lambda, &matrices, spec.cap)?);
                    Ok(())
                })
            })
            .transpose()?;
        let reduced = within_cap
            .then(|| {
                median_seconds(spec.repetitions, || {
                    std::hint::black_box(estimate_reduced(&lambda, &matrices, spec.cap)?);
                    Ok(())
                })
            })
            .transpose()?;
        let castell = median_seconds(spec.repetitions, || {
            std::hint::black_box(estimate_castell(&lambda, &matrices)?);
            Ok(())
        })?;
        rows.push(TimingRow {
            w,
            cells,
            naive,
            reduced,
            castell,
        });
    }
    Ok(TimingTable {
        spec: spec.clone(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OmegaFit {
    pub fit: LinearFit,
    pub avd_star: f64,
    /// Domain size at which the fitted AVD reaches `avd_star`.
    pub omega_star: f64,
}

/// Default tolerable AVD for [`fit_avd_vs_omega`].
pub const DEFAULT_AVD_STAR: f64 = 0.5;

/// Least-squares line through `(|Ω|, AVD)` points.
pub fn fit_avd_vs_omega(points: &[(f64, f64)], avd_star: f64) -> Result<OmegaFit> {
    let fit = stats::linear_fit(points)?;
    Ok(OmegaFit {
        fit,
        avd_star,
        omega_star: fit.solve_for(avd_star),
    })
}
