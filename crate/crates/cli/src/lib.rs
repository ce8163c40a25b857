//! Experiment driver behind the `swarm-svr` binary.
//!
//! Three commands share one JSON config:
//!
//! * `ingest` counts missing cells, imputes, encodes, standardizes and splits
//!   one year of station records into `train_<year>.csv` / `test_<year>.csv`.
//! * `run` trains the plain or swarm-tuned SVR for one year and evaluates it
//!   on the held-out rows.
//! * `reproduce` runs all three models for both years and compares the
//!   results with the published table.
//!
//! Everything is written under `output_dir`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use swarm_svr_core::dataio::{self, Dataset, MissingReport, RawRecord, ScalerParams, YearWindow};
use swarm_svr_core::gwo::GwoParams;
use swarm_svr_core::metrics::{self, EvalReport};
use swarm_svr_core::pso::PsoParams;
use swarm_svr_core::space::write_trace_csv;
use swarm_svr_core::svr::{self, SvrModel, DEFAULT_EPSILON, DEFAULT_MAX_PASSES, DEFAULT_TOL};
use swarm_svr_core::tuner::{
    self, OptimizerKind, SpacePreset, TuneResult, TunerConfig, Validation,
};

pub const THREADS_ENV: &str = "SWARM_SVR_THREADS";
pub const REPRODUCE_YEARS: [i32; 2] = [2013, 2014];
/// Allowed absolute R² distance from the published value.
pub const R2_TOLERANCE: f64 = 0.05;

/// Which model to train: the untuned SVR or one of the tuned hybrids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    None,
    Pso,
    Gwo,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::None, ModelKind::Pso, ModelKind::Gwo];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::None => "svr",
            ModelKind::Pso => "pso-svr",
            ModelKind::Gwo => "gwo-svr",
        }
    }

    fn code(self) -> u64 {
        match self {
            ModelKind::None => 1,
            ModelKind::Pso => 2,
            ModelKind::Gwo => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvrSettings {
    pub epsilon: f64,
    pub tol: f64,
    pub max_passes: u64,
}

impl Default for SvrSettings {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            tol: DEFAULT_TOL,
            max_passes: DEFAULT_MAX_PASSES,
        }
    }
}

/// The experiment config file. Relative paths are resolved against the
/// directory holding the config file.
///
/// The `seed` fields inside `pso` and `gwo` are ignored: every optimizer run
/// gets a seed derived from `seed`, the model and the year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data_path: PathBuf,
    pub station: String,
    pub year: i32,
    pub year_window: YearWindow,
    pub split_ratio: f64,
    pub seed: u64,
    pub optimizer: ModelKind,
    pub pso: PsoParams,
    pub gwo: GwoParams,
    pub svr: SvrSettings,
    pub search_space: SpacePreset,
    pub log_space: bool,
    pub validation: Validation,
    /// Keep only this many rows of each year before splitting.
    pub subsample: Option<usize>,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data_path: PathBuf::from("data/PRSA_Data_Aotizhongxin_20130301-20170228.csv"),
            station: "Aotizhongxin".into(),
            year: 2013,
            year_window: YearWindow::default(),
            split_ratio: dataio::DEFAULT_SPLIT_RATIO,
            seed: 42,
            optimizer: ModelKind::None,
            pso: PsoParams::default(),
            gwo: GwoParams::default(),
            svr: SvrSettings::default(),
            search_space: SpacePreset::default(),
            log_space: false,
            validation: Validation::default(),
            subsample: None,
            output_dir: PathBuf::from("output"),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: Self = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.data_path = base.join(&cfg.data_path);
        cfg.output_dir = base.join(&cfg.output_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.split_ratio > 0.0 && self.split_ratio < 1.0,
            "split_ratio must lie in (0, 1), got {}",
            self.split_ratio
        );
        ensure!(self.subsample != Some(0), "subsample must be positive");
        self.pso.validate()?;
        self.gwo.validate()?;
        self.tuner_config(0).validate()?;
        Ok(())
    }

    pub fn tuner_config(&self, inner_seed: u64) -> TunerConfig {
        TunerConfig {
            space: self.search_space.space(),
            log_space: self.log_space,
            epsilon: self.svr.epsilon,
            tol: self.svr.tol,
            max_passes: self.svr.max_passes,
            validation: self.validation,
            inner_seed,
        }
    }
}

fn mix(mut z: u64) -> u64 {
    // splitmix64 finalizer
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the train/test split for `year`; shared by all models of a year.
pub fn split_seed(base: u64, year: i32) -> u64 {
    mix(base ^ mix(year as u64))
}

fn subsample_seed(base: u64, year: i32) -> u64 {
    mix(split_seed(base, year) ^ 0x5ab5)
}

/// Seed of one model/year cell (optimizer and inner validation split).
pub fn cell_seed(base: u64, model: ModelKind, year: i32) -> u64 {
    mix(split_seed(base, year) ^ mix(model.code()))
}

/// File layout under the output directory.
#[derive(Debug, Clone)]
pub struct Outputs {
    pub dir: PathBuf,
}

impl Outputs {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn missing_report(&self, year: i32) -> PathBuf {
        self.dir.join(format!("missing_report_{year}.json"))
    }

    pub fn train(&self, year: i32) -> PathBuf {
        self.dir.join(format!("train_{year}.csv"))
    }

    pub fn test(&self, year: i32) -> PathBuf {
        self.dir.join(format!("test_{year}.csv"))
    }

    pub fn scaler(&self, year: i32) -> PathBuf {
        self.dir.join(format!("scaler_{year}.json"))
    }

    pub fn ingest(&self, year: i32) -> PathBuf {
        self.dir.join(format!("ingest_{year}.json"))
    }

    pub fn eval(&self, model: ModelKind, year: i32) -> PathBuf {
        self.dir.join(format!("eval_{}_{year}.json", model.name()))
    }

    pub fn predictions(&self, model: ModelKind, year: i32) -> PathBuf {
        self.dir
            .join(format!("predictions_{}_{year}.csv", model.name()))
    }

    pub fn model(&self, model: ModelKind, year: i32) -> PathBuf {
        self.dir.join(format!("model_{}_{year}.json", model.name()))
    }

    pub fn tune(&self, model: ModelKind, year: i32) -> PathBuf {
        self.dir.join(format!("tune_{}_{year}.json", model.name()))
    }

    pub fn trace(&self, model: ModelKind, year: i32) -> PathBuf {
        self.dir.join(format!("trace_{}_{year}.csv", model.name()))
    }

    pub fn comparison_json(&self) -> PathBuf {
        self.dir.join("table4_comparison.json")
    }

    pub fn comparison_txt(&self) -> PathBuf {
        self.dir.join("table4_comparison.txt")
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Builds the global rayon pool from `SWARM_SVR_THREADS` (unset or 0 means
/// one thread per core).
pub fn configure_threads() -> Result<()> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .with_context(|| format!("{THREADS_ENV} must be a non-negative integer, got {v:?}"))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("configuring the thread pool")
}

fn load_station(cfg: &ExperimentConfig) -> Result<Vec<RawRecord>> {
    let records = dataio::load_csv(&cfg.data_path)?;
    let total = records.len();
    let kept: Vec<RawRecord> = records
        .into_iter()
        .filter(|r| r.station == cfg.station)
        .collect();
    if kept.is_empty() {
        bail!(
            "no rows for station {:?} among {total} rows of {}",
            cfg.station,
            cfg.data_path.display()
        );
    }
    Ok(kept)
}

/// The config values that determine the processed files of a year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestKey {
    pub data_path: PathBuf,
    pub station: String,
    pub year_window: YearWindow,
    pub split_ratio: f64,
    pub seed: u64,
    pub subsample: Option<usize>,
}

impl IngestKey {
    fn of(cfg: &ExperimentConfig) -> Self {
        Self {
            data_path: cfg.data_path.clone(),
            station: cfg.station.clone(),
            year_window: cfg.year_window,
            split_ratio: cfg.split_ratio,
            seed: cfg.seed,
            subsample: cfg.subsample,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub year: i32,
    pub rows: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub key: IngestKey,
    pub missing: MissingReport,
}

/// Writes the missing report, the standardized train/test partitions and
/// the scaler for one year.
pub fn cmd_ingest(cfg: &ExperimentConfig, year: i32) -> Result<IngestSummary> {
    let records = load_station(cfg)?;
    ingest_records(cfg, &records, year)
}

fn ingest_records(
    cfg: &ExperimentConfig,
    records: &[RawRecord],
    year: i32,
) -> Result<IngestSummary> {
    let out = Outputs::new(&cfg.output_dir);
    fs::create_dir_all(&out.dir).with_context(|| format!("creating {}", out.dir.display()))?;

    let missing = dataio::count_missing(records, year, cfg.year_window)?;
    write_json(&out.missing_report(year), &missing)?;

    let rows = dataio::impute_mode(records, year, cfg.year_window)?;
    let (x, y) = dataio::encode_features(&rows)?;
    let mut data = Dataset::new(x, y)?;
    if let Some(n) = cfg.subsample {
        data = dataio::subsample(&data, n, subsample_seed(cfg.seed, year));
    }
    let (xs, ys, scaler) = dataio::standardize(&data.x, &data.y)?;
    let (train, test) = dataio::split(&xs, &ys, cfg.split_ratio, split_seed(cfg.seed, year))?;
    dataio::write_dataset_csv(out.train(year), &train)?;
    dataio::write_dataset_csv(out.test(year), &test)?;
    write_json(&out.scaler(year), &scaler)?;
    log::info!(
        "ingested {year}: {} rows ({} train, {} test)",
        data.len(),
        train.len(),
        test.len()
    );
    let summary = IngestSummary {
        year,
        rows: data.len(),
        n_train: train.len(),
        n_test: test.len(),
        key: IngestKey::of(cfg),
        missing,
    };
    write_json(&out.ingest(year), &summary)?;
    Ok(summary)
}

/// Whether the processed files of `year` exist and were made with `cfg`.
fn ingest_is_current(cfg: &ExperimentConfig, out: &Outputs, year: i32) -> bool {
    let files = [out.train(year), out.test(year), out.scaler(year)];
    files.iter().all(|p| p.exists())
        && read_json::<IngestSummary>(&out.ingest(year)).is_ok_and(|s| s.key == IngestKey::of(cfg))
}

/// Contents of `eval_<model>_<year>.json`. `metrics` is on the standardized
/// target; `original_units` maps both series back to µg/m³ first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub model: String,
    pub year: i32,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub c: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub n_support: usize,
    pub metrics: EvalReport,
    pub original_units: EvalReport,
    pub tuning_fitness: Option<f64>,
}

/// Trains one model for one year, ingesting first when the processed files
/// are absent or stale, and writes its report, predictions and model.
pub fn cmd_run(cfg: &ExperimentConfig, year: i32, kind: ModelKind) -> Result<RunReport> {
    let out = Outputs::new(&cfg.output_dir);
    if !ingest_is_current(cfg, &out, year) {
        cmd_ingest(cfg, year)?;
    }
    let train = dataio::read_dataset_csv(out.train(year))?;
    let test = dataio::read_dataset_csv(out.test(year))?;
    let scaler: ScalerParams = read_json(&out.scaler(year))?;
    ensure!(
        !train.is_empty() && !test.is_empty(),
        "empty partition for {year}"
    );

    let seed = cell_seed(cfg.seed, kind, year);
    let tc = cfg.tuner_config(seed);
    let (model, tuned): (SvrModel, Option<TuneResult>) = match kind {
        ModelKind::None => {
            let gamma = 1.0 / train.x.n_cols() as f64;
            let params = tc.svr_params(1.0, gamma)?;
            (svr::train(&train.x, &train.y, &params)?, None)
        }
        ModelKind::Pso | ModelKind::Gwo => {
            let opt = if kind == ModelKind::Pso {
                OptimizerKind::Pso(PsoParams { seed, ..cfg.pso })
            } else {
                OptimizerKind::Gwo(GwoParams { seed, ..cfg.gwo })
            };
            let result = tuner::tune(&train, &opt, &tc)?;
            let model = tuner::final_fit(&train, &result, &tc)?;
            (model, Some(result))
        }
    };
    let model = model.with_scaler(scaler.clone()).with_seed(seed);

    let pred = model.predict_batch(&test.x)?;
    let metrics = metrics::evaluate(test.y.as_slice(), pred.as_slice())?;
    let original_units = metrics::evaluate(
        scaler.inverse_target(&test.y).as_slice(),
        scaler.inverse_target(&pred).as_slice(),
    )?;

    let report = RunReport {
        model: kind.name().into(),
        year,
        seed,
        n_train: train.len(),
        n_test: test.len(),
        c: model.params.c,
        gamma: model.kernel.gamma(),
        epsilon: model.params.epsilon,
        n_support: model.n_support(),
        metrics,
        original_units,
        tuning_fitness: tuned.as_ref().map(|t| t.best_fitness),
    };
    write_json(&out.eval(kind, year), &report)?;
    write_json(&out.model(kind, year), &model)?;
    write_predictions(
        &out.predictions(kind, year),
        test.y.as_slice(),
        pred.as_slice(),
    )?;
    if let Some(t) = &tuned {
        write_json(&out.tune(kind, year), t)?;
        let file = fs::File::create(out.trace(kind, year))?;
        let labels: Vec<String> = tuner::HYPER_LABELS.iter().map(|s| s.to_string()).collect();
        write_trace_csv(file, "best_fitness", &labels, &t.trace)?;
    }
    log::info!(
        "{} {year}: R2 {:.4} RMSE {:.4} MAE {:.4} (C {:.4}, gamma {:.4})",
        kind.name(),
        metrics.r2,
        metrics.rmse,
        metrics.mae,
        report.c,
        report.gamma
    );
    Ok(report)
}

fn write_predictions(path: &Path, observed: &[f64], predicted: &[f64]) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(["observed", "predicted"])?;
    for (o, p) in observed.iter().zip(predicted) {
        w.write_record([o.to_string(), p.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub r2: f64,
    pub rmse: f64,
    pub mae: f64,
}

/// The published results, standardized target units.
pub const PUBLISHED_SCORES: [(ModelKind, i32, Scores); 6] = [
    (
        ModelKind::None,
        2013,
        Scores {
            r2: 0.9312,
            rmse: 0.2646,
            mae: 0.176,
        },
    ),
    (
        ModelKind::Pso,
        2013,
        Scores {
            r2: 0.9397,
            rmse: 0.2477,
            mae: 0.165,
        },
    ),
    (
        ModelKind::Gwo,
        2013,
        Scores {
            r2: 0.9389,
            rmse: 0.2493,
            mae: 0.166,
        },
    ),
    (
        ModelKind::None,
        2014,
        Scores {
            r2: 0.9257,
            rmse: 0.2662,
            mae: 0.1559,
        },
    ),
    (
        ModelKind::Pso,
        2014,
        Scores {
            r2: 0.9401,
            rmse: 0.2390,
            mae: 0.1368,
        },
    ),
    (
        ModelKind::Gwo,
        2014,
        Scores {
            r2: 0.9408,
            rmse: 0.2376,
            mae: 0.1373,
        },
    ),
];

pub fn published_scores(model: ModelKind, year: i32) -> Option<Scores> {
    PUBLISHED_SCORES
        .iter()
        .find(|(m, y, _)| *m == model && *y == year)
        .map(|(_, _, s)| *s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: String,
    pub year: i32,
    pub published: Scores,
    pub computed: Option<Scores>,
    pub r2_within_tolerance: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearOrdering {
    pub year: i32,
    /// Models from lowest to highest RMSE.
    pub published_order: Vec<String>,
    pub computed_order: Option<Vec<String>>,
    pub order_preserved: Option<bool>,
    /// Both tuned models have test RMSE at most the untuned one.
    pub hybrids_not_worse: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub r2_tolerance: f64,
    pub rows: Vec<ComparisonRow>,
    pub orderings: Vec<YearOrdering>,
    pub failed_cells: usize,
}

impl Comparison {
    pub fn build(cells: &[(ModelKind, i32, std::result::Result<RunReport, String>)]) -> Self {
        let rows: Vec<ComparisonRow> = cells
            .iter()
            .map(|(model, year, res)| {
                let published = published_scores(*model, *year).unwrap_or(Scores {
                    r2: f64::NAN,
                    rmse: f64::NAN,
                    mae: f64::NAN,
                });
                let computed = res.as_ref().ok().map(|r| Scores {
                    r2: r.metrics.r2,
                    rmse: r.metrics.rmse,
                    mae: r.metrics.mae,
                });
                ComparisonRow {
                    model: model.name().into(),
                    year: *year,
                    published,
                    computed,
                    r2_within_tolerance: computed
                        .map(|c| (c.r2 - published.r2).abs() <= R2_TOLERANCE),
                    error: res.as_ref().err().cloned(),
                }
            })
            .collect();

        let mut years: Vec<i32> = rows.iter().map(|r| r.year).collect();
        years.dedup();
        let orderings = years
            .into_iter()
            .map(|year| {
                let in_year: Vec<&ComparisonRow> = rows.iter().filter(|r| r.year == year).collect();
                let order = |f: &dyn Fn(&ComparisonRow) -> f64| {
                    let mut v: Vec<&&ComparisonRow> = in_year.iter().collect();
                    v.sort_by(|a, b| f(a).total_cmp(&f(b)));
                    v.iter().map(|r| r.model.clone()).collect::<Vec<_>>()
                };
                let published_order = order(&|r| r.published.rmse);
                let complete = in_year.len() == 3 && in_year.iter().all(|r| r.computed.is_some());
                let computed_order = complete.then(|| order(&|r| r.computed.unwrap().rmse));
                let rmse = |name: &str| {
                    in_year
                        .iter()
                        .find(|r| r.model == name)
                        .and_then(|r| r.computed)
                        .map(|c| c.rmse)
                };
                let hybrids_not_worse = complete.then(|| {
                    let base = rmse(ModelKind::None.name()).unwrap();
                    [ModelKind::Pso, ModelKind::Gwo]
                        .iter()
                        .all(|m| rmse(m.name()).unwrap() <= base)
                });
                YearOrdering {
                    year,
                    order_preserved: computed_order.as_ref().map(|c| *c == published_order),
                    published_order,
                    computed_order,
                    hybrids_not_worse,
                }
            })
            .collect();
        Comparison {
            r2_tolerance: R2_TOLERANCE,
            failed_cells: rows.iter().filter(|r| r.error.is_some()).count(),
            rows,
            orderings,
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<8} {:>4}  {:>8} {:>9}  {:>8} {:>9}  {:>8} {:>9}  {:<6}",
            "model", "year", "R2", "published", "RMSE", "published", "MAE", "published", "R2 ok"
        );
        let cell = |v: Option<f64>| v.map_or("FAILED".to_string(), |v| format!("{v:.4}"));
        for r in &self.rows {
            let c = r.computed;
            let _ = writeln!(
                s,
                "{:<8} {:>4}  {:>8} {:>9.4}  {:>8} {:>9.4}  {:>8} {:>9.4}  {:<6}",
                r.model,
                r.year,
                cell(c.map(|c| c.r2)),
                r.published.r2,
                cell(c.map(|c| c.rmse)),
                r.published.rmse,
                cell(c.map(|c| c.mae)),
                r.published.mae,
                match r.r2_within_tolerance {
                    Some(true) => "yes",
                    Some(false) => "NO",
                    None => "-",
                }
            );
        }
        let _ = writeln!(s, "\nR2 tolerance: +/-{}", self.r2_tolerance);
        for o in &self.orderings {
            let _ = writeln!(
                s,
                "{}: published RMSE order {}; computed {}; hybrids not worse than svr: {}",
                o.year,
                o.published_order.join(" < "),
                o.computed_order
                    .as_ref()
                    .map_or("incomplete".to_string(), |c| format!(
                        "{} ({})",
                        c.join(" < "),
                        if o.order_preserved == Some(true) {
                            "same"
                        } else {
                            "differs"
                        }
                    )),
                o.hybrids_not_worse
                    .map_or("-", |b| if b { "yes" } else { "NO" })
            );
        }
        if self.failed_cells > 0 {
            let _ = writeln!(s, "{} cell(s) failed", self.failed_cells);
        }
        s
    }
}

/// Runs every model for both years and writes the comparison table. Failed
/// cells are marked in the table and make the command fail after writing.
pub fn cmd_reproduce(cfg: &ExperimentConfig) -> Result<Comparison> {
    let out = Outputs::new(&cfg.output_dir);
    let records = load_station(cfg)?;
    let mut cells = Vec::new();
    for year in REPRODUCE_YEARS {
        let ingested = ingest_records(cfg, &records, year).map_err(|e| format!("{e:#}"));
        for kind in ModelKind::ALL {
            let res = match &ingested {
                Ok(_) => cmd_run(cfg, year, kind).map_err(|e| format!("{e:#}")),
                Err(e) => Err(format!("ingest failed: {e}")),
            };
            if let Err(e) = &res {
                log::error!("{} {year}: {e}", kind.name());
            }
            cells.push((kind, year, res));
        }
    }
    let table = Comparison::build(&cells);
    write_json(&out.comparison_json(), &table)?;
    let text = table.to_text();
    fs::write(out.comparison_txt(), &text)?;
    print!("{text}");
    if table.failed_cells > 0 {
        bail!("{} of {} cells failed", table.failed_cells, cells.len());
    }
    Ok(table)
}
