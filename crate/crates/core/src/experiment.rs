//! Experiment orchestration: configuration, the `(M, trial, prior)` sweep,
//! on-disk artifacts and the criteria report computed from them.
//!
//! Output tree for a run:
//!
//! ```text
//! <output>/manifest.json
//! <output>/true_state.json
//! <output>/cells/m<M>/trial<T>/record.csv
//! <output>/cells/m<M>/trial<T>/chain_<prior>.csv   (+ .json metadata)
//! <output>/cells/m<M>/trial<T>/bootstrap.csv       (+ mle.json)
//! <output>/summaries.csv
//! <output>/criteria.csv
//! <output>/report.json
//! ```
//!
//! Every cell is written through a temporary file and renamed into place, so
//! an interrupted run can be resumed: finished cells are skipped.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::criteria::{
    criterion_1_5_scaled, criterion_1_scaled, fit_power_law, summarize, sufficient_m, Criterion,
    CriterionReport, Measure, PosteriorSummary, PowerLawFit, Source,
};
use crate::entanglement::{
    negativity_pair, smolin_state, w_noise_state, w_separability_threshold, NegativityPair,
};
use crate::error::{Error, Result};
use crate::inference::{bootstrap_negativity, mle_estimate};
use crate::povm::{sic_qubit, simulate_counts, MeasurementRecord, SicPovm};
use crate::priors::{PriorKind, PriorSpec};
use crate::qstate::{CMatrix, DensityMatrix};
use crate::sampler::{mh_chain, read_chain_csv, ChainConfig, ChainMetadata};
use crate::stats::mean;
use crate::rng_from_seed;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrueState {
    WNoise { q: f64 },
    Smolin,
    File { path: PathBuf },
}

impl TrueState {
    pub fn build(&self, n_qubits: usize) -> Result<DensityMatrix> {
        match self {
            TrueState::WNoise { q } => w_noise_state(*q, n_qubits),
            TrueState::Smolin => {
                if n_qubits != 4 {
                    return Err(Error::validation("n_qubits", "the Smolin state has 4 qubits"));
                }
                Ok(smolin_state())
            }
            TrueState::File { path } => {
                let rho: DensityMatrix =
                    serde_json::from_reader(BufReader::new(fs::File::open(path)?))?;
                if rho.n_qubits() != n_qubits {
                    return Err(Error::validation(
                        "true_state.path",
                        format!("file holds {} qubits, config says {n_qubits}", rho.n_qubits()),
                    ));
                }
                Ok(rho)
            }
        }
    }
}

impl std::str::FromStr for TrueState {
    type Err = Error;

    /// `w:<q>`, `smolin`, or `file:<path>`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "smolin" {
            return Ok(TrueState::Smolin);
        }
        if let Some(q) = s.strip_prefix("w:") {
            let q = q
                .parse::<f64>()
                .map_err(|e| Error::arg(format!("bad q in `{s}`: {e}")))?;
            return Ok(TrueState::WNoise { q });
        }
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(TrueState::File { path: path.into() });
        }
        Err(Error::arg(format!(
            "unknown state `{s}` (expected w:<q>, smolin or file:<path>)"
        )))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub true_state: TrueState,
    pub n_qubits: usize,
    pub m_values: Vec<u64>,
    pub priors: Vec<PriorSpec>,
    pub chain: ChainConfig,
    pub bootstrap_resamples: usize,
    pub trials_per_m: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Multiplier on the error bars in both criteria.
    pub width_multiplier: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            true_state: TrueState::WNoise { q: 0.6 },
            n_qubits: 4,
            m_values: vec![10_000, 100_000, 1_000_000],
            priors: vec![PriorSpec::pure(PriorKind::Z), PriorSpec::pure(PriorKind::Gh)],
            chain: ChainConfig::default(),
            bootstrap_resamples: 100,
            trials_per_m: 10,
            seed: 0,
            output_dir: PathBuf::from("entcrit-out"),
            width_multiplier: 1.0,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_reader(BufReader::new(fs::File::open(path)?))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=6).contains(&self.n_qubits) {
            return Err(Error::validation("n_qubits", "must be between 2 and 6"));
        }
        if let TrueState::WNoise { q } = self.true_state {
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::validation("true_state.q", "must lie in [0, 1]"));
            }
        }
        if matches!(self.true_state, TrueState::Smolin) && self.n_qubits != 4 {
            return Err(Error::validation("n_qubits", "the Smolin state has 4 qubits"));
        }
        if self.m_values.is_empty() {
            return Err(Error::validation("m_values", "must not be empty"));
        }
        for (i, &m) in self.m_values.iter().enumerate() {
            if m == 0 {
                return Err(Error::validation(format!("m_values[{i}]"), "must be positive"));
            }
            if i > 0 && m <= self.m_values[i - 1] {
                return Err(Error::validation(
                    format!("m_values[{i}]"),
                    "must be strictly increasing",
                ));
            }
        }
        if self.priors.is_empty() {
            return Err(Error::validation("priors", "must not be empty"));
        }
        let mut labels = Vec::new();
        for (i, p) in self.priors.iter().enumerate() {
            p.validate().map_err(|e| match e {
                Error::Validation { path, message } => {
                    Error::validation(format!("priors[{i}].{path}"), message)
                }
                other => other,
            })?;
            if labels.contains(&p.label()) {
                return Err(Error::validation(
                    format!("priors[{i}]"),
                    format!("duplicate prior `{}`", p.label()),
                ));
            }
            labels.push(p.label());
        }
        self.chain.validate()?;
        if self.bootstrap_resamples < 2 {
            return Err(Error::validation("bootstrap_resamples", "must be at least 2"));
        }
        if self.trials_per_m == 0 {
            return Err(Error::validation("trials_per_m", "must be at least 1"));
        }
        if !(self.width_multiplier > 0.0 && self.width_multiplier.is_finite()) {
            return Err(Error::validation("width_multiplier", "must be positive"));
        }
        Ok(())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed of `parent` for the given salt.
pub fn derive_seed(parent: u64, salt: u64) -> u64 {
    splitmix64(parent ^ splitmix64(salt))
}

fn label_salt(label: &str) -> u64 {
    // FNV-1a
    label
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Seed for one `(m, trial)` cell; children are derived per purpose.
pub fn trial_seed(master: u64, m: u64, trial: usize) -> u64 {
    derive_seed(derive_seed(master, m), trial as u64)
}

pub fn record_seed(master: u64, m: u64, trial: usize) -> u64 {
    derive_seed(trial_seed(master, m, trial), label_salt("record"))
}

pub fn chain_seed(master: u64, m: u64, trial: usize, prior: &PriorSpec) -> u64 {
    derive_seed(trial_seed(master, m, trial), label_salt(&prior.label()))
}

pub fn bootstrap_seed(master: u64, m: u64, trial: usize) -> u64 {
    derive_seed(trial_seed(master, m, trial), label_salt("bootstrap"))
}

pub fn cell_dir(output: &Path, m: u64, trial: usize) -> PathBuf {
    output.join("cells").join(format!("m{m}")).join(format!("trial{trial:03}"))
}

/// Write `bytes` to `path` through a sibling temp file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    {
        let mut f = BufWriter::new(fs::File::create(&tmp)?);
        f.write_all(bytes)?;
        f.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub crate_version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub config: ExperimentConfig,
}

impl Manifest {
    pub fn for_config(config: &ExperimentConfig) -> Result<Self> {
        let canonical = serde_json::to_vec(config)?;
        let digest = Sha256::digest(&canonical);
        let config_sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
        Ok(Manifest {
            format_version: FORMAT_VERSION,
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256,
            seed: config.seed,
            config: config.clone(),
        })
    }

    pub fn load(output: &Path) -> Result<Self> {
        let path = output.join("manifest.json");
        Ok(serde_json::from_reader(BufReader::new(fs::File::open(path)?))?)
    }
}

#[derive(Clone, Copy, Debug)]
enum Task {
    Chain { m: u64, trial: usize, prior: usize },
    Bootstrap { m: u64, trial: usize },
}

/// Run (or resume) the full sweep, then build the report.
pub fn run_experiment(config: &ExperimentConfig, workers: usize) -> Result<ReportSummary> {
    config.validate()?;
    let out = &config.output_dir;
    fs::create_dir_all(out)?;

    let manifest = Manifest::for_config(config)?;
    let manifest_path = out.join("manifest.json");
    if manifest_path.exists() {
        let existing = Manifest::load(out)?;
        if existing.config_sha256 != manifest.config_sha256 {
            return Err(Error::validation(
                "output_dir",
                format!(
                    "{} already holds a run with a different config",
                    out.display()
                ),
            ));
        }
    } else {
        write_json_atomic(&manifest_path, &manifest)?;
    }

    let truth = config.true_state.build(config.n_qubits)?;
    write_json_atomic(&out.join("true_state.json"), &truth)?;
    let povm = SicPovm::new(config.n_qubits)?;

    for &m in &config.m_values {
        for trial in 0..config.trials_per_m {
            let dir = cell_dir(out, m, trial);
            fs::create_dir_all(&dir)?;
            let path = dir.join("record.csv");
            if !path.exists() {
                let mut rng = rng_from_seed(record_seed(config.seed, m, trial));
                let record = simulate_counts(&truth, &povm, m, &mut rng)?;
                let mut buf = Vec::new();
                record.write_csv(&mut buf)?;
                write_atomic(&path, &buf)?;
            }
        }
    }

    let mut tasks = Vec::new();
    for &m in &config.m_values {
        for trial in 0..config.trials_per_m {
            for prior in 0..config.priors.len() {
                tasks.push(Task::Chain { m, trial, prior });
            }
            tasks.push(Task::Bootstrap { m, trial });
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::arg(format!("cannot build worker pool: {e}")))?;
    pool.install(|| {
        tasks
            .par_iter()
            .map(|task| run_task(config, &povm, *task))
            .collect::<Result<Vec<()>>>()
    })?;

    report(out)
}

fn run_task(config: &ExperimentConfig, povm: &SicPovm, task: Task) -> Result<()> {
    let out = &config.output_dir;
    match task {
        Task::Chain { m, trial, prior } => {
            let spec = &config.priors[prior];
            let dir = cell_dir(out, m, trial);
            let csv_path = dir.join(format!("chain_{}.csv", spec.label()));
            let meta_path = dir.join(format!("chain_{}.json", spec.label()));
            if csv_path.exists() && meta_path.exists() {
                return Ok(());
            }
            let record = MeasurementRecord::load(&dir.join("record.csv"))?;
            let chain_cfg = ChainConfig {
                seed: chain_seed(config.seed, m, trial, spec),
                ..config.chain.clone()
            };
            let chain = mh_chain(spec, &record, povm, &chain_cfg)?;
            write_json_atomic(&meta_path, &chain.metadata(&chain_cfg, spec, &record))?;
            let mut buf = Vec::new();
            chain.write_csv(&mut buf)?;
            write_atomic(&csv_path, &buf)
        }
        Task::Bootstrap { m, trial } => {
            let dir = cell_dir(out, m, trial);
            let csv_path = dir.join("bootstrap.csv");
            if csv_path.exists() && dir.join("mle.json").exists() {
                return Ok(());
            }
            let record = MeasurementRecord::load(&dir.join("record.csv"))?;
            let mle = mle_estimate(&record, povm)?;
            let mut rng = rng_from_seed(bootstrap_seed(config.seed, m, trial));
            let pairs = bootstrap_negativity(&mle, povm, m, config.bootstrap_resamples, &mut rng)?;
            write_json_atomic(&dir.join("mle.json"), &mle)?;
            let mut buf = Vec::new();
            write_bootstrap_csv(&mut buf, &pairs, &negativity_pair(&mle)?)?;
            write_atomic(&csv_path, &buf)
        }
    }
}

/// Rows `(resample, n1, n2)`; resample `-1` holds the point estimate.
pub fn write_bootstrap_csv<W: Write>(
    out: W,
    pairs: &[NegativityPair],
    point: &NegativityPair,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["resample", "n1", "n2"])?;
    w.write_record(["-1".to_string(), point.n1.to_string(), point.n2.to_string()])?;
    for (i, p) in pairs.iter().enumerate() {
        w.write_record([i.to_string(), p.n1.to_string(), p.n2.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct BootstrapRow {
    resample: i64,
    n1: f64,
    n2: f64,
}

/// Bootstrap resamples and the point estimate from a bootstrap CSV.
pub fn read_bootstrap_csv(path: &Path) -> Result<(Vec<NegativityPair>, NegativityPair)> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut pairs = Vec::new();
    let mut point = None;
    for row in reader.deserialize::<BootstrapRow>() {
        let row = row?;
        let pair = NegativityPair {
            n1: row.n1,
            n2: row.n2,
        };
        if row.resample < 0 {
            point = Some(pair);
        } else {
            pairs.push(pair);
        }
    }
    let point = point.ok_or_else(|| Error::Format {
        path: path.display().to_string(),
        message: "missing point-estimate row".into(),
    })?;
    Ok((pairs, point))
}

/// Criterion verdicts over the M sweep for one comparison and measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionSeries {
    pub criterion: Criterion,
    /// Prior labels compared, e.g. `z~gh` or `gh~mle`.
    pub comparison: String,
    pub measure: Measure,
    pub reports: Vec<CriterionReport>,
    pub sufficient_m: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitEntry {
    /// `gap` for a criterion gap series, `err` for mean error bars.
    pub quantity: String,
    pub comparison: String,
    pub measure: Measure,
    pub fit: Option<PowerLawFit>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub series: Vec<CriterionSeries>,
    pub fits: Vec<FitEntry>,
    /// Criterion 1 over both measures: the larger of the two thresholds.
    pub criterion_1_sufficient_m: Option<u64>,
    /// Criterion 1.5 over every prior and both measures.
    pub criterion_1_5_sufficient_m: Option<u64>,
}

/// Per-`(m, trial)` summaries keyed by prior label. The `mle` entry holds
/// N(rho_MLE) as its mean and the bootstrap spread as its error.
type SummaryGrid = BTreeMap<u64, Vec<BTreeMap<String, PosteriorSummary>>>;

fn load_summaries(config: &ExperimentConfig, out: &Path) -> Result<SummaryGrid> {
    let mut grid = SummaryGrid::new();
    for &m in &config.m_values {
        let mut trials = Vec::new();
        for trial in 0..config.trials_per_m {
            let dir = cell_dir(out, m, trial);
            let mut cell = BTreeMap::new();
            for spec in &config.priors {
                let path = dir.join(format!("chain_{}.csv", spec.label()));
                let rows = read_chain_csv(BufReader::new(fs::File::open(&path)?))?;
                let pairs: Vec<NegativityPair> = rows
                    .iter()
                    .map(|r| NegativityPair { n1: r.n1, n2: r.n2 })
                    .collect();
                cell.insert(spec.label(), summarize(&pairs, Source::from(spec.kind), m)?);
            }
            let (pairs, point) = read_bootstrap_csv(&dir.join("bootstrap.csv"))?;
            let mut mle = summarize(&pairs, Source::MleBootstrap, m)?;
            mle.mean_n1 = point.n1;
            mle.mean_n2 = point.n2;
            cell.insert("mle".to_string(), mle);
            trials.push(cell);
        }
        grid.insert(m, trials);
    }
    Ok(grid)
}

/// Recompute summaries, criteria and fits from the files under `out`.
/// Reads only stored artifacts, so re-running never changes the numbers.
pub fn report(out: &Path) -> Result<ReportSummary> {
    let manifest = Manifest::load(out)?;
    let config = manifest.config;
    let grid = load_summaries(&config, out)?;
    let width = config.width_multiplier;

    let mut summaries_csv = csv::Writer::from_writer(Vec::new());
    summaries_csv.write_record(["m", "trial", "source", "measure", "mean", "err"])?;
    for (m, trials) in &grid {
        for (t, cell) in trials.iter().enumerate() {
            for (label, s) in cell {
                for measure in Measure::ALL {
                    summaries_csv.write_record([
                        m.to_string(),
                        t.to_string(),
                        label.clone(),
                        format!("{measure:?}"),
                        s.mean(measure).to_string(),
                        s.err(measure).to_string(),
                    ])?;
                }
            }
        }
    }

    // comparisons: (criterion, name, left label, right label)
    let mut comparisons: Vec<(Criterion, String, String, String)> = Vec::new();
    let first_of = |kind| config.priors.iter().find(|p| p.kind == kind).map(|p| p.label());
    if let (Some(z), Some(gh)) = (first_of(PriorKind::Z), first_of(PriorKind::Gh)) {
        comparisons.push((Criterion::C1, format!("{z}~{gh}"), z, gh));
    }
    for p in &config.priors {
        let l = p.label();
        comparisons.push((Criterion::C1_5, format!("{l}~mle"), l, "mle".to_string()));
    }

    let mut series = Vec::new();
    let mut fits = Vec::new();
    for (criterion, name, left, right) in &comparisons {
        for measure in Measure::ALL {
            let mut reports = Vec::new();
            for (&m, trials) in &grid {
                let per_trial = trials
                    .iter()
                    .map(|cell| {
                        let (a, b) = (&cell[left], &cell[right]);
                        match criterion {
                            Criterion::C1 => criterion_1_scaled(a, b, measure, width),
                            Criterion::C1_5 => criterion_1_5_scaled(a, b, measure, width),
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                let gap = mean(&per_trial.iter().map(|r| r.gap).collect::<Vec<_>>());
                let budget = mean(&per_trial.iter().map(|r| r.budget).collect::<Vec<_>>());
                reports.push(CriterionReport::new(m, gap, budget, *criterion, measure));
            }
            let gap_points: Vec<(f64, f64)> = reports.iter().map(|r| (r.m as f64, r.gap)).collect();
            fits.push(FitEntry {
                quantity: "gap".into(),
                comparison: name.clone(),
                measure,
                fit: fit_power_law(&gap_points).ok(),
            });
            series.push(CriterionSeries {
                criterion: *criterion,
                comparison: name.clone(),
                measure,
                sufficient_m: sufficient_m(&reports),
                reports,
            });
        }
    }

    let mut labels: Vec<String> = config.priors.iter().map(|p| p.label()).collect();
    labels.push("mle".into());
    for label in &labels {
        for measure in Measure::ALL {
            let points: Vec<(f64, f64)> = grid
                .iter()
                .map(|(&m, trials)| {
                    let errs: Vec<f64> = trials.iter().map(|c| c[label].err(measure)).collect();
                    (m as f64, mean(&errs))
                })
                .collect();
            fits.push(FitEntry {
                quantity: "err".into(),
                comparison: label.clone(),
                measure,
                fit: fit_power_law(&points).ok(),
            });
        }
    }

    let combined = |which: Criterion| -> Option<u64> {
        let picked: Vec<Option<u64>> = series
            .iter()
            .filter(|s| s.criterion == which)
            .map(|s| s.sufficient_m)
            .collect();
        if picked.is_empty() || picked.iter().any(Option::is_none) {
            None
        } else {
            picked.into_iter().flatten().max()
        }
    };
    let summary = ReportSummary {
        criterion_1_sufficient_m: combined(Criterion::C1),
        criterion_1_5_sufficient_m: combined(Criterion::C1_5),
        series,
        fits,
    };

    let mut criteria_csv = csv::Writer::from_writer(Vec::new());
    criteria_csv.write_record([
        "m",
        "criterion",
        "comparison",
        "measure",
        "gap",
        "budget",
        "satisfied",
    ])?;
    for s in &summary.series {
        for r in &s.reports {
            criteria_csv.write_record([
                r.m.to_string(),
                format!("{:?}", r.which),
                s.comparison.clone(),
                format!("{:?}", r.measure),
                r.gap.to_string(),
                r.budget.to_string(),
                r.satisfied.to_string(),
            ])?;
        }
    }

    let into_bytes = |w: csv::Writer<Vec<u8>>| {
        w.into_inner()
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
    };
    write_atomic(&out.join("summaries.csv"), &into_bytes(summaries_csv)?)?;
    write_atomic(&out.join("criteria.csv"), &into_bytes(criteria_csv)?)?;
    write_json_atomic(&out.join("report.json"), &summary)?;
    Ok(summary)
}

/// Read back every chain metadata file of a run.
pub fn load_chain_metadata(out: &Path) -> Result<Vec<ChainMetadata>> {
    let config = Manifest::load(out)?.config;
    let mut metas = Vec::new();
    for &m in &config.m_values {
        for trial in 0..config.trials_per_m {
            for spec in &config.priors {
                let path = cell_dir(out, m, trial).join(format!("chain_{}.json", spec.label()));
                metas.push(serde_json::from_reader(BufReader::new(fs::File::open(path)?))?);
            }
        }
    }
    Ok(metas)
}

/// Outcome of one golden-value check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GoldenCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Reference values every build must reproduce: SIC symmetry, Smolin
/// negativities, the noisy-W benchmark pair and its separability thresholds.
pub fn verify_golden() -> Result<Vec<GoldenCheck>> {
    let mut checks = Vec::new();

    let els = sic_qubit();
    let sum = els.iter().fold(CMatrix::zeros(2, 2), |acc, e| acc + e);
    let norm_err = (sum - CMatrix::identity(2, 2))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    let mut overlap_err = 0.0f64;
    for a in 0..4 {
        for b in 0..4 {
            let want = if a == b { 0.25 } else { 1.0 / 12.0 };
            let got = (&els[a] * &els[b]).trace();
            overlap_err = overlap_err.max((got.re - want).abs()).max(got.im.abs());
        }
    }
    checks.push(GoldenCheck {
        name: "sic_normalization",
        passed: norm_err <= 1e-12,
        detail: format!("max |sum Pi - I| = {norm_err:e}"),
    });
    checks.push(GoldenCheck {
        name: "sic_symmetry",
        passed: overlap_err <= 1e-12,
        detail: format!("max overlap error = {overlap_err:e}"),
    });

    let smolin = negativity_pair(&smolin_state())?;
    checks.push(GoldenCheck {
        name: "smolin_negativities",
        passed: smolin.n1.abs() <= 1e-10 && (smolin.n2 - 0.5).abs() <= 1e-10,
        detail: format!("(N1, N2) = ({}, {}), expected (0, 0.5)", smolin.n1, smolin.n2),
    });

    let w = negativity_pair(&w_noise_state(0.8, 4)?)?;
    checks.push(GoldenCheck {
        name: "noisy_w_q0.8",
        passed: (w.n1 - 0.3875).abs() <= 5e-4 && (w.n2 - 0.3339).abs() <= 5e-4,
        detail: format!("(N1, N2) = ({:.6}, {:.6}), expected (0.3875, 0.3339)", w.n1, w.n2),
    });

    let q1 = w_separability_threshold(4, |p| p.n1, 1e-6)?;
    let q2 = w_separability_threshold(4, |p| p.n2, 1e-6)?;
    checks.push(GoldenCheck {
        name: "threshold_n1",
        passed: (q1 - 0.1112).abs() <= 5e-4,
        detail: format!("q = {q1:.6}, expected 0.1112"),
    });
    checks.push(GoldenCheck {
        name: "threshold_n2",
        passed: (q2 - 0.1262).abs() <= 5e-4,
        detail: format!("q = {q2:.6}, expected 0.1262"),
    });
    Ok(checks)
}
