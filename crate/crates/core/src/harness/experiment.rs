use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generator::{generate_instance, GeneratorSpec};
use super::weights::{weight_defaults, with_group_weights, BackendProfile};
use super::HarnessError;
use crate::anneal::{anneal, Sample, SampleSet, Schedule};
use crate::encode::{co_qubo, CoEncoding, CoEncodingOptions, PenaltyWeights, QuboModel};
use crate::lpref::{lp_gap, solve_lp, LpSolution, LpStatus};
use crate::model::{
    decode_solution, evaluate_allocation, AllocationMatrix, CollateralInstance,
    FeasibilityReport, DEFAULT_EPSILON,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EncodingSelection {
    Balanced,
    Unbalanced,
    #[default]
    Both,
    LpOnly,
}

impl EncodingSelection {
    pub fn encodings(self) -> Vec<CoEncoding> {
        match self {
            EncodingSelection::Balanced => vec![CoEncoding::Balanced],
            EncodingSelection::Unbalanced => vec![CoEncoding::Unbalanced],
            EncodingSelection::Both => vec![CoEncoding::Balanced, CoEncoding::Unbalanced],
            EncodingSelection::LpOnly => vec![],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct WeightOverrides {
    pub balanced: Option<PenaltyWeights>,
    pub unbalanced: Option<PenaltyWeights>,
}

/// Experiment description, read from JSON with these field names. Unset
/// fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Instance file; when absent the instance is generated from `generator`.
    pub instance: Option<PathBuf>,
    pub generator: GeneratorSpec,
    pub bits: u32,
    pub encoding: EncodingSelection,
    pub backend_profile: BackendProfile,
    pub weights: WeightOverrides,
    pub normalize: bool,
    pub cost_quantity_weighted: bool,
    pub schedule: Schedule,
    /// Annealing seeds, one run per (encoding, seed). Empty means
    /// `schedule.seed` only.
    pub seeds: Vec<u64>,
    pub epsilon: f64,
    pub output_dir: PathBuf,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    /// Fill the `runtime_ms` column (makes reports run-dependent).
    pub record_runtime: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            instance: None,
            generator: GeneratorSpec::default(),
            bits: 7,
            encoding: EncodingSelection::Both,
            backend_profile: BackendProfile::Sampler,
            weights: WeightOverrides::default(),
            normalize: true,
            cost_quantity_weighted: false,
            schedule: Schedule::default(),
            seeds: Vec::new(),
            epsilon: DEFAULT_EPSILON,
            output_dir: PathBuf::from("report"),
            workers: None,
            record_runtime: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if !(1..=52).contains(&self.bits) {
            return Err(HarnessError::Config(format!("bits must be in 1..=52, got {}", self.bits)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon < 1.0) {
            return Err(HarnessError::Config("epsilon must be in [0, 1)".into()));
        }
        if self.workers == Some(0) {
            return Err(HarnessError::Config("workers must be >= 1".into()));
        }
        if let Some(p) = &self.instance {
            if !p.is_file() {
                return Err(HarnessError::Config(format!(
                    "instance file {} does not exist",
                    p.display()
                )));
            }
        }
        Ok(())
    }

    pub fn seeds(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            vec![self.schedule.seed]
        } else {
            self.seeds.clone()
        }
    }

    pub fn weights_for(&self, encoding: CoEncoding) -> PenaltyWeights {
        let given = match encoding {
            CoEncoding::Balanced => &self.weights.balanced,
            CoEncoding::Unbalanced => &self.weights.unbalanced,
        };
        given
            .clone()
            .unwrap_or_else(|| weight_defaults(encoding, self.backend_profile))
    }

    pub fn load_instance(&self) -> Result<CollateralInstance, HarnessError> {
        match &self.instance {
            Some(p) => {
                let text = fs::read_to_string(p)
                    .map_err(|e| HarnessError::Config(format!("{}: {e}", p.display())))?;
                Ok(CollateralInstance::from_json(&text)?)
            }
            None => generate_instance(&self.generator),
        }
    }
}

/// One annealing run after decoding and evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub encoding: CoEncoding,
    pub seed: u64,
    pub dimension: usize,
    /// Rank within the sample set of the reported sample.
    pub sample_rank: usize,
    pub energy: f64,
    pub report: FeasibilityReport,
    pub allocation: AllocationMatrix,
    pub gap: Option<f64>,
    pub normalizations: Vec<(String, f64)>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub runtime_ms: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ReportBundle {
    pub instance: CollateralInstance,
    pub lp: LpSolution,
    pub lp_report: FeasibilityReport,
    pub runs: Vec<RunRecord>,
    pub files: Vec<PathBuf>,
}

/// Lowest-energy sample whose decoded allocation is feasible within
/// `epsilon`; falls back to the overall best.
pub fn select_sample(
    set: &SampleSet,
    model: &QuboModel<f64>,
    instance: &CollateralInstance,
    epsilon: f64,
) -> Result<(usize, AllocationMatrix, FeasibilityReport), HarnessError> {
    let eval = |s: &Sample| -> Result<(AllocationMatrix, FeasibilityReport), HarnessError> {
        let q = decode_solution(&s.bits, model.layout(), instance)?;
        let r = evaluate_allocation(&q, instance, epsilon)?;
        Ok((q, r))
    };
    for (rank, s) in set.samples.iter().enumerate() {
        let (q, r) = eval(s)?;
        if r.feasible_within {
            return Ok((rank, q, r));
        }
    }
    let (q, r) = eval(set.best())?;
    Ok((0, q, r))
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}

pub fn write_allocation_csv(path: &Path, q: &AllocationMatrix) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    let m = q.shape().1;
    let mut header = vec!["asset_id".to_string()];
    header.extend((1..=m).map(|j| format!("account_{j}")));
    w.write_record(&header)?;
    for (i, row) in q.rows().iter().enumerate() {
        let mut rec = vec![(i + 1).to_string()];
        rec.extend(row.iter().map(|&v| fmt(v)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_allocation_csv(path: &Path) -> Result<AllocationMatrix, HarnessError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row: Result<Vec<f64>, _> = rec.iter().skip(1).map(str::parse::<f64>).collect();
        rows.push(row.map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?);
    }
    Ok(AllocationMatrix::new(rows)?)
}

pub fn write_exposure_csv(
    path: &Path,
    instance: &CollateralInstance,
    report: &FeasibilityReport,
) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["account_id", "required_usd", "posted_usd", "coverage_pct"])?;
    for (j, acc) in instance.accounts.iter().enumerate() {
        w.write_record([
            (j + 1).to_string(),
            fmt(acc.exposure),
            fmt(report.posted_value[j]),
            fmt(report.exposure_coverage[j] * 100.0),
        ])?;
    }
    w.flush()?;
    Ok(())
}

struct Prepared {
    encoding: CoEncoding,
    model: QuboModel<f64>,
}

fn run_one(
    p: &Prepared,
    seed: u64,
    config: &ExperimentConfig,
    instance: &CollateralInstance,
    lp: &LpSolution,
) -> Result<RunRecord, HarnessError> {
    let start = Instant::now();
    let schedule = Schedule {
        seed,
        ..config.schedule.clone()
    };
    let set = anneal(&p.model, &schedule)?;
    let (rank, allocation, report) = select_sample(&set, &p.model, instance, config.epsilon)?;
    let gap = lp_gap(lp, &report).ok();
    Ok(RunRecord {
        encoding: p.encoding,
        seed,
        dimension: p.model.dimension(),
        sample_rank: rank,
        energy: set.samples[rank].energy,
        report,
        allocation,
        gap,
        normalizations: p
            .model
            .terms()
            .iter()
            .map(|t| (t.name.clone(), t.normalization))
            .collect(),
        warnings: p.model.warnings().to_vec(),
        runtime_ms: config
            .record_runtime
            .then(|| start.elapsed().as_secs_f64() * 1e3),
    })
}

/// Builds, anneals and evaluates every requested encoding against the LP
/// baseline, then writes the report bundle into `config.output_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ReportBundle, HarnessError> {
    config.validate()?;
    let instance = config.load_instance()?;
    let lp_start = Instant::now();
    let lp = solve_lp(&instance).map_err(|e| HarnessError::Config(e.to_string()))?;
    let lp_ms = lp_start.elapsed().as_secs_f64() * 1e3;
    let lp_report = evaluate_allocation(&lp.allocation, &instance, config.epsilon)?;

    let options = CoEncodingOptions {
        bits: config.bits,
        normalize: config.normalize,
        cost_quantity_weighted: config.cost_quantity_weighted,
    };
    let prepared: Vec<Prepared> = config
        .encoding
        .encodings()
        .into_iter()
        .map(|encoding| {
            let w = with_group_weights(
                encoding,
                &config.weights_for(encoding),
                instance.groups.is_some(),
            );
            let model = co_qubo(encoding, &instance, &options, &w)?;
            Ok(Prepared { encoding, model })
        })
        .collect::<Result<_, HarnessError>>()?;
    let jobs: Vec<(usize, u64)> = (0..prepared.len())
        .flat_map(|k| config.seeds().into_iter().map(move |s| (k, s)))
        .collect();

    let execute = || -> Result<Vec<RunRecord>, HarnessError> {
        jobs.par_iter()
            .map(|&(k, seed)| run_one(&prepared[k], seed, config, &instance, &lp))
            .collect()
    };
    let runs = match config.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| HarnessError::Config(e.to_string()))?
            .install(execute)?,
        None => execute()?,
    };

    let bundle = ReportBundle {
        instance,
        lp,
        lp_report,
        runs,
        files: Vec::new(),
    };
    write_bundle(bundle, config, lp_ms)
}

fn write_bundle(
    mut b: ReportBundle,
    config: &ExperimentConfig,
    lp_ms: f64,
) -> Result<ReportBundle, HarnessError> {
    let dir = &config.output_dir;
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let mut path = |name: String| {
        let p = dir.join(name);
        files.push(p.clone());
        p
    };

    fs::write(path("instance.json".into()), b.instance.to_json())?;

    let lp_ok = b.lp.status == LpStatus::Optimal;
    let lp_obj = lp_ok.then_some(b.lp.objective);
    let summary = path("summary.csv".into());
    let mut w = csv::Writer::from_path(&summary)?;
    w.write_record([
        "encoding",
        "backend_profile",
        "seed",
        "objective",
        "lp_objective",
        "gap",
        "feasible",
        "max_exposure_shortfall_pct",
        "runtime_ms",
    ])?;
    w.write_record([
        "lp".to_string(),
        "simplex".to_string(),
        String::new(),
        opt(lp_obj),
        opt(lp_obj),
        opt(lp_ok.then_some(0.0)),
        (lp_ok && b.lp_report.feasible_within).to_string(),
        fmt(b.lp_report.max_exposure_shortfall_pct()),
        opt(config.record_runtime.then_some(lp_ms)),
    ])?;
    for r in &b.runs {
        w.write_record([
            r.encoding.name().to_string(),
            config.backend_profile.name().to_string(),
            r.seed.to_string(),
            fmt(r.report.objective),
            opt(lp_obj),
            opt(r.gap),
            r.report.feasible_within.to_string(),
            fmt(r.report.max_exposure_shortfall_pct()),
            opt(r.runtime_ms),
        ])?;
    }
    w.flush()?;

    if lp_ok {
        write_allocation_csv(&path("allocation_lp.csv".into()), &b.lp.allocation)?;
        write_exposure_csv(&path("exposure_lp.csv".into()), &b.instance, &b.lp_report)?;
    }
    for r in &b.runs {
        let tag = format!("{}_seed{}", r.encoding.name(), r.seed);
        write_allocation_csv(&path(format!("allocation_{tag}.csv")), &r.allocation)?;
        write_exposure_csv(&path(format!("exposure_{tag}.csv")), &b.instance, &r.report)?;
    }

    #[derive(Serialize)]
    struct Details<'a> {
        lp_status: &'static str,
        lp_objective: Option<f64>,
        lp_iterations: usize,
        runs: &'a [RunRecord],
    }
    let details = Details {
        lp_status: b.lp.status.name(),
        lp_objective: lp_obj,
        lp_iterations: b.lp.iterations,
        runs: &b.runs,
    };
    fs::write(
        path("details.json".into()),
        serde_json::to_string_pretty(&details).expect("details serialize"),
    )?;
    b.files = files;
    Ok(b)
}
