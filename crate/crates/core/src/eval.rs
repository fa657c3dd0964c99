//! Evaluation by removal: hide a random share of known cells, predict them
//! back, and score coverage and accuracy against the originals.

use std::collections::BTreeSet;
use std::io::Write;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{cluster, ClusteringConfig};
use crate::error::{ConfigError, EvalError, FormatError};
use crate::model::{AttrKind, AttrValue, ObjectModel, ID_ATTR};
use crate::policy::{Entitlement, Policy};
use crate::predict::{predict_all, Confidence, Prediction, PredictionConfig};

/// Below this many eligible cells a removal that rounds to zero removes one cell.
pub const FORCE_ONE_MAX_CELLS: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemovedCell {
    pub object: String,
    pub attr: String,
    pub original: AttrValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovalPlan {
    pub percent: f64,
    pub seed: u64,
    pub eligible: usize,
    pub removed: Vec<RemovedCell>,
}

/// Cells that may be removed: known, non-Null, not `id`. Users first, then
/// resources, in model order; attributes by name.
pub fn eligible_cells(om: &ObjectModel) -> Vec<(&str, &str)> {
    om.users()
        .iter()
        .chain(om.resources())
        .flat_map(|o| {
            o.attrs
                .iter()
                .filter(|(a, v)| a.as_str() != ID_ATTR && !v.is_null() && !v.is_missing())
                .map(move |(a, _)| (o.id.as_str(), a.as_str()))
        })
        .collect()
}

pub fn validate_percent(percent: f64) -> Result<(), ConfigError> {
    if percent > 0.0 && percent < 1.0 {
        Ok(())
    } else {
        Err(ConfigError::Percent(percent))
    }
}

/// Number of cells a removal at `percent` takes from `eligible` cells.
pub fn removal_count(percent: f64, eligible: usize) -> usize {
    let n = (percent * eligible as f64).round() as usize;
    if n == 0 && eligible > 0 && eligible <= FORCE_ONE_MAX_CELLS {
        1
    } else {
        n.min(eligible)
    }
}

/// Sets a uniformly random `percent` of the eligible cells to Missing.
pub fn remove_attributes(
    om: &ObjectModel,
    percent: f64,
    seed: u64,
) -> Result<(ObjectModel, RemovalPlan), ConfigError> {
    validate_percent(percent)?;
    let cells = eligible_cells(om);
    let count = removal_count(percent, cells.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, cells.len(), count).into_vec();
    picked.sort_unstable();
    let mut out = om.clone();
    let mut removed = Vec::with_capacity(count);
    for i in picked {
        let (object, attr) = cells[i];
        let original = out
            .set_value(object, attr, AttrValue::Missing)
            .expect("eligible cell exists");
        removed.push(RemovedCell {
            object: object.to_string(),
            attr: attr.to_string(),
            original,
        });
    }
    Ok((
        out,
        RemovalPlan {
            percent,
            seed,
            eligible: cells.len(),
            removed,
        },
    ))
}

/// Puts the recorded originals back.
pub fn restore(om: &ObjectModel, plan: &RemovalPlan) -> ObjectModel {
    let mut out = om.clone();
    for c in &plan.removed {
        out.set_value(&c.object, &c.attr, c.original.clone())
            .expect("removed cell exists");
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Correct,
    Wrong,
    #[serde(rename = "NEI")]
    Nei,
}

/// Single-valued: the value must equal the original. Multi-valued: the
/// predicted set must be a non-empty subset of the original, or equal to it
/// when `exact_multi` is set.
pub fn score_prediction(pred: &Prediction, original: &AttrValue, exact_multi: bool) -> Verdict {
    if pred.is_nei() {
        return Verdict::Nei;
    }
    let ok = match (pred.kind, original) {
        (AttrKind::Single, AttrValue::Atomic(v)) => {
            pred.values.len() == 1 && pred.values.contains(v)
        }
        (AttrKind::Multi, AttrValue::Set(orig)) => {
            !pred.values.is_empty()
                && if exact_multi {
                    &pred.values == orig
                } else {
                    pred.values.is_subset(orig)
                }
        }
        _ => false,
    };
    if ok {
        Verdict::Correct
    } else {
        Verdict::Wrong
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EvalSettings {
    /// fractions in (0, 1)
    pub percents: Vec<f64>,
    pub runs: usize,
    pub seed: u64,
    pub clustering: ClusteringConfig,
    pub prediction: PredictionConfig,
    pub exact_multi: bool,
    /// worker threads; 0 picks one per core
    pub jobs: usize,
    /// record wall-clock time (makes reports non-reproducible)
    pub timing: bool,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            percents: vec![0.03, 0.06, 0.09],
            runs: 5,
            seed: 1,
            clustering: ClusteringConfig::default(),
            prediction: PredictionConfig::default(),
            exact_multi: false,
            jobs: 0,
            timing: false,
        }
    }
}

impl EvalSettings {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.percents.is_empty() {
            return Err(ConfigError::Other("no removal percentages given".into()));
        }
        for &p in &self.percents {
            validate_percent(p)?;
        }
        if self.runs == 0 {
            return Err(ConfigError::Other("runs must be at least 1".into()));
        }
        self.clustering.validate()?;
        self.prediction.validate()
    }

    /// Removal seed of run `run` at the `pi`-th percentage.
    pub fn run_seed(&self, pi: usize, run: usize) -> u64 {
        // splitmix64 over the triple keeps neighbouring runs uncorrelated
        let mut z = self.seed ^ ((pi as u64) << 32) ^ (run as u64);
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CellOutcome {
    pub object: String,
    pub attr: String,
    pub original: AttrValue,
    pub predicted: Vec<String>,
    pub confidence: Confidence,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunReport {
    pub percent: f64,
    pub run: usize,
    pub seed: u64,
    pub eligible: usize,
    pub removed: usize,
    pub predicted: usize,
    pub correct: usize,
    pub coverage: f64,
    pub accuracy: f64,
    /// nothing was removed, so coverage is reported as 1.0 by convention
    pub zero_removed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed: Option<f64>,
    pub cells: Vec<CellOutcome>,
}

/// Runs at one removal percentage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EvalReport {
    pub percent: f64,
    pub coverage: f64,
    pub coverage_std: f64,
    pub accuracy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed: Option<f64>,
    pub runs: Vec<RunReport>,
}

impl EvalReport {
    pub fn wrong(&self) -> usize {
        self.runs.iter().map(|r| r.predicted - r.correct).sum()
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Sample standard deviation; 0 for fewer than two values.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// One removal, prediction and scoring pass.
pub fn run_once(
    om: &ObjectModel,
    e0: &BTreeSet<Entitlement>,
    percent: f64,
    seed: u64,
    run: usize,
    settings: &EvalSettings,
) -> Result<RunReport, EvalError> {
    let start = Instant::now();
    let (damaged, plan) = remove_attributes(om, percent, seed)?;
    let clustering = cluster(&damaged, &settings.clustering)?;
    let preds = predict_all(&damaged, e0, &clustering, &settings.prediction);
    let elapsed = start.elapsed().as_secs_f64();

    let mut cells = Vec::with_capacity(plan.removed.len());
    for cell in &plan.removed {
        let pred = preds
            .iter()
            .find(|p| p.object == cell.object && p.attr == cell.attr)
            .expect("one prediction per Missing cell");
        cells.push(CellOutcome {
            object: cell.object.clone(),
            attr: cell.attr.clone(),
            original: cell.original.clone(),
            predicted: pred.values.iter().cloned().collect(),
            confidence: pred.confidence,
            verdict: score_prediction(pred, &cell.original, settings.exact_multi),
        });
    }
    let removed = cells.len();
    let predicted = cells.iter().filter(|c| c.verdict != Verdict::Nei).count();
    let correct = cells
        .iter()
        .filter(|c| c.verdict == Verdict::Correct)
        .count();
    Ok(RunReport {
        percent,
        run,
        seed,
        eligible: plan.eligible,
        removed,
        predicted,
        correct,
        coverage: if removed == 0 {
            1.0
        } else {
            predicted as f64 / removed as f64
        },
        accuracy: if predicted == 0 {
            1.0
        } else {
            correct as f64 / predicted as f64
        },
        zero_removed: removed == 0,
        elapsed: settings.timing.then_some(elapsed),
        cells,
    })
}

/// `settings.runs` independent removals per percentage, in parallel. Reports
/// come back ordered by percentage, runs by index.
pub fn evaluate(policy: &Policy, settings: &EvalSettings) -> Result<Vec<EvalReport>, EvalError> {
    settings.validate()?;
    let missing = policy.model.missing_cell_count();
    if missing > 0 {
        return Err(EvalError::Incomplete(missing));
    }
    let e0 = policy.meaning()?;
    let jobs: Vec<(usize, usize)> = (0..settings.percents.len())
        .flat_map(|pi| (0..settings.runs).map(move |r| (pi, r)))
        .collect();
    let work = || {
        jobs.par_iter()
            .map(|&(pi, r)| {
                run_once(
                    &policy.model,
                    &e0,
                    settings.percents[pi],
                    settings.run_seed(pi, r),
                    r,
                    settings,
                )
            })
            .collect::<Result<Vec<_>, _>>()
    };
    let runs = if settings.jobs == 0 {
        work()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(settings.jobs)
            .build()
            .map_err(|e| ConfigError::Other(format!("thread pool: {e}")))?
            .install(work)?
    };

    let mut reports = Vec::with_capacity(settings.percents.len());
    let mut it = runs.into_iter();
    for &percent in &settings.percents {
        let runs: Vec<RunReport> = it.by_ref().take(settings.runs).collect();
        let cov: Vec<f64> = runs.iter().map(|r| r.coverage).collect();
        let acc: Vec<f64> = runs.iter().map(|r| r.accuracy).collect();
        let elapsed = if settings.timing {
            Some(mean(
                &runs.iter().filter_map(|r| r.elapsed).collect::<Vec<_>>(),
            ))
        } else {
            None
        };
        reports.push(EvalReport {
            percent,
            coverage: mean(&cov),
            coverage_std: std_dev(&cov),
            accuracy: mean(&acc),
            elapsed,
            runs,
        });
    }
    Ok(reports)
}

/// Size columns of a dataset row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DatasetSummary {
    pub dataset: String,
    pub objects: usize,
    pub attrs: usize,
    pub entitlements: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DatasetResult {
    pub summary: DatasetSummary,
    pub settings: EvalSettings,
    pub reports: Vec<EvalReport>,
}

impl DatasetResult {
    /// Accuracy over every prediction of every run.
    pub fn accuracy(&self) -> f64 {
        let (mut p, mut c) = (0, 0);
        for r in self.reports.iter().flat_map(|r| &r.runs) {
            p += r.predicted;
            c += r.correct;
        }
        if p == 0 {
            1.0
        } else {
            c as f64 / p as f64
        }
    }
}

fn percent_label(p: f64) -> String {
    let v = p * 100.0;
    if (v - v.round()).abs() < 1e-9 {
        format!("{}", v.round() as i64)
    } else {
        format!("{v}")
    }
}

/// One row per dataset: size columns, overall accuracy, then coverage, its
/// standard deviation and mean run time for each percentage. Time cells stay
/// empty unless timing was recorded.
pub fn write_csv<W: Write>(w: W, results: &[DatasetResult]) -> Result<(), FormatError> {
    let mut out = csv::Writer::from_writer(w);
    let percents: Vec<f64> = results
        .first()
        .map(|r| r.settings.percents.clone())
        .unwrap_or_default();
    let mut header = vec![
        "dataset".to_string(),
        "objs".into(),
        "attrs".into(),
        "entitlements".into(),
        "acc".into(),
    ];
    for p in &percents {
        let l = percent_label(*p);
        header.extend([format!("cov_{l}"), format!("sd_{l}"), format!("time_{l}")]);
    }
    out.write_record(&header)?;
    for r in results {
        let mut row = vec![
            r.summary.dataset.clone(),
            r.summary.objects.to_string(),
            r.summary.attrs.to_string(),
            r.summary.entitlements.to_string(),
            format!("{:.4}", r.accuracy()),
        ];
        for rep in &r.reports {
            row.push(format!("{:.4}", rep.coverage));
            row.push(format!("{:.4}", rep.coverage_std));
            row.push(rep.elapsed.map(|t| format!("{t:.3}")).unwrap_or_default());
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(mut w: W, results: &[DatasetResult]) -> Result<(), FormatError> {
    serde_json::to_writer_pretty(&mut w, results)?;
    w.write_all(b"\n")?;
    Ok(())
}
