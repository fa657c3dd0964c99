//! Run configuration shared by the CLI subcommands. Values come from the
//! defaults, then an optional JSON file, then command-line flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cluster::ClusteringConfig;
use crate::error::{ConfigError, FormatError};
use crate::eval::EvalSettings;
use crate::generate::{GenSpec, ProjectMix, Template, UniversityMix};
use crate::predict::PredictionConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct RunConfig {
    /// attribute weights for clustering; unlisted attributes weigh 1.0
    pub weights: BTreeMap<String, f64>,
    pub st: f64,
    pub ntcf: PredictionConfig,
    pub seed: u64,
    pub policy: Option<PathBuf>,
    pub entitlements: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub template: Template,
    pub scale: usize,
    pub university: UniversityMix,
    pub projects: ProjectMix,
    /// removal percentages, e.g. `[3, 6, 9]`
    pub percents: Vec<f64>,
    pub runs: usize,
    pub jobs: usize,
    pub exact_multi: bool,
    pub timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            weights: BTreeMap::new(),
            st: 0.25,
            ntcf: PredictionConfig::default(),
            seed: 1,
            policy: None,
            entitlements: None,
            output: None,
            template: Template::University,
            scale: 1,
            university: UniversityMix::default(),
            projects: ProjectMix::default(),
            percents: vec![3.0, 6.0, 9.0],
            runs: 5,
            jobs: 0,
            exact_multi: false,
            timing: false,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, FormatError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, FormatError> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Defaults, overlaid by `path` when given.
    pub fn resolve(path: Option<&Path>) -> Result<Self, FormatError> {
        match path {
            Some(p) => Self::load(p),
            None => Ok(Self::default()),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.clustering().validate()?;
        self.ntcf.validate()?;
        for &p in &self.percents {
            if !(p > 0.0 && p < 100.0) {
                return Err(ConfigError::Percent(p / 100.0));
            }
        }
        if self.runs == 0 {
            return Err(ConfigError::Other("runs must be at least 1".into()));
        }
        self.gen_spec().validate()
    }

    pub fn clustering(&self) -> ClusteringConfig {
        ClusteringConfig {
            weights: self.weights.clone(),
            st: self.st,
        }
    }

    pub fn prediction(&self) -> PredictionConfig {
        self.ntcf
    }

    pub fn gen_spec(&self) -> GenSpec {
        GenSpec {
            template: self.template,
            scale: self.scale,
            seed: self.seed,
            university: self.university.clone(),
            projects: self.projects.clone(),
        }
    }

    pub fn eval_settings(&self) -> EvalSettings {
        EvalSettings {
            percents: self.percents.iter().map(|p| p / 100.0).collect(),
            runs: self.runs,
            seed: self.seed,
            clustering: self.clustering(),
            prediction: self.prediction(),
            exact_multi: self.exact_multi,
            jobs: self.jobs,
            timing: self.timing,
        }
    }
}
