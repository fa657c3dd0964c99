use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use abac_infer::cluster::{cluster, group_stats, Clustering};
use abac_infer::error::{ClusterError, EvalError, FormatError, LearnError, PolicyError};
use abac_infer::eval::{evaluate, write_csv, write_json, DatasetResult, DatasetSummary};
use abac_infer::features::{build_learning_data, learn_important_features};
use abac_infer::generate::{generate, Template};
use abac_infer::io::{read_entitlements_checked, read_policy, write_entitlements, write_policy};
use abac_infer::predict::{predict_all, PredictionConfig};
use abac_infer::{ConfigError, Entitlement, Policy, RunConfig};

/// Infer missing attribute values in ABAC object models from entitlements.
#[derive(Parser)]
#[command(name = "abac-infer", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags override its values
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// similarity threshold for splitting groups
    #[arg(long, global = true)]
    st: Option<f64>,
    /// clustering weight of one attribute, e.g. `--weight id=0`
    #[arg(long = "weight", global = true, value_name = "ATTR=W")]
    weights: Vec<String>,
    /// confidence gates: ranks up to HIGH are High, up to MED Medium
    #[arg(long, global = true, value_name = "HIGH,MED")]
    ntcf: Option<String>,
    /// seed for generation and removal
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a synthetic complete policy as JSON
    Generate {
        /// university or projmgmt
        #[arg(long)]
        template: Option<Template>,
        /// number of departments
        #[arg(long)]
        scale: Option<usize>,
        /// output file; stdout when omitted
        #[arg(long, short, value_name = "FILE")]
        output: Option<PathBuf>,
        /// also write the policy's entitlements as CSV
        #[arg(long = "entitlements-output", value_name = "FILE")]
        entitlements_output: Option<PathBuf>,
    },
    /// Write the entitlements a policy grants as CSV
    Entitlements {
        /// policy JSON
        #[arg(long, value_name = "FILE")]
        policy: Option<PathBuf>,
        /// output file; stdout when omitted
        #[arg(long, short, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Group users and resources and report each group as JSON
    Cluster {
        /// policy JSON
        #[arg(long, value_name = "FILE")]
        policy: Option<PathBuf>,
        /// output file; stdout when omitted
        #[arg(long, short, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Rank the features of the triple holding a user, a resource and an action
    Features {
        /// policy JSON
        #[arg(long, value_name = "FILE")]
        policy: Option<PathBuf>,
        /// entitlements CSV with header user,resource,action
        #[arg(long, value_name = "FILE")]
        entitlements: Option<PathBuf>,
        /// any user of the user group
        #[arg(long)]
        user: String,
        /// any resource of the resource group
        #[arg(long)]
        resource: String,
        /// action of the triple
        #[arg(long)]
        action: String,
        /// only the first N features
        #[arg(long)]
        top: Option<usize>,
        /// output file; stdout when omitted
        #[arg(long, short, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Predict every Missing cell of a policy
    Predict {
        /// policy JSON
        #[arg(long, value_name = "FILE")]
        policy: Option<PathBuf>,
        /// entitlements CSV with header user,resource,action
        #[arg(long, value_name = "FILE")]
        entitlements: Option<PathBuf>,
        /// output file; stdout when omitted
        #[arg(long, short, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Remove known values from generated policies and predict them back
    Evaluate {
        /// university or projmgmt
        #[arg(long)]
        template: Option<Template>,
        /// one or more scales, e.g. `1,2,3`
        #[arg(long, value_delimiter = ',')]
        scale: Vec<usize>,
        /// removal percentages, e.g. `3,6,9`
        #[arg(long, value_delimiter = ',')]
        percents: Vec<f64>,
        /// runs per removal percentage
        #[arg(long)]
        runs: Option<usize>,
        /// worker threads; 0 uses every core
        #[arg(long)]
        jobs: Option<usize>,
        /// record wall-clock time per run (makes output vary between runs)
        #[arg(long)]
        timing: bool,
        /// score multi-valued predictions by set equality instead of subset
        #[arg(long)]
        exact_multi: bool,
        /// CSV summary; stdout when omitted
        #[arg(long, short, value_name = "FILE")]
        output: Option<PathBuf>,
        /// per-run, per-cell JSON detail
        #[arg(long, value_name = "FILE")]
        detail: Option<PathBuf>,
    },
}

enum Failure {
    Input(String),
    Internal(String),
}

impl From<FormatError> for Failure {
    fn from(e: FormatError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<PolicyError> for Failure {
    fn from(e: PolicyError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<ClusterError> for Failure {
    fn from(e: ClusterError) -> Self {
        match e {
            ClusterError::Config(c) => c.into(),
            other => Failure::Internal(other.to_string()),
        }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Incomplete(_) | EvalError::Config(_) => Failure::Input(e.to_string()),
            EvalError::Cluster(c) => c.into(),
            EvalError::Policy(p) => Failure::Internal(p.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Failure::Input(msg))) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Ok(Err(Failure::Internal(msg))) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(2)
        }
        Err(_) => ExitCode::from(2),
    }
}

fn resolve(common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::resolve(common.config.as_deref())?;
    if let Some(st) = common.st {
        cfg.st = st;
    }
    for w in &common.weights {
        let (attr, value) = w
            .split_once('=')
            .ok_or_else(|| Failure::Input(format!("--weight expects ATTR=W, got `{w}`")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Failure::Input(format!("--weight `{w}`: `{value}` is not a number")))?;
        cfg.weights.insert(attr.trim().to_string(), value);
    }
    if let Some(n) = &common.ntcf {
        let parts: Vec<&str> = n.split(',').map(str::trim).collect();
        let parsed: Option<Vec<usize>> = parts.iter().map(|p| p.parse().ok()).collect();
        match parsed.as_deref() {
            Some(&[high, med]) => {
                cfg.ntcf = PredictionConfig {
                    num_high: high,
                    num_med: med,
                }
            }
            _ => {
                return Err(Failure::Input(format!(
                    "--ntcf expects HIGH,MED, got `{n}`"
                )))
            }
        }
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = resolve(&cli.common)?;
    match cli.cmd {
        Cmd::Generate {
            template,
            scale,
            output,
            entitlements_output,
        } => {
            if let Some(t) = template {
                cfg.template = t;
            }
            if let Some(s) = scale {
                cfg.scale = s;
            }
            cfg.validate()?;
            let g = generate(&cfg.gen_spec())?;
            emit(output.as_deref(), |w| write_policy(w, &g.policy))?;
            if let Some(path) = entitlements_output {
                emit(Some(&path), |w| write_entitlements(w, &g.entitlements))?;
            }
            eprintln!(
                "{}: {} objects, {} attribute values, {} entitlements",
                cfg.gen_spec().dataset_name(),
                g.objects,
                g.attrs,
                g.entitlements.len()
            );
        }
        Cmd::Entitlements { policy, output } => {
            cfg.validate()?;
            let p = load_policy(policy.or(cfg.policy))?;
            let e0 = p.meaning()?;
            emit(output.as_deref(), |w| write_entitlements(w, &e0))?;
        }
        Cmd::Cluster { policy, output } => {
            cfg.validate()?;
            let p = load_policy(policy.or(cfg.policy.clone()))?;
            let c = cluster(&p.model, &cfg.clustering())?;
            let doc = cluster_report(&p, &c, &cfg)?;
            emit_json(output.as_deref(), &doc)?;
        }
        Cmd::Features {
            policy,
            entitlements,
            user,
            resource,
            action,
            top,
            output,
        } => {
            cfg.validate()?;
            let p = load_policy(policy.or(cfg.policy.clone()))?;
            let e0 = load_entitlements(entitlements.or(cfg.entitlements.clone()), &p)?;
            let c = cluster(&p.model, &cfg.clustering())?;
            let gu = c
                .group_of(&user)
                .filter(|g| g.class == abac_infer::Class::User);
            let gr = c
                .group_of(&resource)
                .filter(|g| g.class == abac_infer::Class::Resource);
            let (Some(gu), Some(gr)) = (gu, gr) else {
                return Err(Failure::Input(format!(
                    "`{user}` must be a user and `{resource}` a resource of the policy"
                )));
            };
            if !p.actions.contains(&action) {
                return Err(Failure::Input(format!("unknown action `{action}`")));
            }
            let ld = build_learning_data(gu, gr, &action, &e0, &p.model).map_err(learn_failure)?;
            let ranked = learn_important_features(&ld).map_err(learn_failure)?;
            let features: Vec<_> = ranked
                .entries
                .iter()
                .take(top.unwrap_or(usize::MAX))
                .map(|e| {
                    json!({
                        "rank": e.rank,
                        "feature": e.feature.to_string(),
                        "kind": e.feature.kind_name(),
                        "coefficient": e.coefficient,
                        "invariant": e.invariant,
                        "evidence": e.evidence,
                    })
                })
                .collect();
            let doc = json!({
                "userGroup": gu.id,
                "resourceGroup": gr.id,
                "action": action,
                "rows": ranked.rows,
                "positives": ranked.positives,
                "intercept": ranked.intercept,
                "features": features,
            });
            emit_json(output.as_deref(), &doc)?;
        }
        Cmd::Predict {
            policy,
            entitlements,
            output,
        } => {
            cfg.validate()?;
            let p = load_policy(policy.or(cfg.policy.clone()))?;
            let e0 = load_entitlements(entitlements.or(cfg.entitlements.clone()), &p)?;
            let c = cluster(&p.model, &cfg.clustering())?;
            let preds = predict_all(&p.model, &e0, &c, &cfg.prediction());
            let nei = preds.iter().filter(|p| p.is_nei()).count();
            emit_json(output.as_deref(), &preds)?;
            eprintln!(
                "{} cells: {} predicted, {} NEI",
                preds.len(),
                preds.len() - nei,
                nei
            );
        }
        Cmd::Evaluate {
            template,
            scale,
            percents,
            runs,
            jobs,
            timing,
            exact_multi,
            output,
            detail,
        } => {
            if let Some(t) = template {
                cfg.template = t;
            }
            if !percents.is_empty() {
                cfg.percents = percents;
            }
            if let Some(r) = runs {
                cfg.runs = r;
            }
            if let Some(j) = jobs {
                cfg.jobs = j;
            }
            cfg.timing |= timing;
            cfg.exact_multi |= exact_multi;
            let scales = if scale.is_empty() {
                vec![cfg.scale]
            } else {
                scale
            };
            let mut results = Vec::new();
            for s in scales {
                cfg.scale = s;
                cfg.validate()?;
                let spec = cfg.gen_spec();
                let g = generate(&spec)?;
                let settings = cfg.eval_settings();
                let reports = evaluate(&g.policy, &settings)?;
                let summary = DatasetSummary {
                    dataset: spec.dataset_name(),
                    objects: g.objects,
                    attrs: g.attrs,
                    entitlements: g.entitlements.len(),
                };
                results.push(DatasetResult {
                    summary,
                    settings,
                    reports,
                });
            }
            emit(output.as_deref(), |w| write_csv(w, &results))?;
            if let Some(path) = detail {
                emit(Some(&path), |w| write_json(w, &results))?;
            }
        }
    }
    Ok(())
}

fn learn_failure(e: LearnError) -> Failure {
    match e {
        LearnError::InsufficientData => Failure::Input(e.to_string()),
        LearnError::Policy(p) => p.into(),
    }
}

fn load_policy(path: Option<PathBuf>) -> Result<Policy, Failure> {
    let path = path.ok_or_else(|| {
        Failure::Input("no policy given (--policy or `policy` in the config)".into())
    })?;
    let file = File::open(&path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    read_policy(BufReader::new(file))
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_entitlements(path: Option<PathBuf>, p: &Policy) -> Result<BTreeSet<Entitlement>, Failure> {
    let path = path.ok_or_else(|| {
        Failure::Input(
            "no entitlements given (--entitlements or `entitlements` in the config)".into(),
        )
    })?;
    let file = File::open(&path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    read_entitlements_checked(BufReader::new(file), &p.model)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn cluster_report(
    p: &Policy,
    c: &Clustering,
    cfg: &RunConfig,
) -> Result<serde_json::Value, Failure> {
    let mut groups = Vec::new();
    for g in c.groups() {
        let stats = group_stats(g, &p.model, &cfg.clustering())?;
        groups.push(json!({
            "id": g.id,
            "class": g.class,
            "signature": g.signature,
            "size": g.len(),
            "members": g.members,
            "similarity": stats,
        }));
    }
    Ok(json!({ "st": cfg.st, "groups": groups }))
}

/// Writes to `path`, or stdout when `None`.
fn emit<F>(path: Option<&Path>, write: F) -> Result<(), Failure>
where
    F: FnOnce(&mut dyn Write) -> Result<(), FormatError>,
{
    let mut buf = Vec::new();
    write(&mut buf)?;
    match path {
        Some(p) => fs::write(p, &buf).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(&buf)?;
            out.flush()?;
            Ok(())
        }
    }
}

fn emit_json<T: serde::Serialize + ?Sized>(path: Option<&Path>, value: &T) -> Result<(), Failure> {
    emit(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")?;
        Ok(())
    })
}
