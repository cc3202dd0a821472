//! Replicated simulate → count → fit studies with aggregate tables.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cdegree::{count_common, distribution_csv, empirical_distribution, fit_tail_index, FitOptions, Restriction};
use crate::error::{Error, Result};
use crate::model::{scaling_b, GraphexSpec, MarginalEvaluator, SpecConfig};
use crate::rng::{derive_seed, mix64};
use crate::simulator::export::write_atomic;
use crate::simulator::{choose_eta_max, sample_graph_blocked, sample_points, TruncationReport};
use crate::theory::{bound_interval, BoundInterval};

/// Replications may fail their fit up to this fraction before the run aborts.
pub const MAX_FAILURE_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RestrictionConfig {
    pub epsilon: f64,
}

fn default_t() -> f64 {
    1000.0
}
fn default_replications() -> usize {
    500
}
fn default_budget() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub spec: SpecConfig,
    #[serde(default = "default_t")]
    pub t: f64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_budget")]
    pub missed_edge_budget: f64,
    #[serde(default)]
    pub fit: FitOptions,
    #[serde(default)]
    pub restriction: Option<RestrictionConfig>,
    /// Output directory; nothing is written when absent.
    #[serde(default)]
    pub outputs: Option<PathBuf>,
    /// Worker threads; the global pool when absent.
    #[serde(default)]
    pub threads: Option<usize>,
    /// Also write one `k,prob` file per replication.
    #[serde(default)]
    pub keep_dists: bool,
}

impl ExperimentConfig {
    pub fn new(spec: SpecConfig) -> Self {
        Self {
            spec,
            t: default_t(),
            replications: default_replications(),
            master_seed: 0,
            missed_edge_budget: default_budget(),
            fit: FitOptions::default(),
            restriction: None,
            outputs: None,
            threads: None,
            keep_dists: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<GraphexSpec> {
        let bad = |m: String| Err(Error::Config(m));
        if self.replications < 1 {
            return bad("replications must be at least 1".into());
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return bad(format!("t must be positive and finite, got {}", self.t));
        }
        if !(self.fit.r2_target > 0.0 && self.fit.r2_target < 1.0) {
            return bad(format!("fit.r2_target must lie in (0, 1), got {}", self.fit.r2_target));
        }
        if self.fit.min_points < 2 {
            return bad("fit.min_points must be at least 2".into());
        }
        if !(self.missed_edge_budget > 0.0) {
            return bad(format!(
                "missed_edge_budget must be positive, got {}",
                self.missed_edge_budget
            ));
        }
        if let Some(r) = self.restriction {
            if !(r.epsilon > 0.0 && r.epsilon.is_finite()) {
                return bad(format!("restriction.epsilon must be positive, got {}", r.epsilon));
            }
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        self.spec.build().map_err(|e| Error::Config(e.to_string()))
    }
}

/// `seed_r = mix64(master_seed, r)`; points use `derive_seed(seed_r, [1])`
/// and edges `derive_seed(seed_r, [2])`.
pub fn replication_seed(master_seed: u64, rep: usize) -> u64 {
    mix64(master_seed, rep as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub rep: usize,
    pub seed: u64,
    pub edge_count: u64,
    pub vertex_count: usize,
    pub index_estimate: Option<f64>,
    pub r_squared: Option<f64>,
    pub k_min: Option<f64>,
    pub k_max: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub spec_label: String,
    pub truncation: TruncationReport,
    /// `b(t)` when the restricted pipeline is configured.
    pub b_t: Option<f64>,
    pub per_replication: Vec<ReplicationRecord>,
    pub successful: usize,
    pub failed: usize,
    pub mean: f64,
    /// Sample standard deviation; `None` with fewer than two estimates.
    pub std_dev: Option<f64>,
    pub min: f64,
    pub max: f64,
    /// Absent when `alpha` is outside the bound's admissible range.
    pub bound: Option<BoundInterval>,
    /// Percentage of successful estimates inside the closed bound.
    pub coverage_pct: Option<f64>,
    /// Percentage of successful estimates at or below the upper end.
    pub upper_coverage_pct: Option<f64>,
    /// SHA-256 of the report with this field, `timestamp`, and the
    /// execution-only config fields (`outputs`, `threads`) blanked.
    pub determinism_hash: String,
    /// Seconds since the Unix epoch at completion.
    pub timestamp: u64,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl ExperimentReport {
    pub fn compute_hash(&self) -> Result<String> {
        let mut view = self.clone();
        view.determinism_hash.clear();
        view.timestamp = 0;
        view.config.outputs = None;
        view.config.threads = None;
        Ok(hex(&Sha256::digest(serde_json::to_vec(&view)?)))
    }

    /// Estimates of successful replications, in replication order.
    pub fn estimates(&self) -> Vec<f64> {
        self.per_replication.iter().filter_map(|r| r.index_estimate).collect()
    }

    /// `rep,seed,edges,index,r2,kmin,kmax`; failed fits leave the last four empty.
    pub fn replications_csv(&self) -> String {
        let mut s = String::from("rep,seed,edges,index,r2,kmin,kmax\n");
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:?}"));
        for r in &self.per_replication {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.rep,
                r.seed,
                r.edge_count,
                opt(r.index_estimate),
                opt(r.r_squared),
                opt(r.k_min),
                opt(r.k_max)
            ));
        }
        s
    }

    /// Human-readable summary with three decimals.
    pub fn summary_table(&self) -> String {
        let mut s = format!(
            "{}  t={}  replications={} (failed {})\n",
            self.spec_label,
            self.config.t,
            self.per_replication.len(),
            self.failed
        );
        s.push_str(&format!(
            "mean {:.3}  sd {}  range [{:.3}, {:.3}]\n",
            self.mean,
            self.std_dev.map_or("-".to_string(), |v| format!("{v:.3}")),
            self.min,
            self.max
        ));
        if let (Some(b), Some(c), Some(u)) = (self.bound, self.coverage_pct, self.upper_coverage_pct) {
            s.push_str(&format!(
                "bound [{:.3}, {:.3}]  coverage {:.1}%  upper-only {:.1}%\n",
                b.lower, b.upper, c, u
            ));
        }
        s
    }
}

struct RepOutput {
    record: ReplicationRecord,
    dist: Option<Vec<(u64, f64)>>,
}

fn run_replication(
    cfg: &ExperimentConfig,
    spec: &GraphexSpec,
    eta_max: f64,
    restriction: Option<Restriction>,
    rep: usize,
) -> Result<RepOutput> {
    let seed = replication_seed(cfg.master_seed, rep);
    let pts = sample_points(cfg.t, eta_max, derive_seed(seed, &[1]))?;
    let graph = sample_graph_blocked(spec, &pts, derive_seed(seed, &[2]))?;
    let mut record = ReplicationRecord {
        rep,
        seed,
        edge_count: graph.edge_count(),
        vertex_count: graph.vertex_count(),
        index_estimate: None,
        r_squared: None,
        k_min: None,
        k_max: None,
        failure: None,
    };
    let hist = count_common(&graph, restriction)?;
    let fitted = empirical_distribution(&hist).and_then(|d| Ok((fit_tail_index(&d, cfg.fit)?, d)));
    let mut dist = None;
    match fitted {
        Ok((fit, d)) => {
            record.index_estimate = Some(fit.index_estimate());
            record.r_squared = Some(fit.r_squared);
            record.k_min = Some(fit.k_min);
            record.k_max = Some(fit.k_max);
            if cfg.keep_dists {
                dist = Some(d);
            }
        }
        Err(e @ (Error::FitFailure { .. } | Error::EmptyHistogram)) => record.failure = Some(e.to_string()),
        Err(e) => return Err(e),
    }
    Ok(RepOutput { record, dist })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let spec = cfg.validate()?;
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(|| run_inner(cfg, &spec)),
        None => run_inner(cfg, &spec),
    }
}

fn run_inner(cfg: &ExperimentConfig, spec: &GraphexSpec) -> Result<ExperimentReport> {
    let truncation = choose_eta_max(&MarginalEvaluator::new(spec.clone()), cfg.t, cfg.missed_edge_budget)?;
    let b_t = match cfg.restriction {
        Some(_) => Some(scaling_b(spec, cfg.t)?),
        None => None,
    };
    let restriction = cfg.restriction.zip(b_t).map(|(r, b_t)| Restriction {
        epsilon: r.epsilon,
        b_t,
    });
    let outputs: Vec<RepOutput> = (1..=cfg.replications)
        .into_par_iter()
        .map(|rep| run_replication(cfg, spec, truncation.eta_max, restriction, rep))
        .collect::<Result<_>>()?;

    let failed = outputs.iter().filter(|o| o.record.failure.is_some()).count();
    if failed as f64 > MAX_FAILURE_FRACTION * cfg.replications as f64 || failed == cfg.replications {
        return Err(Error::TooManyFailures {
            failed,
            total: cfg.replications,
        });
    }
    let estimates: Vec<f64> = outputs.iter().filter_map(|o| o.record.index_estimate).collect();
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let std_dev =
        (estimates.len() > 1).then(|| (estimates.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
    let min = estimates.iter().copied().fold(f64::INFINITY, f64::min);
    let max = estimates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bound = bound_interval(spec.alpha(), spec.is_separable()).ok();
    let pct = |f: &dyn Fn(f64) -> bool| 100.0 * estimates.iter().filter(|&&x| f(x)).count() as f64 / n;
    let coverage_pct = bound.map(|b| pct(&|x| b.covers(x)));
    let upper_coverage_pct = bound.map(|b| pct(&|x| b.covers_upper(x)));

    let mut report = ExperimentReport {
        config: cfg.clone(),
        spec_label: spec.label(),
        truncation,
        b_t,
        per_replication: outputs.iter().map(|o| o.record.clone()).collect(),
        successful: estimates.len(),
        failed,
        mean,
        std_dev,
        min,
        max,
        bound,
        coverage_pct,
        upper_coverage_pct,
        determinism_hash: String::new(),
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
    };
    report.determinism_hash = report.compute_hash()?;

    if let Some(dir) = &cfg.outputs {
        write_outputs(&report, &outputs, dir)?;
    }
    Ok(report)
}

fn write_outputs(report: &ExperimentReport, outputs: &[RepOutput], dir: &Path) -> Result<()> {
    write_atomic(
        &dir.join("report.json"),
        serde_json::to_string_pretty(report)?.as_bytes(),
    )?;
    write_atomic(&dir.join("replications.csv"), report.replications_csv().as_bytes())?;
    for o in outputs {
        if let Some(d) = &o.dist {
            write_atomic(
                &dir.join(format!("distribution_{:04}.csv", o.record.rep)),
                distribution_csv(d).as_bytes(),
            )?;
        }
    }
    Ok(())
}

/// Separable and non-separable studies whose `μ_1` share the same index.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchedComparison {
    /// Regular-variation index of `μ_1` shared by both specs.
    pub mu1_index: f64,
    pub separable: ExperimentReport,
    pub non_separable: ExperimentReport,
    /// Non-separable mean minus separable mean.
    pub mean_difference: f64,
    /// Separable tails heavier, i.e. a smaller mean index.
    pub separable_heavier: bool,
}

pub fn compare_mu1_matched(cfg_sep: &ExperimentConfig, cfg_nonsep: &ExperimentConfig) -> Result<MatchedComparison> {
    let sep = cfg_sep.validate()?;
    let non = cfg_nonsep.validate()?;
    if !sep.is_separable() || non.is_separable() {
        return Err(Error::Config(
            "need one separable and one non-separable spec, in that order".into(),
        ));
    }
    // μ_1 is RV_{−α} for separable and RV_{−(α−1)} for non-separable W.
    if (sep.alpha() - (non.alpha() - 1.0)).abs() > 1e-12 {
        return Err(Error::Config(format!(
            "mu1 indices differ: separable alpha {} vs non-separable alpha {}",
            sep.alpha(),
            non.alpha()
        )));
    }
    let separable = run_experiment(cfg_sep)?;
    let non_separable = run_experiment(cfg_nonsep)?;
    Ok(MatchedComparison {
        mu1_index: sep.alpha(),
        mean_difference: non_separable.mean - separable.mean,
        separable_heavier: separable.mean < non_separable.mean,
        separable,
        non_separable,
    })
}
