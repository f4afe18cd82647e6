//! ROC/AUC benchmarking: scoring adapters to orient each method's output,
//! the Mann-Whitney AUC, and the replicate-averaged scenario comparison.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::baselines::{permutation_pvalues, BaselineResult, PermutationScheme, SetStatistic};
use crate::error::Error;
use crate::model::{validate_and_bind, McmcConfig, ModelVariant, PosteriorSummary};
use crate::sampler::{run_chain, summarize};
use crate::simgen::{gen_simulation, Scenario, SimulationTruth};
use crate::stream;

/// Per-set significance scores for one method, oriented so that higher
/// means more significant.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodScores {
    pub method: String,
    pub scores: Vec<f64>,
    /// Secondary ordering used only to break exact ties in `scores`.
    pub tiebreak: Option<Vec<f64>>,
    /// What quantity was used, recorded for report headers.
    pub orientation: String,
}

/// Output of one analysis run, ready for score adaptation.
pub enum AnalysisOutput<'a> {
    Bgsa(&'a PosteriorSummary),
    Baseline(&'a BaselineResult),
}

/// Unifies method outputs into ROC-ready scores: the mixture model scores
/// by P(v_s = 1|D) with E[τ²|D] breaking ties, the simple model by
/// E[τ²|D], and baselines by 1 − permutation p-value.
pub fn score_adapter(output: &AnalysisOutput) -> Result<MethodScores, Error> {
    match output {
        AnalysisOutput::Bgsa(summary) => match summary.variant {
            ModelVariant::Mixture => {
                let mut scores = Vec::with_capacity(summary.sets.len());
                for set in &summary.sets {
                    let prob_null = set.prob_null.ok_or_else(|| {
                        Error::InvalidInput(format!(
                            "mixture summary for set '{}' lacks prob_null",
                            set.name
                        ))
                    })?;
                    scores.push(1.0 - prob_null);
                }
                Ok(MethodScores {
                    method: "bgsa".into(),
                    scores,
                    tiebreak: Some(summary.sets.iter().map(|s| s.mean_tau_sq).collect()),
                    orientation: "P(v=1|D), ties broken by E[tau^2|D]".into(),
                })
            }
            ModelVariant::Simple => Ok(MethodScores {
                method: "bgsa-simple".into(),
                scores: summary.sets.iter().map(|s| s.mean_tau_sq).collect(),
                tiebreak: None,
                orientation: "E[tau^2|D]".into(),
            }),
        },
        AnalysisOutput::Baseline(result) => Ok(MethodScores {
            method: result.method.label().into(),
            scores: result.perm_pvalue.iter().map(|p| 1.0 - p).collect(),
            tiebreak: None,
            orientation: format!(
                "1 - permutation p-value of {}{}",
                result.method.display_name(),
                if result.restd_stat.is_some() {
                    ", restandardized"
                } else {
                    ""
                }
            ),
        }),
    }
}

/// Mann-Whitney AUC of the scores against the truth labels:
/// (#{positive > negative} + ½·#ties) / (P·N), with the optional tiebreak
/// vector ordering pairs whose primary scores are exactly equal.
pub fn auc(scores: &MethodScores, truth: &SimulationTruth) -> Result<f64, Error> {
    let k = scores.scores.len();
    let positives: Vec<usize> = (0..k).filter(|&s| truth.is_positive(s)).collect();
    let negatives: Vec<usize> = (0..k).filter(|&s| !truth.is_positive(s)).collect();
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::InvalidInput(format!(
            "AUC needs both classes, got {} positives and {} negatives",
            positives.len(),
            negatives.len()
        )));
    }
    for &x in &scores.scores {
        if !x.is_finite() {
            return Err(Error::InvalidInput("non-finite method score".into()));
        }
    }
    let mut wins = 0.0;
    for &p in &positives {
        for &n in &negatives {
            let primary = scores.scores[p].partial_cmp(&scores.scores[n]).unwrap();
            let cmp = match (primary, &scores.tiebreak) {
                (std::cmp::Ordering::Equal, Some(tb)) => tb[p].partial_cmp(&tb[n]).unwrap(),
                _ => primary,
            };
            wins += match cmp {
                std::cmp::Ordering::Greater => 1.0,
                std::cmp::Ordering::Equal => 0.5,
                std::cmp::Ordering::Less => 0.0,
            };
        }
    }
    Ok(wins / (positives.len() * negatives.len()) as f64)
}

/// A method participating in the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodSpec {
    BgsaMixture,
    BgsaSimple,
    Maxmean { restandardized: bool },
    MeanZ,
    MeanAbsZ,
    KsSigned,
}

impl MethodSpec {
    pub fn label(&self) -> &'static str {
        match self {
            MethodSpec::BgsaMixture => "bgsa",
            MethodSpec::BgsaSimple => "bgsa-simple",
            MethodSpec::Maxmean { restandardized: true } => "maxmean",
            MethodSpec::Maxmean { restandardized: false } => "maxmean-raw",
            MethodSpec::MeanZ => "mean-z",
            MethodSpec::MeanAbsZ => "mean-abs-z",
            MethodSpec::KsSigned => "ks",
        }
    }

    fn statistic(&self) -> Option<SetStatistic> {
        match self {
            MethodSpec::Maxmean { .. } => Some(SetStatistic::Maxmean),
            MethodSpec::MeanZ => Some(SetStatistic::MeanZ),
            MethodSpec::MeanAbsZ => Some(SetStatistic::MeanAbsZ),
            MethodSpec::KsSigned => Some(SetStatistic::KsSigned),
            _ => None,
        }
    }
}

impl std::str::FromStr for MethodSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "bgsa" => Ok(MethodSpec::BgsaMixture),
            "bgsa-simple" => Ok(MethodSpec::BgsaSimple),
            "maxmean" => Ok(MethodSpec::Maxmean { restandardized: true }),
            "maxmean-raw" => Ok(MethodSpec::Maxmean { restandardized: false }),
            "mean-z" | "mean_z" => Ok(MethodSpec::MeanZ),
            "mean-abs-z" | "mean_abs_z" => Ok(MethodSpec::MeanAbsZ),
            "ks" | "ks-signed" => Ok(MethodSpec::KsSigned),
            other => Err(Error::InvalidParameter(format!(
                "unknown method '{other}' (expected bgsa, bgsa-simple, maxmean, maxmean-raw, \
                 mean-z, mean-abs-z or ks)"
            ))),
        }
    }
}

/// Benchmark settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub scenarios: Vec<Scenario>,
    pub methods: Vec<MethodSpec>,
    pub n_replicates: usize,
    /// Chain settings for the BGSA methods; the seed field is ignored in
    /// favor of per-cell derived seeds.
    pub mcmc: McmcConfig,
    pub n_permutations: usize,
    pub n_randomizations: usize,
    pub seed: u64,
}

/// Mean/SE cell of the benchmark report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkCell {
    pub scenario: Scenario,
    pub method: String,
    pub mean_auc_pct: f64,
    pub se_pct: f64,
    pub n_replicates: usize,
    /// Per-replicate AUC values in percent, for paired comparisons.
    pub auc_pct: Vec<f64>,
}

/// One-sided paired t-test that method `a` outscores method `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedComparison {
    pub scenario: Scenario,
    pub method_a: String,
    pub method_b: String,
    pub mean_diff_pct: f64,
    pub t_stat: f64,
    /// P(T > t) under H0 of equal mean AUC.
    pub p_one_sided: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub cells: Vec<BenchmarkCell>,
    pub comparisons: Vec<PairedComparison>,
    pub n_replicates: usize,
    pub seed: u64,
    /// Which quantity each method fed to the ROC.
    pub adapter_notes: Vec<String>,
}

impl BenchmarkReport {
    pub fn cell(&self, scenario: Scenario, method: &str) -> Option<&BenchmarkCell> {
        self.cells
            .iter()
            .find(|c| c.scenario == scenario && c.method == method)
    }

    pub fn comparison(
        &self,
        scenario: Scenario,
        method_a: &str,
        method_b: &str,
    ) -> Option<&PairedComparison> {
        self.comparisons
            .iter()
            .find(|c| c.scenario == scenario && c.method_a == method_a && c.method_b == method_b)
    }
}

/// Runs every method on fresh data for each (scenario, replicate) cell and
/// aggregates AUC means, standard errors and paired comparisons.
///
/// Each cell derives its seeds from (master seed, scenario id, replicate),
/// so the report is identical regardless of thread count.
pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<BenchmarkReport, Error> {
    if cfg.n_replicates < 2 {
        return Err(Error::InvalidParameter(format!(
            "benchmark needs at least 2 replicates, got {}",
            cfg.n_replicates
        )));
    }
    if cfg.scenarios.is_empty() || cfg.methods.is_empty() {
        return Err(Error::InvalidParameter(
            "benchmark needs at least one scenario and one method".into(),
        ));
    }
    cfg.mcmc.validate()?;

    let cells: Vec<(usize, usize)> = (0..cfg.scenarios.len())
        .flat_map(|s| (0..cfg.n_replicates).map(move |r| (s, r)))
        .collect();

    // per (scenario, replicate): AUC per method
    let results: Vec<Vec<f64>> = cells
        .par_iter()
        .map(|&(scenario_idx, replicate)| {
            let scenario = cfg.scenarios[scenario_idx];
            run_cell(cfg, scenario, replicate as u64)
                .map_err(|e| tag_cell_error(e, scenario, replicate))
        })
        .collect::<Result<_, _>>()?;

    let mut report_cells = Vec::with_capacity(cfg.scenarios.len() * cfg.methods.len());
    let mut comparisons = Vec::new();
    for (scenario_idx, &scenario) in cfg.scenarios.iter().enumerate() {
        let rows: Vec<&Vec<f64>> = cells
            .iter()
            .zip(&results)
            .filter(|((s, _), _)| *s == scenario_idx)
            .map(|(_, aucs)| aucs)
            .collect();
        let mut per_method: Vec<Vec<f64>> = Vec::with_capacity(cfg.methods.len());
        for (m, method) in cfg.methods.iter().enumerate() {
            let auc_pct: Vec<f64> = rows.iter().map(|r| r[m] * 100.0).collect();
            let mean = auc_pct.iter().sum::<f64>() / auc_pct.len() as f64;
            let var = auc_pct.iter().map(|x| (x - mean).powi(2)).sum::<f64>()
                / (auc_pct.len() - 1) as f64;
            report_cells.push(BenchmarkCell {
                scenario,
                method: method.label().into(),
                mean_auc_pct: mean,
                se_pct: (var / auc_pct.len() as f64).sqrt(),
                n_replicates: auc_pct.len(),
                auc_pct: auc_pct.clone(),
            });
            per_method.push(auc_pct);
        }
        for a in 0..cfg.methods.len() {
            for b in 0..cfg.methods.len() {
                if a == b {
                    continue;
                }
                let (t_stat, p) = paired_t_one_sided(&per_method[a], &per_method[b]);
                let mean_diff = per_method[a]
                    .iter()
                    .zip(&per_method[b])
                    .map(|(x, y)| x - y)
                    .sum::<f64>()
                    / per_method[a].len() as f64;
                comparisons.push(PairedComparison {
                    scenario,
                    method_a: cfg.methods[a].label().into(),
                    method_b: cfg.methods[b].label().into(),
                    mean_diff_pct: mean_diff,
                    t_stat,
                    p_one_sided: p,
                });
            }
        }
    }

    Ok(BenchmarkReport {
        cells: report_cells,
        comparisons,
        n_replicates: cfg.n_replicates,
        seed: cfg.seed,
        adapter_notes: adapter_notes(&cfg.methods),
    })
}

fn adapter_notes(methods: &[MethodSpec]) -> Vec<String> {
    methods
        .iter()
        .map(|m| match m {
            MethodSpec::BgsaMixture => {
                "bgsa: P(v=1|D), ties broken by E[tau^2|D]".to_string()
            }
            MethodSpec::BgsaSimple => "bgsa-simple: E[tau^2|D]".to_string(),
            MethodSpec::Maxmean { restandardized } => format!(
                "{}: 1 - permutation p-value of Maxmean{}",
                m.label(),
                if *restandardized { ", restandardized" } else { "" }
            ),
            _ => format!(
                "{}: 1 - permutation p-value of {}",
                m.label(),
                m.statistic().unwrap().display_name()
            ),
        })
        .collect()
}

fn tag_cell_error(e: Error, scenario: Scenario, replicate: usize) -> Error {
    Error::InvalidState(format!(
        "benchmark cell (scenario {}, replicate {replicate}) failed: {e}",
        scenario.label()
    ))
}

/// One (scenario, replicate) cell: generate data, run every method,
/// return one AUC per method.
fn run_cell(cfg: &BenchmarkConfig, scenario: Scenario, replicate: u64) -> Result<Vec<f64>, Error> {
    let data_seed = stream::child_seed(cfg.seed, &[scenario.id(), replicate, 0]);
    let (data, sets, truth) = gen_simulation(scenario, data_seed)?;

    let mut aucs = Vec::with_capacity(cfg.methods.len());
    for (m, method) in cfg.methods.iter().enumerate() {
        let scores = match method {
            MethodSpec::BgsaMixture | MethodSpec::BgsaSimple => {
                let variant = if *method == MethodSpec::BgsaMixture {
                    ModelVariant::Mixture
                } else {
                    ModelVariant::Simple
                };
                let mut mcmc = cfg.mcmc.clone();
                mcmc.variant = variant;
                mcmc.seed = stream::child_seed(cfg.seed, &[scenario.id(), replicate, 1 + m as u64]);
                let problem = validate_and_bind(data.clone(), sets.clone())?;
                let trace = run_chain(&problem, &mcmc)?;
                let summary = summarize(&trace, &problem)?;
                score_adapter(&AnalysisOutput::Bgsa(&summary))?
            }
            _ => {
                let statistic = method.statistic().expect("baseline methods have a statistic");
                let restd = match method {
                    MethodSpec::Maxmean { restandardized: true } => Some(cfg.n_randomizations),
                    _ => None,
                };
                // Small simulated designs can have fewer distinct label
                // assignments than the requested draw count; fall back to
                // exhaustive enumeration there.
                let scheme = PermutationScheme::auto(
                    data.n_samples(),
                    data.n_treatment(),
                    cfg.n_permutations,
                );
                let result = permutation_pvalues(
                    &data,
                    &sets,
                    statistic,
                    scheme,
                    restd,
                    stream::child_seed(cfg.seed, &[scenario.id(), replicate, 1 + m as u64]),
                )?;
                score_adapter(&AnalysisOutput::Baseline(&result))?
            }
        };
        aucs.push(auc(&scores, &truth)?);
    }
    Ok(aucs)
}

/// One-sided paired t-test of mean(a - b) > 0; returns (t, p).
fn paired_t_one_sided(a: &[f64], b: &[f64]) -> (f64, f64) {
    let n = a.len();
    debug_assert!(n >= 2 && n == b.len());
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    if se == 0.0 {
        // All differences equal: the direction decides.
        return if mean > 0.0 {
            (f64::INFINITY, 0.0)
        } else if mean < 0.0 {
            (f64::NEG_INFINITY, 1.0)
        } else {
            (0.0, 0.5)
        };
    }
    let t = mean / se;
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("valid dof");
    (t, 1.0 - dist.cdf(t))
}
