//! Data model: expression matrices, gene set collections, the bound
//! per-membership problem the sampler operates on, and the MCMC
//! configuration and parameter state.

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::SliceConfig;
use crate::error::Error;

/// Floor applied to the initial residual-variance estimate so degenerate
/// (constant) genes still yield a valid state.
pub const SIGMA_SQ_INIT_FLOOR: f64 = 1e-8;

/// Two-class expression data: a G×n matrix with binary class labels.
///
/// Values are assumed already normalized; no preprocessing happens here.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionDataset {
    values: Vec<f64>, // row-major G×n
    gene_ids: Vec<String>,
    sample_ids: Vec<String>,
    class_labels: Vec<bool>, // true = treatment
}

impl ExpressionDataset {
    /// Builds and validates a dataset. `rows` holds one row per gene in
    /// `gene_ids` order; `class_labels[i]` is true for treatment samples.
    pub fn new(
        gene_ids: Vec<String>,
        sample_ids: Vec<String>,
        class_labels: Vec<bool>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self, Error> {
        let n = sample_ids.len();
        if n == 0 || gene_ids.is_empty() {
            return Err(Error::InvalidInput(
                "expression dataset needs at least one gene and one sample".into(),
            ));
        }
        if class_labels.len() != n {
            return Err(Error::InvalidInput(format!(
                "{} class labels for {} samples",
                class_labels.len(),
                n
            )));
        }
        if rows.len() != gene_ids.len() {
            return Err(Error::InvalidInput(format!(
                "{} value rows for {} gene ids",
                rows.len(),
                gene_ids.len()
            )));
        }
        let n_treat = class_labels.iter().filter(|&&t| t).count();
        if n_treat < 2 || n - n_treat < 2 {
            return Err(Error::InvalidInput(format!(
                "each class needs at least 2 samples, got {} control and {} treatment",
                n - n_treat,
                n_treat
            )));
        }
        let mut seen = HashSet::with_capacity(gene_ids.len());
        for id in &gene_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate gene id '{id}'")));
            }
        }
        let mut values = Vec::with_capacity(gene_ids.len() * n);
        for (g, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidInput(format!(
                    "gene '{}' has {} values for {} samples",
                    gene_ids[g],
                    row.len(),
                    n
                )));
            }
            for (i, &x) in row.iter().enumerate() {
                if !x.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "non-finite value {} for gene '{}', sample '{}'",
                        x, gene_ids[g], sample_ids[i]
                    )));
                }
            }
            values.extend_from_slice(row);
        }
        Ok(Self {
            values,
            gene_ids,
            sample_ids,
            class_labels,
        })
    }

    pub fn n_genes(&self) -> usize {
        self.gene_ids.len()
    }

    pub fn n_samples(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn n_treatment(&self) -> usize {
        self.class_labels.iter().filter(|&&t| t).count()
    }

    pub fn n_control(&self) -> usize {
        self.n_samples() - self.n_treatment()
    }

    pub fn row(&self, gene: usize) -> &[f64] {
        let n = self.n_samples();
        &self.values[gene * n..(gene + 1) * n]
    }

    pub fn gene_ids(&self) -> &[String] {
        &self.gene_ids
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    /// Per-sample class indicators; true marks treatment.
    pub fn class_labels(&self) -> &[bool] {
        &self.class_labels
    }

    pub fn gene_index(&self, id: &str) -> Option<usize> {
        self.gene_ids.iter().position(|g| g == id)
    }
}

/// A collection of named gene sets, stored as indices into the gene axis
/// of a companion [`ExpressionDataset`].
///
/// Sets may overlap; each membership owns independent model parameters
/// once bound. One-gene sets are rejected because a single observation
/// cannot identify a set-level variance.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneSetCollection {
    set_names: Vec<String>,
    sets: Vec<Vec<usize>>,
}

impl GeneSetCollection {
    pub fn new(set_names: Vec<String>, sets: Vec<Vec<usize>>) -> Result<Self, Error> {
        if set_names.len() != sets.len() {
            return Err(Error::InvalidInput(format!(
                "{} set names for {} sets",
                set_names.len(),
                sets.len()
            )));
        }
        if sets.is_empty() {
            return Err(Error::InvalidInput("gene set collection is empty".into()));
        }
        for (name, members) in set_names.iter().zip(&sets) {
            if members.len() < 2 {
                return Err(Error::InvalidInput(format!(
                    "set '{name}' has {} genes; sets need at least 2",
                    members.len()
                )));
            }
            let mut seen = HashSet::with_capacity(members.len());
            for &g in members {
                if !seen.insert(g) {
                    return Err(Error::InvalidInput(format!(
                        "set '{name}' lists gene index {g} twice"
                    )));
                }
            }
        }
        Ok(Self { set_names, sets })
    }

    pub fn n_sets(&self) -> usize {
        self.sets.len()
    }

    pub fn name(&self, s: usize) -> &str {
        &self.set_names[s]
    }

    pub fn set_names(&self) -> &[String] {
        &self.set_names
    }

    pub fn members(&self, s: usize) -> &[usize] {
        &self.sets[s]
    }

    pub fn size(&self, s: usize) -> usize {
        self.sets[s].len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.sets.iter().map(Vec::len).collect()
    }
}

/// Expression data joined to a gene set collection, with one parameter
/// slot per (set, member) pair. A gene shared by several sets gets an
/// independent slot in each membership.
#[derive(Debug, Clone)]
pub struct BoundProblem {
    data: ExpressionDataset,
    sets: GeneSetCollection,
    slot_gene: Vec<usize>,
    set_offsets: Vec<usize>, // K+1 prefix offsets into slot_gene
    // Per-slot sufficient statistics reused by the closed-form updates.
    sum_y: Vec<f64>,
    sum_y_treat: Vec<f64>,
}

/// Checks that a collection indexes into a dataset and materializes the
/// per-membership slot layout used by the sampler.
pub fn validate_and_bind(
    data: ExpressionDataset,
    sets: GeneSetCollection,
) -> Result<BoundProblem, Error> {
    let g_max = data.n_genes();
    let mut slot_gene = Vec::new();
    let mut set_offsets = Vec::with_capacity(sets.n_sets() + 1);
    set_offsets.push(0);
    for s in 0..sets.n_sets() {
        for &g in sets.members(s) {
            if g >= g_max {
                return Err(Error::InvalidInput(format!(
                    "set '{}' references gene index {g} but the dataset has {g_max} genes",
                    sets.name(s)
                )));
            }
            slot_gene.push(g);
        }
        set_offsets.push(slot_gene.len());
    }
    let labels = data.class_labels();
    let mut sum_y = Vec::with_capacity(slot_gene.len());
    let mut sum_y_treat = Vec::with_capacity(slot_gene.len());
    for &g in &slot_gene {
        let row = data.row(g);
        let total: f64 = row.iter().sum();
        let treat: f64 = row
            .iter()
            .zip(labels)
            .filter_map(|(&y, &t)| t.then_some(y))
            .sum();
        sum_y.push(total);
        sum_y_treat.push(treat);
    }
    Ok(BoundProblem {
        data,
        sets,
        slot_gene,
        set_offsets,
        sum_y,
        sum_y_treat,
    })
}

impl BoundProblem {
    pub fn data(&self) -> &ExpressionDataset {
        &self.data
    }

    pub fn sets(&self) -> &GeneSetCollection {
        &self.sets
    }

    pub fn n_slots(&self) -> usize {
        self.slot_gene.len()
    }

    pub fn n_sets(&self) -> usize {
        self.sets.n_sets()
    }

    pub fn n_samples(&self) -> usize {
        self.data.n_samples()
    }

    pub fn n_treatment(&self) -> usize {
        self.data.n_treatment()
    }

    /// Slot range owned by set `s`.
    pub fn set_slots(&self, s: usize) -> std::ops::Range<usize> {
        self.set_offsets[s]..self.set_offsets[s + 1]
    }

    pub fn gene_of_slot(&self, slot: usize) -> usize {
        self.slot_gene[slot]
    }

    /// Expression row behind a slot.
    pub fn values_of_slot(&self, slot: usize) -> &[f64] {
        self.data.row(self.slot_gene[slot])
    }

    pub fn sum_y(&self, slot: usize) -> f64 {
        self.sum_y[slot]
    }

    pub fn sum_y_treat(&self, slot: usize) -> f64 {
        self.sum_y_treat[slot]
    }
}

/// Which prior sits on the set-level variances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelVariant {
    /// Single Inv-χ²(ν, φ²) prior on every τ²_s; sets are ranked by E[τ²|D].
    Simple,
    /// Two-component mixture with latent indicators v_s; P(v_s = 0|D) is the
    /// per-set significance measure.
    Mixture,
}

impl ModelVariant {
    pub fn label(&self) -> &'static str {
        match self {
            ModelVariant::Simple => "simple",
            ModelVariant::Mixture => "mixture",
        }
    }
}

impl std::str::FromStr for ModelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "simple" => Ok(ModelVariant::Simple),
            "mixture" => Ok(ModelVariant::Mixture),
            other => Err(Error::InvalidParameter(format!(
                "unknown model variant '{other}' (expected 'simple' or 'mixture')"
            ))),
        }
    }
}

/// Chain settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McmcConfig {
    pub n_iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub variant: ModelVariant,
    /// Beta(a, b) prior on the mixture weight λ.
    pub lambda_prior_a: f64,
    pub lambda_prior_b: f64,
    pub slice: SliceConfig,
    /// Hold ν fixed instead of slice-sampling it.
    pub fixed_nu: Option<f64>,
    /// Hold φ²₀ fixed instead of slice-sampling it.
    pub fixed_phi0_sq: Option<f64>,
    /// Hold φ²₁ fixed instead of slice-sampling it.
    pub fixed_phi1_sq: Option<f64>,
    /// Estimate P(v_s = 0|D) by averaging the per-sweep Bernoulli
    /// probabilities instead of counting indicator draws.
    pub rao_blackwell: bool,
}

impl McmcConfig {
    pub fn new(
        n_iterations: usize,
        burn_in: usize,
        seed: u64,
        variant: ModelVariant,
    ) -> Result<Self, Error> {
        let cfg = Self {
            n_iterations,
            burn_in,
            seed,
            variant,
            lambda_prior_a: 1.0,
            lambda_prior_b: 1.0,
            slice: SliceConfig::default(),
            fixed_nu: None,
            fixed_phi0_sq: None,
            fixed_phi1_sq: None,
            rao_blackwell: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.burn_in >= self.n_iterations {
            return Err(Error::InvalidParameter(format!(
                "burn_in ({}) must be smaller than n_iterations ({})",
                self.burn_in, self.n_iterations
            )));
        }
        if !(self.lambda_prior_a > 0.0 && self.lambda_prior_a.is_finite())
            || !(self.lambda_prior_b > 0.0 && self.lambda_prior_b.is_finite())
        {
            return Err(Error::InvalidParameter(format!(
                "lambda prior needs positive finite (a, b), got ({}, {})",
                self.lambda_prior_a, self.lambda_prior_b
            )));
        }
        for (name, v) in [
            ("fixed_nu", self.fixed_nu),
            ("fixed_phi0_sq", self.fixed_phi0_sq),
            ("fixed_phi1_sq", self.fixed_phi1_sq),
        ] {
            if let Some(x) = v {
                if !(x > 0.0 && x.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "{name} must be positive and finite, got {x}"
                    )));
                }
            }
        }
        self.slice.validate()
    }

    /// Number of post-burn-in iterations the chain will retain.
    pub fn retained(&self) -> usize {
        self.n_iterations - self.burn_in
    }
}

/// Full parameter state of one MCMC iteration.
///
/// The (set, gene) arrays follow the slot layout of the [`BoundProblem`];
/// the sampler is the single writer.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    /// Per-slot intercepts α_sg (expression units).
    pub alpha: Vec<f64>,
    /// Per-slot class effects β_sg (expression-shift units).
    pub beta: Vec<f64>,
    /// Per-slot noise variances σ²_sg.
    pub sigma_sq: Vec<f64>,
    /// Per-set effect variances τ²_s.
    pub tau_sq: Vec<f64>,
    /// Per-set mixture indicators v_s (mixture variant; true = alternative).
    pub v: Vec<bool>,
    /// Mixture weight λ ∈ (0, 1) (mixture variant).
    pub lambda: f64,
    /// Shared Inv-χ² degrees of freedom ν.
    pub nu: f64,
    /// Null-component scale φ²₀ (the only scale in the simple variant).
    pub phi0_sq: f64,
    /// Alternative-component scale increment φ²₁ (mixture variant).
    pub phi1_sq: f64,
}

/// Data-derived starting point for the chain.
///
/// Intercepts start at the per-gene grand mean, effects at the observed
/// group-mean difference, and noise variances at the pooled residual
/// variance (floored). Hyperparameters start at 1, λ at 1/2, and the
/// indicators are drawn fair-coin from the stream.
pub fn init_state<R: Rng + ?Sized>(
    problem: &BoundProblem,
    cfg: &McmcConfig,
    rng: &mut R,
) -> ModelState {
    let n = problem.n_samples() as f64;
    let n_treat = problem.n_treatment() as f64;
    let n_control = n - n_treat;
    let labels = problem.data().class_labels();

    let n_slots = problem.n_slots();
    let mut alpha = Vec::with_capacity(n_slots);
    let mut beta = Vec::with_capacity(n_slots);
    let mut sigma_sq = Vec::with_capacity(n_slots);
    for slot in 0..n_slots {
        let row = problem.values_of_slot(slot);
        let grand = problem.sum_y(slot) / n;
        let treat_mean = problem.sum_y_treat(slot) / n_treat;
        let control_mean = (problem.sum_y(slot) - problem.sum_y_treat(slot)) / n_control;
        let mut rss = 0.0;
        for (&y, &t) in row.iter().zip(labels) {
            let m = if t { treat_mean } else { control_mean };
            rss += (y - m) * (y - m);
        }
        alpha.push(grand);
        beta.push(treat_mean - control_mean);
        sigma_sq.push((rss / (n - 2.0)).max(SIGMA_SQ_INIT_FLOOR));
    }

    let v = (0..problem.n_sets())
        .map(|_| rng.random::<f64>() < 0.5)
        .collect();

    ModelState {
        alpha,
        beta,
        sigma_sq,
        tau_sq: vec![1.0; problem.n_sets()],
        v,
        lambda: 0.5,
        nu: cfg.fixed_nu.unwrap_or(1.0),
        phi0_sq: cfg.fixed_phi0_sq.unwrap_or(1.0),
        phi1_sq: cfg.fixed_phi1_sq.unwrap_or(1.0),
    }
}

/// Per-set posterior readouts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SetSummary {
    pub name: String,
    pub size: usize,
    /// Posterior mean of τ²_s.
    pub mean_tau_sq: f64,
    /// P(v_s = 0 | D); absent for the simple variant.
    pub prob_null: Option<f64>,
}

/// Per-membership posterior readouts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneSummary {
    pub set_name: String,
    pub gene_id: String,
    /// Posterior mean of β_sg.
    pub mean_beta: f64,
    /// Two-sided tail probability 2·min(Pr(β>0|D), Pr(β<0|D)).
    pub tail_prob: f64,
}

/// Posterior summary of one chain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub sets: Vec<SetSummary>,
    pub genes: Vec<GeneSummary>,
    /// Number of retained post-burn-in draws behind every estimate.
    pub retained: usize,
    pub seed: u64,
    pub variant: ModelVariant,
}
