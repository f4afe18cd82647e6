//! Bayesian gene set analysis.
//!
//! Scores predefined gene sets for differential expression between two
//! sample classes with a hierarchical model: per-gene effects β_sg share a
//! set-level variance τ²_s, and (in the mixture variant) a spike-and-slab
//! prior on τ²_s yields a posterior null probability P(v_s = 0|D) per set.
//! Inference is a Gibbs sweep over closed-form conditionals plus slice
//! sampling for the non-conjugate hyperparameters.
//!
//! The crate also carries the frequentist set statistics (maxmean, mean z,
//! mean |z|, signed KS) with label-permutation significance and optional
//! restandardization, the simulation scenarios used for method comparison,
//! and an ROC/AUC benchmark harness.

pub mod baselines;
pub mod distributions;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod model;
pub mod sampler;
pub mod simgen;
pub mod stream;

pub use error::Error;

pub use distributions::{slice_sample_step, ScaledInvChiSq, SliceConfig};
pub use model::{
    init_state, validate_and_bind, BoundProblem, ExpressionDataset, GeneSetCollection,
    GeneSummary, McmcConfig, ModelState, ModelVariant, PosteriorSummary, SetSummary,
};
pub use sampler::{run_chain, summarize, ChainDiagnostics, ChainTrace, Priors};

pub use baselines::{
    gene_zscores, ks_signed, maxmean, mean_abs_z, mean_z, permutation_pvalues, restandardize,
    BaselineResult, GeneScores, PermutationScheme, SetStatistic,
};
pub use evaluation::{
    auc, run_benchmark, score_adapter, AnalysisOutput, BenchmarkConfig, BenchmarkReport,
    MethodScores, MethodSpec,
};
pub use simgen::{
    gen_all_shifted, gen_illustrative, gen_prior_correlation_demo, gen_simulation, generate,
    PriorCorrelationDemo, Scenario, SimulationTruth,
};
