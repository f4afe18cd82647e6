//! Synthetic data generators: the illustrative block design, the
//! "every set shifted" design, the prior-correlation demonstration, and
//! the six benchmark scenarios, each emitting a dataset plus ground truth.

use rand::Rng;
use rand_distr::{Distribution, Gamma as GammaSampler, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Gamma as GammaDist, Normal as NormalDist};

use crate::error::Error;
use crate::model::{ExpressionDataset, GeneSetCollection};
use crate::stream;

/// Which data-generating process produced a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Illustrative,
    AllShifted,
    Sim1,
    Sim2,
    Sim3,
    Sim4,
    Sim5,
    Sim6,
}

impl Scenario {
    pub const ALL_SIMS: [Scenario; 6] = [
        Scenario::Sim1,
        Scenario::Sim2,
        Scenario::Sim3,
        Scenario::Sim4,
        Scenario::Sim5,
        Scenario::Sim6,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Scenario::Illustrative => "illustrative",
            Scenario::AllShifted => "all-shifted",
            Scenario::Sim1 => "sim1",
            Scenario::Sim2 => "sim2",
            Scenario::Sim3 => "sim3",
            Scenario::Sim4 => "sim4",
            Scenario::Sim5 => "sim5",
            Scenario::Sim6 => "sim6",
        }
    }

    /// Stable numeric tag for seed derivation.
    pub fn id(&self) -> u64 {
        match self {
            Scenario::Sim1 => 1,
            Scenario::Sim2 => 2,
            Scenario::Sim3 => 3,
            Scenario::Sim4 => 4,
            Scenario::Sim5 => 5,
            Scenario::Sim6 => 6,
            Scenario::Illustrative => 100,
            Scenario::AllShifted => 101,
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "illustrative" => Ok(Scenario::Illustrative),
            "all-shifted" | "all_shifted" => Ok(Scenario::AllShifted),
            "sim1" => Ok(Scenario::Sim1),
            "sim2" => Ok(Scenario::Sim2),
            "sim3" => Ok(Scenario::Sim3),
            "sim4" => Ok(Scenario::Sim4),
            "sim5" => Ok(Scenario::Sim5),
            "sim6" => Ok(Scenario::Sim6),
            other => Err(Error::InvalidParameter(format!(
                "unknown scenario '{other}' (expected illustrative, all-shifted or sim1..sim6)"
            ))),
        }
    }
}

/// Ground truth bookkeeping for a generated dataset.
///
/// Every applied treatment shift appears exactly once, under the set
/// through which it was assigned; genes later copied into other sets are
/// not re-recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTruth {
    pub scenario: Scenario,
    /// Zero-based indices of the sets designed to be significant.
    pub positive_sets: Vec<usize>,
    /// Per set: (gene index, treatment shift) pairs actually applied.
    pub shifted_genes: Vec<Vec<(usize, f64)>>,
    pub seed: u64,
}

impl SimulationTruth {
    pub fn is_positive(&self, set: usize) -> bool {
        self.positive_sets.contains(&set)
    }
}

fn gene_ids(n: usize) -> Vec<String> {
    (1..=n).map(|g| format!("g{g:04}")).collect()
}

fn sample_ids(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("s{i:02}")).collect()
}

fn set_names(n: usize) -> Vec<String> {
    (1..=n).map(|s| format!("set{s:02}")).collect()
}

/// Illustrative design: 1000 genes × 30 samples of N(0, 1) noise, 50
/// disjoint 20-gene blocks, 15 control then 15 treatment samples. The
/// first four sets get `shift` added to the treatment values of their
/// first 20, 10, 5 and 2 genes.
pub fn gen_illustrative(
    shift: f64,
    seed: u64,
) -> (ExpressionDataset, GeneSetCollection, SimulationTruth) {
    let (_base, data, sets, truth) = gen_blocks_raw(Scenario::Illustrative, shift, seed);
    (data, sets, truth)
}

/// Same frame as the illustrative design, but the first 10 genes of every
/// set are shifted by one unit, so no set stands out.
pub fn gen_all_shifted(seed: u64) -> (ExpressionDataset, GeneSetCollection, SimulationTruth) {
    let (_base, data, sets, truth) = gen_blocks_raw(Scenario::AllShifted, 1.0, seed);
    (data, sets, truth)
}

fn gen_blocks_raw(
    scenario: Scenario,
    shift: f64,
    seed: u64,
) -> (
    Vec<Vec<f64>>,
    ExpressionDataset,
    GeneSetCollection,
    SimulationTruth,
) {
    const G: usize = 1000;
    const N: usize = 30;
    const N_CONTROL: usize = 15;
    const K: usize = 50;
    const BLOCK: usize = 20;

    let mut rng = stream::from_seed(seed);
    let base: Vec<Vec<f64>> = (0..G)
        .map(|_| (0..N).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    let mut rows = base.clone();

    let members: Vec<Vec<usize>> = (0..K).map(|s| (s * BLOCK..(s + 1) * BLOCK).collect()).collect();

    let (positive_sets, shift_counts): (Vec<usize>, Vec<usize>) = match scenario {
        Scenario::Illustrative => (vec![0, 1, 2, 3], vec![20, 10, 5, 2]),
        Scenario::AllShifted => (Vec::new(), vec![10; K]),
        _ => unreachable!("block designs only"),
    };

    let mut shifted_genes: Vec<Vec<(usize, f64)>> = vec![Vec::new(); K];
    for (s, &count) in shift_counts.iter().enumerate() {
        for &g in members[s].iter().take(count) {
            for i in N_CONTROL..N {
                rows[g][i] += shift;
            }
            shifted_genes[s].push((g, shift));
        }
    }

    let data = ExpressionDataset::new(
        gene_ids(G),
        sample_ids(N),
        (0..N).map(|i| i >= N_CONTROL).collect(),
        rows,
    )
    .expect("generated data is valid");
    let sets = GeneSetCollection::new(set_names(K), members).expect("block sets are valid");
    let truth = SimulationTruth {
        scenario,
        positive_sets,
        shifted_genes,
        seed,
    };
    (base, data, sets, truth)
}

/// Output of the prior-correlation demonstration.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorCorrelationDemo {
    /// Correlation of |β| for two genes sharing a set-level scale.
    pub r_within: Vec<f64>,
    /// Correlation of |β| for genes in two independent sets.
    pub r_between: Vec<f64>,
}

/// Samples the hierarchical prior to show that |β| values of genes in the
/// same set correlate while genes in different sets stay independent.
///
/// Each correlation is taken over `n_draws` realizations of the hierarchy:
/// per draw, a shared η ~ Inv-χ²(1, 0.5) feeds τ ~ Inv-χ²(1, η) for each
/// gene of the set, then β ~ N(0, τ) with τ read as the variance. The
/// between-set gene uses its own independent η chain.
pub fn gen_prior_correlation_demo(n_reps: usize, n_draws: usize, seed: u64) -> PriorCorrelationDemo {
    assert!(n_draws >= 3, "correlations need at least 3 draws");
    use crate::distributions::ScaledInvChiSq;
    let eta_dist = ScaledInvChiSq::new(1.0, 0.5).unwrap();
    let mut rng = stream::from_seed(seed);

    let mut r_within = Vec::with_capacity(n_reps);
    let mut r_between = Vec::with_capacity(n_reps);
    let mut b1 = vec![0.0; n_draws];
    let mut b2 = vec![0.0; n_draws];
    let mut b3 = vec![0.0; n_draws];
    for _ in 0..n_reps {
        for k in 0..n_draws {
            let eta = eta_dist.sample(&mut rng);
            let tau_dist = ScaledInvChiSq::new(1.0, eta).unwrap();
            let tau1 = tau_dist.sample(&mut rng);
            let tau2 = tau_dist.sample(&mut rng);
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            b1[k] = (tau1.sqrt() * z1).abs();
            b2[k] = (tau2.sqrt() * z2).abs();

            let eta_other = eta_dist.sample(&mut rng);
            let tau3 = ScaledInvChiSq::new(1.0, eta_other).unwrap().sample(&mut rng);
            let z3: f64 = rng.sample(StandardNormal);
            b3[k] = (tau3.sqrt() * z3).abs();
        }
        r_within.push(pearson(&b1, &b2));
        r_between.push(pearson(&b1, &b3));
    }
    PriorCorrelationDemo { r_within, r_between }
}

pub(crate) fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    let denom = (sxx * syy).sqrt();
    if denom == 0.0 {
        0.0
    } else {
        sxy / denom
    }
}

/// Dispatches any scenario to its generator (block designs use shift 1).
pub fn generate(
    scenario: Scenario,
    seed: u64,
) -> Result<(ExpressionDataset, GeneSetCollection, SimulationTruth), Error> {
    match scenario {
        Scenario::Illustrative => Ok(gen_illustrative(1.0, seed)),
        Scenario::AllShifted => Ok(gen_all_shifted(seed)),
        _ => gen_simulation(scenario, seed),
    }
}

/// Benchmark scenario frame: 1000 genes × 10 samples (5 + 5), genes
/// randomly partitioned into 50 sets of random sizes (each at least 5),
/// Sets 1-5 carrying per-gene treatment shifts on a random non-empty
/// subset of their genes.
pub fn gen_simulation(
    scenario: Scenario,
    seed: u64,
) -> Result<(ExpressionDataset, GeneSetCollection, SimulationTruth), Error> {
    let (_base, data, sets, truth, _pairs) = gen_simulation_raw(scenario, seed)?;
    Ok((data, sets, truth))
}

const SIM_GENES: usize = 1000;
const SIM_SAMPLES: usize = 10;
const SIM_CONTROL: usize = 5;
const SIM_SETS: usize = 50;
const SIM_MIN_SET: usize = 5;
const SIM_POSITIVE: usize = 5;

#[allow(clippy::type_complexity)]
fn gen_simulation_raw(
    scenario: Scenario,
    seed: u64,
) -> Result<
    (
        Vec<Vec<f64>>,
        ExpressionDataset,
        GeneSetCollection,
        SimulationTruth,
        Vec<(usize, usize, f64)>,
    ),
    Error,
> {
    let k = match scenario {
        Scenario::Sim1 => 1,
        Scenario::Sim2 => 2,
        Scenario::Sim3 => 3,
        Scenario::Sim4 => 4,
        Scenario::Sim5 => 5,
        Scenario::Sim6 => 6,
        other => {
            return Err(Error::InvalidParameter(format!(
                "'{}' is not one of the sim1..sim6 scenarios",
                other.label()
            )))
        }
    };
    let mut rng = stream::from_seed(seed);

    // Random partition: uniform set per gene, redrawn until every set has
    // at least SIM_MIN_SET members.
    let assignment: Vec<usize> = loop {
        let assign: Vec<usize> = (0..SIM_GENES)
            .map(|_| rng.random_range(0..SIM_SETS))
            .collect();
        let mut counts = [0usize; SIM_SETS];
        for &s in &assign {
            counts[s] += 1;
        }
        if counts.iter().all(|&c| c >= SIM_MIN_SET) {
            break assign;
        }
    };
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); SIM_SETS];
    for (g, &s) in assignment.iter().enumerate() {
        members[s].push(g);
    }

    // Base expression values.
    let base: Vec<Vec<f64>> = if k == 1 {
        (0..SIM_GENES)
            .map(|_| {
                (0..SIM_SAMPLES)
                    .map(|_| rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect()
    } else {
        let shapes: Vec<f64> = (0..SIM_GENES).map(|_| rng.random_range(1.0..3.0)).collect();
        if k < 5 {
            shapes
                .iter()
                .map(|&a| {
                    let gamma = GammaSampler::new(a, 1.0).expect("valid shape");
                    (0..SIM_SAMPLES).map(|_| gamma.sample(&mut rng)).collect()
                })
                .collect()
        } else {
            // Correlated scenario: couple standard-normal latents pairwise,
            // then push them through per-gene Gamma margins.
            let mut latent: Vec<Vec<f64>> = (0..SIM_GENES)
                .map(|_| {
                    (0..SIM_SAMPLES)
                        .map(|_| rng.sample::<f64, _>(StandardNormal))
                        .collect()
                })
                .collect();
            let n_pairs = rng.random_range(50..=150);
            let mut pairs = Vec::with_capacity(n_pairs);
            for _ in 0..n_pairs {
                let g1 = rng.random_range(0..SIM_GENES);
                let g2 = loop {
                    let g = rng.random_range(0..SIM_GENES);
                    if g != g1 {
                        break g;
                    }
                };
                let rho = rng.random_range(-1.0..1.0);
                pairs.push((g1, g2, rho));
            }
            couple_latents(&mut latent, &pairs);
            let base = gamma_margins(&latent, &shapes);
            return finish_simulation(scenario, seed, k, base, members, pairs, rng);
        }
    };
    finish_simulation(scenario, seed, k, base, members, Vec::new(), rng)
}

/// Rewrites each pair's second latent row as ρ·first + √(1−ρ²)·second.
/// Overlapping pairs are resolved in draw order against current values.
pub(crate) fn couple_latents(latent: &mut [Vec<f64>], pairs: &[(usize, usize, f64)]) {
    for &(g1, g2, rho) in pairs {
        let comp = (1.0 - rho * rho).sqrt();
        for i in 0..latent[g2].len() {
            latent[g2][i] = rho * latent[g1][i] + comp * latent[g2][i];
        }
    }
}

/// Gaussian-copula transform: per-gene Gamma(a_g, 1) margins applied to
/// standard-normal latents.
pub(crate) fn gamma_margins(latent: &[Vec<f64>], shapes: &[f64]) -> Vec<Vec<f64>> {
    let normal = NormalDist::new(0.0, 1.0).unwrap();
    latent
        .iter()
        .zip(shapes)
        .map(|(row, &a)| {
            let gamma = GammaDist::new(a, 1.0).unwrap();
            row.iter()
                .map(|&z| {
                    let u = normal.cdf(z).clamp(f64::MIN_POSITIVE, 1.0 - 1e-16);
                    gamma.inverse_cdf(u)
                })
                .collect()
        })
        .collect()
}

#[allow(clippy::type_complexity)]
fn finish_simulation(
    scenario: Scenario,
    seed: u64,
    k: usize,
    base: Vec<Vec<f64>>,
    mut members: Vec<Vec<usize>>,
    pairs: Vec<(usize, usize, f64)>,
    mut rng: rand_chacha::ChaCha8Rng,
) -> Result<
    (
        Vec<Vec<f64>>,
        ExpressionDataset,
        GeneSetCollection,
        SimulationTruth,
        Vec<(usize, usize, f64)>,
    ),
    Error,
> {
    let mut rows = base.clone();
    let mut shifted_genes: Vec<Vec<(usize, f64)>> = vec![Vec::new(); SIM_SETS];

    // Per-gene shifts in the positive sets: each member joins the shifted
    // subset with probability 1/2, redrawn until the subset is non-empty.
    let mixture_shift = k == 3 || k == 4;
    for s in 0..SIM_POSITIVE {
        let chosen: Vec<usize> = loop {
            let picked: Vec<usize> = members[s]
                .iter()
                .copied()
                .filter(|_| rng.random::<f64>() < 0.5)
                .collect();
            if !picked.is_empty() {
                break picked;
            }
        };
        for g in chosen {
            let sd = if mixture_shift && rng.random::<f64>() < 0.5 {
                0.5
            } else {
                1.0
            };
            let delta = sd * rng.sample::<f64, _>(StandardNormal);
            for i in SIM_CONTROL..SIM_SAMPLES {
                rows[g][i] += delta;
            }
            shifted_genes[s].push((g, delta));
        }
    }

    // Scenario 4: a lone +2 outlier gene in a random third of the null sets.
    if k == 4 {
        let mut null_sets: Vec<usize> = (SIM_POSITIVE..SIM_SETS).collect();
        for i in 0..null_sets.len() {
            let j = rng.random_range(i..null_sets.len());
            null_sets.swap(i, j);
        }
        for &s in null_sets.iter().take((SIM_SETS - SIM_POSITIVE) / 3) {
            let g = members[s][rng.random_range(0..members[s].len())];
            for i in SIM_CONTROL..SIM_SAMPLES {
                rows[g][i] += 2.0;
            }
            shifted_genes[s].push((g, 2.0));
        }
    }

    // Scenario 6: copy random genes into extra sets, preferring genes that
    // are not differentially expressed (0.95 vs 0.05).
    if k == 6 {
        // BTreeSet keeps the pool iteration order deterministic.
        let significant: std::collections::BTreeSet<usize> = shifted_genes
            .iter()
            .flatten()
            .map(|&(g, _)| g)
            .collect();
        let sig: Vec<usize> = significant.iter().copied().collect();
        let nonsig: Vec<usize> = (0..SIM_GENES).filter(|g| !significant.contains(g)).collect();
        let mut membership: Vec<std::collections::HashSet<usize>> =
            vec![std::collections::HashSet::new(); SIM_GENES];
        for (s, m) in members.iter().enumerate() {
            for &g in m {
                membership[g].insert(s);
            }
        }
        let n_copy = rng.random_range(10..=100);
        for _ in 0..n_copy {
            let pool = if rng.random::<f64>() < 0.05 { &sig } else { &nonsig };
            let gene = pool[rng.random_range(0..pool.len())];
            let n_targets = rng.random_range(2..=4usize);
            let mut candidates: Vec<usize> =
                (0..SIM_SETS).filter(|s| !membership[gene].contains(s)).collect();
            for i in 0..candidates.len() {
                let j = rng.random_range(i..candidates.len());
                candidates.swap(i, j);
            }
            for &s in candidates.iter().take(n_targets) {
                members[s].push(gene);
                membership[gene].insert(s);
            }
        }
    }

    let data = ExpressionDataset::new(
        gene_ids(SIM_GENES),
        sample_ids(SIM_SAMPLES),
        (0..SIM_SAMPLES).map(|i| i >= SIM_CONTROL).collect(),
        rows,
    )
    .expect("generated data is valid");
    let sets = GeneSetCollection::new(set_names(SIM_SETS), members).expect("generated sets are valid");
    let truth = SimulationTruth {
        scenario,
        positive_sets: (0..SIM_POSITIVE).collect(),
        shifted_genes,
        seed,
    };
    Ok((base, data, sets, truth, pairs))
}
