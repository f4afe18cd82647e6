//! Frequentist comparison methods: gene-level t-scores, set-level
//! statistics (maxmean, mean z, mean |z|, signed KS), restandardization
//! over random gene subsets, and label-permutation p-values.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use rand::Rng;

use crate::error::Error;
use crate::model::{ExpressionDataset, GeneSetCollection};
use crate::stream;

/// Gene-level two-sample t statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneScores {
    pub z: Vec<f64>,
    /// Genes whose pooled variance vanished; their z is pinned to zero.
    pub degenerate: Vec<bool>,
}

impl GeneScores {
    pub fn degenerate_count(&self) -> usize {
        self.degenerate.iter().filter(|&&d| d).count()
    }
}

/// Pooled-variance two-sample t statistic per gene:
/// (ȳ₁ − ȳ₀) / (s_p √(1/n₁ + 1/n₀)).
pub fn gene_zscores(data: &ExpressionDataset) -> GeneScores {
    let labels = data.class_labels();
    let (z, degenerate) = zscores_masked(data, labels);
    GeneScores { z, degenerate }
}

/// t statistics under an arbitrary treatment mask (used by permutations).
fn zscores_masked(data: &ExpressionDataset, mask: &[bool]) -> (Vec<f64>, Vec<bool>) {
    let n = data.n_samples();
    let n1 = mask.iter().filter(|&&t| t).count();
    let n0 = n - n1;
    debug_assert!(n1 >= 2 && n0 >= 2);
    let (n0f, n1f) = (n0 as f64, n1 as f64);
    let half_norm = (1.0 / n1f + 1.0 / n0f).sqrt();

    let mut z = Vec::with_capacity(data.n_genes());
    let mut degenerate = Vec::with_capacity(data.n_genes());
    for g in 0..data.n_genes() {
        let row = data.row(g);
        let mut sum0 = 0.0;
        let mut sum1 = 0.0;
        for (&y, &t) in row.iter().zip(mask) {
            if t {
                sum1 += y;
            } else {
                sum0 += y;
            }
        }
        let (m0, m1) = (sum0 / n0f, sum1 / n1f);
        let mut ss = 0.0;
        for (&y, &t) in row.iter().zip(mask) {
            let d = y - if t { m1 } else { m0 };
            ss += d * d;
        }
        let pooled_var = ss / (n as f64 - 2.0);
        if pooled_var == 0.0 {
            z.push(0.0);
            degenerate.push(true);
        } else {
            z.push((m1 - m0) / (pooled_var.sqrt() * half_norm));
            degenerate.push(false);
        }
    }
    (z, degenerate)
}

/// Larger of the absolute averages of the negative and positive parts:
/// max(|mean(min(z, 0))|, |mean(max(z, 0))|).
pub fn maxmean(z_set: &[f64]) -> f64 {
    assert!(!z_set.is_empty(), "maxmean needs a non-empty set");
    let n = z_set.len() as f64;
    let neg: f64 = z_set.iter().map(|&z| z.min(0.0)).sum::<f64>() / n;
    let pos: f64 = z_set.iter().map(|&z| z.max(0.0)).sum::<f64>() / n;
    neg.abs().max(pos.abs())
}

pub fn mean_z(z_set: &[f64]) -> f64 {
    assert!(!z_set.is_empty(), "mean_z needs a non-empty set");
    z_set.iter().sum::<f64>() / z_set.len() as f64
}

pub fn mean_abs_z(z_set: &[f64]) -> f64 {
    assert!(!z_set.is_empty(), "mean_abs_z needs a non-empty set");
    z_set.iter().map(|z| z.abs()).sum::<f64>() / z_set.len() as f64
}

/// Signed two-sample Kolmogorov-Smirnov statistic between a set's scores
/// and its complement's. Positive values mean the set's distribution sits
/// to the right of the complement's; on an exact tie between directions
/// the positive sign wins.
pub fn ks_signed(z_set: &[f64], z_complement: &[f64]) -> Result<f64, Error> {
    assert!(!z_set.is_empty(), "ks_signed needs a non-empty set");
    if z_complement.is_empty() {
        return Err(Error::InvalidInput(
            "ks_signed needs a non-empty complement".into(),
        ));
    }
    let mut set_sorted = z_set.to_vec();
    set_sorted.sort_by(f64::total_cmp);
    let mut all_sorted = Vec::with_capacity(z_set.len() + z_complement.len());
    all_sorted.extend_from_slice(z_set);
    all_sorted.extend_from_slice(z_complement);
    all_sorted.sort_by(f64::total_cmp);
    Ok(ks_walk(&set_sorted, &all_sorted))
}

/// Core ECDF walk. `set_sorted` must be a sorted sub-multiset of
/// `all_sorted`; the complement counts are derived by subtraction.
fn ks_walk(set_sorted: &[f64], all_sorted: &[f64]) -> f64 {
    let n_set = set_sorted.len();
    let n_comp = all_sorted.len() - n_set;
    debug_assert!(n_set > 0 && n_comp > 0);
    let mut i = 0usize;
    let mut j = 0usize;
    let mut d_plus = f64::NEG_INFINITY; // max of F_comp - F_set
    let mut d_minus = f64::NEG_INFINITY; // max of F_set - F_comp
    while j < all_sorted.len() {
        let t = all_sorted[j];
        while j < all_sorted.len() && all_sorted[j] == t {
            j += 1;
        }
        while i < n_set && set_sorted[i] <= t {
            i += 1;
        }
        let f_set = i as f64 / n_set as f64;
        let f_comp = (j - i) as f64 / n_comp as f64;
        d_plus = d_plus.max(f_comp - f_set);
        d_minus = d_minus.max(f_set - f_comp);
    }
    if d_plus >= d_minus {
        d_plus
    } else {
        -d_minus
    }
}

/// The set-level statistics a permutation test can drive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetStatistic {
    Maxmean,
    MeanZ,
    MeanAbsZ,
    KsSigned,
}

impl SetStatistic {
    /// Stable column label.
    pub fn label(&self) -> &'static str {
        match self {
            SetStatistic::Maxmean => "maxmean",
            SetStatistic::MeanZ => "mean_z",
            SetStatistic::MeanAbsZ => "mean_abs_z",
            SetStatistic::KsSigned => "ks_signed",
        }
    }

    /// Human-readable name used in report headers.
    pub fn display_name(&self) -> &'static str {
        match self {
            SetStatistic::Maxmean => "Maxmean",
            SetStatistic::MeanZ => "Mean.z",
            SetStatistic::MeanAbsZ => "Mean.abs.z",
            SetStatistic::KsSigned => "GSEA-KS (simplified)",
        }
    }

    /// Non-negative statistics use one-sided upper extremeness; signed ones
    /// are compared two-sided in absolute value.
    pub fn one_sided(&self) -> bool {
        matches!(self, SetStatistic::Maxmean | SetStatistic::MeanAbsZ)
    }

    fn compute(&self, z_subset_sorted_for_ks: Option<(&[f64], &[f64])>, z_subset: &[f64]) -> f64 {
        match self {
            SetStatistic::Maxmean => maxmean(z_subset),
            SetStatistic::MeanZ => mean_z(z_subset),
            SetStatistic::MeanAbsZ => mean_abs_z(z_subset),
            SetStatistic::KsSigned => {
                let (set_sorted, all_sorted) =
                    z_subset_sorted_for_ks.expect("KS needs sorted inputs");
                ks_walk(set_sorted, all_sorted)
            }
        }
    }
}

impl std::str::FromStr for SetStatistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "maxmean" => Ok(SetStatistic::Maxmean),
            "mean-z" | "mean_z" => Ok(SetStatistic::MeanZ),
            "mean-abs-z" | "mean_abs_z" => Ok(SetStatistic::MeanAbsZ),
            "ks" | "ks-signed" | "ks_signed" => Ok(SetStatistic::KsSigned),
            other => Err(Error::InvalidParameter(format!(
                "unknown set statistic '{other}' (expected maxmean, mean-z, mean-abs-z or ks)"
            ))),
        }
    }
}

/// Per-set statistics over the whole z vector, in collection order.
fn set_statistics(method: SetStatistic, z: &[f64], sets: &GeneSetCollection) -> Vec<f64> {
    let all_sorted: Vec<f64> = if method == SetStatistic::KsSigned {
        let mut v = z.to_vec();
        v.sort_by(f64::total_cmp);
        v
    } else {
        Vec::new()
    };
    (0..sets.n_sets())
        .map(|s| {
            let members: Vec<f64> = sets.members(s).iter().map(|&g| z[g]).collect();
            if method == SetStatistic::KsSigned {
                let mut sorted = members;
                sorted.sort_by(f64::total_cmp);
                method.compute(Some((&sorted, &all_sorted)), &[])
            } else {
                method.compute(None, &members)
            }
        })
        .collect()
}

/// Result of centering and scaling statistics by their moments under random
/// reassignment of genes to sets.
#[derive(Debug, Clone, PartialEq)]
pub struct Restandardized {
    pub values: Vec<f64>,
    /// Sets whose randomization spread vanished (sd* hit the floor).
    pub degenerate: Vec<bool>,
}

/// Floor applied to the randomization standard deviation.
const RESTD_SD_FLOOR: f64 = 1e-12;

/// Centers and scales each raw statistic by the Monte Carlo mean and
/// standard deviation of the statistic over random same-size gene subsets:
/// (T_s − mean*) / sd*. Moments are shared between sets of equal size.
pub fn restandardize<R: Rng + ?Sized>(
    raw_stats: &[f64],
    method: SetStatistic,
    z: &[f64],
    sets: &GeneSetCollection,
    n_randomizations: usize,
    rng: &mut R,
) -> Result<Restandardized, Error> {
    if n_randomizations < 100 {
        return Err(Error::InvalidParameter(format!(
            "restandardization needs at least 100 randomizations, got {n_randomizations}"
        )));
    }
    let n_genes = z.len();
    let all_sorted: Vec<f64> = if method == SetStatistic::KsSigned {
        let mut v = z.to_vec();
        v.sort_by(f64::total_cmp);
        v
    } else {
        Vec::new()
    };

    // One moment pair per distinct set size, computed lazily in set order so
    // stream consumption is reproducible.
    let mut moments: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
    let mut index_buf: Vec<usize> = (0..n_genes).collect();
    for s in 0..sets.n_sets() {
        let ell = sets.size(s);
        if ell > n_genes {
            return Err(Error::InvalidInput(format!(
                "set '{}' has {ell} genes but the dataset has only {n_genes}",
                sets.name(s)
            )));
        }
        if moments.contains_key(&ell) {
            continue;
        }
        let mut draws = Vec::with_capacity(n_randomizations);
        for _ in 0..n_randomizations {
            // Partial Fisher-Yates: the first ell entries become a uniform
            // random subset; the buffer need not be reset between draws.
            for i in 0..ell {
                let j = rng.random_range(i..n_genes);
                index_buf.swap(i, j);
            }
            let subset: Vec<f64> = index_buf[..ell].iter().map(|&g| z[g]).collect();
            let stat = if method == SetStatistic::KsSigned {
                let mut sorted = subset;
                sorted.sort_by(f64::total_cmp);
                method.compute(Some((&sorted, &all_sorted)), &[])
            } else {
                method.compute(None, &subset)
            };
            draws.push(stat);
        }
        let mean = draws.iter().sum::<f64>() / n_randomizations as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>()
            / (n_randomizations - 1) as f64;
        moments.insert(ell, (mean, var.sqrt()));
    }

    let mut values = Vec::with_capacity(raw_stats.len());
    let mut degenerate = Vec::with_capacity(raw_stats.len());
    for (s, &raw) in raw_stats.iter().enumerate() {
        let (mean, sd) = moments[&sets.size(s)];
        degenerate.push(sd < RESTD_SD_FLOOR);
        values.push((raw - mean) / sd.max(RESTD_SD_FLOOR));
    }
    Ok(Restandardized { values, degenerate })
}

/// How label permutations are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PermutationScheme {
    /// B uniformly random class-size-preserving relabelings.
    MonteCarlo { n_permutations: usize },
    /// All distinct class assignments; only feasible for n ≤ 12.
    Exhaustive,
}

impl PermutationScheme {
    /// Picks a workable scheme for the sample size: exhaustive when fewer
    /// distinct assignments exist than requested draws (and enumeration is
    /// feasible), otherwise Monte Carlo with the draw count capped below
    /// the number of distinct assignments.
    pub fn auto(n_samples: usize, n_treatment: usize, requested: usize) -> Self {
        let distinct = binomial(n_samples, n_treatment);
        if distinct <= requested as u128 {
            if n_samples <= MAX_EXHAUSTIVE_SAMPLES {
                PermutationScheme::Exhaustive
            } else {
                PermutationScheme::MonteCarlo {
                    n_permutations: (distinct - 1) as usize,
                }
            }
        } else {
            PermutationScheme::MonteCarlo {
                n_permutations: requested,
            }
        }
    }
}

/// Per-set permutation test results for one statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineResult {
    pub method: SetStatistic,
    pub set_names: Vec<String>,
    pub set_sizes: Vec<usize>,
    pub raw_stat: Vec<f64>,
    /// Present only when restandardization was requested.
    pub restd_stat: Option<Vec<f64>>,
    pub perm_pvalue: Vec<f64>,
    pub n_permutations: usize,
    pub n_randomizations: usize,
    pub exhaustive: bool,
    /// Genes with degenerate (zero pooled variance) scores.
    pub degenerate_genes: usize,
}

const MAX_EXHAUSTIVE_SAMPLES: usize = 12;

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Label-permutation p-values for one set statistic.
///
/// p = (1 + #{permutation stat as or more extreme}) / (B + 1) under Monte
/// Carlo sampling, and the exact proportion (the identity assignment
/// included) under exhaustive enumeration. With `n_randomizations`
/// present, observed and permuted statistics are restandardized before
/// comparison. Each permutation draws from its own child stream of `seed`,
/// so parallel and serial runs produce identical p-values.
pub fn permutation_pvalues(
    data: &ExpressionDataset,
    sets: &GeneSetCollection,
    method: SetStatistic,
    scheme: PermutationScheme,
    n_randomizations: Option<usize>,
    seed: u64,
) -> Result<BaselineResult, Error> {
    let n = data.n_samples();
    let n_treat = data.n_treatment();
    let distinct = binomial(n, n_treat);

    let scores = gene_zscores(data);
    let raw_stat = set_statistics(method, &scores.z, sets);
    let restd_obs = match n_randomizations {
        Some(b) => Some(
            restandardize(
                &raw_stat,
                method,
                &scores.z,
                sets,
                b,
                &mut stream::child_stream(seed, &[0]),
            )?
            .values,
        ),
        None => None,
    };
    let observed: &[f64] = restd_obs.as_deref().unwrap_or(&raw_stat);

    // Per-permutation statistics for one mask, restandardized if asked.
    let stats_for_mask = |mask: &[bool], rng: &mut rand_chacha::ChaCha8Rng| -> Result<Vec<f64>, Error> {
        let (z, _) = zscores_masked(data, mask);
        let stats = set_statistics(method, &z, sets);
        match n_randomizations {
            Some(b) => Ok(restandardize(&stats, method, &z, sets, b, rng)?.values),
            None => Ok(stats),
        }
    };

    let one_sided = method.one_sided();
    let as_extreme = move |perm: f64, obs: f64| -> bool {
        if one_sided {
            perm >= obs
        } else {
            perm.abs() >= obs.abs()
        }
    };

    let (counts, n_used, exhaustive) = match scheme {
        PermutationScheme::MonteCarlo { n_permutations } => {
            if n_permutations == 0 {
                return Err(Error::InvalidParameter(
                    "at least one permutation is required".into(),
                ));
            }
            if distinct <= n_permutations as u128 {
                return Err(Error::InvalidParameter(format!(
                    "only {distinct} distinct class assignments exist for n = {n} but \
                     {n_permutations} permutations were requested; use exhaustive enumeration"
                )));
            }
            let counts = (0..n_permutations)
                .into_par_iter()
                .map(|b| {
                    let mut rng = stream::child_stream(seed, &[1 + b as u64]);
                    // Uniform class-size-preserving relabeling.
                    let mut idx: Vec<usize> = (0..n).collect();
                    for i in 0..n {
                        let j = rng.random_range(i..n);
                        idx.swap(i, j);
                    }
                    let mut mask = vec![false; n];
                    for &i in idx.iter().take(n_treat) {
                        mask[i] = true;
                    }
                    let stats = stats_for_mask(&mask, &mut rng)?;
                    Ok(stats
                        .iter()
                        .zip(observed)
                        .map(|(&p, &o)| u64::from(as_extreme(p, o)))
                        .collect::<Vec<u64>>())
                })
                .try_reduce(
                    || vec![0u64; sets.n_sets()],
                    |mut acc, item| {
                        for (a, b) in acc.iter_mut().zip(&item) {
                            *a += b;
                        }
                        Ok(acc)
                    },
                )?;
            (counts, n_permutations, false)
        }
        PermutationScheme::Exhaustive => {
            if n > MAX_EXHAUSTIVE_SAMPLES {
                return Err(Error::InvalidParameter(format!(
                    "exhaustive permutation enumeration is limited to n ≤ {MAX_EXHAUSTIVE_SAMPLES}, got {n}"
                )));
            }
            let masks: Vec<Vec<bool>> = (0u32..(1 << n))
                .filter(|m| m.count_ones() as usize == n_treat)
                .map(|m| (0..n).map(|i| m >> i & 1 == 1).collect())
                .collect();
            let counts = masks
                .par_iter()
                .enumerate()
                .map(|(b, mask)| {
                    let mut rng = stream::child_stream(seed, &[1 + b as u64]);
                    let stats = stats_for_mask(mask, &mut rng)?;
                    Ok(stats
                        .iter()
                        .zip(observed)
                        .map(|(&p, &o)| u64::from(as_extreme(p, o)))
                        .collect::<Vec<u64>>())
                })
                .try_reduce(
                    || vec![0u64; sets.n_sets()],
                    |mut acc, item| {
                        for (a, b) in acc.iter_mut().zip(&item) {
                            *a += b;
                        }
                        Ok(acc)
                    },
                )?;
            (counts, masks.len(), true)
        }
    };

    let perm_pvalue: Vec<f64> = counts
        .iter()
        .map(|&c| {
            if exhaustive {
                // The identity assignment is one of the enumerated masks, so
                // the count is at least 1.
                c as f64 / n_used as f64
            } else {
                (1.0 + c as f64) / (n_used as f64 + 1.0)
            }
        })
        .collect();

    Ok(BaselineResult {
        method,
        set_names: sets.set_names().to_vec(),
        set_sizes: sets.sizes(),
        raw_stat,
        restd_stat: restd_obs,
        perm_pvalue,
        n_permutations: n_used,
        n_randomizations: n_randomizations.unwrap_or(0),
        exhaustive,
        degenerate_genes: scores.degenerate_count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ExpressionDataset;
    use approx::assert_relative_eq;

    fn dataset(rows: Vec<Vec<f64>>, labels: Vec<bool>) -> ExpressionDataset {
        let n = labels.len();
        ExpressionDataset::new(
            (0..rows.len()).map(|g| format!("g{g}")).collect(),
            (0..n).map(|i| format!("s{i}")).collect(),
            labels,
            rows,
        )
        .unwrap()
    }

    #[test]
    fn pooled_t_matches_hand_computation() {
        // control (0, 2), treatment (1, 3): diff 1, pooled var 2, z = 1/sqrt(2).
        let data = dataset(
            vec![vec![0.0, 2.0, 1.0, 3.0]],
            vec![false, false, true, true],
        );
        let scores = gene_zscores(&data);
        assert_relative_eq!(scores.z[0], 1.0 / 2.0_f64.sqrt(), max_relative = 1e-12);
        assert!(!scores.degenerate[0]);
    }

    #[test]
    fn zero_pooled_variance_is_flagged() {
        let data = dataset(
            vec![vec![0.0, 0.0, 1.0, 1.0]],
            vec![false, false, true, true],
        );
        let scores = gene_zscores(&data);
        assert_eq!(scores.z[0], 0.0);
        assert!(scores.degenerate[0]);
    }

    #[test]
    fn swapping_labels_negates_scores() {
        let data = dataset(
            vec![vec![0.3, 1.2, -0.5, 2.0, 0.1, 0.9]],
            vec![false, false, false, true, true, true],
        );
        let flipped = dataset(
            vec![vec![0.3, 1.2, -0.5, 2.0, 0.1, 0.9]],
            vec![true, true, true, false, false, false],
        );
        let a = gene_zscores(&data).z[0];
        let b = gene_zscores(&flipped).z[0];
        assert_relative_eq!(a, -b, max_relative = 1e-12);
    }

    #[test]
    fn maxmean_worked_examples() {
        // 50 scores of -2 and 50 zeros: T- = -1, T+ = 0 => 1.
        let mut z = vec![-2.0; 50];
        z.extend(vec![0.0; 50]);
        assert_eq!(maxmean(&z), 1.0);
        // 50 scores of -2 and 50 of 1.5: T- = -1, T+ = 0.75 => 1.
        let mut z = vec![-2.0; 50];
        z.extend(vec![1.5; 50]);
        assert_eq!(maxmean(&z), 1.0);
        assert_eq!(maxmean(&[0.0, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn mean_statistics() {
        assert_eq!(mean_z(&[1.0, -1.0]), 0.0);
        assert_eq!(mean_abs_z(&[1.0, -1.0]), 1.0);
        assert_eq!(mean_z(&[2.0, 2.0, 2.0]), 2.0);
    }

    #[test]
    fn ks_signed_separation_and_identity() {
        // Identical distributions: 0.
        assert_eq!(
            ks_signed(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(),
            0.0
        );
        // Complete right separation: +1.
        assert_eq!(
            ks_signed(&[10.0, 11.0, 12.0], &[0.0, 1.0, 2.0]).unwrap(),
            1.0
        );
        // Complete left separation: -1.
        assert_eq!(
            ks_signed(&[-10.0, -11.0], &[0.0, 1.0, 2.0]).unwrap(),
            -1.0
        );
        assert!(ks_signed(&[1.0], &[]).is_err());
    }

    #[test]
    fn restandardize_centers_random_sets() {
        // Statistics of random sets should restandardize to about zero mean.
        let mut rng = crate::stream::from_seed(61);
        let z: Vec<f64> = (0..500)
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        let sets = GeneSetCollection::new(
            (0..25).map(|s| format!("s{s}")).collect(),
            (0..25).map(|s| (s * 20..(s + 1) * 20).collect()).collect(),
        )
        .unwrap();
        let raw = set_statistics(SetStatistic::Maxmean, &z, &sets);
        let restd = restandardize(&raw, SetStatistic::Maxmean, &z, &sets, 400, &mut rng).unwrap();
        let mean = restd.values.iter().sum::<f64>() / restd.values.len() as f64;
        assert!(mean.abs() < 0.5, "restandardized mean {mean}");
        assert!(restd.degenerate.iter().all(|&d| !d));
    }

    #[test]
    fn restandardize_flags_zero_spread() {
        // Constant z makes every composition-invariant statistic constant.
        let z = vec![2.0; 40];
        let sets = GeneSetCollection::new(
            vec!["a".into(), "b".into()],
            vec![(0..10).collect(), (10..20).collect()],
        )
        .unwrap();
        let raw = set_statistics(SetStatistic::MeanZ, &z, &sets);
        let restd = restandardize(&raw, SetStatistic::MeanZ, &z, &sets, 100, &mut crate::stream::from_seed(3)).unwrap();
        assert!(restd.degenerate.iter().all(|&d| d));
        assert!(restd.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn restandardize_validates_inputs() {
        let z = vec![0.0; 10];
        let sets = GeneSetCollection::new(vec!["a".into()], vec![(0..5).collect()]).unwrap();
        let raw = vec![0.0];
        assert!(restandardize(&raw, SetStatistic::MeanZ, &z, &sets, 99, &mut crate::stream::from_seed(1)).is_err());
    }

    fn two_set_dataset() -> (ExpressionDataset, GeneSetCollection) {
        // Gene 0/1 shifted strongly, genes 2..6 noise-free constants varied.
        let rows = vec![
            vec![0.1, -0.2, 0.0, 3.1, 2.9, 3.0],
            vec![-0.1, 0.2, 0.1, 2.9, 3.2, 3.1],
            vec![0.5, -0.5, 0.2, 0.1, -0.3, 0.4],
            vec![-0.4, 0.3, -0.2, 0.2, 0.1, -0.1],
        ];
        let data = dataset(rows, vec![false, false, false, true, true, true]);
        let sets = GeneSetCollection::new(
            vec!["sig".into(), "null".into()],
            vec![vec![0, 1], vec![2, 3]],
        )
        .unwrap();
        (data, sets)
    }

    #[test]
    fn single_permutation_boundary_pvalue() {
        let (data, sets) = two_set_dataset();
        // With one permutation and add-one smoothing, p is either 1/2 or 1.
        let res = permutation_pvalues(
            &data,
            &sets,
            SetStatistic::Maxmean,
            PermutationScheme::MonteCarlo { n_permutations: 1 },
            None,
            9,
        )
        .unwrap();
        for &p in &res.perm_pvalue {
            assert!(p == 0.5 || p == 1.0, "p = {p}");
        }
    }

    #[test]
    fn requesting_too_many_permutations_advises_exhaustive() {
        let (data, sets) = two_set_dataset();
        let err = permutation_pvalues(
            &data,
            &sets,
            SetStatistic::Maxmean,
            PermutationScheme::MonteCarlo {
                n_permutations: 100,
            },
            None,
            9,
        )
        .unwrap_err();
        assert!(err.to_string().contains("exhaustive"), "{err}");
    }

    #[test]
    fn exhaustive_mode_counts_every_assignment() {
        let (data, sets) = two_set_dataset();
        let res = permutation_pvalues(
            &data,
            &sets,
            SetStatistic::Maxmean,
            PermutationScheme::Exhaustive,
            None,
            9,
        )
        .unwrap();
        assert!(res.exhaustive);
        assert_eq!(res.n_permutations, 20); // C(6, 3)
        // The strongly shifted set attains the exact minimum 2/20: the true
        // assignment and its mirror image.
        assert_relative_eq!(res.perm_pvalue[0], 0.1, max_relative = 1e-12);
        assert!(res.perm_pvalue[1] > res.perm_pvalue[0]);
    }

    #[test]
    fn auto_scheme_picks_a_feasible_mode() {
        // n = 10 has 252 distinct assignments.
        assert_eq!(
            PermutationScheme::auto(10, 5, 1000),
            PermutationScheme::Exhaustive
        );
        assert_eq!(
            PermutationScheme::auto(10, 5, 100),
            PermutationScheme::MonteCarlo { n_permutations: 100 }
        );
        // n = 16, 2 treatment: 120 distinct but too many samples to
        // enumerate; cap the Monte Carlo draws instead.
        assert_eq!(
            PermutationScheme::auto(16, 2, 1000),
            PermutationScheme::MonteCarlo { n_permutations: 119 }
        );
    }

    #[test]
    fn exhaustive_mode_is_capped_at_twelve_samples() {
        let labels: Vec<bool> = (0..16).map(|i| i >= 8).collect();
        let rows = vec![(0..16).map(|i| i as f64 * 0.1).collect(), vec![0.5; 16]];
        let data = dataset(rows, labels);
        let sets = GeneSetCollection::new(vec!["s".into()], vec![vec![0, 1]]).unwrap();
        let err = permutation_pvalues(
            &data,
            &sets,
            SetStatistic::MeanZ,
            PermutationScheme::Exhaustive,
            None,
            1,
        )
        .unwrap_err();
        assert!(err.to_string().contains("12"), "{err}");
    }

    #[test]
    fn pvalues_never_vanish_and_are_deterministic() {
        let (data, sets) = two_set_dataset();
        let run = || {
            permutation_pvalues(
                &data,
                &sets,
                SetStatistic::MeanZ,
                PermutationScheme::MonteCarlo { n_permutations: 19 },
                None,
                123,
            )
            .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a, b);
        for &p in &a.perm_pvalue {
            assert!(p >= 1.0 / 20.0 && p <= 1.0);
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;
        use rand::seq::SliceRandom;

        fn z_vec(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
            prop::collection::vec(-10.0f64..10.0, 1..max_len)
        }

        proptest! {
            #[test]
            fn maxmean_is_permutation_invariant(z in z_vec(50), seed in 0u64..1000) {
                let mut shuffled = z.clone();
                shuffled.shuffle(&mut crate::stream::from_seed(seed));
                prop_assert!((maxmean(&z) - maxmean(&shuffled)).abs() < 1e-12);
            }

            #[test]
            fn negation_symmetries(z in z_vec(50)) {
                let neg: Vec<f64> = z.iter().map(|x| -x).collect();
                prop_assert!((maxmean(&z) - maxmean(&neg)).abs() < 1e-12);
                prop_assert!((mean_abs_z(&z) - mean_abs_z(&neg)).abs() < 1e-12);
                prop_assert!((mean_z(&z) + mean_z(&neg)).abs() < 1e-12);
            }

            #[test]
            fn mean_abs_dominates_mean(z in z_vec(50)) {
                prop_assert!(mean_abs_z(&z) >= mean_z(&z).abs() - 1e-12);
            }

            #[test]
            fn ks_matches_brute_force(
                set in prop::collection::vec(-5.0f64..5.0, 1..25),
                comp in prop::collection::vec(-5.0f64..5.0, 1..25),
            ) {
                let fast = ks_signed(&set, &comp).unwrap();
                // Textbook double loop over all pooled evaluation points.
                let mut pooled: Vec<f64> = set.iter().chain(&comp).copied().collect();
                pooled.sort_by(f64::total_cmp);
                let mut d = 0.0f64;
                for &t in &pooled {
                    let f1 = set.iter().filter(|&&x| x <= t).count() as f64 / set.len() as f64;
                    let f2 = comp.iter().filter(|&&x| x <= t).count() as f64 / comp.len() as f64;
                    d = d.max((f1 - f2).abs());
                }
                prop_assert!((fast.abs() - d).abs() < 1e-12, "fast {fast}, brute {d}");
            }

            #[test]
            fn ks_negation_flips_sign(
                set in prop::collection::vec(-5.0f64..5.0, 1..20),
                comp in prop::collection::vec(-5.0f64..5.0, 1..20),
            ) {
                let fwd = ks_signed(&set, &comp).unwrap();
                let neg_set: Vec<f64> = set.iter().map(|x| -x).collect();
                let neg_comp: Vec<f64> = comp.iter().map(|x| -x).collect();
                let rev = ks_signed(&neg_set, &neg_comp).unwrap();
                // The sign convention breaks ties towards +, so skip exact
                // direction ties.
                prop_assume!((fwd.abs() - rev.abs()).abs() < 1e-12);
                if fwd.abs() > 1e-9 && (fwd + rev).abs() > 1e-12 {
                    // Only an exact two-direction tie may disagree.
                    prop_assert!((fwd - rev).abs() < 1e-12);
                    prop_assert!(has_direction_tie(&set, &comp));
                }
            }
        }

        fn has_direction_tie(set: &[f64], comp: &[f64]) -> bool {
            let mut pooled: Vec<f64> = set.iter().chain(comp).copied().collect();
            pooled.sort_by(f64::total_cmp);
            let mut d_plus = 0.0f64;
            let mut d_minus = 0.0f64;
            for &t in &pooled {
                let f1 = set.iter().filter(|&&x| x <= t).count() as f64 / set.len() as f64;
                let f2 = comp.iter().filter(|&&x| x <= t).count() as f64 / comp.len() as f64;
                d_plus = d_plus.max(f2 - f1);
                d_minus = d_minus.max(f1 - f2);
            }
            (d_plus - d_minus).abs() < 1e-12
        }
    }
}
