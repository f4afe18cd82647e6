//! File formats and persistence: expression matrices with label files,
//! GMT gene sets, result tables, and run metadata.
//!
//! All writers emit UTF-8 with LF line endings and go through a
//! temp-file-then-rename so partially written outputs never appear.
//! Matrices serialize floats at full precision (shortest round-trip
//! form); report tables round to 4 significant digits.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{BaselineResult, SetStatistic};
use crate::error::Error;
use crate::evaluation::{BenchmarkReport, MethodSpec};
use crate::model::{
    ExpressionDataset, GeneSetCollection, McmcConfig, ModelVariant, PosteriorSummary,
};
use crate::sampler::ChainDiagnostics;
use crate::simgen::{PriorCorrelationDemo, Scenario, SimulationTruth};

/// File names written into an output directory.
pub mod files {
    pub const MATRIX: &str = "matrix.tsv";
    pub const LABELS: &str = "labels.tsv";
    pub const GMT: &str = "sets.gmt";
    pub const TRUTH: &str = "truth.json";
    pub const SET_TABLE: &str = "sets.tsv";
    pub const GENE_TABLE: &str = "genes.tsv";
    pub const BASELINE_TABLE: &str = "baseline.tsv";
    pub const BENCHMARK_TABLE: &str = "benchmark.tsv";
    pub const BENCHMARK_DETAIL: &str = "benchmark.json";
    pub const PRIOR_DEMO: &str = "prior_correlation.tsv";
    pub const METADATA: &str = "run_metadata.json";
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Writes through a sibling temp file and renames into place.
pub fn atomic_write(path: &Path, contents: &str) -> Result<(), Error> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// Rounds to `digits` significant digits and prints the shortest decimal
/// form of the result.
pub fn fmt_sig(x: f64, digits: u32) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    let p = digits as i32 - 1 - mag;
    let factor = 10f64.powi(p);
    let rounded = (x * factor).round() / factor;
    format!("{rounded}")
}

/// Reads a `gene_id<TAB>sample...` matrix and a two-column
/// `sample_id<TAB>{0|1}` label file. Sample order comes from the matrix
/// header; labels are matched by id, not position.
pub fn read_matrix(matrix_path: &Path, labels_path: &Path) -> Result<ExpressionDataset, Error> {
    let matrix_text = fs::read_to_string(matrix_path).map_err(io_err(matrix_path))?;
    let mut lines = matrix_text.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(matrix_path, 1, "empty matrix file"))?;
    let header_fields: Vec<&str> = header.split('\t').collect();
    if header_fields.len() < 2 {
        return Err(parse_err(
            matrix_path,
            1,
            "header must be gene_id followed by at least one sample id",
        ));
    }
    let sample_ids: Vec<String> = header_fields[1..].iter().map(|s| s.to_string()).collect();
    let n = sample_ids.len();
    {
        let mut seen = std::collections::HashSet::new();
        for id in &sample_ids {
            if !seen.insert(id.as_str()) {
                return Err(parse_err(matrix_path, 1, format!("duplicate sample id '{id}'")));
            }
        }
    }

    let mut gene_ids = Vec::new();
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != n + 1 {
            return Err(parse_err(
                matrix_path,
                line_no,
                format!("expected {} fields, found {}", n + 1, fields.len()),
            ));
        }
        let gene = fields[0].to_string();
        let mut row = Vec::with_capacity(n);
        for (j, cell) in fields[1..].iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| {
                parse_err(
                    matrix_path,
                    line_no,
                    format!(
                        "non-numeric value '{cell}' for gene '{gene}' in column '{}'",
                        sample_ids[j]
                    ),
                )
            })?;
            if !value.is_finite() {
                return Err(parse_err(
                    matrix_path,
                    line_no,
                    format!(
                        "non-finite value '{cell}' for gene '{gene}' in column '{}'",
                        sample_ids[j]
                    ),
                ));
            }
            row.push(value);
        }
        gene_ids.push(gene);
        rows.push(row);
    }

    let labels_text = fs::read_to_string(labels_path).map_err(io_err(labels_path))?;
    let mut label_of: HashMap<String, bool> = HashMap::new();
    for (idx, line) in labels_text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let mut parts = line.split('\t');
        let (id, value) = match (parts.next(), parts.next(), parts.next()) {
            (Some(id), Some(value), None) => (id, value),
            _ => {
                return Err(parse_err(
                    labels_path,
                    line_no,
                    "expected exactly two tab-separated fields: sample_id and 0|1",
                ))
            }
        };
        let label = match value {
            "0" => false,
            "1" => true,
            other => {
                return Err(parse_err(
                    labels_path,
                    line_no,
                    format!("class label for '{id}' must be 0 or 1, got '{other}'"),
                ))
            }
        };
        if label_of.insert(id.to_string(), label).is_some() {
            return Err(parse_err(
                labels_path,
                line_no,
                format!("duplicate label for sample '{id}'"),
            ));
        }
    }
    for id in label_of.keys() {
        if !sample_ids.contains(id) {
            return Err(Error::InvalidInput(format!(
                "label file mentions unknown sample '{id}'"
            )));
        }
    }
    let class_labels: Vec<bool> = sample_ids
        .iter()
        .map(|id| {
            label_of.get(id).copied().ok_or_else(|| {
                Error::InvalidInput(format!("label file is missing sample '{id}'"))
            })
        })
        .collect::<Result<_, _>>()?;

    ExpressionDataset::new(gene_ids, sample_ids, class_labels, rows)
}

/// Writes the matrix and label files read back by [`read_matrix`]. Values
/// round-trip exactly.
pub fn write_matrix(
    data: &ExpressionDataset,
    matrix_path: &Path,
    labels_path: &Path,
) -> Result<(), Error> {
    let mut out = String::with_capacity(data.n_genes() * data.n_samples() * 20);
    out.push_str("gene_id");
    for id in data.sample_ids() {
        out.push('\t');
        out.push_str(id);
    }
    out.push('\n');
    for g in 0..data.n_genes() {
        out.push_str(&data.gene_ids()[g]);
        for &v in data.row(g) {
            out.push('\t');
            out.push_str(&format!("{v}"));
        }
        out.push('\n');
    }
    atomic_write(matrix_path, &out)?;

    let mut labels = String::new();
    for (id, &t) in data.sample_ids().iter().zip(data.class_labels()) {
        labels.push_str(id);
        labels.push('\t');
        labels.push(if t { '1' } else { '0' });
        labels.push('\n');
    }
    atomic_write(labels_path, &labels)
}

/// Counts of inputs dropped while loading a GMT file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GmtWarnings {
    /// Gene names absent from the dataset.
    pub genes_missing: usize,
    /// Sets dropped for ending up with fewer than 2 mapped genes.
    pub sets_dropped: usize,
    /// Duplicate gene names collapsed within a line.
    pub genes_deduplicated: usize,
}

/// Parses the MSigDB-style GMT format: one set per line,
/// `name<TAB>description<TAB>gene<TAB>gene...`. Genes absent from the
/// dataset are dropped (counted), duplicates within a line collapse to one
/// membership, and sets left with fewer than 2 genes are dropped (counted).
pub fn parse_gmt(
    path: &Path,
    data: &ExpressionDataset,
) -> Result<(GeneSetCollection, GmtWarnings), Error> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let index_of: HashMap<&str, usize> = data
        .gene_ids()
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();

    let mut warnings = GmtWarnings::default();
    let mut names = Vec::new();
    let mut sets = Vec::new();
    let mut any_line = false;
    for (idx, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        any_line = true;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 3 {
            return Err(parse_err(
                path,
                idx + 1,
                format!(
                    "set '{}' needs name, description and at least one gene",
                    fields.first().copied().unwrap_or("")
                ),
            ));
        }
        let mut members = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for gene in &fields[2..] {
            if !seen.insert(*gene) {
                warnings.genes_deduplicated += 1;
                continue;
            }
            match index_of.get(gene) {
                Some(&i) => members.push(i),
                None => warnings.genes_missing += 1,
            }
        }
        if members.len() < 2 {
            warnings.sets_dropped += 1;
            continue;
        }
        names.push(fields[0].to_string());
        sets.push(members);
    }
    if !any_line {
        return Err(Error::InvalidInput(format!(
            "GMT file {} is empty",
            path.display()
        )));
    }
    if sets.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no usable gene sets in {} after dropping {}",
            path.display(),
            warnings.sets_dropped
        )));
    }
    Ok((GeneSetCollection::new(names, sets)?, warnings))
}

/// Writes a GMT file whose lines read back into the same collection.
pub fn write_gmt(
    sets: &GeneSetCollection,
    data: &ExpressionDataset,
    path: &Path,
) -> Result<(), Error> {
    let mut out = String::new();
    for s in 0..sets.n_sets() {
        out.push_str(sets.name(s));
        out.push_str("\tna");
        for &g in sets.members(s) {
            out.push('\t');
            out.push_str(&data.gene_ids()[g]);
        }
        out.push('\n');
    }
    atomic_write(path, &out)
}

pub fn write_truth(truth: &SimulationTruth, path: &Path) -> Result<(), Error> {
    let json = serde_json::to_string_pretty(truth).expect("truth serializes");
    atomic_write(path, &format!("{json}\n"))
}

pub fn read_truth(path: &Path) -> Result<SimulationTruth, Error> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, e.line(), e.to_string()))
}

/// Writes the per-set posterior table: columns set_name, n_genes,
/// mean_tau_sq, prob_null, flagged; sorted by ascending prob_null with
/// descending mean_tau_sq breaking ties (simple variant: by descending
/// mean_tau_sq). `flagged` marks prob_null ≤ cutoff.
pub fn write_set_table(
    summary: &PosteriorSummary,
    cutoff: f64,
    path: &Path,
) -> Result<(), Error> {
    let mut order: Vec<usize> = (0..summary.sets.len()).collect();
    order.sort_by(|&a, &b| {
        let (sa, sb) = (&summary.sets[a], &summary.sets[b]);
        match (sa.prob_null, sb.prob_null) {
            (Some(pa), Some(pb)) => pa
                .total_cmp(&pb)
                .then(sb.mean_tau_sq.total_cmp(&sa.mean_tau_sq)),
            _ => sb.mean_tau_sq.total_cmp(&sa.mean_tau_sq),
        }
    });
    let mut out = String::from("set_name\tn_genes\tmean_tau_sq\tprob_null\tflagged\n");
    for &i in &order {
        let set = &summary.sets[i];
        let (prob, flagged) = match set.prob_null {
            Some(p) => (fmt_sig(p, 4), p <= cutoff),
            None => ("NA".into(), false),
        };
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            set.name,
            set.size,
            fmt_sig(set.mean_tau_sq, 4),
            prob,
            flagged
        ));
    }
    atomic_write(path, &out)
}

/// Writes the per-membership posterior table in slot order.
pub fn write_gene_table(summary: &PosteriorSummary, path: &Path) -> Result<(), Error> {
    let mut out = String::from("set_name\tgene_id\tmean_beta\ttail_prob\n");
    for gene in &summary.genes {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            gene.set_name,
            gene.gene_id,
            fmt_sig(gene.mean_beta, 4),
            fmt_sig(gene.tail_prob, 4)
        ));
    }
    atomic_write(path, &out)
}

/// Writes the per-set baseline table, most significant first.
pub fn write_baseline_table(result: &BaselineResult, path: &Path) -> Result<(), Error> {
    let mut order: Vec<usize> = (0..result.set_names.len()).collect();
    order.sort_by(|&a, &b| {
        result.perm_pvalue[a]
            .total_cmp(&result.perm_pvalue[b])
            .then(result.raw_stat[b].abs().total_cmp(&result.raw_stat[a].abs()))
    });
    let mut out = String::from("set_name\tn_genes\traw_stat\trestd_stat\tperm_pvalue\n");
    for &i in &order {
        let restd = match &result.restd_stat {
            Some(v) => fmt_sig(v[i], 4),
            None => "NA".into(),
        };
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            result.set_names[i],
            result.set_sizes[i],
            fmt_sig(result.raw_stat[i], 4),
            restd,
            fmt_sig(result.perm_pvalue[i], 4)
        ));
    }
    atomic_write(path, &out)
}

/// Writes the benchmark summary table (one row per scenario × method).
pub fn write_benchmark_table(report: &BenchmarkReport, path: &Path) -> Result<(), Error> {
    let mut out = String::from("scenario\tmethod\tmean_auc_pct\tse_pct\tn_replicates\n");
    for cell in &report.cells {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            cell.scenario.label(),
            cell.method,
            fmt_sig(cell.mean_auc_pct, 4),
            fmt_sig(cell.se_pct, 4),
            cell.n_replicates
        ));
    }
    atomic_write(path, &out)
}

/// Writes the full benchmark detail (replicate AUCs, paired comparisons,
/// adapter notes) as JSON.
pub fn write_benchmark_detail(report: &BenchmarkReport, path: &Path) -> Result<(), Error> {
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    atomic_write(path, &format!("{json}\n"))
}

/// Writes the prior-correlation demonstration as a two-column TSV.
pub fn write_prior_demo(demo: &PriorCorrelationDemo, path: &Path) -> Result<(), Error> {
    let mut out = String::from("r_within\tr_between\n");
    for (w, b) in demo.r_within.iter().zip(&demo.r_between) {
        out.push_str(&format!("{w}\t{b}\n"));
    }
    atomic_write(path, &out)
}

/// Baseline subcommand settings recorded in run metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSettings {
    pub method: SetStatistic,
    pub n_permutations: usize,
    pub exhaustive: bool,
    pub restandardize: bool,
    pub n_randomizations: usize,
}

/// Benchmark subcommand settings recorded in run metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSettings {
    pub scenarios: Vec<Scenario>,
    pub methods: Vec<MethodSpec>,
    pub n_replicates: usize,
    pub n_permutations: usize,
    pub n_randomizations: usize,
}

/// Prior-demonstration settings recorded in run metadata.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemoSettings {
    pub n_reps: usize,
    pub n_draws: usize,
}

/// Everything needed to reproduce a run, written alongside its outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub seed: u64,
    pub threads: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gmt: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mcmc: Option<McmcConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benchmark: Option<BenchmarkSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demo: Option<DemoSettings>,
}

impl RunConfig {
    pub fn new(command: impl Into<String>, seed: u64, threads: usize) -> Self {
        Self {
            command: command.into(),
            seed,
            threads,
            matrix: None,
            labels: None,
            gmt: None,
            out: None,
            mcmc: None,
            cutoff: None,
            baseline: None,
            benchmark: None,
            scenario: None,
            shift: None,
            demo: None,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if let Some(c) = self.cutoff {
            if !(c > 0.0 && c < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "cutoff must lie strictly inside (0, 1), got {c}"
                )));
            }
        }
        if let Some(mcmc) = &self.mcmc {
            mcmc.validate()?;
        }
        Ok(())
    }
}

/// Run metadata: the config plus tool version, diagnostics and warnings.
/// Contains no timestamps, so identical runs produce identical bytes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<ChainDiagnostics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gmt_warnings: Option<GmtWarnings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<ModelVariant>,
}

impl RunMetadata {
    pub fn new(config: RunConfig) -> Self {
        Self {
            tool: "bgsa".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config,
            diagnostics: None,
            gmt_warnings: None,
            variant: None,
        }
    }
}

pub fn write_run_metadata(meta: &RunMetadata, path: &Path) -> Result<(), Error> {
    let json = serde_json::to_string_pretty(meta).expect("metadata serializes");
    atomic_write(path, &format!("{json}\n"))
}

pub fn read_run_metadata(path: &Path) -> Result<RunMetadata, Error> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, e.line(), e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GeneSummary, SetSummary};
    use crate::simgen;

    fn toy_dataset() -> ExpressionDataset {
        ExpressionDataset::new(
            vec!["gA".into(), "gB".into()],
            vec!["s1".into(), "s2".into(), "s3".into(), "s4".into()],
            vec![false, false, true, true],
            vec![
                vec![0.1, -0.25, 1.5, 0.75],
                vec![3.0, 3.0, 3.0, 3.125],
            ],
        )
        .unwrap()
    }

    #[test]
    fn matrix_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let matrix = dir.path().join(files::MATRIX);
        let labels = dir.path().join(files::LABELS);
        let data = toy_dataset();
        write_matrix(&data, &matrix, &labels).unwrap();
        let back = read_matrix(&matrix, &labels).unwrap();
        assert_eq!(data, back);
    }

    #[test]
    fn generated_matrix_round_trips_exactly() {
        // Full-precision serialization must survive arbitrary doubles.
        let dir = tempfile::tempdir().unwrap();
        let (data, _, _) = simgen::gen_illustrative(1.0, 99);
        let matrix = dir.path().join(files::MATRIX);
        let labels = dir.path().join(files::LABELS);
        write_matrix(&data, &matrix, &labels).unwrap();
        let back = read_matrix(&matrix, &labels).unwrap();
        assert_eq!(data, back);
    }

    #[test]
    fn label_reconciliation_is_by_id() {
        let dir = tempfile::tempdir().unwrap();
        let matrix = dir.path().join("m.tsv");
        let labels = dir.path().join("l.tsv");
        fs::write(&matrix, "gene_id\ta\tb\tc\td\ng1\t1\t2\t3\t4\n").unwrap();
        // labels listed in a different order than the header
        fs::write(&labels, "d\t1\na\t0\nc\t1\nb\t0\n").unwrap();
        let data = read_matrix(&matrix, &labels).unwrap();
        assert_eq!(data.class_labels(), &[false, false, true, true]);
    }

    #[test]
    fn missing_label_names_the_sample() {
        let dir = tempfile::tempdir().unwrap();
        let matrix = dir.path().join("m.tsv");
        let labels = dir.path().join("l.tsv");
        fs::write(&matrix, "gene_id\ta\tb\tc\td\ng1\t1\t2\t3\t4\n").unwrap();
        fs::write(&labels, "a\t0\nb\t0\nc\t1\n").unwrap();
        let err = read_matrix(&matrix, &labels).unwrap_err();
        assert!(err.to_string().contains("'d'"), "{err}");
    }

    #[test]
    fn unknown_label_and_bad_cell_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let matrix = dir.path().join("m.tsv");
        let labels = dir.path().join("l.tsv");
        fs::write(&matrix, "gene_id\ta\tb\tc\td\ng1\t1\t2\t3\t4\n").unwrap();
        fs::write(&labels, "a\t0\nb\t0\nc\t1\nd\t1\nzz\t0\n").unwrap();
        let err = read_matrix(&matrix, &labels).unwrap_err();
        assert!(err.to_string().contains("zz"), "{err}");

        fs::write(&matrix, "gene_id\ta\tb\tc\td\ng1\t1\tNA\t3\t4\n").unwrap();
        fs::write(&labels, "a\t0\nb\t0\nc\t1\nd\t1\n").unwrap();
        let err = read_matrix(&matrix, &labels).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("g1") && msg.contains('b'), "{msg}");

        // NaN tokens parse as floats but are rejected as non-finite.
        fs::write(&matrix, "gene_id\ta\tb\tc\td\ng1\t1\tNaN\t3\t4\n").unwrap();
        assert!(read_matrix(&matrix, &labels).is_err());
    }

    #[test]
    fn gmt_parsing_examples() {
        let dir = tempfile::tempdir().unwrap();
        let data = toy_dataset();
        let path = dir.path().join("sets.gmt");

        fs::write(&path, "setA\tdesc\tgA\tgB\tgA\nsetB\tdesc\tmissing1\tmissing2\n").unwrap();
        let (sets, warnings) = parse_gmt(&path, &data).unwrap();
        assert_eq!(sets.n_sets(), 1);
        assert_eq!(sets.size(0), 2);
        assert_eq!(warnings.genes_missing, 2);
        assert_eq!(warnings.sets_dropped, 1);
        assert_eq!(warnings.genes_deduplicated, 1);

        fs::write(&path, "short\tonly-two-fields\n").unwrap();
        assert!(matches!(parse_gmt(&path, &data), Err(Error::Parse { .. })));

        fs::write(&path, "").unwrap();
        assert!(parse_gmt(&path, &data).is_err());
    }

    #[test]
    fn gmt_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let (data, sets, _) = simgen::gen_illustrative(1.0, 5);
        let path = dir.path().join("sets.gmt");
        write_gmt(&sets, &data, &path).unwrap();
        let (back, warnings) = parse_gmt(&path, &data).unwrap();
        assert_eq!(sets, back);
        assert_eq!(warnings, GmtWarnings::default());
    }

    #[test]
    fn truth_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let (_, _, truth) = simgen::gen_simulation(Scenario::Sim3, 7).unwrap();
        let path = dir.path().join(files::TRUTH);
        write_truth(&truth, &path).unwrap();
        assert_eq!(read_truth(&path).unwrap(), truth);
    }

    fn summary_with(prob_null: &[Option<f64>], mean_tau: &[f64]) -> PosteriorSummary {
        PosteriorSummary {
            sets: prob_null
                .iter()
                .zip(mean_tau)
                .enumerate()
                .map(|(i, (&p, &t))| SetSummary {
                    name: format!("set{i}"),
                    size: 10 + i,
                    mean_tau_sq: t,
                    prob_null: p,
                })
                .collect(),
            genes: vec![GeneSummary {
                set_name: "set0".into(),
                gene_id: "g1".into(),
                mean_beta: 0.123456,
                tail_prob: 0.5,
            }],
            retained: 100,
            seed: 1,
            variant: ModelVariant::Mixture,
        }
    }

    #[test]
    fn set_table_sorts_and_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(files::SET_TABLE);
        // equal prob_null: order by mean_tau_sq descending
        let summary = summary_with(
            &[Some(0.5), Some(0.004), Some(0.004), Some(0.2)],
            &[1.0, 0.3, 0.9, 0.5],
        );
        write_set_table(&summary, 0.1, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("set2"), "{text}");
        assert!(lines[2].starts_with("set1"), "{text}");
        assert!(lines[1].ends_with("true"));
        assert!(lines[3].starts_with("set3") && lines[3].ends_with("false"));
        // 9 passing rows shape: flagged column is column 5
        assert_eq!(lines[0], "set_name\tn_genes\tmean_tau_sq\tprob_null\tflagged");
    }

    #[test]
    fn empty_passing_list_still_writes_headers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(files::SET_TABLE);
        let summary = PosteriorSummary {
            sets: Vec::new(),
            genes: Vec::new(),
            retained: 10,
            seed: 0,
            variant: ModelVariant::Mixture,
        };
        write_set_table(&summary, 0.1, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "set_name\tn_genes\tmean_tau_sq\tprob_null\tflagged\n");
    }

    #[test]
    fn simple_variant_writes_na_prob() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(files::SET_TABLE);
        let summary = summary_with(&[None, None], &[0.2, 0.9]);
        write_set_table(&summary, 0.1, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[1].starts_with("set1"));
        assert!(lines[1].contains("\tNA\t"));
    }

    #[test]
    fn metadata_round_trips_and_has_no_timestamps() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(files::METADATA);
        let mut config = RunConfig::new("fit", 42, 1);
        config.cutoff = Some(0.1);
        config.mcmc = Some(McmcConfig::new(2000, 500, 42, ModelVariant::Mixture).unwrap());
        let meta = RunMetadata::new(config);
        write_run_metadata(&meta, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"seed\": 42"));
        let back = read_run_metadata(&path).unwrap();
        assert_eq!(back.config.seed, 42);
        write_run_metadata(&meta, &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), text);
    }

    #[test]
    fn fmt_sig_rounds_to_four_digits() {
        assert_eq!(fmt_sig(0.0043219, 4), "0.004322");
        assert_eq!(fmt_sig(12.3456, 4), "12.35");
        assert_eq!(fmt_sig(-0.0999999, 4), "-0.1");
        assert_eq!(fmt_sig(0.0, 4), "0");
        assert_eq!(fmt_sig(123456.0, 4), "123500");
        assert_eq!(fmt_sig(1.0, 4), "1");
    }

    #[test]
    fn cutoff_validation() {
        let mut config = RunConfig::new("fit", 0, 1);
        config.cutoff = Some(1.0);
        assert!(config.validate().is_err());
        config.cutoff = Some(0.1);
        assert!(config.validate().is_ok());
    }
}
