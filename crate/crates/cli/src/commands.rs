use std::path::PathBuf;

use anyhow::Context;
use appraise::aggregate::{aggregate, gradient_histograms_by_m, write_aggregate_csv, write_histogram_csv};
use appraise::agreement::{agreement_report, DistanceMetric};
use appraise::corpus::{
    descriptive_stats, load_corpus, parse_corpus, validate, write_corpus, write_stats_csv, Corpus, CorpusError,
    Dimension, Finding,
};
use appraise::simulator::{generate, SimulatorConfig};
use serde::{Deserialize, Serialize};

use crate::args::{AgreementArgs, IoArgs, Preset, SimulateArgs};
use crate::{open_input, required, resolve, write_run_config, CliError, CliResult, Flags, OutputDir};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoConfig {
    pub corpus: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgreementConfig {
    pub corpus: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub metric: DistanceMetric,
}

/// Parse and referential errors exit with the validation code; unreadable
/// files are runtime errors.
pub(crate) fn corpus_error(path: &std::path::Path, e: CorpusError) -> CliError {
    match e {
        CorpusError::Io(e) => CliError::Runtime(anyhow::Error::new(e).context(format!("reading {}", path.display()))),
        other => CliError::Validation(format!("{}: {other}", path.display())),
    }
}

pub(crate) fn read_corpus(path: &std::path::Path) -> CliResult<Corpus> {
    load_corpus(open_input(path)?).map_err(|e| corpus_error(path, e))
}

#[derive(Debug, Clone, Serialize)]
struct ReportedFinding<'a> {
    line: Option<usize>,
    #[serde(flatten)]
    finding: &'a Finding,
}

#[derive(Serialize)]
struct ValidationFile<'a> {
    corpus: &'a std::path::Path,
    valid: bool,
    parse_error: Option<String>,
    n_errors: usize,
    n_warnings: usize,
    findings: Vec<ReportedFinding<'a>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationSummary {
    pub errors: usize,
    pub warnings: usize,
    pub report: PathBuf,
}

/// Writes `validation_report.json`. Returns a validation error (exit 1) iff
/// the corpus cannot be parsed or has error-severity findings; the report is
/// written either way.
pub fn cmd_validate(args: &IoArgs) -> CliResult<ValidationSummary> {
    let config: IoConfig = resolve(&IoConfig::default(), args.config.as_deref(), args.flags().into_map())?;
    let corpus_path = required(&config.corpus, "corpus")?;
    let out = OutputDir::create(required(&config.out, "out")?)?;
    write_run_config(&out, "validate", &config)?;

    let input = open_input(corpus_path)?;
    let (report, parsed, parse_error) = match parse_corpus(input) {
        Ok(parsed) => (validate(&parsed.corpus), Some(parsed), None),
        Err(CorpusError::Io(e)) => {
            return Err(CliError::Runtime(anyhow::Error::new(e).context(format!("reading {}", corpus_path.display()))))
        }
        Err(e) => (Default::default(), None, Some(e.to_string())),
    };
    let findings = report
        .findings
        .iter()
        .map(|f| ReportedFinding { line: parsed.as_ref().and_then(|p| p.line_of(&f.entity)), finding: f })
        .collect();
    let errors = report.errors().count() + usize::from(parse_error.is_some());
    let warnings = report.warnings().count();
    let file = ValidationFile {
        corpus: corpus_path,
        valid: errors == 0,
        parse_error,
        n_errors: errors,
        n_warnings: warnings,
        findings,
    };
    let path = out.write_json("validation_report.json", &file)?;
    if warnings > 0 {
        eprintln!("{warnings} warning(s)");
    }
    if errors > 0 {
        let first = file
            .parse_error
            .clone()
            .or_else(|| report.errors().next().map(|f| format!("{} ({}): {}", f.code, f.entity, f.message)))
            .unwrap_or_default();
        return Err(CliError::Validation(format!("{errors} error(s), first: {first}; see {}", path.display())));
    }
    Ok(ValidationSummary { errors, warnings, report: path })
}

/// Writes `stats.csv` and `stats.json`.
pub fn cmd_stats(args: &IoArgs) -> CliResult<PathBuf> {
    let config: IoConfig = resolve(&IoConfig::default(), args.config.as_deref(), args.flags().into_map())?;
    let corpus_path = required(&config.corpus, "corpus")?;
    let out_dir = required(&config.out, "out")?;
    let corpus = read_corpus(corpus_path)?;
    let stats = descriptive_stats(&corpus).map_err(|e| corpus_error(corpus_path, e))?;
    let out = OutputDir::create(out_dir)?;
    write_run_config(&out, "stats", &config)?;
    out.write_json("stats.json", &stats)?;
    out.write("stats.csv", |w| Ok(write_stats_csv(&stats, w)?))
}

/// Writes `agreement.csv`.
pub fn cmd_agreement(args: &AgreementArgs) -> CliResult<PathBuf> {
    let flags = args.io.flags().set("metric", args.metric);
    let config: AgreementConfig = resolve(&AgreementConfig::default(), args.io.config.as_deref(), flags.into_map())?;
    let corpus_path = required(&config.corpus, "corpus")?;
    let out_dir = required(&config.out, "out")?;
    let corpus = read_corpus(corpus_path)?;
    let report = agreement_report::<f64>(&corpus, config.metric);
    let out = OutputDir::create(out_dir)?;
    write_run_config(&out, "agreement", &config)?;
    out.write("agreement.csv", |w| Ok(report.write_csv(w)?))
}

/// Writes `aggregate.csv` (one row per verbatim and dimension) and
/// `histograms.csv` (gradient level counts, one block per annotator count).
pub fn cmd_aggregate(args: &IoArgs) -> CliResult<PathBuf> {
    let config: IoConfig = resolve(&IoConfig::default(), args.config.as_deref(), args.flags().into_map())?;
    let corpus_path = required(&config.corpus, "corpus")?;
    let out_dir = required(&config.out, "out")?;
    let corpus = read_corpus(corpus_path)?;
    let labels: Vec<_> = Dimension::ALL.iter().map(|&d| (d, aggregate(&corpus, d))).collect();
    let histograms: Vec<_> =
        Dimension::ALL.iter().flat_map(|&d| gradient_histograms_by_m(&corpus, d).into_values()).collect();
    let out = OutputDir::create(out_dir)?;
    write_run_config(&out, "aggregate", &config)?;
    out.write("histograms.csv", |w| Ok(write_histogram_csv(&histograms, w)?))?;
    out.write("aggregate.csv", |w| Ok(write_aggregate_csv(labels.iter().map(|(d, l)| (*d, l)), w)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateConfig {
    pub preset: Preset,
    pub out: PathBuf,
    pub simulator: SimulatorConfig,
}

/// Writes `corpus.jsonl` and `ground_truth.jsonl`. The simulator config is the
/// preset, overlaid with `--config`, overlaid with `--seed`.
pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<SimulateConfig> {
    let preset = args.preset.unwrap_or(Preset::Default);
    let base = match preset {
        Preset::Default => SimulatorConfig::default(),
        Preset::SparseCampaign => SimulatorConfig::sparse_campaign(),
    };
    let simulator: SimulatorConfig =
        resolve(&base, args.config.as_deref(), Flags::new().set("seed", args.seed).into_map())?;
    simulator.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let out_dir = required(&args.out, "out")?.to_path_buf();
    let (corpus, truth) = generate(&simulator).context("simulation failed")?;
    let config = SimulateConfig { preset, out: out_dir, simulator };
    let out = OutputDir::create(&config.out)?;
    write_run_config(&out, "simulate", &config)?;
    out.write("corpus.jsonl", |w| Ok(write_corpus(&corpus, w)?))?;
    out.write("ground_truth.jsonl", |w| Ok(truth.write_jsonl(w)?))?;
    Ok(config)
}
