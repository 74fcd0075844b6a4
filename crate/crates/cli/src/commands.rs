//! The commands as functions from input text to output text.
//!
//! Records are processed on a worker pool and written back in input
//! order, so output depends only on the input and the configuration.

use std::collections::{HashMap, HashSet};
use std::fmt;

use fld_core::codec::record::{decode_record, encode_record, TaskRecord, TokenRecord};
use fld_core::engine::record::{needs_sidecar, resolve_parses, Sidecar};
use fld_core::engine::{filter_record, merge_annotations, AnnotatedImage, FilterReport};
use fld_core::stats::{CorpusStats, StatsReport};
use fld_core::Task;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{CliError, PipelineConfig};

/// Records per stats shard.
const SHARD: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    /// 1-based input line.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Record counts for one run. `input = output + dropped + skipped`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub command: String,
    pub input_records: u64,
    pub output_records: u64,
    /// Records the filters emptied.
    pub dropped_records: u64,
    /// Lines that failed to parse or validate.
    pub skipped_records: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drops: Option<FilterReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unmatched_refined_ids: Vec<String>,
}

impl Summary {
    fn new(command: &str) -> Self {
        Self { command: command.into(), ..Self::default() }
    }

    pub fn reconciles(&self) -> bool {
        self.input_records == self.output_records + self.dropped_records + self.skipped_records
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    /// JSONL output, one line per surviving record.
    pub output: String,
    pub summary: Summary,
    pub diagnostics: Vec<Diagnostic>,
}

/// The stats command's JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsDocument {
    pub skipped_lines: u64,
    #[serde(flatten)]
    pub report: StatsReport,
}

impl StatsDocument {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("stats serialize");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsRun {
    pub document: StatsDocument,
    pub summary: Summary,
    pub diagnostics: Vec<Diagnostic>,
}

/// Non-blank lines with their 1-based numbers.
fn lines(input: &str) -> Vec<(usize, &str)> {
    input
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l))
        .collect()
}

/// Per-line outcomes, keyed by 1-based line number.
type Numbered<T> = Vec<(usize, Result<T, String>)>;

fn par_map<T, F>(cfg: &PipelineConfig, lines: &[(usize, &str)], f: F) -> Result<Numbered<T>, CliError>
where
    T: Send,
    F: Fn(&str) -> Result<T, String> + Sync,
{
    let pool = cfg.pool()?;
    Ok(pool.install(|| lines.par_iter().map(|&(n, l)| (n, f(l))).collect()))
}

/// Splits results into successes and diagnostics. Strict mode turns the
/// first failure into an error.
fn triage<T>(
    cfg: &PipelineConfig,
    results: Vec<(usize, Result<T, String>)>,
    summary: &mut Summary,
    diagnostics: &mut Vec<Diagnostic>,
    label: &str,
) -> Result<Vec<(usize, T)>, CliError> {
    let mut ok = Vec::with_capacity(results.len());
    for (line, r) in results {
        summary.input_records += 1;
        match r {
            Ok(v) => ok.push((line, v)),
            Err(message) => {
                let d = Diagnostic { line, message: format!("{label}{message}") };
                if cfg.is_strict() {
                    return Err(CliError::Input(d.to_string()));
                }
                summary.skipped_records += 1;
                diagnostics.push(d);
            }
        }
    }
    Ok(ok)
}

fn join_lines(lines: impl IntoIterator<Item = String>) -> String {
    let mut out = String::new();
    for l in lines {
        out.push_str(&l);
        out.push('\n');
    }
    out
}

fn codec_run<F>(command: &str, input: &str, cfg: &PipelineConfig, f: F) -> Result<Run, CliError>
where
    F: Fn(&str) -> Result<String, String> + Sync,
{
    let mut summary = Summary::new(command);
    let mut diagnostics = Vec::new();
    let lines = lines(input);
    let results = par_map(cfg, &lines, f)?;
    let ok = triage(cfg, results, &mut summary, &mut diagnostics, "")?;
    summary.output_records = ok.len() as u64;
    Ok(Run { output: join_lines(ok.into_iter().map(|(_, l)| l)), summary, diagnostics })
}

/// Structured records to prompt and token-text lines. `task` overrides
/// each record's own task.
pub fn cmd_encode(input: &str, task: Option<Task>, cfg: &PipelineConfig) -> Result<Run, CliError> {
    codec_run("encode", input, cfg, |line| {
        let rec: TaskRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
        let enc = encode_record(&rec, task).map_err(|e| e.to_string())?;
        Ok(serde_json::to_string(&enc).expect("records serialize"))
    })
}

/// Token-text lines back to structured records in pixel space.
pub fn cmd_decode(input: &str, cfg: &PipelineConfig) -> Result<Run, CliError> {
    codec_run("decode", input, cfg, |line| {
        let rec: TokenRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
        let dec = decode_record(&rec).map_err(|e| e.to_string())?;
        Ok(serde_json::to_string(&dec).expect("records serialize"))
    })
}

/// Parses and validates one annotated record.
fn load(line: &str, cfg: &PipelineConfig) -> Result<AnnotatedImage, String> {
    let rec: AnnotatedImage = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if rec.fld_schema != cfg.schema_version {
        return Err(format!("schema version {}, expected {}", rec.fld_schema, cfg.schema_version));
    }
    rec.validate().map_err(|e| format!("record `{}`: {e}", rec.id))?;
    Ok(rec)
}

fn resolve(rec: &mut AnnotatedImage, sidecar: Option<&Sidecar>) -> Result<(), String> {
    match sidecar {
        Some(sc) if needs_sidecar(rec) => resolve_parses(rec, sc).map_err(|e| format!("record `{}`: {e}", rec.id)),
        _ => Ok(()),
    }
}

fn load_all(
    input: &str,
    cfg: &PipelineConfig,
    summary: &mut Summary,
    diagnostics: &mut Vec<Diagnostic>,
    label: &str,
) -> Result<Vec<(usize, AnnotatedImage)>, CliError> {
    let lines = lines(input);
    let results = par_map(cfg, &lines, |l| load(l, cfg))?;
    triage(cfg, results, summary, diagnostics, label)
}

fn require_sidecar(recs: &[(usize, AnnotatedImage)], cfg: &PipelineConfig, sidecar: Option<&Sidecar>) -> Result<(), CliError> {
    if cfg.filter.text_filters && sidecar.is_none() {
        if let Some((line, rec)) = recs.iter().find(|(_, r)| needs_sidecar(r)) {
            return Err(CliError::Config(format!(
                "line {line}: record `{}` refers to sidecar parses but no .conllu file was given",
                rec.id
            )));
        }
    }
    Ok(())
}

/// Filters each record and keeps the survivors in order.
fn filter_stage(
    recs: Vec<(usize, AnnotatedImage)>,
    cfg: &PipelineConfig,
    sidecar: Option<&Sidecar>,
    summary: &mut Summary,
    diagnostics: &mut Vec<Diagnostic>,
) -> Result<String, CliError> {
    let pool = cfg.pool()?;
    let results: Numbered<(Option<AnnotatedImage>, FilterReport)> = pool.install(|| {
        recs.into_par_iter()
            .map(|(line, mut rec)| {
                let r = resolve(&mut rec, sidecar).and_then(|()| {
                    let (out, report) = filter_record(&rec, &cfg.filter).map_err(|e| format!("record `{}`: {e}", rec.id))?;
                    let emptied = out.is_empty() && !rec.is_empty();
                    Ok(((!emptied).then_some(out), report))
                });
                (line, r)
            })
            .collect()
    });
    let mut drops = FilterReport::default();
    let mut out = Vec::new();
    for (line, r) in results {
        match r {
            Ok((kept, report)) => {
                drops.merge(&report);
                match kept {
                    Some(rec) => out.push(rec.to_json_line()),
                    None => summary.dropped_records += 1,
                }
            }
            Err(message) => {
                let d = Diagnostic { line, message };
                if cfg.is_strict() {
                    return Err(CliError::Input(d.to_string()));
                }
                summary.skipped_records += 1;
                diagnostics.push(d);
            }
        }
    }
    summary.output_records = out.len() as u64;
    summary.drops = Some(drops);
    Ok(join_lines(out))
}

/// Applies the text, region and triplet filters to every record. A record
/// the filters empty is dropped.
pub fn cmd_filter(input: &str, sidecar: Option<&Sidecar>, cfg: &PipelineConfig) -> Result<Run, CliError> {
    let mut summary = Summary::new("filter");
    let mut diagnostics = Vec::new();
    let recs = load_all(input, cfg, &mut summary, &mut diagnostics, "")?;
    require_sidecar(&recs, cfg, sidecar)?;
    let output = filter_stage(recs, cfg, sidecar, &mut summary, &mut diagnostics)?;
    Ok(Run { output, summary, diagnostics })
}

fn check_unique(recs: &[(usize, AnnotatedImage)], file: &str) -> Result<(), CliError> {
    let mut seen = HashSet::new();
    for (line, r) in recs {
        if !seen.insert(r.id.as_str()) {
            return Err(CliError::Input(format!("{file} line {line}: duplicate id `{}`", r.id)));
        }
    }
    Ok(())
}

/// Merges refined annotations into the originals by id, then filters.
/// Originals without a refined record are filtered as they are.
pub fn cmd_refine(
    original: &str,
    refined: &str,
    sidecar: Option<&Sidecar>,
    cfg: &PipelineConfig,
) -> Result<Run, CliError> {
    let mut summary = Summary::new("refine");
    let mut diagnostics = Vec::new();
    let originals = load_all(original, cfg, &mut summary, &mut diagnostics, "")?;
    let mut refined_summary = Summary::default();
    let refined = load_all(refined, cfg, &mut refined_summary, &mut diagnostics, "refined: ")?;
    check_unique(&originals, "original")?;
    check_unique(&refined, "refined")?;
    require_sidecar(&originals, cfg, sidecar)?;
    require_sidecar(&refined, cfg, sidecar)?;

    let known: HashSet<&str> = originals.iter().map(|(_, r)| r.id.as_str()).collect();
    summary.unmatched_refined_ids =
        refined.iter().filter(|(_, r)| !known.contains(r.id.as_str())).map(|(_, r)| r.id.clone()).collect();
    let mut by_id: HashMap<String, AnnotatedImage> = refined.into_iter().map(|(_, r)| (r.id.clone(), r)).collect();

    let mut merged = Vec::with_capacity(originals.len());
    for (line, mut orig) in originals {
        let result = resolve(&mut orig, sidecar).and_then(|()| {
            let mut other = by_id.remove(&orig.id).unwrap_or_else(|| AnnotatedImage::new(orig.id.clone(), orig.size));
            resolve(&mut other, sidecar)?;
            merge_annotations(&orig, &other, &cfg.filter).map_err(|e| format!("record `{}`: {e}", orig.id))
        });
        match result {
            Ok(m) => merged.push((line, m)),
            Err(message) => {
                let d = Diagnostic { line, message };
                if cfg.is_strict() {
                    return Err(CliError::Input(d.to_string()));
                }
                summary.skipped_records += 1;
                diagnostics.push(d);
            }
        }
    }
    let output = filter_stage(merged, cfg, None, &mut summary, &mut diagnostics)?;
    Ok(Run { output, summary, diagnostics })
}

/// Corpus statistics. Parses come from the records or the sidecar; records
/// with unparsed texts are left out of the semantic table only.
pub fn cmd_stats(input: &str, sidecar: Option<&Sidecar>, cfg: &PipelineConfig) -> Result<StatsRun, CliError> {
    let mut summary = Summary::new("stats");
    let mut diagnostics = Vec::new();
    let lines = lines(input);
    let results = par_map(cfg, &lines, |l| {
        let mut rec = load(l, cfg)?;
        resolve(&mut rec, sidecar)?;
        Ok(rec)
    })?;
    let recs: Vec<AnnotatedImage> =
        triage(cfg, results, &mut summary, &mut diagnostics, "")?.into_iter().map(|(_, r)| r).collect();
    summary.output_records = recs.len() as u64;

    let pool = cfg.pool()?;
    let shards: Vec<CorpusStats> = pool.install(|| {
        recs.par_chunks(SHARD)
            .map(|chunk| {
                let mut s = CorpusStats::new(cfg.heatmap_resolution);
                chunk.iter().for_each(|r| s.add(r));
                s
            })
            .collect()
    });
    let mut total = CorpusStats::new(cfg.heatmap_resolution);
    for s in &shards {
        total.merge(s);
    }
    let document = StatsDocument { skipped_lines: summary.skipped_records, report: total.finish() };
    Ok(StatsRun { document, summary, diagnostics })
}

/// Checks every record against the schema. Valid records count as output,
/// invalid ones as skipped.
pub fn cmd_validate(input: &str, sidecar: Option<&Sidecar>, cfg: &PipelineConfig) -> Result<Run, CliError> {
    let mut summary = Summary::new("validate");
    let mut diagnostics = Vec::new();
    let lines = lines(input);
    let results = par_map(cfg, &lines, |l| {
        let mut rec = load(l, cfg)?;
        resolve(&mut rec, sidecar)
    })?;
    let ok = triage(cfg, results, &mut summary, &mut diagnostics, "")?;
    summary.output_records = ok.len() as u64;
    Ok(Run { output: String::new(), summary, diagnostics })
}
