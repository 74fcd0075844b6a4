use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use fld_core::engine::record::Sidecar;
use fld_core::engine::FilterConfig;
use fld_core::stats::{BoxSource, StatsReport};
use fld_core::Task;
use serde::Serialize;

use crate::commands::{cmd_decode, cmd_encode, cmd_filter, cmd_refine, cmd_stats, cmd_validate, Diagnostic, Summary};
use crate::{CliError, ConfigFile, PipelineConfig, Strictness};

#[derive(Debug, Parser)]
#[command(name = "fld", version, about = "Location-token codec and annotation pipeline")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Structured records to prompt and token-text lines.
    Encode {
        #[command(flatten)]
        common: Common,
        /// Task for every record, overriding the records' own.
        #[arg(long)]
        task: Option<Task>,
    },
    /// Token-text lines back to structured records.
    Decode {
        #[command(flatten)]
        common: Common,
    },
    /// Filter annotated records.
    Filter {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        filter: FilterArgs,
        /// Sidecar .conllu file with parses referenced by `parse_ref`.
        #[arg(long)]
        conllu: Option<PathBuf>,
    },
    /// Merge refined annotations into the originals, then filter.
    Refine {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        filter: FilterArgs,
        /// Refined records, matched to the input by id.
        #[arg(long)]
        refined: PathBuf,
        #[arg(long)]
        conllu: Option<PathBuf>,
    },
    /// Corpus statistics as JSON, plus CSV tables on request.
    Stats {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        conllu: Option<PathBuf>,
        /// Directory for CSV tables.
        #[arg(long)]
        csv_dir: Option<PathBuf>,
        /// Center heatmap cells per side.
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Check records against the schema.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        conllu: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Input JSONL, `-` for stdin.
    #[arg(short, long, default_value = "-")]
    pub input: String,
    /// Output file, `-` for stdout.
    #[arg(short, long, default_value = "-")]
    pub output: String,
    /// TOML config. Flags win over it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads.
    #[arg(short, long)]
    pub jobs: Option<usize>,
    /// Stop at the first bad line.
    #[arg(long, conflicts_with = "lenient")]
    pub strict: bool,
    /// Skip bad lines and count them.
    #[arg(long)]
    pub lenient: bool,
    /// Expected `fld_schema` of annotated records.
    #[arg(long)]
    pub schema_version: Option<u32>,
    /// Write the run summary here instead of stderr.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Default, Args)]
pub struct FilterArgs {
    /// Start from a keep-everything configuration.
    #[arg(long)]
    pub permissive: bool,
    #[arg(long)]
    pub max_objects: Option<u32>,
    #[arg(long)]
    pub min_object_complexity: Option<f64>,
    #[arg(long)]
    pub min_action_complexity: Option<f64>,
    #[arg(long)]
    pub box_threshold: Option<f64>,
    /// IoU threshold; 1 or more disables NMS.
    #[arg(long)]
    pub nms_threshold: Option<f64>,
    #[arg(long)]
    pub phrase_threshold: Option<f64>,
    /// Comma-separated phrases, replacing the default pronoun list.
    #[arg(long, value_delimiter = ',')]
    pub blacklist: Option<Vec<String>>,
    /// Suppress overlapping boxes regardless of their text.
    #[arg(long)]
    pub class_agnostic_nms: bool,
    /// Skip the parse-based text filters.
    #[arg(long)]
    pub no_text_filters: bool,
}

impl FilterArgs {
    pub fn apply(&self, f: &mut FilterConfig) {
        if self.permissive {
            *f = FilterConfig::permissive();
        }
        if let Some(v) = self.max_objects {
            f.max_objects = v;
        }
        if let Some(v) = self.min_object_complexity {
            f.min_object_complexity = v;
        }
        if let Some(v) = self.min_action_complexity {
            f.min_action_complexity = v;
        }
        if let Some(v) = self.box_threshold {
            f.box_confidence_threshold = v;
        }
        if let Some(v) = self.nms_threshold {
            f.nms_iou_threshold = v;
        }
        if let Some(v) = self.phrase_threshold {
            f.phrase_confidence_threshold = v;
        }
        if let Some(words) = &self.blacklist {
            f.blacklist = words.iter().filter(|w| !w.trim().is_empty()).cloned().collect();
        }
        if self.class_agnostic_nms {
            f.class_aware_nms = false;
        }
        if self.no_text_filters {
            f.text_filters = false;
        }
    }
}

/// Defaults, then the config file, then flags.
pub fn resolve_config(common: &Common, filter: Option<&FilterArgs>, default: Strictness) -> Result<PipelineConfig, CliError> {
    let mut cfg = PipelineConfig::new(default);
    if let Some(path) = &common.config {
        ConfigFile::parse(&read_path(path).map_err(|e| CliError::Config(e.to_string()))?)?.apply(&mut cfg);
    }
    if let Some(j) = common.jobs {
        cfg.jobs = j;
    }
    if common.strict {
        cfg.strictness = Strictness::Strict;
    }
    if common.lenient {
        cfg.strictness = Strictness::Lenient;
    }
    if let Some(v) = common.schema_version {
        cfg.schema_version = v;
    }
    if let Some(f) = filter {
        f.apply(&mut cfg.filter);
    }
    cfg.filter = cfg.filter.normalized();
    cfg.validate()?;
    Ok(cfg)
}

fn read_path(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn read_input(name: &str) -> Result<String, CliError> {
    if name == "-" {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|source| CliError::Io { path: "<stdin>".into(), source })?;
        Ok(s)
    } else {
        read_path(Path::new(name))
    }
}

fn write_output(name: &str, data: &str) -> Result<(), CliError> {
    let wrap = |source| CliError::Io { path: name.into(), source };
    if name == "-" {
        let mut out = io::stdout().lock();
        out.write_all(data.as_bytes()).and_then(|()| out.flush()).map_err(wrap)
    } else {
        fs::write(name, data).map_err(wrap)
    }
}

fn load_sidecar(path: Option<&PathBuf>) -> Result<Option<Sidecar>, CliError> {
    path.map(|p| {
        let src = read_path(p)?;
        Sidecar::parse(&src).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))
    })
    .transpose()
}

fn report(common: &Common, summary: &Summary, diagnostics: &[Diagnostic]) -> Result<(), CliError> {
    let mut err = io::stderr().lock();
    for d in diagnostics {
        let _ = writeln!(err, "{d}");
    }
    match &common.summary {
        Some(p) => write_output(&p.display().to_string(), &summary.to_json()),
        None => {
            let _ = err.write_all(summary.to_json().as_bytes());
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct SemanticCsvRow {
    text_type: fld_core::engine::Granularity,
    annotations: u64,
    avg_tokens: f64,
    avg_objects: f64,
    avg_attributes: f64,
    avg_actions: f64,
    avg_proper_nouns: f64,
    avg_object_complexity: Option<f64>,
    avg_action_complexity: Option<f64>,
}

/// Every column on every row; cells a row does not have stay empty.
#[derive(Serialize)]
struct AnnotationCsvRow {
    annotation_type: fld_core::stats::AnnotationType,
    text_type: fld_core::stats::TextType,
    image_annotation_count: u64,
    avg_tokens: Option<f64>,
    region_count: Option<u64>,
    avg_regions_per_image: Option<f64>,
    avg_regional_tokens: Option<f64>,
}

/// Writes the stats tables into `dir`.
pub fn write_stats_csv(dir: &Path, report: &StatsReport) -> Result<(), CliError> {
    let io_err = |p: &Path| {
        let path = p.display().to_string();
        move |source| CliError::Io { path, source }
    };
    let csv_err = |p: &Path| {
        let path = p.display().to_string();
        move |e: csv::Error| CliError::Io { path, source: e.into() }
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;

    let path = dir.join("annotation.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    for r in &report.annotation.rows {
        w.serialize(AnnotationCsvRow {
            annotation_type: r.annotation_type,
            text_type: r.text_type,
            image_annotation_count: r.image_annotation_count,
            avg_tokens: r.avg_tokens,
            region_count: r.region_count,
            avg_regions_per_image: r.avg_regions_per_image,
            avg_regional_tokens: r.avg_regional_tokens,
        })
        .map_err(csv_err(&path))?;
    }
    w.flush().map_err(io_err(&path))?;

    let path = dir.join("semantic.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    for (g, r) in &report.semantic.by_text_type {
        w.serialize(SemanticCsvRow {
            text_type: *g,
            annotations: r.annotations,
            avg_tokens: r.avg_tokens,
            avg_objects: r.avg_objects,
            avg_attributes: r.avg_attributes,
            avg_actions: r.avg_actions,
            avg_proper_nouns: r.avg_proper_nouns,
            avg_object_complexity: r.avg_object_complexity,
            avg_action_complexity: r.avg_action_complexity,
        })
        .map_err(csv_err(&path))?;
    }
    w.flush().map_err(io_err(&path))?;

    for (source, name) in [(BoxSource::RegionText, "region_text"), (BoxSource::Triplets, "triplets")] {
        let s = report.spatial.get(source);
        for (suffix, body) in [
            ("area", s.area.to_csv()),
            ("aspect", s.aspect.to_csv()),
            ("center_heatmap", s.center_heatmap.to_csv()),
        ] {
            let path = dir.join(format!("{name}_{suffix}.csv"));
            fs::write(&path, body).map_err(io_err(&path))?;
        }
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Encode { common, task } => {
            let cfg = resolve_config(&common, None, Strictness::Strict)?;
            let run = cmd_encode(&read_input(&common.input)?, task, &cfg)?;
            write_output(&common.output, &run.output)?;
            report(&common, &run.summary, &run.diagnostics)
        }
        Command::Decode { common } => {
            let cfg = resolve_config(&common, None, Strictness::Strict)?;
            let run = cmd_decode(&read_input(&common.input)?, &cfg)?;
            write_output(&common.output, &run.output)?;
            report(&common, &run.summary, &run.diagnostics)
        }
        Command::Filter { common, filter, conllu } => {
            let cfg = resolve_config(&common, Some(&filter), Strictness::Lenient)?;
            let sidecar = load_sidecar(conllu.as_ref())?;
            let run = cmd_filter(&read_input(&common.input)?, sidecar.as_ref(), &cfg)?;
            write_output(&common.output, &run.output)?;
            report(&common, &run.summary, &run.diagnostics)
        }
        Command::Refine { common, filter, refined, conllu } => {
            let cfg = resolve_config(&common, Some(&filter), Strictness::Lenient)?;
            let sidecar = load_sidecar(conllu.as_ref())?;
            let refined = read_path(&refined)?;
            let run = cmd_refine(&read_input(&common.input)?, &refined, sidecar.as_ref(), &cfg)?;
            write_output(&common.output, &run.output)?;
            report(&common, &run.summary, &run.diagnostics)
        }
        Command::Stats { common, conllu, csv_dir, resolution } => {
            let mut cfg = resolve_config(&common, None, Strictness::Lenient)?;
            if let Some(r) = resolution {
                cfg.heatmap_resolution = r;
                cfg.validate()?;
            }
            let sidecar = load_sidecar(conllu.as_ref())?;
            let run = cmd_stats(&read_input(&common.input)?, sidecar.as_ref(), &cfg)?;
            write_output(&common.output, &run.document.to_json())?;
            if let Some(dir) = &csv_dir {
                write_stats_csv(dir, &run.document.report)?;
            }
            report(&common, &run.summary, &run.diagnostics)
        }
        Command::Validate { common, conllu } => {
            let cfg = resolve_config(&common, None, Strictness::Lenient)?;
            let sidecar = load_sidecar(conllu.as_ref())?;
            let run = cmd_validate(&read_input(&common.input)?, sidecar.as_ref(), &cfg)?;
            report(&common, &run.summary, &run.diagnostics)?;
            match run.summary.skipped_records {
                0 => Ok(()),
                n => Err(CliError::Input(format!("{n} invalid records"))),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn common(args: &[&str]) -> Common {
        let mut full = vec!["fld", "filter"];
        full.extend_from_slice(args);
        match Cli::try_parse_from(full).unwrap().command {
            Command::Filter { common, .. } => common,
            _ => unreachable!(),
        }
    }

    #[test]
    fn flags_win_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        fs::write(&path, "jobs = 3\nstrictness = \"strict\"\n[filter]\nbox_confidence_threshold = 0.4\n").unwrap();
        let p = path.to_str().unwrap();
        let cfg = resolve_config(&common(&["--config", p]), None, Strictness::Lenient).unwrap();
        assert_eq!((cfg.jobs, cfg.strictness, cfg.filter.box_confidence_threshold), (3, Strictness::Strict, 0.4));
        let args = FilterArgs { box_threshold: Some(0.1), ..FilterArgs::default() };
        let cfg = resolve_config(&common(&["--config", p, "-j", "5", "--lenient"]), Some(&args), Strictness::Strict).unwrap();
        assert_eq!((cfg.jobs, cfg.strictness, cfg.filter.box_confidence_threshold), (5, Strictness::Lenient, 0.1));
    }

    #[test]
    fn blacklist_flag_is_normalized() {
        let args = FilterArgs { blacklist: Some(vec![" It ".into(), "".into()]), ..FilterArgs::default() };
        let cfg = resolve_config(&common(&[]), Some(&args), Strictness::Lenient).unwrap();
        assert_eq!(cfg.filter.blacklist.into_iter().collect::<Vec<_>>(), vec!["it".to_string()]);
    }

    #[test]
    fn strict_and_lenient_conflict() {
        assert!(Cli::try_parse_from(["fld", "decode", "--strict", "--lenient"]).is_err());
        assert!(Cli::try_parse_from(["fld", "encode", "--task", "nope"]).is_err());
        assert!(Cli::try_parse_from(["fld", "encode", "--task", "phrase-grounding"]).is_ok());
    }
}
