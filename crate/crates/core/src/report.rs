//! Writes the report bundle: CSV tables, JSON mirrors and the manifest.

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use crate::analytics::{KindFilter, MetricReport};
use crate::extraction::SeedUri;
use crate::pipeline::{PipelineError, RunConfig, RunOutput};
use crate::segmentation::CellKey;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    #[default]
    Both,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "both" => Ok(Format::Both),
            _ => Err(format!("unknown report format {s:?} (expected csv, json or both)")),
        }
    }
}

/// Four decimals, or `NA`.
pub fn fmt_f64(v: Option<f64>) -> String {
    match v {
        Some(x) => {
            let s = format!("{x:.4}");
            if s == "-0.0000" {
                "0.0000".into()
            } else {
                s
            }
        }
        None => "NA".into(),
    }
}

fn cell_fields(cell: &CellKey) -> [String; 3] {
    [
        cell.topic_id.clone(),
        cell.source.to_string(),
        cell.vertical.to_string(),
    ]
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), PipelineError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let io = |e: csv::Error| PipelineError::io(path, std::io::Error::other(e));
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| PipelineError::io(path, std::io::Error::other(e.to_string())))?;
    fs::write(path, bytes).map_err(|e| PipelineError::io(path, e))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), PipelineError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| PipelineError::io(path, e.into()))?;
    s.push('\n');
    fs::write(path, s).map_err(|e| PipelineError::io(path, e))
}

fn file_stem_part(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Seeds in collection order, restricted to selected classes.
pub fn exported_seeds<'a>(output: &'a RunOutput, config: &RunConfig) -> Vec<&'a SeedUri> {
    output
        .extraction
        .collections
        .values()
        .filter(|c| config.is_selected(c.key.post_class.into()))
        .flat_map(|c| &c.seeds)
        .collect()
}

pub fn seed_rows<'a>(seeds: impl IntoIterator<Item = &'a SeedUri>) -> Vec<Vec<String>> {
    seeds
        .into_iter()
        .map(|s| {
            vec![
                s.provenance.topic_id.clone(),
                s.provenance.source.to_string(),
                s.provenance.vertical.to_string(),
                s.provenance.post_class.to_string(),
                s.canonical.clone(),
                s.kind.to_string(),
                s.hostname.clone(),
                s.provenance.post_id.clone(),
                s.retrieved_at.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
            ]
        })
        .collect()
}

pub const SEED_HEADER: [&str; 9] = [
    "topic",
    "source",
    "vertical",
    "post_class",
    "canonical_uri",
    "kind",
    "hostname",
    "post_id",
    "retrieved_at",
];

pub fn write_seeds_csv(path: &Path, seeds: &[&SeedUri]) -> Result<(), PipelineError> {
    write_csv(path, &SEED_HEADER, seed_rows(seeds.iter().copied()))
}

pub fn write_seeds_json(path: &Path, seeds: &[&SeedUri]) -> Result<(), PipelineError> {
    write_json(path, &seeds)
}

fn write_tables(dir: &Path, report: &MetricReport, config: &RunConfig, dedup: &str) -> Result<(), PipelineError> {
    write_csv(
        &dir.join("partition.csv"),
        &["topic", "source", "vertical", "class", "groups", "posts"],
        report.partition.iter().map(|r| {
            let mut row = cell_fields(&r.cell).to_vec();
            row.extend([r.class.to_string(), r.groups.to_string(), r.posts.to_string()]);
            row
        }),
    )?;
    write_csv(
        &dir.join("uri_counts.csv"),
        &[
            "topic",
            "source",
            "vertical",
            "class",
            "link_posts",
            "all",
            "html",
            "nonhtml",
            "unknown",
            "dedup",
        ],
        report.uri_counts.iter().map(|r| {
            let mut row = cell_fields(&r.cell).to_vec();
            row.extend([
                r.class.to_string(),
                r.link_posts.to_string(),
                r.all.to_string(),
                r.html.to_string(),
                r.non_html.to_string(),
                r.unknown.to_string(),
                dedup.to_string(),
            ]);
            row
        }),
    )?;

    let mode = config.dist_mode.as_str();
    for (filter, name) in [
        (KindFilter::Html, "distribution.csv"),
        (KindFilter::All, "distribution_all.csv"),
        (KindFilter::NonHtml, "distribution_nonhtml.csv"),
    ] {
        write_csv(
            &dir.join(name),
            &["bin", "source", "class", "probability", "mode"],
            report.distribution.iter().filter(|r| r.kind == filter).map(|r| {
                vec![
                    r.bin.to_string(),
                    r.source.to_string(),
                    r.class.as_str().to_string(),
                    fmt_f64(r.probability),
                    mode.to_string(),
                ]
            }),
        )?;
    }
    write_csv(
        &dir.join("conditional_relevance.csv"),
        &["source", "class", "bin", "probability", "post_count"],
        report.conditional.iter().map(|r| {
            vec![
                r.source.to_string(),
                r.class.as_str().to_string(),
                r.bin.to_string(),
                fmt_f64(r.probability),
                r.post_count.to_string(),
            ]
        }),
    )?;
    write_csv(
        &dir.join("precision.csv"),
        &[
            "topic",
            "source",
            "vertical",
            "class",
            "avg_precision",
            "post_count",
            "kind",
        ],
        report.precision.iter().map(|r| {
            let mut row = cell_fields(&r.cell).to_vec();
            row.extend([
                r.class.to_string(),
                fmt_f64(r.avg_precision),
                r.post_count.to_string(),
                r.kind.as_str().to_string(),
            ]);
            row
        }),
    )?;
    write_csv(
        &dir.join("age.csv"),
        &[
            "topic", "source", "vertical", "class", "min", "q1", "median", "q3", "max", "samples", "flagged",
        ],
        report.ages.iter().map(|r| {
            let s = r.distribution.summary;
            let mut row = cell_fields(&r.cell).to_vec();
            row.extend([
                r.class.to_string(),
                fmt_f64(s.map(|s| s.min)),
                fmt_f64(s.map(|s| s.q1)),
                fmt_f64(s.map(|s| s.median)),
                fmt_f64(s.map(|s| s.q3)),
                fmt_f64(s.map(|s| s.max)),
                r.samples.to_string(),
                r.distribution.flagged.to_string(),
            ]);
            row
        }),
    )?;
    let ecdf_dir = dir.join("ecdf");
    fs::create_dir_all(&ecdf_dir).map_err(|e| PipelineError::io(&ecdf_dir, e))?;
    for r in report.ages.iter().filter(|r| !r.distribution.ecdf.is_empty()) {
        let [t, s, v] = cell_fields(&r.cell);
        let name = format!(
            "{}__{}__{}__{}.csv",
            file_stem_part(&t),
            file_stem_part(&s),
            file_stem_part(&v),
            r.class
        );
        write_csv(
            &ecdf_dir.join(name),
            &["age_years", "fraction"],
            r.distribution
                .ecdf
                .iter()
                .map(|(x, f)| vec![fmt_f64(Some(*x)), fmt_f64(Some(*f))]),
        )?;
    }
    write_csv(
        &dir.join("diversity.csv"),
        &["topic", "source", "vertical", "class", "seeds", "hosts", "diversity"],
        report.diversity.iter().map(|r| {
            let mut row = cell_fields(&r.cell).to_vec();
            row.extend([
                r.class.to_string(),
                r.seeds.to_string(),
                r.hosts.to_string(),
                fmt_f64(r.diversity),
            ]);
            row
        }),
    )?;
    write_csv(
        &dir.join("overlap.csv"),
        &[
            "topic",
            "source",
            "vertical",
            "class",
            "candidate",
            "shared",
            "overlap",
            "reference_source",
        ],
        report.overlap.iter().map(|r| {
            let mut row = cell_fields(&r.cell).to_vec();
            row.extend([
                r.class.to_string(),
                r.candidate.to_string(),
                r.shared.to_string(),
                fmt_f64(r.overlap),
                config.reference_source.clone(),
            ]);
            row
        }),
    )?;
    Ok(())
}

/// Run manifest: configuration echo, versions, mode stamps and warnings.
pub fn manifest(output: &RunOutput, config: &RunConfig) -> serde_json::Value {
    let dedup = config.extract_options().dedup;
    json!({
        "tool": "seedsmith",
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "modes": {
            "fetch": output.fetch_mode,
            "distribution": config.dist_mode.as_str(),
            "dedup": dedup.as_str(),
            "mc_exclude_root": config.mc_exclude_root,
            "threshold": config.threshold,
            "strict": config.strict,
        },
        "counts": {
            "posts": output.corpus_posts,
            "groups": output.partition.groups().count(),
            "collections": output.extraction.collections.len(),
            "seeds": output.extraction.collections.values().map(|c| c.seeds.len()).sum::<usize>(),
            "gold_standards": output.golds.len(),
        },
        "warning_counts": output.warnings.counts(),
        "warning_total": output.warnings.len(),
        "warnings": output.warnings.entries,
    })
}

/// Writes the full bundle. Identical inputs give byte-identical files.
pub fn emit_report(output: &RunOutput, config: &RunConfig, format: Format) -> Result<(), PipelineError> {
    let dir = &config.out;
    fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    let dedup = config.extract_options().dedup.as_str();
    let seeds = exported_seeds(output, config);

    if matches!(format, Format::Csv | Format::Both) {
        write_tables(dir, &output.report, config, dedup)?;
        write_seeds_csv(&dir.join("seeds.csv"), &seeds)?;
    }
    if matches!(format, Format::Json | Format::Both) {
        write_seeds_json(&dir.join("seeds.json"), &seeds)?;
        let report = json!({
            "dedup": dedup,
            "distribution_mode": config.dist_mode.as_str(),
            "threshold": config.threshold,
            "partition": output.report.partition,
            "uri_counts": output.report.uri_counts,
            "distribution": output.report.distribution,
            "conditional_relevance": output.report.conditional,
            "precision": output.report.precision,
            "age": output.report.ages,
            "diversity": output.report.diversity,
            "overlap": output.report.overlap,
            "judgments": output.report.judgments,
        });
        write_json(&dir.join("report.json"), &report)?;
    }
    let gold_dir = dir.join("gold");
    if !output.golds.is_empty() {
        fs::create_dir_all(&gold_dir).map_err(|e| PipelineError::io(&gold_dir, e))?;
    }
    for (topic, gold) in &output.golds {
        let path = gold_dir.join(format!("{}.json", file_stem_part(topic)));
        fs::write(&path, gold.to_json()).map_err(|e| PipelineError::io(&path, e))?;
    }
    write_json(&dir.join("manifest.json"), &manifest(output, config))
}
