//! Comparison against the published 2018 dataset, for runs where a copy
//! of it has been converted to a corpus. Never part of the offline suite.
//!
//! Expected layout of `$SEEDSMITH_DATASET`:
//!   corpus.jsonl      the dataset posts in corpus JSONL form
//!   responses/        recorded responses for every seed and reference

#![allow(dead_code)]

use std::path::Path;

use seedsmith::analytics::{ColumnClass, KBin, KindFilter};
use seedsmith::corpus::Source;
use seedsmith::pipeline::{execute, load_run_corpus, RunConfig};
use seedsmith::segmentation::ClassLabel;

use super::criteria::Outcome;

struct Target {
    name: &'static str,
    want: f64,
    tolerance: f64,
}

const TARGETS: [Target; 4] = [
    Target {
        name: "P(Reddit P1A1 has 1 HTML URI)",
        want: 0.63,
        tolerance: 0.02,
    },
    Target {
        name: "P(Twitter P1A1 has 1 HTML URI)",
        want: 0.98,
        tolerance: 0.01,
    },
    Target {
        name: "median precision MC",
        want: 0.50,
        tolerance: 0.05,
    },
    Target {
        name: "median precision P1A1",
        want: 0.63,
        tolerance: 0.05,
    },
];

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len().is_multiple_of(2) {
        (v[m - 1] + v[m]) / 2.0
    } else {
        v[m]
    })
}

pub fn run(dir: &Path) -> Outcome {
    let config = RunConfig {
        corpus: dir.join("corpus.jsonl"),
        fixtures: Some(dir.join("responses")),
        out: dir.join("replication-report"),
        ..RunConfig::default()
    };
    config.validate(true).map_err(|e| e.to_string())?;
    let corpus = load_run_corpus(&config).map_err(|e| e.to_string())?;
    let output = execute(&config, &corpus).map_err(|e| e.to_string())?;
    let report = &output.report;

    let p_one = |source: Source| {
        report
            .distribution
            .iter()
            .find(|r| {
                r.source == source
                    && r.class == ColumnClass::Label(ClassLabel::P1A1)
                    && r.kind == KindFilter::Html
                    && r.bin == KBin::One
            })
            .and_then(|r| r.probability)
    };
    let medians = |label: ClassLabel| {
        median(
            report
                .precision
                .iter()
                .filter(|r| r.class == label && r.kind == KindFilter::Html)
                .filter_map(|r| r.avg_precision)
                .collect(),
        )
    };
    let got = [
        p_one(Source::Reddit),
        p_one(Source::Twitter),
        medians(ClassLabel::MC),
        medians(ClassLabel::P1A1),
    ];

    let mut lines = Vec::new();
    let mut within = true;
    for (t, g) in TARGETS.iter().zip(got) {
        match g {
            Some(v) => {
                let ok = (v - t.want).abs() <= t.tolerance;
                within &= ok;
                lines.push(format!("{} = {v:.3} (target {} ± {})", t.name, t.want, t.tolerance));
            }
            None => {
                within = false;
                lines.push(format!("{} = NA (target {})", t.name, t.want));
            }
        }
    }
    if within {
        Ok(lines.join("; "))
    } else {
        Err(lines.join("; "))
    }
}
