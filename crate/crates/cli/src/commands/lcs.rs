use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use lemurkit::corpus::{load_corpus, Language, LegalAct};
use lemurkit::lcs::{aggregate_lcs, score_texts, year_bin, LcsResult};
use lemurkit::textnorm::{normalize_text, prepare};
use serde::{Deserialize, Serialize};

use crate::args::LcsScoreArgs;
use crate::output::{jsonl_bytes, open, read_jsonl_strict, require_files, write_output};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestEntry {
    html: PathBuf,
    jsonl: PathBuf,
    celex_id: Option<String>,
    language: Option<Language>,
}

#[derive(Debug, Serialize)]
struct DocScore {
    celex_id: String,
    language: Language,
    year: i32,
    #[serde(flatten)]
    result: LcsResult,
}

#[derive(Debug, Serialize)]
struct BinSummary {
    mean: f64,
    count: usize,
}

fn select<'a>(acts: &'a [LegalAct], entry: &ManifestEntry) -> Option<&'a LegalAct> {
    acts.iter().find(|a| {
        entry.celex_id.as_ref().is_none_or(|id| *id == a.celex_id)
            && entry.language.as_ref().is_none_or(|l| *l == a.language)
    })
}

fn score_entry(entry: &ManifestEntry) -> anyhow::Result<Option<DocScore>> {
    let html = fs::read_to_string(&entry.html).with_context(|| format!("cannot read {}", entry.html.display()))?;
    let loaded = load_corpus(&[&entry.jsonl])?;
    super::report_diagnostics(&loaded.diagnostics);
    let Some(act) = select(&loaded.acts, entry) else {
        eprintln!("warning: {}: no matching act; entry skipped", entry.jsonl.display());
        return Ok(None);
    };
    let result = score_texts(&prepare(&html), &normalize_text(&act.full_text()));
    Ok(Some(DocScore { celex_id: act.celex_id.clone(), language: act.language.clone(), year: act.year, result }))
}

pub fn lcs_score(args: &LcsScoreArgs) -> anyhow::Result<()> {
    require_files([args.input.as_path()])?;
    let base = args.input.parent().unwrap_or(Path::new(""));
    let mut entries: Vec<ManifestEntry> = read_jsonl_strict(open(&args.input)?, &args.input)?;
    for e in &mut entries {
        e.html = base.join(&e.html);
        e.jsonl = base.join(&e.jsonl);
    }
    require_files(entries.iter().flat_map(|e| [e.html.as_path(), e.jsonl.as_path()]))?;

    let mut scores = Vec::with_capacity(entries.len());
    for entry in &entries {
        scores.extend(score_entry(entry)?);
    }
    write_output(Some(&args.out), &jsonl_bytes(&scores))?;

    let mut binned = Vec::new();
    for s in &scores {
        match year_bin(s.year) {
            Ok(_) => binned.push((s.language.as_str(), s.year, s.result)),
            Err(e) => eprintln!("warning: {} ({}): {e}; left out of the aggregate", s.celex_id, s.language),
        }
    }
    let mut report: BTreeMap<String, BTreeMap<String, BinSummary>> = BTreeMap::new();
    for agg in aggregate_lcs(&binned)? {
        report
            .entry(agg.language)
            .or_default()
            .insert(agg.year_bin.to_string(), BinSummary { mean: agg.mean, count: agg.count });
    }
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    write_output(args.report.as_deref(), json.as_bytes())
}
