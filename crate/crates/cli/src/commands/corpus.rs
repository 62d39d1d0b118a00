use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use lemurkit::corpus::{
    assign_splits, build_pairs, load_corpus, mono_pairs, BoundaryRules, BuiltPairs, LegalAct, PairMode,
    SplitManifest,
};

use crate::args::{PairsArgs, SplitArgs};
use crate::config::Config;
use crate::output::{jsonl_bytes, read_json, require_files, write_output};
use crate::UsageError;

fn load_rules(path: Option<&Path>) -> anyhow::Result<BoundaryRules> {
    match path {
        None => Ok(BoundaryRules::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
            BoundaryRules::from_json(&text).with_context(|| format!("{}", p.display()))
        }
    }
}

fn load_acts(paths: &[PathBuf]) -> anyhow::Result<Vec<LegalAct>> {
    let loaded = load_corpus(paths)?;
    super::report_diagnostics(&loaded.diagnostics);
    if loaded.acts.is_empty() {
        anyhow::bail!("no valid acts in the input");
    }
    Ok(loaded.acts)
}

pub fn split(args: &SplitArgs, config: &Config) -> anyhow::Result<()> {
    require_files(args.input.iter().map(PathBuf::as_path).chain(args.rules.as_deref()))?;
    let rules = load_rules(args.rules.as_deref())?;
    let acts = load_acts(&args.input)?;
    let ids: BTreeSet<&str> = acts.iter().map(|a| a.celex_id.as_str()).collect();
    let ids: Vec<&str> = ids.into_iter().collect();
    let manifest = assign_splits(&ids, config.ratios(args.ratios), config.seed(args.seed))?;
    let [train, val, test] = manifest.counts();
    eprintln!("{} acts: {train} train, {val} val, {test} test", ids.len());

    if let Some(records_path) = &args.records {
        let languages: BTreeSet<_> = acts.iter().map(|a| a.language.clone()).collect();
        let mut records = Vec::new();
        for lang in &languages {
            let (pairs, diagnostics) = mono_pairs(&acts, &manifest, lang, &rules);
            super::report_diagnostics(&diagnostics);
            records.extend(pairs);
        }
        write_output(Some(records_path), &jsonl_bytes(&records))?;
    }
    write_output(args.out.as_deref(), manifest.to_json().as_bytes())
}

pub fn pairs(args: &PairsArgs) -> anyhow::Result<()> {
    require_files(
        args.input
            .iter()
            .map(PathBuf::as_path)
            .chain([args.manifest.as_path()])
            .chain(args.rules.as_deref()),
    )?;
    let mode = match (&args.lang, &args.langs) {
        (Some(l), None) => PairMode::Mono(l.clone()),
        (None, Some(ls)) if ls.len() == 2 && ls[0] != ls[1] => PairMode::Bilingual(ls[0].clone(), ls[1].clone()),
        _ => return Err(UsageError("--langs needs two different languages".into()).into()),
    };
    let rules = load_rules(args.rules.as_deref())?;
    let manifest: SplitManifest = read_json(&args.manifest)?;
    let acts = load_acts(&args.input)?;
    let outcome = build_pairs(&acts, &manifest, &mode, &rules);
    super::report_diagnostics(&outcome.diagnostics);
    let keep = |act_id: &str| args.split.is_none() || manifest.label(act_id) == args.split;
    let bytes = match outcome.built {
        BuiltPairs::Pairs(mut p) => {
            p.retain(|p| keep(&p.act_id));
            eprintln!("{} pairs", p.len());
            jsonl_bytes(&p)
        }
        BuiltPairs::Groups(mut g) => {
            g.retain(|g| keep(&g.act_id));
            eprintln!("{} groups", g.len());
            jsonl_bytes(&g)
        }
    };
    write_output(args.out.as_deref(), &bytes)
}
