use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use anyhow::Context;
use lemurkit::corpus::{PositiveGroup, QueryDocPair, SplitLabel, SplitManifest};
use lemurkit::embedclient::{embed_batch, EmbedRequest, EmbeddingProvider};
use lemurkit::evalkit::{self, comparison_markdown, markdown_table, EvalQuery};
use lemurkit::vindex::{TruncationStats, Truncated};
use lemurkit::{EvalConfig, EvalReport, EvalSetting, VectorIndex};
use serde::{Deserialize, Serialize};

use crate::args::{CompareArgs, EvalArgs, IndexArgs, SearchArgs};
use crate::config::{Config, EmbedSettings};
use crate::output::{jsonl_bytes, open, read_json, read_jsonl_strict, require_files, write_output};
use crate::UsageError;

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Record {
    Pair(QueryDocPair),
    Group(PositiveGroup),
}

impl Record {
    /// Query id, which is also the id of the query's own-language document.
    fn query_id(&self) -> String {
        match self {
            Record::Pair(p) => doc_id(&p.act_id, p.language.as_str()),
            Record::Group(g) => doc_id(&g.act_id, g.query_language.as_str()),
        }
    }

    fn query(&self) -> &str {
        match self {
            Record::Pair(p) => &p.query,
            Record::Group(g) => &g.query,
        }
    }

    fn documents(&self) -> Vec<(String, &str)> {
        match self {
            Record::Pair(p) => vec![(doc_id(&p.act_id, p.language.as_str()), p.document.as_str())],
            Record::Group(g) => {
                g.positives.iter().map(|d| (doc_id(&g.act_id, d.language.as_str()), d.document.as_str())).collect()
            }
        }
    }

    /// Pairs carry their split; groups are looked up in the manifest.
    fn split(&self, manifest: Option<&SplitManifest>) -> Result<Option<SplitLabel>, UsageError> {
        match (self, manifest) {
            (Record::Pair(p), _) => Ok(Some(p.split)),
            (Record::Group(g), Some(m)) => Ok(m.label(&g.act_id)),
            (Record::Group(_), None) => Err(UsageError("filtering groups by split needs --manifest".into())),
        }
    }
}

fn doc_id(act_id: &str, language: &str) -> String {
    format!("{act_id}:{language}")
}

/// Act part of a doc id.
fn act_of(doc_id: &str) -> &str {
    doc_id.rsplit_once(':').map_or(doc_id, |(act, _)| act)
}

fn read_records(path: &Path) -> anyhow::Result<Vec<Record>> {
    read_jsonl_strict(open(path)?, path).context("expected pairs or groups")
}

fn read_index(path: &Path) -> anyhow::Result<VectorIndex> {
    VectorIndex::load(open(path)?).with_context(|| format!("cannot load index {}", path.display()))
}

fn select_split(
    records: Vec<Record>,
    split: Option<SplitLabel>,
    manifest: Option<&SplitManifest>,
) -> anyhow::Result<Vec<Record>> {
    let Some(split) = split else { return Ok(records) };
    let mut kept = Vec::new();
    for r in records {
        if r.split(manifest)? == Some(split) {
            kept.push(r);
        }
    }
    Ok(kept)
}

struct Embedder {
    provider: Box<dyn EmbeddingProvider>,
    settings: EmbedSettings,
    requests: usize,
}

impl Embedder {
    fn open(settings: EmbedSettings) -> anyhow::Result<Self> {
        let provider = settings.provider.open()?;
        Ok(Self { provider, settings, requests: 0 })
    }

    fn embed(&mut self, texts: &[&str]) -> anyhow::Result<(Vec<Vec<f64>>, Vec<Truncated>)> {
        let mut vectors = Vec::with_capacity(texts.len());
        let mut truncations = Vec::with_capacity(texts.len());
        for chunk in texts.chunks(self.settings.batch) {
            self.requests += 1;
            let request = EmbedRequest {
                id: format!("req-{}", self.requests),
                model: self.settings.model.clone(),
                texts: chunk.iter().map(|t| (*t).to_owned()).collect(),
            };
            let outcome = embed_batch(&mut self.provider, &request, &self.settings.policy, self.settings.limit)?;
            vectors.extend(outcome.response.vectors);
            truncations.extend(outcome.truncations);
        }
        Ok((vectors, truncations))
    }
}

pub fn index(args: &IndexArgs, config: &Config) -> anyhow::Result<()> {
    require_files([args.input.as_path()].into_iter().chain(args.manifest.as_deref()))?;
    let settings = config.embedding(&args.embed)?;
    let manifest: Option<SplitManifest> = args.manifest.as_deref().map(read_json).transpose()?;
    let records = select_split(read_records(&args.input)?, args.split, manifest.as_ref())?;

    let mut seen: HashMap<String, &str> = HashMap::new();
    let mut docs: Vec<(String, &str)> = Vec::new();
    for (id, text) in records.iter().flat_map(Record::documents) {
        match seen.get(&id) {
            Some(prev) if *prev != text => eprintln!("warning: {id}: differing documents under one id; first kept"),
            Some(_) => {}
            None => {
                seen.insert(id.clone(), text);
                docs.push((id, text));
            }
        }
    }
    if docs.is_empty() {
        anyhow::bail!("no documents to index");
    }
    let texts: Vec<&str> = docs.iter().map(|(_, t)| *t).collect();
    let (vectors, truncations) = Embedder::open(settings)?.embed(&texts)?;
    eprintln!("{}", TruncationStats::from_truncations(&truncations));

    let index = VectorIndex::build(docs.into_iter().map(|(id, _)| id).zip(vectors))?;
    let mut bytes = Vec::new();
    index.save(&mut bytes)?;
    write_output(Some(&args.out), &bytes)
}

#[derive(Serialize)]
struct HitOut<'a> {
    doc_id: &'a str,
    score: f64,
}

#[derive(Serialize)]
struct SearchResult<'a> {
    query: &'a str,
    hits: Vec<HitOut<'a>>,
}

pub fn search(args: &SearchArgs, config: &Config) -> anyhow::Result<()> {
    require_files([args.index.as_path()])?;
    let settings = config.embedding(&args.embed)?;
    let index = read_index(&args.index)?;
    let queries: Vec<&str> = args.query.iter().map(String::as_str).collect();
    let (vectors, _) = Embedder::open(settings)?.embed(&queries)?;
    let hits = vectors.iter().map(|v| index.search(v, args.top)).collect::<Result<Vec<_>, _>>()?;
    let results: Vec<SearchResult> = queries
        .iter()
        .zip(&hits)
        .map(|(q, hs)| SearchResult {
            query: q,
            hits: hs.iter().map(|h| HitOut { doc_id: &h.doc_id, score: h.score }).collect(),
        })
        .collect();
    write_output(args.out.as_deref(), &jsonl_bytes(&results))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QueryLine {
    query_id: String,
    vector: Vec<f64>,
    truth_doc_id: String,
}

fn load_queries(args: &EvalArgs, config: &Config, manifest: Option<&SplitManifest>) -> anyhow::Result<Vec<EvalQuery>> {
    if let Some(path) = &args.queries {
        let lines: Vec<QueryLine> = read_jsonl_strict(open(path)?, path)?;
        return Ok(lines
            .into_iter()
            .map(|q| EvalQuery { query_id: q.query_id, vector: q.vector, truth_doc_id: q.truth_doc_id })
            .collect());
    }
    let path = args.input.as_deref().expect("clap requires --in or --queries");
    let settings = config.embedding(&args.embed)?;
    let records = select_split(read_records(path)?, Some(args.split), manifest)?;
    if records.is_empty() {
        return Ok(Vec::new());
    }
    let texts: Vec<&str> = records.iter().map(Record::query).collect();
    let (vectors, _) = Embedder::open(settings)?.embed(&texts)?;
    Ok(records
        .iter()
        .zip(vectors)
        .map(|(r, vector)| {
            let id = r.query_id();
            EvalQuery { query_id: id.clone(), vector, truth_doc_id: id }
        })
        .collect())
}

pub fn eval(args: &EvalArgs, config: &Config) -> anyhow::Result<()> {
    require_files(
        [args.index.as_path()]
            .into_iter()
            .chain(args.input.as_deref())
            .chain(args.queries.as_deref())
            .chain(args.manifest.as_deref()),
    )?;
    let setting = args.setting.or(config.setting).unwrap_or(EvalSetting::Full);
    let ks = args.k.clone().or_else(|| config.k.clone()).unwrap_or_else(|| evalkit::DEFAULT_KS.to_vec());
    let eval_config = EvalConfig::new(setting, ks.clone()).map_err(|e| UsageError(format!("--k: {e}")))?;
    if args.depth == Some(0) {
        return Err(UsageError("--depth must be positive".into()).into());
    }
    if setting == EvalSetting::TestOnly && args.manifest.is_none() {
        return Err(UsageError("--setting test_only needs --manifest".into()).into());
    }

    let manifest: Option<SplitManifest> = args.manifest.as_deref().map(read_json).transpose()?;
    let index = read_index(&args.index)?;
    let queries = load_queries(args, config, manifest.as_ref())?;
    let held_out: Option<BTreeSet<String>> = manifest.as_ref().map(|m| {
        index
            .ids()
            .iter()
            .filter(|id| m.label(act_of(id)) == Some(SplitLabel::Test))
            .cloned()
            .collect()
    });

    let (mut report, excluded) = evalkit::evaluate(&queries, &index, &eval_config, held_out.as_ref())?;
    for id in &excluded {
        eprintln!("warning: query {id}: truth document not in the {setting} collection; excluded");
    }
    if let Some(depth) = args.depth {
        let ranks: Vec<Option<usize>> = report.ranks.iter().map(|&r| (r > 0 && r <= depth).then_some(r)).collect();
        report = EvalReport::from_ranks(setting, &ks, &ranks, report.excluded)?;
    }
    if let Some(md) = &args.markdown {
        write_output(Some(md), markdown_table(&[(args.label.as_str(), &report)]).as_bytes())?;
    }
    write_output(args.out.as_deref(), report.to_json().as_bytes())
}

pub fn compare(args: &CompareArgs) -> anyhow::Result<()> {
    require_files([args.base.as_path(), args.tuned.as_path()])?;
    let base: EvalReport = read_json(&args.base)?;
    let tuned: EvalReport = read_json(&args.tuned)?;
    let cmp = evalkit::compare(&base, &tuned)?;
    if let Some(md) = &args.markdown {
        let mut text = markdown_table(&[("base", &base), ("tuned", &tuned)]);
        text.push('\n');
        text.push_str(&comparison_markdown(&cmp));
        write_output(Some(md), text.as_bytes())?;
    }
    let mut json = serde_json::to_string_pretty(&cmp)?;
    json.push('\n');
    write_output(args.out.as_deref(), json.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn act_part_of_doc_ids() {
        assert_eq!(act_of(&doc_id("32019R0001", "en")), "32019R0001");
        assert_eq!(act_of("a:b:fr"), "a:b");
        assert_eq!(act_of("plain"), "plain");
    }

    #[test]
    fn records_parse_as_pairs_or_groups() {
        let pair: Record = serde_json::from_str(
            r#"{"act_id":"x","language":"en","split":"test","query":"q","document":"d"}"#,
        )
        .unwrap();
        assert_eq!(pair.query_id(), "x:en");
        assert_eq!(pair.split(None).unwrap(), Some(SplitLabel::Test));
        let group: Record = serde_json::from_str(
            r#"{"act_id":"x","query_language":"fr","query":"q",
                "positives":[{"language":"fr","document":"a"},{"language":"en","document":"b"}]}"#,
        )
        .unwrap();
        assert_eq!(group.query_id(), "x:fr");
        assert_eq!(group.documents(), vec![("x:fr".to_owned(), "a"), ("x:en".to_owned(), "b")]);
        assert!(group.split(None).is_err());
    }
}
