use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand};
use lemurkit::corpus::{Language, SplitLabel, SplitRatios};
use lemurkit::embedclient::ProviderSpec;
use lemurkit::EvalSetting;

const AFTER_HELP: &str = "\
Exit status: 0 on success, 1 on usage errors, 2 on data errors.
Diagnostics go to stderr. Outputs are written whole and atomically, so a
rerun replaces earlier results instead of appending to them.

Settings can also come from a TOML file given with --config; flags on the
command line take precedence. The embedding provider defaults to the
LEMURKIT_PROVIDER environment variable, then to `mock`.";

#[derive(Debug, Parser)]
#[command(name = "lemurkit", version, about = "Metadata-to-document retrieval tooling for legislative corpora")]
#[command(arg_required_else_help = true, after_help = AFTER_HELP)]
pub struct Cli {
    /// TOML file with default settings (see README)
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    LcsScore(LcsScoreArgs),
    Split(SplitArgs),
    Pairs(PairsArgs),
    Index(IndexArgs),
    Search(SearchArgs),
    Eval(EvalArgs),
    Compare(CompareArgs),
    LossCheck(LossCheckArgs),
}

#[derive(Debug, Args)]
#[command(
    about = "Score converted text against reference HTML with the Lexical Content Score",
    after_help = "\
Manifest (--in), one JSON object per line; paths are relative to the manifest:
  {\"html\": \"ref/32019R0001.html\", \"jsonl\": \"conv/32019R0001.jsonl\",
   \"celex_id\": \"32019R0001\", \"language\": \"en\"}
celex_id and language are optional and select the act when the JSONL file
holds several; otherwise its first act is used. JSONL files use the corpus
format (see `split --help`).

Per-document output (--out), one line per scored manifest entry:
  {\"celex_id\", \"language\", \"year\", \"score\", \"shared_vocab\", \"empty_side\"}

Aggregate report (--report, default stdout), mean score per language and
five-year bin, keyed by language then the bin's first year:
  {\"en\": {\"1995\": {\"mean\": 0.97, \"count\": 12}}}
Years outside 1900..=2100 are scored but left out of the aggregate."
)]
pub struct LcsScoreArgs {
    /// Manifest pairing HTML and JSONL files
    #[arg(long = "in", value_name = "MANIFEST")]
    pub input: PathBuf,
    /// Per-document scores (JSONL)
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Aggregate report (JSON)
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(
    about = "Assign acts to train/val/test and optionally split each act into metadata and body",
    after_help = "\
Corpus input (--in, repeatable), one act per line:
  {\"celex_id\": \"32019R0001\", \"language\": \"en\", \"year\": 2019,
   \"pages\": [{\"page\": 1, \"text\": \"...\"}]}
Malformed lines are reported and skipped.

Manifest output (--out, default stdout), pretty JSON with sorted keys:
  {\"seed\": 42, \"ratios\": [0.6, 0.2, 0.2], \"assignment\": {\"32019R0001\": \"test\"}}
The assignment depends only on the set of act ids, the ratios and the seed,
so every language version of an act lands in the same split.

Records output (--records), one line per act and language:
  {\"act_id\", \"language\", \"split\", \"query\", \"document\"}
where query is the metadata block and document the body. Boundary rules
(--rules) have the form
  {\"rules\": [{\"language\": \"en\", \"pattern\": \"(?m)^Article 1$\"}]}
A rule with a null language applies to every language."
)]
pub struct SplitArgs {
    /// Corpus JSONL file(s)
    #[arg(long = "in", value_name = "CORPUS", required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    /// Split manifest (JSON)
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Metadata/body records for every act (JSONL)
    #[arg(long, value_name = "FILE")]
    pub records: Option<PathBuf>,
    /// train,val,test fractions [default: 0.6,0.2,0.2]
    #[arg(long, value_name = "T,V,E")]
    pub ratios: Option<SplitRatios>,
    /// Seed for the split assignment [default: 42]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Metadata boundary rules (JSON)
    #[arg(long, value_name = "FILE")]
    pub rules: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(
    about = "Build monolingual query/document pairs or bilingual positive groups",
    group(ArgGroup::new("mode").required(true).args(["lang", "langs"])),
    after_help = "\
Inputs: corpus JSONL (--in) and a split manifest (--manifest), as written by
`split`. Acts missing from the manifest are reported and skipped.

With --lang, one pair per act:
  {\"act_id\", \"language\", \"split\", \"query\", \"document\"}
With --langs A,B, two groups per act present in both languages, one queried
in each language, with both documents as positives (own language first):
  {\"act_id\", \"query_language\", \"query\",
   \"positives\": [{\"language\", \"document\"}, ...]}
Groups carry no split field; filter with --split or look the act up in the
manifest."
)]
pub struct PairsArgs {
    /// Corpus JSONL file(s)
    #[arg(long = "in", value_name = "CORPUS", required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    /// Split manifest (JSON)
    #[arg(long, value_name = "FILE")]
    pub manifest: PathBuf,
    /// Output (JSONL), default stdout
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Language for monolingual pairs
    #[arg(long)]
    pub lang: Option<Language>,
    /// Two languages for bilingual groups
    #[arg(long, value_delimiter = ',', value_name = "A,B")]
    pub langs: Option<Vec<Language>>,
    /// Keep only acts in this split
    #[arg(long, value_name = "train|val|test")]
    pub split: Option<SplitLabel>,
    /// Metadata boundary rules (JSON)
    #[arg(long, value_name = "FILE")]
    pub rules: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct EmbedArgs {
    /// mock, mock:<dim>:<seed> or socket:<host:port>
    #[arg(long, value_name = "SPEC")]
    pub provider: Option<ProviderSpec>,
    /// Model name sent to the provider [default: mock]
    #[arg(long)]
    pub model: Option<String>,
    /// Provider input limit in tokens [default: 2048]
    #[arg(long)]
    pub limit: Option<usize>,
    /// Truncation caps in tokens, tried largest first [default: 2048,1024,512]
    #[arg(long, value_delimiter = ',', value_name = "N,...")]
    pub caps: Option<Vec<usize>>,
    /// Texts per provider request [default: 32]
    #[arg(long)]
    pub batch: Option<usize>,
}

#[derive(Debug, Args)]
#[command(
    about = "Embed documents and write an exact cosine index",
    after_help = "\
Input (--in): pairs or groups JSONL from `pairs`. Every document becomes one
entry with id \"<act_id>:<language>\"; a document repeated across groups is
embedded once.

Documents are head-truncated to the largest cap within --limit. If the
provider rejects a batch as too long it is retried at the next smaller cap.
Truncation statistics are printed to stderr.

Index output (--out): a header line followed by one entry per line:
  {\"format\": \"lemurkit-index\", \"version\": 1, \"dim\": 384, \"count\": 2}
  {\"doc_id\": \"32019R0001:en\", \"vector\": [0.0123, ...]}
Vectors are unit length, stored as 32-bit floats written to 9 significant
digits, so reloading is bit-exact."
)]
pub struct IndexArgs {
    /// Pairs or groups JSONL
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    /// Index file
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Keep only documents of acts in this split (needs --manifest for groups)
    #[arg(long, value_name = "train|val|test")]
    pub split: Option<SplitLabel>,
    /// Split manifest, used with --split
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub embed: EmbedArgs,
}

#[derive(Debug, Args)]
#[command(
    about = "Search an index with free-text queries",
    after_help = "\
Each --query is embedded with the provider settings (use the ones the index
was built with) and searched exactly. Output, one line per query:
  {\"query\": \"...\", \"hits\": [{\"doc_id\": \"32019R0001:en\", \"score\": 0.83}]}
Ties in score are broken by ascending doc id."
)]
pub struct SearchArgs {
    /// Index file
    #[arg(long, value_name = "FILE")]
    pub index: PathBuf,
    /// Query text (repeatable)
    #[arg(long, required = true)]
    pub query: Vec<String>,
    /// Hits per query
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    /// Output (JSONL), default stdout
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub embed: EmbedArgs,
}

#[derive(Debug, Args)]
#[command(
    about = "Compute Acc@k for metadata queries against an index",
    group(ArgGroup::new("source").required(true).args(["input", "queries"])),
    after_help = "\
Queries come either from pairs/groups JSONL (--in), embedded with the
provider settings, or pre-embedded (--queries), one per line:
  {\"query_id\": \"q1\", \"vector\": [1.0, 0.0], \"truth_doc_id\": \"32019R0001:en\"}
From --in, only acts in --split (default test) are queried; the truth
document is \"<act_id>:<query language>\".

--setting full searches the whole index. test_only searches only entries
whose act (the id before the last ':') is in the manifest's test split, so
it needs --manifest. Queries whose truth document is not in the searched
collection are excluded and listed on stderr. With --depth N, truths ranked
below N count as not found.

Report (--out, default stdout):
  {\"setting\": \"test_only\", \"num_queries\": 3, \"excluded\": 0,
   \"acc\": {\"1\": 0.33, \"3\": 0.33, \"5\": 0.67},
   \"ranks\": [1, 4, 0], \"not_found\": 1}
Rank 0 marks a query whose truth was not found. --markdown also writes a
table with an Acc@k text bar."
)]
pub struct EvalArgs {
    /// Index file
    #[arg(long, value_name = "FILE")]
    pub index: PathBuf,
    /// Pairs or groups JSONL to take queries from
    #[arg(long = "in", value_name = "FILE")]
    pub input: Option<PathBuf>,
    /// Pre-embedded queries (JSONL)
    #[arg(long, value_name = "FILE")]
    pub queries: Option<PathBuf>,
    /// Split manifest (JSON)
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    /// full or test_only [default: full]
    #[arg(long)]
    pub setting: Option<EvalSetting>,
    /// Cutoffs, strictly increasing [default: 1,3,5]
    #[arg(long, value_delimiter = ',', value_name = "K,...")]
    pub k: Option<Vec<usize>>,
    /// Split whose acts are queried when reading --in
    #[arg(long, value_name = "train|val|test", default_value = "test")]
    pub split: SplitLabel,
    /// Retrieval depth; truths ranked deeper count as not found
    #[arg(long)]
    pub depth: Option<usize>,
    /// Report (JSON), default stdout
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Markdown table
    #[arg(long, value_name = "FILE")]
    pub markdown: Option<PathBuf>,
    /// Row label in the markdown table
    #[arg(long, default_value = "model")]
    pub label: String,
    #[command(flatten)]
    pub embed: EmbedArgs,
}

#[derive(Debug, Args)]
#[command(
    about = "Compare a base and a fine-tuned evaluation report",
    after_help = "\
Both reports must come from `eval` with the same setting and cutoffs.
Output (--out, default stdout):
  {\"setting\": \"full\", \"deltas\": [{\"k\": 1, \"base\": 0.8, \"tuned\": 0.9,
   \"delta\": 0.1, \"relative_gain\": 0.125}]}
relative_gain is null when the base accuracy is zero. --markdown writes the
same numbers as a table."
)]
pub struct CompareArgs {
    /// Base model report
    #[arg(long, value_name = "FILE")]
    pub base: PathBuf,
    /// Fine-tuned model report
    #[arg(long, value_name = "FILE")]
    pub tuned: PathBuf,
    /// Comparison (JSON), default stdout
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Markdown table
    #[arg(long, value_name = "FILE")]
    pub markdown: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(
    about = "Check loss gradients against finite differences on random batches",
    after_help = "\
Each case draws a random batch (1-8 rows, 1-16 dimensions) and random
positive groups, then checks both losses' analytic gradients against
central differences (failure at relative error >= 1e-4) and checks that
singleton groups reproduce the plain loss (failure above 1e-12).
Without --temperature, cases cycle through 0.05, 0.2 and 1.0.

Output (--out, default stdout):
  {\"cases\": 100, \"max_rel_error\": 1.7e-8, \"failures\": 0}
Exits with status 2 when any case fails."
)]
pub struct LossCheckArgs {
    /// Number of random cases
    #[arg(long, default_value_t = 100)]
    pub cases: usize,
    /// Temperature for every case
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Seed for the random cases [default: 42]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Summary (JSON), default stdout
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}
