use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use needdesk_core::assignment::Aggregation;
use needdesk_core::corpus::{ImportFormat, StoreKind};
use needdesk_core::taxonomy::Granularity;

#[derive(Debug, Parser)]
#[command(name = "needdesk", version, about = "Explanation-need triage for app-store reviews")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Settings shared by all subcommands. Flags override the config file,
/// which overrides the built-in reference data.
#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// TOML pipeline configuration.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Directory all outputs are written to.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Need-phrase lexicon (CSV).
    #[arg(long, global = true, value_name = "FILE")]
    pub lexicon: Option<PathBuf>,
    /// Category taxonomy (CSV).
    #[arg(long, global = true, value_name = "FILE")]
    pub taxonomy: Option<PathBuf>,
    /// Category rules for the selected granularity.
    #[arg(long, global = true, value_name = "FILE")]
    pub rules: Option<PathBuf>,
    /// Team registry (CSV).
    #[arg(long, global = true, value_name = "FILE")]
    pub teams: Option<PathBuf>,
    /// Team order used to break equal shares (CSV).
    #[arg(long, global = true, value_name = "FILE")]
    pub tie_order: Option<PathBuf>,
    /// Use this assignment table instead of deriving one from evidence.
    #[arg(long, global = true, value_name = "FILE")]
    pub table: Option<PathBuf>,
    /// Assignment evidence the table is derived from.
    #[arg(long, global = true, value_name = "FILE")]
    pub evidence: Option<PathBuf>,
    /// Help-center article index (JSONL).
    #[arg(long, global = true, value_name = "FILE")]
    pub articles: Option<PathBuf>,
    /// Category rule set: fine subcategories or broad supercategories.
    #[arg(long, global = true, value_enum)]
    pub granularity: Option<GranularityArg>,
    /// Share a team needs to enter a category's hierarchy (`1/4`, `0.25`, `25%`).
    #[arg(long, global = true, value_name = "FRACTION")]
    pub team_threshold: Option<String>,
    /// How evidence votes are pooled before computing shares.
    #[arg(long, global = true, value_enum)]
    pub aggregation: Option<AggregationArg>,
    /// β for the F-β scores in evaluation reports.
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    /// Minimum similarity for an article to be proposed.
    #[arg(long, global = true)]
    pub min_article_score: Option<f64>,
    /// Minimum similarity for a past response to be proposed.
    #[arg(long, global = true)]
    pub min_response_score: Option<f64>,
    /// Candidates kept per answer source.
    #[arg(long, global = true)]
    pub top_k: Option<usize>,
    /// Process every unit, not only those the detector flagged.
    #[arg(long, global = true)]
    pub no_need_filter: bool,
    /// Let App Store units reuse Google Play responses.
    #[arg(long, global = true)]
    pub cross_store_responses: bool,
    /// Require two reviewers to agree at the need gate.
    #[arg(long, global = true)]
    pub dual_review: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GranularityArg {
    Fine,
    Broad,
}

impl From<GranularityArg> for Granularity {
    fn from(g: GranularityArg) -> Self {
        match g {
            GranularityArg::Fine => Granularity::Fine,
            GranularityArg::Broad => Granularity::Broad,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AggregationArg {
    AllVotes,
    Consensus,
}

impl From<AggregationArg> for Aggregation {
    fn from(a: AggregationArg) -> Self {
        match a {
            AggregationArg::AllVotes => Aggregation::AllVotes,
            AggregationArg::Consensus => Aggregation::Consensus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Jsonl,
    Csv,
}

impl From<FormatArg> for ImportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Jsonl => ImportFormat::JsonLines,
            FormatArg::Csv => ImportFormat::DelimitedTable,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StoreArg {
    GooglePlay,
    Apple,
}

impl From<StoreArg> for StoreKind {
    fn from(s: StoreArg) -> Self {
        match s {
            StoreArg::GooglePlay => StoreKind::GooglePlay,
            StoreArg::Apple => StoreKind::AppleAppStore,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct StoreDir {
    /// Case store directory.
    #[arg(long = "store", env = "NEEDDESK_STORE", value_name = "DIR")]
    pub dir: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Import a store export into the canonical corpus.
    Ingest(IngestArgs),
    /// Label every review with the lexicon filter.
    Detect(DetectArgs),
    /// Suggest taxonomy categories for flagged units.
    Classify(ClassifyArgs),
    /// Rank responsible teams for categorized units.
    Assign(AssignArgs),
    /// Propose answer sources for flagged units.
    Resolve(ResolveArgs),
    /// Score pipeline outputs against reviewer truth.
    #[command(subcommand)]
    Evaluate(EvaluateCommand),
    /// Reports over the case store.
    #[command(subcommand)]
    Report(ReportCommand),
    /// Run the triage HTTP service.
    Serve(ServeArgs),
    /// Load and cross-check all reference data.
    Validate,
    /// Export data from the case store.
    #[command(subcommand)]
    Export(ExportCommand),
    /// Ratcliff/Obershelp similarity of two text files.
    Similarity(SimilarityArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    pub input: PathBuf,
    /// Input format; inferred from the file extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    #[arg(long = "source", value_enum)]
    pub store: StoreArg,
    /// TOML column mapping for the export.
    #[arg(long, value_name = "FILE")]
    pub mapping: Option<PathBuf>,
    /// Add to the existing corpus instead of replacing it.
    #[arg(long)]
    pub append: bool,
    /// Also open triage cases for the imported reviews in this store.
    #[arg(long = "open-cases", value_name = "DIR")]
    pub open_cases: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Corpus file; defaults to the corpus in the output directory.
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AssignArgs {
    #[arg(long, value_name = "FILE")]
    pub suggestions: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ResolveArgs {
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum EvaluateCommand {
    /// Filter labels against reviewer need labels.
    Detection {
        #[arg(long, value_name = "FILE")]
        truth: PathBuf,
        #[arg(long, value_name = "FILE")]
        labels: Option<PathBuf>,
    },
    /// Top category suggestion against reviewer categories.
    Taxonomy {
        #[arg(long, value_name = "FILE")]
        truth: PathBuf,
        #[arg(long, value_name = "FILE")]
        suggestions: Option<PathBuf>,
    },
    /// Suggested team hierarchy against the responsible team.
    Teams {
        #[arg(long, value_name = "FILE")]
        truth: PathBuf,
        #[arg(long, value_name = "FILE")]
        assignments: Option<PathBuf>,
    },
    /// Inter-rater agreement per rating set.
    Agreement {
        #[arg(long, value_name = "FILE")]
        ratings: PathBuf,
    },
    /// Category validity at subcategory and supercategory level, per app.
    Granularity {
        #[arg(long, value_name = "FILE")]
        truth: PathBuf,
        #[arg(long, value_name = "FILE")]
        suggestions: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum ReportCommand {
    /// Resolution shares of confirmed needs.
    Addressability(StoreDir),
    /// Case counts by state, app, store and label.
    Stats(StoreDir),
    /// Agreement between the filter and the reviewers.
    Agreement(StoreDir),
}

#[derive(Debug, Subcommand)]
pub enum ExportCommand {
    /// Confirmed (category, team) decisions as assignment evidence.
    Evidence(StoreDir),
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub store: StoreDir,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Corpus whose developer responses seed the past-response tier.
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimilarityArgs {
    pub a: PathBuf,
    pub b: PathBuf,
}
