//! Pipeline settings: embedded defaults, overridden by a TOML config file,
//! overridden by command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use needdesk_core::assignment::{
    self, Aggregation, AssignmentEvidence, AssignmentTable, DeriveOptions, TeamRegistry, TieOrder,
};
use needdesk_core::detect::{self, Lexicon};
use needdesk_core::sources::{self, ArticleIndex, SourcePolicy};
use needdesk_core::taxonomy::{self, CategoryFilter, Granularity, TaxonomyConfig};
use needdesk_core::workflow::{WorkflowContext, WorkflowPolicy};
use needdesk_core::defaults;
use num_rational::Ratio;
use serde::Deserialize;

use crate::args::GlobalArgs;

pub const DEFAULT_OUT: &str = "needdesk-out";
pub const DEFAULT_BETA: f64 = 0.2;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    pub lexicon: Option<PathBuf>,
    pub taxonomy: Option<PathBuf>,
    pub rules: Option<PathBuf>,
    pub teams: Option<PathBuf>,
    pub tie_order: Option<PathBuf>,
    pub table: Option<PathBuf>,
    pub evidence: Option<PathBuf>,
    pub articles: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdsSection {
    pub need_filter: Option<bool>,
    pub granularity: Option<Granularity>,
    pub team_threshold: Option<String>,
    pub aggregation: Option<Aggregation>,
    pub beta: Option<f64>,
    pub min_article_score: Option<f64>,
    pub min_response_score: Option<f64>,
    pub top_k: Option<usize>,
    pub cross_store_responses: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkflowSection {
    pub dual_review: Option<bool>,
}

/// The on-disk configuration file. Relative paths are resolved against the
/// file's directory.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub paths: PathsSection,
    #[serde(default)]
    pub thresholds: ThresholdsSection,
    #[serde(default)]
    pub workflow: WorkflowSection,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let src = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: Self = toml::from_str(&src).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut Option<PathBuf>| {
            if let Some(v) = p {
                if v.is_relative() {
                    *v = base.join(&*v);
                }
            }
        };
        rebase(&mut cfg.out);
        let p = &mut cfg.paths;
        for slot in [
            &mut p.lexicon,
            &mut p.taxonomy,
            &mut p.rules,
            &mut p.teams,
            &mut p.tie_order,
            &mut p.table,
            &mut p.evidence,
            &mut p.articles,
        ] {
            rebase(slot);
        }
        Ok(cfg)
    }
}

/// Effective settings after merging.
#[derive(Debug, Clone)]
pub struct Settings {
    pub out: PathBuf,
    pub paths: PathsSection,
    pub need_filter: bool,
    pub granularity: Granularity,
    pub team_threshold: Ratio<u64>,
    pub aggregation: Aggregation,
    pub beta: f64,
    pub source_policy: SourcePolicy,
    pub workflow: WorkflowPolicy,
}

impl Settings {
    pub fn resolve(flags: &GlobalArgs) -> Result<Self> {
        let cfg = match &flags.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        let pick = |flag: &Option<PathBuf>, file: &Option<PathBuf>| flag.clone().or_else(|| file.clone());
        let paths = PathsSection {
            lexicon: pick(&flags.lexicon, &cfg.paths.lexicon),
            taxonomy: pick(&flags.taxonomy, &cfg.paths.taxonomy),
            rules: pick(&flags.rules, &cfg.paths.rules),
            teams: pick(&flags.teams, &cfg.paths.teams),
            tie_order: pick(&flags.tie_order, &cfg.paths.tie_order),
            table: pick(&flags.table, &cfg.paths.table),
            evidence: pick(&flags.evidence, &cfg.paths.evidence),
            articles: pick(&flags.articles, &cfg.paths.articles),
        };
        let t = &cfg.thresholds;
        let threshold_src = flags.team_threshold.clone().or_else(|| t.team_threshold.clone());
        let team_threshold = match threshold_src {
            Some(s) => assignment::parse_fraction(&s)
                .filter(|r| *r.numer() > 0 && *r.numer() <= *r.denom())
                .with_context(|| format!("team threshold `{s}` must be a fraction in (0, 1]"))?,
            None => assignment::default_threshold(),
        };
        let beta = flags.beta.or(t.beta).unwrap_or(DEFAULT_BETA);
        if !(beta.is_finite() && beta > 0.0) {
            bail!("beta must be positive, got {beta}");
        }
        let defaults = SourcePolicy::default();
        let source_policy = SourcePolicy {
            min_article_score: flags
                .min_article_score
                .or(t.min_article_score)
                .unwrap_or(defaults.min_article_score),
            min_response_score: flags
                .min_response_score
                .or(t.min_response_score)
                .unwrap_or(defaults.min_response_score),
            top_k: flags.top_k.or(t.top_k).unwrap_or(defaults.top_k),
            cross_store_responses: flags.cross_store_responses || t.cross_store_responses.unwrap_or(false),
        };
        source_policy.validate()?;
        Ok(Self {
            out: flags.out.clone().or(cfg.out).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
            paths,
            need_filter: !flags.no_need_filter && t.need_filter.unwrap_or(true),
            granularity: flags.granularity.map(Into::into).or(t.granularity).unwrap_or(Granularity::Fine),
            team_threshold,
            aggregation: flags.aggregation.map(Into::into).or(t.aggregation).unwrap_or_default(),
            beta,
            source_policy,
            workflow: WorkflowPolicy {
                dual_review: flags.dual_review || cfg.workflow.dual_review.unwrap_or(false),
            },
        })
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Reads `path` if given, else returns the embedded text.
fn source(path: &Option<PathBuf>, embedded: &'static str) -> Result<(String, String)> {
    match path {
        Some(p) => Ok((read(p)?, p.display().to_string())),
        None => Ok((embedded.to_owned(), "built-in".to_owned())),
    }
}

/// All reference data, loaded and validated up front.
#[derive(Debug, Clone)]
pub struct Reference {
    pub lexicon: Lexicon,
    pub taxonomy: TaxonomyConfig,
    pub filter: CategoryFilter,
    pub teams: TeamRegistry,
    pub tie_order: TieOrder,
    pub evidence: Option<AssignmentEvidence>,
    pub table: AssignmentTable,
    pub articles: ArticleIndex,
    /// Where each piece came from, for `validate`.
    pub origins: Vec<(&'static str, String)>,
}

impl Reference {
    pub fn load(s: &Settings) -> Result<Self> {
        let mut origins = Vec::new();
        let (src, from) = source(&s.paths.lexicon, defaults::LEXICON)?;
        let lexicon = detect::load_lexicon(src.as_bytes()).with_context(|| format!("lexicon ({from})"))?;
        origins.push(("lexicon", from));

        let (src, from) = source(&s.paths.taxonomy, defaults::TAXONOMY)?;
        let taxonomy = taxonomy::load_taxonomy(src.as_bytes()).with_context(|| format!("taxonomy ({from})"))?;
        origins.push(("taxonomy", from));

        let embedded_rules = match s.granularity {
            Granularity::Fine => defaults::RULES_FINE,
            Granularity::Broad => defaults::RULES_BROAD,
        };
        let (src, from) = source(&s.paths.rules, embedded_rules)?;
        let filter = taxonomy::load_filter(src.as_bytes(), s.granularity, &taxonomy)
            .with_context(|| format!("category rules ({from})"))?;
        origins.push(("rules", from));

        let (src, from) = source(&s.paths.teams, defaults::TEAMS)?;
        let teams = assignment::load_teams(src.as_bytes()).with_context(|| format!("teams ({from})"))?;
        origins.push(("teams", from));

        let (src, from) = source(&s.paths.tie_order, defaults::TIE_ORDER)?;
        let tie_order =
            assignment::load_tie_order(src.as_bytes(), &teams).with_context(|| format!("tie order ({from})"))?;
        origins.push(("tie order", from));

        let (evidence, table) = match &s.paths.table {
            Some(p) => {
                let table = assignment::load_table(read(p)?.as_bytes(), &teams, &taxonomy)
                    .with_context(|| format!("assignment table ({})", p.display()))?;
                origins.push(("assignment table", p.display().to_string()));
                (None, table)
            }
            None => {
                let (src, from) = source(&s.paths.evidence, defaults::ASSIGNMENT_EVIDENCE)?;
                let evidence = assignment::load_evidence(src.as_bytes(), &teams, &taxonomy)
                    .with_context(|| format!("assignment evidence ({from})"))?;
                let options = DeriveOptions {
                    aggregation: s.aggregation,
                    tie_order: tie_order.clone(),
                };
                let table = assignment::derive_table(&evidence, s.team_threshold, &options, &taxonomy)
                    .context("deriving the assignment table")?;
                origins.push(("assignment table", format!("derived from {from} evidence at {}", s.team_threshold)));
                (Some(evidence), table)
            }
        };

        let (src, from) = source(&s.paths.articles, defaults::ARTICLES)?;
        let articles = sources::load_articles(src.as_bytes()).with_context(|| format!("articles ({from})"))?;
        origins.push(("articles", from));

        Ok(Self {
            lexicon,
            taxonomy,
            filter,
            teams,
            tie_order,
            evidence,
            table,
            articles,
            origins,
        })
    }

    pub fn context(&self, policy: WorkflowPolicy) -> WorkflowContext<'_> {
        WorkflowContext {
            taxonomy: &self.taxonomy,
            teams: &self.teams,
            policy,
        }
    }
}
