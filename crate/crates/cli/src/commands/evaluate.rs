use std::collections::BTreeMap;
use std::fs;

use anyhow::{bail, Context, Result};
use needdesk_core::agreement;
use needdesk_core::assignment::{self, UnitAssignment};
use needdesk_core::detect::{self, NeedLabel};
use needdesk_core::taxonomy::{self, CategorySuggestion, SetResults};
use needdesk_core::Real;

use super::pipeline::{input, load_jsonl, suggestions_name, ASSIGNMENTS, LABELS};
use crate::args::EvaluateCommand;
use crate::{truth, Env};

pub fn run(env: &Env, command: EvaluateCommand) -> Result<()> {
    let r = &env.reference;
    let gran = env.settings.granularity;
    match command {
        EvaluateCommand::Detection { truth, labels } => {
            let truth = truth::load(&truth, &r.taxonomy, &r.teams)?;
            let labels: Vec<NeedLabel> = load_jsonl(&input(env, &labels, LABELS)?)?;
            let pairs = labels
                .iter()
                .map(|l| {
                    let t = truth
                        .get(&l.unit.unit_id)
                        .with_context(|| format!("no truth row for unit {}", l.unit.unit_id))?;
                    Ok((t.need, l.kind))
                })
                .collect::<Result<Vec<_>>>()?;
            let report = detect::evaluate_detection::<Real>(&pairs)?;
            env.out.write_report("eval_detection", &report, &report.render())
        }
        EvaluateCommand::Taxonomy { truth, suggestions } => {
            let truth = truth::load(&truth, &r.taxonomy, &r.teams)?;
            let suggestions: Vec<CategorySuggestion> =
                load_jsonl(&input(env, &suggestions, &suggestions_name(gran))?)?;
            let categories: BTreeMap<String, String> = truth
                .iter()
                .filter_map(|(u, t)| Some((u.clone(), t.category.clone()?)))
                .collect();
            // Only units the reviewers categorized can be scored.
            let scored: Vec<CategorySuggestion> = suggestions
                .into_iter()
                .filter(|s| categories.contains_key(&s.unit.unit_id))
                .collect();
            if scored.is_empty() {
                bail!("no suggested unit has a truth category");
            }
            let report = taxonomy::evaluate_filter::<Real>(&scored, &categories, env.settings.beta)?;
            env.out
                .write_report(&format!("eval_taxonomy_{gran}"), &report, &report.render())
        }
        EvaluateCommand::Teams { truth, assignments } => {
            let truth = truth::load(&truth, &r.taxonomy, &r.teams)?;
            let assignments: Vec<UnitAssignment> = load_jsonl(&input(env, &assignments, ASSIGNMENTS)?)?;
            let cases: Vec<(Vec<String>, String)> = assignments
                .iter()
                .filter_map(|a| {
                    let team = truth.get(&a.unit.unit_id)?.team.clone()?;
                    Some((a.teams.iter().map(|p| p.team.clone()).collect(), team))
                })
                .collect();
            let report = assignment::hierarchy_hit_rate::<Real, String>(&cases)
                .context("no assigned unit has a truth team")?;
            env.out.write_report("eval_teams", &report, &report.render())
        }
        EvaluateCommand::Agreement { ratings } => {
            let src = fs::read_to_string(&ratings).with_context(|| format!("reading {}", ratings.display()))?;
            let parsed = agreement::load_ratings(src.as_bytes())
                .with_context(|| format!("ratings file {}", ratings.display()))?;
            let report = agreement::agreement_report(&parsed)?;
            env.out.write_report("eval_agreement", &report, &report.render())
        }
        EvaluateCommand::Granularity { truth, suggestions } => {
            let truth = truth::load(&truth, &r.taxonomy, &r.teams)?;
            let suggestions: Vec<CategorySuggestion> =
                load_jsonl(&input(env, &suggestions, &suggestions_name(gran))?)?;
            let mut per_app: BTreeMap<String, Vec<(String, String, String)>> = BTreeMap::new();
            for s in &suggestions {
                let (Some(pred), Some(t)) = (s.top(), truth.get(&s.unit.unit_id).and_then(|t| t.category.clone()))
                else {
                    continue;
                };
                per_app
                    .entry(s.unit.review.app_id.clone())
                    .or_default()
                    .push((s.unit.unit_id.clone(), pred.to_owned(), t));
            }
            let mut sub = Vec::new();
            let mut sup = Vec::new();
            for (app, triples) in per_app {
                let (a, b) = taxonomy::outcomes_at_both_levels(&triples, &r.taxonomy)?;
                sub.push(SetResults {
                    name: app.clone(),
                    outcomes: a,
                });
                sup.push(SetResults { name: app, outcomes: b });
            }
            let report = taxonomy::compare_granularity::<Real>(&sub, &sup)?;
            env.out
                .write_report(&format!("eval_granularity_{gran}"), &report, &report.render())
        }
    }
}
