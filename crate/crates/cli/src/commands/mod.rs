mod evaluate;
mod pipeline;
mod store;

use std::fs;

use anyhow::{Context, Result};
use needdesk_core::defaults;
use needdesk_core::sources;

use crate::args::Command;
use crate::Env;

pub use pipeline::{
    ASSIGNMENTS, CORPUS, DETECT_STATS, INGEST_REPORT, LABELS, RESOLVE_SUMMARY, SOURCES, TABLE_STEM,
};

pub(crate) fn dispatch(env: &Env, command: Command) -> Result<()> {
    match command {
        Command::Ingest(a) => pipeline::ingest(env, &a),
        Command::Detect(a) => pipeline::detect(env, &a),
        Command::Classify(a) => pipeline::classify(env, &a),
        Command::Assign(a) => pipeline::assign(env, &a),
        Command::Resolve(a) => pipeline::resolve(env, &a),
        Command::Evaluate(c) => evaluate::run(env, c),
        Command::Report(c) => store::report(env, c),
        Command::Export(c) => store::export(env, c),
        Command::Serve(a) => store::serve(env, a),
        Command::Validate => validate(env),
        Command::Similarity(a) => {
            let read = |p: &std::path::Path| fs::read_to_string(p).with_context(|| format!("reading {}", p.display()));
            println!("{:.4}", sources::similarity(&read(&a.a)?, &read(&a.b)?));
            Ok(())
        }
    }
}

fn validate(env: &Env) -> Result<()> {
    let r = &env.reference;
    let p = &env.settings.paths;
    for (what, from) in &r.origins {
        println!("{what}: {from}");
    }
    println!(
        "lexicon entries: {}\nsubcategories: {}\nsupercategories: {}\ncategory rules: {}\nteams: {}\narticles: {}",
        r.lexicon.len(),
        r.taxonomy.subcategories.len(),
        r.taxonomy.supercategories.len(),
        r.filter.rules().len(),
        r.teams.teams().len(),
        r.articles.len()
    );
    let stock_table = p.table.is_none()
        && p.evidence.is_none()
        && p.teams.is_none()
        && p.taxonomy.is_none()
        && p.tie_order.is_none()
        && env.settings.team_threshold == needdesk_core::assignment::default_threshold();
    if stock_table {
        let shipped = defaults::table(&r.teams, &r.taxonomy).context("shipped assignment table")?;
        anyhow::ensure!(shipped == r.table, "shipped assignment table differs from its derivation");
        println!("assignment table: shipped copy matches derivation");
    }
    println!("ok");
    Ok(())
}
