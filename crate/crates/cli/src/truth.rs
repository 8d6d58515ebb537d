//! Reviewer ground truth: `unit_id,need,category,team`, one row per unit.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use needdesk_core::assignment::TeamRegistry;
use needdesk_core::detect::NeedKind;
use needdesk_core::taxonomy::TaxonomyConfig;

pub const HEADER: [&str; 4] = ["unit_id", "need", "category", "team"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthRow {
    pub need: NeedKind,
    pub category: Option<String>,
    pub team: Option<String>,
}

pub type Truth = BTreeMap<String, TruthRow>;

pub fn load(path: &Path, taxonomy: &TaxonomyConfig, teams: &TeamRegistry) -> Result<Truth> {
    let src = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse(&src, taxonomy, teams).with_context(|| format!("truth file {}", path.display()))
}

pub fn parse(src: &str, taxonomy: &TaxonomyConfig, teams: &TeamRegistry) -> Result<Truth> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(src.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_owned()).collect();
    if header != HEADER {
        bail!("expected header `{}`, found `{}`", HEADER.join(","), header.join(","));
    }
    let mut truth = Truth::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| rec.get(i).map(str::trim).filter(|s| !s.is_empty()).map(str::to_owned);
        let unit = field(0).with_context(|| format!("line {line}: empty unit id"))?;
        let need: NeedKind = field(1)
            .unwrap_or_default()
            .parse()
            .map_err(|v| anyhow::anyhow!("line {line}: unknown need label `{v}`"))?;
        let category = field(2);
        if let Some(c) = &category {
            if !taxonomy.is_declared(c) {
                bail!("line {line}: undeclared category `{c}`");
            }
        }
        let team = field(3);
        if let Some(t) = &team {
            if !teams.contains(t) {
                bail!("line {line}: unknown team `{t}`");
            }
        }
        if truth.insert(unit.clone(), TruthRow { need, category, team }).is_some() {
            bail!("line {line}: duplicate unit `{unit}`");
        }
    }
    Ok(truth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use needdesk_core::defaults;

    #[test]
    fn parses_and_validates() {
        let tax = defaults::taxonomy().unwrap();
        let teams = defaults::teams().unwrap();
        let t = parse("unit_id,need,category,team\nu1,explicit,Operation,Mobile\nu2,none,,\n", &tax, &teams).unwrap();
        assert_eq!(t["u1"].category.as_deref(), Some("Operation"));
        assert_eq!(t["u2"].need, NeedKind::None);
        assert!(parse("unit_id,need,category,team\nu1,explicit,Nope,\n", &tax, &teams).is_err());
        assert!(parse("unit_id,need,category,team\nu1,maybe,,\n", &tax, &teams).is_err());
        assert!(parse("unit_id,need,category,team\nu1,none,,\nu1,none,,\n", &tax, &teams).is_err());
        assert!(parse("id,need\n", &tax, &teams).is_err());
    }
}
