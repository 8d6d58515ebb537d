//! Inter-rater agreement per evaluation set: Cohen's κ for two raters,
//! Fleiss' κ for three or more, nothing for a single rater.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{self, AgreementBand, MetricError, RatingsTable};
use crate::report::{fmt4, TextTable};

#[derive(Debug, Error, PartialEq)]
pub enum AgreementError {
    #[error("malformed ratings file: {0}")]
    Malformed(String),
    #[error("set `{set}`: item `{item}` is not rated by both raters")]
    Unpaired { set: String, item: String },
    #[error("set `{set}`: rater `{rater}` rated item `{item}` twice")]
    DuplicateRating { set: String, item: String, rater: String },
    #[error("set `{set}`: {source}")]
    Metric {
        set: String,
        #[source]
        source: MetricError,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rating {
    pub set: String,
    pub item: String,
    pub rater: String,
    pub category: String,
}

pub fn load_ratings<R: Read>(input: R) -> Result<Vec<Rating>, AgreementError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = rdr.headers().map_err(|e| AgreementError::Malformed(e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != ["set", "item", "rater", "category"] {
        return Err(AgreementError::Malformed(format!(
            "expected header `set,item,rater,category`, found `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    rdr.deserialize()
        .map(|r| r.map_err(|e: csv::Error| AgreementError::Malformed(e.to_string())))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaStatistic {
    Cohen,
    Fleiss,
    /// Single rater: agreement is undefined.
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementRow {
    pub set: String,
    pub items: u64,
    pub raters: u64,
    pub statistic: KappaStatistic,
    pub kappa: Option<f64>,
    pub band: Option<AgreementBand>,
    /// Display label for the band, e.g. "Substantial".
    pub band_label: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub rows: Vec<AgreementRow>,
}

impl AgreementReport {
    pub fn render(&self) -> String {
        let mut t = TextTable::new(["Set", "Items", "Raters", "Statistic", "Kappa", "Band"]);
        for r in &self.rows {
            t.push(vec![
                r.set.clone(),
                r.items.to_string(),
                r.raters.to_string(),
                match r.statistic {
                    KappaStatistic::Cohen => "Cohen",
                    KappaStatistic::Fleiss => "Fleiss",
                    KappaStatistic::NotApplicable => "n.a.",
                }
                .into(),
                r.kappa.map_or_else(|| "n.a.".into(), fmt4),
                r.band_label.clone().unwrap_or_else(|| "n.a.".into()),
            ]);
        }
        t.render()
    }
}

/// Builds one row from a κ value.
pub fn row_for(set: &str, items: u64, raters: u64, statistic: KappaStatistic, kappa: Option<f64>) -> Result<AgreementRow, AgreementError> {
    let band = kappa
        .map(|k| metrics::landis_koch(&k))
        .transpose()
        .map_err(|source| AgreementError::Metric {
            set: set.to_owned(),
            source,
        })?;
    Ok(AgreementRow {
        set: set.to_owned(),
        items,
        raters,
        statistic,
        kappa,
        band,
        band_label: band.map(|b| b.to_string()),
    })
}

/// Agreement per set, sets in order of first appearance.
pub fn agreement_report(ratings: &[Rating]) -> Result<AgreementReport, AgreementError> {
    let mut order: Vec<&str> = Vec::new();
    // set -> item -> rater -> category
    let mut sets: BTreeMap<&str, BTreeMap<&str, BTreeMap<&str, &str>>> = BTreeMap::new();
    for r in ratings {
        if !sets.contains_key(r.set.as_str()) {
            order.push(&r.set);
        }
        let prev = sets
            .entry(&r.set)
            .or_default()
            .entry(&r.item)
            .or_default()
            .insert(&r.rater, &r.category);
        if prev.is_some() {
            return Err(AgreementError::DuplicateRating {
                set: r.set.clone(),
                item: r.item.clone(),
                rater: r.rater.clone(),
            });
        }
    }
    let mut rows = Vec::new();
    for set in order {
        let items = &sets[set];
        let mut raters: Vec<&str> = items.values().flat_map(|m| m.keys().copied()).collect();
        raters.sort();
        raters.dedup();
        let metric = |source| AgreementError::Metric {
            set: set.to_owned(),
            source,
        };
        let (statistic, kappa) = match raters.len() {
            0 | 1 => (KappaStatistic::NotApplicable, None),
            2 => {
                let mut pairs = Vec::with_capacity(items.len());
                for (item, by) in items {
                    match (by.get(raters[0]), by.get(raters[1])) {
                        (Some(a), Some(b)) => pairs.push((*a, *b)),
                        _ => {
                            return Err(AgreementError::Unpaired {
                                set: set.to_owned(),
                                item: (*item).to_owned(),
                            })
                        }
                    }
                }
                let k = metrics::cohen_kappa::<f64, _>(&pairs).map_err(metric)?;
                (KappaStatistic::Cohen, Some(k.value))
            }
            _ => {
                let table = RatingsTable::from_labels(
                    items
                        .iter()
                        .map(|(item, by)| ((*item).to_owned(), by.values().copied().collect::<Vec<_>>())),
                );
                let k = metrics::fleiss_kappa::<f64>(&table).map_err(metric)?;
                (KappaStatistic::Fleiss, Some(k.value))
            }
        };
        rows.push(row_for(set, items.len() as u64, raters.len() as u64, statistic, kappa)?);
    }
    Ok(AgreementReport { rows })
}
