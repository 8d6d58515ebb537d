//! Read-only views over a set of cases: addressability, queue statistics,
//! filter/reviewer agreement, and evidence export for the assignment table.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ActionKind, Actor, CaseResolution, CaseState, TriageCase};
use crate::agreement::{self, AgreementError, AgreementRow, KappaStatistic};
use crate::assignment::{AssignmentEvidence, AssignmentError, EvidenceRecord, TeamRegistry};
use crate::detect::NeedKind;
use crate::metrics;
use crate::report::TextTable;
use crate::taxonomy::TaxonomyConfig;
use crate::Scalar;

pub const NO_DATA: &str = "no data";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AddressabilityReport<T> {
    /// Cases whose need a reviewer confirmed.
    pub confirmed: u64,
    /// Confirmed cases without a final resolution yet; excluded from fractions.
    pub in_flight: u64,
    pub closed: u64,
    pub resolved: u64,
    pub counts: BTreeMap<CaseResolution, u64>,
    /// Share of closed cases per resolution; `None` when nothing is closed.
    pub fractions: Option<BTreeMap<CaseResolution, T>>,
    pub resolved_percent: Option<T>,
    /// E.g. `139 (88%)`, or `no data`.
    pub display: String,
}

/// Whole-number percentage, rounded half away from zero.
pub fn display_percent<T: Scalar>(p: &T) -> String {
    format!("{}%", p.as_f64().round() as i64)
}

pub fn addressability_report<T: Scalar>(cases: &[TriageCase]) -> AddressabilityReport<T> {
    let mut counts: BTreeMap<CaseResolution, u64> = CaseResolution::ALL.iter().map(|&r| (r, 0)).collect();
    let mut confirmed = 0;
    let mut in_flight = 0;
    for c in cases.iter().filter(|c| c.confirmed_label.is_some()) {
        confirmed += 1;
        match c.resolution {
            Some(r) => *counts.entry(r).or_default() += 1,
            None => in_flight += 1,
        }
    }
    let closed = confirmed - in_flight;
    let resolved: u64 = counts.iter().filter(|(r, _)| r.is_resolved()).map(|(_, n)| n).sum();
    let fractions =
        (closed > 0).then(|| counts.iter().map(|(&r, &n)| (r, T::ratio(n, closed))).collect::<BTreeMap<_, _>>());
    let resolved_percent = metrics::validity::<T>(resolved, closed).ok();
    let display = resolved_percent
        .as_ref()
        .map_or_else(|| NO_DATA.to_owned(), |p| format!("{resolved} ({})", display_percent(p)));
    AddressabilityReport {
        confirmed,
        in_flight,
        closed,
        resolved,
        counts,
        fractions,
        resolved_percent,
        display,
    }
}

impl<T: Scalar> AddressabilityReport<T> {
    pub fn render(&self) -> String {
        let mut t = TextTable::new(["Resolution", "Cases", "Share"]);
        for (r, n) in &self.counts {
            let share = self
                .fractions
                .as_ref()
                .map_or_else(|| "n.a.".into(), |f| display_percent(&(f[r].clone() * T::from_count(100))));
            t.push(vec![serde_json::to_value(r).unwrap().as_str().unwrap_or_default().to_owned(), n.to_string(), share]);
        }
        format!(
            "{}\nconfirmed: {}  in flight: {}  resolved: {}\n",
            t.render(),
            self.confirmed,
            self.in_flight,
            self.display
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsReport {
    pub total: u64,
    pub by_state: BTreeMap<String, u64>,
    pub by_app: BTreeMap<String, u64>,
    pub by_store: BTreeMap<String, u64>,
    pub by_filter_label: BTreeMap<String, u64>,
    pub by_confirmed_label: BTreeMap<String, u64>,
}

pub fn stats_report(cases: &[TriageCase]) -> StatsReport {
    let mut s = StatsReport {
        total: cases.len() as u64,
        ..Default::default()
    };
    for c in cases {
        *s.by_state.entry(c.state.to_string()).or_default() += 1;
        *s.by_app.entry(c.unit.review.app_id.clone()).or_default() += 1;
        *s.by_store.entry(c.unit.review.store.to_string()).or_default() += 1;
        if let Some(l) = c.filter_label {
            *s.by_filter_label.entry(l.to_string()).or_default() += 1;
        }
        if let Some(l) = c.confirmed_label {
            *s.by_confirmed_label.entry(l.to_string()).or_default() += 1;
        }
    }
    s
}

impl StatsReport {
    pub fn render(&self) -> String {
        let mut out = format!("cases: {}\n", self.total);
        for (title, map) in [
            ("State", &self.by_state),
            ("App", &self.by_app),
            ("Store", &self.by_store),
            ("Filter label", &self.by_filter_label),
            ("Confirmed label", &self.by_confirmed_label),
        ] {
            let mut t = TextTable::new([title, "Cases"]);
            for (k, n) in map {
                t.push(vec![k.clone(), n.to_string()]);
            }
            out.push('\n');
            out.push_str(&t.render());
        }
        out
    }
}

/// The reviewer's verdict on the need gate, once given.
fn reviewed_label(c: &TriageCase) -> Option<NeedKind> {
    match (c.confirmed_label, c.state) {
        (Some(l), _) => Some(l),
        (None, CaseState::NoNeed) => Some(NeedKind::None),
        _ => None,
    }
}

/// Cohen's κ between the detection filter and the reviewers' need labels.
pub fn filter_agreement(cases: &[TriageCase]) -> Result<AgreementRow, AgreementError> {
    let pairs: Vec<(NeedKind, NeedKind)> = cases
        .iter()
        .filter_map(|c| Some((c.filter_label?, reviewed_label(c)?)))
        .collect();
    let kappa = if pairs.is_empty() {
        None
    } else {
        metrics::cohen_kappa::<f64, _>(&pairs).ok().map(|k| k.value)
    };
    agreement::row_for("filter vs reviewer", pairs.len() as u64, 2, KappaStatistic::Cohen, kappa)
}

/// One vote per case with a confirmed category and team, attributed to the
/// reviewer who confirmed the team.
pub fn export_evidence(
    cases: &[TriageCase],
    teams: &TeamRegistry,
    taxonomy: &TaxonomyConfig,
) -> Result<AssignmentEvidence, AssignmentError> {
    let records = cases
        .iter()
        .filter_map(|c| {
            let category = c.confirmed_category.clone()?;
            let team = c.confirmed_team.clone()?;
            let rater = c
                .audit
                .iter()
                .rev()
                .find(|e| e.action.kind() == ActionKind::ConfirmTeam)
                .and_then(|e| match &e.actor {
                    Actor::Human(id) => Some(id.clone()),
                    Actor::System => None,
                })?;
            Some(EvidenceRecord {
                unit_id: c.unit.unit_id.clone(),
                category,
                team,
                rater,
            })
        })
        .collect();
    AssignmentEvidence::new(records, teams, taxonomy)
}

#[cfg(test)]
mod tests {
    use super::super::tests::{fixtures, happy_path, run, seed};
    use super::super::{CaseSeed, WorkflowContext, WorkflowPolicy};
    use super::*;
    use crate::assignment::{default_threshold, derive_table, DeriveOptions};

    fn closed(id: usize, resolution: Option<CaseResolution>) -> TriageCase {
        let mut s: CaseSeed = seed();
        s.case_id = format!("c{id}");
        let mut c = TriageCase::new(s);
        c.confirmed_label = Some(NeedKind::Explicit);
        c.resolution = resolution;
        c
    }

    #[test]
    fn paper_scale_addressability() {
        let mut cases: Vec<_> = (0..139).map(|i| closed(i, Some(CaseResolution::Answered))).collect();
        cases.extend((139..158).map(|i| closed(i, Some(CaseResolution::Unresolvable))));
        cases.push(closed(999, None));
        let r = addressability_report::<f64>(&cases);
        assert_eq!((r.confirmed, r.in_flight, r.closed, r.resolved), (159, 1, 158, 139));
        assert_eq!(r.display, "139 (88%)");
        let sum: f64 = r.fractions.unwrap().values().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_addressability() {
        let none = addressability_report::<f64>(&[]);
        assert_eq!(none.display, NO_DATA);
        assert!(none.fractions.is_none());
        let bad: Vec<_> = (0..3).map(|i| closed(i, Some(CaseResolution::Unresolvable))).collect();
        let r = addressability_report::<f64>(&bad);
        assert_eq!(r.resolved_percent, Some(0.0));
        assert_eq!(r.display, "0 (0%)");
        assert!(r.render().contains("unresolvable"));
    }

    #[test]
    fn evidence_round_trip() {
        let (tax, teams) = fixtures();
        let ctx = WorkflowContext {
            taxonomy: &tax,
            teams: &teams,
            policy: WorkflowPolicy::default(),
        };
        assert!(export_evidence(&[], &teams, &tax).unwrap().is_empty());
        let cases: Vec<_> = (0..3)
            .map(|i| {
                let mut s = seed();
                s.case_id = format!("c{i}");
                s.unit.unit_id = format!("u{i}");
                s.unit.review.id = format!("r{i}");
                let mut steps = happy_path(&s);
                if let (_, crate::workflow::Action::SuggestCategory { suggestion }) = &mut steps[2] {
                    suggestion.unit = s.unit.clone();
                }
                run(TriageCase::new(s), &steps, &ctx)
            })
            .collect();
        let ev = export_evidence(&cases, &teams, &tax).unwrap();
        assert_eq!(ev.len(), 3);
        assert!(ev
            .records()
            .iter()
            .all(|r| r.category == "Operation" && r.team == "Mobile" && r.rater == "alice"));
        let table = derive_table(&ev, default_threshold(), &DeriveOptions::default(), &tax).unwrap();
        let row = table.row("Operation").unwrap();
        assert_eq!((row.len(), row[0].percent()), (1, 100));

        let stats = stats_report(&cases);
        assert_eq!(stats.by_state["Answered"], 3);
        let k = filter_agreement(&cases).unwrap();
        assert_eq!(k.items, 3);
    }
}
