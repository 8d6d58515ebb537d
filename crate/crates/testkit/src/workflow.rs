//! Random drivers and a hand-written transition table for the triage
//! workflow.

use std::collections::BTreeSet;

use chrono::{DateTime, Duration, Utc};
use needdesk_core::assignment::{TeamPick, TeamRegistry};
use needdesk_core::corpus::{NeedUnit, ReviewRef, StoreKind};
use needdesk_core::detect::{LabelSource, NeedKind};
use needdesk_core::sources::{Resolution, SourceCandidate, SourceTier};
use needdesk_core::taxonomy::{CategorySuggestion, RankedCategory, TaxonomyConfig};
use needdesk_core::workflow::{
    advance, replay, Action, ActionKind, Actor, CaseResolution, CaseSeed, CaseState, TriageCase, WorkflowContext,
    WorkflowError, WorkflowPolicy,
};
use rand::rngs::StdRng;
use rand::SeedableRng;
use rand::seq::SliceRandom;
use rand::Rng;

/// `(from, action, to)` for every legal pair, written out by hand.
pub const EXPECTED_TRANSITIONS: &[(&str, &str, &str)] = &[
    ("Ingested", "auto_detect", "AutoDetected"),
    ("AutoDetected", "confirm_need", "NeedConfirmed"),
    ("AutoDetected", "reject_need", "NoNeed"),
    ("NeedConfirmed", "suggest_category", "NeedConfirmed"),
    ("NeedConfirmed", "confirm_category", "Categorized"),
    ("Categorized", "rank_teams", "Categorized"),
    ("Categorized", "confirm_team", "TeamAssigned"),
    ("TeamAssigned", "propose_sources", "SourceProposed"),
    ("SourceProposed", "choose_source", "Answered"),
    ("SourceProposed", "draft_response", "Answered"),
    ("SourceProposed", "mark_unresolvable", "Unresolvable"),
];

pub const REVIEWERS: &[&str] = &["alice", "bob", "carol"];

pub fn seed(id: usize) -> CaseSeed {
    let unit = NeedUnit::whole(ReviewRef {
        store: if id.is_multiple_of(3) { StoreKind::AppleAppStore } else { StoreKind::GooglePlay },
        app_id: "com.example.navigator".into(),
        id: format!("r{id}"),
    });
    CaseSeed {
        case_id: unit.unit_id.clone(),
        unit,
        text: format!("How do I change setting number {id}?"),
        language: "en".into(),
        created_at: DateTime::from_timestamp(1_700_000_000, 0).unwrap(),
    }
}

fn pick<'a, R: Rng>(rng: &mut R, items: &'a [String]) -> &'a str {
    &items[rng.gen_range(0..items.len())]
}

fn reviewer<R: Rng>(rng: &mut R) -> Actor {
    Actor::human(*REVIEWERS.choose(rng).unwrap())
}

fn team_names(teams: &TeamRegistry) -> Vec<String> {
    teams.teams().iter().map(|t| t.name.clone()).collect()
}

/// A payload for `kind` that satisfies its guards in `case`, or `None` when
/// no such payload exists (e.g. choosing a source when only a new response
/// was proposed).
pub fn payload_for<R: Rng>(
    kind: ActionKind,
    case: &TriageCase,
    taxonomy: &TaxonomyConfig,
    teams: &TeamRegistry,
    rng: &mut R,
) -> Option<(Actor, Action)> {
    let human = reviewer(rng);
    let team_list = team_names(teams);
    Some(match kind {
        ActionKind::AutoDetect => (
            Actor::System,
            Action::AutoDetect {
                label: *[NeedKind::None, NeedKind::Potential, NeedKind::Implicit, NeedKind::Explicit]
                    .choose(rng)
                    .unwrap(),
                hits: vec![],
            },
        ),
        ActionKind::ConfirmNeed => (
            human,
            Action::ConfirmNeed {
                kind: *[NeedKind::Explicit, NeedKind::Implicit].choose(rng).unwrap(),
            },
        ),
        ActionKind::RejectNeed => (human, Action::RejectNeed),
        ActionKind::SuggestCategory => {
            let n = rng.gen_range(0..3);
            let ranked = (0..n)
                .map(|i| RankedCategory {
                    category: pick(rng, &taxonomy.subcategories).to_owned(),
                    score: 3 - i as u32,
                })
                .collect();
            (
                Actor::System,
                Action::SuggestCategory {
                    suggestion: CategorySuggestion {
                        unit: case.unit.clone(),
                        ranked,
                        tags: vec![],
                        suggested_by: LabelSource::Filter,
                    },
                },
            )
        }
        ActionKind::ConfirmCategory => (
            human,
            Action::ConfirmCategory {
                category: pick(rng, &taxonomy.subcategories).to_owned(),
            },
        ),
        ActionKind::RankTeams => {
            let n = rng.gen_range(1..=3);
            let picks = (0..n)
                .map(|i| TeamPick {
                    team: pick(rng, &team_list).to_owned(),
                    rank: i as u32 + 1,
                    share_percent: Some(50),
                    fallback: false,
                })
                .collect();
            (Actor::System, Action::RankTeams { teams: picks })
        }
        ActionKind::ConfirmTeam => (
            human,
            Action::ConfirmTeam {
                team: pick(rng, &team_list).to_owned(),
            },
        ),
        ActionKind::ProposeSources => {
            let resolution = if rng.gen_bool(0.3) {
                Resolution {
                    tier: SourceTier::NewResponse,
                    candidates: vec![SourceCandidate {
                        tier: SourceTier::NewResponse,
                        reference: None,
                        score: 0.0,
                        rank: 1,
                    }],
                }
            } else {
                let tier = *[SourceTier::Article, SourceTier::PastResponse].choose(rng).unwrap();
                let n = rng.gen_range(1..=3);
                Resolution {
                    tier,
                    candidates: (0..n)
                        .map(|i| SourceCandidate {
                            tier,
                            reference: Some(format!("ref-{i}")),
                            score: 0.9 - 0.1 * i as f64,
                            rank: i as u32 + 1,
                        })
                        .collect(),
                }
            };
            (Actor::System, Action::ProposeSources { resolution })
        }
        ActionKind::ChooseSource => {
            let candidates = &case.source_candidates.as_ref()?.candidates;
            let usable: Vec<u32> = candidates
                .iter()
                .filter(|c| c.tier != SourceTier::NewResponse)
                .map(|c| c.rank)
                .collect();
            let rank = *usable.choose(rng)?;
            (
                human,
                Action::ChooseSource {
                    rank,
                    status: *[None, Some(CaseResolution::AlreadySolved), Some(CaseResolution::WillBeSolved)]
                        .choose(rng)
                        .unwrap(),
                },
            )
        }
        ActionKind::DraftResponse => (
            human,
            Action::DraftResponse {
                text: "Thanks for asking: here is how it works.".into(),
                status: *[None, Some(CaseResolution::Answered), Some(CaseResolution::WillBeSolved)]
                    .choose(rng)
                    .unwrap(),
            },
        ),
        ActionKind::MarkUnresolvable => (
            human,
            Action::MarkUnresolvable {
                reason: Some("needs further inquiry".into()),
            },
        ),
    })
}

/// Drives a fresh case with random legal events until it is terminal or a
/// random stop. Returns the final case.
pub fn random_walk<R: Rng>(id: usize, ctx: &WorkflowContext<'_>, rng: &mut R, max_steps: usize) -> TriageCase {
    let mut case = TriageCase::new(seed(id));
    let mut at = case.created_at;
    for _ in 0..max_steps {
        let mut options = case.legal_actions();
        options.shuffle(rng);
        let Some((actor, action)) = options
            .into_iter()
            .find_map(|k| payload_for(k, &case, ctx.taxonomy, ctx.teams, rng))
        else {
            break;
        };
        at += Duration::seconds(rng.gen_range(1..600));
        match advance(&case, &actor, action, case.version, at, ctx) {
            Ok(next) => case = next,
            // Dual review rejects a repeat confirmation by the same reviewer; try again.
            Err(_) => continue,
        }
        if case.state.is_terminal() || rng.gen_bool(0.03) {
            break;
        }
    }
    case
}

/// Arbitrary, mostly illegal events fired at a case; errors are ignored.
pub fn fuzz<R: Rng>(id: usize, ctx: &WorkflowContext<'_>, rng: &mut R, steps: usize) -> TriageCase {
    let mut case = TriageCase::new(seed(id));
    let at: DateTime<Utc> = case.created_at;
    for _ in 0..steps {
        let kind = *ActionKind::ALL.choose(rng).unwrap();
        let Some((mut actor, action)) = payload_for(kind, &case, ctx.taxonomy, ctx.teams, rng) else {
            continue;
        };
        if rng.gen_bool(0.2) {
            actor = if actor.is_human() { Actor::System } else { reviewer(rng) };
        }
        let version = if rng.gen_bool(0.1) { case.version + 1 } else { case.version };
        if let Ok(next) = advance(&case, &actor, action, version, at, ctx) {
            case = next;
        }
    }
    case
}

/// True when every system event in the trail is immediately answered by a
/// human event, so no stage completes on automation alone.
pub fn human_after_each_system_stage(case: &TriageCase) -> bool {
    let audit = &case.audit;
    audit
        .iter()
        .enumerate()
        .all(|(i, e)| e.actor.is_human() || audit.get(i + 1).is_some_and(|n| n.actor.is_human()))
}

pub fn state_name(s: CaseState) -> String {
    format!("{s:?}")
}

fn article_resolution() -> Action {
    Action::ProposeSources {
        resolution: Resolution {
            tier: SourceTier::Article,
            candidates: vec![SourceCandidate {
                tier: SourceTier::Article,
                reference: Some("kb-1".into()),
                score: 0.8,
                rank: 1,
            }],
        },
    }
}

/// Applies one canonical action per kind, in order, to a fresh case.
fn drive(path: &[ActionKind], ctx: &WorkflowContext<'_>, rng: &mut StdRng) -> Result<TriageCase, String> {
    let mut case = TriageCase::new(seed(1));
    for &kind in path {
        let (actor, action) = match kind {
            ActionKind::ProposeSources => (Actor::System, article_resolution()),
            ActionKind::AutoDetect => (
                Actor::System,
                Action::AutoDetect {
                    label: NeedKind::Explicit,
                    hits: vec![],
                },
            ),
            k => payload_for(k, &case, ctx.taxonomy, ctx.teams, rng).ok_or(format!("no payload for {}", k.as_str()))?,
        };
        case = advance(&case, &actor, action, case.version, case.created_at, ctx).map_err(|e| e.to_string())?;
    }
    Ok(case)
}

/// Fires every action kind at a representative case of every state (and of
/// both sub-phases of the two self-looping states) and compares the outcome
/// with [`EXPECTED_TRANSITIONS`]. Returns the number of pairs checked.
pub fn check_transition_table(ctx: &WorkflowContext<'_>, rng_seed: u64) -> Result<usize, String> {
    use ActionKind::*;
    let mut rng = StdRng::seed_from_u64(rng_seed);
    let main = [AutoDetect, ConfirmNeed, SuggestCategory, ConfirmCategory, RankTeams, ConfirmTeam, ProposeSources];
    let answered = [&main[..], &[ChooseSource]].concat();
    let unresolvable = [&main[..], &[MarkUnresolvable]].concat();
    let representatives: Vec<(&[ActionKind], &str)> = vec![
        (&[], "Ingested"),
        (&[AutoDetect], "AutoDetected"),
        (&[AutoDetect, RejectNeed], "NoNeed"),
        (&main[..2], "NeedConfirmed/unsuggested"),
        (&main[..3], "NeedConfirmed/suggested"),
        (&main[..4], "Categorized/unranked"),
        (&main[..5], "Categorized/ranked"),
        (&main[..6], "TeamAssigned"),
        (&main[..7], "SourceProposed"),
        (&answered, "Answered"),
        (&unresolvable, "Unresolvable"),
    ];
    let mut covered = BTreeSet::new();
    let mut checked = 0;
    for (path, label) in representatives {
        let case = drive(path, ctx, &mut rng)?;
        let state = state_name(case.state);
        if !label.starts_with(&state) {
            return Err(format!("{label} reached {state}"));
        }
        covered.insert(state.clone());
        for kind in ActionKind::ALL {
            let phase_open = match kind {
                SuggestCategory => label.ends_with("unsuggested"),
                ConfirmCategory => label.ends_with("/suggested"),
                RankTeams => label.ends_with("unranked"),
                ConfirmTeam => label.ends_with("/ranked"),
                _ => true,
            };
            let expected = EXPECTED_TRANSITIONS
                .iter()
                .find(|(from, a, _)| *from == state && *a == kind.as_str())
                .filter(|_| phase_open)
                .map(|(_, _, to)| *to);
            let (actor, action) = match kind {
                ProposeSources => (Actor::System, article_resolution()),
                ChooseSource => (Actor::human("alice"), Action::ChooseSource { rank: 1, status: None }),
                k => payload_for(k, &case, ctx.taxonomy, ctx.teams, &mut rng)
                    .ok_or(format!("no payload for {}", k.as_str()))?,
            };
            let got = advance(&case, &actor, action.clone(), case.version, case.created_at, ctx);
            match (expected, &got) {
                (Some(to), Ok(next)) if state_name(next.state) == to && next.version == case.version + 1 => {}
                (None, Err(WorkflowError::IllegalTransition { .. })) => {}
                _ => return Err(format!("{label} --{}--> expected {expected:?}, got {got:?}", kind.as_str())),
            }
            let wrong = if actor.is_human() { Actor::System } else { Actor::human("alice") };
            if advance(&case, &wrong, action, case.version, case.created_at, ctx).is_ok() {
                return Err(format!("{label} accepted {} from the wrong actor", kind.as_str()));
            }
            checked += 1;
        }
    }
    let all: BTreeSet<String> = CaseState::ALL.iter().map(|&s| state_name(s)).collect();
    if covered != all {
        return Err(format!("states not covered: {:?}", all.difference(&covered).collect::<Vec<_>>()));
    }
    Ok(checked)
}

/// Runs `walks` random legal walks (every fourth under dual review) and
/// checks gapless versions, ordered timestamps, exact replay and human
/// sign-off. Returns how many walks reached a terminal state.
pub fn check_random_replays(
    taxonomy: &TaxonomyConfig,
    teams: &TeamRegistry,
    walks: usize,
    rng_seed: u64,
) -> Result<usize, String> {
    let mut rng = StdRng::seed_from_u64(rng_seed);
    let mut terminal = 0;
    for i in 0..walks {
        let ctx = WorkflowContext {
            taxonomy,
            teams,
            policy: WorkflowPolicy { dual_review: i % 4 == 0 },
        };
        let case = random_walk(i, &ctx, &mut rng, 40);
        terminal += usize::from(case.state.is_terminal());
        for (n, e) in case.audit.iter().enumerate() {
            let ordered = n == 0 || (e.from == case.audit[n - 1].to && e.at >= case.audit[n - 1].at);
            if e.version != n as u64 + 1 || !ordered {
                return Err(format!("walk {i}: audit entry {n} out of sequence"));
            }
        }
        if case.version != case.audit.len() as u64 {
            return Err(format!("walk {i}: version {} for {} events", case.version, case.audit.len()));
        }
        let rebuilt = replay(case.seed(), &case.audit, &ctx).map_err(|e| format!("walk {i}: {e}"))?;
        if rebuilt != case {
            return Err(format!("walk {i}: replay diverged"));
        }
        if case.state == CaseState::Answered && !human_after_each_system_stage(&case) {
            return Err(format!("walk {i}: answered without human sign-off"));
        }
    }
    Ok(terminal)
}

/// Fires `runs` fuzzed event streams (wrong actors, stale versions) and
/// checks that every closed case passed a human after each system stage.
/// Returns how many runs closed a case.
pub fn check_fuzzed_soundness(
    taxonomy: &TaxonomyConfig,
    teams: &TeamRegistry,
    runs: usize,
    rng_seed: u64,
) -> Result<usize, String> {
    let mut rng = StdRng::seed_from_u64(rng_seed);
    let mut closed = 0;
    for i in 0..runs {
        let ctx = WorkflowContext {
            taxonomy,
            teams,
            policy: WorkflowPolicy { dual_review: i % 2 == 0 },
        };
        let case = fuzz(i, &ctx, &mut rng, 120);
        if matches!(case.state, CaseState::Answered | CaseState::Unresolvable) {
            closed += 1;
            if !human_after_each_system_stage(&case) || case.confirmed_label.is_none() || case.confirmed_team.is_none() {
                return Err(format!("run {i}: closed without human decisions"));
            }
        }
        if replay(case.seed(), &case.audit, &ctx).as_ref() != Ok(&case) {
            return Err(format!("run {i}: replay diverged"));
        }
    }
    Ok(closed)
}
