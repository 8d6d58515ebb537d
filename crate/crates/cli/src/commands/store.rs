use std::net::{IpAddr, SocketAddr};

use anyhow::{Context, Result};
use needdesk_core::assignment;
use needdesk_core::sources;
use needdesk_core::workflow::reports;
use needdesk_core::workflow::store::CaseStore;
use needdesk_core::workflow::TriageCase;
use needdesk_core::Real;
use needdesk_service::{AppState, Reference as ServiceReference};

use super::pipeline::{automation, load_corpus};
use crate::args::{ExportCommand, ReportCommand, ServeArgs, StoreDir};
use crate::{Env, UsageError};

fn cases(env: &Env, store: &StoreDir) -> Result<Vec<TriageCase>> {
    if !store.dir.is_dir() {
        anyhow::bail!("case store {} does not exist", store.dir.display());
    }
    let ctx = env.reference.context(env.settings.workflow);
    CaseStore::read_only(&store.dir, &ctx).with_context(|| format!("reading case store {}", store.dir.display()))
}

pub fn report(env: &Env, command: ReportCommand) -> Result<()> {
    match command {
        ReportCommand::Addressability(store) => {
            let r = reports::addressability_report::<Real>(&cases(env, &store)?);
            env.out.write_report("report_addressability", &r, &r.render())
        }
        ReportCommand::Stats(store) => {
            let r = reports::stats_report(&cases(env, &store)?);
            env.out.write_report("report_stats", &r, &r.render())
        }
        ReportCommand::Agreement(store) => {
            let row = reports::filter_agreement(&cases(env, &store)?)?;
            let r = needdesk_core::agreement::AgreementReport { rows: vec![row] };
            env.out.write_report("report_agreement", &r, &r.render())
        }
    }
}

pub fn export(env: &Env, command: ExportCommand) -> Result<()> {
    match command {
        ExportCommand::Evidence(store) => {
            let r = &env.reference;
            let evidence = reports::export_evidence(&cases(env, &store)?, &r.teams, &r.taxonomy)?;
            let mut buf = Vec::new();
            assignment::write_evidence(&mut buf, &evidence)?;
            let path = env.out.write("evidence.csv", buf)?;
            println!("{}: {} records", path.display(), evidence.len());
            Ok(())
        }
    }
}

pub fn serve(env: &Env, a: ServeArgs) -> Result<()> {
    let host: IpAddr = a
        .host
        .parse()
        .map_err(|_| UsageError(format!("`{}` is not an IP address", a.host)))?;
    let addr = SocketAddr::new(host, a.port);
    let r = &env.reference;
    let reference = ServiceReference {
        taxonomy: r.taxonomy.clone(),
        teams: r.teams.clone(),
        tie_order: r.tie_order.clone(),
        policy: env.settings.workflow,
    };
    let store = CaseStore::open(&a.store.dir, &reference.context())
        .with_context(|| format!("opening case store {}", a.store.dir.display()))?;
    let responses = match &a.corpus {
        Some(p) => sources::past_responses_from_corpus(&load_corpus(p)?),
        None => Vec::new(),
    };
    let state = AppState::new(reference, store, automation(env, responses));
    let _ = tracing_subscriber::fmt().try_init();
    let runtime = tokio::runtime::Runtime::new().context("starting the async runtime")?;
    runtime.block_on(async move {
        let listener = needdesk_service::bind(addr).await?;
        eprintln!("serving on http://{addr}");
        needdesk_service::serve(listener, state).await
    })?;
    Ok(())
}
