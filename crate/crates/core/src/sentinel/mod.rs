//! Event-time response layer: brute-force bans, port-scan and SYN-flood
//! signatures, CPU triggers, and ML verdict alerts.

mod config;
mod event;
mod state;

pub use config::RuleConfig;
pub use event::{read_events, write_jsonl, EventKind, SecurityEvent};
pub use state::{ml_verdict, AlertRecord, BanEntry, IngestOutcome, Rule, SentinelState, Severity};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::Classifier;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReplaySummary {
    pub events: usize,
    pub suppressed: usize,
    pub alerts: usize,
    pub bans: usize,
    pub alerts_by_rule: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReplayOutput {
    pub alerts: Vec<AlertRecord>,
    pub bans: Vec<BanEntry>,
    pub summary: ReplaySummary,
}

/// Optional model consulted for every unsuppressed flow.
pub struct MlHook<'a> {
    pub model: &'a dyn Classifier<f64>,
    pub threshold: f64,
}

/// Feeds a whole stream through a fresh state. Errors name the 1-based event number.
pub fn replay(events: &[SecurityEvent], config: &RuleConfig, ml: Option<MlHook<'_>>) -> Result<ReplayOutput> {
    let mut state = SentinelState::new(*config)?;
    let mut out = ReplayOutput::default();
    for (i, ev) in events.iter().enumerate() {
        let at = |e: Error| Error::AtLine {
            line: i + 1,
            source: Box::new(e),
        };
        let outcome = state.ingest(ev).map_err(at)?;
        out.alerts.extend(outcome.alerts);
        out.bans.extend(outcome.bans);
        if let (Some(hook), EventKind::FlowSeen { flow }, false) = (&ml, &ev.kind, outcome.suppressed) {
            if let Some(alert) = state.attach_ml_verdict(flow, hook.model, hook.threshold).map_err(at)? {
                out.alerts.push(alert);
            }
        }
    }
    out.alerts.extend(state.check_resource_triggers());
    let mut by_rule = BTreeMap::new();
    for a in &out.alerts {
        *by_rule.entry(a.rule.name().to_string()).or_insert(0) += 1;
    }
    out.summary = ReplaySummary {
        events: state.events_ingested(),
        suppressed: state.events_suppressed(),
        alerts: out.alerts.len(),
        bans: out.bans.len(),
        alerts_by_rule: by_rule,
    };
    Ok(out)
}
