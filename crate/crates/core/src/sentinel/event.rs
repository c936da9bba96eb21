use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow_model::FlowRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    AuthAttempt {
        source_ip: String,
        success: bool,
        service: String,
    },
    FlowSeen {
        flow: FlowRecord,
    },
    ResourceSample {
        cpu_pct: f64,
        mem_pct: f64,
        net_in_bps: f64,
        net_out_bps: f64,
        dropped_pkts: u64,
        malformed_pkts: u64,
    },
}

/// One line of an event stream. Timestamps are event time in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecurityEvent {
    pub timestamp: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl SecurityEvent {
    pub fn auth(timestamp: f64, source_ip: impl Into<String>, success: bool) -> Self {
        Self {
            timestamp,
            kind: EventKind::AuthAttempt {
                source_ip: source_ip.into(),
                success,
                service: "ssh".into(),
            },
        }
    }

    pub fn flow(timestamp: f64, flow: FlowRecord) -> Self {
        Self {
            timestamp,
            kind: EventKind::FlowSeen { flow },
        }
    }

    pub fn resource(timestamp: f64, cpu_pct: f64, mem_pct: f64) -> Self {
        Self {
            timestamp,
            kind: EventKind::ResourceSample {
                cpu_pct,
                mem_pct,
                net_in_bps: 0.0,
                net_out_bps: 0.0,
                dropped_pkts: 0,
                malformed_pkts: 0,
            },
        }
    }

    /// Source address for events that have one.
    pub fn source_ip(&self) -> Option<&str> {
        match &self.kind {
            EventKind::AuthAttempt { source_ip, .. } => Some(source_ip),
            EventKind::FlowSeen { flow } => Some(&flow.src_ip),
            EventKind::ResourceSample { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.timestamp.is_finite() {
            return Err(Error::BadEvent("non-finite timestamp".into()));
        }
        match &self.kind {
            EventKind::ResourceSample { cpu_pct, mem_pct, .. } => {
                for (name, v) in [("cpu_pct", cpu_pct), ("mem_pct", mem_pct)] {
                    if !(0.0..=100.0).contains(v) {
                        return Err(Error::BadEvent(format!("{name} = {v} is outside [0, 100]")));
                    }
                }
                Ok(())
            }
            EventKind::FlowSeen { flow } => flow.validate(),
            EventKind::AuthAttempt { .. } => Ok(()),
        }
    }
}

/// Parses JSON Lines; blank lines are skipped. Errors carry 1-based line numbers.
pub fn read_events<R: BufRead>(reader: R) -> Result<Vec<SecurityEvent>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let at = |e: Error| Error::AtLine {
            line: i + 1,
            source: Box::new(e),
        };
        let ev: SecurityEvent = serde_json::from_str(&line).map_err(|e| at(e.into()))?;
        ev.validate().map_err(at)?;
        out.push(ev);
    }
    Ok(out)
}

pub fn write_jsonl<W: Write, S: Serialize>(mut writer: W, items: &[S]) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut writer, item)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}
