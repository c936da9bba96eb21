use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::RuleConfig;
use super::event::{EventKind, SecurityEvent};
use crate::error::{Error, Result};
use crate::flow_model::{feature, AttackGroup, FlowRecord};
use crate::models::Classifier;
use crate::scalar::argmax;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    BruteForce,
    PortScan,
    SynFlood,
    CpuHigh,
    MlVerdict,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::BruteForce => "brute_force",
            Rule::PortScan => "port_scan",
            Rule::SynFlood => "syn_flood",
            Rule::CpuHigh => "cpu_high",
            Rule::MlVerdict => "ml_verdict",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Info,
    Warning,
    Critical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlertRecord {
    pub alert_id: String,
    pub rule: Rule,
    pub source_ip: Option<String>,
    pub severity: Severity,
    pub evidence: BTreeMap<String, Value>,
    pub raised_at: f64,
    /// 0-based index of the event that completed the condition.
    pub event_index: Option<usize>,
    pub detection_latency_events: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanEntry {
    pub ip: String,
    pub banned_at: f64,
    pub expires_at: f64,
    pub reason: String,
    pub ban_count: u32,
    pub event_index: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IngestOutcome {
    pub event_index: usize,
    /// The source was banned when the event arrived; it fed no rule.
    pub suppressed: bool,
    pub alerts: Vec<AlertRecord>,
    pub bans: Vec<BanEntry>,
}

/// Single-writer detection state: sliding windows, episodes and active bans.
#[derive(Debug, Clone)]
pub struct SentinelState {
    config: RuleConfig,
    last_ts: Option<f64>,
    n_events: usize,
    n_suppressed: usize,
    failures: BTreeMap<String, VecDeque<f64>>,
    bans: BTreeMap<String, BanEntry>,
    ban_counts: BTreeMap<String, u32>,
    ports: BTreeMap<String, VecDeque<(f64, u16)>>,
    scanning: BTreeSet<String>,
    syn: VecDeque<(f64, f64, String)>,
    syn_active: bool,
    cpu_run: usize,
    cpu_active: bool,
    last_cpu: Option<f64>,
    n_alerts: usize,
}

impl SentinelState {
    pub fn new(config: RuleConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            last_ts: None,
            n_events: 0,
            n_suppressed: 0,
            failures: BTreeMap::new(),
            bans: BTreeMap::new(),
            ban_counts: BTreeMap::new(),
            ports: BTreeMap::new(),
            scanning: BTreeSet::new(),
            syn: VecDeque::new(),
            syn_active: false,
            cpu_run: 0,
            cpu_active: false,
            last_cpu: None,
            n_alerts: 0,
        })
    }

    pub fn config(&self) -> &RuleConfig {
        &self.config
    }

    pub fn events_ingested(&self) -> usize {
        self.n_events
    }

    pub fn events_suppressed(&self) -> usize {
        self.n_suppressed
    }

    pub fn last_timestamp(&self) -> Option<f64> {
        self.last_ts
    }

    pub fn active_bans(&self) -> impl Iterator<Item = &BanEntry> {
        self.bans.values()
    }

    pub fn is_banned(&self, ip: &str) -> bool {
        self.bans.contains_key(ip)
    }

    /// Removes bans with `expires_at <= now`.
    pub fn expire_bans(&mut self, now: f64) -> Vec<BanEntry> {
        let expired: Vec<String> = self
            .bans
            .iter()
            .filter(|(_, b)| b.expires_at <= now)
            .map(|(ip, _)| ip.clone())
            .collect();
        expired.iter().filter_map(|ip| self.bans.remove(ip)).collect()
    }

    pub fn ingest(&mut self, event: &SecurityEvent) -> Result<IngestOutcome> {
        let t = event.timestamp;
        if !t.is_finite() {
            return Err(Error::BadEvent("non-finite timestamp".into()));
        }
        if let Some(last) = self.last_ts {
            if t < last {
                return Err(Error::TimeRegression { last, got: t });
            }
        }
        self.last_ts = Some(t);
        let index = self.n_events;
        self.n_events += 1;
        self.expire_bans(t);

        let mut out = IngestOutcome {
            event_index: index,
            ..Default::default()
        };
        if event.source_ip().is_some_and(|ip| self.bans.contains_key(ip)) {
            self.n_suppressed += 1;
            out.suppressed = true;
            return Ok(out);
        }
        match &event.kind {
            EventKind::AuthAttempt {
                source_ip, success, ..
            } => {
                if !success {
                    self.auth_failure(source_ip, t, index, &mut out);
                }
            }
            EventKind::FlowSeen { flow } => {
                self.flow_seen(flow, t, index, &mut out);
            }
            EventKind::ResourceSample { cpu_pct, .. } => {
                self.last_cpu = Some(*cpu_pct);
                if *cpu_pct > self.config.cpu_trigger_pct {
                    self.cpu_run += 1;
                } else {
                    self.cpu_run = 0;
                    self.cpu_active = false;
                }
                out.alerts.extend(self.cpu_check(t, Some(index)));
            }
        }
        Ok(out)
    }

    /// Re-evaluates the CPU and SYN-rate triggers at the last ingested time.
    /// Each fires once per episode, so conditions already alerted on stay quiet.
    pub fn check_resource_triggers(&mut self) -> Vec<AlertRecord> {
        let Some(t) = self.last_ts else {
            return Vec::new();
        };
        if self.last_cpu.is_none() {
            return Vec::new();
        }
        let mut alerts: Vec<AlertRecord> = self.cpu_check(t, None).into_iter().collect();
        alerts.extend(self.syn_check(t, None));
        alerts
    }

    /// Classifies `flow` and raises an alert for a confident non-benign verdict.
    pub fn attach_ml_verdict<C: Classifier<f64> + ?Sized>(
        &mut self,
        flow: &FlowRecord,
        model: &C,
        threshold: f64,
    ) -> Result<Option<AlertRecord>> {
        let Some((group, p)) = ml_verdict(flow, model, threshold)? else {
            return Ok(None);
        };
        let severity = match group {
            AttackGroup::Rce | AttackGroup::Hijacking | AttackGroup::Dos => Severity::Critical,
            _ => Severity::Warning,
        };
        let raised_at = self.last_ts.map_or(flow.timestamp, |t| t.max(flow.timestamp));
        Ok(Some(self.alert(
            Rule::MlVerdict,
            Some(flow.src_ip.clone()),
            severity,
            [
                ("flow_id", json!(flow.flow_id)),
                ("predicted", json!(group.name())),
                ("probability", json!(p)),
                ("threshold", json!(threshold)),
            ],
            raised_at,
            None,
        )))
    }

    fn auth_failure(&mut self, ip: &str, t: f64, index: usize, out: &mut IngestOutcome) {
        let window = self.config.findtime_s;
        let q = self.failures.entry(ip.to_string()).or_default();
        q.push_back(t);
        while q.front().is_some_and(|&s| s <= t - window) {
            q.pop_front();
        }
        if q.len() < self.config.maxretry {
            return;
        }
        let failures = q.len();
        self.failures.remove(ip);
        let count = self.ban_counts.entry(ip.to_string()).or_insert(0);
        *count += 1;
        let count = *count;
        let duration = self.config.bantime_s * self.config.ban_escalation_factor.powi(count as i32 - 1);
        let ban = BanEntry {
            ip: ip.to_string(),
            banned_at: t,
            expires_at: t + duration,
            reason: format!("{failures} failed logins within {window} s"),
            ban_count: count,
            event_index: index,
        };
        self.bans.insert(ip.to_string(), ban.clone());
        out.bans.push(ban);
        let alert = self.alert(
            Rule::BruteForce,
            Some(ip.to_string()),
            Severity::Warning,
            [
                ("failures", json!(failures)),
                ("findtime_s", json!(window)),
                ("ban_count", json!(count)),
                ("bantime_s", json!(duration)),
            ],
            t,
            Some(index),
        );
        out.alerts.push(alert);
    }

    fn flow_seen(&mut self, flow: &FlowRecord, t: f64, index: usize, out: &mut IngestOutcome) {
        let window = self.config.portscan_window_s;
        let q = self.ports.entry(flow.src_ip.clone()).or_default();
        q.push_back((t, flow.dst_port));
        while q.front().is_some_and(|&(s, _)| s <= t - window) {
            q.pop_front();
        }
        let distinct = q.iter().map(|&(_, p)| p).collect::<BTreeSet<_>>().len();
        if distinct < self.config.portscan_distinct_ports {
            self.scanning.remove(&flow.src_ip);
        } else if self.scanning.insert(flow.src_ip.clone()) {
            let alert = self.alert(
                Rule::PortScan,
                Some(flow.src_ip.clone()),
                Severity::Warning,
                [("distinct_ports", json!(distinct)), ("window_s", json!(window))],
                t,
                Some(index),
            );
            out.alerts.push(alert);
        }

        let syn = flow.features.get(feature::SYN_COUNT).copied().unwrap_or(0.0);
        self.syn.push_back((t, syn, flow.src_ip.clone()));
        out.alerts.extend(self.syn_check(t, Some(index)));
    }

    fn syn_check(&mut self, t: f64, index: Option<usize>) -> Option<AlertRecord> {
        let window = self.config.syn_window_s;
        while self.syn.front().is_some_and(|(s, _, _)| *s <= t - window) {
            self.syn.pop_front();
        }
        let total: f64 = self.syn.iter().map(|(_, s, _)| s).sum();
        let rate = total / window;
        if rate <= self.config.syn_rate_threshold_per_s {
            self.syn_active = false;
            return None;
        }
        if self.syn_active {
            return None;
        }
        self.syn_active = true;
        let mut per_source: BTreeMap<&str, f64> = BTreeMap::new();
        for (_, s, ip) in &self.syn {
            *per_source.entry(ip).or_default() += s;
        }
        // Largest contributor; ties to the lexicographically smallest address.
        let top = per_source
            .iter()
            .fold(None::<(&str, f64)>, |best, (&ip, &s)| match best {
                Some((_, b)) if b >= s => best,
                _ => Some((ip, s)),
            })
            .map(|(ip, _)| ip.to_string());
        Some(self.alert(
            Rule::SynFlood,
            top,
            Severity::Critical,
            [
                ("syn_rate_per_s", json!(rate)),
                ("window_s", json!(window)),
                ("sources", json!(per_source.len())),
            ],
            t,
            index,
        ))
    }

    fn cpu_check(&mut self, t: f64, index: Option<usize>) -> Option<AlertRecord> {
        if self.cpu_active || self.cpu_run < self.config.cpu_consecutive_samples {
            return None;
        }
        self.cpu_active = true;
        Some(self.alert(
            Rule::CpuHigh,
            None,
            Severity::Warning,
            [
                ("cpu_pct", json!(self.last_cpu)),
                ("consecutive_samples", json!(self.cpu_run)),
                ("trigger_pct", json!(self.config.cpu_trigger_pct)),
            ],
            t,
            index,
        ))
    }

    fn alert<const N: usize>(
        &mut self,
        rule: Rule,
        source_ip: Option<String>,
        severity: Severity,
        evidence: [(&str, Value); N],
        raised_at: f64,
        event_index: Option<usize>,
    ) -> AlertRecord {
        self.n_alerts += 1;
        AlertRecord {
            alert_id: format!("{:06}-{}", self.n_alerts, rule.name()),
            rule,
            source_ip,
            severity,
            evidence: evidence.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            raised_at,
            event_index,
            detection_latency_events: 0,
        }
    }
}

/// Predicted non-benign class and its probability, when it reaches `threshold`.
pub fn ml_verdict<C: Classifier<f64> + ?Sized>(
    flow: &FlowRecord,
    model: &C,
    threshold: f64,
) -> Result<Option<(AttackGroup, f64)>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::BadConfig(format!("threshold must be in (0, 1), got {threshold}")));
    }
    if flow.features.len() != model.n_features() {
        return Err(Error::DimensionMismatch {
            expected: model.n_features(),
            got: flow.features.len(),
        });
    }
    let probs = model.predict_proba(&flow.features)?;
    let class = argmax(&probs);
    let group = AttackGroup::from_code(class)?;
    if group == AttackGroup::Benign || probs[class] < threshold {
        return Ok(None);
    }
    Ok(Some((group, probs[class])))
}
