use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RuleConfig {
    pub maxretry: usize,
    pub findtime_s: f64,
    pub bantime_s: f64,
    /// 1.0 disables escalation.
    pub ban_escalation_factor: f64,
    pub portscan_distinct_ports: usize,
    pub portscan_window_s: f64,
    pub syn_rate_threshold_per_s: f64,
    pub syn_window_s: f64,
    pub cpu_trigger_pct: f64,
    pub cpu_consecutive_samples: usize,
}

impl Default for RuleConfig {
    fn default() -> Self {
        Self {
            maxretry: 5,
            findtime_s: 600.0,
            bantime_s: 3600.0,
            ban_escalation_factor: 2.0,
            portscan_distinct_ports: 20,
            portscan_window_s: 60.0,
            syn_rate_threshold_per_s: 100.0,
            syn_window_s: 10.0,
            cpu_trigger_pct: 90.0,
            cpu_consecutive_samples: 5,
        }
    }
}

impl RuleConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("findtime_s", self.findtime_s),
            ("bantime_s", self.bantime_s),
            ("portscan_window_s", self.portscan_window_s),
            ("syn_rate_threshold_per_s", self.syn_rate_threshold_per_s),
            ("syn_window_s", self.syn_window_s),
            ("cpu_trigger_pct", self.cpu_trigger_pct),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::BadConfig(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.ban_escalation_factor.is_finite() && self.ban_escalation_factor >= 1.0) {
            return Err(Error::BadConfig(format!(
                "ban_escalation_factor must be >= 1, got {}",
                self.ban_escalation_factor
            )));
        }
        for (name, v) in [
            ("maxretry", self.maxretry),
            ("portscan_distinct_ports", self.portscan_distinct_ports),
            ("cpu_consecutive_samples", self.cpu_consecutive_samples),
        ] {
            if v == 0 {
                return Err(Error::BadConfig(format!("{name} must be > 0")));
            }
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every field written out, defaults included.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
