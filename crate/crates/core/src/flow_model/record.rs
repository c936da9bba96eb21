use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Canonical per-flow feature schema, in column order.
pub const FEATURE_NAMES: [&str; 24] = [
    "duration_s",
    "fwd_pkts",
    "bwd_pkts",
    "fwd_bytes",
    "bwd_bytes",
    "pkt_len_min",
    "pkt_len_max",
    "pkt_len_mean",
    "pkt_len_std",
    "fwd_iat_mean",
    "fwd_iat_std",
    "bwd_iat_mean",
    "bwd_iat_std",
    "syn_count",
    "ack_count",
    "fin_count",
    "rst_count",
    "psh_count",
    "urg_count",
    "down_up_ratio",
    "active_mean",
    "idle_mean",
    "header_len_fwd",
    "header_len_bwd",
];

pub const N_FEATURES: usize = FEATURE_NAMES.len();
pub const SCHEMA_VERSION: u32 = 1;

/// Column indices into [`FEATURE_NAMES`].
pub mod feature {
    pub const DURATION_S: usize = 0;
    pub const FWD_PKTS: usize = 1;
    pub const BWD_PKTS: usize = 2;
    pub const FWD_BYTES: usize = 3;
    pub const BWD_BYTES: usize = 4;
    pub const PKT_LEN_MIN: usize = 5;
    pub const PKT_LEN_MAX: usize = 6;
    pub const PKT_LEN_MEAN: usize = 7;
    pub const PKT_LEN_STD: usize = 8;
    pub const FWD_IAT_MEAN: usize = 9;
    pub const FWD_IAT_STD: usize = 10;
    pub const BWD_IAT_MEAN: usize = 11;
    pub const BWD_IAT_STD: usize = 12;
    pub const SYN_COUNT: usize = 13;
    pub const ACK_COUNT: usize = 14;
    pub const FIN_COUNT: usize = 15;
    pub const RST_COUNT: usize = 16;
    pub const PSH_COUNT: usize = 17;
    pub const URG_COUNT: usize = 18;
    pub const DOWN_UP_RATIO: usize = 19;
    pub const ACTIVE_MEAN: usize = 20;
    pub const IDLE_MEAN: usize = 21;
    pub const HEADER_LEN_FWD: usize = 22;
    pub const HEADER_LEN_BWD: usize = 23;
}

pub fn canonical_schema() -> Vec<String> {
    FEATURE_NAMES.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Protocol {
    Tcp,
    Udp,
    Icmp,
}

/// One pre-aggregated bidirectional flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub flow_id: String,
    pub src_ip: String,
    pub dst_ip: String,
    pub src_port: u16,
    pub dst_port: u16,
    pub protocol: Protocol,
    pub timestamp: f64,
    pub features: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_label: Option<String>,
}

impl FlowRecord {
    pub fn feature(&self, index: usize) -> f64 {
        self.features[index]
    }

    /// Checks the structural invariants of the canonical schema.
    pub fn validate(&self) -> Result<()> {
        use feature::*;
        if self.features.len() != N_FEATURES {
            return Err(Error::DimensionMismatch {
                expected: N_FEATURES,
                got: self.features.len(),
            });
        }
        if self.features.iter().any(|v| !v.is_finite()) {
            return Err(Error::SchemaMismatch(format!("flow {}: non-finite feature", self.flow_id)));
        }
        let counts = [
            FWD_PKTS, BWD_PKTS, FWD_BYTES, BWD_BYTES, SYN_COUNT, ACK_COUNT, FIN_COUNT, RST_COUNT,
            PSH_COUNT, URG_COUNT, DURATION_S,
        ];
        if let Some(&i) = counts.iter().find(|&&i| self.features[i] < 0.0) {
            return Err(Error::SchemaMismatch(format!(
                "flow {}: {} is negative",
                self.flow_id, FEATURE_NAMES[i]
            )));
        }
        let f = &self.features;
        if f[FWD_PKTS] + f[BWD_PKTS] > 0.0
            && !(f[PKT_LEN_MIN] <= f[PKT_LEN_MEAN] && f[PKT_LEN_MEAN] <= f[PKT_LEN_MAX])
        {
            return Err(Error::SchemaMismatch(format!(
                "flow {}: packet length min/mean/max out of order",
                self.flow_id
            )));
        }
        Ok(())
    }
}
