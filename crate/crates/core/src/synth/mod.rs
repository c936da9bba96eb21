//! Deterministic synthetic flows and event streams for the attack scenarios
//! (port scan, SSH brute force, SYN flood) plus benign traffic.

mod events;
mod table;

pub use events::gen_events;
pub use table::{centroid, profile, Profile};

use std::collections::BTreeMap;

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow_model::{canonical_schema, feature, AttackGroup, LabeledDataset, FEATURE_NAMES, N_FEATURES};
use crate::rng::seeded;

pub const GENERATOR_VERSION: &str = "flowguard-synth/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Benign,
    PortScan,
    SshBruteForce,
    SynFlood,
    MixedDataset,
}

/// Knobs for event-stream generation. Times are seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EventParams {
    pub start_time: f64,
    pub attacker_ip: String,
    pub target_ip: String,
    pub brute_force_attempts: usize,
    pub brute_force_duration_s: f64,
    pub scan_ports: usize,
    pub scan_duration_s: f64,
    pub flood_flows: usize,
    pub flood_duration_s: f64,
    pub benign_duration_s: f64,
    pub benign_users: usize,
}

impl Default for EventParams {
    fn default() -> Self {
        Self {
            start_time: 0.0,
            attacker_ip: "203.0.113.7".into(),
            target_ip: "10.0.0.10".into(),
            brute_force_attempts: 8,
            brute_force_duration_s: 60.0,
            scan_ports: 100,
            scan_duration_s: 30.0,
            flood_flows: 200,
            flood_duration_s: 20.0,
            benign_duration_s: 300.0,
            benign_users: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    #[serde(default)]
    pub n_per_class: BTreeMap<AttackGroup, usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_noise")]
    pub noise_level: f64,
    #[serde(default)]
    pub events: EventParams,
}

fn default_noise() -> f64 {
    0.2
}

impl ScenarioSpec {
    pub fn mixed(n_per_class: usize, noise_level: f64, seed: u64) -> Self {
        Self {
            scenario: Scenario::MixedDataset,
            n_per_class: AttackGroup::ALL.iter().map(|&g| (g, n_per_class)).collect(),
            seed,
            noise_level,
            events: EventParams::default(),
        }
    }

    pub fn events_only(scenario: Scenario, seed: u64) -> Self {
        Self {
            scenario,
            n_per_class: BTreeMap::new(),
            seed,
            noise_level: default_noise(),
            events: EventParams::default(),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(s).map_err(|e| Error::BadSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.noise_level) {
            return Err(Error::BadSpec(format!("noise_level {} is outside [0, 1]", self.noise_level)));
        }
        let e = &self.events;
        for (name, v) in [
            ("start_time", e.start_time),
            ("brute_force_duration_s", e.brute_force_duration_s),
            ("scan_duration_s", e.scan_duration_s),
            ("flood_duration_s", e.flood_duration_s),
            ("benign_duration_s", e.benign_duration_s),
        ] {
            if !v.is_finite() || v < 0.0 || (v == 0.0 && name != "start_time") {
                return Err(Error::BadSpec(format!("{name} must be positive, got {v}")));
            }
        }
        if e.benign_users == 0 {
            return Err(Error::BadSpec("benign_users must be positive".into()));
        }
        Ok(())
    }

    pub fn total_rows(&self) -> usize {
        self.n_per_class.values().sum()
    }
}

const ROUNDED: [usize; 12] = [
    feature::FWD_PKTS,
    feature::BWD_PKTS,
    feature::FWD_BYTES,
    feature::BWD_BYTES,
    feature::SYN_COUNT,
    feature::ACK_COUNT,
    feature::FIN_COUNT,
    feature::RST_COUNT,
    feature::PSH_COUNT,
    feature::URG_COUNT,
    feature::HEADER_LEN_FWD,
    feature::HEADER_LEN_BWD,
];

/// One noisy draw from a class profile.
pub fn sample_features<R: Rng>(group: AttackGroup, noise_level: f64, rng: &mut R) -> Vec<f64> {
    let mut f: Vec<f64> = table::profile(group)
        .iter()
        .map(|&(c, s)| {
            let z: f64 = rng.sample(StandardNormal);
            (c + noise_level * s * z).max(0.0)
        })
        .collect();
    for &j in &ROUNDED {
        f[j] = f[j].round();
    }
    let mut lens = [f[feature::PKT_LEN_MIN], f[feature::PKT_LEN_MEAN], f[feature::PKT_LEN_MAX]];
    lens.sort_by(f64::total_cmp);
    [f[feature::PKT_LEN_MIN], f[feature::PKT_LEN_MEAN], f[feature::PKT_LEN_MAX]] = lens;
    f
}

/// Labeled flows, classes in code order, `n_per_class` rows each.
pub fn gen_flows(spec: &ScenarioSpec) -> Result<LabeledDataset<f64>> {
    spec.validate()?;
    let n = spec.total_rows();
    if n == 0 {
        return Err(Error::BadSpec("n_per_class has no nonzero count".into()));
    }
    let mut data = Vec::with_capacity(n * N_FEATURES);
    let mut labels = Vec::with_capacity(n);
    for group in AttackGroup::ALL {
        let count = spec.n_per_class.get(&group).copied().unwrap_or(0);
        let mut rng = seeded(spec.seed, group.code() as u64);
        for _ in 0..count {
            data.extend(sample_features(group, spec.noise_level, &mut rng));
            labels.push(group);
        }
    }
    let rows = Array2::from_shape_vec((n, N_FEATURES), data).expect("n x d");
    LabeledDataset::new(canonical_schema(), rows, labels)
}

/// Markdown table of every class profile.
pub fn parameter_table_markdown() -> String {
    let mut out = String::from("| feature |");
    for g in AttackGroup::ALL {
        out.push_str(&format!(" {} |", g.name()));
    }
    out.push_str("\n|---|");
    out.push_str(&"---|".repeat(AttackGroup::ALL.len()));
    out.push('\n');
    for (j, name) in FEATURE_NAMES.iter().enumerate() {
        out.push_str(&format!("| {name} |"));
        for g in AttackGroup::ALL {
            let (c, s) = table::profile(g)[j];
            out.push_str(&format!(" {c} ± {s} |"));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationManifest {
    pub generator_version: String,
    pub spec: ScenarioSpec,
    pub seed: u64,
    pub rows: usize,
    pub events: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn only_requested_classes() {
        let mut spec = ScenarioSpec::mixed(0, 0.2, 1);
        spec.n_per_class.insert(AttackGroup::Dos, 100);
        let ds = gen_flows(&spec).unwrap();
        assert_eq!(ds.len(), 100);
        assert!(ds.labels.iter().all(|&g| g == AttackGroup::Dos));
    }

    #[test]
    fn deterministic() {
        let spec = ScenarioSpec::mixed(50, 0.3, 9);
        assert_eq!(gen_flows(&spec).unwrap(), gen_flows(&spec).unwrap());
        let other = ScenarioSpec::mixed(50, 0.3, 10);
        assert_ne!(gen_flows(&spec).unwrap().rows, gen_flows(&other).unwrap().rows);
    }

    #[test]
    fn zero_noise_reproduces_centroids() {
        let ds = gen_flows(&ScenarioSpec::mixed(3, 0.0, 4)).unwrap();
        for (i, &g) in ds.labels.iter().enumerate() {
            assert_eq!(ds.row(i), centroid(g).as_slice());
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(matches!(gen_flows(&ScenarioSpec::mixed(0, 0.2, 1)), Err(Error::BadSpec(_))));
        assert!(matches!(gen_flows(&ScenarioSpec::mixed(5, 1.5, 1)), Err(Error::BadSpec(_))));
        assert!(ScenarioSpec::from_json("{\"scenario\":\"nope\"}").is_err());
    }

    #[test]
    fn centroids_are_valid_flows() {
        for g in AttackGroup::ALL {
            let c = centroid(g);
            assert!(c[feature::PKT_LEN_MIN] <= c[feature::PKT_LEN_MEAN]);
            assert!(c[feature::PKT_LEN_MEAN] <= c[feature::PKT_LEN_MAX]);
            for &j in &ROUNDED {
                assert_eq!(c[j], c[j].round(), "{g} {}", FEATURE_NAMES[j]);
            }
        }
    }

    #[test]
    fn spec_json_defaults() {
        let spec = ScenarioSpec::from_json("{\"scenario\":\"ssh_brute_force\",\"seed\":3}").unwrap();
        assert_eq!(spec.noise_level, 0.2);
        assert_eq!(spec.events.brute_force_attempts, 8);
    }
}
