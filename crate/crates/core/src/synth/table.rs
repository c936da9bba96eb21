//! Per-class (centroid, spread) for every canonical feature.
//!
//! A generated value is `centroid + noise_level * spread * z` with `z ~ N(0, 1)`,
//! clamped at zero; count-like columns are rounded. INJECTION, HIJACKING and RCE
//! are synthetic-but-distinct profiles, not physical measurements.

use crate::flow_model::{AttackGroup, N_FEATURES};

pub type Profile = [(f64, f64); N_FEATURES];

#[rustfmt::skip]
const BENIGN: Profile = [
    (12.0, 20.0), (20.0, 30.0), (22.0, 30.0), (4000.0, 8000.0), (15000.0, 30000.0),
    (60.0, 40.0), (1200.0, 500.0), (420.0, 150.0), (350.0, 250.0),
    (0.6, 1.0), (0.5, 1.0), (0.5, 1.0), (0.4, 1.0),
    (1.0, 2.0), (30.0, 50.0), (2.0, 2.0), (0.0, 2.0), (8.0, 15.0), (0.0, 1.0),
    (1.1, 1.0), (2.0, 5.0), (8.0, 20.0), (640.0, 1000.0), (700.0, 1000.0),
];

/// SYN flood: huge SYN bursts, no replies, tiny packets, RST/URG as malformed proxies.
#[rustfmt::skip]
const DOS: Profile = [
    (0.05, 5.0), (200.0, 150.0), (0.0, 20.0), (12000.0, 9000.0), (0.0, 5000.0),
    (60.0, 30.0), (60.0, 200.0), (60.0, 8.0), (0.0, 60.0),
    (0.0002, 0.5), (0.0001, 0.5), (0.0, 0.5), (0.0, 0.5),
    (200.0, 150.0), (0.0, 30.0), (0.0, 2.0), (5.0, 5.0), (0.0, 10.0), (3.0, 2.0),
    (0.0, 1.0), (0.05, 3.0), (0.0, 10.0), (4000.0, 3000.0), (0.0, 600.0),
];

/// SSH credential guessing: moderate sessions, small payloads.
#[rustfmt::skip]
const BRUTEFORCE: Profile = [
    (4.0, 10.0), (14.0, 20.0), (16.0, 20.0), (1800.0, 4000.0), (2600.0, 8000.0),
    (40.0, 30.0), (400.0, 400.0), (140.0, 40.0), (110.0, 150.0),
    (0.3, 0.8), (0.2, 0.8), (0.25, 0.8), (0.2, 0.8),
    (1.0, 2.0), (28.0, 40.0), (2.0, 2.0), (1.0, 2.0), (10.0, 12.0), (0.0, 1.0),
    (1.15, 1.0), (3.0, 5.0), (1.0, 15.0), (460.0, 800.0), (520.0, 800.0),
];

/// Web injection: short request/response exchanges with large request bodies.
#[rustfmt::skip]
const INJECTION: Profile = [
    (1.5, 10.0), (8.0, 20.0), (10.0, 20.0), (2600.0, 5000.0), (9000.0, 20000.0),
    (60.0, 30.0), (1460.0, 400.0), (700.0, 200.0), (480.0, 250.0),
    (0.15, 0.8), (0.1, 0.8), (0.12, 0.8), (0.1, 0.8),
    (1.0, 2.0), (16.0, 40.0), (2.0, 2.0), (0.0, 2.0), (6.0, 12.0), (0.0, 1.0),
    (1.25, 1.0), (1.2, 5.0), (0.5, 15.0), (270.0, 800.0), (330.0, 800.0),
];

/// Session hijacking: long mid-stream flows with no handshake.
#[rustfmt::skip]
const HIJACKING: Profile = [
    (90.0, 60.0), (300.0, 200.0), (280.0, 200.0), (60000.0, 50000.0), (52000.0, 50000.0),
    (54.0, 30.0), (1000.0, 400.0), (220.0, 50.0), (160.0, 150.0),
    (0.3, 0.8), (0.4, 0.8), (0.32, 0.8), (0.4, 0.8),
    (0.0, 2.0), (560.0, 400.0), (0.0, 2.0), (2.0, 2.0), (140.0, 100.0), (0.0, 1.0),
    (0.93, 1.0), (20.0, 20.0), (60.0, 50.0), (9600.0, 6000.0), (9000.0, 6000.0),
];

/// Remote code execution: small inbound exploit, heavy outbound payload.
#[rustfmt::skip]
const RCE: Profile = [
    (30.0, 40.0), (40.0, 40.0), (120.0, 100.0), (3000.0, 5000.0), (150000.0, 100000.0),
    (60.0, 30.0), (1460.0, 400.0), (1100.0, 200.0), (500.0, 250.0),
    (0.8, 0.8), (0.9, 0.8), (0.25, 0.8), (0.3, 0.8),
    (1.0, 2.0), (150.0, 150.0), (1.0, 2.0), (0.0, 2.0), (60.0, 50.0), (1.0, 1.0),
    (3.0, 1.5), (10.0, 15.0), (15.0, 30.0), (1300.0, 1500.0), (3800.0, 3000.0),
];

/// Port scan: one probe, one RST, very short.
#[rustfmt::skip]
const OTHER: Profile = [
    (0.02, 0.5), (1.0, 2.0), (1.0, 2.0), (44.0, 100.0), (40.0, 100.0),
    (40.0, 20.0), (44.0, 60.0), (42.0, 8.0), (2.0, 20.0),
    (0.0, 0.3), (0.0, 0.3), (0.0, 0.3), (0.0, 0.3),
    (1.0, 1.0), (0.0, 1.0), (0.0, 1.0), (1.0, 1.0), (0.0, 1.0), (0.0, 1.0),
    (1.0, 0.5), (0.02, 0.5), (0.0, 0.5), (24.0, 40.0), (20.0, 40.0),
];

pub fn profile(group: AttackGroup) -> &'static Profile {
    match group {
        AttackGroup::Benign => &BENIGN,
        AttackGroup::Dos => &DOS,
        AttackGroup::Bruteforce => &BRUTEFORCE,
        AttackGroup::Injection => &INJECTION,
        AttackGroup::Hijacking => &HIJACKING,
        AttackGroup::Rce => &RCE,
        AttackGroup::Other => &OTHER,
    }
}

/// Noise-free feature vector of a class.
pub fn centroid(group: AttackGroup) -> Vec<f64> {
    profile(group).iter().map(|&(c, _)| c).collect()
}
