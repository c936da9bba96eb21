use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Seven-way attack taxonomy. Codes are stable and serialized by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AttackGroup {
    Benign = 0,
    Dos = 1,
    Bruteforce = 2,
    Injection = 3,
    Hijacking = 4,
    Rce = 5,
    Other = 6,
}

pub const N_CLASSES: usize = 7;

impl AttackGroup {
    pub const ALL: [AttackGroup; N_CLASSES] = [
        AttackGroup::Benign,
        AttackGroup::Dos,
        AttackGroup::Bruteforce,
        AttackGroup::Injection,
        AttackGroup::Hijacking,
        AttackGroup::Rce,
        AttackGroup::Other,
    ];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Result<Self> {
        Self::ALL.get(code).copied().ok_or(Error::BadCode(code))
    }

    pub fn name(self) -> &'static str {
        match self {
            AttackGroup::Benign => "BENIGN",
            AttackGroup::Dos => "DOS",
            AttackGroup::Bruteforce => "BRUTEFORCE",
            AttackGroup::Injection => "INJECTION",
            AttackGroup::Hijacking => "HIJACKING",
            AttackGroup::Rce => "RCE",
            AttackGroup::Other => "OTHER",
        }
    }
}

impl fmt::Display for AttackGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttackGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        map_raw_label(s)
    }
}

/// Raw dataset labels and the group each one belongs to.
pub const RAW_LABELS: &[(&str, AttackGroup)] = &[
    ("BENIGN", AttackGroup::Benign),
    ("DoS Hulk", AttackGroup::Dos),
    ("DoS Slowhttptest", AttackGroup::Dos),
    ("DoS GoldenEye", AttackGroup::Dos),
    ("DoS Slowloris", AttackGroup::Dos),
    ("DDoS", AttackGroup::Dos),
    ("Bruteforce-Web", AttackGroup::Bruteforce),
    ("Bruteforce-XSS", AttackGroup::Bruteforce),
    ("FTP-Patator", AttackGroup::Bruteforce),
    ("SSH-Patator", AttackGroup::Bruteforce),
    ("Web Brute Force", AttackGroup::Bruteforce),
    ("SQL Injection", AttackGroup::Injection),
    ("LDAP Injection", AttackGroup::Injection),
    ("SIP Injection", AttackGroup::Injection),
    ("Web SQL Injection", AttackGroup::Injection),
    ("MITM", AttackGroup::Hijacking),
    ("Hijacking", AttackGroup::Hijacking),
    ("RFI", AttackGroup::Rce),
    ("Exploit", AttackGroup::Rce),
    ("Cmd Injection", AttackGroup::Rce),
    ("Upload", AttackGroup::Rce),
    ("Backdoor", AttackGroup::Rce),
    ("Infiltration", AttackGroup::Other),
    ("Bot", AttackGroup::Other),
    ("PortScan", AttackGroup::Other),
    ("Web XSS", AttackGroup::Other),
];

/// Spellings seen in the wild that are not in [`RAW_LABELS`], plus the group names themselves.
const ALIASES: &[(&str, AttackGroup)] = &[
    ("hulk", AttackGroup::Dos),
    ("slowhttptest", AttackGroup::Dos),
    ("goldeneye", AttackGroup::Dos),
    ("slowloris", AttackGroup::Dos),
    ("ftp/ssh patator", AttackGroup::Bruteforce),
    ("sql/ldap/sip injection", AttackGroup::Injection),
    ("port scan", AttackGroup::Other),
    ("dos", AttackGroup::Dos),
    ("bruteforce", AttackGroup::Bruteforce),
    ("injection", AttackGroup::Injection),
    ("rce", AttackGroup::Rce),
    ("other", AttackGroup::Other),
];

/// Lowercase, trim, and fold runs of spaces, hyphens and underscores into one space.
pub fn normalize_label(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_space = false;
    for ch in raw.trim().chars() {
        if ch.is_whitespace() || ch == '-' || ch == '_' || ch == '\u{2013}' {
            pending_space = !out.is_empty();
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        out.extend(ch.to_lowercase());
    }
    out
}

/// Maps a raw dataset label onto the seven-group taxonomy.
pub fn map_raw_label(raw: &str) -> Result<AttackGroup> {
    let key = normalize_label(raw);
    if key.is_empty() {
        return Err(Error::UnknownLabel(raw.to_string()));
    }
    let hit = RAW_LABELS
        .iter()
        .chain(ALIASES)
        .find(|(name, _)| normalize_label(name) == key)
        .map(|(_, g)| *g);
    if let Some(g) = hit {
        return Ok(g);
    }
    if key.starts_with("ddos") {
        return Ok(AttackGroup::Dos);
    }
    Err(Error::UnknownLabel(raw.to_string()))
}

/// What to do with labels that match no rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelPolicy {
    #[default]
    Strict,
    FallbackOther,
}

impl LabelPolicy {
    /// Returns the group and whether the fallback was used.
    pub fn apply(self, raw: &str) -> Result<(AttackGroup, bool)> {
        match (map_raw_label(raw), self) {
            (Ok(g), _) => Ok((g, false)),
            (Err(Error::UnknownLabel(_)), LabelPolicy::FallbackOther) => {
                Ok((AttackGroup::Other, true))
            }
            (Err(e), _) => Err(e),
        }
    }
}
