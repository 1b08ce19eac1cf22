use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ir::Technology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SmellType {
    AdminByDefault,
    EmptyPassword,
    HardCodedSecret,
    MissingDefaultCase,
    NoIntegrityCheck,
    SuspiciousComment,
    InvalidIpBinding,
    HttpWithoutTls,
    WeakCrypto,
}

impl SmellType {
    pub const ALL: [SmellType; 9] = [
        SmellType::AdminByDefault,
        SmellType::EmptyPassword,
        SmellType::HardCodedSecret,
        SmellType::MissingDefaultCase,
        SmellType::NoIntegrityCheck,
        SmellType::SuspiciousComment,
        SmellType::InvalidIpBinding,
        SmellType::HttpWithoutTls,
        SmellType::WeakCrypto,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SmellType::AdminByDefault => "AdminByDefault",
            SmellType::EmptyPassword => "EmptyPassword",
            SmellType::HardCodedSecret => "HardCodedSecret",
            SmellType::MissingDefaultCase => "MissingDefaultCase",
            SmellType::NoIntegrityCheck => "NoIntegrityCheck",
            SmellType::SuspiciousComment => "SuspiciousComment",
            SmellType::InvalidIpBinding => "InvalidIpBinding",
            SmellType::HttpWithoutTls => "HttpWithoutTls",
            SmellType::WeakCrypto => "WeakCrypto",
        }
    }

    pub fn cwe(self) -> &'static [u32] {
        match self {
            SmellType::AdminByDefault => &[250],
            SmellType::EmptyPassword => &[258],
            SmellType::HardCodedSecret => &[259, 798],
            SmellType::MissingDefaultCase => &[478],
            SmellType::NoIntegrityCheck => &[353],
            SmellType::SuspiciousComment => &[546],
            SmellType::InvalidIpBinding => &[284],
            SmellType::HttpWithoutTls => &[319],
            SmellType::WeakCrypto => &[326, 327],
        }
    }

    /// `CWE-259, CWE-798` style label.
    pub fn cwe_label(self) -> String {
        self.cwe()
            .iter()
            .map(|id| format!("CWE-{id}"))
            .collect::<Vec<_>>()
            .join(", ")
    }

    pub fn description(self) -> &'static str {
        match self {
            SmellType::AdminByDefault => "default user granted administrative privileges",
            SmellType::EmptyPassword => "zero-length string used as a password",
            SmellType::HardCodedSecret => "credential or username embedded in the script",
            SmellType::MissingDefaultCase => "case statement without a catch-all branch",
            SmellType::NoIntegrityCheck => "remote content downloaded without checksum verification",
            SmellType::SuspiciousComment => "comment signalling a defect or shortcut",
            SmellType::InvalidIpBinding => "service bound to all network interfaces",
            SmellType::HttpWithoutTls => "plain HTTP used for a transfer",
            SmellType::WeakCrypto => "weak hash or cipher algorithm",
        }
    }

    /// Position in [`SmellType::ALL`].
    pub fn index(self) -> usize {
        SmellType::ALL.iter().position(|s| *s == self).unwrap_or(0)
    }
}

impl fmt::Display for SmellType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown smell type '{0}'")]
pub struct UnknownSmell(pub String);

impl FromStr for SmellType {
    type Err = UnknownSmell;

    /// Canonical names, compared ignoring case, `_`, `-` and spaces.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| !matches!(c, '_' | '-' | ' '))
            .flat_map(char::to_lowercase)
            .collect();
        SmellType::ALL
            .into_iter()
            .find(|t| t.name().to_ascii_lowercase() == key)
            .ok_or_else(|| UnknownSmell(s.to_string()))
    }
}

/// One detected smell occurrence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub file_path: String,
    pub line: usize,
    pub smell: SmellType,
    pub rationale: String,
    pub confidence: f64,
    pub technology: Technology,
}

impl Finding {
    pub fn key(&self) -> (&str, usize, SmellType) {
        (&self.file_path, self.line, self.smell)
    }
}
