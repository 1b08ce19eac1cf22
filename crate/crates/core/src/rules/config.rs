//! Keyword heuristics that drive the detectors.
//!
//! The file format is one `key = value, value, ...` entry per line with `#`
//! comments. Keys that are absent keep their built-in defaults.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleConfig {
    pub user_keywords: Vec<String>,
    pub secret_keywords: Vec<String>,
    /// Subset of the secret keywords that name a password.
    pub password_keywords: Vec<String>,
    pub admin_keywords: Vec<String>,
    pub suspicious_words: Vec<String>,
    pub weak_crypto_names: Vec<String>,
    pub download_extensions: Vec<String>,
    pub checksum_attribute_names: Vec<String>,
    pub invalid_bind_addresses: Vec<String>,
    /// Unit types that fetch remote content by definition.
    pub download_unit_types: Vec<String>,
    pub exempt_loopback_http: bool,
}

fn list(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl Default for RuleConfig {
    fn default() -> Self {
        RuleConfig {
            user_keywords: list(&["user", "usr", "uname", "login"]),
            secret_keywords: list(&[
                "password", "passwd", "pwd", "secret", "key", "token", "cert", "ssh_key",
                "private_key",
            ]),
            password_keywords: list(&["password", "passwd", "pwd"]),
            admin_keywords: list(&["admin", "root", "sudo", "wheel"]),
            suspicious_words: list(&[
                "todo", "fixme", "hack", "xxx", "bug", "later", "workaround", "insecure",
            ]),
            weak_crypto_names: list(&["md5", "sha1", "sha-1", "des", "rc4", "arcfour"]),
            download_extensions: list(&[
                ".rpm", ".deb", ".tar", ".tgz", ".tar.gz", ".zip", ".gem", ".jar", ".sh", ".run",
                ".bin", ".msi", ".exe",
            ]),
            checksum_attribute_names: list(&[
                "checksum", "sha256sum", "md5sum", "gpg", "signature", "sha256",
            ]),
            invalid_bind_addresses: list(&["0.0.0.0", "::"]),
            download_unit_types: list(&["get_url", "remote_file"]),
            exempt_loopback_http: true,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read rule config {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("rule config line {line}: {message}")]
    Syntax { line: usize, message: String },
}

const LIST_KEYS: [&str; 10] = [
    "user_keywords",
    "secret_keywords",
    "password_keywords",
    "admin_keywords",
    "suspicious_words",
    "weak_crypto_names",
    "download_extensions",
    "checksum_attribute_names",
    "invalid_bind_addresses",
    "download_unit_types",
];

impl RuleConfig {
    fn list_mut(&mut self, key: &str) -> Option<&mut Vec<String>> {
        Some(match key {
            "user_keywords" => &mut self.user_keywords,
            "secret_keywords" => &mut self.secret_keywords,
            "password_keywords" => &mut self.password_keywords,
            "admin_keywords" => &mut self.admin_keywords,
            "suspicious_words" => &mut self.suspicious_words,
            "weak_crypto_names" => &mut self.weak_crypto_names,
            "download_extensions" => &mut self.download_extensions,
            "checksum_attribute_names" => &mut self.checksum_attribute_names,
            "invalid_bind_addresses" => &mut self.invalid_bind_addresses,
            "download_unit_types" => &mut self.download_unit_types,
            _ => return None,
        })
    }

    pub fn list(&self, key: &str) -> Option<&[String]> {
        Some(match key {
            "user_keywords" => &self.user_keywords,
            "secret_keywords" => &self.secret_keywords,
            "password_keywords" => &self.password_keywords,
            "admin_keywords" => &self.admin_keywords,
            "suspicious_words" => &self.suspicious_words,
            "weak_crypto_names" => &self.weak_crypto_names,
            "download_extensions" => &self.download_extensions,
            "checksum_attribute_names" => &self.checksum_attribute_names,
            "invalid_bind_addresses" => &self.invalid_bind_addresses,
            "download_unit_types" => &self.download_unit_types,
            _ => return None,
        })
    }

    pub fn list_keys() -> &'static [&'static str] {
        &LIST_KEYS
    }

    /// Appends `entry` to the named list; used by tooling and tests.
    pub fn add_keyword(&mut self, key: &str, entry: &str) -> bool {
        match self.list_mut(key) {
            Some(l) => {
                l.push(entry.to_lowercase());
                true
            }
            None => false,
        }
    }

    pub fn parse(text: &str) -> Result<RuleConfig, ConfigError> {
        let mut config = RuleConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("expected 'key = values', got '{content}'"),
                });
            };
            let key = key.trim();
            if key == "exempt_loopback_http" {
                config.exempt_loopback_http = match value.trim().to_ascii_lowercase().as_str() {
                    "true" | "yes" | "1" => true,
                    "false" | "no" | "0" => false,
                    other => {
                        return Err(ConfigError::Syntax {
                            line,
                            message: format!("expected a boolean, got '{other}'"),
                        })
                    }
                };
                continue;
            }
            let Some(target) = config.list_mut(key) else {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("unknown key '{key}'"),
                });
            };
            *target = value
                .split(',')
                .map(|v| v.trim().to_lowercase())
                .filter(|v| !v.is_empty())
                .collect();
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<RuleConfig, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        RuleConfig::parse(&text)
    }

    /// Serializes every key; `parse(to_text())` reproduces the config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in LIST_KEYS {
            let values = self.list(key).unwrap_or(&[]).join(", ");
            let _ = writeln!(out, "{key} = {values}");
        }
        let _ = writeln!(out, "exempt_loopback_http = {}", self.exempt_loopback_http);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_lowercase_and_non_empty() {
        let c = RuleConfig::default();
        for key in RuleConfig::list_keys() {
            let l = c.list(key).unwrap();
            assert!(!l.is_empty(), "{key}");
            assert!(l.iter().all(|e| !e.is_empty() && *e == e.to_lowercase()), "{key}");
        }
    }

    #[test]
    fn overrides_keep_other_defaults() {
        let c = RuleConfig::parse("# local tweaks\nadmin_keywords = Admin, operator\n\nexempt_loopback_http = false\n")
            .unwrap();
        assert_eq!(c.admin_keywords, ["admin", "operator"]);
        assert_eq!(c.user_keywords, RuleConfig::default().user_keywords);
        assert!(!c.exempt_loopback_http);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_lines() {
        assert!(matches!(
            RuleConfig::parse("colour = red"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        assert!(RuleConfig::parse("\njust words").is_err());
        assert!(RuleConfig::parse("exempt_loopback_http = maybe").is_err());
    }

    #[test]
    fn text_round_trip() {
        let c = RuleConfig::default();
        assert_eq!(RuleConfig::parse(&c.to_text()).unwrap(), c);
    }
}
