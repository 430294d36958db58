//! Plain-text run configuration: `key = value` lines under `[section]`
//! headers, `#` comments. Later sources overlay earlier ones (preset, then
//! config file, then flags), and every diagnostic names the source, line,
//! and field.

use std::collections::BTreeMap;
use std::fmt;

/// A configuration error carrying the offending source/line/field.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug)]
pub struct ConfigValue {
    pub value: String,
    pub line: usize,
    pub source: String,
}

/// Flat map keyed by `section.key`, preserving the provenance of each entry.
#[derive(Clone, Debug, Default)]
pub struct Config {
    entries: BTreeMap<String, ConfigValue>,
}

impl Config {
    pub fn parse(text: &str, source: &str) -> Result<Config, ConfigError> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| {
                    ConfigError(format!("{source} line {lineno}: unterminated section header"))
                })?;
                if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                    return Err(ConfigError(format!("{source} line {lineno}: invalid section name `{name}`")));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ConfigError(format!("{source} line {lineno}: expected `key = value`"))
            })?;
            let key = key.trim();
            if section.is_empty() {
                return Err(ConfigError(format!("{source} line {lineno}: key `{key}` outside any [section]")));
            }
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(ConfigError(format!("{source} line {lineno}: invalid key `{key}`")));
            }
            entries.insert(
                format!("{section}.{key}"),
                ConfigValue { value: value.trim().to_string(), line: lineno, source: source.to_string() },
            );
        }
        Ok(Config { entries })
    }

    /// Later entries win.
    pub fn overlay(&mut self, other: Config) {
        self.entries.extend(other.entries);
    }

    pub fn set(&mut self, section: &str, key: &str, value: String, source: &str) {
        self.entries.insert(
            format!("{section}.{key}"),
            ConfigValue { value, line: 0, source: source.to_string() },
        );
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&ConfigValue> {
        self.entries.get(&format!("{section}.{key}"))
    }

    pub fn get_str(&self, section: &str, key: &str) -> Option<&str> {
        self.get(section, key).map(|v| v.value.as_str())
    }

    fn parse_with<T: std::str::FromStr>(&self, section: &str, key: &str, what: &str) -> Result<Option<T>, ConfigError> {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => v.value.parse::<T>().map(Some).map_err(|_| {
                ConfigError(format!(
                    "{} line {}: field [{section}] {key}: expected {what}, got `{}`",
                    v.source, v.line, v.value
                ))
            }),
        }
    }

    pub fn get_f64(&self, section: &str, key: &str) -> Result<Option<f64>, ConfigError> {
        self.parse_with(section, key, "a number")
    }

    pub fn get_u32(&self, section: &str, key: &str) -> Result<Option<u32>, ConfigError> {
        self.parse_with(section, key, "a non-negative integer")
    }

    pub fn get_usize(&self, section: &str, key: &str) -> Result<Option<usize>, ConfigError> {
        self.parse_with(section, key, "a non-negative integer")
    }

    pub fn get_bool(&self, section: &str, key: &str) -> Result<Option<bool>, ConfigError> {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => match v.value.as_str() {
                "true" | "yes" | "1" => Ok(Some(true)),
                "false" | "no" | "0" => Ok(Some(false)),
                other => Err(ConfigError(format!(
                    "{} line {}: field [{section}] {key}: expected true/false, got `{other}`",
                    v.source, v.line
                ))),
            },
        }
    }

    pub fn require_f64(&self, section: &str, key: &str) -> Result<f64, ConfigError> {
        self.get_f64(section, key)?
            .ok_or_else(|| ConfigError(format!("missing required field [{section}] {key}")))
    }

    pub fn require_str(&self, section: &str, key: &str) -> Result<&str, ConfigError> {
        self.get_str(section, key)
            .ok_or_else(|| ConfigError(format!("missing required field [{section}] {key}")))
    }

    /// Comma-separated list of numbers.
    pub fn get_f64_list(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => v
                .value
                .split(',')
                .map(|part| {
                    part.trim().parse::<f64>().map_err(|_| {
                        ConfigError(format!(
                            "{} line {}: field [{section}] {key}: `{}` is not a number",
                            v.source, v.line, part.trim()
                        ))
                    })
                })
                .collect::<Result<Vec<f64>, _>>()
                .map(Some),
        }
    }

    pub fn get_str_list(&self, section: &str, key: &str) -> Option<Vec<String>> {
        self.get_str(section, key)
            .map(|s| s.split(',').map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_overlays() {
        let mut base = Config::parse("[a]\nx = 1\ny = 2\n", "preset").unwrap();
        let over = Config::parse("[a]\ny = 3 # comment\n", "file").unwrap();
        base.overlay(over);
        assert_eq!(base.get_f64("a", "x").unwrap(), Some(1.0));
        assert_eq!(base.get_f64("a", "y").unwrap(), Some(3.0));
        assert_eq!(base.get("a", "y").unwrap().source, "file");
    }

    #[test]
    fn diagnostics_carry_source_line_and_field() {
        let cfg = Config::parse("[trap]\nwaist_m = nope\n", "myconf").unwrap();
        let err = cfg.get_f64("trap", "waist_m").unwrap_err();
        assert!(err.0.contains("myconf line 2"), "{err}");
        assert!(err.0.contains("[trap] waist_m"), "{err}");
        let missing = cfg.require_f64("trap", "depth_mK").unwrap_err();
        assert!(missing.0.contains("[trap] depth_mK"), "{missing}");
    }

    #[test]
    fn rejects_keys_outside_sections() {
        assert!(Config::parse("x = 1\n", "c").is_err());
        assert!(Config::parse("[a\nx = 1\n", "c").is_err());
    }

    #[test]
    fn lists() {
        let cfg = Config::parse("[g]\ntemps = 5, 15, 50\nnames = a, b\n", "c").unwrap();
        assert_eq!(cfg.get_f64_list("g", "temps").unwrap().unwrap(), vec![5.0, 15.0, 50.0]);
        assert_eq!(cfg.get_str_list("g", "names").unwrap(), vec!["a", "b"]);
    }
}
