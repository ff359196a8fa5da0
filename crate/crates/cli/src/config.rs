//! Line-oriented config file support: `key = value` entries under
//! `[run]`, `[model]` and `[analyze]` section headers. `#` starts a
//! comment. Unknown sections or keys are errors, so a typo never silently
//! falls back to a default. Command-line flags win over file values.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use flipbench_core::flipmodel::PowerModel;

const RUN_KEYS: &[&str] = &[
    "order",
    "calls",
    "cores",
    "scheme",
    "schemes",
    "seed",
    "kernel",
    "block",
    "warmup_seconds",
    "warmup_command",
    "monitor_interval",
    "noise",
    "output",
    "node_label",
    "freq_provider",
    "cpufreq_base",
    "replay_from",
    "active_cores",
    "duration_seconds",
    "pairs",
];

const MODEL_KEYS: &[&str] = &[
    "freq_ladder_khz",
    "v0",
    "v1",
    "c_dyn",
    "p_static_w",
    "power_cap_w",
    "flops_per_cycle",
    "alpha_floor",
];

const ANALYZE_KEYS: &[&str] = &["group_by", "series"];

/// Parsed config file: raw string values per `(section, key)`.
#[derive(Debug, Clone, Default)]
pub struct FileConfig {
    values: BTreeMap<(String, String), String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config file {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        let mut section: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let name = name.trim();
                if !["run", "model", "analyze"].contains(&name) {
                    bail!("line {lineno}: unknown section [{name}]");
                }
                section = Some(name.to_string());
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("line {lineno}: expected `key = value`, got {line:?}");
            };
            let key = key.trim();
            let value = value.trim();
            let section = section
                .clone()
                .ok_or_else(|| anyhow!("line {lineno}: entry before any [section] header"))?;
            let known = match section.as_str() {
                "run" => RUN_KEYS,
                "model" => MODEL_KEYS,
                "analyze" => ANALYZE_KEYS,
                _ => unreachable!(),
            };
            if !known.contains(&key) {
                bail!("line {lineno}: unknown key {key:?} in section [{section}]");
            }
            values.insert((section, key.to_string()), value.to_string());
        }
        Ok(Self { values })
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.values
            .get(&(section.to_string(), key.to_string()))
            .map(|s| s.as_str())
    }

    pub fn get_parsed<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<T>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| anyhow!("config [{section}] {key}: cannot parse {raw:?}")),
        }
    }

    /// Default power model with any `[model]` overrides applied.
    pub fn power_model(&self) -> Result<PowerModel> {
        let mut model = PowerModel::default();
        if let Some(raw) = self.get("model", "freq_ladder_khz") {
            let ladder: Result<Vec<u64>, _> =
                raw.split(';').map(|v| v.trim().parse::<u64>()).collect();
            model.freq_ladder_khz =
                ladder.map_err(|_| anyhow!("config [model] freq_ladder_khz: bad ladder {raw:?}"))?;
        }
        if let Some(v) = self.get_parsed("model", "v0")? {
            model.v0 = v;
        }
        if let Some(v) = self.get_parsed("model", "v1")? {
            model.v1 = v;
        }
        if let Some(v) = self.get_parsed("model", "c_dyn")? {
            model.c_dyn = v;
        }
        if let Some(v) = self.get_parsed("model", "p_static_w")? {
            model.p_static_w = v;
        }
        if let Some(v) = self.get_parsed("model", "power_cap_w")? {
            model.power_cap_w = v;
        }
        if let Some(v) = self.get_parsed("model", "flops_per_cycle")? {
            model.flops_per_cycle = v;
        }
        if let Some(v) = self.get_parsed("model", "alpha_floor")? {
            model.alpha_floor = v;
        }
        model.validate().map_err(|e| anyhow!("config [model]: {e}"))?;
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_values() {
        let cfg = FileConfig::parse(
            "# comment\n[run]\norder = 64\ncores = 0;1\n\n[model]\npower_cap_w = 95.5\n[analyze]\ngroup_by = scheme\n",
        )
        .unwrap();
        assert_eq!(cfg.get("run", "order"), Some("64"));
        assert_eq!(cfg.get("run", "cores"), Some("0;1"));
        assert_eq!(cfg.get("analyze", "group_by"), Some("scheme"));
        let model = cfg.power_model().unwrap();
        assert_eq!(model.power_cap_w, 95.5);
        assert_eq!(model.v0, PowerModel::default().v0);
    }

    #[test]
    fn rejects_unknown_keys_sections_and_stray_entries() {
        assert!(FileConfig::parse("[run]\nbogus = 1\n").is_err());
        assert!(FileConfig::parse("[nope]\norder = 1\n").is_err());
        assert!(FileConfig::parse("order = 1\n").is_err());
        assert!(FileConfig::parse("[run]\norder
").is_err());
    }

    #[test]
    fn model_ladder_override_and_validation() {
        let cfg = FileConfig::parse("[model]\nfreq_ladder_khz = 1000000;2000000;3000000\n").unwrap();
        assert_eq!(
            cfg.power_model().unwrap().freq_ladder_khz,
            vec![1_000_000, 2_000_000, 3_000_000]
        );
        let bad = FileConfig::parse("[model]\nalpha_floor = 2.0\n").unwrap();
        assert!(bad.power_model().is_err());
    }
}
