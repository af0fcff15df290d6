//! Run configuration: a `key=value` or JSON file merged with command-line
//! flags. Flags win over file values.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use profile_fcm::fcm::FcmConfig;
use profile_fcm::ingest::{DayType, Season, SeasonMonths, SegmentSpec};

use crate::CliError;

/// Default display threshold for membership bars.
pub const DEFAULT_DISPLAY_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub clusters: Option<usize>,
    pub fuzzifier: Option<f64>,
    pub tolerance: Option<f64>,
    pub max_iter: Option<usize>,
    pub season: Option<Season>,
    pub day_type: Option<DayType>,
    pub winter_months: Option<Vec<u32>>,
    pub summer_months: Option<Vec<u32>>,
    pub model: Option<PathBuf>,
    pub offers: Option<PathBuf>,
    pub usage: Option<PathBuf>,
    pub bills: Option<PathBuf>,
    pub rank_cluster: Option<usize>,
    pub min_membership: Option<f64>,
    pub ranking: Option<PathBuf>,
    pub target: Option<usize>,
    pub summary: Option<PathBuf>,
    pub memberships: Option<PathBuf>,
    pub household: Option<String>,
    pub threshold: Option<f64>,
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("invalid value {value:?} for {key}")))
}

fn parse_months(key: &str, value: &str) -> Result<Vec<u32>, CliError> {
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse(key, s))
        .collect()
}

impl RunConfig {
    /// Reads a config file. Content starting with `{` is JSON, anything else
    /// is `key=value` lines with `#` comments.
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<Self, CliError> {
        let pairs = if text.trim_start().starts_with('{') {
            json_pairs(text)?
        } else {
            kv_pairs(text)?
        };
        let mut cfg = RunConfig::default();
        for (key, value) in pairs {
            cfg.set(&key, &value)?;
        }
        Ok(cfg)
    }

    /// Sets one field from its textual form. Keys use `_` or `-` separators.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = key.trim().replace('-', "_");
        let v = value.trim();
        let path = || Some(PathBuf::from(v));
        match key.as_str() {
            "in" | "input" => self.input = path(),
            "out" | "output" => self.output = path(),
            "seed" => self.seed = Some(parse(&key, v)?),
            "clusters" => self.clusters = Some(parse(&key, v)?),
            "fuzzifier" => self.fuzzifier = Some(parse(&key, v)?),
            "tolerance" => self.tolerance = Some(parse(&key, v)?),
            "max_iter" => self.max_iter = Some(parse(&key, v)?),
            "season" => self.season = Some(v.parse().map_err(CliError::Usage)?),
            "day_type" => self.day_type = Some(v.parse().map_err(CliError::Usage)?),
            "winter_months" => self.winter_months = Some(parse_months(&key, v)?),
            "summer_months" => self.summer_months = Some(parse_months(&key, v)?),
            "model" => self.model = path(),
            "offers" => self.offers = path(),
            "usage" => self.usage = path(),
            "bills" => self.bills = path(),
            "rank_cluster" => self.rank_cluster = Some(parse(&key, v)?),
            "min_membership" => self.min_membership = Some(parse(&key, v)?),
            "ranking" => self.ranking = path(),
            "target" => self.target = Some(parse(&key, v)?),
            "summary" => self.summary = path(),
            "memberships" => self.memberships = path(),
            "household" => self.household = Some(v.to_string()),
            "threshold" => self.threshold = Some(parse(&key, v)?),
            _ => return Err(CliError::Usage(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Field-wise merge; values present in `overrides` win.
    pub fn merged_with(self, overrides: RunConfig) -> RunConfig {
        macro_rules! pick {
            ($($field:ident),*) => {
                RunConfig { $($field: overrides.$field.or(self.$field)),* }
            };
        }
        pick!(
            input, output, seed, clusters, fuzzifier, tolerance, max_iter, season, day_type, winter_months,
            summer_months, model, offers, usage, bills, rank_cluster, min_membership, ranking, target, summary,
            memberships, household, threshold
        )
    }

    pub fn fcm_config(&self) -> Result<FcmConfig, CliError> {
        let d = FcmConfig::default();
        let cfg = FcmConfig {
            clusters: self.clusters.unwrap_or(d.clusters),
            fuzzifier: self.fuzzifier.unwrap_or(d.fuzzifier),
            tolerance: self.tolerance.unwrap_or(d.tolerance),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            seed: self.seed.unwrap_or(d.seed),
        };
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }

    /// Segment to build; defaults to winter weekends.
    pub fn segment_spec(&self) -> Result<SegmentSpec, CliError> {
        let defaults = SeasonMonths::default();
        let winter = self
            .winter_months
            .clone()
            .unwrap_or_else(|| defaults.months(Season::Winter).iter().copied().collect());
        let summer = self
            .summer_months
            .clone()
            .unwrap_or_else(|| defaults.months(Season::Summer).iter().copied().collect());
        let months = SeasonMonths::new(winter, summer).map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(SegmentSpec::new(
            self.season.unwrap_or(Season::Winter),
            self.day_type.unwrap_or(DayType::Weekend),
        )
        .with_months(months))
    }

    pub fn display_threshold(&self) -> Result<f64, CliError> {
        let t = self.threshold.unwrap_or(DEFAULT_DISPLAY_THRESHOLD);
        if (0.0..=1.0).contains(&t) {
            Ok(t)
        } else {
            Err(CliError::Usage(format!("threshold {t} outside [0, 1]")))
        }
    }
}

/// Returns a required path, checking it exists when `must_exist`.
pub fn required<'a>(value: &'a Option<PathBuf>, flag: &str, must_exist: bool) -> Result<&'a Path, CliError> {
    let path = value
        .as_deref()
        .ok_or_else(|| CliError::Usage(format!("missing --{flag}")))?;
    if must_exist && !path.exists() {
        return Err(CliError::Usage(format!("--{flag} {} does not exist", path.display())));
    }
    Ok(path)
}

/// Checks an optional input path exists when given.
pub fn optional_input<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<Option<&'a Path>, CliError> {
    match value.as_deref() {
        Some(p) if !p.exists() => Err(CliError::Usage(format!("--{flag} {} does not exist", p.display()))),
        other => Ok(other),
    }
}

fn kv_pairs(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", n + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn json_pairs(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config JSON: {e}")))?;
    let obj: BTreeMap<String, serde_json::Value> = match value {
        serde_json::Value::Object(map) => map.into_iter().collect(),
        _ => return Err(CliError::Usage("config JSON must be an object".into())),
    };
    obj.into_iter()
        .map(|(k, v)| {
            let s = match v {
                serde_json::Value::String(s) => s,
                serde_json::Value::Number(n) => n.to_string(),
                serde_json::Value::Bool(b) => b.to_string(),
                serde_json::Value::Array(items) => items
                    .iter()
                    .map(|i| match i {
                        serde_json::Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect::<Vec<_>>()
                    .join(","),
                other => return Err(CliError::Usage(format!("config key {k}: unsupported value {other}"))),
            };
            Ok((k, s))
        })
        .collect()
}
