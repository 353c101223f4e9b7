use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::impurity::{Determinizer, ImpurityMeasure};
use crate::ingest::template::PredicateTemplate;
use crate::predicates::DomainKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeafMode {
    /// One common action: the one most frequent in the whole controller.
    #[default]
    Single,
    /// Every action common to the node's states.
    CommonSet,
}

/// Hyper-parameters of tree construction.
///
/// Priorities are keyed by `axis`, `linear`, `categorical`, `template` or
/// `template:<name>`; missing keys default to 1. A candidate's score is its
/// impurity divided by its priority, and priority-0 domains are only
/// consulted when no positive-priority candidate scores finitely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildConfig {
    #[serde(alias = "impurity")]
    pub measure: ImpurityMeasure,
    #[serde(alias = "determinize")]
    pub determinizer: Determinizer,
    pub priorities: BTreeMap<String, f64>,
    #[serde(serialize_with = "ser_tolerance", deserialize_with = "de_tolerance")]
    pub tolerance: f64,
    pub leaf_mode: LeafMode,
    pub max_depth: Option<usize>,
    /// Domain-knowledge template lines, named `t0`, `t1`, ... in order.
    pub templates: Vec<String>,
    pub max_linear_thresholds: usize,
    pub max_enumeration: usize,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            measure: ImpurityMeasure::Entropy,
            determinizer: Determinizer::None,
            priorities: BTreeMap::new(),
            tolerance: 0.0,
            leaf_mode: LeafMode::Single,
            max_depth: None,
            templates: Vec::new(),
            max_linear_thresholds: 32,
            max_enumeration: 10_000,
        }
    }
}

fn ser_tolerance<S: Serializer>(t: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if t.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*t)
    }
}

fn de_tolerance<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }
    match Raw::deserialize(d)? {
        Raw::Num(v) => Ok(v),
        Raw::Text(s) => parse_tolerance(&s).map_err(serde::de::Error::custom),
    }
}

/// Accepts a non-negative number or `inf`.
pub fn parse_tolerance(s: &str) -> Result<f64> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "∞" => Ok(f64::INFINITY),
        other => other
            .parse::<f64>()
            .ok()
            .filter(|v| *v >= 0.0)
            .ok_or_else(|| Error::InvalidConfig(format!("bad tolerance `{s}`"))),
    }
}

fn domain_key(kind: DomainKind) -> &'static str {
    match kind {
        DomainKind::Axis => "axis",
        DomainKind::Categorical => "categorical",
        DomainKind::Linear => "linear",
        DomainKind::Template => "template",
    }
}

impl BuildConfig {
    pub fn with_measure(mut self, measure: ImpurityMeasure) -> Self {
        self.measure = measure;
        self
    }

    pub fn with_determinizer(mut self, determinizer: Determinizer) -> Self {
        self.determinizer = determinizer;
        self
    }

    pub fn with_priority(mut self, domain: &str, value: f64) -> Self {
        self.priorities.insert(domain.to_string(), value);
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_leaf_mode(mut self, leaf_mode: LeafMode) -> Self {
        self.leaf_mode = leaf_mode;
        self
    }

    /// Priority of a generator domain; `template` names a specific template.
    pub fn priority(&self, kind: DomainKind, template: Option<&str>) -> f64 {
        if let Some(name) = template {
            if let Some(p) = self.priorities.get(&format!("template:{name}")) {
                return *p;
            }
        }
        self.priorities
            .get(domain_key(kind))
            .copied()
            .unwrap_or(1.0)
    }

    pub fn parsed_templates(&self) -> Result<Vec<PredicateTemplate>> {
        self.templates
            .iter()
            .enumerate()
            .map(|(i, text)| PredicateTemplate::parse(text, format!("t{i}")))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidConfig(msg));
        for (key, value) in &self.priorities {
            let known = matches!(key.as_str(), "axis" | "linear" | "categorical" | "template")
                || key
                    .strip_prefix("template:")
                    .is_some_and(|name| !name.is_empty());
            if !known {
                return invalid(format!("unknown priority domain `{key}`"));
            }
            if !(0.0..=1.0).contains(value) {
                return invalid(format!("priority of `{key}` must lie in [0, 1]"));
            }
        }
        let templates = self.parsed_templates()?;
        let mut any_positive = [
            DomainKind::Axis,
            DomainKind::Categorical,
            DomainKind::Linear,
        ]
        .into_iter()
        .any(|k| self.priority(k, None) > 0.0);
        any_positive |= templates
            .iter()
            .any(|t| self.priority(DomainKind::Template, Some(&t.name)) > 0.0);
        if !any_positive {
            return invalid("every predicate domain has priority 0".into());
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return invalid("tolerance must be non-negative".into());
        }
        if self.max_linear_thresholds == 0 {
            return invalid("max_linear_thresholds must be positive".into());
        }
        Ok(())
    }

    /// Stable short hash of the serialized configuration.
    pub fn fingerprint(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        hex::encode(&Sha256::digest(text.as_bytes())[..8])
    }
}
