//! Impurity measures, split scoring and determinization.
//!
//! Classic measures look at the label histogram `n_B` (one label per distinct
//! action set). The multi-label variants look at the action histogram `p_a`
//! and treat a node as pure once some action is allowed everywhere, which
//! over-approximates the best complete determinization of each child.

mod determinize;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use determinize::{determinize_preprocess, Determinizer};

use crate::error::{Error, Result};
use crate::model::{ActionId, Histogram, NodeView};
use crate::predicates::Predicate;

/// Absolute tolerance for comparing impurity values.
pub const IMPURITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ImpurityMeasure {
    Entropy,
    EntropyRatio,
    Gini,
    Twoing,
    SumMinority,
    MaxMinority,
    MultiLabelEntropy,
    MultiLabelGini,
}

impl ImpurityMeasure {
    pub const ALL: [ImpurityMeasure; 8] = [
        ImpurityMeasure::Entropy,
        ImpurityMeasure::EntropyRatio,
        ImpurityMeasure::Gini,
        ImpurityMeasure::Twoing,
        ImpurityMeasure::SumMinority,
        ImpurityMeasure::MaxMinority,
        ImpurityMeasure::MultiLabelEntropy,
        ImpurityMeasure::MultiLabelGini,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ImpurityMeasure::Entropy => "entropy",
            ImpurityMeasure::EntropyRatio => "entropy-ratio",
            ImpurityMeasure::Gini => "gini",
            ImpurityMeasure::Twoing => "twoing",
            ImpurityMeasure::SumMinority => "sum-minority",
            ImpurityMeasure::MaxMinority => "max-minority",
            ImpurityMeasure::MultiLabelEntropy => "multi-label-entropy",
            ImpurityMeasure::MultiLabelGini => "multi-label-gini",
        }
    }

    pub fn is_multi_label(self) -> bool {
        matches!(
            self,
            ImpurityMeasure::MultiLabelEntropy | ImpurityMeasure::MultiLabelGini
        )
    }
}

impl fmt::Display for ImpurityMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ImpurityMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Ok(match norm.as_str() {
            "entropy" => ImpurityMeasure::Entropy,
            "entropy-ratio" => ImpurityMeasure::EntropyRatio,
            "gini" => ImpurityMeasure::Gini,
            "twoing" => ImpurityMeasure::Twoing,
            "sum-minority" => ImpurityMeasure::SumMinority,
            "max-minority" => ImpurityMeasure::MaxMinority,
            "multi-label-entropy" | "mle" => ImpurityMeasure::MultiLabelEntropy,
            "multi-label-gini" | "mlgini" => ImpurityMeasure::MultiLabelGini,
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "unknown impurity measure `{s}`"
                )))
            }
        })
    }
}

impl TryFrom<String> for ImpurityMeasure {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ImpurityMeasure> for String {
    fn from(m: ImpurityMeasure) -> String {
        m.name().to_string()
    }
}

fn plogp(count: usize, total: usize) -> f64 {
    if count == 0 {
        0.0
    } else {
        let p = count as f64 / total as f64;
        -p * p.log2()
    }
}

pub(crate) fn entropy_of(h: &Histogram) -> f64 {
    h.sets.iter().map(|c| plogp(*c, h.size)).sum()
}

pub(crate) fn gini_of(h: &Histogram) -> f64 {
    let n = h.size as f64;
    1.0 - h.sets.iter().map(|c| (*c as f64 / n).powi(2)).sum::<f64>()
}

fn minority_of(h: &Histogram) -> f64 {
    (h.size - h.max_set_count()) as f64
}

fn mle_of(h: &Histogram) -> f64 {
    if h.has_common_action() {
        0.0
    } else {
        h.actions.iter().map(|p| plogp(*p, h.size)).sum()
    }
}

fn mlgini_of(h: &Histogram) -> f64 {
    if h.has_common_action() {
        return 0.0;
    }
    let n = h.size as f64;
    let present = h.actions.iter().filter(|p| **p > 0).count() as f64;
    present
        - h.actions
            .iter()
            .map(|p| (*p as f64 / n).powi(2))
            .sum::<f64>()
}

/// Node-level impurity of a nonempty histogram.
pub fn histogram_impurity(measure: ImpurityMeasure, h: &Histogram) -> Result<f64> {
    Ok(match measure {
        ImpurityMeasure::Entropy => entropy_of(h),
        ImpurityMeasure::Gini => gini_of(h),
        ImpurityMeasure::SumMinority | ImpurityMeasure::MaxMinority => minority_of(h),
        ImpurityMeasure::MultiLabelEntropy => mle_of(h),
        ImpurityMeasure::MultiLabelGini => mlgini_of(h),
        ImpurityMeasure::EntropyRatio => {
            return Err(Error::UnsupportedAtNodeLevel("entropy-ratio"))
        }
        ImpurityMeasure::Twoing => return Err(Error::UnsupportedAtNodeLevel("twoing")),
    })
}

pub fn node_impurity(view: &NodeView<'_>, measure: ImpurityMeasure) -> Result<f64> {
    if view.is_empty() {
        return Err(Error::EmptyController);
    }
    histogram_impurity(measure, view.histogram())
}

fn weighted(parts: &[Histogram], f: impl Fn(&Histogram) -> f64) -> f64 {
    let total: usize = parts.iter().map(|p| p.size).sum();
    parts
        .iter()
        .map(|p| p.size as f64 / total as f64 * f(p))
        .sum()
}

/// Impurity of a partition given per-branch histograms (sharing set ids).
/// Degenerate splits score `+inf`.
pub fn partition_impurity(measure: ImpurityMeasure, parts: &[Histogram]) -> f64 {
    if parts.len() < 2 || parts.iter().any(|p| p.size == 0) {
        return f64::INFINITY;
    }
    match measure {
        ImpurityMeasure::Entropy => weighted(parts, entropy_of),
        ImpurityMeasure::Gini => weighted(parts, gini_of),
        ImpurityMeasure::MultiLabelEntropy => weighted(parts, mle_of),
        ImpurityMeasure::MultiLabelGini => weighted(parts, mlgini_of),
        ImpurityMeasure::SumMinority => parts.iter().map(minority_of).sum(),
        ImpurityMeasure::MaxMinority => parts.iter().map(minority_of).fold(0.0, f64::max),
        ImpurityMeasure::EntropyRatio => {
            let total: usize = parts.iter().map(|p| p.size).sum();
            let split_info: f64 = parts.iter().map(|p| plogp(p.size, total)).sum();
            if split_info <= 0.0 {
                f64::INFINITY
            } else {
                weighted(parts, entropy_of) / split_info
            }
        }
        ImpurityMeasure::Twoing => {
            if parts.len() != 2 {
                return f64::INFINITY;
            }
            let (l, r) = (&parts[0], &parts[1]);
            let n = (l.size + r.size) as f64;
            let diff: f64 = l
                .sets
                .iter()
                .zip(&r.sets)
                .map(|(a, b)| (*a as f64 / l.size as f64 - *b as f64 / r.size as f64).abs())
                .sum();
            let value = (l.size as f64 / n) * (r.size as f64 / n) * diff * diff;
            if value <= 0.0 {
                f64::INFINITY
            } else {
                1.0 / value
            }
        }
    }
}

/// Branch index of every state in the view under a predicate.
pub fn branches_of(pred: &Predicate, view: &NodeView<'_>) -> Result<Vec<usize>> {
    (0..view.len())
        .map(|pos| pred.eval_named(view.state_at(pos), view.controller().variables()))
        .collect()
}

/// Scores a predicate on a view. Predicates that cannot be evaluated on
/// some state propagate the error.
pub fn split_impurity(
    pred: &Predicate,
    view: &NodeView<'_>,
    measure: ImpurityMeasure,
) -> Result<f64> {
    let branches = branches_of(pred, view)?;
    let parts = view.branch_histograms(&branches, pred.arity());
    Ok(partition_impurity(measure, &parts))
}

/// Intersection of the action sets in the view (possibly empty).
pub fn common_actions(view: &NodeView<'_>) -> Vec<ActionId> {
    view.common_actions()
}

/// `a < b` beyond the comparison tolerance; infinities compare exactly.
pub fn strictly_less(a: f64, b: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        a < b
    } else {
        a < b - IMPURITY_TOL
    }
}
