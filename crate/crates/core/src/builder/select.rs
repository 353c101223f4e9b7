use std::cmp::Ordering;

use serde::Serialize;

use super::config::BuildConfig;
use crate::error::{Error, Result};
use crate::impurity::{branches_of, partition_impurity, IMPURITY_TOL};
use crate::ingest::template::PredicateTemplate;
use crate::model::NodeView;
use crate::predicates::candidates::{scored_axis_aligned, scored_linear};
use crate::predicates::{
    categorical_grouping, instantiate_templates, DomainKind, DroppedCandidate, Predicate,
};

/// A candidate split with its raw impurity and priority-adjusted score.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCandidate {
    pub predicate: Predicate,
    pub impurity: f64,
    pub priority: f64,
    /// `impurity / priority`, or the raw impurity for priority 0.
    pub score: f64,
    /// Template name for template-derived candidates.
    pub template: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct CandidatePool {
    pub candidates: Vec<ScoredCandidate>,
    pub dropped: Vec<DroppedCandidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateSummary {
    pub predicate: String,
    pub domain: &'static str,
    pub impurity: f64,
    pub score: f64,
}

impl ScoredCandidate {
    pub fn new(
        predicate: Predicate,
        impurity: f64,
        priority: f64,
        template: Option<String>,
    ) -> Self {
        let score = if priority > 0.0 {
            impurity / priority
        } else {
            impurity
        };
        ScoredCandidate {
            predicate,
            impurity,
            priority,
            score,
            template,
        }
    }

    pub fn summary(&self, view: &NodeView<'_>) -> CandidateSummary {
        CandidateSummary {
            predicate: self.predicate.display(view.controller().variables()),
            domain: match self.predicate.domain_kind() {
                DomainKind::Axis => "axis",
                DomainKind::Categorical => "categorical",
                DomainKind::Linear => "linear",
                DomainKind::Template => "template",
            },
            impurity: self.impurity,
            score: self.score,
        }
    }
}

fn scores_equal(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= IMPURITY_TOL
}

/// Preference order among candidates of equal score: domain, then fewer
/// variables, then display text.
fn tie_break(a: &ScoredCandidate, b: &ScoredCandidate, view: &NodeView<'_>) -> Ordering {
    let vars = view.controller().variables();
    a.predicate
        .domain_kind()
        .cmp(&b.predicate.domain_kind())
        .then(
            a.predicate
                .referenced_variables()
                .cmp(&b.predicate.referenced_variables()),
        )
        .then_with(|| a.predicate.display(vars).cmp(&b.predicate.display(vars)))
}

/// Full ranking order: score (with tolerance), then [`tie_break`].
pub(crate) fn rank(a: &ScoredCandidate, b: &ScoredCandidate, view: &NodeView<'_>) -> Ordering {
    if scores_equal(a.score, b.score) {
        tie_break(a, b, view)
    } else {
        a.score.total_cmp(&b.score)
    }
}

fn best_of<'a>(
    pool: impl Iterator<Item = &'a ScoredCandidate>,
    view: &NodeView<'_>,
) -> Option<&'a ScoredCandidate> {
    let pool: Vec<&ScoredCandidate> = pool.collect();
    let min = pool.iter().map(|c| c.score).fold(f64::INFINITY, f64::min);
    pool.into_iter()
        .filter(|c| scores_equal(c.score, min))
        .min_by(|a, b| tie_break(a, b, view))
}

/// Every candidate from every domain (including priority-0 ones) that
/// sends at least one state of the view to each branch.
pub fn gather_candidates(
    view: &NodeView<'_>,
    config: &BuildConfig,
    templates: &[PredicateTemplate],
) -> Result<CandidatePool> {
    let mut pool = CandidatePool::default();
    let measure = config.measure;
    let vars = view.controller().variables();

    let axis = config.priority(DomainKind::Axis, None);
    let categorical = config.priority(DomainKind::Categorical, None);
    for (var, meta) in vars.iter().enumerate() {
        if meta.is_numeric() {
            for (pred, imp) in scored_axis_aligned(view, var, measure) {
                pool.candidates
                    .push(ScoredCandidate::new(pred, imp, axis, None));
            }
        } else {
            match categorical_grouping(view, var, measure, config.tolerance) {
                Ok(pred) => {
                    let branches = branches_of(&pred, view)?;
                    let parts = view.branch_histograms(&branches, pred.arity());
                    if parts.iter().all(|p| p.size > 0) {
                        let imp = partition_impurity(measure, &parts);
                        pool.candidates
                            .push(ScoredCandidate::new(pred, imp, categorical, None));
                    }
                }
                Err(Error::DegenerateSplit(_)) => {}
                Err(err) => return Err(err),
            }
        }
    }

    let linear = config.priority(DomainKind::Linear, None);
    for (pred, imp) in scored_linear(view, config.max_linear_thresholds, measure) {
        pool.candidates
            .push(ScoredCandidate::new(pred, imp, linear, None));
    }

    for template in templates {
        let priority = config.priority(DomainKind::Template, Some(&template.name));
        let out = instantiate_templates(
            std::slice::from_ref(template),
            view,
            measure,
            config.max_enumeration,
        )?;
        pool.dropped.extend(out.dropped);
        let first = pool.candidates.len();
        for pred in out.predicates {
            let branches = branches_of(&pred, view)?;
            let parts = view.branch_histograms(&branches, pred.arity());
            if parts.iter().any(|p| p.size == 0) {
                continue;
            }
            if pool.candidates[first..]
                .iter()
                .any(|c| c.predicate.approx_eq(&pred))
            {
                continue;
            }
            let imp = partition_impurity(measure, &parts);
            pool.candidates.push(ScoredCandidate::new(
                pred,
                imp,
                priority,
                Some(template.name.clone()),
            ));
        }
    }
    Ok(pool)
}

/// Chooses the split for a view from an already gathered pool.
pub fn select_from(pool: &[ScoredCandidate], view: &NodeView<'_>) -> Result<ScoredCandidate> {
    let positive = || pool.iter().filter(|c| c.priority > 0.0);
    let zero = || pool.iter().filter(|c| c.priority <= 0.0);
    let finite = |c: &&ScoredCandidate| c.score.is_finite();
    best_of(positive().filter(finite), view)
        .or_else(|| best_of(zero().filter(finite), view))
        .or_else(|| best_of(positive(), view))
        .or_else(|| best_of(zero(), view))
        .cloned()
        .ok_or(Error::NoValidPredicate)
}

/// Picks the minimum-score splitting predicate for a view.
pub fn select_predicate(view: &NodeView<'_>, config: &BuildConfig) -> Result<(Predicate, f64)> {
    let templates = config.parsed_templates()?;
    let pool = gather_candidates(view, config, &templates)?;
    let best = select_from(&pool.candidates, view)?;
    Ok((best.predicate, best.score))
}
