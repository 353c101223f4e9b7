use serde::Serialize;

use super::sweep::sweep_thresholds;
use super::Predicate;
use crate::error::{Error, Result};
use crate::impurity::{split_impurity, strictly_less, ImpurityMeasure};
use crate::ingest::expr::Comparator;
use crate::ingest::template::PredicateTemplate;
use crate::model::NodeView;
use crate::predicates::simplex::{nelder_mead, SimplexOptions};

/// An instantiation that failed to evaluate on some state of the view.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DroppedCandidate {
    pub template: String,
    pub assignment: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct TemplateCandidates {
    pub predicates: Vec<Predicate>,
    pub dropped: Vec<DroppedCandidate>,
}

const RESTART_POINTS: [f64; 3] = [-1.0, 0.5, 2.0];

fn describe(assignment: &[(String, f64)]) -> String {
    assignment
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(", ")
}

struct Instantiator<'a, 'v> {
    template: &'a PredicateTemplate,
    view: &'a NodeView<'v>,
    measure: ImpurityMeasure,
}

impl Instantiator<'_, '_> {
    fn build(&self, assignment: &[(String, f64)]) -> Result<Predicate> {
        let value = |name: &str| assignment.iter().find(|(k, _)| k == name).map(|(_, v)| *v);
        let vars = self.view.controller().variables();
        let lhs = self.template.lhs.bind(vars, &value)?;
        let rhs = self.template.rhs.bind(vars, &value)?;
        let mut sorted = assignment.to_vec();
        sorted.sort_by(|a, b| a.0.cmp(&b.0));
        let provenance = if sorted.is_empty() {
            self.template.source.clone()
        } else {
            format!("{} [{}]", self.template.source, describe(&sorted))
        };
        Ok(Predicate::Algebraic {
            lhs,
            comparator: self.template.comparator,
            rhs,
            provenance,
        })
    }

    fn score(&self, assignment: &[(String, f64)]) -> f64 {
        self.build(assignment)
            .and_then(|p| split_impurity(&p, self.view, self.measure))
            .unwrap_or(f64::INFINITY)
    }

    /// `lhs - rhs` with the free coefficient set to zero, per view position.
    fn offsets(&self, fixed: &[(String, f64)], free: &str) -> Result<Vec<f64>> {
        let mut assignment = fixed.to_vec();
        assignment.push((free.to_string(), 0.0));
        let Predicate::Algebraic { lhs, rhs, .. } = self.build(&assignment)? else {
            unreachable!()
        };
        (0..self.view.len())
            .map(|p| {
                let s = self.view.state_at(p);
                Ok(lhs.eval(s)? - rhs.eval(s)?)
            })
            .collect()
    }

    /// Solves for a single additive free coefficient by scanning the view.
    fn fit_additive(&self, fixed: &[(String, f64)], free: &str, tau: f64) -> Result<f64> {
        let offsets = self.offsets(fixed, free)?;
        let candidates: Vec<f64> = if self.template.comparator == Comparator::Eq {
            let mut distinct = offsets.clone();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            distinct.into_iter().map(|d| -d / tau).collect()
        } else {
            let scan = sweep_thresholds(self.view, &offsets, self.measure);
            let mut best: Option<(f64, f64)> = None;
            for (m, imp) in scan {
                if best.is_none_or(|(_, b)| strictly_less(imp, b)) {
                    best = Some((m, imp));
                }
            }
            match best {
                Some((m, _)) => return Ok(-m / tau),
                None => vec![-offsets[0] / tau],
            }
        };
        let mut best: Option<(f64, f64)> = None;
        for c in candidates {
            let mut assignment = fixed.to_vec();
            assignment.push((free.to_string(), c));
            let imp = self.score(&assignment);
            if best.is_none_or(|(_, b)| strictly_less(imp, b)) {
                best = Some((c, imp));
            }
        }
        Ok(best.map_or(0.0, |(c, _)| c))
    }

    fn fit_simplex(&self, fixed: &[(String, f64)], free: &[&str]) -> Vec<f64> {
        let objective = |x: &[f64]| {
            let mut assignment = fixed.to_vec();
            assignment.extend(free.iter().map(|k| k.to_string()).zip(x.iter().copied()));
            self.score(&assignment)
        };
        let opts = SimplexOptions::default();
        let mut best = nelder_mead(objective, &vec![1.0; free.len()], opts);
        if best.flat_start {
            for start in RESTART_POINTS {
                let run = nelder_mead(objective, &vec![start; free.len()], opts);
                let moved = !run.flat_start;
                if strictly_less(run.value, best.value) || (moved && best.flat_start) {
                    best = run;
                }
                if moved {
                    break;
                }
            }
        }
        best.point
    }

    fn instantiate(&self, fixed: Vec<(String, f64)>) -> Result<Predicate> {
        let free = self.template.arbitrary_coefficients();
        let mut assignment = fixed;
        match free.as_slice() {
            [] => {}
            [name] if self.single_additive(name).is_some() => {
                let tau = self.single_additive(name).unwrap();
                let c = self.fit_additive(&assignment, name, tau)?;
                assignment.push((name.to_string(), c));
            }
            _ => {
                let point = self.fit_simplex(&assignment, &free);
                assignment.extend(free.iter().map(|k| k.to_string()).zip(point));
            }
        }
        let pred = self.build(&assignment)?;
        for p in 0..self.view.len() {
            pred.eval(self.view.state_at(p))?;
        }
        Ok(pred)
    }

    /// `+1`/`-1` when `name` appears once, additively, so that the template
    /// reads `D(s) + tau * name CMP 0`.
    fn single_additive(&self, name: &str) -> Option<f64> {
        let t = self.template;
        match (t.lhs.occurrences(name), t.rhs.occurrences(name)) {
            (1, 0) => t.lhs.additive_sign_of(name),
            (0, 1) => t.rhs.additive_sign_of(name).map(|s| -s),
            _ => None,
        }
    }
}

fn enumerate(template: &PredicateTemplate, cap: usize) -> Result<Vec<Vec<(String, f64)>>> {
    let count = template.enumeration_size();
    if count > cap as u128 {
        return Err(Error::EnumerationBlowup { count, cap });
    }
    let mut out: Vec<Vec<(String, f64)>> = vec![Vec::new()];
    for (name, values) in template.finite_coefficients() {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut next = prefix.clone();
                    next.push((name.to_string(), *v));
                    next
                })
            })
            .collect();
    }
    Ok(out)
}

/// Turns templates into concrete predicates for a view: finite coefficient
/// domains are enumerated (at most `max_enumeration` assignments per
/// template) and arbitrary coefficients are fitted to minimise the split
/// impurity. Instantiations that fail to evaluate on a state are dropped and
/// reported.
pub fn instantiate_templates(
    templates: &[PredicateTemplate],
    view: &NodeView<'_>,
    measure: ImpurityMeasure,
    max_enumeration: usize,
) -> Result<TemplateCandidates> {
    let mut out = TemplateCandidates::default();
    for template in templates {
        let inst = Instantiator {
            template,
            view,
            measure,
        };
        for fixed in enumerate(template, max_enumeration)? {
            let label = describe(&fixed);
            match inst.instantiate(fixed) {
                Ok(pred) => out.predicates.push(pred),
                Err(err @ Error::NonEvaluableExpression(_)) => out.dropped.push(DroppedCandidate {
                    template: template.name.clone(),
                    assignment: label,
                    reason: err.to_string(),
                }),
                Err(err) => return Err(err),
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::template::parse_domain_knowledge;
    use crate::model::{ControllerBuilder, VariableMeta};
    use crate::testutil::cruise;

    fn displays(c: &crate::model::Controller, preds: &[Predicate]) -> Vec<String> {
        preds.iter().map(|p| p.display(c.variables())).collect()
    }

    #[test]
    fn pure_enumeration() {
        let c = cruise();
        let ts = parse_domain_knowledge("x_0 <= c; c in {1,2}").unwrap();
        let out = instantiate_templates(&ts, &NodeView::root(&c), ImpurityMeasure::Entropy, 10_000)
            .unwrap();
        assert_eq!(displays(&c, &out.predicates), vec!["v_o <= 1", "v_o <= 2"]);
        assert!(out.dropped.is_empty());
    }

    #[test]
    fn cruise_template_fits_free_coefficient() {
        let c = cruise();
        let ts = parse_domain_knowledge("d + (v_f - v_o)*c_0 > c_1; c_1 in {0,5,10}").unwrap();
        let view = NodeView::root(&c);
        let out = instantiate_templates(&ts, &view, ImpurityMeasure::Entropy, 10_000).unwrap();
        assert_eq!(out.predicates.len(), 3);
        let mut splitting = 0;
        for p in &out.predicates {
            let Predicate::Algebraic { provenance, .. } = p else {
                panic!()
            };
            assert!(provenance.contains("c_0="), "{provenance}");
            if split_impurity(p, &view, ImpurityMeasure::Entropy)
                .unwrap()
                .is_finite()
            {
                splitting += 1;
            }
        }
        assert!(splitting >= 1);
    }

    #[test]
    fn additive_free_coefficient_is_a_midpoint() {
        let c = cruise();
        let ts = parse_domain_knowledge("v_f - c_0 <= 0").unwrap();
        let view = NodeView::root(&c);
        let out = instantiate_templates(&ts, &view, ImpurityMeasure::Entropy, 10_000).unwrap();
        let p = &out.predicates[0];
        assert_eq!(
            split_impurity(p, &view, ImpurityMeasure::Entropy).unwrap(),
            0.5
        );
        assert_eq!(p.display(c.variables()), "v_f - 5 <= 0");
    }

    #[test]
    fn equality_template() {
        let c = cruise();
        let ts = parse_domain_knowledge("v_o + c_0 = 0").unwrap();
        let view = NodeView::root(&c);
        let out = instantiate_templates(&ts, &view, ImpurityMeasure::Entropy, 10_000).unwrap();
        let imp = split_impurity(&out.predicates[0], &view, ImpurityMeasure::Entropy).unwrap();
        assert!(imp.is_finite());
    }

    #[test]
    fn blowup() {
        let c = cruise();
        let defs: Vec<String> = (0..5)
            .map(|i| format!("c_{i} in {{0,1,2,3,4,5,6,7,8,9}}"))
            .collect();
        let text = format!(
            "c_0*v_o + c_1*v_f + c_2*d + c_3 + c_4 <= 0; {}",
            defs.join("; ")
        );
        let ts = parse_domain_knowledge(&text).unwrap();
        assert_eq!(
            instantiate_templates(&ts, &NodeView::root(&c), ImpurityMeasure::Entropy, 10_000)
                .unwrap_err(),
            Error::EnumerationBlowup {
                count: 100_000,
                cap: 10_000
            }
        );
    }

    #[test]
    fn domain_errors_are_dropped() {
        let mut b = ControllerBuilder::new(vec![VariableMeta::numeric("x")]);
        b.insert(vec![0.0], ["a"]).unwrap();
        b.insert(vec![1.0], ["b"]).unwrap();
        let c = b.finish(false).unwrap();
        let ts = parse_domain_knowledge("log(x) <= k; k in {0, 1}\nx <= k; k in {0.5}").unwrap();
        let out = instantiate_templates(&ts, &NodeView::root(&c), ImpurityMeasure::Entropy, 10_000)
            .unwrap();
        assert_eq!(out.dropped.len(), 2);
        assert_eq!(out.predicates.len(), 1);
        assert_eq!(out.dropped[0].template, "t0");
    }

    #[test]
    fn two_free_coefficients_use_simplex() {
        let mut b =
            ControllerBuilder::new(vec![VariableMeta::numeric("x"), VariableMeta::numeric("y")]);
        for i in 0..6 {
            for j in 0..6 {
                let label = if i * 2 + j <= 6 { "lo" } else { "hi" };
                b.insert(vec![i as f64, j as f64], [label]).unwrap();
            }
        }
        let c = b.finish(false).unwrap();
        let view = NodeView::root(&c);
        let ts = parse_domain_knowledge("c_0 * x + c_1 * y <= 6.5").unwrap();
        let out = instantiate_templates(&ts, &view, ImpurityMeasure::Entropy, 10_000).unwrap();
        assert_eq!(out.predicates.len(), 1);
        let imp = split_impurity(&out.predicates[0], &view, ImpurityMeasure::Entropy).unwrap();
        assert!(imp < 0.9, "{imp}");
    }
}
