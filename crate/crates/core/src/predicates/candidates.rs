use super::sweep::{midpoint, subsample, sweep_thresholds};
use super::{linear_value, Predicate};
use crate::impurity::ImpurityMeasure;
use crate::model::NodeView;

/// Midpoints between consecutive distinct values, ascending.
pub fn midpoints(values: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    sorted.windows(2).map(|w| midpoint(w[0], w[1])).collect()
}

fn column(view: &NodeView<'_>, var: usize) -> Vec<f64> {
    (0..view.len()).map(|p| view.state_at(p)[var]).collect()
}

/// One `s_var <= c` per midpoint of the variable's values in the view.
pub fn axis_aligned_candidates(view: &NodeView<'_>, var: usize) -> Vec<Predicate> {
    midpoints(&column(view, var))
        .into_iter()
        .map(|threshold| Predicate::AxisAligned { var, threshold })
        .collect()
}

pub(crate) fn scored_axis_aligned(
    view: &NodeView<'_>,
    var: usize,
    measure: ImpurityMeasure,
) -> Vec<(Predicate, f64)> {
    sweep_thresholds(view, &column(view, var), measure)
        .into_iter()
        .map(|(threshold, imp)| (Predicate::AxisAligned { var, threshold }, imp))
        .collect()
}

/// Coefficient vectors `s_j - s_i` and `s_i + s_j` for numeric pairs `i < j`.
fn pair_forms(view: &NodeView<'_>) -> Vec<Vec<f64>> {
    let vars = view.controller().variables();
    let numeric: Vec<usize> = (0..vars.len()).filter(|i| vars[*i].is_numeric()).collect();
    let mut out = Vec::new();
    for (a, &i) in numeric.iter().enumerate() {
        for &j in &numeric[a + 1..] {
            for sign_i in [-1.0, 1.0] {
                let mut coefficients = vec![0.0; vars.len()];
                coefficients[i] = sign_i;
                coefficients[j] = 1.0;
                out.push(coefficients);
            }
        }
    }
    out
}

/// Pairwise difference and sum splits over numeric variables, with at most
/// `max_thresholds` evenly subsampled thresholds per form.
pub fn linear_candidates(view: &NodeView<'_>, max_thresholds: usize) -> Vec<Predicate> {
    let mut out = Vec::new();
    for coefficients in pair_forms(view) {
        let values: Vec<f64> = (0..view.len())
            .map(|p| linear_value(&coefficients, view.state_at(p)))
            .collect();
        for threshold in subsample(&midpoints(&values), max_thresholds) {
            out.push(Predicate::Linear {
                coefficients: coefficients.clone(),
                threshold,
            });
        }
    }
    out
}

pub(crate) fn scored_linear(
    view: &NodeView<'_>,
    max_thresholds: usize,
    measure: ImpurityMeasure,
) -> Vec<(Predicate, f64)> {
    let mut out = Vec::new();
    for coefficients in pair_forms(view) {
        let values: Vec<f64> = (0..view.len())
            .map(|p| linear_value(&coefficients, view.state_at(p)))
            .collect();
        let scored = sweep_thresholds(view, &values, measure);
        for (threshold, imp) in subsample(&scored, max_thresholds) {
            out.push((
                Predicate::Linear {
                    coefficients: coefficients.clone(),
                    threshold,
                },
                imp,
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ControllerBuilder, VariableMeta};
    use crate::testutil::{cruise, grid};

    fn thresholds(preds: &[Predicate]) -> Vec<f64> {
        preds
            .iter()
            .map(|p| match p {
                Predicate::AxisAligned { threshold, .. } | Predicate::Linear { threshold, .. } => {
                    *threshold
                }
                _ => unreachable!(),
            })
            .collect()
    }

    #[test]
    fn cruise_v_o_midpoints() {
        let c = cruise();
        let view = NodeView::root(&c);
        assert_eq!(
            thresholds(&axis_aligned_candidates(&view, 0)),
            vec![1.0, 3.0]
        );
    }

    #[test]
    fn grid_x_midpoint() {
        let c = grid();
        let view = NodeView::root(&c);
        assert_eq!(thresholds(&axis_aligned_candidates(&view, 0)), vec![1.5]);
    }

    #[test]
    fn constant_variable_has_no_candidates() {
        let c = cruise();
        let view = NodeView::new(&c, vec![1, 2]);
        assert!(axis_aligned_candidates(&view, 0).is_empty());
    }

    #[test]
    fn linear_needs_two_numeric_vars() {
        let mut b = ControllerBuilder::new(vec![VariableMeta::numeric("x")]);
        b.insert(vec![1.0], ["a"]).unwrap();
        b.insert(vec![2.0], ["b"]).unwrap();
        let c = b.finish(false).unwrap();
        assert!(linear_candidates(&NodeView::root(&c), 32).is_empty());
    }

    #[test]
    fn linear_sum_midpoint() {
        let mut b =
            ControllerBuilder::new(vec![VariableMeta::numeric("x"), VariableMeta::numeric("y")]);
        b.insert(vec![1.0, 2.0], ["a"]).unwrap();
        b.insert(vec![3.0, 2.0], ["b"]).unwrap();
        let c = b.finish(false).unwrap();
        let preds = linear_candidates(&NodeView::root(&c), 32);
        assert!(preds.contains(&Predicate::Linear {
            coefficients: vec![1.0, 1.0],
            threshold: 4.0
        }));
        let vars = c.variables();
        let shown: Vec<String> = preds.iter().map(|p| p.display(vars)).collect();
        assert!(shown.contains(&"-x + y <= 0".to_string()), "{shown:?}");
    }

    #[test]
    fn cruise_relative_velocity_family() {
        let c = cruise();
        let preds = linear_candidates(&NodeView::root(&c), 32);
        let shown: Vec<String> = preds.iter().map(|p| p.display(c.variables())).collect();
        assert!(
            shown.iter().any(|s| s.starts_with("-v_o + v_f <= ")),
            "{shown:?}"
        );
    }

    #[test]
    fn scored_linear_is_capped() {
        let mut b =
            ControllerBuilder::new(vec![VariableMeta::numeric("x"), VariableMeta::numeric("y")]);
        for i in 0..100 {
            b.insert(
                vec![i as f64, (i * i) as f64],
                [if i % 2 == 0 { "a" } else { "b" }],
            )
            .unwrap();
        }
        let c = b.finish(false).unwrap();
        let view = NodeView::root(&c);
        assert_eq!(scored_linear(&view, 32, ImpurityMeasure::Entropy).len(), 64);
        assert_eq!(linear_candidates(&view, 32).len(), 64);
    }
}
