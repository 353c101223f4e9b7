use crate::impurity::{partition_impurity, ImpurityMeasure};
use crate::model::NodeView;

/// Midpoint of `a < b` that is guaranteed to separate them under `<=`.
pub(crate) fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b || m < a {
        a
    } else {
        m
    }
}

/// Scores every split `value <= c` with `c` a midpoint between consecutive
/// distinct values. `values[pos]` belongs to view position `pos`. Returns
/// `(c, impurity)` in increasing order of `c`.
pub(crate) fn sweep_thresholds(
    view: &NodeView<'_>,
    values: &[f64],
    measure: ImpurityMeasure,
) -> Vec<(f64, f64)> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|a, b| values[*a].total_cmp(&values[*b]));
    // parts[0] is the false branch, parts[1] the true branch
    let mut parts = [view.histogram().clone(), view.empty_histogram()];
    let mut out = Vec::new();
    for (k, &pos) in order.iter().enumerate() {
        let ids = view.actions_at(pos).ids();
        parts[0].remove(view.local_set_at(pos), ids);
        parts[1].add(view.local_set_at(pos), ids);
        if let Some(&next) = order.get(k + 1) {
            let (a, b) = (values[pos], values[next]);
            if a < b {
                out.push((midpoint(a, b), partition_impurity(measure, &parts)));
            }
        }
    }
    out
}

/// Evenly spaced subset of at most `cap` items, keeping both ends.
pub(crate) fn subsample<T: Clone>(items: &[T], cap: usize) -> Vec<T> {
    if items.len() <= cap {
        return items.to_vec();
    }
    if cap == 0 {
        return Vec::new();
    }
    if cap == 1 {
        return vec![items[items.len() / 2].clone()];
    }
    let last = items.len() - 1;
    (0..cap)
        .map(|k| items[(k * last + (cap - 1) / 2) / (cap - 1)].clone())
        .collect()
}
