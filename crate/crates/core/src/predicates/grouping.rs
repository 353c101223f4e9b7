use std::cmp::Ordering;

use super::Predicate;
use crate::error::{Error, Result};
use crate::impurity::{partition_impurity, ImpurityMeasure, IMPURITY_TOL};
use crate::model::{Histogram, NodeView};

struct Group {
    codes: Vec<usize>,
    hist: Histogram,
}

fn merged(a: &Histogram, b: &Histogram) -> Histogram {
    Histogram {
        size: a.size + b.size,
        sets: a.sets.iter().zip(&b.sets).map(|(x, y)| x + y).collect(),
        actions: a
            .actions
            .iter()
            .zip(&b.actions)
            .map(|(x, y)| x + y)
            .collect(),
    }
}

fn merged_codes(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut codes = [a, b].concat();
    codes.sort_unstable();
    codes
}

/// Greedy attribute-value grouping.
///
/// Starts from one group per value present in the view and repeatedly applies
/// the best pairwise merge while its impurity is at most the current impurity
/// plus `tolerance`, stopping at two groups. Merges whose impurity is within
/// [`IMPURITY_TOL`] of the best prefer the larger resulting group, then the
/// lexicographically smaller code list. Dictionary values absent from the
/// view join the group holding the most states.
pub fn categorical_grouping(
    view: &NodeView<'_>,
    var: usize,
    measure: ImpurityMeasure,
    tolerance: f64,
) -> Result<Predicate> {
    let meta = &view.controller().variables()[var];
    let mut groups: Vec<Group> = Vec::new();
    for pos in 0..view.len() {
        let code = view.state_at(pos)[var] as usize;
        let idx = match groups.iter().position(|g| g.codes[0] == code) {
            Some(i) => i,
            None => {
                groups.push(Group {
                    codes: vec![code],
                    hist: view.empty_histogram(),
                });
                groups.len() - 1
            }
        };
        groups[idx]
            .hist
            .add(view.local_set_at(pos), view.actions_at(pos).ids());
    }
    if groups.len() < 2 {
        return Err(Error::DegenerateSplit(meta.name.clone()));
    }
    groups.sort_by_key(|g| g.codes[0]);

    let impurity_of = |groups: &[Group]| {
        let hists: Vec<Histogram> = groups.iter().map(|g| g.hist.clone()).collect();
        partition_impurity(measure, &hists)
    };
    let mut current = impurity_of(&groups);
    while groups.len() > 2 {
        // (impurity, merged size, merged codes, i, j)
        let mut options = Vec::new();
        for i in 0..groups.len() {
            for j in i + 1..groups.len() {
                let mut hists: Vec<Histogram> = Vec::with_capacity(groups.len() - 1);
                hists.push(merged(&groups[i].hist, &groups[j].hist));
                for (k, g) in groups.iter().enumerate() {
                    if k != i && k != j {
                        hists.push(g.hist.clone());
                    }
                }
                let imp = partition_impurity(measure, &hists);
                let codes = merged_codes(&groups[i].codes, &groups[j].codes);
                options.push((imp, codes, i, j));
            }
        }
        let best = options.iter().map(|o| o.0).fold(f64::INFINITY, f64::min);
        let near = |imp: f64| imp == best || imp <= best + IMPURITY_TOL;
        let (imp, _, i, j) = options
            .into_iter()
            .filter(|o| near(o.0))
            .min_by(|a, b| match b.1.len().cmp(&a.1.len()) {
                Ordering::Equal => a.1.cmp(&b.1),
                other => other,
            })
            .expect("at least one merge");
        let accept = imp <= current + tolerance || (imp.is_infinite() && current.is_infinite());
        if !accept {
            break;
        }
        let gj = groups.remove(j);
        let gi = &mut groups[i];
        gi.codes = merged_codes(&gi.codes, &gj.codes);
        gi.hist = merged(&gi.hist, &gj.hist);
        groups.sort_by_key(|g| g.codes[0]);
        current = imp;
    }

    let mut out: Vec<Vec<usize>> = groups.iter().map(|g| g.codes.clone()).collect();
    let largest = groups
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.hist.size.cmp(&b.1.hist.size).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .expect("nonempty");
    for code in 0..meta.dictionary.len() {
        if !out.iter().any(|g| g.contains(&code)) {
            out[largest].push(code);
        }
    }
    for g in &mut out {
        g.sort_unstable();
    }
    Ok(Predicate::Categorical { var, groups: out })
}
