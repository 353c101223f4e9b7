use super::controller::{ActionId, ActionSet, Controller};

/// Label and action counts of a set of rows.
///
/// `sets` is indexed by the local set id of the owning [`NodeView`];
/// `actions` by global action id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    pub size: usize,
    pub sets: Vec<usize>,
    pub actions: Vec<usize>,
}

impl Histogram {
    pub fn empty(num_sets: usize, num_actions: usize) -> Self {
        Histogram {
            size: 0,
            sets: vec![0; num_sets],
            actions: vec![0; num_actions],
        }
    }

    pub fn add(&mut self, local_set: usize, actions: &[ActionId]) {
        self.size += 1;
        self.sets[local_set] += 1;
        for a in actions {
            self.actions[*a as usize] += 1;
        }
    }

    pub fn remove(&mut self, local_set: usize, actions: &[ActionId]) {
        self.size -= 1;
        self.sets[local_set] -= 1;
        for a in actions {
            self.actions[*a as usize] -= 1;
        }
    }

    /// `self - other`, elementwise.
    pub fn minus(&self, other: &Histogram) -> Histogram {
        Histogram {
            size: self.size - other.size,
            sets: self
                .sets
                .iter()
                .zip(&other.sets)
                .map(|(a, b)| a - b)
                .collect(),
            actions: self
                .actions
                .iter()
                .zip(&other.actions)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn max_set_count(&self) -> usize {
        self.sets.iter().copied().max().unwrap_or(0)
    }

    pub fn distinct_sets(&self) -> usize {
        self.sets.iter().filter(|n| **n > 0).count()
    }

    /// True when some action is allowed in every row.
    pub fn has_common_action(&self) -> bool {
        self.size > 0 && self.actions.contains(&self.size)
    }
}

/// A read-only projection of a controller onto a subset of its rows, with
/// cached label histogram `n_B` and action histogram `p_a`.
#[derive(Debug, Clone)]
pub struct NodeView<'c> {
    controller: &'c Controller,
    rows: Vec<usize>,
    local_of_pos: Vec<u32>,
    local_sets: Vec<u32>,
    histogram: Histogram,
}

impl<'c> NodeView<'c> {
    pub fn root(controller: &'c Controller) -> Self {
        NodeView::new(controller, (0..controller.len()).collect())
    }

    pub fn new(controller: &'c Controller, mut rows: Vec<usize>) -> Self {
        rows.sort_unstable();
        rows.dedup();
        let mut local_sets: Vec<u32> = rows.iter().map(|r| controller.set_id(*r)).collect();
        local_sets.sort_unstable();
        local_sets.dedup();
        let local_of_pos: Vec<u32> = rows
            .iter()
            .map(|r| local_sets.binary_search(&controller.set_id(*r)).unwrap() as u32)
            .collect();
        let mut histogram = Histogram::empty(local_sets.len(), controller.labels().len());
        for (pos, row) in rows.iter().enumerate() {
            histogram.add(local_of_pos[pos] as usize, controller.actions(*row).ids());
        }
        NodeView {
            controller,
            rows,
            local_of_pos,
            local_sets,
            histogram,
        }
    }

    pub fn controller(&self) -> &'c Controller {
        self.controller
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn state_at(&self, pos: usize) -> &'c [f64] {
        self.controller.state(self.rows[pos])
    }

    pub fn actions_at(&self, pos: usize) -> &'c ActionSet {
        self.controller.actions(self.rows[pos])
    }

    pub fn local_set_at(&self, pos: usize) -> usize {
        self.local_of_pos[pos] as usize
    }

    pub fn num_local_sets(&self) -> usize {
        self.local_sets.len()
    }

    pub fn local_set(&self, local: usize) -> &'c ActionSet {
        &self.controller.distinct_sets()[self.local_sets[local] as usize]
    }

    pub fn histogram(&self) -> &Histogram {
        &self.histogram
    }

    pub fn empty_histogram(&self) -> Histogram {
        Histogram::empty(self.local_sets.len(), self.controller.labels().len())
    }

    /// `n_B` as (action set, count) pairs in set order.
    pub fn label_counts(&self) -> Vec<(&'c ActionSet, usize)> {
        (0..self.local_sets.len())
            .map(|l| (self.local_set(l), self.histogram.sets[l]))
            .collect()
    }

    /// `p_a` for every action in the label table.
    pub fn action_counts(&self) -> &[usize] {
        &self.histogram.actions
    }

    /// True when every row carries the same action set.
    pub fn is_pure(&self) -> bool {
        self.local_sets.len() <= 1
    }

    /// Intersection of all action sets in the view.
    pub fn common_actions(&self) -> Vec<ActionId> {
        self.histogram
            .actions
            .iter()
            .enumerate()
            .filter(|(_, p)| **p == self.len() && !self.is_empty())
            .map(|(a, _)| a as ActionId)
            .collect()
    }

    /// Union of all action sets in the view.
    pub fn union_actions(&self) -> Option<ActionSet> {
        ActionSet::new(
            self.histogram
                .actions
                .iter()
                .enumerate()
                .filter(|(_, p)| **p > 0)
                .map(|(a, _)| a as ActionId),
        )
    }

    /// Splits the view by branch index; `branches` gives the branch per position.
    pub fn partition(&self, branches: &[usize], arity: usize) -> Vec<NodeView<'c>> {
        let mut parts: Vec<Vec<usize>> = vec![Vec::new(); arity];
        for (pos, b) in branches.iter().enumerate() {
            parts[*b].push(self.rows[pos]);
        }
        parts
            .into_iter()
            .map(|rows| NodeView::new(self.controller, rows))
            .collect()
    }

    /// Histograms of each branch without materialising child views.
    pub fn branch_histograms(&self, branches: &[usize], arity: usize) -> Vec<Histogram> {
        let mut parts = vec![self.empty_histogram(); arity];
        for (pos, b) in branches.iter().enumerate() {
            parts[*b].add(self.local_set_at(pos), self.actions_at(pos).ids());
        }
        parts
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{cruise, grid};

    #[test]
    fn cruise_histograms() {
        let c = cruise();
        let view = NodeView::root(&c);
        let mut counts: Vec<usize> = view.label_counts().iter().map(|(_, n)| *n).collect();
        counts.sort();
        assert_eq!(counts, vec![1, 1, 2]);
        let neu = c.label_id("neu").unwrap();
        assert_eq!(view.action_counts()[neu as usize], 4);
        assert_eq!(view.common_actions(), vec![neu]);
    }

    #[test]
    fn partition_recomputes_consistent_histograms() {
        let c = grid();
        let view = NodeView::root(&c);
        let branches: Vec<usize> = (0..view.len())
            .map(|p| usize::from(view.state_at(p)[0] <= 1.5))
            .collect();
        let parts = view.partition(&branches, 2);
        let fast = view.branch_histograms(&branches, 2);
        for (part, _) in parts.iter().zip(&fast) {
            let total: usize = part.label_counts().iter().map(|(_, n)| n).sum();
            assert_eq!(total, part.len());
            for (a, p) in part.action_counts().iter().enumerate() {
                let direct = (0..part.len())
                    .filter(|pos| part.actions_at(*pos).contains(a as ActionId))
                    .count();
                assert_eq!(*p, direct);
            }
        }
        assert_eq!(fast[0].size + fast[1].size, view.len());
        assert_eq!(fast[1].actions, parts[1].action_counts());
    }
}
