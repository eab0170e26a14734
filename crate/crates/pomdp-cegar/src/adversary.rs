//! Pure observation-based adversaries.
//!
//! An adversary is a tree of history nodes: the node reached by the
//! observation sequence `z0 z1 ... zt` carries the single action chosen
//! after that history. Two paths with identical observation sequences go
//! through the same node, so the policy is observation-based by
//! construction. Subtrees are reference-counted and shared, which keeps
//! long-horizon witnesses compact.

use std::collections::BTreeMap;
use std::rc::Rc;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdversaryNode {
    pub action: usize,
    /// Children keyed by the next observation label. A missing child means
    /// the history is unreachable on the system the adversary was built for.
    pub children: BTreeMap<usize, Rc<AdversaryNode>>,
}

impl AdversaryNode {
    pub fn leaf(action: usize) -> Rc<Self> {
        Rc::new(AdversaryNode { action, children: BTreeMap::new() })
    }
}

/// A pure observation-based adversary up to a horizon bound. An optional
/// default action makes the policy total: histories falling off the
/// explicit tree take the default for the rest of the horizon.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationAdversary {
    pub root: Rc<AdversaryNode>,
    pub horizon: usize,
    pub default_action: Option<usize>,
}

impl ObservationAdversary {
    pub fn new(root: Rc<AdversaryNode>, horizon: usize) -> Self {
        ObservationAdversary { root, horizon, default_action: None }
    }

    pub fn with_default(mut self, action: usize) -> Self {
        self.default_action = Some(action);
        self
    }

    /// A stationary adversary choosing `action` for every history.
    pub fn stationary(action: usize, horizon: usize) -> Self {
        ObservationAdversary {
            root: AdversaryNode::leaf(action),
            horizon,
            default_action: Some(action),
        }
    }

    /// Action chosen after observing `suffix` past the initial observation.
    /// `None` when the adversary has no entry for that history.
    pub fn action_for(&self, suffix: &[usize]) -> Option<usize> {
        let mut node = &self.root;
        for z in suffix {
            match node.children.get(z) {
                Some(child) => node = child,
                None => return self.default_action,
            }
        }
        Some(node.action)
    }

    /// Number of distinct nodes (shared subtrees counted once).
    pub fn node_count(&self) -> usize {
        fn walk(node: &Rc<AdversaryNode>, seen: &mut Vec<*const AdversaryNode>) -> usize {
            let ptr = Rc::as_ptr(node);
            if seen.contains(&ptr) {
                return 0;
            }
            seen.push(ptr);
            1 + node.children.values().map(|c| walk(c, seen)).sum::<usize>()
        }
        walk(&self.root, &mut Vec::new())
    }

    /// Flattens the reachable history tree into `(observation suffix, action)`
    /// rows, depth-first, for reporting. Capped at `max_rows`.
    pub fn history_table(&self, obs_labels: &[String], max_rows: usize) -> Vec<(String, String)> {
        let mut rows = Vec::new();
        let mut stack: Vec<(Vec<usize>, Rc<AdversaryNode>)> = vec![(vec![], Rc::clone(&self.root))];
        while let Some((prefix, node)) = stack.pop() {
            if rows.len() >= max_rows {
                break;
            }
            let history = if prefix.is_empty() {
                "<initial>".to_string()
            } else {
                prefix.iter().map(|&z| obs_labels[z].clone()).collect::<Vec<_>>().join(" ")
            };
            rows.push((history, format!("action #{}", node.action)));
            for (&z, child) in node.children.iter().rev() {
                let mut next = prefix.clone();
                next.push(z);
                stack.push((next, Rc::clone(child)));
            }
        }
        rows
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stationary_is_total() {
        let adv = ObservationAdversary::stationary(0, 4);
        assert_eq!(adv.action_for(&[]), Some(0));
        assert_eq!(adv.action_for(&[2, 1, 0]), Some(0));
        assert_eq!(adv.node_count(), 1);
    }

    #[test]
    fn partial_tree_without_default_reports_missing_entries() {
        let root = Rc::new(AdversaryNode {
            action: 1,
            children: BTreeMap::from([(0, AdversaryNode::leaf(0))]),
        });
        let adv = ObservationAdversary::new(root, 2);
        assert_eq!(adv.action_for(&[]), Some(1));
        assert_eq!(adv.action_for(&[0]), Some(0));
        assert_eq!(adv.action_for(&[1]), None);
        assert_eq!(adv.clone().with_default(1).action_for(&[1]), Some(1));
    }
}
