//! Exact verification of a single decision tree.
//!
//! Two interchangeable routes compute the minimal l-infinity perturbation
//! that flips a tree's prediction: a box scan over precomputed leaf regions
//! and a single recursive traversal that carries live interval bounds. They
//! agree bit for bit, which the test suite leans on heavily.

use crate::geometry::{AxisBox, Interval};
use crate::model::{NodeId, Tree, TreeNode};

/// Prediction side of a leaf value or margin: positive iff strictly `> 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Neg,
    Pos,
}

impl Sign {
    pub fn of(value: f64) -> Sign {
        if value > 0.0 {
            Sign::Pos
        } else {
            Sign::Neg
        }
    }

    pub fn flipped(self) -> Sign {
        match self {
            Sign::Neg => Sign::Pos,
            Sign::Pos => Sign::Neg,
        }
    }
}

/// One leaf with the region of input space routed to it.
#[derive(Debug, Clone)]
pub struct LeafBox {
    pub leaf: NodeId,
    pub region: AxisBox,
    pub value: f64,
}

/// Leaf regions of one tree, sorted by leaf id.
///
/// For a well-formed tree the regions are pairwise disjoint and cover all of
/// input space; a leaf whose path carries contradictory splits gets an empty
/// region and is unreachable.
#[derive(Debug, Clone)]
pub struct LeafBoxTable {
    entries: Vec<LeafBox>,
}

impl LeafBoxTable {
    pub fn entries(&self) -> &[LeafBox] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, leaf: NodeId) -> Option<&LeafBox> {
        self.entries
            .binary_search_by_key(&leaf, |e| e.leaf)
            .ok()
            .map(|i| &self.entries[i])
    }
}

/// Computes the region routed to every leaf by walking the tree depth-first,
/// clipping one interval per split: the left child tightens the upper bound
/// to `min(upper, threshold)`, the right child tightens the lower bound to
/// `max(lower, threshold)`.
pub fn compute_leaf_boxes(tree: &Tree, dim: usize) -> LeafBoxTable {
    let mut entries = Vec::with_capacity(tree.leaf_count());
    let mut stack = vec![(tree.root(), AxisBox::universe(dim))];
    while let Some((id, region)) = stack.pop() {
        match tree.node(id) {
            TreeNode::Leaf { value } => entries.push(LeafBox {
                leaf: id,
                region,
                value: *value,
            }),
            TreeNode::Internal {
                feature,
                threshold,
                left,
                right,
            } => {
                let iv = region.constraint(*feature);
                let left_iv = Interval::new(iv.lower, iv.upper.min(*threshold));
                let right_iv = Interval::new(iv.lower.max(*threshold), iv.upper);
                stack.push((*right, region.with_constraint(*feature, right_iv)));
                stack.push((*left, region.with_constraint(*feature, left_iv)));
            }
        }
    }
    entries.sort_by_key(|e| e.leaf);
    LeafBoxTable { entries }
}

/// Exact minimal flip distance via the leaf-box scan: the minimum over
/// reachable leaves disagreeing with `y0` of the distance from `x` to the
/// leaf region. Returns `+inf` when no leaf disagrees.
pub fn verify_tree_boxes(tree: &Tree, dim: usize, x: &[f64], y0: Sign) -> f64 {
    verify_tree_boxes_impl(&compute_leaf_boxes(tree, dim), x, y0).0
}

fn verify_tree_boxes_impl(table: &LeafBoxTable, x: &[f64], y0: Sign) -> (f64, Option<NodeId>) {
    let mut best = f64::INFINITY;
    let mut arg = None;
    for entry in table.entries() {
        if Sign::of(entry.value) == y0 || entry.region.is_empty() {
            continue;
        }
        let d = entry
            .region
            .distance(x)
            .expect("nonempty leaf region")
            .norm;
        if d < best {
            best = d;
            arg = Some(entry.leaf);
        }
    }
    (best, arg)
}

/// Exact minimal flip distance via a single traversal.
///
/// Identical contract to [`verify_tree_boxes`], computed in one pass: the
/// recursion carries the running l-infinity cost and mutates one live bound
/// per split, restoring it on return. Subtrees whose clipped interval is
/// empty are pruned.
pub fn verify_tree_linear(tree: &Tree, dim: usize, x: &[f64], y0: Sign) -> f64 {
    let mut lower = vec![f64::NEG_INFINITY; dim];
    let mut upper = vec![f64::INFINITY; dim];
    let mut best = f64::INFINITY;
    linear_rec(tree, tree.root(), x, y0, 0.0, &mut lower, &mut upper, &mut best);
    best
}

#[allow(clippy::too_many_arguments)]
fn linear_rec(
    tree: &Tree,
    id: NodeId,
    x: &[f64],
    y0: Sign,
    cost: f64,
    lower: &mut [f64],
    upper: &mut [f64],
    best: &mut f64,
) {
    match tree.node(id) {
        TreeNode::Leaf { value } => {
            if Sign::of(*value) != y0 {
                *best = best.min(cost);
            }
        }
        TreeNode::Internal {
            feature,
            threshold,
            left,
            right,
        } => {
            let t = *feature;

            let saved = upper[t];
            upper[t] = upper[t].min(*threshold);
            if lower[t] < upper[t] {
                let c = if upper[t] < x[t] {
                    cost.max(x[t] - upper[t])
                } else {
                    cost
                };
                linear_rec(tree, *left, x, y0, c, lower, upper, best);
            }
            upper[t] = saved;

            let saved = lower[t];
            lower[t] = lower[t].max(*threshold);
            if lower[t] < upper[t] {
                let c = if lower[t] > x[t] {
                    cost.max(lower[t] - x[t])
                } else {
                    cost
                };
                linear_rec(tree, *right, x, y0, c, lower, upper, best);
            }
            lower[t] = saved;
        }
    }
}

/// Exact flip distance plus a concrete adversarial point.
///
/// The witness is `x` clamped into the minimizing leaf region, with open
/// lower boundaries nudged up by one representable value, so its distance
/// to `x` is at most the returned infimum plus one float step per
/// coordinate. Returns `None` when the tree cannot disagree with `y0`.
pub fn single_tree_attack(tree: &Tree, dim: usize, x: &[f64], y0: Sign) -> Option<(f64, Vec<f64>)> {
    let table = compute_leaf_boxes(tree, dim);
    let (dist, leaf) = verify_tree_boxes_impl(&table, x, y0);
    let leaf = leaf?;
    let region = &table.get(leaf).expect("leaf present").region;
    Some((dist, materialize_witness(x, region)))
}

/// Clamps `x` into a nonempty box, nudging open lower boundaries.
pub fn materialize_witness(x: &[f64], region: &AxisBox) -> Vec<f64> {
    debug_assert!(!region.is_empty());
    let mut out = x.to_vec();
    for (feature, interval) in region.constraints() {
        let v = x[feature];
        if interval.contains(v) {
            continue;
        }
        out[feature] = if v > interval.upper {
            interval.upper
        } else {
            // v <= lower: the infimum sits on the open boundary.
            interval.lower.next_up().min(interval.upper)
        };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Tree;
    use crate::model::TreeNode;

    fn stump(threshold: f64, left: f64, right: f64) -> Tree {
        Tree::new(
            vec![
                TreeNode::Internal {
                    feature: 0,
                    threshold,
                    left: 1,
                    right: 2,
                },
                TreeNode::Leaf { value: left },
                TreeNode::Leaf { value: right },
            ],
            0,
        )
        .unwrap()
    }

    #[test]
    fn leaf_only_tree_has_universal_box() {
        let tree = Tree::new(vec![TreeNode::Leaf { value: 1.0 }], 0).unwrap();
        let table = compute_leaf_boxes(&tree, 3);
        assert_eq!(table.len(), 1);
        assert_eq!(table.entries()[0].region, AxisBox::universe(3));
    }

    #[test]
    fn depth_one_split_boxes() {
        let table = compute_leaf_boxes(&stump(0.5, -1.0, 1.0), 1);
        let left = table.get(1).unwrap();
        let right = table.get(2).unwrap();
        assert_eq!(left.region.constraint(0), Interval::new(f64::NEG_INFINITY, 0.5));
        assert_eq!(right.region.constraint(0), Interval::new(0.5, f64::INFINITY));
    }

    #[test]
    fn nested_split_clips_upper_bound() {
        // f0 <= 0.5, then (left) f0 <= 0.3.
        let tree = Tree::new(
            vec![
                TreeNode::Internal {
                    feature: 0,
                    threshold: 0.5,
                    left: 1,
                    right: 4,
                },
                TreeNode::Internal {
                    feature: 0,
                    threshold: 0.3,
                    left: 2,
                    right: 3,
                },
                TreeNode::Leaf { value: -1.0 },
                TreeNode::Leaf { value: 1.0 },
                TreeNode::Leaf { value: 1.0 },
            ],
            0,
        )
        .unwrap();
        let table = compute_leaf_boxes(&tree, 1);
        assert_eq!(
            table.get(2).unwrap().region.constraint(0),
            Interval::new(f64::NEG_INFINITY, 0.3)
        );
        assert_eq!(table.get(3).unwrap().region.constraint(0), Interval::new(0.3, 0.5));
    }

    #[test]
    fn flip_distance_to_other_halfspace() {
        let tree = stump(0.5, -1.0, 1.0);
        // x routed left (side Neg); the flip must cross the threshold.
        let r = verify_tree_boxes(&tree, 1, &[0.3], Sign::Neg);
        assert!((r - 0.2).abs() < 1e-15);
        assert_eq!(r, verify_tree_linear(&tree, 1, &[0.3], Sign::Neg));
    }

    #[test]
    fn constant_tree_is_unflippable() {
        let tree = stump(0.5, -1.0, -2.0);
        assert_eq!(verify_tree_boxes(&tree, 1, &[0.3], Sign::Neg), f64::INFINITY);
        assert_eq!(verify_tree_linear(&tree, 1, &[0.3], Sign::Neg), f64::INFINITY);
    }

    #[test]
    fn already_misrouted_point_has_zero_distance() {
        let tree = stump(0.5, -1.0, 1.0);
        // x routed right (value +1) while y0 claims Neg-side... the
        // disagreeing leaf contains x, so zero perturbation flips.
        assert_eq!(verify_tree_linear(&tree, 1, &[0.9], Sign::Neg), 0.0);
        assert_eq!(verify_tree_boxes(&tree, 1, &[0.9], Sign::Neg), 0.0);
    }

    #[test]
    fn witness_lands_in_disagreeing_leaf() {
        let tree = stump(0.5, -1.0, 1.0);
        let (r, witness) = single_tree_attack(&tree, 1, &[0.3], Sign::Neg).unwrap();
        let leaf = tree.route(&witness);
        assert_eq!(Sign::of(tree.leaf_value(leaf)), Sign::Pos);
        let moved = (witness[0] - 0.3f64).abs();
        assert!(moved <= r + 1e-12, "moved {moved} vs r {r}");
    }
}
