//! K-partite clique enumeration and the multi-level merge bound.
//!
//! Each tree contributes one part of a K-partite graph whose vertices are
//! leaf regions overlapping the query box and whose edges are nonempty box
//! intersections. Because box intersection satisfies the pairwise-implies-
//! global property, a set of leaves forms a K-clique exactly when one input
//! point reaches all of them, so the worst attainable prediction margin is a
//! maximum over K-cliques. Merging T parts at a time collapses T-cliques
//! into pseudo nodes and yields an anytime sequence of upper bounds that
//! reaches the exact optimum at the top level.

use thiserror::Error;

use crate::geometry::AxisBox;
use crate::single_tree::LeafBoxTable;

#[derive(Debug, Error)]
pub enum CliqueError {
    #[error("tree {tree}: no leaf region overlaps the query box (leaf regions must cover it)")]
    EmptyPart { tree: usize },
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
}

/// Global leaf numbering across an ensemble: tree-major, ascending leaf id
/// within each tree. Pseudo-node values are always re-accumulated in this
/// order so that equal member sets produce bitwise-equal sums regardless of
/// the merge schedule.
#[derive(Debug, Clone)]
pub struct LeafCatalog {
    values: Vec<f64>,
    origins: Vec<(usize, usize)>,
    offsets: Vec<u32>,
}

impl LeafCatalog {
    pub fn new(tables: &[LeafBoxTable]) -> LeafCatalog {
        let mut values = Vec::new();
        let mut origins = Vec::new();
        let mut offsets = Vec::with_capacity(tables.len());
        for (tree, table) in tables.iter().enumerate() {
            offsets.push(values.len() as u32);
            for entry in table.entries() {
                values.push(entry.value);
                origins.push((tree, entry.leaf));
            }
        }
        LeafCatalog {
            values,
            origins,
            offsets,
        }
    }

    /// Catalog over explicit per-part value lists, for graphs built directly
    /// rather than from trees. Node `i` of part `k` is leaf `i` of "tree" `k`.
    pub fn from_part_values(parts: &[Vec<f64>]) -> LeafCatalog {
        let mut values = Vec::new();
        let mut origins = Vec::new();
        let mut offsets = Vec::with_capacity(parts.len());
        for (tree, part) in parts.iter().enumerate() {
            offsets.push(values.len() as u32);
            for (i, &v) in part.iter().enumerate() {
                values.push(v);
                origins.push((tree, i));
            }
        }
        LeafCatalog {
            values,
            origins,
            offsets,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(tree index, leaf node id)` for a global leaf id.
    pub fn origin(&self, global: u32) -> (usize, usize) {
        self.origins[global as usize]
    }

    pub fn tree_offset(&self, tree: usize) -> u32 {
        self.offsets[tree]
    }

    /// Accumulates leaf values in ascending global-id order, starting from 0.
    pub fn sum_in_id_order(&self, members: &[u32]) -> f64 {
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        members
            .iter()
            .fold(0.0, |acc, &id| acc + self.values[id as usize])
    }
}

/// A clique of original leaves collapsed to a single vertex: the member set,
/// the intersection of the member regions (and the query box), and the sum
/// of member leaf values.
#[derive(Debug, Clone)]
pub struct PseudoNode {
    /// Global leaf ids, ascending.
    pub members: Vec<u32>,
    /// Nonempty by construction.
    pub region: AxisBox,
    /// Sum of member leaf values in global-id order.
    pub value: f64,
}

/// One part of the (pseudo-)graph: pseudo nodes spanning the same range of
/// original trees. Nodes within a part never intersect (they refine a
/// partition of the query box), so no edge exists inside a part.
#[derive(Debug, Clone)]
pub struct CliqueSet {
    pub nodes: Vec<PseudoNode>,
    /// Half-open range of original tree indices this part spans.
    pub trees: std::ops::Range<usize>,
}

impl CliqueSet {
    pub fn max_value(&self) -> f64 {
        self.nodes
            .iter()
            .fold(f64::NEG_INFINITY, |m, n| m.max(n.value))
    }
}

/// Builds the level-0 parts: one per tree, holding every leaf whose region
/// overlaps `query` as a singleton pseudo node with region clipped to the
/// query box. Leaf regions of a tree cover every point, so an empty part
/// means a corrupted model and is reported as an error.
pub fn build_level0(
    tables: &[LeafBoxTable],
    catalog: &LeafCatalog,
    query: &AxisBox,
) -> Result<Vec<CliqueSet>, CliqueError> {
    let mut parts = Vec::with_capacity(tables.len());
    for (tree, table) in tables.iter().enumerate() {
        let offset = catalog.tree_offset(tree);
        let mut nodes = Vec::new();
        for (pos, entry) in table.entries().iter().enumerate() {
            if entry.region.is_empty() {
                continue; // unreachable leaf
            }
            if let Some(region) = entry.region.intersect(query)? {
                nodes.push(PseudoNode {
                    members: vec![offset + pos as u32],
                    region,
                    value: entry.value,
                });
            }
        }
        if nodes.is_empty() {
            return Err(CliqueError::EmptyPart { tree });
        }
        parts.push(CliqueSet {
            nodes,
            trees: tree..tree + 1,
        });
    }
    Ok(parts)
}

/// Merges two ascending, disjoint member lists.
fn merge_members(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] < b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

fn intersect_nodes(a: &PseudoNode, b: &PseudoNode, catalog: &LeafCatalog) -> Option<PseudoNode> {
    // Rejected pairs vastly outnumber accepted ones at deep levels; test
    // emptiness without allocating before materializing the intersection.
    if !a
        .region
        .intersects(&b.region)
        .expect("parts share one ensemble dimension")
    {
        return None;
    }
    let region = a
        .region
        .intersect(&b.region)
        .expect("parts share one ensemble dimension")
        .expect("nonempty by the preceding test");
    let members = merge_members(&a.members, &b.members);
    let value = catalog.sum_in_id_order(&members);
    Some(PseudoNode {
        members,
        region,
        value,
    })
}

/// Enumerates all T-cliques of `parts` (T = number of parts) by folding left
/// to right: every accumulated pseudo node is intersected with every node of
/// the next part and nonempty intersections survive. The output's pseudo
/// nodes are exactly the pairwise-compatible leaf tuples of the sub-ensemble.
///
/// An empty result is legal and means no tuple of these parts is jointly
/// reachable.
pub fn clique_enum(parts: &[CliqueSet], catalog: &LeafCatalog) -> CliqueSet {
    clique_enum_capped(parts, catalog, None).expect("uncapped enumeration cannot overflow")
}

/// Pair tests allowed per capped enumeration, as a multiple of the cap.
/// Deep levels of dense graphs reject almost every pair, so bounding only
/// the output size would still admit quadratic blowup in tested pairs.
const WORK_FACTOR: usize = 32;

/// [`clique_enum`] that gives up (returns `None`) as soon as an intermediate
/// or final result would exceed `cap` pseudo nodes, or the enumeration has
/// tested more than `32 * cap` candidate pairs.
pub fn clique_enum_capped(
    parts: &[CliqueSet],
    catalog: &LeafCatalog,
    cap: Option<usize>,
) -> Option<CliqueSet> {
    assert!(!parts.is_empty(), "clique_enum needs at least one part");
    let trees = parts[0].trees.start..parts[parts.len() - 1].trees.end;
    let work_budget = cap.map(|c| c.saturating_mul(WORK_FACTOR));
    let mut work = 0usize;
    let mut acc = parts[0].nodes.clone();
    for part in &parts[1..] {
        if let Some(budget) = work_budget {
            work = work.saturating_add(acc.len().saturating_mul(part.nodes.len()));
            if work > budget {
                return None;
            }
        }
        let mut next = Vec::new();
        for a in &acc {
            for b in &part.nodes {
                if let Some(node) = intersect_nodes(a, b, catalog) {
                    next.push(node);
                    if let Some(cap) = cap {
                        if next.len() > cap {
                            return None;
                        }
                    }
                }
            }
        }
        acc = next;
        if acc.is_empty() {
            break;
        }
    }
    Some(CliqueSet { nodes: acc, trees })
}

/// How the final bound of [`multi_level_bound`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundMethod {
    /// Sum of per-part maxima (fully-connected relaxation).
    Naive,
    /// Best path through consecutive-part edges.
    Dp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResultMethod {
    Naive,
    Dp,
    /// A single part remained (or emptiness was proven): the bound equals
    /// the exact optimum of the pruned graph.
    Exact,
}

/// An upper bound on the best attainable value sum, with provenance.
#[derive(Debug, Clone)]
pub struct BoundResult {
    pub upper_bound: f64,
    pub method: ResultMethod,
    pub levels_completed: usize,
    pub nodes_at_final_level: usize,
    pub capped: bool,
}

/// Sum over parts of the maximum pseudo-node value. An empty part admits no
/// tuple at all, so the sum collapses to `-inf`.
pub fn bound_naive(parts: &[CliqueSet]) -> f64 {
    let mut total = 0.0;
    for part in parts {
        let m = part.max_value();
        if m == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        total += m;
    }
    total
}

/// Max-valued path touching one node per part, where consecutive choices
/// must have intersecting regions. Edges are tested on demand; nodes with no
/// edge into the previous part are unreachable and drop out as `-inf`.
pub fn bound_dp(parts: &[CliqueSet]) -> f64 {
    let mut prev: Vec<f64> = Vec::new();
    let mut prev_nodes: &[PseudoNode] = &[];
    for (k, part) in parts.iter().enumerate() {
        let mut cur = Vec::with_capacity(part.nodes.len());
        for node in &part.nodes {
            let d = if k == 0 {
                node.value
            } else {
                let mut best = f64::NEG_INFINITY;
                for (j, other) in prev_nodes.iter().enumerate() {
                    if prev[j] > best
                        && other
                            .region
                            .intersects(&node.region)
                            .expect("parts share one ensemble dimension")
                    {
                        best = prev[j];
                    }
                }
                node.value + best
            };
            cur.push(d);
        }
        prev = cur;
        prev_nodes = &part.nodes;
    }
    prev.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// Number of merge levels needed to collapse `parts` parts into one.
pub fn levels_to_exact(parts: usize, group: usize) -> usize {
    debug_assert!(group >= 2);
    let mut levels = 0;
    let mut count = parts.max(1);
    while count > 1 {
        count = count.div_ceil(group);
        levels += 1;
    }
    levels
}

/// The multi-level merge: for `levels` rounds, consecutive groups of
/// `group_size` parts are replaced by their clique enumeration, then the
/// requested single-level bound is applied to whatever parts remain.
///
/// The bound is anytime-valid: if any enumeration at a level would exceed
/// `cap` pseudo nodes, that whole level is abandoned and the bound is taken
/// at the last completed level (`capped` is set). If the merge reaches a
/// single part the maximum pseudo-node value is the exact optimum; if a
/// merged part comes out empty no valid tuple exists at all and the result
/// is exactly `-inf`. `levels` beyond the point where one part remains are
/// no-ops.
pub fn multi_level_bound(
    parts: Vec<CliqueSet>,
    catalog: &LeafCatalog,
    group_size: usize,
    levels: usize,
    cap: Option<usize>,
    method: BoundMethod,
) -> BoundResult {
    assert!(group_size >= 2, "group size must be at least 2");
    let mut current = parts;
    let mut completed = 0;
    let mut capped = false;

    let target = levels.min(levels_to_exact(current.len(), group_size));
    'levels: for level in 1..=target {
        let mut merged = Vec::with_capacity(current.len().div_ceil(group_size));
        for group in current.chunks(group_size) {
            match clique_enum_capped(group, catalog, cap) {
                Some(part) => merged.push(part),
                None => {
                    capped = true;
                    break 'levels;
                }
            }
        }
        completed = level;
        let nodes_total: usize = merged.iter().map(|p| p.nodes.len()).sum();
        if merged.iter().any(|p| p.nodes.is_empty()) {
            return BoundResult {
                upper_bound: f64::NEG_INFINITY,
                method: ResultMethod::Exact,
                levels_completed: completed,
                nodes_at_final_level: nodes_total,
                capped: false,
            };
        }
        current = merged;
    }

    let nodes_at_final_level = current.iter().map(|p| p.nodes.len()).sum();
    let (upper_bound, method) = if current.len() == 1 {
        (current[0].max_value(), ResultMethod::Exact)
    } else {
        match method {
            BoundMethod::Naive => (bound_naive(&current), ResultMethod::Naive),
            BoundMethod::Dp => (bound_dp(&current), ResultMethod::Dp),
        }
    };
    BoundResult {
        upper_bound,
        method,
        levels_completed: completed,
        nodes_at_final_level,
        capped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Interval;
    use crate::model::{Tree, TreeNode};
    use crate::single_tree::compute_leaf_boxes;

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

    fn prepared(trees: &[Tree], dim: usize) -> (Vec<LeafBoxTable>, LeafCatalog) {
        let tables: Vec<_> = trees.iter().map(|t| compute_leaf_boxes(t, dim)).collect();
        let catalog = LeafCatalog::new(&tables);
        (tables, catalog)
    }

    #[test]
    fn universal_query_keeps_every_leaf() {
        let trees = vec![stump(0.5, -1.0, 1.0), stump(0.7, 2.0, -2.0)];
        let (tables, catalog) = prepared(&trees, 1);
        let parts = build_level0(&tables, &catalog, &AxisBox::universe(1)).unwrap();
        assert_eq!(parts.len(), 2);
        assert!(parts.iter().all(|p| p.nodes.len() == 2));
    }

    #[test]
    fn small_ball_keeps_only_near_leaves() {
        let trees = vec![stump(0.5, -1.0, 1.0)];
        let (tables, catalog) = prepared(&trees, 1);
        // x = 0.3, eps = 0.1: the right half-space sits at distance 0.2.
        let query = AxisBox::ball_hull(&[0.3], 0.1);
        let parts = build_level0(&tables, &catalog, &query).unwrap();
        assert_eq!(parts[0].nodes.len(), 1);
        assert_eq!(parts[0].nodes[0].value, -1.0);
    }

    #[test]
    fn single_part_enum_is_identity() {
        let trees = vec![stump(0.5, -1.0, 1.0)];
        let (tables, catalog) = prepared(&trees, 1);
        let parts = build_level0(&tables, &catalog, &AxisBox::universe(1)).unwrap();
        let out = clique_enum(&parts, &catalog);
        assert_eq!(out.nodes.len(), 2);
        assert_eq!(out.trees, 0..1);
    }

    #[test]
    fn disjoint_features_give_complete_bipartite() {
        let t0 = stump(0.5, -1.0, 1.0); // splits f0
        let t1 = Tree::new(
            vec![
                TreeNode::Internal {
                    feature: 1,
                    threshold: 0.5,
                    left: 1,
                    right: 2,
                },
                TreeNode::Leaf { value: 0.25 },
                TreeNode::Leaf { value: 0.5 },
            ],
            0,
        )
        .unwrap();
        let (tables, catalog) = prepared(&[t0, t1], 2);
        let parts = build_level0(&tables, &catalog, &AxisBox::universe(2)).unwrap();
        let out = clique_enum(&parts, &catalog);
        assert_eq!(out.nodes.len(), 4);
        // Every pair value is the sum of its members.
        for node in &out.nodes {
            assert_eq!(node.members.len(), 2);
            assert_eq!(node.value, catalog.sum_in_id_order(&node.members));
        }
    }

    #[test]
    fn naive_bound_sums_part_maxima() {
        let trees = vec![stump(0.5, 2.0, 1.0), stump(0.5, -1.0, -3.0), stump(0.5, 0.5, 0.25)];
        let (tables, catalog) = prepared(&trees, 1);
        let parts = build_level0(&tables, &catalog, &AxisBox::universe(1)).unwrap();
        assert_eq!(bound_naive(&parts), 2.0 + -1.0 + 0.5);
    }

    #[test]
    fn dp_equals_naive_when_fully_connected() {
        // Trees on disjoint features: all consecutive edges present.
        let t0 = stump(0.5, -1.0, 1.0);
        let t1 = Tree::new(
            vec![
                TreeNode::Internal {
                    feature: 1,
                    threshold: 0.5,
                    left: 1,
                    right: 2,
                },
                TreeNode::Leaf { value: 0.25 },
                TreeNode::Leaf { value: 0.5 },
            ],
            0,
        )
        .unwrap();
        let (tables, catalog) = prepared(&[t0, t1], 2);
        let parts = build_level0(&tables, &catalog, &AxisBox::universe(2)).unwrap();
        assert_eq!(bound_dp(&parts), bound_naive(&parts));
    }

    #[test]
    fn dp_respects_missing_edges() {
        // Two stumps on the same feature with incompatible halves: the best
        // combination (left of 0.3 => -1, right of 0.3 => +1 on tree 2) is
        // constrained by actual overlap.
        let t0 = stump(0.3, 0.0, 5.0);
        let t1 = stump(0.3, 4.0, 0.0);
        let (tables, catalog) = prepared(&[t0, t1], 1);
        let parts = build_level0(&tables, &catalog, &AxisBox::universe(1)).unwrap();
        // naive pretends 5 + 4 = 9 is reachable; dp knows the halves align.
        assert_eq!(bound_naive(&parts), 9.0);
        assert_eq!(bound_dp(&parts), 5.0);
    }

    #[test]
    fn single_tree_bound_is_exact() {
        let trees = vec![stump(0.5, -1.0, 1.0)];
        let (tables, catalog) = prepared(&trees, 1);
        let parts = build_level0(&tables, &catalog, &AxisBox::universe(1)).unwrap();
        for (group, levels) in [(2, 0), (2, 3), (5, 1)] {
            let r = multi_level_bound(
                parts.clone(),
                &catalog,
                group,
                levels,
                None,
                BoundMethod::Naive,
            );
            assert_eq!(r.method, ResultMethod::Exact);
            assert_eq!(r.upper_bound, 1.0);
        }
    }

    #[test]
    fn full_merge_is_exact_on_incompatible_stumps() {
        let t0 = stump(0.3, 0.0, 5.0);
        let t1 = stump(0.3, 4.0, 0.0);
        let (tables, catalog) = prepared(&[t0, t1], 1);
        let parts = build_level0(&tables, &catalog, &AxisBox::universe(1)).unwrap();
        let r = multi_level_bound(parts, &catalog, 2, 1, None, BoundMethod::Naive);
        assert_eq!(r.method, ResultMethod::Exact);
        assert_eq!(r.upper_bound, 5.0);
        assert_eq!(r.levels_completed, 1);
    }

    #[test]
    fn cap_abandons_the_level_but_keeps_a_valid_bound() {
        let t0 = stump(0.3, 0.0, 5.0);
        let t1 = stump(0.3, 4.0, 0.0);
        let (tables, catalog) = prepared(&[t0, t1], 1);
        let parts = build_level0(&tables, &catalog, &AxisBox::universe(1)).unwrap();
        let r = multi_level_bound(parts, &catalog, 2, 1, Some(1), BoundMethod::Naive);
        assert!(r.capped);
        assert_eq!(r.levels_completed, 0);
        assert_eq!(r.upper_bound, 9.0); // naive bound at level 0
    }

    #[test]
    fn empty_merge_means_no_valid_tuple() {
        // A consistent model never produces an empty part at level 0, so
        // fabricate two single-node parts with disjoint regions and check
        // that the empty merge surfaces as an exact -inf.
        let t0 = stump(0.2, -1.0, 1.0);
        let t1 = stump(0.8, 1.0, -1.0);
        let (tables, catalog) = prepared(&[t0, t1], 1);
        let query = AxisBox::new(1, [(0, Interval::new(0.3, 0.6))]).unwrap();
        let mut parts = build_level0(&tables, &catalog, &query).unwrap();
        parts[0].nodes[0].region = AxisBox::new(1, [(0, Interval::new(0.0, 0.1))]).unwrap();
        parts[1].nodes[0].region = AxisBox::new(1, [(0, Interval::new(0.5, 0.6))]).unwrap();
        let r = multi_level_bound(parts, &catalog, 2, 1, None, BoundMethod::Naive);
        assert_eq!(r.upper_bound, f64::NEG_INFINITY);
        assert_eq!(r.method, ResultMethod::Exact);
    }

    #[test]
    fn levels_to_exact_matches_ceil_log() {
        assert_eq!(levels_to_exact(1, 2), 0);
        assert_eq!(levels_to_exact(2, 2), 1);
        assert_eq!(levels_to_exact(20, 2), 5);
        assert_eq!(levels_to_exact(20, 3), 3);
        assert_eq!(levels_to_exact(20, 4), 3);
    }
}
