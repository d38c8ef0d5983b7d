//! Decision trees and tree ensembles.
//!
//! Routing convention: an internal node with feature `t` and threshold `eta`
//! sends `x` to its left child iff `x[t] <= eta`. XGBoost dumps route on
//! strict `<` instead; the parser keeps the stored thresholds and adopts the
//! `<=` rule, which changes behavior only for inputs exactly equal to a
//! threshold (see [`Ensemble::notes`]).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type NodeId = usize;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model JSON parse error: {0}")]
    Json(String),
    #[error("{location}: {message}")]
    Schema { location: String, message: String },
    #[error("{0}")]
    Invalid(String),
}

impl ModelError {
    fn schema(location: impl Into<String>, message: impl Into<String>) -> ModelError {
        ModelError::Schema {
            location: location.into(),
            message: message.into(),
        }
    }
}

/// One node of a decision tree, stored in an arena indexed by [`NodeId`].
#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Internal {
        feature: usize,
        threshold: f64,
        left: NodeId,
        right: NodeId,
    },
    Leaf {
        value: f64,
    },
}

/// A binary decision tree over an arena of nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<TreeNode>,
    root: NodeId,
}

impl Tree {
    /// Validates the arena: ids in range, every node reachable from the root
    /// exactly once (tree shape, no cycles), finite thresholds and values.
    pub fn new(nodes: Vec<TreeNode>, root: NodeId) -> Result<Tree, ModelError> {
        if nodes.is_empty() {
            return Err(ModelError::Invalid("tree has no nodes".into()));
        }
        if root >= nodes.len() {
            return Err(ModelError::Invalid(format!(
                "root id {root} out of range ({} nodes)",
                nodes.len()
            )));
        }
        let mut seen = vec![false; nodes.len()];
        let mut stack = vec![root];
        let mut visited = 0usize;
        while let Some(id) = stack.pop() {
            if seen[id] {
                return Err(ModelError::Invalid(format!(
                    "node {id} is reachable twice (not a tree)"
                )));
            }
            seen[id] = true;
            visited += 1;
            match &nodes[id] {
                TreeNode::Leaf { value } => {
                    if !value.is_finite() {
                        return Err(ModelError::Invalid(format!(
                            "node {id}: leaf value must be finite"
                        )));
                    }
                }
                TreeNode::Internal {
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    if !threshold.is_finite() {
                        return Err(ModelError::Invalid(format!(
                            "node {id}: split threshold must be finite"
                        )));
                    }
                    for child in [*left, *right] {
                        if child >= nodes.len() {
                            return Err(ModelError::Invalid(format!(
                                "node {id}: child id {child} out of range"
                            )));
                        }
                        stack.push(child);
                    }
                }
            }
        }
        if visited != nodes.len() {
            return Err(ModelError::Invalid(format!(
                "{} of {} nodes unreachable from root",
                nodes.len() - visited,
                nodes.len()
            )));
        }
        Ok(Tree { nodes, root })
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    /// Leaf ids in ascending order.
    pub fn leaf_ids(&self) -> Vec<NodeId> {
        (0..self.nodes.len())
            .filter(|&id| matches!(self.nodes[id], TreeNode::Leaf { .. }))
            .collect()
    }

    pub fn leaf_value(&self, id: NodeId) -> f64 {
        match self.nodes[id] {
            TreeNode::Leaf { value } => value,
            _ => panic!("node {id} is not a leaf"),
        }
    }

    /// Largest feature index used by any split, if the tree has one.
    pub fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                TreeNode::Internal { feature, .. } => Some(*feature),
                _ => None,
            })
            .max()
    }

    /// Routes `x` from the root to a leaf: left iff `x[feature] <= threshold`.
    pub fn route(&self, x: &[f64]) -> NodeId {
        let mut id = self.root;
        loop {
            match &self.nodes[id] {
                TreeNode::Leaf { .. } => return id,
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    id = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }
}

/// An ordered collection of trees with multiclass grouping.
///
/// Binary models (`num_classes == 2`) predict `sign(sum of leaf values +
/// base_margin)`, with ties at exactly zero resolved to the negative class.
/// Multiclass models predict `argmax_c` of the per-class sums.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    trees: Vec<Tree>,
    dim: usize,
    num_classes: usize,
    class_of_tree: Vec<usize>,
    base_margin: f64,
    notes: Vec<String>,
}

impl Ensemble {
    pub fn new(
        trees: Vec<Tree>,
        dim: usize,
        num_classes: usize,
        class_of_tree: Vec<usize>,
        base_margin: f64,
    ) -> Result<Ensemble, ModelError> {
        if trees.is_empty() {
            return Err(ModelError::Invalid(
                "ensemble must contain at least one tree".into(),
            ));
        }
        if num_classes < 2 {
            return Err(ModelError::Invalid(format!(
                "num_classes must be >= 2, got {num_classes}"
            )));
        }
        if class_of_tree.len() != trees.len() {
            return Err(ModelError::Invalid(format!(
                "class_of_tree has {} entries for {} trees",
                class_of_tree.len(),
                trees.len()
            )));
        }
        if !base_margin.is_finite() {
            return Err(ModelError::Invalid("base_margin must be finite".into()));
        }
        for (k, tree) in trees.iter().enumerate() {
            if let Some(f) = tree.max_feature() {
                if f >= dim {
                    let id = (0..tree.node_count())
                        .find(|&id| {
                            matches!(tree.node(id), TreeNode::Internal { feature, .. } if *feature == f)
                        })
                        .unwrap_or(0);
                    return Err(ModelError::Invalid(format!(
                        "tree {k} node {id}: feature {f} out of range for dim {dim}"
                    )));
                }
            }
            if class_of_tree[k] >= num_classes {
                return Err(ModelError::Invalid(format!(
                    "tree {k}: class {} out of range for {num_classes} classes",
                    class_of_tree[k]
                )));
            }
        }
        Ok(Ensemble {
            trees,
            dim,
            num_classes,
            class_of_tree,
            base_margin,
            notes: Vec::new(),
        })
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn num_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn is_binary(&self) -> bool {
        self.num_classes == 2
    }

    pub fn class_of_tree(&self, k: usize) -> usize {
        self.class_of_tree[k]
    }

    pub fn base_margin(&self) -> f64 {
        self.base_margin
    }

    /// Parser-recorded conventions worth surfacing in reports.
    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    /// Raw margin of a binary model: sum of routed leaf values plus
    /// `base_margin`, in tree order.
    pub fn margin(&self, x: &[f64]) -> f64 {
        let sum = self
            .trees
            .iter()
            .fold(0.0, |acc, tree| acc + tree.leaf_value(tree.route(x)));
        sum + self.base_margin
    }

    /// Per-class score sums (without `base_margin`, which is uniform across
    /// classes and cancels in comparisons).
    pub fn class_scores(&self, x: &[f64]) -> Vec<f64> {
        let mut scores = vec![0.0; self.num_classes];
        for (k, tree) in self.trees.iter().enumerate() {
            scores[self.class_of_tree[k]] += tree.leaf_value(tree.route(x));
        }
        scores
    }

    /// Predicted class: binary sign (`+1 -> 1`, otherwise `0`) or argmax over
    /// class scores with ties going to the lowest class index.
    pub fn predict(&self, x: &[f64]) -> usize {
        if self.is_binary() {
            usize::from(self.margin(x) > 0.0)
        } else {
            let scores = self.class_scores(x);
            let mut best = 0;
            for (c, &s) in scores.iter().enumerate() {
                if s > scores[best] {
                    best = c;
                }
            }
            best
        }
    }

    /// Same ensemble with every leaf value and the base margin negated.
    pub fn negated(&self) -> Ensemble {
        let trees = self
            .trees
            .iter()
            .map(|tree| {
                let nodes = tree
                    .nodes
                    .iter()
                    .map(|n| match n {
                        TreeNode::Leaf { value } => TreeNode::Leaf { value: -value },
                        other => other.clone(),
                    })
                    .collect();
                Tree {
                    nodes,
                    root: tree.root,
                }
            })
            .collect();
        Ensemble {
            trees,
            dim: self.dim,
            num_classes: self.num_classes,
            class_of_tree: self.class_of_tree.clone(),
            base_margin: -self.base_margin,
            notes: self.notes.clone(),
        }
    }

    /// Reduces a multiclass model to the binary question "can class
    /// `target_class` overtake class `true_class`".
    ///
    /// The extracted ensemble holds the `true_class` trees unchanged and the
    /// `target_class` trees with negated leaf values, so its margin at any
    /// point equals `score_true(x) - score_target(x)`: positive while the
    /// original model prefers `true_class`, and the attack succeeds once it
    /// can be driven to zero or below.
    pub fn extract_binary_pair(
        &self,
        true_class: usize,
        target_class: usize,
    ) -> Result<Ensemble, ModelError> {
        if self.num_classes <= 2 {
            return Err(ModelError::Invalid(
                "extract_binary_pair requires a multiclass ensemble".into(),
            ));
        }
        if true_class == target_class {
            return Err(ModelError::Invalid(format!(
                "true class and target class are both {true_class}"
            )));
        }
        for c in [true_class, target_class] {
            if c >= self.num_classes {
                return Err(ModelError::Invalid(format!(
                    "class {c} out of range for {} classes",
                    self.num_classes
                )));
            }
        }
        let mut trees = Vec::new();
        for (k, tree) in self.trees.iter().enumerate() {
            if self.class_of_tree[k] == true_class {
                trees.push(tree.clone());
            }
        }
        for (k, tree) in self.trees.iter().enumerate() {
            if self.class_of_tree[k] == target_class {
                let nodes = tree
                    .nodes
                    .iter()
                    .map(|n| match n {
                        TreeNode::Leaf { value } => TreeNode::Leaf { value: -value },
                        other => other.clone(),
                    })
                    .collect();
                trees.push(Tree {
                    nodes,
                    root: tree.root,
                });
            }
        }
        let count = trees.len();
        Ensemble::new(trees, self.dim, 2, vec![0; count], 0.0)
    }
}

// ---------------------------------------------------------------------------
// Native JSON schema
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct NativeModel {
    dim: usize,
    num_classes: usize,
    #[serde(default)]
    base_margin: f64,
    trees: Vec<NativeTree>,
}

#[derive(Serialize, Deserialize)]
struct NativeTree {
    class: usize,
    root: usize,
    nodes: Vec<NativeNode>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum NativeNode {
    Internal {
        id: usize,
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        id: usize,
        leaf: f64,
    },
}

impl Ensemble {
    /// Parses the native model schema. Errors carry a JSON-pointer-style
    /// location for schema violations.
    pub fn parse_native_json(bytes: &[u8]) -> Result<Ensemble, ModelError> {
        let mut de = serde_json::Deserializer::from_slice(bytes);
        let model: NativeModel = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            ModelError::schema(format!("/{}", e.path()), e.inner().to_string())
        })?;

        let mut trees = Vec::with_capacity(model.trees.len());
        let mut classes = Vec::with_capacity(model.trees.len());
        for (k, native) in model.trees.into_iter().enumerate() {
            // Node ids are arbitrary in the file; remap onto arena indices.
            let mut id_to_idx = BTreeMap::new();
            for (idx, node) in native.nodes.iter().enumerate() {
                let id = match node {
                    NativeNode::Internal { id, .. } | NativeNode::Leaf { id, .. } => *id,
                };
                if id_to_idx.insert(id, idx).is_some() {
                    return Err(ModelError::schema(
                        format!("/trees/{k}/nodes"),
                        format!("duplicate node id {id}"),
                    ));
                }
            }
            let lookup = |id: usize, location: &str| {
                id_to_idx.get(&id).copied().ok_or_else(|| {
                    ModelError::schema(location.to_string(), format!("unknown node id {id}"))
                })
            };
            let mut nodes = Vec::with_capacity(native.nodes.len());
            for (idx, node) in native.nodes.iter().enumerate() {
                let location = format!("/trees/{k}/nodes/{idx}");
                nodes.push(match node {
                    NativeNode::Leaf { leaf, .. } => TreeNode::Leaf { value: *leaf },
                    NativeNode::Internal {
                        feature,
                        threshold,
                        left,
                        right,
                        ..
                    } => TreeNode::Internal {
                        feature: *feature,
                        threshold: *threshold,
                        left: lookup(*left, &location)?,
                        right: lookup(*right, &location)?,
                    },
                });
            }
            let root = lookup(native.root, &format!("/trees/{k}/root"))?;
            trees.push(Tree::new(nodes, root)?);
            classes.push(native.class);
        }
        Ensemble::new(trees, model.dim, model.num_classes, classes, model.base_margin)
    }

    /// Emits the native model schema; `parse_native_json` round-trips it.
    pub fn to_native_json(&self) -> Vec<u8> {
        let trees = self
            .trees
            .iter()
            .enumerate()
            .map(|(k, tree)| NativeTree {
                class: self.class_of_tree[k],
                root: tree.root,
                nodes: tree
                    .nodes
                    .iter()
                    .enumerate()
                    .map(|(id, node)| match node {
                        TreeNode::Leaf { value } => NativeNode::Leaf { id, leaf: *value },
                        TreeNode::Internal {
                            feature,
                            threshold,
                            left,
                            right,
                        } => NativeNode::Internal {
                            id,
                            feature: *feature,
                            threshold: *threshold,
                            left: *left,
                            right: *right,
                        },
                    })
                    .collect(),
            })
            .collect();
        let model = NativeModel {
            dim: self.dim,
            num_classes: self.num_classes,
            base_margin: self.base_margin,
            trees,
        };
        serde_json::to_vec_pretty(&model).expect("native model serialization cannot fail")
    }
}

// ---------------------------------------------------------------------------
// XGBoost JSON dump (array-of-trees form)
// ---------------------------------------------------------------------------

impl Ensemble {
    /// Parses an XGBoost JSON model dump (the array-of-trees form produced by
    /// `Booster.get_dump(dump_format="json")`).
    ///
    /// XGBoost sends `x` to the `yes` child when `x < split_condition`; the
    /// stored threshold is kept and the `yes` child becomes the left (`<=`)
    /// child, so decisions match XGBoost everywhere except for inputs exactly
    /// equal to a threshold. `missing` directions are ignored (inputs are
    /// assumed dense) and categorical splits are rejected.
    ///
    /// `dim` defaults to the largest split feature index plus one; pass it
    /// explicitly when the data has trailing unused features. Trees are
    /// assigned to classes round-robin (`tree k` -> `k % num_classes`) as in
    /// XGBoost's multiclass layout; for binary models every tree contributes
    /// to the single margin.
    pub fn parse_xgboost_json(
        bytes: &[u8],
        dim: Option<usize>,
        num_classes: usize,
    ) -> Result<Ensemble, ModelError> {
        let value: serde_json::Value =
            serde_json::from_slice(bytes).map_err(|e| ModelError::Json(e.to_string()))?;
        let tree_values = value
            .as_array()
            .ok_or_else(|| ModelError::schema("/", "expected a JSON array of trees"))?;
        if tree_values.is_empty() {
            return Err(ModelError::Invalid(
                "ensemble must contain at least one tree".into(),
            ));
        }

        let mut trees = Vec::with_capacity(tree_values.len());
        for (k, tree_value) in tree_values.iter().enumerate() {
            let mut nodes = Vec::new();
            let root = walk_xgb_node(tree_value, &format!("/{k}"), &mut nodes)?;
            trees.push(Tree::new(nodes, root)?);
        }

        let max_feature = trees.iter().filter_map(Tree::max_feature).max();
        let dim = match dim {
            Some(d) => d,
            None => max_feature.map_or(1, |f| f + 1),
        };
        let classes = if num_classes > 2 {
            (0..trees.len()).map(|k| k % num_classes).collect()
        } else {
            vec![0; trees.len()]
        };
        let mut ensemble = Ensemble::new(trees, dim, num_classes.max(2), classes, 0.0)?;
        ensemble.notes.push(
            "xgboost split rule `x < threshold -> yes` mapped to `x <= threshold -> left`; \
             decisions differ only for inputs exactly equal to a threshold"
                .into(),
        );
        Ok(ensemble)
    }
}

/// Recursively converts one XGBoost dump node, returning its arena id.
fn walk_xgb_node(
    value: &serde_json::Value,
    path: &str,
    nodes: &mut Vec<TreeNode>,
) -> Result<NodeId, ModelError> {
    let obj = value
        .as_object()
        .ok_or_else(|| ModelError::schema(path, "expected a node object"))?;

    if let Some(leaf) = obj.get("leaf") {
        let value = leaf
            .as_f64()
            .ok_or_else(|| ModelError::schema(format!("{path}/leaf"), "expected a number"))?;
        nodes.push(TreeNode::Leaf { value });
        return Ok(nodes.len() - 1);
    }

    let feature = parse_xgb_split(
        obj.get("split")
            .ok_or_else(|| ModelError::schema(path, "internal node missing `split`"))?,
        path,
    )?;
    let threshold = obj
        .get("split_condition")
        .and_then(serde_json::Value::as_f64)
        .ok_or_else(|| ModelError::schema(path, "internal node missing numeric `split_condition`"))?;
    let yes = obj
        .get("yes")
        .and_then(serde_json::Value::as_i64)
        .ok_or_else(|| ModelError::schema(path, "internal node missing `yes`"))?;
    let no = obj
        .get("no")
        .and_then(serde_json::Value::as_i64)
        .ok_or_else(|| ModelError::schema(path, "internal node missing `no`"))?;
    let children = obj
        .get("children")
        .and_then(serde_json::Value::as_array)
        .ok_or_else(|| ModelError::schema(path, "internal node missing `children`"))?;

    let find_child = |id: i64| {
        children.iter().position(|c| {
            c.get("nodeid").and_then(serde_json::Value::as_i64) == Some(id)
        })
    };
    let yes_idx = find_child(yes)
        .ok_or_else(|| ModelError::schema(path, format!("`yes` child {yes} not in children")))?;
    let no_idx = find_child(no)
        .ok_or_else(|| ModelError::schema(path, format!("`no` child {no} not in children")))?;

    // Reserve the slot before recursing so parents precede children.
    let id = nodes.len();
    nodes.push(TreeNode::Leaf { value: 0.0 });
    let left = walk_xgb_node(&children[yes_idx], &format!("{path}/children/{yes_idx}"), nodes)?;
    let right = walk_xgb_node(&children[no_idx], &format!("{path}/children/{no_idx}"), nodes)?;
    nodes[id] = TreeNode::Internal {
        feature,
        threshold,
        left,
        right,
    };
    Ok(id)
}

/// `split` is either an integer index or a feature name of the form `f<idx>`.
fn parse_xgb_split(value: &serde_json::Value, path: &str) -> Result<usize, ModelError> {
    if let Some(idx) = value.as_u64() {
        return Ok(idx as usize);
    }
    if let Some(name) = value.as_str() {
        let digits = name.strip_prefix('f').unwrap_or(name);
        if let Ok(idx) = digits.parse::<usize>() {
            return Ok(idx);
        }
        return Err(ModelError::schema(
            format!("{path}/split"),
            format!("unsupported split feature `{name}` (expected `f<idx>` or an integer; categorical splits are not supported)"),
        ));
    }
    Err(ModelError::schema(
        format!("{path}/split"),
        "expected an integer or `f<idx>` string",
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn leaf_tree(value: f64) -> Tree {
        Tree::new(vec![TreeNode::Leaf { value }], 0).unwrap()
    }

    pub(crate) fn stump(feature: usize, threshold: f64, left: f64, right: f64) -> Tree {
        Tree::new(
            vec![
                TreeNode::Internal {
                    feature,
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
    fn route_leaf_only_tree() {
        let t = leaf_tree(0.3);
        assert_eq!(t.route(&[0.0]), 0);
        assert_eq!(t.route(&[123.0]), 0);
    }

    #[test]
    fn route_boundary_goes_left() {
        let t = stump(0, 0.5, -1.0, 1.0);
        assert_eq!(t.route(&[0.5]), 1);
        assert_eq!(t.route(&[0.500001]), 2);
    }

    #[test]
    fn parse_xgboost_leaf_only_dump() {
        let e = Ensemble::parse_xgboost_json(br#"[{"leaf": 0.3}]"#, None, 2).unwrap();
        assert_eq!(e.num_trees(), 1);
        assert_eq!(e.margin(&[0.0]), 0.3);
        assert_eq!(e.margin(&[5.0]), 0.3);
    }

    #[test]
    fn parse_xgboost_depth_one_dump() {
        let dump = br#"[{
            "nodeid": 0, "split": "f0", "split_condition": 0.5, "yes": 1, "no": 2, "missing": 1,
            "children": [
                {"nodeid": 1, "leaf": -1.0},
                {"nodeid": 2, "leaf": 1.0}
            ]
        }]"#;
        let e = Ensemble::parse_xgboost_json(dump, None, 2).unwrap();
        assert_eq!(e.num_trees(), 1);
        assert_eq!(e.dim(), 1);
        let t = &e.trees()[0];
        match t.node(t.root()) {
            TreeNode::Internal { feature, threshold, .. } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 0.5);
            }
            _ => panic!("expected an internal root"),
        }
        assert_eq!(e.margin(&[0.4]), -1.0);
        assert_eq!(e.margin(&[0.6]), 1.0);
        assert!(!e.notes().is_empty());
    }

    #[test]
    fn parse_xgboost_integer_split_key() {
        let dump = br#"[{
            "nodeid": 0, "split": 3, "split_condition": 0.25, "yes": 1, "no": 2,
            "children": [{"nodeid": 1, "leaf": -0.5}, {"nodeid": 2, "leaf": 0.5}]
        }]"#;
        let e = Ensemble::parse_xgboost_json(dump, None, 2).unwrap();
        assert_eq!(e.dim(), 4);
    }

    #[test]
    fn parse_xgboost_rejects_malformed_node() {
        let dump = br#"[{"nodeid": 0, "split": "f0", "yes": 1, "no": 2, "children": [
            {"nodeid": 1, "leaf": 0.0}, {"nodeid": 2, "leaf": 0.0}]}]"#;
        let err = Ensemble::parse_xgboost_json(dump, None, 2).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("/0"), "error should carry the node path: {msg}");
        assert!(msg.contains("split_condition"));
    }

    #[test]
    fn parse_xgboost_rejects_categorical_split_names() {
        let dump = br#"[{
            "nodeid": 0, "split": "color", "split_condition": 1.0, "yes": 1, "no": 2,
            "children": [{"nodeid": 1, "leaf": 0.0}, {"nodeid": 2, "leaf": 0.0}]
        }]"#;
        assert!(Ensemble::parse_xgboost_json(dump, None, 2).is_err());
    }

    #[test]
    fn native_round_trip() {
        let e = Ensemble::new(
            vec![stump(0, 0.5, -1.0, 1.0), leaf_tree(0.25)],
            3,
            2,
            vec![0, 0],
            0.125,
        )
        .unwrap();
        let bytes = e.to_native_json();
        let parsed = Ensemble::parse_native_json(&bytes).unwrap();
        assert_eq!(parsed, e);
    }

    #[test]
    fn native_rejects_empty_tree_list() {
        let err = Ensemble::parse_native_json(
            br#"{"dim": 3, "num_classes": 2, "base_margin": 0.0, "trees": []}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("at least one tree"));
    }

    #[test]
    fn native_rejects_out_of_range_feature() {
        let json = br#"{"dim": 5, "num_classes": 2, "base_margin": 0.0, "trees": [
            {"class": 0, "root": 0, "nodes": [
                {"id": 0, "feature": 7, "threshold": 0.5, "left": 1, "right": 2},
                {"id": 1, "leaf": -1.0},
                {"id": 2, "leaf": 1.0}
            ]}
        ]}"#;
        let err = Ensemble::parse_native_json(json).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("feature 7"), "{msg}");
        assert!(msg.contains("node 0"), "{msg}");
    }

    #[test]
    fn extract_binary_pair_negates_target_group() {
        let e = Ensemble::new(
            vec![leaf_tree(2.0), leaf_tree(1.0), leaf_tree(0.5)],
            1,
            3,
            vec![0, 1, 2],
            0.0,
        )
        .unwrap();

        let pair = e.extract_binary_pair(0, 1).unwrap();
        let values: Vec<f64> = pair.trees().iter().map(|t| t.leaf_value(t.root())).collect();
        assert_eq!(values, vec![2.0, -1.0]);

        let pair = e.extract_binary_pair(0, 2).unwrap();
        let values: Vec<f64> = pair.trees().iter().map(|t| t.leaf_value(t.root())).collect();
        assert_eq!(values, vec![2.0, -0.5]);

        assert!(e.extract_binary_pair(1, 1).is_err());
        assert!(e.extract_binary_pair(0, 9).is_err());
    }

    #[test]
    fn binary_prediction_sign_convention() {
        let e = Ensemble::new(vec![stump(0, 0.5, -1.0, 1.0)], 1, 2, vec![0], 0.0).unwrap();
        assert_eq!(e.predict(&[0.4]), 0);
        assert_eq!(e.predict(&[0.6]), 1);
    }
}
