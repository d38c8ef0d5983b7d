//! End-to-end certification.
//!
//! The decision procedure at a fixed radius asks whether any point of the
//! perturbation ball can push the ensemble margin past zero; a sound "no"
//! comes from an upper bound on the best attainable margin over valid leaf
//! tuples. Binary search over the radius then yields a certified lower bound
//! on the minimal adversarial perturbation. The same machinery answers
//! arbitrary box queries, which gives per-feature robustness radii and
//! anchor sets.

use std::borrow::Cow;

use thiserror::Error;

use crate::clique::{build_level0, multi_level_bound, BoundMethod, CliqueError, CliqueSet, LeafCatalog};
use crate::geometry::{AxisBox, GeometryError, Interval};
use crate::model::{Ensemble, ModelError};
use crate::single_tree::{compute_leaf_boxes, LeafBoxTable, Sign};

/// Leaf-tuple enumeration refuses above this part-size product by default.
pub const DEFAULT_ORACLE_LIMIT: u128 = 10_000_000;

#[derive(Debug, Error)]
pub enum VerifierError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("operation requires a binary ensemble (num_classes == 2)")]
    NotBinary,
    #[error("operation requires a multiclass ensemble (num_classes > 2)")]
    RequiresMulticlass,
    #[error("tuple oracle refused: {product} tuples exceed limit {limit}")]
    OracleLimit { product: u128, limit: u128 },
    #[error("query box is empty")]
    EmptyQuery,
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Clique(#[from] CliqueError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// How [`decide_at_eps`] answers the fixed-radius question.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Multi-level merge bound at the configured group size and level count.
    Bound,
    /// Exact decision: full tuple enumeration when small enough, otherwise a
    /// value-pruned search that settles the sign of the optimum exactly.
    Exact,
}

/// Verification parameters shared by every certification entry point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyConfig {
    /// Parts merged per group at each level (the paper's T). At least 2.
    pub group_size: usize,
    /// Merge levels to run before bounding (clamped to the depth that
    /// reaches a single part).
    pub levels: usize,
    pub method: BoundMethod,
    /// Binary-search probes after the initial saturation probe.
    pub search_steps: usize,
    /// Upper end of the searched radius bracket.
    pub eps_max: f64,
    /// Pseudo-node budget per enumeration; `None` removes the cap.
    pub cap: Option<usize>,
    pub mode: Mode,
}

impl Default for VerifyConfig {
    fn default() -> VerifyConfig {
        VerifyConfig {
            group_size: 2,
            levels: 1,
            method: BoundMethod::Naive,
            search_steps: 10,
            eps_max: 1.0,
            cap: Some(1_000_000),
            mode: Mode::Bound,
        }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<(), VerifierError> {
        if self.group_size < 2 {
            return Err(VerifierError::Config(format!(
                "group size must be >= 2, got {}",
                self.group_size
            )));
        }
        if self.search_steps < 1 {
            return Err(VerifierError::Config("search_steps must be >= 1".into()));
        }
        if !(self.eps_max > 0.0) || !self.eps_max.is_finite() {
            return Err(VerifierError::Config(format!(
                "eps_max must be a positive finite number, got {}",
                self.eps_max
            )));
        }
        Ok(())
    }
}

/// One probe of the binary search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceStep {
    pub eps: f64,
    /// Certified bound on the attack margin at this radius when the decision
    /// is robust; under exact mode a non-robust step reports the margin of
    /// the flipping tuple that was found.
    pub bound: f64,
    pub robust: bool,
}

/// Outcome of certifying one example.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub example: usize,
    pub predicted: usize,
    pub correct: bool,
    /// Certified radius: the largest probed radius decided robust (0 for
    /// misclassified examples).
    pub radius: f64,
    /// The radius search saturated at `eps_max`.
    pub saturated: bool,
    /// Multiclass only: the target class attaining the minimum radius.
    pub target_class: Option<usize>,
    pub trace: Vec<TraceStep>,
}

impl VerificationReport {
    fn base(predicted: usize, correct: bool) -> VerificationReport {
        VerificationReport {
            example: 0,
            predicted,
            correct,
            radius: 0.0,
            saturated: false,
            target_class: None,
            trace: Vec::new(),
        }
    }
}

/// An ensemble with its leaf regions and leaf catalog precomputed; all
/// verification entry points take this. Immutable and shareable.
#[derive(Debug, Clone)]
pub struct PreparedEnsemble {
    ensemble: Ensemble,
    tables: Vec<LeafBoxTable>,
    catalog: LeafCatalog,
}

impl PreparedEnsemble {
    pub fn new(ensemble: Ensemble) -> PreparedEnsemble {
        let dim = ensemble.dim();
        let tables: Vec<_> = ensemble
            .trees()
            .iter()
            .map(|t| compute_leaf_boxes(t, dim))
            .collect();
        let catalog = LeafCatalog::new(&tables);
        PreparedEnsemble {
            ensemble,
            tables,
            catalog,
        }
    }

    pub fn ensemble(&self) -> &Ensemble {
        &self.ensemble
    }

    pub fn tables(&self) -> &[LeafBoxTable] {
        &self.tables
    }

    pub fn catalog(&self) -> &LeafCatalog {
        &self.catalog
    }

    pub fn negated(&self) -> PreparedEnsemble {
        PreparedEnsemble::new(self.ensemble.negated())
    }

    fn level0(&self, query: &AxisBox) -> Result<Vec<CliqueSet>, VerifierError> {
        if query.is_empty() {
            return Err(VerifierError::EmptyQuery);
        }
        Ok(build_level0(&self.tables, &self.catalog, query)?)
    }
}

/// The verification view of an example whose correct side is negative: the
/// attack succeeds iff some valid tuple drives the margin strictly positive.
fn normalized(prep: &PreparedEnsemble, label: Sign) -> Cow<'_, PreparedEnsemble> {
    match label {
        Sign::Neg => Cow::Borrowed(prep),
        Sign::Pos => Cow::Owned(prep.negated()),
    }
}

fn require_binary(prep: &PreparedEnsemble) -> Result<(), VerifierError> {
    if prep.ensemble.is_binary() {
        Ok(())
    } else {
        Err(VerifierError::NotBinary)
    }
}

// ---------------------------------------------------------------------------
// Fixed-radius decisions
// ---------------------------------------------------------------------------

fn decide_on_query(
    prep: &PreparedEnsemble,
    query: &AxisBox,
    cfg: &VerifyConfig,
) -> Result<(bool, f64), VerifierError> {
    let parts = prep.level0(query)?;
    let base = prep.ensemble.base_margin();
    match cfg.mode {
        Mode::Bound => {
            let result = multi_level_bound(
                parts,
                &prep.catalog,
                cfg.group_size,
                cfg.levels,
                cfg.cap,
                cfg.method,
            );
            let bound = result.upper_bound + base;
            Ok((bound <= 0.0, bound))
        }
        // The exact decision runs a depth-first search over one leaf per
        // tree with value pruning. It settles the sign of the tuple optimum
        // exactly (the pruning slack absorbs float summation error), matches
        // the decisions of both the enumeration oracle and an uncapped
        // full-depth merge, and stays feasible when those blow up.
        Mode::Exact => {
            let (flip, bound) = branch_bound_decide(&parts, -base);
            Ok((!flip, bound + base))
        }
    }
}

/// Decides robustness of a (normalized, margin <= 0) example at radius
/// `eps`: builds the pruned level-0 graph over the closed perturbation ball
/// and checks whether the bounded worst-case margin stays non-positive.
/// The "robust" answer is sound; "not robust" may be over-cautious in bound
/// mode.
pub fn decide_at_eps(
    prep: &PreparedEnsemble,
    x: &[f64],
    eps: f64,
    cfg: &VerifyConfig,
) -> Result<(bool, f64), VerifierError> {
    require_binary(prep)?;
    if eps < 0.0 {
        return Err(VerifierError::Config(format!("eps must be >= 0, got {eps}")));
    }
    decide_on_query(prep, &AxisBox::ball_hull(x, eps), cfg)
}

/// The general form: robustness of `label` over an arbitrary nonempty box.
pub fn decide_box_query(
    prep: &PreparedEnsemble,
    query: &AxisBox,
    label: Sign,
    cfg: &VerifyConfig,
) -> Result<(bool, f64), VerifierError> {
    require_binary(prep)?;
    if query.is_empty() {
        return Err(VerifierError::EmptyQuery);
    }
    let view = normalized(prep, label);
    decide_on_query(&view, query, cfg)
}

fn part_product(parts: &[CliqueSet]) -> u128 {
    let mut product: u128 = 1;
    for part in parts {
        product = product.saturating_mul(part.nodes.len() as u128);
    }
    product
}

/// Brute-force maximum margin over valid tuples: enumerates the full cross
/// product of the parts, validates each tuple with both the pairwise and the
/// K-way intersection test (which must agree), and maximizes the sum of leaf
/// values taken in global-id order. `-inf` when no tuple is valid.
pub fn exact_vstar_oracle(
    prep: &PreparedEnsemble,
    query: &AxisBox,
    limit: u128,
) -> Result<f64, VerifierError> {
    require_binary(prep)?;
    let parts = prep.level0(query)?;
    let product = part_product(&parts);
    if product > limit {
        return Err(VerifierError::OracleLimit { product, limit });
    }
    Ok(oracle_over_parts(&parts))
}

/// Level-0 parts hold singleton pseudo nodes in ascending global-id order,
/// so folding tuple values in part order IS the global-id summation order
/// used everywhere else.
pub(crate) fn oracle_over_parts(parts: &[CliqueSet]) -> f64 {
    let k = parts.len();
    if parts.iter().any(|p| p.nodes.is_empty()) {
        return f64::NEG_INFINITY;
    }
    let mut idx = vec![0usize; k];
    let mut best = f64::NEG_INFINITY;
    loop {
        let pairwise = (0..k).all(|i| {
            (i + 1..k).all(|j| {
                parts[i].nodes[idx[i]]
                    .region
                    .intersect(&parts[j].nodes[idx[j]].region)
                    .expect("parts share one ensemble dimension")
                    .is_some()
            })
        });
        let mut fold = Some(parts[0].nodes[idx[0]].region.clone());
        for i in 1..k {
            fold = match fold {
                Some(region) => region
                    .intersect(&parts[i].nodes[idx[i]].region)
                    .expect("parts share one ensemble dimension"),
                None => None,
            };
        }
        assert_eq!(
            pairwise,
            fold.is_some(),
            "pairwise and K-way intersection tests disagree on a tuple"
        );
        if pairwise {
            let sum = (0..k).fold(0.0, |acc, i| acc + parts[i].nodes[idx[i]].value);
            if sum > best {
                best = sum;
            }
        }
        // Odometer increment.
        let mut pos = k;
        loop {
            if pos == 0 {
                return best;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < parts[pos].nodes.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Exact decision by depth-first search over one node per part with value
/// pruning: a partial choice is abandoned once even the sum of the remaining
/// parts' maxima cannot push the total past `threshold`.
///
/// Returns `(flip_found, bound)`. When no flip exists the bound is a valid
/// upper bound on the tuple optimum and is `<= threshold`; when a flip is
/// found the bound is the margin of the witnessing tuple. The pruning slack
/// absorbs float summation error so the decision agrees exactly with the
/// enumeration-based optimum.
pub(crate) fn branch_bound_decide(parts: &[CliqueSet], threshold: f64) -> (bool, f64) {
    if parts.iter().any(|p| p.nodes.is_empty()) {
        return (false, f64::NEG_INFINITY);
    }
    let k = parts.len();
    let dim = parts[0].nodes[0].region.dim();

    // Visit high-value nodes first inside each part.
    let order: Vec<Vec<usize>> = parts
        .iter()
        .map(|p| {
            let mut ids: Vec<usize> = (0..p.nodes.len()).collect();
            ids.sort_by(|&a, &b| {
                p.nodes[b]
                    .value
                    .partial_cmp(&p.nodes[a].value)
                    .expect("finite values")
                    .then(a.cmp(&b))
            });
            ids
        })
        .collect();

    // suffix_max[i] = sum of per-part maxima over parts i.. (0 past the end).
    let mut suffix_max = vec![0.0f64; k + 1];
    let mut abs_scale = threshold.abs();
    for i in (0..k).rev() {
        let m = parts[i].max_value();
        suffix_max[i] = m + suffix_max[i + 1];
        abs_scale += parts[i]
            .nodes
            .iter()
            .fold(0.0f64, |a, n| a.max(n.value.abs()));
    }
    // Forward-error allowance for sums of up to k+1 terms of this scale.
    let slack = 4.0 * (k as f64 + 1.0) * f64::EPSILON * abs_scale;

    struct Search<'a> {
        parts: &'a [CliqueSet],
        order: &'a [Vec<usize>],
        suffix_max: &'a [f64],
        threshold: f64,
        slack: f64,
        tracker: f64,
        witness: f64,
    }

    impl Search<'_> {
        fn run(&mut self, k: usize, region: &AxisBox, sum: f64) -> bool {
            if k == self.parts.len() {
                if sum > self.threshold {
                    self.witness = sum;
                    return true;
                }
                self.tracker = self.tracker.max(sum);
                return false;
            }
            for &i in &self.order[k] {
                let node = &self.parts[k].nodes[i];
                let optimistic = sum + node.value + self.suffix_max[k + 1];
                if optimistic <= self.threshold - self.slack {
                    // Nodes are value-descending: nothing further in this
                    // part can reach the threshold either.
                    self.tracker = self.tracker.max(optimistic + self.slack);
                    break;
                }
                if let Some(next) = region
                    .intersect(&node.region)
                    .expect("parts share one ensemble dimension")
                {
                    if self.run(k + 1, &next, sum + node.value) {
                        return true;
                    }
                }
            }
            false
        }
    }

    let mut search = Search {
        parts,
        order: &order,
        suffix_max: &suffix_max,
        threshold,
        slack,
        tracker: f64::NEG_INFINITY,
        witness: f64::NAN,
    };
    let start = AxisBox::universe(dim);
    if search.run(0, &start, 0.0) {
        (true, search.witness)
    } else {
        (false, search.tracker.min(threshold))
    }
}

// ---------------------------------------------------------------------------
// Radius certification
// ---------------------------------------------------------------------------

/// Certifies one binary example: binary search over `[0, eps_max]` for the
/// largest radius at which [`decide_at_eps`] answers robust.
///
/// The first probe sits at `eps_max` to detect saturation; the remaining
/// `search_steps` probes bisect. Misclassified examples get radius 0 with no
/// probes.
pub fn certify_radius(
    prep: &PreparedEnsemble,
    x: &[f64],
    label: Sign,
    cfg: &VerifyConfig,
) -> Result<VerificationReport, VerifierError> {
    require_binary(prep)?;
    cfg.validate()?;
    let margin = prep.ensemble.margin(x);
    let predicted = Sign::of(margin);
    let mut report =
        VerificationReport::base(usize::from(predicted == Sign::Pos), predicted == label);
    if !report.correct {
        return Ok(report);
    }

    let view = normalized(prep, label);
    let (robust, bound) = decide_at_eps(&view, x, cfg.eps_max, cfg)?;
    report.trace.push(TraceStep {
        eps: cfg.eps_max,
        bound,
        robust,
    });
    if robust {
        report.radius = cfg.eps_max;
        report.saturated = true;
        return Ok(report);
    }

    let (mut lo, mut hi) = (0.0f64, cfg.eps_max);
    for _ in 0..cfg.search_steps {
        let mid = 0.5 * (lo + hi);
        let (robust, bound) = decide_at_eps(&view, x, mid, cfg)?;
        report.trace.push(TraceStep {
            eps: mid,
            bound,
            robust,
        });
        if robust {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    report.radius = lo;
    Ok(report)
}

/// Untargeted multiclass certification: the minimum over target classes of
/// the certified radius of the pairwise reduction, with the attaining target
/// recorded. The reported trace is the argmin target's.
pub fn certify_untargeted_multiclass(
    ensemble: &Ensemble,
    x: &[f64],
    true_class: usize,
    cfg: &VerifyConfig,
) -> Result<VerificationReport, VerifierError> {
    if ensemble.is_binary() {
        return Err(VerifierError::RequiresMulticlass);
    }
    cfg.validate()?;
    let predicted = ensemble.predict(x);
    let mut report = VerificationReport::base(predicted, predicted == true_class);
    if !report.correct {
        return Ok(report);
    }

    let mut best: Option<VerificationReport> = None;
    let mut best_target = 0;
    for target in 0..ensemble.num_classes() {
        if target == true_class {
            continue;
        }
        let pair = PreparedEnsemble::new(ensemble.extract_binary_pair(true_class, target)?);
        let candidate = certify_radius(&pair, x, Sign::Pos, cfg)?;
        if best
            .as_ref()
            .map_or(true, |b| candidate.radius < b.radius)
        {
            best_target = target;
            best = Some(candidate);
        }
    }
    let best = best.expect("multiclass model has at least one target class");
    report.radius = best.radius;
    report.saturated = best.saturated;
    report.trace = best.trace;
    report.target_class = Some(best_target);
    Ok(report)
}

// ---------------------------------------------------------------------------
// Box queries: feature importance and anchors
// ---------------------------------------------------------------------------

fn check_domain(x: &[f64], domain: &[(f64, f64)], dim: usize) -> Result<(), VerifierError> {
    if x.len() != dim || domain.len() != dim {
        return Err(VerifierError::Domain(format!(
            "point ({}) and domain ({}) must match the model dimension {dim}",
            x.len(),
            domain.len()
        )));
    }
    for (i, &(lo, hi)) in domain.iter().enumerate() {
        if !(lo < hi) {
            return Err(VerifierError::Domain(format!(
                "feature {i}: domain [{lo}, {hi}] is empty"
            )));
        }
        if x[i] < lo || x[i] > hi {
            return Err(VerifierError::Domain(format!(
                "feature {i}: value {} outside domain [{lo}, {hi}]",
                x[i]
            )));
        }
    }
    Ok(())
}

/// Query box that frees `feature` to the closed window `[wlo, whi]` and pins
/// every other coordinate at `x`.
fn single_feature_box(x: &[f64], feature: usize, wlo: f64, whi: f64) -> AxisBox {
    let mut q = AxisBox::from_point(x);
    q = q.with_constraint(feature, Interval::hull_of_closed(wlo, whi));
    q
}

/// Per-feature certified radii: feature `i` gets the largest `eps` such that
/// perturbing `x[i]` alone within `[x[i]-eps, x[i]+eps]` (clipped to the
/// feature's domain) provably cannot flip the prediction. A feature whose
/// whole domain is safe saturates at the domain width.
pub fn feature_importance(
    prep: &PreparedEnsemble,
    x: &[f64],
    label: Sign,
    domain: &[(f64, f64)],
    cfg: &VerifyConfig,
) -> Result<Vec<f64>, VerifierError> {
    require_binary(prep)?;
    cfg.validate()?;
    check_domain(x, domain, prep.ensemble.dim())?;
    let view = normalized(prep, label);

    let mut radii = Vec::with_capacity(x.len());
    for (i, &(lo, hi)) in domain.iter().enumerate() {
        let width = hi - lo;
        let window = |eps: f64| {
            single_feature_box(x, i, (x[i] - eps).max(lo), (x[i] + eps).min(hi))
        };
        // Saturation probe: at eps = width the window covers the domain.
        let (robust, _) = decide_on_query(&view, &window(width), cfg)?;
        if robust {
            radii.push(width);
            continue;
        }
        let (mut cur_lo, mut cur_hi) = (0.0f64, width);
        for _ in 0..cfg.search_steps {
            let mid = 0.5 * (cur_lo + cur_hi);
            let (robust, _) = decide_on_query(&view, &window(mid), cfg)?;
            if robust {
                cur_lo = mid;
            } else {
                cur_hi = mid;
            }
        }
        radii.push(cur_lo);
    }
    Ok(radii)
}

/// Greedy anchor set: fixes features in order of increasing per-feature
/// radius (most attack-sensitive first) until freeing all remaining features
/// over their domains provably cannot flip the prediction. Returns the fixed
/// feature indices, ascending.
pub fn anchor_features(
    prep: &PreparedEnsemble,
    x: &[f64],
    label: Sign,
    domain: &[(f64, f64)],
    cfg: &VerifyConfig,
) -> Result<Vec<usize>, VerifierError> {
    require_binary(prep)?;
    cfg.validate()?;
    check_domain(x, domain, prep.ensemble.dim())?;
    let radii = feature_importance(prep, x, label, domain, cfg)?;
    let view = normalized(prep, label);

    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| radii[a].partial_cmp(&radii[b]).expect("finite radii").then(a.cmp(&b)));

    let mut anchored = vec![false; x.len()];
    for step in 0..=x.len() {
        let mut q = AxisBox::universe(prep.ensemble.dim());
        for (i, &(lo, hi)) in domain.iter().enumerate() {
            let iv = if anchored[i] {
                Interval::point(x[i])
            } else {
                Interval::hull_of_closed(lo, hi)
            };
            q = q.with_constraint(i, iv);
        }
        let (robust, _) = decide_on_query(&view, &q, cfg)?;
        if robust {
            return Ok((0..x.len()).filter(|&i| anchored[i]).collect());
        }
        if step < x.len() {
            anchored[order[step]] = true;
        }
    }
    // Fixing every feature leaves only x itself, which is correctly
    // classified, so the loop above must have returned.
    Ok((0..x.len()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Tree, TreeNode};

    fn stump(feature: usize, threshold: f64, left: f64, right: f64) -> Tree {
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

    fn binary(trees: Vec<Tree>, dim: usize) -> PreparedEnsemble {
        let count = trees.len();
        PreparedEnsemble::new(Ensemble::new(trees, dim, 2, vec![0; count], 0.0).unwrap())
    }

    #[test]
    fn zero_radius_is_robust_for_correct_examples() {
        let prep = binary(vec![stump(0, 0.5, -1.0, 1.0)], 1);
        let cfg = VerifyConfig::default();
        let (robust, bound) = decide_at_eps(&prep, &[0.3], 0.0, &cfg).unwrap();
        assert!(robust);
        assert_eq!(bound, -1.0);
        // Even when x sits exactly on a threshold, only its own leaf
        // survives the zero-radius query.
        let (robust, bound) = decide_at_eps(&prep, &[0.5], 0.0, &cfg).unwrap();
        assert!(robust);
        assert_eq!(bound, -1.0);
    }

    #[test]
    fn large_radius_is_not_robust_when_a_flip_exists() {
        let prep = binary(vec![stump(0, 0.5, -1.0, 1.0)], 1);
        let cfg = VerifyConfig::default();
        let (robust, bound) = decide_at_eps(&prep, &[0.3], 1.0, &cfg).unwrap();
        assert!(!robust);
        assert!(bound > 0.0);
    }

    #[test]
    fn certify_misclassified_is_zero_with_no_probes() {
        let prep = binary(vec![stump(0, 0.5, -1.0, 1.0)], 1);
        let report = certify_radius(&prep, &[0.3], Sign::Pos, &VerifyConfig::default()).unwrap();
        assert!(!report.correct);
        assert_eq!(report.radius, 0.0);
        assert!(report.trace.is_empty());
    }

    #[test]
    fn certify_brackets_the_single_tree_distance() {
        let prep = binary(vec![stump(0, 0.5, -1.0, 1.0)], 1);
        let cfg = VerifyConfig::default();
        let report = certify_radius(&prep, &[0.3], Sign::Neg, &cfg).unwrap();
        assert!(report.correct);
        // Exact flip distance is 0.2.
        assert!(report.radius <= 0.2);
        assert!(report.radius >= 0.2 - cfg.eps_max / 2f64.powi(cfg.search_steps as i32));
    }

    #[test]
    fn certify_saturates_on_constant_model() {
        let prep = binary(vec![stump(0, 0.5, -1.0, -2.0)], 1);
        let cfg = VerifyConfig::default();
        let report = certify_radius(&prep, &[0.3], Sign::Neg, &cfg).unwrap();
        assert!(report.saturated);
        assert_eq!(report.radius, cfg.eps_max);
        assert_eq!(report.trace.len(), 1);
    }

    #[test]
    fn positive_side_examples_are_normalized() {
        let prep = binary(vec![stump(0, 0.5, -1.0, 1.0)], 1);
        let cfg = VerifyConfig::default();
        let report = certify_radius(&prep, &[0.9], Sign::Pos, &cfg).unwrap();
        assert!(report.correct);
        let exact = 0.9 - 0.5;
        assert!(report.radius <= exact);
        assert!(report.radius >= exact - cfg.eps_max / 1024.0);
    }

    #[test]
    fn multiclass_constant_model_saturates() {
        let leaf = |v: f64| Tree::new(vec![TreeNode::Leaf { value: v }], 0).unwrap();
        let e = Ensemble::new(
            vec![leaf(2.0), leaf(1.0), leaf(0.5)],
            1,
            3,
            vec![0, 1, 2],
            0.0,
        )
        .unwrap();
        let cfg = VerifyConfig::default();
        let report = certify_untargeted_multiclass(&e, &[0.2], 0, &cfg).unwrap();
        assert!(report.correct);
        assert!(report.saturated);
        assert_eq!(report.radius, cfg.eps_max);
    }

    #[test]
    fn multiclass_takes_minimum_over_targets() {
        // Class 1 overtakes once x0 > 0.3 (score 3 vs 2); class 2 once
        // x0 > 0.6 (score 2.5 vs 2). Starting at x0 = 0.2 the closest flip
        // is target 1 at distance 0.1.
        let leaf = |v: f64| Tree::new(vec![TreeNode::Leaf { value: v }], 0).unwrap();
        let e = Ensemble::new(
            vec![
                leaf(2.0),
                stump(0, 0.3, 0.0, 3.0),
                stump(0, 0.6, 0.0, 2.5),
            ],
            1,
            3,
            vec![0, 1, 2],
            0.0,
        )
        .unwrap();
        let cfg = VerifyConfig {
            mode: Mode::Exact,
            ..VerifyConfig::default()
        };
        let report = certify_untargeted_multiclass(&e, &[0.2], 0, &cfg).unwrap();
        assert_eq!(report.target_class, Some(1));
        let expected = 0.1;
        assert!((report.radius - expected).abs() <= cfg.eps_max / 1024.0 + 1e-12);
    }

    #[test]
    fn point_query_matches_own_margin() {
        let prep = binary(vec![stump(0, 0.5, -1.0, 1.0)], 1);
        let cfg = VerifyConfig::default();
        let q = AxisBox::from_point(&[0.3]);
        let (robust, _) = decide_box_query(&prep, &q, Sign::Neg, &cfg).unwrap();
        assert!(robust);
        let (robust, _) = decide_box_query(&prep, &q, Sign::Pos, &cfg).unwrap();
        assert!(!robust);
    }

    #[test]
    fn universal_query_bounds_the_whole_graph() {
        let prep = binary(vec![stump(0, 0.5, -1.0, -0.5)], 1);
        let cfg = VerifyConfig::default();
        let q = AxisBox::universe(1);
        let (robust, bound) = decide_box_query(&prep, &q, Sign::Neg, &cfg).unwrap();
        assert!(robust);
        assert_eq!(bound, -0.5);
    }

    #[test]
    fn unused_feature_saturates_in_importance() {
        let prep = binary(vec![stump(0, 0.5, -1.0, 1.0)], 2);
        let cfg = VerifyConfig::default();
        let domain = vec![(0.0, 1.0); 2];
        let radii = feature_importance(&prep, &[0.3, 0.7], Sign::Neg, &domain, &cfg).unwrap();
        assert_eq!(radii[1], 1.0);
        // Feature 0 flips at distance 0.2.
        assert!(radii[0] <= 0.2);
        assert!(radii[0] >= 0.2 - 1.0 / 1024.0);
    }

    #[test]
    fn anchors_pick_the_sensitive_feature() {
        let prep = binary(vec![stump(0, 0.5, -1.0, 1.0)], 2);
        let cfg = VerifyConfig::default();
        let domain = vec![(0.0, 1.0); 2];
        let anchors = anchor_features(&prep, &[0.3, 0.7], Sign::Neg, &domain, &cfg).unwrap();
        assert_eq!(anchors, vec![0]);
    }

    #[test]
    fn exact_oracle_on_disjoint_supports_sums_maxima() {
        let t0 = stump(0, 0.5, -1.0, 1.0);
        let t1 = stump(1, 0.5, 0.25, 0.5);
        let prep = binary(vec![t0, t1], 2);
        let v = exact_vstar_oracle(&prep, &AxisBox::universe(2), DEFAULT_ORACLE_LIMIT).unwrap();
        assert_eq!(v, 1.5);
    }

    #[test]
    fn oracle_refuses_past_limit() {
        let prep = binary(vec![stump(0, 0.5, -1.0, 1.0), stump(0, 0.7, 1.0, -1.0)], 1);
        let err = exact_vstar_oracle(&prep, &AxisBox::universe(1), 2).unwrap_err();
        assert!(matches!(err, VerifierError::OracleLimit { .. }));
    }

    #[test]
    fn branch_bound_agrees_with_oracle_on_small_cases() {
        let t0 = stump(0, 0.3, 0.0, 5.0);
        let t1 = stump(0, 0.3, 4.0, 0.0);
        let prep = binary(vec![t0, t1], 1);
        let parts = prep.level0(&AxisBox::universe(1)).unwrap();
        let v = oracle_over_parts(&parts);
        assert_eq!(v, 5.0);
        let (flip, _) = branch_bound_decide(&parts, 0.0);
        assert!(flip);
        let (flip, bound) = branch_bound_decide(&parts, 5.0);
        assert!(!flip);
        assert!(bound >= v && bound <= 5.0);
    }
}
