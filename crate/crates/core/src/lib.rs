//! Robustness verification for decision trees and tree ensembles.
//!
//! Computes certified lower bounds (and exact values on small instances) of
//! the minimal l-infinity perturbation that flips the prediction of a
//! decision tree, random forest, or gradient boosted ensemble.
//!
//! The pipeline:
//!
//! 1. [`single_tree`] maps each leaf to the axis-aligned box of inputs
//!    routed to it; a single tree is verified exactly in one pass.
//! 2. [`clique`] prunes leaves against the perturbation ball and treats one
//!    tree per part of a K-partite intersection graph; valid leaf tuples are
//!    exactly the K-cliques, and merging a few parts at a time yields an
//!    anytime sequence of upper bounds on the best attack margin that
//!    tightens level by level down to the exact optimum.
//! 3. [`verifier`] turns the fixed-radius decision into certified radii by
//!    binary search, reduces multiclass models to binary pairs, and answers
//!    generalized box queries (per-feature robustness, anchors).
//!
//! [`data`], [`report`], and [`driver`] cover LIBSVM input, report emission
//! (JSON/CSV/PGM), and batch orchestration for the CLI and the Python
//! bindings.

pub mod clique;
pub mod data;
pub mod driver;
pub mod geometry;
pub mod model;
pub mod report;
pub mod single_tree;
pub mod verifier;

pub use geometry::{AxisBox, GeometryError, Interval};
pub use model::{Ensemble, ModelError, Tree, TreeNode};
pub use single_tree::{compute_leaf_boxes, verify_tree_boxes, verify_tree_linear, Sign};
pub use verifier::{
    certify_radius, certify_untargeted_multiclass, decide_at_eps, decide_box_query,
    feature_importance, PreparedEnsemble, VerificationReport, VerifierError, VerifyConfig,
};
