//! Python bindings: load models, predict, and certify robustness from
//! Python. Build with `cargo build -p treeverify-python --release` and
//! import the produced cdylib as `treeverify_py` (see python/smoke_test.py).

use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use treeverify::clique::BoundMethod;
use treeverify::data;
use treeverify::model::Ensemble;
use treeverify::single_tree::{verify_tree_linear, Sign};
use treeverify::verifier::{
    anchor_features, certify_radius, certify_untargeted_multiclass, feature_importance, Mode,
    PreparedEnsemble, VerificationReport, VerifyConfig,
};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn parse_config(
    eps_max: f64,
    steps: usize,
    group_size: usize,
    levels: usize,
    method: &str,
    cap: usize,
    mode: &str,
) -> PyResult<VerifyConfig> {
    let method = match method {
        "naive" => BoundMethod::Naive,
        "dp" => BoundMethod::Dp,
        other => {
            return Err(PyValueError::new_err(format!(
                "method must be 'naive' or 'dp', got '{other}'"
            )))
        }
    };
    let mode = match mode {
        "bound" => Mode::Bound,
        "exact" => Mode::Exact,
        other => {
            return Err(PyValueError::new_err(format!(
                "mode must be 'bound' or 'exact', got '{other}'"
            )))
        }
    };
    Ok(VerifyConfig {
        group_size,
        levels,
        method,
        search_steps: steps,
        eps_max,
        cap: (cap > 0).then_some(cap),
        mode,
    })
}

fn report_to_dict(py: Python<'_>, report: &VerificationReport) -> PyResult<Py<PyDict>> {
    let d = PyDict::new(py);
    d.set_item("predicted", report.predicted)?;
    d.set_item("correct", report.correct)?;
    d.set_item("radius", report.radius)?;
    d.set_item("saturated", report.saturated)?;
    if let Some(target) = report.target_class {
        d.set_item("target_class", target)?;
    }
    let trace: Vec<(f64, f64, bool)> = report
        .trace
        .iter()
        .map(|s| (s.eps, s.bound, s.robust))
        .collect();
    d.set_item("trace", trace)?;
    Ok(d.into())
}

fn binary_sign(label: i64) -> PyResult<Sign> {
    match label {
        1 => Ok(Sign::Pos),
        0 | -1 => Ok(Sign::Neg),
        other => Err(PyValueError::new_err(format!(
            "binary labels must be 0, 1 or -1, got {other}"
        ))),
    }
}

/// A loaded tree-ensemble model with precomputed leaf regions.
#[pyclass(frozen)]
struct Model {
    ensemble: Arc<Ensemble>,
    prepared: Arc<PreparedEnsemble>,
}

impl Model {
    fn from_ensemble(ensemble: Ensemble) -> Model {
        let prepared = PreparedEnsemble::new(ensemble.clone());
        Model {
            ensemble: Arc::new(ensemble),
            prepared: Arc::new(prepared),
        }
    }

    fn unit_domain(&self) -> Vec<(f64, f64)> {
        vec![(0.0, 1.0); self.ensemble.dim()]
    }
}

#[pymethods]
impl Model {
    /// Load a model file. `format` is "native" or "xgboost"; XGBoost dumps
    /// take an optional class count (default binary) and dimension override.
    #[staticmethod]
    #[pyo3(signature = (path, format="native", num_classes=2, dim=None))]
    fn load(path: &str, format: &str, num_classes: usize, dim: Option<usize>) -> PyResult<Model> {
        let bytes = std::fs::read(path).map_err(err)?;
        let ensemble = match format {
            "native" => Ensemble::parse_native_json(&bytes).map_err(err)?,
            "xgboost" => {
                Ensemble::parse_xgboost_json(&bytes, dim, num_classes).map_err(err)?
            }
            other => {
                return Err(PyValueError::new_err(format!(
                    "format must be 'native' or 'xgboost', got '{other}'"
                )))
            }
        };
        Ok(Model::from_ensemble(ensemble))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.ensemble.dim()
    }

    #[getter]
    fn num_classes(&self) -> usize {
        self.ensemble.num_classes()
    }

    #[getter]
    fn num_trees(&self) -> usize {
        self.ensemble.num_trees()
    }

    /// Predicted class index (binary: 0 or 1).
    fn predict(&self, x: Vec<f64>) -> PyResult<usize> {
        self.check_dim(&x)?;
        Ok(self.ensemble.predict(&x))
    }

    /// Raw margin of a binary model.
    fn margin(&self, x: Vec<f64>) -> PyResult<f64> {
        self.check_dim(&x)?;
        Ok(self.ensemble.margin(&x))
    }

    /// Certified radius for one example. Binary models take labels in
    /// {0, 1} or {-1, +1}; multiclass models take the 0-based class index.
    #[pyo3(signature = (x, label, eps_max=1.0, steps=10, t=2, l=1,
                        method="naive", cap=1_000_000, mode="bound"))]
    #[allow(clippy::too_many_arguments)]
    fn certify(
        &self,
        py: Python<'_>,
        x: Vec<f64>,
        label: i64,
        eps_max: f64,
        steps: usize,
        t: usize,
        l: usize,
        method: &str,
        cap: usize,
        mode: &str,
    ) -> PyResult<Py<PyDict>> {
        self.check_dim(&x)?;
        let cfg = parse_config(eps_max, steps, t, l, method, cap, mode)?;
        let report = if self.ensemble.is_binary() {
            certify_radius(&self.prepared, &x, binary_sign(label)?, &cfg).map_err(err)?
        } else {
            let class = usize::try_from(label)
                .map_err(|_| PyValueError::new_err("class labels are 0-based indices"))?;
            certify_untargeted_multiclass(&self.ensemble, &x, class, &cfg).map_err(err)?
        };
        report_to_dict(py, &report)
    }

    /// Per-feature certified radii over the unit domain [0, 1]^d.
    #[pyo3(signature = (x, label, eps_max=1.0, steps=10, t=2, l=1,
                        method="naive", cap=1_000_000, mode="bound"))]
    #[allow(clippy::too_many_arguments)]
    fn feature_importance(
        &self,
        x: Vec<f64>,
        label: i64,
        eps_max: f64,
        steps: usize,
        t: usize,
        l: usize,
        method: &str,
        cap: usize,
        mode: &str,
    ) -> PyResult<Vec<f64>> {
        self.check_dim(&x)?;
        let cfg = parse_config(eps_max, steps, t, l, method, cap, mode)?;
        let domain = self.unit_domain();
        feature_importance(&self.prepared, &x, binary_sign(label)?, &domain, &cfg).map_err(err)
    }

    /// Greedy anchor feature set over the unit domain.
    #[pyo3(signature = (x, label, eps_max=1.0, steps=10, t=2, l=1,
                        method="naive", cap=1_000_000, mode="bound"))]
    #[allow(clippy::too_many_arguments)]
    fn anchors(
        &self,
        x: Vec<f64>,
        label: i64,
        eps_max: f64,
        steps: usize,
        t: usize,
        l: usize,
        method: &str,
        cap: usize,
        mode: &str,
    ) -> PyResult<Vec<usize>> {
        self.check_dim(&x)?;
        let cfg = parse_config(eps_max, steps, t, l, method, cap, mode)?;
        let domain = self.unit_domain();
        anchor_features(&self.prepared, &x, binary_sign(label)?, &domain, &cfg).map_err(err)
    }

    /// Exact minimal flip distance for a one-tree binary model.
    fn single_tree_radius(&self, x: Vec<f64>, label: i64) -> PyResult<f64> {
        self.check_dim(&x)?;
        if self.ensemble.num_trees() != 1 || !self.ensemble.is_binary() {
            return Err(PyValueError::new_err(
                "single_tree_radius requires a binary model with exactly one tree",
            ));
        }
        Ok(verify_tree_linear(
            &self.ensemble.trees()[0],
            self.ensemble.dim(),
            &x,
            binary_sign(label)?,
        ))
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(trees={}, dim={}, classes={})",
            self.ensemble.num_trees(),
            self.ensemble.dim(),
            self.ensemble.num_classes()
        )
    }
}

impl Model {
    fn check_dim(&self, x: &[f64]) -> PyResult<()> {
        if x.len() != self.ensemble.dim() {
            return Err(PyValueError::new_err(format!(
                "expected {} features, got {}",
                self.ensemble.dim(),
                x.len()
            )));
        }
        Ok(())
    }
}

/// Read a LIBSVM file into (label, dense features) pairs.
#[pyfunction]
fn read_libsvm(path: &str, dim: usize) -> PyResult<Vec<(f64, Vec<f64>)>> {
    let examples = data::read_libsvm(path, dim).map_err(err)?;
    Ok(examples
        .into_iter()
        .map(|e| (e.label, e.features))
        .collect())
}

#[pymodule]
fn treeverify_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(read_libsvm, m)?)?;
    Ok(())
}
