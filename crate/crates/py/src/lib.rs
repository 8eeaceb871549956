use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

use twnet_core::fixtures::{exact_decomposition, min_degree_decomposition, standard_fixtures, EXACT_LIMIT};
use twnet_core::graph::shortest_paths;
use twnet_core::tree::TreeDecomposition as CoreTd;
use twnet_core::verify::{verify_pipeline, VerifyConfig, DEFAULT_ORACLE_CAP};
use twnet_core::{Pipeline as CorePipeline, VertexSet, WeightedGraph};

fn err(e: twnet_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Undirected graph with nonnegative edge weights, vertices `0..n`.
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct Graph {
    inner: WeightedGraph,
}

#[pymethods]
impl Graph {
    #[new]
    fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> PyResult<Self> {
        Ok(Graph {
            inner: WeightedGraph::from_edges(n, edges).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_edge_list(text: &str) -> PyResult<Self> {
        Ok(Graph {
            inner: WeightedGraph::parse_edge_list(text).map_err(err)?,
        })
    }

    fn to_edge_list(&self) -> String {
        self.inner.to_edge_list()
    }

    #[getter]
    fn vertex_count(&self) -> usize {
        self.inner.vertex_count()
    }

    #[getter]
    fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.inner.edges().to_vec()
    }

    /// Distances from `source` to every vertex.
    fn distances(&self, source: usize) -> PyResult<Vec<f64>> {
        let n = self.inner.vertex_count();
        if source >= n {
            return Err(PyValueError::new_err(format!("source {source} out of range")));
        }
        shortest_paths(&self.inner, &self.inner.all(), &VertexSet::from_iter(n, [source])).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Graph(n={}, m={})", self.inner.vertex_count(), self.inner.edge_count())
    }
}

#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct TreeDecomposition {
    inner: CoreTd,
}

#[pymethods]
impl TreeDecomposition {
    #[staticmethod]
    fn from_pace(text: &str, graph: &Graph) -> PyResult<Self> {
        Ok(TreeDecomposition {
            inner: CoreTd::parse_pace(text, &graph.inner).map_err(err)?,
        })
    }

    /// Exact for small graphs, min-degree elimination otherwise.
    #[staticmethod]
    fn compute(graph: &Graph) -> PyResult<Self> {
        let g = &graph.inner;
        let inner = if g.vertex_count() <= EXACT_LIMIT { exact_decomposition(g) } else { min_degree_decomposition(g) };
        Ok(TreeDecomposition { inner: inner.map_err(err)? })
    }

    fn to_pace(&self) -> String {
        self.inner.to_pace()
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn bags(&self) -> Vec<Vec<usize>> {
        self.inner.bags().to_vec()
    }
}

/// Net, decompositions and covers for one graph at one scale.
#[pyclass(frozen)]
struct Pipeline {
    inner: CorePipeline,
}

#[pymethods]
impl Pipeline {
    #[new]
    #[pyo3(signature = (graph, td, delta, alpha = 3.0))]
    fn new(graph: &Graph, td: &TreeDecomposition, delta: f64, alpha: f64) -> PyResult<Self> {
        Ok(Pipeline {
            inner: CorePipeline::new(graph.inner.clone(), td.inner.clone(), delta, alpha).map_err(err)?,
        })
    }

    #[getter]
    fn tau(&self) -> usize {
        self.inner.net().params.tau_emp
    }

    #[getter]
    fn host_vertex_count(&self) -> usize {
        self.inner.host().vertex_count()
    }

    /// Original vertices whose host copies are net points.
    fn net_vertices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.inner.net().net.iter().map(|x| self.inner.embedding.origin[x]).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    fn net<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.build.export())
    }

    #[pyo3(signature = (seed = 0))]
    fn sample<'py>(&self, py: Python<'py>, seed: u64) -> PyResult<Bound<'py, PyAny>> {
        let sampler = self.inner.sampler().map_err(err)?;
        let (_, g) = self.inner.sample(&sampler, seed).map_err(err)?;
        to_py(py, &g)
    }

    fn sparse_cover<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let (_, c) = self.inner.sparse_cover().map_err(err)?;
        to_py(py, &c)
    }

    fn partition_cover<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let (_, c) = self.inner.partition_cover().map_err(err)?;
        to_py(py, &c)
    }

    #[pyo3(signature = (gammas, trials = 10_000, seed = 0))]
    fn padding_estimate<'py>(&self, py: Python<'py>, gammas: Vec<f64>, trials: u64, seed: u64) -> PyResult<Bound<'py, PyAny>> {
        let sampler = self.inner.sampler().map_err(err)?;
        let est = py
            .detach(|| self.inner.padding_estimate(&sampler, &gammas, trials, seed))
            .map_err(err)?;
        to_py(py, &est)
    }

    /// Full check report as a dict with `passed` and `checks`.
    #[pyo3(signature = (seed = 0, trials = 10_000, samples = 100, gammas = Vec::new(), oracle_cap = DEFAULT_ORACLE_CAP))]
    fn verify<'py>(
        &self,
        py: Python<'py>,
        seed: u64,
        trials: u64,
        samples: u64,
        gammas: Vec<f64>,
        oracle_cap: usize,
    ) -> PyResult<Bound<'py, PyAny>> {
        let cfg = VerifyConfig {
            oracle_cap,
            seed,
            samples,
            trials,
            gammas,
        };
        let (report, method) = py.detach(|| verify_pipeline(&self.inner, &cfg)).map_err(err)?;
        #[derive(Serialize)]
        struct Out<'a> {
            oracle: &'a str,
            passed: bool,
            checks: &'a [twnet_core::verify::Check],
        }
        to_py(
            py,
            &Out {
                oracle: method,
                passed: !report.has_failures(),
                checks: &report.checks,
            },
        )
    }
}

/// Names of the built-in test graphs.
#[pyfunction]
fn fixture_names() -> PyResult<Vec<String>> {
    Ok(standard_fixtures().map_err(err)?.into_iter().map(|f| f.name).collect())
}

/// A built-in test graph with its decomposition and suggested scale.
#[pyfunction]
fn fixture(name: &str) -> PyResult<(Graph, TreeDecomposition, f64)> {
    let f = standard_fixtures()
        .map_err(err)?
        .into_iter()
        .find(|f| f.name == name)
        .ok_or_else(|| PyValueError::new_err(format!("unknown fixture `{name}`")))?;
    Ok((Graph { inner: f.graph }, TreeDecomposition { inner: f.td }, f.delta))
}

#[pymodule]
pub fn twnet(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Graph>()?;
    m.add_class::<TreeDecomposition>()?;
    m.add_class::<Pipeline>()?;
    m.add_function(wrap_pyfunction!(fixture_names, m)?)?;
    m.add_function(wrap_pyfunction!(fixture, m)?)?;
    Ok(())
}
