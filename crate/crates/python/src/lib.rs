// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! Python bindings. Structured results (configs, reports, metrics) cross the boundary as
//! JSON text and are decoded with the standard `json` module.

use dsm_swap::bench::{compute_metrics, emit_braid_svg, Family, GeneratorSpec};
use dsm_swap::circuit::{emit_circuit, parse_circuit};
use dsm_swap::router::{emit_routed, parse_routed};
use dsm_swap::tensor::PermutationMatrix;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyModule;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn from_json<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    PyModule::import(py, "json")?.call_method1("loads", (text,))
}

/// Coupling graph on physical qubits.
#[pyclass(name = "Topology", frozen)]
struct PyTopology(dsm_swap::Topology);

#[pymethods]
impl PyTopology {
    #[new]
    fn new(num_qubits: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        dsm_swap::Topology::from_edges(num_qubits, &edges).map(Self).map_err(value_err)
    }

    /// Parses `line:m`, `ring:m` or `heavyhex:k`.
    #[staticmethod]
    fn from_spec(spec: &str) -> PyResult<Self> {
        dsm_swap::Topology::from_spec(spec).map(Self).map_err(value_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        dsm_swap::Topology::from_json(text).map(Self).map_err(value_err)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[getter]
    fn num_qubits(&self) -> usize {
        self.0.num_qubits()
    }

    #[getter]
    fn edges(&self) -> Vec<(usize, usize)> {
        self.0.edges().to_vec()
    }

    fn max_degree(&self) -> usize {
        self.0.max_degree()
    }

    fn has_edge(&self, a: usize, b: usize) -> bool {
        self.0.has_edge(a, b)
    }

    fn __repr__(&self) -> String {
        format!("Topology(num_qubits={}, edges={})", self.0.num_qubits(), self.0.edges().len())
    }
}

/// Circuit of two-qubit gates grouped into layers of disjoint gates.
#[pyclass(name = "LayeredCircuit", frozen)]
struct PyLayeredCircuit(dsm_swap::LayeredCircuit);

#[pymethods]
impl PyLayeredCircuit {
    #[new]
    fn new(num_qubits: usize, layers: Vec<Vec<(usize, usize)>>) -> PyResult<Self> {
        dsm_swap::LayeredCircuit::from_pairs(num_qubits, &layers).map(Self).map_err(value_err)
    }

    /// ASAP layering of a gate list in program order.
    #[staticmethod]
    fn layerize(num_qubits: usize, gates: Vec<(usize, usize)>) -> PyResult<Self> {
        dsm_swap::layerize(num_qubits, &gates).map(Self).map_err(value_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        parse_circuit(text).map(Self).map_err(value_err)
    }

    fn to_json(&self) -> String {
        emit_circuit(&self.0)
    }

    #[getter]
    fn num_qubits(&self) -> usize {
        self.0.num_qubits()
    }

    #[getter]
    fn num_layers(&self) -> usize {
        self.0.num_layers()
    }

    #[getter]
    fn num_gates(&self) -> usize {
        self.0.num_gates()
    }

    #[getter]
    fn layers(&self) -> Vec<Vec<(usize, usize)>> {
        self.0.layers().iter().map(|l| l.iter().map(|g| g.pair()).collect()).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "LayeredCircuit(num_qubits={}, layers={}, gates={})",
            self.0.num_qubits(),
            self.0.num_layers(),
            self.0.num_gates()
        )
    }
}

/// Result of routing: swap sub-layers before each original layer, plus placements.
#[pyclass(name = "RoutedCircuit", frozen)]
struct PyRoutedCircuit(dsm_swap::RoutedCircuit);

#[pymethods]
impl PyRoutedCircuit {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        parse_routed(text).map(Self).map_err(value_err)
    }

    fn to_json(&self) -> String {
        emit_routed(&self.0, None)
    }

    #[getter]
    fn swaps(&self) -> usize {
        self.0.swaps_inserted()
    }

    #[getter]
    fn swap_depth(&self) -> usize {
        self.0.swap_depth()
    }

    #[getter]
    fn depth(&self) -> usize {
        self.0.depth()
    }

    #[getter]
    fn escalations(&self) -> usize {
        self.0.escalations
    }

    #[getter]
    fn placed_layers(&self) -> usize {
        self.0.placed_layers
    }

    /// Logical to physical placement after the last layer.
    #[getter]
    fn final_permutation(&self) -> Vec<usize> {
        self.0.final_permutation.mapping().to_vec()
    }

    /// Per layer: `(swap sub-layers, physical gates)`.
    #[getter]
    fn layers(&self) -> Vec<(Vec<Vec<(usize, usize)>>, Vec<(usize, usize)>)> {
        self.0
            .program
            .iter()
            .map(|l| (l.swaps.clone(), l.gates.iter().map(|g| g.pair()).collect()))
            .collect()
    }

    fn braid_svg(&self) -> String {
        emit_braid_svg(&self.0)
    }

    fn __repr__(&self) -> String {
        format!(
            "RoutedCircuit(layers={}, swaps={}, swap_depth={})",
            self.0.num_layers(),
            self.0.swaps_inserted(),
            self.0.swap_depth()
        )
    }
}

/// Routes `circuit` onto `topology`. `config` is a JSON object with any of the router
/// fields (`horizon`, `sweeps`, `fallback`, `undo_final_permutation`, `knitter`); the
/// keyword arguments override it.
#[pyfunction]
#[pyo3(signature = (circuit, topology, config=None, horizon=None, seed=None))]
fn route(
    py: Python<'_>,
    circuit: &PyLayeredCircuit,
    topology: &PyTopology,
    config: Option<&str>,
    horizon: Option<usize>,
    seed: Option<u64>,
) -> PyResult<PyRoutedCircuit> {
    let mut cfg: dsm_swap::RouterConfig = match config {
        Some(text) => serde_json::from_str(text).map_err(value_err)?,
        None => Default::default(),
    };
    if let Some(h) = horizon {
        cfg.horizon = h;
    }
    if let Some(s) = seed {
        cfg.knitter.seed = s;
    }
    let (c, t) = (&circuit.0, &topology.0);
    py.detach(|| dsm_swap::route(c, t, &cfg))
        .map(PyRoutedCircuit)
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Checks a routing; returns the report as a dict with a `passed` key.
#[pyfunction]
fn verify<'py>(
    py: Python<'py>,
    routed: &PyRoutedCircuit,
    topology: &PyTopology,
    original: &PyLayeredCircuit,
) -> PyResult<Bound<'py, PyAny>> {
    let report = dsm_swap::verify_routing(&routed.0, &topology.0, &original.0);
    let mut value = serde_json::to_value(&report).map_err(value_err)?;
    value["passed"] = report.passed().into();
    from_json(py, &value.to_string())
}

/// Commuting classes of swap generators (an edge coloring of the coupling graph).
#[pyfunction]
fn partition_generators(topology: &PyTopology) -> PyResult<Vec<Vec<(usize, usize)>>> {
    dsm_swap::partition_generators(&topology.0, 1)
        .map(|s| s.classes().to_vec())
        .map_err(value_err)
}

/// Cost of one layer under placement `mapping` (logical `q` on physical `mapping[q]`);
/// zero exactly when every gate lands on a coupling edge.
#[pyfunction]
fn layer_cost(mapping: Vec<usize>, gates: Vec<(usize, usize)>, topology: &PyTopology) -> PyResult<f64> {
    let m = topology.0.num_qubits();
    let p = PermutationMatrix::from_mapping(mapping).map_err(value_err)?;
    let c = dsm_swap::LayeredCircuit::from_pairs(m, &[gates]).map_err(value_err)?;
    dsm_swap::cost::layer_cost(&p, &c.layer_adjacency(0), topology.0.complement()).map_err(value_err)
}

/// Random benchmark circuit: `qv` takes `size` layers, `mcx` takes `size` gates.
#[pyfunction]
#[pyo3(signature = (family, qubits, size, seed=0))]
fn generate(family: &str, qubits: usize, size: usize, seed: u64) -> PyResult<PyLayeredCircuit> {
    let family: Family = family.parse().map_err(value_err)?;
    GeneratorSpec {
        family,
        qubits,
        size,
        seed,
    }
    .generate()
    .map(PyLayeredCircuit)
    .map_err(value_err)
}

/// Swap, CNOT and depth metrics of a routing as a dict.
#[pyfunction]
#[pyo3(signature = (original, routed, cnots_per_gate=3, cnots_per_swap=3))]
fn metrics<'py>(
    py: Python<'py>,
    original: &PyLayeredCircuit,
    routed: &PyRoutedCircuit,
    cnots_per_gate: usize,
    cnots_per_swap: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let record = compute_metrics(&original.0, &routed.0, cnots_per_gate, cnots_per_swap).map_err(value_err)?;
    from_json(py, &serde_json::to_string(&record).map_err(value_err)?)
}

#[pymodule]
fn dsm_swap_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTopology>()?;
    m.add_class::<PyLayeredCircuit>()?;
    m.add_class::<PyRoutedCircuit>()?;
    m.add_function(wrap_pyfunction!(route, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(partition_generators, m)?)?;
    m.add_function(wrap_pyfunction!(layer_cost, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(metrics, m)?)?;
    Ok(())
}
