// SPDX-License-Identifier: Apache-2.0

//! Python bindings: generate, inspect, simulate, verify, and compare the
//! multiplier designs from Python.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use twinmul::blocks::ReductionPolicy;
use twinmul::document;
use twinmul::hdl;
use twinmul::metrics::{self, AreaTable, DelayTable, WorkloadSpec};
use twinmul::multipliers::{self, OperationMode, VariantTag};
use twinmul::sim::{self, Simulator, VerifyStrategy};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_variant(s: &str) -> PyResult<VariantTag> {
    VariantTag::parse(s).ok_or_else(|| value_err(format!("unknown variant '{s}'")))
}

fn parse_policy(s: &str) -> PyResult<ReductionPolicy> {
    ReductionPolicy::parse(s).ok_or_else(|| value_err(format!("unknown policy '{s}'")))
}

fn parse_mode(s: &str) -> PyResult<OperationMode> {
    OperationMode::parse(s).ok_or_else(|| value_err(format!("unknown mode '{s}'")))
}

/// An immutable gate-level multiplier netlist.
#[pyclass(frozen)]
struct Circuit {
    inner: twinmul::Circuit,
}

#[pymethods]
impl Circuit {
    /// Generate a design variant at the given width under a reduction
    /// policy.
    #[staticmethod]
    #[pyo3(signature = (variant, width, policy = "hpm-regular"))]
    fn generate(variant: &str, width: u32, policy: &str) -> PyResult<Circuit> {
        let circuit =
            multipliers::gen_variant(parse_variant(variant)?, width, parse_policy(policy)?)
                .map_err(value_err)?;
        Ok(Circuit { inner: circuit })
    }

    /// Parse a netlist document.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Circuit> {
        Ok(Circuit {
            inner: document::from_json(text).map_err(value_err)?,
        })
    }

    /// Serialize to the canonical netlist document.
    fn to_json(&self) -> PyResult<String> {
        document::to_json(&self.inner).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    /// Export as flat structural HDL text.
    fn to_hdl(&self) -> String {
        hdl::emit(&self.inner)
    }

    /// Parse HDL text produced by `to_hdl`.
    #[staticmethod]
    fn from_hdl(text: &str) -> PyResult<Circuit> {
        Ok(Circuit {
            inner: hdl::parse(text).map_err(value_err)?,
        })
    }

    /// Structural violations, as human-readable strings; empty means clean.
    fn validate(&self) -> Vec<String> {
        self.inner
            .validate()
            .violations
            .iter()
            .map(|v| v.to_string())
            .collect()
    }

    fn gate_counts<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        for (kind, count) in self.inner.gate_counts() {
            d.set_item(kind.name(), count)?;
        }
        Ok(d)
    }

    /// Default-table area proxy.
    fn area(&self) -> PyResult<u64> {
        metrics::area(&self.inner, &AreaTable::transistor_counts()).map_err(value_err)
    }

    /// Unit-delay depth proxy.
    fn depth(&self) -> PyResult<u64> {
        Ok(metrics::depth(&self.inner, &DelayTable::unit())
            .map_err(value_err)?
            .depth)
    }

    /// Drive one multiplication and return the product. Sequential designs
    /// run one clock step; the mode applies to the variants that support it.
    #[pyo3(signature = (x, y, mode = "full"))]
    fn simulate(&self, x: u64, y: u64, mode: &str) -> PyResult<u128> {
        let variant = parse_variant(&self.inner.meta.variant)?;
        let mode = parse_mode(mode)?;
        let mut sim = Simulator::new(&self.inner).map_err(value_err)?;
        sim::drive_case(&mut sim, variant, mode, x, y).map_err(value_err)
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.meta.name.clone()
    }

    #[getter]
    fn variant(&self) -> String {
        self.inner.meta.variant.clone()
    }

    #[getter]
    fn width(&self) -> u32 {
        self.inner.meta.width
    }

    #[getter]
    fn net_count(&self) -> u32 {
        self.inner.net_count
    }

    #[getter]
    fn register_count(&self) -> usize {
        self.inner.registers.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Circuit(name='{}', variant='{}', width={}, gates={})",
            self.inner.meta.name,
            self.inner.meta.variant,
            self.inner.meta.width,
            self.inner.gates.len()
        )
    }
}

/// Wide-integer golden model of every variant and mode.
#[pyfunction]
#[pyo3(signature = (variant, mode, width, x, y))]
fn expected_product(variant: &str, mode: &str, width: u32, x: u64, y: u64) -> PyResult<u128> {
    multipliers::expected_product(parse_variant(variant)?, parse_mode(mode)?, width, x, y)
        .map_err(value_err)
}

/// Verify a design against the golden model. Exhaustive when `cases` is
/// omitted and the width allows it, seeded-random otherwise. Returns a dict
/// with pass/failure counts and the first mismatch, if any.
#[pyfunction]
#[pyo3(signature = (variant, width, policy = "hpm-regular", mode = "full", seed = 0xC0FFEE, cases = None))]
fn verify<'py>(
    py: Python<'py>,
    variant: &str,
    width: u32,
    policy: &str,
    mode: &str,
    seed: u64,
    cases: Option<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    let tag = parse_variant(variant)?;
    let circuit = multipliers::gen_variant(tag, width, parse_policy(policy)?).map_err(value_err)?;
    let strategy = match cases {
        None if width <= 8 => VerifyStrategy::Exhaustive,
        None => VerifyStrategy::Random {
            seed,
            cases: metrics::default_vector_count(width),
        },
        Some(cases) => VerifyStrategy::Random { seed, cases },
    };
    let report = sim::verify(&circuit, tag, parse_mode(mode)?, strategy).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("variant", &report.variant)?;
    d.set_item("mode", &report.mode)?;
    d.set_item("strategy", &report.strategy)?;
    d.set_item("passes", report.passes)?;
    d.set_item("failures", report.failures)?;
    d.set_item("ok", report.ok())?;
    if let Some(f) = &report.first_failure {
        let m = PyDict::new(py);
        m.set_item("x", f.x)?;
        m.set_item("y", f.y)?;
        m.set_item("expected", &f.expected)?;
        m.set_item("actual", &f.actual)?;
        d.set_item("first_failure", m)?;
    }
    if let Some(mon) = &report.monitor {
        d.set_item("monitor_clean", mon.is_clean())?;
    }
    Ok(d)
}

/// Run the proxy comparison over a list of design tags and return the
/// report as a JSON string.
#[pyfunction]
#[pyo3(signature = (width, designs, baseline = "twin-regular", policy = "hpm-regular", seed = 0xC0FFEE, vectors = None))]
fn compare(
    width: u32,
    designs: Vec<String>,
    baseline: &str,
    policy: &str,
    seed: u64,
    vectors: Option<u64>,
) -> PyResult<String> {
    let policy = parse_policy(policy)?;
    let mut circuits = Vec::new();
    for tag in &designs {
        circuits.push(
            multipliers::gen_variant(parse_variant(tag)?, width, policy).map_err(value_err)?,
        );
    }
    let refs: Vec<&twinmul::Circuit> = circuits.iter().collect();
    let workload = WorkloadSpec {
        seed,
        vectors: vectors.unwrap_or_else(|| metrics::default_vector_count(width)),
    };
    let report = metrics::compare(
        &refs,
        &workload,
        baseline,
        &AreaTable::transistor_counts(),
        &DelayTable::unit(),
        ("default-transistor-counts", "default-unit-delay"),
    )
    .map_err(value_err)?;
    Ok(report.to_json())
}

#[pymodule]
fn twinmul_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Circuit>()?;
    m.add_function(wrap_pyfunction!(expected_product, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add("VARIANTS", VariantTag::ALL.map(|v| v.as_str()))?;
    m.add("POLICIES", ReductionPolicy::ALL.map(|p| p.as_str()))?;
    m.add("MODES", OperationMode::ALL.map(|m| m.as_str()))?;
    Ok(())
}
