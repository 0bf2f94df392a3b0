use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use frontfill::cli::{self, FillOverrides, RunConfig};
use frontfill::fill::PointSet as CoreSet;
use frontfill::geometry::Point;
use frontfill::io;
use frontfill::quality;
use frontfill::solver::{self, NodeSource};
use frontfill::spacing::SpacingFn;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn cli_err(e: anyhow::Error) -> PyErr {
    if cli::exit_status(&e) == 1 {
        PyValueError::new_err(format!("{e:#}"))
    } else {
        PyRuntimeError::new_err(format!("{e:#}"))
    }
}

/// Serializes `value` through JSON into plain Python objects.
fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// A parsed run configuration.
#[pyclass(name = "Config", frozen)]
struct PyConfig {
    inner: RunConfig,
}

#[pymethods]
impl PyConfig {
    /// Parses JSON text. Relative data files stay relative to the working
    /// directory.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        RunConfig::from_json(text, "<string>").map(|inner| PyConfig { inner }).map_err(value_err)
    }

    /// Reads a config file, resolving data files against its directory.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        RunConfig::load(&path).map(|inner| PyConfig { inner }).map_err(value_err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim
    }

    /// The configured spacing function.
    fn spacing(&self) -> PyResult<PySpacing> {
        self.inner.spacing_fn().map(|inner| PySpacing { inner }).map_err(value_err)
    }
}

/// A spacing function `h(p)`.
#[pyclass(name = "Spacing", frozen)]
struct PySpacing {
    inner: SpacingFn,
}

#[pymethods]
impl PySpacing {
    #[staticmethod]
    fn constant(h: f64) -> Self {
        PySpacing { inner: SpacingFn::constant(h) }
    }

    #[staticmethod]
    fn preset(name: &str, h_s: f64) -> PyResult<Self> {
        SpacingFn::preset(name, h_s).map(|inner| PySpacing { inner }).map_err(value_err)
    }

    /// Expression in `x`, `y`, `z` scaled by `h_s`.
    #[staticmethod]
    fn expr(src: &str, h_s: f64, dim: usize) -> PyResult<Self> {
        SpacingFn::expr(src, h_s, dim).map(|inner| PySpacing { inner }).map_err(value_err)
    }

    fn __call__(&self, p: Vec<f64>) -> PyResult<f64> {
        self.inner.eval(&p).map_err(value_err)
    }
}

enum AnySet {
    D1(CoreSet<1>),
    D2(CoreSet<2>),
    D3(CoreSet<3>),
}

macro_rules! each_set {
    ($set:expr, $s:ident => $body:expr) => {
        match $set {
            AnySet::D1($s) => $body,
            AnySet::D2($s) => $body,
            AnySet::D3($s) => $body,
        }
    };
}

/// Points of a fill, in insertion order, with the thread and cell that
/// placed each one.
#[pyclass(name = "PointSet", frozen)]
struct PyPointSet {
    set: AnySet,
}

#[pymethods]
impl PyPointSet {
    #[getter]
    fn dim(&self) -> usize {
        match self.set {
            AnySet::D1(_) => 1,
            AnySet::D2(_) => 2,
            AnySet::D3(_) => 3,
        }
    }

    fn __len__(&self) -> usize {
        each_set!(&self.set, s => s.len())
    }

    /// Coordinates as a list of lists.
    fn positions(&self) -> Vec<Vec<f64>> {
        each_set!(&self.set, s => s.points.iter().map(|p| p.pos.0.to_vec()).collect())
    }

    fn seeds(&self) -> Vec<Vec<f64>> {
        each_set!(&self.set, s => s.seeds.iter().map(|p| p.0.to_vec()).collect())
    }

    fn threads(&self) -> Vec<u32> {
        each_set!(&self.set, s => s.points.iter().map(|p| p.thread).collect())
    }

    fn cells(&self) -> Vec<u32> {
        each_set!(&self.set, s => s.points.iter().map(|p| p.cell).collect())
    }

    #[getter]
    fn wall_s(&self) -> f64 {
        each_set!(&self.set, s => s.stats.wall_s)
    }

    /// Writes the points CSV, gzip-compressed when `path` ends in `.gz`.
    fn write(&self, path: PathBuf) -> PyResult<()> {
        each_set!(&self.set, s => io::write_points(s, &path)).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!("PointSet(dim={}, n={})", self.dim(), self.__len__())
    }
}

/// Fills the configured domain. Keyword arguments override the config.
#[pyfunction]
#[pyo3(signature = (config, *, threads=None, seed=None, n_s=None, target_np=None, sequential=false))]
fn fill(
    py: Python<'_>,
    config: &PyConfig,
    threads: Option<usize>,
    seed: Option<u64>,
    n_s: Option<usize>,
    target_np: Option<usize>,
    sequential: bool,
) -> PyResult<PyPointSet> {
    let ov = FillOverrides { threads, seed, nc: None, ns: n_s, target_np, sequential };
    let cfg = &config.inner;
    let set = py
        .detach(|| match cfg.dim {
            1 => cli::run_fill::<1>(cfg, &ov).map(|r| AnySet::D1(r.0)),
            2 => cli::run_fill::<2>(cfg, &ov).map(|r| AnySet::D2(r.0)),
            _ => cli::run_fill::<3>(cfg, &ov).map(|r| AnySet::D3(r.0)),
        })
        .map_err(cli_err)?;
    Ok(PyPointSet { set })
}

/// Reads a points CSV written by `PointSet.write` or the command line.
#[pyfunction]
fn read_points(path: PathBuf) -> PyResult<PyPointSet> {
    let err = |e: io::IoError| value_err(e);
    let set = match io::points_dim(&path).map_err(err)? {
        1 => AnySet::D1(io::read_points(&path).map_err(err)?),
        2 => AnySet::D2(io::read_points(&path).map_err(err)?),
        _ => AnySet::D3(io::read_points(&path).map_err(err)?),
    };
    Ok(PyPointSet { set })
}

fn positions<const D: usize>(s: &CoreSet<D>) -> Vec<Point<D>> {
    s.positions()
}

/// Regularity statistics, histogram and quasi-uniformity of `points` as a
/// dict.
#[pyfunction]
#[pyo3(signature = (config, points, *, k=quality::DEFAULT_K, probe_density=quality::DEFAULT_PROBE_DENSITY, bins=50, seed=0))]
fn quality_report<'py>(
    py: Python<'py>,
    config: &PyConfig,
    points: &PyPointSet,
    k: usize,
    probe_density: usize,
    bins: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = &config.inner;
    if cfg.dim != points.dim() {
        return Err(PyValueError::new_err(format!("points are {}-D but the config has dim = {}", points.dim(), cfg.dim)));
    }
    let h = cfg.spacing_fn().map_err(value_err)?;
    let report = py.detach(|| -> Result<_, String> {
        macro_rules! run {
            ($d:literal, $s:expr) => {{
                let domain = cfg.domain::<$d>().map_err(|e| e.to_string())?;
                quality::quality_report(&positions($s), domain.as_ref(), &h, k, probe_density, bins, seed)
                    .map_err(|e| e.to_string())
            }};
        }
        match &points.set {
            AnySet::D1(s) => run!(1, s),
            AnySet::D2(s) => run!(2, s),
            AnySet::D3(s) => run!(3, s),
        }
    });
    to_py(py, &report.map_err(PyValueError::new_err)?)
}

/// Index pairs `(i, j)` closer than the smaller of their two spacings.
#[pyfunction]
fn verify_min_spacing(points: &PyPointSet, spacing: &PySpacing) -> PyResult<Vec<(usize, usize)>> {
    each_set!(&points.set, s => quality::verify_min_spacing(&s.positions(), &spacing.inner)).map_err(value_err)
}

/// Solves the manufactured Poisson problem on the clover with about
/// `target` nodes and returns the error row as a dict.
#[pyfunction]
#[pyo3(signature = (target, *, stencil=solver::DEFAULT_STENCIL, threads=1, sequential=false, seed=0))]
fn solve_manufactured<'py>(
    py: Python<'py>,
    target: usize,
    stencil: usize,
    threads: usize,
    sequential: bool,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let source = if sequential { NodeSource::Sequential } else { NodeSource::Parallel { threads } };
    let row = py.detach(|| solver::manufactured_clover(target, stencil, source, seed)).map_err(value_err)?;
    to_py(py, &row)
}

/// Least-squares order of `e_inf` over rows returned by
/// `solve_manufactured`.
#[pyfunction]
fn convergence_order(rows: Vec<Bound<'_, PyDict>>) -> PyResult<Option<f64>> {
    let mut out = Vec::with_capacity(rows.len());
    for r in rows {
        let get = |key: &str| -> PyResult<Bound<'_, PyAny>> {
            r.get_item(key)?.ok_or_else(|| PyValueError::new_err(format!("row lacks {key:?}")))
        };
        out.push(solver::StudyRow {
            n_nodes: get("n_nodes")?.extract()?,
            n_interior: get("n_interior")?.extract()?,
            n_boundary: get("n_boundary")?.extract()?,
            h_scale: get("h_scale")?.extract()?,
            e1: get("e1")?.extract()?,
            e_inf: get("e_inf")?.extract()?,
            max_exactness_residual: get("max_exactness_residual")?.extract()?,
        });
    }
    Ok(solver::convergence_order(&out))
}

#[pymodule(name = "frontfill")]
fn frontfill_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PySpacing>()?;
    m.add_class::<PyPointSet>()?;
    m.add_function(wrap_pyfunction!(fill, m)?)?;
    m.add_function(wrap_pyfunction!(read_points, m)?)?;
    m.add_function(wrap_pyfunction!(quality_report, m)?)?;
    m.add_function(wrap_pyfunction!(verify_min_spacing, m)?)?;
    m.add_function(wrap_pyfunction!(solve_manufactured, m)?)?;
    m.add_function(wrap_pyfunction!(convergence_order, m)?)?;
    Ok(())
}
