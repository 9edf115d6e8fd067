//! Python bindings. Signals cross the boundary as lists of floats; tri-axis
//! series as `(x, y, z)` tuples; reports as dicts.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use vibromix::dsp::{design_bandpass, filter_block, CombineMode, FilterSpec};
use vibromix::fidelity::{fidelity_report, Correlator, FidelityOptions, Recording};
use vibromix::metrics::{self, TrialOptions};
use vibromix::pipeline::{Pipeline, PipelineConfig, RunMode};
use vibromix::placement::{self, RotationCeiling};
use vibromix::synth::{render_scenario, ScenarioScript};
use vibromix::{io, SampleBlock, SignalKind, TriAxisSeries};

type Axes = (Vec<f64>, Vec<f64>, Vec<f64>);
type Section = (f64, f64, f64, f64, f64);

fn err(e: vibromix::Error) -> PyErr {
    match e {
        vibromix::Error::Io { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn tri(axes: Axes, rate: f64) -> PyResult<TriAxisSeries> {
    TriAxisSeries::new(axes.0, axes.1, axes.2, rate, SignalKind::Acceleration).map_err(err)
}

fn axes(series: &TriAxisSeries) -> Axes {
    let [x, y, z] = series.axes();
    (x.to_vec(), y.to_vec(), z.to_vec())
}

/// Round-trip a serde value into Python objects via the json module.
fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Second-order sections `(b0, b1, b2, a1, a2)` of the band-pass design.
#[pyfunction]
#[pyo3(signature = (rate, low_cut=80.0, high_cut=1000.0, order=4))]
fn bandpass_sections(rate: f64, low_cut: f64, high_cut: f64, order: u32) -> PyResult<Vec<Section>> {
    let cascade = design_bandpass(&FilterSpec::new(low_cut, high_cut, order), rate).map_err(err)?;
    Ok(cascade
        .sections()
        .iter()
        .map(|s| (s.b0, s.b1, s.b2, s.a1, s.a2))
        .collect())
}

#[pyfunction]
#[pyo3(signature = (samples, rate, low_cut=80.0, high_cut=1000.0, order=4))]
fn bandpass(samples: Vec<f64>, rate: f64, low_cut: f64, high_cut: f64, order: u32) -> PyResult<Vec<f64>> {
    let mut cascade = design_bandpass(&FilterSpec::new(low_cut, high_cut, order), rate).map_err(err)?;
    Ok(filter_block(&mut cascade, &SampleBlock::new(samples, rate))
        .map_err(err)?
        .samples)
}

/// Combine three axes into one signal; mode is "f0", "f1" or "f3".
#[pyfunction]
fn combine(x: Vec<f64>, y: Vec<f64>, z: Vec<f64>, mode: &str) -> PyResult<Vec<f64>> {
    let mode: CombineMode = mode.parse().map_err(err)?;
    if x.len() != y.len() || y.len() != z.len() {
        return Err(PyValueError::new_err("axes differ in length"));
    }
    Ok((0..x.len()).map(|n| mode.combine(x[n], y[n], z[n])).collect())
}

/// Per-axis signal energy `[x, y, z]`.
#[pyfunction]
fn ase(x: Vec<f64>, y: Vec<f64>, z: Vec<f64>, rate: f64) -> PyResult<[f64; 3]> {
    Ok(placement::ase(&tri((x, y, z), rate)?))
}

#[pyfunction]
fn e_ratio(handle: Axes, source: Axes, rate: f64) -> PyResult<f64> {
    placement::e_ratio(&tri(handle, rate)?, &tri(source, rate)?).map_err(err)
}

#[pyfunction]
fn rms(samples: Vec<f64>) -> PyResult<f64> {
    placement::rms(&samples).map_err(err)
}

#[pyfunction]
fn gate(samples: Vec<f64>, threshold: f64) -> Vec<f64> {
    metrics::gate_samples(&samples, threshold)
}

/// Zero crossings per second.
#[pyfunction]
fn zcr(samples: Vec<f64>, rate: f64) -> f64 {
    metrics::zcr(&SampleBlock::new(samples, rate))
}

/// Lag (samples) of `b` relative to `a` at the correlation peak.
#[pyfunction]
#[pyo3(signature = (a, b, rate, max_lag_s=0.5))]
fn xcorr_lag(a: Vec<f64>, b: Vec<f64>, rate: f64, max_lag_s: f64) -> PyResult<i64> {
    Correlator::new()
        .lag(&SampleBlock::new(a, rate), &SampleBlock::new(b, rate), max_lag_s)
        .map_err(err)
}

/// Fidelity of `handle` against `tool`. Each may be a list (mono) or an
/// `(x, y, z)` tuple (summed before correlation).
#[pyfunction]
#[pyo3(signature = (tool, handle, rate, max_lag_s=0.5, channel="left"))]
fn fidelity<'py>(
    py: Python<'py>,
    tool: &Bound<'py, PyAny>,
    handle: &Bound<'py, PyAny>,
    rate: f64,
    max_lag_s: f64,
    channel: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let recording = |obj: &Bound<'py, PyAny>| -> PyResult<Recording> {
        if let Ok(samples) = obj.extract::<Vec<f64>>() {
            Ok(Recording::Mono(SampleBlock::new(samples, rate)))
        } else {
            Ok(Recording::Tri(tri(obj.extract::<Axes>()?, rate)?))
        }
    };
    let options = FidelityOptions {
        max_lag_s,
        channel: channel.to_string(),
    };
    let report = fidelity_report(&recording(tool)?, &recording(handle)?, &options).map_err(err)?;
    to_py(py, &report)
}

/// Render a scenario script (JSON text). Returns
/// `{"rate", "tools": {id: (x, y, z)}, "force": (x, y, z) | None, "events_csv"}`.
#[pyfunction]
fn render<'py>(py: Python<'py>, script_json: &str) -> PyResult<Bound<'py, PyDict>> {
    let script = ScenarioScript::from_json(script_json).map_err(err)?;
    let rendered = render_scenario(&script).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("rate", rendered.rate)?;
    let tools = PyDict::new(py);
    for (id, series) in &rendered.tools {
        tools.set_item(id, axes(series))?;
    }
    out.set_item("tools", tools)?;
    out.set_item("force", rendered.force.as_ref().map(axes))?;
    out.set_item("events_csv", rendered.events_csv())?;
    Ok(out)
}

/// Run a pipeline config (JSON text) offline. Relative paths resolve
/// against `base_dir` when given. Returns `{"latency_s", "lanes", "log"}`.
#[pyfunction]
#[pyo3(signature = (config_json, base_dir=None))]
fn run_offline<'py>(py: Python<'py>, config_json: &str, base_dir: Option<PathBuf>) -> PyResult<Bound<'py, PyDict>> {
    let mut config = PipelineConfig::from_json(config_json).map_err(err)?;
    if let Some(dir) = base_dir {
        config.rebase(&dir);
    }
    let pipeline = Pipeline::build(config).map_err(err)?;
    let latency = pipeline.latency().total_s;
    let output = py.detach(|| pipeline.run(RunMode::Offline)).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("latency_s", latency)?;
    out.set_item(
        "lanes",
        PyList::new(py, output.lanes.iter().map(|lane| lane.samples.clone()))?,
    )?;
    out.set_item("log", to_py(py, &output.log)?)?;
    Ok(out)
}

/// SNR placement report for a dataset index CSV.
#[pyfunction]
#[pyo3(signature = (index, rotation_margin_db=0.0))]
fn placement_report<'py>(py: Python<'py>, index: PathBuf, rotation_margin_db: f64) -> PyResult<Bound<'py, PyAny>> {
    let dataset = io::load_dataset(&index).map_err(err)?;
    let report = placement::placement_report(
        &dataset.recordings,
        RotationCeiling::RelativeToContact {
            margin_db: rotation_margin_db,
        },
    )
    .map_err(err)?;
    to_py(py, &report)
}

/// Thresholded RMS / ZCR metrics for a recorded session directory.
#[pyfunction]
fn trial_metrics<'py>(py: Python<'py>, session_dir: PathBuf) -> PyResult<Bound<'py, PyAny>> {
    let session = io::read_session(&session_dir).map_err(err)?;
    to_py(py, &metrics::trial_report(&session, &TrialOptions::default()))
}

#[pymodule]
fn vibromix_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("DEFAULT_RATE", vibromix::DEFAULT_RATE)?;
    m.add_function(wrap_pyfunction!(bandpass_sections, m)?)?;
    m.add_function(wrap_pyfunction!(bandpass, m)?)?;
    m.add_function(wrap_pyfunction!(combine, m)?)?;
    m.add_function(wrap_pyfunction!(ase, m)?)?;
    m.add_function(wrap_pyfunction!(e_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(rms, m)?)?;
    m.add_function(wrap_pyfunction!(gate, m)?)?;
    m.add_function(wrap_pyfunction!(zcr, m)?)?;
    m.add_function(wrap_pyfunction!(xcorr_lag, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(render, m)?)?;
    m.add_function(wrap_pyfunction!(run_offline, m)?)?;
    m.add_function(wrap_pyfunction!(placement_report, m)?)?;
    m.add_function(wrap_pyfunction!(trial_metrics, m)?)?;
    Ok(())
}
