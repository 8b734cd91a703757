//! Python module `resil`. Every entry point takes the same inputs as the command-line
//! tool and returns its JSON output as a string. Failures raise the
//! JSON error document as `ValueError(exit_code, error_json)`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use resil_cli::{run_args, RunOutput};

fn finish(out: RunOutput) -> PyResult<String> {
    if out.code == 0 {
        Ok(out.stdout.unwrap_or_default())
    } else {
        Err(PyValueError::new_err((out.code, out.stderr.unwrap_or_default())))
    }
}

fn with_objective(mut args: Vec<String>, objective: Option<&str>) -> Vec<String> {
    if let Some(o) = objective {
        args.extend(["--objective".to_string(), o.to_string()]);
    }
    args
}

/// Runs the command-line tool with `args` (without the program name) and returns
/// `(exit_code, stdout, stderr)`.
#[pyfunction]
fn run(args: Vec<String>) -> (i32, Option<String>, Option<String>) {
    let out = run_args(std::iter::once("resil".to_string()).chain(args));
    (out.code, out.stdout, out.stderr)
}

/// Breaking point of `strategy` on `model` (a path or a built-in model name).
#[pyfunction]
#[pyo3(signature = (model, strategy, objective=None, semantics="worst", numeric="rational"))]
fn evaluate(model: &str, strategy: &str, objective: Option<&str>, semantics: &str, numeric: &str) -> PyResult<String> {
    let args = ["resil", "evaluate", "--model", model, "--strategy", strategy, "--semantics", semantics, "--numeric", numeric];
    finish(run_args(with_objective(args.map(String::from).to_vec(), objective)))
}

/// Strategy with the largest breaking point on `model`.
#[pyfunction]
#[pyo3(signature = (model, objective=None, semantics="worst", k=None))]
fn synthesize(model: &str, objective: Option<&str>, semantics: &str, k: Option<usize>) -> PyResult<String> {
    let mut args: Vec<String> = ["resil", "synthesize", "--model", model, "--semantics", semantics].map(String::from).to_vec();
    if let Some(k) = k {
        args.extend(["--k".to_string(), k.to_string()]);
    }
    finish(run_args(with_objective(args, objective)))
}

/// Names of the built-in models.
#[pyfunction]
fn fixture_names() -> Vec<String> {
    resil_core::fixtures::all().keys().map(|k| k.to_string()).collect()
}

#[pymodule]
fn resil(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(fixture_names, m)?)?;
    Ok(())
}
