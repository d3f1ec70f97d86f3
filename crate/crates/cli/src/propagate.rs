//! File-driven propagation.

use std::path::PathBuf;

use batchprop::hamiltonian::Quadrature;
use batchprop::linalg::{MatrixBatch, Precision};
use batchprop::manifest::{batch_to_json, load_problem, matrix_to_json};
use batchprop::propagator::PropagatorResult;
use batchprop::{Config, IntegratorContext, Mode, Result};
use serde_json::json;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PropagateOptions {
    pub manifest: PathBuf,
    pub magnus: bool,
    /// Defaults to three-point sampling with `magnus`, midpoint otherwise.
    pub quadrature: Option<Quadrature>,
    /// Overrides the manifest's precision.
    pub precision: Option<Precision>,
    pub m_max: Option<usize>,
    pub all: bool,
}

#[derive(Debug, Clone)]
pub struct PropagateOutput {
    pub result: PropagatorResult,
    pub cumulative: Option<MatrixBatch<f64>>,
}

pub fn run_propagate(opts: &PropagateOptions) -> Result<PropagateOutput> {
    let problem = load_problem(&opts.manifest)?;
    let precision = opts.precision.or(problem.precision).unwrap_or(Precision::Fp64);
    let quadrature = opts.quadrature.unwrap_or(if opts.magnus {
        Quadrature::Simpson
    } else {
        Quadrature::Midpoint
    });
    let mut ctx = IntegratorContext::create(Config {
        m_max: opts.m_max,
        ..Config::new(precision)
    })?;
    ctx.set_hamiltonian(problem.system, Mode { magnus: opts.magnus, quadrature })?;
    let result = ctx.equiprop(&problem.amplitudes)?;
    let cumulative = if opts.all {
        Some(ctx.equiprop_all(&problem.amplitudes)?)
    } else {
        None
    };
    Ok(PropagateOutput { result, cumulative })
}

pub fn summary(out: &PropagateOutput) -> String {
    let p = &out.result.plan;
    format!(
        "precision={} slices={} m_max={} beta={:.6e} predicted_error={:.3e}",
        out.result.precision,
        out.result.slice_count,
        p.m_max,
        p.beta,
        p.predicted_error
    )
}

pub fn to_json(out: &PropagateOutput) -> serde_json::Value {
    let r = &out.result;
    let mut v = json!({
        "precision": r.precision,
        "slices": r.slice_count,
        "plan": {
            "m_max": r.plan.m_max,
            "beta": r.plan.beta,
            "predicted_error": r.plan.predicted_error,
        },
        "u": matrix_to_json(&r.u),
    });
    if let Some(c) = &out.cumulative {
        v["cumulative"] = json!(batch_to_json(c));
    }
    v
}
