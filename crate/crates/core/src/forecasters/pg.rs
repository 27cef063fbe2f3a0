//! Memory-based one-step forecasters: no parametric fit at training time,
//! just the assembled one-step pairs, read at prediction time through a
//! localized kernel-ridge or weighted-affine model.

use super::propagator::{
    assemble_query, build_propagator_data, PropagatorConfig, StepFn, KERNEL_NEIGHBORS,
};
use super::ForecastError;
use crate::numkit::{GpMemory, KernelSpec, LocalLinearMemory};
use crate::series::{State, TimeSeries};

/// Queries (lag row plus optional timestep coordinate) and targets for a
/// memory-based step model.
fn memorize(
    train: &TimeSeries,
    cfg: &PropagatorConfig,
) -> Result<(Vec<State>, Vec<State>), ForecastError> {
    let data = build_propagator_data(train, cfg)?;
    let queries = data
        .inputs
        .iter()
        .zip(&data.spans)
        .map(|(input, &span)| assemble_query(input, cfg.timestep_input.then_some(span)))
        .collect();
    Ok((queries, data.targets))
}

/// Memorize the one-step pairs; predict with localized kernel ridge.
pub(crate) fn fit_pg_gp(
    train: &TimeSeries,
    bandwidth: f64,
    lambda: f64,
    cfg: &PropagatorConfig,
) -> Result<StepFn, ForecastError> {
    let (queries, targets) = memorize(train, cfg)?;
    let memory = GpMemory::new(&queries, &targets)?;
    Ok(StepFn::Gp {
        memory,
        spec: KernelSpec {
            bandwidth,
            regularization: lambda,
            neighbors: Some(KERNEL_NEIGHBORS),
        },
    })
}

/// Memorize the one-step pairs; predict with a localized weighted-affine fit.
pub(crate) fn fit_pg_ll(
    train: &TimeSeries,
    bandwidth: f64,
    cfg: &PropagatorConfig,
) -> Result<StepFn, ForecastError> {
    let (queries, targets) = memorize(train, cfg)?;
    let memory = LocalLinearMemory::new(&queries, &targets)?;
    Ok(StepFn::LocalLinear { memory, bandwidth })
}
