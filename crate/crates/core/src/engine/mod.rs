//! Query execution: per-project evaluation on a worker pool, mergeable
//! aggregation and deterministic rendering.

use std::fmt;
use std::thread;

use crate::dataset::Dataset;
use crate::query::ast::Pos;
use crate::query::TypedProgram;

pub mod agg;
pub mod builtins;
mod interp;
pub mod value;

pub use agg::{
    agg_merge, agg_update, format_float, render_output, AggState, OutputTable, Row, Scalar,
};
pub use builtins::{register_builtin, CallCtx, Registry, RegistryError, Signature};
pub use interp::RuntimeError;
pub use value::{NodeRef, Value};

const WORKER_STACK: usize = 64 << 20;

/// A project whose evaluation failed; its emissions were discarded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectError {
    pub project_id: String,
    pub pos: Pos,
    pub message: String,
}

impl fmt::Display for ProjectError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{}", self.project_id, self.pos, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExecResult {
    pub table: OutputTable,
    /// In dataset order.
    pub errors: Vec<ProjectError>,
}

impl ExecResult {
    /// One `<id>\t<line>:<col>\t<message>` line per failed project.
    pub fn errors_report(&self) -> String {
        self.errors
            .iter()
            .map(|e| format!("{}\n", e.to_string().replace('\n', " ")))
            .collect()
    }
}

/// Runs `program` over every project of `dataset` on `workers` threads.
pub fn execute(program: &TypedProgram, dataset: &Dataset, workers: usize) -> ExecResult {
    let order: Vec<usize> = (0..dataset.len()).collect();
    execute_in_order(program, dataset, workers, &order)
}

/// Like [`execute`], processing projects in the given order. Projects are
/// dealt round-robin over the workers; the result does not depend on
/// either the order or the worker count.
pub fn execute_in_order(
    program: &TypedProgram,
    dataset: &Dataset,
    workers: usize,
    order: &[usize],
) -> ExecResult {
    let workers = workers.clamp(1, order.len().max(1));
    let outcomes: Vec<(AggState, Vec<(usize, ProjectError)>)> = thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                thread::Builder::new()
                    .name(format!("query-worker-{w}"))
                    .stack_size(WORKER_STACK)
                    .spawn_scoped(s, move || run_share(program, dataset, order, w, workers))
                    .expect("spawn query worker")
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("query worker panicked"))
            .collect()
    });
    let mut merged = AggState::new();
    let mut errors = Vec::new();
    for (state, errs) in outcomes {
        merged.merge(state);
        errors.extend(errs);
    }
    errors.sort_by_key(|(idx, _)| *idx);
    ExecResult {
        table: render_output(&merged, &program.outputs),
        errors: errors.into_iter().map(|(_, e)| e).collect(),
    }
}

fn run_share(
    program: &TypedProgram,
    dataset: &Dataset,
    order: &[usize],
    worker: usize,
    workers: usize,
) -> (AggState, Vec<(usize, ProjectError)>) {
    let mut state = AggState::new();
    let mut errors = Vec::new();
    for &idx in order.iter().skip(worker).step_by(workers) {
        let project = &dataset.projects()[idx];
        match interp::run_project(program, dataset, project) {
            Ok(local) => state.merge(local),
            Err(e) => {
                log::debug!("project {} failed at {}: {}", project.id, e.pos, e.message);
                errors.push((
                    idx,
                    ProjectError {
                        project_id: project.id.clone(),
                        pos: e.pos,
                        message: e.message,
                    },
                ))
            }
        }
    }
    (state, errors)
}
