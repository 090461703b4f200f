//! Mesh, assemble, solve and measure in one call.

use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::analysis::{error_report, ErrorReport};
use crate::problems::ProblemData;
use crate::scheme::{assemble, Discretization, SchemeParams};
use crate::solve::{solve, SolveMethod, SolveOptions, SolveReport};
use crate::space::{DGFunction, DGSpace};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct Solution {
    pub space: DGSpace,
    pub coeffs: Vec<f64>,
    pub params: SchemeParams,
    pub report: SolveReport,
    pub assembly_time: Duration,
}

impl Solution {
    pub fn function(&self) -> DGFunction<'_> {
        DGFunction {
            space: &self.space,
            coeffs: self.coeffs.clone(),
        }
    }

    pub fn discretization<'a>(&'a self, problem: &'a ProblemData) -> Result<Discretization<'a>> {
        Discretization::new(&self.space, problem, self.params)
    }

    /// Error against the problem's exact solution.
    pub fn errors(&self, problem: &ProblemData, b0: f64) -> Result<ErrorReport> {
        let exact = problem
            .exact
            .as_ref()
            .ok_or_else(|| Error::InvalidInput(format!("{} has no exact solution", problem.name)))?;
        let d = self.discretization(problem)?;
        error_report(&d, &self.function(), exact, b0)
    }
}

/// Solve `problem` on the uniform mesh with `n` cells per axis.
pub fn solve_level(problem: &ProblemData, n: usize, k: usize, params: SchemeParams, opts: &SolveOptions) -> Result<Solution> {
    let mesh = Arc::new(problem.mesh(n)?);
    let space = DGSpace::new(mesh, k)?;
    let start = Instant::now();
    let system = {
        let d = Discretization::new(&space, problem, params)?;
        assemble(&d)?
    };
    let assembly_time = start.elapsed();
    let mut opts = *opts;
    if let SolveMethod::Iterative { block_size, .. } = &mut opts.method {
        if *block_size == 0 {
            *block_size = space.n_local();
        }
    }
    let (coeffs, report) = solve(&system, &opts)?;
    Ok(Solution {
        space,
        coeffs,
        params,
        report,
        assembly_time,
    })
}

/// Error reports over a sequence of meshes.
pub fn convergence_study(
    problem: &ProblemData,
    levels: &[usize],
    k: usize,
    params: SchemeParams,
    opts: &SolveOptions,
    b0: f64,
) -> Result<Vec<ErrorReport>> {
    levels
        .iter()
        .map(|&n| {
            let sol = solve_level(problem, n, k, params, opts)
                .map_err(|e| e.context(format!("{} eps={} n={n}", problem.name, problem.eps)))?;
            sol.errors(problem, b0)
        })
        .collect()
}
