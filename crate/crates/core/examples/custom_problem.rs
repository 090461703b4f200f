//! A problem given by expressions: variable convection, reaction and mixed
//! boundary conditions, with the forcing derived from the exact solution.
//!
//!     cargo run --release --example custom_problem

use curl_dg::analysis::eoc;
use curl_dg::pipeline::convergence_study;
use curl_dg::problems::ExprProblem;
use curl_dg::scheme::SchemeParams;
use curl_dg::solve::SolveOptions;

fn main() -> curl_dg::Result<()> {
    for eps in [1.0, 1e-6] {
        let problem = ExprProblem {
            dim: 2,
            eps,
            beta: vec!["1 + 0.5*y".into(), "1".into()],
            gamma: "1".into(),
            exact: Some(vec!["sin(pi*y)".into(), "x*x".into()]),
            dirichlet_faces: vec!["x0".into(), "y0".into()],
            ..Default::default()
        }
        .build()?;
        let rows = convergence_study(&problem, &[4, 8, 16, 32], 2, SchemeParams::default(), &SolveOptions::default(), 1.0)?;
        let energy: Vec<f64> = rows.iter().map(|r| r.energy).collect();
        let shown: Vec<String> = energy.iter().map(|e| format!("{e:.3e}")).collect();
        println!("eps = {eps:e}: energy errors {}", shown.join(" "));
        println!("  rates {:.2?}", eoc(&energy)?);
    }
    Ok(())
}
