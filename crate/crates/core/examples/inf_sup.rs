//! Inf-sup diagnostic with the weighted test function, for upwind and
//! centered `alpha`.
//!
//!     cargo run --release --example inf_sup

use std::sync::Arc;

use curl_dg::problems::preset;
use curl_dg::scheme::{Discretization, SchemeParams, WeightStrategy};
use curl_dg::space::DGSpace;
use curl_dg::verify::{build_weight, diagnostic_params, inf_sup_diagnostic, trace_inverse_constant};

fn main() -> curl_dg::Result<()> {
    let c_g = trace_inverse_constant(2, 1)?;
    println!("C_g = {c_g:.4}");
    for eps in [1.0, 1e-3, 1e-9] {
        let problem = preset("exp2", eps)?;
        for (label, alpha) in [("upwind", WeightStrategy::Signed(1.0)), ("centered", WeightStrategy::Centered)] {
            let params = diagnostic_params(SchemeParams { alpha, ..Default::default() }, c_g);
            for n in [8, 16] {
                let space = DGSpace::new(Arc::new(problem.mesh(n)?), 1)?;
                let weight = build_weight(&problem.beta, space.mesh())?;
                let d = Discretization::new(&space, &problem, params)?;
                let r = inf_sup_diagnostic(&d, &weight, 100, 0)?;
                println!(
                    "eps = {eps:e} {label:>8} n = {n:>2}: ratio in [{:.3e}, {:.3e}]  bound in [{:.3}, {:.3}]",
                    r.min_ratio, r.max_ratio, r.min_bound, r.max_bound
                );
            }
        }
    }
    Ok(())
}
