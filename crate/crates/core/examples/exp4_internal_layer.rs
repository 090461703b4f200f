//! Internal layer from discontinuous inflow data, with centered and
//! upwind `alpha_d`.
//!
//!     cargo run --release --example exp4_internal_layer

use curl_dg::output::field_stats;
use curl_dg::pipeline::solve_level;
use curl_dg::problems::preset;
use curl_dg::scheme::{SchemeParams, WeightStrategy};
use curl_dg::solve::SolveOptions;

fn main() -> curl_dg::Result<()> {
    let problem = preset("exp4", 1e-3)?;
    for (label, alpha_d) in [("centered", WeightStrategy::Centered), ("upwind", WeightStrategy::Signed(1.0))] {
        let params = SchemeParams {
            alpha_d,
            ..SchemeParams::for_experiment("exp4", 1e-3)?
        };
        let sol = solve_level(&problem, 16, 1, params, &SolveOptions::default())?;
        let s = field_stats(&sol.function(), &problem);
        println!(
            "alpha_d {label:>8}: max|u| = {:.3}  interior jumps = {:.3e}  variation along beta = {:.3}",
            s.linf, s.jump_norm, s.tv_beta
        );
    }
    Ok(())
}
