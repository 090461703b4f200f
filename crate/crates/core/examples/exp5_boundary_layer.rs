//! Boundary layers as the diffusion vanishes; the discrete solution stays
//! bounded.
//!
//!     cargo run --release --example exp5_boundary_layer

use curl_dg::output::field_stats;
use curl_dg::pipeline::solve_level;
use curl_dg::problems::preset;
use curl_dg::scheme::SchemeParams;
use curl_dg::solve::SolveOptions;

fn main() -> curl_dg::Result<()> {
    for eps in [1e-1, 1e-3, 1e-6, 1e-9] {
        let problem = preset("exp5", eps)?;
        for n in [16, 32] {
            let sol = solve_level(&problem, n, 1, SchemeParams::for_experiment("exp5", eps)?, &SolveOptions::default())?;
            let s = field_stats(&sol.function(), &problem);
            println!("eps = {eps:e}  n = {n:>2}: max|u| = {:.4}  interior jumps = {:.3e}", s.linf, s.jump_norm);
        }
    }
    Ok(())
}
