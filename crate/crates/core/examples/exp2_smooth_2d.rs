//! Convergence of the smooth 2D problem for diffusion- and
//! convection-dominated regimes.
//!
//!     cargo run --release --example exp2_smooth_2d -- [k]

use curl_dg::analysis::eoc_h;
use curl_dg::pipeline::convergence_study;
use curl_dg::problems::preset;
use curl_dg::scheme::SchemeParams;
use curl_dg::solve::SolveOptions;

fn main() -> curl_dg::Result<()> {
    let k: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    for eps in [1.0, 1e-3, 1e-9] {
        let problem = preset("exp2", eps)?;
        let params = SchemeParams::for_experiment("exp2", eps)?;
        let rows = convergence_study(&problem, &[8, 16, 32, 64], k, params, &SolveOptions::default(), 1.0)?;
        let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
        let re = eoc_h(&rows.iter().map(|r| r.energy).collect::<Vec<_>>(), &hs)?;
        let rl = eoc_h(&rows.iter().map(|r| r.l2).collect::<Vec<_>>(), &hs)?;
        println!("eps = {eps:e}, k = {k}");
        for (i, r) in rows.iter().enumerate() {
            let (a, b) = if i == 0 { (f64::NAN, f64::NAN) } else { (re[i - 1], rl[i - 1]) };
            println!("  h = {:.4}  energy = {:.3e} ({a:.2})  l2 = {:.3e} ({b:.2})", r.h, r.energy, r.l2);
        }
    }
    Ok(())
}
