//! Convergence of the smooth 3D problem on coarse meshes.
//!
//!     cargo run --release --example exp1_smooth_3d -- [finest n]

use curl_dg::analysis::eoc;
use curl_dg::pipeline::convergence_study;
use curl_dg::problems::preset;
use curl_dg::scheme::SchemeParams;
use curl_dg::solve::SolveOptions;

fn main() -> curl_dg::Result<()> {
    let finest: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(8);
    let levels: Vec<usize> = [2, 4, 8, 16].into_iter().filter(|&n| n <= finest).collect();
    for eps in [1.0, 1e-3, 1e-9] {
        let problem = preset("exp1", eps)?;
        let params = SchemeParams::for_experiment("exp1", eps)?;
        let rows = convergence_study(&problem, &levels, 1, params, &SolveOptions::default(), 1.0)?;
        let re = eoc(&rows.iter().map(|r| r.energy).collect::<Vec<_>>())?;
        let rl = eoc(&rows.iter().map(|r| r.l2).collect::<Vec<_>>())?;
        println!("eps = {eps:e}");
        for (i, r) in rows.iter().enumerate() {
            let rates = if i == 0 { String::new() } else { format!("  rates {:.2} / {:.2}", re[i - 1], rl[i - 1]) };
            println!("  dofs = {:>7}  energy = {:.3e}  l2 = {:.3e}{rates}", r.n_dofs, r.energy, r.l2);
        }
    }
    Ok(())
}
