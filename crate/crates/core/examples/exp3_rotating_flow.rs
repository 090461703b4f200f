//! Rotating flow with data prescribed on a slit: weak, standard and strong
//! upwinding compared through jump and variation statistics. Writes grid
//! dumps `exp3_c*.csv` to the given directory (default: the temp dir).
//!
//!     cargo run --release --example exp3_rotating_flow -- [dir]

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use curl_dg::output::{field_stats, write_grid_csv};
use curl_dg::pipeline::solve_level;
use curl_dg::problems::preset;
use curl_dg::scheme::{SchemeParams, WeightStrategy};
use curl_dg::solve::SolveOptions;

fn main() -> curl_dg::Result<()> {
    let dir = std::env::args().nth(1).map_or_else(std::env::temp_dir, PathBuf::from);
    let problem = preset("exp3", 1e-9)?;
    for c in [0.1, 1.0, 10.0] {
        let params = SchemeParams {
            alpha: WeightStrategy::Signed(c),
            ..SchemeParams::for_experiment("exp3", 1e-9)?
        };
        let sol = solve_level(&problem, 16, 1, params, &SolveOptions::default())?;
        let u = sol.function();
        let s = field_stats(&u, &problem);
        println!(
            "c = {c:>4}: max|u| = {:.3}  interior jumps = {:.3e}  variation along beta = {:.3}",
            s.linf, s.jump_norm, s.tv_beta
        );
        let mut w = BufWriter::new(File::create(dir.join(format!("exp3_c{c}.csv")))?);
        write_grid_csv(&mut w, &u, 128)?;
    }
    Ok(())
}
