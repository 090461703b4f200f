//! Mesh statistics, boundary classification and star facets for a preset;
//! the full listing goes to stdout with `--list`.
//!
//!     cargo run --example mesh_dump -- exp3 4 [--list]

use curl_dg::mesh::{classify_boundary, star_facets, BoundaryClass};
use curl_dg::problems::preset;

fn main() -> curl_dg::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let name = args.get(1).map_or("exp2", String::as_str);
    let n: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(4);
    let problem = preset(name, 1e-3)?;
    let mesh = problem.mesh(n)?;
    let tags = classify_boundary(&mesh, &problem)?;
    let count = |c: BoundaryClass| tags.iter().filter(|t| t.class == c).count();
    println!("{name}: {} elements, {} facets, h = {:.4}", mesh.n_elements(), mesh.n_facets(), mesh.h());
    for c in [BoundaryClass::DirichletInflow, BoundaryClass::DirichletOutflow, BoundaryClass::NeumannInflow, BoundaryClass::NeumannOutflow] {
        println!("  {c:?}: {}", count(c));
    }
    let star = star_facets(&mesh, &|x| problem.beta(x), 10.0);
    let (ratio, c_beta) = star.worst();
    println!("  star facets: worst ratio {ratio:.3} (C_beta {c_beta:.3}), {} flagged", star.flagged.len());
    if args.iter().any(|a| a == "--list") {
        mesh.write_listing(&mut std::io::stdout().lock())?;
    }
    Ok(())
}
