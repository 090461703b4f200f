//! The tailored projection: approximation rate and the superconvergence of
//! `v_h phi - Pi_h(v_h phi)`.
//!
//!     cargo run --release --example tailored_projection

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use curl_dg::mesh::{star_facets, unit_mesh};
use curl_dg::problems::preset;
use curl_dg::projection::{superconvergence_check, TailoredProjection};
use curl_dg::space::{DGFunction, DGSpace};
use curl_dg::verify::build_weight;
use curl_dg::Vec3;

fn main() -> curl_dg::Result<()> {
    let problem = preset("exp2", 1e-9)?;
    let target = |x: &Vec3| Vec3::new(x.y.sin(), x.x.sin(), 0.0);
    println!("{:>4} {:>12} {:>12} {:>12} {:>12} {:>10}", "n", "|u - Pi u|", "|xi|_0", "|xi|_1", "|xi|_dT", "cond");
    for n in [4, 8, 16, 32] {
        let space = DGSpace::new(Arc::new(unit_mesh(2, n)?), 1)?;
        let star = star_facets(space.mesh(), &|x| problem.beta(x), 10.0);
        let proj = TailoredProjection::new(&space, &star)?;
        let pu = DGFunction::from_coeffs(&space, proj.project(&|_, x| target(x)))?;
        let mut err = 0.0;
        for e in 0..space.mesh().n_elements() {
            for (x, w) in space.element_quadrature(e) {
                err += w * (pu.eval(e, &x) - target(&x)).norm_squared();
            }
        }
        let weight = build_weight(&problem.beta, space.mesh())?;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = DGFunction::from_coeffs(&space, (0..space.n_dofs()).map(|_| rng.random_range(-1.0..1.0)).collect())?;
        let sc = superconvergence_check(&proj, &|x| weight.phi(x), &v);
        println!(
            "{n:>4} {:>12.3e} {:>12.3e} {:>12.3e} {:>12.3e} {:>10.1}",
            err.sqrt(),
            sc.l2 / sc.vh_l2,
            sc.h1 / sc.vh_l2,
            sc.facet / sc.vh_l2,
            proj.max_condition()
        );
    }
    Ok(())
}
