//! Direct quadrature of `a_h(u, v)` and `F(v)` from the facet calculus,
//! without forming matrices.

use super::traces::{complement, FacetTraces};
use super::Discretization;
use crate::problems::dirichlet_trace;
use crate::space::DGFunction;
use crate::{Error, Result};

fn same_space(d: &Discretization, u: &DGFunction) -> Result<()> {
    if !std::ptr::eq(d.space, u.space) {
        return Err(Error::InvalidInput("function belongs to a different space".into()));
    }
    Ok(())
}

/// `a_h(u, v)`.
pub fn apply_operator(d: &Discretization, u: &DGFunction, v: &DGFunction) -> Result<f64> {
    same_space(d, u)?;
    same_space(d, v)?;
    let space = d.space;
    let mesh = space.mesh();
    let pb = d.problem;
    let eps = pb.eps;
    let p = &d.params;
    let mut total = 0.0;
    for e in 0..mesh.n_elements() {
        for (x, w) in space.element_quadrature(e) {
            let (uv, ju) = u.eval_with_jacobian(e, &x);
            let (vv, jv) = v.eval_with_jacobian(e, &x);
            let cu = crate::problems::curl_of(&ju);
            let cv = crate::problems::curl_of(&jv);
            let beta = pb.beta(&x);
            let jb = pb.beta.jacobian(&x);
            // L_beta u = -beta x curl u + J_beta^T u + J_u^T beta
            let lie = -beta.cross(&cu) + jb.transpose() * uv + ju.transpose() * beta;
            total += w * (eps * cu.dot(&cv) + (lie + uv * pb.gamma(&x)).dot(&vv));
        }
    }
    for (f, facet) in mesh.facets.iter().enumerate() {
        let class = d.class(f);
        let n = facet.normal;
        let pen = eps * p.eta / facet.diameter;
        let ep = facet.plus.element;
        for (x, w) in space.facet_quadrature(f) {
            let beta = pb.beta(&x);
            match facet.minus {
                Some(minus) => {
                    let em = minus.element;
                    let (up, jup) = u.eval_with_jacobian(ep, &x);
                    let (um, jum) = u.eval_with_jacobian(em, &x);
                    let (vp, jvp) = v.eval_with_jacobian(ep, &x);
                    let (vm, jvm) = v.eval_with_jacobian(em, &x);
                    let tu = FacetTraces::interior(n, up, um);
                    let tv = FacetTraces::interior(n, vp, vm);
                    let cu = FacetTraces::interior(n, crate::problems::curl_of(&jup), crate::problems::curl_of(&jum));
                    let cv = FacetTraces::interior(n, crate::problems::curl_of(&jvp), crate::problems::curl_of(&jvm));
                    let fw = d.weights[f];
                    let (al, ad) = (fw.alpha, fw.alpha_d);
                    let mut val = -(cu.weighted_avg(ad) * eps).dot(&tv.jump_t())
                        - p.theta * tu.jump_t().dot(&(cv.weighted_avg(ad) * eps))
                        + pen * tu.jump_t().dot(&tv.jump_t());
                    let bxu = tu.map(|t| beta.cross(t));
                    let bxv = tv.map(|t| beta.cross(t));
                    let bv_plus = beta.dot(&vp);
                    let bv_minus = beta.dot(&vm);
                    let bv_avg = complement(al)[0] * bv_plus + complement(al)[1] * bv_minus;
                    val += bxu.jump_t().dot(&tv.weighted_avg(complement(ad)));
                    val -= tu.jump_n() * bv_avg;
                    val += tu.jump_t().dot(&(bxv.weighted_avg(al) - bxv.weighted_avg(ad)));
                    val += p.tau * fw.jump_difference() * tu.jump_n() * tv.jump_n();
                    total += w * val;
                }
                None => {
                    let (uv, ju) = u.eval_with_jacobian(ep, &x);
                    let (vv, jv) = v.eval_with_jacobian(ep, &x);
                    let mut val = 0.0;
                    if class.is_dirichlet() {
                        let ju_t = n.cross(&uv);
                        let jv_t = n.cross(&vv);
                        let cu = crate::problems::curl_of(&ju) * eps;
                        let cv = crate::problems::curl_of(&jv) * eps;
                        val += -cu.dot(&jv_t) - p.theta * ju_t.dot(&cv) + pen * ju_t.dot(&jv_t);
                    }
                    if class.is_inflow() {
                        val -= beta.dot(&n) * uv.dot(&vv);
                    }
                    total += w * val;
                }
            }
        }
    }
    Ok(total)
}

/// `F(v)`.
pub fn apply_rhs(d: &Discretization, v: &DGFunction) -> Result<f64> {
    same_space(d, v)?;
    let space = d.space;
    let mesh = space.mesh();
    let pb = d.problem;
    let eps = pb.eps;
    let p = &d.params;
    let mut total = 0.0;
    for e in 0..mesh.n_elements() {
        for (x, w) in space.element_quadrature(e) {
            total += w * (pb.f)(&x).dot(&v.eval(e, &x));
        }
    }
    for (f, facet) in mesh.facets.iter().enumerate() {
        if !facet.is_boundary() {
            continue;
        }
        let class = d.class(f);
        let n = facet.normal;
        let inflow = class.is_inflow();
        let e = facet.plus.element;
        for (x, w) in space.facet_quadrature(f) {
            let (vv, jv) = v.eval_with_jacobian(e, &x);
            if class.is_dirichlet() {
                let g = (pb.dirichlet)(&x, &n, inflow);
                let (tg, gn) = dirichlet_trace(space.dim(), &n, &g);
                let cv = crate::problems::curl_of(&jv) * eps;
                // [n x C] x n = C - (C . n) n, and tg is tangential
                let tangential_curl = cv - n * cv.dot(&n);
                let mut val = tg.dot(&(n.cross(&vv) * (eps * p.eta / facet.diameter) - tangential_curl * p.theta));
                if inflow {
                    val -= pb.beta(&x).dot(&n) * (tg.dot(&n.cross(&vv)) + gn * n.dot(&vv));
                }
                total += w * val;
            } else {
                total -= w * (pb.neumann)(&x, &n, inflow).dot(&vv);
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use nalgebra::SymmetricEigen;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::super::{assemble, assemble_parts, Parts, SchemeParams, WeightStrategy};
    use super::*;
    use crate::mesh::unit_mesh;
    use crate::problems::{preset, VectorField};
    use crate::space::DGSpace;
    use crate::Vec3;

    fn random<'s>(space: &'s DGSpace, rng: &mut ChaCha8Rng) -> DGFunction<'s> {
        let c = (0..space.n_dofs()).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        DGFunction::from_coeffs(space, c).unwrap()
    }

    fn norm(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn matrix_free_matches_assembled() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (name, dim, k, eps) in [("exp2", 2, 2, 0.3), ("exp1", 3, 1, 1e-3), ("exp3", 2, 1, 1e-2), ("exp4", 2, 2, 1e-3)] {
            let p = preset(name, eps).unwrap();
            let s = DGSpace::new(Arc::new(p.mesh(2).unwrap()), k).unwrap();
            assert_eq!(s.dim(), dim);
            let params = SchemeParams {
                theta: 0.3,
                eta: 5.0,
                tau: 2.0,
                alpha: WeightStrategy::Signed(0.6),
                alpha_d: WeightStrategy::Signed(-0.2),
            };
            let d = Discretization::new(&s, &p, params).unwrap();
            let sys = assemble(&d).unwrap();
            for _ in 0..3 {
                let u = random(&s, &mut rng);
                let v = random(&s, &mut rng);
                let direct = apply_operator(&d, &u, &v).unwrap();
                let matrix = sys.matrix.bilinear(&v.coeffs, &u.coeffs);
                let scale = norm(&u.coeffs) * norm(&v.coeffs) * sys.matrix.max_abs();
                assert!((direct - matrix).abs() <= 1e-11 * scale, "{name}: {direct} vs {matrix}");
                let f_direct = apply_rhs(&d, &v).unwrap();
                let f_vec: f64 = sys.rhs.iter().zip(&v.coeffs).map(|(a, b)| a * b).sum();
                assert!((f_direct - f_vec).abs() <= 1e-11 * norm(&sys.rhs) * norm(&v.coeffs));
            }
            let z = DGFunction::zeros(&s);
            assert_eq!(apply_operator(&d, &z, &z).unwrap(), 0.0);
        }
    }

    #[test]
    fn coercive_pure_diffusion_reaction() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut p = preset("exp2", 1.0).unwrap();
        p.beta = VectorField::constant(Vec3::zeros());
        p.gamma = Arc::new(|_| 1.0);
        let s = DGSpace::new(Arc::new(unit_mesh(2, 3).unwrap()), 1).unwrap();
        let params = SchemeParams {
            eta: 100.0,
            ..Default::default()
        };
        let d = Discretization::new(&s, &p, params).unwrap();
        let a = assemble_parts(&d, Parts::ALL).to_dense();
        let lmin = SymmetricEigen::new((&a + a.transpose()) * 0.5).eigenvalues.min();
        assert!(lmin > 0.0);
        for _ in 0..100 {
            let v = random(&s, &mut rng);
            assert!(apply_operator(&d, &v, &v).unwrap() >= 0.0);
        }
    }

    #[test]
    fn foreign_function_rejected() {
        let p = preset("exp2", 1.0).unwrap();
        let s = DGSpace::new(Arc::new(unit_mesh(2, 1).unwrap()), 1).unwrap();
        let s2 = DGSpace::new(Arc::new(unit_mesh(2, 1).unwrap()), 1).unwrap();
        let d = Discretization::new(&s, &p, SchemeParams::default()).unwrap();
        let u = DGFunction::zeros(&s2);
        assert!(apply_operator(&d, &u, &u).is_err());
    }
}
