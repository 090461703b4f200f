//! Global assembly. Local matrices are stored `[test][trial]`, so that
//! `a_h(u, v) = v^T A u`.

use rayon::prelude::*;

use super::Discretization;
use crate::problems::dirichlet_trace;
use crate::sparse::{CsrMatrix, TripletBuilder};
use crate::{Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Parts {
    pub diffusion: bool,
    pub reaction_convection: bool,
}

impl Parts {
    pub const ALL: Parts = Parts {
        diffusion: true,
        reaction_convection: true,
    };
    pub const DIFFUSION: Parts = Parts {
        diffusion: true,
        reaction_convection: false,
    };
    pub const REACTION_CONVECTION: Parts = Parts {
        diffusion: false,
        reaction_convection: true,
    };
}

#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
}

impl SparseSystem {
    pub fn n(&self) -> usize {
        self.rhs.len()
    }
}

/// Values and curls of the vector basis `phi_i e_c` of element `e` at `x`,
/// written at offset `offset` with local index `c * ns + i`.
fn vector_basis(d: &Discretization, e: usize, x: &Vec3, offset: usize, v: &mut [Vec3], curl: &mut [Vec3]) {
    let space = d.space;
    let ns = space.n_scalar();
    let mut vals = [0.0; 84];
    let mut grads = [Vec3::zeros(); 84];
    space.scalar_basis(e, x, &mut vals[..ns], &mut grads[..ns]);
    for c in 0..space.dim() {
        let mut ec = Vec3::zeros();
        ec[c] = 1.0;
        for i in 0..ns {
            v[offset + c * ns + i] = ec * vals[i];
            curl[offset + c * ns + i] = grads[i].cross(&ec);
        }
    }
}

pub(crate) fn element_matrix(d: &Discretization, e: usize, parts: Parts) -> Vec<f64> {
    let nl = d.space.n_local();
    let ns = d.space.n_scalar();
    let eps = d.problem.eps;
    let mut block = vec![0.0; nl * nl];
    let mut vals = vec![0.0; ns];
    let mut grads = vec![Vec3::zeros(); ns];
    let mut v = vec![Vec3::zeros(); nl];
    let mut c = vec![Vec3::zeros(); nl];
    let mut lie = vec![Vec3::zeros(); nl];
    for (x, w) in d.space.element_quadrature(e) {
        d.space.scalar_basis(e, &x, &mut vals, &mut grads);
        for a in 0..nl {
            let (comp, i) = (a / ns, a % ns);
            v[a] = unit(comp) * vals[i];
            c[a] = grads[i].cross(&unit(comp));
        }
        if parts.reaction_convection {
            let beta = d.problem.beta(&x);
            let jb = d.problem.beta.jacobian(&x);
            let gamma = d.problem.gamma(&x);
            for a in 0..nl {
                // L_beta(phi e_c) = phi grad(beta_c) + beta_c grad(phi) - beta x curl(phi e_c)
                let (comp, i) = (a / ns, a % ns);
                let grad_bc = jb.row(comp).transpose();
                lie[a] = grad_bc * vals[i] + grads[i] * beta[comp] - beta.cross(&c[a]) + v[a] * gamma;
            }
        }
        for b in 0..nl {
            for a in 0..nl {
                let mut val = 0.0;
                if parts.diffusion {
                    val += eps * c[a].dot(&c[b]);
                }
                if parts.reaction_convection {
                    val += lie[a].dot(&v[b]);
                }
                block[b * nl + a] += w * val;
            }
        }
    }
    block
}

fn unit(c: usize) -> Vec3 {
    let mut e = Vec3::zeros();
    e[c] = 1.0;
    e
}

pub(crate) fn facet_matrix(d: &Discretization, f: usize, parts: Parts) -> Option<(Vec<usize>, Vec<f64>)> {
    let space = d.space;
    let mesh = space.mesh();
    let facet = &mesh.facets[f];
    let class = d.class(f);
    let interior = !facet.is_boundary();
    let diffusion = parts.diffusion && (interior || class.is_dirichlet());
    let rc = parts.reaction_convection && (interior || class.is_inflow());
    if !diffusion && !rc {
        return None;
    }
    let eps = d.problem.eps;
    let p = &d.params;
    let nl = space.n_local();
    let mut sides = vec![facet.plus.element];
    if let Some(m) = facet.minus {
        sides.push(m.element);
    }
    let m = sides.len() * nl;
    let n = facet.normal;
    let pen = eps * p.eta / facet.diameter;
    let fw = d.weights[f];
    let (ad, al) = if interior { (fw.alpha_d, fw.alpha) } else { ([1.0, 0.0], [1.0, 0.0]) };
    let tau_jump = p.tau * fw.jump_difference();

    let mut block = vec![0.0; m * m];
    let mut v = vec![Vec3::zeros(); m];
    let mut c = vec![Vec3::zeros(); m];
    let mut jt = vec![Vec3::zeros(); m];
    let mut jn = vec![0.0; m];
    let mut cavg = vec![Vec3::zeros(); m];
    let mut nbj = vec![Vec3::zeros(); m];
    let mut avg1md = vec![Vec3::zeros(); m];
    let mut bavg1ma = vec![0.0; m];
    let mut cross = vec![Vec3::zeros(); m];
    for (x, w) in space.facet_quadrature(f) {
        for (s, &e) in sides.iter().enumerate() {
            vector_basis(d, e, &x, s * nl, &mut v, &mut c);
        }
        let beta = d.problem.beta(&x);
        let bn = beta.dot(&n);
        for a in 0..m {
            let s = a / nl;
            let jf = if s == 0 { v[a] } else { -v[a] };
            jt[a] = n.cross(&jf);
            jn[a] = n.dot(&jf);
            cavg[a] = c[a] * (eps * ad[s]);
            if interior {
                nbj[a] = n.cross(&beta.cross(&jf));
                avg1md[a] = v[a] * (1.0 - ad[s]);
                bavg1ma[a] = (1.0 - al[s]) * beta.dot(&v[a]);
                cross[a] = beta.cross(&v[a]) * (al[s] - ad[s]);
            }
        }
        for b in 0..m {
            for a in 0..m {
                let mut val = 0.0;
                if diffusion {
                    val += -cavg[a].dot(&jt[b]) - p.theta * jt[a].dot(&cavg[b]) + pen * jt[a].dot(&jt[b]);
                }
                if rc {
                    if interior {
                        val += nbj[a].dot(&avg1md[b]) - jn[a] * bavg1ma[b]
                            + jt[a].dot(&cross[b])
                            + tau_jump * jn[a] * jn[b];
                    } else {
                        val -= bn * v[a].dot(&v[b]);
                    }
                }
                block[b * m + a] += w * val;
            }
        }
    }
    let dofs = sides.iter().flat_map(|&e| e * nl..(e + 1) * nl).collect();
    Some((dofs, block))
}

/// Matrix of the selected parts of `a_h`.
pub fn assemble_parts(d: &Discretization, parts: Parts) -> CsrMatrix {
    let space = d.space;
    let mesh = space.mesh();
    let nl = space.n_local();
    let n = space.n_dofs();
    let elem_blocks: Vec<Vec<f64>> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|e| element_matrix(d, e, parts))
        .collect();
    let facet_blocks: Vec<Option<(Vec<usize>, Vec<f64>)>> =
        (0..mesh.n_facets()).into_par_iter().map(|f| facet_matrix(d, f, parts)).collect();
    let mut t = TripletBuilder::new(n, n);
    for (e, block) in elem_blocks.iter().enumerate() {
        let dofs: Vec<usize> = (e * nl..(e + 1) * nl).collect();
        t.add_block(&dofs, &dofs, block);
    }
    for (dofs, block) in facet_blocks.iter().flatten() {
        t.add_block(dofs, dofs, block);
    }
    t.build()
}

/// Diffusion part `a_h^d`.
pub fn assemble_diffusion(d: &Discretization) -> CsrMatrix {
    assemble_parts(d, Parts::DIFFUSION)
}

/// Reaction-convection part `a_h^rc`.
pub fn assemble_reaction_convection(d: &Discretization) -> CsrMatrix {
    assemble_parts(d, Parts::REACTION_CONVECTION)
}

/// Load vector `F(v)`.
pub fn assemble_rhs(d: &Discretization) -> Result<Vec<f64>> {
    let space = d.space;
    let mesh = space.mesh();
    let nl = space.n_local();
    let dim = space.dim();
    let eps = d.problem.eps;
    let p = &d.params;
    let mut rhs: Vec<f64> = (0..mesh.n_elements())
        .into_par_iter()
        .flat_map_iter(|e| {
            let mut out = vec![0.0; nl];
            let mut v = vec![Vec3::zeros(); nl];
            let mut c = vec![Vec3::zeros(); nl];
            for (x, w) in space.element_quadrature(e) {
                vector_basis(d, e, &x, 0, &mut v, &mut c);
                let f = (d.problem.f)(&x);
                for b in 0..nl {
                    out[b] += w * f.dot(&v[b]);
                }
            }
            out
        })
        .collect();
    let contributions: Vec<(usize, Vec<f64>)> = (0..mesh.n_facets())
        .into_par_iter()
        .filter(|&f| mesh.facets[f].is_boundary())
        .map(|f| {
            let facet = &mesh.facets[f];
            let class = d.class(f);
            let e = facet.plus.element;
            let n = facet.normal;
            let inflow = class.is_inflow();
            let pen = eps * p.eta / facet.diameter;
            let mut out = vec![0.0; nl];
            let mut v = vec![Vec3::zeros(); nl];
            let mut c = vec![Vec3::zeros(); nl];
            for (x, w) in space.facet_quadrature(f) {
                vector_basis(d, e, &x, 0, &mut v, &mut c);
                if class.is_dirichlet() {
                    let g = (d.problem.dirichlet)(&x, &n, inflow);
                    let (tg, gn) = dirichlet_trace(dim, &n, &g);
                    let bn = d.problem.beta(&x).dot(&n);
                    for b in 0..nl {
                        let nv = n.cross(&v[b]);
                        let mut val = tg.dot(&(nv * pen - c[b] * (p.theta * eps)));
                        if inflow {
                            val -= bn * (tg.dot(&nv) + gn * n.dot(&v[b]));
                        }
                        out[b] += w * val;
                    }
                } else {
                    let g = (d.problem.neumann)(&x, &n, inflow);
                    for b in 0..nl {
                        out[b] -= w * g.dot(&v[b]);
                    }
                }
            }
            (e, out)
        })
        .collect();
    for (e, out) in contributions {
        for (b, val) in out.into_iter().enumerate() {
            rhs[e * nl + b] += val;
        }
    }
    Ok(rhs)
}

/// Full matrix and load vector.
pub fn assemble(d: &Discretization) -> Result<SparseSystem> {
    Ok(SparseSystem {
        matrix: assemble_parts(d, Parts::ALL),
        rhs: assemble_rhs(d)?,
    })
}
