//! Projections onto the DG space.
//!
//! The tailored projection fixes, on each element, the moments against
//! `[P_{k-1}]^d` and the normal moments against `P_k(F)` on every facet but
//! one distinguished facet `F*` (see [`crate::mesh::star_facets`]).

use nalgebra::{DMatrix, DVector, LU};
use rayon::prelude::*;

use crate::mesh::{SimplicialMesh, StarFacets};
use crate::problems::ProblemData;
use crate::space::{dim_pk, DGFunction, DGSpace};
use crate::{Error, Mat3, Result, Vec3};

/// Orthonormal basis of `P_k(F)` built from monomials in tangent
/// coordinates.
#[derive(Debug, Clone)]
pub struct FacetBasis {
    origin: Vec3,
    tangents: [Vec3; 2],
    scale: f64,
    exponents: Vec<[u32; 2]>,
    /// Row-major lower-triangular orthonormalization coefficients.
    coeffs: Vec<f64>,
}

impl FacetBasis {
    pub fn new(space: &DGSpace, f: usize) -> Result<Self> {
        let mesh = space.mesh();
        let facet = &mesh.facets[f];
        let dim = mesh.dim;
        let k = space.degree();
        let n = facet.normal;
        let t1 = if dim == 2 {
            Vec3::new(-n.y, n.x, 0.0)
        } else {
            (mesh.vertices[facet.vertices[1]] - mesh.vertices[facet.vertices[0]]).normalize()
        };
        let t2 = n.cross(&t1);
        let mut exponents = Vec::new();
        for total in 0..=k as u32 {
            if dim == 2 {
                exponents.push([total, 0]);
            } else {
                for a in (0..=total).rev() {
                    exponents.push([a, total - a]);
                }
            }
        }
        let mut basis = FacetBasis {
            origin: facet.centroid,
            tangents: [t1, t2],
            scale: facet.diameter,
            exponents,
            coeffs: Vec::new(),
        };
        let m = basis.exponents.len();
        let mut gram = DMatrix::<f64>::zeros(m, m);
        for (x, w) in space.facet_quadrature(f) {
            let mono = basis.monomials(&x);
            for i in 0..m {
                for j in 0..m {
                    gram[(i, j)] += w * mono[i] * mono[j];
                }
            }
        }
        let l = gram
            .cholesky()
            .ok_or_else(|| Error::InvalidInput(format!("facet {f}: degenerate monomial Gram matrix")))?
            .l();
        let linv = l.solve_lower_triangular(&DMatrix::identity(m, m)).expect("triangular");
        basis.coeffs = (0..m * m).map(|idx| linv[(idx / m, idx % m)]).collect();
        Ok(basis)
    }

    fn monomials(&self, x: &Vec3) -> Vec<f64> {
        let r = (x - self.origin) / self.scale;
        let s = [r.dot(&self.tangents[0]), r.dot(&self.tangents[1])];
        self.exponents
            .iter()
            .map(|e| s[0].powi(e[0] as i32) * s[1].powi(e[1] as i32))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn eval(&self, x: &Vec3) -> Vec<f64> {
        let m = self.len();
        let mono = self.monomials(x);
        (0..m)
            .map(|i| (0..=i).map(|j| self.coeffs[i * m + j] * mono[j]).sum())
            .collect()
    }
}

/// Number of equations of the local system: volume moments plus normal
/// moments on `d` facets.
pub fn local_system_size(dim: usize, k: usize) -> (usize, usize) {
    let volume = if k == 0 { 0 } else { dim * dim_pk(dim, k - 1) };
    let facets = dim * dim_pk(dim - 1, k);
    (volume, facets)
}

#[derive(Debug)]
struct LocalSystem {
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    /// Local facet indices carrying normal moments.
    facets: Vec<usize>,
    condition: f64,
}

/// Precomputed per-element factorizations of the tailored projection.
#[derive(Debug)]
pub struct TailoredProjection<'s> {
    space: &'s DGSpace,
    star_local: Vec<usize>,
    facet_bases: Vec<FacetBasis>,
    systems: Vec<LocalSystem>,
}

impl<'s> TailoredProjection<'s> {
    /// Elements without a star facet (vanishing `beta`) use local facet 0;
    /// the local system is unisolvent for any excluded facet.
    pub fn new(space: &'s DGSpace, star: &StarFacets) -> Result<Self> {
        let mesh = space.mesh();
        if star.local.len() != mesh.n_elements() {
            return Err(Error::InvalidInput("star facet map does not match the mesh".into()));
        }
        let star_local: Vec<usize> = star.local.iter().map(|l| l.unwrap_or(0)).collect();
        let facet_bases = (0..mesh.n_facets())
            .into_par_iter()
            .map(|f| FacetBasis::new(space, f))
            .collect::<Result<Vec<_>>>()?;
        let mut proj = TailoredProjection {
            space,
            star_local,
            facet_bases,
            systems: Vec::new(),
        };
        proj.systems = (0..mesh.n_elements())
            .into_par_iter()
            .map(|e| proj.local_system(e))
            .collect::<Result<Vec<_>>>()?;
        Ok(proj)
    }

    fn local_system(&self, e: usize) -> Result<LocalSystem> {
        let m = self.local_matrix(e);
        let sv = m.clone().singular_values();
        let smin = sv.min();
        let condition = if smin > 0.0 { sv.max() / smin } else { f64::INFINITY };
        if !(condition < 1e14) {
            return Err(Error::SingularLocalSystem { element: e, condition });
        }
        let facets = (0..=self.space.dim()).filter(|&l| l != self.star_local[e]).collect();
        Ok(LocalSystem {
            lu: m.lu(),
            facets,
            condition,
        })
    }

    /// Rows: volume moments, then normal moments facet by facet; columns:
    /// local unknowns `c * ns + i`.
    pub fn local_matrix(&self, e: usize) -> DMatrix<f64> {
        let space = self.space;
        let mesh = space.mesh();
        let dim = space.dim();
        let ns = space.n_scalar();
        let nl = space.n_local();
        let nk1 = if space.degree() == 0 { 0 } else { dim_pk(dim, space.degree() - 1) };
        let mut m = DMatrix::<f64>::zeros(nl, nl);
        let mut row = 0;
        for c in 0..dim {
            for j in 0..nk1 {
                m[(row, c * ns + j)] = 1.0;
                row += 1;
            }
        }
        let mut vals = vec![0.0; ns];
        let mut grads = vec![Vec3::zeros(); ns];
        for l in (0..=dim).filter(|&l| l != self.star_local[e]) {
            let f = mesh.elem_facets[e][l];
            let n = mesh.outward_normal(e, l);
            let fb = &self.facet_bases[f];
            for (x, w) in space.facet_quadrature(f) {
                space.scalar_basis(e, &x, &mut vals, &mut grads);
                let q = fb.eval(&x);
                for (qi, qv) in q.iter().enumerate() {
                    for c in 0..dim {
                        for i in 0..ns {
                            m[(row + qi, c * ns + i)] += w * vals[i] * n[c] * qv;
                        }
                    }
                }
            }
            row += fb.len();
        }
        m
    }

    /// Right-hand side of the local system for a target evaluated on
    /// element `e`.
    pub fn local_rhs(&self, e: usize, target: &(dyn Fn(usize, &Vec3) -> Vec3 + Sync)) -> DVector<f64> {
        let space = self.space;
        let mesh = space.mesh();
        let dim = space.dim();
        let ns = space.n_scalar();
        let nl = space.n_local();
        let nk1 = if space.degree() == 0 { 0 } else { dim_pk(dim, space.degree() - 1) };
        let mut rhs = DVector::<f64>::zeros(nl);
        let mut vals = vec![0.0; ns];
        let mut grads = vec![Vec3::zeros(); ns];
        for (x, w) in space.element_quadrature(e) {
            let t = target(e, &x);
            space.scalar_basis(e, &x, &mut vals, &mut grads);
            for c in 0..dim {
                for j in 0..nk1 {
                    rhs[c * nk1 + j] += w * t[c] * vals[j];
                }
            }
        }
        let mut row = dim * nk1;
        for &l in &self.systems.get(e).map_or_else(
            || (0..=dim).filter(|&l| l != self.star_local[e]).collect::<Vec<_>>(),
            |s| s.facets.clone(),
        ) {
            let f = mesh.elem_facets[e][l];
            let n = mesh.outward_normal(e, l);
            let fb = &self.facet_bases[f];
            for (x, w) in space.facet_quadrature(f) {
                let un = target(e, &x).dot(&n);
                for (qi, qv) in fb.eval(&x).iter().enumerate() {
                    rhs[row + qi] += w * un * qv;
                }
            }
            row += fb.len();
        }
        rhs
    }

    /// Coefficients of the projection of `target`.
    pub fn project(&self, target: &(dyn Fn(usize, &Vec3) -> Vec3 + Sync)) -> Vec<f64> {
        let blocks: Vec<Vec<f64>> = (0..self.space.mesh().n_elements())
            .into_par_iter()
            .map(|e| {
                let rhs = self.local_rhs(e, target);
                self.systems[e].lu.solve(&rhs).expect("nonsingular local system").as_slice().to_vec()
            })
            .collect();
        blocks.concat()
    }

    pub fn project_function(&self, u: &DGFunction) -> Vec<f64> {
        self.project(&|e, x| u.eval(e, x))
    }

    pub fn max_condition(&self) -> f64 {
        self.systems.iter().map(|s| s.condition).fold(0.0, f64::max)
    }

    pub fn star_local(&self, e: usize) -> usize {
        self.star_local[e]
    }

    pub fn facet_basis(&self, f: usize) -> &FacetBasis {
        &self.facet_bases[f]
    }
}

/// Piecewise-constant projection of `beta` on elements.
pub fn beta_p0_elements(space: &DGSpace, problem: &ProblemData) -> Vec<Vec3> {
    let mesh = space.mesh();
    (0..mesh.n_elements())
        .map(|e| {
            let vol = mesh.geometry[e].volume;
            space
                .element_quadrature(e)
                .iter()
                .fold(Vec3::zeros(), |acc, (x, w)| acc + problem.beta(x) * *w)
                / vol
        })
        .collect()
}

/// Piecewise-constant projection of `beta` on facets.
pub fn beta_p0_facets(space: &DGSpace, problem: &ProblemData) -> Vec<Vec3> {
    let mesh = space.mesh();
    (0..mesh.n_facets())
        .map(|f| {
            let area = mesh.facets[f].area;
            space
                .facet_quadrature(f)
                .iter()
                .fold(Vec3::zeros(), |acc, (x, w)| acc + problem.beta(x) * *w)
                / area
        })
        .collect()
}

/// Norms of `xi = v_h phi - Pi_h(v_h phi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Superconvergence {
    pub l2: f64,
    /// Broken `H^1` seminorm.
    pub h1: f64,
    /// `(sum_T |xi|^2_{L2(dT)})^{1/2}`.
    pub facet: f64,
    /// `|v_h|_{L2}` for normalization.
    pub vh_l2: f64,
}

/// `phi` returns the value and gradient of the weight.
pub fn superconvergence_check(
    proj: &TailoredProjection,
    phi: &(dyn Fn(&Vec3) -> (f64, Vec3) + Sync),
    vh: &DGFunction,
) -> Superconvergence {
    let space = proj.space;
    let mesh: &SimplicialMesh = space.mesh();
    let target = |e: usize, x: &Vec3| vh.eval(e, x) * phi(x).0;
    let pi = DGFunction {
        space,
        coeffs: proj.project(&target),
    };
    let mut out = Superconvergence {
        l2: 0.0,
        h1: 0.0,
        facet: 0.0,
        vh_l2: 0.0,
    };
    for e in 0..mesh.n_elements() {
        for (x, w) in space.element_quadrature(e) {
            let (v, jv) = vh.eval_with_jacobian(e, &x);
            let (p, gp) = phi(&x);
            let (q, jq) = pi.eval_with_jacobian(e, &x);
            let xi = v * p - q;
            let jxi: Mat3 = jv * p + v * gp.transpose() - jq;
            out.l2 += w * xi.norm_squared();
            out.h1 += w * jxi.norm_squared();
            out.vh_l2 += w * v.norm_squared();
        }
        for l in 0..=mesh.dim {
            let f = mesh.elem_facets[e][l];
            for (x, w) in space.facet_quadrature(f) {
                let xi = vh.eval(e, &x) * phi(&x).0 - pi.eval(e, &x);
                out.facet += w * xi.norm_squared();
            }
        }
    }
    Superconvergence {
        l2: out.l2.sqrt(),
        h1: out.h1.sqrt(),
        facet: out.facet.sqrt(),
        vh_l2: out.vh_l2.sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::mesh::{star_facets, unit_mesh};
    use crate::problems::preset;

    fn setup(dim: usize, n: usize, k: usize) -> (DGSpace, StarFacets) {
        let mesh = Arc::new(unit_mesh(dim, n).unwrap());
        let beta = if dim == 2 { Vec3::new(1.0, 1.0, 0.0) } else { Vec3::new(1.0, 2.0, 3.0) };
        let star = star_facets(&mesh, &|_| beta, 10.0);
        (DGSpace::new(mesh, k).unwrap(), star)
    }

    fn smooth(x: &Vec3) -> Vec3 {
        Vec3::new(x.y.sin() + x.z, (2.0 * x.x).cos(), (x.x * x.y).exp() - 1.0)
    }

    #[test]
    fn dimension_identity() {
        for dim in 2..=3 {
            for k in 1..=3 {
                let (v, f) = local_system_size(dim, k);
                assert_eq!(v + f, dim * dim_pk(dim, k), "d={dim} k={k}");
            }
        }
    }

    #[test]
    fn reproduces_polynomials() {
        for (dim, k) in [(2, 1), (2, 3), (3, 2)] {
            let (s, star) = setup(dim, 2, k);
            let proj = TailoredProjection::new(&s, &star).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            let coeffs: Vec<f64> = (0..s.n_dofs()).map(|_| rng.random::<f64>() - 0.5).collect();
            let u = DGFunction::from_coeffs(&s, coeffs.clone()).unwrap();
            let p = proj.project_function(&u);
            let err = p.iter().zip(&coeffs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-12, "{dim} {k}: {err}");
            assert!(proj.max_condition() < 1e3);
        }
    }

    /// Both sides of every defining equation computed by direct quadrature.
    #[test]
    fn moment_residuals() {
        for (dim, k) in [(2, 2), (3, 1)] {
            let (s, star) = setup(dim, 2, k);
            let proj = TailoredProjection::new(&s, &star).unwrap();
            let target = |_: usize, x: &Vec3| {
                let v = smooth(x);
                if dim == 2 {
                    Vec3::new(v.x, v.y, 0.0)
                } else {
                    v
                }
            };
            let pu = DGFunction::from_coeffs(&s, proj.project(&target)).unwrap();
            let mesh = s.mesh();
            let nk1 = dim_pk(dim, k - 1);
            let ns = s.n_scalar();
            let mut vals = vec![0.0; ns];
            let mut grads = vec![Vec3::zeros(); ns];
            let mut worst: f64 = 0.0;
            for e in 0..mesh.n_elements() {
                for c in 0..dim {
                    for j in 0..nk1 {
                        let (mut lhs, mut rhs) = (0.0, 0.0);
                        for (x, w) in s.element_quadrature(e) {
                            s.scalar_basis(e, &x, &mut vals, &mut grads);
                            lhs += w * pu.eval(e, &x)[c] * vals[j];
                            rhs += w * target(e, &x)[c] * vals[j];
                        }
                        worst = worst.max((lhs - rhs).abs() / rhs.abs().max(1.0));
                    }
                }
                for l in (0..=dim).filter(|&l| l != proj.star_local(e)) {
                    let f = mesh.elem_facets[e][l];
                    let n = mesh.outward_normal(e, l);
                    for qi in 0..proj.facet_basis(f).len() {
                        let (mut lhs, mut rhs) = (0.0, 0.0);
                        for (x, w) in s.facet_quadrature(f) {
                            let q = proj.facet_basis(f).eval(&x)[qi];
                            lhs += w * pu.eval(e, &x).dot(&n) * q;
                            rhs += w * target(e, &x).dot(&n) * q;
                        }
                        worst = worst.max((lhs - rhs).abs() / rhs.abs().max(1.0));
                    }
                }
            }
            assert!(worst <= 1e-12, "{worst}");
        }
    }

    #[test]
    fn idempotent_and_linear() {
        let (s, star) = setup(2, 3, 2);
        let proj = TailoredProjection::new(&s, &star).unwrap();
        let u = |_: usize, x: &Vec3| Vec3::new(x.y.sin(), x.x.exp(), 0.0);
        let w = |_: usize, x: &Vec3| Vec3::new(x.x * x.x * x.x, (x.x + x.y).cos(), 0.0);
        let pu = proj.project(&u);
        let pu_fn = DGFunction::from_coeffs(&s, pu.clone()).unwrap();
        let ppu = proj.project_function(&pu_fn);
        assert!(pu.iter().zip(&ppu).all(|(a, b)| (a - b).abs() < 1e-13));
        let pw = proj.project(&w);
        let (a, b) = (2.5, -0.75);
        let pc = proj.project(&|e, x| u(e, x) * a + w(e, x) * b);
        for i in 0..pc.len() {
            assert!((pc[i] - (a * pu[i] + b * pw[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn l2_rate_k_plus_one() {
        let mut errs = Vec::new();
        let mut hs = Vec::new();
        for n in [4, 8, 16] {
            let (s, star) = setup(2, n, 1);
            let proj = TailoredProjection::new(&s, &star).unwrap();
            let exact = |x: &Vec3| Vec3::new(x.y.sin(), x.x.sin(), 0.0);
            let pu = DGFunction::from_coeffs(&s, proj.project(&|_, x| exact(x))).unwrap();
            let mut e2 = 0.0;
            for e in 0..s.mesh().n_elements() {
                for (x, w) in s.element_quadrature(e) {
                    e2 += w * (pu.eval(e, &x) - exact(&x)).norm_squared();
                }
            }
            errs.push(e2.sqrt());
            hs.push(s.mesh().h());
        }
        let rate = crate::analysis::fitted_rate(&errs, &hs).unwrap();
        assert!(rate > 1.9, "{rate}");
    }

    #[test]
    fn constant_weight_is_exact() {
        let (s, star) = setup(2, 2, 1);
        let proj = TailoredProjection::new(&s, &star).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v = DGFunction::from_coeffs(&s, (0..s.n_dofs()).map(|_| rng.random::<f64>()).collect()).unwrap();
        let sc = superconvergence_check(&proj, &|_| (3.0, Vec3::zeros()), &v);
        assert!(sc.l2 < 1e-12 && sc.h1 < 1e-11 && sc.facet < 1e-12);
    }

    #[test]
    fn beta_projections() {
        let p = preset("exp3", 1e-9).unwrap();
        let mesh = Arc::new(p.mesh(8).unwrap());
        let s = DGSpace::new(mesh, 1).unwrap();
        let pe = beta_p0_elements(&s, &p);
        for e in 0..s.mesh().n_elements() {
            assert!((pe[e] - p.beta(&s.mesh().geometry[e].centroid)).norm() < 1e-14);
        }
        // |beta - P0 beta|_inf <= h |beta|_{1,inf}, sampled densely; |grad beta| = 1
        let h = s.mesh().h();
        let rule = crate::quadrature::quadrature(2, 20).unwrap();
        for e in 0..s.mesh().n_elements() {
            for b in &rule.points {
                let x = s.mesh().element_point(e, b);
                assert!((p.beta(&x) - pe[e]).norm() <= h);
            }
        }
        let pf = beta_p0_facets(&s, &p);
        let f = 3;
        assert!((pf[f] - p.beta(&s.mesh().facets[f].centroid)).norm() < 1e-14);
    }
}
