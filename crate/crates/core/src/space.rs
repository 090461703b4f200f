//! Discontinuous vector-valued polynomial spaces.
//!
//! Each element carries an orthonormal basis of `P_k` obtained by
//! Gram-Schmidt on the graded monomials in scaled local coordinates
//! `(x - x_T) / h_T`. Because the monomials are ordered by total degree, the
//! first `dim(P_j)` basis functions span `P_j` for every `j <= k`.
//!
//! Vector unknowns are ordered element by element, then component, then
//! scalar basis function.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::mesh::SimplicialMesh;
use crate::problems::{curl_of, VectorField};
use crate::quadrature::{quadrature, QuadratureRule};
use crate::{Error, Mat3, Result, Vec3};

pub const MAX_SPACE_DEGREE: usize = 6;

/// Number of monomials of total degree at most `k` in `dim` variables.
pub fn dim_pk(dim: usize, k: usize) -> usize {
    (1..=dim).fold(1, |acc, i| acc * (k + i) / i)
}

/// Exponents of the graded monomials of degree `<= k`.
pub fn graded_exponents(dim: usize, k: usize) -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    for total in 0..=k as u32 {
        if dim == 2 {
            for a in (0..=total).rev() {
                out.push([a, total - a, 0]);
            }
        } else {
            for a in (0..=total).rev() {
                for b in (0..=total - a).rev() {
                    out.push([a, b, total - a - b]);
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct DGSpace {
    mesh: Arc<SimplicialMesh>,
    degree: usize,
    n_scalar: usize,
    exponents: Vec<[u32; 3]>,
    /// Per element, row-major lower-triangular `L^{-1}` with `G = L L^T` the
    /// monomial Gram matrix.
    coeffs: Vec<Vec<f64>>,
    elem_rule: QuadratureRule,
    facet_rule: QuadratureRule,
}

impl DGSpace {
    pub fn new(mesh: Arc<SimplicialMesh>, degree: usize) -> Result<Self> {
        Self::with_quadrature(mesh, degree, 2 * degree + 2)
    }

    /// Space with element and facet rules exact to `quad_degree`.
    pub fn with_quadrature(mesh: Arc<SimplicialMesh>, degree: usize, quad_degree: usize) -> Result<Self> {
        if degree > MAX_SPACE_DEGREE {
            return Err(Error::UnsupportedDegree {
                requested: degree,
                max: MAX_SPACE_DEGREE,
            });
        }
        let dim = mesh.dim;
        let elem_rule = quadrature(dim, quad_degree.max(2 * degree))?;
        let facet_rule = quadrature(dim - 1, quad_degree.max(2 * degree))?;
        let exponents = graded_exponents(dim, degree);
        let n_scalar = exponents.len();
        let mut space = DGSpace {
            mesh,
            degree,
            n_scalar,
            exponents,
            coeffs: Vec::new(),
            elem_rule,
            facet_rule,
        };
        let coeffs: Result<Vec<Vec<f64>>> =
            (0..space.mesh.n_elements()).into_par_iter().map(|e| space.orthonormalize(e)).collect();
        space.coeffs = coeffs?;
        Ok(space)
    }

    fn orthonormalize(&self, e: usize) -> Result<Vec<f64>> {
        let n = self.n_scalar;
        let g = &self.mesh.geometry[e];
        let weights = self.elem_rule.normalized_weights();
        let mut gram = DMatrix::<f64>::zeros(n, n);
        let mut m = vec![0.0; n];
        let mut dm = vec![Vec3::zeros(); n];
        for (p, w) in self.elem_rule.points.iter().zip(&weights) {
            let x = self.mesh.element_point(e, p);
            self.monomials(e, &x, &mut m, &mut dm);
            for i in 0..n {
                for j in 0..=i {
                    gram[(i, j)] += w * g.volume * m[i] * m[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                gram[(j, i)] = gram[(i, j)];
            }
        }
        let chol = gram.cholesky().ok_or(Error::SingularLocalSystem {
            element: e,
            condition: f64::INFINITY,
        })?;
        let l = chol.l();
        let linv = l
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .ok_or(Error::SingularLocalSystem {
                element: e,
                condition: f64::INFINITY,
            })?;
        let mut c = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                c[i * n + j] = linv[(i, j)];
            }
        }
        Ok(c)
    }

    fn monomials(&self, e: usize, x: &Vec3, m: &mut [f64], dm: &mut [Vec3]) {
        let g = &self.mesh.geometry[e];
        let s = g.diameter;
        let xi = (x - g.centroid) / s;
        let k = self.degree;
        // powers[a][p] = xi_a^p
        let mut powers = [[1.0; MAX_SPACE_DEGREE + 1]; 3];
        for a in 0..3 {
            for p in 1..=k {
                powers[a][p] = powers[a][p - 1] * xi[a];
            }
        }
        for (i, ex) in self.exponents.iter().enumerate() {
            let [a, b, c] = ex.map(|v| v as usize);
            m[i] = powers[0][a] * powers[1][b] * powers[2][c];
            let dx = if a > 0 { a as f64 * powers[0][a - 1] * powers[1][b] * powers[2][c] } else { 0.0 };
            let dy = if b > 0 { b as f64 * powers[0][a] * powers[1][b - 1] * powers[2][c] } else { 0.0 };
            let dz = if c > 0 { c as f64 * powers[0][a] * powers[1][b] * powers[2][c - 1] } else { 0.0 };
            dm[i] = Vec3::new(dx, dy, dz) / s;
        }
    }

    /// Values and gradients of the orthonormal scalar basis of element `e`.
    pub fn scalar_basis(&self, e: usize, x: &Vec3, vals: &mut [f64], grads: &mut [Vec3]) {
        let n = self.n_scalar;
        let mut m = [0.0; 84];
        let mut dm = [Vec3::zeros(); 84];
        self.monomials(e, x, &mut m[..n], &mut dm[..n]);
        let c = &self.coeffs[e];
        for i in 0..n {
            let row = &c[i * n..i * n + i + 1];
            let mut v = 0.0;
            let mut g = Vec3::zeros();
            for (j, cij) in row.iter().enumerate() {
                v += cij * m[j];
                g += dm[j] * *cij;
            }
            vals[i] = v;
            grads[i] = g;
        }
    }

    pub fn mesh(&self) -> &SimplicialMesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> Arc<SimplicialMesh> {
        self.mesh.clone()
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Scalar basis functions per element.
    pub fn n_scalar(&self) -> usize {
        self.n_scalar
    }

    /// Vector unknowns per element.
    pub fn n_local(&self) -> usize {
        self.dim() * self.n_scalar
    }

    pub fn n_dofs(&self) -> usize {
        self.n_local() * self.mesh.n_elements()
    }

    pub fn dof(&self, e: usize, comp: usize, i: usize) -> usize {
        e * self.n_local() + comp * self.n_scalar + i
    }

    pub fn element_rule(&self) -> &QuadratureRule {
        &self.elem_rule
    }

    pub fn facet_rule(&self) -> &QuadratureRule {
        &self.facet_rule
    }

    /// Physical quadrature points and weights on element `e`.
    pub fn element_quadrature(&self, e: usize) -> Vec<(Vec3, f64)> {
        let vol = self.mesh.geometry[e].volume;
        let m = self.elem_rule.reference_measure();
        self.elem_rule
            .points
            .iter()
            .zip(&self.elem_rule.weights)
            .map(|(p, w)| (self.mesh.element_point(e, p), w / m * vol))
            .collect()
    }

    /// Physical quadrature points and weights on facet `f`.
    pub fn facet_quadrature(&self, f: usize) -> Vec<(Vec3, f64)> {
        let area = self.mesh.facets[f].area;
        let m = self.facet_rule.reference_measure();
        self.facet_rule
            .points
            .iter()
            .zip(&self.facet_rule.weights)
            .map(|(p, w)| (self.mesh.facet_point(f, p), w / m * area))
            .collect()
    }

    /// L2 projection of `target` onto the space. With an orthonormal basis
    /// the coefficients are the moments.
    pub fn project_l2(&self, target: &(dyn Fn(usize, &Vec3) -> Vec3 + Sync)) -> Vec<f64> {
        let ns = self.n_scalar;
        let d = self.dim();
        let blocks: Vec<Vec<f64>> = (0..self.mesh.n_elements())
            .into_par_iter()
            .map(|e| {
                let mut out = vec![0.0; d * ns];
                let mut vals = vec![0.0; ns];
                let mut grads = vec![Vec3::zeros(); ns];
                for (x, w) in self.element_quadrature(e) {
                    let t = target(e, &x);
                    self.scalar_basis(e, &x, &mut vals, &mut grads);
                    for c in 0..d {
                        for i in 0..ns {
                            out[c * ns + i] += w * t[c] * vals[i];
                        }
                    }
                }
                out
            })
            .collect();
        blocks.concat()
    }

    pub fn project_field(&self, field: &VectorField) -> Vec<f64> {
        self.project_l2(&|_, x| field.value(x))
    }
}

/// Piecewise field that can be evaluated element by element.
pub trait ElementField: Sync {
    fn value(&self, e: usize, x: &Vec3) -> Vec3;
    /// `jac[(i, j)] = d v_i / d x_j`.
    fn jacobian(&self, e: usize, x: &Vec3) -> Mat3;
    fn curl(&self, e: usize, x: &Vec3) -> Vec3 {
        curl_of(&self.jacobian(e, x))
    }
}

impl ElementField for VectorField {
    fn value(&self, _e: usize, x: &Vec3) -> Vec3 {
        VectorField::value(self, x)
    }
    fn jacobian(&self, _e: usize, x: &Vec3) -> Mat3 {
        VectorField::jacobian(self, x)
    }
}

/// `a - b`.
pub struct Difference<'a, A: ?Sized, B: ?Sized>(pub &'a A, pub &'a B);

impl<A: ElementField + ?Sized, B: ElementField + ?Sized> ElementField for Difference<'_, A, B> {
    fn value(&self, e: usize, x: &Vec3) -> Vec3 {
        self.0.value(e, x) - self.1.value(e, x)
    }
    fn jacobian(&self, e: usize, x: &Vec3) -> Mat3 {
        self.0.jacobian(e, x) - self.1.jacobian(e, x)
    }
}

#[derive(Debug, Clone)]
pub struct DGFunction<'s> {
    pub space: &'s DGSpace,
    pub coeffs: Vec<f64>,
}

impl<'s> DGFunction<'s> {
    pub fn zeros(space: &'s DGSpace) -> Self {
        Self {
            space,
            coeffs: vec![0.0; space.n_dofs()],
        }
    }

    pub fn from_coeffs(space: &'s DGSpace, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.n_dofs() {
            return Err(Error::InvalidInput(format!(
                "coefficient vector has length {}, space has {} unknowns",
                coeffs.len(),
                space.n_dofs()
            )));
        }
        Ok(Self { space, coeffs })
    }

    pub fn local(&self, e: usize) -> &[f64] {
        let nl = self.space.n_local();
        &self.coeffs[e * nl..(e + 1) * nl]
    }

    /// Value and Jacobian on element `e` at `x` (the point need not lie in
    /// the element; the local polynomial is extended).
    pub fn eval_with_jacobian(&self, e: usize, x: &Vec3) -> (Vec3, Mat3) {
        let ns = self.space.n_scalar;
        let mut vals = [0.0; 84];
        let mut grads = [Vec3::zeros(); 84];
        self.space.scalar_basis(e, x, &mut vals[..ns], &mut grads[..ns]);
        let loc = self.local(e);
        let mut v = Vec3::zeros();
        let mut j = Mat3::zeros();
        for c in 0..self.space.dim() {
            for i in 0..ns {
                let a = loc[c * ns + i];
                v[c] += a * vals[i];
                for k in 0..3 {
                    j[(c, k)] += a * grads[i][k];
                }
            }
        }
        (v, j)
    }

    pub fn eval(&self, e: usize, x: &Vec3) -> Vec3 {
        self.eval_with_jacobian(e, x).0
    }

    /// In 2D the curl has only a z component, equal to `div(R u)`.
    pub fn eval_curl(&self, e: usize, x: &Vec3) -> Vec3 {
        curl_of(&self.eval_with_jacobian(e, x).1)
    }

    pub fn check_element(&self, e: usize) -> Result<()> {
        let n = self.space.mesh().n_elements();
        if e >= n {
            return Err(Error::ElementOutOfRange { element: e, n_elements: n });
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            space: self.space,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }
}

impl ElementField for DGFunction<'_> {
    fn value(&self, e: usize, x: &Vec3) -> Vec3 {
        self.eval(e, x)
    }
    fn jacobian(&self, e: usize, x: &Vec3) -> Mat3 {
        self.eval_with_jacobian(e, x).1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::unit_mesh;

    fn space(dim: usize, n: usize, k: usize) -> DGSpace {
        DGSpace::new(Arc::new(unit_mesh(dim, n).unwrap()), k).unwrap()
    }

    #[test]
    fn counts() {
        assert_eq!(dim_pk(2, 1), 3);
        assert_eq!(dim_pk(2, 3), 10);
        assert_eq!(dim_pk(3, 2), 10);
        assert_eq!(dim_pk(3, 4), 35);
        for (d, k) in [(2, 0), (2, 4), (3, 3), (3, 6)] {
            assert_eq!(graded_exponents(d, k).len(), dim_pk(d, k));
        }
        let s = space(3, 1, 2);
        assert_eq!(s.n_local(), 30);
        assert_eq!(s.n_dofs(), 180);
        assert!(DGSpace::new(Arc::new(unit_mesh(2, 1).unwrap()), 9).is_err());
    }

    /// Gram matrix of the basis computed with an independent, higher-order
    /// rule is the identity.
    #[test]
    fn basis_is_orthonormal() {
        for (dim, k) in [(2, 3), (3, 2)] {
            let s = space(dim, 2, k);
            let rule = quadrature(dim, 2 * k + 6).unwrap();
            let ns = s.n_scalar();
            let mut vals = vec![0.0; ns];
            let mut grads = vec![Vec3::zeros(); ns];
            for e in [0, s.mesh().n_elements() - 1] {
                let vol = s.mesh().geometry[e].volume;
                let mut g = DMatrix::<f64>::zeros(ns, ns);
                for (p, w) in rule.points.iter().zip(&rule.weights) {
                    let x = s.mesh().element_point(e, p);
                    s.scalar_basis(e, &x, &mut vals, &mut grads);
                    for i in 0..ns {
                        for j in 0..ns {
                            g[(i, j)] += w / rule.reference_measure() * vol * vals[i] * vals[j];
                        }
                    }
                }
                assert!((g - DMatrix::identity(ns, ns)).amax() < 1e-10);
            }
        }
    }

    #[test]
    fn nested_hierarchy() {
        // the first dim(P_1) functions are affine: their gradients are constant
        let s = space(2, 1, 3);
        let ns = s.n_scalar();
        let mut v1 = vec![0.0; ns];
        let mut g1 = vec![Vec3::zeros(); ns];
        let mut v2 = v1.clone();
        let mut g2 = g1.clone();
        s.scalar_basis(0, &Vec3::new(0.6, 0.1, 0.0), &mut v1, &mut g1);
        s.scalar_basis(0, &Vec3::new(0.9, 0.5, 0.0), &mut v2, &mut g2);
        for i in 0..3 {
            assert!((g1[i] - g2[i]).norm() < 1e-12);
        }
        assert!((g1[5] - g2[5]).norm() > 1e-6);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let s = space(3, 1, 3);
        let ns = s.n_scalar();
        let x = Vec3::new(0.3, 0.2, 0.25);
        let mut v = vec![0.0; ns];
        let mut g = vec![Vec3::zeros(); ns];
        s.scalar_basis(2, &x, &mut v, &mut g);
        let h = 1e-6;
        for a in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[a] += h;
            xm[a] -= h;
            let mut vp = vec![0.0; ns];
            let mut vm = vec![0.0; ns];
            let mut scratch = vec![Vec3::zeros(); ns];
            s.scalar_basis(2, &xp, &mut vp, &mut scratch);
            s.scalar_basis(2, &xm, &mut vm, &mut scratch);
            for i in 0..ns {
                let fd = (vp[i] - vm[i]) / (2.0 * h);
                assert!((fd - g[i][a]).abs() < 1e-5 * (1.0 + fd.abs()), "{i} {a}");
            }
        }
    }

    #[test]
    fn projection_reproduces_polynomials_at_vertices() {
        for (dim, k) in [(2, 2), (3, 1), (3, 2)] {
            let s = space(dim, 2, k);
            let p = move |x: &Vec3| {
                let q = if k >= 2 { x.x * x.y } else { 0.0 };
                Vec3::new(1.0 + 2.0 * x.x - x.y + q, 3.0 * x.y + x.z - q, if dim == 3 { 0.5 - x.z + q } else { 0.0 })
            };
            let u = DGFunction::from_coeffs(&s, s.project_l2(&|_, x| p(x))).unwrap();
            for e in 0..s.mesh().n_elements() {
                for &v in s.mesh().element_vertices(e) {
                    let x = s.mesh().vertices[v];
                    assert!((u.eval(e, &x) - p(&x)).norm() < 1e-11);
                }
            }
        }
    }

    #[test]
    fn curl_of_2d_fields() {
        let s = space(2, 2, 1);
        // u = (-y, x): curl = 2
        let u = DGFunction::from_coeffs(&s, s.project_l2(&|_, x| Vec3::new(-x.y, x.x, 0.0))).unwrap();
        // u = (x, y): curl free
        let w = DGFunction::from_coeffs(&s, s.project_l2(&|_, x| Vec3::new(x.x, x.y, 0.0))).unwrap();
        let x = Vec3::new(0.2, 0.3, 0.0);
        assert!((u.eval_curl(1, &x) - Vec3::new(0.0, 0.0, 2.0)).norm() < 1e-12);
        assert!(w.eval_curl(1, &x).norm() < 1e-12);
    }

    #[test]
    fn constant_field_roundtrip() {
        let s = space(3, 1, 2);
        let c = Vec3::new(1.0, -2.0, 0.5);
        let u = DGFunction::from_coeffs(&s, s.project_l2(&|_, _| c)).unwrap();
        assert!((u.eval(3, &Vec3::new(0.4, 0.4, 0.7)) - c).norm() < 1e-12);
        assert!(DGFunction::from_coeffs(&s, vec![0.0; 3]).is_err());
        assert!(u.check_element(6).is_err());
    }
}
