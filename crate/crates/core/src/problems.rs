//! Problem data: coefficients, forcing, boundary data and the experiment
//! presets.
//!
//! Boundary data follow the strong form of the problem. The Dirichlet datum
//! is `g_D = n x u + chi_in (u . n) n` in 3D and
//! `g_D = (Rn . u) Rn + chi_in (u . n) n` in 2D with `R` the quarter-turn
//! `[[0, 1], [-1, 0]]`; the Neumann datum is
//! `g_N = eps n x curl u + chi_in (beta . n) u` (in 2D `n x curl u` reduces
//! to `div(Ru) Rn`).

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix2, SymmetricEigen};

use crate::expr::{Expr, VectorExpr};
use crate::mesh::{unit_mesh, BoundaryKind, SimplicialMesh};
use crate::space::DGSpace;
use crate::{Error, Mat3, Result, Vec3};

pub type PointFn<T> = Arc<dyn Fn(&Vec3) -> T + Send + Sync>;
/// Boundary datum as a function of position, outward normal and whether the
/// facet is inflow.
pub type BoundaryFn = Arc<dyn Fn(&Vec3, &Vec3, bool) -> Vec3 + Send + Sync>;
pub type BoundaryPredicate = Arc<dyn Fn(&Vec3, &Vec3) -> Option<BoundaryKind> + Send + Sync>;

/// Vector field with its Jacobian, `jac[(i, j)] = d v_i / d x_j`.
#[derive(Clone)]
pub struct VectorField {
    value: PointFn<Vec3>,
    jacobian: PointFn<Mat3>,
    constant: bool,
}

impl VectorField {
    pub fn new(value: PointFn<Vec3>, jacobian: PointFn<Mat3>) -> Self {
        Self {
            value,
            jacobian,
            constant: false,
        }
    }

    pub fn constant(v: Vec3) -> Self {
        Self {
            value: Arc::new(move |_| v),
            jacobian: Arc::new(|_| Mat3::zeros()),
            constant: true,
        }
    }

    /// `v(x) = b + a x`.
    pub fn affine(b: Vec3, a: Mat3) -> Self {
        if a == Mat3::zeros() {
            return Self::constant(b);
        }
        Self {
            value: Arc::new(move |x| b + a * x),
            jacobian: Arc::new(move |_| a),
            constant: false,
        }
    }

    pub fn from_expr(v: VectorExpr) -> Self {
        let jac = v.jacobian();
        let constant = v.components.iter().all(Expr::is_constant);
        let dim = v.components.len();
        let vv = v.clone();
        Self {
            value: Arc::new(move |x| vv.eval(x)),
            jacobian: Arc::new(move |x| {
                let mut m = Mat3::zeros();
                for i in 0..dim {
                    for j in 0..dim {
                        m[(i, j)] = jac[i][j].eval(x);
                    }
                }
                m
            }),
            constant,
        }
    }

    pub fn value(&self, x: &Vec3) -> Vec3 {
        (self.value)(x)
    }

    pub fn jacobian(&self, x: &Vec3) -> Mat3 {
        (self.jacobian)(x)
    }

    pub fn curl(&self, x: &Vec3) -> Vec3 {
        curl_of(&self.jacobian(x))
    }

    pub fn is_constant(&self) -> bool {
        self.constant
    }
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField").field("constant", &self.constant).finish()
    }
}

/// Curl from a Jacobian `jac[(i, j)] = d v_i / d x_j`.
pub fn curl_of(j: &Mat3) -> Vec3 {
    Vec3::new(j[(2, 1)] - j[(1, 2)], j[(0, 2)] - j[(2, 0)], j[(1, 0)] - j[(0, 1)])
}

/// Quarter-turn `R n = (n_y, -n_x)` used by the 2D reduction.
pub fn rotate(n: &Vec3) -> Vec3 {
    Vec3::new(n.y, -n.x, 0.0)
}

/// Dirichlet datum produced by a boundary value `u`.
pub fn dirichlet_from_value(dim: usize, n: &Vec3, u: &Vec3, inflow: bool) -> Vec3 {
    let normal = if inflow { n * u.dot(n) } else { Vec3::zeros() };
    if dim == 2 {
        let rn = rotate(n);
        rn * rn.dot(u) + normal
    } else {
        n.cross(u) + normal
    }
}

/// Neumann datum produced by a boundary value `u` with curl `curl_u`.
pub fn neumann_from_value(eps: f64, n: &Vec3, u: &Vec3, curl_u: &Vec3, beta: &Vec3, inflow: bool) -> Vec3 {
    let mut g = n.cross(curl_u) * eps;
    if inflow {
        g += u * beta.dot(n);
    }
    g
}

/// Split a Dirichlet datum into the rotational trace `n x u` (on the z axis
/// in 2D) and the normal component `u . n`.
pub fn dirichlet_trace(dim: usize, n: &Vec3, g: &Vec3) -> (Vec3, f64) {
    let gn = g.dot(n);
    if dim == 2 {
        // (Rn . u) = n_y u_x - n_x u_y = -(n x u)_z
        let s = rotate(n).dot(g);
        (Vec3::new(0.0, 0.0, -s), gn)
    } else {
        (g - n * gn, gn)
    }
}

#[derive(Clone)]
pub struct ProblemData {
    pub name: String,
    pub dim: usize,
    pub eps: f64,
    pub beta: VectorField,
    pub gamma: PointFn<f64>,
    pub f: PointFn<Vec3>,
    pub dirichlet: BoundaryFn,
    pub neumann: BoundaryFn,
    pub boundary: BoundaryPredicate,
    pub exact: Option<VectorField>,
    /// Interior facets split into boundary facets before solving.
    pub slit: Option<PointFn<bool>>,
    /// Known violations of the analysis hypotheses, for reporting.
    pub notes: Vec<String>,
}

impl fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemData")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("eps", &self.eps)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

impl ProblemData {
    pub fn beta(&self, x: &Vec3) -> Vec3 {
        self.beta.value(x)
    }

    pub fn gamma(&self, x: &Vec3) -> f64 {
        (self.gamma)(x)
    }

    pub fn boundary_kind(&self, x: &Vec3, n: &Vec3) -> Option<BoundaryKind> {
        (self.boundary)(x, n)
    }

    /// Effective reaction matrix `(gamma - div(beta)/2) I + (J + J^T)/2`
    /// restricted to the active `dim x dim` block.
    pub fn effective_reaction(&self, x: &Vec3) -> Mat3 {
        let j = self.beta.jacobian(x);
        let div: f64 = (0..self.dim).map(|i| j[(i, i)]).sum();
        let mut m = (j + j.transpose()) * 0.5;
        for i in 0..self.dim {
            m[(i, i)] += self.gamma(x) - 0.5 * div;
        }
        if self.dim == 2 {
            for i in 0..3 {
                m[(2, i)] = 0.0;
                m[(i, 2)] = 0.0;
            }
        }
        m
    }

    /// Smallest eigenvalue of the effective reaction matrix.
    pub fn rho(&self, x: &Vec3) -> f64 {
        let m = self.effective_reaction(x);
        if self.dim == 2 {
            let m2 = Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
            SymmetricEigen::new(m2).eigenvalues.min()
        } else {
            SymmetricEigen::new(m).eigenvalues.min()
        }
    }

    /// Mesh of the unit square/cube with `n` cells per axis, with this
    /// problem's slit applied.
    pub fn mesh(&self, n: usize) -> Result<SimplicialMesh> {
        let mut m = unit_mesh(self.dim, n)?;
        if let Some(slit) = &self.slit {
            m.cut_facets(|f| slit(&f.centroid));
        }
        Ok(m)
    }

    pub fn has_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }
}

/// Boundary predicate from the box faces `x0 x1 y0 y1 z0 z1` of the unit
/// domain listed as Dirichlet; the remaining faces are Neumann.
pub fn faces_predicate(dim: usize, dirichlet_faces: &[&str]) -> Result<BoundaryPredicate> {
    let mut flags = [[false; 2]; 3];
    for face in dirichlet_faces {
        let (axis, side) = parse_face(face)?;
        if axis >= dim {
            return Err(Error::InvalidInput(format!("face {face} in {dim}D")));
        }
        flags[axis][side] = true;
    }
    Ok(Arc::new(move |x: &Vec3, _n: &Vec3| {
        let tol = 1e-12;
        let mut hits = Vec::new();
        for (axis, flag) in flags.iter().enumerate().take(dim) {
            if x[axis].abs() < tol {
                hits.push(flag[0]);
            }
            if (x[axis] - 1.0).abs() < tol {
                hits.push(flag[1]);
            }
        }
        match hits.as_slice() {
            [d] => Some(if *d { BoundaryKind::Dirichlet } else { BoundaryKind::Neumann }),
            // facet points lie on edges/corners only for bad sampling
            _ => None,
        }
    }))
}

fn parse_face(face: &str) -> Result<(usize, usize)> {
    let b = face.as_bytes();
    if b.len() != 2 {
        return Err(Error::InvalidInput(format!("bad face name {face:?}")));
    }
    let axis = match b[0] {
        b'x' => 0,
        b'y' => 1,
        b'z' => 2,
        _ => return Err(Error::InvalidInput(format!("bad face name {face:?}"))),
    };
    let side = match b[1] {
        b'0' => 0,
        b'1' => 1,
        _ => return Err(Error::InvalidInput(format!("bad face name {face:?}"))),
    };
    Ok((axis, side))
}

fn all_dirichlet() -> BoundaryPredicate {
    Arc::new(|_, _| Some(BoundaryKind::Dirichlet))
}

fn zero_boundary() -> BoundaryFn {
    Arc::new(|_, _, _| Vec3::zeros())
}

/// Boundary data derived from an exact solution.
fn exact_boundary(dim: usize, eps: f64, exact: &VectorField, beta: &VectorField) -> (BoundaryFn, BoundaryFn) {
    let (u1, u2, b2) = (exact.clone(), exact.clone(), beta.clone());
    let dirichlet: BoundaryFn = Arc::new(move |x, n, inflow| dirichlet_from_value(dim, n, &u1.value(x), inflow));
    let neumann: BoundaryFn = Arc::new(move |x, n, inflow| {
        neumann_from_value(eps, n, &u2.value(x), &u2.curl(x), &b2.value(x), inflow)
    });
    (dirichlet, neumann)
}

/// Preset names accepted by [`preset`].
pub const PRESETS: [&str; 5] = ["exp1", "exp2", "exp3", "exp4", "exp5"];

/// Experiment presets on the unit square/cube; `gamma = 0` throughout.
pub fn preset(name: &str, eps: f64) -> Result<ProblemData> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    match name {
        "exp1" => Ok(exp1(eps)),
        "exp2" => Ok(exp2(eps)),
        "exp3" => Ok(exp3(eps)),
        "exp4" => Ok(exp4(eps)),
        "exp5" => Ok(exp5(eps)),
        _ => Err(Error::InvalidInput(format!(
            "unknown preset {name:?} (expected one of {PRESETS:?})"
        ))),
    }
}

/// 3D smooth solution `u = (sin y, sin z, sin x)`, `beta = (1, 2, 3)`.
fn exp1(eps: f64) -> ProblemData {
    let exact = VectorField::new(
        Arc::new(|x| Vec3::new(x.y.sin(), x.z.sin(), x.x.sin())),
        Arc::new(|x| {
            let mut j = Mat3::zeros();
            j[(0, 1)] = x.y.cos();
            j[(1, 2)] = x.z.cos();
            j[(2, 0)] = x.x.cos();
            j
        }),
    );
    let beta = VectorField::constant(Vec3::new(1.0, 2.0, 3.0));
    // curl curl u = u, and -beta x curl u + grad(beta . u) = (2 cos y, 3 cos z, cos x)
    let f: PointFn<Vec3> = Arc::new(move |x| {
        Vec3::new(
            eps * x.y.sin() + 2.0 * x.y.cos(),
            eps * x.z.sin() + 3.0 * x.z.cos(),
            eps * x.x.sin() + x.x.cos(),
        )
    });
    let (dirichlet, neumann) = exact_boundary(3, eps, &exact, &beta);
    ProblemData {
        name: "exp1".into(),
        dim: 3,
        eps,
        beta,
        gamma: Arc::new(|_| 0.0),
        f,
        dirichlet,
        neumann,
        boundary: faces_predicate(3, &["x0", "x1", "y0", "y1"]).expect("faces"),
        exact: Some(exact),
        slit: None,
        notes: Vec::new(),
    }
}

/// 2D smooth solution `u = (sin y, sin x)`, `beta = (1, 1)`.
fn exp2(eps: f64) -> ProblemData {
    let exact = VectorField::new(
        Arc::new(|x| Vec3::new(x.y.sin(), x.x.sin(), 0.0)),
        Arc::new(|x| {
            let mut j = Mat3::zeros();
            j[(0, 1)] = x.y.cos();
            j[(1, 0)] = x.x.cos();
            j
        }),
    );
    let beta = VectorField::constant(Vec3::new(1.0, 1.0, 0.0));
    // R grad(div Ru) = u, and -R beta div(Ru) + grad(beta . u) = (cos y, cos x)
    let f: PointFn<Vec3> = Arc::new(move |x| Vec3::new(eps * x.y.sin() + x.y.cos(), eps * x.x.sin() + x.x.cos(), 0.0));
    let (dirichlet, neumann) = exact_boundary(2, eps, &exact, &beta);
    ProblemData {
        name: "exp2".into(),
        dim: 2,
        eps,
        beta,
        gamma: Arc::new(|_| 0.0),
        f,
        dirichlet,
        neumann,
        boundary: faces_predicate(2, &["y0", "y1"]).expect("faces"),
        exact: Some(exact),
        slit: None,
        notes: Vec::new(),
    }
}

/// Rotating flow around the centre with data prescribed on the slit
/// `{1/2} x [0, 1/2]`. Outer boundary: homogeneous Dirichlet; `f = 0`.
fn exp3(eps: f64) -> ProblemData {
    let beta = VectorField::affine(
        Vec3::new(-0.5, 0.5, 0.0),
        Mat3::new(0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0),
    );
    let on_slit = |x: &Vec3| (x.x - 0.5).abs() < 1e-12 && x.y > 1e-12 && x.y < 0.5 + 1e-12;
    let dirichlet: BoundaryFn = Arc::new(move |x, n, inflow| {
        let u = if on_slit(x) {
            let s = (2.0 * PI * x.y).sin().powi(2);
            Vec3::new(s, s, 0.0)
        } else {
            Vec3::zeros()
        };
        dirichlet_from_value(2, n, &u, inflow)
    });
    ProblemData {
        name: "exp3".into(),
        dim: 2,
        eps,
        beta,
        gamma: Arc::new(|_| 0.0),
        f: Arc::new(|_| Vec3::zeros()),
        dirichlet,
        neumann: zero_boundary(),
        boundary: all_dirichlet(),
        exact: None,
        slit: Some(Arc::new(move |c: &Vec3| (c.x - 0.5).abs() < 1e-12 && c.y < 0.5)),
        notes: vec!["beta has a stationary point and closed streamlines".into()],
    }
}

/// Interior layer: `beta = (1/2, sqrt(3)/2)`, discontinuous Dirichlet data.
fn exp4(eps: f64) -> ProblemData {
    let dirichlet: BoundaryFn = Arc::new(|x, n, inflow| {
        let one = x.y.abs() < 1e-12 || (x.x.abs() < 1e-12 && x.y <= 0.2);
        let u = if one { Vec3::new(1.0, 1.0, 0.0) } else { Vec3::zeros() };
        dirichlet_from_value(2, n, &u, inflow)
    });
    ProblemData {
        name: "exp4".into(),
        dim: 2,
        eps,
        beta: VectorField::constant(Vec3::new(0.5, 3f64.sqrt() / 2.0, 0.0)),
        gamma: Arc::new(|_| 0.0),
        f: Arc::new(|_| Vec3::zeros()),
        dirichlet,
        neumann: zero_boundary(),
        boundary: all_dirichlet(),
        exact: None,
        slit: None,
        notes: Vec::new(),
    }
}

/// Boundary layer: `beta = (1, 2)`, `f = (1, 1)`, homogeneous Dirichlet.
fn exp5(eps: f64) -> ProblemData {
    ProblemData {
        name: "exp5".into(),
        dim: 2,
        eps,
        beta: VectorField::constant(Vec3::new(1.0, 2.0, 0.0)),
        gamma: Arc::new(|_| 0.0),
        f: Arc::new(|_| Vec3::new(1.0, 1.0, 0.0)),
        dirichlet: zero_boundary(),
        neumann: zero_boundary(),
        boundary: all_dirichlet(),
        exact: None,
        slit: None,
        notes: Vec::new(),
    }
}

/// User-defined problem from expressions. When `exact` is given the forcing
/// and boundary data are derived from it symbolically; otherwise `f`, the
/// Dirichlet boundary value and `g_N` must be supplied.
#[derive(Debug, Clone, Default)]
pub struct ExprProblem {
    pub dim: usize,
    pub eps: f64,
    pub beta: Vec<String>,
    pub gamma: String,
    pub exact: Option<Vec<String>>,
    pub f: Option<Vec<String>>,
    pub dirichlet_value: Option<Vec<String>>,
    pub neumann: Option<Vec<String>>,
    pub dirichlet_faces: Vec<String>,
}

impl ExprProblem {
    pub fn build(&self) -> Result<ProblemData> {
        let dim = self.dim;
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidInput(format!("dimension {dim}")));
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidInput("eps must be positive".into()));
        }
        let eps = self.eps;
        let beta_expr = VectorExpr::parse(dim, &self.beta)?;
        let beta = VectorField::from_expr(beta_expr.clone());
        let gamma_expr = Expr::parse(if self.gamma.is_empty() { "0" } else { &self.gamma })?;
        let g2 = gamma_expr.clone();
        let gamma: PointFn<f64> = Arc::new(move |x| g2.eval(x));
        let faces: Vec<&str> = self.dirichlet_faces.iter().map(String::as_str).collect();
        let boundary = faces_predicate(dim, &faces)?;

        let (f, dirichlet, neumann, exact) = if let Some(exact_src) = &self.exact {
            let u = VectorExpr::parse(dim, exact_src)?;
            let f_expr = match &self.f {
                Some(src) => VectorExpr::parse(dim, src)?,
                None => strong_operator(dim, eps, &beta_expr, &gamma_expr, &u),
            };
            let exact = VectorField::from_expr(u);
            let (d, n) = exact_boundary(dim, eps, &exact, &beta);
            let f: PointFn<Vec3> = Arc::new(move |x| f_expr.eval(x));
            (f, d, n, Some(exact))
        } else {
            let f_expr = VectorExpr::parse(
                dim,
                self.f
                    .as_ref()
                    .ok_or_else(|| Error::InvalidInput("f required without an exact solution".into()))?,
            )?;
            let f: PointFn<Vec3> = Arc::new(move |x| f_expr.eval(x));
            let dirichlet: BoundaryFn = match &self.dirichlet_value {
                Some(src) => {
                    let u = VectorExpr::parse(dim, src)?;
                    Arc::new(move |x, n, inflow| dirichlet_from_value(dim, n, &u.eval(x), inflow))
                }
                None => zero_boundary(),
            };
            let neumann: BoundaryFn = match &self.neumann {
                Some(src) => {
                    let g = VectorExpr::parse(dim, src)?;
                    Arc::new(move |x, _, _| g.eval(x))
                }
                None => zero_boundary(),
            };
            (f, dirichlet, neumann, None)
        };
        Ok(ProblemData {
            name: "custom".into(),
            dim,
            eps,
            beta,
            gamma,
            f,
            dirichlet,
            neumann,
            boundary,
            exact,
            slit: None,
            notes: Vec::new(),
        })
    }
}

/// Symbolic `curl(eps curl u) - beta x curl u + grad(beta . u) + gamma u`
/// for a field in `dim` dimensions (2D fields are embedded with zero third
/// component and no z dependence).
pub fn strong_operator(dim: usize, eps: f64, beta: &VectorExpr, gamma: &Expr, u: &VectorExpr) -> VectorExpr {
    use crate::expr::{add, mul, sub};
    let zero = Expr::Const(0.0);
    let comp = |v: &VectorExpr, i: usize| v.components.get(i).cloned().unwrap_or(zero.clone());
    let d = |e: &Expr, j: usize| if j < dim { e.diff(j) } else { zero.clone() };
    let curl = |v: &[Expr; 3]| -> [Expr; 3] {
        [
            sub(d(&v[2], 1), d(&v[1], 2)),
            sub(d(&v[0], 2), d(&v[2], 0)),
            sub(d(&v[1], 0), d(&v[0], 1)),
        ]
    };
    let uu = [comp(u, 0), comp(u, 1), comp(u, 2)];
    let bb = [comp(beta, 0), comp(beta, 1), comp(beta, 2)];
    let cu = curl(&uu);
    let ccu = curl(&cu);
    // beta x curl u
    let bxc = [
        sub(mul(bb[1].clone(), cu[2].clone()), mul(bb[2].clone(), cu[1].clone())),
        sub(mul(bb[2].clone(), cu[0].clone()), mul(bb[0].clone(), cu[2].clone())),
        sub(mul(bb[0].clone(), cu[1].clone()), mul(bb[1].clone(), cu[0].clone())),
    ];
    let bu = add(
        add(mul(bb[0].clone(), uu[0].clone()), mul(bb[1].clone(), uu[1].clone())),
        mul(bb[2].clone(), uu[2].clone()),
    );
    let components = (0..dim)
        .map(|i| {
            let t = add(mul(Expr::Const(eps), ccu[i].clone()), sub(d(&bu, i), bxc[i].clone()));
            add(t, mul(gamma.clone(), uu[i].clone()))
        })
        .collect();
    VectorExpr { components }
}

/// Per-element minimum of `rho` over the element quadrature points.
pub fn rho_bar(problem: &ProblemData, space: &DGSpace) -> Vec<f64> {
    let mesh = space.mesh();
    (0..mesh.n_elements())
        .map(|e| {
            space
                .element_rule()
                .points
                .iter()
                .map(|b| problem.rho(&mesh.element_point(e, b)))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// `true` when `rho_bar >= -tol` everywhere (degenerate Friedrichs
/// positivity).
pub fn friedrichs_ok(rho_bar: &[f64], tol: f64) -> bool {
    rho_bar.iter().all(|&r| r >= -tol)
}
