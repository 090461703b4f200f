//! Field dumps and field statistics.

use std::io::Write;

use crate::mesh::SimplicialMesh;
use crate::problems::ProblemData;
use crate::space::DGFunction;
use crate::{Result, Vec3};

/// Bucket grid over the mesh bounding box for point location.
#[derive(Debug, Clone)]
pub struct PointLocator<'m> {
    mesh: &'m SimplicialMesh,
    n: usize,
    buckets: Vec<Vec<usize>>,
}

impl<'m> PointLocator<'m> {
    pub fn new(mesh: &'m SimplicialMesh) -> Self {
        let n = ((mesh.n_elements() as f64).powf(1.0 / mesh.dim as f64).ceil() as usize).max(1);
        let mut loc = PointLocator {
            mesh,
            n,
            buckets: vec![Vec::new(); n.pow(mesh.dim as u32)],
        };
        for e in 0..mesh.n_elements() {
            let vs = mesh.element_vertices(e);
            let mut lo = [usize::MAX; 3];
            let mut hi = [0; 3];
            for &v in vs {
                let c = loc.cell(&mesh.vertices[v]);
                for i in 0..mesh.dim {
                    lo[i] = lo[i].min(c[i]);
                    hi[i] = hi[i].max(c[i]);
                }
            }
            let z_range = if mesh.dim == 3 { lo[2]..=hi[2] } else { 0..=0 };
            for i in lo[0]..=hi[0] {
                for j in lo[1]..=hi[1] {
                    for k in z_range.clone() {
                        let idx = loc.index([i, j, k]);
                        loc.buckets[idx].push(e);
                    }
                }
            }
        }
        loc
    }

    fn cell(&self, x: &Vec3) -> [usize; 3] {
        let (lo, hi) = self.mesh.bbox;
        let mut c = [0; 3];
        for i in 0..self.mesh.dim {
            let t = (x[i] - lo[i]) / (hi[i] - lo[i]);
            c[i] = ((t * self.n as f64).floor().max(0.0) as usize).min(self.n - 1);
        }
        c
    }

    fn index(&self, c: [usize; 3]) -> usize {
        (c[2] * self.n + c[1]) * self.n + c[0]
    }

    /// Element containing `x` (boundary points go to the first match).
    pub fn find(&self, x: &Vec3) -> Option<usize> {
        let dim = self.mesh.dim;
        self.buckets[self.index(self.cell(x))].iter().copied().find(|&e| {
            let b = self.mesh.geometry[e].barycentric(dim, x);
            b[..=dim].iter().all(|&l| l >= -1e-12)
        })
    }
}

/// Sample `u` on a uniform `(res + 1)^d` grid over the bounding box. 2D
/// rows are `x,y,u1,u2`; 3D rows are `x,y,z,u1,u2,u3`. Points outside the
/// mesh are skipped.
pub fn write_grid_csv(w: &mut impl Write, u: &DGFunction, res: usize) -> Result<()> {
    let mesh = u.space.mesh();
    let loc = PointLocator::new(mesh);
    let (lo, hi) = mesh.bbox;
    let res = res.max(1);
    let dim = mesh.dim;
    if dim == 2 {
        writeln!(w, "x,y,u1,u2")?;
    } else {
        writeln!(w, "x,y,z,u1,u2,u3")?;
    }
    let nz = if dim == 3 { res } else { 0 };
    for k in 0..=nz {
        for j in 0..=res {
            for i in 0..=res {
                let t = Vec3::new(i as f64, j as f64, k as f64) / res as f64;
                let mut x = lo + (hi - lo).component_mul(&t);
                if dim == 2 {
                    x.z = 0.0;
                }
                let Some(e) = loc.find(&x) else { continue };
                let v = u.eval(e, &x);
                if dim == 2 {
                    writeln!(w, "{},{},{:e},{:e}", x.x, x.y, v.x, v.y)?;
                } else {
                    writeln!(w, "{},{},{},{:e},{:e},{:e}", x.x, x.y, x.z, v.x, v.y, v.z)?;
                }
            }
        }
    }
    Ok(())
}

/// Legacy ASCII VTK unstructured grid with element-wise duplicated vertices
/// so the discontinuous field is represented exactly at the vertices.
pub fn write_vtk(w: &mut impl Write, u: &DGFunction, title: &str) -> Result<()> {
    let mesh = u.space.mesh();
    let nv = mesh.dim + 1;
    let ne = mesh.n_elements();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{}", title.lines().next().unwrap_or(""))?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", ne * nv)?;
    for e in 0..ne {
        for &v in mesh.element_vertices(e) {
            let p = mesh.vertices[v];
            writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
        }
    }
    writeln!(w, "CELLS {} {}", ne, ne * (nv + 1))?;
    for e in 0..ne {
        let ids: Vec<String> = (0..nv).map(|i| (e * nv + i).to_string()).collect();
        writeln!(w, "{} {}", nv, ids.join(" "))?;
    }
    writeln!(w, "CELL_TYPES {ne}")?;
    let cell_type = if mesh.dim == 2 { 5 } else { 10 };
    for _ in 0..ne {
        writeln!(w, "{cell_type}")?;
    }
    writeln!(w, "POINT_DATA {}", ne * nv)?;
    writeln!(w, "VECTORS u double")?;
    for e in 0..ne {
        for &v in mesh.element_vertices(e) {
            let val = u.eval(e, &mesh.vertices[v]);
            writeln!(w, "{:e} {:e} {:e}", val.x, val.y, val.z)?;
        }
    }
    Ok(())
}

pub const STATS_HEADER: &str = "h,dofs,linf,jump_norm,tv_beta";

/// Statistics of a discrete field without reference solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldStats {
    pub h: f64,
    pub dofs: usize,
    /// Largest `|u|` over quadrature points and element vertices.
    pub linf: f64,
    /// `sum_{interior F} |[[u]]_F|^2_F`.
    pub jump_norm: f64,
    /// Total variation of `u1` along `beta`:
    /// `sum_T int |beta . grad u1| + sum_{interior F} int |beta . n| |[[u1]]|`.
    pub tv_beta: f64,
}

pub fn linf(u: &DGFunction) -> f64 {
    let space = u.space;
    let mesh = space.mesh();
    let mut m: f64 = 0.0;
    for e in 0..mesh.n_elements() {
        for (x, _) in space.element_quadrature(e) {
            m = m.max(u.eval(e, &x).norm());
        }
        for &v in mesh.element_vertices(e) {
            m = m.max(u.eval(e, &mesh.vertices[v]).norm());
        }
    }
    m
}

pub fn interior_jump_norm(u: &DGFunction) -> f64 {
    let space = u.space;
    let mesh = space.mesh();
    let mut total = 0.0;
    for (f, facet) in mesh.facets.iter().enumerate() {
        let Some(minus) = facet.minus else { continue };
        for (x, w) in space.facet_quadrature(f) {
            total += w * (u.eval(facet.plus.element, &x) - u.eval(minus.element, &x)).norm_squared();
        }
    }
    total
}

pub fn tv_beta(u: &DGFunction, problem: &ProblemData) -> f64 {
    let space = u.space;
    let mesh = space.mesh();
    let mut total = 0.0;
    for e in 0..mesh.n_elements() {
        for (x, w) in space.element_quadrature(e) {
            let (_, j) = u.eval_with_jacobian(e, &x);
            let grad_u1 = j.row(0).transpose();
            total += w * problem.beta(&x).dot(&grad_u1).abs();
        }
    }
    for (f, facet) in mesh.facets.iter().enumerate() {
        let Some(minus) = facet.minus else { continue };
        for (x, w) in space.facet_quadrature(f) {
            let jump = u.eval(facet.plus.element, &x).x - u.eval(minus.element, &x).x;
            total += w * problem.beta(&x).dot(&facet.normal).abs() * jump.abs();
        }
    }
    total
}

pub fn field_stats(u: &DGFunction, problem: &ProblemData) -> FieldStats {
    FieldStats {
        h: u.space.mesh().h(),
        dofs: u.space.n_dofs(),
        linf: linf(u),
        jump_norm: interior_jump_norm(u),
        tv_beta: tv_beta(u, problem),
    }
}

pub fn write_stats_csv(w: &mut impl Write, rows: &[FieldStats]) -> Result<()> {
    writeln!(w, "{STATS_HEADER}")?;
    for r in rows {
        writeln!(w, "{:e},{},{:e},{:e},{:e}", r.h, r.dofs, r.linf, r.jump_norm, r.tv_beta)?;
    }
    Ok(())
}
