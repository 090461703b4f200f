//! Oriented simplicial meshes of axis-aligned boxes.
//!
//! Every facet stores a fixed unit normal equal to the outward normal of its
//! "plus" element, which is the lower-indexed of the two neighbours. Boundary
//! facets only have a plus side.

use std::collections::HashMap;
use std::io::Write;

use crate::problems::ProblemData;
use crate::quadrature::{quadrature, QuadratureRule};
use crate::{Error, Mat3, Result, Vec3};

/// Affine element map `x = origin + jac * r` from reference coordinates.
#[derive(Debug, Clone)]
pub struct ElementGeometry {
    pub origin: Vec3,
    /// In 2D the third column is `e_z` so the matrix stays invertible.
    pub jac: Mat3,
    pub jac_inv: Mat3,
    pub volume: f64,
    pub diameter: f64,
    pub centroid: Vec3,
}

impl ElementGeometry {
    /// Barycentric coordinates of a physical point.
    pub fn barycentric(&self, dim: usize, x: &Vec3) -> [f64; 4] {
        let r = self.jac_inv * (x - self.origin);
        let mut b = [0.0; 4];
        let mut s = 0.0;
        for i in 0..dim {
            b[i + 1] = r[i];
            s += r[i];
        }
        b[0] = 1.0 - s;
        b
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FacetSide {
    pub element: usize,
    /// Local facet index in the element (the facet opposite local vertex
    /// `local`).
    pub local: usize,
}

#[derive(Debug, Clone)]
pub struct Facet {
    /// Vertex ids; only the first `dim` entries are used.
    pub vertices: [usize; 3],
    pub plus: FacetSide,
    pub minus: Option<FacetSide>,
    /// Unit normal, outward for the plus element.
    pub normal: Vec3,
    pub area: f64,
    pub diameter: f64,
    pub centroid: Vec3,
}

impl Facet {
    pub fn is_boundary(&self) -> bool {
        self.minus.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct SimplicialMesh {
    pub dim: usize,
    pub vertices: Vec<Vec3>,
    /// Vertex ids per element; only the first `dim + 1` entries are used.
    pub elements: Vec<[usize; 4]>,
    pub facets: Vec<Facet>,
    /// Global facet id of local facet `i` (opposite local vertex `i`).
    pub elem_facets: Vec<[usize; 4]>,
    pub geometry: Vec<ElementGeometry>,
    pub bbox: (Vec3, Vec3),
}

fn signed_volume(dim: usize, p: &[Vec3]) -> f64 {
    match dim {
        2 => 0.5 * ((p[1] - p[0]).x * (p[2] - p[0]).y - (p[1] - p[0]).y * (p[2] - p[0]).x),
        3 => (p[1] - p[0]).cross(&(p[2] - p[0])).dot(&(p[3] - p[0])) / 6.0,
        _ => unreachable!(),
    }
}

fn max_edge(p: &[Vec3]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            d = d.max((p[i] - p[j]).norm());
        }
    }
    d
}

impl SimplicialMesh {
    /// Build the mesh from vertices and elements, reorienting elements to
    /// positive volume and deriving facets and adjacency.
    pub fn from_elements(dim: usize, vertices: Vec<Vec3>, elements: Vec<[usize; 4]>) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidInput(format!("mesh dimension {dim}")));
        }
        let nv = dim + 1;
        let mut elements = elements;
        let mut geometry = Vec::with_capacity(elements.len());
        for el in elements.iter_mut() {
            let mut p: Vec<Vec3> = el[..nv].iter().map(|&v| vertices[v]).collect();
            let mut vol = signed_volume(dim, &p);
            if vol < 0.0 {
                el.swap(0, 1);
                p.swap(0, 1);
                vol = -vol;
            }
            if vol <= 0.0 {
                return Err(Error::InvalidInput("degenerate element".into()));
            }
            let mut jac = Mat3::identity();
            for i in 0..dim {
                jac.set_column(i, &(p[i + 1] - p[0]));
            }
            let jac_inv = jac
                .try_inverse()
                .ok_or_else(|| Error::InvalidInput("singular element map".into()))?;
            let centroid = p.iter().fold(Vec3::zeros(), |a, b| a + b) / nv as f64;
            geometry.push(ElementGeometry {
                origin: p[0],
                jac,
                jac_inv,
                volume: vol,
                diameter: max_edge(&p),
                centroid,
            });
        }

        let mut facets: Vec<Facet> = Vec::new();
        let mut lookup: HashMap<[usize; 3], usize> = HashMap::new();
        let mut elem_facets = vec![[usize::MAX; 4]; elements.len()];
        for (e, el) in elements.iter().enumerate() {
            for local in 0..nv {
                let mut key = [usize::MAX; 3];
                let mut k = 0;
                for (i, &v) in el[..nv].iter().enumerate() {
                    if i != local {
                        key[k] = v;
                        k += 1;
                    }
                }
                key[..dim].sort_unstable();
                let side = FacetSide { element: e, local };
                if let Some(&f) = lookup.get(&key) {
                    let facet: &mut Facet = &mut facets[f];
                    if facet.minus.is_some() {
                        return Err(Error::InvalidInput(format!(
                            "facet {key:?} shared by more than two elements"
                        )));
                    }
                    facet.minus = Some(side);
                    elem_facets[e][local] = f;
                } else {
                    let fp: Vec<Vec3> = key[..dim].iter().map(|&v| vertices[v]).collect();
                    let (mut normal, area) = facet_normal_area(dim, &fp);
                    let opposite = vertices[el[local]];
                    if normal.dot(&(fp[0] - opposite)) < 0.0 {
                        normal = -normal;
                    }
                    let centroid = fp.iter().fold(Vec3::zeros(), |a, b| a + b) / dim as f64;
                    let f = facets.len();
                    facets.push(Facet {
                        vertices: key,
                        plus: side,
                        minus: None,
                        normal,
                        area,
                        diameter: max_edge(&fp),
                        centroid,
                    });
                    lookup.insert(key, f);
                    elem_facets[e][local] = f;
                }
            }
        }
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for v in &vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        Ok(SimplicialMesh {
            dim,
            vertices,
            elements,
            facets,
            elem_facets,
            geometry,
            bbox: (lo, hi),
        })
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn n_facets(&self) -> usize {
        self.facets.len()
    }

    pub fn element_vertices(&self, e: usize) -> &[usize] {
        &self.elements[e][..self.dim + 1]
    }

    pub fn facet_vertices(&self, f: usize) -> &[usize] {
        &self.facets[f].vertices[..self.dim]
    }

    /// Largest element diameter.
    pub fn h(&self) -> f64 {
        self.geometry.iter().map(|g| g.diameter).fold(0.0, f64::max)
    }

    /// Outward unit normal of element `e` on its local facet `local`.
    pub fn outward_normal(&self, e: usize, local: usize) -> Vec3 {
        let f = &self.facets[self.elem_facets[e][local]];
        if f.plus.element == e && f.plus.local == local {
            f.normal
        } else {
            -f.normal
        }
    }

    /// Physical point of a facet given barycentric coordinates over its
    /// stored vertex order.
    pub fn facet_point(&self, f: usize, bary: &[f64; 4]) -> Vec3 {
        self.facet_vertices(f)
            .iter()
            .enumerate()
            .fold(Vec3::zeros(), |acc, (i, &v)| acc + self.vertices[v] * bary[i])
    }

    pub fn element_point(&self, e: usize, bary: &[f64; 4]) -> Vec3 {
        self.element_vertices(e)
            .iter()
            .enumerate()
            .fold(Vec3::zeros(), |acc, (i, &v)| acc + self.vertices[v] * bary[i])
    }

    /// Split the interior facets selected by `cut` into two boundary facets,
    /// one per side, each carrying its element's outward normal.
    pub fn cut_facets(&mut self, cut: impl Fn(&Facet) -> bool) {
        let mut extra = Vec::new();
        for f in 0..self.facets.len() {
            let facet = &mut self.facets[f];
            if let Some(minus) = facet.minus {
                if cut(facet) {
                    facet.minus = None;
                    let copy = Facet {
                        vertices: facet.vertices,
                        plus: minus,
                        minus: None,
                        normal: -facet.normal,
                        area: facet.area,
                        diameter: facet.diameter,
                        centroid: facet.centroid,
                    };
                    extra.push((minus, copy));
                }
            }
        }
        for (side, copy) in extra {
            let id = self.facets.len();
            self.facets.push(copy);
            self.elem_facets[side.element][side.local] = id;
        }
    }

    /// Plain-text listing of vertices, elements and facets for debugging.
    pub fn write_listing(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "dim {}", self.dim)?;
        writeln!(w, "vertices {}", self.vertices.len())?;
        for (i, v) in self.vertices.iter().enumerate() {
            writeln!(w, "{i} {} {} {}", v.x, v.y, v.z)?;
        }
        writeln!(w, "elements {}", self.elements.len())?;
        for (e, _) in self.elements.iter().enumerate() {
            let ids: Vec<String> = self.element_vertices(e).iter().map(|v| v.to_string()).collect();
            writeln!(w, "{e} {}", ids.join(" "))?;
        }
        writeln!(w, "facets {}", self.facets.len())?;
        for (i, f) in self.facets.iter().enumerate() {
            let ids: Vec<String> = f.vertices[..self.dim].iter().map(|v| v.to_string()).collect();
            let minus = f.minus.map_or("-".to_string(), |m| m.element.to_string());
            writeln!(
                w,
                "{i} {} plus {} minus {} normal {} {} {}",
                ids.join(" "),
                f.plus.element,
                minus,
                f.normal.x,
                f.normal.y,
                f.normal.z
            )?;
        }
        Ok(())
    }
}

fn facet_normal_area(dim: usize, p: &[Vec3]) -> (Vec3, f64) {
    match dim {
        2 => {
            let t = p[1] - p[0];
            let len = t.norm();
            (Vec3::new(t.y, -t.x, 0.0) / len, len)
        }
        3 => {
            let c = (p[1] - p[0]).cross(&(p[2] - p[0]));
            let n = c.norm();
            (c / n, 0.5 * n)
        }
        _ => unreachable!(),
    }
}

/// Uniform simplicial mesh of the box `[lo, hi]` with `n` cells per axis.
/// Squares are cut along the `(0,0)-(1,1)` diagonal; cubes are split into
/// the six Kuhn tetrahedra around the main diagonal, which keeps
/// neighbouring cubes conforming.
pub fn build_uniform_mesh(dim: usize, n: usize, lo: Vec3, hi: Vec3) -> Result<SimplicialMesh> {
    if n == 0 {
        return Err(Error::InvalidInput("cells per axis must be at least 1".into()));
    }
    if dim != 2 && dim != 3 {
        return Err(Error::InvalidInput(format!("mesh dimension {dim}")));
    }
    for a in 0..dim {
        if !(hi[a] > lo[a]) {
            return Err(Error::InvalidInput(format!("degenerate box along axis {a}")));
        }
    }
    let m = n + 1;
    let coord = |a: usize, i: usize| lo[a] + (hi[a] - lo[a]) * i as f64 / n as f64;
    let mut vertices = Vec::new();
    let mut elements = Vec::new();
    if dim == 2 {
        for j in 0..m {
            for i in 0..m {
                vertices.push(Vec3::new(coord(0, i), coord(1, j), 0.0));
            }
        }
        let id = |i: usize, j: usize| j * m + i;
        for j in 0..n {
            for i in 0..n {
                let (v00, v10, v01, v11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
                elements.push([v00, v10, v11, 0]);
                elements.push([v00, v11, v01, 0]);
            }
        }
    } else {
        for k in 0..m {
            for j in 0..m {
                for i in 0..m {
                    vertices.push(Vec3::new(coord(0, i), coord(1, j), coord(2, k)));
                }
            }
        }
        let id = |i: usize, j: usize, k: usize| (k * m + j) * m + i;
        const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    for perm in PERMS {
                        let mut c = [i, j, k];
                        let mut tet = [id(i, j, k), 0, 0, 0];
                        for (s, &axis) in perm.iter().enumerate() {
                            c[axis] += 1;
                            tet[s + 1] = id(c[0], c[1], c[2]);
                        }
                        elements.push(tet);
                    }
                }
            }
        }
    }
    SimplicialMesh::from_elements(dim, vertices, elements)
}

/// Unit square or cube with `n` cells per axis.
pub fn unit_mesh(dim: usize, n: usize) -> Result<SimplicialMesh> {
    let hi = if dim == 2 { Vec3::new(1.0, 1.0, 0.0) } else { Vec3::new(1.0, 1.0, 1.0) };
    build_uniform_mesh(dim, n, Vec3::zeros(), hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryClass {
    DirichletInflow,
    DirichletOutflow,
    NeumannInflow,
    NeumannOutflow,
    Interior,
}

impl BoundaryClass {
    pub fn is_dirichlet(self) -> bool {
        matches!(self, Self::DirichletInflow | Self::DirichletOutflow)
    }

    pub fn is_neumann(self) -> bool {
        matches!(self, Self::NeumannInflow | Self::NeumannOutflow)
    }

    pub fn is_inflow(self) -> bool {
        matches!(self, Self::DirichletInflow | Self::NeumannInflow)
    }
}

/// Kind of boundary condition requested by a problem on part of the
/// boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryTag {
    pub facet: usize,
    pub class: BoundaryClass,
}

/// Tag every facet. Boundary facets are split by the problem's Dirichlet /
/// Neumann predicate and by the sign of `beta . n` at the facet centroid;
/// zero counts as outflow.
pub fn classify_boundary(mesh: &SimplicialMesh, problem: &ProblemData) -> Result<Vec<BoundaryTag>> {
    mesh.facets
        .iter()
        .enumerate()
        .map(|(i, f)| {
            if !f.is_boundary() {
                return Ok(BoundaryTag {
                    facet: i,
                    class: BoundaryClass::Interior,
                });
            }
            let kind = problem.boundary_kind(&f.centroid, &f.normal).ok_or(Error::AmbiguousBoundary {
                facet: i,
                centroid: [f.centroid.x, f.centroid.y, f.centroid.z],
            })?;
            let inflow = problem.beta(&f.centroid).dot(&f.normal) < 0.0;
            let class = match (kind, inflow) {
                (BoundaryKind::Dirichlet, true) => BoundaryClass::DirichletInflow,
                (BoundaryKind::Dirichlet, false) => BoundaryClass::DirichletOutflow,
                (BoundaryKind::Neumann, true) => BoundaryClass::NeumannInflow,
                (BoundaryKind::Neumann, false) => BoundaryClass::NeumannOutflow,
            };
            Ok(BoundaryTag { facet: i, class })
        })
        .collect()
}

/// Per-element choice of a facet on which the normal component of `beta`
/// dominates `|beta|`.
#[derive(Debug, Clone)]
pub struct StarFacets {
    /// Local facet index of the chosen facet, `None` when `beta` vanishes on
    /// the whole element boundary.
    pub local: Vec<Option<usize>>,
    /// Attained `min |beta . n_F| / max |beta|` over the facet samples.
    pub ratio: Vec<f64>,
    /// Elements whose best ratio falls below `1 / c_beta`.
    pub flagged: Vec<usize>,
    pub c_beta: f64,
}

impl StarFacets {
    pub fn global(&self, mesh: &SimplicialMesh, e: usize) -> Option<usize> {
        self.local[e].map(|l| mesh.elem_facets[e][l])
    }

    /// Smallest ratio over all elements, and the constant it implies.
    pub fn worst(&self) -> (f64, f64) {
        let r = self.ratio.iter().cloned().fold(f64::INFINITY, f64::min);
        (r, if r > 0.0 { 1.0 / r } else { f64::INFINITY })
    }
}

/// Sample-based search for the facet maximizing `min_q |beta . n_F|` relative
/// to `max_q |beta|` on each element.
pub fn star_facets(mesh: &SimplicialMesh, beta: &dyn Fn(&Vec3) -> Vec3, c_beta: f64) -> StarFacets {
    let rule = quadrature(mesh.dim - 1, 4).expect("facet rule");
    star_facets_with_rule(mesh, beta, c_beta, &rule)
}

pub fn star_facets_with_rule(
    mesh: &SimplicialMesh,
    beta: &dyn Fn(&Vec3) -> Vec3,
    c_beta: f64,
    rule: &QuadratureRule,
) -> StarFacets {
    let nl = mesh.dim + 1;
    let mut local = Vec::with_capacity(mesh.n_elements());
    let mut ratio = Vec::with_capacity(mesh.n_elements());
    let mut flagged = Vec::new();
    for e in 0..mesh.n_elements() {
        let mut best: Option<(usize, f64)> = None;
        for l in 0..nl {
            let f = mesh.elem_facets[e][l];
            let n = mesh.facets[f].normal;
            let mut min_normal = f64::INFINITY;
            let mut max_beta: f64 = 0.0;
            for p in &rule.points {
                let b = beta(&mesh.facet_point(f, p));
                min_normal = min_normal.min(b.dot(&n).abs());
                max_beta = max_beta.max(b.norm());
            }
            if max_beta == 0.0 {
                continue;
            }
            let r = min_normal / max_beta;
            if best.is_none_or(|(_, br)| r > br) {
                best = Some((l, r));
            }
        }
        match best {
            Some((l, r)) => {
                local.push(Some(l));
                ratio.push(r);
                if r * c_beta < 1.0 {
                    flagged.push(e);
                }
            }
            None => {
                local.push(None);
                ratio.push(0.0);
                flagged.push(e);
            }
        }
    }
    StarFacets {
        local,
        ratio,
        flagged,
        c_beta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    /// Independent face enumeration: all (d)-subsets of each element,
    /// deduplicated, counting how often each occurs.
    fn oracle_facet_counts(mesh: &SimplicialMesh) -> (usize, usize) {
        let mut count: HashMap<Vec<usize>, usize> = HashMap::new();
        for e in 0..mesh.n_elements() {
            let vs = mesh.element_vertices(e);
            for skip in 0..vs.len() {
                let mut f: Vec<usize> = vs.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, &v)| v).collect();
                f.sort();
                *count.entry(f).or_default() += 1;
            }
        }
        let boundary = count.values().filter(|&&c| c == 1).count();
        (count.len(), boundary)
    }

    #[test]
    fn unit_square_one_cell() {
        let m = unit_mesh(2, 1).unwrap();
        assert_eq!(m.n_elements(), 2);
        assert_eq!(m.n_facets(), 5);
        assert_eq!(m.facets.iter().filter(|f| f.is_boundary()).count(), 4);
    }

    #[test]
    fn unit_square_two_cells_matches_edge_enumeration() {
        let m = unit_mesh(2, 2).unwrap();
        assert_eq!(m.n_elements(), 8);
        assert_eq!(m.n_facets(), 16);
        let nb = m.facets.iter().filter(|f| f.is_boundary()).count();
        assert_eq!(nb, 8);
        assert_eq!(oracle_facet_counts(&m), (16, 8));
    }

    #[test]
    fn unit_cube_facets_match_enumeration() {
        for n in 1..=3 {
            let m = unit_mesh(3, n).unwrap();
            assert_eq!(m.n_elements(), 6 * n * n * n);
            let nb = m.facets.iter().filter(|f| f.is_boundary()).count();
            assert_eq!(oracle_facet_counts(&m), (m.n_facets(), nb));
            // each cube face is cut into two triangles
            assert_eq!(nb, 6 * 2 * n * n);
        }
    }

    #[test]
    fn orientation_and_measure() {
        for (dim, n) in [(2, 3), (3, 2)] {
            let m = unit_mesh(dim, n).unwrap();
            let vol: f64 = m.geometry.iter().map(|g| g.volume).sum();
            assert!((vol - 1.0).abs() < 1e-12);
            let bnd: f64 = m.facets.iter().filter(|f| f.is_boundary()).map(|f| f.area).sum();
            let expected = if dim == 2 { 4.0 } else { 6.0 };
            assert!((bnd - expected).abs() < 1e-12);
            for (i, f) in m.facets.iter().enumerate() {
                let g = &m.geometry[f.plus.element];
                // outward: normal points away from the plus centroid
                assert!(f.normal.dot(&(f.centroid - g.centroid)) > 0.0);
                assert!((m.outward_normal(f.plus.element, f.plus.local).dot(&f.normal) - 1.0).abs() < 1e-14);
                if let Some(minus) = f.minus {
                    assert!(minus.element > f.plus.element, "plus is the lower index");
                    assert!((m.outward_normal(minus.element, minus.local).dot(&f.normal) + 1.0).abs() < 1e-14);
                }
                assert_eq!(m.elem_facets[f.plus.element][f.plus.local], i);
            }
        }
    }

    #[test]
    fn bad_input_rejected() {
        assert!(unit_mesh(2, 0).is_err());
        assert!(build_uniform_mesh(2, 2, Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn cut_facets_creates_two_boundary_copies() {
        let mut m = unit_mesh(2, 4).unwrap();
        let before = m.n_facets();
        m.cut_facets(|f| (f.centroid.x - 0.5).abs() < 1e-12 && f.centroid.y < 0.5);
        assert_eq!(m.n_facets(), before + 2);
        let slit: Vec<&Facet> = m
            .facets
            .iter()
            .filter(|f| (f.centroid.x - 0.5).abs() < 1e-12 && f.centroid.y < 0.5)
            .collect();
        assert_eq!(slit.len(), 4);
        assert!(slit.iter().all(|f| f.is_boundary()));
        let elems: HashSet<usize> = slit.iter().map(|f| f.plus.element).collect();
        assert_eq!(elems.len(), 4);
    }

    #[test]
    fn star_facet_axis_flow() {
        let m = unit_mesh(2, 4).unwrap();
        let s = star_facets(&m, &|_| Vec3::new(1.0, 0.0, 0.0), 2.0);
        assert!(s.flagged.is_empty());
        for e in 0..m.n_elements() {
            assert!((s.ratio[e] - 1.0).abs() < 1e-14);
            let f = s.global(&m, e).unwrap();
            assert!((m.facets[f].normal.x.abs() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn star_facet_constant_beta_tets() {
        let m = unit_mesh(3, 2).unwrap();
        let s = star_facets(&m, &|_| Vec3::new(1.0, 2.0, 3.0), 10.0);
        assert!(s.flagged.is_empty());
        assert!(s.worst().0 > 0.3);
    }

    #[test]
    fn star_facet_rotating_flow_near_center() {
        let beta = |x: &Vec3| Vec3::new(x.y - 0.5, 0.5 - x.x, 0.0);
        let m = unit_mesh(2, 8).unwrap();
        let rule = quadrature(1, 4).unwrap();
        let s = star_facets_with_rule(&m, &beta, 4.0, &rule);
        // brute-force oracle on the same samples
        for e in 0..m.n_elements() {
            let mut best: f64 = 0.0;
            for l in 0..3 {
                let f = m.elem_facets[e][l];
                let (a, b) = (m.vertices[m.facets[f].vertices[0]], m.vertices[m.facets[f].vertices[1]]);
                let t = (b - a).normalize();
                let n = Vec3::new(t.y, -t.x, 0.0);
                let pts: Vec<Vec3> = rule.points.iter().map(|p| a * p[0] + b * p[1]).collect();
                let mn = pts.iter().map(|x| beta(x).dot(&n).abs()).fold(f64::INFINITY, f64::min);
                let mx = pts.iter().map(|x| beta(x).norm()).fold(0.0, f64::max);
                best = best.max(mn / mx);
            }
            assert!((best - s.ratio[e]).abs() < 1e-12);
        }
        let near_center: Vec<usize> = (0..m.n_elements())
            .filter(|&e| m.element_vertices(e).iter().any(|&v| (m.vertices[v] - Vec3::new(0.5, 0.5, 0.0)).norm() < 1e-12))
            .collect();
        assert!(near_center.iter().any(|e| s.flagged.contains(e)));
    }
}
