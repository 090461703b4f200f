//! DG energy norm, errors against exact solutions and convergence rates.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::problems::{rho_bar, VectorField};
use crate::scheme::Discretization;
use crate::space::{DGFunction, Difference, ElementField};
use crate::{Error, Result};

/// Squared pieces of the energy norm.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NormPieces {
    /// `eps |curl_h v|^2`.
    pub curl: f64,
    /// `eps sum_{F not Neumann} h_F^-1 |[[v]]_t|^2`.
    pub tangential: f64,
    /// `|(rho_bar + b0)^{1/2} v|^2`.
    pub reaction: f64,
    /// `sum_F | |beta . n|^{1/2} [[v]]_F |^2` over all facets.
    pub upwind: f64,
    /// `sum_{interior F} |[[alpha - alpha_d]]| |[v]_n|^2`.
    pub normal: f64,
    /// `|v|^2`, reported alongside.
    pub l2: f64,
    /// Largest `|v|` over the quadrature points.
    pub linf: f64,
}

impl NormPieces {
    pub fn energy_d(&self) -> f64 {
        (self.curl + self.tangential).sqrt()
    }

    pub fn energy_rc(&self) -> f64 {
        (self.reaction + self.upwind + self.normal).sqrt()
    }

    pub fn energy(&self) -> f64 {
        (self.curl + self.tangential + self.reaction + self.upwind + self.normal).sqrt()
    }

    fn add(self, o: NormPieces) -> NormPieces {
        NormPieces {
            curl: self.curl + o.curl,
            tangential: self.tangential + o.tangential,
            reaction: self.reaction + o.reaction,
            upwind: self.upwind + o.upwind,
            normal: self.normal + o.normal,
            l2: self.l2 + o.l2,
            linf: self.linf.max(o.linf),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub h: f64,
    pub n_dofs: usize,
    pub energy: f64,
    pub energy_d: f64,
    pub energy_rc: f64,
    pub l2: f64,
    pub linf: f64,
    pub pieces: NormPieces,
}

impl ErrorReport {
    pub fn from_pieces(h: f64, n_dofs: usize, p: NormPieces) -> Self {
        Self {
            h,
            n_dofs,
            energy: p.energy(),
            energy_d: p.energy_d(),
            energy_rc: p.energy_rc(),
            l2: p.l2.sqrt(),
            linf: p.linf,
            pieces: p,
        }
    }
}

/// Energy-norm pieces of a piecewise field. `rho_bar` holds one value per
/// element.
pub fn energy_norm(d: &Discretization, v: &dyn ElementField, rho_bar: &[f64], b0: f64) -> Result<NormPieces> {
    if !(b0 > 0.0) {
        return Err(Error::InvalidInput(format!("b0 must be positive, got {b0}")));
    }
    let space = d.space;
    let mesh = space.mesh();
    if rho_bar.len() != mesh.n_elements() {
        return Err(Error::InvalidInput("rho_bar needs one value per element".into()));
    }
    let eps = d.problem.eps;
    let elems = (0..mesh.n_elements())
        .into_par_iter()
        .map(|e| {
            let mut p = NormPieces::default();
            let weight = (rho_bar[e] + b0).max(0.0);
            for (x, w) in space.element_quadrature(e) {
                let val = v.value(e, &x);
                let curl = v.curl(e, &x);
                p.curl += w * eps * curl.norm_squared();
                p.reaction += w * weight * val.norm_squared();
                p.l2 += w * val.norm_squared();
                p.linf = p.linf.max(val.norm());
            }
            p
        })
        .reduce(NormPieces::default, NormPieces::add);
    let facets = (0..mesh.n_facets())
        .into_par_iter()
        .map(|f| {
            let facet = &mesh.facets[f];
            let n = facet.normal;
            let class = d.class(f);
            let mut p = NormPieces::default();
            for (x, w) in space.facet_quadrature(f) {
                let mut jump = v.value(facet.plus.element, &x);
                if let Some(m) = facet.minus {
                    jump -= v.value(m.element, &x);
                }
                if !class.is_neumann() {
                    p.tangential += w * eps / facet.diameter * n.cross(&jump).norm_squared();
                }
                p.upwind += w * d.problem.beta(&x).dot(&n).abs() * jump.norm_squared();
                if facet.minus.is_some() {
                    p.normal += w * d.weights[f].jump_difference() * n.dot(&jump).powi(2);
                }
            }
            p
        })
        .reduce(NormPieces::default, NormPieces::add);
    Ok(elems.add(facets))
}

/// Error of a discrete solution against the exact solution, sampled at
/// quadrature points.
pub fn error_report(d: &Discretization, uh: &DGFunction, exact: &VectorField, b0: f64) -> Result<ErrorReport> {
    let rb = rho_bar(d.problem, d.space);
    let diff = Difference(exact, uh);
    let p = energy_norm(d, &diff, &rb, b0)?;
    Ok(ErrorReport::from_pieces(d.space.mesh().h(), d.space.n_dofs(), p))
}

/// Rates `log2(e_i / e_{i+1})` for successive halvings of `h`. A level with
/// zero error yields `f64::INFINITY`.
pub fn eoc(errors: &[f64]) -> Result<Vec<f64>> {
    if errors.len() < 2 {
        return Err(Error::InvalidInput("need at least two mesh levels".into()));
    }
    if errors.iter().any(|e| !(*e >= 0.0)) {
        return Err(Error::InvalidInput("errors must be nonnegative".into()));
    }
    Ok(errors
        .windows(2)
        .map(|w| if w[1] == 0.0 { f64::INFINITY } else { (w[0] / w[1]).log2() })
        .collect())
}

/// Rates for arbitrary mesh sizes, `ln(e_i / e_{i+1}) / ln(h_i / h_{i+1})`.
pub fn eoc_h(errors: &[f64], hs: &[f64]) -> Result<Vec<f64>> {
    if errors.len() != hs.len() {
        return Err(Error::InvalidInput("errors and mesh sizes differ in length".into()));
    }
    let base = eoc(errors)?;
    Ok(base
        .iter()
        .zip(hs.windows(2))
        .map(|(r, h)| if r.is_finite() { r / (h[0] / h[1]).log2() } else { *r })
        .collect())
}

/// Least-squares slope of `log e` against `log h`, ignoring zero errors.
pub fn fitted_rate(errors: &[f64], hs: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = errors
        .iter()
        .zip(hs)
        .filter(|(e, _)| **e > 0.0)
        .map(|(e, h)| (h.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

pub const EOC_HEADER: &str = "h,dofs,energy,energy_d,energy_rc,l2,eoc_energy,eoc_l2";

fn fmt_rate(r: Option<f64>) -> String {
    match r {
        None => String::new(),
        Some(r) if r.is_infinite() => "inf".into(),
        Some(r) => format!("{r:.4}"),
    }
}

pub fn write_eoc_csv(w: &mut impl Write, rows: &[ErrorReport]) -> Result<()> {
    writeln!(w, "{EOC_HEADER}")?;
    let energy: Vec<f64> = rows.iter().map(|r| r.energy).collect();
    let l2: Vec<f64> = rows.iter().map(|r| r.l2).collect();
    let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let (re, rl) = if rows.len() >= 2 {
        (eoc_h(&energy, &hs)?, eoc_h(&l2, &hs)?)
    } else {
        (Vec::new(), Vec::new())
    };
    for (i, r) in rows.iter().enumerate() {
        let (a, b) = if i == 0 { (None, None) } else { (Some(re[i - 1]), Some(rl[i - 1])) };
        writeln!(
            w,
            "{:.6e},{},{:.6e},{:.6e},{:.6e},{:.6e},{},{}",
            r.h,
            r.n_dofs,
            r.energy,
            r.energy_d,
            r.energy_rc,
            r.l2,
            fmt_rate(a),
            fmt_rate(b)
        )?;
    }
    Ok(())
}

pub fn write_eoc_file(path: &Path, rows: &[ErrorReport]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_eoc_csv(&mut f, rows)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::mesh::{unit_mesh, SimplicialMesh};
    use crate::problems::preset;
    use crate::scheme::{SchemeParams, WeightStrategy};
    use crate::space::DGSpace;
    use crate::Vec3;

    #[test]
    fn eoc_examples() {
        assert!((eoc(&[0.1, 0.05]).unwrap()[0] - 1.0).abs() < 1e-12);
        assert!((eoc(&[0.1, 0.035355]).unwrap()[0] - 1.5).abs() < 1e-4);
        assert_eq!(eoc(&[0.1, 0.0]).unwrap()[0], f64::INFINITY);
        assert!(eoc(&[0.1]).is_err());
        let r = eoc_h(&[1.0, 0.25], &[0.5, 0.25]).unwrap();
        assert!((r[0] - 2.0).abs() < 1e-12);
        assert!((fitted_rate(&[1.0, 0.25, 0.0625], &[1.0, 0.5, 0.25]).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn csv_layout() {
        let p = NormPieces {
            l2: 0.01,
            curl: 0.04,
            ..Default::default()
        };
        let rows = vec![ErrorReport::from_pieces(0.5, 10, p), ErrorReport::from_pieces(0.25, 40, NormPieces {
            l2: 0.0025,
            curl: 0.01,
            ..Default::default()
        })];
        let mut out = Vec::new();
        write_eoc_csv(&mut out, &rows).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], EOC_HEADER);
        assert!(lines[1].ends_with(",,"));
        assert!(lines[2].ends_with("1.0000,1.0000"));
    }

    fn setup(dim: usize, n: usize, k: usize, params: SchemeParams) -> (DGSpace, crate::problems::ProblemData, SchemeParams) {
        let name = if dim == 2 { "exp2" } else { "exp1" };
        let p = preset(name, 0.5).unwrap();
        (DGSpace::new(Arc::new(unit_mesh(dim, n).unwrap()), k).unwrap(), p, params)
    }

    #[test]
    fn zero_and_homogeneity() {
        let (s, p, params) = setup(2, 3, 2, SchemeParams::default());
        let d = Discretization::new(&s, &p, params).unwrap();
        let rb = rho_bar(&p, &s);
        let z = DGFunction::zeros(&s);
        let e = energy_norm(&d, &z, &rb, 1.0).unwrap();
        assert_eq!(e.energy(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let v = DGFunction::from_coeffs(&s, (0..s.n_dofs()).map(|_| rng.random::<f64>() - 0.5).collect()).unwrap();
            let w = DGFunction::from_coeffs(&s, (0..s.n_dofs()).map(|_| rng.random::<f64>() - 0.5).collect()).unwrap();
            let c = -3.7;
            let ev = energy_norm(&d, &v, &rb, 1.0).unwrap();
            let ecv = energy_norm(&d, &v.scaled(c), &rb, 1.0).unwrap();
            assert!((ecv.energy() - c.abs() * ev.energy()).abs() <= 1e-12 * ecv.energy());
            assert!((ev.energy().powi(2) - ev.energy_d().powi(2) - ev.energy_rc().powi(2)).abs() <= 1e-12 * ev.energy().powi(2));
            let sum = DGFunction::from_coeffs(&s, v.coeffs.iter().zip(&w.coeffs).map(|(a, b)| a + b).collect()).unwrap();
            let ew = energy_norm(&d, &w, &rb, 1.0).unwrap();
            let es = energy_norm(&d, &sum, &rb, 1.0).unwrap();
            assert!(es.energy() <= ev.energy() + ew.energy() + 1e-12);
        }
        assert!(energy_norm(&d, &z, &rb, 0.0).is_err());
    }

    #[test]
    fn equal_weights_kill_normal_piece() {
        let params = SchemeParams {
            alpha: WeightStrategy::Signed(0.4),
            alpha_d: WeightStrategy::Signed(0.4),
            ..Default::default()
        };
        let (s, p, params) = setup(3, 2, 1, params);
        let d = Discretization::new(&s, &p, params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = DGFunction::from_coeffs(&s, (0..s.n_dofs()).map(|_| rng.random::<f64>()).collect()).unwrap();
        let e = energy_norm(&d, &v, &rho_bar(&p, &s), 1.0).unwrap();
        assert_eq!(e.normal, 0.0);
        assert!(e.upwind > 0.0);
    }

    #[test]
    fn continuous_fields_have_no_jumps() {
        let (s, p, params) = setup(2, 4, 2, SchemeParams::default());
        let d = Discretization::new(&s, &p, params).unwrap();
        // a global quadratic lies in the space and is single valued
        let u = DGFunction::from_coeffs(&s, s.project_l2(&|_, x| Vec3::new(x.x * x.y, 1.0 - x.x * x.x, 0.0))).unwrap();
        let mut interior_only = d.clone();
        for t in interior_only.tags.iter_mut() {
            if t.class != crate::mesh::BoundaryClass::Interior {
                t.class = crate::mesh::BoundaryClass::NeumannOutflow;
            }
        }
        let e = energy_norm(&interior_only, &u, &rho_bar(&p, &s), 1.0).unwrap();
        assert!(e.tangential < 1e-20 && e.normal < 1e-20);
        // only boundary facets contribute to the upwind piece
        let mesh = s.mesh();
        let mut boundary = 0.0;
        for (f, facet) in mesh.facets.iter().enumerate().filter(|(_, f)| f.is_boundary()) {
            for (x, w) in s.facet_quadrature(f) {
                boundary += w * p.beta(&x).dot(&facet.normal).abs() * u.eval(facet.plus.element, &x).norm_squared();
            }
        }
        assert!((e.upwind - boundary).abs() < 1e-12);
    }

    /// Single element with a constant field: closed-form value of the
    /// reaction-convection piece.
    #[test]
    fn single_element_constant() {
        let mesh = SimplicialMesh::from_elements(
            2,
            vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)],
            vec![[0, 1, 2, 0]],
        )
        .unwrap();
        let s = DGSpace::new(Arc::new(mesh), 1).unwrap();
        let mut p = preset("exp2", 1.0).unwrap();
        p.boundary = Arc::new(|_, _| Some(crate::mesh::BoundaryKind::Neumann));
        let d = Discretization::new(&s, &p, SchemeParams::default()).unwrap();
        let c = Vec3::new(2.0, -1.0, 0.0);
        let v = DGFunction::from_coeffs(&s, s.project_l2(&|_, _| c)).unwrap();
        let b0 = 0.7;
        let e = energy_norm(&d, &v, &[0.0], b0).unwrap();
        // |beta . n| over the three edges: |(1,1).(0,-1)| * 1 + |(1,1).(-1,0)| * 1 + |(1,1).(1,1)/sqrt2| * sqrt2
        let boundary = (1.0 + 1.0 + 2.0) * c.norm_squared();
        let expected = b0 * c.norm_squared() * 0.5 + boundary;
        assert!((e.energy_rc().powi(2) - expected).abs() < 1e-12);
        assert!(e.energy_d() < 1e-12);
    }
}
