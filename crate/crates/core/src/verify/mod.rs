//! Executable checks of the stability analysis: the weight function, the
//! trace-inverse constant, the inf-sup diagnostic and assumption audits.

mod identities;

use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use identities::{dual_lie, identity_battery, lie, IdentityCheck, IDENTITY_TOL};

use crate::analysis::energy_norm;
use crate::mesh::{star_facets, unit_mesh, SimplicialMesh};
use crate::problems::{rho_bar, ProblemData, VectorField};
use crate::projection::TailoredProjection;
use crate::quadrature::quadrature;
use crate::scheme::{assemble_parts, Discretization, Parts, SchemeParams, WeightStrategy};
use crate::space::{DGFunction, DGSpace};
use crate::{Error, Result, Vec3};

/// `phi = exp(-psi) + kappa` with the linear `psi(x) = d . x`, `|d| = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightFunction {
    pub direction: Vec3,
    /// Half the smallest `beta . grad psi`.
    pub b0: f64,
    pub kappa: f64,
    /// Bounds `chi_lo <= chi <= chi_hi`, `|grad chi| <= chi_grad` on the
    /// domain.
    pub chi_lo: f64,
    pub chi_hi: f64,
    pub chi_grad: f64,
}

impl WeightFunction {
    pub fn psi(&self, x: &Vec3) -> f64 {
        self.direction.dot(x)
    }

    pub fn chi(&self, x: &Vec3) -> f64 {
        (-self.psi(x)).exp()
    }

    /// Value and gradient of `phi`.
    pub fn phi(&self, x: &Vec3) -> (f64, Vec3) {
        let chi = self.chi(x);
        (chi + self.kappa, -self.direction * chi)
    }

    /// Both weight conditions on `kappa`.
    pub fn kappa_admissible(&self) -> bool {
        let lhs = self.chi_lo + self.kappa;
        let tol = 1e-12 * (1.0 + lhs);
        self.kappa > 0.0
            && lhs + tol >= (self.chi_hi + self.kappa) / 2.0
            && lhs + tol >= 2.0 * self.chi_grad.powi(2) / (self.b0 * self.chi_lo)
    }
}

fn sample_points(mesh: &SimplicialMesh) -> Vec<Vec3> {
    let mut pts = mesh.vertices.clone();
    pts.extend(mesh.geometry.iter().map(|g| g.centroid));
    pts.extend(mesh.facets.iter().map(|f| f.centroid));
    pts
}

/// Weight for a field without closed streamlines or stationary points.
///
/// `psi` is linear along the mean direction of `beta`; this is exact for
/// constant `beta` and is accepted for other fields when `beta . grad psi`
/// stays positive on all samples. Samples include every mesh vertex, so the
/// bound is exact for affine `beta`.
pub fn build_weight(beta: &VectorField, mesh: &SimplicialMesh) -> Result<WeightFunction> {
    let pts = sample_points(mesh);
    let values: Vec<Vec3> = pts.iter().map(|x| beta.value(x)).collect();
    let max_norm = values.iter().map(|b| b.norm()).fold(0.0, f64::max);
    let mean = values.iter().fold(Vec3::zeros(), |a, b| a + b) / values.len() as f64;
    if max_norm == 0.0 || mean.norm() <= 1e-12 * max_norm {
        return Err(Error::WeightUnavailable(
            "beta has closed streamlines or vanishes; no psi with beta . grad psi > 0".into(),
        ));
    }
    let direction = mean.normalize();
    let min_along = values.iter().map(|b| b.dot(&direction)).fold(f64::INFINITY, f64::min);
    if min_along <= 1e-12 * max_norm {
        return Err(Error::WeightUnavailable(format!(
            "beta . grad psi reaches {min_along:e}; streamlines turn back or stagnate"
        )));
    }
    let b0 = min_along / 2.0;
    let (lo, hi) = mesh.bbox;
    let mut psi_min = f64::INFINITY;
    let mut psi_max = f64::NEG_INFINITY;
    for corner in 0..(1 << mesh.dim) {
        let c = Vec3::from_fn(|i, _| if corner >> i & 1 == 1 { hi[i] } else { lo[i] });
        let c = if mesh.dim == 2 { Vec3::new(c.x, c.y, 0.0) } else { c };
        psi_min = psi_min.min(direction.dot(&c));
        psi_max = psi_max.max(direction.dot(&c));
    }
    let chi_lo = (-psi_max).exp();
    let chi_hi = (-psi_min).exp();
    let chi_grad = chi_hi;
    // smallest kappa meeting both conditions, but never below chi_lo
    let kappa = (chi_hi - 2.0 * chi_lo)
        .max(2.0 * chi_grad * chi_grad / (b0 * chi_lo) - chi_lo)
        .max(chi_lo);
    Ok(WeightFunction {
        direction,
        b0,
        kappa,
        chi_lo,
        chi_hi,
        chi_grad,
    })
}

/// Trace-inverse constant `C_g` for curls of degree-`k` fields: the largest
/// `sum_{F in dT} h_F |q|^2_F / |q|^2_T` over `q in P_{k-1}(T)`, maximized
/// over the elements of a reference mesh.
pub fn trace_inverse_constant(dim: usize, k: usize) -> Result<f64> {
    if k == 0 {
        return Ok(0.0);
    }
    let mesh = Arc::new(unit_mesh(dim, 2)?);
    let space = DGSpace::new(mesh.clone(), k - 1)?;
    let ns = space.n_scalar();
    let mut vals = vec![0.0; ns];
    let mut grads = vec![Vec3::zeros(); ns];
    let mut best: f64 = 0.0;
    for e in 0..mesh.n_elements() {
        let mut b = DMatrix::<f64>::zeros(ns, ns);
        for l in 0..=dim {
            let f = mesh.elem_facets[e][l];
            let h = mesh.facets[f].diameter;
            for (x, w) in space.facet_quadrature(f) {
                space.scalar_basis(e, &x, &mut vals, &mut grads);
                for i in 0..ns {
                    for j in 0..ns {
                        b[(i, j)] += h * w * vals[i] * vals[j];
                    }
                }
            }
        }
        // the basis is orthonormal on T, so the volume Gram matrix is I
        best = best.max(SymmetricEigen::new(b).eigenvalues.max());
    }
    Ok(best.sqrt())
}

/// `sup_F (|w+| + |w-|)` for a weight strategy.
pub fn weight_max(w: WeightStrategy) -> f64 {
    match w {
        WeightStrategy::Centered => 1.0,
        WeightStrategy::Signed(c) => c.abs().max(1.0),
    }
}

/// Raise `eta` and `tau` to the thresholds of the weighted coercivity
/// estimate.
pub fn diagnostic_params(base: SchemeParams, c_g: f64) -> SchemeParams {
    let eta_min = (8.0 * c_g * c_g * (base.theta + 1.0).powi(2) * weight_max(base.alpha_d).powi(2)).max(1.0);
    SchemeParams {
        eta: base.eta.max(eta_min),
        tau: base.tau.max(1.0),
        ..base
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfSupReport {
    pub trials: usize,
    pub h: f64,
    /// Extremes of `a_h(u, Pi(u phi)) / |||u|||^2`.
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Extremes of `|||Pi(u phi)||| / |||u|||`.
    pub min_bound: f64,
    pub max_bound: f64,
    pub eta: f64,
    pub kappa: f64,
    pub projection_condition: f64,
}

/// Evaluate the inf-sup ratio with the test function `Pi_h(u_h phi)` for
/// random `u_h` with unit-variance coefficients.
pub fn inf_sup_diagnostic(d: &Discretization, weight: &WeightFunction, trials: usize, seed: u64) -> Result<InfSupReport> {
    if trials == 0 {
        return Err(Error::InvalidInput("inf-sup diagnostic needs at least one trial".into()));
    }
    let space = d.space;
    let mesh = space.mesh();
    let beta = |x: &Vec3| d.problem.beta(x);
    let star = star_facets(mesh, &beta, f64::INFINITY);
    let proj = TailoredProjection::new(space, &star)?;
    let a = assemble_parts(d, Parts::ALL);
    let rb = rho_bar(d.problem, space);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amp = 3f64.sqrt();
    let mut report = InfSupReport {
        trials,
        h: mesh.h(),
        min_ratio: f64::INFINITY,
        max_ratio: f64::NEG_INFINITY,
        min_bound: f64::INFINITY,
        max_bound: f64::NEG_INFINITY,
        eta: d.params.eta,
        kappa: weight.kappa,
        projection_condition: proj.max_condition(),
    };
    for _ in 0..trials {
        let coeffs: Vec<f64> = (0..space.n_dofs()).map(|_| amp * rng.random_range(-1.0..1.0)).collect();
        let u = DGFunction::from_coeffs(space, coeffs)?;
        let v = DGFunction::from_coeffs(space, proj.project(&|e, x| u.eval(e, x) * weight.phi(x).0))?;
        let nu = energy_norm(d, &u, &rb, weight.b0)?.energy();
        let nv = energy_norm(d, &v, &rb, weight.b0)?.energy();
        let ratio = a.bilinear(&v.coeffs, &u.coeffs) / (nu * nu);
        report.min_ratio = report.min_ratio.min(ratio);
        report.max_ratio = report.max_ratio.max(ratio);
        report.min_bound = report.min_bound.min(nv / nu);
        report.max_bound = report.max_bound.max(nv / nu);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub pass: bool,
    pub witness: Vec<(&'static str, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionAudit {
    pub problem: String,
    pub checks: Vec<AssumptionCheck>,
}

impl AssumptionAudit {
    pub fn get(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn write_key_values(&self, w: &mut impl Write) -> std::io::Result<()> {
        for c in &self.checks {
            writeln!(w, "assumption.{}={}", c.name, if c.pass { "pass" } else { "flag" })?;
            for (k, v) in &c.witness {
                writeln!(w, "assumption.{}.{}={:e}", c.name, k, v)?;
            }
        }
        Ok(())
    }
}

/// Audit streamline structure, Friedrichs positivity and normal domination
/// on `mesh`. `c_beta` is the normal-domination constant being tested.
pub fn audit_assumptions(mesh: &SimplicialMesh, problem: &ProblemData, c_beta: f64) -> Result<AssumptionAudit> {
    let pts = sample_points(mesh);
    let norms: Vec<f64> = pts.iter().map(|x| problem.beta(x).norm()).collect();
    let min_beta = norms.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_beta = norms.iter().cloned().fold(0.0, f64::max);
    let weight = build_weight(&problem.beta, mesh);
    let stationary = min_beta <= 1e-12 * max_beta.max(f64::MIN_POSITIVE);
    let streamlines = AssumptionCheck {
        name: "no_closed_curves",
        pass: !stationary && weight.is_ok(),
        witness: vec![
            ("min_beta", min_beta),
            ("max_beta", max_beta),
            ("b0", weight.as_ref().map_or(f64::NAN, |w| w.b0)),
        ],
    };

    let rule = quadrature(mesh.dim, 4)?;
    let min_rho = (0..mesh.n_elements())
        .flat_map(|e| rule.points.iter().map(move |b| mesh.element_point(e, b)))
        .chain(pts.iter().cloned())
        .map(|x| problem.rho(&x))
        .fold(f64::INFINITY, f64::min);
    let friedrichs = AssumptionCheck {
        name: "friedrichs",
        pass: min_rho >= -1e-12,
        witness: vec![("min_rho", min_rho)],
    };

    let beta = |x: &Vec3| problem.beta(x);
    let star = star_facets(mesh, &beta, c_beta);
    let (ratio, implied) = star.worst();
    let domination = AssumptionCheck {
        name: "normal_domination",
        pass: star.flagged.is_empty(),
        witness: vec![
            ("worst_ratio", ratio),
            ("implied_c_beta", implied),
            ("flagged_elements", star.flagged.len() as f64),
        ],
    };
    Ok(AssumptionAudit {
        problem: problem.name.clone(),
        checks: vec![streamlines, friedrichs, domination],
    })
}

pub fn write_identity_report(w: &mut impl Write, checks: &[IdentityCheck]) -> std::io::Result<()> {
    for c in checks {
        writeln!(
            w,
            "identity.{}={} trials={} max_residual={:e} tol={:e}",
            c.name,
            if c.passed() { "pass" } else { "fail" },
            c.trials,
            c.max_residual,
            c.tol
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::unit_mesh;
    use crate::problems::preset;
    use crate::Mat3;

    #[test]
    fn weight_examples() {
        let mesh = unit_mesh(2, 2).unwrap();
        let w = build_weight(&VectorField::constant(Vec3::new(1.0, 1.0, 0.0)), &mesh).unwrap();
        let x = Vec3::new(0.3, 0.8, 0.0);
        // oracle: gradient of (x + y)/sqrt 2 by finite differences
        let hstep = 1e-6;
        let g = Vec3::new(
            (w.psi(&(x + Vec3::x() * hstep)) - w.psi(&(x - Vec3::x() * hstep))) / (2.0 * hstep),
            (w.psi(&(x + Vec3::y() * hstep)) - w.psi(&(x - Vec3::y() * hstep))) / (2.0 * hstep),
            0.0,
        );
        assert!((Vec3::new(1.0, 1.0, 0.0).dot(&g) - 2f64.sqrt()).abs() < 1e-8);
        assert!((w.b0 - 2f64.sqrt() / 2.0).abs() < 1e-14);
        assert!((w.psi(&x) - 1.1 / 2f64.sqrt()).abs() < 1e-14);
        assert!(w.kappa_admissible());

        let mesh3 = unit_mesh(3, 1).unwrap();
        let w3 = build_weight(&VectorField::constant(Vec3::new(1.0, 2.0, 3.0)), &mesh3).unwrap();
        assert!((w3.b0 - 14f64.sqrt() / 2.0).abs() < 1e-14);
        assert!(w3.kappa_admissible());
    }

    #[test]
    fn rotating_beta_refused() {
        let p = preset("exp3", 1e-3).unwrap();
        let mesh = p.mesh(4).unwrap();
        assert!(matches!(build_weight(&p.beta, &mesh), Err(Error::WeightUnavailable(_))));
    }

    #[test]
    fn chi_bounds_hold_on_samples() {
        let mesh = unit_mesh(2, 8).unwrap();
        let w = build_weight(&VectorField::constant(Vec3::new(0.5, 3f64.sqrt() / 2.0, 0.0)), &mesh).unwrap();
        let beta = Vec3::new(0.5, 3f64.sqrt() / 2.0, 0.0);
        for x in sample_points(&mesh) {
            let chi = w.chi(&x);
            assert!(chi >= w.chi_lo * (1.0 - 1e-14) && chi <= w.chi_hi * (1.0 + 1e-14));
            assert!(w.phi(&x).1.norm() <= w.chi_grad * (1.0 + 1e-14));
            assert!(beta.dot(&w.direction) >= 2.0 * w.b0 * (1.0 - 1e-14));
        }
    }

    #[test]
    fn trace_inverse_p0_oracle() {
        // k = 1: curls are constant, quotient = sum_F h_F |F| / |T|; for the
        // right triangle with legs a: (a^2 + a^2 + 2 a^2) / (a^2 / 2) = 8
        let cg = trace_inverse_constant(2, 1).unwrap();
        assert!((cg * cg - 8.0).abs() < 1e-12, "{cg}");
        assert!(trace_inverse_constant(2, 2).unwrap() > cg);
        assert_eq!(trace_inverse_constant(3, 0).unwrap(), 0.0);
    }

    #[test]
    fn diagnostic_params_meet_thresholds() {
        let p = diagnostic_params(SchemeParams::default(), 8f64.sqrt());
        assert!((p.eta - 256.0).abs() < 1e-12);
        assert_eq!(p.tau, 10.0);
        let q = diagnostic_params(
            SchemeParams {
                theta: -1.0,
                tau: 0.1,
                ..Default::default()
            },
            3.0,
        );
        assert_eq!((q.eta, q.tau), (10.0, 1.0));
    }

    #[test]
    fn audit_examples() {
        let p1 = preset("exp1", 1.0).unwrap();
        let a1 = audit_assumptions(&p1.mesh(2).unwrap(), &p1, 10.0).unwrap();
        assert!(a1.all_pass(), "{a1:?}");
        assert_eq!(a1.get("friedrichs").unwrap().witness[0].1, 0.0);

        let p3 = preset("exp3", 1e-3).unwrap();
        let a3 = audit_assumptions(&p3.mesh(4).unwrap(), &p3, 10.0).unwrap();
        let s = a3.get("no_closed_curves").unwrap();
        assert!(!s.pass);
        assert_eq!(s.witness[0].1, 0.0);

        let mut p = preset("exp2", 1.0).unwrap();
        p.beta = VectorField::constant(Vec3::new(1.0, 0.0, 0.0));
        let mesh = unit_mesh(2, 4).unwrap();
        let star = star_facets(&mesh, &|_| Vec3::x(), 1.0);
        // enumeration oracle: every element owns a facet with normal +-x
        for e in 0..mesh.n_elements() {
            let has_axis = (0..3).any(|l| mesh.facets[mesh.elem_facets[e][l]].normal.x.abs() == 1.0);
            assert!(has_axis);
            assert_eq!(star.ratio[e], 1.0);
        }
        let a = audit_assumptions(&mesh, &p, 1.0).unwrap();
        assert!(a.get("normal_domination").unwrap().pass);
        let mut out = Vec::new();
        a.write_key_values(&mut out).unwrap();
        assert!(String::from_utf8(out).unwrap().contains("assumption.normal_domination=pass"));
    }

    #[test]
    fn inf_sup_positive_with_upwind() {
        let p = preset("exp2", 1e-9).unwrap();
        let s = DGSpace::new(Arc::new(p.mesh(4).unwrap()), 1).unwrap();
        let w = build_weight(&p.beta, s.mesh()).unwrap();
        let params = diagnostic_params(SchemeParams::for_experiment("exp2", 1e-9).unwrap(), trace_inverse_constant(2, 1).unwrap());
        let d = Discretization::new(&s, &p, params).unwrap();
        let r = inf_sup_diagnostic(&d, &w, 10, 1).unwrap();
        assert!(r.min_ratio > 0.0, "{r:?}");
        assert!(r.max_bound.is_finite() && r.min_bound > 0.0);
    }

    #[test]
    fn affine_nonrotating_beta_accepted() {
        let mesh = unit_mesh(2, 4).unwrap();
        let a = Mat3::new(0.2, 0.0, 0.0, 0.0, 0.1, 0.0, 0.0, 0.0, 0.0);
        let w = build_weight(&VectorField::affine(Vec3::new(1.0, 1.0, 0.0), a), &mesh).unwrap();
        assert!(w.b0 > 0.0 && w.kappa_admissible());
    }
}
