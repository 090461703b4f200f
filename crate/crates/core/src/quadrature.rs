//! Quadrature on reference simplices.
//!
//! Rules are Gauss-Legendre tensor rules pulled back through the collapsed
//! (Duffy) map, so any exactness degree up to [`MAX_DEGREE`] is available
//! on the interval, triangle and tetrahedron. Points are returned in
//! barycentric coordinates so they can be mapped onto any physical simplex.

use crate::{Error, Result};

pub const MAX_DEGREE: usize = 40;

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    /// Simplex dimension (1, 2 or 3).
    pub dim: usize,
    /// Barycentric coordinates; only the first `dim + 1` entries are used.
    pub points: Vec<[f64; 4]>,
    /// Weights summing to the reference measure `1 / dim!`.
    pub weights: Vec<f64>,
    /// Polynomial degree integrated exactly.
    pub degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Measure of the reference simplex, `1 / dim!`.
    pub fn reference_measure(&self) -> f64 {
        reference_measure(self.dim)
    }

    /// Weights rescaled so that they sum to one; multiply by the physical
    /// measure of a simplex to integrate over it.
    pub fn normalized_weights(&self) -> Vec<f64> {
        let m = self.reference_measure();
        self.weights.iter().map(|w| w / m).collect()
    }
}

pub fn reference_measure(dim: usize) -> f64 {
    match dim {
        0 | 1 => 1.0,
        2 => 0.5,
        3 => 1.0 / 6.0,
        _ => unreachable!("simplex dimension {dim}"),
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess, then Newton on P_n.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                let (_, d) = legendre_with_derivative(n, z);
                dp = d;
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        // map [-1, 1] -> [0, 1]
        x[i] = 0.5 * (1.0 - z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[i] = 0.5 * wi;
        w[n - 1 - i] = 0.5 * wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Rule on the reference `dim`-simplex exact for polynomials of total
/// degree `degree`.
pub fn quadrature(dim: usize, degree: usize) -> Result<QuadratureRule> {
    if degree > MAX_DEGREE {
        return Err(Error::UnsupportedDegree {
            requested: degree,
            max: MAX_DEGREE,
        });
    }
    match dim {
        1 => {
            let n = (degree + 2) / 2;
            let (x, w) = gauss_legendre_unit(n.max(1));
            Ok(QuadratureRule {
                dim,
                points: x.iter().map(|&t| [1.0 - t, t, 0.0, 0.0]).collect(),
                weights: w,
                degree,
            })
        }
        2 => {
            // The Jacobian (1 - s) raises the degree in s by one.
            let n = (degree + 2).div_ceil(2).max(1);
            let (x, w) = gauss_legendre_unit(n);
            let mut points = Vec::with_capacity(n * n);
            let mut weights = Vec::with_capacity(n * n);
            for (s, ws) in x.iter().zip(&w) {
                for (t, wt) in x.iter().zip(&w) {
                    let r1 = *s;
                    let r2 = t * (1.0 - s);
                    points.push([1.0 - r1 - r2, r1, r2, 0.0]);
                    weights.push(ws * wt * (1.0 - s));
                }
            }
            Ok(QuadratureRule {
                dim,
                points,
                weights,
                degree,
            })
        }
        3 => {
            let n = (degree + 3).div_ceil(2).max(1);
            let (x, w) = gauss_legendre_unit(n);
            let mut points = Vec::with_capacity(n * n * n);
            let mut weights = Vec::with_capacity(n * n * n);
            for (s, ws) in x.iter().zip(&w) {
                for (t, wt) in x.iter().zip(&w) {
                    for (u, wu) in x.iter().zip(&w) {
                        let r1 = *s;
                        let r2 = t * (1.0 - s);
                        let r3 = u * (1.0 - s) * (1.0 - t);
                        points.push([1.0 - r1 - r2 - r3, r1, r2, r3]);
                        weights.push(ws * wt * wu * (1.0 - s) * (1.0 - s) * (1.0 - t));
                    }
                }
            }
            Ok(QuadratureRule {
                dim,
                points,
                weights,
                degree,
            })
        }
        _ => Err(Error::InvalidInput(format!(
            "no simplex quadrature in dimension {dim}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// Closed form: int_T x^a y^b z^c = a! b! c! / (a + b + c + d)! on the
    /// reference simplex of dimension d.
    fn monomial_integral(exps: &[u32]) -> f64 {
        let d = exps.len() as u32;
        let s: u32 = exps.iter().sum();
        exps.iter().map(|&e| factorial(e)).product::<f64>() / factorial(s + d)
    }

    fn integrate(rule: &QuadratureRule, exps: &[u32]) -> f64 {
        rule.points
            .iter()
            .zip(&rule.weights)
            .map(|(p, w)| {
                w * exps
                    .iter()
                    .enumerate()
                    .map(|(i, &e)| p[i + 1].powi(e as i32))
                    .product::<f64>()
            })
            .sum()
    }

    #[test]
    fn reference_measures() {
        let tri = quadrature(2, 0).unwrap();
        assert!((tri.weights.iter().sum::<f64>() - 0.5).abs() < 1e-15);
        let edge = quadrature(1, 0).unwrap();
        assert!((edge.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let tet = quadrature(3, 3).unwrap();
        assert!((tet.weights.iter().sum::<f64>() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn x2y_on_triangle() {
        // 2! 1! / 5! = 1/60
        let rule = quadrature(2, 3).unwrap();
        assert!((integrate(&rule, &[2, 1]) - 1.0 / 60.0).abs() < 1e-15);
        assert!((monomial_integral(&[2, 1]) - 1.0 / 60.0).abs() < 1e-15);
    }

    #[test]
    fn exact_up_to_stated_degree() {
        for dim in 1..=3usize {
            for degree in 0..=10usize {
                let rule = quadrature(dim, degree).unwrap();
                let mut exps = vec![0u32; dim];
                // enumerate all monomials of total degree <= degree
                loop {
                    let total: u32 = exps.iter().sum();
                    if total as usize <= degree {
                        let q = integrate(&rule, &exps);
                        let e = monomial_integral(&exps);
                        assert!(
                            (q - e).abs() < 1e-14 * e.max(1e-3),
                            "dim {dim} deg {degree} {exps:?}: {q} vs {e}"
                        );
                    }
                    let mut i = 0;
                    loop {
                        if i == dim {
                            break;
                        }
                        exps[i] += 1;
                        if exps[i] as usize <= degree {
                            break;
                        }
                        exps[i] = 0;
                        i += 1;
                    }
                    if i == dim {
                        break;
                    }
                }
            }
        }
    }

    #[test]
    fn unsupported_degree_rejected() {
        match quadrature(2, MAX_DEGREE + 1) {
            Err(Error::UnsupportedDegree { max, .. }) => assert_eq!(max, MAX_DEGREE),
            other => panic!("unexpected {other:?}"),
        }
    }
}
