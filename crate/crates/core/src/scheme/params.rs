use serde::{Deserialize, Serialize};

use crate::mesh::{Facet, SimplicialMesh};
use crate::problems::ProblemData;
use crate::{Error, Result, Vec3};

/// Rule producing the facet weights `(w+, w-)`, `w+ + w- = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightStrategy {
    Centered,
    /// `w± = (1 + c sgn(beta . n±)) / 2`.
    Signed(f64),
}

impl WeightStrategy {
    /// Weights from `beta . n+` (so `beta . n- = -beta . n+`).
    pub fn weights(self, beta_n_plus: f64) -> (f64, f64) {
        match self {
            WeightStrategy::Centered => (0.5, 0.5),
            WeightStrategy::Signed(c) => {
                let s = sgn(beta_n_plus);
                (0.5 * (1.0 + c * s), 0.5 * (1.0 - c * s))
            }
        }
    }

    /// Upwind constant `C_up` with `beta . [[w]] = C_up |beta . n|`.
    pub fn upwind_constant(self) -> f64 {
        match self {
            WeightStrategy::Centered => 0.0,
            WeightStrategy::Signed(c) => c,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "centered" {
            return Ok(Self::Centered);
        }
        if let Some(rest) = s.strip_prefix("signed") {
            let inner = rest.trim().trim_start_matches('(').trim_end_matches(')').trim();
            let c = if inner.is_empty() {
                1.0
            } else {
                inner
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad weight strategy {s:?}")))?
            };
            return Ok(Self::Signed(c));
        }
        Err(Error::Config(format!(
            "bad weight strategy {s:?} (expected centered or signed(c))"
        )))
    }
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Weights on `facet` with `beta` sampled at its centroid.
pub fn compute_weights(facet: &Facet, beta: &dyn Fn(&Vec3) -> Vec3, strategy: WeightStrategy) -> (f64, f64) {
    strategy.weights(beta(&facet.centroid).dot(&facet.normal))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeParams {
    pub theta: f64,
    pub eta: f64,
    pub tau: f64,
    pub alpha: WeightStrategy,
    pub alpha_d: WeightStrategy,
}

impl Default for SchemeParams {
    fn default() -> Self {
        Self {
            theta: 1.0,
            eta: 10.0,
            tau: 10.0,
            alpha: WeightStrategy::Signed(1.0),
            alpha_d: WeightStrategy::Centered,
        }
    }
}

impl SchemeParams {
    pub fn validate(&self) -> Result<()> {
        if !(-1.0..=1.0).contains(&self.theta) {
            return Err(Error::InvalidInput(format!("theta = {} outside [-1, 1]", self.theta)));
        }
        if !(self.eta > 0.0) {
            return Err(Error::InvalidInput(format!("eta = {} must be positive", self.eta)));
        }
        if !(self.tau >= 0.0) {
            return Err(Error::InvalidInput(format!("tau = {} must be nonnegative", self.tau)));
        }
        Ok(())
    }

    /// Parameters used for the named experiment.
    pub fn for_experiment(name: &str, eps: f64) -> Result<Self> {
        let base = SchemeParams::default();
        Ok(match name {
            "exp1" => SchemeParams {
                eta: 100.0,
                tau: 100.0,
                ..base
            },
            "exp2" => SchemeParams {
                alpha: WeightStrategy::Signed(if eps <= 1e-3 { 1.0 } else { 0.1 }),
                ..base
            },
            "exp3" => SchemeParams {
                alpha: WeightStrategy::Signed(10.0),
                ..base
            },
            "exp4" => SchemeParams {
                tau: 0.1,
                alpha: WeightStrategy::Signed(0.1),
                ..base
            },
            "exp5" => base,
            _ => return Err(Error::InvalidInput(format!("unknown experiment {name:?}"))),
        })
    }
}

/// `alpha` and `alpha_d` on one facet, as `[plus, minus]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FacetWeights {
    pub alpha: [f64; 2],
    pub alpha_d: [f64; 2],
}

impl FacetWeights {
    /// `|[[alpha - alpha_d]]|`.
    pub fn jump_difference(&self) -> f64 {
        ((self.alpha[0] - self.alpha_d[0]) - (self.alpha[1] - self.alpha_d[1])).abs()
    }
}

pub fn facet_weights(mesh: &SimplicialMesh, problem: &ProblemData, params: &SchemeParams) -> Vec<FacetWeights> {
    let beta = |x: &Vec3| problem.beta(x);
    mesh.facets
        .iter()
        .map(|f| {
            let (a0, a1) = compute_weights(f, &beta, params.alpha);
            let (d0, d1) = compute_weights(f, &beta, params.alpha_d);
            FacetWeights {
                alpha: [a0, a1],
                alpha_d: [d0, d1],
            }
        })
        .collect()
}
