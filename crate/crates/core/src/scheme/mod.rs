//! The weighted-residual DG scheme: facet weights and traces, assembly of
//! the global system, and a matrix-free evaluation of the bilinear form.

mod assemble;
mod operator;
mod params;
pub mod traces;

pub use assemble::{assemble, assemble_diffusion, assemble_parts, assemble_reaction_convection, assemble_rhs, Parts, SparseSystem};
pub use operator::{apply_operator, apply_rhs};
pub use params::{compute_weights, facet_weights, FacetWeights, SchemeParams, WeightStrategy};
pub use traces::{complement, scalar_jump, FacetTraces};

use crate::mesh::{classify_boundary, BoundaryClass, BoundaryTag};
use crate::problems::ProblemData;
use crate::space::DGSpace;
use crate::{Error, Result};

/// Everything the assembly needs: space, problem data, parameters, boundary
/// tags and facet weights.
#[derive(Debug, Clone)]
pub struct Discretization<'a> {
    pub space: &'a DGSpace,
    pub problem: &'a ProblemData,
    pub params: SchemeParams,
    pub tags: Vec<BoundaryTag>,
    pub weights: Vec<FacetWeights>,
}

impl<'a> Discretization<'a> {
    pub fn new(space: &'a DGSpace, problem: &'a ProblemData, params: SchemeParams) -> Result<Self> {
        let tags = classify_boundary(space.mesh(), problem)?;
        Self::with_tags(space, problem, params, tags)
    }

    pub fn with_tags(
        space: &'a DGSpace,
        problem: &'a ProblemData,
        params: SchemeParams,
        tags: Vec<BoundaryTag>,
    ) -> Result<Self> {
        params.validate()?;
        if problem.dim != space.dim() {
            return Err(Error::InvalidInput(format!(
                "problem is {}D but the space is {}D",
                problem.dim,
                space.dim()
            )));
        }
        let mesh = space.mesh();
        let mut class = vec![None; mesh.n_facets()];
        for t in &tags {
            if t.facet < class.len() {
                class[t.facet] = Some(t.class);
            }
        }
        for (f, facet) in mesh.facets.iter().enumerate() {
            match class[f] {
                Some(BoundaryClass::Interior) | None if facet.is_boundary() => {
                    return Err(Error::MissingBoundaryTag(f));
                }
                _ => {}
            }
        }
        let tags = class
            .into_iter()
            .enumerate()
            .map(|(f, c)| BoundaryTag {
                facet: f,
                class: c.unwrap_or(BoundaryClass::Interior),
            })
            .collect();
        let weights = facet_weights(mesh, problem, &params);
        Ok(Self {
            space,
            problem,
            params,
            tags,
            weights,
        })
    }

    pub fn class(&self, f: usize) -> BoundaryClass {
        self.tags[f].class
    }
}
