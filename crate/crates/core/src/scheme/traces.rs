//! Pointwise facet calculus. The facet normal `n` is `n+`; on boundary
//! facets there is no minus trace and jumps and averages reduce to
//! `n x v`, `v . n`, `v`.

use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FacetTraces {
    pub normal: Vec3,
    pub plus: Vec3,
    pub minus: Option<Vec3>,
}

impl FacetTraces {
    pub fn interior(normal: Vec3, plus: Vec3, minus: Vec3) -> Self {
        Self {
            normal,
            plus,
            minus: Some(minus),
        }
    }

    pub fn boundary(normal: Vec3, trace: Vec3) -> Self {
        Self {
            normal,
            plus: trace,
            minus: None,
        }
    }

    /// `v+ - v-`.
    pub fn jump(&self) -> Vec3 {
        match self.minus {
            Some(m) => self.plus - m,
            None => self.plus,
        }
    }

    /// `n+ x v+ + n- x v-`.
    pub fn jump_t(&self) -> Vec3 {
        self.normal.cross(&self.jump())
    }

    /// `v+ . n+ + v- . n-`.
    pub fn jump_n(&self) -> f64 {
        self.normal.dot(&self.jump())
    }

    /// `w+ v+ + w- v-`.
    pub fn weighted_avg(&self, w: [f64; 2]) -> Vec3 {
        match self.minus {
            Some(m) => self.plus * w[0] + m * w[1],
            None => self.plus,
        }
    }

    pub fn avg(&self) -> Vec3 {
        self.weighted_avg([0.5, 0.5])
    }

    /// Apply `op` to both traces.
    pub fn map(&self, op: impl Fn(&Vec3) -> Vec3) -> Self {
        Self {
            normal: self.normal,
            plus: op(&self.plus),
            minus: self.minus.as_ref().map(op),
        }
    }
}

/// `[[a]] = a+ n+ + a- n-` for a scalar with traces `a = [a+, a-]`.
pub fn scalar_jump(normal: &Vec3, a: [f64; 2]) -> Vec3 {
    normal * (a[0] - a[1])
}

/// Complementary weight `1 - w`.
pub fn complement(w: [f64; 2]) -> [f64; 2] {
    [1.0 - w[0], 1.0 - w[1]]
}
