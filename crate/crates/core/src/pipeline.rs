//! One-call construction of every stage for a mesh.

use crate::assembly::assemble_forms;
use crate::error::Result;
use crate::geometry::Mesh;
use crate::operators::{build_core, Discretization, OperatorSuite};
use crate::riesz::{build_bases, RieszBasisPair};
use crate::spectral::{eigendecompose_core, EigenSystem};

/// Mesh, operators, spectrum and bases of one discretization level.
#[derive(Debug)]
pub struct Pipeline {
    pub mesh: Mesh,
    pub suite: OperatorSuite,
    pub eigen: EigenSystem,
    pub pair: RieszBasisPair,
}

impl Pipeline {
    pub fn build(mesh: &Mesh, rank_tol: f64) -> Result<Self> {
        let disc = Discretization::new(assemble_forms(mesh)?)?;
        let suite = build_core(disc, rank_tol)?;
        let eigen = eigendecompose_core(&suite)?;
        let pair = build_bases(&suite, &eigen)?;
        Ok(Self {
            mesh: mesh.clone(),
            suite,
            eigen,
            pair,
        })
    }
}
