//! Shared geometry: the ball domain with its boundary condition, radial
//! quadrature grids, potentials and their scaling families.

mod grid;
mod potential;

pub use grid::{
    build_graded_grid, extend_grid, gauss_legendre, grid_with_breakpoints, PanelBasis, RadialGrid,
};
pub use potential::{
    scale_density, scale_potential, split_uv, uniform_density, PotentialFactor, Profile,
    RadialPotential, ScalingFamily,
};

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Boundary condition on the sphere r = R. Robin means ∂f/∂r + b·f = 0;
/// b is an inverse length in the same units as R (b = 0 is Neumann).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
    Robin { b: f64 },
}

impl BoundaryCondition {
    /// Robin coefficient, with Neumann as b = 0. None for Dirichlet.
    pub fn robin_coefficient(&self) -> Option<f64> {
        match self {
            BoundaryCondition::Dirichlet => None,
            BoundaryCondition::Neumann => Some(0.0),
            BoundaryCondition::Robin { b } => Some(*b),
        }
    }
}

/// Ball of radius R centred at the interaction point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallDomain {
    pub radius: f64,
    pub bc: BoundaryCondition,
}

impl BallDomain {
    pub fn new(radius: f64, bc: BoundaryCondition) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "domain radius must be positive and finite, got {radius}"
            )));
        }
        if let BoundaryCondition::Robin { b } = bc {
            if !b.is_finite() {
                return Err(Error::InvalidParameter("Robin coefficient must be finite".into()));
            }
        }
        Ok(BallDomain { radius, bc })
    }

    pub fn dirichlet(radius: f64) -> Result<Self> {
        Self::new(radius, BoundaryCondition::Dirichlet)
    }
}

/// Where an operator lives: the whole space, or a ball with its boundary
/// condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Space {
    Free,
    Ball { domain: BallDomain },
}

impl Space {
    pub fn ball(domain: BallDomain) -> Self {
        Space::Ball { domain }
    }

    pub fn domain(&self) -> Option<&BallDomain> {
        match self {
            Space::Free => None,
            Space::Ball { domain } => Some(domain),
        }
    }
}

/// Strength α of the point interaction; Infinite removes the interaction
/// (the operator is the free/background one).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointInteractionStrength {
    Finite(f64),
    Infinite,
}

impl PointInteractionStrength {
    pub fn finite(&self) -> Option<f64> {
        match self {
            PointInteractionStrength::Finite(a) => Some(*a),
            PointInteractionStrength::Infinite => None,
        }
    }
}

impl From<f64> for PointInteractionStrength {
    fn from(a: f64) -> Self {
        PointInteractionStrength::Finite(a)
    }
}
