//! Compactly supported radial potentials, their Birman-Schwinger factors
//! u = sgn(V)|V|^{1/2}, v = |V|^{1/2}, and the two rescaling schemes used
//! by the convergence experiments.

use super::RadialGrid;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Shape of the potential inside its support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    /// Constant value `depth` on the whole support.
    SquareWell { depth: f64 },
    /// exp(-(r/width)²), cut off at the support radius.
    TruncatedGaussian { width: f64 },
    /// Piecewise linear through (radii[i], values[i]); radii must be
    /// strictly increasing and reach the support radius.
    Tabulated { radii: Vec<f64>, values: Vec<f64> },
}

impl Profile {
    fn shape(&self, r: f64) -> f64 {
        match self {
            Profile::SquareWell { depth } => *depth,
            Profile::TruncatedGaussian { width } => (-(r / width) * (r / width)).exp(),
            Profile::Tabulated { radii, values } => {
                if r <= radii[0] {
                    return values[0];
                }
                let k = radii.partition_point(|&x| x <= r);
                if k >= radii.len() {
                    return *values.last().unwrap();
                }
                let (r0, r1) = (radii[k - 1], radii[k]);
                let s = (r - r0) / (r1 - r0);
                values[k - 1] * (1.0 - s) + values[k] * s
            }
        }
    }

    /// Same shape with every internal length multiplied by eps.
    fn scaled(&self, eps: f64) -> Profile {
        match self {
            Profile::SquareWell { depth } => Profile::SquareWell { depth: *depth },
            Profile::TruncatedGaussian { width } => {
                Profile::TruncatedGaussian { width: width * eps }
            }
            Profile::Tabulated { radii, values } => Profile::Tabulated {
                radii: radii.iter().map(|r| r * eps).collect(),
                values: values.clone(),
            },
        }
    }

    fn validate(&self, support: f64) -> Result<()> {
        match self {
            Profile::SquareWell { depth } => {
                if !depth.is_finite() {
                    return Err(Error::InvalidParameter("well depth must be finite".into()));
                }
            }
            Profile::TruncatedGaussian { width } => {
                if !(width.is_finite() && *width > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "gaussian width must be positive, got {width}"
                    )));
                }
            }
            Profile::Tabulated { radii, values } => {
                if radii.len() != values.len() || radii.len() < 2 {
                    return Err(Error::InvalidParameter(
                        "tabulated profile needs matching radii/values with at least 2 points"
                            .into(),
                    ));
                }
                if radii[0] < 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidParameter(
                        "tabulated radii must be nonnegative and strictly increasing".into(),
                    ));
                }
                if *radii.last().unwrap() < support * (1.0 - 1e-12) {
                    return Err(Error::InvalidParameter(
                        "tabulated radii must reach the support radius".into(),
                    ));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidParameter(
                        "tabulated values must be finite".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// V(r) = coupling · shape(r) for r ≤ support, zero beyond.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialPotential {
    pub profile: Profile,
    pub support: f64,
    pub coupling: f64,
}

impl RadialPotential {
    pub fn new(profile: Profile, support: f64, coupling: f64) -> Result<Self> {
        if !(support.is_finite() && support > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "support radius must be positive, got {support}"
            )));
        }
        if !coupling.is_finite() {
            return Err(Error::InvalidParameter("coupling must be finite".into()));
        }
        profile.validate(support)?;
        Ok(RadialPotential { profile, support, coupling })
    }

    pub fn square_well(depth: f64, support: f64, coupling: f64) -> Result<Self> {
        Self::new(Profile::SquareWell { depth }, support, coupling)
    }

    pub fn value(&self, r: f64) -> f64 {
        if r > self.support {
            0.0
        } else {
            self.coupling * self.profile.shape(r)
        }
    }

    pub fn u(&self, r: f64) -> f64 {
        let val = self.value(r);
        val.signum() * val.abs().sqrt()
    }

    pub fn v(&self, r: f64) -> f64 {
        self.value(r).abs().sqrt()
    }

    pub fn sample(&self, grid: &RadialGrid) -> Vec<f64> {
        grid.nodes.iter().map(|&r| self.value(r)).collect()
    }

    /// Sign of the potential if it never changes, +1/-1/0; None when the
    /// profile takes both signs, which sends the Birman-Schwinger machinery
    /// down the nonsymmetric (experimental) path.
    pub fn sign_definite(&self) -> Option<f64> {
        let vals: Vec<f64> = match &self.profile {
            Profile::SquareWell { depth } => vec![self.coupling * depth],
            Profile::TruncatedGaussian { .. } => vec![self.coupling],
            Profile::Tabulated { values, .. } => {
                values.iter().map(|v| self.coupling * v).collect()
            }
        };
        let has_pos = vals.iter().any(|&v| v > 0.0);
        let has_neg = vals.iter().any(|&v| v < 0.0);
        match (has_pos, has_neg) {
            (true, true) => None,
            (true, false) => Some(1.0),
            (false, true) => Some(-1.0),
            (false, false) => Some(0.0),
        }
    }

    /// Total mass ∫ V 4πr² dr over the grid, mainly for density checks.
    pub fn mass(&self, grid: &RadialGrid) -> f64 {
        grid.integrate(&self.sample(grid))
    }
}

/// Evaluator for one of the two factors of V = u·v.
#[derive(Debug, Clone)]
pub struct PotentialFactor {
    pot: RadialPotential,
    carries_sign: bool,
}

impl PotentialFactor {
    pub fn eval(&self, r: f64) -> f64 {
        if self.carries_sign {
            self.pot.u(r)
        } else {
            self.pot.v(r)
        }
    }

    pub fn sample(&self, grid: &RadialGrid) -> Vec<f64> {
        grid.nodes.iter().map(|&r| self.eval(r)).collect()
    }

    pub fn support(&self) -> f64 {
        self.pot.support
    }
}

/// The factorization V = u·v with u = sgn(V)|V|^{1/2} and v = |V|^{1/2},
/// as a pair of evaluators (u first).
pub fn split_uv(pot: &RadialPotential) -> (PotentialFactor, PotentialFactor) {
    (
        PotentialFactor { pot: pot.clone(), carries_sign: true },
        PotentialFactor { pot: pot.clone(), carries_sign: false },
    )
}

/// The rescaling family V_ε(r) = (1 + λε)/ε² · V(r/ε) for the local
/// approximation scheme. When V is tuned to a zero-energy resonance the
/// family converges to the point interaction whose strength is set by λ
/// through the resonance overlap.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingFamily {
    pub base: RadialPotential,
    pub lambda: f64,
    pub epsilons: Vec<f64>,
    pub domain_radius: f64,
}

impl ScalingFamily {
    pub fn new(
        base: RadialPotential,
        lambda: f64,
        epsilons: Vec<f64>,
        domain_radius: f64,
    ) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::InvalidParameter("lambda must be finite".into()));
        }
        if epsilons.is_empty() {
            return Err(Error::InvalidParameter("need at least one epsilon".into()));
        }
        if !(domain_radius.is_finite() && domain_radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "domain radius must be positive, got {domain_radius}"
            )));
        }
        for &e in &epsilons {
            if !(e.is_finite() && e > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "epsilons must be positive, got {e}"
                )));
            }
            if e * base.support >= domain_radius {
                return Err(Error::SupportViolation {
                    support: e * base.support,
                    radius: domain_radius,
                });
            }
        }
        Ok(ScalingFamily { base, lambda, epsilons, domain_radius })
    }
}

/// V_ε for one member of the family.
pub fn scale_potential(family: &ScalingFamily, eps: f64) -> Result<RadialPotential> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let strength = (1.0 + family.lambda * eps) / (eps * eps);
    RadialPotential::new(
        family.base.profile.scaled(eps),
        family.base.support * eps,
        family.base.coupling * strength,
    )
}

/// ρ_ε(r) = ε^{-3} ρ(r/ε), the mass-preserving shrinking used by the
/// non-local rank-one scheme.
pub fn scale_density(base: &RadialPotential, eps: f64) -> Result<RadialPotential> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    RadialPotential::new(
        base.profile.scaled(eps),
        base.support * eps,
        base.coupling / (eps * eps * eps),
    )
}

/// Uniform probability density on the ball of radius a.
pub fn uniform_density(a: f64) -> Result<RadialPotential> {
    RadialPotential::square_well(3.0 / (4.0 * std::f64::consts::PI * a * a * a), a, 1.0)
}
