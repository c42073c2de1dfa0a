//! Scalar layer of the Green-function machinery: modified spherical Bessel
//! functions, the separable factors of the resolvent kernels on the ball
//! and on free space, the regular correction h_z of the s-wave Green
//! function at the origin, and the point-interaction coefficients built
//! from it.
//!
//! Sector-ℓ resolvent kernels of −Δ − z at z = −κ² < 0 all have the form
//!
//! ```text
//! G_ℓ(r, s) = κ/(4π) · ỹ₁(min) ỹ₂(max) / (r s)
//! ```
//!
//! with reduced solutions ỹ₁(r) = r·i_ℓ(κr) regular at the origin and
//! ỹ₂(r) = r·(k_ℓ + c·i_ℓ)(κr) matching the outer condition; the constant
//! κ/(4π) is 1/(4π) times the inverse Wronskian, which equals κ for this
//! normalization of i and k independently of ℓ and of c. Free space has
//! c = 0, the ball determines c from its boundary condition at R.

use crate::core::{BallDomain, Space};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// A point z = −κ² on the negative real axis, where every operator in the
/// lab is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub z: f64,
    pub kappa: f64,
}

impl SpectralPoint {
    pub fn new(z: f64) -> Result<Self> {
        if !(z.is_finite() && z < 0.0) {
            return Err(Error::InvalidSpectralPoint(z));
        }
        Ok(SpectralPoint { z, kappa: (-z).sqrt() })
    }

    pub fn from_kappa(kappa: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::InvalidSpectralPoint(-kappa * kappa));
        }
        Ok(SpectralPoint { z: -kappa * kappa, kappa })
    }
}

pub fn sinhc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sinh() / x
    }
}

fn double_factorial_odd(l: usize) -> f64 {
    // (2l+1)!!
    let mut acc = 1.0;
    let mut k = 3.0;
    for _ in 0..l {
        acc *= k;
        k += 2.0;
    }
    acc
}

/// Modified spherical Bessel function i_ℓ, normalized so i₀(x) = sinh(x)/x.
/// The series has positive terms only, so it is stable at every x ≥ 0.
pub fn bessel_i(l: usize, x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x == 0.0 {
        return if l == 0 { 1.0 } else { 0.0 };
    }
    let mut term = x.powi(l as i32) / double_factorial_odd(l);
    let mut sum = term;
    let x2 = x * x;
    for k in 1..600 {
        term *= x2 / (2.0 * k as f64 * (2 * (l + k) + 1) as f64);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// Modified spherical Bessel function k_ℓ, normalized so k₀(x) = e^{-x}/x.
/// Upward recurrence follows the growing solution, hence is stable.
pub fn bessel_k(l: usize, x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let e = (-x).exp();
    let mut km1 = e / x;
    let mut k0 = e / x;
    for n in 0..l {
        let k1 = km1 + (2 * n + 1) as f64 / x * k0;
        km1 = k0;
        k0 = k1;
    }
    k0
}

pub fn bessel_i_deriv(l: usize, x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let im1 = if l == 0 { x.cosh() / x } else { bessel_i(l - 1, x) };
    im1 - (l + 1) as f64 / x * bessel_i(l, x)
}

pub fn bessel_k_deriv(l: usize, x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let km1 = if l == 0 { (-x).exp() / x } else { bessel_k(l - 1, x) };
    -(km1 + (l + 1) as f64 / x * bessel_k(l, x))
}

/// Separable factors of the sector-ℓ resolvent kernel at z, for free space
/// or a ball; see the module docs for the normalization.
#[derive(Debug, Clone, Copy)]
pub struct GreenFactors {
    pub kappa: f64,
    pub scale: f64,
    pub c_bc: f64,
    pub sector: usize,
}

impl GreenFactors {
    pub fn new(space: &Space, z: &SpectralPoint, sector: usize) -> Result<Self> {
        let kappa = z.kappa;
        let c_bc = match space {
            Space::Free => 0.0,
            Space::Ball { domain } => outer_constant(domain, z, sector)?,
        };
        Ok(GreenFactors { kappa, scale: kappa / (4.0 * PI), c_bc, sector })
    }

    /// ỹ₁(r) = r·i_ℓ(κr), the solution regular at the origin.
    pub fn y_lo(&self, r: f64) -> f64 {
        r * bessel_i(self.sector, self.kappa * r)
    }

    pub fn y_lo_deriv(&self, r: f64) -> f64 {
        let x = self.kappa * r;
        bessel_i(self.sector, x) + x * bessel_i_deriv(self.sector, x)
    }

    /// ỹ₂(r) = r·(k_ℓ + c·i_ℓ)(κr), the solution matching the outer condition.
    pub fn y_hi(&self, r: f64) -> f64 {
        let x = self.kappa * r;
        r * (bessel_k(self.sector, x) + self.c_bc * bessel_i(self.sector, x))
    }

    pub fn y_hi_deriv(&self, r: f64) -> f64 {
        let x = self.kappa * r;
        bessel_k(self.sector, x) + self.c_bc * bessel_i(self.sector, x)
            + x * (bessel_k_deriv(self.sector, x) + self.c_bc * bessel_i_deriv(self.sector, x))
    }
}

/// The admixture constant c making k_ℓ + c·i_ℓ satisfy the boundary
/// condition at R (after reduction by 1/r).
fn outer_constant(domain: &BallDomain, z: &SpectralPoint, sector: usize) -> Result<f64> {
    let x = z.kappa * domain.radius;
    let r = domain.radius;
    let (num, den) = match domain.bc.robin_coefficient() {
        // Dirichlet: ỹ₂(R) = 0; i_ℓ > 0 keeps the denominator away from zero
        None => (r * bessel_k(sector, x), r * bessel_i(sector, x)),
        Some(b) => {
            // reduced condition ỹ′(R) + (b - 1/R) ỹ(R) = 0
            let bt = b - 1.0 / r;
            let ktilde = r * bessel_k(sector, x);
            let kd = bessel_k(sector, x) + x * bessel_k_deriv(sector, x);
            let itilde = r * bessel_i(sector, x);
            let id = bessel_i(sector, x) + x * bessel_i_deriv(sector, x);
            (kd + bt * ktilde, id + bt * itilde)
        }
    };
    let c = -num / den;
    if !c.is_finite() {
        return Err(Error::Pole(format!(
            "resolvent kernel has a boundary pole at z = {} (sector {sector})",
            z.z
        )));
    }
    Ok(c)
}

/// Free-space Γ_z(r) = e^{-κr}/(4πr), the singular s-wave profile of the
/// point interaction.
pub fn gamma(z: &SpectralPoint, r: f64) -> f64 {
    (-z.kappa * r).exp() / (4.0 * PI * r)
}

/// Regular correction h_z(r) = A·sinh(κr)/r that the boundary adds to Γ_z;
/// identically zero on free space. Its value at the origin, A·κ, is what
/// shifts the point-interaction coefficients on a ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectionL0 {
    pub amplitude: f64,
    pub kappa: f64,
}

impl CorrectionL0 {
    pub fn eval(&self, r: f64) -> f64 {
        self.amplitude * self.kappa * sinhc(self.kappa * r)
    }

    pub fn at_zero(&self) -> f64 {
        self.amplitude * self.kappa
    }
}

/// Solve the one-dimensional boundary equation for the correction amplitude:
/// the combination Γ_z + A·sinh(κ·)/· must satisfy the boundary condition,
/// which fixes A = −σ(Γ_z)/σ(sinh ansatz) for the boundary functional σ.
pub fn correction_l0(space: &Space, z: &SpectralPoint) -> Result<CorrectionL0> {
    let domain = match space {
        Space::Free => return Ok(CorrectionL0 { amplitude: 0.0, kappa: z.kappa }),
        Space::Ball { domain } => domain,
    };
    let (r, k) = (domain.radius, z.kappa);
    let x = k * r;
    let gamma_val = (-x).exp() / (4.0 * PI * r);
    let gamma_der = -(-x).exp() * (x + 1.0) / (4.0 * PI * r * r);
    let ansatz_val = x.sinh() / r;
    let ansatz_der = (x * x.cosh() - x.sinh()) / (r * r);
    let (num, den) = match domain.bc.robin_coefficient() {
        None => (gamma_val, ansatz_val),
        Some(b) => (gamma_der + b * gamma_val, ansatz_der + b * ansatz_val),
    };
    let amplitude = -num / den;
    if !amplitude.is_finite() {
        return Err(Error::SingularCorrection {
            z: z.z,
            b: domain.bc.robin_coefficient().unwrap_or(f64::NAN),
        });
    }
    Ok(CorrectionL0 { amplitude, kappa: k })
}

/// 1/(α + κ/4π − h_z(0)), the rank-one coefficient of the point-interaction
/// resolvent on a ball. The correction must belong to the same z.
pub fn c_alpha(alpha: f64, z: &SpectralPoint, corr: &CorrectionL0) -> Result<f64> {
    debug_assert_eq!(corr.kappa, z.kappa);
    invert_dispersion(alpha + z.kappa / (4.0 * PI) - corr.at_zero(), z)
}

/// 1/(α + κ/4π), the free-space variant.
pub fn d_alpha(alpha: f64, z: &SpectralPoint) -> Result<f64> {
    invert_dispersion(alpha + z.kappa / (4.0 * PI), z)
}

fn invert_dispersion(denom: f64, z: &SpectralPoint) -> Result<f64> {
    let c = denom.recip();
    if !c.is_finite() {
        return Err(Error::Pole(format!(
            "point-interaction coefficient diverges at z = {}",
            z.z
        )));
    }
    Ok(c)
}

/// Relative residual of the outer Green factor in the boundary condition
/// at R. Zero up to rounding by construction; a cheap diagnostic that the
/// value/derivative pairs and the admixture constant agree.
pub fn boundary_residual(domain: &BallDomain, z: &SpectralPoint, sector: usize) -> Result<f64> {
    let gf = GreenFactors::new(&Space::Ball { domain: *domain }, z, sector)?;
    let r = domain.radius;
    let f = gf.y_hi(r) / r;
    let fd = gf.y_hi_deriv(r) / r - gf.y_hi(r) / (r * r);
    // the same functional with the two basis solutions kept separate sets
    // the size against which cancellation is measured
    let x = z.kappa * r;
    let kpart = r * bessel_k(sector, x) / r;
    let ipart = gf.c_bc * r * bessel_i(sector, x) / r;
    Ok(match domain.bc.robin_coefficient() {
        None => f / (kpart.abs() + ipart.abs()),
        Some(b) => {
            let scale = fd.abs().max((b * f).abs()).max(z.kappa * (kpart.abs() + ipart.abs()));
            (fd + b * f) / scale
        }
    })
}

/// Lowest eigenvalue of the Laplacian on the ball that is created purely by
/// an attractive Robin boundary, i.e. the pole of the resolvent closest to
/// zero on the negative axis. None when the boundary binds nothing
/// (Dirichlet, Neumann, or b ≥ 0). Root of κ·cosh(κR) + b̃·sinh(κR) in the
/// s-wave, which is where the ground state lives.
pub fn lowest_boundary_eigenvalue(domain: &BallDomain) -> Option<f64> {
    let b = domain.bc.robin_coefficient()?;
    if b >= 0.0 {
        return None;
    }
    let r = domain.radius;
    let bt = b - 1.0 / r;
    // κ·cosh(κR) + b̃·sinh(κR), rescaled by e^{-κR} so the two exponentials
    // never cancel each other at large κR; with b < 0 we have b̃R < -1, so
    // f(0+) < 0 < f(-b̃) and a root exists
    let f = |k: f64| 0.5 * (k + bt) + 0.5 * (-2.0 * k * r).exp() * (k - bt);
    let mut lo = 1e-12 * (-bt);
    let mut hi = -bt;
    debug_assert!(f(lo) < 0.0 && f(hi) > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let kappa = 0.5 * (lo + hi);
    Some(-kappa * kappa)
}

/// Condition numbers aside, whether the Robin boundary makes z = −κ² sit on
/// the wrong side of (or too close to) the boundary-induced pole is what
/// callers actually need to know before assembling anything there.
pub fn clears_boundary_pole(domain: &BallDomain, z: &SpectralPoint, margin: f64) -> bool {
    match lowest_boundary_eigenvalue(domain) {
        None => true,
        Some(e) => (z.z - e).abs() > margin * e.abs().max(1.0),
    }
}
