//! deltalab: a desk-scale laboratory for Schrödinger operators with a point
//! (zero-range) interaction at the origin of a three-dimensional ball.
//!
//! The lab builds the relevant integral operators on radial grids, tunes
//! regular potentials to a zero-energy resonance, and then measures in
//! operator norm how two approximation schemes converge to the point
//! interaction −Δ_{α,σ}:
//!
//! * the local scheme: rescaled potentials V_ε(x) = ((1+λε)/ε²) V(x/ε),
//!   resolved through the Konno-Kuroda factorization;
//! * the non-local scheme: rank-one perturbations a(ε) (ρ_ε, ·) ρ_ε with the
//!   coupling law a(ε) = −ε/ℓ + α ε²/ℓ².
//!
//! Everything is radial: `L²(Ω)` inner products carry the `4πr² dr` measure,
//! kernels are stored per angular sector, and the point interaction lives
//! entirely in the s-wave. See the module docs of [`operator`] for the
//! discretization conventions shared by all operators.
//!
//! Entry points:
//! * library: [`bsop::tune_resonance`], [`resolvent::kk_resolvent`],
//!   [`resolvent::pi_resolvent`], [`convlab::sweep_local`] and friends;
//! * runnable walkthroughs in `examples/` (one per capability);
//! * a thin CLI (`deltalab <bs|pi|converge|resonance>`) over JSON configs.

pub mod core;
pub mod operator;
pub mod greens;
pub mod bsop;
pub mod resolvent;
pub mod convlab;
pub mod cli;
mod error;

pub use error::{Error, Result};
