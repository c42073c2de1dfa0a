//! Birman-Schwinger machinery: the zero-energy operator
//! B₀ = u·(−Δ)^{-1}·v of a compactly supported radial potential, tuning a
//! potential shape to a zero-energy resonance, and the diagnostics that
//! certify the tuned resonance (profile tail law, residual defect,
//! localization under grid extension).
//!
//! A coupling θ enters linearly, B₀(θV) = θ·B₀(V), so the resonance
//! coupling is read off a single eigenvalue computation: θ* = −1/μ₁ with
//! μ₁ the most negative eigenvalue of B₀(V). The tuned eigenfunction φ
//! (Bφ = −φ) induces the zero-energy solution ψ = (−Δ)^{-1} v φ, whose
//! tail 4πrψ(r) = ⟨v, φ⟩ for r beyond the support is what the rescaled
//! potentials inherit as the point-interaction strength.

use crate::core::{split_uv, RadialGrid, RadialPotential};
use crate::operator::{pointwise_apply, KernelOperator, PanelSpace, SeparableKernel};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// One eigenpair of a kernel operator: L²-normalized nodal eigenvector and
/// the iteration residual ‖Tφ − μφ‖ relative to the operator scale.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
}

/// Result of tuning a potential shape to its zero-energy resonance.
#[derive(Debug, Clone)]
pub struct ResonanceData {
    /// coupling multiplier putting the eigenvalue at exactly −1
    pub theta_star: f64,
    /// eigenpair of B₀(θ*V); the vector is the resonance function φ
    pub pair: EigenPair,
    /// ⟨v, φ⟩ for the tuned v, made nonnegative by the sign convention
    pub overlap: f64,
    /// distance of the second-nearest eigenvalue from −1
    pub gap: f64,
    /// set when the potential changes sign and the operator is nonsymmetric
    pub experimental: bool,
    pub grid: RadialGrid,
}

impl ResonanceData {
    /// The tuned potential θ*·V.
    pub fn tuned_potential(&self, base: &RadialPotential) -> Result<RadialPotential> {
        RadialPotential::new(
            base.profile.clone(),
            base.support,
            base.coupling * self.theta_star,
        )
    }
}

/// Zero-energy Birman-Schwinger operator in angular sector ℓ,
/// u(r)·N_ℓ(r,s)·v(s) with the Newton kernel N_ℓ = r_<^{ℓ+1} r_>^{-ℓ} /
/// (4π(2ℓ+1) r s). The support edge must be a panel boundary of the grid,
/// otherwise the square-root factors would put their kink inside a panel.
pub fn assemble_b0(
    space: PanelSpace,
    pot: &RadialPotential,
    sector: usize,
) -> Result<KernelOperator> {
    if pot.support > space.grid.r_max() * (1.0 + 1e-12) {
        return Err(Error::SupportViolation {
            support: pot.support,
            radius: space.grid.r_max(),
        });
    }
    if space.grid.boundary_index(pot.support, 1e-12).is_none() {
        return Err(Error::InvalidParameter(format!(
            "potential support {} is not a panel boundary of the grid",
            pot.support
        )));
    }
    let (u, v) = split_uv(pot);
    let symmetric = pot.sign_definite().is_some();
    let l = sector as i32;
    let kernel = SeparableKernel {
        scale: 1.0 / (4.0 * PI * (2 * sector + 1) as f64),
        y_lo: &|r| r.powi(l + 1),
        y_hi: &|r| r.powi(-l),
        row_factor: &|r| u.eval(r),
        col_factor: &|r| v.eval(r),
    };
    Ok(KernelOperator::from_kernel(
        space,
        &kernel,
        sector,
        symmetric,
        format!("b0_l{sector}"),
    ))
}

fn coords_of(op: &KernelOperator, nodal: &[f64]) -> DVector<f64> {
    op.space.to_coords(nodal)
}

/// Eigenvalue of `op` closest to `target`, by inverse iteration with the
/// fixed shift `target` on the mass-coordinate matrix. Deterministic:
/// all-ones start, Rayleigh quotient readout. A shift landing exactly on
/// an eigenvalue is nudged and retried.
pub fn eigen_near(op: &KernelOperator, target: f64) -> Result<EigenPair> {
    eigen_near_impl(op, target, &[])
}

/// Same iteration, kept orthogonal to previously found eigenvectors; for
/// symmetric operators this converges to the next-nearest eigenvalue.
pub fn eigen_near_deflated(
    op: &KernelOperator,
    target: f64,
    prior: &[&EigenPair],
) -> Result<EigenPair> {
    let coords: Vec<DVector<f64>> = prior.iter().map(|p| coords_of(op, &p.vector)).collect();
    eigen_near_impl(op, target, &coords)
}

fn eigen_near_impl(
    op: &KernelOperator,
    target: f64,
    deflate: &[DVector<f64>],
) -> Result<EigenPair> {
    let a = &op.matrix;
    let n = a.nrows();
    let scale = a.amax().max(target.abs());
    let tol = 1e-13 * scale;
    let factor = |s: f64| {
        let mut m = a.clone();
        for i in 0..n {
            m[(i, i)] -= s;
        }
        nalgebra::LU::new(m)
    };
    let mut shift = target;
    let mut lu = factor(shift);
    let mut x = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    project_out(&mut x, deflate);
    if x.norm() < 1e-8 {
        // the all-ones start happened to lie in the deflated span
        x = DVector::from_fn(n, |i, _| if i % 2 == 0 { 1.0 } else { -1.0 });
        project_out(&mut x, deflate);
    }
    x /= x.norm();

    let mut lambda;
    let mut residual = f64::INFINITY;
    let mut polish = 0usize;
    let mut nudges = 0usize;
    const MAX_IT: usize = 400;
    for it in 0..MAX_IT {
        let solved = lu.solve(&x).filter(|y| {
            let ny = y.norm();
            ny.is_finite() && ny > 0.0
        });
        let Some(mut y) = solved else {
            // the shift sits on an eigenvalue to the last bit; step off it
            nudges += 1;
            if nudges > 5 {
                break;
            }
            shift += 1e-9 * scale * nudges as f64;
            lu = factor(shift);
            continue;
        };
        project_out(&mut y, deflate);
        x = &y / y.norm();
        let ax = a * &x;
        lambda = x.dot(&ax);
        residual = (&ax - lambda * &x).norm();
        if residual <= tol {
            // a few extra rounds sharpen the vector (components in foreign
            // invariant subspaces keep shrinking every pass)
            polish += 1;
            if polish >= 3 {
                return Ok(EigenPair {
                    value: lambda,
                    vector: op.space.to_nodal(&x),
                    residual: residual / scale,
                });
            }
        } else {
            polish = 0;
            // a fixed shift contracts slowly when the target eigenvalue is
            // not the nearest-by-far one (deflated searches); re-center on
            // the Rayleigh estimate once the direction has settled
            if it % 25 == 24 {
                shift = lambda;
                lu = factor(shift);
            }
        }
    }
    Err(Error::NonConvergence { iterations: MAX_IT, residual: residual / scale })
}

fn project_out(x: &mut DVector<f64>, basis: &[DVector<f64>]) {
    for b in basis {
        let c = x.dot(b) / b.dot(b);
        *x -= c * b;
    }
}

/// Dominant eigenvalue by plain power iteration; sign read from the
/// Rayleigh quotient.
fn power_dominant(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut x = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut lambda = 0.0;
    for _ in 0..5000 {
        let y = a * &x;
        let ny = y.norm();
        if ny == 0.0 {
            return 0.0;
        }
        x = y / ny;
        let l = x.dot(&(a * &x));
        let done = (l - lambda).abs() <= 1e-11 * l.abs().max(1e-300);
        lambda = l;
        if done {
            break;
        }
    }
    lambda
}

/// Most negative eigenvalue: one power iteration for the dominant edge of
/// the spectrum, a second on the shifted matrix when that edge is positive.
fn most_negative(a: &DMatrix<f64>) -> f64 {
    let l1 = power_dominant(a);
    if l1 <= 0.0 {
        return l1;
    }
    let n = a.nrows();
    let mut shifted = a.clone();
    for i in 0..n {
        shifted[(i, i)] -= l1;
    }
    power_dominant(&shifted) + l1
}

/// Tune the coupling of a potential shape so that B₀ has eigenvalue −1
/// with a nondegenerate, non-orthogonal resonance. `gap_threshold` is the
/// minimal allowed distance of the next eigenvalue from −1.
pub fn tune_resonance(
    pot: &RadialPotential,
    grid: &RadialGrid,
    gap_threshold: f64,
) -> Result<ResonanceData> {
    let space = PanelSpace::new(grid.clone())?;
    let base_op = assemble_b0(space, pot, 0)?;
    let mu_est = most_negative(&base_op.matrix);
    if !(mu_est < -1e-12 * base_op.matrix.amax().max(1e-300)) {
        return Err(Error::NoResonance);
    }
    let mu = eigen_near(&base_op, mu_est)?.value;
    if !(mu < 0.0) {
        return Err(Error::NoResonance);
    }
    let theta_star = -1.0 / mu;

    let tuned = RadialPotential::new(
        pot.profile.clone(),
        pot.support,
        pot.coupling * theta_star,
    )?;
    let space = PanelSpace::new(grid.clone())?;
    let op = assemble_b0(space, &tuned, 0)?;
    let mut pair = eigen_near(&op, -1.0)?;
    let second = eigen_near_deflated(&op, -1.0, &[&pair])?;
    let gap = (second.value + 1.0).abs();
    if gap < gap_threshold {
        return Err(Error::DegenerateResonance { gap, threshold: gap_threshold });
    }

    // L²-normalize and orient so that ⟨v, φ⟩ ≥ 0
    let norm = op.space.norm(&pair.vector);
    pair.vector.iter_mut().for_each(|x| *x /= norm);
    let (_, v) = split_uv(&tuned);
    let v_samples = v.sample(&op.space.grid);
    let mut overlap = op.space.inner(&v_samples, &pair.vector);
    if overlap < 0.0 {
        pair.vector.iter_mut().for_each(|x| *x = -*x);
        overlap = -overlap;
    }
    let v_norm = op.space.norm(&v_samples);
    if overlap <= 1e-10 * v_norm {
        return Err(Error::OrthogonalResonance { overlap });
    }

    Ok(ResonanceData {
        theta_star,
        pair,
        overlap,
        gap,
        experimental: pot.sign_definite().is_none(),
        grid: grid.clone(),
    })
}

/// Point-interaction strength produced by the coupling slope λ of the
/// local scheme (1 + λε)/ε²: α = −λ / ⟨v, φ⟩².
pub fn coupling_to_alpha(lambda: f64, data: &ResonanceData) -> f64 {
    -lambda / (data.overlap * data.overlap)
}

/// The zero-energy solution ψ = (−Δ)^{-1} v φ evaluated pointwise, with
/// the two quantities that certify it: the tail constant ⟨v, φ⟩ (the law
/// 4πrψ(r) = ⟨v, φ⟩ must hold beyond the support) and the distributional
/// residual of (−Δ + V)ψ on a fine grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResonanceProfile {
    pub radii: Vec<f64>,
    pub psi: Vec<f64>,
    pub tail_constant: f64,
    /// max over requested radii beyond the support of
    /// |4πrψ(r) − tail_constant| / tail_constant
    pub tail_deviation: f64,
    /// max |−(rψ)''/r + Vψ| / max |Vψ| on the residual grid
    pub residual_defect: f64,
}

pub fn resonance_profile(
    data: &ResonanceData,
    tuned: &RadialPotential,
    radii: &[f64],
) -> Result<ResonanceProfile> {
    if radii.iter().any(|&r| !(r.is_finite() && r > 0.0)) {
        return Err(Error::InvalidParameter("profile radii must be positive".into()));
    }
    let space = PanelSpace::new(data.grid.clone())?;
    let (_, v) = split_uv(tuned);
    let kernel = SeparableKernel {
        scale: 1.0 / (4.0 * PI),
        y_lo: &|r| r,
        y_hi: &|_| 1.0,
        row_factor: &crate::operator::unit_factor,
        col_factor: &|r| v.eval(r),
    };
    let phi = &data.pair.vector;
    let psi_at = |r: f64| pointwise_apply(&space, &kernel, phi, r);

    let psi: Vec<f64> = radii.iter().map(|&r| psi_at(r)).collect();
    let a = tuned.support;
    let mut tail_deviation = 0.0f64;
    for (&r, &p) in radii.iter().zip(&psi) {
        if r > a * (1.0 + 1e-12) {
            let dev = (4.0 * PI * r * p - data.overlap).abs() / data.overlap;
            tail_deviation = tail_deviation.max(dev);
        }
    }

    // distributional residual on a uniform grid with a node exactly at the
    // support edge, where V jumps; the three stencils touching the edge
    // are skipped
    let h = a / 800.0;
    let jmax = (1.6 * a / h) as usize;
    let fine: Vec<f64> = (0..=jmax).map(|j| j as f64 * h).collect();
    let chi: Vec<f64> = fine
        .iter()
        .map(|&r| if r == 0.0 { 0.0 } else { r * psi_at(r) })
        .collect();
    let mut defect = 0.0f64;
    let mut scale = 0.0f64;
    for j in 1..jmax {
        let r = fine[j];
        if (r - a).abs() <= 1.5 * h {
            continue;
        }
        let d2 = (chi[j + 1] - 2.0 * chi[j] + chi[j - 1]) / (h * h);
        let vpsi = tuned.value(r) * chi[j] / r;
        defect = defect.max((-d2 / r + vpsi).abs());
        scale = scale.max(vpsi.abs());
    }
    Ok(ResonanceProfile {
        radii: radii.to_vec(),
        psi,
        tail_constant: data.overlap,
        tail_deviation,
        residual_defect: defect / scale.max(f64::MIN_POSITIVE),
    })
}

/// What extending the computational domain does to a tuned resonance:
/// nothing, certifiably. The eigenvalue is compared against −1 and the
/// eigenvector's components beyond the support against zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub extended_radius: f64,
    /// |μ_ext + 1|
    pub eigenvalue_drift: f64,
    /// max |φ_ext(r)| for r beyond the support, relative to max |φ_ext|
    pub exterior_max: f64,
}

pub fn verify_localization(
    data: &ResonanceData,
    tuned: &RadialPotential,
) -> Result<LocalizationReport> {
    let extended_radius = 4.0 * data.grid.r_max();
    let big = crate::core::extend_grid(&data.grid, extended_radius)?;
    let space = PanelSpace::new(big)?;
    let op = assemble_b0(space, tuned, 0)?;
    let pair = eigen_near(&op, -1.0)?;
    let peak = pair.vector.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut exterior = 0.0f64;
    for (&r, &x) in op.space.grid.nodes.iter().zip(&pair.vector) {
        if r > tuned.support * (1.0 + 1e-12) {
            exterior = exterior.max(x.abs());
        }
    }
    Ok(LocalizationReport {
        extended_radius,
        eigenvalue_drift: (pair.value + 1.0).abs(),
        exterior_max: exterior / peak,
    })
}
