//! Point spectrum of the point interaction. On free space an attractive
//! strength binds exactly one state at E = −(4πα)²; on a ball the boundary
//! shifts that level by an amount that dies off exponentially in R, and a
//! repulsive or switched-off interaction binds nothing below the Dirichlet
//! ground state.

use std::f64::consts::PI;

use deltalab::core::{BallDomain, BoundaryCondition, PointInteractionStrength, Space};
use deltalab::resolvent::pi_eigenvalue;

fn show(medium: &Space, alpha: PointInteractionStrength, e_max: f64) -> deltalab::Result<String> {
    Ok(match pi_eigenvalue(medium, alpha, e_max)? {
        Some(e) => format!("{e:+.12}"),
        None => "none".to_string(),
    })
}

fn main() -> deltalab::Result<()> {
    println!("free space, E = -(4 pi alpha)^2 for attractive strengths");
    println!("{:>10} {:>18} {:>18}", "alpha", "computed", "closed form");
    for alpha in [-0.05, -0.25 / PI, -0.5] {
        let e = show(&Space::Free, PointInteractionStrength::Finite(alpha), 100.0)?;
        let exact = -(4.0 * PI * alpha).powi(2);
        println!("{alpha:>10.6} {e:>18} {exact:>+18.12}");
    }
    for (label, alpha) in [
        ("0.3", PointInteractionStrength::Finite(0.3)),
        ("0", PointInteractionStrength::Finite(0.0)),
        ("infinite", PointInteractionStrength::Infinite),
    ] {
        let e = show(&Space::Free, alpha, 100.0)?;
        println!("{label:>10} {e:>18}");
    }

    // the Dirichlet boundary pushes the level up, less and less as the
    // ball grows
    let alpha = PointInteractionStrength::Finite(-0.25 / PI);
    println!();
    println!("dirichlet ball, alpha = -1/(4 pi), free level at -1");
    println!("{:>6} {:>18} {:>14}", "R", "eigenvalue", "shift");
    for radius in [2.0, 3.0, 5.0, 8.0, 10.0] {
        let medium = Space::ball(BallDomain::new(radius, BoundaryCondition::Dirichlet)?);
        let e = pi_eigenvalue(&medium, alpha, 50.0)?.expect("bound state");
        println!("{radius:>6} {e:>+18.12} {:>14.3e}", e + 1.0);
    }

    // boundary conditions pull in opposite directions at fixed R
    println!();
    println!("R = 3 across boundary conditions");
    for (name, bc) in [
        ("dirichlet", BoundaryCondition::Dirichlet),
        ("robin b=1.0", BoundaryCondition::Robin { b: 1.0 }),
        ("neumann", BoundaryCondition::Neumann),
    ] {
        let medium = Space::ball(BallDomain::new(3.0, bc)?);
        let e = pi_eigenvalue(&medium, alpha, 50.0)?.expect("bound state");
        println!("{name:<12} {e:+.12}");
    }
    Ok(())
}
