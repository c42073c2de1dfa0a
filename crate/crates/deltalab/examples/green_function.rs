//! The interaction profile 𝒢_z across media. On free space it is the
//! singular kernel Γ_z(r) = e^{-κr}/(4πr); a ball adds a regular correction
//! h_z that enforces the boundary condition, and its value at the origin is
//! exactly what shifts the point-interaction coefficient c_α.

use deltalab::core::{BallDomain, BoundaryCondition, Space};
use deltalab::greens::{boundary_residual, c_alpha, correction_l0, gamma, SpectralPoint};
use deltalab::resolvent::interaction_profile;

fn main() -> deltalab::Result<()> {
    let z = SpectralPoint::new(-1.0)?;
    let radii = [0.02, 0.1, 0.5, 1.0, 2.0, 4.0];
    let media = [
        ("free", Space::Free),
        ("dirichlet R=5", Space::ball(BallDomain::new(5.0, BoundaryCondition::Dirichlet)?)),
        ("neumann R=5", Space::ball(BallDomain::new(5.0, BoundaryCondition::Neumann)?)),
        ("robin b=1.3 R=5", Space::ball(BallDomain::new(5.0, BoundaryCondition::Robin { b: 1.3 })?)),
    ];

    print!("{:<16}", "r");
    for r in radii {
        print!(" {r:>10}");
    }
    println!();
    for (name, medium) in &media {
        let profile = interaction_profile(medium, &z, &radii)?;
        print!("{name:<16}");
        for v in profile {
            print!(" {v:>10.6}");
        }
        println!();
    }
    print!("{:<16}", "free closed form");
    for r in radii {
        print!(" {:>10.6}", gamma(&z, r));
    }
    println!();

    // the boundary admixture decays with the ball radius: far boundaries
    // look free
    println!();
    println!("{:<10} {:>14} {:>14}", "R", "h_z(0)", "c_alpha shift");
    let alpha = 0.2;
    let free_c = c_alpha(alpha, &z, &correction_l0(&Space::Free, &z)?)?;
    for radius in [2.0, 3.0, 5.0, 8.0] {
        let medium = Space::ball(BallDomain::new(radius, BoundaryCondition::Dirichlet)?);
        let corr = correction_l0(&medium, &z)?;
        let c = c_alpha(alpha, &z, &corr)?;
        println!("{radius:<10} {:>14.6e} {:>14.6e}", corr.at_zero(), c - free_c);
    }

    // the outer Green factor satisfies the boundary condition to rounding
    println!();
    println!("boundary residuals at R = 5, sectors 0..3");
    for (name, bc) in [
        ("dirichlet", BoundaryCondition::Dirichlet),
        ("neumann", BoundaryCondition::Neumann),
        ("robin b=1.3", BoundaryCondition::Robin { b: 1.3 }),
    ] {
        let domain = BallDomain::new(5.0, bc)?;
        print!("{name:<12}");
        for sector in 0..4 {
            print!(" {:>10.2e}", boundary_residual(&domain, &z, sector)?);
        }
        println!();
    }
    Ok(())
}
