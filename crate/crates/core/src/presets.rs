//! Named initial data.

use alloc::sync::Arc;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::{Boundary, Grid};
use crate::hydro::{PhysCoeffs, PressureLaw};
use crate::integrator::FluidState;
use crate::kinetics::OrientationField;
use crate::math;
use crate::sphere::SphereBasis;

/// 1D periodic colliding streams: `ρ₀ ≡ rho0`, `u₀ = −A sin(2πx/ℓ)`,
/// `η₀ ≡ eta0` and the isotropic `f₀ = η₀/(4π)`. The flow converges on the
/// periodic seam `x = 0 ≡ ℓ` and piles density up there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollidingStreams {
    pub cells: usize,
    /// Domain length `ℓ`.
    pub length: f64,
    pub rho0: f64,
    pub amplitude: f64,
    pub eta0: f64,
}

impl Default for CollidingStreams {
    fn default() -> Self {
        CollidingStreams {
            cells: 256,
            length: 7.5,
            rho0: 0.9,
            amplitude: 0.5,
            eta0: 0.1,
        }
    }
}

impl CollidingStreams {
    /// Coefficients of the γ-limit benchmark: `μ = λ = 0.3`, `D = D_τ = 1`.
    pub fn benchmark_coeffs() -> PhysCoeffs {
        PhysCoeffs {
            mu: 0.3,
            lambda: 0.3,
            diffusion: 1.0,
            rot_diffusion: 1.0,
        }
    }

    pub fn build(
        &self,
        basis: Arc<SphereBasis>,
        law: PressureLaw,
        coeffs: PhysCoeffs,
    ) -> Result<FluidState> {
        let grid = Grid::line(self.cells, self.length, Boundary::Periodic)?;
        colliding_streams(
            grid,
            self.rho0,
            self.amplitude,
            self.eta0,
            basis,
            law,
            coeffs,
        )
    }
}

/// The colliding-streams profile on any grid: `u = (−A sin(2πx/ℓ_x), 0)` with
/// uniform `ρ₀`, `η₀` and isotropic rods.
pub fn colliding_streams(
    grid: Grid,
    rho0: f64,
    amplitude: f64,
    eta0: f64,
    basis: Arc<SphereBasis>,
    law: PressureLaw,
    coeffs: PhysCoeffs,
) -> Result<FluidState> {
    check_mean_density(rho0)?;
    let k = 2.0 * PI / grid.lengths()[0];
    let rho = ScalarField::constant(grid, rho0);
    let u = VectorField::from_fn(grid, |x| [-amplitude * math::sin(k * x[0]), 0.0]);
    let eta = ScalarField::constant(grid, eta0);
    let f = OrientationField::isotropic(&eta, basis);
    FluidState::new(rho, u, eta, f, 0.0, law, coeffs)
}

fn check_mean_density(rho0: f64) -> Result<()> {
    if rho0 > 0.0 && rho0 < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "rho0",
            reason: "mean density must lie in (0, 1)",
        })
    }
}

/// Spatially uniform rest state with isotropic rods.
pub fn uniform(
    grid: Grid,
    rho: f64,
    eta: f64,
    basis: Arc<SphereBasis>,
    law: PressureLaw,
    coeffs: PhysCoeffs,
) -> Result<FluidState> {
    let eta = ScalarField::constant(grid, eta);
    let f = OrientationField::isotropic(&eta, basis);
    FluidState::new(
        ScalarField::constant(grid, rho),
        VectorField::zeros(grid),
        eta,
        f,
        0.0,
        law,
        coeffs,
    )
}

/// Smooth, fully coupled data on any grid: modulated density, a shearing and
/// compressing velocity, and rods aligned toward `e₃` by a position-dependent
/// amount. `η₀` is the sphere integral of `f₀`. Velocity and `f` vanish near
/// walls only approximately, so prefer periodic grids for convergence studies.
pub fn smooth(
    grid: Grid,
    basis: Arc<SphereBasis>,
    law: PressureLaw,
    coeffs: PhysCoeffs,
) -> Result<FluidState> {
    let lx = grid.lengths()[0];
    let ly = if grid.dim() == 2 {
        grid.lengths()[1]
    } else {
        1.0
    };
    let two_d = grid.dim() == 2;
    let kx = 2.0 * PI / lx;
    let ky = 2.0 * PI / ly;
    let rho = ScalarField::from_fn(grid, |x| {
        let y = if two_d { math::cos(ky * x[1]) } else { 1.0 };
        0.7 + 0.15 * math::sin(kx * x[0]) * y
    });
    let u = VectorField::from_fn(grid, |x| {
        if two_d {
            [
                0.2 * math::sin(kx * x[0]) * math::cos(ky * x[1]),
                0.1 * math::cos(kx * x[0]) * math::sin(ky * x[1]),
            ]
        } else {
            [0.2 * math::sin(kx * x[0]), 0.0]
        }
    });
    let eta_of = |x: [f64; 2]| 0.3 + 0.1 * math::cos(kx * x[0]);
    let b_of = |x: [f64; 2]| 0.2 * math::sin(kx * x[0]);
    let f = OrientationField::from_fn(grid, basis, |x, tau| {
        eta_of(x) / (4.0 * PI) * (1.0 + b_of(x) * (3.0 * tau[2] * tau[2] - 1.0))
    });
    let eta = crate::kinetics::eta_moment(&f);
    FluidState::new(rho, u, eta, f, 0.0, law, coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetics::eta_moment;

    #[test]
    fn colliding_streams_shape() {
        let basis = Arc::new(SphereBasis::new(3).unwrap());
        let s = CollidingStreams {
            cells: 64,
            ..Default::default()
        }
        .build(basis, PressureLaw::new(5.0).unwrap(), PhysCoeffs::default())
        .unwrap();
        assert_eq!(s.grid().len(), 64);
        assert!((s.mass() - 0.9 * 7.5).abs() < 1e-12);
        // streams leave the midpoint and meet at the seam
        assert!(s.u.get(10, 0) < 0.0 && s.u.get(50, 0) > 0.0);
        assert!((s.f.rod_mass() - 0.1 * 7.5).abs() < 1e-12);
    }

    #[test]
    fn mean_density_must_be_subunit() {
        let basis = Arc::new(SphereBasis::new(2).unwrap());
        let bad = CollidingStreams {
            rho0: 1.0,
            ..Default::default()
        };
        assert!(bad
            .build(basis, PressureLaw::new(5.0).unwrap(), PhysCoeffs::default())
            .is_err());
    }

    #[test]
    fn smooth_data_is_moment_consistent() {
        let grid = Grid::rect(8, 8, 1.0, 1.0, Boundary::Periodic).unwrap();
        let basis = Arc::new(SphereBasis::new(4).unwrap());
        let s = smooth(
            grid,
            basis,
            PressureLaw::new(2.0).unwrap(),
            PhysCoeffs::default(),
        )
        .unwrap();
        let eta = eta_moment(&s.f);
        for (k, (a, b)) in eta.values().iter().zip(s.eta.values()).enumerate() {
            let x = grid.center(k);
            let exact = 0.3 + 0.1 * (2.0 * PI * x[0]).cos();
            assert!((a - b).abs() < 1e-15);
            assert!((a - exact).abs() < 1e-12);
        }
    }
}
