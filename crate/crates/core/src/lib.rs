//! Numerical core for the compressible Doi model of rod-like polymer
//! suspensions: a compressible Navier–Stokes system coupled to a
//! Fokker–Planck equation for the rod orientation distribution on the unit
//! sphere, with a stiff barotropic pressure `ρ^γ`.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs; IO, configuration files and thread pools live in
//! the companion `doifbp` crate.
//!
//! Module map:
//!
//! * [`grid`], [`field`], [`ops`]: uniform box grids, cell fields and the
//!   centered finite-difference operators.
//! * [`sphere`]: Gauss–Legendre × uniform-φ quadrature on S² and the real
//!   spherical-harmonic transform.
//! * [`kinetics`]: the orientation Fokker–Planck operator and its moments
//!   (number density, kinetic stress, entropy, Fisher information).
//! * [`hydro`]: pressure laws, upwind transport, the momentum update and the
//!   time-step restriction.
//! * [`integrator`]: the split time stepper, the energy ledger and the
//!   renormalized-continuity residual.
//! * [`limit`]: congestion-limit diagnostics and the γ sweep.
//! * [`presets`]: named initial data.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod error;
pub mod field;
pub mod grid;
pub mod hydro;
pub mod integrator;
pub mod kinetics;
pub mod limit;
pub(crate) mod math;
pub mod ops;
pub mod presets;
pub mod sphere;

pub use error::{Error, Result};
pub use field::{ScalarField, VectorField};
pub use grid::{Boundary, Grid};
pub use hydro::{PhysCoeffs, PressureLaw};
pub use integrator::{DiagnosticsRecord, FluidState, Substep};
pub use kinetics::{KineticMoments, OrientationField};
pub use limit::{SweepResult, SweepRow};
pub use sphere::SphereBasis;
