//! Lie-split time stepping of the coupled system, the energy ledger and the
//! renormalized-continuity residual.
//!
//! One step runs, in this fixed order:
//!
//! 1. density transport `ρ_t + div(ρu) = 0`;
//! 2. particle density `η_t + div(ηu) = D Δη`;
//! 3. the Fokker–Planck step for `f` (spatial advection, sphere drift,
//!    rotational and translational diffusion, all explicit);
//! 4. the momentum step, with pressure and stress evaluated from the fields
//!    produced by 1–3.
//!
//! Every substep uses the velocity at the start of the step.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::hydro::{
    cfl_dt, face_velocities, momentum_step_with, transport_step, upwind_divergence, PhysCoeffs,
    PressureLaw, ViscousSolver, RHO_FLOOR,
};
use crate::kinetics::{self, entropy_and_fisher, fp_rhs, OrientationField, POSITIVITY_TOL};
use crate::ops::{self, Ghost};

/// The substeps of one coupled step, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Substep {
    DensityTransport,
    ParticleTransport,
    FokkerPlanck,
    Momentum,
}

impl fmt::Display for Substep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Substep::DensityTransport => "density transport",
            Substep::ParticleTransport => "particle-density transport",
            Substep::FokkerPlanck => "Fokker-Planck",
            Substep::Momentum => "momentum",
        })
    }
}

/// The unknowns `(ρ, u, η, f)` at one time level, with the pressure law and
/// coefficients that govern their evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidState {
    pub rho: ScalarField,
    pub u: VectorField,
    pub eta: ScalarField,
    pub f: OrientationField,
    pub t: f64,
    pub law: PressureLaw,
    pub coeffs: PhysCoeffs,
}

impl FluidState {
    /// Checks that all fields share one grid, `ρ, η ≥ 0`, and that `f` passes
    /// its positivity tolerance.
    pub fn new(
        rho: ScalarField,
        u: VectorField,
        eta: ScalarField,
        f: OrientationField,
        t: f64,
        law: PressureLaw,
        coeffs: PhysCoeffs,
    ) -> Result<Self> {
        let s = FluidState {
            rho,
            u,
            eta,
            f,
            t,
            law,
            coeffs,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.rho.grid();
        self.u.same_grid(grid)?;
        self.eta.same_grid(grid)?;
        self.f.compatible(grid)?;
        self.rho.ensure_nonnegative("density")?;
        self.eta.ensure_nonnegative("particle density")?;
        self.coeffs.validate()?;
        if !self.t.is_finite() {
            return Err(Error::NonFinite { what: "time" });
        }
        self.f.check_positivity(POSITIVITY_TOL)
    }

    pub fn grid(&self) -> &crate::grid::Grid {
        self.rho.grid()
    }

    /// Same state under a different pressure law.
    pub fn with_law(mut self, law: PressureLaw) -> Self {
        self.law = law;
        self
    }

    /// `∫ ρ dx`.
    pub fn mass(&self) -> f64 {
        self.rho.integral()
    }

    /// `∫ ρ u dx`, one entry per axis.
    pub fn momentum(&self) -> Vec<f64> {
        let d = self.grid().dim();
        let vol = self.grid().cell_volume();
        let mut m = vec![0.0; d];
        for (k, r) in self.rho.values().iter().enumerate() {
            for (a, ma) in m.iter_mut().enumerate() {
                *ma += r * self.u.get(k, a) * vol;
            }
        }
        m
    }
}

/// Energy ledger entry. The dissipation rates are the integrands of the
/// energy–entropy inequality weighted by the physical coefficients:
/// `4 D_τ ∫∫|∇_τ√f|²`, `4 D ∫∫|∇√f|²`, `μ ∫|∇u|²`, `λ ∫|div u|²` and
/// `2 D ∫|∇η|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub e_total: f64,
    /// `∫ ρ|u|²/2`
    pub e_kinetic: f64,
    /// `∫ ρ^γ/(γ − 1)`
    pub e_pressure: f64,
    /// `∫ η²`
    pub e_eta: f64,
    /// `∫ ψ`
    pub e_entropy: f64,
    pub diss_fisher_tau: f64,
    pub diss_fisher_x: f64,
    pub diss_grad_u: f64,
    pub diss_div_u: f64,
    pub diss_grad_eta: f64,
    pub mass: f64,
    pub rod_mass: f64,
}

impl DiagnosticsRecord {
    /// Total dissipation rate.
    pub fn dissipation(&self) -> f64 {
        self.diss_fisher_tau
            + self.diss_fisher_x
            + self.diss_grad_u
            + self.diss_div_u
            + self.diss_grad_eta
    }
}

/// Evaluates every term of the energy ledger on `state`.
pub fn energy_total(state: &FluidState) -> Result<DiagnosticsRecord> {
    let grid = *state.grid();
    let vol = grid.cell_volume();
    let d = grid.dim();
    let c = state.coeffs;

    let mut e_kinetic = 0.0;
    let mut e_pressure = 0.0;
    for (k, &r) in state.rho.values().iter().enumerate() {
        let u2: f64 = (0..d).map(|a| state.u.get(k, a) * state.u.get(k, a)).sum();
        e_kinetic += 0.5 * r * u2;
        e_pressure += state.law.potential(r);
    }
    e_kinetic *= vol;
    e_pressure *= vol;
    let e_eta = state.eta.values().iter().map(|e| e * e).sum::<f64>() * vol;

    let ef = entropy_and_fisher(&state.f)?;
    let e_entropy = ef.psi.integral();

    let grads = kinetics::velocity_gradient(&state.u);
    let grad_u2: f64 = grads.iter().flatten().flatten().map(|v| v * v).sum::<f64>() * vol;
    let div_u2: f64 = grads
        .iter()
        .map(|g| {
            let tr = g[0][0] + g[1][1] + g[2][2];
            tr * tr
        })
        .sum::<f64>()
        * vol;
    let grad_eta = ops::grad_with(&state.eta, Ghost::ZERO);
    let grad_eta2 = grad_eta.values().iter().map(|v| v * v).sum::<f64>() * vol;

    Ok(DiagnosticsRecord {
        t: state.t,
        e_total: e_kinetic + e_pressure + e_eta + e_entropy,
        e_kinetic,
        e_pressure,
        e_eta,
        e_entropy,
        diss_fisher_tau: 4.0 * c.rot_diffusion * ef.fisher_tau,
        diss_fisher_x: 4.0 * c.diffusion * ef.fisher_x,
        diss_grad_u: c.mu * grad_u2,
        diss_div_u: c.lambda * div_u2,
        diss_grad_eta: 2.0 * c.diffusion * grad_eta2,
        mass: state.mass(),
        rod_mass: state.f.rod_mass(),
    })
}

/// Settings of the coupled stepper.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stepper {
    /// CFL safety factor used by [`Stepper::run`].
    pub safety: f64,
    /// Nodal positivity tolerance enforced on `f` after each step.
    pub positivity_tol: f64,
    pub viscous: ViscousSolver,
    /// Skip the momentum substep and keep `u` as given.
    pub freeze_velocity: bool,
}

impl Default for Stepper {
    fn default() -> Self {
        Stepper {
            safety: 0.5,
            positivity_tol: POSITIVITY_TOL,
            viscous: ViscousSolver::default(),
            freeze_velocity: false,
        }
    }
}

/// Records and final state of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub records: Vec<DiagnosticsRecord>,
    pub state: FluidState,
    pub steps: usize,
}

fn at(substep: Substep, t: f64) -> impl FnOnce(Error) -> Error {
    move |e| Error::Step {
        substep,
        t,
        source: Box::new(e),
    }
}

impl Stepper {
    /// Advances `state` by `dt`, which must not exceed the unit-safety CFL
    /// bound.
    pub fn step(&self, state: &FluidState, dt: f64) -> Result<FluidState> {
        if !(dt >= 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "dt",
                reason: "time step must be finite and nonnegative",
            });
        }
        let limit = cfl_dt(state, state.coeffs, state.law, 1.0)?;
        if dt > limit * (1.0 + 1e-12) {
            return Err(Error::CflViolation { dt, limit });
        }
        let t = state.t;
        let c = state.coeffs;

        let rho = transport_step(&state.rho, &state.u, dt, 0.0)
            .map_err(at(Substep::DensityTransport, t))?;
        let eta = transport_step(&state.eta, &state.u, dt, c.diffusion)
            .map_err(at(Substep::ParticleTransport, t))?;

        let mut f = fp_rhs(&state.f, &state.u, c.diffusion, c.rot_diffusion)
            .map_err(at(Substep::FokkerPlanck, t))?;
        for (new, old) in f.coeffs_mut().iter_mut().zip(state.f.coeffs()) {
            *new = old + dt * *new;
        }
        if f.coeffs().iter().any(|v| !v.is_finite()) {
            return Err(at(Substep::FokkerPlanck, t)(Error::NonFinite {
                what: "orientation distribution",
            }));
        }
        f.check_positivity(self.positivity_tol)
            .map_err(at(Substep::FokkerPlanck, t))?;

        let u = if self.freeze_velocity {
            state.u.clone()
        } else {
            // carry the old momentum onto the new density
            let d = state.grid().dim();
            let mut carried = state.u.clone();
            for (k, (&r_old, &r_new)) in state.rho.values().iter().zip(rho.values()).enumerate() {
                for a in 0..d {
                    let v = if r_new >= RHO_FLOOR {
                        r_old * state.u.get(k, a) / r_new
                    } else {
                        0.0
                    };
                    carried.set(k, a, v);
                }
            }
            let mid = FluidState {
                rho: rho.clone(),
                u: carried,
                eta: eta.clone(),
                f: f.clone(),
                t,
                law: state.law,
                coeffs: c,
            };
            momentum_step_with(&mid, dt, c, state.law, self.viscous)
                .map_err(at(Substep::Momentum, t))?
        };

        Ok(FluidState {
            rho,
            u,
            eta,
            f,
            t: t + dt,
            law: state.law,
            coeffs: c,
        })
    }

    /// Step size the run loop would take from `state`.
    pub fn stable_dt(&self, state: &FluidState) -> Result<f64> {
        cfl_dt(state, state.coeffs, state.law, self.safety)
    }

    /// Integrates to `t_final`, recording diagnostics at the start, every
    /// `record_every` steps and at `t_final`.
    pub fn run(
        &self,
        initial: &FluidState,
        t_final: f64,
        record_every: usize,
    ) -> Result<RunOutput> {
        self.run_observed(initial, t_final, record_every, |_, _| {})
    }

    /// Like [`Stepper::run`]; `observe(state, dt)` sees every new state and the
    /// step that produced it.
    pub fn run_observed(
        &self,
        initial: &FluidState,
        t_final: f64,
        record_every: usize,
        mut observe: impl FnMut(&FluidState, f64),
    ) -> Result<RunOutput> {
        if !(t_final >= initial.t) {
            return Err(Error::InvalidParameter {
                name: "t_final",
                reason: "final time must not precede the initial time",
            });
        }
        let every = record_every.max(1);
        let mut records = vec![energy_total(initial)?];
        let mut state = initial.clone();
        let mut steps = 0usize;
        while state.t < t_final {
            let mut dt = self.stable_dt(&state)?;
            let last = state.t + dt >= t_final;
            if last {
                dt = t_final - state.t;
            }
            let mut next = self.step(&state, dt)?;
            if last {
                next.t = t_final;
            }
            state = next;
            steps += 1;
            observe(&state, dt);
            if steps.is_multiple_of(every) || last {
                records.push(energy_total(&state).map_err(at(Substep::FokkerPlanck, state.t))?);
            }
        }
        Ok(RunOutput {
            records,
            state,
            steps,
        })
    }
}

/// One step with default settings.
pub fn step(state: &FluidState, dt: f64) -> Result<FluidState> {
    Stepper::default().step(state, dt)
}

/// Runs with default settings.
pub fn run(initial: &FluidState, t_final: f64, record_every: usize) -> Result<RunOutput> {
    Stepper::default().run(initial, t_final, record_every)
}

/// L¹ norm of the discrete residual of
///
/// `∂t b(ρ) + div(b(ρ) u) + (b'(ρ) ρ − b(ρ)) div u = 0`
///
/// between two consecutive states, using the upwind flux and face divergence
/// of the transport scheme with the velocity of `prev`. For `b(z) = z` this is
/// the continuity residual of the scheme itself.
pub fn renormalized_residual(
    prev: &FluidState,
    next: &FluidState,
    b: impl Fn(f64) -> f64,
    b_prime: impl Fn(f64) -> f64,
) -> Result<f64> {
    let grid = *prev.grid();
    next.rho.same_grid(&grid)?;
    let dt = next.t - prev.t;
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter {
            name: "states",
            reason: "states must be consecutive with increasing time",
        });
    }
    let n = grid.len();
    let d = grid.dim();
    let faces = face_velocities(&prev.u);
    let b0: Vec<f64> = prev.rho.values().iter().map(|&r| b(r)).collect();
    let mut flux_div = vec![0.0; n];
    upwind_divergence(&grid, &faces, &b0, 1, &mut flux_div);

    let mut total = 0.0;
    for k in 0..n {
        let mut div_u = 0.0;
        for a in 0..d {
            let fwd = faces[k * d + a];
            let bwd = grid.neighbor(k, a, false).map_or(0.0, |q| faces[q * d + a]);
            div_u += (fwd - bwd) / grid.spacing(a);
        }
        let r0 = prev.rho.values()[k];
        let r1 = next.rho.values()[k];
        let res = (b(r1) - b0[k]) / dt + flux_div[k] + (b_prime(r0) * r0 - b0[k]) * div_u;
        total += crate::math::abs(res);
    }
    Ok(total * grid.cell_volume())
}
