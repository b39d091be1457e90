//! Pressure laws, conservative transport and the momentum update.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;
use crate::integrator::FluidState;
use crate::kinetics::{add_laplacian_multi, stress_moment, velocity_gradient};
use crate::math;
use crate::ops::{self, Ghost};

/// Densities below this are treated as vacuum: the velocity there is zero.
pub const RHO_FLOOR: f64 = 1e-10;

/// Barotropic fluid pressure `π = ρ^γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureLaw {
    gamma: f64,
}

impl PressureLaw {
    /// `gamma` must exceed 3/2.
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 1.5 && gamma.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: "gamma must exceed 3/2",
            });
        }
        Ok(PressureLaw { gamma })
    }

    #[inline]
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `ρ^γ` as `exp(γ ln ρ)`, with `0^γ = 0`.
    #[inline]
    pub fn pressure(&self, rho: f64) -> f64 {
        if rho <= 0.0 {
            0.0
        } else {
            math::exp(self.gamma * math::ln(rho))
        }
    }

    /// Pressure potential `ρ^γ / (γ − 1)`.
    #[inline]
    pub fn potential(&self, rho: f64) -> f64 {
        self.pressure(rho) / (self.gamma - 1.0)
    }
}

/// Viscosities and diffusivities. All default to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysCoeffs {
    pub mu: f64,
    pub lambda: f64,
    /// Translational diffusivity of `f` and `η`.
    pub diffusion: f64,
    /// Rotational diffusivity of `f`.
    pub rot_diffusion: f64,
}

impl Default for PhysCoeffs {
    fn default() -> Self {
        PhysCoeffs {
            mu: 1.0,
            lambda: 1.0,
            diffusion: 1.0,
            rot_diffusion: 1.0,
        }
    }
}

impl PhysCoeffs {
    pub fn new(mu: f64, lambda: f64, diffusion: f64, rot_diffusion: f64) -> Result<Self> {
        let c = PhysCoeffs {
            mu,
            lambda,
            diffusion,
            rot_diffusion,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let check = |v: f64, name| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: "coefficient must be strictly positive",
                })
            }
        };
        check(self.mu, "mu")?;
        check(self.lambda, "lambda")?;
        check(self.diffusion, "diffusion")?;
        check(self.rot_diffusion, "rot_diffusion")
    }
}

/// `π = ρ^γ` pointwise.
pub fn fluid_pressure(rho: &ScalarField, law: PressureLaw) -> Result<ScalarField> {
    rho.ensure_nonnegative("density")?;
    Ok(rho.map(|r| law.pressure(r)))
}

/// `P = π + η + η²` pointwise.
pub fn total_pressure(pi: &ScalarField, eta: &ScalarField) -> Result<ScalarField> {
    pi.same_grid(eta.grid())?;
    eta.ensure_nonnegative("particle density")?;
    let vals = pi
        .values()
        .iter()
        .zip(eta.values())
        .map(|(p, e)| p + e + e * e)
        .collect();
    ScalarField::new(*pi.grid(), vals)
}

/// Face-normal velocities. Entry `k * dim + a` is the velocity on the face
/// between cell `k` and its forward neighbor along `a`: the average of the two
/// cell values, or exactly zero on a wall.
pub(crate) fn face_velocities(u: &VectorField) -> Vec<f64> {
    let grid = *u.grid();
    let d = grid.dim();
    let mut faces = vec![0.0; grid.len() * d];
    for k in 0..grid.len() {
        for a in 0..d {
            if let Some(n) = grid.neighbor(k, a, true) {
                faces[k * d + a] = 0.5 * (u.get(k, a) + u.get(n, a));
            }
        }
    }
    faces
}

/// Writes the upwind flux divergence `div(s u)` of each interleaved
/// component into `out` (overwriting).
pub(crate) fn upwind_divergence(
    grid: &Grid,
    faces: &[f64],
    values: &[f64],
    ncomp: usize,
    out: &mut [f64],
) {
    let d = grid.dim();
    out.iter_mut().for_each(|v| *v = 0.0);
    for k in 0..grid.len() {
        for a in 0..d {
            let vel = faces[k * d + a];
            if vel == 0.0 {
                continue;
            }
            let Some(n) = grid.neighbor(k, a, true) else {
                continue;
            };
            let inv_h = 1.0 / grid.spacing(a);
            let src = if vel > 0.0 { k } else { n };
            for c in 0..ncomp {
                let flux = vel * values[src * ncomp + c] * inv_h;
                out[k * ncomp + c] += flux;
                out[n * ncomp + c] -= flux;
            }
        }
    }
}

/// Largest `Σ_a |face velocity| / h_a` over cells.
fn advective_rate(grid: &Grid, faces: &[f64]) -> f64 {
    let d = grid.dim();
    let mut worst: f64 = 0.0;
    for k in 0..grid.len() {
        let mut r = 0.0;
        for a in 0..d {
            let fwd = math::abs(faces[k * d + a]);
            let bwd = grid
                .neighbor(k, a, false)
                .map_or(0.0, |n| math::abs(faces[n * d + a]));
            r += f64::max(fwd, bwd) / grid.spacing(a);
        }
        worst = worst.max(r);
    }
    worst
}

/// One explicit step of `s_t + div(s u) = diffusivity · Δs`: first-order
/// upwind fluxes plus centered diffusion (zero ghosts on walls).
///
/// Mass is conserved exactly on periodic grids when `diffusivity = 0`, and on
/// walls the advective flux vanishes. The update is a convex combination of
/// neighboring values, hence positivity preserving, when
/// `dt · Σ_a (|u_a|/h_a + 2·diffusivity/h_a²) ≤ 1`.
pub fn transport_step(
    s: &ScalarField,
    u: &VectorField,
    dt: f64,
    diffusivity: f64,
) -> Result<ScalarField> {
    s.same_grid(u.grid())?;
    s.ensure_nonnegative("transported density")?;
    if !(dt >= 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: "time step must be finite and nonnegative",
        });
    }
    let grid = *s.grid();
    let faces = face_velocities(u);
    let rate = advective_rate(&grid, &faces);
    if dt * rate > 1.0 + 1e-12 {
        return Err(Error::CflViolation {
            dt,
            limit: 1.0 / rate,
        });
    }
    let mut div = vec![0.0; grid.len()];
    upwind_divergence(&grid, &faces, s.values(), 1, &mut div);
    let mut next: Vec<f64> = s
        .values()
        .iter()
        .zip(&div)
        .map(|(v, dv)| v - dt * dv)
        .collect();
    if diffusivity != 0.0 {
        let mut lap = vec![0.0; grid.len()];
        add_laplacian_multi(&grid, s.values(), 1, dt * diffusivity, &mut lap);
        for (n, l) in next.iter_mut().zip(&lap) {
            *n += l;
        }
    }
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "transport" });
    }
    ScalarField::new(grid, next)
}

/// Conjugate-gradient settings for the implicit viscous solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViscousSolver {
    /// Relative residual target `‖r‖ / ‖b‖`.
    pub tol: f64,
    /// Iteration cap; `0` picks `20 · unknowns + 100`.
    pub max_iter: usize,
}

impl Default for ViscousSolver {
    fn default() -> Self {
        ViscousSolver {
            tol: 1e-13,
            max_iter: 0,
        }
    }
}

/// Advances the velocity by one step of
///
/// `∂t(ρu) + div(ρu⊗u) − μΔu − λ∇div u + ∇(π + η + η²) = div σ`.
///
/// The momentum `m = ρ u` of `state` is advected with upwind fluxes and pushed
/// by the centered pressure gradient and stress divergence (explicit), then
/// `(ρ − dt(μΔ + λ∇div)) u = m*` is solved by conjugate gradients. `state`
/// carries the density the new velocity lives on; vacuum cells get `u = 0`.
pub fn momentum_step(
    state: &FluidState,
    dt: f64,
    coeffs: PhysCoeffs,
    law: PressureLaw,
) -> Result<VectorField> {
    momentum_step_with(state, dt, coeffs, law, ViscousSolver::default())
}

pub fn momentum_step_with(
    state: &FluidState,
    dt: f64,
    coeffs: PhysCoeffs,
    law: PressureLaw,
    solver: ViscousSolver,
) -> Result<VectorField> {
    let grid = *state.rho.grid();
    let d = grid.dim();
    let n = grid.len();
    let rho = state.rho.values();

    let mut m: Vec<f64> = (0..n * d)
        .map(|i| rho[i / d] * state.u.values()[i])
        .collect();

    let faces = face_velocities(&state.u);
    let mut adv = vec![0.0; n * d];
    upwind_divergence(&grid, &faces, &m, d, &mut adv);

    let pi = fluid_pressure(&state.rho, law)?;
    let p_total = total_pressure(&pi, &state.eta)?;
    let grad_p = ops::grad_with(&p_total, Ghost::Mirror);

    let sigma = stress_moment(&state.f);
    let mut div_sigma = vec![0.0; n * d];
    for k in 0..n {
        for j in 0..d {
            let h2 = 2.0 * grid.spacing(j);
            let up = grid.neighbor(k, j, true);
            let dn = grid.neighbor(k, j, false);
            for i in 0..d {
                let su = up.map_or(0.0, |q| sigma[q][i][j]);
                let sd = dn.map_or(0.0, |q| sigma[q][i][j]);
                div_sigma[k * d + i] += (su - sd) / h2;
            }
        }
    }

    for i in 0..n * d {
        m[i] += dt * (-adv[i] - grad_p.values()[i] + div_sigma[i]);
    }

    let active: Vec<bool> = rho.iter().map(|&r| r >= RHO_FLOOR).collect();
    let mut b = m;
    let mut x = vec![0.0; n * d];
    for k in 0..n {
        for a in 0..d {
            if active[k] {
                x[k * d + a] = b[k * d + a] / rho[k];
            } else {
                b[k * d + a] = 0.0;
            }
        }
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "momentum" });
    }

    let op = ViscousOperator {
        grid,
        rho,
        active: &active,
        mu_dt: coeffs.mu * dt,
        lambda_dt: coeffs.lambda * dt,
    };
    conjugate_gradient(&op, &b, &mut x, solver)?;
    VectorField::new(grid, x)
}

struct ViscousOperator<'a> {
    grid: Grid,
    rho: &'a [f64],
    active: &'a [bool],
    mu_dt: f64,
    lambda_dt: f64,
}

impl ViscousOperator<'_> {
    // y = (ρ − dt μ Δ − dt λ ∇div) x on active cells, identity elsewhere.
    // Zero ghosts make ∇ = −div^T, so the operator is symmetric positive definite.
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let grid = &self.grid;
        let d = grid.dim();
        let n = grid.len();
        y.iter_mut().for_each(|v| *v = 0.0);
        add_laplacian_multi(grid, x, d, -self.mu_dt, y);
        let mut div = vec![0.0; n];
        for (k, dv) in div.iter_mut().enumerate() {
            for a in 0..d {
                let up = ops::neighbor_component(x, grid, k, a, true, a, d, Ghost::ZERO);
                let dn = ops::neighbor_component(x, grid, k, a, false, a, d, Ghost::ZERO);
                *dv += (up - dn) / (2.0 * grid.spacing(a));
            }
        }
        for k in 0..n {
            for a in 0..d {
                let up = ops::neighbor_value(&div, grid, k, a, true, Ghost::ZERO);
                let dn = ops::neighbor_value(&div, grid, k, a, false, Ghost::ZERO);
                y[k * d + a] -= self.lambda_dt * (up - dn) / (2.0 * grid.spacing(a));
            }
        }
        for k in 0..n {
            for a in 0..d {
                let i = k * d + a;
                if self.active[k] {
                    y[i] += self.rho[k] * x[i];
                } else {
                    y[i] = x[i];
                }
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn conjugate_gradient(
    op: &ViscousOperator<'_>,
    b: &[f64],
    x: &mut [f64],
    solver: ViscousSolver,
) -> Result<usize> {
    let n = b.len();
    let max_iter = if solver.max_iter == 0 {
        20 * n + 100
    } else {
        solver.max_iter
    };
    let b_norm = math::sqrt(dot(b, b));
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(0);
    }
    let mut ax = vec![0.0; n];
    op.apply(x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let target = solver.tol * b_norm;
    for it in 0..max_iter {
        if math::sqrt(rr) <= target {
            return Ok(it);
        }
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    // recompute the true residual before giving up
    op.apply(x, &mut ax);
    let res: f64 = b.iter().zip(&ax).map(|(b, a)| (b - a) * (b - a)).sum();
    let rel = math::sqrt(res) / b_norm;
    if rel <= solver.tol {
        Ok(max_iter)
    } else {
        Err(Error::ViscousSolve {
            iterations: max_iter,
            residual: rel,
        })
    }
}

/// Stable time step: `safety` times the smallest of the advective bound
/// `h / max|u|`, the acoustic bound `h / √(γ max ρ^{γ−1})`, the explicit
/// diffusion bound `h² / (2d max(D, 1))`, the sphere-drift bound
/// `1 / (L(L+1) max|∇u|)` and the rotational-diffusion bound
/// `1 / (D_τ L(L+1))`.
///
/// The acoustic bound shrinks like `γ^{-1/2}` at `ρ ≈ 1`.
pub fn cfl_dt(
    state: &FluidState,
    coeffs: PhysCoeffs,
    law: PressureLaw,
    safety: f64,
) -> Result<f64> {
    if !(safety > 0.0 && safety <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "safety",
            reason: "CFL safety factor must lie in (0, 1]",
        });
    }
    let grid = state.rho.grid();
    let h = grid.min_spacing();
    let d = grid.dim();

    let speed = state
        .u
        .values()
        .chunks_exact(d)
        .map(|c| c.iter().map(|v| math::abs(*v)).sum::<f64>())
        .fold(0.0, f64::max);
    let advective = if speed > 0.0 {
        h / speed
    } else {
        f64::INFINITY
    };

    let rho_max = state.rho.max().max(0.0);
    let sound2 = if rho_max > 0.0 {
        law.gamma() * math::exp((law.gamma() - 1.0) * math::ln(rho_max))
    } else {
        0.0
    };
    let acoustic = if sound2 > 0.0 {
        h / math::sqrt(sound2)
    } else {
        f64::INFINITY
    };

    let diffusive = h * h / (2.0 * d as f64 * coeffs.diffusion.max(1.0));

    let l = state.f.basis().degree() as f64;
    let ll = l * (l + 1.0);
    let grad_max = velocity_gradient(&state.u)
        .iter()
        .map(|g| math::sqrt(g.iter().flatten().map(|v| v * v).sum()))
        .fold(0.0, f64::max);
    let drift = if grad_max > 0.0 {
        1.0 / (ll * grad_max)
    } else {
        f64::INFINITY
    };
    let rotational = 1.0 / (coeffs.rot_diffusion * ll);

    let dt = advective
        .min(acoustic)
        .min(diffusive)
        .min(drift)
        .min(rotational);
    Ok(safety * dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;
    use core::f64::consts::PI;

    fn line(n: usize) -> Grid {
        Grid::line(n, 1.0, Boundary::Periodic).unwrap()
    }

    #[test]
    fn pressure_law_rejects_small_gamma() {
        assert!(PressureLaw::new(1.5).is_err());
        assert!(PressureLaw::new(1.0).is_err());
        assert!(PressureLaw::new(f64::NAN).is_err());
        assert!(PressureLaw::new(1.51).is_ok());
    }

    #[test]
    fn fluid_pressure_examples() {
        let g = line(8);
        let law = PressureLaw::new(7.0).unwrap();
        let one = fluid_pressure(&ScalarField::constant(g, 1.0), law).unwrap();
        assert!(one.values().iter().all(|p| *p == 1.0));
        let zero = fluid_pressure(&ScalarField::zeros(g), law).unwrap();
        assert!(zero.values().iter().all(|p| *p == 0.0));
        assert!(fluid_pressure(&ScalarField::constant(g, -0.1), law).is_err());
        // 1.1^40 = 45.2592555681759518... (40-digit decimal evaluation)
        let law40 = PressureLaw::new(40.0).unwrap();
        let p = fluid_pressure(&ScalarField::constant(g, 1.1), law40).unwrap();
        assert!((p.values()[0] - 45.259_255_568_175_95).abs() < 1e-9);
    }

    #[test]
    fn total_pressure_examples() {
        let g = line(8);
        let z = ScalarField::zeros(g);
        let one = ScalarField::constant(g, 1.0);
        let two = ScalarField::constant(g, 2.0);
        assert!(total_pressure(&z, &z)
            .unwrap()
            .values()
            .iter()
            .all(|p| *p == 0.0));
        assert!(total_pressure(&one, &one)
            .unwrap()
            .values()
            .iter()
            .all(|p| *p == 3.0));
        assert!(total_pressure(&z, &two)
            .unwrap()
            .values()
            .iter()
            .all(|p| *p == 6.0));
        assert_eq!(
            total_pressure(&z, &ScalarField::zeros(line(16))),
            Err(Error::GridMismatch)
        );
    }

    #[test]
    fn transport_with_zero_velocity_is_identity() {
        let g = line(16);
        let s = ScalarField::from_fn(g, |x| 1.0 + x[0]);
        let out = transport_step(&s, &VectorField::zeros(g), 0.1, 0.0).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn uniform_field_stays_uniform_under_divergence_free_flow() {
        let g = Grid::rect(16, 16, 1.0, 1.0, Boundary::Periodic).unwrap();
        // face-divergence-free: u depends only on y, v only on x
        let u = VectorField::from_fn(g, |x| {
            [(2.0 * PI * x[1]).sin(), 0.5 * (2.0 * PI * x[0]).cos()]
        });
        let s = ScalarField::constant(g, 0.8);
        let out = transport_step(&s, &u, 0.01, 0.0).unwrap();
        assert!(out.values().iter().all(|v| (v - 0.8).abs() < 1e-12));
    }

    #[test]
    fn square_pulse_round_trip_conserves_mass() {
        let n = 64;
        let g = line(n);
        let u = VectorField::from_fn(g, |_| [1.0, 0.0]);
        let mut s = ScalarField::from_fn(g, |x| {
            if (0.25..0.5).contains(&x[0]) {
                1.0
            } else {
                0.0
            }
        });
        let mass0 = s.integral();
        let dt = 0.5 / n as f64;
        for _ in 0..2 * n {
            s = transport_step(&s, &u, dt, 0.0).unwrap();
        }
        assert!(((s.integral() - mass0) / mass0).abs() < 1e-13);
        assert!(s.max() <= 1.0 + 1e-15);
        assert!(s.min() >= 0.0);
    }

    #[test]
    fn transport_rejects_cfl_violation_and_negative_input() {
        let g = line(8);
        let u = VectorField::from_fn(g, |_| [1.0, 0.0]);
        let s = ScalarField::constant(g, 1.0);
        assert!(matches!(
            transport_step(&s, &u, 0.2, 0.0),
            Err(Error::CflViolation { .. })
        ));
        let neg = ScalarField::constant(g, -1.0);
        assert!(transport_step(&neg, &u, 0.01, 0.0).is_err());
    }

    #[test]
    fn wall_faces_carry_no_flux() {
        let g = Grid::line(8, 1.0, Boundary::Dirichlet).unwrap();
        let u = VectorField::from_fn(g, |_| [1.0, 0.0]);
        let s = ScalarField::constant(g, 1.0);
        let out = transport_step(&s, &u, 0.05, 0.0).unwrap();
        assert!((out.integral() - s.integral()).abs() < 1e-15);
    }
}
