//! The orientation Fokker–Planck operator
//!
//! ```text
//! f_t + div(f u) + ∇_τ·(P_{τ⊥}(∇u τ) f) − D_τ Δ_τ f − D Δ f = 0
//! ```
//!
//! and the moments of `f` that feed the fluid: number density `η = ∫ f dτ`,
//! kinetic stress `σ = ∫ (3 τ⊗τ − I) f dτ` and entropy `ψ = ∫ f ln f dτ`.
//!
//! `f` is stored per cell as real spherical-harmonic coefficients. The drift
//! term is applied in weak form (see [`SphereBasis::add_drift_divergence`]),
//! so rotational operators never change the sphere mass of a cell.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;
use crate::hydro::{face_velocities, upwind_divergence};
use crate::math;
use crate::ops::{self, Ghost};
use crate::sphere::{Mat3, SphereBasis};

/// Nodal values of `f` may dip this far below zero before the distribution
/// is rejected; entropy evaluation clamps the remainder to zero.
pub const POSITIVITY_TOL: f64 = 1e-10;

/// Orientation distribution `f(x, τ)`: one coefficient vector per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientationField {
    grid: Grid,
    basis: Arc<SphereBasis>,
    coeffs: Vec<f64>,
}

impl OrientationField {
    pub fn new(grid: Grid, basis: Arc<SphereBasis>, coeffs: Vec<f64>) -> Result<Self> {
        let expected = grid.len() * basis.n_coeffs();
        if coeffs.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                found: coeffs.len(),
            });
        }
        Ok(OrientationField {
            grid,
            basis,
            coeffs,
        })
    }

    pub fn zeros(grid: Grid, basis: Arc<SphereBasis>) -> Self {
        let n = grid.len() * basis.n_coeffs();
        OrientationField {
            grid,
            basis,
            coeffs: vec![0.0; n],
        }
    }

    /// Isotropic distribution `f = η / (4π)` in every cell.
    pub fn isotropic(eta: &ScalarField, basis: Arc<SphereBasis>) -> Self {
        let grid = *eta.grid();
        let nc = basis.n_coeffs();
        let mut coeffs = vec![0.0; grid.len() * nc];
        let c0 = 1.0 / math::sqrt(4.0 * PI);
        for (k, e) in eta.values().iter().enumerate() {
            coeffs[k * nc] = e * c0;
        }
        OrientationField {
            grid,
            basis,
            coeffs,
        }
    }

    /// Samples `f(x, τ)` at the quadrature nodes of every cell and projects
    /// onto the harmonic basis.
    pub fn from_fn(
        grid: Grid,
        basis: Arc<SphereBasis>,
        mut f: impl FnMut([f64; 2], [f64; 3]) -> f64,
    ) -> Self {
        let nc = basis.n_coeffs();
        let mut coeffs = vec![0.0; grid.len() * nc];
        let mut nodal = vec![0.0; basis.n_nodes()];
        for k in 0..grid.len() {
            let x = grid.center(k);
            for (v, tau) in nodal.iter_mut().zip(basis.nodes()) {
                *v = f(x, *tau);
            }
            basis.forward_into(&nodal, &mut coeffs[k * nc..(k + 1) * nc]);
        }
        OrientationField {
            grid,
            basis,
            coeffs,
        }
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn basis(&self) -> &Arc<SphereBasis> {
        &self.basis
    }

    #[inline]
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    #[inline]
    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    #[inline]
    pub fn cell(&self, k: usize) -> &[f64] {
        let nc = self.basis.n_coeffs();
        &self.coeffs[k * nc..(k + 1) * nc]
    }

    /// Nodal reconstruction of cell `k`.
    pub fn nodal(&self, k: usize) -> Vec<f64> {
        self.basis.inverse(self.cell(k))
    }

    /// Smallest nodal value over all cells and nodes, with its location.
    pub fn min_nodal(&self) -> (f64, usize, usize) {
        let mut buf = vec![0.0; self.basis.n_nodes()];
        let mut best = (f64::INFINITY, 0, 0);
        for k in 0..self.grid.len() {
            self.basis.inverse_into(self.cell(k), &mut buf);
            for (node, &v) in buf.iter().enumerate() {
                if v < best.0 || v.is_nan() {
                    best = (v, k, node);
                }
            }
        }
        best
    }

    /// Rejects nodal values below `-tol`.
    pub fn check_positivity(&self, tol: f64) -> Result<()> {
        let (v, cell, node) = self.min_nodal();
        if v < -tol || v.is_nan() {
            Err(Error::PositivityViolation {
                cell,
                node,
                value: v,
            })
        } else {
            Ok(())
        }
    }

    /// `∫_Ω ∫_{S²} f dτ dx`.
    pub fn rod_mass(&self) -> f64 {
        let nc = self.basis.n_coeffs();
        let s: f64 = self.coeffs.iter().step_by(nc).sum();
        s * math::sqrt(4.0 * PI) * self.grid.cell_volume()
    }

    pub(crate) fn compatible(&self, grid: &Grid) -> Result<()> {
        if &self.grid == grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub(crate) fn with_coeffs(&self, coeffs: Vec<f64>) -> Self {
        debug_assert_eq!(coeffs.len(), self.coeffs.len());
        OrientationField {
            grid: self.grid,
            basis: Arc::clone(&self.basis),
            coeffs,
        }
    }
}

/// `∇u` per cell, zero-padded to 3×3: `g[i][j] = ∂_j u_i`. Centered
/// differences with `u = 0` ghosts on walls.
pub fn velocity_gradient(u: &VectorField) -> Vec<Mat3> {
    let grid = *u.grid();
    let d = grid.dim();
    let vals = u.values();
    let mut out = vec![[[0.0; 3]; 3]; grid.len()];
    for (k, g) in out.iter_mut().enumerate() {
        for j in 0..d {
            let h2 = 2.0 * grid.spacing(j);
            for (i, row) in g.iter_mut().enumerate().take(d) {
                let up = ops::neighbor_component(vals, &grid, k, j, true, i, d, Ghost::ZERO);
                let dn = ops::neighbor_component(vals, &grid, k, j, false, i, d, Ghost::ZERO);
                row[j] = (up - dn) / h2;
            }
        }
    }
    out
}

/// Tangential part of `g τ`: `g τ − (τ · g τ) τ`.
pub fn projection_drift(g: &Mat3, tau: [f64; 3]) -> Result<[f64; 3]> {
    let n2 = tau[0] * tau[0] + tau[1] * tau[1] + tau[2] * tau[2];
    if !(math::abs(math::sqrt(n2) - 1.0) <= 1e-12) {
        return Err(Error::InvalidParameter {
            name: "tau",
            reason: "orientation must be a unit vector",
        });
    }
    let mut gt = [0.0; 3];
    for (i, row) in g.iter().enumerate() {
        gt[i] = row[0] * tau[0] + row[1] * tau[1] + row[2] * tau[2];
    }
    let radial = gt[0] * tau[0] + gt[1] * tau[1] + gt[2] * tau[2];
    Ok([
        gt[0] - radial * tau[0],
        gt[1] - radial * tau[1],
        gt[2] - radial * tau[2],
    ])
}

/// Time derivative of `f` under the Fokker–Planck operator, in coefficient
/// space:
///
/// `−div(f u) − ∇_τ·(P_{τ⊥}(∇u τ) f) + D_τ Δ_τ f + D Δ f`.
///
/// Spatial advection uses the same upwind face fluxes as scalar transport,
/// applied coefficient by coefficient; spatial diffusion reads `f = 0` ghosts
/// on walls.
pub fn fp_rhs(
    f: &OrientationField,
    u: &VectorField,
    diffusivity: f64,
    rot_diffusivity: f64,
) -> Result<OrientationField> {
    f.compatible(u.grid())?;
    let grid = f.grid;
    let basis = &f.basis;
    let nc = basis.n_coeffs();
    let mut rhs = vec![0.0; f.coeffs.len()];

    let faces = face_velocities(u);
    upwind_divergence(&grid, &faces, &f.coeffs, nc, &mut rhs);
    rhs.iter_mut().for_each(|v| *v = -*v);

    if diffusivity != 0.0 {
        add_laplacian_multi(&grid, &f.coeffs, nc, diffusivity, &mut rhs);
    }

    let grads = velocity_gradient(u);
    for (k, g) in grads.iter().enumerate() {
        let cell = &f.coeffs[k * nc..(k + 1) * nc];
        let out = &mut rhs[k * nc..(k + 1) * nc];
        basis.add_drift_divergence(g, cell, -1.0, out);
        if rot_diffusivity != 0.0 {
            for l in 1..=basis.degree() {
                let ev = -rot_diffusivity * (l * (l + 1)) as f64;
                for a in l * l..(l + 1) * (l + 1) {
                    out[a] += ev * cell[a];
                }
            }
        }
    }
    Ok(f.with_coeffs(rhs))
}

/// Adds `scale · Δ` of each interleaved component, zero ghosts on walls.
pub(crate) fn add_laplacian_multi(
    grid: &Grid,
    values: &[f64],
    ncomp: usize,
    scale: f64,
    out: &mut [f64],
) {
    for k in 0..grid.len() {
        for a in 0..grid.dim() {
            let w = scale / (grid.spacing(a) * grid.spacing(a));
            let up = grid.neighbor(k, a, true);
            let dn = grid.neighbor(k, a, false);
            for c in 0..ncomp {
                let mid = values[k * ncomp + c];
                let u = up.map_or(0.0, |n| values[n * ncomp + c]);
                let d = dn.map_or(0.0, |n| values[n * ncomp + c]);
                out[k * ncomp + c] += w * (u - 2.0 * mid + d);
            }
        }
    }
}

/// `η = ∫ f dτ` per cell.
pub fn eta_moment(f: &OrientationField) -> ScalarField {
    let nc = f.basis.n_coeffs();
    let vals = f
        .coeffs
        .iter()
        .step_by(nc)
        .map(|c| f.basis.mass_from_coeffs(core::slice::from_ref(c)))
        .collect();
    ScalarField::new(f.grid, vals).expect("one value per cell")
}

/// `σ = ∫ (3 τ⊗τ − I) f dτ` per cell. Symmetric and trace-free by
/// construction; only the degree-2 coefficients contribute.
pub fn stress_moment(f: &OrientationField) -> Vec<Mat3> {
    (0..f.grid.len())
        .map(|k| f.basis.stress_from_coeffs(f.cell(k)))
        .collect()
}

/// Entropy density and Fisher information of `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyFisher {
    /// `ψ = ∫ f ln f dτ` per cell, with `0 ln 0 = 0`.
    pub psi: ScalarField,
    /// `∫_Ω ∫_{S²} |∇_τ √f|²`.
    pub fisher_tau: f64,
    /// `∫_Ω ∫_{S²} |∇_x √f|²`.
    pub fisher_x: f64,
}

/// Entropy and both Fisher informations by nodal quadrature.
///
/// Nodal values in `[-POSITIVITY_TOL, 0)` are clamped to zero; anything lower
/// is rejected. The orientational term uses the exact tangential gradient of
/// the band-limited `f` through `|∇√f|² = |∇f|² / (4f)`; the spatial term
/// takes centered differences of `√f` between cells (`f = 0` ghosts on walls).
pub fn entropy_and_fisher(f: &OrientationField) -> Result<EntropyFisher> {
    let grid = f.grid;
    let basis = &f.basis;
    let nn = basis.n_nodes();
    let w = basis.weights();
    let mut roots = vec![0.0; grid.len() * nn];
    let mut psi = vec![0.0; grid.len()];
    let mut nodal = vec![0.0; nn];
    let mut grads = vec![[0.0; 3]; nn];
    let mut fisher_tau = 0.0;
    for k in 0..grid.len() {
        basis.inverse_into(f.cell(k), &mut nodal);
        basis.gradient_nodal(f.cell(k), &mut grads);
        let mut ent = 0.0;
        let mut ft = 0.0;
        for (node, &v) in nodal.iter().enumerate() {
            if v < -POSITIVITY_TOL || v.is_nan() {
                return Err(Error::PositivityViolation {
                    cell: k,
                    node,
                    value: v,
                });
            }
            if v > 0.0 {
                ent += w[node] * v * math::ln(v);
                let g = grads[node];
                ft += w[node] * (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]) / (4.0 * v);
                roots[k * nn + node] = math::sqrt(v);
            }
        }
        psi[k] = ent;
        fisher_tau += ft;
    }
    let vol = grid.cell_volume();
    fisher_tau *= vol;

    let mut fisher_x = 0.0;
    for k in 0..grid.len() {
        for a in 0..grid.dim() {
            let h2 = 2.0 * grid.spacing(a);
            let up = grid.neighbor(k, a, true);
            let dn = grid.neighbor(k, a, false);
            for (node, wn) in w.iter().enumerate() {
                let u = up.map_or(0.0, |n| roots[n * nn + node]);
                let d = dn.map_or(0.0, |n| roots[n * nn + node]);
                let g = (u - d) / h2;
                fisher_x += wn * g * g;
            }
        }
    }
    fisher_x *= vol;

    Ok(EntropyFisher {
        psi: ScalarField::new(grid, psi).expect("one value per cell"),
        fisher_tau,
        fisher_x,
    })
}

/// `η`, `σ` and `ψ` of one distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticMoments {
    pub eta: ScalarField,
    pub sigma: Vec<Mat3>,
    pub psi: ScalarField,
}

pub fn moments(f: &OrientationField) -> Result<KineticMoments> {
    Ok(KineticMoments {
        eta: eta_moment(f),
        sigma: stress_moment(f),
        psi: entropy_and_fisher(f)?.psi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;
    use crate::sphere::coeff_index;

    fn setup(degree: usize) -> (Grid, Arc<SphereBasis>) {
        (
            Grid::line(8, 1.0, Boundary::Periodic).unwrap(),
            Arc::new(SphereBasis::new(degree).unwrap()),
        )
    }

    #[test]
    fn dilation_has_no_tangential_drift() {
        let id = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let t = [0.6, 0.0, 0.8];
        let v = projection_drift(&id, t).unwrap();
        assert!(v.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn rigid_rotation_passes_through() {
        let w = [[0.0, -0.3, 0.2], [0.3, 0.0, -0.7], [-0.2, 0.7, 0.0]];
        let t = [0.48, 0.6, 0.64];
        let v = projection_drift(&w, t).unwrap();
        for i in 0..3 {
            let wt: f64 = (0..3).map(|j| w[i][j] * t[j]).sum();
            assert!((v[i] - wt).abs() < 1e-15);
        }
    }

    #[test]
    fn simple_shear_on_e2_gives_e1() {
        let mut g = [[0.0; 3]; 3];
        g[0][1] = 1.0;
        let v = projection_drift(&g, [0.0, 1.0, 0.0]).unwrap();
        assert_eq!(v, [1.0, 0.0, 0.0]);
    }

    #[test]
    fn non_unit_orientation_rejected() {
        let g = [[0.0; 3]; 3];
        assert!(projection_drift(&g, [1.0, 1e-5, 0.0]).is_err());
    }

    #[test]
    fn uniform_equilibrium_has_zero_rhs() {
        let (grid, basis) = setup(5);
        let f = OrientationField::isotropic(&ScalarField::constant(grid, 0.7), basis);
        let r = fp_rhs(&f, &VectorField::zeros(grid), 1.0, 1.0).unwrap();
        assert!(r.coeffs().iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn eta_moment_examples() {
        let (grid, basis) = setup(4);
        let f = OrientationField::from_fn(grid, basis.clone(), |_, _| 1.0 / (4.0 * PI));
        assert!(eta_moment(&f)
            .values()
            .iter()
            .all(|e| (e - 1.0).abs() < 1e-12));
        let z = OrientationField::zeros(grid, basis.clone());
        assert!(eta_moment(&z).values().iter().all(|e| *e == 0.0));
        let mut hi = OrientationField::zeros(grid, basis.clone());
        for k in 0..grid.len() {
            for a in 1..basis.n_coeffs() {
                hi.coeffs_mut()[k * basis.n_coeffs() + a] = (a as f64).sin();
            }
        }
        assert!(eta_moment(&hi).values().iter().all(|e| e.abs() < 1e-12));
    }

    #[test]
    fn stress_vanishes_for_isotropic_and_odd_data() {
        let (grid, basis) = setup(6);
        let c = OrientationField::from_fn(grid, basis.clone(), |_, _| 2.5);
        let odd = OrientationField::from_fn(grid, basis, |_, t| (1.0 + 0.4 * t[2]) / (4.0 * PI));
        for s in stress_moment(&c).iter().chain(stress_moment(&odd).iter()) {
            assert!(s.iter().flatten().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn entropy_of_uniform_distribution() {
        let (grid, basis) = setup(7);
        let f = OrientationField::from_fn(grid, basis.clone(), |_, _| 1.0 / (4.0 * PI));
        let ef = entropy_and_fisher(&f).unwrap();
        // closed form: ∫ (1/4π) ln(1/4π) dτ = −ln 4π
        for p in ef.psi.values() {
            assert!((p + (4.0 * PI).ln()).abs() < 1e-12);
        }
        assert!(ef.fisher_tau.abs() < 1e-20);
        assert!(ef.fisher_x.abs() < 1e-20);
        let z = entropy_and_fisher(&OrientationField::zeros(grid, basis)).unwrap();
        assert!(z.psi.values().iter().all(|p| *p == 0.0));
    }

    #[test]
    fn entropy_rejects_negative_distribution() {
        let (grid, basis) = setup(3);
        let f = OrientationField::from_fn(grid, basis, |_, t| t[2]);
        assert!(matches!(
            entropy_and_fisher(&f),
            Err(Error::PositivityViolation { .. })
        ));
    }

    #[test]
    fn fisher_tau_matches_closed_form() {
        // f = (1 + a τ₃)/(4π): |∇_τ √f|² = a² (1 − τ₃²) / (16π (1 + a τ₃)),
        // so over the sphere ∫|∇_τ √f|² = (a²/8) ∫_{-1}^{1} (1 − z²)/(1 + a z) dz.
        let a: f64 = 0.5;
        let (grid, basis) = setup(7);
        let f = OrientationField::from_fn(grid, basis, |_, t| (1.0 + a * t[2]) / (4.0 * PI));
        let ef = entropy_and_fisher(&f).unwrap();
        let n = 20000;
        let h = 2.0 / n as f64;
        let g = |z: f64| (1.0 - z * z) / (1.0 + a * z);
        let mut s = g(-1.0) + g(1.0);
        for i in 1..n {
            let z = -1.0 + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(z);
        }
        let expected = a * a / 8.0 * s * h / 3.0;
        assert!(
            (ef.fisher_tau - expected).abs() < 1e-6 * expected,
            "{} vs {}",
            ef.fisher_tau,
            expected
        );
    }

    #[test]
    fn rotational_terms_preserve_sphere_mass() {
        let (_, basis) = setup(7);
        let grid = Grid::rect(8, 8, 1.0, 1.0, Boundary::Periodic).unwrap();
        // x-uniform f under a shear flow u = (u₁(y), 0): the upwind fluxes
        // cancel, while ∇u is nonzero everywhere
        let f = OrientationField::from_fn(grid, basis.clone(), |_, t| {
            1.0 + 0.3 * t[0] * t[1] + 0.2 * t[2] * t[2] * t[0]
        });
        let u = VectorField::from_fn(grid, |x| [(2.0 * PI * x[1]).sin() + 0.1, 0.0]);
        let r = fp_rhs(&f, &u, 1.0, 1.0).unwrap();
        for k in 0..grid.len() {
            let nodal = basis.inverse(r.cell(k));
            assert!(basis.integrate(&nodal).abs() < 1e-10);
            assert_eq!(r.cell(k)[coeff_index(0, 0)], 0.0);
        }
    }
}
