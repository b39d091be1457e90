//! Congestion-limit diagnostics: the excess density `(ρ − 1)₊`, the
//! complementarity residual of `π(ρ − 1) = 0`, the divergence of `u` on the
//! nearly congested set, and the sequential γ sweep with its log-log fit.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::hydro::PressureLaw;
use crate::integrator::{FluidState, Stepper};
use crate::math;
use crate::ops::{self, Ghost};

/// Exponents reported for `‖(ρ − 1)₊‖_{L^p}`, in column order.
pub const EXCESS_EXPONENTS: [f64; 4] = [1.0, 2.0, 4.0, f64::INFINITY];

/// Default width of the band `{ρ ≥ 1 − ε}` treated as congested.
pub const DEFAULT_EPS: f64 = 0.05;

/// Number of largest γ values used by the slope fit.
pub const FIT_POINTS: usize = 3;

fn excess(state: &FluidState) -> ScalarField {
    state.rho.map(|r| (r - 1.0).max(0.0))
}

/// `‖(ρ − 1)₊‖_{L^p}` for each `p` in `p_list`.
pub fn excess_density_norms(state: &FluidState, p_list: &[f64]) -> Result<Vec<f64>> {
    let phi = excess(state);
    p_list.iter().map(|&p| ops::lp_norm(&phi, p)).collect()
}

/// `∫ |ρ^γ (ρ − 1)| dx`.
pub fn complementarity_residual(state: &FluidState) -> f64 {
    let law = state.law;
    let sum: f64 = state
        .rho
        .values()
        .iter()
        .map(|&r| math::abs(law.pressure(r) * (r - 1.0)))
        .sum();
    sum * state.grid().cell_volume()
}

/// `∫ ρ^γ dx`.
pub fn pressure_mass(state: &FluidState) -> f64 {
    let law = state.law;
    let sum: f64 = state.rho.values().iter().map(|&r| law.pressure(r)).sum();
    sum * state.grid().cell_volume()
}

/// L² norm of the centered `div u` over the cells with `ρ ≥ 1 − eps`, and the
/// volume of those cells.
pub fn incompressibility_defect(state: &FluidState, eps: f64) -> Result<(f64, f64)> {
    check_eps(eps)?;
    let div = ops::div_with(&state.u, Ghost::ZERO);
    let vol = state.grid().cell_volume();
    let mut sq = 0.0;
    let mut count = 0usize;
    for (&r, &dv) in state.rho.values().iter().zip(div.values()) {
        if r >= 1.0 - eps {
            sq += dv * dv;
            count += 1;
        }
    }
    Ok((math::sqrt(sq * vol), count as f64 * vol))
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "eps",
            reason: "congestion band must lie in (0, 1)",
        })
    }
}

/// Limit diagnostics of one run of the sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub gamma: f64,
    /// `‖(ρ − 1)₊‖_{L^p}` at the final time for `p` in [`EXCESS_EXPONENTS`].
    pub excess: [f64; 4],
    /// `sup_t ‖(ρ − 1)₊‖_{L²}` over the recorded step times.
    pub excess_sup_l2: f64,
    /// `∫₀ᵀ ∫ ρ^γ dx dt`, trapezoidal in time.
    pub pressure_time_integral: f64,
    /// Complementarity residual at the final time.
    pub complementarity: f64,
    /// Incompressibility defect at the final time.
    pub div_defect: f64,
    /// `|{ρ ≥ 1 − ε}|` at the final time.
    pub congested_volume: f64,
    pub steps: usize,
}

impl SweepRow {
    #[inline]
    pub fn excess_l2(&self) -> f64 {
        self.excess[1]
    }
}

/// Rows in increasing γ, the congestion band and the fitted decay slope of
/// `‖(ρ − 1)₊‖_{L²}` in γ.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub eps: f64,
    pub l2_slope: Option<f64>,
}

impl SweepResult {
    /// Sorts nothing: `rows` must already be in increasing γ.
    pub fn from_rows(rows: Vec<SweepRow>, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        check_increasing(rows.iter().map(|r| r.gamma))?;
        let l2_slope = fit_slope(&rows);
        Ok(SweepResult {
            rows,
            eps,
            l2_slope,
        })
    }
}

fn check_increasing(gammas: impl Iterator<Item = f64>) -> Result<()> {
    let mut prev = f64::NEG_INFINITY;
    for g in gammas {
        PressureLaw::new(g)?;
        if g <= prev {
            return Err(Error::InvalidParameter {
                name: "gamma_list",
                reason: "gamma values must be strictly increasing",
            });
        }
        prev = g;
    }
    Ok(())
}

/// Least-squares slope of `ln ‖(ρ − 1)₊‖_{L²}` against `ln γ` over the last
/// [`FIT_POINTS`] rows. Absent with fewer than two rows or when a fitted norm
/// is zero.
pub fn fit_slope(rows: &[SweepRow]) -> Option<f64> {
    let tail = &rows[rows.len().saturating_sub(FIT_POINTS)..];
    if tail.len() < 2 || tail.iter().any(|r| !(r.excess_l2() > 0.0)) {
        return None;
    }
    let n = tail.len() as f64;
    let xs: Vec<f64> = tail.iter().map(|r| math::ln(r.gamma)).collect();
    let ys: Vec<f64> = tail.iter().map(|r| math::ln(r.excess_l2())).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx)
}

/// Runs `template` under `π = ρ^γ` to `t_final` and collects its row.
pub fn sweep_row(
    template: &FluidState,
    gamma: f64,
    t_final: f64,
    stepper: &Stepper,
    eps: f64,
) -> Result<SweepRow> {
    check_eps(eps)?;
    let tag = |e| Error::Sweep {
        gamma,
        source: Box::new(e),
    };
    let law = PressureLaw::new(gamma).map_err(tag)?;
    let initial = template.clone().with_law(law);

    let mut sup_l2 = excess_density_norms(&initial, &[2.0]).map_err(tag)?[0];
    let mut prev = pressure_mass(&initial);
    let mut integral = 0.0;
    let out = stepper
        .run_observed(&initial, t_final, usize::MAX, |s, dt| {
            let cur = pressure_mass(s);
            integral += 0.5 * dt * (prev + cur);
            prev = cur;
            if let Ok(n) = excess_density_norms(s, &[2.0]) {
                sup_l2 = sup_l2.max(n[0]);
            }
        })
        .map_err(tag)?;

    let state = &out.state;
    let norms = excess_density_norms(state, &EXCESS_EXPONENTS).map_err(tag)?;
    let (div_defect, congested_volume) = incompressibility_defect(state, eps).map_err(tag)?;
    Ok(SweepRow {
        gamma,
        excess: [norms[0], norms[1], norms[2], norms[3]],
        excess_sup_l2: sup_l2,
        pressure_time_integral: integral,
        complementarity: complementarity_residual(state),
        div_defect,
        congested_volume,
        steps: out.steps,
    })
}

/// Runs the sweep one γ at a time. The initial data are `template` with its
/// pressure law replaced.
pub fn gamma_sweep(
    template: &FluidState,
    gammas: &[f64],
    t_final: f64,
    stepper: &Stepper,
    eps: f64,
) -> Result<SweepResult> {
    check_increasing(gammas.iter().copied())?;
    let rows = gammas
        .iter()
        .map(|&g| sweep_row(template, g, t_final, stepper, eps))
        .collect::<Result<Vec<_>>>()?;
    SweepResult::from_rows(rows, eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::VectorField;
    use crate::grid::{Boundary, Grid};
    use crate::hydro::PhysCoeffs;
    use crate::kinetics::OrientationField;
    use crate::sphere::SphereBasis;
    use alloc::sync::Arc;

    fn state_with(rho: ScalarField, gamma: f64) -> FluidState {
        let grid = *rho.grid();
        let basis = Arc::new(SphereBasis::new(2).unwrap());
        let eta = ScalarField::zeros(grid);
        FluidState::new(
            rho,
            VectorField::zeros(grid),
            eta.clone(),
            OrientationField::isotropic(&eta, basis),
            0.0,
            PressureLaw::new(gamma).unwrap(),
            PhysCoeffs::default(),
        )
        .unwrap()
    }

    fn line(n: usize) -> Grid {
        Grid::line(n, 1.0, Boundary::Periodic).unwrap()
    }

    fn row(gamma: f64, l2: f64) -> SweepRow {
        SweepRow {
            gamma,
            excess: [0.0, l2, 0.0, 0.0],
            excess_sup_l2: l2,
            pressure_time_integral: 0.0,
            complementarity: 0.0,
            div_defect: 0.0,
            congested_volume: 0.0,
            steps: 0,
        }
    }

    #[test]
    fn subunit_density_has_no_excess() {
        let s = state_with(ScalarField::from_fn(line(16), |x| 0.5 + 0.4 * x[0]), 5.0);
        let n = excess_density_norms(&s, &EXCESS_EXPONENTS).unwrap();
        assert!(n.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_excess_has_equal_norms() {
        let s = state_with(ScalarField::constant(line(16), 1.5), 5.0);
        for v in excess_density_norms(&s, &EXCESS_EXPONENTS).unwrap() {
            assert!((v - 0.5).abs() < 1e-14, "{v}");
        }
    }

    #[test]
    fn sine_bump_matches_direct_quadrature() {
        let n = 64;
        let grid = line(n);
        let s = state_with(
            ScalarField::from_fn(grid, |x| {
                1.0 + 0.1 * (2.0 * core::f64::consts::PI * x[0]).sin().max(0.0)
            }),
            5.0,
        );
        let norms = excess_density_norms(&s, &[1.0, 2.0, 4.0, f64::INFINITY]).unwrap();
        let h = 1.0 / n as f64;
        let phi: Vec<f64> = (0..n)
            .map(|i| {
                let x = (i as f64 + 0.5) * h;
                0.1 * (2.0 * core::f64::consts::PI * x).sin().max(0.0)
            })
            .collect();
        let p1: f64 = phi.iter().sum::<f64>() * h;
        let p2 = (phi.iter().map(|v| v * v).sum::<f64>() * h).sqrt();
        let p4 = (phi.iter().map(|v| v.powi(4)).sum::<f64>() * h).powf(0.25);
        let pinf = phi.iter().cloned().fold(0.0, f64::max);
        for (a, b) in norms.iter().zip([p1, p2, p4, pinf]) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn complementarity_examples() {
        let s = state_with(ScalarField::constant(line(8), 1.0), 7.0);
        assert_eq!(complementarity_residual(&s), 0.0);

        let s = state_with(ScalarField::constant(line(8), 0.5), 20.0);
        let expected = 0.5f64.powi(20) * 0.5;
        assert!((complementarity_residual(&s) - expected).abs() < 1e-18);
        assert!((expected - 4.768_371_582e-7).abs() < 1e-15);

        let grid = line(8);
        let rho = ScalarField::from_fn(grid, |x| if x[0] < 0.5 { 0.9 } else { 1.0 });
        let s = state_with(rho, 10.0);
        let direct = 4.0 * 0.9f64.powi(10) * 0.1 / 8.0;
        assert!((complementarity_residual(&s) - direct).abs() < 1e-15);
    }

    #[test]
    fn defect_is_masked() {
        let grid = line(32);
        let s = state_with(ScalarField::constant(grid, 0.5), 5.0);
        assert_eq!(incompressibility_defect(&s, 0.05).unwrap(), (0.0, 0.0));

        // compression toward x = 1/2, congested on the middle half
        let rho = ScalarField::from_fn(grid, |x| if (x[0] - 0.5).abs() < 0.25 { 1.0 } else { 0.8 });
        let mut s = state_with(rho, 5.0);
        s.u = VectorField::from_fn(grid, |x| [-(2.0 * core::f64::consts::PI * x[0]).sin(), 0.0]);
        let (defect, vol) = incompressibility_defect(&s, 0.05).unwrap();
        let div = ops::div(&s.u);
        let h = 1.0 / 32.0;
        let mut sq = 0.0;
        for (k, &r) in s.rho.values().iter().enumerate() {
            if r >= 0.95 {
                sq += div.values()[k].powi(2) * h;
            }
        }
        assert!((defect - sq.sqrt()).abs() < 1e-14);
        assert!((vol - 0.5).abs() < 1e-14);
        assert!(incompressibility_defect(&s, 0.0).is_err());
    }

    #[test]
    fn divergence_free_field_has_no_defect() {
        let grid = Grid::rect(16, 16, 1.0, 1.0, Boundary::Periodic).unwrap();
        let s0 = state_with(ScalarField::constant(grid, 1.0), 5.0);
        let mut s = s0;
        let tp = 2.0 * core::f64::consts::PI;
        s.u = VectorField::from_fn(grid, |x| [(tp * x[1]).sin(), (tp * x[0]).cos()]);
        let (defect, vol) = incompressibility_defect(&s, 0.05).unwrap();
        assert!(defect < 1e-12);
        assert!((vol - 1.0).abs() < 1e-14);
    }

    #[test]
    fn slope_of_power_law() {
        let rows: Vec<SweepRow> = [5.0, 10.0, 20.0, 40.0, 80.0]
            .iter()
            .map(|&g: &f64| row(g, 3.0 * g.powf(-0.5)))
            .collect();
        let s = fit_slope(&rows).unwrap();
        assert!((s + 0.5).abs() < 1e-12);
        // only the last three points enter
        let mut polluted = rows.clone();
        polluted[0].excess[1] = 100.0;
        assert_eq!(fit_slope(&polluted), Some(s));
    }

    #[test]
    fn slope_absent_when_degenerate() {
        assert_eq!(fit_slope(&[row(5.0, 0.1)]), None);
        assert_eq!(fit_slope(&[]), None);
        assert_eq!(fit_slope(&[row(5.0, 0.1), row(10.0, 0.0)]), None);
    }

    #[test]
    fn sweep_rejects_bad_gamma_lists() {
        let s = state_with(ScalarField::constant(line(8), 0.5), 5.0);
        let st = Stepper::default();
        assert!(gamma_sweep(&s, &[10.0, 5.0], 0.01, &st, 0.05).is_err());
        assert!(gamma_sweep(&s, &[1.2, 5.0], 0.01, &st, 0.05).is_err());
    }

    #[test]
    fn quiescent_sweep_is_all_zero() {
        let s = state_with(ScalarField::constant(line(16), 0.5), 5.0);
        let r = gamma_sweep(&s, &[5.0, 10.0, 20.0], 0.01, &Stepper::default(), 0.05).unwrap();
        assert_eq!(r.rows.len(), 3);
        assert_eq!(r.l2_slope, None);
        for row in &r.rows {
            assert!(row.excess.iter().all(|&v| v == 0.0));
            assert_eq!(row.congested_volume, 0.0);
            assert_eq!(row.div_defect, 0.0);
        }
        let single = gamma_sweep(&s, &[5.0], 0.01, &Stepper::default(), 0.05).unwrap();
        assert_eq!(single.rows.len(), 1);
        assert_eq!(single.l2_slope, None);
    }
}
