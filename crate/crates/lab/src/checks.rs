//! The invariant suites run by `doifbp check`.
//!
//! 1. quadrature and spectral identities on S²;
//! 2. conservation of `∫ρ` and `∫∫f` over 1000 periodic steps in 1D and 2D;
//! 3. moment consistency `eta_moment(f) = η` under refinement;
//! 4. the energy inequality, exactly for pure diffusion and with a 5% budget
//!    on the colliding-streams benchmark;
//! 5. stress symmetry, trace and the analytic uniaxial case;
//! 7. the renormalized-continuity residual.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::{Duration, Instant};

use doifbp_core::integrator::{renormalized_residual, Stepper};
use doifbp_core::kinetics::{eta_moment, stress_moment};
use doifbp_core::presets::{self, CollidingStreams};
use doifbp_core::sphere::{coeff_count, degree_of};
use doifbp_core::{
    Boundary, FluidState, Grid, OrientationField, PhysCoeffs, PressureLaw, SphereBasis, VectorField,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Errors at or below this are roundoff; refinement ratios are meaningless there.
pub const ROUNDOFF_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl std::fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] {}. {}: {} ({:.2?})",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed
        )
    }
}

type Outcome = Result<(bool, String), String>;

fn timed(id: u32, name: &'static str, body: impl FnOnce() -> Outcome) -> SuiteReport {
    let start = Instant::now();
    let (passed, detail) = match body() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    SuiteReport {
        id,
        name,
        passed,
        detail,
        elapsed: start.elapsed(),
    }
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.2e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

pub fn quadrature() -> SuiteReport {
    timed(1, "quadrature and spectral identities", || {
        let mut worst_moment: f64 = 0.0;
        let mut worst_eigen: f64 = 0.0;
        for degree in 2..=7 {
            let b = SphereBasis::new(degree).map_err(err)?;
            let nodes = b.nodes();
            let integrate = |f: &dyn Fn([f64; 3]) -> f64| {
                b.integrate(&nodes.iter().map(|&t| f(t)).collect::<Vec<_>>())
            };
            worst_moment = worst_moment.max((integrate(&|_| 1.0) - 4.0 * PI).abs());
            for i in 0..3 {
                worst_moment = worst_moment.max(integrate(&|t| t[i]).abs());
                for j in 0..3 {
                    let exact = if i == j { 4.0 * PI / 3.0 } else { 0.0 };
                    worst_moment = worst_moment.max((integrate(&|t| t[i] * t[j]) - exact).abs());
                }
            }
            // −∫ ∇Y_a · ∇Y_b = −l(l+1) δ_ab, from the tabulated gradients
            let n = b.n_coeffs();
            for a in 0..n {
                let mut unit = vec![0.0; n];
                unit[a] = 1.0;
                let lap = b.laplacian(&unit);
                let l = degree_of(a) as f64;
                worst_eigen = worst_eigen.max((lap[a] + l * (l + 1.0)).abs());
                for c in 0..n {
                    let mut s = 0.0;
                    for k in 0..b.n_nodes() {
                        let (ga, gc) = (b.harmonic_gradient(k, a), b.harmonic_gradient(k, c));
                        s += b.weights()[k] * (ga[0] * gc[0] + ga[1] * gc[1] + ga[2] * gc[2]);
                    }
                    let exact = if a == c { l * (l + 1.0) } else { 0.0 };
                    worst_eigen = worst_eigen.max((s - exact).abs());
                }
            }
        }
        let ok = worst_moment < 1e-12 && worst_eigen < 1e-12;
        Ok((
            ok,
            format!(
                "moment error {worst_moment:.1e}, eigenvalue error {worst_eigen:.1e} (L = 2..7)"
            ),
        ))
    })
}

fn smooth(grid: Grid, degree: usize) -> Result<FluidState, String> {
    presets::smooth(
        grid,
        Arc::new(SphereBasis::new(degree).map_err(err)?),
        PressureLaw::new(2.0).map_err(err)?,
        PhysCoeffs::default(),
    )
    .map_err(err)
}

fn drift_after(s: &FluidState, steps: usize) -> Result<(f64, f64), String> {
    let st = Stepper::default();
    let mut cur = s.clone();
    for _ in 0..steps {
        let dt = st.stable_dt(&cur).map_err(err)?;
        cur = st.step(&cur, dt).map_err(err)?;
    }
    Ok((
        (cur.mass() - s.mass()).abs() / s.mass(),
        (cur.f.rod_mass() - s.f.rod_mass()).abs() / s.f.rod_mass(),
    ))
}

pub fn conservation() -> SuiteReport {
    timed(2, "conservation over 1000 periodic steps", || {
        let line = smooth(Grid::line(128, 1.0, Boundary::Periodic).map_err(err)?, 4)?;
        let square = smooth(
            Grid::rect(64, 64, 1.0, 1.0, Boundary::Periodic).map_err(err)?,
            4,
        )?;
        let (m1, f1) = drift_after(&line, 1000)?;
        let (m2, f2) = drift_after(&square, 1000)?;
        let worst = m1.max(f1).max(m2).max(f2);
        Ok((
            worst <= 1e-12,
            format!("1D mass {m1:.1e} rods {f1:.1e}; 2D mass {m2:.1e} rods {f2:.1e} (relative)"),
        ))
    })
}

/// `‖eta_moment(f) − η‖_∞` at `T = 0.1` for 1D periodic grids of `n` cells.
pub fn moment_errors(levels: &[usize]) -> Result<Vec<f64>, String> {
    levels
        .iter()
        .map(|&n| {
            let s = smooth(Grid::line(n, 1.0, Boundary::Periodic).map_err(err)?, 4)?;
            let out = Stepper::default().run(&s, 0.1, usize::MAX).map_err(err)?;
            Ok(eta_moment(&out.state.f)
                .values()
                .iter()
                .zip(out.state.eta.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max))
        })
        .collect()
}

pub fn moment_consistency() -> SuiteReport {
    timed(3, "moment consistency under refinement", || {
        let e = moment_errors(&[16, 32, 64])?;
        let ok = e
            .windows(2)
            .all(|w| w[0] / w[1] >= 1.7 || w[0].max(w[1]) <= ROUNDOFF_FLOOR);
        Ok((ok, format!("errors {} at n = 16, 32, 64", sci(&e))))
    })
}

/// Cumulative `max(0, ΔE + dt·D)` and total `Σ dt·D` over a record sequence.
pub fn energy_budget(records: &[doifbp_core::DiagnosticsRecord]) -> (f64, f64) {
    let (mut violation, mut dissipated) = (0.0, 0.0);
    for w in records.windows(2) {
        let dt = w[1].t - w[0].t;
        let d = dt * w[0].dissipation();
        dissipated += d;
        violation += (w[1].e_total - w[0].e_total + d).max(0.0);
    }
    (violation, dissipated)
}

pub fn energy() -> SuiteReport {
    timed(4, "energy inequality", || {
        let grid = Grid::line(64, 1.0, Boundary::Periodic).map_err(err)?;
        let mut s = smooth(grid, 4)?;
        s.u = VectorField::zeros(grid);
        let frozen = Stepper {
            freeze_velocity: true,
            ..Default::default()
        };
        let out = frozen.run(&s, 0.05, 1).map_err(err)?;
        let worst_rise = out
            .records
            .windows(2)
            .map(|w| w[1].e_total - w[0].e_total)
            .fold(f64::NEG_INFINITY, f64::max);

        let bench = CollidingStreams::default()
            .build(
                Arc::new(SphereBasis::new(7).map_err(err)?),
                PressureLaw::new(20.0).map_err(err)?,
                CollidingStreams::benchmark_coeffs(),
            )
            .map_err(err)?;
        let run = Stepper::default().run(&bench, 0.5, 1).map_err(err)?;
        let (violation, dissipated) = energy_budget(&run.records);
        let ok = worst_rise <= 1e-10 && dissipated > 0.0 && violation <= 0.05 * dissipated;
        Ok((
            ok,
            format!(
                "diffusion: largest step change {worst_rise:.2e} over {} steps; \
                 benchmark: violation {violation:.2e} of {dissipated:.3e} dissipated",
                out.steps
            ),
        ))
    })
}

pub fn stress(samples: usize) -> SuiteReport {
    timed(5, "stress identities", || {
        let basis = Arc::new(SphereBasis::new(7).map_err(err)?);
        let nc = coeff_count(7);
        let grid = Grid::line(samples.max(4), 1.0, Boundary::Periodic).map_err(err)?;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let coeffs: Vec<f64> = (0..grid.len() * nc)
            .map(|_| 2.0 * rng.random::<f64>() - 1.0)
            .collect();
        let f = OrientationField::new(grid, basis.clone(), coeffs).map_err(err)?;
        let (mut asym, mut trace): (f64, f64) = (0.0, 0.0);
        for s in stress_moment(&f) {
            trace = trace.max((s[0][0] + s[1][1] + s[2][2]).abs());
            for i in 0..3 {
                for j in 0..3 {
                    asym = asym.max((s[i][j] - s[j][i]).abs());
                }
            }
        }
        let mut uniaxial: f64 = 0.0;
        let one = Grid::line(4, 1.0, Boundary::Periodic).map_err(err)?;
        for b in [-0.4, 0.1, 0.5, 1.0] {
            let f = OrientationField::from_fn(one, basis.clone(), |_, t| {
                (1.0 + b * (3.0 * t[2] * t[2] - 1.0)) / (4.0 * PI)
            });
            let s = stress_moment(&f)[0];
            let exact = [-0.4 * b, -0.4 * b, 0.8 * b];
            for i in 0..3 {
                for j in 0..3 {
                    let e = if i == j { exact[i] } else { 0.0 };
                    uniaxial = uniaxial.max((s[i][j] - e).abs());
                }
            }
        }
        let ok = asym <= 1e-10 && trace <= 1e-10 && uniaxial <= 1e-10;
        Ok((
            ok,
            format!(
                "{} samples: asymmetry {asym:.1e}, trace {trace:.1e}; uniaxial error {uniaxial:.1e}",
                grid.len()
            ),
        ))
    })
}

/// One-step renormalized residuals at each level: `(identity, z/(1+z))`.
pub fn renormalized_levels(levels: &[usize]) -> Result<Vec<(f64, f64)>, String> {
    levels
        .iter()
        .map(|&n| {
            let s = smooth(Grid::line(n, 1.0, Boundary::Periodic).map_err(err)?, 4)?;
            let st = Stepper::default();
            let next = st.step(&s, st.stable_dt(&s).map_err(err)?).map_err(err)?;
            let id = renormalized_residual(&s, &next, |z| z, |_| 1.0).map_err(err)?;
            let b = renormalized_residual(
                &s,
                &next,
                |z| z / (1.0 + z),
                |z| 1.0 / ((1.0 + z) * (1.0 + z)),
            )
            .map_err(err)?;
            Ok((id, b))
        })
        .collect()
}

/// Least-squares slope of `−log₂ r` against refinement level.
pub fn refinement_slope(r: &[f64]) -> f64 {
    let n = r.len() as f64;
    let ys: Vec<f64> = r.iter().map(|v| -v.log2()).collect();
    let mx = (n - 1.0) / 2.0;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = ys
        .iter()
        .enumerate()
        .map(|(i, y)| (i as f64 - mx) * (y - my))
        .sum();
    let sxx: f64 = (0..r.len()).map(|i| (i as f64 - mx).powi(2)).sum();
    sxy / sxx
}

pub fn renormalized() -> SuiteReport {
    timed(7, "renormalized continuity residual", || {
        let levels = renormalized_levels(&[16, 32, 64])?;
        let worst_id = levels.iter().map(|l| l.0).fold(0.0, f64::max);
        let b: Vec<f64> = levels.iter().map(|l| l.1).collect();
        let slope = refinement_slope(&b);
        Ok((
            worst_id <= 1e-12 && slope >= 0.7,
            format!(
                "b(z) = z residual {worst_id:.1e}; b(z) = z/(1+z) residuals {}, slope {slope:.2}",
                sci(&b)
            ),
        ))
    })
}

/// Suites 1–5 and 7, in order.
pub fn run_all() -> Vec<SuiteReport> {
    vec![
        quadrature(),
        conservation(),
        moment_consistency(),
        energy(),
        stress(10_000),
        renormalized(),
    ]
}
