//! Run configuration: a strict `key = value` format.
//!
//! One assignment per line, `#` starts a comment, blank lines are ignored.
//! Unknown or repeated keys are errors. Omitted keys take the defaults listed
//! in [`KEYS`]. Lists are comma separated.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::Arc;

use doifbp_core::hydro::ViscousSolver;
use doifbp_core::integrator::Stepper;
use doifbp_core::kinetics::POSITIVITY_TOL;
use doifbp_core::presets;
use doifbp_core::{Boundary, FluidState, Grid, PhysCoeffs, PressureLaw, ScalarField, SphereBasis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Every key in canonical order, with its default.
pub const KEYS: &[(&str, &str)] = &[
    ("dim", "1"),
    ("cells", "256"),
    ("lengths", "7.5"),
    ("bc", "periodic"),
    ("degree", "7"),
    ("gamma", "5"),
    ("gammas", "5, 10, 20, 40, 80"),
    ("mu", "1"),
    ("lambda", "1"),
    ("diffusion", "1"),
    ("rot_diffusion", "1"),
    ("preset", "colliding_streams"),
    ("rho0", "0.9"),
    ("amplitude", "0.5"),
    ("eta0", "0.1"),
    ("perturbation", "0"),
    ("seed", "0"),
    ("t_final", "0.5"),
    ("safety", "0.5"),
    ("record_every", "10"),
    ("snapshot_every", "0"),
    ("eps", "0.05"),
    ("output", "out"),
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("{key}: {message}")]
    Invalid { key: &'static str, message: String },
}

/// Initial-data presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// `u = −A sin(2πx/ℓ_x)` over uniform `ρ₀`, `η₀`.
    CollidingStreams,
    /// Rest state at `ρ₀`, `η₀`.
    Uniform,
    /// Smooth coupled data with aligned rods; ignores `rho0`, `amplitude` and
    /// `eta0`.
    Smooth,
}

impl Preset {
    fn name(self) -> &'static str {
        match self {
            Preset::CollidingStreams => "colliding_streams",
            Preset::Uniform => "uniform",
            Preset::Smooth => "smooth",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub cells: Vec<usize>,
    pub lengths: Vec<f64>,
    pub bc: Boundary,
    pub degree: usize,
    pub gamma: f64,
    pub gammas: Vec<f64>,
    pub coeffs: PhysCoeffs,
    pub preset: Preset,
    pub rho0: f64,
    pub amplitude: f64,
    pub eta0: f64,
    /// Relative amplitude of the seeded density noise, in `[0, 1)`.
    pub perturbation: f64,
    pub seed: u64,
    pub t_final: f64,
    pub safety: f64,
    pub record_every: usize,
    /// Write a snapshot every this many steps; `0` disables snapshots.
    pub snapshot_every: usize,
    pub eps: f64,
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        parse_config("").expect("defaults are valid")
    }
}

fn invalid(key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key,
        message: message.into(),
    }
}

/// Splits `text` into `(line, key, value)` triples.
fn lex(text: &str) -> Result<Vec<(usize, String, String)>, ConfigError> {
    let mut out: Vec<(usize, String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                message: format!("expected `key = value`, found `{body}`"),
            });
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                message: "empty key or value".into(),
            });
        }
        if !KEYS.iter().any(|(name, _)| *name == k) {
            return Err(ConfigError::UnknownKey {
                line,
                key: k.into(),
            });
        }
        if out.iter().any(|(_, seen, _)| seen == k) {
            return Err(ConfigError::Duplicate {
                line,
                key: k.into(),
            });
        }
        out.push((line, k.into(), v.into()));
    }
    Ok(out)
}

struct Values {
    entries: Vec<(usize, String, String)>,
}

impl Values {
    fn raw(&self, key: &'static str) -> (Option<usize>, &str) {
        match self.entries.iter().find(|(_, k, _)| k == key) {
            Some((line, _, v)) => (Some(*line), v),
            None => (None, default_of(key)),
        }
    }

    fn parse<T: std::str::FromStr>(&self, key: &'static str, what: &str) -> Result<T, ConfigError> {
        let (line, v) = self.raw(key);
        v.parse().map_err(|_| bad_value(line, key, what, v))
    }

    fn list<T: std::str::FromStr>(
        &self,
        key: &'static str,
        what: &str,
    ) -> Result<Vec<T>, ConfigError> {
        let (line, v) = self.raw(key);
        v.split(',')
            .map(|p| p.trim().parse().map_err(|_| bad_value(line, key, what, v)))
            .collect()
    }
}

fn bad_value(line: Option<usize>, key: &'static str, what: &str, v: &str) -> ConfigError {
    let message = format!("`{key}` must be {what}, found `{v}`");
    match line {
        Some(line) => ConfigError::Syntax { line, message },
        None => invalid(key, message),
    }
}

fn default_of(key: &str) -> &'static str {
    KEYS.iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .expect("known key")
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let v = Values {
        entries: lex(text)?,
    };
    let dim: usize = v.parse("dim", "1 or 2")?;
    let bc = match v.raw("bc").1 {
        "periodic" => Boundary::Periodic,
        "dirichlet" => Boundary::Dirichlet,
        other => {
            return Err(bad_value(
                v.raw("bc").0,
                "bc",
                "`periodic` or `dirichlet`",
                other,
            ));
        }
    };
    let preset = match v.raw("preset").1 {
        "colliding_streams" => Preset::CollidingStreams,
        "uniform" => Preset::Uniform,
        "smooth" => Preset::Smooth,
        other => {
            return Err(bad_value(
                v.raw("preset").0,
                "preset",
                "`colliding_streams`, `uniform` or `smooth`",
                other,
            ));
        }
    };
    let cfg = RunConfig {
        cells: v.list("cells", "a list of cell counts")?,
        lengths: v.list("lengths", "a list of lengths")?,
        bc,
        degree: v.parse("degree", "an integer")?,
        gamma: v.parse("gamma", "a number")?,
        gammas: v.list("gammas", "a list of numbers")?,
        coeffs: PhysCoeffs {
            mu: v.parse("mu", "a number")?,
            lambda: v.parse("lambda", "a number")?,
            diffusion: v.parse("diffusion", "a number")?,
            rot_diffusion: v.parse("rot_diffusion", "a number")?,
        },
        preset,
        rho0: v.parse("rho0", "a number")?,
        amplitude: v.parse("amplitude", "a number")?,
        eta0: v.parse("eta0", "a number")?,
        perturbation: v.parse("perturbation", "a number")?,
        seed: v.parse("seed", "a nonnegative integer")?,
        t_final: v.parse("t_final", "a number")?,
        safety: v.parse("safety", "a number")?,
        record_every: v.parse("record_every", "a positive integer")?,
        snapshot_every: v.parse("snapshot_every", "a nonnegative integer")?,
        eps: v.parse("eps", "a number")?,
        output: PathBuf::from(v.raw("output").1),
    };
    if !(dim == 1 || dim == 2) {
        return Err(invalid("dim", "dimension must be 1 or 2"));
    }
    if cfg.cells.len() != dim {
        return Err(invalid("cells", format!("expected {dim} cell counts")));
    }
    if cfg.lengths.len() != dim {
        return Err(invalid("lengths", format!("expected {dim} lengths")));
    }
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn dim(&self) -> usize {
        self.cells.len()
    }

    /// Checks every constraint the numerical core would otherwise reject later.
    pub fn validate(&self) -> Result<(), ConfigError> {
        Grid::new(&self.cells, &self.lengths, self.bc)
            .map_err(|e| invalid("cells", format!("bad grid: {e}")))?;
        if self.degree < 2 {
            return Err(invalid(
                "degree",
                "sphere truncation degree must be at least 2",
            ));
        }
        if PressureLaw::new(self.gamma).is_err() {
            return Err(invalid("gamma", "gamma must exceed 3/2"));
        }
        if self.gammas.iter().any(|&g| PressureLaw::new(g).is_err()) {
            return Err(invalid("gammas", "every gamma must exceed 3/2"));
        }
        if self.gammas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid(
                "gammas",
                "gamma values must be strictly increasing",
            ));
        }
        for (key, val) in [
            ("mu", self.coeffs.mu),
            ("lambda", self.coeffs.lambda),
            ("diffusion", self.coeffs.diffusion),
            ("rot_diffusion", self.coeffs.rot_diffusion),
        ] {
            if !(val > 0.0 && val.is_finite()) {
                return Err(invalid(key, "coefficient must be strictly positive"));
            }
        }
        if self.preset != Preset::Smooth && !(self.rho0 > 0.0 && self.rho0 < 1.0) {
            return Err(invalid(
                "rho0",
                "mean density must lie strictly between 0 and 1",
            ));
        }
        if !(self.eta0 >= 0.0 && self.eta0.is_finite()) {
            return Err(invalid("eta0", "particle density must be nonnegative"));
        }
        if !self.amplitude.is_finite() {
            return Err(invalid("amplitude", "amplitude must be finite"));
        }
        if !(0.0..1.0).contains(&self.perturbation) {
            return Err(invalid("perturbation", "perturbation must lie in [0, 1)"));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(invalid("t_final", "final time must be nonnegative"));
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(invalid("safety", "CFL safety factor must lie in (0, 1]"));
        }
        if self.record_every == 0 {
            return Err(invalid("record_every", "must be at least 1"));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(invalid("eps", "congestion band must lie in (0, 1)"));
        }
        if self.output.as_os_str().is_empty() {
            return Err(invalid("output", "output directory must not be empty"));
        }
        Ok(())
    }

    /// Canonical text: every key, in [`KEYS`] order, no comments.
    pub fn serialize(&self) -> String {
        let list_f = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        };
        let list_u = |v: &[usize]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        };
        let bc = match self.bc {
            Boundary::Periodic => "periodic",
            Boundary::Dirichlet => "dirichlet",
        };
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("dim", self.dim().to_string());
        put("cells", list_u(&self.cells));
        put("lengths", list_f(&self.lengths));
        put("bc", bc.into());
        put("degree", self.degree.to_string());
        put("gamma", self.gamma.to_string());
        put("gammas", list_f(&self.gammas));
        put("mu", self.coeffs.mu.to_string());
        put("lambda", self.coeffs.lambda.to_string());
        put("diffusion", self.coeffs.diffusion.to_string());
        put("rot_diffusion", self.coeffs.rot_diffusion.to_string());
        put("preset", self.preset.name().into());
        put("rho0", self.rho0.to_string());
        put("amplitude", self.amplitude.to_string());
        put("eta0", self.eta0.to_string());
        put("perturbation", self.perturbation.to_string());
        put("seed", self.seed.to_string());
        put("t_final", self.t_final.to_string());
        put("safety", self.safety.to_string());
        put("record_every", self.record_every.to_string());
        put("snapshot_every", self.snapshot_every.to_string());
        put("eps", self.eps.to_string());
        put("output", self.output.display().to_string());
        s
    }

    pub fn grid(&self) -> Grid {
        Grid::new(&self.cells, &self.lengths, self.bc).expect("validated grid")
    }

    pub fn stepper(&self) -> Stepper {
        Stepper {
            safety: self.safety,
            positivity_tol: POSITIVITY_TOL,
            viscous: ViscousSolver::default(),
            freeze_velocity: false,
        }
    }

    /// Initial state of the configured preset under `π = ρ^gamma`.
    pub fn initial_state(&self, gamma: f64) -> doifbp_core::Result<FluidState> {
        let grid = self.grid();
        let basis = Arc::new(SphereBasis::new(self.degree)?);
        let law = PressureLaw::new(gamma)?;
        let mut s = match self.preset {
            Preset::CollidingStreams => presets::colliding_streams(
                grid,
                self.rho0,
                self.amplitude,
                self.eta0,
                basis,
                law,
                self.coeffs,
            )?,
            Preset::Uniform => {
                presets::uniform(grid, self.rho0, self.eta0, basis, law, self.coeffs)?
            }
            Preset::Smooth => presets::smooth(grid, basis, law, self.coeffs)?,
        };
        if self.perturbation > 0.0 {
            s.rho = perturb(&s.rho, self.perturbation, self.seed);
        }
        Ok(s)
    }
}

/// Multiplies each cell by `1 + p ξ`, `ξ` uniform in `[−1, 1)`, then rescales so
/// the total mass is unchanged.
fn perturb(rho: &ScalarField, p: f64, seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noisy = rho.map(|r| r * (1.0 + p * (2.0 * rng.random::<f64>() - 1.0)));
    let scale = rho.integral() / noisy.integral();
    if scale.is_finite() {
        noisy.map(|r| r * scale)
    } else {
        noisy
    }
}

/// [`RunConfig::serialize`] applied to the parsed text.
pub fn normalize(text: &str) -> Result<String, ConfigError> {
    parse_config(text).map(|c| c.serialize())
}
