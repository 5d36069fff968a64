//! Simulation configuration, read from a flat `key = value` (TOML) document.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::grid::Grid;
use super::scheme::{Boundary, Frame};
use crate::dimension::Dim;
use crate::error::{Error, Result};
use crate::profile::{CutoffSpec, Profile, ProfileParams};

/// Initial field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitSpec {
    /// `Psi(., s0)` plus the unstable-mode perturbation given by `dvec`.
    Profile,
    /// Spatially constant value.
    Constant(f64),
}

impl std::str::FromStr for InitSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "profile" {
            return Ok(InitSpec::Profile);
        }
        if s == "zero" {
            return Ok(InitSpec::Constant(0.0));
        }
        match s.strip_prefix("constant:") {
            Some(v) => v
                .trim()
                .parse()
                .map(InitSpec::Constant)
                .map_err(|_| Error::Config(format!("bad constant in init {s:?}"))),
            None => Err(Error::Config(format!("unknown init {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub d: Dim,
    /// Number of grid intervals; derived from `dy` when absent.
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub dy: f64,
    /// Outer radius; defaults to `4 K (s0 + horizon)^{1/2l}` in the
    /// self-similar frame.
    pub y_max: Option<f64>,
    /// Geometric growth factor of consecutive intervals (1 = uniform).
    pub stretch: f64,
    /// Upper bound on the time step; the CFL limit may shrink it further.
    pub dt: Option<f64>,
    pub cfl: f64,
    pub s0: f64,
    pub t0: f64,
    pub horizon: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "K")]
    pub k: f64,
    /// Scale of the cutoff inside the ansatz correction `Psi_hat`
    /// (1 reproduces `chi_0(xi)`).
    pub ansatz_k: f64,
    pub dvec: Vec<f64>,
    pub frame: Frame,
    /// `neumann`, `profile` or `value:<v>`; the frame's default when absent.
    pub boundary: Option<String>,
    /// `profile`, `zero` or `constant:<v>`.
    pub init: String,
    /// Physical frame with `init = profile`: the self-similar time the
    /// initial field is taken from. Blowup is then expected at
    /// `t0 + exp(-s_init)`.
    pub s_init: f64,
    pub output_dir: Option<PathBuf>,
    /// Interval between diagnostics slices.
    pub cadence: f64,
    /// Write a snapshot every this many slices (0: final state only).
    pub snapshot_every: usize,
    pub diagnostics: bool,
    /// A bound exceeded by this factor stops the run.
    pub escape_factor: f64,
    /// `sup |v|` above this stops the run.
    pub escape_sup: f64,
    /// Half-width of the "boundary" band around slack ratio 1.
    pub boundary_band: f64,
    /// Constant in the pointwise bound check.
    pub pointwise_c: f64,
    /// Stop as soon as an unstable mode reaches its bound.
    pub stop_on_exit: bool,
    /// Lowest unstable mode that counts as an exit.
    pub exit_first_mode: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            d: Dim::Four,
            n: None,
            dy: 0.025,
            y_max: None,
            stretch: 1.0,
            dt: None,
            cfl: 0.4,
            s0: 50.0,
            t0: 0.0,
            horizon: 10.0,
            a: 20.0,
            k: 10.0,
            ansatz_k: 1.0,
            dvec: Vec::new(),
            frame: Frame::SelfSimilar,
            boundary: None,
            init: "profile".into(),
            s_init: 3.0,
            output_dir: None,
            cadence: 0.1,
            snapshot_every: 0,
            diagnostics: true,
            escape_factor: 2.0,
            escape_sup: 10.0,
            boundary_band: 0.05,
            pointwise_c: 1.0,
            stop_on_exit: false,
            exit_first_mode: 0,
        }
    }
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn dim(&self) -> Dim {
        self.d
    }

    /// The ansatz used for initial data and decomposition.
    pub fn profile(&self) -> Result<Profile> {
        let mut cutoff = CutoffSpec::new(self.ansatz_k)?;
        cutoff.smoothness = CutoffSpec::default().smoothness;
        Profile::with(ProfileParams::new(self.d)?, cutoff)
    }

    pub fn start_time(&self) -> f64 {
        match self.frame {
            Frame::SelfSimilar => self.s0,
            Frame::Physical => self.t0,
        }
    }

    pub fn end_time(&self) -> f64 {
        self.start_time() + self.horizon
    }

    pub fn init_spec(&self) -> Result<InitSpec> {
        self.init.parse()
    }

    pub fn boundary_spec(&self) -> Result<Boundary> {
        match &self.boundary {
            Some(b) => b.parse(),
            None => Ok(match self.frame {
                Frame::SelfSimilar => Boundary::Profile,
                Frame::Physical => Boundary::Neumann,
            }),
        }
    }

    /// Perturbation coefficients padded with zeros to `l` entries.
    pub fn dvec_padded(&self) -> Vec<f64> {
        let l = self.d.ell() as usize;
        let mut v = self.dvec.clone();
        v.resize(l, 0.0);
        v
    }

    pub fn resolved_y_max(&self) -> f64 {
        match (self.y_max, self.frame) {
            (Some(y), _) => y,
            (None, Frame::SelfSimilar) => {
                4.0 * self.k * self.end_time().powf(1.0 / (2.0 * self.d.ell_f64()))
            }
            (None, Frame::Physical) => 1.0,
        }
    }

    pub fn intervals(&self) -> usize {
        self.n
            .unwrap_or_else(|| (self.resolved_y_max() / self.dy).round().max(1.0) as usize)
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        let (n, y) = (self.intervals(), self.resolved_y_max());
        Ok(Arc::new(if self.stretch == 1.0 {
            Grid::uniform(n, y)?
        } else {
            Grid::geometric(n, y, self.stretch)?
        }))
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        if let Some(dt) = self.dt {
            pos("dt", dt)?;
        }
        pos("cfl", self.cfl)?;
        pos("horizon", self.horizon)?;
        pos("cadence", self.cadence)?;
        pos("A", self.a)?;
        pos("K", self.k)?;
        pos("ansatz_k", self.ansatz_k)?;
        pos("dy", self.dy)?;
        pos("escape_factor", self.escape_factor)?;
        pos("escape_sup", self.escape_sup)?;
        if self.cfl > 1.0 {
            return Err(Error::Config(format!("cfl must be at most 1, got {}", self.cfl)));
        }
        if self.frame == Frame::SelfSimilar {
            pos("s0", self.s0)?;
        } else {
            pos("s_init", self.s_init)?;
        }
        if !self.t0.is_finite() {
            return Err(Error::Config("t0 must be finite".into()));
        }
        let l = self.d.ell() as usize;
        if self.dvec.len() > l {
            return Err(Error::Config(format!(
                "dvec has {} entries but d = {} has only {l} unstable modes",
                self.dvec.len(),
                self.d
            )));
        }
        if self.dvec.iter().any(|x| !(x.abs() <= 1.0)) {
            return Err(Error::Config("dvec entries must lie in [-1, 1]".into()));
        }
        if self.exit_first_mode >= l {
            return Err(Error::Config(format!(
                "exit_first_mode {} leaves no unstable mode (l = {l})",
                self.exit_first_mode
            )));
        }
        self.init_spec()?;
        self.boundary_spec()?;
        if self.frame == Frame::Physical && self.boundary_spec()? == Boundary::Profile {
            return Err(Error::Config(
                "profile-matched boundary is defined in the self-similar frame only".into(),
            ));
        }
        if let Some(y) = self.y_max {
            pos("y_max", y)?;
        }
        if self.diagnostics && self.frame == Frame::SelfSimilar {
            let need = 4.0 * self.k * self.s0.powf(1.0 / (2.0 * self.d.ell_f64()));
            let y = self.resolved_y_max();
            if y < need * (1.0 - 1e-12) {
                return Err(Error::Config(format!(
                    "y_max = {y} is below 4 K s0^(1/2l) = {need} required by the diagnostics"
                )));
            }
        }
        if self.intervals() < super::grid::MIN_INTERVALS {
            return Err(Error::Config(format!(
                "grid needs at least {} intervals",
                super::grid::MIN_INTERVALS
            )));
        }
        Ok(())
    }
}
