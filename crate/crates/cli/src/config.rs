//! Run configuration: file formats, command-line overrides and validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use qpmsa::msa::ScaleSchedule;
use qpmsa::{FrequencyVector, LatticeRegion, PotentialProfile};

use crate::CliError;

/// The shipped d = 1 configuration; the base for runs without `--config`.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.toml");

/// Dense eigensolves above this many sites are refused.
pub const MAX_SITES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Assemble,
    Msa,
    Curve,
    Ids,
    Moments,
    VerifyAll,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialId {
    Cosine,
    PerturbedCosine,
}

/// How E* is fixed when no explicit value is given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EStarMode {
    /// the eigenvalue of the target box at θ* nearest v(θ*)
    Reference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub dim: usize,
    pub epsilon: f64,
    pub potential: PotentialId,
    /// frequency components; the built-in vector for d = 1, 2 when absent
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    /// Diophantine constant; calibrated on |x|₁ ≤ 100 when absent
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub theta_star: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_star_mode: Option<EStarMode>,
    /// sites per axis of the box Λ, lowest corner at −side/2
    pub side: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleConfig {
    pub delta0: Option<f64>,
    pub epsilon0: Option<f64>,
    pub l1: i64,
    pub max_length: Option<i64>,
    pub delta_overrides: Vec<f64>,
    pub stages: usize,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            delta0: None,
            epsilon0: None,
            l1: 6,
            max_length: None,
            delta_overrides: Vec::new(),
            stages: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CurveConfig {
    /// stage whose first block is traced
    pub stage: usize,
    pub half_width: f64,
    /// half-width of the energy window about E*
    pub window: f64,
    pub base_points: usize,
    pub fd_step: f64,
}

impl Default for CurveConfig {
    fn default() -> Self {
        Self {
            stage: 1,
            half_width: 0.002,
            window: 0.05,
            base_points: 512,
            fd_step: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdsConfig {
    /// sites per axis; the target side when absent
    pub side: Option<i64>,
    /// coupling for the scan; the model ε when absent
    pub epsilon: Option<f64>,
    /// phases averaged over; θ* alone when empty
    pub thetas: Vec<f64>,
    pub eta_max: f64,
    pub eta_min: f64,
    pub points: usize,
    pub min_slope: f64,
}

impl Default for IdsConfig {
    fn default() -> Self {
        Self {
            side: None,
            epsilon: None,
            thetas: Vec::new(),
            eta_max: 1e-2,
            eta_min: 1e-6,
            points: 17,
            min_slope: 0.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MomentsConfig {
    pub theta: f64,
    pub side: i64,
    pub q: f64,
    pub arithmetic_a: f64,
    pub exponent: u32,
    pub membership_radius: u64,
}

impl Default for MomentsConfig {
    fn default() -> Self {
        Self {
            theta: 0.25,
            side: 200,
            q: 2.0,
            arithmetic_a: 0.1,
            exponent: 2,
            membership_radius: 1000,
        }
    }
}

/// Sizes of the randomized lemma sweeps run by `verify-all`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub counting: usize,
    pub trials: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            counting: 1000,
            trials: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub model: ModelConfig,
    pub target: TargetConfig,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub curve: CurveConfig,
    #[serde(default)]
    pub ids: IdsConfig,
    #[serde(default)]
    pub moments: MomentsConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// concurrent solves; all available cores when absent
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("qpmsa-out")
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str, json: bool, origin: &str) -> Result<T, CliError> {
    if json {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))
    } else {
        toml::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        parse(&read(path)?, is_json(path), &path.display().to_string())
    }

    pub fn builtin() -> Self {
        parse(DEFAULT_CONFIG, false, "built-in config").expect("the shipped config parses")
    }

    /// Replaces the schedule section with the contents of a schedule file.
    pub fn load_schedule(&mut self, path: &Path) -> Result<(), CliError> {
        self.schedule = parse(&read(path)?, is_json(path), &path.display().to_string())?;
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        let m = &self.model;
        if m.dim == 0 {
            return bad("model.dim must be at least 1".into());
        }
        if !(m.epsilon.is_finite() && m.epsilon >= 0.0) {
            return bad(format!("model.epsilon = {} must be finite and ≥ 0", m.epsilon));
        }
        if m.epsilon == 0.0 && self.experiment != Experiment::Assemble {
            return bad("model.epsilon = 0 is only meaningful for the assemble experiment".into());
        }
        if m.omega.as_ref().is_some_and(|w| w.len() != m.dim) {
            return bad(format!("model.omega needs {} components", m.dim));
        }
        if m.omega.is_none() && m.dim > 2 {
            return bad(format!("no built-in frequency for d = {}; set model.omega", m.dim));
        }
        let t = &self.target;
        if !t.theta_star.is_finite() {
            return bad("target.theta_star must be finite".into());
        }
        if t.e_star.is_none() && t.e_star_mode.is_none() {
            return bad("E* is missing: set target.e_star or target.e_star_mode = \"reference\"".into());
        }
        if t.e_star.is_some() && t.e_star_mode.is_some() {
            return bad("set only one of target.e_star and target.e_star_mode".into());
        }
        check_side("target.side", t.side, m.dim)?;
        let s = &self.schedule;
        if s.delta0.is_some() && s.epsilon0.is_some() {
            return bad("set only one of schedule.delta0 and schedule.epsilon0".into());
        }
        if s.l1 < 1 {
            return bad("schedule.l1 must be at least 1".into());
        }
        if s.stages > 10 {
            return bad("schedule.stages is limited to 10".into());
        }
        if s.delta_overrides.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
            return bad("schedule.delta_overrides must lie in (0, 1)".into());
        }
        let c = &self.curve;
        if c.stage == 0 || !(c.half_width > 0.0) || !(c.window > 0.0) || c.base_points < 2 || !(c.fd_step > 0.0) {
            return bad("curve needs stage ≥ 1, positive half_width, window and fd_step, and base_points ≥ 2".into());
        }
        let i = &self.ids;
        if !(i.eta_min > 0.0 && i.eta_max > i.eta_min) || i.points < 2 {
            return bad("ids needs 0 < eta_min < eta_max and points ≥ 2".into());
        }
        if i.epsilon.is_some_and(|e| !(e.is_finite() && e >= 0.0)) {
            return bad("ids.epsilon must be finite and ≥ 0".into());
        }
        let all = self.experiment == Experiment::VerifyAll;
        if all || self.experiment == Experiment::Ids {
            check_side("ids.side", self.ids_side(), m.dim)?;
        }
        let mo = &self.moments;
        if !(mo.q > 0.0) || !(mo.arithmetic_a > 0.0) || !mo.theta.is_finite() {
            return bad("moments needs q > 0, arithmetic_a > 0 and a finite theta".into());
        }
        if all || self.experiment == Experiment::Moments {
            check_side("moments.side", mo.side, m.dim)?;
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        Ok(())
    }

    pub fn ids_side(&self) -> i64 {
        self.ids.side.unwrap_or(self.target.side)
    }

    pub fn region(&self, side: i64) -> LatticeRegion {
        LatticeRegion::centered_box(self.model.dim, side)
    }

    pub fn potential(&self) -> PotentialProfile {
        match self.model.potential {
            PotentialId::Cosine => PotentialProfile::cosine(),
            PotentialId::PerturbedCosine => PotentialProfile::perturbed_cosine(),
        }
    }

    pub fn frequency(&self) -> Result<FrequencyVector, CliError> {
        let m = &self.model;
        let Some(w) = &m.omega else {
            return Ok(FrequencyVector::default_for_dim(m.dim)?);
        };
        let tau = m.tau.unwrap_or(m.dim as f64 + 1.5);
        let freq = match m.gamma {
            Some(g) => FrequencyVector::new(w.clone(), tau, g)?.certified(100)?,
            None => FrequencyVector::calibrated(w.clone(), tau, 100, 0.9)?,
        };
        Ok(freq)
    }

    pub fn schedule(&self) -> Result<ScaleSchedule, CliError> {
        let s = &self.schedule;
        let base = match (s.delta0, s.epsilon0) {
            (_, Some(e0)) => ScaleSchedule::from_epsilon0(e0, s.l1, self.model.epsilon)?,
            (d0, None) => ScaleSchedule::from_delta0(d0.unwrap_or(0.01), s.l1, self.model.epsilon)?,
        };
        let base = base.with_delta_overrides(s.delta_overrides.clone());
        Ok(match s.max_length {
            Some(m) => base.with_max_length(m),
            None => base,
        })
    }
}

fn check_side(name: &str, side: i64, dim: usize) -> Result<(), CliError> {
    if side < 1 {
        return Err(CliError::Config(format!("{name} must be at least 1")));
    }
    let sites = (side as f64).powi(dim as i32);
    if sites > MAX_SITES as f64 {
        return Err(CliError::Config(format!(
            "{name} = {side} in d = {dim} gives {sites} sites, above the dense limit {MAX_SITES}"
        )));
    }
    Ok(())
}
