//! TOML run configuration.
//!
//! Every physical quantity carries its unit in the key name. Angles are
//! degrees unless `angles_in_degrees = false`, in which case they are
//! radians. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use surfacelink::channel::PropagationParams;
use surfacelink::experiments::{ConfigPolicy, ModelSpec, SweepKind, SweepPlan};
use surfacelink::geometry::{Scene, SurfaceOrientation, SurfaceSpec, Vec3};
use surfacelink::link::DiscreteSettings;
use surfacelink::oracle::{AngleGrid, QuadratureRule, QuadratureSpec};
use surfacelink::scalar::wavelength_from_frequency;
use surfacelink::scattering::{DiffractionParams, RcsModelKind};
use surfacelink::summation::Summation;

use crate::CliError;

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "yes")]
    pub angles_in_degrees: bool,
    pub surface: SurfaceSection,
    #[serde(default)]
    pub propagation: PropagationSection,
    #[serde(default)]
    pub diffraction: DiffractionSection,
    #[serde(default)]
    pub summation: Summation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<SceneSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rcs: Option<RcsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimize: Option<OptimizeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSection {
    pub n_v: usize,
    pub n_h: usize,
    /// Half a wavelength when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_v_meters: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_h_meters: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagationSection {
    pub frequency_hertz: f64,
    pub beta0: f64,
    pub gamma: f64,
    pub p_t_watts: f64,
}

impl Default for PropagationSection {
    fn default() -> Self {
        Self { frequency_hertz: 5.8e9, beta0: 1.0, gamma: 2.0, p_t_watts: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffractionSection {
    pub mu: f64,
}

impl Default for DiffractionSection {
    fn default() -> Self {
        Self { mu: DiffractionParams::<f64>::DEFAULT_MU }
    }
}

/// Either explicit positions or a symmetric `distance_meters` + `zenith`
/// placement (Tx at azimuth 180 deg, Rx at azimuth 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_meters: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rx_meters: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_meters: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zenith: Option<f64>,
    /// Surface normal in world coordinates; `+z` when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface_normal: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RcsSection {
    /// `[theta_i, phi_i, theta_s, phi_s]` rows.
    #[serde(default)]
    pub quads: Vec<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<RcsGrid>,
}

/// Scattered-direction grid at fixed incidence: `theta_s` from 0 below 90,
/// `phi_s` from -180 below 180, both at `step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RcsGrid {
    pub theta_i: f64,
    pub phi_i: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKindName {
    Distance,
    Angle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub kind: SweepKindName,
    pub n_steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zenith: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_min_meters: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_max_meters: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_meters: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_max: Option<f64>,
    #[serde(default = "default_max_sweeps")]
    pub max_sweeps: usize,
    pub models: Vec<ModelEntry>,
}

fn default_max_sweeps() -> usize {
    10
}

fn default_levels() -> usize {
    2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    Metal,
    Ris,
    Tang,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyName {
    MetalRotated,
    MetalFlat,
    RisContinuous,
    RisDiscrete,
    RisUniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelEntry {
    pub label: String,
    pub model: ModelName,
    pub policy: PolicyName,
    /// Overrides `diffraction.mu` for this model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    /// Phase levels for `ris_discrete`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSection {
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default = "default_max_sweeps")]
    pub max_sweeps: usize,
    /// One `alpha` per phase level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<f64>>,
    /// A `configuration.csv` from an earlier run, relative to the config
    /// file; its power is reported alongside the optimizer stages.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_configuration: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    #[serde(default = "default_nodes")]
    pub n_points_x: usize,
    #[serde(default = "default_nodes")]
    pub n_points_y: usize,
    #[serde(default = "default_rule")]
    pub rule: QuadratureRule,
    /// Grid steps and elevation cap; 5, 5 and 85 degrees when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_max: Option<f64>,
    /// Square cell edges in wavelengths; the surface cell when empty.
    #[serde(default = "default_cell_sizes")]
    pub cell_sizes_wavelengths: Vec<f64>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_nodes() -> usize {
    64
}
fn default_rule() -> QuadratureRule {
    QuadratureRule::GaussLegendre
}
fn default_cell_sizes() -> Vec<f64> {
    vec![0.25, 0.5, 1.0]
}
fn default_threshold() -> f64 {
    1e-3
}

fn config_err(field: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {reason}"))
}

fn required<T: Copy>(value: Option<T>, field: &str) -> Result<T, CliError> {
    value.ok_or_else(|| config_err(field, "required"))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is plain data")
    }

    /// Copy with defaults made explicit (cell sizes filled in).
    pub fn resolved(&self) -> Result<Self, CliError> {
        let mut out = self.clone();
        let spec = self.surface_spec()?;
        out.surface.d_v_meters = Some(spec.d_v());
        out.surface.d_h_meters = Some(spec.d_h());
        if self.oracle.is_some() {
            let g = self.oracle_grid()?;
            let o = out.oracle.as_mut().expect("checked above");
            o.theta_step = Some(self.angle_out(g.theta_step));
            o.phi_step = Some(self.angle_out(g.phi_step));
            o.theta_max = Some(self.angle_out(g.theta_max));
        }
        Ok(out)
    }

    /// Re-runs every domain check reachable from the config.
    pub fn validate(&self) -> Result<(), CliError> {
        self.params()?;
        self.surface_spec()?;
        self.diffraction()?;
        if self.scene.is_some() {
            self.scene()?;
        }
        if let Some(r) = &self.rcs {
            if r.quads.is_empty() && r.grid.is_none() {
                return Err(config_err("rcs", "give `quads` or `grid`"));
            }
            if let Some(g) = &r.grid {
                if !(g.step > 0.0) {
                    return Err(config_err("rcs.grid.step", "must be positive"));
                }
            }
        }
        if self.sweep.is_some() {
            self.sweep_plan()?;
        }
        if self.optimize.is_some() {
            self.discrete_settings()?;
        }
        if let Some(o) = &self.oracle {
            self.quadrature()?;
            let g = self.oracle_grid()?;
            if !(g.theta_step > 0.0 && g.phi_step > 0.0) {
                return Err(config_err("oracle.theta_step", "grid steps must be positive"));
            }
            if !(g.theta_max >= 0.0 && g.theta_max < std::f64::consts::FRAC_PI_2) {
                return Err(config_err("oracle.theta_max", "must lie in [0, 90) degrees"));
            }
            if o.cell_sizes_wavelengths.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
                return Err(config_err("oracle.cell_sizes_wavelengths", "entries must be positive"));
            }
            if !(o.threshold > 0.0) {
                return Err(config_err("oracle.threshold", "must be positive"));
            }
        }
        Ok(())
    }

    /// Converts a configured angle to radians.
    pub fn angle(&self, value: f64) -> f64 {
        if self.angles_in_degrees {
            value.to_radians()
        } else {
            value
        }
    }

    /// Converts radians back to the configured angle unit.
    pub fn angle_out(&self, radians: f64) -> f64 {
        if self.angles_in_degrees {
            radians.to_degrees()
        } else {
            radians
        }
    }

    pub fn params(&self) -> Result<PropagationParams<f64>, CliError> {
        let p = &self.propagation;
        if !(p.frequency_hertz > 0.0 && p.frequency_hertz.is_finite()) {
            return Err(config_err("propagation.frequency_hertz", "must be positive and finite"));
        }
        Ok(PropagationParams::new(wavelength_from_frequency(p.frequency_hertz), p.beta0, p.gamma, p.p_t_watts)?)
    }

    pub fn lambda(&self) -> Result<f64, CliError> {
        Ok(self.params()?.lambda())
    }

    pub fn surface_spec(&self) -> Result<SurfaceSpec<f64>, CliError> {
        let half = self.lambda()? / 2.0;
        let s = &self.surface;
        Ok(SurfaceSpec::new(s.n_v, s.n_h, s.d_v_meters.unwrap_or(half), s.d_h_meters.unwrap_or(half))?)
    }

    pub fn diffraction(&self) -> Result<DiffractionParams<f64>, CliError> {
        Ok(DiffractionParams::new(self.diffraction.mu)?)
    }

    pub fn scene(&self) -> Result<Scene<f64>, CliError> {
        let s = self.scene.as_ref().ok_or_else(|| config_err("scene", "section required"))?;
        let (tx, rx) = match (s.tx_meters, s.rx_meters, s.distance_meters, s.zenith) {
            (Some(t), Some(r), None, None) => (Vec3::new(t[0], t[1], t[2]), Vec3::new(r[0], r[1], r[2])),
            (None, None, Some(d), Some(z)) => {
                if !(d > 0.0) {
                    return Err(config_err("scene.distance_meters", "must be positive"));
                }
                surfacelink::experiments::symmetric_positions(d, self.angle(z))
            }
            _ => {
                return Err(config_err(
                    "scene",
                    "give either tx_meters and rx_meters, or distance_meters and zenith",
                ))
            }
        };
        let orientation = match s.surface_normal {
            None => SurfaceOrientation::identity(),
            Some(n) => SurfaceOrientation::from_normal(Vec3::new(n[0], n[1], n[2]), Vec3::unit_x())
                .ok_or_else(|| config_err("scene.surface_normal", "must be a nonzero finite vector"))?,
        };
        // placement problems are scene violations, reported by the caller
        Ok(Scene { tx_pos: tx, rx_pos: rx, surface: self.surface_spec()?, orientation })
    }

    fn model_kind(&self, entry: &ModelEntry, field: &str) -> Result<RcsModelKind<f64>, CliError> {
        if entry.mu.is_some() && entry.model != ModelName::Ris {
            return Err(config_err(field, "`mu` applies only to the ris model"));
        }
        Ok(match entry.model {
            ModelName::Metal => RcsModelKind::Metal,
            ModelName::Tang => RcsModelKind::TangCosine,
            ModelName::Ris => RcsModelKind::Ris(match entry.mu {
                Some(mu) => DiffractionParams::new(mu)?,
                None => self.diffraction()?,
            }),
        })
    }

    pub fn sweep_plan(&self) -> Result<SweepPlan<f64>, CliError> {
        let s = self.sweep.as_ref().ok_or_else(|| config_err("sweep", "section required"))?;
        let kind = match s.kind {
            SweepKindName::Distance => SweepKind::Distance {
                zenith: self.angle(required(s.zenith, "sweep.zenith")?),
                d_min: required(s.d_min_meters, "sweep.d_min_meters")?,
                d_max: required(s.d_max_meters, "sweep.d_max_meters")?,
                n_steps: s.n_steps,
            },
            SweepKindName::Angle => SweepKind::Angle {
                distance: required(s.distance_meters, "sweep.distance_meters")?,
                z_min: self.angle(required(s.z_min, "sweep.z_min")?),
                z_max: self.angle(required(s.z_max, "sweep.z_max")?),
                n_steps: s.n_steps,
            },
        };
        let mut models = Vec::with_capacity(s.models.len());
        for (i, m) in s.models.iter().enumerate() {
            let field = format!("sweep.models[{i}]");
            if m.label.is_empty() || !m.label.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(config_err(&field, "label must be non-empty ASCII letters, digits, '_' or '-'"));
            }
            if m.levels.is_some() && m.policy != PolicyName::RisDiscrete {
                return Err(config_err(&field, "`levels` applies only to ris_discrete"));
            }
            let policy = match m.policy {
                PolicyName::MetalRotated => ConfigPolicy::MetalRotated,
                PolicyName::MetalFlat => ConfigPolicy::MetalFlat,
                PolicyName::RisContinuous => ConfigPolicy::RisOptimizedContinuous,
                PolicyName::RisUniform => ConfigPolicy::RisUniform,
                PolicyName::RisDiscrete => ConfigPolicy::RisOptimizedDiscrete { levels: m.levels.unwrap_or(2) },
            };
            models.push(ModelSpec::new(m.label.clone(), self.model_kind(m, &field)?, policy));
        }
        let mut plan = SweepPlan::new(kind, models);
        plan.max_sweeps = s.max_sweeps;
        plan.summation = self.summation;
        plan.validate()?;
        Ok(plan)
    }

    pub fn discrete_settings(&self) -> Result<DiscreteSettings<f64>, CliError> {
        let o = self.optimize.as_ref().ok_or_else(|| config_err("optimize", "section required"))?;
        if o.levels < 2 {
            return Err(config_err("optimize.levels", "need at least two phase levels"));
        }
        if o.max_sweeps == 0 {
            return Err(config_err("optimize.max_sweeps", "must be positive"));
        }
        if let Some(a) = &o.amplitudes {
            if a.len() != o.levels {
                return Err(config_err("optimize.amplitudes", "one amplitude per level required"));
            }
            if a.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(config_err("optimize.amplitudes", "amplitudes must lie in [0, 1]"));
            }
        }
        let mut s = DiscreteSettings::new(o.levels, o.max_sweeps);
        s.amplitudes = o.amplitudes.clone();
        Ok(s)
    }

    pub fn quadrature(&self) -> Result<QuadratureSpec, CliError> {
        let o = self.oracle.as_ref().ok_or_else(|| config_err("oracle", "section required"))?;
        Ok(QuadratureSpec::new(o.n_points_x, o.n_points_y, o.rule)?)
    }

    pub fn oracle_grid(&self) -> Result<AngleGrid<f64>, CliError> {
        let o = self.oracle.as_ref().ok_or_else(|| config_err("oracle", "section required"))?;
        let pick = |v: Option<f64>, default_deg: f64| v.map_or(default_deg.to_radians(), |v| self.angle(v));
        Ok(AngleGrid {
            theta_step: pick(o.theta_step, 5.0),
            phi_step: pick(o.phi_step, 5.0),
            theta_max: pick(o.theta_max, 85.0),
            collapse_pole: true,
        })
    }
}
