//! Run configuration: a strict TOML schema with defaults for every key.
//!
//! ```toml
//! [case]
//! id = "tank"                 # rti | cavity | tank
//! [case.tank]                 # per-case geometry and material overrides
//! target_particles = 6000
//!
//! [turbulence]
//! model = "k_equation"        # none | smagorinsky | k_equation
//!
//! [diffusion]                 # overrides on top of the case's own settings
//! closure = "gdh"
//! Sc_T = 0.2
//!
//! [adm1]
//! every_n_steps = 1
//!
//! [run]
//! duration_s = 200.0
//! dt_s = "auto"
//!
//! [output]
//! dir = "out"
//!
//! [[variants]]                # extra lanes sharing the same flow
//! name = "sct5"
//! diffusion = { Sc_T = 5.0 }
//! ```
//!
//! Unknown keys, type mismatches and out-of-range values are rejected with
//! the dotted key path.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adm1::{Adm1Params, GasHeadspace, InhibitionForm};
use crate::cases::{self, CaseBuild, ChemistryLayout, CaseId, CavityParams, LaneSpec, ModelSwitches, RtiParams, TankParams};
use crate::coupling::Simulation;
use crate::transport::{Closure, DiffusionConfig, RobertsNormalization};
use crate::turbulence::{TurbulenceModel, C_I, DEFAULT_CS};
use crate::{Error, Result};

/// Name of the lane configured by `[diffusion]`.
pub const PRIMARY_LANE: &str = "run";
/// Name of the reaction-only lane used as the comparison baseline.
pub const BASELINE_LANE: &str = "baseline";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub case: CaseSection,
    pub turbulence: TurbulenceSection,
    pub diffusion: DiffusionOverrides,
    pub adm1: Adm1Section,
    pub run: RunSection,
    pub output: OutputSection,
    pub variants: Vec<Variant>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CaseSection {
    pub id: CaseId,
    pub rti: RtiParams,
    pub cavity: CavityParams,
    pub tank: TankParams,
}

impl Default for CaseSection {
    fn default() -> Self {
        Self {
            id: CaseId::Tank,
            rti: RtiParams::default(),
            cavity: CavityParams::default(),
            tank: TankParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TurbulenceSection {
    pub model: TurbulenceModel,
    #[serde(rename = "Cs")]
    pub cs: f64,
    #[serde(rename = "C_I")]
    pub ci: f64,
}

impl Default for TurbulenceSection {
    fn default() -> Self {
        Self {
            model: TurbulenceModel::KEquation,
            cs: DEFAULT_CS,
            ci: C_I,
        }
    }
}

/// Partial diffusion settings; unset keys keep the underlying value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct DiffusionOverrides {
    pub closure: Option<Closure>,
    #[serde(rename = "Sc")]
    pub sc: Option<f64>,
    #[serde(rename = "Sc_T")]
    pub sc_t: Option<f64>,
    #[serde(rename = "Pr")]
    pub pr: Option<f64>,
    #[serde(rename = "Pr_T")]
    pub pr_t: Option<f64>,
    pub thermal_enabled: Option<bool>,
    pub chemical_enabled: Option<bool>,
    pub nu: Option<f64>,
    pub conductivity: Option<f64>,
    pub roberts_normalization: Option<RobertsNormalization>,
    pub every_n_steps: Option<usize>,
}

impl DiffusionOverrides {
    pub fn apply(&self, base: &DiffusionConfig) -> DiffusionConfig {
        let mut d = base.clone();
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { d.$f = v; } )* };
        }
        set!(closure, sc, sc_t, pr, pr_t, thermal_enabled, chemical_enabled, roberts_normalization, every_n_steps);
        if self.nu.is_some() {
            d.nu = self.nu;
        }
        if self.conductivity.is_some() {
            d.conductivity = self.conductivity;
        }
        d
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Adm1Section {
    /// Only meaningful for the tank.
    pub enabled: bool,
    pub every_n_steps: usize,
    pub inhibition_form: InhibitionForm,
    /// Replacement for the bundled parameter table.
    pub params_file: Option<PathBuf>,
}

impl Default for Adm1Section {
    fn default() -> Self {
        Self {
            enabled: true,
            every_n_steps: 1,
            inhibition_form: InhibitionForm::Standard,
            params_file: None,
        }
    }
}

/// `run.dt_s`: a number of seconds or `"auto"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeStepSetting {
    Fixed(f64),
    Named(String),
}

impl Default for TimeStepSetting {
    fn default() -> Self {
        TimeStepSetting::Named("auto".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    /// Defaults to the case's own duration.
    pub duration_s: Option<f64>,
    pub dt_s: TimeStepSetting,
    pub observe_every_n_steps: u64,
    /// Seeds the initial position jitter.
    pub seed: u64,
    /// Uniform random offset of each fluid particle, as a fraction of the
    /// lattice spacing per axis; 0 keeps the exact lattice.
    pub jitter: f64,
    pub flow_enabled: bool,
    /// Adds a lane without any diffusion as the comparison baseline.
    pub baseline: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            duration_s: None,
            dt_s: TimeStepSetting::default(),
            observe_every_n_steps: 100,
            seed: 0,
            jitter: 0.0,
            flow_enabled: true,
            baseline: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Falls back to `$DSPH_OUT_DIR`, then `./out`.
    pub dir: Option<PathBuf>,
    /// Snapshot cadence in steps; 0 writes only the initial and final state.
    pub snapshot_every_n_steps: u64,
    pub snapshots: bool,
    pub vtk: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: None,
            snapshot_every_n_steps: 0,
            snapshots: true,
            vtk: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variant {
    pub name: String,
    #[serde(default)]
    pub diffusion: DiffusionOverrides,
}

/// Every value a run uses, after defaults and overrides are resolved.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectiveConfig {
    pub case: EffectiveCase,
    pub turbulence: TurbulenceSection,
    pub diffusion: DiffusionConfig,
    pub adm1: Adm1Section,
    pub run: EffectiveRun,
    pub output: OutputSection,
    pub variants: Vec<EffectiveVariant>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectiveCase {
    pub id: CaseId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rti: Option<RtiParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cavity: Option<CavityParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tank: Option<TankParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectiveRun {
    pub duration_s: f64,
    pub dt_s: TimeStepSetting,
    pub observe_every_n_steps: u64,
    pub seed: u64,
    pub jitter: f64,
    pub flow_enabled: bool,
    pub baseline: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectiveVariant {
    pub name: String,
    pub diffusion: DiffusionConfig,
}

fn path_error(e: serde_path_to_error::Error<toml::de::Error>) -> Error {
    let path = e.path().to_string();
    let inner = e.into_inner();
    let message = inner.message().to_string();
    let key = match message.strip_prefix("unknown field `").and_then(|r| r.split('`').next()) {
        Some(field) if path == "." || path.is_empty() => field.to_string(),
        Some(field) if path == field || path.ends_with(&format!(".{field}")) => path,
        Some(field) => format!("{path}.{field}"),
        None => path,
    };
    Error::config(key, message)
}

/// Parses TOML text, applying defaults and checking ranges.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = toml::Deserializer::new(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(path_error)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(key, format!("must be positive and finite, got {v}")))
    }
}

fn non_negative(key: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(key, format!("must be non-negative and finite, got {v}")))
    }
}

fn at_least(key: &str, v: u64, min: u64) -> Result<()> {
    if v >= min {
        Ok(())
    } else {
        Err(Error::config(key, format!("must be at least {min}, got {v}")))
    }
}

fn check_diffusion(prefix: &str, d: &DiffusionConfig) -> Result<()> {
    positive(&format!("{prefix}.Sc"), d.sc)?;
    positive(&format!("{prefix}.Sc_T"), d.sc_t)?;
    positive(&format!("{prefix}.Pr"), d.pr)?;
    positive(&format!("{prefix}.Pr_T"), d.pr_t)?;
    if let Some(nu) = d.nu {
        non_negative(&format!("{prefix}.nu"), nu)?;
    }
    if let Some(k) = d.conductivity {
        non_negative(&format!("{prefix}.conductivity"), k)?;
    }
    at_least(&format!("{prefix}.every_n_steps"), d.every_n_steps as u64, 1)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let r = &self.case.rti;
        for (k, v) in [
            ("height", r.height),
            ("width", r.width),
            ("heavy_density", r.heavy_density),
            ("light_density", r.light_density),
            ("warm_temperature", r.warm_temperature),
            ("cold_temperature", r.cold_temperature),
            ("cp", r.cp),
            ("Pr_T", r.pr_t),
            ("duration", r.duration),
        ] {
            positive(&format!("case.rti.{k}"), v)?;
        }
        for (k, v) in [("conductivity", r.conductivity), ("viscosity", r.viscosity), ("gravity", r.gravity), ("perturbation", r.perturbation)] {
            non_negative(&format!("case.rti.{k}"), v)?;
        }
        at_least("case.rti.particles_across", r.particles_across as u64, 20)?;
        let c = &self.case.cavity;
        for (k, v) in [
            ("height", c.height),
            ("width", c.width),
            ("density", c.density),
            ("Sc", c.sc),
            ("Sc_T", c.sc_t),
            ("duration", c.duration),
        ] {
            positive(&format!("case.cavity.{k}"), v)?;
        }
        for (k, v) in [("viscosity", c.viscosity), ("lid_velocity", c.lid_velocity), ("scalar_high", c.scalar_high), ("scalar_low", c.scalar_low)] {
            non_negative(&format!("case.cavity.{k}"), v)?;
        }
        at_least("case.cavity.particles_across", c.particles_across as u64, 20)?;
        let t = &self.case.tank;
        for (k, v) in [
            ("volume", t.volume),
            ("warm_temperature", t.warm_temperature),
            ("cold_temperature", t.cold_temperature),
            ("mixer_temperature", t.mixer_temperature),
            ("wall_temperature", t.wall_temperature),
            ("particle_volume", t.particle_volume),
            ("duration", t.duration),
            ("density", t.density),
            ("cp", t.cp),
        ] {
            positive(&format!("case.tank.{k}"), v)?;
        }
        non_negative("case.tank.mixer_rpm", t.mixer_rpm)?;
        non_negative("case.tank.viscosity", t.viscosity)?;
        at_least("case.tank.target_particles", t.target_particles as u64, 1)?;
        if let Some(dx) = t.spacing {
            positive("case.tank.spacing", dx)?;
        }
        if !(t.blade_reach > 0.0 && t.blade_reach < 1.0) {
            return Err(Error::config("case.tank.blade_reach", format!("must lie in (0, 1), got {}", t.blade_reach)));
        }
        for (k, v) in [("case.rti.sound_speed", r.sound_speed), ("case.cavity.sound_speed", c.sound_speed), ("case.tank.sound_speed", t.sound_speed)] {
            if let Some(v) = v {
                positive(k, v)?;
            }
        }
        non_negative("turbulence.Cs", self.turbulence.cs)?;
        non_negative("turbulence.C_I", self.turbulence.ci)?;
        at_least("adm1.every_n_steps", self.adm1.every_n_steps as u64, 1)?;
        if let Some(d) = self.run.duration_s {
            non_negative("run.duration_s", d)?;
        }
        match &self.run.dt_s {
            TimeStepSetting::Fixed(dt) => positive("run.dt_s", *dt)?,
            TimeStepSetting::Named(s) if s == "auto" => {}
            TimeStepSetting::Named(s) => return Err(Error::config("run.dt_s", format!("expected a number or \"auto\", got \"{s}\""))),
        }
        at_least("run.observe_every_n_steps", self.run.observe_every_n_steps, 1)?;
        if !(self.run.jitter >= 0.0 && self.run.jitter < 0.5) {
            return Err(Error::config("run.jitter", format!("must lie in [0, 0.5), got {}", self.run.jitter)));
        }
        let eff = self.effective_diffusion();
        check_diffusion("diffusion", &eff)?;
        let mut names = vec![PRIMARY_LANE.to_string(), BASELINE_LANE.to_string()];
        for (i, v) in self.variants.iter().enumerate() {
            let key = format!("variants[{i}].name");
            if v.name.is_empty() || !v.name.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_' || ch == '-') {
                return Err(Error::config(key, format!("must be non-empty and use only letters, digits, '_' or '-', got \"{}\"", v.name)));
            }
            if names.contains(&v.name) {
                return Err(Error::config(key, format!("duplicate or reserved lane name \"{}\"", v.name)));
            }
            names.push(v.name.clone());
            check_diffusion(&format!("variants[{i}].diffusion"), &v.diffusion.apply(&eff))?;
        }
        Ok(())
    }

    /// The case's own diffusion settings with `[diffusion]` applied.
    pub fn effective_diffusion(&self) -> DiffusionConfig {
        self.diffusion.apply(&case_diffusion(self.case.id, &self.case))
    }

    pub fn has_chemistry(&self) -> bool {
        self.case.id == CaseId::Tank && self.adm1.enabled
    }

    pub fn duration(&self) -> f64 {
        self.run.duration_s.unwrap_or(match self.case.id {
            CaseId::Rti => self.case.rti.duration,
            CaseId::Cavity => self.case.cavity.duration,
            CaseId::Tank => self.case.tank.duration,
        })
    }

    pub fn effective(&self) -> EffectiveConfig {
        let diffusion = self.effective_diffusion();
        let id = self.case.id;
        EffectiveConfig {
            case: EffectiveCase {
                id,
                rti: (id == CaseId::Rti).then(|| self.case.rti.clone()),
                cavity: (id == CaseId::Cavity).then(|| self.case.cavity.clone()),
                tank: (id == CaseId::Tank).then(|| self.case.tank.clone()),
            },
            turbulence: self.turbulence.clone(),
            adm1: self.adm1.clone(),
            run: EffectiveRun {
                duration_s: self.duration(),
                dt_s: self.run.dt_s.clone(),
                observe_every_n_steps: self.run.observe_every_n_steps,
                seed: self.run.seed,
                jitter: self.run.jitter,
                flow_enabled: self.run.flow_enabled,
                baseline: self.run.baseline,
            },
            output: self.output.clone(),
            variants: self
                .variants
                .iter()
                .map(|v| EffectiveVariant { name: v.name.clone(), diffusion: v.diffusion.apply(&diffusion) })
                .collect(),
            diffusion,
        }
    }

    /// TOML listing of every effective value.
    pub fn echo(&self) -> Result<String> {
        toml::to_string(&self.effective()).map_err(|e| Error::Invalid(format!("cannot render config: {e}")))
    }

    pub fn build_case(&self) -> Result<CaseBuild> {
        let mut b = match self.case.id {
            CaseId::Rti => cases::build_rti(&self.case.rti)?,
            CaseId::Cavity => cases::build_cavity(&self.case.cavity)?,
            CaseId::Tank => cases::build_tank(&self.case.tank)?,
        };
        if self.run.jitter > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(self.run.seed);
            let amp = self.run.jitter * b.spacing;
            let dims = b.kernel.dim;
            for i in 0..b.ps.len() {
                if b.ps.is_fluid(i) {
                    for d in 0..dims {
                        b.ps.position[i][d] += rng.gen_range(-amp..amp);
                    }
                }
            }
        }
        let v_liq = b.fluid_volume();
        if let (Some(path), Some(chem)) = (&self.adm1.params_file, b.chemistry.as_mut()) {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let params = Adm1Params::from_toml(&text)?;
            chem.headspace = match self.case.tank.chemistry {
                ChemistryLayout::Inlet => GasHeadspace::for_liquid_volume(v_liq, &params),
                _ => GasHeadspace::steady_state(v_liq, &params),
            };
            chem.params = params;
        }
        Ok(b)
    }

    /// Lanes in order: baseline (if enabled), the primary lane, variants.
    pub fn lanes(&self) -> Vec<LaneSpec> {
        let chemistry = self.has_chemistry();
        let eff = self.effective_diffusion();
        let mut lanes = Vec::new();
        if self.run.baseline {
            lanes.push(LaneSpec { name: BASELINE_LANE.into(), diffusion: DiffusionConfig::disabled(), chemistry });
        }
        lanes.push(LaneSpec { name: PRIMARY_LANE.into(), diffusion: eff.clone(), chemistry });
        for v in &self.variants {
            lanes.push(LaneSpec { name: v.name.clone(), diffusion: v.diffusion.apply(&eff), chemistry });
        }
        lanes
    }

    pub fn switches(&self) -> ModelSwitches {
        ModelSwitches {
            turbulence: self.turbulence.model,
            cs: self.turbulence.cs,
            flow_enabled: self.run.flow_enabled,
            dt: match self.run.dt_s {
                TimeStepSetting::Fixed(dt) => Some(dt),
                TimeStepSetting::Named(_) => None,
            },
            seed: self.run.seed,
            adm1_every_n_steps: self.adm1.every_n_steps,
            inhibition: self.adm1.inhibition_form,
            ci: self.turbulence.ci,
        }
    }

    pub fn build_simulation(&self) -> Result<Simulation> {
        self.build_case()?.into_simulation(&self.lanes(), &self.switches())
    }

    /// Output directory: `[output].dir`, else `$DSPH_OUT_DIR`, else `out`.
    pub fn output_dir(&self) -> PathBuf {
        self.output
            .dir
            .clone()
            .or_else(|| std::env::var_os("DSPH_OUT_DIR").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

/// Diffusion settings each scenario is defined with.
pub fn case_diffusion(id: CaseId, case: &CaseSection) -> DiffusionConfig {
    match id {
        CaseId::Rti => case.rti.diffusion(),
        CaseId::Cavity => case.cavity.diffusion(),
        CaseId::Tank => case.tank.diffusion(),
    }
}
