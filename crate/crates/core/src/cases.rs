//! Builders for the three reference scenarios and the observables computed
//! from their output.
//!
//! * `rti`: two-dimensional Rayleigh-Taylor column, heavy cold fluid above
//!   light warm fluid.
//! * `cavity`: two-dimensional lid-driven cavity carrying a two-level tracer.
//! * `tank`: three-dimensional cylindrical digester stirred by a rotating
//!   paddle, with ADM1 chemistry in every fluid particle.
//!
//! Every builder returns a [`CaseBuild`]: particles with calibrated masses,
//! fluid properties, boundary motions and the initial lane fields. Lanes and
//! model switches are attached afterwards by [`CaseBuild::into_simulation`].

use serde::{Deserialize, Serialize};

use crate::adm1::{Adm1Params, Adm1State, GasHeadspace, InhibitionForm, Reactor};
use crate::coupling::{Adm1Lane, Observation, ScalarLane, Simulation};
use crate::flow::{BoundaryMotion, FluidProps};
use crate::kernel::KernelSpec;
use crate::neighbor::{CellIndex, NeighborList};
use crate::particles::{Particle, ParticleSet};
use crate::transport::{Closure, DiffusionConfig};
use crate::turbulence::{TurbulenceModel, C_I, DEFAULT_CS};
use crate::{Error, Result, Vec3};

/// Boundary layers around every wall; three layers cover the 2h support.
pub const WALL_LAYERS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseId {
    Rti,
    Cavity,
    Tank,
}

impl CaseId {
    pub const ALL: [CaseId; 3] = [CaseId::Rti, CaseId::Cavity, CaseId::Tank];

    pub fn name(self) -> &'static str {
        match self {
            CaseId::Rti => "rti",
            CaseId::Cavity => "cavity",
            CaseId::Tank => "tank",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            CaseId::Rti => "2D Rayleigh-Taylor column, 0.04 x 0.12 m, heavy cold layer over light warm layer",
            CaseId::Cavity => "2D lid-driven cavity, 1 x 1 m, Re = 1e4, two-level passive tracer",
            CaseId::Tank => "3D stirred digester, 8 L cylinder, paddle at 12 rpm, ADM1 chemistry",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RtiParams {
    pub height: f64,
    pub width: f64,
    pub heavy_density: f64,
    pub light_density: f64,
    pub warm_temperature: f64,
    pub cold_temperature: f64,
    /// W m^-1 K^-1
    pub conductivity: f64,
    /// J kg^-1 K^-1
    pub cp: f64,
    #[serde(rename = "Pr_T")]
    pub pr_t: f64,
    pub viscosity: f64,
    pub gravity: f64,
    pub particles_across: usize,
    /// Interface perturbation amplitude in units of h.
    pub perturbation: f64,
    /// Overrides the default `10 sqrt(0.4 g H)`.
    pub sound_speed: Option<f64>,
    pub duration: f64,
}

impl Default for RtiParams {
    fn default() -> Self {
        Self {
            height: 0.12,
            width: 0.04,
            heavy_density: 1500.0,
            light_density: 1000.0,
            warm_temperature: 300.0,
            cold_temperature: 298.0,
            conductivity: 1e-8,
            cp: 4180.0,
            pr_t: 0.01,
            viscosity: 1e-6,
            gravity: 9.81,
            particles_across: 40,
            perturbation: 0.5,
            sound_speed: None,
            duration: 0.6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CavityParams {
    pub height: f64,
    pub width: f64,
    pub density: f64,
    pub viscosity: f64,
    pub lid_velocity: f64,
    #[serde(rename = "Sc")]
    pub sc: f64,
    #[serde(rename = "Sc_T")]
    pub sc_t: f64,
    pub scalar_high: f64,
    pub scalar_low: f64,
    pub particles_across: usize,
    pub sound_speed: Option<f64>,
    pub duration: f64,
}

impl Default for CavityParams {
    fn default() -> Self {
        Self {
            height: 1.0,
            width: 1.0,
            density: 1000.0,
            viscosity: 1e-4,
            lid_velocity: 1.0,
            sc: 1e20,
            sc_t: 0.1,
            scalar_high: 1.1e-3,
            scalar_low: 1.0e-3,
            particles_across: 50,
            sound_speed: None,
            duration: 10.0,
        }
    }
}

impl RtiParams {
    /// Thermal-only gradient diffusion with the configured conductivity.
    pub fn diffusion(&self) -> DiffusionConfig {
        DiffusionConfig {
            closure: Closure::Gdh,
            pr_t: self.pr_t,
            conductivity: Some(self.conductivity),
            chemical_enabled: false,
            thermal_enabled: true,
            ..DiffusionConfig::default()
        }
    }
}

impl CavityParams {
    /// Chemical-only gradient diffusion with the case's Schmidt numbers.
    pub fn diffusion(&self) -> DiffusionConfig {
        DiffusionConfig {
            closure: Closure::Gdh,
            sc: self.sc,
            sc_t: self.sc_t,
            thermal_enabled: false,
            chemical_enabled: true,
            ..DiffusionConfig::default()
        }
    }

    pub fn reynolds(&self) -> f64 {
        self.lid_velocity * self.width / self.viscosity
    }
}

/// Initial placement of the ADM1 composition in the tank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ChemistryLayout {
    /// Digester steady state everywhere.
    #[default]
    Uniform,
    /// Steady state in the lower layer; the upper layer is a 50/50 blend of
    /// steady state and fresh inlet.
    Layered,
    /// The inlet composition everywhere (no active biomass).
    Inlet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TankParams {
    /// m^3
    pub volume: f64,
    pub mixer_rpm: f64,
    pub warm_temperature: f64,
    pub cold_temperature: f64,
    pub mixer_temperature: f64,
    pub wall_temperature: f64,
    /// Per-particle volume at the reference resolution (m^3).
    pub particle_volume: f64,
    pub reference_particles: usize,
    pub duration: f64,
    /// Desired number of fluid particles; sets the spacing unless `spacing`
    /// is given.
    pub target_particles: usize,
    pub spacing: Option<f64>,
    pub density: f64,
    pub viscosity: f64,
    pub cp: f64,
    /// Paddle reach as a fraction of the tank radius.
    pub blade_reach: f64,
    pub chemistry: ChemistryLayout,
    pub sound_speed: Option<f64>,
}

impl Default for TankParams {
    fn default() -> Self {
        Self {
            volume: 8e-3,
            mixer_rpm: 12.0,
            warm_temperature: 309.15,
            cold_temperature: 308.15,
            mixer_temperature: 310.15,
            wall_temperature: 303.15,
            particle_volume: 6.4e-8,
            reference_particles: 128_726,
            duration: 200.0,
            target_particles: 6000,
            spacing: None,
            density: 1000.0,
            viscosity: 1e-5,
            cp: 4180.0,
            blade_reach: 0.7,
            chemistry: ChemistryLayout::Uniform,
            sound_speed: None,
        }
    }
}

impl TankParams {
    pub fn diffusion(&self) -> DiffusionConfig {
        DiffusionConfig { closure: Closure::Gdh, ..DiffusionConfig::default() }
    }

    /// Cylinder radius for height = 2 x radius.
    pub fn radius(&self) -> f64 {
        (self.volume / (2.0 * std::f64::consts::PI)).cbrt()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing.unwrap_or_else(|| (self.volume / self.target_particles as f64).cbrt())
    }

    pub fn omega(&self) -> f64 {
        self.mixer_rpm * 2.0 * std::f64::consts::PI / 60.0
    }

    pub fn tip_speed(&self) -> f64 {
        self.omega() * self.blade_reach * self.radius()
    }
}

/// Chemistry attached to a built case.
#[derive(Debug, Clone)]
pub struct CaseChemistry {
    pub states: Vec<Adm1State>,
    pub params: Adm1Params,
    pub headspace: GasHeadspace,
}

/// Particles, properties and initial fields of a scenario, before lanes and
/// model switches are attached.
#[derive(Debug, Clone)]
pub struct CaseBuild {
    pub id: CaseId,
    pub ps: ParticleSet,
    pub kernel: KernelSpec,
    pub props: FluidProps,
    pub motions: Vec<BoundaryMotion>,
    pub spacing: f64,
    pub temperature: Vec<f64>,
    pub scalar: Vec<f64>,
    pub chemistry: Option<CaseChemistry>,
    /// Diffusion settings the scenario is meant to run with.
    pub diffusion: DiffusionConfig,
    pub duration: f64,
}

/// One scalar lane to attach to a built case.
#[derive(Debug, Clone)]
pub struct LaneSpec {
    pub name: String,
    pub diffusion: DiffusionConfig,
    pub chemistry: bool,
}

/// Model switches applied when turning a [`CaseBuild`] into a simulation.
#[derive(Debug, Clone)]
pub struct ModelSwitches {
    pub turbulence: TurbulenceModel,
    pub cs: f64,
    pub flow_enabled: bool,
    pub dt: Option<f64>,
    pub seed: u64,
    pub adm1_every_n_steps: usize,
    pub inhibition: InhibitionForm,
    /// Isotropic SPS constant.
    pub ci: f64,
}

impl Default for ModelSwitches {
    fn default() -> Self {
        Self {
            turbulence: TurbulenceModel::KEquation,
            cs: DEFAULT_CS,
            flow_enabled: true,
            dt: None,
            seed: 0,
            adm1_every_n_steps: 1,
            inhibition: InhibitionForm::Standard,
            ci: C_I,
        }
    }
}

impl CaseBuild {
    pub fn fluid_volume(&self) -> f64 {
        (0..self.ps.len()).filter(|&i| self.ps.is_fluid(i)).map(|i| self.ps.nominal_volume(i)).sum()
    }

    pub fn into_simulation(self, lanes: &[LaneSpec], switches: &ModelSwitches) -> Result<Simulation> {
        let CaseBuild { ps, kernel, props, motions, temperature, scalar, chemistry, .. } = self;
        let mut sim = Simulation::new(ps, kernel, props, motions)?;
        sim.ci = switches.ci;
        let mut sim = sim.with_turbulence(switches.turbulence, switches.cs);
        sim.flow_enabled = switches.flow_enabled;
        sim.dt = switches.dt;
        sim.seed = switches.seed;
        for spec in lanes {
            let mut lane = ScalarLane::new(spec.name.clone(), spec.diffusion.clone(), &sim.ps, temperature.clone(), scalar.clone())?;
            if spec.chemistry {
                let chem = chemistry
                    .as_ref()
                    .ok_or_else(|| Error::Invalid(format!("lane {} asks for chemistry but the case has none", spec.name)))?;
                let mut reactor = Reactor::new(chem.params.clone(), chem.headspace.clone());
                reactor.form = switches.inhibition;
                lane = lane.with_adm1(Adm1Lane::new(chem.states.clone(), reactor).every(switches.adm1_every_n_steps));
            }
            sim.add_lane(lane)?;
        }
        sim.equilibrate_chemistry()?;
        Ok(sim)
    }
}

/// Sets every fluid mass so that the summation density of the initial
/// configuration equals the particle's rest density exactly. Boundary
/// particles get `rho_0 dx^d`.
pub fn calibrate_masses(ps: &mut ParticleSet, kernel: &KernelSpec, spacing: f64) -> Result<()> {
    let index = CellIndex::build(&ps.position, kernel.support_radius)?;
    let list = NeighborList::build(&index, kernel, |_, _| true);
    let w0 = kernel.value(0.0);
    let cell = spacing.powi(kernel.dim as i32);
    for a in 0..ps.len() {
        let rho0 = ps.rest_density[a];
        ps.mass[a] = if ps.is_fluid(a) {
            rho0 / (w0 + list.of(a).iter().map(|n| n.w).sum::<f64>())
        } else {
            rho0 * cell
        };
        ps.density[a] = rho0;
    }
    Ok(())
}

fn box_walls_2d(width: f64, height: f64, dx: f64, rho0: f64, mut motion_of: impl FnMut(Vec3) -> usize) -> Vec<Particle> {
    let nx = (width / dx).round() as i64;
    let ny = (height / dx).round() as i64;
    let l = WALL_LAYERS as i64;
    let mut out = Vec::new();
    for j in -l..ny + l {
        for i in -l..nx + l {
            if (0..nx).contains(&i) && (0..ny).contains(&j) {
                continue;
            }
            let p = Vec3::new((i as f64 + 0.5) * dx, (j as f64 + 0.5) * dx, 0.0);
            out.push(Particle::boundary(p, 0.0, rho0, motion_of(p)));
        }
    }
    out
}

fn finish(mut particles: Vec<Particle>) -> ParticleSet {
    for (i, p) in particles.iter_mut().enumerate() {
        p.id = i;
    }
    ParticleSet::from_particles(&particles)
}

fn lane_fields(particles: &[Particle]) -> (Vec<f64>, Vec<f64>) {
    (particles.iter().map(|p| p.temperature).collect(), particles.iter().map(|p| p.scalar).collect())
}

pub fn build_rti(p: &RtiParams) -> Result<CaseBuild> {
    if p.particles_across < 20 {
        return Err(Error::config("case.rti.particles_across", format!("needs at least 20 particles across, got {}", p.particles_across)));
    }
    let dx = p.width / p.particles_across as f64;
    let kernel = KernelSpec::for_spacing(dx, 2);
    let nx = p.particles_across;
    let ny = (p.height / dx).round() as usize;
    let amp = p.perturbation * kernel.h;
    let mut particles = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let pos = Vec3::new((i as f64 + 0.5) * dx, (j as f64 + 0.5) * dx, 0.0);
            let interface = 0.5 * p.height + amp * (2.0 * std::f64::consts::PI * pos.x / p.width).cos();
            let heavy = pos.y > interface;
            let rho0 = if heavy { p.heavy_density } else { p.light_density };
            let mut q = Particle::fluid(pos, 0.0, rho0);
            q.temperature = if heavy { p.cold_temperature } else { p.warm_temperature };
            q.cp = p.cp;
            particles.push(q);
        }
    }
    for mut w in box_walls_2d(p.width, p.height, dx, p.light_density, |_| 0) {
        w.cp = p.cp;
        w.temperature = p.warm_temperature;
        particles.push(w);
    }
    let (temperature, scalar) = lane_fields(&particles);
    let mut ps = finish(particles);
    calibrate_masses(&mut ps, &kernel, dx)?;
    let c0 = p.sound_speed.unwrap_or_else(|| 10.0 * (2.0 * p.gravity * p.height * 0.2).sqrt());
    let props = FluidProps {
        rest_density: p.light_density,
        viscosity: p.viscosity,
        sound_speed: c0,
        gamma: 7.0,
        gravity: [0.0, -p.gravity, 0.0],
    };
    let diffusion = p.diffusion();
    Ok(CaseBuild {
        id: CaseId::Rti,
        ps,
        kernel,
        props,
        motions: vec![BoundaryMotion::Static],
        spacing: dx,
        temperature,
        scalar,
        chemistry: None,
        diffusion,
        duration: p.duration,
    })
}

pub fn build_cavity(p: &CavityParams) -> Result<CaseBuild> {
    if p.particles_across < 20 {
        return Err(Error::config("case.cavity.particles_across", format!("needs at least 20 particles across, got {}", p.particles_across)));
    }
    let dx = p.width / p.particles_across as f64;
    let kernel = KernelSpec::for_spacing(dx, 2);
    let nx = p.particles_across;
    let ny = (p.height / dx).round() as usize;
    let mut particles = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let pos = Vec3::new((i as f64 + 0.5) * dx, (j as f64 + 0.5) * dx, 0.0);
            let mut q = Particle::fluid(pos, 0.0, p.density);
            q.scalar = if pos.y < 0.5 * p.height { p.scalar_high } else { p.scalar_low };
            particles.push(q);
        }
    }
    let lid = BoundaryMotion::Lid { velocity: [p.lid_velocity, 0.0, 0.0] };
    let height = p.height;
    for mut w in box_walls_2d(p.width, p.height, dx, p.density, |pos| usize::from(pos.y > height)) {
        if w.motion == 1 {
            w.velocity = lid.velocity(&w.position);
        }
        particles.push(w);
    }
    let (temperature, scalar) = lane_fields(&particles);
    let mut ps = finish(particles);
    calibrate_masses(&mut ps, &kernel, dx)?;
    let props = FluidProps {
        rest_density: p.density,
        viscosity: p.viscosity,
        sound_speed: p.sound_speed.unwrap_or(10.0 * p.lid_velocity),
        gamma: 7.0,
        gravity: [0.0; 3],
    };
    let diffusion = p.diffusion();
    Ok(CaseBuild {
        id: CaseId::Cavity,
        ps,
        kernel,
        props,
        motions: vec![BoundaryMotion::Static, lid],
        spacing: dx,
        temperature,
        scalar,
        chemistry: None,
        diffusion,
        duration: p.duration,
    })
}

/// Lattice sites of the paddle: an axial shaft from 10% of the height up
/// through the lid, and two crossed bars (one per blade pair) reaching
/// `blade_reach * R` at one and two thirds of the height.
fn is_paddle(pos: &Vec3, p: &TankParams, dx: f64) -> bool {
    let (r, h) = (p.radius(), 2.0 * p.radius());
    let reach = p.blade_reach * r;
    let half = dx;
    let shaft = pos.x.abs() < half && pos.y.abs() < half && pos.z > 0.1 * h;
    let band = 1.5 * dx;
    let lower = (pos.z - h / 3.0).abs() < band && pos.y.abs() < half && pos.x.abs() <= reach;
    let upper = (pos.z - 2.0 * h / 3.0).abs() < band && pos.x.abs() < half && pos.y.abs() <= reach;
    shaft || lower || upper
}

pub fn build_tank(p: &TankParams) -> Result<CaseBuild> {
    let dx = p.spacing();
    if !(dx > 0.0 && dx.is_finite()) {
        return Err(Error::config("case.tank.spacing", format!("spacing must be positive, got {dx}")));
    }
    let kernel = KernelSpec::for_spacing(dx, 3);
    let r = p.radius();
    let h = 2.0 * r;
    let l = WALL_LAYERS as f64 * dx;
    let n_r = ((r + l) / dx).ceil() as i64 + 1;
    let n_z = ((h + l) / dx).ceil() as i64 + 1;
    let axis = Vec3::new(0.0, 0.0, 1.0);
    let paddle = BoundaryMotion::paddle_rpm(p.mixer_rpm, Vec3::zeros(), axis);
    let mut fluid = Vec::new();
    let mut walls = Vec::new();
    for k in -n_z..n_z {
        for j in -n_r..n_r {
            for i in -n_r..n_r {
                let pos = Vec3::new((i as f64 + 0.5) * dx, (j as f64 + 0.5) * dx, (k as f64 + 0.5) * dx);
                let rad = (pos.x * pos.x + pos.y * pos.y).sqrt();
                if rad >= r + l || pos.z < -l || pos.z >= h + l {
                    continue;
                }
                let inside = rad < r && pos.z > 0.0 && pos.z < h;
                let shaft_above = pos.z >= h && pos.x.abs() < dx && pos.y.abs() < dx;
                if (inside || shaft_above) && is_paddle(&pos, p, dx) {
                    let mut w = Particle::boundary(pos, 0.0, p.density, 1);
                    w.wall_temperature = Some(p.mixer_temperature);
                    w.temperature = p.mixer_temperature;
                    w.velocity = paddle.velocity(&pos);
                    w.cp = p.cp;
                    walls.push(w);
                } else if inside {
                    let mut q = Particle::fluid(pos, 0.0, p.density);
                    q.temperature = if pos.z < 0.5 * h { p.cold_temperature } else { p.warm_temperature };
                    q.cp = p.cp;
                    fluid.push(q);
                } else {
                    let mut w = Particle::boundary(pos, 0.0, p.density, 0);
                    w.wall_temperature = Some(p.wall_temperature);
                    w.temperature = p.wall_temperature;
                    w.cp = p.cp;
                    walls.push(w);
                }
            }
        }
    }
    let n_fluid = fluid.len();
    let upper: Vec<bool> = fluid.iter().map(|q| q.position.z >= 0.5 * h).collect();
    let mut particles = fluid;
    particles.extend(walls);
    let (temperature, scalar) = lane_fields(&particles);
    let mut ps = finish(particles);
    calibrate_masses(&mut ps, &kernel, dx)?;

    let params = Adm1Params::default();
    let steady = Adm1State::digester_steady_state();
    let inlet = Adm1State::inlet();
    let blend = Adm1State::blend(&steady, &inlet, 0.5);
    let mut states = vec![Adm1State::default(); ps.len()];
    for (i, s) in states.iter_mut().enumerate().take(n_fluid) {
        *s = match p.chemistry {
            ChemistryLayout::Uniform => steady,
            ChemistryLayout::Layered if upper[i] => blend,
            ChemistryLayout::Layered => steady,
            ChemistryLayout::Inlet => inlet,
        };
    }
    let v_liq: f64 = (0..n_fluid).map(|i| ps.nominal_volume(i)).sum();
    let headspace = match p.chemistry {
        ChemistryLayout::Inlet => GasHeadspace::for_liquid_volume(v_liq, &params),
        _ => GasHeadspace::steady_state(v_liq, &params),
    };
    let props = FluidProps {
        rest_density: p.density,
        viscosity: p.viscosity,
        sound_speed: p.sound_speed.unwrap_or(10.0 * p.tip_speed()),
        gamma: 7.0,
        gravity: [0.0; 3],
    };
    let diffusion = p.diffusion();
    Ok(CaseBuild {
        id: CaseId::Tank,
        ps,
        kernel,
        props,
        motions: vec![BoundaryMotion::Static, paddle],
        spacing: dx,
        temperature,
        scalar,
        chemistry: Some(CaseChemistry { states, params, headspace }),
        diffusion,
        duration: p.duration,
    })
}

/// Nominal-volume weighted mean of `field` over fluid particles in
/// `n_bins` equal bins of `[lo, hi]` along `axis` (0, 1 or 2). Empty bins
/// are `None`. Particles outside the range are ignored; `hi` itself falls
/// into the last bin.
pub fn axis_profile(ps: &ParticleSet, field: &[f64], axis: usize, n_bins: usize, lo: f64, hi: f64) -> Result<Vec<Option<f64>>> {
    if n_bins < 2 {
        return Err(Error::Invalid(format!("profile needs at least 2 bins, got {n_bins}")));
    }
    if axis > 2 || !(hi > lo) {
        return Err(Error::Invalid(format!("bad profile axis {axis} or range [{lo}, {hi}]")));
    }
    let width = (hi - lo) / n_bins as f64;
    let mut sum = vec![0.0; n_bins];
    let mut vol = vec![0.0; n_bins];
    for i in 0..ps.len() {
        if !ps.is_fluid(i) {
            continue;
        }
        let x = ps.position[i][axis];
        if x < lo || x > hi {
            continue;
        }
        let b = (((x - lo) / width) as usize).min(n_bins - 1);
        let v = ps.nominal_volume(i);
        sum[b] += v * field[i];
        vol[b] += v;
    }
    Ok(sum.iter().zip(&vol).map(|(s, v)| if *v > 0.0 { Some(s / v) } else { None }).collect())
}

/// Sum of absolute jumps between consecutive non-empty bins.
pub fn total_variation(profile: &[Option<f64>]) -> f64 {
    let vals: Vec<f64> = profile.iter().flatten().copied().collect();
    vals.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MethaneSample {
    pub t: f64,
    pub total_ch4_kg: f64,
    pub released_ch4_kg: f64,
    /// Relative difference of the total against the baseline; `None` when
    /// undefined.
    pub rd_total: Option<f64>,
}

/// Methane totals of lane `lane` with the relative difference against lane
/// `baseline` of the same log at every sample.
pub fn methane_report(log: &[Observation], lane: usize, baseline: Option<usize>) -> Result<Vec<MethaneSample>> {
    log.iter()
        .map(|o| {
            let run = o.lanes.get(lane).ok_or_else(|| Error::Invalid(format!("no lane {lane} in observation at t = {}", o.t)))?;
            let rd = match baseline {
                Some(b) => {
                    let base = o.lanes.get(b).ok_or_else(|| Error::Invalid(format!("no baseline lane {b}")))?;
                    crate::coupling::relative_difference(run.total_ch4_kg, base.total_ch4_kg)
                }
                None => None,
            };
            Ok(MethaneSample {
                t: o.t,
                total_ch4_kg: run.total_ch4_kg,
                released_ch4_kg: run.released_ch4_kg,
                rd_total: rd,
            })
        })
        .collect()
}
