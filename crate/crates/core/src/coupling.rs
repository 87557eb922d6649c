//! Operator-split time stepper.
//!
//! One flow solution is shared by any number of scalar lanes. A lane owns a
//! temperature field, a passive tracer, optionally a set of ADM1 parcels with
//! their headspace, and the diffusion settings applied to them. Lanes never
//! feed back into the flow, so several diffusion variants (and a
//! reaction-only baseline) can be advanced side by side on identical
//! kinematics and compared sample by sample.
//!
//! Phase order inside [`Simulation::step`]:
//! 1. neighbor list rebuild
//! 2. density summation and equation of state
//! 3. turbulence field
//! 4. momentum with the SPS force, kinematic update
//! 5. diffusivity closure for every lane (post-kinematics velocities)
//! 6. thermal, tracer and species diffusion
//! 7. ADM1 reaction, which also advances the headspace

use rayon::prelude::*;
use serde::Serialize;

use crate::adm1::{Adm1State, ReactionReport, Reactor};
use crate::flow::{self, BoundaryMotion, FluidProps};
use crate::kernel::KernelSpec;
use crate::neighbor::{NeighborList, VerletCache};
use crate::particles::{ParticleKind, ParticleSet};
use crate::transport::{self, DiffusionConfig, DiffusivityField};
use crate::turbulence::{self, TurbulenceField, TurbulenceModel, C_I, DEFAULT_CS};
use crate::{Error, Result, Vec3};

pub const SECONDS_PER_DAY: f64 = 86_400.0;

/// Explicit diffusion is sub-cycled so that each sub-step stays below
/// `DIFFUSION_SAFETY * h^2 / max(D / rho)`.
pub const DIFFUSION_SAFETY: f64 = 0.05;

/// Verlet skin of the neighbor candidate cache, in units of h.
pub const NEIGHBOR_SKIN: f64 = 0.4;

/// Per-particle ADM1 parcels of one lane plus the reactor that owns the
/// shared headspace.
#[derive(Debug, Clone)]
pub struct Adm1Lane {
    /// Indexed like the particle set; wall entries are never read.
    pub states: Vec<Adm1State>,
    pub reactor: Reactor,
    pub every_n_steps: usize,
    pub clipped: usize,
    pub last_report: Option<ReactionReport>,
    pending_dt: f64,
    pending_steps: usize,
}

impl Adm1Lane {
    pub fn new(states: Vec<Adm1State>, reactor: Reactor) -> Self {
        Self {
            states,
            reactor,
            every_n_steps: 1,
            clipped: 0,
            last_report: None,
            pending_dt: 0.0,
            pending_steps: 0,
        }
    }

    pub fn every(mut self, n: usize) -> Self {
        self.every_n_steps = n.max(1);
        self
    }
}

#[derive(Debug, Clone)]
pub struct ScalarLane {
    pub name: String,
    pub diffusion: DiffusionConfig,
    /// K; wall entries hold the fixed wall temperature where one is set.
    pub temperature: Vec<f64>,
    pub scalar: Vec<f64>,
    pub adm1: Option<Adm1Lane>,
    /// Closure output from the most recent diffusion update.
    pub diffusivity: Option<DiffusivityField>,
    pub diffusion_substeps: u64,
    pending_dt: f64,
    pending_steps: usize,
}

impl ScalarLane {
    /// Wall temperatures are overwritten with each wall's fixed value.
    pub fn new(name: impl Into<String>, diffusion: DiffusionConfig, ps: &ParticleSet, mut temperature: Vec<f64>, scalar: Vec<f64>) -> Result<Self> {
        if temperature.len() != ps.len() || scalar.len() != ps.len() {
            return Err(Error::Invalid(format!(
                "lane fields have {} / {} entries for {} particles",
                temperature.len(),
                scalar.len(),
                ps.len()
            )));
        }
        for (t, w) in temperature.iter_mut().zip(&ps.wall_temperature) {
            if let Some(w) = w {
                *t = *w;
            }
        }
        Ok(Self {
            name: name.into(),
            diffusion,
            temperature,
            scalar,
            adm1: None,
            diffusivity: None,
            diffusion_substeps: 0,
            pending_dt: 0.0,
            pending_steps: 0,
        })
    }

    pub fn with_adm1(mut self, adm1: Adm1Lane) -> Self {
        self.adm1 = Some(adm1);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaneObservation {
    pub name: String,
    /// Dissolved plus headspace methane (kg); zero without chemistry.
    pub total_ch4_kg: f64,
    /// Cumulative vented methane (kg).
    pub released_ch4_kg: f64,
    /// Nominal-volume weighted fluid temperature (K).
    pub mean_temperature: f64,
    pub scalar_min: f64,
    pub scalar_max: f64,
    /// `sum (m / rho_0) C` over fluid.
    pub scalar_content: f64,
    /// `sum m C_p T` over fluid (J).
    pub thermal_content: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Observation {
    pub t: f64,
    pub step: u64,
    pub lanes: Vec<LaneObservation>,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub ps: ParticleSet,
    pub kernel: KernelSpec,
    pub props: FluidProps,
    pub motions: Vec<BoundaryMotion>,
    pub turbulence_model: TurbulenceModel,
    /// Smagorinsky constant.
    pub cs: f64,
    /// Isotropic SPS stress constant.
    pub ci: f64,
    pub turbulence: Option<TurbulenceField>,
    pub neighbors: NeighborList,
    pub lanes: Vec<ScalarLane>,
    pub t: f64,
    pub step_count: u64,
    /// Fixed step (s); `None` picks the stability limit every step.
    pub dt: Option<f64>,
    /// When false, particles stay where they are and only the scalar
    /// lanes evolve.
    pub flow_enabled: bool,
    pub seed: u64,
    fluid: Vec<usize>,
    cache: Option<VerletCache>,
    /// Accelerations for the next step, evaluated on the current state.
    prepared: Option<Vec<Vec3>>,
}

impl Simulation {
    /// Builds the neighbor list and initial density/pressure. Defaults: no
    /// turbulence, automatic dt, flow enabled, no lanes.
    pub fn new(ps: ParticleSet, kernel: KernelSpec, props: FluidProps, motions: Vec<BoundaryMotion>) -> Result<Self> {
        for (i, m) in ps.motion.iter().enumerate() {
            if !ps.is_fluid(i) && *m >= motions.len() {
                return Err(Error::Invalid(format!("particle {i} refers to boundary motion {m}, only {} defined", motions.len())));
            }
        }
        let fluid = (0..ps.len()).filter(|&i| ps.is_fluid(i)).collect();
        let mut sim = Self {
            neighbors: NeighborList::empty(ps.len()),
            ps,
            kernel,
            props,
            motions,
            turbulence_model: TurbulenceModel::None,
            cs: DEFAULT_CS,
            ci: C_I,
            turbulence: None,
            lanes: Vec::new(),
            t: 0.0,
            step_count: 0,
            dt: None,
            flow_enabled: true,
            seed: 0,
            fluid,
            cache: None,
            prepared: None,
        };
        sim.refresh_flow_state()?;
        Ok(sim)
    }

    pub fn with_turbulence(mut self, model: TurbulenceModel, cs: f64) -> Self {
        self.turbulence_model = model;
        self.cs = cs;
        self.turbulence = turbulence::compute_field(&self.ps, &self.neighbors, &self.kernel, model, cs, self.ci);
        self
    }

    pub fn add_lane(&mut self, lane: ScalarLane) -> Result<()> {
        if lane.temperature.len() != self.ps.len() {
            return Err(Error::Invalid(format!("lane {} does not match the particle count", lane.name)));
        }
        if let Some(a) = &lane.adm1 {
            if a.states.len() != self.ps.len() {
                return Err(Error::Invalid(format!("lane {} has {} ADM1 parcels for {} particles", lane.name, a.states.len(), self.ps.len())));
            }
        }
        if self.lanes.iter().any(|l| l.name == lane.name) {
            return Err(Error::Invalid(format!("duplicate lane name {}", lane.name)));
        }
        self.lanes.push(lane);
        Ok(())
    }

    pub fn lane(&self, name: &str) -> Option<&ScalarLane> {
        self.lanes.iter().find(|l| l.name == name)
    }

    pub fn fluid_indices(&self) -> &[usize] {
        &self.fluid
    }

    fn refresh_flow_state(&mut self) -> Result<()> {
        let kind = &self.ps.kind;
        let keep = |a: usize, b: usize| kind[a] == ParticleKind::Fluid || kind[b] == ParticleKind::Fluid;
        let cache = match self.cache.as_mut() {
            Some(c) => c,
            None => self.cache.insert(VerletCache::build(&self.ps.position, &self.kernel, NEIGHBOR_SKIN * self.kernel.h, keep)?),
        };
        cache.refresh_into(&self.ps.position, &self.kernel, keep, &mut self.neighbors)?;
        flow::compute_density(&mut self.ps, &self.neighbors, &self.kernel);
        flow::update_pressure(&mut self.ps, &self.neighbors, &self.props, &self.motions);
        Ok(())
    }

    fn max_momentum_diffusivity(&self) -> f64 {
        let nu_t = self
            .turbulence
            .as_ref()
            .map_or(0.0, |f| self.fluid.iter().map(|&i| f.nu_t[i]).fold(0.0, f64::max));
        self.props.viscosity + nu_t
    }

    /// Current stability bound on dt.
    pub fn stable_dt(&self) -> f64 {
        flow::cfl_limit(&self.kernel, &self.props, self.ps.max_fluid_speed(), self.max_momentum_diffusivity())
    }

    /// Refreshes neighbors, turbulence and accelerations for the coming
    /// step. The result is consumed by the next [`Simulation::step`].
    fn prepare_flow(&mut self) -> Result<()> {
        self.refresh_flow_state()?;
        self.turbulence = turbulence::compute_field(&self.ps, &self.neighbors, &self.kernel, self.turbulence_model, self.cs, self.ci);
        let gamma = self.turbulence.as_ref().map(|f| turbulence::sps_force(&self.ps, &self.neighbors, &f.stress));
        self.prepared = Some(flow::momentum_rhs(&self.ps, &self.neighbors, &self.kernel, &self.props, gamma.as_deref()));
        Ok(())
    }

    /// The step the next [`Simulation::step`] should take: the fixed dt if
    /// one is set, else the stability bound with the eddy viscosity of the
    /// coming step.
    pub fn next_dt(&mut self) -> Result<f64> {
        if self.flow_enabled && self.prepared.is_none() {
            self.prepare_flow()?;
        }
        Ok(self.dt.unwrap_or_else(|| self.stable_dt()))
    }

    /// Advances every phase by `dt`. `dt = 0` leaves the state untouched.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        if !(dt >= 0.0 && dt.is_finite()) {
            return Err(Error::Invalid(format!("time step must be finite and non-negative, got {dt}")));
        }
        if dt == 0.0 {
            return Ok(());
        }
        if self.flow_enabled {
            if self.prepared.is_none() {
                self.prepare_flow()?;
            }
            let acc = self.prepared.take().unwrap_or_default();
            let limit = self.stable_dt();
            flow::integrate_step(&mut self.ps, &acc, dt, self.t, limit, &self.motions)?;
            if let Some(i) = self.ps.position.iter().position(|p| !p.iter().all(|v| v.is_finite())) {
                let p = self.ps.position[i];
                return Err(Error::NonFinitePosition { particle: i, x: p.x, y: p.y, z: p.z });
            }
        }
        self.t += dt;
        self.step_count += 1;
        for li in 0..self.lanes.len() {
            self.advance_lane(li, dt, false)?;
        }
        Ok(())
    }

    /// Applies any diffusion or reaction time still pending because of a
    /// coarser cadence.
    pub fn flush(&mut self) -> Result<()> {
        for li in 0..self.lanes.len() {
            self.advance_lane(li, 0.0, true)?;
        }
        Ok(())
    }

    fn advance_lane(&mut self, li: usize, dt: f64, force: bool) -> Result<()> {
        let mut lane = std::mem::replace(&mut self.lanes[li], placeholder_lane());
        let out = self.advance_lane_inner(&mut lane, dt, force);
        self.lanes[li] = lane;
        out
    }

    fn advance_lane_inner(&self, lane: &mut ScalarLane, dt: f64, force: bool) -> Result<()> {
        lane.pending_dt += dt;
        if dt > 0.0 {
            lane.pending_steps += 1;
        }
        let due = lane.pending_steps >= lane.diffusion.every_n_steps.max(1) || (force && lane.pending_steps > 0);
        if due {
            let span = std::mem::take(&mut lane.pending_dt);
            lane.pending_steps = 0;
            if lane.diffusion.any_enabled() {
                self.diffuse(lane, span);
            }
        }
        if let Some(adm) = lane.adm1.as_mut() {
            adm.pending_dt += dt;
            if dt > 0.0 {
                adm.pending_steps += 1;
            }
            let due = adm.pending_steps >= adm.every_n_steps.max(1) || (force && adm.pending_steps > 0);
            if due {
                let span = std::mem::take(&mut adm.pending_dt);
                adm.pending_steps = 0;
                self.react(adm, &lane.temperature, span)?;
            }
        }
        Ok(())
    }

    fn diffuse(&self, lane: &mut ScalarLane, span: f64) {
        let cfg = &lane.diffusion;
        let nu_t = self.turbulence.as_ref().map(|f| f.nu_t.as_slice());
        let field = transport::compute_diffusivities(&self.ps, &self.neighbors, &self.kernel, cfg, self.props.viscosity, nu_t);
        let max_kin = self
            .fluid
            .iter()
            .map(|&i| {
                let d = if cfg.chemical_enabled { field.d_eff[i] } else { 0.0 };
                let a = if cfg.thermal_enabled { field.alpha_eff[i] } else { 0.0 };
                d.max(a) / self.ps.density[i]
            })
            .fold(0.0, f64::max);
        if max_kin > 0.0 {
            let h2 = self.kernel.h * self.kernel.h;
            let n = (span * max_kin / (DIFFUSION_SAFETY * h2)).ceil().max(1.0) as u64;
            let sub = span / n as f64;
            for _ in 0..n {
                self.diffusion_substep(lane, &field, sub);
            }
            lane.diffusion_substeps += n;
        }
        lane.diffusivity = Some(field);
    }

    fn diffusion_substep(&self, lane: &mut ScalarLane, field: &DiffusivityField, dt: f64) {
        let (ps, nl, k) = (&self.ps, &self.neighbors, &self.kernel);
        if lane.diffusion.thermal_enabled {
            let rate = transport::thermal_diffusion_rhs(ps, nl, k, &lane.temperature, &field.alpha_eff);
            transport::apply_rate(&mut lane.temperature, &rate, dt);
        }
        if lane.diffusion.chemical_enabled {
            let rate = transport::scalar_diffusion_rhs(ps, nl, k, &lane.scalar, &field.d_eff);
            transport::apply_rate(&mut lane.scalar, &rate, dt);
            if let Some(adm) = lane.adm1.as_mut() {
                let rates = transport::species_diffusion_rhs(ps, nl, k, &adm.states, &field.d_eff);
                adm.states.par_iter_mut().zip(rates.par_iter()).for_each(|(s, r)| {
                    for (c, dc) in s.c.iter_mut().zip(r) {
                        *c += dc * dt;
                    }
                });
            }
        }
    }

    fn react(&self, adm: &mut Adm1Lane, temperature: &[f64], span: f64) -> Result<()> {
        if span <= 0.0 {
            return Ok(());
        }
        let mut parcels: Vec<Adm1State> = self.fluid.iter().map(|&i| adm.states[i]).collect();
        let volumes: Vec<f64> = self.fluid.iter().map(|&i| self.ps.nominal_volume(i)).collect();
        let temps: Vec<f64> = self.fluid.iter().map(|&i| temperature[i]).collect();
        let report = adm.reactor.react(&mut parcels, &volumes, &temps, span / SECONDS_PER_DAY).map_err(|e| match e {
            Error::NonFiniteRate { particle, process } => Error::NonFiniteRate { particle: self.fluid[particle], process },
            other => other,
        })?;
        for (k, &i) in self.fluid.iter().enumerate() {
            adm.states[i] = parcels[k];
        }
        adm.clipped += report.clipped;
        adm.last_report = Some(report);
        Ok(())
    }

    /// Solves pH and dissolved hydrogen of every lane's parcels at the
    /// current temperatures without advancing time.
    pub fn equilibrate_chemistry(&mut self) -> Result<()> {
        let fluid = self.fluid.clone();
        for lane in &mut self.lanes {
            if let Some(adm) = lane.adm1.as_mut() {
                let mut parcels: Vec<Adm1State> = fluid.iter().map(|&i| adm.states[i]).collect();
                let temps: Vec<f64> = fluid.iter().map(|&i| lane.temperature[i]).collect();
                adm.reactor.equilibrate(&mut parcels, &temps)?;
                for (k, &i) in fluid.iter().enumerate() {
                    adm.states[i] = parcels[k];
                }
            }
        }
        Ok(())
    }

    pub fn observe(&self) -> Observation {
        let lanes = self.lanes.iter().map(|l| self.observe_lane(l)).collect();
        Observation { t: self.t, step: self.step_count, lanes }
    }

    fn observe_lane(&self, lane: &ScalarLane) -> LaneObservation {
        let ps = &self.ps;
        let (mut vol, mut tv) = (0.0, 0.0);
        let (mut smin, mut smax) = (f64::INFINITY, f64::NEG_INFINITY);
        for &i in &self.fluid {
            let v = ps.nominal_volume(i);
            vol += v;
            tv += v * lane.temperature[i];
            smin = smin.min(lane.scalar[i]);
            smax = smax.max(lane.scalar[i]);
        }
        if self.fluid.is_empty() {
            smin = 0.0;
            smax = 0.0;
        }
        let (total, released) = match &lane.adm1 {
            Some(adm) => {
                let parcels: Vec<Adm1State> = self.fluid.iter().map(|&i| adm.states[i]).collect();
                let volumes: Vec<f64> = self.fluid.iter().map(|&i| ps.nominal_volume(i)).collect();
                (adm.reactor.methane_inventory(&parcels, &volumes), adm.reactor.headspace.released_ch4_kg)
            }
            None => (0.0, 0.0),
        };
        LaneObservation {
            name: lane.name.clone(),
            total_ch4_kg: total,
            released_ch4_kg: released,
            mean_temperature: if vol > 0.0 { tv / vol } else { 0.0 },
            scalar_min: smin,
            scalar_max: smax,
            scalar_content: transport::scalar_content(ps, &lane.scalar),
            thermal_content: transport::thermal_content(ps, &lane.temperature),
        }
    }

    /// Advances by `duration` seconds, recording an observation at the
    /// start, every `observe_every` steps, and at the end. The last step is
    /// shortened so the run ends exactly at `t + duration`.
    pub fn run(&mut self, duration: f64, observe_every: u64) -> Result<Vec<Observation>> {
        self.run_with(duration, observe_every, |_, _| Ok(()))
    }

    /// [`Simulation::run`] with a hook called at the start, after every step
    /// and at the end. The observation is passed when one was recorded.
    pub fn run_with(
        &mut self,
        duration: f64,
        observe_every: u64,
        mut hook: impl FnMut(&Simulation, Option<&Observation>) -> Result<()>,
    ) -> Result<Vec<Observation>> {
        if !(duration >= 0.0 && duration.is_finite()) {
            return Err(Error::Invalid(format!("run duration must be finite and non-negative, got {duration}")));
        }
        let every = observe_every.max(1);
        let first = self.observe();
        hook(self, Some(&first))?;
        let mut log = vec![first];
        let end = self.t + duration;
        while self.t < end {
            let mut dt = self.next_dt()?;
            if !(dt > 0.0) {
                return Err(Error::Invalid(format!("time step collapsed to {dt}")));
            }
            let last = self.t + dt * (1.0 + 1e-9) >= end;
            if last {
                dt = end - self.t;
            }
            self.step(dt)?;
            if last {
                self.flush()?;
                self.t = end;
                let o = self.observe();
                hook(self, Some(&o))?;
                log.push(o);
            } else if self.step_count % every == 0 {
                let o = self.observe();
                hook(self, Some(&o))?;
                log.push(o);
            } else {
                hook(self, None)?;
            }
        }
        Ok(log)
    }
}

fn placeholder_lane() -> ScalarLane {
    ScalarLane {
        name: String::new(),
        diffusion: DiffusionConfig::disabled(),
        temperature: Vec::new(),
        scalar: Vec::new(),
        adm1: None,
        diffusivity: None,
        diffusion_substeps: 0,
        pending_dt: 0.0,
        pending_steps: 0,
    }
}

/// `(run - baseline) / baseline`, `None` where the baseline is zero or
/// either value is not finite.
pub fn relative_difference(run: f64, baseline: f64) -> Option<f64> {
    if baseline == 0.0 || !baseline.is_finite() || !run.is_finite() {
        None
    } else {
        Some((run - baseline) / baseline)
    }
}
