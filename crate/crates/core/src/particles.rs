//! Particle records and the struct-of-arrays container the solver works on.
//!
//! Kinematic state lives in [`ParticleSet`]. Temperature, tracer and ADM1
//! concentrations are carried per scalar lane (see `coupling`), so several
//! diffusion variants can share one flow solution.

use serde::{Deserialize, Serialize};

use crate::adm1::Adm1State;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParticleKind {
    Fluid,
    Boundary,
}

/// Full record for one particle, used by case builders and snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub id: usize,
    pub kind: ParticleKind,
    pub position: Vec3,
    pub velocity: Vec3,
    pub mass: f64,
    pub density: f64,
    pub rest_density: f64,
    pub pressure: f64,
    pub temperature: f64,
    pub cp: f64,
    pub scalar: f64,
    pub adm1: Option<Adm1State>,
    /// Index into the case's boundary motions (boundary particles only).
    pub motion: usize,
    /// Fixed wall temperature; `None` means adiabatic.
    pub wall_temperature: Option<f64>,
}

impl Particle {
    pub fn fluid(position: Vec3, mass: f64, rest_density: f64) -> Self {
        Self {
            id: 0,
            kind: ParticleKind::Fluid,
            position,
            velocity: Vec3::zeros(),
            mass,
            density: rest_density,
            rest_density,
            pressure: 0.0,
            temperature: 293.15,
            cp: 4180.0,
            scalar: 0.0,
            adm1: None,
            motion: 0,
            wall_temperature: None,
        }
    }

    pub fn boundary(position: Vec3, mass: f64, rest_density: f64, motion: usize) -> Self {
        Self {
            kind: ParticleKind::Boundary,
            motion,
            ..Self::fluid(position, mass, rest_density)
        }
    }

    pub fn is_fluid(&self) -> bool {
        self.kind == ParticleKind::Fluid
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParticleSet {
    pub kind: Vec<ParticleKind>,
    pub position: Vec<Vec3>,
    pub velocity: Vec<Vec3>,
    pub mass: Vec<f64>,
    pub density: Vec<f64>,
    pub rest_density: Vec<f64>,
    pub pressure: Vec<f64>,
    pub cp: Vec<f64>,
    pub motion: Vec<usize>,
    /// Reference position of boundary particles at t = 0.
    pub origin: Vec<Vec3>,
    pub wall_temperature: Vec<Option<f64>>,
}

impl ParticleSet {
    pub fn from_particles(particles: &[Particle]) -> Self {
        let mut s = Self::default();
        for p in particles {
            s.push(p);
        }
        s
    }

    pub fn push(&mut self, p: &Particle) {
        self.kind.push(p.kind);
        self.position.push(p.position);
        self.velocity.push(p.velocity);
        self.mass.push(p.mass);
        self.density.push(p.density);
        self.rest_density.push(p.rest_density);
        self.pressure.push(p.pressure);
        self.cp.push(p.cp);
        self.motion.push(p.motion);
        self.origin.push(p.position);
        self.wall_temperature.push(p.wall_temperature);
    }

    pub fn len(&self) -> usize {
        self.kind.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kind.is_empty()
    }

    #[inline]
    pub fn is_fluid(&self, i: usize) -> bool {
        self.kind[i] == ParticleKind::Fluid
    }

    pub fn fluid_count(&self) -> usize {
        self.kind.iter().filter(|k| **k == ParticleKind::Fluid).count()
    }

    /// m / rho for every particle.
    pub fn volumes(&self) -> Vec<f64> {
        self.mass.iter().zip(&self.density).map(|(m, r)| m / r).collect()
    }

    /// Nominal volume m / rho_0; constant over a run.
    pub fn nominal_volume(&self, i: usize) -> f64 {
        self.mass[i] / self.rest_density[i]
    }

    pub fn total_fluid_mass(&self) -> f64 {
        (0..self.len()).filter(|&i| self.is_fluid(i)).map(|i| self.mass[i]).sum()
    }

    pub fn max_fluid_speed(&self) -> f64 {
        (0..self.len())
            .filter(|&i| self.is_fluid(i))
            .map(|i| self.velocity[i].norm())
            .fold(0.0, f64::max)
    }
}
