//! Weakly-compressible SPH flow: summation density, Tait equation of state,
//! wall pressure extrapolation, the momentum right-hand side and a
//! symplectic-Euler integrator.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::neighbor::NeighborList;
use crate::particles::ParticleSet;
use crate::Vec3;

/// Tait exponent.
pub const TAIT_GAMMA: f64 = 7.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidProps {
    pub rest_density: f64,
    /// Laminar kinematic viscosity in the momentum equation (m^2/s).
    pub viscosity: f64,
    pub sound_speed: f64,
    pub gamma: f64,
    pub gravity: [f64; 3],
}

impl FluidProps {
    pub fn gravity(&self) -> Vec3 {
        Vec3::from(self.gravity)
    }

    /// Tait pressure of a particle with its own rest density.
    #[inline]
    pub fn pressure(&self, rho: f64, rest_density: f64) -> f64 {
        let b = rest_density * self.sound_speed * self.sound_speed / self.gamma;
        b * ((rho / rest_density).powf(self.gamma) - 1.0)
    }

    /// Inverse of [`FluidProps::pressure`], clamped to a small positive density.
    #[inline]
    pub fn density_from_pressure(&self, p: f64, rest_density: f64) -> f64 {
        let b = rest_density * self.sound_speed * self.sound_speed / self.gamma;
        let ratio = (1.0 + p / b).max(1e-3);
        rest_density * ratio.powf(1.0 / self.gamma)
    }
}

pub fn equation_of_state(rho: f64, props: &FluidProps) -> f64 {
    assert!(rho > 0.0, "density must be positive, got {rho}");
    props.pressure(rho, props.rest_density)
}

/// Prescribed motion of a group of boundary particles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BoundaryMotion {
    Static,
    /// Wall that stays in place but drags fluid with a tangential velocity.
    Lid { velocity: [f64; 3] },
    /// Rigid rotation with angular speed `omega` (rad/s) about an axis.
    Paddle {
        omega: f64,
        axis_point: [f64; 3],
        axis_dir: [f64; 3],
    },
}

impl BoundaryMotion {
    pub fn paddle_rpm(rpm: f64, axis_point: Vec3, axis_dir: Vec3) -> Self {
        let d = axis_dir.normalize();
        BoundaryMotion::Paddle {
            omega: rpm * 2.0 * std::f64::consts::PI / 60.0,
            axis_point: axis_point.into(),
            axis_dir: d.into(),
        }
    }

    pub fn velocity(&self, position: &Vec3) -> Vec3 {
        match *self {
            BoundaryMotion::Static => Vec3::zeros(),
            BoundaryMotion::Lid { velocity } => Vec3::from(velocity),
            BoundaryMotion::Paddle { omega, axis_point, axis_dir } => {
                let w = Vec3::from(axis_dir) * omega;
                w.cross(&(position - Vec3::from(axis_point)))
            }
        }
    }

    pub fn acceleration(&self, position: &Vec3) -> Vec3 {
        match *self {
            BoundaryMotion::Paddle { omega, axis_point, axis_dir } => {
                let d = Vec3::from(axis_dir);
                let rel = position - Vec3::from(axis_point);
                let radial = rel - d * d.dot(&rel);
                -radial * omega * omega
            }
            _ => Vec3::zeros(),
        }
    }

    /// Position at time `t` of a particle that started at `origin`.
    pub fn position(&self, origin: &Vec3, t: f64) -> Vec3 {
        match *self {
            BoundaryMotion::Paddle { omega, axis_point, axis_dir } => {
                let k = Vec3::from(axis_dir);
                let p0 = Vec3::from(axis_point);
                let v = origin - p0;
                let (s, c) = (omega * t).sin_cos();
                // Rodrigues rotation
                p0 + v * c + k.cross(&v) * s + k * (k.dot(&v) * (1.0 - c))
            }
            _ => *origin,
        }
    }
}

pub fn boundary_velocity(position: &Vec3, _t: f64, motion: &BoundaryMotion) -> Vec3 {
    motion.velocity(position)
}

/// Number-density summation `rho_a = m_a * sum_b W_ab` (self included) for
/// fluid particles. With equal masses this is `sum_b m_b W_ab`; with the
/// per-phase masses of the two-fluid case it avoids interface smearing.
pub fn compute_density(ps: &mut ParticleSet, list: &NeighborList, kernel: &KernelSpec) {
    let w0 = kernel.value(0.0);
    let rho: Vec<f64> = (0..ps.len())
        .into_par_iter()
        .map(|a| {
            if !ps.is_fluid(a) {
                return ps.density[a];
            }
            let sum: f64 = list.of(a).iter().map(|n| n.w).sum();
            ps.mass[a] * (w0 + sum)
        })
        .collect();
    ps.density = rho;
}

/// Kernel weight sum `W(0) + sum_b W_ab` per particle.
pub fn number_density(ps: &ParticleSet, list: &NeighborList, kernel: &KernelSpec) -> Vec<f64> {
    let w0 = kernel.value(0.0);
    (0..ps.len())
        .map(|a| w0 + list.of(a).iter().map(|n| n.w).sum::<f64>())
        .collect()
}

/// Fluid pressures from the EOS, then wall pressures extrapolated from the
/// surrounding fluid (including the hydrostatic and wall-acceleration term).
/// Wall densities follow from the inverse EOS.
pub fn update_pressure(
    ps: &mut ParticleSet,
    list: &NeighborList,
    props: &FluidProps,
    motions: &[BoundaryMotion],
) {
    for a in 0..ps.len() {
        if ps.is_fluid(a) {
            ps.pressure[a] = props.pressure(ps.density[a], ps.rest_density[a]);
        }
    }
    let g = props.gravity();
    let wall: Vec<(f64, f64)> = (0..ps.len())
        .into_par_iter()
        .map(|a| {
            if ps.is_fluid(a) {
                return (ps.pressure[a], ps.density[a]);
            }
            let acc = motions[ps.motion[a]].acceleration(&ps.position[a]);
            let (mut num, mut den) = (0.0, 0.0);
            for n in list.of(a) {
                if !ps.is_fluid(n.j) {
                    continue;
                }
                num += ps.pressure[n.j] * n.w + ps.density[n.j] * (g - acc).dot(&n.r) * n.w;
                den += n.w;
            }
            let p = if den > 0.0 { num / den } else { 0.0 };
            (p, props.density_from_pressure(p, ps.rest_density[a]))
        })
        .collect();
    for (a, (p, rho)) in wall.into_iter().enumerate() {
        if !ps.is_fluid(a) {
            ps.pressure[a] = p;
            ps.density[a] = rho;
        }
    }
}

/// Regularization `eta^2 = 0.01 h^2` in the viscous and diffusion operators.
#[inline]
pub fn eta_squared(kernel: &KernelSpec) -> f64 {
    0.01 * kernel.h * kernel.h
}

/// Fluid accelerations: pressure gradient, laminar viscosity, the optional
/// turbulent term `gamma` and gravity. Wall particles get zero.
pub fn momentum_rhs(
    ps: &ParticleSet,
    list: &NeighborList,
    kernel: &KernelSpec,
    props: &FluidProps,
    gamma: Option<&[Vec3]>,
) -> Vec<Vec3> {
    let eta2 = eta_squared(kernel);
    let g = props.gravity();
    let nu4 = 4.0 * props.viscosity;
    (0..ps.len())
        .into_par_iter()
        .map(|a| {
            if !ps.is_fluid(a) {
                return Vec3::zeros();
            }
            let (pa, rhoa, va) = (ps.pressure[a], ps.density[a], ps.velocity[a]);
            let mut acc = Vec3::zeros();
            for n in list.of(a) {
                let b = n.j;
                let rhob = ps.density[b];
                let mb = ps.mass[b];
                let pres = mb * (pa + ps.pressure[b]) / (rhoa * rhob);
                acc -= n.grad * pres;
                if nu4 != 0.0 {
                    let visc = mb * nu4 / (rhoa + rhob) * n.r.dot(&n.grad) / (n.dist * n.dist + eta2);
                    acc += (va - ps.velocity[b]) * visc;
                }
            }
            if let Some(gm) = gamma {
                acc += gm[a];
            }
            acc + g
        })
        .collect()
}

/// Combined acoustic, diffusive and body-force time step bound:
/// `0.25 * min(h / (c0 + |v|max), h^2 / (8 nu_max), sqrt(h / |g|))`.
pub fn cfl_limit(kernel: &KernelSpec, props: &FluidProps, max_speed: f64, max_diffusivity: f64) -> f64 {
    let h = kernel.h;
    let mut lim = h / (props.sound_speed + max_speed);
    if max_diffusivity > 0.0 {
        lim = lim.min(h * h / (8.0 * max_diffusivity));
    }
    let gn = props.gravity().norm();
    if gn > 0.0 {
        lim = lim.min((h / gn).sqrt());
    }
    0.25 * lim
}

/// Symplectic Euler: fluid velocity then position; wall particles follow
/// their prescribed motion evaluated at `t + dt`.
pub fn integrate_step(
    ps: &mut ParticleSet,
    acc: &[Vec3],
    dt: f64,
    t: f64,
    limit: f64,
    motions: &[BoundaryMotion],
) -> Result<()> {
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::TimeStepTooLarge { dt, limit });
    }
    let t1 = t + dt;
    for a in 0..ps.len() {
        if ps.is_fluid(a) {
            ps.velocity[a] += acc[a] * dt;
            let v = ps.velocity[a];
            ps.position[a] += v * dt;
        } else {
            let m = &motions[ps.motion[a]];
            ps.position[a] = m.position(&ps.origin[a], t1);
            ps.velocity[a] = m.velocity(&ps.position[a]);
        }
    }
    Ok(())
}
