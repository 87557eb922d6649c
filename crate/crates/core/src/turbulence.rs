//! Sub-particle-scale (SPS) turbulence closure.
//!
//! The default closure solves the local production/dissipation equilibrium
//! for the unresolved kinetic energy `k` (a quadratic in `sqrt(k)`), then
//! sets `nu_T = C_k * Delta * sqrt(k)`. The classic Smagorinsky viscosity
//! `(C_s Delta)^2 |S|` is available as an alternative.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::kernel::KernelSpec;
use crate::neighbor::NeighborList;
use crate::particles::ParticleSet;
use crate::{Mat3, Vec3};

/// Isotropic stress constant.
pub const C_I: f64 = 0.0066;
/// Eddy-viscosity constant.
pub const C_K: f64 = 0.094;
/// Dissipation constant.
pub const C_E: f64 = 1.048;
pub const DEFAULT_CS: f64 = 0.12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TurbulenceModel {
    None,
    Smagorinsky,
    #[default]
    KEquation,
}

#[derive(Debug, Clone, Default)]
pub struct TurbulenceField {
    pub strain: Vec<Mat3>,
    pub k_sps: Vec<f64>,
    pub nu_t: Vec<f64>,
    pub stress: Vec<Mat3>,
    /// Filter width Delta (m).
    pub filter: f64,
}

impl TurbulenceField {
    pub fn zeros(n: usize, filter: f64) -> Self {
        Self {
            strain: vec![Mat3::zeros(); n],
            k_sps: vec![0.0; n],
            nu_t: vec![0.0; n],
            stress: vec![Mat3::zeros(); n],
            filter,
        }
    }
}

/// Filter width: the kernel support 2h.
pub fn filter_width(kernel: &KernelSpec) -> f64 {
    2.0 * kernel.h
}

/// Symmetric strain rate from the difference-form velocity gradient
/// `du_i/dx_j = sum_b V_b (u_b - u_a)_i (grad_a W_ab)_j`.
pub fn strain_rate(ps: &ParticleSet, list: &NeighborList, a: usize) -> Mat3 {
    let va = ps.velocity[a];
    let mut grad = Mat3::zeros();
    for n in list.of(a) {
        let vol = ps.mass[n.j] / ps.density[n.j];
        grad += (ps.velocity[n.j] - va) * n.grad.transpose() * vol;
    }
    (grad + grad.transpose()) * 0.5
}

fn double_dot(a: &Mat3, b: &Mat3) -> f64 {
    a.component_mul(b).sum()
}

pub fn deviatoric(s: &Mat3) -> Mat3 {
    s - Mat3::identity() * (s.trace() / 3.0)
}

/// Unresolved kinetic energy from the local equilibrium
/// `S : B + C_e k^1.5 / Delta = 0`, `B = 2/3 k I - 2 nu_T dev(S)`.
///
/// Dividing by `sqrt(k)` gives `a x^2 + b x - c = 0` in `x = sqrt(k)` with
/// `a = C_e / Delta`, `b = 2/3 tr(S)`, `c = 2 C_k Delta dev(S):S >= 0`.
/// The larger root is the only non-negative one.
pub fn solve_k_sps(strain: &Mat3, delta: f64) -> f64 {
    assert!(delta > 0.0, "filter width must be positive");
    let a = C_E / delta;
    let b = 2.0 / 3.0 * strain.trace();
    let c = 2.0 * C_K * delta * double_dot(&deviatoric(strain), strain);
    if c <= 0.0 {
        return 0.0;
    }
    let disc = b * b + 4.0 * a * c;
    if disc < 0.0 {
        return 0.0;
    }
    let sq = disc.sqrt();
    // cancellation-free form of (-b + sqrt(disc)) / (2a)
    let x = if b > 0.0 { 2.0 * c / (b + sq) } else { (sq - b) / (2.0 * a) };
    let x = x.max(0.0);
    x * x
}

/// Residual of the equilibrium equation and the dissipation term it is
/// measured against: `(S:B + C_e k^1.5/Delta, C_e k^1.5/Delta)`.
pub fn equilibrium_residual(strain: &Mat3, k: f64, delta: f64) -> (f64, f64) {
    let nu_t = eddy_viscosity(k, delta);
    let b = Mat3::identity() * (2.0 / 3.0 * k) - deviatoric(strain) * (2.0 * nu_t);
    let dissipation = C_E * k.powf(1.5) / delta;
    (double_dot(strain, &b) + dissipation, dissipation)
}

pub fn eddy_viscosity(k_sps: f64, delta: f64) -> f64 {
    assert!(k_sps >= 0.0, "k_SPS must be non-negative");
    C_K * delta * k_sps.sqrt()
}

/// `|S| = sqrt(2 S:S)`.
pub fn strain_magnitude(s: &Mat3) -> f64 {
    (2.0 * double_dot(s, s)).sqrt()
}

pub fn smagorinsky_viscosity(strain: &Mat3, delta: f64, cs: f64) -> f64 {
    (cs * delta).powi(2) * strain_magnitude(strain)
}

/// SPS stress `rho nu_T (2S - 2/3 tr(S) I) - 2/3 rho C_I Delta^2 I`.
pub fn sps_stress(nu_t: f64, strain: &Mat3, delta: f64, rho: f64) -> Mat3 {
    sps_stress_with(nu_t, strain, delta, rho, C_I)
}

/// [`sps_stress`] with an explicit isotropic constant `ci`.
pub fn sps_stress_with(nu_t: f64, strain: &Mat3, delta: f64, rho: f64, ci: f64) -> Mat3 {
    let iso = Mat3::identity();
    (strain * 2.0 - iso * (2.0 / 3.0 * strain.trace())) * (rho * nu_t)
        - iso * (2.0 / 3.0 * rho * ci * delta * delta)
}

/// `Gamma_a = sum_b m_b (tau_a / rho_a^2 + tau_b / rho_b^2) . grad_a W_ab`.
pub fn sps_force(ps: &ParticleSet, list: &NeighborList, stress: &[Mat3]) -> Vec<Vec3> {
    (0..ps.len())
        .into_par_iter()
        .map(|a| {
            if !ps.is_fluid(a) {
                return Vec3::zeros();
            }
            let ra = ps.density[a];
            let ta = stress[a] / (ra * ra);
            let mut acc = Vec3::zeros();
            for n in list.of(a) {
                let rb = ps.density[n.j];
                let t = ta + stress[n.j] / (rb * rb);
                acc += t * n.grad * ps.mass[n.j];
            }
            acc
        })
        .collect()
}

/// Strain, k, nu_T and stress for every fluid particle. Wall particles keep
/// zero stress. `ci` is the isotropic constant ([`C_I`] by default).
/// Returns `None` for [`TurbulenceModel::None`].
pub fn compute_field(
    ps: &ParticleSet,
    list: &NeighborList,
    kernel: &KernelSpec,
    model: TurbulenceModel,
    cs: f64,
    ci: f64,
) -> Option<TurbulenceField> {
    if model == TurbulenceModel::None {
        return None;
    }
    let delta = filter_width(kernel);
    let per: Vec<(Mat3, f64, f64, Mat3)> = (0..ps.len())
        .into_par_iter()
        .map(|a| {
            if !ps.is_fluid(a) {
                return (Mat3::zeros(), 0.0, 0.0, Mat3::zeros());
            }
            let s = strain_rate(ps, list, a);
            let (k, nu) = match model {
                TurbulenceModel::KEquation => {
                    let k = solve_k_sps(&s, delta);
                    (k, eddy_viscosity(k, delta))
                }
                _ => (0.0, smagorinsky_viscosity(&s, delta, cs)),
            };
            (s, k, nu, sps_stress_with(nu, &s, delta, ps.density[a], ci))
        })
        .collect();
    let mut f = TurbulenceField::zeros(ps.len(), delta);
    for (i, (s, k, nu, tau)) in per.into_iter().enumerate() {
        f.strain[i] = s;
        f.k_sps[i] = k;
        f.nu_t[i] = nu;
        f.stress[i] = tau;
    }
    Some(f)
}
