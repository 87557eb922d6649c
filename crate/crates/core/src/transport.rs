//! Scalar diffusion for tracer concentrations, ADM1 components and
//! temperature, with the effective-diffusivity closures:
//!
//! * `gdh`: gradient-diffusion hypothesis, `D = rho (nu/Sc + nu_T/Sc_T)`
//! * `roberts`: kernel-weighted velocity-fluctuation variance, `D_T = rho v l`
//! * `greif`: neighbor velocity dispersion, `D_eff = rho v l`
//!
//! All diffusivities are dynamic (kg m^-1 s^-1); the pair operator divides
//! by the two densities.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adm1::{Adm1State, NUM_COMPONENTS};
use crate::flow::eta_squared;
use crate::kernel::KernelSpec;
use crate::neighbor::{Neighbor, NeighborList};
use crate::particles::ParticleSet;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Closure {
    /// Constant laminar coefficients only.
    #[default]
    None,
    Gdh,
    Roberts,
    Greif,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RobertsNormalization {
    /// `(1/N_b) sum_b V_b (v'.v') W_ab`
    #[default]
    AsPrinted,
    /// Divide by `sum_b V_b W_ab` instead of `N_b`.
    Shepard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionConfig {
    pub closure: Closure,
    #[serde(rename = "Sc")]
    pub sc: f64,
    #[serde(rename = "Sc_T")]
    pub sc_t: f64,
    #[serde(rename = "Pr")]
    pub pr: f64,
    #[serde(rename = "Pr_T")]
    pub pr_t: f64,
    pub thermal_enabled: bool,
    pub chemical_enabled: bool,
    /// Laminar kinematic viscosity used by the closures; `None` takes the
    /// fluid's momentum viscosity.
    pub nu: Option<f64>,
    /// Thermal conductivity (W m^-1 K^-1); when set, the laminar thermal
    /// diffusivity is `kappa / C_p` instead of `rho nu / Pr`.
    pub conductivity: Option<f64>,
    pub roberts_normalization: RobertsNormalization,
    /// Diffusion is applied every n flow steps with the accumulated dt.
    pub every_n_steps: usize,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        Self {
            closure: Closure::None,
            sc: 1.0,
            sc_t: 0.2,
            pr: 7.0,
            pr_t: 0.85,
            thermal_enabled: true,
            chemical_enabled: true,
            nu: None,
            conductivity: None,
            roberts_normalization: RobertsNormalization::AsPrinted,
            every_n_steps: 1,
        }
    }
}

impl DiffusionConfig {
    pub fn disabled() -> Self {
        Self {
            thermal_enabled: false,
            chemical_enabled: false,
            ..Self::default()
        }
    }

    pub fn any_enabled(&self) -> bool {
        self.thermal_enabled || self.chemical_enabled
    }
}

#[derive(Debug, Clone, Default)]
pub struct DiffusivityField {
    pub d_eff: Vec<f64>,
    pub alpha_eff: Vec<f64>,
    pub d_t: Vec<f64>,
    /// Characteristic velocity of the active closure (m/s).
    pub v_char: Vec<f64>,
    /// Velocity fluctuation (Roberts closure only).
    pub v_fluct: Vec<Vec3>,
}

impl DiffusivityField {
    /// Largest `D/rho` or `alpha/rho` over fluid particles (m^2/s).
    pub fn max_kinematic(&self, ps: &ParticleSet) -> f64 {
        (0..ps.len())
            .filter(|&i| ps.is_fluid(i))
            .map(|i| self.d_eff[i].max(self.alpha_eff[i]) / ps.density[i])
            .fold(0.0, f64::max)
    }
}

/// GDH effective diffusivities `(D_eff, alpha_eff)`.
pub fn gdh_diffusivities(rho: f64, nu: f64, nu_t: f64, cfg: &DiffusionConfig) -> (f64, f64) {
    (
        rho * (nu / cfg.sc + nu_t / cfg.sc_t),
        rho * (nu / cfg.pr + nu_t / cfg.pr_t),
    )
}

/// Velocity fluctuation relative to the Shepard kernel mean of the fluid
/// velocity, in difference form so uniform fields give exactly zero.
/// Also returns `sum_{b != a} V_b W_ab` and the neighbor count.
fn fluctuation(ps: &ParticleSet, list: &NeighborList, kernel: &KernelSpec, a: usize) -> (Vec3, f64, usize) {
    let va = ps.velocity[a];
    let mut num = Vec3::zeros();
    let mut wsum = 0.0;
    let mut nb = 0usize;
    for n in fluid_neighbors(ps, list, a) {
        let vw = ps.mass[n.j] / ps.density[n.j] * n.w;
        num += (va - ps.velocity[n.j]) * vw;
        wsum += vw;
        nb += 1;
    }
    let den = ps.mass[a] / ps.density[a] * kernel.value(0.0) + wsum;
    let fluct = if den > 0.0 { num / den } else { Vec3::zeros() };
    (fluct, wsum, nb)
}

fn fluid_neighbors<'a>(ps: &'a ParticleSet, list: &'a NeighborList, a: usize) -> impl Iterator<Item = &'a Neighbor> {
    list.of(a).iter().filter(move |n| ps.is_fluid(n.j))
}

/// Roberts-Webster turbulent diffusivity `D_T = rho v l` with `l = 2h` and
/// `v^2` the kernel-weighted variance of the velocity fluctuation.
pub fn roberts_diffusivity(
    ps: &ParticleSet,
    list: &NeighborList,
    kernel: &KernelSpec,
    a: usize,
    normalization: RobertsNormalization,
) -> (f64, f64, Vec3) {
    let (fluct, wsum, nb) = fluctuation(ps, list, kernel, a);
    if nb == 0 {
        return (0.0, 0.0, Vec3::zeros());
    }
    let f2 = fluct.norm_squared();
    let var = match normalization {
        RobertsNormalization::AsPrinted => wsum * f2 / nb as f64,
        RobertsNormalization::Shepard if wsum > 0.0 => f2,
        RobertsNormalization::Shepard => 0.0,
    };
    let v = var.sqrt();
    (ps.density[a] * v * 2.0 * kernel.h, v, fluct)
}

/// Greif effective diffusivity `D_eff = rho v l`, `v^2 = (1/N_b) sum |v_a - v_b|^2`.
pub fn greif_diffusivity(ps: &ParticleSet, list: &NeighborList, kernel: &KernelSpec, a: usize) -> (f64, f64) {
    let va = ps.velocity[a];
    let mut sum = 0.0;
    let mut nb = 0usize;
    for n in fluid_neighbors(ps, list, a) {
        sum += (va - ps.velocity[n.j]).norm_squared();
        nb += 1;
    }
    if nb == 0 {
        return (0.0, 0.0);
    }
    let v = (sum / nb as f64).sqrt();
    (ps.density[a] * v * 2.0 * kernel.h, v)
}

/// Evaluates the configured closure for every fluid particle.
pub fn compute_diffusivities(
    ps: &ParticleSet,
    list: &NeighborList,
    kernel: &KernelSpec,
    cfg: &DiffusionConfig,
    fluid_viscosity: f64,
    nu_t: Option<&[f64]>,
) -> DiffusivityField {
    let nu = cfg.nu.unwrap_or(fluid_viscosity);
    let laminar_alpha = |i: usize| match cfg.conductivity {
        Some(kappa) => kappa / ps.cp[i],
        None => ps.density[i] * nu / cfg.pr,
    };
    let per: Vec<(f64, f64, f64, f64, Vec3)> = (0..ps.len())
        .into_par_iter()
        .map(|a| {
            if !ps.is_fluid(a) {
                return (0.0, 0.0, 0.0, 0.0, Vec3::zeros());
            }
            let rho = ps.density[a];
            let d_lam = rho * nu / cfg.sc;
            match cfg.closure {
                Closure::None => (d_lam, laminar_alpha(a), 0.0, 0.0, Vec3::zeros()),
                Closure::Gdh => {
                    let nt = nu_t.map_or(0.0, |v| v[a]);
                    let d_t = rho * nt / cfg.sc_t;
                    (d_lam + d_t, laminar_alpha(a) + rho * nt / cfg.pr_t, d_t, 0.0, Vec3::zeros())
                }
                Closure::Roberts => {
                    let (d_t, v, fl) = roberts_diffusivity(ps, list, kernel, a, cfg.roberts_normalization);
                    (d_lam + d_t, laminar_alpha(a) + d_t * cfg.sc_t / cfg.pr_t, d_t, v, fl)
                }
                Closure::Greif => {
                    let (d, v) = greif_diffusivity(ps, list, kernel, a);
                    (d, d * cfg.sc_t / cfg.pr_t, d, v, Vec3::zeros())
                }
            }
        })
        .collect();
    let mut f = DiffusivityField {
        d_eff: Vec::with_capacity(per.len()),
        alpha_eff: Vec::with_capacity(per.len()),
        d_t: Vec::with_capacity(per.len()),
        v_char: Vec::with_capacity(per.len()),
        v_fluct: Vec::with_capacity(per.len()),
    };
    for (d, al, dt, v, fl) in per {
        f.d_eff.push(d);
        f.alpha_eff.push(al);
        f.d_t.push(dt);
        f.v_char.push(v);
        f.v_fluct.push(fl);
    }
    f
}

/// `4 D_a D_b / (D_a + D_b)`, zero when both vanish.
#[inline]
pub fn harmonic_pair(da: f64, db: f64) -> f64 {
    let s = da + db;
    if s > 0.0 {
        4.0 * da * db / s
    } else {
        0.0
    }
}

/// `(r_ab . grad_a W_ab) / (r_ab^2 + eta^2)`.
#[inline]
fn pair_factor(n: &Neighbor, eta2: f64) -> f64 {
    n.r.dot(&n.grad) / (n.dist * n.dist + eta2)
}

/// Which wall particles take part in a diffusion sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WallCoupling {
    /// Fluid-fluid pairs only.
    None,
    /// Walls with a fixed temperature exchange with the fluid using the
    /// fluid particle's own diffusivity on both sides.
    FixedTemperature,
}

fn rhs_one(
    ps: &ParticleSet,
    list: &NeighborList,
    eta2: f64,
    field: &[f64],
    diff: &[f64],
    walls: WallCoupling,
    a: usize,
) -> f64 {
    let (ra, ca, da) = (ps.density[a], field[a], diff[a]);
    let mut rate = 0.0;
    for n in list.of(a) {
        let b = n.j;
        let db = if ps.is_fluid(b) {
            diff[b]
        } else {
            match (walls, ps.wall_temperature[b]) {
                (WallCoupling::FixedTemperature, Some(_)) => da,
                _ => continue,
            }
        };
        let h = harmonic_pair(da, db);
        if h == 0.0 {
            continue;
        }
        rate += ps.mass[b] / (ra * ps.density[b]) * h * (ca - field[b]) * pair_factor(n, eta2);
    }
    rate
}

/// `dC_a/dt = sum_b m_b/(rho_a rho_b) * harm(D_a, D_b) * (C_a - C_b) * F_ab`
/// for fluid particles; zero on walls.
pub fn scalar_diffusion_rhs(
    ps: &ParticleSet,
    list: &NeighborList,
    kernel: &KernelSpec,
    field: &[f64],
    d_eff: &[f64],
) -> Vec<f64> {
    diffusion_rhs(ps, list, kernel, field, d_eff, WallCoupling::None)
}

/// Same operator for temperature with `alpha_eff`; walls with a fixed
/// temperature exchange heat but never change their own value.
pub fn thermal_diffusion_rhs(
    ps: &ParticleSet,
    list: &NeighborList,
    kernel: &KernelSpec,
    temperature: &[f64],
    alpha_eff: &[f64],
) -> Vec<f64> {
    diffusion_rhs(ps, list, kernel, temperature, alpha_eff, WallCoupling::FixedTemperature)
}

pub fn diffusion_rhs(
    ps: &ParticleSet,
    list: &NeighborList,
    kernel: &KernelSpec,
    field: &[f64],
    diff: &[f64],
    walls: WallCoupling,
) -> Vec<f64> {
    let eta2 = eta_squared(kernel);
    (0..ps.len())
        .into_par_iter()
        .map(|a| {
            if ps.is_fluid(a) {
                rhs_one(ps, list, eta2, field, diff, walls, a)
            } else {
                0.0
            }
        })
        .collect()
}

/// Rate of change of all ADM1 components under one shared diffusivity.
pub fn species_diffusion_rhs(
    ps: &ParticleSet,
    list: &NeighborList,
    kernel: &KernelSpec,
    states: &[Adm1State],
    d_eff: &[f64],
) -> Vec<[f64; NUM_COMPONENTS]> {
    let eta2 = eta_squared(kernel);
    (0..ps.len())
        .into_par_iter()
        .map(|a| {
            let mut rate = [0.0; NUM_COMPONENTS];
            if !ps.is_fluid(a) {
                return rate;
            }
            let (ra, da) = (ps.density[a], d_eff[a]);
            let ca = &states[a].c;
            for n in list.of(a) {
                let b = n.j;
                if !ps.is_fluid(b) {
                    continue;
                }
                let h = harmonic_pair(da, d_eff[b]);
                if h == 0.0 {
                    continue;
                }
                let coef = ps.mass[b] / (ra * ps.density[b]) * h * pair_factor(n, eta2);
                let cb = &states[b].c;
                for k in 0..NUM_COMPONENTS {
                    rate[k] += coef * (ca[k] - cb[k]);
                }
            }
            rate
        })
        .collect()
}

/// Explicit Euler update of a scalar field with a precomputed rate.
pub fn apply_rate(field: &mut [f64], rate: &[f64], dt: f64) {
    for (f, r) in field.iter_mut().zip(rate) {
        *f += r * dt;
    }
}

/// `sum (m / rho_0) C` over fluid particles.
pub fn scalar_content(ps: &ParticleSet, field: &[f64]) -> f64 {
    (0..ps.len())
        .filter(|&i| ps.is_fluid(i))
        .map(|i| ps.nominal_volume(i) * field[i])
        .sum()
}

/// `sum m C_p T` over fluid particles.
pub fn thermal_content(ps: &ParticleSet, temperature: &[f64]) -> f64 {
    (0..ps.len())
        .filter(|&i| ps.is_fluid(i))
        .map(|i| ps.mass[i] * ps.cp[i] * temperature[i])
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neighbor::CellIndex;
    use crate::particles::Particle;

    fn lattice(n: usize, dx: f64, vel: impl Fn(Vec3) -> Vec3) -> (ParticleSet, NeighborList, KernelSpec) {
        let k = KernelSpec::for_spacing(dx, 2);
        let mut v = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let p = Vec3::new(i as f64 * dx, j as f64 * dx, 0.0);
                let mut q = Particle::fluid(p, 1000.0 * dx * dx, 1000.0);
                q.velocity = vel(p);
                v.push(q);
            }
        }
        let mut ps = ParticleSet::from_particles(&v);
        let idx = CellIndex::build(&ps.position, k.support_radius).unwrap();
        let list = NeighborList::build(&idx, &k, |_, _| true);
        crate::flow::compute_density(&mut ps, &list, &k);
        (ps, list, k)
    }

    #[test]
    fn gdh_values() {
        let mut cfg = DiffusionConfig { sc: 1e20, ..Default::default() };
        let (d, _) = gdh_diffusivities(1000.0, 1e-4, 0.0, &cfg);
        assert!(d < 1e-18);
        cfg.sc_t = 0.1;
        let (d, _) = gdh_diffusivities(1000.0, 0.0, 0.01, &cfg);
        assert!((d - 1000.0 * 0.1).abs() < 1e-12);
        cfg.sc_t = f64::INFINITY;
        let (d, _) = gdh_diffusivities(1000.0, 0.0, 0.01, &cfg);
        assert_eq!(d, 0.0);
    }

    #[test]
    fn harmonic_mean_edge_cases() {
        assert_eq!(harmonic_pair(0.0, 0.0), 0.0);
        assert_eq!(harmonic_pair(0.0, 2.0), 0.0);
        assert_eq!(harmonic_pair(3.0, 3.0), 6.0);
    }

    #[test]
    fn closures_vanish_on_uniform_velocity() {
        let (ps, list, k) = lattice(8, 0.01, |_| Vec3::new(0.25, -0.4, 0.0));
        for a in 0..ps.len() {
            assert_eq!(roberts_diffusivity(&ps, &list, &k, a, RobertsNormalization::AsPrinted).0, 0.0);
            assert_eq!(greif_diffusivity(&ps, &list, &k, a).0, 0.0);
        }
    }

    #[test]
    fn isolated_particle_closures_are_zero() {
        let k = KernelSpec::new(0.01, 2);
        let mut p = Particle::fluid(Vec3::zeros(), 0.1, 1000.0);
        p.velocity = Vec3::new(1.0, 0.0, 0.0);
        let ps = ParticleSet::from_particles(&[p]);
        let list = NeighborList::empty(1);
        assert_eq!(roberts_diffusivity(&ps, &list, &k, 0, RobertsNormalization::AsPrinted).0, 0.0);
        assert_eq!(greif_diffusivity(&ps, &list, &k, 0).0, 0.0);
    }

    #[test]
    fn greif_two_particles() {
        let k = KernelSpec::new(0.01, 2);
        let mut a = Particle::fluid(Vec3::zeros(), 0.1, 1000.0);
        let b = Particle::fluid(Vec3::new(0.01, 0.0, 0.0), 0.1, 1000.0);
        a.velocity = Vec3::new(0.1, 0.0, 0.0);
        let ps = ParticleSet::from_particles(&[a, b]);
        let idx = CellIndex::build(&ps.position, k.support_radius).unwrap();
        let list = NeighborList::build(&idx, &k, |_, _| true);
        let (d, v) = greif_diffusivity(&ps, &list, &k, 0);
        assert!((v - 0.1).abs() < 1e-15);
        assert!((d - 2.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_field_has_zero_rate() {
        let (ps, list, k) = lattice(7, 0.01, |_| Vec3::zeros());
        let c = vec![3.5; ps.len()];
        let d = vec![0.7; ps.len()];
        assert!(scalar_diffusion_rhs(&ps, &list, &k, &c, &d).iter().all(|r| *r == 0.0));
    }

    #[test]
    fn two_particle_exchange_is_conservative() {
        let k = KernelSpec::new(0.013, 2);
        let mut a = Particle::fluid(Vec3::zeros(), 0.1, 1000.0);
        let mut b = Particle::fluid(Vec3::new(0.011, 0.003, 0.0), 0.1, 1000.0);
        a.density = 1003.0;
        b.density = 997.0;
        let ps = ParticleSet::from_particles(&[a, b]);
        let idx = CellIndex::build(&ps.position, k.support_radius).unwrap();
        let list = NeighborList::build(&idx, &k, |_, _| true);
        let c = [2.0, 1.0];
        let d = [0.3, 0.8];
        let r = scalar_diffusion_rhs(&ps, &list, &k, &c, &d);
        assert!(r[0] < 0.0 && r[1] > 0.0);
        let net = ps.nominal_volume(0) * r[0] + ps.nominal_volume(1) * r[1];
        assert!(net.abs() < 1e-15 * r[0].abs());

        // heat flows hot -> cold, m C_p T conserved
        let t = [310.0, 300.0];
        let rt = thermal_diffusion_rhs(&ps, &list, &k, &t, &d);
        assert!(rt[0] < 0.0 && rt[1] > 0.0);
        let net = ps.mass[0] * ps.cp[0] * rt[0] + ps.mass[1] * ps.cp[1] * rt[1];
        assert!(net.abs() < 1e-12 * (ps.mass[0] * ps.cp[0] * rt[0]).abs());
    }

    #[test]
    fn fixed_temperature_wall_heats_fluid_but_not_itself() {
        let k = KernelSpec::new(0.013, 2);
        let f = Particle::fluid(Vec3::zeros(), 0.1, 1000.0);
        let mut w = Particle::boundary(Vec3::new(0.01, 0.0, 0.0), 0.1, 1000.0, 0);
        w.wall_temperature = Some(320.0);
        let adiabatic = Particle::boundary(Vec3::new(-0.01, 0.0, 0.0), 0.1, 1000.0, 0);
        let ps = ParticleSet::from_particles(&[f, w, adiabatic]);
        let idx = CellIndex::build(&ps.position, k.support_radius).unwrap();
        let list = NeighborList::build(&idx, &k, |_, _| true);
        let t = [300.0, 320.0, 250.0];
        let al = [0.5, 0.0, 0.0];
        let r = thermal_diffusion_rhs(&ps, &list, &k, &t, &al);
        assert!(r[0] > 0.0);
        assert_eq!(r[1], 0.0);
        assert_eq!(r[2], 0.0);
        // chemical diffusion ignores walls entirely
        let rc = scalar_diffusion_rhs(&ps, &list, &k, &t, &[0.5, 0.5, 0.5]);
        assert_eq!(rc[0], 0.0);
    }
}
