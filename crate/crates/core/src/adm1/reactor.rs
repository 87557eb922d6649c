use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::equilibrium::{solve_h2, solve_ph, H2Context};
use super::gas::{transfer_rates, GasHeadspace};
use super::kinetics::{derivatives, inhibition_factors, kinetic_rates, InhibitionForm, PROCESS_NAMES};
use super::params::{Adm1Params, Thermo};
use super::*;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Adm1Mode {
    #[default]
    Batch,
    Cstr,
}

/// Continuous feed; the outflow equals the inflow so the volume is fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct Inflow {
    /// m^3/d
    pub q_in: f64,
    /// Reactor liquid volume (m^3).
    pub volume: f64,
    pub composition: Adm1State,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReactionReport {
    pub substeps: usize,
    /// Number of component values raised from below zero back to zero.
    pub clipped: usize,
    pub max_charge_residual: f64,
    pub min_ph: f64,
    pub max_ph: f64,
}

/// Reaction integrator for a set of liquid parcels sharing one headspace.
#[derive(Debug, Clone)]
pub struct Reactor {
    pub params: Adm1Params,
    pub mode: Adm1Mode,
    pub inflow: Option<Inflow>,
    pub form: InhibitionForm,
    /// Upper bound of the inner step (days).
    pub inner_dt_days: f64,
    /// Largest accepted change of any component per inner step, relative
    /// to `max(|c|, change_floor)`.
    pub max_relative_change: f64,
    pub change_floor: f64,
    pub headspace: GasHeadspace,
    last_h: f64,
}

type Comps = [f64; NUM_COMPONENTS];

struct Evaluation {
    d: Vec<Comps>,
    gas: [f64; 3],
    released: f64,
}

impl Reactor {
    pub fn new(params: Adm1Params, headspace: GasHeadspace) -> Self {
        Self {
            params,
            mode: Adm1Mode::Batch,
            inflow: None,
            form: InhibitionForm::Standard,
            inner_dt_days: 1e-3,
            max_relative_change: 0.1,
            change_floor: 1e-4,
            headspace,
            last_h: 1e-3,
        }
    }

    pub fn cstr(mut self, inflow: Inflow) -> Self {
        self.mode = Adm1Mode::Cstr;
        self.inflow = Some(inflow);
        self
    }

    fn dilution(&self) -> (f64, Option<&Adm1State>) {
        match (self.mode, &self.inflow) {
            (Adm1Mode::Cstr, Some(f)) if f.volume > 0.0 => (f.q_in / f.volume, Some(&f.composition)),
            _ => (0.0, None),
        }
    }

    /// Algebraic S_H and S_h2 for one parcel; returns the parcel with the
    /// solved hydrogen and the proton concentration.
    fn solve_algebraic(&self, c: &Comps, guess: f64, th: &Thermo, partial: [f64; 3]) -> Result<(Comps, f64)> {
        let sp = solve_ph(c, th, guess)?;
        let (dil, inflow) = self.dilution();
        let ctx = H2Context {
            dilution: dil,
            s_h2_in: inflow.map_or(0.0, |s| s.c[S_H2]),
            s_h2_eq: 16.0 * th.kh_h2 * partial[0],
            k_la: self.params.physchem.k_la,
        };
        let mut out = *c;
        out[S_H2] = solve_h2(c, &sp, &self.params, self.form, &ctx)?;
        Ok((out, sp.s_h))
    }

    fn parcel_rate(&self, idx: usize, c: &Comps, guess: f64, th: &Thermo, partial: [f64; 3]) -> Result<(Comps, [f64; 3])> {
        let (c, s_h) = self.solve_algebraic(c, guess, th, partial)?;
        let sp = speciation(&c, s_h, th);
        let inh = inhibition_factors(&c, s_h, sp.s_nh3, &self.params, self.form);
        let rho = kinetic_rates(&c, &inh, &self.params.kinetics);
        if let Some(j) = rho.iter().position(|r| !r.is_finite()) {
            return Err(Error::NonFiniteRate { particle: idx, process: PROCESS_NAMES[j] });
        }
        let gas = transfer_rates(&c, s_h, th, partial, &self.params).as_array();
        if let Some(j) = gas.iter().position(|r| !r.is_finite()) {
            return Err(Error::NonFiniteRate { particle: idx, process: ["transfer_h2", "transfer_ch4", "transfer_co2"][j] });
        }
        let mut d = derivatives(&rho, gas, &self.params);
        let (dil, inflow) = self.dilution();
        if let Some(feed) = inflow {
            for k in 0..NUM_COMPONENTS {
                d[k] += dil * (feed.c[k] - c[k]);
            }
        }
        d[S_H2] = 0.0;
        if let Some(k) = d.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteRate { particle: idx, process: COMPONENT_NAMES[k] });
        }
        Ok((d, gas))
    }

    fn evaluate(&self, ys: &[Comps], guesses: &[f64], volumes: &[f64], thermo: &[Thermo], hs: &GasHeadspace) -> Result<Evaluation> {
        let partial = hs.partial_pressures(&self.params);
        let per: Vec<(Comps, [f64; 3])> = ys
            .par_iter()
            .enumerate()
            .map(|(i, c)| self.parcel_rate(i, c, guesses[i], &thermo[i], partial))
            .collect::<Result<_>>()?;
        let mut sum = [0.0; 3];
        let mut d = Vec::with_capacity(per.len());
        for (i, (di, g)) in per.into_iter().enumerate() {
            for k in 0..3 {
                sum[k] += volumes[i] * g[k];
            }
            d.push(di);
        }
        let (gas, released) = hs.derivatives(sum, &self.params);
        Ok(Evaluation { d, gas, released })
    }

    fn headspace_plus(base: &GasHeadspace, e: &Evaluation, h: f64) -> GasHeadspace {
        let mut g = base.clone();
        g.n_h2 += h * e.gas[0];
        g.n_ch4 += h * e.gas[1];
        g.n_co2 += h * e.gas[2];
        g.released_ch4_kg += h * e.released;
        g
    }

    fn parcels_plus(base: &[Comps], e: &Evaluation, h: f64) -> Vec<Comps> {
        base.iter()
            .zip(&e.d)
            .map(|(c, d)| {
                let mut o = *c;
                for k in 0..NUM_COMPONENTS {
                    o[k] += h * d[k];
                }
                o
            })
            .collect()
    }

    /// Advances all parcels and the headspace by `dt_days`. `volumes` are
    /// parcel liquid volumes (m^3) and `temperatures` parcel temperatures.
    pub fn react(&mut self, states: &mut [Adm1State], volumes: &[f64], temperatures: &[f64], dt_days: f64) -> Result<ReactionReport> {
        if !(dt_days > 0.0 && dt_days.is_finite()) {
            return Err(Error::Invalid(format!("reaction step must be positive, got {dt_days}")));
        }
        let thermo: Vec<Thermo> = temperatures.iter().map(|t| self.params.thermo(*t)).collect();
        let mut report = ReactionReport::default();
        let mut y: Vec<Comps> = states.iter().map(|s| s.c).collect();
        let guesses: Vec<f64> = states.iter().map(|s| s.s_h).collect();
        let mut hs = self.headspace.clone();
        let mut t = 0.0;
        while t < dt_days {
            let remaining = dt_days - t;
            let mut h = (2.0 * self.last_h).min(self.inner_dt_days).min(remaining);
            let k1 = self.evaluate(&y, &guesses, volumes, &thermo, &hs)?;
            loop {
                let k2 = self.evaluate(&Self::parcels_plus(&y, &k1, 0.5 * h), &guesses, volumes, &thermo, &Self::headspace_plus(&hs, &k1, 0.5 * h))?;
                let k3 = self.evaluate(&Self::parcels_plus(&y, &k2, 0.5 * h), &guesses, volumes, &thermo, &Self::headspace_plus(&hs, &k2, 0.5 * h))?;
                let k4 = self.evaluate(&Self::parcels_plus(&y, &k3, h), &guesses, volumes, &thermo, &Self::headspace_plus(&hs, &k3, h))?;
                let w = h / 6.0;
                let mut next = y.clone();
                let mut worst: f64 = 0.0;
                for (i, c) in next.iter_mut().enumerate() {
                    for k in 0..NUM_COMPONENTS {
                        let inc = w * (k1.d[i][k] + 2.0 * k2.d[i][k] + 2.0 * k3.d[i][k] + k4.d[i][k]);
                        worst = worst.max(inc.abs() / c[k].abs().max(self.change_floor));
                        c[k] += inc;
                    }
                }
                if worst <= self.max_relative_change || h <= remaining * 1e-12 {
                    let mut g = hs.clone();
                    let comb = |a: usize| w * (k1.gas[a] + 2.0 * k2.gas[a] + 2.0 * k3.gas[a] + k4.gas[a]);
                    g.n_h2 += comb(0);
                    g.n_ch4 += comb(1);
                    g.n_co2 += comb(2);
                    g.released_ch4_kg += w * (k1.released + 2.0 * k2.released + 2.0 * k3.released + k4.released);
                    for n in [&mut g.n_h2, &mut g.n_ch4, &mut g.n_co2] {
                        if *n < 0.0 {
                            *n = 0.0;
                            report.clipped += 1;
                        }
                    }
                    g.released_ch4_kg = g.released_ch4_kg.max(hs.released_ch4_kg);
                    for c in next.iter_mut() {
                        for v in c.iter_mut() {
                            if *v < 0.0 {
                                *v = 0.0;
                                report.clipped += 1;
                            }
                        }
                    }
                    y = next;
                    hs = g;
                    t = if h >= remaining { dt_days } else { t + h };
                    self.last_h = h;
                    report.substeps += 1;
                    break;
                }
                h *= 0.5;
                if h < 1e-14 {
                    return Err(Error::SolverFailure { what: "reaction sub-step underflow".into(), residual: worst });
                }
            }
        }
        // algebraic variables of the final state
        let partial = hs.partial_pressures(&self.params);
        let solved: Vec<(Comps, f64)> = y
            .par_iter()
            .enumerate()
            .map(|(i, c)| self.solve_algebraic(c, guesses[i], &thermo[i], partial))
            .collect::<Result<_>>()?;
        report.min_ph = f64::INFINITY;
        report.max_ph = f64::NEG_INFINITY;
        for (i, (c, s_h)) in solved.into_iter().enumerate() {
            states[i].c = c;
            states[i].s_h = s_h;
            let res = charge_balance(&c, s_h, &thermo[i]).0.abs();
            report.max_charge_residual = report.max_charge_residual.max(res);
            report.min_ph = report.min_ph.min(states[i].ph());
            report.max_ph = report.max_ph.max(states[i].ph());
        }
        self.headspace = hs;
        Ok(report)
    }

    /// Solves pH and dissolved hydrogen for every parcel without advancing time.
    pub fn equilibrate(&self, states: &mut [Adm1State], temperatures: &[f64]) -> Result<()> {
        let partial = self.headspace.partial_pressures(&self.params);
        for (s, t) in states.iter_mut().zip(temperatures) {
            let th = self.params.thermo(*t);
            let (c, s_h) = self.solve_algebraic(&s.c, s.s_h, &th, partial)?;
            s.c = c;
            s.s_h = s_h;
        }
        Ok(())
    }

    /// Total methane held in liquid and headspace (kg).
    pub fn methane_inventory(&self, states: &[Adm1State], volumes: &[f64]) -> f64 {
        let liquid: f64 = states.iter().zip(volumes).map(|(s, v)| v * s.c[S_CH4]).sum();
        liquid * CH4_KG_PER_COD + self.headspace.methane_kg()
    }
}
