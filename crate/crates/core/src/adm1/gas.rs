use serde::{Deserialize, Serialize};

use super::params::{Adm1Params, Thermo};
use super::speciation;
use super::*;

const BAR_TO_PA: f64 = 1e5;

/// Shared gas volume above the liquid. Amounts are kmol; pressures bar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GasHeadspace {
    pub n_ch4: f64,
    pub n_co2: f64,
    pub n_h2: f64,
    /// m^3
    pub volume: f64,
    /// K
    pub temperature: f64,
    /// Pa
    pub p_atm: f64,
    /// Venting coefficient (m^3 d^-1 bar^-1).
    pub k_p: f64,
    /// kg of CH4 vented to the atmosphere since t = 0.
    pub released_ch4_kg: f64,
    pub venting: bool,
}

/// Two-film transfer rates out of the liquid: hydrogen and methane in
/// kg COD m^-3 d^-1, carbon dioxide in kmol m^-3 d^-1.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GasTransfer {
    pub h2: f64,
    pub ch4: f64,
    pub co2: f64,
}

impl GasTransfer {
    pub fn as_array(&self) -> [f64; 3] {
        [self.h2, self.ch4, self.co2]
    }
}

impl GasHeadspace {
    /// Empty headspace sized for a liquid volume `v_liq` with the benchmark
    /// gas/liquid ratio; the venting coefficient scales with `v_liq`.
    pub fn for_liquid_volume(v_liq: f64, params: &Adm1Params) -> Self {
        let pc = &params.physchem;
        Self {
            n_ch4: 0.0,
            n_co2: 0.0,
            n_h2: 0.0,
            volume: v_liq * pc.v_gas_ref / pc.v_liq_ref,
            temperature: pc.t_op,
            p_atm: pc.p_atm * BAR_TO_PA,
            k_p: pc.k_p * v_liq / pc.v_liq_ref,
            released_ch4_kg: 0.0,
            venting: true,
        }
    }

    /// Headspace filled with the benchmark steady-state gas composition.
    pub fn steady_state(v_liq: f64, params: &Adm1Params) -> Self {
        let mut g = Self::for_liquid_volume(v_liq, params);
        g.n_h2 = 1.1032e-5 * g.volume / 16.0;
        g.n_ch4 = 1.6535 * g.volume / 64.0;
        g.n_co2 = 0.01354 * g.volume;
        g
    }

    fn rt_over_v(&self, params: &Adm1Params) -> f64 {
        params.physchem.r * self.temperature / self.volume
    }

    /// Partial pressures `[h2, ch4, co2]` in bar.
    pub fn partial_pressures(&self, params: &Adm1Params) -> [f64; 3] {
        let k = self.rt_over_v(params);
        [self.n_h2 * k, self.n_ch4 * k, self.n_co2 * k]
    }

    pub fn water_vapour_pressure(&self, params: &Adm1Params) -> f64 {
        params.thermo(self.temperature).p_h2o
    }

    /// kmol of water vapour at saturation.
    pub fn n_h2o(&self, params: &Adm1Params) -> f64 {
        self.water_vapour_pressure(params) / self.rt_over_v(params)
    }

    /// Total pressure in bar.
    pub fn pressure(&self, params: &Adm1Params) -> f64 {
        self.partial_pressures(params).iter().sum::<f64>() + self.water_vapour_pressure(params)
    }

    /// Vented gas flow (m^3/d): `k_p (P - P_atm) P / P_atm`, never negative.
    pub fn vent_flow(&self, params: &Adm1Params) -> f64 {
        if !self.venting {
            return 0.0;
        }
        let p_atm = self.p_atm / BAR_TO_PA;
        let p = self.pressure(params);
        (self.k_p * (p - p_atm) * p / p_atm).max(0.0)
    }

    pub fn methane_kg(&self) -> f64 {
        self.n_ch4 * 16.04
    }

    /// `[dn_h2, dn_ch4, dn_co2]/dt` (kmol/d) given the volume-weighted
    /// transfer sums and the current contents, plus the released CH4 rate
    /// (kg/d).
    pub fn derivatives(&self, transfer_sum: [f64; 3], params: &Adm1Params) -> ([f64; 3], f64) {
        let out = self.vent_flow(params) / self.volume;
        let d = [
            transfer_sum[0] / 16.0 - self.n_h2 * out,
            transfer_sum[1] / 64.0 - self.n_ch4 * out,
            transfer_sum[2] - self.n_co2 * out,
        ];
        (d, self.n_ch4 * out * 16.04)
    }
}

/// Transfer rates for one liquid parcel at the parcel's own temperature.
pub fn transfer_rates(
    c: &[f64; NUM_COMPONENTS],
    s_h: f64,
    th: &Thermo,
    partial: [f64; 3],
    params: &Adm1Params,
) -> GasTransfer {
    let k_la = params.physchem.k_la;
    let sp = speciation(c, s_h, th);
    GasTransfer {
        h2: k_la * (c[S_H2].max(0.0) - 16.0 * th.kh_h2 * partial[0]),
        ch4: k_la * (c[S_CH4].max(0.0) - 64.0 * th.kh_ch4 * partial[1]),
        co2: k_la * (sp.s_co2 - th.kh_co2 * partial[2]),
    }
}
