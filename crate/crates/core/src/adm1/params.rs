use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bundled benchmark parameter file.
pub const DEFAULT_PARAMS_TOML: &str = include_str!("../../params/adm1_bsm2.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stoichiometry {
    pub f_si_xc: f64,
    pub f_xi_xc: f64,
    pub f_ch_xc: f64,
    pub f_pr_xc: f64,
    pub f_li_xc: f64,
    pub n_xc: f64,
    pub n_i: f64,
    pub n_aa: f64,
    pub n_bac: f64,
    pub c_xc: f64,
    pub c_si: f64,
    pub c_ch: f64,
    pub c_pr: f64,
    pub c_li: f64,
    pub c_xi: f64,
    pub c_su: f64,
    pub c_aa: f64,
    pub c_fa: f64,
    pub c_bu: f64,
    pub c_pro: f64,
    pub c_ac: f64,
    pub c_bac: f64,
    pub c_va: f64,
    pub c_ch4: f64,
    pub f_fa_li: f64,
    pub f_h2_su: f64,
    pub f_bu_su: f64,
    pub f_pro_su: f64,
    pub f_ac_su: f64,
    pub f_h2_aa: f64,
    pub f_va_aa: f64,
    pub f_bu_aa: f64,
    pub f_pro_aa: f64,
    pub f_ac_aa: f64,
    pub y_su: f64,
    pub y_aa: f64,
    pub y_fa: f64,
    pub y_c4: f64,
    pub y_pro: f64,
    pub y_ac: f64,
    pub y_h2: f64,
    pub fa_ac: f64,
    pub fa_h2: f64,
    pub va_pro: f64,
    pub va_ac: f64,
    pub va_h2: f64,
    pub bu_ac: f64,
    pub bu_h2: f64,
    pub pro_ac: f64,
    pub pro_h2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Kinetics {
    pub k_dis: f64,
    pub k_hyd_ch: f64,
    pub k_hyd_pr: f64,
    pub k_hyd_li: f64,
    pub k_m_su: f64,
    pub k_m_aa: f64,
    pub k_m_fa: f64,
    pub k_m_c4: f64,
    pub k_m_pro: f64,
    pub k_m_ac: f64,
    pub k_m_h2: f64,
    pub k_s_su: f64,
    pub k_s_aa: f64,
    pub k_s_fa: f64,
    pub k_s_c4: f64,
    pub k_s_pro: f64,
    pub k_s_ac: f64,
    pub k_s_h2: f64,
    pub k_s_in: f64,
    pub k_i_h2_fa: f64,
    pub k_i_h2_c4: f64,
    pub k_i_h2_pro: f64,
    pub k_i_nh3: f64,
    pub k_dec_su: f64,
    pub k_dec_aa: f64,
    pub k_dec_fa: f64,
    pub k_dec_c4: f64,
    pub k_dec_pro: f64,
    pub k_dec_ac: f64,
    pub k_dec_h2: f64,
    pub c4_competition_eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhLimits {
    pub ll_aa: f64,
    pub ul_aa: f64,
    pub ll_ac: f64,
    pub ul_ac: f64,
    pub ll_h2: f64,
    pub ul_h2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysChem {
    pub r: f64,
    pub t_base: f64,
    pub t_op: f64,
    pub p_atm: f64,
    pub kw_base: f64,
    pub dh_kw: f64,
    pub pka_va: f64,
    pub pka_bu: f64,
    pub pka_pro: f64,
    pub pka_ac: f64,
    pub pka_co2: f64,
    pub dh_ka_co2: f64,
    pub pka_in: f64,
    pub dh_ka_in: f64,
    pub kh_co2_base: f64,
    pub dh_kh_co2: f64,
    pub kh_ch4_base: f64,
    pub dh_kh_ch4: f64,
    pub kh_h2_base: f64,
    pub dh_kh_h2: f64,
    pub p_h2o_base: f64,
    pub h2o_vap_coef: f64,
    pub k_la: f64,
    pub k_p: f64,
    pub v_liq_ref: f64,
    pub v_gas_ref: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Adm1Params {
    pub version: String,
    pub stoichiometry: Stoichiometry,
    pub kinetics: Kinetics,
    pub ph_limits: PhLimits,
    pub physchem: PhysChem,
}

impl Default for Adm1Params {
    fn default() -> Self {
        Self::from_toml(DEFAULT_PARAMS_TOML).expect("bundled ADM1 parameter file is valid")
    }
}

/// Equilibrium and transfer constants at a given temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thermo {
    pub temperature: f64,
    pub kw: f64,
    pub ka_va: f64,
    pub ka_bu: f64,
    pub ka_pro: f64,
    pub ka_ac: f64,
    pub ka_co2: f64,
    pub ka_in: f64,
    pub kh_co2: f64,
    pub kh_ch4: f64,
    pub kh_h2: f64,
    pub p_h2o: f64,
}

impl Adm1Params {
    pub fn from_toml(text: &str) -> Result<Self> {
        let p: Self = toml::from_str(text).map_err(|e| Error::Params(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let k = &self.kinetics;
        let rates = [
            ("k_dis", k.k_dis),
            ("k_hyd_ch", k.k_hyd_ch),
            ("k_hyd_pr", k.k_hyd_pr),
            ("k_hyd_li", k.k_hyd_li),
            ("k_m_su", k.k_m_su),
            ("k_m_aa", k.k_m_aa),
            ("k_m_fa", k.k_m_fa),
            ("k_m_c4", k.k_m_c4),
            ("k_m_pro", k.k_m_pro),
            ("k_m_ac", k.k_m_ac),
            ("k_m_h2", k.k_m_h2),
            ("k_dec_su", k.k_dec_su),
            ("k_dec_aa", k.k_dec_aa),
            ("k_dec_fa", k.k_dec_fa),
            ("k_dec_c4", k.k_dec_c4),
            ("k_dec_pro", k.k_dec_pro),
            ("k_dec_ac", k.k_dec_ac),
            ("k_dec_h2", k.k_dec_h2),
            ("k_la", self.physchem.k_la),
            ("k_p", self.physchem.k_p),
        ];
        for (name, v) in rates {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Params(format!("{name} must be a finite non-negative rate, got {v}")));
            }
        }
        let l = &self.ph_limits;
        for (g, ll, ul) in [("aa", l.ll_aa, l.ul_aa), ("ac", l.ll_ac, l.ul_ac), ("h2", l.ll_h2, l.ul_h2)] {
            if ll >= ul {
                return Err(Error::Params(format!("pH limits for {g}: lower {ll} must be below upper {ul}")));
            }
        }
        Ok(())
    }

    fn vant_hoff(&self, dh: f64, t: f64) -> f64 {
        let pc = &self.physchem;
        (dh / (100.0 * pc.r) * (1.0 / pc.t_base - 1.0 / t)).exp()
    }

    /// Constants at temperature `t`. Only `K_W`, the Henry constants and
    /// the water vapour pressure follow `t`; the remaining acid constants
    /// stay at the operating temperature.
    pub fn thermo(&self, t: f64) -> Thermo {
        let pc = &self.physchem;
        let ka = |pka: f64| 10f64.powf(-pka);
        Thermo {
            temperature: t,
            kw: pc.kw_base * self.vant_hoff(pc.dh_kw, t),
            ka_va: ka(pc.pka_va),
            ka_bu: ka(pc.pka_bu),
            ka_pro: ka(pc.pka_pro),
            ka_ac: ka(pc.pka_ac),
            ka_co2: ka(pc.pka_co2) * self.vant_hoff(pc.dh_ka_co2, pc.t_op),
            ka_in: ka(pc.pka_in) * self.vant_hoff(pc.dh_ka_in, pc.t_op),
            kh_co2: pc.kh_co2_base * self.vant_hoff(pc.dh_kh_co2, t),
            kh_ch4: pc.kh_ch4_base * self.vant_hoff(pc.dh_kh_ch4, t),
            kh_h2: pc.kh_h2_base * self.vant_hoff(pc.dh_kh_h2, t),
            p_h2o: pc.p_h2o_base * (pc.h2o_vap_coef * (1.0 / pc.t_base - 1.0 / t)).exp(),
        }
    }
}
