use serde::{Deserialize, Serialize};

use super::params::{Adm1Params, Kinetics, PhLimits};
use super::*;

pub const NUM_PROCESSES: usize = 19;

pub const PROCESS_NAMES: [&str; NUM_PROCESSES] = [
    "disintegration",
    "hydrolysis_carbohydrates",
    "hydrolysis_proteins",
    "hydrolysis_lipids",
    "uptake_sugars",
    "uptake_amino_acids",
    "uptake_lcfa",
    "uptake_valerate",
    "uptake_butyrate",
    "uptake_propionate",
    "uptake_acetate",
    "uptake_hydrogen",
    "decay_x_su",
    "decay_x_aa",
    "decay_x_fa",
    "decay_x_c4",
    "decay_x_pro",
    "decay_x_ac",
    "decay_x_h2",
];

/// Functional form of the inhibition terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InhibitionForm {
    /// Hill function in S_H+ with group limits; non-competitive hydrogen
    /// and free-ammonia inhibition; saturating nitrogen limitation.
    #[default]
    Standard,
    /// Saturation form `S/(S + K_I)` for every non-pH factor and the Hill
    /// function written in pH units around `K_pH = (LL + UL)/2`.
    AsPrinted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inhibition {
    pub ph_aa: f64,
    pub ph_ac: f64,
    pub ph_h2: f64,
    pub in_lim: f64,
    pub h2_fa: f64,
    pub h2_c4: f64,
    pub h2_pro: f64,
    pub nh3: f64,
}

impl Inhibition {
    pub fn none() -> Self {
        Self { ph_aa: 1.0, ph_ac: 1.0, ph_h2: 1.0, in_lim: 1.0, h2_fa: 1.0, h2_c4: 1.0, h2_pro: 1.0, nh3: 1.0 }
    }

    /// Combined factors of uptake processes 5..=12 in order.
    pub fn uptake(&self) -> [f64; 8] {
        let base = self.ph_aa * self.in_lim;
        [
            base,
            base,
            base * self.h2_fa,
            base * self.h2_c4,
            base * self.h2_c4,
            base * self.h2_pro,
            self.ph_ac * self.in_lim * self.nh3,
            self.ph_h2 * self.in_lim,
        ]
    }
}

/// Exponent of the Hill function for one pH group.
pub fn hill_exponent(ll: f64, ul: f64) -> f64 {
    3.0 / (ul - ll)
}

pub fn ph_inhibition(s_h: f64, ll: f64, ul: f64, form: InhibitionForm) -> f64 {
    let n = hill_exponent(ll, ul);
    match form {
        InhibitionForm::Standard => {
            let k = 10f64.powf(-0.5 * (ll + ul));
            let kn = k.powf(n);
            kn / (s_h.powf(n) + kn)
        }
        InhibitionForm::AsPrinted => {
            let ph = -s_h.log10();
            let k_ph = 0.5 * (ll + ul);
            let pn = ph.max(0.0).powf(n);
            pn / (k_ph.powf(n) + pn)
        }
    }
}

fn saturation(s: f64, k: f64) -> f64 {
    let s = s.max(0.0);
    if s + k > 0.0 {
        s / (s + k)
    } else {
        0.0
    }
}

fn non_competitive(s: f64, k: f64) -> f64 {
    k / (k + s.max(0.0))
}

/// All inhibition factors for a state with proton concentration `s_h` and
/// free ammonia `s_nh3`.
pub fn inhibition_factors(
    c: &[f64; NUM_COMPONENTS],
    s_h: f64,
    s_nh3: f64,
    params: &Adm1Params,
    form: InhibitionForm,
) -> Inhibition {
    let k: &Kinetics = &params.kinetics;
    let l: &PhLimits = &params.ph_limits;
    let inhibit = match form {
        InhibitionForm::Standard => non_competitive,
        InhibitionForm::AsPrinted => saturation,
    };
    let s_h2 = c[S_H2];
    Inhibition {
        ph_aa: ph_inhibition(s_h, l.ll_aa, l.ul_aa, form),
        ph_ac: ph_inhibition(s_h, l.ll_ac, l.ul_ac, form),
        ph_h2: ph_inhibition(s_h, l.ll_h2, l.ul_h2, form),
        in_lim: saturation(c[S_IN], k.k_s_in),
        h2_fa: inhibit(s_h2, k.k_i_h2_fa),
        h2_c4: inhibit(s_h2, k.k_i_h2_c4),
        h2_pro: inhibit(s_h2, k.k_i_h2_pro),
        nh3: inhibit(s_nh3, k.k_i_nh3),
    }
}

fn monod(km: f64, s: f64, ks: f64, x: f64) -> f64 {
    let s = s.max(0.0);
    km * s / (ks + s) * x.max(0.0)
}

/// The 19 process rates (per day).
pub fn kinetic_rates(c: &[f64; NUM_COMPONENTS], inh: &Inhibition, k: &Kinetics) -> [f64; NUM_PROCESSES] {
    let f = inh.uptake();
    let (s_va, s_bu) = (c[S_VA].max(0.0), c[S_BU].max(0.0));
    let c4_sum = s_va + s_bu + k.c4_competition_eps;
    let pos = |i: usize| c[i].max(0.0);
    [
        k.k_dis * pos(X_C),
        k.k_hyd_ch * pos(X_CH),
        k.k_hyd_pr * pos(X_PR),
        k.k_hyd_li * pos(X_LI),
        monod(k.k_m_su, c[S_SU], k.k_s_su, c[X_SU]) * f[0],
        monod(k.k_m_aa, c[S_AA], k.k_s_aa, c[X_AA]) * f[1],
        monod(k.k_m_fa, c[S_FA], k.k_s_fa, c[X_FA]) * f[2],
        monod(k.k_m_c4, s_va, k.k_s_c4, c[X_C4]) * (s_va / c4_sum) * f[3],
        monod(k.k_m_c4, s_bu, k.k_s_c4, c[X_C4]) * (s_bu / c4_sum) * f[4],
        monod(k.k_m_pro, c[S_PRO], k.k_s_pro, c[X_PRO]) * f[5],
        monod(k.k_m_ac, c[S_AC], k.k_s_ac, c[X_AC]) * f[6],
        monod(k.k_m_h2, c[S_H2], k.k_s_h2, c[X_H2]) * f[7],
        k.k_dec_su * pos(X_SU),
        k.k_dec_aa * pos(X_AA),
        k.k_dec_fa * pos(X_FA),
        k.k_dec_c4 * pos(X_C4),
        k.k_dec_pro * pos(X_PRO),
        k.k_dec_ac * pos(X_AC),
        k.k_dec_h2 * pos(X_H2),
    ]
}

/// Liquid-phase reaction derivatives (per day) from the process rates and
/// the gas transfer rates `[h2, ch4, co2]`. Inflow terms are added by the
/// reactor.
pub fn derivatives(rho: &[f64; NUM_PROCESSES], gas: [f64; 3], params: &Adm1Params) -> [f64; NUM_COMPONENTS] {
    let s = &params.stoichiometry;
    let decay: f64 = rho[12..].iter().sum();
    let mut d = [0.0; NUM_COMPONENTS];

    let (ysu, yaa, yfa, yc4, ypro, yac, yh2) = (s.y_su, s.y_aa, s.y_fa, s.y_c4, s.y_pro, s.y_ac, s.y_h2);

    d[S_SU] = rho[1] + (1.0 - s.f_fa_li) * rho[3] - rho[4];
    d[S_AA] = rho[2] - rho[5];
    d[S_FA] = s.f_fa_li * rho[3] - rho[6];
    d[S_VA] = (1.0 - yaa) * s.f_va_aa * rho[5] - rho[7];
    d[S_BU] = (1.0 - ysu) * s.f_bu_su * rho[4] + (1.0 - yaa) * s.f_bu_aa * rho[5] - rho[8];
    d[S_PRO] = (1.0 - ysu) * s.f_pro_su * rho[4]
        + (1.0 - yaa) * s.f_pro_aa * rho[5]
        + (1.0 - yc4) * s.va_pro * rho[7]
        - rho[9];
    d[S_AC] = (1.0 - ysu) * s.f_ac_su * rho[4]
        + (1.0 - yaa) * s.f_ac_aa * rho[5]
        + (1.0 - yfa) * s.fa_ac * rho[6]
        + (1.0 - yc4) * s.va_ac * rho[7]
        + (1.0 - yc4) * s.bu_ac * rho[8]
        + (1.0 - ypro) * s.pro_ac * rho[9]
        - rho[10];
    d[S_H2] = (1.0 - ysu) * s.f_h2_su * rho[4]
        + (1.0 - yaa) * s.f_h2_aa * rho[5]
        + (1.0 - yfa) * s.fa_h2 * rho[6]
        + (1.0 - yc4) * s.va_h2 * rho[7]
        + (1.0 - yc4) * s.bu_h2 * rho[8]
        + (1.0 - ypro) * s.pro_h2 * rho[9]
        - rho[11]
        - gas[0];
    d[S_CH4] = (1.0 - yac) * rho[10] + (1.0 - yh2) * rho[11] - gas[1];

    let carbon = [
        -s.c_xc + s.f_si_xc * s.c_si + s.f_ch_xc * s.c_ch + s.f_pr_xc * s.c_pr + s.f_li_xc * s.c_li + s.f_xi_xc * s.c_xi,
        -s.c_ch + s.c_su,
        -s.c_pr + s.c_aa,
        -s.c_li + (1.0 - s.f_fa_li) * s.c_su + s.f_fa_li * s.c_fa,
        -s.c_su + (1.0 - ysu) * (s.f_bu_su * s.c_bu + s.f_pro_su * s.c_pro + s.f_ac_su * s.c_ac) + ysu * s.c_bac,
        -s.c_aa
            + (1.0 - yaa) * (s.f_va_aa * s.c_va + s.f_bu_aa * s.c_bu + s.f_pro_aa * s.c_pro + s.f_ac_aa * s.c_ac)
            + yaa * s.c_bac,
        -s.c_fa + (1.0 - yfa) * s.fa_ac * s.c_ac + yfa * s.c_bac,
        -s.c_va + (1.0 - yc4) * s.va_pro * s.c_pro + (1.0 - yc4) * s.va_ac * s.c_ac + yc4 * s.c_bac,
        -s.c_bu + (1.0 - yc4) * s.bu_ac * s.c_ac + yc4 * s.c_bac,
        -s.c_pro + (1.0 - ypro) * s.pro_ac * s.c_ac + ypro * s.c_bac,
        -s.c_ac + (1.0 - yac) * s.c_ch4 + yac * s.c_bac,
        (1.0 - yh2) * s.c_ch4 + yh2 * s.c_bac,
    ];
    let carbon_decay = -s.c_bac + s.c_xc;
    let mut ic = carbon_decay * decay;
    for j in 0..12 {
        ic += carbon[j] * rho[j];
    }
    d[S_IC] = -ic - gas[2];

    d[S_IN] = (s.n_xc - s.f_xi_xc * s.n_i - s.f_si_xc * s.n_i - s.f_pr_xc * s.n_aa) * rho[0]
        - ysu * s.n_bac * rho[4]
        + (s.n_aa - yaa * s.n_bac) * rho[5]
        - yfa * s.n_bac * rho[6]
        - yc4 * s.n_bac * rho[7]
        - yc4 * s.n_bac * rho[8]
        - ypro * s.n_bac * rho[9]
        - yac * s.n_bac * rho[10]
        - yh2 * s.n_bac * rho[11]
        + (s.n_bac - s.n_xc) * decay;
    d[S_I] = s.f_si_xc * rho[0];

    d[X_C] = -rho[0] + decay;
    d[X_CH] = s.f_ch_xc * rho[0] - rho[1];
    d[X_PR] = s.f_pr_xc * rho[0] - rho[2];
    d[X_LI] = s.f_li_xc * rho[0] - rho[3];
    d[X_SU] = ysu * rho[4] - rho[12];
    d[X_AA] = yaa * rho[5] - rho[13];
    d[X_FA] = yfa * rho[6] - rho[14];
    d[X_C4] = yc4 * (rho[7] + rho[8]) - rho[15];
    d[X_PRO] = ypro * rho[9] - rho[16];
    d[X_AC] = yac * rho[10] - rho[17];
    d[X_H2] = yh2 * rho[11] - rho[18];
    d[X_I] = s.f_xi_xc * rho[0];
    d
}
