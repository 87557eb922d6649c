//! Batch ADM1 in its pure-ODE form: acid-base pairs and dissolved hydrogen
//! are dynamic states (acid-base rate constant `K_AB`), the proton
//! concentration comes from the closed-form charge balance on the ion
//! states, and the process table is assembled as a Petersen matrix whose
//! carbon and nitrogen columns follow from elemental conservation.

use dsph::adm1::Adm1Params;
use nalgebra::DVector;

use super::rosenbrock::{integrate, Tolerances};

pub const K_AB: f64 = 1e10;

// liquid components
const SU: usize = 0;
const AA: usize = 1;
const FA: usize = 2;
const VA: usize = 3;
const BU: usize = 4;
const PRO: usize = 5;
const AC: usize = 6;
const H2: usize = 7;
const CH4: usize = 8;
const IC: usize = 9;
const IN: usize = 10;
const SI: usize = 11;
const XC: usize = 12;
const XCH: usize = 13;
const XPR: usize = 14;
const XLI: usize = 15;
const XSU: usize = 16;
const XAA: usize = 17;
const XFA: usize = 18;
const XC4: usize = 19;
const XPRO: usize = 20;
const XAC: usize = 21;
const XH2: usize = 22;
const XI: usize = 23;
const CAT: usize = 24;
const AN: usize = 25;
pub const N_LIQ: usize = 26;
// ion states
const VA_ION: usize = 26;
const BU_ION: usize = 27;
const PRO_ION: usize = 28;
const AC_ION: usize = 29;
const HCO3: usize = 30;
const NH3: usize = 31;
// headspace concentrations (kg COD m^-3 for h2 and ch4, kmol m^-3 for co2)
const G_H2: usize = 32;
const G_CH4: usize = 33;
const G_CO2: usize = 34;
/// Cumulative vented methane (kg).
const RELEASED: usize = 35;
pub const N_STATE: usize = 36;

pub struct BatchSetup {
    pub params: Adm1Params,
    pub temperature: f64,
    pub v_liq: f64,
    pub v_gas: f64,
    /// m^3 d^-1 bar^-1
    pub k_p: f64,
}

struct Constants {
    kw: f64,
    ka: [f64; 4], // va, bu, pro, ac
    ka_co2: f64,
    ka_in: f64,
    kh_h2: f64,
    kh_ch4: f64,
    kh_co2: f64,
    p_h2o: f64,
    rt: f64,
}

fn constants(s: &BatchSetup) -> Constants {
    let pc = &s.params.physchem;
    let t = s.temperature;
    // enthalpies are in J/mol and R in bar m^3 kmol^-1 K^-1
    let vh = |dh: f64, temp: f64| (dh / (100.0 * pc.r) * (1.0 / pc.t_base - 1.0 / temp)).exp();
    Constants {
        kw: pc.kw_base * vh(pc.dh_kw, t),
        ka: [10f64.powf(-pc.pka_va), 10f64.powf(-pc.pka_bu), 10f64.powf(-pc.pka_pro), 10f64.powf(-pc.pka_ac)],
        ka_co2: 10f64.powf(-pc.pka_co2) * vh(pc.dh_ka_co2, pc.t_op),
        ka_in: 10f64.powf(-pc.pka_in) * vh(pc.dh_ka_in, pc.t_op),
        kh_h2: pc.kh_h2_base * vh(pc.dh_kh_h2, t),
        kh_ch4: pc.kh_ch4_base * vh(pc.dh_kh_ch4, t),
        kh_co2: pc.kh_co2_base * vh(pc.dh_kh_co2, t),
        p_h2o: pc.p_h2o_base * (pc.h2o_vap_coef * (1.0 / pc.t_base - 1.0 / t)).exp(),
        rt: pc.r * t,
    }
}

/// Petersen matrix: `nu[j][i]` is the coefficient of component `i` in
/// process `j`.
fn petersen(p: &Adm1Params) -> [[f64; N_LIQ]; 19] {
    let s = &p.stoichiometry;
    let mut nu = [[0.0; N_LIQ]; 19];
    nu[0][XC] = -1.0;
    nu[0][SI] = s.f_si_xc;
    nu[0][XI] = s.f_xi_xc;
    nu[0][XCH] = s.f_ch_xc;
    nu[0][XPR] = s.f_pr_xc;
    nu[0][XLI] = s.f_li_xc;
    nu[1][XCH] = -1.0;
    nu[1][SU] = 1.0;
    nu[2][XPR] = -1.0;
    nu[2][AA] = 1.0;
    nu[3][XLI] = -1.0;
    nu[3][SU] = 1.0 - s.f_fa_li;
    nu[3][FA] = s.f_fa_li;
    let y = s.y_su;
    nu[4][SU] = -1.0;
    nu[4][BU] = (1.0 - y) * s.f_bu_su;
    nu[4][PRO] = (1.0 - y) * s.f_pro_su;
    nu[4][AC] = (1.0 - y) * s.f_ac_su;
    nu[4][H2] = (1.0 - y) * s.f_h2_su;
    nu[4][XSU] = y;
    let y = s.y_aa;
    nu[5][AA] = -1.0;
    nu[5][VA] = (1.0 - y) * s.f_va_aa;
    nu[5][BU] = (1.0 - y) * s.f_bu_aa;
    nu[5][PRO] = (1.0 - y) * s.f_pro_aa;
    nu[5][AC] = (1.0 - y) * s.f_ac_aa;
    nu[5][H2] = (1.0 - y) * s.f_h2_aa;
    nu[5][XAA] = y;
    let y = s.y_fa;
    nu[6][FA] = -1.0;
    nu[6][AC] = (1.0 - y) * s.fa_ac;
    nu[6][H2] = (1.0 - y) * s.fa_h2;
    nu[6][XFA] = y;
    let y = s.y_c4;
    nu[7][VA] = -1.0;
    nu[7][PRO] = (1.0 - y) * s.va_pro;
    nu[7][AC] = (1.0 - y) * s.va_ac;
    nu[7][H2] = (1.0 - y) * s.va_h2;
    nu[7][XC4] = y;
    nu[8][BU] = -1.0;
    nu[8][AC] = (1.0 - y) * s.bu_ac;
    nu[8][H2] = (1.0 - y) * s.bu_h2;
    nu[8][XC4] = y;
    let y = s.y_pro;
    nu[9][PRO] = -1.0;
    nu[9][AC] = (1.0 - y) * s.pro_ac;
    nu[9][H2] = (1.0 - y) * s.pro_h2;
    nu[9][XPRO] = y;
    nu[10][AC] = -1.0;
    nu[10][CH4] = 1.0 - s.y_ac;
    nu[10][XAC] = s.y_ac;
    nu[11][H2] = -1.0;
    nu[11][CH4] = 1.0 - s.y_h2;
    nu[11][XH2] = s.y_h2;
    for (j, x) in [XSU, XAA, XFA, XC4, XPRO, XAC, XH2].into_iter().enumerate() {
        nu[12 + j][x] = -1.0;
        nu[12 + j][XC] = 1.0;
    }
    // elemental closure
    let mut carbon = [0.0; N_LIQ];
    for (i, c) in [
        (SU, s.c_su),
        (AA, s.c_aa),
        (FA, s.c_fa),
        (VA, s.c_va),
        (BU, s.c_bu),
        (PRO, s.c_pro),
        (AC, s.c_ac),
        (CH4, s.c_ch4),
        (SI, s.c_si),
        (XC, s.c_xc),
        (XCH, s.c_ch),
        (XPR, s.c_pr),
        (XLI, s.c_li),
        (XI, s.c_xi),
    ] {
        carbon[i] = c;
    }
    let mut nitrogen = [0.0; N_LIQ];
    for (i, n) in [(AA, s.n_aa), (SI, s.n_i), (XC, s.n_xc), (XPR, s.n_aa), (XI, s.n_i)] {
        nitrogen[i] = n;
    }
    for x in [XSU, XAA, XFA, XC4, XPRO, XAC, XH2] {
        carbon[x] = s.c_bac;
        nitrogen[x] = s.n_bac;
    }
    for row in nu.iter_mut() {
        row[IC] = -(0..N_LIQ).map(|i| carbon[i] * row[i]).sum::<f64>();
        row[IN] = -(0..N_LIQ).map(|i| nitrogen[i] * row[i]).sum::<f64>();
    }
    nu
}

/// Right-hand side in days.
pub struct BatchModel {
    setup: BatchSetup,
    k: Constants,
    nu: [[f64; N_LIQ]; 19],
}

impl BatchModel {
    pub fn new(setup: BatchSetup) -> Self {
        let k = constants(&setup);
        let nu = petersen(&setup.params);
        Self { setup, k, nu }
    }

    fn proton(&self, y: &DVector<f64>) -> f64 {
        let theta = y[CAT] + (y[IN] - y[NH3]) - y[HCO3]
            - y[AC_ION] / 64.0
            - y[PRO_ION] / 112.0
            - y[BU_ION] / 160.0
            - y[VA_ION] / 208.0
            - y[AN];
        -0.5 * theta + (0.25 * theta * theta + self.k.kw).sqrt()
    }

    pub fn rhs(&self, y: &DVector<f64>) -> DVector<f64> {
        let p = &self.setup.params;
        let kin = &p.kinetics;
        let lim = &p.ph_limits;
        let k = &self.k;
        let s_h = self.proton(y);
        let hill = |ll: f64, ul: f64| {
            let n = 3.0 / (ul - ll);
            let kph = 10f64.powf(-0.5 * (ll + ul));
            kph.powf(n) / (s_h.powf(n) + kph.powf(n))
        };
        let i_in = y[IN] / (y[IN] + kin.k_s_in);
        let ni = |s: f64, ki: f64| ki / (ki + s);
        let i_aa = hill(lim.ll_aa, lim.ul_aa) * i_in;
        let i_ac = hill(lim.ll_ac, lim.ul_ac) * i_in * ni(y[NH3], kin.k_i_nh3);
        let i_h2 = hill(lim.ll_h2, lim.ul_h2) * i_in;
        let m = |km: f64, s: f64, ks: f64, x: f64| km * s / (ks + s) * x;
        let c4 = y[VA] + y[BU] + kin.c4_competition_eps;
        let rho = [
            kin.k_dis * y[XC],
            kin.k_hyd_ch * y[XCH],
            kin.k_hyd_pr * y[XPR],
            kin.k_hyd_li * y[XLI],
            m(kin.k_m_su, y[SU], kin.k_s_su, y[XSU]) * i_aa,
            m(kin.k_m_aa, y[AA], kin.k_s_aa, y[XAA]) * i_aa,
            m(kin.k_m_fa, y[FA], kin.k_s_fa, y[XFA]) * i_aa * ni(y[H2], kin.k_i_h2_fa),
            m(kin.k_m_c4, y[VA], kin.k_s_c4, y[XC4]) * y[VA] / c4 * i_aa * ni(y[H2], kin.k_i_h2_c4),
            m(kin.k_m_c4, y[BU], kin.k_s_c4, y[XC4]) * y[BU] / c4 * i_aa * ni(y[H2], kin.k_i_h2_c4),
            m(kin.k_m_pro, y[PRO], kin.k_s_pro, y[XPRO]) * i_aa * ni(y[H2], kin.k_i_h2_pro),
            m(kin.k_m_ac, y[AC], kin.k_s_ac, y[XAC]) * i_ac,
            m(kin.k_m_h2, y[H2], kin.k_s_h2, y[XH2]) * i_h2,
            kin.k_dec_su * y[XSU],
            kin.k_dec_aa * y[XAA],
            kin.k_dec_fa * y[XFA],
            kin.k_dec_c4 * y[XC4],
            kin.k_dec_pro * y[XPRO],
            kin.k_dec_ac * y[XAC],
            kin.k_dec_h2 * y[XH2],
        ];
        let mut dy = DVector::zeros(N_STATE);
        for (j, r) in rho.iter().enumerate() {
            for i in 0..N_LIQ {
                dy[i] += self.nu[j][i] * r;
            }
        }
        // acid-base
        for (ion, total, ka) in [(VA_ION, VA, k.ka[0]), (BU_ION, BU, k.ka[1]), (PRO_ION, PRO, k.ka[2]), (AC_ION, AC, k.ka[3])] {
            dy[ion] = -K_AB * (y[ion] * (ka + s_h) - ka * y[total]);
        }
        dy[HCO3] = -K_AB * (y[HCO3] * (k.ka_co2 + s_h) - k.ka_co2 * y[IC]);
        dy[NH3] = -K_AB * (y[NH3] * (k.ka_in + s_h) - k.ka_in * y[IN]);
        // gas transfer
        let p_h2 = y[G_H2] * k.rt / 16.0;
        let p_ch4 = y[G_CH4] * k.rt / 64.0;
        let p_co2 = y[G_CO2] * k.rt;
        let k_la = p.physchem.k_la;
        let t_h2 = k_la * (y[H2] - 16.0 * k.kh_h2 * p_h2);
        let t_ch4 = k_la * (y[CH4] - 64.0 * k.kh_ch4 * p_ch4);
        let t_co2 = k_la * ((y[IC] - y[HCO3]) - k.kh_co2 * p_co2);
        dy[H2] -= t_h2;
        dy[CH4] -= t_ch4;
        dy[IC] -= t_co2;
        let p_gas = p_h2 + p_ch4 + p_co2 + k.p_h2o;
        let p_atm = p.physchem.p_atm;
        let q = (self.setup.k_p * (p_gas - p_atm) * p_gas / p_atm).max(0.0);
        let ratio = self.setup.v_liq / self.setup.v_gas;
        dy[G_H2] = -y[G_H2] * q / self.setup.v_gas + t_h2 * ratio;
        dy[G_CH4] = -y[G_CH4] * q / self.setup.v_gas + t_ch4 * ratio;
        dy[G_CO2] = -y[G_CO2] * q / self.setup.v_gas + t_co2 * ratio;
        dy[RELEASED] = y[G_CH4] / 64.0 * 16.04 * q;
        dy
    }

    /// Initial state with the ion pools at equilibrium for proton
    /// concentration `s_h`, and an empty headspace.
    pub fn initial(&self, liquid: &[f64; N_LIQ], s_h: f64) -> DVector<f64> {
        let k = &self.k;
        let mut y = DVector::zeros(N_STATE);
        for i in 0..N_LIQ {
            y[i] = liquid[i];
        }
        let ion = |ka: f64, total: f64| ka * total / (ka + s_h);
        y[VA_ION] = ion(k.ka[0], liquid[VA]);
        y[BU_ION] = ion(k.ka[1], liquid[BU]);
        y[PRO_ION] = ion(k.ka[2], liquid[PRO]);
        y[AC_ION] = ion(k.ka[3], liquid[AC]);
        y[HCO3] = ion(k.ka_co2, liquid[IC]);
        y[NH3] = ion(k.ka_in, liquid[IN]);
        y
    }

    /// Proton concentration at which the equilibrium ion pools of `liquid`
    /// satisfy the charge balance (bisection in log space).
    pub fn consistent_proton(&self, liquid: &[f64; N_LIQ]) -> f64 {
        let (mut lo, mut hi) = (1e-14f64.ln(), 0.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let s_h = mid.exp();
            if self.proton(&self.initial(liquid, s_h)) > s_h {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (0.5 * (lo + hi)).exp()
    }

    /// Liquid components, headspace methane (kg), vented methane (kg) and
    /// the proton concentration after `days`.
    pub fn run(&self, liquid: &[f64; N_LIQ], days: f64) -> OracleResult {
        let y0 = self.initial(liquid, self.consistent_proton(liquid));
        let f = |y: &DVector<f64>| self.rhs(y);
        let (y, stats) = integrate(&f, y0, days, &Tolerances { rtol: 1e-8, atol: 1e-14 });
        let mut c = [0.0; N_LIQ];
        for i in 0..N_LIQ {
            c[i] = y[i];
        }
        OracleResult {
            liquid: c,
            gas_ch4_kg: y[G_CH4] / 64.0 * 16.04 * self.setup.v_gas,
            released_ch4_kg: y[RELEASED],
            s_h: self.proton(&y),
            steps: stats.accepted,
        }
    }
}

pub struct OracleResult {
    pub liquid: [f64; N_LIQ],
    pub gas_ch4_kg: f64,
    pub released_ch4_kg: f64,
    pub s_h: f64,
    pub steps: usize,
}
