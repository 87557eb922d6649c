use super::kinetics::{InhibitionForm, kinetic_rates};
use super::params::{Adm1Params, Thermo};
use super::*;
use crate::error::{Error, Result};

/// Ion speciation at a solved proton concentration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Speciation {
    pub s_h: f64,
    pub ph: f64,
    pub s_hco3: f64,
    pub s_co2: f64,
    pub s_nh3: f64,
    pub s_nh4: f64,
    pub s_ac_ion: f64,
    pub s_pro_ion: f64,
    pub s_bu_ion: f64,
    pub s_va_ion: f64,
    pub s_oh: f64,
}

#[inline]
fn dissociated(ka: f64, total: f64, s_h: f64) -> f64 {
    ka * total.max(0.0) / (ka + s_h)
}

pub fn speciation(c: &[f64; NUM_COMPONENTS], s_h: f64, th: &Thermo) -> Speciation {
    let s_hco3 = dissociated(th.ka_co2, c[S_IC], s_h);
    let s_nh3 = dissociated(th.ka_in, c[S_IN], s_h);
    Speciation {
        s_h,
        ph: -s_h.log10(),
        s_hco3,
        s_co2: c[S_IC].max(0.0) - s_hco3,
        s_nh3,
        s_nh4: c[S_IN].max(0.0) - s_nh3,
        s_ac_ion: dissociated(th.ka_ac, c[S_AC], s_h),
        s_pro_ion: dissociated(th.ka_pro, c[S_PRO], s_h),
        s_bu_ion: dissociated(th.ka_bu, c[S_BU], s_h),
        s_va_ion: dissociated(th.ka_va, c[S_VA], s_h),
        s_oh: th.kw / s_h,
    }
}

/// Charge-balance residual `E(S_H)` and its derivative.
pub fn charge_balance(c: &[f64; NUM_COMPONENTS], s_h: f64, th: &Thermo) -> (f64, f64) {
    let d2 = |ka: f64, total: f64| ka * total.max(0.0) / ((ka + s_h) * (ka + s_h));
    let s_in = c[S_IN].max(0.0);
    let s_nh4 = s_in * s_h / (th.ka_in + s_h);
    let e = c[S_CAT] + s_nh4 + s_h
        - dissociated(th.ka_co2, c[S_IC], s_h)
        - dissociated(th.ka_ac, c[S_AC], s_h) / 64.0
        - dissociated(th.ka_pro, c[S_PRO], s_h) / 112.0
        - dissociated(th.ka_bu, c[S_BU], s_h) / 160.0
        - dissociated(th.ka_va, c[S_VA], s_h) / 208.0
        - th.kw / s_h
        - c[S_AN];
    let de = d2(th.ka_in, s_in)
        + 1.0
        + d2(th.ka_co2, c[S_IC])
        + d2(th.ka_ac, c[S_AC]) / 64.0
        + d2(th.ka_pro, c[S_PRO]) / 112.0
        + d2(th.ka_bu, c[S_BU]) / 160.0
        + d2(th.ka_va, c[S_VA]) / 208.0
        + th.kw / (s_h * s_h);
    (e, de)
}

/// Newton iteration kept inside a sign-change bracket `[lo, hi]`; steps
/// that leave the bracket, and every step after `max_newton` iterations,
/// are replaced by bisection (geometric when `log_scale`). Returns the root
/// and its residual.
pub fn safeguarded_root(
    mut f: impl FnMut(f64) -> (f64, f64),
    mut lo: f64,
    mut hi: f64,
    x0: f64,
    tol: f64,
    max_newton: usize,
    log_scale: bool,
    what: &str,
) -> Result<(f64, f64)> {
    let (flo, _) = f(lo);
    let (fhi, _) = f(hi);
    if flo.abs() < tol {
        return Ok((lo, flo));
    }
    if fhi.abs() < tol {
        return Ok((hi, fhi));
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::SolverFailure { what: format!("{what}: root not bracketed on [{lo:e}, {hi:e}]"), residual: flo.abs().min(fhi.abs()) });
    }
    let lo_sign = flo.signum();
    let mid = |lo: f64, hi: f64| if log_scale && lo > 0.0 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
    let mut x = if x0 > lo && x0 < hi { x0 } else { mid(lo, hi) };
    let mut best = (x, f64::INFINITY);
    for iter in 0..(max_newton + 1200) {
        let (fx, dfx) = f(x);
        if !fx.is_finite() {
            break;
        }
        if fx.abs() < best.1 {
            best = (x, fx.abs());
        }
        let step = if dfx != 0.0 { fx / dfx } else { f64::INFINITY };
        if fx == 0.0 || (fx.abs() < tol && step.abs() <= 1e-13 * x.abs()) {
            return Ok((x, fx));
        }
        if fx.signum() == lo_sign {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(f64::MIN_POSITIVE) {
            if fx.abs() < tol {
                return Ok((x, fx));
            }
            break;
        }
        let newton = x - step;
        x = if iter < max_newton && dfx != 0.0 && newton > lo && newton < hi { newton } else { mid(lo, hi) };
    }
    Err(Error::SolverFailure { what: what.to_string(), residual: best.1 })
}

pub const PH_TOL: f64 = 1e-12;
pub const H2_TOL: f64 = 1e-12;

/// Solves the charge balance for `S_H`, starting from `guess`.
pub fn solve_ph(c: &[f64; NUM_COMPONENTS], th: &Thermo, guess: f64) -> Result<Speciation> {
    let (mut lo, mut hi) = (1e-14, 1.0);
    while charge_balance(c, lo, th).0 > 0.0 && lo > 1e-40 {
        lo *= 1e-3;
    }
    while charge_balance(c, hi, th).0 < 0.0 && hi < 1e6 {
        hi *= 10.0;
    }
    let (s_h, _) = safeguarded_root(|x| charge_balance(c, x, th), lo, hi, guess, PH_TOL, 50, true, "charge balance")?;
    Ok(speciation(c, s_h, th))
}

/// Hydrogen balance terms that do not depend on the liquid S_h2.
#[derive(Debug, Clone, Copy)]
pub struct H2Context {
    /// `q_in / V` (per day).
    pub dilution: f64,
    pub s_h2_in: f64,
    /// Henry equilibrium concentration `16 K_H p_h2` (kg COD m^-3).
    pub s_h2_eq: f64,
    pub k_la: f64,
}

/// `E(S_h2)` and `dE/dS_h2` with the other components held fixed.
pub fn h2_balance(
    c: &[f64; NUM_COMPONENTS],
    s_h2: f64,
    sp: &Speciation,
    params: &Adm1Params,
    form: InhibitionForm,
    ctx: &H2Context,
) -> (f64, f64) {
    let st = &params.stoichiometry;
    let k = &params.kinetics;
    let mut trial = *c;
    trial[S_H2] = s_h2;
    let inh = inhibition_factors(&trial, sp.s_h, sp.s_nh3, params, form);
    let rho = kinetic_rates(&trial, &inh, k);
    let (w7, w8, w9, w10) = (
        (1.0 - st.y_fa) * st.fa_h2,
        (1.0 - st.y_c4) * st.va_h2,
        (1.0 - st.y_c4) * st.bu_h2,
        (1.0 - st.y_pro) * st.pro_h2,
    );
    let e = (1.0 - st.y_su) * st.f_h2_su * rho[4] + (1.0 - st.y_aa) * st.f_h2_aa * rho[5] + w7 * rho[6]
        + w8 * rho[7]
        + w9 * rho[8]
        + w10 * rho[9]
        - rho[11]
        - ctx.k_la * (s_h2 - ctx.s_h2_eq)
        + ctx.dilution * (ctx.s_h2_in - s_h2);

    let s = s_h2.max(0.0);
    // d ln I / dS for each hydrogen inhibition constant
    let dlog = |ki: f64| match form {
        InhibitionForm::Standard => -1.0 / (ki + s),
        InhibitionForm::AsPrinted if s > 0.0 => ki / (s * (s + ki)),
        InhibitionForm::AsPrinted => 0.0,
    };
    let uptake_slope = k.k_m_h2 * c[X_H2].max(0.0) * inh.uptake()[7] * k.k_s_h2 / ((k.k_s_h2 + s) * (k.k_s_h2 + s));
    let mut de = w7 * rho[6] * dlog(k.k_i_h2_fa)
        + (w8 * rho[7] + w9 * rho[8]) * dlog(k.k_i_h2_c4)
        + w10 * rho[9] * dlog(k.k_i_h2_pro)
        - ctx.k_la
        - ctx.dilution
        - uptake_slope;
    if form == InhibitionForm::AsPrinted && s == 0.0 {
        // production terms vanish at zero and their slope is unbounded
        let w = 1e-12;
        de = (h2_balance(c, w, sp, params, form, ctx).0 - e) / w;
    }
    (e, de)
}

/// Dissolved hydrogen from its algebraic balance. Returns the current value
/// when the balance vanishes identically.
pub fn solve_h2(
    c: &[f64; NUM_COMPONENTS],
    sp: &Speciation,
    params: &Adm1Params,
    form: InhibitionForm,
    ctx: &H2Context,
) -> Result<f64> {
    let current = c[S_H2].max(0.0);
    let (e_cur, de_cur) = h2_balance(c, current, sp, params, form, ctx);
    if e_cur == 0.0 && de_cur == 0.0 {
        return Ok(current);
    }
    let (e0, _) = h2_balance(c, 0.0, sp, params, form, ctx);
    if e0 <= 0.0 {
        return Ok(0.0);
    }
    let (root, _) = safeguarded_root(
        |x| h2_balance(c, x, sp, params, form, ctx),
        0.0,
        1.0,
        current,
        H2_TOL,
        50,
        false,
        "hydrogen balance",
    )?;
    Ok(root)
}
