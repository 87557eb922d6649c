//! Anaerobic digestion chemistry (ADM1, benchmark formulation): 19 kinetic
//! processes, algebraic pH and dissolved-hydrogen solves, two-film gas
//! transfer into a shared headspace, and a sub-cycled reaction step.

mod equilibrium;
mod gas;
mod kinetics;
mod params;
mod reactor;

pub use equilibrium::{charge_balance, h2_balance, safeguarded_root, solve_h2, solve_ph, speciation, H2Context, Speciation, H2_TOL, PH_TOL};
pub use gas::{transfer_rates, GasHeadspace, GasTransfer};
pub use kinetics::{derivatives, inhibition_factors, kinetic_rates, Inhibition, InhibitionForm, NUM_PROCESSES, PROCESS_NAMES};
pub use params::{Adm1Params, Kinetics, PhLimits, PhysChem, Stoichiometry, Thermo, DEFAULT_PARAMS_TOML};
pub use reactor::{Adm1Mode, Inflow, ReactionReport, Reactor};

use serde::{Deserialize, Serialize};

pub const NUM_COMPONENTS: usize = 26;

pub const S_SU: usize = 0;
pub const S_AA: usize = 1;
pub const S_FA: usize = 2;
pub const S_VA: usize = 3;
pub const S_BU: usize = 4;
pub const S_PRO: usize = 5;
pub const S_AC: usize = 6;
pub const S_H2: usize = 7;
pub const S_CH4: usize = 8;
pub const S_IC: usize = 9;
pub const S_IN: usize = 10;
pub const S_I: usize = 11;
pub const X_C: usize = 12;
pub const X_CH: usize = 13;
pub const X_PR: usize = 14;
pub const X_LI: usize = 15;
pub const X_SU: usize = 16;
pub const X_AA: usize = 17;
pub const X_FA: usize = 18;
pub const X_C4: usize = 19;
pub const X_PRO: usize = 20;
pub const X_AC: usize = 21;
pub const X_H2: usize = 22;
pub const X_I: usize = 23;
pub const S_CAT: usize = 24;
pub const S_AN: usize = 25;

pub const COMPONENT_NAMES: [&str; NUM_COMPONENTS] = [
    "S_su", "S_aa", "S_fa", "S_va", "S_bu", "S_pro", "S_ac", "S_h2", "S_ch4", "S_IC", "S_IN", "S_I", "X_c", "X_ch",
    "X_pr", "X_li", "X_su", "X_aa", "X_fa", "X_c4", "X_pro", "X_ac", "X_h2", "X_I", "S_cat", "S_an",
];

/// Components measured in kg COD m^-3 (everything except inorganic carbon,
/// inorganic nitrogen and the two ion pools).
pub fn is_cod(i: usize) -> bool {
    !matches!(i, S_IC | S_IN | S_CAT | S_AN)
}

/// kg CH4 per kg COD.
pub const CH4_KG_PER_COD: f64 = 16.04 / 64.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Adm1State {
    pub c: [f64; NUM_COMPONENTS],
    /// Proton concentration from the last charge-balance solve (kmol m^-3).
    pub s_h: f64,
}

impl Default for Adm1State {
    fn default() -> Self {
        Self { c: [0.0; NUM_COMPONENTS], s_h: 1e-7 }
    }
}

impl Adm1State {
    pub fn from_components(c: [f64; NUM_COMPONENTS]) -> Self {
        Self { c, s_h: 1e-7 }
    }

    pub fn ph(&self) -> f64 {
        -self.s_h.log10()
    }

    /// Lab-scale inlet composition.
    pub fn inlet() -> Self {
        let mut c = [0.0; NUM_COMPONENTS];
        c[S_AA] = 0.044;
        c[S_IC] = 0.008;
        c[S_IN] = 0.002;
        c[S_I] = 0.028;
        c[X_CH] = 3.72;
        c[X_PR] = 16.9;
        c[X_LI] = 8.05;
        c[X_I] = 17.0;
        c[S_AN] = 0.0052;
        Self::from_components(c)
    }

    /// Mesophilic benchmark digester steady state (open-loop, 35 C).
    pub fn digester_steady_state() -> Self {
        let c = [
            0.012394, 0.0055432, 0.10741, 0.012333, 0.014003, 0.017584, 0.089315, 2.5055e-7, 0.05549, 0.095149,
            0.094468, 0.13087, 0.10792, 0.020517, 0.084220, 0.043629, 0.31222, 0.93167, 0.33839, 0.33577, 0.10112,
            0.67724, 0.28484, 17.2162, 0.0, 0.0052,
        ];
        Self { c, s_h: 5.4562e-8 }
    }

    /// Component-wise `w * a + (1 - w) * b`.
    pub fn blend(a: &Self, b: &Self, w: f64) -> Self {
        let mut c = [0.0; NUM_COMPONENTS];
        for (k, v) in c.iter_mut().enumerate() {
            *v = w * a.c[k] + (1.0 - w) * b.c[k];
        }
        Self { c, s_h: (a.s_h * b.s_h).sqrt() }
    }

    pub fn total_cod(&self) -> f64 {
        (0..NUM_COMPONENTS).filter(|&i| is_cod(i)).map(|i| self.c[i]).sum()
    }

    pub fn all_non_negative(&self) -> bool {
        self.c.iter().all(|v| *v >= 0.0)
    }
}
