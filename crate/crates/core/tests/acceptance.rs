//! Acceptance suite. Each test prints one `PASS`/`FAIL` line to stderr
//! (outside the test harness capture) and then asserts.

mod common;

use std::io::Write;

use common::adm1_oracle::{BatchModel, BatchSetup};
use dsph::adm1::{Adm1Params, Adm1State, GasHeadspace, Reactor, NUM_COMPONENTS};
use dsph::cases::{
    axis_profile, build_cavity, build_rti, build_tank, total_variation, CavityParams, ChemistryLayout, LaneSpec, ModelSwitches, RtiParams,
    TankParams,
};
use dsph::config::parse_config;
use dsph::kernel::KernelSpec;
use dsph::neighbor::{CellIndex, Neighbor, NeighborList};
use dsph::output::{execute, read_timeseries};
use dsph::particles::{Particle, ParticleSet};
use dsph::transport::{self, greif_diffusivity, roberts_diffusivity, Closure, DiffusionConfig, RobertsNormalization};
use dsph::turbulence;
use dsph::{Mat3, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(n: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {n:>2} [{verdict}] {name}: {detail}");
}

// 1 -------------------------------------------------------------------------

/// Lattice strip periodic in y with minimum-image neighbor rows.
fn periodic_strip(nx: usize, ny: usize, dx: f64, rho: f64) -> (ParticleSet, KernelSpec, NeighborList) {
    let kernel = KernelSpec::for_spacing(dx, 2);
    let height = ny as f64 * dx;
    assert!(kernel.support_radius < 0.5 * height);
    let x0 = -0.5 * (nx as f64 - 1.0) * dx;
    let particles: Vec<Particle> = (0..nx)
        .flat_map(|i| (0..ny).map(move |j| (i, j)))
        .map(|(i, j)| Particle::fluid(Vec3::new(x0 + i as f64 * dx, (j as f64 + 0.5) * dx, 0.0), rho * dx * dx, rho))
        .collect();
    let ps = ParticleSet::from_particles(&particles);
    let n = ps.len();
    let reach = (kernel.support_radius / dx).ceil() as isize;
    let rows = (0..n)
        .map(|a| {
            let (ia, ja) = ((a / ny) as isize, (a % ny) as isize);
            let mut row = Vec::new();
            for di in -reach..=reach {
                let ib = ia + di;
                if ib < 0 || ib >= nx as isize {
                    continue;
                }
                for dj in -reach..=reach {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let jb = (ja + dj).rem_euclid(ny as isize);
                    let r = Vec3::new(-(di as f64) * dx, -(dj as f64) * dx, 0.0);
                    let dist = r.norm();
                    if dist >= kernel.support_radius {
                        continue;
                    }
                    row.push(Neighbor { j: ib as usize * ny + jb as usize, r, dist, w: kernel.value(dist), grad: kernel.gradient(&r) });
                }
            }
            row
        })
        .collect();
    (ps, kernel, NeighborList::from_rows(rows))
}

fn variance(ps: &ParticleSet, c: &[f64]) -> f64 {
    let mass: f64 = c.iter().sum();
    let mean: f64 = (0..ps.len()).map(|i| c[i] * ps.position[i].x).sum::<f64>() / mass;
    (0..ps.len()).map(|i| c[i] * (ps.position[i].x - mean).powi(2)).sum::<f64>() / mass
}

#[test]
fn criterion_01_gaussian_variance_growth() {
    let sigma0: f64 = 1.0;
    let dx = sigma0 / 50.0;
    let rho = 1000.0;
    let kin = 1.0; // D / rho
    let half_width = 10.0 * sigma0;
    let nx = (2.0 * half_width / dx) as usize + 1;
    let (ps, kernel, list) = periodic_strip(nx, 6, dx, rho);
    let mut c: Vec<f64> = ps.position.iter().map(|p| (-p.x * p.x / (2.0 * sigma0 * sigma0)).exp()).collect();
    let d = vec![kin * rho; ps.len()];
    let s0 = variance(&ps, &c);
    let t_double = s0 / (2.0 * kin);
    let n_steps = 8000usize;
    let dt = t_double / n_steps as f64;
    assert!(dt * kin / (dx * dx) < 0.2);
    let mut worst: f64 = 0.0;
    let mut detail = String::new();
    for step in 1..=n_steps {
        let rate = transport::scalar_diffusion_rhs(&ps, &list, &kernel, &c, &d);
        transport::apply_rate(&mut c, &rate, dt);
        if step % (n_steps / 4) == 0 {
            let t = step as f64 * dt;
            let exact = s0 + 2.0 * kin * t;
            let got = variance(&ps, &c);
            let rel = (got - exact).abs() / exact;
            let growth = ((got - s0) - 2.0 * kin * t).abs() / (2.0 * kin * t);
            worst = worst.max(rel);
            detail = format!("sigma^2 ratio {:.3}, rel error {rel:.2e}, growth error {growth:.2e}", got / s0);
        }
    }
    let pass = worst < 0.03;
    report(1, "Gaussian pulse variance growth", pass, &format!("worst rel error {worst:.2e} (tol 3e-2); final {detail}"));
    assert!(pass);
}

// 2 -------------------------------------------------------------------------

#[test]
fn criterion_02_closed_box_conservation() {
    let p = CavityParams { particles_across: 50, ..CavityParams::default() };
    let mut b = build_cavity(&p).unwrap();
    assert!(b.ps.fluid_count() >= 2500);
    for i in 0..b.ps.len() {
        if b.ps.is_fluid(i) {
            let y = b.ps.position[i].y;
            b.temperature[i] = if y > 0.5 * p.height { 310.0 } else { 300.0 };
        }
    }
    let closures = [("gdh", Closure::Gdh), ("roberts", Closure::Roberts), ("greif", Closure::Greif)];
    let lanes: Vec<LaneSpec> = closures
        .iter()
        .map(|(name, closure)| LaneSpec {
            name: name.to_string(),
            diffusion: DiffusionConfig {
                closure: *closure,
                thermal_enabled: true,
                chemical_enabled: true,
                ..b.diffusion.clone()
            },
            chemistry: false,
        })
        .collect();
    let mut sim = b.into_simulation(&lanes, &ModelSwitches::default()).unwrap();
    let before = sim.observe();
    let start: Vec<Vec<f64>> = sim.lanes.iter().map(|l| l.scalar.clone()).collect();
    for _ in 0..1000 {
        let dt = sim.next_dt().unwrap();
        sim.step(dt).unwrap();
    }
    sim.flush().unwrap();
    let after = sim.observe();
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, (name, _)) in closures.iter().enumerate() {
        let (b0, b1) = (&before.lanes[k], &after.lanes[k]);
        let ds = ((b1.scalar_content - b0.scalar_content) / b0.scalar_content).abs();
        let dth = ((b1.thermal_content - b0.thermal_content) / b0.thermal_content).abs();
        let moved: f64 = sim.lanes[k].scalar.iter().zip(&start[k]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        pass &= ds < 1e-8 && dth < 1e-8 && moved > 0.0;
        parts.push(format!("{name}: scalar {ds:.1e}, thermal {dth:.1e}, max |dC| {moved:.1e}"));
    }
    report(2, "closed-box conservation over 1000 steps", pass, &parts.join("; "));
    assert!(pass);
}

// 3 -------------------------------------------------------------------------

fn oracle_mismatch(initial: Adm1State) -> (f64, f64) {
    let params = Adm1Params::default();
    let t = params.physchem.t_op;
    let v_liq = 1.0;
    let hs = GasHeadspace::for_liquid_volume(v_liq, &params);
    let mut reactor = Reactor::new(params.clone(), hs.clone());
    let mut states = vec![initial];
    reactor.equilibrate(&mut states, &[t]).unwrap();
    let start = states[0].c;
    reactor.react(&mut states, &[v_liq], &[t], 1.0).unwrap();
    let model = BatchModel::new(BatchSetup { params, temperature: t, v_liq, v_gas: hs.volume, k_p: hs.k_p });
    let oracle = model.run(&start, 1.0);
    let worst = (0..NUM_COMPONENTS)
        .map(|k| (states[0].c[k] - oracle.liquid[k]).abs() / oracle.liquid[k].abs().max(1e-12))
        .fold(0.0, f64::max);
    let gas = (reactor.headspace.methane_kg() - oracle.gas_ch4_kg).abs() / oracle.gas_ch4_kg.abs().max(1e-12);
    (worst, gas)
}

#[test]
fn criterion_03_adm1_matches_stiff_oracle() {
    let (inlet, inlet_gas) = oracle_mismatch(Adm1State::inlet());
    let (digester, digester_gas) = oracle_mismatch(Adm1State::digester_steady_state());
    let pass = inlet < 1e-3 && digester < 1e-3;
    report(
        3,
        "ADM1 batch vs stiff ODE oracle at 1 d",
        pass,
        &format!(
            "initial composition: worst state rel {inlet:.1e}, headspace CH4 {inlet_gas:.1e}; \
             with biomass (steady state): worst {digester:.1e}, headspace CH4 {digester_gas:.1e} (tol 1e-3)"
        ),
    );
    assert!(pass);
}

// 4 -------------------------------------------------------------------------

#[test]
fn criterion_04_k_sps_residual() {
    const C_K: f64 = 0.094;
    const C_E: f64 = 1.048;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let delta = 2.0 * 1.3 * 0.01;
    let mut worst: f64 = 0.0;
    let mut active = 0;
    for _ in 0..10_000 {
        let scale = 10f64.powf(rng.gen_range(-3.0..3.0));
        let mut s = Mat3::zeros();
        for i in 0..3 {
            for j in i..3 {
                let v = scale * rng.gen_range(-1.0..1.0);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        let k = turbulence::solve_k_sps(&s, delta);
        assert!(k >= 0.0 && k.is_finite());
        let dev = s - Mat3::identity() * (s.trace() / 3.0);
        let nu_t = C_K * delta * k.sqrt();
        let production_dev = 2.0 * nu_t * dev.component_mul(&s).sum();
        let production_iso = 2.0 / 3.0 * k * s.trace();
        let dissipation = C_E * k.powf(1.5) / delta;
        let residual = production_dev - production_iso - dissipation;
        let magnitude = production_dev.abs().max(production_iso.abs()).max(dissipation);
        if magnitude > 0.0 {
            active += 1;
            worst = worst.max(residual.abs() / magnitude);
        }
    }
    let pass = worst < 1e-10 && active == 10_000;
    report(4, "k_SPS equilibrium residual", pass, &format!("worst relative residual {worst:.2e} over {active} tensors (tol 1e-10)"));
    assert!(pass);
}

// 5 -------------------------------------------------------------------------

fn closure_values(velocity: impl Fn(Vec3) -> Vec3) -> f64 {
    let mut b = build_cavity(&CavityParams { particles_across: 20, ..CavityParams::default() }).unwrap();
    for i in 0..b.ps.len() {
        b.ps.velocity[i] = velocity(b.ps.position[i]);
    }
    let index = CellIndex::build(&b.ps.position, b.kernel.support_radius).unwrap();
    let list = NeighborList::build(&index, &b.kernel, |_, _| true);
    let mut worst: f64 = 0.0;
    for a in (0..b.ps.len()).filter(|&a| b.ps.is_fluid(a)) {
        for norm in [RobertsNormalization::AsPrinted, RobertsNormalization::Shepard] {
            worst = worst.max(roberts_diffusivity(&b.ps, &list, &b.kernel, a, norm).0.abs());
        }
        worst = worst.max(greif_diffusivity(&b.ps, &list, &b.kernel, a).0.abs());
    }
    worst
}

fn chemistry_trajectories(steps: usize) -> (Vec<Adm1State>, Vec<Adm1State>, f64, f64) {
    let p = TankParams { target_particles: 1500, chemistry: ChemistryLayout::Layered, ..TankParams::default() };
    let b = build_tank(&p).unwrap();
    let gdh = DiffusionConfig {
        closure: Closure::Gdh,
        sc_t: f64::INFINITY,
        nu: Some(0.0),
        thermal_enabled: false,
        chemical_enabled: true,
        ..DiffusionConfig::default()
    };
    let lanes = [
        LaneSpec { name: "reaction".into(), diffusion: DiffusionConfig::disabled(), chemistry: true },
        LaneSpec { name: "gdh".into(), diffusion: gdh, chemistry: true },
    ];
    let mut sim = b.into_simulation(&lanes, &ModelSwitches::default()).unwrap();
    let log = sim.run(steps as f64 * sim.stable_dt(), 1).unwrap();
    let last = log.last().unwrap();
    let states = |k: usize| sim.lanes[k].adm1.as_ref().unwrap().states.clone();
    (states(0), states(1), last.lanes[0].total_ch4_kg, last.lanes[1].total_ch4_kg)
}

#[test]
fn criterion_05_closure_limits() {
    let at_rest = closure_values(|_| Vec3::zeros());
    let shifted = closure_values(|_| Vec3::new(0.37, -1.25, 0.0));
    let (reaction, gdh, m_reaction, m_gdh) = chemistry_trajectories(60);
    let identical = reaction.iter().zip(&gdh).all(|(a, b)| a.c.iter().zip(&b.c).all(|(x, y)| x.to_bits() == y.to_bits()) && a.s_h.to_bits() == b.s_h.to_bits());
    let pass = at_rest == 0.0 && shifted == 0.0 && identical && m_reaction.to_bits() == m_gdh.to_bits() && m_reaction > 0.0;
    report(
        5,
        "closure limits",
        pass,
        &format!(
            "max Roberts/Greif D on uniform field {at_rest:e}, on rigid translation {shifted:e}; \
             GDH (Sc_T = inf, nu = 0) vs reaction-only: states bit-identical = {identical}, total CH4 {m_gdh:e} vs {m_reaction:e}"
        ),
    );
    assert!(pass);
}

// 8 -------------------------------------------------------------------------

#[test]
fn criterion_08_rti_profile_smoothing() {
    let p = RtiParams::default();
    let b = build_rti(&p).unwrap();
    let n_bins = (p.particles_across * 3 / 2).max(2);
    let lanes = [
        LaneSpec { name: "diffusion".into(), diffusion: b.diffusion.clone(), chemistry: false },
        LaneSpec { name: "no_diffusion".into(), diffusion: DiffusionConfig::disabled(), chemistry: false },
    ];
    let mut sim = b.into_simulation(&lanes, &ModelSwitches::default()).unwrap();
    sim.run(p.duration, 1000).unwrap();
    let tv = |lane: &str| {
        let prof = axis_profile(&sim.ps, &sim.lane(lane).unwrap().temperature, 1, n_bins, 0.0, p.height).unwrap();
        total_variation(&prof)
    };
    let (on, off) = (tv("diffusion"), tv("no_diffusion"));
    let pass = on < off;
    report(
        8,
        "RTI temperature profile smoothing",
        pass,
        &format!("total variation at t = {} s over {n_bins} bins: diffusion on {on:.6} K, off {off:.6} K", sim.t),
    );
    assert!(pass);
}

// 9 -------------------------------------------------------------------------

fn timed_steps(closure: Closure, steps: usize) -> f64 {
    let p = CavityParams { particles_across: 50, ..CavityParams::default() };
    let b = build_cavity(&p).unwrap();
    let diffusion = DiffusionConfig { closure, sc: 1.0, thermal_enabled: true, chemical_enabled: true, ..b.diffusion.clone() };
    let lanes = [LaneSpec { name: "run".into(), diffusion, chemistry: false }];
    let mut sim = b.into_simulation(&lanes, &ModelSwitches::default()).unwrap();
    for _ in 0..20 {
        let dt = sim.next_dt().unwrap();
        sim.step(dt).unwrap();
    }
    let start = std::time::Instant::now();
    for _ in 0..steps {
        let dt = sim.next_dt().unwrap();
        sim.step(dt).unwrap();
    }
    start.elapsed().as_secs_f64() / steps as f64
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

#[test]
fn criterion_09_closure_overhead() {
    let configs = [Closure::None, Closure::Gdh, Closure::Roberts, Closure::Greif];
    let mut samples: Vec<Vec<f64>> = vec![Vec::new(); configs.len()];
    for _ in 0..5 {
        for (k, c) in configs.iter().enumerate() {
            samples[k].push(timed_steps(*c, 150));
        }
    }
    let t: Vec<f64> = samples.into_iter().map(median).collect();
    let overhead = |k: usize| t[k] / t[0] - 1.0;
    let pass = overhead(1) < 0.10;
    report(
        9,
        "turbulent diffusion overhead",
        pass,
        &format!(
            "mean step {:.3} ms with constant diffusion; GDH {:+.1}% (tol +10%); Roberts {:+.1}%, Greif {:+.1}% (not bounded)",
            t[0] * 1e3,
            100.0 * overhead(1),
            100.0 * overhead(2),
            100.0 * overhead(3)
        ),
    );
    assert!(pass);
}

// 10 ------------------------------------------------------------------------

#[test]
fn criterion_10_bitwise_determinism() {
    let text = "[case.tank]\ntarget_particles = 1500\nchemistry = \"layered\"\n\
                [run]\nduration_s = 0.4\nobserve_every_n_steps = 5\n\
                [output]\nsnapshots = false\n\
                [[variants]]\nname = \"roberts\"\ndiffusion = { closure = \"roberts\" }\n";
    let cfg = parse_config(text).unwrap();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let summaries: Vec<_> = dirs.iter().map(|d| execute(&cfg, d.path()).unwrap()).collect();
    let mut identical = summaries[0].timeseries.len() == summaries[1].timeseries.len();
    let mut rows = 0;
    for (a, b) in summaries[0].timeseries.iter().zip(&summaries[1].timeseries) {
        let (x, y) = (std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
        identical &= x == y && a.file_name() == b.file_name();
        rows += read_timeseries(a).unwrap().len();
    }
    let pass = identical && rows > 3 * 2;
    report(
        10,
        "bitwise determinism",
        pass,
        &format!("{} time-series files ({rows} rows, {} steps) identical across two runs: {identical}", summaries[0].timeseries.len(), summaries[0].steps),
    );
    assert!(pass);
}

// 6 and 7 -------------------------------------------------------------------

/// Final RD of total CH4 per lane from one 200 s tank run with lanes
/// `run` (Sc_T = 0.2), `sct1`, `sct5` and `thermal` (Pr_T = 0.85), all with
/// turbulent diffusion only (nu = 0) against the reaction-only baseline.
struct TankStudy {
    fluid: usize,
    t_end: f64,
    rd: Vec<(String, f64)>,
    minutes: f64,
}

impl TankStudy {
    fn rd(&self, lane: &str) -> f64 {
        self.rd.iter().find(|(n, _)| n == lane).map(|(_, v)| *v).expect("lane present")
    }
}

fn tank_study() -> &'static TankStudy {
    static STUDY: std::sync::OnceLock<TankStudy> = std::sync::OnceLock::new();
    STUDY.get_or_init(|| {
        let text = "[case.tank]\nchemistry = \"layered\"\n\
                    [adm1]\nevery_n_steps = 100\n\
                    [diffusion]\nSc_T = 0.2\nnu = 0.0\nthermal_enabled = false\nevery_n_steps = 10\n\
                    [run]\nobserve_every_n_steps = 2000\n\
                    [output]\nsnapshots = false\n\
                    [[variants]]\nname = \"sct1\"\ndiffusion = { Sc_T = 1.0 }\n\
                    [[variants]]\nname = \"sct5\"\ndiffusion = { Sc_T = 5.0 }\n\
                    [[variants]]\nname = \"thermal\"\ndiffusion = { thermal_enabled = true, chemical_enabled = false, Pr_T = 0.85 }\n";
        let cfg = parse_config(text).unwrap();
        let fluid = cfg.build_case().unwrap().ps.fluid_count();
        let dir = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("tank_study");
        let summary = execute(&cfg, &dir).unwrap();
        let rd = summary
            .timeseries
            .iter()
            .map(|p| {
                let rows = read_timeseries(p).unwrap();
                let last = rows.last().unwrap();
                let name = p.file_stem().unwrap().to_string_lossy().trim_start_matches("timeseries_").replace("timeseries", "run");
                (name, last.rd_total_ch4.expect("baseline methane is positive"))
            })
            .collect();
        TankStudy { fluid, t_end: summary.t, rd, minutes: summary.wall_seconds / 60.0 }
    })
}

#[test]
fn criterion_06_schmidt_monotonicity() {
    let s = tank_study();
    let (a, b, c) = (s.rd("run").abs(), s.rd("sct1").abs(), s.rd("sct5").abs());
    let pass = s.fluid >= 5000 && s.t_end == 200.0 && a >= b && b >= c;
    report(
        6,
        "Sc_T monotonicity of |RD total CH4|",
        pass,
        &format!(
            "{} fluid particles, t = {} s ({:.0} min): |RD| Sc_T=0.2 {a:.3e} >= Sc_T=1 {b:.3e} >= Sc_T=5 {c:.3e}",
            s.fluid, s.t_end, s.minutes
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_07_thermal_dominance() {
    let s = tank_study();
    let (thermal, chemical) = (s.rd("thermal").abs(), s.rd("run").abs());
    let pass = s.fluid >= 5000 && s.t_end == 200.0 && thermal > chemical;
    report(
        7,
        "thermal vs chemical turbulent diffusion",
        pass,
        &format!("t = {} s: |RD| thermal (Pr_T 0.85) {thermal:.3e} vs chemical (Sc_T 0.2) {chemical:.3e}", s.t_end),
    );
    assert!(pass);
}
