//! Snapshot, VTK and time-series files, with readers that check each file
//! against its own header.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adm1::{is_cod, COMPONENT_NAMES, NUM_COMPONENTS};
use crate::config::{RunConfig, BASELINE_LANE, PRIMARY_LANE};
use crate::coupling::{relative_difference, Observation, Simulation};
use crate::particles::ParticleKind;
use crate::{Error, Result};

const BASE_COLUMNS: [(&str, &str); 12] = [
    ("id", "-"),
    ("kind", "-"),
    ("x", "m"),
    ("y", "m"),
    ("z", "m"),
    ("u", "m/s"),
    ("v", "m/s"),
    ("w", "m/s"),
    ("rho", "kg/m3"),
    ("p", "Pa"),
    ("T", "K"),
    ("scalar", "-"),
];

/// One particle's row in a snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotRow {
    pub id: usize,
    pub kind: ParticleKind,
    pub position: [f64; 3],
    pub velocity: [f64; 3],
    pub density: f64,
    pub pressure: f64,
    pub temperature: f64,
    pub scalar: f64,
    /// All ADM1 liquid components, present only when chemistry is on.
    pub adm1: Option<[f64; NUM_COMPONENTS]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub rows: Vec<SnapshotRow>,
}

impl Snapshot {
    /// Captures the particle state seen by one lane.
    pub fn capture(sim: &Simulation, lane: &str) -> Result<Self> {
        let l = sim.lane(lane).ok_or_else(|| Error::Invalid(format!("no lane named {lane}")))?;
        let ps = &sim.ps;
        let rows = (0..ps.len())
            .map(|i| SnapshotRow {
                id: i,
                kind: ps.kind[i],
                position: ps.position[i].into(),
                velocity: ps.velocity[i].into(),
                density: ps.density[i],
                pressure: ps.pressure[i],
                temperature: l.temperature[i],
                scalar: l.scalar[i],
                adm1: l.adm1.as_ref().map(|a| a.states[i].c),
            })
            .collect();
        Ok(Self { t: sim.t, rows })
    }

    pub fn has_chemistry(&self) -> bool {
        self.rows.first().is_some_and(|r| r.adm1.is_some())
    }
}

fn component_unit(k: usize) -> &'static str {
    if is_cod(k) {
        "kgCOD/m3"
    } else {
        "kmol/m3"
    }
}

/// Column names with units, as written to the header.
pub fn snapshot_columns(chemistry: bool) -> Vec<String> {
    let mut cols: Vec<String> = BASE_COLUMNS.iter().map(|(n, u)| format!("{n}[{u}]")).collect();
    if chemistry {
        cols.extend((0..NUM_COMPONENTS).map(|k| format!("{}[{}]", COMPONENT_NAMES[k], component_unit(k))));
    }
    cols
}

fn kind_code(k: ParticleKind) -> &'static str {
    match k {
        ParticleKind::Fluid => "fluid",
        ParticleKind::Boundary => "boundary",
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

/// Whitespace-separated columns. Values use shortest round-trip formatting,
/// so reading a file back reproduces every bit.
pub fn write_snapshot(snap: &Snapshot, path: &Path) -> Result<()> {
    let chemistry = snap.has_chemistry();
    if snap.rows.iter().any(|r| r.adm1.is_some() != chemistry) {
        return Err(Error::Invalid("snapshot rows disagree on ADM1 columns".into()));
    }
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let mut body = || -> std::io::Result<()> {
        writeln!(w, "# dsph snapshot")?;
        writeln!(w, "# time_s {:e}", snap.t)?;
        writeln!(w, "# {}", snapshot_columns(chemistry).join(" "))?;
        for r in &snap.rows {
            write!(w, "{} {}", r.id, kind_code(r.kind))?;
            for v in r.position.iter().chain(&r.velocity).chain(&[r.density, r.pressure, r.temperature, r.scalar]) {
                write!(w, " {v:e}")?;
            }
            if let Some(c) = &r.adm1 {
                for v in c {
                    write!(w, " {v:e}")?;
                }
            }
            writeln!(w)?;
        }
        w.flush()
    };
    body().map_err(io_err(path))
}

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Format { path: path.to_path_buf(), message: message.into() }
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut lines = BufReader::new(file).lines();
    let mut next = |what: &str| -> Result<String> {
        lines
            .next()
            .ok_or_else(|| format_err(path, format!("missing {what}")))?
            .map_err(io_err(path))
    };
    if next("magic line")? != "# dsph snapshot" {
        return Err(format_err(path, "not a dsph snapshot"));
    }
    let time = next("time line")?;
    let t: f64 = time
        .strip_prefix("# time_s ")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| format_err(path, format!("bad time line: {time}")))?;
    let header = next("column header")?;
    let cols: Vec<&str> = header.trim_start_matches("# ").split(' ').collect();
    let chemistry = if cols == snapshot_columns(false) {
        false
    } else if cols == snapshot_columns(true) {
        true
    } else {
        return Err(format_err(path, "unexpected column header"));
    };
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line.map_err(io_err(path))?;
        let row = n + 4;
        let fields: Vec<&str> = line.split(' ').collect();
        if fields.len() != cols.len() {
            return Err(format_err(path, format!("line {row}: {} fields, expected {}", fields.len(), cols.len())));
        }
        let id = fields[0].parse().map_err(|_| format_err(path, format!("line {row}: bad id")))?;
        let kind = match fields[1] {
            "fluid" => ParticleKind::Fluid,
            "boundary" => ParticleKind::Boundary,
            other => return Err(format_err(path, format!("line {row}: unknown kind {other}"))),
        };
        let nums = fields[2..]
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| format_err(path, format!("line {row}: {e}")))?;
        rows.push(SnapshotRow {
            id,
            kind,
            position: [nums[0], nums[1], nums[2]],
            velocity: [nums[3], nums[4], nums[5]],
            density: nums[6],
            pressure: nums[7],
            temperature: nums[8],
            scalar: nums[9],
            adm1: chemistry.then(|| std::array::from_fn(|k| nums[10 + k])),
        });
    }
    Ok(Snapshot { t, rows })
}

/// Legacy ASCII VTK polydata with one vertex per particle.
pub fn write_vtk(snap: &Snapshot, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let n = snap.rows.len();
    let mut body = || -> std::io::Result<()> {
        writeln!(w, "# vtk DataFile Version 3.0")?;
        writeln!(w, "dsph particles t={:e}", snap.t)?;
        writeln!(w, "ASCII\nDATASET POLYDATA\nPOINTS {n} double")?;
        for r in &snap.rows {
            writeln!(w, "{:e} {:e} {:e}", r.position[0], r.position[1], r.position[2])?;
        }
        writeln!(w, "VERTICES {n} {}", 2 * n)?;
        for i in 0..n {
            writeln!(w, "1 {i}")?;
        }
        writeln!(w, "POINT_DATA {n}")?;
        let scalar = |w: &mut BufWriter<File>, name: &str, f: &dyn Fn(&SnapshotRow) -> f64| -> std::io::Result<()> {
            writeln!(w, "SCALARS {name} double 1\nLOOKUP_TABLE default")?;
            for r in &snap.rows {
                writeln!(w, "{:e}", f(r))?;
            }
            Ok(())
        };
        scalar(&mut w, "kind", &|r| if r.kind == ParticleKind::Fluid { 0.0 } else { 1.0 })?;
        scalar(&mut w, "density", &|r| r.density)?;
        scalar(&mut w, "pressure", &|r| r.pressure)?;
        scalar(&mut w, "temperature", &|r| r.temperature)?;
        scalar(&mut w, "scalar", &|r| r.scalar)?;
        if snap.has_chemistry() {
            for k in 0..NUM_COMPONENTS {
                scalar(&mut w, COMPONENT_NAMES[k], &|r| r.adm1.map_or(0.0, |c| c[k]))?;
            }
        }
        writeln!(w, "VECTORS velocity double")?;
        for r in &snap.rows {
            writeln!(w, "{:e} {:e} {:e}", r.velocity[0], r.velocity[1], r.velocity[2])?;
        }
        w.flush()
    };
    body().map_err(io_err(path))
}

/// One row of a time-series file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeseriesRow {
    pub time_s: f64,
    pub total_ch4_kg: f64,
    pub released_ch4_kg: f64,
    /// Empty when no baseline is given or the baseline total is zero.
    pub rd_total_ch4: Option<f64>,
    pub mean_temperature_k: f64,
    pub scalar_min: f64,
    pub scalar_max: f64,
}

pub const TIMESERIES_HEADER: [&str; 7] =
    ["time_s", "total_ch4_kg", "released_ch4_kg", "rd_total_ch4", "mean_temperature_k", "scalar_min", "scalar_max"];

/// Rows for `lane`, with RD taken against `baseline` when given.
pub fn timeseries(log: &[Observation], lane: &str, baseline: Option<&str>) -> Result<Vec<TimeseriesRow>> {
    let find = |obs: &Observation, name: &str| {
        obs.lanes
            .iter()
            .find(|l| l.name == name)
            .cloned()
            .ok_or_else(|| Error::Invalid(format!("no lane named {name} at t = {}", obs.t)))
    };
    log.iter()
        .map(|obs| {
            let l = find(obs, lane)?;
            let rd = match baseline {
                Some(b) => relative_difference(l.total_ch4_kg, find(obs, b)?.total_ch4_kg),
                None => None,
            };
            Ok(TimeseriesRow {
                time_s: obs.t,
                total_ch4_kg: l.total_ch4_kg,
                released_ch4_kg: l.released_ch4_kg,
                rd_total_ch4: rd,
                mean_temperature_k: l.mean_temperature,
                scalar_min: l.scalar_min,
                scalar_max: l.scalar_max,
            })
        })
        .collect()
}

pub fn write_timeseries(rows: &[TimeseriesRow], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(BufWriter::new(file));
    let csv_err = |e: csv::Error| format_err(path, e.to_string());
    w.write_record(TIMESERIES_HEADER).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_timeseries(path: &Path) -> Result<Vec<TimeseriesRow>> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut r = csv::Reader::from_reader(BufReader::new(file));
    let header = r.headers().map_err(|e| format_err(path, e.to_string()))?.clone();
    if header.iter().ne(TIMESERIES_HEADER) {
        return Err(format_err(path, "unexpected time-series header"));
    }
    r.deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| format_err(path, format!("row {}: {e}", i + 1))))
        .collect()
}

/// RD of total CH4 per shared observation time.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub time_s: f64,
    pub rd_total_ch4: Option<f64>,
}

/// Pairs rows by index; the two files must share the same observation times.
pub fn compare(baseline: &[TimeseriesRow], run: &[TimeseriesRow]) -> Result<Vec<Comparison>> {
    if baseline.len() != run.len() {
        return Err(Error::Invalid(format!("row counts differ: {} vs {}", baseline.len(), run.len())));
    }
    baseline
        .iter()
        .zip(run)
        .map(|(b, r)| {
            if b.time_s != r.time_s {
                return Err(Error::Invalid(format!("observation times differ: {} vs {}", b.time_s, r.time_s)));
            }
            Ok(Comparison { time_s: b.time_s, rd_total_ch4: relative_difference(r.total_ch4_kg, b.total_ch4_kg) })
        })
        .collect()
}

/// Files produced by [`execute`].
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub steps: u64,
    pub t: f64,
    pub timeseries: Vec<PathBuf>,
    pub snapshots: Vec<PathBuf>,
    pub wall_seconds: f64,
}

/// File name of the time series for `lane`.
pub fn timeseries_file(lane: &str) -> String {
    if lane == PRIMARY_LANE {
        "timeseries.csv".into()
    } else {
        format!("timeseries_{lane}.csv")
    }
}

/// Builds and runs the configured simulation, writing the config echo,
/// one time series per lane and snapshots of the primary lane into `dir`.
pub fn execute(cfg: &RunConfig, dir: &Path) -> Result<RunSummary> {
    let start = std::time::Instant::now();
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let echo_path = dir.join("config.toml");
    std::fs::write(&echo_path, cfg.echo()?).map_err(io_err(&echo_path))?;
    let mut sim = cfg.build_simulation()?;
    log::info!(
        "case {} with {} particles ({} fluid), lanes: {}",
        cfg.case.id.name(),
        sim.ps.len(),
        sim.ps.fluid_count(),
        sim.lanes.iter().map(|l| l.name.as_str()).collect::<Vec<_>>().join(", ")
    );
    let snap_dir = dir.join("snapshots");
    if cfg.output.snapshots || cfg.output.vtk {
        std::fs::create_dir_all(&snap_dir).map_err(io_err(&snap_dir))?;
    }
    let every = cfg.output.snapshot_every_n_steps;
    let end = sim.t + cfg.duration();
    let mut snapshots = Vec::new();
    let write = |sim: &Simulation, snapshots: &mut Vec<PathBuf>| -> Result<()> {
        let snap = Snapshot::capture(sim, PRIMARY_LANE)?;
        let stem = snap_dir.join(format!("step_{:08}", sim.step_count));
        if cfg.output.snapshots {
            let path = stem.with_extension("txt");
            write_snapshot(&snap, &path)?;
            snapshots.push(path);
        }
        if cfg.output.vtk {
            let path = stem.with_extension("vtk");
            write_vtk(&snap, &path)?;
            snapshots.push(path);
        }
        Ok(())
    };
    let log = sim.run_with(cfg.duration(), cfg.run.observe_every_n_steps, |sim, obs| {
        let at_edge = sim.step_count == 0 || sim.t >= end;
        if at_edge || (every > 0 && sim.step_count % every == 0) {
            write(sim, &mut snapshots)?;
        }
        if let Some(o) = obs {
            log::debug!("t = {:.6} s, step {}", o.t, o.step);
        }
        Ok(())
    })?;
    let baseline = cfg.run.baseline.then_some(BASELINE_LANE);
    let mut timeseries_paths = Vec::new();
    for lane in &sim.lanes {
        let rows = timeseries(&log, &lane.name, baseline)?;
        let path = dir.join(timeseries_file(&lane.name));
        write_timeseries(&rows, &path)?;
        timeseries_paths.push(path);
    }
    Ok(RunSummary {
        steps: sim.step_count,
        t: sim.t,
        timeseries: timeseries_paths,
        snapshots,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn row(id: usize, chem: bool) -> SnapshotRow {
        let f = id as f64;
        SnapshotRow {
            id,
            kind: if id % 2 == 0 { ParticleKind::Fluid } else { ParticleKind::Boundary },
            position: [0.1 * f, 1.0 / 3.0, -2.5e-17],
            velocity: [f64::MIN_POSITIVE, 1e300, -0.0],
            density: 1000.0 + f,
            pressure: 101325.123456789,
            temperature: 308.15,
            scalar: 1.1e-3 + f * 1e-19,
            adm1: chem.then(|| std::array::from_fn(|k| (k as f64 + 1.0) / 7.0 + f)),
        }
    }

    #[test]
    fn empty_snapshot_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.txt");
        let snap = Snapshot { t: 0.0, rows: vec![] };
        write_snapshot(&snap, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 3);
        assert_eq!(read_snapshot(&path).unwrap(), snap);
    }

    #[test]
    fn snapshot_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        for chem in [false, true] {
            let path = dir.path().join(format!("s{chem}.txt"));
            let snap = Snapshot { t: 1.0 / 3.0, rows: (0..5).map(|i| row(i, chem)).collect() };
            write_snapshot(&snap, &path).unwrap();
            assert_eq!(read_snapshot(&path).unwrap(), snap);
        }
    }

    #[test]
    fn tank_snapshot_has_all_adm1_columns() {
        let cfg = parse_config("[case.tank]\ntarget_particles = 300\n").unwrap();
        let sim = cfg.build_simulation().unwrap();
        let snap = Snapshot::capture(&sim, "run").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tank.txt");
        write_snapshot(&snap, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let header = text.lines().nth(2).unwrap();
        let adm1_cols = header.split(' ').skip(1).filter(|c| c.contains("COD/") || c.contains("kmol/")).count();
        assert_eq!(adm1_cols, 26);
        assert_eq!(header.split(' ').count() - 1, BASE_COLUMNS.len() + 26);
        assert_eq!(read_snapshot(&path).unwrap(), snap);
    }

    #[test]
    fn snapshot_reader_rejects_damage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.txt");
        write_snapshot(&Snapshot { t: 0.0, rows: vec![row(0, false)] }, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, text.replace("fluid", "solid")).unwrap();
        assert!(matches!(read_snapshot(&path), Err(Error::Format { .. })));
        std::fs::write(&path, text.lines().take(3).collect::<Vec<_>>().join("\n") + "\n0 fluid 1 2\n").unwrap();
        assert!(matches!(read_snapshot(&path), Err(Error::Format { .. })));
        let missing = dir.path().join("nope.txt");
        match read_snapshot(&missing) {
            Err(Error::Io { path, .. }) => assert_eq!(path, missing),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn vtk_lists_every_point() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.vtk");
        write_vtk(&Snapshot { t: 0.5, rows: (0..4).map(|i| row(i, true)).collect() }, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# vtk DataFile Version 3.0\n"));
        assert!(text.contains("POINTS 4 double"));
        assert!(text.contains("VERTICES 4 8"));
        assert!(text.contains("SCALARS S_ch4 double 1"));
    }

    #[test]
    fn timeseries_round_trip_and_rd() {
        let cfg = parse_config("[case.tank]\ntarget_particles = 300\n[run]\nflow_enabled = false\n").unwrap();
        let mut sim = cfg.build_simulation().unwrap();
        sim.dt = Some(1e-3);
        let log = sim.run(0.01, 2).unwrap();
        let rows = timeseries(&log, "baseline", Some("baseline")).unwrap();
        assert_eq!(rows.len(), 6);
        assert!(rows.iter().all(|r| r.rd_total_ch4 == Some(0.0)));
        assert!(rows.windows(2).all(|w| w[1].released_ch4_kg >= w[0].released_ch4_kg));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ts.csv");
        write_timeseries(&rows, &path).unwrap();
        assert_eq!(read_timeseries(&path).unwrap(), rows);
        let cmp = compare(&rows, &rows).unwrap();
        assert!(cmp.iter().all(|c| c.rd_total_ch4 == Some(0.0)));
    }

    #[test]
    fn zero_duration_gives_single_row() {
        let cfg = parse_config("[case]\nid = \"cavity\"\n[case.cavity]\nparticles_across = 20\n").unwrap();
        let mut sim = cfg.build_simulation().unwrap();
        let log = sim.run(0.0, 1).unwrap();
        let rows = timeseries(&log, "run", Some("baseline")).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].time_s, 0.0);
        assert_eq!(rows[0].rd_total_ch4, None);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ts.csv");
        write_timeseries(&rows, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(read_timeseries(&path).unwrap(), rows);
    }

    #[test]
    fn execute_writes_every_file() {
        let text = "[case]\nid = \"cavity\"\n[case.cavity]\nparticles_across = 20\n[run]\nduration_s = 0.02\nobserve_every_n_steps = 5\n[output]\nsnapshot_every_n_steps = 10\nvtk = true\n[[variants]]\nname = \"sct1\"\ndiffusion = { Sc_T = 1.0 }\n";
        let cfg = parse_config(text).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let summary = execute(&cfg, dir.path()).unwrap();
        assert_eq!(summary.t, 0.02);
        assert_eq!(summary.timeseries.len(), 3);
        for p in &summary.timeseries {
            let rows = read_timeseries(p).unwrap();
            assert_eq!(rows.first().unwrap().time_s, 0.0);
            assert_eq!(rows.last().unwrap().time_s, 0.02);
        }
        let n_snap = 2 + (summary.steps.saturating_sub(1) / 10) as usize;
        assert_eq!(summary.snapshots.len(), 2 * n_snap);
        let last = summary.snapshots.iter().rev().find(|p| p.extension().unwrap() == "txt").unwrap();
        assert_eq!(read_snapshot(last).unwrap().t, 0.02);
        let echo = std::fs::read_to_string(dir.path().join("config.toml")).unwrap();
        assert_eq!(echo, cfg.echo().unwrap());
    }

    #[test]
    fn compare_rejects_mismatched_times() {
        let mk = |t| TimeseriesRow {
            time_s: t,
            total_ch4_kg: 1.0,
            released_ch4_kg: 0.0,
            rd_total_ch4: None,
            mean_temperature_k: 300.0,
            scalar_min: 0.0,
            scalar_max: 0.0,
        };
        assert!(compare(&[mk(0.0)], &[mk(1.0)]).is_err());
        assert!(compare(&[mk(0.0)], &[]).is_err());
        let mut r = mk(0.0);
        r.total_ch4_kg = 1.5;
        assert_eq!(compare(&[mk(0.0)], &[r]).unwrap()[0].rd_total_ch4, Some(0.5));
    }
}
