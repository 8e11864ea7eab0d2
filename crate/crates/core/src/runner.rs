//! Batch execution of configured scenarios.
//!
//! Every scenario writes `summary.json`; flow scenarios add `series.csv`,
//! div-curl certification adds `divcurl.json` and the balance system in the
//! binary format, sweeps add `sweep.csv` and one subdirectory per cell.
//! Files are written to a temporary name and renamed into place.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::{DivCurlSource, RunConfig, Scenario};
use crate::diagnostics::DiagnosticsSample;
use crate::divcurl::{self, synthetic, BalanceSystem, DivCurlReport};
use crate::error::{Result, SmfError};
use crate::flow::{evolve, Evolution, RunStatus};
use crate::geometry::TargetKind;
use crate::initial::{spin_wave_exact, InitialData};

/// One acceptance gate: `value ≤ tolerance` unless stated otherwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Gate {
    fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, passed: value <= tolerance }
    }

    /// A yes/no condition, recorded as value 1 (true) or 0.
    fn holds(name: &str, ok: bool) -> Self {
        Self { name: name.into(), value: if ok { 1.0 } else { 0.0 }, tolerance: 1.0, passed: ok }
    }
}

/// Worst-case departures from conservation over the stored samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    pub m: f64,
    pub q: f64,
    pub b_integral: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxResiduals {
    pub balance1: Option<f64>,
    pub balance2: Option<f64>,
    pub identity: f64,
    /// Normal part of the spectral `∂ₓu`, a resolution indicator.
    pub projection: f64,
    /// `max ||u_j| − 1|` over stored states on the sphere, 0 elsewhere.
    pub constraint: f64,
}

/// What a flow run reports about itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowReport {
    pub status: RunStatus,
    pub samples: usize,
    pub initial: DiagnosticsSample,
    pub terminal: DiagnosticsSample,
    pub drift: Drift,
    pub max_residuals: MaxResiduals,
    pub xi1_final: f64,
    pub xi2_final: f64,
    pub xi1_nondecreasing: bool,
    /// `sup_t E(t) / (E(0) + 1)`
    pub energy_ratio: f64,
    pub si1_max_ratio: Option<f64>,
    /// L∞ distance to the exact spin wave at the last stored time.
    pub exact_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub cell: String,
    pub initial_data: InitialData,
    pub n_points: usize,
    pub m0: Option<f64>,
    pub e0: Option<f64>,
    pub energy_ratio: Option<f64>,
    pub si1_max_ratio: Option<f64>,
    pub status: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    /// Sorted by `m(0)`; cells that failed before producing a sample last.
    pub rows: Vec<SweepRow>,
    /// Whether the energy ratio is nondecreasing in `m(0)` over the
    /// completed cells.
    pub monotone_in_m0: bool,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cell,initial_data,n_points,m0,E0,energy_ratio,si1_max_ratio,status\n");
        let num = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:e}"));
        for r in &self.rows {
            out.push_str(&format!(
                "{},\"{}\",{},{},{},{},{},{}\n",
                r.cell,
                r.initial_data,
                r.n_points,
                num(r.m0),
                num(r.e0),
                num(r.energy_ratio),
                num(r.si1_max_ratio),
                r.status
            ));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: RunConfig,
    pub flow: Option<FlowReport>,
    pub divcurl: Option<DivCurlReport>,
    pub sweep: Option<SweepTable>,
    pub gates: Vec<Gate>,
    pub passed: bool,
    pub aborted: bool,
    /// Seconds; the only field that varies between identical runs.
    pub wall_time: f64,
}

impl RunSummary {
    /// 0 pass, 1 gate failure, 3 solver abort.
    pub fn exit_code(&self) -> i32 {
        if self.aborted {
            3
        } else if self.passed {
            0
        } else {
            1
        }
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().ok_or_else(|| SmfError::Io(format!("{} has no file name", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn prepare_dir(dir: &Path) -> Result<()> {
    let err = |e: std::io::Error| SmfError::InvalidConfig { key: "output_dir".into(), message: format!("{}: {e}", dir.display()) };
    std::fs::create_dir_all(dir).map_err(err)?;
    // Creating the directory is not proof that we may write to it.
    let probe = dir.join(".smf-write-probe");
    std::fs::write(&probe, b"").map_err(err)?;
    std::fs::remove_file(&probe).map_err(err)?;
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(v).map_err(|e| SmfError::Io(e.to_string()))?;
    s.push(b'\n');
    Ok(s)
}

fn flow_report(cfg: &RunConfig, ev: &Evolution) -> Result<FlowReport> {
    let series = &ev.series;
    let s = &series.samples;
    let (first, last) = (&s[0], s.last().unwrap());
    let rel = |x: f64, x0: f64| (x - x0).abs() / x0.abs().max(1.0);
    let max_of = |f: &dyn Fn(&DiagnosticsSample) -> f64| s.iter().map(f).fold(0.0, f64::max);
    let drift = Drift {
        m: max_of(&|d| if first.m > 0.0 { (d.m - first.m).abs() / first.m } else { d.m.abs() }),
        q: max_of(&|d| rel(d.q, first.q)),
        b_integral: max_of(&|d| rel(d.b_integral, first.b_integral)),
    };
    let max_opt = |v: &[f64]| (!v.is_empty()).then(|| v.iter().cloned().fold(0.0, f64::max));
    let max_residuals = MaxResiduals {
        balance1: max_opt(&series.balance1_residual),
        balance2: max_opt(&series.balance2_residual),
        identity: max_of(&|d| d.identity_residual.abs()),
        projection: max_of(&|d| d.proj_residual),
        constraint: constraint_deviation(ev),
    };
    let si1 = s.iter().filter_map(|d| d.monitors().si1.ratio).fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r))));
    let exact_error = match cfg.initial_data {
        InitialData::SpinWave { theta, n } => {
            let u = ev.trajectory.last();
            let exact = spin_wave_exact(u.geometry().clone(), u.grid().clone(), theta, n, u.time())?;
            Some(u.distance_linf(&exact)?)
        }
        _ => None,
    };
    Ok(FlowReport {
        status: ev.status.clone(),
        samples: s.len(),
        initial: first.clone(),
        terminal: last.clone(),
        drift,
        max_residuals,
        xi1_final: *series.xi1.last().unwrap(),
        xi2_final: *series.xi2.last().unwrap(),
        xi1_nondecreasing: series.xi1.windows(2).all(|w| w[1] >= w[0]),
        energy_ratio: max_of(&|d| d.energy) / (first.energy + 1.0),
        si1_max_ratio: si1,
        exact_error,
    })
}

fn constraint_deviation(ev: &Evolution) -> f64 {
    ev.trajectory
        .states
        .iter()
        .filter(|u| u.geometry().kind == TargetKind::Sphere2)
        .flat_map(|u| u.coords().iter().map(|p| (p.norm() - 1.0).abs()))
        .fold(0.0, f64::max)
}

fn flow_gates(cfg: &RunConfig, r: &FlowReport) -> Vec<Gate> {
    let t = &cfg.tolerances;
    let mut gates = vec![
        Gate::holds("completed", r.status.is_completed()),
        Gate::at_most("m_drift", r.drift.m, t.m_drift),
        Gate::at_most("q_drift", r.drift.q, t.q_drift),
        Gate::at_most("b_integral_drift", r.drift.b_integral, t.b_drift),
        Gate::at_most("identity_residual", r.max_residuals.identity, t.identity),
        Gate::holds("xi1_nondecreasing", r.xi1_nondecreasing),
        Gate::holds("energy_ratio_finite", r.energy_ratio.is_finite()),
    ];
    if cfg.geometry().map(|g| g.kind == TargetKind::Sphere2).unwrap_or(false) {
        gates.push(Gate::at_most("constraint", r.max_residuals.constraint, t.constraint));
    }
    if let (Some(tol), Some(err)) = (t.exact, r.exact_error) {
        gates.push(Gate::at_most("exact_error", err, tol));
    }
    if let Some(tol) = t.balance {
        let worst = r.max_residuals.balance1.unwrap_or(0.0).max(r.max_residuals.balance2.unwrap_or(0.0));
        gates.push(Gate::at_most("balance_residual", worst, tol));
    }
    gates
}

fn divcurl_gates(cfg: &RunConfig, r: &DivCurlReport) -> Vec<Gate> {
    let t = &cfg.tolerances;
    let mut gates = vec![
        Gate::holds("divcurl_valid", r.valid),
        Gate::at_most("route_gap", r.route_gap, t.route_gap),
    ];
    if let Some(ratio) = r.empirical_ratio {
        let mean = r.rhs_mean_term;
        let bound = t.ratio_cap * r.rhs_product_term + mean;
        gates.push(Gate { name: "ratio_cap".into(), value: ratio, tolerance: t.ratio_cap, passed: r.lhs <= bound });
    }
    gates
}

fn simulate(cfg: &RunConfig) -> Result<(Evolution, FlowReport)> {
    let u0 = cfg.initial_data.build(cfg.geometry()?, cfg.grid()?)?;
    let ev = evolve(&u0, cfg.t_final, &cfg.scheme_config(), cfg.diag_stride)?;
    let report = flow_report(cfg, &ev)?;
    Ok((ev, report))
}

fn balance_system(cfg: &RunConfig, ev: Option<&Evolution>) -> Result<BalanceSystem> {
    let d = &cfg.divcurl;
    match &d.source {
        DivCurlSource::Flow => BalanceSystem::from_flow(&ev.expect("flow source evolves first").trajectory),
        DivCurlSource::CosinePair => synthetic::cosine_pair(d.n_t, d.n_x),
        DivCurlSource::OrthogonalPair => synthetic::orthogonal_pair(d.n_t, d.n_x),
        DivCurlSource::GaussianLine => synthetic::gaussian_line(d.n_t, d.n_x, d.half_width),
        DivCurlSource::Random { seed } => synthetic::random_periodic(*seed, d.n_t, d.n_x),
        DivCurlSource::File { path } => {
            let f = std::fs::File::open(path).map_err(|e| SmfError::InvalidConfig {
                key: "divcurl_source".into(),
                message: format!("{}: {e}", path.display()),
            })?;
            divcurl::read_system(std::io::BufReader::new(f))
        }
    }
}

/// Runs one configured scenario and writes its files into `output_dir`.
///
/// Configuration errors come back as `Err`; solver aborts do not, they are
/// recorded in the summary (exit code 3) next to the partial outputs.
pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    prepare_dir(&cfg.output_dir)?;
    let start = Instant::now();
    let mut summary = RunSummary {
        config: cfg.clone(),
        flow: None,
        divcurl: None,
        sweep: None,
        gates: vec![],
        passed: false,
        aborted: false,
        wall_time: 0.0,
    };
    let needs_flow = match cfg.scenario {
        Scenario::Simulate => true,
        Scenario::CertifyDivcurl => cfg.divcurl.source == DivCurlSource::Flow,
        Scenario::Sweep => false,
    };
    let mut evolution = None;
    if needs_flow {
        let (ev, report) = simulate(cfg)?;
        write_atomic(&cfg.output_dir.join("series.csv"), ev.series.to_csv().as_bytes())?;
        summary.aborted = !report.status.is_completed();
        summary.gates.extend(flow_gates(cfg, &report));
        summary.flow = Some(report);
        evolution = Some(ev);
    }
    if cfg.scenario == Scenario::CertifyDivcurl && !summary.aborted {
        let sys = balance_system(cfg, evolution.as_ref())?;
        let report = divcurl::verify(&sys, cfg.divcurl.tol)?;
        let mut bin = vec![];
        divcurl::write_system(&sys, &mut bin)?;
        write_atomic(&cfg.output_dir.join("balance_system.bin"), &bin)?;
        write_atomic(&cfg.output_dir.join("divcurl.json"), &to_json(&report)?)?;
        summary.gates.extend(divcurl_gates(cfg, &report));
        summary.divcurl = Some(report);
    }
    if cfg.scenario == Scenario::Sweep {
        let table = sweep(cfg)?;
        summary.aborted = table.rows.iter().any(|r| r.status.starts_with("aborted"));
        summary.gates.push(Gate::holds("all_cells_completed", table.rows.iter().all(|r| r.status == "completed")));
        summary.gates.push(Gate::holds(
            "energy_ratios_finite",
            table.rows.iter().all(|r| r.energy_ratio.is_some_and(f64::is_finite)),
        ));
        write_atomic(&cfg.output_dir.join("sweep.csv"), table.to_csv().as_bytes())?;
        summary.sweep = Some(table);
    }
    summary.passed = summary.gates.iter().all(|g| g.passed);
    summary.wall_time = start.elapsed().as_secs_f64();
    write_atomic(&cfg.output_dir.join("summary.json"), &to_json(&summary)?)?;
    Ok(summary)
}

/// The simulate configurations of a sweep, with their cell names.
pub fn sweep_cells(cfg: &RunConfig) -> Vec<(String, RunConfig)> {
    let g = &cfg.sweep;
    let mut data = vec![];
    let ns = if g.n.is_empty() && !g.theta.is_empty() { vec![1] } else { g.n.clone() };
    for &theta in &g.theta {
        for &n in &ns {
            data.push(InitialData::SpinWave { theta, n });
        }
    }
    for &seed in &g.seeds {
        data.push(InitialData::RandomSmooth { seed, band: g.band });
    }
    let sizes = if g.n_points.is_empty() { vec![cfg.n_points] } else { g.n_points.clone() };
    let mut cells = vec![];
    for &n_points in &sizes {
        for d in &data {
            let name = format!("cell{:03}", cells.len());
            let cell = RunConfig {
                scenario: Scenario::Simulate,
                initial_data: *d,
                n_points,
                output_dir: cfg.output_dir.join(&name),
                ..cfg.clone()
            };
            cells.push((name, cell));
        }
    }
    cells
}

fn sweep_row(name: &str, cell: &RunConfig, outcome: Result<RunSummary>) -> SweepRow {
    let mut row = SweepRow {
        cell: name.into(),
        initial_data: cell.initial_data,
        n_points: cell.n_points,
        m0: None,
        e0: None,
        energy_ratio: None,
        si1_max_ratio: None,
        status: String::new(),
    };
    match outcome {
        Ok(s) => {
            let f = s.flow.expect("simulate cells report a flow");
            row.m0 = Some(f.initial.m);
            row.e0 = Some(f.initial.energy);
            row.energy_ratio = Some(f.energy_ratio);
            row.si1_max_ratio = f.si1_max_ratio;
            row.status = match f.status {
                RunStatus::Completed => "completed".into(),
                RunStatus::Aborted { time, .. } => format!("aborted at t={time}"),
            };
        }
        Err(e) => row.status = format!("error: {e}"),
    }
    row
}

/// Runs every cell (concurrently, each into its own directory) and
/// tabulates the energy ratios by `m(0)`. Cell failures are recorded.
pub fn sweep(cfg: &RunConfig) -> Result<SweepTable> {
    let cells = sweep_cells(cfg);
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(cells.len().max(1));
    let next = std::sync::atomic::AtomicUsize::new(0);
    let results = std::sync::Mutex::new(vec![None; cells.len()]);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                let Some((name, cell)) = cells.get(i) else { break };
                let row = sweep_row(name, cell, run(cell));
                results.lock().expect("no worker panics while holding the lock")[i] = Some(row);
            });
        }
    });
    let mut rows: Vec<SweepRow> = results.into_inner().expect("workers joined").into_iter().flatten().collect();
    rows.sort_by(|a, b| match (a.m0, b.m0) {
        (Some(x), Some(y)) => x.total_cmp(&y).then_with(|| a.cell.cmp(&b.cell)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.cell.cmp(&b.cell),
    });
    let ratios: Vec<f64> = rows.iter().filter(|r| r.status == "completed").filter_map(|r| r.energy_ratio).collect();
    let monotone_in_m0 = ratios.windows(2).all(|w| w[1] >= w[0]);
    Ok(SweepTable { rows, monotone_in_m0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn base(dir: &Path) -> RunConfig {
        RunConfig {
            n_points: 32,
            dt: 1e-4,
            t_final: 2e-3,
            diag_stride: 2,
            output_dir: dir.to_path_buf(),
            ..RunConfig::default()
        }
    }

    #[test]
    fn constant_run_is_all_zero() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig { initial_data: InitialData::Constant, ..base(dir.path()) };
        let s = run(&cfg).unwrap();
        assert_eq!(s.exit_code(), 0, "{:?}", s.gates);
        let f = s.flow.unwrap();
        for d in [&f.initial, &f.terminal] {
            assert_eq!((d.m, d.energy, d.b_integral, d.q, d.det_a_integral), (0.0, 0.0, 0.0, 0.0, 0.0));
        }
        assert_eq!(f.xi1_final, 0.0);
        assert!(dir.path().join("series.csv").exists());
        assert!(dir.path().join("summary.json").exists());
        assert!(!dir.path().join(".series.csv.tmp").exists());
    }

    #[test]
    fn repeated_runs_give_identical_csv() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig { initial_data: InitialData::RandomSmooth { seed: 3, band: 3 }, ..base(dir.path()) };
        run(&cfg).unwrap();
        let first = std::fs::read(dir.path().join("series.csv")).unwrap();
        run(&cfg).unwrap();
        assert_eq!(first, std::fs::read(dir.path().join("series.csv")).unwrap());
        let header = String::from_utf8(first).unwrap();
        assert!(header.starts_with("t,m,E,b_integral,Q,detA_int,detAm_int,xi1,xi2,bal1_res,bal2_res,si1_ratio,proj_residual\n"));
    }

    #[test]
    fn exact_error_gate() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = base(dir.path());
        let s = run(&cfg).unwrap();
        let err = s.flow.unwrap().exact_error.unwrap();
        assert!(err < 1e-6);
        cfg.tolerances.exact = Some(err / 2.0);
        let s = run(&cfg).unwrap();
        assert_eq!(s.exit_code(), 1);
        assert!(!s.gates.iter().find(|g| g.name == "exact_error").unwrap().passed);
    }

    #[test]
    fn solver_abort_is_exit_three_with_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            initial_data: InitialData::RandomSmooth { seed: 1, band: 4 },
            dt: 5e-3,
            t_final: 0.05,
            diag_stride: 1,
            force_dt: true,
            max_fixed_point_iters: 2,
            ..base(dir.path())
        };
        let s = run(&cfg).unwrap();
        assert_eq!(s.exit_code(), 3);
        assert!(matches!(s.flow.as_ref().unwrap().status, RunStatus::Aborted { .. }));
        let json: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("summary.json")).unwrap()).unwrap();
        assert_eq!(json["aborted"], true);
        assert!(dir.path().join("series.csv").exists());
    }

    #[test]
    fn unwritable_output_dir_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("plain-file");
        std::fs::write(&file, b"x").unwrap();
        let cfg = base(&file.join("sub"));
        assert!(matches!(run(&cfg), Err(SmfError::InvalidConfig { key, .. }) if key == "output_dir"));
    }

    #[test]
    fn certify_synthetic_and_flow() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = base(dir.path());
        cfg.scenario = Scenario::CertifyDivcurl;
        cfg.divcurl.source = DivCurlSource::CosinePair;
        let s = run(&cfg).unwrap();
        assert_eq!(s.exit_code(), 0, "{:?}", s.gates);
        let r = s.divcurl.unwrap();
        assert!((r.lhs - 0.5).abs() <= 1e-8);
        let back: DivCurlReport = serde_json::from_slice(&std::fs::read(dir.path().join("divcurl.json")).unwrap()).unwrap();
        assert_eq!(back, r);
        let sys = divcurl::read_system(std::fs::File::open(dir.path().join("balance_system.bin")).unwrap()).unwrap();
        assert_eq!(sys, synthetic::cosine_pair(cfg.divcurl.n_t, cfg.divcurl.n_x).unwrap());

        cfg.divcurl.source = DivCurlSource::File { path: dir.path().join("balance_system.bin") };
        assert_eq!(run(&cfg).unwrap().divcurl.unwrap(), r);

        cfg.divcurl.source = DivCurlSource::Flow;
        cfg.diag_stride = 1;
        let s = run(&cfg).unwrap();
        assert!(s.flow.is_some());
        let r = s.divcurl.unwrap();
        assert!(r.route_gap <= 1e-7, "{r:?}");
    }

    #[test]
    fn sweep_sorted_and_single_cell_matches_run() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = base(dir.path());
        cfg.scenario = Scenario::Sweep;
        cfg.sweep.theta = vec![3.0 * PI / 8.0, PI / 8.0, PI / 4.0];
        let s = run(&cfg).unwrap();
        assert_eq!(s.exit_code(), 0, "{:?}", s.gates);
        let t = s.sweep.unwrap();
        assert_eq!(t.rows.len(), 3);
        assert!(t.rows.windows(2).all(|w| w[0].m0 <= w[1].m0));
        assert!(t.rows.iter().all(|r| r.energy_ratio.unwrap().is_finite()));
        assert!(dir.path().join("sweep.csv").exists());

        let one = tempfile::tempdir().unwrap();
        let mut single = base(one.path());
        single.scenario = Scenario::Sweep;
        single.sweep.theta = vec![PI / 4.0];
        run(&single).unwrap();
        let direct = tempfile::tempdir().unwrap();
        run(&base(direct.path())).unwrap();
        assert_eq!(
            std::fs::read(one.path().join("cell000/series.csv")).unwrap(),
            std::fs::read(direct.path().join("series.csv")).unwrap()
        );
    }

    #[test]
    fn empty_sweep_is_an_empty_table() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig { scenario: Scenario::Sweep, ..base(dir.path()) };
        let s = run(&cfg).unwrap();
        assert_eq!(s.exit_code(), 0);
        assert!(s.sweep.unwrap().rows.is_empty());
    }

    #[test]
    fn sweep_records_failed_cells() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = base(dir.path());
        cfg.scenario = Scenario::Sweep;
        cfg.sweep.seeds = vec![1];
        cfg.sweep.band = 16; // not resolved on 32 points
        cfg.sweep.theta = vec![PI / 4.0];
        let s = run(&cfg).unwrap();
        let t = s.sweep.clone().unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[0].status, "completed");
        assert!(t.rows[1].status.starts_with("error"));
        assert_eq!(s.exit_code(), 1);
    }
}
