//! Time integration of `∂ₜu = −J τ(u)`.
//!
//! The default scheme is the implicit midpoint rule, solved for the
//! midpoint `v` and finalised as `u⁺ = 2v − u`. The midpoint equation is
//! stiff (its linearisation is the dispersive operator `J ∂ₓ²`), so the
//! fixed-point iteration is preconditioned with the exact inverse of
//! `I + (dt/2) J Δ` for a frozen `J`:
//!
//! ```text
//! (I + aJΔ)⁻¹ = (I − aJΔ)(I + a²Δ²)⁻¹,   a = dt/2,
//! ```
//!
//! applied mode by mode. On the sphere the residual is written in ambient
//! form, `v − u + (a/|v|²) v × Δv`, whose increment is orthogonal to `v`;
//! this keeps every `|u_j|` fixed to rounding error.

use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticsSeries;
use crate::error::{Result, SmfError};
use crate::geometry::{TargetGeometry, TargetKind, Vec3};
use crate::grid::PeriodicGrid;
use crate::map::{MapState, MapView, TangentField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    ImplicitMidpoint,
    ProjectedRk4,
}

impl Scheme {
    pub fn from_key(key: &str) -> Result<Self> {
        match key.trim() {
            "implicit_midpoint" | "midpoint" => Ok(Self::ImplicitMidpoint),
            "rk4" | "projected_rk4" => Ok(Self::ProjectedRk4),
            other => Err(SmfError::InvalidConfig {
                key: "scheme".into(),
                message: format!("unknown scheme `{other}` (expected implicit_midpoint | rk4)"),
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub fixed_point_tol: f64,
    pub max_fixed_point_iters: usize,
    pub cfl_safety: f64,
    /// Skip the `dt ≤ cfl_safety·h²` gate.
    pub force_dt: bool,
}

impl SchemeConfig {
    pub fn new(scheme: Scheme, dt: f64) -> Self {
        Self {
            scheme,
            dt,
            fixed_point_tol: 1e-12,
            max_fixed_point_iters: 100,
            cfl_safety: 0.25,
            force_dt: false,
        }
    }

    pub fn midpoint(dt: f64) -> Self {
        Self::new(Scheme::ImplicitMidpoint, dt)
    }

    pub fn rk4(dt: f64) -> Self {
        Self::new(Scheme::ProjectedRk4, dt)
    }

    pub fn forced(mut self) -> Self {
        self.force_dt = true;
        self
    }

    /// Largest step the stability gate admits on `grid`.
    pub fn dt_limit(&self, grid: &PeriodicGrid) -> f64 {
        self.cfl_safety * grid.spacing().powi(2)
    }

    /// Checks the numeric fields and the dispersive step restriction.
    pub fn validate(&self, grid: &PeriodicGrid) -> Result<()> {
        let bad = |key: &str, message: String| Err(SmfError::InvalidConfig { key: key.into(), message });
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad("dt", format!("must be positive, got {}", self.dt));
        }
        if !(self.fixed_point_tol > 0.0) {
            return bad("fixed_point_tol", format!("must be positive, got {}", self.fixed_point_tol));
        }
        if self.max_fixed_point_iters == 0 {
            return bad("max_fixed_point_iters", "must be at least 1".into());
        }
        if !(self.cfl_safety > 0.0) {
            return bad("cfl_safety", format!("must be positive, got {}", self.cfl_safety));
        }
        let limit = self.dt_limit(grid);
        if !self.force_dt && self.dt > limit {
            return bad(
                "dt",
                format!(
                    "dt = {} exceeds the stability limit {:.3e} = {}·h² for n_points = {}; reduce dt or set force_dt",
                    self.dt,
                    limit,
                    self.cfl_safety,
                    grid.n_points()
                ),
            );
        }
        Ok(())
    }
}

/// `∂ₜu = −J τ(u)` at every node.
pub fn velocity(u: &MapState) -> Result<TangentField> {
    Ok(TangentField { values: u.view()?.velocity() })
}

/// Nodewise projection used inside the solvers (normalisation on the
/// sphere; chart coordinates are left alone until the step is accepted).
fn project_nodes(geometry: &TargetGeometry, coords: &[Vec3]) -> Vec<Vec3> {
    match geometry.kind {
        TargetKind::Sphere2 => coords.iter().map(|p| p / p.norm()).collect(),
        _ => coords.to_vec(),
    }
}

fn check_finite(coords: &[Vec3], what: &str) -> Result<()> {
    if coords.iter().all(|p| p.iter().all(|c| c.is_finite())) {
        Ok(())
    } else {
        Err(SmfError::NonFinite(what.into()))
    }
}

/// Approximate inverse of the midpoint Jacobian `I + aJD²` applied to `r`,
/// with `J` frozen at the nodes `p`.
fn precondition(geometry: &TargetGeometry, grid: &PeriodicGrid, p: &[Vec3], r: &[Vec3], a: f64) -> Vec<Vec3> {
    let n = r.len();
    let sphere = geometry.kind == TargetKind::Sphere2;
    let normal: Vec<f64> = if sphere { r.iter().zip(p).map(|(x, q)| x.dot(q)).collect() } else { vec![0.0; n] };
    let rt: Vec<Vec3> = if sphere { r.iter().zip(p).zip(&normal).map(|((x, q), c)| x - q * *c).collect() } else { r.to_vec() };

    let xs: Vec<f64> = rt.iter().map(|v| v.x).collect();
    let ys: Vec<f64> = rt.iter().map(|v| v.y).collect();
    let (sx, sy) = grid.dispersive_resolvent_pair(a, &xs, &ys);
    let (dsx, dsy) = grid.second_derivative_pair(&sx, &sy);
    let (sz, dsz) = if sphere {
        let zs: Vec<f64> = rt.iter().map(|v| v.z).collect();
        let (sz, _) = grid.dispersive_resolvent_pair(a, &zs, &vec![0.0; n]);
        let (dsz, _) = grid.second_derivative_pair(&sz, &vec![0.0; n]);
        (sz, dsz)
    } else {
        (vec![0.0; n], vec![0.0; n])
    };

    (0..n)
        .map(|j| {
            let s = Vec3::new(sx[j], sy[j], sz[j]);
            let d2 = Vec3::new(dsx[j], dsy[j], dsz[j]);
            let q = &p[j];
            let corr = s - geometry.apply_j_raw(q, &d2) * a;
            if sphere {
                let corr = corr - q * corr.dot(q);
                corr + q * normal[j]
            } else {
                corr
            }
        })
        .collect()
}

/// Accepts solver output: reduces the torus modulo 1 and moves CP¹ states
/// into a chart that contains every node.
fn accept(u: &MapState, coords: Vec<Vec3>, time: f64) -> Result<MapState> {
    check_finite(&coords, "updated state")?;
    let geometry = *u.geometry();
    let chart = u.chart().map_err(|node| SmfError::ReChartRequired {
        node,
        modulus: u.coords()[node].x.hypot(u.coords()[node].y),
    })?;
    match geometry.kind {
        TargetKind::Sphere2 => Ok(MapState::from_parts(geometry, u.grid().clone(), coords, 0, time)),
        TargetKind::FlatTorus2 => {
            let wrapped = coords.iter().map(|p| Vec3::new(p.x.rem_euclid(1.0), p.y.rem_euclid(1.0), 0.0)).collect();
            Ok(MapState::from_parts(geometry, u.grid().clone(), wrapped, 0, time))
        }
        TargetKind::FubiniStudyCP1 => MapState::from_parts(geometry, u.grid().clone(), coords, chart, time).unify_chart(),
    }
}

fn second_derivative(grid: &PeriodicGrid, v: &[Vec3]) -> Vec<Vec3> {
    let xs: Vec<f64> = v.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = v.iter().map(|p| p.y).collect();
    let zs: Vec<f64> = v.iter().map(|p| p.z).collect();
    let (dx, dy) = grid.second_derivative_pair(&xs, &ys);
    let (dz, _) = grid.second_derivative_pair(&zs, &vec![0.0; v.len()]);
    (0..v.len()).map(|j| Vec3::new(dx[j], dy[j], dz[j])).collect()
}

/// `v − u + a J τ` at the midpoint. On the sphere the ambient form
/// `v × ∂ₓ²v` is used without projecting `v`; it is orthogonal to `v`, so
/// `|2v − u| = |u|` holds at every node once the system is solved.
fn midpoint_residual(view: &MapView<'_>, v: &[Vec3], pv: &[Vec3], u0: &[Vec3], a: f64) -> Vec<Vec3> {
    let geometry = view.geometry;
    if geometry.kind == TargetKind::Sphere2 {
        let vxx = second_derivative(view.grid, v);
        (0..v.len()).map(|j| v[j] - u0[j] + v[j].cross(&vxx[j]) * (a / v[j].norm_squared())).collect()
    } else if geometry.kind == TargetKind::FubiniStudyCP1 {
        let mid = MapView { coords: v, ..*view };
        let wx = mid.dx(v);
        let wxx = second_derivative(view.grid, v);
        (0..v.len())
            .map(|j| {
                let tau = wxx[j] + geometry.connection_correction_raw(&v[j], &wx[j], &wx[j]);
                v[j] - u0[j] + geometry.apply_j_raw(&v[j], &tau) * a
            })
            .collect()
    } else {
        let tau = MapView { coords: pv, ..*view }.derivatives().tau;
        (0..v.len())
            .map(|j| v[j] - u0[j] + geometry.apply_j_raw(&pv[j], &tau[j]) * a)
            .collect()
    }
}

/// Outcome of the midpoint fixed-point solve, kept for diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

/// One implicit-midpoint step. Works for any sign of `dt`; `dt = 0` is the
/// identity.
pub fn step_implicit_midpoint(u: &MapState, cfg: &SchemeConfig) -> Result<MapState> {
    step_implicit_midpoint_with_stats(u, cfg).map(|(s, _)| s)
}

pub fn step_implicit_midpoint_with_stats(u: &MapState, cfg: &SchemeConfig) -> Result<(MapState, SolveStats)> {
    if !cfg.dt.is_finite() {
        return Err(SmfError::NonFinite("dt".into()));
    }
    let time = u.time() + cfg.dt;
    if cfg.dt == 0.0 {
        return Ok((u.clone().with_time(time), SolveStats { iterations: 0, residual: 0.0 }));
    }
    let view = u.view()?;
    let geometry = *u.geometry();
    let grid = u.grid();
    let u0 = u.coords();
    let a = 0.5 * cfg.dt;

    let mut v = u0.to_vec();
    let mut pv = project_nodes(&geometry, &v);
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_fixed_point_iters {
        iterations += 1;
        let r = midpoint_residual(&view, &v, &pv, u0, a);
        let delta = precondition(&geometry, grid, &pv, &r, a);
        let res = delta.iter().map(|d| d.amax()).fold(0.0, f64::max);
        if !res.is_finite() {
            residual = res;
            break;
        }
        // Once under tolerance, keep polishing only while the update still
        // shrinks; otherwise solver noise accumulates in the stiff modes.
        if converged && res > 0.5 * residual {
            break;
        }
        for (x, d) in v.iter_mut().zip(&delta) {
            *x -= d;
        }
        pv = project_nodes(&geometry, &v);
        residual = res;
        if residual <= cfg.fixed_point_tol {
            converged = true;
            if residual <= 1e-15 * (1.0 + a) {
                break;
            }
        }
    }
    if !converged {
        return Err(SmfError::NonConvergence { iterations, residual });
    }

    let next: Vec<Vec3> = v.iter().zip(u0).map(|(m, x)| m * 2.0 - x).collect();
    Ok((accept(u, next, time)?, SolveStats { iterations, residual }))
}

/// Classical RK4 on the flow extended radially off the sphere, followed by
/// nodewise projection. Only used for cross-checks; not dispersion-stable
/// beyond `dt ≈ 2.8/σ_max²`.
pub fn step_rk4_projected(u: &MapState, cfg: &SchemeConfig) -> Result<MapState> {
    if !cfg.dt.is_finite() {
        return Err(SmfError::NonFinite("dt".into()));
    }
    let time = u.time() + cfg.dt;
    if cfg.dt == 0.0 {
        return Ok(u.clone().with_time(time));
    }
    let view = u.view()?;
    let geometry = *u.geometry();
    let dt = cfg.dt;
    let u0 = u.coords();
    let f = |coords: &[Vec3]| -> Vec<Vec3> {
        let p = project_nodes(&geometry, coords);
        MapView { coords: &p, ..view }.velocity()
    };
    let axpy = |k: &[Vec3], s: f64| -> Vec<Vec3> { u0.iter().zip(k).map(|(x, d)| x + d * s).collect() };
    let k1 = f(u0);
    let k2 = f(&axpy(&k1, 0.5 * dt));
    let k3 = f(&axpy(&k2, 0.5 * dt));
    let k4 = f(&axpy(&k3, dt));
    let raw: Vec<Vec3> = (0..u0.len())
        .map(|j| u0[j] + (k1[j] + k2[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (dt / 6.0))
        .collect();
    check_finite(&raw, "RK4 update")?;
    accept(u, project_nodes(&geometry, &raw), time)
}

pub fn step(u: &MapState, cfg: &SchemeConfig) -> Result<MapState> {
    match cfg.scheme {
        Scheme::ImplicitMidpoint => step_implicit_midpoint(u, cfg),
        Scheme::ProjectedRk4 => step_rk4_projected(u, cfg),
    }
}

/// States stored every `stride` steps, starting with the initial state.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub states: Vec<MapState>,
    pub scheme: SchemeConfig,
    pub stride: usize,
}

impl Trajectory {
    /// Time between stored states.
    pub fn sample_dt(&self) -> f64 {
        self.scheme.dt * self.stride as f64
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.time()).collect()
    }

    pub fn last(&self) -> &MapState {
        self.states.last().expect("trajectory holds the initial state")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Aborted { time: f64, reason: String },
}

impl RunStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, RunStatus::Completed)
    }
}

#[derive(Clone, Debug)]
pub struct Evolution {
    pub trajectory: Trajectory,
    pub series: DiagnosticsSeries,
    pub status: RunStatus,
}

/// Number of steps covering `[0, t_final]`; `t_final` must be a whole
/// number of steps, and the step count a multiple of `stride`.
pub fn step_count(t_final: f64, dt: f64, stride: usize) -> Result<usize> {
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(SmfError::InvalidConfig { key: "t_final".into(), message: format!("must be positive, got {t_final}") });
    }
    if stride == 0 {
        return Err(SmfError::InvalidConfig { key: "diag_stride".into(), message: "must be at least 1".into() });
    }
    let steps = (t_final / dt).round();
    if steps < 1.0 || (steps * dt - t_final).abs() > 1e-9 * t_final {
        return Err(SmfError::InvalidConfig {
            key: "t_final".into(),
            message: format!("t_final = {t_final} is not a whole number of steps of dt = {dt}"),
        });
    }
    let steps = steps as usize;
    if steps % stride != 0 {
        return Err(SmfError::InvalidConfig {
            key: "diag_stride".into(),
            message: format!("{steps} steps are not a multiple of diag_stride = {stride}"),
        });
    }
    Ok(steps)
}

/// Integrates from `u0` to `t_final`, storing every `diag_stride`-th state.
///
/// Configuration problems are returned as errors. Solver failures during
/// the run end it early: the partial trajectory comes back tagged
/// [`RunStatus::Aborted`].
pub fn evolve(u0: &MapState, t_final: f64, cfg: &SchemeConfig, diag_stride: usize) -> Result<Evolution> {
    cfg.validate(u0.grid())?;
    let steps = step_count(t_final, cfg.dt, diag_stride)?;
    let start = u0.unify_chart()?;
    let t0 = start.time();
    let mut states = vec![start.clone()];
    let mut current = start;
    let mut status = RunStatus::Completed;
    for i in 1..=steps {
        match step(&current, cfg) {
            Ok(next) => {
                // Times are counted, not summed, so strides stay uniform.
                current = next.with_time(t0 + i as f64 * cfg.dt);
                if i % diag_stride == 0 {
                    states.push(current.clone());
                }
            }
            Err(e) => {
                status = RunStatus::Aborted { time: current.time(), reason: e.to_string() };
                break;
            }
        }
    }
    let trajectory = Trajectory { states, scheme: *cfg, stride: diag_stride };
    let series = DiagnosticsSeries::from_trajectory(&trajectory)?;
    Ok(Evolution { trajectory, series, status })
}

/// Runs `steps` steps without storing anything; errors propagate.
pub fn advance(u: &MapState, cfg: &SchemeConfig, steps: usize) -> Result<MapState> {
    let t0 = u.time();
    let mut s = u.unify_chart()?;
    for i in 1..=steps {
        s = step(&s, cfg)?.with_time(t0 + i as f64 * cfg.dt);
    }
    Ok(s)
}
