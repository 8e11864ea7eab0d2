//! Scalars and densities tracked along a run: momentum, energy, the
//! momentum flux `b`, the determinant densities, the conserved combination
//! `Q`, balance-law residuals and the interpolation monitors.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result, SmfError};
use crate::flow::Trajectory;
use crate::grid::ScalarField;
use crate::map::MapState;

/// Pointwise densities along one state.
///
/// With `a = ½|uₓ|²`, `b = ⟨Juₓ, τ⟩`, `q = ⟨R(uₓ,Juₓ)uₓ,Juₓ⟩` and
/// `d = |τ|² − ⟨∇ₓτ, uₓ⟩ + ¼q`, the flow satisfies
/// `∂ₜa − ∂ₓb = 0` and `∂ₜb − ∂ₓd = 0` on locally symmetric targets.
#[derive(Clone, Debug)]
pub struct DensityFields {
    pub ux2: ScalarField,
    pub tau2: ScalarField,
    pub a: ScalarField,
    pub b: ScalarField,
    pub d: ScalarField,
    pub q: ScalarField,
    /// `⟨τ, uₓ⟩`
    pub tau_ux: ScalarField,
    pub det_a: ScalarField,
    pub det_am: ScalarField,
    pub proj_residual: f64,
}

pub fn density_fields(u: &MapState) -> Result<DensityFields> {
    let view = u.view()?;
    let g = u.geometry();
    let der = view.derivatives();
    let third = view.covariant_x(&der.ux, &der.tau);
    let n = u.len();
    let mut f = DensityFields {
        ux2: vec![0.0; n],
        tau2: vec![0.0; n],
        a: vec![0.0; n],
        b: vec![0.0; n],
        d: vec![0.0; n],
        q: vec![0.0; n],
        tau_ux: vec![0.0; n],
        det_a: vec![0.0; n],
        det_am: vec![0.0; n],
        proj_residual: der.proj_residual,
    };
    for j in 0..n {
        let p = &u.coords()[j];
        let ux = &der.ux[j];
        let tau = &der.tau[j];
        let ux2 = g.norm2_raw(p, ux);
        let tau2 = g.norm2_raw(p, tau);
        let b = g.inner_raw(p, &g.apply_j_raw(p, ux), tau);
        let q = g.curvature_quartic_raw(p, ux);
        let tu = g.inner_raw(p, tau, ux);
        let a = 0.5 * ux2;
        let d = tau2 - g.inner_raw(p, &third[j], ux) + 0.25 * q;
        f.ux2[j] = ux2;
        f.tau2[j] = tau2;
        f.a[j] = a;
        f.b[j] = b;
        f.d[j] = d;
        f.q[j] = q;
        f.tau_ux[j] = tu;
        f.det_a[j] = a * d - b * b;
        f.det_am[j] = tu * tu;
    }
    if f.det_a.iter().chain(&f.d).any(|v| !v.is_finite()) {
        return Err(SmfError::NonFinite("density fields".into()));
    }
    Ok(f)
}

/// `m = ∫|∂ₓu|²`.
pub fn momentum(u: &MapState) -> Result<f64> {
    let f = density_fields(u)?;
    Ok(u.grid().integrate_periodic(&f.ux2))
}

/// `E = ∫|∇ₓ∂ₓu|²`.
pub fn energy(u: &MapState) -> Result<f64> {
    let f = density_fields(u)?;
    Ok(u.grid().integrate_periodic(&f.tau2))
}

/// `b = ⟨J∂ₓu, ∇ₓ∂ₓu⟩` at every node.
pub fn b_field(u: &MapState) -> Result<ScalarField> {
    Ok(density_fields(u)?.b)
}

/// `(det A, det A_m)` at every node.
pub fn det_fields(u: &MapState) -> Result<(ScalarField, ScalarField)> {
    let f = density_fields(u)?;
    Ok((f.det_a, f.det_am))
}

/// `Q = ½E + ⅛∫⟨R(uₓ,Juₓ)uₓ,Juₓ⟩`.
pub fn conserved_q(u: &MapState) -> Result<f64> {
    let f = density_fields(u)?;
    let grid = u.grid();
    Ok(0.5 * grid.integrate_periodic(&f.tau2) + 0.125 * grid.integrate_periodic(&f.q))
}

/// Left side, right side and their ratio for one monitored inequality.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monitor {
    pub lhs: f64,
    pub rhs: f64,
    /// `None` when the right side vanishes.
    pub ratio: Option<f64>,
}

impl Monitor {
    fn new(lhs: f64, rhs: f64) -> Self {
        let ratio = if rhs > 0.0 { Some(lhs / rhs) } else { None };
        Self { lhs, rhs, ratio }
    }
}

/// Interpolation inequalities, with `w = |uₓ|²` and `m = ‖w‖_{L¹}`:
///
/// * `si1`:  `∫w²        ≲ E^{1/2} m^{3/2} + m²`
/// * `si2`:  `‖w‖²_{L⁴}   ≲ ‖∂ₓw‖₂ m + m²`
/// * `dcs2`: `∫w²        ≲ ‖∂ₓw‖₂^{2/3} m^{4/3} + m²`
/// * `dcs3`: `∫w^{5/2}   ≲ ‖∂ₓw‖₂ m^{3/2} + m^{5/2}`
/// * `dcs4`: `∫w³        ≲ ‖∂ₓw‖₂^{4/3} m^{5/3} + m³`
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpolationMonitors {
    pub si1: Monitor,
    pub si2: Monitor,
    pub dcs2: Monitor,
    pub dcs3: Monitor,
    pub dcs4: Monitor,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSample {
    pub time: f64,
    pub m: f64,
    pub energy: f64,
    pub b_integral: f64,
    pub q: f64,
    pub det_a_integral: f64,
    pub det_am_integral: f64,
    pub proj_residual: f64,
    /// `∫|∂ₓu|⁴`
    pub sup_ux4: f64,
    /// `∫w^{5/2}` and `∫w³`
    pub int_ux5: f64,
    pub int_ux6: f64,
    /// `‖w‖²_{L⁴}`
    pub w_l4_sq: f64,
    /// `‖∂ₓ|∂ₓu|²‖_{L²} = 2 (∫det A_m)^{1/2}`
    pub dx_w_l2: f64,
    /// `∫|uₓ|²|τ|² − ∫b²`, the Cauchy–Schwarz gap in the expansion of det A.
    pub cs_gap: f64,
    /// `∫|uₓ|² q`
    pub curvature_coupling: f64,
    /// `∫det A − [∫det A_m + cs_gap + ⅛ curvature_coupling]`
    pub identity_residual: f64,
}

impl DiagnosticsSample {
    pub fn of_state(u: &MapState) -> Result<Self> {
        let f = density_fields(u)?;
        let grid = u.grid();
        let int = |v: &[f64]| grid.integrate_periodic(v);
        let pw = |e: f64| -> Vec<f64> { f.ux2.iter().map(|w| w.powf(e)).collect() };
        let m = int(&f.ux2);
        let energy = int(&f.tau2);
        let det_a_integral = int(&f.det_a);
        let det_am_integral = int(&f.det_am);
        let cross: Vec<f64> = (0..u.len()).map(|j| f.ux2[j] * f.tau2[j] - f.b[j] * f.b[j]).collect();
        let coupling: Vec<f64> = (0..u.len()).map(|j| f.ux2[j] * f.q[j]).collect();
        let cs_gap = int(&cross);
        let curvature_coupling = int(&coupling);
        Ok(Self {
            time: u.time(),
            m,
            energy,
            b_integral: int(&f.b),
            q: 0.5 * energy + 0.125 * int(&f.q),
            det_a_integral,
            det_am_integral,
            proj_residual: f.proj_residual,
            sup_ux4: int(&pw(2.0)),
            int_ux5: int(&pw(2.5)),
            int_ux6: int(&pw(3.0)),
            w_l4_sq: int(&pw(4.0)).sqrt(),
            dx_w_l2: 2.0 * det_am_integral.max(0.0).sqrt(),
            cs_gap,
            curvature_coupling,
            identity_residual: det_a_integral - (det_am_integral + cs_gap + 0.125 * curvature_coupling),
        })
    }

    pub fn monitors(&self) -> InterpolationMonitors {
        interpolation_monitors(self)
    }
}

pub fn interpolation_monitors(s: &DiagnosticsSample) -> InterpolationMonitors {
    let m = s.m;
    let dw = s.dx_w_l2;
    InterpolationMonitors {
        si1: Monitor::new(s.sup_ux4, s.energy.sqrt() * m.powf(1.5) + m * m),
        si2: Monitor::new(s.w_l4_sq, dw * m + m * m),
        dcs2: Monitor::new(s.sup_ux4, dw.powf(2.0 / 3.0) * m.powf(4.0 / 3.0) + m * m),
        dcs3: Monitor::new(s.int_ux5, dw * m.powf(1.5) + m.powf(2.5)),
        dcs4: Monitor::new(s.int_ux6, dw.powf(4.0 / 3.0) * m.powf(5.0 / 3.0) + m.powi(3)),
    }
}

/// CSV header, in column order.
pub const CSV_COLUMNS: [&str; 13] = [
    "t",
    "m",
    "E",
    "b_integral",
    "Q",
    "detA_int",
    "detAm_int",
    "xi1",
    "xi2",
    "bal1_res",
    "bal2_res",
    "si1_ratio",
    "proj_residual",
];

/// Samples at uniformly spaced times with running space-time integrals
/// `ξ₁ = ∫∫det A_m` and `ξ₂ = ∫∫det A` (trapezoid rule in time).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSeries {
    pub samples: Vec<DiagnosticsSample>,
    pub xi1: Vec<f64>,
    pub xi2: Vec<f64>,
    /// Per-sample balance residual norms; empty when fewer than three
    /// states were stored.
    pub balance1_residual: Vec<f64>,
    pub balance2_residual: Vec<f64>,
}

impl DiagnosticsSeries {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a sample and advances `ξ₁`, `ξ₂`. Samples must be equally
    /// spaced in time.
    pub fn accumulate_xi(&mut self, sample: DiagnosticsSample) -> Result<()> {
        match self.samples.as_slice() {
            [] => {
                self.xi1.push(0.0);
                self.xi2.push(0.0);
            }
            [.., prev] => {
                let dt = sample.time - prev.time;
                if !(dt > 0.0) {
                    return Err(contract(format!("sample times must increase ({} after {})", sample.time, prev.time)));
                }
                if self.samples.len() >= 2 {
                    let dt0 = self.samples[1].time - self.samples[0].time;
                    if (dt - dt0).abs() > 1e-9 * dt0.abs().max(1e-300) {
                        return Err(contract(format!("non-uniform sample spacing: {dt} vs {dt0}")));
                    }
                }
                let (x1, x2) = (*self.xi1.last().unwrap(), *self.xi2.last().unwrap());
                self.xi1.push(x1 + 0.5 * dt * (prev.det_am_integral + sample.det_am_integral));
                self.xi2.push(x2 + 0.5 * dt * (prev.det_a_integral + sample.det_a_integral));
            }
        }
        self.samples.push(sample);
        Ok(())
    }

    pub fn from_trajectory(traj: &Trajectory) -> Result<Self> {
        let mut series = Self::new();
        for s in &traj.states {
            series.accumulate_xi(DiagnosticsSample::of_state(s)?)?;
        }
        if traj.states.len() >= 3 {
            let (r1, r2) = balance_residuals(traj)?;
            series.balance1_residual = r1;
            series.balance2_residual = r2;
        }
        Ok(series)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// The series as CSV text with [`CSV_COLUMNS`].
    pub fn to_csv(&self) -> String {
        let mut out = CSV_COLUMNS.join(",");
        out.push('\n');
        let cell = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:e}"));
        for (i, s) in self.samples.iter().enumerate() {
            let row = [
                Some(s.time),
                Some(s.m),
                Some(s.energy),
                Some(s.b_integral),
                Some(s.q),
                Some(s.det_a_integral),
                Some(s.det_am_integral),
                Some(self.xi1[i]),
                Some(self.xi2[i]),
                self.balance1_residual.get(i).copied(),
                self.balance2_residual.get(i).copied(),
                s.monitors().si1.ratio,
                Some(s.proj_residual),
            ];
            let cells: Vec<String> = row.iter().map(|v| cell(*v)).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Time derivative of stored sample fields: centred differences inside,
/// second-order one-sided differences at the two ends.
fn time_derivative(fields: &[Vec<f64>], dt: f64, i: usize) -> Vec<f64> {
    let k = fields.len();
    let n = fields[0].len();
    (0..n)
        .map(|j| {
            if i == 0 {
                (-3.0 * fields[0][j] + 4.0 * fields[1][j] - fields[2][j]) / (2.0 * dt)
            } else if i == k - 1 {
                (3.0 * fields[k - 1][j] - 4.0 * fields[k - 2][j] + fields[k - 3][j]) / (2.0 * dt)
            } else {
                (fields[i + 1][j] - fields[i - 1][j]) / (2.0 * dt)
            }
        })
        .collect()
}

fn l2(grid: &crate::grid::PeriodicGrid, f: &[f64]) -> f64 {
    let sq: Vec<f64> = f.iter().map(|v| v * v).collect();
    grid.integrate_periodic(&sq).sqrt()
}

fn check_samples(traj: &Trajectory) -> Result<f64> {
    let got = traj.states.len();
    if got < 3 {
        return Err(SmfError::TooFewSamples { needed: 3, got });
    }
    Ok(traj.sample_dt())
}

/// L² norms of `∂ₜa − ∂ₓb` and `∂ₜb − ∂ₓd` at every stored sample.
pub fn balance_residuals(traj: &Trajectory) -> Result<(Vec<f64>, Vec<f64>)> {
    let dt = check_samples(traj)?;
    let grid = traj.states[0].grid();
    let fields = traj.states.iter().map(density_fields).collect::<Result<Vec<_>>>()?;
    let a: Vec<Vec<f64>> = fields.iter().map(|f| f.a.clone()).collect();
    let b: Vec<Vec<f64>> = fields.iter().map(|f| f.b.clone()).collect();
    let mut r1 = Vec::with_capacity(fields.len());
    let mut r2 = Vec::with_capacity(fields.len());
    for (i, f) in fields.iter().enumerate() {
        let at = time_derivative(&a, dt, i);
        let bt = time_derivative(&b, dt, i);
        let (bx, dx) = grid.derivative_pair(&f.b, &f.d);
        let e1: Vec<f64> = at.iter().zip(&bx).map(|(x, y)| x - y).collect();
        let e2: Vec<f64> = bt.iter().zip(&dx).map(|(x, y)| x - y).collect();
        r1.push(l2(grid, &e1));
        r2.push(l2(grid, &e2));
    }
    Ok((r1, r2))
}

/// Residual norms of `½∂ₜ|uₓ|² − ∂ₓb = 0` per stored sample.
pub fn balance1_residual(traj: &Trajectory) -> Result<Vec<f64>> {
    Ok(balance_residuals(traj)?.0)
}

/// Residual norms of `∂ₜb − ∂ₓ(|τ|² − ⟨∇ₓτ,uₓ⟩ + ¼q) = 0` per stored sample.
pub fn balance2_residual(traj: &Trajectory) -> Result<Vec<f64>> {
    Ok(balance_residuals(traj)?.1)
}
