//! Run configuration: a flat `key = value` text format with `#` comments.
//!
//! ```text
//! scenario      = simulate
//! target        = sphere2
//! initial_data  = spin_wave(pi/4, 1)
//! n_points      = 128
//! dt            = 1e-4
//! force_dt      = true
//! t_final       = 0.5
//! ```
//!
//! Scalars accept `pi` multiples (`3pi/8`, `pi/4`, `2*pi`). List keys take
//! comma-separated values.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SmfError};
use crate::flow::{Scheme, SchemeConfig};
use crate::geometry::TargetGeometry;
use crate::grid::{DiffScheme, PeriodicGrid};
use crate::initial::InitialData;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    #[default]
    Simulate,
    CertifyDivcurl,
    Sweep,
}

impl Scenario {
    pub fn from_key(key: &str) -> Result<Self> {
        match key.trim() {
            "simulate" => Ok(Self::Simulate),
            "certify_divcurl" => Ok(Self::CertifyDivcurl),
            "sweep" => Ok(Self::Sweep),
            other => Err(invalid("scenario", format!("unknown scenario `{other}` (expected simulate | certify_divcurl | sweep)"))),
        }
    }
}

/// Where `certify_divcurl` gets its balance system from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DivCurlSource {
    /// Densities and fluxes of the configured flow.
    #[default]
    Flow,
    CosinePair,
    OrthogonalPair,
    GaussianLine,
    Random { seed: u64 },
    /// A balance system stored in the binary format.
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivCurlConfig {
    pub source: DivCurlSource,
    pub n_t: usize,
    pub n_x: usize,
    pub half_width: f64,
    /// Relative hypothesis-residual tolerance.
    pub tol: f64,
}

impl Default for DivCurlConfig {
    fn default() -> Self {
        Self { source: DivCurlSource::Flow, n_t: 65, n_x: 64, half_width: 8.0, tol: crate::divcurl::DEFAULT_TOL }
    }
}

/// Parameter grid of a sweep. Spin-wave cells are `theta × n`, random
/// cells one per seed; every cell is run at every `n_points`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct SweepGrid {
    pub theta: Vec<f64>,
    pub n: Vec<i32>,
    pub seeds: Vec<u64>,
    pub band: usize,
    pub n_points: Vec<usize>,
}

/// Pass/fail thresholds of the acceptance gates. `None` disables a gate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// `max_t |m(t) − m(0)| / m(0)`
    pub m_drift: f64,
    /// `max_t |Q(t) − Q(0)| / max(1, |Q(0)|)`
    pub q_drift: f64,
    /// `max_t |∫b(t) − ∫b(0)| / max(1, |∫b(0)|)`
    pub b_drift: f64,
    pub identity: f64,
    pub constraint: f64,
    /// L∞ distance to the exact spin wave at the final time.
    pub exact: Option<f64>,
    /// Largest balance-law residual norm over the stored samples.
    pub balance: Option<f64>,
    pub route_gap: f64,
    pub ratio_cap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            m_drift: 1e-8,
            q_drift: 1e-6,
            b_drift: 1e-6,
            identity: 1e-7,
            constraint: 1e-10,
            exact: None,
            balance: None,
            route_gap: 1e-7,
            ratio_cap: crate::divcurl::RATIO_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub target: String,
    pub initial_data: InitialData,
    pub n_points: usize,
    pub dt: f64,
    pub t_final: f64,
    pub diag_stride: usize,
    pub scheme: Scheme,
    pub diff_scheme: DiffScheme,
    pub force_dt: bool,
    pub fixed_point_tol: f64,
    pub max_fixed_point_iters: usize,
    pub cfl_safety: f64,
    pub output_dir: PathBuf,
    pub divcurl: DivCurlConfig,
    pub sweep: SweepGrid,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = SchemeConfig::midpoint(1e-5);
        Self {
            scenario: Scenario::Simulate,
            target: "sphere2".into(),
            initial_data: InitialData::SpinWave { theta: PI / 4.0, n: 1 },
            n_points: 64,
            dt: 1e-5,
            t_final: 0.01,
            diag_stride: 10,
            scheme: Scheme::ImplicitMidpoint,
            diff_scheme: DiffScheme::Spectral,
            force_dt: false,
            fixed_point_tol: s.fixed_point_tol,
            max_fixed_point_iters: s.max_fixed_point_iters,
            cfl_safety: s.cfl_safety,
            output_dir: PathBuf::from("smf-out"),
            divcurl: DivCurlConfig::default(),
            sweep: SweepGrid { band: 4, ..SweepGrid::default() },
            tolerances: Tolerances::default(),
        }
    }
}

fn invalid(key: &str, message: impl Into<String>) -> SmfError {
    SmfError::InvalidConfig { key: key.into(), message: message.into() }
}

/// Parses `1.5`, `pi`, `pi/4`, `3pi/8`, `3*pi/8`, `-2pi`.
pub fn parse_scalar(key: &str, text: &str) -> Result<f64> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || invalid(key, format!("cannot parse `{text}` as a number"));
    let value = if let Some(pos) = t.find("pi") {
        let coef = t[..pos].trim_end_matches('*');
        let c = match coef {
            "" | "+" => 1.0,
            "-" => -1.0,
            c => c.parse::<f64>().map_err(|_| bad())?,
        };
        let rest = &t[pos + 2..];
        let d = match rest.strip_prefix('/') {
            Some(d) => d.parse::<f64>().map_err(|_| bad())?,
            None if rest.is_empty() => 1.0,
            None => return Err(bad()),
        };
        c * PI / d
    } else {
        t.parse::<f64>().map_err(|_| bad())?
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(invalid(key, format!("`{text}` is not finite")))
    }
}

fn parse_uint<T: std::str::FromStr>(key: &str, text: &str) -> Result<T> {
    text.trim().parse::<T>().map_err(|_| invalid(key, format!("expected a non-negative integer, got `{text}`")))
}

fn parse_bool(key: &str, text: &str) -> Result<bool> {
    match text.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(invalid(key, format!("expected true or false, got `{other}`"))),
    }
}

fn parse_list<T>(key: &str, text: &str, item: impl Fn(&str, &str) -> Result<T>) -> Result<Vec<T>> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| item(key, s)).collect()
}

fn parse_positive(key: &str, text: &str) -> Result<f64> {
    let v = parse_scalar(key, text)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(key, format!("must be positive, got {v}")))
    }
}

fn parse_tol(key: &str, text: &str) -> Result<Option<f64>> {
    match text.trim() {
        "none" | "off" => Ok(None),
        t => parse_positive(key, t).map(Some),
    }
}

/// `name` or `name(arg, ...)`.
fn split_call<'a>(key: &str, text: &'a str) -> Result<(&'a str, Vec<&'a str>)> {
    let text = text.trim();
    match text.find('(') {
        None => Ok((text, vec![])),
        Some(open) => {
            let inner = text[open + 1..]
                .strip_suffix(')')
                .ok_or_else(|| invalid(key, format!("unbalanced parentheses in `{text}`")))?;
            let args = inner.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
            Ok((text[..open].trim(), args))
        }
    }
}

/// `constant`, `great_circle(n)`, `spin_wave(theta, n)`,
/// `random_smooth(seed, band)`; omitted arguments fall back to defaults.
pub fn parse_initial_data(text: &str) -> Result<InitialData> {
    let key = "initial_data";
    let (name, args) = split_call(key, text)?;
    let arity = |max: usize| {
        if args.len() > max {
            Err(invalid(key, format!("`{name}` takes at most {max} arguments, got {}", args.len())))
        } else {
            Ok(())
        }
    };
    let int = |i: usize, default: i32| -> Result<i32> {
        args.get(i).map_or(Ok(default), |a| a.parse().map_err(|_| invalid(key, format!("bad integer `{a}`"))))
    };
    let data = match name {
        "constant" => {
            arity(0)?;
            InitialData::Constant
        }
        "great_circle" => {
            arity(1)?;
            InitialData::GreatCircle { n: int(0, 1)? }
        }
        "spin_wave" => {
            arity(2)?;
            let theta = args.first().map_or(Ok(PI / 4.0), |a| parse_scalar(key, a))?;
            InitialData::SpinWave { theta, n: int(1, 1)? }
        }
        "random_smooth" => {
            arity(2)?;
            let seed = args.first().map_or(Ok(0), |a| parse_uint(key, a))?;
            let band = args.get(1).map_or(Ok(4), |a| parse_uint(key, a))?;
            InitialData::RandomSmooth { seed, band }
        }
        other => {
            return Err(invalid(
                key,
                format!("unknown initial data `{other}` (expected constant | great_circle | spin_wave | random_smooth)"),
            ))
        }
    };
    data.validate()?;
    Ok(data)
}

fn parse_source(text: &str) -> Result<DivCurlSource> {
    let key = "divcurl_source";
    let (name, args) = split_call(key, text)?;
    Ok(match (name, args.as_slice()) {
        ("flow", []) => DivCurlSource::Flow,
        ("cosine_pair", []) => DivCurlSource::CosinePair,
        ("orthogonal_pair", []) => DivCurlSource::OrthogonalPair,
        ("gaussian_line", []) => DivCurlSource::GaussianLine,
        ("random", []) => DivCurlSource::Random { seed: 0 },
        ("random", [s]) => DivCurlSource::Random { seed: parse_uint(key, s)? },
        ("file", [p]) => DivCurlSource::File { path: PathBuf::from(p) },
        _ => {
            return Err(invalid(
                key,
                format!("unknown source `{text}` (expected flow | cosine_pair | orthogonal_pair | gaussian_line | random(seed) | file(path))"),
            ))
        }
    })
}

impl RunConfig {
    /// Parses the text format; unknown or repeated keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| invalid(&format!("line {}", lineno + 1), format!("expected `key = value`, got `{line}`")))?;
            let k = k.trim().to_string();
            if entries.insert(k.clone(), v.trim().to_string()).is_some() {
                return Err(invalid(&k, "key given twice"));
            }
        }
        let mut cfg = RunConfig::default();
        for (k, v) in &entries {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid("--config", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let t = &mut self.tolerances;
        match key {
            "scenario" => self.scenario = Scenario::from_key(v)?,
            "target" => self.target = TargetGeometry::from_key(v)?.key().to_string(),
            "initial_data" => self.initial_data = parse_initial_data(v)?,
            "n_points" => self.n_points = parse_uint(key, v)?,
            "dt" => self.dt = parse_positive(key, v)?,
            "t_final" => self.t_final = parse_positive(key, v)?,
            "diag_stride" => self.diag_stride = parse_uint(key, v)?,
            "scheme" => self.scheme = Scheme::from_key(v)?,
            "diff_scheme" => self.diff_scheme = DiffScheme::from_key(v)?,
            "force_dt" => self.force_dt = parse_bool(key, v)?,
            "fixed_point_tol" => self.fixed_point_tol = parse_positive(key, v)?,
            "max_fixed_point_iters" => self.max_fixed_point_iters = parse_uint(key, v)?,
            "cfl_safety" => self.cfl_safety = parse_positive(key, v)?,
            "output_dir" => self.output_dir = PathBuf::from(v),
            "divcurl_source" => self.divcurl.source = parse_source(v)?,
            "divcurl_n_t" => self.divcurl.n_t = parse_uint(key, v)?,
            "divcurl_n_x" => self.divcurl.n_x = parse_uint(key, v)?,
            "divcurl_half_width" => self.divcurl.half_width = parse_positive(key, v)?,
            "divcurl_tol" => self.divcurl.tol = parse_positive(key, v)?,
            "sweep_theta" => self.sweep.theta = parse_list(key, v, parse_scalar)?,
            "sweep_n" => self.sweep.n = parse_list(key, v, parse_uint)?,
            "sweep_seeds" => self.sweep.seeds = parse_list(key, v, parse_uint)?,
            "sweep_band" => self.sweep.band = parse_uint(key, v)?,
            "sweep_n_points" => self.sweep.n_points = parse_list(key, v, parse_uint)?,
            "tol_m_drift" => t.m_drift = parse_positive(key, v)?,
            "tol_q_drift" => t.q_drift = parse_positive(key, v)?,
            "tol_b_drift" => t.b_drift = parse_positive(key, v)?,
            "tol_identity" => t.identity = parse_positive(key, v)?,
            "tol_constraint" => t.constraint = parse_positive(key, v)?,
            "tol_exact" => t.exact = parse_tol(key, v)?,
            "tol_balance" => t.balance = parse_tol(key, v)?,
            "tol_route_gap" => t.route_gap = parse_positive(key, v)?,
            "ratio_cap" => t.ratio_cap = parse_positive(key, v)?,
            other => return Err(invalid(other, "unknown key")),
        }
        Ok(())
    }

    /// Checks everything that does not need the filesystem.
    pub fn validate(&self) -> Result<()> {
        self.initial_data.validate()?;
        self.geometry()?;
        let grid = self.grid()?;
        if self.diag_stride == 0 {
            return Err(invalid("diag_stride", "must be at least 1"));
        }
        if self.scenario != Scenario::CertifyDivcurl || self.divcurl.source == DivCurlSource::Flow {
            self.scheme_config().validate(&grid)?;
            crate::flow::step_count(self.t_final, self.dt, self.diag_stride)?;
        }
        if self.scenario == Scenario::CertifyDivcurl {
            if self.divcurl.n_t < crate::divcurl::MIN_SLICES {
                return Err(invalid("divcurl_n_t", format!("need at least {} slices", crate::divcurl::MIN_SLICES)));
            }
            PeriodicGrid::new(self.divcurl.n_x).map_err(|e| invalid("divcurl_n_x", e.to_string()))?;
        }
        if self.scenario == Scenario::Sweep {
            if self.sweep.theta.iter().any(|t| !(*t > 0.0 && *t < PI)) {
                return Err(invalid("sweep_theta", "every theta must lie in (0, pi)"));
            }
            if self.sweep.n.contains(&0) {
                return Err(invalid("sweep_n", "n must be nonzero"));
            }
            if !self.sweep.seeds.is_empty() && self.sweep.band == 0 {
                return Err(invalid("sweep_band", "must be at least 1"));
            }
            for &n in &self.sweep.n_points {
                let g = PeriodicGrid::new(n).map_err(|e| invalid("sweep_n_points", e.to_string()))?;
                self.scheme_config().validate(&g)?;
            }
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<TargetGeometry> {
        TargetGeometry::from_key(&self.target)
    }

    pub fn grid(&self) -> Result<PeriodicGrid> {
        Ok(PeriodicGrid::new(self.n_points).map_err(|e| invalid("n_points", e.to_string()))?.with_scheme(self.diff_scheme))
    }

    pub fn scheme_config(&self) -> SchemeConfig {
        SchemeConfig {
            scheme: self.scheme,
            dt: self.dt,
            fixed_point_tol: self.fixed_point_tol,
            max_fixed_point_iters: self.max_fixed_point_iters,
            cfl_safety: self.cfl_safety,
            force_dt: self.force_dt,
        }
    }

    /// Replaces the seed of random initial data and of a random div-curl
    /// source.
    pub fn with_seed(mut self, seed: u64) -> Self {
        if let InitialData::RandomSmooth { band, .. } = self.initial_data {
            self.initial_data = InitialData::RandomSmooth { seed, band };
        }
        if let DivCurlSource::Random { .. } = self.divcurl.source {
            self.divcurl.source = DivCurlSource::Random { seed };
        }
        self
    }
}
