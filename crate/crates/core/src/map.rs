//! Discretised maps `u: S¹ → N` and the calculus along them.

use crate::error::{contract, Result, SmfError};
use crate::geometry::{Representation, Tangent, TargetGeometry, TargetKind, TargetPoint, Vec3};
use crate::grid::PeriodicGrid;

/// Per-node tangent vectors along a [`MapState`] (ambient vectors on the
/// sphere, chart vectors otherwise).
#[derive(Clone, Debug, PartialEq)]
pub struct TangentField {
    pub values: Vec<Vec3>,
}

impl TangentField {
    pub fn zeros(n: usize) -> Self {
        Self { values: vec![Vec3::zeros(); n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// The map at one instant: one target point per grid node.
///
/// CP¹ states carry a chart index per node. Derivatives need every node in
/// the same chart; [`MapState::unify_chart`] migrates a state into one.
#[derive(Clone, Debug)]
pub struct MapState {
    geometry: TargetGeometry,
    grid: PeriodicGrid,
    coords: Vec<Vec3>,
    charts: Vec<u8>,
    time: f64,
}

/// First and second covariant derivatives of a map, plus the normal
/// component discarded when projecting `∂ₓu` (zero on chart targets).
#[derive(Clone, Debug)]
pub struct MapDerivatives {
    pub ux: Vec<Vec3>,
    pub tau: Vec<Vec3>,
    pub proj_residual: f64,
}

#[inline]
fn wrap_half(d: f64) -> f64 {
    d - d.round()
}

/// Borrowed view used by the solvers: coordinates that need not be a valid
/// state (midpoint iterates, RK stages) but share a single chart.
#[derive(Clone, Copy)]
pub(crate) struct MapView<'a> {
    pub geometry: &'a TargetGeometry,
    pub grid: &'a PeriodicGrid,
    pub coords: &'a [Vec3],
}

impl<'a> MapView<'a> {
    /// Componentwise derivative of a vector field.
    pub fn dx(&self, values: &[Vec3]) -> Vec<Vec3> {
        let xs: Vec<f64> = values.iter().map(|v| v.x).collect();
        let ys: Vec<f64> = values.iter().map(|v| v.y).collect();
        let (dx, dy) = self.grid.derivative_pair(&xs, &ys);
        if self.geometry.representation() == Representation::Embedded {
            let zs: Vec<f64> = values.iter().map(|v| v.z).collect();
            let dz = self.grid.derivative_raw(&zs);
            (0..values.len()).map(|j| Vec3::new(dx[j], dy[j], dz[j])).collect()
        } else {
            (0..values.len()).map(|j| Vec3::new(dx[j], dy[j], 0.0)).collect()
        }
    }

    /// Derivative of the torus map through its lift: neighbour differences
    /// are taken modulo 1, the winding is split off as a linear part.
    fn dx_torus(&self) -> Vec<Vec3> {
        let n = self.coords.len();
        let x0 = self.grid.origin();
        let len = self.grid.length();
        let mut comps = [vec![0.0; n], vec![0.0; n]];
        let mut winding = [0.0; 2];
        for (c, comp) in comps.iter_mut().enumerate() {
            let raw: Vec<f64> = self.coords.iter().map(|p| p[c]).collect();
            let mut lift = vec![raw[0]; n];
            for j in 1..n {
                lift[j] = lift[j - 1] + wrap_half(raw[j] - raw[j - 1]);
            }
            let w = (lift[n - 1] + wrap_half(raw[0] - raw[n - 1]) - raw[0]).round();
            winding[c] = w;
            for j in 0..n {
                comp[j] = lift[j] - w * (self.grid.node(j) - x0) / len;
            }
        }
        let (d0, d1) = self.grid.derivative_pair(&comps[0], &comps[1]);
        (0..n)
            .map(|j| Vec3::new(d0[j] + winding[0] / len, d1[j] + winding[1] / len, 0.0))
            .collect()
    }

    /// `∂ₓu`, tangent-projected on embedded targets, with the largest
    /// discarded normal component.
    pub fn partial_x(&self) -> (Vec<Vec3>, f64) {
        match self.geometry.kind {
            TargetKind::FlatTorus2 => (self.dx_torus(), 0.0),
            TargetKind::FubiniStudyCP1 => (self.dx(self.coords), 0.0),
            TargetKind::Sphere2 => {
                let raw = self.dx(self.coords);
                let mut resid = 0.0f64;
                let ux = raw
                    .iter()
                    .zip(self.coords)
                    .map(|(d, p)| {
                        let normal = d.dot(p) / p.norm_squared();
                        resid = resid.max(normal.abs() * p.norm());
                        d - p * normal
                    })
                    .collect();
                (ux, resid)
            }
        }
    }

    /// `∇ₓV = ∂ₓV + Γ(∂ₓu, V)`, projected to the tangent space on the sphere.
    pub fn covariant_x(&self, ux: &[Vec3], v: &[Vec3]) -> Vec<Vec3> {
        let dv = self.dx(v);
        dv.iter()
            .zip(self.coords)
            .zip(ux.iter().zip(v))
            .map(|((d, p), (a, b))| match self.geometry.kind {
                TargetKind::Sphere2 => {
                    let w = d + self.geometry.connection_correction_raw(p, a, b);
                    w - p * (w.dot(p) / p.norm_squared())
                }
                _ => d + self.geometry.connection_correction_raw(p, a, b),
            })
            .collect()
    }

    pub fn derivatives(&self) -> MapDerivatives {
        let (ux, proj_residual) = self.partial_x();
        let tau = self.covariant_x(&ux, &ux);
        MapDerivatives { ux, tau, proj_residual }
    }

    /// Flow velocity `−J τ(u)`.
    pub fn velocity(&self) -> Vec<Vec3> {
        let d = self.derivatives();
        d.tau
            .iter()
            .zip(self.coords)
            .map(|(t, p)| -self.geometry.apply_j_raw(p, t))
            .collect()
    }
}

impl MapState {
    /// Validates and assembles a state. Sphere points must have unit norm,
    /// torus points are reduced modulo 1, CP¹ points must lie inside the
    /// exit disc of their chart.
    pub fn new(
        geometry: TargetGeometry,
        grid: PeriodicGrid,
        points: Vec<TargetPoint>,
        time: f64,
    ) -> Result<Self> {
        if points.len() != grid.n_points() {
            return Err(contract(format!(
                "map has {} points, grid has {}",
                points.len(),
                grid.n_points()
            )));
        }
        if !time.is_finite() {
            return Err(SmfError::NonFinite("state time".into()));
        }
        let mut coords = Vec::with_capacity(points.len());
        let mut charts = Vec::with_capacity(points.len());
        for (j, p) in points.iter().enumerate() {
            if !p.coords.iter().all(|c| c.is_finite()) {
                return Err(SmfError::NonFinite(format!("map value at node {j}")));
            }
            match geometry.kind {
                TargetKind::Sphere2 => {
                    let n = p.coords.norm();
                    if (n - 1.0).abs() > 1e-10 || p.chart != 0 {
                        return Err(contract(format!("node {j} is not on the unit sphere (|p| = {n})")));
                    }
                    coords.push(p.coords);
                }
                TargetKind::FlatTorus2 => {
                    if p.chart != 0 || p.coords.z != 0.0 {
                        return Err(contract(format!("node {j} is not a torus chart point")));
                    }
                    coords.push(Vec3::new(p.coords.x.rem_euclid(1.0), p.coords.y.rem_euclid(1.0), 0.0));
                }
                TargetKind::FubiniStudyCP1 => {
                    if p.chart > 1 || p.coords.z != 0.0 {
                        return Err(contract(format!("node {j} is not a CP1 chart point")));
                    }
                    let r = p.coords.x.hypot(p.coords.y);
                    if r > geometry.chart_exit_radius {
                        return Err(SmfError::ReChartRequired { node: j, modulus: r });
                    }
                    coords.push(p.coords);
                }
            }
            charts.push(p.chart);
        }
        Ok(Self { geometry, grid, coords, charts, time })
    }

    /// Builds a state from raw coordinates in one chart, projecting every
    /// node onto the target.
    pub fn from_coords(
        geometry: TargetGeometry,
        grid: PeriodicGrid,
        coords: &[Vec3],
        chart: u8,
        time: f64,
    ) -> Result<Self> {
        let points = coords
            .iter()
            .enumerate()
            .map(|(j, c)| {
                geometry.project_point(*c, chart).map_err(|e| match e {
                    SmfError::ReChartRequired { modulus, .. } => SmfError::ReChartRequired { node: j, modulus },
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(geometry, grid, points, time)
    }

    /// Trusted constructor for solver output that is already on the target.
    pub(crate) fn from_parts(
        geometry: TargetGeometry,
        grid: PeriodicGrid,
        coords: Vec<Vec3>,
        chart: u8,
        time: f64,
    ) -> Self {
        let charts = vec![chart; coords.len()];
        Self { geometry, grid, coords, charts, time }
    }

    pub fn geometry(&self) -> &TargetGeometry {
        &self.geometry
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[Vec3] {
        &self.coords
    }

    pub fn point(&self, j: usize) -> TargetPoint {
        TargetPoint { coords: self.coords[j], chart: self.charts[j] }
    }

    pub fn points(&self) -> Vec<TargetPoint> {
        (0..self.len()).map(|j| self.point(j)).collect()
    }

    /// Chart shared by all nodes, or the first node that disagrees.
    pub fn chart(&self) -> std::result::Result<u8, usize> {
        let c0 = self.charts[0];
        match self.charts.iter().position(|&c| c != c0) {
            None => Ok(c0),
            Some(j) => Err(j),
        }
    }

    pub(crate) fn view(&self) -> Result<MapView<'_>> {
        if let Err(node) = self.chart() {
            return Err(SmfError::ReChartRequired {
                node,
                modulus: self.coords[node].x.hypot(self.coords[node].y),
            });
        }
        Ok(MapView { geometry: &self.geometry, grid: &self.grid, coords: &self.coords })
    }

    fn check_field(&self, v: &TangentField) -> Result<()> {
        if v.len() != self.len() {
            return Err(contract(format!("field has {} values, map has {}", v.len(), self.len())));
        }
        if !v.values.iter().all(|x| x.iter().all(|c| c.is_finite())) {
            return Err(SmfError::NonFinite("tangent field".into()));
        }
        Ok(())
    }

    pub fn partial_x(&self) -> Result<TangentField> {
        Ok(TangentField { values: self.view()?.partial_x().0 })
    }

    /// Largest normal component discarded when projecting `∂ₓu`.
    pub fn projection_residual(&self) -> Result<f64> {
        Ok(self.view()?.partial_x().1)
    }

    pub fn covariant_x(&self, v: &TangentField) -> Result<TangentField> {
        self.check_field(v)?;
        let view = self.view()?;
        let (ux, _) = view.partial_x();
        Ok(TangentField { values: view.covariant_x(&ux, &v.values) })
    }

    /// Tension field `τ(u) = ∇ₓ∂ₓu`.
    pub fn tension(&self) -> Result<TangentField> {
        Ok(TangentField { values: self.view()?.derivatives().tau })
    }

    pub fn derivatives(&self) -> Result<MapDerivatives> {
        Ok(self.view()?.derivatives())
    }

    /// Pairs a field value with its base point for the checked geometry API.
    pub fn tangent_at(&self, j: usize, v: &TangentField) -> Tangent {
        Tangent::new(self.point(j), v.values[j])
    }

    /// Moves a CP¹ state into a single chart whose exit disc contains every
    /// node, preferring the current chart of node 0. Other targets are
    /// returned unchanged.
    pub fn unify_chart(&self) -> Result<Self> {
        if self.geometry.kind != TargetKind::FubiniStudyCP1 {
            return Ok(self.clone());
        }
        let first = self.charts[0];
        let mut worst = (0.0, 0);
        for target in [first, 1 - first] {
            let coords: Vec<Vec3> = self
                .coords
                .iter()
                .zip(&self.charts)
                .map(|(w, &c)| if c == target { *w } else { TargetGeometry::cp1_switch_point(w) })
                .collect();
            worst = (0.0, 0);
            for (j, w) in coords.iter().enumerate() {
                let r = w.x.hypot(w.y);
                let r = if r.is_finite() { r } else { f64::INFINITY };
                if r > worst.0 {
                    worst = (r, j);
                }
            }
            if worst.0 <= self.geometry.chart_exit_radius {
                return Ok(Self::from_parts(self.geometry, self.grid.clone(), coords, target, self.time));
            }
        }
        Err(SmfError::ReChartRequired { node: worst.1, modulus: worst.0 })
    }

    /// Unit-sphere images of the nodes (identity on the sphere, inverse
    /// stereographic projection on CP¹). `None` for the torus.
    pub fn sphere_image(&self) -> Option<Vec<Vec3>> {
        match self.geometry.kind {
            TargetKind::Sphere2 => Some(self.coords.clone()),
            TargetKind::FubiniStudyCP1 => Some(
                self.coords
                    .iter()
                    .zip(&self.charts)
                    .map(|(w, &c)| TargetGeometry::cp1_to_sphere(w, c))
                    .collect(),
            ),
            TargetKind::FlatTorus2 => None,
        }
    }

    /// L∞ distance between two states on the same grid: ambient distance on
    /// the sphere, chordal distance of the unit-sphere images on CP¹, and
    /// the periodic coordinate distance on the torus.
    pub fn distance_linf(&self, other: &MapState) -> Result<f64> {
        if self.len() != other.len() || self.geometry.kind != other.geometry.kind {
            return Err(contract("states live on different grids or targets"));
        }
        Ok(match self.geometry.kind {
            TargetKind::FlatTorus2 => self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| wrap_half(a.x - b.x).abs().max(wrap_half(a.y - b.y).abs()))
                .fold(0.0, f64::max),
            _ => {
                let a = self.sphere_image().expect("embedded image");
                let b = other.sphere_image().expect("embedded image");
                a.iter().zip(&b).map(|(p, q)| (p - q).amax()).fold(0.0, f64::max)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DiffScheme;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn sphere_state(n: usize, f: impl Fn(f64) -> Vec3) -> MapState {
        let grid = PeriodicGrid::new(n).unwrap();
        let pts = grid.nodes().into_iter().map(|x| TargetPoint::embedded(f(x))).collect();
        MapState::new(TargetGeometry::sphere2(), grid, pts, 0.0).unwrap()
    }

    fn great_circle(x: f64) -> Vec3 {
        Vec3::new((2.0 * PI * x).cos(), (2.0 * PI * x).sin(), 0.0)
    }

    fn spin_wave(theta: f64, k: f64) -> impl Fn(f64) -> Vec3 {
        move |x| {
            let phi = 2.0 * PI * k * x;
            Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
        }
    }

    /// A smooth non-band-limited sphere map.
    fn wobbly(x: f64) -> Vec3 {
        let s = 2.0 * PI * x;
        let v = Vec3::new(0.6 * s.cos() + 0.2 * (2.0 * s).sin(), 0.5 * s.sin(), 1.0 + 0.3 * (3.0 * s).cos());
        v / v.norm()
    }

    #[test]
    fn constant_map_has_zero_derivatives() {
        let u = sphere_state(32, |_| Vec3::new(0.0, 0.6, 0.8));
        assert!(u.partial_x().unwrap().max_norm() < 1e-13);
        assert!(u.tension().unwrap().max_norm() < 1e-13);
    }

    #[test]
    fn great_circle_derivative_and_tension() {
        let u = sphere_state(64, great_circle);
        let ux = u.partial_x().unwrap();
        for (v, p) in ux.values.iter().zip(u.coords()) {
            assert!((v.norm() - 2.0 * PI).abs() <= 1e-10);
            assert!(v.dot(p).abs() <= 1e-10);
        }
        assert!(u.covariant_x(&ux).unwrap().max_norm() <= 1e-10);
        assert!(u.tension().unwrap().max_norm() <= 1e-9);
    }

    #[test]
    fn torus_linear_map_has_constant_derivative() {
        let grid = PeriodicGrid::new(32).unwrap();
        let pts = grid.nodes().into_iter().map(|x| TargetPoint::chart(x.rem_euclid(1.0), 0.0, 0)).collect();
        let u = MapState::new(TargetGeometry::torus2(), grid, pts, 0.0).unwrap();
        for v in u.partial_x().unwrap().values {
            assert!((v - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
        }
        assert!(u.tension().unwrap().max_norm() < 1e-10);
    }

    #[test]
    fn torus_winding_plus_oscillation() {
        let grid = PeriodicGrid::new(64).unwrap();
        let pts = grid
            .nodes()
            .into_iter()
            .map(|x| TargetPoint::chart((2.0 * x + 0.1 * (2.0 * PI * x).sin()).rem_euclid(1.0), (-x + 0.3).rem_euclid(1.0), 0))
            .collect();
        let u = MapState::new(TargetGeometry::torus2(), grid.clone(), pts, 0.0).unwrap();
        let ux = u.partial_x().unwrap();
        for (j, v) in ux.values.iter().enumerate() {
            let x = grid.node(j);
            assert!((v.x - (2.0 + 0.2 * PI * (2.0 * PI * x).cos())).abs() < 1e-11);
            assert!((v.y + 1.0).abs() < 1e-11);
        }
    }

    #[test]
    fn torus_covariant_is_plain_derivative() {
        let grid = PeriodicGrid::new(32).unwrap();
        let pts = grid.nodes().into_iter().map(|x| TargetPoint::chart(0.5 + 0.1 * (2.0 * PI * x).cos(), 0.2, 0)).collect();
        let u = MapState::new(TargetGeometry::torus2(), grid.clone(), pts, 0.0).unwrap();
        let v = TangentField { values: grid.nodes().iter().map(|x| Vec3::new((2.0 * PI * x).sin(), x.cos(), 0.0)).collect() };
        let cov = u.covariant_x(&v).unwrap();
        let xs: Vec<f64> = v.values.iter().map(|a| a.x).collect();
        let dxs = grid.spectral_derivative(&xs).unwrap();
        for j in 0..32 {
            assert!((cov.values[j].x - dxs[j]).abs() < 1e-14);
        }
    }

    #[test]
    fn spin_wave_tension_energy() {
        let theta = PI / 4.0;
        let u = sphere_state(64, spin_wave(theta, 1.0));
        let tau = u.tension().unwrap();
        let dens: Vec<f64> = tau.values.iter().map(|t| t.norm_squared()).collect();
        let e = u.grid().integrate_periodic(&dens);
        assert!((e - 4.0 * PI.powi(4)).abs() <= 1e-8, "E = {e}");
    }

    /// Dense second-order finite-difference oracle for the tension of the
    /// spin wave: u_xx + |u_x|² u from centred differences of the analytic
    /// map at a small step.
    #[test]
    fn spin_wave_tension_matches_finite_difference_oracle() {
        let theta = 0.7;
        let f = spin_wave(theta, 2.0);
        let u = sphere_state(64, &f);
        let tau = u.tension().unwrap();
        let h = 1e-4;
        for (j, x) in u.grid().nodes().into_iter().enumerate() {
            let uxx = (f(x + h) - f(x) * 2.0 + f(x - h)) / (h * h);
            let ux = (f(x + h) - f(x - h)) / (2.0 * h);
            let oracle = uxx + f(x) * ux.norm_squared();
            assert!((tau.values[j] - oracle).norm() < 1e-3 * oracle.norm().max(1.0));
        }
    }

    #[test]
    fn sphere_tension_is_projected_second_derivative() {
        let u = sphere_state(128, wobbly);
        let tau = u.tension().unwrap();
        let d = u.view().unwrap();
        let raw = d.dx(u.coords());
        let raw2 = d.dx(&raw);
        for j in 0..u.len() {
            let p = u.coords()[j];
            let expect = raw2[j] + p * raw[j].norm_squared();
            let expect = expect - p * expect.dot(&p);
            assert!((tau.values[j] - expect).norm() < 1e-7);
        }
    }

    #[test]
    fn partial_x_converges_spectrally() {
        let err = |n: usize| {
            let u = sphere_state(n, wobbly);
            let ux = u.partial_x().unwrap();
            let h = 1e-5;
            u.grid()
                .nodes()
                .into_iter()
                .zip(&ux.values)
                .map(|(x, v)| {
                    // wobbly is smooth but not band-limited; compare to a
                    // fourth-order central difference at tiny step.
                    let d = (wobbly(x - 2.0 * h) - wobbly(x - h) * 8.0 + wobbly(x + h) * 8.0 - wobbly(x + 2.0 * h))
                        / (12.0 * h);
                    (v - d).norm()
                })
                .fold(0.0, f64::max)
        };
        let e: Vec<f64> = [16, 32, 64].iter().map(|&n| err(n)).collect();
        // Faster than any fixed power: the successive ratios grow.
        assert!(e[0] / e[1] > 16.0, "{e:?}");
        assert!(e[1] / e[2] > e[0] / e[1] || e[2] < 1e-9, "{e:?}");
    }

    #[test]
    fn metric_compatibility_on_band_limited_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for geometry in [TargetGeometry::sphere2(), TargetGeometry::cp1()] {
            let grid = PeriodicGrid::new(128).unwrap();
            let pts: Vec<TargetPoint> = grid
                .nodes()
                .into_iter()
                .map(|x| {
                    let p = wobbly(x);
                    match geometry.kind {
                        TargetKind::Sphere2 => TargetPoint::embedded(p),
                        _ => {
                            let w = TargetGeometry::cp1_from_sphere(&p, 0);
                            TargetPoint::chart(w.x, w.y, 0)
                        }
                    }
                })
                .collect();
            let u = MapState::new(geometry, grid.clone(), pts, 0.0).unwrap();
            let coeffs: Vec<[f64; 6]> = (0..3).map(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0))).collect();
            let field = |shift: usize| -> TangentField {
                TangentField {
                    values: grid
                        .nodes()
                        .iter()
                        .zip(u.coords())
                        .map(|(x, p)| {
                            let s = 2.0 * PI * x;
                            let c = &coeffs[shift];
                            let raw = Vec3::new(c[0] + c[1] * s.cos(), c[2] + c[3] * s.sin(), c[4] + c[5] * (2.0 * s).cos());
                            geometry.project_tangent_raw(p, &raw)
                        })
                        .collect(),
                }
            };
            let v = field(0);
            let w = field(1);
            let dv = u.covariant_x(&v).unwrap();
            let dw = u.covariant_x(&w).unwrap();
            let ip: Vec<f64> = (0..128).map(|j| geometry.inner_raw(&u.coords()[j], &v.values[j], &w.values[j])).collect();
            let dip = grid.spectral_derivative(&ip).unwrap();
            for j in 0..128 {
                let p = &u.coords()[j];
                let rhs = geometry.inner_raw(p, &dv.values[j], &w.values[j]) + geometry.inner_raw(p, &v.values[j], &dw.values[j]);
                assert!((dip[j] - rhs).abs() <= 1e-8, "{:?} residual {}", geometry.kind, (dip[j] - rhs).abs());
            }
        }
    }

    #[test]
    fn cp1_chart_tension_matches_sphere() {
        // The flow only sees the metric up to a constant factor, so the chart
        // tension is the stereographic pushforward of the sphere tension.
        let grid = PeriodicGrid::new(128).unwrap();
        let s = sphere_state(128, wobbly);
        let pts = s
            .coords()
            .iter()
            .map(|p| {
                let w = TargetGeometry::cp1_from_sphere(p, 0);
                TargetPoint::chart(w.x, w.y, 0)
            })
            .collect();
        let c = MapState::new(TargetGeometry::cp1(), grid, pts, 0.0).unwrap();
        let ts = s.tension().unwrap();
        let tc = c.tension().unwrap();
        for j in 0..128 {
            let p = s.coords()[j];
            // Differential of chart 0 applied to the ambient tangent vector.
            let h = 1e-6;
            let wp = TargetGeometry::cp1_from_sphere(&(p + ts.values[j] * h), 0);
            let wm = TargetGeometry::cp1_from_sphere(&(p - ts.values[j] * h), 0);
            let push = (wp - wm) / (2.0 * h);
            assert!((push - tc.values[j]).norm() < 1e-5 * (1.0 + push.norm()));
        }
    }

    #[test]
    fn mixed_charts_require_rechart() {
        let grid = PeriodicGrid::new(8).unwrap();
        let mut pts: Vec<TargetPoint> = (0..8).map(|_| TargetPoint::chart(0.5, 0.0, 0)).collect();
        pts[3] = TargetPoint::chart(2.0, 0.0, 1);
        let u = MapState::new(TargetGeometry::cp1(), grid, pts, 0.0).unwrap();
        assert!(matches!(u.partial_x(), Err(SmfError::ReChartRequired { node: 3, .. })));
        let unified = u.unify_chart().unwrap();
        assert_eq!(unified.chart(), Ok(0));
        assert!((unified.coords()[3].x - 0.5).abs() < 1e-15);
        assert!(unified.partial_x().is_ok());
    }

    #[test]
    fn rejects_points_outside_exit_disc() {
        let grid = PeriodicGrid::new(8).unwrap();
        let pts: Vec<TargetPoint> = (0..8).map(|j| TargetPoint::chart(if j == 5 { 2.5 } else { 0.0 }, 0.0, 0)).collect();
        assert!(matches!(
            MapState::new(TargetGeometry::cp1(), grid, pts, 0.0),
            Err(SmfError::ReChartRequired { node: 5, .. })
        ));
    }

    #[test]
    fn fd4_scheme_agrees_with_spectral_to_fourth_order() {
        let grid = PeriodicGrid::new(128).unwrap().with_scheme(DiffScheme::FiniteDifference4);
        let pts = grid.nodes().into_iter().map(|x| TargetPoint::embedded(wobbly(x))).collect();
        let u = MapState::new(TargetGeometry::sphere2(), grid, pts, 0.0).unwrap();
        let s = sphere_state(128, wobbly);
        let a = u.tension().unwrap();
        let b = s.tension().unwrap();
        let err = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(err < 1e-2 * b.max_norm(), "fd4 vs spectral {err}");
    }
}
