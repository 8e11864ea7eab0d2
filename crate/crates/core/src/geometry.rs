//! Pointwise Kähler geometry of the three shipped targets.
//!
//! * `Sphere2`: the unit sphere embedded in R³, `J_p V = p × V`.
//! * `FlatTorus2`: R²/Z² in periodic chart coordinates, identity metric,
//!   `J` the quarter-turn rotation.
//! * `FubiniStudyCP1`: CP¹ with the Fubini–Study metric `|dw|²/(1+|w|²)²`
//!   (constant curvature 4) on two stereographic charts `w` and `1/w`.
//!
//! Points and tangents are stored in a [`Vec3`]; chart targets keep the third
//! component at zero. All curvature quantities use the operator convention
//! `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z`, under which the unit sphere has
//! sectional curvature +1.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result, SmfError};

pub type Vec3 = Vector3<f64>;

/// Tolerance for "is this vector tangent" checks on embedded targets.
pub const TANGENCY_TOL: f64 = 1e-8;

/// Gaussian curvature of the Fubini–Study metric used for CP¹.
pub const CP1_CURVATURE: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TargetKind {
    Sphere2,
    FlatTorus2,
    FubiniStudyCP1,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Representation {
    Embedded,
    Chart,
}

/// A value of the map: ambient coordinates for embedded targets, chart
/// coordinates plus chart index otherwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TargetPoint {
    pub coords: Vec3,
    pub chart: u8,
}

impl TargetPoint {
    pub fn embedded(coords: Vec3) -> Self {
        Self { coords, chart: 0 }
    }

    pub fn chart(w1: f64, w2: f64, chart: u8) -> Self {
        Self { coords: Vec3::new(w1, w2, 0.0), chart }
    }
}

/// A tangent vector together with its base point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tangent {
    pub base: TargetPoint,
    pub components: Vec3,
}

impl Tangent {
    pub fn new(base: TargetPoint, components: Vec3) -> Self {
        Self { base, components }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetGeometry {
    pub kind: TargetKind,
    /// Preferred chart radius when placing a CP¹ map in a chart.
    pub chart_switch_radius: f64,
    /// A CP¹ state migrates to the other chart once a node leaves this disc.
    pub chart_exit_radius: f64,
}

#[inline]
fn cmul(a: &Vec3, b: &Vec3) -> Vec3 {
    Vec3::new(a.x * b.x - a.y * b.y, a.x * b.y + a.y * b.x, 0.0)
}

#[inline]
fn cconj(a: &Vec3) -> Vec3 {
    Vec3::new(a.x, -a.y, 0.0)
}

#[inline]
fn cinv(a: &Vec3) -> Vec3 {
    let r2 = a.x * a.x + a.y * a.y;
    Vec3::new(a.x / r2, -a.y / r2, 0.0)
}

impl TargetGeometry {
    pub fn sphere2() -> Self {
        Self::of_kind(TargetKind::Sphere2)
    }

    pub fn torus2() -> Self {
        Self::of_kind(TargetKind::FlatTorus2)
    }

    pub fn cp1() -> Self {
        Self::of_kind(TargetKind::FubiniStudyCP1)
    }

    pub fn of_kind(kind: TargetKind) -> Self {
        Self { kind, chart_switch_radius: 1.5, chart_exit_radius: 2.0 }
    }

    /// Parses the run-configuration key: `sphere2`, `torus2` or `cp1`.
    pub fn from_key(key: &str) -> Result<Self> {
        match key.trim() {
            "sphere2" => Ok(Self::sphere2()),
            "torus2" => Ok(Self::torus2()),
            "cp1" => Ok(Self::cp1()),
            other => Err(SmfError::InvalidConfig {
                key: "target".into(),
                message: format!("unknown target `{other}` (expected sphere2 | torus2 | cp1)"),
            }),
        }
    }

    pub fn key(&self) -> &'static str {
        match self.kind {
            TargetKind::Sphere2 => "sphere2",
            TargetKind::FlatTorus2 => "torus2",
            TargetKind::FubiniStudyCP1 => "cp1",
        }
    }

    pub fn representation(&self) -> Representation {
        match self.kind {
            TargetKind::Sphere2 => Representation::Embedded,
            _ => Representation::Chart,
        }
    }

    /// Number of stored coordinate components (3 embedded, 2 chart).
    pub fn coord_dim(&self) -> usize {
        match self.representation() {
            Representation::Embedded => 3,
            Representation::Chart => 2,
        }
    }

    // ---- raw kernels -------------------------------------------------------
    //
    // These take bare coordinates and skip all base-point bookkeeping; the
    // field-level calculus in `map` and `flow` runs on them.

    /// Conformal factor of the metric at `p` (1 for the Euclidean targets).
    #[inline]
    pub fn metric_factor(&self, p: &Vec3) -> f64 {
        match self.kind {
            TargetKind::FubiniStudyCP1 => {
                let s = 1.0 + p.x * p.x + p.y * p.y;
                1.0 / (s * s)
            }
            _ => 1.0,
        }
    }

    #[inline]
    pub fn inner_raw(&self, p: &Vec3, x: &Vec3, y: &Vec3) -> f64 {
        self.metric_factor(p) * x.dot(y)
    }

    #[inline]
    pub fn norm2_raw(&self, p: &Vec3, x: &Vec3) -> f64 {
        self.inner_raw(p, x, x)
    }

    #[inline]
    pub fn apply_j_raw(&self, p: &Vec3, x: &Vec3) -> Vec3 {
        match self.kind {
            TargetKind::Sphere2 => p.cross(x),
            _ => Vec3::new(-x.y, x.x, 0.0),
        }
    }

    /// `R(X,Y)Z`. All three targets have constant curvature `K`, so
    /// `R(X,Y)Z = K(⟨Y,Z⟩X − ⟨X,Z⟩Y)`.
    #[inline]
    pub fn curvature_raw(&self, p: &Vec3, x: &Vec3, y: &Vec3, z: &Vec3) -> Vec3 {
        let k = self.gaussian_curvature();
        if k == 0.0 {
            return Vec3::zeros();
        }
        (x * self.inner_raw(p, y, z) - y * self.inner_raw(p, x, z)) * k
    }

    /// `⟨R(X,JX)X, JX⟩`, which equals `−K|X|⁴` on these targets.
    #[inline]
    pub fn curvature_quartic_raw(&self, p: &Vec3, x: &Vec3) -> f64 {
        let jx = self.apply_j_raw(p, x);
        let r = self.curvature_raw(p, x, &jx, x);
        self.inner_raw(p, &r, &jx)
    }

    /// Connection correction: `∇_x V = ∂_x V + correction(u, ∂_x u, V)`.
    #[inline]
    pub fn connection_correction_raw(&self, p: &Vec3, v: &Vec3, w: &Vec3) -> Vec3 {
        match self.kind {
            TargetKind::Sphere2 => p * v.dot(w),
            TargetKind::FlatTorus2 => Vec3::zeros(),
            TargetKind::FubiniStudyCP1 => {
                // Γ(V,W) = 2 ∂_w φ · V W with φ = −ln(1+|w|²).
                let s = 1.0 + p.x * p.x + p.y * p.y;
                cmul(&cmul(&cconj(p), v), w) * (-2.0 / s)
            }
        }
    }

    /// Removes the normal component on embedded targets; identity on charts
    /// (beyond zeroing the unused third slot).
    #[inline]
    pub fn project_tangent_raw(&self, p: &Vec3, v: &Vec3) -> Vec3 {
        match self.kind {
            TargetKind::Sphere2 => v - p * v.dot(p),
            _ => Vec3::new(v.x, v.y, 0.0),
        }
    }

    pub fn gaussian_curvature(&self) -> f64 {
        match self.kind {
            TargetKind::Sphere2 => 1.0,
            TargetKind::FlatTorus2 => 0.0,
            TargetKind::FubiniStudyCP1 => CP1_CURVATURE,
        }
    }

    // ---- checked API -------------------------------------------------------

    fn check_point(&self, p: &TargetPoint) -> Result<()> {
        match self.representation() {
            Representation::Embedded => {
                let n = p.coords.norm();
                if (n - 1.0).abs() > TANGENCY_TOL {
                    return Err(contract(format!("point not on the unit sphere (|p| = {n})")));
                }
                if p.chart != 0 {
                    return Err(contract("embedded points carry chart index 0"));
                }
            }
            Representation::Chart => {
                if p.coords.z != 0.0 {
                    return Err(contract("chart point has a nonzero third component"));
                }
                if self.kind == TargetKind::FubiniStudyCP1 {
                    if p.chart > 1 {
                        return Err(contract(format!("CP1 has charts 0 and 1, got {}", p.chart)));
                    }
                } else if p.chart != 0 {
                    return Err(contract("torus points carry chart index 0"));
                }
            }
        }
        Ok(())
    }

    fn check_tangent(&self, p: &TargetPoint, x: &Tangent) -> Result<()> {
        if x.base != *p {
            return Err(contract("tangent vector is based at a different point"));
        }
        match self.representation() {
            Representation::Embedded => {
                let d = p.coords.dot(&x.components);
                if d.abs() > TANGENCY_TOL * (1.0 + x.components.norm()) {
                    return Err(contract(format!("vector is not tangent (⟨p,X⟩ = {d:.3e})")));
                }
            }
            Representation::Chart => {
                if x.components.z != 0.0 {
                    return Err(contract("chart tangent has a nonzero third component"));
                }
            }
        }
        Ok(())
    }

    fn check_all(&self, p: &TargetPoint, xs: &[&Tangent]) -> Result<()> {
        self.check_point(p)?;
        xs.iter().try_for_each(|x| self.check_tangent(p, x))
    }

    /// `⟨X, Y⟩` in the target metric.
    pub fn inner(&self, p: &TargetPoint, x: &Tangent, y: &Tangent) -> Result<f64> {
        self.check_all(p, &[x, y])?;
        Ok(self.inner_raw(&p.coords, &x.components, &y.components))
    }

    pub fn apply_j(&self, p: &TargetPoint, x: &Tangent) -> Result<Tangent> {
        self.check_all(p, &[x])?;
        Ok(Tangent::new(*p, self.apply_j_raw(&p.coords, &x.components)))
    }

    pub fn curvature_op(
        &self,
        p: &TargetPoint,
        x: &Tangent,
        y: &Tangent,
        z: &Tangent,
    ) -> Result<Tangent> {
        self.check_all(p, &[x, y, z])?;
        Ok(Tangent::new(
            *p,
            self.curvature_raw(&p.coords, &x.components, &y.components, &z.components),
        ))
    }

    pub fn curvature_quartic(&self, p: &TargetPoint, x: &Tangent) -> Result<f64> {
        self.check_all(p, &[x])?;
        Ok(self.curvature_quartic_raw(&p.coords, &x.components))
    }

    /// Returns an ambient vector (embedded) or chart vector (chart targets).
    pub fn connection_correction(&self, p: &TargetPoint, v: &Tangent, w: &Tangent) -> Result<Vec3> {
        self.check_all(p, &[v, w])?;
        Ok(self.connection_correction_raw(&p.coords, &v.components, &w.components))
    }

    /// Maps raw coordinates onto the target: normalisation on the sphere,
    /// reduction modulo 1 on the torus, a validity-disc check on CP¹.
    pub fn project_point(&self, raw: Vec3, chart: u8) -> Result<TargetPoint> {
        if !raw.iter().all(|c| c.is_finite()) {
            return Err(SmfError::NonFinite("point coordinates".into()));
        }
        match self.kind {
            TargetKind::Sphere2 => {
                let n = raw.norm();
                if n < 1e-12 {
                    return Err(SmfError::DegenerateInput(
                        "cannot project the zero vector onto the sphere".into(),
                    ));
                }
                Ok(TargetPoint::embedded(raw / n))
            }
            TargetKind::FlatTorus2 => Ok(TargetPoint::chart(raw.x.rem_euclid(1.0), raw.y.rem_euclid(1.0), 0)),
            TargetKind::FubiniStudyCP1 => {
                if chart > 1 {
                    return Err(contract(format!("CP1 has charts 0 and 1, got {chart}")));
                }
                let r = raw.x.hypot(raw.y);
                if r > self.chart_exit_radius {
                    return Err(SmfError::ReChartRequired { node: 0, modulus: r });
                }
                Ok(TargetPoint::chart(raw.x, raw.y, chart))
            }
        }
    }

    pub fn project_tangent(&self, p: &TargetPoint, v: Vec3) -> Result<Tangent> {
        self.check_point(p)?;
        Ok(Tangent::new(*p, self.project_tangent_raw(&p.coords, &v)))
    }

    // ---- CP¹ charts ----------------------------------------------------------

    /// Stereographic coordinate of a unit-sphere point in the given CP¹
    /// chart. Chart 0 is `w = (x + iy)/(1 + z)`, chart 1 is `1/w`; both are
    /// holomorphic for `J_p = p ×`.
    pub fn cp1_from_sphere(p: &Vec3, chart: u8) -> Vec3 {
        if chart == 0 {
            Vec3::new(p.x / (1.0 + p.z), p.y / (1.0 + p.z), 0.0)
        } else {
            Vec3::new(p.x / (1.0 - p.z), -p.y / (1.0 - p.z), 0.0)
        }
    }

    pub fn cp1_to_sphere(w: &Vec3, chart: u8) -> Vec3 {
        let r2 = w.x * w.x + w.y * w.y;
        let s = 1.0 + r2;
        if chart == 0 {
            Vec3::new(2.0 * w.x / s, 2.0 * w.y / s, (1.0 - r2) / s)
        } else {
            Vec3::new(2.0 * w.x / s, -2.0 * w.y / s, (r2 - 1.0) / s)
        }
    }

    /// Coordinates of the same CP¹ point in the other chart.
    pub fn cp1_switch_point(w: &Vec3) -> Vec3 {
        cinv(w)
    }

    /// Pushes a chart tangent at `w` through the transition `w ↦ 1/w`.
    pub fn cp1_switch_tangent(w: &Vec3, v: &Vec3) -> Vec3 {
        let winv = cinv(w);
        -cmul(&cmul(&winv, &winv), v)
    }
}
