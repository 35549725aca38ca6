//! Unit space forms: the time-independent metric `g_0` of every model.
//!
//! Sphere and hyperbolic points are stored in embedding coordinates on the
//! unit sphere / unit hyperboloid; a model with sectional curvature `k` has
//! radius `ρ = 1/√|k|`, so `g_0` distances are `ρ` times the unit-model
//! angle. Tangent vectors carry *physical* `g_0` components: their Euclidean
//! (resp. Lorentzian) norm is their `g_0` length.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::OnceLock;

use super::coords::{Coords, MAX_AMBIENT};
use crate::error::{FlowError, Result};
use crate::quadrature;

/// Tolerance on the model's defining constraint.
pub const CONSTRAINT_TOL: f64 = 1e-12;
/// Sphere pairs closer than this to antipodal (in unit-angle) have no unique
/// minimizing geodesic.
pub const ANTIPODAL_GUARD: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Model {
    Euclidean {
        dim: usize,
    },
    /// Round sphere with initial sectional curvature `curvature > 0`.
    Sphere {
        dim: usize,
        curvature: f64,
    },
    /// Hyperbolic space with initial sectional curvature `curvature < 0`.
    Hyperbolic {
        dim: usize,
        curvature: f64,
    },
    /// Flat torus `R^n / (L_1 Z × … × L_n Z)`.
    FlatTorus {
        periods: Vec<f64>,
    },
}

/// A point on a model, in embedding (sphere, hyperbolic) or flat
/// (euclidean, torus) coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Coords);

impl Point {
    pub fn coords(&self) -> &Coords {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }
}

/// A tangent vector in physical `g_0` components.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    pub base: Point,
    pub components: Coords,
}

impl Model {
    pub fn euclidean(dim: usize) -> Self {
        Model::Euclidean { dim }
    }

    pub fn sphere(dim: usize, curvature: f64) -> Self {
        Model::Sphere { dim, curvature }
    }

    pub fn hyperbolic(dim: usize, curvature: f64) -> Self {
        Model::Hyperbolic { dim, curvature }
    }

    pub fn flat_torus(periods: Vec<f64>) -> Self {
        Model::FlatTorus { periods }
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        if dim == 0 {
            return Err(FlowError::invalid("dimension must be at least 1"));
        }
        if self.ambient_dim() > MAX_AMBIENT {
            return Err(FlowError::invalid(format!(
                "ambient dimension {} exceeds {MAX_AMBIENT}",
                self.ambient_dim()
            )));
        }
        match self {
            Model::Sphere { curvature, .. } if !(*curvature > 0.0 && curvature.is_finite()) => Err(
                FlowError::invalid("sphere curvature must be positive and finite"),
            ),
            Model::Hyperbolic { curvature, .. } if !(*curvature < 0.0 && curvature.is_finite()) => {
                Err(FlowError::invalid(
                    "hyperbolic curvature must be negative and finite",
                ))
            }
            Model::FlatTorus { periods }
                if periods.iter().any(|l| !(*l > 0.0 && l.is_finite())) =>
            {
                Err(FlowError::invalid("torus periods must be positive"))
            }
            Model::FlatTorus { periods } if periods.len() > 3 => Err(FlowError::invalid(
                "flat tori of dimension above 3 are not supported",
            )),
            _ => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Model::Euclidean { dim }
            | Model::Sphere { dim, .. }
            | Model::Hyperbolic { dim, .. } => *dim,
            Model::FlatTorus { periods } => periods.len(),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            Model::Sphere { dim, .. } | Model::Hyperbolic { dim, .. } => dim + 1,
            _ => self.dim(),
        }
    }

    /// Sectional curvature of `g_0`.
    pub fn curvature(&self) -> f64 {
        match self {
            Model::Sphere { curvature, .. } | Model::Hyperbolic { curvature, .. } => *curvature,
            _ => 0.0,
        }
    }

    /// Curvature radius `1/√|k|` (1 for flat models, where it is unused).
    pub fn radius(&self) -> f64 {
        match self {
            Model::Sphere { curvature, .. } | Model::Hyperbolic { curvature, .. } => {
                1.0 / curvature.abs().sqrt()
            }
            _ => 1.0,
        }
    }

    pub fn is_compact(&self) -> bool {
        matches!(self, Model::Sphere { .. } | Model::FlatTorus { .. })
    }

    pub fn label(&self) -> String {
        match self {
            Model::Euclidean { dim } => format!("euclidean({dim})"),
            Model::Sphere { dim, curvature } => format!("sphere({dim},{curvature})"),
            Model::Hyperbolic { dim, curvature } => format!("hyperbolic({dim},{curvature})"),
            Model::FlatTorus { periods } => format!("flat_torus({periods:?})"),
        }
    }

    /// Base point: the origin, or the "north pole" `e_0` of the curved models.
    pub fn origin(&self) -> Point {
        Point(match self {
            Model::Sphere { .. } | Model::Hyperbolic { .. } => Coords::basis(self.ambient_dim(), 0),
            _ => Coords::zeros(self.dim()),
        })
    }

    /// Builds a point from raw coordinates, projecting onto the model after
    /// checking it is within `1e-6` of the constraint surface.
    pub fn point(&self, coords: &[f64]) -> Result<Point> {
        if coords.len() != self.ambient_dim() {
            return Err(FlowError::invalid(format!(
                "{} expects {} coordinates, got {}",
                self.label(),
                self.ambient_dim(),
                coords.len()
            )));
        }
        let mut c = Coords::from_slice(coords);
        if !c.is_finite() {
            return Err(FlowError::invalid("point has non-finite coordinates"));
        }
        let residual = self.residual_coords(&c);
        if residual > 1e-6 {
            return Err(FlowError::invalid(format!(
                "point {coords:?} violates the {} constraint by {residual:e}",
                self.label()
            )));
        }
        self.project_coords(&mut c);
        Ok(Point(c))
    }

    /// Point at `g_0`-distance `d0` from the origin along the first tangent axis.
    pub fn point_at_distance(&self, d0: f64) -> Point {
        let o = self.origin();
        let frame = self.tangent_frame(&o);
        self.exp(&o, &frame[0].scale(d0))
    }

    /// Point reached from `x` by the `g_0`-tangent displacement `(a, b)` in the
    /// first two frame directions (only `a` is used on 1-d models).
    pub fn offset(&self, x: &Point, a: f64, b: f64) -> Point {
        let frame = self.tangent_frame(x);
        let mut v = frame[0].scale(a);
        if frame.len() > 1 {
            v = v.axpy(b, &frame[1]);
        }
        self.exp(x, &v)
    }

    /// Violation of the defining constraint.
    pub fn residual(&self, p: &Point) -> f64 {
        self.residual_coords(&p.0)
    }

    fn residual_coords(&self, c: &Coords) -> f64 {
        match self {
            Model::Sphere { .. } => (c.dot(c) - 1.0).abs(),
            Model::Hyperbolic { .. } => {
                let l = lorentz(c, c);
                let wrong_sheet = if c[0] <= 0.0 { 1.0 } else { 0.0 };
                (l + 1.0).abs() / (1.0 + c.dot(c)) + wrong_sheet
            }
            _ => 0.0,
        }
    }

    fn project_coords(&self, c: &mut Coords) {
        match self {
            Model::Sphere { .. } => {
                let n = c.norm();
                *c = c.scale(1.0 / n);
            }
            Model::Hyperbolic { .. } => {
                let l = -lorentz(c, c);
                *c = c.scale(1.0 / l.sqrt());
            }
            Model::FlatTorus { periods } => {
                for (v, l) in c.as_mut_slice().iter_mut().zip(periods) {
                    *v = v.rem_euclid(*l);
                    if *v >= *l {
                        *v = 0.0;
                    }
                }
            }
            Model::Euclidean { .. } => {}
        }
    }

    /// `g_0` inner product of two tangent vectors at the same base point.
    #[inline]
    pub fn inner(&self, u: &Coords, v: &Coords) -> f64 {
        match self {
            Model::Hyperbolic { .. } => lorentz(u, v),
            _ => u.dot(v),
        }
    }

    #[inline]
    pub fn norm(&self, u: &Coords) -> f64 {
        self.inner(u, u).max(0.0).sqrt()
    }

    /// Orthogonal projection of an ambient vector onto `T_x M`.
    #[inline]
    pub fn project_tangent(&self, x: &Point, v: &Coords) -> Coords {
        match self {
            Model::Sphere { .. } => v.axpy(-x.0.dot(v), &x.0),
            Model::Hyperbolic { .. } => v.axpy(lorentz(&x.0, v), &x.0),
            _ => *v,
        }
    }

    /// A `g_0`-orthonormal basis of `T_x M`.
    pub fn tangent_frame(&self, x: &Point) -> Vec<Coords> {
        let n = self.dim();
        let amb = self.ambient_dim();
        let mut frame: Vec<Coords> = Vec::with_capacity(n);
        // Axes are tried in order of least overlap with x so the first n
        // projected candidates are well conditioned.
        let mut axes: Vec<usize> = (0..amb).collect();
        axes.sort_by(|&a, &b| x.0[a].abs().total_cmp(&x.0[b].abs()).then(a.cmp(&b)));
        if matches!(self, Model::Euclidean { .. } | Model::FlatTorus { .. }) {
            axes.sort();
        }
        for axis in axes {
            if frame.len() == n {
                break;
            }
            let mut v = self.project_tangent(x, &Coords::basis(amb, axis));
            for e in &frame {
                v = v.axpy(-self.inner(e, &v), e);
            }
            let len = self.norm(&v);
            if len > 1e-8 {
                frame.push(v.scale(1.0 / len));
            }
        }
        debug_assert_eq!(frame.len(), n);
        frame
    }

    /// `g_0` geodesic distance.
    pub fn distance(&self, x: &Point, y: &Point) -> f64 {
        match self {
            Model::Euclidean { .. } => (y.0 - x.0).norm(),
            Model::FlatTorus { periods } => {
                let mut s = 0.0;
                for (i, l) in periods.iter().enumerate() {
                    let d = min_image(y.0[i] - x.0[i], *l);
                    s += d * d;
                }
                s.sqrt()
            }
            Model::Sphere { .. } => self.radius() * sphere_angle(&x.0, &y.0),
            Model::Hyperbolic { .. } => {
                let diff = y.0 - x.0;
                let delta = 0.5 * lorentz(&diff, &diff).max(0.0);
                self.radius() * (delta + (delta * (2.0 + delta)).sqrt()).ln_1p()
            }
        }
    }

    /// Exponential map of `g_0`.
    pub fn exp(&self, x: &Point, v: &Coords) -> Point {
        self.exp_transport(x, v, &mut [])
    }

    /// Exponential map of `g_0`, parallel transporting `vectors` (tangent at
    /// `x`) along the geodesic to the endpoint.
    pub fn exp_transport(&self, x: &Point, v: &Coords, vectors: &mut [Coords]) -> Point {
        match self {
            Model::Euclidean { .. } => Point(x.0 + *v),
            Model::FlatTorus { .. } => {
                let mut c = x.0 + *v;
                self.project_coords(&mut c);
                Point(c)
            }
            Model::Sphere { .. } | Model::Hyperbolic { .. } => {
                let len = self.norm(v);
                if len == 0.0 {
                    return *x;
                }
                let theta = len / self.radius();
                let u = v.scale(1.0 / len);
                let spherical = matches!(self, Model::Sphere { .. });
                let (ca, sa) = if spherical {
                    (theta.cos(), theta.sin())
                } else {
                    (theta.cosh(), theta.sinh())
                };
                let mut y = x.0.scale(ca).axpy(sa, &u);
                self.project_coords(&mut y);
                let y = Point(y);
                for w in vectors.iter_mut() {
                    let a = self.inner(w, &u);
                    // Component along the geodesic rotates (boosts) with it,
                    // the orthogonal complement is unchanged.
                    let xs = if spherical { -sa } else { sa };
                    let moved = w.axpy(a * (ca - 1.0), &u).axpy(a * xs, &x.0);
                    *w = self.project_tangent(&y, &moved);
                }
                y
            }
        }
    }

    /// Inverse exponential map: the initial `g_0` velocity of the minimizing
    /// unit-time geodesic from `x` to `y`.
    pub fn log(&self, x: &Point, y: &Point) -> Result<Coords> {
        match self {
            Model::Euclidean { .. } => Ok(y.0 - x.0),
            Model::FlatTorus { periods } => {
                let mut d = Coords::zeros(periods.len());
                for (i, l) in periods.iter().enumerate() {
                    let raw = (y.0[i] - x.0[i]).rem_euclid(*l);
                    if ((raw - 0.5 * l).abs()) < 1e-12 * l {
                        return Err(FlowError::AntipodalDegeneracy);
                    }
                    d[i] = min_image(y.0[i] - x.0[i], *l);
                }
                Ok(d)
            }
            Model::Sphere { .. } => {
                let theta = sphere_angle(&x.0, &y.0);
                if theta > PI - ANTIPODAL_GUARD {
                    return Err(FlowError::AntipodalDegeneracy);
                }
                let w = y.0.axpy(-x.0.dot(&y.0), &x.0);
                let wn = w.norm();
                if wn == 0.0 {
                    return Ok(Coords::zeros(x.0.len()));
                }
                Ok(w.scale(self.radius() * theta / wn))
            }
            Model::Hyperbolic { .. } => {
                let d = self.distance(x, y);
                let w = y.0.axpy(lorentz(&x.0, &y.0), &x.0);
                let wn = self.norm(&w);
                if wn == 0.0 || d == 0.0 {
                    return Ok(Coords::zeros(x.0.len()));
                }
                Ok(w.scale(d / wn))
            }
        }
    }

    /// Area of the unit `(n-1)`-sphere `S^{n-1} ⊂ R^n`.
    pub fn unit_sphere_area(n: usize) -> f64 {
        2.0 * PI.powf(n as f64 / 2.0) / gamma_half(n)
    }

    /// `g_0` area of the geodesic sphere of radius `r` (the radial Jacobian).
    pub fn sphere_area(&self, r: f64) -> f64 {
        let n = self.dim();
        let s = Self::unit_sphere_area(n);
        let rho = self.radius();
        let radial = match self {
            Model::Euclidean { .. } | Model::FlatTorus { .. } => r,
            Model::Sphere { .. } => rho * (r / rho).sin(),
            Model::Hyperbolic { .. } => rho * (r / rho).sinh(),
        };
        s * radial.powi(n as i32 - 1)
    }

    /// Total `g_0` volume, if finite.
    pub fn total_volume(&self) -> Option<f64> {
        match self {
            Model::Sphere { dim, .. } => {
                Some(Self::unit_sphere_area(dim + 1) * self.radius().powi(*dim as i32))
            }
            Model::FlatTorus { periods } => Some(periods.iter().product()),
            _ => None,
        }
    }

    /// Largest radius below which geodesic spheres are embedded.
    pub fn injectivity_radius(&self) -> f64 {
        match self {
            Model::Sphere { .. } => PI * self.radius(),
            Model::FlatTorus { periods } => {
                0.5 * periods.iter().cloned().fold(f64::INFINITY, f64::min)
            }
            _ => f64::INFINITY,
        }
    }

    /// `g_0` volume of a geodesic ball of radius `r` (capped at the total
    /// volume on compact models).
    pub fn ball_volume(&self, r: f64) -> f64 {
        let r = r.max(0.0);
        let n = self.dim();
        match self {
            Model::Euclidean { .. } => Self::unit_sphere_area(n) / n as f64 * r.powi(n as i32),
            Model::Sphere { .. } => {
                let rho = self.radius();
                let theta = (r / rho).min(PI);
                Self::unit_sphere_area(n) * rho.powi(n as i32) * sin_power_integral(n - 1, theta)
            }
            Model::Hyperbolic { .. } => {
                let rho = self.radius();
                Self::unit_sphere_area(n) * rho.powi(n as i32) * sinh_power_integral(n - 1, r / rho)
            }
            Model::FlatTorus { periods } => torus_ball_volume(periods, r),
        }
    }
}

#[inline]
pub(crate) fn lorentz(u: &Coords, v: &Coords) -> f64 {
    let s = u.as_slice();
    let t = v.as_slice();
    let mut acc = -s[0] * t[0];
    for i in 1..s.len() {
        acc += s[i] * t[i];
    }
    acc
}

/// Angle between two unit vectors, accurate near 0 and near π.
#[inline]
fn sphere_angle(x: &Coords, y: &Coords) -> f64 {
    let diff = (*y - *x).norm();
    let sum = (*y + *x).norm();
    2.0 * diff.atan2(sum)
}

#[inline]
fn min_image(d: f64, period: f64) -> f64 {
    d - period * (d / period).round()
}

/// `Γ(n/2)` for a positive integer `n`.
fn gamma_half(n: usize) -> f64 {
    let (mut g, mut k) = if n % 2 == 0 { (1.0, 2) } else { (PI.sqrt(), 1) };
    // Γ(k/2 + 1) = (k/2) Γ(k/2)
    while k < n {
        g *= k as f64 / 2.0;
        k += 2;
    }
    g
}

/// Below this angle the power-integral recursions lose digits to
/// cancellation, so the integrals are done by quadrature instead.
const SMALL_ANGLE: f64 = 0.5;

fn small_angle_rule() -> &'static quadrature::GaussLegendre {
    static RULE: OnceLock<quadrature::GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| quadrature::GaussLegendre::new(24))
}

/// `∫_0^θ sin^m(s) ds`.
fn sin_power_integral(m: usize, theta: f64) -> f64 {
    match m {
        0 => theta,
        1 => 2.0 * (0.5 * theta).sin().powi(2),
        _ if theta < SMALL_ANGLE => {
            small_angle_rule().integrate(|s| s.sin().powi(m as i32), 0.0, theta)
        }
        _ => {
            let mf = m as f64;
            -theta.sin().powi(m as i32 - 1) * theta.cos() / mf
                + (mf - 1.0) / mf * sin_power_integral(m - 2, theta)
        }
    }
}

/// `∫_0^θ sinh^m(s) ds`.
fn sinh_power_integral(m: usize, theta: f64) -> f64 {
    match m {
        0 => theta,
        1 => 2.0 * (0.5 * theta).sinh().powi(2),
        _ if theta < SMALL_ANGLE => {
            small_angle_rule().integrate(|s| s.sinh().powi(m as i32), 0.0, theta)
        }
        _ => {
            let mf = m as f64;
            theta.sinh().powi(m as i32 - 1) * theta.cosh() / mf
                - (mf - 1.0) / mf * sinh_power_integral(m - 2, theta)
        }
    }
}

/// Area of `{|z| < r} ∩ [-a, a] × [-b, b]`.
fn disc_box_area(r: f64, a: f64, b: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let upper = a.min(r);
    let kink = (r * r - b * b).max(0.0).sqrt().min(upper);
    let circ = |x: f64| {
        0.5 * (x * (r * r - x * x).max(0.0).sqrt() + r * r * (x / r).clamp(-1.0, 1.0).asin())
    };
    4.0 * (b * kink + circ(upper) - circ(kink))
}

/// Ball volume in a flat torus: the minimal-image ball is the Euclidean ball
/// clipped to the centered fundamental box.
fn torus_ball_volume(periods: &[f64], r: f64) -> f64 {
    let half: Vec<f64> = periods.iter().map(|l| 0.5 * l).collect();
    match periods.len() {
        1 => (2.0 * r).min(periods[0]),
        2 => disc_box_area(r, half[0], half[1]),
        3 => {
            let upper = half[0].min(r);
            let slice = |x: f64| disc_box_area((r * r - x * x).max(0.0).sqrt(), half[1], half[2]);
            2.0 * quadrature::adaptive(slice, 0.0, upper, 1e-13)
        }
        _ => unreachable!("validated: torus dimension at most 3"),
    }
}
