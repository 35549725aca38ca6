//! Conformal geometric flows `g(t) = c(t) g_0` on space forms.
//!
//! Under the Ricci flow `∂_t g = -Ric` (paired with the generator `½Δ`),
//! a space form of curvature `k` scales linearly:
//! `c(t) = 1 - (n-1) k t`. Distances, volumes and the
//! Ricci and `α = ∂_t g` tensors follow from `c` in closed form.

use super::coords::Coords;
use super::model::{Model, Point, TangentVector};
use crate::error::{FlowError, Result};
use crate::quadrature;
use serde::{Deserialize, Serialize};

/// Operations reject `t ≥ T_c - CRITICAL_GUARD`.
pub const CRITICAL_GUARD: f64 = 1e-9;
/// Step of the 4th-order integrator used for custom conformal flows.
pub const CUSTOM_STEP: f64 = 1e-4;

/// Logarithmic rate `ċ/c` of a custom conformal flow.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RateFunction {
    /// `Σ_i a_i t^i`.
    Polynomial { coefficients: Vec<f64> },
    /// Linear interpolation of samples, held constant outside the range.
    PiecewiseLinear { times: Vec<f64>, values: Vec<f64> },
}

impl RateFunction {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            RateFunction::Polynomial { coefficients } => {
                coefficients.iter().rev().fold(0.0, |acc, a| acc * t + a)
            }
            RateFunction::PiecewiseLinear { times, values } => {
                if t <= times[0] {
                    return values[0];
                }
                let last = times.len() - 1;
                if t >= times[last] {
                    return values[last];
                }
                let i = times.partition_point(|&s| s <= t) - 1;
                let w = (t - times[i]) / (times[i + 1] - times[i]);
                values[i] * (1.0 - w) + values[i + 1] * w
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            RateFunction::Polynomial { coefficients }
                if coefficients.iter().any(|c| !c.is_finite()) =>
            {
                Err(FlowError::invalid(
                    "rate polynomial has non-finite coefficients",
                ))
            }
            RateFunction::PiecewiseLinear { times, values } => {
                if times.is_empty() || times.len() != values.len() {
                    return Err(FlowError::invalid(
                        "piecewise-linear rate needs matching, non-empty times and values",
                    ));
                }
                if times.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(FlowError::invalid("rate sample times must be increasing"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FlowLaw {
    Static,
    Ricci,
    CustomConformal { rate: RateFunction },
}

/// A space form together with a conformal flow law and a time horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSpec {
    pub model: Model,
    pub law: FlowLaw,
    pub horizon: f64,
}

impl FlowSpec {
    pub fn new(model: Model, law: FlowLaw, horizon: f64) -> Result<Self> {
        let flow = FlowSpec {
            model,
            law,
            horizon,
        };
        flow.validate()?;
        Ok(flow)
    }

    pub fn static_flow(model: Model, horizon: f64) -> Result<Self> {
        Self::new(model, FlowLaw::Static, horizon)
    }

    pub fn ricci(model: Model, horizon: f64) -> Result<Self> {
        Self::new(model, FlowLaw::Ricci, horizon)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if let FlowLaw::CustomConformal { rate } = &self.law {
            rate.validate()?;
        }
        if !(self.horizon >= 0.0) {
            return Err(FlowError::invalid("horizon must be non-negative"));
        }
        self.check_time(self.horizon)?;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn label(&self) -> String {
        let law = match &self.law {
            FlowLaw::Static => "static",
            FlowLaw::Ricci => "ricci",
            FlowLaw::CustomConformal { .. } => "custom",
        };
        format!("{} {law}", self.model.label())
    }

    /// `(n-1) k`: the Ricci eigenvalue of `g_0`.
    fn ricci0(&self) -> f64 {
        (self.dim() as f64 - 1.0) * self.model.curvature()
    }

    /// Maximal existence time `T_c` of the flow.
    pub fn critical_time(&self) -> f64 {
        match self.law {
            FlowLaw::Ricci if self.ricci0() > 0.0 => 1.0 / self.ricci0(),
            _ => f64::INFINITY,
        }
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(FlowError::invalid(format!(
                "time {t} must be finite and non-negative"
            )));
        }
        let critical = self.critical_time();
        if t >= critical - CRITICAL_GUARD {
            return Err(FlowError::HorizonExceeded { t, critical });
        }
        Ok(())
    }

    /// `∫_0^t ċ/c`, i.e. `ln c(t)`, for custom flows (Simpson = RK4 on a
    /// right-hand side independent of the state).
    fn custom_log_scale(rate: &RateFunction, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        let steps = (t / CUSTOM_STEP).ceil().max(1.0) as usize;
        let h = t / steps as f64;
        let mut acc = 0.0;
        for i in 0..steps {
            let a = i as f64 * h;
            acc += h / 6.0 * (rate.eval(a) + 4.0 * rate.eval(a + 0.5 * h) + rate.eval(a + h));
        }
        acc
    }

    /// Conformal factor `c(t)` with `g(t) = c(t) g_0`.
    pub fn scale_factor(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.scale_unchecked(t))
    }

    pub(crate) fn scale_unchecked(&self, t: f64) -> f64 {
        match &self.law {
            FlowLaw::Static => 1.0,
            FlowLaw::Ricci => 1.0 - self.ricci0() * t,
            FlowLaw::CustomConformal { rate } => Self::custom_log_scale(rate, t).exp(),
        }
    }

    /// `ċ/c`: `α(t) = (ċ/c) g(t)`.
    pub(crate) fn log_rate_unchecked(&self, t: f64) -> f64 {
        match &self.law {
            FlowLaw::Static => 0.0,
            FlowLaw::Ricci => -self.ricci0() / self.scale_unchecked(t),
            FlowLaw::CustomConformal { rate } => rate.eval(t),
        }
    }

    pub fn log_rate(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.log_rate_unchecked(t))
    }

    /// `ċ(t)`.
    pub fn scale_rate(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.log_rate_unchecked(t) * self.scale_unchecked(t))
    }

    /// Ricci eigenvalue: `Ric_{g(t)} = ricci_eigenvalue(t) · g(t)`.
    pub fn ricci_eigenvalue(&self, t: f64) -> Result<f64> {
        Ok(self.ricci0() / self.scale_factor(t)?)
    }

    /// Scalar curvature `R(t) = n(n-1)k / c(t)`, spatially constant.
    pub fn scalar_curvature(&self, t: f64) -> Result<f64> {
        Ok(self.dim() as f64 * self.ricci0() / self.scale_factor(t)?)
    }

    /// `½ trace_{g(t)} α(t) = (n/2) ċ/c`, spatially constant so it is both
    /// the upper bound `τ` and the lower bound `τ̲`.
    pub fn half_trace_alpha(&self, t: f64) -> Result<f64> {
        Ok(0.5 * self.dim() as f64 * self.log_rate(t)?)
    }

    /// `∫_a^b du / c(u)`: the `g_0` clock of a `g(u)`-Brownian motion.
    pub fn clock(&self, a: f64, b: f64) -> Result<f64> {
        self.check_time(a)?;
        self.check_time(b)?;
        Ok(match &self.law {
            FlowLaw::Static => b - a,
            FlowLaw::Ricci => {
                let r = self.ricci0();
                if r == 0.0 {
                    b - a
                } else {
                    // c(u) = 1 - r u
                    -(self.scale_unchecked(b) / self.scale_unchecked(a)).ln() / r
                }
            }
            FlowLaw::CustomConformal { .. } => {
                quadrature::adaptive(|u| 1.0 / self.scale_unchecked(u), a, b, 1e-12)
            }
        })
    }

    /// `∫_0^t τ(s) ds = (n/2) ln(c(t)/c(0))`.
    pub fn tau_integral(&self, a: f64, b: f64) -> Result<f64> {
        let ca = self.scale_factor(a)?;
        let cb = self.scale_factor(b)?;
        Ok(0.5 * self.dim() as f64 * (cb / ca).ln())
    }

    /// `∫_a^b R(s) ds` (R is spatially constant, so `sup = inf`).
    pub fn scalar_curvature_integral(&self, a: f64, b: f64) -> Result<f64> {
        Ok(self.dim() as f64 * self.ricci0() * self.clock(a, b)?)
    }

    pub fn flow_functionals(&self, t: f64) -> Result<FlowFunctionals> {
        let int_r = self.scalar_curvature_integral(0.0, t)?;
        Ok(FlowFunctionals {
            psi: (0.25 * int_r).exp(),
            lambda: int_r,
            tau_integral: self.tau_integral(0.0, t)?,
        })
    }

    /// Curvature bounds over `[t_a, t_b]`.
    pub fn curvature_bounds(&self, window: (f64, f64)) -> Result<CurvatureBounds> {
        let (ta, tb) = window;
        if tb < ta {
            return Err(FlowError::invalid("window end precedes its start"));
        }
        self.check_time(ta)?;
        self.check_time(tb)?;
        let r0 = self.ricci0();
        let (c, c_tilde) = match &self.law {
            FlowLaw::Static => (r0, r0),
            // Ric - α = 2(n-1)k/c · g, monotone in t with extremum at t_a for
            // either sign of k; Ric + α = 0.
            FlowLaw::Ricci => (2.0 * r0 / self.scale_unchecked(ta), 0.0),
            FlowLaw::CustomConformal { .. } => {
                let lower = |sign: f64| {
                    dense_minimum(ta, tb, |t| {
                        let cv = self.scale_unchecked(t);
                        (r0 + sign * self.log_rate_unchecked(t) * cv) / cv
                    })
                };
                (lower(-1.0), lower(1.0))
            }
        };
        Ok(CurvatureBounds {
            c,
            c_tilde,
            window,
            flow: self.clone(),
        })
    }

    /// `d_t(x, y) = √c(t) · d_0(x, y)`.
    pub fn distance(&self, t: f64, x: &Point, y: &Point) -> Result<f64> {
        Ok(self.scale_factor(t)?.sqrt() * self.model.distance(x, y))
    }

    /// Point `γ(u)` on the minimizing `g(t)` geodesic from `x` to `y`, with
    /// its velocity `γ̇(u)` (physical `g_0` components; `‖γ̇‖_{g(t)} = d_t`).
    pub fn geodesic_point(
        &self,
        t: f64,
        x: &Point,
        y: &Point,
        u: f64,
    ) -> Result<(Point, TangentVector)> {
        self.check_time(t)?;
        if !(0.0..=1.0).contains(&u) {
            return Err(FlowError::invalid("geodesic fraction must lie in [0, 1]"));
        }
        let v = self.model.log(x, y)?;
        let mut vel = [v];
        let p = if u == 1.0 {
            self.model.exp_transport(x, &v, &mut vel);
            *y
        } else {
            self.model.exp_transport(x, &v.scale(u), &mut vel)
        };
        Ok((
            p,
            TangentVector {
                base: p,
                components: vel[0],
            },
        ))
    }

    /// Point at `g(t)`-arc length `‖v‖_{g(t)}` along the geodesic from `x`
    /// with direction `v` (`v` in physical `g_0` components).
    pub fn exp_map(&self, t: f64, x: &Point, v: &Coords) -> Result<Point> {
        self.check_time(t)?;
        Ok(self.model.exp(x, v))
    }

    /// `g(t)` norm of a tangent vector given in `g_0` components.
    pub fn norm(&self, t: f64, v: &Coords) -> Result<f64> {
        Ok(self.scale_factor(t)?.sqrt() * self.model.norm(v))
    }

    /// `V_t(B_t(x, r)) = c^{n/2} A_0(r/√c)`.
    pub fn ball_volume(&self, t: f64, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(FlowError::invalid("radius must be non-negative"));
        }
        let c = self.scale_factor(t)?;
        Ok(c.powf(0.5 * self.dim() as f64) * self.model.ball_volume(r / c.sqrt()))
    }

    /// `μ_t = volume_ratio(t) · μ_0`.
    pub fn volume_ratio(&self, t: f64) -> Result<f64> {
        Ok(self.scale_factor(t)?.powf(0.5 * self.dim() as f64))
    }
}

/// Minimum of `f` on `[a, b]`: 4097-point grid then golden-section polish
/// around the best node.
pub(crate) fn dense_minimum<F: Fn(f64) -> f64>(a: f64, b: f64, f: F) -> f64 {
    if a == b {
        return f(a);
    }
    let n = 4096;
    let h = (b - a) / n as f64;
    let (mut best_i, mut best) = (0, f(a));
    for i in 1..=n {
        let v = f(a + i as f64 * h);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let mut lo = a + (best_i.max(1) - 1) as f64 * h;
    let mut hi = (a + (best_i + 1) as f64 * h).min(b);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if f(m1) < f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    best.min(f(0.5 * (lo + hi)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowFunctionals {
    /// `Ψ(t) = exp(¼ ∫_0^t sup R)`.
    pub psi: f64,
    /// `Λ(t) = ∫_0^t inf R`.
    pub lambda: f64,
    /// `∫_0^t τ`.
    pub tau_integral: f64,
}

/// Lower bounds `Ric - α ≥ C g` and `Ric + α ≥ C̃ g` over a time window,
/// with the trace bounds `τ`, `τ̲`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureBounds {
    pub c: f64,
    pub c_tilde: f64,
    pub window: (f64, f64),
    flow: FlowSpec,
}

impl CurvatureBounds {
    pub fn tau_sup(&self, t: f64) -> Result<f64> {
        self.flow.half_trace_alpha(t)
    }

    pub fn tau_inf(&self, t: f64) -> Result<f64> {
        self.flow.half_trace_alpha(t)
    }
}

/// `(1 - e^{-C t}) / C`, with the `C → 0` limit `t`.
pub fn decay_integral(c: f64, t: f64) -> f64 {
    let x = c * t;
    if x.abs() < 1e-8 {
        // series: t (1 - x/2 + x²/6)
        t * (1.0 - 0.5 * x + x * x / 6.0)
    } else {
        -(-x).exp_m1() / c
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn sphere_ricci() -> FlowSpec {
        FlowSpec::ricci(Model::sphere(2, 1.0), 0.9).unwrap()
    }

    /// Forward Euler on ċ = -(n-1)k, independent of the closed form.
    fn ode_scale(rate: f64, t: f64) -> f64 {
        let steps = 10_000;
        let h = t / steps as f64;
        (0..steps).fold(1.0, |c, _| c + h * rate)
    }

    #[test]
    fn scale_factor_examples() {
        let e = FlowSpec::ricci(Model::euclidean(3), 5.0).unwrap();
        assert_eq!(e.scale_factor(3.7).unwrap(), 1.0);
        let s = sphere_ricci();
        assert_abs_diff_eq!(
            s.scale_factor(0.5).unwrap(),
            ode_scale(-1.0, 0.5),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(s.scale_factor(0.5).unwrap(), 0.5, epsilon = 1e-15);
        let h = FlowSpec::ricci(Model::hyperbolic(3, -1.0), 3.0).unwrap();
        assert_abs_diff_eq!(h.scale_factor(2.0).unwrap(), 5.0, epsilon = 1e-15);
        assert!(matches!(
            s.scale_factor(1.0),
            Err(FlowError::HorizonExceeded { .. })
        ));
    }

    #[test]
    fn custom_flow_integrates_log_rate() {
        let flow = FlowSpec::new(
            Model::sphere(2, 1.0),
            FlowLaw::CustomConformal {
                rate: RateFunction::Polynomial {
                    coefficients: vec![0.3, -0.4],
                },
            },
            1.0,
        )
        .unwrap();
        // ln c = 0.3 t - 0.2 t²
        let t: f64 = 0.8;
        assert_abs_diff_eq!(
            flow.scale_factor(t).unwrap(),
            (0.3 * t - 0.2 * t * t).exp(),
            epsilon = 1e-12
        );
        let clock = flow.clock(0.0, t).unwrap();
        let brute = quadrature::GaussLegendre::new(40).integrate(
            |u| (-(0.3 * u - 0.2 * u * u)).exp(),
            0.0,
            t,
        );
        assert_abs_diff_eq!(clock, brute, epsilon = 1e-11);
    }

    #[test]
    fn distances_scale_conformally() {
        let s = sphere_ricci();
        let x = s.model.origin();
        let y = s.model.point_at_distance(PI / 2.0);
        assert_abs_diff_eq!(s.distance(0.75, &x, &y).unwrap(), PI / 4.0, epsilon = 1e-14);
        assert_eq!(s.distance(0.3, &x, &x).unwrap(), 0.0);
    }

    #[test]
    fn geodesic_midpoints() {
        let s = FlowSpec::static_flow(Model::sphere(2, 1.0), 1.0).unwrap();
        let x = s.model.point(&[1.0, 0.0, 0.0]).unwrap();
        let y = s.model.point(&[0.0, 1.0, 0.0]).unwrap();
        let (m, v) = s.geodesic_point(0.0, &x, &y, 0.5).unwrap();
        let r = 0.5f64.sqrt();
        assert_abs_diff_eq!(m.0[0], r, epsilon = 1e-15);
        assert_abs_diff_eq!(m.0[1], r, epsilon = 1e-15);
        assert_abs_diff_eq!(
            s.norm(0.0, &v.components).unwrap(),
            PI / 2.0,
            epsilon = 1e-14
        );
        let (p0, _) = s.geodesic_point(0.0, &x, &y, 0.0).unwrap();
        let (p1, _) = s.geodesic_point(0.0, &x, &y, 1.0).unwrap();
        assert_eq!(p0, x);
        assert_eq!(p1, y);

        let e = FlowSpec::static_flow(Model::euclidean(2), 1.0).unwrap();
        let a = e.model.point(&[0.0, 0.0]).unwrap();
        let b = e.model.point(&[2.0, 4.0]).unwrap();
        let (q, _) = e.geodesic_point(0.0, &a, &b, 0.25).unwrap();
        assert_eq!(q.as_slice(), &[0.5, 1.0]);
    }

    #[test]
    fn ball_volume_examples() {
        let s = sphere_ricci();
        assert_abs_diff_eq!(
            s.ball_volume(0.5, PI * 0.5f64.sqrt()).unwrap(),
            2.0 * PI,
            epsilon = 1e-13
        );
        let h = FlowSpec::static_flow(Model::hyperbolic(2, -1.0), 1.0).unwrap();
        // 2π(cosh 1 - 1)
        assert_abs_diff_eq!(
            h.ball_volume(0.0, 1.0).unwrap(),
            2.0 * PI * (1f64.cosh() - 1.0),
            epsilon = 1e-13
        );
        assert_abs_diff_eq!(h.ball_volume(0.0, 1.0).unwrap(), 3.412276, epsilon = 1e-6);
    }

    #[test]
    fn curvature_bounds_closed_form_matches_grid() {
        let s = sphere_ricci();
        let b = s.curvature_bounds((0.0, 0.5)).unwrap();
        assert_eq!(b.c_tilde, 0.0);
        let grid_c = dense_minimum(0.0, 0.5, |t| {
            let c = s.scale_unchecked(t);
            (1.0 - s.log_rate_unchecked(t) * c) / c
        });
        assert_abs_diff_eq!(b.c, grid_c, epsilon = 1e-9);
        assert_abs_diff_eq!(b.c, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.tau_sup(0.5).unwrap(), -1.0 / 0.5, epsilon = 1e-15);

        let e = FlowSpec::static_flow(Model::euclidean(2), 1.0).unwrap();
        let eb = e.curvature_bounds((0.0, 1.0)).unwrap();
        assert_eq!(
            (eb.c, eb.c_tilde, eb.tau_sup(0.3).unwrap()),
            (0.0, 0.0, 0.0)
        );

        let h = FlowSpec::ricci(Model::hyperbolic(2, -1.0), 2.0).unwrap();
        let hb = h.curvature_bounds((0.2, 1.5)).unwrap();
        let grid = dense_minimum(0.2, 1.5, |t| {
            let c = h.scale_unchecked(t);
            (-1.0 - h.log_rate_unchecked(t) * c) / c
        });
        assert_abs_diff_eq!(hb.c, grid, epsilon = 1e-9);
        assert_eq!(hb.c_tilde, 0.0);
    }

    #[test]
    fn functionals() {
        let s = sphere_ricci();
        let f = s.flow_functionals(0.5).unwrap();
        assert_abs_diff_eq!(f.psi, 2f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(f.lambda, -2.0 * 0.5f64.ln(), epsilon = 1e-14);
        // quadrature of R(s) = 2/(1-s)
        let q = quadrature::adaptive(|u| 2.0 / (1.0 - u), 0.0, 0.5, 1e-13);
        assert_abs_diff_eq!(f.lambda, q, epsilon = 1e-10);
        let st = FlowSpec::static_flow(Model::euclidean(2), 1.0).unwrap();
        let g = st.flow_functionals(0.7).unwrap();
        assert_eq!((g.psi, g.lambda), (1.0, 0.0));
    }

    #[test]
    fn decay_integral_limit() {
        assert_eq!(decay_integral(0.0, 0.7), 0.7);
        assert_abs_diff_eq!(
            decay_integral(1.0, 1.0),
            1.0 - (-1f64).exp(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(decay_integral(1e-10, 2.0), 2.0, epsilon = 1e-9);
    }
}
