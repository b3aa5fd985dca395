//! Right-hand sides of the conformal geodesic flow, its Lorentz-force reduction on
//! hyper-Kähler models and the geodesic flow; trajectory integration; the flat and
//! hyperbolic closed-form solutions.
//!
//! Frame conventions: on hyper-Kähler models the level set `cⁱ = Ωⁱ(u,a)` fixes
//! the acceleration as `ā = −(c·S) ū` in the orthonormal frame, i.e.
//! `a = c×u − u⁴c`, `a⁴ = u·c`. This is the Lorentz force `a_μ = e F_μν u^ν` of a
//! particle of charge `e = |c|` in the field `F = −(c/|c|)·Ω`.

use crate::error::{Error, Result};
use crate::geometry::{sd_basis, sd_combination, ChartId, ChartPoint, Local4, MetricModel};
use crate::ode::{self, DenseOutput, Dop853Options, OdeProblem, Stats, StopReason};
use nalgebra::{Matrix3, Vector3, Vector4};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CGState {
    pub point: ChartPoint,
    pub u: Vec<f64>,
    pub a: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LorentzState {
    pub point: ChartPoint,
    pub u: Vec<f64>,
    /// Level-set constants; the charge is `|c|`.
    pub c: [f64; 3],
}

impl LorentzState {
    pub fn charge(&self) -> f64 {
        Vector3::from(self.c).norm()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateDerivative {
    pub dx: Vec<f64>,
    pub du: Vec<f64>,
    pub da: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowKind {
    Conformal,
    Lorentz,
    Geodesic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// 0 means unbounded.
    pub max_step: f64,
    pub dense_output: bool,
    pub renormalize: bool,
    /// Number of uniformly spaced output samples (including both ends).
    pub samples: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 0.0,
            dense_output: true,
            renormalize: false,
            samples: 501,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::Invalid("tolerances must be positive".into()));
        }
        if self.samples < 2 {
            return Err(Error::Invalid("at least two output samples are required".into()));
        }
        Ok(())
    }

    fn options(&self) -> Dop853Options {
        Dop853Options {
            rtol: self.rel_tol,
            atol: self.abs_tol,
            h_max: self.max_step,
            project: self.renormalize,
            keep_dense: true,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub s: f64,
    pub coords: Vec<f64>,
    pub u: Vec<f64>,
    pub a: Vec<f64>,
    pub invariants: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl Sample {
    pub fn state(&self, chart: ChartId) -> CGState {
        CGState { point: ChartPoint::new(chart, self.coords.clone()), u: self.u.clone(), a: self.a.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    ChartExit { s: f64 },
    StepUnderflow { s: f64, diagnostic: String },
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub model: MetricModel,
    pub kind: FlowKind,
    /// Level set for Lorentz trajectories.
    pub c: Option<[f64; 3]>,
    pub invariant_names: Vec<String>,
    pub residual_names: Vec<String>,
    pub samples: Vec<Sample>,
    pub stats: Stats,
    pub termination: Termination,
    dense: Option<DenseOutput>,
    dim: usize,
}

pub const RESIDUAL_NAMES: [&str; 2] = ["g(u,u)-1", "g(u,a)"];

impl Trajectory {
    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn s_end(&self) -> f64 {
        self.samples.last().map(|x| x.s).unwrap_or(0.0)
    }

    pub fn completed(&self) -> bool {
        self.termination == Termination::Completed
    }

    /// Raw flow variables `(x, u[, a])` at `s` from the dense output.
    pub fn dense_at(&self, s: f64) -> Option<Vec<f64>> {
        self.dense.as_ref()?.eval(s)
    }

    /// Full state (position, velocity, acceleration) at `s`.
    pub fn state_at(&self, s: f64) -> Option<CGState> {
        let y = self.dense_at(s)?;
        Some(self.state_from_raw(&y))
    }

    fn state_from_raw(&self, y: &[f64]) -> CGState {
        let n = self.dim;
        let point = ChartPoint::new(self.model.chart(), y[..n].to_vec());
        let u = y[n..2 * n].to_vec();
        let a = match self.kind {
            FlowKind::Conformal => y[2 * n..3 * n].to_vec(),
            FlowKind::Geodesic => vec![0.0; n],
            FlowKind::Lorentz => match (self.c, &self.model) {
                (Some(b), MetricModel::HalfPlane) => halfplane_acceleration(b[2], &y[..2], &u),
                (Some(c), _) => {
                    let l = self.model.local_unchecked(&point.as4());
                    accel4(&l, &Vector4::from_column_slice(&u), &c).as_slice().to_vec()
                }
                (None, _) => vec![0.0; n],
            },
        };
        CGState { point, u, a }
    }

    /// Append a monitored scalar evaluated at every sample.
    pub fn add_monitor<F>(&mut self, name: &str, f: F)
    where
        F: Fn(&CGState) -> f64,
    {
        let chart = self.model.chart();
        for smp in &mut self.samples {
            let st = smp.state(chart);
            smp.invariants.push(f(&st));
        }
        self.invariant_names.push(name.to_string());
    }

    pub fn invariant_index(&self, name: &str) -> Option<usize> {
        self.invariant_names.iter().position(|n| n == name)
    }

    /// Largest |I(s) − I(0)| of a monitored quantity.
    pub fn max_drift(&self, name: &str) -> Option<f64> {
        let k = self.invariant_index(name)?;
        let i0 = self.samples.first()?.invariants[k];
        Some(self.samples.iter().map(|s| (s.invariants[k] - i0).abs()).fold(0.0, f64::max))
    }

    pub fn max_residual(&self) -> f64 {
        self.samples
            .iter()
            .flat_map(|s| s.residuals.iter())
            .fold(0.0_f64, |m, r| m.max(r.abs()))
    }
}

/// Frame SD combination applied to a frame vector: `ā = −(c·S) ū`.
fn frame_accel(ub: &Vector4<f64>, c: &[f64; 3]) -> Vector4<f64> {
    -(sd_combination(c) * ub)
}

fn accel4(l: &Local4, u: &Vector4<f64>, c: &[f64; 3]) -> Vector4<f64> {
    l.from_frame(&frame_accel(&l.to_frame(u), c))
}

/// `a = c×u − u⁴c`, `a⁴ = u·c` in frame components, returned in chart components.
pub fn acceleration_from_c(model: &MetricModel, p: &ChartPoint, u: &[f64], c: &[f64; 3]) -> Result<Vec<f64>> {
    if !model.is_hyperkahler() {
        return Err(Error::Unsupported { op: "acceleration_from_c", model: model.name() });
    }
    let l = model.local(&p.as4())?;
    Ok(accel4(&l, &Vector4::from_column_slice(u), c).as_slice().to_vec())
}

/// The level-set values `cⁱ = Ωⁱ(u, a)`.
pub fn level_set_c(model: &MetricModel, st: &CGState) -> Result<[f64; 3]> {
    if !model.is_hyperkahler() {
        return Err(Error::Unsupported { op: "level_set_c", model: model.name() });
    }
    let l = model.local(&st.point.as4())?;
    Ok(level_set_c4(&l, &st.u, &st.a))
}

fn level_set_c4(l: &Local4, u: &[f64], a: &[f64]) -> [f64; 3] {
    let ub = l.to_frame(&Vector4::from_column_slice(u));
    let ab = l.to_frame(&Vector4::from_column_slice(a));
    let s = sd_basis();
    std::array::from_fn(|i| ub.dot(&(s[i] * ab)))
}

fn einstein_k(model: &MetricModel) -> f64 {
    model.einstein_constant().unwrap_or(0.0)
}

/// `(u̇, ȧ)` of the conformal flow with `L = k g`.
fn conformal_parts(l: &Local4, k: f64, u: &Vector4<f64>, a: &Vector4<f64>) -> (Vector4<f64>, Vector4<f64>) {
    let du = a - l.gamma_contract(u, u);
    let a2 = l.dot(a, a);
    let u2 = l.dot(u, u);
    let nabla_a = u * (-(a2 + k * u2)) + u * k;
    let da = nabla_a - l.gamma_contract(u, a);
    (du, da)
}

/// Chart-component derivative of `(x, u, a)` under the conformal geodesic flow.
pub fn conformal_rhs(model: &MetricModel, st: &CGState) -> Result<StateDerivative> {
    if model.dim() != 4 {
        return Err(Error::Unsupported { op: "conformal_rhs (n = 2 runs as a magnetic flow)", model: model.name() });
    }
    let l = model.local(&st.point.as4())?;
    let u = Vector4::from_column_slice(&st.u);
    let a = Vector4::from_column_slice(&st.a);
    let (du, da) = conformal_parts(&l, einstein_k(model), &u, &a);
    Ok(StateDerivative { dx: st.u.clone(), du: du.as_slice().to_vec(), da: da.as_slice().to_vec() })
}

/// Chart-component derivative of `(x, u)` under the Lorentz-force flow.
pub fn lorentz_rhs(model: &MetricModel, st: &LorentzState) -> Result<StateDerivative> {
    if !model.is_hyperkahler() {
        return Err(Error::Unsupported { op: "lorentz_rhs", model: model.name() });
    }
    let l = model.local(&st.point.as4())?;
    let u = Vector4::from_column_slice(&st.u);
    let du = accel4(&l, &u, &st.c) - l.gamma_contract(&u, &u);
    Ok(StateDerivative { dx: st.u.clone(), du: du.as_slice().to_vec(), da: vec![] })
}

/// Half-plane magnetic acceleration `a = B J(u)` with `g(v, J w) = vol(v, w)`.
pub fn halfplane_acceleration(b: f64, _x: &[f64], u: &[f64]) -> Vec<f64> {
    vec![b * u[1], -b * u[0]]
}

struct FlowProblem<'a> {
    model: &'a MetricModel,
    kind: FlowKind,
    c: [f64; 3],
    k: f64,
}

fn finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

impl OdeProblem for FlowProblem<'_> {
    fn dim(&self) -> usize {
        let n = self.model.dim();
        match self.kind {
            FlowKind::Conformal => 3 * n,
            _ => 2 * n,
        }
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        if !finite(y) {
            return Err(Error::Numeric("non-finite state".into()));
        }
        if let MetricModel::HalfPlane = self.model {
            let (x, u) = (&y[..2], &y[2..4]);
            if x[1] <= 0.0 {
                return Err(Error::Domain { model: self.model.name(), bound: "y > 0".into() });
            }
            let acc = match self.kind {
                FlowKind::Lorentz => halfplane_acceleration(self.c[2], x, u),
                _ => vec![0.0, 0.0],
            };
            let yy = x[1];
            dy[0] = u[0];
            dy[1] = u[1];
            dy[2] = acc[0] + 2.0 * u[0] * u[1] / yy;
            dy[3] = acc[1] - (u[0] * u[0] - u[1] * u[1]) / yy;
            return Ok(());
        }
        let q = [y[0], y[1], y[2], y[3]];
        let l = self.model.local_unchecked(&q);
        if !finite(l.gamma.as_flattened().as_flattened()) || !finite(l.einv.as_slice()) {
            return Err(Error::Domain { model: self.model.name(), bound: "non-finite geometry".into() });
        }
        let u = Vector4::new(y[4], y[5], y[6], y[7]);
        dy[..4].copy_from_slice(&y[4..8]);
        match self.kind {
            FlowKind::Conformal => {
                let a = Vector4::new(y[8], y[9], y[10], y[11]);
                let (du, da) = conformal_parts(&l, self.k, &u, &a);
                dy[4..8].copy_from_slice(du.as_slice());
                dy[8..12].copy_from_slice(da.as_slice());
            }
            FlowKind::Lorentz => {
                let du = accel4(&l, &u, &self.c) - l.gamma_contract(&u, &u);
                dy[4..8].copy_from_slice(du.as_slice());
            }
            FlowKind::Geodesic => {
                let du = -l.gamma_contract(&u, &u);
                dy[4..8].copy_from_slice(du.as_slice());
            }
        }
        if finite(dy) {
            Ok(())
        } else {
            Err(Error::Numeric("non-finite derivative".into()))
        }
    }

    fn inside(&self, _t: f64, y: &[f64]) -> bool {
        let n = self.model.dim();
        finite(y) && self.model.validate(&y[..n]).is_ok()
    }

    fn project(&self, y: &mut [f64]) {
        let n = self.model.dim();
        if n != 4 {
            let s = y[1];
            let norm = (y[2] * y[2] + y[3] * y[3]).sqrt() / s;
            y[2] /= norm;
            y[3] /= norm;
            return;
        }
        let q = [y[0], y[1], y[2], y[3]];
        let e = self.model.coframe_at(&q);
        let g = e.transpose() * e;
        let mut u = Vector4::new(y[4], y[5], y[6], y[7]);
        u /= (u.dot(&(g * u))).sqrt();
        y[4..8].copy_from_slice(u.as_slice());
        if self.kind == FlowKind::Conformal {
            let mut a = Vector4::new(y[8], y[9], y[10], y[11]);
            a -= u * u.dot(&(g * a));
            y[8..12].copy_from_slice(a.as_slice());
        }
    }
}

fn metric_dot(model: &MetricModel, x: &[f64], v: &[f64], w: &[f64]) -> f64 {
    if let MetricModel::HalfPlane = model {
        return (v[0] * w[0] + v[1] * w[1]) / (x[1] * x[1]);
    }
    let q = [x[0], x[1], x[2], x[3]];
    let e = model.coframe_at(&q);
    let (ev, ew) = (e * Vector4::from_column_slice(v), e * Vector4::from_column_slice(w));
    ev.dot(&ew)
}

/// Initial data of any of the three flows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "flow", rename_all = "snake_case")]
pub enum Initial {
    Conformal(CGState),
    Lorentz(LorentzState),
    Geodesic { point: ChartPoint, u: Vec<f64> },
}

impl Initial {
    pub fn kind(&self) -> FlowKind {
        match self {
            Initial::Conformal(_) => FlowKind::Conformal,
            Initial::Lorentz(_) => FlowKind::Lorentz,
            Initial::Geodesic { .. } => FlowKind::Geodesic,
        }
    }

    fn point(&self) -> &ChartPoint {
        match self {
            Initial::Conformal(s) => &s.point,
            Initial::Lorentz(s) => &s.point,
            Initial::Geodesic { point, .. } => point,
        }
    }
}

/// Constraint residuals `(g(u,u) − 1, g(u,a))` of a state.
pub fn constraint_residuals(model: &MetricModel, st: &CGState) -> [f64; 2] {
    let x = &st.point.coords;
    [metric_dot(model, x, &st.u, &st.u) - 1.0, metric_dot(model, x, &st.u, &st.a)]
}

/// Integrate any of the flows over `s ∈ [span.0, span.1]` (either direction).
pub fn integrate(model: &MetricModel, init: &Initial, span: (f64, f64), cfg: &IntegratorConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let n = model.dim();
    let kind = init.kind();
    let p = init.point();
    model.validate(&p.coords)?;
    if p.chart != model.chart() {
        return Err(Error::Invalid(format!("initial point is in chart {:?}, model uses {:?}", p.chart, model.chart())));
    }
    let (y0, c) = match init {
        Initial::Conformal(st) => {
            if n != 4 {
                return Err(Error::Unsupported { op: "conformal flow (use the magnetic formulation)", model: model.name() });
            }
            let mut y = st.point.coords.clone();
            y.extend_from_slice(&st.u);
            y.extend_from_slice(&st.a);
            (y, None)
        }
        Initial::Lorentz(st) => {
            if n == 4 && !model.is_hyperkahler() {
                return Err(Error::Unsupported { op: "lorentz flow", model: model.name() });
            }
            let mut y = st.point.coords.clone();
            y.extend_from_slice(&st.u);
            (y, Some(st.c))
        }
        Initial::Geodesic { point, u } => {
            let mut y = point.coords.clone();
            y.extend_from_slice(u);
            (y, None)
        }
    };
    let problem = FlowProblem { model, kind, c: c.unwrap_or([0.0; 3]), k: einstein_k(model) };
    if y0.len() != problem.dim() {
        return Err(Error::Invalid(format!("initial state has {} components, expected {}", y0.len(), problem.dim())));
    }
    let sol = ode::integrate(&problem, span.0, &y0, span.1, &cfg.options());
    let s_last = sol.t;
    let termination = match &sol.stop {
        StopReason::Completed => Termination::Completed,
        StopReason::Event { t } => Termination::ChartExit { s: *t },
        StopReason::StepUnderflow { t } => {
            Termination::StepUnderflow { s: *t, diagnostic: "step size underflow".into() }
        }
        StopReason::MaxSteps { t } => Termination::StepUnderflow { s: *t, diagnostic: "step budget exhausted".into() },
        StopReason::RhsFailure { t, error } => {
            Termination::StepUnderflow { s: *t, diagnostic: format!("right-hand side failed: {error}") }
        }
    };
    if let Termination::StepUnderflow { s, diagnostic } = &termination {
        log::warn!("{}: integration stopped at s = {s}: {diagnostic}", model.name());
    }

    let mut traj = Trajectory {
        model: model.clone(),
        kind,
        c,
        invariant_names: vec![],
        residual_names: RESIDUAL_NAMES.iter().map(|s| s.to_string()).collect(),
        samples: vec![],
        stats: sol.stats.clone(),
        termination,
        dense: Some(sol.dense),
        dim: n,
    };

    // Uniform output grid, truncated at the stopping point.
    let (s0, s1) = span;
    let m = cfg.samples;
    let mut grid: Vec<f64> = (0..m).map(|i| s0 + (s1 - s0) * i as f64 / (m - 1) as f64).collect();
    let dir = (s1 - s0).signum();
    grid.retain(|s| (s - s_last) * dir <= 1e-15);
    if grid.last().is_none_or(|s| (*s - s_last).abs() > 1e-15) && s_last != s0 {
        grid.push(s_last);
    }
    if grid.is_empty() {
        grid.push(s0);
    }
    for s in grid {
        let y = if s == s0 {
            y0.clone()
        } else if s == s_last {
            sol.y.clone()
        } else {
            traj.dense_at(s).unwrap_or_else(|| sol.y.clone())
        };
        let st = traj.state_from_raw(&y);
        let res = constraint_residuals(model, &st);
        traj.samples.push(Sample {
            s,
            coords: st.point.coords,
            u: st.u,
            a: st.a,
            invariants: vec![],
            residuals: res.to_vec(),
        });
    }
    let model_c = model.clone();
    traj.add_monitor("|a|^2", |st| metric_dot(&model_c, &st.point.coords, &st.a, &st.a));
    if model.is_hyperkahler() && kind != FlowKind::Geodesic {
        for i in 0..3 {
            let mc = model.clone();
            traj.add_monitor(&format!("c{}", i + 1), move |st| {
                let l = mc.local_unchecked(&st.point.as4());
                level_set_c4(&l, &st.u, &st.a)[i]
            });
        }
    }
    if !cfg.dense_output {
        traj.dense = None;
    }
    Ok(traj)
}

/// `x(s) = x0 + |a|⁻¹ v0 sin(|a|s) + |a|⁻² a0 (1 − cos(|a|s))`.
pub fn flat_circle(x0: &[f64], v0: &[f64], a0: &[f64], s: f64) -> Vec<f64> {
    let k = a0.iter().map(|x| x * x).sum::<f64>().sqrt();
    if k == 0.0 {
        return x0.iter().zip(v0).map(|(x, v)| x + s * v).collect();
    }
    let (sn, cs) = (k * s).sin_cos();
    (0..x0.len()).map(|i| x0[i] + v0[i] * sn / k + a0[i] * (1.0 - cs) / (k * k)).collect()
}

/// Velocity and acceleration of [`flat_circle`].
pub fn flat_circle_state(x0: &[f64], v0: &[f64], a0: &[f64], s: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let k = a0.iter().map(|x| x * x).sum::<f64>().sqrt();
    let x = flat_circle(x0, v0, a0, s);
    if k == 0.0 {
        return (x, v0.to_vec(), vec![0.0; v0.len()]);
    }
    let (sn, cs) = (k * s).sin_cos();
    let u = (0..x0.len()).map(|i| v0[i] * cs + a0[i] * sn / k).collect();
    let a = (0..x0.len()).map(|i| -v0[i] * k * sn + a0[i] * cs).collect();
    (x, u, a)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum HalfPlaneRegime {
    OpenUnbounded,
    Horocircle,
    Closed { radius: f64, q: f64 },
}

/// Qualitative behaviour of magnetic orbits on the hyperbolic half-plane.
pub fn halfplane_classify(b: f64) -> Result<HalfPlaneRegime> {
    if !(b > 0.0) {
        return Err(Error::Domain { model: "HalfPlane".into(), bound: format!("B > 0 violated (B = {b})") });
    }
    Ok(if (b - 1.0).abs() <= 1e-12 {
        HalfPlaneRegime::Horocircle
    } else if b < 1.0 {
        HalfPlaneRegime::OpenUnbounded
    } else {
        HalfPlaneRegime::Closed { radius: 1.0 / b, q: b * b }
    })
}

/// Unit-speed initial data at `(x, y)` with Euclidean heading `angle`.
pub fn halfplane_initial(b: f64, x: f64, y: f64, angle: f64) -> Initial {
    Initial::Lorentz(LorentzState {
        point: ChartPoint::new(ChartId::HalfPlane, vec![x, y]),
        u: vec![y * angle.cos(), y * angle.sin()],
        c: [0.0, 0.0, b],
    })
}

/// Euclidean circle fitted to an orbit, and the derived hyperbolic data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfPlaneOrbit {
    pub b: f64,
    pub center: (f64, f64),
    pub euclidean_radius: f64,
    /// Euclidean radius over the height of the centre; the orbit is a curve of
    /// constant geodesic curvature `center_y/euclidean_radius`, so this equals `1/B`.
    pub radius_ratio: f64,
    pub fit_residual: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub regime: HalfPlaneRegime,
    /// `F(a,u)` with `F = B vol`, averaged over the samples (equals `B²`).
    pub q_mean: f64,
    /// Distance from the start after one hyperbolic circumference (closed orbits).
    pub closure_error: Option<f64>,
}

/// Least-squares circle `x² + y² + Dx + Ey + F = 0` through the points.
pub fn fit_circle(pts: &[(f64, f64)]) -> Result<((f64, f64), f64, f64)> {
    let mut m = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for &(x, y) in pts {
        let row = Vector3::new(x, y, 1.0);
        m += row * row.transpose();
        rhs += row * (-(x * x + y * y));
    }
    let sol = m.lu().solve(&rhs).ok_or_else(|| Error::Numeric("degenerate circle fit".into()))?;
    let (cx, cy) = (-sol[0] / 2.0, -sol[1] / 2.0);
    let r = (cx * cx + cy * cy - sol[2]).sqrt();
    let res = pts.iter().map(|&(x, y)| (((x - cx).powi(2) + (y - cy).powi(2)).sqrt() - r).abs()).fold(0.0, f64::max);
    Ok(((cx, cy), r, res))
}

/// Regime of a fitted orbit from its radius ratio (Euclidean radius over centre height).
pub fn regime_from_ratio(ratio: f64, q: f64) -> HalfPlaneRegime {
    if (ratio - 1.0).abs() <= 1e-6 {
        HalfPlaneRegime::Horocircle
    } else if ratio > 1.0 {
        HalfPlaneRegime::OpenUnbounded
    } else {
        HalfPlaneRegime::Closed { radius: ratio, q }
    }
}

/// Integrate a half-plane magnetic orbit from (0, 1) heading along +x and measure it.
pub fn halfplane_orbit(b: f64, span: f64, cfg: &IntegratorConfig) -> Result<HalfPlaneOrbit> {
    let regime_expected = halfplane_classify(b)?;
    let traj = integrate(&MetricModel::HalfPlane, &halfplane_initial(b, 0.0, 1.0, 0.0), (0.0, span), cfg)?;
    // Fit on the part of the orbit that is not squashed against the boundary.
    let pts: Vec<(f64, f64)> =
        traj.samples.iter().filter(|s| s.coords[1] > 1e-3).map(|s| (s.coords[0], s.coords[1])).collect();
    let (center, r, fit_residual) = fit_circle(&pts)?;
    let ratio = r / center.1;
    let y_min = traj.samples.iter().map(|s| s.coords[1]).fold(f64::INFINITY, f64::min);
    let y_max = traj.samples.iter().map(|s| s.coords[1]).fold(f64::NEG_INFINITY, f64::max);
    let q_mean = traj
        .samples
        .iter()
        .map(|s| {
            let y2 = s.coords[1] * s.coords[1];
            b * (s.a[0] * s.u[1] - s.a[1] * s.u[0]) / y2
        })
        .sum::<f64>()
        / traj.samples.len() as f64;
    let regime = regime_from_ratio(ratio, q_mean);
    let closure_error = match regime_expected {
        HalfPlaneRegime::Closed { .. } => {
            let period = 2.0 * std::f64::consts::PI / (b * b - 1.0).sqrt();
            if period <= span {
                traj.state_at(period).map(|st| (st.point.coords[0]).hypot(st.point.coords[1] - 1.0))
            } else {
                None
            }
        }
        _ => None,
    };
    Ok(HalfPlaneOrbit {
        b,
        center,
        euclidean_radius: r,
        radius_ratio: ratio,
        fit_residual,
        y_min,
        y_max,
        regime,
        q_mean,
        closure_error,
    })
}
