//! Model geometries: charts, orthonormal coframes, metric, Christoffel symbols,
//! Schouten tensor and the hyper-Kähler triple.
//!
//! Every four-dimensional model is specified by a single coframe `e^a_μ(q)`
//! written generically over a dual-number type. The metric is `g = Σ (e^a)^2`,
//! and its first derivatives (hence the Christoffel symbols) are obtained
//! exactly by forward-mode differentiation of the closed-form coframe. Finite
//! difference versions live in [`crate::fd`] and are used as test oracles only.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, Matrix4, Vector4};
use num_dual::{Dual64, DualNum};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Smallest admissible radius on polar-type charts. The nut of Taub–NUT and the
/// origin of the CP² chart are removable singularities that we simply exclude.
pub const R_MIN: f64 = 1e-6;
/// Distance kept from the poles θ = 0, π.
pub const THETA_EPS: f64 = 1e-8;
/// Minimal cylindrical radius for the Cartesian Gibbons–Hawking chart
/// (the connection ω has its Dirac strings on the axis).
pub const RHO_MIN: f64 = 1e-8;

pub type Gamma4 = [[[f64; 4]; 4]; 4];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartId {
    /// (x¹, x², x³, x⁴)
    Cartesian,
    /// (x, y), y > 0
    HalfPlane,
    /// (r, θ, φ, ψ) with Euler angles on the SU(2) orbits
    Polar,
    /// (x, y, z, τ) of the Gibbons–Hawking ansatz
    GibbonsHawking,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub chart: ChartId,
    pub coords: Vec<f64>,
}

impl ChartPoint {
    pub fn new(chart: ChartId, coords: Vec<f64>) -> Self {
        ChartPoint { chart, coords }
    }

    pub fn dimension(&self) -> usize {
        self.coords.len()
    }

    /// Coordinates of a four-dimensional point as a fixed array.
    pub fn as4(&self) -> [f64; 4] {
        let mut q = [0.0; 4];
        q.copy_from_slice(&self.coords[..4]);
        q
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Center {
    pub z: f64,
    pub m: f64,
}

/// Harmonic data `V = eps + Σ m_i / |x − z_i e_3|` with all centres on the z-axis.
/// The connection is `ω = W dφ`, `W = Σ m_i (z − z_i)/|x − z_i e_3|`, which solves
/// `dω = ⋆dV` for the orientation `dx∧dy∧dz`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GhData {
    pub eps: f64,
    pub centers: Vec<Center>,
}

impl GhData {
    pub fn taub_nut(m: f64) -> Self {
        GhData { eps: 1.0, centers: vec![Center { z: 0.0, m }] }
    }

    /// Two unit centres at z = ∓α: `V = 1/r₁ + 1/r₂`.
    pub fn eguchi_hanson(alpha: f64) -> Self {
        GhData {
            eps: 0.0,
            centers: vec![Center { z: -alpha, m: 1.0 }, Center { z: alpha, m: 1.0 }],
        }
    }

    pub fn potential<D: DualNum<f64> + Copy>(&self, x: D, y: D, z: D) -> D {
        let mut v = D::from(self.eps);
        for c in &self.centers {
            let dz = z - c.z;
            v += (x * x + y * y + dz * dz).sqrt().recip() * c.m;
        }
        v
    }

    /// The coefficient `W` of `dφ` in ω.
    pub fn azimuthal<D: DualNum<f64> + Copy>(&self, x: D, y: D, z: D) -> D {
        let mut w = D::from(0.0);
        for c in &self.centers {
            let dz = z - c.z;
            w += dz / (x * x + y * y + dz * dz).sqrt() * c.m;
        }
        w
    }

    /// Cartesian components (ω_x, ω_y, ω_z) of the connection one-form.
    pub fn omega<D: DualNum<f64> + Copy>(&self, x: D, y: D, z: D) -> [D; 3] {
        let w = self.azimuthal(x, y, z);
        let rho2 = x * x + y * y;
        [-(w * y) / rho2, w * x / rho2, D::from(0.0)]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", content = "params", rename_all = "snake_case")]
pub enum MetricModel {
    Flat4,
    HalfPlane,
    TaubNut { m: f64 },
    EguchiHanson { alpha: f64 },
    GibbonsHawking(GhData),
    Cp2,
}

/// Pointwise geometric data of a four-dimensional model.
#[derive(Clone, Debug)]
pub struct Local4 {
    /// Coframe, row `a` holds `e^a_μ`.
    pub e: Matrix4<f64>,
    /// Frame, column `a` holds `E_a^μ`.
    pub einv: Matrix4<f64>,
    pub g: Matrix4<f64>,
    pub ginv: Matrix4<f64>,
    pub gamma: Gamma4,
}

impl Local4 {
    /// Frame components of a chart vector.
    pub fn to_frame(&self, v: &Vector4<f64>) -> Vector4<f64> {
        self.e * v
    }

    pub fn from_frame(&self, v: &Vector4<f64>) -> Vector4<f64> {
        self.einv * v
    }

    /// Chart components of a frame two-form `S_ab`: `Eᵀ S E`.
    pub fn form_to_chart(&self, s: &Matrix4<f64>) -> Matrix4<f64> {
        self.e.transpose() * s * self.e
    }

    pub fn form_to_frame(&self, f: &Matrix4<f64>) -> Matrix4<f64> {
        self.einv.transpose() * f * self.einv
    }

    /// `Γ^μ_νλ v^ν w^λ`
    pub fn gamma_contract(&self, v: &Vector4<f64>, w: &Vector4<f64>) -> Vector4<f64> {
        let mut out = Vector4::zeros();
        for m in 0..4 {
            let mut s = 0.0;
            for n in 0..4 {
                for l in 0..4 {
                    s += self.gamma[m][n][l] * v[n] * w[l];
                }
            }
            out[m] = s;
        }
        out
    }

    pub fn dot(&self, v: &Vector4<f64>, w: &Vector4<f64>) -> f64 {
        (self.g * w).dot(v)
    }
}

/// Christoffel symbols `Γ^a_bc` of an n-dimensional chart.
#[derive(Clone, Debug, PartialEq)]
pub struct Christoffel {
    pub n: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn zeros(n: usize) -> Self {
        Christoffel { n, data: vec![0.0; n * n * n] }
    }

    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.data[(a * self.n + b) * self.n + c]
    }

    pub fn set(&mut self, a: usize, b: usize, c: usize, v: f64) {
        let n = self.n;
        self.data[(a * n + b) * n + c] = v;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Duality {
    SelfDual,
    AntiSelfDual,
    Mixed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwoForm {
    /// Antisymmetric chart components.
    pub components: DMatrix<f64>,
    pub duality: Duality,
}

/// Frame components of Ω¹ = e¹⁴ + e²³, Ω² = e²⁴ + e³¹, Ω³ = e³⁴ + e¹².
pub fn sd_basis() -> [Matrix4<f64>; 3] {
    let mut s = [Matrix4::zeros(); 3];
    let pairs = [[(0, 3), (1, 2)], [(1, 3), (2, 0)], [(2, 3), (0, 1)]];
    for (i, pp) in pairs.iter().enumerate() {
        for &(a, b) in pp {
            s[i][(a, b)] = 1.0;
            s[i][(b, a)] = -1.0;
        }
    }
    s
}

/// `Σ c^i Ω^i` in the frame.
pub fn sd_combination(c: &[f64; 3]) -> Matrix4<f64> {
    let s = sd_basis();
    s[0] * c[0] + s[1] * c[1] + s[2] * c[2]
}

pub fn levi_civita(i: usize, j: usize, k: usize, l: usize) -> f64 {
    let p = [i, j, k, l];
    for a in 0..4 {
        for b in (a + 1)..4 {
            if p[a] == p[b] {
                return 0.0;
            }
        }
    }
    let mut sign = 1.0;
    for a in 0..4 {
        for b in (a + 1)..4 {
            if p[a] > p[b] {
                sign = -sign;
            }
        }
    }
    sign
}

/// Hodge star of a frame two-form for the orientation e¹∧e²∧e³∧e⁴.
pub fn hodge_frame(f: &Matrix4<f64>) -> Matrix4<f64> {
    let mut out = Matrix4::zeros();
    for a in 0..4 {
        for b in 0..4 {
            let mut s = 0.0;
            for c in 0..4 {
                for d in 0..4 {
                    s += 0.5 * levi_civita(a, b, c, d) * f[(c, d)];
                }
            }
            out[(a, b)] = s;
        }
    }
    out
}

/// Classify a frame two-form by comparing it with its Hodge dual.
pub fn classify_duality(f: &Matrix4<f64>, tol: f64) -> Duality {
    let star = hodge_frame(f);
    let scale = f.abs().max().max(1.0);
    if (star - f).abs().max() <= tol * scale {
        Duality::SelfDual
    } else if (star + f).abs().max() <= tol * scale {
        Duality::AntiSelfDual
    } else {
        Duality::Mixed
    }
}

fn zero<D: DualNum<f64>>() -> D {
    D::from(0.0)
}

/// Left-invariant one-forms on SU(2) in Euler angles, as rows over (dr, dθ, dφ, dψ):
/// σ₁ + iσ₂ = e^{-iψ}(dθ + i sinθ dφ), σ₃ = dψ + cosθ dφ.
fn sigmas<D: DualNum<f64> + Copy>(th: D, ps: D) -> [[D; 4]; 3] {
    let (st, ct) = th.sin_cos();
    let (sp, cp) = ps.sin_cos();
    let z = zero::<D>();
    [
        [z, cp, st * sp, z],
        [z, -sp, st * cp, z],
        [z, z, ct, D::from(1.0)],
    ]
}

fn scale_row<D: DualNum<f64> + Copy>(row: [D; 4], k: D) -> [D; 4] {
    [row[0] * k, row[1] * k, row[2] * k, row[3] * k]
}

impl MetricModel {
    pub fn name(&self) -> String {
        match self {
            MetricModel::Flat4 => "Flat4".into(),
            MetricModel::HalfPlane => "HalfPlane".into(),
            MetricModel::TaubNut { m } => format!("TaubNUT(m={m})"),
            MetricModel::EguchiHanson { alpha } => format!("EguchiHanson(alpha={alpha})"),
            MetricModel::GibbonsHawking(gh) => {
                format!("GibbonsHawking(eps={}, centers={})", gh.eps, gh.centers.len())
            }
            MetricModel::Cp2 => "CP2".into(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            MetricModel::HalfPlane => 2,
            _ => 4,
        }
    }

    pub fn chart(&self) -> ChartId {
        match self {
            MetricModel::Flat4 => ChartId::Cartesian,
            MetricModel::HalfPlane => ChartId::HalfPlane,
            MetricModel::GibbonsHawking(_) => ChartId::GibbonsHawking,
            _ => ChartId::Polar,
        }
    }

    pub fn coord_names(&self) -> &'static [&'static str] {
        match self.chart() {
            ChartId::Cartesian => &["x1", "x2", "x3", "x4"],
            ChartId::HalfPlane => &["x", "y"],
            ChartId::Polar => &["r", "theta", "phi", "psi"],
            ChartId::GibbonsHawking => &["x", "y", "z", "tau"],
        }
    }

    /// Periods of the angular coordinates (metadata only; angles are never wrapped).
    pub fn angle_periods(&self) -> Vec<(usize, f64)> {
        match self {
            MetricModel::TaubNut { .. } => vec![(2, 2.0 * PI), (3, 4.0 * PI)],
            MetricModel::EguchiHanson { .. } | MetricModel::Cp2 => {
                vec![(2, 2.0 * PI), (3, 2.0 * PI)]
            }
            MetricModel::GibbonsHawking(gh) => match gh.centers.first() {
                Some(c0) if gh.centers.iter().all(|c| c.m == c0.m) => vec![(3, 4.0 * PI * c0.m)],
                _ => vec![],
            },
            _ => vec![],
        }
    }

    pub fn is_hyperkahler(&self) -> bool {
        matches!(
            self,
            MetricModel::Flat4
                | MetricModel::TaubNut { .. }
                | MetricModel::EguchiHanson { .. }
                | MetricModel::GibbonsHawking(_)
        )
    }

    /// `S/(2n(n−1))`: the Schouten tensor is this multiple of g on Einstein models.
    pub fn einstein_constant(&self) -> Option<f64> {
        match self {
            MetricModel::HalfPlane => None,
            MetricModel::Cp2 => Some(1.0),
            _ => Some(0.0),
        }
    }

    fn domain(&self, bound: impl Into<String>) -> Error {
        Error::Domain { model: self.name(), bound: bound.into() }
    }

    /// Check a coordinate tuple against the chart's validity box.
    pub fn validate(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.dim() {
            return Err(self.domain(format!("expected {} coordinates, got {}", self.dim(), q.len())));
        }
        if q.iter().any(|x| !x.is_finite()) {
            return Err(self.domain("non-finite coordinate"));
        }
        let polar = |rmin: f64, what: &str| -> Result<()> {
            if q[0] <= rmin {
                return Err(self.domain(format!("r > {what} = {rmin} violated (r = {})", q[0])));
            }
            if q[1] <= THETA_EPS || q[1] >= PI - THETA_EPS {
                return Err(self.domain(format!("0 < theta < pi violated (theta = {})", q[1])));
            }
            Ok(())
        };
        match self {
            MetricModel::Flat4 => Ok(()),
            MetricModel::HalfPlane => {
                if q[1] > 0.0 {
                    Ok(())
                } else {
                    Err(self.domain(format!("y > 0 violated (y = {})", q[1])))
                }
            }
            MetricModel::TaubNut { .. } | MetricModel::Cp2 => polar(R_MIN, "r_min"),
            MetricModel::EguchiHanson { alpha } => polar(*alpha, "alpha"),
            MetricModel::GibbonsHawking(gh) => {
                let rho = q[0].hypot(q[1]);
                if rho <= RHO_MIN {
                    return Err(self.domain(format!("rho > {RHO_MIN} violated (axis)")));
                }
                for c in &gh.centers {
                    let d = (rho * rho + (q[2] - c.z).powi(2)).sqrt();
                    if d <= R_MIN {
                        return Err(self.domain(format!("distance to centre at z={} too small", c.z)));
                    }
                }
                let v = gh.potential(q[0], q[1], q[2]);
                if v <= 0.0 {
                    return Err(self.domain("V > 0 violated"));
                }
                Ok(())
            }
        }
    }

    /// Closed-form coframe `e^a_μ` (row a) of a four-dimensional model.
    pub fn coframe<D: DualNum<f64> + Copy>(&self, q: [D; 4]) -> [[D; 4]; 4] {
        let z = zero::<D>();
        let one = D::from(1.0);
        match self {
            MetricModel::Flat4 => [
                [one, z, z, z],
                [z, one, z, z],
                [z, z, one, z],
                [z, z, z, one],
            ],
            MetricModel::TaubNut { m } => {
                let (r, th, ph) = (q[0], q[1], q[2]);
                let v = one + r.recip() * *m;
                let sv = v.sqrt();
                let (st, ct) = th.sin_cos();
                let (sp, cp) = ph.sin_cos();
                [
                    [sv * st * cp, sv * r * ct * cp, -(sv * r * st * sp), z],
                    [sv * st * sp, sv * r * ct * sp, sv * r * st * cp, z],
                    [sv * ct, -(sv * r * st), z, z],
                    [z, z, ct * *m / sv, sv.recip()],
                ]
            }
            MetricModel::EguchiHanson { alpha } => {
                let r = q[0];
                let f = (one - r.powi(4).recip() * alpha.powi(4)).sqrt();
                let s = sigmas(q[1], q[3]);
                let half_r = r * 0.5;
                [
                    scale_row(s[0], half_r),
                    scale_row(s[1], half_r),
                    scale_row(s[2], half_r * f),
                    [f.recip(), z, z, z],
                ]
            }
            MetricModel::Cp2 => {
                let r = q[0];
                let w = one + r * r;
                let k = r / (w.sqrt() * 2.0);
                let s = sigmas(q[1], q[3]);
                [
                    scale_row(s[0], k),
                    scale_row(s[1], -k),
                    scale_row(s[2], r / (w * 2.0)),
                    [w.recip(), z, z, z],
                ]
            }
            MetricModel::GibbonsHawking(gh) => {
                let (x, y, zz) = (q[0], q[1], q[2]);
                let v = gh.potential(x, y, zz);
                let sv = v.sqrt();
                let om = gh.omega(x, y, zz);
                [
                    [sv, z, z, z],
                    [z, sv, z, z],
                    [z, z, sv, z],
                    [om[0] / sv, om[1] / sv, om[2] / sv, sv.recip()],
                ]
            }
            MetricModel::HalfPlane => panic!("the half-plane model is two-dimensional"),
        }
    }

    /// Coframe and its coordinate derivatives `∂_k e^a_μ`, obtained by forward-mode
    /// differentiation.
    pub fn coframe_with_derivatives(&self, q: &[f64; 4]) -> (Matrix4<f64>, [Matrix4<f64>; 4]) {
        let mut e = Matrix4::zeros();
        let mut de = [Matrix4::zeros(); 4];
        for k in 0..4 {
            let qd: [Dual64; 4] =
                std::array::from_fn(|j| Dual64::new(q[j], if j == k { 1.0 } else { 0.0 }));
            let ed = self.coframe(qd);
            for a in 0..4 {
                for m in 0..4 {
                    e[(a, m)] = ed[a][m].re;
                    de[k][(a, m)] = ed[a][m].eps;
                }
            }
        }
        (e, de)
    }

    /// Coframe only.
    pub fn coframe_at(&self, q: &[f64; 4]) -> Matrix4<f64> {
        let ed = self.coframe(*q);
        Matrix4::from_fn(|a, m| ed[a][m])
    }

    /// Everything needed to evaluate the flows at one point. No chart validation.
    pub fn local_unchecked(&self, q: &[f64; 4]) -> Local4 {
        let (e, de) = self.coframe_with_derivatives(q);
        let et = e.transpose();
        let g = et * e;
        let einv = e.try_inverse().unwrap_or_else(|| Matrix4::from_element(f64::NAN));
        let ginv = einv * einv.transpose();
        let dg: [Matrix4<f64>; 4] = std::array::from_fn(|k| {
            let t = de[k].transpose() * e;
            t + t.transpose()
        });
        let mut gamma = [[[0.0; 4]; 4]; 4];
        // Γ^μ_νλ = ½ g^{μκ}(∂_ν g_κλ + ∂_λ g_κν − ∂_κ g_νλ)
        let mut lowered = [[[0.0; 4]; 4]; 4];
        for kk in 0..4 {
            for n in 0..4 {
                for l in n..4 {
                    let v = 0.5 * (dg[n][(kk, l)] + dg[l][(kk, n)] - dg[kk][(n, l)]);
                    lowered[kk][n][l] = v;
                    lowered[kk][l][n] = v;
                }
            }
        }
        for m in 0..4 {
            for n in 0..4 {
                for l in 0..4 {
                    let mut s = 0.0;
                    for kk in 0..4 {
                        s += ginv[(m, kk)] * lowered[kk][n][l];
                    }
                    gamma[m][n][l] = s;
                }
            }
        }
        Local4 { e, einv, g, ginv, gamma }
    }

    pub fn local(&self, q: &[f64; 4]) -> Result<Local4> {
        if self.dim() != 4 {
            return Err(Error::Unsupported { op: "four-dimensional frame data", model: self.name() });
        }
        self.validate(q)?;
        Ok(self.local_unchecked(q))
    }

    fn check_point(&self, p: &ChartPoint) -> Result<()> {
        if p.chart != self.chart() {
            return Err(Error::Invalid(format!(
                "point given in chart {:?}, model {} uses {:?}",
                p.chart,
                self.name(),
                self.chart()
            )));
        }
        self.validate(&p.coords)
    }

    pub fn metric_at(&self, p: &ChartPoint) -> Result<DMatrix<f64>> {
        self.check_point(p)?;
        if let MetricModel::HalfPlane = self {
            let y2 = p.coords[1] * p.coords[1];
            return Ok(DMatrix::from_diagonal_element(2, 2, 1.0 / y2));
        }
        let e = self.coframe_at(&p.as4());
        let g = e.transpose() * e;
        Ok(DMatrix::from_fn(4, 4, |i, j| g[(i, j)]))
    }

    pub fn inverse_metric_at(&self, p: &ChartPoint) -> Result<DMatrix<f64>> {
        self.check_point(p)?;
        if let MetricModel::HalfPlane = self {
            let y2 = p.coords[1] * p.coords[1];
            return Ok(DMatrix::from_diagonal_element(2, 2, y2));
        }
        let l = self.local_unchecked(&p.as4());
        Ok(DMatrix::from_fn(4, 4, |i, j| l.ginv[(i, j)]))
    }

    pub fn christoffel_at(&self, p: &ChartPoint) -> Result<Christoffel> {
        self.check_point(p)?;
        if let MetricModel::HalfPlane = self {
            let y = p.coords[1];
            let mut c = Christoffel::zeros(2);
            c.set(0, 0, 1, -1.0 / y);
            c.set(0, 1, 0, -1.0 / y);
            c.set(1, 0, 0, 1.0 / y);
            c.set(1, 1, 1, -1.0 / y);
            return Ok(c);
        }
        let l = self.local_unchecked(&p.as4());
        let mut c = Christoffel::zeros(4);
        for a in 0..4 {
            for b in 0..4 {
                for d in 0..4 {
                    c.set(a, b, d, l.gamma[a][b][d]);
                }
            }
        }
        Ok(c)
    }

    pub fn schouten_at(&self, p: &ChartPoint) -> Result<DMatrix<f64>> {
        match self.einstein_constant() {
            None => Err(Error::Unsupported { op: "schouten_at", model: self.name() }),
            Some(k) => Ok(self.metric_at(p)? * k),
        }
    }

    /// Chart components of the parallel self-dual triple Ω¹, Ω², Ω³.
    pub fn sd_two_forms_at(&self, p: &ChartPoint) -> Result<[TwoForm; 3]> {
        if !self.is_hyperkahler() {
            return Err(Error::Unsupported { op: "sd_two_forms_at", model: self.name() });
        }
        self.check_point(p)?;
        let e = self.coframe_at(&p.as4());
        let basis = sd_basis();
        Ok(std::array::from_fn(|i| {
            let c = e.transpose() * basis[i] * e;
            TwoForm {
                components: DMatrix::from_fn(4, 4, |a, b| c[(a, b)]),
                duality: classify_duality(&basis[i], 1e-12),
            }
        }))
    }

    /// Duality of a chart two-form at a point, judged in the orthonormal frame.
    pub fn duality_of(&self, p: &ChartPoint, f: &DMatrix<f64>, tol: f64) -> Result<Duality> {
        let l = self.local(&p.as4())?;
        let m = Matrix4::from_fn(|a, b| f[(a, b)]);
        Ok(classify_duality(&l.form_to_frame(&m), tol))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn flat_metric_is_identity() {
        let m = MetricModel::Flat4;
        let p = ChartPoint::new(ChartId::Cartesian, vec![0.3, -1.0, 2.0, 5.0]);
        assert_eq!(m.metric_at(&p).unwrap(), DMatrix::identity(4, 4));
        let c = m.christoffel_at(&p).unwrap();
        assert!((0..64).all(|i| c.get(i / 16, (i / 4) % 4, i % 4) == 0.0));
    }

    #[test]
    fn half_plane_metric_and_gamma() {
        let m = MetricModel::HalfPlane;
        let g = m.metric_at(&ChartPoint::new(ChartId::HalfPlane, vec![0.0, 2.0])).unwrap();
        assert_relative_eq!(g[(0, 0)], 0.25);
        assert_relative_eq!(g[(1, 1)], 0.25);
        assert_eq!(g[(0, 1)], 0.0);
        let c = m.christoffel_at(&ChartPoint::new(ChartId::HalfPlane, vec![0.0, 1.0])).unwrap();
        assert_relative_eq!(c.get(0, 0, 1), -1.0);
    }

    #[test]
    fn taub_nut_grr() {
        let m = MetricModel::TaubNut { m: 1.0 };
        let p = ChartPoint::new(ChartId::Polar, vec![1.0, PI / 2.0, 0.3, 0.1]);
        let g = m.metric_at(&p).unwrap();
        assert_relative_eq!(g[(0, 0)], 2.0, epsilon = 1e-14);
        // g_ψψ = 1/V, g_φψ = m cosθ / V
        assert_relative_eq!(g[(3, 3)], 0.5, epsilon = 1e-14);
        assert!(g[(2, 3)].abs() < 1e-15);
    }

    #[test]
    fn taub_nut_closed_form_components() {
        let (mm, r, th) = (0.7, 1.9, 1.1);
        let m = MetricModel::TaubNut { m: mm };
        let p = ChartPoint::new(ChartId::Polar, vec![r, th, 0.4, -0.2]);
        let g = m.metric_at(&p).unwrap();
        let v = 1.0 + mm / r;
        assert_relative_eq!(g[(1, 1)], v * r * r, epsilon = 1e-12);
        assert_relative_eq!(
            g[(2, 2)],
            v * r * r * th.sin().powi(2) + mm * mm * th.cos().powi(2) / v,
            epsilon = 1e-12
        );
        assert_relative_eq!(g[(2, 3)], mm * th.cos() / v, epsilon = 1e-12);
        assert!(g[(0, 1)].abs() < 1e-14 && g[(0, 2)].abs() < 1e-14);
    }

    #[test]
    fn eguchi_hanson_closed_form_components() {
        let (al, r, th) = (1.0, 1.7, 0.8);
        let m = MetricModel::EguchiHanson { alpha: al };
        let p = ChartPoint::new(ChartId::Polar, vec![r, th, 0.0, 0.0]);
        let g = m.metric_at(&p).unwrap();
        let f2 = 1.0 - al.powi(4) / r.powi(4);
        assert_relative_eq!(g[(0, 0)], 1.0 / f2, epsilon = 1e-12);
        assert_relative_eq!(g[(3, 3)], 0.25 * r * r * f2, epsilon = 1e-12);
        assert_relative_eq!(g[(1, 1)], 0.25 * r * r, epsilon = 1e-12);
    }

    #[test]
    fn cp2_closed_form_components() {
        let (r, th) = (0.9, 2.0);
        let m = MetricModel::Cp2;
        let p = ChartPoint::new(ChartId::Polar, vec![r, th, 1.0, 2.0]);
        let g = m.metric_at(&p).unwrap();
        let w = 1.0 + r * r;
        assert_relative_eq!(g[(0, 0)], 1.0 / (w * w), epsilon = 1e-12);
        assert_relative_eq!(g[(3, 3)], 0.25 * r * r / (w * w), epsilon = 1e-12);
        assert_relative_eq!(g[(1, 1)], 0.25 * r * r / w, epsilon = 1e-12);
        let ls = m.schouten_at(&p).unwrap();
        assert_relative_eq!((ls - g).abs().max(), 0.0);
    }

    #[test]
    fn domain_errors_name_the_bound() {
        let m = MetricModel::EguchiHanson { alpha: 1.0 };
        let err = m.validate(&[0.5, 1.0, 0.0, 0.0]).unwrap_err();
        assert!(err.to_string().contains("alpha"));
        let err = MetricModel::TaubNut { m: 1.0 }.validate(&[1.0, 0.0, 0.0, 0.0]).unwrap_err();
        assert!(err.to_string().contains("theta"));
        assert!(MetricModel::HalfPlane.validate(&[0.0, -1.0]).is_err());
    }

    #[test]
    fn unsupported_operations() {
        let p = ChartPoint::new(ChartId::HalfPlane, vec![0.0, 1.0]);
        assert!(matches!(
            MetricModel::HalfPlane.schouten_at(&p),
            Err(Error::Unsupported { .. })
        ));
        let q = ChartPoint::new(ChartId::Polar, vec![1.0, 1.0, 0.0, 0.0]);
        assert!(MetricModel::Cp2.sd_two_forms_at(&q).is_err());
    }

    #[test]
    fn sd_basis_is_self_dual() {
        for s in sd_basis() {
            assert_eq!(classify_duality(&s, 1e-14), Duality::SelfDual);
        }
        let mut kahler = Matrix4::zeros();
        kahler[(0, 1)] = 1.0;
        kahler[(1, 0)] = -1.0;
        kahler[(2, 3)] = -1.0;
        kahler[(3, 2)] = 1.0;
        assert_eq!(classify_duality(&kahler, 1e-14), Duality::AntiSelfDual);
    }

    #[test]
    fn flat_omega3_constant() {
        let m = MetricModel::Flat4;
        let p = ChartPoint::new(ChartId::Cartesian, vec![1.0, 2.0, 3.0, 4.0]);
        let om = m.sd_two_forms_at(&p).unwrap();
        assert_eq!(om[2].components[(2, 3)], 1.0);
        assert_eq!(om[2].components[(0, 1)], 1.0);
        assert_eq!(om[2].duality, Duality::SelfDual);
    }
}
