//! Eguchi–Hanson: the Lorentz system in the frame `e¹ = ½rσ₁, e² = ½rσ₂,
//! e³ = ½rfσ₃, e⁴ = dr/f`, right-invariant momenta, the reduced angular system,
//! curves on the SO(3) orbits r = const and the prolate-spheroidal
//! Hamilton–Jacobi separation on the two-centre Gibbons–Hawking chart.

use crate::error::{Error, Result};
use crate::flows::{FlowKind, Trajectory};
use crate::geometry::{GhData, MetricModel};
use crate::ode::{self, Dop853Options, OdeProblem};
use crate::quad;
use crate::roots;
use nalgebra::{Matrix3, Vector3, Vector4};
use num_dual::DualNum;
use serde::{Deserialize, Serialize};

fn f_of(r: f64, alpha: f64) -> f64 {
    (1.0 - (alpha / r).powi(4)).sqrt()
}

fn check_r(r: f64, alpha: f64) -> Result<()> {
    if r > alpha && r.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { model: format!("EguchiHanson(alpha={alpha})"), bound: format!("r > alpha violated (r = {r})") })
    }
}

/// Coefficient of `u²u³` in the frame equations: `2k⁴/(r√(1−k⁴))`, `k = α/r`.
/// On r = const it is the constant `R` of the orbit system.
pub fn r_coefficient(r: f64, alpha: f64) -> f64 {
    let k4 = (alpha / r).powi(4);
    2.0 * k4 / (r * (1.0 - k4).sqrt())
}

/// Chart velocity → frame components.
pub fn frame_velocity(alpha: f64, q: &[f64; 4], u: &[f64; 4]) -> [f64; 4] {
    let (r, th, ps) = (q[0], q[1], q[3]);
    let f = f_of(r, alpha);
    let (st, ct) = th.sin_cos();
    let (sp, cp) = ps.sin_cos();
    let (dr, dth, dph, dps) = (u[0], u[1], u[2], u[3]);
    [
        0.5 * r * (st * sp * dph + cp * dth),
        0.5 * r * (st * cp * dph - sp * dth),
        0.5 * r * f * (dps + ct * dph),
        dr / f,
    ]
}

/// Frame components → chart velocity `(ṙ, θ̇, φ̇, ψ̇)`.
pub fn chart_velocity(alpha: f64, q: &[f64; 4], ub: &[f64; 4]) -> Result<[f64; 4]> {
    let (r, th, ps) = (q[0], q[1], q[3]);
    check_r(r, alpha)?;
    let (st, ct) = th.sin_cos();
    if st.abs() < crate::geometry::THETA_EPS {
        return Err(Error::SingularCoordinates(format!("θ = {th} on the Eguchi–Hanson polar chart")));
    }
    let f = f_of(r, alpha);
    let (sp, cp) = ps.sin_cos();
    let dph = 2.0 * (ub[0] * sp + ub[1] * cp) / (r * st);
    let dth = 2.0 * (ub[0] * cp - ub[1] * sp) / r;
    let dps = 2.0 * ub[2] / (r * f) - ct * dph;
    Ok([f * ub[3], dth, dph, dps])
}

/// Frame Lorentz system. State `[r, θ, φ, ψ, u¹, u², u³, u⁴]`.
pub fn eh_frame_rhs(alpha: f64, st: &[f64; 8], c: &[f64; 3]) -> Result<[f64; 8]> {
    let q = [st[0], st[1], st[2], st[3]];
    let u = [st[4], st[5], st[6], st[7]];
    let r = q[0];
    check_r(r, alpha)?;
    let k4 = (alpha / r).powi(4);
    let s = (1.0 - k4).sqrt();
    let rr = 2.0 * k4 / (r * s);
    let [u1, u2, u3, u4] = u;
    let [c1, c2, c3] = *c;
    let du = [
        rr * u2 * u3 - s / r * u1 * u4 + c2 * u3 - c3 * u2 - c1 * u4,
        -rr * u1 * u3 - s / r * u2 * u4 + c3 * u1 - c1 * u3 - c2 * u4,
        -(1.0 + k4) / (r * s) * u3 * u4 + c1 * u2 - c2 * u1 - c3 * u4,
        s / r * (1.0 - u4 * u4) + rr * u3 * u3 + c1 * u1 + c2 * u2 + c3 * u3,
    ];
    let dq = chart_velocity(alpha, &q, &u)?;
    Ok([dq[0], dq[1], dq[2], dq[3], du[0], du[1], du[2], du[3]])
}

/// Frame components of `Φ = −½(c₁ rf e¹ + c₂ rf e² + c₃ (r/f) e³)`.
pub fn potential_frame(alpha: f64, r: f64, c: &[f64; 3]) -> [f64; 4] {
    let f = f_of(r, alpha);
    [-0.5 * c[0] * r * f, -0.5 * c[1] * r * f, -0.5 * c[2] * r / f, 0.0]
}

/// Chart components of Φ, for exterior-derivative checks.
pub fn potential_chart<D: DualNum<f64> + Copy>(alpha: f64, q: &[D; 4], c: &[f64; 3]) -> [D; 4] {
    let e = MetricModel::EguchiHanson { alpha }.coframe(*q);
    let r = q[0];
    let f = (D::from(1.0) - r.powi(4).recip() * alpha.powi(4)).sqrt();
    let w = [-(r * f) * (0.5 * c[0]), -(r * f) * (0.5 * c[1]), -(r / f) * (0.5 * c[2])];
    std::array::from_fn(|mu| e[0][mu] * w[0] + e[1][mu] * w[1] + e[2][mu] * w[2])
}

/// Right-invariant vector fields on the SU(2) orbits in chart components
/// `(r, θ, φ, ψ)`; they commute with the fields dual to σᵢ and satisfy
/// `[R₁, R₂] = ∓R₃`-type relations with the orientation of the Euler angles.
pub fn right_invariant_fields<D: DualNum<f64> + Copy>(q: &[D; 4]) -> [[D; 4]; 3] {
    let (st, ct) = q[1].sin_cos();
    let (sf, cf) = q[2].sin_cos();
    let z = D::from(0.0);
    let cot = ct / st;
    [
        [z, -sf, -(cot * cf), cf / st],
        [z, cf, -(cot * sf), sf / st],
        [z, z, D::from(1.0), z],
    ]
}

/// Matrix `M` with `R_i = M^j_i E_j` (rows j = 1..3, columns i).
pub fn frame_matrix(alpha: f64, q: &[f64; 4]) -> Matrix3<f64> {
    let fields = right_invariant_fields(q);
    let mut m = Matrix3::zeros();
    for (i, fld) in fields.iter().enumerate() {
        let ub = frame_velocity(alpha, q, fld);
        for j in 0..3 {
            m[(j, i)] = ub[j];
        }
    }
    m
}

/// `p_i = R_i^a (u_a + κΦ_a)` for a chart velocity.
pub fn right_invariant_momenta(alpha: f64, q: &[f64; 4], u: &[f64; 4], c: &[f64; 3], kappa: f64) -> Result<[f64; 3]> {
    check_r(q[0], alpha)?;
    let ub = frame_velocity(alpha, q, u);
    let phi = potential_frame(alpha, q[0], c);
    let w = Vector3::new(ub[0] + kappa * phi[0], ub[1] + kappa * phi[1], ub[2] + kappa * phi[2]);
    let p = frame_matrix(alpha, q).transpose() * w;
    Ok([p[0], p[1], p[2]])
}

/// Orbit-tangent frame velocity `(u¹, u², u³) = M⁻ᵀp − κΦ`.
pub fn u_from_momenta(alpha: f64, q: &[f64; 4], p: &[f64; 3], c: &[f64; 3], kappa: f64) -> Result<[f64; 3]> {
    check_r(q[0], alpha)?;
    if q[1].sin().abs() < crate::geometry::THETA_EPS {
        return Err(Error::SingularCoordinates(format!("θ = {} on the Eguchi–Hanson polar chart", q[1])));
    }
    let m = frame_matrix(alpha, q);
    let w = m.transpose().lu().solve(&Vector3::from(*p)).ok_or_else(|| Error::Numeric("singular M".into()))?;
    let phi = potential_frame(alpha, q[0], c);
    Ok([w[0] - kappa * phi[0], w[1] - kappa * phi[1], w[2] - kappa * phi[2]])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AngularRates {
    pub phi: f64,
    pub theta: f64,
    pub psi: f64,
}

/// `(φ̇, θ̇, ψ̇)` at radius `r` from the conserved momenta, obtained by inverting
/// the momentum relations and the frame/chart velocity relations.
pub fn angular_rhs(alpha: f64, r: f64, theta: f64, phi: f64, psi: f64, c: &[f64; 3], p: &[f64; 3], kappa: f64) -> Result<AngularRates> {
    let q = [r, theta, phi, psi];
    let ub = u_from_momenta(alpha, &q, p, c, kappa)?;
    let v = chart_velocity(alpha, &q, &[ub[0], ub[1], ub[2], 0.0])?;
    Ok(AngularRates { phi: v[2], theta: v[1], psi: v[3] })
}

/// `α̇ = Rβγ + c₂γ − c₃β`, `β̇ = −Rαγ + c₃α − c₁γ`, `γ̇ = c₁β − c₂α`.
pub fn orbit_ode_rhs(v: &[f64; 3], r_coef: f64, c: &[f64; 3]) -> [f64; 3] {
    let [a, b, g] = *v;
    let [c1, c2, c3] = *c;
    [r_coef * b * g + c2 * g - c3 * b, -r_coef * a * g + c3 * a - c1 * g, c1 * b - c2 * a]
}

/// Constants of the curves on an orbit r = const.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EHOrbitConstants {
    pub alpha: f64,
    pub r: f64,
    pub r_coef: f64,
    pub c: [f64; 3],
    pub p: [f64; 3],
    /// `c₃(c₁² + c₂²)`
    pub m0: f64,
    pub m1: f64,
    pub m2: f64,
    /// Arclength origin.
    pub m3: f64,
}

impl EHOrbitConstants {
    pub fn cperp2(&self) -> f64 {
        self.c[0] * self.c[0] + self.c[1] * self.c[1]
    }

    /// Constants from unit initial data `(α₀, β₀, γ₀)` at `s = 0`.
    pub fn from_initial(alpha: f64, r: f64, c: [f64; 3], v0: [f64; 3], p: [f64; 3]) -> Result<Self> {
        check_r(r, alpha)?;
        let cc = c[0] * c[0] + c[1] * c[1];
        if cc == 0.0 {
            return Err(Error::Degenerate("c₁² + c₂² = 0: the reconstruction divides by it".into()));
        }
        let rc = r_coefficient(r, alpha);
        let h0 = rc * v0[2] - c[2];
        let m1 = 0.5 * (h0 * h0 - 2.0 * cc - 2.0 * rc * (c[0] * v0[0] + c[1] * v0[1]));
        let m2 = rc * rc * cc - cc * c[2] * c[2] - (cc + m1).powi(2);
        Ok(EHOrbitConstants { alpha, r, r_coef: rc, c, p, m0: c[2] * cc, m1, m2, m3: 0.0 })
    }

    /// `−h⁴ + 4m₁h² − 8m₀h + 4m₂`, equal to `4ḣ²`.
    pub fn quartic(&self, h: f64) -> f64 {
        -h.powi(4) + 4.0 * self.m1 * h * h - 8.0 * self.m0 * h + 4.0 * self.m2
    }

    pub fn h_of_gamma(&self, gamma: f64) -> f64 {
        self.r_coef * gamma - self.c[2]
    }
}

/// `h h⃛ − (ḧ − h³ + m₀) ḣ`.
pub fn h_ode_residual(h: f64, hd: f64, hdd: f64, hddd: f64, m0: f64) -> f64 {
    h * hddd - (hdd - h * h * h + m0) * hd
}

/// `s(h₁) − s(h₀) = 2∫ dh/√(−h⁴ + 4m₁h² − 8m₀h + 4m₂)` on a monotone branch.
pub fn h_quadrature(h_range: (f64, f64), k: &EHOrbitConstants) -> Result<f64> {
    let (h0, h1) = h_range;
    if h0 == h1 {
        return Ok(0.0);
    }
    let (a, b) = (h0.min(h1), h0.max(h1));
    let coeffs = [4.0 * k.m2, -8.0 * k.m0, 4.0 * k.m1, 0.0, -1.0];
    let scale = b - a;
    for root in roots::polynomial_roots(&coeffs, a, b, 1e-13) {
        if root - a > 1e-9 * scale && b - root > 1e-9 * scale {
            return Err(Error::SplitRequired { root });
        }
    }
    let mid = 0.5 * (a + b);
    if k.quartic(mid) <= 0.0 {
        return Err(Error::TurningPoint { x: mid, radicand: k.quartic(mid) });
    }
    let v = 2.0 * quad::integrate_endpoint_singular(|h, _, _| k.quartic(h).max(0.0).sqrt().recip(), a, b, 1e-13);
    Ok(if h1 >= h0 { v } else { -v })
}

/// `(u¹, u², u³)` from `γ, γ̇, γ̈`:
/// `α = −c₁γ̈/(C h) − c₂γ̇/C − c₁γ/h`, `β = −c₂γ̈/(C h) + c₁γ̇/C − c₂γ/h`.
pub fn reconstruct_alpha_beta(k: &EHOrbitConstants, g: f64, gd: f64, gdd: f64) -> Result<[f64; 3]> {
    let cc = k.cperp2();
    if cc == 0.0 {
        return Err(Error::Degenerate("c₁² + c₂² = 0".into()));
    }
    let h = k.h_of_gamma(g);
    let [c1, c2, _] = k.c;
    Ok([
        -c1 * gdd / (cc * h) - c2 * gd / cc - c1 * g / h,
        -c2 * gdd / (cc * h) + c1 * gd / cc - c2 * g / h,
        g,
    ])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrbitSample {
    pub s: f64,
    pub h: f64,
    pub hd: f64,
    pub hdd: f64,
    pub hddd: f64,
    /// Reconstructed `(u¹, u², u³)`.
    pub u: [f64; 3],
    /// Their s-derivatives.
    pub du: [f64; 3],
}

struct HProblem {
    m0: f64,
    m1: f64,
}

impl OdeProblem for HProblem {
    fn dim(&self) -> usize {
        2
    }
    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        dy[0] = y[1];
        dy[1] = -0.5 * y[0].powi(3) + self.m1 * y[0] - self.m0;
        Ok(())
    }
}

/// Orbit curve reconstructed from `h(s)`: `h` solves `ḧ = −h³/2 + m₁h − m₀`
/// (the twice-differentiated quadrature), and `(u¹, u², u³)` follow from the
/// reconstruction formulas with `γ = (h + c₃)/R`.
pub fn orbit_solution(k: &EHOrbitConstants, v0: [f64; 3], s_end: f64, n: usize) -> Result<Vec<OrbitSample>> {
    let h0 = k.h_of_gamma(v0[2]);
    let hd0 = k.r_coef * orbit_ode_rhs(&v0, k.r_coef, &k.c)[2];
    let prob = HProblem { m0: k.m0, m1: k.m1 };
    let sol = ode::integrate(&prob, 0.0, &[h0, hd0], s_end, &Dop853Options { rtol: 1e-12, atol: 1e-14, ..Default::default() });
    if !matches!(sol.stop, ode::StopReason::Completed) {
        return Err(Error::Numeric(format!("h-equation integration stopped: {:?}", sol.stop)));
    }
    let rc = k.r_coef;
    (0..n)
        .map(|i| {
            let s = s_end * i as f64 / (n - 1).max(1) as f64;
            let y = sol.dense.eval(s).unwrap_or_else(|| vec![h0, hd0]);
            let (h, hd) = (y[0], y[1]);
            let hdd = -0.5 * h.powi(3) + k.m1 * h - k.m0;
            let hddd = (-1.5 * h * h + k.m1) * hd;
            let (g, gd, gdd, gddd) = ((h + k.c[2]) / rc, hd / rc, hdd / rc, hddd / rc);
            let u = reconstruct_alpha_beta(k, g, gd, gdd)?;
            // d/ds of the reconstruction (h = Rγ − c₃ so ḣ = Rγ̇)
            let cc = k.cperp2();
            let [c1, c2, _] = k.c;
            let dinv_h = -hd / (h * h);
            let da = -c1 / cc * (gddd / h + gdd * dinv_h) - c2 * gdd / cc - c1 * (gd / h + g * dinv_h);
            let db = -c2 / cc * (gddd / h + gdd * dinv_h) + c1 * gdd / cc - c2 * (gd / h + g * dinv_h);
            Ok(OrbitSample { s, h, hd, hdd, hddd, u, du: [da, db, gd] })
        })
        .collect()
}

struct TangentialProblem {
    r_coef: f64,
    c: [f64; 3],
}

impl OdeProblem for TangentialProblem {
    fn dim(&self) -> usize {
        3
    }
    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        dy.copy_from_slice(&orbit_ode_rhs(&[y[0], y[1], y[2]], self.r_coef, &self.c));
        Ok(())
    }
}

/// `(u¹, u², u³)` on the uniform grid over `[0, s_end]` by integrating the
/// tangential equations directly; the numerical counterpart of [`orbit_solution`].
pub fn orbit_direct(k: &EHOrbitConstants, v0: [f64; 3], s_end: f64, n: usize) -> Result<Vec<[f64; 3]>> {
    let prob = TangentialProblem { r_coef: k.r_coef, c: k.c };
    let sol = ode::integrate(&prob, 0.0, &v0, s_end, &Dop853Options { rtol: 1e-12, atol: 1e-14, ..Default::default() });
    if !matches!(sol.stop, ode::StopReason::Completed) {
        return Err(Error::Numeric(format!("tangential integration stopped: {:?}", sol.stop)));
    }
    Ok((0..n)
        .map(|i| {
            let s = s_end * i as f64 / (n - 1).max(1) as f64;
            let y = sol.dense.eval(s).unwrap_or_else(|| v0.to_vec());
            [y[0], y[1], y[2]]
        })
        .collect())
}

/// Residuals of the four frame equations with `u⁴ ≡ 0` on the orbit `r`.
pub fn orbit_frame_residual(k: &EHOrbitConstants, smp: &OrbitSample) -> [f64; 4] {
    let st = [k.r, 1.0, 0.0, 0.0, smp.u[0], smp.u[1], smp.u[2], 0.0];
    // The angles do not enter the velocity equations.
    let d = eh_frame_rhs(k.alpha, &st, &k.c).expect("r > alpha");
    [smp.du[0] - d[4], smp.du[1] - d[5], smp.du[2] - d[6], -d[7]]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StarStarResidual {
    /// `(u¹)² + (u²)² + (u³)² − 1`
    pub unit: f64,
    /// `c₁u¹ + c₂u² − (h² − 2C − 2m₁)/(2R)` with `h = Rγ − m₀/C`.
    pub linear: f64,
    /// The same relation with the prefactor `rf/(2(1−f²))` and
    /// `h = ((1−f²)/(fr)) u³ + m₀/C` exactly as displayed in the literature.
    pub linear_as_printed: f64,
}

pub fn starstar_residual(u: &[f64; 3], k: &EHOrbitConstants) -> Result<StarStarResidual> {
    let cc = k.cperp2();
    if cc == 0.0 {
        return Err(Error::Degenerate("c₁² + c₂² = 0: h is undefined".into()));
    }
    let lhs = k.c[0] * u[0] + k.c[1] * u[1];
    let h = k.r_coef * u[2] - k.m0 / cc;
    let linear = lhs - (h * h - 2.0 * cc - 2.0 * k.m1) / (2.0 * k.r_coef);
    let f = f_of(k.r, k.alpha);
    let hp = (1.0 - f * f) / (f * k.r) * u[2] + k.m0 / cc;
    let printed = lhs - k.r * f / (2.0 * (1.0 - f * f)) * (hp * hp - 2.0 * cc - 2.0 * k.m1);
    Ok(StarStarResidual { unit: u.iter().map(|x| x * x).sum::<f64>() - 1.0, linear, linear_as_printed: printed })
}

// ---------------------------------------------------------------------------
// Prolate-spheroidal separation on the two-centre chart (x, y, z, τ).

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProlatePoint {
    pub zeta: f64,
    pub lambda: f64,
    pub phi: f64,
    pub tau: f64,
}

/// Centres at `z = ∓α`; `ζ = (r₁+r₂)/(2α)`, `λ = (r₁−r₂)/(2α)`.
pub fn to_prolate(alpha: f64, x: &[f64]) -> ProlatePoint {
    let rho2 = x[0] * x[0] + x[1] * x[1];
    let r1 = (rho2 + (x[2] + alpha).powi(2)).sqrt();
    let r2 = (rho2 + (x[2] - alpha).powi(2)).sqrt();
    ProlatePoint { zeta: (r1 + r2) / (2.0 * alpha), lambda: (r1 - r2) / (2.0 * alpha), phi: x[1].atan2(x[0]), tau: x[3] }
}

pub fn from_prolate(alpha: f64, p: &ProlatePoint) -> [f64; 4] {
    let rho = alpha * ((p.zeta * p.zeta - 1.0) * (1.0 - p.lambda * p.lambda)).max(0.0).sqrt();
    [rho * p.phi.cos(), rho * p.phi.sin(), alpha * p.zeta * p.lambda, p.tau]
}

/// `V = 2ζ/(α(ζ² − λ²))` and the connection coefficient `W = 2λ(ζ² − 1)/(ζ² − λ²)`
/// of `ω = W dφ` (orientation with `dω = ⋆dV`).
pub fn prolate_potentials(alpha: f64, zeta: f64, lambda: f64) -> (f64, f64) {
    let d = zeta * zeta - lambda * lambda;
    (2.0 * zeta / (alpha * d), 2.0 * lambda * (zeta * zeta - 1.0) / d)
}

/// `Φ = −2αζ dφ − αζλ dτ`, a potential for `−Ω³` on the two-centre chart
/// (chart components `(x, y, z, τ)`).
pub fn prolate_potential<D: DualNum<f64> + Copy>(alpha: f64, x: &[D; 4]) -> [D; 4] {
    let rho2 = x[0] * x[0] + x[1] * x[1];
    let r1 = (rho2 + (x[2] + alpha).powi(2)).sqrt();
    let r2 = (rho2 + (x[2] - alpha).powi(2)).sqrt();
    let zeta = (r1 + r2) / (2.0 * alpha);
    let lambda = (r1 - r2) / (2.0 * alpha);
    // dφ = (x dy − y dx)/ρ²
    let a_phi = -(zeta * (2.0 * alpha));
    [-(a_phi * x[1]) / rho2, a_phi * x[0] / rho2, D::from(0.0), -(zeta * lambda * alpha)]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProlateState {
    pub zeta: f64,
    pub lambda: f64,
    pub zeta_dot: f64,
    pub lambda_dot: f64,
    /// `g(u, ∂_φ)` and `g(u, ∂_τ)`.
    pub p_phi: f64,
    pub p_tau: f64,
}

pub fn prolate_state(model: &MetricModel, alpha: f64, x: &[f64], u: &[f64]) -> Result<ProlateState> {
    let q = [x[0], x[1], x[2], x[3]];
    let l = model.local(&q)?;
    let rho2 = x[0] * x[0] + x[1] * x[1];
    let r1 = (rho2 + (x[2] + alpha).powi(2)).sqrt();
    let r2 = (rho2 + (x[2] - alpha).powi(2)).sqrt();
    let dr1 = (x[0] * u[0] + x[1] * u[1] + (x[2] + alpha) * u[2]) / r1;
    let dr2 = (x[0] * u[0] + x[1] * u[1] + (x[2] - alpha) * u[2]) / r2;
    let uv = Vector4::from_column_slice(u);
    let dphi = Vector4::new(-x[1], x[0], 0.0, 0.0);
    let dtau = Vector4::new(0.0, 0.0, 0.0, 1.0);
    Ok(ProlateState {
        zeta: (r1 + r2) / (2.0 * alpha),
        lambda: (r1 - r2) / (2.0 * alpha),
        zeta_dot: (dr1 + dr2) / (2.0 * alpha),
        lambda_dot: (dr1 - dr2) / (2.0 * alpha),
        p_phi: l.dot(&uv, &dphi),
        p_tau: l.dot(&uv, &dtau),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProlateConstants {
    #[serde(rename = "E")]
    pub e_tau: f64,
    #[serde(rename = "J")]
    pub j_phi: f64,
    /// Separation constant.
    pub q_sep: f64,
    pub charge: f64,
    pub alpha: f64,
}

fn canonical(ps: &ProlateState, e: f64, alpha: f64) -> (f64, f64) {
    (ps.p_tau - e * alpha * ps.zeta * ps.lambda, ps.p_phi - 2.0 * e * alpha * ps.zeta)
}

/// Left-hand sides of the two separated equations (μ = 1):
/// ζ: `(ζ²−1)F_ζ² + (J² + 4eαJζ³ + 4e²α²ζ⁴)/(ζ²−1) − 2αζ`,
/// λ: `(1−λ²)G_λ² + (J² − 4EJλ + 4E²)/(1−λ²)`,
/// with `F_ζ = g_ζζ ζ̇`, `G_λ = g_λλ λ̇`. Along a separable trajectory the first
/// equals `−Q` and the second `+Q`.
pub fn prolate_branches(ps: &ProlateState, k: &ProlateConstants) -> (f64, f64) {
    let (z, l) = (ps.zeta, ps.lambda);
    let (v, _) = prolate_potentials(k.alpha, z, l);
    let a2 = k.alpha * k.alpha;
    let (zz, ll) = (z * z - 1.0, 1.0 - l * l);
    let fz = v * a2 * (z * z - l * l) / zz * ps.zeta_dot;
    let gl = v * a2 * (z * z - l * l) / ll * ps.lambda_dot;
    let (j, en, e, al) = (k.j_phi, k.e_tau, k.charge, k.alpha);
    let zeta_side = zz * fz * fz + (j * j + 4.0 * e * al * j * z.powi(3) + 4.0 * e * e * a2 * z.powi(4)) / zz - 2.0 * al * z;
    let lambda_side = ll * gl * gl + (j * j - 4.0 * en * j * l + 4.0 * en * en) / ll;
    (zeta_side, lambda_side)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EhHjReport {
    pub constants: ProlateConstants,
    pub zeta_branch: f64,
    pub lambda_branch: f64,
    pub max_residual: f64,
}

/// Separation residual along a trajectory on the two-centre chart. The charge
/// is the `c₃` component of the level set; the separation holds when
/// `c = (0, 0, c₃)` (field `F = −c₃Ω³`).
pub fn eh_hj_residual(traj: &Trajectory) -> Result<EhHjReport> {
    let MetricModel::GibbonsHawking(gh) = &traj.model else {
        return Err(Error::Invalid("prolate separation runs on the two-centre Gibbons–Hawking chart".into()));
    };
    let alpha = two_centre_alpha(gh)?;
    let e = match (traj.kind, traj.c) {
        (FlowKind::Geodesic, _) => 0.0,
        (FlowKind::Lorentz, Some(c)) => c[2],
        _ => return Err(Error::Invalid("separation needs a Lorentz or geodesic trajectory".into())),
    };
    let states: Vec<ProlateState> = traj
        .samples
        .iter()
        .map(|s| prolate_state(&traj.model, alpha, &s.coords, &s.u))
        .collect::<Result<_>>()?;
    for st in &states {
        if !(st.zeta > 1.0 && st.lambda.abs() < 1.0) {
            return Err(Error::SingularCoordinates(format!("prolate chart needs ζ > 1, |λ| < 1 (ζ = {}, λ = {})", st.zeta, st.lambda)));
        }
    }
    let (e_tau, j_phi) = canonical(&states[0], e, alpha);
    let mut k = ProlateConstants { e_tau, j_phi, q_sep: 0.0, charge: e, alpha };
    k.q_sep = prolate_branches(&states[0], &k).1;
    let (mut zb, mut lb) = (0.0_f64, 0.0_f64);
    for st in &states {
        let (en, j) = canonical(st, e, alpha);
        let kk = ProlateConstants { e_tau: en, j_phi: j, ..k };
        // The canonical momenta must stay put as well.
        let (zs, ls) = prolate_branches(st, &k);
        zb = zb.max((zs + k.q_sep).abs()).max((kk.j_phi - k.j_phi).abs());
        lb = lb.max((ls - k.q_sep).abs()).max((kk.e_tau - k.e_tau).abs());
    }
    Ok(EhHjReport { constants: k, zeta_branch: zb, lambda_branch: lb, max_residual: zb.max(lb) })
}

fn two_centre_alpha(gh: &GhData) -> Result<f64> {
    match gh.centers.as_slice() {
        [a, b] if gh.eps == 0.0 && a.m == 1.0 && b.m == 1.0 && (a.z + b.z).abs() < 1e-14 && a.z != b.z => {
            Ok(a.z.abs())
        }
        _ => Err(Error::Invalid("expected unit centres at z = ±α with eps = 0".into())),
    }
}

/// The chart used for the separation: centres at ±α, `V = 1/r₁ + 1/r₂`.
pub fn two_centre_model(alpha: f64) -> MetricModel {
    MetricModel::GibbonsHawking(GhData::eguchi_hanson(alpha))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radial_geodesic() {
        let alpha = 1.0;
        let d = eh_frame_rhs(alpha, &[2.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0], &[0.0; 3]).unwrap();
        // only ṙ and u̇⁴ = (f/r)(1 − 1) = 0 survive
        assert!((d[0] - f_of(2.0, alpha)).abs() < 1e-15);
        assert_eq!(&d[1..], &[0.0; 7]);
        assert!(eh_frame_rhs(alpha, &[0.9, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0], &[0.0; 3]).is_err());
    }

    #[test]
    fn frame_chart_round_trip() {
        let (alpha, q) = (1.0, [1.7, 0.8, 0.3, 2.0]);
        let u = [0.1, -0.3, 0.5, 0.2];
        let ub = frame_velocity(alpha, &q, &u);
        let back = chart_velocity(alpha, &q, &ub).unwrap();
        for i in 0..4 {
            assert!((back[i] - u[i]).abs() < 1e-14);
        }
        // agrees with the model coframe
        let e = MetricModel::EguchiHanson { alpha }.coframe_at(&q);
        let ub2 = e * Vector4::from(u);
        for i in 0..4 {
            assert!((ub2[i] - ub[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn angular_rhs_pure_c3() {
        let (alpha, r, c3, kappa) = (1.0, 1.5, 0.7, -1.0);
        let rates = angular_rhs(alpha, r, 1.1, 0.4, 0.2, &[0.0, 0.0, c3], &[0.0; 3], kappa).unwrap();
        let f = f_of(r, alpha);
        assert!(rates.phi.abs() < 1e-14 && rates.theta.abs() < 1e-14);
        assert!((rates.psi - kappa * c3 / (f * f)).abs() < 1e-13);
    }

    #[test]
    fn orbit_rotation_for_pure_c3() {
        // γ = 0, c = (0,0,c₃): (α, β) rotates at rate c₃
        let d = orbit_ode_rhs(&[1.0, 0.0, 0.0], 0.3, &[0.0, 0.0, 0.5]);
        assert_eq!(d, [0.0, 0.5, 0.0]);
    }

    #[test]
    fn h_equilibrium() {
        let h: f64 = 0.8;
        assert_eq!(h_ode_residual(h, 0.0, 0.0, 0.0, h.powi(3)), 0.0);
    }

    #[test]
    fn degenerate_constants() {
        assert!(matches!(
            EHOrbitConstants::from_initial(1.0, 2.0, [0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0; 3]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn prolate_identities() {
        let alpha = 0.7;
        let gh = GhData::eguchi_hanson(alpha);
        for x in [[0.3, -0.2, 0.5, 0.0], [1.2, 0.4, -2.0, 0.0], [0.05, 0.02, 0.1, 0.0]] {
            let p = to_prolate(alpha, &x);
            let (v, w) = prolate_potentials(alpha, p.zeta, p.lambda);
            assert!((v - gh.potential(x[0], x[1], x[2])).abs() < 1e-12);
            assert!((w - gh.azimuthal(x[0], x[1], x[2])).abs() < 1e-12);
            let back = from_prolate(alpha, &p);
            for i in 0..3 {
                assert!((back[i] - x[i]).abs() < 1e-12);
            }
        }
    }
}
