//! Anti-self-dual Taub–NUT: Killing–Yano and CKY tensors, the Maxwell
//! potential of `F = −Ω³`, parabolic coordinates, Hamilton–Jacobi separation
//! with charge and the resulting elliptic quadratures.
//!
//! Chart order is `(r, θ, φ, ψ)`. A Lorentz trajectory with level set
//! `c = (0, 0, e)` carries charge `e` in the field `F = dΦ = −Ω³`.

use crate::error::{Error, Result};
use crate::flows::{FlowKind, Trajectory};
use crate::geometry::{ChartId, ChartPoint, MetricModel};
use crate::invariants::{exterior_derivative, CKYData, FormField, OneFormField, PhasePoint};
use crate::{quad, roots};
use nalgebra::{Matrix4, Vector4};
use num_dual::DualNum;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParabolicPoint {
    pub eta: f64,
    pub xi: f64,
    pub phi: f64,
    pub psi: f64,
}

pub fn to_parabolic(p: &ChartPoint) -> Result<ParabolicPoint> {
    if p.chart != ChartId::Polar || p.coords.len() != 4 {
        return Err(Error::Invalid("parabolic coordinates need a polar chart point".into()));
    }
    let (r, th) = (p.coords[0], p.coords[1]);
    if !(r > 0.0) {
        return Err(Error::Domain { model: "TaubNUT".into(), bound: format!("r > 0 violated (r = {r})") });
    }
    let c = th.cos();
    Ok(ParabolicPoint { eta: r * (1.0 + c), xi: r * (1.0 - c), phi: p.coords[2], psi: p.coords[3] })
}

pub fn from_parabolic(pp: &ParabolicPoint) -> ChartPoint {
    let r = 0.5 * (pp.eta + pp.xi);
    let th = (2.0 * (pp.eta * pp.xi).sqrt()).atan2(pp.eta - pp.xi);
    ChartPoint::new(ChartId::Polar, vec![r, th, pp.phi, pp.psi])
}

/// `(z, ρ)` of the Gibbons–Hawking base.
pub fn cylindrical(pp: &ParabolicPoint) -> (f64, f64) {
    (0.5 * (pp.eta - pp.xi), (pp.eta * pp.xi).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationConstants {
    /// Canonical `p_ψ`.
    #[serde(rename = "E")]
    pub p_psi: f64,
    /// Canonical `p_φ`.
    #[serde(rename = "J")]
    pub p_phi: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    pub mu: f64,
    #[serde(rename = "e")]
    pub charge: f64,
    pub m: f64,
}

/// Coefficients `u₀…u₄` of `U(x; E, Q)²`, read off from the η-branch of the
/// separated equation `4ηG_η² = Q + μ²(η+m) − J²/η − 2JEm/η − E²(η + m²/η + 2m)
/// − eJ(η+2m) − eE(η² + 3mη) − ¼e²η(η+2m)²` after multiplication by `4η`.
pub fn quartic_coeffs(e_psi: f64, q: f64, k: &SeparationConstants) -> [f64; 5] {
    let (j, mu2, e, m) = (k.p_phi, k.mu * k.mu, k.charge, k.m);
    [
        -4.0 * (j + e_psi * m).powi(2),
        4.0 * (q + m * (mu2 - 2.0 * j * e - 2.0 * e_psi * e_psi)),
        4.0 * (mu2 - m * m * e * e - e_psi * e_psi - j * e - 3.0 * e_psi * m * e),
        -4.0 * e * (e_psi + m * e),
        -e * e,
    ]
}

pub fn radicand(x: f64, e_psi: f64, q: f64, k: &SeparationConstants) -> f64 {
    quartic_coeffs(e_psi, q, k).iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// `U = √(u₀ + u₁x + … + u₄x⁴)`.
pub fn quartic_u(x: f64, e_psi: f64, q: f64, k: &SeparationConstants) -> Result<f64> {
    let r = radicand(x, e_psi, q, k);
    if r < 0.0 {
        return Err(Error::TurningPoint { x, radicand: r });
    }
    Ok(r.sqrt())
}

/// `Φ = −r cosθ dψ − (mr + ½r² sin²θ) dφ`.
pub fn potential<D: DualNum<f64> + Copy>(q: &[D; 4], m: f64) -> [D; 4] {
    let (r, th) = (q[0], q[1]);
    let (s, c) = th.sin_cos();
    let z = D::from(0.0);
    [z, z, -(r * m + r * r * s * s * 0.5), -(r * c)]
}

/// `F = dΦ` in chart components.
pub fn maxwell_field(m: f64, q: &[f64; 4]) -> Matrix4<f64> {
    exterior_derivative(|x| potential(x, m), q)
}

/// `(σ₁, σ₂, σ₃)` with `σ₁ + iσ₂ = e^{−iψ}(dθ + i sinθ dφ)`, `σ₃ = dψ + cosθ dφ`.
pub fn sigma_forms<D: DualNum<f64> + Copy>(q: &[D; 4]) -> [[D; 4]; 3] {
    let (st, ct) = q[1].sin_cos();
    let (sp, cp) = q[3].sin_cos();
    let z = D::from(0.0);
    [[z, cp, st * sp, z], [z, -sp, st * cp, z], [z, z, ct, D::from(1.0)]]
}

fn wedge(a: &[f64; 4], b: &[f64; 4]) -> Matrix4<f64> {
    Matrix4::from_fn(|i, j| a[i] * b[j] - a[j] * b[i])
}


/// `dψ + m cosθ dφ` scaled by `V^p`.
fn fibre_form<D: DualNum<f64> + Copy>(q: &[D; 4], m: f64, p: i32) -> [D; 4] {
    let v = q[0].recip() * m + 1.0;
    let vp = v.powi(p);
    let z = D::from(0.0);
    [z, z, q[1].cos() * m * vp, vp]
}

fn require_nut(m: f64) -> Result<()> {
    if m > 0.0 {
        Ok(())
    } else {
        Err(Error::Degenerate(format!("the Taub–NUT CKY tensors need m > 0 (m = {m})")))
    }
}

/// `Y = (r³/m) d(V(dψ + m cosθ dφ))`, self-dual.
pub fn y_form(m: f64) -> Result<FormField> {
    require_nut(m)?;
    Ok(Arc::new(move |q: &[f64; 4]| exterior_derivative(|x| fibre_form(x, m, 1), q) * (q[0].powi(3) / m)))
}

/// `W = −((r+m)³/m) d(V⁻¹(dψ + m cosθ dφ))`, anti-self-dual.
pub fn w_form(m: f64) -> Result<FormField> {
    require_nut(m)?;
    Ok(Arc::new(move |q: &[f64; 4]| exterior_derivative(|x| fibre_form(x, m, -1), q) * (-(q[0] + m).powi(3) / m)))
}

/// Killing–Yano form `Z = (dψ + m cosθ dφ) ∧ dr + (2r+m)(r+m) r σ₁∧σ₂`.
pub fn z_form(m: f64) -> FormField {
    Arc::new(move |q: &[f64; 4]| {
        let s = sigma_forms(q);
        let fib = [0.0, 0.0, m * q[1].cos(), 1.0];
        let r = q[0];
        wedge(&fib, &[1.0, 0.0, 0.0, 0.0]) + wedge(&s[0], &s[1]) * ((2.0 * r + m) * (r + m) * r)
    })
}

/// `g(∂_ψ, ·)`.
pub fn killing_psi_form(m: f64) -> OneFormField {
    Arc::new(move |q: &[f64; 4]| {
        let v = 1.0 + m / q[0];
        Vector4::new(0.0, 0.0, m * q[1].cos() / v, 1.0 / v)
    })
}

pub fn cky_y(m: f64) -> Result<CKYData> {
    Ok(CKYData::from_two_form(&MetricModel::TaubNut { m }, "Y", y_form(m)?))
}

pub fn cky_w(m: f64) -> Result<CKYData> {
    Ok(CKYData::from_two_form(&MetricModel::TaubNut { m }, "W", w_form(m)?))
}

/// Killing–Yano: the divergence part vanishes.
pub fn ky_z(m: f64) -> CKYData {
    CKYData::new("Z", z_form(m), Arc::new(|_| Vector4::zeros()))
}

/// The quadratic integral built from the CKY form W and the field F:
/// `e W_ac F_b^c u^a u^b − 2H g(∂_ψ, u)`. With the Lorentz force
/// `a^c = e F^c_b u^b` this is `−(W(u, a) + K(u))` on unit-speed curves, minus
/// the CKY first integral of W, and equals the momentum-form `W` pointwise.
pub fn w_integral_velocity(m: f64, e: f64, q: &[f64; 4], u: &[f64]) -> Result<f64> {
    let model = MetricModel::TaubNut { m };
    let l = model.local(q)?;
    let w = w_form(m)?(q);
    // F_b^c = F_bd g^dc, arranged as the matrix (c, b)
    let f_lower_first = (maxwell_field(m, q) * l.ginv).transpose();
    let u = Vector4::from_column_slice(u);
    let h = 0.5 * l.dot(&u, &u);
    Ok(e * u.dot(&(w * f_lower_first * u)) - 2.0 * h * killing_psi_form(m)(q).dot(&u))
}

/// Parabolic positions and rates `(η, ξ, η̇, ξ̇)` of a chart state.
pub fn parabolic_rates(coords: &[f64], u: &[f64]) -> (f64, f64, f64, f64) {
    let (r, th) = (coords[0], coords[1]);
    let (s, c) = th.sin_cos();
    let (dr, dth) = (u[0], u[1]);
    (r * (1.0 + c), r * (1.0 - c), dr * (1.0 + c) - r * s * dth, dr * (1.0 - c) + r * s * dth)
}

fn tn_params(traj: &Trajectory) -> Result<(f64, f64)> {
    let MetricModel::TaubNut { m } = traj.model else {
        return Err(Error::Invalid(format!("expected a Taub–NUT trajectory, got {}", traj.model.name())));
    };
    let e = match (traj.kind, traj.c) {
        (FlowKind::Geodesic, _) => 0.0,
        (FlowKind::Lorentz, Some(c)) => {
            if c[0] != 0.0 || c[1] != 0.0 {
                return Err(Error::Invalid("separation assumes the level set c = (0, 0, e)".into()));
            }
            c[2]
        }
        _ => return Err(Error::Invalid("separation needs a Lorentz or geodesic trajectory".into())),
    };
    if traj.samples.is_empty() {
        return Err(Error::Invalid("empty trajectory".into()));
    }
    Ok((m, e))
}

/// Canonical constants at sample 0; `Q` is solved from the η-branch.
pub fn extract_constants(traj: &Trajectory) -> Result<SeparationConstants> {
    let (m, e) = tn_params(traj)?;
    let s0 = &traj.samples[0];
    let pp = PhasePoint::from_velocity(&traj.model, &ChartPoint::new(ChartId::Polar, s0.coords.clone()), &s0.u, e)?;
    let t = crate::invariants::taubnut_integrals(&pp, m)?;
    let (eta, xi, deta, _) = parabolic_rates(&s0.coords, &s0.u);
    if eta < 1e-8 || xi < 1e-8 {
        log::warn!("trajectory starts on the symmetry axis (η = {eta}, ξ = {xi})");
    }
    let mut k = SeparationConstants { p_psi: t.k, p_phi: t.l, q: 0.0, mu: 1.0, charge: e, m };
    let lhs = deta * (eta + xi + 2.0 * m);
    k.q = (lhs * lhs - radicand(eta, t.k, 0.0, &k)) / (4.0 * eta);
    Ok(k)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HjReport {
    /// Largest residual of the separated equations `4ηG_η² = …`, `4ξF_ξ² = …`.
    pub max_residual: f64,
    pub eta_branch: f64,
    pub xi_branch: f64,
    /// `|η̇(η+ξ+2m) − sign·U(η)|` with the sign following η̇ (and likewise for ξ).
    pub max_unsquared: f64,
    pub eta_turning_points: usize,
    pub xi_turning_points: usize,
}

pub fn hj_residual(traj: &Trajectory, k: &SeparationConstants) -> Result<HjReport> {
    tn_params(traj)?;
    let m = k.m;
    let (mut eb, mut xb, mut un) = (0.0_f64, 0.0_f64, 0.0_f64);
    let (mut te, mut tx) = (0, 0);
    let mut prev: Option<(f64, f64)> = None;
    for smp in &traj.samples {
        let (eta, xi, de, dx) = parabolic_rates(&smp.coords, &smp.u);
        if eta < 1e-8 || xi < 1e-8 {
            log::warn!("sample at s = {} touches the symmetry axis", smp.s);
            continue;
        }
        let x = eta + xi + 2.0 * m;
        let (le, lx) = (de * x, dx * x);
        let (ue2, ux2) = (radicand(eta, k.p_psi, k.q, k), radicand(xi, -k.p_psi, -k.q, k));
        eb = eb.max((le * le - ue2).abs() / (4.0 * eta));
        xb = xb.max((lx * lx - ux2).abs() / (4.0 * xi));
        let se = if de >= 0.0 { 1.0 } else { -1.0 };
        let sx = if dx >= 0.0 { 1.0 } else { -1.0 };
        un = un.max((le - se * ue2.max(0.0).sqrt()).abs()).max((lx - sx * ux2.max(0.0).sqrt()).abs());
        if let Some((pe, px)) = prev {
            te += usize::from(pe * de < 0.0);
            tx += usize::from(px * dx < 0.0);
        }
        prev = Some((de, dx));
    }
    Ok(HjReport {
        max_residual: eb.max(xb),
        eta_branch: eb,
        xi_branch: xb,
        max_unsquared: un,
        eta_turning_points: te,
        xi_turning_points: tx,
    })
}

fn branch_integral(lo: f64, hi: f64, e_psi: f64, q: f64, k: &SeparationConstants) -> Result<f64> {
    if lo == hi {
        return Ok(0.0);
    }
    let (a, b) = (lo.min(hi), lo.max(hi));
    let coeffs = quartic_coeffs(e_psi, q, k);
    let scale = (b - a).max(1e-300);
    for root in roots::polynomial_roots(&coeffs, a, b, 1e-12) {
        if root - a > 1e-9 * scale && b - root > 1e-9 * scale {
            return Err(Error::SplitRequired { root });
        }
    }
    let mid = 0.5 * (a + b);
    let rm = radicand(mid, e_psi, q, k);
    if rm <= 0.0 {
        return Err(Error::TurningPoint { x: mid, radicand: rm });
    }
    let v = quad::integrate_endpoint_singular(|x, _, _| radicand(x, e_psi, q, k).max(0.0).sqrt().recip(), a, b, 1e-13);
    Ok(if hi >= lo { v } else { -v })
}

/// `(∫dη/U(η; E, Q), ∫dξ/U(ξ; −E, −Q))` over the given ranges.
pub fn unparam_quadrature(eta_range: (f64, f64), xi_range: (f64, f64), k: &SeparationConstants) -> Result<(f64, f64)> {
    Ok((
        branch_integral(eta_range.0, eta_range.1, k.p_psi, k.q, k)?,
        branch_integral(xi_range.0, xi_range.1, -k.p_psi, -k.q, k)?,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadratureCheck {
    pub s_range: (f64, f64),
    pub eta_integral: f64,
    pub xi_integral: f64,
    /// `∫ ds/(η+ξ+2m)` along the same segment; both integrals equal it in magnitude.
    pub arc_integral: f64,
    pub mismatch: f64,
}

/// Compare the two quadratures on the longest sample segment along which
/// neither η̇ nor ξ̇ changes sign.
pub fn quadrature_check(traj: &Trajectory, k: &SeparationConstants) -> Result<QuadratureCheck> {
    tn_params(traj)?;
    let rates: Vec<(f64, f64, f64, f64)> =
        traj.samples.iter().map(|s| parabolic_rates(&s.coords, &s.u)).collect();
    let n = rates.len();
    let (mut best, mut start) = ((0, 0), 0);
    for i in 1..n {
        let flip = rates[i].2 * rates[i - 1].2 <= 0.0 || rates[i].3 * rates[i - 1].3 <= 0.0;
        if flip {
            start = i;
        } else if i - start > best.1 - best.0 {
            best = (start, i);
        }
    }
    // Keep away from the turning points that bound the segment.
    let (i0, i1) = (best.0 + 1, best.1.saturating_sub(1));
    if i1 <= i0 {
        return Err(Error::Degenerate("no monotone trajectory segment available".into()));
    }
    let (a, b) = (&traj.samples[i0], &traj.samples[i1]);
    let (ea, xa, ..) = rates[i0];
    let (eb, xb, ..) = rates[i1];
    let (ie, ix) = unparam_quadrature((ea, eb), (xa, xb), k)?;
    let arc = quad::integrate(
        |s| {
            let st = traj.dense_at(s).expect("dense output");
            let (e, x, ..) = parabolic_rates(&st[..4], &st[4..8]);
            1.0 / (e + x + 2.0 * k.m)
        },
        a.s,
        b.s,
        1e-13,
    );
    Ok(QuadratureCheck {
        s_range: (a.s, b.s),
        eta_integral: ie,
        xi_integral: ix,
        arc_integral: arc,
        mismatch: (ie.abs() - ix.abs()).abs(),
    })
}
