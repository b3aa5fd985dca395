//! Fubini–Study CP²: the tetrad form of the conformal geodesic equations, the
//! first integrals C_Y (from ∂_ψ) and C_K (ASD Kähler form), the closed-form
//! circles on r = const, the complex torsion and the cubic that maps
//! `(τ, |a|²)` to an orbit radius.
//!
//! Tetrad: `e¹ = kσ₁`, `e² = −kσ₂`, `e³ = r σ₃/(2(1+r²))`, `e⁴ = dr/(1+r²)`,
//! `k = r/(2√(1+r²))`; the sign of e² makes the orientation the one in which
//! `e¹² − e³⁴` is the (anti-self-dual) Kähler form.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::flows::CGState;
use crate::geometry::{ChartId, ChartPoint, MetricModel};
use crate::invariants::{CKYData, FormField};
use crate::quad;
use crate::roots;
use nalgebra::{Matrix4, Vector4};
use rayon::prelude::*;
use serde::Serialize;

/// Frame components `(ū, ā)` of a chart state.
pub fn to_tetrad(st: &CGState) -> Result<(Vector4<f64>, Vector4<f64>)> {
    let q = st.point.as4();
    let l = MetricModel::Cp2.local(&q)?;
    Ok((l.to_frame(&Vector4::from_column_slice(&st.u)), l.to_frame(&Vector4::from_column_slice(&st.a))))
}

pub fn from_tetrad(q: [f64; 4], u: &Vector4<f64>, a: &Vector4<f64>) -> Result<CGState> {
    let l = MetricModel::Cp2.local(&q)?;
    Ok(CGState {
        point: ChartPoint::new(ChartId::Polar, q.to_vec()),
        u: l.from_frame(u).as_slice().to_vec(),
        a: l.from_frame(a).as_slice().to_vec(),
    })
}

/// `(ṙ, u̇, ȧ)` of the tetrad system with `u = (α, β, γ, δ)`.
pub fn tetrad_rhs(r: f64, u: &Vector4<f64>, a: &Vector4<f64>) -> (f64, Vector4<f64>, Vector4<f64>) {
    let (al, be, ga, de) = (u[0], u[1], u[2], u[3]);
    let a2 = a.norm_squared();
    let ir = 1.0 / r;
    let du = Vector4::new(
        a[0] - 2.0 * r * be * ga - ir * al * de,
        a[1] + 2.0 * r * ga * al - ir * be * de,
        a[2] + r * ga * de - ir * ga * de,
        a[3] - r * ga * ga + ir * (1.0 - de * de),
    );
    let da = Vector4::new(
        ir * (be * a[2] - al * a[3] - ga * a[1]) - 2.0 * r * ga * a[1] - a2 * al,
        ir * (ga * a[0] - be * a[3] - al * a[2]) + 2.0 * r * ga * a[0] - a2 * be,
        ir * (al * a[1] - ga * a[3] - be * a[0]) + r * ga * a[3] - a2 * ga,
        ir * (al * a[0] + be * a[1] + ga * a[2]) - r * ga * a[2] - a2 * de,
    );
    ((1.0 + r * r) * de, du, da)
}

/// `C_Y = r²/(r²+1)(αa² − βa¹ + γa⁴ − δa³) + 2rγ/(r²+1)` and
/// `C_K = αa² − βa¹ − γa⁴ + δa³`.
pub fn first_integrals_tetrad(r: f64, u: &Vector4<f64>, a: &Vector4<f64>) -> (f64, f64) {
    let (al, be, ga, de) = (u[0], u[1], u[2], u[3]);
    let w = r * r + 1.0;
    let cy = r * r / w * (al * a[1] - be * a[0] + ga * a[3] - de * a[2]) + 2.0 * r * ga / w;
    let ck = al * a[1] - be * a[0] - ga * a[3] + de * a[2];
    (cy, ck)
}

pub fn cp2_first_integrals(st: &CGState) -> Result<(f64, f64)> {
    let (u, a) = to_tetrad(st)?;
    Ok(first_integrals_tetrad(st.point.coords[0], &u, &a))
}

/// `J(u)` for the complex structure of `e¹² − e³⁴`.
pub fn complex_structure(u: &Vector4<f64>) -> Vector4<f64> {
    Vector4::new(-u[1], u[0], u[3], -u[2])
}

/// Complex torsion `τ = g(J(u), a/|a|)`.
pub fn torsion(st: &CGState) -> Result<f64> {
    let (u, a) = to_tetrad(st)?;
    let n = a.norm();
    if n == 0.0 {
        return Err(Error::Degenerate("|a| = 0: the torsion of a geodesic is undefined".into()));
    }
    Ok(complex_structure(&u).dot(&a) / n)
}

fn frame_form(q: &[f64; 4], s: Matrix4<f64>) -> Matrix4<f64> {
    let e = MetricModel::Cp2.coframe_at(q);
    e.transpose() * s * e
}

fn e12_pm_e34(sign: f64) -> Matrix4<f64> {
    let mut s = Matrix4::zeros();
    s[(0, 1)] = 1.0;
    s[(1, 0)] = -1.0;
    s[(2, 3)] = sign;
    s[(3, 2)] = -sign;
    s
}

/// The parallel Kähler form `e¹² − e³⁴` (chart components), a CKY form with K = 0.
pub fn kahler_form(q: &[f64; 4]) -> Matrix4<f64> {
    frame_form(q, e12_pm_e34(-1.0))
}

/// The self-dual CKY form of `∂_ψ`: `r²/(r²+1)(e¹² + e³⁴)`.
pub fn psi_cky_form(q: &[f64; 4]) -> Matrix4<f64> {
    let r = q[0];
    frame_form(q, e12_pm_e34(1.0) * (r * r / (r * r + 1.0)))
}

pub fn kahler_cky() -> CKYData {
    CKYData::new("kahler", Arc::new(kahler_form), Arc::new(|_: &[f64; 4]| Vector4::zeros()))
}

/// CKY data for `∂_ψ`, with its one-form computed as the divergence.
pub fn psi_cky() -> CKYData {
    let y: FormField = Arc::new(psi_cky_form);
    CKYData::from_two_form(&MetricModel::Cp2, "psi", y)
}

/// Real roots of `2(rγ)³ − r²(C_Y − C_K) − C_Y = 0`, the value of γ on a circle
/// of constant r.
pub fn gamma_roots(r: f64, c_y: f64, c_k: f64) -> Vec<f64> {
    let r3 = r * r * r;
    let c0 = -r * r * (c_y - c_k) - c_y;
    // 2r³γ³ + c0 = 0 has exactly one real root.
    vec![(-c0 / (2.0 * r3)).cbrt()]
}

/// `B` from the first integrals (γ ≠ ±1).
pub fn b_from_integrals(r: f64, gamma: f64, c_y: f64, c_k: f64) -> Result<f64> {
    let den = 2.0 * r * r * (1.0 - gamma * gamma);
    if den == 0.0 {
        return Err(Error::Degenerate("γ = ±1".into()));
    }
    Ok((4.0 * r.powi(3) * (gamma.powi(3) - gamma) - r * r * (c_k + c_y) + 2.0 * r * gamma - c_y) / den)
}

/// The other admissible rotation rate, from `γrB + γ²r² + 1 = 0`:
/// `B = −γr − 1/(γr)`. These circles all have `τ² = 1`.
pub fn second_branch_b(r: f64, gamma: f64) -> f64 {
    -gamma * r - 1.0 / (gamma * r)
}

/// `|a|² = B²(1−γ²) + 4rγB(1−γ²) + r²γ²(4−3γ²) − 2γ² + 1/r²` on a constant-r circle.
pub fn accel_norm2(r: f64, gamma: f64, b: f64) -> f64 {
    let g2 = gamma * gamma;
    b * b * (1.0 - g2) + 4.0 * r * gamma * b * (1.0 - g2) + r * r * g2 * (4.0 - 3.0 * g2) - 2.0 * g2 + 1.0 / (r * r)
}

/// Constants of a circle on `r = const`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CP2Constants {
    pub r: f64,
    pub gamma: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// Integration constant of φ.
    pub c4: f64,
    #[serde(rename = "C_Y")]
    pub c_y: f64,
    #[serde(rename = "C_K")]
    pub c_k: f64,
    #[serde(rename = "P")]
    pub p: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    pub kappa: f64,
}

impl CP2Constants {
    /// The `B = −3γr` family.
    pub fn new(r: f64, gamma: f64, c: [f64; 4]) -> Result<Self> {
        Self::with_b(r, gamma, -3.0 * gamma * r, c)
    }

    /// Any `B`; only `B = −3γr` and [`second_branch_b`] give circles.
    pub fn with_b(r: f64, gamma: f64, b: f64, c: [f64; 4]) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Invalid(format!("r = {r} must be positive")));
        }
        if !(gamma.abs() <= 1.0) {
            return Err(Error::Invalid(format!("|γ| = {} > 1", gamma.abs())));
        }
        let w = 1.0 + r * r;
        let p = 2.0 * (w * (1.0 - gamma * gamma)).sqrt() / r;
        let q = b + 2.0 * w * gamma / r;
        let u = Vector4::new((1.0 - gamma * gamma).sqrt() * c[0].sin(), (1.0 - gamma * gamma).sqrt() * c[0].cos(), gamma, 0.0);
        let a = tetrad_acceleration(r, gamma, b, &u);
        let (c_y, c_k) = first_integrals_tetrad(r, &u, &a);
        Ok(CP2Constants { r, gamma, b, c1: c[0], c2: c[1], c3: c[2], c4: c[3], c_y, c_k, p, q, kappa: p.hypot(q) })
    }

    pub fn accel_norm2(&self) -> f64 {
        accel_norm2(self.r, self.gamma, self.b)
    }

    pub fn is_killing_branch(&self) -> bool {
        self.gamma.abs() == 1.0
    }
}

/// `a = (β(B+2rγ), −α(B+2rγ), 0, rγ² − 1/r)` for `u = (α, β, γ, 0)`.
fn tetrad_acceleration(r: f64, gamma: f64, b: f64, u: &Vector4<f64>) -> Vector4<f64> {
    let w = b + 2.0 * r * gamma;
    Vector4::new(u[1] * w, -u[0] * w, 0.0, r * gamma * gamma - 1.0 / r)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConstantRSample {
    pub s: f64,
    /// `(α, β, γ, δ = 0)`
    pub u: [f64; 4],
    pub a: [f64; 4],
    pub chi: f64,
    /// Chart point `(r, θ, φ, ψ)`.
    pub coords: [f64; 4],
}

impl ConstantRSample {
    pub fn state(&self) -> Result<CGState> {
        from_tetrad(self.coords, &Vector4::from(self.u), &Vector4::from(self.a))
    }
}

/// `(N, D)` with `χ = arccot(N/D)`:
/// `N = κ(c₂ cos κs − sin κs)`, `D = Q(c₃ + c₂ sin κs + cos κs)`; also `D̃ = D/Q`.
fn chi_parts(k: &CP2Constants, s: f64) -> (f64, f64, f64) {
    let (sn, cs) = (k.kappa * s).sin_cos();
    let dt = k.c3 + k.c2 * sn + cs;
    (k.kappa * (k.c2 * cs - sn), k.q * dt, dt)
}

/// `θ` from `cot θ = (Q − χ̇)/(P sin χ)`, written without the division:
/// `cot θ = (κ²c₃ − P²D̃)/(P√(N² + D²))`.
fn theta_at(k: &CP2Constants, s: f64) -> f64 {
    let (n, d, dt) = chi_parts(k, s);
    (k.p * n.hypot(d)).atan2(k.kappa * k.kappa * k.c3 - k.p * k.p * dt)
}

fn phi_rate(k: &CP2Constants, s: f64) -> f64 {
    let (n, d, _) = chi_parts(k, s);
    let rho = n.hypot(d);
    if rho == 0.0 {
        return 0.0;
    }
    k.p * (d / rho) / theta_at(k, s).sin()
}

/// Closed-form circle on `r = const` sampled at `s_grid` (ascending, starting
/// anywhere). For `|γ| = 1` it is the trajectory of ∂_ψ through `(θ, φ, ψ) =
/// (c₂, c₃, c₁)` — in that branch the constants are reused as a base point.
pub fn constant_r_solution(k: &CP2Constants, s_grid: &[f64]) -> Result<Vec<ConstantRSample>> {
    let r = k.r;
    if k.is_killing_branch() {
        let u = [0.0, 0.0, k.gamma, 0.0];
        let a = [0.0, 0.0, 0.0, (r * r - 1.0) / r];
        let rate = 2.0 * (1.0 + r * r) * k.gamma / r;
        return Ok(s_grid
            .iter()
            .map(|&s| ConstantRSample { s, u, a, chi: f64::NAN, coords: [r, k.c2, k.c3, k.c1 + rate * s] })
            .collect());
    }
    let sg = (1.0 - k.gamma * k.gamma).sqrt();
    let mut out = Vec::with_capacity(s_grid.len());
    // χ and φ are anchored at s = 0 (φ(0) = c₄, χ(0) the principal value) and
    // followed continuously; consecutive sub-steps move χ by much less than π.
    let (n0, d0, _) = chi_parts(k, 0.0);
    let mut chi = d0.atan2(n0);
    let mut phi = k.c4;
    let mut s_prev = 0.0;
    let dmax = 0.05 / k.kappa.max(k.q.abs()).max(1.0);
    for &s in s_grid {
        // φ̇ ∝ 1/sin²θ is sharply peaked near the poles: integrate piecewise
        let steps = ((s - s_prev).abs() / dmax).ceil().max(1.0) as usize;
        let mut t_prev = s_prev;
        for j in 1..=steps {
            let t = s_prev + (s - s_prev) * j as f64 / steps as f64;
            let (n, d, _) = chi_parts(k, t);
            let delta = d.atan2(n) - chi;
            chi += delta - std::f64::consts::TAU * (delta / std::f64::consts::TAU).round();
            if t != t_prev {
                phi += quad::integrate(|x| phi_rate(k, x), t_prev, t, 1e-13);
            }
            t_prev = t;
        }
        s_prev = s;
        let ang = k.b * s + k.c1;
        let u = [sg * ang.sin(), sg * ang.cos(), k.gamma, 0.0];
        let a = tetrad_acceleration(r, k.gamma, k.b, &Vector4::from(u));
        let psi = chi - k.b * s - k.c1 + FRAC_PI_2;
        out.push(ConstantRSample { s, u, a: [a[0], a[1], a[2], a[3]], chi, coords: [r, theta_at(k, s), phi, psi] });
    }
    Ok(out)
}

/// `(χ̇, θ̇)` of the closed form, differentiated exactly: with `D̃' = N`,
/// `Ṅ = −κ²(D̃ − c₃)`, `χ = atan2(QD̃, N)` and `θ = atan2(Pρ, κ²c₃ − P²D̃)`.
pub fn chi_theta_rates(k: &CP2Constants, s: f64) -> (f64, f64) {
    let (n, d, dt) = chi_parts(k, s);
    let k2 = k.kappa * k.kappa;
    let (nd, dd) = (-k2 * (dt - k.c3), k.q * n);
    let rho2 = n * n + d * d;
    let chi_dot = (n * dd - d * nd) / rho2;
    let rho = rho2.sqrt();
    let rho_dot = (n * nd + d * dd) / rho;
    let (x, y) = (k2 * k.c3 - k.p * k.p * dt, k.p * rho);
    let (xd, yd) = (-k.p * k.p * n, k.p * rho_dot);
    (chi_dot, (x * yd - y * xd) / (x * x + y * y))
}

/// Residual of a closed-form circle: the tetrad system against the exact
/// s-derivatives of `(ū, ā)`, and `(θ̇, ψ̇)` of the closed form against the chart
/// velocity of `ū` (φ̇ holds by construction of the quadrature). Returns the max.
pub fn constant_r_residual(k: &CP2Constants, s_end: f64, n: usize) -> Result<f64> {
    let grid: Vec<f64> = (0..n).map(|i| s_end * i as f64 / (n - 1).max(1) as f64).collect();
    let mut worst = 0.0_f64;
    for c in constant_r_solution(k, &grid)? {
        let (u, a) = (Vector4::from(c.u), Vector4::from(c.a));
        let (dr, du, da) = tetrad_rhs(k.r, &u, &a);
        let w = k.b + 2.0 * k.r * k.gamma;
        let du_exact = Vector4::new(k.b * u[1], -k.b * u[0], 0.0, 0.0);
        let da_exact = Vector4::new(-k.b * u[0] * w, -k.b * u[1] * w, 0.0, 0.0);
        worst = worst.max(dr.abs()).max((du - du_exact).amax()).max((da - da_exact).amax());
        if k.is_killing_branch() {
            continue;
        }
        let uc = MetricModel::Cp2.local(&c.coords)?.from_frame(&u);
        let (chi_dot, theta_dot) = chi_theta_rates(k, c.s);
        worst = worst.max((theta_dot - uc[1]).abs()).max((chi_dot - k.b - uc[3]).abs());
    }
    Ok(worst)
}

/// The cubic `F(X) = X³(A − C) − X²(1 + 2A + 4A² − 6C) + X(2 + 5A + 4A² + 4A³ − 12C)
/// − (1 + 4A + 4A² − 8C)` with `A = |a|²`, `C = C_K²`.
pub fn cubic_f(x: f64, a: f64, ck2: f64) -> f64 {
    let [c0, c1, c2, c3] = cubic_coeffs(a, ck2);
    ((c3 * x + c2) * x + c1) * x + c0
}

/// Coefficients of [`cubic_f`] in ascending order.
pub fn cubic_coeffs(a: f64, ck2: f64) -> [f64; 4] {
    [
        -(1.0 + 4.0 * a + 4.0 * a * a - 8.0 * ck2),
        2.0 + 5.0 * a + 4.0 * a * a + 4.0 * a * a * a - 12.0 * ck2,
        -(1.0 + 2.0 * a + 4.0 * a * a - 6.0 * ck2),
        a - ck2,
    ]
}

/// Factored form `(XA − 1)(X − 1 − 2A)² − C(X − 2)³`.
pub fn cubic_f_factored(x: f64, a: f64, ck2: f64) -> f64 {
    (x * a - 1.0) * (x - 1.0 - 2.0 * a).powi(2) - ck2 * (x - 2.0).powi(3)
}

/// `|a|² = γ²r² − 2γ² + 1/r²` and `C_K = γ(1 + r² − 2γ²r²)/r` on `B = −3γr` circles.
pub fn forward_tau_a(r2: f64, gamma: f64) -> (f64, f64) {
    let g2 = gamma * gamma;
    let a = g2 * r2 - 2.0 * g2 + 1.0 / r2;
    let ck = gamma * (1.0 + r2 - 2.0 * g2 * r2) / r2.sqrt();
    (ck / a.sqrt(), a)
}

/// `1 − τ² = (1−γ²)(1−2r²γ²)²/((1−γ²) + γ²(r²−1)²)`.
pub fn one_minus_tau2(r2: f64, gamma: f64) -> f64 {
    let g2 = gamma * gamma;
    (1.0 - g2) * (1.0 - 2.0 * r2 * g2).powi(2) / ((1.0 - g2) + g2 * (r2 - 1.0).powi(2))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Chosen {
    pub r2: f64,
    pub gamma2: f64,
    /// γ with the sign that reproduces the sign of τ; the reversed curve has −γ and −τ.
    pub gamma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cp2Classification {
    pub tau: f64,
    #[serde(rename = "A")]
    pub a: f64,
    /// Positive roots r² of the cubic (ascending); for A = 1/2 the triple root.
    pub roots: Vec<f64>,
    pub chosen: Chosen,
    /// For A = 1/2: all γ in (−1, 1) with γ(3 − 4γ²) = τ.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub gamma_roots: Vec<f64>,
    pub checks: ClassificationChecks,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassificationChecks {
    /// `|F(r²)|` at the chosen root.
    pub cubic_residual: f64,
    /// Round trip `(r, γ) → (τ, A)` against the inputs.
    pub tau_error: f64,
    pub a_error: f64,
    pub gamma2_below_one: bool,
}

fn bracket_root(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> Result<f64> {
    let (flo, fhi) = (f(lo), f(hi));
    let scale = 1e-14 * (1.0 + hi.abs());
    if flo.abs() <= scale {
        return Ok(lo);
    }
    if fhi.abs() <= scale {
        return Ok(hi);
    }
    roots::solve(f, None::<fn(f64) -> f64>, lo, hi, 1e-15)
}

/// Finds `(r², γ)` with given torsion and `|a|²` on the `B = −3γr` family.
pub fn roots_from_tau_a(tau: f64, a: f64) -> Result<Cp2Classification> {
    if !(tau.abs() < 1.0) {
        return Err(Error::Invalid(format!("|τ| = {} must be < 1 (|τ| = 1 is the ∂_ψ branch)", tau.abs())));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Invalid(format!("|a|² = {a} must be positive")));
    }
    let ck2 = tau * tau * a;
    if a == 0.5 {
        let g_roots = roots::polynomial_roots(&[-tau, 3.0, 0.0, -4.0], -1.0, 1.0, 1e-15);
        let g = g_roots.iter().copied().fold(f64::NAN, |acc, x| if acc.is_nan() || x.abs() < acc.abs() { x } else { acc });
        let (t, aa) = forward_tau_a(2.0, g);
        return Ok(Cp2Classification {
            tau,
            a,
            roots: vec![2.0],
            chosen: Chosen { r2: 2.0, gamma2: g * g, gamma: g },
            gamma_roots: g_roots,
            checks: ClassificationChecks {
                cubic_residual: cubic_f(2.0, a, ck2).abs(),
                tau_error: (t - tau).abs(),
                a_error: (aa - a).abs(),
                gamma2_below_one: g * g < 1.0,
            },
        });
    }
    let f = |x: f64| cubic_f(x, a, ck2);
    let (low, mid) = (1.0 + 2.0 * a, 2.0);
    let inv = 1.0 / a;
    // the largest root lies above max(1/A, 1 + 2A); F → +∞
    let start = inv.max(low);
    let mut hi = 2.0 * start;
    while f(hi) <= 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Bracket { lo: start, hi, flo: f(start), fhi: f(hi) });
        }
    }
    let ranges = if a < 0.5 { [(0.0, low), (low, mid), (inv, hi)] } else { [(0.0, inv), (mid, low), (low, hi)] };
    let mut found = Vec::with_capacity(3);
    for (lo, up) in ranges {
        found.push(bracket_root(&f, lo, up)?);
    }
    let r2 = found[2];
    let gamma2 = (r2 * a - 1.0) / (r2 * (r2 - 2.0));
    if !(gamma2 < 1.0 && gamma2 >= -1e-15) {
        return Err(Error::Numeric(format!("γ² = {gamma2} outside [0, 1) at r² = {r2}")));
    }
    let g_abs = gamma2.max(0.0).sqrt();
    let ck_sign = (1.0 + r2 - 2.0 * gamma2 * r2).signum();
    let gamma = if tau == 0.0 { g_abs } else { g_abs * tau.signum() * ck_sign };
    let (t, aa) = forward_tau_a(r2, gamma);
    Ok(Cp2Classification {
        tau,
        a,
        roots: found,
        chosen: Chosen { r2, gamma2, gamma },
        gamma_roots: vec![],
        checks: ClassificationChecks {
            cubic_residual: f(r2).abs(),
            tau_error: (t - tau).abs(),
            a_error: (aa - a).abs(),
            gamma2_below_one: gamma2 < 1.0,
        },
    })
}

/// Classification over a grid of `(τ, A)` values.
pub fn classify_grid(taus: &[f64], accels: &[f64]) -> Vec<Result<Cp2Classification>> {
    let pairs: Vec<(f64, f64)> = taus.iter().flat_map(|&t| accels.iter().map(move |&a| (t, a))).collect();
    pairs.par_iter().map(|&(t, a)| roots_from_tau_a(t, a)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geodesic_integrals_vanish() {
        let u = Vector4::new(0.6, 0.8, 0.0, 0.0);
        let (cy, ck) = first_integrals_tetrad(1.3, &u, &Vector4::zeros());
        assert_eq!((cy, ck), (0.0, 0.0));
    }

    #[test]
    fn cubic_special_values() {
        for (a, t) in [(0.3, 0.4), (0.9, -0.7), (2.0, 0.1)] {
            let c = t * t * a;
            assert!((cubic_f(2.0, a, c) - (2.0 * a - 1.0_f64).powi(3)).abs() < 1e-13);
            assert!((cubic_f(1.0 + 2.0 * a, a, c) + c * (2.0 * a - 1.0_f64).powi(3)).abs() < 1e-12);
            assert!((cubic_f(1.0 / a, a, c) - t * t / (a * a) * (2.0 * a - 1.0_f64).powi(3)).abs() < 1e-12);
        }
    }

    #[test]
    fn half_accel_is_triple_root() {
        let c = roots_from_tau_a(0.5, 0.5).unwrap();
        assert_eq!(c.roots, vec![2.0]);
        assert_eq!(c.gamma_roots.len(), 3);
        for g in &c.gamma_roots {
            assert!((g * (3.0 - 4.0 * g * g) - 0.5).abs() < 1e-12);
        }
        assert_eq!(cubic_f(2.0, 0.5, 0.125), 0.0);
    }

    #[test]
    fn torsion_of_geodesic_is_an_error() {
        let st = from_tetrad([1.0, 1.0, 0.0, 0.0], &Vector4::new(1.0, 0.0, 0.0, 0.0), &Vector4::zeros()).unwrap();
        assert!(matches!(torsion(&st), Err(Error::Degenerate(_))));
    }

    #[test]
    fn killing_branch_at_unit_radius_is_geodesic() {
        let k = CP2Constants::new(1.0, 1.0, [0.0; 4]).unwrap();
        let s = constant_r_solution(&k, &[0.0, 1.0]).unwrap();
        assert_eq!(Vector4::from(s[1].a).norm_squared(), 0.0);
        assert!((s[1].coords[3] - 4.0).abs() < 1e-15);
    }
}
