//! First integrals: conformal Killing–Yano integrals, the Taub–NUT set
//! (K, L, H, W), Poisson brackets of the charged symplectic form
//! `dP_a ∧ dq^a + eF` and involution checks.

use crate::error::{Error, Result};
use crate::fd;
use crate::flows::CGState;
use crate::geometry::{ChartId, ChartPoint, MetricModel};
use nalgebra::{Matrix4, Vector4};
use num_dual::Dual64;
use serde::Serialize;
use std::sync::Arc;

pub type FormField = Arc<dyn Fn(&[f64; 4]) -> Matrix4<f64> + Send + Sync>;
pub type OneFormField = Arc<dyn Fn(&[f64; 4]) -> Vector4<f64> + Send + Sync>;

/// `dA` of a one-form given by a dual-number evaluator; exact to rounding.
pub fn exterior_derivative<A>(a: A, q: &[f64; 4]) -> Matrix4<f64>
where
    A: Fn(&[Dual64; 4]) -> [Dual64; 4],
{
    let mut da = Matrix4::zeros();
    for k in 0..4 {
        let qd: [Dual64; 4] = std::array::from_fn(|j| Dual64::new(q[j], if j == k { 1.0 } else { 0.0 }));
        let v = a(&qd);
        for n in 0..4 {
            // ∂_k A_n contributes to (dA)_{kn}
            da[(k, n)] += v[n].eps;
            da[(n, k)] -= v[n].eps;
        }
    }
    da
}

/// A two-form `Y` together with the one-form `K` in
/// `∇_a Y_bc = ∇_[a Y_bc] − 2 g_a[b K_c]`.
#[derive(Clone)]
pub struct CKYData {
    pub name: String,
    pub y: FormField,
    pub k: OneFormField,
}

impl std::fmt::Debug for CKYData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CKYData").field("name", &self.name).finish_non_exhaustive()
    }
}

/// `K_c = −⅓ ∇^a Y_ac`, by finite differences.
pub fn divergence_one_form(model: &MetricModel, y: &dyn Fn(&[f64; 4]) -> Matrix4<f64>, q: &[f64; 4]) -> Vector4<f64> {
    let nab = fd::covariant_two_form(model, y, q);
    let ginv = model.local_unchecked(q).ginv;
    Vector4::from_fn(|c, _| {
        let mut s = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                s += ginv[(a, b)] * nab[b][a][c];
            }
        }
        -s / 3.0
    })
}

impl CKYData {
    pub fn new(name: &str, y: FormField, k: OneFormField) -> Self {
        CKYData { name: name.into(), y, k }
    }

    /// Take `K` from the divergence of `Y`.
    pub fn from_two_form(model: &MetricModel, name: &str, y: FormField) -> Self {
        let (m, yy) = (model.clone(), y.clone());
        let k: OneFormField = Arc::new(move |q| divergence_one_form(&m, yy.as_ref(), q));
        CKYData { name: name.into(), y, k }
    }

    pub fn y_at(&self, q: &[f64; 4]) -> Matrix4<f64> {
        (self.y)(q)
    }

    pub fn k_at(&self, q: &[f64; 4]) -> Vector4<f64> {
        (self.k)(q)
    }
}

/// Largest chart component of `∇_a Y_bc − ∇_[a Y_bc] + 2 g_a[b K_c]` at one point.
pub fn cky_residual_at(model: &MetricModel, cky: &CKYData, q: &[f64; 4]) -> Result<f64> {
    let l = model.local(q)?;
    let nab = fd::covariant_two_form(model, cky.y.as_ref(), q);
    let k = cky.k_at(q);
    let mut worst = 0.0_f64;
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                let alt = (nab[a][b][c] + nab[b][c][a] + nab[c][a][b]) / 3.0;
                let r = nab[a][b][c] - alt + l.g[(a, b)] * k[c] - l.g[(a, c)] * k[b];
                worst = worst.max(r.abs());
            }
        }
    }
    Ok(worst)
}

pub fn cky_residual(model: &MetricModel, cky: &CKYData, points: &[[f64; 4]]) -> Result<f64> {
    let mut worst = 0.0_f64;
    for q in points {
        worst = worst.max(cky_residual_at(model, cky, q)?);
    }
    Ok(worst)
}

/// `Q = Y(u, a) + K(u)`, conserved along conformal geodesics of Einstein
/// metrics whenever `K` is Killing.
pub fn cky_first_integral(cky: &CKYData, st: &CGState) -> f64 {
    let q = st.point.as4();
    let u = Vector4::from_column_slice(&st.u);
    let a = Vector4::from_column_slice(&st.a);
    u.dot(&(cky.y_at(&q) * a)) + cky.k_at(&q).dot(&u)
}

/// Phase-space point `(q, P)` with mechanical momentum `P_a = g_ab u^b`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhasePoint {
    pub q: ChartPoint,
    pub p: Vec<f64>,
    pub e: f64,
}

impl PhasePoint {
    pub fn new(q: ChartPoint, p: Vec<f64>, e: f64) -> Result<Self> {
        if q.coords.len() != p.len() {
            return Err(Error::Invalid("momentum and position dimensions differ".into()));
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid("non-finite momentum".into()));
        }
        Ok(PhasePoint { q, p, e })
    }

    pub fn from_velocity(model: &MetricModel, q: &ChartPoint, u: &[f64], e: f64) -> Result<Self> {
        let l = model.local(&q.as4())?;
        let p = l.g * Vector4::from_column_slice(u);
        PhasePoint::new(q.clone(), p.as_slice().to_vec(), e)
    }

    pub fn velocity(&self, model: &MetricModel) -> Result<Vec<f64>> {
        let l = model.local(&self.q.as4())?;
        Ok((l.ginv * Vector4::from_column_slice(&self.p)).as_slice().to_vec())
    }

    fn flat(&self) -> Vec<f64> {
        let mut v = self.q.coords.clone();
        v.extend_from_slice(&self.p);
        v
    }

    fn with_flat(&self, z: &[f64]) -> PhasePoint {
        let n = self.q.coords.len();
        PhasePoint { q: ChartPoint::new(self.q.chart, z[..n].to_vec()), p: z[n..].to_vec(), e: self.e }
    }
}

pub type PhaseFunction = Arc<dyn Fn(&PhasePoint) -> f64 + Send + Sync>;

/// Named scalar functions on phase space.
#[derive(Clone)]
pub struct FirstIntegralSet {
    pub names: Vec<String>,
    pub functions: Vec<PhaseFunction>,
}

impl FirstIntegralSet {
    pub fn new() -> Self {
        FirstIntegralSet { names: vec![], functions: vec![] }
    }

    pub fn with(mut self, name: &str, f: PhaseFunction) -> Self {
        self.names.push(name.into());
        self.functions.push(f);
        self
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn eval(&self, pp: &PhasePoint) -> Vec<f64> {
        self.functions.iter().map(|f| f(pp)).collect()
    }
}

impl Default for FirstIntegralSet {
    fn default() -> Self {
        Self::new()
    }
}

fn phase_gradient(f: &dyn Fn(&PhasePoint) -> f64, pp: &PhasePoint) -> Result<Vec<f64>> {
    let z = pp.flat();
    let grad = fd::gradient(|x| f(&pp.with_flat(x)), &z, fd::bracket_step);
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Numeric("non-finite gradient in Poisson bracket".into()));
    }
    Ok(grad)
}

/// `{f, g} = ∂_q f·∂_P g − ∂_P f·∂_q g + e F_ab ∂f/∂P_a ∂g/∂P_b`.
///
/// With this orientation Hamilton's equations `q̇ = {q, H}`, `Ṗ = {P, H}` give
/// `∇_u u_a = e F_ab u^b`, the Lorentz force of the flows module.
pub fn poisson_bracket(
    f: &dyn Fn(&PhasePoint) -> f64,
    g: &dyn Fn(&PhasePoint) -> f64,
    pp: &PhasePoint,
    field: &Matrix4<f64>,
) -> Result<f64> {
    let n = pp.q.coords.len();
    let df = phase_gradient(f, pp)?;
    let dg = phase_gradient(g, pp)?;
    let mut s = 0.0;
    for a in 0..n {
        s += df[a] * dg[n + a] - df[n + a] * dg[a];
        for b in 0..n {
            s += pp.e * field[(a, b)] * df[n + a] * dg[n + b];
        }
    }
    Ok(s)
}

#[derive(Clone, Debug, Serialize)]
pub struct InvolutionReport {
    pub names: Vec<String>,
    /// `max |{I_a, I_b}|` over the sample points.
    pub matrix: Vec<Vec<f64>>,
    pub max: f64,
}

pub fn involution_matrix(
    set: &FirstIntegralSet,
    samples: &[PhasePoint],
    field: &(dyn Fn(&[f64; 4]) -> Matrix4<f64> + Sync),
) -> Result<InvolutionReport> {
    use rayon::prelude::*;
    let k = set.len();
    let per_point: Vec<Vec<Vec<f64>>> = samples
        .par_iter()
        .map(|pp| {
            let f = field(&pp.q.as4());
            let mut m = vec![vec![0.0; k]; k];
            for i in 0..k {
                for j in i + 1..k {
                    let b = poisson_bracket(set.functions[i].as_ref(), set.functions[j].as_ref(), pp, &f)?;
                    m[i][j] = b.abs();
                    m[j][i] = b.abs();
                }
            }
            Ok(m)
        })
        .collect::<Result<_>>()?;
    let mut matrix = vec![vec![0.0_f64; k]; k];
    for m in &per_point {
        for i in 0..k {
            for j in 0..k {
                matrix[i][j] = matrix[i][j].max(m[i][j]);
            }
        }
    }
    let max = matrix.iter().flatten().fold(0.0_f64, |a, b| a.max(*b));
    Ok(InvolutionReport { names: set.names.clone(), matrix, max })
}

/// The Taub–NUT integrals in terms of mechanical momenta.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TaubNutIntegrals {
    pub k: f64,
    pub l: f64,
    pub h: f64,
    pub w: f64,
}

fn tn_parts(pp: &PhasePoint, m: f64) -> Result<(f64, f64, f64, f64, [f64; 4])> {
    if pp.q.chart != ChartId::Polar || pp.q.coords.len() != 4 {
        return Err(Error::Invalid("Taub–NUT integrals need a polar chart point".into()));
    }
    let (r, th) = (pp.q.coords[0], pp.q.coords[1]);
    let (s, c) = th.sin_cos();
    if s.abs() < 1e-300 || !(r > 0.0) {
        return Err(Error::SingularCoordinates(format!("Taub–NUT polar chart at r = {r}, θ = {th}")));
    }
    let _ = m;
    // chart order (r, θ, φ, ψ)
    Ok((r, s, c, pp.e, [pp.p[0], pp.p[1], pp.p[2], pp.p[3]]))
}

pub fn taubnut_hamiltonian(pp: &PhasePoint, m: f64) -> Result<f64> {
    let (r, s, c, _, [pr, pt, pf, ps]) = tn_parts(pp, m)?;
    let rm = r + m;
    Ok(0.5
        * (r / rm * pr * pr
            + pt * pt / (r * rm)
            + rm / r * ps * ps
            + (pf - m * c * ps).powi(2) / (r * rm * s * s)))
}

/// `K = P_ψ − e r cosθ`, `L = P_φ − e(mr + ½r²sin²θ)`, `H = ½|P|²` and the
/// quadratic integral `W` (written so that it stays finite at θ = π/2).
pub fn taubnut_integrals(pp: &PhasePoint, m: f64) -> Result<TaubNutIntegrals> {
    let (r, s, c, e, [pr, pt, pf, ps]) = tn_parts(pp, m)?;
    let h = taubnut_hamiltonian(pp, m)?;
    let k = ps - e * r * c;
    let l = pf - e * (m * r + 0.5 * r * r * s * s);
    let s2 = s * s;
    let w = e * c * r * pr * pr - 2.0 * e * s * pr * pt - e * c / r * pt * pt
        - e * c / (r * s2) * (pf * pf + (m * m - r * r * s2) * ps * ps)
        + 2.0 * e * (m + r * s2) / (r * s2) * ps * pf
        - 2.0 * h * ps;
    Ok(TaubNutIntegrals { k, l, h, w })
}

/// `(K, L, H, W)` as a phase-space function set.
pub fn taubnut_set(m: f64) -> FirstIntegralSet {
    let pick = |i: usize| -> PhaseFunction {
        Arc::new(move |pp: &PhasePoint| match taubnut_integrals(pp, m) {
            Ok(t) => [t.k, t.l, t.h, t.w][i],
            Err(_) => f64::NAN,
        })
    };
    FirstIntegralSet::new().with("K", pick(0)).with("L", pick(1)).with("H", pick(2)).with("W", pick(3))
}
