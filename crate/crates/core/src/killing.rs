//! Killing fields: the residual of Killing's equation, the criterion for Killing
//! trajectories to be conformal geodesics, tri-holomorphy and Gibbons–Hawking
//! moment maps.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fd;
use crate::geometry::{classify_duality, hodge_frame, levi_civita, sd_basis, Duality, GhData, MetricModel};
use crate::invariants::exterior_derivative;
use nalgebra::{Matrix4, Vector4};
use num_dual::{Dual64, DualNum};
use rayon::prelude::*;
use serde::Serialize;

pub type VectorField = Arc<dyn Fn(&[Dual64; 4]) -> [Dual64; 4] + Send + Sync>;

/// A vector field with chart components given as a dual-number function, so
/// that its first derivatives are exact.
#[derive(Clone)]
pub struct KillingField {
    pub name: String,
    pub field: VectorField,
}

impl std::fmt::Debug for KillingField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KillingField").field("name", &self.name).finish()
    }
}

impl KillingField {
    pub fn new(name: &str, field: VectorField) -> Self {
        KillingField { name: name.into(), field }
    }

    /// The coordinate field `∂/∂x^i`.
    pub fn coordinate(name: &str, i: usize) -> Self {
        Self::new(
            name,
            Arc::new(move |_: &[Dual64; 4]| std::array::from_fn(|j| Dual64::from(if i == j { 1.0 } else { 0.0 }))),
        )
    }

    /// Generators of the SU(2) action on a polar chart whose fibre one-form is
    /// `dψ + n cosθ dφ` (n = 1 for the σ₃ of Eguchi–Hanson and CP², n = m for Taub–NUT).
    pub fn su2(i: usize, n: f64) -> Self {
        assert!(i < 3);
        Self::new(
            &format!("R{}", i + 1),
            Arc::new(move |q: &[Dual64; 4]| {
                let (st, ct) = q[1].sin_cos();
                let (sf, cf) = q[2].sin_cos();
                let z = Dual64::from(0.0);
                match i {
                    0 => [z, -sf, -(ct / st * cf), cf / st * n],
                    1 => [z, cf, -(ct / st * sf), sf / st * n],
                    _ => [z, z, Dual64::from(1.0), z],
                }
            }),
        )
    }

    pub fn at(&self, q: &[f64; 4]) -> Vector4<f64> {
        let qd: [Dual64; 4] = std::array::from_fn(|j| Dual64::from(q[j]));
        let v = (self.field)(&qd);
        Vector4::from_fn(|i, _| v[i].re)
    }

    /// `(K, ∂_a K^c)` with `dk[(a, c)] = ∂_a K^c`.
    fn jet(&self, q: &[f64; 4]) -> (Vector4<f64>, Matrix4<f64>) {
        let mut k = Vector4::zeros();
        let mut dk = Matrix4::zeros();
        for a in 0..4 {
            let qd: [Dual64; 4] = std::array::from_fn(|j| Dual64::new(q[j], if j == a { 1.0 } else { 0.0 }));
            let v = (self.field)(&qd);
            for c in 0..4 {
                k[c] = v[c].re;
                dk[(a, c)] = v[c].eps;
            }
        }
        (k, dk)
    }
}

/// `(L_K T)_ab = K^c ∂_c T_ab + T_cb ∂_a K^c + T_ac ∂_b K^c` for a covariant
/// 2-tensor field given pointwise; the tensor derivatives are central differences.
fn lie_two_tensor<F>(t: F, k: &KillingField, q: &[f64; 4]) -> Matrix4<f64>
where
    F: Fn(&[f64; 4]) -> Matrix4<f64>,
{
    let dt = fd::partials(&t, q);
    let t0 = t(q);
    let (kv, dk) = k.jet(q);
    Matrix4::from_fn(|a, b| {
        (0..4).map(|c| kv[c] * dt[c][(a, b)] + t0[(c, b)] * dk[(a, c)] + t0[(a, c)] * dk[(b, c)]).sum()
    })
}

/// `max |L_K g|` over the points, by finite differences of the metric.
pub fn killing_residual(model: &MetricModel, k: &KillingField, points: &[[f64; 4]]) -> Result<f64> {
    for q in points {
        model.local(q)?;
    }
    Ok(points
        .par_iter()
        .map(|q| lie_two_tensor(|x| model.local_unchecked(x).g, k, q).amax())
        .reduce(|| 0.0, f64::max))
}

/// `K♭` as a dual-number one-form.
fn flat<D: DualNum<f64> + Copy>(model: &MetricModel, k: &dyn Fn(&[D; 4]) -> [D; 4], q: &[D; 4]) -> [D; 4] {
    let e = model.coframe(*q);
    let kv = k(q);
    let ek: [D; 4] = std::array::from_fn(|a| (0..4).fold(D::from(0.0), |s, m| s + e[a][m] * kv[m]));
    std::array::from_fn(|m| (0..4).fold(D::from(0.0), |s, a| s + e[a][m] * ek[a]))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KillingCriterion {
    /// `|K|²` at the point.
    pub norm2: f64,
    /// Frame norm of the two-form `d|K|² ∧ W`, `W = ⋆(K♭ ∧ dK♭)`.
    pub value: f64,
    /// Frame norm of the three-form `d|K|² ∧ W ∧ K♭`, the quantity whose
    /// vanishing the argument actually uses.
    pub three_form: f64,
    /// `|W|`; zero means `K` is hypersurface orthogonal.
    pub w_norm: f64,
}

/// Criterion for the trajectories of a non-null Killing field to be conformal
/// geodesics. Derivatives are exact (dual numbers).
pub fn killing_cg_criterion(model: &MetricModel, k: &KillingField, q: &[f64; 4]) -> Result<KillingCriterion> {
    let l = model.local(q)?;
    let kf = k.field.clone();
    let kflat = |x: &[Dual64; 4]| flat(model, &*kf, x);
    let dk = l.form_to_frame(&exterior_derivative(kflat, q));
    let qd: [Dual64; 4] = std::array::from_fn(|j| Dual64::from(q[j]));
    let kb_chart = Vector4::from_fn(|m, _| kflat(&qd)[m].re);
    let kb = l.einv.transpose() * kb_chart;
    let norm2 = kb.norm_squared();
    if norm2 <= 1e-14 {
        return Err(Error::Degenerate(format!("null Killing field {} (|K|² = {norm2:e})", k.name)));
    }
    // d|K|² exactly: |K|² = K♭(K)
    let mut dn = Vector4::zeros();
    for a in 0..4 {
        let qd: [Dual64; 4] = std::array::from_fn(|j| Dual64::new(q[j], if j == a { 1.0 } else { 0.0 }));
        let kv = (k.field)(&qd);
        let kfl = kflat(&qd);
        dn[a] = (0..4).fold(Dual64::from(0.0), |s, m| s + kfl[m] * kv[m]).eps;
    }
    let dn = l.einv.transpose() * dn;
    // (K ∧ dK)_abc and its dual W_d = (1/6) ε_abcd (K∧dK)^abc
    let kdk = |a: usize, b: usize, c: usize| kb[a] * dk[(b, c)] + kb[b] * dk[(c, a)] + kb[c] * dk[(a, b)];
    let mut w = Vector4::zeros();
    for d in 0..4 {
        let mut s = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    s += levi_civita(a, b, c, d) * kdk(a, b, c);
                }
            }
        }
        w[d] = s / 6.0;
    }
    let two = Matrix4::from_fn(|a, b| dn[a] * w[b] - dn[b] * w[a]);
    let mut three = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                let v = two[(a, b)] * kb[c] + two[(b, c)] * kb[a] + two[(c, a)] * kb[b];
                three += v * v;
            }
        }
    }
    Ok(KillingCriterion {
        norm2,
        value: (0.5 * two.norm_squared()).sqrt(),
        three_form: (three / 6.0).sqrt(),
        w_norm: w.norm(),
    })
}

/// `max_i |L_K Ωⁱ|` over the points (finite differences of the chart components of Ωⁱ).
pub fn triholomorphic_residual(model: &MetricModel, k: &KillingField, points: &[[f64; 4]]) -> Result<f64> {
    if !model.is_hyperkahler() {
        return Err(Error::Unsupported { op: "triholomorphic_residual", model: model.name() });
    }
    for q in points {
        model.local(q)?;
    }
    let basis = sd_basis();
    Ok(points
        .par_iter()
        .map(|q| {
            (0..3)
                .map(|i| {
                    let om = |x: &[f64; 4]| {
                        let e = model.coframe_at(x);
                        e.transpose() * basis[i] * e
                    };
                    let lie = lie_two_tensor(om, k, q);
                    model.local_unchecked(q).form_to_frame(&lie).amax()
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max))
}

/// The triholomorphic field of a Gibbons–Hawking type model and the flat
/// coordinates `xⁱ` it generates moment maps for.
fn gh_structure<D: DualNum<f64> + Copy>(model: &MetricModel, q: &[D; 4]) -> Result<(usize, [D; 3])> {
    match model {
        MetricModel::Flat4 | MetricModel::GibbonsHawking(_) => Ok((3, [q[0], q[1], q[2]])),
        MetricModel::TaubNut { .. } => {
            let (st, ct) = q[1].sin_cos();
            let (sf, cf) = q[2].sin_cos();
            Ok((3, [q[0] * st * cf, q[0] * st * sf, q[0] * ct]))
        }
        _ => Err(Error::Unsupported { op: "moment maps", model: model.name() }),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentMapReport {
    /// Least-squares λᵢ in `K⌟Ωⁱ = λᵢ dxⁱ`.
    pub scale: [f64; 3],
    pub residual: f64,
}

/// `max |K⌟Ωⁱ − λᵢ dxⁱ|` for the fibre field (∂_τ, or ∂_ψ on the polar Taub–NUT chart).
pub fn moment_map_residual(model: &MetricModel, points: &[[f64; 4]]) -> Result<MomentMapReport> {
    let basis = sd_basis();
    let mut pairs: Vec<[(Vector4<f64>, Vector4<f64>); 3]> = Vec::with_capacity(points.len());
    for q in points {
        let l = model.local(q)?;
        let (kidx, _) = gh_structure::<f64>(model, q)?;
        let mut kv = Vector4::zeros();
        kv[kidx] = 1.0;
        let mut dx = [Vector4::zeros(); 3];
        for a in 0..4 {
            let qd: [Dual64; 4] = std::array::from_fn(|j| Dual64::new(q[j], if j == a { 1.0 } else { 0.0 }));
            let (_, x) = gh_structure(model, &qd)?;
            for i in 0..3 {
                dx[i][a] = x[i].eps;
            }
        }
        let e = l.e;
        pairs.push(std::array::from_fn(|i| {
            let om = e.transpose() * basis[i] * e;
            // (K⌟Ω)_b = K^a Ω_ab
            (om.transpose() * kv, dx[i])
        }));
    }
    let mut scale = [0.0; 3];
    let mut residual = 0.0_f64;
    for i in 0..3 {
        let num: f64 = pairs.iter().map(|p| p[i].0.dot(&p[i].1)).sum();
        let den: f64 = pairs.iter().map(|p| p[i].1.norm_squared()).sum();
        scale[i] = num / den;
        for p in &pairs {
            residual = residual.max((p[i].0 - p[i].1 * scale[i]).amax());
        }
    }
    Ok(MomentMapReport { scale, residual })
}

/// Duality type of `dK♭` at a point.
pub fn derivative_duality(model: &MetricModel, k: &KillingField, q: &[f64; 4], tol: f64) -> Result<Duality> {
    let l = model.local(q)?;
    let kf = k.field.clone();
    let dk = exterior_derivative(|x: &[Dual64; 4]| flat(model, &*kf, x), q);
    Ok(classify_duality(&l.form_to_frame(&dk), tol))
}

/// Anti-self-dual part of `dK♭` relative to its size, `|dK + ⋆dK| / |dK|` (frame norms).
pub fn self_dual_fraction(model: &MetricModel, k: &KillingField, q: &[f64; 4]) -> Result<f64> {
    let l = model.local(q)?;
    let kf = k.field.clone();
    let dk = l.form_to_frame(&exterior_derivative(|x: &[Dual64; 4]| flat(model, &*kf, x), q));
    Ok((dk + hodge_frame(&dk)).norm() / dk.norm().max(f64::MIN_POSITIVE))
}

/// `max |dω − ⋆₃dV|` over Cartesian points `(x, y, z)`.
pub fn monopole_residual(gh: &GhData, points: &[[f64; 3]]) -> f64 {
    points
        .iter()
        .map(|p| {
            let mut dv = [0.0; 3];
            let mut dom = [[0.0; 3]; 3]; // dom[k][j] = ∂_k ω_j
            for k in 0..3 {
                let x: [Dual64; 3] = std::array::from_fn(|j| Dual64::new(p[j], if j == k { 1.0 } else { 0.0 }));
                dv[k] = gh.potential(x[0], x[1], x[2]).eps;
                let om = gh.omega(x[0], x[1], x[2]);
                for j in 0..3 {
                    dom[k][j] = om[j].eps;
                }
            }
            // (dω)_{yz} = ∂_y ω_z − ∂_z ω_y ↔ (⋆dV)_{yz} = ∂_x V, cyclically
            let curl = [dom[1][2] - dom[2][1], dom[2][0] - dom[0][2], dom[0][1] - dom[1][0]];
            (0..3).map(|i| (curl[i] - dv[i]).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Killing, tri-holomorphy, moment-map and monopole checks for a Gibbons–Hawking
/// type model, as reported by the command-line `gh-check`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GhReport {
    pub model: String,
    pub killing: f64,
    pub triholomorphic: f64,
    pub moment_map: MomentMapReport,
    pub monopole: Option<f64>,
    /// Worst relative self-dual part of dK♭ (zero for an anti-self-dual derivative).
    pub self_dual_part: f64,
}

pub fn gh_check(model: &MetricModel, points: &[[f64; 4]]) -> Result<GhReport> {
    let (kidx, _) = gh_structure::<f64>(model, &[1.0, 1.0, 1.0, 0.0])?;
    let k = KillingField::coordinate("fibre", kidx);
    let monopole = match model {
        MetricModel::GibbonsHawking(gh) => Some(monopole_residual(gh, &points.iter().map(|q| [q[0], q[1], q[2]]).collect::<Vec<_>>())),
        MetricModel::TaubNut { m } => {
            let gh = GhData::taub_nut(*m);
            let cart: Vec<[f64; 3]> = points
                .iter()
                .map(|q| {
                    let (st, ct) = q[1].sin_cos();
                    [q[0] * st * q[2].cos(), q[0] * st * q[2].sin(), q[0] * ct]
                })
                .collect();
            Some(monopole_residual(&gh, &cart))
        }
        _ => None,
    };
    let mut sd = 0.0_f64;
    for q in points {
        if !matches!(model, MetricModel::Flat4) {
            sd = sd.max(self_dual_fraction(model, &k, q)?);
        }
    }
    Ok(GhReport {
        model: model.name(),
        killing: killing_residual(model, &k, points)?,
        triholomorphic: triholomorphic_residual(model, &k, points)?,
        moment_map: moment_map_residual(model, points)?,
        monopole,
        self_dual_part: sd,
    })
}
