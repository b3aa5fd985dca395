//! Central finite-difference oracles: Christoffel symbols from the metric,
//! exterior and covariant derivatives, curvature. Used only to cross-check the
//! exact (dual-number) geometry and in residual reports.

use crate::geometry::{Gamma4, MetricModel};
use nalgebra::Matrix4;

/// Step for a first derivative at coordinate value `x`.
pub fn step(x: f64) -> f64 {
    1e-5 * x.abs().max(1.0)
}

/// Optimal step for first derivatives of smooth functions: ε^{1/3}·max(1,|x|).
pub fn bracket_step(x: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(1.0)
}

/// ∂_k of a matrix-valued function of four coordinates.
pub fn partials<F>(f: F, q: &[f64; 4]) -> [Matrix4<f64>; 4]
where
    F: Fn(&[f64; 4]) -> Matrix4<f64>,
{
    std::array::from_fn(|k| {
        let h = step(q[k]);
        let mut qp = *q;
        let mut qm = *q;
        qp[k] += h;
        qm[k] -= h;
        (f(&qp) - f(&qm)) / (2.0 * h)
    })
}

/// Gradient of a scalar function with the given step rule.
pub fn gradient<F>(f: F, x: &[f64], rule: fn(f64) -> f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|k| {
            let h = rule(x[k]);
            xp[k] = x[k] + h;
            let fp = f(&xp);
            xp[k] = x[k] - h;
            let fm = f(&xp);
            xp[k] = x[k];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

pub fn metric(model: &MetricModel, q: &[f64; 4]) -> Matrix4<f64> {
    let e = model.coframe_at(q);
    e.transpose() * e
}

/// Christoffel symbols from central differences of the metric.
pub fn christoffel(model: &MetricModel, q: &[f64; 4]) -> Gamma4 {
    let g = metric(model, q);
    let ginv = g.try_inverse().expect("metric is invertible");
    let dg = partials(|x| metric(model, x), q);
    let mut out = [[[0.0; 4]; 4]; 4];
    for m in 0..4 {
        for n in 0..4 {
            for l in 0..4 {
                let mut s = 0.0;
                for k in 0..4 {
                    s += ginv[(m, k)] * (dg[n][(k, l)] + dg[l][(k, n)] - dg[k][(n, l)]);
                }
                out[m][n][l] = 0.5 * s;
            }
        }
    }
    out
}

/// `(dA)_μν = ∂_μ A_ν − ∂_ν A_μ` for a one-form given by chart components.
pub fn d_one_form<F>(a: F, q: &[f64; 4]) -> Matrix4<f64>
where
    F: Fn(&[f64; 4]) -> [f64; 4],
{
    let da: [[f64; 4]; 4] = std::array::from_fn(|k| {
        let h = step(q[k]);
        let mut qp = *q;
        let mut qm = *q;
        qp[k] += h;
        qm[k] -= h;
        let (ap, am) = (a(&qp), a(&qm));
        std::array::from_fn(|m| (ap[m] - am[m]) / (2.0 * h))
    });
    Matrix4::from_fn(|m, n| da[m][n] - da[n][m])
}

/// Components `(dF)_{λμν}` of the exterior derivative of a two-form.
pub fn d_two_form<F>(f: F, q: &[f64; 4]) -> [[[f64; 4]; 4]; 4]
where
    F: Fn(&[f64; 4]) -> Matrix4<f64>,
{
    let df = partials(f, q);
    let mut out = [[[0.0; 4]; 4]; 4];
    for l in 0..4 {
        for m in 0..4 {
            for n in 0..4 {
                out[l][m][n] = df[l][(m, n)] + df[m][(n, l)] + df[n][(l, m)];
            }
        }
    }
    out
}

/// `∇_λ F_μν` for a two-form field, using the exact Christoffels of `model`.
pub fn covariant_two_form<F>(model: &MetricModel, f: F, q: &[f64; 4]) -> [[[f64; 4]; 4]; 4]
where
    F: Fn(&[f64; 4]) -> Matrix4<f64>,
{
    let f0 = f(q);
    let df = partials(&f, q);
    let gam = model.local_unchecked(q).gamma;
    let mut out = [[[0.0; 4]; 4]; 4];
    for l in 0..4 {
        for m in 0..4 {
            for n in 0..4 {
                let mut s = df[l][(m, n)];
                for d in 0..4 {
                    s -= gam[d][l][m] * f0[(d, n)] + gam[d][l][n] * f0[(m, d)];
                }
                out[l][m][n] = s;
            }
        }
    }
    out
}

/// `∇_μ A_ν` for a one-form field.
pub fn covariant_one_form<F>(model: &MetricModel, a: F, q: &[f64; 4]) -> Matrix4<f64>
where
    F: Fn(&[f64; 4]) -> [f64; 4],
{
    let a0 = a(q);
    let gam = model.local_unchecked(q).gamma;
    let mut out = Matrix4::zeros();
    for k in 0..4 {
        let h = step(q[k]);
        let mut qp = *q;
        let mut qm = *q;
        qp[k] += h;
        qm[k] -= h;
        let (ap, am) = (a(&qp), a(&qm));
        for n in 0..4 {
            let mut s = (ap[n] - am[n]) / (2.0 * h);
            for d in 0..4 {
                s -= gam[d][k][n] * a0[d];
            }
            out[(k, n)] = s;
        }
    }
    out
}

/// Riemann tensor `R^a_{bcd}` from differentiated exact Christoffels,
/// with `[∇_c, ∇_d] v^a = R^a_{bcd} v^b`.
pub fn riemann(model: &MetricModel, q: &[f64; 4]) -> [[[[f64; 4]; 4]; 4]; 4] {
    let g0 = model.local_unchecked(q).gamma;
    let dg: [Gamma4; 4] = std::array::from_fn(|k| {
        let h = step(q[k]);
        let mut qp = *q;
        let mut qm = *q;
        qp[k] += h;
        qm[k] -= h;
        let (gp, gm) = (model.local_unchecked(&qp).gamma, model.local_unchecked(&qm).gamma);
        let mut d = [[[0.0; 4]; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    d[a][b][c] = (gp[a][b][c] - gm[a][b][c]) / (2.0 * h);
                }
            }
        }
        d
    });
    let mut r = [[[[0.0; 4]; 4]; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let mut s = dg[c][a][d][b] - dg[d][a][c][b];
                    for e in 0..4 {
                        s += g0[a][c][e] * g0[e][d][b] - g0[a][d][e] * g0[e][c][b];
                    }
                    r[a][b][c][d] = s;
                }
            }
        }
    }
    r
}

/// Ricci tensor `R_bd = R^a_{bad}`.
pub fn ricci(model: &MetricModel, q: &[f64; 4]) -> Matrix4<f64> {
    let r = riemann(model, q);
    Matrix4::from_fn(|b, d| (0..4).map(|a| r[a][b][a][d]).sum())
}
