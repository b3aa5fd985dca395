#![allow(dead_code)]

use cgflow::flows::{CGState, Initial, LorentzState};
use cgflow::geometry::{ChartPoint, MetricModel};
use nalgebra::Vector4;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit4(rng: &mut impl Rng) -> Vector4<f64> {
    loop {
        let v = Vector4::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n < 1.0 {
            return v / n;
        }
    }
}

/// A frame vector orthogonal to `u` with the given length.
pub fn orthogonal4(rng: &mut impl Rng, u: &Vector4<f64>, len: f64) -> Vector4<f64> {
    loop {
        let w = unit4(rng);
        let p = w - u * u.dot(&w);
        if p.norm() > 0.2 {
            return p * (len / p.norm());
        }
    }
}

pub fn point(model: &MetricModel, q: [f64; 4]) -> ChartPoint {
    ChartPoint::new(model.chart(), q.to_vec())
}

/// Conformal initial data from frame components.
pub fn conformal(model: &MetricModel, q: [f64; 4], ub: Vector4<f64>, ab: Vector4<f64>) -> CGState {
    let l = model.local(&q).unwrap();
    CGState {
        point: point(model, q),
        u: l.from_frame(&ub).as_slice().to_vec(),
        a: l.from_frame(&ab).as_slice().to_vec(),
    }
}

pub fn lorentz(model: &MetricModel, q: [f64; 4], ub: Vector4<f64>, c: [f64; 3]) -> Initial {
    let l = model.local(&q).unwrap();
    Initial::Lorentz(LorentzState { point: point(model, q), u: l.from_frame(&ub).as_slice().to_vec(), c })
}

/// A random polar chart point in the box r ∈ [r0, r1], θ ∈ [0.4, π − 0.4].
pub fn polar_point(rng: &mut impl Rng, r0: f64, r1: f64) -> [f64; 4] {
    [
        rng.random_range(r0..r1),
        rng.random_range(0.4..std::f64::consts::PI - 0.4),
        rng.random_range(0.0..std::f64::consts::TAU),
        rng.random_range(0.0..std::f64::consts::TAU),
    ]
}

/// Sampling box used for random initial data on each model.
pub fn model_point(model: &MetricModel, rng: &mut impl Rng) -> [f64; 4] {
    match model {
        MetricModel::Flat4 => std::array::from_fn(|_| rng.random_range(-2.0..2.0)),
        MetricModel::TaubNut { .. } => polar_point_in(rng, 2.0, 4.0, 0.5),
        MetricModel::EguchiHanson { alpha } => polar_point_in(rng, 2.0 * alpha, 4.0 * alpha, 0.5),
        MetricModel::Cp2 => polar_point_in(rng, 0.5, 2.0, 0.5),
        MetricModel::GibbonsHawking(_) => loop {
            let p: [f64; 4] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
            if p[0].hypot(p[1]) > 0.5 {
                return p;
            }
        },
        MetricModel::HalfPlane => unreachable!("two-dimensional"),
    }
}

fn polar_point_in(rng: &mut impl Rng, r0: f64, r1: f64, margin: f64) -> [f64; 4] {
    [
        rng.random_range(r0..r1),
        rng.random_range(margin..std::f64::consts::PI - margin),
        rng.random_range(0.0..std::f64::consts::TAU),
        rng.random_range(0.0..std::f64::consts::TAU),
    ]
}

/// Random unit-speed conformal initial data with |a| ∈ [0.2, 1.5].
pub fn random_conformal(model: &MetricModel, rng: &mut impl Rng) -> CGState {
    let q = model_point(model, rng);
    let u = unit4(rng);
    let len = rng.random_range(0.2..1.5);
    let a = orthogonal4(rng, &u, len);
    conformal(model, q, u, a)
}

/// Random Lorentz data with |c| ∈ [0.2, 1.5].
pub fn random_lorentz(model: &MetricModel, rng: &mut impl Rng) -> Initial {
    let q = model_point(model, rng);
    let u = unit4(rng);
    let dir = unit4(rng);
    let len = rng.random_range(0.2..1.5);
    let n = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
    let c = [dir[0] / n * len, dir[1] / n * len, dir[2] / n * len];
    lorentz(model, q, u, c)
}
