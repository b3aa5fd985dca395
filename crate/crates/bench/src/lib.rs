//! Fixed initial data shared by the benchmarks.

use cgflow::flows::CGState;
use cgflow::geometry::{ChartPoint, MetricModel};
use nalgebra::Vector4;

/// A conformal state on `model` at `q`, with frame velocity `ub` and acceleration `ab`.
pub fn state(model: &MetricModel, q: [f64; 4], ub: [f64; 4], ab: [f64; 4]) -> CGState {
    let l = model.local(&q).expect("fixture point lies in the chart");
    CGState {
        point: ChartPoint::new(model.chart(), q.to_vec()),
        u: l.from_frame(&Vector4::from(ub)).as_slice().to_vec(),
        a: l.from_frame(&Vector4::from(ab)).as_slice().to_vec(),
    }
}

pub fn fixtures() -> Vec<(&'static str, MetricModel, CGState)> {
    let q = [2.5, 1.2, 0.3, 0.4];
    let (ub, ab) = ([0.6, 0.0, 0.48, 0.64], [0.0, 0.7, 0.0, 0.0]);
    let models = [
        ("taub_nut", MetricModel::TaubNut { m: 1.0 }),
        ("eguchi_hanson", MetricModel::EguchiHanson { alpha: 1.0 }),
        ("cp2", MetricModel::Cp2),
    ];
    models.into_iter().map(|(name, m)| {
        let s = state(&m, q, ub, ab);
        (name, m, s)
    }).collect()
}
