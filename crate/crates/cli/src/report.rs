//! Invariant reports computed from recorded samples only, so that a report
//! built from a re-imported trajectory file is identical to the original one.

use std::collections::BTreeMap;

use cgflow::cp2;
use cgflow::flows::{fit_circle, flat_circle, halfplane_classify, regime_from_ratio, FlowKind, HalfPlaneRegime, Sample, Termination, Trajectory};
use cgflow::invariants::{taubnut_integrals, PhasePoint};
use cgflow::MetricModel;
use serde::{Deserialize, Serialize};

/// A trajectory as written to disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recorded {
    pub model: MetricModel,
    pub flow: FlowKind,
    pub c: Option<[f64; 3]>,
    pub termination: Termination,
    pub invariant_names: Vec<String>,
    pub residual_names: Vec<String>,
    pub samples: Vec<Sample>,
}

impl From<&Trajectory> for Recorded {
    fn from(t: &Trajectory) -> Self {
        Recorded {
            model: t.model.clone(),
            flow: t.kind,
            c: t.c,
            termination: t.termination.clone(),
            invariant_names: t.invariant_names.clone(),
            residual_names: t.residual_names.clone(),
            samples: t.samples.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HalfPlaneSummary {
    pub b: f64,
    pub expected: HalfPlaneRegime,
    pub observed: HalfPlaneRegime,
    pub radius_ratio: f64,
    pub fit_residual: f64,
    /// Horocircle flag: the fitted circle touches the boundary.
    pub horocircle: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlatSummary {
    /// `2π/|a|`.
    pub period: f64,
    /// Largest distance between the samples and the exact circle; the orbit
    /// closes up to this error.
    pub closure_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub model: String,
    pub flow: FlowKind,
    pub s_range: (f64, f64),
    pub samples: usize,
    pub termination: Termination,
    pub max_constraint_residual: f64,
    /// `max |I(s) − I(s₀)|` of every monitored and model-specific integral.
    pub drift: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_plane: Option<HalfPlaneSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flat_circle: Option<FlatSummary>,
    pub drift_tolerance: f64,
    pub within_tolerance: bool,
}

fn drift_of(values: impl Iterator<Item = f64>) -> f64 {
    let mut first = None;
    let mut worst = 0.0_f64;
    for v in values {
        let f = *first.get_or_insert(v);
        worst = worst.max((v - f).abs());
    }
    worst
}

pub fn build(rec: &Recorded, tol: f64) -> Report {
    let chart = rec.model.chart();
    let mut drift = BTreeMap::new();
    for (k, name) in rec.invariant_names.iter().enumerate() {
        drift.insert(name.clone(), drift_of(rec.samples.iter().map(|s| s.invariants[k])));
    }
    match (&rec.model, rec.flow, rec.c) {
        (MetricModel::TaubNut { m }, FlowKind::Lorentz, Some(c)) if c[0] == 0.0 && c[1] == 0.0 => {
            let ints: Vec<_> = rec
                .samples
                .iter()
                .filter_map(|s| {
                    let pp = PhasePoint::from_velocity(&rec.model, &s.state(chart).point, &s.u, c[2]).ok()?;
                    taubnut_integrals(&pp, *m).ok()
                })
                .collect();
            if ints.len() == rec.samples.len() {
                drift.insert("K".into(), drift_of(ints.iter().map(|t| t.k)));
                drift.insert("L".into(), drift_of(ints.iter().map(|t| t.l)));
                drift.insert("H".into(), drift_of(ints.iter().map(|t| t.h)));
                drift.insert("W".into(), drift_of(ints.iter().map(|t| t.w)));
            }
        }
        (MetricModel::Cp2, FlowKind::Conformal, _) => {
            let ints: Vec<_> = rec.samples.iter().filter_map(|s| cp2::cp2_first_integrals(&s.state(chart)).ok()).collect();
            if ints.len() == rec.samples.len() {
                drift.insert("C_Y".into(), drift_of(ints.iter().map(|t| t.0)));
                drift.insert("C_K".into(), drift_of(ints.iter().map(|t| t.1)));
            }
        }
        _ => {}
    }
    let half_plane = match (&rec.model, rec.c) {
        (MetricModel::HalfPlane, Some(c)) => half_plane_summary(rec, c[2]),
        _ => None,
    };
    let flat = match (&rec.model, rec.flow) {
        (MetricModel::Flat4, FlowKind::Conformal) => flat_summary(rec),
        _ => None,
    };
    let max_res = rec.samples.iter().flat_map(|s| s.residuals.iter()).fold(0.0_f64, |m, r| m.max(r.abs()));
    let within = max_res <= tol && drift.values().all(|d| *d <= tol);
    Report {
        model: rec.model.name(),
        flow: rec.flow,
        s_range: (rec.samples.first().map_or(0.0, |s| s.s), rec.samples.last().map_or(0.0, |s| s.s)),
        samples: rec.samples.len(),
        termination: rec.termination.clone(),
        max_constraint_residual: max_res,
        drift,
        half_plane,
        flat_circle: flat,
        drift_tolerance: tol,
        within_tolerance: within,
    }
}

fn half_plane_summary(rec: &Recorded, b: f64) -> Option<HalfPlaneSummary> {
    let expected = halfplane_classify(b).ok()?;
    let pts: Vec<(f64, f64)> =
        rec.samples.iter().filter(|s| s.coords[1] > 1e-3).map(|s| (s.coords[0], s.coords[1])).collect();
    let (center, r, fit_residual) = fit_circle(&pts).ok()?;
    let ratio = r / center.1;
    let observed = regime_from_ratio(ratio, b * b);
    Some(HalfPlaneSummary {
        b,
        horocircle: observed == HalfPlaneRegime::Horocircle,
        expected,
        observed,
        radius_ratio: ratio,
        fit_residual,
    })
}

fn flat_summary(rec: &Recorded) -> Option<FlatSummary> {
    let s0 = rec.samples.first()?;
    let k = s0.a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let closure_error = rec
        .samples
        .iter()
        .map(|s| {
            let x = flat_circle(&s0.coords, &s0.u, &s0.a, s.s - s0.s);
            x.iter().zip(&s.coords).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    Some(FlatSummary { period: if k > 0.0 { std::f64::consts::TAU / k } else { f64::INFINITY }, closure_error })
}
